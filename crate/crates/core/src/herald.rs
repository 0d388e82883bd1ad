//! Running circuits and post-selecting on detector patterns.
//!
//! Detector inefficiency is modelled as a loss channel in front of an ideal
//! detector. Every distinct pattern of lost photons (and of dark counts, when
//! enabled) is an orthogonal branch of the accepted output, so a lossy herald
//! yields a weighted set of pure states rather than a density matrix.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Element};
use crate::elements::{beam_splitter, loss_channel, number_filter, phase_shift, BeamSplitterParams};
use crate::error::{Error, Result};
use crate::fock::{Occupation, SparseState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// Photon-number resolving.
    Pnr,
    /// Click / no-click. An expected count `n >= 1` means "click".
    Threshold,
}

fn default_eta() -> f64 {
    1.0
}

/// Acceptance test on the true count, its weight and whether a dark count fired.
type Reading<'a> = (Box<dyn Fn(usize) -> bool + 'a>, f64, bool);

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub m: usize,
    pub n: usize,
    pub kind: DetectorKind,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Probability of one spurious count within the coincidence window.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub dark: f64,
}

impl Detector {
    pub fn pnr(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            kind: DetectorKind::Pnr,
            eta: 1.0,
            dark: 0.0,
        }
    }

    pub fn threshold(m: usize, click: bool) -> Self {
        Self {
            m,
            n: usize::from(click),
            kind: DetectorKind::Threshold,
            eta: 1.0,
            dark: 0.0,
        }
    }

    fn accepts(&self, count: usize) -> bool {
        match self.kind {
            DetectorKind::Pnr => count == self.n,
            DetectorKind::Threshold => (count >= 1) == (self.n >= 1),
        }
    }

    /// `(accepted true count, probability weight, dark count fired)` options.
    fn readings(&self) -> Vec<Reading<'_>> {
        let mut out: Vec<Reading<'_>> = Vec::new();
        out.push((Box::new(move |c| self.accepts(c)), 1.0 - self.dark, false));
        if self.dark > 0.0 {
            out.push((Box::new(move |c| self.accepts(c + 1)), self.dark, true));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeraldSpec {
    pub detectors: Vec<Detector>,
    pub outputs: Vec<usize>,
}

impl HeraldSpec {
    pub fn validate(&self, modes: usize) -> Result<()> {
        let mut used = vec![false; modes];
        for m in self
            .detectors
            .iter()
            .map(|d| d.m)
            .chain(self.outputs.iter().copied())
        {
            if m >= modes {
                return Err(Error::InvalidMode { mode: m, modes });
            }
            if used[m] {
                return Err(Error::InvalidHerald(format!("mode {m} used twice")));
            }
            used[m] = true;
        }
        for d in &self.detectors {
            if !(0.0..=1.0).contains(&d.eta) {
                return Err(Error::OutOfRange {
                    name: "eta",
                    value: d.eta,
                    range: "[0, 1]",
                });
            }
            if !(0.0..=1.0).contains(&d.dark) {
                return Err(Error::OutOfRange {
                    name: "dark",
                    value: d.dark,
                    range: "[0, 1]",
                });
            }
            if d.kind == DetectorKind::Threshold && d.n > 1 {
                return Err(Error::InvalidHerald(format!(
                    "threshold detector on mode {} cannot expect {} photons",
                    d.m, d.n
                )));
            }
        }
        Ok(())
    }

    /// Same detectors, every efficiency set to `eta`.
    pub fn with_eta(&self, eta: f64) -> Self {
        let mut out = self.clone();
        for d in &mut out.detectors {
            d.eta = eta;
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Unnormalized post-selected state and its acceptance probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalResult {
    pub state: SparseState,
    pub prob: f64,
}

impl ConditionalResult {
    fn new(state: SparseState) -> Self {
        let prob = state.norm_sqr();
        Self { state, prob }
    }
}

/// One accepted branch of a lossy herald, unnormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct HeraldedBranch {
    /// Photons lost at each loss site: detectors first in spec order, then
    /// in-circuit loss elements in circuit order.
    pub lost: Vec<usize>,
    /// Dark-count firing per detector.
    pub dark: Vec<bool>,
    pub result: ConditionalResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixedBranch {
    pub weight: f64,
    pub state: SparseState,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixedResult {
    pub branches: Vec<MixedBranch>,
    pub herald_prob: f64,
}

fn apply_element(state: &SparseState, e: &Element) -> Result<SparseState> {
    match e {
        Element::BeamSplitter { m1, m2, t } => beam_splitter(state, *m1, *m2, BeamSplitterParams::new(*t)?),
        Element::PhaseShift { m, phi } => phase_shift(state, *m, *phi),
        Element::NumberFilter { m, coeffs } => number_filter(state, *m, coeffs),
        Element::Loss { .. } => Err(Error::LossInPureRun),
    }
}

/// Inject sources then apply every element in order.
pub fn run(circuit: &Circuit, input: &SparseState) -> Result<SparseState> {
    circuit.validate()?;
    let mut state = circuit.inject_sources(input)?;
    for e in &circuit.elements {
        state = apply_element(&state, e)?;
    }
    Ok(state)
}

/// Run a circuit that may contain loss elements, keeping one pure branch per
/// pattern of lost photons.
fn run_branched(circuit: &Circuit, input: &SparseState) -> Result<Vec<(Vec<usize>, SparseState)>> {
    circuit.validate()?;
    let mut branches = vec![(Vec::new(), circuit.inject_sources(input)?)];
    for e in &circuit.elements {
        branches = match e {
            Element::Loss { m, eta } => {
                let mut next = Vec::new();
                for (lost, state) in &branches {
                    for b in loss_channel(state, *m, *eta)? {
                        let mut l = lost.clone();
                        l.push(b.lost);
                        next.push((l, b.state));
                    }
                }
                next
            }
            other => branches
                .into_iter()
                .map(|(l, s)| apply_element(&s, other).map(|s| (l, s)))
                .collect::<Result<_>>()?,
        };
    }
    Ok(branches)
}

/// Keep the terms whose detector modes show exactly the expected counts and
/// drop the detector modes.
pub fn herald_ideal(state: &SparseState, spec: &HeraldSpec) -> Result<ConditionalResult> {
    spec.validate(state.modes())?;
    let mut terms: BTreeMap<Occupation, C64> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        if spec.detectors.iter().all(|d| d.accepts(occ.get(d.m))) {
            *terms.entry(occ.select(&spec.outputs)).or_default() += amp;
        }
    }
    Ok(ConditionalResult::new(SparseState::from_map(
        spec.outputs.len(),
        state.cutoff(),
        terms,
    )))
}

/// Every accepted branch of a lossy, possibly noisy herald.
pub fn herald_branches(
    circuit: &Circuit,
    input: &SparseState,
    spec: &HeraldSpec,
) -> Result<Vec<HeraldedBranch>> {
    spec.validate(circuit.modes)?;
    let mut out = Vec::new();
    for (circuit_lost, state) in run_branched(circuit, input)? {
        // Loss in front of each detector.
        let mut lossy = vec![(Vec::new(), state)];
        for d in &spec.detectors {
            let mut next = Vec::new();
            for (lost, s) in &lossy {
                for b in loss_channel(s, d.m, d.eta)? {
                    let mut l: Vec<usize> = lost.clone();
                    l.push(b.lost);
                    next.push((l, b.state));
                }
            }
            lossy = next;
        }
        for (det_lost, s) in lossy {
            let mut lost = det_lost;
            lost.extend(&circuit_lost);
            // Enumerate dark-count patterns; each detector contributes one or two options.
            let options: Vec<_> = spec.detectors.iter().map(|d| d.readings()).collect();
            let mut choice = vec![0usize; options.len()];
            loop {
                let weight: f64 = choice.iter().zip(&options).map(|(&c, o)| o[c].1).product();
                if weight > 0.0 {
                    let mut terms: BTreeMap<Occupation, C64> = BTreeMap::new();
                    for (occ, amp) in s.terms() {
                        let ok = spec
                            .detectors
                            .iter()
                            .zip(choice.iter().zip(&options))
                            .all(|(d, (&c, o))| (o[c].0)(occ.get(d.m)));
                        if ok {
                            *terms.entry(occ.select(&spec.outputs)).or_default() += amp;
                        }
                    }
                    let state = SparseState::from_map(spec.outputs.len(), s.cutoff(), terms)
                        .scaled(C64::new(weight.sqrt(), 0.0));
                    if !state.is_empty() {
                        out.push(HeraldedBranch {
                            lost: lost.clone(),
                            dark: choice.iter().zip(&options).map(|(&c, o)| o[c].2).collect(),
                            result: ConditionalResult::new(state),
                        });
                    }
                }
                // Odometer over the option lists.
                let mut i = 0;
                loop {
                    if i == choice.len() {
                        break;
                    }
                    choice[i] += 1;
                    if choice[i] < options[i].len() {
                        break;
                    }
                    choice[i] = 0;
                    i += 1;
                }
                if i == choice.len() {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Heralding with inefficient detectors; branches are renormalized within the
/// accepted set.
pub fn herald_lossy(circuit: &Circuit, input: &SparseState, spec: &HeraldSpec) -> Result<MixedResult> {
    let branches = herald_branches(circuit, input, spec)?;
    Ok(mix(branches.iter().map(|b| &b.result.state)))
}

/// Turn unnormalized orthogonal branches into a weighted mixture.
pub fn mix<'a>(states: impl IntoIterator<Item = &'a SparseState>) -> MixedResult {
    let states: Vec<&SparseState> = states.into_iter().filter(|s| !s.is_empty()).collect();
    let herald_prob: f64 = states.iter().map(|s| s.norm_sqr()).sum();
    let branches = states
        .into_iter()
        .map(|s| MixedBranch {
            weight: s.norm_sqr() / herald_prob,
            state: s.normalized(),
        })
        .collect();
    MixedResult {
        branches,
        herald_prob,
    }
}

/// `Σ_k w_k |⟨target|branch_k⟩|²`.
pub fn fidelity_mixed(result: &MixedResult, target: &SparseState) -> Result<f64> {
    let mut f = 0.0;
    for b in &result.branches {
        f += b.weight * target.inner(&b.state)?.norm_sqr();
    }
    Ok(f.clamp(0.0, 1.0))
}
