//! Circuit description: ordered optical elements over indexed modes, plus the
//! Fock-state sources injected before the first element.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Ladder, Occupation, SparseState};

/// One optical element. The JSON form is externally tagged, e.g.
/// `{"bs": {"m1": 0, "m2": 1, "t": 0.7}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Element {
    /// Beam splitter with real transmission `t` and `i·r` on reflection.
    #[serde(rename = "bs")]
    BeamSplitter { m1: usize, m2: usize, t: f64 },
    /// `|n⟩ → e^{i n phi}|n⟩` on mode `m`.
    #[serde(rename = "ps")]
    PhaseShift { m: usize, phi: f64 },
    /// Photon loss with survival probability `eta`.
    #[serde(rename = "loss")]
    Loss { m: usize, eta: f64 },
    /// Photon-number-diagonal conditional map `|n⟩ → coeffs[n]|n⟩`, terms with
    /// `n >= coeffs.len()` are dropped. Models a heralded nonlinear sign gate
    /// whose ancilla modes have already been measured.
    #[serde(rename = "ns")]
    NumberFilter { m: usize, coeffs: Vec<C64> },
}

impl Element {
    pub fn name(&self) -> &'static str {
        match self {
            Element::BeamSplitter { .. } => "bs",
            Element::PhaseShift { .. } => "ps",
            Element::Loss { .. } => "loss",
            Element::NumberFilter { .. } => "ns",
        }
    }

    pub fn modes(&self) -> Vec<usize> {
        match self {
            Element::BeamSplitter { m1, m2, .. } => vec![*m1, *m2],
            Element::PhaseShift { m, .. } | Element::Loss { m, .. } | Element::NumberFilter { m, .. } => {
                vec![*m]
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub m: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub modes: usize,
    #[serde(default)]
    pub sources: Vec<Source>,
    #[serde(default)]
    pub elements: Vec<Element>,
}

impl Circuit {
    pub fn new(modes: usize) -> Self {
        Self {
            modes,
            sources: Vec::new(),
            elements: Vec::new(),
        }
    }

    pub fn source(&mut self, m: usize, n: usize) -> &mut Self {
        self.sources.push(Source { m, n });
        self
    }

    pub fn bs(&mut self, m1: usize, m2: usize, t: f64) -> &mut Self {
        self.elements.push(Element::BeamSplitter { m1, m2, t });
        self
    }

    /// Inverse of `bs(m1, m2, t)`, realized as a π phase conjugation of the
    /// second mode around a standard splitter.
    pub fn bs_inverse(&mut self, m1: usize, m2: usize, t: f64) -> &mut Self {
        self.ps(m2, std::f64::consts::PI)
            .bs(m1, m2, t)
            .ps(m2, std::f64::consts::PI)
    }

    pub fn ps(&mut self, m: usize, phi: f64) -> &mut Self {
        self.elements.push(Element::PhaseShift { m, phi });
        self
    }

    pub fn loss(&mut self, m: usize, eta: f64) -> &mut Self {
        self.elements.push(Element::Loss { m, eta });
        self
    }

    pub fn number_filter(&mut self, m: usize, coeffs: Vec<C64>) -> &mut Self {
        self.elements.push(Element::NumberFilter { m, coeffs });
        self
    }

    pub fn extend(&mut self, elements: impl IntoIterator<Item = Element>) -> &mut Self {
        self.elements.extend(elements);
        self
    }

    pub fn source_photons(&self) -> usize {
        self.sources.iter().map(|s| s.n).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let check = |mode: usize| {
            if mode >= self.modes {
                Err(Error::InvalidMode {
                    mode,
                    modes: self.modes,
                })
            } else {
                Ok(())
            }
        };
        for s in &self.sources {
            check(s.m)?;
        }
        for e in &self.elements {
            for m in e.modes() {
                check(m)?;
            }
            match e {
                Element::BeamSplitter { m1, m2, t } => {
                    if m1 == m2 {
                        return Err(Error::SameMode(*m1));
                    }
                    if !(0.0..=1.0).contains(t) {
                        return Err(Error::OutOfRange {
                            name: "t",
                            value: *t,
                            range: "[0, 1]",
                        });
                    }
                }
                Element::Loss { eta, .. } if !(0.0..=1.0).contains(eta) => {
                    return Err(Error::OutOfRange {
                        name: "eta",
                        value: *eta,
                        range: "[0, 1]",
                    });
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Add the source photons to `input`. Source modes must be vacuum.
    pub fn inject_sources(&self, input: &SparseState) -> Result<SparseState> {
        if input.modes() != self.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                got: input.modes(),
            });
        }
        for s in &self.sources {
            if input.terms().any(|(occ, _)| occ.get(s.m) != 0) {
                return Err(Error::OccupiedSource(s.m));
            }
        }
        let mut state = input.clone();
        for s in &self.sources {
            for _ in 0..s.n {
                state = state.ladder(s.m, Ladder::Raise)?;
            }
            let norm = (1..=s.n).map(|k| k as f64).product::<f64>().sqrt();
            state = state.scaled(C64::new(1.0 / norm, 0.0));
        }
        Ok(state)
    }

    /// Vacuum input on every mode, with `cutoff`.
    pub fn vacuum_input(&self, cutoff: usize) -> SparseState {
        SparseState::vacuum(self.modes, cutoff)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Circuit = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

/// Occupation helper used by gate layouts.
pub fn occupation_from(modes: usize, set: &[(usize, usize)]) -> Occupation {
    let mut occ = Occupation::vacuum(modes);
    for &(m, n) in set {
        occ.set(m, n);
    }
    occ
}
