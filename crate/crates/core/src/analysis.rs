//! Success probabilities, input averages, parameter sweeps and detector
//! efficiency curves for the destructive and two-NS controlled-phase gates.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{Occupation, QubitAmplitudes, SparseState};
use crate::gates::{
    build_cphase_destructive, build_cphase_klm, build_npath, destructive_logical, destructive_target,
    effective_success, ghz_dual_rail, klm_logical, klm_target, solve_constraints, verify_destructive,
    verify_klm, AncillaCostModel, DestructiveGateParams, GateCircuit, NsEmbedding, NsGateParams,
    ACTION_TOLERANCE,
};
use crate::herald::herald_branches;
use crate::optimize::{find_destructive_params, find_ns_params, r2r3_on_curve, OptimizerConfig};
use crate::rng::rng_for;

/// Which controlled-phase construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CzGate {
    Destructive(DestructiveGateParams),
    Klm(NsGateParams),
}

impl CzGate {
    pub fn phase(&self) -> f64 {
        match self {
            CzGate::Destructive(p) => p.phase(),
            CzGate::Klm(ns) => ns.target_phase,
        }
    }

    pub fn ancilla_count(&self) -> u32 {
        match self {
            CzGate::Destructive(_) => 1,
            CzGate::Klm(_) => 2,
        }
    }

    pub fn circuit(&self, embedding: NsEmbedding) -> Result<GateCircuit> {
        match self {
            CzGate::Destructive(p) => build_cphase_destructive(p, embedding),
            CzGate::Klm(ns) => build_cphase_klm(ns.target_phase, ns, embedding),
        }
    }

    /// Logical register for a target and control qubit.
    pub fn logical(
        &self,
        psi_t: &QubitAmplitudes,
        psi_c: &QubitAmplitudes,
        cutoff: usize,
    ) -> Result<SparseState> {
        match self {
            CzGate::Destructive(_) => destructive_logical(psi_t, psi_c, cutoff),
            CzGate::Klm(_) => klm_logical(psi_c, psi_t, cutoff),
        }
    }

    /// Ideal normalized output.
    pub fn target(&self, psi_t: &QubitAmplitudes, psi_c: &QubitAmplitudes) -> Result<SparseState> {
        let phi = self.phase();
        Ok(match self {
            CzGate::Destructive(_) => destructive_target(phi, psi_t, psi_c)?,
            CzGate::Klm(_) => klm_target(phi, psi_c, psi_t)?,
        }
        .normalized())
    }
}

/// Basis index `2·x_t + x_c`, matching [`basis_pairs`].
fn basis_pairs() -> [(QubitAmplitudes, QubitAmplitudes); 4] {
    let (z, o) = (QubitAmplitudes::zero(), QubitAmplitudes::one());
    [(z, z), (z, o), (o, z), (o, o)]
}

/// Coefficients of `ψT ⊗ ψC` in the basis order of [`basis_pairs`].
fn product_coeffs(psi_t: &QubitAmplitudes, psi_c: &QubitAmplitudes) -> [C64; 4] {
    [
        psi_t.a0 * psi_c.a0,
        psi_t.a0 * psi_c.a1,
        psi_t.a1 * psi_c.a0,
        psi_t.a1 * psi_c.a1,
    ]
}

/// A gate whose explicit circuit passed the brute-force action check.
#[derive(Clone, Debug)]
pub struct VerifiedGate {
    pub gate: CzGate,
    pub circuit: GateCircuit,
    pub prefactor: C64,
    pub residual: f64,
    /// Heralded outputs of the four logical basis inputs.
    basis_outputs: Vec<SparseState>,
}

impl VerifiedGate {
    pub fn new(gate: CzGate) -> Result<Self> {
        let check = match &gate {
            CzGate::Destructive(p) => verify_destructive(p, NsEmbedding::Explicit)?,
            CzGate::Klm(ns) => verify_klm(ns.target_phase, ns, NsEmbedding::Explicit)?,
        };
        if check.residual > ACTION_TOLERANCE {
            return Err(Error::UnverifiedGate(format!(
                "action residual {:.3e} exceeds {:.0e}",
                check.residual, ACTION_TOLERANCE
            )));
        }
        let circuit = gate.circuit(NsEmbedding::Explicit)?;
        let basis_outputs = basis_pairs()
            .iter()
            .map(|(t, c)| Ok(circuit.conditional(&gate.logical(t, c, circuit.cutoff)?)?.state))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            gate,
            circuit,
            prefactor: check.prefactor,
            residual: check.residual,
            basis_outputs,
        })
    }

    /// Success probability from the basis outputs, using linearity.
    fn linear_success(&self, psi_t: &QubitAmplitudes, psi_c: &QubitAmplitudes) -> f64 {
        let x = product_coeffs(psi_t, psi_c);
        let mut acc: BTreeMap<&Occupation, C64> = BTreeMap::new();
        for (xi, out) in x.iter().zip(&self.basis_outputs) {
            for (occ, amp) in out.terms() {
                *acc.entry(occ).or_default() += xi * amp;
            }
        }
        acc.values().map(|a| a.norm_sqr()).sum::<f64>()
    }
}

/// Heralding probability by running the explicit circuit on the input.
pub fn success_prob(gate: &VerifiedGate, psi_t: &QubitAmplitudes, psi_c: &QubitAmplitudes) -> Result<f64> {
    let logical = gate.gate.logical(psi_t, psi_c, gate.circuit.cutoff)?;
    Ok(gate.circuit.conditional(&logical)?.prob)
}

/// Closed-form success of the destructive gate with an ideal-action NS gate
/// of success `p_ns`, on the constraint curve:
/// `p_ns·r2²r3²·[|α|²|γ+δ|² + |β|²|γ+e^{iφ}δ|²]`, with target `α, β` and
/// control `γ, δ`. At `φ = π` this is `p_ns·r2²r3²·[1 + 2(|α|²−|β|²)Re(γ*δ)]`.
pub fn closed_form_success(
    p_ns: f64,
    t2: f64,
    t3: f64,
    phi: f64,
    psi_t: &QubitAmplitudes,
    psi_c: &QubitAmplitudes,
) -> f64 {
    let r2sq = 1.0 - t2 * t2;
    let r3sq = 1.0 - t3 * t3;
    let (g, d) = (psi_c.a0, psi_c.a1);
    let bracket = psi_t.a0.norm_sqr() * (g + d).norm_sqr()
        + psi_t.a1.norm_sqr() * (g + C64::from_polar(1.0, phi) * d).norm_sqr();
    p_ns * r2sq * r3sq * bracket
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum MeasureKind {
    /// Independent Haar-random qubits.
    HaarProduct,
    /// Real amplitudes `cos θ, sin θ` with uniform `θ`.
    RealAmplitudes,
    /// Real `|0⟩` and imaginary `|1⟩` amplitudes: `cos θ, i sin θ`.
    RealImaginary,
    Fixed {
        target: QubitAmplitudes,
        control: QubitAmplitudes,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InputMeasure {
    pub kind: MeasureKind,
    pub samples: usize,
    pub seed: u64,
}

impl InputMeasure {
    pub fn new(kind: MeasureKind, samples: usize, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::OutOfRange {
                name: "samples",
                value: 0.0,
                range: ">= 1",
            });
        }
        Ok(Self { kind, samples, seed })
    }

    fn qubit(&self, rng: &mut ChaCha8Rng) -> QubitAmplitudes {
        match self.kind {
            MeasureKind::HaarProduct => {
                let mut g = || C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                let (a, b) = (g(), g());
                QubitAmplitudes::normalize(a, b)
            }
            MeasureKind::RealAmplitudes => {
                let th: f64 = rng.gen_range(0.0..2.0 * PI);
                QubitAmplitudes::normalize(C64::new(th.cos(), 0.0), C64::new(th.sin(), 0.0))
            }
            MeasureKind::RealImaginary => {
                let th: f64 = rng.gen_range(0.0..2.0 * PI);
                QubitAmplitudes::normalize(C64::new(th.cos(), 0.0), C64::new(0.0, th.sin()))
            }
            MeasureKind::Fixed { .. } => unreachable!("fixed inputs are not sampled"),
        }
    }

    /// Sample `i` as `(target, control)`; depends only on `(seed, i)`.
    pub fn sample(&self, i: usize) -> (QubitAmplitudes, QubitAmplitudes) {
        if let MeasureKind::Fixed { target, control } = self.kind {
            return (target, control);
        }
        let mut rng = rng_for(self.seed, i as u64);
        let t = self.qubit(&mut rng);
        let c = self.qubit(&mut rng);
        (t, c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AverageSuccess {
    pub value: f64,
    /// Standard error of a Monte Carlo estimate; none when exact.
    pub std_err: Option<f64>,
    pub samples: usize,
}

/// Exact Haar-product average: the input second moment is `I/4`, so the
/// average is a quarter of the summed basis success.
pub fn average_success_closed_form(gate: &VerifiedGate) -> f64 {
    gate.basis_outputs.iter().map(|s| s.norm_sqr()).sum::<f64>() / 4.0
}

pub fn average_success_monte_carlo(gate: &VerifiedGate, measure: &InputMeasure) -> AverageSuccess {
    let values: Vec<f64> = (0..measure.samples)
        .into_par_iter()
        .map(|i| {
            let (t, c) = measure.sample(i);
            gate.linear_success(&t, &c)
        })
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    AverageSuccess {
        value: mean,
        std_err: Some((var / n).sqrt()),
        samples: values.len(),
    }
}

/// Closed form for the Haar-product measure, Monte Carlo otherwise.
pub fn average_success(gate: &VerifiedGate, measure: &InputMeasure) -> AverageSuccess {
    match measure.kind {
        MeasureKind::HaarProduct => AverageSuccess {
            value: average_success_closed_form(gate),
            std_err: None,
            samples: 0,
        },
        _ => average_success_monte_carlo(gate, measure),
    }
}

/// One row of a sweep: independent values then dependent values. Missing
/// dependent values mark grid points where the quantity does not exist.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: Vec<f64>,
    pub y: Vec<Option<f64>>,
}

/// Rows `(t3; t1, t2, r2·r3)` along the constraint curve.
pub fn sweep_constraint_curve(grid: &[f64]) -> Vec<SweepRow> {
    grid.iter()
        .map(|&t3| {
            let y = match solve_constraints(t3) {
                Some((t1, t2)) => vec![Some(t1), Some(t2), Some(r2r3_on_curve(t3))],
                None => vec![None; 3],
            };
            SweepRow { x: vec![t3], y }
        })
        .collect()
}

/// `0.501, 0.503, …, 0.999`, with `1/√2` inserted in order.
pub fn default_t3_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..250).map(|k| (501 + 2 * k) as f64 / 1000.0).collect();
    let pos = grid.partition_point(|&t| t < FRAC_1_SQRT_2);
    grid.insert(pos, FRAC_1_SQRT_2);
    grid
}

/// `0, step, …, 1`.
pub fn unit_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| k as f64 / (points - 1) as f64).collect()
}

/// `lo, lo + step, …, hi` computed from integer steps.
pub fn range_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || hi < lo {
        return Err(Error::OutOfRange {
            name: "step",
            value: step,
            range: "> 0 with lo <= hi",
        });
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseConfig {
    /// `β = √(1−α²)`, `δ = √(1−γ²)`.
    Real,
    /// `β = i√(1−α²)`, `δ = i√(1−γ²)`.
    Imaginary,
}

fn qubit_from(a: f64, config: PhaseConfig) -> QubitAmplitudes {
    let b = (1.0 - a * a).max(0.0).sqrt();
    let b = match config {
        PhaseConfig::Real => C64::new(b, 0.0),
        PhaseConfig::Imaginary => C64::new(0.0, b),
    };
    QubitAmplitudes::normalize(C64::new(a, 0.0), b)
}

/// Rows `(α, γ; P)` by brute force, `α` outermost.
pub fn success_surface(
    gate: &VerifiedGate,
    alpha_grid: &[f64],
    gamma_grid: &[f64],
    config: PhaseConfig,
) -> Result<Vec<SweepRow>> {
    let points: Vec<(f64, f64)> = alpha_grid
        .iter()
        .flat_map(|&a| gamma_grid.iter().map(move |&g| (a, g)))
        .collect();
    points
        .par_iter()
        .map(|&(a, g)| {
            let p = success_prob(gate, &qubit_from(a, config), &qubit_from(g, config))?;
            Ok(SweepRow {
                x: vec![a, g],
                y: vec![Some(p)],
            })
        })
        .collect()
}

/// Photons lost per loss site and dark counts per detector.
type BranchKey = (Vec<usize>, Vec<bool>);

/// Lossy-herald branches of a gate as linear maps on the logical basis,
/// in dense form over the union of output occupations.
struct BranchMaps {
    occupations: Vec<Occupation>,
    /// `maps[k][i]` is branch `k`'s output for basis input `i`.
    maps: Vec<[Vec<C64>; 4]>,
}

impl BranchMaps {
    fn new(gate: &VerifiedGate, eta: f64, loss: DetectorLoss) -> Result<Self> {
        let circuit = &gate.circuit;
        let mut herald = circuit.herald.clone();
        for d in &mut herald.detectors {
            if loss == DetectorLoss::All || d.n == 0 {
                d.eta = eta;
            }
        }
        let mut grouped: BTreeMap<BranchKey, [Option<SparseState>; 4]> = BTreeMap::new();
        for (i, (t, c)) in basis_pairs().iter().enumerate() {
            let input = circuit.embed(&gate.gate.logical(t, c, circuit.cutoff)?)?;
            for b in herald_branches(&circuit.circuit, &input, &herald)? {
                grouped.entry((b.lost, b.dark)).or_default()[i] = Some(b.result.state);
            }
        }
        let mut occupations: Vec<Occupation> = grouped
            .values()
            .flat_map(|states| {
                states
                    .iter()
                    .flatten()
                    .flat_map(|s| s.terms().map(|(o, _)| o.clone()))
            })
            .collect();
        occupations.sort();
        occupations.dedup();
        let index = |o: &Occupation| occupations.binary_search(o).expect("collected above");
        let maps = grouped
            .values()
            .map(|states| {
                std::array::from_fn(|i| {
                    let mut v = vec![C64::default(); occupations.len()];
                    if let Some(s) = &states[i] {
                        for (o, a) in s.terms() {
                            v[index(o)] = *a;
                        }
                    }
                    v
                })
            })
            .collect();
        Ok(Self { occupations, maps })
    }

    fn dense(&self, state: &SparseState) -> Vec<C64> {
        let mut v = vec![C64::default(); self.occupations.len()];
        for (o, a) in state.terms() {
            if let Ok(k) = self.occupations.binary_search(o) {
                v[k] = *a;
            }
        }
        v
    }

    /// Accepted-mixture fidelity with `target` (normalized), and the
    /// herald probability.
    fn fidelity(&self, x: &[C64; 4], target: &[C64]) -> (f64, f64) {
        let mut overlap = 0.0;
        let mut total = 0.0;
        let mut buf = vec![C64::default(); self.occupations.len()];
        for map in &self.maps {
            buf.iter_mut().for_each(|b| *b = C64::default());
            for (xi, col) in x.iter().zip(map) {
                for (b, a) in buf.iter_mut().zip(col) {
                    *b += xi * a;
                }
            }
            let ip: C64 = target.iter().zip(&buf).map(|(t, b)| t.conj() * b).sum();
            overlap += ip.norm_sqr();
            total += buf.iter().map(|b| b.norm_sqr()).sum::<f64>();
        }
        (overlap, total)
    }
}

/// Which detectors the efficiency applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorLoss {
    All,
    /// Only detectors that herald on zero photons.
    NullOnly,
}

/// Mean accepted-state fidelity over the measure at detector efficiency `eta`.
pub fn mean_fidelity(
    gate: &VerifiedGate,
    eta: f64,
    loss: DetectorLoss,
    measure: &InputMeasure,
) -> Result<f64> {
    let maps = BranchMaps::new(gate, eta, loss)?;
    let per_sample: Vec<Option<f64>> = (0..measure.samples)
        .into_par_iter()
        .map(|i| {
            let (t, c) = measure.sample(i);
            let target = maps.dense(&gate.gate.target(&t, &c).ok()?);
            let (overlap, total) = maps.fidelity(&product_coeffs(&t, &c), &target);
            (total > 1e-300).then(|| (overlap / total).clamp(0.0, 1.0))
        })
        .collect();
    let kept: Vec<f64> = per_sample.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::Infeasible("no input was ever accepted".into()));
    }
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Verified destructive and two-NS gates for one phase.
#[derive(Clone, Debug)]
pub struct GatePair {
    pub destructive: VerifiedGate,
    pub klm: VerifiedGate,
}

impl GatePair {
    pub fn new(destructive: DestructiveGateParams, klm_ns: NsGateParams) -> Result<Self> {
        Ok(Self {
            destructive: VerifiedGate::new(CzGate::Destructive(destructive))?,
            klm: VerifiedGate::new(CzGate::Klm(klm_ns))?,
        })
    }

    /// Optimize both gates for `phase`.
    pub fn discover(phase: f64, cfg: &OptimizerConfig) -> Result<Self> {
        let ns = find_ns_params(phase, cfg)?.params;
        let destructive = find_destructive_params(phase, cfg)?.params;
        Self::new(destructive, ns)
    }
}

/// Rows `(η; F_D, F_KLM)`.
pub fn fidelity_curve(
    pair: &GatePair,
    eta_grid: &[f64],
    loss: DetectorLoss,
    measure: &InputMeasure,
) -> Result<Vec<SweepRow>> {
    eta_grid
        .iter()
        .map(|&eta| {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::OutOfRange {
                    name: "eta",
                    value: eta,
                    range: "(0, 1]",
                });
            }
            Ok(SweepRow {
                x: vec![eta],
                y: vec![
                    Some(mean_fidelity(&pair.destructive, eta, loss, measure)?),
                    Some(mean_fidelity(&pair.klm, eta, loss, measure)?),
                ],
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRecord {
    pub phase: f64,
    pub p_d: f64,
    pub p_klm: f64,
    pub p_d_eff: f64,
    pub p_klm_eff: f64,
}

/// Haar-averaged intrinsic success and ancilla-cost-adjusted success.
pub fn emit_tables(p_herald: f64, pairs: &[&GatePair]) -> Result<Vec<TableRecord>> {
    pairs
        .iter()
        .map(|pair| {
            let p_d = average_success_closed_form(&pair.destructive);
            let p_klm = average_success_closed_form(&pair.klm);
            let cost_d = AncillaCostModel::new(p_herald, pair.destructive.gate.ancilla_count())?;
            let cost_klm = AncillaCostModel::new(p_herald, pair.klm.gate.ancilla_count())?;
            Ok(TableRecord {
                phase: pair.destructive.gate.phase(),
                p_d,
                p_klm,
                p_d_eff: effective_success(p_d, &cost_d),
                p_klm_eff: effective_success(p_klm, &cost_klm),
            })
        })
        .collect()
}

/// Heralding probability of the N-path gate for a one-mode target state and
/// a control qubit spread over all paths.
pub fn npath_success(
    n_paths: usize,
    per_path: &DestructiveGateParams,
    target: &SparseState,
    control: &QubitAmplitudes,
    embedding: NsEmbedding,
    cutoff: usize,
) -> Result<f64> {
    let gate = build_npath(n_paths, per_path, target.max_photons(), embedding, cutoff)?;
    let logical = target
        .with_cutoff(cutoff)?
        .tensor(&ghz_dual_rail(*control, n_paths, cutoff)?)?;
    Ok(gate.conditional(&logical)?.prob)
}

/// Coherent state `|a⟩` truncated to at most `n_max` photons and renormalized.
pub fn truncated_coherent(a: f64, n_max: usize, cutoff: usize) -> Result<SparseState> {
    let mut amp = (-a * a / 2.0).exp();
    let mut entries = Vec::new();
    for n in 0..=n_max {
        if n > 0 {
            amp *= a / (n as f64).sqrt();
        }
        entries.push(([n], C64::new(amp, 0.0)));
    }
    Ok(SparseState::from_entries(1, cutoff, entries)?.normalized())
}

/// Rows `(N; P, P(N)/P(N−1))` for one target state over increasing `N`.
pub fn npath_scan(
    per_path: &DestructiveGateParams,
    paths: &[usize],
    target: &SparseState,
    control: &QubitAmplitudes,
    cutoff: usize,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let mut prev: Option<f64> = None;
    for &np in paths {
        let p = npath_success(np, per_path, target, control, NsEmbedding::Effective, cutoff)?;
        rows.push(SweepRow {
            x: vec![np as f64],
            y: vec![Some(p), prev.map(|q| p / q)],
        });
        prev = Some(p);
    }
    Ok(rows)
}

/// Format with 12 significant digits, without trailing zeros.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..15).contains(&exp) {
        format!("{:.*}", (11 - exp).max(0) as usize, x)
    } else {
        format!("{:.11e}", x)
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    let (mantissa, exp) = match s.find('e') {
        Some(k) => (&s[..k], &s[k..]),
        None => (s, ""),
    };
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    format!("{mantissa}{exp}")
}

/// CSV text with the given header; missing values are empty cells.
pub fn to_csv(header: &[&str], rows: &[SweepRow]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> =
            r.x.iter()
                .map(|&v| format_sig12(v))
                .chain(r.y.iter().map(|v| v.map(format_sig12).unwrap_or_default()))
                .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_formatting() {
        assert_eq!(format_sig12(0.5), "0.5");
        assert_eq!(format_sig12(FRAC_1_SQRT_2), "0.707106781187");
        assert_eq!(format_sig12(3.125e-4), "0.0003125");
        assert_eq!(format_sig12(6.25e-6), "6.25e-6");
        assert_eq!(format_sig12(1.5e-9), "1.5e-9");
        assert_eq!(format_sig12(-2.0), "-2");
        assert_eq!(format_sig12(0.0), "0");
    }

    #[test]
    fn grids() {
        let g = default_t3_grid();
        assert_eq!(g.len(), 251);
        assert_eq!(g[0], 0.501);
        assert_eq!(*g.last().unwrap(), 0.999);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.contains(&FRAC_1_SQRT_2));
        let e = range_grid(0.5, 1.0, 0.01).unwrap();
        assert_eq!(e.len(), 51);
        assert!((e[50] - 1.0).abs() < 1e-12);
        assert_eq!(unit_grid(3), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn curve_rows_flag_missing_points() {
        let rows = sweep_constraint_curve(&[0.4, FRAC_1_SQRT_2]);
        assert_eq!(rows[0].y, vec![None, None, None]);
        let y: Vec<f64> = rows[1].y.iter().map(|v| v.unwrap()).collect();
        assert!((y[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((y[1] - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((y[2] - 0.25 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let h = QubitAmplitudes::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap();
        let (_, t2) = solve_constraints(FRAC_1_SQRT_2).unwrap();
        let p = |t: &QubitAmplitudes| closed_form_success(0.25, t2, FRAC_1_SQRT_2, PI, t, &h);
        assert!((p(&h) - 0.03125).abs() < 1e-15);
        assert!(p(&QubitAmplitudes::one()).abs() < 1e-15);
        assert!((p(&QubitAmplitudes::zero()) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn samples_are_normalized_and_reproducible() {
        for kind in [
            MeasureKind::HaarProduct,
            MeasureKind::RealAmplitudes,
            MeasureKind::RealImaginary,
        ] {
            let m = InputMeasure::new(kind, 10, 5).unwrap();
            for i in 0..10 {
                let (t, c) = m.sample(i);
                for q in [t, c] {
                    assert!((q.a0.norm_sqr() + q.a1.norm_sqr() - 1.0).abs() < 1e-12);
                }
                assert_eq!(m.sample(i), (t, c));
            }
        }
        assert!(InputMeasure::new(MeasureKind::HaarProduct, 0, 0).is_err());
    }
}
