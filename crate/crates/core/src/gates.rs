//! Gate builders: the nonlinear sign (NS) gate, the two-NS controlled-phase
//! gate, the destructive single-NS controlled-phase gate and its N-path
//! extension for multi-photon targets.
//!
//! NS gate layout (signal `s`, ancilla `a` carrying one photon, vacuum `v`):
//!
//! ```text
//! ps(s, phi4) → bs(s, a, t_b1) → ps(a, phi_ancilla) → bs(a, v, t_b2) → bs(s, a, t_b3)
//! herald: a = 1, v = 0
//! ```
//!
//! Destructive gate layout: single-rail target `T`, control rails `C1`
//! (logical 1) and `C0`, subtraction detector `D`:
//!
//! ```text
//! bs(T, C1, t1) → NS(T) → bs(T, C0, t2) → bs(T, D, t3)
//! herald: C1 = 0, C0 = 0, D = 1 (PNR), NS heralds
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::{Complex64 as C64, ComplexFloat};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Element};
use crate::elements::{amplitude_via_permanent, compile_mode_unitary, ModeUnitary};
use crate::error::{Error, Result};
use crate::fock::{Occupation, QubitAmplitudes, SparseState};
use crate::herald::{herald_ideal, run, ConditionalResult, Detector, HeraldSpec};

/// Tolerance on gate-action residuals for a parameter set to count as verified.
pub const ACTION_TOLERANCE: f64 = 1e-9;

/// Tolerance on `2 t1 t2 t3 = 1` and `r2 = r1 t2`.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-9;

fn wrap_phase(phi: f64) -> f64 {
    phi.rem_euclid(2.0 * PI)
}

fn same_phase(a: f64, b: f64) -> bool {
    let d = wrap_phase(a - b);
    d.min(2.0 * PI - d) < 1e-12
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NsGateParams {
    pub t_b1: f64,
    pub t_b2: f64,
    pub t_b3: f64,
    pub phi4: f64,
    /// Phase on the ancilla arm between the first and second splitter.
    pub phi_ancilla: f64,
    pub target_phase: f64,
}

/// How an NS gate is placed inside a larger circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NsEmbedding {
    /// `|0⟩,|1⟩,|2⟩ → |0⟩,|1⟩,e^{iφ}|2⟩` with unit prefactor.
    Ideal,
    /// The exact heralded action of the linear-optical gate, folded into a
    /// photon-number-diagonal element. No ancilla modes or detectors.
    Effective,
    /// Ancilla and vacuum modes, source photon and two detectors.
    Explicit,
}

/// Outcome of a brute-force check of an NS parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NsVerification {
    pub prefactor: C64,
    pub success: f64,
    pub residual: f64,
}

impl NsGateParams {
    pub fn transmissions(&self) -> [f64; 3] {
        [self.t_b1, self.t_b2, self.t_b3]
    }

    fn check(&self) -> Result<()> {
        for (name, t) in [("t_b1", self.t_b1), ("t_b2", self.t_b2), ("t_b3", self.t_b3)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::OutOfRange {
                    name,
                    value: t,
                    range: "[0, 1]",
                });
            }
        }
        Ok(())
    }

    pub fn elements(&self, s: usize, a: usize, v: usize) -> Vec<Element> {
        vec![
            Element::PhaseShift { m: s, phi: self.phi4 },
            Element::BeamSplitter {
                m1: s,
                m2: a,
                t: self.t_b1,
            },
            Element::PhaseShift {
                m: a,
                phi: self.phi_ancilla,
            },
            Element::BeamSplitter {
                m1: a,
                m2: v,
                t: self.t_b2,
            },
            Element::BeamSplitter {
                m1: s,
                m2: a,
                t: self.t_b3,
            },
        ]
    }

    /// Stand-alone three-mode gate: signal 0, ancilla 1, vacuum 2.
    pub fn circuit(&self) -> (Circuit, HeraldSpec) {
        let mut c = Circuit::new(3);
        c.source(1, 1).extend(self.elements(0, 1, 2));
        let spec = HeraldSpec {
            detectors: vec![Detector::pnr(1, 1), Detector::pnr(2, 0)],
            outputs: vec![0],
        };
        (c, spec)
    }

    pub fn mode_unitary(&self) -> Result<ModeUnitary> {
        self.check()?;
        compile_mode_unitary(&self.circuit().0)
    }

    /// Heralded amplitudes `c_n` for `|n⟩ → c_n|n⟩`, `n = 0..=n_max`, from
    /// the permanent of the compiled mode unitary.
    pub fn conditional_amplitudes(&self, n_max: usize) -> Result<Vec<C64>> {
        let u = self.mode_unitary()?;
        (0..=n_max)
            .map(|n| {
                let occ = Occupation::new(&[n, 1, 0]);
                amplitude_via_permanent(&u, &occ, &occ)
            })
            .collect()
    }

    /// Brute-force check on a spanning set of inputs by sparse evolution.
    pub fn verify(&self) -> Result<NsVerification> {
        self.check()?;
        let third = 1.0 / 3f64.sqrt();
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let inputs = [
            [one, C64::default(), C64::default()],
            [C64::default(), one, C64::default()],
            [C64::default(), C64::default(), one],
            [one * third, one * third, one * third],
            [one * third, i * third, -one * third],
        ];
        let pairs = inputs
            .iter()
            .map(|&[a, b, g]| {
                let input = ns_input(a, b, g)?;
                let out = ns_apply_state(self, &input)?.state;
                let expected = ns_input(a, b, g * C64::from_polar(1.0, self.target_phase))?;
                Ok((out, expected))
            })
            .collect::<Result<Vec<_>>>()?;
        let (prefactor, residual) = action_residual(&pairs)?;
        Ok(NsVerification {
            prefactor,
            success: prefactor.norm_sqr(),
            residual,
        })
    }

    pub fn is_verified_for(&self, phase: f64) -> Result<NsVerification> {
        if !same_phase(self.target_phase, phase) {
            return Err(Error::UnverifiedNs(format!(
                "parameters target phase {} but {} was requested",
                self.target_phase, phase
            )));
        }
        let v = self.verify()?;
        if v.residual > ACTION_TOLERANCE {
            return Err(Error::UnverifiedNs(format!(
                "action residual {:.3e} exceeds {:.0e}",
                v.residual, ACTION_TOLERANCE
            )));
        }
        Ok(v)
    }
}

fn ns_input(a: C64, b: C64, g: C64) -> Result<SparseState> {
    SparseState::from_entries(1, 2, [([0], a), ([1], b), ([2], g)])
}

/// Run the NS gate on `α|0⟩ + β|1⟩ + γ|2⟩`.
pub fn ns_apply(params: &NsGateParams, alpha: C64, beta: C64, gamma: C64) -> Result<ConditionalResult> {
    ns_apply_state(params, &ns_input(alpha, beta, gamma)?)
}

/// Run the NS gate on a one-mode state with at most two photons.
pub fn ns_apply_state(params: &NsGateParams, input: &SparseState) -> Result<ConditionalResult> {
    if input.modes() != 1 {
        return Err(Error::ModeMismatch {
            expected: 1,
            got: input.modes(),
        });
    }
    if input.max_photons() > 2 {
        return Err(Error::TooManyPhotons);
    }
    let (circuit, spec) = params.circuit();
    let full = input.with_cutoff(3)?.tensor(&SparseState::vacuum(2, 3))?;
    herald_ideal(&run(&circuit, &full)?, &spec)
}

/// Fit `k` from the first pair and return `(k, max_i ‖out_i − k·expected_i‖ / |k|)`.
pub fn action_residual(pairs: &[(SparseState, SparseState)]) -> Result<(C64, f64)> {
    let (out0, exp0) = &pairs[0];
    let k = exp0.inner(out0)? / exp0.norm_sqr();
    if k.norm() < 1e-300 {
        return Ok((k, f64::INFINITY));
    }
    let mut worst: f64 = 0.0;
    for (out, expected) in pairs {
        let diff = out.add_scaled(expected, -k)?;
        worst = worst.max(diff.norm_sqr().sqrt() / k.norm());
    }
    Ok((k, worst))
}

/// Mutable circuit under construction: the circuit plus its detectors.
struct Builder {
    circuit: Circuit,
    detectors: Vec<Detector>,
}

impl Builder {
    fn new(modes: usize) -> Self {
        Self {
            circuit: Circuit::new(modes),
            detectors: Vec::new(),
        }
    }

    fn fresh_mode(&mut self) -> usize {
        self.circuit.modes += 1;
        self.circuit.modes - 1
    }

    fn ns(
        &mut self,
        params: &NsGateParams,
        mode: usize,
        embedding: NsEmbedding,
        cutoff: usize,
    ) -> Result<()> {
        match embedding {
            NsEmbedding::Ideal => {
                let one = C64::new(1.0, 0.0);
                self.circuit
                    .number_filter(mode, vec![one, one, C64::from_polar(1.0, params.target_phase)]);
            }
            NsEmbedding::Effective => {
                let coeffs = params.conditional_amplitudes(cutoff)?;
                self.circuit.number_filter(mode, coeffs);
            }
            NsEmbedding::Explicit => {
                let a = self.fresh_mode();
                let v = self.fresh_mode();
                self.circuit.source(a, 1).extend(params.elements(mode, a, v));
                self.detectors.push(Detector::pnr(a, 1));
                self.detectors.push(Detector::pnr(v, 0));
            }
        }
        Ok(())
    }

    fn finish(self, outputs: Vec<usize>, inputs: Vec<usize>, cutoff: usize) -> GateCircuit {
        GateCircuit {
            circuit: self.circuit,
            herald: HeraldSpec {
                detectors: self.detectors,
                outputs,
            },
            inputs,
            cutoff,
        }
    }
}

/// A gate as a circuit, its herald, and where its logical inputs live.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateCircuit {
    pub circuit: Circuit,
    pub herald: HeraldSpec,
    /// Circuit modes that receive the logical input register, in order.
    pub inputs: Vec<usize>,
    pub cutoff: usize,
}

impl GateCircuit {
    /// Place a state over the logical input modes into the full register.
    pub fn embed(&self, logical: &SparseState) -> Result<SparseState> {
        logical.embed(self.circuit.modes, &self.inputs, self.cutoff)
    }

    /// Run and herald a logical input.
    pub fn conditional(&self, logical: &SparseState) -> Result<ConditionalResult> {
        let full = self.embed(logical)?;
        herald_ideal(&run(&self.circuit, &full)?, &self.herald)
    }
}

/// Two-NS controlled-phase gate on dual-rail control and target.
///
/// Logical input and output modes are `[C0, C1, T0, T1]`: the state
/// `control.dual_rail() ⊗ target.dual_rail()`.
pub fn build_cphase_klm(phi: f64, ns: &NsGateParams, embedding: NsEmbedding) -> Result<GateCircuit> {
    ns.is_verified_for(phi)?;
    let cutoff = match embedding {
        NsEmbedding::Explicit => 4,
        _ => 2,
    };
    let (c1, t1) = (1, 3);
    let mut b = Builder::new(4);
    b.circuit.bs(c1, t1, FRAC_1_SQRT_2);
    b.ns(ns, c1, embedding, cutoff)?;
    b.ns(ns, t1, embedding, cutoff)?;
    b.circuit.bs_inverse(c1, t1, FRAC_1_SQRT_2);
    Ok(b.finish(vec![0, 1, 2, 3], vec![0, 1, 2, 3], cutoff))
}

/// The KLM layout with the NS gates left out.
pub fn klm_interferometer() -> GateCircuit {
    let mut b = Builder::new(4);
    b.circuit.bs(1, 3, FRAC_1_SQRT_2).bs_inverse(1, 3, FRAC_1_SQRT_2);
    b.finish(vec![0, 1, 2, 3], vec![0, 1, 2, 3], 4)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rail {
    Zero,
    One,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DestructiveGateParams {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    /// Fixed phases on the control rails, applied before the splitters.
    pub aux_phases: Vec<(Rail, f64)>,
    pub ns: NsGateParams,
}

impl DestructiveGateParams {
    /// π on both control rails. Removes the global `−1` the i-on-reflection
    /// convention puts in front of the closed-form output amplitudes.
    pub fn default_aux_phases() -> Vec<(Rail, f64)> {
        vec![(Rail::One, PI), (Rail::Zero, PI)]
    }

    /// The success-maximizing splitters on the constraint curve.
    pub fn optimal(ns: NsGateParams) -> Self {
        let t3 = FRAC_1_SQRT_2;
        let (t1, t2) = solve_constraints(t3).expect("t3 = 1/√2 lies on the curve");
        Self {
            t1,
            t2,
            t3,
            aux_phases: Self::default_aux_phases(),
            ns,
        }
    }

    pub fn phase(&self) -> f64 {
        self.ns.target_phase
    }

    pub fn reflections(&self) -> [f64; 3] {
        [self.t1, self.t2, self.t3].map(|t| (1.0 - t * t).max(0.0).sqrt())
    }

    /// Residuals of `2 t1 t2 t3 = 1` and `r2 = r1 t2`.
    pub fn constraint_residuals(&self) -> (f64, f64) {
        let [r1, r2, _] = self.reflections();
        (2.0 * self.t1 * self.t2 * self.t3 - 1.0, r2 - r1 * self.t2)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("t1", self.t1), ("t2", self.t2), ("t3", self.t3)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::OutOfRange {
                    name,
                    value: t,
                    range: "(0, 1)",
                });
            }
        }
        let (a, b) = self.constraint_residuals();
        if a.abs() > CONSTRAINT_TOLERANCE || b.abs() > CONSTRAINT_TOLERANCE {
            return Err(Error::ConstraintViolation(format!(
                "|2 t1 t2 t3 - 1| = {:.3e}, |r2 - r1 t2| = {:.3e}",
                a.abs(),
                b.abs()
            )));
        }
        Ok(())
    }
}

/// Destructive gate for arbitrary splitters, without constraint checks.
///
/// Modes: `T = 0`, `C1 = 1`, `C0 = 2`, `D = 3`, then NS ancillas when
/// explicit. Logical inputs are `[T, C0, C1]`, i.e. the register
/// `target.single_rail() ⊗ control.dual_rail()`. The output is mode `T`.
pub fn destructive_circuit(params: &DestructiveGateParams, embedding: NsEmbedding) -> Result<GateCircuit> {
    let cutoff = match embedding {
        NsEmbedding::Explicit => 4,
        _ => 3,
    };
    let (t, c1, c0, d) = (0, 1, 2, 3);
    let mut b = Builder::new(4);
    append_destructive(&mut b, params, t, c1, c0, d, embedding, cutoff)?;
    Ok(b.finish(vec![t], vec![t, c0, c1], cutoff))
}

#[allow(clippy::too_many_arguments)]
fn append_destructive(
    b: &mut Builder,
    params: &DestructiveGateParams,
    t: usize,
    c1: usize,
    c0: usize,
    d: usize,
    embedding: NsEmbedding,
    cutoff: usize,
) -> Result<()> {
    for &(rail, phi) in &params.aux_phases {
        b.circuit.ps(if rail == Rail::One { c1 } else { c0 }, phi);
    }
    b.circuit.bs(t, c1, params.t1);
    b.ns(&params.ns, t, embedding, cutoff)?;
    b.circuit.bs(t, c0, params.t2).bs(t, d, params.t3);
    b.detectors.push(Detector::pnr(c1, 0));
    b.detectors.push(Detector::pnr(c0, 0));
    b.detectors.push(Detector::pnr(d, 1));
    Ok(())
}

/// Destructive controlled-phase gate; the splitters must satisfy the
/// controlled-phase constraints and the NS gate must be verified.
pub fn build_cphase_destructive(
    params: &DestructiveGateParams,
    embedding: NsEmbedding,
) -> Result<GateCircuit> {
    params.validate()?;
    params.ns.is_verified_for(params.ns.target_phase)?;
    destructive_circuit(params, embedding)
}

/// Closed-form output amplitudes `(γ|0⟩, γ|1⟩, δ|0⟩, δ|1⟩)` of the
/// destructive gate with an ideal NS gate.
pub fn closed_form_amplitudes(
    t1: f64,
    t2: f64,
    t3: f64,
    alpha: C64,
    beta: C64,
    gamma: C64,
    delta: C64,
) -> [C64; 4] {
    let r = |t: f64| (1.0 - t * t).max(0.0).sqrt();
    let (r1, r2, r3) = (r(t1), r(t2), r(t3));
    let k = 2.0 * t1 * t2 * t3;
    [
        gamma * r2 * r3 * alpha,
        gamma * r2 * r3 * beta * k,
        delta * r1 * r3 * t2 * alpha,
        -delta * r1 * r3 * t2 * beta * k,
    ]
}

/// `(t1(t3), t2(t3))` on the constraint curve, generic so the curve can be
/// differentiated with a complex step.
pub(crate) fn constraint_curve<T: ComplexFloat<Real = f64>>(t3: T) -> (T, T) {
    let one = T::one();
    let two = one + one;
    let four = two + two;
    let eight = four + four;
    let s = one + four * t3 * t3;
    ((two / s).sqrt(), (s / (eight * t3 * t3)).sqrt())
}

/// Splitters `t1, t2` that satisfy `2 t1 t2 t3 = 1` and `r2 = r1 t2`; none
/// for `t3 ≤ 1/2` where `t2` would reach or pass 1.
pub fn solve_constraints(t3: f64) -> Option<(f64, f64)> {
    if !(t3 > 0.5 && t3 < 1.0) {
        return None;
    }
    let (t1, t2) = constraint_curve(t3);
    (t2 < 1.0).then_some((t1, t2))
}

/// Control register `γ|0…0⟩ + δ|1…1⟩` on `n` dual-rail pairs.
pub fn ghz_dual_rail(control: QubitAmplitudes, n: usize, cutoff: usize) -> Result<SparseState> {
    let word = |bit: usize| -> Vec<usize> {
        (0..n)
            .flat_map(|_| if bit == 0 { [1, 0] } else { [0, 1] })
            .collect()
    };
    SparseState::from_entries(
        2 * n,
        cutoff,
        [
            (Occupation::new(&word(0)), control.a0),
            (Occupation::new(&word(1)), control.a1),
        ],
    )
}

/// N-path controlled phase for multi-photon targets.
///
/// The input mode is split into `n_paths` equal paths, each path carries its
/// own destructive gate, and the paths are recombined by the inverse splitter
/// tree. Heralding demands every gate's pattern and vacuum on the unused
/// recombiner ports. Logical inputs are `[input, C0_1, C1_1, …, C0_N, C1_N]`,
/// i.e. `target ⊗ ghz_dual_rail(control, N)`.
pub fn build_npath(
    n_paths: usize,
    per_path: &DestructiveGateParams,
    n_max: usize,
    embedding: NsEmbedding,
    cutoff: usize,
) -> Result<GateCircuit> {
    if n_paths == 0 {
        return Err(Error::OutOfRange {
            name: "N",
            value: 0.0,
            range: ">= 1",
        });
    }
    let ancillas = if embedding == NsEmbedding::Explicit {
        n_paths
    } else {
        0
    };
    let needed = n_max + n_paths + ancillas;
    if needed > cutoff {
        return Err(Error::CutoffExceeded {
            total: needed,
            cutoff,
        });
    }
    per_path.validate()?;

    let mut b = Builder::new(n_paths);
    let splits: Vec<f64> = (1..n_paths)
        .map(|k| (((n_paths - k) as f64) / ((n_paths - k + 1) as f64)).sqrt())
        .collect();
    for (k, &t) in splits.iter().enumerate() {
        b.circuit.bs(0, k + 1, t);
    }
    let mut inputs = vec![0];
    for path in 0..n_paths {
        let c1 = b.fresh_mode();
        let c0 = b.fresh_mode();
        let d = b.fresh_mode();
        append_destructive(&mut b, per_path, path, c1, c0, d, embedding, cutoff)?;
        inputs.push(c0);
        inputs.push(c1);
    }
    for (k, &t) in splits.iter().enumerate().rev() {
        b.circuit.bs_inverse(0, k + 1, t);
    }
    for path in 1..n_paths {
        b.detectors.push(Detector::pnr(path, 0));
    }
    Ok(b.finish(vec![0], inputs, cutoff))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AncillaCostModel {
    pub p_herald: f64,
    pub ancilla_count: u32,
}

impl AncillaCostModel {
    pub fn new(p_herald: f64, ancilla_count: u32) -> Result<Self> {
        if !(p_herald > 0.0 && p_herald <= 1.0) {
            return Err(Error::OutOfRange {
                name: "p_herald",
                value: p_herald,
                range: "(0, 1]",
            });
        }
        Ok(Self {
            p_herald,
            ancilla_count,
        })
    }
}

/// Success including heralded generation of every ancilla photon.
pub fn effective_success(p_intrinsic: f64, cost: &AncillaCostModel) -> f64 {
    p_intrinsic * cost.p_herald.powi(cost.ancilla_count as i32)
}

/// Logical register of the destructive gate: `target ⊗ control` on `[T, C0, C1]`.
pub fn destructive_logical(
    psi_t: &QubitAmplitudes,
    psi_c: &QubitAmplitudes,
    cutoff: usize,
) -> Result<SparseState> {
    psi_t.single_rail(cutoff).tensor(&psi_c.dual_rail(cutoff))
}

/// Ideal single-rail output `Σ_{c,x} ψC_c ψT_x e^{iφcx}|x⟩`.
pub fn destructive_target(phi: f64, psi_t: &QubitAmplitudes, psi_c: &QubitAmplitudes) -> Result<SparseState> {
    let mut amps = [C64::default(); 2];
    for c in 0..2 {
        for (x, amp) in amps.iter_mut().enumerate() {
            *amp += psi_c.get(c) * psi_t.get(x) * C64::from_polar(1.0, phi * (c * x) as f64);
        }
    }
    SparseState::from_entries(1, 3, [([0], amps[0]), ([1], amps[1])])
}

/// Logical register of the two-NS gate: `control ⊗ target` on `[C0, C1, T0, T1]`.
pub fn klm_logical(psi_c: &QubitAmplitudes, psi_t: &QubitAmplitudes, cutoff: usize) -> Result<SparseState> {
    psi_c.dual_rail(cutoff).tensor(&psi_t.dual_rail(cutoff))
}

/// Ideal dual-rail output `Σ_{c,t} ψC_c ψT_t e^{iφct}|c⟩|t⟩`.
pub fn klm_target(phi: f64, psi_c: &QubitAmplitudes, psi_t: &QubitAmplitudes) -> Result<SparseState> {
    let mut entries = Vec::new();
    for c in 0..2 {
        for t in 0..2 {
            let occ = Occupation::new(&[1 - c, c, 1 - t, t]);
            let amp = psi_c.get(c) * psi_t.get(t) * C64::from_polar(1.0, phi * (c * t) as f64);
            entries.push((occ, amp));
        }
    }
    SparseState::from_entries(4, 4, entries)
}

/// Basis inputs followed by two fixed superpositions, as `(target, control)`.
pub fn spanning_inputs() -> Vec<(QubitAmplitudes, QubitAmplitudes)> {
    let h = FRAC_1_SQRT_2;
    let plus = QubitAmplitudes::real(h, h).expect("normalized");
    let plus_i = QubitAmplitudes::new(C64::new(h, 0.0), C64::new(0.0, h)).expect("normalized");
    let tilted = QubitAmplitudes::real(0.6, 0.8).expect("normalized");
    let basis = [QubitAmplitudes::zero(), QubitAmplitudes::one()];
    let mut out = Vec::new();
    for c in basis {
        for t in basis {
            out.push((t, c));
        }
    }
    out.push((plus, plus));
    out.push((plus_i, tilted));
    out
}

/// Fitted prefactor and worst relative deviation from the ideal action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GateVerification {
    pub prefactor: C64,
    pub residual: f64,
}

/// Check a destructive gate's heralded action by sparse simulation.
pub fn verify_destructive(
    params: &DestructiveGateParams,
    embedding: NsEmbedding,
) -> Result<GateVerification> {
    let gate = destructive_circuit(params, embedding)?;
    let phi = params.phase();
    let pairs = spanning_inputs()
        .iter()
        .map(|(t, c)| {
            let out = gate.conditional(&destructive_logical(t, c, gate.cutoff)?)?.state;
            Ok((out, destructive_target(phi, t, c)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (prefactor, residual) = action_residual(&pairs)?;
    Ok(GateVerification { prefactor, residual })
}

/// Check a two-NS gate's heralded action by sparse simulation.
pub fn verify_klm(phi: f64, ns: &NsGateParams, embedding: NsEmbedding) -> Result<GateVerification> {
    let gate = build_cphase_klm(phi, ns, embedding)?;
    let pairs = spanning_inputs()
        .iter()
        .map(|(t, c)| {
            let out = gate.conditional(&klm_logical(c, t, gate.cutoff)?)?.state;
            Ok((out, klm_target(phi, c, t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (prefactor, residual) = action_residual(&pairs)?;
    Ok(GateVerification { prefactor, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constraint_examples() {
        let (t1, t2) = solve_constraints(FRAC_1_SQRT_2).unwrap();
        assert_abs_diff_eq!(t1, (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(t2, 3f64.sqrt() / 2.0, epsilon = 1e-15);
        assert!(solve_constraints(0.5).is_none());
        assert!(solve_constraints(0.3).is_none());
        assert!(solve_constraints(1.0).is_none());

        let (t1, t2) = solve_constraints(0.6).unwrap();
        assert_abs_diff_eq!(t1, 0.90536, epsilon = 1e-5);
        assert_abs_diff_eq!(t2, 0.92044, epsilon = 1e-5);
        assert!((2.0 * t1 * t2 * 0.6 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_collapses_on_the_constraint_curve() {
        let (t1, t2) = solve_constraints(0.8).unwrap();
        let one = C64::new(1.0, 0.0);
        let (a, b, g, d) = (0.6 * one, C64::new(0.0, 0.8), 0.28 * one, C64::new(0.0, 0.96));
        let amps = closed_form_amplitudes(t1, t2, 0.8, a, b, g, d);
        let r2r3 = (1.0 - t2 * t2).sqrt() * (1.0f64 - 0.64).sqrt();
        let expected = [g * a, g * b, d * a, -d * b].map(|x| x * r2r3);
        for (x, e) in amps.iter().zip(expected) {
            assert!((x - e).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_amplitude_input_cancels() {
        let (t1, t2) = solve_constraints(FRAC_1_SQRT_2).unwrap();
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let amps = closed_form_amplitudes(t1, t2, FRAC_1_SQRT_2, C64::default(), C64::new(1.0, 0.0), h, h);
        assert!((amps[0] + amps[2]).norm() < 1e-15);
        assert!((amps[1] + amps[3]).norm() < 1e-15);
    }

    #[test]
    fn effective_success_examples() {
        let one = AncillaCostModel::new(0.01, 1).unwrap();
        let two = AncillaCostModel::new(0.01, 2).unwrap();
        assert_abs_diff_eq!(effective_success(0.03125, &one), 3.125e-4, epsilon = 1e-18);
        assert_abs_diff_eq!(effective_success(0.0625, &two), 6.25e-6, epsilon = 1e-18);
        let none = AncillaCostModel::new(0.37, 0).unwrap();
        assert_eq!(effective_success(0.2, &none), 0.2);
        assert!(AncillaCostModel::new(0.0, 1).is_err());
    }

    #[test]
    fn interferometer_without_ns_is_identity() {
        let gate = klm_interferometer();
        for c in 0..2 {
            for t in 0..2 {
                let q = |b| {
                    if b == 0 {
                        QubitAmplitudes::zero()
                    } else {
                        QubitAmplitudes::one()
                    }
                };
                let logical = q(c).dual_rail(4).tensor(&q(t).dual_rail(4)).unwrap();
                let out = gate.conditional(&logical).unwrap();
                assert!(
                    out.state
                        .add_scaled(&logical, -C64::new(1.0, 0.0))
                        .unwrap()
                        .norm_sqr()
                        < 1e-28
                );
            }
        }
    }

    #[test]
    fn ghz_register() {
        let q = QubitAmplitudes::real(0.6, 0.8).unwrap();
        let g = ghz_dual_rail(q, 2, 6).unwrap();
        assert_eq!(g.amplitude(&[1, 0, 1, 0].into()), C64::new(0.6, 0.0));
        assert_eq!(g.amplitude(&[0, 1, 0, 1].into()), C64::new(0.8, 0.0));
    }

    #[test]
    fn destructive_constraints_enforced() {
        let ns = NsGateParams {
            t_b1: 0.5,
            t_b2: 0.5,
            t_b3: 0.5,
            phi4: 0.0,
            phi_ancilla: 0.0,
            target_phase: PI,
        };
        let bad = DestructiveGateParams {
            t1: 0.9,
            t2: 0.9,
            t3: 0.9,
            aux_phases: vec![],
            ns,
        };
        assert!(matches!(bad.validate(), Err(Error::ConstraintViolation(_))));
        assert!(DestructiveGateParams::optimal(ns).validate().is_ok());
        // A valid constraint set but an NS gate that does not implement the sign flip.
        assert!(matches!(
            build_cphase_destructive(&DestructiveGateParams::optimal(ns), NsEmbedding::Ideal),
            Err(Error::UnverifiedNs(_))
        ));
    }
}
