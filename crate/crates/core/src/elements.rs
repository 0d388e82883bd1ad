//! Optical elements acting on [`SparseState`]s, and the independent
//! permanent-based amplitude oracle.
//!
//! Beam splitter convention: `â₁† → t â₁† + i r â₂†`, `â₂† → i r â₁† + t â₂†`
//! with `t, r ≥ 0` real. Mode transformations are stored as `U` with
//! `â_j† → Σ_k U[k][j] â_k†`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::circuit::{Circuit, Element};
use crate::error::{Error, Result};
use crate::fock::{Occupation, SparseState};

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSplitterParams {
    t: f64,
    r: f64,
}

impl BeamSplitterParams {
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange {
                name: "t",
                value: t,
                range: "[0, 1]",
            });
        }
        Ok(Self {
            t,
            r: (1.0 - t * t).max(0.0).sqrt(),
        })
    }

    pub fn balanced() -> Self {
        Self::new(std::f64::consts::FRAC_1_SQRT_2).unwrap()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Output amplitudes `c[k]` for `|n1, n2⟩ → Σ_k c[k] |k, n1+n2−k⟩`.
fn splitter_row(n1: usize, n2: usize, p: BeamSplitterParams) -> Vec<C64> {
    let total = n1 + n2;
    let ir = I * p.r;
    let t = C64::new(p.t, 0.0);
    let mut out = vec![C64::default(); total + 1];
    // (t a† + ir b†)^n1 (ir a† + t b†)^n2 / sqrt(n1! n2!)
    for j in 0..=n1 {
        let first = binomial(n1, j) * t.powu(j as u32) * ir.powu((n1 - j) as u32);
        for l in 0..=n2 {
            let second = binomial(n2, l) * ir.powu(l as u32) * t.powu((n2 - l) as u32);
            out[j + l] += first * second;
        }
    }
    let norm_in = (factorial(n1) * factorial(n2)).sqrt();
    for (k, c) in out.iter_mut().enumerate() {
        *c *= (factorial(k) * factorial(total - k)).sqrt() / norm_in;
    }
    out
}

fn check_mode(state: &SparseState, m: usize) -> Result<()> {
    if m >= state.modes() {
        return Err(Error::InvalidMode {
            mode: m,
            modes: state.modes(),
        });
    }
    Ok(())
}

pub fn beam_splitter(
    state: &SparseState,
    m1: usize,
    m2: usize,
    p: BeamSplitterParams,
) -> Result<SparseState> {
    check_mode(state, m1)?;
    check_mode(state, m2)?;
    if m1 == m2 {
        return Err(Error::SameMode(m1));
    }
    let mut rows: BTreeMap<(usize, usize), Vec<C64>> = BTreeMap::new();
    Ok(state.flat_map(|occ, amp, emit| {
        let (n1, n2) = (occ.get(m1), occ.get(m2));
        let row = rows.entry((n1, n2)).or_insert_with(|| splitter_row(n1, n2, p));
        let total = n1 + n2;
        for (k, c) in row.iter().enumerate() {
            if *c != C64::default() {
                let mut out = occ.with(m1, k);
                out.set(m2, total - k);
                emit(out, amp * c);
            }
        }
    }))
}

pub fn phase_shift(state: &SparseState, m: usize, phi: f64) -> Result<SparseState> {
    check_mode(state, m)?;
    Ok(state.flat_map(|occ, amp, emit| {
        let n = occ.get(m) as f64;
        emit(occ.clone(), amp * C64::from_polar(1.0, n * phi));
    }))
}

/// `|n⟩ → coeffs[n]|n⟩` on mode `m`; occupations beyond `coeffs` vanish.
pub fn number_filter(state: &SparseState, m: usize, coeffs: &[C64]) -> Result<SparseState> {
    check_mode(state, m)?;
    Ok(state.flat_map(|occ, amp, emit| {
        if let Some(c) = coeffs.get(occ.get(m)) {
            emit(occ.clone(), amp * c);
        }
    }))
}

/// One pure branch of a loss channel.
#[derive(Clone, Debug, PartialEq)]
pub struct LossBranch {
    pub state: SparseState,
    pub lost: usize,
}

/// Photon loss on mode `m` with survival probability `eta`.
///
/// The mode is coupled to a fresh vacuum environment mode through a splitter
/// with `t = √eta`; terms are then grouped by how many photons reached the
/// environment. Branches come back in increasing order of `lost`.
pub fn loss_channel(state: &SparseState, m: usize, eta: f64) -> Result<Vec<LossBranch>> {
    check_mode(state, m)?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange {
            name: "eta",
            value: eta,
            range: "[0, 1]",
        });
    }
    if eta == 1.0 {
        return Ok(vec![LossBranch {
            state: state.clone(),
            lost: 0,
        }]);
    }
    let modes = state.modes();
    let env = SparseState::vacuum(1, state.cutoff());
    let coupled = beam_splitter(
        &state.tensor(&env)?,
        m,
        modes,
        BeamSplitterParams::new(eta.sqrt())?,
    )?;

    let keep: Vec<usize> = (0..modes).collect();
    let mut groups: BTreeMap<usize, BTreeMap<Occupation, C64>> = BTreeMap::new();
    for (occ, amp) in coupled.terms() {
        // The environment phase i^lost is common to the whole branch; strip it
        // so an unlossy branch is returned unchanged.
        let lost = occ.get(modes);
        let phase = (-I).powu(lost as u32);
        *groups
            .entry(lost)
            .or_default()
            .entry(occ.select(&keep))
            .or_default() += amp * phase;
    }
    Ok(groups
        .into_iter()
        .map(|(lost, terms)| LossBranch {
            state: SparseState::from_map(modes, state.cutoff(), terms),
            lost,
        })
        .filter(|b| !b.state.is_empty())
        .collect())
}

/// Dense `M × M` mode transformation matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary {
    dim: usize,
    data: Vec<C64>,
}

impl ModeUnitary {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![C64::default(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(1.0, 0.0);
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let dim = rows.len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    fn set(&mut self, row: usize, col: usize, v: C64) {
        self.data[row * self.dim + col] = v;
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let n = self.dim;
        let mut out = Self {
            dim: n,
            data: vec![C64::default(); n * n],
        };
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == C64::default() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::identity(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.get(j, i).conj());
            }
        }
        out
    }

    /// Largest entry of `|U·U† − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.mul(&self.adjoint());
        let id = Self::identity(self.dim);
        p.data
            .iter()
            .zip(&id.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn splitter(dim: usize, m1: usize, m2: usize, p: BeamSplitterParams) -> Self {
        let mut u = Self::identity(dim);
        u.set(m1, m1, C64::new(p.t, 0.0));
        u.set(m2, m2, C64::new(p.t, 0.0));
        u.set(m1, m2, I * p.r);
        u.set(m2, m1, I * p.r);
        u
    }

    fn phase(dim: usize, m: usize, phi: f64) -> Self {
        let mut u = Self::identity(dim);
        u.set(m, m, C64::from_polar(1.0, phi));
        u
    }
}

/// Product of the circuit's element matrices in circuit order.
pub fn compile_mode_unitary(circuit: &Circuit) -> Result<ModeUnitary> {
    circuit.validate()?;
    let dim = circuit.modes;
    let mut u = ModeUnitary::identity(dim);
    for e in &circuit.elements {
        let step = match e {
            Element::BeamSplitter { m1, m2, t } => {
                ModeUnitary::splitter(dim, *m1, *m2, BeamSplitterParams::new(*t)?)
            }
            Element::PhaseShift { m, phi } => ModeUnitary::phase(dim, *m, *phi),
            other => return Err(Error::NonLinearElement(other.name())),
        };
        u = step.mul(&u);
    }
    Ok(u)
}

/// Permanent of a square matrix by Ryser's formula with Gray-code updates.
pub fn permanent(rows: &[Vec<C64>]) -> C64 {
    let n = rows.len();
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut row_sums = vec![C64::default(); n];
    let mut total = C64::default();
    let mut gray: u64 = 0;
    for k in 1..(1u64 << n) {
        let next = k ^ (k >> 1);
        let flipped = (gray ^ next).trailing_zeros() as usize;
        let added = next & (1 << flipped) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if added {
                *s += rows[i][flipped];
            } else {
                *s -= rows[i][flipped];
            }
        }
        gray = next;
        let prod: C64 = row_sums.iter().product();
        let bits = gray.count_ones() as usize;
        if (n - bits).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// `⟨n_out| U |n_in⟩` as `per(U_sub) / √(∏ n_in! ∏ n_out!)`.
pub fn amplitude_via_permanent(u: &ModeUnitary, n_in: &Occupation, n_out: &Occupation) -> Result<C64> {
    if n_in.modes() != u.dim() || n_out.modes() != u.dim() {
        return Err(Error::ModeMismatch {
            expected: u.dim(),
            got: n_in.modes().max(n_out.modes()),
        });
    }
    if n_in.total() != n_out.total() {
        return Err(Error::PhotonNumberMismatch {
            input: n_in.total(),
            output: n_out.total(),
        });
    }
    let expand = |occ: &Occupation| -> Vec<usize> {
        (0..occ.modes())
            .flat_map(|m| std::iter::repeat_n(m, occ.get(m)))
            .collect()
    };
    let cols = expand(n_in);
    let rows = expand(n_out);
    let sub: Vec<Vec<C64>> = rows
        .iter()
        .map(|&r| cols.iter().map(|&c| u.get(r, c)).collect())
        .collect();
    let norm: f64 = (0..u.dim())
        .map(|m| factorial(n_in.get(m)) * factorial(n_out.get(m)))
        .product();
    Ok(permanent(&sub) / norm.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::make_state;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_splitter() {
        let s = make_state(2, [([1, 1], c(0.6, 0.0)), ([2, 0], c(0.0, 0.8))]).unwrap();
        let out = beam_splitter(&s, 0, 1, BeamSplitterParams::new(1.0).unwrap()).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn single_photon_splitter() {
        let p = BeamSplitterParams::new(0.6).unwrap();
        let out = beam_splitter(&SparseState::basis([1, 0], 4).unwrap(), 0, 1, p).unwrap();
        assert_abs_diff_eq!(out.amplitude(&[1, 0].into()).re, 0.6, epsilon = 1e-15);
        let refl = out.amplitude(&[0, 1].into());
        assert_abs_diff_eq!(refl.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(refl.im, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn hong_ou_mandel() {
        // (t a† + i r b†)(i r a† + t b†)|0,0⟩ = i r t (a†² + b†²)|0⟩ + (t² − r²) a†b†|0⟩
        // at t = r = 1/√2: (i/√2)(|2,0⟩ + |0,2⟩).
        let out = beam_splitter(
            &SparseState::basis([1, 1], 4).unwrap(),
            0,
            1,
            BeamSplitterParams::balanced(),
        )
        .unwrap();
        assert_eq!(out.amplitude(&[1, 1].into()), C64::default());
        for occ in [[2, 0], [0, 2]] {
            let a = out.amplitude(&occ.into());
            assert_abs_diff_eq!(a.re, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, FRAC_1_SQRT_2, epsilon = 1e-15);
        }
    }

    #[test]
    fn phase_examples() {
        let two = SparseState::basis([2], 4).unwrap();
        let out = phase_shift(&two, 0, PI / 2.0).unwrap();
        assert_abs_diff_eq!(out.amplitude(&[2].into()).re, -1.0, epsilon = 1e-15);
        assert_eq!(phase_shift(&two, 0, 0.0).unwrap(), two);
        let one = SparseState::basis([1], 4).unwrap();
        let out = phase_shift(&one, 0, PI).unwrap();
        assert_abs_diff_eq!(out.amplitude(&[1].into()).re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn loss_examples() {
        let s = make_state(2, [([1, 1], c(0.6, 0.0)), ([2, 0], c(0.0, 0.8))]).unwrap();
        let b = loss_channel(&s, 0, 1.0).unwrap();
        assert_eq!(b, vec![LossBranch { state: s, lost: 0 }]);

        let eta = 0.7;
        let b = loss_channel(&SparseState::basis([1], 4).unwrap(), 0, eta).unwrap();
        assert_eq!(b.len(), 2);
        assert_abs_diff_eq!(b[0].state.amplitude(&[1].into()).re, eta.sqrt(), epsilon = 1e-15);
        assert_eq!(b[1].lost, 1);
        assert_abs_diff_eq!(
            b[1].state.amplitude(&[0].into()).re,
            (1.0 - eta).sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn two_photon_loss_is_binomial() {
        let eta: f64 = 0.35;
        let b = loss_channel(&SparseState::basis([2], 4).unwrap(), 0, eta).unwrap();
        let w: Vec<f64> = b.iter().map(|x| x.state.norm_sqr()).collect();
        let expected = [eta * eta, 2.0 * eta * (1.0 - eta), (1.0 - eta).powi(2)];
        for (a, e) in w.iter().zip(expected) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-14);
        }
    }

    #[test]
    fn compile_examples() {
        assert_eq!(
            compile_mode_unitary(&Circuit::new(3)).unwrap(),
            ModeUnitary::identity(3)
        );
        let mut circ = Circuit::new(2);
        circ.bs(0, 1, FRAC_1_SQRT_2);
        let u = compile_mode_unitary(&circ).unwrap();
        let h = FRAC_1_SQRT_2;
        let expected = ModeUnitary::from_rows(&[vec![c(h, 0.0), c(0.0, h)], vec![c(0.0, h), c(h, 0.0)]]);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!((u.get(i, j) - expected.get(i, j)).norm(), 0.0, epsilon = 1e-15);
            }
        }
        circ.bs(0, 1, 0.3).ps(1, 0.4);
        let u = compile_mode_unitary(&circ).unwrap();
        assert!(u.unitarity_error() < 1e-10);

        circ.loss(0, 0.5);
        assert!(matches!(
            compile_mode_unitary(&circ),
            Err(Error::NonLinearElement("loss"))
        ));
    }

    #[test]
    fn permanent_small_cases() {
        let m = vec![vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(3.0, 0.0), c(4.0, 0.0)]];
        assert_eq!(permanent(&m), c(10.0, 0.0));
        let ones = vec![vec![c(1.0, 0.0); 4]; 4];
        assert_abs_diff_eq!(permanent(&ones).re, 24.0, epsilon = 1e-12);
    }

    #[test]
    fn permanent_oracle_examples() {
        let id = ModeUnitary::identity(2);
        let a = Occupation::new(&[1, 1]);
        let b = Occupation::new(&[2, 0]);
        assert_eq!(amplitude_via_permanent(&id, &a, &a).unwrap(), c(1.0, 0.0));
        assert_eq!(amplitude_via_permanent(&id, &a, &b).unwrap(), C64::default());

        let mut circ = Circuit::new(2);
        circ.bs(0, 1, FRAC_1_SQRT_2);
        let u = compile_mode_unitary(&circ).unwrap();
        assert!(amplitude_via_permanent(&u, &a, &a).unwrap().norm() < 1e-15);
        assert!(matches!(
            amplitude_via_permanent(&u, &a, &Occupation::new(&[1, 0])),
            Err(Error::PhotonNumberMismatch { .. })
        ));
    }
}
