//! Sparse multimode Fock states.
//!
//! A [`SparseState`] maps occupation vectors to complex amplitudes. States are
//! immutable values: every operation returns a new state. Terms are kept in
//! lexicographic order of their occupation vectors, which also fixes the order
//! of the JSON serialization.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Default bound on the total photon number of a state.
pub const DEFAULT_CUTOFF: usize = 4;

/// Amplitudes with magnitude below this are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Photon counts, one per mode.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(SmallVec<[u8; 16]>);

impl Occupation {
    pub fn new(counts: &[usize]) -> Self {
        Self(counts.iter().map(|&n| n as u8).collect())
    }

    pub fn vacuum(modes: usize) -> Self {
        Self(SmallVec::from_elem(0, modes))
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, mode: usize) -> usize {
        self.0[mode] as usize
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.0.iter().map(|&n| n as usize).collect()
    }

    /// Copy with mode `mode` set to `n`.
    pub fn with(&self, mode: usize, n: usize) -> Self {
        let mut out = self.clone();
        out.0[mode] = n as u8;
        out
    }

    pub(crate) fn set(&mut self, mode: usize, n: usize) {
        self.0[mode] = n as u8;
    }

    /// Keep only the listed modes, in the listed order.
    pub fn select(&self, modes: &[usize]) -> Self {
        Self(modes.iter().map(|&m| self.0[m]).collect())
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut out = self.0.clone();
        out.extend_from_slice(&other.0);
        Self(out)
    }
}

impl fmt::Debug for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

impl From<&[usize]> for Occupation {
    fn from(counts: &[usize]) -> Self {
        Self::new(counts)
    }
}

impl<const N: usize> From<[usize; N]> for Occupation {
    fn from(counts: [usize; N]) -> Self {
        Self::new(&counts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// A possibly unnormalized pure state over `modes` bosonic modes.
#[derive(Clone, PartialEq)]
pub struct SparseState {
    modes: usize,
    cutoff: usize,
    terms: BTreeMap<Occupation, C64>,
}

impl fmt::Debug for SparseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparseState[{} modes, cutoff {}] ", self.modes, self.cutoff)?;
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

impl SparseState {
    /// The zero vector.
    pub fn zero(modes: usize, cutoff: usize) -> Self {
        Self {
            modes,
            cutoff,
            terms: BTreeMap::new(),
        }
    }

    pub fn vacuum(modes: usize, cutoff: usize) -> Self {
        let mut s = Self::zero(modes, cutoff);
        s.terms.insert(Occupation::vacuum(modes), C64::new(1.0, 0.0));
        s
    }

    /// Build a state from explicit terms; duplicate occupations are summed.
    pub fn from_entries<I, O>(modes: usize, cutoff: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (O, C64)>,
        O: Into<Occupation>,
    {
        let mut s = Self::zero(modes, cutoff);
        for (occ, amp) in entries {
            let occ = occ.into();
            s.check_occupation(&occ)?;
            *s.terms.entry(occ).or_default() += amp;
        }
        s.prune();
        Ok(s)
    }

    /// A single basis vector.
    pub fn basis(occ: impl Into<Occupation>, cutoff: usize) -> Result<Self> {
        let occ = occ.into();
        Self::from_entries(occ.modes(), cutoff, [(occ, C64::new(1.0, 0.0))])
    }

    fn check_occupation(&self, occ: &Occupation) -> Result<()> {
        if occ.modes() != self.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                got: occ.modes(),
            });
        }
        let total = occ.total();
        if total > self.cutoff {
            return Err(Error::CutoffExceeded {
                total,
                cutoff: self.cutoff,
            });
        }
        Ok(())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes {
            return Err(Error::InvalidMode {
                mode,
                modes: self.modes,
            });
        }
        Ok(())
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
    }

    /// Assemble a state from raw terms that are already known to be in range.
    pub(crate) fn from_map(modes: usize, cutoff: usize, terms: BTreeMap<Occupation, C64>) -> Self {
        let mut s = Self { modes, cutoff, terms };
        s.prune();
        s
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in lexicographic occupation order.
    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &C64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, occ: &Occupation) -> C64 {
        self.terms.get(occ).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, a| acc + a.norm_sqr())
    }

    /// Largest total photon number among stored terms.
    pub fn max_photons(&self) -> usize {
        self.terms.keys().map(Occupation::total).max().unwrap_or(0)
    }

    /// Copy with a different cutoff. Fails if a stored term does not fit.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        let total = self.max_photons();
        if total > cutoff {
            return Err(Error::CutoffExceeded { total, cutoff });
        }
        Ok(Self {
            cutoff,
            ..self.clone()
        })
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let terms = self.terms.iter().map(|(k, a)| (k.clone(), a * factor)).collect();
        Self::from_map(self.modes, self.cutoff, terms)
    }

    /// Unit-norm copy; the zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(C64::new(1.0 / n, 0.0))
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: C64) -> Result<Self> {
        if other.modes != self.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                got: other.modes,
            });
        }
        let mut terms = self.terms.clone();
        for (k, a) in &other.terms {
            *terms.entry(k.clone()).or_default() += a * factor;
        }
        Ok(Self::from_map(self.modes, self.cutoff.max(other.cutoff), terms))
    }

    /// Apply the creation or annihilation operator of one mode.
    pub fn ladder(&self, mode: usize, dir: Ladder) -> Result<Self> {
        self.check_mode(mode)?;
        let mut terms = BTreeMap::new();
        for (occ, amp) in &self.terms {
            let n = occ.get(mode);
            match dir {
                Ladder::Raise => {
                    if occ.total() + 1 > self.cutoff {
                        return Err(Error::CutoffExceeded {
                            total: occ.total() + 1,
                            cutoff: self.cutoff,
                        });
                    }
                    let factor = ((n + 1) as f64).sqrt();
                    terms.insert(occ.with(mode, n + 1), amp * factor);
                }
                Ladder::Lower => {
                    if n > 0 {
                        terms.insert(occ.with(mode, n - 1), amp * (n as f64).sqrt());
                    }
                }
            }
        }
        Ok(Self::from_map(self.modes, self.cutoff, terms))
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.modes != other.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                got: other.modes,
            });
        }
        let (small, large, conj_small) = if self.terms.len() <= other.terms.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = C64::default();
        for (k, a) in &small.terms {
            if let Some(b) = large.terms.get(k) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        Ok(acc)
    }

    /// Tensor product; the modes of `other` follow the modes of `self`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let cutoff = self.cutoff.max(other.cutoff);
        let mut terms = BTreeMap::new();
        for (ka, a) in &self.terms {
            for (kb, b) in &other.terms {
                let total = ka.total() + kb.total();
                if total > cutoff {
                    return Err(Error::CutoffExceeded { total, cutoff });
                }
                terms.insert(ka.concat(kb), a * b);
            }
        }
        Ok(Self::from_map(self.modes + other.modes, cutoff, terms))
    }

    /// Place this state on `positions` of a larger `modes`-mode register with
    /// vacuum everywhere else.
    pub fn embed(&self, modes: usize, positions: &[usize], cutoff: usize) -> Result<Self> {
        if positions.len() != self.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                got: positions.len(),
            });
        }
        for &p in positions {
            if p >= modes {
                return Err(Error::InvalidMode { mode: p, modes });
            }
        }
        let mut terms = BTreeMap::new();
        for (occ, amp) in &self.terms {
            let total = occ.total();
            if total > cutoff {
                return Err(Error::CutoffExceeded { total, cutoff });
            }
            let mut big = Occupation::vacuum(modes);
            for (i, &p) in positions.iter().enumerate() {
                big.set(p, occ.get(i));
            }
            *terms.entry(big).or_default() += amp;
        }
        Ok(Self::from_map(modes, cutoff, terms))
    }

    /// Reorder modes so that new mode `i` is old mode `order[i]`.
    pub fn permute_modes(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.modes];
        if order.len() != self.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                got: order.len(),
            });
        }
        for &m in order {
            self.check_mode(m)?;
            seen[m] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidHerald("order is not a permutation".into()));
        }
        let terms = self.terms.iter().map(|(k, a)| (k.select(order), *a)).collect();
        Ok(Self::from_map(self.modes, self.cutoff, terms))
    }

    /// Apply `f` to every term; the closure returns replacement terms.
    pub(crate) fn flat_map<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&Occupation, C64, &mut dyn FnMut(Occupation, C64)),
    {
        let mut terms: BTreeMap<Occupation, C64> = BTreeMap::new();
        for (k, a) in &self.terms {
            f(k, *a, &mut |occ, amp| *terms.entry(occ).or_default() += amp);
        }
        Self::from_map(self.modes, self.cutoff, terms)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&StateRecord::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: StateRecord = serde_json::from_str(text)?;
        rec.try_into()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermRecord {
    pub occ: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

/// Wire form of a [`SparseState`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateRecord {
    pub modes: usize,
    pub cutoff: usize,
    pub terms: Vec<TermRecord>,
}

impl From<&SparseState> for StateRecord {
    fn from(s: &SparseState) -> Self {
        Self {
            modes: s.modes,
            cutoff: s.cutoff,
            terms: s
                .terms
                .iter()
                .map(|(k, a)| TermRecord {
                    occ: k.counts(),
                    re: a.re,
                    im: a.im,
                })
                .collect(),
        }
    }
}

impl TryFrom<StateRecord> for SparseState {
    type Error = Error;

    fn try_from(rec: StateRecord) -> Result<Self> {
        SparseState::from_entries(
            rec.modes,
            rec.cutoff,
            rec.terms
                .into_iter()
                .map(|t| (Occupation::new(&t.occ), C64::new(t.re, t.im))),
        )
    }
}

impl Serialize for SparseState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StateRecord::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SparseState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = StateRecord::deserialize(deserializer)?;
        rec.try_into().map_err(serde::de::Error::custom)
    }
}

/// `make_state` with the default cutoff.
pub fn make_state<O: Into<Occupation>>(
    modes: usize,
    entries: impl IntoIterator<Item = (O, C64)>,
) -> Result<SparseState> {
    SparseState::from_entries(modes, DEFAULT_CUTOFF, entries)
}

/// Amplitudes of a logical qubit, `a0|0⟩ + a1|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitAmplitudes {
    pub a0: C64,
    pub a1: C64,
}

impl QubitAmplitudes {
    pub fn new(a0: C64, a1: C64) -> Result<Self> {
        let n = a0.norm_sqr() + a1.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { a0, a1 })
    }

    pub fn real(a0: f64, a1: f64) -> Result<Self> {
        Self::new(C64::new(a0, 0.0), C64::new(a1, 0.0))
    }

    pub fn zero() -> Self {
        Self {
            a0: C64::new(1.0, 0.0),
            a1: C64::default(),
        }
    }

    pub fn one() -> Self {
        Self {
            a0: C64::default(),
            a1: C64::new(1.0, 0.0),
        }
    }

    /// Normalize an arbitrary non-zero pair.
    pub fn normalize(a0: C64, a1: C64) -> Self {
        let n = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        Self {
            a0: a0 / n,
            a1: a1 / n,
        }
    }

    /// One-mode state `a0|0⟩ + a1|1⟩`.
    pub fn single_rail(&self, cutoff: usize) -> SparseState {
        SparseState::from_map(
            1,
            cutoff,
            [(Occupation::new(&[0]), self.a0), (Occupation::new(&[1]), self.a1)]
                .into_iter()
                .collect(),
        )
    }

    /// Two-mode state `a0|1,0⟩ + a1|0,1⟩`: mode 0 carries logical 0.
    pub fn dual_rail(&self, cutoff: usize) -> SparseState {
        SparseState::from_map(
            2,
            cutoff,
            [
                (Occupation::new(&[1, 0]), self.a0),
                (Occupation::new(&[0, 1]), self.a1),
            ]
            .into_iter()
            .collect(),
        )
    }

    pub fn get(&self, bit: usize) -> C64 {
        if bit == 0 {
            self.a0
        } else {
            self.a1
        }
    }
}
