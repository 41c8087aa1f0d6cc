//! Sparse Fock states over labeled optical modes.
//!
//! A mode is a `(path, polarization, bin)` triple; a pure state is a map from
//! occupation vectors to complex amplitudes. Every linear-optical element
//! downstream reduces to [`FockState::apply_mode_unitary`], which rewrites
//! creation operators mode by mode,
//!
//! ```text
//!   a†_{m_j}  →  Σ_i  u[i][j] · a†_{m_i},
//! ```
//!
//! and restores the Fock normalization through the √n! factors picked up when
//! monomials of creation operators are converted back to number states. Terms
//! whose amplitude magnitude drops below [`PRUNE_TOLERANCE`] are discarded
//! after every operation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Largest photon number accepted when states are built.
pub const MAX_PHOTON_NUMBER: u32 = 6;

/// Amplitudes with magnitude below this are dropped after every operation.
pub const PRUNE_TOLERANCE: f64 = 1e-12;

/// Maximum allowed deviation of `U†U` from the identity.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Errors raised by Fock-state construction and manipulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("terms mix photon numbers ({0} and {1}); a FockState has a definite total")]
    MixedPhotonNumber(u32, u32),
    #[error("state has no terms above the pruning tolerance")]
    EmptyState,
    #[error("photon number {requested} exceeds the supported maximum {limit}")]
    PhotonLimit { requested: u32, limit: u32 },
    #[error("matrix is not unitary (max |U†U - I| entry {0:.3e})")]
    NonUnitary(f64),
    #[error("mode {0} listed twice in a unitary application")]
    DuplicateMode(ModeLabel),
    #[error("mode list has {modes} entries but the matrix is {dim}×{dim}")]
    DimensionMismatch { modes: usize, dim: usize },
    #[error("cannot normalize a state with zero norm")]
    ZeroNorm,
    #[error("tensor factors share mode {0}; factors must use disjoint modes")]
    OverlappingModes(ModeLabel),
    #[error("ensemble weight {0} is negative")]
    NegativeWeight(f64),
}

/// Optical paths of the table plus the four detector arms.
///
/// P1/P2 feed the input beam splitter, P3/P4 leave it, P4 enters the
/// interferometer whose arms are P5 (reflected, V) and P6 (transmitted, H),
/// and P7/P8 are the interferometer outputs. D1..D4 label the detector arms
/// behind the two secondary splitters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Path {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    D1,
    D2,
    D3,
    D4,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Linear polarization label. H transmits at the PBS, V reflects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    #[inline]
    pub fn other(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A single bosonic mode: where the photon is, how it is polarized, and which
/// temporal slot it occupies (bin 0 and bin 1 serve as the overlap slots t1
/// and t2 of the input-splitter model).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeLabel {
    pub path: Path,
    pub pol: Polarization,
    pub bin: u16,
}

impl ModeLabel {
    #[inline]
    pub const fn new(path: Path, pol: Polarization, bin: u16) -> Self {
        ModeLabel { path, pol, bin }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}@{}", self.path, self.pol, self.bin)
    }
}

/// Occupation numbers for a finite set of modes, kept sorted with zero counts
/// removed so equal states compare equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct OccupationVector(Vec<(ModeLabel, u8)>);

impl OccupationVector {
    /// The vacuum: no occupied modes.
    pub fn vacuum() -> Self {
        OccupationVector(Vec::new())
    }

    /// One photon in `mode`.
    pub fn single(mode: ModeLabel) -> Self {
        OccupationVector(vec![(mode, 1)])
    }

    /// Builds from (mode, count) pairs; duplicates are summed, zeros dropped.
    pub fn from_counts(counts: impl IntoIterator<Item = (ModeLabel, u8)>) -> Self {
        let mut map: BTreeMap<ModeLabel, u8> = BTreeMap::new();
        for (mode, n) in counts {
            if n > 0 {
                *map.entry(mode).or_insert(0) += n;
            }
        }
        OccupationVector(map.into_iter().collect())
    }

    #[inline]
    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    /// Total photon number.
    pub fn total(&self) -> u32 {
        self.0.iter().map(|&(_, n)| u32::from(n)).sum()
    }

    /// Photons in `mode` (zero if absent).
    pub fn count(&self, mode: ModeLabel) -> u8 {
        self.0
            .binary_search_by(|&(m, _)| m.cmp(&mode))
            .map(|idx| self.0[idx].1)
            .unwrap_or(0)
    }

    /// Photons on `path`, summed over polarizations and bins.
    pub fn path_total(&self, path: Path) -> u32 {
        self.0
            .iter()
            .filter(|&&(m, _)| m.path == path)
            .map(|&(_, n)| u32::from(n))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeLabel, u8)> + '_ {
        self.0.iter().copied()
    }

    /// Splits into the counts of `modes` (in their given order) and the
    /// occupation of everything else.
    fn split(&self, modes: &[ModeLabel]) -> (Vec<u8>, OccupationVector) {
        let listed: BTreeSet<ModeLabel> = modes.iter().copied().collect();
        let counts = modes.iter().map(|&m| self.count(m)).collect();
        let rest = OccupationVector(
            self.0
                .iter()
                .copied()
                .filter(|(m, _)| !listed.contains(m))
                .collect(),
        );
        (counts, rest)
    }

    /// Occupation with `counts[i]` photons added in `modes[i]`.
    fn with_counts(&self, modes: &[ModeLabel], counts: &[u8]) -> OccupationVector {
        OccupationVector::from_counts(
            self.iter()
                .chain(modes.iter().copied().zip(counts.iter().copied())),
        )
    }

    /// Drops the given modes entirely (used after a measurement has pinned
    /// their occupation).
    fn without_modes(&self, drop: &BTreeSet<ModeLabel>) -> OccupationVector {
        OccupationVector(
            self.0
                .iter()
                .copied()
                .filter(|(m, _)| !drop.contains(m))
                .collect(),
        )
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_vacuum() {
            return write!(f, "|vac⟩");
        }
        write!(f, "|")?;
        for (i, (mode, n)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}×{}", n, mode)?;
        }
        write!(f, "⟩")
    }
}

const FACTORIALS: [f64; 13] = [
    1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0, 362880.0, 3628800.0, 39916800.0,
    479001600.0,
];

#[inline]
fn factorial(n: u8) -> f64 {
    FACTORIALS[n as usize]
}

/// A d×d unitary acting on a list of modes, stored row-major. Column `j` is
/// the image of the j-th listed mode, so a single photon in mode j maps to
/// the superposition given by that column.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary {
    dim: usize,
    elems: Vec<Complex64>,
}

impl ModeUnitary {
    /// Validates `U†U = I` to [`UNITARITY_TOLERANCE`] and stores the matrix.
    pub fn new(dim: usize, elems: Vec<Complex64>) -> Result<Self, FockError> {
        assert_eq!(elems.len(), dim * dim, "row-major matrix length mismatch");
        let u = ModeUnitary { dim, elems };
        let mut worst = 0.0_f64;
        for i in 0..dim {
            for j in 0..dim {
                let mut dot = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    dot += u.at(k, i).conj() * u.at(k, j);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        if worst > UNITARITY_TOLERANCE {
            return Err(FockError::NonUnitary(worst));
        }
        Ok(u)
    }

    pub fn identity(dim: usize) -> Self {
        let mut elems = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            elems[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        ModeUnitary { dim, elems }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.elems[row * self.dim + col]
    }
}

/// All length-`parts` vectors of nonnegative integers summing to `total`,
/// in lexicographic order.
fn compositions(total: u8, parts: usize) -> Vec<Vec<u8>> {
    fn rec(total: u8, parts: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

#[inline]
fn multinomial(total: u8, parts: &[u8]) -> f64 {
    let mut denom = 1.0;
    for &k in parts {
        denom *= factorial(k);
    }
    factorial(total) / denom
}

/// A partial measurement outcome: exact counts for individual modes and/or
/// exact photon totals for whole paths.
#[derive(Clone, Debug, Default)]
pub struct ProjectionPattern {
    mode_counts: BTreeMap<ModeLabel, u8>,
    path_totals: BTreeMap<Path, u32>,
}

impl ProjectionPattern {
    pub fn new() -> Self {
        Self::default()
    }

    /// Requires exactly `count` photons in `mode` (zero pins the mode empty).
    pub fn with_mode(mut self, mode: ModeLabel, count: u8) -> Self {
        self.mode_counts.insert(mode, count);
        self
    }

    /// Requires exactly `total` photons on `path`, summed over its modes.
    pub fn with_path_total(mut self, path: Path, total: u32) -> Self {
        self.path_totals.insert(path, total);
        self
    }

    fn matches(&self, occ: &OccupationVector) -> bool {
        self.mode_counts
            .iter()
            .all(|(&mode, &n)| occ.count(mode) == n)
            && self
                .path_totals
                .iter()
                .all(|(&path, &n)| occ.path_total(path) == n)
    }

    fn constrains(&self, mode: ModeLabel) -> bool {
        self.mode_counts.contains_key(&mode) || self.path_totals.contains_key(&mode.path)
    }
}

/// A pure state with a definite total photon number: a sparse map from
/// occupation vectors to amplitudes. The vacuum (photon number 0, one term)
/// is a valid state.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    photons: u32,
    terms: BTreeMap<OccupationVector, Complex64>,
}

impl FockState {
    /// Builds a state from (occupation, amplitude) terms. Duplicate
    /// occupations are summed; sub-tolerance amplitudes are pruned. All terms
    /// must share one photon number, at most [`MAX_PHOTON_NUMBER`].
    pub fn new(
        terms: impl IntoIterator<Item = (OccupationVector, Complex64)>,
    ) -> Result<Self, FockError> {
        Self::with_limit(terms, MAX_PHOTON_NUMBER)
    }

    /// Like [`FockState::new`] with an explicit photon-number cap.
    pub fn with_limit(
        terms: impl IntoIterator<Item = (OccupationVector, Complex64)>,
        limit: u32,
    ) -> Result<Self, FockError> {
        let mut map: BTreeMap<OccupationVector, Complex64> = BTreeMap::new();
        for (occ, amp) in terms {
            *map.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        map.retain(|_, amp| amp.norm() > PRUNE_TOLERANCE);
        let mut photons: Option<u32> = None;
        for occ in map.keys() {
            let n = occ.total();
            match photons {
                None => photons = Some(n),
                Some(p) if p != n => return Err(FockError::MixedPhotonNumber(p, n)),
                _ => {}
            }
        }
        let photons = photons.ok_or(FockError::EmptyState)?;
        if photons > limit {
            return Err(FockError::PhotonLimit {
                requested: photons,
                limit,
            });
        }
        Ok(FockState {
            photons,
            terms: map,
        })
    }

    /// The vacuum state |vac⟩ with amplitude 1.
    pub fn vacuum() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(OccupationVector::vacuum(), Complex64::new(1.0, 0.0));
        FockState { photons: 0, terms }
    }

    /// The basis state |occ⟩ with amplitude 1.
    pub fn basis(occ: OccupationVector) -> Result<Self, FockError> {
        FockState::new([(occ, Complex64::new(1.0, 0.0))])
    }

    /// One photon in `mode`.
    pub fn single(mode: ModeLabel) -> Self {
        FockState::basis(OccupationVector::single(mode)).expect("single photon is valid")
    }

    #[inline]
    pub fn photon_number(&self) -> u32 {
        self.photons
    }

    #[inline]
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OccupationVector, Complex64)> + '_ {
        self.terms.iter().map(|(occ, &amp)| (occ, amp))
    }

    /// Amplitude of `occ` (zero if the term is absent).
    pub fn amplitude(&self, occ: &OccupationVector) -> Complex64 {
        self.terms
            .get(occ)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// All modes occupied in at least one term.
    pub fn occupied_modes(&self) -> BTreeSet<ModeLabel> {
        self.terms
            .keys()
            .flat_map(|occ| occ.iter().map(|(m, _)| m))
            .collect()
    }

    /// √⟨ψ|ψ⟩.
    pub fn norm(&self) -> f64 {
        self.terms
            .values()
            .map(|amp| amp.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Returns the state scaled to unit norm.
    pub fn normalized(&self) -> Result<Self, FockError> {
        let n = self.norm();
        if n <= PRUNE_TOLERANCE {
            return Err(FockError::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        FockState {
            photons: self.photons,
            terms: self
                .terms
                .iter()
                .map(|(occ, amp)| (occ.clone(), amp * factor))
                .collect(),
        }
    }

    /// Fixes the unobservable global phase by rotating the first term (in
    /// occupation order) to a real, positive amplitude.
    pub fn with_canonical_phase(&self) -> Self {
        match self.terms.values().next() {
            Some(first) if first.norm() > PRUNE_TOLERANCE => {
                self.scaled(first.conj() / first.norm())
            }
            _ => self.clone(),
        }
    }

    /// Largest amplitude difference against `other`, over the union of terms.
    pub fn max_term_difference(&self, other: &FockState) -> f64 {
        let mut occs: BTreeSet<&OccupationVector> = self.terms.keys().collect();
        occs.extend(other.terms.keys());
        occs.into_iter()
            .map(|occ| (self.amplitude(occ) - other.amplitude(occ)).norm())
            .fold(0.0, f64::max)
    }

    /// Tensor product with a state on disjoint modes.
    pub fn tensor(&self, other: &FockState) -> Result<Self, FockError> {
        let mine = self.occupied_modes();
        if let Some(&shared) = mine.intersection(&other.occupied_modes()).next() {
            return Err(FockError::OverlappingModes(shared));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (occ_a, amp_a) in self.terms() {
            for (occ_b, amp_b) in other.terms() {
                let joint = OccupationVector::from_counts(occ_a.iter().chain(occ_b.iter()));
                terms.push((joint, amp_a * amp_b));
            }
        }
        FockState::with_limit(terms, MAX_PHOTON_NUMBER.max(self.photons + other.photons))
    }

    /// Applies a d×d mode unitary to the listed modes.
    ///
    /// Each input term is expanded as a polynomial in creation operators:
    /// listed mode j with occupation n contributes `(Σ_i u[i][j] a†_{m_i})^n`,
    /// expanded with multinomial coefficients; unlisted modes pass through.
    /// Photon number and norm are preserved (the latter to floating-point
    /// accuracy, guaranteed by the unitarity check on `u`).
    pub fn apply_mode_unitary(
        &self,
        u: &ModeUnitary,
        modes: &[ModeLabel],
    ) -> Result<Self, FockError> {
        let d = u.dim();
        if modes.len() != d {
            return Err(FockError::DimensionMismatch {
                modes: modes.len(),
                dim: d,
            });
        }
        let mut seen = BTreeSet::new();
        for &m in modes {
            if !seen.insert(m) {
                return Err(FockError::DuplicateMode(m));
            }
        }

        let zero = Complex64::new(0.0, 0.0);
        let mut out: BTreeMap<OccupationVector, Complex64> = BTreeMap::new();
        for (occ, amp) in self.terms() {
            let (counts, rest) = occ.split(modes);
            // Coefficient of the creation-operator monomial for this term.
            let mut norm_in = 1.0;
            for &n in &counts {
                norm_in *= factorial(n);
            }
            let start = amp / norm_in.sqrt();

            // poly: exponent vector over the listed modes -> coefficient.
            let mut poly: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
            poly.insert(vec![0; d], start);
            for (j, &n_j) in counts.iter().enumerate() {
                if n_j == 0 {
                    continue;
                }
                let comps = compositions(n_j, d);
                let mut next: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
                for (exps, coeff) in &poly {
                    for comp in &comps {
                        let mut factor = *coeff * multinomial(n_j, comp);
                        for (i, &k) in comp.iter().enumerate() {
                            if k > 0 {
                                factor *= u.at(i, j).powi(i32::from(k));
                            }
                        }
                        if factor == zero {
                            continue;
                        }
                        let mut key = exps.clone();
                        for (e, &k) in key.iter_mut().zip(comp.iter()) {
                            *e += k;
                        }
                        *next.entry(key).or_insert(zero) += factor;
                    }
                }
                poly = next;
            }

            for (exps, coeff) in poly {
                let mut norm_out = 1.0;
                for &t in &exps {
                    norm_out *= factorial(t);
                }
                let occ_out = rest.with_counts(modes, &exps);
                *out.entry(occ_out).or_insert(zero) += coeff * norm_out.sqrt();
            }
        }
        out.retain(|_, amp| amp.norm() > PRUNE_TOLERANCE);
        if out.is_empty() {
            // Unitarity forbids this for a valid input state.
            return Err(FockError::EmptyState);
        }
        Ok(FockState {
            photons: self.photons,
            terms: out,
        })
    }

    /// Projects onto a partial measurement outcome.
    ///
    /// Returns the outcome probability and the renormalized post-measurement
    /// state. Measured modes are removed from the result when the measurement
    /// left them in a definite occupation (always true for `with_mode`
    /// constraints; true for `with_path_total` when only one distribution
    /// over the path's modes survives — otherwise those modes are retained,
    /// since the total alone does not collapse them). Probability 0 returns
    /// `(0.0, None)`.
    pub fn project(&self, pattern: &ProjectionPattern) -> (f64, Option<FockState>) {
        let total_sq: f64 = self.terms.values().map(|a| a.norm_sqr()).sum();
        let survivors: Vec<(&OccupationVector, Complex64)> = self
            .terms()
            .filter(|(occ, _)| pattern.matches(occ))
            .collect();
        let kept_sq: f64 = survivors.iter().map(|(_, a)| a.norm_sqr()).sum();
        if total_sq <= 0.0 || kept_sq / total_sq <= PRUNE_TOLERANCE * PRUNE_TOLERANCE {
            return (0.0, None);
        }
        let probability = kept_sq / total_sq;

        // Constrained modes may be dropped only if every surviving term
        // agrees on their occupation.
        let constrained: BTreeSet<ModeLabel> = survivors
            .iter()
            .flat_map(|(occ, _)| occ.iter().map(|(m, _)| m))
            .filter(|&m| pattern.constrains(m))
            .collect();
        let droppable: BTreeSet<ModeLabel> = constrained
            .into_iter()
            .filter(|&m| {
                let first = survivors[0].0.count(m);
                survivors.iter().all(|(occ, _)| occ.count(m) == first)
            })
            .collect();

        let scale = Complex64::new(1.0 / kept_sq.sqrt(), 0.0);
        let mut terms = BTreeMap::new();
        let mut photons = 0;
        for (occ, amp) in survivors {
            let reduced = occ.without_modes(&droppable);
            photons = reduced.total();
            terms.insert(reduced, amp * scale);
        }
        (
            probability,
            Some(FockState {
                photons,
                terms,
            }),
        )
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (occ, amp)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)·{}", amp.re, amp.im, occ)?;
        }
        Ok(())
    }
}

/// A classical mixture of pure states: (weight, state) pairs.
///
/// Weights are nonnegative and sum to at most 1 (lossless operations keep the
/// sum exactly; polarizers and dropped zero-probability branches shrink it).
#[derive(Clone, Debug, Default)]
pub struct StateEnsemble {
    members: Vec<(f64, FockState)>,
}

impl StateEnsemble {
    pub fn new() -> Self {
        Self::default()
    }

    /// A single pure state with weight 1.
    pub fn pure(state: FockState) -> Self {
        StateEnsemble {
            members: vec![(1.0, state)],
        }
    }

    /// Adds a member; weights below the pruning tolerance are dropped.
    pub fn push(&mut self, weight: f64, state: FockState) -> Result<(), FockError> {
        if weight < 0.0 {
            return Err(FockError::NegativeWeight(weight));
        }
        if weight > PRUNE_TOLERANCE {
            self.members.push((weight, state));
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &FockState)> + '_ {
        self.members.iter().map(|(w, s)| (*w, s))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.members.iter().map(|(w, _)| w).sum()
    }

    /// Applies a pure-state map to every member, keeping weights.
    pub fn map_states<E>(
        &self,
        mut f: impl FnMut(&FockState) -> Result<FockState, E>,
    ) -> Result<StateEnsemble, E> {
        let mut members = Vec::with_capacity(self.members.len());
        for (w, s) in &self.members {
            members.push((*w, f(s)?));
        }
        Ok(StateEnsemble { members })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mode(path: Path, pol: Polarization) -> ModeLabel {
        ModeLabel::new(path, pol, 0)
    }

    fn splitter_5050() -> ModeUnitary {
        let t = c(FRAC_1_SQRT_2, 0.0);
        let r = c(0.0, FRAC_1_SQRT_2);
        ModeUnitary::new(2, vec![t, r, r, t]).unwrap()
    }

    #[test]
    fn occupation_vector_canonicalizes() {
        let a = mode(Path::P1, Polarization::H);
        let b = mode(Path::P2, Polarization::V);
        let occ = OccupationVector::from_counts([(b, 1), (a, 1), (a, 1), (b, 0)]);
        assert_eq!(occ.count(a), 2);
        assert_eq!(occ.count(b), 1);
        assert_eq!(occ.total(), 3);
        let same = OccupationVector::from_counts([(a, 2), (b, 1)]);
        assert_eq!(occ, same);
    }

    #[test]
    fn mixed_photon_numbers_are_rejected() {
        let a = mode(Path::P1, Polarization::H);
        let err = FockState::new([
            (OccupationVector::single(a), c(FRAC_1_SQRT_2, 0.0)),
            (OccupationVector::from_counts([(a, 2)]), c(FRAC_1_SQRT_2, 0.0)),
        ])
        .unwrap_err();
        assert_eq!(err, FockError::MixedPhotonNumber(1, 2));
    }

    #[test]
    fn empty_and_overlimit_states_are_rejected() {
        assert_eq!(
            FockState::new(std::iter::empty()).unwrap_err(),
            FockError::EmptyState
        );
        let a = mode(Path::P1, Polarization::H);
        let err = FockState::new([(OccupationVector::from_counts([(a, 7)]), c(1.0, 0.0))])
            .unwrap_err();
        assert_eq!(
            err,
            FockError::PhotonLimit {
                requested: 7,
                limit: MAX_PHOTON_NUMBER
            }
        );
    }

    #[test]
    fn single_photon_maps_to_matrix_column() {
        let a = mode(Path::P1, Polarization::H);
        let b = mode(Path::P2, Polarization::H);
        let out = FockState::single(a)
            .apply_mode_unitary(&splitter_5050(), &[a, b])
            .unwrap();
        assert_abs_diff_eq!(
            out.amplitude(&OccupationVector::single(a)).re,
            FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            out.amplitude(&OccupationVector::single(b)).im,
            FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_photons_bunch_at_a_balanced_splitter() {
        // |1,1⟩ → i(|2,0⟩ + |0,2⟩)/√2: the coincidence amplitude cancels.
        let a = mode(Path::P1, Polarization::H);
        let b = mode(Path::P2, Polarization::H);
        let input = FockState::basis(OccupationVector::from_counts([(a, 1), (b, 1)])).unwrap();
        let out = input.apply_mode_unitary(&splitter_5050(), &[a, b]).unwrap();

        let both_a = OccupationVector::from_counts([(a, 2)]);
        let both_b = OccupationVector::from_counts([(b, 2)]);
        let split = OccupationVector::from_counts([(a, 1), (b, 1)]);
        assert_abs_diff_eq!(out.amplitude(&both_a).im, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitude(&both_b).im, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitude(&split).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn applying_the_balanced_splitter_twice_swaps_modes_up_to_i() {
        let a = mode(Path::P1, Polarization::H);
        let b = mode(Path::P2, Polarization::H);
        let u = splitter_5050();
        let input = FockState::new([
            (OccupationVector::from_counts([(a, 2)]), c(0.6, 0.0)),
            (OccupationVector::from_counts([(a, 1), (b, 1)]), c(0.0, 0.8)),
        ])
        .unwrap();
        let twice = input
            .apply_mode_unitary(&u, &[a, b])
            .unwrap()
            .apply_mode_unitary(&u, &[a, b])
            .unwrap();
        // Swap a↔b and multiply by the global phase i (squared for 2 photons).
        let swapped = FockState::new([
            (OccupationVector::from_counts([(b, 2)]), c(0.6, 0.0) * c(0.0, 1.0).powi(2)),
            (
                OccupationVector::from_counts([(a, 1), (b, 1)]),
                c(0.0, 0.8) * c(0.0, 1.0).powi(2),
            ),
        ])
        .unwrap();
        assert!(twice.max_term_difference(&swapped) < 1e-12);
    }

    #[test]
    fn nonunitary_matrices_are_rejected() {
        let err = ModeUnitary::new(2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)])
            .unwrap_err();
        match err {
            FockError::NonUnitary(dev) => assert!(dev > 0.5),
            other => panic!("expected NonUnitary, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_modes_are_rejected() {
        let a = mode(Path::P1, Polarization::H);
        let err = FockState::single(a)
            .apply_mode_unitary(&splitter_5050(), &[a, a])
            .unwrap_err();
        assert_eq!(err, FockError::DuplicateMode(a));
    }

    #[test]
    fn projection_splits_a_bell_state() {
        // (|H⟩|H⟩ + |V⟩|V⟩)/√2, measured as H on P1 → (1/2, |H⟩ on P2).
        let p1h = mode(Path::P1, Polarization::H);
        let p1v = mode(Path::P1, Polarization::V);
        let p2h = mode(Path::P2, Polarization::H);
        let p2v = mode(Path::P2, Polarization::V);
        let bell = FockState::new([
            (
                OccupationVector::from_counts([(p1h, 1), (p2h, 1)]),
                c(FRAC_1_SQRT_2, 0.0),
            ),
            (
                OccupationVector::from_counts([(p1v, 1), (p2v, 1)]),
                c(FRAC_1_SQRT_2, 0.0),
            ),
        ])
        .unwrap();
        let pattern = ProjectionPattern::new().with_mode(p1h, 1).with_mode(p1v, 0);
        let (prob, rest) = bell.project(&pattern);
        assert_abs_diff_eq!(prob, 0.5, epsilon = 1e-12);
        let rest = rest.unwrap();
        assert_eq!(rest.photon_number(), 1);
        assert_abs_diff_eq!(
            rest.amplitude(&OccupationVector::single(p2h)).re,
            1.0,
            epsilon = 1e-12
        );

        // Impossible outcome: both polarizations at once.
        let bad = ProjectionPattern::new().with_mode(p1h, 1).with_mode(p1v, 1);
        let (prob, rest) = bell.project(&bad);
        assert_eq!(prob, 0.0);
        assert!(rest.is_none());
    }

    #[test]
    fn projection_keeps_indefinite_measured_modes() {
        // Measuring only the *total* on P1 must not merge distinct P1 modes.
        let p1h = mode(Path::P1, Polarization::H);
        let p1v = mode(Path::P1, Polarization::V);
        let p2h = mode(Path::P2, Polarization::H);
        let p2v = mode(Path::P2, Polarization::V);
        let bell = FockState::new([
            (
                OccupationVector::from_counts([(p1h, 1), (p2h, 1)]),
                c(FRAC_1_SQRT_2, 0.0),
            ),
            (
                OccupationVector::from_counts([(p1v, 1), (p2v, 1)]),
                c(FRAC_1_SQRT_2, 0.0),
            ),
        ])
        .unwrap();
        let (prob, rest) = bell.project(&ProjectionPattern::new().with_path_total(Path::P1, 1));
        assert_abs_diff_eq!(prob, 1.0, epsilon = 1e-12);
        // Both P1 modes survive: the projection was not informative enough
        // to factor them out.
        assert_eq!(rest.unwrap().photon_number(), 2);
    }

    #[test]
    fn projection_probabilities_are_complete() {
        let a = mode(Path::P1, Polarization::H);
        let b = mode(Path::P2, Polarization::H);
        let out = FockState::basis(OccupationVector::from_counts([(a, 1), (b, 1)]))
            .unwrap()
            .apply_mode_unitary(&splitter_5050(), &[a, b])
            .unwrap();
        let mut total = 0.0;
        for n in 0..=2_u32 {
            let (p, _) = out.project(
                &ProjectionPattern::new()
                    .with_path_total(Path::P1, n)
                    .with_path_total(Path::P2, 2 - n),
            );
            total += p;
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tensor_requires_disjoint_modes() {
        let a = FockState::single(mode(Path::P1, Polarization::H));
        let b = FockState::single(mode(Path::P2, Polarization::H));
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.photon_number(), 2);
        assert_eq!(
            a.tensor(&a).unwrap_err(),
            FockError::OverlappingModes(mode(Path::P1, Polarization::H))
        );
    }

    #[test]
    fn canonical_phase_rotates_first_amplitude_positive() {
        let a = mode(Path::P1, Polarization::H);
        let b = mode(Path::P2, Polarization::H);
        let state = FockState::new([
            (OccupationVector::single(a), c(0.0, -FRAC_1_SQRT_2)),
            (OccupationVector::single(b), c(FRAC_1_SQRT_2, 0.0)),
        ])
        .unwrap();
        let canon = state.with_canonical_phase();
        let first = canon.amplitude(&OccupationVector::single(a));
        assert_abs_diff_eq!(first.re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(first.im, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(canon.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ensemble_bookkeeping() {
        let mut ens = StateEnsemble::new();
        ens.push(0.5, FockState::single(mode(Path::P1, Polarization::H)))
            .unwrap();
        ens.push(0.5, FockState::single(mode(Path::P1, Polarization::V)))
            .unwrap();
        assert_abs_diff_eq!(ens.total_weight(), 1.0, epsilon = 1e-12);
        assert_eq!(ens.len(), 2);
        assert!(ens.push(-0.1, FockState::vacuum()).is_err());
        // Zero-weight members are silently dropped.
        ens.push(0.0, FockState::vacuum()).unwrap();
        assert_eq!(ens.len(), 2);
    }
}
