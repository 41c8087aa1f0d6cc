//! Optical elements as mode transformations, and ordered circuits of them.
//!
//! Sign conventions, fixed once for the whole crate:
//!
//! * Beam splitter with transmissivity T: transmitted amplitude √T, reflected
//!   amplitude i√(1−T). The balanced splitter is `[[1, i], [i, 1]]/√2`;
//!   applying it twice equals a mode swap times the global phase i.
//! * PBS: a pure relabeling — H sub-modes move to the transmit path, V
//!   sub-modes to the reflect path, with no reflection phase.
//! * Half-wave plate at angle θ: the Jones matrix
//!   `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]` (H↔V at 45°, V → −V at 0°).
//! * Phase delay: a photon on the delayed path acquires `e^{+i·2π·ΔL/λ}`,
//!   positive ΔL meaning a longer path.
//!
//! Every element acts identically and independently on each
//! (polarization, bin) sub-mode, so all applications reduce to small
//! [`ModeUnitary`] calls per sub-mode pair — except the phase delay, which is
//! diagonal and applied term-by-term, and the polarizer, which is a
//! renormalizing projection reporting its pass probability.

use std::collections::BTreeSet;

use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{
    FockError, FockState, ModeLabel, ModeUnitary, Path, Polarization, ProjectionPattern,
    StateEnsemble,
};
use crate::spectral::SpectralModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElementError {
    #[error("element references path {0} absent from the circuit registry")]
    UnregisteredPath(Path),
    #[error("beam splitter ports must be either in-place or fully remapped: {0}")]
    BadPortMap(String),
    #[error("transmissivity must lie in [0,1], got {0}")]
    BadTransmissivity(f64),
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// One element of the table.
#[derive(Debug, Clone, PartialEq)]
pub enum OpticalElement {
    /// 2-port beam splitter. Input ports (in_a, in_b) map to output ports
    /// (out_a, out_b); the output pair either equals the input pair
    /// (mixing in place) or is disjoint from it (mixing while rerouting,
    /// e.g. P1,P2 → P3,P4).
    BeamSplitter {
        in_a: Path,
        in_b: Path,
        out_a: Path,
        out_b: Path,
        transmissivity: f64,
    },
    /// Polarizing beam splitter: H transmits to `out_transmit`, V reflects
    /// to `out_reflect`.
    PolarizingBeamSplitter {
        input: Path,
        out_transmit: Path,
        out_reflect: Path,
    },
    /// Half-wave plate at `angle_rad` on one path.
    HalfWavePlate { path: Path, angle_rad: f64 },
    /// Extra path length in μm on one path (positive = longer).
    PhaseDelay { path: Path, delta_l_um: f64 },
    /// Linear polarizer at `angle_rad` from H on one path (projective).
    Polarizer { path: Path, angle_rad: f64 },
}

impl OpticalElement {
    /// Balanced beam splitter mixing two paths in place.
    pub fn balanced_bs(a: Path, b: Path) -> Self {
        OpticalElement::BeamSplitter {
            in_a: a,
            in_b: b,
            out_a: a,
            out_b: b,
            transmissivity: 0.5,
        }
    }

    /// Balanced beam splitter consuming (in_a, in_b) and producing
    /// (out_a, out_b).
    pub fn routed_bs(in_a: Path, in_b: Path, out_a: Path, out_b: Path) -> Self {
        OpticalElement::BeamSplitter {
            in_a,
            in_b,
            out_a,
            out_b,
            transmissivity: 0.5,
        }
    }

    /// Paths the element touches.
    pub fn paths(&self) -> Vec<Path> {
        match *self {
            OpticalElement::BeamSplitter {
                in_a,
                in_b,
                out_a,
                out_b,
                ..
            } => vec![in_a, in_b, out_a, out_b],
            OpticalElement::PolarizingBeamSplitter {
                input,
                out_transmit,
                out_reflect,
            } => vec![input, out_transmit, out_reflect],
            OpticalElement::HalfWavePlate { path, .. }
            | OpticalElement::PhaseDelay { path, .. }
            | OpticalElement::Polarizer { path, .. } => vec![path],
        }
    }
}

/// Sub-mode (polarization, bin) pairs occupied anywhere in the state on the
/// given paths; elements act on each pair independently.
fn occupied_submodes(state: &FockState, paths: &[Path]) -> BTreeSet<(Polarization, u16)> {
    state
        .occupied_modes()
        .into_iter()
        .filter(|m| paths.contains(&m.path))
        .map(|m| (m.pol, m.bin))
        .collect()
}

/// Applies a beam splitter to every occupied sub-mode on its ports.
pub fn bs_apply(
    state: &FockState,
    in_a: Path,
    in_b: Path,
    out_a: Path,
    out_b: Path,
    transmissivity: f64,
) -> Result<FockState, ElementError> {
    if !(0.0..=1.0).contains(&transmissivity) {
        return Err(ElementError::BadTransmissivity(transmissivity));
    }
    let t = Complex64::new(transmissivity.sqrt(), 0.0);
    let r = Complex64::new(0.0, (1.0 - transmissivity).sqrt());
    let zero = Complex64::new(0.0, 0.0);

    let in_place = (in_a, in_b) == (out_a, out_b);
    let disjoint = in_a != out_a && in_a != out_b && in_b != out_a && in_b != out_b;
    if !in_place && !disjoint {
        return Err(ElementError::BadPortMap(format!(
            "inputs ({in_a}, {in_b}) partially overlap outputs ({out_a}, {out_b})"
        )));
    }

    let mut out = state.clone();
    for (pol, bin) in occupied_submodes(state, &[in_a, in_b]) {
        let m_in_a = ModeLabel::new(in_a, pol, bin);
        let m_in_b = ModeLabel::new(in_b, pol, bin);
        if in_place {
            let u = ModeUnitary::new(2, vec![t, r, r, t])?;
            out = out.apply_mode_unitary(&u, &[m_in_a, m_in_b])?;
        } else {
            // Columns are the images of the listed modes: each input feeds
            // the outputs, and (to stay unitary) the never-occupied output
            // modes feed back to the inputs.
            let m_out_a = ModeLabel::new(out_a, pol, bin);
            let m_out_b = ModeLabel::new(out_b, pol, bin);
            #[rustfmt::skip]
            let u = ModeUnitary::new(4, vec![
                zero, zero, t,    r,
                zero, zero, r,    t,
                t,    r,    zero, zero,
                r,    t,    zero, zero,
            ])?;
            out = out.apply_mode_unitary(&u, &[m_in_a, m_in_b, m_out_a, m_out_b])?;
        }
    }
    Ok(out)
}

/// Routes H sub-modes to `out_transmit` and V sub-modes to `out_reflect`.
pub fn pbs_apply(
    state: &FockState,
    input: Path,
    out_transmit: Path,
    out_reflect: Path,
) -> Result<FockState, ElementError> {
    let swap = ModeUnitary::new(
        2,
        vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    )?;
    let mut out = state.clone();
    for (pol, bin) in occupied_submodes(state, &[input]) {
        let dest = match pol {
            Polarization::H => out_transmit,
            Polarization::V => out_reflect,
        };
        if dest == input {
            continue;
        }
        let from = ModeLabel::new(input, pol, bin);
        let to = ModeLabel::new(dest, pol, bin);
        out = out.apply_mode_unitary(&swap, &[from, to])?;
    }
    Ok(out)
}

/// Jones rotation of a half-wave plate at `angle_rad`, per bin on one path.
pub fn hwp_apply(state: &FockState, path: Path, angle_rad: f64) -> Result<FockState, ElementError> {
    let c = Complex64::new((2.0 * angle_rad).cos(), 0.0);
    let s = Complex64::new((2.0 * angle_rad).sin(), 0.0);
    let u = ModeUnitary::new(2, vec![c, s, s, -c])?;
    let bins: BTreeSet<u16> = occupied_submodes(state, &[path])
        .into_iter()
        .map(|(_, bin)| bin)
        .collect();
    let mut out = state.clone();
    for bin in bins {
        let h = ModeLabel::new(path, Polarization::H, bin);
        let v = ModeLabel::new(path, Polarization::V, bin);
        out = out.apply_mode_unitary(&u, &[h, v])?;
    }
    Ok(out)
}

/// Every photon on `path` acquires `e^{i·2π·ΔL/λ_bin}`; the spectral model
/// supplies each bin's wavelength (the center wavelength here, since bins are
/// temporal slots).
pub fn phase_delay_apply(
    state: &FockState,
    path: Path,
    delta_l_um: f64,
    spectral: &SpectralModel,
) -> Result<FockState, ElementError> {
    let mut terms = Vec::with_capacity(state.term_count());
    for (occ, amp) in state.terms() {
        let mut phase = 0.0;
        for (mode, n) in occ.iter() {
            if mode.path == path {
                let lambda = spectral.bin_wavelength_um(mode.bin);
                phase += f64::from(n) * std::f64::consts::TAU * delta_l_um / lambda;
            }
        }
        terms.push((occ.clone(), amp * Complex64::new(0.0, phase).exp()));
    }
    FockState::new(terms).map_err(ElementError::from)
}

/// Projects every photon on `path` onto the polarization axis at `angle_rad`
/// from H. Returns the pass probability and the renormalized state; nothing
/// passing yields `(0.0, None)`.
pub fn polarizer_apply(
    state: &FockState,
    path: Path,
    angle_rad: f64,
) -> Result<(f64, Option<FockState>), ElementError> {
    let bins: BTreeSet<u16> = occupied_submodes(state, &[path])
        .into_iter()
        .map(|(_, bin)| bin)
        .collect();
    if bins.is_empty() {
        return Ok((1.0, Some(state.clone())));
    }

    let c = Complex64::new(angle_rad.cos(), 0.0);
    let s = Complex64::new(angle_rad.sin(), 0.0);
    // Rotation sending the polarizer axis to H (columns: images of H and V).
    let to_axis = ModeUnitary::new(2, vec![c, s, -s, c])?;
    // Its inverse, restoring the axis orientation afterwards.
    let from_axis = ModeUnitary::new(2, vec![c, -s, s, c])?;

    let mut rotated = state.clone();
    let mut pattern = ProjectionPattern::new();
    for &bin in &bins {
        let h = ModeLabel::new(path, Polarization::H, bin);
        let v = ModeLabel::new(path, Polarization::V, bin);
        rotated = rotated.apply_mode_unitary(&to_axis, &[h, v])?;
        pattern = pattern.with_mode(v, 0);
    }
    let (probability, projected) = rotated.project(&pattern);
    let Some(projected) = projected else {
        return Ok((0.0, None));
    };
    let mut back = projected;
    for &bin in &bins {
        let h = ModeLabel::new(path, Polarization::H, bin);
        let v = ModeLabel::new(path, Polarization::V, bin);
        back = back.apply_mode_unitary(&from_axis, &[h, v])?;
    }
    Ok((probability, Some(back)))
}

/// An ordered element list over a declared set of paths.
#[derive(Debug, Clone)]
pub struct Circuit {
    registry: BTreeSet<Path>,
    elements: Vec<OpticalElement>,
}

impl Circuit {
    /// Validates that every element only references registered paths.
    pub fn new(
        registry: impl IntoIterator<Item = Path>,
        elements: Vec<OpticalElement>,
    ) -> Result<Self, ElementError> {
        let registry: BTreeSet<Path> = registry.into_iter().collect();
        for element in &elements {
            for path in element.paths() {
                if !registry.contains(&path) {
                    return Err(ElementError::UnregisteredPath(path));
                }
            }
        }
        Ok(Circuit { registry, elements })
    }

    pub fn elements(&self) -> &[OpticalElement] {
        &self.elements
    }

    pub fn registry(&self) -> &BTreeSet<Path> {
        &self.registry
    }

    /// Applies one element to a pure state. The polarizer returns its pass
    /// probability; all other elements pass probability 1.
    pub fn apply_element(
        element: &OpticalElement,
        state: &FockState,
        spectral: &SpectralModel,
    ) -> Result<(f64, Option<FockState>), ElementError> {
        match *element {
            OpticalElement::BeamSplitter {
                in_a,
                in_b,
                out_a,
                out_b,
                transmissivity,
            } => Ok((
                1.0,
                Some(bs_apply(state, in_a, in_b, out_a, out_b, transmissivity)?),
            )),
            OpticalElement::PolarizingBeamSplitter {
                input,
                out_transmit,
                out_reflect,
            } => Ok((1.0, Some(pbs_apply(state, input, out_transmit, out_reflect)?))),
            OpticalElement::HalfWavePlate { path, angle_rad } => {
                Ok((1.0, Some(hwp_apply(state, path, angle_rad)?)))
            }
            OpticalElement::PhaseDelay { path, delta_l_um } => Ok((
                1.0,
                Some(phase_delay_apply(state, path, delta_l_um, spectral)?),
            )),
            OpticalElement::Polarizer { path, angle_rad } => {
                polarizer_apply(state, path, angle_rad)
            }
        }
    }

    /// Applies the whole circuit to every ensemble member in order, scaling
    /// member weights by polarizer pass probabilities and dropping members
    /// that are fully absorbed.
    pub fn apply(
        &self,
        input: &StateEnsemble,
        spectral: &SpectralModel,
    ) -> Result<StateEnsemble, ElementError> {
        let mut out = StateEnsemble::new();
        'members: for (weight, state) in input.iter() {
            let mut weight = weight;
            let mut state = state.clone();
            for element in &self.elements {
                let (pass, next) = Self::apply_element(element, &state, spectral)?;
                weight *= pass;
                match next {
                    Some(next) => state = next,
                    None => continue 'members,
                }
            }
            out.push(weight, state)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::fock::OccupationVector;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mode(path: Path, pol: Polarization, bin: u16) -> ModeLabel {
        ModeLabel::new(path, pol, bin)
    }

    fn mono() -> SpectralModel {
        SpectralModel::disabled(810.0)
    }

    fn plus45(path: Path) -> FockState {
        FockState::new([
            (
                OccupationVector::single(mode(path, Polarization::H, 0)),
                c(FRAC_1_SQRT_2, 0.0),
            ),
            (
                OccupationVector::single(mode(path, Polarization::V, 0)),
                c(FRAC_1_SQRT_2, 0.0),
            ),
        ])
        .unwrap()
    }

    #[test]
    fn routed_bs_sends_single_photon_to_both_outputs() {
        let input = FockState::single(mode(Path::P1, Polarization::H, 0));
        let out = bs_apply(&input, Path::P1, Path::P2, Path::P3, Path::P4, 0.5).unwrap();
        let p3 = OccupationVector::single(mode(Path::P3, Polarization::H, 0));
        let p4 = OccupationVector::single(mode(Path::P4, Polarization::H, 0));
        assert_abs_diff_eq!(out.amplitude(&p3).re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitude(&p4).im, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bs_rejects_partial_port_overlap_and_bad_transmissivity() {
        let input = FockState::single(mode(Path::P1, Polarization::H, 0));
        assert!(matches!(
            bs_apply(&input, Path::P1, Path::P2, Path::P2, Path::P3, 0.5),
            Err(ElementError::BadPortMap(_))
        ));
        assert!(matches!(
            bs_apply(&input, Path::P1, Path::P2, Path::P1, Path::P2, 1.5),
            Err(ElementError::BadTransmissivity(_))
        ));
    }

    #[test]
    fn bs_bunches_identical_bins_but_not_orthogonal_ones() {
        // Same bin on both inputs: coincidence amplitude cancels.
        let same = FockState::basis(OccupationVector::from_counts([
            (mode(Path::P1, Polarization::H, 0), 1),
            (mode(Path::P2, Polarization::H, 0), 1),
        ]))
        .unwrap();
        let out = bs_apply(&same, Path::P1, Path::P2, Path::P3, Path::P4, 0.5).unwrap();
        let one_each = OccupationVector::from_counts([
            (mode(Path::P3, Polarization::H, 0), 1),
            (mode(Path::P4, Polarization::H, 0), 1),
        ]);
        assert_abs_diff_eq!(out.amplitude(&one_each).norm(), 0.0, epsilon = 1e-12);

        // Orthogonal bins: photons act independently; one-per-port mass 1/2.
        let distinct = FockState::basis(OccupationVector::from_counts([
            (mode(Path::P1, Polarization::H, 0), 1),
            (mode(Path::P2, Polarization::H, 1), 1),
        ]))
        .unwrap();
        let out = bs_apply(&distinct, Path::P1, Path::P2, Path::P3, Path::P4, 0.5).unwrap();
        let mut split_mass = 0.0;
        for (occ, amp) in out.terms() {
            if occ.path_total(Path::P3) == 1 && occ.path_total(Path::P4) == 1 {
                split_mass += amp.norm_sqr();
            }
        }
        assert_abs_diff_eq!(split_mass, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pbs_splits_45_degree_light() {
        let out = pbs_apply(&plus45(Path::P4), Path::P4, Path::P6, Path::P5).unwrap();
        let v5 = OccupationVector::single(mode(Path::P5, Polarization::V, 0));
        let h6 = OccupationVector::single(mode(Path::P6, Polarization::H, 0));
        assert_abs_diff_eq!(out.amplitude(&v5).re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitude(&h6).re, FRAC_1_SQRT_2, epsilon = 1e-12);

        // |H⟩ passes straight through to the transmit port.
        let h_in = FockState::single(mode(Path::P4, Polarization::H, 0));
        let out = pbs_apply(&h_in, Path::P4, Path::P6, Path::P5).unwrap();
        assert_abs_diff_eq!(
            out.amplitude(&OccupationVector::single(mode(Path::P6, Polarization::H, 0)))
                .re,
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hwp_conventions() {
        // 45°: H ↔ V.
        let h = FockState::single(mode(Path::P6, Polarization::H, 0));
        let out = hwp_apply(&h, Path::P6, FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(
            out.amplitude(&OccupationVector::single(mode(Path::P6, Polarization::V, 0)))
                .re,
            1.0,
            epsilon = 1e-12
        );
        // 0°: V → −V.
        let v = FockState::single(mode(Path::P6, Polarization::V, 0));
        let out = hwp_apply(&v, Path::P6, 0.0).unwrap();
        assert_abs_diff_eq!(
            out.amplitude(&OccupationVector::single(mode(Path::P6, Polarization::V, 0)))
                .re,
            -1.0,
            epsilon = 1e-12
        );
        // 22.5°: H → (H+V)/√2.
        let out = hwp_apply(&h, Path::P6, FRAC_PI_4 / 2.0).unwrap();
        assert_abs_diff_eq!(
            out.amplitude(&OccupationVector::single(mode(Path::P6, Polarization::H, 0)))
                .re,
            FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            out.amplitude(&OccupationVector::single(mode(Path::P6, Polarization::V, 0)))
                .re,
            FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hwp_at_45_is_an_involution() {
        let state = plus45(Path::P6);
        let twice = hwp_apply(
            &hwp_apply(&state, Path::P6, FRAC_PI_4).unwrap(),
            Path::P6,
            FRAC_PI_4,
        )
        .unwrap();
        assert!(twice.max_term_difference(&state) < 1e-12);
    }

    #[test]
    fn phase_delay_full_half_and_quarter_period() {
        let spectral = mono();
        let lambda = spectral.lambda0_um();
        let noon1 = FockState::new([
            (
                OccupationVector::single(mode(Path::P5, Polarization::V, 0)),
                c(FRAC_1_SQRT_2, 0.0),
            ),
            (
                OccupationVector::single(mode(Path::P6, Polarization::V, 0)),
                c(FRAC_1_SQRT_2, 0.0),
            ),
        ])
        .unwrap();

        // Full period: identity.
        let full = phase_delay_apply(&noon1, Path::P5, lambda, &spectral).unwrap();
        assert!(full.max_term_difference(&noon1) < 1e-12);

        // Half period: relative sign −1 on the delayed arm.
        let half = phase_delay_apply(&noon1, Path::P5, lambda / 2.0, &spectral).unwrap();
        assert_abs_diff_eq!(
            half.amplitude(&OccupationVector::single(mode(Path::P5, Polarization::V, 0)))
                .re,
            -FRAC_1_SQRT_2,
            epsilon = 1e-12
        );

        // Quarter period on a two-photon component: e^{i·2φ} = e^{iπ}.
        let noon2 = FockState::new([
            (
                OccupationVector::from_counts([(mode(Path::P5, Polarization::V, 0), 2)]),
                c(FRAC_1_SQRT_2, 0.0),
            ),
            (
                OccupationVector::from_counts([(mode(Path::P6, Polarization::V, 0), 2)]),
                c(FRAC_1_SQRT_2, 0.0),
            ),
        ])
        .unwrap();
        let quarter = phase_delay_apply(&noon2, Path::P5, lambda / 4.0, &spectral).unwrap();
        let delayed = quarter
            .amplitude(&OccupationVector::from_counts([(
                mode(Path::P5, Polarization::V, 0),
                2,
            )]))
            / c(FRAC_1_SQRT_2, 0.0);
        assert_abs_diff_eq!(delayed.re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(delayed.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_delay_commutes_with_pbs_on_disjoint_paths() {
        let spectral = mono();
        let state = plus45(Path::P4)
            .tensor(&FockState::single(mode(Path::P7, Polarization::V, 0)))
            .unwrap();
        let a = phase_delay_apply(
            &pbs_apply(&state, Path::P4, Path::P6, Path::P5).unwrap(),
            Path::P7,
            0.123,
            &spectral,
        )
        .unwrap();
        let b = pbs_apply(
            &phase_delay_apply(&state, Path::P7, 0.123, &spectral).unwrap(),
            Path::P4,
            Path::P6,
            Path::P5,
        )
        .unwrap();
        assert!(a.max_term_difference(&b) < 1e-12);
    }

    #[test]
    fn polarizer_examples() {
        // |+45°⟩ through a +45° polarizer: everything passes.
        let (p, out) = polarizer_apply(&plus45(Path::P4), Path::P4, FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        assert!(out.unwrap().max_term_difference(&plus45(Path::P4)) < 1e-12);

        // |H⟩ through +45°: half passes, leaving |+45°⟩.
        let h = FockState::single(mode(Path::P4, Polarization::H, 0));
        let (p, out) = polarizer_apply(&h, Path::P4, FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
        assert!(out.unwrap().max_term_difference(&plus45(Path::P4)) < 1e-12);

        // |V⟩ through H: blocked.
        let v = FockState::single(mode(Path::P4, Polarization::V, 0));
        let (p, out) = polarizer_apply(&v, Path::P4, 0.0).unwrap();
        assert_eq!(p, 0.0);
        assert!(out.is_none());
    }

    #[test]
    fn mz_at_zero_delay_reconstructs_polarization() {
        // PBS split, then a PBS-style merge onto P7, with no delay: the
        // polarization state reappears intact on the merged path.
        let spectral = mono();
        let input = FockState::new([
            (
                OccupationVector::single(mode(Path::P4, Polarization::H, 0)),
                c(0.6, 0.0),
            ),
            (
                OccupationVector::single(mode(Path::P4, Polarization::V, 0)),
                c(0.0, 0.8),
            ),
        ])
        .unwrap();
        let circuit = Circuit::new(
            [Path::P1, Path::P2, Path::P4, Path::P5, Path::P6, Path::P7],
            vec![
                OpticalElement::PolarizingBeamSplitter {
                    input: Path::P4,
                    out_transmit: Path::P6,
                    out_reflect: Path::P5,
                },
                // Merge: V from P5 reflects onto P7, H from P6 transmits onto P7.
                OpticalElement::PolarizingBeamSplitter {
                    input: Path::P5,
                    out_transmit: Path::P1,
                    out_reflect: Path::P7,
                },
                OpticalElement::PolarizingBeamSplitter {
                    input: Path::P6,
                    out_transmit: Path::P7,
                    out_reflect: Path::P2,
                },
            ],
        )
        .unwrap();
        let out = circuit
            .apply(&StateEnsemble::pure(input.clone()), &spectral)
            .unwrap();
        assert_eq!(out.len(), 1);
        let (w, state) = out.iter().next().unwrap();
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-12);
        let expected = FockState::new([
            (
                OccupationVector::single(mode(Path::P7, Polarization::H, 0)),
                c(0.6, 0.0),
            ),
            (
                OccupationVector::single(mode(Path::P7, Polarization::V, 0)),
                c(0.0, 0.8),
            ),
        ])
        .unwrap();
        assert!(state.max_term_difference(&expected) < 1e-12);
    }

    #[test]
    fn circuit_rejects_unregistered_paths() {
        let err = Circuit::new(
            [Path::P1],
            vec![OpticalElement::HalfWavePlate {
                path: Path::P6,
                angle_rad: 0.1,
            }],
        )
        .unwrap_err();
        assert_eq!(err, ElementError::UnregisteredPath(Path::P6));
    }

    #[test]
    fn empty_circuit_is_identity() {
        let circuit = Circuit::new([Path::P4], vec![]).unwrap();
        let input = StateEnsemble::pure(plus45(Path::P4));
        let out = circuit.apply(&input, &mono()).unwrap();
        assert_eq!(out.len(), 1);
        let (w, state) = out.iter().next().unwrap();
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-15);
        assert!(state.max_term_difference(&plus45(Path::P4)) < 1e-15);
    }

    #[test]
    fn single_photon_mz_fringe() {
        // [PBS, HWP(45°) on P6, delay on P5, BS2] on |+45°⟩: the output
        // probabilities oscillate with period λ and unit visibility; the
        // phase origin is convention-bound (P7 = (1 + sin φ)/2 here).
        let spectral = mono();
        let lambda = spectral.lambda0_um();
        for phi in [0.0, 0.25, 0.5, 0.9, 1.3, PI, 5.0] {
            let delta_l2 = phi * lambda / std::f64::consts::TAU;
            let circuit = Circuit::new(
                [Path::P4, Path::P5, Path::P6, Path::P7, Path::P8],
                vec![
                    OpticalElement::PolarizingBeamSplitter {
                        input: Path::P4,
                        out_transmit: Path::P6,
                        out_reflect: Path::P5,
                    },
                    OpticalElement::HalfWavePlate {
                        path: Path::P6,
                        angle_rad: FRAC_PI_4,
                    },
                    OpticalElement::PhaseDelay {
                        path: Path::P5,
                        delta_l_um: delta_l2,
                    },
                    OpticalElement::routed_bs(Path::P5, Path::P6, Path::P7, Path::P8),
                ],
            )
            .unwrap();
            let out = circuit
                .apply(&StateEnsemble::pure(plus45(Path::P4)), &spectral)
                .unwrap();
            let (_, state) = out.iter().next().unwrap();
            let p7 = state
                .amplitude(&OccupationVector::single(mode(Path::P7, Polarization::V, 0)))
                .norm_sqr();
            let p8 = state
                .amplitude(&OccupationVector::single(mode(Path::P8, Polarization::V, 0)))
                .norm_sqr();
            assert_abs_diff_eq!(p7, (1.0 + phi.sin()) / 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(p7 + p8, 1.0, epsilon = 1e-12);
        }
    }
}
