//! The concrete optical table, end to end: photon-pair (or single-photon, or
//! N-photon) source, the input beam splitter with its adjustable delay ΔL₁,
//! the polarization-split Mach-Zehnder with delay ΔL₂, the two secondary
//! beam splitters feeding detectors D₁–D₄, and seeded Poisson count
//! generation for scans.
//!
//! Layout and labels (fixed throughout):
//!
//! ```text
//!  source ── P1 ─┐                      ┌─ P5 (V, delay ΔL₂) ─┐
//!                BS1 ── P4 ── PBS ──────┤                     BS2 ── P7 ── BS ── D1/D2
//!  source ── P2 ─┘      │               └─ P6 (H, HWP 45°) ───┘    └──── P8 ── BS ── D3/D4
//!                       └ P3 (discarded, or HOM monitor)
//! ```
//!
//! The interferometric phase is φ = 2π·ΔL₂/λ. Under this crate's beam
//! splitter convention (reflection phase i) the single-photon output is
//! P₇ = (1 + sin φ)/2 — the same fringe as the usual (1 + cos φ)/2 with the
//! phase origin shifted by a quarter wave; periods, visibilities and all
//! channel phase relations are convention-free and are what the tests pin.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::elements::{Circuit, ElementError, OpticalElement};
use crate::fock::{
    FockError, FockState, ModeLabel, ModeUnitary, OccupationVector, Path, Polarization,
    ProjectionPattern, StateEnsemble, MAX_PHOTON_NUMBER,
};
use crate::spectral::{SpectralError, SpectralModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("unsupported photon number {requested}; this build handles at most {limit}")]
    UnsupportedPhotonNumber { requested: u32, limit: u32 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("operation needs a different photon layout: {0}")]
    WrongPhotonNumber(String),
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// What the source emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// Polarization-entangled photon pair on P1 × P2 (optionally Werner-mixed).
    EntangledPair,
    /// One photon at +45° directly on P4.
    SinglePhotonPol,
    /// N photons on P4 in the all-H/all-V superposition (N-photon
    /// generalization; N = 1 reduces to the single-photon source).
    Ghz(u32),
}

/// Polarization measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// H/V.
    Hv,
    /// ±45°.
    Diagonal,
}

/// Everything one simulated run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub source: SourceKind,
    /// Path-length difference before BS1, μm.
    pub delta_l1_um: f64,
    /// ΔL₂ values to scan, μm, strictly increasing.
    pub delta_l2_grid_um: Vec<f64>,
    pub spectral: SpectralModel,
    /// Per-photon detection efficiency (fiber coupling and detector combined).
    pub coupling_efficiency: f64,
    /// Source pair (or N-tuple) emission rate, events per second.
    pub pair_rate_per_s: f64,
    /// Integration time per grid point, seconds.
    pub integration_time_s: f64,
    /// Master seed; every grid point and channel derives its own stream.
    pub seed: u64,
    /// Interference-visibility floor of the input-splitter overlap (the
    /// residual mode mismatch that keeps a real dip from reaching zero).
    pub v_floor: f64,
    /// Source purity: 1 is the pure entangled state, 0 the fully mixed one.
    pub werner_p: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            source: SourceKind::EntangledPair,
            delta_l1_um: 0.0,
            delta_l2_grid_um: vec![0.0],
            spectral: SpectralModel::default(),
            coupling_efficiency: 1.0,
            pair_rate_per_s: 20_000.0,
            integration_time_s: 1.0,
            seed: 0,
            v_floor: 0.945,
            werner_p: 1.0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if let SourceKind::Ghz(n) = self.source {
            if n == 0 || n > MAX_PHOTON_NUMBER {
                return Err(ExperimentError::UnsupportedPhotonNumber {
                    requested: n,
                    limit: MAX_PHOTON_NUMBER,
                });
            }
        }
        if self.delta_l2_grid_um.is_empty() {
            return Err(ExperimentError::InvalidScenario("empty scan grid".into()));
        }
        if self.delta_l2_grid_um.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ExperimentError::InvalidScenario(
                "scan grid must be strictly increasing".into(),
            ));
        }
        for (name, value) in [
            ("coupling_efficiency", self.coupling_efficiency),
            ("v_floor", self.v_floor),
            ("werner_p", self.werner_p),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ExperimentError::InvalidScenario(format!(
                    "{name} must lie in [0,1], got {value}"
                )));
            }
        }
        if !(self.pair_rate_per_s >= 0.0) || !(self.integration_time_s >= 0.0) {
            return Err(ExperimentError::InvalidScenario(
                "rate and integration time must be non-negative".into(),
            ));
        }
        self.spectral.validate()?;
        Ok(())
    }
}

/// Probability of each (photons on P7, photons on P8) outcome, summed over
/// all internal detail and weighted over the ensemble. Patterns with photons
/// on neither output (e.g. a pair that left through P3) appear as (0, 0).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathDistribution {
    pub patterns: BTreeMap<(u32, u32), f64>,
}

impl PathDistribution {
    pub fn probability(&self, n7: u32, n8: u32) -> f64 {
        self.patterns.get(&(n7, n8)).copied().unwrap_or(0.0)
    }

    pub fn total_weight(&self) -> f64 {
        self.patterns.values().sum()
    }

    /// Expected photon numbers (E[n₇], E[n₈]).
    pub fn expected_photons(&self) -> (f64, f64) {
        let mut e7 = 0.0;
        let mut e8 = 0.0;
        for (&(n7, n8), &p) in &self.patterns {
            e7 += f64::from(n7) * p;
            e8 += f64::from(n8) * p;
        }
        (e7, e8)
    }

    /// (P₇, P₈): the fraction of interferometer photons on each output. For
    /// a single-photon source these are the detection probabilities and sum
    /// to one.
    pub fn output_fractions(&self) -> (f64, f64) {
        let (e7, e8) = self.expected_photons();
        let total = e7 + e8;
        if total <= 0.0 {
            (0.0, 0.0)
        } else {
            (e7 / total, e8 / total)
        }
    }
}

/// Coincidence and singles probabilities behind the secondary splitters.
/// D₁/D₂ sit behind the P7 splitter, D₃/D₄ behind the P8 splitter; which
/// output is which detector is an arbitrary but fixed labeling.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChannelProbabilities {
    pub d1d2: f64,
    pub d3d4: f64,
    pub d2d3: f64,
    /// Weight of ≥2-photon outcomes that fired none of the three counted
    /// coincidence channels (same-detector pairs, uncounted detector pairs,
    /// or photons lost to the coupling efficiency).
    pub lost: f64,
    /// Per-detector expected click rate [D₁, D₂, D₃, D₄] per source event.
    pub singles: [f64; 4],
}

/// Sampled counts for one grid point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChannelCounts {
    pub d1d2: u64,
    pub d3d4: u64,
    pub d2d3: u64,
    pub singles: [u64; 4],
}

/// One evaluated scan point: envelope-corrected probabilities plus counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub delta_l2_um: f64,
    pub p7: f64,
    pub p8: f64,
    pub d1d2: f64,
    pub d3d4: f64,
    pub d2d3: f64,
    pub lost: f64,
    pub singles: [f64; 4],
    pub counts: ChannelCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub scenario: Scenario,
    pub points: Vec<ScanPoint>,
}

/// One point of a coincidence-dip profile measured against ΔL₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomPoint {
    pub delta_l1_um: f64,
    /// Probability that the pair splits to P3 × P4 and both photons are
    /// detected.
    pub coincidence: f64,
    pub counts: u64,
}

fn mode(path: Path, pol: Polarization, bin: u16) -> ModeLabel {
    ModeLabel::new(path, pol, bin)
}

fn ghz_state(n: u32) -> Result<FockState, ExperimentError> {
    if n == 0 || n > MAX_PHOTON_NUMBER {
        return Err(ExperimentError::UnsupportedPhotonNumber {
            requested: n,
            limit: MAX_PHOTON_NUMBER,
        });
    }
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let all_h = OccupationVector::from_counts([(mode(Path::P4, Polarization::H, 0), n as u8)]);
    let all_v = OccupationVector::from_counts([(mode(Path::P4, Polarization::V, 0), n as u8)]);
    Ok(FockState::new([(all_h, amp), (all_v, amp)])?)
}

fn pair_basis_state(pol1: Polarization, pol2: Polarization) -> FockState {
    FockState::basis(OccupationVector::from_counts([
        (mode(Path::P1, pol1, 0), 1),
        (mode(Path::P2, pol2, 0), 1),
    ]))
    .expect("two distinct single modes")
}

/// The source output: a Werner-mixed entangled pair on P1/P2, a +45° single
/// photon on P4, or the N-photon superposition on P4.
pub fn prepare_source(scenario: &Scenario) -> Result<StateEnsemble, ExperimentError> {
    match scenario.source {
        SourceKind::EntangledPair => {
            let p = scenario.werner_p;
            let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let phi_plus = FockState::new([
                (
                    OccupationVector::from_counts([
                        (mode(Path::P1, Polarization::H, 0), 1),
                        (mode(Path::P2, Polarization::H, 0), 1),
                    ]),
                    amp,
                ),
                (
                    OccupationVector::from_counts([
                        (mode(Path::P1, Polarization::V, 0), 1),
                        (mode(Path::P2, Polarization::V, 0), 1),
                    ]),
                    amp,
                ),
            ])?;
            let mut ensemble = StateEnsemble::new();
            ensemble.push(p, phi_plus)?;
            if p < 1.0 {
                for pol1 in [Polarization::H, Polarization::V] {
                    for pol2 in [Polarization::H, Polarization::V] {
                        ensemble.push((1.0 - p) / 4.0, pair_basis_state(pol1, pol2))?;
                    }
                }
            }
            Ok(ensemble)
        }
        SourceKind::SinglePhotonPol => {
            let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let state = FockState::new([
                (
                    OccupationVector::single(mode(Path::P4, Polarization::H, 0)),
                    amp,
                ),
                (
                    OccupationVector::single(mode(Path::P4, Polarization::V, 0)),
                    amp,
                ),
            ])?;
            Ok(StateEnsemble::pure(state))
        }
        SourceKind::Ghz(n) => Ok(StateEnsemble::pure(ghz_state(n)?)),
    }
}

/// Correlation visibility E = P(same) − P(different) of a photon pair on
/// P1/P2 in the given polarization basis.
pub fn polarization_correlation(
    ensemble: &StateEnsemble,
    basis: Basis,
) -> Result<f64, ExperimentError> {
    let mut same = 0.0;
    let mut diff = 0.0;
    for (weight, state) in ensemble.iter() {
        let measured = match basis {
            Basis::Hv => state.clone(),
            Basis::Diagonal => {
                // Rotate both paths so the ±45° axes become H/V.
                let c = Complex64::new(FRAC_PI_4.cos(), 0.0);
                let s = Complex64::new(FRAC_PI_4.sin(), 0.0);
                let u = ModeUnitary::new(2, vec![c, s, -s, c])?;
                let mut rotated = state.clone();
                for path in [Path::P1, Path::P2] {
                    let bins: std::collections::BTreeSet<u16> = rotated
                        .occupied_modes()
                        .into_iter()
                        .filter(|m| m.path == path)
                        .map(|m| m.bin)
                        .collect();
                    for bin in bins {
                        rotated = rotated.apply_mode_unitary(
                            &u,
                            &[
                                mode(path, Polarization::H, bin),
                                mode(path, Polarization::V, bin),
                            ],
                        )?;
                    }
                }
                rotated
            }
        };
        for (occ, amp) in measured.terms() {
            if occ.path_total(Path::P1) != 1 || occ.path_total(Path::P2) != 1 || occ.total() != 2
            {
                return Err(ExperimentError::WrongPhotonNumber(
                    "correlation needs exactly one photon on each of P1 and P2".into(),
                ));
            }
            let pol_of = |path: Path| {
                occ.iter()
                    .find(|(m, _)| m.path == path)
                    .map(|(m, _)| m.pol)
                    .expect("path total is one")
            };
            let p = weight * amp.norm_sqr();
            if pol_of(Path::P1) == pol_of(Path::P2) {
                same += p;
            } else {
                diff += p;
            }
        }
    }
    let total = same + diff;
    if total <= 0.0 {
        return Err(ExperimentError::WrongPhotonNumber(
            "no two-photon weight to correlate".into(),
        ));
    }
    Ok((same - diff) / total)
}

/// Mixes the pair at BS1 with the wave-packet overlap set by ΔL₁, then
/// resolves the photon-number sectors on P3/P4. The delayed P1 packet is
/// decomposed into a component matching the P2 packet (temporal bin 0) and
/// an orthogonal remainder (bin 1), with overlap weight
/// v = v_floor·overlap(ΔL₁). Output members: both photons on P4 (weight
/// (1+v)/4 for the entangled pair), both on P3 (same), or one photon on
/// each, in which case the P3 photon is traced out mode-by-mode and only
/// its P4 partner continues (weight (1−v)/2, split evenly between the
/// polarization outcomes).
pub fn mix_at_bs1(
    ensemble: &StateEnsemble,
    delta_l1_um: f64,
    v_floor: f64,
    spectral: &SpectralModel,
) -> Result<StateEnsemble, ExperimentError> {
    let v_eff = (v_floor * spectral.temporal_overlap(delta_l1_um)).clamp(0.0, 1.0);
    let o = Complex64::new(v_eff.sqrt(), 0.0);
    let w = Complex64::new((1.0 - v_eff).sqrt(), 0.0);
    let bin_mix = ModeUnitary::new(2, vec![o, -w, w, o])?;

    let mut out = StateEnsemble::new();
    for (weight, state) in ensemble.iter() {
        // Overlap decomposition of the delayed P1 packet, per polarization.
        let mut mixed = state.clone();
        for pol in [Polarization::H, Polarization::V] {
            if mixed
                .occupied_modes()
                .iter()
                .any(|m| m.path == Path::P1 && m.pol == pol)
            {
                mixed = mixed.apply_mode_unitary(
                    &bin_mix,
                    &[mode(Path::P1, pol, 0), mode(Path::P1, pol, 1)],
                )?;
            }
        }
        let split = crate::elements::bs_apply(&mixed, Path::P1, Path::P2, Path::P3, Path::P4, 0.5)?;

        // Photon-number sectors on the two outputs. Only P3 is constrained:
        // each member carries exactly two photons, so the P3 total fixes the
        // P4 total, and leaving P4 unconstrained keeps its modes — the
        // photons that continue into the interferometer — intact.
        for n3 in [2u32, 0, 1] {
            let pattern = ProjectionPattern::new().with_path_total(Path::P3, n3);
            let (sector_prob, sector) = split.project(&pattern);
            let Some(sector) = sector else { continue };
            if n3 == 1 {
                // Trace out the discarded P3 photon: collapse onto each of
                // its occupied modes in turn. (If the projection already
                // collapsed it — every surviving term agreed on the P3
                // mode — the sector is ready as is.)
                let p3_modes: Vec<ModeLabel> = sector
                    .occupied_modes()
                    .into_iter()
                    .filter(|m| m.path == Path::P3)
                    .collect();
                if p3_modes.is_empty() {
                    out.push(weight * sector_prob, sector)?;
                    continue;
                }
                for m in p3_modes {
                    let (mode_prob, survivor) =
                        sector.project(&ProjectionPattern::new().with_mode(m, 1));
                    if let Some(survivor) = survivor {
                        out.push(weight * sector_prob * mode_prob, survivor)?;
                    }
                }
            } else {
                out.push(weight * sector_prob, sector)?;
            }
        }
    }
    Ok(out)
}

fn mz_circuit(delta_l2_um: f64) -> Circuit {
    Circuit::new(
        [Path::P3, Path::P4, Path::P5, Path::P6, Path::P7, Path::P8],
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
                delta_l_um: delta_l2_um,
            },
            OpticalElement::routed_bs(Path::P5, Path::P6, Path::P7, Path::P8),
        ],
    )
    .expect("the interferometer wiring is statically valid")
}

/// Sends the ensemble through PBS → HWP(45°) → delay ΔL₂ → output beam
/// splitter and tallies the (n₇, n₈) outcome probabilities. Photons on
/// paths other than P4 (a pair that bunched onto P3) pass through untouched
/// and land in the (0, 0) pattern.
pub fn run_mz(
    ensemble: &StateEnsemble,
    delta_l2_um: f64,
    spectral: &SpectralModel,
) -> Result<PathDistribution, ExperimentError> {
    let circuit = mz_circuit(delta_l2_um);
    let evolved = circuit.apply(ensemble, spectral)?;
    let mut patterns: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for (weight, state) in evolved.iter() {
        for (occ, amp) in state.terms() {
            let key = (occ.path_total(Path::P7), occ.path_total(Path::P8));
            *patterns.entry(key).or_insert(0.0) += weight * amp.norm_sqr();
        }
    }
    Ok(PathDistribution { patterns })
}

fn factorial(n: u32) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

/// P(a photons to one detector, b to the other, rest lost) for n photons
/// entering a balanced splitter with per-photon detection efficiency η.
fn routing(n: u32, a: u32, b: u32, eta: f64) -> f64 {
    let lost = n - a - b;
    let multinomial = factorial(n) / (factorial(a) * factorial(b) * factorial(lost));
    multinomial * (eta / 2.0).powi((a + b) as i32) * (1.0 - eta).powi(lost as i32)
}

/// Folds the (n₇, n₈) distribution through the two secondary beam splitters
/// with per-photon efficiency η, exactly enumerating every routing of every
/// pattern. Coincidence probabilities are inclusive (the channel fires);
/// `lost` collects all ≥2-photon weight that fired none of the three
/// counted channels.
pub fn detector_coincidences(
    distribution: &PathDistribution,
    coupling_efficiency: f64,
) -> ChannelProbabilities {
    let eta = coupling_efficiency;
    let mut out = ChannelProbabilities::default();
    for (&(n7, n8), &p) in &distribution.patterns {
        if p == 0.0 {
            continue;
        }
        out.singles[0] += p * f64::from(n7) * eta / 2.0;
        out.singles[1] += p * f64::from(n7) * eta / 2.0;
        out.singles[2] += p * f64::from(n8) * eta / 2.0;
        out.singles[3] += p * f64::from(n8) * eta / 2.0;
        if n7 + n8 < 2 {
            continue;
        }
        let mut q_d1d2 = 0.0;
        let mut q_d3d4 = 0.0;
        let mut q_none = 0.0;
        for d1 in 0..=n7 {
            for d2 in 0..=(n7 - d1) {
                let p7 = routing(n7, d1, d2, eta);
                if d1 >= 1 && d2 >= 1 {
                    q_d1d2 += p7;
                }
                for d3 in 0..=n8 {
                    for d4 in 0..=(n8 - d3) {
                        let fires_d1d2 = d1 >= 1 && d2 >= 1;
                        let fires_d3d4 = d3 >= 1 && d4 >= 1;
                        let fires_d2d3 = d2 >= 1 && d3 >= 1;
                        if !fires_d1d2 && !fires_d3d4 && !fires_d2d3 {
                            q_none += p7 * routing(n8, d3, d4, eta);
                        }
                    }
                }
            }
        }
        for d3 in 0..=n8 {
            for d4 in 0..=(n8 - d3) {
                if d3 >= 1 && d4 >= 1 {
                    q_d3d4 += routing(n8, d3, d4, eta);
                }
            }
        }
        // D2 misses every P7 photon with probability (1−η/2) each, likewise
        // D3 on the P8 side; the two sides are independent.
        let q_d2d3 = (1.0 - (1.0 - eta / 2.0).powi(n7 as i32))
            * (1.0 - (1.0 - eta / 2.0).powi(n8 as i32));
        out.d1d2 += p * q_d1d2;
        out.d3d4 += p * q_d3d4;
        out.d2d3 += p * q_d2d3;
        out.lost += p * q_none;
    }
    out
}

/// SplitMix64 — used only to derive independent, order-free seeds for every
/// (grid point, channel) pair from the scenario master seed.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_seed(master: u64, point: usize, channel: u64) -> u64 {
    let per_point = splitmix64(master ^ splitmix64(point as u64 + 1));
    splitmix64(per_point ^ splitmix64(channel.wrapping_add(0x5151_5151)))
}

/// One Poisson draw with mean `probability·rate·time`, deterministic in the
/// seed. A non-positive mean yields zero counts.
pub fn sample_counts(probability: f64, rate_per_s: f64, time_s: f64, seed: u64) -> u64 {
    let mean = probability.max(0.0) * rate_per_s * time_s;
    if mean <= 0.0 {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(&mut rng) as u64
}

/// Phases used to average one fringe period out of a channel; exact for
/// every harmonic the ≤6-photon states can produce.
const OFFSET_SAMPLES: usize = 16;

struct ChannelOffsets {
    p7: f64,
    p8: f64,
    d1d2: f64,
    d3d4: f64,
    d2d3: f64,
    lost: f64,
    singles: [f64; 4],
}

fn point_values(
    mixed: &StateEnsemble,
    delta_l2_um: f64,
    scenario: &Scenario,
) -> Result<(ChannelProbabilities, f64, f64), ExperimentError> {
    let distribution = run_mz(mixed, delta_l2_um, &scenario.spectral)?;
    let channels = detector_coincidences(&distribution, scenario.coupling_efficiency);
    let (p7, p8) = distribution.output_fractions();
    Ok((channels, p7, p8))
}

/// Full scan: source → (BS1 for the pair source) → Mach-Zehnder → detector
/// channels at every ΔL₂, with finite coherence applied as an amplitude
/// modulation — each channel's oscillating part is scaled by the matching
/// envelope (pump envelope for coincidences, single-photon envelope for
/// singles and the output fractions) around its phase-averaged offset —
/// and Poisson counts attached from per-point, per-channel seeds.
pub fn scan(scenario: &Scenario) -> Result<ScanResult, ExperimentError> {
    scenario.validate()?;
    let source = prepare_source(scenario)?;
    let mixed = match scenario.source {
        SourceKind::EntangledPair => mix_at_bs1(
            &source,
            scenario.delta_l1_um,
            scenario.v_floor,
            &scenario.spectral,
        )?,
        _ => source,
    };

    // Phase-averaged offsets: the fringe-free part of every channel.
    let lambda = scenario.spectral.lambda0_um();
    let mut offsets = ChannelOffsets {
        p7: 0.0,
        p8: 0.0,
        d1d2: 0.0,
        d3d4: 0.0,
        d2d3: 0.0,
        lost: 0.0,
        singles: [0.0; 4],
    };
    for k in 0..OFFSET_SAMPLES {
        let dl = lambda * k as f64 / OFFSET_SAMPLES as f64;
        let (channels, p7, p8) = point_values(&mixed, dl, scenario)?;
        offsets.p7 += p7;
        offsets.p8 += p8;
        offsets.d1d2 += channels.d1d2;
        offsets.d3d4 += channels.d3d4;
        offsets.d2d3 += channels.d2d3;
        offsets.lost += channels.lost;
        for i in 0..4 {
            offsets.singles[i] += channels.singles[i];
        }
    }
    let norm = OFFSET_SAMPLES as f64;
    offsets.p7 /= norm;
    offsets.p8 /= norm;
    offsets.d1d2 /= norm;
    offsets.d3d4 /= norm;
    offsets.d2d3 /= norm;
    offsets.lost /= norm;
    for s in &mut offsets.singles {
        *s /= norm;
    }

    let rate = scenario.pair_rate_per_s;
    let time = scenario.integration_time_s;
    let mut points = Vec::with_capacity(scenario.delta_l2_grid_um.len());
    for (index, &dl2) in scenario.delta_l2_grid_um.iter().enumerate() {
        let (channels, p7, p8) = point_values(&mixed, dl2, scenario)?;
        let env_pair = scenario.spectral.two_photon_envelope(dl2);
        let env_single = scenario.spectral.single_photon_envelope(dl2);
        let damp = |offset: f64, value: f64, env: f64| offset + (value - offset) * env;

        let d1d2 = damp(offsets.d1d2, channels.d1d2, env_pair);
        let d3d4 = damp(offsets.d3d4, channels.d3d4, env_pair);
        let d2d3 = damp(offsets.d2d3, channels.d2d3, env_pair);
        let lost = damp(offsets.lost, channels.lost, env_pair);
        let mut singles = [0.0; 4];
        for i in 0..4 {
            singles[i] = damp(offsets.singles[i], channels.singles[i], env_single);
        }
        let counts = ChannelCounts {
            d1d2: sample_counts(d1d2, rate, time, stream_seed(scenario.seed, index, 0)),
            d3d4: sample_counts(d3d4, rate, time, stream_seed(scenario.seed, index, 1)),
            d2d3: sample_counts(d2d3, rate, time, stream_seed(scenario.seed, index, 2)),
            singles: [
                sample_counts(singles[0], rate, time, stream_seed(scenario.seed, index, 3)),
                sample_counts(singles[1], rate, time, stream_seed(scenario.seed, index, 4)),
                sample_counts(singles[2], rate, time, stream_seed(scenario.seed, index, 5)),
                sample_counts(singles[3], rate, time, stream_seed(scenario.seed, index, 6)),
            ],
        };
        points.push(ScanPoint {
            delta_l2_um: dl2,
            p7: damp(offsets.p7, p7, env_single),
            p8: damp(offsets.p8, p8, env_single),
            d1d2,
            d3d4,
            d2d3,
            lost,
            singles,
            counts,
        });
    }
    Ok(ScanResult {
        scenario: scenario.clone(),
        points,
    })
}

/// Coincidence-dip profile: the scenario grid is reinterpreted as ΔL₁
/// values, and for each one the pair is mixed at BS1 and the probability of
/// detecting one photon on P3 and one on P4 is recorded (the dip that the
/// wave-packet overlap carves out of the 50% random-splitting plateau).
pub fn hom_scan(scenario: &Scenario) -> Result<Vec<HomPoint>, ExperimentError> {
    scenario.validate()?;
    if scenario.source != SourceKind::EntangledPair {
        return Err(ExperimentError::InvalidScenario(
            "the input-splitter dip needs the pair source".into(),
        ));
    }
    let source = prepare_source(scenario)?;
    let eta = scenario.coupling_efficiency;
    let mut points = Vec::with_capacity(scenario.delta_l2_grid_um.len());
    for (index, &dl1) in scenario.delta_l2_grid_um.iter().enumerate() {
        let mixed = mix_at_bs1(&source, dl1, scenario.v_floor, &scenario.spectral)?;
        let one_each: f64 = mixed
            .iter()
            .filter(|(_, state)| state.photon_number() == 1)
            .map(|(w, _)| w)
            .sum();
        let coincidence = one_each * eta * eta;
        let counts = sample_counts(
            coincidence,
            scenario.pair_rate_per_s,
            scenario.integration_time_s,
            stream_seed(scenario.seed, index, 0),
        );
        points.push(HomPoint {
            delta_l1_um: dl1,
            coincidence,
            counts,
        });
    }
    Ok(points)
}

/// The N-photon superposition pushed through PBS → HWP → delay, returning
/// the two-arm state (|N⟩₅ + e^{iNφ}|N⟩₆)/√2 immediately before the output
/// beam splitter (global phase canonicalized). After that splitter the
/// fringe period is λ/N.
pub fn ghz_to_noon(
    n: u32,
    phi: f64,
    spectral: &SpectralModel,
) -> Result<FockState, ExperimentError> {
    let state = ghz_state(n)?;
    // A delay of −φ·λ/2π on the reflected arm puts the phase e^{+iNφ} on
    // the P6 component once the leading P5 amplitude is made real.
    let delta_l = -phi * spectral.lambda0_um() / TAU;
    let circuit = Circuit::new(
        [Path::P4, Path::P5, Path::P6],
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
                delta_l_um: delta_l,
            },
        ],
    )
    .expect("fixed circuit is valid");
    let evolved = circuit.apply(&StateEnsemble::pure(state), spectral)?;
    let (_, noon) = evolved.iter().next().expect("unitary circuit keeps the member");
    Ok(noon.with_canonical_phase())
}
