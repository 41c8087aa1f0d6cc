//! Gaussian wave-packet and joint-spectral-amplitude model.
//!
//! Path delays blur interference in two distinct ways: the relative delay
//! ΔL₁ before the input splitter controls two-photon distinguishability
//! (the HOM dip), while the interferometer delay ΔL₂ rides under envelope
//! functions that damp the fringes. Both are governed by Gaussian spectra
//! whose widths come from the two measured coherence lengths: the
//! phase-matching bandwidth from ξ_single and the pump bandwidth from
//! ξ_pump.
//!
//! Convention: a coherence length ξ is the FWHM of the corresponding
//! interference envelope in delay, envelope(ΔL) = exp(−ΔL²/(2σ_L²)) with
//! 2√(2 ln 2)·σ_L = ξ. The matching angular-frequency width is
//! σ_ω = 2√(2 ln 2)·c/ξ. All envelope and overlap functions below are the
//! exact Gaussian integrals of that model; the spectral grid parameters
//! feed the explicit [`JointSpectralAmplitude`] table.
//!
//! Mode spectral bins are used by the rest of the crate as coarse temporal
//! slots (two slots for overlapped/delayed wave packets), not as frequency
//! samples, so every bin shares the center wavelength λ₀.

use num_complex::Complex64;
use thiserror::Error;

/// Vacuum speed of light in μm/s.
pub const SPEED_OF_LIGHT_UM_PER_S: f64 = 2.997_924_58e14;

/// 2√(2 ln 2): ratio of a Gaussian's FWHM to its standard deviation.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("coherence length must be positive, got {0} um")]
    NonPositiveLength(f64),
    #[error("bandwidth must be positive, got {0} rad/s")]
    NonPositiveBandwidth(f64),
    #[error("spectral grid too coarse: {within} bins inside ±3σ of the narrow factor, need at least {needed}")]
    GridTooCoarse { within: usize, needed: usize },
    #[error("operation requires the spectral model to be enabled")]
    ModelDisabled,
    #[error("invalid spectral parameter: {0}")]
    InvalidParameter(String),
}

/// Converts a coherence length (envelope FWHM in delay) to the standard
/// deviation of the matching Gaussian intensity spectrum, σ_ω = 2√(2 ln 2)·c/ξ.
pub fn bandwidth_from_coherence_length(xi_um: f64) -> Result<f64, SpectralError> {
    if !(xi_um > 0.0) || !xi_um.is_finite() {
        return Err(SpectralError::NonPositiveLength(xi_um));
    }
    Ok(FWHM_PER_SIGMA * SPEED_OF_LIGHT_UM_PER_S / xi_um)
}

/// Inverse of [`bandwidth_from_coherence_length`].
pub fn coherence_length_from_bandwidth(sigma_omega: f64) -> Result<f64, SpectralError> {
    if !(sigma_omega > 0.0) || !sigma_omega.is_finite() {
        return Err(SpectralError::NonPositiveBandwidth(sigma_omega));
    }
    Ok(FWHM_PER_SIGMA * SPEED_OF_LIGHT_UM_PER_S / sigma_omega)
}

/// Source and wave-packet description shared by the whole simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    /// Center wavelength in nm (810 by default).
    pub lambda0_nm: f64,
    /// Single-photon coherence length in μm (sets the phase-matching width).
    pub xi_single_um: f64,
    /// Pump coherence length in μm (sets the pump-envelope width).
    pub xi_pump_um: f64,
    /// Number of frequency bins per axis of the JSA grid.
    pub bin_count: usize,
    /// Half-extent of the grid in units of the wider factor's σ.
    pub span_sigmas: f64,
    /// When false, photons are monochromatic at λ₀ and distinguishability is
    /// decided purely by the discrete temporal slot labels.
    pub enabled: bool,
}

impl Default for SpectralModel {
    fn default() -> Self {
        SpectralModel {
            lambda0_nm: 810.0,
            xi_single_um: 126.0,
            xi_pump_um: 300.0,
            bin_count: 257,
            span_sigmas: 5.0,
            enabled: true,
        }
    }
}

impl SpectralModel {
    /// A disabled (monochromatic) model at the given wavelength.
    pub fn disabled(lambda0_nm: f64) -> Self {
        SpectralModel {
            lambda0_nm,
            enabled: false,
            ..SpectralModel::default()
        }
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if !(self.lambda0_nm > 0.0) {
            return Err(SpectralError::InvalidParameter(format!(
                "lambda0 must be positive, got {} nm",
                self.lambda0_nm
            )));
        }
        if !(self.xi_single_um > 0.0) {
            return Err(SpectralError::NonPositiveLength(self.xi_single_um));
        }
        if !(self.xi_pump_um > 0.0) {
            return Err(SpectralError::NonPositiveLength(self.xi_pump_um));
        }
        if self.enabled && (self.bin_count < 2 || !(self.span_sigmas > 0.0)) {
            return Err(SpectralError::InvalidParameter(format!(
                "grid needs ≥ 2 bins and positive span, got {} bins, span {}σ",
                self.bin_count, self.span_sigmas
            )));
        }
        Ok(())
    }

    /// Center wavelength in μm.
    #[inline]
    pub fn lambda0_um(&self) -> f64 {
        self.lambda0_nm * 1e-3
    }

    /// Wavelength assigned to a mode's spectral bin. Bins act as temporal
    /// slots here, so every bin carries the center wavelength.
    #[inline]
    pub fn bin_wavelength_um(&self, _bin: u16) -> f64 {
        self.lambda0_um()
    }

    /// σ_ω of the phase-matching (single-photon) factor, rad/s.
    pub fn sigma_single(&self) -> f64 {
        bandwidth_from_coherence_length(self.xi_single_um).expect("validated width")
    }

    /// σ_ω of the pump-envelope factor, rad/s.
    pub fn sigma_pump(&self) -> f64 {
        bandwidth_from_coherence_length(self.xi_pump_um).expect("validated width")
    }

    /// Wave-packet overlap v(ΔL₁) at the input splitter:
    /// ∫|φ_pm(Ω)|² cos(Ω ΔL₁/c) dΩ, normalized to v(0)=1, which for the
    /// Gaussian spectrum is exp(−σ_ω² ΔL₁²/(2c²)).
    ///
    /// With the model disabled the photons are monochromatic and overlap is
    /// decided by the temporal slots alone: 1 at ΔL₁ = 0, else 0.
    pub fn temporal_overlap(&self, delta_l1_um: f64) -> f64 {
        if !self.enabled {
            return if delta_l1_um == 0.0 { 1.0 } else { 0.0 };
        }
        gaussian_envelope(delta_l1_um, self.sigma_single())
    }

    /// Fringe-amplitude envelope for the single-photon (period-λ) fringes;
    /// same Gaussian as [`SpectralModel::temporal_overlap`], FWHM ξ_single.
    pub fn single_photon_envelope(&self, delta_l2_um: f64) -> f64 {
        if !self.enabled {
            return 1.0;
        }
        gaussian_envelope(delta_l2_um, self.sigma_single())
    }

    /// Fringe-amplitude envelope for the two-photon (period-λ/2) coincidence
    /// fringes. Both photons share the pump phase, so the width is set by the
    /// pump factor: FWHM ξ_pump.
    pub fn two_photon_envelope(&self, delta_l2_um: f64) -> f64 {
        if !self.enabled {
            return 1.0;
        }
        gaussian_envelope(delta_l2_um, self.sigma_pump())
    }

    /// Normalized coincidence rate C(ΔL₁)/C_plateau = 1 − v_floor·v(ΔL₁):
    /// the HOM dip, reaching 1 − v_floor at zero delay.
    pub fn hom_coincidence(&self, delta_l1_um: f64, v_floor: f64) -> f64 {
        1.0 - v_floor * self.temporal_overlap(delta_l1_um)
    }

    /// Builds the discrete joint spectral amplitude
    /// f(Ω₁,Ω₂) ∝ α(Ω₁+Ω₂)·φ_pm(Ω₁−Ω₂) on a square grid of detunings,
    /// L2-normalized.
    pub fn build_jsa(&self) -> Result<JointSpectralAmplitude, SpectralError> {
        if !self.enabled {
            return Err(SpectralError::ModelDisabled);
        }
        self.validate()?;
        let sigma_pm = self.sigma_single();
        let sigma_pump = self.sigma_pump();
        let wide = sigma_pm.max(sigma_pump);
        let narrow = sigma_pm.min(sigma_pump);
        let n = self.bin_count;
        let half = self.span_sigmas * wide;
        let step = 2.0 * half / (n as f64 - 1.0);

        let detunings: Vec<f64> = (0..n).map(|i| -half + step * i as f64).collect();
        let within = detunings.iter().filter(|w| w.abs() <= 3.0 * narrow).count();
        if within < 8 {
            return Err(SpectralError::GridTooCoarse { within, needed: 8 });
        }

        // α(s) and φ_pm(d) are amplitude Gaussians: |·|² has std σ, so the
        // amplitude carries exp(−x²/(4σ²)).
        let mut values = vec![Complex64::new(0.0, 0.0); n * n];
        let mut norm_sq = 0.0;
        for (i, &w1) in detunings.iter().enumerate() {
            for (j, &w2) in detunings.iter().enumerate() {
                let s = w1 + w2;
                let d = w1 - w2;
                let amp = (-s * s / (4.0 * sigma_pump * sigma_pump)
                    - d * d / (4.0 * sigma_pm * sigma_pm))
                    .exp();
                values[i * n + j] = Complex64::new(amp, 0.0);
                norm_sq += amp * amp;
            }
        }
        let scale = 1.0 / norm_sq.sqrt();
        for v in &mut values {
            *v *= scale;
        }
        Ok(JointSpectralAmplitude {
            bin_count: n,
            detunings,
            values,
        })
    }
}

#[inline]
fn gaussian_envelope(delta_l_um: f64, sigma_omega: f64) -> f64 {
    let x = sigma_omega * delta_l_um / SPEED_OF_LIGHT_UM_PER_S;
    (-0.5 * x * x).exp()
}

/// Discrete joint spectral amplitude of the photon pair over signal/idler
/// detunings from the degenerate center frequency.
#[derive(Debug, Clone)]
pub struct JointSpectralAmplitude {
    bin_count: usize,
    detunings: Vec<f64>,
    values: Vec<Complex64>,
}

impl JointSpectralAmplitude {
    #[inline]
    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    /// Detuning of bin `i` in rad/s.
    #[inline]
    pub fn detuning(&self, i: usize) -> f64 {
        self.detunings[i]
    }

    /// Amplitude at (signal bin i, idler bin j).
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.bin_count + j]
    }

    /// Σ|f|² over the grid (1 after construction).
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Largest asymmetry max|‖f(i,j)‖ − ‖f(j,i)‖| (0 for the degenerate
    /// type-II model).
    pub fn exchange_asymmetry(&self) -> f64 {
        let n = self.bin_count;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.value(i, j).norm() - self.value(j, i).norm()).abs());
            }
        }
        worst
    }

    /// Pearson correlation of the two detunings under the |f|² distribution;
    /// → −1 in the narrow-pump (perfectly anti-correlated) limit.
    pub fn correlation_coefficient(&self) -> f64 {
        let n = self.bin_count;
        let (mut m1, mut m2, mut total) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let p = self.value(i, j).norm_sqr();
                m1 += p * self.detunings[i];
                m2 += p * self.detunings[j];
                total += p;
            }
        }
        m1 /= total;
        m2 /= total;
        let (mut v1, mut v2, mut cov) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let p = self.value(i, j).norm_sqr();
                let d1 = self.detunings[i] - m1;
                let d2 = self.detunings[j] - m2;
                v1 += p * d1 * d1;
                v2 += p * d2 * d2;
                cov += p * d1 * d2;
            }
        }
        cov / (v1 * v2).sqrt()
    }

    /// Overlap factor v(ΔL) computed directly from the grid as
    /// Σ|f|² cos((Ω₁−Ω₂)·ΔL/c); agrees with the closed-form
    /// [`SpectralModel::temporal_overlap`] up to quadrature error.
    pub fn difference_frequency_overlap(&self, delta_l_um: f64) -> f64 {
        let n = self.bin_count;
        let mut acc = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = self.value(i, j).norm_sqr();
                let d = self.detunings[i] - self.detunings[j];
                acc += p * (d * delta_l_um / SPEED_OF_LIGHT_UM_PER_S).cos();
                total += p;
            }
        }
        acc / total
    }
}
