//! Least-squares analysis of scan data: sinusoidal fringes (period, phase,
//! visibility), Gaussian envelopes and dips (FWHM), and the two raw
//! visibility formulas.
//!
//! The fitter is a damped Gauss-Newton loop (Levenberg-style multiplicative
//! damping on the normal-equation diagonal) with analytic Jacobians.
//! Sinusoid fits are initialized from the discrete-Fourier peak of the
//! mean-subtracted signal — this is what makes the λ vs λ/2 period
//! distinction robust — and envelope fits from moment estimates.
//! Uncertainties are 1σ values from the covariance matrix (JᵀWJ)⁻¹, scaled
//! by the reduced residual when no per-point errors are supplied.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Maximum accepted + rejected Gauss-Newton steps before giving up.
const MAX_ITERATIONS: usize = 200;
/// Initial multiplicative damping of the normal-equation diagonal.
const INITIAL_DAMPING: f64 = 1e-3;
/// Damping above this means the landscape never yielded a downhill step.
const DAMPING_BAIL: f64 = 1e12;
/// Convergence: every parameter step below this relative-plus-absolute size.
const STEP_TOLERANCE: f64 = 1e-10;
/// Ratio of a Gaussian's full width at half maximum to its σ.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("visibility is undefined when both rates are zero")]
    Degenerate,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("fit did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("singular normal equations (a parameter has no effect on the data)")]
    Singular,
    #[error("window too small: {0}")]
    WindowTooSmall(String),
}

/// A fitted value with its 1σ uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

/// Which shape a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    Sinusoid,
    GaussianEnvelope,
    GaussianDip,
}

/// Result of [`fit_fringe`]: offset + amplitude·cos(2π·x/period + phase).
#[derive(Debug, Clone)]
pub struct SinusoidFit {
    pub offset: Estimate,
    pub amplitude: Estimate,
    pub period_nm: Estimate,
    pub phase_rad: Estimate,
    /// amplitude / offset, clamped to [0, 1], with propagated uncertainty.
    pub visibility: Estimate,
    /// Root-mean-square of the unweighted residuals.
    pub residual_rms: f64,
    pub iterations: usize,
}

impl SinusoidFit {
    /// Fitted period in the scan's own length unit.
    pub fn period_um(&self) -> Estimate {
        Estimate {
            value: self.period_nm.value / 1e3,
            sigma: self.period_nm.sigma / 1e3,
        }
    }
}

/// Result of [`fit_envelope`] / [`fit_hom_dip`]:
/// offset ± amplitude·exp(−(x−center)²/(2σ²)), amplitude reported positive
/// (a dip's amplitude is its depth below the plateau offset).
#[derive(Debug, Clone)]
pub struct EnvelopeFit {
    pub model: FitModel,
    pub offset: Estimate,
    pub amplitude: Estimate,
    pub center_um: Estimate,
    pub sigma_um: Estimate,
    pub residual_rms: f64,
    pub iterations: usize,
}

impl EnvelopeFit {
    /// Full width at half maximum, 2√(2 ln 2)·σ exactly.
    pub fn fwhm_um(&self) -> Estimate {
        Estimate {
            value: FWHM_PER_SIGMA * self.sigma_um.value,
            sigma: FWHM_PER_SIGMA * self.sigma_um.sigma,
        }
    }
}

/// V = (c_max − c_min) / (c_max + c_min).
pub fn visibility(c_max: f64, c_min: f64) -> Result<f64, AnalysisError> {
    if c_min < 0.0 || c_max < c_min {
        return Err(AnalysisError::InvalidInput(format!(
            "need c_max >= c_min >= 0, got c_max = {c_max}, c_min = {c_min}"
        )));
    }
    if c_max == 0.0 {
        return Err(AnalysisError::Degenerate);
    }
    Ok((c_max - c_min) / (c_max + c_min))
}

/// V_HOM = (c_plat − c_dip) / c_plat.
pub fn hom_visibility(c_plat: f64, c_dip: f64) -> Result<f64, AnalysisError> {
    if c_dip < 0.0 || c_plat < c_dip {
        return Err(AnalysisError::InvalidInput(format!(
            "need c_plat >= c_dip >= 0, got c_plat = {c_plat}, c_dip = {c_dip}"
        )));
    }
    if c_plat == 0.0 {
        return Err(AnalysisError::Degenerate);
    }
    Ok((c_plat - c_dip) / c_plat)
}

/// 1σ Poisson error bars for count data, floored at one count so dark
/// fringe minima keep a finite weight.
pub fn poisson_sigmas(counts: &[f64]) -> Vec<f64> {
    counts.iter().map(|&c| c.max(0.0).sqrt().max(1.0)).collect()
}

/// Everything the damped Gauss-Newton core returns.
struct Solution {
    params: Vec<f64>,
    covariance: DMatrix<f64>,
    residual_rms: f64,
    iterations: usize,
}

/// Weighted residual sum of squares, or None when the model produced a
/// non-finite value (treated as an uphill step by the caller).
fn weighted_rss(
    x: &[f64],
    y: &[f64],
    w: &[f64],
    params: &[f64],
    eval: &dyn Fn(&[f64], f64) -> (f64, Vec<f64>),
) -> Option<f64> {
    let mut rss = 0.0;
    for i in 0..x.len() {
        let (f, _) = eval(params, x[i]);
        if !f.is_finite() {
            return None;
        }
        let r = y[i] - f;
        rss += w[i] * r * r;
    }
    Some(rss)
}

/// Damped Gauss-Newton for y ≈ f(x; p) with analytic gradient. `eval`
/// returns the model value and ∂f/∂p at one point. Weights are 1/σ².
fn gauss_newton(
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    initial: Vec<f64>,
    eval: &dyn Fn(&[f64], f64) -> (f64, Vec<f64>),
) -> Result<Solution, AnalysisError> {
    let n = x.len();
    let p = initial.len();
    if y.len() != n {
        return Err(AnalysisError::InvalidInput(format!(
            "{n} x values but {} y values",
            y.len()
        )));
    }
    if let Some(s) = sigma {
        if s.len() != n {
            return Err(AnalysisError::InvalidInput(format!(
                "{n} points but {} error bars",
                s.len()
            )));
        }
        if let Some(bad) = s.iter().find(|&&v| !(v > 0.0)) {
            return Err(AnalysisError::InvalidInput(format!(
                "error bars must be positive, got {bad}"
            )));
        }
    }
    let w: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|&v| 1.0 / (v * v)).collect(),
        None => vec![1.0; n],
    };

    let mut params = initial;
    let mut rss = weighted_rss(x, y, &w, &params, eval)
        .ok_or_else(|| AnalysisError::InvalidInput("non-finite model at start".into()))?;
    let mut damping = INITIAL_DAMPING;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS && !converged {
        // Normal equations at the current point.
        let mut jtwj = DMatrix::<f64>::zeros(p, p);
        let mut jtwr = DVector::<f64>::zeros(p);
        for i in 0..n {
            let (f, grad) = eval(&params, x[i]);
            let r = y[i] - f;
            for a in 0..p {
                jtwr[a] += w[i] * grad[a] * r;
                for b in 0..p {
                    jtwj[(a, b)] += w[i] * grad[a] * grad[b];
                }
            }
        }

        // Retry this linearization with growing damping until a step is
        // accepted or the damping bails out.
        loop {
            iterations += 1;
            let mut damped = jtwj.clone();
            for a in 0..p {
                let d = jtwj[(a, a)];
                damped[(a, a)] = if d > 0.0 { d * (1.0 + damping) } else { damping };
            }
            let step = match damped.lu().solve(&jtwr) {
                Some(step) if step.iter().all(|v| v.is_finite()) => step,
                _ => {
                    damping *= 8.0;
                    if damping > DAMPING_BAIL {
                        return Err(AnalysisError::Singular);
                    }
                    continue;
                }
            };
            let trial: Vec<f64> = params
                .iter()
                .zip(step.iter())
                .map(|(p, s)| p + s)
                .collect();
            match weighted_rss(x, y, &w, &trial, eval) {
                Some(trial_rss) if trial_rss <= rss => {
                    converged = step
                        .iter()
                        .zip(params.iter())
                        .all(|(s, p)| s.abs() <= STEP_TOLERANCE * (p.abs() + 1e-2));
                    params = trial;
                    rss = trial_rss;
                    damping = (damping / 4.0).max(1e-14);
                    break;
                }
                _ => {
                    damping *= 8.0;
                    if damping > DAMPING_BAIL {
                        // No downhill direction left: we are at a (possibly
                        // flat) minimum of this linearization.
                        converged = true;
                        break;
                    }
                }
            }
            if iterations >= MAX_ITERATIONS {
                break;
            }
        }
    }
    if !converged {
        return Err(AnalysisError::NoConvergence(MAX_ITERATIONS));
    }

    // Covariance at the solution.
    let mut jtwj = DMatrix::<f64>::zeros(p, p);
    let mut plain_rss = 0.0;
    for i in 0..n {
        let (f, grad) = eval(&params, x[i]);
        let r = y[i] - f;
        plain_rss += r * r;
        for a in 0..p {
            for b in 0..p {
                jtwj[(a, b)] += w[i] * grad[a] * grad[b];
            }
        }
    }
    let mut covariance = jtwj.try_inverse().ok_or(AnalysisError::Singular)?;
    if sigma.is_none() && n > p {
        // Unweighted fit: scale by the reduced residual so uncertainties
        // reflect the scatter actually present.
        covariance *= rss / (n - p) as f64;
    }
    Ok(Solution {
        params,
        covariance,
        residual_rms: (plain_rss / n as f64).sqrt(),
        iterations,
    })
}

/// Mean-subtracted discrete-Fourier period estimate with parabolic peak
/// refinement, plus the matched phase estimate. Assumes a near-uniform grid.
fn sinusoid_init(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64), AnalysisError> {
    let n = x.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let span = x[n - 1] - x[0];
    if !(span > 0.0) {
        return Err(AnalysisError::InvalidInput(
            "scan grid must be increasing".into(),
        ));
    }

    // |DFT| over k = 1..n/2 of the centered signal, evaluated on the index
    // grid (uniform spacing assumed).
    let half = n / 2;
    let mut mags = vec![0.0; half + 1];
    for (k, slot) in mags.iter_mut().enumerate().skip(1) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, &v) in centered.iter().enumerate() {
            let arg = -std::f64::consts::TAU * (k * j) as f64 / n as f64;
            re += v * arg.cos();
            im += v * arg.sin();
        }
        *slot = re.hypot(im);
    }
    let mut k_peak = 1;
    for k in 1..=half {
        if mags[k] > mags[k_peak] {
            k_peak = k;
        }
    }
    let mut k_refined = k_peak as f64;
    if k_peak > 1 && k_peak < half {
        let (a, b, c) = (mags[k_peak - 1], mags[k_peak], mags[k_peak + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            k_refined += 0.5 * (a - c) / denom;
        }
    }
    // k cycles fit into n samples covering span·n/(n−1).
    let period = span * n as f64 / ((n - 1) as f64 * k_refined);

    // Amplitude from the data range, phase from the matched filter at the
    // estimated period (using the true x grid, so any origin offset is
    // absorbed here).
    let max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let amplitude = (max - min) / 2.0;
    let mut re = 0.0;
    let mut im = 0.0;
    for (j, &v) in centered.iter().enumerate() {
        let arg = -std::f64::consts::TAU * x[j] / period;
        re += v * arg.cos();
        im += v * arg.sin();
    }
    let phase = im.atan2(re);
    Ok((mean, amplitude, period, phase))
}

/// Weighted fit of offset + amplitude·cos(2π·x/period + phase) to a fringe
/// scan. `x_um` is the delay axis in μm; the period is reported in nm.
/// `sigma` carries per-point 1σ error bars (e.g. [`poisson_sigmas`]); `None`
/// fits unweighted and scales uncertainties by the reduced residual.
pub fn fit_fringe(
    x_um: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
) -> Result<SinusoidFit, AnalysisError> {
    if x_um.len() < 8 || y.len() < 8 {
        return Err(AnalysisError::InsufficientData(format!(
            "need at least 8 points, got {}",
            x_um.len().min(y.len())
        )));
    }
    let (offset0, amplitude0, period0, phase0) = sinusoid_init(x_um, y)?;
    let span = x_um[x_um.len() - 1] - x_um[0];
    if span < 1.5 * period0 {
        return Err(AnalysisError::InsufficientData(format!(
            "scan spans {:.3} of the estimated period {period0:.4}; need at least 1.5",
            span / period0
        )));
    }

    let eval = |p: &[f64], x: f64| -> (f64, Vec<f64>) {
        let (offset, amplitude, period, phase) = (p[0], p[1], p[2], p[3]);
        let arg = std::f64::consts::TAU * x / period + phase;
        let (sin, cos) = arg.sin_cos();
        let value = offset + amplitude * cos;
        let d_period = amplitude * sin * std::f64::consts::TAU * x / (period * period);
        (value, vec![1.0, cos, d_period, -amplitude * sin])
    };
    let solution = gauss_newton(
        x_um,
        y,
        sigma,
        vec![offset0, amplitude0, period0, phase0],
        &eval,
    )?;

    let mut p = solution.params.clone();
    let mut cov = solution.covariance.clone();
    // Canonical form: positive amplitude and period, phase in (−π, π].
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[3] += std::f64::consts::PI;
        for j in 0..4 {
            cov[(1, j)] = -cov[(1, j)];
            cov[(j, 1)] = -cov[(j, 1)];
        }
    }
    p[2] = p[2].abs();
    p[3] = p[3].rem_euclid(std::f64::consts::TAU);
    if p[3] > std::f64::consts::PI {
        p[3] -= std::f64::consts::TAU;
    }

    let (offset, amplitude) = (p[0], p[1]);
    let visibility_raw = if offset > 0.0 { amplitude / offset } else { 0.0 };
    // σ² for V = A/O, including the A–O covariance term.
    let visibility_sigma = if offset > 0.0 {
        (cov[(1, 1)] / (offset * offset)
            + amplitude * amplitude * cov[(0, 0)] / offset.powi(4)
            - 2.0 * amplitude * cov[(0, 1)] / offset.powi(3))
        .max(0.0)
        .sqrt()
    } else {
        0.0
    };

    let sig = |j: usize| cov[(j, j)].max(0.0).sqrt();
    Ok(SinusoidFit {
        offset: Estimate {
            value: offset,
            sigma: sig(0),
        },
        amplitude: Estimate {
            value: amplitude,
            sigma: sig(1),
        },
        period_nm: Estimate {
            value: p[2] * 1e3,
            sigma: sig(2) * 1e3,
        },
        phase_rad: Estimate {
            value: p[3],
            sigma: sig(3),
        },
        visibility: Estimate {
            value: visibility_raw.clamp(0.0, 1.0),
            sigma: visibility_sigma,
        },
        residual_rms: solution.residual_rms,
        iterations: solution.iterations,
    })
}

/// Fits a fringe to Poisson count data with one reweighting pass.
///
/// Weighting by the observed √N overweights downward fluctuations wherever
/// counts are small, biasing the offset low and the visibility high. A first
/// fit with observed-count errors supplies a model curve; the final fit uses
/// σ = √max(model, 1), whose weights are independent of the noise.
pub fn fit_fringe_counts(x_um: &[f64], counts: &[f64]) -> Result<SinusoidFit, AnalysisError> {
    let first = fit_fringe(x_um, counts, Some(&poisson_sigmas(counts)))?;
    let model_sigmas: Vec<f64> = x_um
        .iter()
        .map(|&x| {
            let arg = std::f64::consts::TAU * x / first.period_um().value
                + first.phase_rad.value;
            let model = first.offset.value + first.amplitude.value * arg.cos();
            model.max(0.0).sqrt().max(1.0)
        })
        .collect();
    fit_fringe(x_um, counts, Some(&model_sigmas))
}

fn fit_gaussian(
    x_um: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    model: FitModel,
) -> Result<EnvelopeFit, AnalysisError> {
    if x_um.len() < 8 || y.len() < 8 {
        return Err(AnalysisError::InsufficientData(format!(
            "need at least 8 points, got {}",
            x_um.len().min(y.len())
        )));
    }
    let max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = y.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > min) {
        return Err(AnalysisError::InsufficientData(
            "data has no structure to fit".into(),
        ));
    }
    // Moment-based start: excess weight above the baseline (below, for a
    // dip) locates the center and sets the width.
    let (offset0, amp0) = match model {
        FitModel::GaussianDip => (max, min - max),
        _ => (min, max - min),
    };
    let excess: Vec<f64> = y.iter().map(|&v| (v - offset0) / amp0).collect();
    let total: f64 = excess.iter().sum();
    let center0 = x_um
        .iter()
        .zip(&excess)
        .map(|(x, q)| x * q)
        .sum::<f64>()
        / total;
    let var0 = x_um
        .iter()
        .zip(&excess)
        .map(|(x, q)| (x - center0) * (x - center0) * q)
        .sum::<f64>()
        / total;
    let sigma0 = var0.max(1e-12).sqrt();

    let eval = |p: &[f64], x: f64| -> (f64, Vec<f64>) {
        let (offset, amplitude, center, width) = (p[0], p[1], p[2], p[3]);
        let u = (x - center) / width;
        let g = (-0.5 * u * u).exp();
        let value = offset + amplitude * g;
        (
            value,
            vec![
                1.0,
                g,
                amplitude * g * u / width,
                amplitude * g * u * u / width,
            ],
        )
    };
    let solution = gauss_newton(
        x_um,
        y,
        sigma,
        vec![offset0, amp0, center0, sigma0],
        &eval,
    )?;

    let p = &solution.params;
    let cov = &solution.covariance;
    let sig = |j: usize| cov[(j, j)].max(0.0).sqrt();
    Ok(EnvelopeFit {
        model,
        offset: Estimate {
            value: p[0],
            sigma: sig(0),
        },
        amplitude: Estimate {
            value: p[1].abs(),
            sigma: sig(1),
        },
        center_um: Estimate {
            value: p[2],
            sigma: sig(2),
        },
        sigma_um: Estimate {
            value: p[3].abs(),
            sigma: sig(3),
        },
        residual_rms: solution.residual_rms,
        iterations: solution.iterations,
    })
}

/// Fit of offset + amplitude·exp(−(x−center)²/(2σ²)) to a bright envelope
/// (fringe amplitude vs delay). Reports FWHM = 2√(2 ln 2)·σ.
pub fn fit_envelope(
    x_um: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
) -> Result<EnvelopeFit, AnalysisError> {
    fit_gaussian(x_um, y, sigma, FitModel::GaussianEnvelope)
}

/// Fit of the inverted shape (a dip below a plateau) to coincidence-dip
/// data; the reported amplitude is the positive dip depth.
pub fn fit_hom_dip(
    x_um: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
) -> Result<EnvelopeFit, AnalysisError> {
    fit_gaussian(x_um, y, sigma, FitModel::GaussianDip)
}

/// How many fringe periods one extraction window spans.
const WINDOW_PERIODS: f64 = 4.0;
/// Minimum acceptable window: fewer points or a shorter span than this and
/// the local sinusoid is under-determined.
const MIN_WINDOW_POINTS: usize = 8;
const MIN_WINDOW_PERIODS: f64 = 1.5;

/// Splits a dense fringe scan into windows (at grid gaps wider than one
/// period, then into ~[`WINDOW_PERIODS`]-period chunks) and extracts each
/// window's fringe amplitude by a linear least-squares fit at the known
/// period. Returns (window centers, local amplitudes) — the input that
/// [`fit_envelope`] expects.
pub fn envelope_amplitude_extraction(
    x_um: &[f64],
    y: &[f64],
    period_um: f64,
) -> Result<(Vec<f64>, Vec<f64>), AnalysisError> {
    if !(period_um > 0.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "period must be positive, got {period_um}"
        )));
    }
    if x_um.len() != y.len() {
        return Err(AnalysisError::InvalidInput(format!(
            "{} x values but {} y values",
            x_um.len(),
            y.len()
        )));
    }
    if x_um.is_empty() {
        return Err(AnalysisError::WindowTooSmall(
            "no data points at all".into(),
        ));
    }

    // Gap-separated clusters of indices.
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..x_um.len() {
        if x_um[i] - x_um[i - 1] > period_um {
            clusters.push((start, i));
            start = i;
        }
    }
    clusters.push((start, x_um.len()));

    let mut centers = Vec::new();
    let mut amplitudes = Vec::new();
    for (lo, hi) in clusters {
        let span = x_um[hi - 1] - x_um[lo];
        let chunks = (span / (WINDOW_PERIODS * period_um)).ceil().max(1.0) as usize;
        for c in 0..chunks {
            // Balanced split: chunk sizes differ by at most one point.
            let a = lo + c * (hi - lo) / chunks;
            let b = lo + (c + 1) * (hi - lo) / chunks;
            let (x, y) = (&x_um[a..b], &y[a..b]);
            let span = if x.len() > 1 { x[x.len() - 1] - x[0] } else { 0.0 };
            if x.len() < MIN_WINDOW_POINTS || span < MIN_WINDOW_PERIODS * period_um {
                return Err(AnalysisError::WindowTooSmall(format!(
                    "window at {:.3} μm has {} points over {:.3} periods; need {} points over {}",
                    x.first().copied().unwrap_or(f64::NAN),
                    x.len(),
                    span / period_um,
                    MIN_WINDOW_POINTS,
                    MIN_WINDOW_PERIODS,
                )));
            }
            // Linear model O + B·cos(2πx/T) + C·sin(2πx/T).
            let mut a_mat = DMatrix::<f64>::zeros(3, 3);
            let mut rhs = DVector::<f64>::zeros(3);
            for (xi, yi) in x.iter().zip(y) {
                let arg = std::f64::consts::TAU * xi / period_um;
                let row = [1.0, arg.cos(), arg.sin()];
                for i in 0..3 {
                    rhs[i] += row[i] * yi;
                    for j in 0..3 {
                        a_mat[(i, j)] += row[i] * row[j];
                    }
                }
            }
            let coeffs = a_mat.lu().solve(&rhs).ok_or(AnalysisError::Singular)?;
            centers.push((x[0] + x[x.len() - 1]) / 2.0);
            amplitudes.push(coeffs[1].hypot(coeffs[2]));
        }
    }
    Ok((centers, amplitudes))
}
