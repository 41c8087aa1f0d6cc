//! Command implementations. Every command writes deterministic artifacts
//! into the output directory — same config and seed, same bytes — and
//! returns the list of files it wrote.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use num_complex::Complex64;

use debroglie::analysis::{
    envelope_amplitude_extraction, fit_envelope, fit_fringe, fit_fringe_counts, fit_hom_dip,
    hom_visibility, poisson_sigmas, AnalysisError, EnvelopeFit, SinusoidFit,
};
use debroglie::experiment::{self, HomPoint, Scenario, ScanResult, SourceKind};
use debroglie::fock::Path;
use debroglie::spectral::SpectralModel;

use crate::config::ParsedConfig;
use crate::CliError;

/// Flags shared by every command.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// The `--config` argument as given, echoed in reports.
    pub config_label: String,
    pub seed: Option<u64>,
    pub grid_step_um: Option<f64>,
    pub no_noise: bool,
}

/// Fit models the `fit` command accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    Fringe,
    Envelope,
    HomDip,
}

/// Delays `center ± half_span` on a uniform step (always an odd count,
/// symmetric about the center).
pub fn symmetric_grid(center_um: f64, half_span_um: f64, step_um: f64) -> Vec<f64> {
    let n = (half_span_um / step_um).round().max(1.0) as i64;
    (-n..=n).map(|i| center_um + i as f64 * step_um).collect()
}

/// Fringe bursts (four periods wide) around window centers spaced
/// `window_spacing` apart across `±half_range` — dense enough to fit each
/// burst's amplitude, gapped enough for the extraction to split windows.
pub fn envelope_grid(
    half_range_um: f64,
    window_spacing_um: f64,
    period_um: f64,
    step_um: f64,
) -> Vec<f64> {
    let burst_half = 2.0 * period_um;
    let m = (half_range_um / window_spacing_um).floor() as i64;
    let mut points = Vec::new();
    for w in -m..=m {
        let center = w as f64 * window_spacing_um;
        points.extend(symmetric_grid(center, burst_half, step_um));
    }
    points
}

/// The interference fringe period for a source, in μm.
pub fn fringe_period_um(source: SourceKind, lambda0_um: f64) -> f64 {
    match source {
        SourceKind::SinglePhotonPol => lambda0_um,
        SourceKind::EntangledPair => lambda0_um / 2.0,
        SourceKind::Ghz(n) => lambda0_um / f64::from(n.max(1)),
    }
}

/// Whether the source can produce two-detector coincidences at all; decides
/// which CSV columns exist.
fn has_coincidences(source: SourceKind) -> bool {
    !matches!(source, SourceKind::SinglePhotonPol | SourceKind::Ghz(1))
}

fn fmt_axis(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_prob(v: f64) -> String {
    format!("{v:.12e}")
}

fn fmt_err(v: f64) -> String {
    format!("{v:.6e}")
}

fn count_sigma(n: u64) -> f64 {
    (n as f64).sqrt().max(1.0)
}

fn apply_overrides(scenario: &mut Scenario, opts: &RunOptions) {
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
}

// ---------------------------------------------------------------------------
// CSV emission

fn scan_csv(result: &ScanResult, no_noise: bool) -> String {
    let coinc = has_coincidences(result.scenario.source);
    let mut header: Vec<&str> = vec!["delta_L2_um", "P7", "P8"];
    if coinc {
        header.extend(["p_D1D2", "p_D3D4", "p_D2D3"]);
        if !no_noise {
            header.extend([
                "n_D1D2", "n_D3D4", "n_D2D3", "err_D1D2", "err_D3D4", "err_D2D3",
            ]);
        }
    } else if !no_noise {
        header.extend(["n_D1", "n_D2", "n_D3", "n_D4", "err_D1", "err_D2", "err_D3", "err_D4"]);
    }
    let mut out = header.join(",");
    out.push('\n');
    for p in &result.points {
        let mut row = vec![fmt_axis(p.delta_l2_um), fmt_prob(p.p7), fmt_prob(p.p8)];
        if coinc {
            row.push(fmt_prob(p.d1d2));
            row.push(fmt_prob(p.d3d4));
            row.push(fmt_prob(p.d2d3));
            if !no_noise {
                row.push(p.counts.d1d2.to_string());
                row.push(p.counts.d3d4.to_string());
                row.push(p.counts.d2d3.to_string());
                row.push(fmt_err(count_sigma(p.counts.d1d2)));
                row.push(fmt_err(count_sigma(p.counts.d3d4)));
                row.push(fmt_err(count_sigma(p.counts.d2d3)));
            }
        } else if !no_noise {
            for i in 0..4 {
                row.push(p.counts.singles[i].to_string());
            }
            for i in 0..4 {
                row.push(fmt_err(count_sigma(p.counts.singles[i])));
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn hom_csv(points: &[HomPoint], no_noise: bool) -> String {
    let mut out = if no_noise {
        "delta_L1_um,p_coincidence\n".to_string()
    } else {
        "delta_L1_um,p_coincidence,n_coincidence,err_coincidence\n".to_string()
    };
    for p in points {
        if no_noise {
            let _ = writeln!(out, "{},{}", fmt_axis(p.delta_l1_um), fmt_prob(p.coincidence));
        } else {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_axis(p.delta_l1_um),
                fmt_prob(p.coincidence),
                p.counts,
                fmt_err(count_sigma(p.counts))
            );
        }
    }
    out
}

/// Reads a CSV written by this tool back in: header names plus
/// column-major numeric data.
pub fn read_csv(path: &FsPath) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Runtime {
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Parse {
            line: 1,
            col: 1,
            message: "empty CSV".into(),
        })?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(CliError::Parse {
                line: i + 2,
                col: 1,
                message: format!(
                    "expected {} fields, found {}",
                    header.len(),
                    fields.len()
                ),
            });
        }
        for (j, field) in fields.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| CliError::Parse {
                line: i + 2,
                col: j + 1,
                message: format!("\"{field}\" is not a number"),
            })?;
            columns[j].push(value);
        }
    }
    Ok((header, columns))
}

// ---------------------------------------------------------------------------
// Report emission

fn preamble(command: &str, scenario: &Scenario, opts: &RunOptions) -> String {
    let mut out = String::new();
    let title = format!("{command} report");
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{}", "=".repeat(title.len()));
    let _ = writeln!(out);
    let _ = writeln!(out, "config: {}", opts.config_label);
    let _ = writeln!(
        out,
        "noise: {}",
        if opts.no_noise {
            "off (expectation values only)".to_string()
        } else {
            format!("poisson counting noise, seed {}", scenario.seed)
        }
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "[conventions]");
    let _ = writeln!(
        out,
        "beam splitter: out_a = sqrt(T) in_a + i sqrt(R) in_b;  out_b = i sqrt(R) in_a + sqrt(T) in_b"
    );
    let _ = writeln!(
        out,
        "polarizing splitter: H transmits, V reflects; half-wave plate at angle t maps (H,V) -> (cos2t H + sin2t V, sin2t H - cos2t V)"
    );
    let _ = writeln!(
        out,
        "delay: every photon in the delayed arm gains exp(+i 2 pi delta_L / lambda)"
    );
    let _ = writeln!(
        out,
        "with these signs one photon exits at P7 = (1 + sin(2 pi delta_L2 / lambda)) / 2; phase origins are convention-bound, periods and visibilities are not"
    );
    let _ = writeln!(
        out,
        "detectors: D1, D2 behind the splitter on output arm 7; D3, D4 behind output arm 8"
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "[scenario]");
    let source = match scenario.source {
        SourceKind::EntangledPair => format!(
            "polarization-entangled pair (werner_p = {:.4}, v_floor = {:.4})",
            scenario.werner_p, scenario.v_floor
        ),
        SourceKind::SinglePhotonPol => "single diagonally polarized photon".to_string(),
        SourceKind::Ghz(n) => format!(
            "{n}-photon polarization superposition (v_floor = {:.4})",
            scenario.v_floor
        ),
    };
    let _ = writeln!(out, "source: {source}");
    let _ = writeln!(out, "delta_L1: {:.6} um", scenario.delta_l1_um);
    let s = &scenario.spectral;
    let _ = writeln!(
        out,
        "spectrum: lambda0 = {:.4} nm; xi_single = {:.4} um; xi_pump = {:.4} um; model {}",
        s.lambda0_nm,
        s.xi_single_um,
        s.xi_pump_um,
        if s.enabled { "enabled" } else { "disabled" }
    );
    let _ = writeln!(
        out,
        "detection: coupling efficiency {:.4}; pair rate {:.1} /s; integration {:.4} s",
        scenario.coupling_efficiency, scenario.pair_rate_per_s, scenario.integration_time_s
    );
    out
}

fn grid_block(label: &str, points: &[f64], step_um: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out);
    let _ = writeln!(out, "[grid]");
    let _ = writeln!(
        out,
        "{label}: {} points, {:.6} um .. {:.6} um, step {:.6} um",
        points.len(),
        points.first().copied().unwrap_or(0.0),
        points.last().copied().unwrap_or(0.0),
        step_um
    );
    out
}

fn sinusoid_line(label: &str, fit: &Result<SinusoidFit, AnalysisError>) -> String {
    match fit {
        Ok(f) => format!(
            "fit {label}: period = {:.6} +/- {:.6} nm; visibility = {:.8} +/- {:.8}; offset = {:.8e}; amplitude = {:.8e}; phase = {:.8} rad; rms = {:.4e}; iterations = {}",
            f.period_nm.value,
            f.period_nm.sigma,
            f.visibility.value,
            f.visibility.sigma,
            f.offset.value,
            f.amplitude.value,
            f.phase_rad.value,
            f.residual_rms,
            f.iterations
        ),
        Err(e) => format!("fit {label}: unavailable ({e})"),
    }
}

fn envelope_line(label: &str, fit: &Result<EnvelopeFit, AnalysisError>) -> String {
    match fit {
        Ok(f) => {
            let fwhm = f.fwhm_um();
            format!(
                "fit {label}: fwhm = {:.6} +/- {:.6} um; center = {:.6} +/- {:.6} um; offset = {:.8e}; depth = {:.8e}; rms = {:.4e}; iterations = {}",
                fwhm.value,
                fwhm.sigma,
                f.center_um.value,
                f.center_um.sigma,
                f.offset.value,
                f.amplitude.value,
                f.residual_rms,
                f.iterations
            )
        }
        Err(e) => format!("fit {label}: unavailable ({e})"),
    }
}

fn max_abs_dev<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn fringe_results_block(result: &ScanResult, no_noise: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out);
    let _ = writeln!(out, "[results]");
    let points = &result.points;
    let x: Vec<f64> = points.iter().map(|p| p.delta_l2_um).collect();
    if has_coincidences(result.scenario.source) {
        let d1d2: Vec<f64> = points.iter().map(|p| p.d1d2).collect();
        let d3d4: Vec<f64> = points.iter().map(|p| p.d3d4).collect();
        let d2d3: Vec<f64> = points.iter().map(|p| p.d2d3).collect();
        for (label, y) in [("p_D1D2", &d1d2), ("p_D3D4", &d3d4), ("p_D2D3", &d2d3)] {
            let _ = writeln!(out, "{}", sinusoid_line(label, &fit_fringe(&x, y, None)));
        }
        if !no_noise {
            for (label, y) in [
                ("n_D1D2", points.iter().map(|p| p.counts.d1d2 as f64).collect::<Vec<_>>()),
                ("n_D3D4", points.iter().map(|p| p.counts.d3d4 as f64).collect::<Vec<_>>()),
                ("n_D2D3", points.iter().map(|p| p.counts.d2d3 as f64).collect::<Vec<_>>()),
            ] {
                let _ = writeln!(out, "{}", sinusoid_line(label, &fit_fringe_counts(&x, &y)));
            }
        }
        let even_photons = match result.scenario.source {
            SourceKind::EntangledPair => true,
            SourceKind::Ghz(n) => n % 2 == 0,
            SourceKind::SinglePhotonPol => false,
        };
        if even_photons {
            let _ = writeln!(
                out,
                "check max |p_D1D2 - p_D3D4| = {:.4e}",
                max_abs_dev(points.iter().map(|p| p.d1d2 - p.d3d4))
            );
        }
        if matches!(result.scenario.source, SourceKind::EntangledPair | SourceKind::Ghz(2)) {
            let sums: Vec<f64> = points.iter().map(|p| p.d1d2 + p.d2d3).collect();
            let mean = sums.iter().sum::<f64>() / sums.len() as f64;
            let _ = writeln!(
                out,
                "check anti-phase: max |(p_D1D2 + p_D2D3) - {:.8e}| = {:.4e}",
                mean,
                max_abs_dev(sums.iter().map(|s| s - mean))
            );
        }
    } else {
        let p7: Vec<f64> = points.iter().map(|p| p.p7).collect();
        let p8: Vec<f64> = points.iter().map(|p| p.p8).collect();
        let _ = writeln!(out, "{}", sinusoid_line("P7", &fit_fringe(&x, &p7, None)));
        let _ = writeln!(out, "{}", sinusoid_line("P8", &fit_fringe(&x, &p8, None)));
        if !no_noise {
            for (label, y) in [
                ("n_D1", points.iter().map(|p| p.counts.singles[0] as f64).collect::<Vec<_>>()),
                ("n_D3", points.iter().map(|p| p.counts.singles[2] as f64).collect::<Vec<_>>()),
            ] {
                let _ = writeln!(out, "{}", sinusoid_line(label, &fit_fringe_counts(&x, &y)));
            }
        }
        let _ = writeln!(
            out,
            "check max |P7 + P8 - 1| = {:.4e}",
            max_abs_dev(points.iter().map(|p| p.p7 + p.p8 - 1.0))
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Commands

/// Interferometer-delay scan: fringes in every channel the source feeds.
pub fn run_fringe_scan(cfg: &ParsedConfig, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let mut scenario = cfg.scenario.clone();
    apply_overrides(&mut scenario, opts);
    let step = opts.grid_step_um.unwrap_or(cfg.fringe.step_um);
    scenario.delta_l2_grid_um =
        symmetric_grid(cfg.fringe.center_um, cfg.fringe.half_span_um, step);
    let result = experiment::scan(&scenario)?;

    let mut report = preamble("fringe-scan", &scenario, opts);
    report.push_str(&grid_block("delta_L2", &scenario.delta_l2_grid_um, step));
    report.push_str(&fringe_results_block(&result, opts.no_noise));

    write_outputs(
        &opts.out_dir,
        &[
            ("scan.csv", scan_csv(&result, opts.no_noise)),
            ("report.txt", report),
        ],
    )
}

/// Input-splitter delay scan: the two-arm coincidence dip.
pub fn run_hom_scan(cfg: &ParsedConfig, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let mut scenario = cfg.scenario.clone();
    apply_overrides(&mut scenario, opts);
    let step = opts.grid_step_um.unwrap_or(cfg.hom.step_um);
    scenario.delta_l2_grid_um = symmetric_grid(0.0, cfg.hom.half_span_um, step);
    let points = experiment::hom_scan(&scenario)?;

    let mut report = preamble("hom-scan", &scenario, opts);
    report.push_str(&grid_block("delta_L1", &scenario.delta_l2_grid_um, step));
    report.push('\n');
    report.push_str("[results]\n");
    let x: Vec<f64> = points.iter().map(|p| p.delta_l1_um).collect();
    let fit = if opts.no_noise {
        let y: Vec<f64> = points.iter().map(|p| p.coincidence).collect();
        fit_hom_dip(&x, &y, None)
    } else {
        let y: Vec<f64> = points.iter().map(|p| p.counts as f64).collect();
        fit_hom_dip(&x, &y, Some(&poisson_sigmas(&y)))
    };
    let label = if opts.no_noise { "p_coincidence" } else { "n_coincidence" };
    let _ = writeln!(report, "{}", envelope_line(label, &fit));
    if let Ok(f) = &fit {
        let plateau = f.offset.value;
        let dip = f.offset.value - f.amplitude.value;
        match hom_visibility(plateau, dip) {
            Ok(v) => {
                // First-order propagation, covariance neglected.
                let rel = (f.amplitude.sigma / f.amplitude.value).hypot(f.offset.sigma / plateau);
                let _ = writeln!(
                    report,
                    "dip visibility = {:.8} +/- {:.8} (approx)",
                    v,
                    v * rel
                );
            }
            Err(e) => {
                let _ = writeln!(report, "dip visibility: unavailable ({e})");
            }
        }
    }

    write_outputs(
        &opts.out_dir,
        &[
            ("scan.csv", hom_csv(&points, opts.no_noise)),
            ("report.txt", report),
        ],
    )
}

/// Wide-range burst sampling of the fringe amplitude, then a coherence
/// envelope fit.
pub fn run_envelope_scan(cfg: &ParsedConfig, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let mut scenario = cfg.scenario.clone();
    apply_overrides(&mut scenario, opts);
    let step = opts.grid_step_um.unwrap_or(cfg.fringe.step_um);
    let period = fringe_period_um(scenario.source, scenario.spectral.lambda0_um());
    scenario.delta_l2_grid_um = envelope_grid(
        cfg.envelope.half_range_um,
        cfg.envelope.window_spacing_um,
        period,
        step,
    );
    let result = experiment::scan(&scenario)?;

    let coinc = has_coincidences(scenario.source);
    let x: Vec<f64> = result.points.iter().map(|p| p.delta_l2_um).collect();
    let y: Vec<f64> = result
        .points
        .iter()
        .map(|p| match (coinc, opts.no_noise) {
            (true, true) => p.d1d2,
            (true, false) => p.counts.d1d2 as f64,
            (false, true) => p.p7,
            (false, false) => p.counts.singles[0] as f64,
        })
        .collect();
    let y_label = match (coinc, opts.no_noise) {
        (true, true) => "p_D1D2",
        (true, false) => "n_D1D2",
        (false, true) => "P7",
        (false, false) => "n_D1",
    };

    let extraction = envelope_amplitude_extraction(&x, &y, period);
    let mut envelope_csv = "center_um,fringe_amplitude\n".to_string();
    let fit = match &extraction {
        Ok((centers, amplitudes)) => {
            for (c, a) in centers.iter().zip(amplitudes) {
                let _ = writeln!(envelope_csv, "{},{}", fmt_axis(*c), fmt_prob(*a));
            }
            Some(fit_envelope(centers, amplitudes, None))
        }
        Err(_) => None,
    };

    let mut report = preamble("envelope-scan", &scenario, opts);
    report.push_str(&grid_block("delta_L2", &scenario.delta_l2_grid_um, step));
    report.push('\n');
    report.push_str("[envelope]\n");
    let _ = writeln!(
        report,
        "fringe period assumed: {:.6} um; amplitude column: {y_label}",
        period
    );
    match (&extraction, &fit) {
        (Ok((centers, _)), Some(fit)) => {
            let _ = writeln!(report, "windows extracted: {}", centers.len());
            let _ = writeln!(report, "{}", envelope_line("envelope", fit));
        }
        (Err(e), _) => {
            let _ = writeln!(report, "extraction unavailable ({e})");
        }
        _ => unreachable!(),
    }

    write_outputs(
        &opts.out_dir,
        &[
            ("scan.csv", scan_csv(&result, opts.no_noise)),
            ("envelope.csv", envelope_csv),
            ("report.txt", report),
        ],
    )
}

/// N-photon superposition through the interferometer: state preparation
/// check plus the 1/N-period fringe.
pub fn run_ghz_noon(cfg: &ParsedConfig, n: u32, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let mut scenario = cfg.scenario.clone();
    scenario.source = SourceKind::Ghz(n);
    apply_overrides(&mut scenario, opts);
    if n == 0 || n > debroglie::fock::MAX_PHOTON_NUMBER {
        return Err(CliError::Range {
            message: format!(
                "--n must lie in 1..={}, got {n}",
                debroglie::fock::MAX_PHOTON_NUMBER
            ),
        });
    }
    let step = opts.grid_step_um.unwrap_or(cfg.fringe.step_um);
    scenario.delta_l2_grid_um =
        symmetric_grid(cfg.fringe.center_um, cfg.fringe.half_span_um, step);
    let result = experiment::scan(&scenario)?;

    let mut report = preamble("ghz-noon", &scenario, opts);
    report.push('\n');
    report.push_str("[state preparation]\n");
    let phis = [0.0, 0.7, 1.4, 2.1, 2.8];
    match noon_state_deviation(n, &phis, &scenario.spectral) {
        Ok(dev) => {
            let _ = writeln!(
                report,
                "max |amplitude - target| before the output splitter = {dev:.4e} over phi in {phis:?}"
            );
            let _ = writeln!(
                report,
                "target: (|{n},0> + exp(i {n} phi) |0,{n}>) / sqrt(2) on arms 5 and 6"
            );
        }
        Err(e) => {
            let _ = writeln!(report, "state check unavailable ({e})");
        }
    }
    report.push_str(&grid_block("delta_L2", &scenario.delta_l2_grid_um, step));
    report.push_str(&fringe_results_block(&result, opts.no_noise));

    write_outputs(
        &opts.out_dir,
        &[
            ("scan.csv", scan_csv(&result, opts.no_noise)),
            ("report.txt", report),
        ],
    )
}

/// Max deviation of the prepared two-arm state from
/// (|n,0> + e^{i n phi} |0,n>)/√2 across the given phases.
fn noon_state_deviation(
    n: u32,
    phis: &[f64],
    spectral: &SpectralModel,
) -> Result<f64, CliError> {
    let mut dev: f64 = 0.0;
    for &phi in phis {
        let state = experiment::ghz_to_noon(n, phi, spectral)?;
        let mut terms = 0;
        for (occ, amp) in state.terms() {
            terms += 1;
            let target = if occ.path_total(Path::P5) == n {
                Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
            } else if occ.path_total(Path::P6) == n {
                Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, f64::from(n) * phi)
            } else {
                return Err(CliError::Runtime {
                    message: format!("unexpected occupation {occ:?} in the prepared state"),
                });
            };
            dev = dev.max((amp - target).norm());
        }
        if terms != 2 {
            return Err(CliError::Runtime {
                message: format!("prepared state has {terms} terms, expected 2"),
            });
        }
    }
    Ok(dev)
}

/// Fits a model to one column of a previously written CSV.
pub fn run_fit(
    input: &FsPath,
    kind: FitKind,
    column: Option<&str>,
    opts: &RunOptions,
) -> Result<Vec<PathBuf>, CliError> {
    let (header, columns) = read_csv(input)?;
    if header.len() < 2 || columns[0].is_empty() {
        return Err(CliError::Parse {
            line: 1,
            col: 1,
            message: "need at least two columns and one data row".into(),
        });
    }
    let index = match column {
        None => 1,
        Some(name) => header.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Parse {
                line: 1,
                col: 1,
                message: format!("no column named \"{name}\" in {header:?}"),
            }
        })?,
    };
    let x = &columns[0];
    let y = &columns[index];
    let is_counts = header[index].starts_with("n_");

    let mut report = String::new();
    let title = "fit report";
    let _ = writeln!(report, "{title}");
    let _ = writeln!(report, "{}", "=".repeat(title.len()));
    let _ = writeln!(report);
    let _ = writeln!(
        report,
        "input: {}",
        input.file_name().map_or_else(
            || input.display().to_string(),
            |n| n.to_string_lossy().into_owned()
        )
    );
    let _ = writeln!(report, "column: {} against {}", header[index], header[0]);
    let _ = writeln!(report, "points: {}", x.len());
    let _ = writeln!(report);
    match kind {
        FitKind::Fringe => {
            let fit = if is_counts {
                fit_fringe_counts(x, y)?
            } else {
                fit_fringe(x, y, None)?
            };
            let _ = writeln!(report, "model: fringe (offset + amplitude cos(2 pi x / period + phase))");
            let _ = writeln!(report, "{}", sinusoid_line(&header[index], &Ok(fit)));
        }
        FitKind::Envelope => {
            let fit = fit_envelope(x, y, None)?;
            let _ = writeln!(report, "model: envelope (offset + amplitude gaussian)");
            let _ = writeln!(report, "{}", envelope_line(&header[index], &Ok(fit)));
        }
        FitKind::HomDip => {
            let fit = if is_counts {
                fit_hom_dip(x, y, Some(&poisson_sigmas(y)))?
            } else {
                fit_hom_dip(x, y, None)?
            };
            let _ = writeln!(report, "model: dip (plateau - depth gaussian)");
            let v = hom_visibility(fit.offset.value, fit.offset.value - fit.amplitude.value)?;
            let _ = writeln!(report, "{}", envelope_line(&header[index], &Ok(fit)));
            let _ = writeln!(report, "dip visibility = {v:.8}");
        }
    }

    write_outputs(&opts.out_dir, &[("fit_report.txt", report)])
}

fn write_outputs(out_dir: &FsPath, files: &[(&str, String)]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, content) in files {
        let path = out_dir.join(name);
        fs::write(&path, content)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_grid_is_symmetric_and_odd() {
        let g = symmetric_grid(0.0, 2.0, 0.01);
        assert_eq!(g.len(), 401);
        assert!((g[0] + 2.0).abs() < 1e-12);
        assert!((g[400] - 2.0).abs() < 1e-12);
        assert!((g[200]).abs() < 1e-12);
    }

    #[test]
    fn envelope_grid_bursts_are_gap_separated() {
        let g = envelope_grid(100.0, 20.0, 0.405, 0.01);
        // 11 windows, each 4 periods wide at a 10 nm step.
        assert_eq!(g.len(), 11 * 163);
        let max_gap = g.windows(2).map(|w| w[1] - w[0]).fold(0.0_f64, f64::max);
        assert!(max_gap > 0.405, "windows must be separated: {max_gap}");
    }

    #[test]
    fn source_kinds_choose_their_period_and_columns() {
        assert_eq!(fringe_period_um(SourceKind::SinglePhotonPol, 0.81), 0.81);
        assert_eq!(fringe_period_um(SourceKind::EntangledPair, 0.81), 0.405);
        assert_eq!(fringe_period_um(SourceKind::Ghz(4), 0.81), 0.2025);
        assert!(has_coincidences(SourceKind::EntangledPair));
        assert!(has_coincidences(SourceKind::Ghz(2)));
        assert!(!has_coincidences(SourceKind::Ghz(1)));
        assert!(!has_coincidences(SourceKind::SinglePhotonPol));
    }

    #[test]
    fn noon_deviation_is_tiny_for_supported_sizes() {
        let spectral = SpectralModel::default();
        for n in 1..=4 {
            let dev = noon_state_deviation(n, &[0.0, 0.9, 2.3], &spectral).unwrap();
            assert!(dev < 1e-12, "n={n}: {dev}");
        }
    }
}
