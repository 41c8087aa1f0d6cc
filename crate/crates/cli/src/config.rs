//! Scenario configuration documents.
//!
//! A document is TOML with up to seven sections — `[source]`, `[delays]`,
//! `[spectral]`, `[grids]`, `[detection]`, `[rates]`, `[run]` — every key
//! optional with documented defaults, unknown keys rejected. Dimensional
//! values are strings carrying a mandatory unit (`"200 um"`, `"810 nm"`,
//! `"20 kHz"`); bare numbers are reserved for dimensionless quantities.

use serde::Deserialize;
use toml::Spanned;

use debroglie::experiment::{Scenario, SourceKind};
use debroglie::spectral::SpectralModel;

use crate::CliError;

/// Accepted length units, scaled to μm.
const LENGTH_UNITS: &[(&str, f64)] = &[
    ("nm", 1e-3),
    ("um", 1.0),
    ("µm", 1.0),
    ("μm", 1.0),
    ("mm", 1e3),
];
/// Accepted rate units, scaled to events per second.
const RATE_UNITS: &[(&str, f64)] = &[("kHz", 1e3), ("Hz", 1.0), ("/s", 1.0)];
/// Accepted time units, scaled to seconds.
const TIME_UNITS: &[(&str, f64)] = &[("ms", 1e-3), ("s", 1.0)];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    source: Option<SourceSection>,
    delays: Option<DelaysSection>,
    spectral: Option<SpectralSection>,
    grids: Option<GridsSection>,
    detection: Option<DetectionSection>,
    rates: Option<RatesSection>,
    run: Option<RunSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceSection {
    /// "entangled" | "single_photon" | "ghz"
    kind: Option<Spanned<String>>,
    /// Photon number for the "ghz" source.
    photon_number: Option<u32>,
    werner_p: Option<f64>,
    v_floor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DelaysSection {
    #[serde(rename = "delta_L1")]
    delta_l1: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectralSection {
    lambda0: Option<Spanned<String>>,
    xi_single: Option<Spanned<String>>,
    xi_pump: Option<Spanned<String>>,
    enabled: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridsSection {
    fringe_center: Option<Spanned<String>>,
    fringe_half_span: Option<Spanned<String>>,
    fringe_step: Option<Spanned<String>>,
    envelope_half_range: Option<Spanned<String>>,
    envelope_window_spacing: Option<Spanned<String>>,
    hom_half_span: Option<Spanned<String>>,
    hom_step: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionSection {
    coupling_efficiency: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatesSection {
    pair_rate: Option<Spanned<String>>,
    integration_time: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    seed: Option<u64>,
}

/// ΔL₂ fringe grid: `center ± half_span` at `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeGrid {
    pub center_um: f64,
    pub half_span_um: f64,
    pub step_um: f64,
}

/// Envelope sampling: short fringe bursts around window centers spaced
/// `window_spacing` apart over `±half_range`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeGrid {
    pub half_range_um: f64,
    pub window_spacing_um: f64,
}

/// ΔL₁ grid for the input-splitter coincidence dip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomGrid {
    pub half_span_um: f64,
    pub step_um: f64,
}

/// A parsed, validated configuration. The scenario's ΔL₂ grid is a
/// placeholder; each command builds its own grid from the settings below.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub scenario: Scenario,
    pub fringe: FringeGrid,
    pub envelope: EnvelopeGrid,
    pub hom: HomGrid,
}

fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let clamped = offset.min(source.len());
    let prefix = &source[..clamped];
    let line = prefix.matches('\n').count() + 1;
    let col = prefix.len() - prefix.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, col)
}

fn parse_quantity(
    source: &str,
    key: &str,
    spanned: &Spanned<String>,
    units: &[(&str, f64)],
) -> Result<f64, CliError> {
    let raw = spanned.get_ref().trim();
    let mut best: Option<(&str, f64)> = None;
    for &(unit, factor) in units {
        if raw.ends_with(unit) && best.is_none_or(|(u, _)| unit.len() > u.len()) {
            best = Some((unit, factor));
        }
    }
    let (line, col) = line_col(source, spanned.span().start);
    let Some((unit, factor)) = best else {
        let expected: Vec<&str> = units.iter().map(|&(u, _)| u).collect();
        return Err(CliError::UnitMismatch {
            line,
            col,
            message: format!(
                "{key} = \"{raw}\" has no unit; expected one of {expected:?}"
            ),
        });
    };
    let number = raw[..raw.len() - unit.len()].trim();
    let value: f64 = number.parse().map_err(|_| CliError::UnitMismatch {
        line,
        col,
        message: format!("{key} = \"{raw}\": \"{number}\" is not a number"),
    })?;
    if !value.is_finite() {
        return Err(CliError::Range {
            message: format!("{key} = \"{raw}\" is not finite"),
        });
    }
    Ok(value * factor)
}

fn require_positive(key: &str, value: f64) -> Result<f64, CliError> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(CliError::Range {
            message: format!("{key} must be positive, got {value}"),
        })
    }
}

fn require_unit_interval(key: &str, value: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(CliError::Range {
            message: format!("{key} must lie in [0, 1], got {value}"),
        })
    }
}

/// Parses and validates a configuration document.
pub fn parse_scenario(document: &str) -> Result<ParsedConfig, CliError> {
    let doc: ConfigDoc = toml::from_str(document).map_err(|e| {
        let (line, col) = e
            .span()
            .map(|s| line_col(document, s.start))
            .unwrap_or((1, 1));
        CliError::Parse {
            line,
            col,
            message: e.message().to_string(),
        }
    })?;

    let source = doc.source.unwrap_or_default();
    let delays = doc.delays.unwrap_or_default();
    let spectral = doc.spectral.unwrap_or_default();
    let grids = doc.grids.unwrap_or_default();
    let detection = doc.detection.unwrap_or_default();
    let rates = doc.rates.unwrap_or_default();
    let run = doc.run.unwrap_or_default();

    let kind = match &source.kind {
        None => SourceKind::EntangledPair,
        Some(spanned) => match spanned.get_ref().as_str() {
            "entangled" => SourceKind::EntangledPair,
            "single_photon" => SourceKind::SinglePhotonPol,
            "ghz" => {
                let n = source.photon_number.ok_or_else(|| CliError::Range {
                    message: "source.kind = \"ghz\" requires source.photon_number".into(),
                })?;
                SourceKind::Ghz(n)
            }
            other => {
                let (line, col) = line_col(document, spanned.span().start);
                return Err(CliError::Parse {
                    line,
                    col,
                    message: format!(
                        "unknown source.kind \"{other}\"; expected \"entangled\", \
                         \"single_photon\", or \"ghz\""
                    ),
                });
            }
        },
    };
    if source.photon_number.is_some() && !matches!(kind, SourceKind::Ghz(_)) {
        return Err(CliError::Range {
            message: "source.photon_number is only meaningful for source.kind = \"ghz\"".into(),
        });
    }

    let defaults = SpectralModel::default();
    let lambda0_nm = match &spectral.lambda0 {
        Some(s) => {
            require_positive("spectral.lambda0", parse_quantity(document, "spectral.lambda0", s, LENGTH_UNITS)?)?
                * 1e3
        }
        None => defaults.lambda0_nm,
    };
    let xi_single_um = match &spectral.xi_single {
        Some(s) => require_positive(
            "spectral.xi_single",
            parse_quantity(document, "spectral.xi_single", s, LENGTH_UNITS)?,
        )?,
        None => defaults.xi_single_um,
    };
    let xi_pump_um = match &spectral.xi_pump {
        Some(s) => require_positive(
            "spectral.xi_pump",
            parse_quantity(document, "spectral.xi_pump", s, LENGTH_UNITS)?,
        )?,
        None => defaults.xi_pump_um,
    };
    let spectral_model = SpectralModel {
        lambda0_nm,
        xi_single_um,
        xi_pump_um,
        enabled: spectral.enabled.unwrap_or(defaults.enabled),
        ..SpectralModel::default()
    };

    let scenario_defaults = Scenario::default();
    let scenario = Scenario {
        source: kind,
        delta_l1_um: match &delays.delta_l1 {
            Some(s) => parse_quantity(document, "delays.delta_L1", s, LENGTH_UNITS)?,
            None => 0.0,
        },
        delta_l2_grid_um: vec![0.0],
        spectral: spectral_model,
        coupling_efficiency: require_unit_interval(
            "detection.coupling_efficiency",
            detection
                .coupling_efficiency
                .unwrap_or(scenario_defaults.coupling_efficiency),
        )?,
        pair_rate_per_s: match &rates.pair_rate {
            Some(s) => require_positive(
                "rates.pair_rate",
                parse_quantity(document, "rates.pair_rate", s, RATE_UNITS)?,
            )?,
            None => scenario_defaults.pair_rate_per_s,
        },
        integration_time_s: match &rates.integration_time {
            Some(s) => require_positive(
                "rates.integration_time",
                parse_quantity(document, "rates.integration_time", s, TIME_UNITS)?,
            )?,
            None => scenario_defaults.integration_time_s,
        },
        seed: run.seed.unwrap_or(scenario_defaults.seed),
        v_floor: require_unit_interval(
            "source.v_floor",
            source.v_floor.unwrap_or(scenario_defaults.v_floor),
        )?,
        werner_p: require_unit_interval(
            "source.werner_p",
            source.werner_p.unwrap_or(scenario_defaults.werner_p),
        )?,
    };
    if let SourceKind::Ghz(n) = scenario.source {
        if n == 0 || n > debroglie::fock::MAX_PHOTON_NUMBER {
            return Err(CliError::Range {
                message: format!(
                    "source.photon_number must lie in 1..={}, got {n}",
                    debroglie::fock::MAX_PHOTON_NUMBER
                ),
            });
        }
    }

    let length = |key: &'static str, spanned: &Option<Spanned<String>>, default: f64| {
        match spanned {
            Some(s) => parse_quantity(document, key, s, LENGTH_UNITS),
            None => Ok(default),
        }
    };
    let fringe = FringeGrid {
        center_um: length("grids.fringe_center", &grids.fringe_center, 0.0)?,
        half_span_um: require_positive(
            "grids.fringe_half_span",
            length("grids.fringe_half_span", &grids.fringe_half_span, 2.0)?,
        )?,
        step_um: require_positive(
            "grids.fringe_step",
            length("grids.fringe_step", &grids.fringe_step, 0.01)?,
        )?,
    };
    let envelope = EnvelopeGrid {
        half_range_um: require_positive(
            "grids.envelope_half_range",
            length("grids.envelope_half_range", &grids.envelope_half_range, 400.0)?,
        )?,
        window_spacing_um: require_positive(
            "grids.envelope_window_spacing",
            length(
                "grids.envelope_window_spacing",
                &grids.envelope_window_spacing,
                20.0,
            )?,
        )?,
    };
    let hom = HomGrid {
        half_span_um: require_positive(
            "grids.hom_half_span",
            length("grids.hom_half_span", &grids.hom_half_span, 400.0)?,
        )?,
        step_um: require_positive(
            "grids.hom_step",
            length("grids.hom_step", &grids.hom_step, 5.0)?,
        )?,
    };

    Ok(ParsedConfig {
        scenario,
        fringe,
        envelope,
        hom,
    })
}

/// Parses a standalone length (the `--grid-step` flag).
pub fn parse_length_flag(raw: &str) -> Result<f64, CliError> {
    let spanned = Spanned::new(0..raw.len(), raw.to_string());
    require_positive("--grid-step", parse_quantity(raw, "--grid-step", &spanned, LENGTH_UNITS)?)
}

/// Bundled configurations, one per canonical run.
pub const BUNDLED_CONFIGS: &[(&str, &str)] = &[
    ("paper_dl1_0", include_str!("../configs/paper_dl1_0.toml")),
    ("paper_dl1_200", include_str!("../configs/paper_dl1_200.toml")),
    ("paper_dl1_1000", include_str!("../configs/paper_dl1_1000.toml")),
    ("paper_dl1_10000", include_str!("../configs/paper_dl1_10000.toml")),
    (
        "paper_single_photon",
        include_str!("../configs/paper_single_photon.toml"),
    ),
    ("paper_hom", include_str!("../configs/paper_hom.toml")),
];

/// Resolves `--config`: an existing file path is read; otherwise the name
/// must match a bundled configuration.
pub fn load_config_text(arg: &str) -> Result<String, CliError> {
    let path = std::path::Path::new(arg);
    if path.exists() {
        return std::fs::read_to_string(path).map_err(|e| CliError::Runtime {
            message: format!("cannot read {arg}: {e}"),
        });
    }
    let stem = arg.strip_suffix(".toml").unwrap_or(arg);
    for &(name, text) in BUNDLED_CONFIGS {
        if name == stem {
            return Ok(text.to_string());
        }
    }
    let names: Vec<&str> = BUNDLED_CONFIGS.iter().map(|&(n, _)| n).collect();
    Err(CliError::Runtime {
        message: format!("config \"{arg}\" is neither a file nor a bundled name {names:?}"),
    })
}
