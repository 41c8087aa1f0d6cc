//! Minimal end-to-end use of the library: scan the interferometer delay with
//! the default entangled-pair scenario and fit the coincidence fringe.

use debroglie::analysis::fit_fringe;
use debroglie::experiment::{scan, Scenario, SourceKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario {
        source: SourceKind::EntangledPair,
        delta_l2_grid_um: (-200..=200).map(|i| 0.01 * i as f64).collect(),
        ..Scenario::default()
    };
    let result = scan(&scenario)?;

    let delays: Vec<f64> = result.points.iter().map(|p| p.delta_l2_um).collect();
    let pairs: Vec<f64> = result.points.iter().map(|p| p.d1d2).collect();
    let fit = fit_fringe(&delays, &pairs, None)?;
    println!(
        "coincidence fringe: period {:.1} nm, visibility {:.4}",
        fit.period_nm.value,
        fit.visibility.value
    );
    Ok(())
}
