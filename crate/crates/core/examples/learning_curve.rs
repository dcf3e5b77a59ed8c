//! Overfitting threshold of the network as the book grows. Prints the
//! per-size summary and writes every cell as CSV.
//!
//! cargo run --release --example learning_curve -- curve.csv

use premium_lab::dataset::GeneratorParams;
use premium_lab::evaluation::{learning_curve, Family, Ladder, ModelSpec, OverfitConfig};

fn main() -> premium_lab::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "learning_curve.csv".into());
    let params = GeneratorParams { noise_scale: 1.0, ..Default::default() };
    let curve = learning_curve(
        &ModelSpec::default_for(Family::Ann),
        &Ladder::default_epochs(),
        &params,
        &[100, 200, 400],
        &[0, 1, 2],
        &OverfitConfig::default(),
    )?;
    println!("{:>6} {:>10} {:>10} {:>8}", "n", "mean", "se", "found");
    for s in curve.summary() {
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.1}%", v * 100.0));
        println!("{:>6} {:>10} {:>10} {:>5}/{}", s.n, pct(s.mean), pct(s.standard_error), s.found, s.total);
    }
    println!("non-increasing within one SE: {}", curve.is_non_increasing_within_se());
    std::fs::write(&out, curve.to_csv()).map_err(|e| premium_lab::Error::Io { path: out.clone().into(), source: e })?;
    Ok(())
}
