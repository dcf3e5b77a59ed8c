//! Walks GAM and ANN complexity ladders on noisy data and reports where
//! validation error starts climbing while training error keeps falling.

use premium_lab::dataset::{generate_synthetic, GeneratorParams};
use premium_lab::evaluation::{overfit_scan, Family, Ladder, ModelSpec, OverfitConfig};

fn main() -> premium_lab::Result<()> {
    let params = GeneratorParams { seed: 1, noise_scale: 1.0, ..Default::default() };
    let data = generate_synthetic(&params)?;
    let options = OverfitConfig { seed: 1, ..Default::default() };

    for family in [Family::Glm, Family::Gam, Family::Ann] {
        let report = overfit_scan(
            &ModelSpec::default_for(family),
            &Ladder::default_for(family),
            &data,
            &params.encoding,
            &options,
        )?;
        match (report.threshold, report.threshold_step) {
            (Some(t), Some(k)) => {
                println!("{family}: threshold {:.1}% at step {}", t * 100.0, report.steps[k].label)
            }
            _ => println!("{family}: no overfitting over {} step(s)", report.steps.len()),
        }
        if family == Family::Ann {
            println!("\n{}", report.to_csv().lines().step_by(5).collect::<Vec<_>>().join("\n"));
        }
    }
    Ok(())
}
