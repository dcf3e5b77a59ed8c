//! Fits identity and log-link GLMs and prints their coefficients.

use premium_lab::dataset::{generate_synthetic, split_half, GeneratorParams, FEATURE_NAMES};
use premium_lab::evaluation::{predict_dataset, relative_rmse};
use premium_lab::glm::{fit_glm, LinkKind};

fn main() -> premium_lab::Result<()> {
    let params = GeneratorParams { seed: 3, ..Default::default() };
    let data = generate_synthetic(&params)?;
    let (train, test) = split_half(&data, 3)?;

    for link in [LinkKind::Identity, LinkKind::Log] {
        let model = fit_glm(&train, &params.encoding, link)?;
        println!("link = {link}");
        println!("  {:<16}{:>14.3}", "intercept", model.intercept);
        for (name, b) in FEATURE_NAMES.iter().zip(model.coefficients) {
            println!("  {name:<16}{b:>14.3}");
        }
        let pred = predict_dataset(&model, &test, &params.encoding);
        println!(
            "  iterations {}, test relative RMSE {:.3}\n",
            model.diagnostics.iterations,
            relative_rmse(&pred, &test.targets())
        );
    }
    Ok(())
}
