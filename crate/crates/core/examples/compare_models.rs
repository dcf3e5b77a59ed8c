//! Fits all three families on one split and prints the comparison tables.

use premium_lab::dataset::{generate_synthetic, split_half, GeneratorParams};
use premium_lab::evaluation::{compare, CompareOptions, Family, ModelSpec};

fn main() -> premium_lab::Result<()> {
    let params = GeneratorParams::default();
    let data = generate_synthetic(&params)?;
    let (train, test) = split_half(&data, params.seed)?;

    let models = [Family::Glm, Family::Gam, Family::Ann]
        .into_iter()
        .map(|f| ModelSpec::default_for(f).fit(&train, &params.encoding))
        .collect::<premium_lab::Result<Vec<_>>>()?;
    let report = compare(&models, &train, &test, &params.encoding, &CompareOptions::default())?;
    print!("{}", report.to_markdown());

    let (gam, ann) = (report.get(Family::Gam).unwrap(), report.get(Family::Ann).unwrap());
    println!(
        "\nANN band {} GAM band",
        if gam.band.contains(&ann.band) { "sits inside the" } else { "is not inside the" }
    );
    Ok(())
}
