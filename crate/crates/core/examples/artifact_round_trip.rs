//! Saves each family to text, reloads it and checks the predictions agree
//! bit for bit.

use premium_lab::artifact::{parse_model, render_model};
use premium_lab::dataset::{generate_synthetic, GeneratorParams};
use premium_lab::evaluation::{predict_dataset, Family, ModelSpec};

fn main() -> premium_lab::Result<()> {
    let params = GeneratorParams { n: 120, ..Default::default() };
    let data = generate_synthetic(&params)?;
    for family in [Family::Glm, Family::Gam, Family::Ann] {
        let model = ModelSpec::default_for(family).fit(&data, &params.encoding)?;
        let text = render_model(&model, &params.encoding);
        let (back, enc) = parse_model(&text)?;
        let same = predict_dataset(&model, &data, &params.encoding) == predict_dataset(&back, &data, &enc);
        println!("{family}: {} lines, {} bytes, predictions identical: {same}", text.lines().count(), text.len());
    }
    Ok(())
}
