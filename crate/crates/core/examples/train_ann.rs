//! Trains the 6-8-1 network and writes its loss history as CSV.
//!
//! cargo run --example train_ann -- ann_loss.csv

use premium_lab::ann::{predict_ann, train, NetworkTopology, TrainingConfig};
use premium_lab::dataset::{generate_synthetic, split_half, GeneratorParams};
use premium_lab::evaluation::{predict_dataset, relative_rmse};

fn main() -> premium_lab::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "ann_loss.csv".into());
    let params = GeneratorParams::default();
    let data = generate_synthetic(&params)?;
    let (train_half, test) = split_half(&data, 0)?;

    let config = TrainingConfig::default();
    let model = train(&train_half, &params.encoding, &NetworkTopology::default(), &config)?;
    println!(
        "ran {} epochs, best validation loss at epoch {} ({:.5})",
        model.stopped_epoch,
        model.best_epoch,
        model.val_loss[model.best_epoch - 1]
    );

    let pred = predict_dataset(&model, &test, &params.encoding);
    println!("test relative RMSE {:.3}", relative_rmse(&pred, &test.targets()));
    let first = &test.features(&params.encoding)[0];
    println!("first test customer: predicted {:.0}, actual {:.0}", predict_ann(&model, first), test.targets()[0]);

    std::fs::write(&out, model.loss_csv()).map_err(|e| premium_lab::Error::Io { path: out.clone().into(), source: e })?;
    println!("loss history written to {out}");
    Ok(())
}
