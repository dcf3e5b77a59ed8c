//! Generates a synthetic customer book and prints the first rows as CSV.
//!
//! cargo run --example generate_data -- 200 7

use premium_lab::dataset::{generate_synthetic, split_half, write_csv, GeneratorParams};

fn main() -> premium_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);
    let params = GeneratorParams { n, seed, ..Default::default() };
    let data = generate_synthetic(&params)?;

    let mut buf = Vec::new();
    write_csv(&data, &mut buf).expect("in-memory write");
    for line in String::from_utf8_lossy(&buf).lines().take(6) {
        println!("{line}");
    }

    let y = data.targets();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (train, test) = split_half(&data, seed)?;
    println!("\n{} customers, mean expenditure {mean:.0}", data.len());
    println!("split: {} train / {} test", train.len(), test.len());
    Ok(())
}
