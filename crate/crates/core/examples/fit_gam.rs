//! Fits the additive model, then looks for pairwise interactions and
//! correlated inputs the way an analyst would before trusting the smooths.

use premium_lab::dataset::{generate_synthetic, split_half, GeneratorParams, FEATURE_NAMES};
use premium_lab::gam::{
    add_interaction, collinearity_report, fit_gam, interaction_scan, Component, ScanConfig, SmoothConfig,
};
use premium_lab::glm::LinkKind;

fn main() -> premium_lab::Result<()> {
    // strong smoker x severity effect, smoker correlated with claims
    let params = GeneratorParams { seed: 11, interaction: 8.0, collinearity_rho: 0.6, ..Default::default() };
    let data = generate_synthetic(&params)?;
    let (train, _) = split_half(&data, 11)?;
    let enc = &params.encoding;

    let model = fit_gam(&train, enc, LinkKind::Identity, &SmoothConfig::default())?;
    println!("backfitting: {} cycles, RSS {:.4e}", model.diagnostics.cycles, model.diagnostics.rss);
    for c in &model.components {
        let kind = match c {
            Component::Spline(_) => "spline",
            Component::Linear(_) => "linear",
        };
        let span: Vec<String> = [0.0, 0.5, 1.0].iter().map(|&x| format!("{:+.0}", c.eval(x))).collect();
        println!("  {:<16}{kind:<8}f(0, .5, 1) = {}", FEATURE_NAMES[c.feature()], span.join(" "));
    }

    println!("\ninteraction scan");
    let scan = interaction_scan(&train, enc, &model, &ScanConfig::default())?;
    for cand in scan.iter().take(5) {
        println!(
            "  {:<14} x {:<16} score {:>8} p {:>6} {}",
            FEATURE_NAMES[cand.i],
            FEATURE_NAMES[cand.j],
            cand.score.map_or("-".into(), |s| format!("{s:.4}")),
            cand.p_value.map_or("-".into(), |p| format!("{p:.3}")),
            if cand.significant { "*" } else { "" }
        );
    }
    if let Some(best) = scan.first().filter(|c| c.significant) {
        let refit = add_interaction(&model, best.i, best.j, &train, enc)?;
        println!("refit with top pair: gamma {:.3e}, RSS {:.4e}", refit.interactions[0].gamma, refit.diagnostics.rss);
    }

    let col = collinearity_report(&train, enc, 0.5)?;
    println!("\nvariance inflation");
    for (name, v) in FEATURE_NAMES.iter().zip(col.vif) {
        println!("  {name:<16}{v:>8.2}");
    }
    for (i, j, r) in &col.flagged {
        println!("  flagged {} & {}: r = {r:.2}", FEATURE_NAMES[*i], FEATURE_NAMES[*j]);
    }
    Ok(())
}
