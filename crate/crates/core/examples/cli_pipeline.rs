//! Drives the command-line front end in-process: gen, fit x2, predict,
//! compare, then replays the fit manifest.

use premium_lab::cli::{manifest_path, run};

fn main() {
    let dir = std::env::temp_dir().join("premium-lab-demo");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let p = |name: &str| dir.join(name).display().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["gen".into(), "--n".into(), "200".into(), "--seed".into(), "0".into(), "-o".into(), p("data.csv")],
        vec!["fit".into(), "--family".into(), "gam".into(), "--in".into(), p("data.csv"), "--seed".into(), "0".into(), "-o".into(), p("model.gam")],
        vec!["fit".into(), "--family".into(), "ann".into(), "--in".into(), p("data.csv"), "--seed".into(), "0".into(), "-o".into(), p("model.ann")],
        vec!["predict".into(), "--model".into(), p("model.ann"), "--in".into(), p("data.csv"), "-o".into(), p("pred.csv")],
        vec!["compare".into(), "--data".into(), p("data.csv"), "-o".into(), p("report.md"), p("model.gam"), p("model.ann")],
        vec!["replay".into(), manifest_path(&dir.join("model.ann")).display().to_string()],
    ];
    for args in steps {
        let code = run(std::iter::once("premium-lab".to_string()).chain(args.iter().cloned()));
        println!("premium-lab {} -> exit {code}", args[0]);
        if code != 0 {
            std::process::exit(code);
        }
    }
    print!("\n{}", std::fs::read_to_string(dir.join("report.md")).expect("report"));
}
