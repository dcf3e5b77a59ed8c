use std::path::{Path, PathBuf};

use premium_lab::cli::{manifest_path, run, test_index_path, RunManifest, EXIT_CONVERGENCE, EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn lab(args: &[&str]) -> i32 {
    run(std::iter::once("premium-lab").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, n: usize, seed: u64, config: Option<&Path>) -> PathBuf {
    let out = dir.join(name);
    let (n, seed) = (n.to_string(), seed.to_string());
    let mut args = vec!["gen", "--n", &n, "--seed", &seed, "-o", s(&out)];
    if let Some(c) = config {
        args.extend(["--config", s(c)]);
    }
    assert_eq!(lab(&args), EXIT_OK);
    out
}

fn fit(family: &str, data: &Path, out: &Path, config: Option<&Path>) -> i32 {
    let mut args = vec!["fit", "--family", family, "--in", s(data), "--seed", "7", "-o", s(out)];
    if let Some(c) = config {
        args.extend(["--config", s(c)]);
    }
    lab(&args)
}

#[test]
fn gen_is_deterministic_and_validates_n() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.csv", 200, 7, None);
    let b = gen(dir.path(), "b.csv", 200, 7, None);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 201);
    let m = RunManifest::parse(&std::fs::read_to_string(manifest_path(&a)).unwrap()).unwrap();
    assert_eq!((m.command.as_str(), m.seed), ("gen", Some(7)));

    assert_eq!(lab(&["gen", "--n", "0"]), EXIT_USAGE);
    // the generator needs at least 10 customers
    assert_eq!(lab(&["gen", "--n", "5"]), EXIT_USAGE);
    assert_eq!(lab(&["gen", "--n", "10", "-o", "/nonexistent-dir/x.csv"]), EXIT_DATA);
}

#[test]
fn fit_writes_artifact_index_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "data.csv", 200, 7, None);
    let model = dir.path().join("m.glm");
    assert_eq!(fit("glm", &data, &model, None), EXIT_OK);
    let text = std::fs::read_to_string(&model).unwrap();
    let start = text.find("[coefficients]").unwrap();
    let block = text[start..].split("\n\n").next().unwrap();
    assert_eq!(block.lines().filter(|l| l.contains(" = ")).count(), 7);
    let index = std::fs::read_to_string(test_index_path(&model)).unwrap();
    assert_eq!(index.lines().count(), 101);
    assert!(manifest_path(&model).exists());

    let small = gen(dir.path(), "small.csv", 10, 1, None);
    assert_eq!(fit("gam", &small, &dir.path().join("m.gam"), None), EXIT_DATA);

    let cfg = dir.path().join("hot.cfg");
    std::fs::write(&cfg, "[ann]\nlearning_rate = 1000000\n").unwrap();
    assert_eq!(fit("ann", &data, &dir.path().join("m.ann"), Some(&cfg)), EXIT_CONVERGENCE);
    assert_eq!(lab(&["fit", "--family", "svm", "--in", s(&data), "-o", "x"]), EXIT_USAGE);
}

#[test]
fn fit_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "data.csv", 120, 3, None);
    let (a, b) = (dir.path().join("a.ann"), dir.path().join("b.ann"));
    let cfg = dir.path().join("short.cfg");
    std::fs::write(&cfg, "[ann]\nmax_epochs = 300\nearly_stop_patience = 100\n").unwrap();
    assert_eq!(fit("ann", &data, &a, Some(&cfg)), EXIT_OK);
    assert_eq!(fit("ann", &data, &b, Some(&cfg)), EXIT_OK);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(test_index_path(&a)).unwrap(), std::fs::read(test_index_path(&b)).unwrap());
}

#[test]
fn predict_ratios_and_optional_actuals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("clean.cfg");
    std::fs::write(&cfg, "[generator]\nnoise_scale = 0\ninteraction = 0\nage_quadratic = 0\n").unwrap();
    let data = gen(dir.path(), "data.csv", 200, 2, Some(&cfg));
    let model = dir.path().join("m.glm");
    assert_eq!(fit("glm", &data, &model, None), EXIT_OK);

    let out = dir.path().join("pred.csv");
    assert_eq!(lab(&["predict", "--model", s(&model), "--in", s(&data), "-o", s(&out)]), EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id,predicted_expenditure,ratio"));
    for l in lines {
        let ratio: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!((ratio - 1.0).abs() < 1e-9, "{l}");
    }

    // drop the expenditure column
    let bare = dir.path().join("bare.csv");
    let stripped: String = std::fs::read_to_string(&data)
        .unwrap()
        .lines()
        .map(|l| format!("{}\n", &l[..l.rfind(',').unwrap()]))
        .collect();
    std::fs::write(&bare, stripped).unwrap();
    let out2 = dir.path().join("pred2.csv");
    assert_eq!(lab(&["predict", "--model", s(&model), "--in", s(&bare), "-o", s(&out2)]), EXIT_OK);
    let text2 = std::fs::read_to_string(&out2).unwrap();
    assert!(text2.starts_with("id,predicted_expenditure\n"));
    assert_eq!(text2.lines().count(), 201);

    let junk = dir.path().join("junk.model");
    std::fs::write(&junk, "family = glm\n").unwrap();
    assert_eq!(lab(&["predict", "--model", s(&junk), "--in", s(&data)]), EXIT_DATA);
}

#[test]
fn compare_needs_two_models_with_one_test_index() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "data.csv", 200, 7, None);
    let (glm, gam) = (dir.path().join("m.glm"), dir.path().join("m.gam"));
    assert_eq!(fit("glm", &data, &glm, None), EXIT_OK);
    assert_eq!(fit("gam", &data, &gam, None), EXIT_OK);
    let report = dir.path().join("report.md");
    let args = ["compare", "--data", s(&data), "-o", s(&report), s(&glm), s(&gam)];

    assert_eq!(lab(&args[..6]), EXIT_USAGE);
    assert_eq!(lab(&args), EXIT_OK);
    let first = std::fs::read(&report).unwrap();
    let first_csv = std::fs::read(report.with_extension("csv")).unwrap();
    assert_eq!(lab(&args), EXIT_OK);
    assert_eq!(std::fs::read(&report).unwrap(), first);
    assert_eq!(std::fs::read(report.with_extension("csv")).unwrap(), first_csv);
    let md = String::from_utf8(first).unwrap();
    assert!(md.contains("| GLM |") && md.contains("| GAM |"));

    // refit the GAM on a different split
    assert_eq!(
        lab(&["fit", "--family", "gam", "--in", s(&data), "--seed", "8", "-o", s(&gam)]),
        EXIT_OK
    );
    assert_eq!(lab(&args), EXIT_DATA);
}
