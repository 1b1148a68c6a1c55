use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use competing_risks::io::write_sample_csv;
use competing_risks::model::CensoredSample;

fn crisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crisk"))
        .args(args)
        .env_remove("CRISK_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "stderr: {}", stderr(o));
    serde_json::from_str(&stdout(o)).expect("valid JSON on stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn sample_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = crisk(&["sample", "--n", "25", "--seed", "11", "--censor", "0.2", "--out", p(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("time,event\n"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",0")).count(), 5);

    let other = crisk(&["sample", "--n", "25", "--seed", "12", "--censor", "0.2"]);
    assert_ne!(stdout(&other), text);
}

#[test]
fn sample_then_fit_both_ways() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let chain = dir.path().join("chain.csv");
    assert!(crisk(&["sample", "--n", "40", "--seed", "3", "--censor", "0.1", "--out", p(&data)]).status.success());

    let mle = json(&crisk(&["fit-mle", p(&data)]));
    for key in ["eta0", "eta1", "beta"] {
        assert!(mle["params"][key].as_f64().unwrap() > 0.0);
    }
    assert!(mle["loglik_trace"].as_array().unwrap().len() >= 2);
    assert!(mle["stop_reason"].is_string());

    let bayes = json(&crisk(&[
        "fit-bayes",
        p(&data),
        "--draws",
        "4000",
        "--burn-in",
        "1000",
        "--thin",
        "2",
        "--seed",
        "5",
        "--loss",
        "gq:1",
        "--loss",
        "entropy:-1",
        "--eta0-interval",
        "1,3",
        "--eta1-interval",
        "0.5,1.5",
        "--export-chain",
        p(&chain),
    ]));
    assert_eq!(bayes["retained_draws"], 1500);
    let reports = bayes["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    // GQ with alpha = 1 and entropy with p = -1 are the same estimator
    for key in ["eta0", "eta1", "beta"] {
        let a = reports[0][key]["estimate"].as_f64().unwrap();
        let b = reports[1][key]["estimate"].as_f64().unwrap();
        assert!((a - b).abs() <= 1e-5 * a.abs(), "{key}: {a} vs {b}");
    }
    let chain = fs::read_to_string(&chain).unwrap();
    assert_eq!(chain.lines().next(), Some("iteration,eta0,eta1,beta,accepted"));
    assert_eq!(chain.lines().count(), 1501);
}

#[test]
fn fit_mle_on_exponential_data_gives_sample_mean() {
    let times = [0.3, 0.9, 1.4, 2.2, 2.8, 3.5, 4.1, 5.0];
    let sample = CensoredSample::uncensored(&times).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.csv");
    write_sample_csv(&sample, fs::File::create(&path).unwrap()).unwrap();

    let out = json(&crisk(&["fit-mle", p(&path), "--init-eta0", "2", "--init-eta1", "1e6", "--init-beta", "2"]));
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    let eta0 = out["params"]["eta0"].as_f64().unwrap();
    assert!((eta0 - mean).abs() < 1e-3 * mean, "{eta0} vs {mean}");
}

#[test]
fn malformed_csv_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "time,event\n0.5,1\n1.0,1\nabc,0\n").unwrap();
    let o = crisk(&["fit-mle", p(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let missing = crisk(&["fit-mle", p(&dir.path().join("nope.csv"))]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(crisk(&["fit-mle"]).status.code(), Some(1));
    assert_eq!(crisk(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(crisk(&["sample", "--censor", "1.0"]).status.code(), Some(1));
    assert_eq!(crisk(&["fit-bayes", "x.csv", "--loss", "entropy:0"]).status.code(), Some(1));
    // the three --init flags go together
    assert_eq!(crisk(&["fit-mle", "x.csv", "--init-eta0", "2"]).status.code(), Some(1));
    assert_eq!(crisk(&["--help"]).status.code(), Some(0));
}

#[test]
fn compare_study_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("plan.toml");
    fs::write(
        &config,
        "n = 12\ncensor_fraction = 0.2\nreplications = 4\nmaster_seed = 7\n\
         mh_draws = 2000\nmh_burn_in = 500\nmh_thin = 2\n",
    )
    .unwrap();
    let o = crisk(&["study", "compare", "--config", p(&config), "--out", p(dir.path()), "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);

    let pitman = fs::read_to_string(dir.path().join("pitman_12_20.csv")).unwrap();
    assert_eq!(
        pitman.lines().next(),
        Some("n,censoring,parameter,GQ(alpha=-2),entropy(p=-1),Linex(r=-0.5)")
    );
    assert_eq!(pitman.lines().count(), 4);
    let imse = fs::read_to_string(dir.path().join("imse_12_20.csv")).unwrap();
    assert_eq!(
        imse.lines().next(),
        Some("n,censoring,parameter,MLE,GQ(alpha=-2),entropy(p=-1),Linex(r=-0.5)")
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("compare_12_20.json")).unwrap()).unwrap();
    assert_eq!(summary["replications"], 4);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "n = 12\nreplicatoins = 4\n").unwrap();
    assert_eq!(crisk(&["study", "mle", "--config", p(&bad)]).status.code(), Some(1));
}

#[test]
fn study_overrides_and_mle_headers() {
    let dir = tempfile::tempdir().unwrap();
    let o = crisk(&[
        "study", "mle", "--n", "10,15", "--censor", "0.1", "--replications", "5", "--out", p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for n in [10, 15] {
        let table = fs::read_to_string(dir.path().join(format!("mle_{n}_10.csv"))).unwrap();
        assert_eq!(
            table.lines().next(),
            Some("n,censoring,parameter,mle,quadratic_error,mean_squared_error,used,excluded")
        );
    }
}

#[test]
fn curves_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curves.csv");
    let svg = dir.path().join("curves.svg");
    let o = crisk(&[
        "curves", "--params", "a=2,1,2", "--params", "b=3,1.5,1", "--points", "20", "--out", p(&csv), "--svg",
        p(&svg),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 21);
    assert!(table.lines().next().unwrap().starts_with("t,"));
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    assert_eq!(crisk(&["curves", "--params", "a=2,1"]).status.code(), Some(1));
}
