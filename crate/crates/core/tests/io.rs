mod common;

use std::fs;

use advbound::clever::CleverPreset;
use advbound::io::{
    load_dataset, load_model, load_reference_logits, parse_records_csv, run_attack, run_clever,
    run_evaluate, run_tradeoff, RunConfig, SecondChoice,
};
use advbound::{Classifier, Error, NormKind};
use common::fixture;

#[test]
fn exported_models_reproduce_reference_logits() {
    for stem in ["moons_mlp", "digits_mlp"] {
        let net = load_model::<f64>(fixture(&format!("{stem}.json"))).unwrap();
        let data = load_dataset::<f64>(fixture(&format!("{stem}.csv"))).unwrap();
        let reference = load_reference_logits(fixture(&format!("{stem}_logits.csv"))).unwrap();
        assert_eq!(reference.len(), data.len());
        for (index, logits) in reference {
            let got = net.forward(&data.inputs[index]).unwrap().logits;
            assert_eq!(got.len(), logits.len());
            for (g, r) in got.iter().zip(&logits) {
                assert!((g - r).abs() <= 1e-5, "{stem} row {index}: {g} vs {r}");
            }
        }
    }
}

#[test]
fn f32_models_load_too() {
    let net = load_model::<f32>(fixture("moons_mlp.json")).unwrap();
    let data = load_dataset::<f32>(fixture("moons_mlp.csv")).unwrap();
    assert!(net.forward(&data.inputs[0]).unwrap().logits.iter().all(|v| v.is_finite()));
}

fn config(dir: &std::path::Path, norm: NormKind) -> RunConfig {
    let mut cfg = RunConfig::new(fixture("moons_mlp.json"), fixture("moons_mlp.csv"), norm, 99, dir.join("out"));
    cfg.clever_preset = CleverPreset::S5x5;
    cfg.limit = Some(12);
    cfg
}

#[test]
fn evaluate_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), NormKind::Infinity);
    let report = run_evaluate(&cfg).unwrap();
    for name in ["records.csv", "summary.csv", "distances.svg"] {
        assert!(cfg.out.join(name).is_file(), "{name}");
    }
    let text = fs::read_to_string(cfg.out.join("records.csv")).unwrap();
    let parsed = parse_records_csv(&text).unwrap();
    assert_eq!(parsed.len(), report.records.len());
    for (p, r) in parsed.iter().zip(&report.records) {
        assert_eq!(p.distance_min, r.distance_min);
        assert_eq!(p.distance_alg1, r.distance_alg1);
        assert_eq!(p.distance_second, r.distance_second);
        assert_eq!(p.clever_score, r.clever_score);
        assert_eq!((p.index, p.winner, p.clever_valid), (r.index, r.winner, r.clever_valid));
    }
    let summary = fs::read_to_string(cfg.out.join("summary.csv")).unwrap();
    assert!(summary.lines().filter(|l| l.starts_with("adversarial_accuracy,")).count() == 4);
    assert!(summary.contains("clever_error_ratio,,"));
}

#[test]
fn misclassified_rows_have_empty_clever_fields() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    // row 0 carries the wrong label
    let net = load_model::<f64>(fixture("moons_mlp.json")).unwrap();
    let x = [0.3, 0.7];
    let y = net.forward(&advbound::Tensor64::from_vec(x.to_vec())).unwrap().label;
    fs::write(&data, format!("label,f0,f1\n{},0.3,0.7\n{y},0.3,0.7\n", 1 - y)).unwrap();
    let mut cfg = config(dir.path(), NormKind::Two);
    cfg.data = data;
    run_evaluate(&cfg).unwrap();
    let text = fs::read_to_string(cfg.out.join("records.csv")).unwrap();
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("0,") && first.ends_with("misclassified,,"), "{first}");
}

#[test]
fn attack_clever_and_tradeoff_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), NormKind::One);
    cfg.second = SecondChoice::None;
    let report = run_attack(&cfg).unwrap();
    assert!(report.records.iter().all(|r| r.clever_score.is_none() && r.distance_second.is_none()));

    let rows = run_clever(&cfg, 0.2).unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().filter_map(|r| r.score).all(|s| (0.0..=0.2).contains(&s)));
    assert!(cfg.out.join("clever.csv").is_file());

    cfg.norm = NormKind::Infinity;
    cfg.eps_step = Some(0.02);
    cfg.max_iters = Some(50);
    let rows = run_tradeoff(&cfg, 2, 1).unwrap();
    assert_eq!(rows.iter().map(|r| r.max_iters).collect::<Vec<_>>(), vec![50, 100, 200]);
    assert!(cfg.out.join("tradeoff.svg").is_file());
    assert!(cfg.out.join("tradeoff.csv").is_file());
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let truncated = dir.path().join("m.json");
    fs::write(&truncated, &fs::read_to_string(fixture("moons_mlp.json")).unwrap()[..200]).unwrap();
    let mut cfg = config(dir.path(), NormKind::Two);
    cfg.model = truncated;
    let err = run_evaluate(&cfg).unwrap_err();
    assert!(matches!(err, Error::ModelParse(_)));
    assert_eq!(err.exit_code(), 3);

    let mut cfg = config(dir.path(), NormKind::Two);
    cfg.eps_step = Some(-1.0);
    assert_eq!(run_evaluate(&cfg).unwrap_err().exit_code(), 2);

    let wide = dir.path().join("wide.csv");
    fs::write(&wide, "label,f0,f1,f2\n0,0.1,0.2,0.3\n").unwrap();
    let mut cfg = config(dir.path(), NormKind::Two);
    cfg.data = wide;
    assert!(matches!(run_evaluate(&cfg).unwrap_err(), Error::Row { row: 0, .. }));
}
