use stochassign_cli::config::{Model, EXAMPLE1, EXAMPLE2};
use stochassign_cli::{parse_config, parse_gain, CliError};

const MINIMAL: &str = r#"{
  "mode": "discrete",
  "system": {"h": [[0.5, 1.0], [0.0, 0.2]], "l": [[0.1, 0.0], [0.0, 0.1]], "f": [0.0, 1.0]},
  "assignment": {"alpha": 0.2, "lambdas": [[0.3, 0.0], [-0.4, 0.0]]},
  "noise": {"delta": 0.01}
}"#;

#[test]
fn bundled_configs_parse() {
    for text in [EXAMPLE1, EXAMPLE2] {
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.repeats, 3);
        assert_eq!(cfg.seed, 1);
        assert!(matches!(cfg.model().unwrap(), Model::Reduced(_)));
    }
}

#[test]
fn defaults_fill_missing_blocks() {
    let cfg = parse_config(MINIMAL).unwrap();
    assert_eq!(cfg.seed, 1);
    assert_eq!(cfg.repeats, 1);
    assert_eq!(cfg.noise.substeps, 1);
    let lc = cfg.learner_config();
    assert_eq!(lc.epsilon, 1e-8);
    assert_eq!(lc.step.beta(4), 0.25);
}

#[test]
fn serialized_config_round_trips() {
    for text in [EXAMPLE1, EXAMPLE2, MINIMAL] {
        let cfg = parse_config(text).unwrap();
        assert_eq!(parse_config(&cfg.to_json()).unwrap(), cfg);
    }
}

#[test]
fn syntax_errors_carry_location() {
    match parse_config("{\n  \"mode\": discrete\n}") {
        Err(CliError::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
    let err = parse_config(&MINIMAL.replace("\"noise\"", "\"noize\"")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn semantic_errors_are_collected() {
    let bad = MINIMAL
        .replace("\"delta\": 0.01", "\"delta\": -0.01")
        .replace("[[0.3, 0.0], [-0.4, 0.0]]", "[[0.3, 0.0]]");
    match parse_config(&bad) {
        Err(CliError::Validation(msgs)) => assert!(msgs.len() >= 2, "{msgs:?}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unpaired_complex_targets_are_rejected() {
    let bad = MINIMAL.replace("[[0.3, 0.0], [-0.4, 0.0]]", "[[0.3, 1.0], [0.3, 2.0]]");
    assert!(matches!(parse_config(&bad), Err(CliError::Validation(_))));
}

#[test]
fn noise_block_must_match_mode() {
    let bad = MINIMAL.replace("\"delta\": 0.01", "\"dt\": 0.1");
    assert!(parse_config(&bad).is_err());
}

#[test]
fn gain_strings() {
    assert_eq!(parse_gain("6").unwrap(), vec![6.0]);
    assert_eq!(parse_gain("[6, -4, 2]").unwrap(), vec![6.0, -4.0, 2.0]);
    assert_eq!(parse_gain(" 1e-3  2.5,3 ").unwrap(), vec![1e-3, 2.5, 3.0]);
    for bad in ["", "[]", "1,,x", "nan", "inf", "[1, 2"] {
        assert!(parse_gain(bad).is_err(), "{bad:?}");
    }
}
