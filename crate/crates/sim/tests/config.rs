use faulty_ris_core::linalg::dbm_to_watts;
use faulty_ris_core::metrics::Method;
use faulty_ris_core::scenario::friis_reference_loss;
use faulty_ris_sim::config::{ConfigError, SimConfig};

#[test]
fn dump_round_trips() {
    let mut cfg = SimConfig::default();
    cfg.apply_toml("trials = 7\nNx = 6\nmethods = [\"robust\", \"baseline\"]\ngrid = \"30x20\"\ntx_power_dbm = 15.5")
        .unwrap();
    let mut back = SimConfig::default();
    back.apply_toml(&cfg.to_toml()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn defaults_validate() {
    SimConfig::default().validate().unwrap();
}

#[test]
fn override_beats_file_beats_default() {
    let mut cfg = SimConfig::default();
    assert_eq!(cfg.scenario.trials, 50);
    cfg.apply_toml("trials = 7\nseed = 3").unwrap();
    assert_eq!(cfg.scenario.trials, 7);
    cfg.apply_override("trials=9").unwrap();
    assert_eq!(cfg.scenario.trials, 9);
    assert_eq!(cfg.scenario.seed, 3);
}

#[test]
fn log_aliases_convert() {
    let mut cfg = SimConfig::default();
    cfg.apply_override("tx_power_dbm=20").unwrap();
    assert!((cfg.scenario.tx_power - dbm_to_watts(20.0)).abs() < 1e-15);
    cfg.apply_override("rician_factor_db=3").unwrap();
    assert!((cfg.scenario.rician_factor - 10f64.powf(0.3)).abs() < 1e-12);
}

#[test]
fn aliases_conflict_within_one_source() {
    let mut cfg = SimConfig::default();
    let err = cfg.apply_toml("tx_power = 0.1\ntx_power_dbm = 20").unwrap_err();
    assert!(matches!(err, ConfigError::Conflict(..)), "{err}");
}

#[test]
fn unknown_key_rejected() {
    let err = SimConfig::default().apply_override("not_a_key=1").unwrap_err();
    assert!(matches!(err, ConfigError::UnknownKey(_)), "{err}");
}

#[test]
fn malformed_override_rejected() {
    assert!(SimConfig::default().apply_override("trials").is_err());
    assert!(SimConfig::default().apply_override("trials=-3").is_err());
    assert!(SimConfig::default().apply_override("pattern=spiral").is_err());
}

#[test]
fn wavelength_drives_spacing_and_reference_loss() {
    let mut cfg = SimConfig::default();
    cfg.apply_override("wavelength=0.02").unwrap();
    assert_eq!(cfg.scenario.element_spacing, 0.01);
    assert_eq!(cfg.scenario.ref_loss, friis_reference_loss(0.02));
}

#[test]
fn explicit_spacing_survives_later_wavelength() {
    let mut cfg = SimConfig::default();
    cfg.apply_toml("spacing = 0.004").unwrap();
    cfg.apply_override("wavelength=0.02").unwrap();
    assert_eq!(cfg.scenario.element_spacing, 0.004);
}

#[test]
fn method_lists_parse() {
    let mut cfg = SimConfig::default();
    cfg.apply_override("methods=\"max_slnr,naive\"").unwrap();
    assert_eq!(cfg.run.methods, vec![Method::MaxSlnr, Method::Naive]);
    cfg.apply_override("methods=all").unwrap();
    assert_eq!(cfg.run.methods, Method::ALL.to_vec());
}

#[test]
fn validation_catches_bad_runs() {
    let mut cfg = SimConfig::default();
    cfg.apply_override("fault_counts=[0, 101]").unwrap();
    assert!(cfg.validate().is_err());
    let mut cfg = SimConfig::default();
    cfg.apply_override("study_fraction=1.5").unwrap();
    assert!(cfg.validate().is_err());
}
