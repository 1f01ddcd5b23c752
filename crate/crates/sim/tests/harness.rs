use faulty_ris_core::faulty::FaultPattern;
use faulty_ris_core::metrics::Method;
use faulty_ris_sim::config::SimConfig;
use faulty_ris_sim::harness::{run_heatmap, run_pattern_study, run_sweep, Case};

fn small() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.apply_toml(
        "Nx = 4\nNy = 4\ntest_points = 6\ntrials = 3\nfault_counts = [0, 2, 4]\nrandomization_samples = 100\ngrid = \"12x12\"\nheatmap_faulty = 2",
    )
    .unwrap();
    cfg
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let cfg = small();
    let a = run_sweep(&cfg, 1).unwrap();
    let b = run_sweep(&cfg, 3).unwrap();
    assert_eq!(a.trials, b.trials);
    assert_eq!(a.aggregates, b.aggregates);
}

#[test]
fn methods_share_draws_within_a_trial() {
    let out = run_sweep(&small(), 2).unwrap();
    for r in &out.trials {
        let first = out
            .trials
            .iter()
            .find(|o| o.trial == r.trial && o.case == r.case)
            .unwrap();
        assert_eq!(r.checksum, first.checksum);
        assert!(!r.checksum.is_empty());
    }
    let zero = out.trials.iter().find(|r| r.trial == 0 && r.case.fault_count == 0).unwrap();
    let four = out.trials.iter().find(|r| r.trial == 0 && r.case.fault_count == 4).unwrap();
    assert_ne!(zero.checksum, four.checksum);
}

#[test]
fn aggregates_count_every_trial() {
    let cfg = small();
    let out = run_sweep(&cfg, 2).unwrap();
    assert_eq!(out.aggregates.len(), cfg.run.fault_counts.len() * cfg.run.methods.len());
    for a in &out.aggregates {
        assert_eq!(a.trials + a.failures, cfg.scenario.trials);
        assert!(a.std_slnr_db >= 0.0 && a.std_snr_db >= 0.0);
    }
}

#[test]
fn fault_free_methods_agree() {
    let out = run_sweep(&small(), 2).unwrap();
    let case = Case {
        pattern: FaultPattern::Uniform,
        fault_count: 0,
    };
    let base = out.get(case, Method::Baseline).unwrap().mean_slnr;
    for m in Method::ALL {
        let x = out.get(case, m).unwrap().mean_slnr;
        assert!((x / base - 1.0).abs() <= 0.01, "{}: {x} vs {base}", m.name());
    }
}

#[test]
fn failures_are_counted_not_dropped() {
    let mut cfg = small();
    cfg.apply_override("gamma_snr=1e30").unwrap();
    let out = run_sweep(&cfg, 1).unwrap();
    let case = Case {
        pattern: FaultPattern::Uniform,
        fault_count: 2,
    };
    let a = out.get(case, Method::MaxSlnr).unwrap();
    assert_eq!(a.failures, cfg.scenario.trials);
    assert_eq!(a.trials, 0);
    assert!(out.worst_failure_rate() > cfg.run.max_failure_rate);
    assert!(out.trials.iter().any(|r| r.error.is_some()));
}

#[test]
fn pattern_study_covers_all_patterns() {
    let mut cfg = small();
    cfg.apply_override("trials=1").unwrap();
    let out = run_pattern_study(&cfg, 1).unwrap();
    assert_eq!(out.aggregates.len(), 4 * Method::ALL.len());
    for p in FaultPattern::ALL {
        let case = Case {
            pattern: p,
            fault_count: cfg.study_count(),
        };
        assert!(out.get(case, Method::Robust).is_some());
    }
}

#[test]
fn heatmap_matches_snr_at_the_ue_and_shares_faults() {
    let out = run_heatmap(&small(), 2).unwrap();
    assert!(out.errors.is_empty(), "{:?}", out.errors);
    assert_eq!(out.maps.len(), Method::ALL.len());
    assert_eq!(out.mask.iter().filter(|&&f| f).count(), 2);
    for m in &out.maps {
        let mismatch = m.ue_mismatch.expect("UE inside the grid");
        assert!(mismatch <= 1e-6, "{}: {mismatch}", m.method.name());
        for (i, &row) in out.fault.indices.iter().enumerate() {
            assert_eq!(m.v_full[row], out.fault.states[i]);
        }
        assert!(m.map.power_w.iter().all(|p| p.is_finite() && *p >= 0.0));
    }
}
