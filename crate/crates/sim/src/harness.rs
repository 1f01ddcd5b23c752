//! Monte Carlo drivers: fault-count sweep, pattern study and heatmaps.
//!
//! Trials are the unit of parallel work. Each trial draws its scene once and
//! then visits every case (fault count or pattern) with all methods, so the
//! methods and the cases of a trial share the same channels. Results are
//! collected by trial index, which makes every output independent of the
//! worker count.

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use faulty_ris_core::channel::ArrayGeometry;
use faulty_ris_core::faulty::{fault_mask, FaultPattern, FaultRealization};
use faulty_ris_core::linalg::linear_to_db;
use faulty_ris_core::metrics::{received_power_map, Diagnostics, GridSpec, Method, PowerMap};
use faulty_ris_core::rng::{Stream, TrialSeeds};
use faulty_ris_core::trial::{draw_faults, run_trial, Scene, TrialOutcome};
use faulty_ris_core::{CVec, Error};

use crate::config::{Aggregate, SimConfig};

/// One experimental condition of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Case {
    pub pattern: FaultPattern,
    pub fault_count: usize,
}

/// Per-trial, per-case, per-method record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub case: Case,
    pub method: Method,
    pub slnr: Option<f64>,
    pub snr: Option<f64>,
    pub ipm_iterations: usize,
    pub bisection_steps: usize,
    pub fallback: bool,
    /// Optimal-status solves and how many of them passed certification.
    pub optimal_solves: usize,
    pub certified_solves: usize,
    pub max_gap: f64,
    /// Signal threshold (pre-noise power) used by the SLNR programs.
    pub gamma: Option<f64>,
    /// Hash of the scene and fault draws; equal for all methods of a case.
    pub checksum: String,
    pub error: Option<String>,
}

/// Aggregate over the trials of one (case, method).
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRecord {
    pub case: Case,
    pub method: Method,
    pub mean_slnr_db: f64,
    pub std_slnr_db: f64,
    pub mean_snr_db: f64,
    pub std_snr_db: f64,
    /// Successful trials entering the aggregate.
    pub trials: usize,
    /// Trials excluded because the method failed.
    pub failures: usize,
    pub mean_iterations: f64,
    pub fallback_rate: f64,
    /// Linear mean SLNR and SNR.
    pub mean_slnr: f64,
    pub mean_snr: f64,
}

impl AggregateRecord {
    pub fn failure_rate(&self) -> f64 {
        let total = self.trials + self.failures;
        if total == 0 {
            0.0
        } else {
            self.failures as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub aggregates: Vec<AggregateRecord>,
    pub trials: Vec<TrialRecord>,
}

impl ExperimentOutput {
    pub fn get(&self, case: Case, method: Method) -> Option<&AggregateRecord> {
        self.aggregates.iter().find(|a| a.case == case && a.method == method)
    }

    /// Largest per-(case, method) failure fraction.
    pub fn worst_failure_rate(&self) -> f64 {
        self.aggregates.iter().map(|a| a.failure_rate()).fold(0.0, f64::max)
    }
}

fn checksum(scene: &Scene, fault: &FaultRealization) -> String {
    let mut h = Sha256::new();
    for p in &scene.cloud.positions {
        for c in p.iter() {
            h.update(c.to_le_bytes());
        }
    }
    for z in scene.channels.g.iter().chain(scene.channels.h.iter().flat_map(|v| v.iter())) {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    for &i in &fault.indices {
        h.update((i as u64).to_le_bytes());
    }
    for z in fault.states.iter() {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn records_of(trial: u64, case: Case, outcome: &TrialOutcome, sum: &str) -> Vec<TrialRecord> {
    outcome
        .methods
        .iter()
        .map(|m| {
            let (slnr, snr, diag, error) = match &m.result {
                Ok(r) => (Some(r.slnr), Some(r.snr), r.diagnostics.clone(), None),
                Err(e) => (None, None, Diagnostics::default(), Some(e.to_string())),
            };
            TrialRecord {
                trial,
                case,
                method: m.method,
                slnr,
                snr,
                ipm_iterations: diag.ipm_iterations,
                bisection_steps: diag.bisection_steps,
                fallback: diag.fallback,
                optimal_solves: diag.optimal_solves,
                certified_solves: diag.certified_solves,
                max_gap: diag.max_gap,
                gamma: outcome.gamma,
                checksum: sum.to_string(),
                error,
            }
        })
        .collect()
}

fn failed_records(trial: u64, case: Case, methods: &[Method], err: &Error) -> Vec<TrialRecord> {
    methods
        .iter()
        .map(|&method| TrialRecord {
            trial,
            case,
            method,
            slnr: None,
            snr: None,
            ipm_iterations: 0,
            bisection_steps: 0,
            fallback: false,
            optimal_solves: 0,
            certified_solves: 0,
            max_gap: 0.0,
            gamma: None,
            checksum: String::new(),
            error: Some(err.to_string()),
        })
        .collect()
}

/// Runs every case of one trial.
pub fn run_one_trial(cfg: &SimConfig, geom: &ArrayGeometry, trial: u64, cases: &[Case], methods: &[Method]) -> Vec<TrialRecord> {
    let seeds = TrialSeeds::new(cfg.scenario.seed, trial);
    let scene = match Scene::draw(&cfg.scenario, geom, &seeds) {
        Ok(s) => s,
        Err(e) => return cases.iter().flat_map(|&c| failed_records(trial, c, methods, &e)).collect(),
    };
    let mut out = Vec::new();
    for &case in cases {
        let fault = match draw_faults(&cfg.scenario, &seeds, case.pattern, case.fault_count) {
            Ok(f) => f,
            Err(e) => {
                out.extend(failed_records(trial, case, methods, &e));
                continue;
            }
        };
        let sum = checksum(&scene, &fault);
        match run_trial(&cfg.scenario, &scene, &fault, &seeds, methods, cfg.run.naive_solver) {
            Ok(outcome) => out.extend(records_of(trial, case, &outcome, &sum)),
            Err(e) => out.extend(failed_records(trial, case, methods, &e)),
        }
    }
    out
}

fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool")
}

/// Runs `trials` trials over `cases` with `jobs` workers.
pub fn run_cases(cfg: &SimConfig, cases: &[Case], methods: &[Method], trials: usize, jobs: usize) -> Result<ExperimentOutput, Error> {
    cfg.scenario.validate()?;
    let geom = ArrayGeometry::new(&cfg.scenario)?;
    let per_trial: Vec<Vec<TrialRecord>> = pool(jobs).install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| run_one_trial(cfg, &geom, t, cases, methods))
            .collect()
    });
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let mut aggregates = Vec::new();
    for &case in cases {
        for &method in methods {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.case == case && r.method == method).collect();
            aggregates.push(aggregate(case, method, &rows, cfg.run.aggregate));
        }
    }
    Ok(ExperimentOutput { aggregates, trials: records })
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation; zero below two samples.
fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn aggregate(case: Case, method: Method, rows: &[&TrialRecord], mode: Aggregate) -> AggregateRecord {
    let ok: Vec<&&TrialRecord> = rows.iter().filter(|r| r.error.is_none()).collect();
    let slnr: Vec<f64> = ok.iter().filter_map(|r| r.slnr).collect();
    let snr: Vec<f64> = ok.iter().filter_map(|r| r.snr).collect();
    let slnr_db: Vec<f64> = slnr.iter().map(|&x| linear_to_db(x)).collect();
    let snr_db: Vec<f64> = snr.iter().map(|&x| linear_to_db(x)).collect();
    let collapse = |lin: &[f64], db: &[f64]| match mode {
        Aggregate::DbOfMean => linear_to_db(mean(lin)),
        Aggregate::MeanOfDb => mean(db),
    };
    let iters: Vec<f64> = ok.iter().map(|r| r.ipm_iterations as f64).collect();
    let fallbacks = ok.iter().filter(|r| r.fallback).count();
    AggregateRecord {
        case,
        method,
        mean_slnr_db: collapse(&slnr, &slnr_db),
        std_slnr_db: std_dev(&slnr_db),
        mean_snr_db: collapse(&snr, &snr_db),
        std_snr_db: std_dev(&snr_db),
        trials: ok.len(),
        failures: rows.len() - ok.len(),
        mean_iterations: if ok.is_empty() { 0.0 } else { mean(&iters) },
        fallback_rate: if ok.is_empty() { 0.0 } else { fallbacks as f64 / ok.len() as f64 },
        mean_slnr: mean(&slnr),
        mean_snr: mean(&snr),
    }
}

/// Sweep over the configured fault counts with the configured pattern.
pub fn run_sweep(cfg: &SimConfig, jobs: usize) -> Result<ExperimentOutput, Error> {
    let cases: Vec<Case> = cfg
        .run
        .fault_counts
        .iter()
        .map(|&b| Case {
            pattern: cfg.run.pattern,
            fault_count: b,
        })
        .collect();
    run_cases(cfg, &cases, &cfg.run.methods, cfg.scenario.trials, jobs)
}

/// The four spatial fault patterns at the study fraction.
pub fn run_pattern_study(cfg: &SimConfig, jobs: usize) -> Result<ExperimentOutput, Error> {
    let count = cfg.study_count();
    let cases: Vec<Case> = FaultPattern::ALL
        .iter()
        .map(|&p| Case {
            pattern: p,
            fault_count: count,
        })
        .collect();
    run_cases(cfg, &cases, &cfg.run.methods, cfg.scenario.trials, jobs)
}

/// Power map of one method on the heatmap trial.
#[derive(Debug, Clone)]
pub struct MethodMap {
    pub method: Method,
    pub map: PowerMap,
    /// Full N-element reflection vector used for the map.
    pub v_full: CVec,
    pub snr: f64,
    /// Relative mismatch between the UE cell's power and `snr * noise_power`,
    /// or `None` when the UE lies outside the grid.
    pub ue_mismatch: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct HeatmapOutput {
    pub maps: Vec<MethodMap>,
    pub mask: Vec<bool>,
    pub fault: FaultRealization,
    pub nx: usize,
    pub ny: usize,
    pub errors: Vec<(Method, String)>,
}

/// Single-realization maps of every configured method on one trial.
pub fn run_heatmap(cfg: &SimConfig, jobs: usize) -> Result<HeatmapOutput, Error> {
    let sc = &cfg.scenario;
    sc.validate()?;
    let geom = ArrayGeometry::new(sc)?;
    let seeds = TrialSeeds::new(sc.seed, cfg.run.heatmap_trial);
    let scene = Scene::draw(sc, &geom, &seeds)?;
    let fault = draw_faults(sc, &seeds, cfg.run.pattern, cfg.run.heatmap_faulty)?;
    let outcome = run_trial(sc, &scene, &fault, &seeds, &cfg.run.methods, cfg.run.naive_solver)?;
    let grid = GridSpec::over_area(sc, cfg.run.grid.0, cfg.run.grid.1);
    let part_indices = faulty_ris_core::faulty::functioning_indices(&fault.indices, sc.ris_elements());
    let ue = scene.channels.ue_index;

    let mut errors = Vec::new();
    let mut jobs_list = Vec::new();
    for m in &outcome.methods {
        match &m.result {
            Ok(r) => {
                let mut v = CVec::zeros(sc.ris_elements());
                for (i, &row) in part_indices.iter().enumerate() {
                    v[row] = r.config.v_r[i];
                }
                for (i, &row) in fault.indices.iter().enumerate() {
                    v[row] = fault.states[i];
                }
                jobs_list.push((m.method, v, r.snr));
            }
            Err(e) => errors.push((m.method, e.to_string())),
        }
    }
    let maps: Vec<Result<MethodMap, Error>> = pool(jobs).install(|| {
        jobs_list
            .into_par_iter()
            .map(|(method, v, snr)| {
                // Every method sees the same cell channels.
                let mut rng = seeds.stream(Stream::Heatmap);
                let map = received_power_map(
                    &v,
                    sc,
                    &geom,
                    &scene.channels.g,
                    &scene.channels.h[ue],
                    &grid,
                    cfg.run.heatmap_average,
                    &mut rng,
                )?;
                let ue_mismatch = grid.cell_of(&sc.ue_position).map(|(ix, iy)| {
                    let expected = snr * sc.noise_power;
                    (map.power_w[ix + grid.nx * iy] - expected).abs() / expected
                });
                Ok(MethodMap {
                    method,
                    map,
                    v_full: v,
                    snr,
                    ue_mismatch,
                })
            })
            .collect()
    });
    Ok(HeatmapOutput {
        maps: maps.into_iter().collect::<Result<_, _>>()?,
        mask: fault_mask(&fault.indices, sc.ris_elements()),
        fault,
        nx: sc.ris_nx,
        ny: sc.ris_ny,
        errors,
    })
}
