//! One Monte Carlo trial: shared draws, then every requested strategy.

use alloc::vec::Vec;

use crate::channel::{ArrayGeometry, ChannelSet};
use crate::error::{Error, Result};
use crate::faulty::{sample_fault_indices, sample_fault_states, FaultPattern, FaultRealization, PartitionedChannels};
use crate::metrics::{Diagnostics, Method, MethodResult, RisConfig};
use crate::optimizers::{
    baseline_config, gamma_threshold, max_slnr, naive_analytic, naive_max_snr, robust_max_slnr, BisectionState,
};
use crate::rng::{Stream, TrialSeeds};
use crate::scenario::{sample_test_points, GammaRule, ScenarioConfig, TestPointCloud};
use crate::sdp::SolverOptions;

/// How the naive max-SNR configuration is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaiveSolver {
    /// Relaxation plus Gaussian randomization.
    Sdr,
    /// Closed-form phase alignment (exact for rank-one lifted signal matrices).
    Analytic,
}

impl NaiveSolver {
    pub fn name(self) -> &'static str {
        match self {
            NaiveSolver::Sdr => "sdr",
            NaiveSolver::Analytic => "analytic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sdr" => Some(NaiveSolver::Sdr),
            "analytic" => Some(NaiveSolver::Analytic),
            _ => None,
        }
    }
}

/// Geometry-dependent draws of a trial that do not depend on the fault count.
#[derive(Debug, Clone)]
pub struct Scene {
    pub cloud: TestPointCloud,
    pub channels: ChannelSet,
}

impl Scene {
    pub fn draw(cfg: &ScenarioConfig, geom: &ArrayGeometry, seeds: &TrialSeeds) -> Result<Self> {
        let cloud = sample_test_points(cfg, &mut seeds.stream(Stream::TestPoints))?;
        let channels = ChannelSet::build(cfg, geom, &cloud, &mut seeds.stream(Stream::Nlos))?;
        Ok(Self { cloud, channels })
    }
}

/// Fault set of a trial. Stuck states are drawn for all N elements and
/// indexed by element, so an element keeps its state across fault counts.
pub fn draw_faults(
    cfg: &ScenarioConfig,
    seeds: &TrialSeeds,
    pattern: FaultPattern,
    count: usize,
) -> Result<FaultRealization> {
    let n = cfg.ris_elements();
    let indices = sample_fault_indices(
        pattern,
        count,
        cfg.ris_nx,
        cfg.ris_ny,
        cfg.pad_structured_faults,
        &mut seeds.stream(Stream::FaultIndices),
    )?;
    let all = sample_fault_states(n, &mut seeds.stream(Stream::FaultStates));
    let states = crate::CVec::from_iterator(indices.len(), indices.iter().map(|&i| all[i]));
    FaultRealization::new(indices, states, n)
}

/// Result of one method within a trial.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub result: core::result::Result<MethodResult, Error>,
    pub bisection: Option<BisectionState>,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub fault_count: usize,
    /// Pre-noise signal threshold used by the SLNR programs (if computed).
    pub gamma: Option<f64>,
    pub methods: Vec<MethodOutcome>,
}

impl TrialOutcome {
    pub fn get(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == method).and_then(|m| m.result.as_ref().ok())
    }
}

fn salt(method: Method) -> u64 {
    match method {
        Method::Baseline => 0,
        Method::Naive => 1,
        Method::MaxSlnr => 2,
        Method::Robust => 3,
    }
}

/// Runs `methods` on one scene and fault realization. The naive method is
/// always evaluated first when a per-trial threshold is needed.
pub fn run_trial(
    cfg: &ScenarioConfig,
    scene: &Scene,
    fault: &FaultRealization,
    seeds: &TrialSeeds,
    methods: &[Method],
    naive: NaiveSolver,
) -> Result<TrialOutcome> {
    let part = PartitionedChannels::new(&scene.channels, fault)?;
    let opts = SolverOptions::from(cfg.solver);
    let noise = cfg.noise_over_power();
    let rng_for = |m: Method| seeds.salted(Stream::Randomization, salt(m));

    let needs_gamma = methods.iter().any(|m| matches!(m, Method::MaxSlnr | Method::Robust));
    let run_naive = methods.contains(&Method::Naive) || (needs_gamma && cfg.gamma_rule == GammaRule::PerTrial);
    let naive_result = if run_naive {
        Some(naive_method(&part, cfg, &opts, naive, &mut rng_for(Method::Naive)))
    } else {
        None
    };

    let gamma = match cfg.gamma_rule {
        GammaRule::Fixed(snr_value) => Some(gamma_threshold(snr_value, cfg.gamma_divisor, noise)),
        GammaRule::PerTrial => naive_result.as_ref().map(|r| match r {
            Ok(res) => gamma_threshold(res.snr, cfg.gamma_divisor, noise),
            Err(e) => Err(e.clone()),
        }),
    };

    let mut outcomes = Vec::with_capacity(methods.len());
    for &method in methods {
        let outcome = match method {
            Method::Baseline => MethodOutcome {
                method,
                result: baseline_config(&part).map(|c| MethodResult::evaluate(c, &part, cfg, Diagnostics::default())),
                bisection: None,
            },
            Method::Naive => MethodOutcome {
                method,
                result: naive_result.clone().expect("naive evaluated when requested"),
                bisection: None,
            },
            Method::MaxSlnr | Method::Robust => {
                let g = match gamma.clone().expect("threshold available when SLNR methods run") {
                    Ok(g) => g,
                    Err(e) => {
                        outcomes.push(MethodOutcome { method, result: Err(e), bisection: None });
                        continue;
                    }
                };
                let mut rng = rng_for(method);
                let run = if method == Method::MaxSlnr {
                    max_slnr(&part, g, noise, &opts, cfg.bisection_tol, cfg.randomization_samples, cfg.gamma_slack, &mut rng)
                } else {
                    let blind = PartitionedChannels::without_states(&scene.channels, &fault.indices)?;
                    robust_max_slnr(&blind, g, noise, &opts, cfg.bisection_tol, cfg.randomization_samples, cfg.gamma_slack, &mut rng)
                };
                match run {
                    Ok((config, state, _, diag)) => MethodOutcome {
                        method,
                        result: Ok(MethodResult::evaluate(config, &part, cfg, diag)),
                        bisection: Some(state),
                    },
                    Err(e) => MethodOutcome { method, result: Err(e), bisection: None },
                }
            }
        };
        outcomes.push(outcome);
    }
    Ok(TrialOutcome {
        fault_count: fault.count(),
        gamma: gamma.and_then(|g| g.ok()),
        methods: outcomes,
    })
}

fn naive_method<R: rand::Rng + ?Sized>(
    part: &PartitionedChannels,
    cfg: &ScenarioConfig,
    opts: &SolverOptions,
    naive: NaiveSolver,
    rng: &mut R,
) -> core::result::Result<MethodResult, Error> {
    let (config, diag) = match naive {
        NaiveSolver::Sdr => naive_max_snr(part, opts, cfg.randomization_samples, rng)?,
        NaiveSolver::Analytic => (RisConfig::new(naive_analytic(part)?, Method::Naive)?, Diagnostics { feasible: true, ..Diagnostics::default() }),
    };
    Ok(MethodResult::evaluate(config, part, cfg, diag))
}
