//! The four configuration strategies, Gaussian randomization and the
//! SNR-threshold rule.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::channel::complex_gaussian;
use crate::error::{Error, Result};
use crate::faulty::PartitionedChannels;
use crate::linalg::{cis, max_eigenvalue, principal_eigenvector, CMat, CVec};
use crate::metrics::{expected_slnr_lower_bound, signal, slnr, Diagnostics, Method, RisConfig};
use crate::sdp::{check_feasibility, solve, FeasibilityReport, Inequality, SdpProblem, SdpStatus, SolverOptions};

/// Bisection bracket and its history.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectionState {
    pub l: f64,
    pub h: f64,
    pub tol: f64,
    pub iterations: usize,
    /// `(beta, feasible)` for every feasibility check after the initial one.
    pub history: Vec<(f64, bool)>,
}

impl BisectionState {
    pub fn new(l: f64, h: f64, tol: f64) -> Self {
        Self {
            l,
            h,
            tol,
            iterations: 0,
            history: Vec::new(),
        }
    }

    pub fn converged(&self) -> bool {
        self.h <= 0.0 || (self.h - self.l) / self.h < self.tol
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.h + self.l)
    }

    pub fn record(&mut self, beta: f64, feasible: bool) {
        if feasible {
            self.l = beta;
        } else {
            self.h = beta;
        }
        self.iterations += 1;
        self.history.push((beta, feasible));
    }

    /// Every feasible beta is below every infeasible one.
    pub fn is_consistent(&self) -> bool {
        let max_feasible = self.history.iter().filter(|e| e.1).map(|e| e.0).fold(self.l.min(0.0), f64::max);
        let min_infeasible = self.history.iter().filter(|e| !e.1).map(|e| e.0).fold(f64::INFINITY, f64::min);
        max_feasible < min_infeasible && self.l <= self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomizationReport {
    pub samples: usize,
    pub feasible: usize,
    pub best_objective: f64,
    /// No sample satisfied the evaluator's feasibility test.
    pub fallback: bool,
}

/// Draws `samples` vectors `xi ~ CN(0, V)`, projects each to unit modulus
/// relative to the phase of its last coordinate, and keeps the best by
/// `evaluate(v_R) -> (objective, feasible)`.
pub fn gaussian_randomization<R, F>(v: &CMat, samples: usize, rng: &mut R, mut evaluate: F) -> Result<(CVec, RandomizationReport)>
where
    R: Rng + ?Sized,
    F: FnMut(&CVec) -> (f64, bool),
{
    let n = v.nrows();
    if n == 0 || samples == 0 {
        return Err(Error::Dimension("randomization needs n >= 1 and L >= 1".into()));
    }
    let eig = crate::linalg::hermitian_part(v).symmetric_eigen();
    // Factor V = F F^H with F = U sqrt(lambda), dropping eigenvalues at rounding level.
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = n as f64 * f64::EPSILON * lmax;
    let mut factor = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = if *lam > floor { lam.sqrt() } else { 0.0 };
        for i in 0..n {
            factor[(i, j)] *= s;
        }
    }
    let mut best: Option<(CVec, f64, bool)> = None;
    let mut feasible_count = 0;
    for _ in 0..samples {
        let g = CVec::from_fn(n, |_, _| complex_gaussian(rng));
        let xi = &factor * g;
        let anchor = xi[n - 1].arg();
        let cand = CVec::from_fn(n - 1, |i, _| cis(xi[i].arg() - anchor));
        let (obj, ok) = evaluate(&cand);
        if ok {
            feasible_count += 1;
        }
        let better = match &best {
            None => true,
            Some((_, b_obj, b_ok)) => (ok && !b_ok) || (ok == *b_ok && obj > *b_obj),
        };
        if better {
            best = Some((cand, obj, ok));
        }
    }
    let (cand, obj, _) = best.expect("samples >= 1");
    Ok((
        cand,
        RandomizationReport {
            samples,
            feasible: feasible_count,
            best_objective: obj,
            fallback: feasible_count == 0,
        },
    ))
}

/// Phase alignment with the principal left singular vector of `hbar`.
/// Operates on the full N-element channel and ignores faults.
pub fn baseline(hbar: &CMat) -> Result<CVec> {
    let gram = hbar * hbar.adjoint();
    let (lam, u) = principal_eigenvector(&gram);
    if !(lam > 0.0) {
        return Err(Error::ZeroChannel);
    }
    let anchor = u[0].arg();
    Ok(u.map(|z| cis(z.arg() - anchor)))
}

/// Baseline configuration restricted to the functioning elements of a faulty system.
pub fn baseline_config(part: &PartitionedChannels) -> Result<RisConfig> {
    let full = baseline(&part.reassemble(part.ue_index))?;
    RisConfig::new(part.restrict(&full), Method::Baseline)
}

/// Closed-form maximizer of `tr(H~_k V)` when `H~_k` is rank one:
/// `v_n = exp(j(angle c_n - angle c_last))` for `H~_k = c c^H`.
pub fn naive_analytic(part: &PartitionedChannels) -> Result<CVec> {
    let (lam, c) = principal_eigenvector(&part.lifted[part.ue_index]);
    if !(lam > 0.0) {
        return Err(Error::ZeroChannel);
    }
    let n = c.len();
    let anchor = c[n - 1].arg();
    Ok(CVec::from_fn(n - 1, |i, _| cis(c[i].arg() - anchor)))
}

/// SDR solve of `max tr(H~_k V)` followed by randomization on the realized signal power.
pub fn naive_max_snr<R: Rng + ?Sized>(
    part: &PartitionedChannels,
    opts: &SolverOptions,
    samples: usize,
    rng: &mut R,
) -> Result<(RisConfig, Diagnostics)> {
    let problem = SdpProblem::maximize(part.lifted[part.ue_index].clone())?;
    let sol = solve(&problem, opts)?;
    if sol.status != SdpStatus::Optimal {
        return Err(Error::Solver(format!("naive relaxation ended with {:?}", sol.status)));
    }
    let (v_r, report) = gaussian_randomization(&sol.x, samples, rng, |v| (signal(v, part), true))?;
    let diag = Diagnostics {
        sdp_solves: 1,
        ipm_iterations: sol.iterations,
        bisection_steps: 0,
        max_gap: sol.gap,
        optimal_solves: 1,
        certified_solves: usize::from(sol.certify(opts)),
        feasible: true,
        fallback: report.fallback,
    };
    Ok((RisConfig::new(v_r, Method::Naive)?, diag))
}

/// Pre-noise signal threshold equivalent to an SNR of `snr_naive / divisor`.
pub fn gamma_threshold(snr_naive: f64, divisor: f64, noise_over_power: f64) -> Result<f64> {
    if !(divisor > 1.0) {
        return Err(Error::InvalidConfig {
            key: "gamma_divisor",
            reason: format!("must exceed 1, got {divisor}"),
        });
    }
    if !(snr_naive >= 0.0) {
        return Err(Error::InvalidConfig {
            key: "gamma_snr",
            reason: format!("SNR must be nonnegative, got {snr_naive}"),
        });
    }
    Ok(snr_naive / divisor * noise_over_power)
}

/// Data of the lifted fractional program
/// `max (tr(S V) + o_s) / (tr(L V) + o_l + sigma^2/P)  s.t. tr(S V) >= gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlnrProgram {
    pub signal: CMat,
    pub leakage: CMat,
    pub signal_offset: f64,
    pub leakage_offset: f64,
    pub noise_over_power: f64,
    pub gamma: f64,
}

impl SlnrProgram {
    /// Perfect-CSI program: lifted matrices include the fixed faulty row.
    pub fn perfect(part: &PartitionedChannels, noise_over_power: f64, gamma: f64) -> Self {
        let k = part.ue_index;
        let n = part.nbar() + 1;
        let mut leakage = CMat::zeros(n, n);
        for (t, m) in part.lifted.iter().enumerate() {
            if t != k {
                leakage += m;
            }
        }
        Self {
            signal: part.lifted[k].clone(),
            leakage,
            signal_offset: 0.0,
            leakage_offset: 0.0,
            noise_over_power,
            gamma,
        }
    }

    /// Partial-CSI program: fixed rows dropped, one third of the faulty
    /// Frobenius energy added to the signal and leakage terms.
    pub fn expected(part: &PartitionedChannels, noise_over_power: f64, gamma: f64) -> Self {
        let k = part.ue_index;
        let nbar = part.nbar();
        let lift = |t: usize| {
            let mut m = CMat::zeros(nbar + 1, nbar + 1);
            let r = &part.h_r[t];
            m.view_mut((0, 0), (nbar, nbar)).copy_from(&(r * r.adjoint()));
            m
        };
        let mut leakage = CMat::zeros(nbar + 1, nbar + 1);
        let mut leakage_offset = 0.0;
        for t in 0..part.points() {
            if t != k {
                leakage += lift(t);
                leakage_offset += part.faulty_energy[t] / 3.0;
            }
        }
        Self {
            signal: lift(k),
            leakage,
            signal_offset: part.faulty_energy[k] / 3.0,
            leakage_offset,
            noise_over_power,
            gamma,
        }
    }

    pub fn dim(&self) -> usize {
        self.signal.nrows()
    }

    /// Slack-mode feasibility program at threshold `beta`.
    pub fn feasibility_problem(&self, beta: f64) -> Result<SdpProblem> {
        let a1 = &self.signal - self.leakage.scale(beta);
        let b1 = beta * (self.leakage_offset + self.noise_over_power) - self.signal_offset;
        SdpProblem::max_slack(
            self.dim(),
            vec![
                Inequality { a: a1, b: b1 },
                Inequality {
                    a: self.signal.clone(),
                    b: self.gamma,
                },
            ],
        )
    }

    /// Leakage-free upper bound `(n lambda_max(S) + o_s) / (sigma^2/P)`.
    pub fn upper_bound(&self) -> f64 {
        (self.dim() as f64 * max_eigenvalue(&self.signal).max(0.0) + self.signal_offset) / self.noise_over_power
    }

    /// Objective of a rank-one lift `[v; 1]`.
    pub fn ratio(&self, v_r: &CVec) -> f64 {
        let x = crate::linalg::lift(v_r);
        let s = crate::linalg::quad_form(&self.signal, &x) + self.signal_offset;
        let l = crate::linalg::quad_form(&self.leakage, &x) + self.leakage_offset;
        s / (l + self.noise_over_power)
    }
}

/// Output of a bisection run.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectionOutcome {
    pub state: BisectionState,
    /// Unit-diagonal PSD matrix certified feasible at `state.l`.
    pub v: CMat,
    pub ipm_iterations: usize,
    pub solves: usize,
    /// Checks that converged with optimal status, and how many of those certified.
    pub optimal_solves: usize,
    pub certified_solves: usize,
    /// Largest gap among the optimal-status checks.
    pub max_gap: f64,
}

impl BisectionOutcome {
    fn tally(&mut self, report: &FeasibilityReport) {
        self.ipm_iterations += report.iterations;
        self.solves += 1;
        if let Some(ok) = report.certified {
            self.optimal_solves += 1;
            self.certified_solves += usize::from(ok);
            self.max_gap = self.max_gap.max(report.gap);
        }
    }
}

/// Bisection on `beta` over slack-mode feasibility checks.
pub fn bisect(program: &SlnrProgram, opts: &SolverOptions, tol: f64) -> Result<BisectionOutcome> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig {
            key: "bisection_tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    let start = check_feasibility(&program.feasibility_problem(0.0)?, opts, true)?;
    if !start.feasible {
        let best = program.dim() as f64 * max_eigenvalue(&program.signal);
        return Err(Error::GammaInfeasible { gamma: program.gamma, best });
    }
    let mut out = BisectionOutcome {
        state: BisectionState::new(0.0, program.upper_bound(), tol),
        v: start.x.clone(),
        ipm_iterations: 0,
        solves: 0,
        optimal_solves: 0,
        certified_solves: 0,
        max_gap: 0.0,
    };
    out.tally(&start);
    while !out.state.converged() {
        let beta = out.state.midpoint();
        let report = check_feasibility(&program.feasibility_problem(beta)?, opts, true)?;
        out.tally(&report);
        out.state.record(beta, report.feasible);
        if report.feasible {
            out.v = report.x;
        }
    }
    Ok(out)
}

/// Perfect-CSI max-SLNR configuration.
pub fn max_slnr<R: Rng + ?Sized>(
    part: &PartitionedChannels,
    gamma: f64,
    noise_over_power: f64,
    opts: &SolverOptions,
    bisection_tol: f64,
    samples: usize,
    gamma_slack: f64,
    rng: &mut R,
) -> Result<(RisConfig, BisectionState, RandomizationReport, Diagnostics)> {
    let program = SlnrProgram::perfect(part, noise_over_power, gamma);
    let out = bisect(&program, opts, bisection_tol)?;
    let floor = gamma * (1.0 - gamma_slack);
    let (v_r, report) = gaussian_randomization(&out.v, samples, rng, |v| {
        (slnr(v, part, noise_over_power), signal(v, part) >= floor)
    })?;
    let diag = diagnostics(&out, &report);
    Ok((RisConfig::new(v_r, Method::MaxSlnr)?, out.state, report, diag))
}

/// Partial-CSI configuration maximizing the Jensen bound on the expected SLNR.
/// Reads only the functioning rows and the faulty-row energies of `part`.
pub fn robust_max_slnr<R: Rng + ?Sized>(
    part: &PartitionedChannels,
    gamma: f64,
    noise_over_power: f64,
    opts: &SolverOptions,
    bisection_tol: f64,
    samples: usize,
    gamma_slack: f64,
    rng: &mut R,
) -> Result<(RisConfig, BisectionState, RandomizationReport, Diagnostics)> {
    let program = SlnrProgram::expected(part, noise_over_power, gamma);
    let out = bisect(&program, opts, bisection_tol)?;
    let floor = gamma * (1.0 - gamma_slack);
    let k = part.ue_index;
    let (v_r, report) = gaussian_randomization(&out.v, samples, rng, |v| {
        let known = (part.h_r[k].transpose() * v.conjugate()).norm_squared();
        (expected_slnr_lower_bound(v, part, noise_over_power), known >= floor)
    })?;
    let diag = diagnostics(&out, &report);
    Ok((RisConfig::new(v_r, Method::Robust)?, out.state, report, diag))
}

fn diagnostics(out: &BisectionOutcome, report: &RandomizationReport) -> Diagnostics {
    Diagnostics {
        sdp_solves: out.solves,
        ipm_iterations: out.ipm_iterations,
        bisection_steps: out.state.iterations,
        max_gap: out.max_gap,
        optimal_solves: out.optimal_solves,
        certified_solves: out.certified_solves,
        feasible: true,
        fallback: report.fallback,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelSet;
    use crate::faulty::FaultRealization;
    use crate::linalg::{lift, outer, trace_product, Cplx};
    use crate::rng::{substream, Stream};
    use core::f64::consts::PI;

    /// Rank-one LoS AP-RIS link with Gaussian RIS-point channels.
    fn instance(n: usize, m: usize, points: usize, faulty: &[usize], seed: u64) -> PartitionedChannels {
        let mut rng = substream(seed, 0, Stream::Aux, 0);
        let b = CVec::from_fn(n, |_, _| cis(rng.random::<f64>() * 2.0 * PI));
        let a = CVec::from_fn(m, |_, _| cis(rng.random::<f64>() * 2.0 * PI));
        let g = &b * a.adjoint();
        let h: Vec<CVec> = (0..points).map(|_| CVec::from_fn(n, |_, _| complex_gaussian(&mut rng))).collect();
        let ch = ChannelSet::from_parts(g, h, 1.0, vec![1.0; points], 0).unwrap();
        let states = CVec::from_fn(faulty.len(), |_, _| cis(rng.random::<f64>() * 2.0 * PI) * rng.random::<f64>());
        let fault = FaultRealization::new(faulty.to_vec(), states, n).unwrap();
        PartitionedChannels::new(&ch, &fault).unwrap()
    }

    #[test]
    fn baseline_recovers_phase_vector() {
        let c = CVec::from_vec(vec![cis(0.0), cis(PI / 3.0), cis(-PI / 2.0)]);
        let a = CVec::from_vec(vec![Cplx::new(1.0, 0.0), Cplx::new(0.5, 0.5)]);
        let v = baseline(&(&c * a.adjoint())).unwrap();
        for i in 0..3 {
            assert!((v[i] - c[i]).norm() < 1e-10);
        }
        let real = CVec::from_vec(vec![Cplx::new(2.0, 0.0), Cplx::new(0.3, 0.0), Cplx::new(1.0, 0.0)]);
        let v = baseline(&(&real * a.adjoint())).unwrap();
        assert!(v.iter().all(|z| (z - Cplx::new(1.0, 0.0)).norm() < 1e-10));
    }

    #[test]
    fn baseline_zero_channel_errors() {
        assert!(matches!(baseline(&CMat::zeros(3, 2)), Err(Error::ZeroChannel)));
    }

    #[test]
    fn baseline_beats_random_search_without_faults() {
        let part = instance(12, 3, 4, &[], 21);
        let best = signal(&baseline_config(&part).unwrap().v_r, &part);
        let mut rng = substream(22, 0, Stream::Aux, 0);
        for _ in 0..1000 {
            let v = CVec::from_fn(12, |_, _| cis(rng.random::<f64>() * 2.0 * PI));
            assert!(signal(&v, &part) <= best * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gamma_rule() {
        assert!((gamma_threshold(1.5, 1.5, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(gamma_threshold(1.0, 1e300, 1.0).unwrap() < 1e-299);
        assert!(gamma_threshold(3.0, 1.0, 1.0).is_err());
        assert!((gamma_threshold(6.0, 1.5, 0.5).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn randomization_rank_one_is_exact() {
        let mut rng = substream(30, 0, Stream::Aux, 0);
        let mut u = CVec::from_fn(6, |_, _| cis(rng.random::<f64>() * 2.0 * PI));
        u[5] = Cplx::new(1.0, 0.0);
        let v = outer(&u);
        let mut seen = 0;
        let (best, report) = gaussian_randomization(&v, 20, &mut rng, |cand| {
            for i in 0..5 {
                assert!((cand[i] - u[i]).norm() < 1e-9, "{} {} {}", i, cand[i], u[i]);
            }
            seen += 1;
            (1.0, true)
        })
        .unwrap();
        assert_eq!(seen, 20);
        assert_eq!(report.feasible, 20);
        assert!(!report.fallback);
        assert_eq!(best.len(), 5);
    }

    #[test]
    fn randomization_more_samples_never_worse() {
        let part = instance(8, 2, 3, &[1], 31);
        let x = CMat::identity(8, 8);
        let eval = |v: &CVec| (signal(v, &part), true);
        let (_, one) = gaussian_randomization(&x, 1, &mut substream(32, 0, Stream::Randomization, 0), eval).unwrap();
        let (_, many) = gaussian_randomization(&x, 500, &mut substream(32, 0, Stream::Randomization, 0), eval).unwrap();
        assert!(many.best_objective >= one.best_objective);
    }

    #[test]
    fn randomization_reports_fallback() {
        let (_, report) = gaussian_randomization(&CMat::identity(3, 3), 10, &mut substream(1, 0, Stream::Aux, 0), |_| (1.0, false)).unwrap();
        assert!(report.fallback);
        assert_eq!(report.feasible, 0);
    }

    #[test]
    fn naive_sdr_matches_analytic() {
        for seed in 0..4 {
            let part = instance(20, 4, 3, &[2, 7, 11], 40 + seed);
            let analytic = signal(&naive_analytic(&part).unwrap(), &part);
            let (cfg, diag) = naive_max_snr(&part, &SolverOptions::default(), 100, &mut substream(seed, 0, Stream::Randomization, 0)).unwrap();
            let sdr = signal(&cfg.v_r, &part);
            assert!(sdr >= 0.995 * analytic, "seed {seed}: {sdr} vs {analytic}");
            assert!(sdr <= analytic * (1.0 + 1e-9));
            assert!(diag.max_gap <= 1e-6);
        }
    }

    #[test]
    fn naive_analytic_equals_lifted_optimum() {
        let part = instance(10, 3, 2, &[4], 50);
        let v = naive_analytic(&part).unwrap();
        let (lam, c) = principal_eigenvector(&part.lifted[0]);
        let expect = lam * c.iter().map(|z| z.norm()).sum::<f64>().powi(2);
        let got = trace_product(&part.lifted[0], &outer(&lift(&v)));
        assert!((got - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn bisection_brackets_and_respects_gamma() {
        let part = instance(10, 2, 5, &[3, 8], 60);
        let noise = 0.05 * part.lifted[0].trace().re;
        let snr_naive = signal(&naive_analytic(&part).unwrap(), &part) / noise;
        let gamma = gamma_threshold(snr_naive, 1.5, noise).unwrap();
        let program = SlnrProgram::perfect(&part, noise, gamma);
        let opts = SolverOptions::default();
        let out = bisect(&program, &opts, 1e-3).unwrap();
        assert!(out.state.converged());
        assert!(out.state.is_consistent());
        let at_l = check_feasibility(&program.feasibility_problem(out.state.l).unwrap(), &opts, false).unwrap();
        assert!(at_l.feasible);
        let above = check_feasibility(&program.feasibility_problem(out.state.h * 1.002).unwrap(), &opts, false).unwrap();
        assert!(!above.feasible);
        let (cfg, _, report, _) = max_slnr(&part, gamma, noise, &opts, 1e-3, 200, 0.02, &mut substream(61, 0, Stream::Randomization, 0)).unwrap();
        if !report.fallback {
            assert!(signal(&cfg.v_r, &part) >= gamma * 0.98);
        }
        // A sample meeting the threshold exactly cannot beat the relaxation's bracket.
        let realized = slnr(&cfg.v_r, &part, noise);
        if signal(&cfg.v_r, &part) >= gamma {
            assert!(realized <= out.state.h * (1.0 + 1e-6), "{realized} > {}", out.state.h);
        }
        assert!(realized >= 0.5 * out.state.l, "{realized} vs {}", out.state.l);
    }

    #[test]
    fn impossible_gamma_is_reported() {
        let part = instance(6, 2, 3, &[], 70);
        let program = SlnrProgram::perfect(&part, 1.0, 1e9);
        assert!(matches!(bisect(&program, &SolverOptions::default(), 1e-3), Err(Error::GammaInfeasible { .. })));
    }

    #[test]
    fn expected_program_matches_bound() {
        let part = instance(9, 2, 4, &[0, 5], 80);
        let program = SlnrProgram::expected(&part, 0.3, 0.0);
        let mut rng = substream(81, 0, Stream::Aux, 0);
        for _ in 0..10 {
            let v = CVec::from_fn(7, |_, _| cis(rng.random::<f64>() * 2.0 * PI));
            let a = program.ratio(&v);
            let b = expected_slnr_lower_bound(&v, &part, 0.3);
            assert!((a - b).abs() <= 1e-10 * b);
        }
        let perfect = SlnrProgram::perfect(&part, 0.3, 0.0);
        let v = CVec::from_fn(7, |_, _| cis(0.1 * rng.random::<f64>()));
        assert!((perfect.ratio(&v) - slnr(&v, &part, 0.3)).abs() <= 1e-10 * perfect.ratio(&v));
    }

    #[test]
    fn robust_ignores_fault_states() {
        let base = instance(8, 2, 4, &[1, 6], 90);
        let mut other = base.clone();
        // Different stuck states, same indices.
        for t in 0..other.points() {
            other.fixed[t] = other.fixed[t].map(|z| z * cis(1.0) * 0.5);
        }
        let noise = 0.1;
        let opts = SolverOptions::default();
        let run = |p: &PartitionedChannels| {
            robust_max_slnr(p, 0.0, noise, &opts, 1e-3, 50, 0.02, &mut substream(91, 0, Stream::Randomization, 0)).unwrap()
        };
        assert_eq!(run(&base).0, run(&other).0);
    }

    #[test]
    fn slnr_is_phase_invariant_without_faults() {
        let part = instance(8, 2, 3, &[], 96);
        let v = naive_analytic(&part).unwrap();
        let r = v.map(|z| z * cis(0.7));
        let a = slnr(&v, &part, 0.1);
        assert!((a - slnr(&r, &part, 0.1)).abs() <= 1e-12 * a);
    }
}
