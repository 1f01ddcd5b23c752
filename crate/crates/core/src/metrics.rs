//! Link metrics for a candidate configuration of the functioning elements.
//!
//! All quantities are linear. `signal`, `leakage` and the SLNR terms are on
//! the pre-noise power scale `||v_R^H H_R,t + h_B,t^H||^2`; multiply by
//! `P / sigma^2` to get SNR units.

use alloc::vec::Vec;

use rand::Rng;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::channel::{cascade, rician_channel, ArrayGeometry};
use crate::error::{Error, Result};
use crate::faulty::PartitionedChannels;
use crate::linalg::{lift, outer, trace_product, CMat, CVec, Cplx, Point3};
use crate::scenario::ScenarioConfig;

/// Configuration strategy that produced a phase vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Baseline,
    Naive,
    MaxSlnr,
    Robust,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Baseline, Method::Naive, Method::MaxSlnr, Method::Robust];

    pub fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Naive => "naive",
            Method::MaxSlnr => "max_slnr",
            Method::Robust => "robust",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// Unit-modulus phases of the functioning elements.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig {
    pub v_r: CVec,
    pub origin: Method,
}

impl RisConfig {
    pub fn new(v_r: CVec, origin: Method) -> Result<Self> {
        if let Some(bad) = v_r.iter().find(|z| (z.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::Dimension(alloc::format!("entry {bad} is not unit-modulus")));
        }
        Ok(Self { v_r, origin })
    }
}

/// Solver diagnostics carried alongside a method's metrics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub sdp_solves: usize,
    pub ipm_iterations: usize,
    pub bisection_steps: usize,
    /// Largest certified relative duality gap among optimal-status solves.
    pub max_gap: f64,
    /// Solves that ended with optimal status.
    pub optimal_solves: usize,
    /// Optimal-status solves that passed the post-hoc certificate.
    pub certified_solves: usize,
    pub feasible: bool,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub snr: f64,
    pub slnr: f64,
    pub leakage: f64,
    pub config: RisConfig,
    pub diagnostics: Diagnostics,
}

impl MethodResult {
    pub fn evaluate(config: RisConfig, part: &PartitionedChannels, cfg: &ScenarioConfig, diagnostics: Diagnostics) -> Self {
        let noise = cfg.noise_over_power();
        Self {
            snr: snr(&config.v_r, part, cfg.tx_power, cfg.noise_power),
            slnr: slnr(&config.v_r, part, noise),
            leakage: leakage(&config.v_r, part),
            config,
            diagnostics,
        }
    }
}

/// Pre-noise signal power at the UE.
pub fn signal(v_r: &CVec, part: &PartitionedChannels) -> f64 {
    part.point_power(v_r, part.ue_index)
}

/// `P ||v_R^H H_R,k + h_B,k^H||^2 / sigma^2`.
pub fn snr(v_r: &CVec, part: &PartitionedChannels, tx_power: f64, noise_power: f64) -> f64 {
    tx_power * signal(v_r, part) / noise_power
}

/// Sum of the powers delivered to every test point except the UE.
pub fn leakage(v_r: &CVec, part: &PartitionedChannels) -> f64 {
    (0..part.points())
        .filter(|&t| t != part.ue_index)
        .map(|t| part.point_power(v_r, t))
        .sum()
}

/// `signal / (leakage + sigma^2 / P)`; `noise_over_power` is `sigma^2 / P`.
pub fn slnr(v_r: &CVec, part: &PartitionedChannels, noise_over_power: f64) -> f64 {
    signal(v_r, part) / (leakage(v_r, part) + noise_over_power)
}

/// SLNR evaluated through the lifted matrices, `tr(H~_t V)` with `V = [v;1][v;1]^H`.
pub fn slnr_lifted(v_r: &CVec, part: &PartitionedChannels, noise_over_power: f64) -> f64 {
    let v = outer(&lift(v_r));
    let k = part.ue_index;
    let sig = trace_product(&part.lifted[k], &v);
    let leak: f64 = (0..part.points())
        .filter(|&t| t != k)
        .map(|t| trace_product(&part.lifted[t], &v))
        .sum();
    sig / (leak + noise_over_power)
}

/// Expected-power terms of the partial-CSI objective: `(numerator, leakage)`,
/// using only the functioning rows and the Frobenius energy of the faulty rows.
pub fn expected_terms(v_r: &CVec, part: &PartitionedChannels) -> (f64, f64) {
    let k = part.ue_index;
    let power = |t: usize| (part.h_r[t].transpose() * v_r.conjugate()).norm_squared() + part.faulty_energy[t] / 3.0;
    let num = power(k);
    let leak = (0..part.points()).filter(|&t| t != k).map(power).sum();
    (num, leak)
}

/// Jensen lower bound on the SLNR averaged over the fault states.
/// Never reads the fixed rows, so it depends on the fault indices only.
pub fn expected_slnr_lower_bound(v_r: &CVec, part: &PartitionedChannels, noise_over_power: f64) -> f64 {
    let (num, leak) = expected_terms(v_r, part);
    num / (leak + noise_over_power)
}

/// Maximum-ratio precoder `sqrt(P) H^H v / ||H^H v||` aimed at the cascaded channel `hbar`.
pub fn mrt_precoder(v_full: &CVec, hbar: &CMat, tx_power: f64) -> Result<CVec> {
    let eff = hbar.adjoint() * v_full;
    let norm = eff.norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroChannel);
    }
    Ok(eff.scale(tx_power.sqrt() / norm))
}

/// `|v^H H(p) w|^2` in watts.
pub fn received_power(v_full: &CVec, hbar: &CMat, w: &CVec) -> f64 {
    let row = hbar.transpose() * v_full.conjugate();
    row.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<Cplx>().norm_sqr()
}

/// Cell layout of a power map over the target area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub center: Point3,
    pub size_x: f64,
    pub size_y: f64,
}

impl GridSpec {
    pub fn over_area(cfg: &ScenarioConfig, nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            center: cfg.ue_position,
            size_x: cfg.area_x,
            size_y: cfg.area_y,
        }
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn pitch(&self) -> (f64, f64) {
        (self.size_x / self.nx as f64, self.size_y / self.ny as f64)
    }

    /// Ground-plane center of cell `(ix, iy)`.
    pub fn cell_center(&self, ix: usize, iy: usize) -> Point3 {
        let (px, py) = self.pitch();
        Point3::new(
            self.center.x - self.size_x / 2.0 + (ix as f64 + 0.5) * px,
            self.center.y - self.size_y / 2.0 + (iy as f64 + 0.5) * py,
            0.0,
        )
    }

    /// Cell that contains `p` (cells are half-open on the upper edge).
    pub fn cell_of(&self, p: &Point3) -> Option<(usize, usize)> {
        let (px, py) = self.pitch();
        let fx = (p.x - (self.center.x - self.size_x / 2.0)) / px;
        let fy = (p.y - (self.center.y - self.size_y / 2.0)) / py;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        (ix < self.nx && iy < self.ny).then_some((ix, iy))
    }
}

/// Received power per cell, row-major with index `ix + nx * iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMap {
    pub grid: GridSpec,
    pub power_w: Vec<f64>,
}

/// Power delivered to each cell center by the MRT precoder aimed at the UE.
///
/// Each cell gets a fresh Rician draw from `rng`; the cell containing the UE
/// reuses the UE's own channel so the map agrees with the SNR there.
/// `repeats > 1` averages that many independent channel draws per cell.
#[allow(clippy::too_many_arguments)]
pub fn received_power_map<R: Rng + ?Sized>(
    v_full: &CVec,
    cfg: &ScenarioConfig,
    geom: &ArrayGeometry,
    g: &CMat,
    ue_channel: &CVec,
    grid: &GridSpec,
    repeats: usize,
    rng: &mut R,
) -> Result<PowerMap> {
    let hbar_k = cascade(ue_channel, g)?;
    let w = mrt_precoder(v_full, &hbar_k, cfg.tx_power)?;
    let ue_cell = grid.cell_of(&cfg.ue_position);
    let repeats = repeats.max(1);
    let mut power_w = Vec::with_capacity(grid.cells());
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            if ue_cell == Some((ix, iy)) {
                power_w.push(received_power(v_full, &hbar_k, &w));
                continue;
            }
            let p = grid.cell_center(ix, iy);
            let mut acc = 0.0;
            for _ in 0..repeats {
                let h = rician_channel(cfg, geom, &p, rng)?;
                acc += received_power(v_full, &cascade(&h, g)?, &w);
            }
            power_w.push(acc / repeats as f64);
        }
    }
    Ok(PowerMap { grid: *grid, power_w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, ChannelSet};
    use crate::faulty::{sample_fault_states, FaultRealization};
    use crate::linalg::{unit_modulus, watts_to_dbm};
    use crate::rng::{substream, Stream};
    use alloc::vec;

    fn random_instance(n: usize, m: usize, points: usize, faults: &[usize], seed: u64) -> (ChannelSet, PartitionedChannels) {
        let (ch, part, _) = instance_with_fault(n, m, points, faults, seed);
        (ch, part)
    }

    fn instance_with_fault(
        n: usize,
        m: usize,
        points: usize,
        faults: &[usize],
        seed: u64,
    ) -> (ChannelSet, PartitionedChannels, FaultRealization) {
        let mut rng = substream(seed, 0, Stream::Aux, 0);
        let g = CMat::from_fn(n, m, |_, _| complex_gaussian(&mut rng));
        let h = (0..points).map(|_| CVec::from_fn(n, |_, _| complex_gaussian(&mut rng))).collect();
        let ch = ChannelSet::from_parts(g, h, 1.0, vec![1.0; points], 0).unwrap();
        let states = sample_fault_states(faults.len(), &mut rng);
        let fault = FaultRealization::new(faults.to_vec(), states, n).unwrap();
        let part = PartitionedChannels::new(&ch, &fault).unwrap();
        (ch, part, fault)
    }

    fn random_phases(n: usize, seed: u64) -> CVec {
        let mut rng = substream(seed, 1, Stream::Aux, 0);
        unit_modulus(&CVec::from_fn(n, |_, _| complex_gaussian(&mut rng)))
    }

    #[test]
    fn rank_one_snr_closed_form() {
        // c = [1, 1], a = [1], v aligned with c: SNR = (|c1| + |c2|)^2 ||a||^2 P / sigma^2 = 4 P / sigma^2.
        let g = CMat::from_element(2, 1, Cplx::new(1.0, 0.0));
        let h = vec![CVec::from_element(2, Cplx::new(1.0, 0.0)), CVec::from_element(2, Cplx::new(0.0, 0.0))];
        let ch = ChannelSet::from_parts(g, h, 1.0, vec![1.0; 2], 0).unwrap();
        let part = PartitionedChannels::new(&ch, &FaultRealization::none()).unwrap();
        let v = CVec::from_element(2, Cplx::new(1.0, 0.0));
        let (p, s2) = (0.5, 1e-3);
        assert!((snr(&v, &part, p, s2) - 4.0 * p / s2).abs() < 1e-9);
        assert!((snr(&v, &part, 2.0 * p, s2) - 2.0 * snr(&v, &part, p, s2)).abs() < 1e-9);
        // Zero leakage channel: SLNR reduces to SNR.
        assert!((slnr(&v, &part, s2 / p) - snr(&v, &part, p, s2)).abs() < 1e-9);
    }

    #[test]
    fn zero_channel_gives_zero() {
        let g = CMat::zeros(3, 2);
        let h = vec![CVec::zeros(3), CVec::zeros(3)];
        let ch = ChannelSet::from_parts(g, h, 1.0, vec![1.0; 2], 0).unwrap();
        let part = PartitionedChannels::new(&ch, &FaultRealization::none()).unwrap();
        let v = CVec::from_element(3, Cplx::new(1.0, 0.0));
        assert_eq!(snr(&v, &part, 1.0, 1.0), 0.0);
        assert_eq!(leakage(&v, &part), 0.0);
        assert_eq!(slnr(&v, &part, 1.0), 0.0);
    }

    #[test]
    fn single_leakage_point() {
        let (_, part) = random_instance(5, 2, 2, &[], 3);
        let v = random_phases(5, 3);
        assert!((leakage(&v, &part) - part.point_power(&v, 1)).abs() < 1e-15);
    }

    #[test]
    fn lifted_slnr_matches_direct() {
        for seed in 0..10 {
            let (_, part) = random_instance(9, 3, 6, &[1, 4, 8], seed);
            let v = random_phases(6, seed);
            let a = slnr(&v, &part, 0.3);
            let b = slnr_lifted(&v, &part, 0.3);
            assert!((a - b).abs() <= 1e-9 * a, "{a} {b}");
        }
    }

    #[test]
    fn slnr_invariant_to_global_phase() {
        let (ch, part, fault) = instance_with_fault(8, 3, 5, &[2, 3], 7);
        let v_r = random_phases(6, 7);
        let rot = crate::linalg::cis(1.234);
        let a = slnr(&v_r, &part, 0.1);
        // Rotating every element, stuck ones included, leaves all powers unchanged.
        let fault = FaultRealization::new(fault.indices.clone(), fault.states.map(|z| z * rot), 8).unwrap();
        let rotated = PartitionedChannels::new(&ch, &fault).unwrap();
        let b = slnr(&v_r.map(|z| z * rot), &rotated, 0.1);
        assert!((a - b).abs() <= 1e-12 * a);
        let (_, clean) = random_instance(8, 3, 5, &[], 8);
        let v = random_phases(8, 8);
        let c = slnr(&v, &clean, 0.1);
        assert!((c - slnr(&v.map(|z| z * rot), &clean, 0.1)).abs() <= 1e-12 * c);
    }

    #[test]
    fn bound_without_faults_equals_slnr() {
        let (_, part) = random_instance(7, 2, 4, &[], 11);
        let v = random_phases(7, 11);
        let a = expected_slnr_lower_bound(&v, &part, 0.2);
        let b = slnr(&v, &part, 0.2);
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn bound_offset_is_a_third_of_faulty_energy() {
        let (_, part) = random_instance(7, 2, 4, &[0, 6], 12);
        let v = random_phases(5, 12);
        let (num, _) = expected_terms(&v, &part);
        let k = part.ue_index;
        let functioning = (part.h_r[k].transpose() * v.conjugate()).norm_squared();
        let rows: f64 = part.h_b[k].row_iter().map(|r| r.norm_squared()).sum();
        assert!((num - functioning - rows / 3.0).abs() < 1e-12 * num);
    }

    #[test]
    fn jensen_bound_below_mean_slnr() {
        let n = 10;
        let faults = [1, 2, 7];
        let (ch, indices_only) = {
            let (ch, _) = random_instance(n, 3, 6, &faults, 21);
            let p = PartitionedChannels::without_states(&ch, &faults).unwrap();
            (ch, p)
        };
        let v = random_phases(n - faults.len(), 21);
        let bound = expected_slnr_lower_bound(&v, &indices_only, 0.5);
        let mut rng = substream(21, 5, Stream::FaultStates, 0);
        let draws = 10_000;
        let mut mean = 0.0;
        for _ in 0..draws {
            let fault = FaultRealization::new(faults.to_vec(), sample_fault_states(3, &mut rng), n).unwrap();
            let part = PartitionedChannels::new(&ch, &fault).unwrap();
            mean += slnr(&v, &part, 0.5);
        }
        mean /= draws as f64;
        assert!(mean >= bound * 0.99, "mean {mean} bound {bound}");
    }

    #[test]
    fn precoder_matches_norm_form() {
        let (ch, part, fault) = instance_with_fault(8, 4, 3, &[5], 9);
        let v_r = random_phases(7, 9);
        let v = part.interleave(&v_r, &fault.states);
        let p = 0.7;
        let w = mrt_precoder(&v, &ch.cascaded[0], p).unwrap();
        let via_w = received_power(&v, &ch.cascaded[0], &w);
        let via_norm = p * part.point_power(&v_r, 0);
        assert!((via_w - via_norm).abs() <= 1e-9 * via_norm, "{via_w} {via_norm}");
    }

    #[test]
    fn grid_geometry() {
        let cfg = ScenarioConfig::default();
        let grid = GridSpec::over_area(&cfg, 60, 60);
        assert_eq!(grid.cells(), 3600);
        let (px, py) = grid.pitch();
        assert!((px - 0.5).abs() < 1e-12 && (py - 0.5).abs() < 1e-12);
        assert_eq!(grid.cell_of(&cfg.ue_position), Some((30, 30)));
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
    }
}
