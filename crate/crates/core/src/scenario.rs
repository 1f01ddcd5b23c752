//! Scenario configuration and the leakage test-point cloud.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{db_to_linear, dbm_to_watts, Point3};

/// How the minimum-signal threshold of the SLNR programs is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule {
    /// Recompute per trial from that trial's naive SNR divided by the divisor.
    PerTrial,
    /// Use one scenario-wide SNR value (linear) divided by the divisor.
    Fixed(f64),
}

/// Interior-point tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTolerances {
    /// Relative duality gap.
    pub gap: f64,
    /// Allowed relative negativity of the smallest eigenvalue of X.
    pub psd: f64,
    /// Allowed deviation of diag(X) from one.
    pub eq: f64,
    pub max_iter: usize,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            gap: 1e-6,
            psd: 1e-7,
            eq: 1e-7,
            max_iter: 100,
        }
    }
}

/// Everything needed to reproduce a run. Units are SI (meters, watts, linear ratios).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub ap_position: Point3,
    pub ris_position: Point3,
    pub ue_position: Point3,
    /// AP antenna count M.
    pub ap_antennas: usize,
    pub ris_nx: usize,
    pub ris_ny: usize,
    pub wavelength: f64,
    pub element_spacing: f64,
    /// Transmit power P (W).
    pub tx_power: f64,
    /// Noise power (W).
    pub noise_power: f64,
    /// Rician factor K_R (linear).
    pub rician_factor: f64,
    pub scatter_paths: usize,
    /// Pathloss exponent of the AP-RIS link.
    pub eta_ap_ris: f64,
    /// Pathloss exponent of the RIS-point links.
    pub eta_ris_ue: f64,
    /// Pathloss at the 1 m reference distance (linear).
    pub ref_loss: f64,
    pub area_x: f64,
    pub area_y: f64,
    /// Total test points T, the UE included.
    pub test_points: usize,
    /// Divisor applied to the naive SNR to obtain the signal threshold.
    pub gamma_divisor: f64,
    pub gamma_rule: GammaRule,
    pub exclusion_radius: f64,
    pub trials: usize,
    pub seed: u64,
    /// Gaussian randomization sample count L.
    pub randomization_samples: usize,
    /// Relative bisection termination tolerance.
    pub bisection_tol: f64,
    /// Relative slack on the signal threshold when screening randomized candidates.
    pub gamma_slack: f64,
    /// Pad the row/column fault patterns up to the requested count.
    pub pad_structured_faults: bool,
    pub solver: SolverTolerances,
}

/// Free-space loss at 1 m, `(lambda / 4 pi)^2`.
pub fn friis_reference_loss(wavelength: f64) -> f64 {
    let r = wavelength / (4.0 * PI);
    r * r
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let wavelength = 0.01;
        Self {
            ap_position: Point3::new(0.0, 0.0, 10.0),
            ris_position: Point3::new(10.0, 34.0, 10.0),
            ue_position: Point3::new(16.0, 16.0, 0.0),
            ap_antennas: 16,
            ris_nx: 10,
            ris_ny: 10,
            wavelength,
            element_spacing: wavelength / 2.0,
            tx_power: dbm_to_watts(12.0),
            noise_power: dbm_to_watts(-80.0),
            rician_factor: db_to_linear(10.0),
            scatter_paths: 10,
            eta_ap_ris: 2.0,
            eta_ris_ue: 2.0,
            ref_loss: friis_reference_loss(wavelength),
            area_x: 30.0,
            area_y: 30.0,
            test_points: 125,
            gamma_divisor: 1.5,
            gamma_rule: GammaRule::PerTrial,
            exclusion_radius: 1.0,
            trials: 50,
            seed: 1,
            randomization_samples: 500,
            bisection_tol: 1e-3,
            gamma_slack: 0.02,
            pad_structured_faults: true,
            solver: SolverTolerances::default(),
        }
    }
}


fn invalid(key: &'static str, reason: &str) -> Error {
    Error::InvalidConfig {
        key,
        reason: reason.to_string(),
    }
}

impl ScenarioConfig {
    /// RIS element count N.
    pub fn ris_elements(&self) -> usize {
        self.ris_nx * self.ris_ny
    }

    /// Noise-to-power ratio appearing in every SLNR denominator.
    pub fn noise_over_power(&self) -> f64 {
        self.noise_power / self.tx_power
    }

    pub fn validate(&self) -> Result<()> {
        let finite_point = |p: &Point3| p.iter().all(|c| c.is_finite());
        if !finite_point(&self.ap_position) {
            return Err(invalid("p_ap", "coordinates must be finite"));
        }
        if !finite_point(&self.ris_position) {
            return Err(invalid("p_ris", "coordinates must be finite"));
        }
        if !finite_point(&self.ue_position) {
            return Err(invalid("p_ue", "coordinates must be finite"));
        }
        if (self.ap_position - self.ris_position).norm() <= 0.0 {
            return Err(invalid("p_ris", "AP and RIS positions coincide"));
        }
        if (self.ue_position - self.ris_position).norm() <= 0.0 {
            return Err(invalid("p_ue", "UE and RIS positions coincide"));
        }
        if self.ap_antennas == 0 {
            return Err(invalid("M", "need at least one AP antenna"));
        }
        if self.ris_nx == 0 {
            return Err(invalid("Nx", "must be >= 1"));
        }
        if self.ris_ny == 0 {
            return Err(invalid("Ny", "must be >= 1"));
        }
        let positive = [
            ("wavelength", self.wavelength),
            ("spacing", self.element_spacing),
            ("tx_power", self.tx_power),
            ("noise_power", self.noise_power),
            ("ref_loss", self.ref_loss),
            ("area_x", self.area_x),
            ("area_y", self.area_y),
            ("bisection_tol", self.bisection_tol),
        ];
        for (key, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(key, &format!("must be positive and finite, got {value}")));
            }
        }
        let non_negative = [
            ("rician_factor", self.rician_factor),
            ("eta_i", self.eta_ap_ris),
            ("eta_r", self.eta_ris_ue),
            ("exclusion_radius", self.exclusion_radius),
            ("gamma_slack", self.gamma_slack),
        ];
        for (key, value) in non_negative {
            if !(value >= 0.0) || value.is_nan() {
                return Err(invalid(key, &format!("must be non-negative, got {value}")));
            }
        }
        if self.scatter_paths == 0 {
            return Err(invalid("scatter_paths", "must be >= 1"));
        }
        if self.test_points < 2 {
            return Err(invalid("test_points", "need the UE plus at least one leakage point"));
        }
        if !(self.gamma_divisor > 1.0) {
            return Err(invalid("gamma_divisor", "must be > 1"));
        }
        if let GammaRule::Fixed(v) = self.gamma_rule {
            if !(v >= 0.0) {
                return Err(invalid("gamma_snr", "must be non-negative"));
            }
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be >= 1"));
        }
        if self.randomization_samples == 0 {
            return Err(invalid("randomization_samples", "must be >= 1"));
        }
        if self.bisection_tol >= 1.0 {
            return Err(invalid("bisection_tol", "must be < 1"));
        }
        if self.gamma_slack >= 1.0 {
            return Err(invalid("gamma_slack", "must be < 1"));
        }
        let s = &self.solver;
        if !(s.gap > 0.0 && s.psd > 0.0 && s.eq > 0.0) {
            return Err(invalid("solver_tol", "tolerances must be positive"));
        }
        if s.max_iter == 0 {
            return Err(invalid("solver_max_iter", "must be >= 1"));
        }
        Ok(())
    }
}

/// Positions of the UE and the leakage test points.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPointCloud {
    pub positions: Vec<Point3>,
    /// Index of the intended UE inside `positions`.
    pub ue_index: usize,
}

impl TestPointCloud {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn ue(&self) -> Point3 {
        self.positions[self.ue_index]
    }

    /// Indices of the leakage points (every point except the UE).
    pub fn leakage_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.positions.len()).filter(move |&t| t != self.ue_index)
    }
}

/// Attempts allowed per requested leakage point before giving up.
const REJECTION_ATTEMPTS_PER_POINT: usize = 1000;

/// Draws `T - 1` leakage points uniformly on the ground-plane rectangle
/// centered on the UE, rejecting points closer than the exclusion radius.
/// The UE is stored at index 0.
pub fn sample_test_points<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<TestPointCloud> {
    if cfg.test_points < 2 {
        return Err(invalid("test_points", "need the UE plus at least one leakage point"));
    }
    if !(cfg.area_x > 0.0 && cfg.area_y > 0.0) {
        return Err(invalid("area_x", "area sides must be positive"));
    }
    let ue = cfg.ue_position;
    let wanted = cfg.test_points - 1;
    let cap = REJECTION_ATTEMPTS_PER_POINT * wanted;
    let mut positions = Vec::with_capacity(cfg.test_points);
    positions.push(ue);
    let mut attempts = 0;
    while positions.len() <= wanted {
        if attempts >= cap {
            return Err(Error::SamplingExhausted { attempts });
        }
        attempts += 1;
        let x = ue.x + (rng.random::<f64>() - 0.5) * cfg.area_x;
        let y = ue.y + (rng.random::<f64>() - 0.5) * cfg.area_y;
        let p = Point3::new(x, y, 0.0);
        let dx = p.x - ue.x;
        let dy = p.y - ue.y;
        let dz = p.z - ue.z;
        if (dx * dx + dy * dy + dz * dz) >= cfg.exclusion_radius * cfg.exclusion_radius {
            positions.push(p);
        }
    }
    Ok(TestPointCloud { positions, ue_index: 0 })
}
