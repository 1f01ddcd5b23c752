//! Propagation model: steering vectors, pathloss, the LoS AP-RIS matrix,
//! Rician RIS-point vectors and cascaded channels.
//!
//! Conventions:
//! - RIS element `n = ix + Nx * iy`; `ix` runs along the horizontal in-plane
//!   axis (the one with a positive x component), `iy` along +z.
//! - The RIS is a vertical plane whose normal points horizontally toward the
//!   midpoint between the AP and the UE.
//! - The AP is a horizontal ULA with half-wavelength spacing whose broadside
//!   faces the RIS.
//! - Steering entries are `exp(j 2pi/lambda <r_n - r_0, u>)` with `u` the unit
//!   direction of departure/arrival, so entry 0 is always 1.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, CVec, Cplx, Point3};
use crate::scenario::{ScenarioConfig, TestPointCloud};

/// Above this Rician factor the NLoS part is dropped entirely.
pub const PURE_LOS_RICIAN_FACTOR: f64 = 1e9;

/// Element positions of the two arrays plus the RIS orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub ris_elements: Vec<Point3>,
    pub ris_normal: Point3,
    pub ris_axis_x: Point3,
    pub ap_elements: Vec<Point3>,
    pub ris_center: Point3,
    pub ap_center: Point3,
}

fn horizontal_unit(v: Point3) -> Option<Point3> {
    let h = Point3::new(v.x, v.y, 0.0);
    let n = h.norm();
    (n > 0.0).then(|| h / n)
}

impl ArrayGeometry {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let ris = cfg.ris_position;
        let ap = cfg.ap_position;
        if (ap - ris).norm() <= 0.0 {
            return Err(Error::Geometry("AP and RIS positions coincide".into()));
        }
        let midpoint = (ap + cfg.ue_position) * 0.5;
        let normal = horizontal_unit(midpoint - ris).unwrap_or_else(|| Point3::new(0.0, -1.0, 0.0));
        let mut axis_x = Point3::new(-normal.y, normal.x, 0.0);
        if axis_x.x < 0.0 || (axis_x.x == 0.0 && axis_x.y < 0.0) {
            axis_x = -axis_x;
        }
        let axis_z = Point3::new(0.0, 0.0, 1.0);
        let d = cfg.element_spacing;
        let (nx, ny) = (cfg.ris_nx, cfg.ris_ny);
        let cx = (nx as f64 - 1.0) / 2.0;
        let cy = (ny as f64 - 1.0) / 2.0;
        let mut ris_elements = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                ris_elements.push(ris + axis_x * ((ix as f64 - cx) * d) + axis_z * ((iy as f64 - cy) * d));
            }
        }

        let ap_axis = horizontal_unit(ris - ap)
            .map(|u| Point3::new(u.y, -u.x, 0.0))
            .unwrap_or_else(|| Point3::new(1.0, 0.0, 0.0));
        let d_ap = cfg.wavelength / 2.0;
        let m = cfg.ap_antennas;
        let cm = (m as f64 - 1.0) / 2.0;
        let ap_elements = (0..m).map(|i| ap + ap_axis * ((i as f64 - cm) * d_ap)).collect();

        Ok(Self {
            ris_elements,
            ris_normal: normal,
            ris_axis_x: axis_x,
            ap_elements,
            ris_center: ris,
            ap_center: ap,
        })
    }
}

/// Array response toward `direction` (normalized internally).
pub fn steering_vector(elements: &[Point3], direction: &Point3, wavelength: f64) -> Result<CVec> {
    let len = direction.norm();
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::Geometry("zero-length steering direction".into()));
    }
    if !(wavelength > 0.0) {
        return Err(Error::Geometry(format!("wavelength must be positive, got {wavelength}")));
    }
    let u = direction / len;
    let k = 2.0 * PI / wavelength;
    let r0 = elements.first().copied().unwrap_or_else(Point3::zeros);
    Ok(CVec::from_iterator(
        elements.len(),
        elements.iter().map(|r| cis(k * (r - r0).dot(&u))),
    ))
}

/// `ref_loss / distance^exponent`.
pub fn pathloss(ref_loss: f64, distance: f64, exponent: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Geometry(format!("distance must be positive, got {distance}")));
    }
    Ok(ref_loss / distance.powf(exponent))
}

/// LoS AP-RIS matrix `G = sqrt(gamma_i) b(psi_A) a(psi_D)^H` (N x M, rank one).
pub fn ap_ris_channel(cfg: &ScenarioConfig, geom: &ArrayGeometry) -> Result<CMat> {
    let to_ap = geom.ap_center - geom.ris_center;
    let d1 = to_ap.norm();
    if !(d1 > 0.0) {
        return Err(Error::Geometry("AP and RIS positions coincide".into()));
    }
    let gain = pathloss(cfg.ref_loss, d1, cfg.eta_ap_ris)?.sqrt();
    let arrival = steering_vector(&geom.ris_elements, &to_ap, cfg.wavelength)?;
    let departure = steering_vector(&geom.ap_elements, &(-to_ap), cfg.wavelength)?;
    Ok((arrival * departure.adjoint()).scale(gain))
}

/// AP-side steering vector toward the RIS (the right factor of G).
pub fn ap_steering(cfg: &ScenarioConfig, geom: &ArrayGeometry) -> Result<CVec> {
    steering_vector(&geom.ap_elements, &(geom.ris_center - geom.ap_center), cfg.wavelength)
}

/// One scattering path: small-scale fading vector and departure direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPath {
    pub fading: CVec,
    pub direction: Point3,
}

/// `sqrt(gamma_g / P_K) * sum_p fading_p o b(direction_p)`.
pub fn nlos_from_paths(
    gamma_g: f64,
    elements: &[Point3],
    wavelength: f64,
    paths: &[ScatterPath],
) -> Result<CVec> {
    if paths.is_empty() {
        return Err(Error::Dimension("need at least one scattering path".into()));
    }
    let n = elements.len();
    let mut acc = CVec::zeros(n);
    for path in paths {
        if path.fading.len() != n {
            return Err(Error::Dimension(format!(
                "fading vector has {} entries, array has {n}",
                path.fading.len()
            )));
        }
        let b = steering_vector(elements, &path.direction, wavelength)?;
        acc += path.fading.component_mul(&b);
    }
    Ok(acc.scale((gamma_g / paths.len() as f64).sqrt()))
}

/// Standard circularly-symmetric complex Gaussian sample, `CN(0, 1)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Cplx {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Cplx::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Uniform direction on the hemisphere in front of the surface.
pub fn hemisphere_direction<R: Rng + ?Sized>(normal: &Point3, rng: &mut R) -> Point3 {
    loop {
        let v = Point3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let len = v.norm();
        if len < 1e-12 {
            continue;
        }
        let u = v / len;
        return if u.dot(normal) < 0.0 { -u } else { u };
    }
}

/// Draws the scattering paths for one RIS-point link.
pub fn draw_scatter_paths<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    geom: &ArrayGeometry,
    rng: &mut R,
) -> Vec<ScatterPath> {
    let n = geom.ris_elements.len();
    (0..cfg.scatter_paths)
        .map(|_| {
            let fading = CVec::from_fn(n, |_, _| complex_gaussian(rng));
            let direction = hemisphere_direction(&geom.ris_normal, rng);
            ScatterPath { fading, direction }
        })
        .collect()
}

/// RIS-point pathloss `gamma_g`.
pub fn point_pathloss(cfg: &ScenarioConfig, geom: &ArrayGeometry, point: &Point3) -> Result<f64> {
    pathloss(cfg.ref_loss, (point - geom.ris_center).norm(), cfg.eta_ris_ue)
}

/// NLoS RIS-point vector with freshly drawn paths.
pub fn nlos_component<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    geom: &ArrayGeometry,
    point: &Point3,
    rng: &mut R,
) -> Result<CVec> {
    let gamma_g = point_pathloss(cfg, geom, point)?;
    let paths = draw_scatter_paths(cfg, geom, rng);
    nlos_from_paths(gamma_g, &geom.ris_elements, cfg.wavelength, &paths)
}

/// LoS RIS-point vector `sqrt(gamma_g) b(psi)`.
pub fn los_component(cfg: &ScenarioConfig, geom: &ArrayGeometry, point: &Point3) -> Result<CVec> {
    let gamma_g = point_pathloss(cfg, geom, point)?;
    let b = steering_vector(&geom.ris_elements, &(point - geom.ris_center), cfg.wavelength)?;
    Ok(b.scale(gamma_g.sqrt()))
}

/// Weights `(sqrt(K/(1+K)), sqrt(1/(1+K)))`.
pub fn rician_weights(k: f64) -> (f64, f64) {
    if k >= PURE_LOS_RICIAN_FACTOR {
        (1.0, 0.0)
    } else {
        ((k / (1.0 + k)).sqrt(), (1.0 / (1.0 + k)).sqrt())
    }
}

/// Combines given LoS and NLoS parts with the Rician weights.
pub fn rician_mix(k: f64, los: &CVec, nlos: &CVec) -> CVec {
    let (wl, wn) = rician_weights(k);
    if wn == 0.0 {
        return los.clone();
    }
    if wl == 0.0 {
        return nlos.clone();
    }
    los.scale(wl) + nlos.scale(wn)
}

/// Rician RIS-point channel. Consumes no randomness in the pure-LoS limit.
pub fn rician_channel<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    geom: &ArrayGeometry,
    point: &Point3,
    rng: &mut R,
) -> Result<CVec> {
    if cfg.rician_factor < 0.0 {
        return Err(Error::InvalidConfig {
            key: "rician_factor",
            reason: "must be non-negative".into(),
        });
    }
    let los = los_component(cfg, geom, point)?;
    if cfg.rician_factor >= PURE_LOS_RICIAN_FACTOR {
        return Ok(los);
    }
    let nlos = nlos_component(cfg, geom, point, rng)?;
    Ok(rician_mix(cfg.rician_factor, &los, &nlos))
}

/// `diag(h^H) G`: row n is `conj(h_n) * G[n, :]`.
pub fn cascade(h: &CVec, g: &CMat) -> Result<CMat> {
    if h.len() != g.nrows() {
        return Err(Error::Dimension(format!(
            "channel has {} entries, G has {} rows",
            h.len(),
            g.nrows()
        )));
    }
    let mut out = g.clone();
    for (n, mut row) in out.row_iter_mut().enumerate() {
        row *= h[n].conj();
    }
    Ok(out)
}

/// All propagation quantities of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub g: CMat,
    /// RIS-point channels, indexed like the test-point cloud.
    pub h: Vec<CVec>,
    /// Cascaded channels `diag(h_t^H) G`.
    pub cascaded: Vec<CMat>,
    pub gamma_i: f64,
    pub gamma_g: Vec<f64>,
    pub ue_index: usize,
}

impl ChannelSet {
    /// Builds channels for every cloud point. Each point draws its NLoS paths
    /// from `rng` in cloud order.
    pub fn build<R: Rng + ?Sized>(
        cfg: &ScenarioConfig,
        geom: &ArrayGeometry,
        cloud: &TestPointCloud,
        rng: &mut R,
    ) -> Result<Self> {
        let g = ap_ris_channel(cfg, geom)?;
        let gamma_i = pathloss(cfg.ref_loss, (geom.ap_center - geom.ris_center).norm(), cfg.eta_ap_ris)?;
        let mut h = Vec::with_capacity(cloud.len());
        let mut gamma_g = Vec::with_capacity(cloud.len());
        for p in &cloud.positions {
            gamma_g.push(point_pathloss(cfg, geom, p)?);
            h.push(rician_channel(cfg, geom, p, rng)?);
        }
        Self::from_parts(g, h, gamma_i, gamma_g, cloud.ue_index)
    }

    pub fn from_parts(g: CMat, h: Vec<CVec>, gamma_i: f64, gamma_g: Vec<f64>, ue_index: usize) -> Result<Self> {
        if ue_index >= h.len() {
            return Err(Error::Dimension(format!("UE index {ue_index} out of {} points", h.len())));
        }
        let cascaded = h.iter().map(|ht| cascade(ht, &g)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            g,
            h,
            cascaded,
            gamma_i,
            gamma_g,
            ue_index,
        })
    }

    pub fn ris_elements(&self) -> usize {
        self.g.nrows()
    }

    pub fn ap_antennas(&self) -> usize {
        self.g.ncols()
    }

    pub fn points(&self) -> usize {
        self.h.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::numerical_rank;
    use crate::rng::{substream, Stream};
    use alloc::vec;

    fn ula(n: usize, d: f64) -> Vec<Point3> {
        (0..n).map(|i| Point3::new(i as f64 * d, 0.0, 0.0)).collect()
    }

    /// Direction with `cos(psi) = c` relative to the x axis.
    fn dir(c: f64) -> Point3 {
        Point3::new(c, (1.0 - c * c).sqrt(), 0.0)
    }

    fn assert_close(a: &CVec, b: &[Cplx], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).norm() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn ula_steering_examples() {
        let lambda = 0.01;
        let pos = ula(2, lambda / 2.0);
        let one = Cplx::new(1.0, 0.0);
        assert_close(&steering_vector(&pos, &dir(0.0), lambda).unwrap(), &[one, one], 1e-12);
        assert_close(
            &steering_vector(&pos, &dir(1.0), lambda).unwrap(),
            &[one, Cplx::new(-1.0, 0.0)],
            1e-12,
        );
        let pos4 = ula(4, lambda / 2.0);
        let j = Cplx::new(0.0, 1.0);
        assert_close(
            &steering_vector(&pos4, &dir(0.5), lambda).unwrap(),
            &[one, j, -one, -j],
            1e-12,
        );
    }

    #[test]
    fn steering_matches_ula_formula() {
        let lambda = 0.01;
        let d = 0.004;
        let pos = ula(7, d);
        let c: f64 = 0.37;
        let b = steering_vector(&pos, &dir(c), lambda).unwrap();
        for n in 0..7 {
            let expected = cis(n as f64 * 2.0 * PI / lambda * d * c);
            assert!((b[n] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_direction_rejected() {
        assert!(steering_vector(&ula(2, 0.005), &Point3::zeros(), 0.01).is_err());
    }

    #[test]
    fn pathloss_examples() {
        assert_eq!(pathloss(1.0, 1.0, 2.0).unwrap(), 1.0);
        assert_eq!(pathloss(1.0, 2.0, 2.0).unwrap(), 0.25);
        assert!(pathloss(1.0, 0.0, 2.0).is_err());
        assert!(pathloss(1.0, -1.0, 2.0).is_err());
    }

    #[test]
    fn g_is_rank_one_and_scales_with_distance() {
        let cfg = ScenarioConfig::default();
        let geom = ArrayGeometry::new(&cfg).unwrap();
        let g = ap_ris_channel(&cfg, &geom).unwrap();
        assert_eq!(g.shape(), (100, 16));
        assert_eq!(numerical_rank(&g, 1e-9), 1);

        let mut far = cfg.clone();
        far.ap_position = cfg.ris_position + (cfg.ap_position - cfg.ris_position) * 2.0;
        let geom_far = ArrayGeometry::new(&far).unwrap();
        let g_far = ap_ris_channel(&far, &geom_far).unwrap();
        assert!((g_far.norm() / g.norm() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_element_g_is_scalar_gain() {
        let cfg = ScenarioConfig {
            ap_antennas: 1,
            ris_nx: 1,
            ris_ny: 1,
            ..ScenarioConfig::default()
        };
        let geom = ArrayGeometry::new(&cfg).unwrap();
        let g = ap_ris_channel(&cfg, &geom).unwrap();
        let d1 = (cfg.ap_position - cfg.ris_position).norm();
        let gain = (cfg.ref_loss / d1.powi(2)).sqrt();
        assert_eq!(g.shape(), (1, 1));
        assert!((g[(0, 0)].norm() - gain).abs() < 1e-18);
    }

    #[test]
    fn coincident_ap_and_ris_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.ap_position = cfg.ris_position;
        assert!(ArrayGeometry::new(&cfg).is_err());
    }

    #[test]
    fn single_path_unit_fading() {
        let cfg = ScenarioConfig::default();
        let geom = ArrayGeometry::new(&cfg).unwrap();
        let direction = Point3::new(0.3, -0.9, 0.2);
        let path = ScatterPath {
            fading: CVec::from_element(100, Cplx::new(1.0, 0.0)),
            direction,
        };
        let h = nlos_from_paths(4.0, &geom.ris_elements, cfg.wavelength, &[path]).unwrap();
        let b = steering_vector(&geom.ris_elements, &direction, cfg.wavelength).unwrap();
        assert_close(&h, b.scale(2.0).as_slice(), 1e-12);
    }

    #[test]
    fn nlos_is_deterministic_and_has_expected_energy() {
        let cfg = ScenarioConfig::default();
        let geom = ArrayGeometry::new(&cfg).unwrap();
        let p = cfg.ue_position;
        let a = nlos_component(&cfg, &geom, &p, &mut substream(5, 0, Stream::Nlos, 0)).unwrap();
        let b = nlos_component(&cfg, &geom, &p, &mut substream(5, 0, Stream::Nlos, 0)).unwrap();
        assert_eq!(a, b);

        // E|h_n|^2 = gamma_g for every entry; check the per-entry mean and the total.
        let gamma_g = point_pathloss(&cfg, &geom, &p).unwrap();
        let mut rng = substream(11, 0, Stream::Nlos, 0);
        let draws = 10_000;
        let mut per_entry = vec![0.0; 100];
        for _ in 0..draws {
            let h = nlos_component(&cfg, &geom, &p, &mut rng).unwrap();
            for (acc, z) in per_entry.iter_mut().zip(h.iter()) {
                *acc += z.norm_sqr();
            }
        }
        let total: f64 = per_entry.iter().sum::<f64>() / draws as f64;
        assert!((total / (100.0 * gamma_g) - 1.0).abs() < 0.03, "{}", total / (100.0 * gamma_g));
        let mean_entry = per_entry[37] / draws as f64;
        assert!((mean_entry / gamma_g - 1.0).abs() < 0.03);
    }

    #[test]
    fn rician_limits_and_weights() {
        let base = ScenarioConfig::default();
        let geom = ArrayGeometry::new(&base).unwrap();
        let p = Point3::new(20.0, 10.0, 0.0);
        let los = los_component(&base, &geom, &p).unwrap();

        let pure_los = ScenarioConfig {
            rician_factor: 1e9,
            ..base.clone()
        };
        let h = rician_channel(&pure_los, &geom, &p, &mut substream(1, 0, Stream::Nlos, 0)).unwrap();
        assert_eq!(h, los);

        let pure_nlos = ScenarioConfig {
            rician_factor: 0.0,
            ..base.clone()
        };
        let h = rician_channel(&pure_nlos, &geom, &p, &mut substream(1, 0, Stream::Nlos, 0)).unwrap();
        let nlos = nlos_component(&base, &geom, &p, &mut substream(1, 0, Stream::Nlos, 0)).unwrap();
        assert_close(&h, nlos.as_slice(), 1e-20);

        let (wl, wn) = rician_weights(10.0);
        assert!((wl - (10.0_f64 / 11.0).sqrt()).abs() < 1e-15);
        assert!((wn - (1.0_f64 / 11.0).sqrt()).abs() < 1e-15);
        assert!((wl * wl + wn * wn - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cascade_examples() {
        let g = CMat::from_fn(3, 2, |i, j| Cplx::new(i as f64 + 1.0, j as f64 - 0.5));
        let ones = CVec::from_element(3, Cplx::new(1.0, 0.0));
        assert_eq!(cascade(&ones, &g).unwrap(), g);

        let h = CVec::from_vec(vec![Cplx::new(0.0, 1.0), Cplx::new(0.0, 0.0), Cplx::new(2.0, 0.0)]);
        let c = cascade(&h, &g).unwrap();
        for j in 0..2 {
            assert_eq!(c[(1, j)], Cplx::new(0.0, 0.0));
            assert_eq!(c[(0, j)], Cplx::new(0.0, -1.0) * g[(0, j)]);
        }
        assert!(cascade(&CVec::zeros(2), &g).is_err());
    }

    #[test]
    fn cascaded_channels_are_rank_one() {
        let cfg = ScenarioConfig::default();
        let geom = ArrayGeometry::new(&cfg).unwrap();
        let g = ap_ris_channel(&cfg, &geom).unwrap();
        let a = ap_steering(&cfg, &geom).unwrap();
        let mut rng = substream(2, 0, Stream::Nlos, 0);
        for i in 0..100 {
            let p = Point3::new(5.0 + 0.2 * i as f64, 3.0 + 0.1 * i as f64, 0.0);
            let h = rician_channel(&cfg, &geom, &p, &mut rng).unwrap();
            let hb = cascade(&h, &g).unwrap();
            assert_eq!(numerical_rank(&hb, 1e-9), 1);
            // Factorization through the AP steering vector.
            let c = &hb * &a / Cplx::new(a.norm_squared(), 0.0);
            let resid = (&hb - &c * a.adjoint()).norm();
            assert!(resid <= 1e-10 * hb.norm().max(1e-300) + 1e-10, "{resid}");
        }
    }

    #[test]
    fn steering_entries_have_unit_modulus() {
        let cfg = ScenarioConfig::default();
        let geom = ArrayGeometry::new(&cfg).unwrap();
        let b = steering_vector(&geom.ris_elements, &Point3::new(0.1, -0.7, -0.4), cfg.wavelength).unwrap();
        assert_eq!(b[0], Cplx::new(1.0, 0.0));
        for z in b.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }
}
