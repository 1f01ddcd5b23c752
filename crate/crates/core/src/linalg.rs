//! Dense complex linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

pub type Cplx = Complex64;
pub type CMat = DMatrix<Cplx>;
pub type CVec = DVector<Cplx>;
pub type Point3 = Vector3<f64>;

#[inline]
pub fn cis(phase: f64) -> Cplx {
    Cplx::new(phase.cos(), phase.sin())
}

/// Entrywise projection onto the unit circle. Zero entries map to 1.
pub fn unit_modulus(v: &CVec) -> CVec {
    v.map(|z| {
        let r = z.norm();
        if r > 0.0 {
            z / r
        } else {
            Cplx::new(1.0, 0.0)
        }
    })
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn frobenius_sq(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Real part of `tr(A B)` for square matrices, without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// `[v; 1]^H A [v; 1]` style quadratic form `x^H A x` (real part).
pub fn quad_form(a: &CMat, x: &CVec) -> f64 {
    let ax = a * x;
    x.dotc(&ax).re
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &CMat) -> alloc::vec::Vec<f64> {
    let mut ev: alloc::vec::Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    ev
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_eigenvalue(a: &CMat) -> f64 {
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Principal eigenpair of a Hermitian matrix.
pub fn principal_eigenvector(a: &CMat) -> (f64, CVec) {
    let eig = SymmetricEigen::new(a.clone());
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors.column(best).into_owned())
}

/// Numerical rank: singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(a: &CMat, rel_tol: f64) -> usize {
    let sv = a.clone().singular_values();
    let top = sv.iter().copied().fold(0.0_f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Outer product `x x^H`.
pub fn outer(x: &CVec) -> CMat {
    x * x.adjoint()
}

/// `[v; 1]`.
pub fn lift(v: &CVec) -> CVec {
    let n = v.len();
    CVec::from_fn(n + 1, |i, _| if i < n { v[i] } else { Cplx::new(1.0, 0.0) })
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    Float::powf(10.0, db / 10.0)
}

/// Watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    Float::powf(10.0, dbm / 10.0) * 1e-3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
        assert!((dbm_to_watts(-80.0) - 1e-11).abs() < 1e-24);
        assert!((dbm_to_watts(watts_to_dbm(0.0158)) - 0.0158).abs() < 1e-15);
    }

    #[test]
    fn projection_has_unit_modulus() {
        let v = CVec::from_vec(alloc::vec![Cplx::new(3.0, 4.0), Cplx::new(0.0, 0.0), Cplx::new(-1e-3, 0.0)]);
        let u = unit_modulus(&v);
        for z in u.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-15);
        }
        assert!((u[0] - Cplx::new(0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn trace_product_matches_dense() {
        let a = CMat::from_fn(3, 3, |i, j| Cplx::new((i + 2 * j) as f64, (i as f64) - (j as f64)));
        let b = CMat::from_fn(3, 3, |i, j| Cplx::new((i * j) as f64 + 0.5, 1.0 - (j as f64)));
        let direct: Cplx = (&a * &b).trace();
        assert!((trace_product(&a, &b) - direct.re).abs() < 1e-12);
    }
}
