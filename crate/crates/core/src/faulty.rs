//! Faulty-element model: which elements fail, their stuck reflection states,
//! and the split of every cascaded channel into controllable and fixed parts.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{cis, frobenius_sq, CMat, CVec, Cplx};

/// Spatial distribution of failed elements on the `Nx x Ny` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultPattern {
    Uniform,
    /// Upper-left quadrant: `ix < Nx/2` and `iy >= Ny/2`.
    Quadrant,
    /// The two highest rows.
    TopRows,
    /// The two leftmost columns.
    LeftColumns,
}

impl FaultPattern {
    pub const ALL: [FaultPattern; 4] = [
        FaultPattern::Quadrant,
        FaultPattern::Uniform,
        FaultPattern::TopRows,
        FaultPattern::LeftColumns,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FaultPattern::Uniform => "uniform",
            FaultPattern::Quadrant => "quadrant",
            FaultPattern::TopRows => "top_rows",
            FaultPattern::LeftColumns => "left_columns",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(FaultPattern::Uniform),
            "quadrant" => Some(FaultPattern::Quadrant),
            "top_rows" | "rows" => Some(FaultPattern::TopRows),
            "left_columns" | "columns" => Some(FaultPattern::LeftColumns),
            _ => None,
        }
    }

    /// Element count of the unpadded structured pattern.
    pub fn natural_count(self, nx: usize, ny: usize) -> Option<usize> {
        match self {
            FaultPattern::Uniform => None,
            FaultPattern::Quadrant => Some((nx / 2) * (ny - ny / 2)),
            FaultPattern::TopRows => Some(2.min(ny) * nx),
            FaultPattern::LeftColumns => Some(2.min(nx) * ny),
        }
    }
}

#[inline]
pub fn grid_index(ix: usize, iy: usize, nx: usize) -> usize {
    ix + nx * iy
}

#[inline]
pub fn grid_coords(n: usize, nx: usize) -> (usize, usize) {
    (n % nx, n / nx)
}

fn pattern_error(pattern: FaultPattern, requested: usize, reason: &str) -> Error {
    Error::FaultPattern {
        pattern: pattern.name(),
        requested,
        reason: reason.to_string(),
    }
}

/// Failed element indices, sorted ascending.
///
/// `Uniform` shuffles all `N` indices and keeps the first `B`, so the same
/// generator state yields nested sets for increasing `B`. Row and column
/// patterns accept `B` above their natural count when `pad` is set: rows are
/// extended downward starting at the leftmost element, columns rightward
/// starting at the top element.
pub fn sample_fault_indices<R: Rng + ?Sized>(
    pattern: FaultPattern,
    count: usize,
    nx: usize,
    ny: usize,
    pad: bool,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = nx * ny;
    if count > n {
        return Err(pattern_error(pattern, count, &format!("only {n} elements exist")));
    }
    let mut picked: Vec<usize> = match pattern {
        FaultPattern::Uniform => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(rng);
            all.truncate(count);
            all
        }
        FaultPattern::Quadrant => {
            let natural = pattern.natural_count(nx, ny).unwrap_or(0);
            if count != natural {
                return Err(pattern_error(pattern, count, &format!("quadrant holds exactly {natural} elements")));
            }
            let mut v = Vec::with_capacity(natural);
            for iy in ny / 2..ny {
                for ix in 0..nx / 2 {
                    v.push(grid_index(ix, iy, nx));
                }
            }
            v
        }
        FaultPattern::TopRows => {
            let natural = pattern.natural_count(nx, ny).unwrap_or(0);
            if count < natural || (count > natural && !pad) {
                return Err(pattern_error(pattern, count, &format!("two rows hold {natural} elements")));
            }
            // Rows from the top, each scanned left to right.
            (0..ny)
                .rev()
                .flat_map(|iy| (0..nx).map(move |ix| grid_index(ix, iy, nx)))
                .take(count)
                .collect()
        }
        FaultPattern::LeftColumns => {
            let natural = pattern.natural_count(nx, ny).unwrap_or(0);
            if count < natural || (count > natural && !pad) {
                return Err(pattern_error(pattern, count, &format!("two columns hold {natural} elements")));
            }
            // Columns from the left, each scanned top to bottom.
            (0..nx)
                .flat_map(|ix| (0..ny).rev().map(move |iy| grid_index(ix, iy, nx)))
                .take(count)
                .collect()
        }
    };
    picked.sort_unstable();
    Ok(picked)
}

/// Stuck reflection states `delta * exp(j phi)` with `delta ~ U[0,1]`, `phi ~ U[0, 2pi)`.
pub fn sample_fault_states<R: Rng + ?Sized>(count: usize, rng: &mut R) -> CVec {
    CVec::from_fn(count, |_, _| {
        let delta: f64 = rng.random();
        let phi: f64 = rng.random::<f64>() * 2.0 * PI;
        cis(phi) * delta
    })
}

/// Failed elements and the reflection state each is stuck at.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultRealization {
    /// Sorted, distinct element indices.
    pub indices: Vec<usize>,
    /// `states[b]` belongs to `indices[b]`.
    pub states: CVec,
}

impl FaultRealization {
    pub fn new(mut indices: Vec<usize>, states: CVec, n: usize) -> Result<Self> {
        if indices.len() != states.len() {
            return Err(Error::Dimension(format!(
                "{} fault indices but {} states",
                indices.len(),
                states.len()
            )));
        }
        let mut order: Vec<usize> = (0..indices.len()).collect();
        order.sort_by_key(|&i| indices[i]);
        let states = CVec::from_iterator(order.len(), order.iter().map(|&i| states[i]));
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Dimension("fault indices must be distinct".into()));
        }
        if indices.last().is_some_and(|&i| i >= n) {
            return Err(Error::Dimension(format!("fault index out of range for N = {n}")));
        }
        if states.iter().any(|z| z.norm() > 1.0 + 1e-12) {
            return Err(Error::Dimension("fault state magnitude exceeds one".into()));
        }
        Ok(Self { indices, states })
    }

    pub fn none() -> Self {
        Self {
            indices: Vec::new(),
            states: CVec::zeros(0),
        }
    }

    pub fn count(&self) -> usize {
        self.indices.len()
    }
}

/// Complement of a sorted index set within `0..n`.
pub fn functioning_indices(faulty: &[usize], n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - faulty.len().min(n));
    let mut f = faulty.iter().peekable();
    for i in 0..n {
        if f.peek() == Some(&&i) {
            f.next();
        } else {
            out.push(i);
        }
    }
    out
}

/// 0/1 mask over the grid, index `ix + Nx * iy`.
pub fn fault_mask(indices: &[usize], n: usize) -> Vec<bool> {
    let mut mask = alloc::vec![false; n];
    for &i in indices {
        if i < n {
            mask[i] = true;
        }
    }
    mask
}

/// Per-point split of the cascaded channels into the functioning rows and
/// the fixed contribution of the faulty rows, plus the lifted matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedChannels {
    pub functioning: Vec<usize>,
    pub faulty: Vec<usize>,
    /// `H_R,t`, (N - B) x M.
    pub h_r: Vec<CMat>,
    /// `H_B,t`, B x M.
    pub h_b: Vec<CMat>,
    /// Entries of the 1 x M row `h_B,t^H = v_B^H H_B,t`.
    pub fixed: Vec<CVec>,
    /// `[H_R,t; h_B,t^H] [H_R,t; h_B,t^H]^H`, (N - B + 1) square.
    pub lifted: Vec<CMat>,
    /// `||H_B,t||_F^2`.
    pub faulty_energy: Vec<f64>,
    pub ue_index: usize,
}

fn select_rows(m: &CMat, rows: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

impl PartitionedChannels {
    /// Splits every cascaded channel using the known fault states.
    pub fn new(channels: &ChannelSet, fault: &FaultRealization) -> Result<Self> {
        Self::build(channels, &fault.indices, Some(&fault.states))
    }

    /// Split for partial CSI: the fixed rows are zero because the states are unknown.
    pub fn without_states(channels: &ChannelSet, faulty: &[usize]) -> Result<Self> {
        Self::build(channels, faulty, None)
    }

    fn build(channels: &ChannelSet, faulty: &[usize], states: Option<&CVec>) -> Result<Self> {
        let n = channels.ris_elements();
        let m = channels.ap_antennas();
        let mut faulty = faulty.to_vec();
        faulty.sort_unstable();
        if faulty.windows(2).any(|w| w[0] == w[1]) || faulty.last().is_some_and(|&i| i >= n) {
            return Err(Error::Dimension(format!("invalid fault index set for N = {n}")));
        }
        if let Some(s) = states {
            if s.len() != faulty.len() {
                return Err(Error::Dimension(format!(
                    "{} fault states for {} faulty elements",
                    s.len(),
                    faulty.len()
                )));
            }
        }
        let functioning = functioning_indices(&faulty, n);
        let nbar = functioning.len();
        let points = channels.points();
        let mut h_r = Vec::with_capacity(points);
        let mut h_b = Vec::with_capacity(points);
        let mut fixed = Vec::with_capacity(points);
        let mut lifted = Vec::with_capacity(points);
        let mut faulty_energy = Vec::with_capacity(points);
        for hb in &channels.cascaded {
            if hb.nrows() != n || hb.ncols() != m {
                return Err(Error::Dimension("cascaded channel shape mismatch".into()));
            }
            let r = select_rows(hb, &functioning);
            let b = select_rows(hb, &faulty);
            // h_B^H = v_B^H H_B, entry m = sum_b conj(v_b) H_B[b, m].
            let f = match states {
                Some(s) => b.transpose() * s.conjugate(),
                None => CVec::zeros(m),
            };
            let mut stacked = CMat::zeros(nbar + 1, m);
            stacked.rows_mut(0, nbar).copy_from(&r);
            for j in 0..m {
                stacked[(nbar, j)] = f[j];
            }
            lifted.push(&stacked * stacked.adjoint());
            faulty_energy.push(frobenius_sq(&b));
            h_r.push(r);
            h_b.push(b);
            fixed.push(f);
        }
        Ok(Self {
            functioning,
            faulty,
            h_r,
            h_b,
            fixed,
            lifted,
            faulty_energy,
            ue_index: channels.ue_index,
        })
    }

    /// Number of functioning elements.
    pub fn nbar(&self) -> usize {
        self.functioning.len()
    }

    pub fn points(&self) -> usize {
        self.h_r.len()
    }

    /// Entries of the row `v_R^H H_R,t + h_B,t^H`.
    pub fn effective_row(&self, v_r: &CVec, t: usize) -> CVec {
        self.h_r[t].transpose() * v_r.conjugate() + &self.fixed[t]
    }

    /// `||v_R^H H_R,t + h_B,t^H||^2`.
    pub fn point_power(&self, v_r: &CVec, t: usize) -> f64 {
        self.effective_row(v_r, t).norm_squared()
    }

    /// Interleaves the rows of `H_R,t` and `H_B,t` back into `diag(h_t^H) G`.
    pub fn reassemble(&self, t: usize) -> CMat {
        let m = self.h_r[t].ncols();
        let n = self.functioning.len() + self.faulty.len();
        let mut out = CMat::zeros(n, m);
        for (i, &row) in self.functioning.iter().enumerate() {
            out.row_mut(row).copy_from(&self.h_r[t].row(i));
        }
        for (i, &row) in self.faulty.iter().enumerate() {
            out.row_mut(row).copy_from(&self.h_b[t].row(i));
        }
        out
    }

    /// Full N-element reflection vector from the functioning part and the stuck states.
    pub fn interleave(&self, v_r: &CVec, v_b: &CVec) -> CVec {
        let n = self.functioning.len() + self.faulty.len();
        let mut v = CVec::from_element(n, Cplx::new(0.0, 0.0));
        for (i, &row) in self.functioning.iter().enumerate() {
            v[row] = v_r[i];
        }
        for (i, &row) in self.faulty.iter().enumerate() {
            v[row] = v_b[i];
        }
        v
    }

    /// Restriction of a full N-vector to the functioning elements.
    pub fn restrict(&self, v_full: &CVec) -> CVec {
        CVec::from_iterator(self.functioning.len(), self.functioning.iter().map(|&i| v_full[i]))
    }
}
