//! Grids and sampled fields.
//!
//! Dimension 1 uses the symmetric line `[-r_max, r_max]`; dimensions `n >= 2`
//! use a radial sector `[0, r_max]` with measure `r^(n-1) dr`. Node
//! quadrature weights are `h` on the line, `r^(n-1) h` on radial nodes and
//! the volume of `[0, h/2]` at the origin.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Minimum number of grid nodes.
pub const MIN_POINTS: usize = 16;
/// Width, in grid spacings, of the boundary layer excluded from identity
/// checks.
pub const BOUNDARY_LAYER: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dimension: usize,
    pub r_max: f64,
    pub num_points: usize,
}

impl GridSpec {
    pub fn new(dimension: usize, r_max: f64, num_points: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid("dimension", "must be positive"));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(invalid("r_max", format!("{r_max} must be positive and finite")));
        }
        if num_points < MIN_POINTS {
            return Err(invalid(
                "num_points",
                format!("{num_points} is below the minimum of {MIN_POINTS}"),
            ));
        }
        Ok(Self {
            dimension,
            r_max,
            num_points,
        })
    }

    /// Symmetric line grid (dimension 1).
    pub fn line(r_max: f64, num_points: usize) -> Result<Self> {
        Self::new(1, r_max, num_points)
    }

    /// Grid with the given spacing; `extent / h` must be (close to) an integer.
    pub fn with_spacing(dimension: usize, r_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("h", "spacing must be positive"));
        }
        let extent = if dimension == 1 { 2.0 * r_max } else { r_max };
        let cells = (extent / h).round();
        Self::new(dimension, r_max, cells as usize + 1)
    }

    pub fn is_radial(&self) -> bool {
        self.dimension >= 2
    }

    pub fn extent(&self) -> f64 {
        if self.is_radial() {
            self.r_max
        } else {
            2.0 * self.r_max
        }
    }

    pub fn spacing(&self) -> f64 {
        self.extent() / (self.num_points - 1) as f64
    }

    /// Grid with half the spacing over the same domain.
    pub fn refined(&self) -> Self {
        Self {
            num_points: 2 * (self.num_points - 1) + 1,
            ..*self
        }
    }

    /// Signed coordinate of node `i` (`x` on the line, `r` otherwise).
    pub fn coord(&self, i: usize) -> f64 {
        let h = self.spacing();
        if self.is_radial() {
            i as f64 * h
        } else if 2 * i + 1 == self.num_points {
            0.0
        } else {
            -self.r_max + i as f64 * h
        }
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.coord(i).abs()
    }

    /// Signed coordinate of the face between nodes `i` and `i + 1`.
    pub fn face_coord(&self, i: usize) -> f64 {
        self.coord(i) + 0.5 * self.spacing()
    }

    /// Surface factor `r^(n-1)` at face `i` (1 on the line).
    pub fn face_measure(&self, i: usize) -> f64 {
        if self.is_radial() {
            self.face_coord(i).powi(self.dimension as i32 - 1)
        } else {
            1.0
        }
    }

    /// Quadrature weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if !self.is_radial() {
            return h;
        }
        let n = self.dimension as i32;
        if i == 0 {
            (0.5 * h).powi(n) / n as f64
        } else {
            self.coord(i).powi(n - 1) * h
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.num_points).map(|i| self.weight(i)).collect()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.num_points).map(|i| self.coord(i)).collect()
    }

    /// Largest radius considered interior for identity checks.
    pub fn interior_limit(&self) -> f64 {
        self.r_max - BOUNDARY_LAYER * self.spacing()
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.radius(i) <= self.interior_limit()
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Complex samples on the nodes of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<C64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.num_points],
        }
    }

    /// Samples `f` at the signed node coordinates.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> C64) -> Self {
        Self {
            grid,
            values: (0..grid.num_points).map(|i| f(grid.coord(i))).collect(),
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.num_points {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.num_points
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Fails when the field carries mass in the boundary layer.
    pub fn ensure_interior_supported(&self) -> Result<()> {
        ensure_interior(&self.grid, &self.values)
    }
}

pub(crate) fn ensure_interior(grid: &GridSpec, values: &[C64]) -> Result<()> {
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(());
    }
    for (i, v) in values.iter().enumerate() {
        if !grid.is_interior(i) && v.norm() > 1e-10 * scale {
            return Err(Error::BoundarySupported {
                radius: grid.radius(i),
                value: v.norm(),
            });
        }
    }
    Ok(())
}

/// Complex samples on a uniform time grid times a spatial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    pub grid: GridSpec,
    pub t0: f64,
    pub dt: f64,
    /// `values[k][i]` is the sample at time `t0 + k dt` and node `i`.
    pub values: Vec<Vec<C64>>,
}

impl SpaceTimeField {
    /// Samples `f(t, x)` at `num_times` uniformly spaced times in `[t0, t1]`.
    pub fn from_fn(
        grid: GridSpec,
        t0: f64,
        t1: f64,
        num_times: usize,
        f: impl Fn(f64, f64) -> C64 + Sync,
    ) -> Result<Self> {
        if num_times < 2 || !(t1 > t0) {
            return Err(invalid("time window", format!("[{t0}, {t1}] with {num_times} slices")));
        }
        let dt = (t1 - t0) / (num_times - 1) as f64;
        let coords = grid.coords();
        let values = (0..num_times)
            .map(|k| {
                let t = t0 + k as f64 * dt;
                coords.iter().map(|&x| f(t, x)).collect()
            })
            .collect();
        Ok(Self {
            grid,
            t0,
            dt,
            values,
        })
    }

    pub fn zeros(grid: GridSpec, t0: f64, t1: f64, num_times: usize) -> Result<Self> {
        Self::from_fn(grid, t0, t1, num_times, |_, _| C64::new(0.0, 0.0))
    }

    pub fn num_times(&self) -> usize {
        self.values.len()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.num_times()).map(|k| self.time(k)).collect()
    }

    pub fn slice(&self, k: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values[k].clone(),
        }
    }

    /// Applies a node-wise map to every slice.
    pub fn map_space(&self, f: impl Fn(usize, C64) -> C64) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|slice| slice.iter().enumerate().map(|(i, &v)| f(i, v)).collect())
                .collect(),
            ..self.clone()
        }
    }

    pub fn ensure_interior_supported(&self) -> Result<()> {
        for slice in &self.values {
            ensure_interior(&self.grid, slice)?;
        }
        Ok(())
    }

    /// Second-order first time derivative at slice `k` (one-sided at the
    /// ends).
    pub(crate) fn dt_at(&self, k: usize) -> Vec<C64> {
        let m = self.num_times();
        let v = &self.values;
        let inv = 1.0 / self.dt;
        (0..self.grid.num_points)
            .map(|i| {
                if k == 0 {
                    (-3.0 * v[0][i] + 4.0 * v[1][i] - v[2][i]) * (0.5 * inv)
                } else if k == m - 1 {
                    (3.0 * v[m - 1][i] - 4.0 * v[m - 2][i] + v[m - 3][i]) * (0.5 * inv)
                } else {
                    (v[k + 1][i] - v[k - 1][i]) * (0.5 * inv)
                }
            })
            .collect()
    }

    /// Second-order second time derivative at slice `k` (one-sided at the
    /// ends).
    pub(crate) fn dtt_at(&self, k: usize) -> Vec<C64> {
        let m = self.num_times();
        let v = &self.values;
        let inv2 = 1.0 / (self.dt * self.dt);
        (0..self.grid.num_points)
            .map(|i| {
                if k == 0 {
                    (2.0 * v[0][i] - 5.0 * v[1][i] + 4.0 * v[2][i] - v[3][i]) * inv2
                } else if k == m - 1 {
                    (2.0 * v[m - 1][i] - 5.0 * v[m - 2][i] + 4.0 * v[m - 3][i] - v[m - 4][i])
                        * inv2
                } else {
                    (v[k + 1][i] - 2.0 * v[k][i] + v[k - 1][i]) * inv2
                }
            })
            .collect()
    }
}
