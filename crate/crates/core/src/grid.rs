//! Periodic structured grids and the fields that live on them.
//!
//! Planar (2D) grids are stored as 3D grids with a single layer in z and
//! unit depth, so every operator works on one layout. Samples are row-major
//! with x varying fastest: `index = (k * ny + j) * nx + i`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Below this many samples pointwise kernels stay sequential.
pub(crate) const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: [usize; 3],
    len: [f64; 3],
}

impl Grid {
    /// Planar periodic grid on `[0, lx) x [0, ly)`.
    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        check_axis("nx", nx, "lx", lx)?;
        check_axis("ny", ny, "ly", ly)?;
        Ok(Self {
            n: [nx, ny, 1],
            len: [lx, ly, 1.0],
        })
    }

    pub fn new_3d(nx: usize, ny: usize, nz: usize, lx: f64, ly: f64, lz: f64) -> Result<Self> {
        check_axis("nx", nx, "lx", lx)?;
        check_axis("ny", ny, "ly", ly)?;
        check_axis("nz", nz, "lz", lz)?;
        Ok(Self {
            n: [nx, ny, nz],
            len: [lx, ly, lz],
        })
    }

    /// Square planar grid of side `2π`.
    pub fn periodic_2d(n: usize) -> Result<Self> {
        Self::new_2d(n, n, 2.0 * PI, 2.0 * PI)
    }

    /// Cubic grid of side `2π`.
    pub fn periodic_3d(n: usize) -> Result<Self> {
        Self::new_3d(n, n, n, 2.0 * PI, 2.0 * PI, 2.0 * PI)
    }

    pub fn is_planar(&self) -> bool {
        self.n[2] == 1
    }

    pub fn shape(&self) -> [usize; 3] {
        self.n
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.len
    }

    pub fn nx(&self) -> usize {
        self.n[0]
    }
    pub fn ny(&self) -> usize {
        self.n[1]
    }
    pub fn nz(&self) -> usize {
        self.n[2]
    }

    pub fn spacing(&self) -> [f64; 3] {
        [
            self.len[0] / self.n[0] as f64,
            self.len[1] / self.n[1] as f64,
            self.len[2] / self.n[2] as f64,
        ]
    }

    /// Smallest spacing over the resolved axes.
    pub fn min_spacing(&self) -> f64 {
        let d = self.spacing();
        let axes = if self.is_planar() { 2 } else { 3 };
        d[..axes].iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        let d = self.spacing();
        d[0] * d[1] * d[2]
    }

    /// Domain area (planar) or volume.
    pub fn volume(&self) -> f64 {
        self.len[0] * self.len[1] * self.len[2]
    }

    pub fn size(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n[1] + j) * self.n[0] + i
    }

    /// Node coordinates of linear index `idx`.
    #[inline]
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let i = idx % self.n[0];
        let j = (idx / self.n[0]) % self.n[1];
        let k = idx / (self.n[0] * self.n[1]);
        let d = self.spacing();
        let z = if self.is_planar() {
            0.0
        } else {
            k as f64 * d[2]
        };
        [i as f64 * d[0], j as f64 * d[1], z]
    }
}

fn check_axis(nname: &str, n: usize, lname: &str, l: f64) -> Result<()> {
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "{nname} = {n} must be even and at least 8"
        )));
    }
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "{lname} = {l} must be positive"
        )));
    }
    Ok(())
}

/// Real samples at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            data: vec![value; grid.size()],
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.size() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, data })
    }

    /// Samples `f(x, y, z)` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> f64 + Sync) -> Self {
        let data = (0..grid.size())
            .into_par_iter()
            .with_min_len(PAR_THRESHOLD)
            .map(|idx| {
                let [x, y, z] = grid.coords(idx);
                f(x, y, z)
            })
            .collect();
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> Self {
        let data = if self.data.len() >= PAR_THRESHOLD {
            self.data.par_iter().map(|&v| f(v)).collect()
        } else {
            self.data.iter().map(|&v| f(v)).collect()
        };
        Self {
            grid: self.grid,
            data,
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Self {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        let data = if self.data.len() >= PAR_THRESHOLD {
            self.data
                .par_iter()
                .zip(other.data.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect()
        } else {
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect()
        };
        Self {
            grid: self.grid,
            data,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    /// `self + factor * other`
    pub fn axpy(&self, factor: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + factor * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Arithmetic mean of the samples (pairwise summation).
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.data) / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, name: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(name))
        }
    }

    /// Root-mean-square of the samples.
    pub fn rms(&self) -> f64 {
        let sq: Vec<f64> = self.data.iter().map(|v| v * v).collect();
        (pairwise_sum(&sq) / sq.len() as f64).sqrt()
    }
}

/// Three Cartesian components on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
    pub z: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField, z: ScalarField) -> Result<Self> {
        if x.grid != y.grid || x.grid != z.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self { x, y, z })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
            z: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> [f64; 3] + Sync) -> Self {
        Self {
            x: ScalarField::from_fn(grid, |x, y, z| f(x, y, z)[0]),
            y: ScalarField::from_fn(grid, |x, y, z| f(x, y, z)[1]),
            z: ScalarField::from_fn(grid, |x, y, z| f(x, y, z)[2]),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn components(&self) -> [&ScalarField; 3] {
        [&self.x, &self.y, &self.z]
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            x: f(&self.x),
            y: f(&self.y),
            z: f(&self.z),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            x: self.x.add(&o.x),
            y: self.y.add(&o.y),
            z: self.z.add(&o.z),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            x: self.x.sub(&o.x),
            y: self.y.sub(&o.y),
            z: self.z.sub(&o.z),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map_components(|c| c.scale(factor))
    }

    pub fn axpy(&self, factor: f64, o: &Self) -> Self {
        Self {
            x: self.x.axpy(factor, &o.x),
            y: self.y.axpy(factor, &o.y),
            z: self.z.axpy(factor, &o.z),
        }
    }

    /// Multiplies every component pointwise by `s`.
    pub fn mul_scalar(&self, s: &ScalarField) -> Self {
        self.map_components(|c| c.mul(s))
    }

    pub fn dot(&self, o: &Self) -> ScalarField {
        let xy = self.x.zip_map(&o.x, |a, b| a * b);
        let xy = xy.add(&self.y.mul(&o.y));
        xy.add(&self.z.mul(&o.z))
    }

    pub fn cross(&self, o: &Self) -> Self {
        let n = self.grid().size();
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let (a, b) = (self, o);
        let (ax, ay, az) = (a.x.values(), a.y.values(), a.z.values());
        let (bx, by, bz) = (b.x.values(), b.y.values(), b.z.values());
        let [ox, oy, oz] = &mut out;
        for i in 0..n {
            ox[i] = ay[i] * bz[i] - az[i] * by[i];
            oy[i] = az[i] * bx[i] - ax[i] * bz[i];
            oz[i] = ax[i] * by[i] - ay[i] * bx[i];
        }
        let g = *self.grid();
        let [ox, oy, oz] = out;
        Self {
            x: ScalarField { grid: g, data: ox },
            y: ScalarField { grid: g, data: oy },
            z: ScalarField { grid: g, data: oz },
        }
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> ScalarField {
        self.dot(self).map(f64::sqrt)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude().max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Deterministic pairwise (cascade) summation.
///
/// The split points depend only on the slice length, so the result is
/// reproducible bit-for-bit regardless of thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 128;
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        acc
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}
