//! Initial-condition presets.
//!
//! Random presets draw one coefficient per integer wavevector with
//! `|m_i| ≤ kcut`, visiting wavevectors in a fixed order. The same seed
//! therefore yields the same continuous field on every grid that resolves
//! `kcut`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::{Grid, ScalarField, VectorField};
use crate::ops::Ops;

/// `Ψ = a sin(2πx/lx) sin(2πy/ly)`
pub fn taylor_green(grid: Grid, amplitude: f64) -> ScalarField {
    let [lx, ly, _] = grid.lengths();
    ScalarField::from_fn(grid, |x, y, _| {
        amplitude * (2.0 * PI * x / lx).sin() * (2.0 * PI * y / ly).sin()
    })
}

/// `Ψ = a cos(2πx/lx)`, a steady shear flow.
pub fn shear(grid: Grid, amplitude: f64) -> ScalarField {
    let lx = grid.lengths()[0];
    ScalarField::from_fn(grid, |x, _, _| amplitude * (2.0 * PI * x / lx).cos())
}

/// Arnold–Beltrami–Childress field `a (sin z + cos y, sin x + cos z, sin y + cos x)`
/// on the periodic box (coordinates scaled to `[0, 2π)`).
pub fn abc(grid: Grid, amplitude: f64) -> VectorField {
    let [lx, ly, lz] = grid.lengths();
    VectorField::from_fn(grid, |x, y, z| {
        let (x, y, z) = (2.0 * PI * x / lx, 2.0 * PI * y / ly, 2.0 * PI * z / lz);
        [
            amplitude * (z.sin() + y.cos()),
            amplitude * (x.sin() + z.cos()),
            amplitude * (y.sin() + x.cos()),
        ]
    })
}

/// Settings of the random band-limited presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpectrum {
    pub seed: u64,
    /// Peak wavenumber (in units of the fundamental).
    pub k0: f64,
    /// Largest integer wavenumber per axis that receives energy.
    pub kcut: usize,
}

impl RandomSpectrum {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            k0: 3.0,
            kcut: 8,
        }
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        for (axis, &n) in grid.shape().iter().enumerate() {
            if n > 1 && 2 * self.kcut >= n {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} with {n} cells cannot resolve random modes up to kcut = {}",
                    self.kcut
                )));
            }
        }
        Ok(())
    }
}

/// Fills Fourier coefficients of `ncomp` fields. `amp(m)` returns the
/// coefficient vector of integer wavevector `m` given uniform draws in
/// `[-1, 1]²` per component.
fn synthesize(
    grid: Grid,
    spec: &RandomSpectrum,
    ncomp: usize,
    amp: impl Fn([i64; 3], &mut [Complex64]),
) -> Result<Vec<ScalarField>> {
    spec.check(&grid)?;
    let n = grid.shape();
    let kc = spec.kcut as i64;
    let zrange = if grid.is_planar() { 0..=0 } else { -kc..=kc };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut coeffs = vec![vec![Complex64::default(); grid.size()]; ncomp];
    let mut draw = vec![Complex64::default(); ncomp];
    for mz in zrange {
        for my in -kc..=kc {
            for mx in -kc..=kc {
                for d in draw.iter_mut() {
                    *d = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                }
                let m = [mx, my, mz];
                amp(m, &mut draw);
                let wrap = |v: i64, len: usize| v.rem_euclid(len as i64) as usize;
                let idx = grid.index(wrap(mx, n[0]), wrap(my, n[1]), wrap(mz, n[2]));
                for (c, d) in coeffs.iter_mut().zip(&draw) {
                    c[idx] = *d;
                }
            }
        }
    }
    let fft = Fft3::new(n);
    coeffs
        .into_iter()
        .map(|c| {
            // inverse_real divides by N; undo so coefficients are amplitudes
            let scale = grid.size() as f64;
            let data = fft.inverse_real(c).into_iter().map(|v| v * scale).collect();
            ScalarField::from_vec(grid, data)
        })
        .collect()
}

fn wavenumber(grid: &Grid, m: [i64; 3]) -> [f64; 3] {
    let len = grid.lengths();
    [
        2.0 * PI * m[0] as f64 / len[0],
        2.0 * PI * m[1] as f64 / len[1],
        2.0 * PI * m[2] as f64 / len[2],
    ]
}

/// Random planar stream function whose velocity has a Gaussian spectrum
/// around `k0`, scaled so that `max|∇Ψ| = max_speed`.
pub fn random_stream_function(
    ops: &Ops,
    spec: &RandomSpectrum,
    max_speed: f64,
) -> Result<ScalarField> {
    let grid = *ops.grid();
    let fundamental = 2.0 * PI / grid.lengths()[0];
    let fields = synthesize(grid, spec, 1, |m, c| {
        let k = wavenumber(&grid, m);
        let kmag = (k[0] * k[0] + k[1] * k[1]).sqrt();
        c[0] = if kmag == 0.0 {
            Complex64::default()
        } else {
            let kr = kmag / (spec.k0 * fundamental);
            c[0] * ((-0.5 * kr * kr).exp() / kmag)
        };
    })?;
    let psi = &fields[0];
    let mean = psi.mean();
    let psi = psi.map(|x| x - mean);
    let speed = ops.gradient(&psi).max_magnitude();
    Ok(psi.scale(max_speed / speed))
}

/// Random solenoidal velocity with spectrum `∝ k² exp(−(k/k0)²)`, scaled so
/// that `max|v| = max_speed`.
pub fn random_solenoidal_velocity(
    grid: Grid,
    spec: &RandomSpectrum,
    max_speed: f64,
) -> Result<VectorField> {
    let fundamental = 2.0 * PI / grid.lengths()[0];
    let fields = synthesize(grid, spec, 3, |m, c| {
        let k = wavenumber(&grid, m);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            c.iter_mut().for_each(|x| *x = Complex64::default());
            return;
        }
        let kr = k2.sqrt() / (spec.k0 * fundamental);
        let weight = (-0.5 * kr * kr).exp();
        let dot = (c[0] * k[0] + c[1] * k[1] + c[2] * k[2]) / k2;
        for a in 0..3 {
            c[a] = (c[a] - dot * k[a]) * weight;
        }
    })?;
    let [x, y, z]: [ScalarField; 3] = fields.try_into().expect("three components");
    let v = VectorField::new(x, y, z)?;
    let vmax = v.max_magnitude();
    Ok(v.scale(max_speed / vmax))
}

/// Smooth zero-mean random scalar with modes up to `spec.kcut`, scaled so
/// that `max|f| = amplitude`.
pub fn random_scalar(grid: Grid, spec: &RandomSpectrum, amplitude: f64) -> Result<ScalarField> {
    let fields = synthesize(grid, spec, 1, |m, c| {
        if m == [0, 0, 0] {
            c[0] = Complex64::default();
        }
    })?;
    let f = &fields[0];
    let mean = f.mean();
    let f = f.map(|x| x - mean);
    let max = f.max_abs();
    Ok(f.scale(amplitude / max))
}

/// Eddy turnover time `1/ω_rms` of a planar flow with vorticity `−q`.
pub fn eddy_turnover_time(q: &ScalarField) -> f64 {
    1.0 / q.rms()
}
