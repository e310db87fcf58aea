//! Differential operators, conservative Jacobians, quadrature and the
//! periodic Poisson solver.
//!
//! Two derivative families are available. The Fourier-spectral family
//! multiplies by `i k` (with the Nyquist wavenumber mapped to zero so the
//! operator stays real and skew-adjoint); the centered-difference family
//! uses second-order stencils. In both families the Laplacian is exactly
//! `divergence ∘ gradient`, so Poisson solves, projections and
//! gamma-Laplacian inversions close to round-off.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{signed_mode, Fft3};
use crate::grid::{pairwise_sum, Grid, ScalarField, VectorField, PAR_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeScheme {
    Spectral,
    CentralDifference,
}

/// Discretization of the planar Jacobian `[f, g] = ∂x f ∂y g − ∂y f ∂x g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianScheme {
    /// Nine-point stencil conserving `Σ f [f,g]` and `Σ g [f,g]` exactly.
    Arakawa,
    /// Spectral derivatives with the product truncated by the 2/3 rule.
    Spectral,
}

/// Operator family bound to one grid.
#[derive(Clone)]
pub struct Ops {
    grid: Grid,
    scheme: DerivativeScheme,
    dealias_products: bool,
    fft: Arc<Fft3>,
    /// Real derivative symbol per axis and FFT index (the operator is `i * symbol`).
    symbol: [Vec<f64>; 3],
    spectral_symbol: [Vec<f64>; 3],
    keep: [Vec<bool>; 3],
}

impl Ops {
    /// Spectral family with product dealiasing enabled.
    pub fn new(grid: Grid) -> Self {
        Self::with_scheme(grid, DerivativeScheme::Spectral, true)
    }

    pub fn with_scheme(grid: Grid, scheme: DerivativeScheme, dealias_products: bool) -> Self {
        let n = grid.shape();
        let len = grid.lengths();
        let d = grid.spacing();
        let mut symbol: [Vec<f64>; 3] = Default::default();
        let mut spectral_symbol: [Vec<f64>; 3] = Default::default();
        let mut keep: [Vec<bool>; 3] = Default::default();
        for a in 0..3 {
            let mut s = Vec::with_capacity(n[a]);
            let mut ss = Vec::with_capacity(n[a]);
            let mut kp = Vec::with_capacity(n[a]);
            for m in 0..n[a] {
                let mode = signed_mode(m, n[a]);
                let k = 2.0 * PI * mode as f64 / len[a];
                let nyquist = n[a] > 1 && 2 * m == n[a];
                let spectral = if nyquist || n[a] == 1 { 0.0 } else { k };
                let value = match scheme {
                    DerivativeScheme::Spectral => spectral,
                    DerivativeScheme::CentralDifference => {
                        if nyquist || n[a] == 1 {
                            0.0
                        } else {
                            (k * d[a]).sin() / d[a]
                        }
                    }
                };
                s.push(value);
                ss.push(spectral);
                kp.push(3 * mode.unsigned_abs() as usize <= n[a]);
            }
            symbol[a] = s;
            spectral_symbol[a] = ss;
            keep[a] = kp;
        }
        Self {
            grid,
            scheme,
            dealias_products,
            fft: Arc::new(Fft3::new(n)),
            symbol,
            spectral_symbol,
            keep,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    pub fn dealias_products(&self) -> bool {
        self.dealias_products
    }

    #[inline]
    fn mode(&self, idx: usize) -> [usize; 3] {
        let n = self.grid.shape();
        [idx % n[0], (idx / n[0]) % n[1], idx / (n[0] * n[1])]
    }

    fn active_axes(&self) -> usize {
        if self.grid.is_planar() {
            2
        } else {
            3
        }
    }

    fn forward(&self, f: &ScalarField) -> Vec<Complex64> {
        debug_assert_eq!(f.grid(), &self.grid);
        self.fft.forward(f.values())
    }

    fn inverse(&self, spec: Vec<Complex64>) -> ScalarField {
        ScalarField::from_vec(self.grid, self.fft.inverse_real(spec)).expect("size matches grid")
    }

    fn spectral_map(
        &self,
        spec: &[Complex64],
        f: impl Fn([usize; 3], Complex64) -> Complex64 + Sync,
    ) -> Vec<Complex64> {
        spec.par_iter()
            .with_min_len(PAR_THRESHOLD)
            .enumerate()
            .map(|(idx, &c)| f(self.mode(idx), c))
            .collect()
    }

    fn kept(&self, m: [usize; 3]) -> bool {
        self.keep[0][m[0]] && self.keep[1][m[1]] && self.keep[2][m[2]]
    }

    /// Derivative of a field given in spectral space along `axis` using `symbol`.
    fn spectral_derivative(
        &self,
        spec: &[Complex64],
        axis: usize,
        symbol: &[Vec<f64>; 3],
        filter: bool,
    ) -> ScalarField {
        let d = self.spectral_map(spec, |m, c| {
            if filter && !self.kept(m) {
                Complex64::default()
            } else {
                Complex64::new(0.0, symbol[axis][m[axis]]) * c
            }
        });
        self.inverse(d)
    }

    fn cd_derivative(&self, f: &ScalarField, axis: usize) -> ScalarField {
        let g = self.grid;
        let n = g.shape();
        if n[axis] == 1 {
            return ScalarField::zeros(g);
        }
        let inv2d = 1.0 / (2.0 * g.spacing()[axis]);
        let v = f.values();
        let out: Vec<f64> = (0..g.size())
            .into_par_iter()
            .with_min_len(PAR_THRESHOLD)
            .map(|idx| {
                let mut m = self.mode(idx);
                let c = m[axis];
                m[axis] = (c + 1) % n[axis];
                let plus = g.index(m[0], m[1], m[2]);
                m[axis] = (c + n[axis] - 1) % n[axis];
                let minus = g.index(m[0], m[1], m[2]);
                (v[plus] - v[minus]) * inv2d
            })
            .collect();
        ScalarField::from_vec(g, out).expect("size matches grid")
    }

    fn gradient_impl(&self, f: &ScalarField, filter: bool) -> VectorField {
        let g = self.grid;
        // Uniform fields have an exactly zero gradient; skip the transform
        // so that Casimir-kernel identities hold without round-off.
        if is_uniform(f) {
            return VectorField::zeros(g);
        }
        match self.scheme {
            DerivativeScheme::Spectral => {
                let spec = self.forward(f);
                let z = if g.is_planar() {
                    ScalarField::zeros(g)
                } else {
                    self.spectral_derivative(&spec, 2, &self.symbol, filter)
                };
                VectorField {
                    x: self.spectral_derivative(&spec, 0, &self.symbol, filter),
                    y: self.spectral_derivative(&spec, 1, &self.symbol, filter),
                    z,
                }
            }
            DerivativeScheme::CentralDifference => {
                let src = if filter { self.dealias(f) } else { f.clone() };
                VectorField {
                    x: self.cd_derivative(&src, 0),
                    y: self.cd_derivative(&src, 1),
                    z: self.cd_derivative(&src, 2),
                }
            }
        }
    }

    fn divergence_impl(&self, a: &VectorField, filter: bool) -> ScalarField {
        if a.components().iter().all(|c| is_uniform(c)) {
            return ScalarField::zeros(self.grid);
        }
        match self.scheme {
            DerivativeScheme::Spectral => {
                let comps = a.components();
                let mut acc = vec![Complex64::default(); self.grid.size()];
                for (axis, comp) in comps.iter().enumerate().take(self.active_axes()) {
                    let spec = self.forward(comp);
                    acc.par_iter_mut()
                        .with_min_len(PAR_THRESHOLD)
                        .zip(spec.par_iter())
                        .enumerate()
                        .for_each(|(idx, (acc, &c))| {
                            let m = self.mode(idx);
                            if !filter || self.kept(m) {
                                *acc += Complex64::new(0.0, self.symbol[axis][m[axis]]) * c;
                            }
                        });
                }
                self.inverse(acc)
            }
            DerivativeScheme::CentralDifference => {
                let comps: Vec<ScalarField> = a
                    .components()
                    .iter()
                    .map(|c| {
                        if filter {
                            self.dealias(c)
                        } else {
                            (*c).clone()
                        }
                    })
                    .collect();
                let mut out = self.cd_derivative(&comps[0], 0);
                out = out.add(&self.cd_derivative(&comps[1], 1));
                if !self.grid.is_planar() {
                    out = out.add(&self.cd_derivative(&comps[2], 2));
                }
                out
            }
        }
    }

    pub fn gradient(&self, f: &ScalarField) -> VectorField {
        self.gradient_impl(f, false)
    }

    /// Gradient of a nonlinear quantity: the argument is truncated by the
    /// 2/3 rule first when product dealiasing is enabled.
    pub fn gradient_nonlinear(&self, f: &ScalarField) -> VectorField {
        self.gradient_impl(f, self.dealias_products)
    }

    pub fn divergence(&self, a: &VectorField) -> ScalarField {
        self.divergence_impl(a, false)
    }

    /// Divergence of a nonlinear flux; see [`Ops::gradient_nonlinear`].
    pub fn divergence_nonlinear(&self, a: &VectorField) -> ScalarField {
        self.divergence_impl(a, self.dealias_products)
    }

    pub fn curl(&self, a: &VectorField) -> VectorField {
        let g = self.grid;
        match self.scheme {
            DerivativeScheme::Spectral => {
                let fx = self.forward(&a.x);
                let fy = self.forward(&a.y);
                let fz = self.forward(&a.z);
                let s = &self.symbol;
                let comp = |which: usize| {
                    let spec: Vec<Complex64> = (0..g.size())
                        .into_par_iter()
                        .with_min_len(PAR_THRESHOLD)
                        .map(|idx| {
                            let m = self.mode(idx);
                            let (kx, ky, kz) = (s[0][m[0]], s[1][m[1]], s[2][m[2]]);
                            let v = match which {
                                0 => ky * fz[idx] - kz * fy[idx],
                                1 => kz * fx[idx] - kx * fz[idx],
                                _ => kx * fy[idx] - ky * fx[idx],
                            };
                            Complex64::new(-v.im, v.re)
                        })
                        .collect();
                    self.inverse(spec)
                };
                VectorField {
                    x: comp(0),
                    y: comp(1),
                    z: comp(2),
                }
            }
            DerivativeScheme::CentralDifference => {
                let d = |f: &ScalarField, axis| self.cd_derivative(f, axis);
                VectorField {
                    x: d(&a.z, 1).sub(&d(&a.y, 2)),
                    y: d(&a.x, 2).sub(&d(&a.z, 0)),
                    z: d(&a.y, 0).sub(&d(&a.x, 1)),
                }
            }
        }
    }

    fn laplacian_symbol(&self, m: [usize; 3]) -> f64 {
        let s = &self.symbol;
        -(s[0][m[0]].powi(2) + s[1][m[1]].powi(2) + s[2][m[2]].powi(2))
    }

    /// `divergence(gradient(f))`, evaluated in Fourier space.
    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        let spec = self.forward(f);
        let out = self.spectral_map(&spec, |m, c| c * self.laplacian_symbol(m));
        self.inverse(out)
    }

    /// `∇·(γ ∇ψ)` with the operator family of this instance.
    pub fn gamma_laplacian(&self, psi: &ScalarField, gamma: &ScalarField) -> Result<ScalarField> {
        let min = gamma.min();
        if min < 1.0 {
            return Err(Error::GammaBelowOne { value: min });
        }
        let flux = self.gradient(psi).mul_scalar(gamma);
        Ok(self.divergence(&flux))
    }

    /// Planar Jacobian `[f, g]`.
    ///
    /// # Panics
    /// If the grid is not planar.
    pub fn jacobian(
        &self,
        f: &ScalarField,
        g: &ScalarField,
        scheme: JacobianScheme,
    ) -> ScalarField {
        assert!(self.grid.is_planar(), "jacobian requires a planar grid");
        match scheme {
            JacobianScheme::Arakawa => self.arakawa(f, g),
            JacobianScheme::Spectral => {
                let sf = self.forward(f);
                let sg = self.forward(g);
                let ss = &self.spectral_symbol;
                let fx = self.spectral_derivative(&sf, 0, ss, false);
                let fy = self.spectral_derivative(&sf, 1, ss, false);
                let gx = self.spectral_derivative(&sg, 0, ss, false);
                let gy = self.spectral_derivative(&sg, 1, ss, false);
                let prod = fx.mul(&gy).sub(&fy.mul(&gx));
                self.dealias(&prod)
            }
        }
    }

    fn arakawa(&self, f: &ScalarField, g: &ScalarField) -> ScalarField {
        let grid = self.grid;
        let (nx, ny) = (grid.nx(), grid.ny());
        let d = grid.spacing();
        let scale = 1.0 / (12.0 * d[0] * d[1]);
        let (fv, gv) = (f.values(), g.values());
        // Σ_f J++ , J+× (f,g) and J+× (g,f) = −J×+ (f,g); combining as
        // T1 + (T2 − T3) makes J(f,g) = −J(g,f) and J(f,f) = 0 bit-exactly.
        let out: Vec<f64> = (0..grid.size())
            .into_par_iter()
            .with_min_len(PAR_THRESHOLD)
            .map(|idx| {
                let i = idx % nx;
                let j = idx / nx;
                let ip = (i + 1) % nx;
                let im = (i + nx - 1) % nx;
                let jp = (j + 1) % ny;
                let jm = (j + ny - 1) % ny;
                let at = |v: &[f64], a: usize, b: usize| v[b * nx + a];
                let t1 = |a: &[f64], b: &[f64]| {
                    (at(a, ip, j) - at(a, im, j)) * (at(b, i, jp) - at(b, i, jm))
                        - (at(a, i, jp) - at(a, i, jm)) * (at(b, ip, j) - at(b, im, j))
                };
                let t2 = |a: &[f64], b: &[f64]| {
                    at(a, ip, j) * (at(b, ip, jp) - at(b, ip, jm))
                        - at(a, im, j) * (at(b, im, jp) - at(b, im, jm))
                        - at(a, i, jp) * (at(b, ip, jp) - at(b, im, jp))
                        + at(a, i, jm) * (at(b, ip, jm) - at(b, im, jm))
                };
                scale * (t1(fv, gv) + (t2(fv, gv) - t2(gv, fv)))
            })
            .collect();
        ScalarField::from_vec(grid, out).expect("size matches grid")
    }

    /// Midpoint/trapezoid quadrature with deterministic pairwise summation.
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        pairwise_sum(f.values()) * self.grid.cell_volume()
    }

    /// `∫ a b`
    pub fn inner(&self, a: &ScalarField, b: &ScalarField) -> f64 {
        self.integrate(&a.mul(b))
    }

    /// `∫ a · b` for vector fields.
    pub fn inner_vec(&self, a: &VectorField, b: &VectorField) -> f64 {
        self.integrate(&a.dot(b))
    }

    /// Solves `laplacian(ψ) = rhs` with zero-mean ψ.
    ///
    /// Components of `rhs` in the Laplacian's kernel other than the mean (the
    /// Nyquist-corner modes, on which every first derivative vanishes) carry
    /// no information for the operator and are dropped.
    pub fn poisson_solve(&self, rhs: &ScalarField) -> Result<ScalarField> {
        let norm = rhs.max_abs();
        let mean = rhs.mean();
        if mean.abs() > 1e-12 * norm {
            return Err(Error::NonZeroMean { mean, norm });
        }
        if norm == 0.0 {
            return Ok(ScalarField::zeros(self.grid));
        }
        let spec = self.forward(rhs);
        let out = self.spectral_map(&spec, |m, c| {
            let l = self.laplacian_symbol(m);
            if l == 0.0 {
                Complex64::default()
            } else {
                c / l
            }
        });
        Ok(self.inverse(out))
    }

    /// Zeroes every Fourier mode above 2/3 of the Nyquist wavenumber.
    pub fn dealias(&self, f: &ScalarField) -> ScalarField {
        let spec = self.forward(f);
        let out = self.spectral_map(&spec, |m, c| {
            if self.kept(m) {
                c
            } else {
                Complex64::default()
            }
        });
        self.inverse(out)
    }

    /// Orthogonal projection onto the range of the Laplacian: removes the
    /// mean and the Nyquist-corner modes `(−1)^(s_x i + s_y j + s_z k)`.
    pub fn remove_kernel_modes(&self, f: &ScalarField) -> ScalarField {
        let g = self.grid;
        let axes = self.active_axes();
        let mut out = f.clone();
        let n = g.size() as f64;
        for pattern in 0..(1usize << axes) {
            let sign = |idx: usize| {
                let m = self.mode(idx);
                let parity: usize = (0..axes)
                    .filter(|a| pattern & (1 << a) != 0)
                    .map(|a| m[a])
                    .sum();
                if parity.is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            };
            let weighted: Vec<f64> = out
                .values()
                .iter()
                .enumerate()
                .map(|(idx, &v)| v * sign(idx))
                .collect();
            let coeff = pairwise_sum(&weighted) / n;
            if coeff != 0.0 {
                for (idx, v) in out.values_mut().iter_mut().enumerate() {
                    *v -= coeff * sign(idx);
                }
            }
        }
        out
    }
}

fn is_uniform(f: &ScalarField) -> bool {
    let v = f.values();
    v.iter().all(|&x| x == v[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: &ScalarField, b: &ScalarField) -> f64 {
        a.sub(b).max_abs() / b.max_abs().max(1e-300)
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = Grid::periodic_3d(16).unwrap();
        let ops = Ops::new(g);
        let grad = ops.gradient(&ScalarField::constant(g, 3.7));
        assert!(grad.max_magnitude() < 1e-14);
    }

    #[test]
    fn single_mode_derivative_is_exact() {
        let g = Grid::new_2d(16, 8, 3.0, 2.0).unwrap();
        let ops = Ops::new(g);
        let k = 2.0 * PI / 3.0;
        let f = ScalarField::from_fn(g, |x, _, _| (k * x).sin());
        let expect = ScalarField::from_fn(g, |x, _, _| k * (k * x).cos());
        let grad = ops.gradient(&f);
        assert!(rel_err(&grad.x, &expect) < 1e-12);
        assert!(grad.y.max_abs() < 1e-13);
    }

    #[test]
    fn divergence_of_sine_field() {
        let g = Grid::periodic_3d(16).unwrap();
        let ops = Ops::new(g);
        let a = VectorField::from_fn(g, |x, _, _| [x.sin(), 0.0, 0.0]);
        let expect = ScalarField::from_fn(g, |x, _, _| x.cos());
        assert!(rel_err(&ops.divergence(&a), &expect) < 1e-12);
        let b = VectorField::from_fn(g, |_, y, z| [y.sin() * z.cos(), 0.0, 0.0]);
        assert!(ops.divergence(&b).max_abs() < 1e-13);
    }

    #[test]
    fn curl_of_single_mode() {
        let g = Grid::periodic_3d(16).unwrap();
        let ops = Ops::new(g);
        let a = VectorField::from_fn(g, |x, _, _| [0.0, 0.0, x.sin()]);
        let c = ops.curl(&a);
        let expect = ScalarField::from_fn(g, |x, _, _| -x.cos());
        assert!(c.x.max_abs() < 1e-13);
        assert!(rel_err(&c.y, &expect) < 1e-12);
        assert!(c.z.max_abs() < 1e-13);
    }

    #[test]
    fn gamma_laplacian_reduces_to_laplacian() {
        let g = Grid::periodic_2d(16).unwrap();
        let ops = Ops::new(g);
        let psi = ScalarField::from_fn(g, |x, y, _| x.sin() * y.sin());
        let one = ScalarField::constant(g, 1.0);
        let out = ops.gamma_laplacian(&psi, &one).unwrap();
        assert!(rel_err(&out, &psi.scale(-2.0)) < 1e-12);
        let c = ScalarField::constant(g, 2.0);
        let gamma = ScalarField::from_fn(g, |x, _, _| 1.0 + 0.3 * x.cos().powi(2));
        assert!(ops.gamma_laplacian(&c, &gamma).unwrap().max_abs() < 1e-13);
        let bad = ScalarField::constant(g, 0.99);
        assert!(matches!(
            ops.gamma_laplacian(&psi, &bad),
            Err(Error::GammaBelowOne { .. })
        ));
    }

    #[test]
    fn jacobian_of_sines() {
        let g = Grid::periodic_2d(32).unwrap();
        let ops = Ops::new(g);
        let f = ScalarField::from_fn(g, |x, _, _| x.sin());
        let h = ScalarField::from_fn(g, |_, y, _| y.sin());
        let expect = ScalarField::from_fn(g, |x, y, _| x.cos() * y.cos());
        let spec = ops.jacobian(&f, &h, JacobianScheme::Spectral);
        assert!(rel_err(&spec, &expect) < 1e-12);
        // second-order truncation: sin(dx)/dx factors per axis
        let ara = ops.jacobian(&f, &h, JacobianScheme::Arakawa);
        let dx = 2.0 * PI / 32.0;
        assert!(rel_err(&ara, &expect) < 2.0 * dx * dx / 6.0 + 1e-12);
        assert!(rel_err(&ara, &expect) > 1e-4);
    }

    #[test]
    fn jacobian_is_antisymmetric_bitwise() {
        let g = Grid::periodic_2d(16).unwrap();
        let ops = Ops::new(g);
        let f = ScalarField::from_fn(g, |x, y, _| (x + 2.0 * y).sin() + 0.3 * (3.0 * x).cos());
        let h = ScalarField::from_fn(g, |x, y, _| (x * y).cos());
        for scheme in [JacobianScheme::Arakawa, JacobianScheme::Spectral] {
            let a = ops.jacobian(&f, &h, scheme);
            let b = ops.jacobian(&h, &f, scheme);
            assert_eq!(a, b.scale(-1.0));
            assert_eq!(ops.jacobian(&f, &f, scheme).max_abs(), 0.0);
        }
    }

    #[test]
    fn quadrature_values() {
        let g = Grid::periodic_2d(32).unwrap();
        let ops = Ops::new(g);
        let area = 4.0 * PI * PI;
        assert!((ops.integrate(&ScalarField::constant(g, 1.0)) - area).abs() < 1e-12 * area);
        let s = ScalarField::from_fn(g, |x, _, _| x.sin());
        assert!(ops.integrate(&s).abs() < 1e-12);
        let s2 = ScalarField::from_fn(g, |x, y, _| x.sin().powi(2) * y.sin().powi(2));
        assert!((ops.integrate(&s2) - PI * PI).abs() < 1e-10);
    }

    #[test]
    fn poisson_solve_eigenfunction_and_errors() {
        let g = Grid::periodic_2d(16).unwrap();
        let ops = Ops::new(g);
        let rhs = ScalarField::from_fn(g, |x, y, _| -2.0 * x.sin() * y.sin());
        let expect = ScalarField::from_fn(g, |x, y, _| x.sin() * y.sin());
        assert!(rel_err(&ops.poisson_solve(&rhs).unwrap(), &expect) < 1e-12);
        assert_eq!(
            ops.poisson_solve(&ScalarField::zeros(g)).unwrap().max_abs(),
            0.0
        );
        let biased = rhs.map(|v| v + 0.1);
        assert!(matches!(
            ops.poisson_solve(&biased),
            Err(Error::NonZeroMean { .. })
        ));
    }

    #[test]
    fn dealias_keeps_low_and_drops_high_modes() {
        let g = Grid::periodic_2d(24).unwrap();
        let ops = Ops::new(g);
        // cutoff is |m| <= 8 on n = 24
        let low = ScalarField::from_fn(g, |x, y, _| (8.0 * x).cos() + (3.0 * y).sin());
        assert!(rel_err(&ops.dealias(&low), &low) < 1e-12);
        let high = ScalarField::from_fn(g, |x, _, _| (9.0 * x).sin());
        assert!(ops.dealias(&high).max_abs() < 1e-13);
        let mixed = low.add(&high);
        let once = ops.dealias(&mixed);
        assert!(ops.dealias(&once).sub(&once).max_abs() < 1e-13);
    }

    #[test]
    fn centered_difference_family() {
        let g = Grid::periodic_2d(32).unwrap();
        let ops = Ops::with_scheme(g, DerivativeScheme::CentralDifference, false);
        let f = ScalarField::from_fn(g, |x, y, _| x.sin() * y.cos());
        let grad = ops.gradient(&f);
        let dx = 2.0 * PI / 32.0;
        let expect = ScalarField::from_fn(g, |x, y, _| dx.sin() / dx * x.cos() * y.cos());
        assert!(rel_err(&grad.x, &expect) < 1e-12);
        // Laplacian equals divergence of gradient
        let lap = ops.laplacian(&f);
        assert!(rel_err(&lap, &ops.divergence(&grad)) < 1e-12);
        // poisson solve inverts it
        let back = ops.poisson_solve(&lap).unwrap();
        assert!(rel_err(&back, &f) < 1e-10);
    }

    #[test]
    fn kernel_projection_removes_corner_modes_only() {
        let g = Grid::periodic_2d(16).unwrap();
        let ops = Ops::new(g);
        let smooth = ScalarField::from_fn(g, |x, y, _| (x + y).sin());
        let checker = ScalarField::from_fn(g, |x, y, _| {
            let (i, j) = (
                (x * 16.0 / (2.0 * PI)).round() as i64,
                (y * 16.0 / (2.0 * PI)).round() as i64,
            );
            if (i + j) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        });
        let mixed = smooth.add(&checker).map(|v| v + 0.5);
        let out = ops.remove_kernel_modes(&mixed);
        assert!(rel_err(&out, &smooth) < 1e-13);
    }
}
