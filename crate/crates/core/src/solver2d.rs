//! Planar stream-function dynamics `∂t q = [Ψ, q]`, `∂t s = [Ψ, s]` with
//! `q = Δ_γΨ = ∇·(γ∇Ψ)` and `v = ∇Ψ × ẑ`.
//!
//! `q` is the prognostic field; `Ψ` is recovered from it with a Picard
//! iteration on the γ-Laplacian at every Runge–Kutta stage.

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::ops::{JacobianScheme, Ops};
use crate::relativity::PhysicalConstants;

/// Density `s = γϱ₀` of a planar state.
#[derive(Debug, Clone, PartialEq)]
pub enum Density2D {
    Constant(f64),
    Field(ScalarField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct State2D {
    pub q: ScalarField,
    pub psi: ScalarField,
    pub density: Density2D,
}

impl State2D {
    /// The constant density `k`, if the state is in constant-density mode.
    pub fn constant_density(&self) -> Option<f64> {
        match self.density {
            Density2D::Constant(k) => Some(k),
            Density2D::Field(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverterSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InverterSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Outcome of a γ-Laplacian inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub psi: ScalarField,
    pub iterations: usize,
    /// `‖Δ_γΨ − q‖∞ / ‖q‖∞`
    pub residual: f64,
}

pub struct Solver2D {
    ops: Ops,
    /// `None` selects the exact γ ≡ 1 dynamics.
    consts: Option<PhysicalConstants>,
    scheme: JacobianScheme,
    inverter: InverterSettings,
}

impl Solver2D {
    /// # Panics
    /// If the grid of `ops` is not planar.
    pub fn new(ops: Ops, consts: Option<PhysicalConstants>, scheme: JacobianScheme) -> Self {
        assert!(ops.grid().is_planar(), "2D solver needs a planar grid");
        Self {
            ops,
            consts,
            scheme,
            inverter: InverterSettings::default(),
        }
    }

    pub fn with_inverter(mut self, inverter: InverterSettings) -> Self {
        self.inverter = inverter;
        self
    }

    pub fn ops(&self) -> &Ops {
        &self.ops
    }

    pub fn constants(&self) -> Option<&PhysicalConstants> {
        self.consts.as_ref()
    }

    pub fn scheme(&self) -> JacobianScheme {
        self.scheme
    }

    pub fn inverter(&self) -> InverterSettings {
        self.inverter
    }

    /// `γ(∇Ψ) = 1/√(1 − |∇Ψ|²/c²)`, or ones in the γ ≡ 1 mode.
    pub fn gamma(&self, psi: &ScalarField) -> Result<ScalarField> {
        let g = *psi.grid();
        match &self.consts {
            None => Ok(ScalarField::constant(g, 1.0)),
            Some(k) => {
                let grad = self.ops.gradient(psi);
                k.check_speed(grad.max_magnitude())?;
                let c2 = k.c * k.c;
                Ok(grad.dot(&grad).map(|w| 1.0 / (1.0 - w / c2).sqrt()))
            }
        }
    }

    /// `Δ_γΨ` with `γ = γ(∇Ψ)`.
    pub fn gamma_laplacian(&self, psi: &ScalarField) -> Result<ScalarField> {
        let gamma = self.gamma(psi)?;
        self.ops.gamma_laplacian(psi, &gamma)
    }

    pub fn invert_gamma_laplacian(&self, q: &ScalarField) -> Result<ScalarField> {
        Ok(self.invert(q, None)?.psi)
    }

    /// Picard iteration `Ψⁿ⁺¹ = Δ⁻¹(q − ∇·((γ(∇Ψⁿ) − 1)∇Ψⁿ))` starting
    /// from `guess` or from `Δ⁻¹q`.
    pub fn invert(&self, q: &ScalarField, guess: Option<&ScalarField>) -> Result<Inversion> {
        let ops = &self.ops;
        let qnorm = q.max_abs();
        if qnorm == 0.0 {
            return Ok(Inversion {
                psi: ScalarField::zeros(*q.grid()),
                iterations: 0,
                residual: 0.0,
            });
        }
        let Some(consts) = &self.consts else {
            let psi = ops.poisson_solve(q)?;
            let residual = ops.laplacian(&psi).sub(q).max_abs() / qnorm;
            return Ok(Inversion {
                psi,
                iterations: 0,
                residual,
            });
        };
        let c2 = consts.c * consts.c;
        let mut psi = match guess {
            Some(g) => g.clone(),
            None => ops.poisson_solve(q)?,
        };
        let mut iterations = 0;
        loop {
            let grad = ops.gradient(&psi);
            consts.check_speed(grad.max_magnitude())?;
            let excess = grad.dot(&grad).map(|w| 1.0 / (1.0 - w / c2).sqrt() - 1.0);
            let correction = ops.divergence(&grad.mul_scalar(&excess));
            let residual = ops.laplacian(&psi).add(&correction).sub(q).max_abs() / qnorm;
            if residual <= self.inverter.tol {
                return Ok(Inversion {
                    psi,
                    iterations,
                    residual,
                });
            }
            if iterations == self.inverter.max_iter || !residual.is_finite() {
                return Err(Error::InverterDiverged {
                    iterations,
                    residual,
                });
            }
            psi = ops.poisson_solve(&q.sub(&correction))?;
            iterations += 1;
        }
    }

    /// Solves the linear problem `∇·(γ∇φ) = g` for a fixed coefficient field.
    pub fn invert_linear(&self, g: &ScalarField, gamma: &ScalarField) -> Result<ScalarField> {
        let ops = &self.ops;
        let gnorm = g.max_abs();
        if gnorm == 0.0 {
            return Ok(ScalarField::zeros(*g.grid()));
        }
        let excess = gamma.map(|x| x - 1.0);
        let mut phi = ops.poisson_solve(g)?;
        for iterations in 0..=self.inverter.max_iter {
            let correction = ops.divergence(&ops.gradient(&phi).mul_scalar(&excess));
            let residual = ops.laplacian(&phi).add(&correction).sub(g).max_abs() / gnorm;
            if residual <= self.inverter.tol {
                return Ok(phi);
            }
            if iterations == self.inverter.max_iter || !residual.is_finite() {
                return Err(Error::InverterDiverged {
                    iterations,
                    residual,
                });
            }
            phi = ops.poisson_solve(&g.sub(&correction))?;
        }
        unreachable!("loop returns on its last iteration")
    }

    /// Builds a consistent state from a stream function: removes its mean
    /// and sets `q = Δ_γΨ`.
    pub fn state_from_psi(&self, psi: &ScalarField, density: Density2D) -> Result<State2D> {
        let mean = psi.mean();
        let psi = psi.map(|x| x - mean);
        let q = self.gamma_laplacian(&psi)?;
        let state = State2D { q, psi, density };
        self.check_density(&state)?;
        Ok(state)
    }

    fn check_density(&self, state: &State2D) -> Result<()> {
        let min = match &state.density {
            Density2D::Constant(k) => *k,
            Density2D::Field(s) => {
                s.ensure_finite("s")?;
                s.min()
            }
        };
        if min > 0.0 {
            Ok(())
        } else {
            Err(Error::NonPositiveDensity { value: min })
        }
    }

    /// `∂t q = [Ψ, q]`, restricted to the range of the Laplacian.
    pub fn rhs_q(&self, state: &State2D) -> ScalarField {
        let j = self.ops.jacobian(&state.psi, &state.q, self.scheme);
        self.ops.remove_kernel_modes(&j)
    }

    /// `∂t s = [Ψ, s]`; `None` in constant-density mode.
    pub fn rhs_density(&self, state: &State2D) -> Option<ScalarField> {
        match &state.density {
            Density2D::Constant(_) => None,
            Density2D::Field(s) => Some(self.ops.jacobian(&state.psi, s, self.scheme)),
        }
    }

    fn stage(
        &self,
        base: &State2D,
        dt: f64,
        dq: &ScalarField,
        ds: Option<&ScalarField>,
        guess: &ScalarField,
    ) -> Result<State2D> {
        let q = base.q.axpy(dt, dq);
        let density = match (&base.density, ds) {
            (Density2D::Field(s), Some(ds)) => Density2D::Field(s.axpy(dt, ds)),
            (d, _) => d.clone(),
        };
        let psi = self.invert(&q, Some(guess))?.psi;
        let state = State2D { q, psi, density };
        self.check_density(&state)?;
        Ok(state)
    }

    /// Classical RK4 on `q` (and `s`), reconstructing `Ψ` at every stage.
    pub fn step_rk4(&self, state: &State2D, dt: f64) -> Result<State2D> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidStep(format!("dt must be positive, got {dt}")));
        }
        let k1 = (self.rhs_q(state), self.rhs_density(state));
        let s2 = self.stage(state, 0.5 * dt, &k1.0, k1.1.as_ref(), &state.psi)?;
        let k2 = (self.rhs_q(&s2), self.rhs_density(&s2));
        let s3 = self.stage(state, 0.5 * dt, &k2.0, k2.1.as_ref(), &s2.psi)?;
        let k3 = (self.rhs_q(&s3), self.rhs_density(&s3));
        let s4 = self.stage(state, dt, &k3.0, k3.1.as_ref(), &s3.psi)?;
        let k4 = (self.rhs_q(&s4), self.rhs_density(&s4));
        let dq = k1.0.axpy(2.0, &k2.0).axpy(2.0, &k3.0).add(&k4.0);
        let ds = match (k1.1, k2.1, k3.1, k4.1) {
            (Some(a), Some(b), Some(c), Some(d)) => Some(a.axpy(2.0, &b).axpy(2.0, &c).add(&d)),
            _ => None,
        };
        self.stage(state, dt / 6.0, &dq, ds.as_ref(), &s4.psi)
    }

    /// `max |∇Ψ|`, the maximum flow speed.
    pub fn max_speed(&self, state: &State2D) -> f64 {
        self.ops.gradient(&state.psi).max_magnitude()
    }

    /// `cfl · min Δx / max|∇Ψ|`
    pub fn cfl_dt(&self, state: &State2D, cfl: f64) -> f64 {
        let vmax = self.max_speed(state);
        if vmax == 0.0 {
            f64::INFINITY
        } else {
            cfl * self.ops.grid().min_spacing() / vmax
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn solver(n: usize, c: Option<f64>) -> Solver2D {
        let g = Grid::periodic_2d(n).unwrap();
        Solver2D::new(
            Ops::new(g),
            c.map(|c| PhysicalConstants::with_c(c).unwrap()),
            JacobianScheme::Arakawa,
        )
    }

    #[test]
    fn classical_eigenfunction_inversion() {
        let sv = solver(16, Some(1e9));
        let g = *sv.ops().grid();
        let q = ScalarField::from_fn(g, |x, y, _| -2.0 * x.sin() * y.sin());
        let psi = sv.invert_gamma_laplacian(&q).unwrap();
        let expect = ScalarField::from_fn(g, |x, y, _| x.sin() * y.sin());
        assert!(psi.sub(&expect).max_abs() < 1e-9);
        let zero = sv.invert_gamma_laplacian(&ScalarField::zeros(g)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn round_trip_recovers_stream_function() {
        let g = Grid::periodic_2d(32).unwrap();
        let probe = Solver2D::new(Ops::new(g), None, JacobianScheme::Arakawa);
        let psi = ScalarField::from_fn(g, |x, y, _| {
            0.4 * (x + 0.3).sin() * (2.0 * y).cos() + 0.2 * (3.0 * x - y).cos()
        });
        let vmax = probe.ops().gradient(&psi).max_magnitude();
        let sv = Solver2D::new(
            Ops::new(g),
            Some(PhysicalConstants::with_c(5.0 * vmax).unwrap()),
            JacobianScheme::Arakawa,
        );
        let q = sv.gamma_laplacian(&psi).unwrap();
        let inv = sv.invert(&q, None).unwrap();
        assert!(inv.residual <= 1e-10);
        assert!(inv.psi.sub(&psi).max_abs() <= 1e-9 * psi.max_abs());
    }

    #[test]
    fn superluminal_iterate_is_reported() {
        let sv = solver(16, Some(0.5));
        let g = *sv.ops().grid();
        let q = ScalarField::from_fn(g, |x, y, _| -2.0 * x.sin() * y.sin());
        assert!(matches!(
            sv.invert_gamma_laplacian(&q),
            Err(Error::SuperluminalVelocity { .. })
        ));
    }

    #[test]
    fn shear_flow_is_steady() {
        let sv = solver(16, Some(10.0));
        let g = *sv.ops().grid();
        let psi = ScalarField::from_fn(g, |x, _, _| x.cos());
        let st = sv.state_from_psi(&psi, Density2D::Constant(1.0)).unwrap();
        assert!(sv.rhs_q(&st).max_abs() < 1e-13);
        let mut cur = st.clone();
        for _ in 0..100 {
            cur = sv.step_rk4(&cur, 0.05).unwrap();
        }
        assert!(cur.psi.sub(&st.psi).max_abs() < 1e-10);
    }

    #[test]
    fn classical_taylor_green_is_steady() {
        let sv = solver(16, None);
        let g = *sv.ops().grid();
        let psi = ScalarField::from_fn(g, |x, y, _| x.sin() * y.sin());
        let st = sv.state_from_psi(&psi, Density2D::Constant(1.0)).unwrap();
        assert!(st.q.add(&psi.scale(2.0)).max_abs() < 1e-13);
        let next = sv.step_rk4(&st, 0.1).unwrap();
        assert!(next.psi.sub(&st.psi).max_abs() < 1e-12);
    }

    #[test]
    fn density_rhs() {
        let sv = solver(16, Some(10.0));
        let g = *sv.ops().grid();
        let psi = ScalarField::from_fn(g, |x, y, _| (x + y).sin());
        let st = sv
            .state_from_psi(&psi, Density2D::Field(ScalarField::constant(g, 2.0)))
            .unwrap();
        assert!(sv.rhs_density(&st).unwrap().max_abs() < 1e-14);
        let same = State2D {
            density: Density2D::Field(st.psi.clone()),
            ..st.clone()
        };
        assert_eq!(sv.rhs_density(&same).unwrap().max_abs(), 0.0);
        let k = sv.state_from_psi(&psi, Density2D::Constant(1.0)).unwrap();
        assert!(sv.rhs_density(&k).is_none());
    }

    #[test]
    fn nonpositive_density_is_rejected() {
        let sv = solver(16, Some(10.0));
        let g = *sv.ops().grid();
        let psi = ScalarField::zeros(g);
        assert!(sv.state_from_psi(&psi, Density2D::Constant(0.0)).is_err());
    }
}
