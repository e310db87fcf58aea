//! Scalar functionals, constraint residuals and the γ-baroclinic source
//! terms of the helicity and enstrophy budgets.

use crate::error::Result;
use crate::grid::{ScalarField, VectorField};
use crate::ops::Ops;
use crate::relativity::{max_v_over_c, velocity_field};
use crate::solver2d::{Density2D, Solver2D, State2D};
use crate::solver3d::{FluidState3D, Solver3D, Thermo};

/// One time sample. Quantities that do not apply to a run are `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub h: Option<f64>,
    pub m: Option<f64>,
    pub k: Option<f64>,
    pub e: Option<f64>,
    pub div_residual: Option<f64>,
    pub k_source: Option<f64>,
    pub e_source: Option<f64>,
    pub max_v_over_c: Option<f64>,
}

/// General: `∫[c s √(c² + u²) − P]`; barotropic: `∫[c s √(c² + u²) + ζ(s)]`.
pub fn hamiltonian_3d(ops: &Ops, c: f64, state: &FluidState3D) -> Result<f64> {
    let u2 = state.u.dot(&state.u);
    let kinetic = state.s.zip_map(&u2, |s, w| c * s * (c * c + w).sqrt());
    let density = match &state.thermo {
        Thermo::General { p } => kinetic.sub(p),
        Thermo::Barotropic(eos) => kinetic.add(&eos.zeta_field(&state.s)?),
    };
    Ok(ops.integrate(&density))
}

/// `∫ s`
pub fn mass(ops: &Ops, s: &ScalarField) -> f64 {
    ops.integrate(s)
}

/// `∫ u · (∇ × u)`
pub fn helicity(ops: &Ops, u: &VectorField) -> f64 {
    ops.inner_vec(u, &ops.curl(u))
}

/// `½ ∫ ω_z² / s` of a z-invariant flow (planar grid); `None` otherwise.
pub fn planar_enstrophy(ops: &Ops, state: &FluidState3D) -> Option<f64> {
    if !ops.grid().is_planar() {
        return None;
    }
    let wz = ops.curl(&state.u).z;
    Some(0.5 * ops.integrate(&wz.mul(&wz).zip_map(&state.s, |w, s| w / s)))
}

/// `b_γ = −∇(1/s) × ∇P`
pub fn baroclinic_vector(ops: &Ops, state: &FluidState3D) -> Result<VectorField> {
    let inv_s = state.s.map(|x| 1.0 / x);
    let p = state.pressure()?;
    Ok(ops.gradient(&inv_s).cross(&ops.gradient(&p)).scale(-1.0))
}

/// `(K_source, E_source) = (2∫u·b_γ, ∫(ω_z/s) b_γ,z)`; the enstrophy source
/// is only defined on planar grids.
pub fn breakdown_sources(ops: &Ops, state: &FluidState3D) -> Result<(f64, Option<f64>)> {
    let b = baroclinic_vector(ops, state)?;
    let k_source = 2.0 * ops.inner_vec(&state.u, &b);
    let e_source = if ops.grid().is_planar() {
        let wz = ops.curl(&state.u).z;
        Some(ops.integrate(&wz.zip_map(&state.s, |w, s| w / s).mul(&b.z)))
    } else {
        None
    };
    Ok((k_source, e_source))
}

/// `‖∇·(u/γ)‖∞ / (‖v‖∞ / min Δx)`
pub fn constraint_residual(ops: &Ops, c: f64, u: &VectorField) -> f64 {
    let v = velocity_field(u, c);
    let vmax = v.max_magnitude();
    if vmax == 0.0 {
        return 0.0;
    }
    ops.divergence(&v).max_abs() / (vmax / ops.grid().min_spacing())
}

pub fn record_3d(solver: &Solver3D, state: &FluidState3D, t: f64) -> Result<DiagnosticsRecord> {
    let ops = solver.ops();
    let c = solver.constants().c;
    let (k_source, e_source) = if state.is_general() {
        let (k, e) = breakdown_sources(ops, state)?;
        (Some(k), e)
    } else {
        (None, None)
    };
    Ok(DiagnosticsRecord {
        t,
        h: Some(hamiltonian_3d(ops, c, state)?),
        m: Some(mass(ops, &state.s)),
        k: Some(helicity(ops, &state.u)),
        e: planar_enstrophy(ops, state),
        div_residual: Some(constraint_residual(ops, c, &state.u)),
        k_source,
        e_source,
        max_v_over_c: Some(max_v_over_c(&state.u, c)),
    })
}

/// Constant density `k`: `c²k ∫ √(1 − |∇Ψ|²/c²)`, or `(k/2)∫|∇Ψ|²` in the
/// γ ≡ 1 mode. Not defined for a variable density.
pub fn hamiltonian_2d(solver: &Solver2D, state: &State2D) -> Option<f64> {
    let k = state.constant_density()?;
    let ops = solver.ops();
    let grad = ops.gradient(&state.psi);
    let g2 = grad.dot(&grad);
    Some(match solver.constants() {
        Some(consts) => {
            let c2 = consts.c * consts.c;
            c2 * k * ops.integrate(&g2.map(|w| (1.0 - w / c2).sqrt()))
        }
        None => 0.5 * k * ops.integrate(&g2),
    })
}

/// `(1/2k)∫q²` for constant density, `½∫q²/s` otherwise.
pub fn enstrophy_2d(ops: &Ops, state: &State2D) -> f64 {
    let q2 = state.q.mul(&state.q);
    match &state.density {
        Density2D::Constant(k) => 0.5 / k * ops.integrate(&q2),
        Density2D::Field(s) => 0.5 * ops.integrate(&q2.zip_map(s, |a, b| a / b)),
    }
}

pub fn mass_2d(ops: &Ops, state: &State2D) -> f64 {
    match &state.density {
        Density2D::Constant(k) => k * ops.grid().volume(),
        Density2D::Field(s) => ops.integrate(s),
    }
}

pub fn record_2d(solver: &Solver2D, state: &State2D, t: f64) -> DiagnosticsRecord {
    let ops = solver.ops();
    let grad = ops.gradient(&state.psi);
    // v = ∇Ψ × ẑ
    let v = VectorField {
        x: grad.y.clone(),
        y: grad.x.scale(-1.0),
        z: ScalarField::zeros(*ops.grid()),
    };
    let vmax = v.max_magnitude();
    let div_residual = if vmax == 0.0 {
        0.0
    } else {
        ops.divergence(&v).max_abs() / (vmax / ops.grid().min_spacing())
    };
    DiagnosticsRecord {
        t,
        h: hamiltonian_2d(solver, state),
        m: Some(mass_2d(ops, state)),
        k: None,
        e: Some(enstrophy_2d(ops, state)),
        div_residual: Some(div_residual),
        k_source: None,
        e_source: None,
        max_v_over_c: solver.constants().map(|k| vmax / k.c),
    }
}
