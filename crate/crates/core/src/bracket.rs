//! Discrete Poisson operators of the general and barotropic 3D systems and
//! of the constant-density planar system, with the functional gradients of
//! the Hamiltonians and Casimir candidates.
//!
//! A functional `F` is represented by its gradient
//! `(δF/δu, δF/δs, δF/δP)`; applying a Poisson operator to it gives the
//! tangent `ż = J δF/δz`, and `{G, F} = ⟨δG/δz, J δF/δz⟩`.

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};
use crate::ops::Ops;
use crate::relativity::PhysicalConstants;
use crate::solver2d::{Solver2D, State2D};
use crate::solver3d::{FluidState3D, Tangent3D, Thermo};

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalGradient {
    pub d_u: VectorField,
    pub d_s: ScalarField,
    /// Present for the general bracket only.
    pub d_p: Option<ScalarField>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional3D {
    HamiltonianGeneral,
    HamiltonianBarotropic,
    Mass,
    Helicity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketKind {
    General3D,
    Barotropic3D,
}

impl BracketKind {
    pub fn name(self) -> &'static str {
        match self {
            BracketKind::General3D => "general3d",
            BracketKind::Barotropic3D => "barotropic3d",
        }
    }
}

/// Closed-form functional gradients.
///
/// `H` (general): `((s/γ)u, c²γ, −1)`; `H` (barotropic): `((s/γ)u, c²γ + ζ′(s))`;
/// `M`: `(0, 1, 0)`; `K`: `(2ω, 0, 0)`.
pub fn functional_gradient(
    ops: &Ops,
    consts: &PhysicalConstants,
    functional: Functional3D,
    state: &FluidState3D,
) -> Result<FunctionalGradient> {
    let g = *state.s.grid();
    let c = consts.c;
    let zero_p = || state.is_general().then(|| ScalarField::zeros(g));
    match functional {
        Functional3D::HamiltonianGeneral | Functional3D::HamiltonianBarotropic => {
            let gamma = state.gamma(c);
            let weight = state.s.zip_map(&gamma, |s, g| s / g);
            let d_u = state.u.mul_scalar(&weight);
            let c2_gamma = gamma.scale(c * c);
            match (functional, &state.thermo) {
                (Functional3D::HamiltonianGeneral, Thermo::General { .. }) => {
                    Ok(FunctionalGradient {
                        d_u,
                        d_s: c2_gamma,
                        d_p: Some(ScalarField::constant(g, -1.0)),
                    })
                }
                (Functional3D::HamiltonianBarotropic, Thermo::Barotropic(eos)) => {
                    Ok(FunctionalGradient {
                        d_u,
                        d_s: c2_gamma.add(&eos.zeta_prime_field(&state.s)?),
                        d_p: None,
                    })
                }
                _ => Err(Error::IncompatibleFunctional {
                    functional: if functional == Functional3D::HamiltonianGeneral {
                        "general Hamiltonian"
                    } else {
                        "barotropic Hamiltonian"
                    },
                    state: state.mode_name(),
                }),
            }
        }
        Functional3D::Mass => Ok(FunctionalGradient {
            d_u: VectorField::zeros(g),
            d_s: ScalarField::constant(g, 1.0),
            d_p: zero_p(),
        }),
        Functional3D::Helicity => Ok(FunctionalGradient {
            d_u: ops.curl(&state.u).scale(2.0),
            d_s: ScalarField::zeros(g),
            d_p: zero_p(),
        }),
    }
}

fn check_kind(kind: BracketKind, state: &FluidState3D) -> Result<()> {
    match (kind, &state.thermo) {
        (BracketKind::General3D, Thermo::General { .. }) => Ok(()),
        (BracketKind::Barotropic3D, _) => Ok(()),
        _ => Err(Error::IncompatibleFunctional {
            functional: kind.name(),
            state: state.mode_name(),
        }),
    }
}

fn check_density(state: &FluidState3D) -> Result<()> {
    let min = state.s.min();
    if min > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveDensity { value: min })
    }
}

/// Tangent `J g`.
///
/// General: `u̇ = −(1/s) ω×d_u − ∇d_s + (1/s) d_P ∇P`, `ṡ = −∇·d_u`,
/// `Ṗ = −(1/s) ∇P·d_u`. Barotropic: the first two rows without `d_P`.
/// `∇d_s` and `∇·d_u` act on nonlinear quantities and are dealiased
/// exactly as in the solver right-hand sides.
pub fn apply_poisson(
    ops: &Ops,
    kind: BracketKind,
    state: &FluidState3D,
    g: &FunctionalGradient,
) -> Result<Tangent3D> {
    check_kind(kind, state)?;
    check_density(state)?;
    let inv_s = state.s.map(|x| 1.0 / x);
    let omega = ops.curl(&state.u);
    let mut u_dot = omega
        .cross(&g.d_u)
        .mul_scalar(&inv_s)
        .add(&ops.gradient_nonlinear(&g.d_s))
        .scale(-1.0);
    let s_dot = ops.divergence_nonlinear(&g.d_u).scale(-1.0);
    let p_dot = match (kind, &state.thermo) {
        (BracketKind::General3D, Thermo::General { p }) => {
            let grad_p = ops.gradient(p);
            if let Some(d_p) = &g.d_p {
                u_dot = u_dot.add(&grad_p.mul_scalar(&d_p.mul(&inv_s)));
            }
            Some(grad_p.dot(&g.d_u).mul(&inv_s).scale(-1.0))
        }
        _ => None,
    };
    Ok(Tangent3D {
        u: u_dot,
        s: s_dot,
        p: p_dot,
    })
}

/// `∫ (d_u·u̇ + d_s ṡ + d_P Ṗ)`
pub fn pairing(ops: &Ops, g: &FunctionalGradient, tangent: &Tangent3D) -> f64 {
    let mut density = g.d_u.dot(&tangent.u).add(&g.d_s.mul(&tangent.s));
    if let (Some(d_p), Some(p_dot)) = (&g.d_p, &tangent.p) {
        density = density.add(&d_p.mul(p_dot));
    }
    ops.integrate(&density)
}

/// Row norms of the Casimir conditions.
///
/// General: `(‖ω×d_u + s∇d_s − d_P∇P‖∞, ‖∇·d_u‖∞, ‖d_u·∇P‖∞)`;
/// barotropic: `(‖ω×d_u + ∇d_s‖∞, ‖∇·d_u‖∞)`.
pub fn casimir_residual(
    ops: &Ops,
    kind: BracketKind,
    state: &FluidState3D,
    g: &FunctionalGradient,
) -> Result<Vec<f64>> {
    check_kind(kind, state)?;
    let omega = ops.curl(&state.u);
    let grad_ds = ops.gradient_nonlinear(&g.d_s);
    let div = ops.divergence_nonlinear(&g.d_u).max_abs();
    match (kind, &state.thermo) {
        (BracketKind::General3D, Thermo::General { p }) => {
            let grad_p = ops.gradient(p);
            let mut first = omega.cross(&g.d_u).add(&grad_ds.mul_scalar(&state.s));
            if let Some(d_p) = &g.d_p {
                first = first.sub(&grad_p.mul_scalar(d_p));
            }
            Ok(vec![
                first.max_magnitude(),
                div,
                g.d_u.dot(&grad_p).max_abs(),
            ])
        }
        _ => Ok(vec![omega.cross(&g.d_u).add(&grad_ds).max_magnitude(), div]),
    }
}

/// Functionals of the constant-density planar system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional2D {
    Hamiltonian,
    Enstrophy,
}

fn constant_k(state: &State2D, what: &'static str) -> Result<f64> {
    state
        .constant_density()
        .ok_or(Error::IncompatibleFunctional {
            functional: what,
            state: "variable-density planar",
        })
}

/// `δH_2D/δΨ = k Δ_γΨ`, `δE/δΨ = (1/k) Δ_γ Δ_γΨ` (the outer `Δ_γ` uses
/// the coefficient `γ(∇Ψ)` of the state).
pub fn functional_gradient_2d(
    solver: &Solver2D,
    functional: Functional2D,
    state: &State2D,
) -> Result<ScalarField> {
    let k = constant_k(state, "planar functional")?;
    match functional {
        Functional2D::Hamiltonian => Ok(state.q.scale(k)),
        Functional2D::Enstrophy => {
            let gamma = solver.gamma(&state.psi)?;
            Ok(solver
                .ops()
                .gamma_laplacian(&state.q, &gamma)?
                .scale(1.0 / k))
        }
    }
}

/// `q̇ = (1/k) [Δ_γ⁻¹ g, q]` with the linear inverse at fixed `γ(∇Ψ)`.
pub fn apply_poisson_2d(
    solver: &Solver2D,
    state: &State2D,
    g: &ScalarField,
) -> Result<ScalarField> {
    let k = constant_k(state, "planar bracket")?;
    let phi = inverse_2d(solver, state, g)?;
    let j = solver.ops().jacobian(&phi, &state.q, solver.scheme());
    Ok(solver.ops().remove_kernel_modes(&j).scale(1.0 / k))
}

/// `Δ_γ⁻¹ g` with the state's coefficient.
pub fn inverse_2d(solver: &Solver2D, state: &State2D, g: &ScalarField) -> Result<ScalarField> {
    let gamma = solver.gamma(&state.psi)?;
    let mean = g.mean();
    solver.invert_linear(
        &solver.ops().remove_kernel_modes(&g.map(|x| x - mean)),
        &gamma,
    )
}

/// `⟨g, q̇⟩ = ∫ (Δ_γ⁻¹ g) q̇`, the pairing under which `q̇ = J g`.
pub fn pairing_2d(
    solver: &Solver2D,
    state: &State2D,
    g: &ScalarField,
    q_dot: &ScalarField,
) -> Result<f64> {
    let phi = inverse_2d(solver, state, g)?;
    Ok(solver.ops().inner(&phi, q_dot))
}

/// `‖[q, Δ_γ⁻¹ δC/δΨ]‖∞`
pub fn casimir_residual_2d(solver: &Solver2D, state: &State2D, g: &ScalarField) -> Result<f64> {
    let phi = inverse_2d(solver, state, g)?;
    Ok(solver
        .ops()
        .jacobian(&state.q, &phi, solver.scheme())
        .max_abs())
}
