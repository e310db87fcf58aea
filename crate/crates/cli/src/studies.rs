//! Verification studies: bracket properties on random states, the
//! classical-limit c-sweep and the baroclinic budget closure.

use std::fmt;
use std::fs;
use std::path::Path;

use relfluid::bracket::{
    apply_poisson, apply_poisson_2d, casimir_residual, casimir_residual_2d, functional_gradient,
    functional_gradient_2d, pairing, pairing_2d, BracketKind, Functional2D, Functional3D,
    FunctionalGradient,
};
use relfluid::diagnostics::DiagnosticsRecord;
use relfluid::initial::{random_scalar, random_stream_function, RandomSpectrum};
use relfluid::relativity::four_velocity_field;
use relfluid::solver2d::{Density2D, Solver2D, State2D};
use relfluid::solver3d::{FluidState3D, Solver3D, Tangent3D};
use relfluid::{Grid, Ops, ScalarField, VectorField};

use crate::config::ScenarioConfig;
use crate::io::{write_manifest, RunDir};
use crate::run::{self, integrate, manifest, Sim2D, Simulation, Trajectory};
use crate::CliError;

const ANTISYMMETRY_TOL: f64 = 1e-12;
const CASIMIR_TOL: f64 = 1e-12;
const EOM_TOL: f64 = 1e-10;
const NON_CASIMIR_FLOOR: f64 = 1e-3;
const BUDGET_TOL: f64 = 0.05;

/// Seeds are spread so that the streams of different samples never meet.
fn sample_spectrum(cfg: &ScenarioConfig, sample: u64, stream: u64, kcut: usize) -> RandomSpectrum {
    RandomSpectrum {
        seed: cfg
            .seed
            .wrapping_add(sample.wrapping_mul(1009))
            .wrapping_add(stream),
        k0: cfg.k0,
        kcut,
    }
}

/// Test gradients are band-limited to a third of the Nyquist wavenumber.
fn gradient_kcut(grid: &Grid) -> usize {
    let [nx, ny, nz] = grid.shape();
    let n = if grid.is_planar() {
        nx.min(ny)
    } else {
        nx.min(ny).min(nz)
    };
    (n / 6).max(1)
}

/// Random non-solenoidal 3D state with `max|v| = amplitude` and relative
/// perturbations of `s` and `P` taken from the config.
pub fn random_state_3d(
    cfg: &ScenarioConfig,
    solver: &Solver3D,
    general: bool,
    sample: u64,
) -> Result<FluidState3D, CliError> {
    let g = *solver.ops().grid();
    let comp = |stream| random_scalar(g, &sample_spectrum(cfg, sample, stream, cfg.kcut), 1.0);
    let v = VectorField::new(comp(0)?, comp(1)?, comp(2)?)?;
    let v = v.scale(cfg.amplitude / v.max_magnitude());
    let u = four_velocity_field(&v, solver.constants())?;
    let s = comp(3)?.map(|x| cfg.s0 * (1.0 + cfg.density_perturbation * x));
    let state = if general {
        let p = comp(4)?.map(|x| cfg.p0 * (1.0 + cfg.pressure_perturbation * x));
        FluidState3D::general(u, s, p)
    } else {
        FluidState3D::barotropic(u, s, run::eos(cfg)?)
    };
    solver.check_state(&state)?;
    Ok(state)
}

pub fn random_gradient_3d(
    cfg: &ScenarioConfig,
    grid: Grid,
    general: bool,
    sample: u64,
) -> Result<FunctionalGradient, CliError> {
    let kcut = gradient_kcut(&grid);
    let f =
        |stream: u64| random_scalar(grid, &sample_spectrum(cfg, sample, 10 + stream, kcut), 1.0);
    Ok(FunctionalGradient {
        d_u: VectorField::new(f(0)?, f(1)?, f(2)?)?,
        d_s: f(3)?.map(|x| x + 0.5),
        d_p: if general {
            Some(f(4)?.map(|x| x - 0.5))
        } else {
            None
        },
    })
}

/// Random constant-density planar state with `max|∇Ψ| = amplitude`.
pub fn random_state_2d(
    cfg: &ScenarioConfig,
    solver: &Solver2D,
    sample: u64,
) -> Result<State2D, CliError> {
    let spec = sample_spectrum(cfg, sample, 0, cfg.kcut);
    let psi = random_stream_function(solver.ops(), &spec, cfg.amplitude)?;
    Ok(solver.state_from_psi(&psi, Density2D::Constant(cfg.k))?)
}

pub fn random_gradient_2d(
    cfg: &ScenarioConfig,
    grid: Grid,
    sample: u64,
) -> Result<ScalarField, CliError> {
    let spec = sample_spectrum(cfg, sample, 10, gradient_kcut(&grid));
    Ok(random_scalar(grid, &spec, 1.0)?)
}

/// Integral of the absolute pairing density: the size of the terms that
/// cancel in an antisymmetry check.
fn pairing_magnitude(ops: &Ops, g: &FunctionalGradient, t: &Tangent3D) -> f64 {
    let mut density = g
        .d_u
        .x
        .mul(&t.u.x)
        .map(f64::abs)
        .add(&g.d_u.y.mul(&t.u.y).map(f64::abs))
        .add(&g.d_u.z.mul(&t.u.z).map(f64::abs))
        .add(&g.d_s.mul(&t.s).map(f64::abs));
    if let (Some(d_p), Some(p_dot)) = (&g.d_p, &t.p) {
        density = density.add(&d_p.mul(p_dot).map(f64::abs));
    }
    ops.integrate(&density)
}

fn relative_difference(a: &Tangent3D, b: &Tangent3D) -> f64 {
    a.axpy(-1.0, b).max_abs() / b.max_abs()
}

/// One line of the bracket-check table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub kind: &'static str,
    pub check: &'static str,
    /// Worst residual over all samples (smallest one for lower bounds).
    pub residual: f64,
    pub bound: f64,
    /// The residual must exceed the bound rather than stay below it.
    pub lower_bound: bool,
}

impl CheckRow {
    fn upper(kind: &'static str, check: &'static str, residual: f64, bound: f64) -> Self {
        Self {
            kind,
            check,
            residual,
            bound,
            lower_bound: false,
        }
    }

    pub fn passed(&self) -> bool {
        if self.lower_bound {
            self.residual > self.bound
        } else {
            self.residual <= self.bound
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketReport {
    pub rows: Vec<CheckRow>,
}

impl BracketReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(CheckRow::passed)
    }

    pub fn row(&self, kind: &str, check: &str) -> Option<&CheckRow> {
        self.rows
            .iter()
            .find(|r| r.kind == kind && r.check == check)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,check,residual,bound,passed\n");
        for r in &self.rows {
            let bound = if r.lower_bound {
                format!(">{:e}", r.bound)
            } else {
                format!("{:e}", r.bound)
            };
            out += &format!(
                "{},{},{:e},{},{}\n",
                r.kind,
                r.check,
                r.residual,
                bound,
                r.passed()
            );
        }
        out
    }
}

impl fmt::Display for BracketReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<13} {:<20} {:>12} {:>13}  result",
            "kind", "check", "residual", "bound"
        )?;
        for r in &self.rows {
            let op = if r.lower_bound { ">" } else { "<=" };
            writeln!(
                f,
                "{:<13} {:<20} {:>12.3e} {:>2}{:>11.3e}  {}",
                r.kind,
                r.check,
                r.residual,
                op,
                r.bound,
                if r.passed() { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

fn check_3d(cfg: &ScenarioConfig, kind: BracketKind) -> Result<Vec<CheckRow>, CliError> {
    let mut cfg3 = cfg.clone();
    cfg3.projection = false;
    let solver = run::solver_3d(&cfg3)?;
    let ops = solver.ops();
    let consts = solver.constants();
    let grid = *ops.grid();
    let general = kind == BracketKind::General3D;
    let name = kind.name();
    let kmax = std::f64::consts::PI / grid.min_spacing();

    let mut mass = 0.0f64;
    let mut helicity = 0.0f64;
    let mut non_casimir = f64::INFINITY;
    let mut eom = 0.0f64;
    for i in 0..cfg.samples as u64 {
        let st = random_state_3d(cfg, &solver, general, i)?;
        let gm = functional_gradient(ops, consts, Functional3D::Mass, &st)?;
        mass = mass.max(apply_poisson(ops, kind, &st, &gm)?.max_abs());

        let gk = functional_gradient(ops, consts, Functional3D::Helicity, &st)?;
        if general {
            let rows = casimir_residual(ops, kind, &st, &gk)?;
            let grad_p = ops.gradient(&st.pressure()?);
            let scale = gk.d_u.max_magnitude() * grad_p.max_magnitude();
            non_casimir = non_casimir.min(rows[2] / scale);
        } else {
            let t = apply_poisson(ops, kind, &st, &gk)?;
            helicity = helicity.max(t.max_abs() / (gk.d_u.max_magnitude() * kmax));
        }

        let (functional, rhs) = if general {
            (Functional3D::HamiltonianGeneral, solver.rhs_general(&st)?)
        } else {
            (
                Functional3D::HamiltonianBarotropic,
                solver.rhs_barotropic(&st)?,
            )
        };
        let gh = functional_gradient(ops, consts, functional, &st)?;
        eom = eom.max(relative_difference(
            &apply_poisson(ops, kind, &st, &gh)?,
            &rhs,
        ));
    }

    let mut antisymmetry = 0.0f64;
    for i in 0..cfg.pairs as u64 {
        let st = random_state_3d(cfg, &solver, general, i)?;
        let gf = random_gradient_3d(cfg, grid, general, 2 * i)?;
        let gg = random_gradient_3d(cfg, grid, general, 2 * i + 1)?;
        let jg = apply_poisson(ops, kind, &st, &gg)?;
        let jf = apply_poisson(ops, kind, &st, &gf)?;
        let a = pairing(ops, &gf, &jg);
        let b = pairing(ops, &gg, &jf);
        let scale = pairing_magnitude(ops, &gf, &jg) + pairing_magnitude(ops, &gg, &jf);
        antisymmetry = antisymmetry.max((a + b).abs() / (a.abs() + scale));
    }

    let mut rows = vec![CheckRow::upper(name, "casimir_mass", mass, 0.0)];
    if general {
        rows.push(CheckRow {
            kind: name,
            check: "non_casimir_helicity",
            residual: non_casimir,
            bound: NON_CASIMIR_FLOOR,
            lower_bound: true,
        });
    } else {
        rows.push(CheckRow::upper(
            name,
            "casimir_helicity",
            helicity,
            CASIMIR_TOL,
        ));
    }
    rows.push(CheckRow::upper(
        name,
        "antisymmetry",
        antisymmetry,
        ANTISYMMETRY_TOL,
    ));
    rows.push(CheckRow::upper(name, "eom_consistency", eom, EOM_TOL));
    Ok(rows)
}

fn check_2d(cfg: &ScenarioConfig) -> Result<Vec<CheckRow>, CliError> {
    let mut cfg2 = cfg.clone();
    cfg2.nz = None;
    cfg2.lz = None;
    let solver = run::solver_2d(&cfg2, cfg.c)?;
    let ops = solver.ops();
    let grid = *ops.grid();
    let tol = solver.inverter().tol;

    let mut enstrophy = 0.0f64;
    let mut eom = 0.0f64;
    for i in 0..cfg.samples as u64 {
        let st = random_state_2d(cfg, &solver, i)?;
        let ge = functional_gradient_2d(&solver, Functional2D::Enstrophy, &st)?;
        let grad_q = ops.gradient(&st.q).max_magnitude();
        let grad_phi = ops.gradient(&st.q.scale(1.0 / cfg.k)).max_magnitude();
        enstrophy = enstrophy.max(casimir_residual_2d(&solver, &st, &ge)? / (grad_q * grad_phi));

        let gh = functional_gradient_2d(&solver, Functional2D::Hamiltonian, &st)?;
        let rhs = solver.rhs_q(&st);
        let jh = apply_poisson_2d(&solver, &st, &gh)?;
        eom = eom.max(jh.sub(&rhs).max_abs() / rhs.max_abs());
    }

    let mut antisymmetry = 0.0f64;
    for i in 0..cfg.pairs as u64 {
        let st = random_state_2d(cfg, &solver, i)?;
        let gf = random_gradient_2d(cfg, grid, 2 * i)?;
        let gg = random_gradient_2d(cfg, grid, 2 * i + 1)?;
        let jg = apply_poisson_2d(&solver, &st, &gg)?;
        let jf = apply_poisson_2d(&solver, &st, &gf)?;
        let a = pairing_2d(&solver, &st, &gf, &jg)?;
        let b = pairing_2d(&solver, &st, &gg, &jf)?;
        let phi_f = relfluid::bracket::inverse_2d(&solver, &st, &gf)?;
        let phi_g = relfluid::bracket::inverse_2d(&solver, &st, &gg)?;
        let scale = ops.integrate(&phi_f.mul(&jg).map(f64::abs))
            + ops.integrate(&phi_g.mul(&jf).map(f64::abs));
        antisymmetry = antisymmetry.max((a + b).abs() / (a.abs() + scale));
    }

    Ok(vec![
        CheckRow::upper("twod", "casimir_enstrophy", enstrophy, 10.0 * tol),
        CheckRow::upper("twod", "antisymmetry", antisymmetry, ANTISYMMETRY_TOL),
        // the planar Hamiltonian flow agrees with the solver up to the
        // accuracy of the γ-Laplacian inverse
        CheckRow::upper("twod", "eom_consistency", eom, 100.0 * tol),
    ])
}

/// Antisymmetry, Casimir kernel and equation-of-motion checks for the
/// general, barotropic and planar brackets.
pub fn bracket_check(cfg: &ScenarioConfig) -> Result<BracketReport, CliError> {
    let mut rows = check_3d(cfg, BracketKind::General3D)?;
    rows.extend(check_3d(cfg, BracketKind::Barotropic3D)?);
    rows.extend(check_2d(cfg)?);
    Ok(BracketReport { rows })
}

/// `‖Ψ_c − Ψ_{γ≡1}‖₂` at `t_end` for each speed of light.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitStudy {
    pub c_values: Vec<f64>,
    pub differences: Vec<f64>,
}

impl LimitStudy {
    /// `(observed, expected)` ratio between consecutive speeds of light;
    /// the expected value `(c₂/c₁)²` reflects the c⁻² approach.
    pub fn ratios(&self) -> Vec<(f64, f64)> {
        self.differences
            .windows(2)
            .zip(self.c_values.windows(2))
            .map(|(d, c)| (d[0] / d[1], (c[1] / c[0]).powi(2)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("c,l2_difference,ratio_to_previous,expected_ratio\n");
        let ratios = self.ratios();
        for (i, (c, d)) in self.c_values.iter().zip(&self.differences).enumerate() {
            match i.checked_sub(1).map(|j| ratios[j]) {
                Some((r, e)) => out += &format!("{c:e},{d:e},{r:e},{e:e}\n"),
                None => out += &format!("{c:e},{d:e},,\n"),
            }
        }
        out
    }
}

fn fixed_dt(cfg: &ScenarioConfig, sim: &dyn Simulation) -> f64 {
    cfg.dt.unwrap_or_else(|| {
        let dt = sim.cfl_dt(cfg.cfl);
        if dt.is_finite() {
            dt
        } else {
            cfg.t_end.max(f64::MIN_POSITIVE)
        }
    })
}

fn final_or_error(traj: Trajectory) -> Result<Trajectory, CliError> {
    match traj.error {
        Some(e) => Err(e),
        None => Ok(traj),
    }
}

/// Runs the same initial stream function with γ ≡ 1 and with every
/// configured speed of light, sharing one fixed time step.
pub fn limit_study(cfg: &ScenarioConfig) -> Result<LimitStudy, CliError> {
    let classical = run::solver_2d(cfg, None)?;
    let psi0 = run::initial_psi(cfg, classical.ops())?;
    let density = Density2D::Constant(cfg.k);
    let mut reference = Sim2D {
        state: classical.state_from_psi(&psi0, density.clone())?,
        solver: classical,
    };
    let mut fixed = cfg.clone();
    fixed.dt = Some(fixed_dt(cfg, &reference));
    final_or_error(integrate(&fixed, &mut reference, None)?)?;

    let ops = reference.solver.ops().clone();
    let mut differences = Vec::with_capacity(cfg.c_values.len());
    for &c in &cfg.c_values {
        let solver = run::solver_2d(cfg, Some(c))?;
        let mut sim = Sim2D {
            state: solver.state_from_psi(&psi0, density.clone())?,
            solver,
        };
        final_or_error(integrate(&fixed, &mut sim, None)?)?;
        let diff = sim.state.psi.sub(&reference.state.psi);
        differences.push(ops.inner(&diff, &diff).sqrt());
    }
    Ok(LimitStudy {
        c_values: cfg.c_values.clone(),
        differences,
    })
}

/// Budget closure of one invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetScore {
    /// Samples whose source magnitude reached the floor.
    pub scored: usize,
    pub max_rel_err: f64,
}

impl BudgetScore {
    pub fn passed(&self) -> bool {
        self.scored > 0 && self.max_rel_err <= BUDGET_TOL
    }
}

/// Central-difference time derivative of an invariant against its source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSample {
    pub t: f64,
    pub dk_dt: f64,
    pub k_source: f64,
    pub de_dt: Option<f64>,
    pub e_source: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub floor: f64,
    pub samples: Vec<BudgetSample>,
    pub k: BudgetScore,
    pub e: Option<BudgetScore>,
}

impl BudgetReport {
    pub fn passed(&self) -> bool {
        let k_ok = self.k.scored == 0 || self.k.passed();
        let e_ok = self.e.is_none_or(|e| e.scored == 0 || e.passed());
        k_ok && e_ok && (self.k.scored > 0 || self.e.is_some_and(|e| e.scored > 0))
    }

    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        let mut out = String::from("t,dK_dt,K_source,dE_dt,E_source\n");
        for s in &self.samples {
            out += &format!(
                "{:e},{:e},{:e},{},{}\n",
                s.t,
                s.dk_dt,
                s.k_source,
                opt(s.de_dt),
                opt(s.e_source)
            );
        }
        out
    }
}

impl fmt::Display for BudgetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "floor {:e}", self.floor)?;
        writeln!(
            f,
            "helicity:  {} scored samples, max relative error {:.3e}",
            self.k.scored, self.k.max_rel_err
        )?;
        if let Some(e) = self.e {
            writeln!(
                f,
                "enstrophy: {} scored samples, max relative error {:.3e}",
                e.scored, e.max_rel_err
            )?;
        }
        Ok(())
    }
}

fn score(pairs: impl Iterator<Item = (f64, f64)>, floor: f64) -> BudgetScore {
    let mut s = BudgetScore {
        scored: 0,
        max_rel_err: 0.0,
    };
    for (rate, source) in pairs {
        if source.abs() >= floor && source != 0.0 {
            s.scored += 1;
            s.max_rel_err = s.max_rel_err.max((rate - source).abs() / source.abs());
        }
    }
    s
}

/// Scores `dK/dt = K_source` (and `dE/dt = E_source` where recorded) at
/// interior samples of an evenly spaced series.
pub fn budget(records: &[DiagnosticsRecord], floor: f64) -> BudgetReport {
    let mut samples = Vec::new();
    for w in records.windows(3) {
        let dt = w[2].t - w[0].t;
        let rate = |a: Option<f64>, b: Option<f64>| Some((b? - a?) / dt);
        samples.push(BudgetSample {
            t: w[1].t,
            dk_dt: rate(w[0].k, w[2].k).unwrap_or(f64::NAN),
            k_source: w[1].k_source.unwrap_or(f64::NAN),
            de_dt: rate(w[0].e, w[2].e),
            e_source: w[1].e_source,
        });
    }
    let k = score(samples.iter().map(|s| (s.dk_dt, s.k_source)), floor);
    let e = samples.iter().any(|s| s.e_source.is_some()).then(|| {
        score(
            samples.iter().filter_map(|s| Some((s.de_dt?, s.e_source?))),
            floor,
        )
    });
    BudgetReport {
        floor,
        samples,
        k,
        e,
    }
}

/// General-mode run with a fixed step followed by the budget report;
/// writes the usual run directory plus `budget.csv`.
pub fn baroclinic(
    cfg: &ScenarioConfig,
    out: &Path,
) -> Result<(Trajectory, BudgetReport), CliError> {
    let dir = RunDir::create(out)?;
    let mut sim = run::simulation(cfg)?;
    let mut fixed = cfg.clone();
    fixed.dt = Some(fixed_dt(cfg, sim.as_ref()));
    fs::write(dir.config(), fixed.to_toml())?;
    let traj = integrate(&fixed, sim.as_mut(), Some(&dir))?;
    write_manifest(&dir.root, &manifest(&fixed, &sim.grid(), &traj))?;
    let report = budget(&traj.records, cfg.budget_floor);
    fs::write(dir.root.join("budget.csv"), report.to_csv())?;
    Ok((traj, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, k: f64, ks: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            k: Some(k),
            k_source: Some(ks),
            ..Default::default()
        }
    }

    #[test]
    fn budget_of_quadratic_series_is_exact() {
        // K = t², K_source = 2t
        let records: Vec<_> = (0..6)
            .map(|i| i as f64 * 0.1)
            .map(|t| rec(t, t * t, 2.0 * t))
            .collect();
        let r = budget(&records, 0.0);
        assert_eq!(r.samples.len(), 4);
        assert_eq!(r.k.scored, 4);
        assert!(r.k.max_rel_err < 1e-12);
        assert!(r.e.is_none());
        assert!(r.passed());
    }

    #[test]
    fn floor_excludes_small_sources() {
        let records: Vec<_> = (0..5).map(|i| rec(i as f64, 0.0, 1e-9)).collect();
        let r = budget(&records, 1e-6);
        assert_eq!(r.k.scored, 0);
        assert!(!r.passed());
    }

    #[test]
    fn ratios_compare_consecutive_speeds() {
        let s = LimitStudy {
            c_values: vec![10.0, 100.0],
            differences: vec![1e-2, 1e-4],
        };
        let r = s.ratios();
        assert_eq!(r.len(), 1);
        assert!((r[0].0 - 100.0).abs() < 1e-9);
        assert!((r[0].1 - 100.0).abs() < 1e-9);
        assert!(s.to_csv().lines().nth(1).unwrap().ends_with(",,"));
    }

    #[test]
    fn lower_bound_rows() {
        let row = CheckRow {
            kind: "general3d",
            check: "non_casimir_helicity",
            residual: 0.5,
            bound: 1e-3,
            lower_bound: true,
        };
        assert!(row.passed());
        assert!(!CheckRow::upper("twod", "antisymmetry", 1.0, 1e-12).passed());
    }
}
