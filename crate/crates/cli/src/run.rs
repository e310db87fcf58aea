//! Scenario assembly and the time loop shared by all run modes.

use std::path::Path;

use relfluid::diagnostics::{record_2d, record_3d, DiagnosticsRecord};
use relfluid::eos::Eos;
use relfluid::initial::{
    abc, random_scalar, random_solenoidal_velocity, random_stream_function, shear, taylor_green,
    RandomSpectrum,
};
use relfluid::relativity::four_velocity_field;
use relfluid::solver2d::{Density2D, InverterSettings, Solver2D, State2D};
use relfluid::solver3d::{FluidState3D, ProjectionSettings, Solver3D};
use relfluid::{
    DerivativeScheme, Grid, JacobianScheme, Ops, PhysicalConstants, ScalarField, VectorField,
};

use crate::config::{DerivativeName, EosName, Mode, Preset, ScenarioConfig, SchemeName};
use crate::io::{write_manifest, write_snapshot, DiagnosticsWriter, GridInfo, Manifest, RunDir};
use crate::CliError;

pub fn grid(cfg: &ScenarioConfig) -> Result<Grid, CliError> {
    let g = match (cfg.nz, cfg.lz) {
        (Some(nz), Some(lz)) if !cfg.is_planar() => {
            Grid::new_3d(cfg.nx, cfg.ny, nz, cfg.lx, cfg.ly, lz)
        }
        _ => Grid::new_2d(cfg.nx, cfg.ny, cfg.lx, cfg.ly),
    };
    g.map_err(|e| CliError::Validation(vec![e.to_string()]))
}

pub fn ops(cfg: &ScenarioConfig, grid: Grid) -> Ops {
    let scheme = match cfg.derivative {
        DerivativeName::Spectral => DerivativeScheme::Spectral,
        DerivativeName::CentralDifference => DerivativeScheme::CentralDifference,
    };
    Ops::with_scheme(grid, scheme, cfg.dealias)
}

pub fn jacobian_scheme(cfg: &ScenarioConfig) -> JacobianScheme {
    match cfg.scheme {
        SchemeName::Arakawa => JacobianScheme::Arakawa,
        SchemeName::Spectral => JacobianScheme::Spectral,
    }
}

pub fn constants(cfg: &ScenarioConfig, c: f64) -> Result<PhysicalConstants, CliError> {
    Ok(PhysicalConstants::new(c, cfg.c_frac_max)?)
}

pub fn eos(cfg: &ScenarioConfig) -> Result<Eos, CliError> {
    Ok(match cfg.eos {
        EosName::GammaIdeal => Eos::gamma_ideal(cfg.eos_a)?,
        EosName::PowerLaw => Eos::power_law(cfg.eos_a, cfg.eos_exponent.unwrap_or(f64::NAN))?,
    })
}

pub fn spectrum(cfg: &ScenarioConfig, stream: u64) -> RandomSpectrum {
    RandomSpectrum {
        seed: cfg.seed.wrapping_add(stream),
        k0: cfg.k0,
        kcut: cfg.kcut,
    }
}

/// Planar solver; `c = None` selects γ ≡ 1.
pub fn solver_2d(cfg: &ScenarioConfig, c: Option<f64>) -> Result<Solver2D, CliError> {
    let g = grid(cfg)?;
    let consts = c.map(|c| constants(cfg, c)).transpose()?;
    Ok(
        Solver2D::new(ops(cfg, g), consts, jacobian_scheme(cfg)).with_inverter(InverterSettings {
            tol: cfg.tol,
            max_iter: cfg.max_iter,
        }),
    )
}

/// Initial stream function of a planar run.
pub fn initial_psi(cfg: &ScenarioConfig, ops: &Ops) -> Result<ScalarField, CliError> {
    let g = *ops.grid();
    Ok(match cfg.initial_condition {
        Preset::TaylorGreen => taylor_green(g, cfg.amplitude),
        Preset::Shear => shear(g, cfg.amplitude),
        Preset::Random => random_stream_function(ops, &spectrum(cfg, 0), cfg.amplitude)?,
        Preset::Static => ScalarField::zeros(g),
        Preset::Abc => {
            return Err(CliError::Validation(vec!["abc is a 3D preset".into()]));
        }
    })
}

pub fn initial_2d(cfg: &ScenarioConfig, solver: &Solver2D) -> Result<State2D, CliError> {
    let psi = initial_psi(cfg, solver.ops())?;
    let density = if cfg.density_perturbation > 0.0 {
        let r = random_scalar(*psi.grid(), &spectrum(cfg, 1), cfg.density_perturbation)?;
        Density2D::Field(r.map(|x| cfg.k * (1.0 + x)))
    } else {
        Density2D::Constant(cfg.k)
    };
    Ok(solver.state_from_psi(&psi, density)?)
}

pub fn solver_3d(cfg: &ScenarioConfig) -> Result<Solver3D, CliError> {
    let g = grid(cfg)?;
    let c = cfg
        .c
        .ok_or_else(|| CliError::Validation(vec!["c is required".into()]))?;
    let mut solver = Solver3D::new(ops(cfg, g), constants(cfg, c)?);
    if cfg.projection {
        solver = solver.with_projection(ProjectionSettings {
            tol: cfg.projection_tol,
            max_iter: cfg.projection_max_iter,
        });
    }
    Ok(solver)
}

pub fn initial_3d(cfg: &ScenarioConfig, solver: &Solver3D) -> Result<FluidState3D, CliError> {
    let g = *solver.ops().grid();
    let consts = solver.constants();
    let u = match cfg.initial_condition {
        Preset::Abc => abc(g, cfg.amplitude),
        Preset::Static => VectorField::zeros(g),
        Preset::Random => {
            let mut v = random_solenoidal_velocity(g, &spectrum(cfg, 0), cfg.amplitude)?;
            if g.is_planar() {
                // in-plane flow; dropping v_z keeps ∇·v = 0
                v.z = ScalarField::zeros(g);
                let vmax = v.max_magnitude();
                if vmax > 0.0 {
                    v = v.scale(cfg.amplitude / vmax);
                }
            }
            four_velocity_field(&v, consts)?
        }
        Preset::TaylorGreen | Preset::Shear => {
            return Err(CliError::Validation(vec![
                "planar presets need a 2D mode".into()
            ]));
        }
    };
    let s = if cfg.density_perturbation > 0.0 {
        random_scalar(g, &spectrum(cfg, 1), cfg.density_perturbation)?.map(|x| cfg.s0 * (1.0 + x))
    } else {
        ScalarField::constant(g, cfg.s0)
    };
    let state = match cfg.mode {
        Mode::Run3dBarotropic => FluidState3D::barotropic(u, s, eos(cfg)?),
        _ => {
            let p = if cfg.pressure_perturbation > 0.0 {
                random_scalar(g, &spectrum(cfg, 2), cfg.pressure_perturbation)?
                    .map(|x| cfg.p0 * (1.0 + x))
            } else {
                ScalarField::constant(g, cfg.p0)
            };
            FluidState3D::general(u, s, p)
        }
    };
    let state = match (solver.projection(), &state.thermo) {
        (Some(settings), relfluid::solver3d::Thermo::Barotropic(_)) => {
            solver.project_div_free(&state, settings)?
        }
        _ => state,
    };
    solver.check_state(&state)?;
    Ok(state)
}

/// A state together with the solver that advances it.
pub trait Simulation {
    fn record(&self, t: f64) -> Result<DiagnosticsRecord, CliError>;
    fn step(&mut self, dt: f64) -> Result<(), CliError>;
    fn cfl_dt(&self, cfl: f64) -> f64;
    fn fields(&self) -> Vec<(&'static str, ScalarField)>;
    fn grid(&self) -> Grid;
}

pub struct Sim2D {
    pub solver: Solver2D,
    pub state: State2D,
}

impl Simulation for Sim2D {
    fn record(&self, t: f64) -> Result<DiagnosticsRecord, CliError> {
        Ok(record_2d(&self.solver, &self.state, t))
    }

    fn step(&mut self, dt: f64) -> Result<(), CliError> {
        self.state = self.solver.step_rk4(&self.state, dt)?;
        Ok(())
    }

    fn cfl_dt(&self, cfl: f64) -> f64 {
        self.solver.cfl_dt(&self.state, cfl)
    }

    fn fields(&self) -> Vec<(&'static str, ScalarField)> {
        let mut out = vec![("psi", self.state.psi.clone()), ("q", self.state.q.clone())];
        if let Density2D::Field(s) = &self.state.density {
            out.push(("s", s.clone()));
        }
        out
    }

    fn grid(&self) -> Grid {
        *self.solver.ops().grid()
    }
}

pub struct Sim3D {
    pub solver: Solver3D,
    pub state: FluidState3D,
}

impl Simulation for Sim3D {
    fn record(&self, t: f64) -> Result<DiagnosticsRecord, CliError> {
        Ok(record_3d(&self.solver, &self.state, t)?)
    }

    fn step(&mut self, dt: f64) -> Result<(), CliError> {
        self.state = self.solver.step_rk4(&self.state, dt)?;
        Ok(())
    }

    fn cfl_dt(&self, cfl: f64) -> f64 {
        self.solver.cfl_dt(&self.state, cfl)
    }

    fn fields(&self) -> Vec<(&'static str, ScalarField)> {
        let mut out = vec![
            ("u_x", self.state.u.x.clone()),
            ("u_y", self.state.u.y.clone()),
            ("u_z", self.state.u.z.clone()),
            ("s", self.state.s.clone()),
        ];
        if let relfluid::solver3d::Thermo::General { p } = &self.state.thermo {
            out.push(("P", p.clone()));
        }
        out
    }

    fn grid(&self) -> Grid {
        *self.solver.ops().grid()
    }
}

/// Result of a completed or aborted time loop.
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub steps: usize,
    pub t: f64,
    pub error: Option<CliError>,
}

/// Advances `sim` to `cfg.t_end`, streaming diagnostics and snapshots into
/// `dir` when given. Stops at the first model error, which is returned in
/// the trajectory rather than discarding the partial series.
pub fn integrate(
    cfg: &ScenarioConfig,
    sim: &mut dyn Simulation,
    dir: Option<&RunDir>,
) -> Result<Trajectory, CliError> {
    let mut writer = dir
        .map(|d| DiagnosticsWriter::create(&d.diagnostics()))
        .transpose()?;
    let mut traj = Trajectory {
        records: Vec::new(),
        steps: 0,
        t: 0.0,
        error: None,
    };
    let emit = |sim: &dyn Simulation,
                traj: &mut Trajectory,
                writer: &mut Option<DiagnosticsWriter>|
     -> Result<(), CliError> {
        let rec = sim.record(traj.t)?;
        if let Some(w) = writer {
            w.write(&rec)?;
        }
        traj.records.push(rec);
        if let Some(d) = dir {
            if cfg.snapshot_every > 0 && traj.steps.is_multiple_of(cfg.snapshot_every) {
                for (name, field) in sim.fields() {
                    write_snapshot(&d.snapshot(name, traj.steps), name, &field, traj.t)?;
                }
            }
        }
        Ok(())
    };
    if let Err(e) = emit(sim, &mut traj, &mut writer) {
        traj.error = Some(e);
        return Ok(traj);
    }

    let t_end = cfg.t_end;
    let fixed = cfg.dt.map(|dt| {
        let n = ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0);
        (n as usize, t_end / n)
    });
    loop {
        let dt = match fixed {
            Some((n, dt)) => {
                if traj.steps >= n || t_end == 0.0 {
                    break;
                }
                dt
            }
            None => {
                let remaining = t_end - traj.t;
                if remaining <= 1e-12 * t_end.max(f64::MIN_POSITIVE) || t_end == 0.0 {
                    break;
                }
                sim.cfl_dt(cfg.cfl).min(remaining)
            }
        };
        if let Err(e) = sim.step(dt) {
            traj.error = Some(e);
            return Ok(traj);
        }
        traj.steps += 1;
        traj.t = match fixed {
            Some((n, _)) if traj.steps == n => t_end,
            Some((_, dt)) => traj.steps as f64 * dt,
            None if t_end - (traj.t + dt) <= 1e-12 * t_end => t_end,
            None => traj.t + dt,
        };
        if let Err(e) = emit(sim, &mut traj, &mut writer) {
            traj.error = Some(e);
            return Ok(traj);
        }
    }
    Ok(traj)
}

pub fn manifest(cfg: &ScenarioConfig, grid: &Grid, traj: &Trajectory) -> Manifest {
    Manifest {
        version: env!("CARGO_PKG_VERSION"),
        mode: serde_json::to_value(cfg.mode)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        grid: GridInfo::from(grid),
        derivative: format!("{:?}", cfg.derivative),
        jacobian: format!("{:?}", cfg.scheme),
        dealias: cfg.dealias,
        projection: cfg.projection,
        status: if traj.error.is_some() { "error" } else { "ok" }.into(),
        error: traj.error.as_ref().map(|e| e.to_string()),
        steps: traj.steps,
        t_final: traj.t,
    }
}

/// Builds the simulation a run mode needs.
pub fn simulation(cfg: &ScenarioConfig) -> Result<Box<dyn Simulation>, CliError> {
    match cfg.mode {
        Mode::Run2d => {
            let c = if cfg.classical { None } else { cfg.c };
            let solver = solver_2d(cfg, c)?;
            let state = initial_2d(cfg, &solver)?;
            Ok(Box::new(Sim2D { solver, state }))
        }
        Mode::Run3dBarotropic | Mode::Run3dGeneral | Mode::Baroclinic => {
            let solver = solver_3d(cfg)?;
            let state = initial_3d(cfg, &solver)?;
            Ok(Box::new(Sim3D { solver, state }))
        }
        Mode::BracketCheck | Mode::LimitStudy => Err(CliError::Validation(vec![format!(
            "mode {:?} is not a single time-dependent run",
            cfg.mode
        )])),
    }
}

/// Runs a single-simulation scenario with all outputs under `out`.
pub fn run(cfg: &ScenarioConfig, out: &Path) -> Result<Trajectory, CliError> {
    let dir = RunDir::create(out)?;
    std::fs::write(dir.config(), cfg.to_toml())?;
    let mut sim = match simulation(cfg) {
        Ok(sim) => sim,
        Err(e) => {
            let g = grid(cfg)?;
            let traj = Trajectory {
                records: Vec::new(),
                steps: 0,
                t: 0.0,
                error: Some(e),
            };
            write_manifest(&dir.root, &manifest(cfg, &g, &traj))?;
            return Ok(traj);
        }
    };
    let traj = integrate(cfg, sim.as_mut(), Some(&dir))?;
    write_manifest(&dir.root, &manifest(cfg, &sim.grid(), &traj))?;
    Ok(traj)
}
