//! Drives one configured case from the initial state to `t_end`, writing
//! snapshots and CSV summaries into an output directory.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::constitutive::Phase;
use crate::diagnostics::{advance_fractions, mass_balance_residual, mixture_aggregates, DiagnosticsError, FractionField};
use crate::io::config::{Case, ConfigError, RunConfig, TimeConfig};
use crate::io::csv::{CsvTable, ProbeSeries};
use crate::io::vtk::{write_vtk, Field};
use crate::io::OutputError;
use crate::mechanics::{chi_field, MechError, MechSolver, MechState};
use crate::mesh::{Mesh, MeshError};
use crate::mms::{observed_rates, ConvergenceRow, MechMms, ThermalMms};
use crate::thermal::{centerline_profile, element_gas_conductivity, NoForcing, ThermalError, ThermalSolver, ThermalState};
use crate::Vec2;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("mechanical solve failed: {0}")]
    Mech(#[from] MechError),
    #[error("thermal solve failed: {0}")]
    Thermal(#[from] ThermalError),
    #[error("diagnostics: {0}")]
    Diagnostics(#[from] DiagnosticsError),
}

impl RunError {
    /// Process exit code: 1 for configuration and output problems, 2 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Output(_) | RunError::Mesh(_) => 1,
            RunError::Mech(_) | RunError::Thermal(_) | RunError::Diagnostics(_) => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub steps: usize,
    pub snapshots: usize,
    pub files: Vec<PathBuf>,
    /// Probe samples at every snapshot.
    pub probes: Option<ProbeSeries>,
    /// Lowest and highest nodal temperature over all steps (thermal case).
    pub theta_range: Option<(f64, f64)>,
    /// Largest Newton iteration count of any step (thermal cases).
    pub max_newton: usize,
    pub convergence: Vec<ConvergenceRow>,
}

/// Step count and snapshot flags for a fixed step size. The last step may
/// end past `t_end` when `t_end` is not a multiple of `dt`.
pub fn schedule(time: &TimeConfig) -> (usize, Vec<bool>) {
    let n = ((time.t_end / time.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut flags = vec![false; n + 1];
    flags[0] = true;
    flags[n] = true;
    let mut next = time.snapshot_interval;
    for (k, flag) in flags.iter_mut().enumerate().skip(1) {
        let t = k as f64 * time.dt;
        if t >= next - 1e-9 * time.dt {
            *flag = true;
            while next <= t + 1e-9 * time.dt {
                next += time.snapshot_interval;
            }
        }
    }
    (n, flags)
}

fn build_mesh(cfg: &RunConfig) -> Result<Mesh, RunError> {
    let m = cfg.mesh.as_ref().ok_or_else(|| missing(cfg, "mesh"))?;
    Ok(Mesh::rectangle(m.lx, m.ly, m.nx, m.ny, m.pattern)?)
}

fn missing(cfg: &RunConfig, table: &str) -> RunError {
    RunError::Config(ConfigError::Invalid(vec![format!(
        "case '{}' requires a [{table}] table",
        cfg.case.as_str()
    )]))
}

/// Runs the configured case, writing into `out`.
pub fn run(cfg: &RunConfig, out: &Path, log: &mut dyn FnMut(&str)) -> Result<RunSummary, RunError> {
    std::fs::create_dir_all(out).map_err(|source| OutputError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    match cfg.case {
        Case::Mechanical => run_mechanical(cfg, out, log),
        Case::Thermal => run_thermal(cfg, out, log),
        Case::MmsMechanical => run_mms_mechanical(cfg, out, log),
        Case::MmsThermal => run_mms_thermal(cfg, out, log),
    }
}

fn components(v: &[Vec2]) -> (Vec<f64>, Vec<f64>) {
    (v.iter().map(|x| x.x).collect(), v.iter().map(|x| x.y).collect())
}

fn run_mechanical(cfg: &RunConfig, out: &Path, log: &mut dyn FnMut(&str)) -> Result<RunSummary, RunError> {
    let mesh = build_mesh(cfg)?;
    let mech = cfg.mechanical.as_ref().ok_or_else(|| missing(cfg, "mechanical"))?;
    let time = cfg.time.ok_or_else(|| missing(cfg, "time"))?;
    let (n_steps, snap) = schedule(&time);
    let mut solver = MechSolver::new(&mesh, mech.params, cfg.solver.mech)?;
    let mut state = MechState::zeros(&mesh);
    let mut chi = chi_field(&mesh, &state, &mech.params);
    let fields = ["p_pa", "u_s_x_m", "u_s_y_m", "u_f_x_m", "u_f_y_m"];
    let mut probes = ProbeSeries::new(
        &mesh,
        cfg.output.probes.clone(),
        fields
            .iter()
            .map(|f| {
                let (name, unit) = f.rsplit_once('_').expect("field names carry a unit");
                (name.to_string(), unit.to_string())
            })
            .collect(),
    )?;
    let mut mixture = CsvTable::new(
        [
            "t_s",
            "rho_kg_m3",
            "v_x_m_s",
            "v_y_m_s",
            "stress_xx_pa",
            "stress_xy_pa",
            "stress_yy_pa",
            "max_mass_residual_s_per_s",
            "max_mass_residual_g_per_s",
            "max_mass_residual_f_per_s",
        ]
        .map(String::from)
        .to_vec(),
    );
    let f0 = mech.params.fractions;
    let mut fractions: FractionField = vec![[f0.solid, f0.gas, f0.fiber]; mesh.n_elements()];
    let mut summary = RunSummary::default();

    for k in 0..=n_steps {
        let prev = state.clone();
        let prev_fractions = fractions.clone();
        if k > 0 {
            let step = solver.step(&state, &mech.bcs, time.dt)?;
            state = step.state;
            chi = step.chi;
            fractions = advance_fractions(&mesh, &fractions, &prev, &state);
        }
        if !snap[k] {
            continue;
        }
        let (usx, usy) = components(&state.u_s);
        let (ufx, ufy) = components(&state.u_f);
        probes.record(&mesh, state.time, &[&state.p, &usx, &usy, &ufx, &ufy])?;
        if cfg.output.vtk {
            let path = out.join(format!("mechanical_{:05}.vtk", summary.snapshots));
            write_vtk(
                &mesh,
                &format!("mechanical t = {:.16e} s", state.time),
                &[
                    Field::PointScalar("p", &state.p),
                    Field::PointVector("u_s", &state.u_s),
                    Field::PointVector("u_f", &state.u_f),
                    Field::CellVector("darcy_flux", &state.flux),
                    Field::CellScalar("chi", &chi),
                ],
                &path,
            )?;
            summary.files.push(path);
        }
        if let (Some(th), true) = (&cfg.thermal, k > 0) {
            let points = mixture_aggregates(&mesh, &prev, &state, &mech.params, &th.params, None)?;
            let n = points.len() as f64;
            let mut row = vec![state.time, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
            for (_, m) in &points {
                row[1] += m.density / n;
                row[2] += m.velocity.x / n;
                row[3] += m.velocity.y / n;
                row[4] += m.stress[(0, 0)] / n;
                row[5] += m.stress[(0, 1)] / n;
                row[6] += m.stress[(1, 1)] / n;
            }
            let residual = mass_balance_residual(&mesh, (&prev, &prev_fractions), (&state, &fractions))?;
            for phase in Phase::ALL {
                let worst = residual.iter().map(|r| r[phase.index()].abs()).fold(0.0, f64::max);
                row.push(worst);
            }
            mixture.rows.push(row);
        }
        summary.snapshots += 1;
        log(&format!(
            "mechanical t = {:.6e} s  step {k}/{n_steps}  max |p| = {:.6e} Pa",
            state.time,
            state.p.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
        ));
    }
    let path = out.join("probes.csv");
    probes.to_table().write(&path)?;
    summary.files.push(path);
    if cfg.thermal.is_some() {
        let path = out.join("mixture.csv");
        mixture.write(&path)?;
        summary.files.push(path);
    }
    summary.steps = n_steps;
    summary.probes = Some(probes);
    Ok(summary)
}

fn run_thermal(cfg: &RunConfig, out: &Path, log: &mut dyn FnMut(&str)) -> Result<RunSummary, RunError> {
    let mesh = build_mesh(cfg)?;
    let th = cfg.thermal.as_ref().ok_or_else(|| missing(cfg, "thermal"))?;
    let time = cfg.time.ok_or_else(|| missing(cfg, "time"))?;
    let (n_steps, snap) = schedule(&time);
    let mut solver = ThermalSolver::new(&mesh, th.params, th.bcs.clone(), cfg.solver.mass)?;
    let kappa_g = element_gas_conductivity(&mesh, &th.params)?;
    let mut state = ThermalState::uniform(&mesh, th.params.theta_cold);
    let mut probes = ProbeSeries::new(
        &mesh,
        cfg.output.probes.clone(),
        Phase::ALL.iter().map(|p| (format!("theta_{}", p.suffix()), "k".to_string())).collect(),
    )?;
    let mut profile = CsvTable::new(["t_s", "y_m", "theta_s_k", "theta_g_k", "theta_f_k"].map(String::from).to_vec());
    let mut energy = CsvTable::new(["t_s", "stored_energy_j_m", "boundary_inflow_j_m"].map(String::from).to_vec());
    let e0 = solver.stored_energy(&state);
    let mut inflow = 0.0;
    let mut summary = RunSummary {
        theta_range: Some(state.range()),
        ..Default::default()
    };

    for k in 0..=n_steps {
        if k > 0 {
            let step = solver.step(&state, &NoForcing, time.dt, &cfg.solver.newton)?;
            summary.max_newton = summary.max_newton.max(step.iterations);
            state = step.state;
            inflow += time.dt * solver.robin_inflow(&state);
            let (lo, hi) = state.range();
            summary.theta_range = summary.theta_range.map(|(a, b)| (a.min(lo), b.max(hi)));
        }
        if !snap[k] {
            continue;
        }
        probes.record(&mesh, state.time, &[state.phase(Phase::Solid), state.phase(Phase::Gas), state.phase(Phase::Fiber)])?;
        for row in centerline_profile(&state, &mesh, cfg.output.profile_x_frac)? {
            profile.rows.push(vec![state.time, row.y, row.theta[0], row.theta[1], row.theta[2]]);
        }
        energy.rows.push(vec![state.time, solver.stored_energy(&state) - e0, inflow]);
        if cfg.output.vtk {
            let path = out.join(format!("thermal_{:05}.vtk", summary.snapshots));
            write_vtk(
                &mesh,
                &format!("thermal t = {:.16e} s", state.time),
                &[
                    Field::PointScalar("theta_s", state.phase(Phase::Solid)),
                    Field::PointScalar("theta_g", state.phase(Phase::Gas)),
                    Field::PointScalar("theta_f", state.phase(Phase::Fiber)),
                    Field::CellScalar("kappa_g", &kappa_g),
                ],
                &path,
            )?;
            summary.files.push(path);
        }
        summary.snapshots += 1;
        let (lo, hi) = state.range();
        log(&format!(
            "thermal t = {:.6e} s  step {k}/{n_steps}  theta in [{lo:.6}, {hi:.6}] K",
            state.time
        ));
    }
    for (name, table) in [("probes.csv", probes.to_table()), ("profile.csv", profile), ("energy.csv", energy)] {
        let path = out.join(name);
        table.write(&path)?;
        summary.files.push(path);
    }
    summary.steps = n_steps;
    summary.probes = Some(probes);
    Ok(summary)
}

fn convergence_table(rows: &[ConvergenceRow], with_newton: bool) -> CsvTable {
    let mut header = vec!["n".to_string(), "h_m".to_string()];
    if let Some(first) = rows.first() {
        header.extend(first.errors.iter().map(|(name, _)| format!("l2_error_{name}")));
    }
    if with_newton {
        header.push("max_newton".into());
    }
    let mut table = CsvTable::new(header);
    for r in rows {
        let mut row = vec![r.n as f64, r.h];
        row.extend(r.errors.iter().map(|(_, e)| *e));
        if with_newton {
            row.push(r.max_newton as f64);
        }
        table.rows.push(row);
    }
    table
}

fn log_rates(rows: &[ConvergenceRow], log: &mut dyn FnMut(&str)) {
    let Some(first) = rows.first() else { return };
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    for (i, (name, _)) in first.errors.iter().enumerate() {
        let e: Vec<f64> = rows.iter().map(|r| r.errors[i].1).collect();
        let rates: Vec<String> = observed_rates(&h, &e).iter().map(|r| format!("{r:.3}")).collect();
        log(&format!("observed L2 rates of {name}: {}", rates.join(", ")));
    }
}

fn run_mms_mechanical(cfg: &RunConfig, out: &Path, log: &mut dyn FnMut(&str)) -> Result<RunSummary, RunError> {
    let mms = MechMms::standard();
    let mut summary = RunSummary::default();
    for &n in &cfg.mms.levels {
        let row = mms.errors(n, cfg.mms.dt, cfg.mms.steps)?;
        log(&format!("mms-mechanical n = {n}: {:?}", row.errors));
        summary.convergence.push(row);
    }
    log_rates(&summary.convergence, log);
    let path = out.join("convergence.csv");
    convergence_table(&summary.convergence, false).write(&path)?;
    summary.files.push(path);
    summary.steps = cfg.mms.steps;
    Ok(summary)
}

fn run_mms_thermal(cfg: &RunConfig, out: &Path, log: &mut dyn FnMut(&str)) -> Result<RunSummary, RunError> {
    let mut mms = ThermalMms::standard();
    mms.mass = cfg.solver.mass;
    let mut summary = RunSummary::default();
    for &n in &cfg.mms.levels {
        let row = mms.errors(n, cfg.mms.dt, cfg.mms.steps, &cfg.solver.newton)?;
        log(&format!("mms-thermal n = {n}: {:?}, max Newton iterations {}", row.errors, row.max_newton));
        summary.max_newton = summary.max_newton.max(row.max_newton);
        summary.convergence.push(row);
    }
    log_rates(&summary.convergence, log);
    let path = out.join("convergence.csv");
    convergence_table(&summary.convergence, true).write(&path)?;
    summary.files.push(path);
    summary.steps = cfg.mms.steps;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_hits_intervals_and_ends() {
        let (n, flags) = schedule(&TimeConfig {
            dt: 0.1,
            t_end: 1.0,
            snapshot_interval: 0.25,
        });
        assert_eq!(n, 10);
        let snaps: Vec<usize> = (0..=n).filter(|&k| flags[k]).collect();
        assert_eq!(snaps, vec![0, 3, 5, 8, 10]);
    }

    #[test]
    fn schedule_every_step() {
        let (n, flags) = schedule(&TimeConfig {
            dt: 0.1,
            t_end: 0.8,
            snapshot_interval: 0.1,
        });
        assert_eq!(n, 8);
        assert!(flags.iter().all(|f| *f));
    }
}
