//! Scenario execution: kernel table preparation (with optional disk cache),
//! solver dispatch, observable assembly, and results writing.

use crate::dynamics::{
    attach_photon_number, solve_dde, solve_markov, solve_mode_oracle, solve_volterra,
    OracleSettings, SolverError, SolverKind, TimeGrid, Trajectory,
};
use crate::kernels::{
    build_kernel_table, load_kernel_table, save_kernel_table, KernelCacheKey, KernelConfig,
    KernelError, KernelTable,
};
use crate::observables::{build_observables, ObservableError, ObservableSeries};
use crate::output::{self, IoFailure, RunManifest};
use crate::scenario::{ConfigError, Scenario};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Kernel(KernelError),
    Solver(SolverError),
    Observable(ObservableError),
    Io(IoFailure),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Kernel(e) => write!(f, "{e}"),
            RunError::Solver(e) => write!(f, "{e}"),
            RunError::Observable(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    /// Exit-code contract: 0 success, 1 validation/physics failure,
    /// 2 configuration error, 3 numeric abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Kernel(KernelError::Domain(_)) => 2,
            RunError::Kernel(KernelError::Quadrature { .. }) => 3,
            RunError::Solver(SolverError::BlowUp { .. }) => 3,
            RunError::Solver(SolverError::NegativePhotonNumber { .. }) => 3,
            RunError::Solver(SolverError::RevivalTime { .. }) => 2,
            RunError::Solver(SolverError::Kernel(_)) => 3,
            RunError::Solver(SolverError::Domain(_)) => 2,
            RunError::Observable(_) => 1,
            RunError::Io(_) => 2,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}
impl From<KernelError> for RunError {
    fn from(e: KernelError) -> Self {
        RunError::Kernel(e)
    }
}
impl From<SolverError> for RunError {
    fn from(e: SolverError) -> Self {
        RunError::Solver(e)
    }
}
impl From<ObservableError> for RunError {
    fn from(e: ObservableError) -> Self {
        RunError::Observable(e)
    }
}
impl From<IoFailure> for RunError {
    fn from(e: IoFailure) -> Self {
        RunError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, RunError>;

/// One solver's trajectory and observables within a scenario run.
pub struct RunOutput {
    pub solver: SolverKind,
    pub trajectory: Trajectory,
    pub observables: ObservableSeries,
}

/// Kernel table for a scenario, loaded from the cache when possible.
pub fn kernel_table_for(scn: &Scenario, cache_dir: Option<&Path>) -> Result<KernelTable> {
    let classes = scn.geometry.distance_classes();
    let key = KernelCacheKey::new(
        scn.model,
        scn.geometry.content_hash(),
        scn.grid.dt,
        scn.grid.n_steps + 1,
        scn.params.lambda,
    );
    if let Some(dir) = cache_dir {
        if let Some(table) = load_kernel_table(dir, &key) {
            return Ok(table);
        }
    }
    let table = build_kernel_table(
        &KernelConfig::default(),
        scn.model,
        &classes,
        scn.grid.dt,
        scn.grid.n_steps,
        scn.params.lambda,
    )?;
    if let Some(dir) = cache_dir {
        // Cache write failures are not fatal to the run.
        let _ = save_kernel_table(dir, &key, &table);
    }
    Ok(table)
}

/// Mode count for an oracle run: enough modes that the revival time clears
/// the simulated window with margin.
pub fn oracle_settings_for(scn: &Scenario) -> OracleSettings {
    let guard = 4.0;
    let needed = (guard * scn.grid.t_max() * scn.params.lambda / std::f64::consts::PI).ceil();
    OracleSettings {
        n_modes: (needed as usize).next_power_of_two().max(2048),
        revival_guard: guard,
    }
}

/// Execute every requested solver of a scenario. The kernel table is built
/// once and shared; each solver run is deterministic.
pub fn run_solvers(scn: &Scenario, cache_dir: Option<&Path>) -> Result<Vec<RunOutput>> {
    let init = scn
        .initial
        .realize(&scn.geometry)
        .map_err(RunError::Config)?;
    let needs_table = scn.solvers.contains(&SolverKind::Volterra);
    let table = if needs_table {
        Some(kernel_table_for(scn, cache_dir)?)
    } else {
        None
    };
    let classes = scn.geometry.distance_classes();

    let scenario_hash = scn.content_hash();
    let mut outputs = Vec::with_capacity(scn.solvers.len());
    for &solver in &scn.solvers {
        let mut trajectory = match solver {
            SolverKind::Volterra => {
                let table = table.as_ref().expect("table built for volterra");
                let mut traj =
                    solve_volterra(&scn.params, &scn.geometry, &init.amplitudes, &scn.grid, table)?;
                attach_photon_number(&mut traj, table, scn.params.gamma, &classes)?;
                traj
            }
            SolverKind::Dde => solve_dde(&scn.params, &scn.geometry, &init.amplitudes, &scn.grid)?,
            SolverKind::Markov => {
                solve_markov(&scn.params, &scn.geometry, &init.amplitudes, &scn.grid)?
            }
            SolverKind::Oracle => solve_mode_oracle(
                &scn.params,
                &scn.geometry,
                scn.model,
                &init.amplitudes,
                &scn.grid,
                &oracle_settings_for(scn),
            )?,
        };
        trajectory.scenario_hash = scenario_hash;
        let observables = build_observables(&trajectory, scn.params.gamma, scn.smoothing_window)?;
        outputs.push(RunOutput {
            solver,
            trajectory,
            observables,
        });
    }
    Ok(outputs)
}

pub struct ScenarioRunResult {
    pub scenario: Scenario,
    pub outputs: Vec<RunOutput>,
    pub wall_seconds: f64,
    pub run_dir: PathBuf,
    pub csv_paths: Vec<PathBuf>,
}

/// Run a scenario and persist everything under
/// `out_root/<label>__<hash8>/`: manifest first (status "running"),
/// then CSVs, quick-looks when requested, and the finalized manifest.
pub fn execute_to_dir(
    scn: &Scenario,
    out_root: &Path,
    cache_dir: Option<&Path>,
    overrides: BTreeMap<String, String>,
    plots: bool,
) -> Result<ScenarioRunResult> {
    let run_dir = out_root.join(format!(
        "{}__{:08x}",
        scn.label,
        scn.content_hash() as u32
    ));
    let start = Instant::now();
    let mut manifest = RunManifest::new(scn, overrides);
    if let Ok(state) = scn.initial.realize(&scn.geometry) {
        manifest.pre_normalization_norm = state.pre_normalization_norm;
    }
    output::write_manifest(&run_dir, &manifest)?;

    match run_solvers(scn, cache_dir) {
        Ok(outputs) => {
            let mut csv_paths = Vec::new();
            for out in &outputs {
                csv_paths.push(output::write_csv(
                    &run_dir,
                    &scn.label,
                    &out.trajectory,
                    &out.observables,
                )?);
                manifest.final_pe_total.insert(
                    out.solver.tag().to_string(),
                    out.trajectory.pe_total(out.trajectory.n_steps()),
                );
                if let Some(r) = out.trajectory.max_norm_residual() {
                    manifest
                        .max_norm_residual
                        .insert(out.solver.tag().to_string(), r);
                }
            }
            if plots {
                let runs: Vec<(SolverKind, &ObservableSeries)> = outputs
                    .iter()
                    .map(|o| (o.solver, &o.observables))
                    .collect();
                output::write_quicklook_svgs(&run_dir, &scn.label, &runs)?;
            }
            manifest.status = "completed".to_string();
            manifest.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
            output::write_manifest(&run_dir, &manifest)?;
            Ok(ScenarioRunResult {
                scenario: scn.clone(),
                outputs,
                wall_seconds: start.elapsed().as_secs_f64(),
                run_dir,
                csv_paths,
            })
        }
        Err(e) => {
            manifest.status = "aborted".to_string();
            manifest.error = Some(e.to_string());
            manifest.last_valid_step = match &e {
                RunError::Solver(SolverError::BlowUp { step, .. }) => Some(step.saturating_sub(1)),
                RunError::Solver(SolverError::NegativePhotonNumber { step, .. }) => {
                    Some(step.saturating_sub(1))
                }
                _ => None,
            };
            manifest.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
            output::write_manifest(&run_dir, &manifest)?;
            Err(e)
        }
    }
}

/// Execute a plan's scenarios concurrently (they are independent; outputs
/// land in disjoint directories derived from the scenario hash).
pub fn execute_plan(
    scenarios: &[Scenario],
    out_root: &Path,
    cache_dir: Option<&Path>,
    overrides: BTreeMap<String, String>,
    plots: bool,
) -> Vec<Result<ScenarioRunResult>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|scn| {
                let overrides = overrides.clone();
                scope.spawn(move || execute_to_dir(scn, out_root, cache_dir, overrides, plots))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread")).collect()
    })
}

/// Single-atom Volterra run and quadratic fit of the short-time depletion,
/// for the Zeno-time cross-check.
pub fn zeno_fit_from_run(
    model: crate::kernels::CouplingModel,
    gamma: f64,
    lambda: f64,
    dt: f64,
    fit_horizon: f64,
) -> Result<crate::observables::ZenoFit> {
    let params = crate::dynamics::PhysicalParams::new(gamma, lambda)?;
    let geometry = crate::geometry::ChainGeometry::uniform(1, 1.0)
        .expect("single-atom geometry");
    let t_max = (2.0 * fit_horizon).max(4.0 * dt);
    let grid = TimeGrid::from_t_max(dt, t_max)?;
    let classes = geometry.distance_classes();
    let table = build_kernel_table(
        &KernelConfig::default(),
        model,
        &classes,
        grid.dt,
        grid.n_steps,
        lambda,
    )?;
    let init = [num_complex::Complex64::new(1.0, 0.0)];
    let traj = solve_volterra(&params, &geometry, &init, &grid, &table)?;
    let times = traj.times();
    let pe: Vec<f64> = (0..=traj.n_steps()).map(|m| traj.pe_total(m)).collect();
    crate::observables::fit_zeno(&times, &pe, fit_horizon).map_err(RunError::Observable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    fn tiny_scenario() -> Scenario {
        parse_scenario(
            r#"{"label": "tiny", "model": "constant", "gamma_ratio": 1e-3, "cutoff": 50,
                "N": 2, "spacing_over_pi": 0.1, "t_max": 2,
                "solvers": ["volterra", "dde", "markov"]}"#,
        )
        .unwrap()
    }

    #[test]
    fn runs_all_solvers_and_writes_outputs() {
        let scn = tiny_scenario();
        let root = std::env::temp_dir().join("wqed_runner_test");
        let _ = std::fs::remove_dir_all(&root);
        let res = execute_to_dir(&scn, &root, None, BTreeMap::new(), true).unwrap();
        assert_eq!(res.outputs.len(), 3);
        assert_eq!(res.csv_paths.len(), 3);
        for p in &res.csv_paths {
            assert!(p.exists(), "missing {}", p.display());
        }
        let manifest_text =
            std::fs::read_to_string(output::manifest_path(&res.run_dir, "tiny")).unwrap();
        let manifest: RunManifest = serde_json::from_str(&manifest_text).unwrap();
        assert_eq!(manifest.status, "completed");
        assert!(manifest.wall_clock_seconds.is_some());
        assert!(manifest.max_norm_residual.contains_key("volterra"));
        assert!(res.run_dir.join("tiny__gamma_inst.svg").exists());
        let _ = std::fs::remove_dir_all(&root);
    }

    #[test]
    fn identical_scenarios_give_identical_csv_bytes() {
        let scn = tiny_scenario();
        let root1 = std::env::temp_dir().join("wqed_runner_det1");
        let root2 = std::env::temp_dir().join("wqed_runner_det2");
        for r in [&root1, &root2] {
            let _ = std::fs::remove_dir_all(r);
        }
        let r1 = execute_to_dir(&scn, &root1, None, BTreeMap::new(), false).unwrap();
        let r2 = execute_to_dir(&scn, &root2, None, BTreeMap::new(), false).unwrap();
        for (p1, p2) in r1.csv_paths.iter().zip(&r2.csv_paths) {
            let b1 = std::fs::read(p1).unwrap();
            let b2 = std::fs::read(p2).unwrap();
            assert_eq!(b1, b2, "CSV bytes differ between identical runs");
        }
        for r in [&root1, &root2] {
            let _ = std::fs::remove_dir_all(r);
        }
    }

    #[test]
    fn aborted_run_leaves_aborted_manifest() {
        // A gamma far outside the weak-coupling regime with a coarse grid
        // makes the explicit marching unstable and trips the blow-up guard.
        let scn = parse_scenario(
            r#"{"label": "abort", "model": "constant", "gamma_ratio": 500.0, "cutoff": 50,
                "N": 1, "t_max": 10, "dt": 0.1, "solvers": ["volterra"]}"#,
        )
        .unwrap();
        let root = std::env::temp_dir().join("wqed_runner_abort");
        let _ = std::fs::remove_dir_all(&root);
        let err = match execute_to_dir(&scn, &root, None, BTreeMap::new(), false) {
            Err(e) => e,
            Ok(_) => panic!("expected the blow-up guard to abort the run"),
        };
        assert_eq!(err.exit_code(), 3);
        let dir = root.join(format!("abort__{:08x}", scn.content_hash() as u32));
        let manifest: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(output::manifest_path(&dir, "abort")).unwrap())
                .unwrap();
        assert_eq!(manifest.status, "aborted");
        assert!(manifest.last_valid_step.is_some());
        assert!(manifest.error.unwrap().contains("blow-up"));
        let _ = std::fs::remove_dir_all(&root);
    }

    #[test]
    fn oracle_solver_runs_through_the_scenario_api() {
        let scn = parse_scenario(
            r#"{"label": "oracle_ok", "model": "linear", "gamma_ratio": 1e-2, "cutoff": 50,
                "N": 1, "t_max": 1, "dt": 0.001, "solvers": ["oracle"]}"#,
        )
        .unwrap();
        let outs = run_solvers(&scn, None).unwrap();
        assert_eq!(outs.len(), 1);
        let traj = &outs[0].trajectory;
        assert!(traj.photon_number.is_some());
        assert!(traj.max_norm_residual().unwrap() < 1e-8);
        // At the production cutoff the default step cannot resolve the
        // fastest mode; that is a configuration-class error.
        let scn = parse_scenario(
            r#"{"label": "oracle_bad", "model": "linear", "gamma_ratio": 1e-2,
                "N": 1, "t_max": 1, "solvers": ["oracle"]}"#,
        )
        .unwrap();
        let err = match run_solvers(&scn, None) {
            Err(e) => e,
            Ok(_) => panic!("expected the oracle step-size guard to reject dt"),
        };
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn kernel_cache_round_trips_through_runner() {
        let scn = tiny_scenario();
        let cache = std::env::temp_dir().join("wqed_runner_cache");
        let _ = std::fs::remove_dir_all(&cache);
        let t1 = kernel_table_for(&scn, Some(&cache)).unwrap();
        assert!(cache.exists());
        let t2 = kernel_table_for(&scn, Some(&cache)).unwrap();
        assert_eq!(t1.a(1, 7), t2.a(1, 7));
        let _ = std::fs::remove_dir_all(&cache);
    }
}
