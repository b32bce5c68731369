//! `wqed`: runs, figure reproduction, validation suites, and Zeno-time
//! computations for collective emission of an atom chain in a 1D waveguide.
//!
//! Exit codes: 0 success, 1 validation/physics check failure,
//! 2 configuration error, 3 numeric abort (blow-up or negative photon
//! number).

use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use wqed::kernels::CouplingModel;
use wqed::runner::{execute_plan, RunError, ScenarioRunResult};
use wqed::scenario::{parse_run_plan, Scenario, PRESET_NAMES};

mod reproduce;

#[derive(Parser)]
#[command(
    name = "wqed",
    version,
    about = "Collective emission of an atom chain coupled to a 1D waveguide: \
             memory-kernel, retardation-only, and Markovian dynamics",
    after_help = "Units: omega0 = v_g = k0 = 1. Exit codes: 0 ok, 1 check failure, \
                  2 configuration error, 3 numeric abort."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file or a named preset
    Run(RunArgs),
    /// Closed-form Zeno time, optionally cross-checked by a short run
    Zeno(ZenoArgs),
    /// Run the numerical validation suite
    Validate(ValidateArgs),
    /// Reproduce a figure preset: CSV series plus quick-look SVG panels
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a JSON scenario document
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset (fig1bc, fig2ab, fig2cd, fig2e, fig3, spfig)
    #[arg(long)]
    preset: Option<String>,
    /// Output root directory (default: $WQED_OUT_ROOT or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the time step
    #[arg(long)]
    dt: Option<f64>,
    /// Override the time window
    #[arg(long)]
    tmax: Option<f64>,
    /// Override the solver list (comma separated: volterra,dde,markov,oracle)
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<String>>,
    /// Kernel-table cache directory
    #[arg(long)]
    kernel_cache: Option<PathBuf>,
    /// Emit quick-look SVG plots alongside the CSVs
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct ZenoArgs {
    /// Coupling model: constant | linear
    #[arg(long)]
    model: String,
    /// Gamma0/omega0
    #[arg(long)]
    gamma: f64,
    /// Lambda/k0 (needed by the linear model)
    #[arg(long, default_value_t = 1e4)]
    cutoff: f64,
    /// Also run a short single-atom simulation and fit the Zeno time
    #[arg(long)]
    fit_from_run: bool,
    /// Time step of the fit run
    #[arg(long, default_value_t = 0.005)]
    dt: f64,
    /// Fit horizon in units of 1/omega0
    #[arg(long, default_value_t = 0.2)]
    fit_horizon: f64,
}

#[derive(Args)]
struct ValidateArgs {
    /// quick | full
    #[arg(long, default_value = "quick")]
    level: String,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Figure id: fig1bc, fig2a/fig2ab, fig2b, fig2cd, fig2e, fig3, spfig
    #[arg(long)]
    figure: String,
    /// Output root directory (default: $WQED_OUT_ROOT or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Kernel-table cache directory
    #[arg(long)]
    kernel_cache: Option<PathBuf>,
}

fn out_root(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os("WQED_OUT_ROOT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn run_error(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

/// Build the run plan from --config/--preset plus the override flags, which
/// always win and are recorded in the manifest.
fn build_plan(args: &RunArgs) -> Result<(Vec<Scenario>, BTreeMap<String, String>), String> {
    let mut doc: serde_json::Map<String, serde_json::Value> = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| {
                format!(
                    "configuration parse error in {}: {e} (line {}, column {})",
                    path.display(),
                    e.line(),
                    e.column()
                )
            })?
        }
        (None, Some(name)) => {
            let mut m = serde_json::Map::new();
            m.insert("preset".into(), serde_json::Value::String(name.clone()));
            m
        }
        (None, None) => return Err("one of --config or --preset is required".into()),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let mut overrides = BTreeMap::new();
    if let Some(dt) = args.dt {
        doc.insert("dt".into(), serde_json::json!(dt));
        overrides.insert("dt".into(), dt.to_string());
    }
    if let Some(tmax) = args.tmax {
        doc.insert("t_max".into(), serde_json::json!(tmax));
        overrides.insert("t_max".into(), tmax.to_string());
    }
    if let Some(solvers) = &args.solvers {
        doc.insert("solvers".into(), serde_json::json!(solvers));
        overrides.insert("solvers".into(), solvers.join(","));
    }
    let text = serde_json::Value::Object(doc).to_string();
    let plan = parse_run_plan(&text).map_err(|e| e.to_string())?;
    Ok((plan, overrides))
}

fn print_summary(results: &[ScenarioRunResult]) {
    println!(
        "{:<34} {:<9} {:>14} {:>14} {:>9}",
        "scenario", "solver", "final Pe_total", "max |resid|", "wall [s]"
    );
    for r in results {
        for out in &r.outputs {
            let n = out.trajectory.n_steps();
            let resid = out
                .trajectory
                .max_norm_residual()
                .map_or("-".to_string(), |v| format!("{v:.2e}"));
            println!(
                "{:<34} {:<9} {:>14.6e} {:>14} {:>9.1}",
                r.scenario.label,
                out.solver.tag(),
                out.trajectory.pe_total(n),
                resid,
                r.wall_seconds
            );
        }
    }
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let (plan, overrides) = match build_plan(&args) {
        Ok(p) => p,
        Err(e) => return config_error(e),
    };
    let out = out_root(args.out);
    let results = execute_plan(
        &plan,
        &out,
        args.kernel_cache.as_deref(),
        overrides,
        args.plots,
    );
    let mut ok = Vec::new();
    for res in results {
        match res {
            Ok(r) => ok.push(r),
            Err(e) => return run_error(&e),
        }
    }
    print_summary(&ok);
    println!("results under {}", out.display());
    ExitCode::SUCCESS
}

fn cmd_zeno(args: ZenoArgs) -> ExitCode {
    let model = match CouplingModel::from_str(&args.model) {
        Ok(m) => m,
        Err(e) => return config_error(e),
    };
    let closed = match wqed::observables::zeno_closed_form(model, args.gamma, args.cutoff) {
        Ok(tau) => tau,
        Err(e) => return config_error(e),
    };
    println!("closed-form tau_Z = {closed:.4}  [1/omega0]  ({model}, gamma = {:e})", args.gamma);
    if args.fit_from_run {
        match wqed::runner::zeno_fit_from_run(model, args.gamma, args.cutoff, args.dt, args.fit_horizon) {
            Ok(fit) => {
                let dev = (fit.tau / closed - 1.0) * 100.0;
                println!(
                    "fitted tau_Z     = {:.4}  [1/omega0]  (horizon {}, {} samples, residual {:.2e})",
                    fit.tau, args.fit_horizon, fit.points_used, fit.residual
                );
                println!("relative deviation from the closed form: {dev:+.2}%");
                if fit.quadratic_regime_warning {
                    println!("warning: residual is large; the series left the quadratic regime inside the fit window");
                }
            }
            Err(e) => return run_error(&e),
        }
    }
    ExitCode::SUCCESS
}

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    let reports = match args.level.as_str() {
        "quick" => wqed::checks::quick_suite(),
        "full" => wqed::checks::full_suite(),
        other => return config_error(format!("unknown level '{other}' (quick | full)")),
    };
    let mut all_passed = true;
    for r in &reports {
        println!("{}", r.line());
        all_passed &= r.passed;
    }
    if args.level == "full" {
        // Known discrepancy, reported for transparency and asserted red in
        // the acceptance suite: the linear-model closed form keeps only the
        // leading logarithm of the cutoff.
        if let Ok(fit) =
            wqed::runner::zeno_fit_from_run(CouplingModel::Linear, 1e-4, 1e4, 0.005, 0.2)
        {
            let closed = wqed::observables::zeno_closed_form(CouplingModel::Linear, 1e-4, 1e4)
                .expect("valid parameters");
            println!(
                "[INFO] linear-model Zeno fit {:.2} vs leading-log closed form {closed:.2} \
                 ({:+.0}%): known discrepancy, see README and the acceptance suite",
                fit.tau,
                (fit.tau / closed - 1.0) * 100.0
            );
        }
    }
    if all_passed {
        println!("validation {}: all checks passed", args.level);
        ExitCode::SUCCESS
    } else {
        println!("validation {}: FAILURES above", args.level);
        ExitCode::from(1)
    }
}

fn cmd_reproduce(args: ReproduceArgs) -> ExitCode {
    let out = out_root(args.out);
    match reproduce::reproduce_figure(&args.figure, &out, args.kernel_cache.as_deref()) {
        Ok(paths) => {
            for p in &paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(reproduce::ReproduceError::UnknownFigure(msg)) => config_error(msg),
        Err(reproduce::ReproduceError::Run(e)) => run_error(&e),
    }
}

fn main() -> ExitCode {
    let _ = PRESET_NAMES; // referenced by help text through the modules
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Zeno(args) => cmd_zeno(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Reproduce(args) => cmd_reproduce(args),
    }
}
