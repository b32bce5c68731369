//! Results persistence: per-(scenario, solver) CSV series with a fixed
//! column contract, a JSON run manifest written before and finalized after
//! every run, and optional SVG quick-looks.

use crate::dynamics::{SolverKind, Trajectory};
use crate::observables::ObservableSeries;
use crate::scenario::Scenario;
use crate::svg;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const UNIT_NOTE: &str = "omega0 = v_g = k0 = 1";

/// How the one global sign/conjugation freedom of the kernel formulas was
/// fixed; recorded in every manifest.
pub const SIGN_CONVENTION_NOTE: &str = "integral-equation kernels assembled as printed; \
global sign fixed by requiring decaying single-atom dynamics and agreement with the \
mode-discretization oracle; photon kernel contracts conj(alpha_i) alpha_j";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub label: String,
    pub scenario_hash: String,
    pub code_version: String,
    pub unit_note: String,
    pub sign_convention: String,
    pub scenario: serde_json::Value,
    pub solvers: Vec<String>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_valid_step: Option<usize>,
    pub pre_normalization_norm: f64,
    pub warnings: Vec<String>,
    pub overrides: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
    pub max_norm_residual: BTreeMap<String, f64>,
    pub final_pe_total: BTreeMap<String, f64>,
    pub kernel_path_counts: BTreeMap<String, Vec<usize>>,
}

impl RunManifest {
    pub fn new(scenario: &Scenario, overrides: BTreeMap<String, String>) -> Self {
        let doc: serde_json::Value =
            serde_json::from_str(&crate::scenario::serialize_scenario_labeled(scenario))
                .expect("scenario serialization is valid JSON");
        RunManifest {
            label: scenario.label.clone(),
            scenario_hash: format!("{:016x}", scenario.content_hash()),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            unit_note: UNIT_NOTE.to_string(),
            sign_convention: SIGN_CONVENTION_NOTE.to_string(),
            scenario: doc,
            solvers: scenario.solvers.iter().map(|s| s.tag().to_string()).collect(),
            status: "running".to_string(),
            error: None,
            last_valid_step: None,
            pre_normalization_norm: 1.0,
            warnings: scenario.params.warnings(),
            overrides,
            wall_clock_seconds: None,
            max_norm_residual: BTreeMap::new(),
            final_pe_total: BTreeMap::new(),
            kernel_path_counts: BTreeMap::new(),
        }
    }
}

#[derive(Debug)]
pub struct IoFailure {
    pub path: PathBuf,
    pub source: std::io::Error,
}

impl std::fmt::Display for IoFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "I/O failure at {}: {}", self.path.display(), self.source)
    }
}

impl std::error::Error for IoFailure {}

type IoResult<T> = std::result::Result<T, IoFailure>;

fn write_file(path: &Path, bytes: &[u8]) -> IoResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| IoFailure {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, bytes).map_err(|source| IoFailure {
        path: path.to_path_buf(),
        source,
    })
}

pub fn manifest_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("{label}__manifest.json"))
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> IoResult<PathBuf> {
    let path = manifest_path(dir, &manifest.label);
    let json = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    write_file(&path, &json)?;
    Ok(path)
}

fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn csv_path(dir: &Path, label: &str, solver: SolverKind) -> PathBuf {
    dir.join(format!("{label}__{}.csv", solver.tag()))
}

/// Column contract: `t`, `re_alpha_i`/`im_alpha_i` for every atom,
/// `Pe_i` for every atom, `Pe_total`, `Nb`, `norm_residual`,
/// `Gamma_inst_total` (in units of `Gamma0`). 17 significant digits.
/// `Nb`/`norm_residual` are NaN where the photon number is not computed.
pub fn write_csv(
    dir: &Path,
    label: &str,
    traj: &Trajectory,
    obs: &ObservableSeries,
) -> IoResult<PathBuf> {
    let path = csv_path(dir, label, traj.solver);
    let n_atoms = traj.n_atoms;
    let n_rows = traj.n_steps() + 1;
    let mut buf = Vec::with_capacity(n_rows * (n_atoms * 2 + 6) * 26);
    writeln!(buf, "# units: {UNIT_NOTE}").expect("vec write");
    let mut header = String::from("t");
    for i in 1..=n_atoms {
        header.push_str(&format!(",re_alpha_{i},im_alpha_{i}"));
    }
    for i in 1..=n_atoms {
        header.push_str(&format!(",Pe_{i}"));
    }
    header.push_str(",Pe_total,Nb,norm_residual,Gamma_inst_total");
    writeln!(buf, "{header}").expect("vec write");

    for step in 0..n_rows {
        let t = step as f64 * traj.dt;
        let mut row = fmt_float(t);
        for atom in 0..n_atoms {
            let a = traj.amp(step, atom);
            row.push(',');
            row.push_str(&fmt_float(a.re));
            row.push(',');
            row.push_str(&fmt_float(a.im));
        }
        for atom in 0..n_atoms {
            row.push(',');
            row.push_str(&fmt_float(obs.pe(step, atom)));
        }
        row.push(',');
        row.push_str(&fmt_float(obs.pe_total[step]));
        row.push(',');
        row.push_str(&fmt_float(
            traj.photon_number.as_ref().map_or(f64::NAN, |v| v[step]),
        ));
        row.push(',');
        row.push_str(&fmt_float(
            traj.norm_residual.as_ref().map_or(f64::NAN, |v| v[step]),
        ));
        row.push(',');
        row.push_str(&fmt_float(obs.gamma_inst_total[step]));
        writeln!(buf, "{row}").expect("vec write");
    }
    write_file(&path, &buf)?;
    Ok(path)
}

/// Quick-look plots of the total instantaneous rate and population change.
pub fn write_quicklook_svgs(
    dir: &Path,
    label: &str,
    runs: &[(SolverKind, &ObservableSeries)],
) -> IoResult<Vec<PathBuf>> {
    let mut paths = Vec::new();
    let gamma_series: Vec<(String, Vec<(f64, f64)>)> = runs
        .iter()
        .map(|(solver, obs)| {
            (
                solver.tag().to_string(),
                obs.times
                    .iter()
                    .zip(&obs.gamma_inst_total)
                    .map(|(&t, &g)| (t, g))
                    .collect(),
            )
        })
        .collect();
    let series: Vec<svg::Series<'_>> = gamma_series
        .iter()
        .map(|(l, pts)| svg::Series { label: l.clone(), points: pts })
        .collect();
    let plot = svg::polyline_plot(
        &format!("{label}: instantaneous decay rate"),
        "t  [1/omega0]",
        "Gamma_inst / Gamma0",
        &series,
    );
    let p = dir.join(format!("{label}__gamma_inst.svg"));
    write_file(&p, plot.as_bytes())?;
    paths.push(p);

    let dpe_series: Vec<(String, Vec<(f64, f64)>)> = runs
        .iter()
        .map(|(solver, obs)| {
            (
                solver.tag().to_string(),
                obs.times
                    .iter()
                    .zip(&obs.dpe_over_gamma_total)
                    .map(|(&t, &d)| (t, d))
                    .collect(),
            )
        })
        .collect();
    let series: Vec<svg::Series<'_>> = dpe_series
        .iter()
        .map(|(l, pts)| svg::Series { label: l.clone(), points: pts })
        .collect();
    let plot = svg::polyline_plot(
        &format!("{label}: population change"),
        "t  [1/omega0]",
        "Delta P_e  [Gamma0/omega0]",
        &series,
    );
    let p = dir.join(format!("{label}__delta_pe.svg"));
    write_file(&p, plot.as_bytes())?;
    paths.push(p);
    Ok(paths)
}
