//! Figure reproduction: run a preset bundle, persist the CSV series, and
//! emit per-panel SVG overlays of the quantities each panel shows.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use wqed::dynamics::SolverKind;
use wqed::kernels::CouplingModel;
use wqed::observables::ObservableSeries;
use wqed::runner::{execute_plan, RunError, ScenarioRunResult};
use wqed::scenario::preset;
use wqed::svg;

pub enum ReproduceError {
    UnknownFigure(String),
    Run(RunError),
}

fn window(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(&t, &v)| (t, v))
        .collect()
}

struct Panel {
    file: String,
    title: String,
    y_label: String,
    series: Vec<(String, Vec<(f64, f64)>)>,
}

impl Panel {
    fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let series: Vec<svg::Series<'_>> = self
            .series
            .iter()
            .map(|(label, pts)| svg::Series {
                label: label.clone(),
                points: pts,
            })
            .collect();
        let body = svg::polyline_plot(&self.title, "t  [1/omega0]", &self.y_label, &series);
        let path = dir.join(&self.file);
        std::fs::write(&path, body)?;
        Ok(path)
    }
}

struct Bundle<'a> {
    results: &'a [ScenarioRunResult],
}

impl<'a> Bundle<'a> {
    fn obs(
        &self,
        model: CouplingModel,
        solver: SolverKind,
        gamma: Option<f64>,
        n_atoms: Option<usize>,
    ) -> Option<&'a ObservableSeries> {
        self.results
            .iter()
            .find(|r| {
                r.scenario.model == model
                    && gamma.is_none_or(|g| (r.scenario.params.gamma - g).abs() < 1e-18)
                    && n_atoms.is_none_or(|n| r.scenario.geometry.n_atoms() == n)
                    && r.outputs.iter().any(|o| o.solver == solver)
            })
            .and_then(|r| r.outputs.iter().find(|o| o.solver == solver))
            .map(|o| &o.observables)
    }
}

fn gamma_inst_series(obs: &ObservableSeries, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    window(&obs.times, &obs.gamma_inst_total, lo, hi)
}

fn per_atom_gamma(obs: &ObservableSeries, atom: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    match &obs.gamma_inst_per_atom[atom] {
        Some(series) => window(&obs.times, series, lo, hi),
        None => Vec::new(),
    }
}

fn dpe_atom_series(obs: &ObservableSeries, atom: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let n = obs.times.len();
    let series: Vec<f64> = (0..n).map(|m| obs.dpe_over_gamma(m, atom)).collect();
    window(&obs.times, &series, lo, hi)
}

pub fn reproduce_figure(
    figure: &str,
    out_root: &Path,
    cache: Option<&Path>,
) -> Result<Vec<PathBuf>, ReproduceError> {
    let canonical = match figure {
        "fig1b" | "fig1c" | "fig1bc" => "fig1bc",
        "fig2a" | "fig2b" | "fig2ab" => "fig2ab",
        "fig2c" | "fig2d" | "fig2cd" => "fig2cd",
        "fig2e" => "fig2e",
        "fig3" => "fig3",
        "spfig" | "figsp" => "spfig",
        other => {
            return Err(ReproduceError::UnknownFigure(format!(
                "unknown figure '{other}' (try fig1bc, fig2ab, fig2cd, fig2e, fig3, spfig)"
            )))
        }
    };
    let plan = preset(canonical).map_err(|e| ReproduceError::Run(RunError::Config(e)))?;
    let dir = out_root.join(canonical);
    let results = execute_plan(&plan, &dir, cache, BTreeMap::new(), false);
    let mut ok = Vec::new();
    let mut paths = Vec::new();
    for r in results {
        match r {
            Ok(res) => {
                paths.extend(res.csv_paths.clone());
                ok.push(res);
            }
            Err(e) => return Err(ReproduceError::Run(e)),
        }
    }
    let bundle = Bundle { results: &ok };

    let mut panels: Vec<Panel> = Vec::new();
    use CouplingModel::{Constant, Linear};
    use SolverKind::{Dde, Markov, Volterra};
    match canonical {
        "fig1bc" => {
            for (gamma, tag) in [(1e-2, "1e-2"), (1e-3, "1e-3"), (1e-6, "1e-6")] {
                let c = bundle.obs(Constant, Volterra, Some(gamma), None).unwrap();
                let l = bundle.obs(Linear, Volterra, Some(gamma), None).unwrap();
                for (suffix, hi) in [("short", 10.0), ("long", 50.0)] {
                    panels.push(Panel {
                        file: format!("fig1bc_g{tag}_{suffix}.svg"),
                        title: format!("single-atom rate, gamma = {tag}"),
                        y_label: "Gamma_inst / Gamma0".into(),
                        series: vec![
                            ("constant".into(), gamma_inst_series(c, 0.0, hi)),
                            ("linear".into(), gamma_inst_series(l, 0.0, hi)),
                        ],
                    });
                }
            }
        }
        "fig2ab" => {
            let c = bundle.obs(Constant, Volterra, None, None).unwrap();
            let l = bundle.obs(Linear, Volterra, None, None).unwrap();
            let d = bundle.obs(Constant, Dde, None, None).unwrap();
            panels.push(Panel {
                file: "fig2a_total_rate.svg".into(),
                title: "20-atom chain: total Gamma_inst".into(),
                y_label: "Gamma_inst / Gamma0".into(),
                series: vec![
                    ("constant".into(), gamma_inst_series(c, 0.0, 10.0)),
                    ("linear".into(), gamma_inst_series(l, 0.0, 10.0)),
                    ("retard".into(), gamma_inst_series(d, 0.0, 10.0)),
                ],
            });
            for atom in [1usize, 2, 5, 10, 20] {
                panels.push(Panel {
                    file: format!("fig2b_atom{atom:02}.svg"),
                    title: format!("atom {atom} Gamma_inst"),
                    y_label: "Gamma_inst / Gamma0".into(),
                    series: vec![
                        ("constant".into(), per_atom_gamma(c, atom - 1, 0.0, 10.0)),
                        ("linear".into(), per_atom_gamma(l, atom - 1, 0.0, 10.0)),
                        ("retard".into(), per_atom_gamma(d, atom - 1, 0.0, 10.0)),
                    ],
                });
            }
        }
        "fig2cd" => {
            for (gamma, tag) in [(1e-2, "1e-2"), (1e-3, "1e-3"), (1e-6, "1e-6")] {
                let c = bundle.obs(Constant, Volterra, Some(gamma), None).unwrap();
                let l = bundle.obs(Linear, Volterra, Some(gamma), None).unwrap();
                let d = bundle.obs(Constant, Dde, Some(gamma), None).unwrap();
                for (panel, atom) in [("c", 1usize), ("d", 10)] {
                    panels.push(Panel {
                        file: format!("fig2{panel}_g{tag}.svg"),
                        title: format!("atom {atom} Delta P_e, gamma = {tag}"),
                        y_label: "Delta P_e  [Gamma0/omega0]".into(),
                        series: vec![
                            ("constant".into(), dpe_atom_series(c, atom - 1, 0.0, 50.0)),
                            ("linear".into(), dpe_atom_series(l, atom - 1, 0.0, 50.0)),
                            ("retard".into(), dpe_atom_series(d, atom - 1, 0.0, 50.0)),
                        ],
                    });
                }
            }
        }
        "fig2e" => {
            for (gamma, tag) in [(1e-2, "1e-2"), (1e-3, "1e-3"), (1e-6, "1e-6")] {
                let c = bundle.obs(Constant, Volterra, Some(gamma), Some(10)).unwrap();
                let l = bundle.obs(Linear, Volterra, Some(gamma), Some(10)).unwrap();
                let d = bundle.obs(Constant, Dde, Some(gamma), Some(10)).unwrap();
                let m = bundle.obs(Constant, Markov, Some(gamma), Some(10)).unwrap();
                panels.push(Panel {
                    file: format!("fig2e_chain_atom10_g{tag}.svg"),
                    title: format!("chain atom 10, late window, gamma = {tag}"),
                    y_label: "Delta P_e  [Gamma0/omega0]".into(),
                    series: vec![
                        ("constant".into(), dpe_atom_series(c, 9, 45.0, 50.0)),
                        ("linear".into(), dpe_atom_series(l, 9, 45.0, 50.0)),
                        ("retard".into(), dpe_atom_series(d, 9, 45.0, 50.0)),
                        ("markov".into(), dpe_atom_series(m, 9, 45.0, 50.0)),
                    ],
                });
                let sc = bundle.obs(Constant, Volterra, Some(gamma), Some(1)).unwrap();
                let sl = bundle.obs(Linear, Volterra, Some(gamma), Some(1)).unwrap();
                let sm = bundle.obs(Constant, Markov, Some(gamma), Some(1)).unwrap();
                panels.push(Panel {
                    file: format!("fig2e_single_g{tag}.svg"),
                    title: format!("single atom, late window, gamma = {tag}"),
                    y_label: "Delta P_e  [Gamma0/omega0]".into(),
                    series: vec![
                        ("constant".into(), dpe_atom_series(sc, 0, 45.0, 50.0)),
                        ("linear".into(), dpe_atom_series(sl, 0, 45.0, 50.0)),
                        ("markov".into(), dpe_atom_series(sm, 0, 45.0, 50.0)),
                    ],
                });
            }
        }
        "fig3" => {
            let c = bundle.obs(Constant, Volterra, None, None).unwrap();
            let l = bundle.obs(Linear, Volterra, None, None).unwrap();
            let d = bundle.obs(Constant, Dde, None, None).unwrap();
            panels.push(Panel {
                file: "fig3a_total_rate.svg".into(),
                title: "subradiant chain: total Gamma_inst".into(),
                y_label: "Gamma_inst / Gamma0".into(),
                series: vec![
                    ("constant".into(), gamma_inst_series(c, 0.0, 10.0)),
                    ("linear".into(), gamma_inst_series(l, 0.0, 10.0)),
                    ("retard".into(), gamma_inst_series(d, 0.0, 10.0)),
                ],
            });
            let dpe_total = |obs: &ObservableSeries| window(&obs.times, &obs.dpe_over_gamma_total, 0.0, 10.0);
            panels.push(Panel {
                file: "fig3b_total_dpe.svg".into(),
                title: "subradiant chain: total Delta P_e".into(),
                y_label: "Delta P_e  [Gamma0/omega0]".into(),
                series: vec![
                    ("constant".into(), dpe_total(c)),
                    ("linear".into(), dpe_total(l)),
                    ("retard".into(), dpe_total(d)),
                ],
            });
        }
        "spfig" => {
            let c = bundle.obs(Constant, Volterra, None, None).unwrap();
            let l = bundle.obs(Linear, Volterra, None, None).unwrap();
            let d = bundle.obs(Constant, Dde, None, None).unwrap();
            panels.push(Panel {
                file: "spfig_total_rate.svg".into(),
                title: "10-atom chain at d = 0.5 pi: total Gamma_inst".into(),
                y_label: "Gamma_inst / Gamma0".into(),
                series: vec![
                    ("constant".into(), gamma_inst_series(c, 0.0, 10.0)),
                    ("linear".into(), gamma_inst_series(l, 0.0, 10.0)),
                    ("retard".into(), gamma_inst_series(d, 0.0, 10.0)),
                ],
            });
            for atom in [1usize, 2, 5, 6, 10] {
                panels.push(Panel {
                    file: format!("spfig_atom{atom:02}.svg"),
                    title: format!("atom {atom} Gamma_inst at d = 0.5 pi"),
                    y_label: "Gamma_inst / Gamma0".into(),
                    series: vec![
                        ("constant".into(), per_atom_gamma(c, atom - 1, 0.0, 10.0)),
                        ("linear".into(), per_atom_gamma(l, atom - 1, 0.0, 10.0)),
                        ("retard".into(), per_atom_gamma(d, atom - 1, 0.0, 10.0)),
                    ],
                });
            }
        }
        _ => unreachable!(),
    }

    for p in &panels {
        match p.write(&dir) {
            Ok(path) => paths.push(path),
            Err(e) => {
                return Err(ReproduceError::Run(RunError::Io(wqed::output::IoFailure {
                    path: dir.join(&p.file),
                    source: e,
                })))
            }
        }
    }
    Ok(paths)
}
