//! Scenario configuration: JSON parsing with strict validation, named
//! presets, and canonical serialization (hashes, reproducibility).

use crate::dynamics::{PhysicalParams, SolverKind, TimeGrid};
use crate::geometry::ChainGeometry;
use crate::kernels::CouplingModel;
use crate::states::{self, InitialState};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_DT: f64 = 0.005;
pub const DEFAULT_CUTOFF: f64 = 1e4;

#[derive(Debug, Clone)]
pub enum ConfigError {
    /// Malformed document, with position information from the parser.
    Parse(String),
    /// Well-formed but invalid; names the offending field and the rule.
    Validation(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(msg) => write!(f, "configuration parse error: {msg}"),
            ConfigError::Validation(msg) => write!(f, "configuration error: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// How to construct the initial state once the geometry is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", deny_unknown_fields)]
pub enum InitialSpec {
    SingleAtom {
        #[serde(default)]
        atom_index: usize,
    },
    TimedDicke {
        k_over_k0: f64,
    },
    Subradiant,
    Custom {
        /// Re/Im pairs, one per atom; renormalized on construction.
        amplitudes: Vec<[f64; 2]>,
    },
}

impl InitialSpec {
    pub fn realize(&self, geometry: &ChainGeometry) -> Result<InitialState> {
        let state = match self {
            InitialSpec::SingleAtom { atom_index } => states::single_atom(geometry, *atom_index),
            InitialSpec::TimedDicke { k_over_k0 } => states::timed_dicke(geometry, *k_over_k0),
            InitialSpec::Subradiant => states::subradiant_state(geometry),
            InitialSpec::Custom { amplitudes } => states::custom(
                geometry,
                amplitudes
                    .iter()
                    .map(|[re, im]| Complex64::new(*re, *im))
                    .collect(),
            ),
        };
        state.map_err(|e| ConfigError::Validation(format!("initial: {e}")))
    }
}

/// A fully validated single run specification: one coupling model, one
/// geometry, one initial state, one grid, and the set of solvers to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub model: CouplingModel,
    pub params: PhysicalParams,
    pub geometry: ChainGeometry,
    pub initial: InitialSpec,
    pub grid: TimeGrid,
    pub solvers: Vec<SolverKind>,
    pub smoothing_window: usize,
    pub out_dir: Option<String>,
}

impl Scenario {
    /// FNV-1a hash of the canonical serialized form; stable across runs
    /// of the same code version.
    pub fn content_hash(&self) -> u64 {
        crate::fnv::hash_str(&serialize_scenario(self))
    }
}

/// Raw configuration document. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cutoff: Option<f64>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spacing_over_pi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    positions: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial: Option<InitialSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solvers: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    smoothing_window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seedless: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_dir: Option<String>,
}

fn validate_doc(doc: &ScenarioDoc) -> Result<Scenario> {
    if let Some(false) = doc.seedless {
        return Err(ConfigError::Validation(
            "seedless must be true: every run is deterministic, there is no seed to set".into(),
        ));
    }
    let model = match &doc.model {
        Some(s) => CouplingModel::from_str(s).map_err(ConfigError::Validation)?,
        None => {
            return Err(ConfigError::Validation(
                "model is required (\"constant\" or \"linear\")".into(),
            ))
        }
    };
    let gamma = doc.gamma_ratio.ok_or_else(|| {
        ConfigError::Validation("gamma_ratio is required (must be > 0)".into())
    })?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(ConfigError::Validation(format!(
            "gamma_ratio must be > 0, got {gamma}"
        )));
    }
    let cutoff = doc.cutoff.unwrap_or(DEFAULT_CUTOFF);
    if !(cutoff > 1.0) || !cutoff.is_finite() {
        return Err(ConfigError::Validation(format!(
            "cutoff must be > 1, got {cutoff}"
        )));
    }
    let params = PhysicalParams::new(gamma, cutoff)
        .map_err(|e| ConfigError::Validation(e.to_string()))?;

    let geometry = match (&doc.positions, doc.n) {
        (Some(pos), _) => ChainGeometry::from_positions(pos.clone())
            .map_err(|e| ConfigError::Validation(format!("positions: {e}")))?,
        (None, Some(n)) => {
            if n == 0 {
                return Err(ConfigError::Validation("N must be >= 1".into()));
            }
            let spacing = if n == 1 {
                0.0
            } else {
                let over_pi = doc.spacing_over_pi.ok_or_else(|| {
                    ConfigError::Validation(
                        "spacing_over_pi is required for N >= 2 (positions not given)".into(),
                    )
                })?;
                if !(over_pi > 0.0) || !over_pi.is_finite() {
                    return Err(ConfigError::Validation(format!(
                        "spacing_over_pi must be > 0, got {over_pi}"
                    )));
                }
                over_pi * std::f64::consts::PI
            };
            ChainGeometry::uniform(n, spacing)
                .map_err(|e| ConfigError::Validation(e.to_string()))?
        }
        (None, None) => {
            return Err(ConfigError::Validation(
                "either N (with spacing_over_pi for N >= 2) or positions is required".into(),
            ))
        }
    };

    let dt = doc.dt.unwrap_or(DEFAULT_DT);
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(ConfigError::Validation(format!("dt must be > 0, got {dt}")));
    }
    let t_max = doc
        .t_max
        .ok_or_else(|| ConfigError::Validation("t_max is required (must be > 0)".into()))?;
    if !(t_max >= dt) || !t_max.is_finite() {
        return Err(ConfigError::Validation(format!(
            "t_max must be >= dt, got {t_max}"
        )));
    }
    let grid = TimeGrid::from_t_max(dt, t_max)
        .map_err(|e| ConfigError::Validation(e.to_string()))?;

    let solvers = match &doc.solvers {
        None => vec![SolverKind::Volterra],
        Some(list) => {
            if list.is_empty() {
                return Err(ConfigError::Validation("solvers must not be empty".into()));
            }
            let mut out = Vec::with_capacity(list.len());
            for s in list {
                let kind = SolverKind::from_str(s).map_err(ConfigError::Validation)?;
                if !out.contains(&kind) {
                    out.push(kind);
                }
            }
            out
        }
    };

    let smoothing_window = doc.smoothing_window.unwrap_or(1);
    if smoothing_window % 2 == 0 {
        return Err(ConfigError::Validation(format!(
            "smoothing_window must be odd (1 disables smoothing), got {smoothing_window}"
        )));
    }

    let initial = match &doc.initial {
        Some(spec) => spec.clone(),
        None => {
            if geometry.n_atoms() == 1 {
                InitialSpec::SingleAtom { atom_index: 0 }
            } else {
                InitialSpec::TimedDicke { k_over_k0: 1.0 }
            }
        }
    };
    // Construct once now so invalid states are caught at parse time.
    initial.realize(&geometry)?;

    let mut scenario = Scenario {
        label: String::new(),
        model,
        params,
        geometry,
        initial,
        grid,
        solvers,
        smoothing_window,
        out_dir: doc.out_dir.clone(),
    };
    scenario.label = match &doc.label {
        Some(l) => sanitize_label(l)?,
        None => format!("run_{:08x}", scenario.content_hash() as u32),
    };
    Ok(scenario)
}

fn sanitize_label(label: &str) -> Result<String> {
    if label.is_empty()
        || !label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
    {
        return Err(ConfigError::Validation(format!(
            "label '{label}' must be non-empty and use only [A-Za-z0-9_.-]"
        )));
    }
    Ok(label.to_string())
}

/// Parse a configuration document into the run plan it describes: a single
/// scenario, or the expansion of a named preset with overrides applied.
pub fn parse_run_plan(text: &str) -> Result<Vec<Scenario>> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| {
        ConfigError::Parse(format!("{e} (line {}, column {})", e.line(), e.column()))
    })?;
    match &doc.preset {
        None => Ok(vec![validate_doc(&doc)?]),
        Some(name) => {
            let base = preset(name)?;
            base.into_iter().map(|s| apply_overrides(s, &doc)).collect()
        }
    }
}

/// Parse a document that must describe exactly one scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let plan = parse_run_plan(text)?;
    if plan.len() != 1 {
        return Err(ConfigError::Validation(format!(
            "document expands to {} scenarios where exactly one is required",
            plan.len()
        )));
    }
    Ok(plan.into_iter().next().expect("checked length"))
}

fn apply_overrides(s: Scenario, doc: &ScenarioDoc) -> Result<Scenario> {
    let mut base = scenario_to_doc(&s);
    base.label = Some(s.label.clone());
    if doc.model.is_some() {
        base.model = doc.model.clone();
    }
    if doc.gamma_ratio.is_some() {
        base.gamma_ratio = doc.gamma_ratio;
    }
    if doc.cutoff.is_some() {
        base.cutoff = doc.cutoff;
    }
    if doc.n.is_some() {
        base.n = doc.n;
        base.positions = None;
    }
    if doc.spacing_over_pi.is_some() {
        base.spacing_over_pi = doc.spacing_over_pi;
    }
    if doc.positions.is_some() {
        base.positions = doc.positions.clone();
        base.n = None;
        base.spacing_over_pi = None;
    }
    if doc.initial.is_some() {
        base.initial = doc.initial.clone();
    }
    if doc.dt.is_some() {
        base.dt = doc.dt;
    }
    if doc.t_max.is_some() {
        base.t_max = doc.t_max;
    }
    if doc.solvers.is_some() {
        base.solvers = doc.solvers.clone();
    }
    if doc.smoothing_window.is_some() {
        base.smoothing_window = doc.smoothing_window;
    }
    if doc.out_dir.is_some() {
        base.out_dir = doc.out_dir.clone();
    }
    if doc.label.is_some() {
        base.label = doc.label.clone();
    }
    validate_doc(&base)
}

fn scenario_to_doc(s: &Scenario) -> ScenarioDoc {
    let spacing = s.geometry.uniform_spacing();
    let (n, spacing_over_pi, positions) = match spacing {
        Some(_) if s.geometry.n_atoms() == 1 => (Some(1), None, None),
        Some(d) => (
            Some(s.geometry.n_atoms()),
            Some(d / std::f64::consts::PI),
            None,
        ),
        None => (None, None, Some(s.geometry.positions().to_vec())),
    };
    ScenarioDoc {
        preset: None,
        label: Some(s.label.clone()),
        model: Some(s.model.tag().to_string()),
        gamma_ratio: Some(s.params.gamma),
        cutoff: Some(s.params.lambda),
        n,
        spacing_over_pi,
        positions,
        initial: Some(s.initial.clone()),
        dt: Some(s.grid.dt),
        t_max: Some(s.grid.t_max()),
        solvers: Some(s.solvers.iter().map(|k| k.tag().to_string()).collect()),
        smoothing_window: Some(s.smoothing_window),
        seedless: None,
        out_dir: s.out_dir.clone(),
    }
}

/// Canonical JSON form of a scenario; `parse(serialize(s)) == s`.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut doc = scenario_to_doc(s);
    // The label participates in round-trips but not in the content hash,
    // so hashing serializes with the label cleared.
    doc.label = None;
    serde_json::to_string_pretty(&doc).expect("scenario serialization cannot fail")
}

/// Canonical JSON form including the label (round-trip form).
pub fn serialize_scenario_labeled(s: &Scenario) -> String {
    serde_json::to_string_pretty(&scenario_to_doc(s)).expect("scenario serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

pub const PRESET_NAMES: [&str; 6] = ["fig1bc", "fig2ab", "fig2cd", "fig2e", "fig3", "spfig"];

fn gamma_tag(gamma: f64) -> String {
    format!("{gamma:e}")
}

struct PresetBuilder {
    scenarios: Vec<Scenario>,
}

impl PresetBuilder {
    fn new() -> Self {
        PresetBuilder { scenarios: Vec::new() }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        label: String,
        model: CouplingModel,
        gamma: f64,
        n: usize,
        spacing: f64,
        initial: InitialSpec,
        t_max: f64,
        solvers: Vec<SolverKind>,
    ) {
        let geometry = ChainGeometry::uniform(n, spacing).expect("preset geometry is valid");
        let params = PhysicalParams::new(gamma, DEFAULT_CUTOFF).expect("preset params are valid");
        let grid = TimeGrid::from_t_max(DEFAULT_DT, t_max).expect("preset grid is valid");
        self.scenarios.push(Scenario {
            label,
            model,
            params,
            geometry,
            initial,
            grid,
            solvers,
            smoothing_window: 1,
            out_dir: None,
        });
    }
}

/// Expand a named preset into its scenario list.
///
/// Accepted names (panel aliases resolve to their bundle): `fig1bc`
/// (`fig1b`, `fig1c`), `fig2ab` (`fig2a`, `fig2b`), `fig2cd` (`fig2c`,
/// `fig2d`), `fig2e`, `fig3`, `spfig`. The `spfig` spacing is d = 0.5π/k0.
pub fn preset(name: &str) -> Result<Vec<Scenario>> {
    use CouplingModel::{Constant, Linear};
    use SolverKind::{Dde, Markov, Volterra};
    let pi = std::f64::consts::PI;
    let canonical = match name {
        "fig1b" | "fig1c" | "fig1bc" => "fig1bc",
        "fig2a" | "fig2b" | "fig2ab" => "fig2ab",
        "fig2c" | "fig2d" | "fig2cd" => "fig2cd",
        "fig2e" => "fig2e",
        "fig3" => "fig3",
        "spfig" | "figsp" => "spfig",
        other => {
            return Err(ConfigError::Validation(format!(
                "unknown preset '{other}' (available: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    let mut b = PresetBuilder::new();
    match canonical {
        // Single-atom instantaneous decay rate, three couplings, both models.
        "fig1bc" => {
            for &gamma in &[1e-2, 1e-3, 1e-6] {
                let tag = gamma_tag(gamma);
                b.push(
                    format!("fig1bc_g{tag}_constant"),
                    Constant,
                    gamma,
                    1,
                    0.0,
                    InitialSpec::SingleAtom { atom_index: 0 },
                    50.0,
                    vec![Volterra],
                );
                b.push(
                    format!("fig1bc_g{tag}_linear"),
                    Linear,
                    gamma,
                    1,
                    0.0,
                    InitialSpec::SingleAtom { atom_index: 0 },
                    50.0,
                    vec![Volterra],
                );
            }
        }
        // 20-atom superradiant burst at spacing 0.1π.
        "fig2ab" => {
            let init = InitialSpec::TimedDicke { k_over_k0: 1.0 };
            b.push(
                "fig2ab_constant".into(),
                Constant,
                1e-4,
                20,
                0.1 * pi,
                init.clone(),
                10.0,
                vec![Volterra, Dde],
            );
            b.push(
                "fig2ab_linear".into(),
                Linear,
                1e-4,
                20,
                0.1 * pi,
                init,
                10.0,
                vec![Volterra],
            );
        }
        // 10-atom chain population changes over a long window.
        "fig2cd" => {
            for &gamma in &[1e-2, 1e-3, 1e-6] {
                let tag = gamma_tag(gamma);
                let init = InitialSpec::TimedDicke { k_over_k0: 1.0 };
                b.push(
                    format!("fig2cd_g{tag}_constant"),
                    Constant,
                    gamma,
                    10,
                    0.1 * pi,
                    init.clone(),
                    50.0,
                    vec![Volterra, Dde],
                );
                b.push(
                    format!("fig2cd_g{tag}_linear"),
                    Linear,
                    gamma,
                    10,
                    0.1 * pi,
                    init,
                    50.0,
                    vec![Volterra],
                );
            }
        }
        // Chain runs plus single-atom companions, with the Markovian
        // reference, for the late-window population comparison.
        "fig2e" => {
            for &gamma in &[1e-2, 1e-3, 1e-6] {
                let tag = gamma_tag(gamma);
                let init = InitialSpec::TimedDicke { k_over_k0: 1.0 };
                b.push(
                    format!("fig2e_chain_g{tag}_constant"),
                    Constant,
                    gamma,
                    10,
                    0.1 * pi,
                    init.clone(),
                    50.0,
                    vec![Volterra, Dde, Markov],
                );
                b.push(
                    format!("fig2e_chain_g{tag}_linear"),
                    Linear,
                    gamma,
                    10,
                    0.1 * pi,
                    init,
                    50.0,
                    vec![Volterra],
                );
                b.push(
                    format!("fig2e_single_g{tag}_constant"),
                    Constant,
                    gamma,
                    1,
                    0.0,
                    InitialSpec::SingleAtom { atom_index: 0 },
                    50.0,
                    vec![Volterra, Markov],
                );
                b.push(
                    format!("fig2e_single_g{tag}_linear"),
                    Linear,
                    gamma,
                    1,
                    0.0,
                    InitialSpec::SingleAtom { atom_index: 0 },
                    50.0,
                    vec![Volterra],
                );
            }
        }
        // 20-atom subradiant state, otherwise as fig2ab.
        "fig3" => {
            b.push(
                "fig3_constant".into(),
                Constant,
                1e-4,
                20,
                0.1 * pi,
                InitialSpec::Subradiant,
                10.0,
                vec![Volterra, Dde],
            );
            b.push(
                "fig3_linear".into(),
                Linear,
                1e-4,
                20,
                0.1 * pi,
                InitialSpec::Subradiant,
                10.0,
                vec![Volterra],
            );
        }
        // 10 atoms at the wider spacing d = 0.5π/k0.
        "spfig" => {
            let init = InitialSpec::TimedDicke { k_over_k0: 1.0 };
            b.push(
                "spfig_constant".into(),
                Constant,
                1e-4,
                10,
                0.5 * pi,
                init.clone(),
                10.0,
                vec![Volterra, Dde],
            );
            b.push(
                "spfig_linear".into(),
                Linear,
                1e-4,
                10,
                0.5 * pi,
                init,
                10.0,
                vec![Volterra],
            );
        }
        _ => unreachable!(),
    }
    Ok(b.scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_fills_defaults() {
        let s = parse_scenario(
            r#"{"model": "constant", "gamma_ratio": 1e-4, "N": 1, "t_max": 50}"#,
        )
        .unwrap();
        assert_eq!(s.model, CouplingModel::Constant);
        assert_eq!(s.params.lambda, DEFAULT_CUTOFF);
        assert_eq!(s.grid.dt, DEFAULT_DT);
        assert_eq!(s.solvers, vec![SolverKind::Volterra]);
        assert_eq!(s.initial, InitialSpec::SingleAtom { atom_index: 0 });
        assert_eq!(s.smoothing_window, 1);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = parse_run_plan(
            r#"{"model": "constant", "gamma_ratio": 1e-4, "N": 1, "t_max": 50, "tmax": 1}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("tmax"), "message should name the key: {msg}");
    }

    #[test]
    fn range_validation_names_the_field() {
        let err = parse_run_plan(
            r#"{"model": "constant", "gamma_ratio": -1, "N": 1, "t_max": 50}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("gamma_ratio must be > 0"));
        let err = parse_run_plan(
            r#"{"model": "constant", "gamma_ratio": 1e-4, "cutoff": 0.5, "N": 1, "t_max": 50}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("cutoff must be > 1"));
        let err = parse_run_plan(
            r#"{"model": "constant", "gamma_ratio": 1e-4, "N": 2, "t_max": 50}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("spacing_over_pi"));
        let err = parse_run_plan(
            r#"{"model": "constant", "gamma_ratio": 1e-4, "N": 1, "t_max": 50, "seedless": false}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("seedless"));
    }

    #[test]
    fn round_trip_is_identity() {
        let original = parse_scenario(
            r#"{
                "model": "linear", "gamma_ratio": 2e-3, "cutoff": 50,
                "N": 4, "spacing_over_pi": 0.25,
                "initial": {"type": "timed_dicke", "k_over_k0": 1.0},
                "dt": 0.01, "t_max": 12, "solvers": ["volterra", "dde"],
                "smoothing_window": 3
            }"#,
        )
        .unwrap();
        let text = serialize_scenario_labeled(&original);
        let reparsed = parse_scenario(&text).unwrap();
        assert_eq!(original, reparsed);
        assert_eq!(original.content_hash(), reparsed.content_hash());
    }

    #[test]
    fn preset_expansion_matches_pinned_parameters() {
        let pi = std::f64::consts::PI;
        // fig2ab: 20 atoms, spacing 0.1π, gamma 1e-4, timed-Dicke at k0,
        // window [0, 10].
        let plan = preset("fig2ab").unwrap();
        assert_eq!(plan.len(), 2);
        let s = &plan[0];
        assert_eq!(s.geometry.n_atoms(), 20);
        assert!((s.geometry.uniform_spacing().unwrap() - 0.1 * pi).abs() < 1e-15);
        assert_eq!(s.params.gamma, 1e-4);
        assert_eq!(s.params.lambda, 1e4);
        assert_eq!(s.initial, InitialSpec::TimedDicke { k_over_k0: 1.0 });
        assert!((s.grid.t_max() - 10.0).abs() < 1e-12);
        assert!(s.solvers.contains(&SolverKind::Dde));

        // fig3: subradiant initial state, both coupling models plus delay.
        let plan = preset("fig3").unwrap();
        assert_eq!(plan.len(), 2);
        assert_eq!(plan[0].geometry.n_atoms(), 20);
        assert_eq!(plan[0].initial, InitialSpec::Subradiant);
        let models: Vec<_> = plan.iter().map(|s| s.model).collect();
        assert!(models.contains(&CouplingModel::Constant));
        assert!(models.contains(&CouplingModel::Linear));

        // spfig: 10 atoms at 0.5π.
        let plan = preset("spfig").unwrap();
        assert_eq!(plan[0].geometry.n_atoms(), 10);
        assert!((plan[0].geometry.uniform_spacing().unwrap() - 0.5 * pi).abs() < 1e-15);

        // fig2cd: 10 atoms, three couplings.
        let plan = preset("fig2cd").unwrap();
        assert_eq!(plan.len(), 6);
        let gammas: std::collections::BTreeSet<String> =
            plan.iter().map(|s| format!("{:e}", s.params.gamma)).collect();
        assert_eq!(gammas.len(), 3);
        assert!(gammas.contains("1e-2") && gammas.contains("1e-3") && gammas.contains("1e-6"));
        assert!(plan.iter().all(|s| (s.grid.t_max() - 50.0).abs() < 1e-9));

        // fig2e includes single-atom companion runs at the same couplings.
        let plan = preset("fig2e").unwrap();
        let singles: Vec<_> = plan.iter().filter(|s| s.geometry.n_atoms() == 1).collect();
        assert_eq!(singles.len(), 6);
        assert!(singles
            .iter()
            .any(|s| s.solvers.contains(&SolverKind::Markov)));

        // fig1bc: three couplings, two models, one atom each.
        let plan = preset("fig1bc").unwrap();
        assert_eq!(plan.len(), 6);
        assert!(plan.iter().all(|s| s.geometry.n_atoms() == 1));

        assert!(preset("nosuch").is_err());
    }

    #[test]
    fn preset_aliases_resolve() {
        assert_eq!(preset("fig2a").unwrap().len(), preset("fig2ab").unwrap().len());
        assert_eq!(preset("fig1b").unwrap().len(), 6);
    }

    #[test]
    fn preset_with_override_in_document() {
        let plan = parse_run_plan(r#"{"preset": "fig2ab", "dt": 0.0025}"#).unwrap();
        assert_eq!(plan.len(), 2);
        for s in &plan {
            assert_eq!(s.grid.dt, 0.0025);
            assert_eq!(s.geometry.n_atoms(), 20);
        }
    }

    #[test]
    fn custom_initial_state_parses() {
        let s = parse_scenario(
            r#"{
            "model": "constant", "gamma_ratio": 1e-3, "N": 2, "spacing_over_pi": 0.1,
            "t_max": 1,
            "initial": {"type": "custom", "amplitudes": [[1.0, 0.0], [-1.0, 0.0]]}
        }"#,
        )
        .unwrap();
        let state = s.initial.realize(&s.geometry).unwrap();
        assert!((state.amplitudes[0].re - 1.0 / 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn explicit_positions_bypass_uniform_spacing() {
        let s = parse_scenario(
            r#"{"model": "constant", "gamma_ratio": 1e-3, "positions": [0.0, 0.4, 1.0],
                "t_max": 1}"#,
        )
        .unwrap();
        assert_eq!(s.geometry.n_atoms(), 3);
        assert_eq!(s.geometry.uniform_spacing(), None);
        // Round trip through explicit positions.
        let reparsed = parse_scenario(&serialize_scenario_labeled(&s)).unwrap();
        assert_eq!(s, reparsed);
    }
}
