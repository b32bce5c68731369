//! The three dynamical solvers (full memory-kernel Volterra,
//! retardation-only delay, Markovian) plus the independent
//! mode-discretization oracle, all producing a common [`Trajectory`].
//!
//! All amplitudes are interaction-picture amplitudes (the `omega0` phase is
//! rotated away), so the three solvers and the oracle are directly
//! comparable component by component.

mod dde;
mod oracle;
mod photon;
mod volterra;

pub use dde::{solve_dde, solve_dde_with_delay_factor, solve_markov};
pub use oracle::{solve_mode_oracle, OracleSettings};
pub use photon::{attach_photon_number, photon_number};
pub use volterra::solve_volterra;

use crate::kernels::KernelError;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Dimensionless physical parameters: `gamma = Gamma0/omega0` and the
/// spectral cutoff `lambda = Lambda/k0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub gamma: f64,
    pub lambda: f64,
}

impl PhysicalParams {
    pub fn new(gamma: f64, lambda: f64) -> std::result::Result<Self, SolverError> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(SolverError::Domain(format!(
                "gamma_ratio must be > 0, got {gamma}"
            )));
        }
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(SolverError::Domain(format!(
                "cutoff must be > 1, got {lambda}"
            )));
        }
        Ok(PhysicalParams { gamma, lambda })
    }

    /// Non-fatal advisories, e.g. leaving the weak-coupling regime.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.gamma > 0.1 {
            w.push(format!(
                "gamma_ratio = {} is outside the weak-coupling regime (> 0.1); \
                 results may not be physically meaningful",
                self.gamma
            ));
        }
        w
    }
}

/// Uniform time grid `t_n = n dt`, `n = 0..=n_steps`, in units of `1/omega0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> std::result::Result<Self, SolverError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SolverError::Domain(format!("dt must be > 0, got {dt}")));
        }
        if n_steps == 0 {
            return Err(SolverError::Domain("n_steps must be >= 1".into()));
        }
        Ok(TimeGrid { dt, n_steps })
    }

    pub fn from_t_max(dt: f64, t_max: f64) -> std::result::Result<Self, SolverError> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(SolverError::Domain(format!(
                "t_max must be > 0, got {t_max}"
            )));
        }
        let n = (t_max / dt).round().max(1.0) as usize;
        TimeGrid::new(dt, n)
    }

    pub fn t_max(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|n| n as f64 * self.dt).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Volterra,
    Dde,
    Markov,
    Oracle,
}

impl SolverKind {
    pub fn tag(&self) -> &'static str {
        match self {
            SolverKind::Volterra => "volterra",
            SolverKind::Dde => "dde",
            SolverKind::Markov => "markov",
            SolverKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "volterra" => Ok(SolverKind::Volterra),
            "dde" | "retard" => Ok(SolverKind::Dde),
            "markov" => Ok(SolverKind::Markov),
            "oracle" => Ok(SolverKind::Oracle),
            other => Err(format!(
                "unknown solver '{other}' (expected volterra, dde, markov, or oracle)"
            )),
        }
    }
}

/// Time series of complex atomic amplitudes, plus (when computed) the photon
/// number and the normalization residual `|Σ|α|² + N_b − 1|`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub solver: SolverKind,
    pub n_atoms: usize,
    pub dt: f64,
    /// Step-major: `amplitudes[step * n_atoms + atom]`.
    pub amplitudes: Vec<Complex64>,
    pub photon_number: Option<Vec<f64>>,
    pub norm_residual: Option<Vec<f64>>,
    /// Hash of the scenario that produced this run (0 when driven
    /// directly through the solver API).
    pub scenario_hash: u64,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.amplitudes.len() / self.n_atoms - 1
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|n| n as f64 * self.dt).collect()
    }

    #[inline]
    pub fn amp(&self, step: usize, atom: usize) -> Complex64 {
        self.amplitudes[step * self.n_atoms + atom]
    }

    #[inline]
    pub fn amps_at(&self, step: usize) -> &[Complex64] {
        &self.amplitudes[step * self.n_atoms..(step + 1) * self.n_atoms]
    }

    pub fn pe(&self, step: usize, atom: usize) -> f64 {
        self.amp(step, atom).norm_sqr()
    }

    pub fn pe_total(&self, step: usize) -> f64 {
        self.amps_at(step).iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn max_norm_residual(&self) -> Option<f64> {
        self.norm_residual
            .as_ref()
            .map(|r| r.iter().cloned().fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone)]
pub enum SolverError {
    Domain(String),
    Kernel(KernelError),
    /// An amplitude magnitude exceeded 1 + 1e-3: wrong sign convention or
    /// unstable step size.
    BlowUp {
        solver: SolverKind,
        step: usize,
        atom: usize,
        magnitude: f64,
    },
    /// The photon-number quadratic form went significantly negative,
    /// signalling a conjugation or kernel bug.
    NegativePhotonNumber { step: usize, value: f64 },
    /// Mode oracle: the discrete-mode revival time falls inside the
    /// simulated window.
    RevivalTime {
        revival_time: f64,
        t_max: f64,
        n_modes_needed: usize,
    },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Domain(msg) => write!(f, "solver domain error: {msg}"),
            SolverError::Kernel(e) => write!(f, "{e}"),
            SolverError::BlowUp {
                solver,
                step,
                atom,
                magnitude,
            } => write!(
                f,
                "blow-up guard: |alpha_{atom}| = {magnitude:.6} > 1 + 1e-3 at step {step} \
                 ({solver}); check kernel sign convention or reduce dt"
            ),
            SolverError::NegativePhotonNumber { step, value } => write!(
                f,
                "photon number {value:.3e} < -1e-6 at step {step}; conjugation or kernel bug"
            ),
            SolverError::RevivalTime {
                revival_time,
                t_max,
                n_modes_needed,
            } => write!(
                f,
                "mode-discretization revival time {revival_time:.3} is too close to t_max {t_max:.3}; \
                 use at least {n_modes_needed} modes"
            ),
        }
    }
}

impl std::error::Error for SolverError {}

impl From<KernelError> for SolverError {
    fn from(e: KernelError) -> Self {
        SolverError::Kernel(e)
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;

/// Solvers require the initial state normalized to 1 within 1e-12.
pub(crate) fn check_init(init: &[Complex64], n_atoms: usize) -> Result<()> {
    if init.len() != n_atoms {
        return Err(SolverError::Domain(format!(
            "initial state has {} amplitudes for {} atoms",
            init.len(),
            n_atoms
        )));
    }
    let norm: f64 = init.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(SolverError::Domain(format!(
            "initial state norm^2 = {norm} deviates from 1 by more than 1e-12"
        )));
    }
    Ok(())
}

pub(crate) const BLOWUP_LIMIT: f64 = 1.0 + 1e-3;

/// True when the geometry is a uniform chain whose distance classes map
/// one-to-one onto site offsets (class `c` pairs atoms `i` and `i + c`).
pub(crate) fn uniform_class_offsets(
    geometry: &crate::geometry::ChainGeometry,
    classes: &crate::geometry::DistanceClasses,
) -> bool {
    match geometry.uniform_spacing() {
        Some(d) if geometry.n_atoms() >= 2 => {
            classes.distances.len() == geometry.n_atoms()
                && classes
                    .distances
                    .iter()
                    .enumerate()
                    .all(|(c, r)| (r - c as f64 * d).abs() <= 1e-9 * r.max(1.0))
        }
        Some(_) => true, // single atom: only the coincidence class
        None => false,
    }
}

pub(crate) fn check_blowup(
    solver: SolverKind,
    row: &[Complex64],
    step: usize,
) -> Result<()> {
    for (atom, a) in row.iter().enumerate() {
        let m = a.norm();
        if !(m <= BLOWUP_LIMIT) {
            return Err(SolverError::BlowUp {
                solver,
                step,
                atom,
                magnitude: m,
            });
        }
    }
    Ok(())
}
