//! Observables reported by the simulator: excited-state populations,
//! population changes, the instantaneous decay rate, and Zeno times
//! (closed form and fitted).
//!
//! Unit conventions of the output: `Delta P_e` is reported in units of
//! `Gamma0/omega0` and `Gamma_inst` in units of `Gamma0`, matching the
//! natural axes for these quantities.

use crate::dynamics::Trajectory;
use crate::kernels::CouplingModel;
use std::fmt;

#[derive(Debug, Clone)]
pub enum ObservableError {
    Invalid(String),
    /// `Gamma_inst` needs strictly positive populations for the logarithm.
    NonpositivePopulation { step: usize, value: f64 },
}

impl fmt::Display for ObservableError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableError::Invalid(msg) => write!(f, "observable error: {msg}"),
            ObservableError::NonpositivePopulation { step, value } => write!(
                f,
                "instantaneous rate undefined: P_e = {value:.3e} <= 0 at step {step}"
            ),
        }
    }
}

impl std::error::Error for ObservableError {}

pub type Result<T> = std::result::Result<T, ObservableError>;

/// Per-run observable series on the trajectory's grid.
#[derive(Debug, Clone)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub gamma: f64,
    /// `pe_per_atom[step * n_atoms + atom]`
    pub pe_per_atom: Vec<f64>,
    pub pe_total: Vec<f64>,
    /// `(P_e(t) - P_e(0)) / gamma`, per atom and total.
    pub dpe_over_gamma_per_atom: Vec<f64>,
    pub dpe_over_gamma_total: Vec<f64>,
    /// `-(d/dt) ln P_e / gamma`; per-atom entries are present only for
    /// atoms whose population stays strictly positive.
    pub gamma_inst_per_atom: Vec<Option<Vec<f64>>>,
    pub gamma_inst_total: Vec<f64>,
    /// Steps where the total instantaneous rate is negative (transient
    /// reabsorption; expected during subradiant evolution).
    pub absorption_steps: Vec<usize>,
    pub n_atoms: usize,
}

impl ObservableSeries {
    pub fn pe(&self, step: usize, atom: usize) -> f64 {
        self.pe_per_atom[step * self.n_atoms + atom]
    }

    pub fn dpe_over_gamma(&self, step: usize, atom: usize) -> f64 {
        self.dpe_over_gamma_per_atom[step * self.n_atoms + atom]
    }
}

/// Populations and population changes of a trajectory.
pub fn population(traj: &Trajectory, gamma: f64) -> ObservableSeries {
    let n_atoms = traj.n_atoms;
    let n_steps = traj.n_steps();
    let mut pe_per_atom = Vec::with_capacity((n_steps + 1) * n_atoms);
    let mut pe_total = Vec::with_capacity(n_steps + 1);
    for step in 0..=n_steps {
        let mut tot = 0.0;
        for atom in 0..n_atoms {
            let p = traj.pe(step, atom);
            pe_per_atom.push(p);
            tot += p;
        }
        pe_total.push(tot);
    }
    let dpe_over_gamma_per_atom: Vec<f64> = (0..=n_steps)
        .flat_map(|step| {
            (0..n_atoms).map(move |atom| (step, atom))
        })
        .map(|(step, atom)| {
            (pe_per_atom[step * n_atoms + atom] - pe_per_atom[atom]) / gamma
        })
        .collect();
    let dpe_over_gamma_total: Vec<f64> = pe_total.iter().map(|p| (p - pe_total[0]) / gamma).collect();
    ObservableSeries {
        times: traj.times(),
        gamma,
        pe_per_atom,
        pe_total,
        dpe_over_gamma_per_atom,
        dpe_over_gamma_total,
        gamma_inst_per_atom: Vec::new(),
        gamma_inst_total: Vec::new(),
        absorption_steps: Vec::new(),
        n_atoms,
    }
}

/// Instantaneous decay rate `-(d/dt) ln P_e` of a strictly positive
/// population series, in units of `gamma` (i.e. `Gamma0`).
///
/// `window = 1` is a plain centered difference (one-sided second order at
/// the endpoints); odd `window >= 3` fits a local quadratic to `ln P_e`
/// over the window and differentiates it at the center.
pub fn gamma_inst(times: &[f64], pe: &[f64], gamma: f64, window: usize) -> Result<Vec<f64>> {
    if times.len() != pe.len() || times.len() < 3 {
        return Err(ObservableError::Invalid(format!(
            "need equal-length series of at least 3 points, got {} and {}",
            times.len(),
            pe.len()
        )));
    }
    if window % 2 == 0 {
        return Err(ObservableError::Invalid(format!(
            "smoothing window must be odd, got {window}"
        )));
    }
    for (step, &p) in pe.iter().enumerate() {
        if !(p > 0.0) {
            return Err(ObservableError::NonpositivePopulation { step, value: p });
        }
    }
    let ln_p: Vec<f64> = pe.iter().map(|p| p.ln()).collect();
    let n = ln_p.len();
    let dt = times[1] - times[0];
    let mut out = Vec::with_capacity(n);

    if window == 1 {
        for m in 0..n {
            let d = if m == 0 {
                (-3.0 * ln_p[0] + 4.0 * ln_p[1] - ln_p[2]) / (2.0 * dt)
            } else if m == n - 1 {
                (3.0 * ln_p[n - 1] - 4.0 * ln_p[n - 2] + ln_p[n - 3]) / (2.0 * dt)
            } else {
                (ln_p[m + 1] - ln_p[m - 1]) / (2.0 * dt)
            };
            out.push(-d / gamma);
        }
    } else {
        let half = window / 2;
        for m in 0..n {
            let lo = m.saturating_sub(half);
            let hi = (m + half).min(n - 1);
            // Least-squares quadratic in (t - t_m); its linear coefficient
            // is the derivative at the center.
            let mut s = [0.0_f64; 5];
            let mut b = [0.0_f64; 3];
            for idx in lo..=hi {
                let x = times[idx] - times[m];
                let y = ln_p[idx];
                let mut xp = 1.0;
                for (k, sk) in s.iter_mut().enumerate() {
                    *sk += xp;
                    if k < 3 {
                        b[k] += xp * y;
                    }
                    xp *= x;
                }
            }
            let d = solve_quadratic_lsq_derivative(&s, &b).ok_or_else(|| {
                ObservableError::Invalid("degenerate smoothing window".into())
            })?;
            out.push(-d / gamma);
        }
    }
    Ok(out)
}

/// Solve the 3x3 normal equations of a quadratic least-squares fit and
/// return the linear coefficient (derivative at the expansion point).
fn solve_quadratic_lsq_derivative(s: &[f64; 5], b: &[f64; 3]) -> Option<f64> {
    let mut m = [
        [s[0], s[1], s[2], b[0]],
        [s[1], s[2], s[3], b[1]],
        [s[2], s[3], s[4], b[2]],
    ];
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &c| m[a][col].abs().total_cmp(&m[c][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some(m[1][3] / m[1][1])
}

/// Populations plus instantaneous rates; per-atom rates are omitted for
/// atoms whose population touches zero.
pub fn build_observables(traj: &Trajectory, gamma: f64, window: usize) -> Result<ObservableSeries> {
    let mut obs = population(traj, gamma);
    let n_atoms = obs.n_atoms;
    let n = obs.pe_total.len();
    obs.gamma_inst_total = gamma_inst(&obs.times, &obs.pe_total, gamma, window)?;
    obs.absorption_steps = obs
        .gamma_inst_total
        .iter()
        .enumerate()
        .filter(|(_, g)| **g < 0.0)
        .map(|(m, _)| m)
        .collect();
    obs.gamma_inst_per_atom = (0..n_atoms)
        .map(|atom| {
            let series: Vec<f64> = (0..n).map(|m| obs.pe_per_atom[m * n_atoms + atom]).collect();
            gamma_inst(&obs.times, &series, gamma, window).ok()
        })
        .collect();
    Ok(obs)
}

/// Closed-form Zeno time, in units of `1/omega0`:
/// `tau_Z^-2 = 2 gamma/pi` (constant; cutoff-independent) or
/// `2 gamma ln(lambda)/pi` (linear).
pub fn zeno_closed_form(model: CouplingModel, gamma: f64, lambda: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(ObservableError::Invalid(format!(
            "gamma must be > 0, got {gamma}"
        )));
    }
    let inv_tau_sq = match model {
        CouplingModel::Constant => 2.0 * gamma / std::f64::consts::PI,
        CouplingModel::Linear => {
            if !(lambda > 1.0) {
                return Err(ObservableError::Invalid(format!(
                    "linear-model Zeno time needs cutoff > 1, got {lambda}"
                )));
            }
            2.0 * gamma * lambda.ln() / std::f64::consts::PI
        }
    };
    Ok(1.0 / inv_tau_sq.sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct ZenoFit {
    pub tau: f64,
    /// RMS residual of the quadratic model over the fit window.
    pub residual: f64,
    /// Set when the residual is large relative to the observed depletion,
    /// i.e. the series left the quadratic regime inside the window.
    pub quadratic_regime_warning: bool,
    pub points_used: usize,
}

/// Least-squares fit of `P_e(t) = 1 - (t/tau)^2` over `t <= fit_horizon`.
pub fn fit_zeno(times: &[f64], pe: &[f64], fit_horizon: f64) -> Result<ZenoFit> {
    if times.len() != pe.len() || times.is_empty() {
        return Err(ObservableError::Invalid("empty or mismatched series".into()));
    }
    if (pe[0] - 1.0).abs() > 1e-9 || times[0] != 0.0 {
        return Err(ObservableError::Invalid(format!(
            "fit requires a series starting at t = 0 with P_e(0) = 1, got P_e({}) = {}",
            times[0], pe[0]
        )));
    }
    let mut s_t4 = 0.0;
    let mut s_t2d = 0.0;
    let mut n_used = 0usize;
    let mut max_depletion = 0.0_f64;
    for (&t, &p) in times.iter().zip(pe) {
        if t > fit_horizon {
            break;
        }
        let t2 = t * t;
        s_t4 += t2 * t2;
        s_t2d += t2 * (1.0 - p);
        max_depletion = max_depletion.max(1.0 - p);
        n_used += 1;
    }
    if n_used < 3 {
        return Err(ObservableError::Invalid(format!(
            "fit horizon {fit_horizon} covers only {n_used} samples; need at least 3"
        )));
    }
    if !(s_t2d > 0.0) {
        return Err(ObservableError::Invalid(
            "series does not deplete over the fit window; cannot fit a Zeno time".into(),
        ));
    }
    let c = s_t2d / s_t4;
    let tau = 1.0 / c.sqrt();
    let mut ss = 0.0;
    for (&t, &p) in times.iter().zip(pe) {
        if t > fit_horizon {
            break;
        }
        let model = 1.0 - c * t * t;
        ss += (p - model) * (p - model);
    }
    let residual = (ss / n_used as f64).sqrt();
    Ok(ZenoFit {
        tau,
        residual,
        quadratic_regime_warning: residual > 0.05 * max_depletion.max(1e-300),
        points_used: n_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{SolverKind, Trajectory};
    use num_complex::Complex64;

    fn synthetic_trajectory(amps: Vec<Complex64>, n_atoms: usize, dt: f64) -> Trajectory {
        Trajectory {
            solver: SolverKind::Markov,
            n_atoms,
            dt,
            amplitudes: amps,
            photon_number: None,
            norm_residual: None,
            scenario_hash: 0,
        }
    }

    #[test]
    fn population_basics() {
        let amps = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.8, 0.0),
            Complex64::new(0.0, 0.3),
        ];
        let traj = synthetic_trajectory(amps, 2, 0.1);
        let obs = population(&traj, 1e-3);
        assert_eq!(obs.pe(0, 0), 1.0);
        assert_eq!(obs.pe_total[0], 1.0);
        assert!((obs.pe(1, 1) - 0.09).abs() < 1e-15);
        assert_eq!(obs.dpe_over_gamma_total[0], 0.0);
        assert!((obs.dpe_over_gamma_total[1] - (0.64 + 0.09 - 1.0) / 1e-3).abs() < 1e-9);
    }

    #[test]
    fn timed_dicke_has_uniform_populations() {
        let g = crate::geometry::ChainGeometry::uniform(10, 0.1).unwrap();
        let s = crate::states::timed_dicke(&g, 1.0).unwrap();
        for a in &s.amplitudes {
            assert!((a.norm_sqr() - 0.1).abs() < 1e-14);
        }
    }

    #[test]
    fn gamma_inst_of_exponential_is_constant() {
        let gamma = 3e-3;
        let dt = 0.01;
        let times: Vec<f64> = (0..500).map(|m| m as f64 * dt).collect();
        let pe: Vec<f64> = times.iter().map(|t| (-gamma * t).exp()).collect();
        for window in [1usize, 5] {
            let gi = gamma_inst(&times, &pe, gamma, window).unwrap();
            for (m, g) in gi.iter().enumerate() {
                assert!(
                    (g - 1.0).abs() < 1e-8,
                    "window {window} step {m}: {g}"
                );
            }
        }
    }

    #[test]
    fn gamma_inst_rejects_nonpositive_and_even_windows() {
        let times = vec![0.0, 0.1, 0.2];
        assert!(matches!(
            gamma_inst(&times, &[1.0, 0.0, 0.5], 1.0, 1),
            Err(ObservableError::NonpositivePopulation { step: 1, .. })
        ));
        assert!(gamma_inst(&times, &[1.0, 0.9, 0.8], 1.0, 2).is_err());
    }

    #[test]
    fn gamma_inst_flags_absorption() {
        let dt = 0.01;
        let times: Vec<f64> = (0..200).map(|m| m as f64 * dt).collect();
        // Population that dips and partially refills.
        let pe: Vec<f64> = times.iter().map(|t| 0.8 + 0.2 * (3.0 * t).cos()).collect();
        let amps: Vec<Complex64> = pe.iter().map(|p| Complex64::new(p.sqrt(), 0.0)).collect();
        let traj = synthetic_trajectory(amps, 1, dt);
        let obs = build_observables(&traj, 1.0, 1).unwrap();
        assert!(!obs.absorption_steps.is_empty());
    }

    #[test]
    fn zeno_closed_form_values() {
        let tau_const = zeno_closed_form(CouplingModel::Constant, 1e-4, 1e4).unwrap();
        assert!((tau_const - 125.3314).abs() < 1e-3);
        // Cutoff-independent for the constant model.
        let tau_const_50 = zeno_closed_form(CouplingModel::Constant, 1e-4, 50.0).unwrap();
        assert_eq!(tau_const, tau_const_50);
        let tau_lin = zeno_closed_form(CouplingModel::Linear, 1e-4, 1e4).unwrap();
        assert!((tau_lin - 41.2976).abs() < 1e-3);
        assert!(zeno_closed_form(CouplingModel::Linear, 1e-4, 0.5).is_err());
        assert!(zeno_closed_form(CouplingModel::Constant, -1.0, 1e4).is_err());
    }

    #[test]
    fn fit_zeno_recovers_synthetic_tau() {
        let dt = 0.005;
        let times: Vec<f64> = (0..=100).map(|m| m as f64 * dt).collect();
        let pe: Vec<f64> = times.iter().map(|t| 1.0 - (t / 100.0) * (t / 100.0)).collect();
        let fit = fit_zeno(&times, &pe, 0.5).unwrap();
        assert!((fit.tau - 100.0).abs() < 1e-9);
        assert!(fit.residual < 1e-15);
        assert!(!fit.quadratic_regime_warning);
    }

    #[test]
    fn fit_zeno_warns_outside_quadratic_regime() {
        let dt = 0.01;
        let times: Vec<f64> = (0..=200).map(|m| m as f64 * dt).collect();
        let pe: Vec<f64> = times.iter().map(|t| (-3.0 * t).exp()).collect();
        let fit = fit_zeno(&times, &pe, 2.0).unwrap();
        assert!(fit.quadratic_regime_warning);
    }

    #[test]
    fn fit_zeno_preconditions() {
        let times = vec![0.0, 0.1];
        let pe = vec![1.0, 0.99];
        assert!(fit_zeno(&times, &pe, 0.2).is_err()); // too few points
        let times = vec![0.0, 0.1, 0.2];
        let pe = vec![0.9, 0.89, 0.88];
        assert!(fit_zeno(&times, &pe, 0.3).is_err()); // P(0) != 1
    }
}
