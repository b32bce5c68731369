//! Brute-force integration of the full atom + field dynamics with the mode
//! continuum discretized into finitely many modes; the verification oracle
//! for the Volterra solver and the photon-number convolution.
//!
//! The single-excitation state is `(alpha_i, b_m)` with one complex
//! amplitude per discrete mode. In the frame rotating at `omega0` with the
//! mode phases absorbed (`b~_m = e^{-i (w_m - 1) t} b_m`), the equations are
//! autonomous:
//!
//! ```text
//! d alpha_i/dt = -Σ_m G_m e^{+i k_m x_i} b~_m
//! d b~_m/dt    = -i (w_m - 1) b~_m + G_m Σ_j e^{-i k_m x_j} alpha_j
//! ```
//!
//! with `G_m = |g^JC(k_m)| sqrt(dk / 2 pi)`, integrated by fixed-step RK4.
//! `Σ_m |b~_m|^2` is the exact photon number of the discretized model.

use super::{check_init, PhysicalParams, Result, SolverError, SolverKind, TimeGrid, Trajectory};
use crate::geometry::ChainGeometry;
use crate::kernels::CouplingModel;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy)]
pub struct OracleSettings {
    pub n_modes: usize,
    /// Require the discrete-mode revival time to exceed this multiple of
    /// the simulated window.
    pub revival_guard: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            n_modes: 4096,
            revival_guard: 4.0,
        }
    }
}

struct State {
    alpha: Vec<Complex64>,
    modes: Vec<Complex64>,
}

pub fn solve_mode_oracle(
    params: &PhysicalParams,
    geometry: &ChainGeometry,
    model: CouplingModel,
    init: &[Complex64],
    grid: &TimeGrid,
    settings: &OracleSettings,
) -> Result<Trajectory> {
    let n_atoms = geometry.n_atoms();
    check_init(init, n_atoms)?;
    let m_modes = settings.n_modes;
    if m_modes < 2 {
        return Err(SolverError::Domain("oracle needs at least 2 modes".into()));
    }

    let lambda = params.lambda;
    let dk = 2.0 * lambda / m_modes as f64;
    let t_max = grid.t_max();
    let revival_time = 2.0 * std::f64::consts::PI / dk;
    if revival_time < settings.revival_guard * t_max {
        let needed = (settings.revival_guard * t_max * lambda / std::f64::consts::PI).ceil();
        return Err(SolverError::RevivalTime {
            revival_time,
            t_max,
            n_modes_needed: needed as usize,
        });
    }
    // The fastest rotating mode must be resolved by the step.
    let dt_limit = 0.1 / lambda;
    if grid.dt > dt_limit * (1.0 + 1e-12) {
        return Err(SolverError::Domain(format!(
            "oracle dt = {} does not resolve the fastest mode; need dt <= {:.3e}",
            grid.dt, dt_limit
        )));
    }

    // Midpoint mode grid on [-lambda, lambda]; detunings and couplings.
    let mut detuning = Vec::with_capacity(m_modes);
    let mut coupling = Vec::with_capacity(m_modes);
    // phase[m * n_atoms + i] = e^{i k_m x_i}
    let mut phase = Vec::with_capacity(m_modes * n_atoms);
    for m in 0..m_modes {
        let k = -lambda + (m as f64 + 0.5) * dk;
        let omega = k.abs();
        detuning.push(omega - 1.0);
        let g2 = model.g_jc_squared(params.gamma, k);
        coupling.push((g2 * dk / (2.0 * std::f64::consts::PI)).sqrt());
        for &x in geometry.positions() {
            phase.push(Complex64::new(0.0, k * x).exp());
        }
    }

    let deriv = |s: &State, ds: &mut State| {
        for a in ds.alpha.iter_mut() {
            *a = Complex64::new(0.0, 0.0);
        }
        for m in 0..m_modes {
            let g = coupling[m];
            let ph = &phase[m * n_atoms..(m + 1) * n_atoms];
            // Σ_j e^{-i k x_j} alpha_j
            let mut s_atoms = Complex64::new(0.0, 0.0);
            for (p, a) in ph.iter().zip(&s.alpha) {
                s_atoms += p.conj() * a;
            }
            ds.modes[m] = Complex64::new(0.0, -detuning[m]) * s.modes[m] + g * s_atoms;
            let bm = s.modes[m];
            for (o, p) in ds.alpha.iter_mut().zip(ph.iter()) {
                *o -= g * p * bm;
            }
        }
    };

    let zero = Complex64::new(0.0, 0.0);
    let mut y = State {
        alpha: init.to_vec(),
        modes: vec![zero; m_modes],
    };
    let mut k1 = State { alpha: vec![zero; n_atoms], modes: vec![zero; m_modes] };
    let mut k2 = State { alpha: vec![zero; n_atoms], modes: vec![zero; m_modes] };
    let mut k3 = State { alpha: vec![zero; n_atoms], modes: vec![zero; m_modes] };
    let mut k4 = State { alpha: vec![zero; n_atoms], modes: vec![zero; m_modes] };
    let mut tmp = State { alpha: vec![zero; n_atoms], modes: vec![zero; m_modes] };

    let n_steps = grid.n_steps;
    let dt = grid.dt;
    let mut amplitudes = vec![zero; (n_steps + 1) * n_atoms];
    amplitudes[..n_atoms].copy_from_slice(init);
    let mut photon = vec![0.0_f64; n_steps + 1];
    let mut residual = vec![0.0_f64; n_steps + 1];

    let axpy = |out: &mut State, base: &State, k: &State, h: f64| {
        for i in 0..base.alpha.len() {
            out.alpha[i] = base.alpha[i] + h * k.alpha[i];
        }
        for m in 0..base.modes.len() {
            out.modes[m] = base.modes[m] + h * k.modes[m];
        }
    };

    for n in 0..n_steps {
        deriv(&y, &mut k1);
        axpy(&mut tmp, &y, &k1, 0.5 * dt);
        deriv(&tmp, &mut k2);
        axpy(&mut tmp, &y, &k2, 0.5 * dt);
        deriv(&tmp, &mut k3);
        axpy(&mut tmp, &y, &k3, dt);
        deriv(&tmp, &mut k4);
        for i in 0..n_atoms {
            y.alpha[i] += dt / 6.0 * (k1.alpha[i] + 2.0 * (k2.alpha[i] + k3.alpha[i]) + k4.alpha[i]);
        }
        for m in 0..m_modes {
            y.modes[m] += dt / 6.0 * (k1.modes[m] + 2.0 * (k2.modes[m] + k3.modes[m]) + k4.modes[m]);
        }
        let row = &mut amplitudes[(n + 1) * n_atoms..(n + 2) * n_atoms];
        row.copy_from_slice(&y.alpha);
        let nb: f64 = y.modes.iter().map(|b| b.norm_sqr()).sum();
        let pe: f64 = y.alpha.iter().map(|a| a.norm_sqr()).sum();
        photon[n + 1] = nb;
        residual[n + 1] = (pe + nb - 1.0).abs();
    }

    Ok(Trajectory {
        solver: SolverKind::Oracle,
        n_atoms,
        dt,
        amplitudes,
        photon_number: Some(photon),
        norm_residual: Some(residual),
        scenario_hash: 0,
    })
}
