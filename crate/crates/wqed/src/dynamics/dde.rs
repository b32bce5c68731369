//! Retardation-only delay dynamics and its zero-delay (Markovian) limit,
//! both integrated by the same fixed-step Heun scheme so the reduction
//! chain `dde(delays -> 0) == markov` holds to integrator precision.
//!
//! The delay equation (natural units, interaction picture) is
//!
//! ```text
//! d alpha_i/dt = -(gamma/2) [ alpha_i(t)
//!                + Σ_{j≠i} e^{i r_ij} alpha_j(t - r_ij) Θ(t - r_ij) ],
//! ```
//!
//! delayed values read from stored history by linear interpolation (delays
//! need not be commensurate with the grid). Before the first delay elapses
//! every atom decays as `d alpha_i/dt = -(gamma/2) alpha_i` exactly.

use super::{check_blowup, check_init, PhysicalParams, Result, SolverKind, TimeGrid, Trajectory};
use crate::geometry::ChainGeometry;
use num_complex::Complex64;

struct Coupling {
    i: usize,
    j: usize,
    /// e^{i k0 r_ij}
    phase: Complex64,
    /// Delay r_ij / v_g, possibly scaled (zero for the Markovian limit).
    delay: f64,
}

/// Delayed (or current) value of atom `j`'s amplitude at time `s`.
///
/// `hist` holds steps `0..=n_known`; `pred` extends one step past it during
/// the corrector stage. The step function is taken as `Θ(s >= 0)` so the
/// zero-delay limit reproduces the Markovian right-hand side exactly.
#[inline]
fn delayed(
    hist: &[Complex64],
    n_atoms: usize,
    n_known: usize,
    pred: Option<&[Complex64]>,
    s: f64,
    dt: f64,
    j: usize,
) -> Complex64 {
    if s < 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let u = s / dt;
    let m = u.floor() as usize;
    let frac = u - m as f64;
    let at = |step: usize| -> Complex64 {
        if step <= n_known {
            hist[step * n_atoms + j]
        } else {
            pred.expect("stage time beyond known history requires a predictor row")[j]
        }
    };
    if frac == 0.0 {
        at(m)
    } else {
        (1.0 - frac) * at(m) + frac * at(m + 1)
    }
}

fn heun_delay_march(
    solver: SolverKind,
    gamma: f64,
    n_atoms: usize,
    couplings: &[Coupling],
    init: &[Complex64],
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let dt = grid.dt;
    let n_steps = grid.n_steps;
    let half_gamma = 0.5 * gamma;

    let mut amplitudes = vec![Complex64::new(0.0, 0.0); (n_steps + 1) * n_atoms];
    amplitudes[..n_atoms].copy_from_slice(init);

    let mut k1 = vec![Complex64::new(0.0, 0.0); n_atoms];
    let mut k2 = vec![Complex64::new(0.0, 0.0); n_atoms];
    let mut pred = vec![Complex64::new(0.0, 0.0); n_atoms];

    // A delayed term switching on exactly at a stage time belongs to the
    // step that STARTS there, not the one that ends there; otherwise each
    // kink crossing injects an O(dt) one-time error and the scheme drops
    // to first order. Kink hits are detected with a snap tolerance since
    // delays are generally not exact multiples of dt in floating point.
    let snap = 1e-9 * dt;

    // rhs at stage time `t_stage` with instantaneous values `y`.
    // History rows 0..=n_known are final; `pred_opt` covers t_{n+1}.
    let rhs = |out: &mut [Complex64],
               y: &[Complex64],
               t_stage: f64,
               stage_starts_step: bool,
               hist: &[Complex64],
               n_known: usize,
               pred_opt: Option<&[Complex64]>| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = -half_gamma * y[i];
        }
        for c in couplings {
            let mut sj = t_stage - c.delay;
            if sj.abs() <= snap {
                sj = 0.0;
            }
            let active = sj > 0.0 || (sj == 0.0 && stage_starts_step);
            if active {
                let dj = if c.delay == 0.0 {
                    y[c.j]
                } else {
                    delayed(hist, n_atoms, n_known, pred_opt, sj, dt, c.j)
                };
                out[c.i] += -half_gamma * c.phase * dj;
                let di = if c.delay == 0.0 {
                    y[c.i]
                } else {
                    delayed(hist, n_atoms, n_known, pred_opt, sj, dt, c.i)
                };
                out[c.j] += -half_gamma * c.phase * di;
            }
        }
    };

    for n in 0..n_steps {
        let t_n = n as f64 * dt;
        let y_n: Vec<Complex64> = amplitudes[n * n_atoms..(n + 1) * n_atoms].to_vec();

        rhs(&mut k1, &y_n, t_n, true, &amplitudes, n, None);
        for i in 0..n_atoms {
            pred[i] = y_n[i] + dt * k1[i];
        }
        rhs(&mut k2, &pred, t_n + dt, false, &amplitudes, n, Some(&pred));

        let (_, tail) = amplitudes.split_at_mut((n + 1) * n_atoms);
        let row = &mut tail[..n_atoms];
        for i in 0..n_atoms {
            row[i] = y_n[i] + 0.5 * dt * (k1[i] + k2[i]);
        }
        check_blowup(solver, row, n + 1)?;
    }

    Ok(Trajectory {
        solver,
        n_atoms,
        dt,
        amplitudes,
        photon_number: None,
        norm_residual: None,
        scenario_hash: 0,
    })
}

fn pair_couplings(geometry: &ChainGeometry, delay_factor: f64) -> Vec<Coupling> {
    let n = geometry.n_atoms();
    let mut couplings = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let r = geometry.pair_distance(i, j);
            couplings.push(Coupling {
                i,
                j,
                phase: Complex64::new(0.0, r).exp(),
                delay: delay_factor * r,
            });
        }
    }
    couplings
}

pub fn solve_dde(
    params: &PhysicalParams,
    geometry: &ChainGeometry,
    init: &[Complex64],
    grid: &TimeGrid,
) -> Result<Trajectory> {
    solve_dde_with_delay_factor(params, geometry, init, grid, 1.0)
}

/// Delay dynamics with every delay scaled by `delay_factor`; factor 0 is the
/// zero-delay limit used by the reduction-chain check. Phases are untouched.
pub fn solve_dde_with_delay_factor(
    params: &PhysicalParams,
    geometry: &ChainGeometry,
    init: &[Complex64],
    grid: &TimeGrid,
    delay_factor: f64,
) -> Result<Trajectory> {
    check_init(init, geometry.n_atoms())?;
    let couplings = pair_couplings(geometry, delay_factor);
    heun_delay_march(
        SolverKind::Dde,
        params.gamma,
        geometry.n_atoms(),
        &couplings,
        init,
        grid,
    )
}

/// Markovian dynamics: the zero-delay limit
/// `d alpha_i/dt = -(gamma/2) Σ_j e^{i r_ij} alpha_j(t)`.
pub fn solve_markov(
    params: &PhysicalParams,
    geometry: &ChainGeometry,
    init: &[Complex64],
    grid: &TimeGrid,
) -> Result<Trajectory> {
    check_init(init, geometry.n_atoms())?;
    let couplings = pair_couplings(geometry, 0.0);
    let mut traj = heun_delay_march(
        SolverKind::Markov,
        params.gamma,
        geometry.n_atoms(),
        &couplings,
        init,
        grid,
    )?;
    traj.solver = SolverKind::Markov;
    Ok(traj)
}
