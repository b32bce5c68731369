//! Full memory-kernel dynamics as a second-kind Volterra integral equation,
//! marched by product integration with trapezoidal weights.
//!
//! The equation solved (natural units, interaction picture) is
//!
//! ```text
//! alpha_i(t) = alpha_i(0) + i (2 gamma / pi) ∫_0^t Σ_j A_ij(t - tau) alpha_j(tau) dtau.
//! ```
//!
//! `A(phi = 0) = 0` makes the diagonal quadrature term vanish, so the
//! trapezoidal product-integration step is already explicit: the corrector
//! pass of a predictor-corrector sweep would re-enter through a zero weight
//! and is a fixed point. Marching is strictly causal and deterministic.

use super::{check_blowup, check_init, PhysicalParams, Result, SolverError, SolverKind, TimeGrid, Trajectory};
use crate::geometry::ChainGeometry;
use crate::kernels::KernelTable;
use num_complex::Complex64;

/// Consistency checks tying the table to this run.
fn validate_table(
    table: &KernelTable,
    grid: &TimeGrid,
    distances: &[f64],
) -> Result<()> {
    if table.n_lags < grid.n_steps + 1 {
        return Err(SolverError::Domain(format!(
            "kernel table covers {} lags but the grid needs {}",
            table.n_lags,
            grid.n_steps + 1
        )));
    }
    if (table.dt - grid.dt).abs() > 1e-15 * grid.dt {
        return Err(SolverError::Domain(format!(
            "kernel table dt = {} does not match grid dt = {}",
            table.dt, grid.dt
        )));
    }
    if table.distances.len() != distances.len() {
        return Err(SolverError::Domain(format!(
            "kernel table has {} distance classes, geometry has {}",
            table.distances.len(),
            distances.len()
        )));
    }
    for (a, b) in table.distances.iter().zip(distances) {
        if (a - b).abs() > 1e-9 * b.max(1.0) {
            return Err(SolverError::Domain(format!(
                "kernel table distance class {a} does not match geometry class {b}"
            )));
        }
    }
    Ok(())
}

pub fn solve_volterra(
    params: &PhysicalParams,
    geometry: &ChainGeometry,
    init: &[Complex64],
    grid: &TimeGrid,
    table: &KernelTable,
) -> Result<Trajectory> {
    let n_atoms = geometry.n_atoms();
    check_init(init, n_atoms)?;
    let classes = geometry.distance_classes();
    validate_table(table, grid, &classes.distances)?;

    let n_steps = grid.n_steps;
    let prefactor = Complex64::new(0.0, 2.0 * params.gamma / std::f64::consts::PI * grid.dt);

    let mut amplitudes = vec![Complex64::new(0.0, 0.0); (n_steps + 1) * n_atoms];
    amplitudes[..n_atoms].copy_from_slice(init);

    let pair_lists: Vec<&[(u32, u32)]> = classes.pairs.iter().map(|p| p.as_slice()).collect();
    let a_rows: Vec<&[Complex64]> = (0..classes.distances.len())
        .map(|c| table.a_row(c))
        .collect();
    // On a uniform chain the class index equals the site offset, which
    // turns the pair gather into contiguous sweeps (the hot path).
    let uniform = crate::dynamics::uniform_class_offsets(geometry, &classes);

    let mut acc = vec![Complex64::new(0.0, 0.0); n_atoms];

    for n in 1..=n_steps {
        for a in acc.iter_mut() {
            *a = Complex64::new(0.0, 0.0);
        }
        // Trapezoid over tau: weight 1/2 at m = 0, 1 in the interior; the
        // m = n endpoint carries A(0) = 0 and is omitted.
        for m in 0..n {
            let w = if m == 0 { 0.5 } else { 1.0 };
            let row = &amplitudes[m * n_atoms..(m + 1) * n_atoms];
            let lag = n - m;
            if uniform {
                for (off, a_row) in a_rows.iter().enumerate() {
                    let k = w * a_row[lag];
                    if off == 0 {
                        for (a, r) in acc.iter_mut().zip(row) {
                            *a += k * r;
                        }
                    } else {
                        let span = n_atoms - off;
                        for i in 0..span {
                            acc[i] += k * row[i + off];
                        }
                        for i in 0..span {
                            acc[i + off] += k * row[i];
                        }
                    }
                }
            } else {
                for (c, pairs) in pair_lists.iter().enumerate() {
                    let k = w * a_rows[c][lag];
                    if c == 0 {
                        for &(i, _) in pairs.iter() {
                            let i = i as usize;
                            acc[i] += k * row[i];
                        }
                    } else {
                        for &(i, j) in pairs.iter() {
                            let (i, j) = (i as usize, j as usize);
                            acc[i] += k * row[j];
                            acc[j] += k * row[i];
                        }
                    }
                }
            }
        }
        let (head, tail) = amplitudes.split_at_mut(n * n_atoms);
        let init_row = &head[..n_atoms];
        let row_n = &mut tail[..n_atoms];
        for i in 0..n_atoms {
            row_n[i] = init_row[i] + prefactor * acc[i];
        }
        check_blowup(SolverKind::Volterra, row_n, n)?;
    }

    Ok(Trajectory {
        solver: SolverKind::Volterra,
        n_atoms,
        dt: grid.dt,
        amplitudes,
        photon_number: None,
        norm_residual: None,
        scenario_hash: 0,
    })
}
