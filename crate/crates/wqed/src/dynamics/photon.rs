//! Photon population from the atomic amplitude history via the double
//! convolution
//!
//! ```text
//! N_b(t) = Σ_ij ∫_0^t ∫_0^t B_ij(tau - tau') conj(alpha_i(tau)) alpha_j(tau') dtau dtau',
//! ```
//!
//! evaluated with trapezoidal weights on the amplitude grid. The first index
//! is conjugated; without the conjugation the quadratic form cannot be a
//! real nonnegative population for generic complex amplitudes. Eliminating
//! the mode amplitudes exactly fixes the kernel orientation that goes with
//! the conjugated first index: `B_ij` enters at argument `tau' - tau`
//! (the conjugate of the opposite orientation, which differs at second
//! order in the coupling). Both choices are validated against the
//! mode-discretization oracle, which resolves the ambiguity decisively.
//!
//! The full series costs one O(n) update per new step: with Hermitian
//! `K(m', m) = conj(K(m, m'))`, where `K(m, m') = Σ_ij B_ij(m - m')
//! conj(alpha_i(m)) alpha_j(m')`, the running square sum, first row, and
//! last column of the weight-corrected quadratic form are all maintained
//! incrementally, grouped by distance class so the kernel lookup is O(1).

use super::{Result, SolverError, Trajectory};
use crate::geometry::DistanceClasses;
use crate::kernels::KernelTable;
use num_complex::Complex64;

/// `Σ over pairs of class c` of `conj(alpha_i(m)) alpha_j(m')`, symmetrized
/// over the pair orientation for off-diagonal classes.
#[inline]
fn pair_sum(
    pairs: &[(u32, u32)],
    diagonal: bool,
    row_m: &[Complex64],
    row_mp: &[Complex64],
) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    if diagonal {
        for &(i, _) in pairs {
            let i = i as usize;
            s += row_m[i].conj() * row_mp[i];
        }
    } else {
        for &(i, j) in pairs {
            let (i, j) = (i as usize, j as usize);
            s += row_m[i].conj() * row_mp[j] + row_m[j].conj() * row_mp[i];
        }
    }
    s
}

/// Photon-number series on the trajectory's grid.
///
/// `table` must hold `B/(Gamma0 omega0)` rows for every distance class of
/// the geometry the trajectory was produced with; `gamma` restores the
/// kernel's physical scale.
pub fn photon_number(
    traj: &Trajectory,
    table: &KernelTable,
    gamma: f64,
    classes: &DistanceClasses,
) -> Result<Vec<f64>> {
    let n_steps = traj.n_steps();

    if table.n_lags < n_steps + 1 {
        return Err(SolverError::Domain(format!(
            "kernel table covers {} lags but the trajectory has {}",
            table.n_lags,
            n_steps + 1
        )));
    }
    let n_classes = classes.distances.len();
    let dt2 = traj.dt * traj.dt;
    let n_atoms = traj.n_atoms;
    let uniform = n_classes == n_atoms.max(1)
        && classes
            .pairs
            .iter()
            .enumerate()
            .all(|(c, p)| c == 0 || p.iter().all(|&(i, j)| j as usize == i as usize + c));

    // K(m, n) = gamma * Σ_c B_c(n - m) S_c(m, n), the kernel orientation
    // that makes Σ|alpha|^2 + N_b exactly conserved for the continuum model.
    let k_of = |m: usize, n: usize| -> Complex64 {
        let row_m = traj.amps_at(m);
        let row_n = traj.amps_at(n);
        let mut k = Complex64::new(0.0, 0.0);
        for c in 0..n_classes {
            let b = table.b_photon_signed(c, n as i64 - m as i64);
            let s = if uniform {
                // Offset structure: contiguous conjugated dot products.
                let mut s = Complex64::new(0.0, 0.0);
                if c == 0 {
                    for (a, b2) in row_m.iter().zip(row_n) {
                        s += a.conj() * b2;
                    }
                } else {
                    let span = n_atoms - c;
                    for i in 0..span {
                        s += row_m[i].conj() * row_n[i + c] + row_m[i + c].conj() * row_n[i];
                    }
                }
                s
            } else {
                pair_sum(&classes.pairs[c], c == 0, row_m, row_n)
            };
            k += b * s;
        }
        gamma * k
    };

    let mut nb = vec![0.0_f64; n_steps + 1];

    // Running pieces of the weight-corrected quadratic form over steps 0..=n:
    //   square   = Σ_{m,m'<=n} K(m,m')                  (real by Hermiticity)
    //   row0     = Σ_{m'<=n} K(0,m')
    //   K(0,0) held separately for the corner correction.
    let k00 = k_of(0, 0).re;
    let mut square = k00;
    let mut row0 = Complex64::new(k00, 0.0);

    for n in 1..=n_steps {
        // Fresh column: c_n = Σ_{m<n} K(m,n), plus the diagonal K(n,n).
        let mut col = Complex64::new(0.0, 0.0);
        let mut k0n = Complex64::new(0.0, 0.0);
        for m in 0..n {
            let k = k_of(m, n);
            if m == 0 {
                k0n = k;
            }
            col += k;
        }
        let knn = k_of(n, n).re;
        square += 2.0 * col.re + knn;
        row0 += k0n;
        let coln = col + knn;

        // Trapezoid endpoint corrections: weights are 1 - (δ_{m,0}+δ_{m,n})/2.
        let value = dt2
            * (square - row0.re - coln.re
                + 0.25 * (k00 + knn + 2.0 * k0n.re));
        if value < -1e-6 {
            return Err(SolverError::NegativePhotonNumber { step: n, value });
        }
        nb[n] = value;
    }

    Ok(nb)
}

/// Compute the photon series and store it (with the normalization residual)
/// on the trajectory.
pub fn attach_photon_number(
    traj: &mut Trajectory,
    table: &KernelTable,
    gamma: f64,
    classes: &DistanceClasses,
) -> Result<()> {
    let nb = photon_number(traj, table, gamma, classes)?;
    let residual: Vec<f64> = nb
        .iter()
        .enumerate()
        .map(|(n, nb_n)| (traj.pe_total(n) + nb_n - 1.0).abs())
        .collect();
    traj.photon_number = Some(nb);
    traj.norm_residual = Some(residual);
    Ok(())
}
