//! Collective photon emission of a subwavelength atom chain coupled to a 1D
//! waveguide, simulated three ways: full memory-kernel (Volterra) dynamics,
//! retardation-only delay dynamics, and Markovian dynamics, for constant and
//! linear spectral densities.
//!
//! Units everywhere: `omega0 = v_g = k0 = 1`. Times are in `1/omega0`,
//! distances in `1/k0`, rates in `omega0`. Inputs are the dimensionless
//! ratios `gamma = Gamma0/omega0`, `lambda = Lambda/k0`, `d = k0 d`.

pub mod checks;
pub mod dynamics;
pub mod fnv;
pub mod geometry;
pub mod kernels;
pub mod observables;
pub mod output;
pub mod runner;
pub mod scenario;
pub mod specfun;
pub mod states;
pub mod svg;

