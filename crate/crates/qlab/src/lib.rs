//! Numerical laboratory for quenches of non-interacting fermionic chains:
//! covariance-matrix dynamics under hopping Hamiltonians, rigorous
//! Kusmin-Landau dephasing certificates for the equilibration rate, a
//! resilience classifier for initial second moments, and generalized-Gibbs /
//! thermal ensemble fits of the steady states.
//!
//! Module map:
//! - [`model`]: hopping chains, dispersion relations, Anderson disorder
//! - [`propagator`]: one-particle propagators, Bessel wavefront asymptotics
//! - [`covariance`]: the simulation state and its evolution, bands, currents,
//!   dephased steady states
//! - [`bounds`]: phase functions, stationary structure, dephasing
//!   certificates, resilience, the second-moment equilibration bound
//! - [`gge`]: generalized Gibbs ensembles and thermal fits
//! - [`oracle`]: brute-force Fock-space reference at tiny sizes
//! - [`io`]: covariance file formats

pub mod bessel;
pub mod bounds;
pub mod covariance;
pub mod error;
pub mod fourier;
pub mod gge;
pub mod io;
pub mod model;
pub mod oracle;
pub mod propagator;

pub use error::{Error, Result};
