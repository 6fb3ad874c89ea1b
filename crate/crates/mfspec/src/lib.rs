//! Exact multifractal pressure spectra for subshifts of finite type and
//! piecewise-linear Markov interval maps.
//!
//! The toolkit computes topological pressure of locally constant potentials
//! through weighted transfer matrices, and from it the spectra attached to
//! simultaneous Birkhoff ratio level sets: the predicted (Legendre-type)
//! spectrum, finite-level coarse spectra, the conditional variational value
//! over constrained Markov measures, and the dimension spectra obtained from
//! Bowen's equation. Everything is deterministic: cylinder arithmetic is
//! exact, sums are accumulated in a fixed order, and no randomness is used
//! anywhere.

pub mod cycles;
pub mod dimension;
pub mod error;
pub mod extreal;
pub mod linalg;
pub mod optim;
pub mod oracle;
pub mod pressure;
pub mod spectra;
pub mod symbolic;
pub mod system;
pub mod verify;

pub mod cli;

pub use error::{Error, Result};
pub use extreal::ExtendedReal;
