//! Numerical toolkit for Brascamp-Lieb-like (BLL/GBLL) best constants and
//! their use in common-randomness (CR) generation converses.
//!
//! The crate is organized around one chain of quantities:
//!
//! - [`measures`]: finite measures, channels and the divergences
//!   (relative entropy, Rényi, `E_γ`) everything else consumes.
//! - [`gbll`]: the GBLL best constant `d(μ, (Q_{Y_j|X}), (ν_j), c^m)` —
//!   the supremum of weighted output relative entropies minus the input
//!   relative entropy — together with its functional-inequality dual.
//! - [`envelope`]: the mutual-information constant
//!   `d*(Q_X, c^m) = sup_{P_{U|X}} Σ c_l I(U;Y_l) − I(U;X)`, equivalently
//!   the upper concave envelope of `σ` at `Q_X`.
//! - [`smoothing`]: the δ-smooth constant `inf { d(μ, ·) : E_1(Q_X‖μ) ≤ δ }`
//!   over mass-cut measures, typical-set restrictions, and finite-n rate
//!   curves.
//! - [`gaussian`]: the Gaussian counterparts (log-det optimization `F(M)`,
//!   the additive constant `C`, `d* = F(Σ) + C`, divergence detection, and
//!   the information-density variance `V`).
//! - [`bounds`]: closed-form converse bounds for CR generation (rate
//!   region, one-communicator and omniscient-helper single-shot bounds,
//!   the TV–Rényi bound, and the second-order Wigner/Gaussian bound).
//! - [`crsim`]: exhaustively evaluable omniscient-helper CR schemes used
//!   to certify the converse bounds as sound at desk scale.
//!
//! All entropic quantities are in nats; conversion to bits is left to
//! front-ends. Every type is immutable after construction and every
//! operation is a pure function, so values can be shared freely across
//! threads.

pub mod bounds;
pub mod crsim;
pub mod envelope;
pub mod ext_real;
pub mod gaussian;
pub mod gbll;
pub mod linprog;
pub mod measures;
pub mod smoothing;

pub use ext_real::ExtReal;

use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right} ({context})")]
    DimensionMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("enumeration cap exceeded: {needed} > {cap}")]
    EnumerationCap { needed: u128, cap: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;

fn check_dims(left: usize, right: usize, context: &'static str) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch {
            left,
            right,
            context,
        });
    }
    Ok(())
}
