//! Two-photon-absorption metrology on single-mode bosonic states.
//!
//! - [`fock`]: probe construction in a truncated Fock basis.
//! - [`channel`]: exact TPA channel and an RK4 reference integrator.
//! - [`metrology`]: SLD, quantum and photon-counting Fisher information.
//! - [`probe_opt`]: QFI maximization at fixed mean photon number.
//! - [`validation`]: runtime self-checks used by `tpa validate`.

// Negated comparisons double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod fock;
mod linalg;
pub mod metrology;
pub mod probe_opt;
pub mod validation;

pub use error::{Result, TpaError};

/// Formats a float with 16 significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.15e}")
    } else {
        format!("{x}")
    }
}
