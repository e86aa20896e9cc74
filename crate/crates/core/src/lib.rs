//! Semiclassical beam propagation in phase space: dispersion symbols, Wigner
//! transforms, wave kinetic transport, momentum-moment hierarchies and
//! complex geometrical optics, with closed-form and split-step oracles.

// NaN inputs must fail validation, so `!(v > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cgo;
pub mod interp;
pub mod io;
pub mod kinetic;
pub mod moments;
pub mod multi_index;
pub mod oracle;
pub mod symbols;
pub mod wigner;
