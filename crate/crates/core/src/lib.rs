//! Numerical laboratory for almost-Hermitian conformal geometry.
//!
//! Fields are evaluated as exact Taylor jets ([`jet`], [`field`]) on charted
//! manifolds ([`manifold`]); [`curvature`] derives every pointwise curvature
//! quantity from them, and the remaining modules build the conformal,
//! Yamabe-type, bubble and `J`-variation checks on top.

pub mod bubble;
pub mod curvature;
pub mod diagnostic;
pub mod error;
pub mod field;
pub mod gray_hervella;
pub mod grid;
pub mod j_variation;
pub mod jet;
pub mod linalg;
pub mod manifest;
pub mod manifold;
pub mod octonion;
pub mod sampling;
pub mod quadrature;
pub mod special;
pub mod yamabe;

pub use error::{Error, Result};
