//! Reduced product-space lifting for multi-set feasibility problems.
//!
//! A feasibility problem over `C_1, ..., C_r` in a Euclidean space `X` is
//! lifted to the two-set problem `{B, K}` in `X^{r-1}`, where
//! `B = C_1 x ... x C_{r-1}` and `K = {(x, ..., x) : x in C_r}`. Both sets
//! have cheap projections, so two-set splitting methods apply directly, and
//! the lifted intersection is the diagonal image of the original one.
//!
//! Modules:
//! - [`spaces`]: points in `X`, matrices, and block points in `X^{r-1}`.
//! - [`sets`]: set descriptors with exact projections.
//! - [`lifting`]: the reduced lift, the classical diagonal lift, and
//!   intersection oracles.
//! - [`algorithms`]: generalized Douglas-Rachford, averaged projections and
//!   rate estimation.
//! - [`diagnostics`]: strong and linear regularity checks.
//!
//! Data-parallel work goes through [`Exec`]; building without the default
//! `parallel` feature makes every path sequential.

pub mod algorithms;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod lifting;
pub mod linalg;
pub mod rng;
pub mod sets;
pub mod spaces;

pub use error::{Error, Result};
pub use exec::Exec;
pub use lifting::{IntersectionOracle, PierraLift, ReducedLift};
pub use sets::{ProjectionResult, Projector, SetDescriptor};
pub use spaces::{BlockPoint, MatrixPoint, Point, Vector};
