//! Numerical building blocks: quadrature, splines, banded factorizations,
//! eigensolvers, log-domain shooting, root finding and least squares.

pub mod banded;
pub mod bspline;
pub mod gauss;
pub mod lanczos;
pub mod lsq;
pub mod pchip;
pub mod roots;
pub mod shooting;
