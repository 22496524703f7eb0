//! Exact linear algebra over the integers and the rationals.

pub mod matrix;
pub mod poly;
pub mod rational;
pub mod snf;

pub use matrix::{QMatrix, ZMatrix};
pub use poly::{char_poly, cyclotomic, cyclotomic_factorization, IntPoly};
pub use rational::{format_rational, parse_rational, Rational};
pub use snf::{snf, SnfDecomposition};
