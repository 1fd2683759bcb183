//! Arbitrary-order discrete de Rham (DDR) complex on general polyhedral meshes.
//!
//! The crate provides polyhedral meshes and quadrature, orthonormal local polynomial bases, the
//! DDR spaces with their interpolators, discrete operators, potentials and L2-products, a
//! magnetostatics solver and a verification harness for the algebraic and approximation
//! properties of the complex.

pub mod cli;
pub mod ddr;
pub mod mesh;
pub mod poly;
pub mod polyspaces;
pub mod products;
pub mod quadrature;
pub mod scheme;
pub mod sparse;
pub mod verification;
