//! Numerical and exact tools for Vafa-Witten theory on three-manifolds.

pub mod bethe;
pub mod brst;
pub mod floer;
pub mod kahler;
pub mod series;
