//! Exact search and validation of algebraic polynomial Stein operators for
//! Gaussian polynomial targets Y = h(X).

pub mod hermite;
pub mod malliavin;
pub mod poly;
pub mod chain;
pub mod control;
pub mod analytics;
pub mod fixtures;
pub mod document;
pub mod cli;
