//! Exact-arithmetic B-model pipelines for the three simple elliptic singularity
//! families `P8`, `X9`, `J10`: period series, mirror maps, correlator
//! q-expansions, quasi-modularity certificates, and the symplectic/quantization
//! matrix machinery, with every printed expansion checked exactly.

pub mod coeffs;
pub mod family;
pub mod frobenius;
pub mod givental;
pub mod golden;
pub mod hypergeom;
pub mod milnor;
pub mod mirror;
pub mod modular;
pub mod report;
pub mod series;
pub mod sexpr;
pub mod sigma;

pub use coeffs::{Cyclotomic, Rat};
pub use family::Family;
pub use series::{Exp, LogSeries, PuiseuxSeries, Var};
