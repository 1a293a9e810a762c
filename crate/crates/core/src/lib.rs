//! Agnostic learners for Boolean disjunctions over {0,1}^n: Chebyshev-based
//! approximators, L1 polynomial regression, sample-based and statistical
//! query learners, boosting wrappers, and brute-force oracles to check them.

pub mod acceptance;
pub mod boosting;
pub mod bruteforce;
pub mod chebyshev;
pub mod csq_weak;
pub mod distributions;
pub mod domain;
pub mod error;
pub mod l1regression;
pub mod learner_sample;
pub mod learner_sq;
pub mod learner_tradeoff;
pub mod sqoracle;

pub use error::{Error, Result};
