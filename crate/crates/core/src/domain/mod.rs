//! Boolean-domain types: points, regions, hypotheses, and the monotone
//! reduction for general disjunctions.

mod bits;
mod hypothesis;
pub mod io;
mod reduction;
mod region;

use serde::{Deserialize, Serialize};

pub use bits::{hamming_weight_on, BitVector};
pub use hypothesis::{eval_disjunction, hypothesis_error, Hypothesis, MonotoneDisjunction};
pub use reduction::{monotonize_distribution, monotonize_point, monotonize_sample, GeneralDisjunction};
pub use region::Region;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledExample {
    pub x: BitVector,
    pub y: bool,
}

/// Anything that can be viewed as a probability-weighted list of labeled
/// points whose weights sum to one.
pub trait WeightedData {
    fn dim(&self) -> usize;
    fn num_points(&self) -> usize;
    fn for_each_weighted(&self, f: &mut dyn FnMut(&BitVector, bool, f64));
}
