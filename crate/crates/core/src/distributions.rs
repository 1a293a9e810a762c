//! Finite-support distributions, empirical samples, conditioning,
//! synthetic generators, and VC-based sample sizing.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{BitVector, LabeledExample, MonotoneDisjunction, Region, WeightedData};
use crate::error::{Error, Result};

/// Tolerance on the total probability of an explicit distribution.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Deterministic generator for `(seed, stream)`; distinct streams are
/// independent.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedExample {
    pub x: BitVector,
    pub y: bool,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitDistribution {
    n: usize,
    support: Vec<WeightedExample>,
}

impl ExplicitDistribution {
    /// Validates dimensions, non-negativity, total mass, and (x, y) uniqueness.
    pub fn new(n: usize, support: Vec<WeightedExample>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptyData);
        }
        let mut seen = std::collections::HashSet::with_capacity(support.len());
        let mut total = 0.0;
        for e in &support {
            if e.x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: e.x.len() });
            }
            if !(e.p.is_finite() && e.p >= 0.0) {
                return Err(Error::InvalidParameter(format!("invalid probability {}", e.p)));
            }
            if !seen.insert((&e.x, e.y)) {
                return Err(Error::InvalidParameter(format!("duplicate support entry ({}, {})", e.x, e.y as u8)));
            }
            total += e.p;
        }
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}, not 1")));
        }
        Ok(ExplicitDistribution { n, support })
    }

    pub(crate) fn from_parts_unchecked(n: usize, support: Vec<WeightedExample>) -> Self {
        ExplicitDistribution { n, support }
    }

    /// Merges duplicate (x, y) pairs, drops zero weights, and normalizes.
    /// The support comes out sorted by (x, y).
    pub fn from_weights(n: usize, items: impl IntoIterator<Item = (BitVector, bool, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<(BitVector, bool), f64> = BTreeMap::new();
        for (x, y, w) in items {
            if x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: x.len() });
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidParameter(format!("invalid weight {w}")));
            }
            *acc.entry((x, y)).or_insert(0.0) += w;
        }
        let total: f64 = acc.values().sum();
        if total <= 0.0 {
            return Err(Error::EmptyData);
        }
        let support = acc
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|((x, y), w)| WeightedExample { x, y, p: w / total })
            .collect();
        Ok(ExplicitDistribution { n, support })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[WeightedExample] {
        &self.support
    }

    /// Pr[x in region].
    pub fn mass(&self, region: &Region) -> f64 {
        self.support.iter().filter(|e| region.contains(&e.x)).map(|e| e.p).sum()
    }

    /// E[q(x, y)].
    pub fn expectation(&self, q: impl Fn(&BitVector, bool) -> f64) -> f64 {
        self.support.iter().map(|e| e.p * q(&e.x, e.y)).sum()
    }

    /// Distinct points of the marginal, in support order.
    pub fn marginal_points(&self) -> Vec<BitVector> {
        let mut pts: Vec<BitVector> = self.support.iter().map(|e| e.x.clone()).collect();
        pts.dedup();
        pts.sort();
        pts.dedup();
        pts
    }
}

impl WeightedData for ExplicitDistribution {
    fn dim(&self) -> usize {
        self.n
    }

    fn num_points(&self) -> usize {
        self.support.len()
    }

    fn for_each_weighted(&self, f: &mut dyn FnMut(&BitVector, bool, f64)) {
        for e in &self.support {
            f(&e.x, e.y, e.p);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSample {
    n: usize,
    examples: Vec<LabeledExample>,
}

impl EmpiricalSample {
    pub fn new(n: usize, examples: Vec<LabeledExample>) -> Result<Self> {
        for e in &examples {
            if e.x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: e.x.len() });
            }
        }
        Ok(EmpiricalSample { n, examples })
    }

    pub(crate) fn from_parts_unchecked(n: usize, examples: Vec<LabeledExample>) -> Self {
        EmpiricalSample { n, examples }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// The uniform distribution over the sample, duplicates merged.
    pub fn to_distribution(&self) -> Result<ExplicitDistribution> {
        ExplicitDistribution::from_weights(self.n, self.examples.iter().map(|e| (e.x.clone(), e.y, 1.0)))
    }
}

impl WeightedData for EmpiricalSample {
    fn dim(&self) -> usize {
        self.n
    }

    fn num_points(&self) -> usize {
        self.examples.len()
    }

    fn for_each_weighted(&self, f: &mut dyn FnMut(&BitVector, bool, f64)) {
        let w = 1.0 / self.examples.len() as f64;
        for e in &self.examples {
            f(&e.x, e.y, w);
        }
    }
}

/// Precomputed sampler over the support of an explicit distribution.
#[derive(Clone, Debug)]
pub struct Sampler {
    index: WeightedIndex<f64>,
}

impl Sampler {
    pub fn new(dist: &ExplicitDistribution) -> Result<Self> {
        let index = WeightedIndex::new(dist.support.iter().map(|e| e.p))
            .map_err(|e| Error::InvalidParameter(format!("cannot sample: {e}")))?;
        Ok(Sampler { index })
    }

    #[inline]
    pub fn draw_index(&self, rng: &mut impl Rng) -> usize {
        self.index.sample(rng)
    }
}

/// `count` i.i.d. draws, deterministic in `seed`.
pub fn draw(dist: &ExplicitDistribution, count: usize, seed: u64) -> Result<EmpiricalSample> {
    draw_stream(dist, count, seed, 0)
}

/// As [`draw`], on an explicit generator stream.
pub fn draw_stream(dist: &ExplicitDistribution, count: usize, seed: u64, stream: u64) -> Result<EmpiricalSample> {
    if count == 0 {
        return Err(Error::InvalidParameter("draw count must be at least 1".into()));
    }
    let sampler = Sampler::new(dist)?;
    let mut rng = seeded_rng(seed, stream);
    let examples = (0..count)
        .map(|_| {
            let e = &dist.support[sampler.draw_index(&mut rng)];
            LabeledExample { x: e.x.clone(), y: e.y }
        })
        .collect();
    Ok(EmpiricalSample { n: dist.n, examples })
}

/// D conditioned on x in `region`.
pub fn condition_on(dist: &ExplicitDistribution, region: &Region) -> Result<ExplicitDistribution> {
    let kept: Vec<&WeightedExample> = dist.support.iter().filter(|e| region.contains(&e.x)).collect();
    let mass: f64 = kept.iter().map(|e| e.p).sum();
    if mass <= 0.0 {
        return Err(Error::ZeroMassRegion);
    }
    let support = kept.into_iter().map(|e| WeightedExample { x: e.x.clone(), y: e.y, p: e.p / mass }).collect();
    Ok(ExplicitDistribution { n: dist.n, support })
}

/// Marginal distribution over the hypercube used by the generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalSpec {
    /// Uniform over the listed points (repeated points gain mass).
    UniformOverSupport { points: Vec<BitVector> },
    /// Explicit point masses, normalized.
    Weighted { points: Vec<(BitVector, f64)> },
    /// Uniform over points with lo <= W(x) <= hi. With `support_size` unset
    /// the band is enumerated (at most 10^6 points); otherwise that many
    /// points are sampled by drawing a weight uniformly from the band and
    /// then a uniform subset of that size.
    WeightBand { lo: usize, hi: usize, support_size: Option<usize> },
    /// Mass `p_heavy` spread uniformly on sampled points with W(x) > r and
    /// the rest on sampled points with W(x) <= light_max_weight (default r).
    HeavyLightMixture { p_heavy: f64, r: usize, support_size: usize, light_max_weight: Option<usize> },
}

const BAND_ENUMERATION_CAP: u128 = 1_000_000;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn random_point_of_weight(n: usize, w: usize, rng: &mut impl Rng) -> BitVector {
    let mut x = BitVector::zeros(n);
    for i in index::sample(rng, n, w).into_iter() {
        x.set(i, true);
    }
    x
}

fn enumerate_weight(n: usize, w: usize, out: &mut Vec<BitVector>) {
    fn rec(n: usize, start: usize, left: usize, cur: &mut BitVector, out: &mut Vec<BitVector>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=(n - left) {
            cur.set(i, true);
            rec(n, i + 1, left - 1, cur, out);
            cur.set(i, false);
        }
    }
    let mut cur = BitVector::zeros(n);
    rec(n, 0, w, &mut cur, out);
}

/// Realizes a marginal spec as (point, mass) pairs with total mass 1.
pub fn realize_marginal(n: usize, spec: &MarginalSpec, rng: &mut impl Rng) -> Result<Vec<(BitVector, f64)>> {
    let pts: Vec<(BitVector, f64)> = match spec {
        MarginalSpec::UniformOverSupport { points } => {
            for p in points {
                if p.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: p.len() });
                }
            }
            points.iter().map(|p| (p.clone(), 1.0)).collect()
        }
        MarginalSpec::Weighted { points } => {
            for (p, w) in points {
                if p.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: p.len() });
                }
                if !(w.is_finite() && *w >= 0.0) {
                    return Err(Error::InvalidParameter(format!("invalid marginal weight {w}")));
                }
            }
            points.clone()
        }
        MarginalSpec::WeightBand { lo, hi, support_size } => {
            if lo > hi || *hi > n {
                return Err(Error::InvalidParameter(format!("weight band [{lo}, {hi}] invalid for n={n}")));
            }
            match support_size {
                None => {
                    let count: u128 = (*lo..=*hi).map(|w| binomial(n, w)).sum();
                    if count > BAND_ENUMERATION_CAP {
                        return Err(Error::CapExceeded {
                            what: "weight-band enumeration",
                            size: count,
                            cap: BAND_ENUMERATION_CAP,
                        });
                    }
                    let mut out = Vec::new();
                    for w in *lo..=*hi {
                        enumerate_weight(n, w, &mut out);
                    }
                    out.into_iter().map(|p| (p, 1.0)).collect()
                }
                Some(k) => (0..*k)
                    .map(|_| {
                        let w = rng.gen_range(*lo..=*hi);
                        (random_point_of_weight(n, w, rng), 1.0)
                    })
                    .collect(),
            }
        }
        MarginalSpec::HeavyLightMixture { p_heavy, r, support_size, light_max_weight } => {
            if !(0.0..=1.0).contains(p_heavy) {
                return Err(Error::InvalidParameter(format!("p_heavy {p_heavy} outside [0, 1]")));
            }
            let light_max = light_max_weight.unwrap_or(*r).min(*r).min(n);
            let heavy_count = if *p_heavy == 0.0 {
                0
            } else if *p_heavy == 1.0 {
                *support_size
            } else {
                (support_size / 2).max(1)
            };
            let light_count = support_size.saturating_sub(heavy_count);
            if heavy_count > 0 && *r >= n {
                return Err(Error::InvalidParameter(format!("no heavy points exist with r={r} >= n={n}")));
            }
            if light_count == 0 && *p_heavy < 1.0 {
                return Err(Error::InvalidParameter("support too small for a light side".into()));
            }
            let mut out = Vec::with_capacity(*support_size);
            for _ in 0..heavy_count {
                let w = rng.gen_range(r + 1..=n);
                out.push((random_point_of_weight(n, w, rng), p_heavy / heavy_count as f64));
            }
            for _ in 0..light_count {
                let w = rng.gen_range(0..=light_max);
                out.push((random_point_of_weight(n, w, rng), (1.0 - p_heavy) / light_count as f64));
            }
            out
        }
    };
    let total: f64 = pts.iter().map(|(_, w)| w).sum();
    if pts.is_empty() || total <= 0.0 {
        return Err(Error::InvalidParameter("empty marginal support".into()));
    }
    Ok(pts.into_iter().map(|(p, w)| (p, w / total)).collect())
}

/// Labels f_S(x), flipped with probability `eta`; the flips are folded into
/// the explicit probabilities, so Disjunction(S) has error exactly `eta`.
pub fn gen_planted(
    n: usize,
    target: &MonotoneDisjunction,
    marginal: &MarginalSpec,
    eta: f64,
    seed: u64,
) -> Result<ExplicitDistribution> {
    if !(0.0..0.5).contains(&eta) {
        return Err(Error::InvalidParameter(format!("flip rate {eta} outside [0, 1/2)")));
    }
    if target.dimension() != n {
        return Err(Error::DimensionMismatch { expected: n, found: target.dimension() });
    }
    let mut rng = seeded_rng(seed, 0);
    let pts = realize_marginal(n, marginal, &mut rng)?;
    let items = pts.into_iter().flat_map(|(x, m)| {
        let f = target.eval(&x);
        [(x.clone(), f, m * (1.0 - eta)), (x, !f, m * eta)]
    });
    ExplicitDistribution::from_weights(n, items)
}

/// Each marginal point gets an independent uniform Pr[y=1 | x]; a fraction
/// `pure_fraction` of the points get a deterministic label instead.
pub fn gen_random_labels(
    n: usize,
    marginal: &MarginalSpec,
    pure_fraction: f64,
    seed: u64,
) -> Result<ExplicitDistribution> {
    let mut rng = seeded_rng(seed, 0);
    let pts = realize_marginal(n, marginal, &mut rng)?;
    let mut items = Vec::with_capacity(2 * pts.len());
    for (x, m) in pts {
        let q: f64 = if rng.gen_bool(pure_fraction.clamp(0.0, 1.0)) {
            if rng.gen_bool(0.5) {
                1.0
            } else {
                0.0
            }
        } else {
            rng.gen()
        };
        items.push((x.clone(), true, m * q));
        items.push((x, false, m * (1.0 - q)));
    }
    ExplicitDistribution::from_weights(n, items)
}

/// ceil(c * d / eps^2), the sample size for uniform convergence over a class
/// of VC dimension d.
pub fn vc_sample_size(d: usize, eps: f64, c: f64) -> Result<usize> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("accuracy {eps} outside (0, 1]")));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("VC dimension must be at least 1".into()));
    }
    let v = c * d as f64 / (eps * eps);
    // Guard against 8000.000000000001-style rounding of exact products.
    Ok((v * (1.0 - 1e-12)).ceil().max(1.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    #[test]
    fn validation() {
        let ok = ExplicitDistribution::new(
            2,
            vec![WeightedExample { x: bv("00"), y: false, p: 0.5 }, WeightedExample { x: bv("00"), y: true, p: 0.5 }],
        );
        assert!(ok.is_ok());
        let dup = ExplicitDistribution::new(
            2,
            vec![WeightedExample { x: bv("00"), y: false, p: 0.5 }, WeightedExample { x: bv("00"), y: false, p: 0.5 }],
        );
        assert!(dup.is_err());
        let bad_sum = ExplicitDistribution::new(2, vec![WeightedExample { x: bv("00"), y: false, p: 0.9 }]);
        assert!(bad_sum.is_err());
    }

    #[test]
    fn vc_formula() {
        assert_eq!(vc_sample_size(10, 0.1, 8.0).unwrap(), 8000);
        assert_eq!(vc_sample_size(1, 1.0, 1.0).unwrap(), 1);
    }

    #[test]
    fn point_mass_draws() {
        let d = ExplicitDistribution::new(3, vec![WeightedExample { x: bv("101"), y: true, p: 1.0 }]).unwrap();
        let s = draw(&d, 5, 1).unwrap();
        assert_eq!(s.len(), 5);
        assert!(s.examples().iter().all(|e| e.x == bv("101") && e.y));
    }

    #[test]
    fn band_enumeration_counts() {
        let mut rng = seeded_rng(0, 0);
        let pts =
            realize_marginal(6, &MarginalSpec::WeightBand { lo: 1, hi: 2, support_size: None }, &mut rng).unwrap();
        assert_eq!(pts.len(), 6 + 15);
        assert_eq!(binomial(30, 15), 155_117_520);
    }
}
