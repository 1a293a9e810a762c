use serde::{Deserialize, Serialize};

use super::BitVector;

/// A subset of the hypercube with a total, deterministic membership test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// {x : x_i = 1}
    CoordinateOne {
        index: usize,
    },
    /// {x : W_I(x) <= theta}
    WeightAtMost {
        coords: BitVector,
        theta: usize,
    },
    /// {x : W_I(x) > theta}
    WeightMoreThan {
        coords: BitVector,
        theta: usize,
    },
    /// Intersection of the parts; the empty intersection is the whole space.
    Intersection {
        parts: Vec<Region>,
    },
    Complement {
        inner: Box<Region>,
    },
}

impl Region {
    pub fn everything() -> Region {
        Region::Intersection { parts: Vec::new() }
    }

    pub fn complement_of(r: Region) -> Region {
        match r {
            Region::Complement { inner } => *inner,
            other => Region::Complement { inner: Box::new(other) },
        }
    }

    /// Intersection that flattens nested intersections and drops
    /// whole-space parts.
    pub fn intersect(a: Region, b: Region) -> Region {
        let mut parts = Vec::new();
        for r in [a, b] {
            match r {
                Region::Intersection { parts: inner } => parts.extend(inner),
                other => parts.push(other),
            }
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Region::Intersection { parts }
        }
    }

    pub fn contains(&self, x: &BitVector) -> bool {
        match self {
            Region::CoordinateOne { index } => x.get(*index),
            Region::WeightAtMost { coords, theta } => x.weight_on(coords) <= *theta,
            Region::WeightMoreThan { coords, theta } => x.weight_on(coords) > *theta,
            Region::Intersection { parts } => parts.iter().all(|p| p.contains(x)),
            Region::Complement { inner } => !inner.contains(x),
        }
    }

    /// Largest coordinate index referenced plus one (0 if none).
    pub fn min_dimension(&self) -> usize {
        match self {
            Region::CoordinateOne { index } => index + 1,
            Region::WeightAtMost { coords, .. } | Region::WeightMoreThan { coords, .. } => coords.len(),
            Region::Intersection { parts } => parts.iter().map(Region::min_dimension).max().unwrap_or(0),
            Region::Complement { inner } => inner.min_dimension(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Region::Intersection { parts } => 1 + parts.iter().map(Region::depth).max().unwrap_or(0),
            Region::Complement { inner } => 1 + inner.depth(),
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership() {
        let x: BitVector = "1101".parse().unwrap();
        let i = BitVector::from_indices(4, &[0, 1, 2]).unwrap();
        assert!(Region::CoordinateOne { index: 0 }.contains(&x));
        assert!(!Region::CoordinateOne { index: 2 }.contains(&x));
        assert!(Region::WeightAtMost { coords: i.clone(), theta: 2 }.contains(&x));
        assert!(!Region::WeightMoreThan { coords: i.clone(), theta: 2 }.contains(&x));
        assert!(Region::everything().contains(&x));
        let both = Region::intersect(
            Region::CoordinateOne { index: 3 },
            Region::complement_of(Region::CoordinateOne { index: 2 }),
        );
        assert!(both.contains(&x));
        assert!(!Region::complement_of(both).contains(&x));
    }
}
