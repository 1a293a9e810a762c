use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::distributions::binomial;
use crate::domain::BitVector;
use crate::error::{Error, Result};

/// Default cap on the number of monomial features.
pub const DEFAULT_FEATURE_CAP: usize = 200_000;

/// Size-then-lex order on coordinate subsets.
pub fn cmp_size_lex(a: &BitVector, b: &BitVector) -> Ordering {
    a.weight().cmp(&b.weight()).then_with(|| a.cmp_lex_indices(b))
}

fn push_subsets(items: &[usize], d: usize, n: usize, out: &mut impl FnMut(BitVector)) {
    fn rec(items: &[usize], start: usize, left: usize, cur: &mut BitVector, out: &mut impl FnMut(BitVector)) {
        if left == 0 {
            out(cur.clone());
            return;
        }
        for k in start..items.len() {
            if items.len() - k < left {
                break;
            }
            cur.set(items[k], true);
            rec(items, k + 1, left - 1, cur, out);
            cur.set(items[k], false);
        }
    }
    let mut cur = BitVector::zeros(n);
    for size in 0..=d.min(items.len()) {
        rec(items, 0, size, &mut cur, out);
    }
}

/// Every subset of `coords` of size at most `d`, in size-then-lex order.
pub fn monomial_features(coords: &BitVector, d: usize, cap: usize) -> Result<Vec<BitVector>> {
    let k = coords.weight();
    let count: u128 = (0..=d.min(k)).map(|s| binomial(k, s)).sum();
    if count > cap as u128 {
        return Err(Error::CapExceeded { what: "monomial features", size: count, cap: cap as u128 });
    }
    let items = coords.indices();
    let mut out = Vec::with_capacity(count as usize);
    push_subsets(&items, d, coords.len(), &mut |s| out.push(s));
    Ok(out)
}

/// The monomials of degree at most `d` over `coords` that are non-zero on
/// at least one of `points`; all other monomials vanish on the data. Output
/// is in size-then-lex order.
pub fn active_monomials(points: &[BitVector], coords: &BitVector, d: usize, cap: usize) -> Result<Vec<BitVector>> {
    let n = coords.len();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let per_point: Vec<Vec<usize>> = points.iter().map(|x| x.and(coords).indices()).collect();
    for items in &per_point {
        let mut err = None;
        push_subsets(items, d, n, &mut |s| {
            if err.is_none() {
                seen.insert(s.indices());
                if seen.len() > cap {
                    err = Some(());
                }
            }
        });
        if err.is_some() {
            return Err(Error::CapExceeded { what: "monomial features", size: seen.len() as u128, cap: cap as u128 });
        }
    }
    let mut out: Vec<BitVector> =
        seen.into_iter().map(|idx| BitVector::from_indices(n, &idx).expect("indices come from coords")).collect();
    out.sort_by(cmp_size_lex);
    Ok(out)
}

/// Greedily picks, in order, the columns of the 0/1 evaluation matrix
/// (rows = points, columns = monomials) that are linearly independent of
/// the ones already picked. The picked columns span the same space.
pub fn independent_columns(points: &[BitVector], monomials: &[BitVector]) -> Vec<usize> {
    let m = points.len();
    // Reduced basis vectors with their pivot row.
    let mut basis: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut picked = Vec::new();
    for (k, mono) in monomials.iter().enumerate() {
        if basis.len() == m {
            break;
        }
        let mut v: Vec<f64> = points.iter().map(|x| if mono.is_subset_of(x) { 1.0 } else { 0.0 }).collect();
        for (piv, b) in &basis {
            let f = v[*piv];
            if f != 0.0 {
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= f * bi;
                }
            }
        }
        let (piv, &mag) = v.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap_or((0, &0.0));
        if mag.abs() > 1e-9 {
            let scale = v[piv];
            v.iter_mut().for_each(|e| *e /= scale);
            // Keep the basis fully reduced on pivot rows.
            for (_, b) in basis.iter_mut() {
                let f = b[piv];
                if f != 0.0 {
                    for (bi, vi) in b.iter_mut().zip(&v) {
                        *bi -= f * vi;
                    }
                }
            }
            basis.push((piv, v));
            picked.push(k);
        }
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_counts() {
        let i = BitVector::ones(2);
        let f = monomial_features(&i, 1, DEFAULT_FEATURE_CAP).unwrap();
        let names: Vec<Vec<usize>> = f.iter().map(|s| s.indices()).collect();
        assert_eq!(names, vec![vec![], vec![0], vec![1]]);
        assert_eq!(monomial_features(&BitVector::ones(6), 2, DEFAULT_FEATURE_CAP).unwrap().len(), 22);
        assert_eq!(monomial_features(&BitVector::ones(6), 0, DEFAULT_FEATURE_CAP).unwrap().len(), 1);
        assert!(monomial_features(&BitVector::ones(40), 5, DEFAULT_FEATURE_CAP).is_err());
    }

    #[test]
    fn active_subset_of_full() {
        let pts: Vec<BitVector> = ["1100", "0011", "1000"].iter().map(|s| s.parse().unwrap()).collect();
        let i = BitVector::ones(4);
        let act = active_monomials(&pts, &i, 2, 100).unwrap();
        let names: Vec<Vec<usize>> = act.iter().map(|s| s.indices()).collect();
        assert_eq!(names, vec![vec![], vec![0], vec![1], vec![2], vec![3], vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn independence_rank() {
        let pts: Vec<BitVector> = ["00", "10", "01", "11"].iter().map(|s| s.parse().unwrap()).collect();
        let monos = monomial_features(&BitVector::ones(2), 2, 100).unwrap();
        assert_eq!(independent_columns(&pts, &monos).len(), 4);
        let two: Vec<BitVector> = pts[..2].to_vec();
        assert_eq!(independent_columns(&two, &monos), vec![0, 1]);
    }
}
