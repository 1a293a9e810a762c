//! Simplex results against brute-force vertex enumeration on small boxed LPs.

use adl_core::l1regression::{lp_solve, LpProblem, LpStatus, Sense};
use proptest::prelude::*;

/// Solves the square system `a x = b` by Gaussian elimination; None when
/// (nearly) singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-9 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if m < k {
        return vec![];
    }
    let mut out = subsets(m - 1, k);
    for mut s in subsets(m - 1, k - 1) {
        s.push(m - 1);
        out.push(s);
    }
    out
}

/// Minimum of c.x over {A x <= b, 0 <= x <= u} by enumerating vertices.
fn vertex_min(c: &[f64], a: &[Vec<f64>], b: &[f64], u: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut cons: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        cons.push((e.clone(), 0.0));
        e[j] = 1.0;
        cons.push((e, u[j]));
    }
    let mut best: Option<f64> = None;
    for s in subsets(cons.len(), n) {
        let rows = s.iter().map(|&i| cons[i].0.clone()).collect();
        let rhs = s.iter().map(|&i| cons[i].1).collect();
        let Some(x) = solve_square(rows, rhs) else { continue };
        let ok = cons.iter().all(|(r, bb)| r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= bb + 1e-7);
        if ok {
            let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
            best = Some(best.map_or(v, |w: f64| w.min(v)));
        }
    }
    best
}

fn small_lp() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-5i32..=5, n),
            prop::collection::vec(prop::collection::vec(-4i32..=4, n), m),
            prop::collection::vec(-3i32..=6, m),
            prop::collection::vec(1i32..=4, n),
        )
            .prop_map(|(c, a, b, u)| {
                let f = |v: Vec<i32>| v.into_iter().map(f64::from).collect::<Vec<_>>();
                (f(c), a.into_iter().map(f).collect(), f(b), f(u))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_matches_vertex_enumeration((c, a, b, u) in small_lp()) {
        let n = c.len();
        let mut lp = LpProblem::new(n);
        lp.objective = c.clone();
        for j in 0..n {
            lp.set_bounds(j, 0.0, u[j]);
        }
        for (row, &rhs) in a.iter().zip(&b) {
            lp.add_row(row.iter().copied().enumerate().collect(), Sense::Le, rhs);
        }
        let sol = lp_solve(&lp).unwrap();
        match vertex_min(&c, &a, &b, &u) {
            Some(v) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - v).abs() < 1e-7, "simplex {} vs vertices {}", sol.objective, v);
                prop_assert!(lp.max_violation(&sol.x) < 1e-7);
            }
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn ge_rows_mirror_le_rows((c, a, b, u) in small_lp()) {
        let n = c.len();
        let mut le = LpProblem::new(n);
        let mut ge = LpProblem::new(n);
        le.objective = c.clone();
        ge.objective = c.clone();
        for j in 0..n {
            le.set_bounds(j, 0.0, u[j]);
            ge.set_bounds(j, 0.0, u[j]);
        }
        for (row, &rhs) in a.iter().zip(&b) {
            le.add_row(row.iter().copied().enumerate().collect(), Sense::Le, rhs);
            ge.add_row(row.iter().map(|v| -v).enumerate().collect(), Sense::Ge, -rhs);
        }
        let (s1, s2) = (lp_solve(&le).unwrap(), lp_solve(&ge).unwrap());
        prop_assert_eq!(s1.status, s2.status);
        if s1.status == LpStatus::Optimal {
            prop_assert!((s1.objective - s2.objective).abs() < 1e-7);
        }
    }
}

#[test]
fn unbounded_detected() {
    let mut lp = LpProblem::new(2);
    lp.objective = vec![-1.0, 0.0];
    lp.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Le, 1.0);
    assert_eq!(lp_solve(&lp).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn free_variable_equality() {
    // min x + y with x - y = 3, x free, y in [0, 2].
    let mut lp = LpProblem::new(2);
    lp.objective = vec![1.0, 1.0];
    lp.set_free(0);
    lp.set_bounds(1, 0.0, 2.0);
    lp.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Eq, 3.0);
    let sol = lp_solve(&lp).unwrap();
    assert!((sol.objective - 3.0).abs() < 1e-9);
}
