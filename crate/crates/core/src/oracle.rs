//! Exhaustive reference computations for small trees.
//!
//! Both routines work straight from the definitions and share no code with
//! the incremental greedy machinery in [`crate::epd`].

use alloc::vec::Vec;

use crate::epd::{epd_with_protection, ties_with, ProbabilityVector};
use crate::error::{Error, Result};
use crate::tree::Phylogeny;

/// Largest species count the exhaustive routines accept.
pub const EXHAUSTIVE_CAP: usize = 20;

fn check_cap(tree: &Phylogeny) -> Result<()> {
    let n = tree.species_count();
    if n > EXHAUSTIVE_CAP {
        return Err(Error::AboveCap {
            n,
            cap: EXHAUSTIVE_CAP,
        });
    }
    Ok(())
}

/// ePD as the expectation of rooted PD over all `2^n` survival outcomes.
pub fn epd_by_outcome_enumeration(tree: &Phylogeny, probs: &ProbabilityVector) -> Result<f64> {
    check_cap(tree)?;
    let n = tree.species_count();
    if probs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: probs.len(),
        });
    }
    let p = probs.as_slice();

    // Bit mask of the species below each arc.
    let arcs: Vec<(u32, f64)> = tree
        .arcs()
        .map(|a| {
            let mask = tree
                .clade(a)
                .expect("arc from tree")
                .iter()
                .fold(0u32, |m, &s| m | (1 << s));
            (mask, tree.lengths()[a.0])
        })
        .collect();

    let mut total = 0.0;
    for survivors in 0u32..(1u32 << n) {
        let mut weight = 1.0;
        for (s, &ps) in p.iter().enumerate() {
            weight *= if survivors & (1 << s) != 0 { 1.0 - ps } else { ps };
        }
        if weight == 0.0 {
            continue;
        }
        let pd: f64 = arcs
            .iter()
            .filter(|(mask, _)| mask & survivors != 0)
            .map(|&(_, len)| len)
            .sum();
        total += weight * pd;
    }
    Ok(total)
}

/// Advances `comb` to the next k-subset of `0..n` in lexicographic order.
fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let Some(i) = (0..k).rev().find(|&i| comb[i] < n - k + i) else {
        return false;
    };
    comb[i] += 1;
    for j in i + 1..k {
        comb[j] = comb[j - 1] + 1;
    }
    true
}

/// Best size-`k` protection set by trying every subset. Among sets whose ePD
/// ties the best, the lexicographically smallest wins.
pub fn brute_force_protect(
    tree: &Phylogeny,
    probs: &ProbabilityVector,
    k: usize,
) -> Result<(Vec<usize>, f64)> {
    check_cap(tree)?;
    let n = tree.species_count();
    if k > n {
        return Err(Error::BudgetOutOfRange { k, n });
    }
    let mut comb: Vec<usize> = (0..k).collect();
    let mut values = Vec::new();
    loop {
        values.push(epd_with_protection(tree, probs, &comb)?);
        if !next_combination(&mut comb, n) {
            break;
        }
    }
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // First set, in lexicographic order, that ties the maximum.
    let mut best_set: Vec<usize> = (0..k).collect();
    for value in values {
        if ties_with(value, best) {
            break;
        }
        next_combination(&mut best_set, n);
    }
    let value = epd_with_protection(tree, probs, &best_set)?;
    Ok((best_set, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::epd::{epd, hedge_scores};

    fn cherry(len_a: f64, len_b: f64) -> Phylogeny {
        Phylogeny::from_parents(
            vec![None, Some(0), Some(0)],
            vec![0.0, len_a, len_b],
            vec![None; 3],
        )
        .unwrap()
    }

    #[test]
    fn single_lineage_value() {
        // A zero-length sister leaves the λ(1−p) term of the other species.
        let t = cherry(10.0, 0.0);
        let p = ProbabilityVector::new(vec![0.3, 0.5]).unwrap();
        let v = epd_by_outcome_enumeration(&t, &p).unwrap();
        assert!((v - 7.0).abs() < 1e-12);
    }

    #[test]
    fn all_safe_is_total_pd() {
        let t = cherry(2.0, 3.0);
        let p = ProbabilityVector::uniform(2, 0.0).unwrap();
        assert_eq!(epd_by_outcome_enumeration(&t, &p).unwrap(), 5.0);
    }

    #[test]
    fn brute_force_edges() {
        let t = Phylogeny::from_parents(
            vec![None, Some(0), Some(1), Some(1), Some(0)],
            vec![0.0, 3.0, 2.0, 2.0, 9.0],
            vec![None; 5],
        )
        .unwrap();
        let p = ProbabilityVector::new(vec![0.8, 0.6, 0.4]).unwrap();
        let (set, value) = brute_force_protect(&t, &p, 3).unwrap();
        assert_eq!(set, [0, 1, 2]);
        assert_eq!(value, t.total_pd());
        let (set, value) = brute_force_protect(&t, &p, 0).unwrap();
        assert!(set.is_empty());
        assert_eq!(value, epd(&t, &p).unwrap());

        let scores = hedge_scores(&t, &p).unwrap();
        let top = (0..3)
            .max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)))
            .unwrap();
        assert_eq!(brute_force_protect(&t, &p, 1).unwrap().0, [top]);
    }

    #[test]
    fn cap_enforced() {
        let n = EXHAUSTIVE_CAP + 1;
        let mut parents = vec![Some(0); n + 1];
        parents[0] = None;
        let t = Phylogeny::from_parents(parents, vec![1.0; n + 1], vec![None; n + 1]).unwrap();
        let p = ProbabilityVector::uniform(n, 0.5).unwrap();
        assert_eq!(
            epd_by_outcome_enumeration(&t, &p),
            Err(Error::AboveCap { n, cap: EXHAUSTIVE_CAP })
        );
        assert!(matches!(brute_force_protect(&t, &p, 1), Err(Error::AboveCap { .. })));
    }
}
