//! Expected phylogenetic diversity and the greedy protection algorithm.
//!
//! With independent extinction probabilities `p_i`, an arc `a` is lost only
//! if every species of its clade `L_a` goes extinct, which happens with
//! probability `P_a = Π_{i ∈ L_a} p_i`. The expected PD is then
//! `Σ_a λ_a (1 − P_a)`.
//!
//! Protecting species `j` sets `p_j = 0`, which zeroes `P_a` exactly on the
//! arcs of `j`'s root path and leaves every other arc alone. The marginal
//! gain of protecting `j` is therefore `Σ_{a ∈ path(j)} λ_a P_a`, computed
//! with the current protections. [`Greedy`] keeps the `P_a` values and
//! updates them path by path.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::tree::Phylogeny;

/// Relative tolerance under which two gains are considered tied. Ties go to
/// the smallest species index.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// `true` if `gain` ties with (or beats) `best` under [`TIE_TOLERANCE`].
pub fn ties_with(gain: f64, best: f64) -> bool {
    gain >= best - TIE_TOLERANCE * best.abs()
}

/// Per-species extinction probabilities of unprotected species.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (species, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityOutOfRange { species, value });
            }
        }
        Ok(Self(values))
    }

    /// Same probability for every species.
    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Copy with the listed species made safe (probability 0).
    pub fn protect(&self, species: &[usize]) -> Result<Self> {
        let mut out = self.0.clone();
        for &s in species {
            *out.get_mut(s).ok_or(Error::UnknownSpecies(s))? = 0.0;
        }
        Ok(Self(out))
    }

    fn check_against(&self, tree: &Phylogeny) -> Result<()> {
        if self.len() != tree.species_count() {
            return Err(Error::DimensionMismatch {
                expected: tree.species_count(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

/// Probability `P_v` that the whole clade below node `v` goes extinct.
fn clade_extinction(tree: &Phylogeny, probs: &[f64]) -> Vec<f64> {
    let mut extinct = vec![1.0; tree.node_count()];
    for &v in tree.preorder().iter().rev() {
        extinct[v] = match tree.node_species(v) {
            Some(s) => probs[s],
            None => tree.children(v).iter().map(|&c| extinct[c]).product(),
        };
    }
    extinct
}

fn epd_unchecked(tree: &Phylogeny, probs: &[f64]) -> f64 {
    let extinct = clade_extinction(tree, probs);
    tree.arcs()
        .map(|a| tree.lengths()[a.0] * (1.0 - extinct[a.0]))
        .sum()
}

/// Expected PD with nothing protected.
pub fn epd(tree: &Phylogeny, probs: &ProbabilityVector) -> Result<f64> {
    probs.check_against(tree)?;
    Ok(epd_unchecked(tree, probs.as_slice()))
}

/// Expected PD when every species of `protected` survives with certainty.
pub fn epd_with_protection(
    tree: &Phylogeny,
    probs: &ProbabilityVector,
    protected: &[usize],
) -> Result<f64> {
    probs.check_against(tree)?;
    let zeroed = probs.protect(protected)?;
    Ok(epd_unchecked(tree, zeroed.as_slice()))
}

/// HEDGE score of every species: the ePD increase from protecting that
/// species alone.
pub fn hedge_scores(tree: &Phylogeny, probs: &ProbabilityVector) -> Result<Vec<f64>> {
    let state = Greedy::new(tree, probs)?;
    Ok((0..tree.species_count()).map(|s| state.gain(s)).collect())
}

/// Incremental state of the greedy algorithm: the current clade extinction
/// probabilities given the species protected so far.
#[derive(Debug, Clone)]
pub struct Greedy<'t> {
    tree: &'t Phylogeny,
    extinct: Vec<f64>,
    protected: Vec<bool>,
    base_epd: f64,
}

impl<'t> Greedy<'t> {
    pub fn new(tree: &'t Phylogeny, probs: &ProbabilityVector) -> Result<Self> {
        probs.check_against(tree)?;
        let extinct = clade_extinction(tree, probs.as_slice());
        let base_epd = tree
            .arcs()
            .map(|a| tree.lengths()[a.0] * (1.0 - extinct[a.0]))
            .sum();
        Ok(Self {
            tree,
            extinct,
            protected: vec![false; tree.species_count()],
            base_epd,
        })
    }

    /// ePD before any protection.
    pub fn base_epd(&self) -> f64 {
        self.base_epd
    }

    pub fn is_protected(&self, species: usize) -> bool {
        self.protected[species]
    }

    /// Marginal ePD gain of protecting `species` now.
    ///
    /// # Panics
    /// If `species` is out of range.
    pub fn gain(&self, species: usize) -> f64 {
        if self.protected[species] {
            return 0.0;
        }
        let lengths = self.tree.lengths();
        let mut v = self.tree.species_node(species).expect("species in range");
        let mut total = 0.0;
        while let Some(p) = self.tree.parent(v) {
            total += lengths[v] * self.extinct[v];
            v = p;
        }
        total
    }

    /// Protects `species` and returns the realized gain.
    pub fn protect(&mut self, species: usize) -> f64 {
        let gain = self.gain(species);
        self.protected[species] = true;
        let mut v = self.tree.species_node(species).expect("species in range");
        loop {
            self.extinct[v] = 0.0;
            match self.tree.parent(v) {
                Some(p) => v = p,
                None => break,
            }
        }
        gain
    }
}

/// Greedy selection: species in pick order with the gain of each pick.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtectionSet {
    pub species: Vec<usize>,
    pub gains: Vec<f64>,
    pub base_epd: f64,
    /// ePD with all of `species` protected, recomputed from scratch.
    pub final_epd: f64,
}

impl ProtectionSet {
    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }

    /// Selected species in increasing index order.
    pub fn sorted(&self) -> Vec<usize> {
        let mut out = self.species.clone();
        out.sort_unstable();
        out
    }
}

fn check_budget(tree: &Phylogeny, k: usize) -> Result<()> {
    if k > tree.species_count() {
        return Err(Error::BudgetOutOfRange {
            k,
            n: tree.species_count(),
        });
    }
    Ok(())
}

fn finish(
    tree: &Phylogeny,
    probs: &ProbabilityVector,
    base_epd: f64,
    species: Vec<usize>,
    gains: Vec<f64>,
) -> Result<ProtectionSet> {
    let final_epd = epd_with_protection(tree, probs, &species)?;
    Ok(ProtectionSet {
        species,
        gains,
        base_epd,
        final_epd,
    })
}

/// Reference greedy: every round rescans all unprotected species.
pub fn greedy_protect_plain(
    tree: &Phylogeny,
    probs: &ProbabilityVector,
    k: usize,
) -> Result<ProtectionSet> {
    check_budget(tree, k)?;
    let mut state = Greedy::new(tree, probs)?;
    let mut species = Vec::with_capacity(k);
    let mut gains = Vec::with_capacity(k);
    for _ in 0..k {
        let scores: Vec<(usize, f64)> = (0..tree.species_count())
            .filter(|&s| !state.is_protected(s))
            .map(|s| (s, state.gain(s)))
            .collect();
        let best = scores.iter().map(|&(_, g)| g).fold(f64::NEG_INFINITY, f64::max);
        let (pick, gain) = scores
            .into_iter()
            .find(|&(_, g)| ties_with(g, best))
            .expect("budget checked");
        state.protect(pick);
        species.push(pick);
        gains.push(gain);
    }
    let base = state.base_epd();
    finish(tree, probs, base, species, gains)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    bound: f64,
    species: usize,
    round: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.species.cmp(&self.species))
    }
}

/// Greedy (I-HEDGE) selection of `k` species maximizing ePD.
///
/// Gains only shrink as protections accumulate, so stale gains in the heap
/// are upper bounds and only the candidates near the top are re-evaluated.
/// The result is identical to [`greedy_protect_plain`], tie-break included.
pub fn greedy_protect(tree: &Phylogeny, probs: &ProbabilityVector, k: usize) -> Result<ProtectionSet> {
    check_budget(tree, k)?;
    let mut state = Greedy::new(tree, probs)?;
    let mut heap: BinaryHeap<Candidate> = (0..tree.species_count())
        .map(|s| Candidate {
            bound: state.gain(s),
            species: s,
            round: 0,
        })
        .collect();
    let mut species = Vec::with_capacity(k);
    let mut gains = Vec::with_capacity(k);
    let mut tied = Vec::new();

    for round in 0..k {
        let top = loop {
            let mut c = heap.pop().expect("budget checked");
            if c.round == round {
                break c;
            }
            c.bound = state.gain(c.species);
            c.round = round;
            heap.push(c);
        };
        let best = top.bound;
        tied.clear();
        tied.push(top);
        while heap.peek().is_some_and(|c| ties_with(c.bound, best)) {
            let mut c = heap.pop().expect("peeked");
            if c.round != round {
                c.bound = state.gain(c.species);
                c.round = round;
                if !ties_with(c.bound, best) {
                    heap.push(c);
                    continue;
                }
            }
            tied.push(c);
        }
        let (at, pick) = tied
            .iter()
            .enumerate()
            .min_by_key(|(_, c)| c.species)
            .map(|(i, c)| (i, *c))
            .expect("non-empty");
        tied.swap_remove(at);
        heap.extend(tied.drain(..));
        state.protect(pick.species);
        species.push(pick.species);
        gains.push(pick.bound);
    }
    let base = state.base_epd();
    finish(tree, probs, base, species, gains)
}
