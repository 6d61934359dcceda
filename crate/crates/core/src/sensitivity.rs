//! Two-scenario sensitivity experiment.
//!
//! For scenarios ω ∈ {1, 2}, `S_ω` is the optimal protection set under ω.
//! `epd_ωσ` is the ePD under scenario ω when protecting `S_σ`, and
//! `gap_ω = (epd_ωω − epd_ωσ) / epd_ωω` is the relative loss in scenario ω
//! from protecting the other scenario's optimum.

use alloc::format;
use alloc::vec::Vec;

use crate::epd::{epd_with_protection, greedy_protect, ProbabilityVector};
use crate::error::{Error, Result};
use crate::gen::{
    self, fixed_tree_instance, gen_instance, perturbed_instance, validate_rho, Category,
    CategoryIntervals, GenParams, Instance, ProbabilityMode, Provenance, Scenario, CATEGORY_COUNT,
};
use crate::tree::Phylogeny;

/// Cross values within this relative distance above the optimum are treated
/// as rounding noise and the gap is reported as 0.
const OPTIMALITY_SLACK: f64 = 1e-9;

/// Descriptive numbers about one instance, for reports.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDetail {
    pub species: usize,
    pub internal_nodes: usize,
    pub longest_root_path: f64,
    pub shortest_root_path: f64,
    /// Total PD under each scenario's branch lengths.
    pub total_pd: [f64; 2],
    /// ePD with nothing protected under each scenario.
    pub base_epd: [f64; 2],
    pub conversions: [Option<Scenario>; 2],
    pub category_counts: Option<[usize; CATEGORY_COUNT]>,
    /// Protected species per category, for `S_1` and `S_2`.
    pub protected_by_category: Option<[[usize; CATEGORY_COUNT]; 2]>,
}

/// Outcome of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub provenance: Provenance,
    pub k: usize,
    /// Optimal sets in pick order.
    pub s1: Vec<usize>,
    pub s2: Vec<usize>,
    pub epd11: f64,
    pub epd12: f64,
    pub epd21: f64,
    pub epd22: f64,
    pub gap1: f64,
    pub gap2: f64,
    pub dissimilarity: f64,
    pub detail: InstanceDetail,
}

impl InstanceResult {
    pub fn index(&self) -> u64 {
        self.provenance.index
    }

    pub fn max_gap(&self) -> f64 {
        self.gap1.max(self.gap2)
    }
}

fn relative_loss(optimum: f64, cross: f64) -> Result<f64> {
    if optimum <= 0.0 || optimum.is_nan() {
        return Err(Error::NonPositiveOptimum(optimum));
    }
    let gap = (optimum - cross) / optimum;
    if gap < 0.0 {
        if -gap <= OPTIMALITY_SLACK {
            return Ok(0.0);
        }
        return Err(Error::NotOptimal { optimum, cross });
    }
    Ok(gap)
}

/// Relative gaps `(gap1, gap2)` from the four cross-scenario ePD values.
pub fn gaps(epd11: f64, epd12: f64, epd21: f64, epd22: f64) -> Result<(f64, f64)> {
    Ok((relative_loss(epd11, epd12)?, relative_loss(epd22, epd21)?))
}

/// `|S1 Δ S2| / |S1 ∪ S2|`; 0 when both sets are empty.
pub fn dissimilarity(s1: &[usize], s2: &[usize]) -> f64 {
    let mut a = s1.to_vec();
    let mut b = s2.to_vec();
    a.sort_unstable();
    a.dedup();
    b.sort_unstable();
    b.dedup();
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - common;
    if union == 0 {
        log::warn!("dissimilarity of two empty sets reported as 0");
        return 0.0;
    }
    (union - common) as f64 / union as f64
}

fn per_category(categories: &[Category], set: &[usize]) -> [usize; CATEGORY_COUNT] {
    let mut counts = [0; CATEGORY_COUNT];
    for &s in set {
        counts[categories[s].index()] += 1;
    }
    counts
}

/// Solves both scenarios of `instance` and fills in the cross values.
pub fn solve_instance(instance: &Instance) -> Result<InstanceResult> {
    let [sc1, sc2] = &instance.scenarios;
    let (t1, t2) = (sc1.tree(&instance.tree), sc2.tree(&instance.tree));
    let best1 = greedy_protect(t1, &sc1.probs, instance.k)?;
    let best2 = greedy_protect(t2, &sc2.probs, instance.k)?;
    let epd11 = best1.final_epd;
    let epd22 = best2.final_epd;
    let epd12 = epd_with_protection(t1, &sc1.probs, &best2.species)?;
    let epd21 = epd_with_protection(t2, &sc2.probs, &best1.species)?;
    let (gap1, gap2) = gaps(epd11, epd12, epd21, epd22)?;

    let paths = instance.tree.root_path_lengths();
    let detail = InstanceDetail {
        species: instance.tree.species_count(),
        internal_nodes: instance.tree.internal_count(),
        longest_root_path: paths.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        shortest_root_path: paths.iter().copied().fold(f64::INFINITY, f64::min),
        total_pd: [t1.total_pd(), t2.total_pd()],
        base_epd: [best1.base_epd, best2.base_epd],
        conversions: [sc1.conversion, sc2.conversion],
        category_counts: instance.categories.as_ref().map(|c| {
            let all: Vec<usize> = (0..c.len()).collect();
            per_category(c, &all)
        }),
        protected_by_category: instance
            .categories
            .as_ref()
            .map(|c| [per_category(c, &best1.species), per_category(c, &best2.species)]),
    };

    Ok(InstanceResult {
        provenance: instance.provenance,
        k: instance.k,
        dissimilarity: dissimilarity(&best1.species, &best2.species),
        s1: best1.species,
        s2: best2.species,
        epd11,
        epd12,
        epd21,
        epd22,
        gap1,
        gap2,
        detail,
    })
}

/// Which family of instances a batch draws.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentFamily {
    /// Fresh random tree per instance (ultrametric or not, per `params`).
    RandomTrees(GenParams),
    /// Fixed tree and categories; the two category conversions are random.
    FixedTreeScenarios {
        tree: Phylogeny,
        categories: Vec<Category>,
        intervals: CategoryIntervals,
        probability_mode: ProbabilityMode,
        rho_choices: Vec<f64>,
    },
    /// Fixed tree and probabilities; the two scenarios perturb branch lengths.
    FixedTreePerturbation {
        tree: Phylogeny,
        categories: Option<Vec<Category>>,
        probs: ProbabilityVector,
        fraction: f64,
        rho_choices: Vec<f64>,
    },
}

impl ExperimentFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RandomTrees(p) if p.ultrametric => "random-ultrametric",
            Self::RandomTrees(_) => "random-nonultrametric",
            Self::FixedTreeScenarios { .. } => "fixed-tree-scenarios",
            Self::FixedTreePerturbation { .. } => "fixed-tree-perturbation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub family: ExperimentFamily,
    pub instances: usize,
    pub master_seed: u64,
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::InvalidConfig("instance count must be positive".into()));
        }
        match &self.family {
            ExperimentFamily::RandomTrees(params) => params.validate(),
            ExperimentFamily::FixedTreeScenarios {
                tree,
                categories,
                rho_choices,
                ..
            } => {
                if categories.len() != tree.species_count() {
                    return Err(Error::DimensionMismatch {
                        expected: tree.species_count(),
                        got: categories.len(),
                    });
                }
                validate_rho(rho_choices)
            }
            ExperimentFamily::FixedTreePerturbation {
                tree,
                categories,
                probs,
                fraction,
                rho_choices,
            } => {
                if probs.len() != tree.species_count()
                    || categories.as_ref().is_some_and(|c| c.len() != tree.species_count())
                {
                    return Err(Error::DimensionMismatch {
                        expected: tree.species_count(),
                        got: probs.len(),
                    });
                }
                if !(0.0..1.0).contains(fraction) {
                    return Err(Error::InvalidConfig(format!(
                        "perturbation fraction must be in [0, 1), got {fraction}"
                    )));
                }
                validate_rho(rho_choices)
            }
        }
    }

    /// The `index`-th instance of the batch.
    pub fn instance(&self, index: u64) -> Result<Instance> {
        let seed = self.master_seed;
        match &self.family {
            ExperimentFamily::RandomTrees(params) => gen_instance(params, seed, index),
            ExperimentFamily::FixedTreeScenarios {
                tree,
                categories,
                intervals,
                probability_mode,
                rho_choices,
            } => Ok(fixed_tree_instance(
                tree,
                categories,
                intervals,
                *probability_mode,
                rho_choices,
                seed,
                index,
            )),
            ExperimentFamily::FixedTreePerturbation {
                tree,
                categories,
                probs,
                fraction,
                rho_choices,
            } => perturbed_instance(
                tree,
                categories.as_deref(),
                probs,
                *fraction,
                rho_choices,
                seed,
                index,
            ),
        }
    }
}

/// Generates and solves instance `index` of the batch.
pub fn run_instance(config: &BatchConfig, index: u64) -> Result<InstanceResult> {
    solve_instance(&config.instance(index)?)
}

/// Aggregate statistics over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub instances: usize,
    pub min_species: usize,
    pub max_species: usize,
    /// Mean of the `2N` pooled gap values.
    pub mean_gap: f64,
    /// Population standard deviation of the pooled gaps.
    pub std_gap: f64,
    pub max_gap: f64,
    /// Largest dissimilarity over all instances.
    pub max_dissimilarity: f64,
    /// Instance holding `max_gap` (lowest index on ties).
    pub argmax: InstanceResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub stats: BatchStats,
    /// Per-instance results, in index order.
    pub results: Vec<InstanceResult>,
}

/// Pooled statistics over `results`, independent of their order.
pub fn summarize(results: &[InstanceResult]) -> Result<BatchStats> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut order: Vec<&InstanceResult> = results.iter().collect();
    order.sort_by_key(|r| r.index());

    let pooled = || order.iter().flat_map(|r| [r.gap1, r.gap2]);
    let count = (2 * order.len()) as f64;
    let mean = pooled().sum::<f64>() / count;
    let variance = pooled().map(|g| (g - mean) * (g - mean)).sum::<f64>() / count;

    let mut argmax = order[0];
    for r in &order[1..] {
        if r.max_gap() > argmax.max_gap() {
            argmax = r;
        }
    }
    Ok(BatchStats {
        instances: order.len(),
        min_species: order.iter().map(|r| r.detail.species).min().unwrap_or(0),
        max_species: order.iter().map(|r| r.detail.species).max().unwrap_or(0),
        mean_gap: mean,
        std_gap: libm::sqrt(variance),
        max_gap: argmax.max_gap(),
        max_dissimilarity: order.iter().map(|r| r.dissimilarity).fold(0.0, f64::max),
        argmax: argmax.clone(),
    })
}

/// Runs the whole batch sequentially.
pub fn run_batch(config: &BatchConfig) -> Result<BatchOutcome> {
    config.validate()?;
    let results = (0..config.instances as u64)
        .map(|i| run_instance(config, i))
        .collect::<Result<Vec<_>>>()?;
    let stats = summarize(&results)?;
    Ok(BatchOutcome { stats, results })
}

/// Probability vector from a fixed conversion, for perturbation batches on
/// category data.
pub fn fixed_conversion_probs(
    categories: &[Category],
    intervals: &CategoryIntervals,
    master_seed: u64,
) -> (Scenario, ProbabilityVector) {
    let seeds = gen::SeedStream::new(master_seed, u64::MAX);
    let conversion = gen::draw_scenario(&mut seeds.rng(gen::stream::FIXED), intervals);
    (conversion, gen::species_probs(categories, &conversion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn printed_gap_columns() {
        let (g1, _) = gaps(12176.37, 11856.61, 0.0 + 1.0, 1.0).unwrap();
        assert!((g1 * 100.0 - 2.63).abs() < 0.01);
        let (_, g2) = gaps(1.0, 1.0, 11914.76, 12001.33).unwrap();
        assert!((g2 * 100.0 - 0.72).abs() < 0.01);
        let (g1, g2) = gaps(131.21, 130.87, 131.79, 132.97).unwrap();
        assert!((g1 * 100.0 - 0.26).abs() < 0.01);
        assert!((g2 * 100.0 - 0.89).abs() < 0.01);
    }

    #[test]
    fn gap_errors() {
        assert_eq!(gaps(0.0, 0.0, 1.0, 1.0), Err(Error::NonPositiveOptimum(0.0)));
        assert_eq!(gaps(1.0, 1.0, 1.0, -2.0), Err(Error::NonPositiveOptimum(-2.0)));
        assert!(matches!(gaps(1.0, 1.5, 1.0, 1.0), Err(Error::NotOptimal { .. })));
        assert_eq!(gaps(1.0, 1.0 + 1e-14, 1.0, 1.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn dissimilarity_cases() {
        assert_eq!(dissimilarity(&[1, 2, 3], &[3, 2, 1]), 0.0);
        assert_eq!(dissimilarity(&[1, 2], &[3, 4]), 1.0);
        assert!((dissimilarity(&[1, 2, 3], &[3, 4, 5]) - 0.8).abs() < 1e-15);
        assert_eq!(dissimilarity(&[], &[]), 0.0);
        assert_eq!(dissimilarity(&[], &[4]), 1.0);
    }

    #[test]
    fn summarize_rejects_empty() {
        assert_eq!(summarize(&[]), Err(Error::EmptyResults));
    }

    #[test]
    fn config_validation() {
        let bad = BatchConfig {
            family: ExperimentFamily::RandomTrees(GenParams {
                rho_choices: vec![],
                ..GenParams::default()
            }),
            instances: 1,
            master_seed: 0,
        };
        assert!(bad.validate().is_err());
        let zero = BatchConfig {
            family: ExperimentFamily::RandomTrees(GenParams::default()),
            instances: 0,
            master_seed: 0,
        };
        assert!(zero.validate().is_err());
    }
}
