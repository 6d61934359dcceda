//! Seeded generation of random experiment instances.
//!
//! Every instance draws from its own [`SeedStream`], a pure function of the
//! master seed and the instance index, so a batch gives the same instances
//! whatever order (or thread) they are generated in. Within an instance each
//! concern (topology, categories, each scenario, the budget) reads from a
//! separate ChaCha stream.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::epd::ProbabilityVector;
use crate::error::{Error, Result};
use crate::tree::{NodeId, Phylogeny};

pub const CATEGORY_COUNT: usize = 5;

/// Threat category, 1 (most threatened) to 5 (least).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Category(u8);

impl Category {
    pub fn new(value: u8) -> Option<Self> {
        (1..=CATEGORY_COUNT as u8).contains(&value).then_some(Self(value))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position, for indexing per-category arrays.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }

    fn from_index(index: usize) -> Self {
        Self(index as u8 + 1)
    }
}

/// Closed extinction-probability interval of each category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryIntervals([(f64, f64); CATEGORY_COUNT]);

impl CategoryIntervals {
    /// Intervals used for randomly generated trees.
    pub const RANDOM_TREE: Self = Self([
        (0.50, 1.00),
        (0.20, 0.50),
        (0.10, 0.20),
        (0.05, 0.10),
        (0.00, 0.05),
    ]);

    /// Narrower, higher intervals used for the fixed real-tree experiment.
    pub const FIXED_TREE: Self = Self([
        (0.90, 1.00),
        (0.65, 0.85),
        (0.40, 0.60),
        (0.15, 0.35),
        (0.00, 0.10),
    ]);

    /// Intervals must lie in `[0, 1]` and must not increase from category 1
    /// to category 5.
    pub fn new(intervals: [(f64, f64); CATEGORY_COUNT]) -> Result<Self> {
        for &(lo, hi) in &intervals {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::InvalidInterval(lo, hi));
            }
        }
        for pair in intervals.windows(2) {
            if pair[1].0 > pair[0].0 || pair[1].1 > pair[0].1 {
                return Err(Error::InvalidConfig(format!(
                    "intervals must not increase with the category number: {:?} then {:?}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Self(intervals))
    }

    /// Every category pinned to one value.
    pub fn degenerate(values: [f64; CATEGORY_COUNT]) -> Result<Self> {
        Self::new(values.map(|v| (v, v)))
    }

    pub fn get(&self, category: Category) -> (f64, f64) {
        self.0[category.index()]
    }

    pub fn as_array(&self) -> &[(f64, f64); CATEGORY_COUNT] {
        &self.0
    }
}

/// How species are assigned to categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoryMode {
    /// Each category equally likely.
    Uniform,
    /// Categories 1..5 with probabilities 2%, 4%, 9%, 9%, 76%.
    Skewed,
    /// Uniform or skewed, chosen per instance by a fair coin.
    CoinFlip,
}

impl CategoryMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Skewed => "skewed",
            Self::CoinFlip => "coin-flip",
        }
    }
}

pub const SKEWED_WEIGHTS: [f64; CATEGORY_COUNT] = [0.02, 0.04, 0.09, 0.09, 0.76];

/// Whether probabilities are shared by a whole category or drawn per species.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilityMode {
    PerCategory,
    PerSpecies,
}

impl ProbabilityMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::PerCategory => "per-category",
            Self::PerSpecies => "per-species",
        }
    }
}

pub const DEFAULT_RHO_CHOICES: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Parameters of the random instance generator. All ranges are inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub internal_nodes: (u32, u32),
    pub d_max: (u32, u32),
    pub lambda_max: (u32, u32),
    pub rho_choices: Vec<f64>,
    pub intervals: CategoryIntervals,
    pub category_mode: CategoryMode,
    pub probability_mode: ProbabilityMode,
    pub ultrametric: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            internal_nodes: (50, 1000),
            d_max: (2, 4),
            lambda_max: (5, 20),
            rho_choices: DEFAULT_RHO_CHOICES.to_vec(),
            intervals: CategoryIntervals::RANDOM_TREE,
            category_mode: CategoryMode::CoinFlip,
            probability_mode: ProbabilityMode::PerCategory,
            ultrametric: false,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("invalid {what} range")));
        if self.internal_nodes.0 < 1 || self.internal_nodes.0 > self.internal_nodes.1 {
            return bad("internal node");
        }
        if self.d_max.0 < 2 || self.d_max.0 > self.d_max.1 {
            return bad("d_max");
        }
        if self.lambda_max.0 < 1 || self.lambda_max.0 > self.lambda_max.1 {
            return bad("lambda_max");
        }
        validate_rho(&self.rho_choices)
    }
}

pub(crate) fn validate_rho(choices: &[f64]) -> Result<()> {
    if choices.is_empty() || choices.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::InvalidConfig(format!(
            "rho choices must be a non-empty list in [0, 1], got {choices:?}"
        )));
    }
    Ok(())
}

/// `⌊ρ·n⌋`, robust to `ρ·n` landing a rounding error below an integer.
pub fn budget(rho: f64, n: usize) -> usize {
    libm::floor(rho * n as f64 + 1e-9) as usize
}

/// One category → probability conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario(pub [f64; CATEGORY_COUNT]);

impl Scenario {
    pub fn probability(&self, category: Category) -> f64 {
        self.0[category.index()]
    }
}

/// Deterministic per-instance source of independent random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    key: [u8; 32],
}

/// Stream ids inside one instance.
pub mod stream {
    pub const TOPOLOGY: u64 = 0;
    pub const CATEGORY_MODE: u64 = 1;
    pub const CATEGORIES: u64 = 2;
    pub const SCENARIO_1: u64 = 3;
    pub const SCENARIO_2: u64 = 4;
    pub const BUDGET: u64 = 5;
    pub const FIXED: u64 = 6;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(master_seed: u64, index: u64) -> Self {
        let mut state = master_seed ^ splitmix64(&mut index.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { key }
    }

    pub fn rng(&self, stream_id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(stream_id);
        rng
    }
}

/// Parameters actually drawn while generating a topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopologyDraw {
    pub internal_nodes: u32,
    pub d_max: u32,
    pub lambda_max: u32,
}

/// Random tree with integer branch lengths.
///
/// Draws the number `N` of non-leaf nodes (root included), `d_max` and
/// `λ_max`. Non-leaf nodes are created breadth first: each one takes the
/// earliest open child slot and opens `uniform[2, d_max]` slots of its own.
/// Once `N` non-leaf nodes exist, every open slot becomes a leaf. Each arc
/// gets a length drawn from `uniform{1, …, λ_max}`.
pub fn gen_topology<R: Rng + ?Sized>(
    rng: &mut R,
    params: &GenParams,
) -> Result<(Phylogeny, TopologyDraw)> {
    params.validate()?;
    let internal_nodes = rng.random_range(params.internal_nodes.0..=params.internal_nodes.1);
    let d_max = rng.random_range(params.d_max.0..=params.d_max.1);
    let lambda_max = rng.random_range(params.lambda_max.0..=params.lambda_max.1);

    let mut parents: Vec<Option<NodeId>> = vec![None];
    let mut open: VecDeque<NodeId> = VecDeque::new();
    let open_slots = |node: NodeId, open: &mut VecDeque<NodeId>, rng: &mut R| {
        let c = rng.random_range(2..=d_max);
        open.extend(core::iter::repeat_n(node, c as usize));
    };
    open_slots(0, &mut open, rng);
    for _ in 1..internal_nodes {
        let parent = open.pop_front().expect("each node opens at least two slots");
        let node = parents.len();
        parents.push(Some(parent));
        open_slots(node, &mut open, rng);
    }
    parents.extend(open.into_iter().map(Some));

    let mut lengths = vec![0.0; parents.len()];
    for len in lengths.iter_mut().skip(1) {
        *len = f64::from(rng.random_range(1..=lambda_max));
    }
    let n = parents.len();
    let tree = Phylogeny::from_parents(parents, lengths, vec![None; n])?;
    Ok((
        tree,
        TopologyDraw {
            internal_nodes,
            d_max,
            lambda_max,
        },
    ))
}

/// I.i.d. categories; `mode` must be `Uniform` or `Skewed` (a coin flip is
/// resolved by the caller).
pub fn assign_categories<R: Rng + ?Sized>(rng: &mut R, n: usize, mode: CategoryMode) -> Vec<Category> {
    (0..n)
        .map(|_| match mode {
            CategoryMode::Skewed => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let idx = SKEWED_WEIGHTS
                    .iter()
                    .position(|w| {
                        acc += w;
                        u < acc
                    })
                    .unwrap_or(CATEGORY_COUNT - 1);
                Category::from_index(idx)
            }
            CategoryMode::Uniform | CategoryMode::CoinFlip => {
                Category::from_index(rng.random_range(0..CATEGORY_COUNT))
            }
        })
        .collect()
}

/// One probability per category, each uniform on its interval.
pub fn draw_scenario<R: Rng + ?Sized>(rng: &mut R, intervals: &CategoryIntervals) -> Scenario {
    Scenario(intervals.0.map(|(lo, hi)| rng.random_range(lo..=hi)))
}

/// Species probabilities from a category conversion.
pub fn species_probs(categories: &[Category], scenario: &Scenario) -> ProbabilityVector {
    ProbabilityVector::new(categories.iter().map(|&c| scenario.probability(c)).collect())
        .expect("scenario values lie in [0, 1]")
}

/// Species probabilities drawn independently from each species' interval.
pub fn species_probs_per_species<R: Rng + ?Sized>(
    rng: &mut R,
    categories: &[Category],
    intervals: &CategoryIntervals,
) -> ProbabilityVector {
    ProbabilityVector::new(
        categories
            .iter()
            .map(|&c| {
                let (lo, hi) = intervals.get(c);
                rng.random_range(lo..=hi)
            })
            .collect(),
    )
    .expect("intervals lie in [0, 1]")
}

/// Redraws every arc length uniformly within `±fraction` of its value.
pub fn perturb_lengths<R: Rng + ?Sized>(
    rng: &mut R,
    tree: &Phylogeny,
    fraction: f64,
) -> Result<Phylogeny> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!(
            "perturbation fraction must be in [0, 1), got {fraction}"
        )));
    }
    if fraction == 0.0 {
        return Ok(tree.clone());
    }
    let lengths = tree
        .lengths()
        .iter()
        .map(|&len| rng.random_range((1.0 - fraction) * len..=(1.0 + fraction) * len))
        .collect();
    tree.with_lengths(lengths)
}

/// Probabilities of one scenario of an instance. When `tree` is set the
/// scenario also has its own branch lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    pub probs: ProbabilityVector,
    pub conversion: Option<Scenario>,
    pub tree: Option<Phylogeny>,
}

impl ScenarioData {
    pub fn tree<'a>(&'a self, shared: &'a Phylogeny) -> &'a Phylogeny {
        self.tree.as_ref().unwrap_or(shared)
    }
}

/// Where an instance came from and what was drawn for it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub master_seed: u64,
    pub index: u64,
    pub internal_nodes: Option<u32>,
    pub d_max: Option<u32>,
    pub lambda_max: Option<u32>,
    pub category_mode: Option<CategoryMode>,
    pub rho: f64,
}

/// A tree, two probability scenarios and a protection budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub tree: Phylogeny,
    pub categories: Option<Vec<Category>>,
    pub scenarios: [ScenarioData; 2],
    pub k: usize,
    pub provenance: Provenance,
}

fn draw_rho<R: Rng + ?Sized>(rng: &mut R, choices: &[f64]) -> f64 {
    choices[rng.random_range(0..choices.len())]
}

fn draw_probs(
    seeds: &SeedStream,
    stream_id: u64,
    categories: &[Category],
    intervals: &CategoryIntervals,
    mode: ProbabilityMode,
) -> ScenarioData {
    let mut rng = seeds.rng(stream_id);
    match mode {
        ProbabilityMode::PerCategory => {
            let conversion = draw_scenario(&mut rng, intervals);
            ScenarioData {
                probs: species_probs(categories, &conversion),
                conversion: Some(conversion),
                tree: None,
            }
        }
        ProbabilityMode::PerSpecies => ScenarioData {
            probs: species_probs_per_species(&mut rng, categories, intervals),
            conversion: None,
            tree: None,
        },
    }
}

/// A complete random instance.
pub fn gen_instance(params: &GenParams, master_seed: u64, index: u64) -> Result<Instance> {
    let seeds = &SeedStream::new(master_seed, index);
    let (mut tree, draw) = gen_topology(&mut seeds.rng(stream::TOPOLOGY), params)?;
    if params.ultrametric {
        tree = tree.ultrametrize();
    }
    let mode = match params.category_mode {
        CategoryMode::CoinFlip => {
            if seeds.rng(stream::CATEGORY_MODE).random_bool(0.5) {
                CategoryMode::Uniform
            } else {
                CategoryMode::Skewed
            }
        }
        fixed => fixed,
    };
    let categories = assign_categories(&mut seeds.rng(stream::CATEGORIES), tree.species_count(), mode);
    let scenarios = [stream::SCENARIO_1, stream::SCENARIO_2].map(|id| {
        draw_probs(seeds, id, &categories, &params.intervals, params.probability_mode)
    });
    let rho = draw_rho(&mut seeds.rng(stream::BUDGET), &params.rho_choices);
    let k = budget(rho, tree.species_count());
    Ok(Instance {
        tree,
        categories: Some(categories),
        scenarios,
        k,
        provenance: Provenance {
            master_seed,
            index,
            internal_nodes: Some(draw.internal_nodes),
            d_max: Some(draw.d_max),
            lambda_max: Some(draw.lambda_max),
            category_mode: Some(mode),
            rho,
        },
    })
}

/// Instance on a fixed tree with fixed categories: only the two conversions
/// (or per-species draws) and the budget are random.
#[allow(clippy::too_many_arguments)]
pub fn fixed_tree_instance(
    tree: &Phylogeny,
    categories: &[Category],
    intervals: &CategoryIntervals,
    mode: ProbabilityMode,
    rho_choices: &[f64],
    master_seed: u64,
    index: u64,
) -> Instance {
    let seeds = &SeedStream::new(master_seed, index);
    let scenarios = [stream::SCENARIO_1, stream::SCENARIO_2]
        .map(|id| draw_probs(seeds, id, categories, intervals, mode));
    let rho = draw_rho(&mut seeds.rng(stream::BUDGET), rho_choices);
    Instance {
        tree: tree.clone(),
        categories: Some(categories.to_vec()),
        scenarios,
        k: budget(rho, tree.species_count()),
        provenance: Provenance {
            master_seed,
            index,
            internal_nodes: None,
            d_max: None,
            lambda_max: None,
            category_mode: None,
            rho,
        },
    }
}

/// Instance on a fixed tree with fixed probabilities whose two scenarios are
/// independent perturbations of the branch lengths.
#[allow(clippy::too_many_arguments)]
pub fn perturbed_instance(
    tree: &Phylogeny,
    categories: Option<&[Category]>,
    probs: &ProbabilityVector,
    fraction: f64,
    rho_choices: &[f64],
    master_seed: u64,
    index: u64,
) -> Result<Instance> {
    let seeds = &SeedStream::new(master_seed, index);
    let draw = |id| -> Result<ScenarioData> {
        Ok(ScenarioData {
            probs: probs.clone(),
            conversion: None,
            tree: Some(perturb_lengths(&mut seeds.rng(id), tree, fraction)?),
        })
    };
    let scenarios = [draw(stream::SCENARIO_1)?, draw(stream::SCENARIO_2)?];
    let rho = draw_rho(&mut seeds.rng(stream::BUDGET), rho_choices);
    Ok(Instance {
        tree: tree.clone(),
        categories: categories.map(<[Category]>::to_vec),
        scenarios,
        k: budget(rho, tree.species_count()),
        provenance: Provenance {
            master_seed,
            index,
            internal_nodes: None,
            d_max: None,
            lambda_max: None,
            category_mode: None,
            rho,
        },
    })
}

/// Small random tree (at most `max_species` leaves) with real branch
/// lengths in `[0, 10]` and probabilities uniform in `[0, 1]`, for checks
/// against the exhaustive oracles.
pub fn random_small_case<R: Rng + ?Sized>(
    rng: &mut R,
    max_species: usize,
) -> (Phylogeny, ProbabilityVector) {
    assert!(max_species >= 2);
    let params = GenParams {
        internal_nodes: (1, 4),
        d_max: (2, 4),
        lambda_max: (1, 1),
        ..GenParams::default()
    };
    loop {
        let (tree, _) = gen_topology(rng, &params).expect("valid parameters");
        if tree.species_count() > max_species {
            continue;
        }
        let lengths = (0..tree.node_count()).map(|_| rng.random_range(0.0..=10.0)).collect();
        let tree = tree.with_lengths(lengths).expect("non-negative lengths");
        let probs = (0..tree.species_count()).map(|_| rng.random_range(0.0..=1.0)).collect();
        return (tree, ProbabilityVector::new(probs).expect("in range"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_bounds() {
        assert!(Category::new(0).is_none());
        assert!(Category::new(6).is_none());
        assert_eq!(Category::new(3).unwrap().index(), 2);
    }

    #[test]
    fn interval_validation() {
        assert!(CategoryIntervals::new(*CategoryIntervals::RANDOM_TREE.as_array()).is_ok());
        assert!(CategoryIntervals::new(*CategoryIntervals::FIXED_TREE.as_array()).is_ok());
        let mut bad = *CategoryIntervals::RANDOM_TREE.as_array();
        bad[0] = (0.6, 0.5);
        assert!(CategoryIntervals::new(bad).is_err());
        let mut bad = *CategoryIntervals::RANDOM_TREE.as_array();
        bad[4] = (0.0, 1.1);
        assert!(CategoryIntervals::new(bad).is_err());
        let mut inverted = *CategoryIntervals::RANDOM_TREE.as_array();
        inverted.reverse();
        assert!(CategoryIntervals::new(inverted).is_err());
    }

    #[test]
    fn budget_floor() {
        assert_eq!(budget(0.1, 1420), 142);
        assert_eq!(budget(0.3, 52), 15);
        assert_eq!(budget(0.2, 290), 58);
        assert_eq!(budget(0.1, 9), 0);
        assert_eq!(budget(0.5, 7), 3);
    }

    #[test]
    fn binary_trees_have_one_more_leaf_than_internal_nodes() {
        let params = GenParams {
            d_max: (2, 2),
            ..GenParams::default()
        };
        for i in 0..20 {
            let mut rng = SeedStream::new(3, i).rng(stream::TOPOLOGY);
            let (tree, draw) = gen_topology(&mut rng, &params).unwrap();
            assert_eq!(tree.internal_count() as u32, draw.internal_nodes);
            assert_eq!(tree.species_count() as u32, draw.internal_nodes + 1);
        }
    }

    #[test]
    fn degenerate_interval() {
        let mut rng = SeedStream::new(1, 1).rng(0);
        let s = draw_scenario(&mut rng, &CategoryIntervals::degenerate([0.5; 5]).unwrap());
        assert_eq!(s.0, [0.5; 5]);
    }

    #[test]
    fn per_category_constant() {
        let cats = vec![Category::new(3).unwrap(); 4];
        let p = species_probs(&cats, &Scenario([0.9, 0.3, 0.14, 0.07, 0.01]));
        assert_eq!(p.as_slice(), &[0.14; 4]);
    }

    #[test]
    fn single_species_category() {
        let mut rng = SeedStream::new(5, 0).rng(0);
        for mode in [CategoryMode::Uniform, CategoryMode::Skewed] {
            let cats = assign_categories(&mut rng, 1, mode);
            assert_eq!(cats.len(), 1);
            assert!((1..=5).contains(&cats[0].get()));
        }
    }

    #[test]
    fn perturbation_fraction_checked() {
        let (tree, _) = random_small_case(&mut SeedStream::new(0, 0).rng(0), 8);
        let mut rng = SeedStream::new(0, 1).rng(0);
        assert!(perturb_lengths(&mut rng, &tree, 1.0).is_err());
        assert!(perturb_lengths(&mut rng, &tree, -0.1).is_err());
        assert_eq!(perturb_lengths(&mut rng, &tree, 0.0).unwrap(), tree);
    }

    #[test]
    fn seed_streams_differ() {
        assert_ne!(SeedStream::new(1, 0), SeedStream::new(1, 1));
        assert_ne!(SeedStream::new(1, 0), SeedStream::new(2, 0));
        assert_eq!(SeedStream::new(9, 4), SeedStream::new(9, 4));
    }
}
