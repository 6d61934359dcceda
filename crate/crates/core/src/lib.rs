//! Expected phylogenetic diversity (ePD) on rooted trees.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`tree`]: validated rooted trees, clade and path queries, Faith PD and
//!   the ultrametric extension of leaf branches;
//! * [`epd`]: ePD under independent extinctions, HEDGE scores and the greedy
//!   (I-HEDGE) selection of the `k` species whose protection maximizes ePD;
//! * [`oracle`]: exhaustive reference computations used to check the above;
//! * [`gen`]: seeded generation of random experiment instances;
//! * [`sensitivity`]: the two-scenario experiment (cross ePD values, relative
//!   gaps, set dissimilarity and batch statistics).
//!
//! File formats, reports and the command-line front end live in the
//! `epd-tools` crate.
#![no_std]

extern crate alloc;

pub mod epd;
pub mod error;
pub mod gen;
pub mod oracle;
pub mod sensitivity;
pub mod tree;

pub use epd::{
    epd, epd_with_protection, greedy_protect, greedy_protect_plain, hedge_scores, Greedy,
    ProbabilityVector, ProtectionSet,
};
pub use error::{Error, Result};
pub use gen::{
    assign_categories, draw_scenario, gen_instance, gen_topology, perturb_lengths, species_probs,
    Category, CategoryIntervals, CategoryMode, GenParams, Instance, ProbabilityMode, Provenance,
    Scenario, ScenarioData, SeedStream, CATEGORY_COUNT,
};
pub use oracle::{brute_force_protect, epd_by_outcome_enumeration};
pub use sensitivity::{
    dissimilarity, gaps, run_batch, run_instance, solve_instance, summarize, BatchConfig,
    BatchOutcome, BatchStats, ExperimentFamily, InstanceDetail, InstanceResult,
};
pub use tree::{ArcId, NodeId, Phylogeny, TreeSpec};
