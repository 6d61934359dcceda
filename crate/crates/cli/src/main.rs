use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use epd_core::gen::{budget, random_small_case, DEFAULT_RHO_CHOICES};
use epd_core::sensitivity::fixed_conversion_probs;
use epd_core::{
    brute_force_protect, epd, epd_by_outcome_enumeration, gen_instance, greedy_protect, hedge_scores,
    BatchConfig, CategoryIntervals, ExperimentFamily, GenParams, Phylogeny, ProbabilityMode,
    ProbabilityVector, SeedStream,
};
use epd_tools::{
    parse_newick, run_batch_parallel, species_name, summary_text, write_instances, write_newick,
    Settings, SpeciesTable, TableValues,
};

const DEFAULT_SEED: u64 = 20_190_601;

#[derive(Parser)]
#[command(name = "epd", version, about = "Expected phylogenetic diversity and protection-set sensitivity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// ePD of a tree with nothing protected.
    Epd(Input),
    /// Greedy optimal protection set of size k.
    Greedy {
        #[command(flatten)]
        input: Input,
        /// Number of species to protect.
        #[arg(long, conflicts_with = "rho")]
        k: Option<usize>,
        /// Protect floor(rho * n) species.
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Single-species protection scores, highest first.
    Hedge(Input),
    /// Write random instances as tree, species and category files.
    Gen {
        #[command(flatten)]
        random: RandomArgs,
        #[arg(long, default_value_t = 1)]
        instances: usize,
        #[arg(long, default_value = "instances")]
        out: PathBuf,
    },
    /// Run a two-scenario sensitivity batch and write reports.
    Experiment {
        #[command(flatten)]
        random: RandomArgs,
        #[arg(long, default_value_t = 10_000)]
        instances: usize,
        /// Perturb branch lengths by up to this fraction instead of redrawing
        /// probabilities (fixed trees only).
        #[arg(long)]
        perturb: Option<f64>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Newick tree, for `--tree-kind fixed`.
        tree: Option<PathBuf>,
        /// Species table, for `--tree-kind fixed`.
        table: Option<PathBuf>,
    },
    /// Compare ePD and greedy against exhaustive oracles on small random trees.
    Check {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        instances: usize,
    },
}

#[derive(Args)]
struct Input {
    /// Newick tree file.
    tree: PathBuf,
    /// Species table (`species,category` or `species,p1,p2`).
    table: PathBuf,
    /// Seed for drawing a conversion when the table holds categories.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Preset::Table1)]
    intervals_preset: Preset,
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = TreeKind::Nonultrametric)]
    tree_kind: TreeKind,
    #[arg(long, value_enum, default_value_t = ProbMode::PerCategory)]
    prob_mode: ProbMode,
    /// Use this budget fraction instead of drawing one per instance.
    #[arg(long)]
    rho: Option<f64>,
    /// Probability intervals per category [default: table1, or table2 for
    /// fixed trees].
    #[arg(long, value_enum)]
    intervals_preset: Option<Preset>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TreeKind {
    Nonultrametric,
    Ultrametric,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbMode {
    PerCategory,
    PerSpecies,
}

/// Category probability intervals.
#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Wide intervals for random trees.
    Table1,
    /// Narrow, well-separated intervals for a fixed tree.
    Table2,
}

impl Preset {
    fn intervals(self) -> CategoryIntervals {
        match self {
            Self::Table1 => CategoryIntervals::RANDOM_TREE,
            Self::Table2 => CategoryIntervals::FIXED_TREE,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Table1 => "table1",
            Self::Table2 => "table2",
        }
    }
}

impl ProbMode {
    fn mode(self) -> ProbabilityMode {
        match self {
            Self::PerCategory => ProbabilityMode::PerCategory,
            Self::PerSpecies => ProbabilityMode::PerSpecies,
        }
    }
}

fn read_tree(path: &Path) -> Result<Phylogeny> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_newick(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_table(path: &Path) -> Result<SpeciesTable> {
    let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    SpeciesTable::read(file).with_context(|| format!("parsing {}", path.display()))
}

/// Tree and probabilities for the single-tree commands. Probability tables
/// use column `p1`; category tables get a conversion drawn from the seed.
fn load_input(input: &Input) -> Result<(Phylogeny, ProbabilityVector)> {
    let tree = read_tree(&input.tree)?;
    let table = read_table(&input.table)?;
    let probs = match table.values {
        TableValues::Probabilities(_) => table.probabilities_for(&tree, 0)?,
        TableValues::Categories(_) => {
            let categories = table.categories_for(&tree)?;
            let (conversion, probs) =
                fixed_conversion_probs(&categories, &input.intervals_preset.intervals(), input.seed);
            println!("conversion = {}", join(conversion.0.iter().map(|p| format!("{p:.4}"))));
            probs
        }
    };
    Ok((tree, probs))
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(" ")
}

fn params(args: &RandomArgs) -> GenParams {
    GenParams {
        rho_choices: rho_choices(args.rho),
        intervals: args.intervals_preset.unwrap_or(Preset::Table1).intervals(),
        probability_mode: args.prob_mode.mode(),
        ultrametric: args.tree_kind == TreeKind::Ultrametric,
        ..GenParams::default()
    }
}

fn rho_choices(rho: Option<f64>) -> Vec<f64> {
    rho.map_or_else(|| DEFAULT_RHO_CHOICES.to_vec(), |r| vec![r])
}

fn cmd_greedy(input: &Input, k: Option<usize>, rho: Option<f64>) -> Result<()> {
    let (tree, probs) = load_input(input)?;
    let n = tree.species_count();
    let k = match (k, rho) {
        (Some(k), _) => k,
        (None, Some(rho)) if (0.0..=1.0).contains(&rho) => budget(rho, n),
        (None, Some(rho)) => bail!("--rho must lie in [0, 1], got {rho}"),
        (None, None) => bail!("give --k or --rho"),
    };
    let set = greedy_protect(&tree, &probs, k)?;
    println!("base_epd = {:.4}", set.base_epd);
    let mut value = set.base_epd;
    for (pick, (&s, &gain)) in set.species.iter().zip(&set.gains).enumerate() {
        value += gain;
        println!(
            "pick {} = {} gain {:.4} epd {:.4}",
            pick + 1,
            species_name(&tree, s),
            gain,
            value
        );
    }
    println!("final_epd = {:.4}", set.final_epd);
    Ok(())
}

fn cmd_hedge(input: &Input) -> Result<()> {
    let (tree, probs) = load_input(input)?;
    let scores = hedge_scores(&tree, &probs)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    for s in order {
        println!("{} {:.4}", species_name(&tree, s), scores[s]);
    }
    Ok(())
}

fn cmd_gen(random: &RandomArgs, instances: usize, out: &Path) -> Result<()> {
    if random.tree_kind == TreeKind::Fixed {
        bail!("gen draws random trees; --tree-kind fixed applies to experiment only");
    }
    let params = params(random);
    params.validate()?;
    for index in 0..instances as u64 {
        let instance = gen_instance(&params, random.seed, index)?;
        let dir = out.join(format!("instance-{index:05}"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let tree = &instance.tree;
        let labels: Vec<String> = (0..tree.species_count()).map(|s| species_name(tree, s)).collect();
        let [a, b] = &instance.scenarios;
        let probs = SpeciesTable {
            labels: labels.clone(),
            values: TableValues::Probabilities(
                a.probs.as_slice().iter().copied().zip(b.probs.as_slice().iter().copied()).collect(),
            ),
        };
        let categories = SpeciesTable {
            labels,
            values: TableValues::Categories(instance.categories.clone().unwrap_or_default()),
        };
        fs::write(dir.join("tree.nwk"), write_newick(tree) + "\n")?;
        probs.write(fs::File::create(dir.join("species.csv"))?)?;
        categories.write(fs::File::create(dir.join("categories.csv"))?)?;

        let p = &instance.provenance;
        let mut manifest = String::new();
        let mut line = |k: &str, v: String| manifest.push_str(&format!("{k} = {v}\n"));
        line("master_seed", p.master_seed.to_string());
        line("index", p.index.to_string());
        line("species", tree.species_count().to_string());
        line("internal_nodes", tree.internal_count().to_string());
        line("d_max", p.d_max.map_or_else(String::new, |v| v.to_string()));
        line("lambda_max", p.lambda_max.map_or_else(String::new, |v| v.to_string()));
        line("category_mode", p.category_mode.map_or("", |m| m.name()).to_owned());
        line("probability_mode", params.probability_mode.name().to_owned());
        line("ultrametric", params.ultrametric.to_string());
        for (w, data) in instance.scenarios.iter().enumerate() {
            if let Some(c) = data.conversion {
                line(&format!("conversion{}", w + 1), join(c.0.iter().map(f64::to_string)));
            }
        }
        line("rho", p.rho.to_string());
        line("k", instance.k.to_string());
        fs::write(dir.join("manifest.txt"), manifest)?;
    }
    println!("wrote {instances} instance(s) to {}", out.display());
    Ok(())
}

fn cmd_experiment(
    random: &RandomArgs,
    instances: usize,
    perturb: Option<f64>,
    out: &Path,
    tree_path: Option<&Path>,
    table_path: Option<&Path>,
) -> Result<()> {
    let mut settings: Settings = Vec::new();
    let mut set = |k: &str, v: String| settings.push((k.to_owned(), v));
    set("master_seed", random.seed.to_string());
    let family = match (random.tree_kind, tree_path, table_path) {
        (TreeKind::Fixed, Some(tree_path), Some(table_path)) => {
            let tree = read_tree(tree_path)?;
            let table = read_table(table_path)?;
            let preset = random.intervals_preset.unwrap_or(Preset::Table2);
            set("tree", tree_path.display().to_string());
            set("table", table_path.display().to_string());
            let rho_choices = rho_choices(random.rho);
            match (perturb, &table.values) {
                (None, TableValues::Categories(_)) => {
                    set("probability_mode", random.prob_mode.mode().name().to_owned());
                    set("intervals", preset.name().to_owned());
                    ExperimentFamily::FixedTreeScenarios {
                        categories: table.categories_for(&tree)?,
                        tree,
                        intervals: preset.intervals(),
                        probability_mode: random.prob_mode.mode(),
                        rho_choices,
                    }
                }
                (None, TableValues::Probabilities(_)) => {
                    bail!("a probability table fixes both scenarios; use --perturb or a category table")
                }
                (Some(fraction), values) => {
                    set("perturbation", fraction.to_string());
                    let (categories, probs) = match values {
                        TableValues::Categories(_) => {
                            let categories = table.categories_for(&tree)?;
                            let (conversion, probs) =
                                fixed_conversion_probs(&categories, &preset.intervals(), random.seed);
                            set("intervals", preset.name().to_owned());
                            set("conversion", join(conversion.0.iter().map(f64::to_string)));
                            (Some(categories), probs)
                        }
                        TableValues::Probabilities(_) => (None, table.probabilities_for(&tree, 0)?),
                    };
                    ExperimentFamily::FixedTreePerturbation {
                        tree,
                        categories,
                        probs,
                        fraction,
                        rho_choices,
                    }
                }
            }
        }
        (TreeKind::Fixed, ..) => bail!("--tree-kind fixed needs TREE and TABLE arguments"),
        (_, None, None) => {
            if perturb.is_some() {
                bail!("--perturb applies to fixed trees only");
            }
            let params = params(random);
            set("probability_mode", params.probability_mode.name().to_owned());
            set("intervals", random.intervals_preset.unwrap_or(Preset::Table1).name().to_owned());
            ExperimentFamily::RandomTrees(params)
        }
        _ => bail!("TREE and TABLE are only used with --tree-kind fixed"),
    };
    if let Some(rho) = random.rho {
        set("rho", rho.to_string());
    }
    settings.insert(0, ("family".to_owned(), family.name().to_owned()));

    let config = BatchConfig {
        family,
        instances,
        master_seed: random.seed,
    };
    let outcome = run_batch_parallel(&config)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let summary = summary_text(&settings, &outcome.stats);
    fs::write(out.join("summary.txt"), &summary)?;
    write_instances(fs::File::create(out.join("instances.csv"))?, &outcome.results)?;
    print!("{summary}");
    Ok(())
}

fn cmd_check(seed: u64, instances: usize) -> Result<()> {
    let seeds = SeedStream::new(seed, 0);
    let mut rng = seeds.rng(0);
    let (mut epd_fail, mut greedy_fail) = (0, 0);
    for _ in 0..instances {
        let (tree, probs) = random_small_case(&mut rng, 12);
        let direct = epd(&tree, &probs)?;
        let oracle = epd_by_outcome_enumeration(&tree, &probs)?;
        if (direct - oracle).abs() > 1e-9 * oracle.abs().max(1.0) {
            epd_fail += 1;
        }
        for k in 0..=tree.species_count().min(4) {
            let greedy = greedy_protect(&tree, &probs, k)?.final_epd;
            let (_, best) = brute_force_protect(&tree, &probs, k)?;
            if (greedy - best).abs() > 1e-9 * best.abs().max(1.0) {
                greedy_fail += 1;
            }
        }
    }
    println!("epd vs outcome enumeration: {} of {instances} agree", instances - epd_fail);
    println!("greedy vs exhaustive search: {greedy_fail} disagreement(s)");
    if epd_fail + greedy_fail > 0 {
        bail!("oracle check failed");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Epd(input) => {
            let (tree, probs) = load_input(&input)?;
            println!("epd = {:.4}", epd(&tree, &probs)?);
            println!("total_pd = {:.4}", tree.total_pd());
            Ok(())
        }
        Command::Greedy { input, k, rho } => cmd_greedy(&input, k, rho),
        Command::Hedge(input) => cmd_hedge(&input),
        Command::Gen {
            random,
            instances,
            out,
        } => cmd_gen(&random, instances, &out),
        Command::Experiment {
            random,
            instances,
            perturb,
            out,
            tree,
            table,
        } => cmd_experiment(&random, instances, perturb, &out, tree.as_deref(), table.as_deref()),
        Command::Check { seed, instances } => cmd_check(seed, instances),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
