use epd_core::gen::gen_topology;
use epd_core::{GenParams, Phylogeny, SeedStream, TreeSpec};
use epd_tools::{parse_newick, species_name, write_newick};
use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

const NAME_CHARS: &[char] = &['a', 'B', '7', '_', ' ', '\'', '(', ':', ',', 'é'];

/// Random tree with real lengths and a mix of plain, awkward and missing
/// labels.
fn random_tree(seed: u64) -> Phylogeny {
    let mut rng = SeedStream::new(seed, 0).rng(0);
    let params = GenParams {
        internal_nodes: (1, 40),
        ..GenParams::default()
    };
    let (tree, _) = gen_topology(&mut rng, &params).unwrap();
    let mut spec = tree.to_spec();
    for (v, len) in spec.lengths.iter_mut().enumerate() {
        if spec.parents[v].is_some() {
            *len = match rng.random_range(0..4) {
                0 => rng.random_range(1..20) as f64,
                1 => 0.0,
                _ => rng.random::<f64>() * 10f64.powi(rng.random_range(-8..8)),
            };
        }
    }
    for (v, label) in spec.labels.iter_mut().enumerate() {
        let is_leaf = !spec.parents.contains(&Some(v));
        let roll = rng.random_range(0..4);
        *label = match (is_leaf, roll) {
            (true, 0) | (false, 0..=2) => None,
            (_, 1) => Some(format!("n{v}")),
            _ => {
                let len = rng.random_range(1..6);
                let body: String = (0..len).map(|_| *NAME_CHARS.choose(&mut rng).unwrap()).collect();
                // keep labels unique
                Some(format!("{body}#{v}"))
            }
        };
    }
    Phylogeny::build(spec).unwrap()
}

/// Same tree with node ids shuffled, keeping species numbering: leaves keep
/// their relative order, everything else moves freely.
fn shuffled_ids(tree: &Phylogeny, seed: u64) -> Phylogeny {
    let mut rng = SeedStream::new(seed, 1).rng(0);
    let n = tree.node_count();
    let mut slots: Vec<usize> = (0..n).collect();
    slots.shuffle(&mut rng);
    let leaves: Vec<usize> = (0..n).filter(|&v| tree.is_leaf(v)).collect();
    let mut leaf_slots: Vec<usize> = slots[..leaves.len()].to_vec();
    leaf_slots.sort_unstable();
    let mut new_id = vec![0; n];
    for (&v, &slot) in leaves.iter().zip(&leaf_slots) {
        new_id[v] = slot;
    }
    let others = (0..n).filter(|&v| !tree.is_leaf(v));
    for (v, &slot) in others.zip(&slots[leaves.len()..]) {
        new_id[v] = slot;
    }
    let spec = tree.to_spec();
    let mut out = TreeSpec {
        parents: vec![None; n],
        lengths: vec![0.0; n],
        labels: vec![None; n],
    };
    for v in 0..n {
        out.parents[new_id[v]] = spec.parents[v].map(|p| new_id[p]);
        out.lengths[new_id[v]] = spec.lengths[v];
        out.labels[new_id[v]] = spec.labels[v].clone();
    }
    Phylogeny::build(out).unwrap()
}

fn leaf_depths(tree: &Phylogeny) -> Vec<(String, u64)> {
    let depths = tree.node_depths();
    let mut out: Vec<(String, u64)> = (0..tree.species_count())
        .map(|s| (species_name(tree, s), depths[tree.species_node(s).unwrap()].to_bits()))
        .collect();
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn write_parse_write_is_stable(seed in any::<u64>()) {
        let tree = random_tree(seed);
        let text = write_newick(&tree);
        let back = parse_newick(&text).unwrap();
        prop_assert_eq!(write_newick(&back), text);
        prop_assert_eq!(back.species_count(), tree.species_count());
        prop_assert_eq!(back.node_count(), tree.node_count());
        // summation order follows node ids, so only close
        prop_assert!((back.total_pd() - tree.total_pd()).abs() <= 1e-12 * tree.total_pd());
        prop_assert_eq!(leaf_depths(&back), leaf_depths(&tree));

        let mut a: Vec<u64> = tree.lengths().iter().map(|l| l.to_bits()).collect();
        let mut b: Vec<u64> = back.lengths().iter().map(|l| l.to_bits()).collect();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);

        let mut la: Vec<String> = (0..tree.node_count()).filter_map(|v| tree.node_label(v).map(str::to_owned)).collect();
        let mut lb: Vec<String> = (0..back.node_count()).filter_map(|v| back.node_label(v).map(str::to_owned)).collect();
        // unlabeled species come back labeled with their index
        for s in 0..tree.species_count() {
            if tree.species_label(s).is_none() {
                la.push(s.to_string());
            }
        }
        la.sort();
        lb.sort();
        prop_assert_eq!(la, lb);
    }

    #[test]
    fn child_order_does_not_change_output(seed in any::<u64>(), shuffle in any::<u64>()) {
        let tree = random_tree(seed);
        let shuffled = shuffled_ids(&tree, shuffle);
        prop_assert_eq!(write_newick(&shuffled), write_newick(&tree));
    }
}

#[test]
fn lengths_are_bit_exact() {
    for len in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 123456789.125, 5e-324, f64::MAX] {
        let tree = Phylogeny::from_parents(
            vec![None, Some(0), Some(0)],
            vec![0.0, len, 1.0],
            vec![None, Some("A".into()), Some("B".into())],
        )
        .unwrap();
        let back = parse_newick(&write_newick(&tree)).unwrap();
        assert_eq!(back.lengths()[1].to_bits(), len.to_bits(), "{len}");
    }
}

#[test]
fn fixtures_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/");
    let seven = parse_newick(&std::fs::read_to_string(format!("{dir}seven_species.nwk")).unwrap()).unwrap();
    assert_eq!(seven.species_count(), 7);
    assert_eq!(seven.arc_count(), 10);
    assert_eq!(seven.total_pd(), 44.0);
    assert!(seven.is_ultrametric(0.0));
    let eight = parse_newick(&std::fs::read_to_string(format!("{dir}eight_species.nwk")).unwrap()).unwrap();
    assert_eq!(eight.species_count(), 8);
    assert_eq!(eight.total_pd(), 63.0);
}
