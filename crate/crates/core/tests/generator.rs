use epd_core::gen::{
    assign_categories, budget, draw_scenario, gen_topology, perturb_lengths, species_probs_per_species,
    stream, Category, CategoryIntervals, CategoryMode, GenParams, ProbabilityMode,
};
use epd_core::{gen_instance, SeedStream};

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    SeedStream::new(seed, 0).rng(0)
}

#[test]
fn topology_draws_respect_ranges() {
    let params = GenParams::default();
    for i in 0..200 {
        let mut r = SeedStream::new(5, i).rng(stream::TOPOLOGY);
        let (tree, draw) = gen_topology(&mut r, &params).unwrap();
        assert!((50..=1000).contains(&draw.internal_nodes));
        assert!((2..=4).contains(&draw.d_max));
        assert!((5..=20).contains(&draw.lambda_max));
        assert_eq!(tree.internal_count() as u32, draw.internal_nodes);
        let child_slots: usize = (0..tree.node_count()).map(|v| tree.children(v).len()).sum();
        assert_eq!(
            tree.species_count(),
            child_slots - (draw.internal_nodes as usize - 1)
        );
        for v in 0..tree.node_count() {
            let c = tree.children(v).len();
            assert!(c == 0 || (2..=draw.d_max as usize).contains(&c));
        }
        for arc in tree.arcs() {
            let len = tree.branch_length(arc).unwrap();
            assert_eq!(len.fract(), 0.0);
            assert!((1.0..=f64::from(draw.lambda_max)).contains(&len));
        }
    }
}

#[test]
fn integer_draws_hit_both_endpoints() {
    let params = GenParams {
        internal_nodes: (2, 3),
        ..GenParams::default()
    };
    let mut seen_d = [false; 5];
    let mut seen_l = [false; 21];
    let mut seen_n = [false; 4];
    for i in 0..400 {
        let (_, d) = gen_topology(&mut SeedStream::new(8, i).rng(0), &params).unwrap();
        seen_d[d.d_max as usize] = true;
        seen_l[d.lambda_max as usize] = true;
        seen_n[d.internal_nodes as usize] = true;
    }
    assert!(seen_d[2] && seen_d[4]);
    assert!(seen_l[5] && seen_l[20]);
    assert!(seen_n[2] && seen_n[3]);
}

#[test]
fn species_count_range_over_many_trees() {
    let params = GenParams::default();
    let (mut lo, mut hi) = (usize::MAX, 0);
    for i in 0..2000 {
        let (t, _) = gen_topology(&mut SeedStream::new(21, i).rng(stream::TOPOLOGY), &params).unwrap();
        lo = lo.min(t.species_count());
        hi = hi.max(t.species_count());
    }
    assert!((51..150).contains(&lo), "min {lo}");
    assert!(hi > 1800 && hi <= 3 * 1000 + 1, "max {hi}");
}

#[test]
fn uniform_category_frequencies() {
    let cats = assign_categories(&mut rng(1), 100_000, CategoryMode::Uniform);
    for c in 1..=5u8 {
        let f = cats.iter().filter(|x| x.get() == c).count() as f64 / 1e5;
        assert!((f - 0.2).abs() < 0.01, "category {c}: {f}");
    }
}

#[test]
fn skewed_category_frequencies() {
    let cats = assign_categories(&mut rng(2), 100_000, CategoryMode::Skewed);
    let freq = |c: u8| cats.iter().filter(|x| x.get() == c).count() as f64 / 1e5;
    assert!((freq(5) - 0.76).abs() < 0.01, "{}", freq(5));
    for (c, w) in [(1, 0.02), (2, 0.04), (3, 0.09), (4, 0.09)] {
        assert!((freq(c) - w).abs() < 0.01);
    }
}

#[test]
fn scenario_draws_stay_in_intervals() {
    let mut r = rng(3);
    for _ in 0..1000 {
        let s = draw_scenario(&mut r, &CategoryIntervals::RANDOM_TREE);
        assert!(s.0[0] >= 0.5 && s.0[0] <= 1.0);
        for (v, (lo, hi)) in s.0.iter().zip(CategoryIntervals::RANDOM_TREE.as_array()) {
            assert!(v >= lo && v <= hi);
        }
        let s = draw_scenario(&mut r, &CategoryIntervals::FIXED_TREE);
        for (v, (lo, hi)) in s.0.iter().zip(CategoryIntervals::FIXED_TREE.as_array()) {
            assert!(v >= lo && v <= hi);
        }
    }
}

#[test]
fn scenario_draw_mean() {
    let intervals = CategoryIntervals::RANDOM_TREE;
    let mut r = rng(4);
    let mean = (0..10_000)
        .map(|_| draw_scenario(&mut r, &intervals).0[2])
        .sum::<f64>()
        / 10_000.0;
    assert!((mean - 0.15).abs() < 0.005, "{mean}");
}

#[test]
fn per_species_probabilities() {
    let two = Category::new(2).unwrap();
    let cats = vec![two; 500];
    let p = species_probs_per_species(&mut rng(6), &cats, &CategoryIntervals::RANDOM_TREE);
    assert!(p.as_slice().iter().all(|&x| (0.2..=0.5).contains(&x)));
    assert!(p.as_slice().windows(2).any(|w| w[0] != w[1]));
}

#[test]
fn instance_budget_and_determinism() {
    let params = GenParams::default();
    for i in 0..30 {
        let a = gen_instance(&params, 99, i).unwrap();
        assert_eq!(a, gen_instance(&params, 99, i).unwrap());
        assert_eq!(a.k, budget(a.provenance.rho, a.tree.species_count()));
        assert!(epd_core::gen::DEFAULT_RHO_CHOICES.contains(&a.provenance.rho));
        let cats = a.categories.as_ref().unwrap();
        for sc in &a.scenarios {
            let conv = sc.conversion.unwrap();
            for (s, c) in cats.iter().enumerate() {
                assert_eq!(sc.probs.as_slice()[s], conv.probability(*c));
            }
        }
        assert!(matches!(
            a.provenance.category_mode,
            Some(CategoryMode::Uniform | CategoryMode::Skewed)
        ));
    }
    // generation order does not matter
    let later = gen_instance(&params, 99, 7).unwrap();
    let _ = gen_instance(&params, 99, 3).unwrap();
    assert_eq!(later, gen_instance(&params, 99, 7).unwrap());
    assert_ne!(later, gen_instance(&params, 100, 7).unwrap());
}

#[test]
fn coin_flip_uses_both_modes() {
    let params = GenParams::default();
    let modes: Vec<_> = (0..40)
        .map(|i| gen_instance(&params, 1, i).unwrap().provenance.category_mode.unwrap())
        .collect();
    assert!(modes.contains(&CategoryMode::Uniform));
    assert!(modes.contains(&CategoryMode::Skewed));
}

#[test]
fn scenario_two_independent_of_scenario_one_mode() {
    // Switching scenario 1 draws (per-species consumes more) leaves the
    // topology and categories unchanged.
    let cat = GenParams::default();
    let sp = GenParams {
        probability_mode: ProbabilityMode::PerSpecies,
        ..GenParams::default()
    };
    let a = gen_instance(&cat, 5, 2).unwrap();
    let b = gen_instance(&sp, 5, 2).unwrap();
    assert_eq!(a.tree, b.tree);
    assert_eq!(a.categories, b.categories);
    assert_eq!(a.k, b.k);
}

#[test]
fn ultrametric_instances() {
    let params = GenParams {
        ultrametric: true,
        ..GenParams::default()
    };
    for i in 0..20 {
        let inst = gen_instance(&params, 4, i).unwrap();
        assert!(inst.tree.is_ultrametric(1e-9));
        let plain = gen_instance(&GenParams::default(), 4, i).unwrap();
        assert_eq!(plain.tree.ultrametrize(), inst.tree);
    }
}

#[test]
fn perturbation_bounds() {
    let inst = gen_instance(&GenParams::default(), 2, 0).unwrap();
    for fraction in [0.25, 0.5] {
        let p = perturb_lengths(&mut rng(10), &inst.tree, fraction).unwrap();
        for v in 0..p.node_count() {
            assert_eq!(p.children(v), inst.tree.children(v));
            let (old, new) = (inst.tree.lengths()[v], p.lengths()[v]);
            assert!(new >= (1.0 - fraction) * old && new <= (1.0 + fraction) * old);
        }
        assert_ne!(p.lengths(), inst.tree.lengths());
    }
}
