#![allow(dead_code)]

use epd_core::gen::random_small_case;
use epd_core::{Phylogeny, ProbabilityVector, SeedStream};

/// Small random case from a test seed.
pub fn small_case(seed: u64, max_species: usize) -> (Phylogeny, ProbabilityVector) {
    random_small_case(&mut SeedStream::new(seed, 0).rng(0), max_species)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn labels(n: usize, names: &[(usize, &str)]) -> Vec<Option<String>> {
    let mut out = vec![None; n];
    for &(v, s) in names {
        out[v] = Some(s.to_string());
    }
    out
}

/// Seven-species ultrametric worked example with ten branches:
/// (1:9,(2:2,3:2,4:2):7,(5:7,(6:6,7:6):1):2)
pub fn seven_species() -> Phylogeny {
    // 0 root; 1 leaf "1"; 2 (234); 3,4,5 leaves; 6 (5(67)); 7 leaf "5"; 8 (67); 9,10 leaves
    let parents = vec![
        None,
        Some(0),
        Some(0),
        Some(2),
        Some(2),
        Some(2),
        Some(0),
        Some(6),
        Some(6),
        Some(8),
        Some(8),
    ];
    let lengths = vec![0.0, 9.0, 7.0, 2.0, 2.0, 2.0, 2.0, 7.0, 1.0, 6.0, 6.0];
    let names = [(1, "1"), (3, "2"), (4, "3"), (5, "4"), (7, "5"), (9, "6"), (10, "7")];
    Phylogeny::from_parents(parents, lengths, labels(11, &names)).unwrap()
}

/// Eight-species worked example:
/// ((1:8,2:5):4,(3:2,4:2,5:2):10,(6:8,7:10):2,8:10) with
/// p = 0.96, 0.8, 0.1, 0.2, 0.5, 0.96, 0.17, 0.6.
pub fn eight_species() -> (Phylogeny, ProbabilityVector) {
    // 0 root; 1 (12); 2,3; 4 (345); 5,6,7; 8 (67); 9,10; 11 leaf "8"
    let parents = vec![
        None,
        Some(0),
        Some(1),
        Some(1),
        Some(0),
        Some(4),
        Some(4),
        Some(4),
        Some(0),
        Some(8),
        Some(8),
        Some(0),
    ];
    let lengths = vec![0.0, 4.0, 8.0, 5.0, 10.0, 2.0, 2.0, 2.0, 2.0, 8.0, 10.0, 10.0];
    let names = [
        (2, "1"),
        (3, "2"),
        (5, "3"),
        (6, "4"),
        (7, "5"),
        (9, "6"),
        (10, "7"),
        (11, "8"),
    ];
    let tree = Phylogeny::from_parents(parents, lengths, labels(12, &names)).unwrap();
    let probs =
        ProbabilityVector::new(vec![0.96, 0.8, 0.1, 0.2, 0.5, 0.96, 0.17, 0.6]).unwrap();
    (tree, probs)
}
