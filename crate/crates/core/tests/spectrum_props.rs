mod common;

use common::{gram_singular_values, rng};
use proptest::prelude::*;
use rand::Rng;
use tnarch::partition::InputPartition;
use tnarch::spectrum::{entanglement_measures, numerical_rank, svd_spectrum, RankRule, SingularSpectrum};
use tnarch::tensor::{rank1_from_vectors, DenseTensor};

fn random_matrix(seed: u64, rows: usize, cols: usize, rank: usize) -> DenseTensor {
    let mut r = rng(seed);
    let u: Vec<Vec<f64>> = (0..rank).map(|_| (0..rows).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let v: Vec<Vec<f64>> = (0..rank).map(|_| (0..cols).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    DenseTensor::from_fn(vec![rows, cols], |ix| (0..rank).map(|k| u[k][ix[0]] * v[k][ix[1]]).sum()).unwrap()
}

#[test]
fn low_rank_products_have_their_rank() {
    for seed in 0..40 {
        let rows = 3 + (seed as usize % 9);
        let cols = 2 + (seed as usize * 7 % 11);
        let rank = 1 + seed as usize % rows.min(cols);
        let m = random_matrix(seed, rows, cols, rank);
        let s = svd_spectrum(&m).unwrap();
        assert_eq!(s.len(), rows.min(cols));
        assert_eq!(numerical_rank(&s, 1e-9), rank, "seed {seed}");
        assert_eq!(numerical_rank(&s, RankRule::Machine.tolerance(rows, cols) * 100.0), rank);
    }
}

#[test]
fn rank_one_states_are_unentangled() {
    let mut r = rng(8);
    for case in 0..100 {
        let n = r.random_range(2..=6);
        let m = r.random_range(1..=3);
        let vs: Vec<DenseTensor> = (0..n)
            .map(|_| DenseTensor::vector((0..m).map(|_| r.random_range(0.1..1.0)).collect()).unwrap())
            .collect();
        let t = rank1_from_vectors(&vs).unwrap();
        let p = common::random_partition(&mut r, n);
        let s = svd_spectrum(&t.matricize(&p.to_index_partition()).unwrap()).unwrap();
        let rep = entanglement_measures(&s, 1e-7).unwrap();
        assert_eq!(rep.schmidt, 1, "case {case}");
        assert!(rep.entropy.abs() < 1e-12, "case {case}: {}", rep.entropy);
        assert!(rep.geometric.abs() < 1e-6, "case {case}: {}", rep.geometric);
    }
}

#[test]
fn flat_spectrum_has_maximal_entropy() {
    for r in 1..=64 {
        let s = SingularSpectrum::new(vec![1.0 / (r as f64).sqrt(); r]).unwrap();
        let rep = entanglement_measures(&s, 1e-7).unwrap();
        assert!((rep.entropy - (r as f64).ln()).abs() <= 1e-12);
        assert!((rep.geometric - (1.0 - 1.0 / r as f64).sqrt()).abs() <= 1e-12);
    }
}

#[test]
fn bell_pair_matricization() {
    // (|00> + |11>) / sqrt 2 split between its two qubits
    let h = 0.5f64.sqrt();
    let t = DenseTensor::new(vec![2, 2], vec![h, 0.0, 0.0, h]).unwrap();
    let p = InputPartition::new(vec![0], 2).unwrap();
    let s = svd_spectrum(&t.matricize(&p.to_index_partition()).unwrap()).unwrap();
    let rep = entanglement_measures(&s, 1e-7).unwrap();
    assert!((rep.entropy - 2f64.ln()).abs() < 1e-12);
    assert_eq!(rep.schmidt, 2);
}

#[test]
fn rank_rule_parsing() {
    assert_eq!("machine".parse::<RankRule>().unwrap(), RankRule::Machine);
    assert_eq!("1e-9".parse::<RankRule>().unwrap(), RankRule::Relative(1e-9));
    assert!("loose".parse::<RankRule>().is_err());
    assert!(RankRule::Relative(2.0).validate().is_err());
    assert!(RankRule::Relative(0.0).validate().is_err());
    assert_eq!(RankRule::Machine.tolerance(256, 256), 256.0 * f64::EPSILON);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn spectrum_agrees_with_gram_oracle(seed in any::<u64>(), rows in 1usize..10, cols in 1usize..10) {
        let mut r = rng(seed);
        let m = DenseTensor::from_fn(vec![rows, cols], |_| r.random_range(-2.0..2.0)).unwrap();
        let ours = svd_spectrum(&m).unwrap();
        let oracle = gram_singular_values(&m);
        let top = ours.largest().max(1e-300);
        prop_assert_eq!(ours.len(), oracle.len());
        for (x, y) in ours.values().iter().zip(&oracle) {
            prop_assert!((x - y).abs() <= 1e-6 * top);
        }
        let frob: f64 = m.data().iter().map(|v| v * v).sum();
        let sq: f64 = ours.values().iter().map(|v| v * v).sum();
        prop_assert!((frob - sq).abs() <= 1e-10 * frob.max(1.0));
    }

    #[test]
    fn measure_bounds(values in proptest::collection::vec(0.0f64..10.0, 1..20), tol_exp in 1i32..12) {
        prop_assume!(values.iter().any(|&v| v > 0.0));
        let s = SingularSpectrum::new(values).unwrap();
        let tol = 10f64.powi(-tol_exp);
        let rep = entanglement_measures(&s, tol).unwrap();
        prop_assert!(rep.schmidt >= 1 && rep.schmidt <= s.len());
        prop_assert!(rep.entropy >= 0.0);
        prop_assert!(rep.entropy <= (rep.schmidt as f64).ln() + 1e-12);
        prop_assert!((0.0..=1.0).contains(&rep.geometric));
        prop_assert_eq!(rep.schmidt, numerical_rank(&s, tol));
    }

    #[test]
    fn scaling_leaves_measures_unchanged(values in proptest::collection::vec(0.01f64..10.0, 1..12), c in 0.001f64..1000.0) {
        let a = entanglement_measures(&SingularSpectrum::new(values.clone()).unwrap(), 1e-7).unwrap();
        let b = entanglement_measures(&SingularSpectrum::new(values.iter().map(|v| v * c).collect()).unwrap(), 1e-7).unwrap();
        prop_assert_eq!(a.schmidt, b.schmidt);
        prop_assert!((a.entropy - b.entropy).abs() < 1e-10);
        prop_assert!((a.geometric - b.geometric).abs() < 1e-10);
    }
}
