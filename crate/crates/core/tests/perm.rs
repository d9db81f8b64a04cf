use mtt_fisher_core::perm::{binomial, factorial};
use mtt_fisher_core::*;
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::SeedableRng;
use std::collections::HashSet;

fn perm_strategy(k: usize) -> impl Strategy<Value = ConstrainedPermutation> {
    Just((0..k).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|m| ConstrainedPermutation::from_zero_based(m).unwrap())
}

fn pair(max_k: usize) -> impl Strategy<Value = (ConstrainedPermutation, ConstrainedPermutation, ConstrainedPermutation)> {
    (1..=max_k).prop_flat_map(|k| (perm_strategy(k), perm_strategy(k), perm_strategy(k)))
}

proptest! {
    #[test]
    fn hamming_is_a_metric((a, b, c) in pair(9)) {
        let ab = hamming_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, hamming_distance(&b, &a).unwrap());
        prop_assert_eq!(hamming_distance(&a, &a).unwrap(), 0);
        prop_assert!(ab != 1);
        prop_assert!(ab <= hamming_distance(&a, &c).unwrap() + hamming_distance(&c, &b).unwrap());
        // the distance to the identity is the displacement
        prop_assert_eq!(hamming_distance(&a, &ConstrainedPermutation::identity(a.len())).unwrap(), a.displacement());
    }

    #[test]
    fn inverse_composes_to_identity(a in (1usize..9).prop_flat_map(perm_strategy)) {
        let z: Vec<usize> = (0..a.len()).collect();
        prop_assert_eq!(a.inverse().permute(&a.permute(&z)), z);
        prop_assert_eq!(ConstrainedPermutation::from_one_based(&a.to_one_based()).unwrap(), a.clone());
    }

    #[test]
    fn sampler_stays_in_support(k in 0usize..12, alpha in 0usize..13, seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let s = sample_uniform_constrained(k, Bound::Finite(alpha), &mut rng);
            prop_assert_eq!(s.len(), k);
            prop_assert!(s.displacement() <= alpha);
            let mut seen = s.as_slice().to_vec();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..k).collect::<Vec<_>>());
        }
    }

    #[test]
    fn mask_law_is_exchangeable(k in 1usize..7, p in 0.05f64..1.0, beta in 0usize..8) {
        let law = DetectionMaskLaw::new(k, p, Bound::Finite(beta)).unwrap();
        let support = law.support();
        let total: f64 = support.iter().map(|m| law.pmf(m)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for m in &support {
            prop_assert!(k - m.detected_count() <= beta);
            let mut rev = m.bits().to_vec();
            rev.reverse();
            prop_assert_eq!(law.pmf(m), law.pmf(&DetectionMask::new(rev)));
        }
        prop_assert_eq!(support.len() as u64, law.support_size());
    }
}

#[test]
fn displacement_classes_partition_the_group() {
    for n in 0..=12 {
        let total: BigUint = (0..=n).map(|i| binomial(n, i) * subfactorial(i)).sum();
        assert_eq!(total, factorial(n), "n = {n}");
        assert_eq!(count_constrained(n, Bound::Unbounded), factorial(n));
    }
}

#[test]
fn enumeration_is_exact_up_to_seven() {
    for k in 0..=7 {
        for alpha in (0..=k).map(Bound::Finite).chain([Bound::Unbounded]) {
            let all: Vec<_> = enumerate_constrained(k, alpha, u64::MAX).unwrap().collect();
            let distinct: HashSet<Vec<usize>> = all.iter().map(|p| p.as_slice().to_vec()).collect();
            assert_eq!(distinct.len(), all.len(), "duplicates at k={k} α={alpha}");
            assert_eq!(BigUint::from(all.len()), count_constrained(k, alpha), "k={k} α={alpha}");
            assert!(all.iter().all(|p| alpha.allows(p.displacement())));
        }
    }
}

#[test]
fn subfactorial_recurrence() {
    // !n = (n-1)(!(n-1) + !(n-2))
    for n in 2..30 {
        assert_eq!(subfactorial(n), BigUint::from(n - 1) * (subfactorial(n - 1) + subfactorial(n - 2)));
    }
    assert_eq!(subfactorial(0), BigUint::from(1u32));
    assert_eq!(subfactorial(1), BigUint::from(0u32));
}

#[test]
fn alpha_one_collapses_to_identity() {
    assert_eq!(count_constrained(9, Bound::Finite(1)), BigUint::from(1u32));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    assert_eq!(sample_uniform_constrained(9, Bound::Finite(1), &mut rng), ConstrainedPermutation::identity(9));
}
