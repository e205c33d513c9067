use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use evopref::selection::{crowding_distance, dominates, environmental_selection, fast_nondominated_sort, TieBreak};

fn population() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..4).prop_flat_map(|m| prop::collection::vec(prop::collection::vec((0u8..6).prop_map(|v| v as f64 / 5.0), m), 1..60))
}

proptest! {
    #[test]
    fn fronts_partition_the_population(objs in population()) {
        let fronts = fast_nondominated_sort(&objs);
        let mut all: Vec<usize> = fronts.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..objs.len()).collect::<Vec<_>>());
        prop_assert!(fronts.iter().all(|f| !f.is_empty()));
    }

    #[test]
    fn later_fronts_are_dominated_by_earlier(objs in population()) {
        let fronts = fast_nondominated_sort(&objs);
        for (r, front) in fronts.iter().enumerate() {
            for &i in front {
                for &j in front {
                    prop_assert!(!dominates(&objs[i], &objs[j]).unwrap());
                }
                if r > 0 {
                    prop_assert!(fronts[r - 1].iter().any(|&j| dominates(&objs[j], &objs[i]).unwrap()));
                }
            }
        }
    }

    #[test]
    fn truncation_keeps_mu_distinct_indices(objs in population(), frac in 0.05f64..1.0, seed in any::<u64>(), random in any::<bool>()) {
        let mu = ((objs.len() as f64 * frac).ceil() as usize).max(1);
        let tie = if random { TieBreak::Random } else { TieBreak::Crowding };
        let keep = environmental_selection(&objs, mu, tie, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(keep.len(), mu);
        prop_assert!(keep.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn crowding_is_nonnegative_with_infinite_extremes(objs in population()) {
        let cd = crowding_distance(&objs);
        prop_assert_eq!(cd.len(), objs.len());
        prop_assert!(cd.iter().all(|d| *d >= 0.0));
        if objs.len() > 2 {
            prop_assert!(cd.iter().any(|d| d.is_infinite()));
        }
    }
}

#[test]
fn dominance_needs_one_strict_improvement() {
    assert!(dominates(&[0.5, 0.5], &[0.5, 0.4]).unwrap());
    assert!(!dominates(&[0.5, 0.5], &[0.5, 0.5]).unwrap());
    assert!(!dominates(&[0.6, 0.4], &[0.5, 0.5]).unwrap());
    assert!(dominates(&[0.5], &[0.5, 0.5]).is_err());
}
