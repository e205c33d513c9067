use proptest::prelude::*;

use evopref::genome::{flat_dim, random_init, LayerShape};
use evopref::landscape::{LandscapeConfig, PreferenceLandscape};

fn small() -> (PreferenceLandscape, Vec<LayerShape>) {
    let shapes = vec![LayerShape::new(8, 6, 2).unwrap(), LayerShape::new(6, 4, 2).unwrap()];
    let config = LandscapeConfig { k: 8, p: 4, half_width: 1.5, projection_scale: 10.0, seed: 9, ..LandscapeConfig::default() };
    (PreferenceLandscape::build(&config, flat_dim(&shapes)).unwrap(), shapes)
}

#[test]
fn construction_is_seeded() {
    let shapes = [LayerShape::new(8, 6, 2).unwrap(), LayerShape::new(6, 4, 2).unwrap()];
    let config = LandscapeConfig { k: 8, p: 4, half_width: 1.5, projection_scale: 10.0, seed: 9, ..LandscapeConfig::default() };
    let a = PreferenceLandscape::build(&config, flat_dim(&shapes)).unwrap();
    let b = PreferenceLandscape::build(&config, flat_dim(&shapes)).unwrap();
    assert_eq!(a.to_dump(), b.to_dump());
    let c = PreferenceLandscape::build(&LandscapeConfig { seed: 10, ..config }, flat_dim(&shapes)).unwrap();
    assert_ne!(a.to_dump(), c.to_dump());
}

#[test]
fn mode_centres_are_mutually_non_dominating_peaks() {
    let (land, shapes) = small();
    let template = random_init(&shapes, 0.01, 1.0, 0).unwrap();
    let peaks: Vec<Vec<f64>> = land
        .modes()
        .iter()
        .enumerate()
        .map(|(i, mode)| {
            let g = land.preimage(&template, &mode.center).unwrap();
            assert_eq!(land.mode_of(&g).unwrap(), Some(i));
            land.evaluate_noiseless(&g).unwrap().values().to_vec()
        })
        .collect();
    for (i, a) in peaks.iter().enumerate() {
        for (j, b) in peaks.iter().enumerate() {
            if i != j {
                assert!(!evopref::selection::dominates(a, b).unwrap(), "peak {i} dominates peak {j}");
            }
        }
    }
}

#[test]
fn common_noise_is_shared_within_a_generation() {
    let (land, _) = small();
    assert_eq!(land.noise(3), land.noise(3));
    assert_ne!(land.noise(3), land.noise(4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn objectives_stay_in_unit_cube(seed in any::<u64>(), sigma in 0.001f64..0.2, gen in any::<u64>()) {
        let (land, shapes) = small();
        let g = random_init(&shapes, sigma, 1.0, seed).unwrap();
        let f = land.evaluate(&g, gen).unwrap();
        prop_assert!(f.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>()) {
        let (land, shapes) = small();
        let g = random_init(&shapes, 0.01, 1.0, seed).unwrap();
        let w = [0.5, 0.3, 0.2];
        let grad = land.weighted_gradient(&g, &w).unwrap();
        let x = g.flatten().to_vec();
        let h = 1e-6;
        for j in (0..x.len()).step_by(7) {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (land.smoothed_weighted(&g.unflatten(xp).unwrap(), &w).unwrap()
                - land.smoothed_weighted(&g.unflatten(xm).unwrap(), &w).unwrap())
                / (2.0 * h);
            prop_assert!((fd - grad[j]).abs() <= 1e-5 * (1.0 + grad[j].abs()), "coordinate {}: {} vs {}", j, fd, grad[j]);
        }
    }
}
