use std::sync::Arc;

use geomest::family::bump;
use geomest::{generate, RandomFamily};
use geomest_core::grids::{AnnulusGrid, CircleGrid, Grid, RectGrid, TorusGrid};
use proptest::prelude::*;

fn grids() -> Vec<Arc<Grid>> {
    vec![
        Arc::new(CircleGrid::new(64).unwrap().into()),
        Arc::new(AnnulusGrid::new(1.0, 0.2, 24, 32).unwrap().into()),
        Arc::new(RectGrid::new(0.0, 1.0, 0.0, 2.0, 33, 33).unwrap().into()),
        Arc::new(TorusGrid::new(1.0, 2.0, 32, 32).unwrap().into()),
    ]
}

#[test]
fn too_many_modes_are_rejected() {
    let g: Arc<Grid> = Arc::new(CircleGrid::new(16).unwrap().into());
    assert!(generate(&RandomFamily::trig(5), &g, 0).is_err());
    assert!(generate(&RandomFamily::trig(4), &g, 0).is_ok());
}

#[test]
fn maps_have_no_mean_zero_variant() {
    let g = &grids()[3];
    assert!(generate(&RandomFamily::map_to(vec![1.0, 0.0], 2).mean_zero(), g, 0).is_err());
    assert!(generate(&RandomFamily::map_to(vec![1.0, 0.0], 2), g, 0).unwrap().into_map().is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generation_is_seed_deterministic(seed in any::<u64>(), which in 0usize..4, dim in 1usize..3) {
        let g = &grids()[which];
        let fam = RandomFamily::radial_bump(3).with_dim(dim);
        let a = generate(&fam, g, seed).unwrap().into_function().unwrap();
        let b = generate(&fam, g, seed).unwrap().into_function().unwrap();
        prop_assert_eq!(a.values(), b.values());
        prop_assert_eq!(a.dim(), dim);
        prop_assert!(a.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn mean_zero_families_integrate_to_zero(seed in any::<u64>(), which in 0usize..4) {
        let g = &grids()[which];
        let f = generate(&RandomFamily::trig(3).mean_zero(), g, seed).unwrap().into_function().unwrap();
        let scale = f.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for m in f.mean().unwrap() {
            prop_assert!(m.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn amplitude_scales_trig_values(seed in any::<u64>(), a in 0.1f64..5.0) {
        let g = &grids()[0];
        let f = generate(&RandomFamily::trig(4), g, seed).unwrap().into_function().unwrap();
        let h = generate(&RandomFamily::trig(4).with_amplitude(a), g, seed).unwrap().into_function().unwrap();
        let worst = f.values().iter().zip(h.values()).map(|(x, y)| (a * x - y).abs()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn bump_is_even_and_bounded(t in -2.0f64..2.0) {
        let b = bump(t);
        prop_assert_eq!(b, bump(-t));
        prop_assert!((0.0..=1.0).contains(&b));
        if t.abs() >= 1.0 {
            prop_assert_eq!(b, 0.0);
        } else if t.abs() < 0.9 {
            prop_assert!(b > 0.0);
        }
    }
}
