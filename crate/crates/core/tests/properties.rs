use cfmmw::optimizer::{project_capped_simplex, project_simplex, FeasibleSet};
use cfmmw::rates::{associate, AssociationMode};
use proptest::prelude::*;

fn vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1..12)
}

proptest! {
    #[test]
    fn capped_simplex_projection_is_feasible_and_idempotent(v in vector(), budget in 0.01f64..4.0) {
        let mut x = v.clone();
        project_capped_simplex(&mut x, budget);
        prop_assert!(x.iter().all(|&e| e >= 0.0));
        prop_assert!(x.iter().sum::<f64>() <= budget * (1.0 + 1e-12));
        let mut again = x.clone();
        project_capped_simplex(&mut again, budget);
        for (a, b) in x.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-12 * budget);
        }
        // Any feasible point is no closer to v than the projection.
        let d = |p: &[f64]| p.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let n = v.len() as f64;
        let uniform = vec![budget / n; v.len()];
        prop_assert!(d(&x) <= d(&uniform) + 1e-9);
        prop_assert!(d(&x) <= d(&vec![0.0; v.len()]) + 1e-9);
    }

    #[test]
    fn simplex_projection_hits_the_budget(v in vector(), budget in 0.01f64..4.0) {
        let mut x = v;
        project_simplex(&mut x, budget);
        prop_assert!(x.iter().all(|&e| e >= 0.0));
        prop_assert!((x.iter().sum::<f64>() - budget).abs() <= 1e-9 * budget.max(1.0));
    }

    #[test]
    fn block_projection_respects_each_block(v in prop::collection::vec(-3.0f64..3.0, 6), budget in 0.1f64..2.0) {
        let set = FeasibleSet::Blocks { sizes: vec![2, 3, 1], budget };
        let mut x = v;
        set.project(&mut x);
        prop_assert!(x.iter().all(|&e| e >= 0.0));
        let mut start = 0;
        for len in [2, 3, 1] {
            prop_assert!(x[start..start + len].iter().sum::<f64>() <= budget * (1.0 + 1e-12));
            start += len;
        }
    }

    #[test]
    fn user_centric_association_invariants(
        norms in prop::collection::vec(0.0f64..10.0, 24),
        n in 1usize..=4,
    ) {
        let (m, k) = (6, 4);
        let a = associate(&norms, m, k, AssociationMode::UserCentric(n)).unwrap();
        for ap in 0..m {
            let served = &a.served_by_ap[ap];
            prop_assert_eq!(served.len(), n);
            prop_assert!(served.windows(2).all(|w| w[0] < w[1]));
            let row = &norms[ap * k..(ap + 1) * k];
            let weakest_served = served.iter().map(|&kk| row[kk]).fold(f64::INFINITY, f64::min);
            for kk in (0..k).filter(|kk| !served.contains(kk)) {
                prop_assert!(row[kk] <= weakest_served);
            }
        }
        let links: usize = a.serving_aps.iter().map(Vec::len).sum();
        prop_assert_eq!(links, m * n);
        for (kk, aps) in a.serving_aps.iter().enumerate() {
            for &ap in aps {
                prop_assert!(a.served_by_ap[ap].contains(&kk));
            }
        }
    }
}
