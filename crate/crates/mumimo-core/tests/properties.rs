//! Randomized property checks over the geometry and summary-statistics code.

use proptest::prelude::*;

use mumimo_core::array_geometry::{build_cylinder, build_ura};
use mumimo_core::montecarlo::EmpiricalCdf;
use mumimo_core::{db_to_linear, linear_to_db};

proptest! {
    #[test]
    fn ura_layout_invariants(q in 1usize..12, p in 1usize..12, l in 1e-3f64..10.0) {
        let layout = build_ura(q, p, l).unwrap();
        prop_assert_eq!(layout.n_elements(), 2 * p * q);
        // X-pol pair members are co-located with opposite polarization tags.
        for pair in layout.positions.chunks(2).zip(layout.pol.chunks(2)) {
            prop_assert_eq!(pair.0[0], pair.0[1]);
            prop_assert_ne!(pair.1[0], pair.1[1]);
        }
        // The grid fits in an l x l bounding box.
        for pos in &layout.positions {
            prop_assert!(pos[0].abs() <= l + 1e-12 && pos[2].abs() <= l + 1e-12);
        }
    }

    #[test]
    fn cylinder_elements_on_fixed_radius(q in 1usize..12, p in 1usize..12, l in 1e-3f64..10.0) {
        let layout = build_cylinder(q, p, l).unwrap();
        let radius = l / (2.0 * std::f64::consts::PI);
        for pos in &layout.positions {
            let r = (pos[0] * pos[0] + pos[1] * pos[1]).sqrt();
            prop_assert!((r - radius).abs() < 1e-12 * (1.0 + radius));
        }
    }

    #[test]
    fn db_conversion_roundtrip(db in -200.0f64..200.0) {
        let back = linear_to_db(db_to_linear(db));
        prop_assert!((back - db).abs() < 1e-9);
    }

    #[test]
    fn percentiles_are_monotone_and_bounded(
        mut samples in proptest::collection::vec(-100.0f64..100.0, 1..200),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let cdf = EmpiricalCdf::from_samples(samples.clone());
        let (lo, hi) = (a.min(b), a.max(b));
        let (p_lo, p_hi) = (cdf.percentile(lo).unwrap(), cdf.percentile(hi).unwrap());
        prop_assert!(p_lo <= p_hi);
        samples.sort_by(f64::total_cmp);
        prop_assert!(p_lo >= samples[0] - 1e-12);
        prop_assert!(p_hi <= samples[samples.len() - 1] + 1e-12);
    }
}
