use conley_lab::census::{build_profile, census, BumpParams, BumpProfile, Family};
use proptest::prelude::*;
use std::f64::consts::PI;

fn profile(r_minus: f64, gaps: [f64; 3], inner_slope: f64, turns: f64) -> Option<BumpProfile> {
    let r_prime = r_minus + gaps[0];
    let r_double_prime = r_prime + gaps[1];
    let r = r_double_prime + gaps[2];
    let p = BumpParams { r_minus, r_prime, r_double_prime, r, c: 0.0, floor: 0.0, inner_slope, outer: None }.with_slope(-2.0 * PI * turns);
    build_profile(&p).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roots_per_segment_follow_the_slope_range(
        r_minus in 0.05f64..0.2,
        g0 in 0.05f64..0.15,
        g1 in 0.05f64..0.15,
        g2 in 0.05f64..0.15,
        inner in -0.4f64..0.0,
        turns in 0.2f64..1.5,
        t in 1.0f64..25.0,
    ) {
        let pr = profile(r_minus, [g0, g1, g2], inner, turns);
        prop_assume!(pr.is_some());
        let pr = pr.unwrap();
        let c = census(&pr, t, 1).unwrap();
        for seg in pr.segments.iter().filter(|s| s.family.is_some() && s.width.is_finite() && s.beta != 0.0) {
            let end = seg.rho0 + seg.width;
            let count = c.spheres().filter(|e| e.rho >= seg.rho0 && e.rho <= end).count() as i64;
            let expect = (t * seg.beta.abs() / (2.0 * PI)).floor() as i64;
            prop_assert!((count - expect).abs() <= 1, "segment at ρ = {}: {count} roots vs ⌊T·|range|/2π⌋ = {expect}", seg.rho0);
        }
        for e in c.spheres() {
            prop_assert!((t * pr.slope(e.rho) + 2.0 * PI * e.l as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn plateau_actions_scale_with_the_period(
        r_minus in 0.05f64..0.2,
        inner in -0.4f64..0.0,
        turns in 0.2f64..1.5,
        t in 1.0f64..10.0,
        k in 2usize..5,
    ) {
        let pr = profile(r_minus, [0.1, 0.1, 0.1], inner, turns);
        prop_assume!(pr.is_some());
        let pr = pr.unwrap();
        let plateau = |period: f64| -> Vec<f64> {
            census(&pr, period, 1).unwrap().entries.iter().filter(|e| e.family == Family::PlateauTrivial).map(|e| e.action).collect()
        };
        let (one, many) = (plateau(t), plateau(k as f64 * t));
        prop_assert_eq!(one.len(), many.len());
        for (a, b) in one.iter().zip(&many) {
            prop_assert!((b - k as f64 * a).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
