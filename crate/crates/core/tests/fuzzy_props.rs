#[path = "common/fuzzy_oracle.rs"]
mod fuzzy_oracle;

use fuzzy_oracle::{distance_terms, oracle_angle};
use patrol_core::fuzzy::*;
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = MembershipFunction> {
    (prop::collection::vec(-100.0..100.0f64, 4), any::<bool>()).prop_map(|(mut p, tri)| {
        p.sort_by(f64::total_cmp);
        if tri {
            MembershipFunction::triangle(p[0], p[1], p[3]).unwrap()
        } else {
            MembershipFunction::trapezoid(p[0], p[1], p[2], p[3]).unwrap()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn membership_bounds_core_and_support(mf in shape(), x in -150.0..150.0f64) {
        let mu = mf.degree(x);
        prop_assert!((0.0..=1.0).contains(&mu));
        let (a, d) = mf.support();
        let (b, c) = mf.core();
        if x < a || x > d {
            prop_assert_eq!(mu, 0.0);
        }
        if x >= b && x <= c {
            prop_assert_eq!(mu, 1.0);
        }
        prop_assert_eq!(mf.degree(b), 1.0);
        prop_assert_eq!(mf.degree(c), 1.0);
    }

    #[test]
    fn membership_is_lipschitz(mf in shape(), x in -150.0..150.0f64, dx in -5.0..5.0f64) {
        let k = mf.max_slope();
        let gap = (mf.degree(x + dx) - mf.degree(x)).abs();
        prop_assert!(gap <= k * dx.abs() + 1e-9, "gap {} slope {} dx {}", gap, k, dx);
    }

    #[test]
    fn membership_is_piecewise_linear(mf in shape(), s in 0.01..0.99f64) {
        let bp = mf.breakpoints();
        for w in bp.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi - lo < 1e-6 {
                continue;
            }
            // three interior points of one segment are collinear
            let p = |f: f64| lo + f * (hi - lo);
            let (x0, x1, x) = (p(0.001), p(0.999), p(s));
            let lin = mf.degree(x0) + (x - x0) / (x1 - x0) * (mf.degree(x1) - mf.degree(x0));
            prop_assert!((mf.degree(x) - lin).abs() < 1e-9);
        }
    }

    #[test]
    fn canonical_inputs_cover_their_universe(x in 4.0..=100.0f64) {
        let cfg = FuzzyConfig::canonical();
        for var in [&cfg.front, &cfg.right] {
            prop_assert!(var.fuzzify(x).iter().any(|(_, d)| d > 0.0));
        }
    }

    #[test]
    fn canonical_output_covers_its_universe(x in -20.0..=60.0f64) {
        let cfg = FuzzyConfig::canonical();
        prop_assert!(cfg.output.terms().iter().any(|t| t.shape.degree(x) > 0.0));
    }

    #[test]
    fn angle_is_total_on_wide_inputs(u2 in 0.0..=500.0f64, u3 in 0.0..=500.0f64) {
        let a = FuzzyController::canonical().avoidance_angle(u2, u3);
        prop_assert!(a.is_finite() && (-20.0..=60.0).contains(&a), "{}", a);
    }

    #[test]
    fn far_right_and_far_front_go_straight(u2 in 70.0..=500.0f64, u3 in 100.0..=500.0f64) {
        let a = FuzzyController::canonical().avoidance_angle(u2, u3);
        prop_assert_eq!(a, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// The full 10,000-case comparison runs in the acceptance suite.
    #[test]
    fn matches_brute_force_oracle(u2 in 0.0..=120.0f64, u3 in 0.0..=120.0f64) {
        let got = FuzzyController::canonical().avoidance_angle(u2, u3);
        let want = oracle_angle(u2, u3);
        prop_assert!((got - want).abs() <= 0.05, "({}, {}): {} vs oracle {}", u2, u3, got, want);
    }

    #[test]
    fn fuzzification_matches_oracle_terms(x in 0.0..=300.0f64) {
        let cfg = FuzzyConfig::canonical();
        let d = cfg.front.fuzzify(x);
        let want = distance_terms(x);
        for (name, w) in ["near", "medium", "far"].iter().zip(want) {
            prop_assert!((d.get(name) - w).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_refinement_converges(
        front in prop::collection::vec(0.0..=1.0f64, 3),
        right in prop::collection::vec(0.0..=1.0f64, 3),
    ) {
        let cfg = FuzzyConfig::canonical();
        let names = ["near", "medium", "far"];
        let f = Degrees::from_pairs(names.iter().copied().zip(front));
        let r = Degrees::from_pairs(names.iter().copied().zip(right));
        let coarse = infer(&cfg.rules, &f, &r, &cfg.output, 0.1).unwrap();
        let fine = infer(&cfg.rules, &f, &r, &cfg.output, 0.05).unwrap();
        if let (Ok(a), Ok(b)) = (defuzz_centroid(&coarse), defuzz_centroid(&fine)) {
            prop_assert!((a - b).abs() < 0.1, "{} vs {}", a, b);
        }
        for agg in [&coarse, &fine] {
            let g = agg.grid();
            prop_assert_eq!(g[0], -20.0);
            prop_assert_eq!(*g.last().unwrap(), 60.0);
            prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(agg.degrees().iter().all(|d| (0.0..=1.0).contains(d)));
        }
    }
}

#[test]
fn rule_table_is_total_and_standard() {
    let rb = RuleBase::avoidance_table();
    assert_eq!(rb.rules().len(), 9);
    let want = [
        ("near", "near", "pos_large"),
        ("near", "medium", "pos_small"),
        ("near", "far", "pos_medium"),
        ("medium", "near", "neg_small"),
        ("medium", "medium", "zero"),
        ("medium", "far", "zero"),
        ("far", "near", "neg_small"),
        ("far", "medium", "zero"),
        ("far", "far", "zero"),
    ];
    for (f, r, t) in want {
        assert_eq!(rb.consequent(f, r), Some(t), "({f}, {r})");
        assert_eq!(rb.rules().iter().filter(|x| x.front == f && x.right == r).count(), 1);
    }
}

#[test]
fn shipped_fuzzy_file_is_canonical() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/fuzzy.toml");
    assert_eq!(FuzzyConfig::load(path).unwrap(), FuzzyConfig::canonical());
}
