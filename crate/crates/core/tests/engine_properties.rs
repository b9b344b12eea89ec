use proptest::prelude::*;
use qgol::cell::norm_error_ulps;
use qgol::{
    apply_rule, seed_random, step, step_sequential, CellState, Evolution, Grid, NumericPolicy, Precision, RuleSet,
    SumOrder,
};

fn precision() -> impl Strategy<Value = Precision> {
    prop_oneof![Just(Precision::Binary32), Just(Precision::Binary64)]
}

fn order() -> impl Strategy<Value = SumOrder> {
    proptest::sample::select(SumOrder::ALL.to_vec())
}

fn rotation_order() -> impl Strategy<Value = SumOrder> {
    proptest::sample::select(vec![SumOrder::Canonical, SumOrder::Rot1, SumOrder::Rot2, SumOrder::Rot3])
}

fn random_grid() -> impl Strategy<Value = Grid> {
    (2usize..20, 2usize..20, 0.0f64..=1.0, any::<u64>(), precision())
        .prop_map(|(w, h, f, seed, p)| seed_random(w, h, f, seed, p).unwrap())
}

fn binary(g: &Grid) -> Grid {
    let live = g.liveness().iter().map(|&a| if a > 0.0 { 1.0 } else { 0.0 }).collect();
    Grid::from_liveness(g.width(), g.height(), g.precision(), live).unwrap()
}

fn conway(g: &Grid) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.len());
    for r in 0..g.height() as isize {
        for c in 0..g.width() as isize {
            let n = (-1..=1)
                .flat_map(|dr| (-1..=1).map(move |dc| (dr, dc)))
                .filter(|&(dr, dc)| (dr, dc) != (0, 0) && g.get_wrapped(r + dr, c + dc) == 1.0)
                .count();
            let alive = g.get(r as usize, c as usize) == 1.0;
            out.push(if n == 3 || (alive && n == 2) { 1.0 } else { 0.0 });
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binary_grids_follow_conway(g in random_grid(), o in order(), generations in 1usize..12) {
        let policy = NumericPolicy::new(g.precision(), o);
        let mut g = binary(&g);
        for _ in 0..generations {
            let next = step(&g, &RuleSet::default(), &policy);
            let oracle = conway(&g);
            prop_assert_eq!(next.liveness(), oracle.as_slice());
            g = next;
        }
    }

    #[test]
    fn step_keeps_states_normalized(g in random_grid(), o in order()) {
        let policy = NumericPolicy::new(g.precision(), o);
        let next = step(&g, &RuleSet::default(), &policy);
        prop_assert_eq!(next.generation(), g.generation() + 1);
        for r in 0..next.height() {
            for c in 0..next.width() {
                let s = next.cell(r, c);
                prop_assert!((0.0..=1.0).contains(&s.a));
                prop_assert!(next.precision().is_representable(s.a));
                prop_assert!(norm_error_ulps(s, next.precision()) <= 4.0);
            }
        }
    }

    #[test]
    fn step_commutes_with_translation(g in random_grid(), dr in -20isize..20, dc in -20isize..20) {
        let policy = NumericPolicy::new(g.precision(), SumOrder::Canonical);
        let rules = RuleSet::default();
        let a = step(&g.shifted(dr, dc), &rules, &policy);
        let b = step(&g, &rules, &policy).shifted(dr, dc);
        prop_assert!(a.same_cells(&b));
    }

    #[test]
    fn step_commutes_with_rotation(n in 2usize..16, f in 0.0f64..=1.0, seed in any::<u64>(), p in precision(), o in rotation_order()) {
        let g = seed_random(n, n, f, seed, p).unwrap();
        let rules = RuleSet::default();
        let a = step(&g.rotate90().unwrap(), &rules, &NumericPolicy::new(p, o.rotated()));
        let b = step(&g, &rules, &NumericPolicy::new(p, o)).rotate90().unwrap();
        prop_assert!(a.same_cells(&b));
    }

    #[test]
    fn sequential_matches_default_step(g in random_grid(), o in order()) {
        let policy = NumericPolicy::new(g.precision(), o);
        let rules = RuleSet::default();
        prop_assert!(step(&g, &rules, &policy).same_cells(&step_sequential(&g, &rules, &policy)));
    }

    #[test]
    fn evolution_matches_repeated_steps(
        w in 6usize..30,
        h in 6usize..30,
        f in 0.0f64..0.15,
        seed in any::<u64>(),
        p in precision(),
        generations in 1u64..40,
    ) {
        let g = seed_random(w, h, f, seed, p).unwrap();
        let policy = NumericPolicy::new(p, SumOrder::Canonical);
        let rules = RuleSet::default();
        let mut evo = Evolution::new(g.clone(), rules, policy);
        evo.advance(generations);
        let mut reference = g;
        for _ in 0..generations {
            reference = step(&reference, &rules, &policy);
        }
        prop_assert!(evo.grid().same_cells(&reference));
        prop_assert_eq!(evo.generation(), generations);
    }

    #[test]
    fn rule_output_is_a_unit_state(a in 0.0f64..=1.0, liveness in 0.0f64..=8.0, g in 1.0f64..5.0) {
        let rules = RuleSet::with_mixing(g);
        let s = apply_rule(CellState::from_liveness(a), liveness, &rules);
        prop_assert!(s.a >= 0.0 && s.b >= 0.0);
        prop_assert!(norm_error_ulps(s, Precision::Binary64) <= 4.0);
    }
}

#[test]
fn classical_table_at_integer_liveness() {
    let rules = RuleSet::default();
    for n in 0..=8u32 {
        for alive in [false, true] {
            let s = if alive { CellState::live() } else { CellState::dead() };
            let out = apply_rule(s, n as f64, &rules);
            let expected = n == 3 || (alive && n == 2);
            assert_eq!(out.a, if expected { 1.0 } else { 0.0 }, "n={n} alive={alive}");
        }
    }
}
