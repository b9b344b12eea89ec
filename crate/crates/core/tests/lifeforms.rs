use proptest::prelude::*;
use qgol::catalog::{centered, is_fixed_point, species_catalog, PatternCell};
use qgol::sweep::{decode_outcome_csv, decode_outcome_png};
use qgol::{
    classify_run, make_qutub, run_sweep, stamp, Axis, ClassifyLimits, Grid, NumericPolicy, Pattern, Precision,
    QutubSpec, RuleSet, SpeciesIndex, SweepSpec,
};

fn species_pattern(index: usize, part: f64) -> Pattern {
    let s = &species_catalog()[index];
    let cells = s
        .live
        .iter()
        .map(|&(row, col)| PatternCell { row, col, a: 1.0 })
        .chain(s.part_live.iter().map(|&(row, col)| PatternCell { row, col, a: part }))
        .collect();
    Pattern::new(s.name, cells).unwrap()
}

fn dihedral(k: usize, (r, c): (isize, isize)) -> (isize, isize) {
    match k {
        0 => (r, c),
        1 => (c, -r),
        2 => (-r, -c),
        3 => (-c, r),
        4 => (r, -c),
        5 => (-r, c),
        6 => (c, r),
        _ => (-c, -r),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stamped_species_are_identified(
        index in 0..species_catalog().len(),
        orientation in 0usize..8,
        row in 0usize..24,
        col in 0usize..24,
        part in 0.05f64..0.95,
    ) {
        let pattern = species_pattern(index, part);
        let cells = pattern
            .cells
            .iter()
            .map(|c| {
                let (row, col) = dihedral(orientation, (c.row, c.col));
                PatternCell { row, col, a: c.a }
            })
            .collect();
        let oriented = Pattern::new(pattern.name.clone(), cells).unwrap();
        let g = stamp(&Grid::new(24, 24, Precision::Binary64), &oriented, (row, col)).unwrap();
        let inv = SpeciesIndex::default().inventory(&g);
        prop_assert_eq!(inv.total(), 1, "{}", inv.summary());
        prop_assert_eq!(inv.count(&pattern.name), 1);
    }

    #[test]
    fn qutub_with_bounded_side_pairs_is_fixed(x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0, w in 0.0f64..1.0) {
        let spec = QutubSpec { a1: x, a2: y, a3: z, a4: w };
        let g = centered(&make_qutub(spec).unwrap(), 16, 16, Precision::Binary64).unwrap();
        let fixed = is_fixed_point(&g, &RuleSet::default(), &NumericPolicy::binary64(), 16, 1e-12);
        let margin = [x + y, x + z, y + w, z + w].iter().map(|s| (s - 1.0).abs()).fold(1.0, f64::min);
        prop_assume!(margin > 1e-9);
        prop_assert_eq!(fixed, spec.adjacent_pairs_bounded());
    }

    #[test]
    fn oscillator_periods_are_at_least_two(index in 0..species_catalog().len()) {
        let pattern = species_pattern(index, 0.5);
        let g = centered(&pattern, 20, 20, Precision::Binary64).unwrap();
        let c = classify_run(&g, &RuleSet::default(), &NumericPolicy::binary64(), &ClassifyLimits::default()).unwrap();
        match c.outcome.tag() {
            "Oscillator" => prop_assert!(c.outcome.period().unwrap() >= 2),
            "StillLife" => prop_assert_eq!(c.outcome.period(), None),
            other => prop_assert!(false, "{} classified as {other}", pattern.name),
        }
    }
}

#[test]
fn classical_lifeforms_are_classified() {
    let limits = ClassifyLimits::default();
    let policy = NumericPolicy::binary64();
    let rules = RuleSet::default();
    let dead = classify_run(&Grid::new(12, 12, Precision::Binary64), &rules, &policy, &limits).unwrap();
    assert_eq!(dead.outcome.tag(), "Dead");
    assert_eq!(dead.generations, 0);

    for (live, tag, name) in [
        (&[(0, 0), (0, 1), (1, 0), (1, 1)][..], "StillLife", "block"),
        (&[(0, -1), (0, 0), (0, 1)][..], "Oscillator", "blinker"),
    ] {
        let g = centered(&Pattern::classical(name, live), 16, 16, Precision::Binary64).unwrap();
        let c = classify_run(&g, &rules, &policy, &limits).unwrap();
        assert_eq!(c.outcome.tag(), tag);
        assert_eq!(c.outcome.inventory().unwrap().count(name), 1);
    }
}

#[test]
fn sweep_outputs_agree() {
    let axis = |s: &str, e: &str| Axis::new(s, e, "0.01").unwrap();
    let mut spec = SweepSpec::new(axis("0.50", "0.53"), axis("0.56", "0.59"), NumericPolicy::binary64());
    spec.grid = 48;
    let out = run_sweep(&spec).unwrap();
    assert_eq!(out.tally().values().sum::<usize>(), spec.points());
    let from_csv = decode_outcome_csv(&out.to_csv()).unwrap();
    let from_png = decode_outcome_png(&out.render_png(4).unwrap(), spec.x.len(), spec.y.len()).unwrap();
    assert_eq!(from_csv, from_png);
}
