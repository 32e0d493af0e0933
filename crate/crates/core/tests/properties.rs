use proptest::prelude::*;

use bwp_core::{
    crossing_count, evaluate, format_layout, format_scenario, is_los, make_office_layout, make_rect_room,
    parse_layout, parse_scenario, path_gain, BuildingLayout, GainModels, OfficeSpec, PathGainModel, Point2D,
    QuadratureConfig, RoomSpec, Scenario, TwoRayForm, Wall,
};

fn point(range: std::ops::Range<f64>) -> impl Strategy<Value = Point2D> {
    (range.clone(), range).prop_map(|(x, y)| Point2D::new(x, y))
}

fn wall() -> impl Strategy<Value = Wall> {
    (point(-20.0..20.0), point(-20.0..20.0), 0.0..40.0f64)
        .prop_filter("wall needs length", |(a, b, _)| a.distance(*b) > 0.1)
        .prop_map(|(a, b, att)| Wall::new(a, b, att).unwrap())
}

fn layout() -> impl Strategy<Value = BuildingLayout> {
    prop::collection::vec(wall(), 1..12).prop_map(|w| BuildingLayout::from_walls(w).unwrap())
}

fn coarse() -> QuadratureConfig {
    QuadratureConfig {
        angular: 240,
        ..QuadratureConfig::default()
    }
}

fn transform(layout: &BuildingLayout, f: impl Fn(Point2D) -> Point2D) -> BuildingLayout {
    let walls = layout
        .walls()
        .iter()
        .map(|w| Wall::new(f(w.a), f(w.b), w.attenuation_db).unwrap())
        .collect();
    BuildingLayout::from_walls(walls).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn crossing_count_is_symmetric(l in layout(), p in point(-25.0..25.0), q in point(-25.0..25.0)) {
        prop_assert_eq!(crossing_count(&l, p, q), crossing_count(&l, q, p));
    }

    #[test]
    fn crossing_count_is_translation_invariant(
        l in layout(), p in point(-25.0..25.0), q in point(-25.0..25.0), dx in -50.0..50.0f64, dy in -50.0..50.0f64,
    ) {
        let shift = Point2D::new(dx, dy);
        let moved = transform(&l, |p| p + shift);
        prop_assert_eq!(crossing_count(&l, p, q), crossing_count(&moved, p + shift, q + shift));
    }

    #[test]
    fn points_inside_a_rectangle_see_each_other(
        w in 1.0..30.0f64, len in 1.0..30.0f64,
        a in (0.01..0.99f64, 0.01..0.99f64), b in (0.01..0.99f64, 0.01..0.99f64),
    ) {
        let spec = RoomSpec::new(w, len).unwrap();
        let (w, len) = (spec.width(), spec.length());
        let room = make_rect_room(spec, 10.0).unwrap();
        let p = Point2D::new(a.0 * w, a.1 * len);
        let q = Point2D::new(b.0 * w, b.1 * len);
        prop_assert!(is_los(&room, p, q));
        let outside = Point2D::new(w + 1.0 + a.0, len * b.1);
        prop_assert_eq!(crossing_count(&room, p, outside), 1);
    }

    #[test]
    fn layout_file_round_trips(l in layout()) {
        prop_assert_eq!(parse_layout(&format_layout(&l)).unwrap(), l);
    }

    #[test]
    fn scenario_file_round_trips(
        f in 0.5..100.0f64, pt in -60.0..0.0f64, n_los in 1.2..3.0f64, h in 0.5..3.0f64, coherent: bool,
    ) {
        let s = Scenario {
            p_t_dbw_per_m2: pt,
            n_los,
            antenna_height_m: h,
            two_ray: if coherent { TwoRayForm::Coherent } else { TwoRayForm::Asymptotic },
            ..Scenario::at_frequency(f)
        };
        prop_assert_eq!(parse_scenario(&format_scenario(&s)).unwrap(), s);
    }

    #[test]
    fn path_gain_never_increases_with_distance(f in 0.5..100.0f64, r in 0.01..1000.0f64, dr in 0.0..100.0f64) {
        let s = Scenario::at_frequency(f);
        for m in [PathGainModel::OpenSpaceTwoRay, PathGainModel::InBuildingLos, PathGainModel::InBuildingNlos] {
            prop_assert!(path_gain(m, &s, r + dr).unwrap() <= path_gain(m, &s, r).unwrap() * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gains_are_invariant_under_translation_and_quarter_turns(
        w in 2.0..12.0f64, len in 2.0..12.0f64, u in (0.05..0.95f64, 0.05..0.95f64),
        dx in -100.0..100.0f64, dy in -100.0..100.0f64, turns in 0..4u32, f in prop::sample::select(vec![6.0, 28.0]),
    ) {
        let s = Scenario::at_frequency(f);
        let spec = RoomSpec::new(w, len).unwrap();
        let room = make_rect_room(spec, 10.0).unwrap();
        let ue = Point2D::new(u.0 * spec.width(), u.1 * spec.length());
        let rot = |p: Point2D| (0..turns).fold(p, |p, _| Point2D::new(-p.y, p.x)) + Point2D::new(dx, dy);
        let moved = transform(&room, rot);
        let q = coarse();
        for models in [GainModels::default(), GainModels::multi_wall()] {
            let a = evaluate(&room, &s, ue, &q, models).unwrap();
            let b = evaluate(&moved, &s, rot(ue), &q, models).unwrap();
            prop_assert!(close(a.g_i, b.g_i, 1e-6), "g_i {} vs {}", a.g_i, b.g_i);
            prop_assert!(close(a.g_p, b.g_p, 1e-6), "g_p {} vs {}", a.g_p, b.g_p);
        }
    }

    #[test]
    fn gains_barely_move_under_arbitrary_rotation(
        w in 2.0..10.0f64, len in 2.0..10.0f64, u in (0.1..0.9f64, 0.1..0.9f64), angle in 0.0..std::f64::consts::TAU,
    ) {
        let s = Scenario::at_frequency(28.0);
        let spec = RoomSpec::new(w, len).unwrap();
        let room = make_rect_room(spec, 10.0).unwrap();
        let ue = Point2D::new(u.0 * spec.width(), u.1 * spec.length());
        let (sin, cos) = angle.sin_cos();
        let rot = |p: Point2D| Point2D::new(cos * p.x - sin * p.y, sin * p.x + cos * p.y);
        let moved = transform(&room, rot);
        let q = QuadratureConfig::default();
        let a = evaluate(&room, &s, ue, &q, GainModels::default()).unwrap();
        let b = evaluate(&moved, &s, rot(ue), &q, GainModels::default()).unwrap();
        prop_assert!(close(a.g_i, b.g_i, 5e-3), "g_i {} vs {}", a.g_i, b.g_i);
        prop_assert!(close(a.g_p, b.g_p, 5e-3), "g_p {} vs {}", a.g_p, b.g_p);
    }

    #[test]
    fn louder_walls_never_let_more_power_through(
        x in 1.0..99.0f64, y in 1.0..49.0f64, lo in 0.0..20.0f64, extra in 0.5..20.0f64,
    ) {
        let office = make_office_layout(&OfficeSpec::default()).unwrap();
        let s = Scenario::at_frequency(6.0);
        let q = coarse();
        let ue = Point2D::new(x, y);
        let soft = office.with_uniform_attenuation(lo).unwrap();
        let hard = office.with_uniform_attenuation(lo + extra).unwrap();
        let a = evaluate(&soft, &s, ue, &q, GainModels::multi_wall()).unwrap().breakdown;
        let b = evaluate(&hard, &s, ue, &q, GainModels::multi_wall()).unwrap().breakdown;
        prop_assert!(b.p_b_nlos <= a.p_b_nlos * (1.0 + 1e-12));
        prop_assert!(b.i_b_nlos <= a.i_b_nlos * (1.0 + 1e-12));
        prop_assert_eq!(a.p_b_los, b.p_b_los);
        prop_assert_eq!(a.i_b_los, b.i_b_los);
    }
}
