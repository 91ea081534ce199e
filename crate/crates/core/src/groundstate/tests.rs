use std::sync::OnceLock;

use proptest::prelude::*;

use super::*;

fn ground() -> &'static GroundState {
    static G: OnceLock<GroundState> = OnceLock::new();
    G.get_or_init(|| standard_ground_state().unwrap())
}

#[test]
fn central_value_and_threshold_match_reference_values() {
    let g = ground();
    assert!((g.central_value() - 4.33738768).abs() < 1e-6, "Q(0) = {}", g.central_value());
    assert!((g.energy_j() - 18.89725).abs() < 1e-4, "J(Q) = {}", g.energy_j());
}

#[test]
fn profile_is_positive_and_decreasing() {
    let g = ground();
    let q = g.profile();
    assert_eq!(q[0], g.central_value());
    assert!(q.iter().all(|&x| x > 0.0));
    assert!(q.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn shooting_brackets_the_central_value() {
    let grid = shooting_grid(1e-3, DEFAULT_RMAX).unwrap();
    let b = ground().central_value();
    assert!(shoot(b + 1e-3, &grid).overshoots());
    assert!(matches!(shoot(b - 1e-3, &grid), ShotOutcome::TurnsUp { .. }));
    assert!(shooting_grid(1e-3, 10.0).is_err());
}

#[test]
fn virial_functional_vanishes_as_the_solve_tightens() {
    let k_at = |tol: f64, dr: f64| {
        let g = compute_ground_state(tol, &shooting_grid(dr, DEFAULT_RMAX).unwrap()).unwrap();
        functional_k(g.profile(), g.grid()).unwrap().abs()
    };
    let loose = k_at(1e-8, 4e-3);
    let tight = k_at(1e-10, 2e-3);
    assert!(tight <= 0.5 * loose, "|K(Q)| {loose} -> {tight}");
}

#[test]
fn interpolation_reproduces_nodes_and_continues_smoothly() {
    let g = ground();
    let grid = g.grid();
    for j in [0usize, 1, 777, 5000, 14000] {
        assert_eq!(g.eval(grid.r(j)), g.profile()[j]);
    }
    let r = 2.0005;
    let (lo, hi) = (g.eval(2.0), g.eval(2.001));
    assert!(g.eval(r) < lo && g.eval(r) > hi);
    // the spliced tail stays positive and keeps decaying like e^{-r}/r
    let s = g.splice_radius();
    assert!(s <= SPLICE_RADIUS);
    let (a, b) = (g.eval(s + 1.0), g.eval(s + 2.0));
    assert!(a > 0.0 && b > 0.0);
    let expected = (-1.0f64).exp() * (s + 1.0) / (s + 2.0);
    assert!((b / a - expected).abs() < 1e-6 * expected);
}

#[test]
fn coarse_resampling_keeps_the_threshold() {
    let coarse = RadialGrid::with_extent(1e-2, 40.0, DEFAULT_CFL).unwrap();
    let j = ground().energy_j_on(&coarse).unwrap();
    assert!((j - ground().energy_j()).abs() < 1e-2, "{j}");
}

#[test]
fn ps_reference_matches_the_one_shot_helper() {
    let grid = RadialGrid::with_extent(2e-2, 30.0, DEFAULT_CFL).unwrap();
    let q = ground().sample(&grid);
    let u0: Vec<f64> = q.iter().map(|x| 0.9 * x).collect();
    let u1 = vec![0.0; grid.n_points()];
    let a = PsReference::new(ground(), &grid).unwrap().classify(&u0, &u1).unwrap();
    let b = ps_classify(&u0, &u1, ground(), &grid).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.region, PsRegion::PsPlus);
    let big: Vec<f64> = q.iter().map(|x| 1.1 * x).collect();
    assert_eq!(ps_classify(&big, &u1, ground(), &grid).unwrap().region, PsRegion::PsMinus);
}

#[test]
fn region_names_round_trip() {
    for r in [PsRegion::PsPlus, PsRegion::PsMinus, PsRegion::AboveThreshold] {
        assert_eq!(PsRegion::parse(r.as_str()), Some(r));
    }
    assert_eq!(PsRegion::parse("PS+"), None);
}

proptest! {
    #[test]
    fn membership_is_the_literal_inequalities(e in -50.0f64..50.0, j in 0.1f64..40.0, k in -20.0f64..20.0) {
        let m = PsMembership::from_values(e, j, k);
        let expected = match (e < j, k >= 0.0) {
            (true, true) => PsRegion::PsPlus,
            (true, false) => PsRegion::PsMinus,
            (false, _) => PsRegion::AboveThreshold,
        };
        prop_assert_eq!(m.region, expected);
    }
}
