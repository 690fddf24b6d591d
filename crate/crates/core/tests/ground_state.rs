mod common;

use fracollapse::ground_state::{
    find, gn_quotient, load_library, sharp_constant_from_mass, solve_with, GroundState, SolverOptions,
};
use fracollapse::{Error, Grid};
use num_complex::Complex64;

use common::{line_soliton, rel, solve};

#[test]
fn cubic_soliton_on_a_fine_grid() {
    let q = solve(1.0, 1, 1.0, 1024, 20.0);
    let g = q.profile.grid();
    let err = (0..g.n())
        .map(|j| (q.profile.values()[j] - line_soliton(1.0, g.coord(j))).norm())
        .fold(0.0, f64::max);
    assert!(err <= 1e-6, "{err}");
    assert!((q.mass_sq - 4.0).abs() <= 1e-8);
}

#[test]
fn quintic_soliton_matches_closed_form() {
    let q = solve(1.0, 1, 2.0, 1024, 20.0);
    let g = q.profile.grid();
    let err = (0..g.n())
        .map(|j| (q.profile.values()[j] - line_soliton(2.0, g.coord(j))).norm())
        .fold(0.0, f64::max);
    assert!(err <= 1e-6, "{err}");
}

#[test]
fn one_dimensional_cubic_constant_is_one_over_root_three() {
    let q = solve(1.0, 1, 1.0, 512, 24.0);
    assert!(rel(q.c_opt, 1.0 / 3f64.sqrt()) <= 1e-8, "{}", q.c_opt);
}

#[test]
fn critical_constant_has_closed_form() {
    for (s, dim, mass) in [(0.7, 2usize, 11.1), (1.0, 1, 4.0), (0.55, 3, 3.3)] {
        let p = 2.0 * s / dim as f64;
        let want = (p + 1.0) / f64::powf(mass, p);
        assert!(rel(sharp_constant_from_mass(s, dim, p, mass), want) <= 1e-12);
    }
}

#[test]
fn quotient_is_scale_invariant_and_attained_by_q() {
    let q = solve(1.0, 2, 1.0, 128, 16.0);
    let jq = gn_quotient(&q.profile, 1.0, 1.0).unwrap();
    assert!(rel(jq, q.c_opt) <= 1e-6);
    for a in [Complex64::new(-3.0, 0.0), Complex64::new(0.2, 0.9)] {
        let j = gn_quotient(&q.profile.scale(a), 1.0, 1.0).unwrap();
        assert!(rel(j, jq) <= 1e-12);
    }
}

#[test]
fn residual_tail_never_increases() {
    let q = solve(0.7, 2, 0.7, 128, 16.0);
    assert!(q.residual <= 1e-10);
    assert!(q.residual_tail.windows(2).all(|w| w[1] <= w[0]), "{:?}", q.residual_tail);
}

#[test]
fn library_roundtrip_and_lookup() {
    let dir = tempfile::tempdir().unwrap();
    let a = solve(1.0, 1, 1.0, 256, 20.0);
    let b = solve(1.0, 1, 2.0, 256, 20.0);
    a.save(dir.path()).unwrap();
    let path = b.save(dir.path()).unwrap();
    assert!(path.ends_with("gs_s1_N1_p2.bin"));
    assert!(dir.path().join("gs_s1_N1_p2.csv").exists());

    let lib = load_library(dir.path()).unwrap();
    assert_eq!(lib.len(), 2);
    let got = find(&lib, 1.0, 1, 2.0).unwrap();
    assert_eq!(got.profile.values(), b.profile.values());
    assert_eq!(got.c_opt, b.c_opt);
    match find(&lib, 0.7, 2, 0.7) {
        Err(Error::MissingGroundState { dim, .. }) => assert_eq!(dim, 2),
        other => panic!("expected a missing ground state, got {other:?}"),
    }
    let reloaded = GroundState::load(&path).unwrap();
    assert_eq!(reloaded.mass_sq, b.mass_sq);
}

#[test]
fn unreachable_tolerance_is_a_convergence_error() {
    let g = Grid::new(1, 128, 16.0).unwrap();
    let opts = SolverOptions {
        tol: 1e-30,
        max_iter: 50,
        ..SolverOptions::default()
    };
    match solve_with(1.0, 1.0, &g, &opts) {
        Err(Error::Convergence { iterations, .. }) => assert_eq!(iterations, 50),
        other => panic!("expected convergence failure, got {other:?}"),
    }
}
