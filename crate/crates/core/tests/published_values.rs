//! Target-point values on the coarse levels of the published ladders. The
//! butterfly and digital studies truncate the log domain to [-10, 10].

use gopt_core::*;

fn params() -> MarketParams {
    MarketParams::new(0.1, 1.0, 0.15, 0.25, 0.25).unwrap()
}

fn value_at_100(payoff: &PayoffSpec, method: Method, steps: usize, intervals: usize) -> f64 {
    let grid = build_grid(-10.0, 10.0, intervals, steps, 0.25).unwrap();
    let cfg = SchemeConfig::new(method).with_storage(LevelStorage::Final);
    let sol = solve(payoff, &params(), &grid, &cfg).unwrap();
    interpolate_quadratic(sol.terminal(), &grid, 2.0 * 10f64.ln()).unwrap()
}

#[test]
fn butterfly_explicit_column() {
    let fly = PayoffSpec::butterfly(90.0, 110.0).unwrap();
    for (n, m, want) in [(16, 160, 5.757737), (64, 320, 4.906351), (256, 640, 4.879003), (1024, 1280, 4.883390)] {
        let got = value_at_100(&fly, Method::ExplicitX, n, m);
        assert!((got - want).abs() < 1e-6, "({n}, {m}): {got} vs {want}");
    }
}

#[test]
fn butterfly_implicit_column() {
    let fly = PayoffSpec::butterfly(90.0, 110.0).unwrap();
    for (n, m, want) in [(64, 1280, 4.895220), (256, 2560, 4.883320)] {
        let got = value_at_100(&fly, Method::ImplicitX, n, m);
        assert!((got - want).abs() < 1e-6, "({n}, {m}): {got} vs {want}");
    }
}

#[test]
fn digital_columns() {
    let dig = PayoffSpec::digital(100.0).unwrap();
    for (n, m, want) in [(64, 960, 0.652812), (256, 1920, 0.673527), (1024, 3840, 0.683729)] {
        let got = value_at_100(&dig, Method::ExplicitX, n, m);
        assert!((got - want).abs() < 1e-6, "explicit ({n}, {m}): {got} vs {want}");
    }
    for (n, m, want) in [(64, 1280, 0.703109), (256, 2560, 0.688523)] {
        let got = value_at_100(&dig, Method::ImplicitX, n, m);
        assert!((got - want).abs() < 1e-6, "implicit ({n}, {m}): {got} vs {want}");
    }
}

#[test]
fn implicit_runs_take_about_two_sweeps() {
    let fly = PayoffSpec::butterfly(90.0, 110.0).unwrap();
    let grid = build_grid(-10.0, 10.0, 1280, 64, 0.25).unwrap();
    let sol = solve(&fly, &params(), &grid, &SchemeConfig::default()).unwrap();
    let p = iteration_profile(&sol).unwrap();
    assert!(p.mean <= 3.0 && p.max <= 100, "{p:?}");
}

#[test]
fn explicit_ladder_needs_the_wide_domain() {
    // Width 10 is too narrow for the coarsest digital level: h < Σ̄√Δt.
    let dig = PayoffSpec::digital(100.0).unwrap();
    let c = 100f64.ln();
    let grid = build_grid(c - 5.0, c + 5.0, 960, 64, 0.25).unwrap();
    let err = solve(&dig, &params(), &grid, &SchemeConfig::new(Method::ExplicitX)).unwrap_err();
    assert!(matches!(err, Error::Mesh(MeshViolation::ExplicitLower { .. })), "{err}");
}
