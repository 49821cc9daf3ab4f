use semilinear::exhaustion::{run_exhaustion, ExhaustionOptions, Supersolution, TrivialityVerdict};
use semilinear::expr::Expr;
use semilinear::geometry::{build_half_plane_exhaustion, SpacingRule};
use semilinear::nonlinearity::Nonlinearity;
use semilinear::operator::EllipticCoefficients;
use semilinear::solver::{Scheme, SolveOptions};

/// One-dimensional profile of `u'' = sqrt(u)` with `u = 1` at distance 0,
/// vanishing beyond distance `12^(1/2)`.
fn dead_core_profile(d: f64) -> f64 {
    (12f64.sqrt() - d).max(0.0).powi(4) / 144.0
}

#[test]
fn sqrt_absorption_decreases_to_dead_core_profile() {
    let exh =
        build_half_plane_exhaustion(4.0, 2.0, 4, SpacingRule::FinestNodes(257), None).unwrap();
    let phi = Nonlinearity::from_expr(Expr::parse("sqrt(max(t, 0))").unwrap(), 2).unwrap();
    let opts = ExhaustionOptions {
        solve: SolveOptions::default().with_scheme(Scheme::Secant),
        ..Default::default()
    };
    let run = run_exhaustion(
        &exh,
        &EllipticCoefficients::laplacian(),
        &phi,
        &Supersolution::Constant(1.0),
        &opts,
    )
    .unwrap();
    let a = &run.anchor_values;
    for w in a.windows(2) {
        assert!(w[1] < w[0], "{a:?}");
    }
    let d = exh.anchor()[1] - exh.stages()[0].position(0)[1];
    assert!(
        (a[a.len() - 1] - dead_core_profile(d)).abs() < 1e-3,
        "{a:?}"
    );
    assert_eq!(run.verdict, TrivialityVerdict::Nontrivial);
    let last = run.final_stage();
    let far = last.gop.grid().nearest_node([0.0, 6.0]).unwrap();
    assert!(last.u.values()[far].abs() < 1e-8);
}
