//! Randomized invariant suites.
//!
//! Each suite draws independent random problems (grid, coefficients,
//! nonlinearity, data) from a per-trial ChaCha stream, so results do not
//! depend on the execution policy or on scheduling. Trials run through
//! [`map_indexed`].

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::ScalarField;
use crate::geometry::{build_exhaustion, restrict, Grid, SpacingRule};
use crate::nonlinearity::Nonlinearity;
use crate::operator::{assemble, Coefficient, EllipticCoefficients};
use crate::par::{map_indexed, Execution};
use crate::potential::GreenOperator;
use crate::solver::{
    check_comparison, check_monotone_in_data, sandwich_iterates, solve_u, Scheme, SolveOptions,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub exec: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 0,
            tol: 1e-9,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Largest violation over all trials (`<= 0` when every trial holds with room).
    pub worst: f64,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// A trial outcome: the size of the violation, or a description of the error.
type Trial = Result<f64, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Comparison,
    MonotoneInData,
    SandwichInterleaving,
    GreenPositivity,
    FixedPointIdentity,
    RestrictionExactness,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Comparison,
        Suite::MonotoneInData,
        Suite::SandwichInterleaving,
        Suite::GreenPositivity,
        Suite::FixedPointIdentity,
        Suite::RestrictionExactness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Comparison => "comparison",
            Suite::MonotoneInData => "monotone_in_data",
            Suite::SandwichInterleaving => "sandwich_interleaving",
            Suite::GreenPositivity => "green_positivity",
            Suite::FixedPointIdentity => "fixed_point_identity",
            Suite::RestrictionExactness => "restriction_exactness",
        }
    }

    fn stream(self) -> u64 {
        Suite::ALL.iter().position(|&s| s == self).unwrap() as u64
    }

    fn trial(self, rng: &mut ChaCha8Rng, tol: f64) -> Trial {
        match self {
            Suite::Comparison => comparison_trial(rng, tol),
            Suite::MonotoneInData => monotone_trial(rng, tol),
            Suite::SandwichInterleaving => sandwich_trial(rng, tol),
            Suite::GreenPositivity => positivity_trial(rng, tol),
            Suite::FixedPointIdentity => identity_trial(rng),
            Suite::RestrictionExactness => restriction_trial(rng),
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> SuiteResult {
    let outcomes = map_indexed(opts.exec, opts.trials, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream((suite.stream() << 32) | i as u64);
        suite.trial(&mut rng, opts.tol)
    });
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut first_failure = None;
    for (i, o) in outcomes.into_iter().enumerate() {
        let failure = match o {
            Ok(v) => {
                worst = worst.max(v);
                (v > 0.0).then(|| format!("trial {i}: violation {v:e}"))
            }
            Err(msg) => Some(format!("trial {i}: {msg}")),
        };
        if let Some(msg) = failure {
            failures += 1;
            first_failure.get_or_insert(msg);
        }
    }
    SuiteResult {
        name: suite.name(),
        trials: opts.trials,
        failures,
        worst,
        first_failure,
    }
}

pub fn run_all(opts: &VerifyOptions) -> Vec<SuiteResult> {
    Suite::ALL.iter().map(|&s| run_suite(s, opts)).collect()
}

struct Problem {
    gop: GreenOperator,
    phi: Nonlinearity,
    opts: SolveOptions,
}

fn random_grid(rng: &mut ChaCha8Rng) -> Grid {
    if rng.random_bool(0.4) {
        let n = rng.random_range(8..=48);
        Grid::new_box(&[(0.0, 1.0)], &[1.0 / n as f64]).expect("grid")
    } else {
        let (nx, ny) = (rng.random_range(6..=14), rng.random_range(6..=14));
        let (w, hgt) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        Grid::new_box(&[(0.0, w), (0.0, hgt)], &[w / nx as f64, hgt / ny as f64]).expect("grid")
    }
}

fn random_coefficients(rng: &mut ChaCha8Rng) -> EllipticCoefficients {
    let a11: f64 = rng.random_range(0.5..2.0);
    let a22: f64 = rng.random_range(0.5..2.0);
    let wobble = rng.random_range(0.0..0.3);
    let a12 = rng.random_range(-0.15..0.15) * a11.min(a22);
    let mut k = EllipticCoefficients::laplacian()
        .with_diffusion(
            Coefficient::func(move |p| a11 * (1.0 + wobble * (3.0 * p[1]).sin())),
            a12,
            Coefficient::func(move |p| a22 * (1.0 + wobble * (2.0 * p[0]).cos())),
        )
        .with_drift(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    if rng.random_bool(0.5) {
        let c = rng.random_range(0.0..2.0);
        k = k.with_c(Coefficient::func(move |p| -c * (1.0 + p[0] * p[0])));
    }
    k
}

fn random_phi(rng: &mut ChaCha8Rng) -> Nonlinearity {
    let p = [0.5, 1.0, 1.5, 2.0, 3.0][rng.random_range(0..5)];
    let k = rng.random_range(0.2..3.0);
    let cut = if rng.random_bool(0.3) {
        rng.random_range(0.2..0.8)
    } else {
        f64::NEG_INFINITY
    };
    Nonlinearity::from_fn(format!("{k} max(t,0)^{p} [x > {cut}]"), move |x, t| {
        if x[0] > cut {
            k * t.max(0.0).powf(p)
        } else {
            0.0
        }
    })
    .with_differentiable(p >= 1.0)
}

fn random_problem(rng: &mut ChaCha8Rng) -> Result<Problem, String> {
    let grid = Arc::new(random_grid(rng));
    let coeffs = random_coefficients(rng);
    let mut op = assemble(grid.clone(), &coeffs).map_err(|e| e.to_string())?;
    if !op.m_matrix() {
        let diagonal = coeffs.with_diffusion(1.0, 0.0, 1.0);
        op = assemble(grid, &diagonal).map_err(|e| e.to_string())?;
    }
    let gop = GreenOperator::new(Arc::new(op)).map_err(|e| e.to_string())?;
    let phi = random_phi(rng);
    let scheme = if phi.differentiable() {
        Scheme::Newton
    } else {
        Scheme::Secant
    };
    let opts = SolveOptions {
        exec: Execution::Sequential,
        ..SolveOptions::default().with_scheme(scheme)
    };
    Ok(Problem { gop, phi, opts })
}

fn random_data(rng: &mut ChaCha8Rng, grid: &Grid, hi: f64) -> ScalarField {
    ScalarField::from_values(
        grid,
        (0..grid.node_count())
            .map(|_| rng.random_range(0.0..hi))
            .collect(),
    )
}

fn solve(p: &Problem, f: &ScalarField) -> Result<ScalarField, String> {
    let (u, rep) = solve_u(&p.gop, f, &p.phi, &p.opts).map_err(|e| e.to_string())?;
    if !rep.converged() {
        return Err(format!(
            "{} did not converge: {:?}",
            p.phi.label(),
            rep.status
        ));
    }
    Ok(u)
}

/// Supersolution `u` (harmonic extension or a solution with larger data)
/// against the solution `v`.
fn comparison_trial(rng: &mut ChaCha8Rng, tol: f64) -> Trial {
    let p = random_problem(rng)?;
    let grid = p.gop.grid().clone();
    let f = random_data(rng, &grid, 2.0);
    let v = solve(&p, &f)?;
    let u = if rng.random_bool(0.5) {
        p.gop.harmonic_extension(&f).map_err(|e| e.to_string())?
    } else {
        let bump = random_data(rng, &grid, 1.0);
        let g = ScalarField::from_values(
            &grid,
            f.values()
                .iter()
                .zip(bump.values())
                .map(|(a, b)| a + b)
                .collect(),
        );
        solve(&p, &g)?
    };
    let verdict = check_comparison(&p.gop, &u, &v, &p.phi, tol, Execution::Sequential)
        .map_err(|e| e.to_string())?;
    if !verdict.passed {
        return Err(format!("{verdict:?}"));
    }
    Ok(-verdict.worst_gap - verdict.kappa * tol)
}

fn monotone_trial(rng: &mut ChaCha8Rng, tol: f64) -> Trial {
    let p = random_problem(rng)?;
    let grid = p.gop.grid().clone();
    let f = random_data(rng, &grid, 2.0);
    let bump = random_data(rng, &grid, 1.0);
    let g = ScalarField::from_values(
        &grid,
        f.values()
            .iter()
            .zip(bump.values())
            .map(|(a, b)| a + b)
            .collect(),
    );
    let verdict =
        check_monotone_in_data(&p.gop, &f, &g, &p.phi, &p.opts).map_err(|e| e.to_string())?;
    Ok(verdict.max_excess - tol)
}

/// Even iterates decrease, odd iterates increase, and the solution lies
/// between every lower and every upper envelope.
fn sandwich_trial(rng: &mut ChaCha8Rng, tol: f64) -> Trial {
    let p = random_problem(rng)?;
    let f = random_data(rng, p.gop.grid(), 2.0);
    let it = sandwich_iterates(&p.gop, &f, &p.phi, 10, Execution::Sequential)
        .map_err(|e| e.to_string())?;
    let star = solve(&p, &f)?;
    let excess = |lo: &ScalarField, hi: &ScalarField| {
        lo.values()
            .iter()
            .zip(hi.values())
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut worst = f64::NEG_INFINITY;
    for k in 0..it.len() {
        if k + 2 < it.len() {
            worst = worst.max(if k % 2 == 0 {
                excess(&it[k + 2], &it[k])
            } else {
                excess(&it[k], &it[k + 2])
            });
        }
        worst = worst.max(if k % 2 == 0 {
            excess(&star, &it[k])
        } else {
            excess(&it[k], &star)
        });
    }
    Ok(worst - tol)
}

/// `G_D psi >= 0` and `H_D f >= 0` for nonnegative `psi`, `f`.
fn positivity_trial(rng: &mut ChaCha8Rng, tol: f64) -> Trial {
    let p = random_problem(rng)?;
    let grid = p.gop.grid().clone();
    let sparse = rng.random_range(0.0..1.0);
    let psi = ScalarField::from_values(
        &grid,
        (0..grid.node_count())
            .map(|_| {
                if rng.random_bool(sparse) {
                    0.0
                } else {
                    rng.random_range(0.0..5.0)
                }
            })
            .collect(),
    );
    let g = p.gop.green_potential(&psi).map_err(|e| e.to_string())?;
    let h = p
        .gop
        .harmonic_extension(&random_data(rng, &grid, 3.0))
        .map_err(|e| e.to_string())?;
    Ok(-g.min().min(h.min()) - tol)
}

fn identity_trial(rng: &mut ChaCha8Rng) -> Trial {
    let p = random_problem(rng)?;
    let f = random_data(rng, p.gop.grid(), 2.0);
    let (_, rep) = solve_u(&p.gop, &f, &p.phi, &p.opts).map_err(|e| e.to_string())?;
    if !rep.converged() {
        return Err(format!("{:?}", rep.status));
    }
    Ok(rep.final_identity_residual - p.opts.tol)
}

fn restriction_trial(rng: &mut ChaCha8Rng) -> Trial {
    let dim = rng.random_range(1..=2);
    let h = rng.random_range(0.05..0.3);
    let bbox: Vec<(f64, f64)> = (0..dim)
        .map(|_| {
            let half = rng.random_range(2..=6) as f64 * h;
            (-half, half)
        })
        .collect();
    let exh = build_exhaustion(&bbox, 2.0, 3, SpacingRule::Fixed(h)).map_err(|e| e.to_string())?;
    let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    let f = move |p: [f64; 2]| (a * p[0]).sin() + b * p[1] * p[0];
    let mut worst = f64::NEG_INFINITY;
    for pair in exh.stages().windows(2) {
        let fine = ScalarField::from_fn(&pair[1], f);
        let coarse = restrict(&fine, &pair[1], &pair[0]).map_err(|e| e.to_string())?;
        let direct = ScalarField::from_fn(&pair[0], f);
        let bitwise = coarse
            .values()
            .iter()
            .zip(direct.values())
            .all(|(x, y)| x.to_bits() == y.to_bits());
        worst = worst.max(if bitwise {
            -1.0
        } else {
            coarse.max_abs_diff(&direct)
        });
    }
    Ok(worst)
}
