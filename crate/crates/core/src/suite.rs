//! Canned checks for the worked trivariate cubic, shared by the CLI, the
//! acceptance target and the Python bindings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use crate::construct::lift_to_four;
use crate::error::Result;
use crate::fixtures::{self, XVARS};
use crate::hyper;
use crate::pencil::{coefficient_residual, theorem1_invariants, verify_representation};
use crate::{Config, Report};

pub const IDENTITY_TOL: f64 = 1e-10;
pub const EPS_VALUES: [f64; 3] = [1.0, 0.1, 0.01];
pub const NONCONVEX_SEED_POINT: [f64; 3] = [1.0, 0.0, -1.0];
const E2: [f64; 3] = [0.0, 0.0, 1.0];

/// Hyperbolicity of `det(x0 A0 + x1 A1 + x2 (A2 + eps I))` in direction
/// `e2` for each `eps`.
pub fn eps_sweep(eps: &[f64], config: &Config) -> Result<Report> {
    let mut report = Report::new("det(x0*A0 + x1*A1 + x2*(A2 + eps*I))", config);
    let mut rows = Vec::new();
    for &e in eps {
        let p = fixtures::cubic_eps_pencil(e).to_poly_named(&XVARS)?;
        let v = hyper::is_hyperbolic(&p, &E2, config.n_samples, config.seed, config.real_tol)?;
        rows.push(json!({"eps": e, "poly": p.to_string(), "worst_imag": v.worst_imag, "p_at_e": v.p_at_e}));
        report.check(&format!("hyperbolic_eps_{e}"), v.holds, &v);
    }
    report.stage("eps_sweep", json!(rows));
    Ok(report)
}

/// Random unit directions in which the cubic is tested for hyperbolicity;
/// every one of them is expected to fail.
pub fn random_directions(count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd1e5);
    (0..count)
        .map(|_| {
            let g: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = g.iter().map(|v: &f64| v * v).sum::<f64>().sqrt().max(1e-12);
            g.into_iter().map(|v| v / n).collect()
        })
        .collect()
}

/// Identity, structural invariants, lift, non-convexity witness,
/// non-hyperbolicity in random directions and the `eps` sweep.
pub fn cubic_suite(config: &Config) -> Result<Report> {
    let p = fixtures::cubic_poly();
    let pencil = fixtures::cubic_pencil();
    let mut report = Report::new(p.to_string(), config);
    report.pencil = Some(pencil.to_json());

    let identity = verify_representation(&p, &pencil, IDENTITY_TOL, config);
    report.absorb("identity_", &identity);

    let inv = theorem1_invariants(&p, &pencil, config)?;
    report.absorb("theorem1_", &inv);

    let (p4, lift) = lift_to_four(&pencil, config)?;
    report.absorb("lift_", &lift);
    let (res, at) = coefficient_residual(&fixtures::cubic_lift(), &p4);
    report.check(
        "lift_matches_display",
        res <= IDENTITY_TOL,
        json!({"residual": res, "worst_multidegree": at}),
    );

    let semi = hyper::is_semi_hyperbolic(&p, &E2, config.n_samples, config.seed, config.real_tol)?;
    report.check("semi_hyperbolic_e2", semi.holds, &semi);

    let cert = hyper::nonconvexity_certificate(&p, &NONCONVEX_SEED_POINT, config.nonconvex_budget, config.seed)?;
    report.check("nonconvexity_certificate", cert.is_some(), &cert);

    let dirs = random_directions(config.n_dirs, config.seed);
    let mut worst = Vec::new();
    let mut all_fail = true;
    for (j, e) in dirs.iter().enumerate() {
        let v = hyper::is_hyperbolic(&p, e, config.n_samples, config.seed.wrapping_add(j as u64), config.real_tol)?;
        all_fail &= !v.holds;
        worst.push(v.worst_imag);
    }
    report.check(
        "not_hyperbolic_random_dirs",
        all_fail,
        json!({"directions": dirs.len(), "worst_imag": worst}),
    );

    let sweep = eps_sweep(&EPS_VALUES, config)?;
    report.absorb("", &sweep);
    Ok(report)
}
