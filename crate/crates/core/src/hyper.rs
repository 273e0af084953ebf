//! Sampling tests for (semi-)hyperbolicity and a path-based search for
//! non-convex components of `{P != 0}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::uniroots;
use crate::C64;

/// Relative floor on `|P(e)|` for hyperbolicity.
pub const P_AT_E_REL: f64 = 1e-10;
const HOMOGENEITY_TOL: f64 = 1e-10;
const CUBE_HALF_WIDTH: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    /// `[re, im]` of the root with the largest normalized imaginary part.
    pub root: Option<[f64; 2]>,
    pub direction: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub samples_checked: usize,
    pub worst_imag: f64,
    pub witness: Option<Witness>,
    pub seed: u64,
    /// `|P(e)| / ||P||` when hyperbolicity was tested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_at_e: Option<f64>,
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn sphere_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let g = gaussian_vec(rng, n);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

fn cube_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-CUBE_HALF_WIDTH..CUBE_HALF_WIDTH))
        .collect()
}

fn to_complex(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&v| C64::new(v, 0.0)).collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Checks `P(s x) = s^d P(x)` at a few random real points.
pub fn check_homogeneous(p: &Polynomial, seed: u64) -> Result<()> {
    let d = p.total_degree() as i32;
    let mut rng = rng_for(seed ^ 0x5eed_0001);
    let n = p.nvars();
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let x = cube_point(&mut rng, n);
        let s: f64 = rng.random_range(0.5..2.0);
        let xs: Vec<f64> = x.iter().map(|v| v * s).collect();
        let lhs = p.eval_real(&xs)?;
        let rhs = p.eval_real(&x)? * s.powi(d);
        let scale = p.eval_abs_scale(&to_complex(&xs))?.max(f64::MIN_POSITIVE);
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    if worst > HOMOGENEITY_TOL {
        return Err(Error::NotHomogeneous(worst));
    }
    Ok(())
}

/// Samples `x` and checks that `t -> P(x - t e)` has only real roots.
/// A passing verdict means no counterexample was found, not a proof.
pub fn is_semi_hyperbolic(
    p: &Polynomial,
    e: &[f64],
    n_samples: usize,
    seed: u64,
    real_tol: f64,
) -> Result<Verdict> {
    if e.len() != p.nvars() {
        return Err(Error::DimensionMismatch {
            expected: p.nvars(),
            got: e.len(),
        });
    }
    check_homogeneous(p, seed)?;
    let n = p.nvars();
    let dir = to_complex(e);
    let mut rng = rng_for(seed);
    let half = n_samples / 2;
    let mut worst = 0.0f64;
    let mut witness: Option<Witness> = None;
    for i in 0..n_samples {
        let x = if i < half {
            sphere_point(&mut rng, n)
        } else {
            cube_point(&mut rng, n)
        };
        let coeffs = p.line_coeffs(&to_complex(&x), &dir)?;
        let (imag, root) = match uniroots::roots_of_coeffs(&coeffs, real_tol) {
            Ok(rs) => uniroots::max_normalized_imag(&rs),
            // identically zero along the line: no roots at all
            Err(Error::ZeroPolynomial) => (0.0, None),
            Err(err) => return Err(err),
        };
        if witness.is_none() || imag > worst {
            worst = imag;
            witness = Some(Witness {
                x,
                root: root.map(|r| [r.re, r.im]),
                direction: e.to_vec(),
            });
        }
    }
    Ok(Verdict {
        holds: worst <= real_tol,
        samples_checked: n_samples,
        worst_imag: worst,
        witness,
        seed,
        p_at_e: None,
    })
}

/// [`is_semi_hyperbolic`] together with `|P(e)| > P_AT_E_REL * ||P||`.
pub fn is_hyperbolic(
    p: &Polynomial,
    e: &[f64],
    n_samples: usize,
    seed: u64,
    real_tol: f64,
) -> Result<Verdict> {
    let mut v = is_semi_hyperbolic(p, e, n_samples, seed, real_tol)?;
    let at_e = p.eval_real(e)?.norm() / p.coeff_norm().max(f64::MIN_POSITIVE);
    v.p_at_e = Some(at_e);
    v.holds = v.holds && at_e > P_AT_E_REL;
    Ok(v)
}

/// Runs [`is_hyperbolic`] for `n_dirs` random positive combinations of
/// `generators`. The returned verdict holds iff every direction passed; its
/// witness is the worst sample over all directions.
pub fn is_cone_hyperbolic(
    p: &Polynomial,
    generators: &[Vec<f64>],
    n_dirs: usize,
    n_samples: usize,
    seed: u64,
    real_tol: f64,
) -> Result<Verdict> {
    if generators.is_empty() {
        return Err(Error::Precondition("cone needs at least one generator".into()));
    }
    for g in generators {
        if g.len() != p.nvars() {
            return Err(Error::DimensionMismatch {
                expected: p.nvars(),
                got: g.len(),
            });
        }
        if norm(g) == 0.0 {
            return Err(Error::Precondition("zero cone generator".into()));
        }
    }
    let mut rng = rng_for(seed ^ 0xc0de);
    let mut holds = true;
    let mut worst: Option<Verdict> = None;
    let mut min_at_e = f64::INFINITY;
    let mut checked = 0;
    for j in 0..n_dirs {
        let mut e = vec![0.0; p.nvars()];
        for g in generators {
            let w: f64 = rng.random_range(0.05..1.0);
            for (ei, gi) in e.iter_mut().zip(g) {
                *ei += w * gi;
            }
        }
        let v = is_hyperbolic(p, &e, n_samples, seed.wrapping_add(j as u64), real_tol)?;
        checked += v.samples_checked;
        holds &= v.holds;
        min_at_e = min_at_e.min(v.p_at_e.unwrap_or(0.0));
        let replace = match &worst {
            None => true,
            Some(w) => v.worst_imag > w.worst_imag || (w.holds && !v.holds && v.worst_imag >= w.worst_imag),
        };
        if replace {
            worst = Some(v);
        }
    }
    let w = worst.unwrap_or(Verdict {
        holds: true,
        samples_checked: 0,
        worst_imag: 0.0,
        witness: None,
        seed,
        p_at_e: None,
    });
    Ok(Verdict {
        holds,
        samples_checked: checked,
        worst_imag: w.worst_imag,
        witness: w.witness,
        seed,
        p_at_e: if n_dirs > 0 { Some(min_at_e) } else { None },
    })
}

/// Two same-sign points, both path-connected to the seed point inside
/// `{sign P = sign P(seed)}`, whose midpoint leaves that set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonconvexityCertificate {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub midpoint: Vec<f64>,
    pub value_a: f64,
    pub value_b: f64,
    pub value_mid: f64,
    pub candidates_tried: usize,
}

const PATH_SEGMENTS: usize = 64;
const POINTS_PER_SEGMENT: usize = 16;
const MAX_STEP_ANGLE: f64 = 0.05;
const MAX_REFINE_DEPTH: u32 = 24;
const ORIGIN_FRAC: f64 = 1e-3;
const POOL_CAP: usize = 400;

struct SignOracle<'a> {
    p: &'a Polynomial,
    sign: f64,
    min_norm: f64,
}

impl SignOracle<'_> {
    /// Real part of `P(x)`, or `None` when `x` is numerically on the zero set.
    fn value(&self, x: &[f64]) -> Option<f64> {
        let v = self.p.eval_real(x).ok()?.re;
        let scale = self.p.eval_abs_scale(&to_complex(x)).ok()?;
        if v.abs() <= 1e-12 * scale {
            None
        } else {
            Some(v)
        }
    }

    fn same_sign(&self, x: &[f64]) -> bool {
        norm(x) >= self.min_norm && self.value(x).is_some_and(|v| v * self.sign > 0.0)
    }

    /// Sign constancy between `x` and `y`, bisecting until consecutive
    /// directions differ by less than [`MAX_STEP_ANGLE`].
    fn segment_ok(&self, x: &[f64], y: &[f64], depth: u32) -> bool {
        let nx = norm(x);
        let ny = norm(y);
        let cos = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / (nx * ny);
        if cos.clamp(-1.0, 1.0).acos() <= MAX_STEP_ANGLE {
            return true;
        }
        if depth >= MAX_REFINE_DEPTH {
            return false;
        }
        let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
        self.same_sign(&mid) && self.segment_ok(x, &mid, depth + 1) && self.segment_ok(&mid, y, depth + 1)
    }

    /// Resamples the polyline through `nodes` at `PATH_SEGMENTS` equal
    /// pieces with `POINTS_PER_SEGMENT` points each.
    fn path_ok(&self, nodes: &[&[f64]]) -> bool {
        let lens: Vec<f64> = nodes
            .windows(2)
            .map(|w| norm(&w[0].iter().zip(w[1]).map(|(a, b)| b - a).collect::<Vec<_>>()))
            .collect();
        let total: f64 = lens.iter().sum();
        let count = PATH_SEGMENTS * POINTS_PER_SEGMENT;
        let at = |s: f64| -> Vec<f64> {
            let mut rem = s * total;
            for (i, &l) in lens.iter().enumerate() {
                if rem <= l || i + 1 == lens.len() {
                    let f = if l > 0.0 { (rem / l).clamp(0.0, 1.0) } else { 0.0 };
                    return nodes[i]
                        .iter()
                        .zip(nodes[i + 1])
                        .map(|(a, b)| a + f * (b - a))
                        .collect();
                }
                rem -= l;
            }
            nodes[nodes.len() - 1].to_vec()
        };
        let mut prev = nodes[0].to_vec();
        if !self.same_sign(&prev) {
            return false;
        }
        for i in 1..=count {
            let cur = at(i as f64 / count as f64);
            if !self.same_sign(&cur) || !self.segment_ok(&prev, &cur, 0) {
                return false;
            }
            prev = cur;
        }
        true
    }
}

/// Searches for a non-convexity witness of the component of `{P != 0}`
/// containing `seed_point`. Returns `None` when the budget runs out.
pub fn nonconvexity_certificate(
    p: &Polynomial,
    seed_point: &[f64],
    budget: usize,
    seed: u64,
) -> Result<Option<NonconvexityCertificate>> {
    let n = p.nvars();
    if seed_point.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: seed_point.len(),
        });
    }
    let scale = norm(seed_point);
    let probe = SignOracle {
        p,
        sign: 1.0,
        min_norm: 0.0,
    };
    let v0 = match probe.value(seed_point) {
        Some(v) if scale > 0.0 => v,
        _ => return Err(Error::OnZeroSet),
    };
    let oracle = SignOracle {
        p,
        sign: v0.signum(),
        min_norm: ORIGIN_FRAC * scale,
    };
    let mut rng = rng_for(seed);
    let mut pool: Vec<Vec<f64>> = vec![seed_point.to_vec()];
    for tried in 0..budget {
        // single-coordinate sign flips of the seed come first
        let cand: Vec<f64> = if tried < n {
            let mut c = seed_point.to_vec();
            c[tried] = -c[tried];
            c
        } else if rng.random_bool(0.5) {
            let base = &pool[rng.random_range(0..pool.len())];
            base.iter()
                .map(|&v| if rng.random_bool(0.5) { -v } else { v })
                .collect()
        } else {
            cube_point(&mut rng, n)
        };
        if !oracle.same_sign(&cand) {
            continue;
        }
        let anchor = pool[rng.random_range(0..pool.len())].clone();
        let mut connected = oracle.path_ok(&[&anchor, &cand]);
        for _ in 0..4 {
            if connected {
                break;
            }
            let w = cube_point(&mut rng, n);
            connected = oracle.path_ok(&[&anchor, &w, &cand]);
        }
        if !connected {
            continue;
        }
        for b in &pool {
            let mid: Vec<f64> = cand.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
            if norm(&mid) < oracle.min_norm {
                continue;
            }
            let vm = oracle.value(&mid);
            if vm.is_none_or(|v| v * oracle.sign <= 0.0) {
                return Ok(Some(NonconvexityCertificate {
                    value_a: p.eval_real(&cand)?.re,
                    value_b: p.eval_real(b)?.re,
                    value_mid: p.eval_real(&mid)?.re,
                    a: cand,
                    b: b.clone(),
                    midpoint: mid,
                    candidates_tried: tried + 1,
                }));
            }
        }
        if pool.len() < POOL_CAP {
            pool.push(cand);
        }
    }
    Ok(None)
}
