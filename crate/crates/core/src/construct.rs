//! Constructive pipelines: trivariate representations from a bidisk
//! determinantal formula, the cone-hyperbolic corollary, four-variable
//! representations up to a cofactor, and the helpers they share.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::cayley;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::hyper;
use crate::linalg::{self, CMat};
use crate::pencil::{self, Pencil};
use crate::poly::{interpolate_box, Polynomial};
use crate::report::Report;
use crate::sos::{self, SosCertificate, SosOptions, TheoremBData};
use crate::uniroots;
use crate::C64;

/// Candidates `t_j = 1 + ln(1 + j)` tried for a nonsingular `t A1 + A2`.
pub const Q_CANDIDATES: usize = 100;
const Q_DET_REL: f64 = 1e-8;
const A_SUM_TOL: f64 = 1e-10;
const VARIETY_KEEP: f64 = 1e-8;
const VARIETY_MAX_MODULUS: f64 = 10.0;
const DIVISION_SPOT_CHECKS: usize = 50;
const COFACTOR_TRIM: f64 = 1e-10;
const UNIT_CLUSTER_MAX: f64 = 1e-3;
const UNIT_CLUSTER_RATIO: f64 = 1e2;
const POLISH_ITERS: usize = 20;
const POLISH_TARGET: f64 = 1e-14;
const POLISH_STEP: f64 = 1e-6;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Output of a pipeline.
#[derive(Clone, Debug)]
pub struct Construction {
    pub pencil: Pencil,
    pub cofactor: Option<Polynomial>,
    pub theorem_b: Option<TheoremBData>,
    pub report: Report,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VarietySample {
    pub points: Vec<Vec<C64>>,
    /// `|f(point)|`.
    pub residuals: Vec<f64>,
}

/// Points on the zero set of `f`, drawn by fixing all but one variable at
/// random complex values and solving the univariate slice.
pub fn variety_sample(f: &Polynomial, count: usize, seed: u64) -> Result<VarietySample> {
    let mut out = VarietySample::default();
    if count == 0 {
        return Ok(out);
    }
    let nv = f.nvars();
    let solvable: Vec<usize> = (0..nv).filter(|&j| f.degree_in(j) > 0).collect();
    if solvable.is_empty() {
        return Err(Error::Precondition("variety of a constant polynomial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = 50 * count + 100;
    for attempt in 0..max_attempts {
        if out.points.len() >= count {
            break;
        }
        let s = solvable[attempt % solvable.len()];
        let mut z: Vec<C64> = (0..nv)
            .map(|_| {
                let r: f64 = rng.random_range(0.3..1.5);
                let th: f64 = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                C64::from_polar(r, th)
            })
            .collect();
        let mut coeffs = vec![C64::new(0.0, 0.0); f.degree_in(s) as usize + 1];
        for (e, c) in f.terms() {
            let mut v = *c;
            for (j, &k) in e.iter().enumerate() {
                if j != s {
                    v *= z[j].powu(k);
                }
            }
            coeffs[e[s] as usize] += v;
        }
        let Ok(rs) = uniroots::roots_of_coeffs(&coeffs, uniroots::DEFAULT_BOUNDARY_TOL) else {
            continue;
        };
        // one root per slice keeps the sample spread over slices
        let pick = rs
            .roots
            .iter()
            .filter(|r| r.norm() <= VARIETY_MAX_MODULUS)
            .nth(attempt % rs.roots.len().max(1))
            .or_else(|| rs.roots.iter().find(|r| r.norm() <= VARIETY_MAX_MODULUS));
        let Some(&root) = pick else { continue };
        z[s] = root;
        let val = f.eval(&z)?.norm();
        if val <= VARIETY_KEEP * f.eval_abs_scale(&z)?.max(f64::MIN_POSITIVE) {
            out.points.push(z);
            out.residuals.push(val);
        }
    }
    if out.points.len() < count {
        return Err(Error::Construction(format!(
            "variety sampling found {} of {count} points",
            out.points.len()
        )));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Division {
    pub divides: bool,
    pub quotient: Polynomial,
    /// `||f g - big|| / ||big||` over coefficients.
    pub residual: f64,
    /// Largest `|big| / scale` at fresh points of the zero set of `f`.
    pub spot_residual: f64,
}

fn box_exponents(cap: &[u32]) -> Vec<Vec<u32>> {
    sos::box_monomials(cap)
}

/// Least-squares quotient `g` with `f g ~ big` on the box of
/// `deg big - deg f`, plus spot checks of `big` on the zero set of `f`.
pub fn divides_check(f: &Polynomial, big: &Polynomial, tol: f64, seed: u64) -> Result<Division> {
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if f.nvars() != big.nvars() {
        return Err(Error::DimensionMismatch {
            expected: f.nvars(),
            got: big.nvars(),
        });
    }
    let zero = Polynomial::zero(f.var_names());
    if big.is_zero() {
        return Ok(Division {
            divides: true,
            quotient: zero,
            residual: 0.0,
            spot_residual: 0.0,
        });
    }
    let fd = f.degrees();
    let bd = big.degrees();
    if fd.iter().zip(&bd).any(|(a, b)| a > b) {
        return Ok(Division {
            divides: false,
            quotient: zero,
            residual: 1.0,
            spot_residual: f64::INFINITY,
        });
    }
    let gcap: Vec<u32> = bd.iter().zip(&fd).map(|(b, a)| b - a).collect();
    let gmons = box_exponents(&gcap);
    let rows = box_exponents(&bd);
    let row_index = |e: &[u32]| -> usize { e.iter().zip(&bd).fold(0, |acc, (&k, &c)| acc * (c as usize + 1) + k as usize) };
    let mut a = CMat::zeros(rows.len(), gmons.len());
    for (col, g) in gmons.iter().enumerate() {
        for (e, c) in f.terms() {
            let s: Vec<u32> = e.iter().zip(g).map(|(x, y)| x + y).collect();
            a[(row_index(&s), col)] += c;
        }
    }
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|e| big.coeff(e)));
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-13 * svd.singular_values.max())
        .map_err(|e| Error::Construction(format!("least squares failed: {e}")))?;
    let residual = (&a * &x - &b).norm() / b.norm();
    let quotient = Polynomial::from_terms(f.var_names(), gmons.iter().cloned().zip(x.iter().copied()))?;
    let samples = variety_sample(f, DIVISION_SPOT_CHECKS, seed ^ 0xd1d)?;
    let mut spot = 0.0f64;
    for z in &samples.points {
        let v = big.eval(z)?.norm() / big.eval_abs_scale(z)?.max(f64::MIN_POSITIVE);
        spot = spot.max(v);
    }
    Ok(Division {
        divides: residual <= tol && spot <= tol,
        quotient,
        residual,
        spot_residual: spot,
    })
}

/// First `t` on the grid `1 + ln(1 + j)` with `t A1 + A2` nonsingular, where
/// `A1 = B+ - B-`.
pub fn q_nonsingular_direction(bp: &CMat, bm: &CMat, a2: &CMat) -> Result<f64> {
    let a1 = bp - bm;
    let k = a1.nrows();
    for j in 0..Q_CANDIDATES {
        let t = 1.0 + (1.0 + j as f64).ln();
        if k == 0 {
            return Ok(t);
        }
        let q = &a1 * C64::new(t, 0.0) + a2;
        let norm = linalg::hermitian_op_norm(&q)?;
        if norm == 0.0 {
            continue;
        }
        if linalg::det(&q).norm() > Q_DET_REL * norm.powi(k as i32) {
            return Ok(t);
        }
    }
    Err(Error::NoNonsingularDirection(Q_CANDIDATES))
}

/// Coefficient ratio `p / q` at the largest coefficient of `p`.
fn match_constant(p: &Polynomial, q: &Polynomial) -> Result<C64> {
    let (e, c) = p
        .terms()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .ok_or(Error::ZeroPolynomial)?;
    let d = q.coeff(e);
    if d.norm() <= 1e-14 * q.max_coeff() || d.norm() == 0.0 {
        return Err(Error::Construction(format!(
            "determinant has no term matching the leading term {e:?}"
        )));
    }
    Ok(c / d)
}

/// `det((z1 P- + P+ + D2) - U (P- + z1 P+ + z2 D2))` times `data.c` as a
/// polynomial in the names of `vars`.
pub fn theorem_b_poly<S: AsRef<str>>(data: &TheoremBData, vars: &[S]) -> Result<Polynomial> {
    let degs = [(data.dims.0 + data.dims.1) as u32, data.dims.2 as u32];
    interpolate_box(vars, &degs, |z| Ok(data.eval(z)))
}

fn require_vars(p: &Polynomial, n: usize) -> Result<()> {
    if p.nvars() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.nvars(),
        });
    }
    Ok(())
}

/// Bidisk data for the disk form `f` of bidegree `(n, m)`: a face
/// certificate for the derivative split in `z2`, then the lurking isometry
/// on samples of the zero set of `f`.
fn auto_theorem_b(f: &Polynomial, n: u32, m: u32, config: &Config, report: &mut Report) -> Result<TheoremBData> {
    if m == 0 {
        return Err(Error::FirstVariableFactor("degree zero in the second variable".into()));
    }
    let p2 = cayley::tilde_partial(f, 1, &[n, m])?;
    let n2 = sos::disk_zero_count(&p2)?;
    if n2 > n as usize {
        return Err(Error::InertiaMismatch {
            n1: n as usize,
            n2,
            roots: n2,
        });
    }
    let n1 = n as usize - n2;
    let opts = SosOptions::from_config(config);
    let cert = sos::find_sos_face(&p2, (n, m), (n1, n2), &opts)?;
    let grid_residual = sos::sos_residual(&cert, &p2, config.grid_size)?;
    report.stage(
        "face_certificate",
        json!({
            "input": p2.to_string(),
            "inertia": [n1, n2],
            "residual": cert.residual,
            "grid_residual": grid_residual,
            "projection_iterations": cert.iterations,
        }),
    );
    let samples = variety_sample(f, config.variety_samples, config.seed)?;
    let lu = sos::unitary_from_certificate(&cert, &samples.points, config.pair_tol)?;
    report.stage(
        "lurking_isometry",
        json!({
            "samples": samples.points.len(),
            "dim": lu.u.nrows(),
            "span_rank": lu.isometry.span_rank,
            "gram_mismatch": lu.isometry.gram_mismatch,
            "pair_error": lu.isometry.pair_error,
        }),
    );
    if lu.u.nrows() != (n + m) as usize {
        return Err(Error::Construction(format!(
            "unitary has size {} instead of {}",
            lu.u.nrows(),
            n + m
        )));
    }
    let mut data = TheoremBData {
        u: lu.u,
        dims: (n1, n2, m as usize),
        c: one(),
    };
    let det_poly = theorem_b_poly(&data, f.var_names())?;
    data.c = match_constant(f, &det_poly)?;
    Ok(data)
}

/// Split pencil `(diag a, W (P+ - P-) W*, W D2 W*)` with `W W* = I`, which
/// keeps `B+ = W P+ W*`, `B- = W P- W*`, `A2 = W D2 W*` PSD and summing to
/// `I`.
struct SplitParams {
    w: CMat,
    a: Vec<f64>,
    c: f64,
}

impl SplitParams {
    fn pencil(&self, data: &TheoremBData) -> Result<Pencil> {
        let (pp, pm, d2) = data.projections();
        let wh = self.w.adjoint();
        let herm = |m: CMat| (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let bp = herm(&self.w * &pp * &wh);
        let bm = herm(&self.w * &pm * &wh);
        let a2 = herm(&self.w * &d2 * &wh);
        Pencil::new(vec![linalg::diag_real(&self.a), &bp - &bm, a2], C64::new(self.c, 0.0))?.with_split(bp, bm)
    }

    fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.w.iter().flat_map(|z| [z.re, z.im]).collect();
        v.extend(&self.a);
        v.push(self.c);
        v
    }

    fn from_vec(&self, v: &[f64]) -> Result<SplitParams> {
        let nw = self.w.len();
        let mut w = self.w.clone();
        for (i, z) in w.iter_mut().enumerate() {
            *z = C64::new(v[2 * i], v[2 * i + 1]);
        }
        // polar retraction back to W W* = I
        let g = &w * w.adjoint();
        let (vals, q) = linalg::hermitian_eig(&((&g + g.adjoint()) * C64::new(0.5, 0.0)))?;
        if vals.iter().any(|&x| x <= 0.0) {
            return Err(Error::Construction("polish step lost the row rank of W".into()));
        }
        let inv: Vec<f64> = vals.iter().map(|x| 1.0 / x.sqrt()).collect();
        let w = &q * linalg::diag_real(&inv) * q.adjoint() * w;
        let k = self.a.len();
        Ok(SplitParams {
            w,
            a: v[2 * nw..2 * nw + k].to_vec(),
            c: v[2 * nw + k],
        })
    }
}

fn coefficient_vector(p: &Polynomial, monomials: &[Vec<u32>]) -> DVector<f64> {
    DVector::from_iterator(
        2 * monomials.len(),
        monomials.iter().flat_map(|e| {
            let c = p.coeff(e);
            [c.re, c.im]
        }),
    )
}

/// Gauss–Newton on [`SplitParams`] against the coefficients of `p`, with a
/// central-difference Jacobian. Returns the polished parameters and the
/// final relative residual.
fn polish_split(p: &Polynomial, data: &TheoremBData, start: SplitParams) -> Result<(SplitParams, f64)> {
    let k = start.a.len() as u32;
    let monomials: Vec<Vec<u32>> = sos::box_monomials(&[k, k, k])
        .into_iter()
        .filter(|e| e.iter().sum::<u32>() == k)
        .collect();
    let target = coefficient_vector(p, &monomials);
    let scale = target.amax().max(f64::MIN_POSITIVE);
    let resid = |sp: &SplitParams| -> Result<DVector<f64>> {
        let q = sp.pencil(data)?.to_poly_named(p.var_names())?;
        Ok(coefficient_vector(&q, &monomials) - &target)
    };
    let mut cur = start;
    let mut r = resid(&cur)?;
    for _ in 0..POLISH_ITERS {
        if r.amax() <= POLISH_TARGET * scale {
            break;
        }
        let x = cur.to_vec();
        let mut jac = nalgebra::DMatrix::<f64>::zeros(r.len(), x.len());
        for j in 0..x.len() {
            let h = POLISH_STEP * (1.0 + x[j].abs());
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let col = (resid(&cur.from_vec(&xp)?)? - resid(&cur.from_vec(&xm)?)?) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let step = jac
            .svd(true, true)
            .solve(&(-&r), 1e-12)
            .map_err(|e| Error::Construction(format!("polish solve failed: {e}")))?;
        let mut accepted = false;
        let mut t = 1.0;
        for _ in 0..8 {
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            if let Ok(cand) = cur.from_vec(&xn) {
                let rn = resid(&cand)?;
                if rn.amax() < r.amax() {
                    cur = cand;
                    r = rn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let rel = r.amax() / scale;
    Ok((cur, rel))
}

/// Unit-eigenvalue split of the bidisk unitary. The threshold split is
/// tried first; when it is ambiguous or gives a size other than `d`, the
/// `size - d` eigenvalues nearest 1 are taken as the unit block, provided
/// they are clearly separated from the rest.
fn theorem1_spectral(data: &TheoremBData, d: usize, eig_sep: f64) -> Result<(linalg::SpectralData, &'static str)> {
    let first = linalg::unitary_spectral(&data.u, eig_sep);
    if let Ok(s) = &first {
        if s.k == d {
            return Ok((first?, "threshold"));
        }
    }
    let Some(unit_count) = data.size().checked_sub(d) else {
        return first.and_then(|s| {
            Err(Error::SizeMismatch {
                k: s.k,
                d,
                evidence: format!("unitary of size {} is smaller than the degree", data.size()),
            })
        });
    };
    match linalg::unitary_spectral_with_unit_count(&data.u, unit_count, UNIT_CLUSTER_MAX, UNIT_CLUSTER_RATIO) {
        Ok(s) => Ok((s, "unit_count")),
        Err(e) => match first {
            Ok(s) => Err(Error::SizeMismatch {
                k: s.k,
                d,
                evidence: format!("no separated unit cluster of size {unit_count}: {e}"),
            }),
            Err(orig) => Err(orig),
        },
    }
}

/// Representation `P = C det(x0 A0 + x1 A1 + x2 A2)` with the split
/// `A1 = B+ - B-` and `B+ + B- + A2 = I`. `thm_b = None` finds the bidisk
/// data automatically.
pub fn theorem1_construct(p: &Polynomial, thm_b: Option<&TheoremBData>, config: &Config) -> Result<Construction> {
    config.validate()?;
    require_vars(p, 3)?;
    hyper::check_homogeneous(p, config.seed)?;
    let mut report = Report::new(p.to_string(), config);
    let d = p.total_degree();
    let n = p.degree_in(1);
    let m = p.degree_in(2);
    let verdict = hyper::is_semi_hyperbolic(p, &[0.0, 0.0, 1.0], config.n_samples, config.seed, config.real_tol)?;
    report.stage("semi_hyperbolic", serde_json::to_value(&verdict)?);
    if !verdict.holds {
        return Err(Error::Precondition(format!(
            "not semi-hyperbolic in direction e2 (worst imaginary part {:e})",
            verdict.worst_imag
        )));
    }
    let q = p.restrict(0, one())?;
    if q.degree_in(0) != n || q.degree_in(1) != m {
        return Err(Error::Construction(format!(
            "dehomogenizing lowered the degrees from ({n}, {m}) to ({}, {})",
            q.degree_in(0),
            q.degree_in(1)
        )));
    }
    let f = cayley::disk_from_halfplane(&q, &[n, m])?.p_disk;
    cayley::check_first_variable_factor(&f)?;
    report.stage("disk_form", json!({"f": f.to_string(), "degs": [n, m]}));

    let data = match thm_b {
        Some(b) => b.clone(),
        None => auto_theorem_b(&f, n, m, config, &mut report)?,
    };
    let formula = theorem_b_poly(&data, f.var_names())?;
    let (formula_res, _) = pencil::coefficient_residual(&f, &formula);
    report.stage(
        "theorem_b",
        json!({"dims": [data.dims.0, data.dims.1, data.dims.2], "c": [data.c.re, data.c.im], "formula_residual": formula_res}),
    );
    report.check("theorem_b_formula", formula_res <= config.rep_tol, formula_res);
    if formula_res > config.rep_tol {
        return Err(Error::Construction(format!(
            "bidisk data does not reproduce the disk form (residual {formula_res:e})"
        )));
    }

    let (spec, unit_method) = theorem1_spectral(&data, d as usize, config.eig_sep)?;
    let k = spec.k;
    let a = linalg::cayley_diagonal(&spec.u, config.eig_sep)?;
    let (pp, pm, d2) = data.projections();
    let v = &spec.v;
    let vh = v.adjoint();
    let bp = linalg::compress(&(&vh * &pp * v), k);
    let bm = linalg::compress(&(&vh * &pm * v), k);
    let a2 = linalg::compress(&(&vh * &d2 * v), k);
    let herm = |m: CMat| (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let (bp, bm, a2) = (herm(bp), herm(bm), herm(a2));
    report.stage(
        "spectral",
        json!({
            "k": k,
            "total_dim": spec.total_dim,
            "min_gap": if spec.min_gap.is_finite() { json!(spec.min_gap) } else { json!(null) },
            "unit_spread": spec.unit_spread,
            "unit_method": unit_method,
            "residual": spec.residual,
            "a": a,
        }),
    );
    let t0 = q_nonsingular_direction(&bp, &bm, &a2)?;
    report.stage("nonsingular_direction", json!({"t0": t0, "k": k, "d": d}));
    if k != d as usize {
        return Err(Error::SizeMismatch {
            k,
            d: d as usize,
            evidence: format!("t0 = {t0}, Q(t0) nonsingular so the pencil has degree {k}"),
        });
    }
    let a0 = linalg::diag_real(&a);
    let a1 = &bp - &bm;
    let unscaled = Pencil::new(vec![a0, a1, a2], one())?;
    let det_poly = unscaled.to_poly_named(p.var_names())?;
    let c = match_constant(p, &det_poly)?;
    let start = SplitParams {
        w: v.columns(0, k).adjoint(),
        a,
        c: c.re,
    };
    let before = pencil::coefficient_residual(p, &det_poly.scale(c)).0;
    let (params, after) = polish_split(p, &data, start)?;
    report.stage("polish", json!({"before": before, "after": after, "imag_C_dropped": c.im}));
    let pencil = params.pencil(&data)?;
    let c = pencil.c;
    report.stage("constant", json!({"C": [c.re, c.im]}));
    let inv = pencil::theorem1_invariants(p, &pencil, config)?;
    report.absorb("theorem1", &inv);
    let rep = pencil::verify_representation(p, &pencil, config.rep_tol, config);
    report.absorb("verify", &rep);
    report.pencil = Some(pencil.to_json());
    Ok(Construction {
        pencil,
        cofactor: None,
        theorem_b: Some(data),
        report,
    })
}

/// Default cone for the corollary: generated by `e1` and `e2`.
pub fn corollary_cone() -> Vec<Vec<f64>> {
    vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
}

/// Representation with `A1, A2` PSD and `A1 + A2 = I` for `P` hyperbolic on
/// the cone spanned by `cone_gens`.
pub fn corollary_construct(p: &Polynomial, cone_gens: &[Vec<f64>], config: &Config) -> Result<Construction> {
    config.validate()?;
    require_vars(p, 3)?;
    let verdict = hyper::is_cone_hyperbolic(
        p,
        cone_gens,
        config.n_dirs,
        config.n_samples,
        config.seed,
        config.real_tol,
    )?;
    if !verdict.holds {
        return Err(Error::Precondition(format!(
            "not hyperbolic on the cone (worst imaginary part {:e}, witness {:?})",
            verdict.worst_imag,
            verdict.witness.as_ref().map(|w| &w.x)
        )));
    }
    let uhp = pencil::uhp_count(p, config.root_tol)?;
    if uhp != 0 {
        return Err(Error::Precondition(format!(
            "p(1, t, i) has {uhp} roots in the upper half-plane, contradicting cone hyperbolicity"
        )));
    }
    let mut out = theorem1_construct(p, None, config)?;
    out.report.stage("cone_hyperbolic", serde_json::to_value(&verdict)?);
    out.report.check("uhp_count_zero", true, uhp);
    let split = out.pencil.split.as_ref().ok_or(Error::MissingSplit)?;
    let rank_bm = linalg::rank_tol(&split.b_minus, config.rank_tol);
    out.report.check("rank_Bm_zero", rank_bm.rank == 0, rank_bm.rank);
    let a1 = &out.pencil.mats[1];
    let a2 = &out.pencil.mats[2];
    let m1 = linalg::min_eig_rel(a1)?;
    let m2 = linalg::min_eig_rel(a2)?;
    out.report.check("A1_psd", m1 >= -pencil::PSD_FLOOR, m1);
    out.report.check("A2_psd", m2 >= -pencil::PSD_FLOOR, m2);
    let k = a1.nrows();
    let sum_err = linalg::max_abs(&(a1 + a2 - CMat::identity(k, k)));
    out.report.check("A1_plus_A2_eq_I", sum_err <= A_SUM_TOL, sum_err);
    Ok(out)
}

/// `P(x0, x1, y1, x2) = c det(x0 A0 + x1 B+ + y1 B- + x2 A2)`.
pub fn lift_to_four(pencil: &Pencil, config: &Config) -> Result<(Polynomial, Report)> {
    let split = pencil.split.as_ref().ok_or(Error::MissingSplit)?;
    if pencil.nmats() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: pencil.nmats(),
        });
    }
    let k = pencil.k();
    let sum_err = linalg::max_abs(&(&split.b_plus + &split.b_minus + &pencil.mats[2] - CMat::identity(k, k)));
    if sum_err > A_SUM_TOL {
        return Err(Error::Precondition(format!("B+ + B- + A2 differs from I by {sum_err:e}")));
    }
    let lifted = Pencil::new(
        vec![
            pencil.mats[0].clone(),
            split.b_plus.clone(),
            split.b_minus.clone(),
            pencil.mats[2].clone(),
        ],
        pencil.c,
    )?;
    let p4 = lifted.to_poly_named(&crate::fixtures::LIFT_VARS)?;
    let p3 = pencil.to_poly_named(&crate::fixtures::XVARS)?;
    let mut report = Report::new(p3.to_string(), config);
    report.stage("lift", json!({"P": p4.to_string()}));
    let restricted = Polynomial::from_terms(
        &crate::fixtures::XVARS,
        p4.terms().map(|(e, c)| {
            let sign = if e[2] % 2 == 1 { -1.0 } else { 1.0 };
            (vec![e[0], e[1] + e[2], e[3]], c * sign)
        }),
    )?;
    let (res, _) = pencil::coefficient_residual(&p3, &restricted);
    report.check("restriction_recovers_p", res <= A_SUM_TOL, res);
    let verdict = hyper::is_hyperbolic(&p4, &[0.0, 1.0, 1.0, 1.0], config.n_samples, config.seed, config.real_tol)?;
    report.check("hyperbolic_0111", verdict.holds, &verdict);
    report.pencil = Some(lifted.to_json());
    Ok((p4, report))
}

/// Four-variable representation up to a cofactor:
/// `P R = C det(x0 A0 + x1 A1 + x2 A2 + x3 A3)` with `A1, A2, A3` PSD and
/// `A1 + A2 + A3 = I`, for `P` of degree `(n, 1, 1)` in `(x1, x2, x3)`.
pub fn theorem2_construct(p: &Polynomial, cert: Option<&SosCertificate>, config: &Config) -> Result<Construction> {
    config.validate()?;
    require_vars(p, 4)?;
    hyper::check_homogeneous(p, config.seed)?;
    let n = p.degree_in(1);
    for j in [2, 3] {
        if p.degree_in(j) != 1 {
            return Err(Error::Precondition(format!(
                "P must have degree exactly 1 in {} (has {})",
                p.var_names()[j],
                p.degree_in(j)
            )));
        }
    }
    let d = p.total_degree();
    let mut report = Report::new(p.to_string(), config);
    let cone: Vec<Vec<f64>> = (1..4)
        .map(|j| (0..4).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let verdict = hyper::is_cone_hyperbolic(p, &cone, config.n_dirs, config.n_samples, config.seed, config.real_tol)?;
    report.stage("cone_hyperbolic", serde_json::to_value(&verdict)?);
    if !verdict.holds {
        return Err(Error::Precondition(format!(
            "not hyperbolic on the positive orthant (worst imaginary part {:e})",
            verdict.worst_imag
        )));
    }
    let q = p.restrict(0, one())?;
    let md = [n, 1, 1];
    let f = cayley::disk_from_halfplane(&q, &md)?.p_disk;
    let split = cayley::split_f(&f, n)?;
    report.stage(
        "split",
        json!({
            "f": f.to_string(),
            "identity_residual": split.identity_residual,
            "reflection_residual": split.reflection_residual,
        }),
    );
    let cert = match cert {
        Some(c) => c.clone(),
        None => sos::find_sos_tridisk(&split.p, n, &SosOptions::from_config(config))?,
    };
    let grid_residual = sos::sos_residual(&cert, &split.p, config.grid_size)?;
    report.stage(
        "certificate",
        json!({
            "residual": cert.residual,
            "grid_residual": grid_residual,
            "t_used": cert.t_used,
            "projection_iterations": cert.iterations,
        }),
    );
    let nsamples = config.variety_samples.max(4 * (2 * n as usize + 4));
    let samples = variety_sample(&f, nsamples, config.seed)?;
    let lu = sos::unitary_from_certificate(&cert, &samples.points, config.pair_tol)?;
    let dim = lu.u.nrows();
    let mut projections = vec![CMat::zeros(dim, dim); 3];
    let mut start = 0;
    for (len, var, minus_var) in sos::coordinate_blocks(&cert) {
        if minus_var.is_some() && len > 0 {
            return Err(Error::Construction("tridisk certificate has negative squares".into()));
        }
        if let Some(j) = var {
            projections[j] += linalg::coordinate_projection(dim, start, len);
        }
        start += len;
    }
    let ranks: Vec<u32> = projections.iter().map(|p| linalg::rank_tol(p, 0.5).rank as u32).collect();
    let min_e = samples
        .points
        .iter()
        .map(|z| sos::isometry_vectors(&cert, z).1.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min);
    report.stage(
        "lurking_isometry",
        json!({
            "samples": samples.points.len(),
            "dim": dim,
            "block_dims": ranks,
            "span_rank": lu.isometry.span_rank,
            "gram_mismatch": lu.isometry.gram_mismatch,
            "pair_error": lu.isometry.pair_error,
            "min_E_norm": min_e,
        }),
    );
    let ident = CMat::identity(dim, dim);
    let det_at = |z: &[C64]| -> C64 {
        let mz = projections
            .iter()
            .zip(z)
            .fold(CMat::zeros(dim, dim), |acc, (pj, zj)| acc + pj * *zj);
        linalg::det(&(&ident - &lu.u * mz))
    };
    let on_variety = samples.points.iter().map(|z| det_at(z).norm()).fold(0.0, f64::max);
    report.check("det_vanishes_on_variety", on_variety <= 1e-7, on_variety);
    let big = interpolate_box(f.var_names(), &ranks, |z| Ok(det_at(z)))?;
    let division = divides_check(&f, &big, 1e-6, config.seed)?;
    report.check(
        "f_divides_det",
        division.divides,
        json!({"residual": division.residual, "spot_residual": division.spot_residual}),
    );
    if !division.divides {
        return Err(Error::Construction(format!(
            "f does not divide det(I - U M(z)) (residual {:e}, spot {:e})",
            division.residual, division.spot_residual
        )));
    }
    let g = Polynomial::from_terms(
        f.var_names(),
        division
            .quotient
            .terms()
            .filter(|(_, c)| c.norm() > COFACTOR_TRIM * division.quotient.max_coeff())
            .map(|(e, c)| (e.clone(), *c)),
    )?;
    let trimmed = division.quotient.num_terms() - g.num_terms();
    let rdegs: Vec<u32> = ranks.iter().zip(&md).map(|(r, m)| r.saturating_sub(*m)).collect();
    let r = cayley::halfplane_from_disk(&g, &rdegs)?;
    // the quotient is fixed only up to a complex scalar
    let phase = r
        .terms()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(_, c)| c / c.norm())
        .ok_or(Error::ZeroPolynomial)?;
    let r = r.scale(phase.conj());
    let r_imag = r.terms().map(|(_, c)| c.im.abs()).fold(0.0, f64::max) / r.max_coeff();

    let spec = linalg::unitary_spectral(&lu.u, config.eig_sep)?;
    let k = spec.k;
    let a = linalg::cayley_diagonal(&spec.u, config.eig_sep)?;
    let vh = spec.v.adjoint();
    let mut mats = vec![linalg::diag_real(&a)];
    for pj in &projections {
        let c = linalg::compress(&(&vh * pj * &spec.v), k);
        mats.push((&c + c.adjoint()) * C64::new(0.5, 0.0));
    }
    report.stage("spectral", json!({"k": k, "total_dim": spec.total_dim, "residual": spec.residual, "a": a}));
    let bound = 2 * n as usize + 4;
    report.check("k_le_2n_plus_4", k <= bound, json!({"k": k, "bound": bound}));
    let r_deg = r.total_degree();
    if k < d as usize || r_deg as usize > k - d as usize {
        return Err(Error::SizeMismatch {
            k,
            d: d as usize,
            evidence: format!("cofactor has degree {r_deg}"),
        });
    }
    let r_named = r.with_var_names(&p.var_names()[1..])?;
    let big_r = r_named.homogenize(0, (k - d as usize) as u32, &p.var_names()[0])?;
    report.stage(
        "cofactor",
        json!({
            "R": big_r.to_string(),
            "degree": k - d as usize,
            "trimmed_terms": trimmed,
            "relative_imag": r_imag,
        }),
    );
    let unscaled = Pencil::new(mats.clone(), one())?;
    let det_poly = unscaled.to_poly_named(p.var_names())?;
    let pr = p * &big_r;
    let c = match_constant(&pr, &det_poly)?;
    let pencil = Pencil::new(mats, c)?;
    let (pr_res, _) = pencil::coefficient_residual(&pr, &det_poly.scale(c));
    report.check("PR_matches_det", pr_res <= config.rep_tol, pr_res);
    let sum = &pencil.mats[1] + &pencil.mats[2] + &pencil.mats[3];
    let sum_err = linalg::max_abs(&(sum - CMat::identity(k, k)));
    report.check("A_sum_eq_I", sum_err <= A_SUM_TOL, sum_err);
    for j in 1..4 {
        let m = linalg::min_eig_rel(&pencil.mats[j])?;
        report.check(&format!("A{j}_psd"), m >= -pencil::PSD_FLOOR, m);
    }
    report.check("constant_real", c.im.abs() <= 1e-8 * c.norm(), [c.re, c.im]);
    report.pencil = Some(pencil.to_json());
    report.cofactor = Some(big_r.to_string());
    Ok(Construction {
        pencil,
        cofactor: Some(big_r),
        theorem_b: None,
        report,
    })
}
