//! Numerical search for hermitian sums-of-squares certificates
//!
//! ```text
//! p(z) conj p(w) - pt(z) conj pt(w) = sum_b (1 - z_j conj w_j) E_b(w)* S_b E_b(z)
//! ```
//!
//! where `pt` is the reflection of `p`, each block `b` is attached to one
//! variable `j`, and `S_b` is a signature (all `+1` except for the negative
//! squares of an indefinite block). In Gram form the identity is linear in
//! the block Gram matrices; the search alternates projections between the
//! PSD (or fixed-inertia) cone and the affine coefficient constraints, then
//! polishes rank-capped factors with Levenberg–Marquardt.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, IsometryPairs, Isometry};
use crate::pencil::{mat_from_json, mat_to_json};
use crate::poly::Polynomial;
use crate::uniroots::{self, Region};
use crate::C64;

const CHECKPOINT_EVERY: usize = 100;
const LM_MAX_ITERS: usize = 400;
const LM_TARGET: f64 = 1e-14;
const LM_RESTARTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Structure {
    #[serde(rename = "TRIDISK_C")]
    TridiskC,
    #[serde(rename = "FACE_B")]
    FaceB,
}

/// Shape of one Gram block before solving.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSpec {
    pub var: usize,
    pub cap: Vec<u32>,
    pub pos_rank: usize,
    pub neg_rank: usize,
}

/// Solved block: `E_+(z) = plus * mono(z)`, `E_-(z) = minus * mono(z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CertBlock {
    pub var: usize,
    pub cap: Vec<u32>,
    pub plus: CMat,
    pub minus: CMat,
}

impl CertBlock {
    pub fn monomials(&self) -> Vec<Vec<u32>> {
        box_monomials(&self.cap)
    }

    /// `(E_+(z), E_-(z))`.
    pub fn eval(&self, z: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let mono: Vec<C64> = self
            .monomials()
            .iter()
            .map(|e| e.iter().zip(z).map(|(&k, v)| v.powu(k)).product())
            .collect();
        let apply = |m: &CMat| -> Vec<C64> {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|a| m[(r, a)] * mono[a]).sum())
                .collect()
        };
        (apply(&self.plus), apply(&self.minus))
    }

    /// Gram matrix `sum_r c_r c_r^H` over the cap box, negative squares
    /// subtracted.
    pub fn gram(&self) -> CMat {
        factor_gram(&self.plus) - factor_gram(&self.minus)
    }
}

fn factor_gram(c: &CMat) -> CMat {
    c.transpose() * c.map(|v| v.conj())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SosCertificate {
    pub structure: Structure,
    pub inertia: Option<(usize, usize)>,
    /// Reflection multidegree of the certified polynomial.
    pub multidegree: Vec<u32>,
    pub var_names: Vec<String>,
    pub blocks: Vec<CertBlock>,
    /// Largest coefficient mismatch of the identity relative to the largest
    /// kernel coefficient.
    pub residual: f64,
    /// Contraction `p(t z)` the certificate was computed for.
    pub t_used: f64,
    pub iterations: usize,
    /// Affine residual of the projection phase at checkpoints.
    pub checkpoints: Vec<f64>,
}

impl SosCertificate {
    /// Component counts of the coordinate blocks in lurking-isometry order
    /// (plus then minus part of each block).
    pub fn dims(&self) -> Vec<usize> {
        coordinate_blocks(self).iter().map(|b| b.0).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "structure": self.structure,
            "inertia": self.inertia,
            "multidegree": self.multidegree,
            "var_names": self.var_names,
            "blocks": self.blocks.iter().map(|b| json!({
                "var": b.var,
                "cap": b.cap,
                "plus": mat_to_json(&b.plus),
                "minus": mat_to_json(&b.minus),
            })).collect::<Vec<_>>(),
            "residual": self.residual,
            "t_used": self.t_used,
            "iterations": self.iterations,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |what: &str| Error::Invalid(format!("certificate JSON: bad or missing {what}"));
        let structure = match v.get("structure").and_then(Value::as_str) {
            Some("TRIDISK_C") => Structure::TridiskC,
            Some("FACE_B") => Structure::FaceB,
            _ => return Err(bad("structure")),
        };
        let inertia = match v.get("inertia") {
            Some(Value::Array(a)) if a.len() == 2 => Some((
                a[0].as_u64().ok_or_else(|| bad("inertia"))? as usize,
                a[1].as_u64().ok_or_else(|| bad("inertia"))? as usize,
            )),
            _ => None,
        };
        let u32s = |x: &Value, what: &str| -> Result<Vec<u32>> {
            x.as_array()
                .ok_or_else(|| bad(what))?
                .iter()
                .map(|e| e.as_u64().map(|k| k as u32).ok_or_else(|| bad(what)))
                .collect()
        };
        let multidegree = u32s(v.get("multidegree").ok_or_else(|| bad("multidegree"))?, "multidegree")?;
        let var_names = v
            .get("var_names")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("var_names"))?
            .iter()
            .map(|s| s.as_str().map(str::to_string).ok_or_else(|| bad("var_names")))
            .collect::<Result<Vec<_>>>()?;
        let mut blocks = Vec::new();
        for b in v.get("blocks").and_then(Value::as_array).ok_or_else(|| bad("blocks"))? {
            let cap = u32s(b.get("cap").ok_or_else(|| bad("cap"))?, "cap")?;
            let size = box_monomials(&cap).len();
            let read = |key: &str| -> Result<CMat> {
                let m = mat_from_json(b.get(key).ok_or_else(|| bad(key))?)?;
                Ok(if m.nrows() == 0 { CMat::zeros(0, size) } else { m })
            };
            blocks.push(CertBlock {
                var: b.get("var").and_then(Value::as_u64).ok_or_else(|| bad("var"))? as usize,
                plus: read("plus")?,
                minus: read("minus")?,
                cap,
            });
        }
        Ok(SosCertificate {
            structure,
            inertia,
            multidegree,
            var_names,
            blocks,
            residual: v.get("residual").and_then(Value::as_f64).unwrap_or(f64::NAN),
            t_used: v.get("t_used").and_then(Value::as_f64).unwrap_or(1.0),
            iterations: v.get("iterations").and_then(Value::as_u64).unwrap_or(0) as usize,
            checkpoints: Vec::new(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct SosOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub t_contraction: f64,
    pub grid_size: usize,
}

impl Default for SosOptions {
    fn default() -> Self {
        SosOptions {
            max_iters: 5000,
            tol: 1e-6,
            seed: 0,
            t_contraction: 0.995,
            grid_size: 11,
        }
    }
}

impl SosOptions {
    pub fn from_config(cfg: &crate::Config) -> Self {
        SosOptions {
            max_iters: cfg.sos_max_iters,
            tol: cfg.sos_tol,
            seed: cfg.seed,
            t_contraction: cfg.t_contraction,
            grid_size: cfg.grid_size,
        }
    }
}

/// All exponents `e <= cap` in lexicographic order.
pub fn box_monomials(cap: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &c in cap {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=c).map(move |k| {
                    let mut e = prefix.clone();
                    e.push(k);
                    e
                })
            })
            .collect();
    }
    out
}

fn box_index(e: &[u32], cap: &[u32]) -> usize {
    e.iter()
        .zip(cap)
        .fold(0, |acc, (&k, &c)| acc * (c as usize + 1) + k as usize)
}

/// `p(t z)`.
pub fn contract(p: &Polynomial, t: f64) -> Polynomial {
    let terms = p
        .terms()
        .map(|(e, c)| (e.clone(), c * t.powi(e.iter().sum::<u32>() as i32)));
    Polynomial::from_terms(p.var_names(), terms).expect("same variables")
}

/// Coefficient matrix of `p(z) conj p(w) - pt(z) conj pt(w)` on the
/// multidegree box.
fn kernel_matrix(p: &Polynomial, pt: &Polynomial, md: &[u32]) -> CMat {
    let mons = box_monomials(md);
    let pv: Vec<C64> = mons.iter().map(|e| p.coeff(e)).collect();
    let tv: Vec<C64> = mons.iter().map(|e| pt.coeff(e)).collect();
    let n = mons.len();
    CMat::from_fn(n, n, |a, b| pv[a] * pv[b].conj() - tv[a] * tv[b].conj())
}

/// Linear map `F -> (1 - z_j conj w_j) F` from a block Gram matrix to the
/// kernel box.
struct BlockMap {
    /// Kernel index of each cap monomial, and of the monomial times `z_j`.
    emb: Vec<usize>,
    shifted: Vec<usize>,
}

impl BlockMap {
    fn new(spec: &BlockSpec, md: &[u32]) -> Self {
        let mons = box_monomials(&spec.cap);
        let emb = mons.iter().map(|e| box_index(e, md)).collect();
        let shifted = mons
            .iter()
            .map(|e| {
                let mut s = e.clone();
                s[spec.var] += 1;
                box_index(&s, md)
            })
            .collect();
        BlockMap {
            emb,
            shifted,
        }
    }

    fn size(&self) -> usize {
        self.emb.len()
    }

    fn apply_add(&self, f: &CMat, out: &mut CMat) {
        for a in 0..self.size() {
            for b in 0..self.size() {
                let v = f[(a, b)];
                out[(self.emb[a], self.emb[b])] += v;
                out[(self.shifted[a], self.shifted[b])] -= v;
            }
        }
    }
}

struct Problem {
    specs: Vec<BlockSpec>,
    maps: Vec<BlockMap>,
    kernel: CMat,
    kscale: f64,
}

impl Problem {
    fn residual(&self, grams: &[CMat]) -> CMat {
        let mut r = -self.kernel.clone();
        for (m, g) in self.maps.iter().zip(grams) {
            m.apply_add(g, &mut r);
        }
        r
    }

    fn rel_residual(&self, grams: &[CMat]) -> f64 {
        linalg::max_abs(&self.residual(grams)) / self.kscale
    }
}

/// Orthonormal real coordinates of hermitian matrices.
fn herm_to_vec(h: &CMat, out: &mut Vec<f64>) {
    let n = h.nrows();
    let s = std::f64::consts::SQRT_2;
    for i in 0..n {
        out.push(h[(i, i)].re);
        for j in i + 1..n {
            out.push(s * h[(i, j)].re);
            out.push(-s * h[(i, j)].im);
        }
    }
}

fn vec_to_herm(v: &[f64], n: usize) -> CMat {
    let mut h = CMat::zeros(n, n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = 0;
    for i in 0..n {
        h[(i, i)] = C64::new(v[k], 0.0);
        k += 1;
        for j in i + 1..n {
            let z = C64::new(s * v[k], -s * v[k + 1]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

/// Nearest hermitian matrix with at most `pos` positive and `neg` negative
/// eigenvalues (`pos = usize::MAX` for the plain PSD cone).
fn project_inertia(h: &CMat, pos: usize, neg: usize) -> Result<CMat> {
    let (vals, q) = linalg::hermitian_eig(&((h + h.adjoint()) * C64::new(0.5, 0.0)))?;
    let n = vals.len();
    let mut kept = vec![0.0; n];
    for (slot, i) in (0..n).rev().enumerate() {
        if slot < pos && vals[i] > 0.0 {
            kept[i] = vals[i];
        }
    }
    for (slot, i) in (0..n).enumerate() {
        if slot < neg && vals[i] < 0.0 {
            kept[i] = vals[i];
        }
    }
    Ok(&q * linalg::diag_real(&kept) * q.adjoint())
}

fn block_coords_len(n: usize) -> usize {
    n * n
}

/// Alternating projections between the cone and the affine constraints.
/// Dykstra corrections are used when every block is convex (PSD).
fn project_phase(problem: &Problem, max_iters: usize, tol: f64) -> Result<(Vec<CMat>, usize, Vec<f64>)> {
    let sizes: Vec<usize> = problem.maps.iter().map(BlockMap::size).collect();
    let nparams: usize = sizes.iter().map(|&s| block_coords_len(s)).sum();
    let nk = problem.kernel.nrows();
    // columns: images of the orthonormal basis of each block
    let mut a = DMatrix::<f64>::zeros(nk * nk, nparams);
    let mut col = 0;
    for (map, &s) in problem.maps.iter().zip(&sizes) {
        for k in 0..block_coords_len(s) {
            let mut e = vec![0.0; block_coords_len(s)];
            e[k] = 1.0;
            let basis = vec_to_herm(&e, s);
            let mut img = CMat::zeros(nk, nk);
            map.apply_add(&basis, &mut img);
            let mut v = Vec::with_capacity(nk * nk);
            herm_to_vec(&img, &mut v);
            a.set_column(col, &DVector::from_vec(v));
            col += 1;
        }
    }
    let mut kv = Vec::with_capacity(nk * nk);
    herm_to_vec(&problem.kernel, &mut kv);
    let kvec = DVector::from_vec(kv);
    let pinv = a
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Construction(format!("pseudo-inverse failed: {e}")))?;
    let convex = problem.specs.iter().all(|s| s.neg_rank == 0);
    let split = |x: &DVector<f64>| -> Vec<CMat> {
        let mut out = Vec::new();
        let mut off = 0;
        for &s in &sizes {
            let len = block_coords_len(s);
            out.push(vec_to_herm(&x.as_slice()[off..off + len], s));
            off += len;
        }
        out
    };
    let join = |grams: &[CMat]| -> DVector<f64> {
        let mut v = Vec::with_capacity(nparams);
        for g in grams {
            herm_to_vec(g, &mut v);
        }
        DVector::from_vec(v)
    };
    let cone = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let grams = split(x);
        let projected = grams
            .iter()
            .zip(&problem.specs)
            .map(|(g, s)| {
                let pos = if s.neg_rank == 0 { usize::MAX } else { s.pos_rank };
                project_inertia(g, pos, s.neg_rank)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(join(&projected))
    };
    let affine = |x: &DVector<f64>| -> DVector<f64> { x - &pinv * (&a * x - &kvec) };

    let kn = kvec.norm().max(f64::MIN_POSITIVE);
    let mut x = DVector::<f64>::zeros(nparams);
    let mut p = DVector::<f64>::zeros(nparams);
    let mut q = DVector::<f64>::zeros(nparams);
    let mut checkpoints = Vec::new();
    let mut iters = 0;
    for it in 0..max_iters {
        iters = it + 1;
        let y = affine(&(&x + &p));
        if convex {
            p = &x + &p - &y;
        }
        let z = cone(&(&y + &q))?;
        if convex {
            q = &y + &q - &z;
        }
        x = z;
        let res = (&a * &x - &kvec).norm() / kn;
        if it % CHECKPOINT_EVERY == 0 {
            checkpoints.push(res);
        }
        if res < tol {
            checkpoints.push(res);
            break;
        }
    }
    Ok((split(&x), iters, checkpoints))
}

/// Unknowns of the factor phase: `plus` and `minus` factors of each block.
struct Factors {
    plus: Vec<CMat>,
    minus: Vec<CMat>,
}

impl Factors {
    fn grams(&self) -> Vec<CMat> {
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(p, m)| factor_gram(p) - factor_gram(m))
            .collect()
    }

    fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for m in self.plus.iter().chain(&self.minus) {
            for z in m.iter() {
                v.push(z.re);
                v.push(z.im);
            }
        }
        v
    }

    fn from_vec(&self, v: &[f64]) -> Factors {
        let mut k = 0;
        let mut take = |m: &CMat| -> CMat {
            let mut out = m.clone();
            for z in out.iter_mut() {
                *z = C64::new(v[k], v[k + 1]);
                k += 2;
            }
            out
        };
        let plus = self.plus.iter().map(&mut take).collect();
        let minus = self.minus.iter().map(&mut take).collect();
        Factors { plus, minus }
    }
}

fn residual_vec(problem: &Problem, grams: &[CMat]) -> DVector<f64> {
    let mut v = Vec::new();
    herm_to_vec(&problem.residual(grams), &mut v);
    DVector::from_vec(v)
}

/// Jacobian of the residual vector with respect to the real factor
/// coordinates, in the order of [`Factors::to_vec`].
fn jacobian(problem: &Problem, f: &Factors) -> DMatrix<f64> {
    let nk = problem.kernel.nrows();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let nblocks = f.plus.len();
    let all: Vec<(usize, &CMat, f64)> = f
        .plus
        .iter()
        .enumerate()
        .map(|(b, m)| (b, m, 1.0))
        .chain(f.minus.iter().enumerate().map(|(b, m)| (b, m, -1.0)))
        .collect();
    debug_assert_eq!(all.len(), 2 * nblocks);
    for (b, c, sign) in all {
        let map = &problem.maps[b];
        let s = map.size();
        // column-major order matches `iter()` over the factor matrix
        for a in 0..s {
            for r in 0..c.nrows() {
                for eps in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                    // dF = eps e_a c_r^H + c_r conj(eps) e_a^T
                    let mut df = CMat::zeros(s, s);
                    for beta in 0..s {
                        df[(a, beta)] += eps * c[(r, beta)].conj() * sign;
                    }
                    for alpha in 0..s {
                        df[(alpha, a)] += c[(r, alpha)] * eps.conj() * sign;
                    }
                    let mut img = CMat::zeros(nk, nk);
                    map.apply_add(&df, &mut img);
                    let mut v = Vec::with_capacity(nk * nk);
                    herm_to_vec(&img, &mut v);
                    cols.push(v);
                }
            }
        }
    }
    let rows = nk * nk;
    DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Levenberg–Marquardt on the factors. Returns the improved factors and the
/// final relative residual.
fn factor_phase(problem: &Problem, start: Factors) -> (Factors, f64) {
    let kn = problem.kscale;
    let mut f = start;
    let mut r = residual_vec(problem, &f.grams());
    let mut cost = r.norm();
    let mut lambda = 1e-3;
    for _ in 0..LM_MAX_ITERS {
        if cost / kn <= LM_TARGET {
            break;
        }
        let j = jacobian(problem, &f);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * &r;
        let diag_max = (0..jtj.nrows()).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-300);
        let x = DVector::from_vec(f.to_vec());
        let mut improved = false;
        for _ in 0..12 {
            let mut m = jtj.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += lambda * diag_max;
            }
            let Some(ch) = m.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = ch.solve(&(-&g));
            let cand = f.from_vec((&x + &step).as_slice());
            let rc = residual_vec(problem, &cand.grams());
            let cc = rc.norm();
            if cc < cost {
                f = cand;
                r = rc;
                cost = cc;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    let rel = problem.rel_residual(&f.grams());
    (f, rel)
}

/// Rank-capped factors from hermitian Gram matrices: top eigenpairs plus a
/// small seeded perturbation so that zero rows still move.
fn factors_from_grams(grams: &[CMat], specs: &[BlockSpec], rng: &mut ChaCha8Rng, noise: f64) -> Result<Factors> {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (g, s) in grams.iter().zip(specs) {
        let n = g.nrows();
        let (vals, q) = linalg::hermitian_eig(&((g + g.adjoint()) * C64::new(0.5, 0.0)))?;
        let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-3);
        let mut build = |rank: usize, idx: Vec<usize>, sign: f64| -> CMat {
            CMat::from_fn(rank, n, |r, a| {
                let jitter = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                    * (noise * scale.sqrt());
                match idx.get(r) {
                    Some(&i) if vals[i] * sign > 0.0 => q[(a, i)] * (vals[i].abs()).sqrt() + jitter,
                    _ => jitter,
                }
            })
        };
        plus.push(build(s.pos_rank, (0..n).rev().collect(), 1.0));
        minus.push(build(s.neg_rank, (0..n).collect(), -1.0));
    }
    Ok(Factors { plus, minus })
}

/// Solves for a certificate for `(p, reflect(p, md))` with the given block
/// layout. `p` is used as given (no contraction).
fn solve(
    p: &Polynomial,
    md: &[u32],
    specs: Vec<BlockSpec>,
    opts: &SosOptions,
) -> Result<(Vec<CertBlock>, f64, usize, Vec<f64>)> {
    let pt = p.reflect(md)?;
    let kernel = kernel_matrix(p, &pt, md);
    // a self-reflective input has a zero kernel; fall back to the size of p
    let kscale = linalg::max_abs(&kernel)
        .max(p.max_coeff().powi(2))
        .max(f64::MIN_POSITIVE);
    let maps = specs.iter().map(|s| BlockMap::new(s, md)).collect();
    let problem = Problem {
        specs: specs.clone(),
        maps,
        kernel,
        kscale,
    };
    let (grams, iters, checkpoints) = project_phase(&problem, opts.max_iters, 1e-9)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x50_5eed);
    let mut best: Option<(Factors, f64)> = None;
    for attempt in 0..LM_RESTARTS {
        let start = if attempt == 0 {
            factors_from_grams(&grams, &specs, &mut rng, 1e-4)?
        } else {
            // fresh random start
            let zero: Vec<CMat> = grams.iter().map(|g| CMat::zeros(g.nrows(), g.ncols())).collect();
            factors_from_grams(&zero, &specs, &mut rng, 0.5)?
        };
        let (f, rel) = factor_phase(&problem, start);
        let better = best.as_ref().is_none_or(|(_, b)| rel < *b);
        if better {
            best = Some((f, rel));
        }
        if best.as_ref().is_some_and(|(_, b)| *b <= 1e-12) {
            break;
        }
    }
    let (f, rel) = best.expect("at least one attempt");
    let blocks = specs
        .iter()
        .zip(f.plus.into_iter().zip(f.minus))
        .map(|(s, (plus, minus))| CertBlock {
            var: s.var,
            cap: s.cap.clone(),
            plus,
            minus,
        })
        .collect();
    Ok((blocks, rel, iters, checkpoints))
}

fn torus_grid_has_zero(p: &Polynomial, grid: usize) -> Result<Option<Vec<C64>>> {
    let nv = p.nvars();
    let total = grid.pow(nv as u32);
    for flat in 0..total {
        let mut k = flat;
        let z: Vec<C64> = (0..nv)
            .map(|_| {
                let s = k % grid;
                k /= grid;
                // half-step offset keeps the grid off the real axis
                C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (s as f64 + 0.5) / grid as f64)
            })
            .collect();
        let v = p.eval(&z)?.norm();
        if v <= 1e-8 * p.eval_abs_scale(&z)?.max(f64::MIN_POSITIVE) {
            return Ok(Some(z));
        }
    }
    Ok(None)
}

fn run_with_contraction(
    p: &Polynomial,
    md: &[u32],
    specs: Vec<BlockSpec>,
    structure: Structure,
    inertia: Option<(usize, usize)>,
    opts: &SosOptions,
) -> Result<SosCertificate> {
    let mut last = None;
    let ts = if opts.t_contraction < 1.0 {
        vec![1.0, opts.t_contraction]
    } else {
        vec![1.0]
    };
    for t in ts {
        let pt = if t < 1.0 { contract(p, t) } else { p.clone() };
        let (blocks, residual, iterations, checkpoints) = solve(&pt, md, specs.clone(), opts)?;
        let cert = SosCertificate {
            structure,
            inertia,
            multidegree: md.to_vec(),
            var_names: p.var_names().to_vec(),
            blocks,
            residual,
            t_used: t,
            iterations,
            checkpoints,
        };
        if residual <= opts.tol {
            return Ok(cert);
        }
        last = Some(residual);
    }
    Err(Error::NoConvergence {
        iters: opts.max_iters,
        residual: last.unwrap_or(f64::NAN),
    })
}

/// Tridisk certificate for `p` of multidegree at most `(n, 1, 1)` with
/// vector lengths `(2n, 2, 2)` and degree caps `(n-1,1,1)`, `(n,0,1)`,
/// `(n,1,0)`.
pub fn find_sos_tridisk(p: &Polynomial, n: u32, opts: &SosOptions) -> Result<SosCertificate> {
    if p.nvars() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: p.nvars(),
        });
    }
    let md = vec![n, 1, 1];
    if let Some(z) = torus_grid_has_zero(p, opts.grid_size)? {
        return Err(Error::ZeroOnGrid(format!("{z:?}")));
    }
    let mut specs = Vec::new();
    if n >= 1 {
        specs.push(BlockSpec {
            var: 0,
            cap: vec![n - 1, 1, 1],
            pos_rank: 2 * n as usize,
            neg_rank: 0,
        });
    }
    specs.push(BlockSpec {
        var: 1,
        cap: vec![n, 0, 1],
        pos_rank: 2,
        neg_rank: 0,
    });
    specs.push(BlockSpec {
        var: 2,
        cap: vec![n, 1, 0],
        pos_rank: 2,
        neg_rank: 0,
    });
    // reflect checks dominance of the multidegree
    p.reflect(&md)?;
    run_with_contraction(p, &md, specs, Structure::TridiskC, None, opts)
}

/// Number of zeros of `z1 -> p(z1, 0)` in the open unit disk.
pub fn disk_zero_count(p: &Polynomial) -> Result<usize> {
    let slice = p.restrict(1, C64::new(0.0, 0.0))?;
    if slice.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let coeffs = slice.univariate_coeffs()?;
    if coeffs.iter().skip(1).all(|c| c.norm() == 0.0) {
        return Ok(0);
    }
    let rs = uniroots::roots_of_coeffs(&coeffs, uniroots::DEFAULT_BOUNDARY_TOL)?;
    uniroots::count_region(&rs, Region::Disk, true)
}

/// Face certificate for bivariate `p` reflected at `(n, m)`:
/// `|p|^2 - |pt|^2 = (1-|z1|^2)(|E1|^2 - |E2|^2) + (1-|z2|^2)|F|^2`
/// with `E1` of length `n1`, `E2` of length `n2`, `F` of length `m`.
pub fn find_sos_face(
    p: &Polynomial,
    md: (u32, u32),
    inertia: (usize, usize),
    opts: &SosOptions,
) -> Result<SosCertificate> {
    if p.nvars() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: p.nvars(),
        });
    }
    let (n, m) = md;
    let (n1, n2) = inertia;
    if n1 + n2 != n as usize {
        return Err(Error::InertiaMismatch { n1, n2, roots: n as usize });
    }
    let roots = disk_zero_count(p)?;
    if roots != n2 {
        return Err(Error::InertiaMismatch { n1, n2, roots });
    }
    let mdv = vec![n, m];
    p.reflect(&mdv)?;
    let mut specs = Vec::new();
    if n >= 1 {
        specs.push(BlockSpec {
            var: 0,
            cap: vec![n - 1, m],
            pos_rank: n1,
            neg_rank: n2,
        });
    }
    if m >= 1 {
        specs.push(BlockSpec {
            var: 1,
            cap: vec![n, m - 1],
            pos_rank: m as usize,
            neg_rank: 0,
        });
    }
    let opts = SosOptions {
        t_contraction: 1.0,
        ..opts.clone()
    };
    run_with_contraction(p, &mdv, specs, Structure::FaceB, Some(inertia), &opts)
}

/// Largest `|LHS - RHS|` of the identity over the torus-product grid,
/// relative to `max |p|^2` on the grid. Uses `p(t z)` when the certificate
/// was computed for a contraction.
pub fn sos_residual(cert: &SosCertificate, p: &Polynomial, grid_size: usize) -> Result<f64> {
    let p = if cert.t_used < 1.0 {
        contract(p, cert.t_used)
    } else {
        p.clone()
    };
    let pt = p.reflect(&cert.multidegree)?;
    let nv = p.nvars();
    let total = grid_size.pow(nv as u32);
    struct GridPoint {
        z: Vec<C64>,
        p: C64,
        pt: C64,
        e: Vec<(Vec<C64>, Vec<C64>)>,
    }
    let mut pts = Vec::with_capacity(total);
    let mut pmax = 0.0f64;
    for flat in 0..total {
        let mut k = flat;
        let z: Vec<C64> = (0..nv)
            .map(|_| {
                let s = k % grid_size;
                k /= grid_size;
                C64::from_polar(1.0, 2.0 * std::f64::consts::PI * s as f64 / grid_size as f64)
            })
            .collect();
        let pv = p.eval(&z)?;
        pmax = pmax.max(pv.norm_sqr());
        pts.push(GridPoint {
            p: pv,
            pt: pt.eval(&z)?,
            e: cert.blocks.iter().map(|b| b.eval(&z)).collect(),
            z,
        });
    }
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x * y.conj()).sum() };
    let mut worst = 0.0f64;
    for a in &pts {
        for b in &pts {
            let lhs = a.p * b.p.conj() - a.pt * b.pt.conj();
            let mut rhs = C64::new(0.0, 0.0);
            for (blk, (ea, eb)) in cert.blocks.iter().zip(a.e.iter().zip(&b.e)) {
                let w = C64::new(1.0, 0.0) - a.z[blk.var] * b.z[blk.var].conj();
                rhs += w * (dot(&ea.0, &eb.0) - dot(&ea.1, &eb.1));
            }
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst / pmax.max(f64::MIN_POSITIVE))
}

/// Unitary extracted from a certificate by the lurking isometry.
#[derive(Clone, Debug)]
pub struct LurkingUnitary {
    pub u: CMat,
    /// Component counts per coordinate block, in the order the vectors are
    /// stacked.
    pub dims: Vec<usize>,
    /// Variable multiplying each coordinate block on the left side.
    pub left_vars: Vec<Option<usize>>,
    pub isometry: Isometry,
}

/// Left/right vectors at one point of the zero set. Plus parts go
/// `z_j E -> E`, minus parts go `E -> z_j E`.
pub fn isometry_vectors(cert: &SosCertificate, z: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for b in &cert.blocks {
        let (ep, em) = b.eval(z);
        let zj = z[b.var];
        left.extend(ep.iter().map(|v| zj * v));
        right.extend(ep.iter().copied());
        left.extend(em.iter().copied());
        right.extend(em.iter().map(|v| zj * v));
    }
    (left, right)
}

/// Coordinate blocks in stacking order: `(length, left variable)`.
pub fn coordinate_blocks(cert: &SosCertificate) -> Vec<(usize, Option<usize>, Option<usize>)> {
    let mut out = Vec::new();
    for b in &cert.blocks {
        out.push((b.plus.nrows(), Some(b.var), None));
        out.push((b.minus.nrows(), None, Some(b.var)));
    }
    out
}

/// Builds `U` with `U (left) = right` at every sample of the zero set.
pub fn unitary_from_certificate(cert: &SosCertificate, samples: &[Vec<C64>], pair_tol: f64) -> Result<LurkingUnitary> {
    let mut pairs = IsometryPairs {
        left: Vec::with_capacity(samples.len()),
        right: Vec::with_capacity(samples.len()),
    };
    for z in samples {
        let (l, r) = isometry_vectors(cert, z);
        pairs.left.push(l);
        pairs.right.push(r);
    }
    let isometry = linalg::lurking_isometry(&pairs, pair_tol)?;
    let blocks = coordinate_blocks(cert);
    Ok(LurkingUnitary {
        u: isometry.u.clone(),
        dims: blocks.iter().map(|b| b.0).collect(),
        left_vars: blocks.iter().map(|b| b.1).collect(),
        isometry,
    })
}

/// Data of the determinantal formula for a bivariate disk polynomial:
/// `p = c det((z1 P- + P+ + D2) - U (P- + z1 P+ + z2 D2))` with blocks
/// ordered `P+`, `P-`, `D2`.
#[derive(Clone, Debug)]
pub struct TheoremBData {
    pub u: CMat,
    pub dims: (usize, usize, usize),
    pub c: C64,
}

impl TheoremBData {
    pub fn size(&self) -> usize {
        self.dims.0 + self.dims.1 + self.dims.2
    }

    /// `(P+, P-, D2)` as coordinate projections.
    pub fn projections(&self) -> (CMat, CMat, CMat) {
        let (a, b, m) = self.dims;
        let n = self.size();
        (
            linalg::coordinate_projection(n, 0, a),
            linalg::coordinate_projection(n, a, b),
            linalg::coordinate_projection(n, a + b, m),
        )
    }

    /// `c det(...)` at `z`.
    pub fn eval(&self, z: &[C64]) -> C64 {
        let (pp, pm, d2) = self.projections();
        let one = C64::new(1.0, 0.0);
        let lhs = &pm * z[0] + &pp + &d2;
        let rhs = &pm + &pp * z[0] + &d2 * z[1];
        self.c * linalg::det(&(lhs - &self.u * rhs)) * one
    }

    pub fn to_json(&self) -> Value {
        json!({
            "U": mat_to_json(&self.u),
            "dims": [self.dims.0, self.dims.1, self.dims.2],
            "c": [self.c.re, self.c.im],
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |what: &str| Error::Invalid(format!("unitary data: bad or missing {what}"));
        let u = mat_from_json(v.get("U").ok_or_else(|| bad("U"))?)?;
        let d = v.get("dims").and_then(Value::as_array).ok_or_else(|| bad("dims"))?;
        if d.len() != 3 {
            return Err(bad("dims"));
        }
        let get = |i: usize| d[i].as_u64().map(|x| x as usize).ok_or_else(|| bad("dims"));
        let dims = (get(0)?, get(1)?, get(2)?);
        let c = match v.get("c") {
            Some(c) => crate::pencil::complex_from_json(c)?,
            None => C64::new(1.0, 0.0),
        };
        let data = TheoremBData { u, dims, c };
        if data.u.nrows() != data.size() || data.u.ncols() != data.size() {
            return Err(Error::DimensionMismatch {
                expected: data.size(),
                got: data.u.nrows(),
            });
        }
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley;
    use crate::fixtures;
    use crate::poly::parse_poly;

    fn z3() -> [&'static str; 3] {
        ["z1", "z2", "z3"]
    }

    #[test]
    fn box_enumeration_matches_index() {
        let cap = [2, 0, 1];
        let mons = box_monomials(&cap);
        assert_eq!(mons.len(), 6);
        for (i, e) in mons.iter().enumerate() {
            assert_eq!(box_index(e, &cap), i);
        }
    }

    #[test]
    fn hermitian_coordinates_are_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = linalg::random_hermitian(&mut rng, 4);
        let mut v = Vec::new();
        herm_to_vec(&h, &mut v);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - linalg::fro_norm(&h)).abs() < 1e-12);
        assert!(linalg::max_abs(&(vec_to_herm(&v, 4) - h)) < 1e-12);
    }

    #[test]
    fn inertia_projection_keeps_extreme_eigenvalues() {
        let h = linalg::diag_real(&[3.0, -2.0, 1.0, -0.5]);
        let p = project_inertia(&h, 1, 1).unwrap();
        let (vals, _) = linalg::hermitian_eig(&p).unwrap();
        let expect = [-2.0, 0.0, 0.0, 3.0];
        for (a, b) in vals.iter().zip(expect) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn tridisk_symmetric_example() {
        let p = parse_poly("8 - z1*z2 - z1*z3 - z2*z3", &z3()).unwrap();
        let cert = find_sos_tridisk(&p, 1, &SosOptions::default()).unwrap();
        assert_eq!(cert.t_used, 1.0);
        let res = sos_residual(&cert, &p, 11).unwrap();
        assert!(res <= 1e-6, "grid residual {res}");
        assert!(cert.iterations <= 5000);
    }

    #[test]
    fn tridisk_constant_one() {
        let p = parse_poly("1", &z3()).unwrap();
        let cert = find_sos_tridisk(&p, 1, &SosOptions::default()).unwrap();
        assert!(sos_residual(&cert, &p, 7).unwrap() <= 1e-8);
    }

    #[test]
    fn tridisk_two_minus_z1() {
        let p = parse_poly("2 - z1", &z3()).unwrap();
        let cert = find_sos_tridisk(&p, 1, &SosOptions::default()).unwrap();
        assert!(sos_residual(&cert, &p, 11).unwrap() <= 1e-6);
    }

    #[test]
    fn tridisk_rejects_torus_zero() {
        let p = parse_poly("1 + z1", &z3()).unwrap();
        assert!(matches!(
            find_sos_tridisk(&p, 1, &SosOptions::default()),
            Err(Error::ZeroOnGrid(_)) | Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn face_trivial_linear() {
        // disk form of x2
        let p = parse_poly("0.5 + 0.5*z2", &["z1", "z2"]).unwrap();
        let cert = find_sos_face(&p, (0, 1), (0, 0), &SosOptions::default()).unwrap();
        assert!(sos_residual(&cert, &p, 11).unwrap() <= 1e-8);
        // derivative split gives F = 1/2
        let f = parse_poly("1/2", &["z1", "z2"]).unwrap();
        let cert = find_sos_face(&f, (0, 1), (0, 0), &SosOptions::default()).unwrap();
        assert!(sos_residual(&cert, &f, 11).unwrap() <= 1e-10);
        assert!((cert.blocks[0].gram()[(0, 0)].re - 0.25).abs() < 1e-10);
    }

    fn cubic_face_input() -> Polynomial {
        let q = fixtures::cubic_poly().restrict(0, C64::new(1.0, 0.0)).unwrap();
        let f = cayley::disk_from_halfplane(&q, &[2, 1]).unwrap().p_disk;
        cayley::tilde_partial(&f, 1, &[2, 1]).unwrap()
    }

    #[test]
    fn face_indefinite_example() {
        let p2 = cubic_face_input();
        assert_eq!(disk_zero_count(&p2).unwrap(), 1);
        let cert = find_sos_face(&p2, (2, 1), (1, 1), &SosOptions::default()).unwrap();
        assert!(sos_residual(&cert, &p2, 11).unwrap() <= 1e-5);
        assert_eq!(cert.dims(), vec![1, 1, 1, 0]);
    }

    #[test]
    fn face_rejects_wrong_inertia() {
        let p2 = cubic_face_input();
        assert!(matches!(
            find_sos_face(&p2, (2, 1), (2, 0), &SosOptions::default()),
            Err(Error::InertiaMismatch { .. })
        ));
    }

    #[test]
    fn face_stable_case_is_all_psd() {
        let p = parse_poly("3 - z1 - z1*z2", &["z1", "z2"]).unwrap();
        let cert = find_sos_face(&p, (1, 1), (1, 0), &SosOptions::default()).unwrap();
        assert!(cert.blocks.iter().all(|b| b.minus.nrows() == 0));
        assert!(sos_residual(&cert, &p, 11).unwrap() <= 1e-8);
    }

    #[test]
    fn residual_is_zero_for_exact_and_grows_with_perturbation() {
        // 1 - |z1 z2 z3|^2 with E1 = 1, E2 = z1, E3 = z1 z2
        let p = parse_poly("1", &z3()).unwrap();
        let one = C64::new(1.0, 0.0);
        let mk = |var: usize, cap: Vec<u32>, entry: usize| {
            let size = box_monomials(&cap).len();
            let mut plus = CMat::zeros(1, size);
            plus[(0, entry)] = one;
            CertBlock {
                var,
                cap,
                plus,
                minus: CMat::zeros(0, size),
            }
        };
        let blocks = vec![
            mk(0, vec![0, 1, 1], 0),
            mk(1, vec![1, 0, 1], box_index(&[1, 0, 0], &[1, 0, 1])),
            mk(2, vec![1, 1, 0], box_index(&[1, 1, 0], &[1, 1, 0])),
        ];
        let mut cert = SosCertificate {
            structure: Structure::TridiskC,
            inertia: None,
            multidegree: vec![1, 1, 1],
            var_names: z3().iter().map(|s| s.to_string()).collect(),
            blocks,
            residual: 0.0,
            t_used: 1.0,
            iterations: 0,
            checkpoints: vec![],
        };
        assert!(sos_residual(&cert, &p, 5).unwrap() < 1e-14);
        let delta = 1e-3;
        cert.blocks[0].plus[(0, 0)] += delta;
        let r1 = sos_residual(&cert, &p, 5).unwrap();
        cert.blocks[0].plus[(0, 0)] = one + 2.0 * delta;
        let r2 = sos_residual(&cert, &p, 5).unwrap();
        assert!(r1 > 1e-4 && r1 < 1e-2, "{r1}");
        assert!((r2 / r1 - 2.0).abs() < 0.05, "{}", r2 / r1);
    }

    #[test]
    fn certificate_json_round_trip() {
        let p = parse_poly("2 - z1", &z3()).unwrap();
        let cert = find_sos_tridisk(&p, 1, &SosOptions::default()).unwrap();
        let back = SosCertificate::from_json(&cert.to_json()).unwrap();
        assert_eq!(back.blocks.len(), cert.blocks.len());
        for (a, b) in back.blocks.iter().zip(&cert.blocks) {
            assert!(linalg::max_abs(&(&a.plus - &b.plus)) == 0.0);
        }
    }

    #[test]
    fn projection_checkpoints_do_not_increase() {
        let p = parse_poly("8 - z1*z2 - z1*z3 - z2*z3", &z3()).unwrap();
        let cert = find_sos_tridisk(&p, 1, &SosOptions::default()).unwrap();
        for w in cert.checkpoints.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{:?}", cert.checkpoints);
        }
    }
}
