//! Dense complex linear algebra: Hermitian eigendecomposition by cyclic
//! Jacobi rotations, spectral decomposition of unitaries, the Cayley
//! diagonal, lurking-isometry extension and rank with tolerance.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::C64;

pub type CMat = DMatrix<C64>;

/// Default separation: an eigenvalue of a unitary counts as 1 iff
/// `|lambda - 1| < EIG_SEP`.
pub const EIG_SEP: f64 = 1e-6;
/// Eigenvalues of `(U + U*)/2` closer than this are grouped before the
/// second Hermitian part is diagonalized.
pub const GROUP_TOL: f64 = 1e-8;

const JACOBI_MAX_SWEEPS: usize = 100;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

fn cone() -> C64 {
    C64::new(1.0, 0.0)
}

pub fn fro_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    fro_norm(&(m - m.adjoint()))
}

/// `||U* U - I||_F`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.ncols();
    fro_norm(&(u.adjoint() * u - CMat::identity(n, n)))
}

/// Upper-left `k x k` block.
pub fn compress(m: &CMat, k: usize) -> CMat {
    m.view((0, 0), (k, k)).into_owned()
}

pub fn diag_real(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(values[i], 0.0)
        } else {
            czero()
        }
    })
}

/// Orthogonal projection onto coordinates `[start, start + len)` of `C^n`.
pub fn coordinate_projection(n: usize, start: usize, len: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        if i == j && i >= start && i < start + len {
            cone()
        } else {
            czero()
        }
    })
}

/// Determinant by LU with partial pivoting.
pub fn det(m: &CMat) -> C64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "determinant of a non-square matrix");
    let mut a = m.clone();
    let mut acc = cone();
    for col in 0..n {
        let mut piv = col;
        let mut best = a[(col, col)].norm();
        for r in col + 1..n {
            let v = a[(r, col)].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return czero();
        }
        if piv != col {
            a.swap_rows(piv, col);
            acc = -acc;
        }
        let p = a[(col, col)];
        acc *= p;
        for r in col + 1..n {
            let f = a[(r, col)] / p;
            if f != czero() {
                for c in col + 1..n {
                    let v = a[(col, c)];
                    a[(r, c)] -= f * v;
                }
            }
        }
    }
    acc
}

/// Eigendecomposition of a self-adjoint matrix: `H = Q diag(values) Q*`,
/// values ascending.
pub fn hermitian_eig(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: h.ncols(),
        });
    }
    let norm = fro_norm(h);
    let defect = hermitian_defect(h);
    if defect > 1e-10 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian(defect / norm));
    }
    let mut a = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let mut q = CMat::identity(n, n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm || off == 0.0 {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                jacobi_rotate(&mut a, &mut q, p, r);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok((values, vectors))
}

/// One complex Jacobi rotation annihilating `a[(p, r)]`.
fn jacobi_rotate(a: &mut CMat, q: &mut CMat, p: usize, r: usize) {
    let apr = a[(p, r)];
    let mag = apr.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let arr = a[(r, r)].re;
    if mag <= f64::EPSILON * 1e-3 * (app.abs() + arr.abs()) {
        a[(p, r)] = czero();
        a[(r, p)] = czero();
        return;
    }
    let phase = apr / mag;
    let theta = (arr - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;
    // G restricted to (p, r): [[cs, sn], [-sn conj(phase), cs conj(phase)]]
    let g_pp = C64::new(cs, 0.0);
    let g_pr = C64::new(sn, 0.0);
    let g_rp = -phase.conj() * sn;
    let g_rr = phase.conj() * cs;
    let n = a.nrows();
    // A <- A G
    for i in 0..n {
        let x = a[(i, p)];
        let y = a[(i, r)];
        a[(i, p)] = x * g_pp + y * g_rp;
        a[(i, r)] = x * g_pr + y * g_rr;
    }
    // A <- G* A
    for j in 0..n {
        let x = a[(p, j)];
        let y = a[(r, j)];
        a[(p, j)] = g_pp.conj() * x + g_rp.conj() * y;
        a[(r, j)] = g_pr.conj() * x + g_rr.conj() * y;
    }
    a[(p, r)] = czero();
    a[(r, p)] = czero();
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(r, r)] = C64::new(a[(r, r)].re, 0.0);
    for i in 0..n {
        let x = q[(i, p)];
        let y = q[(i, r)];
        q[(i, p)] = x * g_pp + y * g_rp;
        q[(i, r)] = x * g_pr + y * g_rr;
    }
}

/// Spectral norm of a self-adjoint matrix.
pub fn hermitian_op_norm(h: &CMat) -> Result<f64> {
    let (vals, _) = hermitian_eig(h)?;
    Ok(vals.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

/// Spectral data of a unitary `U = V diag(u, I) V*`.
#[derive(Clone, Debug)]
pub struct SpectralData {
    /// Columns: first the `k` eigenvectors for `u`, then the unit block.
    pub v: CMat,
    /// Non-unit eigenvalues.
    pub u: Vec<C64>,
    /// Rank of `I - U`.
    pub k: usize,
    pub total_dim: usize,
    /// `min_j |u_j - 1|` over the non-unit block (infinity when `k = 0`).
    pub min_gap: f64,
    /// Largest `|lambda - 1|` among eigenvalues classified as 1.
    pub unit_spread: f64,
    /// Reconstruction residual `||U - V diag V*||_F`.
    pub residual: f64,
}

/// Splits the spectrum of a unitary into the eigenvalue-1 block and the rest,
/// by joint diagonalization of `(U + U*)/2` and `(U - U*)/(2i)`.
pub fn unitary_spectral(u: &CMat, eig_sep: f64) -> Result<SpectralData> {
    let (basis, lambdas) = unitary_eigen(u)?;
    let mut unit = Vec::new();
    for (i, &l) in lambdas.iter().enumerate() {
        let dist = (l - cone()).norm();
        if dist < eig_sep {
            if dist > 1e-2 * eig_sep {
                return Err(Error::IllSeparated {
                    value: format!("{l}"),
                    distance: dist,
                });
            }
            unit.push(i);
        }
    }
    Ok(assemble_spectral(u, &basis, &lambdas, &unit))
}

/// Same split with a prescribed size of the unit block: the `unit_count`
/// eigenvalues closest to 1 are taken as 1. Fails unless they lie within
/// `max_unit_dist` of 1 and the rest are at least `min_ratio` times farther.
///
/// Needed when the eigenvalue 1 is multiple: a cluster of multiplicity `r`
/// moves by about `delta^(1/r)` under a data perturbation `delta`.
pub fn unitary_spectral_with_unit_count(
    u: &CMat,
    unit_count: usize,
    max_unit_dist: f64,
    min_ratio: f64,
) -> Result<SpectralData> {
    let n = u.nrows();
    if unit_count > n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: unit_count,
        });
    }
    let (basis, lambdas) = unitary_eigen(u)?;
    let mut idx: Vec<usize> = (0..n).collect();
    let dist = |i: usize| (lambdas[i] - cone()).norm();
    idx.sort_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
    let unit: Vec<usize> = idx[..unit_count].to_vec();
    let worst_unit = unit.iter().map(|&i| dist(i)).fold(0.0, f64::max);
    let nearest_other = idx[unit_count..].iter().map(|&i| dist(i)).fold(f64::INFINITY, f64::min);
    if worst_unit > max_unit_dist || nearest_other < min_ratio * worst_unit {
        return Err(Error::IllSeparated {
            value: format!("unit block of size {unit_count}"),
            distance: worst_unit,
        });
    }
    let mut unit_sorted = unit;
    unit_sorted.sort_unstable();
    Ok(assemble_spectral(u, &basis, &lambdas, &unit_sorted))
}

/// Eigenvectors and eigenvalues of a unitary by joint diagonalization of
/// `(U + U*)/2` and `(U - U*)/(2i)`.
fn unitary_eigen(u: &CMat) -> Result<(CMat, Vec<C64>)> {
    let n = u.nrows();
    let defect = unitarity_defect(u);
    if defect > 1e-8 {
        return Err(Error::NotUnitary(defect));
    }
    let half = C64::new(0.5, 0.0);
    let re_part = (u + u.adjoint()) * half;
    let im_part = (u - u.adjoint()) * C64::new(0.0, -0.5);
    let (vals, q) = hermitian_eig(&re_part)?;
    let mut basis = CMat::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] <= GROUP_TOL {
            end += 1;
        }
        let block = q.columns(start, end - start).into_owned();
        if end - start == 1 {
            basis.set_column(start, &block.column(0));
        } else {
            let inner = block.adjoint() * &im_part * &block;
            let inner = (&inner + inner.adjoint()) * half;
            let (_, w) = hermitian_eig(&inner)?;
            let rotated = &block * w;
            for j in 0..end - start {
                basis.set_column(start + j, &rotated.column(j));
            }
        }
        start = end;
    }
    let t = basis.adjoint() * u * &basis;
    let lambdas: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    Ok((basis, lambdas))
}

fn assemble_spectral(u: &CMat, basis: &CMat, lambdas: &[C64], unit: &[usize]) -> SpectralData {
    let n = u.nrows();
    let nonunit: Vec<usize> = (0..n).filter(|i| !unit.contains(i)).collect();
    let unit_spread = unit.iter().map(|&i| (lambdas[i] - cone()).norm()).fold(0.0, f64::max);

    let order: Vec<usize> = nonunit.iter().chain(unit.iter()).copied().collect();
    let v = CMat::from_fn(n, n, |i, j| basis[(i, order[j])]);
    let uvals: Vec<C64> = nonunit.iter().map(|&i| lambdas[i] / lambdas[i].norm()).collect();
    let min_gap = uvals
        .iter()
        .map(|l| (l - cone()).norm())
        .fold(f64::INFINITY, f64::min);
    let mut d = CMat::identity(n, n);
    for (j, &l) in uvals.iter().enumerate() {
        d[(j, j)] = l;
    }
    let residual = fro_norm(&(u - &v * d * v.adjoint()));
    SpectralData {
        v,
        k: uvals.len(),
        u: uvals,
        total_dim: n,
        min_gap,
        unit_spread,
        residual,
    }
}

/// `a_j = i (1 + u_j) / (1 - u_j)`, real for unimodular `u_j`.
pub fn cayley_diagonal(u: &[C64], eig_sep: f64) -> Result<Vec<f64>> {
    u.iter()
        .map(|&z| {
            if (z - cone()).norm() < eig_sep {
                return Err(Error::EigenvalueAtOne(format!("{z}")));
            }
            let z = z / z.norm();
            let a = C64::new(0.0, 1.0) * (cone() + z) / (cone() - z);
            Ok(a.re)
        })
        .collect()
}

/// Paired vectors for the lurking-isometry extension: the unitary must send
/// `left[i]` to `right[i]`.
#[derive(Clone, Debug, Default)]
pub struct IsometryPairs {
    pub left: Vec<Vec<C64>>,
    pub right: Vec<Vec<C64>>,
}

impl IsometryPairs {
    pub fn dim(&self) -> usize {
        self.left.first().map_or(0, |v| v.len())
    }

    fn as_columns(vs: &[Vec<C64>], dim: usize) -> CMat {
        CMat::from_fn(dim, vs.len(), |i, j| vs[j][i])
    }

    /// `max |Gram(left) - Gram(right)|` and `max |Gram(left)|`.
    pub fn gram_mismatch(&self) -> (f64, f64) {
        let dim = self.dim();
        let l = Self::as_columns(&self.left, dim);
        let r = Self::as_columns(&self.right, dim);
        let gl = l.adjoint() * &l;
        let gr = r.adjoint() * &r;
        (max_abs(&(&gl - &gr)), max_abs(&gl).max(max_abs(&gr)))
    }
}

/// Result of [`lurking_isometry`] with its diagnostics.
#[derive(Clone, Debug)]
pub struct Isometry {
    pub u: CMat,
    pub gram_mismatch: f64,
    pub span_rank: usize,
    /// `max_i |U l_i - r_i| / max(1, max_i |l_i|)`.
    pub pair_error: f64,
}

/// Extends the Gram-preserving correspondence `left[i] -> right[i]` to a
/// unitary. `pair_tol` is relative to the largest Gram entry.
pub fn lurking_isometry(pairs: &IsometryPairs, pair_tol: f64) -> Result<Isometry> {
    let dim = pairs.dim();
    if pairs.left.len() != pairs.right.len() {
        return Err(Error::DimensionMismatch {
            expected: pairs.left.len(),
            got: pairs.right.len(),
        });
    }
    for v in pairs.left.iter().chain(&pairs.right) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let (mismatch, scale) = pairs.gram_mismatch();
    let tol = pair_tol * scale.max(f64::MIN_POSITIVE);
    if mismatch > tol {
        return Err(Error::GramMismatch { mismatch, tol });
    }
    let l = IsometryPairs::as_columns(&pairs.left, dim);
    let r = IsometryPairs::as_columns(&pairs.right, dim);
    let m = pairs.left.len();
    let u = if m == 0 || scale == 0.0 {
        (CMat::identity(dim, dim), 0)
    } else {
        // orthonormal bases of the two spans related by the same coefficients
        let gram = (l.adjoint() * &l + r.adjoint() * &r) * C64::new(0.5, 0.0);
        let (vals, w) = hermitian_eig(&gram)?;
        let top = vals.last().copied().unwrap_or(0.0);
        let keep: Vec<usize> = (0..m).filter(|&i| vals[i] > 1e-12 * top).collect();
        let coef = CMat::from_fn(m, keep.len(), |i, j| {
            w[(i, keep[j])] / vals[keep[j]].sqrt()
        });
        let b = orthonormalize(&(&l * &coef));
        let c = orthonormalize(&(&r * &coef));
        let b_full = complete_basis(&b);
        let c_full = complete_basis(&c);
        (polar_polish(&c_full * b_full.adjoint()), keep.len())
    };
    let (u, span_rank) = u;
    let lnorm = pairs
        .left
        .iter()
        .map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(1.0, f64::max);
    let mapped = &u * &l;
    let pair_error = (0..m)
        .map(|j| {
            (0..dim)
                .map(|i| (mapped[(i, j)] - r[(i, j)]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
        / lnorm;
    Ok(Isometry {
        u,
        gram_mismatch: mismatch,
        span_rank,
        pair_error,
    })
}

/// Löwdin orthonormalization `B (B* B)^{-1/2}`.
fn orthonormalize(b: &CMat) -> CMat {
    if b.ncols() == 0 {
        return b.clone();
    }
    let g = b.adjoint() * b;
    let (vals, w) = hermitian_eig(&((&g + g.adjoint()) * C64::new(0.5, 0.0)))
        .expect("Gram matrix is self-adjoint");
    let inv_sqrt = CMat::from_fn(vals.len(), vals.len(), |i, j| {
        if i == j {
            C64::new(1.0 / vals[i].max(f64::MIN_POSITIVE).sqrt(), 0.0)
        } else {
            czero()
        }
    });
    b * (&w * inv_sqrt * w.adjoint())
}

/// Appends an orthonormal basis of the orthogonal complement of the columns
/// of `b` (assumed orthonormal).
fn complete_basis(b: &CMat) -> CMat {
    let n = b.nrows();
    let k = b.ncols();
    let proj = CMat::identity(n, n) - b * b.adjoint();
    let proj = (&proj + proj.adjoint()) * C64::new(0.5, 0.0);
    let (vals, w) = hermitian_eig(&proj).expect("projector is self-adjoint");
    let mut out = CMat::zeros(n, n);
    for j in 0..k {
        out.set_column(j, &b.column(j));
    }
    // eigenvalue-1 eigenvectors of I - BB*, largest first
    for (slot, idx) in (0..n).rev().take(n - k).enumerate() {
        debug_assert!(vals[idx] > 0.5);
        out.set_column(k + slot, &w.column(idx));
    }
    out
}

/// Newton–Schulz iteration towards the nearest unitary.
fn polar_polish(mut u: CMat) -> CMat {
    let n = u.nrows();
    let eye = CMat::identity(n, n);
    for _ in 0..8 {
        let defect = unitarity_defect(&u);
        if defect < 1e-15 * (n as f64).sqrt() {
            break;
        }
        u = &u * (&eye * C64::new(3.0, 0.0) - u.adjoint() * &u) * C64::new(0.5, 0.0);
    }
    u
}

/// Singular values and numerical rank.
#[derive(Clone, Debug, Serialize)]
pub struct RankInfo {
    pub rank: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Ratio between the last kept and first dropped singular value
    /// (infinity when nothing is dropped or kept).
    pub gap_ratio: f64,
    /// Gap ratio below 10.
    pub ambiguous: bool,
}

/// Number of singular values above `tol * sigma_max`.
///
/// Self-adjoint input uses `|eigenvalues|` directly; other matrices use the
/// square roots of the eigenvalues of `M* M`.
pub fn rank_tol(m: &CMat, tol: f64) -> RankInfo {
    let norm = fro_norm(m);
    let mut sv: Vec<f64> = if norm == 0.0 {
        vec![0.0; m.ncols()]
    } else if m.nrows() == m.ncols() && hermitian_defect(m) <= 1e-12 * norm {
        let (vals, _) = hermitian_eig(m).expect("checked self-adjoint");
        vals.iter().map(|v| v.abs()).collect()
    } else {
        let g = m.adjoint() * m;
        let (vals, _) = hermitian_eig(&((&g + g.adjoint()) * C64::new(0.5, 0.0)))
            .expect("Gram matrix is self-adjoint");
        vals.iter().map(|v| v.max(0.0).sqrt()).collect()
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = if top == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > tol * top).count()
    };
    let gap_ratio = if rank == 0 || rank == sv.len() {
        f64::INFINITY
    } else if sv[rank] == 0.0 {
        f64::INFINITY
    } else {
        sv[rank - 1] / sv[rank]
    };
    RankInfo {
        rank,
        singular_values: sv,
        gap_ratio,
        ambiguous: gap_ratio < 10.0,
    }
}

/// Smallest eigenvalue of a self-adjoint matrix relative to its norm.
pub fn min_eig_rel(m: &CMat) -> Result<f64> {
    let (vals, _) = hermitian_eig(m)?;
    let norm = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(if norm == 0.0 { 0.0 } else { vals[0] / norm })
}

/// Random complex matrix with i.i.d. standard normal real and imaginary parts.
pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Random Hermitian matrix `(G + G*)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_complex(rng, n, n);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// Haar-like random unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_complex(rng, n, n);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // fix phases so the distribution does not depend on the QR convention
    let mut out = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() == 0.0 { cone() } else { d / d.norm() };
        for i in 0..n {
            out[(i, j)] = q[(i, j)] * ph;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn real_mat(rows: &[&[f64]]) -> CMat {
        CMat::from_fn(rows.len(), rows[0].len(), |i, j| c(rows[i][j], 0.0))
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let (vals, _) = hermitian_eig(&diag_real(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn swap_matrix_eigenvectors() {
        let (vals, q) = hermitian_eig(&real_mat(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-15 && (vals[1] - 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // eigenvector for -1 is (1, -1)/sqrt2 up to phase
        let v0 = q.column(0);
        assert!(((v0[0] + v0[1]).norm()) < 1e-14);
        assert!((v0[0].norm() - s).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = real_mat(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 5, 17, 50] {
            let h = random_hermitian(&mut rng, n);
            let (vals, q) = hermitian_eig(&h).unwrap();
            let back = &q * diag_real(&vals) * q.adjoint();
            assert!(fro_norm(&(&back - &h)) <= 1e-10 * fro_norm(&h), "n = {n}");
            assert!(unitarity_defect(&q) < 1e-12);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn spectral_identity_and_minus_one() {
        let s = unitary_spectral(&CMat::identity(3, 3), EIG_SEP).unwrap();
        assert_eq!(s.k, 0);
        let m = CMat::from_element(1, 1, c(-1.0, 0.0));
        let s = unitary_spectral(&m, EIG_SEP).unwrap();
        assert_eq!(s.k, 1);
        assert!((s.u[0] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn spectral_random_unitary_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 4, 8, 12] {
            let u = random_unitary(&mut rng, n);
            let s = unitary_spectral(&u, EIG_SEP).unwrap();
            assert!(s.residual <= 1e-10, "n = {n}, residual {}", s.residual);
            assert!(s.u.iter().all(|z| (z.norm() - 1.0).abs() < 1e-10));
            assert_eq!(s.k, n);
        }
    }

    #[test]
    fn spectral_detects_unit_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_unitary(&mut rng, 5);
        let mut d = CMat::identity(5, 5);
        d[(0, 0)] = c(0.0, 1.0);
        d[(1, 1)] = c(-1.0, 0.0);
        d[(2, 2)] = c(0.0, -1.0);
        let u = &w * d * w.adjoint();
        let s = unitary_spectral(&u, EIG_SEP).unwrap();
        assert_eq!(s.k, 3);
        assert!(s.residual < 1e-10);
        assert_eq!(s.k + (s.total_dim - s.k), 5);
    }

    #[test]
    fn spectral_ill_separated() {
        let mut d = CMat::identity(2, 2);
        d[(0, 0)] = C64::from_polar(1.0, 1e-7);
        assert!(matches!(
            unitary_spectral(&d, EIG_SEP),
            Err(Error::IllSeparated { .. })
        ));
    }

    #[test]
    fn cayley_diagonal_examples() {
        assert_eq!(cayley_diagonal(&[c(-1.0, 0.0)], EIG_SEP).unwrap(), vec![0.0]);
        let a = cayley_diagonal(&[c(0.0, 1.0)], EIG_SEP).unwrap();
        assert!((a[0] + 1.0).abs() < 1e-15);
        let theta = std::f64::consts::FRAC_PI_3;
        let a = cayley_diagonal(&[C64::from_polar(1.0, theta)], EIG_SEP).unwrap();
        assert!((a[0] + 1.0 / (theta / 2.0).tan()).abs() < 1e-12);
        assert!(matches!(
            cayley_diagonal(&[c(1.0, 0.0)], EIG_SEP),
            Err(Error::EigenvalueAtOne(_))
        ));
    }

    #[test]
    fn isometry_basis_vector() {
        let pairs = IsometryPairs {
            left: vec![vec![c(1.0, 0.0), c(0.0, 0.0)]],
            right: vec![vec![c(0.0, 0.0), c(1.0, 0.0)]],
        };
        let iso = lurking_isometry(&pairs, 1e-8).unwrap();
        assert!(unitarity_defect(&iso.u) < 1e-12);
        assert!((iso.u[(1, 0)] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn isometry_identity_on_basis() {
        let basis: Vec<Vec<C64>> = (0..3)
            .map(|i| (0..3).map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        let pairs = IsometryPairs {
            left: basis.clone(),
            right: basis,
        };
        let iso = lurking_isometry(&pairs, 1e-8).unwrap();
        assert!(fro_norm(&(&iso.u - CMat::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn isometry_recovers_known_unitary_on_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_unitary(&mut rng, 6);
        let left_m = random_complex(&mut rng, 6, 3);
        let right_m = &w * &left_m;
        let pairs = IsometryPairs {
            left: (0..3).map(|j| left_m.column(j).iter().copied().collect()).collect(),
            right: (0..3).map(|j| right_m.column(j).iter().copied().collect()).collect(),
        };
        let iso = lurking_isometry(&pairs, 1e-8).unwrap();
        assert!(unitarity_defect(&iso.u) < 1e-10);
        assert!(iso.pair_error < 1e-10);
        let probe = &left_m * random_complex(&mut rng, 3, 1);
        assert!(fro_norm(&(&iso.u * &probe - &w * &probe)) < 1e-10 * fro_norm(&probe));
    }

    #[test]
    fn isometry_rejects_mismatched_gram() {
        let pairs = IsometryPairs {
            left: vec![vec![c(1.0, 0.0), c(0.0, 0.0)]],
            right: vec![vec![c(2.0, 0.0), c(0.0, 0.0)]],
        };
        assert!(matches!(
            lurking_isometry(&pairs, 1e-8),
            Err(Error::GramMismatch { .. })
        ));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_tol(&diag_real(&[0.0, 1.0, -1.0]), 1e-8).rank, 2);
        assert_eq!(rank_tol(&diag_real(&[1.0, 0.0, 0.0]), 1e-8).rank, 1);
        assert_eq!(rank_tol(&CMat::zeros(3, 3), 1e-8).rank, 0);
        let m = real_mat(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]);
        let info = rank_tol(&m, 1e-8);
        assert_eq!(info.rank, 1);
        assert!(!info.ambiguous);
    }

    #[test]
    fn lu_determinant() {
        let m = real_mat(&[&[0.0, 2.0], &[3.0, 1.0]]);
        assert!((det(&m) - c(-6.0, 0.0)).norm() < 1e-15);
        assert_eq!(det(&(CMat::identity(3, 3) * c(2.0, 0.0))), c(8.0, 0.0));
    }
}
