//! Univariate complex root finding and region counting.
//!
//! Roots are the eigenvalues of the balanced companion matrix, computed by a
//! shifted complex QR iteration on the (already Hessenberg) companion form,
//! then polished with a few Newton steps on the original coefficients.
//! Clusters that are numerically a multiple root are replaced by their
//! centroid, which is far more accurate than the individual eigenvalues.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::C64;

/// Leading coefficients below this fraction of the coefficient norm are
/// trimmed before solving.
pub const LEADING_TRIM_REL: f64 = 1e-12;

/// Default boundary tolerance for region classification.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-8;

const NEWTON_STEPS: usize = 5;
const CLUSTER_RADII: [f64; 6] = [1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2];
const MULTIPLE_ROOT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct RootSet {
    pub roots: Vec<C64>,
    /// `|u(r)| / sum_k |c_k| |r|^k` per root.
    pub residuals: Vec<f64>,
    pub tol: f64,
    /// Number of leading coefficients trimmed as numerically zero.
    pub degree_drop: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Region {
    /// `Im z > 0`
    Uhp,
    /// `Im z < 0`
    Lhp,
    /// `|Im z| <= tol (1 + |z|)`
    Real,
    /// `|z| < 1`
    Disk,
    /// `|z| > 1`
    Exterior,
    /// `||z| - 1| <= tol`
    Circle,
}

impl RootSet {
    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Roots of a univariate [`Polynomial`].
pub fn roots(u: &Polynomial) -> Result<RootSet> {
    roots_of_coeffs(&u.univariate_coeffs()?, DEFAULT_BOUNDARY_TOL)
}

/// Roots of `sum_k coeffs[k] t^k`.
pub fn roots_of_coeffs(coeffs: &[C64], tol: f64) -> Result<RootSet> {
    let norm = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if norm == 0.0 {
        return Err(Error::ZeroPolynomial);
    }
    let mut deg = coeffs.len() - 1;
    while coeffs[deg].norm() < LEADING_TRIM_REL * norm {
        deg -= 1;
    }
    let degree_drop = coeffs.len() - 1 - deg;
    let work = &coeffs[..=deg];

    // exact zero roots first
    let mut zeros = 0;
    while zeros < deg && work[zeros] == C64::new(0.0, 0.0) {
        zeros += 1;
    }
    let reduced = &work[zeros..];
    let mut found = vec![C64::new(0.0, 0.0); zeros];
    if reduced.len() > 1 {
        let eig = companion_eigenvalues(reduced)?;
        found.extend(merge_clusters(work, eig));
    }
    let residuals = found.iter().map(|&r| backward_error(work, r)).collect();
    Ok(RootSet {
        roots: found,
        residuals,
        tol,
        degree_drop,
    })
}

fn horner(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn backward_error(coeffs: &[C64], z: C64) -> f64 {
    let (p, _) = horner(coeffs, z);
    let scale: f64 = coeffs
        .iter()
        .rev()
        .fold(0.0, |acc, c| acc * z.norm() + c.norm());
    if scale == 0.0 {
        0.0
    } else {
        p.norm() / scale
    }
}

fn derivative(coeffs: &[C64]) -> Vec<C64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// True when the first `m` derivatives vanish at `z` up to backward error.
fn is_multiple_root(coeffs: &[C64], z: C64, m: usize) -> bool {
    let mut d = coeffs.to_vec();
    for _ in 0..m {
        if d.is_empty() || backward_error(&d, z) > MULTIPLE_ROOT_TOL {
            return false;
        }
        d = derivative(&d);
    }
    true
}

/// Single-linkage clustering of the raw eigenvalues at increasing radii;
/// a component is merged into its centroid only when the centroid passes
/// the multiple-root test. Unmerged roots are Newton polished.
fn merge_clusters(coeffs: &[C64], roots: Vec<C64>) -> Vec<C64> {
    let mut clusters: Vec<(C64, usize)> = roots.into_iter().map(|r| (r, 1)).collect();
    for radius in CLUSTER_RADII {
        let n = clusters.len();
        let mut comp: Vec<usize> = (0..n).collect();
        fn find(comp: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while comp[r] != r {
                r = comp[r];
            }
            comp[i] = r;
            r
        }
        for i in 0..n {
            for j in i + 1..n {
                let (ci, _) = clusters[i];
                let (cj, _) = clusters[j];
                if (ci - cj).norm() <= radius * (1.0 + ci.norm().max(cj.norm())) {
                    let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                    if a != b {
                        comp[b.max(a)] = a.min(b);
                    }
                }
            }
        }
        let mut next: Vec<(C64, usize)> = Vec::new();
        for root in 0..n {
            if find(&mut comp, root) != root {
                continue;
            }
            let members: Vec<usize> = (0..n).filter(|&i| find(&mut comp, i) == root).collect();
            if members.len() == 1 {
                next.push(clusters[root]);
                continue;
            }
            let m: usize = members.iter().map(|&i| clusters[i].1).sum();
            let c = members
                .iter()
                .map(|&i| clusters[i].0 * clusters[i].1 as f64)
                .sum::<C64>()
                / m as f64;
            if is_multiple_root(coeffs, c, m) {
                next.push((c, m));
            } else {
                next.extend(members.iter().map(|&i| clusters[i]));
            }
        }
        clusters = next;
    }
    clusters
        .into_iter()
        .flat_map(|(c, m)| {
            let z = if m == 1 { newton_polish(coeffs, c) } else { c };
            std::iter::repeat_n(z, m)
        })
        .collect()
}

fn newton_polish(coeffs: &[C64], mut z: C64) -> C64 {
    let mut err = horner(coeffs, z).0.norm();
    for _ in 0..NEWTON_STEPS {
        let (p, dp) = horner(coeffs, z);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let cand_err = horner(coeffs, cand).0.norm();
        if !(cand_err < err) {
            break;
        }
        z = cand;
        err = cand_err;
    }
    z
}

/// Eigenvalues of the companion matrix of `coeffs` (ascending, nonzero
/// leading coefficient).
fn companion_eigenvalues(coeffs: &[C64]) -> Result<Vec<C64>> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let mut h = vec![vec![C64::new(0.0, 0.0); n]; n];
    for j in 0..n {
        h[0][j] = -coeffs[n - 1 - j] / lead;
    }
    for i in 1..n {
        h[i][i - 1] = C64::new(1.0, 0.0);
    }
    balance(&mut h);
    hessenberg_qr(h)
}

/// Parlett–Reinsch balancing with powers of two; keeps Hessenberg form.
fn balance(h: &mut [Vec<C64>]) {
    let n = h.len();
    let radix = 2.0f64;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += h[j][i].norm();
                    r += h[i][j].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    h[i][j] /= f;
                }
                for row in h.iter_mut() {
                    row[i] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Shifted QR on an upper Hessenberg matrix; eigenvalues only.
fn hessenberg_qr(mut h: Vec<Vec<C64>>) -> Result<Vec<C64>> {
    let n = h.len();
    let eps = f64::EPSILON;
    let max_iter = 60 * n.max(1);
    let mut eig = Vec::with_capacity(n);
    let mut hi = n as isize - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi >= 0 {
        let hu = hi as usize;
        if hu == 0 {
            eig.push(h[0][0]);
            break;
        }
        let mut l = hu;
        while l > 0 {
            let s = h[l - 1][l - 1].norm() + h[l][l].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[l][l - 1].norm() <= eps * s {
                h[l][l - 1] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hu {
            eig.push(h[hu][hu]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iter {
            return Err(Error::EigenNoConvergence(total));
        }
        let mu = if iter % 11 == 10 {
            // exceptional shift
            h[hu][hu] + C64::new(0.75, 0.5) * h[hu][hu - 1].norm()
        } else {
            wilkinson_shift(
                h[hu - 1][hu - 1],
                h[hu - 1][hu],
                h[hu][hu - 1],
                h[hu][hu],
            )
        };
        for k in l..=hu {
            h[k][k] -= mu;
        }
        let mut rots = Vec::with_capacity(hu - l);
        for k in l..hu {
            let x = h[k][k];
            let y = h[k + 1][k];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
            } else {
                (x / r, y / r)
            };
            for j in k..=hu {
                let a = h[k][j];
                let b = h[k + 1][j];
                h[k][j] = c.conj() * a + s.conj() * b;
                h[k + 1][j] = -s * a + c * b;
            }
            rots.push((c, s));
        }
        for (idx, k) in (l..hu).enumerate() {
            let (c, s) = rots[idx];
            let top = (k + 2).min(hu);
            for row in h.iter_mut().take(top + 1).skip(l) {
                let a = row[k];
                let b = row[k + 1];
                row[k] = a * c + b * s;
                row[k + 1] = -a * s.conj() + b * c.conj();
            }
        }
        for k in l..=hu {
            h[k][k] += mu;
        }
    }
    Ok(eig)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m = (a + d) * 0.5;
    let e1 = m + disc;
    let e2 = m - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

fn classify(z: C64, tol: f64, region: Region) -> (bool, bool) {
    // (inside, on the boundary band)
    match region {
        Region::Uhp | Region::Lhp | Region::Real => {
            let band = z.im.abs() <= tol * (1.0 + z.norm());
            let inside = match region {
                Region::Uhp => !band && z.im > 0.0,
                Region::Lhp => !band && z.im < 0.0,
                _ => band,
            };
            (inside, band)
        }
        Region::Disk | Region::Exterior | Region::Circle => {
            let band = (z.norm() - 1.0).abs() <= tol;
            let inside = match region {
                Region::Disk => !band && z.norm() < 1.0,
                Region::Exterior => !band && z.norm() > 1.0,
                _ => band,
            };
            (inside, band)
        }
    }
}

/// Counts roots strictly inside `region`. Roots within the boundary band
/// count as [`Region::Real`] / [`Region::Circle`]; with `strict` set, any
/// such root makes the count for an open region an error instead.
pub fn count_region(rs: &RootSet, region: Region, strict: bool) -> Result<usize> {
    let mut count = 0;
    for &z in &rs.roots {
        let (inside, band) = classify(z, rs.tol, region);
        if strict && band && !matches!(region, Region::Real | Region::Circle) {
            return Err(Error::AmbiguousRoot {
                root: format!("{z}"),
                tol: rs.tol,
            });
        }
        if inside {
            count += 1;
        }
    }
    Ok(count)
}

/// Largest `|Im r| / (1 + |r|)` over the roots (0 when there are none).
pub fn max_normalized_imag(rs: &RootSet) -> (f64, Option<C64>) {
    let mut worst = 0.0;
    let mut at = None;
    for &r in &rs.roots {
        let v = r.im.abs() / (1.0 + r.norm());
        if at.is_none() || v > worst {
            worst = v;
            at = Some(r);
        }
    }
    (worst, at)
}

/// True iff every root satisfies `|Im r| <= tol (1 + |r|)`.
pub fn all_real(u: &Polynomial, tol: f64) -> Result<bool> {
    let rs = roots(u)?;
    Ok(max_normalized_imag(&rs).0 <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn t_squared_plus_one() {
        let rs = roots(&parse_poly("t^2 + 1", &["t"]).unwrap()).unwrap();
        let r = sorted(rs.roots.clone());
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert_eq!(count_region(&rs, Region::Real, false).unwrap(), 0);
    }

    #[test]
    fn cubic_slice_quadratic_formula() {
        let u = parse_poly("2*t - (1 + 3*t^2)*i", &["t"]).unwrap();
        let rs = roots(&u).unwrap();
        // quadratic formula: -3i t^2 + 2t - i = 0
        let (a, b, cc) = (c(0.0, -3.0), c(2.0, 0.0), c(0.0, -1.0));
        let disc = (b * b - a * cc * 4.0).sqrt();
        let oracle = [(-b + disc) / (a * 2.0), (-b - disc) / (a * 2.0)];
        assert!((oracle[0] - c(0.0, 1.0 / 3.0)).norm() < 1e-15);
        assert!((oracle[1] - c(0.0, -1.0)).norm() < 1e-15);
        for o in oracle {
            assert!(rs.roots.iter().any(|r| (r - o).norm() < 1e-12));
        }
        assert_eq!(count_region(&rs, Region::Uhp, true).unwrap(), 1);
        assert_eq!(count_region(&rs, Region::Lhp, true).unwrap(), 1);
    }

    #[test]
    fn cubic_with_known_roots() {
        let u = parse_poly("(t-1)*(t-2)*(t-3)", &["t"]).unwrap();
        let rs = roots(&u).unwrap();
        let r = sorted(rs.roots);
        for (k, z) in r.iter().enumerate() {
            assert!((z - c(k as f64 + 1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_polynomial_is_an_error() {
        assert!(matches!(
            roots_of_coeffs(&[c(0.0, 0.0)], 1e-8),
            Err(Error::ZeroPolynomial)
        ));
    }

    #[test]
    fn near_zero_leading_coefficient_is_trimmed() {
        let rs = roots_of_coeffs(&[c(-1.0, 0.0), c(1.0, 0.0), c(1e-15, 0.0)], 1e-8).unwrap();
        assert_eq!(rs.degree(), 1);
        assert_eq!(rs.degree_drop, 1);
        assert!((rs.roots[0] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn strict_count_flags_boundary_roots() {
        let rs = roots(&parse_poly("t^2 - 1", &["t"]).unwrap()).unwrap();
        assert_eq!(count_region(&rs, Region::Uhp, false).unwrap(), 0);
        assert!(matches!(
            count_region(&rs, Region::Uhp, true),
            Err(Error::AmbiguousRoot { .. })
        ));
        assert_eq!(count_region(&rs, Region::Circle, false).unwrap(), 2);
    }

    #[test]
    fn all_real_examples() {
        assert!(all_real(&parse_poly("t^2 - 1", &["t"]).unwrap(), 1e-8).unwrap());
        assert!(!all_real(&parse_poly("t^2 + 1", &["t"]).unwrap(), 1e-8).unwrap());
    }

    #[test]
    fn zero_roots_are_exact() {
        let rs = roots(&parse_poly("t^3 - t^2", &["t"]).unwrap()).unwrap();
        assert_eq!(rs.roots.iter().filter(|z| z.norm() == 0.0).count(), 2);
    }

    #[test]
    fn multiple_roots_merge_to_centroid() {
        let rs = roots(&parse_poly("(t - 2)^3 * (t + 1)^2", &["t"]).unwrap()).unwrap();
        assert!(rs.roots.iter().all(|z| z.im.abs() < 1e-10), "{:?}", rs.roots);
        assert_eq!(rs.roots.iter().filter(|z| (*z - c(2.0, 0.0)).norm() < 1e-10).count(), 3);
        assert!(all_real(&parse_poly("(t - 0.5)^6", &["t"]).unwrap(), 1e-7).unwrap());
    }

    #[test]
    fn close_conjugate_pair_is_not_merged() {
        let rs = roots(&parse_poly("t^2 + 1/1000000", &["t"]).unwrap()).unwrap();
        assert_eq!(count_region(&rs, Region::Uhp, false).unwrap(), 1);
        assert_eq!(count_region(&rs, Region::Lhp, false).unwrap(), 1);
    }

    fn root_strategy() -> impl Strategy<Value = C64> {
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| c(a, b))
    }

    proptest! {
        #[test]
        fn product_of_linear_factors_reproduces_monic(rts in prop::collection::vec(root_strategy(), 1..9)) {
            let mut coeffs = vec![c(1.0, 0.0)];
            for r in &rts {
                coeffs = crate::poly::univariate_mul(&coeffs, &[-r, c(1.0, 0.0)]);
            }
            let rs = roots_of_coeffs(&coeffs, 1e-8).unwrap();
            prop_assert_eq!(rs.degree(), rts.len());
            prop_assert!(rs.max_residual() <= 1e-8);
            let mut back = vec![c(1.0, 0.0)];
            for r in &rs.roots {
                back = crate::poly::univariate_mul(&back, &[-r, c(1.0, 0.0)]);
            }
            let scale = coeffs.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for (a, b) in coeffs.iter().zip(&back) {
                prop_assert!((a - b).norm() <= 1e-8 * scale);
            }
            let total = rs.degree();
            let half = count_region(&rs, Region::Uhp, false).unwrap()
                + count_region(&rs, Region::Lhp, false).unwrap()
                + count_region(&rs, Region::Real, false).unwrap();
            let disk = count_region(&rs, Region::Disk, false).unwrap()
                + count_region(&rs, Region::Exterior, false).unwrap()
                + count_region(&rs, Region::Circle, false).unwrap();
            prop_assert_eq!(half, total);
            prop_assert_eq!(disk, total);
        }
    }
}
