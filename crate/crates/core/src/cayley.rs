//! Half-plane / polydisk coordinate changes and the derivative splitting of
//! a self-reflective polynomial.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{var_names, Polynomial};
use crate::uniroots;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
/// Coefficient tolerance for self-reflectivity and the splitting identity.
pub const IDENTITY_TOL: f64 = 1e-10;

/// `w -> i (1 + w) / (1 - w)` as Möbius coefficients `(a, b, c, d)`.
pub const TO_HALFPLANE: [C64; 4] = [I, I, C64::new(-1.0, 0.0), ONE];
/// `z -> (z - i) / (z + i)`.
pub const TO_DISK: [C64; 4] = [ONE, C64::new(0.0, -1.0), ONE, I];

#[derive(Clone, Debug, PartialEq)]
pub struct DiskForm {
    pub p_disk: Polynomial,
    /// Clearing exponents per variable.
    pub degs: Vec<u32>,
    pub source: Polynomial,
}

fn check_degs(p: &Polynomial, degs: &[u32]) -> Result<()> {
    if degs.len() != p.nvars() {
        return Err(Error::DimensionMismatch {
            expected: p.nvars(),
            got: degs.len(),
        });
    }
    let have = p.degrees();
    if have.iter().zip(degs).any(|(h, d)| h > d) {
        return Err(Error::NotDominated {
            multidegree: degs.to_vec(),
            degrees: have,
        });
    }
    Ok(())
}

/// `q(i(1+z)/(1-z)) * prod_j ((1 - z_j) / (2i))^{degs_j}` over `z1, z2, ...`.
pub fn disk_from_halfplane(q: &Polynomial, degs: &[u32]) -> Result<DiskForm> {
    check_degs(q, degs)?;
    let mut p = q.clone();
    for (j, &k) in degs.iter().enumerate() {
        p = p.mobius_substitute(j, TO_HALFPLANE, k)?;
        p = p.scale((I * 2.0).powi(-(k as i32)));
    }
    let p_disk = p.with_var_names(&var_names("z", 1, q.nvars()))?;
    Ok(DiskForm {
        p_disk,
        degs: degs.to_vec(),
        source: q.clone(),
    })
}

/// `p((z - i)/(z + i)) * prod_j (z_j + i)^{degs_j}` over `x1, x2, ...`.
pub fn halfplane_from_disk(p: &Polynomial, degs: &[u32]) -> Result<Polynomial> {
    check_degs(p, degs)?;
    let mut q = p.clone();
    for (j, &k) in degs.iter().enumerate() {
        q = q.mobius_substitute(j, TO_DISK, k)?;
    }
    q.with_var_names(&var_names("x", 1, p.nvars()))
}

/// `z^md / z_j * conj(d_j f (1 / conj z))`.
pub fn tilde_partial(f: &Polynomial, j: usize, multidegree: &[u32]) -> Result<Polynomial> {
    if multidegree.len() != f.nvars() {
        return Err(Error::DimensionMismatch {
            expected: f.nvars(),
            got: multidegree.len(),
        });
    }
    if multidegree[j] == 0 {
        if f.degree_in(j) == 0 {
            return Ok(Polynomial::zero(f.var_names()));
        }
        return Err(Error::NotDominated {
            multidegree: multidegree.to_vec(),
            degrees: f.degrees(),
        });
    }
    let mut md = multidegree.to_vec();
    md[j] -= 1;
    f.partial(j)?.reflect(&md)
}

/// Output of the derivative splitting `(sum md_j) f = p + p_tilde`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitF {
    pub p: Polynomial,
    pub p_tilde: Polynomial,
    /// Sum of the multidegree entries over the split variables.
    pub weight: u32,
    pub identity_residual: f64,
    pub reflection_residual: f64,
}

/// Splits over the variables in `vars`:
/// `p = sum tilde_partial(f, j)`, `p_tilde = sum z_j d_j f`.
pub fn split_f_vars(f: &Polynomial, multidegree: &[u32], vars: &[usize]) -> Result<SplitF> {
    let scale = f.max_coeff().max(f64::MIN_POSITIVE);
    let reflected = f.reflect(multidegree)?;
    let reflection_residual = reflected.max_abs_diff(f) / scale;
    if reflection_residual > IDENTITY_TOL {
        return Err(Error::IdentityViolation(format!(
            "f is not self-reflective: residual {reflection_residual:e}"
        )));
    }
    let mut p = Polynomial::zero(f.var_names());
    let mut p_tilde = Polynomial::zero(f.var_names());
    let mut weight = 0;
    for &j in vars {
        p = &p + &tilde_partial(f, j, multidegree)?;
        p_tilde = &p_tilde + &f.partial(j)?.shift(j)?;
        weight += multidegree[j];
    }
    let lhs = f.scale(C64::new(weight as f64, 0.0));
    let identity_residual = lhs.max_abs_diff(&(&p + &p_tilde)) / scale;
    if identity_residual > IDENTITY_TOL {
        return Err(Error::IdentityViolation(format!(
            "weighted f differs from p + p_tilde by {identity_residual:e}"
        )));
    }
    let origin = vec![0; f.nvars()];
    if p_tilde.coeff(&origin) != C64::new(0.0, 0.0) {
        return Err(Error::IdentityViolation("p_tilde does not vanish at 0".into()));
    }
    Ok(SplitF {
        p,
        p_tilde,
        weight,
        identity_residual,
        reflection_residual,
    })
}

/// The tridisk splitting with multidegree `(n, 1, 1)`.
pub fn split_f(f: &Polynomial, n: u32) -> Result<SplitF> {
    if f.nvars() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: f.nvars(),
        });
    }
    split_f_vars(f, &[n, 1, 1], &[0, 1, 2])
}

/// Coefficient polynomials `c_k(z1)` of `p = sum_k c_k(z1) z2^k`.
fn z2_coefficients(p: &Polynomial) -> Vec<Vec<C64>> {
    let n = p.degree_in(0) as usize;
    let m = p.degree_in(1) as usize;
    let mut out = vec![vec![C64::new(0.0, 0.0); n + 1]; m + 1];
    for (e, c) in p.terms() {
        out[e[1] as usize][e[0] as usize] += c;
    }
    out
}

fn horner(coeffs: &[C64], z: C64) -> (C64, f64) {
    let mut v = C64::new(0.0, 0.0);
    let mut s = 0.0;
    for c in coeffs.iter().rev() {
        v = v * z + c;
        s = s * z.norm() + c.norm();
    }
    (v, s)
}

/// Rejects bivariate `p` with a factor depending on `z1` alone.
///
/// Such a factor divides every `c_k(z1)`; the roots of the lowest-degree
/// nonzero `c_k` are tested for joint vanishing.
pub fn check_first_variable_factor(p: &Polynomial) -> Result<()> {
    if p.nvars() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: p.nvars(),
        });
    }
    if p.degree_in(1) == 0 {
        return Err(Error::FirstVariableFactor(
            "polynomial does not depend on the second variable".into(),
        ));
    }
    let cs = z2_coefficients(p);
    let nonzero: Vec<&Vec<C64>> = cs.iter().filter(|c| c.iter().any(|v| v.norm() > 0.0)).collect();
    let pivot = nonzero
        .iter()
        .min_by_key(|c| c.iter().rposition(|v| v.norm() > 0.0).unwrap_or(0))
        .expect("polynomial depends on z2");
    if pivot.iter().rposition(|v| v.norm() > 0.0).unwrap_or(0) == 0 {
        return Ok(());
    }
    let rs = uniroots::roots_of_coeffs(pivot, uniroots::DEFAULT_BOUNDARY_TOL)?;
    for r in rs.roots {
        let worst = nonzero
            .iter()
            .map(|c| {
                let (v, s) = horner(c, r);
                v.norm() / s.max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        if worst <= 1e-8 {
            return Err(Error::FirstVariableFactor(format!(
                "all z2-coefficients vanish at z1 = {r}"
            )));
        }
    }
    Ok(())
}

/// Sampled check that `z2 -> p(z1, z2)` has all its roots on the unit
/// circle for `z1` on the circle away from 1, i.e. no zeros on
/// `T x D` or `T x E`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaceCheck {
    pub samples: usize,
    /// Largest `||z2| - 1|` over the sampled roots.
    pub worst_off_circle: f64,
    pub holds: bool,
}

pub fn face_zero_check(p: &Polynomial, samples: usize, seed: u64, tol: f64) -> Result<FaceCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let theta: f64 = rng.random_range(1e-6..(2.0 * std::f64::consts::PI - 1e-6));
        let z1 = C64::from_polar(1.0, theta);
        let slice = p.restrict(0, z1)?;
        if slice.is_zero() {
            return Err(Error::FirstVariableFactor(format!("p vanishes identically at z1 = {z1}")));
        }
        let coeffs = slice.univariate_coeffs()?;
        let rs = uniroots::roots_of_coeffs(&coeffs, tol)?;
        for r in rs.roots {
            worst = worst.max((r.norm() - 1.0).abs() / (1.0 + r.norm()));
        }
    }
    Ok(FaceCheck {
        samples,
        worst_off_circle: worst,
        holds: worst <= tol.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::poly::parse_poly;
    use rand::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cayley(z: C64) -> C64 {
        I * (ONE + z) / (ONE - z)
    }

    fn cubic_q() -> Polynomial {
        fixtures::cubic_poly().restrict(0, ONE).unwrap()
    }

    #[test]
    fn x2_disk_form() {
        let q = parse_poly("x2", &["x1", "x2"]).unwrap();
        let f = disk_from_halfplane(&q, &[0, 1]).unwrap().p_disk;
        let expect = parse_poly("1/2 + 1/2*z2", &["z1", "z2"]).unwrap();
        assert!(f.max_abs_diff(&expect) < 1e-15, "{f}");
    }

    #[test]
    fn constant_disk_form() {
        let q = Polynomial::constant(&["x1", "x2"], ONE);
        let f = disk_from_halfplane(&q, &[0, 0]).unwrap().p_disk;
        assert_eq!(f.coeff(&[0, 0]), ONE);
        assert_eq!(f.num_terms(), 1);
    }

    #[test]
    fn cubic_disk_form_pointwise() {
        let q = cubic_q();
        let f = disk_from_halfplane(&q, &[2, 1]).unwrap().p_disk;
        assert_eq!(f.degrees(), vec![2, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let z: Vec<C64> = (0..2)
                .map(|_| C64::from_polar(rng.random_range(0.0..0.95), rng.random_range(0.0..6.28)))
                .collect();
            let w: Vec<C64> = z.iter().map(|&v| cayley(v)).collect();
            let factor = ((ONE - z[0]) / (I * 2.0)).powu(2) * ((ONE - z[1]) / (I * 2.0));
            let expect = q.eval(&w).unwrap() * factor;
            let got = f.eval(&z).unwrap();
            assert!((got - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
        }
    }

    #[test]
    fn halfplane_examples() {
        let f = parse_poly("1/2 + 1/2*z2", &["z1", "z2"]).unwrap();
        let q = halfplane_from_disk(&f, &[0, 1]).unwrap();
        let expect = parse_poly("x2", &["x1", "x2"]).unwrap();
        assert!(q.max_abs_diff(&expect) < 1e-15, "{q}");
        let one = Polynomial::constant(&["z1", "z2"], ONE);
        let q = halfplane_from_disk(&one, &[2, 1]).unwrap();
        let expect = parse_poly("(x1 + i)^2 * (x2 + i)", &["x1", "x2"]).unwrap();
        assert!(q.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let names = ["x1", "x2"];
        for _ in 0..20 {
            let terms: Vec<(Vec<u32>, C64)> = (0..=2u32)
                .flat_map(|a| (0..=1u32).map(move |b| vec![a, b]))
                .map(|e| (e, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
                .collect();
            let q = Polynomial::from_terms(&names, terms).unwrap();
            let degs = q.degrees();
            let back = halfplane_from_disk(&disk_from_halfplane(&q, &degs).unwrap().p_disk, &degs).unwrap();
            assert!(back.max_abs_diff(&q) <= 1e-10 * q.max_coeff());
        }
    }

    #[test]
    fn real_q_gives_self_reflective_f() {
        let f = disk_from_halfplane(&cubic_q(), &[2, 1]).unwrap().p_disk;
        assert!(f.reflect(&[2, 1]).unwrap().max_abs_diff(&f) <= 1e-12);
    }

    #[test]
    fn tilde_partial_hand_case() {
        let f = parse_poly("z1*z2*z3", &["z1", "z2", "z3"]).unwrap();
        let t = tilde_partial(&f, 0, &[1, 1, 1]).unwrap();
        assert_eq!(t, Polynomial::constant(&["z1", "z2", "z3"], ONE));
        let k = Polynomial::constant(&["z1", "z2", "z3"], c(3.0, 0.0));
        assert!(tilde_partial(&k, 1, &[1, 1, 1]).unwrap().is_zero());
    }

    #[test]
    fn split_of_one_plus_product() {
        let f = parse_poly("1 + z1*z2*z3", &["z1", "z2", "z3"]).unwrap();
        let s = split_f(&f, 1).unwrap();
        assert_eq!(s.p, Polynomial::constant(&["z1", "z2", "z3"], c(3.0, 0.0)));
        assert_eq!(s.p_tilde, parse_poly("3*z1*z2*z3", &["z1", "z2", "z3"]).unwrap());
        assert_eq!(s.weight, 3);
    }

    #[test]
    fn split_rejects_non_reflective() {
        let f = parse_poly("2 + z1", &["z1", "z2", "z3"]).unwrap();
        assert!(matches!(split_f(&f, 1), Err(Error::IdentityViolation(_))));
    }

    #[test]
    fn first_variable_factor_detected() {
        let p = parse_poly("(z1 - 1/2)*(1 + z1*z2)", &["z1", "z2"]).unwrap();
        assert!(matches!(
            check_first_variable_factor(&p),
            Err(Error::FirstVariableFactor(_))
        ));
        let f = disk_from_halfplane(&cubic_q(), &[2, 1]).unwrap().p_disk;
        check_first_variable_factor(&f).unwrap();
    }

    #[test]
    fn cubic_disk_form_has_no_face_zeros() {
        let f = disk_from_halfplane(&cubic_q(), &[2, 1]).unwrap().p_disk;
        let chk = face_zero_check(&f, 50, 1, 1e-8).unwrap();
        assert!(chk.holds, "{chk:?}");
    }
}
