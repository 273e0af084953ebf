//! The worked trivariate example: a semi-hyperbolic cubic that is not
//! hyperbolic in any direction, with its explicit 3x3 representation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, diag_real, CMat};
use crate::pencil::Pencil;
use crate::poly::{parse_poly, Polynomial};
use crate::C64;

pub const CUBIC_POLY: &str = "2*x0^2*x1 - (x0^2 + 3*x1^2)*x2";
pub const CUBIC_LIFT: &str = "3*x1*y1*x2 - (x2 + x1 + 3*y1)*x0^2";
pub const XVARS: [&str; 3] = ["x0", "x1", "x2"];
pub const LIFT_VARS: [&str; 4] = ["x0", "x1", "y1", "x2"];

pub fn cubic_poly() -> Polynomial {
    parse_poly(CUBIC_POLY, &XVARS).expect("fixture parses")
}

pub fn cubic_lift() -> Polynomial {
    parse_poly(CUBIC_LIFT, &LIFT_VARS).expect("fixture parses")
}

/// `A_0 = (i/3) [[0, -3, -s], [3, 0, s], [s, -s, 0]]` with `s = sqrt 3`.
pub fn cubic_a0() -> CMat {
    let s = 3f64.sqrt();
    let raw = [[0.0, -3.0, -s], [3.0, 0.0, s], [s, -s, 0.0]];
    CMat::from_fn(3, 3, |i, j| C64::new(0.0, raw[i][j] / 3.0))
}

/// The explicit pencil with `c = 3` and split `B_+ = diag(0,1,0)`,
/// `B_- = diag(0,0,1)`.
pub fn cubic_pencil() -> Pencil {
    Pencil::new(
        vec![
            cubic_a0(),
            diag_real(&[0.0, 1.0, -1.0]),
            diag_real(&[1.0, 0.0, 0.0]),
        ],
        C64::new(3.0, 0.0),
    )
    .expect("fixture is self-adjoint")
    .with_split(diag_real(&[0.0, 1.0, 0.0]), diag_real(&[0.0, 0.0, 1.0]))
    .expect("fixture split has matching size")
}

/// `det(x0 A_0 + x1 A_1 + x2 (A_2 + eps I))`.
pub fn cubic_eps_pencil(eps: f64) -> Pencil {
    let base = cubic_pencil();
    let mut mats = base.mats.clone();
    mats[2] += CMat::identity(3, 3) * C64::new(eps, 0.0);
    Pencil::new(mats, C64::new(1.0, 0.0)).expect("fixture is self-adjoint")
}

fn inverse_sqrt(s: &CMat) -> CMat {
    let (vals, q) = linalg::hermitian_eig(s).expect("sum of Gram matrices is hermitian");
    let inv: Vec<f64> = vals.iter().map(|v| 1.0 / v.max(1e-300).sqrt()).collect();
    &q * diag_real(&inv) * q.adjoint()
}

fn gram<R: Rng>(rng: &mut R, k: usize, rank: usize) -> CMat {
    let g = linalg::random_complex(rng, k, rank);
    &g * g.adjoint()
}

/// Random `k x k` pencil with the split structure: `B+`, `B-`, `A2` PSD of
/// the given ranks, normalized so that `B+ + B- + A2 = I`, and random
/// hermitian `A0`. The ranks must sum to at least `k`.
pub fn random_split_pencil(seed: u64, k: usize, ranks: (usize, usize, usize)) -> Pencil {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gram(&mut rng, k, ranks.0);
    let y = gram(&mut rng, k, ranks.1);
    let z = gram(&mut rng, k, ranks.2);
    let w = inverse_sqrt(&(&x + &y + &z));
    let sym = |m: CMat| (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let bp = sym(&w * x * &w);
    let bm = sym(&w * y * &w);
    let a2 = sym(&w * z * &w);
    let a0 = linalg::random_hermitian(&mut rng, k);
    Pencil::new(vec![a0, &bp - &bm, a2], C64::new(1.0, 0.0))
        .expect("generated matrices are self-adjoint")
        .with_split(bp, bm)
        .expect("split has matching size")
}

/// Seeded random split pencil of size 2..=5. The ranks of `B+`, `B-`, `A2`
/// add up to `k`, so the three are complementary orthogonal projections.
pub fn random_round_trip_pencil(seed: u64) -> Pencil {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a11);
    let k: usize = rng.random_range(2..=5);
    let r2 = rng.random_range(1..=k);
    let rp = rng.random_range(0..=k - r2);
    random_split_pencil(seed, k, (rp, k - r2 - rp, r2))
}

/// `(n+2) x (n+2)` pencil over `(x0, x1, x2, x3)` with `A1, A2, A3`
/// orthogonal projections of ranks `n, 1, 1` in a random basis and random
/// hermitian `A0`. Its determinant has degree `(n, 1, 1)` in `(x1, x2, x3)`.
pub fn theorem2_instance(n: usize, seed: u64) -> Pencil {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = n + 2;
    let v = linalg::random_unitary(&mut rng, k);
    let proj = |start: usize, len: usize| {
        let p = linalg::coordinate_projection(k, start, len);
        let m = &v * p * v.adjoint();
        (&m + m.adjoint()) * C64::new(0.5, 0.0)
    };
    let a0 = linalg::random_hermitian(&mut rng, k);
    Pencil::new(vec![a0, proj(0, n), proj(n, 1), proj(n + 1, 1)], C64::new(1.0, 0.0))
        .expect("generated matrices are self-adjoint")
}
