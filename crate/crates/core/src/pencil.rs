//! Linear matrix pencils `c * det(sum_j x_j A_j)`.

use serde_json::{json, Value};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::poly::{var_names, Polynomial};
use crate::report::Report;
use crate::uniroots::{self, Region};
use crate::C64;

/// Largest matrix size accepted by [`Pencil::to_poly`].
pub const MAX_INTERP_DIM: usize = 12;
/// Relative self-adjointness tolerance for pencil matrices.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// PSD floor: smallest eigenvalue must be at least `-PSD_FLOOR * ||B||`.
pub const PSD_FLOOR: f64 = 1e-10;
const IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub b_plus: CMat,
    pub b_minus: CMat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pencil {
    pub mats: Vec<CMat>,
    pub c: C64,
    pub split: Option<Split>,
}

impl Pencil {
    pub fn new(mats: Vec<CMat>, c: C64) -> Result<Self> {
        let k = mats.first().map_or(0, |m| m.nrows());
        for m in &mats {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: m.nrows().max(m.ncols()),
                });
            }
            let norm = linalg::fro_norm(m);
            let defect = linalg::hermitian_defect(m);
            if defect > HERMITIAN_TOL * norm.max(1.0) {
                return Err(Error::NotHermitian(defect / norm.max(1.0)));
            }
        }
        Ok(Pencil {
            mats,
            c,
            split: None,
        })
    }

    /// Attaches `A_1 = B_+ - B_-`.
    pub fn with_split(mut self, b_plus: CMat, b_minus: CMat) -> Result<Self> {
        let k = self.k();
        for b in [&b_plus, &b_minus] {
            if b.nrows() != k || b.ncols() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: b.nrows(),
                });
            }
        }
        self.split = Some(Split { b_plus, b_minus });
        Ok(self)
    }

    /// Matrix size.
    pub fn k(&self) -> usize {
        self.mats.first().map_or(0, |m| m.nrows())
    }

    pub fn nmats(&self) -> usize {
        self.mats.len()
    }

    /// `sum_j x_j A_j`.
    pub fn assemble(&self, x: &[C64]) -> Result<CMat> {
        if x.len() != self.mats.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mats.len(),
                got: x.len(),
            });
        }
        let k = self.k();
        let mut m = CMat::zeros(k, k);
        for (a, &xj) in self.mats.iter().zip(x) {
            m += a * xj;
        }
        Ok(m)
    }

    pub fn eval_det(&self, x: &[C64]) -> Result<C64> {
        Ok(self.c * linalg::det(&self.assemble(x)?))
    }

    /// Expands the determinant into a homogeneous polynomial of degree `k`
    /// over the variables `x0, x1, ...`.
    pub fn to_poly(&self) -> Result<Polynomial> {
        self.to_poly_named(&var_names("x", 0, self.nmats()))
    }

    /// Same as [`Pencil::to_poly`] with explicit variable names.
    ///
    /// The dehomogenized polynomial `c det(A_0 + sum y_j A_j)` has degree at
    /// most `k` in each `y_j`, so sampling it on the tensor grid of
    /// `(k+1)`-th roots of unity and applying the inverse DFT is exact.
    pub fn to_poly_named<S: AsRef<str>>(&self, names: &[S]) -> Result<Polynomial> {
        let n = self.nmats();
        if names.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: names.len(),
            });
        }
        if n == 0 {
            return Err(Error::Interpolation("pencil has no matrices".into()));
        }
        let k = self.k();
        if k > MAX_INTERP_DIM {
            return Err(Error::Interpolation(format!(
                "matrix size {k} exceeds the interpolation limit {MAX_INTERP_DIM}"
            )));
        }
        let rest: Vec<&str> = names[1..].iter().map(|s| s.as_ref()).collect();
        let nodes = k + 1;
        let m = n - 1;
        let omega: Vec<C64> = (0..nodes)
            .map(|s| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * s as f64 / nodes as f64))
            .collect();
        let total = nodes.pow(m as u32);
        let index = |mut flat: usize| -> Vec<usize> {
            let mut idx = vec![0; m];
            for slot in idx.iter_mut().rev() {
                *slot = flat % nodes;
                flat /= nodes;
            }
            idx
        };
        let mut values = Vec::with_capacity(total);
        for flat in 0..total {
            let idx = index(flat);
            let mut x = vec![C64::new(1.0, 0.0)];
            x.extend(idx.iter().map(|&s| omega[s]));
            values.push(self.eval_det(&x)?);
        }
        let scale = 1.0 / total as f64;
        let mut terms = Vec::new();
        for flat_b in 0..total {
            let beta = index(flat_b);
            if beta.iter().sum::<usize>() > k {
                continue;
            }
            let mut acc = C64::new(0.0, 0.0);
            for (flat_s, v) in values.iter().enumerate() {
                let s = index(flat_s);
                let phase: usize = beta.iter().zip(&s).map(|(b, s)| b * s).sum::<usize>() % nodes;
                acc += v * omega[phase].conj();
            }
            terms.push((beta.iter().map(|&b| b as u32).collect(), acc * scale));
        }
        let q = Polynomial::from_terms(&rest, terms)?;
        q.homogenize(0, k as u32, names[0].as_ref())
    }

    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        obj.insert("k".into(), json!(self.k()));
        obj.insert("c".into(), json!([self.c.re, self.c.im]));
        obj.insert(
            "mats".into(),
            Value::Array(self.mats.iter().map(mat_to_json).collect()),
        );
        if let Some(s) = &self.split {
            obj.insert(
                "split".into(),
                json!({"Bp": mat_to_json(&s.b_plus), "Bm": mat_to_json(&s.b_minus)}),
            );
        }
        Value::Object(obj)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let k = v
            .get("k")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Invalid("pencil JSON needs integer \"k\"".into()))?
            as usize;
        let c = v
            .get("c")
            .map(complex_from_json)
            .transpose()?
            .unwrap_or(C64::new(1.0, 0.0));
        let mats = v
            .get("mats")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Invalid("pencil JSON needs \"mats\" array".into()))?
            .iter()
            .map(mat_from_json)
            .collect::<Result<Vec<_>>>()?;
        for m in &mats {
            if m.nrows() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: m.nrows(),
                });
            }
        }
        let mut p = Pencil::new(mats, c)?;
        if let Some(s) = v.get("split") {
            let bp = mat_from_json(s.get("Bp").unwrap_or(&Value::Null))?;
            let bm = mat_from_json(s.get("Bm").unwrap_or(&Value::Null))?;
            p = p.with_split(bp, bm)?;
        }
        Ok(p)
    }
}

pub fn complex_from_json(v: &Value) -> Result<C64> {
    match v {
        Value::Number(x) => Ok(C64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(a) if a.len() == 2 => {
            let re = a[0].as_f64();
            let im = a[1].as_f64();
            match (re, im) {
                (Some(re), Some(im)) => Ok(C64::new(re, im)),
                _ => Err(Error::Invalid(format!("bad complex entry {v}"))),
            }
        }
        _ => Err(Error::Invalid(format!("bad complex entry {v}"))),
    }
}

/// Row-major nested `[re, im]` pairs.
pub fn mat_to_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn mat_from_json(v: &Value) -> Result<CMat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Invalid("matrix must be an array of rows".into()))?;
    let nrows = rows.len();
    let ncols = rows
        .first()
        .and_then(Value::as_array)
        .map_or(0, |r| r.len());
    let mut m = CMat::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Invalid("matrix row must be an array".into()))?;
        if row.len() != ncols {
            return Err(Error::DimensionMismatch {
                expected: ncols,
                got: row.len(),
            });
        }
        for (j, e) in row.iter().enumerate() {
            m[(i, j)] = complex_from_json(e)?;
        }
    }
    Ok(m)
}

/// Largest coefficient gap, normalized by `1 + max|coeff p|`, and the
/// multidegree where it occurs.
pub fn coefficient_residual(p: &Polynomial, q: &Polynomial) -> (f64, Option<Vec<u32>>) {
    let mut worst = 0.0;
    let mut at = None;
    let keys: std::collections::BTreeSet<&Vec<u32>> =
        p.terms().map(|(e, _)| e).chain(q.terms().map(|(e, _)| e)).collect();
    for e in keys {
        let d = (p.coeff(e) - q.coeff(e)).norm();
        if d > worst {
            worst = d;
            at = Some(e.clone());
        }
    }
    (worst / (1.0 + p.max_coeff()), at)
}

/// Compares `p` with the expanded determinant of `pencil`.
pub fn verify_representation(p: &Polynomial, pencil: &Pencil, tol: f64, config: &Config) -> Report {
    let mut report = Report::new(p.to_string(), config);
    report.pencil = Some(pencil.to_json());
    if p.nvars() != pencil.nmats() {
        report.check(
            "representation",
            false,
            json!({"error": format!("{} variables but {} matrices", p.nvars(), pencil.nmats())}),
        );
        return report;
    }
    match pencil.to_poly_named(p.var_names()) {
        Ok(q) => {
            let (res, at) = coefficient_residual(p, &q);
            report.stage("pencil_poly", json!({"poly": q.to_string()}));
            report.check(
                "representation",
                res <= tol,
                json!({"residual": res, "tol": tol, "worst_multidegree": at}),
            );
        }
        Err(e) => report.check("representation", false, json!({"error": e.to_string()})),
    }
    report
}

/// Smallest eigenvalue relative to the spectral norm; `0` for the zero matrix.
fn psd_margin(b: &CMat) -> Result<f64> {
    linalg::min_eig_rel(b)
}

pub fn is_psd(b: &CMat) -> bool {
    psd_margin(b).map(|m| m >= -PSD_FLOOR).unwrap_or(false)
}

/// Number of roots of `t -> p(1, t, i)` in the open upper half-plane.
pub fn uhp_count(p: &Polynomial, root_tol: f64) -> Result<usize> {
    let slice = p
        .restrict(0, C64::new(1.0, 0.0))?
        .restrict(1, C64::new(0.0, 1.0))?;
    if slice.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let rs = uniroots::roots_of_coeffs(&slice.univariate_coeffs()?, root_tol)?;
    uniroots::count_region(&rs, Region::Uhp, true)
}

/// Checks the structural claims of a split pencil `(A_0, A_1, A_2)`
/// with split `A_1 = B_+ - B_-` against the trivariate polynomial `p`.
pub fn theorem1_invariants(p: &Polynomial, pencil: &Pencil, config: &Config) -> Result<Report> {
    let split = pencil.split.as_ref().ok_or(Error::MissingSplit)?;
    if p.nvars() != 3 || pencil.nmats() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: p.nvars().min(pencil.nmats()),
        });
    }
    let mut report = Report::new(p.to_string(), config);
    report.pencil = Some(pencil.to_json());
    let tol = config.rank_tol;
    let a1 = &pencil.mats[1];
    let a2 = &pencil.mats[2];
    let r1 = linalg::rank_tol(a1, tol);
    let r2 = linalg::rank_tol(a2, tol);
    let rp = linalg::rank_tol(&split.b_plus, tol);
    let rm = linalg::rank_tol(&split.b_minus, tol);
    let d1 = p.degree_in(1) as usize;
    let d2 = p.degree_in(2) as usize;
    report.stage(
        "ranks",
        json!({
            "A1": r1, "A2": r2, "Bp": rp, "Bm": rm,
            "ambiguous_gap": r1.ambiguous || r2.ambiguous || rp.ambiguous || rm.ambiguous,
        }),
    );
    report.check("rank_A1_eq_deg1", r1.rank == d1, json!({"rank": r1.rank, "deg": d1}));
    report.check("rank_A2_eq_deg2", r2.rank == d2, json!({"rank": r2.rank, "deg": d2}));
    match uhp_count(p, config.root_tol) {
        Ok(count) => report.check(
            "rank_Bm_eq_uhp_roots",
            rm.rank == count,
            json!({"rank": rm.rank, "uhp_roots": count}),
        ),
        Err(e) => report.check(
            "rank_Bm_eq_uhp_roots",
            false,
            json!({"rank": rm.rank, "error": e.to_string()}),
        ),
    }
    report.check(
        "rank_Bp_plus_rank_Bm_eq_rank_A1",
        rp.rank + rm.rank == r1.rank,
        json!({"Bp": rp.rank, "Bm": rm.rank, "A1": r1.rank}),
    );
    let k = pencil.k();
    let sum = &split.b_plus + &split.b_minus + a2;
    let id_err = linalg::fro_norm(&(sum - CMat::identity(k, k)));
    report.check("Bp_plus_Bm_plus_A2_eq_I", id_err <= IDENTITY_TOL, id_err);
    let split_err = linalg::fro_norm(&(&split.b_plus - &split.b_minus - a1));
    report.check("A1_eq_Bp_minus_Bm", split_err <= IDENTITY_TOL, split_err);
    for (name, b) in [("Bp", &split.b_plus), ("Bm", &split.b_minus), ("A2", a2)] {
        let m = psd_margin(b);
        report.check(
            &format!("{name}_psd"),
            m.as_ref().map(|&v| v >= -PSD_FLOOR).unwrap_or(false),
            m.unwrap_or(f64::NAN),
        );
    }
    report.check(
        "constant_real",
        pencil.c.im.abs() <= 1e-8 * pencil.c.norm().max(f64::MIN_POSITIVE),
        json!([pencil.c.re, pencil.c.im]),
    );
    Ok(report)
}
