//! Multivariate polynomials with complex double-precision coefficients.
//!
//! Terms are stored in a `BTreeMap` keyed on exponent tuples, so iteration
//! order (and therefore every printed or serialized form) is deterministic.
//! After every arithmetic operation coefficients below
//! [`PRUNE_REL`]` * max|c|` are dropped, which keeps degree queries
//! meaningful after Möbius substitutions.

mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::C64;

pub use parse::parse_poly;

/// Relative magnitude below which coefficients are pruned.
pub const PRUNE_REL: f64 = 1e-12;

/// Exponent tuple of a monomial.
pub type Multidegree = Vec<u32>;

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    vars: Vec<String>,
    terms: BTreeMap<Multidegree, C64>,
}

/// Variable names `prefix{start}`, `prefix{start+1}`, ...
pub fn var_names(prefix: &str, start: usize, count: usize) -> Vec<String> {
    (start..start + count).map(|i| format!("{prefix}{i}")).collect()
}

impl Polynomial {
    pub fn zero<S: AsRef<str>>(vars: &[S]) -> Self {
        Self {
            vars: vars.iter().map(|s| s.as_ref().to_string()).collect(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant<S: AsRef<str>>(vars: &[S], c: C64) -> Self {
        let mut p = Self::zero(vars);
        p.terms.insert(vec![0; p.vars.len()], c);
        p.prune();
        p
    }

    /// The coordinate function of variable `j`.
    pub fn var<S: AsRef<str>>(vars: &[S], j: usize) -> Self {
        let mut p = Self::zero(vars);
        let mut e = vec![0; p.vars.len()];
        e[j] = 1;
        p.terms.insert(e, C64::new(1.0, 0.0));
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms<S, I>(vars: &[S], terms: I) -> Result<Self>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (Multidegree, C64)>,
    {
        let mut p = Self::zero(vars);
        for (e, c) in terms {
            if e.len() != p.vars.len() {
                return Err(Error::DimensionMismatch {
                    expected: p.vars.len(),
                    got: e.len(),
                });
            }
            *p.terms.entry(e).or_insert(C64::new(0.0, 0.0)) += c;
        }
        p.prune();
        Ok(p)
    }

    /// Univariate polynomial from ascending coefficients.
    pub fn from_univariate(var: &str, coeffs: &[C64]) -> Self {
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| (vec![k as u32], c));
        Self::from_terms(&[var], terms).expect("univariate exponents have length 1")
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    pub fn with_var_names<S: AsRef<str>>(mut self, vars: &[S]) -> Result<Self> {
        if vars.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                got: vars.len(),
            });
        }
        self.vars = vars.iter().map(|s| s.as_ref().to_string()).collect();
        Ok(self)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Multidegree, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: &[u32]) -> C64 {
        self.terms.get(e).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest coefficient magnitude (0 for the zero polynomial).
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn degree_in(&self, j: usize) -> u32 {
        self.terms.keys().map(|e| e[j]).max().unwrap_or(0)
    }

    pub fn degrees(&self) -> Multidegree {
        (0..self.nvars()).map(|j| self.degree_in(j)).collect()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Exact support check: every stored term has the same total degree.
    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|e| e.iter().sum::<u32>());
        match degs.next() {
            None => true,
            Some(d) => degs.all(|x| x == d),
        }
    }

    /// Keeps only the terms of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        let mut p = self.clone();
        p.terms.retain(|e, _| e.iter().sum::<u32>() == d);
        p
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut p = self.clone();
        for c in p.terms.values_mut() {
            *c *= s;
        }
        p.prune();
        p
    }

    pub fn conj(&self) -> Self {
        let mut p = self.clone();
        for c in p.terms.values_mut() {
            *c = c.conj();
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(&self.vars, C64::new(1.0, 0.0));
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Largest coefficient difference, `max |self_a - other_a|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for (e, c) in &self.terms {
            worst = worst.max((c - other.coeff(e)).norm());
        }
        for (e, c) in &other.terms {
            if !self.terms.contains_key(e) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    /// Drops coefficients below the relative prune threshold.
    fn prune(&mut self) {
        let max = self.max_coeff();
        let floor = PRUNE_REL * max;
        self.terms.retain(|_, c| c.norm() > floor && c.norm() > 0.0);
    }

    fn check_point(&self, point: &[C64]) -> Result<()> {
        if point.len() != self.nvars() {
            return Err(Error::DimensionMismatch {
                expected: self.nvars(),
                got: point.len(),
            });
        }
        Ok(())
    }

    fn check_var(&self, var: usize) -> Result<()> {
        if var >= self.nvars() {
            return Err(Error::VariableIndex {
                index: var,
                nvars: self.nvars(),
            });
        }
        Ok(())
    }

    fn power_table(&self, point: &[C64]) -> Vec<Vec<C64>> {
        point
            .iter()
            .enumerate()
            .map(|(j, &z)| {
                let d = self.degree_in(j) as usize;
                let mut row = Vec::with_capacity(d + 1);
                let mut acc = C64::new(1.0, 0.0);
                for _ in 0..=d {
                    row.push(acc);
                    acc *= z;
                }
                row
            })
            .collect()
    }

    /// Evaluates at `point`, accumulating terms in storage order.
    pub fn eval(&self, point: &[C64]) -> Result<C64> {
        self.check_point(point)?;
        let pw = self.power_table(point);
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = *c;
            for (j, &k) in e.iter().enumerate() {
                m *= pw[j][k as usize];
            }
            acc += m;
        }
        Ok(acc)
    }

    /// `sum |c_a| |point^a|`, the natural scale for a residual `|p(point)|`.
    pub fn eval_abs_scale(&self, point: &[C64]) -> Result<f64> {
        self.check_point(point)?;
        let pw = self.power_table(point);
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .enumerate()
                    .fold(c.norm(), |acc, (j, &k)| acc * pw[j][k as usize].norm())
            })
            .sum())
    }

    pub fn eval_real(&self, point: &[f64]) -> Result<C64> {
        let z: Vec<C64> = point.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.eval(&z)
    }

    /// Sets variable `var` to `value` and removes it from the variable list.
    pub fn restrict(&self, var: usize, value: C64) -> Result<Self> {
        self.check_var(var)?;
        let mut vars = self.vars.clone();
        vars.remove(var);
        let mut out = Self::zero(&vars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let k = e2.remove(var);
            *out.terms.entry(e2).or_insert(C64::new(0.0, 0.0)) += c * value.powu(k);
        }
        out.prune();
        Ok(out)
    }

    /// Inserts a new variable `name` at position `new_var` and pads every
    /// term up to total degree `degree`.
    pub fn homogenize(&self, new_var: usize, degree: u32, name: &str) -> Result<Self> {
        if new_var > self.nvars() {
            return Err(Error::VariableIndex {
                index: new_var,
                nvars: self.nvars() + 1,
            });
        }
        let total = self.total_degree();
        if degree < total {
            return Err(Error::DegreeTooLow {
                target: degree,
                degree: total,
            });
        }
        let mut vars = self.vars.clone();
        vars.insert(new_var, name.to_string());
        let mut out = Self::zero(&vars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2.insert(new_var, degree - e.iter().sum::<u32>());
            out.terms.insert(e2, *c);
        }
        Ok(out)
    }

    /// Inserts a variable at `pos` on which the polynomial does not depend.
    pub fn insert_var(&self, pos: usize, name: &str) -> Self {
        let mut vars = self.vars.clone();
        vars.insert(pos, name.to_string());
        let mut out = Self::zero(&vars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2.insert(pos, 0);
            out.terms.insert(e2, *c);
        }
        out
    }

    /// `z^md * conj(p(1/conj(z)))`: the coefficient at `a` becomes the
    /// conjugate of the coefficient at `md - a`.
    pub fn reflect(&self, multidegree: &[u32]) -> Result<Self> {
        if multidegree.len() != self.nvars() {
            return Err(Error::DimensionMismatch {
                expected: self.nvars(),
                got: multidegree.len(),
            });
        }
        let degs = self.degrees();
        if !self.is_zero() && degs.iter().zip(multidegree).any(|(d, m)| d > m) {
            return Err(Error::NotDominated {
                multidegree: multidegree.to_vec(),
                degrees: degs,
            });
        }
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            let e2: Multidegree = multidegree.iter().zip(e).map(|(m, a)| m - a).collect();
            out.terms.insert(e2, c.conj());
        }
        Ok(out)
    }

    /// Formal partial derivative in variable `var`.
    pub fn partial(&self, var: usize) -> Result<Self> {
        self.check_var(var)?;
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            out.terms.insert(e2, c * e[var] as f64);
        }
        out.prune();
        Ok(out)
    }

    /// Multiplies by `z_var`.
    pub fn shift(&self, var: usize) -> Result<Self> {
        self.check_var(var)?;
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2[var] += 1;
            out.terms.insert(e2, *c);
        }
        Ok(out)
    }

    /// Substitutes `var <- (a w + b) / (c w + d)` and clears denominators by
    /// multiplying with `(c w + d)^k`.
    pub fn mobius_substitute(&self, var: usize, abcd: [C64; 4], k: u32) -> Result<Self> {
        self.check_var(var)?;
        let [a, b, c, d] = abcd;
        let det = a * d - b * c;
        let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm());
        if det.norm() <= 1e-14 * scale * scale {
            return Err(Error::SingularMobius(det.norm()));
        }
        let deg = self.degree_in(var);
        if k < deg {
            return Err(Error::DegreeTooLow { target: k, degree: deg });
        }
        // (a w + b)^e (c w + d)^(k - e) for each exponent e <= deg
        let num = [b, a];
        let den = [d, c];
        let factors: Vec<Vec<C64>> = (0..=deg)
            .map(|e| {
                let mut acc = vec![C64::new(1.0, 0.0)];
                for _ in 0..e {
                    acc = univariate_mul(&acc, &num);
                }
                for _ in 0..(k - e) {
                    acc = univariate_mul(&acc, &den);
                }
                acc
            })
            .collect();
        let mut out = Self::zero(&self.vars);
        for (e, coeff) in &self.terms {
            for (j, f) in factors[e[var] as usize].iter().enumerate() {
                let mut e2 = e.clone();
                e2[var] = j as u32;
                *out.terms.entry(e2).or_insert(C64::new(0.0, 0.0)) += coeff * f;
            }
        }
        out.prune();
        Ok(out)
    }

    /// Ascending coefficients of a univariate polynomial.
    pub fn univariate_coeffs(&self) -> Result<Vec<C64>> {
        if self.nvars() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.nvars(),
            });
        }
        let d = self.degree_in(0) as usize;
        let mut out = vec![C64::new(0.0, 0.0); d + 1];
        for (e, c) in &self.terms {
            out[e[0] as usize] = *c;
        }
        Ok(out)
    }

    /// Ascending coefficients of `t -> p(base - t * dir)`.
    pub fn line_coeffs(&self, base: &[C64], dir: &[C64]) -> Result<Vec<C64>> {
        self.check_point(base)?;
        self.check_point(dir)?;
        let n = self.nvars();
        // powers[j][k] = (base_j - t dir_j)^k as ascending coefficients in t
        let powers: Vec<Vec<Vec<C64>>> = (0..n)
            .map(|j| {
                let lin = [base[j], -dir[j]];
                let d = self.degree_in(j) as usize;
                let mut out = vec![vec![C64::new(1.0, 0.0)]];
                for k in 0..d {
                    let next = univariate_mul(&out[k], &lin);
                    out.push(next);
                }
                out
            })
            .collect();
        let mut acc = vec![C64::new(0.0, 0.0); self.total_degree() as usize + 1];
        for (e, c) in &self.terms {
            let mut m = vec![*c];
            for (j, &k) in e.iter().enumerate() {
                if k > 0 {
                    m = univariate_mul(&m, &powers[j][k as usize]);
                }
            }
            for (i, v) in m.into_iter().enumerate() {
                acc[i] += v;
            }
        }
        Ok(acc)
    }

    fn binary(&self, other: &Self, sign: f64) -> Self {
        assert_eq!(
            self.nvars(),
            other.nvars(),
            "polynomials over different variable counts"
        );
        let mut out = self.clone();
        for (e, c) in &other.terms {
            *out.terms.entry(e.clone()).or_insert(C64::new(0.0, 0.0)) += c * sign;
        }
        out.prune();
        out
    }
}

/// Polynomial of multidegree at most `degs` through the values of `f` on the
/// tensor grid of `(degs_j + 1)`-th roots of unity. The inverse DFT is exact
/// when the sampled function is such a polynomial.
pub fn interpolate_box<S, F>(vars: &[S], degs: &[u32], mut f: F) -> Result<Polynomial>
where
    S: AsRef<str>,
    F: FnMut(&[C64]) -> Result<C64>,
{
    if vars.len() != degs.len() {
        return Err(Error::DimensionMismatch {
            expected: vars.len(),
            got: degs.len(),
        });
    }
    let nodes: Vec<usize> = degs.iter().map(|&d| d as usize + 1).collect();
    let total: usize = nodes.iter().product();
    let index = |mut flat: usize| -> Vec<usize> {
        let mut idx = vec![0; nodes.len()];
        for (slot, &n) in idx.iter_mut().zip(&nodes).rev() {
            *slot = flat % n;
            flat /= n;
        }
        idx
    };
    let root = |s: usize, n: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * s as f64 / n as f64);
    let mut values = Vec::with_capacity(total);
    for flat in 0..total {
        let z: Vec<C64> = index(flat).iter().zip(&nodes).map(|(&s, &n)| root(s, n)).collect();
        values.push(f(&z)?);
    }
    let scale = 1.0 / total as f64;
    let mut terms = Vec::with_capacity(total);
    for flat_b in 0..total {
        let beta = index(flat_b);
        let mut acc = C64::new(0.0, 0.0);
        for (flat_s, v) in values.iter().enumerate() {
            let s = index(flat_s);
            let mut phase = C64::new(1.0, 0.0);
            for ((&b, &sj), &n) in beta.iter().zip(&s).zip(&nodes) {
                phase *= root((b * sj) % n, n).conj();
            }
            acc += v * phase;
        }
        terms.push((beta.iter().map(|&b| b as u32).collect::<Vec<_>>(), acc * scale));
    }
    Polynomial::from_terms(vars, terms)
}

/// Product of ascending coefficient vectors.
pub fn univariate_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.binary(rhs, 1.0)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.binary(rhs, -1.0)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(
            self.nvars(),
            rhs.nvars(),
            "polynomials over different variable counts"
        );
        let mut out = Polynomial::zero(&self.vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Multidegree = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                *out.terms.entry(e).or_insert(C64::new(0.0, 0.0)) += ca * cb;
            }
        }
        out.prune();
        out
    }
}

impl fmt::Display for Polynomial {
    /// Prints in the grammar accepted by [`parse_poly`]; coefficients use the
    /// shortest decimal that round-trips, so re-parsing is exact.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, &k)| {
                    if k == 1 {
                        self.vars[j].clone()
                    } else {
                        format!("{}^{}", self.vars[j], k)
                    }
                })
                .collect();
            let mono = mono.join("*");
            let (negative, body) = format_coeff(*c);
            if first {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            first = false;
            match (body.as_str(), mono.is_empty()) {
                (b, true) => write!(f, "{b}")?,
                ("1", false) => write!(f, "{mono}")?,
                (b, false) => write!(f, "{b}*{mono}")?,
            }
        }
        Ok(())
    }
}

/// Returns `(leading minus, magnitude text)` for a coefficient.
fn format_coeff(c: C64) -> (bool, String) {
    let re = if c.re == 0.0 { 0.0 } else { c.re };
    let im = if c.im == 0.0 { 0.0 } else { c.im };
    if im == 0.0 {
        (re < 0.0, format!("{}", re.abs()))
    } else if re == 0.0 {
        let body = if im.abs() == 1.0 {
            "i".to_string()
        } else {
            format!("{}*i", im.abs())
        };
        (im < 0.0, body)
    } else {
        let sign = if im < 0.0 { '-' } else { '+' };
        (false, format!("({} {} {}*i)", re, sign, im.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cubic() -> Polynomial {
        parse_poly("2*x0^2*x1 - (x0^2 + 3*x1^2)*x2", &["x0", "x1", "x2"]).unwrap()
    }

    #[test]
    fn eval_cubic_points() {
        let p = cubic();
        assert_eq!(p.eval_real(&[-1.0, 0.0, -1.0]).unwrap(), c(1.0, 0.0));
        assert_eq!(p.eval_real(&[0.0, 0.0, -1.0]).unwrap(), c(0.0, 0.0));
        assert!(matches!(
            p.eval_real(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let z = Polynomial::zero(&["x0"]);
        assert_eq!(z.eval_real(&[3.0]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn restrict_to_affine_chart() {
        let q = cubic().restrict(0, c(1.0, 0.0)).unwrap();
        let expected = parse_poly("2*x1 - (1 + 3*x1^2)*x2", &["x1", "x2"]).unwrap();
        assert_eq!(q, expected);
        let u = q.restrict(1, c(0.0, 1.0)).unwrap().with_var_names(&["t"]).unwrap();
        let expected = parse_poly("2*t - (1 + 3*t^2)*i", &["t"]).unwrap();
        assert_eq!(u, expected);
    }

    #[test]
    fn homogenize_pads_terms() {
        let q = parse_poly("2*x1 - (1 + 3*x1^2)*x2", &["x1", "x2"]).unwrap();
        let h = q.homogenize(0, 3, "x0").unwrap();
        assert_eq!(h, cubic());
        assert!(h.is_homogeneous());
        let five = Polynomial::constant(&["x1"], c(5.0, 0.0));
        let h = five.homogenize(0, 2, "x0").unwrap();
        assert_eq!(h.coeff(&[2, 0]), c(5.0, 0.0));
        assert!(matches!(
            q.homogenize(0, 2, "x0"),
            Err(Error::DegreeTooLow { .. })
        ));
        // already homogeneous at its own degree: restricting then padding is the identity
        let p = cubic();
        let back = p.restrict(0, c(1.0, 0.0)).unwrap().homogenize(0, 3, "x0").unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn reflect_flips_coefficients() {
        let p = parse_poly("1 + 2*z1", &["z1"]).unwrap();
        let r = p.reflect(&[1]).unwrap();
        assert_eq!(r, parse_poly("2 + z1", &["z1"]).unwrap());
        let q = parse_poly("(1 + 2*i)*z1^2 - 3*i", &["z1"]).unwrap();
        assert_eq!(q.reflect(&[3]).unwrap().reflect(&[3]).unwrap(), q);
        assert!(matches!(q.reflect(&[1]), Err(Error::NotDominated { .. })));
    }

    #[test]
    fn partial_derivatives() {
        let p = parse_poly("z1^2*z2", &["z1", "z2"]).unwrap();
        assert_eq!(p.partial(0).unwrap(), parse_poly("2*z1*z2", &["z1", "z2"]).unwrap());
        let k = Polynomial::constant(&["z1", "z2"], c(4.0, 0.0));
        assert!(k.partial(1).unwrap().is_zero());
    }

    #[test]
    fn euler_identity_homogeneous() {
        let p = cubic();
        let mut euler = Polynomial::zero(p.var_names());
        for j in 0..3 {
            euler = &euler + &p.partial(j).unwrap().shift(j).unwrap();
        }
        let d = p.total_degree() as f64;
        assert!(euler.max_abs_diff(&p.scale(c(d, 0.0))) <= 1e-12 * p.max_coeff());
    }

    #[test]
    fn mobius_examples() {
        let p = parse_poly("3*z^2 - z + 2", &["z"]).unwrap();
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let id = p.mobius_substitute(0, [one, zero, zero, one], 2).unwrap();
        assert_eq!(id, p);

        // z <- i(1+w)/(1-w), cleared by (1-w)
        let z = Polynomial::var(&["z"], 0);
        let i = c(0.0, 1.0);
        let out = z.mobius_substitute(0, [i, i, -one, one], 1).unwrap();
        assert_eq!(out, parse_poly("i + i*z", &["z"]).unwrap());

        assert!(matches!(
            p.mobius_substitute(0, [one, one, one, one], 2),
            Err(Error::SingularMobius(_))
        ));
        assert!(matches!(
            p.mobius_substitute(0, [one, zero, zero, one], 1),
            Err(Error::DegreeTooLow { .. })
        ));
    }

    #[test]
    fn mobius_inverse_pair_scales_by_determinant() {
        let p = parse_poly("3*z^2 - (1 - 2*i)*z + 2", &["z"]).unwrap();
        let i = c(0.0, 1.0);
        let one = c(1.0, 0.0);
        let forward = [i, i, -one, one];
        let inverse = [one, -i, one, i];
        let k = 2;
        let back = p
            .mobius_substitute(0, forward, k)
            .unwrap()
            .mobius_substitute(0, inverse, k)
            .unwrap();
        // composite map is w <- w scaled, clearing factor (ad - bc)^k
        let det = forward[0] * forward[3] - forward[1] * forward[2];
        let expected = p.scale(det.powu(k));
        assert!(back.max_abs_diff(&expected) <= 1e-12 * expected.max_coeff());
    }

    #[test]
    fn line_coefficients_match_evaluation() {
        let p = cubic();
        let base = [c(0.3, 0.0), c(-1.2, 0.0), c(0.7, 0.0)];
        let dir = [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let coeffs = p.line_coeffs(&base, &dir).unwrap();
        for &t in &[-1.5, 0.0, 0.4, 2.0] {
            let pt: Vec<C64> = base.iter().zip(&dir).map(|(b, d)| b - d * t).collect();
            let direct = p.eval(&pt).unwrap();
            let via: C64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * C64::new(t, 0.0).powu(k as u32))
                .sum();
            assert!((direct - via).norm() < 1e-12);
        }
    }

    #[test]
    fn prune_drops_tiny_terms() {
        let p = Polynomial::from_terms(
            &["x"],
            vec![(vec![0], c(1.0, 0.0)), (vec![3], c(1e-14, 0.0))],
        )
        .unwrap();
        assert_eq!(p.degree_in(0), 0);
    }
}
