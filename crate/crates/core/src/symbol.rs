//! Matrix-valued symbols built from elementary transition factors.
//!
//! The building blocks are the whirl `M(z; a)`, the curl `N(z; a)`, the
//! diagonal `B(b)` and the shift `S(z)`. A period-`p` transition symbol is one
//! of four kinds:
//!
//! ```text
//!   BernoulliUp    M(z; a) B(b)
//!   BernoulliDown  M(1/z; a)^T B(b)
//!   GeometricUp    N(z; a) B(b)        (requires prod(a) < 1)
//!   GeometricDown  N(1/z; a)^T B(b)    (requires prod(a) < 1)
//! ```
//!
//! For `p = 1` the whirl and curl collapse to the scalars `1 + a z` and
//! `1/(1 - a z)`; this degeneration is handled as an explicit special case.

use crate::cmat::{re, CMat, ONE, ZERO};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const POLE_EPS: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FactorKind {
    BernoulliUp,
    BernoulliDown,
    GeometricUp,
    GeometricDown,
}

impl FactorKind {
    pub fn is_up(self) -> bool {
        matches!(self, FactorKind::BernoulliUp | FactorKind::GeometricUp)
    }

    pub fn is_bernoulli(self) -> bool {
        matches!(self, FactorKind::BernoulliUp | FactorKind::BernoulliDown)
    }
}

/// One transition symbol: kind, period (implied by the parameter length) and
/// the positive parameter vectors `a` (slopes) and `b` (diagonal weights).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementaryFactor {
    pub kind: FactorKind,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ElementaryFactor {
    pub fn new(kind: FactorKind, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::Dimension(format!(
                "parameter vectors must have equal positive length, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::Constraint("factor parameters must be positive".into()));
        }
        let f = ElementaryFactor { kind, a, b };
        if !f.kind.is_bernoulli() && f.a_product() >= 1.0 {
            return Err(Error::Constraint(format!(
                "geometric factor requires prod(a) < 1, got {}",
                f.a_product()
            )));
        }
        Ok(f)
    }

    /// Convenience constructor with unit diagonal.
    pub fn with_unit_b(kind: FactorKind, a: Vec<f64>) -> Result<Self> {
        let b = vec![1.0; a.len()];
        ElementaryFactor::new(kind, a, b)
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn a_product(&self) -> f64 {
        self.a.iter().product()
    }

    pub fn b_product(&self) -> f64 {
        self.b.iter().product()
    }

    /// Poles of the matrix entries (finite z only).
    pub fn poles(&self) -> Vec<Complex64> {
        match self.kind {
            FactorKind::BernoulliUp => vec![],
            FactorKind::BernoulliDown => {
                if self.p() > 1 {
                    vec![ZERO]
                } else {
                    vec![ZERO]
                }
            }
            FactorKind::GeometricUp => vec![re(1.0 / self.a_product())],
            FactorKind::GeometricDown => vec![re(self.a_product())],
        }
    }

    /// Zeros of the determinant (poles of the inverse), finite z only.
    pub fn det_zeros(&self) -> Vec<Complex64> {
        let p = self.p();
        let a = self.a_product();
        let sign = if p % 2 == 1 { 1.0 } else { -1.0 }; // (-1)^(p-1)
        match self.kind {
            // det = (1 + (-1)^(p-1) a z) prod(b)
            FactorKind::BernoulliUp => vec![re(-sign / a)],
            // det = (1 + (-1)^(p-1) a / z) prod(b)
            FactorKind::BernoulliDown => vec![re(-sign * a)],
            FactorKind::GeometricUp => vec![],
            // det = prod(b) z / (z + (-1)^(p-1) a): zero at the origin
            FactorKind::GeometricDown => vec![ZERO],
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<CMat> {
        eval_factor(self, z)
    }
}

/// Whirl `M(z; a)`: ones on the diagonal, `a_0..a_{p-2}` on the superdiagonal
/// and `a_{p-1} z` in the bottom-left corner. For `p = 1` this is `1 + a_0 z`.
pub fn eval_whirl(z: Complex64, a: &[f64]) -> CMat {
    let p = a.len();
    if p == 1 {
        return CMat::from_rows(&[vec![ONE + re(a[0]) * z]]);
    }
    let mut m = CMat::identity(p);
    for i in 0..p - 1 {
        m[(i, i + 1)] = re(a[i]);
    }
    m[(p - 1, 0)] = re(a[p - 1]) * z;
    m
}

/// Curl `N(z; a)`: entry `(r, c)` is the cyclic product `a_r a_{r+1} .. a_{c-1}`
/// (times `z` when it wraps), all divided by `1 - prod(a) z`. For `p = 1` this
/// is `1/(1 - a_0 z)`.
pub fn eval_curl(z: Complex64, a: &[f64]) -> Result<CMat> {
    let p = a.len();
    let prod: f64 = a.iter().product();
    let den = ONE - re(prod) * z;
    if den.norm() < POLE_EPS * (1.0 + (re(prod) * z).norm()) {
        return Err(Error::Pole {
            z,
            what: format!("curl with prod(a) = {prod}"),
        });
    }
    if p == 1 {
        return Ok(CMat::from_rows(&[vec![ONE / den]]));
    }
    let mut m = CMat::zeros(p, p);
    for r in 0..p {
        for c in 0..p {
            let mut v = ONE;
            if r <= c {
                for item in a.iter().take(c).skip(r) {
                    v *= re(*item);
                }
            } else {
                // wrap-around product picks up one factor of z
                for item in a.iter().take(p).skip(r) {
                    v *= re(*item);
                }
                for item in a.iter().take(c) {
                    v *= re(*item);
                }
                v *= z;
            }
            m[(r, c)] = v / den;
        }
    }
    Ok(m)
}

/// Diagonal `B(b)`.
pub fn eval_diag(b: &[f64]) -> CMat {
    CMat::diag_real(b)
}

/// Shift operator power `S(z)^k` where `S(z)` has `1/z` in the top-right
/// corner and ones on the subdiagonal. Direct multiplication shows
/// `S(z)^p = z^{-1} I`, so powers reduce modulo `p` against a monomial.
pub fn eval_shift(p: usize, z: Complex64, k: i64) -> Result<CMat> {
    if k != 0 && z.norm() < 1e-280 {
        return Err(Error::Pole {
            z,
            what: "shift operator at the origin".into(),
        });
    }
    let pi = p as i64;
    let q = k.div_euclid(pi);
    let r = k.rem_euclid(pi) as usize;
    // S^k = z^{-q} S^r with 0 <= r < p
    let mut m = CMat::scalar(p, z.powi(-q as i32));
    if r > 0 {
        let s = shift_matrix(p, z);
        for _ in 0..r {
            m = &m * &s;
        }
    }
    Ok(m)
}

pub fn shift_matrix(p: usize, z: Complex64) -> CMat {
    if p == 1 {
        return CMat::from_rows(&[vec![ONE / z]]);
    }
    let mut s = CMat::zeros(p, p);
    s[(0, p - 1)] = ONE / z;
    for i in 0..p - 1 {
        s[(i + 1, i)] = ONE;
    }
    s
}

/// Transition symbol value for one elementary factor.
pub fn eval_factor(f: &ElementaryFactor, z: Complex64) -> Result<CMat> {
    let b = eval_diag(&f.b);
    let m = match f.kind {
        FactorKind::BernoulliUp => eval_whirl(z, &f.a),
        FactorKind::BernoulliDown => {
            if z.norm() < 1e-280 {
                return Err(Error::Pole {
                    z,
                    what: "Bernoulli down step at the origin".into(),
                });
            }
            eval_whirl(ONE / z, &f.a).transpose()
        }
        FactorKind::GeometricUp => eval_curl(z, &f.a)?,
        FactorKind::GeometricDown => {
            if z.norm() < 1e-280 {
                return Err(Error::Pole {
                    z,
                    what: "geometric down step at the origin".into(),
                });
            }
            eval_curl(ONE / z, &f.a)?.transpose()
        }
    };
    Ok(&m * &b)
}

/// A primitive term of a symbol expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Factor(ElementaryFactor),
    /// `z^k I`
    Monomial(i64),
    /// `S(z)^k`
    Shift(i64),
    Const(CMat),
    /// Scalar rational prefactor `num(z)/den(z)` (coefficient lists, lowest
    /// degree first) times the identity.
    ScalarRational {
        num: Vec<Complex64>,
        den: Vec<Complex64>,
    },
}

/// Ordered product of primitives raised to an integer exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolExpr {
    p: usize,
    prims: Vec<Primitive>,
    exponent: i64,
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = ZERO;
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

impl SymbolExpr {
    pub fn identity(p: usize) -> Self {
        SymbolExpr {
            p,
            prims: vec![],
            exponent: 1,
        }
    }

    pub fn new(p: usize, prims: Vec<Primitive>) -> Result<Self> {
        let s = SymbolExpr {
            p,
            prims,
            exponent: 1,
        };
        s.check_periods()?;
        Ok(s)
    }

    pub fn from_factors(factors: Vec<ElementaryFactor>) -> Result<Self> {
        let p = factors.first().map(|f| f.p()).unwrap_or(1);
        SymbolExpr::new(p, factors.into_iter().map(Primitive::Factor).collect())
    }

    fn check_periods(&self) -> Result<()> {
        for prim in &self.prims {
            let q = match prim {
                Primitive::Factor(f) => f.p(),
                Primitive::Const(c) => c.rows(),
                _ => self.p,
            };
            if q != self.p {
                return Err(Error::Dimension(format!(
                    "primitive period {q} does not match symbol period {}",
                    self.p
                )));
            }
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn prims(&self) -> &[Primitive] {
        &self.prims
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn pow(mut self, e: i64) -> Self {
        self.exponent *= e;
        self
    }

    pub fn push(&mut self, prim: Primitive) {
        self.prims.push(prim);
    }

    /// Concatenation `self * rhs` (both must share `p`; exponents are expanded).
    pub fn concat(&self, rhs: &SymbolExpr) -> SymbolExpr {
        assert_eq!(self.p, rhs.p);
        let mut prims = self.expanded_prims();
        prims.extend(rhs.expanded_prims());
        SymbolExpr {
            p: self.p,
            prims,
            exponent: 1,
        }
    }

    /// Primitives with the whole-expression exponent unrolled (only for
    /// non-negative exponents; negative exponents stay symbolic).
    pub fn expanded_prims(&self) -> Vec<Primitive> {
        if self.exponent == 1 {
            return self.prims.clone();
        }
        assert!(
            self.exponent >= 0,
            "cannot expand a negative symbol exponent"
        );
        let mut out = Vec::with_capacity(self.prims.len() * self.exponent as usize);
        for _ in 0..self.exponent {
            out.extend(self.prims.iter().cloned());
        }
        out
    }

    /// The elementary factors in order, when the expression contains nothing
    /// but factors and monomials. Used by the factorization engine.
    pub fn factor_list(&self) -> Option<(Vec<ElementaryFactor>, i64)> {
        let mut factors = Vec::new();
        let mut zpow = 0i64;
        for prim in self.expanded_prims() {
            match prim {
                Primitive::Factor(f) => factors.push(f),
                Primitive::Monomial(k) => zpow += k,
                _ => return None,
            }
        }
        Some((factors, zpow))
    }

    pub fn eval(&self, z: Complex64) -> Result<CMat> {
        let mut acc = CMat::identity(self.p);
        for prim in &self.prims {
            let v = match prim {
                Primitive::Factor(f) => eval_factor(f, z)?,
                Primitive::Monomial(k) => {
                    if *k < 0 && z.norm() < 1e-280 {
                        return Err(Error::Pole {
                            z,
                            what: "negative monomial power at the origin".into(),
                        });
                    }
                    CMat::scalar(self.p, z.powi(*k as i32))
                }
                Primitive::Shift(k) => eval_shift(self.p, z, *k)?,
                Primitive::Const(c) => c.clone(),
                Primitive::ScalarRational { num, den } => {
                    let n = horner(num, z);
                    let d = horner(den, z);
                    if d.norm() < POLE_EPS * (1.0 + n.norm()) {
                        return Err(Error::Pole {
                            z,
                            what: "scalar rational prefactor".into(),
                        });
                    }
                    CMat::scalar(self.p, n / d)
                }
            };
            acc = &acc * &v;
        }
        matrix_power(&acc, self.exponent)
    }

    /// Inverse value at `z`, computed structurally as the reversed product of
    /// primitive inverses. Composite products can be badly conditioned even
    /// when every factor is tame, so this is the only reliable way to
    /// evaluate `phi^{-1}` inside kernel integrands.
    pub fn eval_inverse(&self, z: Complex64) -> Result<CMat> {
        let mut acc = CMat::identity(self.p);
        for prim in self.prims.iter().rev() {
            let v = match prim {
                Primitive::Factor(f) => eval_factor(f, z)?.inverse()?,
                Primitive::Monomial(k) => {
                    if *k > 0 && z.norm() < 1e-280 {
                        return Err(Error::Pole {
                            z,
                            what: "inverse monomial power at the origin".into(),
                        });
                    }
                    CMat::scalar(self.p, z.powi(-*k as i32))
                }
                Primitive::Shift(k) => eval_shift(self.p, z, -*k)?,
                Primitive::Const(c) => c.inverse()?,
                Primitive::ScalarRational { num, den } => {
                    let n = horner(num, z);
                    let d = horner(den, z);
                    if n.norm() < POLE_EPS * (1.0 + d.norm()) {
                        return Err(Error::Pole {
                            z,
                            what: "zero of a scalar rational prefactor".into(),
                        });
                    }
                    CMat::scalar(self.p, d / n)
                }
            };
            acc = &acc * &v;
        }
        matrix_power(&acc, self.exponent)
    }

    /// Determinant of the symbol at `z`, as the product of primitive
    /// determinants (avoids forming large intermediate products).
    pub fn det(&self, z: Complex64) -> Result<Complex64> {
        let mut acc = ONE;
        for prim in &self.prims {
            let d = match prim {
                Primitive::Factor(f) => eval_factor(f, z)?.det(),
                Primitive::Monomial(k) => z.powi((*k * self.p as i64) as i32),
                Primitive::Shift(k) => eval_shift(self.p, z, *k)?.det(),
                Primitive::Const(c) => c.det(),
                Primitive::ScalarRational { num, den } => {
                    (horner(num, z) / horner(den, z)).powi(self.p as i32)
                }
            };
            acc *= d;
        }
        Ok(acc.powi(self.exponent as i32))
    }

    /// Exact bounds `(lower, upper)` on the Fourier support of the expression:
    /// `hat phi(k) = 0` whenever `k < lower` or `k > upper`. `None` marks an
    /// unbounded side. Derived from the factor structure: Bernoulli steps
    /// shift degree by at most one, geometric steps have one-sided expansions.
    pub fn fourier_support(&self) -> (Option<i64>, Option<i64>) {
        let mut lo = Some(0i64);
        let mut hi = Some(0i64);
        let add = |acc: Option<i64>, v: Option<i64>| match (acc, v) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        for prim in &self.prims {
            let (plo, phi): (Option<i64>, Option<i64>) = match prim {
                Primitive::Factor(f) => match f.kind {
                    FactorKind::BernoulliUp => (Some(0), Some(1)),
                    FactorKind::BernoulliDown => (Some(-1), Some(0)),
                    FactorKind::GeometricUp => (Some(0), None),
                    FactorKind::GeometricDown => (None, Some(0)),
                },
                Primitive::Monomial(k) => (Some(*k), Some(*k)),
                Primitive::Shift(k) => {
                    let q = k.div_euclid(self.p as i64);
                    if k.rem_euclid(self.p as i64) == 0 {
                        (Some(-q), Some(-q))
                    } else {
                        (Some(-q - 1), Some(-q))
                    }
                }
                Primitive::Const(_) => (Some(0), Some(0)),
                Primitive::ScalarRational { num, den } => {
                    let deg = num.len() as i64 - 1;
                    if den.len() <= 1 {
                        (Some(0), Some(deg.max(0)))
                    } else {
                        (None, None)
                    }
                }
            };
            lo = add(lo, plo);
            hi = add(hi, phi);
        }
        if self.exponent < 0 {
            return (None, None);
        }
        (
            lo.map(|v| v * self.exponent),
            hi.map(|v| v * self.exponent),
        )
    }

    /// Finite poles of the expression entries.
    pub fn singular_points(&self) -> Vec<Complex64> {
        let mut pts = Vec::new();
        for prim in &self.prims {
            match prim {
                Primitive::Factor(f) => pts.extend(f.poles()),
                Primitive::Monomial(k) if *k < 0 => pts.push(ZERO),
                Primitive::Shift(k) if *k != 0 => pts.push(ZERO),
                Primitive::ScalarRational { den, .. } => {
                    // Roots of low-degree denominators; higher degrees do not
                    // occur in the models shipped with this crate.
                    pts.extend(poly_roots(den));
                }
                _ => {}
            }
        }
        pts
    }

    /// Finite zeros of the determinant (poles of the inverse).
    pub fn det_zero_points(&self) -> Vec<Complex64> {
        let mut pts = Vec::new();
        for prim in &self.prims {
            match prim {
                Primitive::Factor(f) => pts.extend(f.det_zeros()),
                Primitive::Monomial(k) if *k > 0 => pts.push(ZERO),
                Primitive::Shift(k) if *k != 0 => pts.push(ZERO),
                Primitive::ScalarRational { num, .. } => pts.extend(poly_roots(num)),
                _ => {}
            }
        }
        pts
    }
}

fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.last().is_some_and(|v| v.norm() == 0.0) {
        c.pop();
    }
    match c.len() {
        0 | 1 => vec![],
        2 => vec![-c[0] / c[1]],
        3 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = (b * b - re(4.0) * a * cc).sqrt();
            vec![(-b + disc) / (re(2.0) * a), (-b - disc) / (re(2.0) * a)]
        }
        _ => vec![],
    }
}

/// Matrix power by binary exponentiation; negative exponents invert the base.
pub fn matrix_power(m: &CMat, e: i64) -> Result<CMat> {
    let n = m.rows();
    if e == 0 {
        return Ok(CMat::identity(n));
    }
    let base = if e < 0 { m.inverse()? } else { m.clone() };
    let mut exp = e.unsigned_abs();
    let mut acc = CMat::identity(n);
    let mut sq = base;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = &acc * &sq;
        }
        exp >>= 1;
        if exp > 0 {
            sq = &sq * &sq;
        }
    }
    Ok(acc)
}

/// An annulus `rho_inner < |z| < rho_outer` on which a symbol and its inverse
/// stay finite; checked by sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub rho_inner: f64,
    pub rho_outer: f64,
}

impl Annulus {
    pub fn new(rho_inner: f64, rho_outer: f64) -> Result<Self> {
        if !(rho_inner > 0.0 && rho_inner < 1.0 && rho_outer > 1.0) {
            return Err(Error::Constraint(format!(
                "annulus must satisfy 0 < rho_inner < 1 < rho_outer, got ({rho_inner}, {rho_outer})"
            )));
        }
        Ok(Annulus { rho_inner, rho_outer })
    }

    /// Sample the symbol on both boundary circles and verify it and its
    /// inverse are finite there.
    pub fn check(&self, s: &SymbolExpr, samples: usize) -> Result<()> {
        for &r in &[self.rho_inner, self.rho_outer, 1.0] {
            for k in 0..samples {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
                let z = Complex64::from_polar(r, theta);
                let v = s.eval(z)?;
                if !v.max_abs().is_finite() {
                    return Err(Error::ContourSingularity(format!(
                        "symbol blows up at |z| = {r}"
                    )));
                }
                let d = v.det();
                if d.norm() < 1e-12 * (1.0 + v.max_abs()) {
                    return Err(Error::ContourSingularity(format!(
                        "symbol determinant vanishes at |z| = {r}"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub mod json {
    //! JSON wire format for symbols:
    //!
    //! ```json
    //! {"p": 2,
    //!  "factors": [{"kind": "BernoulliUp", "a": [1.0, 2.0], "b": [1.0, 1.0]},
    //!              {"zpow": -1},
    //!              {"shift": 2},
    //!              {"const": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]},
    //!              {"rat": {"num": [[1.0, 0.0]], "den": [[1.0, 0.0], [-0.5, 0.0]]}}],
    //!  "exponent": 1}
    //! ```
    //!
    //! `const` holds `p*p` re/im pairs in row-major order.

    use super::*;

    #[derive(Serialize, Deserialize)]
    struct RatDoc {
        num: Vec<[f64; 2]>,
        den: Vec<[f64; 2]>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum PrimDoc {
        Factor {
            kind: FactorKind,
            a: Vec<f64>,
            b: Vec<f64>,
        },
        Monomial {
            zpow: i64,
        },
        Shift {
            shift: i64,
        },
        Const {
            #[serde(rename = "const")]
            entries: Vec<[f64; 2]>,
        },
        Rational {
            rat: RatDoc,
        },
    }

    #[derive(Serialize, Deserialize)]
    struct SymbolDoc {
        p: usize,
        factors: Vec<PrimDoc>,
        exponent: i64,
    }

    pub fn to_json(s: &SymbolExpr) -> serde_json::Value {
        let factors = s
            .prims()
            .iter()
            .map(|prim| match prim {
                Primitive::Factor(f) => PrimDoc::Factor {
                    kind: f.kind,
                    a: f.a.clone(),
                    b: f.b.clone(),
                },
                Primitive::Monomial(k) => PrimDoc::Monomial { zpow: *k },
                Primitive::Shift(k) => PrimDoc::Shift { shift: *k },
                Primitive::Const(c) => {
                    let mut entries = Vec::with_capacity(c.rows() * c.cols());
                    for i in 0..c.rows() {
                        for j in 0..c.cols() {
                            entries.push([c[(i, j)].re, c[(i, j)].im]);
                        }
                    }
                    PrimDoc::Const { entries }
                }
                Primitive::ScalarRational { num, den } => PrimDoc::Rational {
                    rat: RatDoc {
                        num: num.iter().map(|v| [v.re, v.im]).collect(),
                        den: den.iter().map(|v| [v.re, v.im]).collect(),
                    },
                },
            })
            .collect::<Vec<_>>();
        serde_json::to_value(SymbolDoc {
            p: s.p(),
            factors,
            exponent: s.exponent(),
        })
        .expect("symbol serialization cannot fail")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<SymbolExpr> {
        let doc: SymbolDoc = serde_json::from_value(v.clone())?;
        let mut prims = Vec::with_capacity(doc.factors.len());
        for pd in doc.factors {
            prims.push(match pd {
                PrimDoc::Factor { kind, a, b } => Primitive::Factor(ElementaryFactor::new(kind, a, b)?),
                PrimDoc::Monomial { zpow } => Primitive::Monomial(zpow),
                PrimDoc::Shift { shift } => Primitive::Shift(shift),
                PrimDoc::Const { entries } => {
                    let n = doc.p;
                    if entries.len() != n * n {
                        return Err(Error::Serde(format!(
                            "const block needs {} entries, got {}",
                            n * n,
                            entries.len()
                        )));
                    }
                    Primitive::Const(CMat::from_fn(n, n, |i, j| {
                        let e = entries[i * n + j];
                        Complex64::new(e[0], e[1])
                    }))
                }
                PrimDoc::Rational { rat } => Primitive::ScalarRational {
                    num: rat.num.iter().map(|e| Complex64::new(e[0], e[1])).collect(),
                    den: rat.den.iter().map(|e| Complex64::new(e[0], e[1])).collect(),
                },
            });
        }
        Ok(SymbolExpr::new(doc.p, prims)?.pow(doc.exponent))
    }
}
