//! Symbol lists for the models shipped with this crate.
//!
//! Each preset holds the per-level transition factors `phi_1 .. phi_L`, the
//! endpoint shift `M` and query-range metadata. The Aztec families carry the
//! regularization parameter `a`: strictly below one the product symbol is
//! admissible, at `a = 1` only the closed-form kernels apply.

use crate::error::{Error, Result};
use crate::symbol::{ElementaryFactor, FactorKind, SymbolExpr};
use serde_json::json;

#[derive(Debug, Clone)]
pub struct ModelPreset {
    pub name: String,
    pub p: usize,
    /// Number of transition levels (symbols) `m = 1..=levels`.
    pub levels: usize,
    /// Endpoint shift `M` of the fixed boundary points.
    pub m_shift: i64,
    pub factors: Vec<ElementaryFactor>,
    /// Original construction parameters, for reports and serialization.
    pub params: serde_json::Value,
    /// Interior query levels run over `0 < m < levels`.
    pub query_note: &'static str,
}

impl ModelPreset {
    /// The product symbol `phi = phi_1 .. phi_L`.
    pub fn symbol(&self) -> SymbolExpr {
        SymbolExpr::from_factors(self.factors.clone()).expect("preset factors share p")
    }

    /// Partial product `phi_{k,l} = phi_{k+1} .. phi_l` (empty product for
    /// `k >= l`).
    pub fn partial(&self, k: usize, l: usize) -> SymbolExpr {
        if k >= l {
            return SymbolExpr::identity(self.p);
        }
        SymbolExpr::from_factors(self.factors[k..l].to_vec()).expect("preset factors share p")
    }
}

fn check_positive(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Model(format!("{name} must be positive, got {xs:?}")));
    }
    Ok(())
}

/// Uniform-favoring Aztec diamond with `p = 1`: levels alternate a Bernoulli
/// step down `1 + a^{-1} z^{-1}` and a geometric step down `1/(1 - a z^{-1})`,
/// `M = -n`. The weight favors vertical dominoes; `a = 1` is the uniform
/// measure (closed-form kernel only).
pub fn aztec_p1(a: f64, n: usize) -> Result<ModelPreset> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Model(format!("aztec_p1 requires 0 < a <= 1, got {a}")));
    }
    if n == 0 {
        return Err(Error::Model("aztec_p1 requires n >= 1".into()));
    }
    let mut factors = Vec::with_capacity(2 * n);
    for _ in 0..n {
        factors.push(ElementaryFactor {
            kind: FactorKind::BernoulliDown,
            a: vec![1.0 / a],
            b: vec![1.0],
        });
        factors.push(ElementaryFactor {
            kind: FactorKind::GeometricDown,
            a: vec![a],
            b: vec![1.0],
        });
    }
    Ok(ModelPreset {
        name: "aztec_p1".into(),
        p: 1,
        levels: 2 * n,
        m_shift: -(n as i64),
        factors,
        params: json!({"a": a, "n": n}),
        query_note: "columns m' in 0..n, heights xi in -n..=-1 relative to the top pack",
    })
}

/// Two-periodic Aztec diamond of size `2n` (`p = 2`), regularized by
/// `a in (0, 1]`; `alpha beta = 1` is required. `M = -n`.
pub fn aztec_2p(alpha: f64, beta: f64, a: f64, n: usize) -> Result<ModelPreset> {
    check_positive("alpha/beta", &[alpha, beta])?;
    if (alpha * beta - 1.0).abs() > 1e-12 {
        return Err(Error::Model(format!(
            "aztec_2p requires alpha*beta = 1, got {}",
            alpha * beta
        )));
    }
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Model(format!("aztec_2p requires 0 < a <= 1, got {a}")));
    }
    let a2 = alpha * alpha;
    let b2 = beta * beta;
    let mut factors = Vec::with_capacity(4 * n);
    for _ in 0..n {
        factors.push(ElementaryFactor {
            kind: FactorKind::BernoulliDown,
            a: vec![b2 / a, a2 / a],
            b: vec![1.0, 1.0],
        });
        factors.push(ElementaryFactor {
            kind: FactorKind::GeometricDown,
            a: vec![b2 * a, a2 * a],
            b: vec![1.0, 1.0],
        });
        factors.push(ElementaryFactor {
            kind: FactorKind::BernoulliDown,
            a: vec![1.0 / a, 1.0 / a],
            b: vec![1.0, 1.0],
        });
        factors.push(ElementaryFactor {
            kind: FactorKind::GeometricDown,
            a: vec![a, a],
            b: vec![1.0, 1.0],
        });
    }
    Ok(ModelPreset {
        name: "aztec_2p".into(),
        p: 2,
        levels: 4 * n,
        m_shift: -(n as i64),
        factors,
        params: json!({"alpha": alpha, "beta": beta, "a": a, "n": n}),
        query_note: "kernel levels 4m with 0 < m < n, heights 2 xi + i with -n <= xi <= -1",
    })
}

/// 3x2-periodic Aztec diamond of size `6n` (`p = 3`): four factors
/// `M_d(alpha/a) N_d(alpha a) M_d(beta/a) N_d(beta a)` repeated `3n` times,
/// `M = -2n`. Requires `prod(alpha) = prod(beta) = 1`.
pub fn aztec_3x2(alpha: [f64; 3], beta: [f64; 3], a: f64, n: usize) -> Result<ModelPreset> {
    check_positive("alpha", &alpha)?;
    check_positive("beta", &beta)?;
    for (label, v) in [("alpha", &alpha), ("beta", &beta)] {
        let prod: f64 = v.iter().product();
        if (prod - 1.0).abs() > 1e-9 {
            return Err(Error::Model(format!(
                "aztec_3x2 requires prod({label}) = 1, got {prod}"
            )));
        }
    }
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Model(format!("aztec_3x2 requires 0 < a <= 1, got {a}")));
    }
    let mut factors = Vec::with_capacity(12 * n);
    for _ in 0..3 * n {
        factors.push(ElementaryFactor {
            kind: FactorKind::BernoulliDown,
            a: alpha.iter().map(|x| x / a).collect(),
            b: vec![1.0; 3],
        });
        factors.push(ElementaryFactor {
            kind: FactorKind::GeometricDown,
            a: alpha.iter().map(|x| x * a).collect(),
            b: vec![1.0; 3],
        });
        factors.push(ElementaryFactor {
            kind: FactorKind::BernoulliDown,
            a: beta.iter().map(|x| x / a).collect(),
            b: vec![1.0; 3],
        });
        factors.push(ElementaryFactor {
            kind: FactorKind::GeometricDown,
            a: beta.iter().map(|x| x * a).collect(),
            b: vec![1.0; 3],
        });
    }
    Ok(ModelPreset {
        name: "aztec_3x2".into(),
        p: 3,
        levels: 12 * n,
        m_shift: -2 * (n as i64),
        factors,
        params: json!({"alpha": alpha, "beta": beta, "a": a, "n": n}),
        query_note: "kernel levels 12m with 0 < m < n, heights 3 xi + j",
    })
}

/// Infinite-hexagon lozenge tilings with 2x2-periodic weights (`p = 2`):
/// levels alternate `[[a, b], [c z, d]]` and `[[alpha, beta], [gamma z,
/// delta]]`, `4n` levels, `M = n`. Exactly one of `bc/ad` and
/// `beta gamma/(alpha delta)` must be below one.
#[allow(clippy::too_many_arguments)]
pub fn hexagon_2x2(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    n: usize,
) -> Result<ModelPreset> {
    check_positive("hexagon weights", &[a, b, c, d, alpha, beta, gamma, delta])?;
    let r_odd = b * c / (a * d);
    let r_even = beta * gamma / (alpha * delta);
    if (r_odd - r_even).abs() < 1e-12 {
        return Err(Error::Model(format!(
            "hexagon_2x2 requires bc/ad != beta gamma/(alpha delta), both are {r_odd}"
        )));
    }
    if !((r_odd - 1.0) * (r_even - 1.0) < 0.0) {
        return Err(Error::Model(format!(
            "hexagon_2x2 requires exactly one of bc/ad = {r_odd}, beta gamma/(alpha delta) = {r_even} below one"
        )));
    }
    let odd = ElementaryFactor {
        kind: FactorKind::BernoulliUp,
        a: vec![b / d, c / a],
        b: vec![a, d],
    };
    let even = ElementaryFactor {
        kind: FactorKind::BernoulliUp,
        a: vec![beta / delta, gamma / alpha],
        b: vec![alpha, delta],
    };
    let mut factors = Vec::with_capacity(4 * n);
    for _ in 0..2 * n {
        factors.push(odd.clone());
        factors.push(even.clone());
    }
    Ok(ModelPreset {
        name: "hexagon_2x2".into(),
        p: 2,
        levels: 4 * n,
        m_shift: n as i64,
        factors,
        params: json!({
            "a": a, "b": b, "c": c, "d": d,
            "alpha": alpha, "beta": beta, "gamma": gamma, "delta": delta, "n": n
        }),
        query_note: "kernel levels 4m with 0 < m < n, bottom-pack heights 2x + j with x >= 0",
    })
}

/// Scalar hexagon chain `phi_k = 1 + b_k z` with `b_1..b_{N/2} > 1 >
/// b_{N/2+1}..b_N`, `M = N/2`; the bottom process is Schur-measure dual.
pub fn hexagon_p1(bs: &[f64]) -> Result<ModelPreset> {
    check_positive("b", bs)?;
    let n = bs.len();
    if n == 0 || n % 2 != 0 {
        return Err(Error::Model("hexagon_p1 needs an even number of parameters".into()));
    }
    let half = n / 2;
    if !bs[..half].iter().all(|&x| x > 1.0) || !bs[half..].iter().all(|&x| x < 1.0) {
        return Err(Error::Model(
            "hexagon_p1 requires b_1..b_{N/2} > 1 > b_{N/2+1}..b_N".into(),
        ));
    }
    let factors = bs
        .iter()
        .map(|&bk| ElementaryFactor {
            kind: FactorKind::BernoulliUp,
            a: vec![bk],
            b: vec![1.0],
        })
        .collect();
    Ok(ModelPreset {
        name: "hexagon_p1".into(),
        p: 1,
        levels: n,
        m_shift: half as i64,
        factors,
        params: json!({"b": bs}),
        query_note: "Schur cross-check at the middle level m = N/2",
    })
}

/// Look up a preset by name with JSON parameters (the CLI entry point).
pub fn preset(name: &str, params: &serde_json::Value) -> Result<ModelPreset> {
    let f = |key: &str| -> Result<f64> {
        params
            .get(key)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::Model(format!("preset {name} needs numeric parameter {key:?}")))
    };
    let u = |key: &str| -> Result<usize> {
        params
            .get(key)
            .and_then(|v| v.as_u64())
            .map(|v| v as usize)
            .ok_or_else(|| Error::Model(format!("preset {name} needs integer parameter {key:?}")))
    };
    match name {
        "aztec_p1" => aztec_p1(f("a")?, u("n")?),
        "aztec_2p" => aztec_2p(f("alpha")?, f("beta")?, f("a")?, u("n")?),
        "aztec_3x2" => {
            let triple = |key: &str| -> Result<[f64; 3]> {
                let arr = params
                    .get(key)
                    .and_then(|v| v.as_array())
                    .ok_or_else(|| Error::Model(format!("preset {name} needs array {key:?}")))?;
                if arr.len() != 3 {
                    return Err(Error::Model(format!("{key} must have length 3")));
                }
                let mut out = [0.0; 3];
                for (i, v) in arr.iter().enumerate() {
                    out[i] = v
                        .as_f64()
                        .ok_or_else(|| Error::Model(format!("{key}[{i}] must be numeric")))?;
                }
                Ok(out)
            };
            aztec_3x2(triple("alpha")?, triple("beta")?, f("a")?, u("n")?)
        }
        "hexagon_2x2" => hexagon_2x2(
            f("a")?,
            f("b")?,
            f("c")?,
            f("d")?,
            f("alpha")?,
            f("beta")?,
            f("gamma")?,
            f("delta")?,
            u("n")?,
        ),
        "hexagon_p1" => {
            let arr = params
                .get("b")
                .and_then(|v| v.as_array())
                .ok_or_else(|| Error::Model("hexagon_p1 needs array parameter \"b\"".into()))?;
            let bs: Option<Vec<f64>> = arr.iter().map(|v| v.as_f64()).collect();
            hexagon_p1(&bs.ok_or_else(|| Error::Model("b entries must be numeric".into()))?)
        }
        other => Err(Error::Model(format!("unknown model preset {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aztec_2p_preset_shape() {
        let m = aztec_2p(2.0, 0.5, 0.9, 2).unwrap();
        assert_eq!(m.levels, 8);
        assert_eq!(m.factors.len(), 8);
        assert_eq!(m.m_shift, -2);
        assert_eq!(m.p, 2);
    }

    #[test]
    fn aztec_2p_rejects_bad_alpha_beta() {
        assert!(aztec_2p(2.0, 0.6, 0.9, 2).is_err());
    }

    #[test]
    fn aztec_3x2_accepts_figure_parameters() {
        let a0 = 0.2;
        let a1 = 0.7;
        let preset = aztec_3x2([a0, a1, 1.0 / (a0 * a1)], [1.0, 1.0, 1.0], 0.9, 1).unwrap();
        assert_eq!(preset.levels, 12);
        assert_eq!(preset.m_shift, -2);
    }

    #[test]
    fn hexagon_rejects_equal_ratios() {
        let err = hexagon_2x2(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1);
        assert!(err.is_err());
    }

    #[test]
    fn hexagon_accepts_figure_parameters() {
        // b = 0.1, c = 4, beta = 10, gamma = 0.25, a = d = alpha = delta = 1
        let m = hexagon_2x2(1.0, 0.1, 4.0, 1.0, 1.0, 10.0, 0.25, 1.0, 2).unwrap();
        assert_eq!(m.levels, 8);
        assert_eq!(m.m_shift, 2);
    }

    #[test]
    fn preset_lookup_by_name() {
        let p = preset(
            "aztec_2p",
            &serde_json::json!({"alpha": 2.0, "beta": 0.5, "a": 0.9, "n": 2}),
        )
        .unwrap();
        assert_eq!(p.name, "aztec_2p");
        assert!(preset("nope", &serde_json::json!({})).is_err());
    }

    #[test]
    fn partial_products_compose() {
        let m = aztec_p1(0.8, 2).unwrap();
        let z = num_complex::Complex64::new(0.9, 0.3);
        let full = m.symbol().eval(z).unwrap();
        let left = m.partial(0, 2).eval(z).unwrap();
        let right = m.partial(2, 4).eval(z).unwrap();
        assert!((&left * &right).max_diff(&full) < 1e-13);
    }
}
