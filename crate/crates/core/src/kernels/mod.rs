//! Correlation kernels: the finite ensemble through the moment matrix and
//! reproducing kernel, and the infinite-path limits through the Wiener-Hopf
//! factorization.
//!
//! Block convention: a [`KernelValue`] holds the `p x p` block whose `(i, j)`
//! entry is the scalar kernel at sites `(m, p x + i; m', p x' + j)`, the
//! residue `i` riding with the first argument. Determinants of scalar kernel
//! matrices built from these entries give the correlation functions; a global
//! transpose of the kernel does not change any determinant.

pub mod closed;

use crate::cmat::{CMat, ONE, ZERO};
use crate::error::{Error, Result};
use crate::quadrature::{separable_double_integral, Contour};
use crate::symbol::{ElementaryFactor, SymbolExpr};
use crate::toeplitz::fourier_block;
use crate::wienerhopf::{Variant, WHFactorization};
use num_complex::Complex64;

/// A single lattice site `(level m, height u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Site {
    pub m: usize,
    pub u: i64,
}

impl Site {
    pub fn new(m: usize, u: i64) -> Self {
        Site { m, u }
    }
}

/// Block-level evaluation request `(m, x; m', x')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelQuery {
    pub m: usize,
    pub x: i64,
    pub mp: usize,
    pub xp: i64,
}

/// A `p x p` kernel block with provenance.
#[derive(Debug, Clone)]
pub struct KernelValue {
    pub block: CMat,
    pub query: KernelQuery,
    /// Set when the query lies outside the stated range of the formula that
    /// produced it (the value is still computed).
    pub out_of_range: bool,
}

impl KernelValue {
    /// Scalar kernel entry `K(m, p x + i; m', p x' + j)`.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.block[(i, j)]
    }
}

/// Evaluate the scalar kernel on a pair of sites through a block evaluator.
pub fn scalar_kernel<F>(eval_block: &F, s: Site, sp: Site, p: usize) -> Result<Complex64>
where
    F: Fn(KernelQuery) -> Result<KernelValue>,
{
    let (x, i) = (s.u.div_euclid(p as i64), s.u.rem_euclid(p as i64) as usize);
    let (xp, j) = (sp.u.div_euclid(p as i64), sp.u.rem_euclid(p as i64) as usize);
    let kv = eval_block(KernelQuery {
        m: s.m,
        x,
        mp: sp.m,
        xp,
    })?;
    Ok(kv.entry(i, j))
}

/// The finite ensemble: `p n` paths over `levels` transition symbols with
/// endpoint shift `M`.
#[derive(Debug, Clone)]
pub struct FiniteEnsemble {
    pub p: usize,
    pub n: usize,
    pub m_shift: i64,
    pub factors: Vec<ElementaryFactor>,
}

impl FiniteEnsemble {
    pub fn new(p: usize, n: usize, m_shift: i64, factors: Vec<ElementaryFactor>) -> Self {
        FiniteEnsemble {
            p,
            n,
            m_shift,
            factors,
        }
    }

    pub fn levels(&self) -> usize {
        self.factors.len()
    }

    /// `phi_{k,l} = phi_{k+1} .. phi_l`.
    pub fn partial(&self, k: usize, l: usize) -> SymbolExpr {
        if k >= l {
            return SymbolExpr::identity(self.p);
        }
        SymbolExpr::from_factors(self.factors[k..l].to_vec()).expect("factors share p")
    }

    pub fn symbol(&self) -> SymbolExpr {
        self.partial(0, self.factors.len())
    }
}

/// Moment matrix `G` (with inverse and determinant) of a finite ensemble:
/// `G_{ij}` is the Fourier block `hat phi(M + n + 1 - i - j)` of the product
/// symbol, `i, j = 1..n`.
#[derive(Debug, Clone)]
pub struct MomentData {
    pub g: CMat,
    pub g_inv: CMat,
    pub det_g: Complex64,
}

pub fn moment_matrix(e: &FiniteEnsemble) -> Result<MomentData> {
    let phi = e.symbol();
    let n = e.n;
    let p = e.p;
    // needed coefficients: k = M + n + 1 - i - j for i, j = 1..n
    let mut blocks = Vec::with_capacity(2 * n - 1);
    for s in 2..=(2 * n) {
        let k = e.m_shift + n as i64 + 1 - s as i64;
        blocks.push(fourier_block(&phi, k, 1.0, 1e-12)?);
    }
    let mut g = CMat::zeros(n * p, n * p);
    for i in 1..=n {
        for j in 1..=n {
            g.set_block(i - 1, j - 1, &blocks[i + j - 2]);
        }
    }
    let det_g = g.det();
    if det_g.norm() < 1e-300 {
        return Err(Error::Singular(
            "moment matrix is singular (model inconsistent or n too small)".into(),
        ));
    }
    let g_inv = equilibrated_inverse(&g)?;
    Ok(MomentData { g, g_inv, det_g })
}

/// Invert after scaling rows and columns to unit max magnitude with exact
/// powers of two: the moment matrix mixes widely different entry scales and
/// plain LU loses several digits on it.
fn equilibrated_inverse(g: &CMat) -> Result<CMat> {
    let dim = g.rows();
    let pow2 = |x: f64| -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            (2.0f64).powi(-(x.log2().round() as i32))
        }
    };
    let mut row_scale = vec![1.0f64; dim];
    for i in 0..dim {
        let m = (0..dim).map(|j| g[(i, j)].norm()).fold(0.0, f64::max);
        row_scale[i] = pow2(m);
    }
    let mut col_scale = vec![1.0f64; dim];
    for j in 0..dim {
        let m = (0..dim)
            .map(|i| g[(i, j)].norm() * row_scale[i])
            .fold(0.0, f64::max);
        col_scale[j] = pow2(m);
    }
    let scaled = CMat::from_fn(dim, dim, |i, j| g[(i, j)].scale(row_scale[i] * col_scale[j]));
    let scaled_inv = scaled.inverse()?;
    Ok(CMat::from_fn(dim, dim, |i, j| {
        scaled_inv[(i, j)].scale(col_scale[i] * row_scale[j])
    }))
}

/// The reproducing (Christoffel-Darboux) kernel
/// `R_n(z, w) = sum_{k,l} w^{k-1} (G^{-1})_{kl} z^{l-1}` over blocks.
pub fn cd_kernel(e: &FiniteEnsemble, md: &MomentData, z: Complex64, w: Complex64) -> CMat {
    let n = e.n;
    let p = e.p;
    let mut acc = CMat::zeros(p, p);
    // Horner in both variables would obscure the block structure; n stays
    // small so the direct double sum is fine.
    let mut wpow = ONE;
    for k in 0..n {
        let mut zpow = ONE;
        for l in 0..n {
            let blk = md.g_inv.block(k, l, p);
            acc = &acc + &blk.scale(wpow * zpow);
            zpow *= z;
        }
        wpow *= w;
    }
    acc
}

/// Finite-`n` correlation kernel block via the two-term formula: minus the
/// transition coefficient for `m > m'`, plus the `G^{-1}` bilinear form in the
/// Fourier blocks of `phi_{m',L}` and `phi_{0,m}`.
pub fn finite_kernel(e: &FiniteEnsemble, md: &MomentData, q: KernelQuery) -> Result<KernelValue> {
    let levels = e.levels();
    if q.m > levels || q.mp > levels {
        return Err(Error::QueryRange(format!(
            "levels m = {}, m' = {} outside 0..={levels}",
            q.m, q.mp
        )));
    }
    let p = e.p;
    let n = e.n;
    let mut block = CMat::zeros(p, p);
    if q.m > q.mp {
        let phi_mm = e.partial(q.mp, q.m);
        let single = fourier_block(&phi_mm, q.x - q.xp, 1.0, 1e-12)?;
        block = &block - &single;
    }
    // W_k = hat phi_{m',L}(M + n - x' - k), Z_l = hat phi_{0,m}(x + 1 - l)
    let phi_right = e.partial(q.mp, levels);
    let phi_left = e.partial(0, q.m);
    let mut w_blocks = Vec::with_capacity(n);
    let mut z_blocks = Vec::with_capacity(n);
    for k in 1..=n as i64 {
        w_blocks.push(fourier_block(&phi_right, e.m_shift + n as i64 - q.xp - k, 1.0, 1e-12)?);
        z_blocks.push(fourier_block(&phi_left, q.x + 1 - k, 1.0, 1e-12)?);
    }
    for k in 0..n {
        for l in 0..n {
            let g_kl = md.g_inv.block(k, l, p);
            let term = &(&w_blocks[k] * &g_kl) * &z_blocks[l];
            block = &block + &term;
        }
    }
    Ok(KernelValue {
        block,
        query: q,
        out_of_range: false,
    })
}

/// Inner/outer contours for a double-integral kernel.
#[derive(Debug, Clone, Copy)]
pub struct ContourPair {
    pub inner: Contour,
    pub outer: Contour,
}

fn singularity_ledger(factors: &[ElementaryFactor]) -> (f64, f64) {
    let mut max_in = 0.0f64;
    let mut min_out = f64::INFINITY;
    for f in factors {
        for s in f.poles().into_iter().chain(f.det_zeros()) {
            let r = s.norm();
            if r < 1.0 - 1e-9 {
                max_in = max_in.max(r);
            } else if r > 1.0 + 1e-9 {
                min_out = min_out.min(r);
            } else {
                // on-circle singularity: the caller should be using deformed
                // closed-form contours instead
                max_in = max_in.max(1.0);
            }
        }
    }
    (max_in, min_out)
}

impl ContourPair {
    /// Radii straddling the unit circle, clear of the factors' poles and
    /// determinant zeros: used with `z` inner / `w` outer by the bottom
    /// kernel.
    pub fn bottom_defaults(factors: &[ElementaryFactor]) -> Result<ContourPair> {
        let (max_in, min_out) = singularity_ledger(factors);
        if max_in >= 1.0 {
            return Err(Error::ContourSingularity(
                "symbol has singularities on the unit circle".into(),
            ));
        }
        let r_in = 0.5 * (max_in + 1.0);
        let r_out = if min_out.is_finite() {
            0.5 * (1.0 + min_out)
        } else {
            1.15
        };
        Ok(ContourPair {
            inner: Contour::circle(r_in),
            outer: Contour::circle(r_out.min(1.3)),
        })
    }

    /// Mirrored nesting for the top kernel (`w` inner, `z` outer).
    pub fn top_defaults(factors: &[ElementaryFactor]) -> Result<ContourPair> {
        ContourPair::bottom_defaults(factors)
    }
}

/// Shared evaluator for the two limit kernels of the factorized ensemble.
fn limit_kernel(
    f: &WHFactorization,
    factors: &[ElementaryFactor],
    q: KernelQuery,
    contours: &ContourPair,
    tol: f64,
    top: bool,
) -> Result<KernelValue> {
    let levels = factors.len();
    let p = factors.first().map(|f| f.p()).unwrap_or(1);
    let out_of_range = q.m == 0 || q.m >= levels || q.mp == 0 || q.mp >= levels;
    let ensemble = FiniteEnsemble::new(p, 0, f.m_shift, factors.to_vec());
    let mut block = CMat::zeros(p, p);
    if q.m > q.mp {
        let phi_mm = ensemble.partial(q.mp, q.m);
        // single integral on a contour clear of the circle-adjacent poles
        let single = fourier_block(&phi_mm, q.x - q.xp, contours.inner.radius, tol)?;
        block = &block - &single;
    }
    let phi_right = ensemble.partial(q.mp, levels);
    let phi_left = ensemble.partial(0, q.m);
    let m_shift = f.m_shift;
    if !top {
        debug_assert_eq!(f.variant, Variant::PlusMinus);
        // - (2 pi i)^{-2} \iint_{|z|<|w|} phi_{m',L}(w) minus^{-1}(w)
        //   plus^{-1}(z) phi_{0,m}(z) w^{x'} / (z^{x+1} (z - w))
        // the normalizer C cancels exactly between the two sides, so the
        // un-normalized cores are used
        let left = |z: Complex64| -> CMat {
            &f.plus_core.eval_inverse(z).unwrap() * &phi_left.eval(z).unwrap()
        };
        let right = |w: Complex64| -> CMat {
            &phi_right.eval(w).unwrap() * &f.minus_core.eval_inverse(w).unwrap()
        };
        let scalar = |z: Complex64, w: Complex64| -> Complex64 {
            w.powi(q.xp as i32) * z.powi(-(q.x as i32) - 1) / (z - w)
        };
        let combine = |l: &CMat, r: &CMat| -> CMat { r * l };
        let dbl = separable_double_integral(
            &left,
            &right,
            &scalar,
            &combine,
            &contours.inner,
            &contours.outer,
            tol,
        )?;
        block = &block - &dbl;
    } else {
        debug_assert_eq!(f.variant, Variant::MinusPlus);
        // + (2 pi i)^{-2} \iint_{|w|<|z|} phi_{m',L}(w) plus^{-1}(w)
        //   minus^{-1}(z) phi_{0,m}(z) w^{xi'-M} / (z^{xi-M+1} (z - w))
        let right = |w: Complex64| -> CMat {
            &phi_right.eval(w).unwrap() * &f.plus_core.eval_inverse(w).unwrap()
        };
        let left = |z: Complex64| -> CMat {
            &f.minus_core.eval_inverse(z).unwrap() * &phi_left.eval(z).unwrap()
        };
        let scalar = |w: Complex64, z: Complex64| -> Complex64 {
            w.powi((q.xp - m_shift) as i32) * z.powi(-((q.x - m_shift) as i32) - 1) / (z - w)
        };
        // inner variable is w here: combine(inner = R(w), outer = L(z)) = R L
        let combine = |r: &CMat, l: &CMat| -> CMat { r * l };
        let dbl = separable_double_integral(
            &right,
            &left,
            &scalar,
            &combine,
            &contours.inner,
            &contours.outer,
            tol,
        )?;
        block = &block + &dbl;
    }
    Ok(KernelValue {
        block,
        query: q,
        out_of_range,
    })
}

/// Bottom limit kernel (fixed heights, `n` to infinity); requires a
/// `PlusMinus` factorization of the product symbol.
pub fn kernel_bottom(
    f: &WHFactorization,
    factors: &[ElementaryFactor],
    q: KernelQuery,
    contours: Option<ContourPair>,
    tol: f64,
) -> Result<KernelValue> {
    if f.variant != Variant::PlusMinus {
        return Err(Error::Factorization(
            "kernel_bottom needs the plus-minus factorization".into(),
        ));
    }
    let contours = match contours {
        Some(c) => c,
        None => ContourPair::bottom_defaults(factors)?,
    };
    limit_kernel(f, factors, q, &contours, tol, false)
}

/// Top limit kernel (heights shifted with the top pack); requires a
/// `MinusPlus` factorization. Queries use the shifted coordinates `xi`.
pub fn kernel_top(
    f: &WHFactorization,
    factors: &[ElementaryFactor],
    q: KernelQuery,
    contours: Option<ContourPair>,
    tol: f64,
) -> Result<KernelValue> {
    if f.variant != Variant::MinusPlus {
        return Err(Error::Factorization(
            "kernel_top needs the minus-plus factorization".into(),
        ));
    }
    let contours = match contours {
        Some(c) => c,
        None => {
            let c = ContourPair::top_defaults(factors)?;
            // top nesting: w rides the inner contour, z the outer
            ContourPair {
                inner: c.inner,
                outer: c.outer,
            }
        }
    };
    limit_kernel(f, factors, q, &contours, tol, true)
}

/// Reproducing-property residual: max over `k < n` and the given `z` samples
/// of `|(1/2 pi i) \oint w^k phi(w) R_n(z, w) dw / w^{M+n} - z^k I|` (relative).
pub fn reproducing_residual(
    e: &FiniteEnsemble,
    md: &MomentData,
    z_samples: &[Complex64],
) -> Result<f64> {
    let phi = e.symbol();
    let mut worst = 0.0f64;
    for &z in z_samples {
        for k in 0..e.n as i64 {
            let f = |w: Complex64| {
                let rn = cd_kernel(e, md, z, w);
                let phik = phi.eval(w).expect("symbol on unit circle");
                (&phik * &rn).scale(w.powi(k as i32) * w.powi(-(e.m_shift as i32) - (e.n as i32)))
            };
            let got = crate::quadrature::circle_integral(&f, &Contour::circle(1.0), 1e-12)?;
            let want = CMat::scalar(e.p, z.powi(k as i32));
            worst = worst.max(got.max_diff(&want) / (1.0 + want.max_abs()));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::re;
    use crate::models::presets;
    use crate::symbol::FactorKind;
    use crate::quadrature::double_integral;
    use crate::wienerhopf::{factorize, Variant};

    fn bern_up(a: f64, b: f64) -> ElementaryFactor {
        ElementaryFactor::new(FactorKind::BernoulliUp, vec![a], vec![b]).unwrap()
    }

    #[test]
    fn moment_matrix_of_constant_symbol() {
        // phi = 1, M = 0, n = 2: G_{ij} = delta_{i+j-2, 1}, an antidiagonal.
        let e = FiniteEnsemble::new(1, 2, 0, vec![]);
        let md = moment_matrix(&e).unwrap();
        let expected = CMat::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]);
        assert!(md.g.max_diff(&expected) < 1e-12);
    }

    #[test]
    fn moment_matrix_single_bernoulli() {
        // phi = 1 + z, n = 1, M = 0: G = [coefficient of z^0 in (1+z)] = [1]
        let e = FiniteEnsemble::new(1, 1, 0, vec![bern_up(1.0, 1.0)]);
        let md = moment_matrix(&e).unwrap();
        assert!((md.g[(0, 0)] - ONE).norm() < 1e-12);
    }

    #[test]
    fn moment_matrix_two_periodic_positive() {
        let preset = presets::aztec_2p(2.0, 0.5, 0.9, 2).unwrap();
        let e = FiniteEnsemble::new(2, 4, preset.m_shift, preset.factors.clone());
        let md = moment_matrix(&e).unwrap();
        assert!(md.det_g.im.abs() < 1e-8 * md.det_g.norm());
        assert!(md.det_g.re > 0.0, "det G = {:?}", md.det_g);
    }

    #[test]
    fn degree_zero_reproducing_kernel() {
        // n = 1: R_1 is the constant block (G_11)^{-1}
        let preset = presets::aztec_2p(2.0, 0.5, 0.9, 1).unwrap();
        let e = FiniteEnsemble::new(2, 1, preset.m_shift, preset.factors.clone());
        let md = moment_matrix(&e).unwrap();
        let z = Complex64::new(0.3, 0.8);
        let w = Complex64::new(-0.5, 0.1);
        let r1 = cd_kernel(&e, &md, z, w);
        assert!(r1.max_diff(&md.g_inv) < 1e-12);
    }

    #[test]
    fn reproducing_property_scalar_chain() {
        let e = FiniteEnsemble::new(1, 3, 1, vec![bern_up(0.7, 1.0), bern_up(1.8, 2.0)]);
        let md = moment_matrix(&e).unwrap();
        let samples = [Complex64::new(0.4, 0.2), Complex64::new(-0.8, 0.5)];
        let res = reproducing_residual(&e, &md, &samples).unwrap();
        assert!(res < 1e-9, "residual {res}");
    }

    #[test]
    fn reproducing_property_two_periodic() {
        let preset = presets::aztec_2p(2.0, 0.5, 0.9, 2).unwrap();
        let e = FiniteEnsemble::new(2, 4, preset.m_shift, preset.factors.clone());
        let md = moment_matrix(&e).unwrap();
        let samples = [Complex64::new(0.6, -0.3)];
        let res = reproducing_residual(&e, &md, &samples).unwrap();
        assert!(res < 1e-8, "residual {res}");
    }

    #[test]
    fn chi_term_vanishes_on_diagonal_levels() {
        let e = FiniteEnsemble::new(1, 2, 1, vec![bern_up(0.7, 1.0), bern_up(1.8, 1.0)]);
        let md = moment_matrix(&e).unwrap();
        let kv = finite_kernel(
            &e,
            &md,
            KernelQuery {
                m: 1,
                x: 0,
                mp: 1,
                xp: 0,
            },
        )
        .unwrap();
        // the pure bilinear term at equal levels: no subtraction occurs; the
        // value is a real density in [0, 1]
        let v = kv.entry(0, 0);
        assert!(v.im.abs() < 1e-10);
        assert!(v.re > -1e-9 && v.re < 1.0 + 1e-9, "density {v:?}");
    }

    #[test]
    fn bottom_kernel_converges_from_finite_kernels() {
        // n-convergence of K_n to K_bottom for the regularized two-periodic
        // symbol. The query sits at the fringe of the n = 8 pack so that all
        // three errors are in distinct regimes: outside the pack, in the
        // transition zone, and saturated (this model converges *faster* than
        // geometrically once the pack covers the site).
        let preset = presets::aztec_2p(2.0, 0.5, 0.9, 2).unwrap();
        let s = preset.symbol();
        let f = factorize(&s, preset.m_shift, Variant::PlusMinus).unwrap();
        let q = KernelQuery {
            m: 4,
            x: 7,
            mp: 4,
            xp: 7,
        };
        let limit = kernel_bottom(&f, &preset.factors, q, None, 1e-10).unwrap();
        let mut errs = Vec::new();
        for n in [4usize, 8, 16] {
            let e = FiniteEnsemble::new(2, n, preset.m_shift, preset.factors.clone());
            let md = moment_matrix(&e).unwrap();
            let kn = finite_kernel(&e, &md, q).unwrap();
            errs.push(kn.block.max_diff(&limit.block));
        }
        assert!(
            errs[0] > errs[1] && errs[1] > errs[2],
            "errors not decreasing: {errs:?}"
        );
        assert!(errs[2] < 1e-5, "n = 16 error {:.3e}", errs[2]);
    }

    #[test]
    fn scalar_bottom_kernel_matches_schur_style_form() {
        // hexagon p=1: phi_k = 1 + b_k z; K at the middle level reduces to the
        // scalar double integral with phi_+ = prod_{k>N/2}, phi_- = prod_{k<=N/2}
        let preset = presets::hexagon_p1(&[2.0, 3.0, 0.5, 0.4]).unwrap();
        let s = preset.symbol();
        let f = factorize(&s, preset.m_shift, Variant::PlusMinus).unwrap();
        let q = KernelQuery {
            m: 2,
            x: 1,
            mp: 2,
            xp: 1,
        };
        let kv = kernel_bottom(&f, &preset.factors, q, None, 1e-11).unwrap();
        // independent route: direct double integral of the explicit rational
        let bs = [2.0, 3.0, 0.5, 0.4];
        let g = |z: Complex64, w: Complex64| {
            let num: Complex64 = (ONE + re(bs[0]) * z) * (ONE + re(bs[1]) * z)
                / ((ONE + re(bs[0]) * w) * (ONE + re(bs[1]) * w));
            let den: Complex64 = (ONE + re(bs[2]) * w) * (ONE + re(bs[3]) * w)
                / ((ONE + re(bs[2]) * z) * (ONE + re(bs[3]) * z));
            CMat::from_rows(&[vec![
                num * den * w.powi(q.xp as i32) / (z.powi(q.x as i32 + 1) * (z - w)),
            ]])
        };
        let pair = ContourPair::bottom_defaults(&preset.factors).unwrap();
        let direct = double_integral(&g, &pair.inner, &pair.outer, 1e-12).unwrap();
        let expect = direct.scale(re(-1.0));
        assert!(
            (kv.entry(0, 0) - expect[(0, 0)]).norm() < 1e-9,
            "pipeline {:?} vs direct {:?}",
            kv.entry(0, 0),
            expect[(0, 0)]
        );
    }

    #[test]
    fn top_kernel_runs_on_two_periodic() {
        let preset = presets::aztec_2p(2.0, 0.5, 0.9, 2).unwrap();
        let s = preset.symbol();
        let f = factorize(&s, preset.m_shift, Variant::MinusPlus).unwrap();
        let kv = kernel_top(
            &f,
            &preset.factors,
            KernelQuery {
                m: 4,
                x: -1,
                mp: 4,
                xp: -1,
            },
            None,
            1e-10,
        )
        .unwrap();
        // a one-point density block: real diagonal in [0, 1]
        for i in 0..2 {
            let v = kv.entry(i, i);
            assert!(v.im.abs() < 1e-8, "imag {v:?}");
            assert!(v.re > -1e-8 && v.re < 1.0 + 1e-8, "density {v:?}");
        }
    }
}
