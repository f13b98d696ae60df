//! Fourier (block Toeplitz) coefficients and winding numbers of symbols.

use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::quadrature::{circle_integral, Contour};
use crate::symbol::SymbolExpr;
use num_complex::Complex64;

/// `hat phi(k) = (1/2 pi i) \oint phi(z) dz / z^{k+1}` on a circle of the
/// given radius. The block Toeplitz matrix entry is then
/// `T_phi(p x + r, p y + s) = (hat phi(y - x))_{r, s}` (zero-based residues).
pub fn fourier_block(s: &SymbolExpr, k: i64, radius: f64, tol: f64) -> Result<CMat> {
    let (lo, hi) = s.fourier_support();
    if lo.is_some_and(|l| k < l) || hi.is_some_and(|h| k > h) {
        return Ok(CMat::zeros(s.p(), s.p()));
    }
    for sp in s.singular_points() {
        if (sp.norm() - radius).abs() < 1e-9 * radius.max(1.0) {
            return Err(Error::ContourSingularity(format!(
                "Fourier contour of radius {radius} passes through |z| = {}",
                sp.norm()
            )));
        }
    }
    let contour = Contour::circle(radius);
    let f = |z: Complex64| {
        let v = s.eval(z).expect("symbol evaluation on contour");
        v.scale(z.powi(-(k + 1) as i32))
    };
    circle_integral(&f, &contour, tol)
}

/// Scalar Toeplitz entry helper: the `(r, s)` entry of `hat phi(y - x)` for
/// sites `u = p x + r`, `v = p y + s`.
pub fn toeplitz_entry(s: &SymbolExpr, u: i64, v: i64, radius: f64, tol: f64) -> Result<Complex64> {
    let p = s.p() as i64;
    let x = u.div_euclid(p);
    let r = u.rem_euclid(p) as usize;
    let y = v.div_euclid(p);
    let c = v.rem_euclid(p) as usize;
    Ok(fourier_block(s, y - x, radius, tol)?[(r, c)])
}

fn winding_at_nodes(s: &SymbolExpr, nodes: usize) -> Result<(f64, f64, f64)> {
    let mut min_abs = f64::INFINITY;
    let mut max_abs: f64 = 0.0;
    let mut total_arg = 0.0;
    let mut prev = s.det(Complex64::new(1.0, 0.0))?;
    min_abs = min_abs.min(prev.norm());
    max_abs = max_abs.max(prev.norm());
    for k in 1..=nodes {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / nodes as f64;
        let z = Complex64::from_polar(1.0, theta);
        let d = s.det(z)?;
        min_abs = min_abs.min(d.norm());
        max_abs = max_abs.max(d.norm());
        total_arg += (d / prev).arg();
        prev = d;
    }
    Ok((total_arg / (2.0 * std::f64::consts::PI), min_abs, max_abs))
}

/// Winding number of `det phi` around the origin along the unit circle,
/// computed by accumulated argument with adaptive node doubling. The rounded
/// result must sit within 0.25 of an integer, and successive refinements must
/// agree, otherwise an error is returned.
pub fn winding_number_det(s: &SymbolExpr, start_nodes: usize) -> Result<i64> {
    let mut nodes = start_nodes.max(256).next_power_of_two();
    let (mut cur, mut min_abs, mut max_abs) = winding_at_nodes(s, nodes)?;
    loop {
        nodes *= 2;
        let (next, mn, mx) = winding_at_nodes(s, nodes)?;
        min_abs = min_abs.min(mn);
        max_abs = max_abs.max(mx);
        if min_abs < 1e-10 * max_abs {
            return Err(Error::NearSingularCircle { min_abs });
        }
        if (next - cur).abs() < 1e-6 {
            let rounded = next.round();
            let residual = (next - rounded).abs();
            if residual > 0.25 {
                return Err(Error::NonIntegerWinding { residual });
            }
            return Ok(rounded as i64);
        }
        cur = next;
        if nodes > (1 << 20) {
            return Err(Error::NoConvergence {
                delta: (next - cur).abs(),
                nodes,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::re;
    use crate::symbol::{ElementaryFactor, FactorKind, Primitive};

    #[test]
    fn polynomial_coefficients() {
        // phi = 1 + a z: hat(0) = 1, hat(1) = a, hat(2) = 0
        let f = ElementaryFactor::new(FactorKind::BernoulliUp, vec![0.6], vec![1.0]).unwrap();
        let s = SymbolExpr::from_factors(vec![f]).unwrap();
        let h0 = fourier_block(&s, 0, 1.0, 1e-12).unwrap();
        let h1 = fourier_block(&s, 1, 1.0, 1e-12).unwrap();
        let h2 = fourier_block(&s, 2, 1.0, 1e-12).unwrap();
        assert!((h0[(0, 0)] - re(1.0)).norm() < 1e-12);
        assert!((h1[(0, 0)] - re(0.6)).norm() < 1e-12);
        assert!(h2[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn geometric_generating_function() {
        // phi = 1/(1 - a z): hat(k) = a^k for k >= 0
        let f = ElementaryFactor::new(FactorKind::GeometricUp, vec![0.5], vec![1.0]).unwrap();
        let s = SymbolExpr::from_factors(vec![f]).unwrap();
        for k in 0..6i64 {
            let h = fourier_block(&s, k, 1.0, 1e-12).unwrap();
            assert!((h[(0, 0)] - re(0.5f64.powi(k as i32))).norm() < 1e-12, "k = {k}");
        }
        assert!(fourier_block(&s, -1, 1.0, 1e-12).unwrap()[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn p2_bernoulli_up_blocks() {
        // Expansion in z of [[b0, a0 b1], [a1 b0 z, b1]]: the constant block is
        // upper triangular and the z^1 block carries the lone corner entry.
        let f = ElementaryFactor::new(FactorKind::BernoulliUp, vec![2.0, 3.0], vec![5.0, 7.0]).unwrap();
        let s = SymbolExpr::from_factors(vec![f]).unwrap();
        let h0 = fourier_block(&s, 0, 1.0, 1e-12).unwrap();
        let h1 = fourier_block(&s, 1, 1.0, 1e-12).unwrap();
        let hm1 = fourier_block(&s, -1, 1.0, 1e-12).unwrap();
        let expect0 = CMat::from_rows(&[vec![re(5.0), re(14.0)], vec![re(0.0), re(7.0)]]);
        let expect1 = CMat::from_rows(&[vec![re(0.0), re(0.0)], vec![re(15.0), re(0.0)]]);
        assert!(h0.max_diff(&expect0) < 1e-12);
        assert!(h1.max_diff(&expect1) < 1e-12);
        assert!(hm1.max_abs() < 1e-12);
    }

    #[test]
    fn fourier_is_radius_independent_inside_annulus() {
        let f = ElementaryFactor::new(FactorKind::GeometricUp, vec![0.4, 0.6], vec![1.0, 2.0]).unwrap();
        let s = SymbolExpr::from_factors(vec![f]).unwrap();
        for k in [-1i64, 0, 1, 3] {
            let a = fourier_block(&s, k, 0.8, 1e-12).unwrap();
            let b = fourier_block(&s, k, 1.2, 1e-12).unwrap();
            assert!(a.max_diff(&b) < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn winding_of_monomial() {
        let s = SymbolExpr::new(1, vec![Primitive::Monomial(3)]).unwrap();
        assert_eq!(winding_number_det(&s, 256).unwrap(), 3);
    }

    #[test]
    fn winding_counts_zeros_inside() {
        // (1 + 2 z): zero at -1/2, winding 1; (1 + 0.5 z): zero outside, winding 0.
        let f1 = ElementaryFactor::new(FactorKind::BernoulliUp, vec![2.0], vec![1.0]).unwrap();
        let f2 = ElementaryFactor::new(FactorKind::BernoulliUp, vec![0.5], vec![1.0]).unwrap();
        let s = SymbolExpr::from_factors(vec![f1, f2]).unwrap();
        assert_eq!(winding_number_det(&s, 256).unwrap(), 1);
    }

    #[test]
    fn near_singular_circle_is_detected() {
        // (1 + z) vanishes at z = -1 on the circle.
        let f = ElementaryFactor::new(FactorKind::BernoulliUp, vec![1.0], vec![1.0]).unwrap();
        let s = SymbolExpr::from_factors(vec![f]).unwrap();
        assert!(matches!(
            winding_number_det(&s, 256),
            Err(Error::NearSingularCircle { .. })
        ));
    }
}
