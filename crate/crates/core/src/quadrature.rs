//! Contour integration on circles.
//!
//! The trapezoid rule on a circle is exact for trigonometric polynomials and
//! converges exponentially for integrands analytic in an annulus around the
//! contour, which covers every integral in this crate. Node counts double
//! adaptively until two successive estimates agree.

use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::par;
use num_complex::Complex64;

pub const MIN_NODES: usize = 16;
pub const NODE_CAP: usize = 1 << 14;

/// A circle `center + radius * e^{i theta}`, positively oriented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour {
    pub center: Complex64,
    pub radius: f64,
    /// Starting node count for adaptive integration; rounded up to at least
    /// [`MIN_NODES`].
    pub nodes: usize,
}

impl Contour {
    pub fn circle(radius: f64) -> Self {
        Contour {
            center: Complex64::new(0.0, 0.0),
            radius,
            nodes: 64,
        }
    }

    pub fn around(center: Complex64, radius: f64) -> Self {
        Contour {
            center,
            radius,
            nodes: 64,
        }
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn point(&self, k: usize, n: usize) -> Complex64 {
        let theta = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
        self.center + Complex64::from_polar(self.radius, theta)
    }

    /// True when `other` lies strictly inside this contour with margin `gap`.
    pub fn strictly_encloses(&self, other: &Contour, gap: f64) -> bool {
        (self.center - other.center).norm() + other.radius + gap < self.radius
    }
}

/// `(1/2 pi i) \oint f(z) dz` with a fixed node count.
pub fn circle_integral_fixed<F>(f: &F, c: &Contour, n: usize) -> CMat
where
    F: Fn(Complex64) -> CMat + Sync,
{
    circle_integral_fixed_scaled(f, c, n).0
}

fn circle_integral_fixed_scaled<F>(f: &F, c: &Contour, n: usize) -> (CMat, f64)
where
    F: Fn(Complex64) -> CMat + Sync,
{
    let terms = par::map_indexed(n, |k| {
        let theta = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
        let dir = Complex64::from_polar(1.0, theta);
        f(c.center + c.radius * dir).scale(dir)
    });
    let mut acc = CMat::zeros(terms[0].rows(), terms[0].cols());
    let mut biggest = 0.0f64;
    for t in &terms {
        acc = &acc + t;
        biggest = biggest.max(t.max_abs());
    }
    (
        acc.scale(Complex64::new(c.radius / n as f64, 0.0)),
        biggest * c.radius,
    )
}

/// Adaptive `(1/2 pi i) \oint f(z) dz`: doubles nodes until two successive
/// estimates differ by less than `tol` in max norm. Analytic integrands
/// converge geometrically, so a delta that stops shrinking at a tiny absolute
/// level marks the roundoff floor and is accepted as converged.
pub fn circle_integral<F>(f: &F, c: &Contour, tol: f64) -> Result<CMat>
where
    F: Fn(Complex64) -> CMat + Sync,
{
    let mut n = c.nodes.max(MIN_NODES).next_power_of_two();
    let (mut cur, _) = circle_integral_fixed_scaled(f, c, n);
    loop {
        let (next, term_scale) = circle_integral_fixed_scaled(f, c, 2 * n);
        let delta = next.max_diff(&cur);
        let scale = 1.0 + next.max_abs();
        let floor = 1e-13 * term_scale;
        if delta < tol * scale || delta < floor {
            return Ok(next);
        }
        n *= 2;
        cur = next;
        if n > NODE_CAP {
            return Err(Error::NoConvergence { delta, nodes: n });
        }
    }
}

fn double_integral_fixed<G>(g: &G, inner: &Contour, outer: &Contour, ni: usize, no: usize) -> CMat
where
    G: Fn(Complex64, Complex64) -> CMat + Sync,
{
    // Outer nodes are farmed out in parallel; each task sweeps the inner circle.
    let rows = par::map_indexed(no, |j| {
        let phi = 2.0 * std::f64::consts::PI * (j as f64) / (no as f64);
        let dir_o = Complex64::from_polar(1.0, phi);
        let w = outer.center + outer.radius * dir_o;
        let mut acc: Option<CMat> = None;
        for k in 0..ni {
            let theta = 2.0 * std::f64::consts::PI * (k as f64) / (ni as f64);
            let dir_i = Complex64::from_polar(1.0, theta);
            let z = inner.center + inner.radius * dir_i;
            let term = g(z, w).scale(dir_i * dir_o);
            acc = Some(match acc {
                None => term,
                Some(a) => &a + &term,
            });
        }
        acc.expect("at least one inner node")
    });
    let mut acc = CMat::zeros(rows[0].rows(), rows[0].cols());
    for r in &rows {
        acc = &acc + r;
    }
    let scale = (inner.radius / ni as f64) * (outer.radius / no as f64);
    acc.scale(Complex64::new(scale, 0.0))
}

/// `(1/2 pi i)^2` double integral of `g(z, w)` with `z` on `inner` and `w` on
/// `outer`. The contours must be strictly nested so `z - w` never vanishes.
/// Each axis doubles its node count independently until stable.
pub fn double_integral<G>(g: &G, inner: &Contour, outer: &Contour, tol: f64) -> Result<CMat>
where
    G: Fn(Complex64, Complex64) -> CMat + Sync,
{
    let max_r = inner.radius.max(outer.radius);
    let sep = outer.radius - ((inner.center - outer.center).norm() + inner.radius);
    if sep < 1e-3 * max_r {
        return Err(Error::RadiusCollision {
            inner: inner.radius,
            outer: outer.radius,
        });
    }
    let mut ni = inner.nodes.max(MIN_NODES).next_power_of_two();
    let mut no = outer.nodes.max(MIN_NODES).next_power_of_two();
    let mut cur = double_integral_fixed(g, inner, outer, ni, no);
    let mut prev_delta = f64::INFINITY;
    loop {
        let mut grew = false;
        let mut max_delta = 0.0f64;
        let scale = 1.0 + cur.max_abs();
        let accept = |delta: f64| delta < tol * scale || (delta < 1e-10 * scale && delta > 0.25 * prev_delta);
        let refined_i = double_integral_fixed(g, inner, outer, 2 * ni, no);
        let delta_i = refined_i.max_diff(&cur);
        max_delta = max_delta.max(delta_i);
        if !accept(delta_i) {
            ni *= 2;
            cur = refined_i;
            grew = true;
        }
        let refined_o = double_integral_fixed(g, inner, outer, ni, 2 * no);
        let delta_o = refined_o.max_diff(&cur);
        max_delta = max_delta.max(delta_o);
        if !accept(delta_o) {
            no *= 2;
            cur = refined_o;
            grew = true;
        }
        if !grew {
            return Ok(cur);
        }
        prev_delta = max_delta;
        if ni > NODE_CAP || no > NODE_CAP {
            return Err(Error::NoConvergence {
                delta: max_delta,
                nodes: ni.max(no),
            });
        }
    }
}

/// Double contour integral of `combine(inner_val, outer_val) * scalar(zi, zo)`
/// where `inner_val = inner_fn(zi)` and `outer_val = outer_fn(zo)` depend on
/// one variable each. Matrix factors are evaluated once per node instead of
/// once per node pair, which is what every kernel integrand needs.
pub fn separable_double_integral<FI, FO, S, C>(
    inner_fn: &FI,
    outer_fn: &FO,
    scalar: &S,
    combine: &C,
    inner: &Contour,
    outer: &Contour,
    tol: f64,
) -> Result<CMat>
where
    FI: Fn(Complex64) -> CMat + Sync,
    FO: Fn(Complex64) -> CMat + Sync,
    S: Fn(Complex64, Complex64) -> Complex64 + Sync,
    C: Fn(&CMat, &CMat) -> CMat + Sync,
{
    let max_r = inner.radius.max(outer.radius);
    let sep = outer.radius - ((inner.center - outer.center).norm() + inner.radius);
    if sep < 1e-3 * max_r {
        return Err(Error::RadiusCollision {
            inner: inner.radius,
            outer: outer.radius,
        });
    }
    let nodes = |c: &Contour, n: usize| -> (Vec<Complex64>, Vec<Complex64>, Vec<CMat>) {
        let pts: Vec<Complex64> = (0..n).map(|k| c.point(k, n)).collect();
        let dirs: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        (pts, dirs, Vec::new())
    };
    let eval = |ni: usize, no: usize| -> (CMat, f64) {
        let (zi, di, _) = nodes(inner, ni);
        let (zo, dok, _) = nodes(outer, no);
        let ivals: Vec<CMat> = par::map_indexed(ni, |k| inner_fn(zi[k]));
        let ovals: Vec<CMat> = par::map_indexed(no, |k| outer_fn(zo[k]));
        let rows = par::map_indexed(no, |j| {
            let mut acc: Option<CMat> = None;
            let mut biggest = 0.0f64;
            for k in 0..ni {
                let m = combine(&ivals[k], &ovals[j]);
                let term = m.scale(scalar(zi[k], zo[j]) * di[k] * dok[j]);
                biggest = biggest.max(term.max_abs());
                acc = Some(match acc {
                    None => term,
                    Some(a) => &a + &term,
                });
            }
            (acc.expect("at least one inner node"), biggest)
        });
        let mut acc = CMat::zeros(rows[0].0.rows(), rows[0].0.cols());
        let mut biggest = 0.0f64;
        for (r, b) in &rows {
            acc = &acc + r;
            biggest = biggest.max(*b);
        }
        let weight = (inner.radius / ni as f64) * (outer.radius / no as f64);
        (acc.scale(Complex64::new(weight, 0.0)), biggest * weight * (ni * no) as f64)
    };
    let mut ni = inner.nodes.max(MIN_NODES).next_power_of_two();
    let mut no = outer.nodes.max(MIN_NODES).next_power_of_two();
    let (mut cur, mut term_scale) = eval(ni, no);
    loop {
        let mut grew = false;
        let mut max_delta = 0.0f64;
        let scale = 1.0 + cur.max_abs();
        // the roundoff floor grows with the magnitude of the summed terms
        let floor = 1e-13 * term_scale;
        let accept = |delta: f64| delta < tol * scale || delta < floor;
        let (refined_i, ts_i) = eval(2 * ni, no);
        let delta_i = refined_i.max_diff(&cur);

        max_delta = max_delta.max(delta_i);
        if !accept(delta_i) {
            ni *= 2;
            cur = refined_i;
            term_scale = ts_i;
            grew = true;
        }
        let (refined_o, ts_o) = eval(ni, 2 * no);
        let delta_o = refined_o.max_diff(&cur);
        max_delta = max_delta.max(delta_o);
        if !accept(delta_o) {
            no *= 2;
            cur = refined_o;
            term_scale = ts_o;
            grew = true;
        }
        if !grew {
            return Ok(cur);
        }
        if ni > NODE_CAP || no > NODE_CAP {
            return Err(Error::NoConvergence {
                delta: max_delta,
                nodes: ni.max(no),
            });
        }
    }
}
