//! Dense complex matrices of small dimension.
//!
//! Everything downstream works with p x p blocks for p <= 6 and with the
//! pn x pn moment matrix, so a plain row-major `Vec<Complex64>` with
//! partial-pivot LU is all that is needed. Determinants of orders up to 4
//! use closed-form expansions; larger orders go through LU.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Shorthand for a real complex number.
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let v = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Scalar multiple of the identity.
    pub fn scalar(n: usize, s: Complex64) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = s;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        CMat { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn diag_real(d: &[f64]) -> Self {
        let mut m = CMat::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = re(x);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Entry-wise maximum difference against `other`.
    pub fn max_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Copy `block` into position (`bi`, `bj`) measured in units of the block size.
    pub fn set_block(&mut self, bi: usize, bj: usize, block: &CMat) {
        let (p, q) = (block.rows, block.cols);
        for i in 0..p {
            for j in 0..q {
                self[(bi * p + i, bj * q + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, bi: usize, bj: usize, p: usize) -> CMat {
        CMat::from_fn(p, p, |i, j| self[(bi * p + i, bj * p + j)])
    }

    fn det2(&self) -> Complex64 {
        self[(0, 0)] * self[(1, 1)] - self[(0, 1)] * self[(1, 0)]
    }

    fn det3(&self) -> Complex64 {
        self[(0, 0)] * (self[(1, 1)] * self[(2, 2)] - self[(1, 2)] * self[(2, 1)])
            - self[(0, 1)] * (self[(1, 0)] * self[(2, 2)] - self[(1, 2)] * self[(2, 0)])
            + self[(0, 2)] * (self[(1, 0)] * self[(2, 1)] - self[(1, 1)] * self[(2, 0)])
    }

    fn det4(&self) -> Complex64 {
        // Laplace expansion along the first row with 3x3 cofactors.
        let mut acc = ZERO;
        let mut sign = ONE;
        for j in 0..4 {
            let minor = CMat::from_fn(3, 3, |r, c| {
                let cc = if c < j { c } else { c + 1 };
                self[(r + 1, cc)]
            });
            acc += sign * self[(0, j)] * minor.det3();
            sign = -sign;
        }
        acc
    }

    /// Determinant: closed-form expansion for orders <= 4, LU beyond.
    pub fn det(&self) -> Complex64 {
        assert!(self.is_square(), "det of non-square matrix");
        match self.rows {
            0 => ONE,
            1 => self[(0, 0)],
            2 => self.det2(),
            3 => self.det3(),
            4 => self.det4(),
            _ => match Lu::new(self) {
                Ok(lu) => lu.det(),
                Err(_) => ZERO,
            },
        }
    }

    pub fn inverse(&self) -> Result<CMat> {
        assert!(self.is_square());
        let n = self.rows;
        if n == 1 {
            let d = self[(0, 0)];
            if d.norm() == 0.0 {
                return Err(Error::Singular("1x1 inverse of zero".into()));
            }
            return Ok(CMat::from_rows(&[vec![ONE / d]]));
        }
        let lu = Lu::new(self)?;
        lu.solve_matrix(&CMat::identity(n))
    }

    /// Solve `self * x = rhs` for `x`.
    pub fn solve(&self, rhs: &CMat) -> Result<CMat> {
        Lu::new(self)?.solve_matrix(rhs)
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale(-ONE)
    }
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: CMat,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(a: &CMat) -> Result<Lu> {
        assert!(a.is_square());
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut pivot = k;
            let mut best = lu[(k, k)].norm();
            for i in k + 1..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    pivot = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular(format!("LU pivot {k} is zero")));
            }
            if pivot != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(pivot, j)];
                    lu[(pivot, j)] = tmp;
                }
                perm.swap(k, pivot);
                sign = -sign;
            }
            let pkk = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pkk;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    let cur = lu[(i, j)];
                    lu[(i, j)] = cur - f * v;
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn det(&self) -> Complex64 {
        let mut d = re(self.sign);
        for i in 0..self.lu.rows {
            d *= self.lu[(i, i)];
        }
        d
    }

    /// Solve for a matrix right-hand side, column by column.
    pub fn solve_matrix(&self, rhs: &CMat) -> Result<CMat> {
        let n = self.lu.rows;
        assert_eq!(rhs.rows, n);
        let mut out = CMat::zeros(n, rhs.cols);
        let mut y = vec![ZERO; n];
        for c in 0..rhs.cols {
            for i in 0..n {
                let mut acc = rhs[(self.perm[i], c)];
                for j in 0..i {
                    acc -= self.lu[(i, j)] * y[j];
                }
                y[i] = acc;
            }
            for i in (0..n).rev() {
                let mut acc = y[i];
                for j in i + 1..n {
                    acc -= self.lu[(i, j)] * out[(j, c)];
                }
                out[(i, c)] = acc / self.lu[(i, i)];
            }
        }
        Ok(out)
    }
}
