//! Dense square complex matrices sized for few-qubit operators.

use num_complex::Complex64;

pub type C64 = Complex64;

/// Row-major dense square matrix of complex numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    /// Builds from row-major entries; panics unless `data` is dim².
    pub fn from_rows(dim: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), dim * dim, "matrix data is not {dim}x{dim}");
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
    }

    /// Matrix product; panics on dimension mismatch (callers validate).
    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let a = self.get(r, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    let v = out.get(r, c) + a * rhs.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Matrix { dim: self.dim, data }
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Matrix { dim: self.dim, data }
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Matrix { dim: self.dim, data: self.data.iter().map(|a| a * s).collect() }
    }

    /// Kronecker product; `self` acts on the more significant index block.
    pub fn kron(&self, rhs: &Matrix) -> Matrix {
        let (da, db) = (self.dim, rhs.dim);
        let d = da * db;
        let mut out = Matrix::zeros(d);
        for ra in 0..da {
            for ca in 0..da {
                let a = self.get(ra, ca);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for rb in 0..db {
                    for cb in 0..db {
                        out.set(ra * db + rb, ca * db + cb, a * rhs.get(rb, cb));
                    }
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> Matrix {
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for r in 0..d {
            for c in 0..d {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Tr(self · rhs) without forming the product.
    pub fn trace_product(&self, rhs: &Matrix) -> C64 {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        let d = self.dim;
        let mut t = C64::new(0.0, 0.0);
        for r in 0..d {
            for c in 0..d {
                t += self.get(r, c) * rhs.get(c, r);
            }
        }
        t
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "vector length differs from matrix dimension");
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// Largest entry magnitude (max norm).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, rhs: &Matrix) -> f64 {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.dagger()) < tol
    }

    /// Max norm of the commutator AB − BA.
    pub fn commutator_norm(&self, rhs: &Matrix) -> f64 {
        self.mul(rhs).max_abs_diff(&rhs.mul(self))
    }

    /// If the matrix equals c·I within `tol` (max norm), returns c.
    pub fn scalar_multiple_of_identity(&self, tol: f64) -> Option<C64> {
        let c = self.get(0, 0);
        let d = self.dim;
        for r in 0..d {
            for col in 0..d {
                let expect = if r == col { c } else { C64::new(0.0, 0.0) };
                if (self.get(r, col) - expect).norm() >= tol {
                    return None;
                }
            }
        }
        Some(c)
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    ///
    /// Works on the real-symmetric embedding [[Re, −Im], [Im, Re]], whose
    /// spectrum is the Hermitian spectrum doubled, then runs cyclic Jacobi.
    pub fn min_eigenvalue_hermitian(&self) -> f64 {
        let d = self.dim;
        let mut s = vec![0.0f64; (2 * d) * (2 * d)];
        let idx = |r: usize, c: usize| r * 2 * d + c;
        for r in 0..d {
            for c in 0..d {
                let z = self.get(r, c);
                s[idx(r, c)] = z.re;
                s[idx(r + d, c + d)] = z.re;
                s[idx(r, c + d)] = -z.im;
                s[idx(r + d, c)] = z.im;
            }
        }
        let n = 2 * d;
        let scale = s.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = s[idx(p, q)];
                    off = off.max(apq.abs());
                    if apq.abs() <= 1e-15 * scale {
                        continue;
                    }
                    let app = s[idx(p, p)];
                    let aqq = s[idx(q, q)];
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let sn = t * c;
                    for k in 0..n {
                        let akp = s[idx(k, p)];
                        let akq = s[idx(k, q)];
                        s[idx(k, p)] = c * akp - sn * akq;
                        s[idx(k, q)] = sn * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = s[idx(p, k)];
                        let aqk = s[idx(q, k)];
                        s[idx(p, k)] = c * apk - sn * aqk;
                        s[idx(q, k)] = sn * apk + c * aqk;
                    }
                }
            }
            if off <= 1e-13 * scale {
                break;
            }
        }
        (0..n).map(|i| s[idx(i, i)]).fold(f64::INFINITY, f64::min)
    }
}

/// Inner product ⟨a|b⟩ = Σ conj(a)·b.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
