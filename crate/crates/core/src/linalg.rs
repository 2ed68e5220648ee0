//! Small dense linear algebra for n×n problems (n is the chart dimension).

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self::from_fn(self.n, |i, j| {
            (0..self.n).fold(T::zero(), |acc, k| acc + self[(i, k)] * other[(k, j)])
        })
    }

    /// Quadratic form `u^T M v`.
    pub fn bilinear(&self, u: &[T], v: &[T]) -> T {
        let mv = self.mul_vec(v);
        dot(u, &mv)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.re().abs()).fold(0.0, f64::max)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }

    /// LU factorization with partial pivoting on real parts.
    pub fn lu(&self) -> Option<Lu<T>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].re().abs().total_cmp(&a[j * n + k].re().abs()))
                .unwrap();
            if a[p * n + k].re().abs() <= 1e-300 * scale || !a[p * n + k].re().is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                for j in k + 1..n {
                    let akj = a[k * n + j];
                    a[i * n + j] = a[i * n + j] - f * akj;
                }
            }
        }
        Some(Lu { n, a, perm, sign })
    }

    pub fn det(&self) -> T {
        match self.lu() {
            Some(lu) => lu.det(),
            None => T::zero(),
        }
    }

    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        self.lu().map(|lu| lu.solve(b))
    }

    pub fn inverse(&self) -> Option<Self> {
        let lu = self.lu()?;
        let n = self.n;
        let mut inv = Self::zeros(n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = lu.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Some(inv)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

pub struct Lu<T> {
    n: usize,
    a: Vec<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Scalar> Lu<T> {
    pub fn det(&self) -> T {
        (0..self.n).fold(self.sign, |acc, i| acc * self.a[i * self.n + i])
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.a[i * n + j];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.a[i * n + j];
                x[i] = x[i] - u * x[j];
            }
            x[i] = x[i] / self.a[i * n + i];
        }
        x
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&u, &v)| acc + u * v)
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| alpha * a + b).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u - v).collect()
}

pub fn scale(alpha: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|v| alpha * v).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(m: &Matrix<f64>) -> Vec<f64> {
    let n = m.n;
    let mut a = m.clone();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off <= 1e-30 * a.max_abs().powi(2).max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Least squares `min |A c - b|` by Householder QR. `a` is row-major m×k.
/// Returns coefficients and the ratio of extreme diagonal entries of R.
pub fn least_squares(a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = a.len();
    let k = a.first()?.len();
    if m < k {
        return None;
    }
    let mut r: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for j in 0..k {
        let col_norm = (j..m).map(|i| r[i][j] * r[i][j]).sum::<f64>().sqrt();
        if col_norm == 0.0 {
            return None;
        }
        let alpha = if r[j][j] > 0.0 { -col_norm } else { col_norm };
        let mut v: Vec<f64> = (j..m).map(|i| r[i][j]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in j..k {
            let s: f64 = (j..m).map(|i| v[i - j] * r[i][c]).sum::<f64>() * 2.0 / vnorm2;
            for i in j..m {
                r[i][c] -= s * v[i - j];
            }
        }
        let s: f64 = (j..m).map(|i| v[i - j] * rhs[i]).sum::<f64>() * 2.0 / vnorm2;
        for i in j..m {
            rhs[i] -= s * v[i - j];
        }
    }
    let diag: Vec<f64> = (0..k).map(|j| r[j][j].abs()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if dmin == 0.0 {
        return None;
    }
    let mut c = vec![0.0; k];
    for j in (0..k).rev() {
        let s: f64 = (j + 1..k).map(|l| r[j][l] * c[l]).sum();
        c[j] = (rhs[j] - s) / r[j][j];
    }
    Some((c, dmax / dmin))
}

/// Gram–Schmidt under the inner product `g`, returning `g`-orthonormal vectors
/// spanning the complement of `y`.
pub fn g_orthonormal_complement(g: &Matrix<f64>, y: &[f64]) -> Vec<Vec<f64>> {
    let n = y.len();
    let ip = |u: &[f64], v: &[f64]| g.bilinear(u, v);
    let ny = ip(y, y).sqrt();
    let mut basis: Vec<Vec<f64>> = vec![scale(1.0 / ny, y)];
    // candidate order: coordinate axes least aligned with y first
    let mut axes: Vec<usize> = (0..n).collect();
    let yn = norm(y);
    axes.sort_by(|&a, &b| (y[a] / yn).abs().total_cmp(&(y[b] / yn).abs()));
    for &k in &axes {
        if basis.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = ip(&v, b);
                v = axpy(-c, b, &v);
            }
        }
        let nv = ip(&v, &v).sqrt();
        if nv > 1e-8 {
            basis.push(scale(1.0 / nv, &v));
        }
    }
    basis.remove(0);
    basis
}
