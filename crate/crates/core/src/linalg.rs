//! Small dense linear algebra for 2x2 and 3x3 Jacobian work.
//!
//! Everything here is hand-rolled: the dimensions are tiny and the pressure
//! estimators need tight control over accuracy (closed-form 2x2 SVD, one-sided
//! Jacobi for 3x3) and over log-space renormalization of cocycle products.

use num_complex::Complex64;

pub const MAX_DIM: usize = 3;

/// Row-major `dim x dim` matrix, `dim` in {1, 2, 3}.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Matrix {
    pub dim: usize,
    data: [f64; MAX_DIM * MAX_DIM],
}

/// Point / vector in dimension 1..=3.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Point {
    pub dim: usize,
    data: [f64; MAX_DIM],
}

impl Point {
    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Point { dim, data: [0.0; MAX_DIM] }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        let mut p = Point::zero(v.len());
        p.data[..v.len()].copy_from_slice(v);
        p
    }

    pub fn new2(x: f64, y: f64) -> Self {
        Point::from_slice(&[x, y])
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        debug_assert!(i < self.dim);
        self.data[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: f64) {
        debug_assert!(i < self.dim);
        self.data[i] = v;
    }

    pub fn coords(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn norm(&self) -> f64 {
        self.coords().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            out.data[i] -= other.data[i];
        }
        out
    }

    pub fn add(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            out.data[i] += other.data[i];
        }
        out
    }

    pub fn scale(&self, s: f64) -> Point {
        let mut out = *self;
        for i in 0..self.dim {
            out.data[i] *= s;
        }
        out
    }

    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        (0..self.dim).map(|i| self.data[i] * other.data[i]).sum()
    }

    /// Max-norm distance, used for dedup and residual checks.
    pub fn dist_inf(&self, other: &Point) -> f64 {
        (0..self.dim)
            .map(|i| (self.data[i] - other.data[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Lexicographic order on coordinates; total because coordinates are finite.
    pub fn lex_le(&self, other: &Point) -> bool {
        for i in 0..self.dim {
            if self.data[i] < other.data[i] {
                return true;
            }
            if self.data[i] > other.data[i] {
                return false;
            }
        }
        true
    }
}

impl Matrix {
    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Matrix { dim, data: [0.0; MAX_DIM * MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zero(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut m = Matrix::zero(dim);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), dim);
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        m
    }

    pub fn from_rows_vec(rows: &[Vec<f64>]) -> Self {
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        Matrix::from_rows(&refs)
    }

    pub fn rows_vec(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * MAX_DIM + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * MAX_DIM + j] = v;
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Matrix::zero(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut s = 0.0;
                for k in 0..self.dim {
                    s += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn matvec(&self, v: &Point) -> Point {
        debug_assert_eq!(self.dim, v.dim);
        let mut out = Point::zero(self.dim);
        for i in 0..self.dim {
            let mut s = 0.0;
            for j in 0..self.dim {
                s += self.get(i, j) * v.get(j);
            }
            out.set(i, s);
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zero(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            1 => self.get(0, 0),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            3 => {
                self.get(0, 0) * (self.get(1, 1) * self.get(2, 2) - self.get(1, 2) * self.get(2, 1))
                    - self.get(0, 1)
                        * (self.get(1, 0) * self.get(2, 2) - self.get(1, 2) * self.get(2, 0))
                    + self.get(0, 2)
                        * (self.get(1, 0) * self.get(2, 1) - self.get(1, 1) * self.get(2, 0))
            }
            _ => unreachable!(),
        }
    }

    pub fn inverse(&self) -> Option<Matrix> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let mut out = Matrix::zero(self.dim);
        match self.dim {
            1 => out.set(0, 0, 1.0 / d),
            2 => {
                out.set(0, 0, self.get(1, 1) / d);
                out.set(0, 1, -self.get(0, 1) / d);
                out.set(1, 0, -self.get(1, 0) / d);
                out.set(1, 1, self.get(0, 0) / d);
            }
            3 => {
                for i in 0..3 {
                    for j in 0..3 {
                        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                        let (c, e) = ((j + 1) % 3, (j + 2) % 3);
                        // cofactor transposed: out[j][i] = cof(i,j)/d
                        let cof = self.get(a, c) * self.get(b, e) - self.get(a, e) * self.get(b, c);
                        out.set(j, i, cof / d);
                    }
                }
            }
            _ => unreachable!(),
        }
        Some(out)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        let mut out = *self;
        for v in out.data.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| self.get(i, j).is_finite()))
    }

    pub fn column(&self, j: usize) -> Point {
        let mut p = Point::zero(self.dim);
        for i in 0..self.dim {
            p.set(i, self.get(i, j));
        }
        p
    }

    pub fn set_column(&mut self, j: usize, v: &Point) {
        for i in 0..self.dim {
            self.set(i, j, v.get(i));
        }
    }

    /// Relative difference in max norm, scaled by the larger entry magnitude.
    pub fn rel_diff(&self, other: &Matrix) -> f64 {
        let scale = self.max_abs().max(other.max_abs()).max(1e-300);
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max((self.get(i, j) - other.get(i, j)).abs());
            }
        }
        m / scale
    }
}

/// Eigenvalues of a real 2x2 or 3x3 matrix, with multiplicity, unordered.
pub fn eigenvalues(m: &Matrix) -> Vec<Complex64> {
    match m.dim {
        1 => vec![Complex64::new(m.get(0, 0), 0.0)],
        2 => {
            let tr = m.get(0, 0) + m.get(1, 1);
            let det = m.det();
            let disc = Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
            let t = Complex64::new(tr, 0.0);
            vec![(t + disc) * 0.5, (t - disc) * 0.5]
        }
        3 => {
            // characteristic polynomial x^3 - c2 x^2 + c1 x - c0
            let c2 = m.get(0, 0) + m.get(1, 1) + m.get(2, 2);
            let c1 = principal_minor_sum(m);
            let c0 = m.det();
            cubic_roots(c2, c1, c0)
        }
        _ => unreachable!(),
    }
}

fn principal_minor_sum(m: &Matrix) -> f64 {
    let m01 = m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0);
    let m02 = m.get(0, 0) * m.get(2, 2) - m.get(0, 2) * m.get(2, 0);
    let m12 = m.get(1, 1) * m.get(2, 2) - m.get(1, 2) * m.get(2, 1);
    m01 + m02 + m12
}

/// Roots of x^3 - a x^2 + b x - c (note signs: coefficients of char poly).
fn cubic_roots(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    // depressed cubic t^3 + p t + q with x = t + a/3
    let p = b - a * a / 3.0;
    let q = -2.0 * a * a * a / 27.0 + a * b / 3.0 - c;
    // note: with x^3 - a x^2 + b x - c = 0, substitution gives t^3 + p t - q' = 0
    // where q' = -( -q ); recompute directly to avoid sign slips:
    // f(x) = x^3 - a x^2 + b x - c, x = t + a/3
    // f = t^3 + (b - a^2/3) t + (2a^3/27 - ab/3 + ... ) ... derive numerically:
    let shift = a / 3.0;
    let q0 = cubic_eval(a, b, c, shift); // constant term of depressed cubic
    let _ = q;
    let disc = Complex64::new(q0 * q0 / 4.0 + p * p * p / 27.0, 0.0).sqrt();
    let u3 = Complex64::new(-q0 / 2.0, 0.0) + disc;
    let u = cbrt_c(u3);
    let u = if u.norm() < 1e-30 {
        cbrt_c(Complex64::new(-q0 / 2.0, 0.0) - disc)
    } else {
        u
    };
    let omega = Complex64::new(-0.5, 3.0f64.sqrt() / 2.0);
    let mut roots = Vec::with_capacity(3);
    for k in 0..3 {
        let uk = u * omega.powu(k);
        let t = if uk.norm() < 1e-30 {
            Complex64::new(0.0, 0.0)
        } else {
            uk - Complex64::new(p / 3.0, 0.0) / uk
        };
        let mut x = t + Complex64::new(shift, 0.0);
        // one Newton polish on the original cubic in complex arithmetic
        for _ in 0..3 {
            let f = x * x * x - a * x * x + b * x - Complex64::new(c, 0.0);
            let df = 3.0 * x * x - 2.0 * a * x + Complex64::new(b, 0.0);
            if df.norm() > 1e-300 {
                x -= f / df;
            }
        }
        // snap nearly-real roots
        if x.im.abs() < 1e-9 * (1.0 + x.re.abs()) {
            x = Complex64::new(x.re, 0.0);
        }
        roots.push(x);
    }
    roots
}

fn cubic_eval(a: f64, b: f64, c: f64, x: f64) -> f64 {
    x * x * x - a * x * x + b * x - c
}

fn cbrt_c(z: Complex64) -> Complex64 {
    if z.norm() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z.powf(1.0 / 3.0)
    }
}

/// Singular values, sorted descending. Closed form for 2x2, one-sided Jacobi
/// sweeps for 3x3 (off-diagonal tolerance 1e-13).
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    assert!(m.is_finite(), "singular_values: non-finite entry");
    match m.dim {
        1 => vec![m.get(0, 0).abs()],
        2 => {
            let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
            let e = (a + d) / 2.0;
            let f = (a - d) / 2.0;
            let g = (b + c) / 2.0;
            let h = (b - c) / 2.0;
            let q = (e * e + h * h).sqrt();
            let r = (f * f + g * g).sqrt();
            vec![q + r, (q - r).abs()]
        }
        3 => {
            // one-sided Jacobi: orthogonalize column pairs of a working copy
            let mut w = *m;
            let tol = 1e-13;
            for _sweep in 0..60 {
                let mut rotated = false;
                for p in 0..3 {
                    for q in (p + 1)..3 {
                        let cp = w.column(p);
                        let cq = w.column(q);
                        let app = cp.dot(&cp);
                        let aqq = cq.dot(&cq);
                        let apq = cp.dot(&cq);
                        if apq.abs() <= tol * (app * aqq).sqrt() || apq == 0.0 {
                            continue;
                        }
                        rotated = true;
                        let tau = (aqq - app) / (2.0 * apq);
                        let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                        let cth = 1.0 / (1.0 + t * t).sqrt();
                        let sth = cth * t;
                        let np = cp.scale(cth).sub(&cq.scale(sth));
                        let nq = cp.scale(sth).add(&cq.scale(cth));
                        w.set_column(p, &np);
                        w.set_column(q, &nq);
                    }
                }
                if !rotated {
                    break;
                }
            }
            let mut s: Vec<f64> = (0..3).map(|j| w.column(j).norm()).collect();
            s.sort_by(|a, b| b.partial_cmp(a).unwrap());
            s
        }
        _ => unreachable!(),
    }
}

/// Operator norm (largest singular value).
pub fn operator_norm(m: &Matrix) -> f64 {
    singular_values(m)[0]
}

/// Smallest singular value.
pub fn min_singular(m: &Matrix) -> f64 {
    *singular_values(m).last().unwrap()
}

/// Modified Gram-Schmidt on a frame of vectors; returns the orthonormalized
/// frame and the diagonal of R (the growth factors). Panics on a rank-deficient
/// frame degenerate below 1e-300.
pub fn gram_schmidt(frame: &[Point]) -> (Vec<Point>, Vec<f64>) {
    let mut q: Vec<Point> = Vec::with_capacity(frame.len());
    let mut r = Vec::with_capacity(frame.len());
    for v in frame {
        let mut w = *v;
        for u in &q {
            let proj = w.dot(u);
            w = w.sub(&u.scale(proj));
        }
        let n = w.norm();
        assert!(n > 1e-300, "gram_schmidt: degenerate frame");
        q.push(w.scale(1.0 / n));
        r.push(n);
    }
    (q, r)
}

/// Smallest expansion factor of `m` restricted to the span of an orthonormal
/// frame: min over unit vectors w in span of |m w|.
pub fn min_expansion_on_subspace(m: &Matrix, basis: &[Point]) -> f64 {
    match basis.len() {
        0 => f64::INFINITY,
        1 => m.matvec(&basis[0]).norm(),
        2 => {
            // Gram matrix of the images; min expansion = sqrt of its smaller eigenvalue
            let a = m.matvec(&basis[0]);
            let b = m.matvec(&basis[1]);
            let g00 = a.dot(&a);
            let g01 = a.dot(&b);
            let g11 = b.dot(&b);
            let tr = g00 + g11;
            let det = g00 * g11 - g01 * g01;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            (tr / 2.0 - disc).max(0.0).sqrt()
        }
        _ => {
            // full-dimensional subspace: plain smallest singular value
            min_singular(m)
        }
    }
}

/// Largest expansion factor of `m` restricted to the span of an orthonormal frame.
pub fn max_expansion_on_subspace(m: &Matrix, basis: &[Point]) -> f64 {
    match basis.len() {
        0 => 0.0,
        1 => m.matvec(&basis[0]).norm(),
        2 => {
            let a = m.matvec(&basis[0]);
            let b = m.matvec(&basis[1]);
            let g00 = a.dot(&a);
            let g01 = a.dot(&b);
            let g11 = b.dot(&b);
            let tr = g00 + g11;
            let det = g00 * g11 - g01 * g01;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            (tr / 2.0 + disc).max(0.0).sqrt()
        }
        _ => operator_norm(m),
    }
}

/// Min/max norm of a unit combination of frame vectors: with `images` the
/// images of an orthonormal basis, this is the smallest (resp. largest)
/// expansion over unit vectors of the spanned subspace.
pub fn frame_min_expansion(images: &[Point]) -> f64 {
    gram_extreme(images).0
}

pub fn frame_max_expansion(images: &[Point]) -> f64 {
    gram_extreme(images).1
}

fn gram_extreme(images: &[Point]) -> (f64, f64) {
    match images.len() {
        0 => (f64::INFINITY, 0.0),
        1 => {
            let n = images[0].norm();
            (n, n)
        }
        2 => {
            let g00 = images[0].dot(&images[0]);
            let g01 = images[0].dot(&images[1]);
            let g11 = images[1].dot(&images[1]);
            let tr = g00 + g11;
            let det = g00 * g11 - g01 * g01;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            (
                (tr / 2.0 - disc).max(0.0).sqrt(),
                (tr / 2.0 + disc).max(0.0).sqrt(),
            )
        }
        3 => {
            // full frame in 3d: singular values of the image matrix
            let mut m = Matrix::zero(3);
            for (j, v) in images.iter().enumerate() {
                m.set_column(j, v);
            }
            let s = singular_values(&m);
            (s[2], s[0])
        }
        _ => unreachable!(),
    }
}

/// Solve a dense n x n system in place via Gaussian elimination with partial
/// pivoting. Used by the cyclic Newton polish in orbit detection (n <= ~16).
pub fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA_CAT: f64 = 2.618033988749895; // (3 + sqrt 5)/2

    fn cat() -> Matrix {
        Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]])
    }

    #[test]
    fn identity_singular_values() {
        let s = singular_values(&Matrix::identity(2));
        assert_eq!(s, vec![1.0, 1.0]);
    }

    #[test]
    fn cat_singular_values_match_eigen() {
        // symmetric matrix: singular values are |eigenvalues|
        let s = singular_values(&cat());
        assert!((s[0] - LAMBDA_CAT).abs() < 1e-12);
        assert!((s[1] - 1.0 / LAMBDA_CAT).abs() < 1e-12);
    }

    #[test]
    fn svd_2x2_vs_gram_oracle() {
        // brute-force oracle: eigenvalues of B^T B for B = [[2,1],[3,2]]
        let b = Matrix::from_rows(&[&[2.0, 1.0], &[3.0, 2.0]]);
        let g = b.transpose().mul(&b); // [[13,8],[8,5]]
        let tr = g.get(0, 0) + g.get(1, 1);
        let det = g.det();
        let disc = (tr * tr - 4.0 * det).sqrt();
        let s1 = ((tr + disc) / 2.0).sqrt();
        let s2 = ((tr - disc) / 2.0).sqrt();
        let s = singular_values(&b);
        assert!((s[0] - s1).abs() < 1e-12 * s1);
        assert!((s[1] - s2).abs() < 1e-10);
        // sigma1 = 2 + sqrt 5 exactly
        assert!((s[0] - (2.0 + 5.0f64.sqrt())).abs() < 1e-12);
        assert!((s[0] * s[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn svd_3x3_diag_and_product() {
        let m = Matrix::from_rows(&[&[3.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 0.5]]);
        let s = singular_values(&m);
        assert!((s[0] - 3.0).abs() < 1e-13);
        assert!((s[1] - 2.0).abs() < 1e-13);
        assert!((s[2] - 0.5).abs() < 1e-13);

        let m = Matrix::from_rows(&[&[1.0, 2.0, 0.5], &[-1.0, 0.3, 2.0], &[0.2, -0.7, 1.1]]);
        let s = singular_values(&m);
        // product of singular values equals |det|
        let prod: f64 = s.iter().product();
        assert!((prod - m.det().abs()).abs() < 1e-10);
        // sum of squares equals Frobenius norm squared
        let fro: f64 = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j) * m.get(i, j))
            .sum();
        let ssq: f64 = s.iter().map(|v| v * v).sum();
        assert!((fro - ssq).abs() < 1e-10);
    }

    #[test]
    fn eigenvalues_cat() {
        let ev = eigenvalues(&cat());
        let mut mods: Vec<f64> = ev.iter().map(|z| z.norm()).collect();
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mods[1] - LAMBDA_CAT).abs() < 1e-12);
        assert!((mods[0] - 1.0 / LAMBDA_CAT).abs() < 1e-12);
        assert!(ev.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn eigenvalues_3x3_known() {
        // diag(2, -1, 0.5) conjugated stays at the same spectrum; test diagonal directly
        let m = Matrix::from_rows(&[&[2.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 0.5]]);
        let mut ev: Vec<f64> = eigenvalues(&m).iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] + 1.0).abs() < 1e-9);
        assert!((ev[1] - 0.5).abs() < 1e-9);
        assert!((ev[2] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn eigenvalues_complex_pair() {
        let m = Matrix::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let ev = eigenvalues(&m);
        assert!(ev.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!(ev.iter().any(|z| z.im > 0.5));
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Matrix::from_rows(&[&[1.0, 2.0, 0.5], &[-1.0, 0.3, 2.0], &[0.2, -0.7, 1.1]]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).rel_diff(&Matrix::identity(3)) < 1e-12);
    }

    #[test]
    fn dense_solver() {
        let mut a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]];
        let mut b = vec![1.0, 2.0, 3.0];
        let x = solve_dense(&mut a, &mut b).unwrap();
        let a0 = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a0[i][j] * x[j]).sum();
            let rhs = [1.0, 2.0, 3.0][i];
            assert!((r - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn min_expansion_matches_min_singular_full_space() {
        let m = Matrix::from_rows(&[&[2.0, 1.0], &[3.0, 2.0]]);
        let basis = vec![Point::new2(1.0, 0.0), Point::new2(0.0, 1.0)];
        let got = min_expansion_on_subspace(&m, &basis);
        assert!((got - min_singular(&m)).abs() < 1e-12);
    }
}
