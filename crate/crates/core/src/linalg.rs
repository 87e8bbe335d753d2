//! Dense linear algebra over [`Scalar`]: LU solves with a condition
//! estimate, and the real nonsymmetric eigenvalue problem (balancing,
//! Hessenberg reduction, Francis double-shift QR).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![Scalar::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::ONE;
        }
        m
    }

    pub fn from_diagonal(d: &[Scalar]) -> Matrix {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Scalar>]) -> Result<Matrix> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// Builds from columns, as produced by finite-difference Jacobians.
    pub fn from_columns(cols: &[Vec<Scalar>]) -> Result<Matrix> {
        let rows = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidArgument("ragged matrix columns".into()));
        }
        let mut m = Matrix::zeros(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        Ok(m)
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

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidArgument("matrix shapes do not conform".into()));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> Scalar {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<Scalar>())
            .fold(Scalar::ZERO, Scalar::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).iter().map(|x| x.to_f64()).collect()).collect()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Scalar;

    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    singular: bool,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::InvalidArgument("LU needs a square matrix".into()));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| lu[(x, k)].abs().partial_cmp(&lu[(y, k)].abs()).unwrap()).unwrap();
            if lu[(p, k)].is_zero() {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let t = lu[(k, j)];
                    lu[(i, j)] -= f * t;
                }
            }
        }
        Ok(Lu { lu, perm, singular })
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &[Scalar]) -> Result<Vec<Scalar>> {
        if self.singular {
            return Err(Error::DegenerateJacobian {
                condition: f64::INFINITY,
            });
        }
        let n = self.lu.rows;
        let mut x: Vec<Scalar> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let t = self.lu[(i, j)] * x[j];
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = self.lu[(i, j)] * x[j];
                x[i] -= t;
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }

    /// `||A||_1 ||A^-1||_1` with the inverse formed explicitly.
    pub fn condition_1(&self, a: &Matrix) -> Scalar {
        if self.singular {
            return Scalar::from_f64(f64::INFINITY);
        }
        let n = a.rows;
        let mut inv_norm = Scalar::ZERO;
        for j in 0..n {
            let mut e = vec![Scalar::ZERO; n];
            e[j] = Scalar::ONE;
            let col = self.solve(&e).unwrap();
            inv_norm = inv_norm.max(col.iter().map(|x| x.abs()).sum());
        }
        a.norm_1() * inv_norm
    }
}

/// Solves `A x = b`; fails if the 1-norm condition estimate exceeds `max_condition`.
pub fn solve_checked(a: &Matrix, b: &[Scalar], max_condition: f64) -> Result<(Vec<Scalar>, Scalar)> {
    let lu = Lu::new(a)?;
    let cond = lu.condition_1(a);
    if !(cond <= Scalar::from_f64(max_condition)) {
        return Err(Error::DegenerateJacobian {
            condition: cond.to_f64(),
        });
    }
    Ok((lu.solve(b)?, cond))
}

/// Eigenvalue as a `(re, im)` pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenvalue {
    pub re: Scalar,
    pub im: Scalar,
}

impl Eigenvalue {
    pub fn modulus(&self) -> Scalar {
        self.re.hypot(self.im)
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }
}

/// 1-based view used by the EISPACK-style routines below.
struct Work {
    n: usize,
    a: Vec<Scalar>,
}

impl Work {
    fn new(m: &Matrix) -> Work {
        let n = m.rows;
        let mut a = vec![Scalar::ZERO; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                a[(i + 1) * (n + 1) + j + 1] = m[(i, j)];
            }
        }
        Work { n, a }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> Scalar {
        self.a[i * (self.n + 1) + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Scalar) {
        let n = self.n;
        self.a[i * (n + 1) + j] = v;
    }
}

fn sign(a: Scalar, b: Scalar) -> Scalar {
    if b.is_sign_negative() {
        -a.abs()
    } else {
        a.abs()
    }
}

fn balance(w: &mut Work) {
    let n = w.n;
    let radix = 2.0;
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = Scalar::ZERO;
            let mut c = Scalar::ZERO;
            for j in 1..=n {
                if j != i {
                    c += w.at(j, i).abs();
                    r += w.at(i, j).abs();
                }
            }
            if c.is_zero() || r.is_zero() {
                continue;
            }
            let mut g = r / radix;
            let mut f = Scalar::ONE;
            let s = c + r;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < s * 0.95 {
                done = false;
                let g = f.recip();
                for j in 1..=n {
                    let v = w.at(i, j) * g;
                    w.set(i, j, v);
                }
                for j in 1..=n {
                    let v = w.at(j, i) * f;
                    w.set(j, i, v);
                }
            }
        }
    }
}

fn hessenberg(w: &mut Work) {
    let n = w.n;
    for m in 2..n {
        let mut x = Scalar::ZERO;
        let mut i = m;
        for j in m..=n {
            if w.at(j, m - 1).abs() > x.abs() {
                x = w.at(j, m - 1);
                i = j;
            }
        }
        if i != m {
            for j in m - 1..=n {
                let t = w.at(i, j);
                w.set(i, j, w.at(m, j));
                w.set(m, j, t);
            }
            for j in 1..=n {
                let t = w.at(j, i);
                w.set(j, i, w.at(j, m));
                w.set(j, m, t);
            }
        }
        if !x.is_zero() {
            for i in m + 1..=n {
                let mut y = w.at(i, m - 1);
                if !y.is_zero() {
                    y /= x;
                    w.set(i, m - 1, y);
                    for j in m..=n {
                        let v = w.at(i, j) - y * w.at(m, j);
                        w.set(i, j, v);
                    }
                    for j in 1..=n {
                        let v = w.at(j, m) + y * w.at(j, i);
                        w.set(j, m, v);
                    }
                }
            }
        }
    }
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            w.set(i, j, Scalar::ZERO);
        }
    }
}

fn hqr(w: &mut Work, max_sweeps: usize) -> Result<Vec<Eigenvalue>> {
    let n = w.n as isize;
    let eps = Scalar::EPSILON;
    let mut wr = vec![Scalar::ZERO; w.n + 1];
    let mut wi = vec![Scalar::ZERO; w.n + 1];
    let mut anorm = Scalar::ZERO;
    for i in 1..=w.n {
        for j in (i.max(2) - 1)..=w.n {
            anorm += w.at(i, j).abs();
        }
    }
    let a = |w: &Work, i: isize, j: isize| w.at(i as usize, j as usize);
    let mut sweeps = 0usize;
    let mut nn = n;
    let mut t = Scalar::ZERO;
    while nn >= 1 {
        let mut its = 0;
        let mut l: isize;
        loop {
            l = nn;
            while l >= 2 {
                let mut s = a(w, l - 1, l - 1).abs() + a(w, l, l).abs();
                if s.is_zero() {
                    s = anorm;
                }
                if a(w, l, l - 1).abs() <= s * eps {
                    w.set(l as usize, l as usize - 1, Scalar::ZERO);
                    break;
                }
                l -= 1;
            }
            let mut x = a(w, nn, nn);
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = Scalar::ZERO;
                nn -= 1;
            } else {
                let mut y = a(w, nn - 1, nn - 1);
                let mut ww = a(w, nn, nn - 1) * a(w, nn - 1, nn);
                if l == nn - 1 {
                    let p = (y - x) * 0.5;
                    let q = p * p + ww;
                    let mut z = q.abs().sqrt();
                    x += t;
                    let (i1, i2) = (nn as usize - 1, nn as usize);
                    if q >= Scalar::ZERO {
                        z = p + sign(z, p);
                        wr[i1] = x + z;
                        wr[i2] = x + z;
                        if !z.is_zero() {
                            wr[i2] = x - ww / z;
                        }
                        wi[i1] = Scalar::ZERO;
                        wi[i2] = Scalar::ZERO;
                    } else {
                        wr[i1] = x + p;
                        wr[i2] = x + p;
                        wi[i1] = -z;
                        wi[i2] = z;
                    }
                    nn -= 2;
                } else {
                    sweeps += 1;
                    if sweeps > max_sweeps || its == 60 {
                        return Err(Error::QrNoConvergence { sweeps });
                    }
                    if its % 10 == 0 && its > 0 {
                        // Exceptional shift.
                        t += x;
                        for i in 1..=nn {
                            let v = a(w, i, i) - x;
                            w.set(i as usize, i as usize, v);
                        }
                        let s = a(w, nn, nn - 1).abs() + a(w, nn - 1, nn - 2).abs();
                        x = s * 0.75;
                        y = x;
                        ww = s * s * -0.4375;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    let (mut p, mut q, mut r);
                    loop {
                        let z = a(w, m, m);
                        let rr = x - z;
                        let s = y - z;
                        p = (rr * s - ww) / a(w, m + 1, m) + a(w, m, m + 1);
                        q = a(w, m + 1, m + 1) - z - rr - s;
                        r = a(w, m + 2, m + 1);
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a(w, m, m - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a(w, m - 1, m - 1).abs() + z.abs() + a(w, m + 1, m + 1).abs());
                        if u <= v * eps {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        w.set(i as usize, i as usize - 2, Scalar::ZERO);
                        if i != m + 2 {
                            w.set(i as usize, i as usize - 3, Scalar::ZERO);
                        }
                    }
                    let mut k = m;
                    while k <= nn - 1 {
                        if k != m {
                            p = a(w, k, k - 1);
                            q = a(w, k + 1, k - 1);
                            r = Scalar::ZERO;
                            if k != nn - 1 {
                                r = a(w, k + 2, k - 1);
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if !x.is_zero() {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if !s.is_zero() {
                            if k == m {
                                if l != m {
                                    let v = -a(w, k, k - 1);
                                    w.set(k as usize, k as usize - 1, v);
                                }
                            } else {
                                w.set(k as usize, k as usize - 1, -s * x);
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let mut pp = a(w, k, j) + q * a(w, k + 1, j);
                                if k != nn - 1 {
                                    pp += r * a(w, k + 2, j);
                                    let v = a(w, k + 2, j) - pp * z;
                                    w.set(k as usize + 2, j as usize, v);
                                }
                                let v = a(w, k + 1, j) - pp * y;
                                w.set(k as usize + 1, j as usize, v);
                                let v = a(w, k, j) - pp * x;
                                w.set(k as usize, j as usize, v);
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let mut pp = x * a(w, i, k) + y * a(w, i, k + 1);
                                if k != nn - 1 {
                                    pp += z * a(w, i, k + 2);
                                    let v = a(w, i, k + 2) - pp * r;
                                    w.set(i as usize, k as usize + 2, v);
                                }
                                let v = a(w, i, k + 1) - pp * q;
                                w.set(i as usize, k as usize + 1, v);
                                let v = a(w, i, k) - pp;
                                w.set(i as usize, k as usize, v);
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=w.n).map(|i| Eigenvalue { re: wr[i], im: wi[i] }).collect())
}

/// All eigenvalues of a real square matrix, unsorted.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Eigenvalue>> {
    if !m.is_square() {
        return Err(Error::InvalidArgument("eigenvalues need a square matrix".into()));
    }
    if !m.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    if m.rows == 0 {
        return Ok(Vec::new());
    }
    let mut w = Work::new(m);
    balance(&mut w);
    hessenberg(&mut w);
    hqr(&mut w, 100 * m.rows)
}

/// Dominant eigenvalue by power iteration with a Rayleigh-type ratio.
pub fn power_iteration(m: &Matrix, max_iter: usize, tol: f64) -> Result<(Scalar, Vec<Scalar>)> {
    let n = m.rows;
    let mut v = vec![Scalar::ONE; n];
    let mut lambda = Scalar::ZERO;
    for _ in 0..max_iter {
        let w = m.mul_vec(&v);
        let k = (0..n)
            .max_by(|&a, &b| w[a].abs().partial_cmp(&w[b].abs()).unwrap())
            .unwrap_or(0);
        if w[k].is_zero() {
            return Ok((Scalar::ZERO, v));
        }
        let next = w[k] / v[k];
        let norm = w[k];
        let w: Vec<Scalar> = w.iter().map(|&x| x / norm).collect();
        let moved = w.iter().zip(&v).map(|(&a, &b)| (a - b).abs()).fold(Scalar::ZERO, Scalar::max);
        v = w;
        if (next - lambda).abs() <= next.abs() * tol && moved <= tol {
            return Ok((next, v));
        }
        lambda = next;
    }
    Err(Error::QrNoConvergence { sweeps: max_iter })
}

/// Eigenvector for a known simple real eigenvalue by inverse iteration,
/// scaled to unit max-norm.
pub fn inverse_iteration(m: &Matrix, lambda: Scalar, steps: usize) -> Result<Vec<Scalar>> {
    let n = m.rows;
    let mut shifted = m.clone();
    // Offset the shift slightly so the factorization stays regular.
    let mu = lambda + lambda.abs().max(Scalar::ONE) * 1e-20;
    for i in 0..n {
        shifted[(i, i)] -= mu;
    }
    let lu = Lu::new(&shifted)?;
    let mut v = vec![Scalar::ONE; n];
    for _ in 0..steps {
        let w = lu.solve(&v)?;
        let norm = w.iter().copied().fold(Scalar::ZERO, |a, x| if x.abs() > a.abs() { x } else { a });
        if norm.is_zero() {
            break;
        }
        v = w.iter().map(|&x| x / norm).collect();
    }
    Ok(v)
}
