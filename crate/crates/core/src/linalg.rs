//! Small dense solvers for the regression baselines.

use crate::math::sqrt;
use crate::tensor::Matrix;
use crate::{Error, Result};

/// Relative pivot threshold below which a Gram matrix is treated as singular.
const PIVOT_TOL: f64 = 1e-12;

/// In-place Cholesky factor `L` (lower, row-major) of a symmetric positive definite
/// `n × n` matrix.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::ShapeMismatch(alloc::format!("{}x{} is not square", n, a.cols())));
    }
    let max_diag = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
    let tol = PIVOT_TOL * max_diag.max(f64::MIN_POSITIVE);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !(d > tol) {
            return Err(Error::SingularDesign);
        }
        let d = sqrt(d);
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    Ok(l)
}

/// Solve `A X = B` given the Cholesky factor of `A`; `B` is `n × m`.
pub fn cholesky_solve(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    let m = b.cols();
    let mut x = b.clone();
    for c in 0..m {
        for i in 0..n {
            let mut s = x.get(i, c);
            for k in 0..i {
                s -= l.get(i, k) * x.get(k, c);
            }
            x.set(i, c, s / l.get(i, i));
        }
        for i in (0..n).rev() {
            let mut s = x.get(i, c);
            for k in i + 1..n {
                s -= l.get(k, i) * x.get(k, c);
            }
            x.set(i, c, s / l.get(i, i));
        }
    }
    x
}

/// Ridge least squares: `argmin_B |Y - Z B|^2 + ridge |B|^2`, returning `B` (`p × m`).
pub fn ridge_regression(z: &Matrix, y: &Matrix, ridge: f64) -> Result<Matrix> {
    if z.rows() != y.rows() {
        return Err(Error::ShapeMismatch("design and response row counts differ".into()));
    }
    let (rows, p, m) = (z.rows(), z.cols(), y.cols());
    let mut gram = Matrix::zeros(p, p);
    let mut rhs = Matrix::zeros(p, m);
    for r in 0..rows {
        let zr = z.row(r);
        let yr = y.row(r);
        for a in 0..p {
            let za = zr[a];
            if za == 0.0 {
                continue;
            }
            for b in a..p {
                gram.set(a, b, gram.get(a, b) + za * zr[b]);
            }
            for c in 0..m {
                rhs.set(a, c, rhs.get(a, c) + za * yr[c]);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram.set(a, b, gram.get(b, a));
        }
        gram.set(a, a, gram.get(a, a) + ridge);
    }
    let l = cholesky(&gram)?;
    Ok(cholesky_solve(&l, &rhs))
}

/// `a · b` for row-major matrices.
pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols(), b.rows());
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            let aik = a.get(i, k);
            for j in 0..b.cols() {
                out.set(i, j, out.get(i, j) + aik * b.get(k, j));
            }
        }
    }
    out
}

pub fn transpose(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.cols(), a.rows(), |r, c| a.get(c, r))
}
