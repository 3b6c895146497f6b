//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre(nodes: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(nodes >= 1);
    let n = nodes;
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        // map [-1, 1] -> [0, 1]
        xs[i] = 0.5 * (1.0 - x);
        ws[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Thin QR with a non-negative diagonal in R. Returns (Q, diag(R)).
pub fn orthonormalize(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    let cols = m.ncols().min(m.nrows());
    let mut diag = Vec::with_capacity(cols);
    for j in 0..cols {
        let d = r[(j, j)];
        if d < 0.0 {
            q.column_mut(j).neg_mut();
        }
        diag.push(d.abs());
    }
    (q, diag)
}

/// Sine of the largest principal angle between the column spans of two
/// orthonormal frames of equal width.
pub fn max_principal_angle_sin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    if a.ncols() == 0 && b.ncols() == 0 {
        return 0.0;
    }
    let residual = a - b * (b.transpose() * a);
    residual.singular_values().max()
}

/// Largest principal angle (radians) between two orthonormal frames.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    max_principal_angle_sin(a, b).min(1.0).asin()
}

/// Orthonormal basis of the orthogonal complement of an orthonormal frame.
pub fn orthogonal_complement(frame: &DMatrix<f64>) -> DMatrix<f64> {
    let n = frame.nrows();
    let k = frame.ncols();
    if k == 0 {
        return DMatrix::identity(n, n);
    }
    let proj = frame * frame.transpose();
    let eig = SymmetricEigen::new(proj);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let cols: Vec<DVector<f64>> = idx[..n - k]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&cols)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random orthonormal n×k frame (Haar-distributed up to sign convention).
pub fn random_frame<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    orthonormalize(&gaussian_matrix(n, k, rng)).0
}

/// Uniform random unit vector in R^dim.
pub fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Largest eigenvalue of a symmetric matrix (Householder tridiagonalization
/// followed by implicit QR).
pub fn largest_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.max()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for nodes in 1..8 {
            let (xs, ws) = gauss_legendre(nodes);
            assert!((ws.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for deg in 0..(2 * nodes) {
                let q: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((q - exact).abs() < 1e-13, "nodes {nodes} deg {deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn complement_is_orthogonal() {
        let mut rng = seed::rng(3);
        let f = random_frame(5, 2, &mut rng);
        let c = orthogonal_complement(&f);
        assert_eq!(c.shape(), (5, 3));
        assert!((f.transpose() * &c).norm() < 1e-12);
        assert!((c.transpose() * &c - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn principal_angle_of_rotated_line() {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let th: f64 = 1e-6;
        let b = DMatrix::from_column_slice(2, 1, &[th.cos(), th.sin()]);
        assert!((max_principal_angle(&a, &b) - th).abs() < 1e-15);
        assert!(max_principal_angle(&a, &a) < 1e-15);
    }
}
