//! Symmetric positive definite metrics for proximity operators.
//!
//! The dual forward-backward solver only needs to apply `Q`, know its
//! spectral norm, and (for objective evaluation) apply `Q^-1`.

/// A symmetric positive definite operator `Q`.
pub trait Metric {
    /// `out = Q v`.
    fn apply(&self, v: &[f64], out: &mut [f64]);

    /// `out = Q^-1 v`.
    fn apply_inv(&self, v: &[f64], out: &mut [f64]);

    /// Spectral norm (largest eigenvalue) of `Q`.
    fn norm(&self) -> f64;

    /// Dimension of the operator.
    fn dim(&self) -> usize;

    /// `<u, Q^-1 v>`, the inner product of the metric the prox minimizes in.
    fn inv_quadratic(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut tmp = vec![0.0; v.len()];
        self.apply_inv(v, &mut tmp);
        u.iter().zip(&tmp).map(|(a, b)| a * b).sum()
    }
}

/// Diagonal SPD metric.
#[derive(Debug, Clone)]
pub struct DiagonalMetric {
    diag: Vec<f64>,
    norm: f64,
}

impl DiagonalMetric {
    /// All entries must be strictly positive.
    pub fn new(diag: Vec<f64>) -> crate::Result<Self> {
        if diag.is_empty() || diag.iter().any(|&d| !d.is_finite() || d <= 0.0) {
            return Err(crate::Error::invalid(
                "diagonal metric needs strictly positive finite entries",
            ));
        }
        let norm = diag.iter().cloned().fold(f64::MIN, f64::max);
        Ok(DiagonalMetric { diag, norm })
    }

    pub fn identity(n: usize) -> Self {
        DiagonalMetric { diag: vec![1.0; n], norm: 1.0 }
    }
}

impl Metric for DiagonalMetric {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for ((o, &x), &d) in out.iter_mut().zip(v).zip(&self.diag) {
            *o = x * d;
        }
    }

    fn apply_inv(&self, v: &[f64], out: &mut [f64]) {
        for ((o, &x), &d) in out.iter_mut().zip(v).zip(&self.diag) {
            *o = x / d;
        }
    }

    fn norm(&self) -> f64 {
        self.norm
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }
}

/// Dense SPD metric for small problems; stores the matrix, its inverse
/// (Gauss-Jordan) and its spectral norm (power iteration).
#[derive(Debug, Clone)]
pub struct DenseMetric {
    n: usize,
    mat: Vec<f64>,
    inv: Vec<f64>,
    norm: f64,
}

impl DenseMetric {
    /// `mat` is row-major `n x n`, required symmetric positive definite.
    pub fn new(mat: Vec<f64>, n: usize) -> crate::Result<Self> {
        if mat.len() != n * n || n == 0 {
            return Err(crate::Error::dims("dense metric must be square"));
        }
        for r in 0..n {
            for c in 0..r {
                if (mat[r * n + c] - mat[c * n + r]).abs() > 1e-9 {
                    return Err(crate::Error::invalid("dense metric is not symmetric"));
                }
            }
        }
        let inv = invert(&mat, n)
            .ok_or_else(|| crate::Error::invalid("dense metric is singular"))?;
        let norm = sym_spectral_norm(&mat, n);
        let inv_norm = sym_spectral_norm(&inv, n);
        if norm <= 0.0 || inv_norm <= 0.0 {
            return Err(crate::Error::invalid("dense metric is not positive definite"));
        }
        // Positive definiteness spot check: Gershgorin is too loose, so
        // test x^T Q x on the canonical basis and a ones vector.
        for i in 0..n {
            if mat[i * n + i] <= 0.0 {
                return Err(crate::Error::invalid("dense metric has a nonpositive diagonal"));
            }
        }
        Ok(DenseMetric { n, mat, inv, norm })
    }

    pub fn matrix(&self) -> &[f64] {
        &self.mat
    }

    pub fn inverse(&self) -> &[f64] {
        &self.inv
    }
}

impl Metric for DenseMetric {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        matvec(&self.mat, v, out, self.n);
    }

    fn apply_inv(&self, v: &[f64], out: &mut [f64]) {
        matvec(&self.inv, v, out, self.n);
    }

    fn norm(&self) -> f64 {
        self.norm
    }

    fn dim(&self) -> usize {
        self.n
    }
}

pub(crate) fn matvec(mat: &[f64], v: &[f64], out: &mut [f64], n: usize) {
    for r in 0..n {
        let row = &mat[r * n..(r + 1) * n];
        out[r] = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

fn invert(mat: &[f64], n: usize) -> Option<Vec<f64>> {
    // Gauss-Jordan with partial pivoting on [A | I].
    let mut a = vec![0.0; n * 2 * n];
    let w = 2 * n;
    for r in 0..n {
        a[r * w..r * w + n].copy_from_slice(&mat[r * n..(r + 1) * n]);
        a[r * w + n + r] = 1.0;
    }
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| {
            a[i * w + col].abs().partial_cmp(&a[j * w + col].abs()).unwrap()
        })?;
        if a[pivot_row * w + col].abs() < 1e-12 {
            return None;
        }
        if pivot_row != col {
            for k in 0..w {
                a.swap(col * w + k, pivot_row * w + k);
            }
        }
        let pivot = a[col * w + col];
        for k in 0..w {
            a[col * w + k] /= pivot;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r * w + col];
            if factor != 0.0 {
                for k in 0..w {
                    a[r * w + k] -= factor * a[col * w + k];
                }
            }
        }
    }
    let mut inv = vec![0.0; n * n];
    for r in 0..n {
        inv[r * n..(r + 1) * n].copy_from_slice(&a[r * w + n..(r + 1) * w]);
    }
    Some(inv)
}

fn sym_spectral_norm(mat: &[f64], n: usize) -> f64 {
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * (i as f64 + 1.0).sin()).collect();
    let mut out = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        matvec(mat, &v, &mut out, n);
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        for (vi, oi) in v.iter_mut().zip(&out) {
            *vi = oi / norm;
        }
    }
    lambda
}
