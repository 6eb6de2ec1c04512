//! Dense complex matrix helpers shared by every operator-level module.
//!
//! All operators are `DMatrix<Complex64>`. Hermitian inputs go through
//! nalgebra's symmetric eigensolver; matrix functions are applied in the
//! resulting eigenbasis.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default absolute tolerance for Hermiticity, PSD and trace checks.
pub const ATOL: f64 = 1e-9;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn zeros(dim: usize) -> CMat {
    CMat::zeros(dim, dim)
}

pub fn from_real_diag(diag: &[f64]) -> CMat {
    let mut m = zeros(diag.len());
    for (i, &v) in diag.iter().enumerate() {
        m[(i, i)] = c(v);
    }
    m
}

pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5)
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace_re(a: &CMat) -> f64 {
    a.trace().re
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending, matching
/// eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(a: &CMat) -> Self {
        let dim = a.nrows();
        let eig = hermitize(a).symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = zeros(dim);
        for (col, &i) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(i));
        }
        HermitianEigen { values, vectors }
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `U diag(f(λ)) U†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let diag: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        self.reconstruct(&diag)
    }

    pub fn reconstruct(&self, diag: &[f64]) -> CMat {
        let mut scaled = self.vectors.clone();
        for (j, &v) in diag.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        hermitize(&(scaled * self.vectors.adjoint()))
    }
}

/// Threshold below which an eigenvalue counts as zero, relative to the
/// spectral radius.
pub fn support_threshold(eig: &HermitianEigen, rel: f64) -> f64 {
    rel * eig.spectral_radius().max(f64::MIN_POSITIVE)
}

/// `A^p` of a PSD matrix restricted to its support (pseudo-power for p < 0;
/// `A^0` is the support projector).
pub fn psd_power(a: &CMat, p: f64) -> CMat {
    let eig = HermitianEigen::new(a);
    let tol = support_threshold(&eig, 1e-12);
    eig.apply(|v| if v > tol { v.powf(p) } else { 0.0 })
}

pub fn psd_sqrt(a: &CMat) -> CMat {
    psd_power(a, 0.5)
}

/// `Tr[f(A)]` for Hermitian `A`.
pub fn trace_fn(a: &CMat, f: impl Fn(f64) -> f64) -> f64 {
    HermitianEigen::new(a).values.iter().map(|&v| f(v)).sum()
}

/// Smallest eigenvalue of the Hermitian part.
pub fn min_eigenvalue(a: &CMat) -> f64 {
    HermitianEigen::new(a).min()
}

pub fn is_psd(a: &CMat, tol: f64) -> bool {
    min_eigenvalue(a) >= -tol
}

/// Largest entry-wise modulus.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Operator (spectral) norm of an arbitrary square matrix.
pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).into_iter().fold(0.0, f64::max)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    a.clone().svd(false, false).singular_values.iter().copied().collect()
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Hilbert-Schmidt inner product `Tr[A† B]`.
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Kronecker product of a list of factors; the empty product is the 1x1 identity.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMat>) -> CMat {
    let mut acc = identity(1);
    for f in factors {
        acc = acc.kronecker(f);
    }
    acc
}

/// Partial trace over the subsystems whose `keep` flag is false. Subsystems
/// are ordered most-significant first, matching `kron`.
pub fn partial_trace(a: &CMat, dims: &[usize], keep: &[bool]) -> CMat {
    assert_eq!(dims.len(), keep.len());
    let total: usize = dims.iter().product();
    assert_eq!(a.nrows(), total);
    let kept_dim: usize = dims.iter().zip(keep).filter(|(_, &k)| k).map(|(d, _)| d).product();
    let traced_dim = total / kept_dim;
    let compose = |kept: &[usize], traced: &[usize]| -> usize {
        let (mut ki, mut ti) = (0, 0);
        let mut idx = 0;
        for (pos, &d) in dims.iter().enumerate() {
            let digit = if keep[pos] {
                ki += 1;
                kept[ki - 1]
            } else {
                ti += 1;
                traced[ti - 1]
            };
            idx = idx * d + digit;
        }
        idx
    };
    let kept_dims: Vec<usize> = dims.iter().zip(keep).filter(|(_, &k)| k).map(|(&d, _)| d).collect();
    let traced_dims: Vec<usize> = dims.iter().zip(keep).filter(|(_, &k)| !k).map(|(&d, _)| d).collect();
    let split = |mut idx: usize, ds: &[usize]| -> Vec<usize> {
        let mut out = vec![0; ds.len()];
        for (slot, &d) in out.iter_mut().zip(ds).rev() {
            *slot = idx % d;
            idx /= d;
        }
        out
    };
    let mut out = zeros(kept_dim);
    for r in 0..kept_dim {
        let rk = split(r, &kept_dims);
        for col in 0..kept_dim {
            let ck = split(col, &kept_dims);
            let mut acc = ZERO;
            for t in 0..traced_dim {
                let tt = split(t, &traced_dims);
                acc += a[(compose(&rk, &tt), compose(&ck, &tt))];
            }
            out[(r, col)] = acc;
        }
    }
    out
}
