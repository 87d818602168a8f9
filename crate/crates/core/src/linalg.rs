//! Dense complex linear algebra: the [`ComplexMatrix`] carrier type,
//! Hermitian eigendecomposition, matrix functions built on it, Kronecker
//! products, trace norm, and partial trace.
//!
//! The eigensolver reduces a Hermitian matrix to real symmetric tridiagonal
//! form with complex Householder reflectors and then runs implicit-shift QL
//! with eigenvector accumulation. Everything here is exact dense arithmetic;
//! dimensions in this crate stay small enough (a few hundred) that no sparse
//! or iterative machinery is warranted.

use crate::error::{Error, Result};
use crate::hilbert::HilbertLayout;
use crate::C64;

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::ZERO; rows * cols] }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::ONE;
        }
        m
    }

    /// Build a matrix by evaluating `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Diagonal matrix from complex entries.
    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, v) in diag.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Build from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(rows * cols, data.len(), "row-major data length mismatch");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column `j` as an owned vector.
    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Matrix sum.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// Matrix difference.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// Scalar multiple.
    pub fn scaled(&self, s: C64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// In-place `self += s * other`.
    pub fn add_scaled_assign(&mut self, other: &Self, s: C64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Matrix product.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * oc..(i + 1) * oc];
            for k in 0..self.cols {
                let aik = self.data[i * self.cols + k];
                if aik == C64::ZERO {
                    continue;
                }
                let other_row = &other.data[k * oc..(k + 1) * oc];
                for (o, b) in out_row.iter_mut().zip(other_row) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// Trace.
    pub fn trace(&self) -> C64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum deviation from Hermitian symmetry, max |A - A^dag|.
    pub fn hermitian_deviation(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let dev = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// Check Hermitian symmetry against `tol * max(1, max|A|)`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol * self.max_abs().max(1.0)
    }

    /// Symmetrize in place: `A <- (A + A^dag)/2`.
    pub fn hermitize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in i..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)].conj());
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
        }
    }

    fn check_hermitian(&self, tol: f64) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        let dev = self.hermitian_deviation();
        if dev > tol * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian { asymmetry: dev });
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Kronecker product `a (x) b`.
///
/// Entry `((i*b.rows + k), (j*b.cols + l))` equals `a[(i,j)] * b[(k,l)]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == C64::ZERO {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues in ascending
/// order and orthonormal eigenvectors as matrix columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// Reassemble `V f(lambda) V^dag`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let mut scaled = v.clone();
        // scale column j by f(lambda_j)
        for j in 0..n {
            let fj = f(self.eigenvalues[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled.matmul(&v.dagger())
    }

    /// Apply `V f(lambda) V^dag` to a vector without forming the matrix.
    pub fn apply_fn_vec(&self, f: impl Fn(f64) -> C64, x: &[C64]) -> Vec<C64> {
        let v = &self.eigenvectors;
        let n = v.rows();
        assert_eq!(n, x.len());
        // c = V^dag x
        let mut c = vec![C64::ZERO; n];
        for j in 0..n {
            let mut acc = C64::ZERO;
            for i in 0..n {
                acc += v[(i, j)].conj() * x[i];
            }
            c[j] = acc * f(self.eigenvalues[j]);
        }
        // y = V c
        let mut y = vec![C64::ZERO; n];
        for i in 0..n {
            let mut acc = C64::ZERO;
            for j in 0..n {
                acc += v[(i, j)] * c[j];
            }
            y[i] = acc;
        }
        y
    }
}

/// Hermitian eigendecomposition via Householder tridiagonalization followed
/// by implicit-shift QL.
///
/// Fails with [`Error::NotHermitian`] if `a` deviates from symmetry by more
/// than `1e-10 * max(1, max|a|)`.
pub fn herm_eig(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    a.check_hermitian(1e-10)?;
    let n = a.rows();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let (mut d, mut e, mut z) = tridiagonalize(a);
    tql2(&mut d, &mut e, &mut z)?;

    // sort ascending, permuting eigenvector columns to match
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("eigenvalue NaN"));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| z[(i, order[j])]);
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// Reduce Hermitian `a` to real symmetric tridiagonal form `Q^dag A Q = T`.
///
/// Returns `(diag, offdiag, q)`, with `offdiag[i]` the coupling between
/// `i` and `i+1` (`offdiag[n-1]` is zero padding).
fn tridiagonalize(a: &ComplexMatrix) -> (Vec<f64>, Vec<f64>, ComplexMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = ComplexMatrix::identity(n);
    let mut v = vec![C64::ZERO; n];

    for k in 0..n.saturating_sub(2) {
        // Householder vector from column k below the diagonal.
        let mut norm2 = 0.0;
        for i in k + 1..n {
            norm2 += h[(i, k)].norm_sqr();
        }
        let sigma = norm2.sqrt();
        if sigma == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::ONE };
        let alpha = -phase * sigma;
        for i in k + 1..n {
            v[i] = h[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm2 = 2.0 * sigma * (sigma + x0.norm());
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;

        // Rank-2 update of the trailing block: B <- B - u v^dag - v u^dag
        // with w = tau * B v and u = w - (tau/2) (v^dag w) v.
        let mut w = vec![C64::ZERO; n];
        for i in k + 1..n {
            let mut acc = C64::ZERO;
            for j in k + 1..n {
                acc += h[(i, j)] * v[j];
            }
            w[i] = acc * tau;
        }
        let c: C64 = (k + 1..n).map(|i| v[i].conj() * w[i]).sum();
        for i in k + 1..n {
            w[i] -= 0.5 * tau * c * v[i];
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let upd = w[i] * v[j].conj() + v[i] * w[j].conj();
                h[(i, j)] -= upd;
            }
        }
        h[(k + 1, k)] = alpha;
        h[(k, k + 1)] = alpha.conj();
        for i in k + 2..n {
            h[(i, k)] = C64::ZERO;
            h[(k, i)] = C64::ZERO;
        }

        // Q <- Q P, P acting on columns k+1..n.
        for r in 0..n {
            let mut acc = C64::ZERO;
            for m in k + 1..n {
                acc += q[(r, m)] * v[m];
            }
            acc *= tau;
            for m in k + 1..n {
                let dv = acc * v[m].conj();
                q[(r, m)] -= dv;
            }
        }
        v[k + 1..n].fill(C64::ZERO);
    }

    // Phase-rotate columns so the sub/superdiagonal becomes real nonnegative.
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut s = C64::ONE;
    for i in 0..n {
        d[i] = h[(i, i)].re;
        if i + 1 < n {
            let beta = h[(i + 1, i)];
            let mag = beta.norm();
            e[i] = mag;
            let s_next = if mag > 0.0 { s * (beta / mag) } else { s };
            // scale column i+1 of q by s_next relative to the chain
            for r in 0..n {
                let val = q[(r, i + 1)] * s_next;
                q[(r, i + 1)] = val;
            }
            s = s_next;
        }
    }
    (d, e, q)
}

/// Implicit-shift QL iteration on a real symmetric tridiagonal matrix,
/// accumulating the (real) rotations into the complex eigenvector matrix.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut ComplexMatrix) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    // global deflation floor: couplings below machine precision relative to
    // the tridiagonal norm are representation noise (they otherwise stall
    // the iteration on denormal-scale sub-blocks of low-rank inputs)
    let anorm = d
        .iter()
        .zip(e.iter())
        .map(|(di, ei)| di.abs() + ei.abs())
        .fold(0.0f64, f64::max);
    let floor = f64::EPSILON * anorm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            // locate a negligible off-diagonal element
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                // QL needs ~2-3 sweeps per eigenvalue; treat anything beyond
                // the cap as an internal invariant violation
                panic!("implicit QL failed to converge after 64 sweeps");
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[(k, i + 1)].re;
                    let fi = z[(k, i + 1)].im;
                    let zi = z[(k, i)];
                    z[(k, i + 1)] = C64::new(s * zi.re + c * f, s * zi.im + c * fi);
                    z[(k, i)] = C64::new(c * zi.re - s * f, c * zi.im - s * fi);
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// `V exp(s * lambda) V^dag` for Hermitian `h`.
///
/// For purely imaginary `s` the result is unitary; passing `s = -i t` yields
/// the propagator `exp(-i h t)`.
pub fn expm_hermitian_scaled(h: &ComplexMatrix, s: C64) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    Ok(eig.apply_fn(|lambda| (s * lambda).exp()))
}

/// Principal square root of a positive-semidefinite Hermitian matrix.
///
/// Eigenvalues in `[-1e-10, 0)` (and magnitudes below `1e-12`) are clamped to
/// zero to absorb roundoff; anything below `-1e-6` reports
/// [`Error::NegativeSpectrum`].
pub fn sqrtm_psd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(a)?;
    if let Some(&min) = eig.eigenvalues.first() {
        if min < -1e-6 {
            return Err(Error::NegativeSpectrum { min_eigenvalue: min });
        }
    }
    Ok(eig.apply_fn(|lambda| {
        let clamped = if lambda < 0.0 || lambda.abs() < 1e-12 { 0.0 } else { lambda };
        C64::new(clamped.sqrt(), 0.0)
    }))
}

/// Trace norm of a Hermitian matrix: the sum of absolute eigenvalues.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    let eig = herm_eig(a)?;
    Ok(eig.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// Which tensor factor [`partial_trace`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    /// Keep the field factor, trace out all atoms.
    Field,
    /// Keep the atomic register, trace out the field.
    Atoms,
}

/// Partial trace of a density matrix on `field (x) atoms`.
pub fn partial_trace(
    state: &ComplexMatrix,
    layout: &HilbertLayout,
    keep: Subsystem,
) -> Result<ComplexMatrix> {
    let df = layout.field_dim();
    let da = layout.atoms_dim();
    let total = df * da;
    if state.rows() != total || state.cols() != total {
        return Err(Error::DimensionMismatch { expected: total, got: state.rows() });
    }
    match keep {
        Subsystem::Field => {
            let mut out = ComplexMatrix::zeros(df, df);
            for i in 0..df {
                for j in 0..df {
                    let mut acc = C64::ZERO;
                    for s in 0..da {
                        acc += state[(i * da + s, j * da + s)];
                    }
                    out[(i, j)] = acc;
                }
            }
            Ok(out)
        }
        Subsystem::Atoms => {
            let mut out = ComplexMatrix::zeros(da, da);
            for s in 0..da {
                for t in 0..da {
                    let mut acc = C64::ZERO;
                    for i in 0..df {
                        acc += state[(i * da + s, i * da + t)];
                    }
                    out[(s, t)] = acc;
                }
            }
            Ok(out)
        }
    }
}

/// Outer product `x y^dag`.
pub fn outer(x: &[C64], y: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(x.len(), y.len(), |i, j| x[i] * y[j].conj())
}

/// Inner product `<x|y>`.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    fn random_hermitian(n: usize, rng: &mut StdRng) -> ComplexMatrix {
        let mut a = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = C64::new(rng.random::<f64>() - 0.5, 0.0);
            for j in i + 1..n {
                let z = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        a
    }

    fn random_psd(n: usize, rng: &mut StdRng) -> ComplexMatrix {
        let b = ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        b.matmul(&b.dagger())
    }

    #[test]
    fn kron_identity_cases() {
        let i2 = ComplexMatrix::identity(2);
        let i4 = kron(&i2, &i2);
        assert_eq!(i4, ComplexMatrix::identity(4));

        let sz = ComplexMatrix::from_diag(&[C64::ONE, -C64::ONE]);
        let k = kron(&sz, &i2);
        let expected = ComplexMatrix::from_diag(&[C64::ONE, C64::ONE, -C64::ONE, -C64::ONE]);
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_matches_quadruple_loop() {
        let mut rng = StdRng::seed_from_u64(7);
        let a = ComplexMatrix::from_fn(2, 2, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let b = ComplexMatrix::from_fn(3, 3, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let k = kron(&a, &b);
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..3 {
                    for q in 0..3 {
                        let got = k[(i * 3 + p, j * 3 + q)];
                        let want = a[(i, j)] * b[(p, q)];
                        assert!((got - want).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn eig_of_diagonal_sorts_ascending() {
        let a = ComplexMatrix::from_diag(&[C64::new(3.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        let eig = herm_eig(&a).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 2.0).abs() < 1e-12);
        assert!((eig.eigenvalues[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eig_pauli_x() {
        let mut sx = ComplexMatrix::zeros(2, 2);
        sx[(0, 1)] = C64::ONE;
        sx[(1, 0)] = C64::ONE;
        let eig = herm_eig(&sx).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = StdRng::seed_from_u64(42);
        for &n in &[5usize, 20] {
            let a = random_hermitian(n, &mut rng);
            let eig = herm_eig(&a).unwrap();
            let recon = eig.apply_fn(|l| C64::new(l, 0.0));
            let scale = a.max_abs().max(1.0);
            assert!(recon.sub(&a).max_abs() < 1e-10 * scale, "reconstruction failed at n={n}");
            // orthonormality
            let vtv = eig.eigenvectors.dagger().matmul(&eig.eigenvectors);
            assert!(vtv.sub(&ComplexMatrix::identity(n)).max_abs() < 1e-10);
            // ascending
            for w in eig.eigenvalues.windows(2) {
                assert!(w[0] <= w[1] + 1e-14);
            }
        }
    }

    #[test]
    fn eig_handles_degenerate_spectra() {
        // sigma_z (x) I has doubly degenerate +-1
        let sz = ComplexMatrix::from_diag(&[C64::ONE, -C64::ONE]);
        let a = kron(&sz, &ComplexMatrix::identity(2));
        let eig = herm_eig(&a).unwrap();
        let recon = eig.apply_fn(|l| C64::new(l, 0.0));
        assert!(recon.sub(&a).max_abs() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut a = ComplexMatrix::zeros(2, 2);
        a[(0, 1)] = C64::ONE;
        assert!(matches!(herm_eig(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn expm_at_zero_is_identity() {
        let mut rng = StdRng::seed_from_u64(3);
        let h = random_hermitian(6, &mut rng);
        let u = expm_hermitian_scaled(&h, C64::ZERO).unwrap();
        assert!(u.sub(&ComplexMatrix::identity(6)).max_abs() < 1e-12);
    }

    #[test]
    fn expm_sigma_z_quarter_period() {
        let sz = ComplexMatrix::from_diag(&[C64::ONE, -C64::ONE]);
        let u = expm_hermitian_scaled(&sz, C64::new(0.0, -std::f64::consts::FRAC_PI_2)).unwrap();
        assert!((u[(0, 0)] - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((u[(1, 1)] - C64::new(0.0, 1.0)).norm() < 1e-12);
        assert!(u[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn expm_inverse_pair_is_identity() {
        let mut rng = StdRng::seed_from_u64(11);
        let h = random_hermitian(12, &mut rng);
        let t = 0.7;
        let u = expm_hermitian_scaled(&h, C64::new(0.0, -t)).unwrap();
        let uinv = expm_hermitian_scaled(&h, C64::new(0.0, t)).unwrap();
        let prod = u.matmul(&uinv);
        assert!(prod.sub(&ComplexMatrix::identity(12)).max_abs() < 1e-10);
        // unitarity of a single factor
        let utu = u.dagger().matmul(&u);
        assert!(utu.sub(&ComplexMatrix::identity(12)).max_abs() < 1e-10);
    }

    #[test]
    fn sqrtm_diagonal_and_square_back() {
        let a = ComplexMatrix::from_diag(&[C64::new(4.0, 0.0), C64::new(9.0, 0.0)]);
        let r = sqrtm_psd(&a).unwrap();
        assert!((r[(0, 0)].re - 2.0).abs() < 1e-12);
        assert!((r[(1, 1)].re - 3.0).abs() < 1e-12);

        let mut rng = StdRng::seed_from_u64(19);
        let p = random_psd(15, &mut rng);
        let r = sqrtm_psd(&p).unwrap();
        let back = r.matmul(&r);
        assert!(back.sub(&p).max_abs() < 1e-8 * p.max_abs().max(1.0));
    }

    #[test]
    fn sqrtm_rejects_negative_spectrum() {
        let a = ComplexMatrix::from_diag(&[C64::new(1.0, 0.0), C64::new(-0.5, 0.0)]);
        assert!(matches!(sqrtm_psd(&a), Err(Error::NegativeSpectrum { .. })));
    }

    #[test]
    fn trace_norm_cases() {
        let z = ComplexMatrix::zeros(3, 3);
        assert!(trace_norm(&z).unwrap() < 1e-14);
        let a = ComplexMatrix::from_diag(&[
            C64::new(1.0, 0.0),
            C64::new(-2.0, 0.0),
            C64::new(3.0, 0.0),
        ]);
        assert!((trace_norm(&a).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_of_density_matrix_is_one() {
        let mut rng = StdRng::seed_from_u64(23);
        let p = random_psd(8, &mut rng);
        let rho = p.scaled(C64::from(1.0 / p.trace().re));
        assert!((trace_norm(&rho).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trace_norm_triangle_inequality() {
        let mut rng = StdRng::seed_from_u64(29);
        for _ in 0..10 {
            let a = random_hermitian(6, &mut rng);
            let b = random_hermitian(6, &mut rng);
            let lhs = trace_norm(&a.add(&b)).unwrap();
            let rhs = trace_norm(&a).unwrap() + trace_norm(&b).unwrap();
            assert!(lhs <= rhs + 1e-10);
        }
    }

    #[test]
    fn partial_trace_product_state() {
        let mut rng = StdRng::seed_from_u64(31);
        let layout = HilbertLayout::new(3, 1).unwrap();
        let ra = random_psd(3, &mut rng);
        let ra = ra.scaled(C64::from(1.0 / ra.trace().re));
        let rb = random_psd(2, &mut rng);
        let rb = rb.scaled(C64::from(1.0 / rb.trace().re));
        let joint = kron(&ra, &rb);
        let red = partial_trace(&joint, &layout, Subsystem::Field).unwrap();
        assert!(red.sub(&ra).max_abs() < 1e-12);
        let red_b = partial_trace(&joint, &layout, Subsystem::Atoms).unwrap();
        assert!(red_b.sub(&rb).max_abs() < 1e-12);
    }

    #[test]
    fn partial_trace_bell_state() {
        let layout = HilbertLayout::new(2, 1).unwrap();
        let inv = 1.0 / 2.0f64.sqrt();
        let psi = vec![C64::new(inv, 0.0), C64::ZERO, C64::ZERO, C64::new(inv, 0.0)];
        let rho = outer(&psi, &psi);
        for keep in [Subsystem::Field, Subsystem::Atoms] {
            let red = partial_trace(&rho, &layout, keep).unwrap();
            let half = ComplexMatrix::identity(2).scaled(C64::from(0.5));
            assert!(red.sub(&half).max_abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_matches_index_sum_oracle() {
        let mut rng = StdRng::seed_from_u64(37);
        let layout = HilbertLayout::new(4, 2).unwrap();
        let d = layout.total_dim();
        let rho = random_psd(d, &mut rng);
        let rho = rho.scaled(C64::from(1.0 / rho.trace().re));
        let red = partial_trace(&rho, &layout, Subsystem::Field).unwrap();
        // brute-force double-index sum
        let da = layout.atoms_dim();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = C64::ZERO;
                for s in 0..da {
                    acc += rho[(i * da + s, j * da + s)];
                }
                assert!((red[(i, j)] - acc).norm() < 1e-12);
            }
        }
        // trace and Hermiticity preserved
        assert!((red.trace().re - 1.0).abs() < 1e-12);
        assert!(red.hermitian_deviation() < 1e-12);
    }

    #[test]
    fn large_random_reconstruction_tolerance() {
        let mut rng = StdRng::seed_from_u64(41);
        let a = random_hermitian(60, &mut rng);
        let eig = herm_eig(&a).unwrap();
        let recon = eig.apply_fn(|l| C64::new(l, 0.0));
        assert!(recon.sub(&a).max_abs() < 1e-10 * a.max_abs().max(1.0));
    }
}
