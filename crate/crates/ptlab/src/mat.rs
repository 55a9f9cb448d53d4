//! Dense complex matrices and the small amount of numerical linear algebra
//! the rest of the crate needs: products, Kronecker products, approximate
//! equality, and a Hermitian eigensolver.
//!
//! Everything works at desk scale (total carrier dimension up to a few
//! dozen), so storage is plain row-major `Vec<Complex64>` and the
//! eigensolver is cyclic Jacobi.

use num_complex::Complex64;

use crate::error::PtError;

/// Absolute/relative tolerance used for every approximate equality in the
/// crate. All the algebraic identities of the theory are checked through
/// this.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_eps: f64,
    pub rel_eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_eps: 1e-9,
            rel_eps: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(abs_eps: f64, rel_eps: f64) -> Result<Self, PtError> {
        if abs_eps < 0.0 || rel_eps < 0.0 || !abs_eps.is_finite() || !rel_eps.is_finite() {
            return Err(PtError::InvalidTolerance { abs_eps, rel_eps });
        }
        Ok(Tolerance { abs_eps, rel_eps })
    }

    /// Uniform tolerance with equal absolute and relative parts.
    pub fn uniform(eps: f64) -> Result<Self, PtError> {
        Tolerance::new(eps, eps)
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self, PtError> {
        if entries.len() != rows * cols {
            return Err(PtError::ShapeMismatch {
                context: "CMatrix::new",
                expected: format!("{} entries for {rows}x{cols}", rows * cols),
                found: format!("{} entries", entries.len()),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(PtError::NonFiniteEntry);
        }
        Ok(CMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from a function of (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        CMatrix {
            rows,
            cols,
            entries,
        }
    }

    /// Real-valued convenience constructor.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self, PtError> {
        CMatrix::new(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.cols + j]
    }

    pub fn conj_transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Largest absolute value of any entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Sum of diagonal entries (square matrices).
    pub fn trace(&self) -> Complex64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn is_hermitian(&self, tol: Tolerance) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs();
        let bound = tol.abs_eps + tol.rel_eps * scale;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > bound {
                    return false;
                }
            }
        }
        true
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Matrix product.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, PtError> {
    if a.cols != b.rows {
        return Err(PtError::ShapeMismatch {
            context: "matmul",
            expected: format!("lhs cols = rhs rows, lhs is {}x{}", a.rows, a.cols),
            found: format!("rhs is {}x{}", b.rows, b.cols),
        });
    }
    let mut out = CMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.get(i, k);
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..b.cols {
                out[(i, j)] += aik * b.get(k, j);
            }
        }
    }
    Ok(out)
}

/// Kronecker product: `(a ⊗ b)[(i·rb+k),(j·cb+l)] = a[i,j]·b[k,l]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a.get(i, j);
            if aij.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b.get(k, l);
                }
            }
        }
    }
    out
}

/// Entry-wise sum.
pub fn add(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, PtError> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(PtError::ShapeMismatch {
            context: "add",
            expected: format!("{}x{}", a.rows, a.cols),
            found: format!("{}x{}", b.rows, b.cols),
        });
    }
    let entries = a
        .entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| x + y)
        .collect();
    Ok(CMatrix {
        rows: a.rows,
        cols: a.cols,
        entries,
    })
}

/// Entry-wise difference.
pub fn sub(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, PtError> {
    add(a, &scale(Complex64::new(-1.0, 0.0), b))
}

/// Scalar multiple.
pub fn scale(c: Complex64, a: &CMatrix) -> CMatrix {
    CMatrix {
        rows: a.rows,
        cols: a.cols,
        entries: a.entries.iter().map(|x| c * x).collect(),
    }
}

/// Max-norm distance between two equally shaped matrices.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> Result<f64, PtError> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(PtError::ShapeMismatch {
            context: "max_abs_diff",
            expected: format!("{}x{}", a.rows, a.cols),
            found: format!("{}x{}", b.rows, b.cols),
        });
    }
    Ok(a.entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

/// `true` iff `max|a−b| ≤ abs_eps + rel_eps·max(|a|,|b|)` entry-wise.
pub fn approx_eq(a: &CMatrix, b: &CMatrix, tol: Tolerance) -> Result<bool, PtError> {
    let diff = max_abs_diff(a, b)?;
    let scale = a.max_abs().max(b.max_abs());
    Ok(diff <= tol.abs_eps + tol.rel_eps * scale)
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matrix of eigenvectors as
/// columns, so that `V · diag(λ) · V† ≈ a`.
pub fn eig_hermitian(a: &CMatrix, tol: Tolerance) -> Result<(Vec<f64>, CMatrix), PtError> {
    if a.rows != a.cols {
        return Err(PtError::ShapeMismatch {
            context: "eig_hermitian",
            expected: "square matrix".into(),
            found: format!("{}x{}", a.rows, a.cols),
        });
    }
    if !a.is_hermitian(tol) {
        return Err(PtError::NotHermitian);
    }
    let n = a.rows;
    let mut m = a.clone();
    // Symmetrize exactly so rounding in the input cannot bias the sweep.
    for i in 0..n {
        for j in 0..n {
            let avg = (m.get(i, j) + m.get(j, i).conj()) * 0.5;
            m[(i, j)] = avg;
        }
        m[(i, i)] = Complex64::new(m.get(i, i).re, 0.0);
    }
    let mut v = CMatrix::identity(n);
    let scale = m.max_abs().max(1.0);
    let target = 1e-14 * scale;
    let max_sweeps = 100;
    for sweep in 0..=max_sweeps {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| m.get(p, q).norm())
            .fold(0.0, f64::max);
        if off <= target {
            break;
        }
        if sweep == max_sweeps {
            return Err(PtError::EigNoConvergence);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                let r = apq.norm();
                if r <= target * 1e-2 {
                    continue;
                }
                // Phase that makes the pivot real, then a real Jacobi
                // rotation on the 2x2 block.
                let phase = apq / r;
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Columns: col_p' = c·col_p − s·conj(phase)... applied as
                // m ← R† m R with R[p,p]=c, R[q,q]=c, R[p,q]=s·phase,
                // R[q,p]=−s·conj(phase) restricted to the (p,q) plane.
                let rpp = Complex64::new(c, 0.0);
                let rpq = phase * s;
                let rqp = -phase.conj() * s;
                let rqq = Complex64::new(c, 0.0);
                // m ← m R
                for i in 0..n {
                    let mip = m.get(i, p);
                    let miq = m.get(i, q);
                    m[(i, p)] = mip * rpp + miq * rqp;
                    m[(i, q)] = mip * rpq + miq * rqq;
                }
                // m ← R† m
                for j in 0..n {
                    let mpj = m.get(p, j);
                    let mqj = m.get(q, j);
                    m[(p, j)] = rpp.conj() * mpj + rqp.conj() * mqj;
                    m[(q, j)] = rpq.conj() * mpj + rqq.conj() * mqj;
                }
                // v ← v R
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v[(i, p)] = vip * rpp + viq * rqp;
                    v[(i, q)] = vip * rpq + viq * rqq;
                }
                m[(p, q)] = Complex64::new(0.0, 0.0);
                m[(q, p)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    order.sort_by(|&i, &j| evals[j].partial_cmp(&evals[i]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
    let sorted_vecs = CMatrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    Ok((sorted_vals, sorted_vecs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_matrix(rows: usize, cols: usize, seed: &mut u64) -> CMatrix {
        // Small deterministic LCG; keeps the oracle tests reproducible.
        let mut next = || {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((*seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        CMatrix::from_fn(rows, cols, |_, _| c(next(), next()))
    }

    #[test]
    fn matmul_identity_and_involution() {
        let m = CMatrix::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let i2 = CMatrix::identity(2);
        assert_eq!(matmul(&i2, &m).unwrap(), m);
        let x = CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(matmul(&x, &x).unwrap(), i2);
    }

    #[test]
    fn matmul_matches_naive_triple_loop() {
        let mut seed = 42;
        let a = rand_matrix(3, 4, &mut seed);
        let b = rand_matrix(4, 2, &mut seed);
        let prod = matmul(&a, &b).unwrap();
        // Independent oracle: naive triple loop.
        for i in 0..3 {
            for j in 0..2 {
                let mut acc = c(0.0, 0.0);
                for k in 0..4 {
                    acc += a.get(i, k) * b.get(k, j);
                }
                assert!((prod.get(i, j) - acc).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = CMatrix::zeros(2, 3);
        let b = CMatrix::zeros(2, 3);
        assert!(matmul(&a, &b).is_err());
    }

    #[test]
    fn kron_identities_and_shape() {
        let i2 = CMatrix::identity(2);
        let i3 = CMatrix::identity(3);
        assert_eq!(kron(&i2, &i3), CMatrix::identity(6));
        let mut seed = 7;
        let a = rand_matrix(3, 5, &mut seed);
        let b = rand_matrix(2, 4, &mut seed);
        let k = kron(&a, &b);
        assert_eq!((k.rows(), k.cols()), (6, 20));
    }

    #[test]
    fn kron_interchange_law() {
        let mut seed = 11;
        let tol = Tolerance::default();
        let a = rand_matrix(2, 2, &mut seed);
        let b = rand_matrix(2, 2, &mut seed);
        let cm = rand_matrix(2, 2, &mut seed);
        let d = rand_matrix(2, 2, &mut seed);
        let lhs = kron(&matmul(&a, &cm).unwrap(), &matmul(&b, &d).unwrap());
        let rhs = matmul(&kron(&a, &b), &kron(&cm, &d)).unwrap();
        assert!(approx_eq(&lhs, &rhs, tol).unwrap());
    }

    #[test]
    fn add_scale_distributivity() {
        let mut seed = 13;
        let tol = Tolerance::default();
        let a = rand_matrix(2, 2, &mut seed);
        let b = rand_matrix(2, 2, &mut seed);
        let cm = rand_matrix(2, 2, &mut seed);
        assert!(approx_eq(&add(&a, &CMatrix::zeros(2, 2)).unwrap(), &a, tol).unwrap());
        assert_eq!(scale(c(1.0, 0.0), &a), a);
        let lhs = kron(&add(&a, &b).unwrap(), &cm);
        let rhs = add(&kron(&a, &cm), &kron(&b, &cm)).unwrap();
        assert!(approx_eq(&lhs, &rhs, tol).unwrap());
    }

    #[test]
    fn approx_eq_thresholds() {
        let tol = Tolerance::default();
        let i2 = CMatrix::identity(2);
        assert!(approx_eq(&i2, &i2, tol).unwrap());
        let mut below = i2.clone();
        below[(0, 0)] += c(1e-12, 0.0);
        assert!(approx_eq(&i2, &below, tol).unwrap());
        let mut above = i2.clone();
        above[(0, 0)] += c(1e-3, 0.0);
        assert!(!approx_eq(&i2, &above, tol).unwrap());
    }

    #[test]
    fn eig_diagonal_and_pauli_x() {
        let tol = Tolerance::default();
        let d = CMatrix::from_real(2, 2, &[3.0, 0.0, 0.0, 1.0]).unwrap();
        let (vals, _) = eig_hermitian(&d, tol).unwrap();
        assert_eq!(vals, vec![3.0, 1.0]);
        let x = CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let (vals, _) = eig_hermitian(&x, tol).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_reconstruction_and_orthonormality() {
        let tol = Tolerance::default();
        let mut seed = 99;
        let g = rand_matrix(4, 4, &mut seed);
        // Hermitian input from a random matrix.
        let h = add(&g, &g.conj_transpose()).unwrap();
        let (vals, vecs) = eig_hermitian(&h, tol).unwrap();
        let diag = CMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                c(vals[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let recon = matmul(&matmul(&vecs, &diag).unwrap(), &vecs.conj_transpose()).unwrap();
        assert!(max_abs_diff(&recon, &h).unwrap() < 1e-9);
        let gram = matmul(&vecs.conj_transpose(), &vecs).unwrap();
        assert!(max_abs_diff(&gram, &CMatrix::identity(4)).unwrap() < 1e-9);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let tol = Tolerance::default();
        let m = CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(eig_hermitian(&m, tol), Err(PtError::NotHermitian)));
    }

    #[test]
    fn matmul_associativity_randomized() {
        let tol = Tolerance::default();
        let mut seed = 5;
        for _ in 0..10 {
            let a = rand_matrix(3, 2, &mut seed);
            let b = rand_matrix(2, 4, &mut seed);
            let cc = rand_matrix(4, 3, &mut seed);
            let lhs = matmul(&matmul(&a, &b).unwrap(), &cc).unwrap();
            let rhs = matmul(&a, &matmul(&b, &cc).unwrap()).unwrap();
            assert!(approx_eq(&lhs, &rhs, tol).unwrap());
        }
    }
}
