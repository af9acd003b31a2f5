//! Dense complex linear algebra over tensor-product Hilbert spaces.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Largest matrix dimension produced by [`kron`] unless a caller asks otherwise.
///
/// Covers the doubled (system + ancilla) space of three four-level atoms.
pub const DEFAULT_MAX_DIM: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("dimension {dim} exceeds the configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid permutation {perm:?} for {n} subsystems")]
    InvalidPermutation { perm: Vec<usize>, n: usize },
    #[error("partial trace needs at least one kept subsystem")]
    EmptyKeep,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite amplitudes while propagating `{0}`")]
    NonFinite(String),
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(16) {
            let row: Vec<String> = (0..self.cols.min(16))
                .map(|c| {
                    let z = self[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, TensorError> {
        if rows * cols != data.len() {
            return Err(TensorError::ShapeMismatch(format!(
                "{rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from real row literals; handy for gates and tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        Self::from_fn(n, m, |r, c| C64::new(rows[r][c], 0.0))
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Outer product |u⟩⟨v|.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute row sum; an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max|M − M†| ≤ tol · max|M|` (absolute when `M` is zero).
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for r in 0..self.rows {
            for c in r..self.cols {
                if (self[(r, c)] - self[(c, r)].conj()).norm() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && self
                .adjoint()
                .matmul(self)
                .max_abs_diff(&Self::identity(self.rows))
                <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// (M + M†)/2.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * 0.5
        })
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul inner dimensions");
        let mut out = Self::zeros(self.rows, rhs.cols);
        matmul_into(
            &self.data,
            &rhs.data,
            &mut out.data,
            self.rows,
            self.cols,
            rhs.cols,
        );
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matvec dimension");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Selects the sub-matrix on the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |r, c| self[(rows[r], cols[c])])
    }
}

/// `out = a·b` for row-major `a` (n×k) and `b` (k×m).
pub(crate) fn matmul_into(a: &[C64], b: &[C64], out: &mut [C64], n: usize, k: usize, m: usize) {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), k * m);
    debug_assert_eq!(out.len(), n * m);
    out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
    for i in 0..n {
        let orow = &mut out[i * m..(i + 1) * m];
        for (l, &aik) in a[i * k..(i + 1) * k].iter().enumerate() {
            if aik.re == 0.0 && aik.im == 0.0 {
                continue;
            }
            let brow = &b[l * m..(l + 1) * m];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter_mut()
            .zip(&rhs.data)
            .for_each(|(a, b)| *a += b);
    }
}

/// Per-subsystem dimensions of a tensor-product space, first factor most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsystemShape {
    local_dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(local_dims: Vec<usize>) -> Result<Self, TensorError> {
        if local_dims.is_empty() {
            return Err(TensorError::ShapeMismatch(
                "shape needs at least one subsystem".into(),
            ));
        }
        if let Some(&d) = local_dims.iter().find(|&&d| d < 2) {
            return Err(TensorError::ShapeMismatch(format!(
                "local dimension {d} < 2"
            )));
        }
        Ok(Self { local_dims })
    }

    pub fn uniform(d: usize, n: usize) -> Result<Self, TensorError> {
        Self::new(vec![d; n])
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn len(&self) -> usize {
        self.local_dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local_dims.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.local_dims.iter().product()
    }

    /// Shape with subsystem `j` taken from subsystem `perm[j]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, TensorError> {
        check_perm(perm, self.len())?;
        Ok(Self {
            local_dims: perm.iter().map(|&p| self.local_dims[p]).collect(),
        })
    }

    /// Shape whose local dimensions are squared (operator space of each factor).
    pub fn squared(&self) -> Self {
        Self {
            local_dims: self.local_dims.iter().map(|d| d * d).collect(),
        }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut local_dims = self.local_dims.clone();
        local_dims.extend_from_slice(&other.local_dims);
        Self { local_dims }
    }

    /// Splits a flat index into per-subsystem digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for (slot, &d) in out.iter_mut().zip(&self.local_dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn flat(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.local_dims)
            .fold(0, |acc, (&x, &d)| acc * d + x)
    }

    /// Flat indices whose every digit is 0 or 1.
    pub fn qubit_indices(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.digits(i).iter().all(|&k| k < 2))
            .collect()
    }

    fn check_matrix(&self, m: &ComplexMatrix) -> Result<(), TensorError> {
        if !m.is_square() {
            return Err(TensorError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        if m.rows() != self.dim() {
            return Err(TensorError::ShapeMismatch(format!(
                "matrix dimension {} does not match shape {:?}",
                m.rows(),
                self.local_dims
            )));
        }
        Ok(())
    }
}

fn check_perm(perm: &[usize], n: usize) -> Result<(), TensorError> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(TensorError::InvalidPermutation {
            perm: perm.to_vec(),
            n,
        });
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(TensorError::InvalidPermutation {
                perm: perm.to_vec(),
                n,
            });
        }
        seen[p] = true;
    }
    Ok(())
}

/// Kronecker product `a ⊗ b`, refusing results larger than `max_dim` in either direction.
pub fn kron_checked(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    max_dim: usize,
) -> Result<ComplexMatrix, TensorError> {
    let rows = a.rows.saturating_mul(b.rows);
    let cols = a.cols.saturating_mul(b.cols);
    if rows.max(cols) > max_dim {
        return Err(TensorError::DimensionOverflow {
            dim: rows.max(cols),
            max: max_dim,
        });
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for br in 0..b.rows {
                let base = (ar * b.rows + br) * cols + ac * b.cols;
                for bc in 0..b.cols {
                    out.data[base + bc] = x * b[(br, bc)];
                }
            }
        }
    }
    Ok(out)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, TensorError> {
    kron_checked(a, b, DEFAULT_MAX_DIM)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a>(
    factors: impl IntoIterator<Item = &'a ComplexMatrix>,
) -> Result<ComplexMatrix, TensorError> {
    let mut acc = ComplexMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f)?;
    }
    Ok(acc)
}

/// Kronecker product of state vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

/// Index map for reordering subsystems: entry `i` of the result is the
/// flat index in the original ordering of basis state `i` in the new ordering,
/// where new subsystem `j` is old subsystem `perm[j]`.
pub fn permutation_index_map(
    shape: &SubsystemShape,
    perm: &[usize],
) -> Result<Vec<usize>, TensorError> {
    let new_shape = shape.permuted(perm)?;
    let dim = shape.dim();
    let mut old_digits = vec![0; shape.len()];
    Ok((0..dim)
        .map(|i| {
            let nd = new_shape.digits(i);
            for (j, &p) in perm.iter().enumerate() {
                old_digits[p] = nd[j];
            }
            shape.flat(&old_digits)
        })
        .collect())
}

/// Reorders the tensor factors of `m`: subsystem `j` of the result is
/// subsystem `perm[j]` of the input. Equivalent to `P m P†` with `P` the
/// basis-permutation unitary.
pub fn permute_subsystems(
    m: &ComplexMatrix,
    shape: &SubsystemShape,
    perm: &[usize],
) -> Result<ComplexMatrix, TensorError> {
    shape.check_matrix(m)?;
    let map = permutation_index_map(shape, perm)?;
    Ok(m.select(&map, &map))
}

/// Traces out every subsystem not listed in `keep`; kept factors retain their order.
pub fn partial_trace(
    m: &ComplexMatrix,
    shape: &SubsystemShape,
    keep: &[usize],
) -> Result<ComplexMatrix, TensorError> {
    shape.check_matrix(m)?;
    if keep.is_empty() {
        return Err(TensorError::EmptyKeep);
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= shape.len()) {
        return Err(TensorError::ShapeMismatch(format!(
            "invalid keep set {keep:?}"
        )));
    }
    let traced: Vec<usize> = (0..shape.len()).filter(|i| !kept.contains(i)).collect();
    let dims = shape.local_dims();
    let kshape = kept.iter().map(|&i| dims[i]).collect::<Vec<_>>();
    let tdims = traced.iter().map(|&i| dims[i]).collect::<Vec<_>>();
    let kdim: usize = kshape.iter().product();
    let tdim: usize = tdims.iter().product();
    // Every new ordering puts kept subsystems first, then traced ones.
    let order: Vec<usize> = kept.iter().chain(&traced).copied().collect();
    let map = permutation_index_map(shape, &order)?;
    let mut out = ComplexMatrix::zeros(kdim, kdim);
    for r in 0..kdim {
        for c in 0..kdim {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..tdim {
                acc += m[(map[r * tdim + t], map[c * tdim + t])];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// Householder reduction to a real symmetric tridiagonal matrix, followed by
/// implicit QL iterations with Wilkinson shifts. Only the Hermitian part of
/// the input is used.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>, TensorError> {
    if !m.is_square() {
        return Err(TensorError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut d, mut e) = tridiagonalize(m);
    tridiagonal_ql(&mut d, &mut e);
    d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(d)
}

fn tridiagonalize(m: &ComplexMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.rows();
    let mut a = m.hermitian_part();
    let zero = C64::new(0.0, 0.0);
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x: Vec<C64> = (0..len).map(|i| a[(k + 1 + i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let tail = x[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if xnorm == 0.0 || tail == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= vnorm);
        // p = A v on the trailing block, then w = p − (v†p) v.
        let p: Vec<C64> = (0..len)
            .map(|i| (0..len).map(|j| a[(k + 1 + i, k + 1 + j)] * v[j]).sum())
            .collect();
        let kappa: C64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
        let w: Vec<C64> = p.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();
        for i in 0..len {
            for j in 0..len {
                let upd = v[i] * w[j].conj() + w[i] * v[j].conj();
                a[(k + 1 + i, k + 1 + j)] -= upd * 2.0;
            }
        }
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in 1..len {
            a[(k + 1 + i, k)] = zero;
            a[(k, k + 1 + i)] = zero;
        }
    }
    let d = (0..n).map(|i| a[(i, i)].re).collect();
    // A diagonal unitary similarity makes the sub-diagonal real and non-negative.
    let e = (0..n)
        .map(|i| if i + 1 < n { a[(i + 1, i)].norm() } else { 0.0 })
        .collect();
    (d, e)
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// sub-diagonal `e` (`e[i]` couples `i` and `i+1`); overwrites `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    if n < 2 {
        return;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Sum of singular values.
///
/// Hermitian inputs use their eigenvalues directly; other square inputs go
/// through the Hermitian dilation `[[0, M], [M†, 0]]`, whose eigenvalues are ±σᵢ.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64, TensorError> {
    if !m.is_square() {
        return Err(TensorError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if m.is_hermitian(1e-12) {
        return Ok(hermitian_eigenvalues(m)?.iter().map(|l| l.abs()).sum());
    }
    let n = m.rows();
    let dil = ComplexMatrix::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, false) => m[(r, c - n)],
        (false, true) => m[(c, r - n)].conj(),
        _ => C64::new(0.0, 0.0),
    });
    Ok(0.5
        * hermitian_eigenvalues(&dil)?
            .iter()
            .map(|l| l.abs())
            .sum::<f64>())
}

/// Matrix of one classical fourth-order Runge–Kutta step of `dψ/dt = −i h ψ`
/// with step `dt`. For constant `h` the step is exactly the polynomial
/// `1 + z + z²/2 + z³/6 + z⁴/24` evaluated at `z = −i h dt`.
pub fn rk4_step_operator(h: &ComplexMatrix, dt: f64) -> ComplexMatrix {
    let n = h.rows();
    let z = h.scale(C64::new(0.0, -dt));
    // Horner: 1 + z(1 + z/2(1 + z/3(1 + z/4))).
    let id = ComplexMatrix::identity(n);
    let mut acc = &id + &z.scale_real(0.25);
    for k in [3.0, 2.0, 1.0] {
        acc = &id + &z.matmul(&acc).scale_real(1.0 / k);
    }
    acc
}

/// Matrix of one integrating-factor (Lawson) RK4 step of `dψ/dt = −i h ψ`.
///
/// The diagonal of `h` (which may be complex) is propagated exactly and RK4
/// is applied to the off-diagonal part in the corresponding interaction
/// picture, so uncoupled levels carry no numerical damping.
pub fn lawson_rk4_step_operator(h: &ComplexMatrix, dt: f64) -> ComplexMatrix {
    let n = h.rows();
    let d: Vec<C64> = (0..n).map(|i| h[(i, i)]).collect();
    let i = C64::new(0.0, 1.0);
    let b = ComplexMatrix::from_fn(n, n, |r, c| {
        if r == c {
            C64::new(0.0, 0.0)
        } else {
            -i * h[(r, c)]
        }
    });
    let rotated =
        |tau: f64| ComplexMatrix::from_fn(n, n, |r, c| (i * (d[r] - d[c]) * tau).exp() * b[(r, c)]);
    let half = rotated(0.5 * dt);
    let full = rotated(dt);
    let id = ComplexMatrix::identity(n);
    let k1 = b;
    let k2 = half.matmul(&(&id + &k1.scale_real(0.5 * dt)));
    let k3 = half.matmul(&(&id + &k2.scale_real(0.5 * dt)));
    let k4 = full.matmul(&(&id + &k3.scale_real(dt)));
    let sum = &(&k1 + &k4) + &(&k2 + &k3).scale_real(2.0);
    let u = &id + &sum.scale_real(dt / 6.0);
    ComplexMatrix::from_fn(n, n, |r, c| (-i * d[r] * dt).exp() * u[(r, c)])
}

/// Integrates `dψ/dt = −i h ψ` over `duration` with `steps` fixed RK4 steps.
pub fn propagate_segment(
    h: &ComplexMatrix,
    psi: &[C64],
    duration: f64,
    steps: usize,
) -> Result<Vec<C64>, TensorError> {
    if !h.is_square() {
        return Err(TensorError::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    if h.rows() != psi.len() {
        return Err(TensorError::ShapeMismatch(format!(
            "state of length {} for a {}-dimensional generator",
            psi.len(),
            h.rows()
        )));
    }
    let steps = steps.max(1);
    let dt = duration / steps as f64;
    let mi = C64::new(0.0, -1.0);
    let deriv = |v: &[C64]| -> Vec<C64> { h.matvec(v).into_iter().map(|z| z * mi).collect() };
    let axpy = |v: &[C64], k: &[C64], a: f64| -> Vec<C64> {
        v.iter().zip(k).map(|(x, y)| x + y * a).collect()
    };
    let mut y = psi.to_vec();
    for _ in 0..steps {
        let k1 = deriv(&y);
        let k2 = deriv(&axpy(&y, &k1, dt / 2.0));
        let k3 = deriv(&axpy(&y, &k2, dt / 2.0));
        let k4 = deriv(&axpy(&y, &k3, dt));
        for i in 0..y.len() {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        if !y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(TensorError::NonFinite("segment".into()));
        }
    }
    Ok(y)
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}
