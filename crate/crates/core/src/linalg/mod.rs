//! Dense complex matrix kernel.
//!
//! Superoperators use column stacking throughout: `vec(X)[i + j*d] = X[(i, j)]`,
//! which is nalgebra's native storage order. With that convention
//! `vec(A·X·B) = (Bᵀ ⊗ A)·vec(X)`.

mod expm;
mod ops;
mod svd;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use expm::{expm, expm_matrix};

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A bounded operator on a `d`-dimensional system space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(DMatrix<Complex64>);

impl Operator {
    /// Wraps a matrix, rejecting non-square shapes and non-finite entries.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidOperator(format!(
                "shape {}x{} is not a non-empty square",
                m.nrows(),
                m.ncols()
            )));
        }
        if let Some(pos) = m
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidOperator(format!(
                "entry ({}, {}) is not finite",
                pos % m.nrows(),
                pos / m.nrows()
            )));
        }
        Ok(Operator(m))
    }

    pub(crate) fn wrap(m: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Operator(m)
    }

    pub fn zeros(d: usize) -> Self {
        Operator(DMatrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        Operator(DMatrix::identity(d, d))
    }

    pub fn from_fn(d: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Operator(DMatrix::from_fn(d, d, f))
    }

    /// Builds an operator from rows; panics on ragged input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let d = rows.len();
        assert!(rows.iter().all(|r| r.len() == d), "rows must form a square");
        Operator(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let d = rows.len();
        assert!(rows.iter().all(|r| r.len() == d), "rows must form a square");
        Operator(DMatrix::from_fn(d, d, |i, j| {
            Complex64::new(rows[i][j], 0.0)
        }))
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let d = entries.len();
        Operator(DMatrix::from_fn(
            d,
            d,
            |i, j| if i == j { entries[i] } else { C0 },
        ))
    }

    /// `|u⟩⟨w|` for column vectors `u`, `w`.
    pub fn outer(u: &DVector<Complex64>, w: &DVector<Complex64>) -> Self {
        Operator(u * w.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Operator(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Operator(self.0.transpose())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Operator(&self.0 * c)
    }

    /// Tensor product `self ⊗ other` (self is the outer factor).
    pub fn kron(&self, other: &Operator) -> Self {
        Operator(self.0.kronecker(&other.0))
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.0 * v
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| *z == C0)
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() == d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: d,
                found: self.dim(),
            })
        }
    }
}

/// An orthogonal projector together with its rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    op: Operator,
    rank: usize,
}

impl Projector {
    /// Validates `op` as an orthogonal projector (Hermitian, idempotent, integral trace).
    pub fn new(op: Operator, tol: f64) -> Result<Self> {
        let herm = (&op - &op.adjoint()).frobenius_norm();
        if herm > tol {
            return Err(Error::InvalidProjector(format!(
                "not Hermitian (residual {herm:.3e})"
            )));
        }
        let idem = (&(&op * &op) - &op).frobenius_norm();
        if idem > tol {
            return Err(Error::InvalidProjector(format!(
                "not idempotent (residual {idem:.3e})"
            )));
        }
        let tr = op.trace();
        let rank = tr.re.round();
        if (tr - Complex64::new(rank, 0.0)).norm() > tol.max(1e-8) || rank < 0.0 {
            return Err(Error::InvalidProjector(format!(
                "trace {tr} is not a non-negative integer"
            )));
        }
        Ok(Projector {
            op,
            rank: rank as usize,
        })
    }

    pub fn identity(d: usize) -> Self {
        Projector {
            op: Operator::identity(d),
            rank: d,
        }
    }

    pub fn zero(d: usize) -> Self {
        Projector {
            op: Operator::zeros(d),
            rank: 0,
        }
    }

    /// Orthogonal projector onto the span of the given orthonormal columns.
    pub fn from_orthonormal_columns(basis: &DMatrix<Complex64>) -> Self {
        let op = Operator(basis * basis.adjoint());
        Projector {
            op,
            rank: basis.ncols(),
        }
    }

    /// `I − P`, built by subtraction so that `P + (I − P) = I` exactly.
    pub fn complement(&self) -> Self {
        let d = self.dim();
        Projector {
            op: &Operator::identity(d) - &self.op,
            rank: d - self.rank,
        }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Orthonormal basis of the range, one vector per column (`d × rank`).
    pub fn basis(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        if self.rank == 0 {
            return DMatrix::zeros(d, 0);
        }
        let dec = svd::svd(&self.op.0).expect("SVD of a finite Hermitian matrix");
        dec.u.columns(0, self.rank).into_owned()
    }
}

/// A linear map on operators, stored as a `d² × d²` matrix acting on `vec(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: DMatrix<Complex64>,
}

impl Superoperator {
    pub fn zeros(d: usize) -> Self {
        Superoperator {
            dim: d,
            matrix: DMatrix::zeros(d * d, d * d),
        }
    }

    pub fn identity(d: usize) -> Self {
        Superoperator {
            dim: d,
            matrix: DMatrix::identity(d * d, d * d),
        }
    }

    pub fn from_matrix(dim: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: matrix.nrows(),
            });
        }
        Ok(Superoperator { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Adds the term `X ↦ left·X·right` in place.
    pub fn add_term(&mut self, left: &Operator, right: &Operator) -> Result<()> {
        let term = assemble_superoperator(left, right)?;
        term.check_dim(self.dim)?;
        self.matrix += term.matrix;
        Ok(())
    }

    pub fn apply(&self, x: &Operator) -> Operator {
        assert_eq!(
            x.dim(),
            self.dim,
            "operator dimension does not match superoperator"
        );
        unvec_op(&(&self.matrix * vec_op(x)), self.dim)
    }

    pub fn scaled(&self, t: f64) -> Superoperator {
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix * Complex64::new(t, 0.0),
        }
    }

    /// `exp(t·self)` as a superoperator.
    pub fn exp(&self, t: f64) -> Superoperator {
        Superoperator {
            dim: self.dim,
            matrix: expm_matrix(&(&self.matrix * Complex64::new(t, 0.0))),
        }
    }

    pub fn compose(&self, inner: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, inner.dim);
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix * &inner.matrix,
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim == d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: d,
                found: self.dim,
            })
        }
    }
}

/// Column-stacked vectorization.
pub fn vec_op(x: &Operator) -> DVector<Complex64> {
    DVector::from_column_slice(x.0.as_slice())
}

/// Inverse of [`vec_op`].
pub fn unvec_op(v: &DVector<Complex64>, d: usize) -> Operator {
    assert_eq!(v.len(), d * d);
    Operator(DMatrix::from_column_slice(d, d, v.as_slice()))
}

/// Singular values in descending order.
pub fn singular_values(m: &Operator) -> Vec<f64> {
    svd::svd(&m.0)
        .map(|d| d.s)
        .unwrap_or_else(|_| vec![f64::NAN; m.dim()])
}

/// Orthogonal projector onto the numerical null space of `m`.
///
/// Right singular vectors with `σ ≤ rank_tol·σ_max` span the kernel. A zero
/// matrix yields the identity.
pub fn kernel_projector(m: &Operator, rank_tol: f64) -> Result<Projector> {
    let m = Operator::new(m.0.clone())?;
    if !(rank_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rank_tol must be positive, got {rank_tol}"
        )));
    }
    let d = m.dim();
    let dec = svd::svd(&m.0)?;
    let sigma_max = dec.s.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return Ok(Projector::identity(d));
    }
    let rank = dec.s.iter().filter(|&&s| s > rank_tol * sigma_max).count();
    if rank == d {
        return Ok(Projector::zero(d));
    }
    let basis = dec.v.columns(rank, d - rank).into_owned();
    Ok(Projector::from_orthonormal_columns(&basis))
}

/// Inverse of `m` on the range of `p1`, extended by zero.
///
/// Solves on the compressed block `Q†·m·Q` (Q an orthonormal basis of the
/// range of `p1`) by SVD, so the result satisfies `R = P1·R·P1` by
/// construction and `P1·m·R = P1`. Whether `m·R·P1 = P1` also holds depends
/// on `P0·m·P1 = 0`, which the structural checkers report.
pub fn restricted_inverse(m: &Operator, p1: &Projector, tol: f64) -> Result<Operator> {
    let m = Operator::new(m.0.clone())?;
    p1.op().check_dim(m.dim())?;
    let d = m.dim();
    if p1.rank() == 0 {
        return Ok(Operator::zeros(d));
    }
    let q = p1.basis();
    let block = q.adjoint() * &m.0 * &q;
    let sigma_max_m = singular_values(&m).first().copied().unwrap_or(0.0);
    let dec = svd::svd(&block)?;
    let sigma_min = dec.s.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = tol * sigma_max_m;
    if !(sigma_min > threshold) {
        return Err(Error::SingularRestriction {
            sigma: sigma_min,
            threshold,
        });
    }
    let inv_sigma = DMatrix::from_fn(dec.s.len(), dec.s.len(), |i, j| {
        if i == j {
            Complex64::new(1.0 / dec.s[i], 0.0)
        } else {
            C0
        }
    });
    let block_inv = &dec.v * inv_sigma * dec.u.adjoint();
    Ok(Operator(&q * block_inv * q.adjoint()))
}

/// The superoperator `X ↦ left·X·right`, i.e. `rightᵀ ⊗ left` on `vec(X)`.
pub fn assemble_superoperator(left: &Operator, right: &Operator) -> Result<Superoperator> {
    right.check_dim(left.dim())?;
    Ok(Superoperator {
        dim: left.dim(),
        matrix: right.0.transpose().kronecker(&left.0),
    })
}

/// Frobenius norm of `a − b`, the residual metric used by every checker.
pub fn op_distance(a: &Operator, b: &Operator) -> Result<f64> {
    b.check_dim(a.dim())?;
    Ok((&a.0 - &b.0).norm())
}

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
