//! Scaled coefficient families, instantiated coefficient sets, and the
//! algebraic unitarity checks on them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{kernel_projector, Operator, Projector};
use crate::DEFAULT_RANK_TOL;

/// The `k`-independent pieces of a scaled coefficient family:
/// `K(k) = k²·fast_drift + k·cross_drift + slow_drift`,
/// `L_i(k) = k·fast_coupling[i] + slow_coupling[i]`,
/// `S_ij(k) = scattering[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledModel {
    pub fast_drift: Operator,
    pub cross_drift: Operator,
    pub slow_drift: Operator,
    pub fast_coupling: Vec<Operator>,
    pub slow_coupling: Vec<Operator>,
    pub scattering: Vec<Vec<Operator>>,
}

impl ScaledModel {
    /// Checks shapes and finiteness. Unitarity of the scattering grid and
    /// the dissipativity split are reported by the checkers, not enforced here.
    pub fn new(
        fast_drift: Operator,
        cross_drift: Operator,
        slow_drift: Operator,
        fast_coupling: Vec<Operator>,
        slow_coupling: Vec<Operator>,
        scattering: Vec<Vec<Operator>>,
    ) -> Result<Self> {
        let m = ScaledModel {
            fast_drift,
            cross_drift,
            slow_drift,
            fast_coupling,
            slow_coupling,
            scattering,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let n = self.channels();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "a model needs at least one channel".into(),
            ));
        }
        if self.slow_coupling.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.slow_coupling.len(),
            });
        }
        if self.scattering.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.scattering.len(),
            });
        }
        for row in &self.scattering {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
        }
        for op in self.operators() {
            op.check_dim(d)?;
            if !op.is_finite() {
                return Err(Error::InvalidOperator(
                    "model operator has non-finite entries".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.fast_drift.dim()
    }

    pub fn channels(&self) -> usize {
        self.fast_coupling.len()
    }

    pub fn operators(&self) -> impl Iterator<Item = &Operator> {
        [&self.fast_drift, &self.cross_drift, &self.slow_drift]
            .into_iter()
            .chain(self.fast_coupling.iter())
            .chain(self.slow_coupling.iter())
            .chain(self.scattering.iter().flatten())
    }
}

/// A coefficient triple `(K, L_i, S_ij)`. Limit models carry their ground
/// projector, and their unitarity relations close on it instead of `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub drift: Operator,
    pub coupling: Vec<Operator>,
    pub scattering: Vec<Vec<Operator>>,
    pub ground: Option<Projector>,
}

impl CoefficientSet {
    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn channels(&self) -> usize {
        self.coupling.len()
    }

    /// The operator the δ_ij terms close on: `P₀` for limit models, `I` otherwise.
    pub fn closure(&self) -> Operator {
        match &self.ground {
            Some(p) => p.op().clone(),
            None => Operator::identity(self.dim()),
        }
    }

    pub fn operators(&self) -> impl Iterator<Item = &Operator> {
        std::iter::once(&self.drift)
            .chain(self.coupling.iter())
            .chain(self.scattering.iter().flatten())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub name: String,
    pub value: f64,
}

/// Named residuals against one tolerance. `passed` holds iff every residual
/// is within `tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub passed: bool,
    pub residuals: Vec<Residual>,
    pub tolerance: f64,
    pub warnings: Vec<String>,
}

impl CheckReport {
    pub fn new(residuals: Vec<(String, f64)>, tolerance: f64) -> Self {
        let residuals: Vec<Residual> = residuals
            .into_iter()
            .map(|(name, value)| Residual { name, value })
            .collect();
        let passed = residuals.iter().all(|r| r.value <= tolerance);
        CheckReport {
            passed,
            residuals,
            tolerance,
            warnings: Vec::new(),
        }
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.value)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| r.value > self.tolerance)
    }
}

/// `tol · max(1, largest Frobenius norm among ops)`.
pub(crate) fn scaled_tolerance<'a>(tol: f64, ops: impl IntoIterator<Item = &'a Operator>) -> f64 {
    let scale = ops
        .into_iter()
        .map(Operator::frobenius_norm)
        .fold(1.0, f64::max);
    tol * scale
}

/// Root-sum-square of a list of residual norms; used to fold an indexed
/// family of identities into one reported residual.
pub(crate) fn rss(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sum_ops(d: usize, ops: impl IntoIterator<Item = Operator>) -> Operator {
    let mut acc = Operator::zeros(d);
    for op in ops {
        acc += op;
    }
    acc
}

/// `K(k) = k²Y + kA + B`, `L_i(k) = kF_i + G_i`, `S_ij(k) = W_ij`.
pub fn instantiate(m: &ScaledModel, k: f64) -> Result<CoefficientSet> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "coupling strength must be ≥ 0, got {k}"
        )));
    }
    let drift = &(&m.fast_drift * (k * k)) + &(&(&m.cross_drift * k) + &m.slow_drift);
    let coupling = m
        .fast_coupling
        .iter()
        .zip(&m.slow_coupling)
        .map(|(f, g)| &(f * k) + g)
        .collect();
    Ok(CoefficientSet {
        drift,
        coupling,
        scattering: m.scattering.clone(),
        ground: None,
    })
}

fn unitarity_residuals(c: &CoefficientSet, closure: &Operator) -> [f64; 3] {
    let d = c.dim();
    let n = c.channels();
    let k = &c.drift;
    let dissipation = sum_ops(d, c.coupling.iter().map(|l| &l.adjoint() * l));
    let drift_res = (&(k + &k.adjoint()) + &dissipation).frobenius_norm();

    let s = &c.scattering;
    let mut rows = Vec::with_capacity(n * n);
    let mut cols = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut ss_dag = sum_ops(d, (0..n).map(|l| &s[i][l] * &s[j][l].adjoint()));
            let mut sdag_s = sum_ops(d, (0..n).map(|l| &s[l][i].adjoint() * &s[l][j]));
            if i == j {
                ss_dag -= closure;
                sdag_s -= closure;
            }
            rows.push(ss_dag.frobenius_norm());
            cols.push(sdag_s.frobenius_norm());
        }
    }
    [drift_res, rss(rows), rss(cols)]
}

pub const HP_DRIFT: &str = "K+K† = −Σ L_i†L_i";
pub const HP_ROWS: &str = "Σ_l S_il S_jl† = δ_ij I";
pub const HP_COLS: &str = "Σ_l S_li† S_lj = δ_ij I";
pub const LIMIT_DRIFT: &str = "K+K† = −Σ L_i†L_i (limit)";
pub const LIMIT_ROWS: &str = "Σ_l S_il S_jl† = δ_ij P0";
pub const LIMIT_COLS: &str = "Σ_l S_li† S_lj = δ_ij P0";

/// The three unitarity conditions on a coefficient triple, closing on `I`.
pub fn check_hp_unitarity(c: &CoefficientSet, tol: f64) -> CheckReport {
    let [a, b, cc] = unitarity_residuals(c, &Operator::identity(c.dim()));
    CheckReport::new(
        vec![
            (HP_DRIFT.into(), a),
            (HP_ROWS.into(), b),
            (HP_COLS.into(), cc),
        ],
        scaled_tolerance(tol, c.operators()),
    )
}

/// The unitarity relations of a limit model, closing on its ground projector.
pub fn check_limit_unitarity(c: &CoefficientSet, tol: f64) -> Result<CheckReport> {
    let ground = c.ground.as_ref().ok_or_else(|| {
        Error::InvalidProjector("limit coefficients carry no ground projector".into())
    })?;
    Projector::new(ground.op().clone(), 1e-8)?;
    ground.op().check_dim(c.dim())?;
    let [a, b, cc] = unitarity_residuals(c, ground.op());
    Ok(CheckReport::new(
        vec![
            (LIMIT_DRIFT.into(), a),
            (LIMIT_ROWS.into(), b),
            (LIMIT_COLS.into(), cc),
        ],
        scaled_tolerance(tol, c.operators()),
    ))
}

pub const SPLIT_FAST: &str = "Y+Y† = −Σ F_i†F_i";
pub const SPLIT_CROSS: &str = "A+A† = −Σ (F_i†G_i + G_i†F_i)";
pub const SPLIT_SLOW: &str = "B+B† = −Σ G_i†G_i";

/// Order-by-order dissipativity identities of a scaled family.
///
/// These full-space identities are what the unitarity conditions reduce to
/// when required for every `k`. When one fails but its projected form (the
/// `P1·…·P0` block of the cross identity and the `P0·…·P0` block of the slow
/// one) holds, the report lists the projected residuals instead and carries a
/// warning naming the full-space failures.
pub fn check_scaling_consistency(m: &ScaledModel, tol: f64) -> CheckReport {
    let d = m.dim();
    let (y, a, b) = (&m.fast_drift, &m.cross_drift, &m.slow_drift);
    let ff = sum_ops(d, m.fast_coupling.iter().map(|f| &f.adjoint() * f));
    let fg = sum_ops(
        d,
        m.fast_coupling
            .iter()
            .zip(&m.slow_coupling)
            .map(|(f, g)| &(&f.adjoint() * g) + &(&g.adjoint() * f)),
    );
    let gg = sum_ops(d, m.slow_coupling.iter().map(|g| &g.adjoint() * g));

    let fast = &(y + &y.adjoint()) + &ff;
    let cross = &(a + &a.adjoint()) + &fg;
    let slow = &(b + &b.adjoint()) + &gg;
    let tolerance = scaled_tolerance(tol, m.operators());
    let full = CheckReport::new(
        vec![
            (SPLIT_FAST.into(), fast.frobenius_norm()),
            (SPLIT_CROSS.into(), cross.frobenius_norm()),
            (SPLIT_SLOW.into(), slow.frobenius_norm()),
        ],
        tolerance,
    );
    if full.passed {
        return full;
    }

    let Ok(p0) = kernel_projector(y, DEFAULT_RANK_TOL) else {
        return full;
    };
    let p0 = p0.op();
    let p1 = &Operator::identity(d) - p0;
    let projected = CheckReport::new(
        vec![
            (SPLIT_FAST.into(), fast.frobenius_norm()),
            (
                "P1(A+A†)P0 = −P1 Σ F_i†G_i P0".into(),
                (&(&p1 * &cross) * p0).frobenius_norm(),
            ),
            (
                "P0(B+B†)P0 = −P0 Σ G_i†G_i P0".into(),
                (&(p0 * &slow) * p0).frobenius_norm(),
            ),
        ],
        tolerance,
    );
    if !projected.passed {
        return full;
    }
    let mut report = projected;
    report.warnings.push(format!(
        "only the projected dissipativity identities hold; full-space failures: {}",
        full.failures()
            .map(|r| format!("{} ({:.3e})", r.name, r.value))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    report
}

pub(crate) fn delta(i: usize, j: usize) -> Complex64 {
    if i == j {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    }
}
