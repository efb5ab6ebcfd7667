//! Reduced semigroups of the finite-`k` and limit dynamics, the distance
//! between them, and the corrector used to compare their generators.
//!
//! The skew generator pairs the limit coefficients (on the dagger side) with
//! the finite-`k` ones: `𝓛⁽ᵏ⁾(X) = K†X + X·K⁽ᵏ⁾ + Σ L_i†·X·L_i⁽ᵏ⁾`. Its
//! semigroup evaluated at `P0` gives the overlap of the two unitary
//! evolutions started from a ground vector, hence the distance
//! `√⟨v, (2I − T − T†)v⟩`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::eliminate::{displace_limit, displace_scaled, Amplitude, EliminationResult};
use crate::error::{Error, Result};
use crate::linalg::{expm_matrix, vec_op, Operator, Projector, Superoperator};
use crate::model::{instantiate, CoefficientSet, ScaledModel};

/// Largest negative value of the distance quadratic form that is treated as
/// roundoff and clamped to zero.
pub const CLAMP_LIMIT: f64 = 1e-6;

const GROUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPair {
    pub dim: usize,
    pub k: f64,
    /// Generator of the skew semigroup mixing limit and finite-`k` evolutions.
    pub skew: Superoperator,
    /// Generator of the limit semigroup, supported on the ground block.
    pub limit: Superoperator,
}

/// `X ↦ K_d†X + X·K_r + Σ L_d,i†·X·L_r,i`.
pub fn skew_generator(
    dagger_side: &CoefficientSet,
    right_side: &CoefficientSet,
) -> Result<Superoperator> {
    let d = dagger_side.dim();
    right_side.drift.check_dim(d)?;
    if dagger_side.channels() != right_side.channels() {
        return Err(Error::DimensionMismatch {
            expected: dagger_side.channels(),
            found: right_side.channels(),
        });
    }
    let ident = Operator::identity(d);
    let mut g = Superoperator::zeros(d);
    g.add_term(&dagger_side.drift.adjoint(), &ident)?;
    g.add_term(&ident, &right_side.drift)?;
    for (ld, lr) in dagger_side.coupling.iter().zip(&right_side.coupling) {
        g.add_term(&ld.adjoint(), lr)?;
    }
    Ok(g)
}

pub fn build_generators(m: &ScaledModel, e: &EliminationResult, k: f64) -> Result<GeneratorPair> {
    e.limit.drift.check_dim(m.dim())?;
    let inst = instantiate(m, k)?;
    Ok(GeneratorPair {
        dim: m.dim(),
        k,
        skew: skew_generator(&e.limit, &inst)?,
        limit: skew_generator(&e.limit, &e.limit)?,
    })
}

/// `exp(t·g)(X0)`.
pub fn evolve(g: &Superoperator, x0: &Operator, t: f64) -> Result<Operator> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "evolution time must be ≥ 0, got {t}"
        )));
    }
    x0.check_dim(g.dim())?;
    Ok(g.exp(t).apply(x0))
}

/// Piecewise-constant coherent amplitude: `amplitudes[j]` on
/// `[breakpoints[j], breakpoints[j+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDrive {
    breakpoints: Vec<f64>,
    amplitudes: Vec<Amplitude>,
}

impl StepDrive {
    pub fn new(breakpoints: Vec<f64>, amplitudes: Vec<Amplitude>) -> Result<Self> {
        if amplitudes.is_empty() || breakpoints.len() != amplitudes.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "a drive with {} segments needs {} breakpoints, got {}",
                amplitudes.len(),
                amplitudes.len() + 1,
                breakpoints.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidArgument(
                "the first breakpoint must be 0".into(),
            ));
        }
        if breakpoints.iter().any(|t| !t.is_finite())
            || breakpoints.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidArgument(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        let n = amplitudes[0].len();
        if let Some(a) = amplitudes.iter().find(|a| a.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.len(),
            });
        }
        Ok(StepDrive {
            breakpoints,
            amplitudes,
        })
    }

    /// A single segment `[0, horizon)` with amplitude `alpha`.
    pub fn constant(alpha: Amplitude, horizon: f64) -> Result<Self> {
        StepDrive::new(vec![0.0, horizon], vec![alpha])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().expect("at least two breakpoints")
    }

    /// `(segment index, duration)` pieces covering `[0, t]`, earliest first.
    fn pieces(&self, t: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (j, w) in self.breakpoints.windows(2).enumerate() {
            if t <= w[0] {
                break;
            }
            out.push((j, t.min(w[1]) - w[0]));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub value: f64,
    /// Magnitude of the negative part removed from the quadratic form.
    pub clamp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTrace {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub max_clamp: f64,
}

/// Normalized `P0·(1, …, 1)`, or the first basis vector of the ground space
/// when that projection vanishes.
pub fn default_ground_vector(ground: &Projector) -> Result<DVector<Complex64>> {
    if ground.rank() == 0 {
        return Err(Error::InvalidArgument("the ground space is empty".into()));
    }
    let ones = DVector::from_element(ground.dim(), Complex64::new(1.0, 0.0));
    let v = ground.op().apply(&ones);
    let norm = v.norm();
    if norm > 1e-6 {
        Ok(v / Complex64::new(norm, 0.0))
    } else {
        Ok(ground.basis().column(0).into_owned())
    }
}

fn check_ground_vector(ground: &Projector, v: &DVector<Complex64>) -> Result<()> {
    if v.len() != ground.dim() {
        return Err(Error::DimensionMismatch {
            expected: ground.dim(),
            found: v.len(),
        });
    }
    let norm = v.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > GROUND_TOL {
        return Err(Error::InvalidArgument(format!(
            "ground vector must have unit norm, got {norm}"
        )));
    }
    let excited = (v - ground.op().apply(v)).norm();
    if excited > GROUND_TOL {
        return Err(Error::InvalidGroundVector { residual: excited });
    }
    Ok(())
}

fn ground_of(e: &EliminationResult) -> &Projector {
    &e.decomposition.ground
}

/// `√max(0, 2 − 2·Re⟨v, T v⟩)` from the raw overlap, with the clamp recorded.
fn distance_from_overlap(overlap: Complex64) -> Result<Distance> {
    let q = 2.0 - 2.0 * overlap.re;
    let clamp = if q < 0.0 { -q } else { 0.0 };
    if clamp > CLAMP_LIMIT {
        return Err(Error::ClampExceeded { magnitude: clamp });
    }
    Ok(Distance {
        value: q.max(0.0).sqrt(),
        clamp,
    })
}

fn segment_generator(
    m: &ScaledModel,
    e: &EliminationResult,
    k: f64,
    alpha: &Amplitude,
) -> Result<Superoperator> {
    let right = instantiate(&displace_scaled(m, alpha)?, k)?;
    let dagger = displace_limit(&e.limit, alpha)?;
    skew_generator(&dagger, &right)
}

/// Propagates the row vector `vec(ρᵀ)ᵀ` (ρ = v·v†) forward through the
/// segment propagators, so each grid point costs one vector-matrix product
/// instead of a superoperator exponential.
struct TracePropagator {
    generators: Vec<Superoperator>,
    ends: Vec<f64>,
    cache: HashMap<(usize, u64), DMatrix<Complex64>>,
}

impl TracePropagator {
    /// Steps of a uniform grid differ in their last few bits; they share one
    /// propagator (relative step mismatch below 1e-13).
    fn propagator(&mut self, seg: usize, dt: f64) -> &DMatrix<Complex64> {
        let g = &self.generators[seg];
        self.cache
            .entry((seg, dt.to_bits() >> 8))
            .or_insert_with(|| expm_matrix(&(g.matrix() * Complex64::new(dt, 0.0))))
    }

    fn run(
        &mut self,
        ground: &Projector,
        v: &DVector<Complex64>,
        t_grid: &[f64],
    ) -> Result<DistanceTrace> {
        let d = ground.dim();
        let rho_t = v.conjugate() * v.transpose();
        let mut row: RowDVector<Complex64> = RowDVector::from_row_slice(rho_t.as_slice());
        let target = vec_op(ground.op());

        let mut distances = Vec::with_capacity(t_grid.len());
        let mut max_clamp: f64 = 0.0;
        let mut tau = 0.0;
        let mut seg = 0;
        for &t in t_grid {
            while tau < t {
                while seg + 1 < self.ends.len() && tau >= self.ends[seg] {
                    seg += 1;
                }
                let stop = t.min(self.ends[seg]);
                let dt = stop - tau;
                row = &row * self.propagator(seg, dt);
                tau = stop;
            }
            let overlap = (&row * &target)[(0, 0)];
            let dist = distance_from_overlap(overlap)?;
            max_clamp = max_clamp.max(dist.clamp);
            distances.push(dist.value);
        }
        debug_assert_eq!(row.len(), d * d);
        Ok(DistanceTrace {
            times: t_grid.to_vec(),
            distances,
            max_clamp,
        })
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidArgument(
            "time grid entries must be finite and ≥ 0".into(),
        ));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "time grid must be non-decreasing".into(),
        ));
    }
    Ok(())
}

/// Distance between the finite-`k` and limit evolutions of `v ⊗ vacuum` at
/// each time in `t_grid`.
pub fn vacuum_distance(
    m: &ScaledModel,
    e: &EliminationResult,
    k: f64,
    v: &DVector<Complex64>,
    t_grid: &[f64],
) -> Result<DistanceTrace> {
    check_grid(t_grid)?;
    check_ground_vector(ground_of(e), v)?;
    let pair = build_generators(m, e, k)?;
    TracePropagator {
        generators: vec![pair.skew],
        ends: vec![f64::INFINITY],
        cache: HashMap::new(),
    }
    .run(ground_of(e), v, t_grid)
}

/// As [`vacuum_distance`] under a step drive, at every time in `t_grid`.
pub fn coherent_trace(
    m: &ScaledModel,
    e: &EliminationResult,
    k: f64,
    v: &DVector<Complex64>,
    drive: &StepDrive,
    t_grid: &[f64],
) -> Result<DistanceTrace> {
    check_grid(t_grid)?;
    check_ground_vector(ground_of(e), v)?;
    if let Some(&t) = t_grid.last() {
        if t > drive.end() {
            return Err(Error::InvalidArgument(format!(
                "time {t} lies beyond the drive's last breakpoint {}",
                drive.end()
            )));
        }
    }
    let generators = drive
        .amplitudes()
        .iter()
        .map(|a| segment_generator(m, e, k, a))
        .collect::<Result<Vec<_>>>()?;
    TracePropagator {
        generators,
        ends: drive.breakpoints()[1..].to_vec(),
        cache: HashMap::new(),
    }
    .run(ground_of(e), v, t_grid)
}

/// Distance at time `t` under a step drive. Segment propagators are composed
/// with the earliest segment outermost:
/// `T = T^(α1)_{t1} ∘ T^(α2)_{t2−t1} ∘ … ∘ T^(αm)_{t−t(m−1)}`, then applied to `P0`.
pub fn coherent_distance(
    m: &ScaledModel,
    e: &EliminationResult,
    k: f64,
    v: &DVector<Complex64>,
    drive: &StepDrive,
    t: f64,
) -> Result<Distance> {
    if !(t >= 0.0) || t > drive.end() {
        return Err(Error::InvalidArgument(format!(
            "time {t} must lie in [0, {}]",
            drive.end()
        )));
    }
    let ground = ground_of(e);
    check_ground_vector(ground, v)?;
    let mut total = Superoperator::identity(m.dim());
    for (j, dt) in drive.pieces(t) {
        let g = segment_generator(m, e, k, &drive.amplitudes()[j])?;
        total = total.compose(&g.exp(dt));
    }
    let evolved = total.apply(ground.op());
    let overlap = v.dotc(&evolved.apply(v));
    distance_from_overlap(overlap)
}

/// Limit-side pieces of the finite-`k` generator, split by order in `k`.
struct GeneratorOrders<'a> {
    m: &'a ScaledModel,
    limit: &'a CoefficientSet,
}

impl GeneratorOrders<'_> {
    /// `K†X + X·B + Σ L_i†·X·G_i`
    fn order0(&self, x: &Operator) -> Operator {
        let mut out = &(&self.limit.drift.adjoint() * x) + &(x * &self.m.slow_drift);
        for (l, g) in self.limit.coupling.iter().zip(&self.m.slow_coupling) {
            out += &(&l.adjoint() * x) * g;
        }
        out
    }

    /// `X·A + Σ L_i†·X·F_i`
    fn order1(&self, x: &Operator) -> Operator {
        let mut out = x * &self.m.cross_drift;
        for (l, f) in self.limit.coupling.iter().zip(&self.m.fast_coupling) {
            out += &(&l.adjoint() * x) * f;
        }
        out
    }

    fn order2(&self, x: &Operator) -> Operator {
        x * &self.m.fast_drift
    }

    fn full(&self, x: &Operator, k: f64) -> Operator {
        &(&self.order0(x) + &(&self.order1(x) * k)) + &(&self.order2(x) * (k * k))
    }

    /// `K†X + X·K + Σ L_i†·X·L_i`
    fn limit(&self, x: &Operator) -> Operator {
        let mut out = &(&self.limit.drift.adjoint() * x) + &(x * &self.limit.drift);
        for l in &self.limit.coupling {
            out += &(&l.adjoint() * x) * l;
        }
        out
    }
}

fn check_ground_operator(ground: &Projector, x: &Operator) -> Result<()> {
    x.check_dim(ground.dim())?;
    let p0 = ground.op();
    let off = (x - &(&(p0 * x) * p0)).frobenius_norm();
    if off > GROUND_TOL * x.frobenius_norm().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "operator is not supported on the ground space (off-block norm {off:.3e})"
        )));
    }
    Ok(())
}

/// The order-`k` part `𝓛1(X) = X·A + Σ L_i†·X·F_i` of the finite-`k` generator.
pub fn first_order_term(e: &EliminationResult, m: &ScaledModel, x: &Operator) -> Result<Operator> {
    check_ground_operator(ground_of(e), x)?;
    Ok(GeneratorOrders { m, limit: &e.limit }.order1(x))
}

/// First and second order correctors
/// `X1 = −𝓛1(X)·Y1inv·P1`, `X2 = −(𝓛0(X) + 𝓛1(X1))·Y1inv·P1`.
pub fn kurtz_corrector(
    e: &EliminationResult,
    m: &ScaledModel,
    x: &Operator,
) -> Result<(Operator, Operator)> {
    check_ground_operator(ground_of(e), x)?;
    let orders = GeneratorOrders { m, limit: &e.limit };
    let r_p1 = &e.decomposition.excited_inverse * e.decomposition.excited.op();
    let x1 = -(&orders.order1(x) * &r_p1);
    let x2 = -(&(&orders.order0(x) + &orders.order1(&x1)) * &r_p1);
    Ok((x1, x2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KurtzResidual {
    pub k: f64,
    /// `‖𝓛⁽ᵏ⁾(X + X1/k + X2/k²) − 𝓛(X)‖_F`
    pub corrected: f64,
    /// `‖𝓛⁽ᵏ⁾(X) − 𝓛(X)‖_F`
    pub uncorrected: f64,
}

pub fn generator_convergence_check(
    m: &ScaledModel,
    e: &EliminationResult,
    x: &Operator,
    ks: &[f64],
) -> Result<Vec<KurtzResidual>> {
    if let Some(k) = ks.iter().find(|k| !(**k > 0.0) || !k.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "coupling strengths must be > 0, got {k}"
        )));
    }
    let (x1, x2) = kurtz_corrector(e, m, x)?;
    let orders = GeneratorOrders { m, limit: &e.limit };
    let target = orders.limit(x);
    Ok(ks
        .iter()
        .map(|&k| {
            let xk = &(x + &(&x1 * (1.0 / k))) + &(&x2 * (1.0 / (k * k)));
            KurtzResidual {
                k,
                corrected: (&orders.full(&xk, k) - &target).frobenius_norm(),
                uncorrected: (&orders.full(x, k) - &target).frobenius_norm(),
            }
        })
        .collect())
}

/// Least-squares slope of `log y` against `log x`; `None` when fewer than two
/// points are given or any value is not strictly positive.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub ks: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// `distances[i][j]` is the distance at `ks[i]`, `t_grid[j]`.
    pub distances: Vec<Vec<f64>>,
    pub sup_distance: Vec<f64>,
    pub max_clamp: f64,
}

/// `steps` uniformly spaced points on `[0, horizon]`.
pub fn uniform_grid(horizon: f64, steps: usize) -> Vec<f64> {
    let last = (steps - 1) as f64;
    (0..steps).map(|i| horizon * i as f64 / last).collect()
}

/// Distance traces for each `k` on a uniform grid, in vacuum or under a
/// step drive. The `k` values are evaluated in parallel; the report is
/// ordered as `ks`.
pub fn k_sweep(
    m: &ScaledModel,
    e: &EliminationResult,
    v: &DVector<Complex64>,
    ks: &[f64],
    horizon: f64,
    steps: usize,
    drive: Option<&StepDrive>,
) -> Result<ConvergenceReport> {
    if ks.is_empty() || ks.windows(2).any(|w| w[1] <= w[0]) || ks[0] < 0.0 {
        return Err(Error::InvalidArgument(
            "ks must be non-empty, non-negative and increasing".into(),
        ));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "horizon must be > 0, got {horizon}"
        )));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument(
            "at least two time steps are required".into(),
        ));
    }
    let t_grid = uniform_grid(horizon, steps);
    let traces = ks
        .par_iter()
        .map(|&k| match drive {
            None => vacuum_distance(m, e, k, v, &t_grid),
            Some(d) => coherent_trace(m, e, k, v, d, &t_grid),
        })
        .collect::<Result<Vec<_>>>()?;
    let max_clamp = traces.iter().map(|t| t.max_clamp).fold(0.0, f64::max);
    let distances: Vec<Vec<f64>> = traces.into_iter().map(|t| t.distances).collect();
    let sup_distance = distances
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .collect();
    Ok(ConvergenceReport {
        ks: ks.to_vec(),
        t_grid,
        distances,
        sup_distance,
        max_clamp,
    })
}
