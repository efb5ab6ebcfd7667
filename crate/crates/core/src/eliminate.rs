//! Ground/excited decomposition, the structural checks that license the
//! elimination, the limit coefficients, and coherent displacement.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{kernel_projector, restricted_inverse, singular_values, Operator, Projector};
use crate::model::{
    check_limit_unitarity, delta, rss, scaled_tolerance, CheckReport, CoefficientSet, ScaledModel,
};

/// A constant coherent amplitude, one entry per field channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplitude(Vec<Complex64>);

impl Amplitude {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidArgument(
                "amplitude has non-finite entries".into(),
            ));
        }
        Ok(Amplitude(values))
    }

    pub fn zeros(n: usize) -> Self {
        Amplitude(vec![Complex64::new(0.0, 0.0); n])
    }

    /// Amplitude `a` on `channel` and zero elsewhere.
    pub fn single(n: usize, channel: usize, a: Complex64) -> Result<Self> {
        if channel >= n {
            return Err(Error::InvalidArgument(format!(
                "channel {channel} out of range for {n} channels"
            )));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[channel] = a;
        Amplitude::new(v)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.len() == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: n,
                found: self.len(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub ground: Projector,
    pub excited: Projector,
    pub excited_inverse: Operator,
    /// Singular values of the fast drift, descending.
    pub singular_values: Vec<f64>,
    pub rank_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationResult {
    pub decomposition: Decomposition,
    pub limit: CoefficientSet,
    pub assumption3: CheckReport,
    pub assumption4: CheckReport,
    pub lemma: CheckReport,
    pub warnings: Vec<String>,
}

impl EliminationResult {
    pub fn passed(&self) -> bool {
        self.assumption3.passed && self.assumption4.passed && self.lemma.passed
    }
}

/// `P0` = numerical kernel of the fast drift, `P1 = I − P0`, and the inverse
/// of the fast drift on the range of `P1`.
pub fn decompose(m: &ScaledModel, rank_tol: f64) -> Result<Decomposition> {
    m.validate()?;
    let ground = kernel_projector(&m.fast_drift, rank_tol)?;
    let excited = ground.complement();
    let excited_inverse = restricted_inverse(&m.fast_drift, &excited, rank_tol)?;
    Ok(Decomposition {
        ground,
        excited,
        excited_inverse,
        singular_values: singular_values(&m.fast_drift),
        rank_tol,
    })
}

/// As [`decompose`], with a caller-supplied excited-space inverse in place of
/// the computed one. The override is not trusted: [`check_assumption3`]
/// reports whether it satisfies the required identities.
pub fn decompose_with_inverse(
    m: &ScaledModel,
    rank_tol: f64,
    excited_inverse: Operator,
) -> Result<Decomposition> {
    m.validate()?;
    excited_inverse.check_dim(m.dim())?;
    if !excited_inverse.is_finite() {
        return Err(Error::InvalidOperator(
            "excited-space inverse has non-finite entries".into(),
        ));
    }
    let ground = kernel_projector(&m.fast_drift, rank_tol)?;
    let excited = ground.complement();
    Ok(Decomposition {
        ground,
        excited,
        excited_inverse,
        singular_values: singular_values(&m.fast_drift),
        rank_tol,
    })
}

/// `M_il = δ_il + F_i·Y1inv·F_l†`, the channel matrix that maps the scattering
/// grid onto the limit one.
fn channel_mixing(m: &ScaledModel, y1inv: &Operator) -> Vec<Vec<Operator>> {
    let d = m.dim();
    let n = m.channels();
    let f = &m.fast_coupling;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|l| {
                    let mut op = &(&f[i] * y1inv) * &f[l].adjoint();
                    if i == l {
                        op += Operator::identity(d);
                    }
                    op
                })
                .collect()
        })
        .collect()
}

fn grid_product(a: &[Vec<Operator>], b: &[Vec<Operator>], d: usize) -> Vec<Vec<Operator>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = Operator::zeros(d);
                    for l in 0..n {
                        acc += &a[i][l] * &b[l][j];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub const A3_INVERSE_SUPPORT: &str = "Y1inv = P1·Y1inv·P1";
pub const A3_LEFT_A: &str = "Y·Y1inv·P1·A·P0 = P1·A·P0";
pub const A3_LEFT_FW: &str = "Y·Y1inv·P1·(Σ_i F_i†W_ij)·P0 = P1·(Σ_i F_i†W_ij)·P0";
pub const A3_ZERO_YP: &str = "P0·Y·P1 = 0";
pub const A3_ZERO_A: &str = "P0·A·P0 = 0";
pub const A3_ZERO_F: &str = "F_i·P0 = 0";
pub const A3_ZERO_S: &str = "P0·(δ_il + F_i·Y1inv·F_l†)·W_lj·P1 = 0";

pub fn right_family_name(form: &str) -> String {
    format!("P0·X·P1·Y1inv·Y = P0·X·P1 for X = {form}")
}

/// Residuals of every identity required of the decomposition. Indexed
/// families are folded into one root-sum-square residual per identity.
pub fn check_assumption3(m: &ScaledModel, dec: &Decomposition, tol: f64) -> CheckReport {
    let d = m.dim();
    let n = m.channels();
    let p0 = dec.ground.op();
    let p1 = dec.excited.op();
    let r = &dec.excited_inverse;
    let y = &m.fast_drift;
    let a = &m.cross_drift;
    let b = &m.slow_drift;
    let f = &m.fast_coupling;
    let g = &m.slow_coupling;
    let w = &m.scattering;

    let mut residuals: Vec<(String, f64)> = Vec::new();

    residuals.push((
        A3_INVERSE_SUPPORT.into(),
        (&(&(p1 * r) * p1) - r).frobenius_norm(),
    ));

    // left family
    let y_r_p1 = &(y * r) * p1;
    let left = |z: &Operator| {
        let p1zp0 = &(p1 * z) * p0;
        (&(&y_r_p1 * z) * p0 - &p1zp0).frobenius_norm()
    };
    residuals.push((A3_LEFT_A.into(), left(a)));
    let fw: Vec<Operator> = (0..n)
        .map(|j| {
            let mut acc = Operator::zeros(d);
            for i in 0..n {
                acc += &f[i].adjoint() * &w[i][j];
            }
            acc
        })
        .collect();
    residuals.push((A3_LEFT_FW.into(), rss(fw.iter().map(&left))));

    // right family
    let p1_r_y = &(p1 * r) * y;
    let right = |x: &Operator| {
        let p0xp1 = &(p0 * x) * p1;
        (&p0xp1 * &p1_r_y - &p0xp1).frobenius_norm()
    };
    let mixing = channel_mixing(m, r);
    let mut push_family = |form: &str, xs: Vec<Operator>| {
        residuals.push((right_family_name(form), rss(xs.iter().map(&right))));
    };
    push_family("A", vec![a.clone()]);
    push_family("B", vec![b.clone()]);
    push_family("F_i", f.clone());
    push_family("G_i", g.clone());
    push_family("W_ij", w.iter().flatten().cloned().collect());
    push_family(
        "G_i†W_ij",
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| &g[i].adjoint() * &w[i][j])
            .collect(),
    );
    push_family(
        "F_i·Y1inv·F_j",
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| &(&f[i] * r) * &f[j])
            .collect(),
    );
    push_family("F_i·Y1inv·A", f.iter().map(|fi| &(fi * r) * a).collect());
    push_family(
        "F_i·Y1inv·F_l†W_lj",
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let mut acc = Operator::zeros(d);
                for l in 0..n {
                    acc += &(&(&f[i] * r) * &f[l].adjoint()) * &w[l][j];
                }
                acc
            })
            .collect(),
    );
    push_family("A·Y1inv·A", vec![&(a * r) * a]);
    push_family("A·Y1inv·F_i", f.iter().map(|fi| &(a * r) * fi).collect());
    push_family(
        "A·Y1inv·F_l†W_lj",
        fw.iter().map(|fwj| &(a * r) * fwj).collect(),
    );

    // zero products
    residuals.push((A3_ZERO_YP.into(), (&(p0 * y) * p1).frobenius_norm()));
    residuals.push((A3_ZERO_A.into(), (&(p0 * a) * p0).frobenius_norm()));
    residuals.push((
        A3_ZERO_F.into(),
        rss(f.iter().map(|fi| (fi * p0).frobenius_norm())),
    ));
    let mw = grid_product(&mixing, w, d);
    residuals.push((
        A3_ZERO_S.into(),
        rss(mw
            .iter()
            .flatten()
            .map(|op| (&(p0 * op) * p1).frobenius_norm())),
    ));

    let tolerance = scaled_tolerance(tol, m.operators().chain(std::iter::once(r)));
    CheckReport::new(residuals, tolerance)
}

pub const A4_COUPLING: &str = "P1·L_i = 0";
pub const A4_SCATTERING: &str = "P1·S_ij = 0";

/// Limit couplings and scattering must map into the ground space.
pub fn check_assumption4(limit: &CoefficientSet, dec: &Decomposition, tol: f64) -> CheckReport {
    let p1 = dec.excited.op();
    CheckReport::new(
        vec![
            (
                A4_COUPLING.into(),
                rss(limit.coupling.iter().map(|l| (p1 * l).frobenius_norm())),
            ),
            (
                A4_SCATTERING.into(),
                rss(limit
                    .scattering
                    .iter()
                    .flatten()
                    .map(|s| (p1 * s).frobenius_norm())),
            ),
        ],
        scaled_tolerance(tol, limit.operators()),
    )
}

/// Decomposes with the computed inverse, then runs [`eliminate_with`].
pub fn eliminate(m: &ScaledModel, rank_tol: f64, tol: f64) -> Result<EliminationResult> {
    let dec = decompose(m, rank_tol)?;
    eliminate_with(m, dec, tol)
}

/// Limit coefficients
/// `K = P0(B − A·Y1inv·A)P0`, `L_i = (G_i − F_i·Y1inv·A)P0`,
/// `S_ij = (δ_il + F_i·Y1inv·F_l†)W_lj·P0`,
/// with every structural report attached. Failing reports do not suppress
/// the coefficients.
pub fn eliminate_with(m: &ScaledModel, dec: Decomposition, tol: f64) -> Result<EliminationResult> {
    m.validate()?;
    dec.ground.op().check_dim(m.dim())?;
    dec.excited_inverse.check_dim(m.dim())?;
    let d = m.dim();
    let p0 = dec.ground.op();
    let r = &dec.excited_inverse;
    let a = &m.cross_drift;
    let r_a = r * a;

    let drift = &(p0 * &(&m.slow_drift - &(a * &r_a))) * p0;
    let coupling: Vec<Operator> = m
        .fast_coupling
        .iter()
        .zip(&m.slow_coupling)
        .map(|(f, g)| &(g - &(f * &r_a)) * p0)
        .collect();
    let scattering: Vec<Vec<Operator>> = grid_product(&channel_mixing(m, r), &m.scattering, d)
        .into_iter()
        .map(|row| row.into_iter().map(|s| &s * p0).collect())
        .collect();
    let limit = CoefficientSet {
        drift,
        coupling,
        scattering,
        ground: Some(dec.ground.clone()),
    };

    let assumption3 = check_assumption3(m, &dec, tol);
    let assumption4 = check_assumption4(&limit, &dec, tol);
    let lemma = check_limit_unitarity(&limit, tol)?;

    let mut warnings = Vec::new();
    if dec.ground.rank() == 0 {
        warnings.push(
            "fast drift has trivial kernel: the ground space is empty and the limit model is zero"
                .into(),
        );
    }
    if let Some(&sigma_max) = dec.singular_values.first() {
        let lo = dec.rank_tol * sigma_max;
        let near: Vec<String> = dec
            .singular_values
            .iter()
            .filter(|&&s| s > lo && s <= 10.0 * lo)
            .map(|s| format!("{s:.3e}"))
            .collect();
        if !near.is_empty() {
            warnings.push(format!(
                "fast drift is ill-conditioned near the rank threshold: singular values [{}] lie within 10× of {lo:.3e}",
                near.join(", ")
            ));
        }
    }

    Ok(EliminationResult {
        decomposition: dec,
        limit,
        assumption3,
        assumption4,
        lemma,
        warnings,
    })
}

/// Scaled model driven by the constant coherent amplitude `α`:
/// `A → A + ᾱ_i·F_i − α_j·F_i†W_ij`,
/// `B → B + ᾱ_i(W_ij − δ_ij)α_j + ᾱ_i·G_i − α_j·G_i†W_ij`,
/// `G_i → G_i + (W_ij − δ_ij)α_j`; `Y`, `F`, `W` unchanged.
pub fn displace_scaled(m: &ScaledModel, alpha: &Amplitude) -> Result<ScaledModel> {
    m.validate()?;
    let n = m.channels();
    alpha.check_len(n)?;
    let d = m.dim();
    let al = alpha.values();
    let ident = Operator::identity(d);

    let mut a = m.cross_drift.clone();
    let mut b = m.slow_drift.clone();
    let mut g = m.slow_coupling.clone();
    for i in 0..n {
        a += &m.fast_coupling[i] * al[i].conj();
        b += &m.slow_coupling[i] * al[i].conj();
        for j in 0..n {
            let shifted = &m.scattering[i][j] - &(&ident * delta(i, j));
            b += &shifted * (al[i].conj() * al[j]);
            a -= &(&m.fast_coupling[i].adjoint() * &m.scattering[i][j]) * al[j];
            b -= &(&m.slow_coupling[i].adjoint() * &m.scattering[i][j]) * al[j];
            g[i] += &shifted * al[j];
        }
    }
    Ok(ScaledModel {
        fast_drift: m.fast_drift.clone(),
        cross_drift: a,
        slow_drift: b,
        fast_coupling: m.fast_coupling.clone(),
        slow_coupling: g,
        scattering: m.scattering.clone(),
    })
}

/// Coefficient triple driven by `α`:
/// `K → K + ᾱ_i(S_ij − δ_ij·C)α_j + ᾱ_i·L_i − α_j·L_i†S_ij`,
/// `L_i → L_i + (S_ij − δ_ij·C)α_j`, `S` unchanged, where `C` is the ground
/// projector for limit models and `I` otherwise.
pub fn displace_limit(c: &CoefficientSet, alpha: &Amplitude) -> Result<CoefficientSet> {
    let n = c.channels();
    alpha.check_len(n)?;
    let al = alpha.values();
    let closure = c.closure();

    let mut k = c.drift.clone();
    let mut l = c.coupling.clone();
    for i in 0..n {
        k += &c.coupling[i] * al[i].conj();
        for j in 0..n {
            let shifted = &c.scattering[i][j] - &(&closure * delta(i, j));
            k += &shifted * (al[i].conj() * al[j]);
            k -= &(&c.coupling[i].adjoint() * &c.scattering[i][j]) * al[j];
            l[i] += &shifted * al[j];
        }
    }
    Ok(CoefficientSet {
        drift: k,
        coupling: l,
        scattering: c.scattering.clone(),
        ground: c.ground.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{cavity_system, pauli_ops, two_level_atom, two_level_limit, CavityParams};
    use crate::linalg::{c, op_distance};
    use crate::model::{check_hp_unitarity, instantiate};

    fn close(a: &Operator, b: &Operator, tol: f64) {
        let e = op_distance(a, b).unwrap();
        assert!(e < tol, "distance {e:e}\n{a:?}\n{b:?}");
    }

    #[test]
    fn two_level_decomposition() {
        let m = two_level_atom(1.0, 1.0, c(0.5, 0.0)).unwrap();
        let dec = decompose(&m, 1e-9).unwrap();
        let p = pauli_ops();
        close(dec.ground.op(), &p.pg, 1e-12);
        let expected = &p.pe * -(c(0.0, 1.0) + c(0.5, 0.0)).inv();
        close(&dec.excited_inverse, &expected, 1e-12);
        assert_eq!(
            &(dec.ground.op() + dec.excited.op()),
            &Operator::identity(2)
        );
    }

    #[test]
    fn zero_fast_drift_is_no_elimination() {
        let p = pauli_ops();
        let m = ScaledModel::new(
            Operator::zeros(2),
            Operator::zeros(2),
            &(&p.z * c(0.0, -0.3)) - &(&p.pe * 0.08),
            vec![Operator::zeros(2)],
            vec![&p.minus * 0.4],
            vec![vec![Operator::identity(2)]],
        )
        .unwrap();
        let e = eliminate(&m, 1e-9, 1e-9).unwrap();
        assert_eq!(e.decomposition.ground.rank(), 2);
        assert!(e.decomposition.excited_inverse.is_zero());
        close(&e.limit.drift, &m.slow_drift, 1e-15);
        close(&e.limit.coupling[0], &m.slow_coupling[0], 1e-15);
        close(&e.limit.scattering[0][0], &m.scattering[0][0], 1e-15);
        assert!(e.passed());
    }

    #[test]
    fn two_level_limit_matches_closed_form() {
        let m = two_level_atom(1.0, 1.0, c(0.5, 0.0)).unwrap();
        let e = eliminate(&m, 1e-9, 1e-9).unwrap();
        assert!(e.passed(), "{e:?}");
        assert!(e.warnings.is_empty());
        let expected = two_level_limit(1.0, 1.0, c(0.5, 0.0));
        close(&e.limit.drift, &expected.drift, 1e-12);
        close(&e.limit.coupling[0], &expected.coupling[0], 1e-12);
        close(&e.limit.scattering[0][0], &expected.scattering[0][0], 1e-12);
        assert!((e.limit.drift.get(1, 1) - c(-0.1, 0.2)).norm() < 1e-12);
        assert!((e.limit.scattering[0][0].get(1, 1) - c(0.6, 0.8)).norm() < 1e-12);
    }

    #[test]
    fn ground_drift_violation_is_reported() {
        let mut m = two_level_atom(1.0, 1.0, c(0.5, 0.0)).unwrap();
        m.cross_drift += &pauli_ops().pg * 0.1;
        let dec = decompose(&m, 1e-9).unwrap();
        let r = check_assumption3(&m, &dec, 1e-9);
        assert!(!r.passed);
        assert!((r.residual(A3_ZERO_A).unwrap() - 0.1).abs() < 1e-12);
        // coefficients are still produced
        let e = eliminate(&m, 1e-9, 1e-9).unwrap();
        assert!(!e.assumption3.passed);
        assert!(e.limit.drift.is_finite());
    }

    #[test]
    fn coupling_into_ground_is_reported() {
        let mut m = two_level_atom(1.0, 1.0, c(0.5, 0.0)).unwrap();
        m.fast_coupling[0] += &pauli_ops().pg * 0.2;
        let dec = decompose(&m, 1e-9).unwrap();
        let r = check_assumption3(&m, &dec, 1e-9);
        assert!((r.residual(A3_ZERO_F).unwrap() - 0.2).abs() < 1e-12);
        assert!(!r.passed);
    }

    #[test]
    fn all_identities_are_listed() {
        let m = two_level_atom(1.0, 1.0, c(0.5, 0.0)).unwrap();
        let dec = decompose(&m, 1e-9).unwrap();
        let r = check_assumption3(&m, &dec, 1e-9);
        assert_eq!(r.residuals.len(), 1 + 2 + 12 + 4);
        assert!(r.passed);
    }

    #[test]
    fn singular_excited_block() {
        // σ+ has kernel span{|e⟩} and a nilpotent excited restriction
        let p = pauli_ops();
        let m = ScaledModel::new(
            p.plus.clone(),
            Operator::zeros(2),
            Operator::zeros(2),
            vec![Operator::zeros(2)],
            vec![Operator::zeros(2)],
            vec![vec![Operator::identity(2)]],
        )
        .unwrap();
        assert!(matches!(
            decompose(&m, 1e-9),
            Err(Error::SingularRestriction { .. })
        ));
        // an override is accepted and then judged by the checker
        let dec = decompose_with_inverse(&m, 1e-9, Operator::zeros(2)).unwrap();
        let r = check_assumption3(&m, &dec, 1e-9);
        assert!(!r.passed);
        assert!(r.residual(A3_ZERO_YP).unwrap() > 0.5);
    }

    #[test]
    fn empty_ground_space_is_flagged() {
        let m = ScaledModel::new(
            Operator::identity(2) * -0.5,
            Operator::zeros(2),
            Operator::zeros(2),
            vec![Operator::identity(2)],
            vec![Operator::zeros(2)],
            vec![vec![Operator::identity(2)]],
        )
        .unwrap();
        let e = eliminate(&m, 1e-9, 1e-9).unwrap();
        assert_eq!(e.decomposition.ground.rank(), 0);
        assert!(e.limit.drift.is_zero());
        assert!(e.limit.scattering[0][0].is_zero());
        assert_eq!(e.warnings.len(), 1);
    }

    #[test]
    fn conditioning_warning() {
        let m = ScaledModel::new(
            Operator::diagonal(&[c(-1.0, 0.0), c(-5e-9, 0.0), c(0.0, 0.0)]),
            Operator::zeros(3),
            Operator::zeros(3),
            vec![Operator::zeros(3)],
            vec![Operator::zeros(3)],
            vec![vec![Operator::identity(3)]],
        )
        .unwrap();
        let e = eliminate(&m, 1e-9, 1e-9).unwrap();
        assert!(e.warnings.iter().any(|w| w.contains("ill-conditioned")));
    }

    #[test]
    fn limit_coefficients_end_in_ground_projector() {
        let m = cavity_system(&CavityParams::default_instance()).unwrap();
        let e = eliminate(&m, 1e-9, 1e-9).unwrap();
        let p0 = e.decomposition.ground.op();
        for l in &e.limit.coupling {
            close(&(l * p0), l, 1e-13);
        }
        for s in e.limit.scattering.iter().flatten() {
            close(&(s * p0), s, 1e-13);
        }
    }

    #[test]
    fn zero_displacement_is_identity() {
        let m = two_level_atom(1.0, 1.0, c(0.5, 0.0)).unwrap();
        assert_eq!(displace_scaled(&m, &Amplitude::zeros(1)).unwrap(), m);
        let lim = two_level_limit(1.0, 1.0, c(0.5, 0.0));
        assert_eq!(displace_limit(&lim, &Amplitude::zeros(1)).unwrap(), lim);
        assert!(matches!(
            displace_scaled(&m, &Amplitude::zeros(2)),
            Err(Error::DimensionMismatch {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn displaced_two_level_drift() {
        let (alpha, cc) = (c(0.5, 0.2), c(0.3, -0.4));
        let m = two_level_atom(1.0, 1.0, alpha).unwrap();
        let p = pauli_ops();
        let dm = displace_scaled(&m, &Amplitude::new(vec![cc]).unwrap()).unwrap();
        let expected = &(&p.plus * (c(0.0, -1.0) * alpha)
            + &p.minus * (c(0.0, -1.0) * alpha.conj()))
            + &(&(&p.minus * cc.conj()) - &(&p.plus * cc));
        close(&dm.cross_drift, &expected, 1e-14);
        // unit scattering and no slow coupling leave the slow drift alone
        close(&dm.slow_drift, &m.slow_drift, 1e-15);
    }

    #[test]
    fn displaced_limit_coupling() {
        let lim = two_level_limit(1.0, 1.0, c(0.5, 0.0));
        let cc = c(0.2, 0.1);
        let dl = displace_limit(&lim, &Amplitude::new(vec![cc]).unwrap()).unwrap();
        let p0 = lim.closure();
        let expected = &lim.coupling[0] + &(&(&lim.scattering[0][0] - &p0) * cc);
        close(&dl.coupling[0], &expected, 1e-15);
    }

    #[test]
    fn displacement_preserves_unitarity_and_commutes_with_instantiation() {
        let m = two_level_atom(0.7, 1.3, c(0.4, -0.1)).unwrap();
        let al = Amplitude::new(vec![c(0.3, -0.7)]).unwrap();
        let dm = displace_scaled(&m, &al).unwrap();
        for k in [0.0, 1.0, 4.0] {
            let a = instantiate(&dm, k).unwrap();
            let b = displace_limit(&instantiate(&m, k).unwrap(), &al).unwrap();
            close(&a.drift, &b.drift, 1e-12);
            close(&a.coupling[0], &b.coupling[0], 1e-12);
            assert!(check_hp_unitarity(&a, 1e-10).passed);
        }
        let e = eliminate(&dm, 1e-9, 1e-9).unwrap();
        assert!(e.passed(), "{e:?}");
        let lim = displace_limit(&eliminate(&m, 1e-9, 1e-9).unwrap().limit, &al).unwrap();
        close(&e.limit.drift, &lim.drift, 1e-12);
        close(&e.limit.coupling[0], &lim.coupling[0], 1e-12);
    }
}
