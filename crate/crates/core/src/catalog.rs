//! The four worked models, their operator building blocks, and closed-form
//! limit coefficients used as oracles.
//!
//! Basis orderings: `(|e⟩, |g⟩)` for the two-level atom, `(|e⟩, |+⟩, |−⟩)`
//! for the lambda system, Fock states `|0⟩ … |N−1⟩` for the oscillator, and
//! system ⊗ oscillator for composite spaces.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, expm, singular_values, Operator, Projector};
use crate::model::{CoefficientSet, ScaledModel};

#[derive(Debug, Clone, PartialEq)]
pub struct PauliOps {
    /// `σ₊ = |e⟩⟨g|`
    pub plus: Operator,
    /// `σ₋ = |g⟩⟨e|`
    pub minus: Operator,
    pub x: Operator,
    pub y: Operator,
    pub z: Operator,
    /// `P_e = σ₊σ₋`
    pub pe: Operator,
    /// `P_g = σ₋σ₊`
    pub pg: Operator,
}

pub fn pauli_ops() -> PauliOps {
    let plus = Operator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let minus = plus.adjoint();
    let i = c(0.0, 1.0);
    PauliOps {
        x: &plus + &minus,
        y: &(&plus * -i) + &(&minus * i),
        z: Operator::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
        pe: &plus * &minus,
        pg: &minus * &plus,
        plus,
        minus,
    }
}

/// Three-level operators in the `(|e⟩, |+⟩, |−⟩)` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaOps {
    /// `σ₊⁽⁺⁾ = |e⟩⟨+|`
    pub raise_plus: Operator,
    /// `σ₊⁽⁻⁾ = |e⟩⟨−|`
    pub raise_minus: Operator,
    pub lower_plus: Operator,
    pub lower_minus: Operator,
    pub p_plus: Operator,
    pub p_minus: Operator,
    pub p_e: Operator,
}

pub fn lambda_ops() -> LambdaOps {
    let raise_plus = Operator::from_real_rows(&[&[0.0, 1.0, 0.0], &[0.0; 3], &[0.0; 3]]);
    let raise_minus = Operator::from_real_rows(&[&[0.0, 0.0, 1.0], &[0.0; 3], &[0.0; 3]]);
    let lower_plus = raise_plus.adjoint();
    let lower_minus = raise_minus.adjoint();
    LambdaOps {
        p_plus: &lower_plus * &raise_plus,
        p_minus: &lower_minus * &raise_minus,
        p_e: &raise_plus * &lower_plus,
        raise_plus,
        raise_minus,
        lower_plus,
        lower_minus,
    }
}

/// Truncated harmonic oscillator on `|0⟩ … |N−1⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorOps {
    pub truncation: usize,
    pub b: Operator,
    pub bdag: Operator,
    pub number: Operator,
    /// `|0⟩⟨0|`
    pub vacuum: Operator,
}

pub fn oscillator_ops(truncation: usize) -> Result<OscillatorOps> {
    if truncation < 2 {
        return Err(Error::InvalidParameters(format!(
            "oscillator truncation must be at least 2, got {truncation}"
        )));
    }
    let b = Operator::from_fn(truncation, |i, j| {
        if j == i + 1 {
            c((j as f64).sqrt(), 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let number = Operator::diagonal(
        &(0..truncation)
            .map(|n| c(n as f64, 0.0))
            .collect::<Vec<_>>(),
    );
    let vacuum = Operator::from_fn(truncation, |i, j| {
        c(if i == 0 && j == 0 { 1.0 } else { 0.0 }, 0.0)
    });
    Ok(OscillatorOps {
        truncation,
        bdag: b.adjoint(),
        b,
        number,
        vacuum,
    })
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidParameters(format!(
            "{name} must be finite and ≥ 0, got {v}"
        )));
    }
    Ok(())
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidParameters(format!(
            "{name} must be finite, got {v}"
        )));
    }
    Ok(())
}

fn check_complex(name: &str, z: Complex64) -> Result<()> {
    check_finite(name, z.re)?;
    check_finite(name, z.im)
}

fn single_channel(y: Operator, a: Operator, b: Operator, f: Operator) -> Result<ScaledModel> {
    let d = y.dim();
    ScaledModel::new(
        y,
        a,
        b,
        vec![f],
        vec![Operator::zeros(d)],
        vec![vec![Operator::identity(d)]],
    )
}

/// Driven, detuned two-level atom:
/// `Y = (−iΔ − γ/2)P_e`, `A = −iασ₊ − iᾱσ₋`, `B = 0`, `F = √γσ₋`, `G = 0`, `W = I`.
pub fn two_level_atom(delta: f64, gamma: f64, alpha: Complex64) -> Result<ScaledModel> {
    check_finite("delta", delta)?;
    check_rate("gamma", gamma)?;
    check_complex("alpha", alpha)?;
    let p = pauli_ops();
    let mi = c(0.0, -1.0);
    single_channel(
        &p.pe * c(-gamma / 2.0, -delta),
        &(&p.plus * (mi * alpha)) + &(&p.minus * (mi * alpha.conj())),
        Operator::zeros(2),
        &p.minus * gamma.sqrt(),
    )
}

/// Alkali atom with an excited level coupled to three field channels
/// (indexed x, y, z) and a ground-spin field `(B_x, B_y, B_z)`.
/// System space is atom ⊗ spin.
pub fn alkali_atom(delta: f64, gamma: f64, field: [f64; 3]) -> Result<ScaledModel> {
    check_finite("delta", delta)?;
    check_rate("gamma", gamma)?;
    for (name, v) in ["bx", "by", "bz"].iter().zip(field) {
        check_finite(name, v)?;
    }
    let p = pauli_ops();
    let i2 = Operator::identity(2);
    let spins = [&p.x, &p.y, &p.z];
    let zeeman = &(&(spins[0] * field[0]) + &(spins[1] * field[1])) + &(spins[2] * field[2]);
    let fast_coupling = spins
        .iter()
        .map(|s| (&p.minus * gamma.sqrt()).kron(s))
        .collect();
    ScaledModel::new(
        p.pe.kron(&i2) * c(-1.5 * gamma, -delta),
        Operator::zeros(4),
        i2.kron(&zeeman) * c(0.0, -1.0),
        fast_coupling,
        vec![Operator::zeros(4); 3],
        (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| {
                        if i == j {
                            Operator::identity(4)
                        } else {
                            Operator::zeros(4)
                        }
                    })
                    .collect()
            })
            .collect(),
    )
}

/// A system with Hamiltonian blocks `E_ij` coupled to a damped cavity mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityParams {
    pub gamma: f64,
    pub e00: Operator,
    pub e01: Operator,
    pub e10: Operator,
    pub e11: Operator,
    pub truncation: usize,
}

impl CavityParams {
    /// Qubit system, `E₁₁ = 0.2σ_z`, `E₁₀ = 0.3σ₋`, `E₀₁ = E₁₀†`,
    /// `E₀₀ = 0.1σ_x`, `γ = 1`, `N = 4`.
    pub fn default_instance() -> Self {
        let p = pauli_ops();
        CavityParams {
            gamma: 1.0,
            e00: &p.x * 0.1,
            e01: &p.plus * 0.3,
            e10: &p.minus * 0.3,
            e11: &p.z * 0.2,
            truncation: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_rate("gamma", self.gamma)?;
        let dh = self.e00.dim();
        for (name, e) in [("e01", &self.e01), ("e10", &self.e10), ("e11", &self.e11)] {
            if e.dim() != dh {
                return Err(Error::InvalidParameters(format!(
                    "{name} is {}×{} but e00 is {dh}×{dh}",
                    e.dim(),
                    e.dim()
                )));
            }
        }
        let pair_tol = 1e-12 * (1.0 + self.e01.frobenius_norm() + self.e10.frobenius_norm());
        let checks = [
            ("e00 must be Hermitian", &self.e00, &self.e00),
            ("e11 must be Hermitian", &self.e11, &self.e11),
            ("e01 must equal e10†", &self.e01, &self.e10),
        ];
        for (msg, a, b) in checks {
            if (a - &b.adjoint()).frobenius_norm() > pair_tol {
                return Err(Error::InvalidParameters(msg.into()));
            }
        }
        let norm = singular_values(&self.e11)[0];
        if !(norm < self.gamma / 2.0) {
            return Err(Error::InvalidParameters(format!(
                "‖e11‖ = {norm} must be below gamma/2 = {}",
                self.gamma / 2.0
            )));
        }
        oscillator_ops(self.truncation)?;
        Ok(())
    }
}

/// `Y = (−iE₁₁ − γ/2)⊗b†b`, `A = −i(E₁₀⊗b† + E₀₁⊗b)`, `B = −iE₀₀⊗I`,
/// `F = √γ I⊗b`, `G = 0`, `W = I`.
pub fn cavity_system(p: &CavityParams) -> Result<ScaledModel> {
    p.validate()?;
    let osc = oscillator_ops(p.truncation)?;
    let dh = p.e00.dim();
    let ih = Operator::identity(dh);
    let mi = c(0.0, -1.0);
    let fast = &(&p.e11 * mi) - &(&ih * (p.gamma / 2.0));
    single_channel(
        fast.kron(&osc.number),
        &(&p.e10.kron(&osc.bdag) + &p.e01.kron(&osc.b)) * mi,
        p.e00.kron(&Operator::identity(p.truncation)) * mi,
        ih.kron(&osc.b) * p.gamma.sqrt(),
    )
}

/// Lambda atom with the `+ ↔ e` leg resonant with a damped cavity and the
/// `− ↔ e` leg driven with amplitude `α`.
pub fn lambda_system(
    gamma: f64,
    g: f64,
    alpha: Complex64,
    truncation: usize,
) -> Result<ScaledModel> {
    check_finite("gamma", gamma)?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameters(format!(
            "gamma must be > 0, got {gamma}"
        )));
    }
    check_finite("g", g)?;
    if g == 0.0 {
        return Err(Error::InvalidParameters("g must be nonzero".into()));
    }
    check_complex("alpha", alpha)?;
    let osc = oscillator_ops(truncation)?;
    let l = lambda_ops();
    let i3 = Operator::identity(3);
    let y = &(i3.kron(&osc.number) * (-gamma / 2.0))
        + &(&(l.raise_plus.kron(&osc.b) - l.lower_plus.kron(&osc.bdag)) * g);
    let a = (&(&l.raise_minus * alpha) - &(&l.lower_minus * alpha.conj()))
        .kron(&Operator::identity(truncation));
    single_channel(
        y,
        a,
        Operator::zeros(3 * truncation),
        i3.kron(&osc.b) * gamma.sqrt(),
    )
}

/// Closed-form limit of [`two_level_atom`].
pub fn two_level_limit(delta: f64, gamma: f64, alpha: Complex64) -> CoefficientSet {
    let p = pauli_ops();
    let z = c(gamma / 2.0, delta);
    CoefficientSet {
        drift: &p.pg * (-alpha.norm_sqr() / z),
        coupling: vec![&p.pg * (c(0.0, -1.0) * alpha * gamma.sqrt() / z)],
        scattering: vec![vec![&p.pg * (c(-gamma / 2.0, delta) / z)]],
        ground: Some(Projector::new(p.pg, 1e-12).expect("P_g is a projector")),
    }
}

/// Closed-form limit of [`alkali_atom`]:
/// `K = −iP_g⊗B·σ`, `L_i = 0`, `S_ij = P_g⊗(δ_ij − γ/(iΔ + 3γ/2)σ_iσ_j)`.
pub fn alkali_limit(delta: f64, gamma: f64, field: [f64; 3]) -> CoefficientSet {
    let p = pauli_ops();
    let spins = [&p.x, &p.y, &p.z];
    let zeeman = &(&(spins[0] * field[0]) + &(spins[1] * field[1])) + &(spins[2] * field[2]);
    let ratio = c(gamma, 0.0) / c(1.5 * gamma, delta);
    let scattering = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| {
                    let mut s = &(spins[i] * spins[j]) * -ratio;
                    if i == j {
                        s += Operator::identity(2);
                    }
                    p.pg.kron(&s)
                })
                .collect()
        })
        .collect();
    let ground = p.pg.kron(&Operator::identity(2));
    CoefficientSet {
        drift: p.pg.kron(&zeeman) * c(0.0, -1.0),
        coupling: vec![Operator::zeros(4); 3],
        scattering,
        ground: Some(Projector::new(ground, 1e-12).expect("P_g ⊗ I is a projector")),
    }
}

/// Closed-form limit of [`cavity_system`]:
/// `K = −iE₀₀P₀ − E₀₁(iE₁₁ + γ/2)⁻¹E₁₀P₀`, `L = −i√γ(iE₁₁ + γ/2)⁻¹E₁₀P₀`,
/// `S = (iE₁₁ − γ/2)(iE₁₁ + γ/2)⁻¹P₀`, with `P₀ = I⊗|0⟩⟨0|`.
pub fn cavity_limit(p: &CavityParams) -> Result<CoefficientSet> {
    p.validate()?;
    let osc = oscillator_ops(p.truncation)?;
    let dh = p.e00.dim();
    let ih = Operator::identity(dh);
    let i = c(0.0, 1.0);
    let denom = &(&p.e11 * i) + &(&ih * (p.gamma / 2.0));
    let inv = Operator::new(
        denom
            .matrix()
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameters("iE11 + gamma/2 is singular".into()))?,
    )?;
    let on_ground = |op: Operator| op.kron(&osc.vacuum);
    let drift = &(&p.e00 * -i) - &(&(&p.e01 * &inv) * &p.e10);
    let coupling = &(&inv * &p.e10) * (-i * p.gamma.sqrt());
    let scattering = &(&(&p.e11 * i) - &(&ih * (p.gamma / 2.0))) * &inv;
    Ok(CoefficientSet {
        drift: on_ground(drift),
        coupling: vec![on_ground(coupling)],
        scattering: vec![vec![on_ground(scattering)]],
        ground: Some(Projector::new(ih.kron(&osc.vacuum), 1e-12)?),
    })
}

/// Closed-form limit of [`lambda_system`]:
/// `K = −(|α|²γ/2g²)P₋⊗|0⟩⟨0|`, `L = −(√γα/g)|+⟩⟨−|⊗|0⟩⟨0|`,
/// `S = P₀ − 2P₋⊗|0⟩⟨0|`, with `P₀ = (P₊ + P₋)⊗|0⟩⟨0|`.
pub fn lambda_limit(
    gamma: f64,
    g: f64,
    alpha: Complex64,
    truncation: usize,
) -> Result<CoefficientSet> {
    let osc = oscillator_ops(truncation)?;
    let l = lambda_ops();
    let p0 = (&l.p_plus + &l.p_minus).kron(&osc.vacuum);
    let pm0 = l.p_minus.kron(&osc.vacuum);
    let flip = (&l.lower_plus * &l.raise_minus).kron(&osc.vacuum);
    Ok(CoefficientSet {
        drift: &pm0 * (-alpha.norm_sqr() * gamma / (2.0 * g * g)),
        coupling: vec![&flip * (-alpha * gamma.sqrt() / g)],
        scattering: vec![vec![&p0 - &(&pm0 * 2.0)]],
        ground: Some(Projector::new(p0, 1e-12)?),
    })
}

/// The blockwise excited-space inverse of the lambda system's fast drift,
/// assembled from the closed-form inverse on each invariant block
/// `H_n = span{|+,n⟩, |−,n⟩, |e,n−1⟩}` and `H_N = span{|e,N−1⟩}`.
pub fn lambda_excited_inverse(gamma: f64, g: f64, truncation: usize) -> Result<Operator> {
    oscillator_ops(truncation)?;
    let nn = truncation;
    let idx = |level: usize, photons: usize| level * nn + photons;
    let (e, plus, minus) = (0, 1, 2);
    let mut m = DMatrix::<Complex64>::zeros(3 * nn, 3 * nn);
    for n in 1..nn {
        let nf = n as f64;
        let det = gamma * gamma * nf * (nf - 1.0) / 4.0 + g * g * nf;
        let basis = [idx(plus, n), idx(minus, n), idx(e, n - 1)];
        let block = [
            [gamma * (nf - 1.0) / 2.0, 0.0, -g * nf.sqrt()],
            [0.0, 2.0 * det / (gamma * nf), 0.0],
            [g * nf.sqrt(), 0.0, gamma * nf / 2.0],
        ];
        for (r, &br) in basis.iter().enumerate() {
            for (s, &bs) in basis.iter().enumerate() {
                m[(br, bs)] = c(-block[r][s] / det, 0.0);
            }
        }
    }
    m[(idx(e, nn - 1), idx(e, nn - 1))] = c(-2.0 / (gamma * (nn as f64 - 1.0)), 0.0);
    Operator::new(m)
}

/// Ground-ground element of `exp(−i(kασ₊ + kᾱσ₋ + k²Δσ₊σ₋)t)` for the
/// undamped two-level atom, by direct 2×2 exponentiation.
pub fn decoupled_propagator_oracle(delta: f64, alpha: Complex64, k: f64, t: f64) -> Complex64 {
    let p = pauli_ops();
    let h =
        &(&(&p.plus * (alpha * k)) + &(&p.minus * (alpha.conj() * k))) + &(&p.pe * (k * k * delta));
    let u = expm(&(&h * c(0.0, -t))).expect("finite 2×2 generator");
    u.get(1, 1)
}

/// `e^{i|α|²t/Δ}`, the ground amplitude of the eliminated undamped atom.
pub fn decoupled_limit_amplitude(delta: f64, alpha: Complex64, t: f64) -> Complex64 {
    c(0.0, alpha.norm_sqr() * t / delta).exp()
}

/// A named catalog model with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ExampleSpec {
    TwoLevel {
        delta: f64,
        gamma: f64,
        alpha: Complex64,
    },
    Alkali {
        delta: f64,
        gamma: f64,
        field: [f64; 3],
    },
    CavitySystem(CavityParams),
    LambdaSystem {
        gamma: f64,
        g: f64,
        alpha: Complex64,
        truncation: usize,
    },
}

impl ExampleSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ExampleSpec::TwoLevel { .. } => "two_level",
            ExampleSpec::Alkali { .. } => "alkali",
            ExampleSpec::CavitySystem(_) => "cavity_system",
            ExampleSpec::LambdaSystem { .. } => "lambda_system",
        }
    }

    pub fn build(&self) -> Result<ScaledModel> {
        match self {
            ExampleSpec::TwoLevel {
                delta,
                gamma,
                alpha,
            } => two_level_atom(*delta, *gamma, *alpha),
            ExampleSpec::Alkali {
                delta,
                gamma,
                field,
            } => alkali_atom(*delta, *gamma, *field),
            ExampleSpec::CavitySystem(p) => cavity_system(p),
            ExampleSpec::LambdaSystem {
                gamma,
                g,
                alpha,
                truncation,
            } => lambda_system(*gamma, *g, *alpha, *truncation),
        }
    }

    pub fn closed_form_limit(&self) -> Result<CoefficientSet> {
        match self {
            ExampleSpec::TwoLevel {
                delta,
                gamma,
                alpha,
            } => Ok(two_level_limit(*delta, *gamma, *alpha)),
            ExampleSpec::Alkali {
                delta,
                gamma,
                field,
            } => Ok(alkali_limit(*delta, *gamma, *field)),
            ExampleSpec::CavitySystem(p) => cavity_limit(p),
            ExampleSpec::LambdaSystem {
                gamma,
                g,
                alpha,
                truncation,
            } => lambda_limit(*gamma, *g, *alpha, *truncation),
        }
    }

    /// The fixed parameter points used for the convergence runs.
    pub fn reference_instances() -> Vec<ExampleSpec> {
        vec![
            ExampleSpec::TwoLevel {
                delta: 1.0,
                gamma: 1.0,
                alpha: c(0.5, 0.0),
            },
            ExampleSpec::Alkali {
                delta: 1.0,
                gamma: 1.0,
                field: [0.2, 0.0, 0.4],
            },
            ExampleSpec::CavitySystem(CavityParams::default_instance()),
            ExampleSpec::LambdaSystem {
                gamma: 1.0,
                g: 2.0,
                alpha: c(0.4, 0.0),
                truncation: 4,
            },
        ]
    }
}
