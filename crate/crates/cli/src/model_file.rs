//! JSON model files: a builtin catalog entry or explicit coefficient
//! matrices. Complex numbers are `[re, im]` pairs, matrices are arrays of rows.

use qsde_core::catalog::{self, CavityParams};
use qsde_core::{CoefficientSet, Complex64, Decomposition, Operator, ScaledModel};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

pub type Matrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<Builtin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Explicit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Builtin {
    pub name: String,
    #[serde(default)]
    pub parameters: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Explicit {
    pub dim: usize,
    pub channels: usize,
    #[serde(rename = "Y")]
    pub y: Matrix,
    #[serde(rename = "A")]
    pub a: Matrix,
    #[serde(rename = "B")]
    pub b: Matrix,
    #[serde(rename = "F")]
    pub f: Vec<Matrix>,
    #[serde(rename = "G")]
    pub g: Vec<Matrix>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<Matrix>>,
    /// Optional excited-space inverse of `Y`, used instead of the computed one.
    #[serde(rename = "Y1inv", default, skip_serializing_if = "Option::is_none")]
    pub y1inv: Option<Matrix>,
}

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Real(f64),
    Pair([f64; 2]),
}

impl From<Scalar> for Complex64 {
    fn from(s: Scalar) -> Self {
        match s {
            Scalar::Real(re) => Complex64::new(re, 0.0),
            Scalar::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoLevelParams {
    #[serde(alias = "Δ")]
    delta: f64,
    #[serde(alias = "γ")]
    gamma: f64,
    #[serde(alias = "α")]
    alpha: Scalar,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AlkaliParams {
    #[serde(alias = "Δ")]
    delta: f64,
    #[serde(alias = "γ")]
    gamma: f64,
    #[serde(default, alias = "Bx", alias = "B_x")]
    bx: f64,
    #[serde(default, alias = "By", alias = "B_y")]
    by: f64,
    #[serde(default, alias = "Bz", alias = "B_z")]
    bz: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CavityFileParams {
    #[serde(default, alias = "γ")]
    gamma: Option<f64>,
    #[serde(default, alias = "E00")]
    e00: Option<Matrix>,
    #[serde(default, alias = "E01")]
    e01: Option<Matrix>,
    #[serde(default, alias = "E10")]
    e10: Option<Matrix>,
    #[serde(default, alias = "E11")]
    e11: Option<Matrix>,
    #[serde(default, alias = "N")]
    n: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LambdaParams {
    #[serde(alias = "γ")]
    gamma: f64,
    g: f64,
    #[serde(alias = "α")]
    alpha: Scalar,
    #[serde(alias = "N")]
    n: usize,
}

pub const BUILTIN_NAMES: [&str; 4] = ["two_level", "alkali", "cavity_system", "lambda_system"];

/// A model file ready for the numerics.
#[derive(Debug)]
pub struct LoadedModel {
    pub model: ScaledModel,
    pub excited_inverse: Option<Operator>,
}

pub fn parse(text: &str) -> Result<ModelFile, String> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| format!("model file: {e}"))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(format!(
            "model file: schema_version {} is not supported (expected {SCHEMA_VERSION})",
            file.schema_version
        ));
    }
    match (&file.builtin, &file.explicit) {
        (Some(_), Some(_)) => {
            Err("model file: give exactly one of `builtin` and `explicit`, not both".into())
        }
        (None, None) => Err("model file: one of `builtin` or `explicit` is required".into()),
        _ => Ok(file),
    }
}

pub fn load(file: &ModelFile) -> Result<LoadedModel, String> {
    match (&file.builtin, &file.explicit) {
        (Some(b), None) => Ok(LoadedModel {
            model: load_builtin(b)?,
            excited_inverse: None,
        }),
        (None, Some(x)) => load_explicit(x),
        _ => Err("model file: give exactly one of `builtin` and `explicit`".into()),
    }
}

fn params<T: for<'de> Deserialize<'de>>(b: &Builtin) -> Result<T, String> {
    let value = if b.parameters.is_null() {
        Value::Object(Default::default())
    } else {
        b.parameters.clone()
    };
    serde_json::from_value(value).map_err(|e| format!("builtin.parameters for `{}`: {e}", b.name))
}

fn load_builtin(b: &Builtin) -> Result<ScaledModel, String> {
    let built = match b.name.as_str() {
        "two_level" => {
            let p: TwoLevelParams = params(b)?;
            catalog::two_level_atom(p.delta, p.gamma, p.alpha.into())
        }
        "alkali" => {
            let p: AlkaliParams = params(b)?;
            catalog::alkali_atom(p.delta, p.gamma, [p.bx, p.by, p.bz])
        }
        "cavity_system" => catalog::cavity_system(&cavity_params(params(b)?)?),
        "lambda_system" => {
            let p: LambdaParams = params(b)?;
            catalog::lambda_system(p.gamma, p.g, p.alpha.into(), p.n)
        }
        other => {
            return Err(format!(
                "builtin.name: unknown model `{other}` (expected one of {})",
                BUILTIN_NAMES.join(", ")
            ))
        }
    };
    built.map_err(|e| format!("builtin `{}`: {e}", b.name))
}

/// Missing blocks fall back to the default instance; a missing `e01` (or
/// `e10`) is taken as the adjoint of the other one when that is given.
fn cavity_params(p: CavityFileParams) -> Result<CavityParams, String> {
    let base = CavityParams::default_instance();
    let block = |name: &str, m: &Option<Matrix>| -> Result<Option<Operator>, String> {
        m.as_ref()
            .map(|m| decode_square(&format!("builtin.parameters.{name}"), m, None))
            .transpose()
    };
    let e00 = block("e00", &p.e00)?;
    let e01 = block("e01", &p.e01)?;
    let e10 = block("e10", &p.e10)?;
    let e11 = block("e11", &p.e11)?;
    let (e01, e10) = match (e01, e10) {
        (Some(a), Some(b)) => (a, b),
        (Some(a), None) => (a.clone(), a.adjoint()),
        (None, Some(b)) => (b.adjoint(), b),
        (None, None) => (base.e01.clone(), base.e10.clone()),
    };
    Ok(CavityParams {
        gamma: p.gamma.unwrap_or(base.gamma),
        e00: e00.unwrap_or(base.e00),
        e01,
        e10,
        e11: e11.unwrap_or(base.e11),
        truncation: p.n.unwrap_or(base.truncation),
    })
}

fn load_explicit(x: &Explicit) -> Result<LoadedModel, String> {
    let d = x.dim;
    let n = x.channels;
    if d == 0 || n == 0 {
        return Err("explicit: dim and channels must be at least 1".into());
    }
    let list = |name: &str, ms: &[Matrix]| -> Result<Vec<Operator>, String> {
        if ms.len() != n {
            return Err(format!(
                "explicit.{name}: expected {n} matrices (one per channel), found {}",
                ms.len()
            ));
        }
        ms.iter()
            .enumerate()
            .map(|(i, m)| decode_square(&format!("explicit.{name}[{i}]"), m, Some(d)))
            .collect()
    };
    if x.w.len() != n {
        return Err(format!(
            "explicit.W: expected {n} rows of channel blocks, found {}",
            x.w.len()
        ));
    }
    let w =
        x.w.iter()
            .enumerate()
            .map(|(i, row)| {
                if row.len() != n {
                    return Err(format!(
                        "explicit.W[{i}]: expected {n} blocks, found {}",
                        row.len()
                    ));
                }
                row.iter()
                    .enumerate()
                    .map(|(j, m)| decode_square(&format!("explicit.W[{i}][{j}]"), m, Some(d)))
                    .collect()
            })
            .collect::<Result<Vec<Vec<Operator>>, String>>()?;
    let model = ScaledModel::new(
        decode_square("explicit.Y", &x.y, Some(d))?,
        decode_square("explicit.A", &x.a, Some(d))?,
        decode_square("explicit.B", &x.b, Some(d))?,
        list("F", &x.f)?,
        list("G", &x.g)?,
        w,
    )
    .map_err(|e| format!("explicit: {e}"))?;
    let excited_inverse = x
        .y1inv
        .as_ref()
        .map(|m| decode_square("explicit.Y1inv", m, Some(d)))
        .transpose()?;
    Ok(LoadedModel {
        model,
        excited_inverse,
    })
}

/// Square matrix of side `dim` (or of its own row count when `dim` is None).
pub fn decode_square(field: &str, m: &Matrix, dim: Option<usize>) -> Result<Operator, String> {
    let d = dim.unwrap_or(m.len());
    if m.len() != d {
        return Err(format!(
            "{field}: expected a {d}×{d} matrix, found {} rows",
            m.len()
        ));
    }
    if d == 0 {
        return Err(format!("{field}: matrix is empty"));
    }
    let mut rows = Vec::with_capacity(d);
    for (i, row) in m.iter().enumerate() {
        if row.len() != d {
            return Err(format!(
                "{field}: expected a {d}×{d} matrix, row {i} has {} entries",
                row.len()
            ));
        }
        if row.iter().flatten().any(|v| !v.is_finite()) {
            return Err(format!("{field}: row {i} has a non-finite entry"));
        }
        rows.push(row.iter().map(|&[re, im]| Complex64::new(re, im)).collect());
    }
    Ok(Operator::from_rows(&rows))
}

pub fn encode(op: &Operator) -> Matrix {
    let d = op.dim();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let z = op.get(i, j);
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

/// The limit coefficients as an explicit model with no fast dynamics:
/// `Y = A = F = 0`, `B = K`, `G = L`, `W_ij = S_ij + δ_ij·P1`.
pub fn limit_model(limit: &CoefficientSet, dec: &Decomposition) -> ModelFile {
    let d = limit.dim();
    let n = limit.channels();
    let zero = encode(&Operator::zeros(d));
    let w = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s = &limit.scattering[i][j];
                    encode(&if i == j {
                        s + dec.excited.op()
                    } else {
                        s.clone()
                    })
                })
                .collect()
        })
        .collect();
    ModelFile {
        schema_version: SCHEMA_VERSION,
        builtin: None,
        explicit: Some(Explicit {
            dim: d,
            channels: n,
            y: zero.clone(),
            a: zero.clone(),
            b: encode(&limit.drift),
            f: vec![zero; n],
            g: limit.coupling.iter().map(encode).collect(),
            w,
            y1inv: None,
        }),
    }
}
