//! The four subcommands. Each returns the report text and whether every
//! identity held; the caller writes the text once and sets the exit code.

use qsde_core::semigroup::{default_ground_vector, first_order_term, loglog_slope};
use qsde_core::{
    check_hp_unitarity, check_scaling_consistency, decompose, decompose_with_inverse,
    eliminate_with, generator_convergence_check, instantiate, k_sweep, CheckReport,
    EliminationResult, Error, Operator,
};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::model_file::{encode, limit_model, LoadedModel, Matrix, ModelFile};

pub const CONVERGE_KS: [f64; 7] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];
pub const KURTZ_KS: [f64; 4] = [10.0, 30.0, 100.0, 300.0];

/// A failed run, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Malformed input or invalid settings (exit 1).
    Input(String),
    /// Numerical breakdown tied to the model's structure (exit 2).
    Structure(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularRestriction { .. } => Failure::Structure(format!(
                "{e}\nhint: add a `Y1inv` matrix to the explicit model to override the computed inverse"
            )),
            Error::ClampExceeded { .. } => Failure::Structure(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

pub struct Outcome {
    pub text: String,
    pub passed: bool,
    pub notes: Vec<String>,
}

#[derive(Serialize)]
struct ResidualRow {
    identity: String,
    residual: f64,
    passed: bool,
}

#[derive(Serialize)]
struct Group {
    name: &'static str,
    passed: bool,
    tolerance: f64,
    residuals: Vec<ResidualRow>,
    warnings: Vec<String>,
}

impl Group {
    fn new(name: &'static str, r: &CheckReport) -> Self {
        Group {
            name,
            passed: r.passed,
            tolerance: r.tolerance,
            residuals: r
                .residuals
                .iter()
                .map(|x| ResidualRow {
                    identity: x.name.clone(),
                    residual: x.value,
                    passed: x.value <= r.tolerance,
                })
                .collect(),
            warnings: r.warnings.clone(),
        }
    }
}

struct Checked {
    groups: Vec<Group>,
    elimination: EliminationResult,
}

impl Checked {
    fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.passed)
    }

    fn warnings(&self) -> Vec<String> {
        self.groups
            .iter()
            .flat_map(|g| g.warnings.iter().map(move |w| format!("{}: {w}", g.name)))
            .chain(self.elimination.warnings.iter().cloned())
            .collect()
    }

    fn failures(&self) -> Vec<String> {
        self.groups
            .iter()
            .flat_map(|g| {
                g.residuals.iter().filter(|r| !r.passed).map(move |r| {
                    format!(
                        "{}: {} (residual {:.3e}, tolerance {:.3e})",
                        g.name, r.identity, r.residual, g.tolerance
                    )
                })
            })
            .collect()
    }
}

fn run_checks(loaded: &LoadedModel, cfg: &RunConfig) -> Result<Checked, Failure> {
    let m = &loaded.model;
    let scaling = check_scaling_consistency(m, cfg.check_tol);
    let hp = check_hp_unitarity(&instantiate(m, 1.0)?, cfg.check_tol);
    let dec = match &loaded.excited_inverse {
        Some(inv) => decompose_with_inverse(m, cfg.rank_tol, inv.clone())?,
        None => decompose(m, cfg.rank_tol)?,
    };
    let e = eliminate_with(m, dec, cfg.check_tol)?;
    let groups = vec![
        Group::new("scaling_consistency", &scaling),
        Group::new("hp_unitarity_k1", &hp),
        Group::new("assumption3", &e.assumption3),
        Group::new("assumption4", &e.assumption4),
        Group::new("limit_unitarity", &e.lemma),
    ];
    Ok(Checked {
        groups,
        elimination: e,
    })
}

/// Shortest round-trip text, in exponent form outside `[1e-4, 1e15)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn csv_text(
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Input(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::Input(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Failure::Input(e.to_string()))
}

fn json_text<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::Input(format!("json: {e}")))
}

#[derive(Serialize)]
struct CheckJson<'a> {
    command: &'static str,
    passed: bool,
    seed: u64,
    ground_rank: usize,
    singular_values: &'a [f64],
    groups: &'a [Group],
    warnings: Vec<String>,
}

fn check_rows(c: &Checked) -> Vec<Vec<String>> {
    c.groups
        .iter()
        .flat_map(|g| {
            g.residuals.iter().map(move |r| {
                vec![
                    g.name.to_string(),
                    r.identity.clone(),
                    num(r.residual),
                    num(g.tolerance),
                    r.passed.to_string(),
                ]
            })
        })
        .collect()
}

pub fn check(loaded: &LoadedModel, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let c = run_checks(loaded, cfg)?;
    let dec = &c.elimination.decomposition;
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => json_text(&CheckJson {
            command: "check",
            passed: c.passed(),
            seed: cfg.seed,
            ground_rank: dec.ground.rank(),
            singular_values: &dec.singular_values,
            groups: &c.groups,
            warnings: c.warnings(),
        })?,
        Format::Csv => csv_text(
            &["group", "identity", "residual", "tolerance", "passed"],
            check_rows(&c),
        )?,
    };
    Ok(Outcome {
        text,
        passed: c.passed(),
        notes: [c.failures(), c.warnings()].concat(),
    })
}

#[derive(Serialize)]
struct LimitJson {
    #[serde(rename = "K")]
    k: Matrix,
    #[serde(rename = "L")]
    l: Vec<Matrix>,
    #[serde(rename = "S")]
    s: Vec<Vec<Matrix>>,
}

#[derive(Serialize)]
struct EliminateJson<'a> {
    command: &'static str,
    passed: bool,
    seed: u64,
    ground_rank: usize,
    singular_values: &'a [f64],
    limit: LimitJson,
    #[serde(rename = "P0")]
    p0: Matrix,
    #[serde(rename = "Y1inv")]
    y1inv: Matrix,
    limit_model: ModelFile,
    groups: &'a [Group],
    warnings: Vec<String>,
}

pub fn eliminate(loaded: &LoadedModel, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let c = run_checks(loaded, cfg)?;
    let e = &c.elimination;
    let dec = &e.decomposition;
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => json_text(&EliminateJson {
            command: "eliminate",
            passed: c.passed(),
            seed: cfg.seed,
            ground_rank: dec.ground.rank(),
            singular_values: &dec.singular_values,
            limit: LimitJson {
                k: encode(&e.limit.drift),
                l: e.limit.coupling.iter().map(encode).collect(),
                s: e.limit
                    .scattering
                    .iter()
                    .map(|row| row.iter().map(encode).collect())
                    .collect(),
            },
            p0: encode(dec.ground.op()),
            y1inv: encode(&dec.excited_inverse),
            limit_model: limit_model(&e.limit, dec),
            groups: &c.groups,
            warnings: c.warnings(),
        })?,
        Format::Csv => {
            let mut named: Vec<(String, &Operator)> = vec![("K".into(), &e.limit.drift)];
            named.extend(
                e.limit
                    .coupling
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (format!("L[{i}]"), l)),
            );
            for (i, row) in e.limit.scattering.iter().enumerate() {
                named.extend(
                    row.iter()
                        .enumerate()
                        .map(|(j, s)| (format!("S[{i}][{j}]"), s)),
                );
            }
            named.push(("P0".into(), dec.ground.op()));
            named.push(("Y1inv".into(), &dec.excited_inverse));
            let rows = named.iter().flat_map(|(name, op)| {
                let d = op.dim();
                (0..d).flat_map(move |r| {
                    (0..d).map(move |col| {
                        let z = op.get(r, col);
                        vec![
                            name.clone(),
                            r.to_string(),
                            col.to_string(),
                            num(z.re),
                            num(z.im),
                        ]
                    })
                })
            });
            csv_text(&["coefficient", "row", "col", "re", "im"], rows)?
        }
    };
    Ok(Outcome {
        text,
        passed: c.passed(),
        notes: [c.failures(), c.warnings()].concat(),
    })
}

#[derive(Serialize)]
struct ConvergeJson<'a> {
    command: &'static str,
    seed: u64,
    driven: bool,
    ks: &'a [f64],
    t_grid: &'a [f64],
    distances: &'a [Vec<f64>],
    sup_distance: &'a [f64],
    max_clamp: f64,
    warnings: Vec<String>,
}

/// Distance sweep over `k`. Convergence quality is data: the outcome passes
/// whenever the computation completes.
pub fn converge(loaded: &LoadedModel, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let c = run_checks(loaded, cfg)?;
    let m = &loaded.model;
    let e = &c.elimination;
    let ks = cfg.ks.clone().unwrap_or_else(|| CONVERGE_KS.to_vec());
    let drive = cfg
        .drive
        .as_ref()
        .map(|d| d.build(m.channels()))
        .transpose()
        .map_err(Failure::Input)?;
    if let Some(d) = &drive {
        if d.end() < cfg.horizon {
            return Err(Failure::Input(format!(
                "config.drive: last breakpoint {} is before the horizon {}",
                d.end(),
                cfg.horizon
            )));
        }
    }
    let v = default_ground_vector(&e.decomposition.ground)?;
    let report = k_sweep(m, e, &v, &ks, cfg.horizon, cfg.steps, drive.as_ref())?;
    let mut notes: Vec<String> = c
        .failures()
        .into_iter()
        .map(|f| format!("assumption not met: {f}"))
        .collect();
    notes.extend(c.warnings());
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => json_text(&ConvergeJson {
            command: "converge",
            seed: cfg.seed,
            driven: drive.is_some(),
            ks: &report.ks,
            t_grid: &report.t_grid,
            distances: &report.distances,
            sup_distance: &report.sup_distance,
            max_clamp: report.max_clamp,
            warnings: notes.clone(),
        })?,
        Format::Csv => {
            let trace = report
                .ks
                .iter()
                .zip(&report.distances)
                .flat_map(|(k, row)| {
                    report
                        .t_grid
                        .iter()
                        .zip(row)
                        .map(move |(t, d)| vec![num(*k), num(*t), num(*d)])
                });
            let summary = report
                .ks
                .iter()
                .zip(&report.sup_distance)
                .map(|(k, s)| vec![num(*k), num(*s)]);
            csv_text(&["k", "t", "distance"], trace)?
                + "\n"
                + &csv_text(&["k", "sup_distance"], summary)?
        }
    };
    Ok(Outcome {
        text,
        passed: true,
        notes,
    })
}

#[derive(Serialize)]
struct Observable {
    name: String,
    first_order_norm: f64,
    corrected: Vec<f64>,
    uncorrected: Vec<f64>,
    slope: Option<f64>,
}

#[derive(Serialize)]
struct KurtzJson<'a> {
    command: &'static str,
    seed: u64,
    ks: &'a [f64],
    observables: &'a [Observable],
    warnings: Vec<String>,
}

/// Generator residuals with and without the corrector, for `P0` and the
/// matrix units `|b_a⟩⟨b_b|` of the ground space.
pub fn kurtz(loaded: &LoadedModel, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let c = run_checks(loaded, cfg)?;
    let m = &loaded.model;
    let e = &c.elimination;
    let ks = cfg.ks.clone().unwrap_or_else(|| KURTZ_KS.to_vec());
    if ks.iter().any(|k| *k <= 0.0) {
        return Err(Failure::Input(
            "kurtz needs coupling strengths k > 0".into(),
        ));
    }
    let ground = &e.decomposition.ground;
    let basis = ground.basis();
    let mut xs = vec![("P0".to_string(), ground.op().clone())];
    for a in 0..basis.ncols() {
        for b in 0..basis.ncols() {
            let unit =
                Operator::outer(&basis.column(a).into_owned(), &basis.column(b).into_owned());
            xs.push((format!("E[{a},{b}]"), unit));
        }
    }
    let observables = xs
        .into_iter()
        .map(|(name, x)| {
            let rows = generator_convergence_check(m, e, &x, &ks)?;
            let corrected: Vec<f64> = rows.iter().map(|r| r.corrected).collect();
            Ok(Observable {
                name,
                first_order_norm: first_order_term(e, m, &x)?.frobenius_norm(),
                slope: loglog_slope(&ks, &corrected),
                uncorrected: rows.iter().map(|r| r.uncorrected).collect(),
                corrected,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut notes: Vec<String> = c
        .failures()
        .into_iter()
        .map(|f| format!("assumption not met: {f}"))
        .collect();
    notes.extend(c.warnings());
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => json_text(&KurtzJson {
            command: "kurtz",
            seed: cfg.seed,
            ks: &ks,
            observables: &observables,
            warnings: notes.clone(),
        })?,
        Format::Csv => {
            let table = observables.iter().flat_map(|o| {
                ks.iter().enumerate().map(move |(i, k)| {
                    vec![
                        o.name.clone(),
                        num(*k),
                        num(o.corrected[i]),
                        num(o.uncorrected[i]),
                    ]
                })
            });
            let slopes = observables
                .iter()
                .map(|o| vec![o.name.clone(), o.slope.map_or(String::new(), num)]);
            csv_text(&["observable", "k", "corrected", "uncorrected"], table)?
                + "\n"
                + &csv_text(&["observable", "slope"], slopes)?
        }
    };
    Ok(Outcome {
        text,
        passed: true,
        notes,
    })
}
