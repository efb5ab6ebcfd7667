//! Run configuration: an optional JSON file, overridden by command-line flags.

use std::path::PathBuf;

use qsde_core::semigroup::StepDrive;
use qsde_core::{Amplitude, Complex64, DEFAULT_CHECK_TOL, DEFAULT_RANK_TOL};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub rank_tol: Option<f64>,
    pub check_tol: Option<f64>,
    pub ks: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    pub steps: Option<usize>,
    pub drive: Option<DriveFile>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

/// `amplitudes[j]` holds one `[re, im]` pair per channel for segment `j`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveFile {
    pub breakpoints: Vec<f64>,
    pub amplitudes: Vec<Vec<[f64; 2]>>,
}

impl DriveFile {
    pub fn build(&self, channels: usize) -> Result<StepDrive, String> {
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, seg)| {
                if seg.len() != channels {
                    return Err(format!(
                        "config.drive.amplitudes[{j}]: expected {channels} values (one per channel), found {}",
                        seg.len()
                    ));
                }
                Amplitude::new(seg.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
                    .map_err(|e| format!("config.drive.amplitudes[{j}]: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        StepDrive::new(self.breakpoints.clone(), amplitudes)
            .map_err(|e| format!("config.drive: {e}"))
    }
}

/// Flags that may override the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub ks: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    pub steps: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub rank_tol: f64,
    pub check_tol: f64,
    pub ks: Option<Vec<f64>>,
    pub horizon: f64,
    pub steps: usize,
    pub drive: Option<DriveFile>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

pub fn parse_file(text: &str) -> Result<ConfigFile, String> {
    serde_json::from_str(text).map_err(|e| format!("config file: {e}"))
}

pub fn resolve(file: ConfigFile, flags: Overrides) -> Result<RunConfig, String> {
    let cfg = RunConfig {
        rank_tol: file.rank_tol.unwrap_or(DEFAULT_RANK_TOL),
        check_tol: flags.tol.or(file.check_tol).unwrap_or(DEFAULT_CHECK_TOL),
        ks: flags.ks.or(file.ks),
        horizon: flags.horizon.or(file.horizon).unwrap_or(1.0),
        steps: flags.steps.or(file.steps).unwrap_or(101),
        drive: file.drive,
        seed: file.seed.unwrap_or(0),
        output: flags.out.or(file.output),
        format: flags.format.or(file.format),
    };
    for (name, v) in [
        ("rank_tol", cfg.rank_tol),
        ("check_tol", cfg.check_tol),
        ("horizon", cfg.horizon),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(format!("{name} must be a positive number, got {v}"));
        }
    }
    if cfg.steps < 2 {
        return Err(format!("steps must be at least 2, got {}", cfg.steps));
    }
    if let Some(ks) = &cfg.ks {
        if ks.is_empty() {
            return Err("ks must not be empty".into());
        }
        if ks.iter().any(|k| !(*k >= 0.0) || !k.is_finite()) {
            return Err("ks must be finite and non-negative".into());
        }
        if ks.windows(2).any(|w| w[1] <= w[0]) {
            return Err("ks must be strictly increasing".into());
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file =
            parse_file(r#"{"check_tol": 1e-6, "ks": [1, 2], "horizon": 2, "format": "csv"}"#)
                .unwrap();
        let cfg = resolve(
            file,
            Overrides {
                tol: Some(1e-8),
                ks: Some(vec![5.0]),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.check_tol, 1e-8);
        assert_eq!(cfg.ks, Some(vec![5.0]));
        assert_eq!(cfg.horizon, 2.0);
        assert_eq!(cfg.format, Some(Format::Csv));
        assert_eq!(cfg.rank_tol, DEFAULT_RANK_TOL);
    }

    #[test]
    fn invalid_settings_are_rejected() {
        assert!(parse_file(r#"{"unknown": 1}"#).is_err());
        let bad = |o: Overrides| resolve(ConfigFile::default(), o).is_err();
        assert!(bad(Overrides {
            tol: Some(0.0),
            ..Default::default()
        }));
        assert!(bad(Overrides {
            ks: Some(vec![2.0, 1.0]),
            ..Default::default()
        }));
        assert!(bad(Overrides {
            ks: Some(vec![]),
            ..Default::default()
        }));
        assert!(bad(Overrides {
            steps: Some(1),
            ..Default::default()
        }));
        assert!(bad(Overrides {
            horizon: Some(-1.0),
            ..Default::default()
        }));
    }

    #[test]
    fn drive_checks_channel_count() {
        let d = DriveFile {
            breakpoints: vec![0.0, 0.5, 1.0],
            amplitudes: vec![vec![[0.3, 0.0]], vec![[-0.2, 0.0]]],
        };
        assert_eq!(d.build(1).unwrap().amplitudes().len(), 2);
        assert!(d.build(2).unwrap_err().contains("amplitudes[0]"));
    }
}
