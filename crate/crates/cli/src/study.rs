//! Config-driven Monte Carlo studies for the `experiment` command.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use renyi_gof::distributions::TestFamily;
use renyi_gof::mc::{run_study, summary_rows, write_histograms_csv, write_summary_csv, ExperimentConfig, McResult};
use renyi_gof::ShapeParam;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::input::FAMILY_COMMENT;

pub const SCHEMA_VERSION: u32 = 1;

fn default_failure_fraction() -> f64 {
    0.01
}

fn default_alphas() -> Vec<f64> {
    vec![0.05]
}

/// Study file: a grid of true and null parameters for one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub schema_version: u32,
    pub family: TestFamily,
    pub dim: usize,
    pub true_params: Vec<ShapeParam>,
    pub null_params: Vec<ShapeParam>,
    pub n_grid: Vec<usize>,
    pub k: usize,
    pub replicates: usize,
    #[serde(default = "default_alphas")]
    pub alpha_levels: Vec<f64>,
    pub master_seed: u64,
    #[serde(default)]
    pub write_replicates: bool,
    #[serde(default = "default_failure_fraction")]
    pub max_failure_fraction: f64,
}

impl StudyConfig {
    /// True parameters actually run: the configured ones followed by any
    /// null parameter missing from them, so every null has its own
    /// critical values.
    pub fn resolved_true_params(&self) -> Vec<ShapeParam> {
        let mut out = self.true_params.clone();
        for p in &self.null_params {
            if !out.contains(p) {
                out.push(*p);
            }
        }
        out
    }

    /// Seed for the runs at one true parameter. Depends only on the master
    /// seed and the parameter value.
    pub fn seed_for(&self, true_param: ShapeParam) -> u64 {
        let label = true_param.to_string();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self.master_seed ^ h
    }

    fn experiment(&self, true_param: ShapeParam, null_param: ShapeParam) -> ExperimentConfig {
        ExperimentConfig {
            family: self.family,
            true_param,
            null_param,
            dim: self.dim,
            n_grid: self.n_grid.clone(),
            k: self.k,
            replicates: self.replicates,
            alpha_levels: self.alpha_levels.clone(),
            master_seed: self.seed_for(true_param),
            max_failure_fraction: self.max_failure_fraction,
        }
    }

    /// Every schema violation, deduplicated, in a stable order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            out.push(format!(
                "schema_version must be {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        if self.true_params.is_empty() {
            out.push("true_params must not be empty".to_string());
        }
        if self.null_params.is_empty() {
            out.push("null_params must not be empty".to_string());
        }
        let placeholder = ShapeParam::Infinite;
        let mut combos = vec![self.experiment(placeholder, placeholder)];
        combos.extend(self.true_params.iter().map(|&t| self.experiment(t, placeholder)));
        combos.extend(self.null_params.iter().map(|&n| self.experiment(placeholder, n)));
        for c in combos {
            for v in c.violations() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }
}

pub fn load(path: &Path) -> CliResult<StudyConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
    let config: StudyConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: invalid config: {e}", path.display())))?;
    let violations = config.violations();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| format!("  - {v}")).collect();
        return Err(CliError::Usage(format!(
            "{}: {} config violation(s):\n{}",
            path.display(),
            violations.len(),
            list.join("\n")
        )));
    }
    Ok(config)
}

pub fn run(config: &StudyConfig) -> CliResult<Vec<McResult>> {
    let mut results = Vec::new();
    for t in config.resolved_true_params() {
        let base = config.experiment(t, config.null_params[0]);
        results.extend(run_study(&base, &config.null_params)?);
    }
    Ok(results)
}

#[derive(Serialize)]
struct Report<'a> {
    tool_version: &'a str,
    config: &'a StudyConfig,
    results: Vec<serde_json::Value>,
}

fn header_comments(config: &StudyConfig) -> Vec<String> {
    vec![
        format!("tool: renyi-gof {}", env!("CARGO_PKG_VERSION")),
        format!("{FAMILY_COMMENT}{}", config.family),
        format!("master_seed: {}", config.master_seed),
        format!("config: {}", serde_json::to_string(config).expect("config serializes")),
    ]
}

fn report_json(config: &StudyConfig, results: &[McResult], include_replicates: bool) -> String {
    let results = results
        .iter()
        .map(|r| serde_json::from_str(&r.to_json(include_replicates)).expect("result json parses"))
        .collect();
    let report = Report {
        tool_version: env!("CARGO_PKG_VERSION"),
        config,
        results,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

/// Files written into the output directory.
pub const SUMMARY_FILE: &str = "summary.csv";
pub const HISTOGRAM_FILE: &str = "histograms.csv";
pub const RESULT_FILE: &str = "result.json";
pub const REPLICATES_FILE: &str = "replicates.json";

pub fn write_outputs(config: &StudyConfig, results: &[McResult], out_dir: &Path) -> CliResult<Vec<String>> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(format!("cannot create {}", out_dir.display()), e))?;
    let comments = header_comments(config);
    let create = |name: &str| {
        let path = out_dir.join(name);
        fs::File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
    };
    let mut written = Vec::new();

    let rows = summary_rows(results)?;
    write_summary_csv(create(SUMMARY_FILE)?, &rows, &comments)
        .map_err(|e| CliError::io(format!("writing {SUMMARY_FILE}"), e))?;
    written.push(SUMMARY_FILE.to_string());

    write_histograms_csv(create(HISTOGRAM_FILE)?, results, &comments)?;
    written.push(HISTOGRAM_FILE.to_string());

    let write_text = |name: &str, text: String| {
        fs::write(out_dir.join(name), text).map_err(|e| CliError::io(format!("writing {name}"), e))
    };
    write_text(RESULT_FILE, report_json(config, results, false))?;
    written.push(RESULT_FILE.to_string());
    if config.write_replicates {
        write_text(REPLICATES_FILE, report_json(config, results, true))?;
        written.push(REPLICATES_FILE.to_string());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> StudyConfig {
        serde_json::from_str(
            r#"{"schema_version": 1, "family": "student", "dim": 1, "true_params": [5, "inf"],
                "null_params": [10], "n_grid": [60, 90], "k": 3, "replicates": 5, "master_seed": 3}"#,
        )
        .unwrap()
    }

    #[test]
    fn null_params_join_true_params() {
        let c = tiny();
        assert_eq!(
            c.resolved_true_params(),
            vec![ShapeParam::Finite(5.0), ShapeParam::Infinite, ShapeParam::Finite(10.0)]
        );
        assert_eq!(run(&c).unwrap().len(), 3);
    }

    #[test]
    fn seeds_depend_on_value_not_position() {
        let mut a = tiny();
        let b = tiny();
        a.true_params.reverse();
        for p in b.resolved_true_params() {
            assert_eq!(a.seed_for(p), b.seed_for(p));
        }
        assert_ne!(b.seed_for(ShapeParam::Finite(5.0)), b.seed_for(ShapeParam::Infinite));
    }

    #[test]
    fn all_violations_reported() {
        let mut c = tiny();
        c.schema_version = 2;
        c.replicates = 1;
        c.null_params = vec![ShapeParam::Finite(1.0)];
        c.alpha_levels = vec![1.5];
        let v = c.violations();
        assert_eq!(v.len(), 4, "{v:?}");
    }
}
