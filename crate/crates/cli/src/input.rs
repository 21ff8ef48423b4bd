use std::fs::File;
use std::path::Path;

use renyi_gof::distributions::TestFamily;
use renyi_gof::{Sample, ShapeParam};

use crate::error::{CliError, CliResult};

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(format!("cannot open {}", path.display()), e))?;
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Reads a sample CSV: optional `#` comment lines, a header row, then one
/// point per row.
pub fn read_sample(path: &Path) -> CliResult<Sample> {
    let mut rdr = reader(path)?;
    let dim = rdr
        .headers()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        .len();
    let mut points = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Usage(format!(
                    "{}: row {}, column {}: `{field}` is not a number",
                    path.display(),
                    row + 1,
                    col + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Usage(format!(
                    "{}: row {}, column {}: value must be finite",
                    path.display(),
                    row + 1,
                    col + 1
                )));
            }
            points.push(v);
        }
    }
    if dim == 0 || points.is_empty() {
        return Err(CliError::Usage(format!("{}: no sample points", path.display())));
    }
    Ok(Sample::new(dim, points)?)
}

/// Header comment naming the tested family in summary tables.
pub const FAMILY_COMMENT: &str = "family: ";

/// Critical values for one `(m, ν₀ or η₀, N, k)` cell of a summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalRow {
    pub dim: usize,
    pub null_param: ShapeParam,
    pub n: usize,
    pub k: usize,
    /// `(alpha, critical value)` pairs.
    pub critical: Vec<(f64, f64)>,
}

const ALPHA_COLUMNS: [(&str, f64); 3] = [("q05", 0.05), ("q01", 0.01), ("q10", 0.10)];

/// Null rows (`true_param == null_param`) of a summary CSV written by the
/// `experiment` command, with the family from its `# family: ...` comment.
pub fn read_critical_table(path: &Path) -> CliResult<(Option<TestFamily>, Vec<CriticalRow>)> {
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
    let family = text
        .lines()
        .filter_map(|l| l.strip_prefix("# ")?.strip_prefix(FAMILY_COMMENT))
        .next()
        .map(|f| serde_json::from_value::<TestFamily>(serde_json::Value::String(f.trim().to_string())))
        .transpose()
        .map_err(|e| bad(format!("unrecognised family comment: {e}")))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let (c_m, c_true, c_null, c_n, c_k) = (col("m")?, col("true_param")?, col("null_param")?, col("N")?, col("k")?);
    let alpha_cols: Vec<(usize, f64)> = ALPHA_COLUMNS
        .iter()
        .map(|&(name, a)| Ok((col(name)?, a)))
        .collect::<CliResult<_>>()?;

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let param = |i: usize| field(i).parse::<ShapeParam>().map_err(|e| bad(e));
        let int = |i: usize| field(i).parse::<usize>().map_err(|_| bad(format!("`{}` is not an integer", field(i))));
        let true_param = param(c_true)?;
        let null_param = param(c_null)?;
        if true_param != null_param {
            continue;
        }
        let critical = alpha_cols
            .iter()
            .map(|&(i, a)| {
                field(i)
                    .parse::<f64>()
                    .map(|v| (a, v))
                    .map_err(|_| bad(format!("`{}` is not a number", field(i))))
            })
            .collect::<CliResult<_>>()?;
        rows.push(CriticalRow {
            dim: int(c_m)?,
            null_param,
            n: int(c_n)?,
            k: int(c_k)?,
            critical,
        });
    }
    Ok((family, rows))
}
