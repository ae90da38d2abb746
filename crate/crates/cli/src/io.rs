//! Delimited text files. Every file starts with `#` comment lines
//! recording what produced it; readers skip them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ctsteps::ModelParams;

use crate::error::{CliError, CliResult};

/// Provenance written at the top of every output file.
#[derive(Debug, Clone)]
pub struct FileMeta {
    pub config_hash: String,
    pub seed: u64,
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

pub fn write_table<I, R>(
    path: &Path,
    kind: &str,
    meta: &FileMeta,
    columns: &[&str],
    rows: I,
) -> CliResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let file = File::create(path).map_err(|e| CliError::output(path, e))?;
    let mut out = BufWriter::new(file);
    write!(
        out,
        "# ctsteps {kind}\n# config_sha256: {}\n# seed: {}\n# units: x and y in metres, time in minutes\n",
        meta.config_hash, meta.seed
    )
    .map_err(|e| CliError::output(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns)
        .map_err(|e| CliError::output(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::output(path, e))?;
    }
    w.flush().map_err(|e| CliError::output(path, e))?;
    Ok(())
}

/// Rows of a delimited file with their line numbers, after checking the
/// header matches `columns`.
fn read_rows(path: &Path, what: &str, columns: &[&str]) -> CliResult<Vec<(u64, Vec<f64>)>> {
    let file = File::open(path)
        .map_err(|e| CliError::Input(format!("cannot read {what} {}: {e}", path.display())))?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = r
        .headers()
        .map_err(|e| CliError::Input(format!("{what} {}: {e}", path.display())))?
        .clone();
    if header.iter().collect::<Vec<_>>() != columns {
        return Err(CliError::Input(format!(
            "{what} {}: expected header `{}`, found `{}`",
            path.display(),
            columns.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record =
            record.map_err(|e| CliError::Input(format!("{what} {}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .enumerate()
            .map(|(i, field)| {
                field.parse::<f64>().map_err(|_| {
                    CliError::Input(format!(
                        "{what} {} line {line}: column `{}` is not a number: `{field}`",
                        path.display(),
                        columns[i]
                    ))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push((line, values));
    }
    Ok(rows)
}

pub const TRACK_COLUMNS: [&str; 3] = ["time", "x", "y"];
pub const SAMPLE_COLUMNS: [&str; 6] =
    ["iteration", "sigmaB2", "mu", "lambda", "sigmaS2", "sigmaE2"];
pub const PATH_COLUMNS: [&str; 5] = ["sample", "node", "time", "x", "y"];

/// Observed locations with the file line of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub lines: Vec<u64>,
}

pub fn read_track(path: &Path) -> CliResult<Track> {
    let rows = read_rows(path, "track", &TRACK_COLUMNS)?;
    if rows.is_empty() {
        return Err(CliError::Input(format!(
            "track {} has no rows",
            path.display()
        )));
    }
    let mut t = Track {
        times: vec![],
        xs: vec![],
        ys: vec![],
        lines: vec![],
    };
    for (line, v) in rows {
        if let Some(&prev) = t.times.last() {
            if !(v[0] > prev) {
                return Err(CliError::Input(format!(
                    "track {} line {line}: time {} does not increase on {prev}",
                    path.display(),
                    v[0]
                )));
            }
        }
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(CliError::Input(format!(
                "track {} line {line}: non-finite value {bad}",
                path.display()
            )));
        }
        t.times.push(v[0]);
        t.xs.push(v[1]);
        t.ys.push(v[2]);
        t.lines.push(line);
    }
    Ok(t)
}

pub fn write_track(
    path: &Path,
    meta: &FileMeta,
    times: &[f64],
    xs: &[f64],
    ys: &[f64],
) -> CliResult<()> {
    let rows = (0..times.len()).map(|i| [fmt_num(times[i]), fmt_num(xs[i]), fmt_num(ys[i])]);
    write_table(path, "track", meta, &TRACK_COLUMNS, rows)
}

/// Parameter draws and their iteration numbers.
pub fn read_samples(path: &Path) -> CliResult<(Vec<u64>, Vec<ModelParams>)> {
    let rows = read_rows(path, "samples", &SAMPLE_COLUMNS)?;
    let mut iterations = Vec::with_capacity(rows.len());
    let mut params = Vec::with_capacity(rows.len());
    for (_, v) in rows {
        iterations.push(v[0] as u64);
        params.push(ModelParams::from_array([v[1], v[2], v[3], v[4], v[5]]));
    }
    Ok((iterations, params))
}
