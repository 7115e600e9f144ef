//! CSV readers and writers for datasets, chains and summaries.
//!
//! Numbers are written with Rust's shortest round-trip `Display` form, so a
//! value read back is bit-identical to the value written.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::engine::Chains;
use crate::error::{Result, SnmError};
use crate::experiments::{ReplicateResult, ScenarioSummary};
use crate::summary::{ParamSummary, Trace};
use crate::systems::{Dataset, NoiseSpec};

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), num)
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new().from_path(path)?)
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| SnmError::Parse {
        path: path.display().to_string(),
        row: 0,
        message: e.to_string(),
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn parse_err(path: &Path, row: usize, message: impl Into<String>) -> SnmError {
    SnmError::Parse {
        path: path.display().to_string(),
        row,
        message: message.into(),
    }
}

fn headers(path: &Path, rdr: &mut csv::Reader<File>) -> Result<Vec<String>> {
    let h = rdr.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
    Ok(h.iter().map(str::to_owned).collect())
}

fn records(path: &Path, rdr: &mut csv::Reader<File>) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(line, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        out.push((line, rec));
    }
    Ok(out)
}

fn field_f64(path: &Path, line: usize, rec: &csv::StringRecord, col: usize, name: &str) -> Result<f64> {
    let raw = rec
        .get(col)
        .ok_or_else(|| parse_err(path, line, format!("missing column `{name}`")))?;
    if raw.is_empty() {
        return Err(parse_err(path, line, format!("empty value in column `{name}`")));
    }
    raw.parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("`{raw}` in column `{name}` is not a number")))
}

fn column_index(header: &[String], prefix: char) -> Vec<(usize, usize)> {
    header
        .iter()
        .enumerate()
        .filter_map(|(c, h)| {
            let rest = h.strip_prefix(prefix)?;
            let k: usize = rest.parse().ok()?;
            (k >= 1).then_some((k, c))
        })
        .collect()
}

fn numbered_columns(path: &Path, header: &[String], prefix: char) -> Result<Vec<usize>> {
    let mut found = column_index(header, prefix);
    found.sort();
    for (expect, (k, _)) in found.iter().enumerate() {
        if *k != expect + 1 {
            return Err(parse_err(
                path,
                1,
                format!("columns `{prefix}1..{prefix}p` must be consecutive; `{prefix}{}` is missing", expect + 1),
            ));
        }
    }
    Ok(found.into_iter().map(|(_, c)| c).collect())
}

/// Writes `t,y1..yp`, plus `x1..xp` when `with_truth` and the dataset has
/// a noise-free trajectory.
pub fn write_dataset(path: &Path, data: &Dataset, with_truth: bool) -> Result<()> {
    let p = data.p();
    let truth = data.truth.as_ref().filter(|_| with_truth);
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=p).map(|k| format!("y{k}")));
    if truth.is_some() {
        header.extend((1..=p).map(|k| format!("x{k}")));
    }
    w.write_record(&header)?;
    for (i, t) in data.times.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend((0..p).map(|k| num(data.y[(i, k)])));
        if let Some(x) = truth {
            row.extend((0..p).map(|k| num(x[(i, k)])));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a noise-free trajectory as `t,x1..xp`.
pub fn write_trajectory(path: &Path, times: &[f64], trajectory: &DMatrix<f64>) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=trajectory.ncols()).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for (i, t) in times.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(trajectory.row(i).iter().map(|v| num(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset file. Observations come from the `y` columns; `x`
/// columns, when present, are the noise-free trajectory. A file with only
/// `x` columns is read as exact observations of that trajectory.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut rdr = reader(path)?;
    let header = headers(path, &mut rdr)?;
    if header.first().map(String::as_str) != Some("t") {
        return Err(parse_err(path, 1, "first column must be `t`"));
    }
    let ycols = numbered_columns(path, &header, 'y')?;
    let xcols = numbered_columns(path, &header, 'x')?;
    if ycols.is_empty() && xcols.is_empty() {
        return Err(parse_err(path, 1, "no `y1..yp` or `x1..xp` columns"));
    }
    if !ycols.is_empty() && !xcols.is_empty() && ycols.len() != xcols.len() {
        return Err(parse_err(
            path,
            1,
            format!("{} observation columns but {} truth columns", ycols.len(), xcols.len()),
        ));
    }
    let rows = records(path, &mut rdr)?;
    let mut times = Vec::with_capacity(rows.len());
    let mut ys = Vec::new();
    let mut xs = Vec::new();
    for (line, rec) in &rows {
        if rec.len() != header.len() {
            return Err(parse_err(
                path,
                *line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let t = field_f64(path, *line, rec, 0, "t")?;
        if let Some(prev) = times.last() {
            if !(t > *prev) {
                return Err(parse_err(path, *line, format!("time {t} does not exceed previous time {prev}")));
            }
        }
        times.push(t);
        for (k, &c) in ycols.iter().enumerate() {
            ys.push(field_f64(path, *line, rec, c, &format!("y{}", k + 1))?);
        }
        for (k, &c) in xcols.iter().enumerate() {
            xs.push(field_f64(path, *line, rec, c, &format!("x{}", k + 1))?);
        }
    }
    let n = times.len();
    let as_matrix = |vals: Vec<f64>, p: usize| DMatrix::from_row_slice(n, p, &vals);
    let located = |e: SnmError| parse_err(path, 0, e.to_string());
    if ycols.is_empty() {
        let x = as_matrix(xs, xcols.len());
        return Dataset::new(times, x.clone()).and_then(|d| d.with_truth(x)).map_err(located);
    }
    let data = Dataset::new(times, as_matrix(ys, ycols.len())).map_err(located)?;
    if xcols.is_empty() {
        Ok(data)
    } else {
        data.with_truth(as_matrix(xs, xcols.len())).map_err(located)
    }
}

/// `component,mode,level,noise_sd`, one row per component.
pub fn write_noise(path: &Path, noise: &NoiseSpec, sds: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["component", "mode", "level", "noise_sd"])?;
    for (k, sd) in sds.iter().enumerate() {
        w.write_record([
            (k + 1).to_string(),
            noise.mode.as_str().to_string(),
            num(noise.level_for(k)?),
            num(*sd),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Noise standard deviations from a `noise.csv` file, by component.
pub fn read_noise_sds(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = reader(path)?;
    let header = headers(path, &mut rdr)?;
    let col = header
        .iter()
        .position(|h| h == "noise_sd")
        .ok_or_else(|| parse_err(path, 1, "missing column `noise_sd`"))?;
    records(path, &mut rdr)?
        .iter()
        .map(|(line, rec)| field_f64(path, *line, rec, col, "noise_sd"))
        .collect()
}

/// Reassembles the dataset written by a simulation into `dir`: `data.csv`
/// observations, `truth.csv` trajectory and `noise.csv` noise levels.
pub fn load_simulation(dir: &Path) -> Result<Dataset> {
    let data = read_dataset(&dir.join("data.csv"))?;
    let truth = read_dataset(&dir.join("truth.csv"))?;
    if truth.times != data.times {
        return Err(SnmError::invalid("truth.csv and data.csv have different time grids"));
    }
    let mut data = data.with_truth(truth.y)?;
    data.noise_sd = Some(read_noise_sds(&dir.join("noise.csv"))?);
    Ok(data)
}

/// Long-format chain file `iter,param,value` covering every scalar trace.
pub fn write_chains(path: &Path, chains: &Chains) -> Result<()> {
    write_traces(path, &chains.traces())
}

pub fn write_traces(path: &Path, traces: &[Trace]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["iter", "param", "value"])?;
    let len = traces.first().map_or(0, |t| t.values.len());
    for i in 0..len {
        for tr in traces {
            w.write_record([tr.iterations[i].to_string(), tr.name.clone(), num(tr.values[i])])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Traces from a long-format chain file, in order of first appearance.
pub fn read_chains(path: &Path) -> Result<Vec<Trace>> {
    let mut rdr = reader(path)?;
    let header = headers(path, &mut rdr)?;
    if header != ["iter", "param", "value"] {
        return Err(parse_err(path, 1, "expected header `iter,param,value`"));
    }
    let mut traces: Vec<Trace> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (line, rec) in records(path, &mut rdr)? {
        let iter_raw = rec.get(0).unwrap_or_default();
        let iter: usize = iter_raw
            .parse()
            .map_err(|_| parse_err(path, line, format!("`{iter_raw}` is not an iteration index")))?;
        let name = rec
            .get(1)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| parse_err(path, line, "missing parameter name"))?;
        let value = field_f64(path, line, &rec, 2, "value")?;
        let slot = *index.entry(name.to_string()).or_insert_with(|| {
            traces.push(Trace {
                name: name.to_string(),
                iterations: Vec::new(),
                values: Vec::new(),
            });
            traces.len() - 1
        });
        let tr = &mut traces[slot];
        if tr.iterations.last().is_some_and(|&prev| iter <= prev) {
            return Err(parse_err(path, line, format!("iteration {iter} of `{name}` is out of order")));
        }
        tr.iterations.push(iter);
        tr.values.push(value);
    }
    if traces.is_empty() {
        return Err(parse_err(path, 2, "no chain rows"));
    }
    Ok(traces)
}

/// `param,mean,sd,q025,q975`.
pub fn write_summary(path: &Path, summary: &[ParamSummary]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["param", "mean", "sd", "q025", "q975"])?;
    for s in summary {
        w.write_record([s.name.clone(), num(s.mean), num(s.sd), num(s.q025), num(s.q975)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<ParamSummary>> {
    let mut rdr = reader(path)?;
    let header = headers(path, &mut rdr)?;
    if header != ["param", "mean", "sd", "q025", "q975"] {
        return Err(parse_err(path, 1, "expected header `param,mean,sd,q025,q975`"));
    }
    records(path, &mut rdr)?
        .iter()
        .map(|(line, rec)| {
            Ok(ParamSummary {
                name: rec.get(0).unwrap_or_default().to_string(),
                mean: field_f64(path, *line, rec, 1, "mean")?,
                sd: field_f64(path, *line, rec, 2, "sd")?,
                q025: field_f64(path, *line, rec, 3, "q025")?,
                q975: field_f64(path, *line, rec, 4, "q975")?,
            })
        })
        .collect()
}

/// `t,truth,smoothed,reconstructed` for the target component; the `truth`
/// column is omitted when no trajectory is known.
pub fn write_curves(
    path: &Path,
    times: &[f64],
    truth: Option<&[f64]>,
    smoothed: &[f64],
    reconstructed: &[f64],
) -> Result<()> {
    let mut w = writer(path)?;
    if truth.is_some() {
        w.write_record(["t", "truth", "smoothed", "reconstructed"])?;
    } else {
        w.write_record(["t", "smoothed", "reconstructed"])?;
    }
    for (i, t) in times.iter().enumerate() {
        let mut row = vec![num(*t)];
        if let Some(x) = truth {
            row.push(num(x[i]));
        }
        row.push(num(smoothed[i]));
        row.push(num(reconstructed[i]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Table-shaped scenario output `param,truth,avg_mean,mse`. After the
/// parameter rows come `mse_x<k>` and `mse_g<k>` (value in `mse`) and the
/// replicate counts `replicates_used` / `replicates_failed` (in `avg_mean`).
pub fn write_scenario_summary(path: &Path, summary: &ScenarioSummary, target: usize) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["param", "truth", "avg_mean", "mse"])?;
    for p in &summary.params {
        w.write_record([p.name.clone(), opt(p.truth), num(p.avg_mean), opt(p.mse)])?;
    }
    let k = target + 1;
    w.write_record([format!("mse_x{k}"), String::new(), String::new(), num(summary.avg_mse_x)])?;
    w.write_record([format!("mse_g{k}"), String::new(), String::new(), num(summary.avg_mse_g)])?;
    w.write_record([
        "replicates_used".to_string(),
        String::new(),
        summary.replicates_used.to_string(),
        String::new(),
    ])?;
    w.write_record([
        "replicates_failed".to_string(),
        String::new(),
        summary.failures.len().to_string(),
        String::new(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Per-replicate posterior means and curve MSEs, `replicate,param,value`.
pub fn write_replicates(path: &Path, results: &[ReplicateResult]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["replicate", "param", "value"])?;
    for r in results {
        let idx = r.index.to_string();
        for s in &r.summary {
            w.write_record([idx.clone(), s.name.clone(), num(s.mean)])?;
        }
        w.write_record([idx.clone(), "mse_x".to_string(), num(r.mse_x)])?;
        w.write_record([idx, "mse_g".to_string(), num(r.mse_g)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `write_replicates` output back as `(replicate, param, value)`.
pub fn read_replicates(path: &Path) -> Result<Vec<(usize, String, f64)>> {
    let mut rdr = reader(path)?;
    let header = headers(path, &mut rdr)?;
    if header != ["replicate", "param", "value"] {
        return Err(parse_err(path, 1, "expected header `replicate,param,value`"));
    }
    records(path, &mut rdr)?
        .iter()
        .map(|(line, rec)| {
            let raw = rec.get(0).unwrap_or_default();
            let r = raw
                .parse()
                .map_err(|_| parse_err(path, *line, format!("`{raw}` is not a replicate index")))?;
            Ok((r, rec.get(1).unwrap_or_default().to_string(), field_f64(path, *line, rec, 2, "value")?))
        })
        .collect()
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    File::create(path)?.write_all(text.as_bytes())?;
    Ok(())
}
