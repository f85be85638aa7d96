//! Data ingestion and run orchestration for the `msv` command.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use msv_core::{
    default_grid, format_sig, grid_search_detailed, simulate_path, FlatDayPolicy, GridOptions,
    GridOutcome, GridReport, PriorChoice, SimConfig, SymPosDef,
};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    Parse { row: usize, column: String, value: String },
    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },
    #[error("row {row}, column `{column}`: level {value} is not positive")]
    NonPositiveLevel { row: usize, column: String, value: f64 },
    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("{0}")]
    Shape(String),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error in {path}: {source}")]
    Data { path: PathBuf, source: DataError },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Data { .. } | Error::Io { .. } => 2,
            Error::Numerical(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Price levels; converted to log returns.
    Levels,
    #[default]
    Returns,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "levels" => Ok(Mode::Levels),
            "returns" => Ok(Mode::Returns),
            other => Err(format!("unknown mode `{other}` (expected levels or returns)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnsFrame {
    pub labels: Vec<String>,
    pub times: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl ReturnsFrame {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }
}

const MISSING: [&str; 6] = ["", "na", "nan", "n/a", "null", "none"];

fn is_missing(field: &str) -> bool {
    MISSING.contains(&field.trim().to_ascii_lowercase().as_str())
}

fn parse_field(field: &str, row: usize, column: &str) -> Result<f64, DataError> {
    if is_missing(field) {
        return Err(DataError::MissingValue { row, column: column.to_string() });
    }
    match field.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(DataError::Parse {
            row,
            column: column.to_string(),
            value: field.to_string(),
        }),
    }
}

/// Reads a header row plus numeric body. A first column whose first value is
/// not numeric is carried through as opaque time labels. Rows are numbered
/// from 1 for the first data row.
pub fn parse_csv<R: std::io::Read>(reader: R, mode: Mode) -> Result<ReturnsFrame, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let records: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>()?;
    if records.is_empty() {
        return Err(DataError::Shape("no data rows".into()));
    }
    let first = records[0].get(0).unwrap_or("");
    let has_time = !is_missing(first) && first.trim().parse::<f64>().is_err();
    let offset = usize::from(has_time);
    let labels: Vec<String> = header[offset..].to_vec();
    if labels.is_empty() {
        return Err(DataError::Shape("no numeric columns".into()));
    }

    let mut times = Vec::with_capacity(records.len());
    let mut raw = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let row = i + 1;
        if rec.len() != header.len() {
            return Err(DataError::Ragged { row, expected: header.len(), found: rec.len() });
        }
        times.push(if has_time { rec[0].trim().to_string() } else { row.to_string() });
        let values = labels
            .iter()
            .enumerate()
            .map(|(j, name)| parse_field(&rec[j + offset], row, name))
            .collect::<Result<Vec<f64>, _>>()?;
        raw.push(values);
    }

    let (times, values) = match mode {
        Mode::Returns => (times, raw),
        Mode::Levels => {
            for (i, row) in raw.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if v <= 0.0 {
                        return Err(DataError::NonPositiveLevel {
                            row: i + 1,
                            column: labels[j].clone(),
                            value: v,
                        });
                    }
                }
            }
            let returns = raw
                .windows(2)
                .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b.ln() - a.ln()).collect())
                .collect();
            (times[1..].to_vec(), returns)
        }
    };
    if values.is_empty() {
        return Err(DataError::Shape("levels mode needs at least two rows".into()));
    }
    Ok(ReturnsFrame { labels, times, values })
}

pub fn load_csv(path: &Path, mode: Mode) -> Result<ReturnsFrame, Error> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    parse_csv(file, mode).map_err(|source| Error::Data { path: path.to_path_buf(), source })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub input: PathBuf,
    pub mode: Mode,
    pub deltas: Vec<f64>,
    pub baseline: f64,
    pub prior_window: usize,
    pub flat_day: FlatDayPolicy,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Multiplier applied to every return after ingestion.
    pub scale: f64,
    pub threads: usize,
}

impl RunSpec {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            mode: Mode::Returns,
            deltas: default_grid(),
            baseline: 0.95,
            prior_window: 30,
            flat_day: FlatDayPolicy::Floor,
            out_dir: out_dir.into(),
            seed: 0,
            scale: 1.0,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.deltas.is_empty() {
            return Err(Error::Config("the discount grid is empty".into()));
        }
        for &d in &self.deltas {
            if !(d > 2.0 / 3.0 && d < 1.0) {
                return Err(Error::Config(format!("discount factor {d} is outside (2/3, 1)")));
            }
        }
        if !self.deltas.contains(&self.baseline) {
            return Err(Error::Config(format!("baseline {} is not in the grid", self.baseline)));
        }
        if self.prior_window < 2 {
            return Err(Error::Config("prior window must hold at least two observations".into()));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::Config(format!("scale {} must be positive", self.scale)));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub load_seconds: f64,
    pub grid_seconds: f64,
    pub write_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RowWarnings {
    pub delta: f64,
    pub flat_days: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub input: String,
    pub mode: Mode,
    pub deltas: Vec<f64>,
    pub baseline: f64,
    pub prior_window: usize,
    pub prior: String,
    pub flat_day: FlatDayPolicy,
    pub seed: u64,
    pub threads: usize,
    pub scaling: f64,
    pub n_obs: usize,
    pub p: usize,
    pub labels: Vec<String>,
    pub status: String,
    pub warnings: Vec<RowWarnings>,
    pub files: Vec<String>,
    pub timings: Timings,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub report: GridReport,
    pub manifest: Manifest,
}

fn delta_tag(d: f64) -> String {
    format_sig(d)
}

/// `time, sigma_<i>..., rho_<i>_<j>...` from the posterior means of one run.
pub fn series_csv(labels: &[String], times: &[String], means: &[SymPosDef<f64>]) -> String {
    let p = labels.len();
    let mut s = String::from("time");
    for l in labels {
        s.push_str(&format!(",sigma_{l}"));
    }
    for i in 0..p {
        for j in (i + 1)..p {
            s.push_str(&format!(",rho_{}_{}", labels[i], labels[j]));
        }
    }
    s.push('\n');
    for (t, m) in times.iter().zip(means) {
        let m = m.matrix();
        s.push_str(t);
        for i in 0..p {
            s.push(',');
            s.push_str(&format_sig(m[(i, i)].sqrt()));
        }
        for (_, _, r) in correlations(m) {
            s.push(',');
            s.push_str(&format_sig(r));
        }
        s.push('\n');
    }
    s
}

/// Upper-triangle correlations `m_ij / sqrt(m_ii m_jj)`, clamped to [-1, 1].
pub fn correlations(m: &msv_core::Mat<f64>) -> Vec<(usize, usize, f64)> {
    let p = m.nrows();
    let mut out = Vec::with_capacity(p * (p.saturating_sub(1)) / 2);
    for i in 0..p {
        for j in (i + 1)..p {
            let r = m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt();
            out.push((i, j, r.clamp(-1.0, 1.0)));
        }
    }
    out
}

fn bayes_csv(times: &[String], outcome: &GridOutcome<f64>, row: usize) -> Option<String> {
    let hu = outcome.bayes_factors[row].as_ref()?;
    let hy = outcome.bayes_factors_y[row].as_ref()?;
    let mut s = String::from("time,H,H_y\n");
    for ((t, a), b) in times.iter().zip(hu.values()).zip(hy.values()) {
        s.push_str(&format!("{t},{},{}\n", format_sig(*a), format_sig(*b)));
    }
    Some(s)
}

struct Writer {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), Error> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.written.push(path);
        Ok(())
    }

    fn names(&self) -> Vec<String> {
        self.written
            .iter()
            .map(|p| p.strip_prefix(&self.dir).unwrap_or(p).to_string_lossy().replace('\\', "/"))
            .collect()
    }

    fn remove_all(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

/// Runs the grid and writes every output. Failed grid rows are marked in the
/// report and manifest and turn into a numerical-failure error after the
/// outputs are written; I/O failures remove whatever was already written.
pub fn run(spec: &RunSpec) -> Result<RunSummary, Error> {
    spec.validate()?;
    let start = Instant::now();
    let mut frame = load_csv(&spec.input, spec.mode)?;
    if spec.scale != 1.0 {
        for row in &mut frame.values {
            row.iter_mut().for_each(|v| *v *= spec.scale);
        }
    }
    let load_seconds = start.elapsed().as_secs_f64();

    let opts = GridOptions {
        prior: PriorChoice::BurnIn { window: spec.prior_window },
        flat_day: spec.flat_day,
        record_posterior: true,
        threads: spec.threads,
    };
    let grid_start = Instant::now();
    let outcome = grid_search_detailed(&frame.values, &spec.deltas, spec.baseline, &opts)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let grid_seconds = grid_start.elapsed().as_secs_f64();

    let write_start = Instant::now();
    fs::create_dir_all(&spec.out_dir).map_err(io_err(&spec.out_dir))?;
    let mut writer = Writer { dir: spec.out_dir.clone(), written: Vec::new() };
    let result = write_outputs(&mut writer, &frame, &outcome);
    if let Err(e) = result {
        writer.remove_all();
        return Err(e);
    }

    let failed: Vec<&msv_core::GridRow> =
        outcome.report.rows.iter().filter(|r| r.error.is_some()).collect();
    for r in &outcome.report.rows {
        if r.flat_days > 0 {
            log::warn!("delta {}: {} flat days", r.delta, r.flat_days);
        }
        if let Some(e) = &r.error {
            log::warn!("delta {} failed: {e}", r.delta);
        }
    }
    let mut files = writer.names();
    files.push("manifest.json".into());
    let mut manifest = Manifest {
        input: spec.input.display().to_string(),
        mode: spec.mode,
        deltas: outcome.report.rows.iter().map(|r| r.delta).collect(),
        baseline: spec.baseline,
        prior_window: spec.prior_window,
        prior: "S0 = (n - 2) v I, v = pooled sample variance of the prior window".into(),
        flat_day: spec.flat_day,
        seed: spec.seed,
        threads: spec.threads,
        scaling: spec.scale,
        n_obs: frame.len(),
        p: frame.dim(),
        labels: frame.labels.clone(),
        status: if failed.is_empty() { "ok".into() } else { "partial".into() },
        warnings: outcome
            .report
            .rows
            .iter()
            .map(|r| RowWarnings { delta: r.delta, flat_days: r.flat_days, error: r.error.clone() })
            .collect(),
        files,
        timings: Timings {
            load_seconds,
            grid_seconds,
            write_seconds: 0.0,
            total_seconds: 0.0,
        },
    };
    manifest.timings.write_seconds = write_start.elapsed().as_secs_f64();
    manifest.timings.total_seconds = start.elapsed().as_secs_f64();
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = writer.write("manifest.json", &json) {
        writer.remove_all();
        return Err(e);
    }
    log::info!(
        "grid of {} discount factors on {} x {} returns in {:.3} s",
        manifest.deltas.len(),
        manifest.n_obs,
        manifest.p,
        grid_seconds
    );

    if !failed.is_empty() {
        let which: Vec<String> = failed.iter().map(|r| format_sig(r.delta)).collect();
        return Err(Error::Numerical(format!(
            "grid rows failed for delta = {} (outputs written and marked)",
            which.join(", ")
        )));
    }
    Ok(RunSummary { report: outcome.report, manifest })
}

fn write_outputs(
    writer: &mut Writer,
    frame: &ReturnsFrame,
    outcome: &GridOutcome<f64>,
) -> Result<(), Error> {
    writer.write("report.tsv", &outcome.report.to_tsv())?;
    let json = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    writer.write("report.json", &json)?;
    for (i, run) in outcome.runs.iter().enumerate() {
        let Ok(run) = run else { continue };
        let tag = delta_tag(run.delta);
        writer.write(
            &format!("series/delta_{tag}.csv"),
            &series_csv(&frame.labels, &frame.times, &run.posterior_means),
        )?;
        if let Some(csv) = bayes_csv(&frame.times, outcome, i) {
            writer.write(&format!("bayes/delta_{tag}.csv"), &csv)?;
        }
    }
    Ok(())
}

/// `p,N,delta` as given to `--simulate`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulateSpec {
    pub p: usize,
    pub n: usize,
    pub delta: f64,
}

impl FromStr for SimulateSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected p,N,delta, got `{s}`"));
        }
        let p = parts[0].parse().map_err(|_| format!("bad dimension `{}`", parts[0]))?;
        let n = parts[1].parse().map_err(|_| format!("bad length `{}`", parts[1]))?;
        let delta = parts[2].parse().map_err(|_| format!("bad discount `{}`", parts[2]))?;
        Ok(Self { p, n, delta })
    }
}

/// Simulates a path with `E(Sigma_0) = I` and writes `simulated.csv` into `out_dir`.
pub fn simulate_to_csv(spec: SimulateSpec, seed: u64, out_dir: &Path) -> Result<PathBuf, Error> {
    if spec.p == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    if !(spec.delta > 2.0 / 3.0 && spec.delta < 1.0) {
        return Err(Error::Config(format!("discount factor {} is outside (2/3, 1)", spec.delta)));
    }
    let cfg = SimConfig::with_unit_prior(spec.p, spec.delta, spec.n, seed)
        .map_err(|e| Error::Config(e.to_string()))?;
    let path = simulate_path(&cfg).map_err(|e| Error::Numerical(e.to_string()))?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let file = out_dir.join("simulated.csv");
    path.write_csv(spec.p, &file).map_err(io_err(&file))?;
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_become_log_differences() {
        let e = std::f64::consts::E;
        let text = format!("x\n1\n{e}\n{}\n", e * e);
        let f = parse_csv(text.as_bytes(), Mode::Levels).unwrap();
        assert_eq!(f.len(), 2);
        assert!((f.values[0][0] - 1.0).abs() < 1e-15);
        assert!((f.values[1][0] - 1.0).abs() < 1e-15);
        assert_eq!(f.times, vec!["2", "3"]);
    }

    #[test]
    fn constant_levels_give_zero_returns() {
        let f = parse_csv("a,b\n2,5\n2,5\n2,5\n".as_bytes(), Mode::Levels).unwrap();
        assert!(f.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn nan_is_missing_with_location() {
        let err = parse_csv("a,b\n0.1,0.2\n0.3,NaN\n".as_bytes(), Mode::Returns).unwrap_err();
        match err {
            DataError::MissingValue { row, column } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("{other:?}"),
        }
        assert!(err_text("a\n\n").is_err());
    }

    fn err_text(s: &str) -> Result<ReturnsFrame, DataError> {
        parse_csv(s.as_bytes(), Mode::Returns)
    }

    #[test]
    fn bad_numbers_and_levels() {
        assert!(matches!(
            err_text("a,b\n0.1,abc\n"),
            Err(DataError::Parse { row: 1, .. })
        ));
        assert!(matches!(
            parse_csv("a\n1\n0\n".as_bytes(), Mode::Levels),
            Err(DataError::NonPositiveLevel { row: 2, .. })
        ));
        assert!(matches!(err_text("a,b\n0.1\n"), Err(DataError::Ragged { .. })));
        assert!(matches!(err_text("a,b\n"), Err(DataError::Shape(_))));
    }

    #[test]
    fn time_column_is_carried() {
        let f = err_text("date,usd,gbp\n2001-01-02,0.1,0.2\n2001-01-03,0.3,0.4\n").unwrap();
        assert_eq!(f.labels, vec!["usd", "gbp"]);
        assert_eq!(f.times, vec!["2001-01-02", "2001-01-03"]);
        assert_eq!(f.values[1], vec![0.3, 0.4]);
    }

    #[test]
    fn diagonal_mean_has_zero_correlation() {
        let m = msv_core::Mat::from_diag(&[1.0, 2.0, 3.0]);
        assert!(correlations(&m).iter().all(|&(_, _, r)| r == 0.0));
    }

    #[test]
    fn equicorrelated_mean() {
        let (a, b) = (0.7, 0.3);
        let m = msv_core::Mat::from_fn(3, 3, |i, j| b + if i == j { a } else { 0.0 });
        for (_, _, r) in correlations(&m) {
            assert!((r - b / (a + b)).abs() < 1e-15);
        }
    }

    #[test]
    fn spec_validation() {
        let mut spec = RunSpec::new("x.csv", "out");
        assert!(spec.validate().is_ok());
        spec.deltas.clear();
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
        let mut spec = RunSpec::new("x.csv", "out");
        spec.baseline = 0.99;
        assert!(spec.validate().is_err());
        let mut spec = RunSpec::new("x.csv", "out");
        spec.deltas.push(0.6);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn parse_helpers() {
        let s: SimulateSpec = "4,100,0.95".parse().unwrap();
        assert_eq!(s, SimulateSpec { p: 4, n: 100, delta: 0.95 });
        assert!("4,100".parse::<SimulateSpec>().is_err());
    }
}
