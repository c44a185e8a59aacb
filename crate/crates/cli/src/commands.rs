use std::fs;
use std::path::Path;

use causal_filter::anneal::markers_to_json;
use causal_filter::{
    anneal_trace, causal_partition, corrected_curve, empirical_joint, excess_entropy,
    statistical_complexity, AnnealingSchedule, Builtin, Error, HiddenMarkovProcess, IbConfig,
    SymbolSeries,
};
use serde::Serialize;

use crate::output::Outputs;
use crate::AnnealArgs;

pub const CONFIG_ERROR: u8 = 2;
pub const DATA_ERROR: u8 = 3;

/// Tolerance for grouping exact morphs into causal states.
const CAUSAL_TOL: f64 = 1e-9;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: CONFIG_ERROR,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure {
            code: DATA_ERROR,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SeriesTooShort { .. }
            | Error::InvalidSymbol { .. }
            | Error::Parse(_)
            | Error::InvalidDistribution(_)
            | Error::SupportMismatch(..)
            | Error::UnassignableHistory(_)
            | Error::Io(_) => Failure::data(e.to_string()),
            _ => Failure::config(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

pub fn load_process(
    name: Option<&str>,
    spec: Option<&Path>,
) -> Result<HiddenMarkovProcess, Failure> {
    match (name, spec) {
        (Some(name), None) => Ok(HiddenMarkovProcess::builtin(name.parse::<Builtin>()?)),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            HiddenMarkovProcess::from_json(&text)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))
        }
        _ => Err(Failure::config(
            "exactly one of --process and --spec is required",
        )),
    }
}

pub fn annealing(
    a: &AnnealArgs,
    default_restarts: usize,
) -> Result<(AnnealingSchedule, IbConfig), Failure> {
    let sched = AnnealingSchedule {
        lambda_start: a.lambda_start,
        rate: a.rate,
        lambda_end: a.lambda_end,
        restarts: a.restarts.unwrap_or(default_restarts),
        seed: a.seed,
    };
    sched.validate()?;
    for (flag, v) in [
        ("--merge-tol", a.merge_tol),
        ("--weight-floor", a.weight_floor),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Failure::config(format!("{flag} must be positive, got {v}")));
        }
    }
    let cfg = IbConfig {
        merge_tol: a.merge_tol,
        weight_floor: a.weight_floor,
        ..IbConfig::default()
    };
    Ok((sched, cfg))
}

pub fn generate(
    p: &HiddenMarkovProcess,
    length: usize,
    seed: u64,
    out: &Path,
) -> Result<(), Failure> {
    let series = p.sample_series(length, seed)?;
    let mut files = Outputs::new(out)?;
    files.add("series.txt", series.to_file_string().into_bytes());
    files.commit()
}

#[derive(Serialize)]
struct Summary<'a> {
    process: &'a str,
    history_len: usize,
    future_len: usize,
    #[serde(rename = "E")]
    excess_entropy: f64,
    #[serde(rename = "C_mu")]
    statistical_complexity: f64,
    #[serde(rename = "H_past")]
    history_entropy: f64,
    states: usize,
}

pub fn exact(p: &HiddenMarkovProcess, k: usize, l: usize, out: &Path) -> Result<(), Failure> {
    let j = p.exact_joint(k, l)?;
    let partition = causal_partition(&j, CAUSAL_TOL);
    let summary = Summary {
        process: p.name().unwrap_or(""),
        history_len: k,
        future_len: l,
        excess_entropy: excess_entropy(&j),
        statistical_complexity: statistical_complexity(&partition),
        history_entropy: j.history_entropy(),
        states: partition.n_states(),
    };
    let mut joint_csv = Vec::new();
    j.write_csv(&mut joint_csv)?;
    let mut files = Outputs::new(out)?;
    files.add("joint.csv", joint_csv);
    files.add("partition.json", with_newline(partition.to_json()));
    files.add("summary.json", with_newline(to_json(&summary)));
    files.commit()
}

pub fn ocf(
    p: &HiddenMarkovProcess,
    k: usize,
    l: usize,
    sched: &AnnealingSchedule,
    cfg: &IbConfig,
    max_clusters: Option<usize>,
    out: &Path,
) -> Result<(), Failure> {
    let j = p.exact_joint(k, l)?;
    let n = max_clusters.unwrap_or_else(|| j.n_histories());
    let curve = anneal_trace(&j, sched, n, cfg)?;
    let mut curve_csv = Vec::new();
    curve.write_csv(&mut curve_csv)?;
    let mut files = Outputs::new(out)?;
    files.add("curve.csv", curve_csv);
    files.add(
        "markers.json",
        with_newline(markers_to_json(&curve.markers())),
    );
    files.add(
        "partition.json",
        with_newline(curve.terminal_partition.to_json()),
    );
    files.add("model.json", with_newline(curve.terminal_model.to_json()));
    files.commit()
}

/// The series for `oce`: read from `data`, or sampled from the process.
/// A data file takes its alphabet from the process when one is given and
/// otherwise from the largest digit present (at least binary).
pub fn oce_series(
    name: Option<&str>,
    spec: Option<&Path>,
    data: Option<&Path>,
    length: Option<usize>,
    seed: u64,
) -> Result<SymbolSeries, Failure> {
    let process = match (name, spec) {
        (None, None) => None,
        _ => Some(load_process(name, spec)?),
    };
    match (data, process, length) {
        (Some(path), process, _) => {
            let text = read(path)?;
            let alphabet = match &process {
                Some(p) => p.alphabet_size(),
                None => text
                    .trim_end()
                    .chars()
                    .filter_map(|c| c.to_digit(10))
                    .max()
                    .map_or(2, |d| (d as usize + 1).max(2)),
            };
            Ok(SymbolSeries::parse(&text, alphabet)?)
        }
        (None, Some(p), Some(t)) => Ok(p.sample_series(t, seed)?),
        (None, Some(_), None) => Err(Failure::config(
            "--length is required when sampling a process",
        )),
        (None, None, _) => Err(Failure::config(
            "either --data or --process/--spec with --length is required",
        )),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn oce(
    series: &SymbolSeries,
    k: usize,
    l: usize,
    sched: &AnnealingSchedule,
    cfg: &IbConfig,
    nc_min: usize,
    nc_max: usize,
    out: &Path,
) -> Result<(), Failure> {
    if nc_min == 0 || nc_min > nc_max {
        return Err(Failure::config(format!(
            "N_c range {nc_min}..={nc_max} must be nonempty and start at 1 or more"
        )));
    }
    let e = empirical_joint(series, k, l)?;
    let range: Vec<usize> = (nc_min..=nc_max).collect();
    let table = corrected_curve(&e, &range, sched, cfg)?;
    let mut selection = Vec::new();
    table.write_csv(&mut selection)?;
    let mut files = Outputs::new(out)?;
    files.add("selection.csv", selection);
    files.add(
        "partition.json",
        with_newline(table.chosen_partition().to_json()),
    );
    files.commit()
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("summary serializes")
}

fn with_newline(mut s: String) -> Vec<u8> {
    s.push('\n');
    s.into_bytes()
}
