//! Estimation from a finite series: sliding-window histograms, the
//! finite-sample correction and selection of the number of states.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::{anneal_trace, AnnealingSchedule};
use crate::causal::{statistical_complexity, Partition};
use crate::error::{Error, Result};
use crate::ib::IbConfig;
use crate::joint::{checked_pow, fmt_prob, word_index, JointSource, WordJoint, WordShape};
use crate::process::SymbolSeries;

/// Ties in corrected information closer than this go to the smaller `N_c`.
pub const SELECTION_TIE_TOL: f64 = 1e-12;

/// Independent fixed-`N_c` anneals per cluster count.
pub const DEFAULT_RESTARTS: usize = 10;

/// Sliding-window counts of (history, future) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalEstimate {
    counts: Vec<u64>,
    samples: usize,
    length: usize,
    joint: WordJoint,
}

impl EmpiricalEstimate {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, history: usize, future: usize) -> u64 {
        self.counts[history * self.joint.n_futures() + future]
    }

    /// Number of windows `M = T − (K + L − 1)`.
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn series_length(&self) -> usize {
        self.length
    }

    pub fn shape(&self) -> WordShape {
        self.joint.shape()
    }

    pub fn joint(&self) -> &WordJoint {
        &self.joint
    }
}

/// Histogram of every length-`K+L` window of the series, normalized by the
/// number of windows.
pub fn empirical_joint(
    s: &SymbolSeries,
    history_len: usize,
    future_len: usize,
) -> Result<EmpiricalEstimate> {
    let shape = WordShape::new(s.alphabet(), history_len, future_len)?;
    let window = history_len + future_len;
    if s.len() < window {
        return Err(Error::SeriesTooShort {
            len: s.len(),
            window,
        });
    }
    let samples = s.len() - (window - 1);
    let nf = shape.n_futures();
    let mut counts = vec![0u64; shape.n_histories() * nf];
    let k = s.alphabet();
    for w in s.symbols().windows(window) {
        let h = word_index(&w[..history_len], k);
        let f = word_index(&w[history_len..], k);
        counts[h * nf + f] += 1;
    }
    let matrix = counts.iter().map(|&c| c as f64 / samples as f64).collect();
    let joint = WordJoint::new(shape, matrix, JointSource::Empirical { samples })?;
    Ok(EmpiricalEstimate {
        counts,
        samples,
        length: s.len(),
        joint,
    })
}

/// Finite-sample overestimate of the retained predictive information,
/// `(k^L − 1) / (2 ln 2) · N_c / M` bits.
pub fn correction(n_c: usize, alphabet: usize, future_len: usize, samples: usize) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "sample count M must be at least 1".into(),
        ));
    }
    let futures = checked_pow(alphabet, future_len)
        .ok_or_else(|| Error::InvalidParameter("k^L overflows".into()))?;
    Ok((futures as f64 - 1.0) / (2.0 * std::f64::consts::LN_2) * n_c as f64 / samples as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub n_c: usize,
    pub i_raw: f64,
    pub correction: f64,
    pub i_corrected: f64,
}

/// Raw and corrected retained information per cluster count, with the
/// selected count and the winning partition of every row.
#[derive(Debug, Clone)]
pub struct SelectionTable {
    pub rows: Vec<SelectionRow>,
    pub chosen: usize,
    pub partitions: Vec<Partition>,
}

impl SelectionTable {
    pub fn chosen_row(&self) -> &SelectionRow {
        self.rows
            .iter()
            .find(|r| r.n_c == self.chosen)
            .expect("chosen N_c is a row")
    }

    pub fn chosen_partition(&self) -> &Partition {
        let i = self
            .rows
            .iter()
            .position(|r| r.n_c == self.chosen)
            .expect("chosen N_c is a row");
        &self.partitions[i]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["N_c", "I_raw", "correction", "I_corrected", "chosen"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.n_c.to_string(),
                fmt_prob(r.i_raw),
                fmt_prob(r.correction),
                fmt_prob(r.i_corrected),
                u8::from(r.n_c == self.chosen).to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the selection CSV into rows and the chosen count.
    pub fn read_csv<R: Read>(input: R) -> Result<(Vec<SelectionRow>, usize)> {
        let mut rdr = csv::Reader::from_reader(input);
        let csv_err = |e: csv::Error| Error::Parse(e.to_string());
        let header = rdr.headers().map_err(csv_err)?.clone();
        if header.iter().collect::<Vec<_>>()
            != ["N_c", "I_raw", "correction", "I_corrected", "chosen"]
        {
            return Err(Error::Parse(format!(
                "unexpected selection header {header:?}"
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number `{s}`: {e}")))
        };
        let mut rows = Vec::new();
        let mut chosen = None;
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let n_c: usize = rec[0]
                .parse()
                .map_err(|e| Error::Parse(format!("bad N_c `{}`: {e}", &rec[0])))?;
            match &rec[4] {
                "1" if chosen.is_none() => chosen = Some(n_c),
                "0" => {}
                other => return Err(Error::Parse(format!("bad chosen flag `{other}`"))),
            }
            rows.push(SelectionRow {
                n_c,
                i_raw: num(&rec[1])?,
                correction: num(&rec[2])?,
                i_corrected: num(&rec[3])?,
            });
        }
        let chosen = chosen.ok_or_else(|| Error::Parse("no row is marked chosen".into()))?;
        Ok((rows, chosen))
    }
}

/// Index of the best value, ties within [`SELECTION_TIE_TOL`] going to the
/// earliest entry.
pub fn argmax_with_ties(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b] + SELECTION_TIE_TOL) {
            best = Some(i);
        }
    }
    best
}

fn mix_seed(seed: u64, n_c: usize, restart: usize) -> u64 {
    // splitmix64 finalizer over the packed inputs
    let mut z = seed
        ^ (n_c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (restart as u64)
            .wrapping_mul(0xBF58_476D_1CE4_E5B9)
            .rotate_left(29);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Anneals with exactly `n_c` clusters `sched.restarts` times (one chain
/// per restart) and returns the λ → 0 partition with the largest
/// `I[S; future]`, ties going to the earliest restart.
pub fn best_fixed_partition(
    j: &WordJoint,
    n_c: usize,
    sched: &AnnealingSchedule,
    cfg: &IbConfig,
) -> Result<Partition> {
    if n_c == 0 {
        return Err(Error::InvalidParameter("N_c must be at least 1".into()));
    }
    sched.validate()?;
    let runs: Vec<Result<Partition>> = (0..sched.restarts)
        .into_par_iter()
        .map(|r| {
            let chain = AnnealingSchedule {
                restarts: 1,
                seed: mix_seed(sched.seed, n_c, r),
                ..*sched
            };
            Ok(anneal_trace(j, &chain, n_c, cfg)?.terminal_partition)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let info: Vec<f64> = runs.iter().map(Partition::predictive_information).collect();
    let best = argmax_with_ties(&info).expect("at least one restart");
    Ok(runs.into_iter().nth(best).expect("index in range"))
}

/// Runs the fixed-`N_c` optimization for every count in `n_range`, applies
/// the finite-sample correction and picks the count with the largest
/// corrected information.
pub fn corrected_curve(
    e: &EmpiricalEstimate,
    n_range: &[usize],
    sched: &AnnealingSchedule,
    cfg: &IbConfig,
) -> Result<SelectionTable> {
    if n_range.is_empty() {
        return Err(Error::InvalidParameter("empty N_c range".into()));
    }
    let mut ns = n_range.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns[0] == 0 {
        return Err(Error::InvalidParameter("N_c must be at least 1".into()));
    }
    let shape = e.shape();
    let mut partitions = ns
        .par_iter()
        .map(|&n| best_fixed_partition(e.joint(), n, sched, cfg))
        .collect::<Vec<Result<Partition>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    // a partition with fewer states is also feasible for every larger N_c
    for i in 1..partitions.len() {
        let prev = partitions[i - 1].predictive_information();
        if prev > partitions[i].predictive_information() + SELECTION_TIE_TOL {
            partitions[i] = partitions[i - 1].clone();
        }
    }
    let rows = ns
        .iter()
        .zip(&partitions)
        .map(|(&n_c, p)| {
            let i_raw = p.predictive_information();
            let corr = correction(n_c, shape.alphabet, shape.future_len, e.samples())?;
            Ok(SelectionRow {
                n_c,
                i_raw,
                correction: corr,
                i_corrected: i_raw - corr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let corrected: Vec<f64> = rows.iter().map(|r| r.i_corrected).collect();
    let chosen = rows[argmax_with_ties(&corrected).expect("nonempty")].n_c;
    Ok(SelectionTable {
        rows,
        chosen,
        partitions,
    })
}

/// `H[S]` of the winning λ → 0 partition with `n_c` clusters.
pub fn estimated_complexity(
    e: &EmpiricalEstimate,
    n_c: usize,
    sched: &AnnealingSchedule,
    cfg: &IbConfig,
) -> Result<f64> {
    Ok(statistical_complexity(&best_fixed_partition(
        e.joint(),
        n_c,
        sched,
        cfg,
    )?))
}
