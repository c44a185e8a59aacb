//! Deterministic annealing over λ and the information-plane curve it
//! traces.
//!
//! The chain starts from a perturbed uniform assignment at `lambda_start`,
//! converges, and then repeatedly lowers λ by the schedule rate, re-perturbs
//! the previous solution and converges again. At every λ the best of
//! `restarts` perturbations (by objective) is kept.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causal::Partition;
use crate::error::{Error, Result};
use crate::ib::{effective_states, hard_assignment, ib_converge, objective, IbConfig, SoftModel};
use crate::joint::{fmt_prob, WordJoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    pub lambda_start: f64,
    pub rate: f64,
    pub lambda_end: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        Self {
            lambda_start: 10.0,
            rate: 0.952,
            lambda_end: 1e-3,
            restarts: 4,
            seed: 0,
        }
    }
}

impl AnnealingSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda_start.is_finite()
            && self.lambda_end > 0.0
            && self.lambda_end < self.lambda_start
            && self.rate > 0.0
            && self.rate < 1.0
            && self.restarts >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "bad schedule {self:?}: need 0 < lambda_end < lambda_start, 0 < rate < 1, restarts ≥ 1"
            )))
        }
    }

    /// The λ values visited, from `lambda_start` down to the last value not
    /// below `lambda_end`.
    pub fn lambdas(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut l = self.lambda_start;
        while l >= self.lambda_end {
            out.push(l);
            l *= self.rate;
        }
        out
    }
}

/// Random stream for restart `restart` at annealing step `step`.
pub(crate) fn stream_rng(seed: u64, step: usize, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((step as u64) << 20) | restart as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub i_past_s: f64,
    pub i_s_future: f64,
    pub n_eff: usize,
    pub objective: f64,
    pub converged: bool,
}

/// First point at which a given effective state count appears.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub lambda: f64,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct InfoPlaneCurve {
    pub points: Vec<CurvePoint>,
    /// Converged model at the smallest λ.
    pub terminal_model: SoftModel,
    /// Hard assignment of the terminal model (the λ → 0 limit).
    pub terminal_partition: Partition,
    /// Best model found at each point, parallel to `points`.
    pub models: Vec<SoftModel>,
}

impl InfoPlaneCurve {
    pub fn markers(&self) -> BTreeMap<usize, Marker> {
        first_occurrence_markers(&self.points)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_curve_csv(&self.points, out)
    }
}

/// For each effective state count, the earliest (largest-λ) point with it.
pub fn first_occurrence_markers(points: &[CurvePoint]) -> BTreeMap<usize, Marker> {
    let mut out = BTreeMap::new();
    for (index, p) in points.iter().enumerate() {
        out.entry(p.n_eff).or_insert(Marker {
            lambda: p.lambda,
            index,
        });
    }
    out
}

pub fn markers_to_json(markers: &BTreeMap<usize, Marker>) -> String {
    serde_json::to_string_pretty(markers).expect("markers serialize")
}

pub fn markers_from_json(text: &str) -> Result<BTreeMap<usize, Marker>> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record([
        "lambda",
        "I_past_S",
        "I_S_future",
        "N_eff",
        "objective",
        "converged",
    ])
    .map_err(csv_err)?;
    for p in points {
        w.write_record([
            fmt_prob(p.lambda),
            fmt_prob(p.i_past_s),
            fmt_prob(p.i_s_future),
            p.n_eff.to_string(),
            fmt_prob(p.objective),
            u8::from(p.converged).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv<R: Read>(input: R) -> Result<Vec<CurvePoint>> {
    let mut rdr = csv::Reader::from_reader(input);
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>()
        != [
            "lambda",
            "I_past_S",
            "I_S_future",
            "N_eff",
            "objective",
            "converged",
        ]
    {
        return Err(Error::Parse(format!("unexpected curve header {header:?}")));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad number `{s}`: {e}")))
    };
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            Ok(CurvePoint {
                lambda: num(&rec[0])?,
                i_past_s: num(&rec[1])?,
                i_s_future: num(&rec[2])?,
                n_eff: rec[3]
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad N_eff `{}`: {e}", &rec[3])))?,
                objective: num(&rec[4])?,
                converged: match &rec[5] {
                    "1" => true,
                    "0" => false,
                    other => return Err(Error::Parse(format!("bad converged flag `{other}`"))),
                },
            })
        })
        .collect()
}

/// Index of the point with `n_eff` states that gains the most normalized
/// prediction per unit of normalized rate, i.e. maximizes
/// `I_S_future / e - I_past_S / h`. Ties go to the earlier point.
pub fn best_tradeoff_point(points: &[CurvePoint], n_eff: usize, h: f64, e: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate().filter(|(_, p)| p.n_eff == n_eff) {
        let gain = p.i_s_future / e - p.i_past_s / h;
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((i, gain));
        }
    }
    best.map(|(i, _)| i)
}

/// Traces the information plane for `j` with `max_clusters` clusters.
pub fn anneal_trace(
    j: &WordJoint,
    sched: &AnnealingSchedule,
    max_clusters: usize,
    cfg: &IbConfig,
) -> Result<InfoPlaneCurve> {
    sched.validate()?;
    if max_clusters == 0 {
        return Err(Error::InvalidParameter(
            "max_clusters must be at least 1".into(),
        ));
    }
    let lambdas = sched.lambdas();
    let mut points = Vec::with_capacity(lambdas.len());
    let mut models = Vec::with_capacity(lambdas.len());
    let mut current: Option<SoftModel> = None;
    for (step, &lambda) in lambdas.iter().enumerate() {
        let candidates: Vec<Result<(SoftModel, bool, f64)>> = (0..sched.restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(sched.seed, step, r);
                let init = match &current {
                    None => SoftModel::initial(j, max_clusters, lambda, cfg, &mut rng),
                    Some(prev) => {
                        let mut m = prev.clone();
                        m.set_lambda(lambda);
                        m.perturb_with(cfg, &mut rng);
                        m.refresh(j);
                        m
                    }
                };
                let (m, report) = ib_converge(j, init, cfg.tol, cfg.max_iter)?;
                let f = objective(j, &m, lambda);
                Ok((m, report.converged, f))
            })
            .collect();
        let mut best: Option<(SoftModel, bool, f64)> = None;
        for c in candidates {
            let c = c?;
            if best.as_ref().is_none_or(|b| c.2 > b.2) {
                best = Some(c);
            }
        }
        let (model, converged, f) = best.expect("at least one restart");
        let (i_past_s, i_s_future) = model.information(j);
        points.push(CurvePoint {
            lambda,
            i_past_s,
            i_s_future,
            n_eff: effective_states(&model, cfg.merge_tol, cfg.weight_floor),
            objective: f,
            converged,
        });
        models.push(model.clone());
        current = Some(model);
    }
    let terminal_model = current.expect("schedule visits at least one λ");
    let terminal_partition = hard_assignment(j, &terminal_model)?;
    Ok(InfoPlaneCurve {
        points,
        terminal_model,
        terminal_partition,
        models,
    })
}
