//! Self-consistent information-bottleneck iteration over histories.
//!
//! A [`SoftModel`] assigns each history a distribution over clusters. One
//! sweep recomputes the assignment from the current cluster weights and
//! morphs,
//!
//! ```text
//! q(s | past) ∝ p(s) · 2^(−D[P(future|past) ‖ P(future|s)] / λ)
//! ```
//!
//! and then refreshes `p(s) = Σ q(s|past) P(past)` and the morphs
//! `P(future|s) = Σ P(future, past) q(s|past) / p(s)`. Divergences and
//! informations are in bits, so the Boltzmann factor uses base 2; with that
//! pairing each sweep never decreases `I[S;future] − λ·I[past;S]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::causal::Partition;
use crate::error::{Error, Result};
use crate::info_theory::{entropy_of, mutual_information_of, total_variation};
use crate::joint::WordJoint;

/// Clusters lighter than this keep their previous morph.
pub const DORMANT_WEIGHT: f64 = 1e-12;
/// Divergence gap (bits) under which two clusters tie in the hard
/// assignment.
pub const TIE_TOL: f64 = 1e-10;

/// How annealing warm starts break cluster symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// Independent factor `1 + σu` for every (history, cluster) entry.
    Independent,
    /// Each group of coincident clusters is split into two halves that
    /// receive opposite factors `1 ± σu` per history, so an effective state
    /// can bifurcate into at most two per warm start.
    Split,
}

/// Numerical knobs shared by the optimizer and the annealing driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub merge_tol: f64,
    pub weight_floor: f64,
    pub noise: f64,
    pub perturbation: Perturbation,
}

impl Default for IbConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            merge_tol: 1e-3,
            weight_floor: 1e-6,
            noise: 0.01,
            perturbation: Perturbation::Split,
        }
    }
}

/// Stochastic assignment of histories to clusters with its induced cluster
/// weights and morphs.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftModel {
    n_histories: usize,
    n_clusters: usize,
    n_futures: usize,
    q: Vec<f64>,
    p_s: Vec<f64>,
    morphs: Vec<Vec<f64>>,
    dormant: Vec<bool>,
    lambda: f64,
}

impl SoftModel {
    /// Uniform assignment rows perturbed by multiplicative noise
    /// `1 + noise·u`, `u ~ U(−1, 1)`, then renormalized and refreshed.
    pub fn perturbed_uniform<R: Rng + ?Sized>(
        j: &WordJoint,
        n_clusters: usize,
        lambda: f64,
        noise: f64,
        rng: &mut R,
    ) -> Self {
        assert!(n_clusters > 0, "a model needs at least one cluster");
        let mut m = Self::blank(j, n_clusters, lambda);
        m.perturb(noise, rng);
        m.refresh(j);
        m
    }

    /// Uniform assignment followed by the warm-start perturbation of `cfg`.
    pub fn initial<R: Rng + ?Sized>(
        j: &WordJoint,
        n_clusters: usize,
        lambda: f64,
        cfg: &IbConfig,
        rng: &mut R,
    ) -> Self {
        assert!(n_clusters > 0, "a model needs at least one cluster");
        let mut m = Self::blank(j, n_clusters, lambda);
        m.perturb_with(cfg, rng);
        m.refresh(j);
        m
    }

    /// Deterministic model placing each history in its partition state.
    /// Extra clusters start dormant with the future marginal as morph.
    pub fn from_partition(j: &WordJoint, p: &Partition, n_clusters: usize, lambda: f64) -> Self {
        assert!(
            n_clusters >= p.n_states(),
            "not enough clusters for the partition"
        );
        let mut m = Self::blank(j, n_clusters, lambda);
        for h in 0..m.n_histories {
            if let Some(s) = p.state_of(h) {
                let row = m.row_mut(h);
                row.fill(0.0);
                row[s] = 1.0;
            }
        }
        m.refresh(j);
        m
    }

    /// Builds a model from an explicit assignment matrix (rows over
    /// histories). Rows are renormalized.
    pub fn from_assignments(j: &WordJoint, q: Vec<Vec<f64>>, lambda: f64) -> Result<Self> {
        if q.len() != j.n_histories() || q.is_empty() {
            return Err(Error::SupportMismatch(q.len(), j.n_histories()));
        }
        let n_clusters = q[0].len();
        if n_clusters == 0 || q.iter().any(|r| r.len() != n_clusters) {
            return Err(Error::InvalidParameter("ragged assignment matrix".into()));
        }
        let mut m = Self::blank(j, n_clusters, lambda);
        for (h, row) in q.into_iter().enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) || total <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "invalid assignment row {h}"
                )));
            }
            for (d, v) in m.row_mut(h).iter_mut().zip(row) {
                *d = v / total;
            }
        }
        m.refresh(j);
        Ok(m)
    }

    fn blank(j: &WordJoint, n_clusters: usize, lambda: f64) -> Self {
        let nh = j.n_histories();
        let nf = j.n_futures();
        Self {
            n_histories: nh,
            n_clusters,
            n_futures: nf,
            q: vec![1.0 / n_clusters as f64; nh * n_clusters],
            p_s: vec![1.0 / n_clusters as f64; n_clusters],
            morphs: vec![j.future_marginal(); n_clusters],
            dormant: vec![false; n_clusters],
            lambda,
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn n_histories(&self) -> usize {
        self.n_histories
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn set_lambda(&mut self, lambda: f64) {
        self.lambda = lambda;
    }

    /// `q(· | history)`.
    pub fn row(&self, history: usize) -> &[f64] {
        &self.q[history * self.n_clusters..(history + 1) * self.n_clusters]
    }

    fn row_mut(&mut self, history: usize) -> &mut [f64] {
        &mut self.q[history * self.n_clusters..(history + 1) * self.n_clusters]
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p_s(&self) -> &[f64] {
        &self.p_s
    }

    pub fn morphs(&self) -> &[Vec<f64>] {
        &self.morphs
    }

    pub fn dormant(&self) -> &[bool] {
        &self.dormant
    }

    /// Multiplies every assignment by `1 + noise·u`, `u ~ U(−1, 1)`, and
    /// renormalizes rows. Zero entries stay zero. Call
    /// [`refresh`](Self::refresh) afterwards.
    pub fn perturb<R: Rng + ?Sized>(&mut self, noise: f64, rng: &mut R) {
        if noise == 0.0 {
            return;
        }
        for row in self.q.chunks_mut(self.n_clusters) {
            for v in row.iter_mut() {
                *v *= 1.0 + noise * rng.gen_range(-1.0..1.0);
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
        }
    }

    /// Deterministic-annealing split: every group of coincident clusters
    /// (morphs within `merge_tol`, grouped as in [`effective_states`]) is
    /// merged into its lowest-index member, and the freed clusters are handed
    /// out as split partners, heaviest group first. A group and its partner
    /// share the group's assignments, scaled per history by `1 + noise·u`
    /// and `1 − noise·u` with `u ~ U(−1, 1)`. Call [`refresh`](Self::refresh)
    /// afterwards.
    pub fn perturb_split<R: Rng + ?Sized>(&mut self, noise: f64, merge_tol: f64, rng: &mut R) {
        let c = self.n_clusters;
        let groups = coincident_groups(self, merge_tol);
        let reps: Vec<usize> = groups.iter().map(|g| g[0]).collect();
        for row in self.q.chunks_mut(c) {
            for g in &groups {
                let total: f64 = g.iter().map(|&s| row[s]).sum();
                g.iter().for_each(|&s| row[s] = 0.0);
                row[g[0]] = total;
            }
            // Dormant clusters hold no meaningful mass.
            for (r, &dormant) in row.iter_mut().zip(&self.dormant) {
                if dormant {
                    *r = 0.0;
                }
            }
        }
        let mut free: Vec<usize> = (0..c).filter(|s| !reps.contains(s)).collect();
        let mut order: Vec<usize> = (0..groups.len()).collect();
        order.sort_by(|&a, &b| {
            let wa: f64 = groups[a].iter().map(|&s| self.p_s[s]).sum();
            let wb: f64 = groups[b].iter().map(|&s| self.p_s[s]).sum();
            wb.total_cmp(&wa).then(a.cmp(&b))
        });
        free.reverse();
        let pairs: Vec<(usize, usize)> = order
            .into_iter()
            .map_while(|g| free.pop().map(|partner| (reps[g], partner)))
            .collect();
        for row in self.q.chunks_mut(c) {
            for &(rep, partner) in &pairs {
                let u: f64 = rng.gen_range(-1.0..1.0);
                let half = 0.5 * row[rep];
                row[rep] = half * (1.0 + noise * u);
                row[partner] = half * (1.0 - noise * u);
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
        }
    }

    /// Applies the warm-start perturbation selected in `cfg`.
    pub fn perturb_with<R: Rng + ?Sized>(&mut self, cfg: &IbConfig, rng: &mut R) {
        match cfg.perturbation {
            Perturbation::Independent => self.perturb(cfg.noise, rng),
            Perturbation::Split => self.perturb_split(cfg.noise, cfg.merge_tol, rng),
        }
    }

    /// Recomputes cluster weights and morphs from the assignments.
    pub fn refresh(&mut self, j: &WordJoint) {
        let c = self.n_clusters;
        let marginal = j.history_marginal();
        self.p_s.fill(0.0);
        let mut acc = vec![vec![0.0; self.n_futures]; c];
        for (h, row) in j.rows().enumerate() {
            if marginal[h] <= 0.0 {
                continue;
            }
            let qh = &self.q[h * c..(h + 1) * c];
            for s in 0..c {
                if qh[s] == 0.0 {
                    continue;
                }
                self.p_s[s] += qh[s] * marginal[h];
                for (a, v) in acc[s].iter_mut().zip(row) {
                    *a += qh[s] * v;
                }
            }
        }
        for (s, morph) in self.morphs.iter_mut().enumerate() {
            let w = self.p_s[s];
            self.dormant[s] = w < DORMANT_WEIGHT;
            if !self.dormant[s] {
                for (m, a) in morph.iter_mut().zip(&acc[s]) {
                    *m = a / w;
                }
            }
        }
    }

    /// `(I[past; S], I[S; future])` of the joint induced by the assignments.
    pub fn information(&self, j: &WordJoint) -> (f64, f64) {
        let c = self.n_clusters;
        let nf = self.n_futures;
        let marginal = j.history_marginal();
        let mut past_s = vec![0.0; self.n_histories * c];
        let mut s_future = vec![0.0; c * nf];
        for (h, row) in j.rows().enumerate() {
            if marginal[h] <= 0.0 {
                continue;
            }
            let qh = self.row(h);
            for s in 0..c {
                if qh[s] == 0.0 {
                    continue;
                }
                past_s[h * c + s] = marginal[h] * qh[s];
                for (f, v) in row.iter().enumerate() {
                    s_future[s * nf + f] += qh[s] * v;
                }
            }
        }
        (
            mutual_information_of(&past_s, self.n_histories, c),
            mutual_information_of(&s_future, c, nf),
        )
    }

    /// Largest deviation of an assignment row sum from one.
    pub fn max_row_error(&self) -> f64 {
        self.q
            .chunks(self.n_clusters)
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            lambda: self.lambda,
            p_s: self.p_s.clone(),
            morphs: self.morphs.clone(),
            q: self
                .q
                .chunks(self.n_clusters)
                .map(<[f64]>::to_vec)
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model serializes")
    }

    /// Restores a model from its JSON document. Weights and morphs are
    /// taken verbatim; call [`refresh`](Self::refresh) to re-derive them.
    pub fn from_json(text: &str, j: &WordJoint) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        let mut m = Self::from_assignments(j, doc.q, doc.lambda)?;
        if doc.p_s.len() != m.n_clusters || doc.morphs.len() != m.n_clusters {
            return Err(Error::Parse("p_s/morphs do not match q".into()));
        }
        if doc.morphs.iter().any(|r| r.len() != m.n_futures) {
            return Err(Error::Parse(
                "morph length does not match the future space".into(),
            ));
        }
        m.dormant = doc.p_s.iter().map(|&w| w < DORMANT_WEIGHT).collect();
        m.p_s = doc.p_s;
        m.morphs = doc.morphs;
        Ok(m)
    }
}

/// JSON layout of a soft model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub lambda: f64,
    pub p_s: Vec<f64>,
    pub morphs: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

/// Outcome of [`ib_converge`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub objective: f64,
    pub max_change: f64,
    pub converged: bool,
    /// Largest decrease of the objective between consecutive sweeps
    /// (zero or negative when the trace was monotone).
    pub worst_objective_drop: f64,
}

/// Per-joint quantities reused across sweeps.
struct Problem {
    support: Vec<usize>,
    conds: Vec<Vec<f64>>,
    neg_entropy: Vec<f64>,
}

impl Problem {
    fn new(j: &WordJoint) -> Self {
        let support = j.support();
        let conds: Vec<Vec<f64>> = support
            .iter()
            .map(|&h| j.conditional(h).expect("support rows have mass"))
            .collect();
        let neg_entropy = conds.iter().map(|c| -entropy_of(c)).collect();
        Self {
            support,
            conds,
            neg_entropy,
        }
    }

    /// `D[P(future | support[i]) ‖ morph]` in bits.
    fn divergence(&self, i: usize, morph: &[f64]) -> f64 {
        let mut cross = 0.0;
        for (&c, &m) in self.conds[i].iter().zip(morph) {
            if c > 0.0 {
                if m <= 0.0 {
                    return f64::INFINITY;
                }
                cross += c * m.log2();
            }
        }
        (self.neg_entropy[i] - cross).max(0.0)
    }

    /// Rewrites the assignment rows in place; returns the largest change.
    fn update_assignments(&self, m: &mut SoftModel) -> f64 {
        let c = m.n_clusters;
        let scale = std::f64::consts::LN_2 / m.lambda;
        let mut logw = vec![0.0; c];
        let mut max_change: f64 = 0.0;
        for (i, &h) in self.support.iter().enumerate() {
            for (s, lw) in logw.iter_mut().enumerate() {
                *lw = if m.p_s[s] > 0.0 {
                    m.p_s[s].ln() - self.divergence(i, &m.morphs[s]) * scale
                } else {
                    f64::NEG_INFINITY
                };
            }
            let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if top == f64::NEG_INFINITY {
                // Every morph excludes this history; keep its row.
                continue;
            }
            let mut z = 0.0;
            for w in logw.iter_mut() {
                *w = (*w - top).exp();
                z += *w;
            }
            let row = m.row_mut(h);
            for (old, w) in row.iter_mut().zip(&logw) {
                let new = w / z;
                max_change = max_change.max((new - *old).abs());
                *old = new;
            }
        }
        max_change
    }
}

fn check_lambda(m: &SoftModel) -> Result<()> {
    if m.lambda > 0.0 && m.lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "λ = {} must be positive and finite; use hard_assignment for λ → 0",
            m.lambda
        )))
    }
}

/// One full sweep: new assignments, then refreshed weights and morphs.
pub fn ib_step(j: &WordJoint, m: &SoftModel) -> Result<SoftModel> {
    check_lambda(m)?;
    let mut next = m.clone();
    Problem::new(j).update_assignments(&mut next);
    next.refresh(j);
    Ok(next)
}

/// Sweeps until no assignment moves by more than `tol` or `max_iter`
/// sweeps have run. Non-convergence is reported, not raised.
pub fn ib_converge(
    j: &WordJoint,
    init: SoftModel,
    tol: f64,
    max_iter: usize,
) -> Result<(SoftModel, ConvergenceReport)> {
    check_lambda(&init)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let problem = Problem::new(j);
    let mut m = init;
    let mut prev = objective(j, &m, m.lambda);
    let mut worst_drop = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut max_change = f64::INFINITY;
    while iterations < max_iter {
        max_change = problem.update_assignments(&mut m);
        m.refresh(j);
        iterations += 1;
        let f = objective(j, &m, m.lambda);
        worst_drop = worst_drop.max(prev - f);
        prev = f;
        if max_change <= tol {
            break;
        }
    }
    let report = ConvergenceReport {
        iterations,
        objective: prev,
        max_change,
        converged: max_change <= tol,
        worst_objective_drop: if iterations == 0 { 0.0 } else { worst_drop },
    };
    Ok((m, report))
}

/// Deterministic limit: each positive-mass history goes to the live cluster
/// with the smallest divergence, ties (within [`TIE_TOL`]) to the lowest
/// index. Weights and morphs are recomputed from the resulting partition.
pub fn hard_assignment(j: &WordJoint, m: &SoftModel) -> Result<Partition> {
    let problem = Problem::new(j);
    let mut labels = vec![None; j.n_histories()];
    for (i, &h) in problem.support.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for s in 0..m.n_clusters {
            if m.dormant[s] {
                continue;
            }
            let d = problem.divergence(i, &m.morphs[s]);
            if d.is_finite() && best.is_none_or(|(_, bd)| d < bd - TIE_TOL) {
                best = Some((s, d));
            }
        }
        match best {
            Some((s, _)) => labels[h] = Some(s),
            None => return Err(Error::UnassignableHistory(h)),
        }
    }
    Partition::from_labels(j, &labels)
}

/// `I[S; future] − λ·I[past; S]` in bits. For deterministic assignments the
/// coding rate equals `H[S]`.
pub fn objective(j: &WordJoint, m: &SoftModel, lambda: f64) -> f64 {
    let (rate, relevance) = m.information(j);
    relevance - lambda * rate
}

/// Deterministic-partition objective `I[S; future] − λ·H[S]`.
pub fn deterministic_objective(p: &Partition, lambda: f64) -> f64 {
    p.predictive_information() - lambda * entropy_of(p.state_weights())
}

/// Number of distinguishable, non-negligible clusters: live clusters are
/// merged greedily (in index order) into the first representative whose
/// morph lies within `merge_tol` in total variation, and merged groups with
/// total weight above `weight_floor` are counted.
pub fn effective_states(m: &SoftModel, merge_tol: f64, weight_floor: f64) -> usize {
    coincident_groups(m, merge_tol)
        .iter()
        .filter(|g| g.iter().map(|&s| m.p_s[s]).sum::<f64>() > weight_floor)
        .count()
}

/// Live clusters grouped greedily, in index order, with the first cluster
/// of each group as its representative.
fn coincident_groups(m: &SoftModel, merge_tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for s in 0..m.n_clusters {
        if m.dormant[s] {
            continue;
        }
        match groups
            .iter_mut()
            .find(|g| total_variation(&m.morphs[g[0]], &m.morphs[s]) <= merge_tol)
        {
            Some(g) => g.push(s),
            None => groups.push(vec![s]),
        }
    }
    groups
}
