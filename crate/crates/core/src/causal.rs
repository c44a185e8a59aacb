//! Deterministic partitions of histories and the exact causal-state oracle.
//!
//! A [`Partition`] maps every positive-mass history to one state and stores
//! the state weights and morphs `P(future | state)` induced by the joint.
//! Causal states group histories whose conditional futures agree; any
//! refinement of that grouping is a prescient rival.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_theory::{self, total_variation};
use crate::joint::{WordJoint, WordShape};

/// Deterministic assignment of histories to states with induced statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    shape: WordShape,
    assignment: Vec<Option<usize>>,
    state_weights: Vec<f64>,
    morphs: Vec<Vec<f64>>,
}

impl Partition {
    /// Builds a partition from arbitrary group labels. Zero-mass histories
    /// are left unassigned whatever label they carry. States are relabeled
    /// in order of their lowest-index member.
    pub fn from_labels(j: &WordJoint, labels: &[Option<usize>]) -> Result<Self> {
        if labels.len() != j.n_histories() {
            return Err(Error::SupportMismatch(labels.len(), j.n_histories()));
        }
        let marginal = j.history_marginal();
        let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
        let mut assignment = vec![None; labels.len()];
        for (h, label) in labels.iter().enumerate() {
            if marginal[h] <= 0.0 {
                continue;
            }
            let Some(label) = *label else {
                return Err(Error::InvalidParameter(format!(
                    "positive-mass history {} has no state",
                    j.shape().history_word(h)
                )));
            };
            let next = relabel.len();
            assignment[h] = Some(*relabel.entry(label).or_insert(next));
        }
        let n = relabel.len();
        let nf = j.n_futures();
        let mut state_weights = vec![0.0; n];
        let mut morphs = vec![vec![0.0; nf]; n];
        for (h, s) in assignment.iter().enumerate() {
            if let Some(s) = *s {
                state_weights[s] += marginal[h];
                for (m, v) in morphs[s].iter_mut().zip(j.row(h)) {
                    *m += v;
                }
            }
        }
        for (m, w) in morphs.iter_mut().zip(&state_weights) {
            m.iter_mut().for_each(|v| *v /= w);
        }
        Ok(Self {
            shape: j.shape(),
            assignment,
            state_weights,
            morphs,
        })
    }

    /// The finest prescient rival: every positive-mass history is its own
    /// state.
    pub fn identity(j: &WordJoint) -> Self {
        let labels: Vec<Option<usize>> = (0..j.n_histories()).map(Some).collect();
        Self::from_labels(j, &labels).expect("labels cover every history")
    }

    pub fn shape(&self) -> WordShape {
        self.shape
    }

    pub fn n_states(&self) -> usize {
        self.state_weights.len()
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn state_of(&self, history: usize) -> Option<usize> {
        self.assignment[history]
    }

    pub fn state_weights(&self) -> &[f64] {
        &self.state_weights
    }

    pub fn morphs(&self) -> &[Vec<f64>] {
        &self.morphs
    }

    pub fn members(&self, state: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Some(state))
            .map(|(h, _)| h)
            .collect()
    }

    /// `I[state; future]` of the joint induced by the partition.
    pub fn predictive_information(&self) -> f64 {
        let nf = self.shape.n_futures();
        let joint: Vec<f64> = self
            .state_weights
            .iter()
            .zip(&self.morphs)
            .flat_map(|(w, m)| m.iter().map(move |v| w * v))
            .collect();
        info_theory::mutual_information_of(&joint, self.n_states(), nf)
    }

    /// True when both partitions group the same histories together.
    /// Labels are canonical, so this is plain equality of assignments.
    pub fn same_grouping(&self, other: &Partition) -> bool {
        self.assignment == other.assignment
    }

    /// Largest absolute morph difference between corresponding states of
    /// two partitions with the same grouping.
    pub fn max_morph_deviation(&self, other: &Partition) -> f64 {
        self.morphs
            .iter()
            .zip(&other.morphs)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Largest total variation, over states, between `P(past, future | σ)`
    /// and `P(past | σ) P(future | σ)`.
    pub fn shielding_violation(&self, j: &WordJoint) -> f64 {
        let marginal = j.history_marginal();
        (0..self.n_states())
            .map(|s| {
                let w = self.state_weights[s];
                self.members(s)
                    .into_iter()
                    .map(|h| {
                        let ph = marginal[h] / w;
                        0.5 * j
                            .row(h)
                            .iter()
                            .zip(&self.morphs[s])
                            .map(|(pxf, mf)| (pxf / w - ph * mf).abs())
                            .sum::<f64>()
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_document(&self) -> PartitionDocument {
        let states = (0..self.n_states())
            .map(|s| StateRecord {
                label: s,
                weight: self.state_weights[s],
                members: self
                    .members(s)
                    .into_iter()
                    .map(|h| self.shape.history_word(h))
                    .collect(),
                morph: self.morphs[s]
                    .iter()
                    .enumerate()
                    .map(|(f, &p)| (self.shape.future_word(f), p))
                    .collect(),
            })
            .collect();
        PartitionDocument { states }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("partition serializes")
    }

    /// Rebuilds a partition from its JSON document. Weights and morphs are
    /// taken from the document; the shape supplies the word spaces.
    pub fn from_json(text: &str, shape: WordShape) -> Result<Self> {
        let doc: PartitionDocument = serde_json::from_str(text)?;
        let n = doc.states.len();
        let mut assignment = vec![None; shape.n_histories()];
        let mut state_weights = vec![0.0; n];
        let mut morphs = vec![vec![0.0; shape.n_futures()]; n];
        for rec in doc.states {
            if rec.label >= n {
                return Err(Error::Parse(format!(
                    "state label {} out of range",
                    rec.label
                )));
            }
            state_weights[rec.label] = rec.weight;
            for word in &rec.members {
                let h = shape.history_index(word)?;
                if assignment[h].replace(rec.label).is_some() {
                    return Err(Error::Parse(format!("history {word} assigned twice")));
                }
            }
            for (word, p) in rec.morph {
                morphs[rec.label][shape.future_index(&word)?] = p;
            }
        }
        Ok(Self {
            shape,
            assignment,
            state_weights,
            morphs,
        })
    }
}

/// JSON layout of a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDocument {
    pub states: Vec<StateRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub label: usize,
    pub weight: f64,
    pub members: Vec<String>,
    pub morph: BTreeMap<String, f64>,
}

/// Groups positive-mass histories whose conditional futures lie within
/// `tol` in total variation, closed under single linkage.
pub fn causal_partition(j: &WordJoint, tol: f64) -> Partition {
    let support = j.support();
    let conds: Vec<Vec<f64>> = support
        .iter()
        .map(|&h| j.conditional(h).expect("support rows have mass"))
        .collect();
    let mut parent: Vec<usize> = (0..support.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..support.len() {
        for b in a + 1..support.len() {
            if total_variation(&conds[a], &conds[b]) <= tol {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut labels = vec![None; j.n_histories()];
    for (i, &h) in support.iter().enumerate() {
        labels[h] = Some(find(&mut parent, i));
    }
    Partition::from_labels(j, &labels).expect("support histories are labeled")
}

/// `H[state]` in bits.
pub fn statistical_complexity(p: &Partition) -> f64 {
    info_theory::entropy_of(p.state_weights())
}

/// Past–future mutual information `E = I[past; future]`.
pub fn excess_entropy(j: &WordJoint) -> f64 {
    info_theory::mutual_information(j)
}
