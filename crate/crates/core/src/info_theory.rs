//! Entropies, divergences and mutual information over finite supports.
//!
//! Every quantity is in bits. Zero-mass cells contribute nothing
//! (`0 · log 0 = 0`), and a divergence that violates absolute continuity is
//! reported as `f64::INFINITY` rather than as an error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::joint::WordJoint;

/// Tolerance on the total mass accepted by [`DiscreteDistribution::new`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Probability masses over an indexed finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    masses: Vec<f64>,
    #[serde(skip)]
    residual: f64,
}

impl DiscreteDistribution {
    /// Builds a distribution from masses that already sum to one within
    /// [`NORMALIZATION_TOL`]. The masses are renormalized exactly and the
    /// original deviation from one is kept in [`residual`](Self::residual).
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        let total = check_masses(&masses)?;
        let residual = total - 1.0;
        if residual.abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {total}, not 1"
            )));
        }
        Ok(Self::normalize(masses, total, residual))
    }

    /// Normalizes arbitrary nonnegative weights with a positive total.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total = check_masses(&weights)?;
        Ok(Self::normalize(weights, total, total - 1.0))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs a nonempty support");
        Self {
            masses: vec![1.0 / n as f64; n],
            residual: 0.0,
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut masses = vec![0.0; n];
        masses[at] = 1.0;
        Self {
            masses,
            residual: 0.0,
        }
    }

    fn normalize(mut masses: Vec<f64>, total: f64, residual: f64) -> Self {
        masses.iter_mut().for_each(|m| *m /= total);
        Self { masses, residual }
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Signed deviation of the unnormalized input total from one.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn into_masses(self) -> Vec<f64> {
        self.masses
    }
}

fn check_masses(masses: &[f64]) -> Result<f64> {
    if masses.is_empty() {
        return Err(Error::InvalidDistribution("empty support".into()));
    }
    if let Some(bad) = masses.iter().find(|m| !m.is_finite() || **m < 0.0) {
        return Err(Error::InvalidDistribution(format!("invalid mass {bad}")));
    }
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidDistribution("zero total mass".into()));
    }
    Ok(total)
}

/// `-Σ p log₂ p` over raw masses.
pub fn entropy_of(masses: &[f64]) -> f64 {
    let h: f64 = masses
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Shannon entropy in bits.
pub fn entropy(p: &DiscreteDistribution) -> f64 {
    entropy_of(p.masses())
}

/// `Σ_{p_i>0} p_i log₂(p_i/q_i)` over raw masses; infinite when some
/// `p_i > 0` meets `q_i = 0`. Callers guarantee equal lengths.
pub fn kl_of(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            d += pi * (pi / qi).log2();
        }
    }
    d.max(0.0)
}

/// Relative entropy `D(p‖q)` in bits, `f64::INFINITY` when `p` is not
/// absolutely continuous with respect to `q`.
pub fn kl_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::SupportMismatch(p.len(), q.len()));
    }
    Ok(kl_of(p.masses(), q.masses()))
}

/// Total variation distance `½ Σ |p_i − q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Mutual information of a dense row-major joint `rows × cols`.
pub fn mutual_information_of(joint: &[f64], rows: usize, cols: usize) -> f64 {
    debug_assert_eq!(joint.len(), rows * cols);
    let row_m: Vec<f64> = joint.chunks(cols).map(|r| r.iter().sum()).collect();
    let mut col_m = vec![0.0; cols];
    for row in joint.chunks(cols) {
        for (c, &v) in col_m.iter_mut().zip(row) {
            *c += v;
        }
    }
    let mut mi = 0.0;
    for (r, row) in joint.chunks(cols).enumerate() {
        for (c, &pxy) in row.iter().enumerate() {
            if pxy > 0.0 {
                mi += pxy * (pxy / (row_m[r] * col_m[c])).log2();
            }
        }
    }
    mi.max(0.0)
}

/// `I[past; future]` of a word joint, in bits.
pub fn mutual_information(j: &WordJoint) -> f64 {
    mutual_information_of(j.matrix(), j.n_histories(), j.n_futures())
}
