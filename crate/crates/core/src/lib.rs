//! Reconstruction of causal states from discrete stochastic processes.
//!
//! Histories of length `K` are compressed into states that retain as much
//! information about futures of length `L` as possible, trading predictive
//! information `I[S; future]` against coding rate `I[past; S]` with a
//! temperature λ. Annealing λ towards zero recovers the causal-state
//! partition; on finite samples a complexity correction selects the number
//! of states.
//!
//! ```
//! use causal_filter::{causal_partition, statistical_complexity, Builtin, HiddenMarkovProcess};
//!
//! let joint = HiddenMarkovProcess::builtin(Builtin::GoldenMean).exact_joint(3, 2).unwrap();
//! let states = causal_partition(&joint, 1e-9);
//! assert_eq!(states.n_states(), 2);
//! assert!((statistical_complexity(&states) - 0.9183).abs() < 1e-4);
//! ```

pub mod anneal;
pub mod causal;
pub mod error;
pub mod ib;
pub mod info_theory;
pub mod joint;
pub mod oce;
pub mod process;

pub use anneal::{
    anneal_trace, best_tradeoff_point, first_occurrence_markers, AnnealingSchedule, CurvePoint,
    InfoPlaneCurve, Marker,
};
pub use causal::{causal_partition, excess_entropy, statistical_complexity, Partition};
pub use error::{Error, Result};
pub use ib::{
    deterministic_objective, effective_states, hard_assignment, ib_converge, ib_step, objective,
    ConvergenceReport, IbConfig, Perturbation, SoftModel,
};
pub use info_theory::{entropy, kl_divergence, mutual_information, DiscreteDistribution};
pub use joint::{JointSource, WordJoint, WordShape};
pub use oce::{
    corrected_curve, correction, empirical_joint, estimated_complexity, EmpiricalEstimate,
    SelectionRow, SelectionTable,
};
pub use process::{Builtin, HiddenMarkovProcess, ProcessSpec, SymbolSeries};
