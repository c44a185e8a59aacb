//! Finite hidden Markov processes: construction, stationary statistics,
//! exact word distributions and seeded sampling.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_theory::DiscreteDistribution;
use crate::joint::{JointSource, WordJoint, WordShape};

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITER: usize = 1_000_000;
const STATIONARY_TOL: f64 = 1e-14;

/// The four example processes shipped with the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Period4,
    GoldenMean,
    Even,
    Rrxor,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::Period4,
        Builtin::GoldenMean,
        Builtin::Even,
        Builtin::Rrxor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Period4 => "period4",
            Builtin::GoldenMean => "golden_mean",
            Builtin::Even => "even",
            Builtin::Rrxor => "rrxor",
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownProcess(s.to_string()))
    }
}

/// Wire form of a process: `transitions[symbol][from][to]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub name: String,
    pub n_states: usize,
    pub alphabet_size: usize,
    pub transitions: Vec<Vec<Vec<f64>>>,
}

/// A stationary source given by labeled transition matrices
/// `T[x][i][j] = P(emit x, move i → j | in i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenMarkovProcess {
    name: Option<String>,
    n_states: usize,
    alphabet_size: usize,
    transitions: Vec<Vec<Vec<f64>>>,
    stationary: Vec<f64>,
}

impl HiddenMarkovProcess {
    /// Validates the labeled matrices and solves for the stationary
    /// distribution. Rejects chains with more than one closed class.
    pub fn new(
        name: Option<String>,
        n_states: usize,
        alphabet_size: usize,
        transitions: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if n_states == 0 || alphabet_size == 0 {
            return Err(Error::InvalidProcess(
                "n_states and alphabet_size must be positive".into(),
            ));
        }
        if alphabet_size > 10 {
            return Err(Error::InvalidProcess(
                "alphabets larger than 10 symbols cannot be written as digit strings".into(),
            ));
        }
        if transitions.len() != alphabet_size
            || transitions
                .iter()
                .any(|t| t.len() != n_states || t.iter().any(|row| row.len() != n_states))
        {
            return Err(Error::InvalidProcess(format!(
                "transitions must be {alphabet_size}×{n_states}×{n_states}"
            )));
        }
        for (x, t) in transitions.iter().enumerate() {
            for (i, row) in t.iter().enumerate() {
                if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                    return Err(Error::InvalidProcess(format!(
                        "T[{x}][{i}] has invalid entry {v}"
                    )));
                }
            }
        }
        for i in 0..n_states {
            let total: f64 = transitions.iter().map(|t| t[i].iter().sum::<f64>()).sum();
            if (total - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidProcess(format!(
                    "outgoing mass of state {i} is {total}, not 1"
                )));
            }
        }
        let mut hmm = Self {
            name,
            n_states,
            alphabet_size,
            transitions,
            stationary: Vec::new(),
        };
        let classes = hmm.closed_class_count();
        if classes != 1 {
            return Err(Error::InvalidProcess(format!(
                "state graph has {classes} closed classes; a unique stationary distribution needs exactly one"
            )));
        }
        hmm.stationary = hmm.solve_stationary()?;
        Ok(hmm)
    }

    pub fn builtin(which: Builtin) -> Self {
        let h = 0.5;
        let t = match which {
            // Phase cycle 0 → 1 → 2 → 3 emitting 0, 0, 1, 1.
            Builtin::Period4 => {
                let mut zero = vec![vec![0.0; 4]; 4];
                let mut one = vec![vec![0.0; 4]; 4];
                zero[0][1] = 1.0;
                zero[1][2] = 1.0;
                one[2][3] = 1.0;
                one[3][0] = 1.0;
                vec![zero, one]
            }
            // A = 0, B = 1. B is entered on a 0 and must emit a 1.
            Builtin::GoldenMean => vec![
                vec![vec![0.0, h], vec![0.0, 0.0]],
                vec![vec![h, 0.0], vec![1.0, 0.0]],
            ],
            // A = 0, B = 1. B is entered on the first 1 of a pair.
            Builtin::Even => vec![
                vec![vec![h, 0.0], vec![0.0, 0.0]],
                vec![vec![0.0, h], vec![1.0, 0.0]],
            ],
            // 0: first random bit; 1/2: second random bit after a 0/1;
            // 3/4: pending XOR value 0/1.
            Builtin::Rrxor => {
                let mut zero = vec![vec![0.0; 5]; 5];
                let mut one = vec![vec![0.0; 5]; 5];
                zero[0][1] = h;
                one[0][2] = h;
                zero[1][3] = h;
                one[1][4] = h;
                zero[2][4] = h;
                one[2][3] = h;
                zero[3][0] = 1.0;
                one[4][0] = 1.0;
                vec![zero, one]
            }
        };
        let n = t[0].len();
        Self::new(Some(which.name().to_string()), n, 2, t).expect("builtin processes are valid")
    }

    pub fn from_spec(spec: ProcessSpec) -> Result<Self> {
        Self::new(
            Some(spec.name),
            spec.n_states,
            spec.alphabet_size,
            spec.transitions,
        )
    }

    pub fn to_spec(&self) -> ProcessSpec {
        ProcessSpec {
            name: self.name.clone().unwrap_or_default(),
            n_states: self.n_states,
            alphabet_size: self.alphabet_size,
            transitions: self.transitions.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(serde_json::from_str(text)?)
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn transitions(&self) -> &[Vec<Vec<f64>>] {
        &self.transitions
    }

    /// Stationary distribution over internal states.
    pub fn stationary_distribution(&self) -> DiscreteDistribution {
        DiscreteDistribution::from_weights(self.stationary.clone())
            .expect("stationary vector is a distribution")
    }

    fn summed(&self) -> Vec<Vec<f64>> {
        let n = self.n_states;
        let mut out = vec![vec![0.0; n]; n];
        for t in &self.transitions {
            for (o, row) in out.iter_mut().zip(t) {
                for (a, b) in o.iter_mut().zip(row) {
                    *a += b;
                }
            }
        }
        out
    }

    fn closed_class_count(&self) -> usize {
        let n = self.n_states;
        let adj = self.summed();
        let reach: Vec<Vec<bool>> = (0..n)
            .map(|s| {
                let mut seen = vec![false; n];
                let mut stack = vec![s];
                seen[s] = true;
                while let Some(i) = stack.pop() {
                    for j in 0..n {
                        if adj[i][j] > 0.0 && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
                seen
            })
            .collect();
        let recurrent: Vec<usize> = (0..n)
            .filter(|&i| (0..n).all(|j| !reach[i][j] || reach[j][i]))
            .collect();
        let mut class_of = vec![usize::MAX; n];
        let mut classes = 0;
        for &i in &recurrent {
            if class_of[i] == usize::MAX {
                for &j in &recurrent {
                    if reach[i][j] {
                        class_of[j] = classes;
                    }
                }
                classes += 1;
            }
        }
        classes
    }

    /// Power iteration on the lazy chain `(I + P)/2`, which shares the
    /// stationary vector of `P` but is aperiodic.
    fn solve_stationary(&self) -> Result<Vec<f64>> {
        let n = self.n_states;
        let p = self.summed();
        let mut pi = vec![1.0 / n as f64; n];
        let mut next = vec![0.0; n];
        for _ in 0..STATIONARY_MAX_ITER {
            for (j, nj) in next.iter_mut().enumerate() {
                *nj = 0.5 * pi[j] + 0.5 * (0..n).map(|i| pi[i] * p[i][j]).sum::<f64>();
            }
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= total);
            let residual: f64 = (0..n)
                .map(|j| ((0..n).map(|i| next[i] * p[i][j]).sum::<f64>() - next[j]).abs())
                .fold(0.0, f64::max);
            std::mem::swap(&mut pi, &mut next);
            if residual <= STATIONARY_TOL {
                return Ok(pi);
            }
        }
        Err(Error::NoConvergence(STATIONARY_MAX_ITER))
    }

    /// Stationary probability of a finite word.
    pub fn word_probability(&self, word: &[usize]) -> Result<f64> {
        let mut v = self.stationary.clone();
        for &x in word {
            if x >= self.alphabet_size {
                return Err(Error::InvalidSymbol {
                    symbol: x,
                    alphabet: self.alphabet_size,
                });
            }
            v = self.advance(&v, x);
        }
        Ok(v.iter().sum())
    }

    fn advance(&self, v: &[f64], x: usize) -> Vec<f64> {
        let t = &self.transitions[x];
        let mut out = vec![0.0; self.n_states];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &tij) in out.iter_mut().zip(&t[i]) {
                *o += vi * tij;
            }
        }
        out
    }

    /// Exact `P(past^K, future^L)` by enumerating every length-`K+L` word
    /// from the stationary start. Zero-mass histories keep their rows.
    pub fn exact_joint(&self, history_len: usize, future_len: usize) -> Result<WordJoint> {
        let shape = WordShape::new(self.alphabet_size, history_len, future_len)?;
        let n = shape.n_histories() * shape.n_futures();
        let mut matrix = vec![0.0; n];
        let len = history_len + future_len;
        let mut stack: Vec<(usize, usize, Vec<f64>)> = vec![(0, 0, self.stationary.clone())];
        while let Some((depth, index, v)) = stack.pop() {
            if depth == len {
                matrix[index] = v.iter().sum();
                continue;
            }
            for x in (0..self.alphabet_size).rev() {
                let w = self.advance(&v, x);
                stack.push((depth + 1, index * self.alphabet_size + x, w));
            }
        }
        // The word index with history digits first is exactly the row-major
        // (history, future) cell index.
        WordJoint::new(shape, matrix, JointSource::Exact)
    }

    /// Draws a start state from the stationary distribution and emits
    /// `length` symbols. Reproducible for a fixed seed.
    pub fn sample_series(&self, length: usize, seed: u64) -> Result<SymbolSeries> {
        if length == 0 {
            return Err(Error::InvalidParameter(
                "series length must be at least 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n_states;
        let start = WeightedIndex::new(&self.stationary).expect("stationary weights are valid");
        let steps: Vec<WeightedIndex<f64>> = (0..n)
            .map(|i| {
                let w: Vec<f64> = (0..self.alphabet_size * n)
                    .map(|c| self.transitions[c / n][i][c % n])
                    .collect();
                WeightedIndex::new(w).expect("rows sum to one")
            })
            .collect();
        let mut state = start.sample(&mut rng);
        let mut symbols = Vec::with_capacity(length);
        for _ in 0..length {
            let choice = steps[state].sample(&mut rng);
            symbols.push(choice / n);
            state = choice % n;
        }
        SymbolSeries::new(symbols, self.alphabet_size)
    }
}

/// A finite observed sequence over `0..alphabet`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSeries {
    symbols: Vec<usize>,
    alphabet: usize,
}

impl SymbolSeries {
    pub fn new(symbols: Vec<usize>, alphabet: usize) -> Result<Self> {
        if alphabet == 0 || alphabet > 10 {
            return Err(Error::InvalidParameter(format!(
                "alphabet size {alphabet} must be in 1..=10"
            )));
        }
        if let Some(&s) = symbols.iter().find(|&&s| s >= alphabet) {
            return Err(Error::InvalidSymbol {
                symbol: s,
                alphabet,
            });
        }
        Ok(Self { symbols, alphabet })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// One ASCII digit per symbol, no separators, trailing newline.
    pub fn to_file_string(&self) -> String {
        let mut s: String = self
            .symbols
            .iter()
            .map(|&x| char::from_digit(x as u32, 10).expect("alphabet ≤ 10"))
            .collect();
        s.push('\n');
        s
    }

    /// Parses the digit-string file format. Trailing whitespace is ignored.
    pub fn parse(text: &str, alphabet: usize) -> Result<Self> {
        let symbols = text
            .trim_end()
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as usize)
                    .ok_or_else(|| Error::Parse(format!("non-digit character `{c}` in series")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols, alphabet)
    }
}

impl fmt::Display for SymbolSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_file_string().trim_end())
    }
}
