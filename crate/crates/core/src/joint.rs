//! Joint distributions over (history, future) word pairs.
//!
//! Words are indexed as base-`k` numbers of the time-ordered symbol sequence:
//! for histories the most recent symbol is the last (least significant)
//! digit, for futures the earliest symbol is the first (most significant)
//! digit. Both orders are therefore plain lexicographic orders of the digit
//! strings.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_theory::{self, DiscreteDistribution};

/// Maximum number of (history, future) cells a joint may hold.
pub const MAX_CELLS: usize = 1 << 24;

/// Where a [`WordJoint`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JointSource {
    Exact,
    Empirical { samples: usize },
}

/// Alphabet size and window lengths shared by joints, partitions and models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordShape {
    pub alphabet: usize,
    pub history_len: usize,
    pub future_len: usize,
}

impl WordShape {
    pub fn new(alphabet: usize, history_len: usize, future_len: usize) -> Result<Self> {
        if alphabet == 0 || alphabet > 10 {
            return Err(Error::InvalidParameter(format!(
                "alphabet size {alphabet} must be in 1..=10"
            )));
        }
        if history_len == 0 || future_len == 0 {
            return Err(Error::InvalidParameter(
                "history and future lengths must be at least 1".into(),
            ));
        }
        let cells = checked_pow(alphabet, history_len + future_len).filter(|&c| c <= MAX_CELLS);
        if cells.is_none() {
            return Err(Error::WordSpaceTooLarge {
                alphabet,
                length: history_len + future_len,
                cap: MAX_CELLS,
            });
        }
        Ok(Self {
            alphabet,
            history_len,
            future_len,
        })
    }

    pub fn n_histories(&self) -> usize {
        self.alphabet.pow(self.history_len as u32)
    }

    pub fn n_futures(&self) -> usize {
        self.alphabet.pow(self.future_len as u32)
    }

    pub fn history_word(&self, index: usize) -> String {
        render_word(index, self.alphabet, self.history_len)
    }

    pub fn future_word(&self, index: usize) -> String {
        render_word(index, self.alphabet, self.future_len)
    }

    pub fn history_index(&self, word: &str) -> Result<usize> {
        parse_word(word, self.alphabet, self.history_len)
    }

    pub fn future_index(&self, word: &str) -> Result<usize> {
        parse_word(word, self.alphabet, self.future_len)
    }
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    base.checked_pow(u32::try_from(exp).ok()?)
}

/// Index of a symbol sequence read as a base-`alphabet` number.
pub fn word_index(symbols: &[usize], alphabet: usize) -> usize {
    symbols.iter().fold(0, |acc, &s| acc * alphabet + s)
}

/// Symbols of word `index` of the given length, most significant first.
pub fn word_symbols(mut index: usize, alphabet: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % alphabet;
        index /= alphabet;
    }
    out
}

fn render_word(index: usize, alphabet: usize, len: usize) -> String {
    word_symbols(index, alphabet, len)
        .into_iter()
        .map(|s| char::from_digit(s as u32, 10).expect("alphabet ≤ 10"))
        .collect()
}

fn parse_word(word: &str, alphabet: usize, len: usize) -> Result<usize> {
    if word.len() != len {
        return Err(Error::Parse(format!(
            "word `{word}` is not of length {len}"
        )));
    }
    let symbols = word
        .chars()
        .map(|c| match c.to_digit(10) {
            Some(d) if (d as usize) < alphabet => Ok(d as usize),
            _ => Err(Error::Parse(format!("bad symbol `{c}` in word `{word}`"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(word_index(&symbols, alphabet))
}

/// Probability rendered with 17 significant digits.
pub fn fmt_prob(p: f64) -> String {
    format!("{p:.16e}")
}

/// Exact or empirical `P(past^K, future^L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WordJoint {
    shape: WordShape,
    matrix: Vec<f64>,
    source: JointSource,
}

impl WordJoint {
    /// Wraps a row-major `histories × futures` matrix. Entries must be
    /// nonnegative and sum to one within 1e-9; they are renormalized.
    pub fn new(shape: WordShape, matrix: Vec<f64>, source: JointSource) -> Result<Self> {
        let expected = shape.n_histories() * shape.n_futures();
        if matrix.len() != expected {
            return Err(Error::SupportMismatch(matrix.len(), expected));
        }
        let matrix = DiscreteDistribution::new(matrix)?.into_masses();
        Ok(Self {
            shape,
            matrix,
            source,
        })
    }

    pub fn shape(&self) -> WordShape {
        self.shape
    }

    pub fn source(&self) -> JointSource {
        self.source
    }

    pub fn n_histories(&self) -> usize {
        self.shape.n_histories()
    }

    pub fn n_futures(&self) -> usize {
        self.shape.n_futures()
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn get(&self, history: usize, future: usize) -> f64 {
        self.matrix[history * self.n_futures() + future]
    }

    pub fn row(&self, history: usize) -> &[f64] {
        let n = self.n_futures();
        &self.matrix[history * n..(history + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.matrix.chunks(self.n_futures())
    }

    /// `P(past)` for every history, zero-mass histories included.
    pub fn history_marginal(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }

    /// `P(future)`.
    pub fn future_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_futures()];
        for row in self.rows() {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    /// Indices of histories with positive mass.
    pub fn support(&self) -> Vec<usize> {
        self.rows()
            .enumerate()
            .filter(|(_, r)| r.iter().sum::<f64>() > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// `P(future | past)`, or `None` for a zero-mass history.
    pub fn conditional(&self, history: usize) -> Option<Vec<f64>> {
        let row = self.row(history);
        let total: f64 = row.iter().sum();
        (total > 0.0).then(|| row.iter().map(|v| v / total).collect())
    }

    pub fn history_entropy(&self) -> f64 {
        info_theory::entropy_of(&self.history_marginal())
    }

    pub fn future_entropy(&self) -> f64 {
        info_theory::entropy_of(&self.future_marginal())
    }

    /// Writes `history,future,prob` rows for every cell in index order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["history", "future", "prob"])
            .map_err(csv_err)?;
        for h in 0..self.n_histories() {
            let hw = self.shape.history_word(h);
            for f in 0..self.n_futures() {
                w.write_record([
                    hw.as_str(),
                    &self.shape.future_word(f),
                    &fmt_prob(self.get(h, f)),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the CSV written by [`write_csv`](Self::write_csv). The
    /// alphabet size is recovered from the number of cells, so the grid must
    /// be complete. Cells may appear in any order.
    pub fn read_csv<R: Read>(
        input: R,
        alphabet: Option<usize>,
        source: JointSource,
    ) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["history", "future", "prob"] {
            return Err(Error::Parse(format!("unexpected header {headers:?}")));
        }
        let mut cells = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let prob: f64 = rec[2]
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bad probability `{}`: {e}", &rec[2])))?;
            cells.push((rec[0].to_string(), rec[1].to_string(), prob));
        }
        let (hl, fl) = match cells.first() {
            Some((h, f, _)) => (h.len(), f.len()),
            None => return Err(Error::Parse("empty joint".into())),
        };
        let alphabet = match alphabet {
            Some(a) => a,
            None => infer_alphabet(cells.len(), hl + fl)?,
        };
        let shape = WordShape::new(alphabet, hl, fl)?;
        let n = shape.n_histories() * shape.n_futures();
        if cells.len() != n {
            return Err(Error::Parse(format!(
                "expected {n} cells, found {}",
                cells.len()
            )));
        }
        let mut matrix = vec![f64::NAN; n];
        for (h, f, p) in cells {
            let idx = shape.history_index(&h)? * shape.n_futures() + shape.future_index(&f)?;
            if !matrix[idx].is_nan() {
                return Err(Error::Parse(format!("duplicate cell ({h}, {f})")));
            }
            matrix[idx] = p;
        }
        Self::new(shape, matrix, source)
    }
}

fn infer_alphabet(cells: usize, len: usize) -> Result<usize> {
    (1..=10)
        .find(|&a| checked_pow(a, len) == Some(cells))
        .ok_or_else(|| {
            Error::Parse(format!(
                "{cells} cells is not a complete grid of length-{len} words"
            ))
        })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
