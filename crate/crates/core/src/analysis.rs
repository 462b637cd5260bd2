//! Success-probability and information scores for search outcomes, and the
//! classical one-query shell game.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-9;
const PRIOR_TOLERANCE: f64 = 1e-12;

/// `p(measured = x | marked = y)`; row `y` is the marking, column `x` the
/// measured outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ConfusionMatrix {
    rows: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Argument("confusion matrix has no rows".into()));
        }
        for (y, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Argument(format!(
                    "row {y} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Argument(format!("row {y} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::Argument(format!("row {y} sums to {sum}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: (0..n)
                .map(|y| (0..n).map(|x| if x == y { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            rows: vec![vec![1.0 / n as f64; n]; n],
        }
    }

    pub fn n_outcomes(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, marked: usize, measured: usize) -> f64 {
        self.rows[marked][measured]
    }
}

impl TryFrom<Vec<Vec<f64>>> for ConfusionMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<ConfusionMatrix> for Vec<Vec<f64>> {
    fn from(cm: ConfusionMatrix) -> Self {
        cm.rows
    }
}

/// Distribution over markings.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkingPrior {
    probs: Vec<f64>,
}

impl MarkingPrior {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Argument(
                "prior must be a non-empty non-negative vector".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PRIOR_TOLERANCE {
            return Err(Error::Argument(format!("prior sums to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Row-normalises outcome counts; `counts_per_marking[y][x]` is the number of
/// times outcome `x` was seen with marking `y`.
pub fn confusion_from_counts(counts_per_marking: &[Vec<u64>]) -> Result<ConfusionMatrix> {
    let rows = counts_per_marking
        .iter()
        .enumerate()
        .map(|(y, row)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                return Err(Error::Argument(format!("marking {y} has no counts")));
            }
            Ok(row.iter().map(|&c| c as f64 / total as f64).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    ConfusionMatrix::new(rows)
}

fn check_sizes(cm: &ConfusionMatrix, prior: &MarkingPrior) -> Result<()> {
    if cm.n_outcomes() != prior.probs().len() {
        return Err(Error::Argument(format!(
            "prior over {} markings does not match a {}-outcome matrix",
            prior.probs().len(),
            cm.n_outcomes()
        )));
    }
    Ok(())
}

/// `Σ_y p(y)·cm[y][y]`.
pub fn average_success(cm: &ConfusionMatrix, prior: &MarkingPrior) -> Result<f64> {
    check_sizes(cm, prior)?;
    Ok(prior
        .probs()
        .iter()
        .enumerate()
        .map(|(y, p)| p * cm.get(y, y))
        .sum())
}

/// Shannon entropy in bits, with `0·log 0 = 0`.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

pub fn binary_entropy(p: f64) -> f64 {
    entropy_bits(&[p, 1.0 - p])
}

/// `H(x) + H(y) − H(x,y)` in bits, with `p(x,y) = prior(y)·cm[y][x]`.
pub fn mutual_information(cm: &ConfusionMatrix, prior: &MarkingPrior) -> Result<f64> {
    check_sizes(cm, prior)?;
    let n = cm.n_outcomes();
    let joint: Vec<f64> = (0..n)
        .flat_map(|y| (0..n).map(move |x| (y, x)))
        .map(|(y, x)| prior.probs()[y] * cm.get(y, x))
        .collect();
    let measured: Vec<f64> = (0..n)
        .map(|x| (0..n).map(|y| joint[y * n + x]).sum())
        .collect();
    let h = entropy_bits(&measured) + entropy_bits(prior.probs()) - entropy_bits(&joint);
    Ok(h.max(0.0))
}

/// Information in the yes/no answer of one oracle query over four shells,
/// `H₂(1/4) ≈ 0.811` bits.
pub fn classical_query_information() -> f64 {
    binary_entropy(0.25)
}

/// Exact success of the best one-query classical strategy over `n_shells`:
/// `1/n + (n−1)/n · 1/(n−1)`.
pub fn classical_success_probability(n_shells: usize) -> f64 {
    let n = n_shells as f64;
    1.0 / n + (n - 1.0) / n * (1.0 / (n - 1.0))
}

/// Which shell the classical player queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShellQuery {
    /// A uniformly random shell.
    Uniform,
    /// Always the marked shell; a degenerate control.
    AlwaysHit,
}

/// Simulates the four-shell game with a uniform query.
pub fn classical_shell_game(trials: u64, seed: u64) -> Result<(ConfusionMatrix, f64)> {
    classical_shell_game_with(trials, seed, ShellQuery::Uniform)
}

/// Per trial: hide the marble uniformly, query one shell, answer it on a hit,
/// otherwise guess uniformly among the three unqueried shells. Returns the
/// empirical confusion matrix and success rate. Every marking must occur at
/// least once.
pub fn classical_shell_game_with(
    trials: u64,
    seed: u64,
    query: ShellQuery,
) -> Result<(ConfusionMatrix, f64)> {
    const SHELLS: usize = 4;
    if trials == 0 {
        return Err(Error::Argument(
            "shell game needs at least one trial".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![vec![0u64; SHELLS]; SHELLS];
    let mut wins = 0u64;
    for _ in 0..trials {
        let marble = rng.gen_range(0..SHELLS);
        let queried = match query {
            ShellQuery::Uniform => rng.gen_range(0..SHELLS),
            ShellQuery::AlwaysHit => marble,
        };
        let answer = if queried == marble {
            queried
        } else {
            let k = rng.gen_range(0..SHELLS - 1);
            if k >= queried {
                k + 1
            } else {
                k
            }
        };
        counts[marble][answer] += 1;
        wins += u64::from(answer == marble);
    }
    let cm = confusion_from_counts(&counts)?;
    Ok((cm, wins as f64 / trials as f64))
}
