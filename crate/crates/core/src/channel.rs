//! Discrete memoryless channels as row-stochastic transition matrices.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution as _, Gamma};
use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{Error, Result};

/// Allowed deviation of an explicit row sum from one.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// A DMC `W : X -> Y`; row `x` is the conditional law of the output given
/// input `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    rows: Vec<Vec<f64>>,
    outputs: usize,
}

/// Constructor selector, mirroring the channel families the CLI and config
/// files can name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelKind {
    Explicit { matrix: Vec<Vec<f64>> },
    Bsc { p: f64 },
    ZChannel { q: f64, eps: f64 },
    RandomDirichlet { inputs: usize, outputs: usize, concentration: f64 },
}

impl Channel {
    /// Builds a channel from an explicit matrix. Rows must be nonnegative and
    /// sum to one within [`ROW_SUM_TOL`]; they are renormalised exactly.
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        if matrix.is_empty() {
            return Err(Error::BadParameter("channel needs at least one input".into()));
        }
        let outputs = matrix[0].len();
        if outputs < 2 {
            return Err(Error::BadParameter("channel needs at least two outputs".into()));
        }
        let mut rows = Vec::with_capacity(matrix.len());
        for (x, row) in matrix.into_iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::LengthMismatch { left: outputs, right: row.len() });
            }
            for (y, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NegativeEntry { row: x, col: y, value: v });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NonStochasticRow { row: x, sum });
            }
            rows.push(row.into_iter().map(|v| v / sum).collect());
        }
        Ok(Self { rows, outputs })
    }

    pub fn make(kind: &ChannelKind, rng: &mut impl Rng) -> Result<Self> {
        match kind {
            ChannelKind::Explicit { matrix } => Self::new(matrix.clone()),
            ChannelKind::Bsc { p } => Self::bsc(*p),
            ChannelKind::ZChannel { q, eps } => Self::z_channel(*q, *eps),
            ChannelKind::RandomDirichlet { inputs, outputs, concentration } => {
                Self::random_dirichlet(*inputs, *outputs, *concentration, rng)
            }
        }
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::BadParameter(format!("bsc crossover {p} not in (0,1)")));
        }
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Perturbed Z-channel `[[1-eps, eps], [q, 1-q]]`; `eps = 0` is the
    /// exact Z-channel.
    pub fn z_channel(q: f64, eps: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::BadParameter(format!("z-channel q {q} not in (0,1)")));
        }
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::BadParameter(format!("z-channel eps {eps} not in [0,1)")));
        }
        Self::new(vec![vec![1.0 - eps, eps], vec![q, 1.0 - q]])
    }

    /// Binary erasure channel; output 2 is the erasure symbol.
    pub fn binary_erasure(e: f64) -> Result<Self> {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::BadParameter(format!("erasure probability {e} not in (0,1)")));
        }
        Self::new(vec![vec![1.0 - e, 0.0, e], vec![0.0, 1.0 - e, e]])
    }

    /// Noiseless channel on `n >= 2` symbols.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|x| (0..n).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    /// Each row drawn independently from a symmetric Dirichlet.
    pub fn random_dirichlet(
        inputs: usize,
        outputs: usize,
        concentration: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if inputs == 0 || outputs < 2 {
            return Err(Error::BadParameter(format!("alphabet {inputs}x{outputs}")));
        }
        if !(concentration > 0.0 && concentration.is_finite()) {
            return Err(Error::BadParameter(format!("concentration {concentration}")));
        }
        let gamma = Gamma::new(concentration, 1.0)
            .map_err(|e| Error::BadParameter(e.to_string()))?;
        let rows = (0..inputs)
            .map(|_| loop {
                let draw: Vec<f64> = (0..outputs).map(|_| gamma.sample(rng)).collect();
                let sum: f64 = draw.iter().sum();
                if sum > 0.0 {
                    break draw.into_iter().map(|g| g / sum).collect::<Vec<_>>();
                }
            })
            .collect();
        Ok(Self { rows, outputs })
    }

    /// Row and column relabelling: `out[x][y] = self[row_perm[x]][col_perm[y]]`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let rows = row_perm
            .iter()
            .map(|&x| col_perm.iter().map(|&y| self.rows[x][y]).collect())
            .collect();
        Self { rows, outputs: self.outputs }
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> Self {
        let outputs = rows[0].len();
        Self { rows, outputs }
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows.clone()
    }

    /// Output law `P_Y = sum_x P(x) W(.|x)`.
    pub fn output_distribution(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs];
        for (p, row) in input.iter().zip(&self.rows) {
            if *p > 0.0 {
                for (o, w) in out.iter_mut().zip(row) {
                    *o += p * w;
                }
            }
        }
        out
    }

    pub fn row_distribution(&self, x: usize) -> Distribution {
        Distribution::from_raw(self.rows[x].clone())
    }

    pub fn same_alphabets(&self, other: &Channel) -> bool {
        self.input_size() == other.input_size() && self.output_size() == other.output_size()
    }
}

/// Capacity of the exact Z-channel `[[1,0],[q,1-q]]` in closed form,
/// `ln(1 + (1-q) q^{q/(1-q)})`.
pub fn z_channel_capacity(q: f64) -> f64 {
    (1.0 + (1.0 - q) * q.powf(q / (1.0 - q))).ln()
}

/// Capacity of `BSC(p)`, `ln 2 - h_b(p)`.
pub fn bsc_capacity(p: f64) -> f64 {
    std::f64::consts::LN_2 - crate::dist::binary_entropy(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MatrixEntry {
    matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ChannelSetDoc {
    channels: Vec<MatrixEntry>,
}

/// Parses `{"channels":[{"matrix":[[...], ...]}, ...]}`.
pub fn channels_from_json(text: &str) -> Result<Vec<Channel>> {
    let doc: ChannelSetDoc = serde_json::from_str(text)?;
    doc.channels.into_iter().map(|m| Channel::new(m.matrix)).collect()
}

pub fn channels_to_json(channels: &[Channel]) -> String {
    let doc = ChannelSetDoc {
        channels: channels.iter().map(|c| MatrixEntry { matrix: c.matrix() }).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("channel set serializes")
}

pub fn load_channels(path: impl AsRef<Path>) -> Result<Vec<Channel>> {
    channels_from_json(&std::fs::read_to_string(path)?)
}
