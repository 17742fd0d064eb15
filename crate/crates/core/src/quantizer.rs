//! Linear quantization of minterm weights into a cell × minterm × bit-level tensor.
//!
//! `f(v) = (v - a) / (b - a) · 2^bits / (1 + ε)` maps `[a, b]` strictly monotonically
//! onto `[0, 2^bits)`, so `⌊f(v)⌋` always fits in `bits` bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minterm::MintermVector;
use crate::network::PartitionCell;

pub const MAX_BITS: u32 = 31;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationParams {
    pub a: f64,
    pub b: f64,
    pub n_bits: u32,
    pub epsilon: f64,
}

/// `2^-(bits + 4)`.
pub fn default_epsilon(n_bits: u32) -> f64 {
    (-(n_bits as f64 + 4.0)).exp2()
}

impl QuantizationParams {
    pub fn new(a: f64, b: f64, n_bits: u32, epsilon: Option<f64>) -> Result<Self> {
        if !(1..=MAX_BITS).contains(&n_bits) {
            return Err(Error::range("bit count", n_bits, format!("[1, {MAX_BITS}]")));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Config("weight range bounds must be finite".into()));
        }
        if a == b {
            return Err(Error::DegenerateRange(a));
        }
        if a > b {
            return Err(Error::Config(format!("weight range [{a}, {b}] is inverted")));
        }
        let epsilon = epsilon.unwrap_or_else(|| default_epsilon(n_bits));
        let levels = (1u64 << n_bits) as f64;
        // f(b) = 2^bits / (1 + ε) must land in [2^bits - 1, 2^bits).
        if epsilon.is_nan() || epsilon <= 0.0 || !epsilon.is_finite() || levels / (1.0 + epsilon) >= levels {
            return Err(Error::Config(format!("epsilon {epsilon} is too small or not positive")));
        }
        if levels / (1.0 + epsilon) < levels - 1.0 {
            return Err(Error::Config(format!(
                "epsilon {epsilon} is too large for {n_bits} bits"
            )));
        }
        Ok(QuantizationParams { a, b, n_bits, epsilon })
    }

    pub fn levels(&self) -> u32 {
        1 << self.n_bits
    }

    /// The un-floored linear map `f`.
    pub fn scale(&self, v: f64) -> f64 {
        (v - self.a) / (self.b - self.a) * (self.levels() as f64 / (1.0 + self.epsilon))
    }

    /// `⌊f(v)⌋` for `v ∈ [a, b]`.
    pub fn quantize(&self, v: f64) -> Result<u32> {
        if !(self.a..=self.b).contains(&v) {
            return Err(Error::range("minterm weight", v, format!("[{}, {}]", self.a, self.b)));
        }
        Ok(self.scale(v).floor() as u32)
    }

    /// Like [`quantize`](Self::quantize), clamping `v` into `[a, b]` first.
    pub fn quantize_clamped(&self, v: f64) -> u32 {
        self.scale(v.clamp(self.a, self.b)).floor() as u32
    }

    /// Places `v'` at the middle of its truncation interval:
    /// `(v'·(1+ε)/2^bits + 2^-(bits+1))·(b-a) + a`.
    pub fn reconstruct(&self, v_prime: u32) -> Result<f64> {
        if v_prime >= self.levels() {
            return Err(Error::range(
                "quantized value",
                v_prime,
                format!("[0, {})", self.levels()),
            ));
        }
        let levels = self.levels() as f64;
        Ok((v_prime as f64 * (1.0 + self.epsilon) / levels + 0.5 / levels) * (self.b - self.a) + self.a)
    }

    /// Threshold on the quantized score scale: `f(τ) - 1/2`, compensating the mean truncation loss.
    pub fn map_threshold(&self, tau: f64) -> f64 {
        self.scale(tau) - 0.5
    }

    /// `(b - a) / 2^(bits+1)`: half a nominal quantization step.
    pub fn nominal_error_bound(&self) -> f64 {
        (self.b - self.a) / (self.levels() as f64 * 2.0)
    }

    /// `(1/2 + ε)` steps: each truncation bin is `1 + ε` nominal steps wide, so the
    /// reconstruction error can pass the nominal half step by up to `ε` steps.
    pub fn error_bound(&self) -> f64 {
        (0.5 + self.epsilon) * (self.b - self.a) / self.levels() as f64
    }
}

/// `a`/`b` as the global minimum/maximum minterm weight over the given cells.
pub fn fit_params(cells: &[PartitionCell], n_bits: u32, epsilon: Option<f64>) -> Result<QuantizationParams> {
    let mut weights = cells.iter().flat_map(|c| c.mw.iter().copied()).peekable();
    if weights.peek().is_none() {
        return Err(Error::Config("cannot fit quantization parameters without cells".into()));
    }
    let (a, b) = weights.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| (lo.min(w), hi.max(w)));
    QuantizationParams::new(a, b, n_bits, epsilon)
}

/// Floored weights `⌊f(mw^p[k])⌋` of the essential cells, read bitwise as `bt[p, k, bl]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitTensor {
    cells: Vec<u32>,
    supports: Vec<usize>,
    n_atts: usize,
    values: Vec<u32>,
    params: QuantizationParams,
    tau_prime: f64,
}

impl BitTensor {
    /// Partition numbers of the tensor's cells, ascending.
    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    /// Training support of each cell, aligned with [`cells`](Self::cells).
    pub fn supports(&self) -> &[usize] {
        &self.supports
    }

    pub fn n_atts(&self) -> usize {
        self.n_atts
    }

    pub fn n_minterms(&self) -> usize {
        1 << self.n_atts
    }

    pub fn n_bits(&self) -> u32 {
        self.params.n_bits
    }

    pub fn params(&self) -> &QuantizationParams {
        &self.params
    }

    pub fn tau_prime(&self) -> f64 {
        self.tau_prime
    }

    pub fn cell_index(&self, p: u32) -> Option<usize> {
        self.cells.binary_search(&p).ok()
    }

    /// `⌊f(mw^p[k])⌋` for the cell at position `ci`.
    pub fn value(&self, ci: usize, k: usize) -> u32 {
        self.values[ci * self.n_minterms() + k]
    }

    pub fn row(&self, ci: usize) -> &[u32] {
        let m = self.n_minterms();
        &self.values[ci * m..(ci + 1) * m]
    }

    pub fn bit(&self, ci: usize, k: usize, bl: u32) -> bool {
        (self.value(ci, k) >> bl) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Assembles a tensor from floored values laid out cell-major, e.g. when reloading a dump.
    pub fn from_floors(
        cells: Vec<u32>,
        supports: Vec<usize>,
        n_atts: usize,
        values: Vec<u32>,
        params: QuantizationParams,
        tau_prime: f64,
    ) -> Result<Self> {
        if cells.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Structure("tensor cells must be strictly ascending".into()));
        }
        if supports.len() != cells.len() || values.len() != cells.len() << n_atts {
            return Err(Error::Structure("tensor dimensions disagree".into()));
        }
        if let Some(v) = values.iter().find(|&&v| v >= params.levels()) {
            return Err(Error::range("floored weight", v, format!("[0, {})", params.levels())));
        }
        Ok(BitTensor {
            cells,
            supports,
            n_atts,
            values,
            params,
            tau_prime,
        })
    }

    /// A tensor without cells; every object is uncovered.
    pub fn empty(n_atts: usize, params: QuantizationParams, tau: f64) -> Self {
        BitTensor {
            cells: Vec::new(),
            supports: Vec::new(),
            n_atts,
            values: Vec::new(),
            params,
            tau_prime: params.map_threshold(tau),
        }
    }

    /// Energy: sum of all bits weighted by `2^bl`, i.e. the sum of floored weights.
    pub fn power(&self) -> u64 {
        let mut total = 0u64;
        for ci in 0..self.cells.len() {
            for k in 0..self.n_minterms() {
                for bl in 0..self.n_bits() {
                    if self.bit(ci, k, bl) {
                        total += 1 << bl;
                    }
                }
            }
        }
        total
    }

    /// Energy with each cell counted by its training support instead of once.
    pub fn support_weighted_power(&self) -> u64 {
        (0..self.cells.len())
            .map(|ci| self.supports[ci] as u64 * self.row(ci).iter().map(|&v| v as u64).sum::<u64>())
            .sum()
    }

    /// `Σ_bl 2^bl Σ_k mt[k] · bt[p, k, bl]`, the score of the quantized network in cell `p`.
    pub fn score(&self, p: u32, mt: &MintermVector) -> Result<f64> {
        let ci = self.cell_index(p).ok_or(Error::UncoveredCell(p))?;
        if mt.len() != self.n_minterms() {
            return Err(Error::Structure(format!(
                "tensor has {} minterms, object has {}",
                self.n_minterms(),
                mt.len()
            )));
        }
        let mut score = 0.0;
        for bl in 0..self.n_bits() {
            let level: f64 = (0..self.n_minterms())
                .filter(|&k| self.bit(ci, k, bl))
                .map(|k| mt.values()[k])
                .sum();
            score += (1u64 << bl) as f64 * level;
        }
        Ok(score)
    }

    pub fn classify(&self, p: u32, mt: &MintermVector) -> Result<bool> {
        Ok(self.score(p, mt)? > self.tau_prime)
    }
}

/// Quantizes the weights of `cells` (ordered by partition number in the result).
pub fn build_bit_tensor(cells: &[PartitionCell], params: QuantizationParams, tau: f64) -> Result<BitTensor> {
    let mut sorted: Vec<&PartitionCell> = cells.iter().collect();
    sorted.sort_by_key(|c| c.number);
    if sorted.windows(2).any(|w| w[0].number == w[1].number) {
        return Err(Error::Structure("duplicate partition cell".into()));
    }
    let n_minterms = sorted
        .first()
        .ok_or_else(|| Error::Config("a bit tensor needs at least one cell".into()))?
        .mw
        .len();
    if !n_minterms.is_power_of_two() || n_minterms < 2 || sorted.iter().any(|c| c.mw.len() != n_minterms) {
        return Err(Error::Structure("cells must share a 2^n minterm dimension".into()));
    }
    let values = sorted
        .iter()
        .flat_map(|c| c.mw.iter().map(|&w| params.quantize(w)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BitTensor {
        cells: sorted.iter().map(|c| c.number).collect(),
        supports: sorted.iter().map(|c| c.support()).collect(),
        n_atts: n_minterms.trailing_zeros() as usize,
        values,
        params,
        tau_prime: params.map_threshold(tau),
    })
}
