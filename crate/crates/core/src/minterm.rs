//! Minterm encoding of attribute vectors.
//!
//! Attribute `a_1` is the most significant bit of a minterm index: for `n`
//! attributes, minterm `k` has bit code `b_1 … b_n` with
//! `k = Σ_j b_{n-j} 2^j`, and `b_j = 1` means `a_j` appears non-negated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the attribute count; minterm vectors have `2^n` entries.
pub const MAX_ATTRIBUTES: usize = 16;

const SUM_TOLERANCE: f64 = 1e-9;

/// Degrees of fulfillment of `n` attributes, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AttributeVector(Vec<f64>);

impl AttributeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_cap(values, MAX_ATTRIBUTES)
    }

    /// Like [`AttributeVector::new`] with an explicit cap on the attribute count.
    pub fn with_cap(values: Vec<f64>, max_attributes: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("an attribute vector needs at least one value".into()));
        }
        if values.len() > max_attributes {
            return Err(Error::Config(format!(
                "{} attributes exceed the configured maximum of {max_attributes}",
                values.len()
            )));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain { index, value });
        }
        Ok(AttributeVector(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }
}

impl TryFrom<Vec<f64>> for AttributeVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        AttributeVector::new(values)
    }
}

impl From<AttributeVector> for Vec<f64> {
    fn from(x: AttributeVector) -> Self {
        x.0
    }
}

/// The `2^n` minterm values of one object. Entries are non-negative and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MintermVector {
    values: Vec<f64>,
    n_atts: usize,
}

impl MintermVector {
    /// Wraps precomputed minterm values, checking length, sign and normalization.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n_atts = values.len().trailing_zeros() as usize;
        if values.len() < 2 || values.len() != 1 << n_atts {
            return Err(Error::Structure(format!(
                "minterm vector length {} is not a power of two",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::range("minterm value", v, "[0, ∞)"));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::range("minterm sum", sum, "1 ± 1e-9"));
        }
        Ok(MintermVector { values, n_atts })
    }

    /// A one-hot vector at minterm `k`; the minterms of a Boolean corner.
    pub fn one_hot(k: usize, n_atts: usize) -> Result<Self> {
        check_index(k, n_atts)?;
        let mut values = vec![0.0; 1 << n_atts];
        values[k] = 1.0;
        Ok(MintermVector { values, n_atts })
    }

    pub fn n_atts(&self) -> usize {
        self.n_atts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Scalar product with a weight vector of the same length.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        debug_assert_eq!(weights.len(), self.values.len());
        self.values.iter().zip(weights).map(|(m, w)| m * w).sum()
    }

    /// Sum of the minterm values over a set of minterm indices.
    pub fn mass<I: IntoIterator<Item = usize>>(&self, minterms: I) -> f64 {
        minterms.into_iter().map(|k| self.values[k]).sum()
    }
}

/// Expands an attribute vector into its `2^n` minterm values.
pub fn to_minterms(x: &AttributeVector) -> MintermVector {
    // Each attribute doubles the table; appending the bit on the right keeps a_1 most significant.
    let mut values = Vec::with_capacity(1 << x.len());
    values.push(1.0);
    for &xj in x.values() {
        let previous = std::mem::take(&mut values);
        values.reserve(previous.len() * 2);
        for m in previous {
            values.push(m * (1.0 - xj));
            values.push(m * xj);
        }
    }
    MintermVector {
        values,
        n_atts: x.len(),
    }
}

/// Bit code `b_1 … b_n` of a minterm index, `b_1` most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitCode {
    bits: Vec<bool>,
    index: usize,
}

impl BitCode {
    /// `bits[j]` is `b_{j+1}`: whether attribute `a_{j+1}` is non-negated.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn n_atts(&self) -> usize {
        self.bits.len()
    }

    /// Rebuilds the minterm index from a bit sequence.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.is_empty() || bits.len() > MAX_ATTRIBUTES {
            return Err(Error::range(
                "bit code length",
                bits.len(),
                format!("[1, {MAX_ATTRIBUTES}]"),
            ));
        }
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        Ok(BitCode {
            bits: bits.to_vec(),
            index,
        })
    }
}

impl std::fmt::Display for BitCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub fn bitcode_of(k: usize, n_atts: usize) -> Result<BitCode> {
    check_index(k, n_atts)?;
    let bits = (0..n_atts).map(|j| attribute_bit(k, j, n_atts)).collect();
    Ok(BitCode { bits, index: k })
}

/// Whether attribute `j` (0-based, `a_{j+1}`) is non-negated in minterm `k`.
#[inline]
pub fn attribute_bit(k: usize, j: usize, n_atts: usize) -> bool {
    (k >> (n_atts - 1 - j)) & 1 == 1
}

fn check_index(k: usize, n_atts: usize) -> Result<()> {
    if n_atts == 0 || n_atts > MAX_ATTRIBUTES {
        return Err(Error::range(
            "attribute count",
            n_atts,
            format!("[1, {MAX_ATTRIBUTES}]"),
        ));
    }
    if k >= 1 << n_atts {
        return Err(Error::range(
            "minterm index",
            k,
            format!("[0, {}]", (1usize << n_atts) - 1),
        ));
    }
    Ok(())
}
