//! Exact Shapley attributions of the attributes over a cell's minterm weights.
//!
//! A coalition `S` of attributes is identified with the minterm whose non-negated attributes
//! are exactly `S`, under the usual bit code (attribute 1 is the most significant bit).

use std::ops::{Add, Mul, Sub};

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minterm::{MintermVector, MAX_ATTRIBUTES};

/// Numbers a characteristic function can take values in.
pub trait GameValue: Clone + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    /// The rational `num / den`.
    fn weight(num: u128, den: u128) -> Self;
}

impl GameValue for f64 {
    fn weight(num: u128, den: u128) -> Self {
        num as f64 / den as f64
    }
}

impl GameValue for Ratio<i128> {
    fn weight(num: u128, den: u128) -> Self {
        Ratio::new(num as i128, den as i128)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Global,
    PerObject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyResult {
    pub values: Vec<f64>,
    pub cell: u32,
    pub variant: Variant,
}

impl ShapleyResult {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// The minterm id of coalition `mask`, where bit `i` of `mask` stands for attribute `i` (0-based).
pub fn coalition_minterm(mask: usize, n: usize) -> usize {
    (0..n).filter(|i| mask >> i & 1 == 1).map(|i| 1 << (n - 1 - i)).sum()
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Shapley values of the game `v`, given per minterm: `v(S) = values[k(S)]`.
pub fn shapley_values<T: GameValue>(values: &[T], n: usize) -> Result<Vec<T>> {
    if n == 0 || n > MAX_ATTRIBUTES {
        return Err(Error::range("attribute count", n, format!("[1, {MAX_ATTRIBUTES}]")));
    }
    if values.len() != 1 << n {
        return Err(Error::range("game size", values.len(), format!("{}", 1usize << n)));
    }
    let total = factorial(n);
    let weights: Vec<T> = (0..n)
        .map(|s| T::weight(factorial(s) * factorial(n - 1 - s), total))
        .collect();
    let v: Vec<&T> = (0..1usize << n)
        .map(|mask| &values[coalition_minterm(mask, n)])
        .collect();
    Ok((0..n)
        .map(|i| {
            let bit = 1usize << i;
            (0..1usize << n)
                .filter(|mask| mask & bit == 0)
                .fold(T::zero(), |acc, mask| {
                    let s = mask.count_ones() as usize;
                    acc + weights[s].clone() * (v[mask | bit].clone() - v[mask].clone())
                })
        })
        .collect())
}

/// Object-independent attributions with `v(S) = mw[k(S)]`.
pub fn shapley_global(mw: &[f64], n: usize, cell: u32) -> Result<ShapleyResult> {
    Ok(ShapleyResult {
        values: shapley_values(mw, n)?,
        cell,
        variant: Variant::Global,
    })
}

/// Object-dependent attributions with `v(S) = mt[k(S)] · mw[k(S)]`.
pub fn shapley_object(mw: &[f64], mt: &MintermVector, cell: u32) -> Result<ShapleyResult> {
    if mw.len() != mt.values().len() {
        return Err(Error::range(
            "minterm weight length",
            mw.len(),
            format!("{}", mt.values().len()),
        ));
    }
    let v: Vec<f64> = mw.iter().zip(mt.values()).map(|(w, m)| w * m).collect();
    Ok(ShapleyResult {
        values: shapley_values(&v, mt.n_atts())?,
        cell,
        variant: Variant::PerObject,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minterm::{to_minterms, AttributeVector};
    use proptest::prelude::*;

    /// Average marginal contribution over all `n!` orderings.
    fn permutation_oracle(values: &[f64], n: usize) -> Vec<f64> {
        fn perms(items: Vec<usize>) -> Vec<Vec<usize>> {
            if items.len() <= 1 {
                return vec![items];
            }
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut rest = items.clone();
                let head = rest.remove(i);
                for mut p in perms(rest) {
                    p.insert(0, head);
                    out.push(p);
                }
            }
            out
        }
        let all = perms((0..n).collect());
        let mut sh = vec![0.0; n];
        for order in &all {
            let mut mask = 0usize;
            for &i in order {
                let before = values[coalition_minterm(mask, n)];
                mask |= 1 << i;
                sh[i] += values[coalition_minterm(mask, n)] - before;
            }
        }
        sh.iter().map(|s| s / all.len() as f64).collect()
    }

    #[test]
    fn worked_weights() {
        let r = shapley_global(&[-8.0, 3.0, 6.0, 2.0], 2, 0).unwrap();
        assert_eq!(r.values, vec![6.5, 3.5]);
        assert_eq!(r.total(), 10.0);
        assert_eq!(r.variant, Variant::Global);
        let exact: Vec<Ratio<i128>> = [-8, 3, 6, 2].iter().map(|&v| Ratio::from_integer(v)).collect();
        assert_eq!(
            shapley_values(&exact, 2).unwrap(),
            vec![Ratio::new(13, 2), Ratio::new(7, 2)]
        );
    }

    #[test]
    fn single_player() {
        assert_eq!(shapley_global(&[1.5, 4.0], 1, 3).unwrap().values, vec![2.5]);
    }

    #[test]
    fn additive_game() {
        let w = [1.0, -2.0, 0.5];
        let mw: Vec<f64> = (0..8)
            .map(|k| (0..3).filter(|j| k >> (2 - j) & 1 == 1).map(|j| w[j]).sum())
            .collect();
        let sh = shapley_global(&mw, 3, 0).unwrap().values;
        for j in 0..3 {
            assert!((sh[j] - w[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn all_or_nothing_object() {
        let mw = [5.0, 1.0, -3.0, 2.0, 7.0, 0.0, 1.0, 9.0];
        let mt = MintermVector::one_hot(7, 3).unwrap();
        let sh = shapley_object(&mw, &mt, 1).unwrap();
        for v in &sh.values {
            assert!((v - 3.0).abs() < 1e-12);
        }
        assert_eq!(sh.variant, Variant::PerObject);
    }

    #[test]
    fn uniform_object_scales_global() {
        let mw = [-8.0, 3.0, 6.0, 2.0];
        let mt = to_minterms(&AttributeVector::new(vec![0.5, 0.5]).unwrap());
        let g = shapley_global(&mw, 2, 0).unwrap().values;
        let o = shapley_object(&mw, &mt, 0).unwrap().values;
        for (a, b) in g.iter().zip(&o) {
            assert!((a / 4.0 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn worked_object_matches_oracle() {
        let mw = [-8.0, 3.0, 6.0, 2.0];
        let mt = to_minterms(&AttributeVector::new(vec![0.8, 0.1]).unwrap());
        let v: Vec<f64> = mw.iter().zip(mt.values()).map(|(a, b)| a * b).collect();
        let sh = shapley_object(&mw, &mt, 0).unwrap().values;
        for (a, b) in sh.iter().zip(permutation_oracle(&v, 2)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn size_errors() {
        assert!(shapley_global(&[1.0, 2.0, 3.0], 2, 0).is_err());
        assert!(shapley_global(&[], 0, 0).is_err());
        assert!(shapley_values(&vec![0.0; 1 << 17], 17).is_err());
        let mt = MintermVector::one_hot(0, 2).unwrap();
        assert!(shapley_object(&[1.0, 2.0], &mt, 0).is_err());
    }

    fn arb_game() -> impl Strategy<Value = (usize, Vec<i64>)> {
        (1usize..=5).prop_flat_map(|n| (Just(n), prop::collection::vec(-50i64..50, 1 << n)))
    }

    proptest! {
        #[test]
        fn matches_permutation_oracle((n, ints) in arb_game()) {
            let v: Vec<f64> = ints.iter().map(|&x| x as f64 / 4.0).collect();
            let sh = shapley_values(&v, n).unwrap();
            for (a, b) in sh.iter().zip(permutation_oracle(&v, n)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn exact_efficiency((n, ints) in arb_game()) {
            let v: Vec<Ratio<i128>> = ints.iter().map(|&x| Ratio::from_integer(x as i128)).collect();
            let sh = shapley_values(&v, n).unwrap();
            let sum = sh.iter().fold(Ratio::zero(), |a, b| a + b);
            prop_assert_eq!(sum, v[(1 << n) - 1] - v[0]);
        }

        #[test]
        fn dummy_and_symmetry((n, ints) in arb_game(), pick in any::<usize>()) {
            // make attribute `d` a dummy by copying v(S) into v(S ∪ {d})
            let d = pick % n;
            let mut v: Vec<f64> = ints.iter().map(|&x| x as f64).collect();
            for mask in 0..1usize << n {
                if mask >> d & 1 == 0 {
                    v[coalition_minterm(mask | 1 << d, n)] = v[coalition_minterm(mask, n)];
                }
            }
            let sh = shapley_values(&v, n).unwrap();
            prop_assert!(sh[d].abs() < 1e-9);
            // a game depending only on |S| is symmetric
            let w: Vec<f64> = (0..1usize << n).map(|k| ints[k.count_ones() as usize] as f64).collect();
            let sh = shapley_values(&w, n).unwrap();
            for s in &sh {
                prop_assert!((s - sh[0]).abs() < 1e-9);
            }
        }
    }
}
