use std::ops::Index;

use serde::{Deserialize, Serialize};

use super::DemandError;
use crate::valuations::{check_universe, ItemSet};

/// Nonnegative per-item prices; `p(S)` is additive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PriceVector {
    prices: Vec<f64>,
}

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Result<Self, DemandError> {
        check_universe(prices.len()).map_err(DemandError::Valuation)?;
        if let Some((index, &value)) = prices
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(DemandError::BadPrice { index, value });
        }
        Ok(PriceVector { prices })
    }

    pub fn zeros(m: usize) -> Result<Self, DemandError> {
        Self::new(vec![0.0; m])
    }

    pub fn uniform(m: usize, price: f64) -> Result<Self, DemandError> {
        Self::new(vec![price; m])
    }

    #[inline]
    pub fn universe_size(&self) -> usize {
        self.prices.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.prices
    }

    /// `p(S)`, summed in ascending item order.
    pub fn price_of(&self, set: ItemSet) -> f64 {
        self.price_of_bits(set.bits())
    }

    #[inline]
    pub fn price_of_bits(&self, mut bits: u32) -> f64 {
        let mut total = 0.0;
        while bits != 0 {
            total += self.prices[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        total
    }

    /// Every price multiplied by `factor` (must be finite and nonnegative).
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(
            factor.is_finite() && factor >= 0.0,
            "bad price scale {factor}"
        );
        PriceVector {
            prices: self.prices.iter().map(|p| p * factor).collect(),
        }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.prices
    }
}

impl Index<usize> for PriceVector {
    type Output = f64;

    fn index(&self, item: usize) -> &f64 {
        &self.prices[item]
    }
}

impl TryFrom<Vec<f64>> for PriceVector {
    type Error = DemandError;

    fn try_from(prices: Vec<f64>) -> Result<Self, DemandError> {
        PriceVector::new(prices)
    }
}

impl From<PriceVector> for Vec<f64> {
    fn from(p: PriceVector) -> Vec<f64> {
        p.prices
    }
}
