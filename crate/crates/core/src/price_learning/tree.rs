use serde::{Deserialize, Serialize};

use super::PriceLearningError;
use crate::demand::PriceVector;

/// Relative tolerance when matching a price against tree node prices.
pub const NODE_PRICE_TOLERANCE: f64 = 1e-12;

/// Cap on `alpha^beta`; beyond it the leaf prices overflow anyway.
pub const MAX_LEAVES: usize = 1 << 16;

/// Which of the two interleaved bucket families the leaves use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    /// Leaf `l` (from 0) at `psi_min * gamma^(2l)`.
    Even,
    /// Leaf `l` at `psi_min * gamma^(2l + 1)`.
    Odd,
}

impl Parity {
    fn offset(self) -> u64 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: f64,
    pub psi_min: f64,
    pub psi_max: f64,
    pub parity: Parity,
}

impl TreeParams {
    /// Validated parameters; `gamma = None` picks [`TreeParams::default_gamma`].
    pub fn new(
        alpha: usize,
        beta: usize,
        gamma: Option<f64>,
        psi_min: f64,
        psi_max: f64,
        parity: Parity,
    ) -> Result<Self, PriceLearningError> {
        check_shape(alpha, beta)?;
        check_psi(psi_min, psi_max)?;
        let gamma = gamma.unwrap_or_else(|| Self::default_gamma(alpha, beta, psi_min, psi_max));
        let params = TreeParams {
            alpha,
            beta,
            gamma,
            psi_min,
            psi_max,
            parity,
        };
        params.validate()?;
        Ok(params)
    }

    /// The smallest `gamma >= 10 beta` whose leaves reach `psi_max`.
    pub fn default_gamma(alpha: usize, beta: usize, psi_min: f64, psi_max: f64) -> f64 {
        let span = 2.0 * (alpha as f64).powi(beta as i32);
        let reach = (psi_max / psi_min).powf(1.0 / span);
        // Nudge up so rounding in the power cannot leave psi_max uncovered.
        (10.0 * beta as f64).max(reach * (1.0 + 1e-12))
    }

    pub fn validate(&self) -> Result<(), PriceLearningError> {
        check_shape(self.alpha, self.beta)?;
        check_psi(self.psi_min, self.psi_max)?;
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return Err(PriceLearningError::GammaNotAboveOne(self.gamma));
        }
        if self.gamma < 10.0 * self.beta as f64 {
            return Err(PriceLearningError::GammaBelowTenBeta {
                gamma: self.gamma,
                beta: self.beta,
            });
        }
        let top = self.leaves() as u64 * 2;
        let reach = self.psi_min * self.gamma.powf(top as f64);
        if !reach.is_finite() {
            return Err(PriceLearningError::PricesOverflow);
        }
        if reach < self.psi_max {
            return Err(PriceLearningError::RangeNotCovered {
                reach,
                psi_max: self.psi_max,
            });
        }
        Ok(())
    }

    /// `alpha^beta`.
    pub fn leaves(&self) -> usize {
        self.alpha.pow(self.beta as u32)
    }

    /// Price of `psi_min * gamma^exponent`.
    pub fn price_at(&self, exponent: u64) -> f64 {
        self.psi_min * self.gamma.powf(exponent as f64)
    }
}

fn check_shape(alpha: usize, beta: usize) -> Result<(), PriceLearningError> {
    if alpha < 2 {
        return Err(PriceLearningError::AlphaTooSmall(alpha));
    }
    if beta < 1 {
        return Err(PriceLearningError::BetaTooSmall(beta));
    }
    match alpha.checked_pow(beta as u32) {
        Some(l) if l <= MAX_LEAVES => Ok(()),
        _ => Err(PriceLearningError::TreeTooLarge { alpha, beta }),
    }
}

fn check_psi(psi_min: f64, psi_max: f64) -> Result<(), PriceLearningError> {
    if !(psi_min.is_finite() && psi_max.is_finite() && psi_min > 0.0 && psi_max >= psi_min) {
        return Err(PriceLearningError::BadPsi { psi_min, psi_max });
    }
    Ok(())
}

/// The `alpha`-branching price tree with levels `1..=beta + 1`.
///
/// Leaves carry the lower ends of the buckets, left to right; every inner
/// node carries the smallest leaf price below it, which is its leftmost
/// leaf. Node `(i, k)` therefore has exponent `2 k alpha^(beta + 1 - i)`
/// plus the parity offset, and its `j`th child is `(i + 1, k alpha + j - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceTree {
    pub params: TreeParams,
    /// `exponents[i - 1][k]` for node `(i, k)`.
    exponents: Vec<Vec<u64>>,
    prices: Vec<Vec<f64>>,
}

pub fn build_price_tree(params: TreeParams) -> Result<PriceTree, PriceLearningError> {
    params.validate()?;
    let offset = params.parity.offset();
    let leaves: Vec<u64> = (0..params.leaves() as u64)
        .map(|l| 2 * l + offset)
        .collect();
    let mut exponents = vec![leaves];
    while exponents[0].len() > 1 {
        let parents = exponents[0]
            .chunks(params.alpha)
            .map(|children| *children.iter().min().expect("chunks are nonempty"))
            .collect();
        exponents.insert(0, parents);
    }
    debug_assert_eq!(exponents.len(), params.beta + 1);
    let prices = exponents
        .iter()
        .map(|level| level.iter().map(|&e| params.price_at(e)).collect())
        .collect();
    Ok(PriceTree {
        params,
        exponents,
        prices,
    })
}

impl PriceTree {
    /// Number of levels, `beta + 1`.
    pub fn depth(&self) -> usize {
        self.exponents.len()
    }

    pub fn node_count(&self) -> usize {
        self.exponents.iter().map(Vec::len).sum()
    }

    pub fn level_exponents(&self, level: usize) -> Option<&[u64]> {
        self.exponents.get(level.checked_sub(1)?).map(Vec::as_slice)
    }

    pub fn level_prices(&self, level: usize) -> Option<&[f64]> {
        self.prices.get(level.checked_sub(1)?).map(Vec::as_slice)
    }

    pub fn node_price(&self, level: usize, position: usize) -> Option<f64> {
        self.level_prices(level)?.get(position).copied()
    }

    pub fn root_price(&self) -> f64 {
        self.prices[0][0]
    }

    /// Position of the `j`th child (from 1) of node `(level, position)`.
    pub fn child(&self, level: usize, position: usize, j: usize) -> Option<usize> {
        let alpha = self.params.alpha;
        if level == 0 || level >= self.depth() || !(1..=alpha).contains(&j) {
            return None;
        }
        self.level_prices(level)?.get(position)?;
        Some(position * alpha + j - 1)
    }

    /// The level-`level` node whose price matches `price`.
    pub fn locate(&self, level: usize, price: f64) -> Option<usize> {
        let prices = self.level_prices(level)?;
        // Node prices increase left to right.
        let at = prices.partition_point(|&x| x < price * (1.0 - NODE_PRICE_TOLERANCE));
        prices
            .get(at)
            .filter(|&&x| (x - price).abs() <= NODE_PRICE_TOLERANCE * x.max(price))
            .map(|_| at)
    }

    /// The level-1 price vector: the root price on every item.
    pub fn root_vector(&self, m: usize) -> Result<PriceVector, PriceLearningError> {
        Ok(PriceVector::uniform(m, self.root_price())?)
    }
}

/// `p'(l) = gamma^(2 alpha^(beta - i) (j - 1)) p(l)`: every item moves to
/// the `j`th child of its current level-`level` node.
pub fn next_prices(
    tree: &PriceTree,
    level: usize,
    j: usize,
    p: &PriceVector,
) -> Result<PriceVector, PriceLearningError> {
    let TreeParams {
        alpha, beta, gamma, ..
    } = tree.params;
    if !(1..=beta).contains(&level) {
        return Err(PriceLearningError::BadLevel { level, beta });
    }
    if !(1..=alpha).contains(&j) {
        return Err(PriceLearningError::BadBranch { j, alpha });
    }
    for (item, &price) in p.as_slice().iter().enumerate() {
        if tree.locate(level, price).is_none() {
            return Err(PriceLearningError::NotLevelVector { item, price, level });
        }
    }
    let exponent = 2 * alpha.pow((beta - level) as u32) * (j - 1);
    Ok(p.scaled(gamma.powf(exponent as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(alpha: usize, beta: usize, gamma: f64, parity: Parity) -> PriceTree {
        let params = TreeParams::new(alpha, beta, Some(gamma), 1.0, 1.0, parity).unwrap();
        build_price_tree(params).unwrap()
    }

    #[test]
    fn figure_shape() {
        let t = tree(2, 3, 30.0, Parity::Even);
        assert_eq!(t.level_exponents(4).unwrap(), &[0, 2, 4, 6, 8, 10, 12, 14]);
        assert_eq!(t.level_exponents(3).unwrap(), &[0, 4, 8, 12]);
        assert_eq!(t.level_exponents(2).unwrap(), &[0, 8]);
        assert_eq!(t.level_exponents(1).unwrap(), &[0]);
        assert_eq!(t.root_price(), 1.0);
        assert_eq!(t.node_count(), 15);
    }

    #[test]
    fn odd_tree_is_shifted_by_one_power() {
        let t = tree(2, 2, 20.0, Parity::Odd);
        assert_eq!(t.level_exponents(3).unwrap(), &[1, 3, 5, 7]);
        assert_eq!(t.level_exponents(1).unwrap(), &[1]);
        assert_eq!(t.root_price(), 20.0);
    }

    #[test]
    fn minimal_tree() {
        let t = tree(2, 1, 10.0, Parity::Even);
        assert_eq!(t.level_exponents(2).unwrap(), &[0, 2]);
        assert_eq!(t.root_price(), t.node_price(2, 0).unwrap());
    }

    #[test]
    fn invariants_are_named() {
        let err = |a, b, g: Option<f64>, lo, hi| {
            TreeParams::new(a, b, g, lo, hi, Parity::Even).unwrap_err()
        };
        assert_eq!(
            err(1, 2, None, 1.0, 2.0),
            PriceLearningError::AlphaTooSmall(1)
        );
        assert_eq!(
            err(2, 0, None, 1.0, 2.0),
            PriceLearningError::BetaTooSmall(0)
        );
        assert!(matches!(
            err(2, 2, Some(15.0), 1.0, 2.0),
            PriceLearningError::GammaBelowTenBeta { .. }
        ));
        assert!(matches!(
            err(2, 1, Some(10.0), 1.0, 1e5),
            PriceLearningError::RangeNotCovered { .. }
        ));
        assert!(matches!(
            err(2, 1, None, 0.0, 1.0),
            PriceLearningError::BadPsi { .. }
        ));
        assert!(matches!(
            err(4, 6, None, 1.0, 2.0),
            PriceLearningError::PricesOverflow
        ));
    }

    #[test]
    fn default_gamma_covers_range() {
        for ratio in [1.0, 16.0 * 512.0, 1e12, 1e40] {
            let p = TreeParams::new(2, 2, None, 3.0, 3.0 * ratio, Parity::Odd).unwrap();
            assert!(p.gamma >= 20.0);
            assert!(p.psi_min * p.gamma.powi(8) >= p.psi_max);
        }
    }

    #[test]
    fn next_prices_checks_arguments() {
        let t = tree(2, 2, 20.0, Parity::Even);
        let root = t.root_vector(3).unwrap();
        assert_eq!(next_prices(&t, 1, 1, &root).unwrap(), root);
        assert_eq!(
            next_prices(&t, 1, 2, &root).unwrap().as_slice(),
            &[20f64.powi(4); 3]
        );
        assert!(matches!(
            next_prices(&t, 3, 1, &root),
            Err(PriceLearningError::BadLevel { .. })
        ));
        assert!(matches!(
            next_prices(&t, 1, 3, &root),
            Err(PriceLearningError::BadBranch { .. })
        ));
        let off = PriceVector::new(vec![1.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            next_prices(&t, 1, 1, &off),
            Err(PriceLearningError::NotLevelVector { item: 1, .. })
        ));
    }
}
