use std::fmt;

use serde::{Serialize, Serializer};

use super::ValuationError;

/// Largest supported item universe. Exhaustive `2^m` enumeration stays
/// tractable below this cap.
pub const MAX_ITEMS: usize = 24;

/// A subset of the items `{0, .., m-1}` stored as a bitmask.
///
/// Every set remembers its universe size so that mixing sets from
/// different universes is caught instead of silently producing garbage.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ItemSet {
    bits: u32,
    m: u8,
}

impl ItemSet {
    pub fn empty(m: usize) -> Result<Self, ValuationError> {
        check_universe(m)?;
        Ok(ItemSet {
            bits: 0,
            m: m as u8,
        })
    }

    pub fn full(m: usize) -> Result<Self, ValuationError> {
        check_universe(m)?;
        Ok(ItemSet {
            bits: full_mask(m),
            m: m as u8,
        })
    }

    pub fn singleton(m: usize, item: usize) -> Result<Self, ValuationError> {
        Self::from_items(m, [item])
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(
        m: usize,
        items: I,
    ) -> Result<Self, ValuationError> {
        check_universe(m)?;
        let mut bits = 0u32;
        for item in items {
            if item >= m {
                return Err(ValuationError::ItemOutOfRange { item, m });
            }
            bits |= 1 << item;
        }
        Ok(ItemSet { bits, m: m as u8 })
    }

    pub fn from_bits(m: usize, bits: u32) -> Result<Self, ValuationError> {
        check_universe(m)?;
        if bits & !full_mask(m) != 0 {
            return Err(ValuationError::ItemOutOfRange {
                item: 31 - bits.leading_zeros() as usize,
                m,
            });
        }
        Ok(ItemSet { bits, m: m as u8 })
    }

    /// Builds a set from a mask already known to fit the universe.
    #[inline]
    pub(crate) fn from_bits_unchecked(m: usize, bits: u32) -> Self {
        debug_assert!(m <= MAX_ITEMS && bits & !full_mask(m) == 0);
        ItemSet { bits, m: m as u8 }
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn universe_size(self) -> usize {
        self.m as usize
    }

    #[inline]
    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn contains(self, item: usize) -> bool {
        item < self.m as usize && self.bits & (1 << item) != 0
    }

    pub fn with(self, item: usize) -> Self {
        assert!(
            item < self.m as usize,
            "item {item} outside universe of size {}",
            self.m
        );
        ItemSet {
            bits: self.bits | (1 << item),
            m: self.m,
        }
    }

    pub fn without(self, item: usize) -> Self {
        assert!(
            item < self.m as usize,
            "item {item} outside universe of size {}",
            self.m
        );
        ItemSet {
            bits: self.bits & !(1 << item),
            m: self.m,
        }
    }

    pub fn union(self, other: Self) -> Self {
        self.same_universe(other);
        ItemSet {
            bits: self.bits | other.bits,
            m: self.m,
        }
    }

    pub fn intersection(self, other: Self) -> Self {
        self.same_universe(other);
        ItemSet {
            bits: self.bits & other.bits,
            m: self.m,
        }
    }

    pub fn difference(self, other: Self) -> Self {
        self.same_universe(other);
        ItemSet {
            bits: self.bits & !other.bits,
            m: self.m,
        }
    }

    pub fn complement(self) -> Self {
        ItemSet {
            bits: !self.bits & full_mask(self.m as usize),
            m: self.m,
        }
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.same_universe(other);
        self.bits & !other.bits == 0
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.same_universe(other);
        self.bits & other.bits == 0
    }

    /// Members in ascending order.
    pub fn iter(self) -> Members {
        Members { bits: self.bits }
    }

    /// Every subset of `self`, starting from the empty set and visiting
    /// masks in increasing numeric order.
    pub fn subsets(self) -> Subsets {
        Subsets {
            outer: self.bits,
            next: Some(0),
            m: self.m,
        }
    }

    #[inline]
    fn same_universe(self, other: Self) {
        assert_eq!(self.m, other.m, "item sets over different universes");
    }
}

#[inline]
pub(crate) fn full_mask(m: usize) -> u32 {
    if m >= 32 {
        u32::MAX
    } else {
        (1u32 << m) - 1
    }
}

pub fn check_universe(m: usize) -> Result<(), ValuationError> {
    if m == 0 || m > MAX_ITEMS {
        return Err(ValuationError::UniverseSize { m, max: MAX_ITEMS });
    }
    Ok(())
}

pub struct Members {
    bits: u32,
}

impl Iterator for Members {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.bits == 0 {
            return None;
        }
        let item = self.bits.trailing_zeros() as usize;
        self.bits &= self.bits - 1;
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.bits.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Members {}

/// Submask enumeration of a fixed outer set.
pub struct Subsets {
    outer: u32,
    next: Option<u32>,
    m: u8,
}

impl Iterator for Subsets {
    type Item = ItemSet;

    #[inline]
    fn next(&mut self) -> Option<ItemSet> {
        let cur = self.next?;
        // (cur - outer) & outer steps to the next larger submask; wraps to 0 after the last.
        let succ = cur.wrapping_sub(self.outer) & self.outer;
        self.next = if succ == 0 { None } else { Some(succ) };
        Some(ItemSet {
            bits: cur,
            m: self.m,
        })
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}/{}", self.m)
    }
}

impl fmt::Display for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, item) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for ItemSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}
