//! Enumeration of ADO occupation indices.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Marker for a missing neighbor (raise above the truncation or lower below zero).
pub const NO_NEIGHBOR: u32 = u32::MAX;

/// Default bound on the number of ADOs a space may hold.
pub const DEFAULT_ADO_BUDGET: u128 = 5_000_000;

/// Occupation counts of one ADO: how many times each basis function appears in its
/// defining time-ordered integrals. Real-part slots come first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdoIndex {
    pub occ_real: Vec<u8>,
    pub occ_imag: Vec<u8>,
}

impl AdoIndex {
    pub fn order(&self) -> usize {
        self.occ_real
            .iter()
            .chain(&self.occ_imag)
            .map(|&o| o as usize)
            .sum()
    }
}

/// `binomial(n_slots + depth, depth)`: number of occupation vectors of total order at most `depth`.
pub fn ado_count(n_slots: usize, depth: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 1..=depth as u128 {
        c = c * (n_slots as u128 + i) / i;
    }
    c
}

/// All ADO indices with order `<= depth`, ordered by order and then by descending
/// occupation vector, with raise/lower neighbor tables.
#[derive(Debug, Clone)]
pub struct HierarchySpace {
    n_real: usize,
    n_imag: usize,
    depth: usize,
    occupations: Vec<u8>,
    orders: Vec<u16>,
    raise: Vec<u32>,
    lower: Vec<u32>,
}

impl HierarchySpace {
    pub fn n_real(&self) -> usize {
        self.n_real
    }

    pub fn n_imag(&self) -> usize {
        self.n_imag
    }

    pub fn n_slots(&self) -> usize {
        self.n_real + self.n_imag
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// Occupations of ADO `i` (real slots first).
    pub fn occupations(&self, i: usize) -> &[u8] {
        let n = self.n_slots();
        &self.occupations[i * n..(i + 1) * n]
    }

    pub fn index(&self, i: usize) -> AdoIndex {
        let occ = self.occupations(i);
        AdoIndex {
            occ_real: occ[..self.n_real].to_vec(),
            occ_imag: occ[self.n_real..].to_vec(),
        }
    }

    pub fn order(&self, i: usize) -> usize {
        self.orders[i] as usize
    }

    /// ADO with one more unit in `slot`, if within the truncation.
    pub fn raise(&self, i: usize, slot: usize) -> Option<usize> {
        let j = self.raise[i * self.n_slots() + slot];
        (j != NO_NEIGHBOR).then_some(j as usize)
    }

    /// ADO with one unit fewer in `slot`, if occupied.
    pub fn lower(&self, i: usize, slot: usize) -> Option<usize> {
        let j = self.lower[i * self.n_slots() + slot];
        (j != NO_NEIGHBOR).then_some(j as usize)
    }

    #[inline]
    pub(crate) fn raise_raw(&self, i: usize, slot: usize) -> u32 {
        self.raise[i * self.n_slots() + slot]
    }

    #[inline]
    pub(crate) fn lower_raw(&self, i: usize, slot: usize) -> u32 {
        self.lower[i * self.n_slots() + slot]
    }

    /// Position of an occupation vector (real slots first).
    pub fn position(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.n_slots()
            || occ.iter().map(|&o| o as usize).sum::<usize>() > self.depth
        {
            return None;
        }
        // walk down from the root; each unit is one raise
        let mut i = 0usize;
        for (slot, &o) in occ.iter().enumerate() {
            for _ in 0..o {
                i = self.raise(i, slot)?;
            }
        }
        Some(i)
    }

    /// Range of positions holding ADOs of order `h`.
    pub fn order_range(&self, h: usize) -> std::ops::Range<usize> {
        let start = self.orders.partition_point(|&o| (o as usize) < h);
        let end = self.orders.partition_point(|&o| (o as usize) <= h);
        start..end
    }
}

/// Enumerates the hierarchy for `n_real + n_imag` basis functions truncated at `depth`.
///
/// Fails with [`Error::Budget`] before allocating when the count exceeds `budget`.
pub fn enumerate_space(
    n_real: usize,
    n_imag: usize,
    depth: usize,
    budget: u128,
) -> Result<HierarchySpace> {
    let n_slots = n_real + n_imag;
    let count = ado_count(n_slots, depth);
    if count > budget {
        return Err(Error::Budget { count, budget });
    }
    if depth > u8::MAX as usize || count >= NO_NEIGHBOR as u128 {
        return Err(Error::Budget { count, budget });
    }
    let count = count as usize;
    let mut occupations = Vec::with_capacity(count * n_slots);
    let mut orders = Vec::with_capacity(count);
    let mut current = vec![0u8; n_slots];
    for h in 0..=depth {
        compositions(h, 0, &mut current, &mut |occ| {
            occupations.extend_from_slice(occ);
            orders.push(h as u16);
        });
    }
    debug_assert_eq!(orders.len(), count);

    let mut lookup: HashMap<&[u8], u32> = HashMap::with_capacity(count);
    for i in 0..count {
        lookup.insert(&occupations[i * n_slots..(i + 1) * n_slots], i as u32);
    }
    let mut raise = vec![NO_NEIGHBOR; count * n_slots];
    let mut lower = vec![NO_NEIGHBOR; count * n_slots];
    let mut scratch = vec![0u8; n_slots];
    for i in 0..count {
        let occ = &occupations[i * n_slots..(i + 1) * n_slots];
        for slot in 0..n_slots {
            if occ[slot] > 0 {
                scratch.copy_from_slice(occ);
                scratch[slot] -= 1;
                let j = lookup[scratch.as_slice()];
                lower[i * n_slots + slot] = j;
                raise[j as usize * n_slots + slot] = i as u32;
            }
        }
    }
    Ok(HierarchySpace {
        n_real,
        n_imag,
        depth,
        occupations,
        orders,
        raise,
        lower,
    })
}

/// Calls `emit` for every way of distributing `remaining` units over slots
/// `slot..`, largest first-slot occupation first.
fn compositions(
    remaining: usize,
    slot: usize,
    current: &mut Vec<u8>,
    emit: &mut impl FnMut(&[u8]),
) {
    let n = current.len();
    if n == 0 {
        if remaining == 0 {
            emit(current);
        }
        return;
    }
    if slot == n - 1 {
        current[slot] = remaining as u8;
        emit(current);
        current[slot] = 0;
        return;
    }
    for take in (0..=remaining).rev() {
        current[slot] = take as u8;
        compositions(remaining - take, slot + 1, current, emit);
    }
    current[slot] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_nontrivial_space() {
        let space = enumerate_space(1, 1, 1, DEFAULT_ADO_BUDGET).unwrap();
        assert_eq!(space.len(), 3);
        assert_eq!(space.occupations(0), &[0, 0]);
        assert_eq!(space.occupations(1), &[1, 0]);
        assert_eq!(space.occupations(2), &[0, 1]);
        assert_eq!(space.raise(0, 0), Some(1));
        assert_eq!(space.raise(0, 1), Some(2));
        assert_eq!(space.raise(1, 0), None);
        assert_eq!(space.lower(2, 1), Some(0));
        assert_eq!(space.lower(0, 0), None);
    }

    #[test]
    fn counts_follow_stars_and_bars() {
        assert_eq!(ado_count(19, 2), 210);
        assert_eq!(
            enumerate_space(9, 10, 2, DEFAULT_ADO_BUDGET).unwrap().len(),
            210
        );
        assert_eq!(ado_count(19, 12), 141_120_525);
        assert_eq!(
            enumerate_space(3, 2, 4, DEFAULT_ADO_BUDGET).unwrap().len() as u128,
            ado_count(5, 4)
        );
    }

    #[test]
    fn nineteen_slots_at_depth_twelve_exceed_budget() {
        match enumerate_space(9, 10, 12, DEFAULT_ADO_BUDGET) {
            Err(Error::Budget { count, budget }) => {
                assert_eq!(count, 141_120_525);
                assert_eq!(budget, DEFAULT_ADO_BUDGET);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn raise_inverts_lower() {
        let space = enumerate_space(3, 2, 4, DEFAULT_ADO_BUDGET).unwrap();
        for i in 0..space.len() {
            for slot in 0..space.n_slots() {
                if let Some(j) = space.lower(i, slot) {
                    assert_eq!(space.raise(j, slot), Some(i));
                    assert_eq!(space.order(j) + 1, space.order(i));
                }
            }
            assert_eq!(space.position(space.occupations(i)), Some(i));
        }
    }

    #[test]
    fn orders_are_contiguous() {
        let space = enumerate_space(2, 2, 3, DEFAULT_ADO_BUDGET).unwrap();
        assert_eq!(space.order_range(0), 0..1);
        assert_eq!(space.order_range(1), 1..5);
        assert_eq!(space.order_range(3).end, space.len());
    }

    #[test]
    fn empty_basis_has_single_ado() {
        let space = enumerate_space(0, 0, 5, DEFAULT_ADO_BUDGET).unwrap();
        assert_eq!(space.len(), 1);
    }
}
