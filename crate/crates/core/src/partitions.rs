//! Set-partition machinery: exact Bell numbers, Stirling counts, restricted
//! growth string enumeration, and exact uniform sampling of partitions.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Bell numbers B_0..=B_n via the Bell triangle, keeping one row at a time.
pub fn bell_numbers(n: usize) -> Vec<BigUint> {
    let mut bells = Vec::with_capacity(n + 1);
    bells.push(BigUint::one());
    let mut row = vec![BigUint::one()];
    for _ in 1..=n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(row.last().unwrap().clone());
        for v in &row {
            let last = next.last().unwrap().clone();
            next.push(last + v);
        }
        bells.push(next[0].clone());
        row = next;
    }
    bells
}

/// Stirling numbers of the second kind S(n, 0..=n).
pub fn stirling2_row(n: usize) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()]; // S(0,0) = 1
    for m in 1..=n {
        let mut next = vec![BigUint::zero(); m + 1];
        for (k, slot) in next.iter_mut().enumerate().skip(1) {
            *slot = BigUint::from(k) * &prev_entry(&row, k) + prev_entry(&row, k - 1);
        }
        row = next;
    }
    row
}

fn prev_entry(row: &[BigUint], k: usize) -> BigUint {
    row.get(k).cloned().unwrap_or_else(BigUint::zero)
}

/// Number of partitions of an n-set into at most `max_blocks` blocks.
pub fn partitions_at_most(n: usize, max_blocks: usize) -> BigUint {
    stirling2_row(n)
        .into_iter()
        .take(max_blocks.min(n) + 1)
        .sum()
}

/// Enumerate set partitions of [n] as restricted growth strings
/// (`rgs[i]` is the block id of element i, blocks numbered by first
/// appearance). `max_blocks` bounds the block count when given.
pub fn enumerate_rgs(n: usize, max_blocks: Option<usize>, f: &mut impl FnMut(&[u8])) {
    let cap = max_blocks.unwrap_or(n.max(1));
    if cap == 0 {
        if n == 0 {
            f(&[]);
        }
        return;
    }
    let mut rgs = vec![0u8; n];
    fn rec(rgs: &mut Vec<u8>, i: usize, used: usize, cap: usize, f: &mut impl FnMut(&[u8])) {
        if i == rgs.len() {
            f(rgs);
            return;
        }
        let top = (used + 1).min(cap);
        for v in 0..top {
            rgs[i] = v as u8;
            rec(rgs, i + 1, used.max(v + 1), cap, f);
        }
    }
    if n == 0 {
        f(&[]);
        return;
    }
    rec(&mut rgs, 0, 0, cap, f);
}

/// Ratio of consecutive table entries as f64 (used for expected block counts).
pub fn big_ratio(num: &BigUint, den: &BigUint) -> f64 {
    let shifted = (num << 64u32) / den;
    shifted.to_f64().unwrap_or(f64::INFINITY) / 2f64.powi(64)
}

/// Exact uniform sampler over set partitions, backed by a Bell number table.
///
/// The block containing the least unassigned element gets j extra members
/// with probability C(m-1, j) * B_{m-1-j} / B_m, recursing on the remainder.
#[derive(Debug, Clone)]
pub struct PartitionSampler {
    bells: Vec<BigUint>,
}

impl PartitionSampler {
    pub fn with_max(n: usize) -> PartitionSampler {
        PartitionSampler {
            bells: bell_numbers(n),
        }
    }

    pub fn max_n(&self) -> usize {
        self.bells.len() - 1
    }

    pub fn bell(&self, n: usize) -> Result<&BigUint> {
        self.bells.get(n).ok_or(Error::PartitionBound {
            requested: n,
            bound: self.max_n(),
        })
    }

    /// Expected block count of a uniform partition of [n]: B_{n+1}/B_n - 1.
    pub fn expected_blocks(&self, n: usize) -> Result<f64> {
        let b1 = self.bell(n + 1)?;
        let b0 = self.bell(n)?;
        Ok(big_ratio(b1, b0) - 1.0)
    }

    /// Uniform partition of [n]; returns block ids per element, blocks
    /// numbered by first appearance.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if n > self.max_n() {
            return Err(Error::PartitionBound {
                requested: n,
                bound: self.max_n(),
            });
        }
        let mut block_of = vec![0usize; n];
        let mut unassigned: Vec<usize> = (0..n).collect();
        let mut block = 0usize;
        while !unassigned.is_empty() {
            let m = unassigned.len();
            let first = unassigned[0];
            let j = self.draw_block_cosize(m, rng);
            // choose the j companions uniformly from the remaining m-1
            let rest = &mut unassigned[1..];
            for i in 0..j {
                let pick = i + rng.random_range(0..rest.len() - i);
                rest.swap(i, pick);
            }
            block_of[first] = block;
            for &e in unassigned[1..=j].iter() {
                block_of[e] = block;
            }
            unassigned.drain(0..=j);
            block += 1;
        }
        Ok(block_of)
    }

    /// Draw j (number of companions of the least element) for a remainder of
    /// size m, with P(j) = C(m-1, j) * B_{m-1-j} / B_m.
    fn draw_block_cosize<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> usize {
        debug_assert!(m >= 1);
        let target = uniform_below(&self.bells[m], rng);
        let mut acc = BigUint::zero();
        let mut binom = BigUint::one(); // C(m-1, j)
        for j in 0..m {
            acc += &binom * &self.bells[m - 1 - j];
            if target < acc {
                return j;
            }
            // C(m-1, j+1) = C(m-1, j) * (m-1-j) / (j+1)
            binom = binom * BigUint::from(m - 1 - j) / BigUint::from(j + 1);
        }
        m - 1
    }
}

/// Uniform BigUint in [0, bound) by rejection on the top bits.
pub fn uniform_below<R: Rng + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    debug_assert!(!bound.is_zero());
    if bound == &BigUint::one() {
        return BigUint::zero();
    }
    let bits = bound.bits();
    let nbytes = bits.div_ceil(8) as usize;
    let top_mask: u8 = if bits.is_multiple_of(8) {
        0xff
    } else {
        (1u8 << (bits % 8)) - 1
    };
    let mut buf = vec![0u8; nbytes];
    loop {
        rng.fill_bytes(&mut buf);
        buf[nbytes - 1] &= top_mask;
        let cand = BigUint::from_bytes_le(&buf);
        if &cand < bound {
            return cand;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bell_values_match_known_table() {
        let b = bell_numbers(10);
        let expected: [u64; 11] = [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
        for (i, &e) in expected.iter().enumerate() {
            assert_eq!(b[i], BigUint::from(e), "B_{i}");
        }
    }

    #[test]
    fn bell_recurrence_holds_for_whole_table() {
        // B_{n+1} = sum_j C(n, j) B_{n-j}
        let b = bell_numbers(40);
        for n in 0..40 {
            let mut acc = BigUint::zero();
            let mut binom = BigUint::one();
            for j in 0..=n {
                acc += &binom * &b[n - j];
                if j < n {
                    binom = binom * BigUint::from(n - j) / BigUint::from(j + 1);
                }
            }
            assert_eq!(acc, b[n + 1], "recurrence at n={n}");
        }
    }

    #[test]
    fn stirling_row_sums_to_bell() {
        for n in 0..12 {
            let total: BigUint = stirling2_row(n).into_iter().sum();
            assert_eq!(total, bell_numbers(n)[n]);
        }
    }

    #[test]
    fn rgs_enumeration_counts() {
        let mut count = 0usize;
        enumerate_rgs(3, None, &mut |_| count += 1);
        assert_eq!(count, 5);
        count = 0;
        enumerate_rgs(4, None, &mut |_| count += 1);
        assert_eq!(count, 15);
        count = 0;
        enumerate_rgs(4, Some(2), &mut |_| count += 1);
        // S(4,1) + S(4,2) = 1 + 7
        assert_eq!(count, 8);
        count = 0;
        enumerate_rgs(0, None, &mut |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn partitions_at_most_matches_stirling() {
        assert_eq!(partitions_at_most(4, 2), BigUint::from(8u32));
        assert_eq!(partitions_at_most(3, 3), BigUint::from(5u32));
    }

    #[test]
    fn sampler_single_element() {
        let ps = PartitionSampler::with_max(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(ps.sample(1, &mut rng).unwrap(), vec![0]);
        assert_eq!(ps.sample(0, &mut rng).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn sampler_bound_error() {
        let ps = PartitionSampler::with_max(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            ps.sample(5, &mut rng),
            Err(Error::PartitionBound { .. })
        ));
    }

    #[test]
    fn sampler_hits_all_partitions_of_three_roughly_uniformly() {
        let ps = PartitionSampler::with_max(8);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = std::collections::HashMap::new();
        let trials = 20_000;
        for _ in 0..trials {
            let p = ps.sample(3, &mut rng).unwrap();
            *counts.entry(p).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 5);
        for (_, c) in counts {
            // 3 sigma around trials/5
            let mean = trials as f64 / 5.0;
            let sd = (trials as f64 * 0.2 * 0.8).sqrt();
            assert!((c as f64 - mean).abs() < 3.0 * sd, "count {c}");
        }
    }

    #[test]
    fn singleton_probability_at_three_matches_bell_recurrence() {
        // block of element 0 is a singleton with probability B_2/B_3 = 2/5
        let ps = PartitionSampler::with_max(8);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 10_000;
        let mut singles = 0usize;
        for _ in 0..trials {
            let p = ps.sample(3, &mut rng).unwrap();
            if p.iter().filter(|&&b| b == p[0]).count() == 1 {
                singles += 1;
            }
        }
        let p_hat = singles as f64 / trials as f64;
        let sd = (0.4 * 0.6 / trials as f64).sqrt();
        assert!((p_hat - 0.4).abs() < 3.0 * sd, "p_hat = {p_hat}");
    }

    #[test]
    fn expected_blocks_ratio() {
        let ps = PartitionSampler::with_max(21);
        let e = ps.expected_blocks(20).unwrap();
        // B_21 / B_20 - 1
        let exact = 474869816156751f64 / 51724158235372f64 - 1.0;
        assert!((e - exact).abs() < 1e-9);
    }

    #[test]
    fn uniform_below_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bound = BigUint::from(1000u32);
        for _ in 0..1000 {
            assert!(uniform_below(&bound, &mut rng) < bound);
        }
    }
}
