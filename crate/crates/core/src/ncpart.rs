//! Set partitions of `[n]` and the lattice `NC(n)` of non-crossing partitions.
//!
//! Partitions are stored canonically: elements are 1-based, each block is
//! sorted ascending and blocks are ordered by their least element, so two
//! partitions are equal exactly when their block lists are equal.
//!
//! The Möbius function is computed from the lattice recursion
//! `μ(p,p) = 1`, `Σ_{p≤σ≤q} μ(p,σ) = 0`. The closed product formula through the
//! Kreweras complement is only used as a fast path when building cumulant
//! tables, and is checked against the recursion in the tests.

use std::fmt;

use thiserror::Error;

/// Largest ground set accepted by the enumerators (`Bell(12) ≈ 4.2e6`).
pub const MAX_ENUMERATION: usize = 12;

/// Largest index accepted by [`catalan`].
pub const MAX_CATALAN: u32 = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NcError {
    #[error("ground set size {n} is outside the enumeration range 1..={max}")]
    EnumerationBound { n: usize, max: usize },
    #[error("partitions live on different ground sets ([{left}] vs [{right}])")]
    Dimension { left: usize, right: usize },
    #[error("invalid blocks: {0}")]
    InvalidBlocks(String),
    #[error("partition {0} has a crossing")]
    Crossing(String),
    #[error("{lower} is not below {upper} in the refinement order")]
    Order { lower: String, upper: String },
    #[error("Catalan index {0} exceeds the supported range (<= 30)")]
    CatalanOverflow(u32),
}

/// A partition of `[n] = {1, …, n}`.
///
/// The type carries general set partitions; the ones passing
/// [`NcPartition::is_noncrossing`] are the elements of `NC(n)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NcPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl NcPartition {
    /// Builds a partition from arbitrary blocks, canonicalizing their order.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self, NcError> {
        if n == 0 {
            return Err(NcError::InvalidBlocks("ground set must be non-empty".into()));
        }
        let mut seen = vec![false; n];
        let mut blocks = blocks;
        for block in &mut blocks {
            if block.is_empty() {
                return Err(NcError::InvalidBlocks("empty block".into()));
            }
            block.sort_unstable();
            for &e in block.iter() {
                if e == 0 || e > n {
                    return Err(NcError::InvalidBlocks(format!("element {e} not in [{n}]")));
                }
                if seen[e - 1] {
                    return Err(NcError::InvalidBlocks(format!("element {e} repeated")));
                }
                seen[e - 1] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(NcError::InvalidBlocks(format!("element {} not covered", missing + 1)));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { n, blocks })
    }

    /// Like [`NcPartition::new`] but rejects crossing partitions.
    pub fn noncrossing(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self, NcError> {
        let p = Self::new(n, blocks)?;
        if !p.is_noncrossing() {
            return Err(NcError::Crossing(p.to_string()));
        }
        Ok(p)
    }

    /// `0̂`, the partition into singletons.
    pub fn finest(n: usize) -> Self {
        assert!(n > 0, "ground set must be non-empty");
        Self {
            n,
            blocks: (1..=n).map(|i| vec![i]).collect(),
        }
    }

    /// `1̂ = {[n]}`.
    pub fn coarsest(n: usize) -> Self {
        assert!(n > 0, "ground set must be non-empty");
        Self {
            n,
            blocks: vec![(1..=n).collect()],
        }
    }

    /// Builds the partition encoded by a restricted-growth string.
    ///
    /// `labels[i]` is the block index of element `i + 1`; the string must start
    /// at 0 and never exceed the running maximum plus one.
    pub fn from_labels(labels: &[usize]) -> Result<Self, NcError> {
        if labels.is_empty() {
            return Err(NcError::InvalidBlocks("ground set must be non-empty".into()));
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            match l.cmp(&blocks.len()) {
                std::cmp::Ordering::Less => blocks[l].push(i + 1),
                std::cmp::Ordering::Equal => blocks.push(vec![i + 1]),
                std::cmp::Ordering::Greater => {
                    return Err(NcError::InvalidBlocks(format!(
                        "label {l} at position {i} is not a restricted growth string"
                    )))
                }
            }
        }
        Ok(Self {
            n: labels.len(),
            blocks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks, `|π|`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().map(Vec::len)
    }

    /// Restricted-growth string: block index (0-based) of each element.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &e in block {
                labels[e - 1] = b;
            }
        }
        labels
    }

    /// True iff no two blocks interleave as `a < c < b < d`.
    pub fn is_noncrossing(&self) -> bool {
        let labels = self.labels();
        blocks_noncrossing(&self.blocks, &labels)
    }

    /// Refinement order: every block of `self` lies inside a block of `other`.
    pub fn leq(&self, other: &Self) -> Result<bool, NcError> {
        if self.n != other.n {
            return Err(NcError::Dimension {
                left: self.n,
                right: other.n,
            });
        }
        let outer = other.labels();
        Ok(self
            .blocks
            .iter()
            .all(|block| block.iter().all(|&e| outer[e - 1] == outer[block[0] - 1])))
    }

    /// Kreweras complement `K(π)`, relabelled from `{1̄, …, n̄}` to `[n]`.
    ///
    /// Starting from the singletons on the barred points, blocks are merged
    /// greedily as long as `π ∪ σ` stays non-crossing on the interlaced
    /// alphabet `1 1̄ 2 2̄ … n n̄`. The admissible `σ` form the interval
    /// `[0̂, K(π)]`, and every non-maximal element of that interval is covered
    /// by a two-block merge inside it, so the greedy walk ends at `K(π)`.
    pub fn kreweras(&self) -> Result<Self, NcError> {
        if !self.is_noncrossing() {
            return Err(NcError::Crossing(self.to_string()));
        }
        let n = self.n;
        // Positions on the interlaced alphabet: i ↦ 2(i-1), ī ↦ 2(i-1)+1.
        let pi_blocks: Vec<Vec<usize>> = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|&e| 2 * (e - 1)).collect())
            .collect();
        let mut sigma: Vec<Vec<usize>> = (0..n).map(|i| vec![2 * i + 1]).collect();

        let mut merged = true;
        while merged {
            merged = false;
            'search: for i in 0..sigma.len() {
                for j in (i + 1)..sigma.len() {
                    let mut candidate = sigma.clone();
                    let absorbed = candidate.remove(j);
                    candidate[i].extend(absorbed);
                    candidate[i].sort_unstable();
                    if interlaced_noncrossing(2 * n, &pi_blocks, &candidate) {
                        sigma = candidate;
                        merged = true;
                        break 'search;
                    }
                }
            }
        }

        let blocks = sigma
            .into_iter()
            .map(|b| b.into_iter().map(|pos| (pos - 1) / 2 + 1).collect())
            .collect();
        Self::new(n, blocks)
    }
}

impl fmt::Display for NcPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, block) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (i, e) in block.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for NcPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Two blocks cross iff one of them is not confined to a single gap of the
/// other (the outside of its hull counts as one gap).
fn blocks_noncrossing(blocks: &[Vec<usize>], labels: &[usize]) -> bool {
    for block in blocks {
        // Walk the elements inside the hull; each gap between consecutive
        // block elements must only meet blocks that live entirely in it.
        let mut gap_start = block[0];
        for &next in &block[1..] {
            for e in (gap_start + 1)..next {
                let other = &blocks[labels[e - 1]];
                if other[0] < gap_start || *other.last().unwrap() > next {
                    return false;
                }
            }
            gap_start = next;
        }
    }
    true
}

fn interlaced_noncrossing(size: usize, a: &[Vec<usize>], b: &[Vec<usize>]) -> bool {
    let mut labels = vec![0usize; size];
    let blocks: Vec<Vec<usize>> = a
        .iter()
        .chain(b.iter())
        .map(|blk| blk.iter().map(|&p| p + 1).collect())
        .collect();
    for (k, blk) in blocks.iter().enumerate() {
        for &e in blk {
            labels[e - 1] = k;
        }
    }
    blocks_noncrossing(&blocks, &labels)
}

fn check_range(n: usize) -> Result<(), NcError> {
    if n == 0 || n > MAX_ENUMERATION {
        return Err(NcError::EnumerationBound {
            n,
            max: MAX_ENUMERATION,
        });
    }
    Ok(())
}

/// Iterator over all set partitions of `[n]` in lexicographic order of their
/// restricted-growth strings.
pub struct Partitions {
    labels: Vec<usize>,
    maxes: Vec<usize>,
    done: bool,
}

impl Partitions {
    fn new(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            maxes: vec![0; n],
            done: false,
        }
    }
}

impl Iterator for Partitions {
    type Item = NcPartition;

    fn next(&mut self) -> Option<NcPartition> {
        if self.done {
            return None;
        }
        let current = NcPartition::from_labels(&self.labels).expect("valid growth string");
        // Advance: rightmost position that can still grow.
        let n = self.labels.len();
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            let bound = self.maxes[i - 1] + 1;
            if self.labels[i] < bound {
                self.labels[i] += 1;
                self.maxes[i] = self.maxes[i - 1].max(self.labels[i]);
                for j in (i + 1)..n {
                    self.labels[j] = 0;
                    self.maxes[j] = self.maxes[i];
                }
                break;
            }
        }
        Some(current)
    }
}

/// Lazily enumerates all `Bell(n)` set partitions of `[n]`.
pub fn partitions(n: usize) -> Result<Partitions, NcError> {
    check_range(n)?;
    Ok(Partitions::new(n))
}

/// All set partitions of `[n]`, in restricted-growth order.
pub fn enumerate_partitions(n: usize) -> Result<Vec<NcPartition>, NcError> {
    Ok(partitions(n)?.collect())
}

/// True iff `label` can be appended to the growth-string prefix without
/// creating a crossing.
fn can_extend_noncrossing(labels: &[usize], label: usize) -> bool {
    let Some(last) = labels.iter().rposition(|&l| l == label) else {
        return true;
    };
    // Everything strictly between the previous element of the block and the
    // new element must belong to blocks that started after that element.
    labels[last + 1..]
        .iter()
        .all(|&l| labels.iter().position(|&m| m == l).unwrap() > last)
}

fn extend_nc(labels: &mut Vec<usize>, n_blocks: usize, n: usize, out: &mut Vec<NcPartition>) {
    if labels.len() == n {
        out.push(NcPartition::from_labels(labels).expect("valid growth string"));
        return;
    }
    for label in 0..=n_blocks {
        if label < n_blocks && !can_extend_noncrossing(labels, label) {
            continue;
        }
        labels.push(label);
        extend_nc(labels, n_blocks.max(label + 1), n, out);
        labels.pop();
    }
}

/// All non-crossing partitions of `[n]`, in restricted-growth order.
pub fn enumerate_nc(n: usize) -> Result<Vec<NcPartition>, NcError> {
    check_range(n)?;
    let mut out = Vec::with_capacity(catalan(n as u32).unwrap_or(0) as usize);
    extend_nc(&mut Vec::with_capacity(n), 0, n, &mut out);
    Ok(out)
}

/// Catalan number `C_n = binom(2n, n) / (n + 1)`, exact.
pub fn catalan(n: u32) -> Result<u64, NcError> {
    if n > MAX_CATALAN {
        return Err(NcError::CatalanOverflow(n));
    }
    // C_{k+1} = C_k · 2(2k+1) / (k+2); the product stays below 2^128.
    let mut c: u128 = 1;
    for k in 0..n as u128 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    Ok(c as u64)
}

/// Möbius value of the interval `[p, q]` in `NC(n)`, from the lattice recursion.
pub fn mobius(p: &NcPartition, q: &NcPartition) -> Result<i64, NcError> {
    if p.n != q.n {
        return Err(NcError::Dimension { left: p.n, right: q.n });
    }
    for x in [p, q] {
        if !x.is_noncrossing() {
            return Err(NcError::Crossing(x.to_string()));
        }
    }
    if !p.leq(q)? {
        return Err(NcError::Order {
            lower: p.to_string(),
            upper: q.to_string(),
        });
    }
    let mut interval: Vec<NcPartition> = enumerate_nc(p.n)?
        .into_iter()
        .filter(|s| p.leq(s).unwrap() && s.leq(q).unwrap())
        .collect();
    // Linear extension: finer partitions (more blocks) first.
    interval.sort_by_key(|s| std::cmp::Reverse(s.len()));
    let mut values: Vec<i64> = Vec::with_capacity(interval.len());
    for (k, s) in interval.iter().enumerate() {
        let v = if s == p {
            1
        } else {
            -(0..k)
                .filter(|&j| interval[j].leq(s).unwrap())
                .map(|j| values[j])
                .sum::<i64>()
        };
        values.push(v);
    }
    Ok(values[interval.iter().position(|s| s == q).unwrap()])
}

/// `NC(n)` with its order relation precomputed, for repeated Möbius queries.
pub struct NcLattice {
    elements: Vec<NcPartition>,
    /// `order[i * len + j]` is `elements[i] ≤ elements[j]`.
    order: Vec<bool>,
}

impl NcLattice {
    pub fn new(n: usize) -> Result<Self, NcError> {
        let mut elements = enumerate_nc(n)?;
        elements.sort_by_key(|s| std::cmp::Reverse(s.len()));
        let len = elements.len();
        let labels: Vec<Vec<usize>> = elements.iter().map(NcPartition::labels).collect();
        let mut order = vec![false; len * len];
        for i in 0..len {
            for j in 0..len {
                order[i * len + j] = elements[i].blocks.iter().all(|b| {
                    let l = labels[j][b[0] - 1];
                    b.iter().all(|&e| labels[j][e - 1] == l)
                });
            }
        }
        Ok(Self { elements, order })
    }

    /// Elements sorted so that every element precedes the ones above it.
    pub fn elements(&self) -> &[NcPartition] {
        &self.elements
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.order[i * self.elements.len() + j]
    }

    pub fn index_of(&self, p: &NcPartition) -> Option<usize> {
        self.elements.iter().position(|e| e == p)
    }

    /// `μ(elements[i], ·)` for every element (zero outside the up-set of `i`).
    pub fn mobius_row(&self, i: usize) -> Vec<i64> {
        let len = self.elements.len();
        let mut row = vec![0i64; len];
        row[i] = 1;
        for q in (i + 1)..len {
            if !self.leq(i, q) {
                continue;
            }
            row[q] = -(i..q).filter(|&s| self.leq(s, q)).map(|s| row[s]).sum::<i64>();
        }
        row
    }
}

/// `μ(σ, 1̂)` through `[σ, 1̂] ≅ [0̂, K(σ)] ≅ ∏_{W ∈ K(σ)} NC(|W|)`, using the
/// permutation form `K(σ) = σ⁻¹γ` with `γ = (1 2 … n)`.
pub(crate) fn mobius_to_top(p: &NcPartition) -> i64 {
    let n = p.n;
    // σ as a permutation: each block is a cycle in increasing order.
    let mut inverse = vec![0usize; n];
    for block in &p.blocks {
        for (k, &e) in block.iter().enumerate() {
            let next = block[(k + 1) % block.len()];
            inverse[next - 1] = e - 1;
        }
    }
    let mut visited = vec![false; n];
    let mut value = 1i64;
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut len = 0u32;
        let mut i = start;
        while !visited[i] {
            visited[i] = true;
            len += 1;
            i = inverse[(i + 1) % n];
        }
        let sign = if len % 2 == 1 { 1 } else { -1 };
        value *= sign * catalan(len - 1).expect("len <= 12") as i64;
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, blocks: &[&[usize]]) -> NcPartition {
        NcPartition::new(n, blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn single_partition_of_one() {
        assert_eq!(enumerate_partitions(1).unwrap(), vec![p(1, &[&[1]])]);
    }

    #[test]
    fn bell_counts_and_unique_crossing_at_four() {
        assert_eq!(enumerate_partitions(3).unwrap().len(), 5);
        let all4 = enumerate_partitions(4).unwrap();
        assert_eq!(all4.len(), 15);
        let crossing: Vec<_> = all4.iter().filter(|x| !x.is_noncrossing()).collect();
        assert_eq!(crossing, vec![&p(4, &[&[1, 3], &[2, 4]])]);
    }

    #[test]
    fn restricted_growth_order() {
        let all = enumerate_partitions(4).unwrap();
        let labels: Vec<Vec<usize>> = all.iter().map(NcPartition::labels).collect();
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(labels, sorted);
        assert_eq!(all[0], NcPartition::coarsest(4));
        assert_eq!(*all.last().unwrap(), NcPartition::finest(4));
    }

    #[test]
    fn crossing_predicate() {
        assert!(p(3, &[&[1, 2], &[3]]).is_noncrossing());
        assert!(!p(4, &[&[1, 3], &[2, 4]]).is_noncrossing());
        assert!(NcPartition::coarsest(5).is_noncrossing());
        assert!(p(6, &[&[1, 6], &[2, 3], &[4, 5]]).is_noncrossing());
        assert!(p(6, &[&[1, 4], &[2, 3], &[5, 6]]).is_noncrossing());
        assert!(!p(5, &[&[1, 3, 5], &[2, 4]]).is_noncrossing());
    }

    #[test]
    fn invalid_blocks_rejected() {
        assert!(NcPartition::new(3, vec![vec![1, 2]]).is_err());
        assert!(NcPartition::new(3, vec![vec![1, 2], vec![2, 3]]).is_err());
        assert!(NcPartition::new(3, vec![vec![1, 4], vec![2, 3]]).is_err());
        assert!(NcPartition::noncrossing(4, vec![vec![1, 3], vec![2, 4]]).is_err());
        assert!(NcPartition::from_labels(&[0, 2]).is_err());
    }

    #[test]
    fn nc_counts() {
        let two = enumerate_nc(2).unwrap();
        assert_eq!(two, vec![NcPartition::coarsest(2), NcPartition::finest(2)]);
        assert_eq!(enumerate_nc(3).unwrap().len(), 5);
        assert_eq!(enumerate_nc(4).unwrap().len(), 14);
        assert!(enumerate_nc(0).is_err());
        assert!(matches!(enumerate_nc(13), Err(NcError::EnumerationBound { .. })));
        assert!(enumerate_partitions(13).is_err());
    }

    #[test]
    fn nc_enumeration_matches_filtered_set_partitions() {
        for n in 1..=8 {
            let filtered: Vec<_> = partitions(n).unwrap().filter(|x| x.is_noncrossing()).collect();
            assert_eq!(enumerate_nc(n).unwrap(), filtered, "n = {n}");
        }
    }

    #[test]
    fn refinement_order() {
        let zero = NcPartition::finest(3);
        for x in enumerate_nc(3).unwrap() {
            assert!(zero.leq(&x).unwrap());
        }
        assert!(!NcPartition::coarsest(2).leq(&NcPartition::finest(2)).unwrap());
        assert!(p(3, &[&[1], &[2, 3]]).leq(&NcPartition::coarsest(3)).unwrap());
        assert!(matches!(
            zero.leq(&NcPartition::finest(4)),
            Err(NcError::Dimension { left: 3, right: 4 })
        ));
    }

    #[test]
    fn kreweras_examples() {
        for n in 1..=6 {
            assert_eq!(NcPartition::finest(n).kreweras().unwrap(), NcPartition::coarsest(n));
            assert_eq!(NcPartition::coarsest(n).kreweras().unwrap(), NcPartition::finest(n));
        }
        assert_eq!(p(3, &[&[1, 2], &[3]]).kreweras().unwrap(), p(3, &[&[1], &[2, 3]]));
        assert!(p(4, &[&[1, 3], &[2, 4]]).kreweras().is_err());
    }

    /// Maximal σ ∈ NC(n) with π ∪ σ non-crossing, by exhaustive search.
    fn kreweras_brute_force(pi: &NcPartition) -> NcPartition {
        let n = pi.n();
        let pi_pos: Vec<Vec<usize>> = pi
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&e| 2 * (e - 1)).collect())
            .collect();
        let admissible: Vec<NcPartition> = enumerate_nc(n)
            .unwrap()
            .into_iter()
            .filter(|s| {
                let s_pos: Vec<Vec<usize>> = s
                    .blocks()
                    .iter()
                    .map(|b| b.iter().map(|&e| 2 * (e - 1) + 1).collect())
                    .collect();
                interlaced_noncrossing(2 * n, &pi_pos, &s_pos)
            })
            .collect();
        let maximal: Vec<&NcPartition> = admissible
            .iter()
            .filter(|s| admissible.iter().all(|t| t == *s || !s.leq(t).unwrap()))
            .collect();
        assert_eq!(maximal.len(), 1, "unique maximum for {pi}");
        maximal[0].clone()
    }

    #[test]
    fn kreweras_greedy_matches_brute_force() {
        for n in 1..=6 {
            for pi in enumerate_nc(n).unwrap() {
                assert_eq!(pi.kreweras().unwrap(), kreweras_brute_force(&pi), "pi = {pi}");
            }
        }
    }

    #[test]
    fn kreweras_block_count_identity() {
        for n in 1..=7 {
            for pi in enumerate_nc(n).unwrap() {
                assert_eq!(pi.len() + pi.kreweras().unwrap().len(), n + 1);
            }
        }
    }

    #[test]
    fn catalan_values() {
        assert_eq!(catalan(0).unwrap(), 1);
        assert_eq!(catalan(3).unwrap(), 5);
        assert_eq!(catalan(10).unwrap(), 16796);
        assert_eq!(catalan(30).unwrap(), 3_814_986_502_092_304);
        assert!(matches!(catalan(31), Err(NcError::CatalanOverflow(31))));
    }

    #[test]
    fn mobius_examples() {
        let x = p(3, &[&[1], &[2, 3]]);
        assert_eq!(mobius(&x, &x).unwrap(), 1);
        assert_eq!(mobius(&NcPartition::finest(2), &NcPartition::coarsest(2)).unwrap(), -1);
        assert_eq!(mobius(&NcPartition::finest(3), &NcPartition::coarsest(3)).unwrap(), 2);
        assert_eq!(mobius(&NcPartition::finest(4), &NcPartition::coarsest(4)).unwrap(), -5);
    }

    #[test]
    fn mobius_errors() {
        let top = NcPartition::coarsest(3);
        let bottom = NcPartition::finest(3);
        assert!(matches!(mobius(&top, &bottom), Err(NcError::Order { .. })));
        assert!(matches!(
            mobius(&bottom, &NcPartition::coarsest(4)),
            Err(NcError::Dimension { .. })
        ));
        let crossing = p(4, &[&[1, 3], &[2, 4]]);
        assert!(matches!(
            mobius(&NcPartition::finest(4), &crossing),
            Err(NcError::Crossing(_))
        ));
    }

    #[test]
    fn lattice_row_agrees_with_direct_recursion() {
        let lattice = NcLattice::new(4).unwrap();
        for (i, a) in lattice.elements().iter().enumerate() {
            let row = lattice.mobius_row(i);
            for (j, b) in lattice.elements().iter().enumerate() {
                if lattice.leq(i, j) {
                    assert_eq!(row[j], mobius(a, b).unwrap());
                }
            }
        }
    }

    #[test]
    fn product_formula_matches_recursion() {
        for n in 1..=6 {
            let lattice = NcLattice::new(n).unwrap();
            let top = lattice.index_of(&NcPartition::coarsest(n)).unwrap();
            for (i, sigma) in lattice.elements().iter().enumerate() {
                assert_eq!(mobius_to_top(sigma), lattice.mobius_row(i)[top], "sigma = {sigma}");
            }
        }
    }

    #[test]
    fn permutation_kreweras_matches_greedy() {
        // The product formula reads block sizes off the cycles of σ⁻¹γ.
        for n in 1..=8 {
            for pi in enumerate_nc(n).unwrap() {
                let mut sizes: Vec<usize> = pi.kreweras().unwrap().block_sizes().collect();
                sizes.sort_unstable();
                let expected: i64 = sizes
                    .iter()
                    .map(|&s| {
                        let sign = if s % 2 == 1 { 1 } else { -1 };
                        sign * catalan(s as u32 - 1).unwrap() as i64
                    })
                    .product();
                assert_eq!(mobius_to_top(&pi), expected);
            }
        }
    }
}
