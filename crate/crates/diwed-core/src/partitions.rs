//! Partitions of the party set `[n]` with block-size cap `k`, the refinement
//! partial order, and the reduced candidate set the bound optimization has to
//! visit.
//!
//! For permutationally invariant expressions only the multiset of block sizes
//! matters, so candidates are enumerated as [`SizeSignature`]s and realized
//! through [`canonical_partition`]. Full set-partition enumeration (needed for
//! site-resolved expressions) is exposed but gated to `n ≤ 8`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// A disjoint cover of `{0, .., n-1}` into nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    n: usize,
}

impl Partition {
    /// Builds a partition, sorting each block and the block list (by size
    /// descending, then lexicographic) so equal partitions compare equal.
    pub fn new(blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut blocks: Vec<Vec<usize>> = blocks;
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            block.sort_unstable();
            for &i in block.iter() {
                if i >= n {
                    return Err(Error::InvalidPartition(format!("index {i} out of range")));
                }
                if seen[i] {
                    return Err(Error::InvalidPartition(format!("index {i} repeated")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidPartition("blocks do not cover [n]".into()));
        }
        blocks.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        Ok(Self { blocks, n })
    }

    /// Singleton partition `{{0}, {1}, ..., {n-1}}`.
    pub fn singletons(n: usize) -> Self {
        Self { blocks: (0..n).map(|i| vec![i]).collect(), n }
    }

    /// The trivial single-block partition `{[n]}`.
    pub fn whole(n: usize) -> Self {
        Self { blocks: vec![(0..n).collect()], n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn signature(&self) -> SizeSignature {
        let mut sizes: Vec<usize> = self.blocks.iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        SizeSignature { sizes }
    }

    /// Block index owning party `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.blocks.iter().position(|b| b.binary_search(&i).is_ok()).expect("index in range")
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.blocks.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let blocks: Vec<Vec<usize>> = Vec::deserialize(deserializer)?;
        let n = blocks.iter().map(|b| b.len()).sum();
        Partition::new(blocks, n).map_err(D::Error::custom)
    }
}

/// Multiset of block sizes, sorted descending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SizeSignature {
    sizes: Vec<usize>,
}

impl SizeSignature {
    pub fn new(mut sizes: Vec<usize>) -> Result<Self> {
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidPartition("zero-size part".into()));
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn max_part(&self) -> usize {
        self.sizes.first().copied().unwrap_or(0)
    }

    /// Compact label like `[4,3,1]`, used to tag sweep output rows.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        format!("[{}]", parts.join(","))
    }
}

impl Serialize for SizeSignature {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.sizes.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SizeSignature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let sizes: Vec<usize> = Vec::deserialize(deserializer)?;
        SizeSignature::new(sizes).map_err(D::Error::custom)
    }
}

/// `true` iff every block of `p` is contained in some block of `q`
/// (`p ≼ q` in the refinement order).
pub fn refines(p: &Partition, q: &Partition) -> Result<bool> {
    if p.n() != q.n() {
        return Err(Error::InvalidPartition("partitions over different n".into()));
    }
    for block in p.blocks() {
        let owner = q.block_of(block[0]);
        if !block.iter().all(|&i| q.block_of(i) == owner) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Size signatures of the coarse-maximal partitions with parts ≤ `k`: no two
/// parts may merge without exceeding `k`. Coarsening never raises the bound,
/// so these suffice as optimization candidates.
///
/// Output is deterministic: lexicographically descending.
pub fn candidate_signatures(n: usize, k: usize) -> Result<Vec<SizeSignature>> {
    let mut sigs = all_signatures(n, k)?;
    // parts are descending, so the only pair that could merge is the last two
    sigs.retain(|sig| {
        let s = sig.sizes();
        s.len() < 2 || s[s.len() - 1] + s[s.len() - 2] > k
    });
    Ok(sigs)
}

fn descend(remaining: usize, max_part: usize, parts: &mut Vec<usize>, out: &mut Vec<SizeSignature>) {
    if remaining == 0 {
        out.push(SizeSignature { sizes: parts.clone() });
        return;
    }
    let hi = max_part.min(remaining);
    for p in (1..=hi).rev() {
        parts.push(p);
        descend(remaining - p, p, parts, out);
        parts.pop();
    }
}

/// All integer partitions of `n` with parts ≤ `k` (descending parts,
/// lexicographically descending order).
pub fn all_signatures(n: usize, k: usize) -> Result<Vec<SizeSignature>> {
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!("need 1 ≤ k ≤ n, got k={k}, n={n}")));
    }
    let mut out = Vec::new();
    let mut parts = Vec::new();
    descend(n, k, &mut parts, &mut out);
    Ok(out)
}

/// Canonical representative: consecutive index ranges in descending size
/// order, e.g. `[2,2]` over 4 parties → `{{0,1},{2,3}}`.
pub fn canonical_partition(sig: &SizeSignature) -> Partition {
    let mut blocks = Vec::with_capacity(sig.sizes.len());
    let mut next = 0;
    for &s in &sig.sizes {
        blocks.push((next..next + s).collect());
        next += s;
    }
    Partition { blocks, n: next }
}

/// All set partitions of `[n]` with block sizes ≤ `k`. Bell-number growth;
/// gated to `n ≤ 8`.
pub fn all_partitions(n: usize, k: usize) -> Result<Vec<Partition>> {
    if n > 8 {
        return Err(Error::DimensionBudget(format!(
            "set-partition enumeration gated at n ≤ 8, got {n}"
        )));
    }
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!("need 1 ≤ k ≤ n, got k={k}, n={n}")));
    }
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    fn place(i: usize, n: usize, k: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Partition>) {
        if i == n {
            out.push(Partition::new(blocks.clone(), n).expect("valid by construction"));
            return;
        }
        for b in 0..blocks.len() {
            if blocks[b].len() < k {
                blocks[b].push(i);
                place(i + 1, n, k, blocks, out);
                blocks[b].pop();
            }
        }
        blocks.push(vec![i]);
        place(i + 1, n, k, blocks, out);
        blocks.pop();
    }
    place(0, n, k, &mut blocks, &mut out);
    Ok(out)
}
