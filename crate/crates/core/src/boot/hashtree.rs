// Copyright 2026 The secmodel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! dm-verity style hash trees.
//!
//! The partition is split into `block_size` blocks (the last one zero padded).
//! Level 0 holds one SHA-256 digest per block. Each higher level holds one
//! digest per group of `block_size / 32` digests of the level below, taken
//! over the group zero padded to a full block. Levels are built until one
//! group remains; the digest of that group is the root, which is not stored
//! in the tree but signed in the VBMeta descriptor.
//!
//! A partition of a single block has no stored levels: its root is the digest
//! of the block itself and it is verified atomically.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{Digest, DIGEST_LEN};

pub const DEFAULT_BLOCK_SIZE: u32 = 4096;
pub const MIN_BLOCK_SIZE: u32 = 2 * DIGEST_LEN as u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HashTreeError {
    #[error("block size {0} must be a multiple of {DIGEST_LEN} and at least {MIN_BLOCK_SIZE}")]
    BadBlockSize(u32),
    #[error("empty partition")]
    Empty,
    #[error("block {index} out of range (leaf count {leaves})")]
    IndexOutOfRange { index: usize, leaves: usize },
    #[error("hash tree is {got} bytes, expected {expected}")]
    BadTreeLength { got: usize, expected: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockStatus {
    Ok,
    Corrupt,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashTree {
    pub block_size: u32,
    pub data_size: u64,
    /// Level 0 (one digest per block) first.
    pub levels: Vec<Vec<Digest>>,
    pub root: Digest,
}

fn check_block_size(bs: u32) -> Result<(), HashTreeError> {
    if bs < MIN_BLOCK_SIZE || !(bs as usize).is_multiple_of(DIGEST_LEN) {
        return Err(HashTreeError::BadBlockSize(bs));
    }
    Ok(())
}

fn padded_digest(chunk: &[u8], block_size: usize) -> Digest {
    if chunk.len() == block_size {
        return Digest::of(chunk);
    }
    let mut buf = vec![0u8; block_size];
    buf[..chunk.len()].copy_from_slice(chunk);
    Digest::of(&buf)
}

fn group_digest(children: &[Digest], block_size: usize) -> Digest {
    let mut buf = vec![0u8; block_size];
    for (i, d) in children.iter().enumerate() {
        buf[i * DIGEST_LEN..(i + 1) * DIGEST_LEN].copy_from_slice(d.as_bytes());
    }
    Digest::of(&buf)
}

/// Number of digests in each stored level for a partition of `data_size`.
pub fn level_sizes(data_size: u64, block_size: u32) -> Vec<usize> {
    let fanout = block_size as usize / DIGEST_LEN;
    let mut n = data_size.div_ceil(block_size as u64) as usize;
    let mut sizes = Vec::new();
    if n <= 1 {
        return sizes;
    }
    loop {
        sizes.push(n);
        if n <= fanout {
            break;
        }
        n = n.div_ceil(fanout);
    }
    sizes
}

impl HashTree {
    pub fn build(data: &[u8], block_size: u32) -> Result<Self, HashTreeError> {
        check_block_size(block_size)?;
        if data.is_empty() {
            return Err(HashTreeError::Empty);
        }
        let bs = block_size as usize;
        let fanout = bs / DIGEST_LEN;
        let leaves: Vec<Digest> = data.chunks(bs).map(|c| padded_digest(c, bs)).collect();
        if leaves.len() == 1 {
            return Ok(Self { block_size, data_size: data.len() as u64, levels: Vec::new(), root: leaves[0] });
        }
        let mut levels = vec![leaves];
        loop {
            let top = levels.last().expect("non-empty");
            if top.len() <= fanout {
                let root = group_digest(top, bs);
                return Ok(Self { block_size, data_size: data.len() as u64, levels, root });
            }
            let next: Vec<Digest> = top.chunks(fanout).map(|g| group_digest(g, bs)).collect();
            levels.push(next);
        }
    }

    pub fn fanout(&self) -> usize {
        self.block_size as usize / DIGEST_LEN
    }

    pub fn leaf_count(&self) -> usize {
        self.data_size.div_ceil(self.block_size as u64) as usize
    }

    /// Stored levels, leaf level first, as raw digests.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.levels.iter().flatten().flat_map(|d| d.0).collect()
    }

    /// Rebuilds a tree from its stored bytes and the root signed elsewhere.
    pub fn from_bytes(bytes: &[u8], block_size: u32, data_size: u64, root: Digest) -> Result<Self, HashTreeError> {
        check_block_size(block_size)?;
        if data_size == 0 {
            return Err(HashTreeError::Empty);
        }
        let sizes = level_sizes(data_size, block_size);
        let expected = sizes.iter().sum::<usize>() * DIGEST_LEN;
        if bytes.len() != expected {
            return Err(HashTreeError::BadTreeLength { got: bytes.len(), expected });
        }
        let mut levels = Vec::with_capacity(sizes.len());
        let mut off = 0;
        for n in sizes {
            let lvl = (0..n)
                .map(|i| {
                    let s = off + i * DIGEST_LEN;
                    Digest::from_slice(&bytes[s..s + DIGEST_LEN]).expect("length checked")
                })
                .collect();
            off += n * DIGEST_LEN;
            levels.push(lvl);
        }
        Ok(Self { block_size, data_size, levels, root })
    }

    /// On-access verification of one block: recomputes the digest path from
    /// the block up to the signed root, checking every stored node on the way.
    pub fn verify_block(&self, data: &[u8], index: usize) -> Result<BlockStatus, HashTreeError> {
        let leaves = self.leaf_count();
        if index >= leaves {
            return Err(HashTreeError::IndexOutOfRange { index, leaves });
        }
        let bs = self.block_size as usize;
        let start = index * bs;
        let end = ((index + 1) * bs).min(self.data_size as usize);
        if data.len() < end {
            return Ok(BlockStatus::Corrupt);
        }
        let leaf = padded_digest(&data[start..end], bs);
        if self.levels.is_empty() {
            return Ok(status(leaf == self.root));
        }
        if self.levels[0].get(index) != Some(&leaf) {
            return Ok(BlockStatus::Corrupt);
        }
        let fanout = self.fanout();
        let mut idx = index;
        for k in 0..self.levels.len() {
            let lvl = &self.levels[k];
            let g = idx / fanout;
            let children = &lvl[g * fanout..((g + 1) * fanout).min(lvl.len())];
            let parent = group_digest(children, bs);
            let expected = match self.levels.get(k + 1) {
                Some(up) => up.get(g),
                None => Some(&self.root),
            };
            if expected != Some(&parent) {
                return Ok(BlockStatus::Corrupt);
            }
            idx = g;
        }
        Ok(BlockStatus::Ok)
    }

    /// Indices of all blocks failing verification.
    pub fn corrupt_blocks(&self, data: &[u8]) -> Vec<usize> {
        let mut bad: Vec<usize> = (0..self.leaf_count())
            .filter(|&i| self.verify_block(data, i) != Ok(BlockStatus::Ok))
            .collect();
        // Bytes past the declared size are not covered by the tree.
        if data.len() as u64 != self.data_size && bad.is_empty() {
            bad.push(self.leaf_count().saturating_sub(1));
        }
        bad
    }
}

fn status(ok: bool) -> BlockStatus {
    if ok {
        BlockStatus::Ok
    } else {
        BlockStatus::Corrupt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(n: usize) -> Vec<u8> {
        (0..n).map(|i| (i * 31 % 251) as u8).collect()
    }

    #[test]
    fn level_shapes() {
        // 64-byte blocks: fanout 2.
        assert_eq!(level_sizes(64, 64), Vec::<usize>::new());
        assert_eq!(level_sizes(65, 64), vec![2]);
        assert_eq!(level_sizes(16 * 64, 64), vec![16, 8, 4, 2]);
        assert_eq!(level_sizes(5 * 64, 64), vec![5, 3, 2]);
        assert_eq!(level_sizes(3 * 4096, 4096), vec![3]);
    }

    #[test]
    fn root_of_two_leaves_by_hand() {
        let d = data(128);
        let t = HashTree::build(&d, 64).unwrap();
        let l0 = Digest::of(&d[..64]);
        let l1 = Digest::of(&d[64..]);
        assert_eq!(t.levels, vec![vec![l0, l1]]);
        assert_eq!(t.root, Digest::of_parts([l0.0, l1.0]));
    }

    #[test]
    fn single_block_is_atomic() {
        let d = data(40);
        let t = HashTree::build(&d, 64).unwrap();
        assert!(t.levels.is_empty());
        let mut padded = d.clone();
        padded.resize(64, 0);
        assert_eq!(t.root, Digest::of(&padded));
        assert_eq!(t.verify_block(&d, 0), Ok(BlockStatus::Ok));
        let mut bad = d.clone();
        bad[3] ^= 1;
        assert_eq!(t.verify_block(&bad, 0), Ok(BlockStatus::Corrupt));
    }

    #[test]
    fn bytes_round_trip_and_bad_length() {
        let d = data(16 * 64);
        let t = HashTree::build(&d, 64).unwrap();
        let back = HashTree::from_bytes(&t.to_bytes(), 64, d.len() as u64, t.root).unwrap();
        assert_eq!(back, t);
        assert!(matches!(
            HashTree::from_bytes(&t.to_bytes()[1..], 64, d.len() as u64, t.root),
            Err(HashTreeError::BadTreeLength { .. })
        ));
    }

    #[test]
    fn leaves_cover_partition() {
        for n in [1, 63, 64, 65, 1000, 4096] {
            let t = HashTree::build(&data(n), 64).unwrap();
            assert!(t.leaf_count() * 64 >= n);
        }
    }

    #[test]
    fn bad_block_size_and_empty() {
        assert_eq!(HashTree::build(b"x", 48), Err(HashTreeError::BadBlockSize(48)));
        assert_eq!(HashTree::build(b"x", 32), Err(HashTreeError::BadBlockSize(32)));
        assert_eq!(HashTree::build(b"", 64), Err(HashTreeError::Empty));
    }

    #[test]
    fn out_of_range() {
        let d = data(4 * 64);
        let t = HashTree::build(&d, 64).unwrap();
        assert_eq!(t.verify_block(&d, 4), Err(HashTreeError::IndexOutOfRange { index: 4, leaves: 4 }));
    }

    /// Oracle: flip each bit of a 4-block fixture; exactly the affected block
    /// must fail.
    #[test]
    fn every_bit_flip_hits_exactly_one_block() {
        let d = data(4 * 64);
        let t = HashTree::build(&d, 64).unwrap();
        assert!(t.corrupt_blocks(&d).is_empty());
        for byte in 0..d.len() {
            for bit in 0..8 {
                let mut m = d.clone();
                m[byte] ^= 1 << bit;
                let bad: Vec<usize> =
                    (0..4).filter(|&i| t.verify_block(&m, i).unwrap() == BlockStatus::Corrupt).collect();
                assert_eq!(bad, vec![byte / 64]);
            }
        }
    }

    #[test]
    fn tampered_interior_node_detected() {
        let d = data(4 * 64);
        let t = HashTree::build(&d, 64).unwrap();
        assert_eq!(t.levels.len(), 2);
        let mut bytes = t.to_bytes();
        // First byte of level 1, node 0.
        bytes[4 * 32] ^= 0x80;
        let tampered = HashTree::from_bytes(&bytes, 64, d.len() as u64, t.root).unwrap();
        assert_eq!(tampered.verify_block(&d, 0), Ok(BlockStatus::Corrupt));
        assert_eq!(tampered.verify_block(&d, 1), Ok(BlockStatus::Corrupt));
        // Blocks 2 and 3 see the tampered node as a sibling at the top.
        assert_eq!(tampered.verify_block(&d, 2), Ok(BlockStatus::Corrupt));
        assert!(!tampered.corrupt_blocks(&d).is_empty());
    }
}
