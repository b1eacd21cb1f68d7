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


//! Boot chain verification and boot-state computation.
//!
//! The ROM verifies each bootloader stage with the key embedded in the
//! previous one, starting at the immutable ROM key. The last stage carries the
//! manufacturer VBMeta key. The top-level VBMeta must verify under that key
//! (root of trust: OEM) or under a user-set key (root of trust: user); chained
//! VBMeta structs are verified with the key named in their chain descriptor.
//!
//! | os found | locked | chain verifies | root of trust | colour |
//! |----------|--------|----------------|---------------|--------|
//! | no       | any    | any            | any           | RED    |
//! | yes      | no     | any            | any           | ORANGE |
//! | yes      | yes    | no             | any           | RED    |
//! | yes      | yes    | yes            | OEM           | GREEN  |
//! | yes      | yes    | yes            | user          | YELLOW |
//!
//! Rollback violations count as verification failures. Verification is pure;
//! counters move only through [`BootChain::commit`] after a locked boot.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::hashtree::HashTree;
use super::rollback::{RollbackCheck, RollbackStore};
use super::vbmeta::{BootStage, Descriptor, VbMeta};
use crate::crypto::{KeyId, SignatureScheme};
use crate::digest::Digest;

/// Partition that must be present for an OS to be found.
pub const SYSTEM_PARTITION: &str = "system";

const MAX_CHAIN_DEPTH: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BootColor {
    Green,
    Yellow,
    Orange,
    Red,
}

impl fmt::Display for BootColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BootColor::Green => "GREEN",
            BootColor::Yellow => "YELLOW",
            BootColor::Orange => "ORANGE",
            BootColor::Red => "RED",
        })
    }
}

impl std::str::FromStr for BootColor {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "GREEN" => Ok(BootColor::Green),
            "YELLOW" => Ok(BootColor::Yellow),
            "ORANGE" => Ok(BootColor::Orange),
            "RED" => Ok(BootColor::Red),
            _ => Err(format!("unknown boot colour `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootState {
    pub color: BootColor,
    pub device_locked: bool,
}

impl BootState {
    /// The colour table above, as a pure function.
    pub fn compute(locked: bool, root: RootOfTrust, verified: bool, os_found: bool) -> Self {
        let color = if !os_found {
            BootColor::Red
        } else if !locked {
            BootColor::Orange
        } else if !verified {
            BootColor::Red
        } else {
            match root {
                RootOfTrust::Oem => BootColor::Green,
                RootOfTrust::User => BootColor::Yellow,
            }
        };
        Self { color, device_locked: locked }
    }

    /// GREEN/YELLOW imply locked; ORANGE implies unlocked.
    pub fn is_consistent(&self) -> bool {
        match self.color {
            BootColor::Green | BootColor::Yellow => self.device_locked,
            BootColor::Orange => !self.device_locked,
            BootColor::Red => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootOfTrust {
    Oem,
    User,
}

/// Why a boot did not verify. Each variant renders as a stable reason string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(rename_all = "kebab-case", tag = "issue")]
pub enum BootIssue {
    #[error("no-bootloader")]
    NoBootloader,
    #[error("stage-malformed {stage}")]
    StageMalformed { stage: usize },
    #[error("stage-signature {stage}")]
    StageSignature { stage: usize },
    #[error("vbmeta-missing {name}")]
    VbmetaMissing { name: String },
    #[error("vbmeta-malformed {name}")]
    VbmetaMalformed { name: String },
    #[error("vbmeta-signature {name}")]
    VbmetaSignature { name: String },
    #[error("rollback slot={slot} stored={stored} image={image}")]
    Rollback { slot: u32, stored: u64, image: u64 },
    #[error("partition-missing {name}")]
    PartitionMissing { name: String },
    #[error("digest-mismatch {name}")]
    DigestMismatch { name: String },
    #[error("size-mismatch {name}")]
    SizeMismatch { name: String },
    #[error("tree-malformed {name}")]
    TreeMalformed { name: String },
    #[error("dm-verity-corruption {name} blocks={blocks:?}")]
    Corruption { name: String, blocks: Vec<usize> },
    #[error("duplicate-descriptor {name}")]
    DuplicateDescriptor { name: String },
    #[error("uncovered-partition {name}")]
    Uncovered { name: String },
    #[error("chain-too-deep {name}")]
    ChainTooDeep { name: String },
    #[error("no-valid-os")]
    NoOs,
}

impl BootIssue {
    /// Issues that leave no bootable OS regardless of lock state.
    fn is_fatal(&self) -> bool {
        matches!(
            self,
            BootIssue::NoBootloader
                | BootIssue::StageMalformed { .. }
                | BootIssue::StageSignature { .. }
                | BootIssue::NoOs
        )
    }
}

/// Everything a device boots from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootImages {
    /// Encoded [`BootStage`] blobs in boot order.
    #[serde(with = "blob_list")]
    pub stages: Vec<Vec<u8>>,
    /// Encoded top-level [`VbMeta`].
    #[serde(with = "crate::crypto::hex_bytes")]
    pub vbmeta: Vec<u8>,
    /// Encoded chained VBMeta structs by partition name.
    #[serde(with = "blob_map")]
    pub chained: BTreeMap<String, Vec<u8>>,
    /// Partition contents by name.
    #[serde(with = "blob_map")]
    pub partitions: BTreeMap<String, Vec<u8>>,
    /// Serialized hash trees for hash-tree partitions.
    #[serde(with = "blob_map")]
    pub trees: BTreeMap<String, Vec<u8>>,
}

impl BootImages {
    /// Digest binding the VBMeta set: SHA-256 over the top-level struct
    /// followed by the chained ones in name order.
    pub fn vbmeta_digest(&self) -> Digest {
        let mut parts: Vec<&[u8]> = vec![&self.vbmeta];
        parts.extend(self.chained.values().map(|v| v.as_slice()));
        Digest::of_parts(parts)
    }
}

/// Device-side boot configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootChain {
    rom_key: KeyId,
    pub user_root: Option<KeyId>,
    pub locked: bool,
    pub rollback: RollbackStore,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LockError {
    #[error("bootloader is locked")]
    Locked,
}

impl BootChain {
    pub fn new(rom_key: KeyId) -> Self {
        Self { rom_key, user_root: None, locked: true, rollback: RollbackStore::default() }
    }

    /// Burned into the ROM; there is no setter.
    pub fn rom_key(&self) -> &KeyId {
        &self.rom_key
    }

    pub fn set_user_root(&mut self, key: Option<KeyId>) -> Result<(), LockError> {
        if self.locked {
            return Err(LockError::Locked);
        }
        self.user_root = key;
        Ok(())
    }

    /// Raises rollback counters after a boot. Only a verified locked boot
    /// commits; anything else leaves the store untouched.
    pub fn commit(&mut self, report: &BootReport) {
        if matches!(report.state.color, BootColor::Green | BootColor::Yellow) {
            for (slot, idx) in &report.rollback_indices {
                self.rollback.raise(*slot, *idx);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootReport {
    pub state: BootState,
    pub root: Option<RootOfTrust>,
    pub os_found: bool,
    pub verified: bool,
    pub issues: Vec<BootIssue>,
    /// `(slot, index)` of every VBMeta on the verified path.
    pub rollback_indices: Vec<(u32, u64)>,
    pub vbmeta_digest: Option<Digest>,
}

impl BootReport {
    pub fn reasons(&self) -> Vec<String> {
        self.issues.iter().map(|i| i.to_string()).collect()
    }
}

struct Walk<'a> {
    images: &'a BootImages,
    rollback: &'a RollbackStore,
    scheme: &'a dyn SignatureScheme,
    issues: Vec<BootIssue>,
    covered: BTreeSet<String>,
    indices: Vec<(u32, u64)>,
}

impl Walk<'_> {
    fn cover(&mut self, key: &str, name: &str) -> bool {
        if !self.covered.insert(key.to_string()) {
            self.issues.push(BootIssue::DuplicateDescriptor { name: name.into() });
            return false;
        }
        true
    }

    fn vbmeta(&mut self, name: &str, bytes: &[u8], key: &KeyId, slot: Option<u32>, depth: usize) {
        let vb = match VbMeta::decode(bytes) {
            Ok(v) => v,
            Err(_) => return self.issues.push(BootIssue::VbmetaMalformed { name: name.into() }),
        };
        if !vb.verify(key, self.scheme) {
            return self.issues.push(BootIssue::VbmetaSignature { name: name.into() });
        }
        // A chained struct must use the slot its parent assigned.
        if slot.is_some_and(|s| s != vb.rollback_slot) {
            return self.issues.push(BootIssue::VbmetaMalformed { name: name.into() });
        }
        if let RollbackCheck::Rejected { stored, image } = self.rollback.check(vb.rollback_slot, vb.rollback_index)
        {
            self.issues.push(BootIssue::Rollback { slot: vb.rollback_slot, stored, image });
        }
        self.indices.push((vb.rollback_slot, vb.rollback_index));
        for d in &vb.descriptors {
            self.descriptor(d, depth);
        }
    }

    fn descriptor(&mut self, d: &Descriptor, depth: usize) {
        let name = d.partition().to_string();
        // A chain delegates coverage to the chained struct's own descriptors.
        let slot = match d {
            Descriptor::Chain { .. } => format!("chain:{name}"),
            _ => name.clone(),
        };
        if !self.cover(&slot, &name) {
            return;
        }
        let images = self.images;
        let data = images.partitions.get(&name);
        match d {
            Descriptor::Hash { size, digest, .. } => {
                let Some(data) = data else {
                    return self.issues.push(BootIssue::PartitionMissing { name });
                };
                if data.len() as u64 != *size {
                    self.issues.push(BootIssue::SizeMismatch { name });
                } else if Digest::of(data) != *digest {
                    self.issues.push(BootIssue::DigestMismatch { name });
                }
            }
            Descriptor::HashTree { data_size, block_size, root, .. } => {
                let Some(data) = data else {
                    return self.issues.push(BootIssue::PartitionMissing { name });
                };
                if data.len() as u64 != *data_size {
                    return self.issues.push(BootIssue::SizeMismatch { name });
                }
                let tree_bytes = images.trees.get(&name).map(|t| t.as_slice()).unwrap_or(&[]);
                match HashTree::from_bytes(tree_bytes, *block_size, *data_size, *root) {
                    Ok(tree) => {
                        let blocks = tree.corrupt_blocks(data);
                        if !blocks.is_empty() {
                            self.issues.push(BootIssue::Corruption { name, blocks });
                        }
                    }
                    Err(_) => self.issues.push(BootIssue::TreeMalformed { name }),
                }
            }
            Descriptor::Chain { rollback_slot, key, .. } => {
                if depth >= MAX_CHAIN_DEPTH {
                    return self.issues.push(BootIssue::ChainTooDeep { name });
                }
                match images.chained.get(&name) {
                    Some(bytes) => self.vbmeta(&name, bytes, key, Some(*rollback_slot), depth + 1),
                    None => self.issues.push(BootIssue::VbmetaMissing { name }),
                }
            }
        }
    }
}

/// Verifies the bootloader stages; returns the key the last stage trusts for
/// VBMeta.
fn verify_stages(
    rom_key: &KeyId,
    stages: &[Vec<u8>],
    scheme: &dyn SignatureScheme,
) -> Result<KeyId, BootIssue> {
    if stages.is_empty() {
        return Err(BootIssue::NoBootloader);
    }
    let mut key = rom_key.clone();
    for (i, blob) in stages.iter().enumerate() {
        let stage = BootStage::decode(blob).map_err(|_| BootIssue::StageMalformed { stage: i })?;
        if !stage.verify(&key, scheme) {
            return Err(BootIssue::StageSignature { stage: i });
        }
        key = stage.next_key;
    }
    Ok(key)
}

pub fn verify_boot_chain(device: &BootChain, images: &BootImages, scheme: &dyn SignatureScheme) -> BootReport {
    let mut walk = Walk {
        images,
        rollback: &device.rollback,
        scheme,
        issues: Vec::new(),
        covered: BTreeSet::new(),
        indices: Vec::new(),
    };
    let mut root = None;
    match verify_stages(&device.rom_key, &images.stages, scheme) {
        Err(issue) => walk.issues.push(issue),
        Ok(oem_key) => {
            // Pick the root of trust by whichever key signed the top-level
            // struct; with neither, report against the OEM key.
            let signer = VbMeta::decode(&images.vbmeta).ok().map(|v| v.signer);
            let key = match (&device.user_root, signer) {
                (Some(user), Some(s)) if s == *user && s != oem_key => {
                    root = Some(RootOfTrust::User);
                    user.clone()
                }
                _ => {
                    root = Some(RootOfTrust::Oem);
                    oem_key
                }
            };
            if images.vbmeta.is_empty() {
                walk.issues.push(BootIssue::VbmetaMissing { name: "vbmeta".into() });
            } else {
                walk.vbmeta("vbmeta", &images.vbmeta, &key, None, 0);
            }
            for name in images.partitions.keys() {
                if !walk.covered.contains(name) {
                    walk.issues.push(BootIssue::Uncovered { name: name.clone() });
                }
            }
            if images.partitions.get(SYSTEM_PARTITION).is_none_or(|p| p.is_empty()) {
                walk.issues.push(BootIssue::NoOs);
            }
        }
    }
    let issues = walk.issues;
    let os_found = !issues.iter().any(BootIssue::is_fatal);
    let verified = issues.is_empty();
    let state = BootState::compute(device.locked, root.unwrap_or(RootOfTrust::Oem), verified, os_found);
    BootReport {
        state,
        root,
        os_found,
        verified,
        issues,
        rollback_indices: walk.indices,
        vbmeta_digest: (!images.vbmeta.is_empty()).then(|| images.vbmeta_digest()),
    }
}

mod blob_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<u8>], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(hex::encode).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<u8>>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|h| hex::decode(h).map_err(serde::de::Error::custom))
            .collect()
    }
}

mod blob_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        m.iter().map(|(k, v)| (k, hex::encode(v))).collect::<BTreeMap<_, _>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Vec<u8>>, D::Error> {
        BTreeMap::<String, String>::deserialize(d)?
            .into_iter()
            .map(|(k, h)| hex::decode(h).map(|v| (k, v)).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boot::fixture::{build_images, ImageSpec, OemKeys};
    use crate::crypto::{KeyRole, KeyedDigest};

    fn fixture() -> (BootChain, BootImages, OemKeys) {
        let keys = OemKeys::default();
        let mut spec = ImageSpec::new(vec![7u8; 1000]);
        spec.block_size = 64;
        let images = build_images(&keys, &spec, &KeyedDigest);
        (BootChain::new(keys.rom.clone()), images, keys)
    }

    #[test]
    fn locked_oem_is_green() {
        let (dev, img, _) = fixture();
        let r = verify_boot_chain(&dev, &img, &KeyedDigest);
        assert_eq!(r.issues, vec![]);
        assert_eq!(r.state, BootState { color: BootColor::Green, device_locked: true });
        assert_eq!(r.rollback_indices, vec![(0, 0), (1, 0)]);
    }

    #[test]
    fn locked_user_root_is_yellow() {
        let (mut dev, _, keys) = fixture();
        let user = KeyId::new("my-key", KeyRole::UserRoot);
        assert_eq!(dev.set_user_root(Some(user.clone())), Err(LockError::Locked));
        dev.locked = false;
        dev.set_user_root(Some(user.clone())).unwrap();
        dev.locked = true;
        let mut spec = ImageSpec::new(vec![1u8; 300]);
        spec.vbmeta_signer = Some(user);
        let img = build_images(&keys, &spec, &KeyedDigest);
        assert_eq!(verify_boot_chain(&dev, &img, &KeyedDigest).state.color, BootColor::Yellow);
    }

    #[test]
    fn corrupted_system_block_is_red() {
        let (dev, mut img, _) = fixture();
        img.partitions.get_mut(SYSTEM_PARTITION).unwrap()[200] ^= 4;
        let r = verify_boot_chain(&dev, &img, &KeyedDigest);
        assert_eq!(r.state.color, BootColor::Red);
        assert_eq!(r.issues, vec![BootIssue::Corruption { name: "system".into(), blocks: vec![3] }]);
        assert!(r.reasons()[0].starts_with("dm-verity-corruption"));
    }

    #[test]
    fn unlocked_is_orange_even_when_tampered() {
        let (mut dev, mut img, _) = fixture();
        dev.locked = false;
        assert_eq!(verify_boot_chain(&dev, &img, &KeyedDigest).state.color, BootColor::Orange);
        img.partitions.get_mut("boot").unwrap()[0] ^= 1;
        let r = verify_boot_chain(&dev, &img, &KeyedDigest);
        assert_eq!(r.state.color, BootColor::Orange);
        assert!(!r.verified);
    }

    #[test]
    fn bad_stage_is_red_even_when_unlocked() {
        let (mut dev, mut img, _) = fixture();
        dev.locked = false;
        img.stages[1][10] ^= 1;
        let r = verify_boot_chain(&dev, &img, &KeyedDigest);
        assert_eq!(r.state.color, BootColor::Red);
        assert!(!r.os_found);
    }

    #[test]
    fn chained_partition_tamper_and_missing() {
        let (dev, img, _) = fixture();
        let mut t = img.clone();
        t.partitions.get_mut("vendor").unwrap()[0] ^= 1;
        assert_eq!(
            verify_boot_chain(&dev, &t, &KeyedDigest).issues,
            vec![BootIssue::DigestMismatch { name: "vendor".into() }]
        );
        let mut t = img.clone();
        t.chained.clear();
        assert_eq!(
            verify_boot_chain(&dev, &t, &KeyedDigest).issues,
            vec![BootIssue::VbmetaMissing { name: "vendor".into() }, BootIssue::Uncovered { name: "vendor".into() }]
        );
        let mut t = img;
        t.partitions.insert("extra".into(), vec![1]);
        assert_eq!(
            verify_boot_chain(&dev, &t, &KeyedDigest).issues,
            vec![BootIssue::Uncovered { name: "extra".into() }]
        );
    }

    #[test]
    fn rollback_rejects_and_commit_raises() {
        let (mut dev, _, keys) = fixture();
        let mut spec = ImageSpec::new(vec![3u8; 100]);
        spec.rollback_index = 7;
        let new = build_images(&keys, &spec, &KeyedDigest);
        let r = verify_boot_chain(&dev, &new, &KeyedDigest);
        assert_eq!(r.state.color, BootColor::Green);
        dev.commit(&r);
        assert_eq!(dev.rollback.get(0), 7);
        spec.rollback_index = 6;
        let old = build_images(&keys, &spec, &KeyedDigest);
        let r = verify_boot_chain(&dev, &old, &KeyedDigest);
        assert_eq!(r.state.color, BootColor::Red);
        assert_eq!(r.issues, vec![BootIssue::Rollback { slot: 0, stored: 7, image: 6 }]);
        dev.commit(&r);
        assert_eq!(dev.rollback.get(0), 7);
    }

    #[test]
    fn unlocked_boot_does_not_raise_counters() {
        let (mut dev, _, keys) = fixture();
        dev.locked = false;
        let mut spec = ImageSpec::new(vec![3u8; 100]);
        spec.rollback_index = 4;
        let img = build_images(&keys, &spec, &KeyedDigest);
        let r = verify_boot_chain(&dev, &img, &KeyedDigest);
        dev.commit(&r);
        assert_eq!(dev.rollback.get(0), 0);
    }

    /// Hand-enumerated colour table: (locked, user root, verified, os found).
    #[test]
    fn colour_table() {
        use BootColor::*;
        #[rustfmt::skip]
        let table = [
            (false, false, false, false, Red),   (false, false, false, true, Orange),
            (false, false, true,  false, Red),   (false, false, true,  true, Orange),
            (false, true,  false, false, Red),   (false, true,  false, true, Orange),
            (false, true,  true,  false, Red),   (false, true,  true,  true, Orange),
            (true,  false, false, false, Red),   (true,  false, false, true, Red),
            (true,  false, true,  false, Red),   (true,  false, true,  true, Green),
            (true,  true,  false, false, Red),   (true,  true,  false, true, Red),
            (true,  true,  true,  false, Red),   (true,  true,  true,  true, Yellow),
        ];
        for (locked, user, verified, os, want) in table {
            let root = if user { RootOfTrust::User } else { RootOfTrust::Oem };
            let s = BootState::compute(locked, root, verified, os);
            assert_eq!(s.color, want, "{locked} {user} {verified} {os}");
            assert!(s.is_consistent());
        }
    }

    #[test]
    fn vbmeta_digest_covers_chained() {
        let (_, img, _) = fixture();
        let mut t = img.clone();
        t.chained.get_mut("vendor").unwrap()[0] ^= 1;
        assert_ne!(img.vbmeta_digest(), t.vbmeta_digest());
    }

    #[test]
    fn images_serde_round_trip() {
        let (_, img, _) = fixture();
        let j = serde_json::to_string(&img).unwrap();
        assert_eq!(serde_json::from_str::<BootImages>(&j).unwrap(), img);
    }
}
