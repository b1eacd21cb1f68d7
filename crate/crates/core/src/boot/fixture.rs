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


//! Builder for signed image sets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::chain::{BootImages, SYSTEM_PARTITION};
use super::hashtree::{HashTree, DEFAULT_BLOCK_SIZE};
use super::vbmeta::{BootStage, Descriptor, VbMeta};
use crate::crypto::{KeyId, KeyRole, SignatureScheme};
use crate::digest::Digest;

pub const BOOT_PARTITION: &str = "boot";
pub const VENDOR_PARTITION: &str = "vendor";
pub const VENDOR_ROLLBACK_SLOT: u32 = 1;

/// The manufacturer's keys K_A..K_D.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OemKeys {
    pub rom: KeyId,
    pub bootloader: KeyId,
    pub vbmeta: KeyId,
    pub vendor: KeyId,
}

impl Default for OemKeys {
    fn default() -> Self {
        Self {
            rom: KeyId::new("oem-rom", KeyRole::Rom),
            bootloader: KeyId::new("oem-bootloader", KeyRole::Bootloader),
            vbmeta: KeyId::new("oem-vbmeta", KeyRole::Vbmeta),
            vendor: KeyId::new("oem-vendor", KeyRole::Partition),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageSpec {
    pub boot: Vec<u8>,
    pub system: Vec<u8>,
    pub vendor: Vec<u8>,
    pub rollback_index: u64,
    pub vendor_rollback_index: u64,
    pub block_size: u32,
    /// Top-level VBMeta signer; `None` signs with the OEM key.
    pub vbmeta_signer: Option<KeyId>,
}

impl ImageSpec {
    pub fn new(system: Vec<u8>) -> Self {
        Self {
            boot: b"kernel+ramdisk".to_vec(),
            system,
            vendor: b"vendor blobs".to_vec(),
            rollback_index: 0,
            vendor_rollback_index: 0,
            block_size: DEFAULT_BLOCK_SIZE,
            vbmeta_signer: None,
        }
    }
}

/// Builds stages, VBMeta (boot: hash, system: hash tree, vendor: chained) and
/// partition images.
pub fn build_images(keys: &OemKeys, spec: &ImageSpec, scheme: &dyn SignatureScheme) -> BootImages {
    let stages = vec![
        BootStage::new("pbl", &keys.rom, &keys.bootloader, b"primary bootloader", scheme).encode(),
        BootStage::new("abl", &keys.bootloader, &keys.vbmeta, b"android bootloader", scheme).encode(),
    ];
    let tree = HashTree::build(&spec.system, spec.block_size).expect("non-empty system image");
    let vendor_vb = VbMeta::new(
        keys.vendor.clone(),
        VENDOR_ROLLBACK_SLOT,
        spec.vendor_rollback_index,
        vec![Descriptor::Hash {
            partition: VENDOR_PARTITION.into(),
            size: spec.vendor.len() as u64,
            digest: Digest::of(&spec.vendor),
        }],
    )
    .signed_with(&keys.vendor, scheme);
    let signer = spec.vbmeta_signer.clone().unwrap_or_else(|| keys.vbmeta.clone());
    let top = VbMeta::new(
        signer.clone(),
        0,
        spec.rollback_index,
        vec![
            Descriptor::Hash {
                partition: BOOT_PARTITION.into(),
                size: spec.boot.len() as u64,
                digest: Digest::of(&spec.boot),
            },
            Descriptor::HashTree {
                partition: SYSTEM_PARTITION.into(),
                data_size: spec.system.len() as u64,
                block_size: spec.block_size,
                root: tree.root,
            },
            Descriptor::Chain {
                partition: VENDOR_PARTITION.into(),
                rollback_slot: VENDOR_ROLLBACK_SLOT,
                key: keys.vendor.clone(),
            },
        ],
    )
    .signed_with(&signer, scheme);
    BootImages {
        stages,
        vbmeta: top.encode(),
        chained: BTreeMap::from([(VENDOR_PARTITION.to_string(), vendor_vb.encode())]),
        partitions: BTreeMap::from([
            (BOOT_PARTITION.to_string(), spec.boot.clone()),
            (SYSTEM_PARTITION.to_string(), spec.system.clone()),
            (VENDOR_PARTITION.to_string(), spec.vendor.clone()),
        ]),
        trees: BTreeMap::from([(SYSTEM_PARTITION.to_string(), tree.to_bytes())]),
    }
}
