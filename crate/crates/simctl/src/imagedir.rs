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


//! Boot images as a directory of plain files.
//!
//! | file              | content                                   |
//! |-------------------|-------------------------------------------|
//! | `device.json`     | device boot configuration and rollback store |
//! | `stage<N>.img`    | encoded bootloader stage `N`               |
//! | `vbmeta.img`      | top-level VBMeta                           |
//! | `vbmeta_<p>.img`  | chained VBMeta for partition `p`           |
//! | `<p>.img`         | partition `p`                              |
//! | `<p>.tree`        | hash tree of partition `p`                 |

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use secmodel::boot::{BootChain, BootImages};
use secmodel::crypto::{KeyId, KeyRole};

pub const DEVICE_FILE: &str = "device.json";

/// Contents of `device.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceFile {
    pub chain: BootChain,
    pub attestation_key: KeyId,
    pub os_version: u32,
}

impl DeviceFile {
    pub fn new(chain: BootChain) -> Self {
        Self { chain, attestation_key: KeyId::new("attestation", KeyRole::Attestation), os_version: 1 }
    }
}

#[derive(Debug, Error)]
pub enum ImageDirError {
    #[error("{0}: {1}")]
    Io(PathBuf, io::Error),
    #[error("{0}: {1}")]
    Json(PathBuf, serde_json::Error),
    #[error("{0}: unexpected file")]
    Unexpected(PathBuf),
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<(), ImageDirError> {
    fs::write(&path, bytes).map_err(|e| ImageDirError::Io(path, e))
}

pub fn save(dir: &Path, device: &DeviceFile, images: &BootImages) -> Result<(), ImageDirError> {
    fs::create_dir_all(dir).map_err(|e| ImageDirError::Io(dir.into(), e))?;
    let json = serde_json::to_vec_pretty(device).expect("plain data serializes");
    write(dir.join(DEVICE_FILE), &json)?;
    for (i, s) in images.stages.iter().enumerate() {
        write(dir.join(format!("stage{i}.img")), s)?;
    }
    write(dir.join("vbmeta.img"), &images.vbmeta)?;
    for (name, v) in &images.chained {
        write(dir.join(format!("vbmeta_{name}.img")), v)?;
    }
    for (name, p) in &images.partitions {
        write(dir.join(format!("{name}.img")), p)?;
    }
    for (name, t) in &images.trees {
        write(dir.join(format!("{name}.tree")), t)?;
    }
    Ok(())
}

pub fn load(dir: &Path) -> Result<(DeviceFile, BootImages), ImageDirError> {
    let read = |p: &Path| fs::read(p).map_err(|e| ImageDirError::Io(p.into(), e));
    let dev_path = dir.join(DEVICE_FILE);
    let device: DeviceFile =
        serde_json::from_slice(&read(&dev_path)?).map_err(|e| ImageDirError::Json(dev_path.clone(), e))?;
    let mut images = BootImages::default();
    let mut stages = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| ImageDirError::Io(dir.into(), e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| ImageDirError::Io(dir.into(), err)))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for path in entries {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if name == DEVICE_FILE {
            continue;
        }
        if let Some(stem) = name.strip_suffix(".tree") {
            images.trees.insert(stem.into(), read(&path)?);
        } else if let Some(stem) = name.strip_suffix(".img") {
            let bytes = read(&path)?;
            if stem == "vbmeta" {
                images.vbmeta = bytes;
            } else if let Some(p) = stem.strip_prefix("vbmeta_") {
                images.chained.insert(p.into(), bytes);
            } else if let Some(n) = stem.strip_prefix("stage").and_then(|n| n.parse::<usize>().ok()) {
                stages.push((n, bytes));
            } else {
                images.partitions.insert(stem.into(), bytes);
            }
        } else {
            return Err(ImageDirError::Unexpected(path));
        }
    }
    stages.sort_by_key(|(n, _)| *n);
    images.stages = stages.into_iter().map(|(_, b)| b).collect();
    Ok((device, images))
}
