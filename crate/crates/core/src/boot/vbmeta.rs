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

//! VBMeta structs and bootloader stage blobs.
//!
//! Both use a compact big-endian, length-prefixed layout; `docs/format.md`
//! has the byte-exact description. The signature always covers every byte
//! that precedes the signature length field.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{KeyId, KeyRole, Signature, SignatureScheme};
use crate::digest::{Digest, DIGEST_LEN};

pub const VBMETA_MAGIC: [u8; 4] = *b"SMVB";
pub const STAGE_MAGIC: [u8; 4] = *b"SMBS";
pub const FORMAT_VERSION: u32 = 1;

const TAG_HASH: u8 = 1;
const TAG_HASHTREE: u8 = 2;
const TAG_CHAIN: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated input")]
    Truncated,
    #[error("string is not UTF-8")]
    BadUtf8,
    #[error("unknown key role {0}")]
    UnknownRole(u8),
    #[error("unknown descriptor tag {0}")]
    UnknownDescriptor(u8),
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
}

pub(crate) struct Writer(Vec<u8>);

impl Writer {
    fn new() -> Self {
        Self(Vec::new())
    }
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn raw(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn str16(&mut self, s: &str) {
        self.u16(s.len() as u16);
        self.raw(s.as_bytes());
    }
    fn key(&mut self, k: &KeyId) {
        self.u8(k.role.code());
        self.str16(&k.id);
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self.pos.checked_add(n).ok_or(WireError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(WireError::Truncated)?;
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn str16(&mut self) -> Result<String, WireError> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| WireError::BadUtf8)
    }
    fn key(&mut self) -> Result<KeyId, WireError> {
        let c = self.u8()?;
        let role = KeyRole::from_code(c).ok_or(WireError::UnknownRole(c))?;
        Ok(KeyId::new(self.str16()?, role))
    }
    fn digest(&mut self) -> Result<Digest, WireError> {
        Ok(Digest::from_slice(self.take(DIGEST_LEN)?).expect("32 bytes"))
    }
    fn magic(&mut self, m: [u8; 4]) -> Result<(), WireError> {
        if self.take(4)? != m {
            return Err(WireError::BadMagic);
        }
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(WireError::UnsupportedVersion(v));
        }
        Ok(())
    }
    fn signature(&mut self) -> Result<(usize, Signature), WireError> {
        let signed_len = self.pos;
        let n = self.u16()? as usize;
        let sig = Signature(self.take(n)?.to_vec());
        if self.pos != self.buf.len() {
            return Err(WireError::TrailingBytes(self.buf.len() - self.pos));
        }
        Ok((signed_len, sig))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Descriptor {
    /// Whole-image digest for small partitions, verified atomically.
    Hash { partition: String, size: u64, digest: Digest },
    /// Root of a hash tree for on-access block verification.
    HashTree { partition: String, data_size: u64, block_size: u32, root: Digest },
    /// Delegation to a partition-specific VBMeta signed by `key`.
    Chain { partition: String, rollback_slot: u32, key: KeyId },
}

impl Descriptor {
    pub fn partition(&self) -> &str {
        match self {
            Descriptor::Hash { partition, .. }
            | Descriptor::HashTree { partition, .. }
            | Descriptor::Chain { partition, .. } => partition,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VbMeta {
    pub rollback_index: u64,
    pub rollback_slot: u32,
    pub signer: KeyId,
    pub descriptors: Vec<Descriptor>,
    pub signature: Signature,
}

impl VbMeta {
    pub fn new(signer: KeyId, rollback_slot: u32, rollback_index: u64, descriptors: Vec<Descriptor>) -> Self {
        Self { rollback_index, rollback_slot, signer, descriptors, signature: Signature(Vec::new()) }
    }

    fn body(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(&VBMETA_MAGIC);
        w.u32(FORMAT_VERSION);
        w.u64(self.rollback_index);
        w.u32(self.rollback_slot);
        w.key(&self.signer);
        w.u32(self.descriptors.len() as u32);
        for d in &self.descriptors {
            match d {
                Descriptor::Hash { partition, size, digest } => {
                    w.u8(TAG_HASH);
                    w.str16(partition);
                    w.u64(*size);
                    w.raw(digest.as_bytes());
                }
                Descriptor::HashTree { partition, data_size, block_size, root } => {
                    w.u8(TAG_HASHTREE);
                    w.str16(partition);
                    w.u64(*data_size);
                    w.u32(*block_size);
                    w.raw(root.as_bytes());
                }
                Descriptor::Chain { partition, rollback_slot, key } => {
                    w.u8(TAG_CHAIN);
                    w.str16(partition);
                    w.u32(*rollback_slot);
                    w.key(key);
                }
            }
        }
        w.0
    }

    pub fn signed_with(mut self, key: &KeyId, scheme: &dyn SignatureScheme) -> Self {
        self.signer = key.clone();
        self.signature = scheme.sign(key, &self.body());
        self
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer(self.body());
        w.u16(self.signature.0.len() as u16);
        w.raw(&self.signature.0);
        w.0
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        r.magic(VBMETA_MAGIC)?;
        let rollback_index = r.u64()?;
        let rollback_slot = r.u32()?;
        let signer = r.key()?;
        let n = r.u32()?;
        let mut descriptors = Vec::new();
        for _ in 0..n {
            let tag = r.u8()?;
            let partition = r.str16()?;
            descriptors.push(match tag {
                TAG_HASH => Descriptor::Hash { partition, size: r.u64()?, digest: r.digest()? },
                TAG_HASHTREE => Descriptor::HashTree {
                    partition,
                    data_size: r.u64()?,
                    block_size: r.u32()?,
                    root: r.digest()?,
                },
                TAG_CHAIN => Descriptor::Chain { partition, rollback_slot: r.u32()?, key: r.key()? },
                t => return Err(WireError::UnknownDescriptor(t)),
            });
        }
        let (_, signature) = r.signature()?;
        Ok(Self { rollback_index, rollback_slot, signer, descriptors, signature })
    }

    /// Checks the signature against `key` (which must also be the declared
    /// signer).
    pub fn verify(&self, key: &KeyId, scheme: &dyn SignatureScheme) -> bool {
        self.signer == *key && scheme.verify(key, &self.body(), &self.signature)
    }
}

/// A bootloader stage: a payload plus the key that verifies the next stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootStage {
    pub name: String,
    pub signer: KeyId,
    pub next_key: KeyId,
    #[serde(with = "crate::crypto::hex_bytes")]
    pub payload: Vec<u8>,
    pub signature: Signature,
}

impl BootStage {
    pub fn new(name: &str, signer: &KeyId, next_key: &KeyId, payload: &[u8], scheme: &dyn SignatureScheme) -> Self {
        let mut s = Self {
            name: name.into(),
            signer: signer.clone(),
            next_key: next_key.clone(),
            payload: payload.to_vec(),
            signature: Signature(Vec::new()),
        };
        s.signature = scheme.sign(signer, &s.body());
        s
    }

    fn body(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(&STAGE_MAGIC);
        w.u32(FORMAT_VERSION);
        w.str16(&self.name);
        w.key(&self.signer);
        w.key(&self.next_key);
        w.u32(self.payload.len() as u32);
        w.raw(&self.payload);
        w.0
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer(self.body());
        w.u16(self.signature.0.len() as u16);
        w.raw(&self.signature.0);
        w.0
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        r.magic(STAGE_MAGIC)?;
        let name = r.str16()?;
        let signer = r.key()?;
        let next_key = r.key()?;
        let n = r.u32()? as usize;
        let payload = r.take(n)?.to_vec();
        let (_, signature) = r.signature()?;
        Ok(Self { name, signer, next_key, payload, signature })
    }

    pub fn verify(&self, key: &KeyId, scheme: &dyn SignatureScheme) -> bool {
        self.signer == *key && scheme.verify(key, &self.body(), &self.signature)
    }
}
