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

//! Signing keys and the pluggable signature scheme.
//!
//! The model checks the *structure* of signing relationships (who signed what,
//! which key delegates to which), not the strength of the primitive. The
//! default [`KeyedDigest`] scheme derives a signature from the key identity and
//! the message with SHA-256. Anybody who knows the key name can forge it, which
//! is fine for a model: a forgery in a test is simply "signed by the wrong key".

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::digest::Digest;

/// Role of a key in the device's key hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyRole {
    /// Manufacturer key verified by the ROM; fixed for the device lifetime.
    Rom,
    /// Key embedded in an earlier stage, verifying the final bootloader.
    Bootloader,
    /// Manufacturer VBMeta signing key.
    Vbmeta,
    /// User-set VBMeta root of trust.
    UserRoot,
    /// Chained partition key.
    Partition,
    /// App signing key.
    Apk,
    /// Platform signing key (signs platform components and permissions).
    Platform,
    /// Device attestation key inside the keystore.
    Attestation,
    /// Vendor key for tamper-resistant hardware firmware.
    TrhVendor,
}

impl KeyRole {
    pub fn code(self) -> u8 {
        match self {
            KeyRole::Rom => 1,
            KeyRole::Bootloader => 2,
            KeyRole::Vbmeta => 3,
            KeyRole::UserRoot => 4,
            KeyRole::Partition => 5,
            KeyRole::Apk => 6,
            KeyRole::Platform => 7,
            KeyRole::Attestation => 8,
            KeyRole::TrhVendor => 9,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            1 => KeyRole::Rom,
            2 => KeyRole::Bootloader,
            3 => KeyRole::Vbmeta,
            4 => KeyRole::UserRoot,
            5 => KeyRole::Partition,
            6 => KeyRole::Apk,
            7 => KeyRole::Platform,
            8 => KeyRole::Attestation,
            9 => KeyRole::TrhVendor,
            _ => return None,
        })
    }
}

/// Identity of a signing key.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KeyId {
    pub id: String,
    pub role: KeyRole,
}

impl KeyId {
    pub fn new(id: impl Into<String>, role: KeyRole) -> Self {
        Self { id: id.into(), role }
    }

    pub fn apk(id: impl Into<String>) -> Self {
        Self::new(id, KeyRole::Apk)
    }
}

impl fmt::Display for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Signature(#[serde(with = "hex_bytes")] pub Vec<u8>);

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = hex::encode(&self.0);
        write!(f, "Signature({})", &h[..h.len().min(16)])
    }
}

pub trait SignatureScheme: Send + Sync {
    fn sign(&self, key: &KeyId, msg: &[u8]) -> Signature;

    fn verify(&self, key: &KeyId, msg: &[u8], sig: &Signature) -> bool {
        self.sign(key, msg) == *sig
    }
}

/// Deterministic keyed-digest signatures: `SHA-256(tag || role || id || 0 || msg)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct KeyedDigest;

impl SignatureScheme for KeyedDigest {
    fn sign(&self, key: &KeyId, msg: &[u8]) -> Signature {
        let d = Digest::of_parts([
            b"secmodel-sig\0".as_ref(),
            &[key.role.code()],
            key.id.as_bytes(),
            &[0],
            msg,
        ]);
        Signature(d.0.to_vec())
    }
}

/// The scheme used when callers do not supply one.
pub static DEFAULT_SCHEME: KeyedDigest = KeyedDigest;

pub(crate) mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_verify() {
        let k = KeyId::apk("dev1");
        let sig = KeyedDigest.sign(&k, b"hello");
        assert!(KeyedDigest.verify(&k, b"hello", &sig));
        assert!(!KeyedDigest.verify(&k, b"hellp", &sig));
        assert!(!KeyedDigest.verify(&KeyId::apk("dev2"), b"hello", &sig));
    }

    #[test]
    fn role_is_part_of_identity() {
        let a = KeyId::new("k", KeyRole::Apk);
        let p = KeyId::new("k", KeyRole::Platform);
        let sig = KeyedDigest.sign(&a, b"m");
        assert!(!KeyedDigest.verify(&p, b"m", &sig));
    }

    #[test]
    fn role_codes_round_trip() {
        for c in 0..=10u8 {
            if let Some(r) = KeyRole::from_code(c) {
                assert_eq!(r.code(), c);
            }
        }
    }
}
