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


//! APK signing-key rotation (proof-of-rotation lineage).
//!
//! A lineage is an ordered list of keys, oldest first. Every entry after the
//! first carries a signature by its predecessor over the pair
//! `(predecessor, entry)`. An update signed by a new key is accepted when its
//! lineage reaches back to the installed key through valid links.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{KeyId, Signature, SignatureScheme};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageEntry {
    pub key: KeyId,
    /// Signature by the previous entry's key; absent on the first entry.
    pub proof: Option<Signature>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigningLineage {
    pub entries: Vec<LineageEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineageError {
    #[error("malformed lineage: {0}")]
    MalformedLineage(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateDecision {
    Allow,
    Deny,
}

fn link_message(prev: &KeyId, next: &KeyId) -> Vec<u8> {
    let mut m = b"secmodel-lineage\0".to_vec();
    for k in [prev, next] {
        m.push(k.role.code());
        m.extend_from_slice(k.id.as_bytes());
        m.push(0);
    }
    m
}

impl SigningLineage {
    pub fn new(root: KeyId) -> Self {
        Self { entries: vec![LineageEntry { key: root, proof: None }] }
    }

    /// Rotates to `next`, signing the link with the current newest key.
    pub fn rotate(mut self, next: KeyId, scheme: &dyn SignatureScheme) -> Self {
        let prev = &self.entries.last().expect("lineage is never empty").key;
        let proof = scheme.sign(prev, &link_message(prev, &next));
        self.entries.push(LineageEntry { key: next, proof: Some(proof) });
        self
    }

    /// Builds a lineage through `keys` in order.
    pub fn through(keys: &[KeyId], scheme: &dyn SignatureScheme) -> Self {
        let mut it = keys.iter();
        let mut l = Self::new(it.next().expect("at least one key").clone());
        for k in it {
            l = l.rotate(k.clone(), scheme);
        }
        l
    }

    pub fn newest(&self) -> Option<&KeyId> {
        self.entries.last().map(|e| &e.key)
    }

    pub fn position(&self, key: &KeyId) -> Option<usize> {
        self.entries.iter().position(|e| e.key == *key)
    }

    fn check_shape(&self) -> Result<(), LineageError> {
        let Some(first) = self.entries.first() else {
            return Err(LineageError::MalformedLineage("empty"));
        };
        if first.proof.is_some() {
            return Err(LineageError::MalformedLineage("first entry carries a proof"));
        }
        if self.entries[1..].iter().any(|e| e.proof.is_none()) {
            return Err(LineageError::MalformedLineage("link without proof"));
        }
        for (i, e) in self.entries.iter().enumerate() {
            if self.entries[..i].iter().any(|p| p.key == e.key) {
                return Err(LineageError::MalformedLineage("repeated key"));
            }
        }
        Ok(())
    }

    /// True iff every link signature checks.
    pub fn verify(&self, scheme: &dyn SignatureScheme) -> Result<bool, LineageError> {
        self.check_shape()?;
        Ok(self.entries.windows(2).all(|w| {
            let proof = w[1].proof.as_ref().expect("shape checked");
            scheme.verify(&w[0].key, &link_message(&w[0].key, &w[1].key), proof)
        }))
    }
}

/// Decides whether an APK signed by `candidate` may replace one signed by
/// `installed`.
pub fn verify_apk_update(
    installed: &KeyId,
    candidate: &KeyId,
    candidate_lineage: Option<&SigningLineage>,
    scheme: &dyn SignatureScheme,
) -> Result<UpdateDecision, LineageError> {
    if installed == candidate {
        return Ok(UpdateDecision::Allow);
    }
    let Some(lineage) = candidate_lineage else {
        return Ok(UpdateDecision::Deny);
    };
    if lineage.newest() != Some(candidate) {
        return Err(LineageError::MalformedLineage("newest entry is not the signing key"));
    }
    let valid = lineage.verify(scheme)?;
    Ok(if valid && lineage.position(installed).is_some() { UpdateDecision::Allow } else { UpdateDecision::Deny })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::KeyedDigest;

    fn k(s: &str) -> KeyId {
        KeyId::apk(s)
    }

    #[test]
    fn update_matrix() {
        let s = &KeyedDigest;
        let rotated = SigningLineage::through(&[k("a"), k("b")], s);
        let mut forged = rotated.clone();
        // The link is "signed" by b instead of a.
        forged.entries[1].proof = Some(s.sign(&k("b"), &link_message(&k("a"), &k("b"))));
        assert_eq!(verify_apk_update(&k("a"), &k("a"), None, s), Ok(UpdateDecision::Allow));
        assert_eq!(verify_apk_update(&k("a"), &k("b"), Some(&rotated), s), Ok(UpdateDecision::Allow));
        assert_eq!(verify_apk_update(&k("a"), &k("b"), None, s), Ok(UpdateDecision::Deny));
        assert_eq!(verify_apk_update(&k("a"), &k("b"), Some(&forged), s), Ok(UpdateDecision::Deny));
    }

    #[test]
    fn multi_hop_and_unrelated() {
        let s = &KeyedDigest;
        let l = SigningLineage::through(&[k("a"), k("b"), k("c")], s);
        assert_eq!(verify_apk_update(&k("a"), &k("c"), Some(&l), s), Ok(UpdateDecision::Allow));
        assert_eq!(verify_apk_update(&k("b"), &k("c"), Some(&l), s), Ok(UpdateDecision::Allow));
        assert_eq!(verify_apk_update(&k("x"), &k("c"), Some(&l), s), Ok(UpdateDecision::Deny));
    }

    #[test]
    fn malformed() {
        let s = &KeyedDigest;
        let l = SigningLineage::through(&[k("a"), k("b")], s);
        assert!(verify_apk_update(&k("a"), &k("z"), Some(&l), s).is_err());
        assert!(SigningLineage::default().verify(s).is_err());
        let mut no_proof = l.clone();
        no_proof.entries[1].proof = None;
        assert!(no_proof.verify(s).is_err());
        let looped = SigningLineage::through(&[k("a"), k("b"), k("a")], s);
        assert!(looped.verify(s).is_err());
    }
}
