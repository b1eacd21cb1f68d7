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


//! Key attestation of the boot state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::chain::{BootColor, BootImages, BootReport};
use crate::crypto::{KeyId, Signature, SignatureScheme};
use crate::digest::Digest;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttestError {
    #[error("keystore unavailable")]
    KeystoreUnavailable,
    #[error("attestation signature does not verify")]
    BadSignature,
    #[error("record signed by untrusted key {0}")]
    UntrustedKey(KeyId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttestationRecord {
    pub device_locked: bool,
    pub verified_boot_state: BootColor,
    /// Zero digest when the device has no VBMeta.
    pub vbmeta_digest: Digest,
    pub os_version: u32,
    pub challenge: String,
    pub attestation_key: KeyId,
    pub signature: Signature,
}

impl AttestationRecord {
    fn body(&self) -> Vec<u8> {
        let body = (
            self.device_locked,
            self.verified_boot_state,
            self.vbmeta_digest,
            self.os_version,
            &self.challenge,
            &self.attestation_key,
        );
        serde_json::to_vec(&body).expect("plain data serializes")
    }
}

/// Signs the boot facts with the keystore's attestation key.
pub fn attest(
    attestation_key: Option<&KeyId>,
    report: &BootReport,
    os_version: u32,
    challenge: &str,
    scheme: &dyn SignatureScheme,
) -> Result<AttestationRecord, AttestError> {
    let key = attestation_key.ok_or(AttestError::KeystoreUnavailable)?;
    let mut r = AttestationRecord {
        device_locked: report.state.device_locked,
        verified_boot_state: report.state.color,
        vbmeta_digest: report.vbmeta_digest.unwrap_or(Digest([0; 32])),
        os_version,
        challenge: challenge.to_string(),
        attestation_key: key.clone(),
        signature: Signature(Vec::new()),
    };
    r.signature = scheme.sign(key, &r.body());
    Ok(r)
}

/// Relying-party check: signed by the trusted attestation key.
pub fn verify_attestation(
    record: &AttestationRecord,
    trusted: &KeyId,
    scheme: &dyn SignatureScheme,
) -> Result<(), AttestError> {
    if record.attestation_key != *trusted {
        return Err(AttestError::UntrustedKey(record.attestation_key.clone()));
    }
    if !scheme.verify(trusted, &record.body(), &record.signature) {
        return Err(AttestError::BadSignature);
    }
    Ok(())
}

/// Cross-check of the attested digest against known-good images.
pub fn matches_images(record: &AttestationRecord, images: &BootImages) -> bool {
    record.vbmeta_digest == images.vbmeta_digest()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boot::chain::{verify_boot_chain, BootChain};
    use crate::boot::fixture::{build_images, ImageSpec, OemKeys};
    use crate::crypto::{KeyRole, KeyedDigest};

    fn setup() -> (BootReport, BootImages, KeyId) {
        let keys = OemKeys::default();
        let img = build_images(&keys, &ImageSpec::new(vec![5u8; 500]), &KeyedDigest);
        let r = verify_boot_chain(&BootChain::new(keys.rom), &img, &KeyedDigest);
        (r, img, KeyId::new("attest", KeyRole::Attestation))
    }

    #[test]
    fn green_record_verifies_and_matches_images() {
        let (r, img, k) = setup();
        let rec = attest(Some(&k), &r, 11, "nonce", &KeyedDigest).unwrap();
        assert_eq!(rec.verified_boot_state, BootColor::Green);
        assert!(rec.device_locked);
        assert_eq!(verify_attestation(&rec, &k, &KeyedDigest), Ok(()));
        assert!(matches_images(&rec, &img));
    }

    #[test]
    fn tampering_is_rejected() {
        let (r, _, k) = setup();
        let rec = attest(Some(&k), &r, 11, "nonce", &KeyedDigest).unwrap();
        let mut t = rec.clone();
        t.verified_boot_state = BootColor::Yellow;
        assert_eq!(verify_attestation(&t, &k, &KeyedDigest), Err(AttestError::BadSignature));
        let mut t = rec.clone();
        t.device_locked = false;
        assert_eq!(verify_attestation(&t, &k, &KeyedDigest), Err(AttestError::BadSignature));
        let other = KeyId::new("other", KeyRole::Attestation);
        assert!(matches!(verify_attestation(&rec, &other, &KeyedDigest), Err(AttestError::UntrustedKey(_))));
    }

    #[test]
    fn state_changes_change_record() {
        let (mut r, _, k) = setup();
        let a = attest(Some(&k), &r, 11, "n", &KeyedDigest).unwrap();
        r.state.device_locked = false;
        r.state.color = BootColor::Orange;
        let b = attest(Some(&k), &r, 11, "n", &KeyedDigest).unwrap();
        assert_ne!(a, b);
        assert_ne!(a.signature, b.signature);
    }

    #[test]
    fn no_keystore() {
        let (r, _, _) = setup();
        assert_eq!(attest(None, &r, 1, "n", &KeyedDigest), Err(AttestError::KeystoreUnavailable));
    }
}
