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


//! Tiered lockscreen authentication, auth tokens, the keystore gate,
//! protected confirmation, tamper-resistant hardware updates and file-based
//! encryption key availability.
//!
//! Time is a simulated clock in seconds, advanced only by the caller.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{KeyId, Signature, SignatureScheme};
use crate::digest::Digest;

pub const HOUR: u64 = 3600;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Tertiary,
    Secondary,
    Primary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModalityKind {
    Password,
    Pin,
    Pattern,
    Biometric,
    TrustedDevice,
    TrustedPlace,
}

impl ModalityKind {
    pub fn tier(self) -> Tier {
        match self {
            ModalityKind::Password | ModalityKind::Pin | ModalityKind::Pattern => Tier::Primary,
            ModalityKind::Biometric => Tier::Secondary,
            ModalityKind::TrustedDevice | ModalityKind::TrustedPlace => Tier::Tertiary,
        }
    }
}

impl FromStr for ModalityKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "password" => ModalityKind::Password,
            "pin" => ModalityKind::Pin,
            "pattern" => ModalityKind::Pattern,
            "biometric" => ModalityKind::Biometric,
            "trusted-device" => ModalityKind::TrustedDevice,
            "trusted-place" => ModalityKind::TrustedPlace,
            _ => return Err(format!("unknown modality `{s}`")),
        })
    }
}

impl fmt::Display for ModalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModalityKind::Password => "password",
            ModalityKind::Pin => "pin",
            ModalityKind::Pattern => "pattern",
            ModalityKind::Biometric => "biometric",
            ModalityKind::TrustedDevice => "trusted-device",
            ModalityKind::TrustedPlace => "trusted-place",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiometricClass {
    Convenience,
    Weak,
    Strong,
}

impl FromStr for BiometricClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "strong" => Ok(BiometricClass::Strong),
            "weak" => Ok(BiometricClass::Weak),
            "convenience" => Ok(BiometricClass::Convenience),
            _ => Err(format!("unknown biometric class `{s}`")),
        }
    }
}

/// Spoof-acceptance-rate cut-offs for biometric classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SarThresholds {
    /// At most this SAR, with a secure pipeline, is strong.
    pub strong_max: f64,
    /// At most this SAR is weak; above it is convenience.
    pub weak_max: f64,
}

impl Default for SarThresholds {
    fn default() -> Self {
        Self { strong_max: 0.07, weak_max: 0.20 }
    }
}

pub fn classify_biometric(sar: f64, secure_pipeline: bool, t: &SarThresholds) -> BiometricClass {
    if sar <= t.strong_max && secure_pipeline {
        BiometricClass::Strong
    } else if sar <= t.weak_max {
        BiometricClass::Weak
    } else {
        BiometricClass::Convenience
    }
}

/// Strength carried by an auth token, weakest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strength {
    Tertiary,
    Convenience,
    Weak,
    Strong,
    Primary,
}

impl FromStr for Strength {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "tertiary" => Strength::Tertiary,
            "convenience" => Strength::Convenience,
            "weak" => Strength::Weak,
            "strong" => Strength::Strong,
            "primary" => Strength::Primary,
            _ => return Err(format!("unknown strength `{s}`")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuthConfig {
    pub sar: SarThresholds,
    /// Secondary (strong biometric) fallback window; success needs a gap
    /// strictly below it.
    pub secondary_window: u64,
    /// Shorter fallback window for weak and convenience biometrics.
    pub weak_window: u64,
    /// Tertiary idle bound; success needs an idle gap at most this long.
    pub idle_window: u64,
}

impl Default for AuthConfig {
    fn default() -> Self {
        Self { sar: SarThresholds::default(), secondary_window: 72 * HOUR, weak_window: 24 * HOUR, idle_window: 4 * HOUR }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enrollment {
    pub kind: ModalityKind,
    pub class: Option<BiometricClass>,
    /// Digest of the user and factor; the factor itself is never stored.
    template: Digest,
}

fn template(user: u32, factor: &str) -> Digest {
    Digest::of_parts([b"secmodel-template\0".as_ref(), &user.to_be_bytes(), factor.as_bytes()])
}

impl Enrollment {
    /// `class` applies to biometrics only and is ignored otherwise.
    pub fn new(user: u32, kind: ModalityKind, factor: &str, class: Option<BiometricClass>) -> Self {
        let class = match kind {
            ModalityKind::Biometric => Some(class.unwrap_or(BiometricClass::Strong)),
            _ => None,
        };
        Self { kind, class, template: template(user, factor) }
    }

    pub fn tier(&self) -> Tier {
        self.kind.tier()
    }

    pub fn strength(&self) -> Strength {
        match (self.tier(), self.class) {
            (Tier::Primary, _) => Strength::Primary,
            (Tier::Tertiary, _) => Strength::Tertiary,
            (Tier::Secondary, Some(BiometricClass::Strong)) => Strength::Strong,
            (Tier::Secondary, Some(BiometricClass::Weak)) => Strength::Weak,
            (Tier::Secondary, _) => Strength::Convenience,
        }
    }

    fn matches(&self, user: u32, presented: &str) -> bool {
        self.template == template(user, presented)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backing {
    /// Gatekeeper / Keymaster in the TEE.
    Tee,
    /// Weaver / Strongbox in tamper-resistant hardware.
    Trh,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthToken {
    pub user: u32,
    pub strength: Strength,
    pub issued_at: u64,
    pub verifier: Backing,
    mac: Digest,
}

fn token_mac(secret: &Digest, user: u32, strength: Strength, issued_at: u64, verifier: Backing) -> Digest {
    Digest::of_parts([
        b"secmodel-token\0".as_ref(),
        secret.as_bytes(),
        &user.to_be_bytes(),
        &[strength as u8, verifier as u8],
        &issued_at.to_be_bytes(),
    ])
}

impl AuthToken {
    fn issue(secret: &Digest, user: u32, strength: Strength, now: u64, verifier: Backing) -> Self {
        Self { user, strength, issued_at: now, verifier, mac: token_mac(secret, user, strength, now, verifier) }
    }

    pub fn is_authentic(&self, secret: &Digest) -> bool {
        self.mac == token_mac(secret, self.user, self.strength, self.issued_at, self.verifier)
    }

    /// Same token with a lower strength, re-MACed by the TEE. Used to check
    /// that weaker tokens never unlock more.
    pub fn downgraded(&self, secret: &Digest, strength: Strength) -> Self {
        Self::issue(secret, self.user, strength.min(self.strength), self.issued_at, self.verifier)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "result")]
pub enum GatekeeperResult {
    Pass { token: AuthToken },
    Fail,
}

/// Knowledge-factor verification. The answer depends only on the enrollment
/// and the presented factor.
pub fn gatekeeper_verify(
    secret: &Digest,
    user: u32,
    enrollment: &Enrollment,
    presented: &str,
    now: u64,
    verifier: Backing,
) -> GatekeeperResult {
    if enrollment.matches(user, presented) {
        GatekeeperResult::Pass { token: AuthToken::issue(secret, user, enrollment.strength(), now, verifier) }
    } else {
        GatekeeperResult::Fail
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LockoutReason {
    /// Only a primary modality can unlock after boot.
    FirstUnlockRequiresPrimary,
    /// The fallback window since the last primary authentication has passed.
    PrimaryFallbackExpired,
    /// A tertiary modality after too long an idle period.
    IdleTimeout,
}

impl fmt::Display for LockoutReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LockoutReason::FirstUnlockRequiresPrimary => "first-unlock-requires-primary",
            LockoutReason::PrimaryFallbackExpired => "primary-fallback-expired",
            LockoutReason::IdleTimeout => "idle-timeout",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthError {
    #[error("modality {0} not enrolled")]
    NotEnrolled(ModalityKind),
    #[error("tier lockout ({0}); fallback to primary required")]
    TierLockout(LockoutReason),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "result")]
pub enum AuthOutcome {
    Success { tier: Tier, token: AuthToken },
    Failed,
}

/// Per-user lockscreen state.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthState {
    pub last_primary_success: Option<u64>,
    pub last_any_success: Option<u64>,
    pub unlocked_since_boot: bool,
    pub current_unlock_tier: Option<Tier>,
    pub last_token: Option<AuthToken>,
}

impl AuthState {
    pub fn lock(&mut self) {
        self.current_unlock_tier = None;
    }

    pub fn is_unlocked(&self) -> bool {
        self.current_unlock_tier.is_some()
    }

    /// Checks the tier constraints for `enrollment` at `now`.
    pub fn admits(&self, cfg: &AuthConfig, enrollment: &Enrollment, now: u64) -> Result<(), LockoutReason> {
        if enrollment.tier() == Tier::Primary {
            return Ok(());
        }
        let Some(last_primary) = self.last_primary_success.filter(|_| self.unlocked_since_boot) else {
            return Err(LockoutReason::FirstUnlockRequiresPrimary);
        };
        let window = match enrollment.strength() {
            Strength::Strong | Strength::Tertiary => cfg.secondary_window,
            _ => cfg.weak_window.min(cfg.secondary_window),
        };
        if now.saturating_sub(last_primary) >= window {
            return Err(LockoutReason::PrimaryFallbackExpired);
        }
        if enrollment.tier() == Tier::Tertiary {
            let last = self.last_any_success.unwrap_or(last_primary);
            if now.saturating_sub(last) > cfg.idle_window {
                return Err(LockoutReason::IdleTimeout);
            }
        }
        Ok(())
    }
}

/// One authentication attempt. Failures and lockouts leave `state` unchanged.
#[allow(clippy::too_many_arguments)]
pub fn authenticate(
    cfg: &AuthConfig,
    state: &mut AuthState,
    enrollments: &BTreeMap<ModalityKind, Enrollment>,
    secret: &Digest,
    user: u32,
    kind: ModalityKind,
    presented: &str,
    now: u64,
    verifier: Backing,
) -> Result<AuthOutcome, AuthError> {
    let e = enrollments.get(&kind).ok_or(AuthError::NotEnrolled(kind))?;
    state.admits(cfg, e, now).map_err(AuthError::TierLockout)?;
    match gatekeeper_verify(secret, user, e, presented, now, verifier) {
        GatekeeperResult::Fail => Ok(AuthOutcome::Failed),
        GatekeeperResult::Pass { token } => {
            if e.tier() == Tier::Primary {
                state.last_primary_success = Some(now);
                state.unlocked_since_boot = true;
            }
            state.last_any_success = Some(now);
            state.current_unlock_tier = Some(e.tier());
            state.last_token = Some(token.clone());
            Ok(AuthOutcome::Success { tier: e.tier(), token })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyEntry {
    pub id: String,
    pub user: u32,
    pub backing: Backing,
    pub auth_bound: bool,
    pub requires_user_presence: bool,
    /// Minimum token strength; auth-bound keys never accept below strong.
    pub min_strength: Strength,
    /// How long a token stays fresh for this key.
    pub validity_secs: u64,
}

impl KeyEntry {
    pub fn new(id: &str, user: u32) -> Self {
        Self {
            id: id.into(),
            user,
            backing: Backing::Tee,
            auth_bound: false,
            requires_user_presence: false,
            min_strength: Strength::Strong,
            validity_secs: 300,
        }
    }

    pub fn required_strength(&self) -> Strength {
        self.min_strength.max(Strength::Strong)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateReason {
    NoToken,
    ForeignToken,
    ForgedToken,
    StaleToken,
    InsufficientStrength,
    NoUserPresence,
}

impl fmt::Display for GateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateReason::NoToken => "no-token",
            GateReason::ForeignToken => "foreign-token",
            GateReason::ForgedToken => "forged-token",
            GateReason::StaleToken => "stale-token",
            GateReason::InsufficientStrength => "insufficient-strength",
            GateReason::NoUserPresence => "no-user-presence",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "gate")]
pub enum KeyGate {
    Usable,
    Locked { reason: GateReason },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeystoreError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` already exists")]
    DuplicateKey(String),
    #[error("key material never leaves secure hardware")]
    NotExportable,
}

/// Keymaster / Strongbox. Keys can be used through [`Keystore::key_gate`]
/// but their material is never returned.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keystore {
    keys: BTreeMap<String, KeyEntry>,
    pub attestation_key: Option<KeyId>,
    pub confirmation_key: Option<KeyId>,
}

impl Keystore {
    pub fn provisioned(attestation_key: KeyId, confirmation_key: KeyId) -> Self {
        Self { keys: BTreeMap::new(), attestation_key: Some(attestation_key), confirmation_key: Some(confirmation_key) }
    }

    pub fn generate(&mut self, entry: KeyEntry) -> Result<(), KeystoreError> {
        if self.keys.contains_key(&entry.id) {
            return Err(KeystoreError::DuplicateKey(entry.id));
        }
        self.keys.insert(entry.id.clone(), entry);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&KeyEntry> {
        self.keys.get(id)
    }

    pub fn remove_user(&mut self, user: u32) {
        self.keys.retain(|_, k| k.user != user);
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&KeyEntry) -> bool) {
        self.keys.retain(|_, k| keep(k));
    }

    pub fn export_material(&self, id: &str) -> Result<Vec<u8>, KeystoreError> {
        match self.keys.get(id) {
            Some(_) => Err(KeystoreError::NotExportable),
            None => Err(KeystoreError::UnknownKey(id.into())),
        }
    }

    pub fn key_gate(
        &self,
        id: &str,
        token: Option<&AuthToken>,
        presence: bool,
        now: u64,
        secret: &Digest,
    ) -> Result<KeyGate, KeystoreError> {
        let key = self.keys.get(id).ok_or_else(|| KeystoreError::UnknownKey(id.into()))?;
        Ok(key_gate(key, token, presence, now, secret))
    }
}

pub fn key_gate(key: &KeyEntry, token: Option<&AuthToken>, presence: bool, now: u64, secret: &Digest) -> KeyGate {
    let locked = |reason| KeyGate::Locked { reason };
    if key.auth_bound {
        let Some(t) = token else { return locked(GateReason::NoToken) };
        if !t.is_authentic(secret) {
            return locked(GateReason::ForgedToken);
        }
        if t.user != key.user {
            return locked(GateReason::ForeignToken);
        }
        if now < t.issued_at || now - t.issued_at > key.validity_secs {
            return locked(GateReason::StaleToken);
        }
        if t.strength < key.required_strength() {
            return locked(GateReason::InsufficientStrength);
        }
    }
    if key.requires_user_presence && !presence {
        return locked(GateReason::NoUserPresence);
    }
    KeyGate::Usable
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confirmation {
    pub message_digest: Digest,
    pub signature: Signature,
}

/// Signs the digest of `message` inside the TEE only when the physical button
/// was pressed. `_kernel_compromised` is accepted to make explicit that a
/// compromised kernel has no path into this decision.
pub fn protected_confirm(
    key: &KeyId,
    message: &[u8],
    user_button: bool,
    _kernel_compromised: bool,
    scheme: &dyn SignatureScheme,
) -> Option<Confirmation> {
    if !user_button {
        return None;
    }
    let d = Digest::of(message);
    Some(Confirmation { message_digest: d, signature: scheme.sign(key, d.as_bytes()) })
}

pub fn verify_confirmation(key: &KeyId, message: &[u8], c: &Confirmation, scheme: &dyn SignatureScheme) -> bool {
    c.message_digest == Digest::of(message) && scheme.verify(key, c.message_digest.as_bytes(), &c.signature)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrhFirmware {
    pub version: u32,
    pub signer: KeyId,
    pub signature: Signature,
}

impl TrhFirmware {
    fn message(version: u32) -> Vec<u8> {
        [b"secmodel-trh-fw\0".as_ref(), &version.to_be_bytes()].concat()
    }

    pub fn signed(version: u32, key: &KeyId, scheme: &dyn SignatureScheme) -> Self {
        Self { version, signer: key.clone(), signature: scheme.sign(key, &Self::message(version)) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrhError {
    #[error("firmware not signed by the hardware vendor key")]
    BadSignature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrhOutcome {
    Preserved,
    /// Insider attack resistance: secrets regenerated, old data unreadable.
    Wiped,
}

/// Tamper-resistant hardware holding the encryption secret.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trh {
    pub vendor_key: KeyId,
    pub firmware_version: u32,
    secret: Digest,
    generation: u32,
}

impl Trh {
    pub fn new(vendor_key: KeyId, seed: &[u8]) -> Self {
        let secret = Digest::of_parts([b"secmodel-trh\0".as_ref(), seed, &0u32.to_be_bytes()]);
        Self { vendor_key, firmware_version: 1, secret, generation: 0 }
    }

    pub fn secret(&self) -> &Digest {
        &self.secret
    }

    /// Applies a firmware update. Without a verified user credential the
    /// encryption secret is replaced.
    pub fn update(
        &mut self,
        fw: &TrhFirmware,
        credential_verified: bool,
        scheme: &dyn SignatureScheme,
    ) -> Result<TrhOutcome, TrhError> {
        if fw.signer != self.vendor_key
            || !scheme.verify(&self.vendor_key, &TrhFirmware::message(fw.version), &fw.signature)
        {
            return Err(TrhError::BadSignature);
        }
        self.firmware_version = fw.version;
        if credential_verified {
            return Ok(TrhOutcome::Preserved);
        }
        self.generation += 1;
        self.secret = Digest::of_parts([
            b"secmodel-trh\0".as_ref(),
            self.secret.as_bytes(),
            &self.generation.to_be_bytes(),
        ]);
        Ok(TrhOutcome::Wiped)
    }
}

/// Opaque two-input derivation of a user's credential-encrypted key.
pub fn derive_ce_key(hardware: &Digest, user: u32, factor: &str) -> Digest {
    Digest::of_parts([b"secmodel-ce\0".as_ref(), hardware.as_bytes(), &user.to_be_bytes(), factor.as_bytes()])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CeStatus {
    Locked,
    Available,
    /// The key the data was encrypted under can no longer be derived.
    Unrecoverable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct CeSlot {
    /// Digest of the CE key; stands in for data encrypted under it.
    check: Digest,
    status: CeStatus,
}

/// Device-encrypted and per-user credential-encrypted key availability.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageKeys {
    pub de_available: bool,
    ce: BTreeMap<u32, CeSlot>,
}

impl StorageKeys {
    /// Binds a user's CE storage to the primary factor. Call on primary
    /// enrollment or credential change.
    pub fn provision(&mut self, hardware: &Digest, user: u32, factor: &str, available: bool) {
        let check = Digest::of(derive_ce_key(hardware, user, factor).as_bytes());
        let status = if available { CeStatus::Available } else { CeStatus::Locked };
        self.ce.insert(user, CeSlot { check, status });
    }

    pub fn boot(&mut self) {
        self.de_available = true;
        for s in self.ce.values_mut() {
            if s.status == CeStatus::Available {
                s.status = CeStatus::Locked;
            }
        }
    }

    /// Unlocks CE storage with a primary factor Gatekeeper has accepted; a
    /// mismatch then means the hardware secret changed underneath the data.
    pub fn unlock_ce(&mut self, hardware: &Digest, user: u32, factor: &str) -> CeStatus {
        let Some(slot) = self.ce.get_mut(&user) else { return CeStatus::Locked };
        if slot.status == CeStatus::Unrecoverable {
            return slot.status;
        }
        slot.status = if Digest::of(derive_ce_key(hardware, user, factor).as_bytes()) == slot.check {
            CeStatus::Available
        } else {
            CeStatus::Unrecoverable
        };
        slot.status
    }

    pub fn ce_status(&self, user: u32) -> CeStatus {
        self.ce.get(&user).map(|s| s.status).unwrap_or(CeStatus::Locked)
    }

    pub fn remove_user(&mut self, user: u32) {
        self.ce.remove(&user);
    }

    pub fn users(&self) -> impl Iterator<Item = u32> + '_ {
        self.ce.keys().copied()
    }
}
