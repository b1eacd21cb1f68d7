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


//! Boot-time and hardware-backed operations: flashing, bootloader lock
//! state, OTA, authentication, keystore, TRH firmware and attestation.

use serde::{Deserialize, Serialize};

use super::{DeviceWorld, SystemImage, WorldError, WorldResult};
use crate::authn::{
    authenticate, gatekeeper_verify, protected_confirm, AuthOutcome, Backing, BiometricClass, Confirmation, Enrollment,
    GatekeeperResult, KeyEntry, KeyGate, ModalityKind, Tier, TrhFirmware, TrhOutcome,
};
use crate::boot::{attest, build_images, AttestError, AttestationRecord, ImageSpec};
use crate::crypto::{KeyId, KeyRole, DEFAULT_SCHEME};
use crate::party::PartyId;

/// What gets written to the partitions by `flash` or `ota`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlashImage {
    /// OEM build; the vbmeta is signed with the OEM vbmeta key.
    Oem { system: SystemImage, rollback_index: u64 },
    /// Custom build whose vbmeta is signed with `key`.
    Custom { system: SystemImage, key: KeyId, rollback_index: u64 },
}

impl DeviceWorld {
    fn write_images(&mut self, image: &FlashImage) {
        let (system, signer, idx) = match image {
            FlashImage::Oem { system, rollback_index } => (system, None, *rollback_index),
            FlashImage::Custom { system, key, rollback_index } => (system, Some(key.clone()), *rollback_index),
        };
        let mut spec = ImageSpec::new(system.to_bytes());
        spec.block_size = self.config.block_size;
        spec.rollback_index = idx;
        spec.vbmeta_signer = signer;
        self.images = build_images(&self.hardware.oem, &spec, &DEFAULT_SCHEME);
    }

    /// Writes new partitions over fastboot and reboots. User data is kept.
    pub fn flash(&mut self, image: &FlashImage) -> WorldResult<()> {
        if self.hardware.chain.locked {
            return Err(WorldError::BootloaderLocked);
        }
        self.write_images(image);
        self.reboot();
        Ok(())
    }

    /// Sets or clears the user-settable root of trust.
    pub fn set_user_root(&mut self, key: Option<KeyId>) -> WorldResult<()> {
        self.hardware.chain.set_user_root(key).map_err(|_| WorldError::BootloaderLocked)
    }

    /// Unlocking the bootloader erases all user data.
    pub fn unlock_bootloader(&mut self) {
        self.hardware.chain.locked = false;
        self.factory_reset();
    }

    /// Relocking the bootloader erases all user data.
    pub fn relock_bootloader(&mut self) {
        self.hardware.chain.locked = true;
        self.factory_reset();
    }

    /// Over-the-air update signed by the OEM, then reboot.
    pub fn ota(&mut self, system: SystemImage, rollback_index: u64) -> WorldResult<()> {
        self.require_os()?;
        self.write_images(&FlashImage::Oem { system, rollback_index });
        self.reboot();
        Ok(())
    }

    /// Raw write to a partition, bypassing the OS. Possible with an unlocked
    /// bootloader or a compromised kernel.
    pub fn tamper_partition(&mut self, partition: &str, offset: usize) -> WorldResult<()> {
        if self.hardware.chain.locked && !self.kernel_compromised {
            return Err(WorldError::BootloaderLocked);
        }
        let data = self
            .images
            .partitions
            .get_mut(partition)
            .filter(|d| offset < d.len())
            .ok_or_else(|| WorldError::InvalidPath(format!("{partition}@{offset}")))?;
        data[offset] ^= 0x01;
        Ok(())
    }

    /// Adds an account to user 0; the platform records it for FRP.
    pub fn add_account(&mut self, account: &str) -> WorldResult<()> {
        self.require_setup()?;
        self.hardware.frp.set(Some(account.to_string()));
        Ok(())
    }

    /// Reset from Settings by the unlocked owner; clears the FRP record.
    pub fn settings_factory_reset(&mut self) -> WorldResult<()> {
        self.require_setup()?;
        if !self.users.get(&0).is_some_and(|r| r.auth.is_unlocked()) {
            return Err(WorldError::UserLocked(0));
        }
        self.hardware.frp.set(None);
        self.factory_reset();
        Ok(())
    }

    /// Setup wizard; after an untrusted reset it demands the previous
    /// account.
    pub fn setup(&mut self, account: Option<&str>) -> WorldResult<()> {
        self.require_os()?;
        if self.frp_pending {
            let record = self.read_frp(&PartyId::platform()).expect("platform reads FRP");
            if record != account {
                return Err(WorldError::FrpLocked);
            }
        }
        self.frp_pending = false;
        Ok(())
    }

    pub(crate) fn require_setup(&self) -> WorldResult<()> {
        self.require_os()?;
        if self.frp_pending {
            return Err(WorldError::FrpLocked);
        }
        Ok(())
    }

    fn verifier(&self) -> Backing {
        if self.config.weaver {
            Backing::Trh
        } else {
            Backing::Tee
        }
    }

    /// Enrolls a modality. A primary enrollment binds CE storage to the new
    /// factor and needs CE to be available; others need a primary first.
    pub fn enroll(
        &mut self,
        user: u32,
        kind: ModalityKind,
        factor: &str,
        class: Option<BiometricClass>,
    ) -> WorldResult<()> {
        self.require_os()?;
        let rec = self.users.get(&user).ok_or(WorldError::UnknownUser(user))?;
        if kind.tier() == Tier::Primary {
            if self.storage.ce_status(user) != crate::authn::CeStatus::Available {
                return Err(WorldError::UserLocked(user));
            }
            for e in rec.enrollments.values().filter(|e| e.tier() == Tier::Primary) {
                if e.kind != kind {
                    return Err(WorldError::NeedsPrimary(user));
                }
            }
            let secret = *self.hardware.trh.secret();
            self.storage.provision(&secret, user, factor, true);
        } else if !rec.has_primary() {
            return Err(WorldError::NeedsPrimary(user));
        }
        let e = Enrollment::new(user, kind, factor, class);
        self.users.get_mut(&user).expect("checked").enrollments.insert(kind, e);
        Ok(())
    }

    /// One lockscreen attempt. A primary success also unlocks CE storage.
    pub fn unlock(&mut self, user: u32, kind: ModalityKind, presented: &str) -> WorldResult<AuthOutcome> {
        self.require_os()?;
        let cfg = self.config.auth;
        let verifier = self.verifier();
        let (clock, tee) = (self.clock, self.hardware.tee_secret);
        let rec = self.users.get_mut(&user).ok_or(WorldError::UnknownUser(user))?;
        let out = authenticate(&cfg, &mut rec.auth, &rec.enrollments, &tee, user, kind, presented, clock, verifier)?;
        if let AuthOutcome::Success { tier: Tier::Primary, .. } = out {
            let secret = *self.hardware.trh.secret();
            self.storage.unlock_ce(&secret, user, presented);
        }
        Ok(out)
    }

    pub fn lock(&mut self, user: u32) -> WorldResult<()> {
        self.users.get_mut(&user).ok_or(WorldError::UnknownUser(user))?.auth.lock();
        Ok(())
    }

    /// Key id of `alias` owned by `uid`.
    pub fn key_id(uid: crate::sandbox::Uid, alias: &str) -> String {
        format!("{}/{alias}", uid.0)
    }

    /// Generates an app key; `entry.id` is taken as the alias.
    pub fn keygen(&mut self, package: &str, user: u32, mut entry: KeyEntry) -> WorldResult<String> {
        self.require_os()?;
        let uid = self.uid_of(package, user)?;
        entry.id = Self::key_id(uid, &entry.id);
        entry.user = user;
        let id = entry.id.clone();
        self.keystore.generate(entry)?;
        Ok(id)
    }

    /// Asks the keystore whether `package`'s key may be used now with the
    /// user's latest auth token.
    pub fn use_key(&self, package: &str, user: u32, alias: &str, presence: bool) -> WorldResult<KeyGate> {
        self.require_os()?;
        let uid = self.uid_of(package, user)?;
        let token = self.users.get(&user).and_then(|r| r.auth.last_token.as_ref());
        Ok(self.keystore.key_gate(&Self::key_id(uid, alias), token, presence, self.clock, &self.hardware.tee_secret)?)
    }

    /// Protected confirmation of `message`; only the physical button yields
    /// a signature.
    pub fn confirm(&self, message: &str, button: bool) -> WorldResult<Option<Confirmation>> {
        self.require_os()?;
        let key = self.keystore.confirmation_key.as_ref().ok_or(AttestError::KeystoreUnavailable)?;
        Ok(protected_confirm(key, message.as_bytes(), button, self.kernel_compromised, &DEFAULT_SCHEME))
    }

    /// Installs TRH firmware `version`, signed by the vendor key or by an
    /// impostor. The owner's credential, if any, must be presented for the
    /// secrets to survive.
    pub fn trh_update(&mut self, version: u32, vendor_signed: bool, credential: Option<&str>) -> WorldResult<TrhOutcome> {
        let signer = if vendor_signed {
            self.hardware.trh.vendor_key.clone()
        } else {
            KeyId::new("impostor", KeyRole::TrhVendor)
        };
        let fw = TrhFirmware::signed(version, &signer, &DEFAULT_SCHEME);
        let verified = match self.users.get(&0).and_then(|r| r.enrollments.values().find(|e| e.tier() == Tier::Primary)) {
            None => true,
            Some(e) => credential.is_some_and(|c| {
                matches!(
                    gatekeeper_verify(&self.hardware.tee_secret, 0, e, c, self.clock, self.verifier()),
                    GatekeeperResult::Pass { .. }
                )
            }),
        };
        let out = self.hardware.trh.update(&fw, verified, &DEFAULT_SCHEME)?;
        if out == TrhOutcome::Wiped {
            self.keystore.retain(|k| k.backing != Backing::Trh);
        }
        Ok(out)
    }

    /// Key attestation over the current boot state.
    pub fn attest(&self, challenge: &str) -> WorldResult<AttestationRecord> {
        let os = self.os.as_ref().ok_or(AttestError::KeystoreUnavailable)?;
        Ok(attest(self.keystore.attestation_key.as_ref(), &self.boot, os.os_version, challenge, &DEFAULT_SCHEME)?)
    }

    /// A kernel exploit: uid 0 escapes DAC and MAC until the next reboot.
    pub fn exploit_kernel(&mut self) -> WorldResult<()> {
        self.require_os()?;
        self.kernel_compromised = true;
        Ok(())
    }

    /// Moves the clock forward; it never goes back.
    pub fn advance(&mut self, to: u64) {
        self.clock = self.clock.max(to);
    }
}
