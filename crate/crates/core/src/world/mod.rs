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


//! The simulated device.
//!
//! [`DeviceWorld`] composes the model modules into one state machine: boot
//! chain and hardware, the OS parsed from the verified system partition,
//! parties, users, packages, permissions, the in-memory filesystem, consent,
//! authentication and the keystore.
//!
//! Everything that survives a factory reset lives in [`Hardware`] or in the
//! flashed [`BootImages`]; everything else is writable data.

mod access;
mod apps;
mod device;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::authn::{AuthConfig, AuthError, AuthState, CeStatus, Enrollment, Keystore, KeystoreError, ModalityKind, Tier, Trh, TrhError};
use crate::boot::chain::{BootChain, BootIssue, BootState, RootOfTrust, SYSTEM_PARTITION};
use crate::boot::{
    build_images, verify_boot_chain, AttestError, BootImages, BootReport, FrpRegion, ImageSpec, LineageError,
    OemKeys, SigningLineage,
};
use crate::consent::{ConsentError, ConsentStore};
use crate::crypto::{KeyId, KeyRole, DEFAULT_SCHEME};
use crate::digest::Digest;
use crate::party::{Party, PartyClass, PartyDirectory, PartyId};
use crate::permissions::{
    expire_all_one_time, Manifest, PermissionError, PermissionRegistry, PermissionTable, DEFAULT_REGISTRY,
};
use crate::sandbox::{AppIdAllocator, FsObject, Location, MacPolicy, SandboxError, StorageClass, Uid, LABEL_SYSTEM_FILE};

pub use access::{AccessDecision, ScopeGrant};
pub use apps::InstallOutcome;
pub use device::FlashImage;

/// An app shipped on the system image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemApp {
    pub manifest: Manifest,
    pub key: KeyId,
    /// Privileged permissions allowlisted for this app.
    pub privileged: BTreeSet<String>,
}

/// Contents of the system partition, stored as canonical JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemImage {
    pub os_version: u32,
    pub platform_key: KeyId,
    /// Permission registry in the declarative text format.
    pub permissions: String,
    pub mac: MacPolicy,
    pub apps: Vec<SystemApp>,
}

impl SystemImage {
    pub fn android_default(os_version: u32) -> Self {
        let platform_key = KeyId::new("platform", KeyRole::Platform);
        let mut settings = Manifest::new("com.android.settings");
        settings.requested = vec!["android.permission.WRITE_SECURE_SETTINGS".into()];
        let mut phone = Manifest::new("com.android.phone");
        phone.requested = vec!["android.permission.READ_PRIVILEGED_PHONE_STATE".into()];
        Self {
            os_version,
            platform_key: platform_key.clone(),
            permissions: DEFAULT_REGISTRY.to_string(),
            mac: MacPolicy::android_default(),
            apps: vec![
                SystemApp { manifest: settings, key: platform_key.clone(), privileged: BTreeSet::new() },
                SystemApp {
                    manifest: phone,
                    key: platform_key,
                    privileged: ["android.permission.READ_PRIVILEGED_PHONE_STATE".to_string()].into(),
                },
            ],
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("plain data serializes")
    }

    pub fn from_bytes(b: &[u8]) -> Option<Self> {
        serde_json::from_slice(b).ok()
    }
}

/// State that survives factory reset: keys, fuses and tamper-resistant
/// storage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hardware {
    pub oem: OemKeys,
    pub chain: BootChain,
    pub frp: FrpRegion,
    pub trh: Trh,
    /// TEE-internal secret keying auth tokens.
    pub tee_secret: Digest,
    pub attestation_key: KeyId,
    pub confirmation_key: KeyId,
}

impl Hardware {
    pub fn new(seed: u64) -> Self {
        let oem = OemKeys::default();
        let s = seed.to_be_bytes();
        Self {
            chain: BootChain::new(oem.rom.clone()),
            oem,
            frp: FrpRegion::default(),
            trh: Trh::new(KeyId::new("trh-vendor", KeyRole::TrhVendor), &s),
            tee_secret: Digest::of_parts([b"secmodel-tee\0".as_ref(), &s]),
            attestation_key: KeyId::new("attestation", KeyRole::Attestation),
            confirmation_key: KeyId::new("confirmation", KeyRole::Attestation),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub auth: AuthConfig,
    /// Hash-tree block size for images the world builds itself.
    pub block_size: u32,
    /// Route knowledge-factor verification through tamper-resistant hardware.
    pub weaver: bool,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self { auth: AuthConfig::default(), block_size: 256, weaver: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    /// Parent user of a work profile.
    pub profile_of: Option<u32>,
    pub organization: Option<PartyId>,
    pub enrollments: BTreeMap<ModalityKind, Enrollment>,
    pub auth: AuthState,
}

impl UserRecord {
    pub fn has_primary(&self) -> bool {
        self.enrollments.values().any(|e| e.tier() == Tier::Primary)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Package {
    pub manifest: Manifest,
    pub key: KeyId,
    pub lineage: Option<SigningLineage>,
    pub system: bool,
    pub privileged: BTreeSet<String>,
    pub app_id: u32,
    pub users: BTreeSet<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("unknown party {0}")]
    UnknownParty(PartyId),
    #[error("unknown user {0}")]
    UnknownUser(u32),
    #[error("package `{0}` already registered")]
    DuplicatePackageName(String),
    #[error("package `{0}` not installed")]
    NotInstalled(String),
    #[error("update of `{0}` rejected: signing key not trusted")]
    UpdateRejected(String),
    #[error("no OS is running")]
    NotBooted,
    #[error("bootloader is locked")]
    BootloaderLocked,
    #[error("invalid path `{0}`")]
    InvalidPath(String),
    #[error("no such object `{0}`")]
    NoSuchObject(String),
    #[error("user {0} already exists")]
    UserExists(u32),
    #[error("user {0} is locked")]
    UserLocked(u32),
    #[error("user {0} needs a single primary credential first")]
    NeedsPrimary(u32),
    #[error("factory reset protection: previous account required")]
    FrpLocked,
    #[error("{party} vetoed {action}")]
    Vetoed { action: String, party: PartyId },
    #[error("{0}")]
    Sandbox(#[from] SandboxError),
    #[error("{0}")]
    Permission(#[from] PermissionError),
    #[error("{0}")]
    Consent(#[from] ConsentError),
    #[error("{0}")]
    Auth(#[from] AuthError),
    #[error("{0}")]
    Keystore(#[from] KeystoreError),
    #[error("{0}")]
    Trh(#[from] TrhError),
    #[error("{0}")]
    Lineage(#[from] LineageError),
    #[error("{0}")]
    Attest(#[from] AttestError),
}

pub type WorldResult<T> = Result<T, WorldError>;

fn images_by_digest<S: Serializer>(images: &BootImages, s: S) -> Result<S::Ok, S::Error> {
    Digest::of(&serde_json::to_vec(images).expect("plain data serializes")).serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviceWorld {
    pub config: WorldConfig,
    pub hardware: Hardware,
    #[serde(serialize_with = "images_by_digest")]
    pub images: BootImages,
    pub clock: u64,
    pub boot: BootReport,
    pub os: Option<SystemImage>,
    pub registry: PermissionRegistry,
    pub mac: MacPolicy,
    pub parties: BTreeMap<PartyId, Party>,
    pub users: BTreeMap<u32, UserRecord>,
    pub packages: BTreeMap<String, Package>,
    pub app_ids: AppIdAllocator,
    pub perms: PermissionTable,
    pub consent: ConsentStore,
    pub objects: BTreeMap<String, FsObject>,
    pub grants: BTreeSet<ScopeGrant>,
    pub storage: crate::authn::StorageKeys,
    pub keystore: Keystore,
    pub kernel_compromised: bool,
    /// Setup is blocked until the FRP account is presented.
    pub frp_pending: bool,
}

impl PartyDirectory for DeviceWorld {
    fn party(&self, id: &PartyId) -> Option<&Party> {
        self.parties.get(id)
    }
}

impl DeviceWorld {
    /// A device as it leaves the factory: OEM images for `system`, booted.
    pub fn factory(system: &SystemImage, seed: u64, config: WorldConfig) -> Self {
        let hardware = Hardware::new(seed);
        let mut spec = ImageSpec::new(system.to_bytes());
        spec.block_size = config.block_size;
        let images = build_images(&hardware.oem, &spec, &DEFAULT_SCHEME);
        Self::boot_fresh(hardware, images, config, 0)
    }

    /// A world with no writable data, booted from `hardware` and `images`.
    pub fn boot_fresh(hardware: Hardware, images: BootImages, config: WorldConfig, clock: u64) -> Self {
        let boot = verify_boot_chain(&hardware.chain, &images, &DEFAULT_SCHEME);
        let mut w = Self {
            config,
            hardware,
            images,
            clock,
            boot,
            os: None,
            registry: PermissionRegistry::default(),
            mac: MacPolicy::default(),
            parties: BTreeMap::new(),
            users: BTreeMap::new(),
            packages: BTreeMap::new(),
            app_ids: AppIdAllocator::default(),
            perms: PermissionTable::default(),
            consent: ConsentStore::new(),
            objects: BTreeMap::new(),
            grants: BTreeSet::new(),
            storage: Default::default(),
            keystore: Keystore::default(),
            kernel_compromised: false,
            frp_pending: false,
        };
        w.provision();
        w.reboot();
        w
    }

    /// Initial writable state: the platform, user 0 and the keystore's
    /// factory keys.
    fn provision(&mut self) {
        self.parties.insert(PartyId::platform(), Party::new(PartyId::platform(), PartyClass::Platform));
        self.consent.set_default(PartyId::platform(), true);
        self.keystore =
            Keystore::provisioned(self.hardware.attestation_key.clone(), self.hardware.confirmation_key.clone());
        self.add_user_record(0, UserRecord::default());
        self.frp_pending = self.hardware.frp.is_set();
    }

    fn add_user_record(&mut self, user: u32, rec: UserRecord) {
        let id = PartyId::user(user);
        self.parties.insert(id.clone(), Party::new(id, PartyClass::User));
        self.users.insert(user, rec);
        self.storage.provision(self.hardware.trh.secret(), user, "", true);
    }

    /// Erases all writable data, then boots. Hardware state and flashed
    /// images are kept.
    pub fn factory_reset(&mut self) {
        self.parties.clear();
        self.users.clear();
        self.packages.clear();
        self.app_ids = AppIdAllocator::default();
        self.perms = PermissionTable::default();
        self.consent = ConsentStore::new();
        self.objects.clear();
        self.grants.clear();
        self.storage = Default::default();
        self.keystore = Keystore::default();
        self.registry = PermissionRegistry::default();
        self.mac = MacPolicy::default();
        self.os = None;
        self.kernel_compromised = false;
        self.provision();
        self.reboot();
    }

    pub fn platform_key(&self) -> Option<&KeyId> {
        self.os.as_ref().map(|o| &o.platform_key)
    }

    pub fn is_booted(&self) -> bool {
        self.os.is_some()
    }

    pub(crate) fn require_os(&self) -> WorldResult<&SystemImage> {
        self.os.as_ref().ok_or(WorldError::NotBooted)
    }

    pub fn boot_state(&self) -> BootState {
        self.boot.state
    }

    /// Verifies the chain, loads the OS from the system partition and resets
    /// run-time state.
    pub fn reboot(&mut self) {
        let mut report = verify_boot_chain(&self.hardware.chain, &self.images, &DEFAULT_SCHEME);
        self.hardware.chain.commit(&report);
        let os = if report.state.color == crate::boot::BootColor::Red {
            None
        } else {
            let parsed = self.images.partitions.get(SYSTEM_PARTITION).and_then(|b| SystemImage::from_bytes(b));
            if parsed.is_none() {
                report.issues.push(BootIssue::NoOs);
                report.os_found = false;
                report.verified = false;
                report.state =
                    BootState::compute(report.state.device_locked, report.root.unwrap_or(RootOfTrust::Oem), false, false);
            }
            parsed
        };
        self.boot = report;
        self.os = os;
        self.kernel_compromised = false;
        self.grants.clear();
        for p in self.parties.values_mut() {
            p.state.attributes.clear();
        }
        let users: Vec<PartyId> = self.users.keys().map(|u| PartyId::user(*u)).collect();
        expire_all_one_time(&mut self.consent, &users);
        self.storage.boot();
        for rec in self.users.values_mut() {
            rec.auth = AuthState::default();
        }
        let Some(os) = self.os.clone() else { return };

        self.mac = os.mac.clone();
        self.registry = PermissionRegistry::parse(&os.permissions).unwrap_or_default();
        let declared: Vec<_> = self
            .packages
            .values()
            .filter(|p| !p.system)
            .flat_map(|p| p.manifest.declared.iter().cloned().map(|mut d| {
                d.declarer = Some(p.key.clone());
                d
            }))
            .collect();
        for d in declared {
            let _ = self.registry.define(d);
        }
        self.ensure_system_objects();
        for app in &os.apps {
            for user in self.users.keys().copied().collect::<Vec<_>>() {
                if !self.packages.get(&app.manifest.package).is_some_and(|p| p.users.contains(&user)) {
                    let _ = self.install_system_app(app, user);
                }
            }
        }
        // Without a lockscreen credential the user is unlocked at boot.
        for u in self.users.keys().copied().collect::<Vec<_>>() {
            self.auto_unlock(u);
        }
    }

    fn ensure_system_objects(&mut self) {
        for path in ["/system/build.prop", "/system/etc/hosts"] {
            self.objects.entry(path.to_string()).or_insert_with(|| FsObject {
                path: path.to_string(),
                owner: Uid::ROOT,
                mode: 0o644,
                location: Location::System,
                labels: [LABEL_SYSTEM_FILE.to_string()].into(),
                creator: None,
                controller: PartyId::platform(),
                storage: StorageClass::System,
                user_id: 0,
                content: String::new(),
            });
        }
        let platform = self.parties.get_mut(&PartyId::platform()).expect("platform exists");
        for path in ["/system/build.prop", "/system/etc/hosts"] {
            platform.state.objects.insert(path.to_string());
        }
    }

    /// Digest of the canonical serialization of the whole world.
    pub fn digest(&self) -> Digest {
        Digest::of(&serde_json::to_vec(self).expect("plain data serializes"))
    }

    pub fn uid_of(&self, package: &str, user: u32) -> WorldResult<Uid> {
        let p = self.packages.get(package).ok_or_else(|| WorldError::NotInstalled(package.into()))?;
        if !p.users.contains(&user) {
            return Err(WorldError::NotInstalled(format!("{package} (user {user})")));
        }
        Ok(crate::sandbox::Aid { user_id: user, app_id: p.app_id }.uid())
    }

    /// Package running as `uid`, if any. Shared-uid groups yield the first
    /// member by name.
    pub fn package_of(&self, uid: Uid) -> Option<&Package> {
        if !uid.is_app() {
            return None;
        }
        self.packages.values().find(|p| p.app_id == uid.app_id() && p.users.contains(&uid.user_id()))
    }

    /// Checks the cross-module invariants; returns a description of each
    /// violation.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut v = Vec::new();
        let fg = self
            .parties
            .values()
            .filter(|p| p.class() == PartyClass::Developer && p.state.attr(crate::party::UI_FOREGROUND))
            .count();
        if fg > 1 {
            v.push(format!("{fg} apps hold ui-foreground"));
        }
        for (path, o) in &self.objects {
            match self.parties.get(&o.controller) {
                None => v.push(format!("{path}: controller {} missing", o.controller)),
                Some(p) if !p.state.objects.contains(path) => {
                    v.push(format!("{path}: not in controller state"))
                }
                _ => {}
            }
            let controllers = self.parties.values().filter(|p| p.state.objects.contains(path)).count();
            if controllers != 1 {
                v.push(format!("{path}: {controllers} controlling parties"));
            }
        }
        for p in self.parties.values() {
            for o in &p.state.objects {
                if !self.objects.contains_key(o) {
                    v.push(format!("{}: dangling object {o}", p.id()));
                }
            }
        }
        for (u, rec) in &self.users {
            if self.storage.ce_status(*u) == CeStatus::Available && !rec.auth.unlocked_since_boot {
                v.push(format!("user {u}: CE available without primary unlock"));
            }
        }
        if !self.boot.state.is_consistent() {
            v.push("boot state inconsistent with lock flag".into());
        }
        let mut seen = BTreeMap::new();
        for (name, p) in &self.packages {
            for u in &p.users {
                let uid = crate::sandbox::Aid { user_id: *u, app_id: p.app_id }.uid();
                if let Some(other) = seen.insert(uid, name) {
                    let same_group = p.manifest.shared_uid.is_some()
                        && p.manifest.shared_uid == self.packages[other].manifest.shared_uid
                        && p.key == self.packages[other].key;
                    if !same_group {
                        v.push(format!("uid {uid} shared by {other} and {name}"));
                    }
                }
            }
        }
        v
    }

    /// Reads the FRP record as `caller`.
    pub fn read_frp(&self, caller: &PartyId) -> Result<Option<&str>, crate::boot::rollback::FrpError> {
        self.hardware.frp.read(caller)
    }
}
