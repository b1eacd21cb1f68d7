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

//! Application sandbox primitives: UIDs, the in-memory filesystem objects,
//! discretionary and mandatory access control, scoped storage requirements and
//! package visibility.
//!
//! The composed access check lives in [`crate::world`]; everything here is a
//! pure building block of it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consent::AccessMode;
use crate::crypto::KeyId;
use crate::party::PartyId;
use crate::permissions::{Manifest, READ_EXTERNAL_STORAGE, WRITE_EXTERNAL_STORAGE};

pub const AID_ROOT: u32 = 0;
pub const AID_SYSTEM: u32 = 1000;
pub const AID_APP_START: u32 = 10000;
pub const AID_APP_END: u32 = 19999;
pub const AID_ISOLATED_START: u32 = 99000;
pub const AID_ISOLATED_END: u32 = 99999;
pub const AID_USER_OFFSET: u32 = 100000;

/// First target SDK with 0700 private directories.
pub const PRIVATE_0700_SDK: u32 = 24;
/// First target SDK with scoped external storage.
pub const SCOPED_STORAGE_SDK: u32 = 29;
/// First target SDK with filtered package visibility.
pub const PACKAGE_VISIBILITY_SDK: u32 = 30;

/// A kernel UID.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Uid(pub u32);

impl Uid {
    pub const ROOT: Uid = Uid(AID_ROOT);
    pub const SYSTEM: Uid = Uid(AID_SYSTEM);

    pub fn user_id(self) -> u32 {
        self.0 / AID_USER_OFFSET
    }

    pub fn app_id(self) -> u32 {
        self.0 % AID_USER_OFFSET
    }

    pub fn is_app(self) -> bool {
        (AID_APP_START..=AID_APP_END).contains(&self.app_id())
    }

    pub fn is_isolated(self) -> bool {
        (AID_ISOLATED_START..=AID_ISOLATED_END).contains(&self.app_id())
    }
}

impl fmt::Display for Uid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Android ID: a device user combined with a per-app id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Aid {
    pub user_id: u32,
    pub app_id: u32,
}

impl Aid {
    pub fn uid(self) -> Uid {
        Uid(self.user_id * AID_USER_OFFSET + self.app_id)
    }
}

impl From<Uid> for Aid {
    fn from(u: Uid) -> Self {
        Aid { user_id: u.user_id(), app_id: u.app_id() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SandboxError {
    #[error("no free app id in [{AID_APP_START}, {AID_APP_END}]")]
    RangeExhausted,
    #[error("shared uid `{0}` requested with a different signing key")]
    SharedUidKeyMismatch(String),
    #[error("a work profile already exists for user {0}")]
    ProfileExists(u32),
    #[error("unknown user {0}")]
    UnknownUser(u32),
    #[error("package `{0}` is not installed")]
    NotInstalled(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct SharedUidGroup {
    app_id: u32,
    key: KeyId,
    members: BTreeSet<String>,
}

/// App-id assignment. App ids are device-wide: the same package gets the same
/// app id for every user.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppIdAllocator {
    by_package: BTreeMap<String, u32>,
    shared: BTreeMap<String, SharedUidGroup>,
    /// app id -> number of packages holding it
    in_use: BTreeMap<u32, u32>,
}

impl AppIdAllocator {
    pub fn app_id(&self, package: &str) -> Option<u32> {
        self.by_package.get(package).copied()
    }

    fn lowest_free(&self) -> Option<u32> {
        // Dense prefix: no gap to search.
        if let Some(&last) = self.in_use.keys().next_back() {
            if (last - AID_APP_START) as usize + 1 == self.in_use.len() {
                return (last < AID_APP_END).then_some(last + 1);
            }
        }
        let mut next = AID_APP_START;
        for &id in self.in_use.keys() {
            if id != next {
                break;
            }
            next += 1;
        }
        (next <= AID_APP_END).then_some(next)
    }

    /// Assigns (or returns the existing) app id of `package`. Members of a
    /// shared-uid group must all be signed with the group's key.
    pub fn assign(
        &mut self,
        package: &str,
        shared: Option<(&str, &KeyId)>,
    ) -> Result<u32, SandboxError> {
        if let Some(id) = self.app_id(package) {
            return Ok(id);
        }
        let id = match shared {
            Some((group, key)) => match self.shared.get_mut(group) {
                Some(g) if g.key != *key => {
                    return Err(SandboxError::SharedUidKeyMismatch(group.to_string()))
                }
                Some(g) => {
                    g.members.insert(package.to_string());
                    g.app_id
                }
                None => {
                    let id = self.lowest_free().ok_or(SandboxError::RangeExhausted)?;
                    self.shared.insert(
                        group.to_string(),
                        SharedUidGroup { app_id: id, key: key.clone(), members: [package.to_string()].into() },
                    );
                    id
                }
            },
            None => self.lowest_free().ok_or(SandboxError::RangeExhausted)?,
        };
        self.by_package.insert(package.to_string(), id);
        *self.in_use.entry(id).or_default() += 1;
        Ok(id)
    }

    /// Checks whether `assign` would succeed without changing anything.
    pub fn check_shared(&self, group: &str, key: &KeyId) -> Result<(), SandboxError> {
        match self.shared.get(group) {
            Some(g) if g.key != *key => Err(SandboxError::SharedUidKeyMismatch(group.to_string())),
            _ => Ok(()),
        }
    }

    /// Packages sharing the app id of `package` (including itself).
    pub fn same_app_id(&self, package: &str) -> Vec<String> {
        let Some(id) = self.app_id(package) else { return Vec::new() };
        self.by_package.iter().filter(|(_, v)| **v == id).map(|(k, _)| k.clone()).collect()
    }

    pub fn release(&mut self, package: &str) {
        let Some(id) = self.by_package.remove(package) else { return };
        if let Some(n) = self.in_use.get_mut(&id) {
            *n -= 1;
            if *n == 0 {
                self.in_use.remove(&id);
            }
        }
        for g in self.shared.values_mut() {
            g.members.remove(package);
        }
        self.shared.retain(|_, g| !g.members.is_empty());
    }

    pub fn is_empty(&self) -> bool {
        self.by_package.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Location {
    AppPrivate,
    SharedStorage,
    ExternalAppDir,
    System,
}

impl FromStr for Location {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "app-private" => Location::AppPrivate,
            "shared-storage" => Location::SharedStorage,
            "external-app-dir" => Location::ExternalAppDir,
            "system" => Location::System,
            _ => return Err(format!("unknown location `{s}`")),
        })
    }
}

/// File-based encryption class of an object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageClass {
    /// Read-only system partition, not encrypted per user.
    System,
    /// Device encrypted, available after boot.
    De,
    /// Credential encrypted, available after the owning user unlocks.
    Ce,
}

pub const LABEL_APP_DATA: &str = "app_data_file";
pub const LABEL_MEDIA: &str = "media_rw_data_file";
pub const LABEL_SYSTEM_FILE: &str = "system_file";

/// An object in the modeled filesystem.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsObject {
    pub path: String,
    pub owner: Uid,
    pub mode: u16,
    pub location: Location,
    pub labels: BTreeSet<String>,
    /// Uid of the app that created the object (shared media provenance).
    pub creator: Option<Uid>,
    pub controller: PartyId,
    pub storage: StorageClass,
    /// User whose storage holds the object.
    pub user_id: u32,
    pub content: String,
}

impl FsObject {
    pub fn private_dir(package: &str, user_id: u32) -> String {
        format!("/data/user/{user_id}/{package}")
    }

    pub fn external_dir(package: &str, user_id: u32) -> String {
        format!("/storage/emulated/{user_id}/Android/data/{package}")
    }

    pub fn shared_root(user_id: u32) -> String {
        format!("/storage/emulated/{user_id}")
    }

    /// Default mode of a freshly created object in `location`.
    pub fn default_mode(location: Location, target_sdk: u32) -> u16 {
        match location {
            Location::AppPrivate if target_sdk >= PRIVATE_0700_SDK => 0o700,
            Location::AppPrivate => 0o751,
            Location::ExternalAppDir => 0o700,
            Location::SharedStorage => 0o660,
            Location::System => 0o644,
        }
    }

    pub fn default_label(location: Location) -> &'static str {
        match location {
            Location::AppPrivate => LABEL_APP_DATA,
            Location::SharedStorage | Location::ExternalAppDir => LABEL_MEDIA,
            Location::System => LABEL_SYSTEM_FILE,
        }
    }

    /// Classifies a path into its location and owning user. App-owned
    /// locations also return the owning package.
    pub fn classify(path: &str) -> Option<(Location, u32, Option<String>)> {
        let parts: Vec<&str> = path.trim_start_matches('/').split('/').collect();
        match parts.as_slice() {
            ["data", "user", u, pkg, ..] => Some((Location::AppPrivate, u.parse().ok()?, Some(pkg.to_string()))),
            ["storage", "emulated", u, "Android", "data", pkg, ..] => {
                Some((Location::ExternalAppDir, u.parse().ok()?, Some(pkg.to_string())))
            }
            ["storage", "emulated", u, ..] => Some((Location::SharedStorage, u.parse().ok()?, None)),
            ["system", ..] => Some((Location::System, 0, None)),
            _ => None,
        }
    }
}

/// The access-control layer that decided an access.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    /// Credential-encrypted storage of the owning user is locked.
    Encryption,
    Dac,
    Mac,
    Permission,
    /// Work-profile policy of the organization.
    Organization,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Encryption => "encryption",
            Mechanism::Dac => "DAC",
            Mechanism::Mac => "MAC",
            Mechanism::Permission => "permission",
            Mechanism::Organization => "organization",
        })
    }
}

impl FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "encryption" => Mechanism::Encryption,
            "dac" => Mechanism::Dac,
            "mac" => Mechanism::Mac,
            "permission" => Mechanism::Permission,
            "organization" => Mechanism::Organization,
            _ => return Err(format!("unknown mechanism `{s}`")),
        })
    }
}

fn mode_bit(mode: AccessMode) -> u16 {
    match mode {
        AccessMode::Read => 0o4,
        AccessMode::Write => 0o2,
    }
}

/// UNIX permission bits plus explicit per-object grants.
///
/// Root bypasses DAC. Shared storage emulates a per-user group that every app
/// of that user belongs to; every other object has a private group.
pub fn dac_allows(subject: Uid, obj: &FsObject, mode: AccessMode, explicit_grant: bool) -> bool {
    if subject == Uid::ROOT || explicit_grant {
        return true;
    }
    let shift = if subject == obj.owner {
        6
    } else if obj.location == Location::SharedStorage
        && subject.user_id() == obj.user_id
        && (subject.is_app() || subject.app_id() == AID_SYSTEM)
    {
        3
    } else {
        0
    };
    (obj.mode >> shift) & mode_bit(mode) != 0
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MacRule {
    pub subject: String,
    pub object: String,
    pub mode: AccessMode,
}

/// Abstract mandatory policy: a set of allowed (subject, object, mode) label
/// triples. Anything not listed is denied.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacPolicy {
    rules: BTreeSet<MacRule>,
}

pub const DOMAIN_UNTRUSTED_APP: &str = "untrusted_app";
pub const DOMAIN_PRIV_APP: &str = "priv_app";
pub const DOMAIN_PLATFORM_APP: &str = "platform_app";
pub const DOMAIN_ISOLATED_APP: &str = "isolated_app";
pub const DOMAIN_SYSTEM_SERVER: &str = "system_server";
pub const DOMAIN_SU: &str = "su";

impl MacPolicy {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Production-style policy. Note there are no rules for `su` or
    /// `isolated_app`.
    pub fn android_default() -> Self {
        let mut p = Self::default();
        for d in [DOMAIN_UNTRUSTED_APP, DOMAIN_PRIV_APP, DOMAIN_PLATFORM_APP] {
            for obj in [LABEL_APP_DATA, LABEL_MEDIA] {
                p.allow(d, obj, AccessMode::Read);
                p.allow(d, obj, AccessMode::Write);
            }
            p.allow(d, LABEL_SYSTEM_FILE, AccessMode::Read);
        }
        p.allow(DOMAIN_SYSTEM_SERVER, LABEL_SYSTEM_FILE, AccessMode::Read);
        p.allow(DOMAIN_SYSTEM_SERVER, LABEL_MEDIA, AccessMode::Read);
        p
    }

    pub fn allow(&mut self, subject: &str, object: &str, mode: AccessMode) {
        self.rules.insert(MacRule { subject: subject.into(), object: object.into(), mode });
    }

    pub fn revoke(&mut self, subject: &str, object: &str, mode: AccessMode) {
        self.rules.remove(&MacRule { subject: subject.into(), object: object.into(), mode });
    }

    pub fn clear(&mut self) {
        self.rules.clear();
    }

    pub fn rules(&self) -> impl Iterator<Item = &MacRule> {
        self.rules.iter()
    }

    /// Every label of the object must be allowed for the subject domain.
    /// Unlabeled objects are denied.
    pub fn allows(&self, domain: &str, labels: &BTreeSet<String>, mode: AccessMode) -> bool {
        !labels.is_empty()
            && labels.iter().all(|l| {
                self.rules.contains(&MacRule { subject: domain.into(), object: l.clone(), mode })
            })
    }

    /// Parses `mac allow <subject> <object> <read|write>` lines.
    pub fn parse_rule(line: &str) -> Result<MacRule, String> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["mac", "allow", s, o, m] => Ok(MacRule { subject: s.to_string(), object: o.to_string(), mode: m.parse()? }),
            _ => Err("expected `mac allow <subject> <object> <read|write>`".into()),
        }
    }
}

/// What the permission layer demands before an access to `obj`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Requirement {
    None,
    Permission(&'static str),
    /// Only an explicit per-object grant from the controlling party will do.
    ExplicitGrant,
}

/// Scoped storage: own external dir and own media need nothing; other media
/// needs the read permission, and writing it needs an explicit grant (legacy
/// apps may use the write permission instead). Non-app uids are exempt.
pub fn storage_requirement(subject: Uid, obj: &FsObject, mode: AccessMode, target_sdk: u32) -> Requirement {
    if !subject.is_app() {
        return Requirement::None;
    }
    match obj.location {
        Location::SharedStorage if obj.creator == Some(subject) => Requirement::None,
        Location::SharedStorage => match mode {
            AccessMode::Read => Requirement::Permission(READ_EXTERNAL_STORAGE),
            AccessMode::Write if target_sdk < SCOPED_STORAGE_SDK => {
                Requirement::Permission(WRITE_EXTERNAL_STORAGE)
            }
            AccessMode::Write => Requirement::ExplicitGrant,
        },
        _ => Requirement::None,
    }
}

/// Minimal description of an installed package for visibility queries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackageInfo {
    pub name: String,
    pub platform: bool,
}

/// Package visibility: everything for callers holding `QUERY_ALL_PACKAGES`
/// or targeting an older API level; otherwise the caller itself, platform
/// packages and packages named in the manifest's queries. `filter` is an
/// optional name prefix applied afterwards.
pub fn visible_packages(
    caller: &Manifest,
    holds_query_all: bool,
    installed: &[PackageInfo],
    filter: Option<&str>,
) -> Vec<String> {
    let all = holds_query_all || caller.target_sdk < PACKAGE_VISIBILITY_SDK;
    let mut out: Vec<String> = installed
        .iter()
        .filter(|p| {
            all || p.platform || p.name == caller.package || caller.queries.contains(&p.name)
        })
        .filter(|p| filter.is_none_or(|f| p.name.starts_with(f)))
        .map(|p| p.name.clone())
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Policy of a device policy controller for a work profile.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DpcPolicy {
    /// Action classes (permission names, `share`, ...) the organization vetoes.
    pub deny: BTreeSet<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uid_arithmetic() {
        assert_eq!(Aid { user_id: 0, app_id: 10000 }.uid(), Uid(10000));
        assert_eq!(Aid { user_id: 10, app_id: 10123 }.uid(), Uid(1_010_123));
        assert_eq!(Aid { user_id: 1, app_id: 10042 }.uid(), Uid(110_042));
        let u = Uid(1_010_123);
        assert_eq!((u.user_id(), u.app_id()), (10, 10123));
        assert!(u.is_app());
        assert!(!Uid::SYSTEM.is_app());
        assert!(Uid(99_123).is_isolated());
    }

    #[test]
    fn allocator_first_id_and_reuse() {
        let mut a = AppIdAllocator::default();
        assert_eq!(a.assign("com.a", None), Ok(10000));
        assert_eq!(a.assign("com.b", None), Ok(10001));
        assert_eq!(a.assign("com.a", None), Ok(10000));
        a.release("com.a");
        assert_eq!(a.assign("com.c", None), Ok(10000));
    }

    #[test]
    fn allocator_shared_uid() {
        let mut a = AppIdAllocator::default();
        let k1 = KeyId::apk("k1");
        let k2 = KeyId::apk("k2");
        let x = a.assign("com.a", Some(("shared.x", &k1))).unwrap();
        assert_eq!(a.assign("com.b", Some(("shared.x", &k1))), Ok(x));
        assert_eq!(
            a.assign("com.c", Some(("shared.x", &k2))),
            Err(SandboxError::SharedUidKeyMismatch("shared.x".into()))
        );
        assert_eq!(a.same_app_id("com.a"), vec!["com.a".to_string(), "com.b".to_string()]);
    }

    #[test]
    fn allocator_exhaustion() {
        let mut a = AppIdAllocator::default();
        for i in 0..10000 {
            a.assign(&format!("p{i}"), None).unwrap();
        }
        assert_eq!(a.assign("one.more", None), Err(SandboxError::RangeExhausted));
    }

    fn obj(owner: Uid, location: Location, mode: u16) -> FsObject {
        FsObject {
            path: "/x".into(),
            owner,
            mode,
            location,
            labels: [FsObject::default_label(location).to_string()].into(),
            creator: Some(owner),
            controller: PartyId::app("com.a"),
            storage: StorageClass::Ce,
            user_id: owner.user_id(),
            content: String::new(),
        }
    }

    #[test]
    fn dac_private_dirs() {
        let a = Uid(10000);
        let b = Uid(10001);
        for mode in [0o700, 0o751] {
            let o = obj(a, Location::AppPrivate, mode);
            assert!(dac_allows(a, &o, AccessMode::Read, false));
            assert!(!dac_allows(b, &o, AccessMode::Read, false));
            assert!(!dac_allows(b, &o, AccessMode::Write, false));
            assert!(dac_allows(b, &o, AccessMode::Read, true));
            assert!(dac_allows(Uid::ROOT, &o, AccessMode::Write, false));
        }
    }

    #[test]
    fn dac_shared_storage_is_per_user() {
        let o = obj(Uid(10000), Location::SharedStorage, 0o660);
        assert!(dac_allows(Uid(10001), &o, AccessMode::Read, false));
        assert!(!dac_allows(Uid(110_001), &o, AccessMode::Read, false));
    }

    #[test]
    fn mac_default_deny() {
        let p = MacPolicy::android_default();
        let labels: BTreeSet<String> = [LABEL_APP_DATA.to_string()].into();
        assert!(p.allows(DOMAIN_UNTRUSTED_APP, &labels, AccessMode::Read));
        assert!(!p.allows(DOMAIN_SU, &labels, AccessMode::Read));
        assert!(!p.allows(DOMAIN_ISOLATED_APP, &labels, AccessMode::Read));
        assert!(!MacPolicy::empty().allows(DOMAIN_UNTRUSTED_APP, &labels, AccessMode::Read));
        assert!(!p.allows(DOMAIN_UNTRUSTED_APP, &BTreeSet::new(), AccessMode::Read));
    }

    #[test]
    fn scoped_storage_requirements() {
        let me = Uid(10000);
        let other = Uid(10001);
        let mine = obj(me, Location::SharedStorage, 0o660);
        assert_eq!(storage_requirement(me, &mine, AccessMode::Write, 30), Requirement::None);
        assert_eq!(
            storage_requirement(other, &mine, AccessMode::Read, 30),
            Requirement::Permission(READ_EXTERNAL_STORAGE)
        );
        assert_eq!(storage_requirement(other, &mine, AccessMode::Write, 30), Requirement::ExplicitGrant);
        assert_eq!(
            storage_requirement(other, &mine, AccessMode::Write, 28),
            Requirement::Permission(WRITE_EXTERNAL_STORAGE)
        );
        assert_eq!(storage_requirement(Uid::SYSTEM, &mine, AccessMode::Read, 30), Requirement::None);
    }

    #[test]
    fn classify_paths() {
        assert_eq!(
            FsObject::classify("/data/user/10/com.a/f"),
            Some((Location::AppPrivate, 10, Some("com.a".into())))
        );
        assert_eq!(
            FsObject::classify("/storage/emulated/0/Android/data/com.a/x"),
            Some((Location::ExternalAppDir, 0, Some("com.a".into())))
        );
        assert_eq!(FsObject::classify("/storage/emulated/0/DCIM/a.jpg"), Some((Location::SharedStorage, 0, None)));
        assert_eq!(FsObject::classify("/system/etc/hosts"), Some((Location::System, 0, None)));
        assert_eq!(FsObject::classify("/proc/1"), None);
    }

    #[test]
    fn package_visibility_truth_table() {
        let installed = vec![
            PackageInfo { name: "android".into(), platform: true },
            PackageInfo { name: "com.a".into(), platform: false },
            PackageInfo { name: "com.b".into(), platform: false },
            PackageInfo { name: "com.c".into(), platform: false },
        ];
        let all: Vec<String> = installed.iter().map(|p| p.name.clone()).collect();
        for old in [false, true] {
            for holds in [false, true] {
                for declares in [false, true] {
                    let mut m = Manifest::new("com.a");
                    m.target_sdk = if old { 29 } else { 30 };
                    if declares {
                        m.queries.push("com.b".into());
                    }
                    let got = visible_packages(&m, holds, &installed, None);
                    let expected: Vec<String> = if old || holds {
                        all.clone()
                    } else if declares {
                        vec!["android".into(), "com.a".into(), "com.b".into()]
                    } else {
                        vec!["android".into(), "com.a".into()]
                    };
                    assert_eq!(got, expected, "old={old} holds={holds} declares={declares}");
                }
            }
        }
        let m = Manifest::new("com.a");
        assert_eq!(visible_packages(&m, true, &installed, Some("com.")), vec!["com.a", "com.b", "com.c"]);
    }
}
