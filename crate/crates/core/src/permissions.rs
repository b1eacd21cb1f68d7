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

//! Android permissions: protection levels, the registry, install-time grants
//! and the run-time request flow.
//!
//! Permissions are the user's consent channel. Everything the user decides
//! (run-time and special access permissions) is stored as a User-party entry
//! in the [`ConsentStore`] under the class `perm:<name>@<uid>`; the status of
//! such a permission is a view over that entry:
//!
//! | consent entry          | status            |
//! |------------------------|-------------------|
//! | `allow-always`         | granted           |
//! | `allow-in-foreground`  | foreground-only   |
//! | `allow-once`           | one-time          |
//! | `deny-always`          | denied            |
//! | none                   | ask (dangerous) / denied (special) |
//!
//! Install-time permissions (normal, signature, privileged) are decided by the
//! platform and live in [`PermissionTable`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consent::{ConsentResponse, ConsentStore, Decision};
use crate::crypto::KeyId;
use crate::party::PartyId;
use crate::sandbox::Uid;

pub const QUERY_ALL_PACKAGES: &str = "android.permission.QUERY_ALL_PACKAGES";
pub const READ_EXTERNAL_STORAGE: &str = "android.permission.READ_EXTERNAL_STORAGE";
pub const WRITE_EXTERNAL_STORAGE: &str = "android.permission.WRITE_EXTERNAL_STORAGE";

/// Registry shipped on the default system image.
pub const DEFAULT_REGISTRY: &str = "\
# audit-only
perm android.permission.INTERNET normal
perm android.permission.VIBRATE normal
perm android.permission.QUERY_ALL_PACKAGES normal
# runtime
perm android.permission.ACCESS_FINE_LOCATION dangerous group=LOCATION
perm android.permission.ACCESS_COARSE_LOCATION dangerous group=LOCATION
perm android.permission.CAMERA dangerous group=CAMERA
perm android.permission.RECORD_AUDIO dangerous group=MICROPHONE
perm android.permission.READ_CONTACTS dangerous group=CONTACTS
perm android.permission.WRITE_CONTACTS dangerous group=CONTACTS
perm android.permission.READ_EXTERNAL_STORAGE dangerous group=STORAGE
perm android.permission.WRITE_EXTERNAL_STORAGE dangerous group=STORAGE
perm android.permission.READ_SMS dangerous group=SMS
# special access
perm android.permission.SYSTEM_ALERT_WINDOW special
perm android.permission.BIND_NOTIFICATION_LISTENER_SERVICE special
perm android.permission.REQUEST_INSTALL_PACKAGES special
perm android.permission.BIND_DEVICE_ADMIN special
# privileged
perm android.permission.READ_PRIVILEGED_PHONE_STATE privileged
perm android.permission.BLUETOOTH_PRIVILEGED signature flags=privileged
perm android.permission.WRITE_SECURE_SETTINGS signature flags=privileged
# signature
perm android.permission.CONNECTIVITY_INTERNAL signature
";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtectionLevel {
    Normal,
    Dangerous,
    Special,
    Privileged,
    Signature,
}

impl ProtectionLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtectionLevel::Normal => "normal",
            ProtectionLevel::Dangerous => "dangerous",
            ProtectionLevel::Special => "special",
            ProtectionLevel::Privileged => "privileged",
            ProtectionLevel::Signature => "signature",
        }
    }

    /// Whether the user decides this permission after install.
    pub fn user_controlled(self) -> bool {
        matches!(self, ProtectionLevel::Dangerous | ProtectionLevel::Special)
    }
}

impl FromStr for ProtectionLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "normal" => ProtectionLevel::Normal,
            "dangerous" => ProtectionLevel::Dangerous,
            "special" => ProtectionLevel::Special,
            "privileged" => ProtectionLevel::Privileged,
            "signature" => ProtectionLevel::Signature,
            _ => return Err(format!("unknown protection level `{s}`")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtectionFlag {
    /// Also grantable to allowlisted privileged system apps.
    Privileged,
}

impl FromStr for ProtectionFlag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "privileged" => Ok(ProtectionFlag::Privileged),
            _ => Err(format!("unknown protection flag `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionDef {
    pub name: String,
    pub level: ProtectionLevel,
    pub flags: BTreeSet<ProtectionFlag>,
    pub group: Option<String>,
    /// Key of the declaring component; `None` for platform permissions.
    pub declarer: Option<KeyId>,
}

impl PermissionDef {
    pub fn new(name: impl Into<String>, level: ProtectionLevel) -> Self {
        Self { name: name.into(), level, flags: BTreeSet::new(), group: None, declarer: None }
    }

    /// Parses one `perm <name> <level> [flags=<f,...>] [group=<g>]` line.
    pub fn parse_line(line: &str) -> Result<Self, String> {
        let mut it = line.split_whitespace();
        if it.next() != Some("perm") {
            return Err("expected `perm`".into());
        }
        let name = it.next().ok_or("missing permission name")?;
        let level: ProtectionLevel = it.next().ok_or("missing protection level")?.parse()?;
        let mut def = PermissionDef::new(name, level);
        for tok in it {
            match tok.split_once('=') {
                Some(("flags", v)) => {
                    for f in v.split(',').filter(|f| !f.is_empty()) {
                        def.flags.insert(f.parse()?);
                    }
                }
                Some(("group", v)) if !v.is_empty() => def.group = Some(v.to_string()),
                _ => return Err(format!("unexpected token `{tok}`")),
            }
        }
        if def.group.is_some() && level != ProtectionLevel::Dangerous {
            return Err(format!("group on non-dangerous permission `{name}`"));
        }
        Ok(def)
    }
}

impl fmt::Display for PermissionDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "perm {} {}", self.name, self.level.as_str())?;
        if !self.flags.is_empty() {
            let flags: Vec<_> = self.flags.iter().map(|_| "privileged").collect();
            write!(f, " flags={}", flags.join(","))?;
        }
        if let Some(g) = &self.group {
            write!(f, " group={g}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermissionError {
    #[error("registry line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("permission `{0}` defined twice")]
    Duplicate(String),
    #[error("unknown permission `{0}`")]
    UnknownPermission(String),
    #[error("`{0}` is not a runtime permission")]
    NotRequestable(String),
    #[error("`{0}` was not requested in the manifest")]
    NotRequested(String),
    #[error("permission requests are only allowed from the foreground")]
    BackgroundRequest,
    #[error("`{0}` cannot be revoked by the user")]
    NotUserRevocable(String),
    #[error("`{0}` can only be granted from settings")]
    SettingsOnly(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionRegistry {
    defs: BTreeMap<String, PermissionDef>,
}

impl PermissionRegistry {
    pub fn android_default() -> Self {
        Self::parse(DEFAULT_REGISTRY).expect("built-in registry parses")
    }

    /// Parses the declarative registry format. Blank lines and `#` comments
    /// are ignored.
    pub fn parse(text: &str) -> Result<Self, PermissionError> {
        let mut reg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let def = PermissionDef::parse_line(line)
                .map_err(|msg| PermissionError::Parse { line: i + 1, msg })?;
            reg.define(def)?;
        }
        Ok(reg)
    }

    pub fn define(&mut self, def: PermissionDef) -> Result<(), PermissionError> {
        if self.defs.contains_key(&def.name) {
            return Err(PermissionError::Duplicate(def.name));
        }
        self.defs.insert(def.name.clone(), def);
        Ok(())
    }

    /// Removes `name` if `key` declared it.
    pub fn undefine(&mut self, name: &str, key: &KeyId) {
        if self.defs.get(name).is_some_and(|d| d.declarer.as_ref() == Some(key)) {
            self.defs.remove(name);
        }
    }

    pub fn undefine_declared_by(&mut self, key: &KeyId) {
        self.defs.retain(|_, d| d.declarer.as_ref() != Some(key));
    }

    pub fn get(&self, name: &str) -> Option<&PermissionDef> {
        self.defs.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PermissionDef> {
        self.defs.values()
    }

    pub fn to_text(&self) -> String {
        self.defs.values().map(|d| format!("{d}\n")).collect()
    }
}

/// Static declaration of an app.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub package: String,
    pub requested: Vec<String>,
    pub declared: Vec<PermissionDef>,
    pub target_sdk: u32,
    pub shared_uid: Option<String>,
    pub debuggable: bool,
    /// Packages this app declares it interacts with (package visibility).
    pub queries: Vec<String>,
}

impl Manifest {
    pub fn new(package: impl Into<String>) -> Self {
        Self {
            package: package.into(),
            requested: Vec::new(),
            declared: Vec::new(),
            target_sdk: 30,
            shared_uid: None,
            debuggable: false,
            queries: Vec::new(),
        }
    }

    pub fn requests(&self, perm: &str) -> bool {
        self.requested.iter().any(|p| p == perm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PermStatus {
    Granted,
    Denied,
    Ask,
    ForegroundOnly,
    OneTime,
}

impl PermStatus {
    pub const ALL: [PermStatus; 5] = [
        PermStatus::Granted,
        PermStatus::Denied,
        PermStatus::Ask,
        PermStatus::ForegroundOnly,
        PermStatus::OneTime,
    ];

    fn from_consent(r: Option<ConsentResponse>, level: ProtectionLevel) -> Self {
        match r {
            Some(ConsentResponse::AllowAlways) => PermStatus::Granted,
            Some(ConsentResponse::AllowInForeground) => PermStatus::ForegroundOnly,
            Some(ConsentResponse::AllowOnce) => PermStatus::OneTime,
            Some(ConsentResponse::DenyAlways) => PermStatus::Denied,
            Some(ConsentResponse::DenyOnce) | None => {
                if level == ProtectionLevel::Special {
                    PermStatus::Denied
                } else {
                    PermStatus::Ask
                }
            }
        }
    }

    /// Decision for a check made in `ctx`. One-time grants are decided here as
    /// well; spending them is the caller's job.
    pub fn decide(self, ctx: PermissionContext) -> Decision {
        match self {
            PermStatus::Granted => Decision::Allow,
            PermStatus::ForegroundOnly | PermStatus::OneTime if ctx.foreground => Decision::Allow,
            _ => Decision::Deny,
        }
    }
}

impl fmt::Display for PermStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PermStatus::Granted => "granted",
            PermStatus::Denied => "denied",
            PermStatus::Ask => "ask",
            PermStatus::ForegroundOnly => "foreground-only",
            PermStatus::OneTime => "one-time",
        })
    }
}

/// Run-time context of the app a check is made for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionContext {
    /// Visible activity or foreground service.
    pub foreground: bool,
}

impl PermissionContext {
    pub const FOREGROUND: Self = Self { foreground: true };
    pub const BACKGROUND: Self = Self { foreground: false };
}

/// Answer to a run-time permission prompt.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UserResponse {
    Allow,
    AllowForegroundOnly,
    AllowOneTime,
    Deny,
    DenyAlways,
}

impl UserResponse {
    fn consent(self) -> Option<ConsentResponse> {
        match self {
            UserResponse::Allow => Some(ConsentResponse::AllowAlways),
            UserResponse::AllowForegroundOnly => Some(ConsentResponse::AllowInForeground),
            UserResponse::AllowOneTime => Some(ConsentResponse::AllowOnce),
            UserResponse::Deny => None,
            UserResponse::DenyAlways => Some(ConsentResponse::DenyAlways),
        }
    }
}

impl FromStr for UserResponse {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "allow" => UserResponse::Allow,
            "allow-foreground-only" => UserResponse::AllowForegroundOnly,
            "allow-one-time" => UserResponse::AllowOneTime,
            "deny" => UserResponse::Deny,
            "deny-always" => UserResponse::DenyAlways,
            _ => return Err(format!("unknown permission response `{s}`")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Holding {
    Install(bool),
    User,
}

/// Requested permissions per uid, with install-time decisions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionTable {
    by_uid: BTreeMap<Uid, BTreeMap<String, Holding>>,
}

impl PermissionTable {
    pub fn remove_uid(&mut self, uid: Uid) {
        self.by_uid.remove(&uid);
    }

    pub fn uids(&self) -> impl Iterator<Item = Uid> + '_ {
        self.by_uid.keys().copied()
    }

    pub fn requested(&self, uid: Uid) -> impl Iterator<Item = &str> {
        self.by_uid.get(&uid).into_iter().flat_map(|m| m.keys().map(String::as_str))
    }

    pub fn is_empty(&self) -> bool {
        self.by_uid.is_empty()
    }
}

/// Consent class under which the user's decision about `perm` for `uid` lives.
pub fn consent_class(perm: &str, uid: Uid) -> String {
    format!("perm:{perm}@{}", uid.0)
}

/// Facts about the installing app that decide install-time grants.
#[derive(Clone, Copy, Debug)]
pub struct AppFacts<'a> {
    pub uid: Uid,
    pub signing_key: &'a KeyId,
    pub on_system_image: bool,
    /// Privileged permissions allowlisted for this app in the system image.
    pub privileged_allowlist: &'a BTreeSet<String>,
}

/// Whether the platform grants `def` at install time.
pub fn install_time_grant(def: &PermissionDef, app: &AppFacts<'_>, platform_key: &KeyId) -> bool {
    let privileged_ok = app.on_system_image && app.privileged_allowlist.contains(&def.name);
    match def.level {
        ProtectionLevel::Normal => true,
        ProtectionLevel::Dangerous | ProtectionLevel::Special => false,
        ProtectionLevel::Privileged => privileged_ok,
        ProtectionLevel::Signature => {
            let declarer = def.declarer.as_ref().unwrap_or(platform_key);
            app.signing_key == declarer
                || (def.flags.contains(&ProtectionFlag::Privileged) && privileged_ok)
        }
    }
}

/// Mutable view over the permission state of one device.
pub struct Permissions<'a> {
    pub registry: &'a PermissionRegistry,
    pub table: &'a mut PermissionTable,
    pub consent: &'a mut ConsentStore,
    pub platform_key: &'a KeyId,
    /// User party for the uid's user.
    pub user: &'a PartyId,
}

impl Permissions<'_> {
    fn def(&self, perm: &str) -> Result<&PermissionDef, PermissionError> {
        self.registry.get(perm).ok_or_else(|| PermissionError::UnknownPermission(perm.into()))
    }

    /// Records install-time decisions for every requested permission.
    ///
    /// Normal permissions are granted, dangerous ones start at ask (or inherit
    /// the status of an already decided group member), special ones at denied.
    pub fn install_grant(
        &mut self,
        app: &AppFacts<'_>,
        manifest: &Manifest,
    ) -> Result<BTreeMap<String, PermStatus>, PermissionError> {
        for p in &manifest.requested {
            self.def(p)?;
        }
        let mut holdings = BTreeMap::new();
        for p in &manifest.requested {
            let def = self.def(p)?;
            let h = if def.level.user_controlled() {
                Holding::User
            } else {
                Holding::Install(install_time_grant(def, app, self.platform_key))
            };
            holdings.insert(p.clone(), h);
        }
        let old = self.table.by_uid.insert(app.uid, holdings).unwrap_or_default();

        // New members of a group inherit the group's status.
        for p in &manifest.requested {
            let def = self.def(p)?.clone();
            if def.level != ProtectionLevel::Dangerous || old.contains_key(p) {
                continue;
            }
            let Some(group) = &def.group else { continue };
            let sibling = manifest
                .requested
                .iter()
                .filter(|q| *q != p && old.contains_key(*q))
                .find(|q| self.registry.get(q).and_then(|d| d.group.as_ref()) == Some(group));
            if let Some(q) = sibling {
                match self.consent.get(self.user, &consent_class(q, app.uid)) {
                    Some(r) => self.consent.record(self.user.clone(), consent_class(p, app.uid), r),
                    None => {
                        self.consent.remove(self.user, &consent_class(p, app.uid));
                    }
                }
            }
        }
        // Dropped permissions lose their user decisions.
        for p in old.keys().filter(|p| !manifest.requests(p)) {
            self.consent.remove(self.user, &consent_class(p, app.uid));
        }

        Ok(manifest
            .requested
            .iter()
            .map(|p| (p.clone(), self.status(app.uid, p).expect("just recorded")))
            .collect())
    }

    /// Current status, or `None` if the uid does not hold the permission at
    /// all (not requested or unknown).
    pub fn status(&self, uid: Uid, perm: &str) -> Option<PermStatus> {
        status_of(self.registry, self.table, self.consent, self.user, uid, perm)
    }

    fn group_members(&self, uid: Uid, perm: &str) -> Vec<String> {
        let group = self.registry.get(perm).and_then(|d| d.group.clone());
        let Some(group) = group else { return vec![perm.to_string()] };
        self.table
            .requested(uid)
            .filter(|q| {
                self.registry.get(q).is_some_and(|d| {
                    d.level == ProtectionLevel::Dangerous && d.group.as_ref() == Some(&group)
                })
            })
            .map(str::to_string)
            .collect()
    }

    fn set_group(&mut self, uid: Uid, perm: &str, r: Option<ConsentResponse>) {
        for q in self.group_members(uid, perm) {
            let class = consent_class(&q, uid);
            match r {
                Some(r) => self.consent.record(self.user.clone(), class, r),
                None => {
                    self.consent.remove(self.user, &class);
                }
            }
        }
    }

    /// Handles a run-time prompt for `perm`. Returns the new status and whether
    /// a prompt was actually shown (granted and deny-always suppress it).
    pub fn request_runtime(
        &mut self,
        uid: Uid,
        perm: &str,
        response: UserResponse,
        ctx: PermissionContext,
    ) -> Result<(PermStatus, bool), PermissionError> {
        let def = self.def(perm)?;
        match def.level {
            ProtectionLevel::Dangerous => {}
            ProtectionLevel::Special => return Err(PermissionError::SettingsOnly(perm.into())),
            _ => return Err(PermissionError::NotRequestable(perm.into())),
        }
        let current =
            self.status(uid, perm).ok_or_else(|| PermissionError::NotRequested(perm.into()))?;
        if !ctx.foreground {
            return Err(PermissionError::BackgroundRequest);
        }
        if matches!(current, PermStatus::Granted | PermStatus::Denied) {
            return Ok((current, false));
        }
        self.set_group(uid, perm, response.consent());
        Ok((self.status(uid, perm).expect("requested"), true))
    }

    /// Settings switch for special access and run-time permissions.
    pub fn settings_toggle(&mut self, uid: Uid, perm: &str, on: bool) -> Result<PermStatus, PermissionError> {
        let def = self.def(perm)?;
        if !def.level.user_controlled() {
            return Err(PermissionError::NotUserRevocable(perm.into()));
        }
        self.status(uid, perm).ok_or_else(|| PermissionError::NotRequested(perm.into()))?;
        if on {
            self.set_group(uid, perm, Some(ConsentResponse::AllowAlways));
        } else {
            self.set_group(uid, perm, None);
        }
        Ok(self.status(uid, perm).expect("requested"))
    }

    /// User revocation: dangerous back to ask, special back to denied.
    pub fn revoke(&mut self, uid: Uid, perm: &str) -> Result<PermStatus, PermissionError> {
        let def = self.def(perm)?;
        if !def.level.user_controlled() {
            return Err(PermissionError::NotUserRevocable(perm.into()));
        }
        self.settings_toggle(uid, perm, false)
    }

    /// Enforcement point used by data and service providers.
    ///
    /// A one-time grant checked outside the foreground has expired: the check
    /// denies and the grant is spent.
    pub fn check(&mut self, uid: Uid, perm: &str, ctx: PermissionContext) -> Decision {
        let Some(status) = self.status(uid, perm) else { return Decision::Deny };
        let d = status.decide(ctx);
        if status == PermStatus::OneTime && !ctx.foreground {
            self.set_group(uid, perm, None);
        }
        d
    }

    /// The app left the foreground with no foreground service: one-time
    /// grants of `uid` end.
    pub fn end_session(&mut self, uid: Uid) {
        let one_time: Vec<String> = self
            .table
            .requested(uid)
            .filter(|p| self.status(uid, p) == Some(PermStatus::OneTime))
            .map(str::to_string)
            .collect();
        for p in one_time {
            self.consent.remove(self.user, &consent_class(&p, uid));
        }
    }
}

/// Read-only form of [`Permissions::status`].
pub fn status_of(
    registry: &PermissionRegistry,
    table: &PermissionTable,
    consent: &ConsentStore,
    user: &PartyId,
    uid: Uid,
    perm: &str,
) -> Option<PermStatus> {
    let h = table.by_uid.get(&uid)?.get(perm)?;
    Some(match h {
        Holding::Install(true) => PermStatus::Granted,
        Holding::Install(false) => PermStatus::Denied,
        Holding::User => {
            let level = registry.get(perm)?.level;
            PermStatus::from_consent(consent.get(user, &consent_class(perm, uid)), level)
        }
    })
}

/// Drops every one-time grant on the device (reboot).
pub fn expire_all_one_time(consent: &mut ConsentStore, users: &[PartyId]) {
    for u in users {
        let spent: Vec<String> = consent
            .entries_of(u)
            .filter(|(c, r)| c.starts_with("perm:") && *r == ConsentResponse::AllowOnce)
            .map(|(c, _)| c.to_string())
            .collect();
        for c in spent {
            consent.remove(u, &c);
        }
    }
}
