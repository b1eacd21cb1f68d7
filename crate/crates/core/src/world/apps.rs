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


//! Packages, users, permissions and package visibility.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DeviceWorld, Package, SystemApp, UserRecord, WorldError, WorldResult};
use crate::authn::{CeStatus, Tier};
use crate::boot::{verify_apk_update, SigningLineage, UpdateDecision};
use crate::consent::{ConsentResponse, Decision};
use crate::crypto::{KeyId, DEFAULT_SCHEME};
use crate::party::{Party, PartyClass, PartyId, FOREGROUND_SERVICE, UI_FOREGROUND};
use crate::permissions::{
    consent_class, status_of, AppFacts, Manifest, PermStatus, PermissionContext, Permissions, UserResponse, QUERY_ALL_PACKAGES,
};
use crate::sandbox::{
    visible_packages, Aid, DpcPolicy, FsObject, Location, Mechanism, PackageInfo, SandboxError, StorageClass, Uid,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstallOutcome {
    pub uid: Uid,
    pub updated: bool,
    pub statuses: BTreeMap<String, PermStatus>,
}

/// Builds a [`Permissions`] view over the world's fields for `user`.
macro_rules! perms {
    ($w:expr, $pk:expr, $user:expr) => {
        Permissions {
            registry: &$w.registry,
            table: &mut $w.perms,
            consent: &mut $w.consent,
            platform_key: $pk,
            user: $user,
        }
    };
}

impl DeviceWorld {
    pub(super) fn install_system_app(&mut self, app: &SystemApp, user: u32) -> WorldResult<InstallOutcome> {
        self.install_inner(user, app.key.clone(), app.manifest.clone(), None, true, app.privileged.clone())
    }

    /// Installs (or updates) `manifest` signed by `key` for `user`.
    pub fn install(
        &mut self,
        user: u32,
        key: KeyId,
        manifest: Manifest,
        lineage: Option<SigningLineage>,
    ) -> WorldResult<InstallOutcome> {
        self.require_setup()?;
        self.install_inner(user, key, manifest, lineage, false, BTreeSet::new())
    }

    fn install_inner(
        &mut self,
        user: u32,
        key: KeyId,
        manifest: Manifest,
        lineage: Option<SigningLineage>,
        system: bool,
        privileged: BTreeSet<String>,
    ) -> WorldResult<InstallOutcome> {
        self.require_os()?;
        if !self.users.contains_key(&user) {
            return Err(WorldError::UnknownUser(user));
        }
        let name = manifest.package.clone();
        let updated = match self.packages.get(&name) {
            None => {
                self.register_app(&key, &manifest, lineage, system, privileged)?;
                false
            }
            Some(existing) => {
                let decision = verify_apk_update(&existing.key, &key, lineage.as_ref(), &DEFAULT_SCHEME)?;
                if decision == UpdateDecision::Deny {
                    return Err(WorldError::UpdateRejected(name));
                }
                let updated = existing.users.contains(&user);
                self.replace_package(&name, key, manifest, lineage)?;
                updated
            }
        };
        let users: Vec<u32> = if updated {
            self.packages[&name].users.iter().copied().collect()
        } else {
            self.packages.get_mut(&name).expect("registered").users.insert(user);
            self.create_app_dirs(&name, user);
            vec![user]
        };
        let mut statuses = BTreeMap::new();
        for u in users {
            let s = self.grant_install_time(&name, u)?;
            if u == user {
                statuses = s;
            }
        }
        Ok(InstallOutcome { uid: self.uid_of(&name, user)?, updated, statuses })
    }

    /// Creates the Developer party and app id for a new package.
    pub fn register_app(
        &mut self,
        key: &KeyId,
        manifest: &Manifest,
        lineage: Option<SigningLineage>,
        system: bool,
        privileged: BTreeSet<String>,
    ) -> WorldResult<PartyId> {
        let name = &manifest.package;
        if self.packages.contains_key(name) {
            return Err(WorldError::DuplicatePackageName(name.clone()));
        }
        if let Some(group) = &manifest.shared_uid {
            self.app_ids.check_shared(group, key)?;
        }
        self.check_declared(key, manifest)?;
        let app_id = self.app_ids.assign(name, manifest.shared_uid.as_deref().map(|g| (g, key)))?;
        self.define_declared(key, manifest);
        let party = PartyId::app(name);
        self.parties.insert(party.clone(), Party::new(party.clone(), PartyClass::Developer));
        self.consent.set_default(party.clone(), true);
        self.packages.insert(
            name.clone(),
            Package {
                manifest: manifest.clone(),
                key: key.clone(),
                lineage,
                system,
                privileged,
                app_id,
                users: BTreeSet::new(),
            },
        );
        Ok(party)
    }

    fn check_declared(&self, key: &KeyId, manifest: &Manifest) -> WorldResult<()> {
        for d in &manifest.declared {
            if let Some(existing) = self.registry.get(&d.name) {
                if existing.declarer.as_ref() != Some(key) {
                    return Err(crate::permissions::PermissionError::Duplicate(d.name.clone()).into());
                }
            }
        }
        Ok(())
    }

    fn define_declared(&mut self, key: &KeyId, manifest: &Manifest) {
        for d in &manifest.declared {
            let mut d = d.clone();
            d.declarer = Some(key.clone());
            self.registry.undefine(&d.name, key);
            let _ = self.registry.define(d);
        }
    }

    fn replace_package(
        &mut self,
        name: &str,
        key: KeyId,
        mut manifest: Manifest,
        lineage: Option<SigningLineage>,
    ) -> WorldResult<()> {
        let old = self.packages[name].clone();
        self.check_declared(&key, &manifest).or_else(|e| {
            // Permissions the old version declared may be re-declared.
            if manifest.declared.iter().all(|d| old.manifest.declared.iter().any(|o| o.name == d.name)) {
                Ok(())
            } else {
                Err(e)
            }
        })?;
        for d in &old.manifest.declared {
            self.registry.undefine(&d.name, &old.key);
        }
        manifest.shared_uid = old.manifest.shared_uid.clone();
        self.define_declared(&key, &manifest);
        let p = self.packages.get_mut(name).expect("exists");
        p.key = key;
        p.manifest = manifest;
        p.lineage = lineage;
        Ok(())
    }

    fn create_app_dirs(&mut self, name: &str, user: u32) {
        let p = &self.packages[name];
        let uid = Aid { user_id: user, app_id: p.app_id }.uid();
        let target = p.manifest.target_sdk;
        for (path, location) in [
            (FsObject::private_dir(name, user), Location::AppPrivate),
            (FsObject::external_dir(name, user), Location::ExternalAppDir),
        ] {
            self.put_object(FsObject {
                path,
                owner: uid,
                mode: FsObject::default_mode(location, target),
                location,
                labels: [FsObject::default_label(location).to_string()].into(),
                creator: Some(uid),
                controller: PartyId::app(name),
                storage: StorageClass::Ce,
                user_id: user,
                content: String::new(),
            });
        }
    }

    /// Manifest of everything requested under `name`'s uid in `user` (the
    /// union over a shared-uid group).
    fn merged_manifest(&self, name: &str, user: u32) -> Manifest {
        let p = &self.packages[name];
        let mut m = p.manifest.clone();
        let mut req: BTreeSet<String> = BTreeSet::new();
        for q in self.packages.values().filter(|q| q.app_id == p.app_id && q.users.contains(&user)) {
            req.extend(q.manifest.requested.iter().cloned());
        }
        m.requested = req.into_iter().collect();
        m
    }

    fn grant_install_time(&mut self, name: &str, user: u32) -> WorldResult<BTreeMap<String, PermStatus>> {
        let pk = self.require_os()?.platform_key.clone();
        let manifest = self.merged_manifest(name, user);
        let p = self.packages[name].clone();
        let uid = Aid { user_id: user, app_id: p.app_id }.uid();
        let facts = AppFacts { uid, signing_key: &p.key, on_system_image: p.system, privileged_allowlist: &p.privileged };
        let user_party = PartyId::user(user);
        Ok(perms!(self, &pk, &user_party).install_grant(&facts, &manifest)?)
    }

    /// Removes `name` for `user`; the last removal unregisters the package.
    pub fn uninstall(&mut self, name: &str, user: u32) -> WorldResult<()> {
        let uid = self.uid_of(name, user)?;
        let prefixes = [FsObject::private_dir(name, user), FsObject::external_dir(name, user)];
        let doomed: Vec<String> = self
            .objects
            .keys()
            .filter(|k| prefixes.iter().any(|p| *k == p || k.starts_with(&format!("{p}/"))))
            .cloned()
            .collect();
        for k in doomed {
            self.remove_object(&k);
        }
        self.packages.get_mut(name).expect("installed").users.remove(&user);
        let group_left = self.packages.values().any(|q| q.app_id == uid.app_id() && q.users.contains(&user));
        if group_left {
            let other = self
                .packages
                .iter()
                .find(|(_, q)| q.app_id == uid.app_id() && q.users.contains(&user))
                .map(|(n, _)| n.clone())
                .expect("exists");
            self.grant_install_time(&other, user)?;
        } else {
            self.perms.remove_uid(uid);
            let suffix = format!("@{}", uid.0);
            self.consent.remove_classes(|c| c.ends_with(&suffix));
            self.grants.retain(|g| g.grantee != uid);
            let prefix = format!("{}/", uid.0);
            self.keystore.retain(|k| !k.id.starts_with(&prefix));
        }
        if self.packages[name].users.is_empty() {
            let p = self.packages.remove(name).expect("exists");
            self.app_ids.release(name);
            for d in &p.manifest.declared {
                self.registry.undefine(&d.name, &p.key);
            }
            let party = PartyId::app(name);
            self.consent.forget_party(&party);
            self.grants.retain(|g| g.granter != party);
            self.parties.remove(&party);
        }
        Ok(())
    }

    fn user_ctx(&self, uid: Uid) -> PermissionContext {
        let fg = self.package_of(uid).and_then(|p| self.parties.get(&PartyId::app(&p.manifest.package)));
        PermissionContext { foreground: fg.is_some_and(Party::in_foreground) }
    }

    pub fn permission_status(&self, name: &str, user: u32, perm: &str) -> WorldResult<Option<PermStatus>> {
        let uid = self.uid_of(name, user)?;
        Ok(self.status_for(uid, perm))
    }

    fn status_for(&self, uid: Uid, perm: &str) -> Option<PermStatus> {
        status_of(&self.registry, &self.perms, &self.consent, &PartyId::user(uid.user_id()), uid, perm)
    }

    pub fn request_permission(
        &mut self,
        name: &str,
        user: u32,
        perm: &str,
        response: UserResponse,
    ) -> WorldResult<(PermStatus, bool)> {
        let uid = self.uid_of(name, user)?;
        let pk = self.require_os()?.platform_key.clone();
        let ctx = self.user_ctx(uid);
        let user_party = PartyId::user(user);
        Ok(perms!(self, &pk, &user_party).request_runtime(uid, perm, response, ctx)?)
    }

    pub fn settings_toggle(&mut self, name: &str, user: u32, perm: &str, on: bool) -> WorldResult<PermStatus> {
        let uid = self.uid_of(name, user)?;
        let pk = self.require_os()?.platform_key.clone();
        let user_party = PartyId::user(user);
        Ok(perms!(self, &pk, &user_party).settings_toggle(uid, perm, on)?)
    }

    pub fn revoke_permission(&mut self, name: &str, user: u32, perm: &str) -> WorldResult<PermStatus> {
        let uid = self.uid_of(name, user)?;
        let pk = self.require_os()?.platform_key.clone();
        let user_party = PartyId::user(user);
        Ok(perms!(self, &pk, &user_party).revoke(uid, perm)?)
    }

    pub(super) fn org_denies(&self, user: u32, class: &str) -> bool {
        let Some(org) = self.users.get(&user).and_then(|r| r.organization.as_ref()) else { return false };
        matches!(self.consent.get(org, class), Some(ConsentResponse::DenyAlways | ConsentResponse::DenyOnce))
    }

    /// Enforcement check for `perm` held by `uid`. Spends an expired
    /// one-time grant.
    pub fn check_permission(&mut self, uid: Uid, perm: &str) -> (Decision, Option<Mechanism>) {
        let Some(pk) = self.platform_key().cloned() else { return (Decision::Deny, Some(Mechanism::Permission)) };
        let ctx = self.user_ctx(uid);
        let user_party = PartyId::user(uid.user_id());
        let d = perms!(self, &pk, &user_party).check(uid, perm, ctx);
        self.org_gate(uid, perm, d)
    }

    /// Side-effect-free form of [`DeviceWorld::check_permission`].
    pub fn peek_permission(&self, uid: Uid, perm: &str) -> (Decision, Option<Mechanism>) {
        if self.os.is_none() {
            return (Decision::Deny, Some(Mechanism::Permission));
        }
        let d = self.status_for(uid, perm).map_or(Decision::Deny, |s| s.decide(self.user_ctx(uid)));
        self.org_gate(uid, perm, d)
    }

    fn org_gate(&self, uid: Uid, perm: &str, d: Decision) -> (Decision, Option<Mechanism>) {
        if d == Decision::Deny {
            (d, Some(Mechanism::Permission))
        } else if self.org_denies(uid.user_id(), perm) {
            (Decision::Deny, Some(Mechanism::Organization))
        } else {
            (Decision::Allow, None)
        }
    }

    /// Packages visible to `name` in `user`.
    pub fn query_packages(&self, name: &str, user: u32, filter: Option<&str>) -> WorldResult<Vec<String>> {
        let uid = self.uid_of(name, user)?;
        let caller = &self.packages[name].manifest;
        let holds = self.peek_permission(uid, QUERY_ALL_PACKAGES).0 == Decision::Allow;
        let installed: Vec<PackageInfo> = self
            .packages
            .iter()
            .filter(|(_, p)| p.users.contains(&user))
            .map(|(n, p)| PackageInfo { name: n.clone(), platform: p.system })
            .collect();
        Ok(visible_packages(caller, holds, &installed, filter))
    }

    /// Sets the UI state of `name`. At most one app holds `ui-foreground`;
    /// apps that end up with neither a visible activity nor a foreground
    /// service lose their one-time grants.
    pub fn set_foreground(&mut self, name: &str, ui: bool, service: Option<bool>) -> WorldResult<()> {
        let party = PartyId::app(name);
        if !self.parties.contains_key(&party) {
            return Err(WorldError::UnknownParty(party));
        }
        let mut touched = vec![party.clone()];
        if ui {
            for p in self.parties.values_mut() {
                if p.id() != &party && p.class() == PartyClass::Developer && p.state.attr(UI_FOREGROUND) {
                    p.state.attributes.insert(UI_FOREGROUND.into(), false);
                    touched.push(p.id().clone());
                }
            }
        }
        let p = self.parties.get_mut(&party).expect("checked");
        p.state.attributes.insert(UI_FOREGROUND.into(), ui);
        if let Some(s) = service {
            p.state.attributes.insert(FOREGROUND_SERVICE.into(), s);
        }
        for id in touched {
            if !self.parties[&id].in_foreground() {
                self.end_sessions(id.as_str().trim_start_matches("app:"));
            }
        }
        Ok(())
    }

    fn end_sessions(&mut self, name: &str) {
        let Some(pk) = self.platform_key().cloned() else { return };
        let Some(p) = self.packages.get(name) else { return };
        let uids: Vec<Uid> = p.users.iter().map(|u| Aid { user_id: *u, app_id: p.app_id }.uid()).collect();
        for uid in uids {
            let user_party = PartyId::user(uid.user_id());
            perms!(self, &pk, &user_party).end_session(uid);
        }
    }

    /// Marks a user without a lockscreen credential as unlocked.
    pub(super) fn auto_unlock(&mut self, user: u32) {
        let secret = *self.hardware.trh.secret();
        let clock = self.clock;
        let Some(rec) = self.users.get_mut(&user) else { return };
        if rec.has_primary() {
            return;
        }
        if self.storage.unlock_ce(&secret, user, "") == CeStatus::Available {
            rec.auth.unlocked_since_boot = true;
            rec.auth.last_primary_success = Some(clock);
            rec.auth.last_any_success = Some(clock);
            rec.auth.current_unlock_tier = Some(Tier::Primary);
        }
    }

    fn new_user(&mut self, user: u32, rec: UserRecord) -> WorldResult<()> {
        self.require_os()?;
        if self.users.contains_key(&user) {
            return Err(WorldError::UserExists(user));
        }
        self.add_user_record(user, rec);
        self.auto_unlock(user);
        let apps = self.require_os()?.apps.clone();
        for app in &apps {
            self.install_system_app(app, user)?;
        }
        Ok(())
    }

    /// Adds a secondary user.
    pub fn add_user(&mut self, user: u32) -> WorldResult<()> {
        self.new_user(user, UserRecord::default())
    }

    /// Creates a work profile of `parent` managed by the DPC app `dpc`.
    pub fn create_work_profile(&mut self, dpc: &str, parent: u32, policy: &DpcPolicy) -> WorldResult<u32> {
        self.uid_of(dpc, parent)?;
        if self.users.values().any(|r| r.profile_of == Some(parent)) {
            return Err(SandboxError::ProfileExists(parent).into());
        }
        let id = (10..).find(|u| !self.users.contains_key(u)).expect("free user id");
        let org = PartyId::org(dpc);
        self.new_user(id, UserRecord { profile_of: Some(parent), organization: Some(org.clone()), ..Default::default() })?;
        self.parties.insert(org.clone(), Party::new(org.clone(), PartyClass::Organization));
        self.consent.set_default(org.clone(), true);
        for class in &policy.deny {
            self.consent.record(org.clone(), class.clone(), ConsentResponse::DenyAlways);
        }
        let p = &self.packages[dpc];
        let (key, manifest) = (p.key.clone(), p.manifest.clone());
        self.install(id, key, manifest, None)?;
        Ok(id)
    }

    /// Removes a secondary user or profile with all of its data.
    pub fn remove_user(&mut self, user: u32) -> WorldResult<()> {
        if user == 0 {
            self.factory_reset();
            return Ok(());
        }
        let rec = self.users.get(&user).cloned().ok_or(WorldError::UnknownUser(user))?;
        for profile in self.users.iter().filter(|(_, r)| r.profile_of == Some(user)).map(|(u, _)| *u).collect::<Vec<_>>() {
            self.remove_user(profile)?;
        }
        let installed: Vec<String> =
            self.packages.iter().filter(|(_, p)| p.users.contains(&user)).map(|(n, _)| n.clone()).collect();
        for name in installed {
            self.uninstall(&name, user)?;
        }
        let left: Vec<String> = self.objects.values().filter(|o| o.user_id == user && o.location != Location::System).map(|o| o.path.clone()).collect();
        for path in left {
            self.remove_object(&path);
        }
        let party = PartyId::user(user);
        self.consent.forget_party(&party);
        self.parties.remove(&party);
        if let Some(org) = rec.organization {
            self.consent.forget_party(&org);
            self.grants.retain(|g| g.granter != org);
            self.parties.remove(&org);
        }
        self.grants.retain(|g| g.grantee.user_id() != user && g.granter != party);
        self.users.remove(&user);
        self.storage.remove_user(user);
        self.keystore.remove_user(user);
        Ok(())
    }

    /// Resets a party's state: uninstall for apps, user removal for users
    /// and organizations, factory reset for the platform and user 0.
    pub fn reset_party(&mut self, party: &PartyId) -> WorldResult<()> {
        let p = self.parties.get(party).ok_or_else(|| WorldError::UnknownParty(party.clone()))?;
        match p.class() {
            PartyClass::Platform => self.factory_reset(),
            PartyClass::User => {
                let user = party.as_str().trim_start_matches("user:").parse().map_err(|_| WorldError::UnknownParty(party.clone()))?;
                self.remove_user(user)?;
            }
            PartyClass::Developer => {
                let name = party.as_str().trim_start_matches("app:").to_string();
                let users: Vec<u32> = self.packages.get(&name).map(|p| p.users.iter().copied().collect()).unwrap_or_default();
                for u in users {
                    self.uninstall(&name, u)?;
                }
            }
            PartyClass::Organization => {
                let profile = self.users.iter().find(|(_, r)| r.organization.as_ref() == Some(party)).map(|(u, _)| *u);
                match profile {
                    Some(u) => self.remove_user(u)?,
                    None => {
                        self.consent.forget_party(party);
                        self.parties.remove(party);
                    }
                }
            }
        }
        Ok(())
    }

    /// Consent classes the User party holds about `uid`'s permissions.
    pub fn user_permission_entries(&self, uid: Uid) -> Vec<(String, ConsentResponse)> {
        let suffix = format!("@{}", uid.0);
        self.consent
            .entries_of(&PartyId::user(uid.user_id()))
            .filter(|(c, _)| c.starts_with("perm:") && c.ends_with(&suffix))
            .map(|(c, r)| (c.to_string(), r))
            .collect()
    }

    pub fn consent_class_of(perm: &str, uid: Uid) -> String {
        consent_class(perm, uid)
    }
}
