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


//! Filesystem access, object creation and consent-gated sharing.

use serde::{Deserialize, Serialize};

use super::{DeviceWorld, WorldError, WorldResult};
use crate::authn::CeStatus;
use crate::consent::{evaluate_consent, AccessMode, AccessScope, Action, Decision, Responder};
use crate::party::PartyId;
use crate::sandbox::{
    dac_allows, storage_requirement, FsObject, Location, Mechanism, Requirement, StorageClass, Uid, AID_SYSTEM,
    DOMAIN_ISOLATED_APP, DOMAIN_PLATFORM_APP, DOMAIN_PRIV_APP, DOMAIN_SU, DOMAIN_SYSTEM_SERVER, DOMAIN_UNTRUSTED_APP,
};

/// An explicit per-object grant issued by the object's controlling party.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScopeGrant {
    pub grantee: Uid,
    pub object: String,
    pub mode: AccessMode,
    pub granter: PartyId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessDecision {
    pub decision: Decision,
    /// Layer that denied, if any.
    pub mechanism: Option<Mechanism>,
    pub via_grant: bool,
}

impl AccessDecision {
    fn deny(m: Mechanism) -> Self {
        Self { decision: Decision::Deny, mechanism: Some(m), via_grant: false }
    }
}

enum Pending {
    Done(AccessDecision),
    Permission(&'static str, bool),
}

impl DeviceWorld {
    pub(super) fn put_object(&mut self, o: FsObject) {
        if let Some(old) = self.objects.get(&o.path) {
            let prev = old.controller.clone();
            if let Some(p) = self.parties.get_mut(&prev) {
                p.state.objects.remove(&o.path);
            }
        }
        if let Some(p) = self.parties.get_mut(&o.controller) {
            p.state.objects.insert(o.path.clone());
        }
        self.objects.insert(o.path.clone(), o);
    }

    pub(super) fn remove_object(&mut self, path: &str) {
        if let Some(o) = self.objects.remove(path) {
            if let Some(p) = self.parties.get_mut(&o.controller) {
                p.state.objects.remove(path);
            }
            self.grants.retain(|g| g.object != path);
        }
    }

    pub fn has_grant(&self, uid: Uid, path: &str, mode: AccessMode) -> bool {
        self.grants.iter().any(|g| g.grantee == uid && g.object == path && g.mode == mode)
    }

    /// SELinux domain the process running as `uid` is placed in.
    pub fn domain_of(&self, uid: Uid) -> &'static str {
        if uid == Uid::ROOT {
            DOMAIN_SU
        } else if uid.app_id() == AID_SYSTEM {
            DOMAIN_SYSTEM_SERVER
        } else if uid.is_isolated() {
            DOMAIN_ISOLATED_APP
        } else {
            match self.package_of(uid) {
                Some(p) if p.system && !p.privileged.is_empty() => DOMAIN_PRIV_APP,
                Some(p) if self.platform_key() == Some(&p.key) => DOMAIN_PLATFORM_APP,
                _ => DOMAIN_UNTRUSTED_APP,
            }
        }
    }

    fn evaluate(&self, subject: Uid, path: &str, mode: AccessMode) -> WorldResult<Pending> {
        self.require_os()?;
        let obj = self.objects.get(path).ok_or_else(|| WorldError::NoSuchObject(path.into()))?;
        if obj.storage == StorageClass::Ce && self.storage.ce_status(obj.user_id) != CeStatus::Available {
            return Ok(Pending::Done(AccessDecision::deny(Mechanism::Encryption)));
        }
        let granted = self.has_grant(subject, path, mode);
        let rooted = subject == Uid::ROOT && self.kernel_compromised;
        if obj.location == Location::System && mode == AccessMode::Write && !rooted {
            return Ok(Pending::Done(AccessDecision::deny(Mechanism::Dac)));
        }
        if !dac_allows(subject, obj, mode, granted) {
            return Ok(Pending::Done(AccessDecision::deny(Mechanism::Dac)));
        }
        if !rooted && !self.mac.allows(self.domain_of(subject), &obj.labels, mode) {
            return Ok(Pending::Done(AccessDecision::deny(Mechanism::Mac)));
        }
        let target = self.package_of(subject).map_or(u32::MAX, |p| p.manifest.target_sdk);
        Ok(match storage_requirement(subject, obj, mode, target) {
            Requirement::None => {
                Pending::Done(AccessDecision { decision: Decision::Allow, mechanism: None, via_grant: granted })
            }
            _ if granted => {
                Pending::Done(AccessDecision { decision: Decision::Allow, mechanism: None, via_grant: true })
            }
            Requirement::ExplicitGrant => Pending::Done(AccessDecision::deny(Mechanism::Permission)),
            Requirement::Permission(p) => Pending::Permission(p, granted),
        })
    }

    fn finish(d: (Decision, Option<Mechanism>), via_grant: bool) -> AccessDecision {
        AccessDecision { decision: d.0, mechanism: d.1, via_grant }
    }

    /// Decides an access without changing any state.
    pub fn check_access(&self, subject: Uid, path: &str, mode: AccessMode) -> WorldResult<AccessDecision> {
        Ok(match self.evaluate(subject, path, mode)? {
            Pending::Done(d) => d,
            Pending::Permission(p, g) => Self::finish(self.peek_permission(subject, p), g),
        })
    }

    /// Performs an access; a background use spends a one-time permission.
    pub fn access(&mut self, subject: Uid, path: &str, mode: AccessMode) -> WorldResult<AccessDecision> {
        Ok(match self.evaluate(subject, path, mode)? {
            Pending::Done(d) => d,
            Pending::Permission(p, g) => Self::finish(self.check_permission(subject, p), g),
        })
    }

    /// Writes `content` to `path` as `subject`, creating the object if needed.
    /// New objects in shared storage are controlled by the user; objects in
    /// app directories by the app.
    pub fn create(&mut self, subject: Uid, path: &str, content: &str) -> WorldResult<AccessDecision> {
        self.require_os()?;
        if self.objects.contains_key(path) {
            let d = self.access(subject, path, AccessMode::Write)?;
            if d.decision == Decision::Allow {
                self.objects.get_mut(path).expect("exists").content = content.to_string();
            }
            return Ok(d);
        }
        let (location, user, pkg) = FsObject::classify(path).ok_or_else(|| WorldError::InvalidPath(path.into()))?;
        if location == Location::System {
            return Ok(AccessDecision::deny(Mechanism::Dac));
        }
        if self.storage.ce_status(user) != CeStatus::Available {
            return Ok(AccessDecision::deny(Mechanism::Encryption));
        }
        let rooted = subject == Uid::ROOT && self.kernel_compromised;
        let own = |w: &Self, pkg: &str| {
            w.packages.get(pkg).is_some_and(|p| p.users.contains(&user) && subject == w.uid_of(pkg, user).unwrap())
        };
        let allowed = rooted
            || match &pkg {
                Some(p) => own(self, p),
                None => subject.is_app() && subject.user_id() == user,
            };
        if !allowed {
            return Ok(AccessDecision::deny(Mechanism::Dac));
        }
        let domain = self.domain_of(subject);
        let label = FsObject::default_label(location);
        if !rooted && !self.mac.allows(domain, &[label.to_string()].into(), AccessMode::Write) {
            return Ok(AccessDecision::deny(Mechanism::Mac));
        }
        let controller = match &pkg {
            Some(p) if self.packages.contains_key(p) => PartyId::app(p),
            _ => PartyId::user(user),
        };
        let target = self.package_of(subject).map_or(u32::MAX, |p| p.manifest.target_sdk);
        self.put_object(FsObject {
            path: path.to_string(),
            owner: subject,
            mode: FsObject::default_mode(location, target),
            location,
            labels: [label.to_string()].into(),
            creator: Some(subject),
            controller,
            storage: StorageClass::Ce,
            user_id: user,
            content: content.to_string(),
        });
        Ok(AccessDecision { decision: Decision::Allow, mechanism: None, via_grant: false })
    }

    /// The action in which `subject_pkg` (for `user`) gains `mode` on `path`:
    /// the user, the platform, the organization of a work profile, the
    /// subject app and any further apps in `others`.
    pub fn consent_action(
        &self,
        class: &str,
        user: u32,
        subject_pkg: &str,
        others: &[&str],
        path: &str,
        mode: AccessMode,
    ) -> WorldResult<Action> {
        let rec = self.users.get(&user).ok_or(WorldError::UnknownUser(user))?;
        let subject = PartyId::app(subject_pkg);
        let mut parties: std::collections::BTreeSet<PartyId> =
            [PartyId::user(user), PartyId::platform(), subject.clone()].into();
        parties.extend(others.iter().map(|p| PartyId::app(p)));
        parties.extend(rec.organization.clone());
        Ok(Action {
            id: format!("{class}:{path}->{subject_pkg}"),
            class: class.to_string(),
            parties,
            subject,
            scope: AccessScope { object: Some(path.to_string()), modes: [mode].into() },
        })
    }

    /// Runs consent for `action` and, on allow, issues the grant of its
    /// scope from the object's controller to the subject app.
    pub fn consent_and_grant(
        &mut self,
        action: &Action,
        user: u32,
        responder: Option<&mut dyn Responder>,
    ) -> WorldResult<AccessScope> {
        action.validate(self)?;
        let mut store = std::mem::take(&mut self.consent);
        let outcome = evaluate_consent(action, &mut store, self, responder);
        self.consent = store;
        let outcome = outcome?;
        if let Some(party) = outcome.veto() {
            return Err(WorldError::Vetoed { action: action.id.clone(), party: party.clone() });
        }
        let pkg = action.subject.as_str().trim_start_matches("app:");
        let grantee = self.uid_of(pkg, user)?;
        let obj = action.scope.object.as_deref().unwrap_or_default();
        let controller = match self.objects.get(obj) {
            Some(o) => o.controller.clone(),
            None => return Ok(AccessScope::empty()),
        };
        self.grant_scope(&controller, grantee, &action.scope, action)
    }

    /// Issues `scope` from `granter` to `grantee`. The scope is empty when the
    /// object is not in the granter's state or the granter is not a party to
    /// `action`.
    pub fn grant_scope(
        &mut self,
        granter: &PartyId,
        grantee: Uid,
        scope: &AccessScope,
        action: &Action,
    ) -> WorldResult<AccessScope> {
        let Some(object) = scope.object.clone() else { return Ok(AccessScope::empty()) };
        let controls = self.parties.get(granter).is_some_and(|p| p.state.objects.contains(&object));
        if !controls || !action.parties.contains(granter) {
            return Ok(AccessScope::empty());
        }
        for mode in &scope.modes {
            self.grants.insert(ScopeGrant { grantee, object: object.clone(), mode: *mode, granter: granter.clone() });
        }
        Ok(scope.clone())
    }
}
