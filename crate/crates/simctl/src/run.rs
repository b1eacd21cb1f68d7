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


//! Steps a [`DeviceWorld`] through a scenario and records the trace.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use secmodel::authn::{AuthError, AuthOutcome, KeyEntry, KeyGate};
use secmodel::boot::SigningLineage;
use secmodel::consent::{AccessMode, Decision, ScriptedResponder};
use secmodel::crypto::{KeyId, KeyRole, SignatureScheme, DEFAULT_SCHEME};
use secmodel::permissions::{Manifest, PermissionDef};
use secmodel::sandbox::{DpcPolicy, Uid, AID_ISOLATED_START, AID_USER_OFFSET};
use secmodel::world::{AccessDecision, DeviceWorld, FlashImage, SystemImage, WorldConfig, WorldError};

use crate::dsl::{Assertion, Event, ImageKind, Op, Scenario, Subject, ThreatTag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Allow,
    Deny,
    Ok,
    Pass,
    Fail,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Allow => "allow",
            Outcome::Deny => "deny",
            Outcome::Ok => "ok",
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub index: usize,
    pub time: u64,
    pub line: usize,
    pub verb: String,
    pub threat: Option<ThreatTag>,
    pub outcome: Outcome,
    pub reasons: Vec<String>,
    /// Hex digest of the world after the event.
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub scenario: String,
    pub tags: BTreeSet<ThreatTag>,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn failures(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.outcome == Outcome::Fail)
    }
}

type Step = (Outcome, Vec<String>);

fn ok(reasons: Vec<String>) -> Step {
    (Outcome::Ok, reasons)
}

fn deny(e: impl ToString) -> Step {
    (Outcome::Deny, vec![e.to_string()])
}

fn short_perm(p: &str) -> &str {
    p.strip_prefix("android.permission.").unwrap_or(p)
}

fn access_step(d: AccessDecision) -> Step {
    let mut reasons: Vec<String> = d.mechanism.iter().map(|m| m.to_string()).collect();
    if d.via_grant {
        reasons.push("via-grant".into());
    }
    (if d.decision == Decision::Allow { Outcome::Allow } else { Outcome::Deny }, reasons)
}

fn check(cond: bool, expected: impl std::fmt::Display, got: impl std::fmt::Display) -> Step {
    if cond {
        (Outcome::Pass, vec![])
    } else {
        (Outcome::Fail, vec![format!("expected {expected}, got {got}")])
    }
}

/// Runner state beyond the world: scripted consent answers, the prompt
/// count and the previous outcome.
pub struct Runner {
    pub world: DeviceWorld,
    responder: ScriptedResponder,
    prompts: u64,
    last: Option<Step>,
}

impl Runner {
    pub fn new(sc: &Scenario, seed: Option<u64>) -> Self {
        let config = WorldConfig { weaver: sc.world.weaver, ..WorldConfig::default() };
        let system = SystemImage::android_default(sc.world.os_version);
        let world = DeviceWorld::factory(&system, seed.unwrap_or(sc.world.seed), config);
        Self { world, responder: ScriptedResponder::default(), prompts: 0, last: None }
    }

    fn uid(&self, s: &Subject) -> Result<Uid, WorldError> {
        Ok(match s {
            Subject::Root => Uid::ROOT,
            Subject::System => Uid::SYSTEM,
            Subject::Isolated(u) => Uid(u * AID_USER_OFFSET + AID_ISOLATED_START),
            Subject::App { package, user } => self.world.uid_of(package, *user)?,
        })
    }

    fn boot_reasons(&self) -> Vec<String> {
        let b = &self.world.boot;
        let mut r = vec![b.state.color.to_string(), if b.state.device_locked { "locked" } else { "unlocked" }.into()];
        r.extend(b.reasons());
        r
    }

    fn booted<T>(&self, res: Result<T, WorldError>) -> Step {
        match res {
            Ok(_) => ok(self.boot_reasons()),
            Err(e) => deny(e),
        }
    }

    pub fn step(&mut self, ev: &Event) -> Step {
        self.world.advance(ev.time);
        let step = match &ev.op {
            Op::Assert(a) => return self.assert(a),
            op => self.apply(op),
        };
        self.last = Some(step.clone());
        step
    }

    fn apply(&mut self, op: &Op) -> Step {
        let w = &mut self.world;
        match op {
            Op::Install { app, user, key, perms, target, shared, queries, declares, lineage, forge_lineage } => {
                let mut m = Manifest::new(app.clone());
                m.requested = perms.clone();
                m.target_sdk = *target;
                m.shared_uid = shared.clone();
                m.queries = queries.clone();
                for d in declares {
                    let mut parts = d.split('/');
                    let name = crate::dsl::perm_name(parts.next().unwrap_or_default());
                    let level = parts.next().unwrap_or("normal");
                    let group = parts.next().map(|g| format!(" group={g}")).unwrap_or_default();
                    match PermissionDef::parse_line(&format!("perm {name} {level}{group}")) {
                        Ok(def) => m.declared.push(def),
                        Err(e) => return deny(e),
                    }
                }
                let lineage = lineage.as_ref().map(|keys| {
                    let keys: Vec<KeyId> = keys.iter().map(KeyId::apk).collect();
                    let mut l = SigningLineage::through(&keys, &DEFAULT_SCHEME);
                    if *forge_lineage {
                        let last = l.entries.last_mut().expect("non-empty");
                        last.proof = Some(DEFAULT_SCHEME.sign(&last.key, b"self-signed link"));
                    }
                    l
                });
                match w.install(*user, KeyId::apk(key), m, lineage) {
                    Ok(out) => {
                        let mut r = vec![format!("uid={}", out.uid.0)];
                        if out.updated {
                            r.push("updated".into());
                        }
                        r.extend(out.statuses.iter().map(|(p, s)| format!("{}={s}", short_perm(p))));
                        ok(r)
                    }
                    Err(e) => deny(e),
                }
            }
            Op::Uninstall { app, user } => match w.uninstall(app, *user) {
                Ok(()) => ok(vec![]),
                Err(e) => deny(e),
            },
            Op::Grant { app, user, path, mode } => {
                let res = w
                    .consent_action(&format!("grant:{mode}"), *user, app, &[], path, *mode)
                    .and_then(|a| w.consent_and_grant(&a, *user, Some(&mut self.responder)));
                scope_step(res)
            }
            Op::Share { from, to, user, path } => {
                let res = w.uid_of(from, *user).and_then(|_| {
                    let a = w.consent_action("share", *user, to, &[from.as_str()], path, AccessMode::Read)?;
                    w.consent_and_grant(&a, *user, Some(&mut self.responder))
                });
                scope_step(res)
            }
            Op::Respond { party, value } => {
                self.responder.push(party.clone(), *value);
                ok(vec![])
            }
            Op::Request { app, user, perm, response } => match w.request_permission(app, *user, perm, *response) {
                Ok((status, prompted)) => {
                    let mut r = vec![format!("status={status}")];
                    if prompted {
                        self.prompts += 1;
                        r.push("prompted".into());
                    }
                    ok(r)
                }
                Err(e) => deny(e),
            },
            Op::SettingsToggle { app, user, perm, on } => match w.settings_toggle(app, *user, perm, *on) {
                Ok(s) => ok(vec![format!("status={s}")]),
                Err(e) => deny(e),
            },
            Op::Revoke { app, user, perm } => match w.revoke_permission(app, *user, perm) {
                Ok(s) => ok(vec![format!("status={s}")]),
                Err(e) => deny(e),
            },
            Op::Check { app, user, perm } => match w.uid_of(app, *user) {
                Ok(uid) => {
                    let (d, m) = w.check_permission(uid, perm);
                    access_step(AccessDecision { decision: d, mechanism: m, via_grant: false })
                }
                Err(e) => deny(e),
            },
            Op::Access { subject, path, mode } => {
                let res = self.uid(subject).and_then(|uid| self.world.access(uid, path, *mode));
                match res {
                    Ok(d) => access_step(d),
                    Err(e) => deny(e),
                }
            }
            Op::Create { subject, path, content } => {
                let res = self.uid(subject).and_then(|uid| self.world.create(uid, path, content));
                match res {
                    Ok(d) => access_step(d),
                    Err(e) => deny(e),
                }
            }
            Op::QueryPackages { app, user, filter } => match w.query_packages(app, *user, filter.as_deref()) {
                Ok(v) => ok(v),
                Err(e) => deny(e),
            },
            Op::Enroll { user, modality, secret, class } => match w.enroll(*user, *modality, secret, *class) {
                Ok(()) => ok(vec![]),
                Err(e) => deny(e),
            },
            Op::Lock { user } => match w.lock(*user) {
                Ok(()) => ok(vec![]),
                Err(e) => deny(e),
            },
            Op::Unlock { user, modality, secret } => match w.unlock(*user, *modality, secret) {
                Ok(AuthOutcome::Success { tier, .. }) => (Outcome::Allow, vec![format!("tier={}", tier_str(tier))]),
                Ok(AuthOutcome::Failed) => deny("bad-credential"),
                Err(WorldError::Auth(AuthError::TierLockout(r))) => deny(r),
                Err(e) => deny(e),
            },
            Op::Reboot => {
                w.reboot();
                ok(self.boot_reasons())
            }
            Op::Flash { image, key, version, rollback, set_root } => {
                let system = SystemImage::android_default(*version);
                let img = match (image, key) {
                    (ImageKind::Oem, _) => FlashImage::Oem { system, rollback_index: *rollback },
                    (ImageKind::Custom, Some(k)) => FlashImage::Custom {
                        system,
                        key: KeyId::new(k.clone(), KeyRole::UserRoot),
                        rollback_index: *rollback,
                    },
                    (ImageKind::Custom, None) => return deny("custom image needs key="),
                };
                if *set_root {
                    let root = key.as_ref().map(|k| KeyId::new(k.clone(), KeyRole::UserRoot));
                    if let Err(e) = w.set_user_root(root) {
                        return deny(e);
                    }
                }
                let res = w.flash(&img);
                self.booted(res)
            }
            Op::Tamper { partition, offset } => match w.tamper_partition(partition, *offset) {
                Ok(()) => ok(vec![]),
                Err(e) => deny(e),
            },
            Op::UnlockBootloader => {
                w.unlock_bootloader();
                ok(self.boot_reasons())
            }
            Op::Relock => {
                w.relock_bootloader();
                ok(self.boot_reasons())
            }
            Op::FactoryReset { settings } => {
                let res = if *settings {
                    w.settings_factory_reset()
                } else {
                    w.factory_reset();
                    Ok(())
                };
                self.booted(res)
            }
            Op::AddAccount { account } => match w.add_account(account) {
                Ok(()) => ok(vec![]),
                Err(e) => deny(e),
            },
            Op::Setup { account } => match w.setup(account.as_deref()) {
                Ok(()) => ok(vec![]),
                Err(e) => deny(e),
            },
            Op::Ota { version, rollback } => {
                let res = w.ota(SystemImage::android_default(*version), *rollback);
                self.booted(res)
            }
            Op::TrhUpdate { version, signed, credential } => match w.trh_update(*version, *signed, credential.as_deref()) {
                Ok(out) => ok(vec![serde_plain(&out)]),
                Err(e) => deny(e),
            },
            Op::AddUser { id } => match w.add_user(*id) {
                Ok(()) => ok(vec![]),
                Err(e) => deny(e),
            },
            Op::CreateProfile { dpc, user, deny: classes } => {
                let policy = DpcPolicy { deny: classes.iter().cloned().collect() };
                match w.create_work_profile(dpc, *user, &policy) {
                    Ok(id) => ok(vec![format!("user={id}")]),
                    Err(e) => deny(e),
                }
            }
            Op::ResetParty { party } => match w.reset_party(party) {
                Ok(()) => ok(vec![]),
                Err(e) => deny(e),
            },
            Op::SetForeground { app, value, service } => match w.set_foreground(app, *value, *service) {
                Ok(()) => ok(vec![]),
                Err(e) => deny(e),
            },
            Op::Confirm { message, button } => match w.confirm(message, *button) {
                Ok(Some(c)) => (Outcome::Allow, vec![format!("signed {}", &c.message_digest.to_hex()[..16])]),
                Ok(None) => deny("no-button-press"),
                Err(e) => deny(e),
            },
            Op::Keygen { app, user, alias, auth_bound, backing, presence, validity, min_strength } => {
                let mut e = KeyEntry::new(alias, *user);
                e.auth_bound = *auth_bound;
                e.backing = *backing;
                e.requires_user_presence = *presence;
                e.validity_secs = *validity;
                e.min_strength = *min_strength;
                match w.keygen(app, *user, e) {
                    Ok(id) => ok(vec![id]),
                    Err(e) => deny(e),
                }
            }
            Op::UseKey { app, user, alias, presence } => match w.use_key(app, *user, alias, *presence) {
                Ok(KeyGate::Usable) => (Outcome::Allow, vec![]),
                Ok(KeyGate::Locked { reason }) => deny(reason),
                Err(e) => deny(e),
            },
            Op::Attest { challenge } => match w.attest(challenge) {
                Ok(rec) => ok(vec![
                    rec.verified_boot_state.to_string(),
                    if rec.device_locked { "locked" } else { "unlocked" }.into(),
                    format!("os={}", rec.os_version),
                    format!("vbmeta={}", &rec.vbmeta_digest.to_hex()[..16]),
                ]),
                Err(e) => deny(e),
            },
            Op::Exploit { .. } => match w.exploit_kernel() {
                Ok(()) => ok(vec!["kernel-compromised".into()]),
                Err(e) => deny(e),
            },
            Op::Assert(_) => unreachable!("handled in step"),
        }
    }

    fn assert(&self, a: &Assertion) -> Step {
        let w = &self.world;
        match a {
            Assertion::Access { subject, path, mode, expect, mechanism } => {
                let got = self.uid(subject).and_then(|uid| w.check_access(uid, path, *mode));
                match got {
                    Err(e) => (Outcome::Fail, vec![e.to_string()]),
                    Ok(d) => {
                        let want_m = mechanism.is_none_or(|m| d.mechanism == Some(m));
                        let show = |dec: Decision, m: Option<String>| match m {
                            Some(m) => format!("{dec}({m})"),
                            None => dec.to_string(),
                        };
                        check(
                            d.decision == *expect && want_m,
                            show(*expect, mechanism.map(|m| m.to_string())),
                            show(d.decision, d.mechanism.map(|m| m.to_string())),
                        )
                    }
                }
            }
            Assertion::Permission { app, user, perm, status } => match w.permission_status(app, *user, perm) {
                Ok(got) => check(got == *status, opt_str(status), opt_str(&got)),
                Err(e) => (Outcome::Fail, vec![e.to_string()]),
            },
            Assertion::BootState { color, locked } => {
                let s = w.boot_state();
                check(
                    s.color == *color && locked.is_none_or(|l| l == s.device_locked),
                    format!("{color}{}", locked.map(|l| format!(" locked={l}")).unwrap_or_default()),
                    format!("{} locked={}", s.color, s.device_locked),
                )
            }
            Assertion::Ce { user, status } => {
                let got = w.storage.ce_status(*user);
                check(got == *status, serde_plain(status), serde_plain(&got))
            }
            Assertion::Exists { path, content } => match w.objects.get(path) {
                None => (Outcome::Fail, vec![format!("{path} missing")]),
                Some(o) => check(content.as_ref().is_none_or(|c| *c == o.content), format!("{content:?}"), format!("{:?}", o.content)),
            },
            Assertion::Absent { path } => check(!w.objects.contains_key(path), "absent", "present"),
            Assertion::Installed { app, user, expect } => {
                let got = w.uid_of(app, *user).is_ok();
                check(got == *expect, format!("installed={expect}"), format!("installed={got}"))
            }
            Assertion::Prompts { count } => check(self.prompts == *count, count, self.prompts),
            Assertion::Frp { pending } => check(w.frp_pending == *pending, format!("pending={pending}"), format!("pending={}", w.frp_pending)),
            Assertion::Visible { app, user, includes, excludes } => match w.query_packages(app, *user, None) {
                Err(e) => (Outcome::Fail, vec![e.to_string()]),
                Ok(v) => {
                    let missing: Vec<&String> = includes.iter().filter(|p| !v.contains(p)).collect();
                    let leaked: Vec<&String> = excludes.iter().filter(|p| v.contains(p)).collect();
                    check(missing.is_empty() && leaked.is_empty(), "visibility as declared", format!("missing={missing:?} leaked={leaked:?}"))
                }
            },
            Assertion::Last { expect, reason } => match &self.last {
                None => (Outcome::Fail, vec!["no previous event".into()]),
                Some((o, rs)) => {
                    let reason_ok = reason.as_ref().is_none_or(|want| rs.iter().any(|r| r.contains(want.as_str())));
                    check(
                        o.as_str() == expect && reason_ok,
                        format!("{expect}{}", reason.as_ref().map(|r| format!(" [{r}]")).unwrap_or_default()),
                        format!("{} {rs:?}", o.as_str()),
                    )
                }
            },
            Assertion::Invariants => {
                let v = w.check_invariants();
                if v.is_empty() {
                    (Outcome::Pass, vec![])
                } else {
                    (Outcome::Fail, v)
                }
            }
        }
    }
}

fn tier_str(t: secmodel::authn::Tier) -> String {
    serde_plain(&t)
}

/// Renders a unit enum through its serde name.
fn serde_plain<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

fn opt_str<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or("none".to_string(), |s| s.to_string())
}

fn scope_step(res: Result<secmodel::consent::AccessScope, WorldError>) -> Step {
    match res {
        Ok(scope) if scope.is_empty() => deny("empty-scope"),
        Ok(scope) => {
            let obj = scope.object.unwrap_or_default();
            (Outcome::Allow, scope.modes.iter().map(|m| format!("scope={obj}:{m}")).collect())
        }
        Err(WorldError::Vetoed { party, .. }) => deny(format!("veto {party}")),
        Err(e) => deny(e),
    }
}

/// Runs `sc` from a factory-fresh device; `seed` overrides the scenario's.
pub fn run(sc: &Scenario, seed: Option<u64>) -> Trace {
    let mut r = Runner::new(sc, seed);
    let records = sc
        .events
        .iter()
        .enumerate()
        .map(|(index, ev)| {
            let (outcome, reasons) = r.step(ev);
            TraceRecord {
                index,
                time: ev.time,
                line: ev.line,
                verb: ev.verb.clone(),
                threat: ev.threat,
                outcome,
                reasons,
                digest: r.world.digest().to_hex(),
            }
        })
        .collect();
    Trace { scenario: sc.name.clone(), tags: sc.tags.clone(), records }
}
