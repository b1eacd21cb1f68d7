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

//! Multi-party consent.
//!
//! An action executes only if every party of the interaction consents; any
//! single party can veto. Consent responses are cached per
//! `(party, action-class)` and re-applied by [`ConsentStore::resolve`]:
//!
//! | cached response       | resolution                                    |
//! |-----------------------|-----------------------------------------------|
//! | `allow-always`        | allow                                         |
//! | `deny-always`         | deny                                          |
//! | `allow-once`          | allow, then the entry is spent (next: ask)    |
//! | `deny-once`           | deny, then the entry is spent (next: ask)     |
//! | `allow-in-foreground` | allow iff the acting app is in the foreground |
//! | none                  | ask                                           |
//!
//! The foreground condition is evaluated at resolution time, never at the
//! time the response was given.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::party::{Party, PartyClass, PartyDirectory, PartyId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsentResponse {
    AllowAlways,
    AllowOnce,
    AllowInForeground,
    DenyOnce,
    DenyAlways,
}

impl ConsentResponse {
    pub const ALL: [ConsentResponse; 5] = [
        ConsentResponse::AllowAlways,
        ConsentResponse::AllowOnce,
        ConsentResponse::AllowInForeground,
        ConsentResponse::DenyOnce,
        ConsentResponse::DenyAlways,
    ];

    pub fn is_one_shot(self) -> bool {
        matches!(self, ConsentResponse::AllowOnce | ConsentResponse::DenyOnce)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConsentResponse::AllowAlways => "allow-always",
            ConsentResponse::AllowOnce => "allow-once",
            ConsentResponse::AllowInForeground => "allow-in-foreground",
            ConsentResponse::DenyOnce => "deny-once",
            ConsentResponse::DenyAlways => "deny-always",
        }
    }
}

impl fmt::Display for ConsentResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConsentResponse {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConsentResponse::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown consent response `{s}`"))
    }
}

/// Result of looking up a cached consent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    Allow,
    Deny,
    Ask,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Allow,
    Deny,
}

impl Decision {
    pub fn is_allow(self) -> bool {
        self == Decision::Allow
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Allow => "allow",
            Decision::Deny => "deny",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccessMode {
    Read,
    Write,
}

impl fmt::Display for AccessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AccessMode::Read => "read",
            AccessMode::Write => "write",
        })
    }
}

impl FromStr for AccessMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "read" => Ok(AccessMode::Read),
            "write" => Ok(AccessMode::Write),
            _ => Err(format!("unknown access mode `{s}`")),
        }
    }
}

/// The part of a party's state an action asks for.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessScope {
    pub object: Option<String>,
    pub modes: BTreeSet<AccessMode>,
}

impl AccessScope {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn read_only(object: impl Into<String>) -> Self {
        Self { object: Some(object.into()), modes: [AccessMode::Read].into() }
    }

    pub fn is_empty(&self) -> bool {
        self.object.is_none() || self.modes.is_empty()
    }

    pub fn permits(&self, object: &str, mode: AccessMode) -> bool {
        self.object.as_deref() == Some(object) && self.modes.contains(&mode)
    }
}

/// One interaction between a set of parties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub id: String,
    /// Granularity at which consent is cached, e.g. a permission group.
    pub class: String,
    pub parties: BTreeSet<PartyId>,
    /// The Developer party acting; its UI state drives `allow-in-foreground`.
    pub subject: PartyId,
    pub scope: AccessScope,
}

impl Action {
    /// Checks the party-class composition: one User, one Platform, at most one
    /// Organization, at least one Developer.
    pub fn validate(&self, dir: &impl PartyDirectory) -> Result<(), ConsentError> {
        let mut counts = BTreeMap::new();
        for id in &self.parties {
            let p = dir.party(id).ok_or_else(|| ConsentError::UnknownParty(id.clone()))?;
            *counts.entry(p.class()).or_insert(0usize) += 1;
        }
        let n = |c| counts.get(&c).copied().unwrap_or(0);
        if n(PartyClass::User) != 1
            || n(PartyClass::Platform) != 1
            || n(PartyClass::Organization) > 1
            || n(PartyClass::Developer) == 0
            || !self.parties.contains(&self.subject)
        {
            return Err(ConsentError::MalformedAction(self.id.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsentError {
    #[error("unknown party {0}")]
    UnknownParty(PartyId),
    #[error("no consent recorded for {party} on `{class}` and no responder configured")]
    MissingConsent { party: PartyId, class: String },
    #[error("action {0} does not have the required party composition")]
    MalformedAction(String),
    #[error("scope requested without prior consent for action {0}")]
    ConsentMissing(String),
}

/// Interactive source of consent responses, consulted when nothing is cached.
pub trait Responder {
    /// `None` means the prompt was dismissed, which counts as a denial.
    fn respond(&mut self, party: &Party, action: &Action) -> Option<ConsentResponse>;
}

/// Responder fed from a script: each party has a queue of answers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedResponder {
    queue: BTreeMap<PartyId, VecDeque<ConsentResponse>>,
}

impl ScriptedResponder {
    pub fn push(&mut self, party: PartyId, response: ConsentResponse) {
        self.queue.entry(party).or_default().push_back(response);
    }

    pub fn pending(&self) -> usize {
        self.queue.values().map(VecDeque::len).sum()
    }

    pub fn clear_party(&mut self, party: &PartyId) {
        self.queue.remove(party);
    }
}

impl Responder for ScriptedResponder {
    fn respond(&mut self, party: &Party, _action: &Action) -> Option<ConsentResponse> {
        let q = self.queue.get_mut(party.id())?;
        let r = q.pop_front();
        if q.is_empty() {
            self.queue.remove(party.id());
        }
        r
    }
}

/// Cached consent responses keyed by `(party, action-class)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsentStore {
    entries: BTreeMap<PartyId, BTreeMap<String, ConsentResponse>>,
    /// Per-party fallback for classes without an entry (configured policy).
    defaults: BTreeMap<PartyId, ConsentResponse>,
}

impl ConsentStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, party: PartyId, class: impl Into<String>, response: ConsentResponse) {
        self.entries.entry(party).or_default().insert(class.into(), response);
    }

    pub fn get(&self, party: &PartyId, class: &str) -> Option<ConsentResponse> {
        self.entries.get(party).and_then(|m| m.get(class)).copied()
    }

    pub fn remove(&mut self, party: &PartyId, class: &str) -> Option<ConsentResponse> {
        let m = self.entries.get_mut(party)?;
        let r = m.remove(class);
        if m.is_empty() {
            self.entries.remove(party);
        }
        r
    }

    /// Removes entries whose class satisfies `pred`, for every party.
    pub fn remove_classes(&mut self, mut pred: impl FnMut(&str) -> bool) {
        for m in self.entries.values_mut() {
            m.retain(|c, _| !pred(c));
        }
        self.entries.retain(|_, m| !m.is_empty());
    }

    /// Policy fallback for a party. Only persistent responses make sense here.
    pub fn set_default(&mut self, party: PartyId, allow: bool) {
        let r = if allow { ConsentResponse::AllowAlways } else { ConsentResponse::DenyAlways };
        self.defaults.insert(party, r);
    }

    /// Drops everything given by `party`.
    pub fn forget_party(&mut self, party: &PartyId) {
        self.entries.remove(party);
        self.defaults.remove(party);
    }

    pub fn entries_of(&self, party: &PartyId) -> impl Iterator<Item = (&str, ConsentResponse)> {
        self.entries
            .get(party)
            .into_iter()
            .flat_map(|m| m.iter().map(|(c, r)| (c.as_str(), *r)))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.defaults.is_empty()
    }

    fn lookup(&self, party: &PartyId, class: &str) -> Option<(ConsentResponse, bool)> {
        if let Some(r) = self.get(party, class) {
            return Some((r, false));
        }
        self.defaults.get(party).map(|r| (*r, true))
    }

    /// Resolution without consuming one-shot entries.
    pub fn peek(&self, party: &PartyId, action: &Action, dir: &impl PartyDirectory) -> Resolution {
        match self.lookup(party, &action.class) {
            None => Resolution::Ask,
            Some((r, _)) => apply(r, action, dir),
        }
    }

    /// Resolves the cached consent of `party` for `action`, spending one-shot
    /// entries.
    pub fn resolve(
        &mut self,
        party: &PartyId,
        action: &Action,
        dir: &impl PartyDirectory,
    ) -> Resolution {
        let res = self.peek(party, action, dir);
        if let Some((r, false)) = self.lookup(party, &action.class) {
            if r.is_one_shot() {
                self.remove(party, &action.class);
            }
        }
        res
    }
}

fn apply(r: ConsentResponse, action: &Action, dir: &impl PartyDirectory) -> Resolution {
    match r {
        ConsentResponse::AllowAlways | ConsentResponse::AllowOnce => Resolution::Allow,
        ConsentResponse::DenyAlways | ConsentResponse::DenyOnce => Resolution::Deny,
        ConsentResponse::AllowInForeground => {
            let fg = dir.party(&action.subject).map(Party::in_foreground).unwrap_or(false);
            if fg {
                Resolution::Allow
            } else {
                Resolution::Deny
            }
        }
    }
}

/// Free-standing form of [`ConsentStore::resolve`].
pub fn resolve_cached(
    party: &PartyId,
    action: &Action,
    store: &mut ConsentStore,
    dir: &impl PartyDirectory,
) -> Resolution {
    store.resolve(party, action, dir)
}

/// Outcome of a multi-party evaluation, with each party's resolution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsentOutcome {
    pub action: String,
    pub decision: Decision,
    pub resolutions: Vec<(PartyId, Resolution)>,
}

impl ConsentOutcome {
    /// First party (in id order) that did not allow.
    pub fn veto(&self) -> Option<&PartyId> {
        self.resolutions.iter().find(|(_, r)| *r != Resolution::Allow).map(|(p, _)| p)
    }
}

/// Evaluates `C(A) = allow ⇔ ∀P: C(P, A) = allow`.
///
/// Runs in two phases. First every party is resolved without side effects,
/// asking the responder for parties with nothing cached; its answers are
/// recorded. If any party is still undecided and there is no responder the
/// call fails with [`ConsentError::MissingConsent`] and the store is left as it
/// was. Otherwise the one-shot entries used are spent.
pub fn evaluate_consent(
    action: &Action,
    store: &mut ConsentStore,
    dir: &impl PartyDirectory,
    mut responder: Option<&mut dyn Responder>,
) -> Result<ConsentOutcome, ConsentError> {
    for id in &action.parties {
        if dir.party(id).is_none() {
            return Err(ConsentError::UnknownParty(id.clone()));
        }
    }

    let mut resolutions = Vec::with_capacity(action.parties.len());
    for id in &action.parties {
        let mut res = store.peek(id, action, dir);
        if res == Resolution::Ask {
            match responder.as_deref_mut() {
                None => {
                    return Err(ConsentError::MissingConsent {
                        party: id.clone(),
                        class: action.class.clone(),
                    })
                }
                Some(r) => {
                    let party = dir.party(id).expect("checked above");
                    match r.respond(party, action) {
                        Some(answer) => {
                            store.record(id.clone(), action.class.clone(), answer);
                            res = store.peek(id, action, dir);
                        }
                        None => res = Resolution::Deny,
                    }
                }
            }
        }
        resolutions.push((id.clone(), res));
    }

    for (id, _) in &resolutions {
        store.resolve(id, action, dir);
    }

    let decision = if resolutions.iter().all(|(_, r)| *r == Resolution::Allow) {
        Decision::Allow
    } else {
        Decision::Deny
    };
    Ok(ConsentOutcome { action: action.id.clone(), decision, resolutions })
}
