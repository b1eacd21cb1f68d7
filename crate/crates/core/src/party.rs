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

//! Stakeholders of an interaction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Attribute set on a Developer party while one of its activities is visible.
pub const UI_FOREGROUND: &str = "ui-foreground";
/// Attribute set on a Developer party while it runs a foreground service.
pub const FOREGROUND_SERVICE: &str = "foreground-service";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartyId(String);

impl PartyId {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn user(user_id: u32) -> Self {
        Self(format!("user:{user_id}"))
    }

    pub fn app(package: &str) -> Self {
        Self(format!("app:{package}"))
    }

    pub fn org(package: &str) -> Self {
        Self(format!("org:{package}"))
    }

    pub fn platform() -> Self {
        Self("platform".into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartyClass {
    User,
    Developer,
    Platform,
    Organization,
}

/// Data controlled by a party plus its run-time attributes.
///
/// Objects are referenced by path. Control is tracked, legal ownership is not.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StakeholderState {
    pub objects: BTreeSet<String>,
    pub attributes: BTreeMap<String, bool>,
}

impl StakeholderState {
    pub fn attr(&self, name: &str) -> bool {
        self.attributes.get(name).copied().unwrap_or(false)
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty() && self.attributes.values().all(|v| !v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Party {
    id: PartyId,
    class: PartyClass,
    pub state: StakeholderState,
}

impl Party {
    pub fn new(id: PartyId, class: PartyClass) -> Self {
        Self { id, class, state: StakeholderState::default() }
    }

    pub fn id(&self) -> &PartyId {
        &self.id
    }

    pub fn class(&self) -> PartyClass {
        self.class
    }

    /// Foreground in the sense of run-time permissions: a visible activity or
    /// a running foreground service.
    pub fn in_foreground(&self) -> bool {
        self.state.attr(UI_FOREGROUND) || self.state.attr(FOREGROUND_SERVICE)
    }
}

/// Lookup of parties by id; implemented by the device world and by plain maps.
pub trait PartyDirectory {
    fn party(&self, id: &PartyId) -> Option<&Party>;
}

impl PartyDirectory for BTreeMap<PartyId, Party> {
    fn party(&self, id: &PartyId) -> Option<&Party> {
        self.get(id)
    }
}
