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


//! Tamper-evident persistent storage: rollback counters and the FRP region.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::party::PartyId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "result")]
pub enum RollbackCheck {
    Ok,
    Rejected { stored: u64, image: u64 },
}

/// Monotonic counters, one per rollback slot. A missing slot reads as 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollbackStore {
    counters: BTreeMap<u32, u64>,
}

impl RollbackStore {
    pub fn get(&self, slot: u32) -> u64 {
        self.counters.get(&slot).copied().unwrap_or(0)
    }

    pub fn check(&self, slot: u32, index: u64) -> RollbackCheck {
        let stored = self.get(slot);
        if index >= stored {
            RollbackCheck::Ok
        } else {
            RollbackCheck::Rejected { stored, image: index }
        }
    }

    /// Raises the counter to `index`; never lowers it.
    pub fn raise(&mut self, slot: u32, index: u64) {
        let c = self.counters.entry(slot).or_insert(0);
        *c = (*c).max(index);
    }

    pub fn slots(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.counters.iter().map(|(s, i)| (*s, *i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrpError {
    #[error("FRP region is readable only by the platform (caller {0})")]
    NotPlatform(PartyId),
}

/// Factory Reset Protection record: one opaque value that survives factory
/// reset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrpRegion {
    record: Option<String>,
}

impl FrpRegion {
    pub fn with_record(record: impl Into<String>) -> Self {
        Self { record: Some(record.into()) }
    }

    pub fn set(&mut self, record: Option<String>) {
        self.record = record;
    }

    pub fn is_set(&self) -> bool {
        self.record.is_some()
    }

    pub fn read(&self, caller: &PartyId) -> Result<Option<&str>, FrpError> {
        if *caller != PartyId::platform() {
            return Err(FrpError::NotPlatform(caller.clone()));
        }
        Ok(self.record.as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let mut s = RollbackStore::default();
        s.raise(0, 5);
        assert_eq!(s.check(0, 4), RollbackCheck::Rejected { stored: 5, image: 4 });
        assert_eq!(s.check(0, 5), RollbackCheck::Ok);
        s.raise(0, 5);
        assert_eq!(s.get(0), 5);
        s.raise(0, 7);
        assert_eq!(s.get(0), 7);
        assert_eq!(s.check(0, 6), RollbackCheck::Rejected { stored: 7, image: 6 });
        s.raise(0, 3);
        assert_eq!(s.get(0), 7);
    }

    #[test]
    fn slots_are_independent() {
        let mut s = RollbackStore::default();
        s.raise(1, 9);
        assert_eq!(s.check(0, 0), RollbackCheck::Ok);
        assert_eq!(s.check(1, 8), RollbackCheck::Rejected { stored: 9, image: 8 });
    }

    #[test]
    fn frp_platform_only() {
        let f = FrpRegion::with_record("acct");
        assert_eq!(f.read(&PartyId::platform()), Ok(Some("acct")));
        assert!(f.read(&PartyId::app("com.evil")).is_err());
        assert!(f.read(&PartyId::user(0)).is_err());
    }
}
