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


//! Verified boot: key chain, VBMeta, hash trees, rollback protection,
//! boot-state computation, attestation and APK key rotation.

pub mod attest;
pub mod chain;
pub mod fixture;
pub mod hashtree;
pub mod lineage;
pub mod rollback;
pub mod vbmeta;

pub use attest::{attest, verify_attestation, AttestError, AttestationRecord};
pub use chain::{verify_boot_chain, BootChain, BootColor, BootImages, BootIssue, BootReport, BootState, RootOfTrust};
pub use fixture::{build_images, ImageSpec, OemKeys};
pub use hashtree::{BlockStatus, HashTree};
pub use lineage::{verify_apk_update, LineageError, SigningLineage, UpdateDecision};
pub use rollback::{FrpRegion, RollbackCheck, RollbackStore};
pub use vbmeta::{BootStage, Descriptor, VbMeta};
