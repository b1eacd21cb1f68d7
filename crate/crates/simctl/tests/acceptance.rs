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


//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secmodel::authn::{BiometricClass, ModalityKind, Tier, HOUR};
use secmodel::boot::{
    build_images, verify_boot_chain, BootChain, BootColor, BootImages, ImageSpec, OemKeys,
};
use secmodel::consent::{
    evaluate_consent, AccessMode, AccessScope, Action, ConsentError, ConsentResponse, ConsentStore,
    Decision, ScriptedResponder,
};
use secmodel::crypto::{KeyId, KeyRole, SignatureScheme, DEFAULT_SCHEME};
use secmodel::party::{Party, PartyClass, PartyId, UI_FOREGROUND};
use secmodel::permissions::{Manifest, UserResponse, READ_EXTERNAL_STORAGE, WRITE_EXTERNAL_STORAGE};
use secmodel::sandbox::{Mechanism, Uid, AID_ISOLATED_START, AID_USER_OFFSET};
use secmodel::boot::SigningLineage;
use secmodel::world::{DeviceWorld, Hardware, SystemImage, WorldConfig, WorldError};
use simctl::corpus::{check_dir, Status};
use simctl::dsl::parse_scenario;
use simctl::run::Runner;
use simctl::ThreatTag;

const VETO_CONFIGS: usize = 10_000;
const VETO_BUDGET: Duration = Duration::from_secs(10);
const RESET_TRACES: usize = 1_000;
const RESET_MAX_LEN: usize = 30;
const BITFLIP_BLOCKS: usize = 16;
const BITFLIP_BLOCK_SIZE: u32 = 64;
const BITFLIP_BUDGET: Duration = Duration::from_secs(5);
const ROLLBACK_MAX: u64 = 8;
const ROLLBACK_SEQUENCES: usize = 200;
const ROLLBACK_SEQ_LEN: usize = 12;
const AUTH_TRACES: usize = 10_000;
const AUTH_TRACE_LEN: usize = 24;
const MIN_CORPUS: usize = 10;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5ec0_de00 + stream)
}

fn world() -> DeviceWorld {
    DeviceWorld::factory(&SystemImage::android_default(1), 1, WorldConfig::default())
}

// 1. Veto property.

fn resolves_allow(r: ConsentResponse, foreground: bool) -> bool {
    match r {
        ConsentResponse::AllowAlways | ConsentResponse::AllowOnce => true,
        ConsentResponse::AllowInForeground => foreground,
        ConsentResponse::DenyOnce | ConsentResponse::DenyAlways => false,
    }
}

struct PartyConfig {
    entry: Option<ConsentResponse>,
    default: Option<bool>,
    answer: Option<ConsentResponse>,
}

fn veto_property() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(1);
    let ids = [PartyId::user(0), PartyId::platform(), PartyId::app("com.a"), PartyId::org("com.corp")];
    let classes = [PartyClass::User, PartyClass::Platform, PartyClass::Developer, PartyClass::Organization];
    let subject = PartyId::app("com.a");
    let action = Action {
        id: "act".into(),
        class: "class".into(),
        parties: ids.iter().cloned().collect(),
        subject: subject.clone(),
        scope: AccessScope::read_only("/obj"),
    };
    let pick = |rng: &mut ChaCha8Rng| -> Option<ConsentResponse> {
        let i = rng.gen_range(0..=ConsentResponse::ALL.len());
        ConsentResponse::ALL.get(i).copied()
    };
    let (mut allows, mut denies, mut missing) = (0, 0, 0);
    for n in 0..VETO_CONFIGS {
        let foreground = rng.gen_bool(0.5);
        let with_responder = rng.gen_bool(0.7);
        let mut dir = BTreeMap::new();
        let mut store = ConsentStore::new();
        let mut responder = ScriptedResponder::default();
        let mut configs = Vec::new();
        for (id, class) in ids.iter().zip(classes) {
            let mut p = Party::new(id.clone(), class);
            if *id == subject && foreground {
                p.state.attributes.insert(UI_FOREGROUND.into(), true);
            }
            dir.insert(id.clone(), p);
            let cfg = PartyConfig {
                entry: pick(&mut rng),
                default: [None, Some(true), Some(false)][rng.gen_range(0..3)],
                answer: pick(&mut rng),
            };
            if let Some(e) = cfg.entry {
                store.record(id.clone(), "class", e);
            }
            if let Some(d) = cfg.default {
                store.set_default(id.clone(), d);
            }
            if let Some(a) = cfg.answer {
                responder.push(id.clone(), a);
            }
            configs.push(cfg);
        }
        // Oracle: each party's own resolution, then conjunction.
        let mut expect_missing = false;
        let mut all_allow = true;
        for cfg in &configs {
            let effective = cfg.entry.or(cfg.default.map(|d| {
                if d {
                    ConsentResponse::AllowAlways
                } else {
                    ConsentResponse::DenyAlways
                }
            }));
            let allow = match (effective, with_responder) {
                (Some(r), _) => resolves_allow(r, foreground),
                (None, false) => {
                    expect_missing = true;
                    false
                }
                (None, true) => cfg.answer.is_some_and(|a| resolves_allow(a, foreground)),
            };
            all_allow &= allow;
        }
        let before = store.clone();
        let got = evaluate_consent(
            &action,
            &mut store,
            &dir,
            if with_responder { Some(&mut responder) } else { None },
        );
        match got {
            Err(ConsentError::MissingConsent { .. }) if expect_missing => {
                if store != before {
                    return Err(format!("config {n}: failed evaluation changed the store"));
                }
                missing += 1;
            }
            Ok(out) if !expect_missing => {
                let want = if all_allow { Decision::Allow } else { Decision::Deny };
                if out.decision != want {
                    return Err(format!("config {n}: got {} want {want}", out.decision));
                }
                if out.decision == Decision::Allow {
                    allows += 1;
                } else {
                    denies += 1;
                }
            }
            other => return Err(format!("config {n}: unexpected {other:?} (missing expected: {expect_missing})")),
        }
    }
    let took = start.elapsed();
    if took >= VETO_BUDGET {
        return Err(format!("took {took:?}, budget {VETO_BUDGET:?}"));
    }
    Ok(format!("{VETO_CONFIGS} configs, {allows} allow / {denies} deny / {missing} missing, 0 counterexamples, {took:.2?}"))
}

// 2. Safe reset.

fn random_trace(rng: &mut ChaCha8Rng) -> String {
    let apps = ["com.a", "com.b", "com.c"];
    let mut out = String::from("scenario name=reset\n");
    let len = rng.gen_range(0..RESET_MAX_LEN);
    let mut t = 0u64;
    let mut os = 1u32;
    for _ in 0..len {
        t += rng.gen_range(0..4 * HOUR);
        let a = apps.choose(rng).unwrap();
        let b = apps.choose(rng).unwrap();
        let u = [0, 0, 0, 11].choose(rng).unwrap();
        let line = match rng.gen_range(0..20) {
            0 | 1 => format!("install app={a} user={u} key=K{a} perms=CAMERA,READ_EXTERNAL_STORAGE"),
            2 => format!("uninstall app={a} user={u}"),
            3 => format!("create subject={a}@{u} path=/data/user/{u}/{a}/f content=x"),
            4 => format!("create subject={a}@{u} path=/storage/emulated/{u}/DCIM/{a}.jpg content=img"),
            5 => format!("set-foreground app={a} value=1"),
            6 => format!("request app={a} user={u} perm=CAMERA response=allow"),
            7 => format!("respond party=user:{u} value=allow-always"),
            8 => format!("share from={a} to={b} user={u} path=/storage/emulated/{u}/DCIM/{a}.jpg"),
            9 => format!("enroll user={u} modality=pin secret=1234"),
            10 => format!("lock user={u}"),
            11 => format!("unlock user={u} modality=pin secret=1234"),
            12 => "add-user id=11".into(),
            13 => format!("create-profile dpc={a} user=0 deny=CAMERA"),
            14 => "add-account account=owner@example.com".into(),
            15 => format!("keygen app={a} user={u} alias=k"),
            16 => {
                os += 1;
                format!("ota version={os} rollback={os}")
            }
            17 => "reboot".into(),
            18 => "exploit kind=kernel".into(),
            _ => format!("grant app={b} user={u} path=/storage/emulated/{u}/DCIM/{a}.jpg mode=read"),
        };
        out.push_str(&format!("t={t} {line}\n"));
    }
    out.push_str(&format!("t={} factory-reset\n", t + 1));
    out
}

fn safe_reset() -> Verdict {
    let mut rng = rng(2);
    let mut frp_kept = 0;
    for n in 0..RESET_TRACES {
        let text = random_trace(&mut rng);
        let sc = parse_scenario(&text).map_err(|e| format!("trace {n}: {e}"))?;
        let mut r = Runner::new(&sc, None);
        for ev in &sc.events {
            r.step(ev);
        }
        let w = &r.world;
        // Fresh hardware; only the OS (images and their rollback counters)
        // and the FRP record survive a reset.
        let mut hw = Hardware::new(sc.world.seed);
        hw.frp = w.hardware.frp.clone();
        hw.chain.rollback = w.hardware.chain.rollback.clone();
        frp_kept += usize::from(hw.frp.is_set());
        let fresh = DeviceWorld::boot_fresh(hw, w.images.clone(), w.config, w.clock);
        if w.digest() != fresh.digest() {
            let diff: Vec<String> = {
                let a = serde_json::to_value(w).unwrap();
                let b = serde_json::to_value(&fresh).unwrap();
                a.as_object()
                    .unwrap()
                    .iter()
                    .filter(|(k, v)| b.get(k.as_str()) != Some(v))
                    .map(|(k, _)| k.clone())
                    .collect()
            };
            return Err(format!("trace {n}: digest differs in {diff:?}\n{text}"));
        }
    }
    Ok(format!("{RESET_TRACES} traces, {frp_kept} with FRP record kept, 0 counterexamples"))
}

// 3. Sandbox separation.

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kind {
    Private,
    ExternalApp,
    Media,
    System,
}

struct Obj {
    path: String,
    kind: Kind,
    user: u32,
    creator: Option<(&'static str, u32)>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Subj {
    App(&'static str, u32),
    Isolated(u32),
    Root,
    System,
}

struct AppSpec {
    name: &'static str,
    target: u32,
    perms: &'static [&'static str],
}

const MICRO_APPS: [AppSpec; 3] = [
    AppSpec { name: "com.a", target: 30, perms: &[] },
    AppSpec { name: "com.b", target: 30, perms: &[READ_EXTERNAL_STORAGE] },
    AppSpec { name: "com.c", target: 28, perms: &[READ_EXTERNAL_STORAGE, WRITE_EXTERNAL_STORAGE] },
];
const MICRO_USERS: [u32; 2] = [0, 10];

/// Independent model: DAC, then MAC, then the permission layer; the first
/// layer that refuses names the mechanism.
fn sandbox_oracle(s: Subj, o: &Obj, mode: AccessMode) -> (Decision, Option<Mechanism>) {
    let deny = |m| (Decision::Deny, Some(m));
    let write = mode == AccessMode::Write;
    let owner = matches!((s, o.creator), (Subj::App(p, u), Some((q, v))) if p == q && u == v);
    // DAC: private and app-external files are owner-only; shared media is
    // group-accessible to apps and system of the same user; system files
    // are world-readable and never writable.
    let dac = match (s, o.kind) {
        (_, Kind::System) => !write,
        (Subj::Root, _) => true,
        (_, Kind::Private | Kind::ExternalApp) => owner,
        (Subj::App(_, u), Kind::Media) => u == o.user,
        (Subj::System, Kind::Media) => o.user == 0,
        (Subj::Isolated(_), Kind::Media) => false,
    };
    if !dac {
        return deny(Mechanism::Dac);
    }
    // MAC: app domains reach app data and media, read system files;
    // system_server reads system files and media; su and isolated get
    // nothing.
    let mac = match (s, o.kind) {
        (Subj::App(..), Kind::Private | Kind::ExternalApp | Kind::Media) => true,
        (Subj::App(..), Kind::System) => !write,
        (Subj::System, Kind::System | Kind::Media) => !write,
        _ => false,
    };
    if !mac {
        return deny(Mechanism::Mac);
    }
    // Permission: scoped storage for other apps' media.
    if let (Subj::App(p, _), Kind::Media) = (s, o.kind) {
        if !owner {
            let spec = MICRO_APPS.iter().find(|a| a.name == p).unwrap();
            let ok = if write {
                spec.target < 29 && spec.perms.contains(&WRITE_EXTERNAL_STORAGE)
            } else {
                spec.perms.contains(&READ_EXTERNAL_STORAGE)
            };
            if !ok {
                return deny(Mechanism::Permission);
            }
        }
    }
    (Decision::Allow, None)
}

fn sandbox_separation() -> Verdict {
    let mut w = world();
    w.add_user(10).map_err(|e| e.to_string())?;
    for u in MICRO_USERS {
        for a in &MICRO_APPS {
            let mut m = Manifest::new(a.name);
            m.target_sdk = a.target;
            m.requested = a.perms.iter().map(|p| p.to_string()).collect();
            w.install(u, KeyId::apk(format!("{}-key", a.name)), m, None).map_err(|e| e.to_string())?;
        }
    }
    let mut objects = vec![
        Obj { path: "/system/build.prop".into(), kind: Kind::System, user: 0, creator: None },
        Obj { path: "/system/etc/hosts".into(), kind: Kind::System, user: 0, creator: None },
    ];
    for u in MICRO_USERS {
        for a in &MICRO_APPS {
            w.set_foreground(a.name, true, None).map_err(|e| e.to_string())?;
            for p in a.perms {
                w.request_permission(a.name, u, p, UserResponse::Allow).map_err(|e| e.to_string())?;
            }
            let uid = w.uid_of(a.name, u).map_err(|e| e.to_string())?;
            for (kind, path) in [
                (Kind::Private, format!("/data/user/{u}/{}/f", a.name)),
                (Kind::ExternalApp, format!("/storage/emulated/{u}/Android/data/{}/f", a.name)),
                (Kind::Media, format!("/storage/emulated/{u}/DCIM/{}.jpg", a.name)),
            ] {
                let d = w.create(uid, &path, "x").map_err(|e| e.to_string())?;
                if d.decision != Decision::Allow {
                    return Err(format!("setup: {} could not create {path}", a.name));
                }
                objects.push(Obj { path, kind, user: u, creator: Some((a.name, u)) });
            }
        }
    }
    let mut subjects = vec![Subj::Root, Subj::System];
    for u in MICRO_USERS {
        subjects.push(Subj::Isolated(u));
        subjects.extend(MICRO_APPS.iter().map(|a| Subj::App(a.name, u)));
    }
    let mut checked = 0;
    let mut allowed = 0;
    for s in &subjects {
        let uid = match *s {
            Subj::Root => Uid::ROOT,
            Subj::System => Uid::SYSTEM,
            Subj::Isolated(u) => Uid(u * AID_USER_OFFSET + AID_ISOLATED_START),
            Subj::App(p, u) => w.uid_of(p, u).map_err(|e| e.to_string())?,
        };
        for o in &objects {
            for mode in [AccessMode::Read, AccessMode::Write] {
                let d = w.check_access(uid, &o.path, mode).map_err(|e| e.to_string())?;
                let want = sandbox_oracle(*s, o, mode);
                if (d.decision, d.mechanism) != want {
                    return Err(format!(
                        "{s:?} {mode} {}: model {:?}/{:?}, oracle {want:?}",
                        o.path, d.decision, d.mechanism
                    ));
                }
                checked += 1;
                allowed += usize::from(want.0 == Decision::Allow);
            }
        }
    }
    Ok(format!("{} subjects x {} objects x 2 modes = {checked} accesses ({allowed} allowed), exact match", subjects.len(), objects.len()))
}

// 4. Boot-state oracle.

/// (locked, user root of trust, verifies, OS found) -> colour, from the
/// warning screens: YELLOW locked with custom root, ORANGE unlocked, RED
/// verification failure or no valid OS.
const BOOT_TABLE: [(bool, bool, bool, bool, BootColor); 16] = [
    (false, false, false, false, BootColor::Red),
    (false, false, false, true, BootColor::Orange),
    (false, false, true, false, BootColor::Red),
    (false, false, true, true, BootColor::Orange),
    (false, true, false, false, BootColor::Red),
    (false, true, false, true, BootColor::Orange),
    (false, true, true, false, BootColor::Red),
    (false, true, true, true, BootColor::Orange),
    (true, false, false, false, BootColor::Red),
    (true, false, false, true, BootColor::Red),
    (true, false, true, false, BootColor::Red),
    (true, false, true, true, BootColor::Green),
    (true, true, false, false, BootColor::Red),
    (true, true, false, true, BootColor::Red),
    (true, true, true, false, BootColor::Red),
    (true, true, true, true, BootColor::Yellow),
];

fn boot_state_table() -> Verdict {
    let keys = OemKeys::default();
    let user_key = KeyId::new("owner", KeyRole::UserRoot);
    for (locked, user_root, verifies, os_found, want) in BOOT_TABLE {
        let mut spec = ImageSpec::new(SystemImage::android_default(1).to_bytes());
        spec.block_size = 256;
        if user_root {
            spec.vbmeta_signer = Some(user_key.clone());
        }
        let mut images = build_images(&keys, &spec, &DEFAULT_SCHEME);
        if !verifies {
            images.partitions.get_mut("boot").unwrap()[0] ^= 0x80;
        }
        if !os_found {
            images.partitions.insert("system".into(), Vec::new());
        }
        let mut chain = BootChain::new(keys.rom.clone());
        if user_root {
            chain.locked = false;
            chain.set_user_root(Some(user_key.clone())).map_err(|e| e.to_string())?;
        }
        chain.locked = locked;
        let r = verify_boot_chain(&chain, &images, &DEFAULT_SCHEME);
        if r.state.color != want || r.state.device_locked != locked || !r.state.is_consistent() {
            return Err(format!(
                "locked={locked} user_root={user_root} verifies={verifies} os={os_found}: got {} want {want}",
                r.state.color
            ));
        }
    }
    Ok("16/16 combinations match the committed table".into())
}

// 5. Hash-tree sensitivity.

fn flip_all<F: FnMut(&BootImages) -> bool>(
    images: &mut BootImages,
    select: fn(&mut BootImages) -> &mut Vec<u8>,
    mut still_green: F,
) -> (usize, usize) {
    let len = select(images).len();
    let (mut flips, mut accepts) = (0, 0);
    for byte in 0..len {
        for bit in 0..8 {
            select(images)[byte] ^= 1 << bit;
            flips += 1;
            accepts += usize::from(still_green(images));
            select(images)[byte] ^= 1 << bit;
        }
    }
    (flips, accepts)
}

fn hash_tree_sensitivity() -> Verdict {
    let start = Instant::now();
    let keys = OemKeys::default();
    let data: Vec<u8> = (0..BITFLIP_BLOCKS * BITFLIP_BLOCK_SIZE as usize).map(|i| (i * 31 % 251) as u8).collect();
    let mut spec = ImageSpec::new(data);
    spec.block_size = BITFLIP_BLOCK_SIZE;
    let mut images = build_images(&keys, &spec, &DEFAULT_SCHEME);
    let chain = BootChain::new(keys.rom.clone());
    let green = |i: &BootImages| verify_boot_chain(&chain, i, &DEFAULT_SCHEME).state.color == BootColor::Green;
    if !green(&images) {
        return Err("untampered image rejected".into());
    }
    let (block_flips, block_accepts) = flip_all(&mut images, |i| i.partitions.get_mut("system").unwrap(), green);
    let (node_flips, node_accepts) = flip_all(&mut images, |i| i.trees.get_mut("system").unwrap(), green);
    let false_rejects = usize::from(!green(&images));
    let took = start.elapsed();
    let accepts = block_accepts + node_accepts;
    let summary = format!(
        "{block_flips} block bits + {node_flips} tree bits, {accepts} false accepts, {false_rejects} false rejects, {took:.2?}"
    );
    if accepts > 0 || false_rejects > 0 || took >= BITFLIP_BUDGET {
        return Err(summary);
    }
    Ok(summary)
}

// 6. Rollback monotonicity.

fn images_at(keys: &OemKeys, index: u64, vendor_index: u64) -> BootImages {
    let mut spec = ImageSpec::new(SystemImage::android_default(1).to_bytes());
    spec.block_size = 256;
    spec.rollback_index = index;
    spec.vendor_rollback_index = vendor_index;
    build_images(keys, &spec, &DEFAULT_SCHEME)
}

fn rollback_monotonicity() -> Verdict {
    let keys = OemKeys::default();
    let cache: Vec<Vec<BootImages>> =
        (0..=ROLLBACK_MAX).map(|a| (0..=ROLLBACK_MAX).map(|b| images_at(&keys, a, b)).collect()).collect();
    let boot = |chain: &mut BootChain, a: u64, b: u64| {
        let r = verify_boot_chain(chain, &cache[a as usize][b as usize], &DEFAULT_SCHEME);
        chain.commit(&r);
        r.state.color
    };
    let mut pairs = 0;
    for stored in 0..=ROLLBACK_MAX {
        for image in 0..=ROLLBACK_MAX {
            let mut chain = BootChain::new(keys.rom.clone());
            boot(&mut chain, stored, 0);
            let got = boot(&mut chain, image, 0);
            let want = if image >= stored { BootColor::Green } else { BootColor::Red };
            if got != want || chain.rollback.get(0) != stored.max(image) {
                return Err(format!("stored={stored} image={image}: {got}, counter {}", chain.rollback.get(0)));
            }
            pairs += 1;
        }
    }
    let mut rng = rng(6);
    for n in 0..ROLLBACK_SEQUENCES {
        let mut chain = BootChain::new(keys.rom.clone());
        let mut max = [0u64; 2];
        for _ in 0..ROLLBACK_SEQ_LEN {
            let idx = [rng.gen_range(0..=ROLLBACK_MAX), rng.gen_range(0..=ROLLBACK_MAX)];
            let before = [chain.rollback.get(0), chain.rollback.get(1)];
            let color = boot(&mut chain, idx[0], idx[1]);
            let after = [chain.rollback.get(0), chain.rollback.get(1)];
            let older = idx[0] < max[0] || idx[1] < max[1];
            if older != (color == BootColor::Red) {
                return Err(format!("sequence {n}: indices {idx:?} against {max:?} booted {color}"));
            }
            if after[0] < before[0] || after[1] < before[1] {
                return Err(format!("sequence {n}: counters decreased {before:?} -> {after:?}"));
            }
            if !older {
                max = [max[0].max(idx[0]), max[1].max(idx[1])];
            }
            if after != max {
                return Err(format!("sequence {n}: counters {after:?}, expected {max:?}"));
            }
        }
    }
    Ok(format!("{pairs} index pairs, {ROLLBACK_SEQUENCES} random sequences of {ROLLBACK_SEQ_LEN} boots, 0 violations"))
}

// 7. Auth timers.

fn auth_timers() -> Verdict {
    let mut rng = rng(7);
    let mut base = world();
    base.enroll(0, ModalityKind::Pin, "1357", None).map_err(|e| e.to_string())?;
    base.enroll(0, ModalityKind::Biometric, "face", Some(BiometricClass::Strong)).map_err(|e| e.to_string())?;
    base.enroll(0, ModalityKind::TrustedDevice, "watch", None).map_err(|e| e.to_string())?;
    let (mut secondary, mut tertiary, mut first_rejected) = (0, 0, 0);
    let gaps = [60, 10 * 60, HOUR, 3 * HOUR, 4 * HOUR, 4 * HOUR + 1, 5 * HOUR, 24 * HOUR, 71 * HOUR, 72 * HOUR];
    for n in 0..AUTH_TRACES {
        let mut w = base.clone();
        w.reboot();
        // Oracle clock state, tracked from observed successes.
        let mut last_primary: Option<u64> = None;
        let mut last_any: Option<u64> = None;
        for _ in 0..AUTH_TRACE_LEN {
            let now = w.clock + gaps.choose(&mut rng).unwrap() + rng.gen_range(0..120);
            w.advance(now);
            if rng.gen_ratio(1, 12) {
                w.reboot();
                last_primary = None;
                last_any = None;
                continue;
            }
            let _ = w.lock(0);
            let (kind, secret) = *[
                (ModalityKind::Pin, "1357"),
                (ModalityKind::Biometric, "face"),
                (ModalityKind::TrustedDevice, "watch"),
            ]
            .choose(&mut rng)
            .unwrap();
            let ok = matches!(w.unlock(0, kind, secret), Ok(secmodel::authn::AuthOutcome::Success { .. }));
            let tier = kind.tier();
            if tier != Tier::Primary && last_primary.is_none() {
                if ok {
                    return Err(format!("trace {n}: {kind:?} unlocked before any primary since boot"));
                }
                first_rejected += 1;
            }
            if ok {
                let lp = last_primary.unwrap_or(now);
                match tier {
                    Tier::Secondary if now - lp >= 72 * HOUR => {
                        return Err(format!("trace {n}: secondary success {}s after primary", now - lp))
                    }
                    Tier::Tertiary if now - last_any.unwrap_or(lp) > 4 * HOUR => {
                        return Err(format!("trace {n}: tertiary success after {}s idle", now - last_any.unwrap()))
                    }
                    Tier::Secondary => secondary += 1,
                    Tier::Tertiary => tertiary += 1,
                    Tier::Primary => last_primary = Some(now),
                }
                last_any = Some(now);
            }
        }
    }
    Ok(format!(
        "{AUTH_TRACES} traces, {secondary} secondary / {tertiary} tertiary successes checked, {first_rejected} first-unlock rejections"
    ))
}

// 8. Lineage.

fn lineage_matrix() -> Verdict {
    let k = KeyId::apk;
    let s: &dyn SignatureScheme = &DEFAULT_SCHEME;
    let rotated = SigningLineage::through(&[k("K1"), k("K2")], s);
    let mut forged = rotated.clone();
    forged.entries[1].proof = Some(s.sign(&k("K2"), b"self-signed link"));
    let cases: [(&str, KeyId, Option<SigningLineage>, bool); 4] = [
        ("same key", k("K1"), None, true),
        ("rotated with lineage", k("K2"), Some(rotated.clone()), true),
        ("rotated without lineage", k("K2"), None, false),
        ("forged link", k("K2"), Some(forged), false),
    ];
    let mut row = Vec::new();
    for (name, key, lineage, want) in cases {
        let mut w = world();
        w.install(0, k("K1"), Manifest::new("com.w"), None).map_err(|e| e.to_string())?;
        let got = match w.install(0, key, Manifest::new("com.w"), lineage) {
            Ok(out) if out.updated => true,
            Ok(_) => return Err(format!("{name}: installed as a new package")),
            Err(WorldError::UpdateRejected(_)) => false,
            Err(e) => return Err(format!("{name}: {e}")),
        };
        if got != want {
            return Err(format!("{name}: got {}, want {}", allow(got), allow(want)));
        }
        row.push(format!("{name}={}", allow(got)));
    }
    Ok(row.join(", "))
}

fn allow(b: bool) -> &'static str {
    if b {
        "allow"
    } else {
        "deny"
    }
}

// 9. Corpus determinism.

fn corpus_determinism() -> Verdict {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let first = check_dir(&dir, false).map_err(|e| e.to_string())?;
    let second = check_dir(&dir, false).map_err(|e| e.to_string())?;
    if first.len() < MIN_CORPUS {
        return Err(format!("{} scenarios, need {MIN_CORPUS}", first.len()));
    }
    for (a, b) in first.iter().zip(&second) {
        if a.status != Status::Pass {
            return Err(format!("{}: {:?}", a.path.display(), a.status));
        }
        if a.output != b.output {
            return Err(format!("{}: two runs differ", a.path.display()));
        }
    }
    let mut tags = std::collections::BTreeSet::new();
    for e in &first {
        let sc = parse_scenario(&std::fs::read_to_string(&e.path).unwrap()).unwrap();
        tags.extend(sc.tags);
    }
    let missing: Vec<&str> = ThreatTag::ALL.iter().filter(|t| !tags.contains(t)).map(|t| t.as_str()).collect();
    if !missing.is_empty() {
        return Err(format!("tags not covered: {missing:?}"));
    }
    Ok(format!("{} scenarios byte-identical to goldens over two runs, {} tags covered", first.len(), tags.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 veto property", veto_property),
        ("2 safe reset", safe_reset),
        ("3 sandbox separation", sandbox_separation),
        ("4 boot-state table", boot_state_table),
        ("5 hash-tree sensitivity", hash_tree_sensitivity),
        ("6 rollback monotonicity", rollback_monotonicity),
        ("7 auth timers", auth_timers),
        ("8 lineage matrix", lineage_matrix),
        ("9 corpus determinism", corpus_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
