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


//! Line-based scenario language.
//!
//! ```text
//! # comment
//! scenario name=share-image
//! tags T.A2 T.D1
//! world seed=7 os=1 weaver=1
//! t=0 install app=com.gallery key=G perms=READ_EXTERNAL_STORAGE
//! t=5 access subject=com.gallery path=/storage/emulated/0/DCIM/a.jpg mode=read threat=T.A2
//! t=5 assert access subject=com.gallery path=/storage/emulated/0/DCIM/b.jpg mode=read expect=deny
//! ```
//!
//! Values may be double-quoted to contain spaces. Every event may carry a
//! `threat=` tag.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use secmodel::authn::{Backing, BiometricClass, CeStatus, ModalityKind, Strength};
use secmodel::boot::BootColor;
use secmodel::consent::{AccessMode, ConsentResponse, Decision};
use secmodel::party::PartyId;
use secmodel::permissions::{PermStatus, UserResponse};
use secmodel::sandbox::Mechanism;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ThreatTag {
    #[serde(rename = "T.P1")]
    P1,
    #[serde(rename = "T.P2")]
    P2,
    #[serde(rename = "T.P3")]
    P3,
    #[serde(rename = "T.P4")]
    P4,
    #[serde(rename = "T.N1")]
    N1,
    #[serde(rename = "T.N2")]
    N2,
    #[serde(rename = "T.A1")]
    A1,
    #[serde(rename = "T.A2")]
    A2,
    #[serde(rename = "T.A3")]
    A3,
    #[serde(rename = "T.A4")]
    A4,
    #[serde(rename = "T.A5")]
    A5,
    #[serde(rename = "T.A6")]
    A6,
    #[serde(rename = "T.A7")]
    A7,
    #[serde(rename = "T.D1")]
    D1,
    #[serde(rename = "T.D2")]
    D2,
}

impl ThreatTag {
    pub const ALL: [ThreatTag; 15] = [
        ThreatTag::P1,
        ThreatTag::P2,
        ThreatTag::P3,
        ThreatTag::P4,
        ThreatTag::N1,
        ThreatTag::N2,
        ThreatTag::A1,
        ThreatTag::A2,
        ThreatTag::A3,
        ThreatTag::A4,
        ThreatTag::A5,
        ThreatTag::A6,
        ThreatTag::A7,
        ThreatTag::D1,
        ThreatTag::D2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ThreatTag::P1 => "T.P1",
            ThreatTag::P2 => "T.P2",
            ThreatTag::P3 => "T.P3",
            ThreatTag::P4 => "T.P4",
            ThreatTag::N1 => "T.N1",
            ThreatTag::N2 => "T.N2",
            ThreatTag::A1 => "T.A1",
            ThreatTag::A2 => "T.A2",
            ThreatTag::A3 => "T.A3",
            ThreatTag::A4 => "T.A4",
            ThreatTag::A5 => "T.A5",
            ThreatTag::A6 => "T.A6",
            ThreatTag::A7 => "T.A7",
            ThreatTag::D1 => "T.D1",
            ThreatTag::D2 => "T.D2",
        }
    }
}

impl fmt::Display for ThreatTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThreatTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ThreatTag::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| format!("unknown threat tag `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown verb `{verb}`")]
    UnknownVerb { line: usize, verb: String },
    #[error("line {line}: time {time} is before {prev}")]
    NonMonotonicTime { line: usize, time: u64, prev: u64 },
    #[error("line {line}: unknown threat tag `{tag}`")]
    UnknownTag { line: usize, tag: String },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::UnknownVerb { line, .. }
            | ParseError::NonMonotonicTime { line, .. }
            | ParseError::UnknownTag { line, .. } => *line,
        }
    }
}

/// Initial device: hardware seed, OS version, TRH-backed verification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub seed: u64,
    pub os_version: u32,
    pub weaver: bool,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self { seed: 0, os_version: 1, weaver: true }
    }
}

/// Process an access is made as.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subject {
    Root,
    System,
    /// Isolated process of a user.
    Isolated(u32),
    App { package: String, user: u32 },
}

impl FromStr for Subject {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "root" => Subject::Root,
            "system" => Subject::System,
            _ => {
                let (name, user) = match s.split_once('@') {
                    Some((n, u)) => (n, u.parse().map_err(|_| format!("bad user in `{s}`"))?),
                    None => (s, 0),
                };
                if name == "isolated" {
                    Subject::Isolated(user)
                } else if name.is_empty() {
                    return Err("empty subject".into());
                } else {
                    Subject::App { package: name.to_string(), user }
                }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageKind {
    Oem,
    Custom,
}

/// What an `assert` event checks. All of them are pure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assertion {
    Access { subject: Subject, path: String, mode: AccessMode, expect: Decision, mechanism: Option<Mechanism> },
    /// `status=None` asserts the permission is not held at all.
    Permission { app: String, user: u32, perm: String, status: Option<PermStatus> },
    BootState { color: BootColor, locked: Option<bool> },
    Ce { user: u32, status: CeStatus },
    Exists { path: String, content: Option<String> },
    Absent { path: String },
    Installed { app: String, user: u32, expect: bool },
    Prompts { count: u64 },
    Frp { pending: bool },
    Visible { app: String, user: u32, includes: Vec<String>, excludes: Vec<String> },
    /// Outcome of the previous non-assert event.
    Last { expect: String, reason: Option<String> },
    Invariants,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Op {
    Install {
        app: String,
        user: u32,
        key: String,
        perms: Vec<String>,
        target: u32,
        shared: Option<String>,
        queries: Vec<String>,
        declares: Vec<String>,
        lineage: Option<Vec<String>>,
        forge_lineage: bool,
    },
    Uninstall { app: String, user: u32 },
    Grant { app: String, user: u32, path: String, mode: AccessMode },
    Respond { party: PartyId, value: ConsentResponse },
    Request { app: String, user: u32, perm: String, response: UserResponse },
    SettingsToggle { app: String, user: u32, perm: String, on: bool },
    Revoke { app: String, user: u32, perm: String },
    Check { app: String, user: u32, perm: String },
    Access { subject: Subject, path: String, mode: AccessMode },
    Create { subject: Subject, path: String, content: String },
    Share { from: String, to: String, user: u32, path: String },
    QueryPackages { app: String, user: u32, filter: Option<String> },
    Enroll { user: u32, modality: ModalityKind, secret: String, class: Option<BiometricClass> },
    Lock { user: u32 },
    Unlock { user: u32, modality: ModalityKind, secret: String },
    Reboot,
    Flash { image: ImageKind, key: Option<String>, version: u32, rollback: u64, set_root: bool },
    Tamper { partition: String, offset: usize },
    UnlockBootloader,
    Relock,
    FactoryReset { settings: bool },
    AddAccount { account: String },
    Setup { account: Option<String> },
    Ota { version: u32, rollback: u64 },
    TrhUpdate { version: u32, signed: bool, credential: Option<String> },
    AddUser { id: u32 },
    CreateProfile { dpc: String, user: u32, deny: Vec<String> },
    ResetParty { party: PartyId },
    SetForeground { app: String, value: bool, service: Option<bool> },
    Confirm { message: String, button: bool },
    Keygen {
        app: String,
        user: u32,
        alias: String,
        auth_bound: bool,
        backing: Backing,
        presence: bool,
        validity: u64,
        min_strength: Strength,
    },
    UseKey { app: String, user: u32, alias: String, presence: bool },
    Attest { challenge: String },
    Exploit { kind: String },
    Assert(Assertion),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub line: usize,
    pub time: u64,
    /// Verb as written, with the assertion kind for `assert`.
    pub verb: String,
    pub threat: Option<ThreatTag>,
    pub op: Op,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub tags: BTreeSet<ThreatTag>,
    pub world: WorldSpec,
    pub events: Vec<Event>,
}

pub const VERBS: &[&str] = &[
    "install",
    "uninstall",
    "grant",
    "respond",
    "request",
    "settings-toggle",
    "revoke",
    "check",
    "access",
    "create",
    "share",
    "query-packages",
    "enroll",
    "lock",
    "unlock",
    "reboot",
    "flash",
    "tamper",
    "unlock-bootloader",
    "relock",
    "factory-reset",
    "add-account",
    "setup",
    "ota",
    "trh-update",
    "add-user",
    "create-profile",
    "reset-party",
    "set-foreground",
    "confirm",
    "keygen",
    "use-key",
    "attest",
    "exploit",
    "assert",
];

/// Splits on whitespace; double quotes group, `\"` escapes.
fn tokenize(line: &str, n: usize) -> Result<Vec<String>, ParseError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut any = false;
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                quoted = !quoted;
                any = true;
            }
            '\\' if quoted => match chars.next() {
                Some(e) => cur.push(e),
                None => break,
            },
            c if c.is_whitespace() && !quoted => {
                if any {
                    out.push(std::mem::take(&mut cur));
                    any = false;
                }
            }
            c => {
                cur.push(c);
                any = true;
            }
        }
    }
    if quoted {
        return Err(ParseError::Syntax { line: n, msg: "unterminated quote".into() });
    }
    if any {
        out.push(cur);
    }
    Ok(out)
}

/// Strips a trailing `#` comment that is not inside quotes.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

struct Args {
    line: usize,
    map: BTreeMap<String, String>,
}

fn parse_kebab<T: DeserializeOwned>(s: &str) -> Option<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

/// Expands short permission names: `CAMERA` means
/// `android.permission.CAMERA`.
pub fn perm_name(s: &str) -> String {
    if s.contains('.') {
        s.to_string()
    } else {
        format!("android.permission.{s}")
    }
}

fn list(s: &str) -> Vec<String> {
    s.split(',').filter(|x| !x.is_empty()).map(str::to_string).collect()
}

impl Args {
    fn new(line: usize, toks: &[String]) -> Result<Self, ParseError> {
        let mut map = BTreeMap::new();
        for t in toks {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| ParseError::Syntax { line, msg: format!("expected key=value, got `{t}`") })?;
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ParseError::Syntax { line, msg: format!("duplicate key `{k}`") });
            }
        }
        Ok(Self { line, map })
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, msg: msg.into() }
    }

    fn opt(&mut self, k: &str) -> Option<String> {
        self.map.remove(k)
    }

    fn req(&mut self, k: &str) -> Result<String, ParseError> {
        self.opt(k).ok_or_else(|| self.err(format!("missing `{k}=`")))
    }

    fn value<T>(&self, k: &str, v: &str, f: impl FnOnce(&str) -> Option<T>) -> Result<T, ParseError> {
        f(v).ok_or_else(|| self.err(format!("bad value `{v}` for `{k}`")))
    }

    fn req_with<T>(&mut self, k: &str, f: impl FnOnce(&str) -> Option<T>) -> Result<T, ParseError> {
        let v = self.req(k)?;
        self.value(k, &v, f)
    }

    fn opt_with<T>(&mut self, k: &str, f: impl FnOnce(&str) -> Option<T>) -> Result<Option<T>, ParseError> {
        match self.opt(k) {
            None => Ok(None),
            Some(v) => self.value(k, &v, f).map(Some),
        }
    }

    fn num<T: FromStr>(&mut self, k: &str) -> Result<T, ParseError> {
        self.req_with(k, |v| v.parse().ok())
    }

    fn num_or<T: FromStr>(&mut self, k: &str, default: T) -> Result<T, ParseError> {
        Ok(self.opt_with(k, |v| v.parse().ok())?.unwrap_or(default))
    }

    fn flag(&mut self, k: &str) -> Result<bool, ParseError> {
        Ok(self.opt_with(k, parse_bool)?.unwrap_or(false))
    }

    fn user(&mut self) -> Result<u32, ParseError> {
        self.num_or("user", 0)
    }

    fn parsed<T: FromStr>(&mut self, k: &str) -> Result<T, ParseError> {
        self.req_with(k, |v| v.parse().ok())
    }

    fn finish(self) -> Result<(), ParseError> {
        match self.map.keys().next() {
            Some(k) => Err(self.err(format!("unexpected key `{k}`"))),
            None => Ok(()),
        }
    }
}

fn parse_op(verb: &str, rest: &[String], line: usize) -> Result<(String, Op), ParseError> {
    if verb == "assert" {
        let kind = rest.first().ok_or(ParseError::Syntax { line, msg: "assert needs a kind".into() })?;
        let mut a = Args::new(line, &rest[1..])?;
        let assertion = parse_assertion(kind, &mut a)?;
        a.finish()?;
        return Ok((format!("assert {kind}"), Op::Assert(assertion)));
    }
    let mut a = Args::new(line, rest)?;
    let op = match verb {
        "install" => Op::Install {
            app: a.req("app")?,
            user: a.user()?,
            key: a.req("key")?,
            perms: a.opt("perms").map(|p| list(&p).iter().map(|s| perm_name(s)).collect()).unwrap_or_default(),
            target: a.num_or("target", 30)?,
            shared: a.opt("shared"),
            queries: a.opt("queries").map(|q| list(&q)).unwrap_or_default(),
            declares: a.opt("declares").map(|q| list(&q)).unwrap_or_default(),
            lineage: a.opt("lineage").map(|l| l.split('>').map(str::to_string).collect()),
            forge_lineage: a.flag("forge-lineage")?,
        },
        "uninstall" => Op::Uninstall { app: a.req("app")?, user: a.user()? },
        "grant" => Op::Grant { app: a.req("app")?, user: a.user()?, path: a.req("path")?, mode: a.parsed("mode")? },
        "respond" => Op::Respond {
            party: PartyId::new(a.req("party")?),
            value: a.parsed("value")?,
        },
        "request" => Op::Request {
            app: a.req("app")?,
            user: a.user()?,
            perm: perm_name(&a.req("perm")?),
            response: a.parsed("response")?,
        },
        "settings-toggle" => Op::SettingsToggle {
            app: a.req("app")?,
            user: a.user()?,
            perm: perm_name(&a.req("perm")?),
            on: a.req_with("value", parse_bool)?,
        },
        "revoke" => Op::Revoke { app: a.req("app")?, user: a.user()?, perm: perm_name(&a.req("perm")?) },
        "check" => Op::Check { app: a.req("app")?, user: a.user()?, perm: perm_name(&a.req("perm")?) },
        "access" => Op::Access { subject: a.parsed("subject")?, path: a.req("path")?, mode: a.parsed("mode")? },
        "create" => Op::Create {
            subject: a.parsed("subject")?,
            path: a.req("path")?,
            content: a.opt("content").unwrap_or_default(),
        },
        "share" => Op::Share { from: a.req("from")?, to: a.req("to")?, user: a.user()?, path: a.req("path")? },
        "query-packages" => Op::QueryPackages { app: a.req("app")?, user: a.user()?, filter: a.opt("filter") },
        "enroll" => Op::Enroll {
            user: a.user()?,
            modality: a.parsed("modality")?,
            secret: a.req("secret")?,
            class: a.opt_with("class", |v| v.parse().ok())?,
        },
        "lock" => Op::Lock { user: a.user()? },
        "unlock" => Op::Unlock { user: a.user()?, modality: a.parsed("modality")?, secret: a.req("secret")? },
        "reboot" => Op::Reboot,
        "flash" => Op::Flash {
            image: a.req_with("image", parse_kebab)?,
            key: a.opt("key"),
            version: a.num_or("version", 1)?,
            rollback: a.num_or("rollback", 0)?,
            set_root: a.flag("set-root")?,
        },
        "tamper" => Op::Tamper { partition: a.req("partition")?, offset: a.num("offset")? },
        "unlock-bootloader" => Op::UnlockBootloader,
        "relock" => Op::Relock,
        "factory-reset" => Op::FactoryReset {
            settings: match a.opt("via").as_deref() {
                None | Some("recovery") => false,
                Some("settings") => true,
                Some(v) => return Err(a.err(format!("bad value `{v}` for `via`"))),
            },
        },
        "add-account" => Op::AddAccount { account: a.req("account")? },
        "setup" => Op::Setup { account: a.opt("account") },
        "ota" => Op::Ota { version: a.num("version")?, rollback: a.num_or("rollback", 0)? },
        "trh-update" => Op::TrhUpdate {
            version: a.num("version")?,
            signed: a.opt_with("signed", parse_bool)?.unwrap_or(true),
            credential: a.opt("credential"),
        },
        "add-user" => Op::AddUser { id: a.num("id")? },
        "create-profile" => Op::CreateProfile {
            dpc: a.req("dpc")?,
            user: a.user()?,
            deny: a.opt("deny").map(|d| list(&d).iter().map(|s| perm_name(s)).collect()).unwrap_or_default(),
        },
        "reset-party" => Op::ResetParty { party: PartyId::new(a.req("party")?) },
        "set-foreground" => Op::SetForeground {
            app: a.req("app")?,
            value: a.req_with("value", parse_bool)?,
            service: a.opt_with("service", parse_bool)?,
        },
        "confirm" => Op::Confirm { message: a.req("message")?, button: a.req_with("button", parse_bool)? },
        "keygen" => Op::Keygen {
            app: a.req("app")?,
            user: a.user()?,
            alias: a.req("alias")?,
            auth_bound: a.flag("auth-bound")?,
            backing: a.opt_with("backing", parse_kebab)?.unwrap_or(Backing::Tee),
            presence: a.flag("presence")?,
            validity: a.num_or("validity", 300)?,
            min_strength: a.opt_with("min-strength", |v| v.parse().ok())?.unwrap_or(Strength::Strong),
        },
        "use-key" => Op::UseKey { app: a.req("app")?, user: a.user()?, alias: a.req("alias")?, presence: a.flag("presence")? },
        "attest" => Op::Attest { challenge: a.opt("challenge").unwrap_or_default() },
        "exploit" => Op::Exploit {
            kind: a.req_with("kind", |v| (v == "kernel").then(|| v.to_string()))?,
        },
        _ => return Err(ParseError::UnknownVerb { line, verb: verb.into() }),
    };
    a.finish()?;
    Ok((verb.to_string(), op))
}

fn parse_assertion(kind: &str, a: &mut Args) -> Result<Assertion, ParseError> {
    Ok(match kind {
        "access" => Assertion::Access {
            subject: a.parsed("subject")?,
            path: a.req("path")?,
            mode: a.parsed("mode")?,
            expect: a.req_with("expect", parse_kebab)?,
            mechanism: a.opt_with("mechanism", |v| v.parse().ok())?,
        },
        "permission" => Assertion::Permission {
            app: a.req("app")?,
            user: a.user()?,
            perm: perm_name(&a.req("perm")?),
            status: a.req_with("status", |v| if v == "none" { Some(None) } else { parse_kebab(v).map(Some) })?,
        },
        "boot-state" => Assertion::BootState {
            color: a.parsed("color")?,
            locked: a.opt_with("locked", parse_bool)?,
        },
        "ce" => Assertion::Ce { user: a.user()?, status: a.req_with("status", parse_kebab)? },
        "exists" => Assertion::Exists { path: a.req("path")?, content: a.opt("content") },
        "absent" => Assertion::Absent { path: a.req("path")? },
        "installed" => Assertion::Installed {
            app: a.req("app")?,
            user: a.user()?,
            expect: a.opt_with("expect", parse_bool)?.unwrap_or(true),
        },
        "prompts" => Assertion::Prompts { count: a.num("count")? },
        "frp" => Assertion::Frp { pending: a.req_with("pending", parse_bool)? },
        "visible" => Assertion::Visible {
            app: a.req("app")?,
            user: a.user()?,
            includes: a.opt("includes").map(|v| list(&v)).unwrap_or_default(),
            excludes: a.opt("excludes").map(|v| list(&v)).unwrap_or_default(),
        },
        "last" => Assertion::Last { expect: a.req("expect")?, reason: a.opt("reason") },
        "invariants" => Assertion::Invariants,
        _ => return Err(a.err(format!("unknown assertion `{kind}`"))),
    })
}

fn parse_tag(s: &str, line: usize) -> Result<ThreatTag, ParseError> {
    s.parse().map_err(|_| ParseError::UnknownTag { line, tag: s.into() })
}

/// Parses a scenario; the first error wins.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut sc = Scenario { name: String::new(), tags: BTreeSet::new(), world: WorldSpec::default(), events: Vec::new() };
    let mut prev = 0u64;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks = tokenize(strip_comment(raw), line)?;
        let Some(head) = toks.first() else { continue };
        match head.as_str() {
            "scenario" => {
                let mut a = Args::new(line, &toks[1..])?;
                sc.name = a.req("name")?;
                a.finish()?;
            }
            "tags" => {
                for t in &toks[1..] {
                    sc.tags.insert(parse_tag(t, line)?);
                }
            }
            "world" => {
                let mut a = Args::new(line, &toks[1..])?;
                sc.world.seed = a.num_or("seed", sc.world.seed)?;
                sc.world.os_version = a.num_or("os", sc.world.os_version)?;
                sc.world.weaver = a.opt_with("weaver", parse_bool)?.unwrap_or(sc.world.weaver);
                a.finish()?;
            }
            t if t.starts_with("t=") => {
                let time: u64 = t[2..]
                    .parse()
                    .map_err(|_| ParseError::Syntax { line, msg: format!("bad time `{t}`") })?;
                if time < prev {
                    return Err(ParseError::NonMonotonicTime { line, time, prev });
                }
                prev = time;
                let verb = toks.get(1).ok_or(ParseError::Syntax { line, msg: "missing verb".into() })?;
                if !VERBS.contains(&verb.as_str()) {
                    return Err(ParseError::UnknownVerb { line, verb: verb.clone() });
                }
                let mut rest: Vec<String> = toks[2..].to_vec();
                let mut threat = None;
                if let Some(pos) = rest.iter().position(|t| t.starts_with("threat=")) {
                    let t = rest.remove(pos);
                    let tag = parse_tag(&t["threat=".len()..], line)?;
                    sc.tags.insert(tag);
                    threat = Some(tag);
                }
                let (verb, op) = parse_op(verb, &rest, line)?;
                sc.events.push(Event { line, time, verb, threat, op });
            }
            other => return Err(ParseError::Syntax { line, msg: format!("unexpected `{other}`") }),
        }
    }
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn install_line() {
        let sc = parse_scenario("t=0 install app=com.a key=K1\n").unwrap();
        assert_eq!(sc.events.len(), 1);
        assert_eq!(sc.events[0].verb, "install");
        match &sc.events[0].op {
            Op::Install { app, key, user, target, .. } => {
                assert_eq!((app.as_str(), key.as_str(), *user, *target), ("com.a", "K1", 0, 30));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_scenario("t=5 reboot\nt=1 reboot\n").unwrap_err();
        assert_eq!(e, ParseError::NonMonotonicTime { line: 2, time: 1, prev: 5 });
        let e = parse_scenario("t=0 reboot\nt=1 frobnicate\n").unwrap_err();
        assert_eq!(e, ParseError::UnknownVerb { line: 2, verb: "frobnicate".into() });
        let e = parse_scenario("tags T.X9\n").unwrap_err();
        assert!(matches!(e, ParseError::UnknownTag { line: 1, .. }));
        let e = parse_scenario("t=0 install app=a\n").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 1, .. }));
        let e = parse_scenario("t=0 reboot extra=1\n").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 1, .. }));
        let e = parse_scenario("t=0 reboot threat=T.Z1\n").unwrap_err();
        assert!(matches!(e, ParseError::UnknownTag { line: 1, .. }));
    }

    #[test]
    fn quotes_comments_and_tags() {
        let sc = parse_scenario(
            "# header\nscenario name=x\ntags T.P1\nt=0 confirm message=\"pay 10 # EUR\" button=1 threat=T.A5 # tail\n",
        )
        .unwrap();
        assert_eq!(sc.name, "x");
        assert_eq!(sc.tags, [ThreatTag::P1, ThreatTag::A5].into());
        assert_eq!(sc.events[0].op, Op::Confirm { message: "pay 10 # EUR".into(), button: true });
    }

    #[test]
    fn assertions() {
        let sc = parse_scenario(
            "t=0 assert access subject=com.a@10 path=/x mode=write expect=deny mechanism=DAC\n\
             t=0 assert permission app=com.a perm=CAMERA status=none\n\
             t=0 assert ce status=unrecoverable\n",
        )
        .unwrap();
        assert_eq!(sc.events[0].verb, "assert access");
        assert_eq!(
            sc.events[0].op,
            Op::Assert(Assertion::Access {
                subject: Subject::App { package: "com.a".into(), user: 10 },
                path: "/x".into(),
                mode: AccessMode::Write,
                expect: Decision::Deny,
                mechanism: Some(Mechanism::Dac),
            })
        );
        assert_eq!(
            sc.events[1].op,
            Op::Assert(Assertion::Permission {
                app: "com.a".into(),
                user: 0,
                perm: "android.permission.CAMERA".into(),
                status: None
            })
        );
    }

    #[test]
    fn empty_text_is_an_empty_scenario() {
        let sc = parse_scenario("").unwrap();
        assert!(sc.events.is_empty() && sc.tags.is_empty());
    }

    #[test]
    fn every_verb_is_known_to_the_parser() {
        for v in VERBS {
            let e = parse_scenario(&format!("t=0 {v}\n"));
            assert!(!matches!(e, Err(ParseError::UnknownVerb { .. })), "{v}");
        }
    }
}
