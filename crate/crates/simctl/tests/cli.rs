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


use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn simctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simctl")).args(args).output().expect("simctl runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_exit_codes() {
    let d = TempDir::new().unwrap();
    let pass = write(d.path(), "pass.scn", "t=0 install app=com.a key=K\nt=1 assert installed app=com.a\n");
    let fail = write(d.path(), "fail.scn", "t=0 install app=com.a key=K\nt=1 assert installed app=com.b\n");
    let bad = write(d.path(), "bad.scn", "t=0 reboot\nt=1 frobnicate\n");
    assert_eq!(code(&simctl(&["run", &pass])), 0);

    let o = simctl(&["run", &fail]);
    assert_eq!(code(&o), 1);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("FAIL #1 (line 2)"), "{text}");

    let o = simctl(&["run", &bad]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8(o.stderr).unwrap().contains("line 2: unknown verb `frobnicate`"));
    assert_eq!(code(&simctl(&["run", "/nonexistent.scn"])), 2);
}

#[test]
fn empty_scenario_passes_with_empty_trace() {
    let d = TempDir::new().unwrap();
    let p = write(d.path(), "empty.scn", "# nothing\n");
    let o = simctl(&["run", &p, "--format", "machine"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], r#"{"scenario":"","tags":[]}"#);
    assert!(lines[1].starts_with(r#"{"summary":{"events":0,"asserts":0,"failed":0"#));
}

#[test]
fn machine_output_is_stable_and_seed_sensitive() {
    let d = TempDir::new().unwrap();
    let p = write(d.path(), "s.scn", "world seed=3\nt=0 install app=com.a key=K\nt=5 reboot\n");
    let a = simctl(&["run", &p, "--format", "machine"]).stdout;
    let b = simctl(&["run", &p, "--format", "machine"]).stdout;
    assert_eq!(a, b);
    let c = simctl(&["run", &p, "--format", "machine", "--seed", "4"]).stdout;
    assert_ne!(a, c);
}

#[test]
fn check_compares_goldens() {
    let d = TempDir::new().unwrap();
    write(d.path(), "a.scn", "t=0 install app=com.a key=K\n");
    assert_eq!(code(&simctl(&["check", d.path().to_str().unwrap()])), 1, "missing golden");
    assert_eq!(code(&simctl(&["check", d.path().to_str().unwrap(), "--bless"])), 0);
    assert_eq!(code(&simctl(&["check", d.path().to_str().unwrap()])), 0);

    let golden = d.path().join("a.golden");
    let edited = fs::read_to_string(&golden).unwrap().replace("uid=10002", "uid=10003");
    fs::write(&golden, edited).unwrap();
    let o = simctl(&["check", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stdout).unwrap().contains("MISMATCH golden line 2"));

    write(d.path(), "b.scn", "t=0 bogus\n");
    assert_eq!(code(&simctl(&["check", d.path().to_str().unwrap()])), 2);
}

#[test]
fn avb_fixture_verify_and_tamper() {
    let d = TempDir::new().unwrap();
    let dir = d.path().join("img");
    let dir_s = dir.to_str().unwrap();
    assert_eq!(code(&simctl(&["avb", "fixture", dir_s])), 0);
    for f in ["device.json", "stage0.img", "stage1.img", "vbmeta.img", "vbmeta_vendor.img", "system.img", "system.tree"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let o = simctl(&["avb", "verify", dir_s]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("state=GREEN locked=true"));

    let o = simctl(&["avb", "attest", dir_s, "--challenge", "nonce-1"]);
    assert_eq!(code(&o), 0);
    let rec: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rec["verified_boot_state"], "GREEN");
    assert_eq!(rec["challenge"], "nonce-1");

    let sys = dir.join("system.img");
    let mut bytes = fs::read(&sys).unwrap();
    bytes[10] ^= 0x04;
    fs::write(&sys, bytes).unwrap();
    let o = simctl(&["avb", "verify", dir_s]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8(o.stdout).unwrap().contains("issue dm-verity-corruption system"));
    assert_eq!(code(&simctl(&["avb", "attest", dir_s])), 3);
}

#[test]
fn avb_unlocked_fixture_is_orange() {
    let d = TempDir::new().unwrap();
    let dir = d.path().join("img");
    let dir_s = dir.to_str().unwrap();
    assert_eq!(code(&simctl(&["avb", "fixture", dir_s, "--unlocked"])), 0);
    let o = simctl(&["avb", "verify", dir_s]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("state=ORANGE locked=false"));
    assert_eq!(code(&simctl(&["avb", "verify", d.path().join("missing").to_str().unwrap()])), 3);
}
