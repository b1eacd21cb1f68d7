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


//! Runs a directory of `.scn` files against their `.golden` traces.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::dsl::parse_scenario;
use crate::report::{exit_code, render, Format};
use crate::run::run;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    /// Assertion failures; indices of the failed events.
    Failed(Vec<usize>),
    GoldenMismatch { line: usize },
    MissingGolden,
    ParseError(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub path: PathBuf,
    pub status: Status,
    pub output: String,
}

pub fn scenario_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scn"))
        .collect();
    files.sort();
    Ok(files)
}

fn golden_path(scn: &Path) -> PathBuf {
    scn.with_extension("golden")
}

/// Runs one scenario file and compares it to its golden trace; `bless`
/// rewrites the golden file instead.
pub fn check_file(path: &Path, bless: bool) -> io::Result<Entry> {
    let text = fs::read_to_string(path)?;
    let sc = match parse_scenario(&text) {
        Ok(sc) => sc,
        Err(e) => return Ok(Entry { path: path.into(), status: Status::ParseError(e.to_string()), output: String::new() }),
    };
    let trace = run(&sc, None);
    let output = render(&trace, Format::Machine);
    let golden = golden_path(path);
    let status = if bless {
        fs::write(&golden, &output)?;
        Status::Pass
    } else {
        match fs::read_to_string(&golden) {
            Err(e) if e.kind() == io::ErrorKind::NotFound => Status::MissingGolden,
            Err(e) => return Err(e),
            Ok(want) if want != output => {
                let line = want.lines().zip(output.lines()).position(|(a, b)| a != b).unwrap_or(0) + 1;
                Status::GoldenMismatch { line }
            }
            Ok(_) => Status::Pass,
        }
    };
    let status = match (status, exit_code(&trace)) {
        (Status::Pass, 1) => Status::Failed(trace.failures().map(|r| r.index).collect()),
        (s, _) => s,
    };
    Ok(Entry { path: path.into(), status, output })
}

pub fn check_dir(dir: &Path, bless: bool) -> io::Result<Vec<Entry>> {
    scenario_files(dir)?.iter().map(|p| check_file(p, bless)).collect()
}

/// 0 all pass, 2 if any file failed to parse, 1 otherwise.
pub fn exit_code_of(entries: &[Entry]) -> i32 {
    if entries.iter().any(|e| matches!(e.status, Status::ParseError(_))) {
        2
    } else if entries.iter().all(|e| e.status == Status::Pass) {
        0
    } else {
        1
    }
}
