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


//! Text and machine-readable trace reports.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use crate::run::{Outcome, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ThreatCount {
    pub denials: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub events: usize,
    pub asserts: usize,
    pub failed: usize,
    /// Indices of failed assertions.
    pub failures: Vec<usize>,
    pub denials: usize,
    /// Denials and failures per threat tag; `untagged` collects the rest.
    pub by_threat: BTreeMap<String, ThreatCount>,
}

pub fn summarize(trace: &Trace) -> Summary {
    let mut by_threat: BTreeMap<String, ThreatCount> = BTreeMap::new();
    let mut s = Summary {
        events: trace.records.len(),
        asserts: 0,
        failed: 0,
        failures: Vec::new(),
        denials: 0,
        by_threat: BTreeMap::new(),
    };
    for r in &trace.records {
        let tag = r.threat.map_or("untagged".to_string(), |t| t.to_string());
        match r.outcome {
            Outcome::Pass => s.asserts += 1,
            Outcome::Fail => {
                s.asserts += 1;
                s.failed += 1;
                s.failures.push(r.index);
                by_threat.entry(tag).or_default().failures += 1;
            }
            Outcome::Deny => {
                s.denials += 1;
                by_threat.entry(tag).or_default().denials += 1;
            }
            Outcome::Allow | Outcome::Ok => {}
        }
    }
    s.by_threat = by_threat;
    s
}

/// 0 when every assertion passed, 1 otherwise.
pub fn exit_code(trace: &Trace) -> i32 {
    i32::from(trace.failures().next().is_some())
}

#[derive(Serialize)]
struct Header<'a> {
    scenario: &'a str,
    tags: Vec<&'static str>,
}

#[derive(Serialize)]
struct Footer<'a> {
    summary: &'a Summary,
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

pub fn render(trace: &Trace, format: Format) -> String {
    let summary = summarize(trace);
    let mut out = String::new();
    match format {
        Format::Machine => {
            let tags = trace.tags.iter().map(|t| t.as_str()).collect();
            writeln!(out, "{}", json(&Header { scenario: &trace.scenario, tags })).unwrap();
            for r in &trace.records {
                writeln!(out, "{}", json(r)).unwrap();
            }
            writeln!(out, "{}", json(&Footer { summary: &summary })).unwrap();
        }
        Format::Text => {
            let tags: Vec<&str> = trace.tags.iter().map(|t| t.as_str()).collect();
            writeln!(out, "scenario {}  tags: {}", trace.scenario, tags.join(" ")).unwrap();
            for r in &trace.records {
                let threat = r.threat.map_or(String::new(), |t| format!(" [{t}]"));
                writeln!(
                    out,
                    "#{:03} t={:<6} {:<20} {:<5} {}{}  {}",
                    r.index,
                    r.time,
                    r.verb,
                    r.outcome.as_str(),
                    r.reasons.join(", "),
                    threat,
                    &r.digest[..12],
                )
                .unwrap();
            }
            writeln!(
                out,
                "summary: {} events, {} asserts, {} failed, {} denials",
                summary.events, summary.asserts, summary.failed, summary.denials
            )
            .unwrap();
            for (tag, c) in &summary.by_threat {
                writeln!(out, "  {tag}: {} denials, {} failures", c.denials, c.failures).unwrap();
            }
            for r in trace.failures() {
                writeln!(out, "FAIL #{} (line {}) {}: {}", r.index, r.line, r.verb, r.reasons.join("; ")).unwrap();
            }
        }
    }
    out
}
