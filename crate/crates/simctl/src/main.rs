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
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use secmodel::boot::{attest, build_images, verify_boot_chain, BootChain, BootColor, ImageSpec, OemKeys};
use secmodel::crypto::DEFAULT_SCHEME;
use secmodel::world::SystemImage;
use simctl::corpus::{check_dir, exit_code_of, Status};
use simctl::imagedir::{self, DeviceFile};
use simctl::report::exit_code;
use simctl::{parse_scenario, render, run, Format};

#[derive(Parser)]
#[command(name = "simctl", version, about = "Scenario simulator for the secmodel device model")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and print its trace.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Hardware seed; overrides the scenario's `world seed=`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every `.scn` in a directory against its `.golden` trace.
    Check {
        dir: PathBuf,
        /// Rewrite the golden files.
        #[arg(long)]
        bless: bool,
    },
    /// Verified-boot tools over an image directory.
    Avb {
        #[command(subcommand)]
        cmd: AvbCmd,
    },
}

#[derive(Subcommand)]
enum AvbCmd {
    /// Verify the boot chain. Exit 0 GREEN/YELLOW, 2 ORANGE, 3 RED.
    Verify { dir: PathBuf },
    /// Print a signed attestation record for the boot state.
    Attest {
        dir: PathBuf,
        #[arg(long, default_value = "")]
        challenge: String,
    },
    /// Write an OEM-signed fixture image directory.
    Fixture {
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        os_version: u32,
        #[arg(long, default_value_t = 256)]
        block_size: u32,
        #[arg(long, default_value_t = 0)]
        rollback_index: u64,
        #[arg(long)]
        unlocked: bool,
    },
}

fn color_code(c: BootColor) -> u8 {
    match c {
        BootColor::Green | BootColor::Yellow => 0,
        BootColor::Orange => 2,
        BootColor::Red => 3,
    }
}

fn avb(cmd: AvbCmd) -> Result<u8, String> {
    match cmd {
        AvbCmd::Verify { dir } => {
            let (dev, images) = imagedir::load(&dir).map_err(|e| e.to_string())?;
            let r = verify_boot_chain(&dev.chain, &images, &DEFAULT_SCHEME);
            println!("state={} locked={}", r.state.color, r.state.device_locked);
            if let Some(d) = r.vbmeta_digest {
                println!("vbmeta_digest={}", d.to_hex());
            }
            for reason in r.reasons() {
                println!("issue {reason}");
            }
            Ok(color_code(r.state.color))
        }
        AvbCmd::Attest { dir, challenge } => {
            let (dev, images) = imagedir::load(&dir).map_err(|e| e.to_string())?;
            let r = verify_boot_chain(&dev.chain, &images, &DEFAULT_SCHEME);
            let key = r.os_found.then_some(&dev.attestation_key);
            let rec = attest(key, &r, dev.os_version, &challenge, &DEFAULT_SCHEME).map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string_pretty(&rec).expect("plain data serializes"));
            Ok(color_code(r.state.color))
        }
        AvbCmd::Fixture { dir, os_version, block_size, rollback_index, unlocked } => {
            let keys = OemKeys::default();
            let mut spec = ImageSpec::new(SystemImage::android_default(os_version).to_bytes());
            spec.block_size = block_size;
            spec.rollback_index = rollback_index;
            let images = build_images(&keys, &spec, &DEFAULT_SCHEME);
            let mut chain = BootChain::new(keys.rom.clone());
            chain.locked = !unlocked;
            let mut dev = DeviceFile::new(chain);
            dev.os_version = os_version;
            imagedir::save(&dir, &dev, &images).map_err(|e| e.to_string())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Run { file, format, seed } => match fs::read_to_string(&file) {
            Err(e) => {
                eprintln!("{}: {e}", file.display());
                2
            }
            Ok(text) => match parse_scenario(&text) {
                Err(e) => {
                    eprintln!("{}: {e}", file.display());
                    2
                }
                Ok(sc) => {
                    let trace = run(&sc, seed);
                    print!("{}", render(&trace, format));
                    exit_code(&trace) as u8
                }
            },
        },
        Cmd::Check { dir, bless } => match check_dir(&dir, bless) {
            Err(e) => {
                eprintln!("{}: {e}", dir.display());
                2
            }
            Ok(entries) => {
                for e in &entries {
                    let status = match &e.status {
                        Status::Pass => "ok".to_string(),
                        Status::Failed(ix) => format!("FAILED asserts {ix:?}"),
                        Status::GoldenMismatch { line } => format!("MISMATCH golden line {line}"),
                        Status::MissingGolden => "MISSING golden".to_string(),
                        Status::ParseError(m) => format!("PARSE ERROR {m}"),
                    };
                    println!("{}: {status}", e.path.display());
                }
                exit_code_of(&entries) as u8
            }
        },
        Cmd::Avb { cmd } => match avb(cmd) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                3
            }
        },
    };
    ExitCode::from(code)
}
