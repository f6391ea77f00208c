//! Crash-durability harness: a child process credits points as fast as it
//! can, acknowledging each committed credit on stdout, until killed.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Stdio};

use durian_core::session::PlayerId;
use durian_server::store::{PlayerStore, StoreOptions};

pub const CHILD_ENV: &str = "DURIAN_CRASH_CHILD_DIR";

fn durable() -> StoreOptions {
    StoreOptions { sync: true, kdf_iterations: 16, ..StoreOptions::default() }
}

/// Body of the child process. Never returns.
pub fn child_main(dir: &Path) -> ! {
    let store = PlayerStore::open(dir, durable()).unwrap();
    let id = PlayerId(std::fs::read_to_string(dir.join("player")).unwrap());
    let out = std::io::stdout();
    let mut out = out.lock();
    loop {
        let view = store.credit_points(&id, 1).unwrap();
        writeln!(out, "{}", view.points_total).unwrap();
        out.flush().unwrap();
    }
}

pub struct CrashReport {
    pub acknowledged: u64,
    pub recovered: u64,
}

/// Runs `cmd` as a child writer against `dir`, kills it with SIGKILL after
/// `kill_after` acknowledgements, reopens the store and reports.
pub fn crash_once(mut cmd: Command, dir: &Path, kill_after: u64) -> CrashReport {
    let store = PlayerStore::open(dir, durable()).unwrap();
    let id = match std::fs::read_to_string(dir.join("player")) {
        Ok(id) => PlayerId(id),
        Err(_) => {
            let id = store.register("crash@example.org", "pw", "en").unwrap().player_id;
            std::fs::write(dir.join("player"), &id.0).unwrap();
            id
        }
    };
    let before = store.account(&id).unwrap().points_total;
    drop(store);

    let mut child = cmd.env(CHILD_ENV, dir).stdout(Stdio::piped()).stderr(Stdio::null()).spawn().unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let mut acknowledged = before;
    while let Some(Ok(line)) = lines.next() {
        if let Ok(n) = line.trim().parse::<u64>() {
            acknowledged = n;
            if n >= before + kill_after {
                break;
            }
        }
    }
    child.kill().unwrap();
    child.wait().unwrap();

    let store = PlayerStore::open(dir, durable()).unwrap();
    CrashReport { acknowledged, recovered: store.account(&id).unwrap().points_total }
}
