//! Golden-file runner shared by the cli and acceptance targets.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ordirt"));
    c.env_remove("ORDIRT_SEED");
    c
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub struct Case {
    pub name: String,
    pub code: i32,
    pub args: Vec<String>,
}

pub fn cases() -> Vec<Case> {
    let text = fs::read_to_string(golden_dir().join("cases.txt")).unwrap();
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace();
            let name = it.next().unwrap().to_string();
            let code = it.next().unwrap().parse().unwrap();
            Case { name, code, args: it.map(str::to_string).collect() }
        })
        .collect()
}

pub fn run_case(case: &Case) -> Output {
    bin().args(&case.args).current_dir(golden_dir()).output().unwrap()
}

/// Runs every case and returns a description of each mismatch.
/// With `ORDIRT_BLESS=1` the expected files are rewritten instead.
pub fn check_golden() -> Vec<String> {
    let bless = std::env::var_os("ORDIRT_BLESS").is_some();
    let expected = golden_dir().join("expected");
    let mut problems = Vec::new();
    for case in cases() {
        let out = run_case(&case);
        let got = out.status.code().unwrap_or(-1);
        if got != case.code {
            problems.push(format!("{}: exit {got}, want {}", case.name, case.code));
        }
        for (ext, bytes) in [("out", &out.stdout), ("err", &out.stderr)] {
            let path = expected.join(format!("{}.{ext}", case.name));
            if bless {
                fs::create_dir_all(&expected).unwrap();
                fs::write(&path, bytes).unwrap();
                continue;
            }
            match fs::read(&path) {
                Ok(want) if &want == bytes => {}
                Ok(_) => problems.push(format!("{}: {ext} differs from {}", case.name, path.display())),
                Err(e) => problems.push(format!("{}: {}: {e}", case.name, path.display())),
            }
        }
    }
    problems
}
