//! Byte-for-byte golden files. The identity reports are exact arithmetic, so
//! the bytes do not depend on the platform's libm. Regenerate with
//! `BLESS=1 cargo test -p carleman-cli --test golden`.

use std::path::{Path, PathBuf};
use std::process::Command;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn check_golden(name: &str, args: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let (out, csv) = (dir.path().join("r.json"), dir.path().join("r.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_carleman"))
        .args(args)
        .arg("--config")
        .arg(root().join("fixtures/identity.toml"))
        .arg("--out")
        .arg(&out)
        .arg("--csv")
        .arg(&csv)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for (produced, ext) in [(out, "json"), (csv, "csv")] {
        let golden = root().join(format!("golden/{name}.{ext}"));
        let actual = std::fs::read_to_string(produced).unwrap();
        if std::env::var_os("BLESS").is_some() {
            std::fs::write(&golden, &actual).unwrap();
            continue;
        }
        let expected = std::fs::read_to_string(&golden).unwrap_or_else(|_| panic!("missing {}", golden.display()));
        assert!(actual == expected, "{name}.{ext} differs from the golden file");
    }
}

#[test]
fn transport_case_report() {
    check_golden("identity_transport", &["identity-verify", "--case", "transport", "--n", "1"]);
}

#[test]
fn one_dimensional_theorem_report() {
    check_golden("identity_r2_n1", &["identity-verify", "--regime", "R2", "--n", "1"]);
}

#[test]
fn printed_delta_is_recorded_not_failed() {
    check_golden("identity_heat", &["identity-verify", "--case", "heat_identity", "--n", "1"]);
}
