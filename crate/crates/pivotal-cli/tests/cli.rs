//! Command-line behavior: exit codes, diagnostics, output structure.

use std::path::{Path, PathBuf};
use std::process::Command;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pivotal"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("pivotal-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn zero_samples_is_a_usage_error() {
    let out = bin()
        .args(["primaries", "--samples", "0", "--out"])
        .arg(tmp("unused.csv"))
        .arg("--states")
        .arg(data("primaries_2020.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--samples"), "{stderr}");
}

#[test]
fn unknown_flag_is_a_usage_error_and_help_is_not() {
    let out = bin().args(["primaries", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn malformed_states_csv_reports_the_line_and_exits_2() {
    let path = tmp("bad_states.csv");
    std::fs::write(&path, "name,date,delegates\nAlpha,2020-02-03,10\nBeta,2020-03-03,oops\n")
        .unwrap();
    let out = bin()
        .args(["primaries", "--samples", "2", "--n-mc", "10"])
        .arg("--states")
        .arg(&path)
        .arg("--out")
        .arg(tmp("unused2.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(":3"), "line number missing: {stderr}");
}

#[test]
fn unknown_positional_state_is_a_data_error() {
    let out = bin()
        .args(["primaries", "--samples", "2", "--n-mc", "10", "--state", "Atlantis"])
        .args(["--positions", "1"])
        .arg("--states")
        .arg(data("primaries_2020.csv"))
        .arg("--out")
        .arg(tmp("unused3.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Atlantis"), "{stderr}");
}

#[test]
fn unknown_reward_code_lists_the_vocabulary_and_exits_2() {
    let conf = tmp("bad_rewards.conf");
    std::fs::write(&conf, "league_size = 18\ncode = 9/9/XYZ\n").unwrap();
    let out = bin()
        .arg("league")
        .arg("--fixtures")
        .arg(data("bundesliga_2017_18/fixtures_md34.csv"))
        .arg("--ratings")
        .arg(data("bundesliga_2017_18/ratings.csv"))
        .arg("--rewards")
        .arg(&conf)
        .arg("--out")
        .arg(tmp("unused4.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("4/3/PDD") && stderr.contains("2/2/PPD"), "{stderr}");
}

#[test]
fn inconsistent_fixtures_are_a_data_error() {
    let fixtures = tmp("twice.csv");
    std::fs::write(
        &fixtures,
        "matchday,home,away,goals_home,goals_away\n34,Bayern M.,Stuttgart,1,4\n34,Bayern M.,Köln,1,0\n",
    )
    .unwrap();
    let out = bin()
        .arg("league")
        .arg("--fixtures")
        .arg(&fixtures)
        .arg("--ratings")
        .arg(data("bundesliga_2017_18/ratings.csv"))
        .arg("--rewards")
        .arg(data("bundesliga_2017_18/rewards.conf"))
        .arg("--standings")
        .arg(data("bundesliga_2017_18/standings_md33.csv"))
        .arg("--out")
        .arg(tmp("unused5.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("twice") || stderr.contains("Bayern"), "{stderr}");
}

/// Structural zeros do not depend on the distance metric.
#[test]
fn tv_metric_reproduces_the_same_zero_pattern() {
    let run = |distance: &str, out_name: &str| -> Vec<(String, String, f64, f64)> {
        let out_path = tmp(out_name);
        let status = bin()
            .arg("league")
            .arg("--fixtures")
            .arg(data("bundesliga_2017_18/fixtures_md34.csv"))
            .arg("--ratings")
            .arg(data("bundesliga_2017_18/ratings.csv"))
            .arg("--rewards")
            .arg(data("bundesliga_2017_18/rewards.conf"))
            .arg("--standings")
            .arg(data("bundesliga_2017_18/standings_md33.csv"))
            .args(["--n-mc", "500", "--seed", "4", "--distance", distance])
            .arg("--out")
            .arg(&out_path)
            .status()
            .unwrap();
        assert!(status.success());
        let mut rows = Vec::new();
        for line in std::fs::read_to_string(&out_path).unwrap().lines() {
            if line.starts_with('#') || line.starts_with("matchday,") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            rows.push((
                cols[1].to_owned(),
                cols[2].to_owned(),
                cols[3].parse().unwrap(),
                cols[4].parse().unwrap(),
            ));
        }
        rows
    };
    let jsd = run("jsd", "zeros_jsd.csv");
    let tv = run("tv", "zeros_tv.csv");
    assert_eq!(jsd.len(), 9);
    for (a, b) in jsd.iter().zip(&tv) {
        assert_eq!(a.0, b.0);
        assert_eq!((a.2 == 0.0, a.3 == 0.0), (b.2 == 0.0, b.3 == 0.0), "{}", a.0);
    }
}

#[test]
fn outputs_embed_the_manifest_and_reruns_are_identical() {
    let run = |out_name: &str| -> Vec<u8> {
        let out_path = tmp(out_name);
        let status = bin()
            .args(["oracle", "--n-mc", "1000", "--seed", "11"])
            .arg("--contest")
            .arg(data("toy_contest.conf"))
            .arg("--out")
            .arg(&out_path)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(&out_path).unwrap()
    };
    let first = run("rerun_a.csv");
    let second = run("rerun_b.csv");
    assert_eq!(first, second);
    let text = String::from_utf8(first).unwrap();
    for key in ["# command = oracle", "# n_mc = 1000", "# seed = 11", "# version = "] {
        assert!(text.contains(key), "missing '{key}' in output header");
    }
}
