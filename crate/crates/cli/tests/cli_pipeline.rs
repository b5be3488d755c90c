//! End-to-end CLI checks: stage chaining through the binary, byte-identical
//! seeded reruns, ingestion round trips, and exit codes.

use std::path::Path;
use std::process::Command;

fn tailwait() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tailwait"))
}

fn write_config(dir: &Path, out: &Path) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        r#"
seed = 31415
out_dir = {out:?}

[simulate]
beta = 0.3
delta = 0.2
u_min = 1.0
horizon = 12000.0
box = {{ lower = [0.0, 0.0], upper = [4.0, 4.0] }}
n_times = 12000
extra_sites = 0
sites = [[1.0, 1.0], [1.3, 1.0], [3.0, 3.0]]

[simulate.attributes]
kind = "factored"
wishart_df = 7.0
wishart_scale = [[1.0, 0.0], [0.0, 1.0]]
speed_mean = 0.05
speed_shape = 0.5
angle_rate = 0.5

[waits]
quantiles = [0.99, 0.95]
min_count = 30

[fit]
n_iter = 800
burn_in = 200
thin = 3
components = 4

[gamma]
predictive_size = 80
metric = "both"
export_samples = true
"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn pipeline_stages_chain_and_rerun_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let config = write_config(dir.path(), &out_a);

    for stage in ["simulate", "waits", "fit", "gamma"] {
        let status = tailwait().arg(stage).arg("--config").arg(&config).status().unwrap();
        assert!(status.success(), "{stage} failed");
    }
    for file in [
        "panel.csv",
        "panel.meta.jsonl",
        "waits_marginal.csv",
        "waits_pair.csv",
        "waits.meta.jsonl",
        "draws_site_1.csv",
        "draws_pair_1_2.csv",
        "effective_components.csv",
        "gamma.csv",
        "gamma_samples.csv",
        "gamma.meta.jsonl",
    ] {
        assert!(out_a.join(file).exists(), "missing {file}");
    }

    // a second full run into another directory is byte-identical
    let out_b = dir.path().join("b");
    for stage in ["simulate", "waits", "fit", "gamma"] {
        let status = tailwait()
            .arg(stage)
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out_b)
            .status()
            .unwrap();
        assert!(status.success(), "{stage} rerun failed");
    }
    for file in [
        "panel.csv",
        "waits_marginal.csv",
        "waits_pair.csv",
        "draws_site_1.csv",
        "draws_site_2.csv",
        "draws_site_3.csv",
        "draws_pair_1_2.csv",
        "draws_pair_1_3.csv",
        "draws_pair_2_3.csv",
        "effective_components.csv",
        "gamma.csv",
        "gamma_samples.csv",
    ] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical seeded runs");
    }

    // every stage's metadata embeds the config hash and crate version
    for meta in ["panel.meta.jsonl", "waits.meta.jsonl", "fit.meta.jsonl", "gamma.meta.jsonl"] {
        let text = std::fs::read_to_string(out_a.join(meta)).unwrap();
        assert!(text.contains("config_hash"), "{meta} lacks a config hash");
        assert!(text.contains("\"version\""), "{meta} lacks a version");
    }

    // gamma.csv sanity: 3 pairs x 2 metrics, p_d within [0, 1]
    let gamma = std::fs::read_to_string(out_a.join("gamma.csv")).unwrap();
    let rows: Vec<&str> = gamma.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        let p_d: f64 = cells[5].parse().unwrap();
        assert!((0.0..=1.0).contains(&p_d), "p_d out of range in {row}");
        let gamma_hat: f64 = cells[4].parse().unwrap();
        assert!(gamma_hat >= 0.0);
    }
}

#[test]
fn ingestion_round_trips_simulated_panels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = write_config(dir.path(), &out);
    let status = tailwait().arg("simulate").arg("--config").arg(&config).status().unwrap();
    assert!(status.success());

    let panel = tailwait_cli::io::read_panel(&out.join("panel.csv")).unwrap();
    assert_eq!(panel.n_sites(), 3);
    assert_eq!(panel.n_times(), 12_000);
    // sidecar carries the true coordinates
    assert_eq!(panel.sites()[0], vec![1.0, 1.0]);

    // writing the ingested panel back reproduces the file byte for byte
    let copy = dir.path().join("copy.csv");
    tailwait_cli::io::write_panel(&copy, &panel).unwrap();
    assert_eq!(
        std::fs::read(out.join("panel.csv")).unwrap(),
        std::fs::read(&copy).unwrap()
    );
}

#[test]
fn waits_stage_reproduces_hand_traced_values() {
    // pulse trains whose crossing arithmetic is known exactly
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    std::fs::create_dir_all(&out).unwrap();
    let w1 = [0.0, 5.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let w2 = [0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0];
    let mut csv = String::from("time,site_1,site_2\n");
    for j in 0..10 {
        csv.push_str(&format!("{},{},{}\n", j + 1, w1[j], w2[j]));
    }
    std::fs::write(out.join("panel.csv"), csv).unwrap();
    let config = dir.path().join("toy.toml");
    std::fs::write(
        &config,
        format!(
            r#"
seed = 1
out_dir = {out:?}

[waits]
margins = "none"
quantiles = [0.8]
min_count = 1
"#
        ),
    )
    .unwrap();
    let status = tailwait().arg("waits").arg("--config").arg(&config).status().unwrap();
    assert!(status.success());

    // marginal: site 1 pairs the up-crossing at t=5 with the down-crossing
    // at t=3, reading (5-3) - (1+1) = 0; site 2 pairs t=7 with t=4 for
    // (7-4) - (1+1) = 1 (the leading crossings trim away)
    let marginal = std::fs::read_to_string(out.join("waits_marginal.csv")).unwrap();
    assert_eq!(marginal, "site,i,kappa\n1,1,0\n2,1,1\n");

    // pairwise anchors on every first exceedance: site 1 events {2, 5}
    // against site 2 events {3, 7} give gaps {1, 2}; the reverse direction
    // also gives {1, 2}
    let pairs = std::fs::read_to_string(out.join("waits_pair.csv")).unwrap();
    assert_eq!(
        pairs,
        "pair,i,i_prime,kappa\n1-2,1,2,1\n1-2,1,2,2\n1-2,2,1,1\n1-2,2,1,2\n"
    );
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");

    // missing config file: config error (2)
    let status = tailwait()
        .arg("simulate")
        .arg("--config")
        .arg(dir.path().join("nope.toml"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // malformed config: 2
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = \"not a number\"").unwrap();
    let status = tailwait().arg("simulate").arg("--config").arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(2));

    // waits without a panel: data error (3)
    let config = write_config(dir.path(), &out);
    let status = tailwait().arg("waits").arg("--config").arg(&config).status().unwrap();
    assert_eq!(status.code(), Some(3));

    // unsatisfiable threshold rule: data error (3), message carries counts
    std::fs::create_dir_all(&out).unwrap();
    let status = tailwait().arg("simulate").arg("--config").arg(&config).status().unwrap();
    assert!(status.success());
    let strict = std::fs::read_to_string(&config)
        .unwrap()
        .replace("min_count = 30", "min_count = 100000");
    let strict_path = dir.path().join("strict.toml");
    std::fs::write(&strict_path, strict).unwrap();
    let output = tailwait().arg("waits").arg("--config").arg(&strict_path).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).contains("counts"));

    // non-monotone ingestion: 3, row named
    let mangled = out.join("panel.csv");
    let text = std::fs::read_to_string(&mangled).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(1, 2);
    std::fs::write(&mangled, lines.join("\n")).unwrap();
    let output = tailwait().arg("waits").arg("--config").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).contains("row"));
}

#[test]
fn single_site_panel_skips_pairwise_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config_path = dir.path().join("single.toml");
    let text = std::fs::read_to_string(write_config(dir.path(), &out))
        .unwrap()
        .replace(
            "sites = [[1.0, 1.0], [1.3, 1.0], [3.0, 3.0]]",
            "sites = [[1.0, 1.0]]",
        );
    std::fs::write(&config_path, text).unwrap();

    let status = tailwait().arg("simulate").arg("--config").arg(&config_path).status().unwrap();
    assert!(status.success());
    let output = tailwait().arg("waits").arg("--config").arg(&config_path).output().unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("pairwise waits skipped"));
    assert!(out.join("waits_marginal.csv").exists());
    assert!(!out.join("waits_pair.csv").exists());
}

#[test]
fn lower_tail_mode_negates_before_thresholding() {
    // returns-like data whose extreme events are crashes (lower tail)
    let dir = tempfile::tempdir().unwrap();
    let out_lower = dir.path().join("lower");
    let out_upper = dir.path().join("upper");
    std::fs::create_dir_all(&out_lower).unwrap();
    std::fs::create_dir_all(&out_upper).unwrap();

    let mut state = 7u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut returns = vec![Vec::new(), Vec::new()];
    for _ in 0..4000 {
        for site in &mut returns {
            let r = if next() < 0.01 { -0.1 - 0.2 * next() } else { 0.01 * (next() - 0.5) };
            site.push(r);
        }
    }
    let mut csv = String::from("time,site_1,site_2\n");
    let mut negated = String::from("time,site_1,site_2\n");
    for j in 0..4000 {
        csv.push_str(&format!("{},{},{}\n", j + 1, returns[0][j], returns[1][j]));
        negated.push_str(&format!("{},{},{}\n", j + 1, -returns[0][j], -returns[1][j]));
    }
    std::fs::write(out_lower.join("panel.csv"), csv).unwrap();
    std::fs::write(out_upper.join("panel.csv"), negated).unwrap();

    let write_cfg = |path: &Path, out: &Path, tail: &str| {
        std::fs::write(
            path,
            format!(
                r#"
seed = 5
out_dir = {out:?}

[waits]
preprocess = "identity"
tail = "{tail}"
margins = "none"
quantiles = [0.99]
min_count = 10
"#
            ),
        )
        .unwrap();
    };
    let cfg_lower = dir.path().join("lower.toml");
    write_cfg(&cfg_lower, &out_lower, "lower");
    let status = tailwait().arg("waits").arg("--config").arg(&cfg_lower).status().unwrap();
    assert!(status.success());
    let meta = std::fs::read_to_string(out_lower.join("waits.meta.jsonl")).unwrap();
    assert!(meta.contains("lower_negated"));

    // lower-tail on raw data must equal upper-tail on negated data
    let cfg_upper = dir.path().join("upper.toml");
    write_cfg(&cfg_upper, &out_upper, "upper");
    let status = tailwait().arg("waits").arg("--config").arg(&cfg_upper).status().unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read(out_lower.join("waits_marginal.csv")).unwrap(),
        std::fs::read(out_upper.join("waits_marginal.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(out_lower.join("waits_pair.csv")).unwrap(),
        std::fs::read(out_upper.join("waits_pair.csv")).unwrap()
    );
}
