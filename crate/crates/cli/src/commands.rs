//! The five pipeline stages.
//!
//! `simulate` writes a panel; `waits` turns a panel into censored waiting
//! times; `fit` runs one mixture chain per site and per pair; `gamma`
//! computes the tail-dependence index and `p_d` for every pair; `simstudy`
//! chains all four at a configurable scale and adds plot-ready summaries
//! (index histogram, index vs. distance, component-weight box data).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use tailwait_core::exceedance::{
    self, marginal_waits, pairwise_waits, select_thresholds, transform_margins, PreprocessMode,
    TailDirection, WaitKind, WaitingTimes,
};
use tailwait_core::mixture::{run_chain_with_options, ChainOptions, GibbsDraws};
use tailwait_core::tail_dep::{gamma_posterior, reference_distance_pd, GammaOptions, Metric};
use tailwait_core::Seed;

use crate::config::{MetricName, PreprocessName, RunConfig, TailName, FIXED_SITES};
use crate::io::{self, GammaRow, ThresholdMeta, WaitsMeta};
use crate::CliError;

pub const TAG_SIM: u64 = 0x11;
const TAG_SITES: u64 = 0x12;
const TAG_FIT_SITE: u64 = 0x21;
const TAG_FIT_PAIR: u64 = 0x22;
const TAG_GAMMA: u64 = 0x31;
const TAG_REFERENCE: u64 = 0x32;

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

fn config_meta(cfg: &RunConfig) -> serde_json::Value {
    json!({
        "kind": "config",
        "version": io::VERSION,
        "config_hash": cfg.hash(),
        "config": cfg,
    })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// Output of the simulate stage.
pub struct SimulateOutput {
    pub panel_path: PathBuf,
    pub sites: Vec<Vec<f64>>,
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateOutput, CliError> {
    let sim = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::Config("no [simulate] block in the config".into()))?;
    let out_dir = cfg.out_dir()?.to_path_buf();
    let master = Seed(cfg.seed);
    let msv = sim.build(master)?;

    let mut sites: Vec<Vec<f64>> = match &sim.sites {
        Some(s) => s.clone(),
        None => FIXED_SITES.iter().map(|s| s.to_vec()).collect(),
    };
    for (i, s) in sites.iter().enumerate() {
        if !msv.region.contains(s) {
            return Err(CliError::Config(format!("site {} lies outside the box", i + 1)));
        }
    }
    if sim.extra_sites > 0 {
        use rand::Rng;
        let mut rng = master.derive(TAG_SITES).rng();
        for _ in 0..sim.extra_sites {
            let site: Vec<f64> = msv
                .region
                .lower()
                .iter()
                .zip(msv.region.upper())
                .map(|(l, u)| l + (u - l) * rng.random::<f64>())
                .collect();
            sites.push(site);
        }
    }
    if sim.n_times < 1 {
        return Err(CliError::Config("n_times must be at least 1".into()));
    }
    let step = msv.horizon / sim.n_times as f64;
    let times: Vec<f64> = (1..=sim.n_times).map(|j| j as f64 * step).collect();

    let panel = tailwait_core::sim::simulate_panel(&msv, &sites, &times)?;
    let panel_path = out_dir.join("panel.csv");
    io::write_panel(&panel_path, &panel)?;
    io::write_meta_lines(
        &io::meta_path(&panel_path),
        &[
            json!({
                "kind": "panel",
                "file": "panel.csv",
                "version": io::VERSION,
                "config_hash": cfg.hash(),
                "sites": panel.sites(),
                "validity_floor": msv.validity_floor(),
                "expected_point_count": msv.expected_point_count(),
            }),
            config_meta(cfg),
        ],
    )?;
    Ok(SimulateOutput { panel_path, sites })
}

// ---------------------------------------------------------------------------
// waits
// ---------------------------------------------------------------------------

pub struct WaitsOutput {
    pub marginal_path: PathBuf,
    pub pair_path: Option<PathBuf>,
    pub meta_path: PathBuf,
}

pub fn cmd_waits(cfg: &RunConfig) -> Result<WaitsOutput, CliError> {
    let out_dir = cfg.out_dir()?.to_path_buf();
    let panel_path =
        cfg.waits.panel.clone().unwrap_or_else(|| out_dir.join("panel.csv"));
    let raw = io::read_panel(&panel_path)?;

    let mode = match cfg.waits.preprocess {
        PreprocessName::Identity => PreprocessMode::Identity,
        PreprocessName::NegLogReturn => PreprocessMode::NegLogReturn,
    };
    let mut panel = exceedance::preprocess(&raw, mode)?;
    let direction = match cfg.waits.tail {
        TailName::Upper => TailDirection::Upper,
        TailName::Lower => {
            let negated = panel
                .values()
                .iter()
                .map(|row| row.iter().map(|v| -v).collect())
                .collect();
            panel = panel.with_values(negated)?;
            TailDirection::LowerNegated
        }
    };
    if let Some(target) = cfg.margin_target() {
        panel = transform_margins(&panel, target)?;
    }

    let mut specs = select_thresholds(&panel, &cfg.waits.quantiles, cfg.waits.min_count)
        .map_err(|e| match e {
            // unsatisfiable threshold rule is a data problem, not a config typo
            tailwait_core::Error::InsufficientData(m) => CliError::Data(m),
            other => CliError::from(other),
        })?;
    for s in &mut specs {
        s.direction = direction;
    }

    let mut marginal: Vec<WaitingTimes> = Vec::with_capacity(panel.n_sites());
    for site in 0..panel.n_sites() {
        let w = marginal_waits(panel.series(site), panel.times(), specs[site].level)?
            .with_kind(WaitKind::Site(site));
        marginal.push(w);
    }

    let marginal_path = out_dir.join("waits_marginal.csv");
    let rows: Vec<(usize, &WaitingTimes)> =
        marginal.iter().enumerate().collect();
    io::write_marginal_waits(&marginal_path, &rows)?;

    let pair_path = if panel.n_sites() < 2 {
        warn("single-site panel: pairwise waits skipped");
        None
    } else {
        let mut pair_waits: Vec<WaitingTimes> = Vec::new();
        for lo in 0..panel.n_sites() {
            for hi in (lo + 1)..panel.n_sites() {
                for (anchor, reference) in [(lo, hi), (hi, lo)] {
                    match pairwise_waits(
                        panel.series(anchor),
                        panel.series(reference),
                        panel.times(),
                        panel.times(),
                        specs[anchor].level,
                        specs[reference].level,
                    ) {
                        Ok(w) => pair_waits
                            .push(w.with_kind(WaitKind::Pair { anchor, reference })),
                        Err(tailwait_core::Error::InsufficientData(m)) => {
                            warn(&format!("pair {}-{}: {m}", anchor + 1, reference + 1));
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        }
        let path = out_dir.join("waits_pair.csv");
        let refs: Vec<&WaitingTimes> = pair_waits.iter().collect();
        io::write_pair_waits(&path, &refs)?;
        Some(path)
    };

    let censoring = marginal
        .first()
        .map(|w| w.censoring_interval)
        .unwrap_or(1.0);
    let meta = WaitsMeta {
        censoring_interval: censoring,
        quantile: specs.first().and_then(|s| s.quantile),
        thresholds: specs
            .iter()
            .enumerate()
            .map(|(i, s)| ThresholdMeta::from_spec(i + 1, s))
            .collect(),
    };
    let meta_file = out_dir.join("waits.meta.jsonl");
    let mut meta_value = serde_json::to_value(&meta)
        .map_err(|e| CliError::Data(format!("metadata: {e}")))?;
    meta_value["kind"] = json!("waits");
    meta_value["version"] = json!(io::VERSION);
    meta_value["config_hash"] = json!(cfg.hash());
    io::write_meta_lines(&meta_file, &[meta_value, config_meta(cfg)])?;
    Ok(WaitsOutput { marginal_path, pair_path, meta_path: meta_file })
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

pub struct FitOutput {
    pub site_chains: BTreeMap<usize, PathBuf>,
    pub pair_chains: BTreeMap<(usize, usize), PathBuf>,
    pub skipped: Vec<String>,
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<FitOutput, CliError> {
    let out_dir = cfg.out_dir()?.to_path_buf();
    let waits_meta = io::read_waits_meta(&out_dir.join("waits.meta.jsonl"))?;
    let marginal = io::read_marginal_waits(&out_dir.join("waits_marginal.csv"))?;
    let pair_file = out_dir.join("waits_pair.csv");
    let pairs = if pair_file.exists() {
        io::read_pair_waits(&pair_file)?
    } else {
        BTreeMap::new()
    };

    let priors = cfg.mixture_priors()?;
    let options = ChainOptions {
        n_iter: cfg.fit.n_iter,
        burn_in: cfg.fit.burn_in,
        thin: cfg.fit.thin,
        store_imputed: false,
    };
    let master = Seed(cfg.seed);

    enum Label {
        Site(usize),
        Pair(usize, usize),
    }
    let mut jobs: Vec<(Label, Vec<f64>, Seed)> = Vec::new();
    let mut skipped = Vec::new();
    for (&site, values) in &marginal {
        if values.is_empty() {
            skipped.push(format!("site {} has no waits", site + 1));
            continue;
        }
        jobs.push((Label::Site(site), values.clone(), master.derive2(TAG_FIT_SITE, site as u64)));
    }
    for (&(lo, hi), values) in &pairs {
        if values.is_empty() {
            skipped.push(format!("pair {}-{} has no waits", lo + 1, hi + 1));
            continue;
        }
        let tag = ((lo as u64) << 32) | hi as u64;
        jobs.push((Label::Pair(lo, hi), values.clone(), master.derive2(TAG_FIT_PAIR, tag)));
    }
    for s in &skipped {
        warn(s);
    }

    let chains: Vec<(usize, Result<GibbsDraws, CliError>)> = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, (_, values, seed))| {
            let data = WaitingTimes::new(
                WaitKind::Site(0),
                values.clone(),
                waits_meta.censoring_interval,
            )
            .and_then(|d| run_chain_with_options(&d, &priors, &options, *seed));
            (idx, data.map_err(CliError::from))
        })
        .collect();

    let mut site_chains = BTreeMap::new();
    let mut pair_chains = BTreeMap::new();
    let mut component_rows: Vec<(String, String, Vec<(usize, f64)>)> = Vec::new();
    let mut files = Vec::new();
    for (idx, result) in chains {
        let draws = result?;
        let (label_kind, label, path) = match jobs[idx].0 {
            Label::Site(site) => (
                "site".to_string(),
                format!("{}", site + 1),
                out_dir.join(format!("draws_site_{}.csv", site + 1)),
            ),
            Label::Pair(lo, hi) => (
                "pair".to_string(),
                format!("{}-{}", lo + 1, hi + 1),
                out_dir.join(format!("draws_pair_{}_{}.csv", lo + 1, hi + 1)),
            ),
        };
        io::write_draws(&path, &draws)?;
        let hist = tailwait_core::mixture::effective_components(&draws, 0.01)?;
        component_rows.push((label_kind, label, hist));
        files.push(path.file_name().unwrap().to_string_lossy().into_owned());
        match jobs[idx].0 {
            Label::Site(site) => {
                site_chains.insert(site, path);
            }
            Label::Pair(lo, hi) => {
                pair_chains.insert((lo, hi), path);
            }
        }
    }

    // effective-component summary across every chain
    let comp_path = out_dir.join("effective_components.csv");
    {
        use std::io::Write;
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(&comp_path).map_err(|e| crate::io_err(&comp_path, e))?,
        );
        writeln!(w, "kind,label,components,probability")
            .map_err(|e| crate::io_err(&comp_path, e))?;
        for (kind, label, hist) in &component_rows {
            for (k, p) in hist {
                writeln!(w, "{kind},{label},{k},{}", crate::fmt_f64(*p))
                    .map_err(|e| crate::io_err(&comp_path, e))?;
            }
        }
    }

    io::write_meta_lines(
        &out_dir.join("fit.meta.jsonl"),
        &[
            json!({
                "kind": "fit",
                "version": io::VERSION,
                "config_hash": cfg.hash(),
                "quantile": waits_meta.quantile,
                "censoring_interval": waits_meta.censoring_interval,
                "n_iter": options.n_iter,
                "burn_in": options.burn_in,
                "thin": options.thin,
                "components": priors.components,
                "files": files,
                "skipped": skipped,
            }),
            config_meta(cfg),
        ],
    )?;
    Ok(FitOutput { site_chains, pair_chains, skipped })
}

// ---------------------------------------------------------------------------
// gamma
// ---------------------------------------------------------------------------

pub struct GammaOutput {
    pub rows: Vec<GammaRow>,
    pub gamma_path: PathBuf,
}

fn metric_name(metric: Metric) -> &'static str {
    match metric {
        Metric::Rkhs => "rkhs",
        Metric::Ks => "ks",
    }
}

pub fn cmd_gamma(cfg: &RunConfig) -> Result<GammaOutput, CliError> {
    let out_dir = cfg.out_dir()?.to_path_buf();
    let waits_meta = io::read_waits_meta(&out_dir.join("waits.meta.jsonl"))?;
    let threshold = waits_meta.quantile.unwrap_or(f64::NAN);

    // discover pairs with fitted chains
    let mut pairs = Vec::new();
    for entry in std::fs::read_dir(&out_dir).map_err(|e| crate::io_err(&out_dir, e))? {
        let entry = entry.map_err(|e| crate::io_err(&out_dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(rest) = name.strip_prefix("draws_pair_").and_then(|n| n.strip_suffix(".csv")) {
            let ids: Vec<usize> =
                rest.split('_').filter_map(|p| p.parse::<usize>().ok()).collect();
            if ids.len() == 2 {
                pairs.push((ids[0] - 1, ids[1] - 1));
            }
        }
    }
    pairs.sort_unstable();
    if pairs.is_empty() {
        return Err(CliError::Data(format!(
            "no pair chains found in {}",
            out_dir.display()
        )));
    }

    let metrics = cfg.gamma.metric.metrics();
    let master = Seed(cfg.seed);
    let mut tasks = Vec::new();
    for &(lo, hi) in &pairs {
        let site_a = out_dir.join(format!("draws_site_{}.csv", lo + 1));
        let site_b = out_dir.join(format!("draws_site_{}.csv", hi + 1));
        if !site_a.exists() || !site_b.exists() {
            warn(&format!(
                "pair {}-{}: missing marginal chains, skipped",
                lo + 1,
                hi + 1
            ));
            continue;
        }
        for &metric in &metrics {
            tasks.push((lo, hi, metric));
        }
    }

    let results: Vec<Result<(GammaRow, Vec<(f64, f64)>), CliError>> = tasks
        .par_iter()
        .map(|&(lo, hi, metric)| {
            let draws_a = io::read_draws(&out_dir.join(format!("draws_site_{}.csv", lo + 1)))?;
            let draws_b = io::read_draws(&out_dir.join(format!("draws_site_{}.csv", hi + 1)))?;
            let draws_pair =
                io::read_draws(&out_dir.join(format!("draws_pair_{}_{}.csv", lo + 1, hi + 1)))?;
            let shortest = draws_a.len().min(draws_b.len()).min(draws_pair.len());
            if shortest < draws_a.len().max(draws_b.len()).max(draws_pair.len()) {
                warn(&format!(
                    "pair {}-{}: chains of unequal length, truncating to {shortest}",
                    lo + 1,
                    hi + 1
                ));
            }
            let options = GammaOptions {
                predictive_size: cfg.gamma.predictive_size,
                metric,
                mmd_scale: cfg.gamma.mmd_scale,
            };
            let tag = ((lo as u64) << 32) | hi as u64;
            let metric_tag = tag.wrapping_mul(2).wrapping_add(matches!(metric, Metric::Ks) as u64);
            let gamma = gamma_posterior(
                &draws_a,
                &draws_b,
                &draws_pair,
                &options,
                Seed(cfg.seed).derive2(TAG_GAMMA, metric_tag),
            )?;
            let gamma = reference_distance_pd(
                &draws_pair,
                gamma,
                &options,
                master.derive2(TAG_REFERENCE, metric_tag),
            )?;
            let samples: Vec<(f64, f64)> = gamma
                .samples
                .iter()
                .zip(gamma.d_star.as_deref().unwrap_or(&[]))
                .map(|(&g, &d)| (g, d))
                .collect();
            Ok((
                GammaRow {
                    site_a: lo,
                    site_b: hi,
                    threshold,
                    metric: metric_name(metric).to_string(),
                    gamma_hat: gamma.point_estimate,
                    p_d: gamma.p_d.unwrap_or(f64::NAN),
                },
                samples,
            ))
        })
        .collect();

    let mut rows = Vec::new();
    let mut sample_rows = Vec::new();
    for result in results {
        let (row, samples) = result?;
        sample_rows.push((row.site_a, row.site_b, row.metric.clone(), samples));
        rows.push(row);
    }

    let gamma_path = out_dir.join("gamma.csv");
    io::write_gamma(&gamma_path, &rows)?;

    if cfg.gamma.export_samples {
        use std::io::Write;
        let path = out_dir.join("gamma_samples.csv");
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(&path).map_err(|e| crate::io_err(&path, e))?,
        );
        writeln!(w, "pair,metric,draw,gamma,d_star").map_err(|e| crate::io_err(&path, e))?;
        for (lo, hi, metric, samples) in &sample_rows {
            for (draw, (g, d)) in samples.iter().enumerate() {
                writeln!(
                    w,
                    "{}-{},{metric},{draw},{},{}",
                    lo + 1,
                    hi + 1,
                    crate::fmt_f64(*g),
                    crate::fmt_f64(*d)
                )
                .map_err(|e| crate::io_err(&path, e))?;
            }
        }
    }

    io::write_meta_lines(
        &out_dir.join("gamma.meta.jsonl"),
        &[
            json!({
                "kind": "gamma",
                "version": io::VERSION,
                "config_hash": cfg.hash(),
                "threshold_quantile": waits_meta.quantile,
                "predictive_size": cfg.gamma.predictive_size,
                "metrics": metrics.iter().map(|m| metric_name(*m)).collect::<Vec<_>>(),
                "pairs": rows.len(),
            }),
            config_meta(cfg),
        ],
    )?;
    Ok(GammaOutput { rows, gamma_path })
}

// ---------------------------------------------------------------------------
// simstudy
// ---------------------------------------------------------------------------

pub struct SimstudyOutput {
    pub gamma_rows: Vec<GammaRow>,
    pub sites: Vec<Vec<f64>>,
    pub out_dir: PathBuf,
}

/// End-to-end simulation study: simulate, waits, fit, gamma, plus plot-ready
/// CSVs. The scale factor multiplies the horizon and the grid size.
pub fn cmd_simstudy(cfg: &RunConfig) -> Result<SimstudyOutput, CliError> {
    let mut scaled = cfg.clone();
    let scale = cfg.simstudy.scale;
    if !(scale > 0.0) {
        return Err(CliError::Config(format!("scale must be positive, got {scale}")));
    }
    {
        let sim = scaled
            .simulate
            .as_mut()
            .ok_or_else(|| CliError::Config("no [simulate] block in the config".into()))?;
        sim.horizon *= scale;
        sim.n_times = ((sim.n_times as f64 * scale).round() as usize).max(2);
    }

    let simulated = cmd_simulate(&scaled)?;
    cmd_waits(&scaled)?;
    cmd_fit(&scaled)?;
    let gamma = cmd_gamma(&scaled)?;

    let out_dir = scaled.out_dir()?.to_path_buf();
    write_plot_ready(&out_dir, &gamma.rows, &simulated.sites)?;
    Ok(SimstudyOutput { gamma_rows: gamma.rows, sites: simulated.sites, out_dir })
}

fn write_plot_ready(
    out_dir: &Path,
    rows: &[GammaRow],
    sites: &[Vec<f64>],
) -> Result<(), CliError> {
    use std::io::Write;

    let hist_path = out_dir.join("gamma_hist.csv");
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(&hist_path).map_err(|e| crate::io_err(&hist_path, e))?,
    );
    writeln!(w, "metric,gamma_hat").map_err(|e| crate::io_err(&hist_path, e))?;
    for r in rows {
        writeln!(w, "{},{}", r.metric, crate::fmt_f64(r.gamma_hat))
            .map_err(|e| crate::io_err(&hist_path, e))?;
    }
    drop(w);

    let dist_path = out_dir.join("gamma_vs_distance.csv");
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(&dist_path).map_err(|e| crate::io_err(&dist_path, e))?,
    );
    writeln!(w, "i,i_prime,distance,metric,gamma_hat,p_d")
        .map_err(|e| crate::io_err(&dist_path, e))?;
    for r in rows {
        let d: f64 = sites[r.site_a]
            .iter()
            .zip(&sites[r.site_b])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.site_a + 1,
            r.site_b + 1,
            crate::fmt_f64(d),
            r.metric,
            crate::fmt_f64(r.gamma_hat),
            crate::fmt_f64(r.p_d)
        )
        .map_err(|e| crate::io_err(&dist_path, e))?;
    }
    drop(w);

    // posterior mean weight per component for every chain: box-plot data
    let comp_path = out_dir.join("component_weights.csv");
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(&comp_path).map_err(|e| crate::io_err(&comp_path, e))?,
    );
    writeln!(w, "kind,label,component,weight_mean").map_err(|e| crate::io_err(&comp_path, e))?;
    let mut entries: Vec<(String, String, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(out_dir).map_err(|e| crate::io_err(out_dir, e))? {
        let entry = entry.map_err(|e| crate::io_err(out_dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(rest) = name.strip_prefix("draws_site_").and_then(|n| n.strip_suffix(".csv")) {
            entries.push(("site".into(), rest.to_string(), entry.path()));
        } else if let Some(rest) =
            name.strip_prefix("draws_pair_").and_then(|n| n.strip_suffix(".csv"))
        {
            entries.push(("pair".into(), rest.replace('_', "-"), entry.path()));
        }
    }
    entries.sort();
    for (kind, label, path) in entries {
        let draws = io::read_draws(&path)?;
        for (j, mean) in draws.summary.weight_mean.iter().enumerate() {
            writeln!(w, "{kind},{label},{j},{}", crate::fmt_f64(*mean))
                .map_err(|e| crate::io_err(&comp_path, e))?;
        }
    }
    Ok(())
}

/// Matches the CLI `--metric` flag onto config metric names.
pub fn metric_override(name: &str) -> Result<MetricName, CliError> {
    match name {
        "rkhs" => Ok(MetricName::Rkhs),
        "ks" => Ok(MetricName::Ks),
        "both" => Ok(MetricName::Both),
        other => Err(CliError::Config(format!(
            "metric must be rkhs, ks, or both; got {other:?}"
        ))),
    }
}
