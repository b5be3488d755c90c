//! File formats.
//!
//! - Panel: `time,site_1,...,site_n` CSV plus a `.meta.jsonl` sidecar with
//!   the site coordinates and the config.
//! - Waiting times: `site,i,kappa` (marginal) and `pair,i,i_prime,kappa`
//!   (pairwise, both directions of each unordered pair under one label).
//! - Chains: `iter,eta_0..eta_{K-1},lambda_1..lambda_{K-1}`.
//! - Index report: `i,i_prime,threshold,metric,gamma_hat,p_d`.
//!
//! All CSVs use `.` decimals, `,` separators, LF endings. Every stage's
//! metadata sidecar records the config hash and library version.

use std::collections::BTreeMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use tailwait_core::exceedance::{TailDirection, ThresholdSpec, WaitKind, WaitingTimes};
use tailwait_core::mixture::{GibbsDraws, MixtureParams};
use tailwait_core::panel::Panel;

use crate::{fmt_f64, io_err, CliError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `<dir>/<stem>.meta.jsonl` next to a CSV.
pub fn meta_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("output");
    csv.with_file_name(format!("{stem}.meta.jsonl"))
}

fn create(path: &Path) -> Result<BufWriter<std::fs::File>, CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    Ok(BufWriter::new(std::fs::File::create(path).map_err(|e| io_err(path, e))?))
}

/// Append one JSON record per line.
pub fn write_meta_lines(path: &Path, lines: &[serde_json::Value]) -> Result<(), CliError> {
    let mut w = create(path)?;
    for line in lines {
        let text = serde_json::to_string(line)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        writeln!(w, "{text}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------------
// Panels
// ---------------------------------------------------------------------------

/// Write `panel.csv`; the caller writes the sidecar via [`write_meta_lines`].
pub fn write_panel(path: &Path, panel: &Panel) -> Result<(), CliError> {
    let mut w = create(path)?;
    let mut header = String::from("time");
    for i in 1..=panel.n_sites() {
        header.push_str(&format!(",site_{i}"));
    }
    writeln!(w, "{header}").map_err(|e| io_err(path, e))?;
    for (j, &t) in panel.times().iter().enumerate() {
        let mut row = fmt_f64(t);
        for i in 0..panel.n_sites() {
            row.push(',');
            row.push_str(&fmt_f64(panel.values()[i][j]));
        }
        writeln!(w, "{row}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn parse_cell(cell: &str, row: usize, col: usize, path: &Path) -> Result<f64, CliError> {
    cell.trim().parse::<f64>().map_err(|_| {
        CliError::Data(format!(
            "{}: non-numeric cell {cell:?} at data row {row}, column {col}",
            path.display()
        ))
    })
}

/// Ingest a panel CSV.
///
/// Site coordinates come from the `.meta.jsonl` sidecar when present and fall
/// back to 1-d indices `1..n` on a line. Ragged rows, non-numeric cells, and
/// non-monotone times report the offending row (and column).
pub fn read_panel(path: &Path) -> Result<Panel, CliError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("{}: empty file", path.display())))?
        .map_err(|e| io_err(path, e))?;
    let columns: Vec<&str> = header.trim_end().split(',').collect();
    if columns.first() != Some(&"time") || columns.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: header must be time,site_1,...,site_n; got {header:?}",
            path.display()
        )));
    }
    let n_sites = columns.len() - 1;
    let mut times = Vec::new();
    let mut values = vec![Vec::new(); n_sites];
    for (idx, line) in lines.enumerate() {
        let row = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n_sites + 1 {
            return Err(CliError::Data(format!(
                "{}: data row {row} has {} cells, expected {}",
                path.display(),
                cells.len(),
                n_sites + 1
            )));
        }
        let t = parse_cell(cells[0], row, 1, path)?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(CliError::Data(format!(
                    "{}: time column is not strictly increasing at data row {row}",
                    path.display()
                )));
            }
        }
        times.push(t);
        for (i, cell) in cells[1..].iter().enumerate() {
            values[i].push(parse_cell(cell, row, i + 2, path)?);
        }
    }
    let sites = read_sites_from_meta(&meta_path(path))
        .unwrap_or_else(|| (1..=n_sites).map(|i| vec![i as f64]).collect());
    if sites.len() != n_sites {
        return Err(CliError::Data(format!(
            "{}: sidecar lists {} sites for {} columns",
            path.display(),
            sites.len(),
            n_sites
        )));
    }
    Panel::new(sites, times, values).map_err(CliError::from)
}

fn read_sites_from_meta(path: &Path) -> Option<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).ok()?;
    for line in text.lines() {
        let value: serde_json::Value = serde_json::from_str(line).ok()?;
        if value.get("kind").and_then(|k| k.as_str()) == Some("panel") {
            return serde_json::from_value(value.get("sites")?.clone()).ok();
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Waiting times
// ---------------------------------------------------------------------------

/// Threshold echo stored in the waits metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdMeta {
    pub site: usize,
    pub level: f64,
    pub quantile: Option<f64>,
    pub direction: String,
}

impl ThresholdMeta {
    pub fn from_spec(site: usize, spec: &ThresholdSpec) -> Self {
        ThresholdMeta {
            site,
            level: spec.level,
            quantile: spec.quantile,
            direction: match spec.direction {
                TailDirection::Upper => "upper".into(),
                TailDirection::LowerNegated => "lower_negated".into(),
            },
        }
    }
}

/// Waits stage summary read back by `fit` and `gamma`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaitsMeta {
    pub censoring_interval: f64,
    pub quantile: Option<f64>,
    pub thresholds: Vec<ThresholdMeta>,
}

pub fn write_marginal_waits(path: &Path, waits: &[(usize, &WaitingTimes)]) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "site,i,kappa").map_err(|e| io_err(path, e))?;
    for (site, wt) in waits {
        for (i, v) in wt.values.iter().enumerate() {
            writeln!(w, "{},{},{}", site + 1, i + 1, fmt_f64(*v)).map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_pair_waits(path: &Path, waits: &[&WaitingTimes]) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "pair,i,i_prime,kappa").map_err(|e| io_err(path, e))?;
    for wt in waits {
        let (anchor, reference) = match wt.kind {
            WaitKind::Pair { anchor, reference } => (anchor, reference),
            WaitKind::Site(_) => {
                return Err(CliError::Data("marginal waits in the pair file".into()))
            }
        };
        let (lo, hi) = (anchor.min(reference), anchor.max(reference));
        for v in &wt.values {
            writeln!(w, "{}-{},{},{},{}", lo + 1, hi + 1, anchor + 1, reference + 1, fmt_f64(*v))
                .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Marginal waits grouped by 0-based site index.
pub fn read_marginal_waits(path: &Path) -> Result<BTreeMap<usize, Vec<f64>>, CliError> {
    let mut out: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (row, cells) in read_csv_rows(path, &["site", "i", "kappa"])? {
        let site: usize = cells[0]
            .parse()
            .map_err(|_| CliError::Data(format!("{}: bad site id at row {row}", path.display())))?;
        let kappa = parse_cell(&cells[2], row, 3, path)?;
        out.entry(site - 1).or_default().push(kappa);
    }
    Ok(out)
}

/// Pair waits pooled over both directions, keyed by 0-based (lo, hi).
pub fn read_pair_waits(path: &Path) -> Result<BTreeMap<(usize, usize), Vec<f64>>, CliError> {
    let mut out: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (row, cells) in read_csv_rows(path, &["pair", "i", "i_prime", "kappa"])? {
        let i: usize = cells[1]
            .parse()
            .map_err(|_| CliError::Data(format!("{}: bad site id at row {row}", path.display())))?;
        let j: usize = cells[2]
            .parse()
            .map_err(|_| CliError::Data(format!("{}: bad site id at row {row}", path.display())))?;
        let kappa = parse_cell(&cells[3], row, 4, path)?;
        let key = ((i - 1).min(j - 1), (i - 1).max(j - 1));
        out.entry(key).or_default().push(kappa);
    }
    Ok(out)
}

pub fn read_waits_meta(path: &Path) -> Result<WaitsMeta, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    for line in text.lines() {
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if value.get("kind").and_then(|k| k.as_str()) == Some("waits") {
            return serde_json::from_value(value)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())));
        }
    }
    Err(CliError::Data(format!("{}: no waits record found", path.display())))
}

fn read_csv_rows(
    path: &Path,
    expected_header: &[&str],
) -> Result<Vec<(usize, Vec<String>)>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("{}: empty file", path.display())))?
        .map_err(|e| io_err(path, e))?;
    let found: Vec<&str> = header.trim_end().split(',').collect();
    if found != expected_header {
        return Err(CliError::Data(format!(
            "{}: expected header {expected_header:?}, got {found:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(|c| c.to_string()).collect();
        if cells.len() != expected_header.len() {
            return Err(CliError::Data(format!(
                "{}: data row {} has {} cells, expected {}",
                path.display(),
                idx + 1,
                cells.len(),
                expected_header.len()
            )));
        }
        rows.push((idx + 1, cells));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Chains
// ---------------------------------------------------------------------------

pub fn write_draws(path: &Path, draws: &GibbsDraws) -> Result<(), CliError> {
    let k = draws
        .params
        .first()
        .map(|p| p.n_components())
        .ok_or_else(|| CliError::Data("empty chain".into()))?;
    let mut w = create(path)?;
    let mut header = String::from("iter");
    for j in 0..k {
        header.push_str(&format!(",eta_{j}"));
    }
    for j in 1..k {
        header.push_str(&format!(",lambda_{j}"));
    }
    writeln!(w, "{header}").map_err(|e| io_err(path, e))?;
    for (iter, p) in draws.params.iter().enumerate() {
        let mut row = iter.to_string();
        for v in p.weights.iter().chain(&p.rates) {
            row.push(',');
            row.push_str(&fmt_f64(*v));
        }
        writeln!(w, "{row}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_draws(path: &Path) -> Result<GibbsDraws, CliError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("{}: empty file", path.display())))?
        .map_err(|e| io_err(path, e))?;
    let columns = header.trim_end().split(',').count();
    if columns < 4 || columns % 2 != 0 {
        return Err(CliError::Data(format!(
            "{}: not a draws header (found {columns} columns)",
            path.display()
        )));
    }
    let k = columns / 2;
    let mut params = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns {
            return Err(CliError::Data(format!(
                "{}: data row {} has {} cells, expected {columns}",
                path.display(),
                idx + 1,
                cells.len()
            )));
        }
        let mut weights = Vec::with_capacity(k);
        for (c, cell) in cells[1..1 + k].iter().enumerate() {
            weights.push(parse_cell(cell, idx + 1, c + 2, path)?);
        }
        let mut rates = Vec::with_capacity(k - 1);
        for (c, cell) in cells[1 + k..].iter().enumerate() {
            rates.push(parse_cell(cell, idx + 1, c + k + 2, path)?);
        }
        params.push(MixtureParams::new(weights, rates).map_err(CliError::from)?);
    }
    if params.is_empty() {
        return Err(CliError::Data(format!("{}: chain has no draws", path.display())));
    }
    Ok(GibbsDraws::from_params(params))
}

// ---------------------------------------------------------------------------
// Index report
// ---------------------------------------------------------------------------

/// One `gamma.csv` row.
#[derive(Debug, Clone)]
pub struct GammaRow {
    pub site_a: usize,
    pub site_b: usize,
    pub threshold: f64,
    pub metric: String,
    pub gamma_hat: f64,
    pub p_d: f64,
}

pub fn write_gamma(path: &Path, rows: &[GammaRow]) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "i,i_prime,threshold,metric,gamma_hat,p_d").map_err(|e| io_err(path, e))?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.site_a + 1,
            r.site_b + 1,
            fmt_f64(r.threshold),
            r.metric,
            fmt_f64(r.gamma_hat),
            fmt_f64(r.p_d)
        )
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_gamma(path: &Path) -> Result<Vec<GammaRow>, CliError> {
    let mut out = Vec::new();
    for (row, cells) in
        read_csv_rows(path, &["i", "i_prime", "threshold", "metric", "gamma_hat", "p_d"])?
    {
        out.push(GammaRow {
            site_a: cells[0]
                .parse::<usize>()
                .map_err(|_| CliError::Data(format!("{}: row {row}", path.display())))?
                - 1,
            site_b: cells[1]
                .parse::<usize>()
                .map_err(|_| CliError::Data(format!("{}: row {row}", path.display())))?
                - 1,
            threshold: parse_cell(&cells[2], row, 3, path)?,
            metric: cells[3].clone(),
            gamma_hat: parse_cell(&cells[4], row, 5, path)?,
            p_d: parse_cell(&cells[5], row, 6, path)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tailwait_core::exceedance::WaitKind;

    #[test]
    fn panel_round_trip_preserves_values_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        let panel = Panel::new(
            vec![vec![0.5, 1.0], vec![2.0, 3.0]],
            vec![0.5, 1.25, 9.75],
            vec![vec![0.0, 1e-30, 0.3333333333333333], vec![7.0, 4.2e19, 1.0 / 7.0]],
        )
        .unwrap();
        write_panel(&path, &panel).unwrap();
        write_meta_lines(
            &meta_path(&path),
            &[serde_json::json!({"kind": "panel", "sites": panel.sites()})],
        )
        .unwrap();
        let back = read_panel(&path).unwrap();
        assert_eq!(back, panel);
    }

    #[test]
    fn panel_reader_names_offending_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        std::fs::write(&path, "time,site_1\n1.0,2.0\n0.5,3.0\n").unwrap();
        let err = read_panel(&path).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");

        std::fs::write(&path, "time,site_1\n1.0,abc\n").unwrap();
        let err = read_panel(&path).unwrap_err();
        assert!(err.to_string().contains("column 2"), "{err}");

        std::fs::write(&path, "time,site_1\n1.0,2.0,3.0\n").unwrap();
        let err = read_panel(&path).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn missing_sidecar_falls_back_to_line_indices() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        std::fs::write(&path, "time,site_1,site_2\n1.0,2.0,3.0\n2.0,1.0,0.5\n").unwrap();
        let panel = read_panel(&path).unwrap();
        assert_eq!(panel.sites(), &[vec![1.0], vec![2.0]]);
    }

    #[test]
    fn waits_round_trip_and_pooling() {
        let dir = tempfile::tempdir().unwrap();
        let marginal = dir.path().join("waits_marginal.csv");
        let wt0 = WaitingTimes::new(WaitKind::Site(0), vec![0.0, 2.5], 1.0).unwrap();
        let wt1 = WaitingTimes::new(WaitKind::Site(1), vec![4.0], 1.0).unwrap();
        write_marginal_waits(&marginal, &[(0, &wt0), (1, &wt1)]).unwrap();
        let back = read_marginal_waits(&marginal).unwrap();
        assert_eq!(back[&0], vec![0.0, 2.5]);
        assert_eq!(back[&1], vec![4.0]);

        let pairs = dir.path().join("waits_pair.csv");
        let fwd =
            WaitingTimes::new(WaitKind::Pair { anchor: 0, reference: 2 }, vec![1.0], 1.0).unwrap();
        let bwd =
            WaitingTimes::new(WaitKind::Pair { anchor: 2, reference: 0 }, vec![3.0, 5.0], 1.0)
                .unwrap();
        write_pair_waits(&pairs, &[&fwd, &bwd]).unwrap();
        let back = read_pair_waits(&pairs).unwrap();
        assert_eq!(back[&(0, 2)], vec![1.0, 3.0, 5.0]);
    }

    #[test]
    fn draws_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("draws_site_1.csv");
        let params = vec![
            MixtureParams::new(vec![0.25, 0.5, 0.25], vec![1.5, 0.1]).unwrap(),
            MixtureParams::new(vec![0.5, 0.25, 0.25], vec![2.5, 0.7]).unwrap(),
        ];
        let draws = GibbsDraws::from_params(params.clone());
        write_draws(&path, &draws).unwrap();
        let back = read_draws(&path).unwrap();
        assert_eq!(back.params, params);
    }
}
