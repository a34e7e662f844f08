use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::RunResult;
use crate::config::{BeamformingKind, CsiKind, NetworkMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}'"))),
        }
    }
}

pub const RESULTS_CSV: &str = "results.csv";
pub const CDF_CSV: &str = "cdf.csv";
pub const RESULTS_JSON: &str = "results.json";

const RESULTS_HEADER: &[&str] = &[
    "One row per drop and MS. Rates in bit/s, efficiencies in bit/J, powers in W.",
    "sweep_param, sweep_value: swept parameter and its value (empty for a plain run)",
    "drop, seed: drop index and its derived seed; ms: MS index",
    "mode: cf | uc; serve_n: MSs per AP in uc mode; beamforming: digital | hybrid; csi: perfect | estimated",
    "p_max_w: per-AP downlink budget; p_t_max_w: per-MS uplink budget",
    "dl_rate_opt, dl_rate_uniform: downlink rate of the MS with optimized / uniform powers",
    "ul_rate_opt, ul_rate_uniform: uplink rate of the MS with optimized / full powers",
    "dl_gee_opt, dl_gee_uniform, ul_gee_opt, ul_gee_uniform: GEE of the drop (repeated on each MS row)",
    "outage_links, regularized_aps, bcd_fallback_aps, unserved_ms, stalled_solves: drop flags",
];

const CDF_HEADER: &[&str] = &[
    "Empirical CDFs of per-MS rates, one row per sorted sample.",
    "sweep_param, sweep_value: as in results.csv; series: dl_opt | dl_uniform | ul_opt | ul_uniform",
    "rank: 1-based position in the sorted sample; rate_bps: sample value; cdf: rank / samples",
];

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_comments(w: &mut impl Write, path: &Path, lines: &[&str]) -> Result<()> {
    for l in lines {
        writeln!(w, "# {l}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn sweep_fields(r: &RunResult) -> (String, String) {
    match r.sweep {
        Some(p) => (p.parameter.name().to_string(), p.value.to_string()),
        None => (String::new(), String::new()),
    }
}

/// Writes the per-drop, per-MS table.
pub fn write_results_csv(results: &[RunResult], path: &Path) -> Result<()> {
    let mut file = create(path)?;
    write_comments(&mut file, path, RESULTS_HEADER)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "sweep_param", "sweep_value", "drop", "seed", "ms", "mode", "serve_n", "beamforming", "csi",
        "p_max_w", "p_t_max_w", "dl_rate_opt", "dl_rate_uniform", "ul_rate_opt", "ul_rate_uniform",
        "dl_gee_opt", "dl_gee_uniform", "ul_gee_opt", "ul_gee_uniform", "outage_links",
        "regularized_aps", "bcd_fallback_aps", "unserved_ms", "stalled_solves",
    ])?;
    for r in results {
        let c = &r.config;
        let (sp, sv) = sweep_fields(r);
        let mode = match c.network.mode {
            NetworkMode::Cf => "cf",
            NetworkMode::Uc => "uc",
        };
        let bf = match c.beamforming.kind {
            BeamformingKind::Digital => "digital",
            BeamformingKind::Hybrid => "hybrid",
        };
        let csi = match c.csi.kind {
            CsiKind::Perfect => "perfect",
            CsiKind::Estimated => "estimated",
        };
        for d in &r.drops {
            for k in 0..d.downlink.rates.len() {
                let f = &d.flags;
                w.write_record([
                    sp.clone(),
                    sv.clone(),
                    d.index.to_string(),
                    d.seed.to_string(),
                    k.to_string(),
                    mode.to_string(),
                    c.network.serve.to_string(),
                    bf.to_string(),
                    csi.to_string(),
                    c.power.p_max_w.to_string(),
                    c.power.p_t_max_w.to_string(),
                    d.downlink.rates[k].to_string(),
                    d.downlink.rates_uniform[k].to_string(),
                    d.uplink.rates[k].to_string(),
                    d.uplink.rates_uniform[k].to_string(),
                    d.downlink.gee.to_string(),
                    d.downlink.gee_uniform.to_string(),
                    d.uplink.gee.to_string(),
                    d.uplink.gee_uniform.to_string(),
                    f.outage_links.to_string(),
                    f.regularized_aps.to_string(),
                    f.bcd_fallback_aps.to_string(),
                    f.unserved_ms.to_string(),
                    f.stalled_solves.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the empirical CDFs (`F(x_i) = i / n` on sorted samples).
pub fn write_cdf_csv(results: &[RunResult], path: &Path) -> Result<()> {
    let mut file = create(path)?;
    write_comments(&mut file, path, CDF_HEADER)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["sweep_param", "sweep_value", "series", "rank", "rate_bps", "cdf"])?;
    for r in results {
        let (sp, sv) = sweep_fields(r);
        for (name, samples) in r.cdf.series() {
            let n = samples.len() as f64;
            for (i, v) in samples.iter().enumerate() {
                w.write_record([
                    sp.clone(),
                    sv.clone(),
                    name.to_string(),
                    (i + 1).to_string(),
                    v.to_string(),
                    ((i + 1) as f64 / n).to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes any serializable value (normally the full results) as JSON.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut file = create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json(path: &Path) -> Result<Vec<RunResult>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

/// Writes `results` into `dir` (created if missing); returns the paths.
pub fn emit(results: &[RunResult], format: OutputFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let p = dir.join(RESULTS_CSV);
        write_results_csv(results, &p)?;
        written.push(p);
        let p = dir.join(CDF_CSV);
        write_cdf_csv(results, &p)?;
        written.push(p);
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        let p = dir.join(RESULTS_JSON);
        write_json(results, &p)?;
        written.push(p);
    }
    Ok(written)
}
