use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use impedance_sca::io::{
    parse_touchstone_sweep, parse_vna_csv, read_archive, write_archive, ArchiveInfo,
};
use impedance_sca::metrics::Table;
use impedance_sca::pdn::{s11_transmission_line_with, MediumSpec};
use impedance_sca::sim::run_campaign;
use impedance_sca::trace::TraceBatch;
use impedance_sca::FrequencyGrid;

use crate::config::SimConfig;
use crate::{IngestArgs, Outcome, SimulateArgs, TlModelArgs};

pub fn load_batch(path: &Path) -> Result<(TraceBatch, ArchiveInfo)> {
    read_archive(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_table(table: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => table.write_csv(p).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(table.to_csv()?.as_bytes())?;
            Ok(())
        }
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn parse_hex(s: &str) -> Result<Vec<u8>> {
    let s = s.trim().trim_start_matches("0x");
    hex::decode(s).with_context(|| format!("{s:?} is not a hex byte string"))
}

pub fn tl_model(a: &TlModelArgs) -> Result<Outcome> {
    let grid = FrequencyGrid::new(a.start_hz, a.stop_hz, a.points)?;
    let medium = MediumSpec::new(a.eps_r, a.length_m)?;
    let mut t = Table::new(
        ["frequency_hz", "s11_re", "s11_im", "mag_db", "phase_deg"]
            .map(String::from)
            .to_vec(),
    );
    for f in grid.stamps() {
        let s = s11_transmission_line_with(f, &medium, a.convention.into())?;
        t.push(vec![
            f.to_string(),
            s.0.re.to_string(),
            s.0.im.to_string(),
            s.magnitude_db().to_string(),
            s.phase_deg().to_string(),
        ]);
    }
    write_table(&t, a.out.as_deref())?;
    Ok(Outcome::Done)
}

pub fn simulate(a: &SimulateArgs) -> Result<Outcome> {
    let cfg = SimConfig::load(&a.config)?;
    let model = cfg.device_model()?;
    if let Some(p) = &a.device_out {
        write_text(p, &model.to_json())?;
    }
    let batch = run_campaign(&model, &cfg.scenario, &cfg.schedule, &cfg.key, &cfg.settings())?;
    let info = ArchiveInfo {
        device_fingerprint: Some(model.fingerprint()),
        campaign_seed: Some(cfg.seed),
        ..Default::default()
    };
    write_archive(&a.out, &batch, &info).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!(
        "simulate: {} traces x {} points, device {}",
        batch.len(),
        batch.grid().points(),
        model.fingerprint()
    );
    Ok(Outcome::Done)
}

pub fn ingest(a: &IngestArgs) -> Result<Outcome> {
    let mut traces = Vec::new();
    for path in &a.input {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        let sweep = match ext.as_str() {
            "s1p" | "ts" => parse_touchstone_sweep(&text).map_err(anyhow::Error::from),
            "csv" => parse_vna_csv(&text).map_err(anyhow::Error::from),
            _ => bail!("{}: unknown extension (expected .s1p or .csv)", path.display()),
        }
        .with_context(|| format!("parsing {}", path.display()))?;
        let t = sweep.to_trace().with_context(|| format!("gridding {}", path.display()))?;
        traces.push(t);
    }
    let grid = *traces[0].grid();
    let batch = TraceBatch::new(grid, traces, a.channel.into()).context("inputs are on different grids")?;
    write_archive(&a.out, &batch, &ArchiveInfo::default())
        .with_context(|| format!("writing {}", a.out.display()))?;
    Ok(Outcome::Done)
}
