use std::fs;

use anyhow::{bail, Context, Result};
use impedance_sca::attacks::{cima_attack, dima_attack, KeyRanking};
use impedance_sca::crypto::{BitId, IntermediateSelector, SboxKind};
use impedance_sca::metrics::{
    difference_of_means, emit_figure_data, key_rank, snr_per_stamp, EvaluationReport, FigureData,
    FigureTag, RankPoint,
};
use impedance_sca::{Channel, TraceBatch};

use crate::attack::expected_byte;
use crate::tools::{load_batch, write_table, write_text};
use crate::{Outcome, ReportArgs};

pub fn run(a: &ReportArgs) -> Result<Outcome> {
    if !a.merge.is_empty() {
        return merge(a);
    }
    let tag: FigureTag = a.figure.as_deref().unwrap_or_default().parse()?;
    let Some(path) = &a.traces else {
        bail!("--figure {tag} needs --traces");
    };
    let (batch, _) = load_batch(path)?;
    let sbox: SboxKind = a.sbox.into();
    let bits = report_bits(&a.bit)?;
    let mut data = FigureData {
        grid: Some(*batch.grid()),
        channel: batch.channel,
        top_n: a.top,
        ..Default::default()
    };
    match tag {
        FigureTag::FanoutDm => {
            let bit = &bits[0];
            data.grid = Some(*batch.grid());
            data.dm_phase = Some(difference_of_means(&batch.clone().with_channel(Channel::PhaseDeg), bit)?);
            data.dm_mag = Some(difference_of_means(&batch.with_channel(Channel::MagnitudeDb), bit)?);
        }
        FigureTag::BitDm => {
            for b in &bits {
                data.bit_curves.push((b.to_string(), difference_of_means(&batch, b)?));
            }
        }
        FigureTag::Snr => data.snr = Some(snr_per_stamp(&batch, &bits[0])?.values),
        FigureTag::DomMatrix | FigureTag::TopKeys => {
            let sel = IntermediateSelector::all_bits(a.byte).with_sbox(sbox);
            let r = dima_attack(&batch, &sel, 0..sbox.key_space())?;
            data.dom = Some((r.dom, r.key_space));
            data.ranking = Some(r.ranking);
        }
        FigureTag::CorrelationMatrix => {
            let sel = IntermediateSelector::byte(a.byte).with_sbox(sbox);
            let r = cima_attack(&batch, &sel, 0..sbox.key_space())?;
            data.correlation = Some((r.correlation, r.key_space));
        }
        FigureTag::RankTrajectory => {
            let Some(k) = &a.expect_key else {
                bail!("rank-trajectory needs --expect-key");
            };
            data.trajectory = trajectory(&batch, a.byte, sbox, expected_byte(k, a.byte)?, &a.steps)?;
        }
    }
    write_table(&emit_figure_data(&data, tag.name())?, Some(&a.out))?;
    Ok(Outcome::Done)
}

fn report_bits(names: &[String]) -> Result<Vec<BitId>> {
    if names.is_empty() {
        return Ok(vec![BitId::label("fanout")]);
    }
    names
        .iter()
        .map(|n| n.parse::<BitId>().map_err(|e| anyhow::anyhow!("bit {n:?}: {e}")))
        .collect()
}

/// Rank of the true key after DIMA on the first `n` traces, for each step
/// that fits in the batch.
fn trajectory(batch: &TraceBatch, byte: usize, sbox: SboxKind, key: u8, steps: &[usize]) -> Result<Vec<RankPoint>> {
    let sel = IntermediateSelector::all_bits(byte).with_sbox(sbox);
    let mut out = Vec::new();
    for &n in steps.iter().filter(|&&n| n >= 2 && n <= batch.len()) {
        let prefix = TraceBatch::new(*batch.grid(), batch.traces()[..n].to_vec(), batch.channel)?;
        let r = dima_attack(&prefix, &sel, 0..sbox.key_space())?;
        out.push(RankPoint {
            traces: n,
            rank: rank(&r.ranking, key)?,
        });
    }
    if out.is_empty() {
        bail!("no --steps value lies in 2..={}", batch.len());
    }
    Ok(out)
}

fn rank(r: &KeyRanking, key: u8) -> Result<usize> {
    key_rank(r, key as u16).with_context(|| format!("key 0x{key:02x} is outside the key space"))
}

fn merge(a: &ReportArgs) -> Result<Outcome> {
    let mut out = EvaluationReport::default();
    for p in &a.merge {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let r = EvaluationReport::from_json(&text).with_context(|| format!("parsing {}", p.display()))?;
        if r.schema_version != out.schema_version {
            bail!(
                "{} has report schema {}, expected {}",
                p.display(),
                r.schema_version,
                out.schema_version
            );
        }
        out.experiments.extend(r.experiments);
    }
    write_text(&a.out, &out.to_json())?;
    Ok(Outcome::Done)
}
