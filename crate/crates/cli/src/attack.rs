use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use impedance_sca::attacks::{
    cima_attack, dima_attack_with, recover_master_key, tima_attack_with, KeyRanking,
    TimaOptions,
};
use impedance_sca::crypto::{BitId, IntermediateSelector, SboxKind};
use impedance_sca::io::{read_templates, write_templates};
use impedance_sca::metrics::{emit_figure_data, EvaluationReport, ExperimentRecord, FigureData};
use impedance_sca::trace::TraceBatch;
use serde_json::{json, Value};

use crate::tools::{load_batch, parse_hex, write_table, write_text};
use crate::{CimaArgs, DimaArgs, Outcome, TargetArgs, TimaAttackArgs, TimaProfileArgs};

pub fn selector(byte: usize, sbox: SboxKind, bit: Option<u8>, whole: IntermediateSelector) -> Result<IntermediateSelector> {
    let sel = match bit {
        Some(b) => IntermediateSelector::bit(byte, b),
        None => whole,
    }
    .with_sbox(sbox);
    if !sel.is_valid() {
        bail!("bit {} is outside the {}-bit S-box output", bit.unwrap_or(0), sbox.width_bits());
    }
    Ok(sel)
}

fn target_batch(t: &TargetArgs) -> Result<TraceBatch> {
    let (batch, _) = load_batch(&t.traces)?;
    Ok(match t.channel {
        Some(c) => batch.with_channel(c.into()),
        None => batch,
    })
}

/// The key byte an `--expect-key` value names for state byte `byte`.
pub fn expected_byte(s: &str, byte: usize) -> Result<u8> {
    let k = parse_hex(s)?;
    match k.len() {
        1 => Ok(k[0]),
        n if byte < n => Ok(k[byte]),
        n => bail!("--expect-key has {n} bytes, no byte {byte}"),
    }
}

fn ranking_json(r: &KeyRanking, top: usize) -> Value {
    r.entries()
        .iter()
        .take(top)
        .map(|e| {
            json!({
                "key": format!("{:02x}", e.hypothesis),
                "score": e.score,
                "best_frequency_hz": e.best_frequency_hz,
                "degenerate": e.degenerate,
            })
        })
        .collect()
}

fn write_report(path: Option<&std::path::Path>, record: ExperimentRecord, started: Instant) -> Result<()> {
    eprintln!("{}: {:.2} s", record.name, started.elapsed().as_secs_f64());
    if let Some(p) = path {
        let mut r = EvaluationReport::default();
        r.push(record);
        write_text(p, &r.to_json())?;
    }
    Ok(())
}

fn check_best(t: &TargetArgs, ranking: &KeyRanking) -> Result<Outcome> {
    let best = ranking.best().map(|e| e.hypothesis).unwrap_or(0);
    println!("best key 0x{best:02x}");
    if let Some(k) = &t.expect_key {
        let want = expected_byte(k, t.byte)? as u16;
        if best != want {
            let rank = ranking.rank_of(want).unwrap_or(0);
            return Ok(Outcome::Failed(format!(
                "best hypothesis 0x{best:02x}, expected 0x{want:02x} at rank {rank}"
            )));
        }
    }
    Ok(Outcome::Done)
}

fn attack_record(name: &str, t: &TargetArgs, batch: &TraceBatch, ranking: &KeyRanking) -> ExperimentRecord {
    let mut details = BTreeMap::new();
    details.insert("traces".into(), json!(batch.len()));
    details.insert("byte".into(), json!(t.byte));
    details.insert("channel".into(), json!(batch.channel.name()));
    details.insert("ranking".into(), ranking_json(ranking, t.top));
    if let Some(best) = ranking.best() {
        details.insert("best_key".into(), json!(format!("{:02x}", best.hypothesis)));
    }
    ExperimentRecord {
        name: name.into(),
        details,
        ..Default::default()
    }
}

pub fn dima(a: &DimaArgs) -> Result<Outcome> {
    let started = Instant::now();
    let t = &a.target;
    let batch = target_batch(t)?;
    let sbox: SboxKind = t.sbox.into();
    let sel = selector(t.byte, sbox, a.bit, IntermediateSelector::all_bits(t.byte))?;
    let r = dima_attack_with(&batch, &sel, 0..sbox.key_space(), a.score.into())?;
    if let Some(p) = &a.band_report {
        let data = FigureData {
            grid: Some(*batch.grid()),
            channel: batch.channel,
            dom: Some((r.dom.clone(), r.key_space.clone())),
            ..Default::default()
        };
        write_table(&emit_figure_data(&data, "dom-matrix")?, Some(p))?;
    }
    let mut rec = attack_record("dima", t, &batch, &r.ranking);
    rec.details.insert("degenerate_hypotheses".into(), json!(r.degenerate.iter().filter(|d| **d).count()));
    write_report(t.report.as_deref(), rec, started)?;
    check_best(t, &r.ranking)
}

pub fn cima(a: &CimaArgs) -> Result<Outcome> {
    let started = Instant::now();
    let t = &a.target;
    let batch = target_batch(t)?;
    let sbox: SboxKind = t.sbox.into();
    let sel = selector(t.byte, sbox, a.bit, IntermediateSelector::byte(t.byte))?;
    let r = cima_attack(&batch, &sel, 0..sbox.key_space())?;
    if let Some(p) = &a.correlation_report {
        let data = FigureData {
            grid: Some(*batch.grid()),
            channel: batch.channel,
            correlation: Some((r.correlation.clone(), r.key_space.clone())),
            ..Default::default()
        };
        write_table(&emit_figure_data(&data, "correlation-matrix")?, Some(p))?;
    }
    let mut rec = attack_record("cima", t, &batch, &r.ranking);
    rec.details.insert("zero_variance_entries".into(), json!(r.zero_variance.len()));
    write_report(t.report.as_deref(), rec, started)?;
    check_best(t, &r.ranking)
}

/// Target bits: explicit `--bit` names, else the first `count` key-share
/// bits of `shares` shares in byte, share, bit order.
pub fn target_bits(names: &[String], count: usize, shares: u8) -> Result<Vec<BitId>> {
    if !names.is_empty() {
        return names
            .iter()
            .map(|n| n.parse::<BitId>().map_err(|e| anyhow::anyhow!("bit {n:?}: {e}")))
            .collect();
    }
    let all = BitId::key_share_bits(shares, 0..16u8);
    if count == 0 || count > all.len() {
        bail!("--bits must be in 1..={}", all.len());
    }
    Ok(all.into_iter().take(count).collect())
}

pub fn tima_profile(a: &TimaProfileArgs) -> Result<Outcome> {
    let started = Instant::now();
    let (batch, _) = load_batch(&a.traces)?;
    let batch = match a.channel {
        Some(c) => batch.with_channel(c.into()),
        None => batch,
    };
    let targets = target_bits(&a.bit, a.bits, a.shares)?;
    let opts = TimaOptions {
        pois: a.pois,
        alpha: a.alpha,
        ridge: a.ridge,
        ..Default::default()
    };
    let set = impedance_sca::attacks::tima_profile(&batch, &targets, &opts)?;
    write_templates(&a.out, &set).with_context(|| format!("writing {}", a.out.display()))?;
    let short = set.templates.iter().filter(|t| t.shortfall).count();
    eprintln!(
        "tima-profile: {} templates from {} traces ({short} with fewer POIs than requested), {:.2} s",
        set.templates.len(),
        batch.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(Outcome::Done)
}

pub fn tima_attack(a: &TimaAttackArgs) -> Result<Outcome> {
    let started = Instant::now();
    let set = read_templates(&a.templates).with_context(|| format!("reading {}", a.templates.display()))?;
    let (batch, _) = load_batch(&a.traces)?;
    let posterior = tima_attack_with(&set, &batch, a.accumulation.into())?;

    // Key bytes whose share bits are all templated.
    let bytes: Vec<u8> = (0..16u8)
        .filter(|&byte| {
            (0..a.shares).all(|s| (0..8).all(|b| set.template(&BitId::key_share(s, byte, b)).is_some()))
        })
        .collect();
    let mut details = BTreeMap::new();
    details.insert("traces".into(), json!(batch.len()));
    details.insert(
        "bits".into(),
        posterior
            .bits
            .iter()
            .map(|b| json!({"bit": b.bit.to_string(), "value": u8::from(b.decision), "margin": b.margin}))
            .collect(),
    );
    let mut outcome = Outcome::Done;
    if !bytes.is_empty() {
        let rec = recover_master_key(&posterior, a.shares, &bytes)?;
        let shares: Vec<String> = rec.shares.iter().map(hex::encode).collect();
        println!("shares {} -> key {}", shares.join(" "), hex::encode(&rec.key));
        details.insert("key_bytes".into(), json!(bytes));
        details.insert("shares".into(), json!(shares));
        details.insert("key".into(), json!(hex::encode(&rec.key)));
        if let Some(k) = &a.expect_key {
            let want = parse_hex(k)?;
            let got: Vec<u8> = if want.len() == 16 {
                bytes.iter().map(|&b| want[b as usize]).collect()
            } else {
                want
            };
            if got != rec.key {
                outcome = Outcome::Failed(format!(
                    "recovered key {}, expected {}",
                    hex::encode(&rec.key),
                    hex::encode(&got)
                ));
            }
        }
    } else if a.expect_key.is_some() {
        bail!("--expect-key needs templates for every share bit of at least one key byte");
    }
    let record = ExperimentRecord {
        name: "tima-attack".into(),
        details,
        ..Default::default()
    };
    write_report(a.report.as_deref(), record, started)?;
    Ok(outcome)
}
