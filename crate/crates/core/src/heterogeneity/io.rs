use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::Shard;
use crate::{Error, Result};

/// One row per point: `x0..x{d-1}`, `label` (empty when unlabelled),
/// `client_id`.
pub fn write_shards_csv<W: Write>(w: W, shards: &[Shard]) -> Result<()> {
    let dim = shards.iter().find_map(|s| s.points.first()).map_or(0, |p| p.len());
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    header.push("client_id".into());
    out.write_record(&header)?;
    for s in shards {
        for (i, p) in s.points.iter().enumerate() {
            let mut row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            row.push(s.labels.as_ref().map_or(String::new(), |l| format!("{:e}", l[i])));
            row.push(s.client_id.to_string());
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads rows written by [`write_shards_csv`], grouped by client id.
pub fn read_shards_csv<R: Read>(r: R) -> Result<Vec<Shard>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    let dim = header.iter().filter(|h| h.starts_with('x')).count();
    let label_col = header.iter().position(|h| h == "label");
    let client_col = header
        .iter()
        .position(|h| h == "client_id")
        .ok_or_else(|| Error::usage("shard CSV lacks a client_id column"))?;
    let parse = |s: &str| -> Result<f64> { s.trim().parse().map_err(|_| Error::usage(format!("bad number {s:?}"))) };
    let mut by_client: BTreeMap<usize, (Vec<Vec<f64>>, Vec<Option<f64>>)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let p = (0..dim).map(|i| parse(&rec[i])).collect::<Result<Vec<_>>>()?;
        let label = match label_col.map(|c| &rec[c]) {
            Some(s) if !s.is_empty() => Some(parse(s)?),
            _ => None,
        };
        let k: usize = rec[client_col].trim().parse().map_err(|_| Error::usage("bad client_id"))?;
        let e = by_client.entry(k).or_default();
        e.0.push(p);
        e.1.push(label);
    }
    Ok(by_client
        .into_iter()
        .map(|(client_id, (points, labels))| {
            let labels = labels.iter().all(Option::is_some).then(|| labels.into_iter().flatten().collect());
            Shard { client_id, points, labels, spec: None, blocks: Vec::new() }
        })
        .collect())
}
