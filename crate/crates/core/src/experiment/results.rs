//! Result CSVs. Every file starts with a `schema_version` column; the
//! column sets are pinned by golden tests.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ProblemId;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Centralized,
    Extrapolation,
    Federated,
}

impl Mode {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "centralized" => Ok(Mode::Centralized),
            "extrapolation" => Ok(Mode::Extrapolation),
            "federated" => Ok(Mode::Federated),
            _ => Err(Error::usage(format!("unknown mode {name:?}"))),
        }
    }
}

/// One trained model's test error. Extrapolation runs give one row per
/// client; the other modes leave `client` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub schema_version: u32,
    pub problem: ProblemId,
    pub mode: Mode,
    pub n: usize,
    pub clients: usize,
    pub client: Option<usize>,
    pub local_epochs: usize,
    pub rounds: usize,
    pub seed: u64,
    pub w1: f64,
    pub l2_rel_error: f64,
}

/// Per-layer absolute weight divergence, in layout order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerColumn {
    pub name: String,
    pub value: f64,
}

/// One sweep point: W1 and the three model errors, plus the final
/// federated-vs-centralized divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub problem: ProblemId,
    pub n: usize,
    pub clients: usize,
    pub seed: u64,
    pub w1: f64,
    pub centralized: Option<f64>,
    pub extrapolation_worst: Option<f64>,
    pub extrapolation_mean: Option<f64>,
    pub federated: Option<f64>,
    pub wd_abs: Option<f64>,
    pub wd_rel: Option<f64>,
    pub wd_layers: Vec<LayerColumn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommSweepRow {
    pub schema_version: u32,
    pub problem: ProblemId,
    pub n: usize,
    pub clients: usize,
    pub seed: u64,
    pub local_epochs: usize,
    pub rounds: usize,
    pub l2_rel_error: f64,
}

pub(crate) fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), num)
}

fn write_serde<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_run_rows<W: Write>(w: W, rows: &[RunRow]) -> Result<()> {
    write_serde(w, rows)
}

pub fn write_comm_rows<W: Write>(w: W, rows: &[CommSweepRow]) -> Result<()> {
    write_serde(w, rows)
}

/// Fixed columns followed by `wd_<layer>` for the layers of the first row.
pub fn write_sweep_rows<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = [
        "schema_version",
        "problem",
        "n",
        "clients",
        "seed",
        "w1",
        "centralized",
        "extrapolation_worst",
        "extrapolation_mean",
        "federated",
        "wd_abs",
        "wd_rel",
    ]
    .map(String::from)
    .to_vec();
    let layers: Vec<&str> = rows.first().map_or(Vec::new(), |r| r.wd_layers.iter().map(|l| l.name.as_str()).collect());
    header.extend(layers.iter().map(|l| format!("wd_{l}")));
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            SCHEMA_VERSION.to_string(),
            r.problem.name().to_string(),
            r.n.to_string(),
            r.clients.to_string(),
            r.seed.to_string(),
            num(r.w1),
            opt(r.centralized),
            opt(r.extrapolation_worst),
            opt(r.extrapolation_mean),
            opt(r.federated),
            opt(r.wd_abs),
            opt(r.wd_rel),
        ];
        for name in &layers {
            rec.push(opt(r.wd_layers.iter().find(|l| l.name == *name).map(|l| l.value)));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_rows_have_versioned_header_and_empty_client() {
        let row = RunRow {
            schema_version: SCHEMA_VERSION,
            problem: ProblemId::AllenCahn,
            mode: Mode::Federated,
            n: 4,
            clients: 2,
            client: None,
            local_epochs: 5,
            rounds: 10,
            seed: 1,
            w1: 0.5,
            l2_rel_error: 0.25,
        };
        let mut buf = Vec::new();
        write_run_rows(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "schema_version,problem,mode,n,clients,client,local_epochs,rounds,seed,w1,l2_rel_error"
        );
        assert_eq!(lines.next().unwrap(), "1,allen-cahn,federated,4,2,,5,10,1,0.5,0.25");
    }

    #[test]
    fn sweep_rows_append_layer_columns() {
        let row = SweepRow {
            problem: ProblemId::Gramacy,
            n: 2,
            clients: 2,
            seed: 0,
            w1: 1.0,
            centralized: Some(0.1),
            extrapolation_worst: None,
            extrapolation_mean: None,
            federated: Some(0.2),
            wd_abs: Some(0.3),
            wd_rel: Some(0.01),
            wd_layers: vec![LayerColumn { name: "layer0.w".into(), value: 0.3 }],
        };
        let mut buf = Vec::new();
        write_sweep_rows(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("schema_version,problem,n,clients,seed,w1,centralized,extrapolation_worst,extrapolation_mean,federated,wd_abs,wd_rel,wd_layer0.w\n"));
        assert!(text.contains("1,gramacy,2,2,0,1e0,1e-1,,,2e-1,3e-1,1e-2,3e-1"));
    }
}
