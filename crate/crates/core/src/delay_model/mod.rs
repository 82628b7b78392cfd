//! Per-operation delay estimates for combinational nodes.
//!
//! Two variants are available: a lookup [`Table`] with interpolation, and a
//! [`Fitted`] ensemble of small regression trees trained on samples. Both
//! serialize to a versioned JSON model file.

mod boost;
mod table;

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{BitWidth, OpKind};
use crate::wgraph::{NodeId, NodeRole, WGraph};

pub use boost::{fit, FitConfig, Fitted, Split, Tree, TreeNode};
pub use table::{FallbackRule, Table, TableEntry};

pub const FORMAT_VERSION: u32 = 1;

/// Feature vector of a combinational operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpFeatures {
    pub kind: OpKind,
    pub operand_count: usize,
    pub width: BitWidth,
}

impl OpFeatures {
    pub fn new(kind: OpKind, operand_count: usize, width: BitWidth) -> Self {
        Self {
            kind,
            operand_count,
            width,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelaySample {
    pub features: OpFeatures,
    pub delay_ps: f64,
}

#[derive(Debug, Error)]
pub enum DelayError {
    #[error("delay model has no entries for `{kind}`{}", node.map(|n| format!(" (node {n})")).unwrap_or_default())]
    UnknownKind { kind: OpKind, node: Option<NodeId> },
    #[error("`{0}` is not a combinational operation")]
    NotCombinational(OpKind),
    #[error("need at least 2 samples to fit, got {0}")]
    TooFewSamples(usize),
    #[error("sample {index}: {reason}")]
    BadSample { index: usize, reason: String },
    #[error("unsupported model format_version {0}")]
    Version(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum DelayModel {
    Table(Table),
    Fitted(Fitted),
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel::Table(Table::default_table())
    }
}

impl DelayModel {
    /// Predicted delay in picoseconds, never negative.
    pub fn predict(&self, f: &OpFeatures) -> Result<f64, DelayError> {
        if !f.kind.is_combinational() {
            return Err(DelayError::NotCombinational(f.kind));
        }
        let raw = match self {
            DelayModel::Table(t) => t.lookup(f),
            DelayModel::Fitted(m) => m.predict(f),
        }
        .ok_or(DelayError::UnknownKind {
            kind: f.kind,
            node: None,
        })?;
        Ok(raw.max(0.0))
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct File<'a> {
            format_version: u32,
            #[serde(flatten)]
            model: &'a DelayModel,
        }
        serde_json::to_string_pretty(&File {
            format_version: FORMAT_VERSION,
            model: self,
        })
        .expect("models serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, DelayError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format_version != FORMAT_VERSION {
            return Err(DelayError::Version(header.format_version));
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, DelayError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), DelayError> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// Sets `delta` of every combinational node from the model; other nodes get 0.
pub fn annotate(g: &WGraph, m: &DelayModel) -> Result<WGraph, DelayError> {
    let mut out = g.clone();
    for (i, node) in out.nodes.iter_mut().enumerate() {
        node.delta = match &node.role {
            NodeRole::Comb(op) => m
                .predict(&OpFeatures::new(op.kind, op.operand_count, op.width))
                .map_err(|e| match e {
                    DelayError::UnknownKind { kind, .. } => DelayError::UnknownKind {
                        kind,
                        node: Some(NodeId(i)),
                    },
                    other => other,
                })?,
            _ => 0.0,
        };
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    kind: OpKind,
    operands: usize,
    width: u32,
    delay_ps: f64,
}

/// Reads `kind,operands,width,delay_ps` rows.
pub fn read_samples<R: Read>(reader: R) -> Result<Vec<DelaySample>, DelayError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (index, row) in rdr.deserialize::<SampleRow>().enumerate() {
        let row = row?;
        let bad = |reason: &str| DelayError::BadSample {
            index,
            reason: reason.to_owned(),
        };
        if !row.kind.is_combinational() {
            return Err(bad("kind must be combinational"));
        }
        if row.operands == 0 && row.kind != OpKind::Const {
            return Err(bad("operand count must be at least 1"));
        }
        let width = BitWidth::new(row.width).ok_or_else(|| bad("width out of range"))?;
        if !(row.delay_ps.is_finite() && row.delay_ps >= 0.0) {
            return Err(bad("delay must be a non-negative number"));
        }
        out.push(DelaySample {
            features: OpFeatures::new(row.kind, row.operands, width),
            delay_ps: row.delay_ps,
        });
    }
    Ok(out)
}

pub fn write_samples<W: Write>(writer: W, samples: &[DelaySample]) -> Result<(), DelayError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for s in samples {
        wtr.serialize(SampleRow {
            kind: s.features.kind,
            operands: s.features.operand_count,
            width: s.features.width.get(),
            delay_ps: s.delay_ps,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

/// Mean squared error of `m` over `samples`.
pub fn mse(m: &DelayModel, samples: &[DelaySample]) -> Result<f64, DelayError> {
    let mut sum = 0.0;
    for s in samples {
        let e = m.predict(&s.features)? - s.delay_ps;
        sum += e * e;
    }
    Ok(sum / samples.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{bits, parse_design};
    use crate::wgraph::build_wgraph;

    fn f(kind: OpKind, n: usize, w: u32) -> OpFeatures {
        OpFeatures::new(kind, n, bits(w))
    }

    #[test]
    fn default_table_orders_adds_and_muls() {
        let m = DelayModel::default();
        let add = m.predict(&f(OpKind::Add, 2, 8)).unwrap();
        let mul = m.predict(&f(OpKind::Mul, 2, 8)).unwrap();
        assert!(mul > add);
        assert!(2.0 * add > mul);
        assert_eq!(m.predict(&f(OpKind::Const, 0, 37)).unwrap(), 0.0);
        assert!(matches!(
            m.predict(&f(OpKind::Delay, 1, 8)),
            Err(DelayError::NotCombinational(OpKind::Delay))
        ));
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let m = DelayModel::default();
        let text = m.to_json();
        assert!(text.contains("\"format_version\": 1"));
        assert!(text.contains("\"variant\": \"table\""));
        assert_eq!(DelayModel::from_json(&text).unwrap(), m);
        let bumped = text.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(
            DelayModel::from_json(&bumped),
            Err(DelayError::Version(2))
        ));
    }

    #[test]
    fn samples_csv_round_trip() {
        let text = "kind,operands,width,delay_ps\nadd,2,8,84\nmul, 2, 16, 240.5\n";
        let samples = read_samples(text.as_bytes()).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[1].features, f(OpKind::Mul, 2, 16));
        let mut buf = Vec::new();
        write_samples(&mut buf, &samples).unwrap();
        assert_eq!(read_samples(buf.as_slice()).unwrap(), samples);
        assert!(read_samples("kind,operands,width,delay_ps\npin,1,8,3\n".as_bytes()).is_err());
        assert!(read_samples("kind,operands,width,delay_ps\nadd,2,8,-1\n".as_bytes()).is_err());
    }

    #[test]
    fn annotate_sets_only_comb_nodes_and_is_idempotent() {
        let d = parse_design(
            "design t { %x = pin : i8  %c = const 3 : i8  %m = mul %x, %c : i8  %r = delay %m by 1 : i8  %s = add %r, %x : i8  sink %s : i8 }",
        )
        .unwrap();
        let m = DelayModel::default();
        let g = annotate(&build_wgraph(&d).unwrap(), &m).unwrap();
        for n in &g.nodes {
            match &n.role {
                NodeRole::Comb(op) if op.kind != OpKind::Const => assert!(n.delta > 0.0),
                _ => assert_eq!(n.delta, 0.0),
            }
        }
        assert_eq!(annotate(&g, &m).unwrap(), g);
    }

    #[test]
    fn unknown_kind_names_the_node() {
        let d = parse_design("design t { %x = pin : i8  %n = not %x : i8  sink %n : i8 }").unwrap();
        let t = Table::from_entries([TableEntry {
            kind: OpKind::Add,
            operands: 2,
            width: 8,
            delay_ps: 80.0,
        }]);
        let err = annotate(&build_wgraph(&d).unwrap(), &DelayModel::Table(t)).unwrap_err();
        assert!(matches!(
            err,
            DelayError::UnknownKind {
                kind: OpKind::Not,
                node: Some(NodeId(1))
            }
        ));
    }
}
