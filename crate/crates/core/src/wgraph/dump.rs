//! Line-oriented text dump of a graph:
//!
//! ```text
//! node <id> <role> delta=<ps>
//! edge <from> <to> w=<int> beta=<int>
//! deltas: <node>=<int> ...
//! ```

use std::fmt::Write;

use thiserror::Error;

use super::{CombOp, NodeId, NodeRole, WEdge, WGraph, WNode};
use crate::ir::{Attrs, BitWidth, OpKind};

#[derive(Debug, Error, PartialEq)]
pub enum DumpError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

pub fn dump_graph(g: &WGraph) -> String {
    let mut out = String::new();
    for (i, n) in g.nodes.iter().enumerate() {
        let _ = writeln!(out, "node {i} {} delta={}", n.role.label(), n.delta);
    }
    for e in &g.edges {
        let _ = writeln!(
            out,
            "edge {} {} w={} beta={}",
            e.from.0,
            e.to.0,
            e.w,
            e.beta.get()
        );
    }
    out
}

/// Graph dump followed by the stage potential of every node.
pub fn dump_solution(g: &WGraph, delta_s: &[i64]) -> String {
    let mut out = dump_graph(g);
    out.push_str("deltas:");
    for (i, s) in delta_s.iter().enumerate() {
        let _ = write!(out, " {i}={s}");
    }
    out.push('\n');
    out
}

fn field<'a>(tok: Option<&'a str>, key: &str, line: usize) -> Result<&'a str, DumpError> {
    tok.and_then(|t| t.strip_prefix(key))
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| DumpError::Syntax {
            line,
            message: format!("expected `{key}=`"),
        })
}

fn num<T: std::str::FromStr>(s: Option<&str>, line: usize) -> Result<T, DumpError> {
    s.and_then(|s| s.parse().ok())
        .ok_or_else(|| DumpError::Syntax {
            line,
            message: "expected a number".into(),
        })
}

/// Reads a graph dump back, along with the `deltas:` line if present.
///
/// Dumps carry no operand order or attributes; combinational nodes get
/// ports in edge order and the width of their widest output edge.
pub fn parse_dump(text: &str) -> Result<(WGraph, Option<Vec<i64>>), DumpError> {
    let mut nodes: Vec<(String, f64)> = Vec::new();
    let mut edges: Vec<(usize, usize, u32, u32)> = Vec::new();
    let mut deltas = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            None => {}
            Some("node") => {
                let id: usize = num(toks.next(), line)?;
                if id != nodes.len() {
                    return Err(DumpError::Syntax {
                        line,
                        message: format!("node ids must be consecutive, expected {}", nodes.len()),
                    });
                }
                let role = toks.next().unwrap_or_default().to_owned();
                let delta: f64 = num(Some(field(toks.next(), "delta", line)?), line)?;
                nodes.push((role, delta));
            }
            Some("edge") => {
                let from = num(toks.next(), line)?;
                let to = num(toks.next(), line)?;
                let w = num(Some(field(toks.next(), "w", line)?), line)?;
                let beta = num(Some(field(toks.next(), "beta", line)?), line)?;
                edges.push((from, to, w, beta));
            }
            Some("deltas:") => {
                let mut ds = vec![0i64; nodes.len()];
                for t in toks {
                    let (k, v) = t.split_once('=').ok_or_else(|| DumpError::Syntax {
                        line,
                        message: format!("bad delta entry `{t}`"),
                    })?;
                    let k: usize = num(Some(k), line)?;
                    let v: i64 = num(Some(v), line)?;
                    *ds.get_mut(k).ok_or_else(|| DumpError::Syntax {
                        line,
                        message: format!("delta for unknown node {k}"),
                    })? = v;
                }
                deltas = Some(ds);
            }
            Some(other) => {
                return Err(DumpError::Syntax {
                    line,
                    message: format!("unknown record `{other}`"),
                })
            }
        }
    }

    let n = nodes.len();
    let mut out_width = vec![0u32; n];
    let mut fan_in = vec![0usize; n];
    for &(from, to, _, beta) in &edges {
        if from >= n || to >= n {
            return Err(DumpError::Syntax {
                line: 0,
                message: format!("edge {from} -> {to} refers to a missing node"),
            });
        }
        out_width[from] = out_width[from].max(beta);
        fan_in[to] += 1;
    }
    let width_of = |v: usize| BitWidth::new(out_width[v].max(1)).expect("edge widths are in range");
    let mut wnodes = Vec::with_capacity(n);
    for (v, (role, delta)) in nodes.into_iter().enumerate() {
        let role = match role.as_str() {
            "pin" => NodeRole::Pin { width: width_of(v) },
            "sink" => NodeRole::Sink,
            "bubble" => NodeRole::Bubble { width: width_of(v) },
            other => {
                let kind = OpKind::from_mnemonic(other)
                    .filter(|k| k.is_combinational())
                    .ok_or_else(|| DumpError::Syntax {
                        line: 0,
                        message: format!("unknown node role `{other}`"),
                    })?;
                NodeRole::Comb(CombOp {
                    kind,
                    operand_count: fan_in[v],
                    width: width_of(v),
                    attrs: Attrs::None,
                })
            }
        };
        wnodes.push(WNode {
            role,
            delta,
            origin: None,
        });
    }
    let mut next_port = vec![0usize; n];
    let wedges = edges
        .into_iter()
        .map(|(from, to, w, beta)| {
            let port = if matches!(wnodes[to].role, NodeRole::Bubble { .. }) {
                0
            } else {
                next_port[to] += 1;
                next_port[to] - 1
            };
            WEdge {
                from: NodeId(from),
                to: NodeId(to),
                w,
                beta: BitWidth::new(beta.max(1)).expect("edge widths are in range"),
                port,
                origin: None,
            }
        })
        .collect();
    Ok((
        WGraph {
            design_name: "dump".into(),
            nodes: wnodes,
            edges: wedges,
        },
        deltas,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_design;
    use crate::wgraph::{build_wgraph, isomorphic};

    #[test]
    fn dump_and_reread() {
        let d = parse_design(
            "design t { %a = pin : i8  %b = pin : i8  %r = delay %s by 2 : i8  %s = add %a, %r : i8  %m = mul %s, %b : i8  sink %m, %s : i8, i8 }",
        )
        .unwrap();
        let g = build_wgraph(&d).unwrap();
        let deltas: Vec<i64> = (0..g.nodes.len() as i64).map(|i| i - 2).collect();
        let text = dump_solution(&g, &deltas);
        assert!(text.contains("edge 5 2 w=2 beta=8"), "{text}");
        assert!(text.contains("node 2 add delta=0"), "{text}");
        let (back, reread) = parse_dump(&text).unwrap();
        assert_eq!(reread, Some(deltas));
        assert_eq!(back.edges.len(), g.edges.len());
        assert_eq!(back.capacity(), g.capacity());
        back.check().unwrap();
        assert!(isomorphic(&back, &back));
    }

    #[test]
    fn bad_records_are_rejected() {
        assert!(parse_dump("node 0 pin delta=0\nedge 0 3 w=1 beta=2\n").is_err());
        assert!(parse_dump("vertex 0\n").is_err());
        assert!(parse_dump("node 1 pin delta=0\n").is_err());
    }
}
