use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::ir::{Design, OpKind, Operation, ValueId};

#[derive(Debug, Error, PartialEq)]
pub enum BlackBoxError {
    #[error("black-box value {0} is not defined in the design")]
    NotFound(ValueId),
}

/// Result of cutting black boxes out of a design.
#[derive(Clone, Debug, PartialEq)]
pub struct BlackBoxed {
    pub design: Design,
    /// Groups of values that ended up in a separate connected component
    /// because of the cut. They are kept in the design.
    pub disconnected: Vec<Vec<ValueId>>,
}

/// Replaces each listed value's defining op with a `pin` of the same width
/// and routes that op's inputs into a new `sink`.
pub fn blackbox_boundaries(
    d: &Design,
    blackbox: &BTreeSet<ValueId>,
) -> Result<BlackBoxed, BlackBoxError> {
    let defs = d.definitions();
    if let Some(missing) = blackbox.iter().find(|v| !defs.contains_key(v)) {
        return Err(BlackBoxError::NotFound(missing.clone()));
    }
    let mut ops = Vec::with_capacity(d.ops.len());
    let mut sinks = Vec::new();
    for op in &d.ops {
        let boxed = op.result.as_ref().is_some_and(|r| blackbox.contains(r));
        if boxed && op.kind != OpKind::Pin {
            let width = op.result_width.expect("defining ops carry a width");
            ops.push(Operation::pin(op.result.clone().expect("checked"), width));
            if !op.operands.is_empty() {
                sinks.push(Operation::sink(op.operands.clone()));
            }
        } else {
            ops.push(op.clone());
        }
    }
    ops.extend(sinks);
    let design = Design {
        name: d.name.clone(),
        ops,
    };
    let before = components(d).len();
    let after = components(&design);
    let disconnected = if after.len() > before {
        after.into_iter().skip(1).collect()
    } else {
        Vec::new()
    };
    for group in &disconnected {
        log::warn!(
            "black-boxing separated {} value(s) starting at {}",
            group.len(),
            group[0]
        );
    }
    Ok(BlackBoxed {
        design,
        disconnected,
    })
}

/// Weakly connected components of the def-use graph, as value names,
/// ordered by first appearance.
fn components(d: &Design) -> Vec<Vec<ValueId>> {
    let n = d.ops.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let defs = d.definitions();
    for (j, op) in d.ops.iter().enumerate() {
        for v in &op.operands {
            if let Some(&i) = defs.get(v) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<ValueId>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (i, op) in d.ops.iter().enumerate() {
        let root = find(&mut parent, i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        if let Some(r) = &op.result {
            groups[g].push(r.clone());
        }
    }
    groups.retain(|g| !g.is_empty());
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_design, validate};

    const SRAM_READ: &str = "design mem {
  %addr = pin : i4
  %wdata = pin : i8
  %rdata = concat %addr, %wdata : i12
  %q = extract %rdata [0 +: 8] : i8
  %r = delay %q by 1 : i8
  %o = add %r, %wdata : i8
  sink %o : i8
}";

    #[test]
    fn sram_read_becomes_a_pin() {
        let d = parse_design(SRAM_READ).unwrap();
        let set: BTreeSet<ValueId> = [ValueId::new("rdata")].into();
        let out = blackbox_boundaries(&d, &set).unwrap();
        assert!(validate(&out.design).is_empty());
        let rdata = out
            .design
            .ops
            .iter()
            .find(|o| o.result == Some("rdata".into()))
            .unwrap();
        assert_eq!(rdata.kind, OpKind::Pin);
        assert_eq!(rdata.result_width.unwrap().get(), 12);
        let last = out.design.ops.last().unwrap();
        assert_eq!(last.kind, OpKind::Sink);
        assert_eq!(
            last.operands,
            vec![ValueId::new("addr"), ValueId::new("wdata")]
        );
        assert!(out.disconnected.is_empty());
    }

    #[test]
    fn empty_set_is_identity() {
        let d = parse_design(SRAM_READ).unwrap();
        let out = blackbox_boundaries(&d, &BTreeSet::new()).unwrap();
        assert_eq!(out.design, d);
        assert!(out.disconnected.is_empty());
    }

    #[test]
    fn unknown_value_is_an_error() {
        let d = parse_design(SRAM_READ).unwrap();
        let set: BTreeSet<ValueId> = [ValueId::new("nope")].into();
        assert_eq!(
            blackbox_boundaries(&d, &set),
            Err(BlackBoxError::NotFound("nope".into()))
        );
    }
}
