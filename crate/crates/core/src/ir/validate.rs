use std::collections::{HashMap, HashSet};
use std::fmt;

use num_bigint::BigUint;

use super::{Attrs, BitWidth, Design, OpKind, Operation, ValueId};

/// A violated design invariant together with the offending value.
///
/// `site` names the op: its result value, or `sink#<n>` for the n-th sink.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    MissingBoundary {
        kind: OpKind,
    },
    DuplicateDefinition {
        value: ValueId,
    },
    UndefinedValue {
        site: String,
        value: ValueId,
    },
    Arity {
        site: String,
        kind: OpKind,
        found: usize,
    },
    MissingWidth {
        site: String,
    },
    WidthMismatch {
        site: String,
        expected: u32,
        found: u32,
    },
    InvalidAttribute {
        site: String,
        detail: String,
    },
    CombinationalCycle {
        cycle: Vec<ValueId>,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MissingBoundary { kind } => write!(f, "design has no {kind} op"),
            Diagnostic::DuplicateDefinition { value } => {
                write!(f, "{value} is defined more than once")
            }
            Diagnostic::UndefinedValue { site, value } => {
                write!(f, "{site} uses undefined value {value}")
            }
            Diagnostic::Arity { site, kind, found } => {
                write!(f, "{site}: `{kind}` cannot take {found} operand(s)")
            }
            Diagnostic::MissingWidth { site } => write!(f, "{site} has no result width"),
            Diagnostic::WidthMismatch {
                site,
                expected,
                found,
            } => {
                write!(
                    f,
                    "{site}: width mismatch, expected i{expected}, found i{found}"
                )
            }
            Diagnostic::InvalidAttribute { site, detail } => write!(f, "{site}: {detail}"),
            Diagnostic::CombinationalCycle { cycle } => {
                let names: Vec<String> = cycle.iter().map(ToString::to_string).collect();
                write!(f, "combinational cycle through {}", names.join(" -> "))
            }
        }
    }
}

fn site_of(op: &Operation, sink_index: usize) -> String {
    match &op.result {
        Some(r) => r.to_string(),
        None => format!("sink#{sink_index}"),
    }
}

/// Checks every design invariant. Returns an empty list iff the design is valid.
pub fn validate(d: &Design) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for kind in [OpKind::Pin, OpKind::Sink] {
        if !d.ops.iter().any(|op| op.kind == kind) {
            diags.push(Diagnostic::MissingBoundary { kind });
        }
    }

    let mut widths: HashMap<&ValueId, BitWidth> = HashMap::new();
    let mut seen: HashSet<&ValueId> = HashSet::new();
    for op in &d.ops {
        if let Some(r) = &op.result {
            if !seen.insert(r) {
                diags.push(Diagnostic::DuplicateDefinition { value: r.clone() });
            }
            if let Some(w) = op.result_width {
                widths.entry(r).or_insert(w);
            }
        }
    }

    let mut sink_index = 0;
    for op in &d.ops {
        let site = site_of(op, sink_index);
        if op.kind == OpKind::Sink {
            sink_index += 1;
        }
        check_shape(op, &site, &mut diags);
        let mut operand_widths = Vec::with_capacity(op.operands.len());
        for v in &op.operands {
            match widths.get(v) {
                Some(w) => operand_widths.push(Some(w.get())),
                None => {
                    if !seen.contains(v) {
                        diags.push(Diagnostic::UndefinedValue {
                            site: site.clone(),
                            value: v.clone(),
                        });
                    }
                    operand_widths.push(None);
                }
            }
        }
        // Width rules only make sense once all operand widths are known.
        if let Some(ws) = operand_widths.into_iter().collect::<Option<Vec<u32>>>() {
            check_widths(op, &site, &ws, &mut diags);
        }
    }

    if let Some(cycle) = find_combinational_cycle(d) {
        diags.push(Diagnostic::CombinationalCycle { cycle });
    }
    diags
}

fn check_shape(op: &Operation, site: &str, diags: &mut Vec<Diagnostic>) {
    let n = op.operands.len();
    let arity_ok = match op.kind {
        OpKind::Pin | OpKind::Const => n == 0,
        OpKind::Sink => n >= 1,
        OpKind::Delay | OpKind::Bubble | OpKind::Not | OpKind::Extract => n == 1,
        OpKind::Mux => n == 3,
        OpKind::Add
        | OpKind::Sub
        | OpKind::Mul
        | OpKind::And
        | OpKind::Or
        | OpKind::Xor
        | OpKind::Concat => n >= 2,
    };
    if !arity_ok {
        diags.push(Diagnostic::Arity {
            site: site.to_owned(),
            kind: op.kind,
            found: n,
        });
    }
    if op.kind == OpKind::Sink {
        if op.result.is_some() || op.result_width.is_some() {
            diags.push(Diagnostic::InvalidAttribute {
                site: site.to_owned(),
                detail: "sink has no result".into(),
            });
        }
    } else if op.result.is_none() || op.result_width.is_none() {
        diags.push(Diagnostic::MissingWidth {
            site: site.to_owned(),
        });
    }

    let bad_attr = |detail: &str| Diagnostic::InvalidAttribute {
        site: site.to_owned(),
        detail: detail.to_owned(),
    };
    match (op.kind, &op.attrs) {
        (OpKind::Delay, Attrs::Delay(k)) => {
            if *k < 1 {
                diags.push(bad_attr("delay count must be at least 1"));
            }
        }
        (OpKind::Delay, _) => diags.push(bad_attr("delay without a register count")),
        (OpKind::Const, Attrs::Const(_)) | (OpKind::Extract, Attrs::Extract { .. }) => {}
        (OpKind::Const, _) => diags.push(bad_attr("const without a value")),
        (OpKind::Extract, _) => diags.push(bad_attr("extract without a bit range")),
        (_, Attrs::None) => {}
        (kind, _) => diags.push(bad_attr(&format!("`{kind}` takes no attributes"))),
    }
}

fn check_widths(op: &Operation, site: &str, operands: &[u32], diags: &mut Vec<Diagnostic>) {
    let Some(result) = op.result_width.map(BitWidth::get) else {
        return;
    };
    let mut expect = |expected: u32, found: u32| {
        if expected != found {
            diags.push(Diagnostic::WidthMismatch {
                site: site.to_owned(),
                expected,
                found,
            });
        }
    };
    match op.kind {
        OpKind::Pin | OpKind::Sink => {}
        OpKind::Const => {
            if let (Attrs::Const(v), Some(w)) = (&op.attrs, op.result_width) {
                if !fits(v, w) {
                    diags.push(Diagnostic::InvalidAttribute {
                        site: site.to_owned(),
                        detail: format!("constant {v} does not fit in i{result}"),
                    });
                }
            }
        }
        OpKind::Delay | OpKind::Bubble | OpKind::Not => {
            if let Some(&w) = operands.first() {
                expect(w, result);
            }
        }
        kind if kind.is_uniform_arith() => {
            for &w in operands {
                expect(result, w);
            }
        }
        OpKind::Mux => {
            if let [sel, then, els] = operands {
                expect(1, *sel);
                expect(result, *then);
                expect(result, *els);
            }
        }
        OpKind::Concat => {
            let sum: u64 = operands.iter().map(|&w| u64::from(w)).sum();
            if sum != u64::from(result) {
                diags.push(Diagnostic::WidthMismatch {
                    site: site.to_owned(),
                    expected: u32::try_from(sum).unwrap_or(u32::MAX),
                    found: result,
                });
            }
        }
        OpKind::Extract => {
            if let (Attrs::Extract { low, width }, Some(&src)) = (&op.attrs, operands.first()) {
                expect(*width, result);
                if u64::from(*low) + u64::from(*width) > u64::from(src) {
                    diags.push(Diagnostic::InvalidAttribute {
                        site: site.to_owned(),
                        detail: format!(
                            "bit range [{low} +: {width}] exceeds operand width i{src}"
                        ),
                    });
                }
            }
        }
        _ => unreachable!("all kinds covered"),
    }
}

/// Returns the value names along one combinational cycle, if any. Operand
/// edges into `delay` ops are cut; every other use is combinational.
pub(crate) fn find_combinational_cycle(d: &Design) -> Option<Vec<ValueId>> {
    let defs = d.definitions();
    let n = d.ops.len();
    // succ[i] = ops that combinationally consume op i's result
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, op) in d.ops.iter().enumerate() {
        if op.kind == OpKind::Delay {
            continue;
        }
        for v in &op.operands {
            if let Some(&i) = defs.get(v) {
                succ[i].push(j);
            }
        }
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; n];
    let mut parent = vec![usize::MAX; n];
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Active;
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if let Some(&v) = succ[u].get(*next) {
                *next += 1;
                match mark[v] {
                    Mark::New => {
                        mark[v] = Mark::Active;
                        parent[v] = u;
                        stack.push((v, 0));
                    }
                    Mark::Active => {
                        let mut cycle = vec![v];
                        let mut cur = u;
                        while cur != v {
                            cycle.push(cur);
                            cur = parent[cur];
                        }
                        cycle.reverse();
                        cycle.rotate_right(1);
                        let names = cycle
                            .into_iter()
                            .map(|i| {
                                d.ops[i]
                                    .result
                                    .clone()
                                    .unwrap_or_else(|| ValueId::new("sink"))
                            })
                            .collect();
                        return Some(names);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[u] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

/// True iff `value` fits in `width` bits.
pub(crate) fn fits(value: &BigUint, width: BitWidth) -> bool {
    value.bits() <= u64::from(width.get())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{bits, parse_design};

    fn base() -> Design {
        let mut d = Design::new("t");
        d.push(Operation::pin("a", bits(8)))
            .push(Operation::pin("b", bits(8)));
        d
    }

    #[test]
    fn self_loop_add_is_a_combinational_cycle() {
        let mut d = base();
        d.push(Operation::comb(
            OpKind::Add,
            "s",
            vec!["s".into(), "b".into()],
            bits(8),
        ))
        .push(Operation::sink(vec!["s".into()]));
        let diags = validate(&d);
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert!(
            matches!(&diags[0], Diagnostic::CombinationalCycle { cycle } if cycle == &vec![ValueId::new("s")])
        );
    }

    #[test]
    fn add_of_mixed_widths_is_rejected() {
        let mut d = base();
        d.push(Operation::pin("c", bits(4)))
            .push(Operation::comb(
                OpKind::Add,
                "s",
                vec!["a".into(), "c".into()],
                bits(8),
            ))
            .push(Operation::sink(vec!["s".into()]));
        let diags = validate(&d);
        assert_eq!(
            diags,
            vec![Diagnostic::WidthMismatch {
                site: "%s".into(),
                expected: 8,
                found: 4
            }]
        );
    }

    #[test]
    fn feedback_through_delay_is_fine() {
        let d = parse_design(
            "design acc { %x = pin : i8  %r = delay %s by 1 : i8  %s = add %r, %x : i8  sink %s : i8 }",
        )
        .unwrap();
        assert!(validate(&d).is_empty());
    }

    #[test]
    fn missing_boundaries_are_reported() {
        let d = Design::new("empty");
        let diags = validate(&d);
        assert!(diags.contains(&Diagnostic::MissingBoundary { kind: OpKind::Pin }));
        assert!(diags.contains(&Diagnostic::MissingBoundary { kind: OpKind::Sink }));
    }

    #[test]
    fn extract_range_and_mux_select() {
        let mut d = base();
        d.push(Operation::extract("e", "a", 6, bits(4)))
            .push(Operation::comb(
                OpKind::Mux,
                "m",
                vec!["a".into(), "a".into(), "b".into()],
                bits(8),
            ))
            .push(Operation::sink(vec!["e".into(), "m".into()]));
        let diags = validate(&d);
        assert_eq!(diags.len(), 2, "{diags:?}");
        assert!(matches!(diags[0], Diagnostic::InvalidAttribute { .. }));
        assert!(matches!(
            diags[1],
            Diagnostic::WidthMismatch {
                expected: 1,
                found: 8,
                ..
            }
        ));
    }

    #[test]
    fn duplicate_and_undefined() {
        let mut d = base();
        d.push(Operation::pin("a", bits(8)))
            .push(Operation::sink(vec!["nope".into()]));
        let diags = validate(&d);
        assert!(diags.contains(&Diagnostic::DuplicateDefinition { value: "a".into() }));
        assert!(diags.contains(&Diagnostic::UndefinedValue {
            site: "sink#0".into(),
            value: "nope".into()
        }));
    }

    #[test]
    fn oversized_constant() {
        let mut d = base();
        d.push(Operation::constant("c", 300u32, bits(8)))
            .push(Operation::sink(vec!["c".into()]));
        assert!(matches!(
            validate(&d)[..],
            [Diagnostic::InvalidAttribute { .. }]
        ));
        assert!(fits(&BigUint::from(255u32), bits(8)));
    }
}
