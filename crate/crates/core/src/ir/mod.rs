//! Flat sequential-circuit IR.
//!
//! A [`Design`] is a list of SSA-style operations. Registers are explicit
//! `delay` operations on a single implicit clock; `pin` and `sink` mark the
//! circuit boundary. Everything else is combinational.

mod parse;
pub(crate) mod print;
mod validate;

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;

pub use parse::{parse_design, ParseError};
pub use print::print_design;
pub use validate::{validate, Diagnostic};

/// Bit width of a value. Always within `1..=BitWidth::MAX`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitWidth(u32);

impl BitWidth {
    pub const MAX: u32 = 4096;

    pub fn new(bits: u32) -> Option<Self> {
        (1..=Self::MAX).contains(&bits).then_some(Self(bits))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for BitWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i{}", self.0)
    }
}

/// Name of an SSA value, stored without the leading `%`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValueId(String);

impl ValueId {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        match name.strip_prefix('%') {
            Some(stripped) => Self(stripped.to_owned()),
            None => Self(name),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ValueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "%{}", self.0)
    }
}

impl From<&str> for ValueId {
    fn from(s: &str) -> Self {
        ValueId::new(s)
    }
}

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Pin,
    Sink,
    Delay,
    Bubble,
    Const,
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Not,
    Mux,
    Concat,
    Extract,
}

impl OpKind {
    pub const ALL: [OpKind; 15] = [
        OpKind::Pin,
        OpKind::Sink,
        OpKind::Delay,
        OpKind::Bubble,
        OpKind::Const,
        OpKind::Add,
        OpKind::Sub,
        OpKind::Mul,
        OpKind::And,
        OpKind::Or,
        OpKind::Xor,
        OpKind::Not,
        OpKind::Mux,
        OpKind::Concat,
        OpKind::Extract,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            OpKind::Pin => "pin",
            OpKind::Sink => "sink",
            OpKind::Delay => "delay",
            OpKind::Bubble => "bubble",
            OpKind::Const => "const",
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::And => "and",
            OpKind::Or => "or",
            OpKind::Xor => "xor",
            OpKind::Not => "not",
            OpKind::Mux => "mux",
            OpKind::Concat => "concat",
            OpKind::Extract => "extract",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.mnemonic() == s)
    }

    /// True for kinds that become delay-annotated nodes of the graph.
    pub fn is_combinational(self) -> bool {
        !matches!(
            self,
            OpKind::Pin | OpKind::Sink | OpKind::Delay | OpKind::Bubble
        )
    }

    /// Kinds whose operands and result all share one width.
    pub fn is_uniform_arith(self) -> bool {
        matches!(
            self,
            OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::And | OpKind::Or | OpKind::Xor
        )
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// Kind-specific attributes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Attrs {
    None,
    /// Register count of a `delay`.
    Delay(u32),
    /// Value of a `const`.
    Const(BigUint),
    /// Bit range of an `extract`.
    Extract {
        low: u32,
        width: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Operation {
    pub kind: OpKind,
    pub result: Option<ValueId>,
    pub operands: Vec<ValueId>,
    pub attrs: Attrs,
    /// Absent only for `sink`.
    pub result_width: Option<BitWidth>,
}

impl Operation {
    fn def(
        kind: OpKind,
        result: ValueId,
        operands: Vec<ValueId>,
        attrs: Attrs,
        width: BitWidth,
    ) -> Self {
        Self {
            kind,
            result: Some(result),
            operands,
            attrs,
            result_width: Some(width),
        }
    }

    pub fn pin(result: impl Into<ValueId>, width: BitWidth) -> Self {
        Self::def(OpKind::Pin, result.into(), vec![], Attrs::None, width)
    }

    pub fn constant(
        result: impl Into<ValueId>,
        value: impl Into<BigUint>,
        width: BitWidth,
    ) -> Self {
        Self::def(
            OpKind::Const,
            result.into(),
            vec![],
            Attrs::Const(value.into()),
            width,
        )
    }

    pub fn delay(
        result: impl Into<ValueId>,
        input: impl Into<ValueId>,
        count: u32,
        width: BitWidth,
    ) -> Self {
        Self::def(
            OpKind::Delay,
            result.into(),
            vec![input.into()],
            Attrs::Delay(count),
            width,
        )
    }

    pub fn bubble(result: impl Into<ValueId>, input: impl Into<ValueId>, width: BitWidth) -> Self {
        Self::def(
            OpKind::Bubble,
            result.into(),
            vec![input.into()],
            Attrs::None,
            width,
        )
    }

    pub fn extract(
        result: impl Into<ValueId>,
        input: impl Into<ValueId>,
        low: u32,
        width: BitWidth,
    ) -> Self {
        Self::def(
            OpKind::Extract,
            result.into(),
            vec![input.into()],
            Attrs::Extract {
                low,
                width: width.get(),
            },
            width,
        )
    }

    /// Any attribute-free combinational op (`add`, `mux`, `concat`, ...).
    pub fn comb(
        kind: OpKind,
        result: impl Into<ValueId>,
        operands: Vec<ValueId>,
        width: BitWidth,
    ) -> Self {
        Self::def(kind, result.into(), operands, Attrs::None, width)
    }

    pub fn sink(operands: Vec<ValueId>) -> Self {
        Self {
            kind: OpKind::Sink,
            result: None,
            operands,
            attrs: Attrs::None,
            result_width: None,
        }
    }

    pub fn delay_count(&self) -> Option<u32> {
        match self.attrs {
            Attrs::Delay(k) => Some(k),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Design {
    pub name: String,
    pub ops: Vec<Operation>,
}

impl Design {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ops: Vec::new(),
        }
    }

    pub fn push(&mut self, op: Operation) -> &mut Self {
        self.ops.push(op);
        self
    }

    /// Map from value name to the index of its (first) defining op.
    pub fn definitions(&self) -> HashMap<&ValueId, usize> {
        let mut defs = HashMap::with_capacity(self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            if let Some(r) = &op.result {
                defs.entry(r).or_insert(i);
            }
        }
        defs
    }

    pub fn width_of(&self, value: &ValueId) -> Option<BitWidth> {
        self.ops
            .iter()
            .find(|op| op.result.as_ref() == Some(value))
            .and_then(|op| op.result_width)
    }

    pub fn pins(&self) -> impl Iterator<Item = &Operation> {
        self.ops.iter().filter(|op| op.kind == OpKind::Pin)
    }

    pub fn sinks(&self) -> impl Iterator<Item = &Operation> {
        self.ops.iter().filter(|op| op.kind == OpKind::Sink)
    }

    /// Number of physical registers: the sum of all `delay` counts.
    pub fn register_count(&self) -> u64 {
        self.ops
            .iter()
            .filter_map(|op| op.delay_count())
            .map(u64::from)
            .sum()
    }

    /// Total stored bits: `delay count x width` summed over `delay` ops.
    pub fn register_bits(&self) -> u64 {
        self.ops
            .iter()
            .filter_map(|op| {
                let k = op.delay_count()?;
                Some(u64::from(k) * u64::from(op.result_width?.get()))
            })
            .sum()
    }

    /// Same ops reordered into the canonical printing order: topological over
    /// def-use dependencies, ties broken by result name.
    pub fn canonical(&self) -> Design {
        let order = print::canonical_order(self);
        Design {
            name: self.name.clone(),
            ops: order.into_iter().map(|i| self.ops[i].clone()).collect(),
        }
    }

    /// Equality up to op ordering.
    pub fn structurally_eq(&self, other: &Design) -> bool {
        self.canonical() == other.canonical()
    }

    /// Equality up to op ordering and renaming of non-pin values.
    ///
    /// Exact when it returns `true`. Designs with interchangeable but
    /// differently placed ops may compare unequal.
    pub fn alpha_eq(&self, other: &Design) -> bool {
        let normal = |d: &Design| {
            let ops = print::structural_order(d)
                .into_iter()
                .map(|i| d.ops[i].clone())
                .collect();
            Design {
                name: d.name.clone(),
                ops,
            }
            .alpha_renamed()
        };
        normal(self) == normal(other)
    }

    /// Renames every non-pin value to `%v<N>` in op order. Pin names are
    /// interface and stay as they are.
    pub fn alpha_renamed(&self) -> Design {
        let mut map: HashMap<ValueId, ValueId> = HashMap::new();
        let mut next = 0usize;
        for op in &self.ops {
            if let Some(r) = &op.result {
                let new = if op.kind == OpKind::Pin {
                    r.clone()
                } else {
                    next += 1;
                    ValueId::new(format!("v{}", next - 1))
                };
                map.insert(r.clone(), new);
            }
        }
        let rename = |v: &ValueId| map.get(v).cloned().unwrap_or_else(|| v.clone());
        Design {
            name: self.name.clone(),
            ops: self
                .ops
                .iter()
                .map(|op| Operation {
                    result: op.result.as_ref().map(rename),
                    operands: op.operands.iter().map(rename).collect(),
                    ..op.clone()
                })
                .collect(),
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_design(self))
    }
}

/// Shorthand used throughout tests and examples.
pub fn bits(n: u32) -> BitWidth {
    BitWidth::new(n).unwrap_or_else(|| panic!("bit width {n} out of range"))
}
