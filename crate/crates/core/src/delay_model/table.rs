use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::OpFeatures;
use crate::ir::OpKind;

/// How a table answers queries it has no exact entry for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackRule {
    /// Same kind, nearest operand count (ties to the smaller), then linear
    /// interpolation in width between bracketing entries and constant
    /// extrapolation outside them.
    #[default]
    NearestOperandsLinearWidth,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub kind: OpKind,
    pub operands: usize,
    pub width: u32,
    pub delay_ps: f64,
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    fallback_rule: FallbackRule,
    entries: Vec<TableEntry>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "TableFile", into = "TableFile")]
pub struct Table {
    fallback: FallbackRule,
    entries: BTreeMap<(OpKind, usize, u32), f64>,
}

impl From<TableFile> for Table {
    fn from(f: TableFile) -> Self {
        let mut t = Table::from_entries(f.entries);
        t.fallback = f.fallback_rule;
        t
    }
}

impl From<Table> for TableFile {
    fn from(t: Table) -> Self {
        TableFile {
            fallback_rule: t.fallback,
            entries: t.entries().collect(),
        }
    }
}

pub const DEFAULT_WIDTHS: [u32; 9] = [1, 2, 4, 8, 16, 32, 64, 128, 256];

fn analytic_delay(kind: OpKind, operands: usize, width: u32) -> f64 {
    let w = f64::from(width);
    let steps = operands.saturating_sub(1).max(1) as f64;
    let tree_levels = (operands.max(2) as f64).log2().ceil();
    match kind {
        OpKind::Add | OpKind::Sub => steps * (20.0 + 8.0 * w),
        OpKind::Mul => steps * (40.0 + 12.5 * w),
        OpKind::And | OpKind::Or | OpKind::Xor => 15.0 * tree_levels,
        OpKind::Not => 8.0,
        OpKind::Mux => 25.0,
        _ => 0.0,
    }
}

impl Table {
    pub fn from_entries(entries: impl IntoIterator<Item = TableEntry>) -> Self {
        let mut t = Table::default();
        for e in entries {
            t.insert(e);
        }
        t
    }

    /// Ripple-carry shaped adders, wider-constant multipliers, near-constant
    /// bitwise logic, constant-cost muxes and free wiring ops.
    pub fn default_table() -> Self {
        let kinds = OpKind::ALL.into_iter().filter(|k| k.is_combinational());
        let mut t = Table::default();
        for kind in kinds {
            for operands in 1..=4 {
                for width in DEFAULT_WIDTHS {
                    t.insert(TableEntry {
                        kind,
                        operands,
                        width,
                        delay_ps: analytic_delay(kind, operands, width),
                    });
                }
            }
        }
        t
    }

    pub fn insert(&mut self, e: TableEntry) {
        self.entries
            .insert((e.kind, e.operands, e.width), e.delay_ps);
    }

    pub fn fallback_rule(&self) -> FallbackRule {
        self.fallback
    }

    pub fn entries(&self) -> impl Iterator<Item = TableEntry> + '_ {
        self.entries
            .iter()
            .map(|(&(kind, operands, width), &delay_ps)| TableEntry {
                kind,
                operands,
                width,
                delay_ps,
            })
    }

    pub fn lookup(&self, f: &OpFeatures) -> Option<f64> {
        let of_kind = self
            .entries
            .range((f.kind, 0, 0)..=(f.kind, usize::MAX, u32::MAX));
        let operands = of_kind
            .map(|(&(_, n, _), _)| n)
            .min_by_key(|&n| (n.abs_diff(f.operand_count), n))?;
        let series: Vec<(u32, f64)> = self
            .entries
            .range((f.kind, operands, 0)..=(f.kind, operands, u32::MAX))
            .map(|(&(_, _, w), &d)| (w, d))
            .collect();
        let w = f.width.get();
        let upper = series.partition_point(|&(sw, _)| sw < w);
        Some(
            match (upper.checked_sub(1).map(|i| series[i]), series.get(upper)) {
                (_, Some(&(hw, hd))) if hw == w => hd,
                (Some((lw, ld)), Some(&(hw, hd))) => {
                    let t = f64::from(w - lw) / f64::from(hw - lw);
                    ld + t * (hd - ld)
                }
                (Some((_, ld)), None) => ld,
                (None, Some(&(_, hd))) => hd,
                (None, None) => unreachable!("series is non-empty"),
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::bits;

    fn q(t: &Table, kind: OpKind, n: usize, w: u32) -> Option<f64> {
        t.lookup(&OpFeatures::new(kind, n, bits(w)))
    }

    #[test]
    fn interpolates_and_clamps() {
        let t = Table::from_entries([
            TableEntry {
                kind: OpKind::Add,
                operands: 2,
                width: 4,
                delay_ps: 40.0,
            },
            TableEntry {
                kind: OpKind::Add,
                operands: 2,
                width: 16,
                delay_ps: 100.0,
            },
            TableEntry {
                kind: OpKind::Add,
                operands: 3,
                width: 8,
                delay_ps: 500.0,
            },
        ]);
        assert_eq!(q(&t, OpKind::Add, 2, 8), Some(60.0));
        assert_eq!(q(&t, OpKind::Add, 2, 1), Some(40.0));
        assert_eq!(q(&t, OpKind::Add, 2, 64), Some(100.0));
        assert_eq!(q(&t, OpKind::Add, 3, 8), Some(500.0));
        // Operand count 1 is nearest to 2.
        assert_eq!(q(&t, OpKind::Add, 1, 16), Some(100.0));
        assert_eq!(q(&t, OpKind::Mul, 2, 8), None);
    }

    #[test]
    fn default_table_is_monotone_in_width() {
        let t = Table::default_table();
        for kind in OpKind::ALL.into_iter().filter(|k| k.is_combinational()) {
            for n in 1..=4 {
                let mut prev = 0.0;
                for w in 1..=300 {
                    let d = q(&t, kind, n, w).unwrap();
                    assert!(d >= prev, "{kind} x{n} at i{w}");
                    prev = d;
                }
            }
        }
    }
}
