//! Cycle-accurate interpreter for designs.
//!
//! Values are unsigned and wrap modulo `2^width`. Registers start at zero;
//! `delay … by k` is a k-stage shift register. `mux s, a, b` yields `a` when
//! `s` is 1. `concat` places its first operand in the most significant bits.

mod io;

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ir::{print::canonical_order, validate, Attrs, Design, Diagnostic, OpKind, ValueId};

pub use io::{read_stimulus, write_trace, CsvError};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("design is not valid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("stimulus has no values for pin {0}")]
    MissingPin(ValueId),
    #[error("stimulus drives {0}, which is not a pin")]
    UnknownPin(ValueId),
    #[error("pin {pin} has {found} values, expected {expected}")]
    Length {
        pin: ValueId,
        expected: usize,
        found: usize,
    },
    #[error("pin {pin} cycle {cycle}: value {value} does not fit in {width} bits")]
    OutOfRange {
        pin: ValueId,
        cycle: usize,
        value: BigUint,
        width: u32,
    },
    #[error("interfaces differ: {0}")]
    Interface(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stimulus {
    pub cycles: usize,
    pub inputs: BTreeMap<ValueId, Vec<BigUint>>,
}

impl Stimulus {
    /// Uniformly random values for every pin of `d`.
    pub fn random(d: &Design, cycles: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inputs = BTreeMap::new();
        for pin in d.pins() {
            let width = pin.result_width.expect("pins have widths").get();
            let values = (0..cycles).map(|_| random_bits(&mut rng, width)).collect();
            inputs.insert(pin.result.clone().expect("pins have results"), values);
        }
        Self { cycles, inputs }
    }
}

fn random_bits(rng: &mut impl Rng, width: u32) -> BigUint {
    let words = width.div_ceil(32) as usize;
    let digits: Vec<u32> = (0..words).map(|_| rng.gen()).collect();
    BigUint::from_slice(&digits) & mask(width)
}

fn mask(width: u32) -> BigUint {
    (BigUint::one() << width) - 1u32
}

/// Output columns in sink order, then operand order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub cycles: usize,
    pub outputs: Vec<(ValueId, Vec<BigUint>)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquivalenceResult {
    Equivalent,
    Mismatch {
        /// Column index into the trace outputs.
        output: usize,
        name: ValueId,
        cycle: usize,
        left: BigUint,
        right: BigUint,
    },
}

impl EquivalenceResult {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivalenceResult::Equivalent)
    }
}

struct Compiled {
    /// Operand op indices per op.
    args: Vec<Vec<usize>>,
    order: Vec<usize>,
    masks: Vec<BigUint>,
    widths: Vec<u32>,
}

fn compile(d: &Design) -> Result<Compiled, SimError> {
    let diags = validate(d);
    if !diags.is_empty() {
        return Err(SimError::Invalid(diags));
    }
    let defs = d.definitions();
    let args = d
        .ops
        .iter()
        .map(|op| op.operands.iter().map(|v| defs[v]).collect())
        .collect();
    let widths: Vec<u32> = d
        .ops
        .iter()
        .map(|op| op.result_width.map_or(0, |w| w.get()))
        .collect();
    Ok(Compiled {
        args,
        order: canonical_order(d),
        masks: widths.iter().map(|&w| mask(w)).collect(),
        widths,
    })
}

pub fn simulate(d: &Design, s: &Stimulus) -> Result<Trace, SimError> {
    let c = compile(d)?;
    let mut pin_values: HashMap<usize, &Vec<BigUint>> = HashMap::new();
    for (i, op) in d
        .ops
        .iter()
        .enumerate()
        .filter(|(_, o)| o.kind == OpKind::Pin)
    {
        let name = op.result.as_ref().expect("pins have results");
        let values = s
            .inputs
            .get(name)
            .ok_or_else(|| SimError::MissingPin(name.clone()))?;
        if values.len() != s.cycles {
            return Err(SimError::Length {
                pin: name.clone(),
                expected: s.cycles,
                found: values.len(),
            });
        }
        if let Some((cycle, v)) = values.iter().enumerate().find(|(_, v)| **v > c.masks[i]) {
            return Err(SimError::OutOfRange {
                pin: name.clone(),
                cycle,
                value: v.clone(),
                width: c.widths[i],
            });
        }
        pin_values.insert(i, values);
    }
    if let Some(extra) = s
        .inputs
        .keys()
        .find(|k| !d.pins().any(|p| p.result.as_ref() == Some(*k)))
    {
        return Err(SimError::UnknownPin(extra.clone()));
    }

    let mut outputs: Vec<(ValueId, Vec<BigUint>)> = Vec::new();
    let mut sink_cols: Vec<(usize, usize)> = Vec::new();
    for (i, op) in d
        .ops
        .iter()
        .enumerate()
        .filter(|(_, o)| o.kind == OpKind::Sink)
    {
        for (k, v) in op.operands.iter().enumerate() {
            sink_cols.push((c.args[i][k], outputs.len()));
            outputs.push((v.clone(), Vec::with_capacity(s.cycles)));
        }
    }

    // Shift registers, newest stage first.
    let mut regs: HashMap<usize, Vec<BigUint>> = d
        .ops
        .iter()
        .enumerate()
        .filter_map(|(i, op)| Some((i, vec![BigUint::zero(); op.delay_count()? as usize])))
        .collect();
    let mut val: Vec<BigUint> = vec![BigUint::zero(); d.ops.len()];
    #[allow(clippy::needless_range_loop)]
    for cycle in 0..s.cycles {
        for &i in &c.order {
            let op = &d.ops[i];
            let a = |k: usize| &val[c.args[i][k]];
            let m = &c.masks[i];
            let v = match op.kind {
                OpKind::Sink => continue,
                OpKind::Pin => pin_values[&i][cycle].clone(),
                OpKind::Delay => regs[&i].last().expect("delay count ≥ 1").clone(),
                OpKind::Bubble => a(0).clone(),
                OpKind::Const => match &op.attrs {
                    Attrs::Const(v) => v & m,
                    _ => unreachable!("validated"),
                },
                OpKind::Add => {
                    c.args[i]
                        .iter()
                        .fold(BigUint::zero(), |acc, &x| acc + &val[x])
                        & m
                }
                OpKind::Sub => {
                    c.args[i][1..]
                        .iter()
                        .fold(a(0) + (m + 1u32) * c.args[i].len(), |acc, &x| acc - &val[x])
                        & m
                }
                OpKind::Mul => c.args[i]
                    .iter()
                    .fold(BigUint::one(), |acc, &x| (acc * &val[x]) & m),
                OpKind::And => c.args[i][1..]
                    .iter()
                    .fold(a(0).clone(), |acc, &x| acc & &val[x]),
                OpKind::Or => c.args[i][1..]
                    .iter()
                    .fold(a(0).clone(), |acc, &x| acc | &val[x]),
                OpKind::Xor => c.args[i][1..]
                    .iter()
                    .fold(a(0).clone(), |acc, &x| acc ^ &val[x]),
                OpKind::Not => m ^ a(0),
                OpKind::Mux => {
                    if a(0).is_zero() {
                        a(2).clone()
                    } else {
                        a(1).clone()
                    }
                }
                OpKind::Concat => c.args[i]
                    .iter()
                    .fold(BigUint::zero(), |acc, &x| (acc << c.widths[x]) | &val[x]),
                OpKind::Extract => match op.attrs {
                    Attrs::Extract { low, .. } => (a(0) >> low) & m,
                    _ => unreachable!("validated"),
                },
            };
            debug_assert!(
                v <= *m,
                "{} exceeds its width",
                op.result.as_ref().map_or("?", |r| r.as_str())
            );
            val[i] = v;
        }
        for &(src, col) in &sink_cols {
            outputs[col].1.push(val[src].clone());
        }
        for (i, stages) in regs.iter_mut() {
            stages.pop();
            stages.insert(0, val[c.args[*i][0]].clone());
        }
    }
    Ok(Trace {
        cycles: s.cycles,
        outputs,
    })
}

/// Pin names and widths, then per-sink operand widths.
fn interface(d: &Design) -> (Vec<(ValueId, u32)>, Vec<Vec<u32>>) {
    let pins = d
        .pins()
        .map(|p| {
            (
                p.result.clone().expect("pin"),
                p.result_width.map_or(0, |w| w.get()),
            )
        })
        .collect();
    let sinks = d
        .sinks()
        .map(|s| {
            s.operands
                .iter()
                .map(|v| d.width_of(v).map_or(0, |w| w.get()))
                .collect()
        })
        .collect();
    (pins, sinks)
}

/// Simulates both designs on `s` and compares outputs column by column from
/// cycle `warmup` on.
pub fn check_equivalence(
    a: &Design,
    b: &Design,
    s: &Stimulus,
    warmup: usize,
) -> Result<EquivalenceResult, SimError> {
    let (pa, sa) = interface(a);
    let (pb, sb) = interface(b);
    let mut pa_sorted = pa.clone();
    let mut pb_sorted = pb.clone();
    pa_sorted.sort();
    pb_sorted.sort();
    if pa_sorted != pb_sorted {
        return Err(SimError::Interface(format!("pins {pa:?} vs {pb:?}")));
    }
    if sa != sb {
        return Err(SimError::Interface(format!("sink widths {sa:?} vs {sb:?}")));
    }
    let ta = simulate(a, s)?;
    let tb = simulate(b, s)?;
    for cycle in warmup..s.cycles {
        for (col, ((name, la), (_, lb))) in ta.outputs.iter().zip(&tb.outputs).enumerate() {
            if la[cycle] != lb[cycle] {
                return Ok(EquivalenceResult::Mismatch {
                    output: col,
                    name: name.clone(),
                    cycle,
                    left: la[cycle].clone(),
                    right: lb[cycle].clone(),
                });
            }
        }
    }
    Ok(EquivalenceResult::Equivalent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_design;

    fn stim(pins: &[(&str, &[u32])]) -> Stimulus {
        Stimulus {
            cycles: pins[0].1.len(),
            inputs: pins
                .iter()
                .map(|(n, v)| {
                    (
                        ValueId::new(*n),
                        v.iter().map(|&x| BigUint::from(x)).collect(),
                    )
                })
                .collect(),
        }
    }

    fn column(t: &Trace, k: usize) -> Vec<u32> {
        t.outputs[k]
            .1
            .iter()
            .map(|v| u32::try_from(v).unwrap())
            .collect()
    }

    #[test]
    fn wire_and_shift_register() {
        let d = parse_design(
            "design t { %x = pin : i8  %r = delay %x by 2 : i8  sink %x, %r : i8, i8 }",
        )
        .unwrap();
        let t = simulate(&d, &stim(&[("x", &[5, 6, 7, 8])])).unwrap();
        assert_eq!(column(&t, 0), vec![5, 6, 7, 8]);
        assert_eq!(column(&t, 1), vec![0, 0, 5, 6]);
    }

    #[test]
    fn arithmetic_wraps() {
        let d = parse_design(
            "design t { %a = pin : i4  %b = pin : i4  %s = add %a, %b : i4  %d = sub %a, %b : i4  %m = mul %a, %b : i4  %n = not %a : i4  %c = concat %a, %b : i8  %e = extract %c [2 +: 4] : i4  %one = const 1 : i1  %x = mux %one, %a, %b : i4  sink %s, %d, %m, %n, %c, %e, %x : i4, i4, i4, i4, i8, i4, i4 }",
        )
        .unwrap();
        let t = simulate(&d, &stim(&[("a", &[9]), ("b", &[12])])).unwrap();
        let got: Vec<u32> = (0..7).map(|k| column(&t, k)[0]).collect();
        assert_eq!(
            got,
            vec![
                (9 + 12) % 16,
                9 + 16 - 12,
                (9 * 12) % 16,
                6,
                0x9c,
                (0x9c >> 2) & 15,
                9
            ]
        );
    }

    #[test]
    fn stimulus_errors() {
        let d = parse_design("design t { %x = pin : i2  sink %x : i2 }").unwrap();
        assert_eq!(
            simulate(&d, &stim(&[("y", &[1])])),
            Err(SimError::MissingPin("x".into()))
        );
        assert!(matches!(
            simulate(&d, &stim(&[("x", &[4])])),
            Err(SimError::OutOfRange { .. })
        ));
    }

    #[test]
    fn mutation_is_caught() {
        let a = parse_design("design t { %x = pin : i8  %r = delay %x by 1 : i8  sink %r : i8 }")
            .unwrap();
        let b = parse_design("design t { %x = pin : i8  %r = delay %x by 2 : i8  sink %r : i8 }")
            .unwrap();
        let s = Stimulus::random(&a, 50, 3);
        assert!(check_equivalence(&a, &a, &s, 0).unwrap().is_equivalent());
        assert!(matches!(
            check_equivalence(&a, &b, &s, 2).unwrap(),
            EquivalenceResult::Mismatch { output: 0, .. }
        ));
    }
}
