//! CSV stimulus and trace files: header `cycle,<names…>`, one row per cycle.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_bigint::BigUint;
use thiserror::Error;

use super::{Stimulus, Trace};
use crate::ir::ValueId;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Format { row: usize, message: String },
}

fn column_name(raw: &str) -> ValueId {
    ValueId::new(raw.trim().trim_start_matches('%'))
}

pub fn read_stimulus<R: Read>(reader: R) -> Result<Stimulus, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("cycle") {
        return Err(CsvError::Format {
            row: 0,
            message: "first column must be `cycle`".into(),
        });
    }
    let names: Vec<ValueId> = header.iter().skip(1).map(column_name).collect();
    let mut inputs: BTreeMap<ValueId, Vec<BigUint>> =
        names.iter().map(|n| (n.clone(), Vec::new())).collect();
    if inputs.len() != names.len() {
        return Err(CsvError::Format {
            row: 0,
            message: "duplicate pin column".into(),
        });
    }
    let mut cycles = 0;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| CsvError::Format {
            row: row + 1,
            message,
        };
        if rec.get(0).and_then(|c| c.parse::<usize>().ok()) != Some(cycles) {
            return Err(bad(format!("expected cycle {cycles}")));
        }
        for (name, field) in names.iter().zip(rec.iter().skip(1)) {
            let v: BigUint = field
                .parse()
                .map_err(|_| bad(format!("`{field}` is not an unsigned integer")))?;
            inputs.get_mut(name).expect("column").push(v);
        }
        cycles += 1;
    }
    Ok(Stimulus { cycles, inputs })
}

pub fn write_trace<W: Write>(writer: W, t: &Trace) -> Result<(), CsvError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["cycle".to_owned()];
    header.extend(t.outputs.iter().map(|(n, _)| n.as_str().to_owned()));
    wtr.write_record(&header)?;
    for cycle in 0..t.cycles {
        let mut row = vec![cycle.to_string()];
        row.extend(t.outputs.iter().map(|(_, vs)| vs[cycle].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_columns_by_name() {
        let s = read_stimulus("cycle,%x,y\n0,1,2\n1,3,4\n".as_bytes()).unwrap();
        assert_eq!(s.cycles, 2);
        assert_eq!(
            s.inputs[&ValueId::new("y")],
            vec![BigUint::from(2u32), BigUint::from(4u32)]
        );
        assert!(read_stimulus("x\n1\n".as_bytes()).is_err());
        assert!(read_stimulus("cycle,x\n1,1\n".as_bytes()).is_err());
        assert!(read_stimulus("cycle,x\n0,-1\n".as_bytes()).is_err());
    }

    #[test]
    fn writes_one_row_per_cycle() {
        let t = Trace {
            cycles: 2,
            outputs: vec![(
                ValueId::new("o"),
                vec![BigUint::from(7u32), BigUint::from(9u32)],
            )],
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, &t).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "cycle,o\n0,7\n1,9\n");
    }
}
