use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{Cycle, CycleDataset, Schema};
use crate::error::{Error, Result};

pub const CYCLE_COLUMN: &str = "cycle_id";

/// Shortest representation that parses back to the same `f64`.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Column order used when writing: cycle id, charge, time, remaining inputs,
/// targets.
fn file_columns(schema: &Schema) -> Vec<String> {
    let mut cols = vec![CYCLE_COLUMN.to_string()];
    if let Some(charge) = &schema.charge_column {
        cols.push(charge.clone());
    }
    if let Some(t) = &schema.time_column {
        cols.push(t.clone());
    }
    for c in &schema.inputs {
        if Some(&c.name) != schema.time_column.as_ref() {
            cols.push(c.name.clone());
        }
    }
    cols.extend(schema.targets.iter().map(|c| c.name.clone()));
    cols
}

pub fn write_csv(dataset: &CycleDataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(dataset, std::io::BufWriter::new(file))
}

pub fn write_csv_to<W: Write>(dataset: &CycleDataset, writer: W) -> Result<()> {
    let schema = &dataset.schema;
    let cols = file_columns(schema);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&cols)?;
    enum Source {
        Id,
        Charge,
        Input(usize),
        Target(usize),
    }
    let sources: Vec<Source> = cols
        .iter()
        .map(|name| {
            if name == CYCLE_COLUMN {
                Source::Id
            } else if Some(name) == schema.charge_column.as_ref() {
                Source::Charge
            } else if let Some(i) = schema.input_index(name) {
                Source::Input(i)
            } else {
                Source::Target(schema.target_index(name).expect("column from schema"))
            }
        })
        .collect();
    let mut record = Vec::with_capacity(cols.len());
    for cycle in &dataset.cycles {
        for row in 0..cycle.len() {
            record.clear();
            for s in &sources {
                record.push(match s {
                    Source::Id => cycle.id.to_string(),
                    Source::Charge => cycle.charge.map(|c| c.to_string()).unwrap_or_default(),
                    Source::Input(i) => format_value(cycle.inputs[[row, *i]]),
                    Source::Target(j) => format_value(cycle.targets[[row, *j]]),
                });
            }
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<CycleDataset> {
    let file = std::fs::File::open(path)?;
    read_csv_from(std::io::BufReader::new(file), schema)
}

struct Pending {
    id: u64,
    charge: Option<u64>,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    last_time: Option<f64>,
}

/// Parses a cycle table. Rows of one cycle must be contiguous; `row` in
/// errors is the 1-based line number in the file.
pub fn read_csv_from<R: Read>(reader: R, schema: &Schema) -> Result<CycleDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(e.into()),
    };
    let find = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Ingestion {
            row: 1,
            message: format!("missing column '{name}'"),
        })
    };
    let id_col = find(CYCLE_COLUMN)?;
    let charge_col = schema.charge_column.as_deref().map(find).transpose()?;
    let input_cols = schema.inputs.iter().map(|c| find(&c.name)).collect::<Result<Vec<_>>>()?;
    let target_cols = schema.targets.iter().map(|c| find(&c.name)).collect::<Result<Vec<_>>>()?;
    let time_idx = match &schema.time_column {
        Some(t) => Some(schema.input_index(t).ok_or_else(|| {
            Error::InvalidInput(format!("time column '{t}' must be one of the inputs"))
        })?),
        None => None,
    };

    let d_x = input_cols.len();
    let d_y = target_cols.len();
    let mut cycles: Vec<Cycle> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut pending: Option<Pending> = None;

    let finish = |p: Pending, cycles: &mut Vec<Cycle>| -> Result<()> {
        let n = p.inputs.len() / d_x.max(1);
        let n = if d_x == 0 { p.targets.len() / d_y.max(1) } else { n };
        let inputs = Array2::from_shape_vec((n, d_x), p.inputs).expect("row-major buffer");
        let targets = Array2::from_shape_vec((n, d_y), p.targets).expect("row-major buffer");
        let mut c = Cycle::new(p.id, inputs, targets)?;
        c.charge = p.charge;
        cycles.push(c);
        Ok(())
    };

    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let field = |col: usize| rec.get(col).map(str::trim).unwrap_or("");
        let parse_f = |col: usize, name: &str| -> Result<f64> {
            let raw = field(col);
            let v: f64 = raw.parse().map_err(|_| Error::Ingestion {
                row: line,
                message: format!("column '{name}': cannot parse '{raw}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Ingestion { row: line, message: format!("column '{name}' is not finite") });
            }
            Ok(v)
        };
        let id: u64 = field(id_col).parse().map_err(|_| Error::Ingestion {
            row: line,
            message: format!("bad cycle id '{}'", field(id_col)),
        })?;
        let charge = match charge_col {
            Some(col) => Some(field(col).parse::<u64>().map_err(|_| Error::Ingestion {
                row: line,
                message: format!("bad charge id '{}'", field(col)),
            })?),
            None => None,
        };

        if pending.as_ref().is_none_or(|p| p.id != id) {
            if let Some(p) = pending.take() {
                finish(p, &mut cycles)?;
            }
            if !seen.insert(id) {
                return Err(Error::Ingestion { row: line, message: format!("rows of cycle {id} are not contiguous") });
            }
            pending = Some(Pending { id, charge, inputs: Vec::new(), targets: Vec::new(), last_time: None });
        }
        let p = pending.as_mut().expect("set above");
        if p.charge != charge {
            return Err(Error::Ingestion { row: line, message: format!("charge changes within cycle {id}") });
        }
        for (k, &col) in input_cols.iter().enumerate() {
            let v = parse_f(col, &schema.inputs[k].name)?;
            if time_idx == Some(k) {
                if p.last_time.is_some_and(|t| v <= t) {
                    return Err(Error::Ingestion {
                        row: line,
                        message: format!("time is not increasing within cycle {id}"),
                    });
                }
                p.last_time = Some(v);
            }
            p.inputs.push(v);
        }
        for (k, &col) in target_cols.iter().enumerate() {
            p.targets.push(parse_f(col, &schema.targets[k].name)?);
        }
    }
    if let Some(p) = pending.take() {
        finish(p, &mut cycles)?;
    }
    CycleDataset::new(schema.clone(), cycles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reactor::synthetic_schema;

    #[test]
    fn header_only_gives_empty_dataset() {
        let text = "cycle_id,t,p_mbar,T_C,F_kgph,mu_olef_pct,mu_O2_pct,C_pct,S_pct\n";
        let ds = read_csv_from(text.as_bytes(), &synthetic_schema()).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn missing_column_is_reported() {
        let text = "cycle_id,t,p_mbar,T_C,F_kgph,mu_olef_pct,C_pct,S_pct\n";
        let err = read_csv_from(text.as_bytes(), &synthetic_schema()).unwrap_err();
        assert!(err.to_string().contains("mu_O2_pct"), "{err}");
    }

    #[test]
    fn nan_cell_names_its_row() {
        let text = "cycle_id,t,p_mbar,T_C,F_kgph,mu_olef_pct,mu_O2_pct,C_pct,S_pct\n\
                    1,0,1250,500,3500,50,50,99,98\n\
                    1,1,1250,500,3500,50,50,NaN,98\n";
        match read_csv_from(text.as_bytes(), &synthetic_schema()) {
            Err(Error::Ingestion { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_monotonic_time_is_rejected() {
        let text = "cycle_id,t,p_mbar,T_C,F_kgph,mu_olef_pct,mu_O2_pct,C_pct,S_pct\n\
                    1,0,1250,500,3500,50,50,99,98\n\
                    1,2,1250,500,3500,50,50,97,98\n\
                    1,1,1250,500,3500,50,50,96,98\n";
        match read_csv_from(text.as_bytes(), &synthetic_schema()) {
            Err(Error::Ingestion { row, message }) => {
                assert_eq!(row, 4);
                assert!(message.contains("time"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_cycle_blocks_are_rejected() {
        let text = "cycle_id,t,p_mbar,T_C,F_kgph,mu_olef_pct,mu_O2_pct,C_pct,S_pct\n\
                    1,0,1250,500,3500,50,50,99,98\n\
                    2,0,1250,500,3500,50,50,99,98\n\
                    1,1,1250,500,3500,50,50,99,98\n";
        assert!(read_csv_from(text.as_bytes(), &synthetic_schema()).is_err());
    }

    #[test]
    fn column_order_in_file_does_not_matter() {
        let text = "S_pct,C_pct,mu_O2_pct,mu_olef_pct,F_kgph,T_C,p_mbar,t,cycle_id\n98,99,50,50,3500,500,1250,0,4\n";
        let ds = read_csv_from(text.as_bytes(), &synthetic_schema()).unwrap();
        let c = &ds.cycles[0];
        assert_eq!(c.id, 4);
        assert_eq!(c.inputs.row(0).to_vec(), vec![1250.0, 500.0, 3500.0, 50.0, 50.0, 0.0]);
        assert_eq!(c.targets.row(0).to_vec(), vec![99.0, 98.0]);
    }

    #[test]
    fn format_round_trips_extremes() {
        for v in [0.0, -0.0, 1e-300, 3.5e-7, 0.1, 1.0 / 3.0, 123456.789, 1e300, f64::MAX, f64::MIN_POSITIVE] {
            let s = format_value(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }
}
