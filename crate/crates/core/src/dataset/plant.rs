//! Feature engineering for the plant pressure-drop data.

use ndarray::Array2;

use super::{Column, Cycle, CycleDataset, Schema};
use crate::error::{Error, Result};

/// Layout of the raw plant export.
pub fn raw_plant_schema() -> Schema {
    Schema {
        inputs: vec![
            Column::new("t", "h"),
            Column::new("T", "°C"),
            Column::new("F_R", "kg/h"),
            Column::new("F_AIR", "kg/h"),
            Column::new("F_FRESH", "kg/h"),
        ],
        targets: vec![Column::new("PD", "mbar")],
        time_column: Some("t".into()),
        charge_column: Some("charge_id".into()),
    }
}

/// The ten model inputs plus the pressure-drop target.
pub fn plant_features_schema() -> Schema {
    Schema {
        inputs: vec![
            Column::new("T", "°C"),
            Column::new("F_R", "kg/h"),
            Column::new("F_AIR", "kg/h"),
            Column::new("cycle_no", "-"),
            Column::new("t_react", "h"),
            Column::new("last_PD", "mbar"),
            Column::new("F_R/(F_R+F_AIR)", "%"),
            Column::new("F_FRESH/F_R", "%"),
            Column::new("F_CUM_CYCLE", "kg"),
            Column::new("F_CUM_CAT", "kg"),
        ],
        targets: vec![Column::new("PD", "mbar")],
        time_column: Some("t_react".into()),
        charge_column: Some("charge_id".into()),
    }
}

/// Derives the engineered inputs from raw plant cycles given in chronological
/// order.
///
/// `last_PD` of the very first cycle falls back to that cycle's own first PD
/// reading. Cumulative flows are hourly sums of `F_R`; `F_CUM_CAT` restarts
/// whenever the catalyst charge changes.
pub fn engineer_features_realworld(raw: &CycleDataset) -> Result<CycleDataset> {
    let s = &raw.schema;
    let col = |name: &str| {
        s.input_index(name)
            .ok_or_else(|| Error::InvalidInput(format!("raw plant data lacks column '{name}'")))
    };
    let (t_col, temp_col, fr_col, air_col, fresh_col) =
        (col("t")?, col("T")?, col("F_R")?, col("F_AIR")?, col("F_FRESH")?);
    let pd_col = s
        .target_index("PD")
        .ok_or_else(|| Error::InvalidInput("raw plant data lacks target 'PD'".into()))?;

    let mut cycles = Vec::with_capacity(raw.len());
    let mut last_pd: Option<f64> = None;
    let mut cum_cat = 0.0;
    let mut charge: Option<Option<u64>> = None;
    let mut global_row = 0usize;

    for (ordinal, c) in raw.cycles.iter().enumerate() {
        if charge != Some(c.charge) {
            cum_cat = 0.0;
            charge = Some(c.charge);
        }
        let n = c.len();
        let prev_pd = last_pd.unwrap_or(c.targets[[0, pd_col]]);
        let t_start = c.inputs[[0, t_col]];
        let mut x = Array2::zeros((n, 10));
        let mut cum_cycle = 0.0;
        for r in 0..n {
            global_row += 1;
            let row = c.inputs.row(r);
            let (f_r, f_air, f_fresh) = (row[fr_col], row[air_col], row[fresh_col]);
            if f_r + f_air == 0.0 || f_r == 0.0 {
                return Err(Error::Ingestion {
                    row: global_row,
                    message: format!("cycle {} row {r}: flow ratio undefined (F_R = {f_r}, F_AIR = {f_air})", c.id),
                });
            }
            cum_cycle += f_r;
            cum_cat += f_r;
            let out = [
                row[temp_col],
                f_r,
                f_air,
                (ordinal + 1) as f64,
                row[t_col] - t_start,
                prev_pd,
                100.0 * f_r / (f_r + f_air),
                100.0 * f_fresh / f_r,
                cum_cycle,
                cum_cat,
            ];
            x.row_mut(r).assign(&ndarray::ArrayView1::from(&out));
        }
        last_pd = Some(c.targets[[n - 1, pd_col]]);
        let targets = c.targets.column(pd_col).to_owned().insert_axis(ndarray::Axis(1));
        let mut out = Cycle::new(c.id, x, targets)?;
        out.charge = c.charge;
        out.t0_offset = c.t0_offset;
        cycles.push(out);
    }
    CycleDataset::new(plant_features_schema(), cycles)
}
