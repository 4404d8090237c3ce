//! Trajectory logs as CSV.
//!
//! Columns: `t`, the model's state names, `uref_<input>`, `u_<input>`, then
//! `h_<i>` and `dist_<i>` for every obstacle `i` (0-based, in log order),
//! then `filter_status` and `active_count`. Floats are written with 17
//! significant digits so parsing recovers them bit for bit.

use crate::sim_engine::{StepStatus, TrajectoryLog};
use crate::vehicle_models::ModelTag;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty file")]
    Empty,
    #[error("bad header: {0}")]
    Header(String),
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 17 significant digits in scientific notation.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn header(model: ModelTag, obstacle_count: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(model.state_names().iter().map(|s| s.to_string()));
    h.extend(model.input_names().iter().map(|s| format!("uref_{s}")));
    h.extend(model.input_names().iter().map(|s| format!("u_{s}")));
    for i in 0..obstacle_count {
        h.push(format!("h_{i}"));
        h.push(format!("dist_{i}"));
    }
    h.push("filter_status".into());
    h.push("active_count".into());
    h
}

pub fn write_csv<W: std::io::Write>(log: &TrajectoryLog, out: W) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header(log.model, log.obstacle_ids.len()))?;
    for rec in &log.records {
        let mut row: Vec<String> = Vec::with_capacity(rec.state.len() + 2 * rec.u_ref.len() + 8);
        row.push(format_f64(rec.t));
        row.extend(rec.state.iter().map(|&x| format_f64(x)));
        row.extend(rec.u_ref.iter().map(|&x| format_f64(x)));
        row.extend(rec.u_star.iter().map(|&x| format_f64(x)));
        for o in &rec.obstacles {
            row.push(format_f64(o.h));
            row.push(format_f64(o.distance));
        }
        row.push(rec.status.as_str().into());
        row.push(rec.active_set.len().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(log: &TrajectoryLog) -> String {
    let mut buf = Vec::new();
    write_csv(log, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is ASCII")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub state: Vec<f64>,
    pub u_ref: Vec<f64>,
    pub u_star: Vec<f64>,
    /// `(h_i, dist_i)` per obstacle.
    pub obstacles: Vec<(f64, f64)>,
    pub status: StepStatus,
    pub active_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub model: ModelTag,
    pub obstacle_count: usize,
    pub rows: Vec<CsvRow>,
}

fn model_from_header(cols: &[String]) -> Option<ModelTag> {
    [ModelTag::Unicycle, ModelTag::Bicycle, ModelTag::Quadrotor, ModelTag::PointMass]
        .into_iter()
        .find(|m| {
            let names = m.state_names();
            cols.len() > names.len() && cols[1..=names.len()].iter().zip(names).all(|(a, b)| a == b)
        })
}

/// Parses a trajectory CSV written by [`write_csv`], checking the header
/// layout and that every row has the same width.
pub fn parse_csv(text: &str) -> Result<TrajectoryTable, CsvError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut records = r.records();
    let head = records.next().ok_or(CsvError::Empty)??;
    let cols: Vec<String> = head.iter().map(str::to_string).collect();
    if cols.first().map(String::as_str) != Some("t") {
        return Err(CsvError::Header("first column must be `t`".into()));
    }
    let model = model_from_header(&cols).ok_or_else(|| CsvError::Header("unknown state columns".into()))?;
    let fixed = 1 + model.state_dim() + 2 * model.input_dim() + 2;
    if cols.len() < fixed || (cols.len() - fixed) % 2 != 0 {
        return Err(CsvError::Header(format!("{} columns do not fit model {model}", cols.len())));
    }
    let obstacle_count = (cols.len() - fixed) / 2;
    if cols != header(model, obstacle_count) {
        return Err(CsvError::Header("column names differ from the expected layout".into()));
    }

    let (n, m) = (model.state_dim(), model.input_dim());
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec?;
        if rec.len() != cols.len() {
            return Err(CsvError::Row {
                row,
                msg: format!("{} fields, header has {}", rec.len(), cols.len()),
            });
        }
        let num = |j: usize| -> Result<f64, CsvError> {
            rec[j].parse::<f64>().map_err(|e| CsvError::Row {
                row,
                msg: format!("column {}: {e}", cols[j]),
            })
        };
        let nums = |from: usize, len: usize| (from..from + len).map(num).collect::<Result<Vec<_>, _>>();
        let obs_start = 1 + n + 2 * m;
        let obstacles = (0..obstacle_count)
            .map(|k| Ok((num(obs_start + 2 * k)?, num(obs_start + 2 * k + 1)?)))
            .collect::<Result<Vec<_>, CsvError>>()?;
        let status_col = cols.len() - 2;
        let status = StepStatus::parse(&rec[status_col]).ok_or_else(|| CsvError::Row {
            row,
            msg: format!("unknown filter_status `{}`", &rec[status_col]),
        })?;
        let active_count = rec[status_col + 1].parse::<usize>().map_err(|e| CsvError::Row {
            row,
            msg: format!("active_count: {e}"),
        })?;
        rows.push(CsvRow {
            t: num(0)?,
            state: nums(1, n)?,
            u_ref: nums(1 + n, m)?,
            u_star: nums(1 + n + m, m)?,
            obstacles,
            status,
            active_count,
        });
    }
    Ok(TrajectoryTable {
        model,
        obstacle_count,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::BarrierKind;
    use crate::sim_engine::{ObstacleRecord, RunStatus, StepRecord};
    use crate::vehicle_models::Vec3;

    fn sample_log() -> TrajectoryLog {
        let rec = |t: f64| StepRecord {
            t,
            state: vec![0.1 + t, 1.0 / 3.0, -2.5e-300, f64::MAX, 7.0],
            u_ref: vec![0.2, -0.3],
            u_star: vec![0.2, f64::NAN],
            obstacles: vec![ObstacleRecord {
                h: -1e-17,
                lfh: 0.0,
                lgh_u: 0.0,
                lgh_norm: 1.0,
                distance: 2.0f64.sqrt(),
                center: Vec3::zeros(),
            }],
            status: StepStatus::Optimal,
            active_set: vec![0],
        };
        TrajectoryLog {
            label: "x".into(),
            agent_id: "ego".into(),
            model: ModelTag::Unicycle,
            barrier: BarrierKind::C3bf,
            obstacle_ids: vec!["o".into()],
            obstacle_radii: vec![1.0],
            records: vec![rec(0.0), rec(0.01)],
            status: RunStatus::Completed,
            failure: None,
        }
    }

    #[test]
    fn header_layout() {
        let h = header(ModelTag::Unicycle, 2);
        assert_eq!(h[0], "t");
        assert_eq!(h[6], "uref_a");
        assert_eq!(h[8], "u_a");
        assert_eq!(&h[10..14], ["h_0", "dist_0", "h_1", "dist_1"]);
        assert_eq!(h.last().unwrap(), "active_count");
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let log = sample_log();
        let text = to_csv_string(&log);
        assert!(!text.contains('\r'));
        let table = parse_csv(&text).unwrap();
        assert_eq!(table.rows.len(), 2);
        for (row, rec) in table.rows.iter().zip(&log.records) {
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(row.t.to_bits(), rec.t.to_bits());
            assert_eq!(bits(&row.state), bits(&rec.state));
            assert_eq!(bits(&row.u_ref), bits(&rec.u_ref));
            assert_eq!(row.u_star[0].to_bits(), rec.u_star[0].to_bits());
            assert!(row.u_star[1].is_nan());
            assert_eq!(row.obstacles[0].0.to_bits(), rec.obstacles[0].h.to_bits());
            assert_eq!(row.active_count, 1);
        }
    }

    #[test]
    fn rejects_ragged_rows() {
        let mut text = to_csv_string(&sample_log());
        text.push_str("1.0,2.0\n");
        assert!(parse_csv(&text).is_err());
        assert!(matches!(parse_csv(""), Err(CsvError::Empty)));
        assert!(matches!(parse_csv("x,y\n"), Err(CsvError::Header(_))));
    }
}
