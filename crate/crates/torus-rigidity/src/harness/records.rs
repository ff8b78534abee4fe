//! Flat result records and their CSV/JSON emission.
//!
//! One schema for every experiment: sweep parameters that don't apply stay
//! empty. The two wall-clock columns sit last so reproducibility checks can
//! strip them and compare the rest byte for byte.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub function_family: String,
    pub n: Option<u64>,
    pub k: Option<u64>,
    pub eps: Option<f64>,
    pub alpha: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub success: Option<u64>,
    pub failure: Option<u64>,
    pub undecided: Option<u64>,
    pub trials: Option<u64>,
    pub master_seed: u64,
    pub stream_id: u64,
    pub duration_ms: u64,
    pub timestamp: String,
}

impl ResultRecord {
    /// Template with the sweep fields empty; experiments fill what applies.
    pub fn new(experiment: &str, metric: &str, value: f64) -> Self {
        Self {
            experiment: experiment.to_string(),
            function_family: String::new(),
            n: None,
            k: None,
            eps: None,
            alpha: None,
            metric: metric.to_string(),
            value,
            std_error: None,
            success: None,
            failure: None,
            undecided: None,
            trials: None,
            master_seed: 0,
            stream_id: 0,
            duration_ms: 0,
            timestamp: String::new(),
        }
    }
}

/// RFC 3339 UTC timestamp for the volatile column.
pub fn now_timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Serialize any homogeneous row type to CSV with a header row.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf)
        .map_err(|e| crate::error::Error::InvalidInput(format!("non-utf8 csv: {e}")))
}

pub fn write_json<T: Serialize, W: Write>(rows: &[T], mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, rows)
        .map_err(|e| crate::error::Error::Io(std::io::Error::other(e)))?;
    writeln!(writer)?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e))
}

/// Drop the trailing wall-clock columns (duration_ms, timestamp) from a
/// ResultRecord CSV dump, for byte comparisons across runs.
pub fn strip_volatile_columns(csv_text: &str) -> String {
    csv_text
        .lines()
        .map(|line| {
            let mut fields: Vec<&str> = line.split(',').collect();
            let drop = fields.len().saturating_sub(2);
            fields.truncate(drop);
            fields.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_empty_options() {
        let mut rec = ResultRecord::new("theorem-verify", "success_fraction", 0.9);
        rec.n = Some(16);
        rec.trials = Some(10);
        let text = to_csv_string(&[rec]).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("experiment,function_family,n,k,eps,alpha,metric,value"));
        assert!(header.ends_with("duration_ms,timestamp"));
        let row = lines.next().unwrap();
        assert!(row.contains(",16,,"), "empty k column expected: {row}");
    }

    #[test]
    fn volatile_columns_strip() {
        let a = "x,y,z,1,t1\nu,v,w,2,t2";
        assert_eq!(strip_volatile_columns(a), "x,y,z\nu,v,w");
    }

    #[test]
    fn json_round_trip() {
        let rec = ResultRecord::new("scaling", "k_star_empirical", 2.0);
        let mut buf = Vec::new();
        write_json(&[rec.clone()], &mut buf).unwrap();
        let back: Vec<ResultRecord> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, vec![rec]);
    }
}
