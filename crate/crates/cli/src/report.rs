use serde::Serialize;
use smfft_core::MdSpectrum;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub index: Vec<u64>,
    pub value: f64,
}

/// Result of a single `transform` or `verify` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub dims: usize,
    pub axis_size: u64,
    pub recovered: Vec<Entry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_l2_error: Option<f64>,
    pub unique_samples: u64,
    /// Whole run, including synthesizing samples.
    pub wall_time_ms: f64,
    /// Run time with sample synthesis excluded.
    pub solver_time_ms: f64,
    pub ladder_steps: usize,
    pub redraws_used: usize,
    pub seed: u64,
}

impl RunReport {
    pub fn entries(spectrum: &MdSpectrum) -> Vec<Entry> {
        spectrum.entries().iter().map(|(idx, &value)| Entry { index: idx.clone(), value }).collect()
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// The JSON report with every timing field removed.
    pub fn to_json_untimed(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(map) = value.as_object_mut() {
            map.retain(|k, _| !k.ends_with("_ms"));
        }
        serde_json::to_string_pretty(&value).expect("report serializes")
    }
}

/// One row of a sweep; the first nine columns are fixed, the rest are extras.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "R")]
    pub r: usize,
    pub d: usize,
    pub eta: f64,
    pub seed: u64,
    /// Median solver time over the trials (sample synthesis excluded).
    pub time_ms: f64,
    /// Mean number of unique sample points.
    pub samples: f64,
    /// Largest relative ℓ₂ error over the trials.
    pub rel_l2_error: f64,
    /// Fraction of trials with exact support and error within tolerance.
    pub success: f64,
    /// Median wall time including sample synthesis.
    pub wall_ms: f64,
    /// Median time of a dense transform of all N grid samples, for N ≤ 2^20.
    pub dense_ms: Option<f64>,
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("row serializes");
    }
    String::from_utf8(writer.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub fn rows_to_json(rows: &[SweepRow]) -> String {
    let mut text = serde_json::to_string_pretty(rows).expect("rows serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_columns_are_stable() {
        let row = SweepRow {
            n: 1 << 20,
            r: 50,
            d: 3,
            eta: 0.01,
            seed: 7,
            time_ms: 1.5,
            samples: 100.0,
            rel_l2_error: 0.01,
            success: 1.0,
            wall_ms: 2.0,
            dense_ms: None,
        };
        let csv = rows_to_csv(&[row]);
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "N,R,d,eta,seed,time_ms,samples,rel_l2_error,success,wall_ms,dense_ms");
        assert!(csv.lines().nth(1).unwrap().ends_with(",2.0,"));
    }

    #[test]
    fn untimed_json_drops_timing() {
        let report = RunReport {
            dims: 1,
            axis_size: 40,
            recovered: vec![Entry { index: vec![1], value: 1.0 }],
            rel_l2_error: None,
            unique_samples: 10,
            wall_time_ms: 3.0,
            solver_time_ms: 2.0,
            ladder_steps: 1,
            redraws_used: 0,
            seed: 0,
        };
        let text = report.to_json_untimed();
        assert!(!text.contains("_ms"));
        assert!(!text.contains("rel_l2_error"));
        assert!(report.to_json().contains("wall_time_ms"));
    }
}
