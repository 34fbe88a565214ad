use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const RESULTS_HEADER: [&str; 16] = [
    "experiment", "dataset", "m", "n", "c", "r", "s_c", "s_r", "a", "k", "epsilon", "sigma", "seed", "metric",
    "value", "wall_ms",
];

/// One measurement with its full parameter tuple. Parameters that do not
/// apply to an experiment are left empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub dataset: String,
    pub m: usize,
    pub n: usize,
    pub c: Option<usize>,
    pub r: Option<usize>,
    pub s_c: Option<usize>,
    pub s_r: Option<usize>,
    pub a: Option<f64>,
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub sigma: Option<f64>,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub wall_ms: f64,
}

impl ResultRow {
    /// Numeric parameter by column name.
    pub fn field(&self, name: &str) -> Option<f64> {
        let u = |v: Option<usize>| v.map(|x| x as f64);
        match name {
            "m" => Some(self.m as f64),
            "n" => Some(self.n as f64),
            "c" => u(self.c),
            "r" => u(self.r),
            "s_c" => u(self.s_c),
            "s_r" => u(self.s_r),
            "a" => self.a,
            "k" => u(self.k),
            "epsilon" => self.epsilon,
            "sigma" => self.sigma,
            "seed" => Some(self.seed as f64),
            "value" => Some(self.value),
            "wall_ms" => Some(self.wall_ms),
            _ => None,
        }
    }
}

/// Writes rows under the fixed results header.
pub fn write_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_results_to(rows, File::create(path)?)
}

pub fn write_results_to(rows: &[ResultRow], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Quantile `q` in `[0, 1]` of `values` with linear interpolation between
/// order statistics. `NaN` for an empty slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotPoint {
    pub series: String,
    pub x: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub count: usize,
}

/// Groups rows whose metric is `metric` by `(experiment, x_field)` and
/// summarizes the values. Output is sorted by series, then x.
pub fn aggregate(rows: &[ResultRow], x_field: &str, metric: &str) -> Result<Vec<PlotPoint>> {
    let mut groups: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.metric == metric) {
        let x = row
            .field(x_field)
            .ok_or_else(|| Error::Config(format!("row has no numeric field {x_field:?}")))?;
        // Non-negative x sorts correctly by its bit pattern.
        groups.entry((row.experiment.clone(), x.to_bits())).or_default().push(row.value);
    }
    let mut points: Vec<PlotPoint> = groups
        .into_iter()
        .map(|((series, xb), vals)| PlotPoint {
            series,
            x: f64::from_bits(xb),
            median: quantile(&vals, 0.5),
            q25: quantile(&vals, 0.25),
            q75: quantile(&vals, 0.75),
            count: vals.len(),
        })
        .collect();
    points.sort_by(|a, b| a.series.cmp(&b.series).then(a.x.total_cmp(&b.x)));
    Ok(points)
}

/// Writes `series,x,median,q25,q75` aggregates of `metric` against `x_field`.
pub fn emit_plotdata(rows: &[ResultRow], x_field: &str, metric: &str, path: &Path) -> Result<()> {
    let points = aggregate(rows, x_field, metric)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["series", "x", "median", "q25", "q75"])?;
    for p in &points {
        w.write_record([
            p.series.clone(),
            p.x.to_string(),
            p.median.to_string(),
            p.q25.to_string(),
            p.q75.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
