use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ScenarioResult;
use crate::error::{Error, Result};
use crate::model::DesignKind;
use crate::stats;

pub const DEFAULT_BINS: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub design: DesignKind,
    pub bin_left: f64,
    pub bin_right: f64,
    pub density: f64,
    pub mean: f64,
    pub quantile: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub rows: Vec<DensityRow>,
}

impl DensityTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["design", "bin_left", "bin_right", "density", "mean", "quantile"])?;
        for r in &self.rows {
            wtr.write_record([
                r.design.name().to_string(),
                r.bin_left.to_string(),
                r.bin_right.to_string(),
                r.density.to_string(),
                r.mean.to_string(),
                r.quantile.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn for_design(&self, kind: DesignKind) -> impl Iterator<Item = &DensityRow> {
        self.rows.iter().filter(move |r| r.design == kind)
    }
}

/// Histograms of every design's MSE sample on shared bins spanning the pooled
/// 0.5th to 99.5th percentiles. Values outside fall into the edge bins.
pub fn density_export(result: &ScenarioResult, bins: usize) -> Result<DensityTable> {
    if bins < 10 {
        return Err(Error::param("bins", format!("{bins} is below the minimum of 10")));
    }
    let mut pooled: Vec<f64> = result
        .designs
        .iter()
        .flat_map(|d| d.samples.iter().copied())
        .collect();
    if pooled.is_empty() {
        return Err(Error::param("result", "no samples to bin"));
    }
    pooled.sort_by(f64::total_cmp);
    let lo = stats::quantile_sorted(&pooled, 0.005);
    let hi = stats::quantile_sorted(&pooled, 0.995);
    let width = ((hi - lo) / bins as f64).max(f64::EPSILON * lo.abs().max(f64::MIN_POSITIVE));

    let mut rows = Vec::with_capacity(bins * result.designs.len());
    for d in &result.designs {
        let mut counts = vec![0usize; bins];
        for &v in &d.samples {
            let k = ((v - lo) / width).floor();
            let k = if k.is_nan() || k < 0.0 { 0 } else { (k as usize).min(bins - 1) };
            counts[k] += 1;
        }
        let total = d.samples.len() as f64;
        for (k, &c) in counts.iter().enumerate() {
            rows.push(DensityRow {
                design: d.design,
                bin_left: lo + k as f64 * width,
                bin_right: lo + (k + 1) as f64 * width,
                density: c as f64 / (total * width),
                mean: d.summary.mean,
                quantile: d.summary.quantile,
            });
        }
    }
    Ok(DensityTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{preset, run_scenario, ScenarioConfig};

    #[test]
    fn histograms_integrate_to_one() {
        let cfg = ScenarioConfig {
            n: 8,
            n_z_draws: 300,
            n_w_draws: 20,
            ..preset("baseline").unwrap().with_seed(2)
        };
        let r = run_scenario(&cfg).unwrap();
        let t = density_export(&r, DEFAULT_BINS).unwrap();
        assert_eq!(t.rows.len(), 3 * DEFAULT_BINS);
        for kind in [DesignKind::Crfb, DesignKind::Pb, DesignKind::Pm] {
            let mass: f64 = t
                .for_design(kind)
                .map(|row| row.density * (row.bin_right - row.bin_left))
                .sum();
            assert!((mass - 1.0).abs() < 1e-9, "{kind}: {mass}");
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("design,bin_left,bin_right,density,mean,quantile\n"));
        assert_eq!(text.lines().count(), 1 + 3 * DEFAULT_BINS);
        assert!(density_export(&r, 9).is_err());
    }
}
