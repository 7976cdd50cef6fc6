use std::io::{self, Write};
use std::path::Path;
use std::time::Duration;

use crate::output::{num, Csv};
use crate::RunError;

/// Outcome of one experiment run.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub name: String,
    pub metrics: Vec<(String, f64)>,
    pub timings: Vec<(String, Duration)>,
    pub config_echo: String,
    /// Human-readable lines printed after the run.
    pub summary: Vec<String>,
}

impl RunReport {
    /// Records a metric; errors must be finite.
    pub fn metric(&mut self, key: impl Into<String>, v: f64) -> Result<(), RunError> {
        let key = key.into();
        if !v.is_finite() {
            return Err(RunError::Numerical(mpspline::Error::Invalid(format!("metric {key} is not finite ({v})"))));
        }
        self.metrics.push((key, v));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.0 == key).map(|m| m.1)
    }

    pub fn timing(&mut self, key: impl Into<String>, d: Duration) {
        self.timings.push((key.into(), d));
    }

    /// Writes `report.csv`, `config.cfg` and `timings.txt`. Timings live
    /// outside the CSV so that reruns produce identical CSV files.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let mut csv = Csv::create(&dir.join("report.csv"), &["metric", "value"])?;
        for (k, v) in &self.metrics {
            csv.row([k.clone(), num(*v)])?;
        }
        csv.finish()?;
        std::fs::write(dir.join("config.cfg"), &self.config_echo)?;
        let mut t = std::fs::File::create(dir.join("timings.txt"))?;
        for (k, d) in &self.timings {
            writeln!(t, "{k} {:.3} s", d.as_secs_f64())?;
        }
        Ok(())
    }
}
