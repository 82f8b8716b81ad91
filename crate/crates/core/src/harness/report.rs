use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::sweep::{run_sweep, Sweep, SweepConfig, SweepResult};
use crate::{Error, Result};

pub const REPORT_FORMAT: &str = "chartae-sweep";
pub const REPORT_VERSION: u32 = 1;

/// Sweep results together with the exact configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub sweep: String,
    pub config: SweepConfig,
    pub results: Vec<SweepResult>,
}

const CSV_COLUMNS: &str = "sweep,cell,run,n,D,C,noise_kind,level,error,seed";

impl SweepReport {
    /// Run `sweep` and wrap its results.
    pub fn run(sweep: &dyn Sweep, config: &SweepConfig, threads: Option<usize>) -> Result<Self> {
        let results = run_sweep(sweep, config, threads)?;
        Ok(SweepReport {
            format: REPORT_FORMAT.into(),
            version: REPORT_VERSION,
            tool_version: crate::VERSION.into(),
            sweep: sweep.name().into(),
            config: config.clone(),
            results,
        })
    }

    pub fn result(&self, label: &str) -> Option<&SweepResult> {
        self.results.iter().find(|r| r.label == label)
    }

    /// Per-run rows. `#` lines carry the format, tool version and config;
    /// failed runs have `NaN` in the error column. With `label`, only that
    /// curve is written.
    pub fn write_csv<W: Write>(&self, mut w: W, label: Option<&str>) -> Result<()> {
        writeln!(w, "# {} v{}", self.format, self.version)?;
        writeln!(w, "# tool_version {}", self.tool_version)?;
        writeln!(w, "# config {}", serde_json::to_string(&self.config)?)?;
        writeln!(w, "{CSV_COLUMNS}")?;
        for res in self.results.iter().filter(|r| label.map_or(true, |l| r.label == l)) {
            for (ci, cell) in res.cells.iter().enumerate() {
                let p = &cell.point;
                for run in &cell.runs {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{},{},{}",
                        res.sweep,
                        ci,
                        run.run,
                        p.n,
                        p.ambient_dim,
                        p.charts,
                        p.noise.kind.as_str(),
                        p.noise.level,
                        run.error.unwrap_or(f64::NAN),
                        run.seed
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_json<R: std::io::Read>(r: R) -> Result<Self> {
        let report: SweepReport = serde_json::from_reader(r)?;
        if report.format != REPORT_FORMAT || report.version != REPORT_VERSION {
            return Err(Error::Format(format!(
                "expected {REPORT_FORMAT} v{REPORT_VERSION}, found {} v{}",
                report.format, report.version
            )));
        }
        Ok(report)
    }

    /// Human-readable summary, one block per curve.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.results {
            let _ = writeln!(s, "sweep {} [{}]", r.sweep, r.label);
            for c in &r.cells {
                let failed = c.runs.iter().filter(|run| run.error.is_none()).count();
                let mean = c.mean.map_or("failed".to_string(), |m| format!("{m:.6e}"));
                let _ = write!(s, "  {} = {:<8} mean error {}", r.axis, c.point.value, mean);
                if let Some(p) = c.mean_pruned {
                    let _ = write!(s, "  pruned {p:.1}");
                }
                if failed > 0 {
                    let _ = write!(s, "  ({failed} failed)");
                }
                s.push('\n');
            }
            let slope_label = match r.fit_kind {
                super::FitKind::LogLog => "slope",
                super::FitKind::Linear => "linear slope",
            };
            match &r.fit {
                Some(f) => {
                    let _ = writeln!(
                        s,
                        "  {slope_label}: {:.4} intercept {:.4} max residual {:.4}",
                        f.slope, f.intercept, f.residual
                    );
                }
                None => {
                    let _ = writeln!(s, "  {slope_label}: undefined");
                }
            }
            if let Some(m) = r.min_error {
                let _ = writeln!(s, "  min error: {m:.6e}");
            }
            if let Some(e) = r.noise_free_error {
                let _ = writeln!(s, "  noise-free error: {e:.6e}");
            }
        }
        s
    }
}
