//! Grid scans over one or two parameters, CSV rows and the metadata sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use darkcool::liouville::{self, ConvergedSteadyState};
use darkcool::rates::{self, RateCoefficients};
use darkcool::{build_liouvillian, target_steady_state, Error, Scheme, SuperOp, SystemParams};
use rayon::prelude::*;
use toml::{Table, Value};

use crate::config::{Condition, Detuning, Method, Quantity, ScanConfig};

/// Parameters at one grid point: absolute axes, then the condition rule, the
/// detuning rule and finally the relative deviations.
pub fn point_params(cfg: &ScanConfig, scheme: Scheme, coords: &[f64]) -> darkcool::Result<SystemParams> {
    let mut p = cfg.params.clone();
    for (axis, &v) in cfg.axes.iter().zip(coords) {
        match axis.name.as_str() {
            "nu" => p.nu = v,
            "gamma" => p.gamma = v,
            "delta" => p.delta = v,
            "omega_a" => p.omega_a = v,
            "omega_b" => p.omega_b = v,
            "eta_a" => p.eta_a = v,
            "eta_b" => p.eta_b = v,
            "phi" => p.phi = v,
            "eta_up" => p.eta_up = v,
            "eta_down" => p.eta_down = v,
            "alpha" => p.alpha = v,
            _ => {}
        }
    }
    p = match cfg.condition {
        Condition::None => p,
        Condition::EtaA => p.with_condition_eta_a()?,
        Condition::EtaB => p.with_condition_eta_b()?,
        Condition::OmegaB => {
            let den = p.eta_b - 2.0 * p.eta_a;
            if !(den > 0.0) {
                return Err(Error::InvalidParams("no positive ΩB meets the condition for ηB ≤ 2ηA".into()));
            }
            p.omega_b = 2.0 * p.nu * p.eta_a / den;
            p
        }
    };
    if cfg.detuning == Detuning::Resonance {
        let mut view = p.clone();
        if scheme == Scheme::Eit {
            view.omega_b = 0.0;
        }
        p.delta = rates::resonance_detuning(&view)?;
    }
    for (axis, &v) in cfg.axes.iter().zip(coords) {
        match axis.name.as_str() {
            "omega_a_rel" => p.omega_a *= 1.0 + v,
            "omega_b_rel" => p.omega_b *= 1.0 + v,
            _ => {}
        }
    }
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub scheme: Scheme,
    pub coords: Vec<f64>,
    /// One per requested quantity; NaN where it failed.
    pub values: Vec<f64>,
    /// False when a truncation check failed or anything errored.
    pub converged: bool,
    pub error: Option<String>,
}

/// Lazily computed pieces shared by the quantities of one point.
struct Point<'a> {
    cfg: &'a ScanConfig,
    p: SystemParams,
    scheme: Scheme,
    liouvillian: Option<SuperOp>,
    steady: Option<ConvergedSteadyState>,
    rates: Option<RateCoefficients>,
}

impl Point<'_> {
    fn liouvillian(&mut self) -> darkcool::Result<&SuperOp> {
        if self.liouvillian.is_none() {
            self.liouvillian = Some(build_liouvillian(&self.p, self.scheme)?);
        }
        Ok(self.liouvillian.as_ref().unwrap())
    }

    fn steady(&mut self) -> darkcool::Result<&ConvergedSteadyState> {
        if self.steady.is_none() {
            self.steady = Some(liouville::steady_state_checked(&self.p, self.scheme, self.cfg.truncation_check)?);
        }
        Ok(self.steady.as_ref().unwrap())
    }

    fn rates(&mut self) -> darkcool::Result<RateCoefficients> {
        if self.rates.is_none() {
            self.rates = Some(match self.cfg.method {
                Method::ClosedForm => rates::closed_form_rates(&self.p, self.scheme)?,
                Method::Projection | Method::Liouvillian => rates::project_rate_equation(&self.p, self.scheme)?,
            });
        }
        Ok(self.rates.unwrap())
    }

    fn value(&mut self, q: Quantity) -> darkcool::Result<f64> {
        let full = self.cfg.method == Method::Liouvillian;
        match q {
            Quantity::NSs if full => Ok(self.steady()?.result.mean_n),
            Quantity::NSs => Ok(self.rates()?.n_ss),
            Quantity::W if full => Ok(liouville::relaxation_rate(self.liouvillian()?, 1)?.rate),
            Quantity::W => Ok(self.rates()?.w),
            Quantity::WAnalytic => Ok(rates::closed_form_rates(&self.p, self.scheme)?.w),
            Quantity::APlus => Ok(self.rates()?.a_plus),
            Quantity::AMinus => Ok(self.rates()?.a_minus),
            Quantity::Fidelity => {
                let psi = target_steady_state(&self.p);
                Ok(liouville::state_fidelity(&self.steady()?.result.rho, &psi))
            }
        }
    }
}

fn guard_violation(cfg: &ScanConfig, p: &SystemParams) -> Option<String> {
    let worst = (p.omega_a * p.eta_a).abs().max((p.omega_b * p.eta_b).abs());
    (cfg.perturbative_guard && worst > cfg.guard_limit)
        .then(|| format!("perturbative guard: Ωη = {worst:.4} exceeds {}", cfg.guard_limit))
}

pub fn evaluate_point(cfg: &ScanConfig, scheme: Scheme, coords: &[f64]) -> ScanRow {
    let n = cfg.quantities.len();
    let failed = |error: String| ScanRow {
        scheme,
        coords: coords.to_vec(),
        values: vec![f64::NAN; n],
        converged: false,
        error: Some(error),
    };
    let p = match point_params(cfg, scheme, coords) {
        Ok(p) => p,
        Err(e) => return failed(e.to_string()),
    };
    if let Some(msg) = guard_violation(cfg, &p) {
        return failed(msg);
    }
    let mut point = Point { cfg, p, scheme, liouvillian: None, steady: None, rates: None };
    let mut error = None;
    let values = cfg
        .quantities
        .iter()
        .map(|&q| match point.value(q) {
            Ok(v) => v,
            Err(e) => {
                error.get_or_insert_with(|| format!("{}: {e}", q.name()));
                f64::NAN
            }
        })
        .collect();
    let converged = error.is_none() && point.steady.as_ref().is_none_or(|s| s.converged);
    ScanRow { scheme, coords: coords.to_vec(), values, converged, error }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutput {
    pub header: Vec<String>,
    pub rows: Vec<ScanRow>,
}

impl ScanOutput {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn converged_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.converged).count()
    }

    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.failed_rows() == self.rows.len()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            let mut rec = vec![row.scheme.name().to_string()];
            rec.extend(row.coords.iter().chain(&row.values).map(|v| fmt_value(*v)));
            rec.push(row.converged.to_string());
            rec.push(row.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Twelve significant digits in scientific notation.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn header(cfg: &ScanConfig) -> Vec<String> {
    let mut h = vec!["scheme".to_string()];
    h.extend(cfg.axes.iter().map(|a| a.name.clone()));
    h.extend(cfg.quantities.iter().map(|q| q.name().to_string()));
    h.push("converged".into());
    h.push("error".into());
    h
}

/// Every scheme × grid point, in row-major order with the scheme outermost.
pub fn run_scan(cfg: &ScanConfig) -> ScanOutput {
    let jobs: Vec<(Scheme, Vec<f64>)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| cfg.grid().into_iter().map(move |c| (s, c)))
        .collect();
    let work = || jobs.par_iter().map(|(s, c)| evaluate_point(cfg, *s, c)).collect();
    let rows = match cfg.threads.map(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build()) {
        Some(Ok(pool)) => pool.install(work),
        Some(Err(e)) => {
            log::warn!("could not build a {}-thread pool ({e}); using the global pool", cfg.threads.unwrap());
            work()
        }
        None => work(),
    };
    ScanOutput { header: header(cfg), rows }
}

/// `out.csv` → `out.meta.toml`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("meta.toml")
}

/// Sidecar text. Only the first line, a timestamp comment, changes between
/// identical runs.
pub fn meta_document(cfg: &ScanConfig, subcommand: &str, mut run: Table) -> String {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    run.insert("subcommand".into(), Value::String(subcommand.into()));
    run.insert("code_version".into(), Value::String(format!("darkcool {}", env!("CARGO_PKG_VERSION"))));
    run.insert("truncation".into(), Value::Integer(cfg.params.n_max as i64));
    run.insert("truncation_check".into(), Value::Integer(cfg.truncation_check as i64));
    if cfg.preset.as_deref().is_some_and(|p| p == "fig7" || p == "fig8") {
        run.insert(
            "note".into(),
            Value::String("perturbative guard disabled; quantities from the full Liouvillian".into()),
        );
    }
    let mut doc = Table::new();
    doc.insert("run".into(), Value::Table(run));
    doc.insert("config".into(), Value::Table(cfg.to_table()));
    format!("# written at unix time {stamp}\n{}", toml::to_string(&doc).unwrap_or_default())
}

pub fn scan_summary(out: &ScanOutput) -> Table {
    let mut t = Table::new();
    t.insert("rows".into(), Value::Integer(out.rows.len() as i64));
    t.insert("converged_rows".into(), Value::Integer(out.converged_rows() as i64));
    t.insert("failed_rows".into(), Value::Integer(out.failed_rows() as i64));
    t
}
