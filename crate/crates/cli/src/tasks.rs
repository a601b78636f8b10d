//! Single-run subcommands. Each returns a small table that is written as CSV.

use std::io::Write;

use darkcool::chain::{self, ChainConfig, EnsembleAverage, TrajectoryOptions, TrajectoryRecord};
use darkcool::fano::{self, ContinuumModel};
use darkcool::geometry::BeamGeometry;
use darkcool::liouville::{self, EvolutionPoint};
use darkcool::raman::{self, RamanParams, ValidationOptions};
use darkcool::rates::{self, OptimizerOptions};
use darkcool::{build_liouvillian, condition_ratio, Level, Scheme};

use crate::config::ScanConfig;
use crate::scan::{fmt_value, point_params};

/// Two-column `quantity,value` output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, String)>,
}

impl Summary {
    pub fn number(&mut self, key: &str, v: f64) {
        self.entries.push((key.into(), fmt_value(v)));
    }

    pub fn text(&mut self, key: &str, v: impl ToString) {
        self.entries.push((key.into(), v.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["quantity", "value"])?;
        for (k, v) in &self.entries {
            w.write_record([k, v])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn first_scheme(cfg: &ScanConfig) -> Scheme {
    cfg.schemes[0]
}

pub struct McwfRun {
    pub average: EnsembleAverage,
    pub records: Vec<TrajectoryRecord>,
    pub dimension: usize,
}

pub fn run_mcwf(cfg: &ScanConfig) -> darkcool::Result<McwfRun> {
    let m = &cfg.mcwf;
    let p = point_params(cfg, first_scheme(cfg), &[])?;
    let n_max = if m.n_max.is_empty() { vec![p.n_max; m.ions] } else { m.n_max.clone() };
    let mut chain_cfg = ChainConfig::linear_chain(p, m.ions, m.addressed_mode, n_max)?;
    chain_cfg.scheme = first_scheme(cfg);
    let model = chain::build_jump_model(&chain_cfg)?;
    let phonons = if m.phonons.is_empty() { vec![1; m.ions] } else { m.phonons.clone() };
    let psi0 = model.initial_state(&phonons)?;
    let opts = TrajectoryOptions::uniform(m.t_max, m.points);
    let records = match cfg.threads.map(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build()) {
        Some(Ok(pool)) => pool.install(|| chain::run_ensemble(&model, &psi0, cfg.seed, m.trajectories, &opts)),
        _ => chain::run_ensemble(&model, &psi0, cfg.seed, m.trajectories, &opts),
    }?;
    let average = chain::ensemble_average(&records)?;
    Ok(McwfRun { average, records, dimension: model.dim() })
}

impl McwfRun {
    /// `t, n_0.., se_0..` per output time.
    pub fn write_average<W: Write>(&self, out: W) -> csv::Result<()> {
        let a = &self.average;
        let modes = a.mean.len();
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["t".to_string()];
        head.extend((0..modes).map(|m| format!("n_{m}")));
        head.extend((0..modes).map(|m| format!("se_{m}")));
        w.write_record(&head)?;
        for (k, t) in a.t_grid.iter().enumerate() {
            let mut rec = vec![fmt_value(*t)];
            rec.extend(a.mean.iter().map(|col| fmt_value(col[k])));
            rec.extend(a.stderr.iter().map(|col| fmt_value(col[k])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per trajectory and output time, with the jump count so far.
    pub fn write_records<W: Write>(&self, out: W) -> csv::Result<()> {
        let modes = self.average.mean.len();
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["stream".to_string(), "t".to_string()];
        head.extend((0..modes).map(|m| format!("n_{m}")));
        head.push("jumps".into());
        w.write_record(&head)?;
        for r in &self.records {
            for (k, t) in r.t_grid.iter().enumerate() {
                let mut rec = vec![r.stream.to_string(), fmt_value(*t)];
                rec.extend(r.mean_n.iter().map(|col| fmt_value(col[k])));
                rec.push(r.jumps.iter().filter(|j| j.t <= *t).count().to_string());
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Master-equation evolution from |−⟩|initial_n⟩.
pub fn run_evolve(cfg: &ScanConfig) -> darkcool::Result<Vec<EvolutionPoint>> {
    let e = &cfg.evolve;
    let scheme = first_scheme(cfg);
    let p = point_params(cfg, scheme, &[])?;
    let l = build_liouvillian(&p, scheme)?;
    if e.initial_n > p.n_max {
        return Err(darkcool::Error::InvalidParams("initial phonon number outside the truncation".into()));
    }
    let rho0 = liouville::product_state(&l.space, Level::Minus, e.initial_n);
    let grid: Vec<f64> = (0..e.points).map(|k| e.t_max * k as f64 / (e.points - 1) as f64).collect();
    if e.first_order {
        liouville::evolve_with(&l.order0.add(&l.order1), &l.space, &rho0, &grid)
    } else {
        liouville::evolve(&l, &rho0, &grid)
    }
}

pub fn write_evolution<W: Write>(points: &[EvolutionPoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "mean_n", "p_minus", "p_plus", "p_e", "trace"])?;
    for pt in points {
        let [a, b, c] = pt.populations;
        w.write_record([pt.t, pt.mean_n, a, b, c, pt.trace].map(fmt_value))?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_fano(cfg: &ScanConfig) -> darkcool::Result<(Summary, ContinuumModel, fano::ContinuumSpectrum)> {
    let f = &cfg.fano;
    let p = &cfg.params;
    let model = match f.taper {
        Some(w) => ContinuumModel::tapered(p.omega_a, p.omega_b, f.coupling, f.modes, f.k_lo, f.k_hi, w),
        None => ContinuumModel::flat(p.omega_a, p.omega_b, f.coupling, f.modes, f.k_lo, f.k_hi),
    };
    let spectrum = fano::diagonalize_continuum(&model)?;
    let (deviation, checked) = fano::overlap_ratio_deviation(&spectrum, p.omega_a, p.omega_b, f.exclusion);
    let mut s = Summary::default();
    s.text("modes", f.modes);
    s.number("grid_spacing", model.grid_spacing());
    s.number("max_ratio_deviation", deviation);
    s.text("checked_states", checked);
    match fano::fano_zero(&spectrum, p.omega_b) {
        Ok(k0) => {
            s.number("zero_crossing", k0);
            s.number("zero_offset", k0 - p.omega_b);
        }
        Err(e) => s.text("zero_crossing", e),
    }
    s.number("excited_weight", spectrum.excited_weight());
    Ok((s, model, spectrum))
}

pub fn write_spectrum<W: Write>(spectrum: &fano::ContinuumSpectrum, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "overlap_e", "overlap_plus"])?;
    for ((k, e), pl) in spectrum.energies.iter().zip(&spectrum.overlap_e).zip(&spectrum.overlap_plus) {
        w.write_record([*k, *e, *pl].map(fmt_value))?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_effective(cfg: &ScanConfig) -> darkcool::Result<Summary> {
    let r = &cfg.raman;
    let rp = RamanParams { nu: cfg.params.nu, ..RamanParams::new(r.omega_p, r.eta_p, r.delta_prime) };
    let (omega_b, eta_b) = raman::effective_params(&rp)?;
    let c = raman::analytic_coefficients(&rp)?;
    let mut s = Summary::default();
    s.number("omega_b", omega_b);
    s.number("eta_b", eta_b);
    s.number("eta_ratio", if r.eta_p != 0.0 { eta_b / r.eta_p } else { f64::NAN });
    s.number("stark", c.stark);
    s.number("sigma_x", c.sigma_x);
    s.number("q_sigma_y", c.q_sigma_y);
    s.number("p_sigma_z", c.p_sigma_z);
    if r.validate {
        let opts = ValidationOptions { n_max: r.n_max, samples: r.samples, second_order: r.second_order, ..Default::default() };
        let v = raman::validate_elimination(&rp, &opts)?;
        s.number("t_max", v.t_max);
        s.number("max_deviation", v.max_deviation);
    }
    Ok(s)
}

pub fn run_geometry(cfg: &ScanConfig) -> darkcool::Result<Summary> {
    let g = BeamGeometry::new(cfg.geometry.wavelength_ratio)?;
    let p = &cfg.params;
    let mut s = Summary::default();
    s.number("condition_ratio", condition_ratio(p.nu, p.omega_b)?);
    let tilt = g.tilt_angle(p.omega_b, p.nu)?;
    s.number("tilt_deg", tilt.to_degrees());
    s.number("ratio_at_tilt", g.ratio_at_angle(tilt)?);
    if let Some(theta_deg) = cfg.geometry.theta {
        let theta = theta_deg.to_radians();
        s.number("theta_deg", theta_deg);
        s.number("ratio_at_theta", g.ratio_at_angle(theta)?);
        let axis = g.optimal_axis(theta, p.omega_b, p.nu)?;
        s.number("optimal_axis_deg", axis.to_degrees());
        s.number("multiaxial_ratio", g.multiaxial_ratio(theta, axis)?);
    }
    Ok(s)
}

/// Rate optimizer over (ΩA, ΩB, Δ) starting from the configured point.
pub fn run_optimizer(cfg: &ScanConfig) -> darkcool::Result<Summary> {
    let p = point_params(cfg, Scheme::Robust, &[])?;
    let best = rates::optimize_cooling_rate(&p, &OptimizerOptions::default())?;
    let mut s = Summary::default();
    s.number("W", best.w);
    s.number("omega_a", best.params.omega_a);
    s.number("omega_b", best.params.omega_b);
    s.number("delta", best.params.delta);
    s.number("eta_a", best.params.eta_a);
    s.text("evaluations", best.evaluations);
    Ok(s)
}
