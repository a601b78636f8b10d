//! Scan configuration: TOML text with flat parameter keys at the top level
//! and `[[axis]]`, `[mcwf]`, `[evolve]`, `[fano]`, `[raman]`, `[geometry]`
//! sections. A `preset` key loads a figure configuration first; every other
//! key overrides it.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use darkcool::{DecayConvention, Scheme, SystemParams};
use thiserror::Error;
use toml::{Table, Value};

pub const MAX_AXES: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("invalid range for '{key}': {reason}")]
    RangeInvalid { key: String, reason: String },
    #[error("{0} scan axes requested; at most 2 are supported")]
    AxisLimit(usize),
    #[error("invalid value for '{key}': {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("unknown preset '{0}' (expected fig2, fig4, fig5, fig7, fig8 or fig9)")]
    UnknownPreset(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue { key: key.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Lin,
    Log,
}

/// Scannable parameters. `omega_a_rel` and `omega_b_rel` are relative
/// deviations applied after the condition and detuning rules.
pub const AXIS_NAMES: [&str; 13] = [
    "nu", "gamma", "delta", "omega_a", "omega_b", "eta_a", "eta_b", "phi", "eta_up", "eta_down", "alpha",
    "omega_a_rel", "omega_b_rel",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| {
                if k == 0 {
                    return self.lo;
                }
                if k == n - 1 {
                    return self.hi;
                }
                let s = k as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Lin => self.lo + s * (self.hi - self.lo),
                    Spacing::Log => (self.lo.ln() + s * (self.hi.ln() - self.lo.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    NSs,
    W,
    WAnalytic,
    APlus,
    AMinus,
    Fidelity,
}

impl Quantity {
    pub const ALL: [Quantity; 6] =
        [Quantity::NSs, Quantity::W, Quantity::WAnalytic, Quantity::APlus, Quantity::AMinus, Quantity::Fidelity];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::NSs => "n_ss",
            Quantity::W => "W",
            Quantity::WAnalytic => "W_analytic",
            Quantity::APlus => "a_plus",
            Quantity::AMinus => "a_minus",
            Quantity::Fidelity => "fidelity",
        }
    }
}

impl FromStr for Quantity {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| invalid("quantities", format!("unknown quantity '{s}'")))
    }
}

/// Where n_ss, W and A± come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Steady state and relaxation of the full Liouvillian; A± by projection.
    Liouvillian,
    ClosedForm,
    Projection,
}

/// Parameter fixed by the blue-sideband cancellation condition at each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    None,
    EtaA,
    EtaB,
    /// ΩB = 2νηA/(ηB − 2ηA).
    OmegaB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detuning {
    Fixed,
    /// Dressed state on the red sideband; evaluated for the scheme actually run.
    Resonance,
}

macro_rules! keyword_enum {
    ($ty:ident, $key:literal, $($name:literal => $variant:expr),+ $(,)?) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                $(if self == $variant { return $name; })+
                unreachable!()
            }
        }

        impl FromStr for $ty {
            type Err = ConfigError;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(invalid($key, format!("unknown value '{other}'"))),
                }
            }
        }
    };
}

keyword_enum!(Spacing, "spacing", "lin" => Spacing::Lin, "log" => Spacing::Log);
keyword_enum!(Method, "method", "liouvillian" => Method::Liouvillian, "closed_form" => Method::ClosedForm, "projection" => Method::Projection);
keyword_enum!(Condition, "condition", "none" => Condition::None, "eta_a" => Condition::EtaA, "eta_b" => Condition::EtaB, "omega_b" => Condition::OmegaB);
keyword_enum!(Detuning, "detuning", "fixed" => Detuning::Fixed, "resonance" => Detuning::Resonance);

#[derive(Debug, Clone, PartialEq)]
pub struct McwfConfig {
    pub ions: usize,
    /// 0-based index into the modes sorted by frequency.
    pub addressed_mode: usize,
    /// One truncation per mode; empty means `n_max` for every mode.
    pub n_max: Vec<usize>,
    pub trajectories: usize,
    pub t_max: f64,
    pub points: usize,
    /// Initial Fock state per mode; empty means one phonon each.
    pub phonons: Vec<usize>,
}

impl Default for McwfConfig {
    fn default() -> Self {
        Self { ions: 1, addressed_mode: 0, n_max: Vec::new(), trajectories: 100, t_max: 100.0, points: 11, phonons: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub t_max: f64,
    pub points: usize,
    pub initial_n: usize,
    /// Drop the order-2 terms, matching the jump model.
    pub first_order: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { t_max: 100.0, points: 11, initial_n: 1, first_order: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FanoConfig {
    pub modes: usize,
    pub k_lo: f64,
    pub k_hi: f64,
    pub coupling: f64,
    /// Lorentzian half-width; flat continuum when absent.
    pub taper: Option<f64>,
    pub exclusion: f64,
}

impl Default for FanoConfig {
    fn default() -> Self {
        Self { modes: 2000, k_lo: -20.0, k_hi: 20.0, coupling: 1.0, taper: None, exclusion: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamanConfig {
    pub omega_p: f64,
    pub eta_p: f64,
    pub delta_prime: f64,
    pub second_order: bool,
    pub validate: bool,
    pub n_max: usize,
    pub samples: usize,
}

impl Default for RamanConfig {
    fn default() -> Self {
        Self { omega_p: 2.0, eta_p: 0.05, delta_prime: 50.0, second_order: false, validate: true, n_max: 4, samples: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    /// Tilt of the A beams in degrees; the ΩB-matched tilt when absent.
    pub theta: Option<f64>,
    pub wavelength_ratio: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { theta: None, wavelength_ratio: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub params: SystemParams,
    pub schemes: Vec<Scheme>,
    pub axes: Vec<Axis>,
    pub quantities: Vec<Quantity>,
    pub method: Method,
    pub condition: Condition,
    pub detuning: Detuning,
    pub perturbative_guard: bool,
    /// Largest Ωη allowed while the guard is on.
    pub guard_limit: f64,
    /// Extra Fock levels for the truncation check on n_ss.
    pub truncation_check: usize,
    pub preset: Option<String>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: u64,
    pub mcwf: McwfConfig,
    pub evolve: EvolveConfig,
    pub fano: FanoConfig,
    pub raman: RamanConfig,
    pub geometry: GeometryConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            schemes: vec![Scheme::Robust],
            axes: Vec::new(),
            quantities: vec![Quantity::NSs, Quantity::W],
            method: Method::Liouvillian,
            condition: Condition::None,
            detuning: Detuning::Fixed,
            perturbative_guard: true,
            guard_limit: 0.5,
            truncation_check: 3,
            preset: None,
            output: None,
            threads: None,
            seed: 0,
            mcwf: McwfConfig::default(),
            evolve: EvolveConfig::default(),
            fano: FanoConfig::default(),
            raman: RamanConfig::default(),
            geometry: GeometryConfig::default(),
        }
    }
}

impl ScanConfig {
    /// Number of grid points per scheme.
    pub fn grid_size(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    /// Row-major grid: the last axis varies fastest.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let mut grid = vec![Vec::new()];
        for axis in &self.axes {
            let values = axis.values();
            grid = grid
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        grid
    }

    /// Full configuration as TOML; parsing it back gives the same config.
    pub fn to_table(&self) -> Table {
        let p = &self.params;
        let mut t = Table::new();
        for (k, v) in [
            ("nu", p.nu),
            ("gamma", p.gamma),
            ("delta", p.delta),
            ("omega_a", p.omega_a),
            ("omega_b", p.omega_b),
            ("eta_a", p.eta_a),
            ("eta_b", p.eta_b),
            ("phi", p.phi),
            ("eta_up", p.eta_up),
            ("eta_down", p.eta_down),
            ("alpha", p.alpha),
            ("guard_limit", self.guard_limit),
        ] {
            t.insert(k.into(), Value::Float(v));
        }
        t.insert("n_max".into(), Value::Integer(p.n_max as i64));
        t.insert("decay".into(), Value::String(p.decay.to_string()));
        t.insert("scheme".into(), Value::Array(self.schemes.iter().map(|s| Value::String(s.name().into())).collect()));
        t.insert(
            "quantities".into(),
            Value::Array(self.quantities.iter().map(|q| Value::String(q.name().into())).collect()),
        );
        t.insert("method".into(), Value::String(self.method.name().into()));
        t.insert("condition".into(), Value::String(self.condition.name().into()));
        t.insert("detuning".into(), Value::String(self.detuning.name().into()));
        t.insert("perturbative_guard".into(), Value::Boolean(self.perturbative_guard));
        t.insert("truncation_check".into(), Value::Integer(self.truncation_check as i64));
        t.insert("seed".into(), Value::Integer(self.seed as i64));
        if let Some(name) = &self.preset {
            t.insert("preset".into(), Value::String(name.clone()));
        }
        if let Some(path) = &self.output {
            t.insert("output".into(), Value::String(path.display().to_string()));
        }
        if let Some(n) = self.threads {
            t.insert("threads".into(), Value::Integer(n as i64));
        }
        if !self.axes.is_empty() {
            let axes = self
                .axes
                .iter()
                .map(|a| {
                    let mut at = Table::new();
                    at.insert("name".into(), Value::String(a.name.clone()));
                    at.insert("range".into(), Value::Array(vec![Value::Float(a.lo), Value::Float(a.hi)]));
                    at.insert("points".into(), Value::Integer(a.points as i64));
                    at.insert("spacing".into(), Value::String(a.spacing.name().into()));
                    Value::Table(at)
                })
                .collect();
            t.insert("axis".into(), Value::Array(axes));
        }
        let ints = |v: &[usize]| Value::Array(v.iter().map(|&n| Value::Integer(n as i64)).collect());

        let m = &self.mcwf;
        let mut mt = Table::new();
        mt.insert("ions".into(), Value::Integer(m.ions as i64));
        mt.insert("addressed_mode".into(), Value::Integer(m.addressed_mode as i64));
        mt.insert("n_max".into(), ints(&m.n_max));
        mt.insert("trajectories".into(), Value::Integer(m.trajectories as i64));
        mt.insert("t_max".into(), Value::Float(m.t_max));
        mt.insert("points".into(), Value::Integer(m.points as i64));
        mt.insert("phonons".into(), ints(&m.phonons));
        t.insert("mcwf".into(), Value::Table(mt));

        let e = &self.evolve;
        let mut et = Table::new();
        et.insert("t_max".into(), Value::Float(e.t_max));
        et.insert("points".into(), Value::Integer(e.points as i64));
        et.insert("initial_n".into(), Value::Integer(e.initial_n as i64));
        et.insert("first_order".into(), Value::Boolean(e.first_order));
        t.insert("evolve".into(), Value::Table(et));

        let f = &self.fano;
        let mut ft = Table::new();
        ft.insert("modes".into(), Value::Integer(f.modes as i64));
        ft.insert("k_range".into(), Value::Array(vec![Value::Float(f.k_lo), Value::Float(f.k_hi)]));
        ft.insert("coupling".into(), Value::Float(f.coupling));
        if let Some(w) = f.taper {
            ft.insert("taper".into(), Value::Float(w));
        }
        ft.insert("exclusion".into(), Value::Float(f.exclusion));
        t.insert("fano".into(), Value::Table(ft));

        let r = &self.raman;
        let mut rt = Table::new();
        rt.insert("omega_p".into(), Value::Float(r.omega_p));
        rt.insert("eta_p".into(), Value::Float(r.eta_p));
        rt.insert("delta_prime".into(), Value::Float(r.delta_prime));
        rt.insert("second_order".into(), Value::Boolean(r.second_order));
        rt.insert("validate".into(), Value::Boolean(r.validate));
        rt.insert("n_max".into(), Value::Integer(r.n_max as i64));
        rt.insert("samples".into(), Value::Integer(r.samples as i64));
        t.insert("raman".into(), Value::Table(rt));

        let g = &self.geometry;
        let mut gt = Table::new();
        if let Some(th) = g.theta {
            gt.insert("theta".into(), Value::Float(th));
        }
        gt.insert("wavelength_ratio".into(), Value::Float(g.wavelength_ratio));
        t.insert("geometry".into(), Value::Table(gt));
        t
    }
}

impl fmt::Display for ScanConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&toml::to_string(&self.to_table()).map_err(|_| fmt::Error)?)
    }
}

/// Reader over one table that remembers which keys were consumed.
struct Section<'a> {
    prefix: &'a str,
    table: &'a Table,
    seen: BTreeSet<&'a str>,
}

impl<'a> Section<'a> {
    fn new(prefix: &'a str, table: &'a Table) -> Self {
        Self { prefix, table, seen: BTreeSet::new() }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn get(&mut self, key: &'a str) -> Option<&'a Value> {
        self.seen.insert(key);
        self.table.get(key)
    }

    fn float(&mut self, key: &'a str, slot: &mut f64) -> Result<()> {
        if let Some(v) = self.get(key) {
            let x = match v {
                Value::Float(x) => *x,
                Value::Integer(i) => *i as f64,
                _ => return Err(invalid(&self.path(key), "expected a number")),
            };
            if !x.is_finite() {
                return Err(invalid(&self.path(key), "must be finite"));
            }
            *slot = x;
        }
        Ok(())
    }

    fn uint(&mut self, key: &'a str, slot: &mut usize) -> Result<()> {
        if let Some(v) = self.get(key) {
            *slot = as_uint(v).ok_or_else(|| invalid(&self.path(key), "expected a non-negative integer"))?;
        }
        Ok(())
    }

    fn boolean(&mut self, key: &'a str, slot: &mut bool) -> Result<()> {
        if let Some(v) = self.get(key) {
            *slot = v.as_bool().ok_or_else(|| invalid(&self.path(key), "expected true or false"))?;
        }
        Ok(())
    }

    fn string(&mut self, key: &'a str) -> Result<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(invalid(&self.path(key), "expected a string")),
        }
    }

    fn keyword<T: FromStr<Err = ConfigError>>(&mut self, key: &'a str, slot: &mut T) -> Result<()> {
        if let Some(s) = self.string(key)? {
            *slot = s.parse()?;
        }
        Ok(())
    }

    fn uint_list(&mut self, key: &'a str, slot: &mut Vec<usize>) -> Result<()> {
        if let Some(v) = self.get(key) {
            let path = self.path(key);
            let arr = v.as_array().ok_or_else(|| invalid(&path, "expected an array"))?;
            *slot = arr
                .iter()
                .map(|x| as_uint(x).ok_or_else(|| invalid(&path, "expected non-negative integers")))
                .collect::<Result<_>>()?;
        }
        Ok(())
    }

    fn range(&mut self, key: &'a str) -> Result<Option<(f64, f64)>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let path = self.path(key);
        let bad = |reason: &str| ConfigError::RangeInvalid { key: path.clone(), reason: reason.into() };
        let arr = v.as_array().ok_or_else(|| bad("expected [lo, hi]"))?;
        let nums: Vec<f64> = arr
            .iter()
            .map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)))
            .collect::<Option<_>>()
            .ok_or_else(|| bad("endpoints must be numbers"))?;
        match nums[..] {
            [lo, hi] if lo.is_finite() && hi.is_finite() => Ok(Some((lo, hi))),
            [_, _] => Err(bad("endpoints must be finite")),
            _ => Err(bad("expected exactly two endpoints")),
        }
    }

    fn sub(&mut self, key: &'a str) -> Result<Option<&'a Table>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(invalid(&self.path(key), "expected a section")),
        }
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().find(|k| !self.seen.contains(k.as_str())) {
            Some(k) => Err(ConfigError::UnknownKey(self.path(k))),
            None => Ok(()),
        }
    }
}

fn as_uint(v: &Value) -> Option<usize> {
    v.as_integer().and_then(|i| usize::try_from(i).ok())
}

pub fn parse_config(text: &str) -> Result<ScanConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    from_table(&table)
}

/// Builds a config from an already parsed table.
pub fn from_table(table: &Table) -> Result<ScanConfig> {
    let mut top = Section::new("", table);
    let mut cfg = match top.string("preset")? {
        Some(name) => preset(name)?,
        None => ScanConfig::default(),
    };

    let p = &mut cfg.params;
    for (key, slot) in [
        ("nu", &mut p.nu),
        ("gamma", &mut p.gamma),
        ("delta", &mut p.delta),
        ("omega_a", &mut p.omega_a),
        ("omega_b", &mut p.omega_b),
        ("eta_a", &mut p.eta_a),
        ("eta_b", &mut p.eta_b),
        ("phi", &mut p.phi),
        ("eta_up", &mut p.eta_up),
        ("eta_down", &mut p.eta_down),
        ("alpha", &mut p.alpha),
    ] {
        top.float(key, slot)?;
    }
    top.uint("n_max", &mut p.n_max)?;
    if let Some(s) = top.string("decay")? {
        p.decay = s.parse::<DecayConvention>().map_err(|e| invalid("decay", e.to_string()))?;
    }

    match top.get("scheme") {
        None => {}
        Some(Value::String(s)) => cfg.schemes = vec![parse_scheme(s)?],
        Some(Value::Array(list)) => {
            cfg.schemes = list
                .iter()
                .map(|v| v.as_str().ok_or_else(|| invalid("scheme", "expected scheme names")).and_then(parse_scheme))
                .collect::<Result<_>>()?;
        }
        Some(_) => return Err(invalid("scheme", "expected a name or a list of names")),
    }
    if let Some(v) = top.get("quantities") {
        let list = v.as_array().ok_or_else(|| invalid("quantities", "expected a list"))?;
        cfg.quantities = list
            .iter()
            .map(|q| q.as_str().ok_or_else(|| invalid("quantities", "expected names")).and_then(str::parse))
            .collect::<Result<_>>()?;
    }
    top.keyword("method", &mut cfg.method)?;
    top.keyword("condition", &mut cfg.condition)?;
    top.keyword("detuning", &mut cfg.detuning)?;
    top.boolean("perturbative_guard", &mut cfg.perturbative_guard)?;
    top.float("guard_limit", &mut cfg.guard_limit)?;
    top.uint("truncation_check", &mut cfg.truncation_check)?;
    if let Some(s) = top.string("output")? {
        cfg.output = Some(PathBuf::from(s));
    }
    if top.get("threads").is_some() {
        let mut n = 0;
        top.uint("threads", &mut n)?;
        cfg.threads = Some(n);
    }
    if let Some(v) = top.get("seed") {
        cfg.seed = v
            .as_integer()
            .and_then(|i| u64::try_from(i).ok())
            .ok_or_else(|| invalid("seed", "expected a non-negative integer"))?;
    }
    if let Some(v) = top.get("axis") {
        let list = v.as_array().ok_or_else(|| invalid("axis", "expected [[axis]] entries"))?;
        cfg.axes = list
            .iter()
            .map(|a| a.as_table().ok_or_else(|| invalid("axis", "expected a table")).and_then(parse_axis))
            .collect::<Result<_>>()?;
    }

    if let Some(t) = top.sub("mcwf")? {
        let m = &mut cfg.mcwf;
        let mut s = Section::new("mcwf", t);
        s.uint("ions", &mut m.ions)?;
        s.uint("addressed_mode", &mut m.addressed_mode)?;
        s.uint_list("n_max", &mut m.n_max)?;
        s.uint("trajectories", &mut m.trajectories)?;
        s.float("t_max", &mut m.t_max)?;
        s.uint("points", &mut m.points)?;
        s.uint_list("phonons", &mut m.phonons)?;
        s.finish()?;
    }
    if let Some(t) = top.sub("evolve")? {
        let e = &mut cfg.evolve;
        let mut s = Section::new("evolve", t);
        s.float("t_max", &mut e.t_max)?;
        s.uint("points", &mut e.points)?;
        s.uint("initial_n", &mut e.initial_n)?;
        s.boolean("first_order", &mut e.first_order)?;
        s.finish()?;
    }
    if let Some(t) = top.sub("fano")? {
        let f = &mut cfg.fano;
        let mut s = Section::new("fano", t);
        s.uint("modes", &mut f.modes)?;
        if let Some((lo, hi)) = s.range("k_range")? {
            (f.k_lo, f.k_hi) = (lo, hi);
        }
        s.float("coupling", &mut f.coupling)?;
        if s.table.contains_key("taper") {
            let mut w = 0.0;
            s.float("taper", &mut w)?;
            f.taper = Some(w);
        }
        s.float("exclusion", &mut f.exclusion)?;
        s.finish()?;
    }
    if let Some(t) = top.sub("raman")? {
        let r = &mut cfg.raman;
        let mut s = Section::new("raman", t);
        s.float("omega_p", &mut r.omega_p)?;
        s.float("eta_p", &mut r.eta_p)?;
        s.float("delta_prime", &mut r.delta_prime)?;
        s.boolean("second_order", &mut r.second_order)?;
        s.boolean("validate", &mut r.validate)?;
        s.uint("n_max", &mut r.n_max)?;
        s.uint("samples", &mut r.samples)?;
        s.finish()?;
    }
    if let Some(t) = top.sub("geometry")? {
        let g = &mut cfg.geometry;
        let mut s = Section::new("geometry", t);
        if s.table.contains_key("theta") {
            let mut th = 0.0;
            s.float("theta", &mut th)?;
            g.theta = Some(th);
        }
        s.float("wavelength_ratio", &mut g.wavelength_ratio)?;
        s.finish()?;
    }
    top.finish()?;
    validate(&cfg)?;
    Ok(cfg)
}

fn parse_scheme(s: &str) -> Result<Scheme> {
    s.parse().map_err(|e: darkcool::Error| invalid("scheme", e.to_string()))
}

fn parse_axis(t: &Table) -> Result<Axis> {
    let mut s = Section::new("axis", t);
    let name = s.string("name")?.ok_or_else(|| invalid("axis.name", "missing"))?.to_string();
    let (lo, hi) = s.range("range")?.ok_or_else(|| invalid("axis.range", "missing"))?;
    let mut points = 0;
    s.uint("points", &mut points)?;
    let mut spacing = Spacing::Lin;
    s.keyword("spacing", &mut spacing)?;
    s.finish()?;
    Ok(Axis { name, lo, hi, points, spacing })
}

fn validate(cfg: &ScanConfig) -> Result<()> {
    if cfg.axes.len() > MAX_AXES {
        return Err(ConfigError::AxisLimit(cfg.axes.len()));
    }
    for (k, a) in cfg.axes.iter().enumerate() {
        let bad = |reason: &str| ConfigError::RangeInvalid { key: format!("axis.{}", a.name), reason: reason.into() };
        if !AXIS_NAMES.contains(&a.name.as_str()) {
            return Err(invalid("axis.name", format!("'{}' cannot be scanned", a.name)));
        }
        if cfg.axes[..k].iter().any(|b| b.name == a.name) {
            return Err(invalid("axis.name", format!("'{}' appears twice", a.name)));
        }
        if a.points < 2 {
            return Err(bad("needs at least 2 points"));
        }
        if !(a.lo < a.hi) {
            return Err(bad("lower endpoint must be below the upper one"));
        }
        if a.spacing == Spacing::Log && a.lo <= 0.0 {
            return Err(bad("log spacing needs positive endpoints"));
        }
        let overwritten = match cfg.condition {
            Condition::EtaA => a.name == "eta_a",
            Condition::EtaB => a.name == "eta_b",
            Condition::OmegaB => a.name == "omega_b",
            Condition::None => false,
        } || (cfg.detuning == Detuning::Resonance && a.name == "delta");
        if overwritten {
            return Err(invalid("axis.name", format!("'{}' is fixed by the condition or detuning rule", a.name)));
        }
    }
    if cfg.schemes.is_empty() {
        return Err(invalid("scheme", "at least one scheme is required"));
    }
    if cfg.quantities.is_empty() {
        return Err(invalid("quantities", "at least one quantity is required"));
    }
    if cfg.threads == Some(0) {
        return Err(invalid("threads", "must be at least 1"));
    }
    if cfg.guard_limit <= 0.0 {
        return Err(invalid("guard_limit", "must be positive"));
    }
    if cfg.mcwf.ions == 0 || cfg.mcwf.ions > 3 {
        return Err(invalid("mcwf.ions", "chains of 1 to 3 ions are supported"));
    }
    if cfg.mcwf.trajectories < 2 {
        return Err(invalid("mcwf.trajectories", "need at least 2 trajectories"));
    }
    for (key, points) in [("mcwf.points", cfg.mcwf.points), ("evolve.points", cfg.evolve.points)] {
        if points < 2 {
            return Err(ConfigError::RangeInvalid { key: key.into(), reason: "needs at least 2 points".into() });
        }
    }
    for (key, t) in [("mcwf.t_max", cfg.mcwf.t_max), ("evolve.t_max", cfg.evolve.t_max)] {
        if !(t > 0.0) {
            return Err(ConfigError::RangeInvalid { key: key.into(), reason: "must be positive".into() });
        }
    }
    if !(cfg.fano.k_lo < cfg.fano.k_hi) {
        return Err(ConfigError::RangeInvalid { key: "fano.k_range".into(), reason: "lower endpoint must be below the upper one".into() });
    }
    if cfg.fano.modes < 2 {
        return Err(invalid("fano.modes", "needs at least 2 modes"));
    }
    Ok(())
}

fn axis(name: &str, lo: f64, hi: f64, points: usize) -> Axis {
    Axis { name: name.into(), lo, hi, points, spacing: Spacing::Lin }
}

/// Figure presets. Figures 7 and 8 share one scan that reports both n_ss
/// and W.
pub fn preset(name: &str) -> Result<ScanConfig> {
    let fig_params = |omega_a: f64, omega_b: f64, eta_b: f64| SystemParams {
        gamma: 15.0,
        omega_a,
        omega_b,
        eta_b,
        delta: 0.0,
        ..SystemParams::default()
    };
    let mut cfg = ScanConfig { preset: Some(name.to_string()), ..ScanConfig::default() };
    match name {
        "fig2" => {
            cfg.params = fig_params(0.1, 1.0, 0.4);
            cfg.condition = Condition::OmegaB;
            cfg.method = Method::ClosedForm;
            cfg.quantities = vec![Quantity::NSs];
            cfg.axes = vec![axis("eta_a", 0.01, 0.1, 10), axis("omega_b_rel", -0.05, 0.05, 11)];
        }
        "fig4" => {
            cfg.params = SystemParams { n_max: 10, ..fig_params(0.1, 1.3, 0.1) };
            cfg.condition = Condition::EtaA;
            cfg.detuning = Detuning::Resonance;
            cfg.quantities = vec![Quantity::W, Quantity::WAnalytic];
            cfg.axes = vec![axis("omega_a", 0.1, 6.0, 30)];
        }
        "fig5" => {
            cfg.params = SystemParams { n_max: 10, ..fig_params(0.1, 1.3, 0.1) };
            cfg.schemes = vec![Scheme::Robust, Scheme::Eit];
            cfg.condition = Condition::EtaA;
            cfg.detuning = Detuning::Resonance;
            cfg.quantities = vec![Quantity::W];
            cfg.axes = vec![axis("omega_a", 0.1, 4.0, 40)];
        }
        "fig7" | "fig8" => {
            cfg.params = SystemParams { n_max: 8, ..fig_params(400.0, 5.0, 0.1) };
            cfg.condition = Condition::EtaA;
            cfg.detuning = Detuning::Resonance;
            cfg.perturbative_guard = false;
            cfg.quantities = vec![Quantity::NSs, Quantity::W];
            cfg.axes = vec![axis("phi", 0.0, TAU, 41)];
        }
        "fig9" => {
            cfg.params = SystemParams { n_max: 6, ..fig_params(2.3, 1.0, 0.1) };
            cfg.condition = Condition::EtaA;
            cfg.mcwf = McwfConfig {
                ions: 3,
                addressed_mode: 1,
                n_max: vec![3, 3, 3],
                trajectories: 500,
                t_max: 300.0,
                points: 31,
                phonons: vec![1, 1, 1],
            };
        }
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    }
    Ok(cfg)
}

/// Sets a dotted key (`omega_a`, `mcwf.trajectories`) in a raw table. The
/// value is read as TOML and falls back to a bare string.
pub fn set_key(table: &mut Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| invalid(assignment, "expected key=value"))?;
    let (path, raw) = (path.trim(), raw.trim());
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let mut keys: Vec<&str> = path.split('.').collect();
    let last = keys.pop().filter(|k| !k.is_empty()).ok_or_else(|| invalid(path, "empty key"))?;
    let mut cursor = table;
    for k in keys {
        cursor = cursor
            .entry(k.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| invalid(path, format!("'{k}' is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}
