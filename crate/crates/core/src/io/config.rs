//! Run configuration: a layered TOML document whose keys carry their SI unit
//! (`dt_s`, `k_m2`, ...). A few keys accept `_mm` / `_mpa` variants that are
//! converted to SI while parsing; printing always writes SI keys.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;
use toml::{Table, Value};

use crate::constitutive::{ExchangeCoefficients, MechParams, PoreSize, ThermalParams, VolumeFractions};
use crate::mechanics::{ChiMode, FiberBc, MechBCs, MechOptions, TopLoad};
use crate::mesh::{BoundaryTag, DiagonalPattern};
use crate::thermal::{MassMatrix, NewtonSettings, ThermalBCs};
use crate::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    Mechanical,
    Thermal,
    MmsMechanical,
    MmsThermal,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::Mechanical, Case::Thermal, Case::MmsMechanical, Case::MmsThermal];

    pub fn as_str(&self) -> &'static str {
        match self {
            Case::Mechanical => "mechanical",
            Case::Thermal => "thermal",
            Case::MmsMechanical => "mms-mechanical",
            Case::MmsThermal => "mms-thermal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Case::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshConfig {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub pattern: DiagonalPattern,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_interval: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalConfig {
    pub params: MechParams,
    pub bcs: MechBCs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalConfig {
    pub params: ThermalParams,
    pub bcs: ThermalBCs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub mech: MechOptions,
    pub mass: MassMatrix,
    pub newton: NewtonSettings,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mech: MechOptions {
                pressure_coupling: true,
                chi_mode: ChiMode::Lagged,
            },
            mass: MassMatrix::Lumped,
            newton: NewtonSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub vtk: bool,
    /// Probe points (m) recorded in the time-series CSV.
    pub probes: Vec<Vec2>,
    /// Abscissa of the vertical temperature profile, as a fraction of `lx`.
    pub profile_x_frac: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("output"),
            vtk: true,
            probes: Vec::new(),
            profile_x_frac: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsConfig {
    pub levels: Vec<usize>,
    pub dt: f64,
    pub steps: usize,
}

impl Default for MmsConfig {
    fn default() -> Self {
        MmsConfig {
            levels: vec![8, 16, 32],
            dt: 0.25,
            steps: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: Case,
    pub mesh: Option<MeshConfig>,
    pub time: Option<TimeConfig>,
    pub fractions: Option<VolumeFractions>,
    pub mechanical: Option<MechanicalConfig>,
    pub thermal: Option<ThermalConfig>,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub mms: MmsConfig,
}

/// Key lookups on one table that remember which keys were consumed.
struct Reader<'a> {
    path: String,
    table: &'a Table,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Reader<'a> {
    fn new(path: &str, table: &'a Table) -> Self {
        Reader {
            path: path.to_string(),
            table,
            used: RefCell::new(BTreeSet::new()),
        }
    }

    fn name(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{}", self.path, key)
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        let v = self.table.get(key);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    fn sub(&self, key: &str, errs: &mut Vec<String>) -> Option<Reader<'a>> {
        match self.get(key)? {
            Value::Table(t) => Some(Reader::new(&self.name(key), t)),
            _ => {
                errs.push(format!("'{}' must be a table", self.name(key)));
                None
            }
        }
    }

    fn number(&self, key: &str, errs: &mut Vec<String>) -> Option<f64> {
        match self.get(key)? {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                errs.push(format!("'{}' must be a number", self.name(key)));
                None
            }
        }
    }

    /// A quantity given under exactly one of several keys, each with its
    /// factor to SI.
    fn quantity(&self, forms: &[(&str, f64)], required: bool, errs: &mut Vec<String>) -> Option<f64> {
        let present: Vec<_> = forms.iter().filter(|(k, _)| self.table.contains_key(*k)).collect();
        match present.as_slice() {
            [] => {
                if required {
                    errs.push(format!("missing required key '{}'", self.name(forms[0].0)));
                }
                None
            }
            [(k, factor)] => self.number(k, errs).map(|v| v * factor),
            _ => {
                for (k, _) in &present {
                    self.get(k);
                }
                errs.push(format!(
                    "give only one of {}",
                    present.iter().map(|(k, _)| format!("'{}'", self.name(k))).collect::<Vec<_>>().join(", ")
                ));
                None
            }
        }
    }

    fn required(&self, key: &str, errs: &mut Vec<String>) -> Option<f64> {
        self.quantity(&[(key, 1.0)], true, errs)
    }

    fn count(&self, key: &str, required: bool, errs: &mut Vec<String>) -> Option<usize> {
        match self.get(key) {
            None => {
                if required {
                    errs.push(format!("missing required key '{}'", self.name(key)));
                }
                None
            }
            Some(Value::Integer(i)) if *i >= 0 => Some(*i as usize),
            Some(_) => {
                errs.push(format!("'{}' must be a non-negative integer", self.name(key)));
                None
            }
        }
    }

    fn boolean(&self, key: &str, default: bool, errs: &mut Vec<String>) -> bool {
        match self.get(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                errs.push(format!("'{}' must be true or false", self.name(key)));
                default
            }
        }
    }

    fn choice<T>(&self, key: &str, default: T, parse: impl Fn(&str) -> Option<T>, allowed: &str, errs: &mut Vec<String>) -> T {
        match self.get(key) {
            None => default,
            Some(Value::String(s)) => parse(s).unwrap_or_else(|| {
                errs.push(format!("'{}' = \"{s}\" is not one of {allowed}", self.name(key)));
                default
            }),
            Some(_) => {
                errs.push(format!("'{}' must be a string", self.name(key)));
                default
            }
        }
    }

    fn tags(&self, key: &str, default: &[BoundaryTag], errs: &mut Vec<String>) -> BTreeSet<BoundaryTag> {
        let Some(v) = self.get(key) else {
            return default.iter().copied().collect();
        };
        let mut out = BTreeSet::new();
        match v {
            Value::Array(items) => {
                for item in items {
                    match item.as_str().and_then(BoundaryTag::parse) {
                        Some(t) => {
                            out.insert(t);
                        }
                        None => errs.push(format!(
                            "'{}' entries must be \"top\", \"bottom\", \"left\" or \"right\", got {item}",
                            self.name(key)
                        )),
                    }
                }
            }
            _ => errs.push(format!("'{}' must be an array of side names", self.name(key))),
        }
        out
    }

    fn point(&self, v: &Value, key: &str, factor: f64, errs: &mut Vec<String>) -> Option<Vec2> {
        let nums: Option<Vec<f64>> = v.as_array().map(|a| {
            a.iter()
                .filter_map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)))
                .collect()
        });
        match nums {
            Some(n) if n.len() == 2 && v.as_array().map(|a| a.len()) == Some(2) => Some(Vec2::new(n[0], n[1]) * factor),
            _ => {
                errs.push(format!("'{}' must be a pair of numbers", self.name(key)));
                None
            }
        }
    }

    /// A 2-vector given under exactly one of several keys.
    fn vector(&self, forms: &[(&str, f64)], errs: &mut Vec<String>) -> Option<(usize, Vec2)> {
        let present: Vec<usize> = (0..forms.len()).filter(|&i| self.table.contains_key(forms[i].0)).collect();
        match present.as_slice() {
            [] => None,
            [i] => {
                let (k, f) = forms[*i];
                let v = self.get(k)?;
                self.point(v, k, f, errs).map(|p| (*i, p))
            }
            _ => {
                for &i in &present {
                    self.get(forms[i].0);
                }
                errs.push(format!(
                    "give only one of {}",
                    present.iter().map(|&i| format!("'{}'", self.name(forms[i].0))).collect::<Vec<_>>().join(", ")
                ));
                None
            }
        }
    }

    fn finish(self, errs: &mut Vec<String>) {
        let used = self.used.borrow();
        for key in self.table.keys() {
            if !used.contains(key) {
                errs.push(format!("unknown key '{}'", self.name(key)));
            }
        }
    }
}

const MM: f64 = 1e-3;
const MPA: f64 = 1e6;

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with_case(text, None)
}

/// Like [`parse_config`], with the case optionally overridden (the case key
/// may then be absent).
pub fn parse_config_with_case(text: &str, case_override: Option<Case>) -> Result<RunConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
        message: e.message().trim().to_string(),
    })?;
    let mut errs = Vec::new();
    let root = Reader::new("", &table);

    let case_in_file = match root.get("case") {
        None => None,
        Some(Value::String(s)) => match Case::parse(s) {
            Some(c) => Some(c),
            None => {
                errs.push(format!(
                    "'case' = \"{s}\" is not one of {}",
                    Case::ALL.map(|c| c.as_str()).join(", ")
                ));
                None
            }
        },
        Some(_) => {
            errs.push("'case' must be a string".into());
            None
        }
    };
    let case = case_override.or(case_in_file);
    if case.is_none() && case_in_file.is_none() && !table.contains_key("case") {
        errs.push("missing required key 'case'".into());
    }

    let mesh = root.sub("mesh", &mut errs).map(|r| {
        let lx = r.quantity(&[("lx_m", 1.0), ("lx_mm", MM)], true, &mut errs);
        let ly = r.quantity(&[("ly_m", 1.0), ("ly_mm", MM)], true, &mut errs);
        let nx = r.count("nx", true, &mut errs);
        let ny = r.count("ny", true, &mut errs);
        let pattern = r.choice("pattern", DiagonalPattern::Uniform, DiagonalPattern::parse, "\"uniform\", \"alternating\"", &mut errs);
        r.finish(&mut errs);
        (lx, ly, nx, ny, pattern)
    });
    let mesh = match mesh {
        Some((Some(lx), Some(ly), Some(nx), Some(ny), pattern)) => {
            if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
                errs.push(format!("mesh extents must be positive, got {lx} x {ly} m"));
            }
            if nx == 0 || ny == 0 {
                errs.push(format!("mesh subdivisions must be at least 1, got {nx} x {ny}"));
            }
            Some(MeshConfig { lx, ly, nx, ny, pattern })
        }
        _ => None,
    };

    let time = root.sub("time", &mut errs).and_then(|r| {
        let dt = r.required("dt_s", &mut errs);
        let t_end = r.required("t_end_s", &mut errs);
        let interval = r.quantity(&[("snapshot_interval_s", 1.0)], false, &mut errs);
        r.finish(&mut errs);
        let (dt, t_end) = (dt?, t_end?);
        let snapshot_interval = interval.unwrap_or(t_end);
        if !(dt > 0.0 && dt.is_finite()) {
            errs.push(format!("time.dt_s = {dt} must be positive"));
        } else if !(t_end >= dt && t_end.is_finite()) {
            errs.push(format!("time.t_end_s = {t_end} must be at least dt_s = {dt}"));
        }
        if !(snapshot_interval > 0.0) {
            errs.push(format!("time.snapshot_interval_s = {snapshot_interval} must be positive"));
        }
        Some(TimeConfig {
            dt,
            t_end,
            snapshot_interval,
        })
    });

    let fractions = root.sub("fractions", &mut errs).and_then(|r| {
        let s = r.required("phi_s", &mut errs);
        let g = r.required("phi_g", &mut errs);
        let f = r.required("phi_f", &mut errs);
        r.finish(&mut errs);
        let v = VolumeFractions::new(s?, g?, f?);
        errs.extend(v.violations().into_iter().map(|m| format!("fractions: {m}")));
        Some(v)
    });

    let mechanical = root.sub("mechanical", &mut errs).and_then(|r| {
        let mut q = |forms: &[(&str, f64)]| r.quantity(forms, true, &mut errs);
        let lambda_s = q(&[("lambda_s_pa", 1.0), ("lambda_s_mpa", MPA)]);
        let mu_s = q(&[("mu_s_pa", 1.0), ("mu_s_mpa", MPA)]);
        let lambda_f = q(&[("lambda_f_pa", 1.0), ("lambda_f_mpa", MPA)]);
        let mu_f = q(&[("mu_f_pa", 1.0), ("mu_f_mpa", MPA)]);
        let gamma_s = q(&[("gamma_s_pa_s_m2", 1.0)]);
        let gamma_f = q(&[("gamma_f_pa_s_m2", 1.0)]);
        let chi_0 = q(&[("chi_0_pa", 1.0), ("chi_0_mpa", MPA)]);
        let eps_strain = q(&[("eps_strain", 1.0)]);
        let c0 = q(&[("c0_per_pa", 1.0)]);
        let k = q(&[("k_m2", 1.0)]);
        let bcs = match r.sub("bcs", &mut errs) {
            Some(b) => {
                let disp = [("top_displacement_m", 1.0), ("top_displacement_mm", MM)];
                let trac = [("top_traction_pa", 1.0), ("top_traction_mpa", MPA)];
                let d = b.vector(&disp, &mut errs);
                let t = b.vector(&trac, &mut errs);
                let top = match (d, t) {
                    (Some((_, u)), None) => Some(TopLoad::Displacement(u)),
                    (None, Some((_, tr))) => Some(TopLoad::Traction(tr)),
                    (Some(_), Some(_)) => {
                        errs.push("mechanical.bcs: give either a top displacement or a top traction, not both".into());
                        None
                    }
                    (None, None) => {
                        errs.push("mechanical.bcs: missing 'top_displacement_m' (or 'top_traction_pa')".into());
                        None
                    }
                };
                let ramp_time = b.quantity(&[("ramp_time_s", 1.0)], false, &mut errs).unwrap_or(0.0);
                let fix_bottom = b.boolean("fix_bottom", true, &mut errs);
                let lateral_rollers = b.boolean("lateral_rollers", false, &mut errs);
                let drained = b.tags("drained", &BoundaryTag::ALL, &mut errs);
                let fiber = b.choice("fiber", FiberBc::FixedBottom, FiberBc::parse, "\"fixed-bottom\", \"mirror-skeleton\"", &mut errs);
                b.finish(&mut errs);
                top.map(|top| MechBCs {
                    top,
                    ramp_time,
                    fix_bottom,
                    lateral_rollers,
                    drained,
                    fiber,
                })
            }
            None => {
                errs.push("missing required table [mechanical.bcs]".into());
                None
            }
        };
        r.finish(&mut errs);
        let params = MechParams {
            fractions: fractions.unwrap_or_default(),
            lambda_s: lambda_s?,
            mu_s: mu_s?,
            lambda_f: lambda_f?,
            mu_f: mu_f?,
            gamma_s: gamma_s?,
            gamma_f: gamma_f?,
            chi_0: chi_0?,
            eps_strain: eps_strain?,
            c0: c0?,
            k: k?,
        };
        let bcs = bcs?;
        let fv = params.fractions.violations();
        errs.extend(params.violations().into_iter().filter(|m| !fv.contains(m)).map(|m| format!("mechanical: {m}")));
        errs.extend(bcs.violations().into_iter().map(|m| format!("mechanical.bcs: {m}")));
        Some(MechanicalConfig { params, bcs })
    });

    let thermal = root.sub("thermal", &mut errs).and_then(|r| {
        let mut q = |forms: &[(&str, f64)]| r.quantity(forms, true, &mut errs);
        let rho_s = q(&[("rho_s_kg_m3", 1.0)]);
        let rho_g = q(&[("rho_g_kg_m3", 1.0)]);
        let rho_f = q(&[("rho_f_kg_m3", 1.0)]);
        let c_s = q(&[("c_s_j_kgk", 1.0)]);
        let c_g = q(&[("c_g_j_kgk", 1.0)]);
        let c_f = q(&[("c_f_j_kgk", 1.0)]);
        let kappa_s = q(&[("kappa_s_w_mk", 1.0)]);
        let kappa_f = q(&[("kappa_f_w_mk", 1.0)]);
        let kappa_bg = q(&[("kappa_bg_w_mk", 1.0)]);
        let l_g = q(&[("l_g_m", 1.0), ("l_g_mm", MM)]);
        let beta = q(&[("beta", 1.0)]);
        let h_sg = q(&[("h_sg_w_m3k3", 1.0)]);
        let h_sf = q(&[("h_sf_w_m3k3", 1.0)]);
        let h_gf = q(&[("h_gf_w_m3k3", 1.0)]);
        let h_air = q(&[("h_air_w_m2k", 1.0)]);
        let theta_hot = q(&[("theta_hot_k", 1.0)]);
        let theta_cold = q(&[("theta_cold_k", 1.0)]);
        let pore = match r.sub("pore_size", &mut errs) {
            Some(p) => {
                let base = p.quantity(&[("base_m", 1.0), ("base_mm", MM)], true, &mut errs);
                let sx = p.required("slope_x", &mut errs);
                let sy = p.required("slope_y", &mut errs);
                p.finish(&mut errs);
                match (base, sx, sy) {
                    (Some(base), Some(slope_x), Some(slope_y)) => Some(PoreSize { base, slope_x, slope_y }),
                    _ => None,
                }
            }
            None => {
                errs.push("missing required table [thermal.pore_size]".into());
                None
            }
        };
        let bcs = match r.sub("bcs", &mut errs) {
            Some(b) => {
                let bcs = ThermalBCs {
                    hot: b.tags("hot", &[BoundaryTag::Top], &mut errs),
                    cold: b.tags("cold", &[BoundaryTag::Bottom], &mut errs),
                };
                b.finish(&mut errs);
                bcs
            }
            None => ThermalBCs::default(),
        };
        r.finish(&mut errs);
        let params = ThermalParams {
            fractions: fractions.unwrap_or_default(),
            rho_s: rho_s?,
            rho_g: rho_g?,
            rho_f: rho_f?,
            c_s: c_s?,
            c_g: c_g?,
            c_f: c_f?,
            kappa_s: kappa_s?,
            kappa_f: kappa_f?,
            kappa_bg: kappa_bg?,
            l_g: l_g?,
            beta: beta?,
            exchange: ExchangeCoefficients {
                h_sg: h_sg?,
                h_sf: h_sf?,
                h_gf: h_gf?,
            },
            h_air: h_air?,
            theta_hot: theta_hot?,
            theta_cold: theta_cold?,
            pore_size: pore?,
        };
        let mut v = match &mesh {
            Some(m) => params.violations_on(m.lx, m.ly),
            None => params.violations(),
        };
        v.extend(bcs.violations());
        let fv = params.fractions.violations();
        errs.extend(v.into_iter().filter(|m| !fv.contains(m)).map(|m| format!("thermal: {m}")));
        Some(ThermalConfig { params, bcs })
    });

    let mut solver = SolverConfig::default();
    if let Some(r) = root.sub("solver", &mut errs) {
        solver.mech.pressure_coupling = r.boolean("pressure_coupling", true, &mut errs);
        let fixed = r.choice("chi_mode", false, |s| match s {
            "lagged" => Some(false),
            "fixed-point" => Some(true),
            _ => None,
        }, "\"lagged\", \"fixed-point\"", &mut errs);
        let sweeps = r.count("chi_max_sweeps", false, &mut errs).unwrap_or(10);
        if fixed && sweeps < 1 {
            errs.push("solver.chi_max_sweeps must be at least 1".into());
        }
        solver.mech.chi_mode = if fixed {
            ChiMode::FixedPoint { max_sweeps: sweeps }
        } else {
            ChiMode::Lagged
        };
        solver.mass = r.choice("mass", MassMatrix::Lumped, MassMatrix::parse, "\"lumped\", \"consistent\"", &mut errs);
        let d = NewtonSettings::default();
        solver.newton = NewtonSettings {
            abs_tol: r.quantity(&[("newton_abs_tol", 1.0)], false, &mut errs).unwrap_or(d.abs_tol),
            rel_tol: r.quantity(&[("newton_rel_tol", 1.0)], false, &mut errs).unwrap_or(d.rel_tol),
            max_iter: r.count("newton_max_iter", false, &mut errs).unwrap_or(d.max_iter),
            damping: r.quantity(&[("newton_damping", 1.0)], false, &mut errs).unwrap_or(d.damping),
        };
        errs.extend(solver.newton.violations().into_iter().map(|m| format!("solver: {m}")));
        r.finish(&mut errs);
    }

    let mut output = OutputConfig::default();
    if let Some(r) = root.sub("output", &mut errs) {
        match r.get("dir") {
            None => {}
            Some(Value::String(s)) => output.dir = PathBuf::from(s),
            Some(_) => errs.push("'output.dir' must be a string".into()),
        }
        output.vtk = r.boolean("vtk", true, &mut errs);
        let forms = [("probes_m", 1.0), ("probes_mm", MM)];
        let present: Vec<_> = forms.iter().filter(|(k, _)| r.table.contains_key(*k)).collect();
        if present.len() > 1 {
            errs.push("give only one of 'output.probes_m', 'output.probes_mm'".into());
        }
        for (k, factor) in forms {
            if let Some(v) = r.get(k) {
                match v.as_array() {
                    Some(items) => {
                        for item in items {
                            if let Some(p) = r.point(item, k, factor, &mut errs) {
                                output.probes.push(p);
                            }
                        }
                    }
                    None => errs.push(format!("'output.{k}' must be an array of [x, y] pairs")),
                }
            }
        }
        output.profile_x_frac = r.quantity(&[("profile_x_frac", 1.0)], false, &mut errs).unwrap_or(0.5);
        if !(0.0..=1.0).contains(&output.profile_x_frac) {
            errs.push(format!("output.profile_x_frac = {} must lie in [0, 1]", output.profile_x_frac));
        }
        r.finish(&mut errs);
    }
    if let Some(m) = &mesh {
        for p in &output.probes {
            let tol = 1e-12 * m.lx.max(m.ly);
            if !(p.x >= -tol && p.x <= m.lx + tol && p.y >= -tol && p.y <= m.ly + tol) {
                errs.push(format!("output probe ({}, {}) m lies outside the domain", p.x, p.y));
            }
        }
    }

    let mut mms = MmsConfig::default();
    if let Some(r) = root.sub("mms", &mut errs) {
        match r.get("levels") {
            None => {}
            Some(Value::Array(items)) => {
                mms.levels = items
                    .iter()
                    .filter_map(|v| match v.as_integer() {
                        Some(i) if i >= 1 => Some(i as usize),
                        _ => {
                            errs.push(format!("'mms.levels' entries must be positive integers, got {v}"));
                            None
                        }
                    })
                    .collect();
            }
            Some(_) => errs.push("'mms.levels' must be an array of integers".into()),
        }
        mms.dt = r.quantity(&[("dt_s", 1.0)], false, &mut errs).unwrap_or(mms.dt);
        mms.steps = r.count("steps", false, &mut errs).unwrap_or(mms.steps);
        r.finish(&mut errs);
    }
    if mms.levels.is_empty() {
        errs.push("mms.levels must not be empty".into());
    }
    if !(mms.dt > 0.0) {
        errs.push(format!("mms.dt_s = {} must be positive", mms.dt));
    }
    if mms.steps == 0 {
        errs.push("mms.steps must be at least 1".into());
    }
    root.finish(&mut errs);

    if let Some(case) = case {
        let need = |name: &str, present: bool, errs: &mut Vec<String>| {
            if !present {
                errs.push(format!("case '{}' requires a [{name}] table", case.as_str()));
            }
        };
        match case {
            Case::Mechanical => {
                need("mesh", table.contains_key("mesh"), &mut errs);
                need("time", table.contains_key("time"), &mut errs);
                need("fractions", table.contains_key("fractions"), &mut errs);
                need("mechanical", table.contains_key("mechanical"), &mut errs);
            }
            Case::Thermal => {
                need("mesh", table.contains_key("mesh"), &mut errs);
                need("time", table.contains_key("time"), &mut errs);
                need("fractions", table.contains_key("fractions"), &mut errs);
                need("thermal", table.contains_key("thermal"), &mut errs);
            }
            Case::MmsMechanical | Case::MmsThermal => {}
        }
    }
    if (mechanical.is_some() || thermal.is_some()) && !table.contains_key("fractions") {
        errs.push("material tables need a [fractions] table".into());
    }

    if !errs.is_empty() {
        return Err(ConfigError::Invalid(errs));
    }
    Ok(RunConfig {
        case: case.expect("case is checked above"),
        mesh,
        time,
        fractions,
        mechanical,
        thermal,
        solver,
        output,
        mms,
    })
}

/// TOML literal of a value, exact for floats.
fn lit(v: impl Into<Value>) -> String {
    v.into().to_string()
}

fn pair(p: Vec2) -> String {
    format!("[{}, {}]", lit(p.x), lit(p.y))
}

fn tag_list(tags: &BTreeSet<BoundaryTag>) -> String {
    let names: Vec<String> = tags.iter().map(|t| lit(t.as_str())).collect();
    format!("[{}]", names.join(", "))
}

/// Writes a configuration with SI keys; `parse_config` reads it back to an
/// equal value.
pub fn print_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let section = |s: &mut String, name: &str, entries: Vec<(&str, String)>| {
        let _ = writeln!(s, "\n[{name}]");
        for (k, v) in entries {
            let _ = writeln!(s, "{k} = {v}");
        }
    };
    let _ = writeln!(s, "case = {}", lit(cfg.case.as_str()));
    if let Some(m) = &cfg.mesh {
        section(&mut s, "mesh", vec![
            ("lx_m", lit(m.lx)),
            ("ly_m", lit(m.ly)),
            ("nx", lit(m.nx as i64)),
            ("ny", lit(m.ny as i64)),
            ("pattern", lit(m.pattern.as_str())),
        ]);
    }
    if let Some(t) = &cfg.time {
        section(&mut s, "time", vec![
            ("dt_s", lit(t.dt)),
            ("t_end_s", lit(t.t_end)),
            ("snapshot_interval_s", lit(t.snapshot_interval)),
        ]);
    }
    if let Some(f) = &cfg.fractions {
        section(&mut s, "fractions", vec![
            ("phi_s", lit(f.solid)),
            ("phi_g", lit(f.gas)),
            ("phi_f", lit(f.fiber)),
        ]);
    }
    if let Some(m) = &cfg.mechanical {
        let p = &m.params;
        section(&mut s, "mechanical", vec![
            ("lambda_s_pa", lit(p.lambda_s)),
            ("mu_s_pa", lit(p.mu_s)),
            ("lambda_f_pa", lit(p.lambda_f)),
            ("mu_f_pa", lit(p.mu_f)),
            ("gamma_s_pa_s_m2", lit(p.gamma_s)),
            ("gamma_f_pa_s_m2", lit(p.gamma_f)),
            ("chi_0_pa", lit(p.chi_0)),
            ("eps_strain", lit(p.eps_strain)),
            ("c0_per_pa", lit(p.c0)),
            ("k_m2", lit(p.k)),
        ]);
        let b = &m.bcs;
        let top = match b.top {
            TopLoad::Displacement(u) => ("top_displacement_m", pair(u)),
            TopLoad::Traction(t) => ("top_traction_pa", pair(t)),
        };
        section(&mut s, "mechanical.bcs", vec![
            top,
            ("ramp_time_s", lit(b.ramp_time)),
            ("fix_bottom", lit(b.fix_bottom)),
            ("lateral_rollers", lit(b.lateral_rollers)),
            ("drained", tag_list(&b.drained)),
            ("fiber", lit(b.fiber.as_str())),
        ]);
    }
    if let Some(t) = &cfg.thermal {
        let p = &t.params;
        section(&mut s, "thermal", vec![
            ("rho_s_kg_m3", lit(p.rho_s)),
            ("rho_g_kg_m3", lit(p.rho_g)),
            ("rho_f_kg_m3", lit(p.rho_f)),
            ("c_s_j_kgk", lit(p.c_s)),
            ("c_g_j_kgk", lit(p.c_g)),
            ("c_f_j_kgk", lit(p.c_f)),
            ("kappa_s_w_mk", lit(p.kappa_s)),
            ("kappa_f_w_mk", lit(p.kappa_f)),
            ("kappa_bg_w_mk", lit(p.kappa_bg)),
            ("l_g_m", lit(p.l_g)),
            ("beta", lit(p.beta)),
            ("h_sg_w_m3k3", lit(p.exchange.h_sg)),
            ("h_sf_w_m3k3", lit(p.exchange.h_sf)),
            ("h_gf_w_m3k3", lit(p.exchange.h_gf)),
            ("h_air_w_m2k", lit(p.h_air)),
            ("theta_hot_k", lit(p.theta_hot)),
            ("theta_cold_k", lit(p.theta_cold)),
        ]);
        section(&mut s, "thermal.pore_size", vec![
            ("base_m", lit(p.pore_size.base)),
            ("slope_x", lit(p.pore_size.slope_x)),
            ("slope_y", lit(p.pore_size.slope_y)),
        ]);
        section(&mut s, "thermal.bcs", vec![("hot", tag_list(&t.bcs.hot)), ("cold", tag_list(&t.bcs.cold))]);
    }
    let sv = &cfg.solver;
    let (mode, sweeps) = match sv.mech.chi_mode {
        ChiMode::Lagged => ("lagged", 10),
        ChiMode::FixedPoint { max_sweeps } => ("fixed-point", max_sweeps),
    };
    section(&mut s, "solver", vec![
        ("pressure_coupling", lit(sv.mech.pressure_coupling)),
        ("chi_mode", lit(mode)),
        ("chi_max_sweeps", lit(sweeps as i64)),
        ("mass", lit(sv.mass.as_str())),
        ("newton_abs_tol", lit(sv.newton.abs_tol)),
        ("newton_rel_tol", lit(sv.newton.rel_tol)),
        ("newton_max_iter", lit(sv.newton.max_iter as i64)),
        ("newton_damping", lit(sv.newton.damping)),
    ]);
    let o = &cfg.output;
    let probes: Vec<String> = o.probes.iter().map(|p| pair(*p)).collect();
    section(&mut s, "output", vec![
        ("dir", lit(o.dir.to_string_lossy().as_ref())),
        ("vtk", lit(o.vtk)),
        ("probes_m", format!("[{}]", probes.join(", "))),
        ("profile_x_frac", lit(o.profile_x_frac)),
    ]);
    let levels: Vec<String> = cfg.mms.levels.iter().map(|&l| lit(l as i64)).collect();
    section(&mut s, "mms", vec![
        ("levels", format!("[{}]", levels.join(", "))),
        ("dt_s", lit(cfg.mms.dt)),
        ("steps", lit(cfg.mms.steps as i64)),
    ]);
    s
}
