//! Parameter sweeps and the canonical figure datasets.
//!
//! A sweep evaluates a 1- or 2-axis linear grid over a base [`Config`]. Each
//! grid point is solved independently (numeric steady state, closed forms,
//! or both) on a bounded rayon pool, and the records are returned in grid
//! order whatever the execution order. Grid index `k` of a 2-axis sweep maps
//! to `(k / n2, k % n2)`: the first axis is the outer loop.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{
    bracket_factor, coherence_general, interference_intensity, normalizer,
    probe_modified_coherence, resonant_summary, switch_off_drives, two_level_transmission_weak,
    unit_alpha_probe,
};
use crate::error::{Error, Result};
use crate::liouvillian::Liouvillian;
use crate::model::{AtomParams, Config, DriveConfig, Rabi};
use crate::steady::solve_steady;
use crate::waveguide::{j_scale, to_na, total_field};

pub const MAX_AXIS_POINTS: usize = 1_000_000;
pub const MAX_TOTAL_POINTS: usize = 10_000_000;

/// A parameter a sweep axis can drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamPath {
    GammaPop31,
    GammaPop32,
    GammaPop21,
    GammaCoh12,
    GammaCoh13,
    GammaCoh23,
    Omega21,
    Omega32,
    LineImpedance,
    RabiMag(Line),
    RabiPhase(Line),
    Detuning31,
    Detuning32,
    /// Δ = −Δ32 with Δ31 = 0.
    Delta,
    /// |Ω31| = |Ω32| together.
    DriveMag,
    /// γ12 set to Γ21/2 + value.
    PureDephasing,
    /// θ21 chosen so that Θ = θ21 + θ32 − θ31 equals the value.
    LoopPhase,
}

/// One of the three driven transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Line {
    L31,
    L32,
    L21,
}

impl Line {
    fn tag(self) -> &'static str {
        match self {
            Line::L31 => "31",
            Line::L32 => "32",
            Line::L21 => "21",
        }
    }
}

impl ParamPath {
    pub fn path(&self) -> String {
        match self {
            ParamPath::GammaPop31 => "atom.gamma_pop_31".into(),
            ParamPath::GammaPop32 => "atom.gamma_pop_32".into(),
            ParamPath::GammaPop21 => "atom.gamma_pop_21".into(),
            ParamPath::GammaCoh12 => "atom.gamma_coh_12".into(),
            ParamPath::GammaCoh13 => "atom.gamma_coh_13".into(),
            ParamPath::GammaCoh23 => "atom.gamma_coh_23".into(),
            ParamPath::Omega21 => "atom.omega_21".into(),
            ParamPath::Omega32 => "atom.omega_32".into(),
            ParamPath::LineImpedance => "atom.line_impedance".into(),
            ParamPath::RabiMag(l) => format!("drives.rabi_{}.mag_mhz", l.tag()),
            ParamPath::RabiPhase(l) => format!("drives.rabi_{}.phase_rad", l.tag()),
            ParamPath::Detuning31 => "drives.detuning_31_mhz".into(),
            ParamPath::Detuning32 => "drives.detuning_32_mhz".into(),
            ParamPath::Delta => "delta_mhz".into(),
            ParamPath::DriveMag => "drive_mag_mhz".into(),
            ParamPath::PureDephasing => "pure_dephasing_mhz".into(),
            ParamPath::LoopPhase => "theta_rad".into(),
        }
    }

    /// Default CSV column name.
    pub fn column(&self) -> String {
        let p = self.path();
        p.strip_prefix("atom.")
            .or_else(|| p.strip_prefix("drives."))
            .unwrap_or(&p)
            .replace('.', "_")
    }

    pub fn apply(&self, config: &mut Config, value: f64) {
        let atom = &mut config.atom;
        let drives = &mut config.drives;
        match self {
            ParamPath::GammaPop31 => atom.gamma_pop_31 = value,
            ParamPath::GammaPop32 => atom.gamma_pop_32 = value,
            ParamPath::GammaPop21 => atom.gamma_pop_21 = value,
            ParamPath::GammaCoh12 => atom.gamma_coh_12 = value,
            ParamPath::GammaCoh13 => atom.gamma_coh_13 = value,
            ParamPath::GammaCoh23 => atom.gamma_coh_23 = value,
            ParamPath::Omega21 => atom.omega_21 = value,
            ParamPath::Omega32 => atom.omega_32 = value,
            ParamPath::LineImpedance => atom.line_impedance = value,
            ParamPath::RabiMag(l) => rabi_mut(drives, *l).mag_mhz = value,
            ParamPath::RabiPhase(l) => rabi_mut(drives, *l).phase_rad = value,
            ParamPath::Detuning31 => drives.detuning_31 = value,
            ParamPath::Detuning32 => drives.detuning_32 = value,
            ParamPath::Delta => *drives = drives.with_delta(value),
            ParamPath::DriveMag => {
                drives.rabi_31.mag_mhz = value;
                drives.rabi_32.mag_mhz = value;
            }
            ParamPath::PureDephasing => *atom = atom.with_pure_dephasing(value),
            ParamPath::LoopPhase => *drives = drives.with_loop_phase(value),
        }
    }
}

fn rabi_mut(drives: &mut DriveConfig, line: Line) -> &mut Rabi {
    match line {
        Line::L31 => &mut drives.rabi_31,
        Line::L32 => &mut drives.rabi_32,
        Line::L21 => &mut drives.rabi_21,
    }
}

impl FromStr for ParamPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let line = |t: &str| match t {
            "31" => Some(Line::L31),
            "32" => Some(Line::L32),
            "21" => Some(Line::L21),
            _ => None,
        };
        let parsed = match s {
            "atom.gamma_pop_31" => Some(ParamPath::GammaPop31),
            "atom.gamma_pop_32" => Some(ParamPath::GammaPop32),
            "atom.gamma_pop_21" => Some(ParamPath::GammaPop21),
            "atom.gamma_coh_12" => Some(ParamPath::GammaCoh12),
            "atom.gamma_coh_13" => Some(ParamPath::GammaCoh13),
            "atom.gamma_coh_23" => Some(ParamPath::GammaCoh23),
            "atom.omega_21" => Some(ParamPath::Omega21),
            "atom.omega_32" => Some(ParamPath::Omega32),
            "atom.line_impedance" => Some(ParamPath::LineImpedance),
            "drives.detuning_31_mhz" => Some(ParamPath::Detuning31),
            "drives.detuning_32_mhz" => Some(ParamPath::Detuning32),
            "delta_mhz" => Some(ParamPath::Delta),
            "drive_mag_mhz" => Some(ParamPath::DriveMag),
            "pure_dephasing_mhz" => Some(ParamPath::PureDephasing),
            "theta_rad" => Some(ParamPath::LoopPhase),
            other => other
                .strip_prefix("drives.rabi_")
                .and_then(|rest| rest.split_once('.'))
                .and_then(|(tag, field)| {
                    let l = line(tag)?;
                    match field {
                        "mag_mhz" => Some(ParamPath::RabiMag(l)),
                        "phase_rad" => Some(ParamPath::RabiPhase(l)),
                        _ => None,
                    }
                }),
        };
        parsed.ok_or_else(|| Error::InvalidConfig(format!("unknown parameter path \"{s}\"")))
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.path())
    }
}

impl Serialize for ParamPath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.path())
    }
}

impl<'de> Deserialize<'de> for ParamPath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub path: ParamPath,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// CSV column name; defaults to the parameter's own name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Axis {
    pub fn new(path: ParamPath, min: f64, max: f64, points: usize) -> Self {
        Self {
            path,
            min,
            max,
            points,
            label: None,
        }
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.path.column())
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.points <= 1 {
            self.min
        } else if k + 1 == self.points {
            self.max
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.points - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.value(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// |I_g| in nA.
    IgNa,
    /// |I_t| at x > 0 in nA.
    ItNa,
    /// |t|².
    T2,
    /// ρ11, ρ22, ρ33.
    Populations,
    /// Re and Im of ρ21.
    Rho21,
    Alpha,
    Theta,
}

impl Observable {
    fn base_columns(self) -> &'static [&'static str] {
        match self {
            Observable::IgNa => &["ig_na"],
            Observable::ItNa => &["it_na"],
            Observable::T2 => &["t2"],
            Observable::Populations => &["rho11", "rho22", "rho33"],
            Observable::Rho21 => &["rho21_re", "rho21_im"],
            Observable::Alpha => &["alpha"],
            Observable::Theta => &["theta"],
        }
    }

    /// α and Θ come from the configuration alone.
    fn method_free(self) -> bool {
        matches!(self, Observable::Alpha | Observable::Theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Numeric,
    Analytic,
    Both,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(Method::Numeric),
            "analytic" => Ok(Method::Analytic),
            "both" => Ok(Method::Both),
            _ => Err(Error::InvalidConfig(format!("unknown method \"{s}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: Config,
    pub axes: Vec<Axis>,
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub method: Method,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.axes.is_empty() || self.axes.len() > 2 {
            return bad(format!("expected 1 or 2 axes, got {}", self.axes.len()));
        }
        if self.observables.is_empty() {
            return bad("no observables requested".into());
        }
        let mut total: usize = 1;
        for axis in &self.axes {
            if !axis.min.is_finite() || !axis.max.is_finite() {
                return bad(format!("axis {} has non-finite bounds", axis.path));
            }
            if axis.points == 0 || axis.points > MAX_AXIS_POINTS {
                return bad(format!(
                    "axis {} has {} points (allowed 1..={MAX_AXIS_POINTS})",
                    axis.path, axis.points
                ));
            }
            if axis.points == 1 && axis.min != axis.max {
                return bad(format!("single-point axis {} needs min == max", axis.path));
            }
            total = total.saturating_mul(axis.points);
        }
        if total > MAX_TOTAL_POINTS {
            return bad(format!("{total} grid points exceed {MAX_TOTAL_POINTS}"));
        }
        if self.axes.len() == 2 && self.axes[0].path == self.axes[1].path {
            return bad("both axes drive the same parameter".into());
        }
        self.base.validate().into_result().map(|_| ())
    }

    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn columns(&self) -> Vec<String> {
        let mut cols = Vec::new();
        for obs in &self.observables {
            for base in obs.base_columns() {
                if obs.method_free() || self.method != Method::Both {
                    cols.push(base.to_string());
                } else {
                    cols.push(format!("{base}_numeric"));
                    cols.push(format!("{base}_analytic"));
                }
            }
        }
        cols
    }

    fn grid_coords(&self, k: usize) -> Vec<f64> {
        match self.axes.as_slice() {
            [a] => vec![a.value(k)],
            [a, b] => vec![a.value(k / b.points), b.value(k % b.points)],
            _ => unreachable!("validated axis count"),
        }
    }

    pub fn config_at(&self, coords: &[f64]) -> Config {
        let mut config = self.base;
        for (axis, &v) in self.axes.iter().zip(coords) {
            axis.path.apply(&mut config, v);
        }
        config
    }

    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("spec serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub coords: Vec<f64>,
    /// One entry per column; NaN where unavailable.
    pub values: Vec<f64>,
    pub error: Option<String>,
    /// Largest relative numeric/analytic difference over the observables
    /// where both exist (method `both` only).
    pub disagreement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub config_hash: String,
    pub code_version: String,
    pub timestamp_unix: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub axis_names: Vec<String>,
    pub columns: Vec<String>,
    pub records: Vec<PointRecord>,
    pub metadata: Metadata,
}

/// Evaluates `spec` on a pool of `threads` workers (0 = one per core).
pub fn run_sweep_with(spec: &SweepSpec, threads: usize) -> Result<SweepResult> {
    spec.validate()?;
    let n = spec.point_count();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let records: Vec<PointRecord> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|k| {
                let coords = spec.grid_coords(k);
                let config = spec.config_at(&coords);
                evaluate_point(&config, &spec.observables, spec.method, coords)
            })
            .collect()
    });
    Ok(SweepResult {
        axis_names: spec.axes.iter().map(Axis::name).collect(),
        columns: spec.columns(),
        records,
        metadata: Metadata {
            config_hash: spec.hash(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
        spec: spec.clone(),
    })
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, 0)
}

/// Numeric and closed-form values of every observable at one configuration.
struct PointValues {
    numeric: Vec<f64>,
    analytic: Vec<f64>,
}

fn evaluate_point(
    config: &Config,
    observables: &[Observable],
    method: Method,
    coords: Vec<f64>,
) -> PointRecord {
    let width: usize = observables
        .iter()
        .map(|o| {
            o.base_columns().len() * if o.method_free() || method != Method::Both { 1 } else { 2 }
        })
        .sum();
    match compute_point(config, observables) {
        Ok(pv) => {
            let mut values = Vec::with_capacity(width);
            let mut disagreement: Option<f64> = None;
            let mut idx = 0;
            for obs in observables {
                for _ in obs.base_columns() {
                    let (n, a) = (pv.numeric[idx], pv.analytic[idx]);
                    idx += 1;
                    if obs.method_free() {
                        values.push(n);
                        continue;
                    }
                    match method {
                        Method::Numeric => values.push(n),
                        Method::Analytic => values.push(a),
                        Method::Both => {
                            values.push(n);
                            values.push(a);
                            if n.is_finite() && a.is_finite() {
                                let rel = (n - a).abs() / n.abs().max(f64::MIN_POSITIVE);
                                let rel = if n == a { 0.0 } else { rel };
                                disagreement = Some(disagreement.map_or(rel, |d| d.max(rel)));
                            }
                        }
                    }
                }
            }
            PointRecord {
                coords,
                values,
                error: None,
                disagreement,
            }
        }
        Err(e) => PointRecord {
            coords,
            values: vec![f64::NAN; width],
            error: Some(e.to_string()),
            disagreement: None,
        },
    }
}

fn compute_point(config: &Config, observables: &[Observable]) -> Result<PointValues> {
    config.validate().into_result()?;
    let atom = &config.atom;
    let drives = &config.drives;
    let rho = solve_steady(&Liouvillian::new(atom, drives))?;
    let j = j_scale(atom);
    let field = total_field(atom, drives, rho.rho21());

    let strong_off = drives.rabi_31.is_off() && drives.rabi_32.is_off();
    let probe_on = drives.probe_on();

    let rho21_analytic = if !probe_on && drives.detuning_31 == 0.0 {
        coherence_general(atom, drives, &rho).ok()
    } else if probe_on && drives.is_resonant() {
        probe_modified_coherence(atom, drives).ok()
    } else {
        None
    };
    let t_analytic = if !probe_on {
        None
    } else if strong_off {
        Some(two_level_transmission_weak(atom, drives.detuning_21()).norm())
    } else if drives.is_resonant() {
        interference_intensity(atom, drives).ok().map(|i| i.factor)
    } else {
        None
    };
    let probe_scale = j * drives.rabi_21.mag_mhz / atom.gamma_pop_21;

    let mut numeric = Vec::new();
    let mut analytic = Vec::new();
    let nan = f64::NAN;
    for obs in observables {
        match obs {
            Observable::IgNa => {
                numeric.push(to_na(field.i_generated.norm()));
                analytic.push(rho21_analytic.map_or(nan, |r| to_na(j * r.norm())));
            }
            Observable::ItNa => {
                numeric.push(to_na(field.i_total_right.norm()));
                analytic.push(if probe_on {
                    t_analytic.map_or(nan, |t| to_na(probe_scale * t))
                } else {
                    rho21_analytic.map_or(nan, |r| to_na(j * r.norm()))
                });
            }
            Observable::T2 => {
                numeric.push(field.transmission_power().unwrap_or(nan));
                analytic.push(t_analytic.map_or(nan, |t| t * t));
            }
            Observable::Populations => {
                numeric.extend(rho.populations());
                match resonant_summary(atom, drives) {
                    Ok(s) => analytic.extend(s.populations()),
                    Err(_) => analytic.extend([nan; 3]),
                }
            }
            Observable::Rho21 => {
                numeric.extend([rho.rho21().re, rho.rho21().im]);
                match rho21_analytic {
                    Some(r) => analytic.extend([r.re, r.im]),
                    None => analytic.extend([nan; 2]),
                }
            }
            Observable::Alpha => {
                let alpha = if probe_on {
                    atom.gamma_pop_21
                        * atom.gamma_pop_32
                        * drives.rabi_31.mag_mhz
                        * drives.rabi_32.mag_mhz
                        / (normalizer(atom, drives) * drives.rabi_21.mag_mhz)
                } else {
                    nan
                };
                numeric.push(alpha);
                analytic.push(alpha);
            }
            Observable::Theta => {
                numeric.push(drives.loop_phase());
                analytic.push(drives.loop_phase());
            }
        }
    }
    Ok(PointValues { numeric, analytic })
}

/// Formats a value for CSV output: 17 significant digits, scientific.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

impl SweepResult {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn failed_points(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn max_disagreement(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| r.disagreement)
            .reduce(f64::max)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column_index(name)?;
        Some(self.records.iter().map(|r| r.values[k]).collect())
    }

    pub fn axis_values(&self, axis: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.coords[axis]).collect()
    }

    pub fn rename_column(&mut self, from: &str, to: &str) {
        if let Some(k) = self.column_index(from) {
            self.columns[k] = to.to_string();
        }
    }

    /// Appends the columns of `other`, which must share the same grid.
    pub fn merge_columns(&mut self, other: &SweepResult) {
        assert_eq!(self.records.len(), other.records.len(), "grid mismatch");
        self.columns.extend(other.columns.iter().cloned());
        for (mine, theirs) in self.records.iter_mut().zip(&other.records) {
            debug_assert_eq!(mine.coords, theirs.coords);
            mine.values.extend(&theirs.values);
            if mine.error.is_none() {
                mine.error = theirs.error.clone();
            }
        }
    }

    /// Adds a column computed from each record's configuration.
    pub fn push_column(&mut self, name: &str, f: impl Fn(&Config) -> f64) {
        self.columns.push(name.to_string());
        for rec in &mut self.records {
            let config = self.spec.config_at(&rec.coords);
            rec.values.push(f(&config));
        }
    }

    /// CSV: header of axis names then columns; an `error` column is added
    /// only when some point failed.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let with_errors = self.failed_points() > 0;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let io = |e: csv::Error| Error::InvalidConfig(format!("csv write: {e}"));
        let mut header: Vec<String> = self.axis_names.clone();
        header.extend(self.columns.iter().cloned());
        if with_errors {
            header.push("error".into());
        }
        w.write_record(&header).map_err(io)?;
        for rec in &self.records {
            let mut row: Vec<String> = rec.coords.iter().map(|v| format_value(*v)).collect();
            row.extend(rec.values.iter().map(|v| format_value(*v)));
            if with_errors {
                row.push(rec.error.clone().unwrap_or_default());
            }
            w.write_record(&row).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidConfig(format!("csv write: {e}")))?;
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "spec": self.spec,
            "metadata": self.metadata,
            "axes": self.axis_names,
            "columns": self.columns,
            "points": self.records.len(),
            "failed_points": self.failed_points(),
            "max_method_disagreement": self.max_disagreement(),
        })
    }

    /// Writes `<stem>.csv` and `<stem>.meta.json` into `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> std::io::Result<(PathBuf, PathBuf)> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let meta_path = dir.join(format!("{stem}.meta.json"));
        let file = std::fs::File::create(&csv_path)?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        let meta = serde_json::to_string_pretty(&self.sidecar()).map_err(std::io::Error::other)?;
        std::fs::write(&meta_path, meta + "\n")?;
        Ok((csv_path, meta_path))
    }
}

/// Datasets behind each reproduced figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    /// Emission spectrum |I_g|(Δ).
    Fig3a,
    /// |I_g| against the common drive strength at Δ = 0.
    Fig3b,
    /// Spectrum with and without the switch-off probe.
    Fig4a,
    /// |I_t| over probe magnitude and loop phase at Δ = 0.
    Fig4b,
    /// Undriven |t|² against pure dephasing.
    Fig5a,
    /// |t|²(Δ), undriven and driven.
    Fig5b,
    /// |t|² against |Ω32| at Δ = 0 (single-atom switch).
    Fig5bInset,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [
        FigureId::Fig3a,
        FigureId::Fig3b,
        FigureId::Fig4a,
        FigureId::Fig4b,
        FigureId::Fig5a,
        FigureId::Fig5b,
        FigureId::Fig5bInset,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FigureId::Fig3a => "3a",
            FigureId::Fig3b => "3b",
            FigureId::Fig4a => "4a",
            FigureId::Fig4b => "4b",
            FigureId::Fig5a => "5a",
            FigureId::Fig5b => "5b",
            FigureId::Fig5bInset => "5b-inset",
        }
    }

    /// Default grid sizes, one per axis.
    pub fn default_points(&self) -> Vec<usize> {
        match self {
            FigureId::Fig3a | FigureId::Fig4a | FigureId::Fig5b => vec![1001],
            FigureId::Fig3b => vec![301],
            FigureId::Fig4b => vec![101, 121],
            FigureId::Fig5a => vec![101],
            FigureId::Fig5bInset => vec![351],
        }
    }
}

impl FromStr for FigureId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown figure \"{s}\"")))
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Probe magnitude used in the undriven dephasing scan, MHz.
pub const FIG5A_PROBE_MHZ: f64 = 1.78;

/// The sweep behind `3a` (also usable directly with [`run_sweep`]).
pub fn fig3a_spec(points: usize) -> SweepSpec {
    SweepSpec {
        base: Config::reference(),
        axes: vec![Axis::new(ParamPath::Delta, -100.0, 100.0, points)],
        observables: vec![Observable::IgNa],
        method: Method::Both,
    }
}

fn switch_off_config() -> Config {
    let atom = AtomParams::reference();
    Config {
        atom,
        drives: switch_off_drives(&atom, &DriveConfig::reference()),
    }
}

pub fn figure(id: FigureId) -> Result<SweepResult> {
    figure_with(id, &id.default_points(), 0)
}

/// Builds the dataset for `id` with the given per-axis point counts.
pub fn figure_with(id: FigureId, points: &[usize], threads: usize) -> Result<SweepResult> {
    let expected = id.default_points().len();
    if points.len() != expected {
        return Err(Error::InvalidConfig(format!(
            "figure {id} has {expected} axes, got {} point counts",
            points.len()
        )));
    }
    let reference = Config::reference();
    let run = |spec: SweepSpec| run_sweep_with(&spec, threads);

    let result = match id {
        FigureId::Fig3a => run(fig3a_spec(points[0]))?,
        FigureId::Fig3b => {
            let mut r = run(SweepSpec {
                base: reference,
                axes: vec![Axis::new(ParamPath::DriveMag, 0.0, 300.0, points[0]).labeled("omega_mhz")],
                observables: vec![Observable::IgNa],
                method: Method::Both,
            })?;
            // Γ32 |Ω31||Ω32| / A, the resonant closed form
            r.push_column("ig_na_closed_form", |c| {
                resonant_summary(&c.atom, &c.drives)
                    .map(|s| to_na(j_scale(&c.atom) * s.rho21.norm()))
                    .unwrap_or(f64::NAN)
            });
            r
        }
        FigureId::Fig4a => {
            let axis = Axis::new(ParamPath::Delta, -100.0, 100.0, points[0]);
            let mut with_probe = run(SweepSpec {
                base: switch_off_config(),
                axes: vec![axis.clone()],
                observables: vec![Observable::ItNa],
                method: Method::Numeric,
            })?;
            with_probe.rename_column("it_na", "it_na_probe");
            let mut no_probe = run(SweepSpec {
                base: reference,
                axes: vec![axis],
                observables: vec![Observable::IgNa],
                method: Method::Numeric,
            })?;
            no_probe.rename_column("ig_na", "ig_na_no_probe");
            with_probe.merge_columns(&no_probe);
            with_probe
        }
        FigureId::Fig4b => {
            let base = switch_off_config();
            run(SweepSpec {
                base,
                axes: vec![
                    Axis::new(ParamPath::RabiMag(Line::L21), 0.0, 5.0, points[0]).labeled("omega21_mhz"),
                    Axis::new(ParamPath::LoopPhase, 0.0, TAU, points[1]),
                ],
                observables: vec![Observable::ItNa],
                method: Method::Numeric,
            })?
        }
        FigureId::Fig5a => {
            let base = Config {
                atom: AtomParams::reference(),
                drives: DriveConfig::off().with_probe(Rabi::real(FIG5A_PROBE_MHZ)),
            };
            run(SweepSpec {
                base,
                axes: vec![Axis::new(ParamPath::PureDephasing, 0.0, 25.0, points[0]).labeled("dephasing_mhz")],
                observables: vec![Observable::T2],
                method: Method::Both,
            })?
        }
        FigureId::Fig5b => {
            let driven = switch_off_config();
            let undriven = Config {
                atom: driven.atom,
                drives: DriveConfig::off().with_probe(driven.drives.rabi_21),
            };
            let axis = Axis::new(ParamPath::Delta, -100.0, 100.0, points[0]);
            let mut r = run(SweepSpec {
                base: undriven,
                axes: vec![axis.clone()],
                observables: vec![Observable::T2],
                method: Method::Numeric,
            })?;
            r.rename_column("t2", "t2_undriven");
            let mut d = run(SweepSpec {
                base: driven,
                axes: vec![axis],
                observables: vec![Observable::T2],
                method: Method::Numeric,
            })?;
            d.rename_column("t2", "t2_driven");
            r.merge_columns(&d);
            r
        }
        FigureId::Fig5bInset => run(SweepSpec {
            base: switch_off_config(),
            axes: vec![Axis::new(ParamPath::RabiMag(Line::L32), 0.0, 35.0, points[0]).labeled("omega32_mhz")],
            observables: vec![Observable::T2],
            method: Method::Numeric,
        })?,
    };
    Ok(result)
}

/// Extremes of one output column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSummary {
    pub column: String,
    pub min: f64,
    pub min_at: Vec<f64>,
    pub max: f64,
    pub max_at: Vec<f64>,
}

pub fn summarize(result: &SweepResult) -> Vec<ColumnSummary> {
    result
        .columns
        .iter()
        .enumerate()
        .filter_map(|(k, name)| {
            let finite = result
                .records
                .iter()
                .filter(|r| r.values[k].is_finite());
            let min = finite.clone().min_by(|a, b| a.values[k].total_cmp(&b.values[k]))?;
            let max = finite.max_by(|a, b| a.values[k].total_cmp(&b.values[k]))?;
            Some(ColumnSummary {
                column: name.clone(),
                min: min.values[k],
                min_at: min.coords.clone(),
                max: max.values[k],
                max_at: max.coords.clone(),
            })
        })
        .collect()
}

/// Index of the grid value nearest `target`.
pub fn nearest_index(values: &[f64], target: f64) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .map(|(k, _)| k)
        .unwrap_or(0)
}

/// Convenience: the α = 1 probe magnitude for the reference drives, MHz.
pub fn reference_unit_alpha_probe() -> f64 {
    unit_alpha_probe(&AtomParams::reference(), &DriveConfig::reference())
}

/// Θ at which the switch-off probe is applied.
pub const SWITCH_OFF_THETA: f64 = FRAC_PI_2;

/// Resonant α and the bracket factor for a probe magnitude and loop phase
/// on top of the reference drives.
pub fn reference_bracket(probe_mhz: f64, theta: f64) -> f64 {
    let atom = AtomParams::reference();
    let drives = DriveConfig::reference()
        .with_probe(Rabi::real(probe_mhz))
        .with_loop_phase(theta);
    match interference_intensity(&atom, &drives) {
        Ok(i) => i.factor,
        Err(_) => bracket_factor(0.0, theta),
    }
}
