//! Command-line driver: run configuration, presets, curve sweeps,
//! representation comparison and the effective-medium table.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::aggregate::{f_cold_sum, f_hot_sum, AggregateSpec, CorrectionValue};
use crate::effmed::{correction_eff, eps_eff, EffMedSpec, Prescription};
use crate::error::Error;
use crate::intrep::{correction_int, f_cold_int, f_hot_int, Method};
use crate::mie::SphereSpec;
use crate::physics::{correction, rates, DipoleWeights, Representation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;
pub const EXIT_SELFCHECK: i32 = 5;

/// Relative agreement required by `compare`.
pub const COMPARE_TOL: f64 = 1e-6;
/// Floor of the denominator in relative deviations.
pub const COMPARE_FLOOR: f64 = 1e-3;

pub const CSV_HEADER: &str =
    "zeta,F_c_par,F_c_perp,F_d_par,F_d_perp,F_r_par,F_r_perp,F_tot_par,F_tot_perp,gamma_ratio,gamma_abs_ratio";

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Convergence { .. } | Error::LmaxCap { .. } | Error::Quadrature { .. } => EXIT_CONVERGENCE,
            _ => EXIT_CONFIG,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepChoice {
    Sum,
    Integral,
    Both,
}

impl FromStr for RepChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sum" => Ok(RepChoice::Sum),
            "integral" => Ok(RepChoice::Integral),
            "both" => Ok(RepChoice::Both),
            _ => Err(format!("unknown representation '{s}' (sum|integral|both)")),
        }
    }
}

impl RepChoice {
    fn name(self) -> &'static str {
        match self {
            RepChoice::Sum => "sum",
            RepChoice::Integral => "integral",
            RepChoice::Both => "both",
        }
    }
}

pub fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "closed" => Ok(Method::Closed),
        "quadrature" => Ok(Method::Quadrature),
        _ => Err(format!("unknown method '{s}' (closed|quadrature)")),
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Closed => "closed",
        Method::Quadrature => "quadrature",
    }
}

pub fn parse_prescription(s: &str) -> Result<Prescription, String> {
    match s {
        "dipole" | "dipole_amplitude" => Ok(Prescription::DipoleAmplitude),
        "mg" | "maxwell_garnett" => Ok(Prescription::MaxwellGarnett),
        _ => Err(format!("unknown prescription '{s}' (dipole|mg)")),
    }
}

fn prescription_name(p: Prescription) -> &'static str {
    match p {
        Prescription::DipoleAmplitude => "dipole",
        Prescription::MaxwellGarnett => "mg",
    }
}

/// Parses a real number; `inf` selects cold scatterers for `beta_hw`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "infinity" | "cold" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|e| format!("'{t}': {e}")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rho: f64,
    pub q: f64,
    pub eps_re: f64,
    pub eps_im: f64,
    pub f: f64,
    /// Infinite for cold scatterers.
    pub beta_hw: f64,
    /// `None` places the grid start at `rho + q + 0.1`.
    pub zeta_min: Option<f64>,
    pub zeta_max: f64,
    pub points: usize,
    /// 0 selects the order automatically.
    pub lmax: usize,
    pub rep: RepChoice,
    pub method: Method,
    pub prescription: Prescription,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rho: 6.0,
            q: 0.5,
            eps_re: 3.0,
            eps_im: 0.5,
            f: 0.01,
            beta_hw: f64::INFINITY,
            zeta_min: None,
            zeta_max: 30.0,
            points: 400,
            lmax: 0,
            rep: RepChoice::Integral,
            method: Method::Closed,
            prescription: Prescription::DipoleAmplitude,
            out: None,
        }
    }
}

pub const PRESETS: [&str; 7] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7"];

/// Figure parameters: `(eps_im, beta_hw)` on top of `kR = 6`, `ka = 0.5`,
/// `eps_re = 3`.
fn preset_values(name: &str) -> Option<(f64, f64)> {
    Some(match name {
        "fig1" | "fig5" => (0.5, f64::INFINITY),
        "fig2" | "fig7" => (0.1, f64::INFINITY),
        "fig3" => (0.01, f64::INFINITY),
        "fig4" | "fig6" => (0.5, 1.0),
        _ => return None,
    })
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self, CliError> {
        let (eps_im, beta_hw) = preset_values(name)
            .ok_or_else(|| CliError::config(format!("unknown preset '{name}' (fig1..fig7)")))?;
        Ok(RunConfig {
            rho: 6.0,
            q: 0.5,
            eps_re: 3.0,
            eps_im,
            beta_hw,
            ..RunConfig::default()
        })
    }

    pub fn zeta_start(&self) -> f64 {
        self.zeta_min.unwrap_or(self.rho + self.q + 0.1)
    }

    pub fn sphere(&self) -> Result<SphereSpec, CliError> {
        Ok(SphereSpec::new(self.q, Complex64::new(self.eps_re, self.eps_im))?)
    }

    pub fn aggregate(&self) -> Result<AggregateSpec, CliError> {
        Ok(AggregateSpec::new(self.rho, self.sphere()?, self.f, self.beta_hw)?)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let zmin = self.zeta_start();
        if !(zmin > self.rho + self.q) {
            return Err(CliError::config(format!(
                "zeta_min = {zmin} must exceed rho + q = {}",
                self.rho + self.q
            )));
        }
        if !(self.zeta_max >= zmin) || !self.zeta_max.is_finite() {
            return Err(CliError::config(format!("zeta_max = {} must be >= zeta_min = {zmin}", self.zeta_max)));
        }
        if self.points < 2 {
            return Err(CliError::config(format!("points = {} must be >= 2", self.points)));
        }
        if !(self.eps_im >= 0.0) {
            return Err(CliError::config(format!("eps_im = {} must be >= 0", self.eps_im)));
        }
        if !(self.beta_hw > 0.0) {
            return Err(CliError::config(format!("beta_hw = {} must be positive or inf", self.beta_hw)));
        }
        self.aggregate()?;
        Ok(())
    }

    /// Linear grid of `points` values.
    pub fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.zeta_start(), self.zeta_max);
        let n = self.points;
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        let bad = |e: String| CliError::config(format!("{key}: {e}"));
        let real = || parse_real(v).map_err(bad);
        let count = || v.parse::<usize>().map_err(|e| bad(e.to_string()));
        match key.trim().replace('-', "_").as_str() {
            "preset" => {
                let out = self.out.take();
                *self = RunConfig::preset(v)?;
                self.out = out;
            }
            "rho" => self.rho = real()?,
            "q" => self.q = real()?,
            "eps_re" => self.eps_re = real()?,
            "eps_im" => self.eps_im = real()?,
            "f" => self.f = real()?,
            "beta_hw" => self.beta_hw = real()?,
            "zeta_min" => self.zeta_min = if v == "auto" { None } else { Some(real()?) },
            "zeta_max" => self.zeta_max = real()?,
            "points" => self.points = count()?,
            "lmax" => self.lmax = count()?,
            "rep" | "representation" => self.rep = v.parse().map_err(bad)?,
            "method" => self.method = parse_method(v).map_err(bad)?,
            "prescription" => self.prescription = parse_prescription(v).map_err(bad)?,
            "out" | "output_path" => self.out = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            k => return Err(CliError::config(format!("unknown configuration key '{k}'"))),
        }
        Ok(())
    }

    /// Applies a configuration text of `key = value` lines with `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        // a preset resets everything, so it is applied first
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected 'key = value'", n + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        pairs.sort_by_key(|(k, _)| k != "preset");
        for (k, v) in pairs {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    /// Preset (from `preset`, else from the text), then the remaining
    /// settings of `text`.
    pub fn apply_layers(&mut self, preset: Option<&str>, text: &str) -> Result<(), CliError> {
        match preset {
            Some(p) => {
                self.set("preset", p)?;
                let rest: String = text
                    .lines()
                    .filter(|l| l.split(['#', '=']).next().unwrap_or("").trim() != "preset")
                    .map(|l| format!("{l}\n"))
                    .collect();
                self.apply_text(&rest)
            }
            None => self.apply_text(text),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c = RunConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn serialize(&self) -> String {
        let r = |x: f64| if x.is_infinite() { "inf".to_string() } else { format!("{x}") };
        let mut s = String::new();
        let _ = writeln!(s, "rho = {}", r(self.rho));
        let _ = writeln!(s, "q = {}", r(self.q));
        let _ = writeln!(s, "eps_re = {}", r(self.eps_re));
        let _ = writeln!(s, "eps_im = {}", r(self.eps_im));
        let _ = writeln!(s, "f = {}", r(self.f));
        let _ = writeln!(s, "beta_hw = {}", r(self.beta_hw));
        let _ = writeln!(s, "zeta_min = {}", self.zeta_min.map_or("auto".to_string(), r));
        let _ = writeln!(s, "zeta_max = {}", r(self.zeta_max));
        let _ = writeln!(s, "points = {}", self.points);
        let _ = writeln!(s, "lmax = {}", self.lmax);
        let _ = writeln!(s, "rep = {}", self.rep.name());
        let _ = writeln!(s, "method = {}", method_name(self.method));
        let _ = writeln!(s, "prescription = {}", prescription_name(self.prescription));
        if let Some(p) = &self.out {
            let _ = writeln!(s, "out = {}", p.display());
        }
        s
    }
}

/// Number with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn csv_line(values: &[f64]) -> String {
    let mut s = values.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

/// Correction functions under the configured representation and order.
fn evaluate(spec: &AggregateSpec, zeta: f64, lmax: usize, rep: Representation, method: Method) -> Result<CorrectionValue, CliError> {
    if lmax == 0 {
        return Ok(match (rep, method) {
            (Representation::Integral, m) => correction_int(spec, zeta, m)?.0,
            (r, _) => correction(spec, zeta, r)?,
        });
    }
    let ((cp, ct), (dp, dt)) = match rep {
        Representation::Sum => (f_cold_sum(spec, zeta, lmax)?.0, f_hot_sum(spec, zeta, lmax)?.0),
        Representation::Integral => (f_cold_int(spec, zeta, lmax, method)?, f_hot_int(spec, zeta, lmax, method)?),
    };
    Ok(CorrectionValue {
        zeta,
        f_c_par: cp,
        f_c_perp: ct,
        f_d_par: dp,
        f_d_perp: dt,
    })
}

fn parallel_map<T, F>(grid: &[f64], f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(f64) -> Result<T, CliError> + Sync + Send,
{
    let threads = std::env::var("SCATDECAY_THREADS").ok().and_then(|s| s.parse::<usize>().ok());
    let at = |z: f64| {
        f(z).map_err(|mut e| {
            if e.code == EXIT_CONVERGENCE {
                e.message = format!("at zeta = {z}: {}", e.message);
            }
            e
        })
    };
    let run = || grid.par_iter().map(|&z| at(z)).collect::<Result<Vec<T>, CliError>>();
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config(e.to_string()))?
            .install(run),
        _ => run(),
    }
}

/// CSV text of the curve sweep.
pub fn cmd_curve(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.validate()?;
    let spec = cfg.aggregate()?;
    let rep = match cfg.rep {
        RepChoice::Sum => Representation::Sum,
        _ => Representation::Integral,
    };
    let rows = parallel_map(&cfg.grid(), |z| {
        let cv = evaluate(&spec, z, cfg.lmax, rep, cfg.method)?;
        let r = rates(&spec, DipoleWeights::ISOTROPIC, &cv)?;
        Ok(csv_line(&[
            z,
            cv.f_c_par,
            cv.f_c_perp,
            cv.f_d_par,
            cv.f_d_perp,
            r.f_r_par,
            r.f_r_perp,
            r.f_total_par,
            r.f_total_perp,
            r.gamma_over_gamma0,
            r.gamma_abs_over_gamma0,
        ]))
    })?;
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    s.extend(rows);
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    /// Largest relative deviation per function
    /// `(F_c_par, F_c_perp, F_d_par, F_d_perp)`.
    pub max_dev: [f64; 4],
    pub worst_zeta: [f64; 4],
    pub points: usize,
}

impl CompareReport {
    pub fn worst(&self) -> f64 {
        self.max_dev.iter().cloned().fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.worst() < COMPARE_TOL
    }

    pub fn render(&self) -> String {
        let names = ["F_c_par", "F_c_perp", "F_d_par", "F_d_perp"];
        let mut s = format!("points: {}\n", self.points);
        for i in 0..4 {
            let _ = writeln!(s, "{}: max relative deviation {:.3e} at zeta = {}", names[i], self.max_dev[i], self.worst_zeta[i]);
        }
        let par = self.max_dev[0].max(self.max_dev[2]);
        let perp = self.max_dev[1].max(self.max_dev[3]);
        let _ = writeln!(s, "par: {par:.3e}\nperp: {perp:.3e}");
        let _ = writeln!(
            s,
            "{}: worst {:.3e} (tolerance {COMPARE_TOL:e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.worst()
        );
        s
    }
}

/// Relative deviation with the denominator floored at `COMPARE_FLOOR`.
pub fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(COMPARE_FLOOR)
}

/// Triple sum (at `--lmax` if given) against the integral representation
/// at its automatic order.
pub fn cmd_compare(cfg: &RunConfig) -> Result<CompareReport, CliError> {
    cfg.validate()?;
    let spec = cfg.aggregate()?;
    let rows = parallel_map(&cfg.grid(), |z| {
        let a = evaluate(&spec, z, cfg.lmax, Representation::Sum, cfg.method)?;
        let b = evaluate(&spec, z, 0, Representation::Integral, cfg.method)?;
        Ok((
            z,
            [
                rel_dev(a.f_c_par, b.f_c_par),
                rel_dev(a.f_c_perp, b.f_c_perp),
                rel_dev(a.f_d_par, b.f_d_par),
                rel_dev(a.f_d_perp, b.f_d_perp),
            ],
        ))
    })?;
    let mut rep = CompareReport {
        max_dev: [0.0; 4],
        worst_zeta: [f64::NAN; 4],
        points: rows.len(),
    };
    for (z, d) in rows {
        for i in 0..4 {
            if !(d[i] <= rep.max_dev[i]) {
                rep.max_dev[i] = d[i];
                rep.worst_zeta[i] = z;
            }
        }
    }
    Ok(rep)
}

pub const EFFMED_HEADER: &str = "zeta,eps_eff_re,eps_eff_im,F_c_par,F_c_perp,F_d_par,F_d_perp,F_r_par,F_r_perp,\
Feff_c_par,Feff_c_perp,Feff_d_par,Feff_d_perp,Feff_r_par,Feff_r_perp,\
ratio_c_par,ratio_c_perp,ratio_d_par,ratio_d_perp,ratio_r_par,ratio_r_perp";

/// CSV comparing discrete scatterers and the effective medium; ratios are
/// effective over discrete.
pub fn cmd_effmed(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.validate()?;
    let spec = cfg.aggregate()?;
    let em = EffMedSpec::from_aggregate(&spec, cfg.prescription);
    let ee = eps_eff(&em)?;
    if let Some(w) = em.contrast_warning() {
        eprintln!("warning: {w}");
    }
    let rows = parallel_map(&cfg.grid(), |z| {
        let d = evaluate(&spec, z, cfg.lmax, Representation::Integral, cfg.method)?;
        let e = correction_eff(&em, z)?;
        let six = |c: &CorrectionValue| {
            [
                c.f_c_par,
                c.f_c_perp,
                c.f_d_par,
                c.f_d_perp,
                c.f_c_par - c.f_d_par,
                c.f_c_perp - c.f_d_perp,
            ]
        };
        let (a, b) = (six(&d), six(&e));
        let mut v = vec![z, ee.re, ee.im];
        v.extend(a);
        v.extend(b);
        v.extend((0..6).map(|i| b[i] / a[i]));
        Ok(csv_line(&v))
    })?;
    let mut s = String::from(EFFMED_HEADER);
    s.push('\n');
    s.extend(rows);
    Ok(s)
}
