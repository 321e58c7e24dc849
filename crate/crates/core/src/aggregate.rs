//! Triple-sum representation of the correction functions for a spherical
//! aggregate of scatterers, built from the multipole addition theorem.
//!
//! All lengths are scaled by the wavenumber: `rho = kR`, `zeta = kr`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mie::{minus_i_pow, MultipoleTable, Pol, SphereSpec, LMAX_CAP};
use crate::specfun::{sph_bessel_j_scaled, sph_hankel1_scaled, wigner3j_110, Scaled};

/// Upper bound on the observation order `l'` in the triple sum.
pub const LP_CAP: usize = 6000;

/// Filling fraction above which the dilute approximation is flagged.
pub const DILUTE_WARN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateSpec {
    pub rho: f64,
    pub sphere: SphereSpec,
    /// Filling fraction of the spherical domain.
    pub f: f64,
    /// `beta hbar omega`; infinite for cold scatterers.
    pub beta_hw: f64,
}

impl AggregateSpec {
    pub fn new(rho: f64, sphere: SphereSpec, f: f64, beta_hw: f64) -> Result<Self> {
        let s = AggregateSpec { rho, sphere, f, beta_hw };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.sphere.validate()?;
        if !(self.rho > self.sphere.q) || !self.rho.is_finite() {
            return Err(Error::Invalid(format!(
                "domain radius rho = {} must exceed the sphere size q = {}",
                self.rho, self.sphere.q
            )));
        }
        if !(0.0..=0.2).contains(&self.f) {
            return Err(Error::Invalid(format!("filling fraction f = {} outside [0, 0.2]", self.f)));
        }
        if !(self.beta_hw >= 0.0) {
            return Err(Error::Invalid(format!("beta*hbar*omega = {} must be >= 0", self.beta_hw)));
        }
        Ok(())
    }

    /// Warning text when the filling fraction leaves the dilute regime.
    pub fn dilute_warning(&self) -> Option<String> {
        (self.f > DILUTE_WARN).then(|| format!("filling fraction {} exceeds {DILUTE_WARN}; dilute approximation questionable", self.f))
    }

    pub fn is_cold(&self) -> bool {
        self.beta_hw.is_infinite()
    }
}

/// Correction functions at one radial position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionValue {
    pub zeta: f64,
    pub f_c_par: f64,
    pub f_c_perp: f64,
    pub f_d_par: f64,
    pub f_d_perp: f64,
}

/// Truncation record of a series evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SumDiagnostics {
    pub l_max: usize,
    pub lp_max: usize,
    /// Largest of the last amplitude row and the last observation shell,
    /// relative to the sum of absolute term values.
    pub tail: f64,
    pub warning: Option<String>,
}

/// Threshold on the relative last-shell contribution above which a
/// truncation warning is raised.
pub const SHELL_WARN: f64 = 1e-8;

/// `ln(k^3 I_l(R))` for `l = 0..=lmax`, where
/// `k^3 I_l = rho^3 (j_l^2 + j_{l+1}^2)/2 - (2l+1) rho^2 j_l j_{l+1}/2`.
pub fn ln_i_l_of_r_seq(lmax: usize, rho: f64) -> Result<Vec<f64>> {
    if !(rho > 0.0) {
        return Err(Error::Invalid(format!("rho = {rho} must be positive")));
    }
    let j = sph_bessel_j_scaled(lmax + 1, Complex64::new(rho, 0.0))?;
    let mut out = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        if j[l].is_zero() {
            out.push(f64::NEG_INFINITY);
            continue;
        }
        let r = (j[l + 1] / j[l]).value().re;
        let lf = l as f64;
        let bracket = rho * (1.0 + r * r) - (2.0 * lf + 1.0) * r;
        let ln_j2 = 2.0 * j[l].ln_abs();
        if bracket > 0.0 {
            out.push(0.5f64.ln() + 2.0 * rho.ln() + ln_j2 + bracket.ln());
        } else {
            out.push(f64::NEG_INFINITY);
        }
    }
    Ok(out)
}

/// `k^3 I_l(R) = int_0^rho t^2 j_l(t)^2 dt`.
pub fn i_l_of_r(l: usize, rho: f64) -> Result<f64> {
    Ok(ln_i_l_of_r_seq(l, rho)?[l].exp())
}

/// `c_{l,l',l''}(R) = (2l'+1)(2l''+1) I_{l''}(R) (l l' l''; 1 -1 0)^2`.
pub fn c_coeff(l: usize, lp: usize, lpp: usize, rho: f64) -> Result<f64> {
    let w = wigner3j_110(l, lp, lpp);
    if w == 0.0 {
        return Ok(0.0);
    }
    Ok(((2 * lp + 1) * (2 * lpp + 1)) as f64 * i_l_of_r(lpp, rho)? * w * w)
}

/// Parity-split coefficient sums for one `(l, l')` pair, as logarithms:
/// `S^e = sum_{l'' : l+l'+l'' even} c_{l,l',l''}` and `S^o` likewise.
fn ln_s_pair(l: usize, lp: usize, ln_i: &[f64]) -> (f64, f64) {
    let lo = l.abs_diff(lp);
    let hi = l + lp;
    let mut parts: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for lpp in lo..=hi {
        let w = wigner3j_110(l, lp, lpp);
        if w == 0.0 || ln_i[lpp] == f64::NEG_INFINITY {
            continue;
        }
        let ln_c = (((2 * lp + 1) * (2 * lpp + 1)) as f64).ln() + ln_i[lpp] + 2.0 * w.abs().ln();
        parts[(l + lp + lpp) % 2].push(ln_c);
    }
    (log_sum(&parts[0]), log_sum(&parts[1]))
}

fn log_sum(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// One term of the triple sum, before the amplitude and radial factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleTerm {
    pub l: usize,
    pub lp: usize,
    pub lpp: usize,
    pub c: f64,
    /// Amplitude multiplying `H_{l'}/zeta^2` in the parallel sum and
    /// `Hbar_{l'}/zeta^2` in the transverse sum.
    pub first: Pol,
    /// Amplitude multiplying `H_{l'}` in the transverse sum.
    pub second: Pol,
}

/// Enumerates the non-vanishing terms for `l <= lmax`, `l' <= lp_max`.
///
/// With `swapped`, the electric and magnetic amplitudes exchange roles and
/// the even and odd parity selectors are exchanged.
pub fn triple_terms(rho: f64, lmax: usize, lp_max: usize, swapped: bool) -> Result<Vec<TripleTerm>> {
    let ln_i = ln_i_l_of_r_seq(lmax + lp_max, rho)?;
    let mut out = Vec::new();
    for l in 1..=lmax {
        for lp in 1..=lp_max {
            for lpp in l.abs_diff(lp)..=l + lp {
                let w = wigner3j_110(l, lp, lpp);
                if w == 0.0 {
                    continue;
                }
                let c = ((2 * lp + 1) * (2 * lpp + 1)) as f64 * ln_i[lpp].exp() * w * w;
                let even = (l + lp + lpp) % 2 == 0;
                let selected = even != swapped;
                let (a, b) = if swapped {
                    (Pol::Magnetic, Pol::Electric)
                } else {
                    (Pol::Electric, Pol::Magnetic)
                };
                let (first, second) = if selected { (a, b) } else { (b, a) };
                out.push(TripleTerm {
                    l,
                    lp,
                    lpp,
                    c,
                    first,
                    second,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Cold,
    Hot,
}

/// Precomputed amplitudes and coefficient sums for repeated evaluation of
/// the triple sum over a range of radial positions `zeta >= zeta_min`.
#[derive(Debug, Clone)]
pub struct TripleSum {
    pub spec: AggregateSpec,
    pub zeta_min: f64,
    table: MultipoleTable,
    /// `rows[l-1][l'-1] = (ln S^e, ln S^o)`.
    rows: Vec<Vec<(f64, f64)>>,
    lp_max: usize,
    fixed_lmax: bool,
}

/// Relative tolerance used to cut the series.
pub const SERIES_TOL: f64 = 1e-13;

impl TripleSum {
    /// Builds the tables; `lmax = None` selects the amplitude order
    /// adaptively.
    pub fn new(spec: AggregateSpec, zeta_min: f64, lmax: Option<usize>) -> Result<Self> {
        Self::build(spec, zeta_min, lmax)
    }

    fn build(spec: AggregateSpec, zeta_min: f64, lmax: Option<usize>) -> Result<Self> {
        spec.sphere.validate()?;
        let rho = spec.rho;
        let q = spec.sphere.q;
        if !(rho > 0.0) {
            return Err(Error::Invalid(format!("rho = {rho} must be positive")));
        }
        if !(zeta_min > rho + q) {
            return Err(Error::Invalid(format!(
                "zeta = {zeta_min} must exceed rho + q = {}",
                rho + q
            )));
        }
        let l_cap = match lmax {
            Some(l) if l == 0 || l > LMAX_CAP => {
                return Err(Error::Invalid(format!("lmax = {l} outside 1..={LMAX_CAP}")))
            }
            Some(l) => l,
            None => LMAX_CAP,
        };
        let table = MultipoleTable::new(spec.sphere, l_cap)?;
        let h = sph_hankel1_scaled(LP_CAP + 1, zeta_min)?;
        let ln_h2: Vec<f64> = h.iter().map(|v| 2.0 * v.ln_abs()).collect();
        let ln_i = ln_i_l_of_r_seq(l_cap + LP_CAP, rho)?;
        let lt = SERIES_TOL.ln();
        let mut rows = Vec::new();
        let mut best = f64::NEG_INFINITY;
        let mut quiet_rows = 0;
        let mut prev_row = f64::NEG_INFINITY;
        let mut lp_max = 0;
        for l in 1..=l_cap {
            let lf = l as f64;
            let lb = table.b_scaled(l, Pol::Electric).ln_abs().max(table.b_scaled(l, Pol::Magnetic).ln_abs());
            let mut row = Vec::new();
            let mut row_best = f64::NEG_INFINITY;
            let mut quiet = 0;
            let mut prev = f64::NEG_INFINITY;
            for lp in 1..=LP_CAP {
                let s = ln_s_pair(l, lp, &ln_i);
                row.push(s);
                let lpf = lp as f64;
                // bound on the transverse term, which dominates the parallel one at large l'
                let radial = ln_h2[lp] + (lpf * (lpf + 1.0)).ln().max(2.0 * (lpf + 1.0).ln());
                let t = (lf * (lf + 1.0)).ln() + lb + s.0.max(s.1) + radial;
                if t.is_finite() {
                    row_best = row_best.max(t);
                    best = best.max(t);
                }
                // terms in a row rise to a single peak and then fall
                if (!t.is_finite() || t < best + lt) && !(t > prev) {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
                prev = t;
                if quiet >= 4 && lp > l + rho as usize && lp as f64 > zeta_min {
                    break;
                }
                if lp == LP_CAP {
                    return Err(Error::Convergence {
                        zeta: zeta_min,
                        lmax: l,
                        detail: format!("observation order exceeds {LP_CAP}"),
                    });
                }
            }
            lp_max = lp_max.max(row.len());
            rows.push(row);
            if lmax.is_none() {
                if (!row_best.is_finite() || row_best < best + lt) && !(row_best > prev_row) {
                    quiet_rows += 1;
                } else {
                    quiet_rows = 0;
                }
                prev_row = row_best;
                if quiet_rows >= 3 && l >= 4 {
                    break;
                }
                if l == l_cap {
                    return Err(Error::LmaxCap {
                        lmax: l_cap + 1,
                        cap: LMAX_CAP,
                    });
                }
            }
        }
        Ok(TripleSum {
            spec,
            zeta_min,
            table,
            rows,
            lp_max,
            fixed_lmax: lmax.is_some(),
        })
    }

    pub fn l_max(&self) -> usize {
        self.rows.len()
    }

    pub fn lp_max(&self) -> usize {
        self.lp_max
    }

    pub fn table(&self) -> &MultipoleTable {
        &self.table
    }

    /// `(F_par, F_perp)` of the given kind at `zeta >= zeta_min`.
    pub fn eval(&self, zeta: f64, kind: Kind) -> Result<((f64, f64), SumDiagnostics)> {
        if !(zeta >= self.zeta_min) || !zeta.is_finite() {
            return Err(Error::Invalid(format!(
                "zeta = {zeta} below the tabulated minimum {}",
                self.zeta_min
            )));
        }
        let q = self.spec.sphere.q;
        let h = sph_hankel1_scaled(self.lp_max + 1, zeta)?;
        let radial: Vec<(Scaled, Scaled)> = (1..=self.lp_max)
            .map(|lp| {
                let dh = h[lp].scale_re(lp as f64 + 1.0) - h[lp + 1].scale_re(zeta);
                match kind {
                    Kind::Cold => (h[lp].sqr(), dh.sqr()),
                    Kind::Hot => (h[lp].norm_sqr(), dh.norm_sqr()),
                }
            })
            .collect();
        let z2 = zeta * zeta;
        let mut par = 0.0;
        let mut perp = 0.0;
        let mut abs_sum = 0.0;
        let mut row_tot = Vec::with_capacity(self.rows.len());
        let mut last_shell: f64 = 0.0;
        for (li, row) in self.rows.iter().enumerate() {
            let l = li + 1;
            let lf = l as f64;
            let amp = |p: Pol| match kind {
                Kind::Cold => self.table.b_scaled(l, p).scale(minus_i_pow(l + 1)),
                Kind::Hot => -self.table.c_scaled(l, p),
            };
            let (ae, am) = (amp(Pol::Electric), amp(Pol::Magnetic));
            let mut rp = 0.0;
            let mut rt = 0.0;
            let mut ra = 0.0;
            for (k, &(se, so)) in row.iter().enumerate() {
                let lp = k + 1;
                let lpf = lp as f64;
                let (hh, hb) = radial[k];
                let first = Scaled::from_ln(se) * ae + Scaled::from_ln(so) * am;
                let second = Scaled::from_ln(so) * ae + Scaled::from_ln(se) * am;
                let tp = (first * hh).value().re * lpf * (lpf + 1.0) / z2;
                let tt = (first * hb).value().re / z2 + (second * hh).value().re;
                rp += tp;
                rt += tt;
                let a = lf * (lf + 1.0) * (tp.abs() + tt.abs());
                ra += a;
                if lp == row.len() {
                    last_shell = last_shell.max(a);
                }
            }
            par += lf * (lf + 1.0) * rp;
            perp += lf * (lf + 1.0) * rt;
            abs_sum += ra;
            row_tot.push(ra);
        }
        let pre = 9.0 / (2.0 * q * q * q);
        let (f_par, f_perp) = (-pre * par, -0.5 * pre * perp);
        let scale = abs_sum.max(f64::MIN_POSITIVE);
        let last_row = if self.fixed_lmax { *row_tot.last().unwrap_or(&0.0) } else { 0.0 };
        let tail = last_row.max(last_shell) / scale;
        let fmag = (par.abs() + 0.5 * perp.abs()) * pre;
        let warning = (last_row.max(last_shell) * pre > SHELL_WARN * fmag && fmag > 0.0).then(|| {
            format!(
                "triple sum at zeta = {zeta}: last shell contributes {:.2e} of |F| (lmax = {}, l' <= {})",
                last_row.max(last_shell) * pre / fmag,
                self.l_max(),
                self.lp_max
            )
        });
        Ok((
            (f_par, f_perp),
            SumDiagnostics {
                l_max: self.l_max(),
                lp_max: self.lp_max,
                tail,
                warning,
            },
        ))
    }
}

fn check_zeta(spec: &AggregateSpec, zeta: f64) -> Result<()> {
    if !(zeta > spec.rho + spec.sphere.q) {
        return Err(Error::Invalid(format!(
            "zeta = {zeta} must exceed rho + q = {}",
            spec.rho + spec.sphere.q
        )));
    }
    Ok(())
}

/// Cold correction functions `(F_c_par, F_c_perp)` per unit filling
/// fraction, amplitude orders `l <= lmax`.
pub fn f_cold_sum(spec: &AggregateSpec, zeta: f64, lmax: usize) -> Result<((f64, f64), SumDiagnostics)> {
    check_zeta(spec, zeta)?;
    TripleSum::new(*spec, zeta, Some(lmax))?.eval(zeta, Kind::Cold)
}

/// Dielectric correction functions `(F_d_par, F_d_perp)` per unit filling
/// fraction.
pub fn f_hot_sum(spec: &AggregateSpec, zeta: f64, lmax: usize) -> Result<((f64, f64), SumDiagnostics)> {
    check_zeta(spec, zeta)?;
    TripleSum::new(*spec, zeta, Some(lmax))?.eval(zeta, Kind::Hot)
}

/// All four correction functions with adaptive truncation.
pub fn correction_sum(spec: &AggregateSpec, zeta: f64) -> Result<(CorrectionValue, SumDiagnostics)> {
    check_zeta(spec, zeta)?;
    let t = TripleSum::new(*spec, zeta, None)?;
    let ((cp, ct), dc) = t.eval(zeta, Kind::Cold)?;
    let ((dp, dt), dd) = t.eval(zeta, Kind::Hot)?;
    let diag = if dc.tail >= dd.tail { dc } else { dd };
    Ok((
        CorrectionValue {
            zeta,
            f_c_par: cp,
            f_c_perp: ct,
            f_d_par: dp,
            f_d_perp: dt,
        },
        diag,
    ))
}

/// Single-sphere limit of `f F`:
/// `f F_par = -(3/2) sum_l [l(l+1)]^2 Re[(-i)^{l+1} B^e_l H_l/zeta^2]`,
/// `f F_perp = -(3/4) sum_l l(l+1) Re[(-i)^{l+1} (B^e_l Hbar_l/zeta^2 + B^m_l H_l)]`.
pub fn f_single_scatterer(sphere: &SphereSpec, zeta: f64, lmax: usize) -> Result<(f64, f64)> {
    sphere.validate()?;
    if !(zeta > sphere.q) {
        return Err(Error::Invalid(format!("zeta = {zeta} must exceed q = {}", sphere.q)));
    }
    let t = MultipoleTable::new(*sphere, lmax)?;
    let h = sph_hankel1_scaled(lmax + 1, zeta)?;
    let z2 = zeta * zeta;
    let mut par = 0.0;
    let mut perp = 0.0;
    for l in 1..=lmax {
        let lf = l as f64;
        let ll = lf * (lf + 1.0);
        let ph = minus_i_pow(l + 1);
        let be = t.b_scaled(l, Pol::Electric).scale(ph);
        let bm = t.b_scaled(l, Pol::Magnetic).scale(ph);
        let hh = h[l].sqr();
        let dh = h[l].scale_re(lf + 1.0) - h[l + 1].scale_re(zeta);
        par += ll * ll * (be * hh).value().re / z2;
        perp += ll * ((be * dh.sqr()).value().re / z2 + (bm * hh).value().re);
    }
    Ok((-1.5 * par, -0.75 * perp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_scalar, QuadOptions};
    use crate::specfun::sph_bessel_j;

    fn sphere(q: f64, re: f64, im: f64) -> SphereSpec {
        SphereSpec::new(q, Complex64::new(re, im)).unwrap()
    }

    fn fig1(im: f64) -> AggregateSpec {
        AggregateSpec::new(6.0, sphere(0.5, 3.0, im), 0.01, f64::INFINITY).unwrap()
    }

    #[test]
    fn radial_domain_integral() {
        let j0 = |t: f64| sph_bessel_j(0, Complex64::new(t, 0.0)).unwrap().re;
        let opts = QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-13,
            max_intervals: 200,
        };
        let want = integrate_scalar(|t| t * t * j0(t) * j0(t), 0.0, 6.0, opts).unwrap();
        assert!((i_l_of_r(0, 6.0).unwrap() - want).abs() < 1e-13 * want);
        assert!((i_l_of_r(0, 6.0).unwrap() - 3.1341432295001087).abs() < 1e-13);
        for l in [0usize, 1, 3, 10, 40] {
            for rho in [0.3, 2.0, 6.0, 25.0] {
                let h = 2e-6 * rho;
                let d = (i_l_of_r(l, rho + h).unwrap() - i_l_of_r(l, rho - h).unwrap()) / (2.0 * h);
                let jl = sph_bessel_j(l, Complex64::new(rho, 0.0)).unwrap().re;
                let want = rho * rho * jl * jl;
                let scale = want.abs().max(i_l_of_r(l, rho).unwrap() / rho);
                assert!((d - want).abs() < 1e-8 * scale.max(1e-300), "l={l} rho={rho}: {d} {want}");
            }
        }
    }

    #[test]
    fn small_domain_power_law() {
        for l in [0usize, 2, 5] {
            let a = i_l_of_r(l, 1e-2).unwrap();
            let b = i_l_of_r(l, 2e-2).unwrap();
            let p = (b / a).log2();
            assert!((p - (2 * l + 3) as f64).abs() < 1e-3, "l={l}: {p}");
        }
        // large order, deep below the turning point
        let ln = ln_i_l_of_r_seq(400, 6.0).unwrap();
        assert!(ln[400].is_finite() && ln[400] < -1500.0);
    }

    #[test]
    fn coefficient_properties() {
        assert_eq!(c_coeff(1, 5, 2, 6.0).unwrap(), 0.0);
        assert_eq!(c_coeff(2, 2, 5, 6.0).unwrap(), 0.0);
        for (l, lp, lpp) in [(1, 2, 1), (3, 2, 4), (5, 7, 3), (4, 4, 0), (6, 3, 5)] {
            let a = c_coeff(l, lp, lpp, 6.0).unwrap();
            let b = c_coeff(lp, l, lpp, 6.0).unwrap();
            let want = b * (2 * lp + 1) as f64 / (2 * l + 1) as f64;
            assert!((a - want).abs() < 1e-13 * a.abs(), "{l} {lp} {lpp}");
        }
    }

    #[test]
    fn single_scatterer_coefficient_limit() {
        // n_s c_{l,l,0} -> 1/(4 pi) with n_s = 3/(4 pi rho^3)
        for rho in [1e-3, 1e-4] {
            for l in 1..6 {
                let ns = 3.0 / (4.0 * std::f64::consts::PI * rho * rho * rho);
                let v = ns * c_coeff(l, l, 0, rho).unwrap() * 4.0 * std::f64::consts::PI;
                assert!((v - 1.0).abs() < 1e-6, "{v}");
                // the other l'' are suppressed by powers of rho
                for lpp in 1..=2 * l {
                    assert!(ns * c_coeff(l, l, lpp, rho).unwrap() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn vacuum_and_lossless() {
        let s = AggregateSpec::new(6.0, sphere(0.5, 1.0, 0.0), 0.01, f64::INFINITY).unwrap();
        let ((a, b), _) = f_cold_sum(&s, 10.0, 8).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
        let ((a, b), _) = f_hot_sum(&fig1(0.0), 10.0, 8).unwrap();
        assert!(a.abs() < 1e-14 && b.abs() < 1e-14, "{a} {b}");
    }

    #[test]
    fn pinned_against_integral_form() {
        // values of the integral representation at l <= 8
        let s = fig1(0.5);
        let ((p, t), d) = f_cold_sum(&s, 10.0, 8).unwrap();
        assert!((p - 0.006688980931445032).abs() < 1e-9 * p.abs(), "{p}");
        assert!((t + 0.03546500435284093).abs() < 1e-9 * t.abs(), "{t}");
        assert!(d.lp_max > 10);
        let ((p, t), _) = f_hot_sum(&s, 10.0, 8).unwrap();
        assert!((p - 0.04998447868934805).abs() < 1e-9 * p, "{p}");
        assert!((t - 0.22877049242394024).abs() < 1e-9 * t, "{t}");
    }

    #[test]
    fn hot_positive() {
        for im in [0.01, 0.5, 2.0] {
            let s = fig1(im);
            let t = TripleSum::new(s, 6.6, None).unwrap();
            for z in [6.6, 7.0, 9.0, 15.0, 40.0] {
                let ((p, q), _) = t.eval(z, Kind::Hot).unwrap();
                assert!(p > 0.0 && q > 0.0, "im={im} z={z}: {p} {q}");
            }
        }
    }

    #[test]
    fn far_field_orders() {
        let s = fig1(0.5);
        let t = TripleSum::new(s, 200.0, None).unwrap();
        let mut par = Vec::new();
        let mut perp = Vec::new();
        for k in 0..40 {
            let z = 200.0 + 0.1 * k as f64;
            let ((p, q), _) = t.eval(z, Kind::Cold).unwrap();
            par.push(p.abs() * z.powi(4));
            perp.push(q.abs() * z * z);
        }
        let mp = par.iter().cloned().fold(0.0, f64::max);
        let mq = perp.iter().cloned().fold(0.0, f64::max);
        assert!(mp.is_finite() && mp > 0.0 && mq.is_finite() && mq > 0.0);
        let t2 = TripleSum::new(s, 400.0, None).unwrap();
        let ((p, q), _) = t2.eval(400.0, Kind::Cold).unwrap();
        assert!(p.abs() * 400f64.powi(4) < 3.0 * mp && q.abs() * 400.0 * 400.0 < 3.0 * mq);
    }

    #[test]
    fn single_scatterer_matches_small_domain() {
        let sp = sphere(0.5, 3.0, 0.5);
        let rho = 1e-3;
        let s = AggregateSpec {
            rho,
            sphere: sp,
            f: 0.0,
            beta_hw: f64::INFINITY,
        };
        for z in [0.8, 2.0, 5.0] {
            let t = TripleSum::new(s, z, Some(12)).unwrap();
            let ((p, q), _) = t.eval(z, Kind::Cold).unwrap();
            let scale = (sp.q / rho).powi(3);
            let (sp_, sq) = f_single_scatterer(&sp, z, 12).unwrap();
            assert!((p * scale - sp_).abs() < 1e-4 * sp_.abs(), "z={z}: {} {sp_}", p * scale);
            assert!((q * scale - sq).abs() < 1e-4 * sq.abs(), "z={z}: {} {sq}", q * scale);
        }
        let v = f_single_scatterer(&sphere(0.5, 1.0, 0.0), 2.0, 6).unwrap();
        assert_eq!(v, (0.0, 0.0));
    }

    #[test]
    fn single_scatterer_dipole_term() {
        let sp = sphere(0.5, 3.0, 0.5);
        let z = 3.0;
        let (p, _) = f_single_scatterer(&sp, z, 1).unwrap();
        let b = crate::mie::amplitude_b(&sp, 1, Pol::Electric).unwrap();
        let h = crate::specfun::sph_hankel1(1, z).unwrap().h_l;
        let want = -1.5 * 4.0 * (-b * h * h / (z * z)).re;
        assert!((p - want).abs() < 1e-14 * want.abs());
    }

    #[test]
    fn parity_split_is_complete() {
        let ln_i = ln_i_l_of_r_seq(40, 6.0).unwrap();
        for l in 1..8 {
            for lp in 1..12 {
                let (se, so) = ln_s_pair(l, lp, &ln_i);
                let all: f64 = (l.abs_diff(lp)..=l + lp).map(|k| c_coeff(l, lp, k, 6.0).unwrap()).sum();
                let sum = se.exp() + so.exp();
                assert!((sum - all).abs() <= 1e-13 * all, "{l} {lp}");
                for k in l.abs_diff(lp)..=l + lp {
                    let even = (l + lp + k) % 2 == 0;
                    let odd = !even;
                    assert!(even as u8 + odd as u8 == 1);
                }
            }
        }
    }

    #[test]
    fn electric_magnetic_symmetry_of_terms() {
        let key = |t: &TripleTerm| (t.l, t.lp, t.lpp, t.c.to_bits(), t.first == Pol::Electric, t.second == Pol::Electric);
        let a = triple_terms(6.0, 5, 7, false).unwrap();
        let b = triple_terms(6.0, 5, 7, true).unwrap();
        let mut ka: Vec<_> = a.iter().map(key).collect();
        let mut kb: Vec<_> = b.iter().map(key).collect();
        ka.sort_by(|x, y| x.partial_cmp(y).unwrap());
        kb.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(ka, kb);
        // every term pairs one electric and one magnetic amplitude
        assert!(a.iter().all(|t| t.first != t.second));
    }

    #[test]
    fn truncation_monotone_beyond_turning_point() {
        let s = fig1(0.5);
        let z = 6.8;
        let f = |lmax: usize| TripleSum::new(s, z, Some(lmax)).unwrap().eval(z, Kind::Cold).unwrap().0;
        let mut prev = f64::INFINITY;
        for lmax in (8..=30).step_by(2) {
            let (a, b) = (f(lmax), f(lmax + 10));
            let d = (a.0 - b.0).abs() + (a.1 - b.1).abs();
            if d < 1e-13 * (b.0.abs() + b.1.abs()) {
                break;
            }
            assert!(d < prev, "lmax={lmax}: {d} {prev}");
            prev = d;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn rejects_inside_domain() {
        let s = fig1(0.5);
        assert!(f_cold_sum(&s, 6.4, 8).is_err());
        assert!(AggregateSpec::new(0.4, sphere(0.5, 3.0, 0.5), 0.01, 1.0).is_err());
        assert!(AggregateSpec::new(6.0, sphere(0.5, 3.0, 0.5), 0.3, 1.0).is_err());
        assert!(fig1(0.5).dilute_warning().is_none());
    }
}
