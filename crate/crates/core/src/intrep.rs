//! Integral representation of the correction functions: one-dimensional
//! integrals over the distance `t` between the atom and points of the
//! spherical domain, weighted by the geometry functions `g1`, `g2`.

use num_complex::Complex64;

use crate::aggregate::{AggregateSpec, CorrectionValue, Kind, SumDiagnostics, SHELL_WARN};
use crate::error::{Error, Result};
use crate::hankint::{Antiderivatives, Family};
use crate::mie::{minus_i_pow, MultipoleTable, Pol, LMAX_CAP};
use crate::quad::{integrate_breaks, QuadOptions};
use crate::specfun::{sph_hankel1_complex_seq, sph_hankel1_scaled, Scaled};

/// Highest amplitude order evaluated through the closed forms by default.
pub const DEFAULT_CROSSOVER: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Closed,
    Quadrature,
}

#[derive(Debug, Clone, Copy)]
pub struct IntrepOptions {
    /// Orders `l <= crossover` use the closed forms under `Method::Closed`.
    pub crossover: usize,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for IntrepOptions {
    fn default() -> Self {
        IntrepOptions {
            crossover: DEFAULT_CROSSOVER,
            rel_tol: 1e-11,
            max_intervals: 2000,
        }
    }
}

/// The four J-integrals of one multipole order. Hot values are real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JIntegralSet {
    pub l: usize,
    pub zeta: f64,
    pub rho: f64,
    pub kind: Kind,
    pub je_par: Complex64,
    pub jm_par: Complex64,
    pub je_perp: Complex64,
    pub jm_perp: Complex64,
}

impl JIntegralSet {
    fn from_array(l: usize, zeta: f64, rho: f64, kind: Kind, v: [Complex64; 4]) -> Self {
        JIntegralSet {
            l,
            zeta,
            rho,
            kind,
            je_par: v[0],
            jm_par: v[1],
            je_perp: v[2],
            jm_perp: v[3],
        }
    }

    pub fn as_array(&self) -> [Complex64; 4] {
        [self.je_par, self.jm_par, self.je_perp, self.jm_perp]
    }
}

/// `g1 = (rho^2 - (zeta - t)^2) / (2 zeta)`.
pub fn g1(t: f64, zeta: f64, rho: f64) -> f64 {
    (rho - zeta + t) * (rho + zeta - t) / (2.0 * zeta)
}

/// `g2 = ((rho^2 - zeta^2 - t^2) / (2 zeta))^3 / (3 t^2) + t/3`, evaluated
/// as `g1 (1 - g1/t + g1^2/(3t^2))`.
pub fn g2(t: f64, zeta: f64, rho: f64) -> f64 {
    let a = g1(t, zeta, rho);
    let u = a / t;
    a * (1.0 - u + u * u / 3.0)
}

/// `(g1 - g2, g1 + g2, g2)` without cancellation: `g1 - g2 = g1^2/t (1 - g1/(3t))`.
fn g_combos(t: f64, zeta: f64, rho: f64) -> (f64, f64, f64) {
    let a = g1(t, zeta, rho);
    let u = a / t;
    let gm = a * u * (1.0 - u / 3.0);
    let g2v = a - gm;
    (gm, a + g2v, g2v)
}

/// Powers of `t` in the Laurent expansions of `g1 - g2`, `g1 + g2`, `g2`.
const POWERS: [i32; 5] = [-2, 0, 1, 2, 4];

/// Laurent coefficients `(g1 - g2, g1 + g2, g2)` for `POWERS`.
fn g_coeffs(zeta: f64, rho: f64) -> ([f64; 5], [f64; 5], [f64; 5]) {
    let a = (rho * rho - zeta * zeta) / (2.0 * zeta);
    let b = 1.0 / (2.0 * zeta);
    let a3 = a * a * a / 3.0;
    let g2c = [a3, -a * a * b, 1.0 / 3.0, a * b * b, -b * b * b / 3.0];
    let g1c = [0.0, a, 1.0, -b, 0.0];
    let mut gm = [0.0; 5];
    let mut gp = [0.0; 5];
    for k in 0..5 {
        gm[k] = g1c[k] - g2c[k];
        gp[k] = g1c[k] + g2c[k];
    }
    (gm, gp, g2c)
}

/// Radial kernels of one order at `t`: `(H, Hbar)` of the given kind.
pub(crate) fn kernels(h: &[Scaled], l: usize, t: f64, kind: Kind) -> (Scaled, Scaled) {
    let dh = h[l].scale_re(l as f64 + 1.0) - h[l + 1].scale_re(t);
    match kind {
        Kind::Cold => (h[l].sqr(), dh.sqr()),
        Kind::Hot => (h[l].norm_sqr(), dh.norm_sqr()),
    }
}

/// Integrands of `(Je_par, Jm_par, Je_perp, Jm_perp)` at `t`, given the
/// weights `gm = g1 - g2`, `gp = g1 + g2` and `g2`.
fn integrands(hh: Complex64, hb: Complex64, t: f64, ll: f64, gm: f64, gp: f64, g2v: f64) -> [Complex64; 4] {
    [
        (hb * gm + hh * (2.0 * ll * g2v)) / t,
        hh * (t * gm),
        (hb * gp + hh * (2.0 * ll * gm)) / t,
        hh * (t * gp),
    ]
}

fn check_geometry(zeta: f64, rho: f64) -> Result<()> {
    if !(rho > 0.0) || !(zeta > rho) || !zeta.is_finite() {
        return Err(Error::Invalid(format!("need zeta > rho > 0, got zeta = {zeta}, rho = {rho}")));
    }
    Ok(())
}

/// Break points clustered geometrically at the lower end, where high
/// orders decay over a scale `lo / (2 l)`.
fn break_points(lo: f64, hi: f64, lmax: usize) -> Vec<f64> {
    let mut pts = vec![lo];
    let mut d = lo / (2.0 * (lmax as f64 + 1.0));
    while lo + d < hi {
        pts.push(lo + d);
        d *= 2.0;
    }
    pts.push(hi);
    pts
}

/// Two-pass adaptive quadrature of a vector integrand whose first `n`
/// components are values and the next `n` their absolute values. The
/// first pass integrates the absolute values coarsely; in the second each
/// component is normalized by its absolute integral and converged to
/// `rel_tol/2` absolute, or `rel_tol` relative.
fn integrate_scaled<F>(mut f: F, pts: &[f64], n: usize, opts: &IntrepOptions) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Vec<f64>,
{
    let coarse = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-3,
        max_intervals: opts.max_intervals,
    };
    let c = integrate_breaks(&mut |t| f(t)[n..].to_vec(), pts, n, coarse)?;
    let inv: Vec<f64> = c.value.iter().map(|&v| if v > 0.0 { 1.0 / v } else { 0.0 }).collect();
    if inv.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; n]);
    }
    let fine = QuadOptions {
        abs_tol: 0.5 * opts.rel_tol,
        rel_tol: opts.rel_tol,
        max_intervals: opts.max_intervals,
    };
    let r = integrate_breaks(
        &mut |t| f(t)[..n].iter().zip(&inv).map(|(v, s)| v * s).collect(),
        pts,
        n,
        fine,
    )?;
    Ok(r.value.iter().zip(&c.value).map(|(v, s)| v * s).collect())
}

/// J-integrals of one order by direct quadrature.
fn j_quadrature(l: usize, zeta: f64, rho: f64, kind: Kind, opts: &IntrepOptions) -> Result<JIntegralSet> {
    let ll = (l * (l + 1)) as f64;
    let mut err = None;
    let f = |t: f64| -> Vec<f64> {
        let h = match sph_hankel1_scaled(l + 1, t) {
            Ok(h) => h,
            Err(e) => {
                err = Some(e);
                return vec![f64::NAN; 16];
            }
        };
        let (hh, hb) = kernels(&h, l, t, kind);
        let (gm, gp, b) = g_combos(t, zeta, rho);
        let v = integrands(hh.value(), hb.value(), t, ll, gm, gp, b);
        let mut out = Vec::with_capacity(16);
        for x in &v {
            out.push(x.re);
            out.push(x.im);
        }
        for x in &v {
            out.push(x.norm());
            out.push(x.norm());
        }
        out
    };
    let pts = break_points(zeta - rho, zeta + rho, l);
    let r = integrate_scaled(f, &pts, 8, opts);
    if let Some(e) = err {
        return Err(e);
    }
    let r = r?;
    let v = [0, 1, 2, 3].map(|k| Complex64::new(r[2 * k], r[2 * k + 1]));
    Ok(JIntegralSet::from_array(l, zeta, rho, kind, v))
}

/// Antiderivative combination for the four J-integrals at one endpoint,
/// with the sum of the moduli of the combined pieces.
fn j_antiderivative(ad: &Antiderivatives, l: usize, zeta: f64, rho: f64) -> Result<([Complex64; 4], [f64; 4])> {
    let (gm, gp, g2c) = g_coeffs(zeta, rho);
    let lf = l as f64;
    let ll = lf * (lf + 1.0);
    let hot = ad.family == Family::Conjugated;
    let mut out = [Complex64::new(0.0, 0.0); 4];
    let mut mag = [0.0; 4];
    for (i, &k) in POWERS.iter().enumerate() {
        let d_lo = ad.diag(l, 1 - k)?;
        let d_l = ad.diag(l, -k - 1)?;
        let mut off = ad.offdiag(l, -k)?;
        if hot {
            off = Complex64::new(off.re, 0.0);
        }
        let d_up = ad.diag(l + 1, -k - 1)?;
        let a = d_lo * ((lf + 1.0) * (lf + 1.0));
        let c = off * (2.0 * (lf + 1.0));
        let hbar = a - c + d_up;
        let hbar_mag = a.norm() + c.norm() + d_up.norm();
        out[0] += hbar * gm[i] + d_lo * (2.0 * ll * g2c[i]);
        out[1] += d_l * gm[i];
        out[2] += hbar * gp[i] + d_lo * (2.0 * ll * gm[i]);
        out[3] += d_l * gp[i];
        mag[0] += hbar_mag * gm[i].abs() + d_lo.norm() * (2.0 * ll * g2c[i]).abs();
        mag[1] += d_l.norm() * gm[i].abs();
        mag[2] += hbar_mag * gp[i].abs() + d_lo.norm() * (2.0 * ll * gm[i]).abs();
        mag[3] += d_l.norm() * gp[i].abs();
    }
    Ok((out, mag))
}

/// Relative roundoff of the antiderivative pieces, per family, as measured
/// against high-precision quadrature at arguments up to 120.
fn piece_noise(kind: Kind) -> f64 {
    match kind {
        Kind::Cold => 1e-13,
        Kind::Hot => 1e-15,
    }
}

/// Largest ratio of the summed piece moduli to the modulus of the result.
fn cancellation(a: &([Complex64; 4], [f64; 4]), b: &([Complex64; 4], [f64; 4])) -> f64 {
    (0..4)
        .map(|k| (a.1[k] + b.1[k]) / (b.0[k] - a.0[k]).norm())
        .fold(0.0, f64::max)
}

fn j_closed(l: usize, zeta: f64, rho: f64, kind: Kind) -> Result<JIntegralSet> {
    let family = match kind {
        Kind::Cold => Family::Plain,
        Kind::Hot => Family::Conjugated,
    };
    let lo = Antiderivatives::new(l + 1, zeta - rho, family)?;
    let hi = Antiderivatives::new(l + 1, zeta + rho, family)?;
    let a = j_antiderivative(&lo, l, zeta, rho)?;
    let b = j_antiderivative(&hi, l, zeta, rho)?;
    Ok(JIntegralSet::from_array(l, zeta, rho, kind, [0, 1, 2, 3].map(|k| b.0[k] - a.0[k])))
}

/// J-integrals of order `l` of the given kind.
pub fn j_integrals(l: usize, zeta: f64, rho: f64, kind: Kind, method: Method) -> Result<JIntegralSet> {
    check_geometry(zeta, rho)?;
    if l == 0 {
        return Err(Error::Invalid("multipole order l must be >= 1".into()));
    }
    match method {
        Method::Closed => j_closed(l, zeta, rho, kind),
        Method::Quadrature => j_quadrature(l, zeta, rho, kind, &IntrepOptions::default()),
    }
}

/// Cold-scatterer J-integrals.
pub fn j_cold(l: usize, zeta: f64, rho: f64, method: Method) -> Result<JIntegralSet> {
    j_integrals(l, zeta, rho, Kind::Cold, method)
}

/// Hot-scatterer J-integrals (moduli squared in the kernels).
pub fn j_hot(l: usize, zeta: f64, rho: f64, method: Method) -> Result<JIntegralSet> {
    j_integrals(l, zeta, rho, Kind::Hot, method)
}

/// Amplitude weights of order `l`: `(-i)^{l+1} B^p_l` for cold and `C^p_l`
/// for hot scatterers, as `(electric, magnetic)`.
fn weights(t: &MultipoleTable, l: usize, kind: Kind) -> (Scaled, Scaled) {
    match kind {
        Kind::Cold => {
            let ph = minus_i_pow(l + 1);
            (
                t.b_scaled(l, Pol::Electric).scale(ph),
                t.b_scaled(l, Pol::Magnetic).scale(ph),
            )
        }
        Kind::Hot => (t.c_scaled(l, Pol::Electric), t.c_scaled(l, Pol::Magnetic)),
    }
}

/// `sum_l l(l+1) Re[w^e_l J^e_l + w^m_l J^m_l]` for both polarizations.
fn contract(w: (Scaled, Scaled), j: &[Complex64; 4], l: usize) -> (f64, f64) {
    let ll = (l * (l + 1)) as f64;
    let (we, wm) = (w.0.value(), w.1.value());
    (ll * (we * j[0] + wm * j[1]).re, ll * (we * j[2] + wm * j[3]).re)
}

/// Summed integrand over `l in ls` for both kinds:
/// `(cold par, cold perp, hot par, hot perp)` before the prefactors.
fn summed_integrand(t: f64, zeta: f64, rho: f64, table: &MultipoleTable, ls: (usize, usize)) -> Result<[f64; 4]> {
    let h = sph_hankel1_scaled(ls.1 + 1, t)?;
    let (gm, gp, b) = g_combos(t, zeta, rho);
    let mut out = [0.0; 4];
    for l in ls.0..=ls.1 {
        let ll = (l * (l + 1)) as f64;
        for (kk, kind) in [Kind::Cold, Kind::Hot].into_iter().enumerate() {
            let (we, wm) = weights(table, l, kind);
            let (hh, hb) = kernels(&h, l, t, kind);
            let eh = (we * hh).value();
            let eb = (we * hb).value();
            let mh = (wm * hh).value();
            let par = (eb * gm + eh * (2.0 * ll * b)) / t + mh * (t * gm);
            let perp = (eb * gp + eh * (2.0 * ll * gm)) / t + mh * (t * gp);
            out[2 * kk] += ll * par.re;
            out[2 * kk + 1] += ll * perp.re;
        }
    }
    Ok(out)
}

fn summed_quadrature(
    zeta: f64,
    rho: f64,
    table: &MultipoleTable,
    ls: (usize, usize),
    opts: &IntrepOptions,
) -> Result<[f64; 4]> {
    if ls.0 > ls.1 {
        return Ok([0.0; 4]);
    }
    let mut err = None;
    let f = |t: f64| -> Vec<f64> {
        match summed_integrand(t, zeta, rho, table, ls) {
            Ok(v) => {
                let mut o = v.to_vec();
                o.extend(v.iter().map(|x| x.abs()));
                o
            }
            Err(e) => {
                err = Some(e);
                vec![f64::NAN; 8]
            }
        }
    };
    let pts = break_points(zeta - rho, zeta + rho, ls.1);
    let r = integrate_scaled(f, &pts, 4, opts);
    if let Some(e) = err {
        return Err(e);
    }
    let r = r?;
    Ok([r[0], r[1], r[2], r[3]])
}

/// Estimated size of the order-`l` contribution, from the kernel at the
/// lower end of the integration range.
fn order_estimate(table: &MultipoleTable, h_lo: &[Scaled], l: usize, z_lo: f64) -> f64 {
    let lf = l as f64;
    let w = table
        .b_scaled(l, Pol::Electric)
        .ln_abs()
        .max(table.b_scaled(l, Pol::Magnetic).ln_abs());
    // kernel decays over a width z_lo/(2l+1) away from the endpoint, where the weight vanishes linearly
    w + 2.0 * (lf * (lf + 1.0)).ln() + 2.0 * h_lo[l].ln_abs() + 2.0 * (z_lo / (2.0 * lf + 1.0)).ln()
}

/// Amplitude order needed for relative accuracy `tol` at `zeta`.
pub fn auto_lmax_int(spec: &AggregateSpec, zeta: f64, tol: f64) -> Result<usize> {
    check_geometry(zeta, spec.rho)?;
    let z_lo = zeta - spec.rho;
    let table = MultipoleTable::new(spec.sphere, LMAX_CAP)?;
    let h = sph_hankel1_scaled(LMAX_CAP, z_lo)?;
    let lt = tol.ln();
    let mut best = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    let mut quiet = 0;
    for l in 1..=LMAX_CAP {
        let e = order_estimate(&table, &h, l, z_lo);
        best = best.max(e);
        if (e < best + lt || e == f64::NEG_INFINITY) && !(e > prev) {
            quiet += 1;
        } else {
            quiet = 0;
        }
        prev = e;
        if quiet >= 3 && l >= 4 {
            return Ok(l);
        }
    }
    Err(Error::LmaxCap {
        lmax: LMAX_CAP + 1,
        cap: LMAX_CAP,
    })
}

/// Evaluator of the integral representation for one aggregate.
#[derive(Debug, Clone)]
pub struct IntegralRep {
    pub spec: AggregateSpec,
    pub lmax: usize,
    pub opts: IntrepOptions,
    table: MultipoleTable,
}

impl IntegralRep {
    pub fn new(spec: AggregateSpec, lmax: usize, opts: IntrepOptions) -> Result<Self> {
        spec.sphere.validate()?;
        if lmax == 0 || lmax > LMAX_CAP {
            return Err(Error::Invalid(format!("lmax = {lmax} outside 1..={LMAX_CAP}")));
        }
        let table = MultipoleTable::new(spec.sphere, lmax)?;
        Ok(IntegralRep {
            spec,
            lmax,
            opts,
            table,
        })
    }

    pub fn table(&self) -> &MultipoleTable {
        &self.table
    }

    /// All four correction functions per unit filling fraction.
    ///
    /// Under `Method::Closed`, an order whose antiderivative pieces cancel
    /// beyond what binary64 roundoff allows at `rel_tol` is integrated by
    /// quadrature instead.
    pub fn eval(&self, zeta: f64, method: Method) -> Result<(CorrectionValue, SumDiagnostics)> {
        let rho = self.spec.rho;
        let q = self.spec.sphere.q;
        if !(zeta > rho + q) || !zeta.is_finite() {
            return Err(Error::Invalid(format!("zeta = {zeta} must exceed rho + q = {}", rho + q)));
        }
        let split = match method {
            Method::Closed => self.opts.crossover.min(self.lmax),
            Method::Quadrature => 0,
        };
        let mut acc = [0.0; 4];
        let mut last = [0.0; 4];
        if split > 0 {
            let mut closed = || -> Result<()> {
                for (kk, kind) in [Kind::Cold, Kind::Hot].into_iter().enumerate() {
                    let family = match kind {
                        Kind::Cold => Family::Plain,
                        Kind::Hot => Family::Conjugated,
                    };
                    let lo = Antiderivatives::new(split + 1, zeta - rho, family)?;
                    let hi = Antiderivatives::new(split + 1, zeta + rho, family)?;
                    for l in 1..=split {
                        let a = j_antiderivative(&lo, l, zeta, rho)?;
                        let b = j_antiderivative(&hi, l, zeta, rho)?;
                        let j = if cancellation(&a, &b) * piece_noise(kind) > 10.0 * self.opts.rel_tol {
                            j_quadrature(l, zeta, rho, kind, &self.opts)?.as_array()
                        } else {
                            [0, 1, 2, 3].map(|k| b.0[k] - a.0[k])
                        };
                        let (p, t) = contract(weights(&self.table, l, kind), &j, l);
                        acc[2 * kk] += p;
                        acc[2 * kk + 1] += t;
                        if l == self.lmax {
                            last[2 * kk] = p;
                            last[2 * kk + 1] = t;
                        }
                    }
                }
                Ok(())
            };
            closed()?;
        }
        if split < self.lmax {
            let r = summed_quadrature(zeta, rho, &self.table, (split + 1, self.lmax), &self.opts)?;
            let top = summed_quadrature(zeta, rho, &self.table, (self.lmax, self.lmax), &self.opts)?;
            for k in 0..4 {
                acc[k] += r[k];
                last[k] = top[k];
            }
        }
        let pre = 9.0 / (8.0 * q * q * q);
        let f = [-pre * acc[0], -0.5 * pre * acc[1], pre * acc[2], 0.5 * pre * acc[3]];
        let lastf = [pre * last[0], 0.5 * pre * last[1], pre * last[2], 0.5 * pre * last[3]];
        let tail = (0..4)
            .map(|k| if f[k] != 0.0 { (lastf[k] / f[k]).abs() } else { 0.0 })
            .fold(0.0, f64::max);
        let warning = (tail > SHELL_WARN).then(|| {
            format!(
                "integral representation at zeta = {zeta}: order l = {} contributes {tail:.2e} of |F|",
                self.lmax
            )
        });
        Ok((
            CorrectionValue {
                zeta,
                f_c_par: f[0],
                f_c_perp: f[1],
                f_d_par: f[2],
                f_d_perp: f[3],
            },
            SumDiagnostics {
                l_max: self.lmax,
                lp_max: 0,
                tail,
                warning,
            },
        ))
    }
}

/// Tolerance used by [`correction_int`] to choose the amplitude order.
pub const AUTO_TOL: f64 = 1e-12;

/// All four correction functions with the amplitude order chosen by
/// [`auto_lmax_int`].
pub fn correction_int(spec: &AggregateSpec, zeta: f64, method: Method) -> Result<(CorrectionValue, SumDiagnostics)> {
    let lmax = auto_lmax_int(spec, zeta, AUTO_TOL)?;
    IntegralRep::new(*spec, lmax, IntrepOptions::default())?.eval(zeta, method)
}

/// Cold correction functions `(F_c_par, F_c_perp)` from the integral
/// representation.
pub fn f_cold_int(spec: &AggregateSpec, zeta: f64, lmax: usize, method: Method) -> Result<(f64, f64)> {
    let (v, _) = IntegralRep::new(*spec, lmax, IntrepOptions::default())?.eval(zeta, method)?;
    Ok((v.f_c_par, v.f_c_perp))
}

/// Dielectric correction functions `(F_d_par, F_d_perp)` from the integral
/// representation.
pub fn f_hot_int(spec: &AggregateSpec, zeta: f64, lmax: usize, method: Method) -> Result<(f64, f64)> {
    let (v, _) = IntegralRep::new(*spec, lmax, IntrepOptions::default())?.eval(zeta, method)?;
    Ok((v.f_d_par, v.f_d_perp))
}

// ---------------------------------------------------------------------------
// Halfspace limit
// ---------------------------------------------------------------------------

/// Large-domain limits of the geometry weights at fixed distance
/// `zp = zeta - rho` to the surface: `(g1, g2) = (t - zp, t/3 - zp^3/(3 t^2))`.
pub fn halfspace_g(t: Complex64, zp: f64) -> (Complex64, Complex64) {
    (t - zp, t / 3.0 - zp * zp * zp / (3.0 * t * t))
}

/// J-integrals for a domain filling the halfspace at distance
/// `zeta_prime` from the atom.
///
/// Cold: the oscillatory integral over `[zeta', inf)` is evaluated along
/// the ray `t = zeta' + i s`, where `e^{2it}` decays.
///
/// Hot: the integrands tend to `a0 + a1/t` with `a1 = -zeta'`, so the
/// integrals diverge; the finite part `int (f - a0 - a1/t) dt` is returned.
pub fn halfspace_j(l: usize, zeta_prime: f64, kind: Kind) -> Result<JIntegralSet> {
    if !(zeta_prime > 0.0) || !zeta_prime.is_finite() {
        return Err(Error::Invalid(format!("zeta' = {zeta_prime} must be positive")));
    }
    if l == 0 {
        return Err(Error::Invalid("multipole order l must be >= 1".into()));
    }
    let zp = zeta_prime;
    let ll = (l * (l + 1)) as f64;
    let opts = IntrepOptions::default();
    let v = match kind {
        Kind::Cold => {
            let i = Complex64::new(0.0, 1.0);
            let f = |s: f64| -> Vec<f64> {
                let t = Complex64::new(zp, s);
                let h = sph_hankel1_complex_seq(l + 1, t);
                let dh = h[l] * (l as f64 + 1.0) - h[l + 1] * t;
                let (hh, hb) = (h[l] * h[l], dh * dh);
                let (a, b) = halfspace_g(t, zp);
                let (gm, gp) = (a - b, a + b);
                let w = [
                    (hb * gm + hh * (2.0 * ll) * b) / t * i,
                    hh * t * gm * i,
                    (hb * gp + hh * (2.0 * ll) * gm) / t * i,
                    hh * t * gp * i,
                ];
                let mut o = Vec::with_capacity(16);
                for x in &w {
                    o.push(x.re);
                    o.push(x.im);
                }
                for x in &w {
                    o.push(x.norm());
                    o.push(x.norm());
                }
                o
            };
            let mut pts = vec![0.0];
            let mut d = zp / (2.0 * (l as f64 + 1.0));
            while d < 60.0 {
                pts.push(d);
                d *= 2.0;
            }
            pts.push(60.0 + 2.0 * l as f64);
            let r = integrate_scaled(f, &pts, 8, &opts)?;
            [0, 1, 2, 3].map(|k| Complex64::new(r[2 * k], r[2 * k + 1]))
        }
        Kind::Hot => {
            let a0 = [2.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0];
            let a1 = -zp;
            let f = |t: f64| -> [f64; 4] {
                let Ok(h) = sph_hankel1_scaled(l + 1, t) else {
                    return [f64::NAN; 4];
                };
                let (hh, hb) = kernels(&h, l, t, Kind::Hot);
                let (a, b) = halfspace_g(Complex64::new(t, 0.0), zp);
                let v = integrands(hh.value(), hb.value(), t, ll, a.re - b.re, a.re + b.re, b.re);
                [0, 1, 2, 3].map(|k| v[k].re - a0[k] - a1 / t)
            };
            let t_end = zp + 4000.0;
            let mut g = |t: f64| -> Vec<f64> {
                let v = f(t);
                let mut o = v.to_vec();
                o.extend(v.iter().map(|x| x.abs()));
                o
            };
            let mut pts = break_points(zp, t_end, l);
            // resolve the slow algebraic decay on a geometric grid
            pts.retain(|&p| p < 50.0 + zp);
            let mut x = 50.0 + zp;
            while x < t_end {
                pts.push(x);
                x *= 2.0;
            }
            pts.push(t_end);
            let r = integrate_scaled(&mut g, &pts, 4, &opts)?;
            // remaining integrand ~ c2/t^2 + c3/t^3: fit at the end of the range
            let (t1, t2) = (t_end, 2.0 * t_end);
            let (f1, f2) = (f(t1), f(t2));
            [0, 1, 2, 3].map(|k| {
                let c3 = (f1[k] * t1 * t1 - f2[k] * t2 * t2) / (1.0 / t1 - 1.0 / t2);
                let c2 = f1[k] * t1 * t1 - c3 / t1;
                Complex64::new(r[k] + c2 / t_end + c3 / (2.0 * t_end * t_end), 0.0)
            })
        }
    };
    Ok(JIntegralSet::from_array(l, zp, f64::INFINITY, kind, v))
}
