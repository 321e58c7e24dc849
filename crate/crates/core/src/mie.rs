//! Multipole amplitudes of a single absorbing sphere.
//!
//! Units: wavenumber k = 1, so the sphere radius enters as `q = ka` and the
//! internal wavenumber as `q' = sqrt(eps) q`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::specfun::{principal_sqrt, sph_bessel_j, sph_bessel_j_scaled, sph_hankel1_scaled, Scaled};

/// Cap on automatically chosen truncation orders.
pub const LMAX_CAP: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pol {
    Electric,
    Magnetic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSpec {
    pub q: f64,
    pub eps: Complex64,
}

impl SphereSpec {
    pub fn new(q: f64, eps: Complex64) -> Result<Self> {
        let s = SphereSpec { q, eps };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0) || !self.q.is_finite() {
            return Err(Error::Invalid(format!("sphere size q = {} must be positive", self.q)));
        }
        if !(self.eps.re.is_finite() && self.eps.im.is_finite()) || self.eps.im < 0.0 {
            return Err(Error::Invalid(format!("eps = {} must be finite with Im eps >= 0", self.eps)));
        }
        Ok(())
    }

    /// `q' = sqrt(eps) q` on the principal branch.
    pub fn q_inner(&self) -> Complex64 {
        principal_sqrt(self.eps) * self.q
    }
}

fn i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `(-i)^n`.
pub fn minus_i_pow(n: usize) -> Complex64 {
    i_pow(n).conj()
}

/// Amplitudes for one order, kept in scaled form.
#[derive(Debug, Clone, Copy)]
struct OrderAmplitudes {
    b: Scaled,
    a: Scaled,
}

/// Bessel data shared by all orders of one sphere.
struct SphereSeq {
    jq: Vec<Scaled>,
    jqp: Vec<Scaled>,
    hq: Vec<Scaled>,
}

impl SphereSeq {
    fn new(spec: &SphereSpec, lmax: usize) -> Result<Self> {
        Ok(SphereSeq {
            jq: sph_bessel_j_scaled(lmax + 1, Complex64::new(spec.q, 0.0))?,
            jqp: sph_bessel_j_scaled(lmax + 1, spec.q_inner())?,
            hq: sph_hankel1_scaled(lmax + 1, spec.q)?,
        })
    }

    fn order(&self, spec: &SphereSpec, l: usize, p: Pol) -> Result<OrderAmplitudes> {
        let q = spec.q;
        let qp = spec.q_inner();
        let lf = l as f64;
        let r = (self.jq[l + 1] / self.jq[l]).value();
        let rp = (self.jqp[l + 1] / self.jqp[l]).value();
        let hr = (self.hq[l + 1] / self.hq[l]).value();
        let e = match p {
            Pol::Electric => spec.eps,
            Pol::Magnetic => Complex64::new(1.0, 0.0),
        };
        let inner = (lf + 1.0) - qp * rp;
        let nb = e * ((lf + 1.0) - q * r) - inner;
        let db = e * ((lf + 1.0) - q * hr) - inner;
        if !(db.norm() > 1e-300) || !db.norm().is_finite() {
            return Err(Error::DegenerateDenominator { l });
        }
        let pre = i_pow(l + 1) * ((2.0 * lf + 1.0) / (lf * (lf + 1.0)));
        let b = (self.jq[l] / self.hq[l]).scale(pre * nb / db);
        let cp = match p {
            Pol::Electric => principal_sqrt(spec.eps),
            Pol::Magnetic => Complex64::new(1.0, 0.0),
        };
        let d = (self.hq[l] * self.jqp[l]).scale(db);
        let a = Scaled::from_c64(pre * cp) / d;
        Ok(OrderAmplitudes { b, a })
    }
}

/// Scattering amplitude `B^p_l`.
pub fn amplitude_b(spec: &SphereSpec, l: usize, p: Pol) -> Result<Complex64> {
    Ok(amplitude_b_scaled(spec, l, p)?.value())
}

/// `B^p_l` in scaled form (meaningful for arbitrarily large `l`).
pub fn amplitude_b_scaled(spec: &SphereSpec, l: usize, p: Pol) -> Result<Scaled> {
    check_order(l)?;
    spec.validate()?;
    Ok(SphereSeq::new(spec, l)?.order(spec, l, p)?.b)
}

/// Internal-field amplitude `A^p_l`.
pub fn amplitude_a(spec: &SphereSpec, l: usize, p: Pol) -> Result<Complex64> {
    check_order(l)?;
    spec.validate()?;
    Ok(SphereSeq::new(spec, l)?.order(spec, l, p)?.a.value())
}

fn check_order(l: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::Invalid("multipole order l must be >= 1".into()));
    }
    Ok(())
}

fn coeff_c_scaled(l: usize, b: Scaled) -> Scaled {
    if b.is_zero() {
        return Scaled::ZERO;
    }
    let lf = l as f64;
    let lin = (minus_i_pow(l + 1) * b.mant).re;
    let quad = lf * (lf + 1.0) / (2.0 * lf + 1.0) * b.mant.norm_sqr() * b.log.exp();
    Scaled::new(Complex64::new(lin - quad, 0.0), b.log)
}

/// `C^p_l = Re[(-i)^{l+1} B^p_l] - l(l+1)/(2l+1) |B^p_l|^2`.
pub fn coeff_c(spec: &SphereSpec, l: usize, p: Pol) -> Result<f64> {
    Ok(coeff_c_scaled(l, amplitude_b_scaled(spec, l, p)?).value().re)
}

/// Dimensionless radial integral `int_0^1 s^2 |j_l(q' s)|^2 ds` from the
/// closed form; requires an absorbing sphere.
pub fn radial_integral_ieps(spec: &SphereSpec, l: usize) -> Result<f64> {
    spec.validate()?;
    if spec.eps.im < 1e-14 {
        return Err(Error::Lossless { im_eps: spec.eps.im });
    }
    let k = spec.q_inner();
    let seq = sph_bessel_j_scaled(l + 1, k)?;
    let prod = seq[l + 1] * seq[l].conj();
    let den = k * k - k.conj() * k.conj();
    Ok(2.0 * (prod.scale(k / den)).value().re)
}

/// The same radial integral by adaptive quadrature (valid for lossless
/// spheres as well).
pub fn radial_integral_quadrature(spec: &SphereSpec, l: usize) -> Result<f64> {
    spec.validate()?;
    let k = spec.q_inner();
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 2000,
    };
    let r = integrate(
        |s| {
            let v = sph_bessel_j(l, k * s).unwrap_or(Complex64::new(f64::NAN, 0.0));
            vec![s * s * v.norm_sqr()]
        },
        0.0,
        1.0,
        1,
        opts,
    )?;
    Ok(r.value[0])
}

/// `I^(eps)_l`, closed form when the sphere absorbs and quadrature otherwise.
pub fn radial_integral(spec: &SphereSpec, l: usize) -> Result<f64> {
    match radial_integral_ieps(spec, l) {
        Err(Error::Lossless { .. }) => radial_integral_quadrature(spec, l),
        r => r,
    }
}

/// Both sides of the Wronskian identities relating `A^p_l` and `C^p_l`:
/// `(lhs_m, rhs_m, lhs_e, rhs_e)` with
/// `lhs_m = Im eps q I_l |A^m_l|^2`, `rhs_m = (2l+1)/(l(l+1)) C^m_l`,
/// `lhs_e = Im eps q [(l+1) I_{l-1} + l I_{l+1}] |A^e_l|^2`,
/// `rhs_e = (2l+1)^2/(l(l+1)) C^e_l`.
pub fn verify_wronskian_identities(spec: &SphereSpec, l: usize) -> Result<(f64, f64, f64, f64)> {
    check_order(l)?;
    let seq = SphereSeq::new(spec, l)?;
    let m = seq.order(spec, l, Pol::Magnetic)?;
    let e = seq.order(spec, l, Pol::Electric)?;
    let lf = l as f64;
    let ie = |k: usize| radial_integral(spec, k);
    let lhs_m = spec.eps.im * spec.q * ie(l)? * m.a.norm_sqr().value().re;
    let rhs_m = (2.0 * lf + 1.0) / (lf * (lf + 1.0)) * coeff_c_scaled(l, m.b).value().re;
    let lhs_e = spec.eps.im
        * spec.q
        * ((lf + 1.0) * ie(l - 1)? + lf * ie(l + 1)?)
        * e.a.norm_sqr().value().re;
    let rhs_e = (2.0 * lf + 1.0).powi(2) / (lf * (lf + 1.0)) * coeff_c_scaled(l, e.b).value().re;
    Ok((lhs_m, rhs_m, lhs_e, rhs_e))
}

/// Large-order form of `Re[(-i)^{l+1} B^e_l]`:
/// `Im eps/|1+eps|^2 e^{2l} q^{2l+1} / (2^{2l} l^{2l+2})`.
pub fn large_l_amplitude_asymptote(spec: &SphereSpec, l: usize) -> f64 {
    if spec.eps.im == 0.0 || l == 0 {
        return 0.0;
    }
    let lf = l as f64;
    let ln = 2.0 * lf + (2.0 * lf + 1.0) * spec.q.ln() - 2.0 * lf * 2f64.ln() - (2.0 * lf + 2.0) * lf.ln();
    spec.eps.im / (spec.eps + 1.0).norm_sqr() * ln.exp()
}

/// Amplitudes `B^p_l` and coefficients `C^p_l` for `l = 1..=l_max`.
#[derive(Debug, Clone)]
pub struct MultipoleTable {
    pub spec: SphereSpec,
    pub l_max: usize,
    be: Vec<Scaled>,
    bm: Vec<Scaled>,
    ce: Vec<Scaled>,
    cm: Vec<Scaled>,
}

impl MultipoleTable {
    pub fn new(spec: SphereSpec, l_max: usize) -> Result<Self> {
        spec.validate()?;
        if l_max == 0 {
            return Err(Error::Invalid("l_max must be >= 1".into()));
        }
        let seq = SphereSeq::new(&spec, l_max)?;
        let mut be = vec![Scaled::ZERO];
        let mut bm = vec![Scaled::ZERO];
        let mut ce = vec![Scaled::ZERO];
        let mut cm = vec![Scaled::ZERO];
        for l in 1..=l_max {
            let e = seq.order(&spec, l, Pol::Electric)?.b;
            let m = seq.order(&spec, l, Pol::Magnetic)?.b;
            ce.push(coeff_c_scaled(l, e));
            cm.push(coeff_c_scaled(l, m));
            be.push(e);
            bm.push(m);
        }
        Ok(MultipoleTable {
            spec,
            l_max,
            be,
            bm,
            ce,
            cm,
        })
    }

    pub fn b_scaled(&self, l: usize, p: Pol) -> Scaled {
        match p {
            Pol::Electric => self.be[l],
            Pol::Magnetic => self.bm[l],
        }
    }

    /// `C^p_l` as a scaled real (imaginary mantissa is zero).
    pub fn c_scaled(&self, l: usize, p: Pol) -> Scaled {
        match p {
            Pol::Electric => self.ce[l],
            Pol::Magnetic => self.cm[l],
        }
    }

    pub fn b(&self, l: usize, p: Pol) -> Complex64 {
        self.b_scaled(l, p).value()
    }

    pub fn c(&self, l: usize, p: Pol) -> f64 {
        self.c_scaled(l, p).value().re
    }
}

/// Truncation order for multipole sums evaluated at radial distance
/// `zeta_max` from the sphere centre.
///
/// Returns the smallest order beyond which the estimated single-sphere term
/// `l^2 |B^e_l| |h_l(zeta)|^2` stays below `tol` relative to the largest
/// term, and never less than `floor(zeta + 8 zeta^(1/3) + 10)`.
pub fn auto_lmax(spec: &SphereSpec, zeta_max: f64, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::Invalid("tol must be positive".into()));
    }
    if !(zeta_max > 0.0) {
        return Err(Error::Invalid("zeta_max must be positive".into()));
    }
    let floor = (zeta_max + 8.0 * zeta_max.cbrt() + 10.0).floor() as usize;
    let probe = LMAX_CAP + 1;
    let seq = SphereSeq::new(spec, probe)?;
    let h = sph_hankel1_scaled(probe, zeta_max)?;
    let lt = tol.ln();
    let mut best = f64::NEG_INFINITY;
    let mut tail_start = None;
    for l in 1..=probe {
        let b = seq.order(spec, l, Pol::Electric)?.b;
        let t = 2.0 * (l as f64).ln() + b.ln_abs() + 2.0 * h[l].ln_abs();
        if t.is_finite() {
            best = best.max(t);
        }
        let below = !t.is_finite() || t < best + lt;
        match (below, tail_start) {
            (true, None) => tail_start = Some(l),
            (false, Some(_)) => tail_start = None,
            _ => {}
        }
        if let Some(s) = tail_start {
            if l >= s + 3 && l > zeta_max as usize {
                let n = s.max(floor);
                if n > LMAX_CAP {
                    return Err(Error::LmaxCap { lmax: n, cap: LMAX_CAP });
                }
                return Ok(n);
            }
        }
    }
    Err(Error::LmaxCap {
        lmax: probe,
        cap: LMAX_CAP,
    })
}
