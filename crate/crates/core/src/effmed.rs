//! Effective-medium baseline: the domain as a uniform sphere with an
//! effective dielectric constant, to first order in `eps_eff - 1`.

use num_complex::Complex64;

use crate::aggregate::{AggregateSpec, CorrectionValue, Kind};
use crate::error::{Error, Result};
use crate::intrep::{correction_int, kernels, Method};
use crate::mie::{amplitude_b, minus_i_pow, Pol, SphereSpec, LMAX_CAP};
use crate::specfun::{sph_bessel_j_scaled, sph_hankel1_scaled, Scaled};

/// Warning threshold for `|eps_eff - 1|`.
pub const CONTRAST_WARN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prescription {
    MaxwellGarnett,
    #[default]
    DipoleAmplitude,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffMedSpec {
    pub rho: f64,
    pub f: f64,
    pub sphere: SphereSpec,
    pub prescription: Prescription,
}

impl EffMedSpec {
    pub fn new(rho: f64, f: f64, sphere: SphereSpec, prescription: Prescription) -> Result<Self> {
        let s = EffMedSpec {
            rho,
            f,
            sphere,
            prescription,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_aggregate(spec: &AggregateSpec, prescription: Prescription) -> Self {
        EffMedSpec {
            rho: spec.rho,
            f: spec.f,
            sphere: spec.sphere,
            prescription,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sphere.validate()?;
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::Invalid(format!("rho = {} must be positive", self.rho)));
        }
        if !(self.f >= 0.0) || !self.f.is_finite() {
            return Err(Error::Invalid(format!("f = {} must be non-negative", self.f)));
        }
        Ok(())
    }

    /// Contrast `(eps_eff - 1)/f`, independent of `f`.
    pub fn contrast_per_f(&self) -> Result<Complex64> {
        let (q, eps) = (self.sphere.q, self.sphere.eps);
        Ok(match self.prescription {
            Prescription::MaxwellGarnett => 3.0 * (eps - 1.0) / (eps + 2.0),
            Prescription::DipoleAmplitude => {
                let b = amplitude_b(&self.sphere, 1, Pol::Electric)?;
                Complex64::new(0.0, -3.0) * b / (q * q * q)
            }
        })
    }

    pub fn contrast_warning(&self) -> Option<String> {
        let d = eps_eff(self).ok()? - 1.0;
        (d.norm() > CONTRAST_WARN).then(|| {
            format!(
                "|eps_eff - 1| = {:.3} exceeds {CONTRAST_WARN}: first-order effective medium unreliable",
                d.norm()
            )
        })
    }
}

/// Effective dielectric constant of the filled domain.
pub fn eps_eff(spec: &EffMedSpec) -> Result<Complex64> {
    Ok(1.0 + spec.f * spec.contrast_per_f()?)
}

fn reduced_b_seq(lmax: usize, rho: f64, p: Pol) -> Result<Vec<Scaled>> {
    let j = sph_bessel_j_scaled(lmax + 1, Complex64::new(rho, 0.0))?;
    let mut out = vec![Scaled::ZERO; lmax + 1];
    for l in 1..=lmax {
        let lf = l as f64;
        if j[l].is_zero() {
            continue;
        }
        let r = (j[l + 1] / j[l]).value().re;
        let h = 0.5 * rho * rho;
        let bracket = match p {
            Pol::Electric => (lf + 1.0 + h) + h * r * r - (lf + 1.5) * rho * r,
            Pol::Magnetic => h + h * r * r - (lf + 0.5) * rho * r,
        };
        let pre = (2.0 * lf + 1.0) / (lf * (lf + 1.0)) * rho * bracket;
        let il = minus_i_pow(l).conj();
        out[l] = j[l].sqr().scale(il * pre);
    }
    Ok(out)
}

/// Reduced amplitude `B^p_l / (eps_eff - 1)` of a weakly contrasting uniform
/// sphere of size `rho`.
pub fn reduced_b(l: usize, rho: f64, p: Pol) -> Result<Complex64> {
    if l == 0 {
        return Err(Error::Invalid("multipole order l must be >= 1".into()));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Invalid(format!("rho = {rho} must be positive")));
    }
    Ok(reduced_b_seq(l, rho, p)?[l].value())
}

/// Order at which the effective-medium sum has converged to `tol`.
pub fn auto_lmax_eff(rho: f64, zeta: f64, tol: f64) -> usize {
    // terms fall off as (rho/zeta)^(2l) times a power of l
    let x = (rho / zeta).ln();
    let l = (tol.ln() / (2.0 * x)).ceil() + 10.0;
    (l.max(4.0) as usize).min(LMAX_CAP)
}

/// Effective-medium correction functions `(F_par, F_perp)` per unit
/// filling fraction; the hot kind gives the dielectric part.
pub fn f_eff(spec: &EffMedSpec, zeta: f64, lmax: usize, kind: Kind) -> Result<(f64, f64)> {
    spec.validate()?;
    let rho = spec.rho;
    if !(zeta > rho) || !zeta.is_finite() {
        return Err(Error::Invalid(format!("zeta = {zeta} must exceed rho = {rho}")));
    }
    if lmax == 0 || lmax > LMAX_CAP {
        return Err(Error::Invalid(format!("lmax = {lmax} outside 1..={LMAX_CAP}")));
    }
    let w = Complex64::new(0.0, 1.0) * spec.contrast_per_f()?;
    let be = reduced_b_seq(lmax, rho, Pol::Electric)?;
    let bm = reduced_b_seq(lmax, rho, Pol::Magnetic)?;
    let h = sph_hankel1_scaled(lmax + 1, zeta)?;
    let z2 = zeta * zeta;
    let (mut par, mut perp) = (0.0, 0.0);
    for l in 1..=lmax {
        let ll = (l * (l + 1)) as f64;
        let ph = w * minus_i_pow(l);
        let (hh, hb) = kernels(&h, l, zeta, kind);
        let e_h = (be[l] * hh).scale(ph).value();
        let e_b = (be[l] * hb).scale(ph).value();
        let m_h = (bm[l] * hh).scale(ph).value();
        par += ll * ll * e_h.re / z2;
        perp += ll * (e_b / z2 + m_h).re;
    }
    let sign = match kind {
        Kind::Cold => 1.0,
        Kind::Hot => -1.0,
    };
    Ok((sign * 1.5 * par, sign * 0.75 * perp))
}

/// All four effective-medium correction functions.
pub fn correction_eff(spec: &EffMedSpec, zeta: f64) -> Result<CorrectionValue> {
    let lmax = auto_lmax_eff(spec.rho, zeta, 1e-14);
    let c = f_eff(spec, zeta, lmax, Kind::Cold)?;
    let d = f_eff(spec, zeta, lmax, Kind::Hot)?;
    Ok(CorrectionValue {
        zeta,
        f_c_par: c.0,
        f_c_perp: c.1,
        f_d_par: d.0,
        f_d_perp: d.1,
    })
}

/// Far-field transverse cold form
/// `-(9/(8 q^3)) (1/2 sin 2rho - rho cos 2rho) Re(B^e_1 e^{2i zeta}/zeta^2)`.
pub fn far_eff_cold_perp(sphere: &SphereSpec, rho: f64, zeta: f64) -> Result<f64> {
    let b = amplitude_b(sphere, 1, Pol::Electric)?;
    let q3 = sphere.q.powi(3);
    let m = 0.5 * (2.0 * rho).sin() - rho * (2.0 * rho).cos();
    Ok(-9.0 / (8.0 * q3) * m * (b * Complex64::new(0.0, 2.0 * zeta).exp() / (zeta * zeta)).re)
}

/// Far-field transverse dielectric form `-(3/(2 q^3)) (rho^3/zeta^2) Re B^e_1`.
pub fn far_eff_hot_perp(sphere: &SphereSpec, rho: f64, zeta: f64) -> Result<f64> {
    let b = amplitude_b(sphere, 1, Pol::Electric)?;
    Ok(-1.5 / sphere.q.powi(3) * rho.powi(3) / (zeta * zeta) * b.re)
}

/// One row of the discrete versus effective-medium comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffMedRow {
    pub zeta: f64,
    pub discrete: CorrectionValue,
    pub effective: CorrectionValue,
}

impl EffMedRow {
    /// `F_eff / F_discrete` for `(cold par, cold perp, d par, d perp, r par, r perp)`.
    pub fn ratios(&self) -> [f64; 6] {
        let (a, b) = (&self.effective, &self.discrete);
        [
            a.f_c_par / b.f_c_par,
            a.f_c_perp / b.f_c_perp,
            a.f_d_par / b.f_d_par,
            a.f_d_perp / b.f_d_perp,
            (a.f_c_par - a.f_d_par) / (b.f_c_par - b.f_d_par),
            (a.f_c_perp - a.f_d_perp) / (b.f_c_perp - b.f_d_perp),
        ]
    }
}

/// Discrete-scatterer and effective-medium correction functions on a grid.
pub fn effmed_vs_discrete(spec: &AggregateSpec, prescription: Prescription, zetas: &[f64]) -> Result<Vec<EffMedRow>> {
    let e = EffMedSpec::from_aggregate(spec, prescription);
    zetas
        .iter()
        .map(|&z| {
            let (discrete, _) = correction_int(spec, z, Method::Closed)?;
            let effective = correction_eff(&e, z)?;
            Ok(EffMedRow {
                zeta: z,
                discrete,
                effective,
            })
        })
        .collect()
}
