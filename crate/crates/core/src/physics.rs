//! Measurable rates: thermal combination of the correction functions,
//! emission and absorption rates, and the stationary population ratio.

use crate::aggregate::{correction_sum, AggregateSpec, CorrectionValue};
use crate::error::{Error, Result};
use crate::intrep::{correction_int, Method};

/// Relative weights of the longitudinal and transverse parts of the
/// vacuum decay rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleWeights {
    pub w_par: f64,
    pub w_perp: f64,
}

impl DipoleWeights {
    pub const ISOTROPIC: DipoleWeights = DipoleWeights {
        w_par: 1.0 / 3.0,
        w_perp: 2.0 / 3.0,
    };

    pub fn new(w_par: f64, w_perp: f64) -> Result<Self> {
        let ok = |w: f64| (0.0..=1.0).contains(&w);
        if !ok(w_par) || !ok(w_perp) || ((w_par + w_perp) - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "dipole weights ({w_par}, {w_perp}) must lie in [0, 1] and sum to 1"
            )));
        }
        Ok(DipoleWeights { w_par, w_perp })
    }

    /// Purely longitudinal or purely transverse orientation.
    pub fn aligned(par: bool) -> Self {
        if par {
            DipoleWeights { w_par: 1.0, w_perp: 0.0 }
        } else {
            DipoleWeights { w_par: 0.0, w_perp: 1.0 }
        }
    }

    fn apply(&self, par: f64, perp: f64) -> f64 {
        self.w_par * par + self.w_perp * perp
    }
}

impl Default for DipoleWeights {
    fn default() -> Self {
        Self::ISOTROPIC
    }
}

/// Which representation supplies the correction functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representation {
    Sum,
    #[default]
    Integral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    pub zeta: f64,
    pub gamma_over_gamma0: f64,
    /// Zero for cold scatterers.
    pub gamma_abs_over_gamma0: f64,
    pub f_total_par: f64,
    pub f_total_perp: f64,
    pub f_r_par: f64,
    pub f_r_perp: f64,
}

/// `e^x/(e^x - 1)`; 1 for infinite `x`.
pub fn bose_enhancement(beta_hw: f64) -> f64 {
    if beta_hw.is_infinite() {
        1.0
    } else {
        1.0 / (-(-beta_hw).exp_m1())
    }
}

/// `1/(e^x - 1)`; 0 for infinite `x`.
pub fn bose_occupation(beta_hw: f64) -> f64 {
    if beta_hw.is_infinite() {
        0.0
    } else {
        1.0 / beta_hw.exp_m1()
    }
}

/// Total correction functions `F_r + e^x/(e^x-1) F_d` per polarization.
pub fn f_total(f_c: (f64, f64), f_d: (f64, f64), beta_hw: f64) -> Result<(f64, f64)> {
    if !(beta_hw > 0.0) {
        return Err(Error::Invalid(format!("beta*hbar*omega = {beta_hw} must be positive")));
    }
    if beta_hw.is_infinite() {
        return Ok(f_c);
    }
    let n = bose_enhancement(beta_hw);
    Ok((f_c.0 - f_d.0 + n * f_d.0, f_c.1 - f_d.1 + n * f_d.1))
}

/// Correction functions at `zeta` from the chosen representation.
pub fn correction(spec: &AggregateSpec, zeta: f64, rep: Representation) -> Result<CorrectionValue> {
    Ok(match rep {
        Representation::Sum => correction_sum(spec, zeta)?.0,
        Representation::Integral => correction_int(spec, zeta, Method::Closed)?.0,
    })
}

/// Rates from already evaluated correction functions.
pub fn rates(spec: &AggregateSpec, weights: DipoleWeights, cv: &CorrectionValue) -> Result<RateResult> {
    let (tp, tt) = f_total((cv.f_c_par, cv.f_c_perp), (cv.f_d_par, cv.f_d_perp), spec.beta_hw)?;
    Ok(RateResult {
        zeta: cv.zeta,
        gamma_over_gamma0: 1.0 + spec.f * weights.apply(tp, tt),
        gamma_abs_over_gamma0: spec.f * bose_occupation(spec.beta_hw) * weights.apply(cv.f_d_par, cv.f_d_perp),
        f_total_par: tp,
        f_total_perp: tt,
        f_r_par: cv.f_c_par - cv.f_d_par,
        f_r_perp: cv.f_c_perp - cv.f_d_perp,
    })
}

fn check_position(spec: &AggregateSpec, zeta: f64) -> Result<()> {
    if !(zeta > spec.rho + spec.sphere.q) || !zeta.is_finite() {
        return Err(Error::Invalid(format!(
            "zeta = {zeta} must exceed rho + q = {}",
            spec.rho + spec.sphere.q
        )));
    }
    Ok(())
}

fn check_hot(spec: &AggregateSpec) -> Result<()> {
    if spec.is_cold() {
        return Err(Error::Invalid("absorption needs a finite beta*hbar*omega".into()));
    }
    Ok(())
}

/// `<Gamma>/Gamma_0 = 1 + f [F_par w_par + F_perp w_perp]`.
pub fn emission_rate(spec: &AggregateSpec, weights: DipoleWeights, zeta: f64) -> Result<f64> {
    check_position(spec, zeta)?;
    let cv = correction(spec, zeta, Representation::Integral)?;
    Ok(rates(spec, weights, &cv)?.gamma_over_gamma0)
}

/// `<Gamma_a>/Gamma_0 = f/(e^x - 1) [F_d_par w_par + F_d_perp w_perp]`.
pub fn absorption_rate(spec: &AggregateSpec, weights: DipoleWeights, zeta: f64) -> Result<f64> {
    check_position(spec, zeta)?;
    check_hot(spec)?;
    let cv = correction(spec, zeta, Representation::Integral)?;
    Ok(rates(spec, weights, &cv)?.gamma_abs_over_gamma0)
}

/// Stationary `n_e/n_g = <Gamma_a>/<Gamma>`.
pub fn population_ratio(spec: &AggregateSpec, weights: DipoleWeights, zeta: f64) -> Result<f64> {
    check_position(spec, zeta)?;
    check_hot(spec)?;
    let cv = correction(spec, zeta, Representation::Integral)?;
    let r = rates(spec, weights, &cv)?;
    Ok(r.gamma_abs_over_gamma0 / r.gamma_over_gamma0)
}

/// Population ratio with the vacuum rate dropped from `<Gamma>`, the form
/// that applies when the correction terms dominate.
pub fn population_ratio_dominant(spec: &AggregateSpec, weights: DipoleWeights, zeta: f64) -> Result<f64> {
    check_position(spec, zeta)?;
    check_hot(spec)?;
    let cv = correction(spec, zeta, Representation::Integral)?;
    let r = rates(spec, weights, &cv)?;
    Ok(r.gamma_abs_over_gamma0 / (r.gamma_over_gamma0 - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mie::SphereSpec;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn fig1(f: f64, beta_hw: f64) -> AggregateSpec {
        AggregateSpec::new(6.0, SphereSpec::new(0.5, Complex64::new(3.0, 0.5)).unwrap(), f, beta_hw).unwrap()
    }

    #[test]
    fn thermal_factors() {
        let (tp, tt) = f_total((1.0, 2.0), (0.25, 0.5), 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((tp - (0.75 + e / (e - 1.0) * 0.25)).abs() < 1e-15);
        assert!((tt - (1.5 + 1.5819767068693265 * 0.5)).abs() < 1e-14);
        assert_eq!(f_total((1.0, 2.0), (0.25, 0.5), f64::INFINITY).unwrap(), (1.0, 2.0));
        let x = 1e-6;
        let (s, _) = f_total((1.0, 2.0), (0.25, 0.5), x).unwrap();
        assert!((s * x / 0.25 - 1.0).abs() < 1e-5);
        assert!(f_total((1.0, 2.0), (0.25, 0.5), 0.0).is_err());
    }

    #[test]
    fn trivial_limits() {
        let w = DipoleWeights::ISOTROPIC;
        assert_eq!(emission_rate(&fig1(0.0, f64::INFINITY), w, 8.0).unwrap(), 1.0);
        let vac = AggregateSpec::new(6.0, SphereSpec::new(0.5, Complex64::new(1.0, 0.0)).unwrap(), 0.1, 1.0).unwrap();
        assert!((emission_rate(&vac, w, 8.0).unwrap() - 1.0).abs() < 1e-15);
        let lossless = AggregateSpec::new(6.0, SphereSpec::new(0.5, Complex64::new(3.0, 0.0)).unwrap(), 0.1, 1.0).unwrap();
        assert!(absorption_rate(&lossless, w, 8.0).unwrap().abs() < 1e-15);
        assert!(absorption_rate(&fig1(0.1, f64::INFINITY), w, 8.0).is_err());
        assert!(emission_rate(&fig1(0.1, 1.0), w, 6.4).is_err());
        assert!(DipoleWeights::new(0.5, 0.6).is_err());
    }

    #[test]
    fn cold_is_infinite_temperature_limit() {
        let w = DipoleWeights::ISOTROPIC;
        let cv = correction(&fig1(0.1, 1.0), 9.0, Representation::Integral).unwrap();
        let cold = rates(&fig1(0.1, f64::INFINITY), w, &cv).unwrap();
        let hot = rates(&fig1(0.1, 60.0), w, &cv).unwrap();
        assert!((cold.gamma_over_gamma0 - hot.gamma_over_gamma0).abs() < 1e-15);
        assert_eq!(cold.f_total_par, cv.f_c_par);
        assert_eq!(cold.gamma_abs_over_gamma0, 0.0);
    }

    #[test]
    fn absorption_wiring() {
        let s = fig1(0.1, 1.0);
        let w = DipoleWeights::ISOTROPIC;
        let cv = correction(&s, 9.0, Representation::Integral).unwrap();
        let r = rates(&s, w, &cv).unwrap();
        let manual = s.f / (1f64.exp() - 1.0) * (cv.f_d_par / 3.0 + 2.0 * cv.f_d_perp / 3.0);
        assert!((r.gamma_abs_over_gamma0 / manual - 1.0).abs() < 1e-15);
        assert!(r.gamma_abs_over_gamma0 > 0.0);
    }

    #[test]
    fn fig1_pinned() {
        // both representations, isotropic weights, zeta = 8
        let s = fig1(0.1, f64::INFINITY);
        let w = DipoleWeights::ISOTROPIC;
        let a = rates(&s, w, &correction(&s, 8.0, Representation::Sum).unwrap()).unwrap();
        let b = rates(&s, w, &correction(&s, 8.0, Representation::Integral).unwrap()).unwrap();
        assert!((a.gamma_over_gamma0 - b.gamma_over_gamma0).abs() < 1e-10);
        assert!((b.gamma_over_gamma0 - PINNED_ZETA8).abs() < 1e-9, "{}", b.gamma_over_gamma0);
        let h = fig1(0.1, 1.0);
        let r = rates(&h, w, &correction(&h, 8.0, Representation::Integral).unwrap()).unwrap();
        assert!((r.gamma_abs_over_gamma0 - PINNED_ABS_ZETA8).abs() < 1e-9, "{}", r.gamma_abs_over_gamma0);
    }

    const PINNED_ZETA8: f64 = 1.0048154665081779;
    const PINNED_ABS_ZETA8: f64 = 0.016786063863864387;

    #[test]
    fn population_ratio_far_away_vanishes() {
        let s = fig1(0.1, 1.0);
        let r = population_ratio(&s, DipoleWeights::ISOTROPIC, 60.0).unwrap();
        assert!(r > 0.0 && r < 1e-3, "{r}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn linear_in_filling_fraction(f in 0.0f64..0.1, fc in -5.0f64..5.0, fd in 0.0f64..5.0, x in 0.1f64..10.0, w in 0.0f64..1.0) {
            let cv = CorrectionValue { zeta: 8.0, f_c_par: fc, f_c_perp: 0.5 * fc, f_d_par: fd, f_d_perp: 0.5 * fd };
            let wt = DipoleWeights::new(w, 1.0 - w).unwrap();
            let a = rates(&fig1(f, x), wt, &cv).unwrap();
            let b = rates(&fig1(2.0 * f, x), wt, &cv).unwrap();
            let tol = 1e-12 * (1.0 + (a.gamma_over_gamma0 - 1.0).abs());
            prop_assert!(((b.gamma_over_gamma0 - 1.0) - 2.0 * (a.gamma_over_gamma0 - 1.0)).abs() < tol);
            prop_assert!((b.gamma_abs_over_gamma0 - 2.0 * a.gamma_abs_over_gamma0).abs() < tol);
        }

        #[test]
        fn total_interpolates_with_temperature(fc in -5.0f64..5.0, fd in 0.0f64..5.0, x in 0.05f64..20.0) {
            let (t, _) = f_total((fc, fc), (fd, fd), x).unwrap();
            prop_assert!(t >= fc - 1e-12);
            let (t2, _) = f_total((fc, fc), (fd, fd), 2.0 * x).unwrap();
            prop_assert!(t2 <= t + 1e-12);
        }
    }
}
