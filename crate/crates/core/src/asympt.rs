//! Closed-form asymptotic laws: far field, near-surface divergence,
//! large-order Hankel functions and the special domain radii.

use num_complex::Complex64;

use crate::aggregate::AggregateSpec;
use crate::error::{Error, Result};
use crate::intrep::{correction_int, Method};
use crate::mie::{minus_i_pow, MultipoleTable, Pol};
use crate::specfun::Scaled;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    FarCold,
    FarHot,
    NearSurface,
    EffmedFar,
}

/// An exact value next to its asymptotic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoteReport {
    pub zeta: f64,
    pub exact: f64,
    pub asymptotic: f64,
    pub ratio: f64,
    pub regime: Regime,
}

impl AsymptoteReport {
    pub fn new(zeta: f64, exact: f64, asymptotic: f64, regime: Regime) -> Self {
        let ratio = if asymptotic != 0.0 { exact / asymptotic } else { f64::NAN };
        AsymptoteReport {
            zeta,
            exact,
            asymptotic,
            ratio,
            regime,
        }
    }
}

fn check_far(spec: &AggregateSpec, zeta: f64) -> Result<()> {
    if !(zeta > 3.0 * spec.rho) || !zeta.is_finite() {
        return Err(Error::Invalid(format!(
            "far-field forms need zeta > 3 rho = {}, got {zeta}",
            3.0 * spec.rho
        )));
    }
    Ok(())
}

/// `1/2 sin 2rho - rho cos 2rho`, the common modulation of the transverse
/// far field.
pub fn transverse_modulation(rho: f64) -> f64 {
    0.5 * (2.0 * rho).sin() - rho * (2.0 * rho).cos()
}

/// Leading large-`zeta` forms of the cold J-integrals
/// `(Je_par, Jm_par, Je_perp, Jm_perp)`.
pub fn far_j_cold(l: usize, zeta: f64, rho: f64) -> [Complex64; 4] {
    let ll = (l * (l + 1)) as f64;
    let sgn = if l % 2 == 0 { 1.0 } else { -1.0 };
    let ph = Complex64::new(0.0, 2.0 * zeta).exp() * sgn;
    let (s, c) = ((2.0 * rho).sin(), (2.0 * rho).cos());
    let core = (-0.5 * rho * rho + 0.375) * s - 0.75 * rho * c;
    let z4 = zeta.powi(4);
    let jt = ph / (zeta * zeta) * transverse_modulation(rho);
    [
        ph / z4 * (core - 2.0 * ll * (0.25 * s - 0.5 * rho * c)),
        -ph / z4 * core,
        jt,
        -jt,
    ]
}

/// Leading large-`zeta` forms of the hot J-integrals.
pub fn far_j_hot(l: usize, zeta: f64, rho: f64) -> [f64; 4] {
    let ll = (l * (l + 1)) as f64;
    let z4 = zeta.powi(4);
    let jt = 4.0 / 3.0 * rho.powi(3) / (zeta * zeta);
    [
        (4.0 / 15.0 * rho.powi(5) + 4.0 / 3.0 * ll * rho.powi(3)) / z4,
        4.0 / 15.0 * rho.powi(5) / z4,
        jt,
        jt,
    ]
}

/// Far-field cold correction functions `(F_c_par, F_c_perp)`.
pub fn far_f_cold(spec: &AggregateSpec, zeta: f64, lmax: usize) -> Result<(f64, f64)> {
    check_far(spec, zeta)?;
    let t = MultipoleTable::new(spec.sphere, lmax)?;
    let (mut par, mut perp) = (0.0, 0.0);
    for l in 1..=lmax {
        let ll = (l * (l + 1)) as f64;
        let ph = minus_i_pow(l + 1);
        let (be, bm) = (ph * t.b(l, Pol::Electric), ph * t.b(l, Pol::Magnetic));
        let j = far_j_cold(l, zeta, spec.rho);
        par += ll * (be * j[0] + bm * j[1]).re;
        perp += ll * (be * j[2] + bm * j[3]).re;
    }
    let q3 = spec.sphere.q.powi(3);
    Ok((-9.0 / (8.0 * q3) * par, -9.0 / (16.0 * q3) * perp))
}

/// Far-field dielectric correction functions `(F_d_par, F_d_perp)`.
pub fn far_f_hot(spec: &AggregateSpec, zeta: f64, lmax: usize) -> Result<(f64, f64)> {
    check_far(spec, zeta)?;
    let t = MultipoleTable::new(spec.sphere, lmax)?;
    let (mut par, mut perp) = (0.0, 0.0);
    for l in 1..=lmax {
        let ll = (l * (l + 1)) as f64;
        let (ce, cm) = (t.c(l, Pol::Electric), t.c(l, Pol::Magnetic));
        let j = far_j_hot(l, zeta, spec.rho);
        par += ll * (ce * j[0] + cm * j[1]);
        perp += ll * (ce * j[2] + cm * j[3]);
    }
    let q3 = spec.sphere.q.powi(3);
    Ok((9.0 / (8.0 * q3) * par, 9.0 / (16.0 * q3) * perp))
}

/// Near-surface divergence of `F_c_par` (and of `F_d_par`):
/// `9/(16 q^2) Im eps/|1+eps|^2 rho/((rho+q)(zeta-rho-q))`.
pub fn near_f_par(spec: &AggregateSpec, zeta: f64) -> Result<f64> {
    let (rho, q, eps) = (spec.rho, spec.sphere.q, spec.sphere.eps);
    let d = zeta - rho - q;
    if !(d > 0.0) || !zeta.is_finite() {
        return Err(Error::Invalid(format!("zeta = {zeta} must exceed rho + q = {}", rho + q)));
    }
    Ok(9.0 / (16.0 * q * q) * eps.im / (1.0 + eps).norm_sqr() * rho / ((rho + q) * d))
}

/// Transverse near-surface divergence, half of [`near_f_par`].
pub fn near_f_perp(spec: &AggregateSpec, zeta: f64) -> Result<f64> {
    Ok(0.5 * near_f_par(spec, zeta)?)
}

/// `(F_d_par/F_c_par, F_d_perp/F_c_perp, F_c_par/F_c_perp)` from the integral
/// representation; near the surface these tend to `(1, 1, 2)`.
pub fn near_equivalences(spec: &AggregateSpec, zeta: f64) -> Result<(f64, f64, f64)> {
    let (v, _) = correction_int(spec, zeta, Method::Closed)?;
    Ok((v.f_d_par / v.f_c_par, v.f_d_perp / v.f_c_perp, v.f_c_par / v.f_c_perp))
}

fn special_residual(x: f64) -> f64 {
    // tan x = x written without poles
    x.sin() - x * x.cos()
}

/// The `n`-th positive domain radius with `tan(2 rho) = 2 rho`, at which the
/// leading transverse cold far field vanishes.
pub fn special_radii(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("special radius index starts at 1".into()));
    }
    let pi = std::f64::consts::PI;
    let (mut a, mut b) = (n as f64 * pi, (n as f64 + 0.5) * pi);
    let fa = special_residual(a);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if (special_residual(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-6 {
            break;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..20 {
        // d/dx (sin x - x cos x) = x sin x
        let dx = special_residual(x) / (x * x.sin());
        x -= dx;
        if dx.abs() < 1e-15 * x {
            break;
        }
    }
    Ok(0.5 * x)
}

/// Large-order form `h_l(t) = -i 2^{l+1/2} l^l / (e^l t^{l+1})`, in log-scaled
/// form.
pub fn large_l_hankel(l: usize, t: f64) -> Result<Scaled> {
    if l == 0 || !(t > 0.0) {
        return Err(Error::Invalid(format!("large-order form needs l >= 1 and t > 0, got l = {l}, t = {t}")));
    }
    let lf = l as f64;
    let ln = (lf + 0.5) * std::f64::consts::LN_2 + lf * lf.ln() - lf - (lf + 1.0) * t.ln();
    Ok(Scaled::new(Complex64::new(0.0, -1.0), ln))
}

/// Oscillation amplitude of `f` at each `zeta`, from the pair
/// `f(zeta), f(zeta + pi/4)`: a quarter period apart for the `e^{2i zeta}`
/// phase, so `sqrt(f1^2 + f2^2)` is the local envelope.
/// Returns `(zeta + pi/8, amplitude)`.
pub fn envelope<F>(mut f: F, zetas: &[f64]) -> Result<Vec<(f64, f64)>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let q = 0.25 * std::f64::consts::PI;
    zetas
        .iter()
        .map(|&z0| {
            let (a, b) = (f(z0)?, f(z0 + q)?);
            Ok((z0 + 0.5 * q, a.hypot(b)))
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Log-spaced window starts on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).ln();
    (0..n).map(|k| lo * (r * k as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// Log-log envelope slope of `f` over `[lo, hi]`.
pub fn envelope_slope<F>(f: F, lo: f64, hi: f64, windows: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let env = envelope(f, &log_grid(lo, hi - 0.25 * std::f64::consts::PI, windows))?;
    Ok(loglog_slope(&env))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intrep::{j_cold, j_hot};
    use crate::mie::SphereSpec;
    use crate::specfun::sph_hankel1_scaled;

    fn fig1() -> AggregateSpec {
        AggregateSpec::new(6.0, SphereSpec::new(0.5, Complex64::new(3.0, 0.5)).unwrap(), 0.01, 1.0).unwrap()
    }

    #[test]
    fn special_radius_roots() {
        let r = special_radii(1).unwrap();
        assert!((r - 2.246_704_728_954_532).abs() < 1e-12, "{r}");
        for n in 1..6 {
            let r = special_radii(n).unwrap();
            let x = 2.0 * r;
            assert!((x.tan() - x).abs() < 1e-10 * x, "n={n}");
            assert!(transverse_modulation(r).abs() < 1e-12 * r);
        }
        assert!(special_radii(0).is_err());
    }

    #[test]
    fn large_l_hankel_scaling() {
        for l in [10usize, 60, 200, 500] {
            let a = large_l_hankel(l, 3.0).unwrap();
            let b = large_l_hankel(l, 6.0).unwrap();
            let d = b.ln_abs() - a.ln_abs();
            assert!((d + (l as f64 + 1.0) * std::f64::consts::LN_2).abs() < 1e-9);
            assert!(large_l_hankel(l, 0.1).unwrap().ln_abs().is_finite());
        }
    }

    #[test]
    fn large_l_hankel_vs_exact() {
        let l = 60;
        // the next term of the small-argument series is t^2/(2(2l-1))
        for (t, lo, hi) in [(1.0, 0.99, 1.01), (5.0, 1.10, 1.12)] {
            let exact = sph_hankel1_scaled(l, t).unwrap()[l];
            let a = large_l_hankel(l, t).unwrap();
            let r = (exact.ln_abs() - a.ln_abs()).exp();
            assert!(r > lo && r < hi, "t={t}: {r}");
            let ph = exact.mant / exact.mant.norm();
            assert!((ph - Complex64::new(0.0, -1.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn far_j_forms_match_integrals() {
        let dev = |l: usize, z: f64, rho: f64| -> [f64; 8] {
            let c = j_cold(l, z, rho, Method::Quadrature).unwrap().as_array();
            let ca = far_j_cold(l, z, rho);
            let h = j_hot(l, z, rho, Method::Quadrature).unwrap().as_array();
            let ha = far_j_hot(l, z, rho);
            let mut o = [0.0; 8];
            for k in 0..4 {
                o[k] = (c[k] / ca[k] - 1.0).norm();
                o[4 + k] = (h[k].re / ha[k] - 1.0).abs();
            }
            o
        };
        for l in [1usize, 2] {
            for d in dev(l, 2000.0, 6.0) {
                assert!(d < 0.02, "l={l}: {d}");
            }
            // corrections fall off as 1/zeta (cold) and 1/zeta^2 (hot)
            let (a, b) = (dev(l, 2000.0, 2.0), dev(l, 4000.0, 2.0));
            for k in 0..8 {
                let want = if k < 4 { 2.0 } else { 4.0 };
                assert!((a[k] / b[k] / want - 1.0).abs() < 0.05, "l={l} k={k}: {} {}", a[k], b[k]);
            }
        }
    }

    #[test]
    fn far_hot_monotone_and_lossless() {
        let s = fig1();
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for z in [20.0, 40.0, 80.0, 160.0] {
            let v = far_f_hot(&s, z, 10).unwrap();
            assert!(v.0 > 0.0 && v.1 > 0.0 && v.0 < prev.0 && v.1 < prev.1);
            prev = v;
        }
        let mut lossless = s;
        lossless.sphere.eps = Complex64::new(3.0, 0.0);
        let v = far_f_hot(&lossless, 40.0, 10).unwrap();
        assert!(v.0.abs() < 1e-15 && v.1.abs() < 1e-15);
        assert!(far_f_hot(&s, 10.0, 10).is_err());
    }

    #[test]
    fn far_cold_vanishes_at_special_radius() {
        let mut s = fig1();
        s.rho = special_radii(1).unwrap();
        for z in [50.0, 73.3, 120.0] {
            let (par, perp) = far_f_cold(&s, z, 10).unwrap();
            assert!(perp.abs() < 1e-12 * par.abs().max(1e-12), "{perp}");
        }
    }

    #[test]
    fn far_cold_zero_spacing() {
        let s = fig1();
        let mut zeros = Vec::new();
        let mut prev = far_f_cold(&s, 100.0, 10).unwrap().1;
        let mut z = 100.0;
        while z < 110.0 {
            z += 0.01;
            let v = far_f_cold(&s, z, 10).unwrap().1;
            if v.signum() != prev.signum() {
                zeros.push(z);
            }
            prev = v;
        }
        for w in zeros.windows(3) {
            assert!((w[2] - w[0] - std::f64::consts::PI).abs() < 0.02);
        }
    }

    #[test]
    fn near_surface_pole() {
        let s = fig1();
        let a = near_f_par(&s, 6.5 + 0.1).unwrap();
        let b = near_f_par(&s, 6.5 + 0.2).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!((near_f_perp(&s, 6.6).unwrap() - 0.5 * a).abs() < 1e-15 * a);
        assert!(near_f_par(&s, 6.5).is_err());
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 5.0, 10.0].iter().map(|&x| (x, 3.0 * x.powf(-2.5))).collect();
        assert!((loglog_slope(&pts) + 2.5).abs() < 1e-12);
        let s = envelope_slope(|z| Ok((2.0 * z + 0.3).cos() / (z * z)), 100.0, 1000.0, 8).unwrap();
        assert!((s + 2.0).abs() < 0.01, "{s}");
    }
}
