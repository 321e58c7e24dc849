//! Adaptive 15-point Gauss–Kronrod quadrature for vector-valued integrands.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-11,
            rel_tol: 1e-11,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: Vec<f64>,
    pub error: Vec<f64>,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    e
}

fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize) -> (Vec<f64>, Vec<f64>)
where
    F: FnMut(f64) -> Vec<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron: Vec<f64> = fc.iter().map(|v| v * WGK[7]).collect();
    let mut gauss: Vec<f64> = fc.iter().map(|v| v * WG[3]).collect();
    let mut res_abs: Vec<f64> = fc.iter().map(|v| v.abs() * WGK[7]).collect();
    let mut f1 = Vec::with_capacity(7);
    let mut f2 = Vec::with_capacity(7);
    for j in 0..7 {
        let x = h * XGK[j];
        let lo = f(c - x);
        let hi = f(c + x);
        for k in 0..dim {
            let s = lo[k] + hi[k];
            kron[k] += WGK[j] * s;
            res_abs[k] += WGK[j] * (lo[k].abs() + hi[k].abs());
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
        f1.push(lo);
        f2.push(hi);
    }
    let mut value = vec![0.0; dim];
    let mut error = vec![0.0; dim];
    for k in 0..dim {
        let mean = 0.5 * kron[k];
        let mut asc = WGK[7] * (fc[k] - mean).abs();
        for j in 0..7 {
            asc += WGK[j] * ((f1[j][k] - mean).abs() + (f2[j][k] - mean).abs());
        }
        value[k] = kron[k] * h;
        error[k] = rescale_error((kron[k] - gauss[k]) * h, res_abs[k] * h.abs(), asc * h.abs());
    }
    (value, error)
}

/// Integrates `f` over `[a, b]`; `f` returns a vector of fixed length `dim`.
///
/// Intervals are bisected in order of their largest tolerance-weighted
/// error until every component satisfies
/// `err_k <= max(abs_tol, rel_tol * |I_k|)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Vec<f64>,
{
    integrate_breaks(&mut f, &[a, b], dim, opts)
}

/// As [`integrate`], starting from the given break points.
pub fn integrate_breaks<F>(f: &mut F, points: &[f64], dim: usize, opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Vec<f64>,
{
    let mut segs: Vec<Segment> = Vec::new();
    let mut total = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    for w in points.windows(2) {
        let (value, error) = gk15(f, w[0], w[1], dim);
        for k in 0..dim {
            total[k] += value[k];
            err[k] += error[k];
        }
        segs.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let tol_of = |total: &[f64]| -> Vec<f64> {
        total
            .iter()
            .map(|v| opts.abs_tol.max(opts.rel_tol * v.abs()).max(f64::MIN_POSITIVE))
            .collect()
    };
    let weight = |s: &Segment, tol: &[f64]| -> f64 {
        (0..dim).map(|k| s.error[k] / tol[k]).fold(0.0f64, f64::max)
    };
    let mut key_tol = tol_of(&total);
    let mut heap: BinaryHeap<Keyed> = segs
        .iter()
        .enumerate()
        .map(|(i, s)| Keyed(weight(s, &key_tol), i))
        .collect();
    let mut alive = vec![true; segs.len()];
    let mut live = segs.len();
    let mut since_resum = 0usize;
    loop {
        if since_resum >= 64 {
            // refresh the running sums against drift
            total = vec![0.0; dim];
            err = vec![0.0; dim];
            for (s, &a) in segs.iter().zip(&alive) {
                if a {
                    for k in 0..dim {
                        total[k] += s.value[k];
                        err[k] += s.error[k];
                    }
                }
            }
            since_resum = 0;
        }
        let tol = tol_of(&total);
        if (0..dim).all(|k| err[k] <= tol[k]) {
            return Ok(QuadResult {
                value: total,
                error: err,
                intervals: live,
            });
        }
        if live >= opts.max_intervals {
            let worst = (0..dim).map(|k| err[k] / tol[k]).fold(0.0f64, f64::max);
            return Err(Error::Quadrature {
                a: points[0],
                b: points[points.len() - 1],
                err: worst,
            });
        }
        if (0..dim).any(|k| tol[k] < 0.5 * key_tol[k] || tol[k] > 2.0 * key_tol[k]) {
            key_tol = tol.clone();
            heap = segs
                .iter()
                .enumerate()
                .filter(|(i, _)| alive[*i])
                .map(|(i, s)| Keyed(weight(s, &key_tol), i))
                .collect();
        }
        let Keyed(_, idx) = heap.pop().expect("non-empty segment heap");
        alive[idx] = false;
        let (a, b) = (segs[idx].a, segs[idx].b);
        for k in 0..dim {
            total[k] -= segs[idx].value[k];
            err[k] -= segs[idx].error[k];
        }
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            return Err(Error::Quadrature {
                a,
                b,
                err: f64::INFINITY,
            });
        }
        for (lo, hi) in [(a, m), (m, b)] {
            let (value, error) = gk15(f, lo, hi, dim);
            for k in 0..dim {
                total[k] += value[k];
                err[k] += error[k];
            }
            let s = Segment {
                a: lo,
                b: hi,
                value,
                error,
            };
            heap.push(Keyed(weight(&s, &key_tol), segs.len()));
            segs.push(s);
            alive.push(true);
        }
        live += 1;
        since_resum += 1;
    }
}

struct Keyed(f64, usize);

impl PartialEq for Keyed {
    fn eq(&self, o: &Self) -> bool {
        self.0.total_cmp(&o.0).is_eq()
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Keyed {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    Ok(integrate(|x| vec![f(x)], a, b, 1, opts)?.value[0])
}
