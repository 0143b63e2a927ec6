//! Adaptive Gauss–Kronrod integration on finite intervals and on `[0, inf)`.
//!
//! The driver is a global adaptive scheme: the interval with the largest
//! error estimate is bisected until the summed estimate drops below
//! `max(abs_tol, rel_tol * |I|)`. Integrable endpoint singularities (`log t`,
//! `t^-0.7`) converge under bisection since the 15-point rule never samples
//! an endpoint. Interior singularities should be passed as breakpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_subdivisions: 4000 }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self { abs_tol, rel_tol, max_subdivisions };
        spec.validate()?;
        Ok(spec)
    }

    /// Looser default used for improper integrals.
    pub fn improper() -> Self {
        Self { abs_tol: 1e-8, rel_tol: 1e-8, ..Self::default() }
    }

    pub fn with_tol(tol: f64) -> Self {
        Self { abs_tol: tol, rel_tol: tol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidQuadrature(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::InvalidQuadrature(format!("rel_tol must be non-negative, got {}", self.rel_tol)));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidQuadrature("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }
}

/// Value and error estimate of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
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

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = fc * WG[3];
    let mut kronrod = fc * WGK[7];
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let (f1, f2) = (f(center - x), f(center + x));
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // NaN errors sort first so they are refined (and eventually reported).
        let key = |p: &Panel| if p.error.is_nan() { f64::INFINITY } else { p.error };
        key(self).total_cmp(&key(other))
    }
}

fn too_narrow(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (b - a) <= 256.0 * f64::EPSILON * scale || (b - a) <= 1e3 * f64::MIN_POSITIVE
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the panels
/// delimited by `points` (which must be strictly increasing).
pub fn integrate_points<F>(f: F, points: &[f64], spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if points.len() < 2 {
        return Err(Error::InvalidQuadrature("need at least two points".into()));
    }
    for w in points.windows(2) {
        if !(w[0] < w[1]) || !w[0].is_finite() || !w[1].is_finite() {
            return Err(Error::InvalidInterval { lo: w[0], hi: w[1] });
        }
    }

    let mut heap = BinaryHeap::with_capacity(points.len() + 64);
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    for w in points.windows(2) {
        let (value, error) = kronrod15(&f, w[0], w[1]);
        heap.push(Panel { a: w[0], b: w[1], value, error });
    }
    let mut count = heap.len();
    let mut live_value: f64 = heap.iter().map(|p| p.value).sum();
    let mut live_error: f64 = heap.iter().map(|p| p.error).sum();

    loop {
        if count % 256 == 0 {
            // Refresh the running sums against accumulated rounding.
            live_value = heap.iter().map(|p| p.value).sum();
            live_error = heap.iter().map(|p| p.error).sum();
        }
        let value = frozen_value + live_value;
        let error = frozen_error + live_error;
        let target = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= target {
            return Ok(Estimate { value, error, intervals: count });
        }
        if count >= spec.max_subdivisions {
            return Err(Error::NonConvergence { context: "adaptive quadrature", estimate: value, error });
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::NonConvergence { context: "adaptive quadrature", estimate: value, error });
        };
        if too_narrow(worst.a, worst.b) || !worst.error.is_finite() && worst.value.is_finite() {
            frozen_value += worst.value;
            frozen_error += worst.error;
            live_value -= worst.value;
            live_error -= worst.error;
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = kronrod15(&f, worst.a, mid);
        let (v2, e2) = kronrod15(&f, mid, worst.b);
        live_value += v1 + v2 - worst.value;
        live_error += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        count += 1;
    }
}

/// Integrates `f` over `[lo, hi]`.
pub fn integrate<F>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::InvalidInterval { lo, hi });
    }
    integrate_points(f, &[lo, hi], spec).map(|e| e.value)
}

/// Integrates `f` over `[0, inf)` through `r = s / (1 - s)`.
pub fn integrate_halfline<F>(f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_halfline_points(f, &[], spec)
}

/// Like [`integrate_halfline`], with interior breakpoints given in `r`.
pub fn integrate_halfline_points<F>(f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut pts = vec![0.0];
    for &r in breaks {
        if r > 0.0 && r.is_finite() {
            pts.push(r / (1.0 + r));
        }
    }
    pts.push(1.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let g = |s: f64| {
        let one_minus = 1.0 - s;
        let r = s / one_minus;
        let v = f(r) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate_points(g, &pts, spec).map(|e| e.value)
}
