//! Finite measures on the punctured plane and their angular distribution.
//!
//! A [`Measure`] is a finite sum of typed components. Every query needed by
//! the inequality checks is answered exactly: the angular marginal of each
//! non-atomic component is piecewise linear in the argument, so sector masses
//! and their integrals are closed-form sums over segments.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::extremal;

/// Atoms whose argument lies within this distance of a boundary ray are
/// counted as lying on it (closed sectors).
pub const ANGLE_TOL: f64 = 1e-12;

/// Default tolerance for [`Measure::check_symmetry`] on purely atomic or
/// closed-form measures.
pub const SYMMETRY_TOL_EXACT: f64 = 1e-12;
/// Default symmetry tolerance once tabulated densities are involved.
pub const SYMMETRY_TOL_TABULATED: f64 = 1e-8;

/// Principal argument in `(-pi, pi]`.
pub fn principal_arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: Complex64,
    pub mass: f64,
}

/// Mass spread uniformly in angle on `|z| = radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformCircle {
    pub radius: f64,
    pub mass: f64,
}

/// `mass_scale * rho_alpha(|z|)` times plane Lebesgue measure on the double
/// sector `|Arg z| >= 2 alpha`. With unit scale this is the absolutely
/// continuous part of the Riesz measure of the folded potential `u_alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalTail {
    pub alpha: f64,
    pub mass_scale: f64,
}

impl ExtremalTail {
    pub fn new(alpha: f64, mass_scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < PI / 2.0) {
            return Err(domain("alpha", alpha));
        }
        if !(mass_scale > 0.0 && mass_scale.is_finite()) {
            return Err(domain("mass_scale", mass_scale));
        }
        Ok(Self { alpha, mass_scale })
    }

    /// Angular width of the support, `2 pi - 4 alpha`.
    pub fn angular_width(&self) -> f64 {
        2.0 * PI - 4.0 * self.alpha
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_scale * (PI - 2.0 * self.alpha) / self.alpha
    }

    /// Density with respect to plane Lebesgue measure at `r e^{i theta}`.
    pub fn density(&self, r: f64, theta: f64) -> f64 {
        if theta.abs() >= 2.0 * self.alpha && r > 0.0 {
            self.mass_scale * extremal::rho_alpha_raw(r, self.alpha)
        } else {
            0.0
        }
    }

    /// Radius below which a fraction `q` of the tail mass lies.
    pub fn radial_quantile(&self, q: f64) -> f64 {
        // The radial law has CDF r^p / (1 + r^p) with p = pi / alpha.
        let p = PI / self.alpha;
        (q / (1.0 - q)).powf(1.0 / p)
    }
}

/// Density on a polar grid, bilinear in `(ln r, theta)`, zero off the grid.
///
/// `values[i][j]` is the density (w.r.t. plane Lebesgue measure) at
/// `r_grid[i] * exp(i theta_grid[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    r_grid: Vec<f64>,
    theta_grid: Vec<f64>,
    values: Vec<Vec<f64>>,
    log_r: Vec<f64>,
}

impl TabulatedDensity {
    pub fn new(r_grid: Vec<f64>, theta_grid: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidMeasure(format!("tabulated density: {m}")));
        if r_grid.len() < 2 || theta_grid.len() < 2 {
            return bad("grids need at least two nodes");
        }
        if r_grid.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return bad("radii must be positive and finite");
        }
        if r_grid.windows(2).any(|w| !(w[0] < w[1])) || theta_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("grids must be strictly increasing");
        }
        if theta_grid[0] <= -PI || theta_grid[theta_grid.len() - 1] > PI {
            return bad("angles must lie in (-pi, pi]");
        }
        if values.len() != r_grid.len() || values.iter().any(|row| row.len() != theta_grid.len()) {
            return bad("values must have one row per radius and one column per angle");
        }
        if values.iter().flatten().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return bad("values must be finite and non-negative");
        }
        let log_r = r_grid.iter().map(|r| r.ln()).collect();
        Ok(Self { r_grid, theta_grid, values, log_r })
    }

    pub fn r_grid(&self) -> &[f64] {
        &self.r_grid
    }

    pub fn theta_grid(&self) -> &[f64] {
        &self.theta_grid
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn density(&self, r: f64, theta: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let s = r.ln();
        let (Some((i, fs)), Some((j, ft))) = (locate(&self.log_r, s), locate(&self.theta_grid, theta)) else {
            return 0.0;
        };
        let v = &self.values;
        let lo = v[i][j] * (1.0 - ft) + v[i][j + 1] * ft;
        let hi = v[i + 1][j] * (1.0 - ft) + v[i + 1][j + 1] * ft;
        lo * (1.0 - fs) + hi * fs
    }

    /// `int f(r, theta_j) r^{kappa - 1} dr` for every angular node `j`.
    pub(crate) fn radial_moments(&self, kappa: f64) -> Vec<f64> {
        (0..self.theta_grid.len())
            .map(|j| {
                (0..self.r_grid.len() - 1)
                    .map(|i| linear_exp_integral(self.log_r[i], self.log_r[i + 1], self.values[i][j], self.values[i + 1][j], kappa))
                    .sum()
            })
            .collect()
    }

    /// Angular marginal `theta -> int f r dr` as linear segments over the grid.
    pub(crate) fn angular_segments(&self, kappa: f64) -> Vec<LinearSegment> {
        let g = self.radial_moments(kappa);
        self.theta_grid
            .windows(2)
            .zip(g.windows(2))
            .map(|(t, v)| LinearSegment { lo: t[0], hi: t[1], v_lo: v[0], v_hi: v[1] })
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.angular_segments(2.0).iter().map(LinearSegment::mass).sum()
    }

    /// Folded marginal on `[0, pi]`: density of `|Arg z|`.
    pub(crate) fn folded(&self) -> PiecewiseLinear {
        let segs = self.angular_segments(2.0);
        let eval = |theta: f64| -> f64 {
            segs.iter()
                .find(|s| s.lo <= theta && theta <= s.hi)
                .map_or(0.0, |s| s.value(theta))
        };
        let mut knots: Vec<f64> = vec![0.0, PI];
        knots.extend(self.theta_grid.iter().map(|t| t.abs()));
        knots.sort_by(f64::total_cmp);
        knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
        let mut out = Vec::with_capacity(knots.len());
        for w in knots.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            // Linear on the open segment: sample strictly inside and extrapolate.
            let (t1, t2) = (lo + (hi - lo) / 3.0, lo + 2.0 * (hi - lo) / 3.0);
            let h = |t: f64| eval(t) + eval(-t);
            let (h1, h2) = (h(t1), h(t2));
            let slope = (h2 - h1) / (t2 - t1);
            let v_lo = (h1 - slope * (t1 - lo)).max(0.0);
            let v_hi = (h2 + slope * (hi - t2)).max(0.0);
            if v_lo > 0.0 || v_hi > 0.0 {
                out.push(LinearSegment { lo, hi, v_lo, v_hi });
            }
        }
        PiecewiseLinear::new(out)
    }
}

/// Index of the cell containing `x` and the fractional position inside it.
fn locate(grid: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = grid.len();
    if !(x >= grid[0] && x <= grid[n - 1]) {
        return None;
    }
    let i = grid.partition_point(|&g| g <= x).saturating_sub(1).min(n - 2);
    Some((i, (x - grid[i]) / (grid[i + 1] - grid[i])))
}

/// `int_{s0}^{s1} (linear from v0 to v1) e^{kappa s} ds`.
fn linear_exp_integral(s0: f64, s1: f64, v0: f64, v1: f64, kappa: f64) -> f64 {
    let h = s1 - s0;
    let e0 = (kappa * s0).exp();
    let e1 = (kappa * s1).exp();
    let de = e0 * (kappa * h).exp_m1();
    let base = de / kappa;
    let ramp = h * e1 / kappa - de / (kappa * kappa);
    v0 * base + (v1 - v0) / h * ramp
}

/// One linear piece of a density on an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSegment {
    pub lo: f64,
    pub hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
}

impl LinearSegment {
    pub fn value(&self, t: f64) -> f64 {
        let w = (t - self.lo) / (self.hi - self.lo);
        self.v_lo + (self.v_hi - self.v_lo) * w
    }

    pub fn mass(&self) -> f64 {
        0.5 * (self.v_lo + self.v_hi) * (self.hi - self.lo)
    }

    /// Mass on `[lo, t]` for `t` inside the segment.
    fn partial(&self, t: f64) -> f64 {
        0.5 * (t - self.lo) * (self.v_lo + self.value(t))
    }
}

/// Non-negative density made of linear segments with disjoint interiors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PiecewiseLinear {
    segments: Vec<LinearSegment>,
}

impl PiecewiseLinear {
    pub fn new(mut segments: Vec<LinearSegment>) -> Self {
        segments.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        Self { segments }
    }

    pub fn uniform(lo: f64, hi: f64, mass: f64) -> Self {
        let v = mass / (hi - lo);
        Self::new(vec![LinearSegment { lo, hi, v_lo: v, v_hi: v }])
    }

    pub fn segments(&self) -> &[LinearSegment] {
        &self.segments
    }

    pub fn total(&self) -> f64 {
        self.segments.iter().map(LinearSegment::mass).sum()
    }

    pub fn density(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.lo <= t && t <= s.hi)
            .map(|s| s.value(t))
            .next()
            .unwrap_or(0.0)
    }

    /// Mass on `(-inf, t]`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| {
                if t >= s.hi {
                    s.mass()
                } else if t > s.lo {
                    s.partial(t)
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// `int_{lo}^{a} cdf(t) dt`, exact: the cdf is quadratic on each segment.
    pub fn cdf_integral(&self, lo: f64, a: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| {
                let mut acc = 0.0;
                let x = a.min(s.hi);
                let start = s.lo.max(lo);
                if x > start {
                    let mid = 0.5 * (start + x);
                    acc += (x - start) / 6.0 * (s.partial(start) + 4.0 * s.partial(mid) + s.partial(x));
                }
                let after = s.hi.max(lo);
                if a > after {
                    acc += s.mass() * (a - after);
                }
                acc
            })
            .sum()
    }

    /// `int f(t) density(t) dt` for `f` piecewise linear with kinks only at
    /// the given points; Simpson on each resulting piece is then exact.
    pub fn integrate_piecewise_linear<F: Fn(f64) -> f64>(&self, f: F, kinks: &[f64]) -> f64 {
        let mut total = 0.0;
        for s in &self.segments {
            let mut cuts = vec![s.lo];
            cuts.extend(kinks.iter().copied().filter(|&k| k > s.lo && k < s.hi));
            cuts.push(s.hi);
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                let m = 0.5 * (a + b);
                let g = |t: f64| f(t) * s.value(t);
                total += (b - a) / 6.0 * (g(a) + 4.0 * g(m) + g(b));
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Atom(Atom),
    UniformCircle(UniformCircle),
    ExtremalTail(ExtremalTail),
    Tabulated(TabulatedDensity),
}

impl Component {
    pub fn total_mass(&self) -> f64 {
        match self {
            Component::Atom(a) => a.mass,
            Component::UniformCircle(c) => c.mass,
            Component::ExtremalTail(t) => t.total_mass(),
            Component::Tabulated(d) => d.total_mass(),
        }
    }

    /// Mass of `{ |Arg z| <= t }`.
    fn sector_mass(&self, t: f64) -> f64 {
        match self {
            Component::Atom(a) => {
                if principal_arg(a.location).abs() <= t + ANGLE_TOL {
                    a.mass
                } else {
                    0.0
                }
            }
            Component::UniformCircle(c) => c.mass * t / PI,
            Component::ExtremalTail(e) => {
                let frac = ((t - 2.0 * e.alpha) / (PI - 2.0 * e.alpha)).clamp(0.0, 1.0);
                e.total_mass() * frac
            }
            Component::Tabulated(d) => {
                d.angular_segments(2.0).iter().map(|s| clipped_mass(s, -t, t)).sum()
            }
        }
    }

    /// Folded angular density on `[0, pi]` of the non-atomic part.
    fn folded_density(&self) -> Option<PiecewiseLinear> {
        match self {
            Component::Atom(_) => None,
            Component::UniformCircle(c) => Some(PiecewiseLinear::uniform(0.0, PI, c.mass)),
            Component::ExtremalTail(e) => Some(PiecewiseLinear::uniform(2.0 * e.alpha, PI, e.total_mass())),
            Component::Tabulated(d) => Some(d.folded()),
        }
    }
}

fn clipped_mass(s: &LinearSegment, lo: f64, hi: f64) -> f64 {
    let a = s.lo.max(lo);
    let b = s.hi.min(hi);
    if b <= a {
        return 0.0;
    }
    0.5 * (b - a) * (s.value(a) + s.value(b))
}

/// A finite, origin-free measure in the plane.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measure {
    components: Vec<Component>,
}

impl Measure {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        for c in &components {
            validate(c)?;
        }
        Ok(Self { components })
    }

    pub fn from_atoms<I: IntoIterator<Item = (Complex64, f64)>>(atoms: I) -> Result<Self> {
        Self::new(atoms.into_iter().map(|(location, mass)| Component::Atom(Atom { location, mass })).collect())
    }

    pub fn uniform_circle(radius: f64, mass: f64) -> Result<Self> {
        Self::new(vec![Component::UniformCircle(UniformCircle { radius, mass })])
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Sum of two measures.
    pub fn union(&self, other: &Measure) -> Measure {
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        Measure { components }
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.components.iter().filter_map(|c| match c {
            Component::Atom(a) => Some(a),
            _ => None,
        })
    }

    pub fn is_atomic(&self) -> bool {
        self.components.iter().all(|c| matches!(c, Component::Atom(_)))
    }

    pub fn has_tabulated(&self) -> bool {
        self.components.iter().any(|c| matches!(c, Component::Tabulated(_)))
    }

    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(Component::total_mass).sum()
    }

    /// Mass of the closed double sector `|Arg z| <= t`.
    pub fn sector_mass(&self, t: f64) -> Result<f64> {
        if !(0.0..=PI).contains(&t) {
            return Err(domain("t", t));
        }
        Ok(self.components.iter().map(|c| c.sector_mass(t)).sum())
    }

    /// The sector-mass function `t -> m(t)` on `[0, pi]`.
    pub fn angular_projection(&self) -> SectorMassFunction {
        let mut jumps: Vec<(f64, f64)> = self
            .atoms()
            .filter(|a| a.mass > 0.0)
            .map(|a| (principal_arg(a.location).abs(), a.mass))
            .collect();
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let densities = self.components.iter().filter_map(Component::folded_density).collect();
        SectorMassFunction::new(jumps, densities)
    }

    pub fn default_symmetry_tol(&self) -> f64 {
        if self.has_tabulated() {
            SYMMETRY_TOL_TABULATED
        } else {
            SYMMETRY_TOL_EXACT
        }
    }

    /// Compares `mu{0 < Arg <= t}` with `mu{-t <= Arg < 0}` on a canonical
    /// grid of `t` refined by every atom and tabulated node angle.
    pub fn check_symmetry(&self, tol: f64) -> bool {
        self.symmetry_defect() <= tol
    }

    /// Largest mirror-mass discrepancy found by [`Measure::check_symmetry`].
    pub fn symmetry_defect(&self) -> f64 {
        let mut ts: Vec<f64> = (1..=256).map(|k| PI * k as f64 / 256.0).collect();
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        let mut tab = Vec::new();
        for c in &self.components {
            match c {
                Component::Atom(a) => {
                    let arg = principal_arg(a.location);
                    ts.push(arg.abs());
                    if a.location.im > 0.0 && arg < PI {
                        upper.push((arg, a.mass));
                    } else if a.location.im < 0.0 {
                        lower.push((-arg, a.mass));
                    }
                }
                Component::Tabulated(d) => {
                    ts.extend(d.theta_grid().iter().map(|t| t.abs()));
                    tab.push(d.angular_segments(2.0));
                }
                // Closed-form components are conjugation invariant.
                Component::UniformCircle(_) | Component::ExtremalTail(_) => {}
            }
        }
        ts.iter()
            .map(|&t| {
                let up: f64 = upper.iter().filter(|(a, _)| *a <= t).map(|(_, m)| m).sum();
                let lo: f64 = lower.iter().filter(|(a, _)| *a <= t).map(|(_, m)| m).sum();
                let dens: f64 = tab
                    .iter()
                    .flatten()
                    .map(|s| clipped_mass(s, 0.0, t) - clipped_mass(s, -t, 0.0))
                    .sum();
                (up - lo + dens).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Smallest and largest radius carrying mass; for the unbounded tail the
    /// 1% and 99% radial quantiles stand in.
    pub fn support_radii(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for c in &self.components {
            let (a, b) = match c {
                Component::Atom(a) if a.mass > 0.0 => (a.location.norm(), a.location.norm()),
                Component::Atom(_) => continue,
                Component::UniformCircle(c) => (c.radius, c.radius),
                Component::ExtremalTail(e) => (e.radial_quantile(0.01), e.radial_quantile(0.99)),
                Component::Tabulated(d) => (d.r_grid()[0], d.r_grid()[d.r_grid().len() - 1]),
            };
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (hi > 0.0).then_some((lo, hi))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MeasureSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.into_measure()
    }

    pub fn to_spec(&self) -> MeasureSpec {
        let mut components = Vec::new();
        let mut points = Vec::new();
        for c in &self.components {
            match c {
                Component::Atom(a) => points.push(PointSpec { re: a.location.re, im: a.location.im, mass: a.mass }),
                Component::UniformCircle(c) => components.push(ComponentSpec::UniformCircle { radius: c.radius, mass: c.mass }),
                Component::ExtremalTail(e) => {
                    components.push(ComponentSpec::ExtremalTail { alpha: e.alpha, mass_scale: Some(e.mass_scale) })
                }
                Component::Tabulated(d) => components.push(ComponentSpec::Tabulated {
                    r_grid: d.r_grid.clone(),
                    theta_grid: d.theta_grid.clone(),
                    values: d.values.clone(),
                }),
            }
        }
        if !points.is_empty() {
            components.insert(0, ComponentSpec::Atoms { points });
        }
        MeasureSpec { components }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("measure spec serializes")
    }
}

fn validate(c: &Component) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidMeasure(m));
    match c {
        Component::Atom(a) => {
            if !(a.location.re.is_finite() && a.location.im.is_finite()) {
                return bad(format!("atom location {} is not finite", a.location));
            }
            if a.location == Complex64::new(0.0, 0.0) {
                return bad("atom at the origin".into());
            }
            if !(a.mass >= 0.0 && a.mass.is_finite()) {
                return bad(format!("atom mass {} must be finite and non-negative", a.mass));
            }
        }
        Component::UniformCircle(c) => {
            if !(c.radius > 0.0 && c.radius.is_finite()) {
                return bad(format!("circle radius {} must be positive", c.radius));
            }
            if !(c.mass >= 0.0 && c.mass.is_finite()) {
                return bad(format!("circle mass {} must be finite and non-negative", c.mass));
            }
        }
        Component::ExtremalTail(e) => {
            ExtremalTail::new(e.alpha, e.mass_scale).map_err(|err| Error::InvalidMeasure(err.to_string()))?;
        }
        Component::Tabulated(_) => {}
    }
    Ok(())
}

/// The nondecreasing function `m(t) = mu{ |Arg z| <= t }` on `[0, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorMassFunction {
    jumps: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
    densities: Vec<PiecewiseLinear>,
}

impl SectorMassFunction {
    pub fn new(mut jumps: Vec<(f64, f64)>, densities: Vec<PiecewiseLinear>) -> Self {
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let cumulative = jumps
            .iter()
            .scan(0.0, |acc, &(_, w)| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Self { jumps, cumulative, densities }
    }

    /// `(angle, mass)` pairs of the atomic part, sorted by angle.
    pub fn jumps(&self) -> &[(f64, f64)] {
        &self.jumps
    }

    pub fn densities(&self) -> &[PiecewiseLinear] {
        &self.densities
    }

    pub fn is_atomic(&self) -> bool {
        self.densities.is_empty()
    }

    /// `m(t)`; right-continuous, jumps included at their angle.
    pub fn value(&self, t: f64) -> f64 {
        let k = self.jumps.partition_point(|&(a, _)| a <= t + ANGLE_TOL);
        let atomic = if k == 0 { 0.0 } else { self.cumulative[k - 1] };
        atomic + self.densities.iter().map(|d| d.cdf(t)).sum::<f64>()
    }

    pub fn total(&self) -> f64 {
        self.value(PI)
    }

    /// `int_0^a m(t) dt`, exact for both parts.
    pub fn integral(&self, a: f64) -> f64 {
        let atomic: f64 = self.jumps.iter().map(|&(theta, w)| w * (a - theta).max(0.0)).sum();
        atomic + self.densities.iter().map(|d| d.cdf_integral(0.0, a)).sum::<f64>()
    }

    /// `int_lo^hi m(t) dt`.
    pub fn integral_between(&self, lo: f64, hi: f64) -> f64 {
        self.integral(hi) - self.integral(lo)
    }

    /// Stieltjes integral `int_{[0, pi]} f dm` for `f` piecewise linear with
    /// the listed kinks (exact).
    pub fn stieltjes<F: Fn(f64) -> f64>(&self, f: F, kinks: &[f64]) -> f64 {
        let atomic: f64 = self.jumps.iter().map(|&(theta, w)| w * f(theta)).sum();
        atomic + self.densities.iter().map(|d| d.integrate_piecewise_linear(&f, kinks)).sum::<f64>()
    }
}

/// JSON form of a measure: `{"components": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub re: f64,
    pub im: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentSpec {
    Atoms {
        points: Vec<PointSpec>,
    },
    UniformCircle {
        radius: f64,
        mass: f64,
    },
    ExtremalTail {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mass_scale: Option<f64>,
    },
    Tabulated {
        r_grid: Vec<f64>,
        theta_grid: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

impl MeasureSpec {
    pub fn into_measure(self) -> Result<Measure> {
        let mut components = Vec::new();
        for c in self.components {
            match c {
                ComponentSpec::Atoms { points } => components.extend(
                    points
                        .into_iter()
                        .map(|p| Component::Atom(Atom { location: Complex64::new(p.re, p.im), mass: p.mass })),
                ),
                ComponentSpec::UniformCircle { radius, mass } => {
                    components.push(Component::UniformCircle(UniformCircle { radius, mass }))
                }
                ComponentSpec::ExtremalTail { alpha, mass_scale } => components.push(Component::ExtremalTail(
                    ExtremalTail::new(alpha, mass_scale.unwrap_or(1.0))
                        .map_err(|e| Error::InvalidMeasure(e.to_string()))?,
                )),
                ComponentSpec::Tabulated { r_grid, theta_grid, values } => {
                    components.push(Component::Tabulated(TabulatedDensity::new(r_grid, theta_grid, values)?))
                }
            }
        }
        Measure::new(components)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadratureSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pair_at_i() -> Measure {
        Measure::from_atoms([(c(0.0, 1.0), 0.5), (c(0.0, -1.0), 0.5)]).unwrap()
    }

    #[test]
    fn principal_arg_branch() {
        assert_eq!(principal_arg(c(-1.0, 0.0)), PI);
        assert_eq!(principal_arg(c(-1.0, -0.0)), PI);
        assert_eq!(principal_arg(c(1.0, 0.0)), 0.0);
    }

    #[test]
    fn total_mass_examples() {
        assert_eq!(Measure::from_atoms([(c(1.0, 0.0), 1.0)]).unwrap().total_mass(), 1.0);
        assert_eq!(Measure::uniform_circle(1.0, 1.0).unwrap().total_mass(), 1.0);
        let tail = Measure::new(vec![Component::ExtremalTail(ExtremalTail::new(PI / 4.0, 1.0).unwrap())]).unwrap();
        assert!((tail.total_mass() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tail_mass_by_two_dimensional_quadrature() {
        let e = ExtremalTail::new(PI / 4.0, 1.0).unwrap();
        let spec = QuadratureSpec::improper();
        // Integrate density * r over r (half line) and theta over the support.
        let radial = crate::quadrature::integrate_halfline(|r| e.density(r, PI) * r, &spec).unwrap();
        let angular = integrate(|_| 1.0, 2.0 * e.alpha, 2.0 * PI - 2.0 * e.alpha, &spec).unwrap();
        assert!((radial * angular - 2.0).abs() < 1e-8);
    }

    #[test]
    fn sector_mass_examples() {
        let circle = Measure::uniform_circle(1.0, 1.0).unwrap();
        assert!((circle.sector_mass(PI / 3.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let pair = pair_at_i();
        assert_eq!(pair.sector_mass(PI / 4.0).unwrap(), 0.0);
        assert_eq!(pair.sector_mass(PI / 2.0).unwrap(), 1.0);
        assert!(matches!(pair.sector_mass(-0.1), Err(Error::Domain { .. })));
        assert!(matches!(pair.sector_mass(3.2), Err(Error::Domain { .. })));
    }

    #[test]
    fn boundary_atoms_are_inside() {
        let m = Measure::from_atoms([(Complex64::from_polar(1.0, PI / 7.0), 1.0)]).unwrap();
        assert_eq!(m.sector_mass(PI / 7.0).unwrap(), 1.0);
        assert_eq!(m.angular_projection().value(PI / 7.0), 1.0);
    }

    #[test]
    fn projection_examples() {
        let circle = Measure::uniform_circle(1.0, 1.0).unwrap().angular_projection();
        for k in 0..=10 {
            let t = PI * k as f64 / 10.0;
            assert!((circle.value(t) - t / PI).abs() < 1e-15);
        }
        let point = Measure::from_atoms([(c(2.0, 0.0), 1.0)]).unwrap().angular_projection();
        assert_eq!(point.value(0.0), 1.0);
        assert_eq!(point.jumps(), &[(0.0, 1.0)]);

        let third = 1.0 / 3.0;
        let cube = Measure::from_atoms([
            (Complex64::from_polar(1.0, PI / 3.0), third),
            (Complex64::from_polar(1.0, -PI / 3.0), third),
            (c(-1.0, 0.0), third),
        ])
        .unwrap()
        .angular_projection();
        assert_eq!(cube.value(PI / 3.0 - 1e-6), 0.0);
        assert!((cube.value(PI / 3.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((cube.value(PI - 1e-6) - 2.0 / 3.0).abs() < 1e-15);
        assert!((cube.value(PI) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetry_examples() {
        assert!(pair_at_i().check_symmetry(SYMMETRY_TOL_EXACT));
        assert!(!Measure::from_atoms([(c(0.0, 1.0), 1.0)]).unwrap().check_symmetry(SYMMETRY_TOL_EXACT));
        let off_axis = Measure::from_atoms([(c(1.0, 1.0), 0.5), (c(1.0, -1.2), 0.5)]).unwrap();
        assert!(!off_axis.check_symmetry(SYMMETRY_TOL_EXACT));
        assert!(Measure::from_atoms([(c(-1.0, 0.0), 1.0)]).unwrap().check_symmetry(SYMMETRY_TOL_EXACT));
    }

    #[test]
    fn rejects_mass_at_origin_and_bad_components() {
        assert!(Measure::from_atoms([(c(0.0, 0.0), 1.0)]).is_err());
        assert!(Measure::from_atoms([(c(1.0, 0.0), -1.0)]).is_err());
        assert!(Measure::uniform_circle(0.0, 1.0).is_err());
        assert!(ExtremalTail::new(PI / 2.0, 1.0).is_err());
        assert!(TabulatedDensity::new(vec![1.0, 0.5], vec![0.0, 1.0], vec![vec![1.0; 2]; 2]).is_err());
        assert!(TabulatedDensity::new(vec![0.5, 1.0], vec![0.0, 1.0], vec![vec![1.0; 3]; 2]).is_err());
        assert!(TabulatedDensity::new(vec![0.5, 1.0], vec![0.0, 1.0], vec![vec![-1.0; 2]; 2]).is_err());
    }

    fn sample_tab() -> TabulatedDensity {
        let r = vec![0.5, 0.8, 1.5, 2.0];
        let th = vec![-2.0, -0.5, 0.5, 2.0];
        let vals = vec![
            vec![0.1, 0.3, 0.3, 0.1],
            vec![0.2, 0.0, 0.0, 0.2],
            vec![0.4, 0.1, 0.1, 0.4],
            vec![0.0, 0.2, 0.2, 0.0],
        ];
        TabulatedDensity::new(r, th, vals).unwrap()
    }

    fn tab_mass_numeric(d: &TabulatedDensity, th_lo: f64, th_hi: f64) -> f64 {
        let spec = QuadratureSpec::with_tol(1e-11);
        let mut r_pts = d.r_grid().to_vec();
        r_pts.dedup();
        integrate(
            |theta| {
                crate::quadrature::integrate_points(|r| d.density(r, theta) * r, &r_pts, &spec)
                    .unwrap()
                    .value
            },
            th_lo,
            th_hi,
            &spec,
        )
        .unwrap()
    }

    #[test]
    fn tabulated_mass_matches_nested_quadrature() {
        let d = sample_tab();
        let exact = d.total_mass();
        let numeric = tab_mass_numeric(&d, -2.0, 2.0);
        assert!((exact - numeric).abs() < 1e-8, "{exact} vs {numeric}");
        let m = Measure::new(vec![Component::Tabulated(d.clone())]).unwrap();
        let sector = m.sector_mass(1.0).unwrap();
        let numeric = tab_mass_numeric(&d, -1.0, 1.0);
        assert!((sector - numeric).abs() < 1e-8);
        assert!(m.check_symmetry(SYMMETRY_TOL_TABULATED));
        let proj = m.angular_projection();
        for k in 0..=20 {
            let t = PI * k as f64 / 20.0;
            assert!((proj.value(t) - m.sector_mass(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn asymmetric_tabulated_detected() {
        let r = vec![0.5, 2.0];
        let th = vec![0.1, 1.0];
        let d = TabulatedDensity::new(r, th, vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let m = Measure::new(vec![Component::Tabulated(d)]).unwrap();
        assert!(!m.check_symmetry(SYMMETRY_TOL_TABULATED));
    }

    #[test]
    fn json_roundtrip_and_strictness() {
        let text = r#"{"components":[
            {"type":"atoms","points":[{"re":0,"im":1,"mass":0.25},{"re":0,"im":-1,"mass":0.25}]},
            {"type":"uniform_circle","radius":2.0,"mass":0.5},
            {"type":"extremal_tail","alpha":0.5},
            {"type":"tabulated","r_grid":[0.5,1.0],"theta_grid":[-1.0,1.0],"values":[[1,1],[1,1]]}
        ]}"#;
        let m = Measure::from_json(text).unwrap();
        assert_eq!(m.components().len(), 5);
        assert_eq!(Measure::from_json(&m.to_json()).unwrap(), m);
        assert!(Measure::from_json(r#"{"components":[{"type":"uniform_circle","radius":1,"mass":1,"x":2}]}"#).is_err());
        assert!(Measure::from_json(r#"{"components":[],"extra":1}"#).is_err());
        assert!(Measure::from_json(r#"{"components":[{"type":"blob"}]}"#).is_err());
        assert!(Measure::from_json(r#"{"components":[{"type":"atoms","points":[{"re":1,"im":0,"mass":1,"w":0}]}]}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_measure() -> impl Strategy<Value = Measure> {
            let atom = (0.1..5.0f64, -PI..PI, 0.0..1.0f64);
            (prop::collection::vec(atom, 0..12), prop::option::of((0.2..3.0f64, 0.0..1.0f64)), prop::option::of((0.05..1.5f64, 0.1..1.0f64)))
                .prop_map(|(atoms, circle, tail)| {
                    let mut comps: Vec<Component> = atoms
                        .into_iter()
                        .map(|(r, th, m)| Component::Atom(Atom { location: Complex64::from_polar(r, th), mass: m }))
                        .collect();
                    if let Some((radius, mass)) = circle {
                        comps.push(Component::UniformCircle(UniformCircle { radius, mass }));
                    }
                    if let Some((alpha, s)) = tail {
                        comps.push(Component::ExtremalTail(ExtremalTail::new(alpha, s).unwrap()));
                    }
                    Measure::new(comps).unwrap()
                })
        }

        proptest! {
            #[test]
            fn sector_mass_monotone_and_complete(m in arb_measure()) {
                let mut prev = 0.0;
                for k in 0..=1000 {
                    let t = PI * k as f64 / 1000.0;
                    let v = m.sector_mass(t).unwrap();
                    prop_assert!(v >= prev - 1e-15);
                    prev = v;
                }
                prop_assert!((m.sector_mass(PI).unwrap() - m.total_mass()).abs() <= 1e-10);
            }

            #[test]
            fn projection_is_additive_and_pointwise_exact(a in arb_measure(), b in arb_measure(), t in 0.0..PI) {
                let u = a.union(&b);
                let sum = a.angular_projection().value(t) + b.angular_projection().value(t);
                prop_assert!((u.angular_projection().value(t) - sum).abs() <= 1e-12);
                prop_assert!((u.angular_projection().value(t) - u.sector_mass(t).unwrap()).abs() <= 1e-12);
                let ia = a.angular_projection().integral(t) + b.angular_projection().integral(t);
                prop_assert!((u.angular_projection().integral(t) - ia).abs() <= 1e-12);
            }

            #[test]
            fn atomic_sector_mass_is_brute_force(atoms in prop::collection::vec((0.1..5.0f64, -PI..PI, 0.0..1.0f64), 1..30), t in 0.0..PI) {
                let pts: Vec<(Complex64, f64)> = atoms.iter().map(|&(r, th, m)| (Complex64::from_polar(r, th), m)).collect();
                let m = Measure::from_atoms(pts.clone()).unwrap();
                let brute: f64 = pts.iter().filter(|(z, _)| z.im.atan2(z.re).abs() <= t + ANGLE_TOL).map(|(_, w)| w).sum();
                prop_assert_eq!(m.sector_mass(t).unwrap(), brute);
            }
        }
    }
}
