//! Logarithmic potentials and the radial-majorization sweep.
//!
//! Two kernels are provided. [`log_potential`] uses `log|z - zeta|` on the
//! closed unit disk and `log|1 - z/zeta|` outside it; [`normalized_potential`]
//! uses `log|1 - z/zeta|` everywhere, so it vanishes at the origin. For an
//! origin-free measure the two differ by the constant
//! `int_{|zeta| <= 1} log|zeta| dmu`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::Execution;
use crate::extremal;
use crate::measure::{principal_arg, Component, ExtremalTail, Measure, TabulatedDensity};
use crate::quadrature::{integrate_points, QuadratureSpec};

/// `log|1 - w|`, accurate for small `|w|`.
pub fn log_abs_one_minus(w: Complex64) -> f64 {
    if w.norm_sqr() < 0.25 {
        0.5 * (w.norm_sqr() - 2.0 * w.re).ln_1p()
    } else {
        (Complex64::new(1.0, 0.0) - w).norm().ln()
    }
}

/// Split-kernel potential; `-inf` exactly at atoms of the measure.
pub fn log_potential(m: &Measure, z: Complex64) -> Result<f64> {
    let mut total = 0.0;
    for c in m.components() {
        total += match c {
            Component::Atom(a) if a.mass == 0.0 => 0.0,
            Component::Atom(a) => {
                if a.location.norm() <= 1.0 {
                    a.mass * (z - a.location).norm().ln()
                } else {
                    a.mass * log_abs_one_minus(z / a.location)
                }
            }
            Component::UniformCircle(c) => {
                // Circle means of log|z - zeta| and log|1 - z/zeta|.
                if c.radius <= 1.0 {
                    c.mass * z.norm().max(c.radius).ln()
                } else {
                    c.mass * (z.norm() / c.radius).ln().max(0.0)
                }
            }
            Component::ExtremalTail(e) => tail_potential(e, z) + tail_inner_log_moment(e),
            Component::Tabulated(d) => tabulated_potential(d, z)? + tabulated_inner_log_moment(d)?,
        };
    }
    Ok(total)
}

/// Potential with kernel `log|1 - z/zeta|`; zero at the origin.
pub fn normalized_potential(m: &Measure, z: Complex64) -> Result<f64> {
    let mut total = 0.0;
    for c in m.components() {
        total += match c {
            Component::Atom(a) if a.mass == 0.0 => 0.0,
            Component::Atom(a) => a.mass * log_abs_one_minus(z / a.location),
            Component::UniformCircle(c) => c.mass * (z.norm() / c.radius).ln().max(0.0),
            Component::ExtremalTail(e) => tail_potential(e, z),
            Component::Tabulated(d) => tabulated_potential(d, z)?,
        };
    }
    Ok(total)
}

/// `int_{|zeta| <= 1} log|zeta| dmu`, the gap between the two potentials.
pub fn kernel_offset(m: &Measure) -> Result<f64> {
    let mut total = 0.0;
    for c in m.components() {
        total += match c {
            Component::Atom(a) if a.location.norm() <= 1.0 => a.mass * a.location.norm().ln(),
            Component::Atom(_) => 0.0,
            Component::UniformCircle(c) => c.mass * c.radius.ln().min(0.0),
            Component::ExtremalTail(e) => tail_inner_log_moment(e),
            Component::Tabulated(d) => tabulated_inner_log_moment(d)?,
        };
    }
    Ok(total)
}

/// Normalized potential of an extremal tail.
///
/// With unit scale the tail plus unit atoms at `e^{+-i alpha}` is the Riesz
/// measure of `u_alpha`, and both `u_alpha` and the potential vanish at 0, so
/// the tail potential is `u_alpha` minus the two atom potentials. Near the
/// atoms that difference is harmonic and is evaluated by a circle mean.
fn tail_potential(e: &ExtremalTail, z: Complex64) -> f64 {
    let atom = Complex64::from_polar(1.0, e.alpha);
    let near = (z - atom).norm().min((z - atom.conj()).norm());
    let direct = |w: Complex64| {
        extremal::u_alpha_raw(w, e.alpha) - log_abs_one_minus(w * atom.conj()) - log_abs_one_minus(w * atom)
    };
    let value = if near < 1e-4 {
        const N: usize = 32;
        let radius = 0.1 * e.alpha;
        (0..N)
            .map(|k| direct(z + Complex64::from_polar(radius, 2.0 * PI * k as f64 / N as f64)))
            .sum::<f64>()
            / N as f64
    } else {
        direct(z)
    };
    e.mass_scale * value
}

/// `int_{|zeta| <= 1} log|zeta| d(tail)`; closed form `-(2pi - 4alpha) ln2 / 2pi` per unit scale.
fn tail_inner_log_moment(e: &ExtremalTail) -> f64 {
    -e.mass_scale * e.angular_width() * std::f64::consts::LN_2 / (2.0 * PI)
}

fn tabulated_inner_log_moment(d: &TabulatedDensity) -> Result<f64> {
    let spec = QuadratureSpec::with_tol(1e-12);
    let r = d.r_grid();
    if r[0] >= 1.0 {
        return Ok(0.0);
    }
    let mut pts: Vec<f64> = r.iter().copied().filter(|&x| x < 1.0).collect();
    if r[r.len() - 1] > 1.0 {
        pts.push(1.0);
    }
    if pts.len() < 2 {
        return Ok(0.0);
    }
    // The marginal over theta is piecewise linear, so trapezoid over theta nodes is exact.
    let th = d.theta_grid();
    let mut node = Vec::with_capacity(th.len());
    for &t in th {
        node.push(integrate_points(|x| d.density(x, t) * x * x.ln(), &pts, &spec)?.value);
    }
    Ok(th.windows(2).zip(node.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum())
}

/// Nested adaptive quadrature over the polar grid, in `(ln r, theta)`.
fn tabulated_potential(d: &TabulatedDensity, z: Complex64) -> Result<f64> {
    if z.norm() == 0.0 {
        return Ok(0.0);
    }
    let spec = QuadratureSpec::with_tol(1e-10);
    let log_r: Vec<f64> = d.r_grid().iter().map(|r| r.ln()).collect();
    let sz = z.norm().ln();
    let az = principal_arg(z);
    let mut s_pts = log_r.clone();
    if sz > s_pts[0] && sz < s_pts[s_pts.len() - 1] {
        s_pts.push(sz);
        s_pts.sort_by(f64::total_cmp);
    }
    let mut t_pts = d.theta_grid().to_vec();
    if az > t_pts[0] && az < t_pts[t_pts.len() - 1] && !t_pts.contains(&az) {
        t_pts.push(az);
        t_pts.sort_by(f64::total_cmp);
    }
    let inner = |theta: f64| -> Result<f64> {
        let f = |s: f64| {
            let r = s.exp();
            let v = d.density(r, theta);
            if v == 0.0 {
                return 0.0;
            }
            let k = log_abs_one_minus(z / Complex64::from_polar(r, theta));
            let out = v * k * r * r;
            if out.is_finite() {
                out
            } else {
                0.0
            }
        };
        integrate_points(f, &s_pts, &spec).map(|e| e.value)
    };
    // Propagate the first inner failure instead of hiding it in the outer sum.
    let failure = std::cell::RefCell::new(None);
    let outer = integrate_points(
        |theta| match inner(theta) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        &t_pts,
        &spec,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(outer.value)
}

/// Numerical potential of an extremal tail by quadrature over its support.
/// Independent of the closed form used by [`normalized_potential`].
pub fn tail_potential_by_quadrature(e: &ExtremalTail, z: Complex64, spec: &QuadratureSpec) -> Result<f64> {
    let lo = 2.0 * e.alpha;
    let hi = 2.0 * PI - 2.0 * e.alpha;
    let rz = z.norm();
    let radial = |phi: f64| -> f64 {
        let f = |r: f64| {
            let v = e.density(r, PI) * r * log_abs_one_minus(z / Complex64::from_polar(r, phi));
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        let breaks: &[f64] = if rz > 0.0 { &[rz] } else { &[] };
        crate::quadrature::integrate_halfline_points(f, breaks, spec).unwrap_or(f64::NAN)
    };
    let mut pts = vec![lo, hi];
    let az = principal_arg(z).rem_euclid(2.0 * PI);
    if az > lo && az < hi {
        pts.insert(1, az);
    }
    Ok(integrate_points(radial, &pts, spec)?.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorizationReport {
    /// Minimum over the grid of `u(r) - u(r e^{i theta})`.
    pub worst_slack: f64,
    pub worst_point: [f64; 2],
    pub grid_size: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// 64 log-spaced radii over `[0.1 r_min, 10 r_max]` of the support and 128
/// equispaced angles in `(-pi, pi]`.
pub fn default_grid(m: &Measure) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = m.support_radii().unwrap_or((1.0, 1.0));
    (log_spaced(0.1 * lo, 10.0 * hi, 64), angle_grid(128))
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `n` equispaced angles `-pi + 2 pi (j + 1) / n`, ending at `pi`.
pub fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| -PI + 2.0 * PI * (j + 1) as f64 / n as f64).collect()
}

/// Sweeps `u(r) - u(r e^{i theta})` for the normalized potential of `m`.
pub fn check_radial_majorization(m: &Measure, r_grid: &[f64], theta_grid: &[f64], tol: f64) -> Result<MajorizationReport> {
    check_radial_majorization_with(|z| normalized_potential(m, z), r_grid, theta_grid, tol, Execution::default())
}

/// Majorization sweep for an arbitrary potential `u`.
///
/// `-inf` values of `u(r e^{i theta})` satisfy the inequality. Ties for the
/// worst point go to the smallest radius, then the smallest angle.
pub fn check_radial_majorization_with<U>(
    u: U,
    r_grid: &[f64],
    theta_grid: &[f64],
    tol: f64,
    exec: Execution,
) -> Result<MajorizationReport>
where
    U: Fn(Complex64) -> Result<f64> + Sync + Send,
{
    let mut radii = r_grid.to_vec();
    radii.sort_by(f64::total_cmp);
    let mut angles = theta_grid.to_vec();
    angles.sort_by(f64::total_cmp);

    let rows: Vec<Result<(f64, [f64; 2])>> = exec.map(&radii, |&r| {
        let base = u(Complex64::new(r, 0.0))?;
        let mut best = (f64::INFINITY, [r, 0.0]);
        for &theta in &angles {
            let value = u(Complex64::from_polar(r, theta))?;
            let slack = if value == f64::NEG_INFINITY {
                f64::INFINITY
            } else if value.is_nan() || base.is_nan() {
                f64::NEG_INFINITY
            } else {
                base - value
            };
            if slack < best.0 {
                best = (slack, [r, theta]);
            }
        }
        Ok(best)
    });

    let mut worst = (f64::INFINITY, [radii.first().copied().unwrap_or(0.0), angles.first().copied().unwrap_or(0.0)]);
    for row in rows {
        let row = row?;
        if row.0 < worst.0 {
            worst = row;
        }
    }
    let [r, theta] = worst.1;
    let point = Complex64::from_polar(r, theta);
    Ok(MajorizationReport {
        worst_slack: worst.0,
        worst_point: [point.re, point.im],
        grid_size: radii.len() * angles.len(),
        tolerance: tol,
        passed: worst.0 >= -tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn log_potential_examples() {
        let circle = Measure::uniform_circle(1.0, 1.0).unwrap();
        assert!((log_potential(&circle, c(2.0, 0.0)).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_potential(&circle, c(0.5, 0.0)).unwrap(), 0.0);
        let point = Measure::from_atoms([(c(-1.0, 0.0), 1.0)]).unwrap();
        assert!((log_potential(&point, c(1.0, 0.0)).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_potential(&point, c(-1.0, 0.0)).unwrap(), f64::NEG_INFINITY);
        let outer = Measure::from_atoms([(c(3.0, 0.0), 1.0)]).unwrap();
        assert_eq!(log_potential(&outer, c(3.0, 0.0)).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn normalized_potential_examples() {
        let point = Measure::from_atoms([(c(-1.0, 0.0), 1.0)]).unwrap();
        assert!((normalized_potential(&point, c(0.0, 1.0)).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
        let circle = Measure::uniform_circle(1.0, 1.0).unwrap();
        assert!((normalized_potential(&circle, c(2.0, 0.0)).unwrap() - 2f64.ln()).abs() < 1e-15);
        let roots = Measure::from_atoms([(c(0.0, 1.0), 0.5), (c(0.0, -1.0), 0.5)]).unwrap();
        assert!((normalized_potential(&roots, c(3.0, 0.0)).unwrap() - 0.5 * 10f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn normalized_potential_vanishes_at_origin() {
        let tail = ExtremalTail::new(0.6, 0.3).unwrap();
        let tab = TabulatedDensity::new(vec![0.5, 2.0], vec![-1.0, 1.0], vec![vec![1.0; 2]; 2]).unwrap();
        let m = Measure::new(vec![
            Component::Atom(crate::measure::Atom { location: c(0.3, -2.0), mass: 0.7 }),
            Component::UniformCircle(crate::measure::UniformCircle { radius: 0.4, mass: 0.2 }),
            Component::ExtremalTail(tail),
            Component::Tabulated(tab),
        ])
        .unwrap();
        assert_eq!(normalized_potential(&m, c(0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn circle_potential_is_log_plus() {
        let circle = Measure::uniform_circle(1.0, 1.0).unwrap();
        for r in log_spaced(0.05, 20.0, 25) {
            for theta in angle_grid(16) {
                let z = Complex64::from_polar(r, theta);
                let v = normalized_potential(&circle, z).unwrap();
                assert!((v - r.ln().max(0.0)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn kernel_gap_is_constant() {
        let m = Measure::from_atoms([(c(0.5, 0.2), 0.3), (c(2.0, -1.0), 0.4), (c(-0.2, -0.7), 0.3)])
            .unwrap()
            .union(&Measure::uniform_circle(0.7, 0.5).unwrap())
            .union(&Measure::uniform_circle(1.8, 0.5).unwrap());
        let offset = kernel_offset(&m).unwrap();
        let mut x: u64 = 12345;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let z = Complex64::from_polar(0.05 + 5.0 * next(), 2.0 * PI * next());
            let diff = log_potential(&m, z).unwrap() - normalized_potential(&m, z).unwrap();
            assert!((diff - offset).abs() < 1e-8);
        }
    }

    #[test]
    fn tail_closed_form_matches_quadrature() {
        let spec = QuadratureSpec::with_tol(1e-10);
        for &(alpha, scale) in &[(PI / 4.0, 1.0), (0.7, 0.25)] {
            let e = ExtremalTail::new(alpha, scale).unwrap();
            for &z in &[c(0.5, 0.1), c(2.0, 0.3), c(-1.5, 0.4), c(0.9, -0.2), Complex64::from_polar(1.0, alpha)] {
                let closed = tail_potential(&e, z);
                let numeric = tail_potential_by_quadrature(&e, z, &spec).unwrap();
                assert!((closed - numeric).abs() < 1e-7, "alpha {alpha} z {z}: {closed} vs {numeric}");
            }
        }
    }

    #[test]
    fn tail_log_moment_matches_quadrature() {
        let e = ExtremalTail::new(0.9, 1.0).unwrap();
        let spec = QuadratureSpec::with_tol(1e-12);
        let radial = integrate(|r: f64| r.ln() * e.density(r, PI) * r, 0.0, 1.0, &spec).unwrap();
        assert!((radial * e.angular_width() - tail_inner_log_moment(&e)).abs() < 1e-10);
    }

    #[test]
    fn tabulated_potential_against_fine_riemann_sum() {
        let tab = TabulatedDensity::new(vec![0.5, 1.0, 2.0], vec![-1.0, 0.0, 1.0], vec![
            vec![1.0, 0.5, 1.0],
            vec![0.2, 0.4, 0.2],
            vec![0.3, 0.1, 0.3],
        ])
        .unwrap();
        let m = Measure::new(vec![Component::Tabulated(tab.clone())]).unwrap();
        let z = c(-1.3, 0.4);
        let value = normalized_potential(&m, z).unwrap();
        // Midpoint rule in (ln r, theta) on a fine mesh, away from the log singularity.
        let n = 600;
        let (s0, s1) = (0.5f64.ln(), 2f64.ln());
        let mut sum = 0.0;
        for i in 0..n {
            let s = s0 + (s1 - s0) * (i as f64 + 0.5) / n as f64;
            for j in 0..n {
                let t = -1.0 + 2.0 * (j as f64 + 0.5) / n as f64;
                let r = s.exp();
                sum += tab.density(r, t) * r * r * log_abs_one_minus(z / Complex64::from_polar(r, t));
            }
        }
        sum *= (s1 - s0) * 2.0 / (n * n) as f64;
        assert!((value - sum).abs() < 1e-5, "{value} vs {sum}");
        let gap = log_potential(&m, z).unwrap() - value;
        assert!((gap - kernel_offset(&m).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn majorization_examples() {
        let roots = Measure::from_atoms([(c(0.0, 1.0), 0.5), (c(0.0, -1.0), 0.5)]).unwrap();
        let r = log_spaced(0.1, 10.0, 40);
        let th = angle_grid(64);
        let rep = check_radial_majorization(&roots, &r, &th, 1e-12).unwrap();
        assert!(rep.passed, "{rep:?}");

        let point = Measure::from_atoms([(c(1.0, 0.0), 1.0)]).unwrap();
        let rep = check_radial_majorization(&point, &[0.5], &[0.0, PI], 1e-12).unwrap();
        assert!(!rep.passed);
        assert!((rep.worst_slack - (0.5f64.ln() - 1.5f64.ln())).abs() < 1e-14);
        assert!((rep.worst_point[0] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn slack_at_zero_angle_is_zero() {
        let m = Measure::from_atoms([(c(-0.3, 1.1), 0.5), (c(-0.3, -1.1), 0.5)]).unwrap();
        let rep = check_radial_majorization(&m, &[0.2, 0.7, 3.0], &[0.0], 0.0).unwrap();
        assert_eq!(rep.worst_slack, 0.0);
        assert_eq!(rep.worst_point, [0.2, 0.0]);
    }

    #[test]
    fn tie_breaking_prefers_small_radius_then_angle() {
        // A constant potential makes every slack zero.
        let rep = check_radial_majorization_with(|_| Ok(1.0), &[3.0, 1.0, 2.0], &[0.5, -0.5], 0.0, Execution::Parallel).unwrap();
        assert_eq!(rep.worst_slack, 0.0);
        let expect = Complex64::from_polar(1.0, -0.5);
        assert_eq!(rep.worst_point, [expect.re, expect.im]);
        assert_eq!(rep.grid_size, 6);
    }
}
