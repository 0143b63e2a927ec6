//! Measures attaining equality in the pointwise sector bound for every
//! `alpha in (0, pi/2)`.
//!
//! Start from `u(z) = log|z^2 + 1|` and fold it onto the double sector
//! `|Arg z| < 2 alpha` by the power map `z -> z^{pi / (2 alpha)}`, continuing
//! radially outside:
//!
//! ```text
//! u_alpha(z) = log| z^{pi/alpha} + 1 |     for |Arg z| < 2 alpha,
//!              log( |z|^{pi/alpha} + 1 )    otherwise.
//! ```
//!
//! Its Riesz measure `lambda_alpha` has unit atoms at `e^{+-i alpha}` and the
//! radial density `rho_alpha` on `|Arg z| >= 2 alpha`, total mass `pi/alpha`.
//! The normalization `mu_alpha = lambda_alpha / lambda_alpha(C)` puts mass
//! `2 alpha / pi` on the closed sector `|Arg z| <= alpha`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exec::Execution;
use crate::measure::{principal_arg, Atom, Component, ExtremalTail, Measure};
use crate::obrechkoff::{check_obrechkoff, check_theorem1, default_a_grid};
use crate::potential::{angle_grid, check_radial_majorization_with, log_abs_one_minus, log_spaced};
use crate::quadrature::{integrate_halfline, QuadratureSpec};
use crate::report::{CheckRecord, VerificationReport, WorstAt};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalSpec {
    alpha: f64,
}

impl ExtremalSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < PI / 2.0) {
            return Err(domain("alpha", alpha));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exponent `pi / alpha` of the folded potential.
    pub fn power(&self) -> f64 {
        PI / self.alpha
    }
}

/// `log|z^2 + 1|`.
pub fn base_potential(z: Complex64) -> f64 {
    (z * z + 1.0).norm().ln()
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

pub fn u_alpha(z: Complex64, spec: ExtremalSpec) -> f64 {
    u_alpha_raw(z, spec.alpha)
}

pub(crate) fn u_alpha_raw(z: Complex64, alpha: f64) -> f64 {
    let r = z.norm();
    if r == 0.0 {
        return 0.0;
    }
    let p = PI / alpha;
    let lr = p * r.ln();
    let theta = principal_arg(z);
    if theta.abs() >= 2.0 * alpha {
        return softplus(lr);
    }
    let phase = Complex64::from_polar(1.0, p * theta);
    if lr > 30.0 {
        // log|w + 1| = log|w| + log|1 + 1/w|
        return lr + (Complex64::new(1.0, 0.0) + (-lr).exp() * phase.conj()).norm().ln();
    }
    let s = lr.exp() * phase + 1.0;
    let modulus = s.norm();
    if modulus <= 64.0 * f64::EPSILON {
        f64::NEG_INFINITY
    } else {
        modulus.ln()
    }
}

/// Radial density `(pi / (2 alpha^2)) r^{pi/alpha - 2} / (1 + r^{pi/alpha})^2`.
pub fn rho_alpha(r: f64, spec: ExtremalSpec) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain("r", r));
    }
    Ok(rho_alpha_raw(r, spec.alpha))
}

pub(crate) fn rho_alpha_raw(r: f64, alpha: f64) -> f64 {
    let p = PI / alpha;
    let lr = r.ln();
    PI / (2.0 * alpha * alpha) * ((p - 2.0) * lr - 2.0 * softplus(p * lr)).exp()
}

/// Mass bookkeeping of `lambda_alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaMasses {
    pub alpha: f64,
    pub atom_mass_each: f64,
    /// `(pi - 2 alpha) / alpha`.
    pub sector_mass: f64,
    /// `(2 pi - 4 alpha) int_0^inf r rho_alpha(r) dr`, by quadrature.
    pub sector_mass_quadrature: f64,
    /// `pi / alpha`.
    pub total: f64,
    /// `2 + sector_mass_quadrature`.
    pub total_quadrature: f64,
}

/// Agreement required between closed-form and quadrature sector masses.
pub const MASS_MISMATCH_TOL: f64 = 1e-6;

pub fn lambda_alpha_masses(spec: ExtremalSpec) -> Result<LambdaMasses> {
    let alpha = spec.alpha;
    let qspec = QuadratureSpec::with_tol(1e-12);
    let radial = integrate_halfline(|r| r * rho_alpha_raw(r, alpha), &qspec)?;
    let sector_mass = (PI - 2.0 * alpha) / alpha;
    let sector_mass_quadrature = (2.0 * PI - 4.0 * alpha) * radial;
    if (sector_mass - sector_mass_quadrature).abs() > MASS_MISMATCH_TOL {
        return Err(Error::QuadratureMismatch { closed: sector_mass, numeric: sector_mass_quadrature });
    }
    Ok(LambdaMasses {
        alpha,
        atom_mass_each: 1.0,
        sector_mass,
        sector_mass_quadrature,
        total: PI / alpha,
        total_quadrature: 2.0 + sector_mass_quadrature,
    })
}

/// The probability measure `lambda_alpha / lambda_alpha(C)`.
pub fn mu_alpha(spec: ExtremalSpec) -> Measure {
    let alpha = spec.alpha;
    let w = alpha / PI;
    let z = Complex64::from_polar(1.0, alpha);
    Measure::new(vec![
        Component::Atom(Atom { location: z, mass: w }),
        Component::Atom(Atom { location: z.conj(), mass: w }),
        Component::ExtremalTail(ExtremalTail { alpha, mass_scale: w }),
    ])
    .expect("mu_alpha components are valid for alpha in (0, pi/2)")
}

/// Equal-mass atomic approximation of `mu_alpha`: the two atoms plus a
/// product grid on the tail (angular midpoints on `[2 alpha, 2 pi - 2 alpha]`,
/// radii at midpoint quantiles of the radial law).
pub fn discretize_mu_alpha(spec: ExtremalSpec, n_radial: usize, n_angular: usize) -> Measure {
    let alpha = spec.alpha;
    let w = alpha / PI;
    let tail = ExtremalTail { alpha, mass_scale: w };
    let node_mass = tail.total_mass() / (n_radial * n_angular) as f64;
    let width = tail.angular_width();
    let radii: Vec<f64> = (0..n_radial).map(|i| tail.radial_quantile((i as f64 + 0.5) / n_radial as f64)).collect();
    let z = Complex64::from_polar(1.0, alpha);
    let mut comps = vec![
        Component::Atom(Atom { location: z, mass: w }),
        Component::Atom(Atom { location: z.conj(), mass: w }),
    ];
    comps.reserve(n_radial * n_angular);
    for j in 0..n_angular {
        let phi = 2.0 * alpha + width * (j as f64 + 0.5) / n_angular as f64;
        let dir = Complex64::from_polar(1.0, phi);
        for &r in &radii {
            comps.push(Component::Atom(Atom { location: dir * r, mass: node_mass }));
        }
    }
    Measure::new(comps).expect("discretization nodes avoid the origin")
}

/// Probe points inside the measure-free sector, away from the atoms.
pub fn consistency_probes(spec: ExtremalSpec) -> Vec<Complex64> {
    let alpha = spec.alpha;
    let mut out = Vec::with_capacity(20);
    for &r in &[0.4, 0.7, 1.5, 2.5] {
        for &f in &[-1.5, -0.5, 0.0, 0.5, 1.5] {
            out.push(Complex64::from_polar(r, f * alpha));
        }
    }
    out
}

/// Largest deviation from a constant of `u_disc - (alpha/pi) u_alpha` over
/// the probes, where `u_disc` is the normalized potential of `disc`.
pub fn potential_deviation(spec: ExtremalSpec, disc: &Measure, probes: &[Complex64], exec: Execution) -> f64 {
    let nodes: Vec<(Complex64, f64)> = disc.atoms().map(|a| (a.location, a.mass)).collect();
    let scale = spec.alpha / PI;
    let diffs = exec.map(probes, |&z| {
        let numeric: f64 = nodes.iter().map(|&(zeta, m)| m * log_abs_one_minus(z / zeta)).sum();
        numeric - scale * u_alpha(z, spec)
    });
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    diffs.iter().map(|d| (d - mean).abs()).fold(0.0, f64::max)
}

/// Nodes of the discretization used by [`verify_extremal`].
pub const DISCRETIZATION_RADIAL: usize = 400;
pub const DISCRETIZATION_ANGULAR: usize = 250;
/// Bound on the deviation from constancy in the potential-consistency check.
pub const POTENTIAL_CONSISTENCY_TOL: f64 = 1e-3;

/// Runs the four checks on `mu_alpha`:
/// radial majorization of `u_alpha` on a 64 x 128 grid, equality in the
/// pointwise bound at `alpha`, the averaged bound with equality at
/// `a = 2 alpha`, and potential consistency of a 10^5-node discretization.
pub fn verify_extremal(spec: ExtremalSpec, tol: f64) -> Result<VerificationReport> {
    verify_extremal_with(spec, tol, Execution::default())
}

pub fn verify_extremal_with(spec: ExtremalSpec, tol: f64, exec: Execution) -> Result<VerificationReport> {
    let alpha = spec.alpha;
    let mu = mu_alpha(spec);
    let mut report = VerificationReport::default();

    let maj = check_radial_majorization_with(
        |z| Ok(u_alpha(z, spec)),
        &log_spaced(0.1, 10.0, 64),
        &angle_grid(128),
        tol,
        exec,
    )?;
    report.push(CheckRecord::from_slack(
        "radial_majorization",
        maj.worst_slack,
        Some(WorstAt::Point { re: maj.worst_point[0], im: maj.worst_point[1] }),
        tol,
    ));

    let obr = check_obrechkoff(&mu, &[alpha], tol)?;
    let gap = obr.rhs[0] - obr.lhs[0];
    report.push(
        CheckRecord::from_slack("obrechkoff_equality", 0.0 - gap.abs(), Some(WorstAt::Parameter { name: "alpha".into(), value: alpha }), tol)
            .with_detail(format!("m(alpha) = {:.17e}, 2 alpha / pi = {:.17e}", obr.lhs[0], obr.rhs[0])),
    );

    let mut grid = default_a_grid(200);
    grid.push(2.0 * alpha);
    grid.sort_by(f64::total_cmp);
    let thm = check_theorem1(&mu, &grid, tol)?;
    let at_2alpha = thm.margin_at(2.0 * alpha).unwrap_or(f64::NAN);
    let slack = thm.worst_margin.min(-at_2alpha.abs());
    report.push(
        CheckRecord::from_slack("theorem1_equality", slack, Some(WorstAt::Parameter { name: "a".into(), value: 2.0 * alpha }), tol)
            .with_detail(format!("worst margin {:.3e} at a = {:.6}; margin at 2 alpha {:.3e}", thm.worst_margin, thm.worst_at, at_2alpha)),
    );

    let disc = discretize_mu_alpha(spec, DISCRETIZATION_RADIAL, DISCRETIZATION_ANGULAR);
    let deviation = potential_deviation(spec, &disc, &consistency_probes(spec), exec);
    report.push(
        CheckRecord::from_slack("potential_consistency", -deviation, None, POTENTIAL_CONSISTENCY_TOL)
            .with_detail(format!("{} nodes, 20 probes", disc.components().len())),
    );
    Ok(report)
}

/// `(t, m(t))` samples of the sector-mass function of `mu_alpha`.
pub fn sector_mass_table(spec: ExtremalSpec, n: usize) -> Vec<(f64, f64)> {
    let proj = mu_alpha(spec).angular_projection();
    (0..=n)
        .map(|k| {
            let t = PI * k as f64 / n as f64;
            (t, proj.value(t))
        })
        .collect()
}
