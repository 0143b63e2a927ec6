//! Sector-mass inequalities for radially majorized measures.
//!
//! With `m(t) = mu{ |Arg z| <= t }`, a symmetric probability measure whose
//! potential satisfies `u(z) <= u(|z|)` obeys the averaged bound
//! `(1/a) int_0^a m(t) dt <= a / (2 pi)` for `a in (0, pi]`, and hence the
//! pointwise bound `m(alpha) <= 2 alpha / pi` for `alpha in (0, pi/2]`
//! through the chain
//!
//! ```text
//! m(alpha) <= (1/alpha) int_alpha^{2alpha} m <= (2/a) int_0^a m <= a/pi,   a = 2 alpha.
//! ```
//!
//! The checks here evaluate these quantities exactly for a given measure and
//! report margins; they do not require the hypotheses to hold, they flag them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::measure::{Measure, SectorMassFunction};

/// Tolerance on `total_mass == 1` for the probability hypothesis.
pub const PROBABILITY_TOL: f64 = 1e-10;

/// The window parameter `a` of the limit kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    a: f64,
}

impl KernelParams {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= PI) {
            return Err(domain("a", a));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

/// Limit kernel: `4 pi |t| - 4 pi a + 2 a^2` on `|t| <= a`, `2 a^2` beyond.
pub fn kernel_j(t: f64, params: KernelParams) -> Result<f64> {
    if !(t.abs() <= PI) {
        return Err(domain("t", t));
    }
    Ok(kernel_j_unchecked(t, params.a))
}

pub(crate) fn kernel_j_unchecked(t: f64, a: f64) -> f64 {
    let t = t.abs();
    if t <= a {
        4.0 * PI * t - 4.0 * PI * a + 2.0 * a * a
    } else {
        2.0 * a * a
    }
}

/// `(1/a) int_0^a m(t) dt`.
pub fn averaged_mass(m: &Measure, a: f64) -> Result<f64> {
    if !(a > 0.0 && a <= PI) {
        return Err(domain("a", a));
    }
    Ok(m.angular_projection().integral(a) / a)
}

/// Which hypotheses of the averaged bound the measure meets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub total_mass: f64,
    pub probability: bool,
    pub symmetric: bool,
    pub symmetry_defect: f64,
    /// Filled in by callers that also ran the majorization sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radially_majorized: Option<bool>,
}

impl Hypotheses {
    pub fn of(m: &Measure) -> Self {
        let total_mass = m.total_mass();
        let symmetry_defect = m.symmetry_defect();
        Self {
            total_mass,
            probability: (total_mass - 1.0).abs() <= PROBABILITY_TOL,
            symmetric: symmetry_defect <= m.default_symmetry_tol(),
            symmetry_defect,
            radially_majorized: None,
        }
    }

    pub fn all_hold(&self) -> bool {
        self.probability && self.symmetric && self.radially_majorized.unwrap_or(true)
    }
}

/// Per-grid-point comparison `lhs <= rhs`, with `margin = rhs - lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub grid: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub worst_margin: f64,
    pub worst_at: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub hypotheses: Hypotheses,
}

impl InequalityReport {
    fn build(grid: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>, tolerance: f64, hypotheses: Hypotheses) -> Self {
        let mut worst_margin = f64::INFINITY;
        let mut worst_at = grid.first().copied().unwrap_or(f64::NAN);
        for ((&g, &l), &r) in grid.iter().zip(&lhs).zip(&rhs) {
            let margin = r - l;
            if margin < worst_margin {
                worst_margin = margin;
                worst_at = g;
            }
        }
        Self { passed: worst_margin >= -tolerance, grid, lhs, rhs, worst_margin, worst_at, tolerance, hypotheses }
    }

    pub fn margins(&self) -> impl Iterator<Item = f64> + '_ {
        self.rhs.iter().zip(&self.lhs).map(|(r, l)| r - l)
    }

    /// Margin at the grid point closest to `x`.
    pub fn margin_at(&self, x: f64) -> Option<f64> {
        let i = self
            .grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))?
            .0;
        Some(self.rhs[i] - self.lhs[i])
    }

    /// Rows `a,lhs,rhs,margin`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,lhs,rhs,margin\n");
        for ((g, l), r) in self.grid.iter().zip(&self.lhs).zip(&self.rhs) {
            out.push_str(&format!("{g:.17e},{l:.17e},{r:.17e},{:.17e}\n", r - l));
        }
        out
    }
}

/// `n` equispaced points `pi k / n`, `k = 1..=n`.
pub fn default_a_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|k| PI * k as f64 / n as f64).collect()
}

/// Averaged bound `(1/a) int_0^a m <= a / (2 pi)` over `a_grid`.
pub fn check_theorem1(m: &Measure, a_grid: &[f64], tol: f64) -> Result<InequalityReport> {
    check_theorem1_projection(&m.angular_projection(), a_grid, tol, Hypotheses::of(m))
}

/// [`check_theorem1`] on a precomputed sector-mass function.
pub fn check_theorem1_projection(
    proj: &SectorMassFunction,
    a_grid: &[f64],
    tol: f64,
    hypotheses: Hypotheses,
) -> Result<InequalityReport> {
    for &a in a_grid {
        if !(a > 0.0 && a <= PI) {
            return Err(domain("a", a));
        }
    }
    let lhs = a_grid.iter().map(|&a| proj.integral(a) / a).collect();
    let rhs = a_grid.iter().map(|&a| a / (2.0 * PI)).collect();
    Ok(InequalityReport::build(a_grid.to_vec(), lhs, rhs, tol, hypotheses))
}

/// Pointwise bound `m(alpha) <= 2 alpha / pi` over `alpha_grid`.
///
/// `alpha = pi/2` is admitted: there the bound follows from the averaged one
/// at `a = pi`, and `z^2 + 1` attains it.
pub fn check_obrechkoff(m: &Measure, alpha_grid: &[f64], tol: f64) -> Result<InequalityReport> {
    for &alpha in alpha_grid {
        if !(alpha > 0.0 && alpha <= PI / 2.0) {
            return Err(domain("alpha", alpha));
        }
    }
    let lhs = alpha_grid.iter().map(|&alpha| m.sector_mass(alpha)).collect::<Result<Vec<_>>>()?;
    let rhs = alpha_grid.iter().map(|&alpha| 2.0 * alpha / PI).collect();
    Ok(InequalityReport::build(alpha_grid.to_vec(), lhs, rhs, tol, Hypotheses::of(m)))
}

/// The four quantities of the chain and the margins of its three links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub alpha: f64,
    /// `m(alpha)`.
    pub point_mass: f64,
    /// `(1/alpha) int_alpha^{2 alpha} m`.
    pub upper_average: f64,
    /// `(2/a) int_0^a m` with `a = 2 alpha`.
    pub full_average: f64,
    /// `a / pi`.
    pub bound: f64,
    pub margins: [f64; 3],
    pub tolerance: f64,
    pub passed: bool,
}

pub fn check_chain(m: &Measure, alpha: f64, tol: f64) -> Result<ChainReport> {
    if !(alpha > 0.0 && alpha <= PI / 2.0) {
        return Err(domain("alpha", alpha));
    }
    let proj = m.angular_projection();
    let a = 2.0 * alpha;
    let point_mass = proj.value(alpha);
    let upper_average = proj.integral_between(alpha, a) / alpha;
    let full_average = 2.0 * proj.integral(a) / a;
    let bound = a / PI;
    let margins = [upper_average - point_mass, full_average - upper_average, bound - full_average];
    Ok(ChainReport {
        alpha,
        point_mass,
        upper_average,
        full_average,
        bound,
        margins,
        tolerance: tol,
        passed: margins.iter().all(|&x| x >= -tol),
    })
}

/// `int_{[0, pi]} J(t) dm(t)`, the pairing of the limit kernel with the
/// folded angular distribution (jump at 0 included).
pub fn j_functional(m: &Measure, params: KernelParams) -> f64 {
    let a = params.a;
    m.angular_projection().stieltjes(|t| kernel_j_unchecked(t, a), &[a])
}

/// Right side of the integration by parts, `2 a^2 m(pi) - 4 pi int_0^a m`.
pub fn ibp_right_side(m: &Measure, params: KernelParams) -> f64 {
    let a = params.a;
    let proj = m.angular_projection();
    2.0 * a * a * proj.total() - 4.0 * PI * a * (proj.integral(a) / a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbpCheck {
    pub stieltjes_side: f64,
    pub integrated_side: f64,
    pub difference: f64,
    pub passed: bool,
}

/// Checks `int J dm = 2 a^2 m(pi) - 4 pi int_0^a m` with the two sides
/// computed independently (Stieltjes sum vs. integral of `m`).
pub fn ibp_identity_check(m: &Measure, params: KernelParams, tol: f64) -> IbpCheck {
    let stieltjes_side = j_functional(m, params);
    let integrated_side = ibp_right_side(m, params);
    let difference = stieltjes_side - integrated_side;
    IbpCheck { stieltjes_side, integrated_side, difference, passed: difference.abs() <= tol }
}
