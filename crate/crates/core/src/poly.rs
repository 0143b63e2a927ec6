//! Polynomials with non-negative coefficients and their empirical measures.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Atom, Component, Measure};

pub const MAX_DEGREE: usize = 500;
/// Default residual tolerance for [`find_roots`].
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;

/// `c_0 + c_1 z + ... + c_d z^d` with `c_k >= 0`, `c_0 > 0`, `c_d > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialFile", into = "PolynomialFile")]
pub struct PositivePolynomial {
    coefficients: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolynomialFile {
    coefficients: Vec<f64>,
}

impl TryFrom<PolynomialFile> for PositivePolynomial {
    type Error = Error;
    fn try_from(f: PolynomialFile) -> Result<Self> {
        Self::new(f.coefficients)
    }
}

impl From<PositivePolynomial> for PolynomialFile {
    fn from(p: PositivePolynomial) -> Self {
        PolynomialFile { coefficients: p.coefficients }
    }
}

impl PositivePolynomial {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidPolynomial(m));
        if coefficients.len() < 2 {
            return bad("degree must be at least 1".into());
        }
        if coefficients.len() - 1 > MAX_DEGREE {
            return bad(format!("degree {} exceeds {MAX_DEGREE}", coefficients.len() - 1));
        }
        if let Some(c) = coefficients.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
            return bad(format!("coefficient {c} is negative or not finite"));
        }
        if coefficients[0] == 0.0 {
            return bad("constant coefficient must be positive (no root at 0)".into());
        }
        if coefficients[coefficients.len() - 1] == 0.0 {
            return bad("leading coefficient must be positive".into());
        }
        Ok(Self { coefficients })
    }

    /// Parses `"c0,c1,...,cd"`.
    pub fn parse_inline(text: &str) -> Result<Self> {
        let coefficients = text
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("coefficient {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(coefficients)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coefficients.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `sum c_k |z|^k`, the scale of rounding in `P(z)`.
    pub fn scale(&self, modulus: f64) -> f64 {
        self.eval_real(modulus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

impl Root {
    pub fn location(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    /// `max |P(z_k)| / scale(P, |z_k|)` over the polished simple roots.
    pub residual_bound: f64,
}

impl RootSet {
    pub fn degree(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }
}

const MAX_ITERATIONS: usize = 1000;

/// All roots by Aberth–Ehrlich iteration with Newton polishing, clustered
/// into multiplicities and made exactly conjugation-symmetric.
pub fn find_roots(p: &PositivePolynomial, tol: f64) -> Result<RootSet> {
    let d = p.degree();
    let c = p.coefficients();
    if d == 1 {
        let z = Complex64::new(-c[0] / c[1], 0.0);
        return Ok(RootSet { roots: vec![Root { re: z.re, im: 0.0, multiplicity: 1 }], residual_bound: 0.0 });
    }

    let radius = (c[0] / c[d]).powf(1.0 / d as f64);
    // Golden-angle offset keeps the start off the real axis and off the roots of z^d + c.
    let offset = PI * (3.0 - 5f64.sqrt()) / d as f64;
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / d as f64 + offset))
        .collect();

    let residual = |w: Complex64| p.eval(w).norm() / p.scale(w.norm());
    let mut converged = vec![false; d];
    for _ in 0..MAX_ITERATIONS {
        let mut all = true;
        for k in 0..d {
            if converged[k] {
                continue;
            }
            let (pv, dpv) = p.eval_with_derivative(z[k]);
            if pv.norm() == 0.0 {
                converged[k] = true;
                continue;
            }
            let ratio = pv / dpv;
            let repulsion: Complex64 = (0..d).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                all = false;
                continue;
            }
            z[k] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[k].norm() {
                converged[k] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }

    // Newton polishing; keep a step only if it does not increase the residual.
    for zk in z.iter_mut() {
        for _ in 0..3 {
            let (pv, dpv) = p.eval_with_derivative(*zk);
            if dpv.norm() == 0.0 {
                break;
            }
            let cand = *zk - pv / dpv;
            if cand.re.is_finite() && cand.im.is_finite() && residual(cand) <= residual(*zk) {
                *zk = cand;
            } else {
                break;
            }
        }
    }

    let residual_bound = z.iter().map(|&w| residual(w)).fold(0.0, f64::max);
    if !(residual_bound <= tol) {
        return Err(Error::NonConvergence {
            context: "Aberth-Ehrlich root finding",
            estimate: residual_bound,
            error: residual_bound,
        });
    }

    let clusters = cluster(&z, tol);
    let roots = symmetrize(clusters, tol)?;
    Ok(RootSet { roots, residual_bound })
}

/// Single-linkage clusters at relative radius `max(1e-7, sqrt(tol))`.
fn cluster(z: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let n = z.len();
    let rel = tol.sqrt().max(1e-7);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = z[i].norm().max(z[j].norm());
            if (z[i] - z[j]).norm() <= rel * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut sums: Vec<(Complex64, usize)> = vec![(Complex64::new(0.0, 0.0), 0); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        sums[r].0 += z[i];
        sums[r].1 += 1;
    }
    sums.into_iter()
        .filter(|&(_, k)| k > 0)
        .map(|(s, k)| (s / k as f64, k))
        .collect()
}

/// Snaps near-real clusters onto the axis and replaces each lower-half-plane
/// cluster by the exact conjugate of its upper partner.
fn symmetrize(clusters: Vec<(Complex64, usize)>, tol: f64) -> Result<Vec<Root>> {
    let rel = tol.sqrt().max(1e-7);
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (w, k) in clusters {
        if w.im.abs() <= rel * w.norm() {
            real.push(Root { re: w.re, im: 0.0, multiplicity: k });
        } else if w.im > 0.0 {
            upper.push((w, k));
        } else {
            lower.push((w, k));
        }
    }
    if upper.len() != lower.len() {
        return Err(Error::NonConvergence {
            context: "conjugate pairing of roots",
            estimate: upper.len() as f64,
            error: lower.len() as f64,
        });
    }
    let mut roots = real;
    let mut taken = vec![false; lower.len()];
    for (w, k) in upper {
        let best = (0..lower.len())
            .filter(|&j| !taken[j] && lower[j].1 == k)
            .min_by(|&a, &b| (lower[a].0 - w.conj()).norm().total_cmp(&(lower[b].0 - w.conj()).norm()));
        let Some(j) = best else {
            return Err(Error::NonConvergence { context: "conjugate pairing of roots", estimate: k as f64, error: f64::NAN });
        };
        taken[j] = true;
        let mid = 0.5 * (w + lower[j].0.conj());
        roots.push(Root { re: mid.re, im: mid.im, multiplicity: k });
        roots.push(Root { re: mid.re, im: -mid.im, multiplicity: k });
    }
    roots.sort_by(|a, b| a.im.atan2(a.re).total_cmp(&b.im.atan2(b.re)).then(a.re.total_cmp(&b.re)));
    Ok(roots)
}

/// Probability measure with mass `m/d` at each root of multiplicity `m`.
pub fn empirical_measure(p: &PositivePolynomial) -> Result<Measure> {
    empirical_measure_from_roots(&find_roots(p, DEFAULT_ROOT_TOL)?)
}

pub fn empirical_measure_from_roots(roots: &RootSet) -> Result<Measure> {
    let d = roots.degree() as f64;
    Measure::new(
        roots
            .roots
            .iter()
            .map(|r| Component::Atom(Atom { location: r.location(), mass: r.multiplicity as f64 / d }))
            .collect(),
    )
}

/// Checks `|P(z)| <= P(|z|) (1 + 1e-14)` at `sample_count` seeded points
/// with log-uniform modulus in `[1e-2, 1e2]` and uniform argument.
pub fn check_modulus_bound(p: &PositivePolynomial, sample_count: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sample_count).all(|_| {
        let r = 10f64.powf(rng.gen_range(-2.0..2.0));
        let z = Complex64::from_polar(r, rng.gen_range(-PI..PI));
        p.eval(z).norm() <= p.eval_real(r) * (1.0 + 1e-14)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `z^d + 1`.
    BinomialD,
    /// `c_k = exp(U_k)` with `U_k` uniform on `[-3, 3]`.
    RandomLoguniform,
}

pub fn make_family(kind: Family, d: usize, seed: u64) -> Result<PositivePolynomial> {
    if d == 0 {
        return Err(Error::InvalidPolynomial("degree must be at least 1".into()));
    }
    let coefficients = match kind {
        Family::BinomialD => {
            let mut c = vec![0.0; d + 1];
            c[0] = 1.0;
            c[d] = 1.0;
            c
        }
        Family::RandomLoguniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..=d).map(|_| rng.gen_range(-3.0..=3.0f64).exp()).collect()
        }
    };
    PositivePolynomial::new(coefficients)
}

/// `count` random log-uniform polynomials with degrees uniform on
/// `min_degree..=max_degree`, all drawn from one seed.
pub fn random_batch(count: usize, min_degree: usize, max_degree: usize, seed: u64) -> Result<Vec<PositivePolynomial>> {
    if min_degree == 0 || min_degree > max_degree {
        return Err(Error::InvalidPolynomial(format!("degree range {min_degree}..={max_degree}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let d = rng.gen_range(min_degree..=max_degree);
            make_family(Family::RandomLoguniform, d, rng.gen())
        })
        .collect()
}
