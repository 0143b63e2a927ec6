//! Acceptance suite: one line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spl_core::extremal::{
    consistency_probes, discretize_mu_alpha, lambda_alpha_masses, mu_alpha, potential_deviation, u_alpha,
    ExtremalSpec, DISCRETIZATION_ANGULAR, DISCRETIZATION_RADIAL,
};
use spl_core::mellin::{
    c_rho, concavity_difference, default_t_grid, h_rho, limit_factor_estimate, mellin_log_integral, v_rho_numeric,
    MellinMode, RhoParams, LIMIT_FIT_TOL,
};
use spl_core::obrechkoff::{
    check_obrechkoff, check_theorem1, default_a_grid, ibp_identity_check, j_functional, KernelParams,
};
use spl_core::poly::{empirical_measure, make_family, random_batch, Family};
use spl_core::potential::{angle_grid, check_radial_majorization_with, log_spaced};
use spl_core::{Complex64, Execution, Measure};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < budget_s, || format!("took {:.2} s, budget {budget_s} s", elapsed.as_secs_f64()))
}

fn equality_family() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for d in 2..=30usize {
        let m = empirical_measure(&make_family(Family::BinomialD, d, 0).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let alpha = PI / d as f64;
        let mass = m.sector_mass(alpha).map_err(|e| e.to_string())?;
        let err = (mass - 2.0 / d as f64).abs();
        ensure(err <= 1e-12, || format!("d = {d}: sector mass {mass}, error {err:.3e}"))?;
        let rep = check_obrechkoff(&m, &[alpha], 1e-12).map_err(|e| e.to_string())?;
        let margin = rep.rhs[0] - rep.lhs[0];
        ensure(margin.abs() <= 1e-12, || format!("d = {d}: margin {margin:.3e}"))?;
        worst = worst.max(err).max(margin.abs());
    }
    within(start.elapsed(), 5.0)?;
    Ok(format!("d = 2..30, worst |error| {worst:.1e}, {:.2} s", start.elapsed().as_secs_f64()))
}

fn theorem1_property_suite() -> Outcome {
    let start = Instant::now();
    let cases = random_batch(200, 2, 50, 20_240_601).map_err(|e| e.to_string())?;
    let grid = default_a_grid(200);
    let results = Execution::default().map(&cases, |p| -> Result<f64, String> {
        let m = empirical_measure(p).map_err(|e| e.to_string())?;
        let rep = check_theorem1(&m, &grid, 1e-10).map_err(|e| e.to_string())?;
        ensure(rep.hypotheses.probability && rep.hypotheses.symmetric, || format!("{:?}: hypotheses", p.coefficients()))?;
        Ok(rep.worst_margin)
    });
    let mut worst = f64::INFINITY;
    for (i, r) in results.into_iter().enumerate() {
        let margin = r?;
        ensure(margin >= -1e-10, || format!("polynomial {i}: worst margin {margin:.3e}"))?;
        worst = worst.min(margin);
    }
    within(start.elapsed(), 60.0)?;
    Ok(format!("200 polynomials, worst margin {worst:.3e}, {:.2} s", start.elapsed().as_secs_f64()))
}

fn uniform_circle_equality() -> Outcome {
    let m = Measure::uniform_circle(1.0, 1.0).map_err(|e| e.to_string())?;
    let rep = check_theorem1(&m, &default_a_grid(200), 1e-12).map_err(|e| e.to_string())?;
    let worst = rep.grid.iter().zip(&rep.lhs).map(|(a, l)| (l - a / (2.0 * PI)).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-12, || format!("max |lhs - a/2pi| = {worst:.3e}"))?;
    Ok(format!("max |lhs - a/2pi| = {worst:.1e}"))
}

fn extremal_measures() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for alpha in [PI / 6.0, PI / 5.0, 0.7, 1.3] {
        let spec = ExtremalSpec::new(alpha).map_err(|e| e.to_string())?;
        let masses = lambda_alpha_masses(spec).map_err(|e| e.to_string())?;
        let mass_err = (masses.total_quadrature - PI / alpha).abs();
        ensure(mass_err <= 1e-8, || format!("alpha {alpha}: total mass error {mass_err:.3e}"))?;

        let mu = mu_alpha(spec);
        let sector = mu.sector_mass(alpha).map_err(|e| e.to_string())?;
        let sector_err = (sector - 2.0 * alpha / PI).abs();
        ensure(sector_err <= 1e-10, || format!("alpha {alpha}: sector mass error {sector_err:.3e}"))?;

        let rep = check_theorem1(&mu, &[2.0 * alpha], 1e-9).map_err(|e| e.to_string())?;
        let margin = rep.rhs[0] - rep.lhs[0];
        ensure(margin.abs() <= 1e-9, || format!("alpha {alpha}: margin at 2 alpha {margin:.3e}"))?;

        let maj = check_radial_majorization_with(
            |z| Ok(u_alpha(z, spec)),
            &log_spaced(0.1, 10.0, 64),
            &angle_grid(128),
            1e-9,
            Execution::default(),
        )
        .map_err(|e| e.to_string())?;
        ensure(maj.worst_slack >= -1e-9, || format!("alpha {alpha}: majorization slack {:.3e}", maj.worst_slack))?;
        notes.push(format!("{alpha:.4}: margin {margin:.0e}"));
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!("{}, {:.2} s", notes.join("; "), start.elapsed().as_secs_f64()))
}

fn mellin_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let r = 10f64.powf(rng.gen_range(-1.0..=1.0));
        let z = Complex64::from_polar(r, rng.gen_range(-PI..PI));
        let p = RhoParams::new(rng.gen_range(0.05..=0.95)).map_err(|e| e.to_string())?;
        let closed = mellin_log_integral(z, p, MellinMode::ClosedForm).map_err(|e| e.to_string())?;
        let quad = mellin_log_integral(z, p, MellinMode::Quadrature).map_err(|e| e.to_string())?;
        worst = worst.max((closed - quad).abs());
        ensure(worst <= 1e-6, || format!("z = {z}, rho = {}: {closed} vs {quad}", p.rho()))?;
    }
    Ok(format!("50 samples, max difference {worst:.1e}"))
}

fn transform_identity() -> Outcome {
    let measures = [
        (
            Measure::from_atoms([(Complex64::new(0.0, 1.0), 0.5), (Complex64::new(0.0, -1.0), 0.5)]),
            0.5,
        ),
        (
            Measure::from_atoms([
                (Complex64::from_polar(0.5, 2.0), 0.3),
                (Complex64::from_polar(0.5, -2.0), 0.3),
                (Complex64::new(-3.0, 0.0), 0.4),
            ]),
            0.2,
        ),
        (
            Measure::from_atoms([
                (Complex64::from_polar(1.5, 0.3), 0.25),
                (Complex64::from_polar(1.5, -0.3), 0.25),
                (Complex64::from_polar(0.8, 2.6), 0.25),
                (Complex64::from_polar(0.8, -2.6), 0.25),
            ]),
            0.8,
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_id, mut worst_hom): (f64, f64) = (0.0, 0.0);
    for (k, (m, rho)) in measures.into_iter().enumerate() {
        let m = m.map_err(|e| e.to_string())?;
        let p = RhoParams::new(rho).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let z = Complex64::from_polar(10f64.powf(rng.gen_range(-0.5..0.5)), rng.gen_range(-PI..PI));
            let v = v_rho_numeric(&m, z, p).map_err(|e| e.to_string())?;
            let h = h_rho(&m, z.arg(), p).map_err(|e| e.to_string())?;
            let id = (v - z.norm().powf(rho) * h).abs();
            ensure(id <= 1e-6, || format!("measure {k}, z = {z}: v = {v}, r^rho h = {}", z.norm().powf(rho) * h))?;
            worst_id = worst_id.max(id);
            for lambda in [0.5, 2.0, 7.0] {
                let vl = v_rho_numeric(&m, z * lambda, p).map_err(|e| e.to_string())?;
                let hom = (vl - lambda.powf(rho) * v).abs();
                ensure(hom <= 1e-6, || format!("measure {k}, z = {z}, lambda {lambda}: violation {hom:.3e}"))?;
                worst_hom = worst_hom.max(hom);
            }
        }
    }
    Ok(format!("identity {worst_id:.1e}, homogeneity {worst_hom:.1e}"))
}

fn kernel_limit_proportionality() -> Outcome {
    let mut notes = Vec::new();
    for a in [PI / 6.0, PI / 2.0] {
        let params = KernelParams::new(a).map_err(|e| e.to_string())?;
        let fit = limit_factor_estimate(params, &default_t_grid(100)).map_err(|e| e.to_string())?;
        ensure(fit.residual <= LIMIT_FIT_TOL * fit.max_abs_j, || format!("a = {a}: residual {:.3e}", fit.residual))?;
        ensure(fit.kappa > 0.0, || format!("a = {a}: kappa {}", fit.kappa))?;
        ensure(fit.sign_match, || format!("a = {a}: sign pattern differs"))?;
        notes.push(format!("a = {a:.4}: kappa = {:.10}, residual {:.1e}", fit.kappa, fit.residual));
    }
    Ok(notes.join("; "))
}

fn integration_by_parts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let n = rng.gen_range(1..=20);
        let raw: Vec<(Complex64, f64)> = (0..n)
            .map(|_| (Complex64::from_polar(rng.gen_range(0.1..5.0), rng.gen_range(-PI..PI)), rng.gen_range(0.01..1.0)))
            .collect();
        let total: f64 = raw.iter().map(|a| a.1).sum();
        let m = Measure::from_atoms(raw.into_iter().map(|(z, w)| (z, w / total))).map_err(|e| e.to_string())?;
        for j in 1..=10 {
            let params = KernelParams::new(PI * j as f64 / 10.0).map_err(|e| e.to_string())?;
            let c = ibp_identity_check(&m, params, 1e-10);
            ensure(c.passed, || format!("measure {k}, a = {}: difference {:.3e}", params.a(), c.difference))?;
            worst = worst.max(c.difference.abs());
        }
    }
    Ok(format!("500 cases, max difference {worst:.1e}"))
}

fn potential_consistency() -> Outcome {
    let spec = ExtremalSpec::new(PI / 4.0).map_err(|e| e.to_string())?;
    let disc = discretize_mu_alpha(spec, DISCRETIZATION_RADIAL, DISCRETIZATION_ANGULAR);
    let probes = consistency_probes(spec);
    ensure(probes.len() == 20, || format!("{} probes", probes.len()))?;
    let dev = potential_deviation(spec, &disc, &probes, Execution::default());
    ensure(dev <= 1e-3, || format!("deviation {dev:.3e}"))?;
    Ok(format!("{} nodes, deviation {dev:.2e}", disc.components().len()))
}

fn violator_detection() -> Outcome {
    let m = Measure::from_atoms([(Complex64::new(1.0, 0.0), 1.0)]).map_err(|e| e.to_string())?;
    let rep = check_theorem1(&m, &default_a_grid(200), 1e-9).map_err(|e| e.to_string())?;
    ensure(!rep.passed, || "check_theorem1 passed".into())?;
    let params = KernelParams::new(PI / 2.0).map_err(|e| e.to_string())?;
    let j = j_functional(&m, params);
    ensure(j < 0.0, || format!("j_functional = {j}"))?;
    let p = RhoParams::new(0.1).map_err(|e| e.to_string())?;
    let c = concavity_difference(&m, params, p).map_err(|e| e.to_string())?;
    ensure(c < 0.0, || format!("concavity difference = {c}"))?;
    Ok(format!(
        "worst margin {:.3}, J functional {j:.4}, concavity difference {c:.4} (c_rho = {:.2})",
        rep.worst_margin,
        c_rho(p)
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("equality family z^d + 1", equality_family),
        ("averaged bound over random positive polynomials", theorem1_property_suite),
        ("uniform circle equality", uniform_circle_equality),
        ("extremal measures mu_alpha", extremal_measures),
        ("Mellin closed form", mellin_closed_form),
        ("transform identity and homogeneity", transform_identity),
        ("kernel limit proportionality", kernel_limit_proportionality),
        ("integration by parts identity", integration_by_parts),
        ("potential consistency of discretized mu_alpha", potential_consistency),
        ("violator detection", violator_detection),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        println!("criterion {:>2} [{tag}] {name}: {detail}", i + 1);
        failed += outcome.is_err() as usize;
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
