use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use spl_core::extremal::{lambda_alpha_masses, sector_mass_table, verify_extremal, ExtremalSpec};
use spl_core::measure::principal_arg;
use spl_core::mellin::{
    default_t_grid, h_rho, limit_factor_estimate, mellin_log_integral, v_rho_numeric, LimitFit, MellinMode, RhoParams,
    LIMIT_FIT_TOL,
};
use spl_core::obrechkoff::{
    check_obrechkoff, check_theorem1, default_a_grid, ibp_identity_check, j_functional, Hypotheses, InequalityReport,
    KernelParams,
};
use spl_core::poly::{
    check_modulus_bound, empirical_measure_from_roots, find_roots, random_batch, PositivePolynomial, DEFAULT_ROOT_TOL,
};
use spl_core::potential::{check_radial_majorization, default_grid, MajorizationReport};
use spl_core::report::{CheckRecord, VerificationReport, WorstAt};
use spl_core::{Complex64, Execution, Measure, VERSION};

use crate::{Cli, Failure, Format, Rendered};

const MODULUS_SAMPLES: usize = 1000;
const BATCH_SIZE: usize = 200;
const MELLIN_SAMPLES: usize = 50;
const MELLIN_TOL: f64 = 1e-6;

fn header(cli: &Cli) -> Value {
    json!({ "tool": "spl", "version": VERSION, "config": cli })
}

fn csv_header(cli: &Cli) -> String {
    let config = serde_json::to_string(cli).expect("config serializes");
    format!("# spl {VERSION}\n# config: {config}\n")
}

fn json_body(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// `--input` is a path unless it already looks like inline JSON.
fn read_input(cli: &Cli) -> Result<Option<String>, Failure> {
    match &cli.input {
        None => Ok(None),
        Some(s) if s.trim_start().starts_with(['{', '[']) => Ok(Some(s.clone())),
        Some(path) => std::fs::read_to_string(path)
            .map(Some)
            .map_err(|e| Failure::Input(format!("cannot read {path}: {e}"))),
    }
}

fn polynomial(cli: &Cli) -> Result<PositivePolynomial, Failure> {
    match (&cli.coeffs, read_input(cli)?) {
        (Some(_), Some(_)) => Err(Failure::Input("give either --coeffs or --input, not both".into())),
        (Some(c), None) => Ok(PositivePolynomial::parse_inline(c)?),
        (None, Some(text)) => Ok(PositivePolynomial::from_json(&text)?),
        (None, None) => Err(Failure::Input("a polynomial is required (--coeffs or --input)".into())),
    }
}

fn hypotheses_record(h: &Hypotheses) -> CheckRecord {
    let mut detail = format!("total mass {:.17e}, symmetry defect {:.3e}", h.total_mass, h.symmetry_defect);
    if let Some(r) = h.radially_majorized {
        let _ = write!(detail, ", radially majorized {r}");
    }
    CheckRecord {
        name: "hypotheses".into(),
        worst_slack: if h.all_hold() { 0.0 } else { -1.0 },
        worst_at: None,
        tolerance: 0.0,
        passed: h.all_hold(),
        detail: Some(detail),
    }
}

fn inequality_record(name: &str, param: &str, rep: &InequalityReport) -> CheckRecord {
    CheckRecord::from_slack(
        name,
        rep.worst_margin,
        Some(WorstAt::Parameter { name: param.into(), value: rep.worst_at }),
        rep.tolerance,
    )
}

fn majorization_record(rep: &MajorizationReport) -> CheckRecord {
    CheckRecord::from_slack(
        "radial_majorization",
        rep.worst_slack,
        Some(WorstAt::Point { re: rep.worst_point[0], im: rep.worst_point[1] }),
        rep.tolerance,
    )
    .with_detail(format!("{} grid points", rep.grid_size))
}

/// `pi k / (2 n)` for `k = 1..=n`, plus the given extra angles, sorted.
fn alpha_grid(n: usize, extra: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = (1..=n).map(|k| FRAC_PI_2 * k as f64 / n as f64).collect();
    g.extend(extra.iter().copied().filter(|&a| a > 0.0 && a <= FRAC_PI_2));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

#[derive(Serialize)]
struct Margin {
    alpha: f64,
    lhs: f64,
    rhs: f64,
    margin: f64,
}

/// Checks shared by `verify-poly` and `verify-measure`.
struct MeasureChecks {
    majorization: MajorizationReport,
    theorem1: InequalityReport,
    obrechkoff: InequalityReport,
    report: VerificationReport,
}

fn measure_checks(cli: &Cli, m: &Measure, extra_alphas: &[f64]) -> Result<MeasureChecks, Failure> {
    let (r, th) = default_grid(m);
    let majorization = check_radial_majorization(m, &r, &th, cli.tol)?;
    let mut hypotheses = Hypotheses::of(m);
    hypotheses.radially_majorized = Some(majorization.passed);
    let theorem1 = check_theorem1(m, &default_a_grid(cli.a_grid), cli.tol)?;
    let obrechkoff = check_obrechkoff(m, &alpha_grid(cli.a_grid, extra_alphas), cli.tol)?;
    let mut report = VerificationReport::default();
    report.push(hypotheses_record(&hypotheses));
    report.push(majorization_record(&majorization));
    report.push(inequality_record("theorem1", "a", &theorem1));
    report.push(inequality_record("obrechkoff", "alpha", &obrechkoff));
    Ok(MeasureChecks { majorization, theorem1, obrechkoff, report })
}

fn inequality_csv(cli: &Cli, checks: &VerificationReport, table: &InequalityReport) -> String {
    let mut out = csv_header(cli);
    for c in &checks.checks {
        let _ = writeln!(out, "# check {} passed={} worst_slack={:.17e}", c.name, c.passed, c.worst_slack);
    }
    out.push_str(&table.to_csv());
    out
}

pub fn verify_poly(cli: &Cli) -> Result<Rendered, Failure> {
    let p = polynomial(cli)?;
    let roots = find_roots(&p, DEFAULT_ROOT_TOL)?;
    let m = empirical_measure_from_roots(&roots)?;
    let root_angles: Vec<f64> = roots.roots.iter().map(|r| principal_arg(r.location()).abs()).collect();
    let mut checks = measure_checks(cli, &m, &root_angles)?;

    let modulus = check_modulus_bound(&p, MODULUS_SAMPLES, cli.seed);
    checks.report.push(CheckRecord {
        name: "modulus_bound".into(),
        worst_slack: if modulus { 0.0 } else { -1.0 },
        worst_at: None,
        tolerance: 0.0,
        passed: modulus,
        detail: Some(format!("{MODULUS_SAMPLES} samples, seed {}", cli.seed)),
    });

    // Equality is attained where a root sits on the sector boundary.
    let mut at_roots: Vec<Margin> = Vec::new();
    for &alpha in &root_angles {
        if alpha > 0.0 && alpha <= FRAC_PI_2 && !at_roots.iter().any(|e| e.alpha == alpha) {
            let lhs = m.sector_mass(alpha)?;
            let rhs = 2.0 * alpha / PI;
            at_roots.push(Margin { alpha, lhs, rhs, margin: rhs - lhs });
        }
    }
    at_roots.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));

    let passed = checks.report.passed();
    let body = match cli.format {
        Format::Json => json_body(&json!({
            "header": header(cli),
            "passed": passed,
            "polynomial": p,
            "roots": roots,
            "checks": checks.report.checks,
            "obrechkoff_at_root_angles": at_roots,
            "theorem1": checks.theorem1,
            "obrechkoff": checks.obrechkoff,
            "radial_majorization": checks.majorization,
        })),
        Format::Csv => {
            let mut out = inequality_csv(cli, &checks.report, &checks.theorem1);
            for e in &at_roots {
                let _ = writeln!(out, "# root angle alpha={:.17e} margin={:.17e}", e.alpha, e.margin);
            }
            out
        }
    };
    Ok(Rendered { body, sidecar: None, passed })
}

pub fn verify_measure(cli: &Cli) -> Result<Rendered, Failure> {
    if cli.coeffs.is_some() {
        return Err(Failure::Input("verify-measure reads a measure from --input; use verify-poly for --coeffs".into()));
    }
    let text = read_input(cli)?.ok_or_else(|| Failure::Input("a measure is required (--input)".into()))?;
    let m = Measure::from_json(&text)?;
    let checks = measure_checks(cli, &m, &[])?;

    let mut j_values = Vec::new();
    let mut ibp_worst: f64 = 0.0;
    for &a in &[PI / 6.0, PI / 3.0, FRAC_PI_2, 3.0 * PI / 4.0, PI] {
        let params = KernelParams::new(a)?;
        j_values.push(json!({ "a": a, "j_functional": j_functional(&m, params) }));
        ibp_worst = ibp_worst.max(ibp_identity_check(&m, params, cli.tol).difference.abs());
    }
    let mut report = checks.report;
    report.push(
        CheckRecord::from_slack("ibp_identity", 0.0 - ibp_worst, None, cli.tol)
            .with_detail("J functional against 2 a^2 m(pi) - 4 pi int_0^a m".to_string()),
    );

    let passed = report.passed();
    let body = match cli.format {
        Format::Json => json_body(&json!({
            "header": header(cli),
            "passed": passed,
            "measure": m.to_spec(),
            "checks": report.checks,
            "j_functional": j_values,
            "theorem1": checks.theorem1,
            "obrechkoff": checks.obrechkoff,
            "radial_majorization": checks.majorization,
        })),
        Format::Csv => inequality_csv(cli, &report, &checks.theorem1),
    };
    Ok(Rendered { body, sidecar: None, passed })
}

pub fn extremal(cli: &Cli) -> Result<Rendered, Failure> {
    let alpha = cli.alpha.ok_or_else(|| Failure::Input("extremal requires --alpha".into()))?;
    let spec = ExtremalSpec::new(alpha)?;
    let masses = lambda_alpha_masses(spec)?;
    let report = verify_extremal(spec, cli.tol)?;
    let table = sector_mass_table(spec, cli.a_grid);
    let passed = report.passed();
    let masses_json = json!({ "header": header(cli), "masses": masses });
    let (body, sidecar) = match cli.format {
        Format::Json => (
            json_body(&json!({
                "header": header(cli),
                "passed": passed,
                "masses": masses,
                "checks": report.checks,
                "sector_mass": table.iter().map(|&(t, m)| json!({ "t": t, "m": m })).collect::<Vec<_>>(),
            })),
            None,
        ),
        Format::Csv => {
            let mut out = csv_header(cli);
            for c in &report.checks {
                let _ = writeln!(out, "# check {} passed={} worst_slack={:.17e}", c.name, c.passed, c.worst_slack);
            }
            out.push_str("t,m\n");
            for (t, m) in &table {
                let _ = writeln!(out, "{t:.17e},{m:.17e}");
            }
            (out, Some((".masses.json".to_string(), json_body(&masses_json))))
        }
    };
    Ok(Rendered { body, sidecar, passed })
}

pub fn mellin_check(cli: &Cli) -> Result<Rendered, Failure> {
    let windows: Vec<f64> = match cli.alpha {
        Some(a) => vec![a],
        None => vec![PI / 6.0, FRAC_PI_2],
    };
    let mut report = VerificationReport::default();

    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut worst = (0.0f64, Complex64::new(0.0, 0.0));
    for _ in 0..MELLIN_SAMPLES {
        let z = Complex64::from_polar(10f64.powf(rng.gen_range(-1.0..=1.0)), rng.gen_range(-PI..PI));
        let p = RhoParams::new(rng.gen_range(0.05..=0.95))?;
        let d = (mellin_log_integral(z, p, MellinMode::ClosedForm)? - mellin_log_integral(z, p, MellinMode::Quadrature)?)
            .abs();
        if d > worst.0 {
            worst = (d, z);
        }
    }
    report.push(
        CheckRecord::from_slack("mellin_closed_form", 0.0 - worst.0, Some(WorstAt::Point { re: worst.1.re, im: worst.1.im }), MELLIN_TOL)
            .with_detail(format!("{MELLIN_SAMPLES} samples, seed {}", cli.seed)),
    );

    // v_rho = r^rho h_rho on the two-atom measure of z^2 + 1.
    let pair = Measure::from_atoms([(Complex64::new(0.0, 1.0), 0.5), (Complex64::new(0.0, -1.0), 0.5)])?;
    let mut id_worst: f64 = 0.0;
    for _ in 0..10 {
        let z = Complex64::from_polar(10f64.powf(rng.gen_range(-0.5..0.5)), rng.gen_range(-PI..PI));
        let p = RhoParams::new(rng.gen_range(0.1..0.9))?;
        let v = v_rho_numeric(&pair, z, p)?;
        id_worst = id_worst.max((v - z.norm().powf(p.rho()) * h_rho(&pair, z.arg(), p)?).abs());
    }
    report.push(CheckRecord::from_slack("transform_identity", 0.0 - id_worst, None, MELLIN_TOL));

    let t_grid = default_t_grid(cli.a_grid);
    let mut fits: Vec<LimitFit> = Vec::new();
    for &a in &windows {
        let fit = limit_factor_estimate(KernelParams::new(a)?, &t_grid)?;
        report.push(
            CheckRecord::from_slack(
                "kernel_limit_fit",
                -fit.residual / fit.max_abs_j,
                Some(WorstAt::Parameter { name: "a".into(), value: a }),
                LIMIT_FIT_TOL,
            )
            .with_detail(format!("kappa = {:.17e}, sign pattern matches: {}", fit.kappa, fit.sign_match)),
        );
        report.push(CheckRecord {
            name: "kernel_limit_sign".into(),
            worst_slack: fit.kappa,
            worst_at: Some(WorstAt::Parameter { name: "a".into(), value: a }),
            tolerance: 0.0,
            passed: fit.kappa > 0.0 && fit.sign_match,
            detail: None,
        });
        fits.push(fit);
    }

    let passed = report.passed();
    let body = match cli.format {
        Format::Json => json_body(&json!({
            "header": header(cli),
            "passed": passed,
            "checks": report.checks,
            "kernel_limit": fits,
        })),
        Format::Csv => {
            let mut out = csv_header(cli);
            for c in &report.checks {
                let _ = writeln!(out, "# check {} passed={} worst_slack={:.17e}", c.name, c.passed, c.worst_slack);
            }
            out.push_str("t,limit,kappa_j\n");
            for fit in &fits {
                let _ = writeln!(out, "# a = {:.17e}, kappa = {:.17e}", fit.a, fit.kappa);
                for row in &fit.table {
                    let _ = writeln!(out, "{:.17e},{:.17e},{:.17e}", row.t, row.limit, fit.kappa * row.j);
                }
            }
            out
        }
    };
    Ok(Rendered { body, sidecar: None, passed })
}

#[derive(Serialize)]
struct BatchRow {
    index: usize,
    degree: usize,
    worst_margin: f64,
    worst_at: f64,
    passed: bool,
}

fn batch_input(text: &str) -> Result<Vec<PositivePolynomial>, Failure> {
    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Object(PositivePolynomial),
        Array(Vec<f64>),
    }
    let entries: Vec<Entry> = serde_json::from_str(text).map_err(|e| Failure::Input(format!("batch input: {e}")))?;
    entries
        .into_iter()
        .map(|e| match e {
            Entry::Object(p) => Ok(p),
            Entry::Array(c) => Ok(PositivePolynomial::new(c)?),
        })
        .collect()
}

pub fn batch(cli: &Cli) -> Result<Rendered, Failure> {
    if cli.coeffs.is_some() {
        return Err(Failure::Input("batch reads a JSON list from --input or generates polynomials from --seed".into()));
    }
    let polys = match read_input(cli)? {
        Some(text) => batch_input(&text)?,
        None => random_batch(BATCH_SIZE, 2, 50, cli.seed)?,
    };
    let grid = default_a_grid(cli.a_grid);
    let results = Execution::default().map(&polys, |p| -> spl_core::Result<InequalityReport> {
        let m = empirical_measure_from_roots(&find_roots(p, DEFAULT_ROOT_TOL)?)?;
        check_theorem1(&m, &grid, cli.tol)
    });
    let mut rows = Vec::with_capacity(polys.len());
    for (index, (p, r)) in polys.iter().zip(results).enumerate() {
        let rep = r?;
        rows.push(BatchRow {
            index,
            degree: p.degree(),
            worst_margin: rep.worst_margin,
            worst_at: rep.worst_at,
            passed: rep.passed,
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    let worst = rows.iter().map(|r| r.worst_margin).fold(f64::INFINITY, f64::min);
    let body = match cli.format {
        Format::Json => json_body(&json!({
            "header": header(cli),
            "passed": passed,
            "summary": {
                "count": rows.len(),
                "failures": rows.iter().filter(|r| !r.passed).count(),
                "worst_margin": worst,
            },
            "results": rows,
        })),
        Format::Csv => {
            let mut out = csv_header(cli);
            out.push_str("index,degree,worst_margin,worst_at,passed\n");
            for r in &rows {
                let _ = writeln!(out, "{},{},{:.17e},{:.17e},{}", r.index, r.degree, r.worst_margin, r.worst_at, r.passed);
            }
            out
        }
    };
    Ok(Rendered { body, sidecar: None, passed })
}
