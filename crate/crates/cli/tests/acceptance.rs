//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any criterion fails.

use std::panic;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semigroup_core::linalg::{c, cluster_eigenvalues, identity, spectral_norm, CMatrix, CVector, C64};
use semigroup_core::models::{diagonal_rapid_frequencies, random_vector};
use semigroup_core::quadrature::{linspace, logspace};
use semigroup_core::resolvent::{
    neumann_extension, pres_extension, resolvent_identity_residual, resolvent_laplace,
};
use semigroup_core::spectral::{bromwich_reconstruct, decompose, pole_order, riesz_projector, ContourSpec};
use semigroup_core::verification::ledger::{c3, c4, c5, c_jim, c_john, c_outer};
use semigroup_core::verification::scans::shifted_weak_norm;
use semigroup_core::verification::{
    compute_ledger, dolgopyat_scan, estimate_c1, estimate_c2, exponential_decay_check,
    laplace_tail_bound_check, minimal_regularity, oscillatory_bound_check, rapid_decay_check,
    rapid_scan,
};
use semigroup_core::{build_model, AssumptionParams, Error, GeneratorModel, ModelDescriptor};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fail(e: Error) -> String {
    e.to_string()
}

fn model(spec: ModelDescriptor) -> GeneratorModel {
    build_model(&spec).expect("valid descriptor")
}

fn random_stable(dimension: usize, abscissa: f64, seed: u64) -> GeneratorModel {
    model(ModelDescriptor::RandomStable {
        dimension,
        abscissa,
        seed,
    })
}

fn diagonal(values: &[f64]) -> GeneratorModel {
    let n = values.len();
    let re = (0..n)
        .map(|i| (0..n).map(|j| if i == j { values[i] } else { 0.0 }).collect())
        .collect();
    model(ModelDescriptor::Explicit { re, im: None })
}

fn two_state() -> GeneratorModel {
    model(ModelDescriptor::Ctmc {
        rates: vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
    })
}

fn three_state() -> GeneratorModel {
    model(ModelDescriptor::Ctmc {
        rates: vec![
            vec![-1.5, 1.0, 0.5],
            vec![0.2, -0.7, 0.5],
            vec![0.0, 2.0, -2.0],
        ],
    })
}

fn resolvent_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let m = random_stable(i + 1, -0.1, 1000 + i as u64);
        for _ in 0..10 {
            let z = c(rng.random_range(0.05..5.0), rng.random_range(-10.0..10.0));
            let w = c(rng.random_range(0.05..5.0), rng.random_range(-10.0..10.0));
            worst = worst.max(resolvent_identity_residual(&m, z, w).map_err(fail)?);
        }
    }
    ensure!(worst <= 1e-10, "max residual {worst:.3e} > 1e-10");
    Ok(format!("max residual {worst:.3e} over 50 models x 10 pairs, dim 1..50"))
}

fn laplace_error(m: &GeneratorModel, z: C64, step: f64) -> Result<f64, String> {
    let eval = resolvent_laplace(m, z, 40.0 / z.re, step).map_err(fail)?;
    Ok(eval.residual.expect("direct inverse exists"))
}

fn laplace_vs_direct() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut worst_ratio = f64::INFINITY;
    for i in 0..20 {
        let m = random_stable(2 + i % 9, -0.2, 2000 + i as u64);
        let mut probe = None;
        for _ in 0..10 {
            let z = c(rng.random_range(0.5..5.0), rng.random_range(-5.0..5.0));
            worst = worst.max(laplace_error(&m, z, 0.005)?);
            probe.get_or_insert(z);
        }
        // the 0.005 rule often sits at the roundoff floor; halve from the
        // finest step whose error is still well above it
        let z = probe.expect("ten samples");
        let mut step = 0.005;
        let mut coarse = laplace_error(&m, z, step)?;
        while coarse < 1e-9 && step < 0.3 {
            step *= 2.0;
            coarse = laplace_error(&m, z, step)?;
        }
        let fine = laplace_error(&m, z, 0.5 * step)?;
        worst_ratio = worst_ratio.min(coarse / fine);
    }
    ensure!(worst <= 1e-6, "max residual {worst:.3e} > 1e-6");
    ensure!(worst_ratio >= 8.0, "halving reduced the error only {worst_ratio:.2}x");
    Ok(format!(
        "max residual {worst:.3e} over 20 models x 10 points; min halving ratio {worst_ratio:.1}"
    ))
}

fn extensions_match_direct() -> Outcome {
    let models = vec![
        random_stable(3, -1.0, 31),
        random_stable(6, -1.0, 32),
        random_stable(8, -1.2, 33),
        diagonal(&[-0.1, -2.0]),
        two_state(),
    ];
    let (mut pres_n, mut neumann_n, mut skipped) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    for m in &models {
        for re in [-0.9, -0.5, -0.2] {
            for im in [-20.0, -7.0, 0.0, 3.0, 15.0] {
                let target = c(re, im);
                let base = c(1.0, im);
                match pres_extension(m, base, C64::new(1.0, 0.0) / (target - base)) {
                    Ok(e) => {
                        worst = worst.max(e.residual.expect("target is regular"));
                        pres_n += 1;
                    }
                    Err(Error::ExtensionPole { .. }) => skipped += 1,
                    Err(e) => return Err(e.to_string()),
                }
                match neumann_extension(m, 1.0, -re, im, 1e-12, None) {
                    Ok(e) => {
                        worst = worst.max(e.residual.expect("target is regular"));
                        neumann_n += 1;
                    }
                    Err(Error::SeriesDivergence { .. }) => skipped += 1,
                    Err(e) => return Err(e.to_string()),
                }
            }
        }
    }
    ensure!(pres_n > 0 && neumann_n > 0, "no defined extension points");
    ensure!(worst <= 1e-8, "max deviation {worst:.3e} > 1e-8");
    Ok(format!(
        "max deviation {worst:.3e}; {pres_n} resolvent-equation and {neumann_n} series points, {skipped} undefined"
    ))
}

fn eigenprojector(m: &GeneratorModel, members: &[usize]) -> Option<CMatrix> {
    let eig = m.eigen().ok()?;
    let inv = eig.inverse.as_ref()?;
    let n = m.dim();
    let mut p = CMatrix::zeros(n, n);
    for &j in members {
        p += eig.vectors.column(j) * inv.row(j);
    }
    Some(p)
}

fn riesz_projectors() -> Outcome {
    let models = vec![
        ("diagonal", diagonal(&[-0.1, -2.0, -3.5])),
        ("ctmc-2", two_state()),
        ("ctmc-3", three_state()),
        ("random-4", random_stable(4, -0.2, 41)),
        ("random-6", random_stable(6, -0.2, 42)),
        ("random-8", random_stable(8, -0.5, 43)),
    ];
    let (mut idem, mut annih, mut trace, mut radius, mut oracle): (f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    for (name, m) in &models {
        let values = m.eigenvalues().map_err(fail)?.to_vec();
        let tol = 1e-6 * m.generator_norm().max(1.0);
        let clusters = cluster_eigenvalues(&values, tol);
        let mut projectors = Vec::new();
        for &(center, mult) in &clusters {
            let gap = clusters
                .iter()
                .map(|&(o, _)| (o - center).norm())
                .filter(|&d| d > tol)
                .fold(f64::INFINITY, f64::min);
            let r = (0.5 * gap).min(1.0);
            let p = riesz_projector(m, center, r, 128).map_err(fail)?;
            let q = riesz_projector(m, center, 0.5 * r, 128).map_err(fail)?;
            radius = radius.max(spectral_norm(&(&p - &q)));
            idem = idem.max(spectral_norm(&(&p * &p - &p)));
            trace = trace.max((p.trace() - c(mult as f64, 0.0)).norm());
            let members: Vec<usize> = (0..values.len())
                .filter(|&j| (values[j] - center).norm() <= tol * mult as f64)
                .collect();
            let expected = eigenprojector(m, &members)
                .ok_or_else(|| format!("{name}: eigenvector matrix is singular"))?;
            oracle = oracle.max(spectral_norm(&(&p - expected)));
            projectors.push(p);
        }
        for (j, a) in projectors.iter().enumerate() {
            for (k, b) in projectors.iter().enumerate() {
                if j != k {
                    annih = annih.max(spectral_norm(&(a * b)));
                }
            }
        }
    }
    ensure!(idem <= 1e-8, "idempotence defect {idem:.3e}");
    ensure!(annih <= 1e-8, "annihilation defect {annih:.3e}");
    ensure!(trace <= 1e-6, "trace defect {trace:.3e}");
    ensure!(radius <= 1e-9, "radius dependence {radius:.3e}");
    ensure!(oracle <= 1e-10, "eigenprojector mismatch {oracle:.3e}");

    let jordan = model(ModelDescriptor::Jordan {
        eigenvalue: c(-0.5, 0.0),
        size: 2,
    });
    let p = riesz_projector(&jordan, c(-0.5, 0.0), 1.0, 128).map_err(fail)?;
    let (order, nil) = pole_order(&jordan, c(-0.5, 0.0), &p).map_err(fail)?;
    let expected = CMatrix::from_fn(2, 2, |i, j| c(if i == 0 && j == 1 { 1.0 } else { 0.0 }, 0.0));
    let nil_err = spectral_norm(&(nil - expected));
    let p_err = spectral_norm(&(p - identity(2)));
    ensure!(order == 2, "Jordan block gave order {order}");
    ensure!(nil_err <= 1e-10 && p_err <= 1e-10, "Jordan parts off by {nil_err:.3e}, {p_err:.3e}");
    Ok(format!(
        "idempotence {idem:.1e}, annihilation {annih:.1e}, trace {trace:.1e}, radius {radius:.1e}, \
         oracle {oracle:.1e}; Jordan order 2, nilpotent error {nil_err:.1e}"
    ))
}

fn bromwich_scalar() -> Outcome {
    let m = diagonal(&[-1.0]);
    let exact = (-1.0f64).exp();
    let mut errors = Vec::new();
    for b_cut in [500.0, 1000.0, 2000.0, 4000.0] {
        let r = bromwich_reconstruct(&m, 1.0, &ContourSpec::bromwich(1.0).with_b_cut(b_cut)).map_err(fail)?;
        errors.push((r.matrix[(0, 0)] - exact).norm());
    }
    ensure!(errors[2] <= 1e-3, "error {:.3e} at b_cut = 2000", errors[2]);
    let shown: Vec<String> = errors.iter().map(|e| format!("{e:.3e}")).collect();
    ensure!(
        errors.windows(2).all(|w| w[1] < w[0]),
        "errors not decreasing: {}",
        shown.join(", ")
    );
    Ok(format!("errors at b_cut 500/1000/2000/4000: {}", shown.join(", ")))
}

fn path_agreement() -> Outcome {
    let cases = vec![
        ("diagonal", diagonal(&[-0.1, -2.0]), AssumptionParams::new(1.0, 1.0, 2.0, 0.8, 0.5)),
        ("ctmc-2", two_state(), AssumptionParams::new(1.5, 1.0, 2.0, 0.8, 1.0)),
        ("random-5", random_stable(5, -0.2, 61), AssumptionParams::new(1.0, 1.0, 10.0, 0.8, 0.5)),
        ("random-8", random_stable(8, -0.3, 62), AssumptionParams::new(1.0, 1.0, 10.0, 0.8, 0.5)),
    ];
    let mut worst: f64 = 0.0;
    for (name, m, params) in &cases {
        let d = decompose(m, params, &ContourSpec::shifted(params.ell)).map_err(|e| format!("{name}: {e}"))?;
        for t in [1.0, 5.0, 10.0] {
            let gap = d.path_agreement(t).map_err(fail)?;
            ensure!(gap <= 1e-6, "{name}, t = {t}: paths differ by {gap:.3e}");
            worst = worst.max(gap);
        }
    }
    Ok(format!("max path gap {worst:.3e} over diagonal, CTMC and random-stable models"))
}

struct Case {
    name: &'static str,
    model: GeneratorModel,
    params: AssumptionParams,
}

fn scan_cases() -> Vec<Case> {
    vec![
        Case {
            name: "diagonal",
            model: diagonal(&[-0.1, -2.0]),
            params: AssumptionParams::new(1.0, 1.0, 2.0, 0.8, 0.5),
        },
        Case {
            name: "ctmc-2",
            model: two_state(),
            params: AssumptionParams::new(1.5, 1.0, 2.0, 0.8, 1.0),
        },
        Case {
            name: "random-5",
            model: random_stable(5, -1.0, 71),
            params: AssumptionParams::new(0.8, 1.0, 2.0, 0.8, 0.4),
        },
        Case {
            name: "diagonal-rapid",
            model: model(ModelDescriptor::DiagonalRapid { c: 0.5, k_max: 200 }),
            params: AssumptionParams::new(0.6, 1.0, 1.5, 0.8, 0.3),
        },
    ]
}

/// Fills the measured constants; `None` when a scan fails.
fn measured(case: &Case, b_max: f64) -> Result<Option<AssumptionParams>, String> {
    let mut params = case.params.clone();
    let c1 = estimate_c1(&case.model, &linspace(0.0, 50.0, 501)).map_err(fail)?;
    let c2 = estimate_c2(&case.model, &logspace(1e-4, 50.0, 200)).map_err(fail)?;
    let dolgo = dolgopyat_scan(&case.model, &params, &logspace(params.beta, b_max, 200)).map_err(fail)?;
    if !(c1.stable && c2.stable && dolgo.pass) {
        return Ok(None);
    }
    params.c1 = Some(c1.value);
    params.c2 = Some(c2.value);
    params.c_dolgo = Some(dolgo.c_d);
    Ok(Some(params))
}

fn frequency_limit(case: &Case) -> f64 {
    // stay inside the frequency range of the truncated rapid model
    if case.name == "diagonal-rapid" {
        100.0
    } else {
        1e3
    }
}

fn exponential_end_to_end() -> Outcome {
    let grid = logspace(0.1, 50.0, 60);
    let mut passed = Vec::new();
    let mut excluded = Vec::new();
    let mut tightest: f64 = 0.0;
    for case in scan_cases() {
        let Some(params) = measured(&case, frequency_limit(&case))? else {
            excluded.push(case.name);
            continue;
        };
        let ledger = compute_ledger(&params, |b| shifted_weak_norm(&case.model, params.ell, b)).map_err(fail)?;
        let d = decompose(&case.model, &params, &ContourSpec::shifted(params.ell)).map_err(fail)?;
        for k in 0..5 {
            let mu = random_vector(case.model.dim(), 700 + k);
            let r = exponential_decay_check(&d, ledger.c_june, &mu, params.ell, &grid).map_err(fail)?;
            ensure!(r.bound_holds, "{}: probe {k} exceeds the bound", case.name);
            for (v, b) in r.remainder_norms.iter().zip(&r.bound_values) {
                tightest = tightest.max(v / b);
            }
        }
        passed.push(case.name);
    }
    ensure!(passed.len() >= 3, "only {passed:?} passed the scans");
    ensure!(excluded == ["diagonal-rapid"], "unexpected scan failures {excluded:?}");
    Ok(format!(
        "bound holds for 5 probes on {passed:?}; max norm/bound {tightest:.3e}; excluded {excluded:?}"
    ))
}

fn ledger_formulas() -> Outcome {
    // high-precision evaluations of the closed-form expressions
    struct Frozen {
        inputs: [f64; 8],
        values: [f64; 6],
    }
    let frozen = [
        Frozen {
            inputs: [1.5, 1.0, 2.0, 0.8, 1.0, 1.0, 0.8944271909999159, 1.118033988749895],
            values: [
                0.55451774444795624753,
                9.606105564182214733,
                9.606105564182214733,
                3.2834849017545443748,
                39.083442576646270118,
                0.2623531000219673956,
            ],
        },
        Frozen {
            inputs: [0.8, 0.7, 3.0, 0.6, 0.3, 1.7, 2.3, 4.2],
            values: [
                0.21400496636323942735,
                17.907916193192433299,
                71.034734232996652086,
                2.7229264551781035431,
                87.254122628098840597,
                0.085385749132795537802,
            ],
        },
    ];
    let mut worst: f64 = 0.0;
    for f in &frozen {
        let [lambda, alpha, beta, gamma, ell, k1, k2, kd] = f.inputs;
        let cj = c_john(gamma, alpha, ell);
        let k3 = c3(kd, alpha, ell, lambda, gamma, beta).map_err(fail)?;
        let jim = c_jim(k1, k3, alpha, ell);
        let k5 = c5(alpha, beta);
        let k4 = c4(k1, k5, alpha, k2);
        let outer = c_outer(beta, cj);
        for (got, want) in [cj, k3, jim, k5, k4, outer].iter().zip(&f.values) {
            worst = worst.max(((got - want) / want).abs());
        }
    }
    ensure!(worst <= 1e-12, "relative deviation {worst:.3e}");

    let worked = [
        (c_john(0.5, 1.0, 1.0), 0.346574, 1e-6),
        (c5(1.0, 1.0), 6.29494, 1e-5),
        (c_outer(2.0, 0.3466), 0.154, 1e-3),
    ];
    for (got, want, tol) in worked {
        ensure!((got - want).abs() <= tol, "worked value {got} vs {want}");
    }
    Ok(format!("max relative deviation {worst:.2e}; worked values reproduce"))
}

fn rapid_end_to_end() -> Outcome {
    const K: usize = 500;
    let m = model(ModelDescriptor::DiagonalRapid { c: 0.5, k_max: K });
    let mut params = AssumptionParams::new(0.6, 1.0, 1.5, 0.8, 0.3);
    let scan = rapid_scan(&m, &params, &logspace(1.5, 0.5 * K as f64, 200)).map_err(fail)?;
    ensure!(scan.pass, "rapid scan failed: {:?}", scan.violation);
    params.c11 = Some(scan.c11_fit);
    let q = minimal_regularity(2, scan.c11_fit, params.c12);

    let freqs = diagonal_rapid_frequencies(K);
    let mu = CVector::from_iterator(
        freqs.len(),
        freqs.iter().map(|k| c((k.unsigned_abs() as f64).powi(-3), 0.0)),
    );
    let d = decompose(&m, &params, &ContourSpec::curved(None, params.c12, params.beta)).map_err(fail)?;
    let grid = logspace(1.0, 1e3, 60);
    let report = rapid_decay_check(&d, &mu, 2, q, scan.c11_fit, params.c12, &grid).map_err(fail)?;
    let slope = report.fitted_rate.ok_or("no usable points for the slope fit")?;

    let mut oracle_gap: f64 = 0.0;
    for &t in &grid {
        let direct = CVector::from_iterator(
            freqs.len(),
            freqs.iter().zip(mu.iter()).map(|(&k, &w)| {
                let z = c(-(k.unsigned_abs() as f64).powf(-0.5), k as f64);
                (z * t).exp() * w
            }),
        );
        let p = d.apply_remainder(t, &mu).map_err(fail)?;
        oracle_gap = oracle_gap.max((p - direct).norm());
    }
    let contour_gap = d.path_agreement(10.0).map_err(fail)?;

    ensure!(slope <= -2.0, "tail slope {slope:.3} > -2");
    ensure!(oracle_gap <= 1e-8, "P_t differs from direct summation by {oracle_gap:.3e}");
    ensure!(contour_gap <= 1e-6, "curved contour path differs by {contour_gap:.3e} at t = 10");
    Ok(format!(
        "C11 fit {:.3}, q = {q}, slope {slope:.2}, oracle gap {oracle_gap:.1e}, curved-path gap {contour_gap:.1e} at t = 10",
        scan.c11_fit
    ))
}

fn oscillatory_bound() -> Outcome {
    let mut rows = Vec::new();
    for case in scan_cases() {
        let Some(params) = measured(&case, frequency_limit(&case))? else {
            continue;
        };
        let ledger = compute_ledger(&params, |b| shifted_weak_norm(&case.model, params.ell, b)).map_err(fail)?;
        let check = oscillatory_bound_check(&case.model, &params, ledger.c4, &logspace(params.beta, 1e3, 200))
            .map_err(fail)?;
        ensure!(
            check.pass,
            "{}: measured {:.3e} > C4 {:.3e}",
            case.name,
            check.c4_measured,
            ledger.c4
        );
        rows.push(format!("{} {:.3}/{:.3}", case.name, check.c4_measured, ledger.c4));
    }
    Ok(format!("measured/ledger C4: {}", rows.join(", ")))
}

/// `∫_0^a e^{-tx} x^n dx = n! t^{-(n+1)} (1 − e^{-at} Σ_{k≤n} (at)^k/k!)`.
fn incomplete_gamma_integral(n: u32, t: f64, a: f64) -> f64 {
    let x = a * t;
    let mut term = 1.0;
    let mut partial = 1.0;
    for k in 1..=n {
        term *= x / k as f64;
        partial += term;
    }
    let factorial: f64 = (1..=n).map(f64::from).product();
    factorial * t.powi(-(n as i32 + 1)) * (1.0 - (-x).exp() * partial)
}

fn tail_integral_bound() -> Outcome {
    let a = 10.0;
    // mpmath lower incomplete gamma, γ(n+1, at)/t^{n+1}
    let frozen: [[f64; 4]; 6] = [
        [1.9865241060018290658, 0.99995460007023751515, 0.49999999896942318878, 0.2],
        [3.8382892720219487897, 0.99950060077261266663, 0.2499999891789434822, 0.04],
        [14.005567688270701739, 1.9944612085689768481, 0.24999988612126236027, 0.016],
        [70.557512131453276243, 5.9379836959444456928, 0.37499879860508232113, 0.0096],
        [429.70115706991686801, 23.297935486152934256, 0.74998729144205244946, 0.00768],
        [2949.4221708820752608, 111.94968445451618613, 1.8748651709240091958, 0.007679999999999995724],
    ];
    let mut worst: f64 = 0.0;
    let mut alternate_failures = Vec::new();
    for n in 0..=5u32 {
        for (j, t) in [0.5, 1.0, 2.0, 5.0].into_iter().enumerate() {
            let check = laplace_tail_bound_check(n, t, a).map_err(fail)?;
            let closed = incomplete_gamma_integral(n, t, a);
            let want = frozen[n as usize][j];
            worst = worst
                .max(((check.integral - want) / want).abs())
                .max(((closed - want) / want).abs());
            ensure!(check.pass, "chained bound fails at n = {n}, t = {t}");
            if !check.alternate_holds {
                alternate_failures.push((n, t));
            }
        }
    }
    ensure!(worst <= 1e-10, "quadrature off the closed form by {worst:.3e}");
    Ok(format!(
        "chained bound holds on all 24 pairs; max relative quadrature error {worst:.1e}; \
         n!·t^-n fails at {alternate_failures:?}"
    ))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_cli(config: &str, out: &Path) -> Result<Option<i32>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_semigroup"))
        .arg("verify")
        .arg("--config")
        .arg(configs().join(config))
        .arg("--output-dir")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    Ok(status.status.code())
}

fn report_without_timing(dir: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(dir.join("report.json")).map_err(|e| e.to_string())?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    v.as_object_mut().ok_or("report is not an object")?.remove("timing");
    Ok(v)
}

fn cli_determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let code = run_cli("ctmc_exponential.json", a.path())?;
    ensure!(code == Some(0), "reference config exited {code:?}");
    run_cli("ctmc_exponential.json", b.path())?;
    ensure!(
        report_without_timing(a.path())? == report_without_timing(b.path())?,
        "reports differ between runs"
    );

    let c = tempfile::tempdir().map_err(|e| e.to_string())?;
    let code = run_cli("negative_tolerance.json", c.path())?;
    ensure!(code == Some(1), "negative tolerance exited {code:?}");
    let code = run_cli("diagonal_rapid_exponential.json", c.path())?;
    ensure!(code == Some(2), "diagonal-rapid exponential exited {code:?}");
    let report = report_without_timing(c.path())?;
    ensure!(
        report["scans"]["dolgopyat"]["pass"] == serde_json::Value::Bool(false),
        "dolgopyat scan did not fail"
    );
    Ok("identical reports across runs; exit codes 0 / 1 / 2 on the example configs".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("resolvent identity", resolvent_identity),
        ("Laplace integral vs direct inverse", laplace_vs_direct),
        ("meromorphic and Neumann extensions", extensions_match_direct),
        ("Riesz projectors", riesz_projectors),
        ("Bromwich reconstruction", bromwich_scalar),
        ("subtraction vs contour remainder", path_agreement),
        ("exponential decay end to end", exponential_end_to_end),
        ("ledger formulas", ledger_formulas),
        ("polynomial decay end to end", rapid_end_to_end),
        ("oscillatory resolvent bound", oscillatory_bound),
        ("Laplace tail integral bound", tail_integral_bound),
        ("CLI determinism and exit codes", cli_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
