//! Acceptance criteria 1–8. Runs as a plain binary (`harness = false`) and
//! prints one PASS/FAIL line per criterion; exits non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relaxlab::densemat::{expm, ComplexMatrix};
use relaxlab::lab::{self, ErrorTable, FitTarget, OrderFit};
use relaxlab::relaxsys::{builtin, builtin_broadwell, builtin_grad, check_structural_stability};
use relaxlab::spectral::{self, derivative, energy_norm, l2_norm, ModalState};
use relaxlab::stepper::{exact_evolve, StepPlan};
use relaxlab::tableaux::{self, classify, order_residuals, registry, stage_conditions};

// Tolerances.
const CONDITION_PASS: f64 = 1e-12;
const CONDITION_FAIL: f64 = 1e-3;
const STABILITY_RESIDUAL: f64 = 1e-10;
const EXPM_TOL: f64 = 1e-11;
const EXPM_CASES: usize = 100;
const ORACLE_SLOPE_ARS222: f64 = 1.8;
const ORACLE_SLOPE_BHR: f64 = 2.6;
const UNIFORM_ARS222: (f64, f64) = (1.8, 2.4);
const UNIFORM_BHR: (f64, f64) = (2.6, 3.4);
const ARS443_END_SLOPE_MIN: f64 = 2.6;
const ARS443_UNIFORM_MAX: f64 = 2.6;
const ARS443_REDUCTION_MIN: f64 = 0.3;
const GRAD_ARS443_UNIFORM_MIN: f64 = 1.8;
const ENERGY_GROWTH_MAX: f64 = 1.05;
const ENERGY_STEPS: usize = 1000;
const SPECTRAL_CASES: usize = 1000;
const PARSEVAL_TOL: f64 = 1e-12;
const ROUND_TRIP_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: impl Into<String>, bad: impl Into<String>) -> Outcome {
    if cond {
        Ok(ok.into())
    } else {
        Err(bad.into())
    }
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    let ars222 = registry("ars222").unwrap();
    let low = order_residuals(&ars222, 2);
    if low.max_residual() >= CONDITION_PASS {
        return Err(format!(
            "ars222 order <= 2 residual {:e}",
            low.max_residual()
        ));
    }
    let third = order_residuals(&ars222, 3);
    let worst = third
        .conditions
        .iter()
        .map(|c| c.residual)
        .fold(0.0f64, f64::max);
    if worst <= CONDITION_FAIL {
        return Err(format!(
            "ars222 fails no third-order condition (max {worst:e})"
        ));
    }
    notes.push(format!("ars222 3rd-order max residual {worst:.3e}"));
    for name in ["ars443", "bhr553s"] {
        let r = order_residuals(&registry(name).unwrap(), 3).max_residual();
        if r >= CONDITION_PASS {
            return Err(format!("{name} order-3 residual {r:e}"));
        }
    }
    let stage = stage_conditions(&registry("ars443").unwrap()).unwrap();
    let failing = stage.failing().count();
    if failing == 0 {
        return Err("ars443 satisfies all stage/vanishing conditions".into());
    }
    notes.push(format!("ars443 fails {failing} stage/vanishing conditions"));
    for name in ["ars222", "ars443", "bhr553s"] {
        let c = classify(&registry(name).unwrap());
        if !(c.is_ck && c.is_isa) {
            return Err(format!("{name} classification {c:?}"));
        }
    }
    Ok(notes.join("; "))
}

fn criterion_2() -> Outcome {
    let models = [
        builtin_broadwell(1.0).unwrap(),
        builtin_grad(5, 1.0).unwrap(),
    ];
    let mut worst = 0.0f64;
    for (sys, cert) in &models {
        let report = check_structural_stability(sys.a(), sys.q(), cert, sys.stiff_rank()).unwrap();
        for (name, v) in report.flags() {
            if !v.pass || v.residual >= STABILITY_RESIDUAL {
                return Err(format!(
                    "m = {}: {name} pass = {} residual {:e}",
                    sys.dim(),
                    v.pass,
                    v.residual
                ));
            }
            worst = worst.max(v.residual);
        }
        let m = sys.dim();
        for i in m - sys.stiff_rank()..m {
            let mut q = sys.q().clone();
            q[(i, i)] = -q[(i, i)];
            let flipped = check_structural_stability(sys.a(), &q, cert, sys.stiff_rank()).unwrap();
            if flipped.cond_iii.pass {
                return Err(format!(
                    "m = {m}: flipping Q[{i},{i}] keeps condition (iii)"
                ));
            }
        }
    }
    Ok(format!(
        "max residual {worst:.1e}; every stiff sign flip fails (iii)"
    ))
}

fn random_complex(rng: &mut ChaCha8Rng, m: usize) -> ComplexMatrix {
    let data = (0..m * m)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let a = ComplexMatrix::from_vec(m, m, data).unwrap();
    let n = a.norm_inf();
    a.scale(Complex64::new(rng.gen_range(0.0..1.0) / n, 0.0))
}

fn oracle_slope(scheme: &str) -> f64 {
    let (sys, _) = builtin_broadwell(1.0).unwrap();
    let n = 8;
    let u0 = lab::initial_state("broadwell", n).unwrap();
    let t = 1.0;
    let exact = exact_evolve(&sys, &u0, t).unwrap();
    let tableau = registry(scheme).unwrap();
    let pairs: Vec<(f64, f64)> = (4..=8)
        .map(|p| {
            let dt = t / f64::from(1u32 << p);
            let end = StepPlan::new(&sys, &tableau, dt)
                .unwrap()
                .integrate(&u0, t)
                .unwrap();
            (dt, spectral::modal_error(&end, &exact).unwrap())
        })
        .collect();
    lab::fit_order(&pairs).unwrap().0
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..EXPM_CASES {
        let m = rng.gen_range(1..=6);
        let a = random_complex(&mut rng, m);
        let (t1, t2) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let lhs = expm(&a, t1)
            .unwrap()
            .matmul(&expm(&a, t2).unwrap())
            .unwrap();
        let semigroup = lhs.try_sub(&expm(&a, t1 + t2).unwrap()).unwrap().norm_max();
        let t: f64 = rng.gen_range(-2.0..2.0);
        let prod = expm(&a, t).unwrap().matmul(&expm(&a, -t).unwrap()).unwrap();
        let inverse = prod
            .try_sub(&ComplexMatrix::identity(m))
            .unwrap()
            .norm_max();
        worst = worst.max(semigroup).max(inverse);
    }
    if worst > EXPM_TOL {
        return Err(format!("expm identity defect {worst:e}"));
    }
    let s222 = oracle_slope("ars222");
    let sbhr = oracle_slope("bhr553s");
    check(
        s222 >= ORACLE_SLOPE_ARS222 && sbhr >= ORACLE_SLOPE_BHR,
        format!("expm defect {worst:.1e}; slopes ars222 {s222:.3}, bhr553s {sbhr:.3}"),
        format!("slopes ars222 {s222:.3} (>= {ORACLE_SLOPE_ARS222}), bhr553s {sbhr:.3} (>= {ORACLE_SLOPE_BHR})"),
    )
}

/// Runs the converge command of criterion 4/5 and returns the CSV bytes.
fn converge(model: &str, out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_relaxlab"))
        .args([
            "converge",
            "--model",
            model,
            "--schemes",
            "ars222,ars443,bhr553s",
            "--eps-lo",
            "1e-7",
            "--eps-hi",
            "1",
            "--eps-count",
            "15",
            "--dt-base",
            "32",
            "--dt-levels",
            "6",
            "--n",
            "40",
            "--t0",
            "1",
            "--t",
            "2",
            "--ref",
            "exact",
            "--layer",
            "fine",
            "--out",
        ])
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("converge exited with {status}"));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn slope(fits: &[OrderFit], scheme: &str, target: FitTarget) -> f64 {
    fits.iter()
        .find(|f| f.scheme == scheme && f.epsilon == target)
        .map(|f| f.slope)
        .unwrap_or(f64::NAN)
}

fn in_range(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && x <= hi
}

fn study_fits(bytes: &[u8]) -> Result<(ErrorTable, Vec<OrderFit>), String> {
    let table = lab::read_table(std::str::from_utf8(bytes).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    if table.len() != 3 * 15 * 6 {
        return Err(format!("{} rows, expected 270", table.len()));
    }
    let fits = lab::fit_table(&table).map_err(|e| e.to_string())?;
    Ok((table, fits))
}

fn criterion_4(bytes: &[u8]) -> Outcome {
    let (table, fits) = study_fits(bytes)?;
    let eps = table.epsilons("ars443");
    let (lo, hi) = (eps[0], eps[eps.len() - 1]);
    let u222 = slope(&fits, "ars222", FitTarget::Uniform);
    let ubhr = slope(&fits, "bhr553s", FitTarget::Uniform);
    let u443 = slope(&fits, "ars443", FitTarget::Uniform);
    let one443 = slope(&fits, "ars443", FitTarget::Epsilon(hi));
    let small443 = slope(&fits, "ars443", FitTarget::Epsilon(lo));
    let summary = format!(
        "uniform ars222 {u222:.3}, bhr553s {ubhr:.3}, ars443 {u443:.3}; ars443 at eps=1 {one443:.3}, at eps=1e-7 {small443:.3}"
    );
    check(
        in_range(u222, UNIFORM_ARS222)
            && in_range(ubhr, UNIFORM_BHR)
            && one443 >= ARS443_END_SLOPE_MIN
            && small443 >= ARS443_END_SLOPE_MIN
            && u443 <= ARS443_UNIFORM_MAX
            && one443 - u443 >= ARS443_REDUCTION_MIN,
        summary.clone(),
        summary,
    )
}

fn criterion_5(dir: &Path) -> Outcome {
    let bytes = converge("grad:5", &dir.join("grad.csv"))?;
    let (_, fits) = study_fits(&bytes)?;
    let u222 = slope(&fits, "ars222", FitTarget::Uniform);
    let ubhr = slope(&fits, "bhr553s", FitTarget::Uniform);
    let u443 = slope(&fits, "ars443", FitTarget::Uniform);
    let summary = format!("uniform ars222 {u222:.3}, bhr553s {ubhr:.3}, ars443 {u443:.3}");
    check(
        in_range(u222, UNIFORM_ARS222)
            && in_range(ubhr, UNIFORM_BHR)
            && u443 >= GRAD_ARS443_UNIFORM_MIN,
        summary.clone(),
        summary,
    )
}

fn criterion_6() -> Outcome {
    let n = 40;
    let dt = 1.0 / (n * n) as f64;
    let mut worst = 0.0f64;
    let mut count = 0;
    for scheme in tableaux::REGISTRY {
        let tableau = registry(scheme).unwrap();
        if !classify(&tableau).is_isa {
            continue;
        }
        for model in ["broadwell", "grad:5"] {
            for eps in [1.0, 1e-3, 1e-7] {
                let (sys, cert) = builtin(model, eps).unwrap();
                let u0 = lab::initial_state(model, n).unwrap();
                let plan = StepPlan::new(&sys, &tableau, dt).unwrap();
                let end = plan.integrate(&u0, dt * ENERGY_STEPS as f64).unwrap();
                let ratio =
                    energy_norm(&end, &cert.a0).unwrap() / energy_norm(&u0, &cert.a0).unwrap();
                if ratio.is_nan() || ratio > ENERGY_GROWTH_MAX {
                    return Err(format!("{scheme} {model} eps={eps:e}: growth {ratio}"));
                }
                worst = worst.max(ratio);
                count += 1;
            }
        }
    }
    Ok(format!("{count} runs, max energy ratio {worst:.6}"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut parseval, mut round_trip) = (0.0f64, 0.0f64);
    for case in 0..SPECTRAL_CASES {
        let n = rng.gen_range(1..=40);
        let m = rng.gen_range(1..=3);
        let deg = rng.gen_range(0..=n);
        let coeffs: Vec<Vec<(f64, f64)>> = (0..m)
            .map(|_| {
                (0..=deg)
                    .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let eval = |c: &[(f64, f64)], x: f64| -> f64 {
            c.iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let kx = k as f64 * x;
                    a * kx.cos() + if k == 0 { 0.0 } else { b * kx.sin() }
                })
                .sum()
        };
        let fields: Vec<Box<dyn Fn(f64) -> f64 + '_>> = coeffs
            .iter()
            .map(|c| Box::new(move |x: f64| eval(c, x)) as Box<dyn Fn(f64) -> f64>)
            .collect();
        let refs: Vec<&dyn Fn(f64) -> f64> = fields.iter().map(|f| f.as_ref()).collect();
        let state: ModalState = spectral::project(&refs, n);

        let p = 4 * n + 4;
        let quad: f64 = (0..p)
            .map(|j| {
                let x = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / p as f64;
                fields.iter().map(|f| f(x).powi(2)).sum::<f64>()
            })
            .sum::<f64>()
            * 2.0
            * std::f64::consts::PI
            / p as f64;
        let scale = quad.sqrt().max(1.0);
        parseval = parseval.max((l2_norm(&state) - quad.sqrt()).abs() / scale);

        if l2_norm(&derivative(&state)) > n as f64 * l2_norm(&state) * (1.0 + 1e-15) {
            return Err(format!("case {case}: derivative bound violated"));
        }
        let back = spectral::synthesize(&state);
        for (c, f) in fields.iter().enumerate() {
            for (x, u) in back.x.iter().zip(&back.values[c]) {
                round_trip = round_trip.max((u - f(*x)).abs() / scale);
            }
        }
    }
    check(
        parseval <= PARSEVAL_TOL && round_trip <= ROUND_TRIP_TOL,
        format!(
            "{SPECTRAL_CASES} cases; Parseval defect {parseval:.1e}, round trip {round_trip:.1e}"
        ),
        format!("Parseval defect {parseval:e}, round trip {round_trip:e}"),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut first_run: Option<Vec<u8>> = None;
    let mut all_pass = true;
    for id in 1..=8 {
        let start = Instant::now();
        let outcome = match id {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => converge("broadwell", &dir.path().join("broadwell_a.csv")).and_then(|bytes| {
                let r = criterion_4(&bytes);
                first_run = Some(bytes);
                r
            }),
            5 => criterion_5(dir.path()),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => {
                let first = match &first_run {
                    Some(b) => Ok(b.clone()),
                    None => converge("broadwell", &dir.path().join("broadwell_a.csv")),
                };
                first.and_then(|a| {
                    let b = converge("broadwell", &dir.path().join("broadwell_b.csv"))?;
                    check(
                        a == b,
                        format!("two converge runs byte-identical ({} bytes)", a.len()),
                        "converge outputs differ",
                    )
                })
            }
            _ => unreachable!(),
        };
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {id}: PASS ({secs:.1}s) {msg}"),
            Err(msg) => {
                all_pass = false;
                println!("criterion {id}: FAIL ({secs:.1}s) {msg}");
            }
        }
    }
    if !all_pass {
        std::process::exit(1);
    }
}
