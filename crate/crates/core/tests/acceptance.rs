//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nonosc::charroots::{find_real_roots, CharProblem, ScanOptions};
use nonosc::cli::{cmd_check, Exit, Format, OutputArgs, WindowArgs};
use nonosc::construct::{
    iterate_delay, iterates, synthesize_solution, Case, GeneratingCandidate, IterationOptions,
    Monotonicity,
};
use nonosc::criteria::{
    check_cor_1_2, check_cor_1_3, check_cor_1_4_remark, check_cor_2_2, check_cor_2_3,
    check_cor_2_4_remark, check_divergence, check_sys30, oscillation_note, sweep_region,
    sys30_constraints, Certificate, ConditionId, CriteriaOptions, RegionAxes, Witness,
};
use nonosc::gridfn::GridFunction;
use nonosc::model::{Bounds, CoefficientExpr, Ivp, ProblemSpec, Sign, Window};
use nonosc::simulate::{
    classify_trajectory, equation_residual, relax, residual, RelaxOptions, Trajectory,
    TrajectoryClass,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spec(a: &str, b: &str, g: &str, h: &str) -> ProblemSpec<f64> {
    ProblemSpec::parse(a, b, g, h, Sign::Plus, Sign::Minus, 0.0).expect("valid expressions")
}

fn example1() -> ProblemSpec<f64> {
    spec("1.4", "1.3", "t-0.3", "t+0.3")
}

fn example2() -> ProblemSpec<f64> {
    spec("1.375+0.025*sin(t)", "1.325+0.025*cos(t)", "t-0.3", "t+0.3")
}

fn unit_candidate(window: Window<f64>) -> GeneratingCandidate<f64> {
    GeneratingCandidate::constant(window, 1e-3, 1.0, Case::DelayDominant).expect("nonnegative")
}

fn inequality_value() -> Outcome {
    let c = unit_candidate(Window::new(0.0, 10.0));
    let mut worst: f64 = 0.0;
    for t in [1.0, 2.5, 5.0, 7.75, 9.0] {
        let v = nonosc::construct::ineq_residual_delay(&c, &example1(), t)
            .map_err(|e| e.to_string())?
            + 1.0;
        worst = worst.max((v - 0.9267).abs());
        ensure((v - 0.9267).abs() <= 1e-3, || {
            format!("value {v} at t = {t}")
        })?;
    }
    Ok(format!("1.4e^0.3 - 1.3e^-0.3 within {worst:.1e} of 0.9267"))
}

fn characteristic_roots() -> Outcome {
    let set = find_real_roots(
        &CharProblem::delay_dominant(1.4, 1.3, 0.3, 0.3),
        &ScanOptions::default(),
    );
    let got = set.lambdas();
    let want = [-4.2282f64, 0.5436, 3.3541];
    ensure(got.len() == 3, || {
        format!("expected three roots, got {got:?}")
    })?;
    for (g, w) in got.iter().zip(want) {
        ensure((g - w).abs() <= 1e-3, || format!("root {g} vs {w}"))?;
    }
    Ok(format!("roots {:.4}, {:.4}, {:.4}", got[0], got[1], got[2]))
}

fn oscillation_note_values() -> Outcome {
    let opts = CriteriaOptions::default();
    let note =
        oscillation_note(&example1(), Window::new(0.0, 20.0), &opts).map_err(|e| e.to_string())?;
    ensure((note.advance_inf - 0.39).abs() <= 1e-12, || {
        format!("advance integral {}", note.advance_inf)
    })?;
    ensure(note.advance_inf > (-1.0f64).exp(), || {
        "0.39 not above 1/e".into()
    })?;
    ensure(
        note.delay_subequation_oscillates() && note.advance_subequation_oscillates(),
        || "a sub-equation reported nonoscillatory".into(),
    )?;
    let c14 = check_cor_1_4_remark(&example1(), Window::new(0.0, 20.0), &opts)
        .map_err(|e| e.to_string())?;
    ensure(!c14.holds(), || {
        "1/e test certified the delay sub-equation".into()
    })?;
    Ok(format!(
        "int_t^h b = {:.12}, int_g^t a = {:.12}, both above 1/e",
        note.advance_inf, note.delay_inf
    ))
}

fn example2_pipeline() -> Outcome {
    let path =
        std::env::temp_dir().join(format!("nonosc-acceptance-ex2-{}.json", std::process::id()));
    std::fs::write(
        &path,
        r#"{"a":"1.375+0.025*sin(t)","b":"1.325+0.025*cos(t)","g":"t-0.3","h":"t+0.3","delta1":1,"delta2":-1,"t0":0}"#,
    )
    .map_err(|e| e.to_string())?;
    let args = WindowArgs {
        spec: PathBuf::from(&path),
        t1: None,
        t_end: None,
        step: 1e-3,
        tol: None,
        output: OutputArgs {
            format: Format::Report,
            out: None,
        },
    };
    let check = cmd_check(&args);
    let _ = std::fs::remove_file(&path);
    let (_, code) = check.map_err(|f| f.0)?;
    ensure(code == Exit::Success, || {
        format!("check-all exit {}", code.code())
    })?;

    let window = Window::new(0.0, 20.0);
    let res = iterate_delay(
        &unit_candidate(window),
        &example2(),
        window,
        &IterationOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(res.converged, || "iteration did not converge".into())?;
    let x = synthesize_solution(&res.u_limit, Monotonicity::Decreasing, 0.0)
        .map_err(|e| e.to_string())?;
    ensure(x.values().iter().all(|&v| v > 0.0), || {
        "x not positive".into()
    })?;
    ensure(x.values().windows(2).all(|w| w[1] <= w[0]), || {
        "x increases somewhere".into()
    })?;
    ensure(res.max_eq_residual <= 1e-4, || {
        format!("residual {}", res.max_eq_residual)
    })?;

    let div = check_divergence(
        ConditionId::COR_1_5,
        &example2(),
        Window::new(0.0, 100.0),
        &CriteriaOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let last = match &div.witness {
        Some(Witness::Checkpoints(cs)) => cs.last().map(|c| c.1).unwrap_or(f64::NAN),
        _ => f64::NAN,
    };
    ensure(div.holds() && (last - 5.0).abs() <= 0.1, || {
        format!("divergence {:?}, I(100) = {last}", div.verdict)
    })?;
    Ok(format!(
        "exit 0, {} iterations, residual {:.1e}, I(100) = {last:.4}",
        res.iterations, res.max_eq_residual
    ))
}

fn example3_feasibility() -> Outcome {
    let bounds: Bounds<f64> = Bounds::from_constants(1.2, 1.4, 1.6, 1.8, 0.2, 0.3);
    let opts = CriteriaOptions::default();
    let cert = check_sys30(&bounds, &opts);
    ensure(cert.holds(), || format!("system reported {}", cert.verdict))?;
    let (gy, fx): (f64, f64) = sys30_constraints(&bounds, 2.0, 3.0);
    ensure((gy - 1.90).abs() <= 0.01 && gy < 2.0, || {
        format!("G(3) = {gy}")
    })?;
    ensure((fx - 2.48).abs() <= 0.01 && fx < 3.0, || {
        format!("F(2) = {fx}")
    })?;
    let region = sweep_region(
        &bounds,
        RegionAxes::InequalityVariables,
        (0.0, 4.0),
        (0.0, 4.0),
        0.05,
        &opts,
    )
    .map_err(|e| e.to_string())?;
    let (i, j) = (40, 60);
    ensure(
        (region.axis1[i] - 2.0).abs() < 1e-9 && (region.axis2[j] - 3.0).abs() < 1e-9,
        || "axis layout".into(),
    )?;
    ensure(region.is_feasible(i, j), || {
        "(2, 3) not marked feasible".into()
    })?;
    Ok(format!(
        "G(3) = {gy:.4}, F(2) = {fx:.4}, {} feasible cells",
        region.count_feasible()
    ))
}

fn example4_region() -> Outcome {
    let (tau, sigma) = (0.2, 0.3);
    let template = Bounds::autonomous(0.0, 0.0, tau, sigma);
    let opts = CriteriaOptions::default();
    let region = sweep_region(
        &template,
        RegionAxes::Coefficients,
        (0.05, 3.0),
        (0.05, 3.0),
        0.05,
        &opts,
    )
    .map_err(|e| e.to_string())?;
    ensure(region.count_feasible() > 0, || "empty region".into())?;
    let reference = region.reference.as_ref().ok_or("no reference line")?;
    for (a, b) in region.axis1.iter().zip(reference) {
        ensure(
            (tau * a + sigma * b - (-1.0f64).exp()).abs() < 1e-12,
            || format!("reference off line at a = {a}"),
        )?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let i = rng.gen_range(0..region.axis1.len());
        let j = rng.gen_range(0..region.axis2.len());
        let (a, b) = (region.axis1[i], region.axis2[j]);
        let direct = check_sys30(&Bounds::autonomous(a, b, tau, sigma), &opts).holds();
        ensure(direct == region.is_feasible(i, j), || {
            format!("cell ({a}, {b}) disagrees")
        })?;
    }
    let cmp = region.comparison.ok_or("no line comparison")?;
    Ok(format!(
        "{} of {} cells feasible, {} feasible above the line, 100 probes agree",
        region.count_feasible(),
        region.axis1.len() * region.axis2.len(),
        cmp.above_feasible
    ))
}

/// Random delay-dominant spec with sinusoidal coefficients and variable delays.
fn random_delay_dominant(rng: &mut ChaCha8Rng) -> ProblemSpec<f64> {
    let a0 = rng.gen_range(0.3..2.0);
    let amp_a = rng.gen_range(0.0..0.2) * a0;
    let b0 = rng.gen_range(0.0..0.9) * (a0 - amp_a);
    let amp_b = rng.gen_range(0.0..0.1) * b0;
    let tau = rng.gen_range(0.05..0.4);
    let sigma = rng.gen_range(0.05..0.4);
    let w = rng.gen_range(0.5..3.0);
    spec(
        &format!("{a0}+{amp_a}*sin({w}*t)"),
        &format!("{b0}+{amp_b}*cos({w}*t)"),
        &format!("t-{tau}-{}*(1+cos(t))", 0.25 * tau),
        &format!("t+{sigma}"),
    )
}

fn monotone_iteration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let window = Window::new(0.0, 8.0);
    let (mut accepted, mut attempts, mut steps) = (0, 0, 0);
    while accepted < 50 {
        attempts += 1;
        ensure(attempts <= 5000, || {
            format!("only {accepted} admissible specs in {attempts} draws")
        })?;
        let s = random_delay_dominant(&mut rng);
        let scale = if rng.gen_bool(0.5) {
            1.0
        } else {
            std::f64::consts::E
        };
        let u =
            GridFunction::from_fn(window, 1e-3, |t| scale * s.a(t)).map_err(|e| e.to_string())?;
        let cand = GeneratingCandidate::new(u, Case::DelayDominant).map_err(|e| e.to_string())?;
        let Ok(mut it) = iterates(&cand, &s, window, 1e-9) else {
            continue;
        };
        accepted += 1;
        let floor: Vec<f64> = (0..it.current().len()).map(|i| it.lower_bound(i)).collect();
        let mut prev = it.current().values().to_vec();
        for _ in 0..25 {
            let next = it.next().expect("infinite stream");
            steps += 1;
            for (k, (&n, &p)) in next.values().iter().zip(&prev).enumerate() {
                ensure(n >= 0.0 && n <= p + 1e-9, || {
                    format!("spec {accepted}: u_next = {n}, u = {p} at node {k}")
                })?;
                ensure(floor[k] - 1e-9 <= p, || {
                    format!("spec {accepted}: u = {p} below a - b = {}", floor[k])
                })?;
            }
            prev = next.into_values();
        }
    }
    Ok(format!(
        "50 specs ({attempts} draws), {steps} iterates monotone and above a - b"
    ))
}

fn root_existence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 1e-4;
    let (mut roots, mut worst) = (0usize, 0.0f64);
    for n in 0..500 {
        let mut draw = || 5.0 * (1.0 - rng.gen::<f64>());
        let (a, b, tau, sigma) = (draw(), draw(), draw(), draw());
        let problem = CharProblem::mixed(a, b, tau, sigma);
        let set = find_real_roots(&problem, &ScanOptions::default());
        ensure(!set.roots.is_empty(), || {
            format!("problem {n} ({a}, {b}, {tau}, {sigma}) has no root")
        })?;
        let s = ProblemSpec::autonomous(a, b, tau, sigma, Sign::Minus, Sign::Plus, 0.0);
        let w = Window::new(-tau, 0.5 + sigma);
        for lambda in set.lambdas() {
            // normalised so the largest sample is 1
            let peak = if lambda > 0.0 { w.hi } else { w.lo };
            let x = GridFunction::from_fn(w, h, |t| (lambda * (t - peak)).exp())
                .map_err(|e| e.to_string())?;
            let r = residual(&Trajectory::from_grid(x, tau, sigma), &s);
            worst = worst.max(r);
            roots += 1;
            ensure(r <= 1e-6, || {
                format!("problem {n}: residual {r} at lambda = {lambda}")
            })?;
        }
    }
    Ok(format!(
        "500 problems, {roots} roots, worst residual {worst:.1e}"
    ))
}

fn cross_validation() -> Outcome {
    let mut cases = vec![
        ("example 1", example1(), Window::new(0.0, 10.0)),
        ("example 2", example2(), Window::new(0.0, 30.0)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..4 {
        cases.push((
            ["random 1", "random 2", "random 3", "random 4"][k],
            random_delay_dominant(&mut rng),
            Window::new(0.0, 15.0),
        ));
    }
    let opts = IterationOptions::default();
    let mut report = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, s, window) in cases {
        let res = iterate_delay(&unit_candidate(window), &s, window, &opts);
        let Ok(res) = res else { continue };
        if !res.converged {
            continue;
        }
        // the constructed x equals 1 before t1, so that is its history
        let ivp = Ivp::new(s.clone(), CoefficientExpr::constant(1.0), 1.0);
        let relax_opts = RelaxOptions {
            max_sweeps: 2000,
            ..RelaxOptions::default()
        };
        let tr = relax(&ivp, window.hi, &relax_opts).map_err(|e| e.to_string())?;
        ensure(tr.converged, || {
            format!("{name}: relaxation did not converge")
        })?;
        let diff = tr.x.max_abs_diff(&res.x);
        worst = worst.max(diff);
        ensure(diff <= 10.0 * opts.tol, || {
            format!("{name}: max difference {diff:.2e}")
        })?;
        let class = classify_trajectory(&tr, window.lo).map_err(|e| e.to_string())?;
        ensure(class == TrajectoryClass::NonoscillatoryPositive, || {
            format!("{name}: classified {class}")
        })?;
        report.push(name);
    }
    ensure(report.len() >= 2, || {
        "fewer than two constructions converged".into()
    })?;
    Ok(format!("{} specs agree within {worst:.1e}", report.len()))
}

fn quadrature_and_order() -> Outcome {
    let w = Window::new(0.0f64, 3.0);
    let f = GridFunction::from_fn(w, 1e-3, |t: f64| (2.0 * t).sin() + t * t)
        .map_err(|e| e.to_string())?;
    let g = GridFunction::from_fn(w, 1e-3, |t: f64| (-t).exp()).map_err(|e| e.to_string())?;
    let int = |q: &GridFunction<f64>, lo, hi| {
        q.integrate(lo, hi)
            .map(|r| r.value)
            .map_err(|e| e.to_string())
    };
    for (lo, mid, hi) in [(0.0, 1.0, 3.0), (0.1234, 0.5, 2.9876), (0.3, 0.30049, 1.7)] {
        let split = int(&f, lo, mid)? + int(&f, mid, hi)?;
        let whole = int(&f, lo, hi)?;
        ensure((split - whole).abs() <= 1e-12, || {
            format!("additivity gap {:e}", split - whole)
        })?;
    }
    let (al, be) = (2.5, -0.75);
    let combo = GridFunction::from_fn(w, 1e-3, |t| al * f.value_at(t) + be * g.value_at(t))
        .map_err(|e| e.to_string())?;
    let lin = int(&combo, 0.2, 2.7)? - (al * int(&f, 0.2, 2.7)? + be * int(&g, 0.2, 2.7)?);
    ensure(lin.abs() <= 1e-12, || format!("linearity gap {lin:e}"))?;

    let s = ProblemSpec::autonomous(1.4, 1.3, 0.3, 0.3, Sign::Plus, Sign::Minus, 0.0);
    let roots = find_real_roots(
        &CharProblem::advance_dominant(1.4, 1.3, 0.3, 0.3).flipped(),
        &ScanOptions::default(),
    );
    let mut min_order = f64::INFINITY;
    for lambda in roots.lambdas() {
        // flipped problem uses x = e^{-λt}
        let rate = -lambda;
        let res_at = |h: f64| -> Result<f64, String> {
            let x = GridFunction::from_fn(Window::new(-0.3, 1.3), h, |t| (rate * t).exp())
                .map_err(|e| e.to_string())?;
            Ok(equation_residual(&x, &s, 0.3, 0.3))
        };
        let (r1, r2) = (res_at(2e-3)?, res_at(1e-3)?);
        min_order = min_order.min((r1 / r2).log2());
    }
    ensure(roots.roots.len() == 3 && min_order >= 1.9, || {
        format!("order {min_order} over {} roots", roots.roots.len())
    })?;
    Ok(format!(
        "additivity and linearity within 1e-12, residual order {min_order:.3}"
    ))
}

/// Dominated partner `(a, b, g, h)` of a dominating spec: the inequality is
/// pulled towards `b ≤ a` and the deviations shrink.
fn dominated(
    rng: &mut ChaCha8Rng,
    dom: (&str, &str, f64, f64),
    advance: bool,
) -> (String, String, f64, f64) {
    let (big, small, tau, sigma) = dom;
    let p = rng.gen_range(0.0..0.5);
    let q = rng.gen_range(0.0..0.5);
    let shrunk_big = format!("(({big})-{p}*(({big})-({small})))");
    let raised_small = format!("(({small})+{q}*({shrunk_big}-({small})))");
    let tau2 = tau * rng.gen_range(0.5..1.0);
    let sigma2 = sigma * rng.gen_range(0.5..1.0);
    if advance {
        (raised_small, shrunk_big, tau2, sigma2)
    } else {
        (shrunk_big, raised_small, tau2, sigma2)
    }
}

fn comparison_pairs() -> Outcome {
    type Check = fn(
        &ProblemSpec<f64>,
        Window<f64>,
        &CriteriaOptions<f64>,
    ) -> Result<Certificate<f64>, nonosc::criteria::CriteriaError>;
    let delay_checks: [Check; 3] = [check_cor_1_2, check_cor_1_3, check_cor_1_4_remark];
    let advance_checks: [Check; 3] = [check_cor_2_2, check_cor_2_3, check_cor_2_4_remark];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let window = Window::new(0.0, 20.0);
    let opts = CriteriaOptions::default();
    let (mut compared, mut both_hold) = (0, 0);
    for n in 0..30 {
        let advance = n % 2 == 1;
        let big0 = rng.gen_range(0.4..2.0);
        let small0 = big0 * rng.gen_range(0.3..0.95);
        let amp = 0.1 * small0;
        let big = format!("{big0}+{amp}*sin(t)");
        let small = format!("{small0}-{amp}*cos(t)");
        let tau = rng.gen_range(0.05..0.5);
        let sigma = rng.gen_range(0.05..0.5);
        let (da, db) = if advance {
            (small.clone(), big.clone())
        } else {
            (big.clone(), small.clone())
        };
        let dominating = spec(&da, &db, &format!("t-{tau}"), &format!("t+{sigma}"));
        let (a, b, tau2, sigma2) = dominated(&mut rng, (&big, &small, tau, sigma), advance);
        let dominated = spec(&a, &b, &format!("t-{tau2}"), &format!("t+{sigma2}"));
        for check in if advance {
            &advance_checks
        } else {
            &delay_checks
        } {
            let strong = check(&dominating, window, &opts).map_err(|e| e.to_string())?;
            let weak = check(&dominated, window, &opts).map_err(|e| e.to_string())?;
            compared += 1;
            if strong.holds() {
                ensure(weak.holds(), || {
                    format!("pair {n}: {} holds for the dominating spec only", strong.id)
                })?;
                both_hold += 1;
            }
        }
    }
    ensure(both_hold > 0, || {
        "no dominating certificate held; the property was not exercised".into()
    })?;
    Ok(format!(
        "30 pairs, {compared} certificate comparisons, {both_hold} inherited"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("inequality value", inequality_value),
        ("characteristic roots", characteristic_roots),
        ("oscillation note", oscillation_note_values),
        ("example 2 pipeline", example2_pipeline),
        ("example 3 feasibility", example3_feasibility),
        ("example 4 region", example4_region),
        ("monotone iteration", monotone_iteration),
        ("root existence", root_existence),
        ("cross-validation", cross_validation),
        ("quadrature and order", quadrature_and_order),
        ("comparison pairs", comparison_pairs),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.2}s)", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({secs:.2}s)", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
