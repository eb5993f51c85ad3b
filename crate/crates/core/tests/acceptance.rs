//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use breg_core::diagnostics::{
    check_dual_membership, check_gradients, check_lc_sampled, check_subgradient_bound,
    check_surrogate_descent, check_three_point, check_trace_inequalities, CheckReport,
};
use breg_core::kernels::Kernel;
use breg_core::linalg::operator_norm;
use breg_core::problems::{
    gen_nonneg_linear, gen_quadratic, gen_sparse_linear, oracle_elastic_net_bp, ProblemInstance,
};
use breg_core::regularizers::Regularizer;
use breg_core::solver::{
    default_delta, default_omega, descent_rho, mirror_run_with_history, run_with_history,
    RunOutput, Schedule, SolverConfig,
};
use breg_core::{Model, Vector};

const SPARSE_SEEDS: std::ops::RangeInclusive<u64> = 1..=10;
const SPARSE_MU: f64 = 5.0;
const SPARSE_MAX_ITERS: usize = 50_000;
const NONNEG_SEED: u64 = 2;
const NONNEG_MU: f64 = 1.0;
const NONNEG_MAX_ITERS: usize = 20_000;
const QUAD_SEED: u64 = 3;
const QUAD_MU: f64 = 1.0;
const QUAD_ITERS: usize = 30_000;
const EPS: f64 = 0.1;
const RADIUS: f64 = 1e6;

/// A finished run together with what is needed to re-check it.
struct Recorded {
    label: String,
    model: Model,
    config: SolverConfig,
    out: RunOutput,
    rho: f64,
}

impl Recorded {
    fn new(label: String, model: Model, config: SolverConfig, out: RunOutput) -> Self {
        let l = model
            .energy
            .smoothness_constant(&model.kernel)
            .unwrap()
            .value;
        let rho = descent_rho(l, model.kernel.symmetry_coefficient(), config.omega);
        Self {
            label,
            model,
            config,
            out,
            rho,
        }
    }

    fn mu(&self) -> f64 {
        self.config.schedule.mu.base()
    }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn config_for(
    model: &Model,
    x0: Vector,
    p0: Vector,
    delta: f64,
    mu: f64,
    iters: usize,
) -> SolverConfig {
    let mut cfg = SolverConfig::with_defaults(model, mu, x0, p0, iters).unwrap();
    cfg.schedule = Schedule::constant(delta, mu);
    cfg
}

fn auto_delta(model: &Model) -> f64 {
    let l = model
        .energy
        .smoothness_constant(&model.kernel)
        .unwrap()
        .value;
    let alpha = model.kernel.symmetry_coefficient();
    default_delta(alpha, default_omega(alpha), l)
}

fn sparse_delta(inst: &ProblemInstance) -> f64 {
    let a = inst.model.energy.matrix().unwrap();
    0.99 / operator_norm(&(a * a.transpose()))
}

fn sparse_run(seed: u64, iters: usize, tol: f64) -> (ProblemInstance, Recorded) {
    let inst = gen_sparse_linear(seed, 3, 6, 1).unwrap();
    let delta = sparse_delta(&inst);
    let mut cfg = config_for(
        &inst.model,
        Vector::zeros(6),
        Vector::zeros(6),
        delta,
        SPARSE_MU,
        iters,
    );
    cfg.tol_step = tol;
    cfg.tol_residual = if tol > 0.0 { 1e-13 } else { 0.0 };
    let out = run_with_history(&cfg, &inst.model).unwrap();
    let rec = Recorded::new(
        format!("sparse_linear seed {seed}"),
        inst.model.clone(),
        cfg,
        out,
    );
    (inst, rec)
}

fn nonneg_run(iters: usize, tol_step: f64) -> Recorded {
    let inst = gen_nonneg_linear(NONNEG_SEED, 4, 6, 2, EPS).unwrap();
    let delta = auto_delta(&inst.model);
    let (x0, p0) = inst.default_start(delta, NONNEG_MU).unwrap();
    let mut cfg = config_for(&inst.model, x0, p0, delta, NONNEG_MU, iters);
    cfg.tol_step = tol_step;
    let out = run_with_history(&cfg, &inst.model).unwrap();
    Recorded::new(
        format!("nonneg_linear seed {NONNEG_SEED}"),
        inst.model,
        cfg,
        out,
    )
}

fn quadratic_run(iters: usize) -> Recorded {
    let inst = gen_quadratic(QUAD_SEED, 20, 5, 2, EPS).unwrap();
    let delta = auto_delta(&inst.model);
    let (x0, p0) = inst.default_start(delta, QUAD_MU).unwrap();
    let mut cfg = config_for(&inst.model, x0, p0, delta, QUAD_MU, iters);
    cfg.tol_step = 0.0;
    let out = run_with_history(&cfg, &inst.model).unwrap();
    Recorded::new(format!("quadratic seed {QUAD_SEED}"), inst.model, cfg, out)
}

fn trace_report(r: &Recorded) -> CheckReport {
    check_trace_inequalities(&r.out.trace, Some(r.out.final_state.f_beta), r.rho, r.mu())
}

fn fmt_report(label: &str, rep: &CheckReport) -> String {
    format!(
        "{label}: {} max_violation={:.3e} over {}",
        rep.name, rep.max_violation, rep.samples_or_iters
    )
}

fn criterion_1(runs: &mut Vec<Recorded>) -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut max_iters = 0;
    let mut failures = Vec::new();
    for seed in SPARSE_SEEDS {
        let (inst, rec) = sparse_run(seed, SPARSE_MAX_ITERS, 1e-26);
        let a = inst.model.energy.matrix().unwrap();
        let delta = rec.config.schedule.delta;
        match oracle_elastic_net_bp(a, inst.model.energy.data(), SPARSE_MU, delta) {
            Ok(sol) => {
                let err = (&rec.out.final_state.x - &sol.x).amax();
                worst = worst.max(err);
                if err > 1e-6 || sol.kkt_residual > 1e-10 {
                    failures.push(format!(
                        "seed {seed}: err {err:.2e}, kkt {:.2e}",
                        sol.kkt_residual
                    ));
                }
            }
            Err(e) => failures.push(format!("seed {seed}: oracle {e}")),
        }
        max_iters = max_iters.max(rec.out.iterations());
        runs.push(rec);
    }
    let elapsed = start.elapsed();
    let fast = elapsed < Duration::from_secs(5);
    outcome(
        failures.is_empty() && fast && max_iters <= SPARSE_MAX_ITERS,
        format!(
            "max |x - x_oracle|_inf = {worst:.2e} (tol 1e-6), max iterations {max_iters}, time {elapsed:.2?} (limit 5 s){}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn criterion_2(runs: &mut Vec<Recorded>) -> Outcome {
    let (_, sparse) = sparse_run(1, 1000, 0.0);
    let mut batch = vec![sparse, nonneg_run(1000, 0.0), quadratic_run(1000)];
    for r in &mut batch {
        r.label.push_str(" (short)");
    }
    let mut passed = true;
    let mut lines = Vec::new();
    for r in &batch {
        let rep = trace_report(r);
        passed &= rep.passed && rep.tolerance <= 1e-10 && r.out.iterations() == 1000;
        lines.push(fmt_report(&r.label, &rep));
    }
    runs.extend(batch);
    outcome(passed, lines.join("; "))
}

fn criterion_3(runs: &[Recorded]) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut offender = String::new();
    for r in runs {
        let alpha = r.model.kernel.symmetry_coefficient();
        let l = r
            .model
            .energy
            .smoothness_constant(&r.model.kernel)
            .unwrap()
            .value;
        let omega = r.config.omega;
        let f0 = r.out.trace[0].f_beta;
        let bound = (1.0 + alpha - omega) / (omega * l) * f0;
        let mut partial = 0.0;
        for rec in &r.out.trace {
            partial += rec.d_h_step;
            let ratio = partial / bound;
            if ratio > worst {
                worst = ratio;
                offender = r.label.clone();
            }
        }
    }
    outcome(
        worst <= 1.0,
        format!(
            "max partial sum / bound = {worst:.3e} ({offender}) over {} runs",
            runs.len()
        ),
    )
}

fn criterion_4(runs: &mut Vec<Recorded>) -> Outcome {
    let start = Instant::now();
    let r = quadratic_run(QUAD_ITERS);
    let elapsed = start.elapsed();
    let grad = r.model.energy.grad(&r.out.final_state.x).unwrap().norm();
    let steps: Vec<f64> = r.out.trace.iter().map(|t| t.step_norm).collect();
    let total: f64 = steps.iter().sum();
    let k = steps.len();
    // Last decade on a log scale: iterations K/10 .. K.
    let decade: f64 = steps[k / 10..].iter().sum();
    let share = decade / total;
    let passed = grad <= 1e-4 && share <= 0.01 && elapsed < Duration::from_secs(10);
    runs.push(r);
    outcome(
        passed,
        format!(
            "|grad E(x_K)| = {grad:.2e} (tol 1e-4), path length share of iterations {}..{k} = {share:.2e} (tol 1e-2), time {elapsed:.2?} (limit 10 s)",
            k / 10
        ),
    )
}

fn criterion_5(runs: &mut Vec<Recorded>) -> Outcome {
    let r = nonneg_run(NONNEG_MAX_ITERS, 1e-24);
    let min_iterate = r
        .out
        .history
        .iter()
        .map(|s| s.x.min())
        .fold(f64::INFINITY, f64::min);
    let monotone = r
        .out
        .trace
        .windows(2)
        .map(|w| w[1].f_beta - w[0].f_beta)
        .chain(std::iter::once(
            r.out.final_state.f_beta - r.out.trace.last().unwrap().f_beta,
        ))
        .fold(f64::NEG_INFINITY, f64::max);
    let x = &r.out.final_state.x;
    let p = &r.out.final_state.p;
    let delta = r.config.schedule.delta;
    let q = r.model.kernel.grad(x).unwrap() / delta + p * r.mu();
    let at = r.model.energy.matrix().unwrap().transpose();
    let lambda = at.clone().svd(true, true).solve(&q, 1e-14).unwrap();
    let fit = (&at * lambda - &q).amax();
    let interior = x.min() > 1e-6;
    let passed = min_iterate > 0.0 && monotone <= 1e-10 && (!interior || fit <= 1e-5);
    let detail = format!(
        "min iterate entry {min_iterate:.3e}, max f_beta increase {monotone:.2e}, min x* = {:.3e} ({}), multiplier fit {fit:.2e} (tol 1e-5), residual |Ax*-b| = {:.2e} after {} iterations",
        x.min(),
        if interior { "interior" } else { "boundary, fit not required" },
        r.out.final_state.e_val.max(0.0).sqrt().max(r.model.energy.residual(x)),
        r.out.iterations()
    );
    runs.push(r);
    outcome(passed, detail)
}

fn with_regularizer(inst: &ProblemInstance, reg: Regularizer) -> ProblemInstance {
    let mut inst = inst.clone();
    inst.model = Model::new(inst.model.energy.clone(), inst.model.kernel, reg).unwrap();
    inst
}

fn criterion_6(runs: &mut Vec<Recorded>) -> Outcome {
    let bases = [
        gen_sparse_linear(1, 3, 6, 1).unwrap(),
        gen_nonneg_linear(NONNEG_SEED, 4, 6, 2, EPS).unwrap(),
        gen_quadratic(QUAD_SEED, 20, 5, 2, EPS).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    let mut passed = true;
    for base in &bases {
        let n = base.model.dim();
        for reg in [Regularizer::l1(n), Regularizer::zero(n)] {
            let kind = reg.kind();
            let inst = with_regularizer(base, reg);
            let delta = auto_delta(&inst.model);
            let mu = 1.0;
            let (x0, p0) = inst.default_start(delta, mu).unwrap();
            let mut cfg = config_for(&inst.model, x0, p0, delta, mu, 100);
            cfg.tol_step = 0.0;
            let a = run_with_history(&cfg, &inst.model).unwrap();
            let b = mirror_run_with_history(&cfg, &inst.model).unwrap();
            let mut diff: f64 = 0.0;
            let same_len = a.trace.len() == 100 && b.trace.len() == 100;
            for (ra, rb) in a.trace.iter().zip(&b.trace) {
                for (u, v) in ra.values().iter().zip(rb.values().iter()) {
                    diff = diff.max((u - v).abs() / u.abs().max(1.0));
                }
            }
            for (sa, sb) in a.history.iter().zip(&b.history) {
                diff = diff.max((&sa.x - &sb.x).amax()).max((&sa.p - &sb.p).amax());
            }
            passed &= same_len && diff <= 1e-10;
            worst = worst.max(diff);
            lines.push(format!(
                "{:?}/{kind:?} {diff:.1e}",
                inst.model.kernel.kind()
            ));
            let label = format!("{:?}/{kind:?}", inst.model.kernel.kind());
            runs.push(Recorded::new(
                format!("{label} run"),
                inst.model.clone(),
                cfg.clone(),
                a,
            ));
            runs.push(Recorded::new(
                format!("{label} mirror"),
                inst.model.clone(),
                cfg,
                b,
            ));
        }
    }
    outcome(
        passed,
        format!(
            "max deviation {worst:.2e} (tol 1e-10): {}",
            lines.join(", ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut passed = true;
    let mut lines = Vec::new();
    let models = [
        gen_sparse_linear(1, 3, 6, 1).unwrap().model,
        gen_nonneg_linear(NONNEG_SEED, 4, 6, 2, EPS).unwrap().model,
        gen_quadratic(QUAD_SEED, 20, 5, 2, EPS).unwrap().model,
    ];
    for kernel in [
        Kernel::squared_norm(6),
        Kernel::shifted_entropy(6, EPS).unwrap(),
        Kernel::quartic(6),
    ] {
        let rep = check_three_point(&kernel, 1000, 17).unwrap();
        passed &= rep.passed && rep.tolerance <= 1e-9;
        lines.push(fmt_report(&format!("{:?}", kernel.kind()), &rep));
    }
    for (i, model) in models.iter().enumerate() {
        let rep = check_gradients(model, 200, 23 + i as u64, 1e-6).unwrap();
        passed &= rep.passed;
        lines.push(fmt_report(&format!("{:?}", model.energy.kind()), &rep));
        let l = model
            .energy
            .smoothness_constant(&model.kernel)
            .unwrap()
            .value;
        let rep = check_lc_sampled(&model.energy, &model.kernel, l, 1000, 29 + i as u64).unwrap();
        passed &= rep.passed && rep.tolerance <= 1e-9;
        lines.push(fmt_report(&format!("{:?}", model.energy.kind()), &rep));
    }
    outcome(passed, lines.join("; "))
}

fn criterion_8(runs: &[Recorded]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut iterates = 0;
    let mut passed = true;
    for r in runs {
        let rep = check_dual_membership(&r.out.history, &r.model.regularizer);
        passed &= rep.passed;
        worst = worst.max(rep.max_violation);
        iterates += rep.samples_or_iters;
    }
    outcome(
        passed,
        format!("max distance of p^k to dR(x^k) = {worst:.2e} (tol 1e-7) over {iterates} iterates in {} runs", runs.len()),
    )
}

fn criterion_9(runs: &[Recorded]) -> Outcome {
    let mut passed = true;
    let (mut sd, mut sb): (f64, f64) = (0.0, 0.0);
    let mut count = 0;
    let mut errors = Vec::new();
    for r in runs
        .iter()
        .filter(|r| r.label.starts_with("sparse_linear") || r.label.starts_with("quadratic"))
        .filter(|r| !r.label.ends_with("(short)"))
    {
        count += 1;
        let descent =
            check_surrogate_descent(&r.out.history, &r.model, r.config.beta, r.mu(), r.rho)
                .unwrap();
        passed &= descent.passed;
        sd = sd.max(descent.max_violation);
        match check_subgradient_bound(
            &r.out.history,
            &r.model,
            r.config.beta,
            &r.config.schedule,
            RADIUS,
            41,
        ) {
            Ok(rep) => {
                passed &= rep.passed;
                sb = sb.max(rep.max_violation);
            }
            Err(e) => {
                passed = false;
                errors.push(format!("{}: {e}", r.label));
            }
        }
    }
    outcome(
        passed && count == 11,
        format!(
            "{count} trajectories; surrogate descent max violation {sd:.2e} (tol 1e-9); subgradient bound max ratio {sb:.4} (tol 1+1e-6){}",
            if errors.is_empty() { String::new() } else { format!("; {}", errors.join("; ")) }
        ),
    )
}

fn main() -> ExitCode {
    // Criteria 1, 4 and 5 own the long runs; 2 and 6 add short ones. All of
    // them feed the summability, dual-membership and surrogate checks.
    let mut runs = Vec::new();
    let mut results = vec![
        (1, criterion_1(&mut runs)),
        (2, criterion_2(&mut runs)),
        (4, criterion_4(&mut runs)),
        (5, criterion_5(&mut runs)),
        (6, criterion_6(&mut runs)),
        (7, criterion_7()),
    ];
    results.push((3, criterion_3(&runs)));
    results.push((8, criterion_8(&runs)));
    results.push((9, criterion_9(&runs)));
    results.sort_by_key(|(n, _)| *n);

    let mut all = true;
    for (n, o) in &results {
        all &= o.passed;
        println!(
            "criterion {n}: {} | {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
