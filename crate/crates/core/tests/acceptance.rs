//! Acceptance criteria AC1-AC9. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::Command;
use std::time::Instant;

use tmfrac::measure::{ball_volume, integrate_weighted, lq_norm_pow, omega, grad_norm_pow, DEFAULT_PANEL_ORDER};
use tmfrac::optimize::{maximize_tmc, maximize_tmsc, sigma_star_probe, sweep_subcritical, tmc_via_identity, DEFAULT_IDENTITY_FRACS};
use tmfrac::profiles::{make_moser, RadialGrid};
use tmfrac::verify::{
    check_exp_estimate, check_lemma_convexity, check_phi_homogeneity, check_varphi_mono, moser_lp_closed_form,
    sharpness_series,
};
use tmfrac::{OptimizerConfig, QuadratureRule, WeightParams};

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn p2() -> WeightParams {
    WeightParams::new(2.0, 1.0).unwrap()
}

fn ac1() -> Outcome {
    let pi = std::f64::consts::PI;
    let mut worst = 0.0f64;
    for (theta, want) in [(0.0, 2.0), (1.0, 2.0 * pi), (2.0, 4.0 * pi)] {
        worst = worst.max(rel(omega(theta).unwrap(), want));
    }
    worst = worst.max(rel(p2().mu_star(), 4.0 * pi));
    if worst > 1e-12 {
        return Err(format!("omega / mu* relative error {worst:.3e} > 1e-12"));
    }
    let mut vol = 0.0f64;
    for theta in [0.0, 0.5, 1.0, 2.0, 3.7] {
        for r in [0.1, 1.0, 2.5, 10.0] {
            let closed = ball_volume(r, theta).unwrap();
            let want = omega(theta).unwrap() * r.powf(theta + 1.0) / (theta + 1.0);
            let rule = QuadratureRule::log_uniform(1e-6 * r, r, 40, DEFAULT_PANEL_ORDER).unwrap();
            let quad = integrate_weighted(|_| 1.0, &rule, theta).unwrap();
            vol = vol.max(rel(closed, want)).max(rel(quad, want));
        }
    }
    if vol > 1e-10 {
        return Err(format!("ball volume relative error {vol:.3e} > 1e-10"));
    }
    Ok(format!("omega/mu* err {worst:.1e}, ball volume err {vol:.1e}"))
}

fn ac2() -> Outcome {
    let mut worst_grad = 0.0f64;
    let mut worst_closed = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for (p, theta) in [(2.0, 1.0), (3.0, 2.0), (2.0, 0.0)] {
        let params = WeightParams::new(p, theta).unwrap();
        let mut prod = Vec::new();
        for n in 1..=50u32 {
            let u = make_moser(n, &params, &RadialGrid::for_moser(n, &params, 10.0).unwrap()).unwrap();
            worst_grad = worst_grad.max((grad_norm_pow(&u, &params) - 1.0).abs());
            let l = lq_norm_pow(&u, p, theta, DEFAULT_PANEL_ORDER).unwrap();
            let nl = n as f64 * l;
            worst_closed = worst_closed.max((nl - n as f64 * moser_lp_closed_form(n, &params)).abs());
            prod.push(nl);
        }
        worst_ratio = worst_ratio.max((prod[49] / prod[48] - 1.0).abs());
    }
    let msg = format!(
        "|grad-1| {worst_grad:.2e}, closed form {worst_closed:.2e}, |ratio_50-1| {worst_ratio:.2e}"
    );
    if worst_grad <= 1e-6 && worst_closed <= 1e-6 && worst_ratio <= 0.02 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ac3() -> Outcome {
    let n = 100_000;
    let results = [check_lemma_convexity(n, 11),
        check_phi_homogeneity(n, 12).unwrap(),
        check_exp_estimate(n, 13).unwrap(),
        check_varphi_mono(n, 14).unwrap()];
    let msg = results
        .iter()
        .map(|r| format!("{} worst {:.1e} over {}", r.name, r.worst_violation, r.samples))
        .collect::<Vec<_>>()
        .join("; ");
    if results.iter().all(|r| r.passed && r.worst_violation <= 1e-12 && r.samples >= n) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ac4() -> Outcome {
    let params = p2();
    let cfg = OptimizerConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for f in [0.25, 0.5, 0.75] {
        let sigma = f * params.mu_star();
        let grid: Vec<f64> = DEFAULT_IDENTITY_FRACS.iter().map(|x| x * sigma).collect();
        let rep = match tmc_via_identity(sigma, &params, &grid, &cfg) {
            Ok(r) => r,
            Err(e) => return Err(format!("sigma={f}mu*: {e}")),
        };
        let direct = maximize_tmc(sigma, &params, &cfg).map_err(|e| e.to_string())?;
        let d = rel(rep.estimate.value, direct.value);
        let norms = rep
            .rows
            .iter()
            .map(|r| {
                let rho = r.mu_over_sigma;
                (r.grad_norm_p - rho).abs().max((r.lp_norm_p - (1.0 - rho)).abs())
            })
            .fold(0.0, f64::max);
        ok &= d <= 0.05 && norms <= 1e-6;
        parts.push(format!("{f}mu*: rel diff {d:.2e}, norm err {norms:.1e}"));
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ac5() -> Outcome {
    let params = p2();
    let cfg = OptimizerConfig::default();
    let fracs = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95];
    let rows = sweep_subcritical(&fracs, &params, &cfg).map_err(|e| e.to_string())?;
    let prods: Vec<f64> = rows.iter().map(|r| r.normalized_product).collect();
    let max = prods.iter().cloned().fold(f64::MIN, f64::max);
    let min = prods.iter().cloned().fold(f64::MAX, f64::min);
    let at99 = maximize_tmsc(0.99 * params.mu_star(), &params, &cfg).map_err(|e| e.to_string())?;
    let at50 = rows[0].estimate;
    let msg = format!(
        "products [{}], max/min {:.3}; TMSC(0.99mu*)={:.4} vs 5*TMSC(0.5mu*)={:.4}",
        prods.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", "),
        max / min,
        at99.value,
        5.0 * at50
    );
    if min > 0.0 && max / min <= 20.0 && at99.value > 5.0 * at50 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ac6() -> Outcome {
    let rows = sharpness_series(1.05, 70, &p2()).map_err(|e| e.to_string())?;
    let mut worst = f64::INFINITY;
    let mut at = 0;
    for n in 40..=60usize {
        let gain = rows[n + 9].log_critical - rows[n - 1].log_critical;
        if gain < worst {
            worst = gain;
            at = n;
        }
    }
    let msg = format!(
        "min ln(value(n+10)/value(n)) over n in [40,60] = {worst:.4} at n={at}, doubling needs {:.4}",
        2f64.ln()
    );
    if worst >= 2f64.ln() {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ac7() -> Outcome {
    let cfg = OptimizerConfig::default();
    let fracs = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, theta, need) in [(2.0, 1.0, -1e-6), (3.0, 2.0, 1e-4)] {
        let params = WeightParams::new(p, theta).unwrap();
        let mut gaps = Vec::new();
        for f in fracs {
            let sigma = f * params.mu_star();
            let est = maximize_tmc(sigma, &params, &cfg).map_err(|e| e.to_string())?;
            let gap = est.value - sigma.powf(p - 1.0) / params.factorial_p_minus_one();
            ok &= gap >= need;
            gaps.push(format!("{gap:.2e}"));
        }
        parts.push(format!("p={p} gaps [{}]", gaps.join(", ")));
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ac8() -> Outcome {
    let params = p2();
    let ms = params.mu_star();
    let grid: Vec<f64> = [0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99].iter().map(|f| f * ms).collect();
    let rep = sigma_star_probe(&params, &grid, &OptimizerConfig::default()).map_err(|e| e.to_string())?;
    let worst = rep
        .rows
        .windows(2)
        .map(|w| (w[0].nu - w[1].nu) / w[0].nu.max(1.0))
        .fold(0.0, f64::max);
    let fmt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{:.2}mu*", v / ms));
    let msg = format!(
        "worst nu decrease {worst:.1e}; sigma_* in ({}, {}]",
        fmt(rep.sigma_star_lower),
        fmt(rep.sigma_star_upper)
    );
    if worst <= 1e-6 && rep.sigma_star_upper.is_some() && !rep.caveat.is_empty() {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ac9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let commands: [&[&str]; 4] = [
        &["moser", "--n", "20"],
        &["tmsc", "--mu-frac", "0.5,0.8", "--grid-nodes", "96", "--max-iters", "120", "--restarts", "2", "--seed", "7"],
        &["probe-sigma-star", "--sigma-grid", "0.5,0.9", "--grid-nodes", "96", "--max-iters", "120", "--restarts", "2"],
        &["verify", "--suite", "inequalities", "--seed", "3"],
    ];
    for (i, args) in commands.iter().enumerate() {
        let mut outs = Vec::new();
        for k in 0..2 {
            let path = dir.path().join(format!("run{i}_{k}.out"));
            let status = Command::new(env!("CARGO_BIN_EXE_tmfrac"))
                .args(*args)
                .arg("--out")
                .arg(&path)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("`{}` exited with {status}", args.join(" ")));
            }
            outs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        if outs[0] != outs[1] || outs[0].is_empty() {
            return Err(format!("`{}` output differs between runs", args.join(" ")));
        }
    }
    Ok(format!("{} commands byte-identical across two runs", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
        ("AC9", ac9),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let (tag, msg) = match f() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("{name} {tag} ({:.1}s): {msg}", start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
