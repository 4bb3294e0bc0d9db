//! Runnable property checks with a coverage manifest.
//!
//! Sampling checks draw log-uniformly from the ranges recorded in each
//! result. Inequality deficits are compared against `slack·max(1, |rhs|)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functionals::{
    critical_objective, exp_tail, full_norm_pow, identity_ratio, ln_exp_tail, phi_p,
    subcritical_objective, tm_integral,
};
use crate::measure::{grad_norm_pow, lq_norm_pow, WeightParams, DEFAULT_PANEL_ORDER};
use crate::optimize::{
    maximize_tmc, sigma_star_probe, tmc_via_identity, tmsc_chain, OptimizerConfig,
    CERTIFICATION_TOL,
};
use crate::profiles::{
    make_ishiwata, make_moser, normalize_subcritical, rescale, Interpolation, RadialGrid,
    RadialProfile,
};

/// Slack on inequality deficits.
pub const INEQUALITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Property the check exercises.
    pub anchor: String,
    pub passed: bool,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub details: String,
}

impl CheckResult {
    fn new(name: &str, anchor: &str, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            passed: true,
            worst_violation: 0.0,
            tolerance,
            samples: 0,
            details: String::new(),
        }
    }

    fn record(&mut self, violation: f64) {
        self.samples += 1;
        if violation > self.worst_violation || violation.is_nan() {
            self.worst_violation = violation;
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.passed && self.worst_violation <= self.tolerance;
        self
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, a: f64, b: f64) -> f64 {
    (rng.gen_range(a.ln()..b.ln())).exp()
}

fn deficit(lhs: f64, rhs: f64) -> f64 {
    ((lhs - rhs) / rhs.abs().max(1.0)).max(0.0)
}

/// `γ(a, x) = ∫_0^x s^{a−1}e^{−s} ds` by its power series.
pub fn lower_incomplete_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut k = 1.0;
    while term > 1e-18 * sum {
        term *= x / (a + k);
        sum += term;
        k += 1.0;
    }
    (a * x.ln() - x).exp() * sum
}

/// Closed form of `‖u_n‖^p_{L^p_θ}`: `(c/n)[n^p e^{−n} + γ(p+1, n)]` with
/// `c = ω_θ / (ω_α (θ+1)^p)`.
pub fn moser_lp_closed_form(n: u32, params: &WeightParams) -> f64 {
    let p = params.p();
    let nn = n as f64;
    let c = params.omega_theta() / (params.omega_alpha() * (params.theta() + 1.0).powf(p));
    c / nn * ((p * nn.ln() - nn).exp() + lower_incomplete_gamma(p + 1.0, nn))
}

fn random_profile(rng: &mut ChaCha8Rng) -> Result<RadialProfile> {
    let r_min = 10f64.powf(-rng.gen_range(2.0..8.0));
    let r_max = rng.gen_range(1.0..10.0);
    let n = rng.gen_range(16..64);
    let grid = RadialGrid::log_uniform(r_min, r_max, n)?;
    let mut values = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let jump = if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() };
        values[i] = values[i + 1] + jump;
    }
    if values[0] == 0.0 {
        values[0] = 1.0;
    }
    let interp = if rng.gen_bool(0.5) {
        Interpolation::Linear
    } else {
        Interpolation::LogLinear
    };
    RadialProfile::new(grid, values, interp)
}

/// Dilation laws `‖(ζu(τ·))′‖^p = ζ^p τ^{p−α−1}‖u′‖^p` and
/// `‖ζu(τ·)‖^q_{L^q_θ} = ζ^q τ^{−(θ+1)}‖u‖^q_{L^q_θ}`.
pub fn check_scaling_laws(trials: usize, rng_seed: u64, params: &WeightParams) -> Result<CheckResult> {
    let mut res = CheckResult::new("scaling_laws", "dilation laws of the weighted norms", 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let p = params.p();
    let theta = params.theta();
    for k in 0..trials {
        let u = random_profile(&mut rng)?;
        let (zeta, tau) = if k == 0 {
            (1.0, 1.0)
        } else {
            (log_uniform(&mut rng, 0.1, 10.0), log_uniform(&mut rng, 0.1, 10.0))
        };
        let q = rng.gen_range(1.0..4.0);
        let v = rescale(&u, zeta, tau)?;
        let g0 = grad_norm_pow(&u, params);
        let g1 = grad_norm_pow(&v, params);
        let expect_g = zeta.powf(p) * tau.powf(p - params.alpha() - 1.0) * g0;
        res.record(((g1 - expect_g) / expect_g).abs());
        let l0 = lq_norm_pow(&u, q, theta, DEFAULT_PANEL_ORDER)?;
        let l1 = lq_norm_pow(&v, q, theta, DEFAULT_PANEL_ORDER)?;
        let expect_l = zeta.powf(q) * tau.powf(-(theta + 1.0)) * l0;
        res.record(((l1 - expect_l) / expect_l).abs());
        // the gradient norm ignores pure dilations in this regime
        let d = rescale(&u, 1.0, tau)?;
        res.record(((grad_norm_pow(&d, params) - g0) / g0).abs());
    }
    res.details = format!("zeta, tau log-uniform on [0.1, 10]; q uniform on [1, 4]; p = {p}, theta = {theta}");
    Ok(res.finish())
}

/// `(x+y)^q ≤ (1+ε)^{(q−1)/q} x^q + (1 − (1+ε)^{−1/q})^{1−q} y^q`.
pub fn check_lemma_convexity(trials: usize, rng_seed: u64) -> CheckResult {
    let mut res = CheckResult::new("convexity_splitting", "convexity splitting of (x+y)^q", INEQUALITY_SLACK);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for k in 0..trials {
        let x = if k % 20 == 0 { 0.0 } else { log_uniform(&mut rng, 1e-3, 1e3) };
        let y = if k % 20 == 1 { 0.0 } else { log_uniform(&mut rng, 1e-3, 1e3) };
        let q = if k % 50 == 2 { 1.0 } else { rng.gen_range(1.0..8.0) };
        let eps = log_uniform(&mut rng, 1e-4, 1e4);
        let lhs = (x + y).powf(q);
        let a = (1.0 + eps).powf((q - 1.0) / q);
        let b = (-(-eps.ln_1p() / q).exp_m1()).powf(1.0 - q);
        let rhs = a * x.powf(q) + b * y.powf(q);
        res.record(deficit(lhs, rhs));
    }
    res.details = "x, y log-uniform on [1e-3, 1e3] (5% zeros); q on [1, 8]; eps log-uniform on [1e-4, 1e4]".into();
    res.finish()
}

/// `φ_p(ρt) ≤ ρ^{p−1}φ_p(t)` for `ρ ≤ 1`, reversed for `ρ ≥ 1`.
pub fn check_phi_homogeneity(trials: usize, rng_seed: u64) -> Result<CheckResult> {
    let mut res = CheckResult::new("phi_homogeneity", "homogeneity bounds of phi_p", INEQUALITY_SLACK);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for k in 0..trials {
        let p = rng.gen_range(2.0..4.0);
        let params = WeightParams::new(p, 1.0)?;
        let t = log_uniform(&mut rng, 1e-6, 50.0);
        if k % 2 == 0 {
            let rho = log_uniform(&mut rng, 1e-6, 1.0);
            let lhs = phi_p(rho * t, &params)?;
            let rhs = rho.powf(p - 1.0) * phi_p(t, &params)?;
            res.record(deficit(lhs, rhs));
        } else {
            let rho = log_uniform(&mut rng, 1.0, 10.0);
            let lhs = phi_p(rho * t, &params)?;
            let rhs = rho.powf(p - 1.0) * phi_p(t, &params)?;
            res.record(deficit(rhs, lhs));
        }
    }
    res.details = "p uniform on [2, 4]; t log-uniform on [1e-6, 50]; rho log-uniform on [1e-6, 1] and [1, 10]".into();
    Ok(res.finish())
}

/// `φ_p(μ|t|^{p/(p−1)}) ≤ e^μ |t|^p` for `|t| ≤ 1`.
pub fn check_exp_estimate(trials: usize, rng_seed: u64) -> Result<CheckResult> {
    let mut res = CheckResult::new("exp_estimate", "exponential estimate for |t| <= 1", INEQUALITY_SLACK);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..trials {
        let p = rng.gen_range(2.0..4.0);
        let params = WeightParams::new(p, 1.0)?;
        let mu = log_uniform(&mut rng, 1e-3, 50.0);
        let t = log_uniform(&mut rng, 1e-8, 1.0);
        let lhs = phi_p(mu * t.powf(params.exponent()), &params)?;
        let rhs = mu.exp() * t.powf(p);
        res.record(deficit(lhs, rhs));
    }
    res.details = "p uniform on [2, 4]; mu log-uniform on [1e-3, 50]; t log-uniform on [1e-8, 1]".into();
    Ok(res.finish())
}

/// `σ ↦ (p−1)!σ^{1−p} φ_p(σ|t|^{p/(p−1)})` is non-decreasing.
pub fn check_varphi_mono(trials: usize, rng_seed: u64) -> Result<CheckResult> {
    let mut res = CheckResult::new(
        "varphi_monotonicity",
        "monotonicity of sigma^(1-p) phi_p(sigma t^(p/(p-1)))",
        INEQUALITY_SLACK,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..trials {
        let p = rng.gen_range(2.0..4.0);
        let params = WeightParams::new(p, 1.0)?;
        let fact = params.factorial_p_minus_one();
        let a = log_uniform(&mut rng, 1e-3, 30.0);
        let b = log_uniform(&mut rng, 1e-3, 30.0);
        let (s1, s2) = if a < b { (a, b) } else { (b, a) };
        let t = log_uniform(&mut rng, 1e-4, 2.0);
        let tp = t.powf(params.exponent());
        let lhs = fact / s1.powf(p - 1.0) * phi_p(s1 * tp, &params)?;
        let rhs = fact / s2.powf(p - 1.0) * phi_p(s2 * tp, &params)?;
        res.record(deficit(lhs, rhs));
    }
    res.details = "p uniform on [2, 4]; sigma log-uniform on [1e-3, 30]; t log-uniform on [1e-4, 2]".into();
    Ok(res.finish())
}

/// Certifies a constant `C` with
/// `φ_p(μt^{p'}) − μ^{k₀}t^{k₀p'}/k₀! ≤ C φ_p(μt^{p'}) t^{p'}` on `t ∈ (0, 100]`:
/// `C` is 1.01 times the maximum ratio on a log scan, then re-checked on
/// random points.
pub fn check_phi_phiconj(rng_seed: u64, theta: f64) -> Result<CheckResult> {
    let mut res = CheckResult::new("phi_tail_bound", "tail bound of phi_p beyond its leading term", 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut constants = Vec::new();
    for &p in &[2.0, 2.5, 3.0, 4.0] {
        let params = WeightParams::new(p, theta)?;
        let pe = params.exponent();
        let k0 = params.k0();
        for &frac in &[0.1, 0.5, 0.9, 1.0] {
            let mu = frac * params.mu_star();
            let ratio = |t: f64| {
                let x = mu * t.powf(pe);
                (ln_exp_tail(x, k0 + 1) - ln_exp_tail(x, k0) - pe * t.ln()).exp()
            };
            let scan_max = (0..10_000)
                .map(|i| ratio(1e-6 * (1e8f64).powf(i as f64 / 9_999.0)))
                .fold(0.0f64, f64::max);
            let c = 1.01 * scan_max;
            if !c.is_finite() {
                res.passed = false;
            }
            for _ in 0..10_000 {
                let t = log_uniform(&mut rng, 1e-8, 100.0);
                res.record(ratio(t) / c);
            }
            constants.push(format!("p={p} mu={frac}mu*: C={c:.6e}"));
        }
    }
    res.details = constants.join("; ");
    Ok(res.finish())
}

/// `r^{(α+θ(p−1))/p}|u(r)|^p ≤ p·max(1, 1/ω_θ, 1/ω_α)·‖u‖^p` at every node,
/// and `u(R_max) = 0`.
pub fn check_radial_decay(params: &WeightParams, rng_seed: u64) -> Result<CheckResult> {
    let mut res = CheckResult::new("radial_decay", "radial lemma pointwise decay", 1.0);
    let p = params.p();
    let e = (params.alpha() + params.theta() * (p - 1.0)) / p;
    let c = p * 1f64.max(1.0 / params.omega_theta()).max(1.0 / params.omega_alpha());
    let mut profiles = Vec::new();
    for n in 1..=40 {
        profiles.push(make_moser(n, params, &RadialGrid::for_moser(n, params, 10.0)?)?);
    }
    profiles.push(RadialProfile::tent(1.0, &RadialGrid::default_grid())?);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..40 {
        profiles.push(random_profile(&mut rng)?);
    }
    for u in &profiles {
        let norm = full_norm_pow(u, params)?;
        for (r, v) in u.grid().nodes().iter().zip(u.values()) {
            res.record(r.powf(e) * v.powf(p) / (c * norm));
        }
        if *u.values().last().expect("nonempty") != 0.0 {
            res.passed = false;
        }
    }
    res.details = format!("C = {c:.6}; {} profiles (Moser n = 1..40, tent, 40 random)", profiles.len());
    Ok(res.finish())
}

/// `‖u_n′‖^p = 1`, `n‖u_n‖^p` against its closed form, consecutive ratio of
/// `n‖u_n‖^p` near 1 at `n_max`, and bounded variation on `[n_max/3, n_max]`.
pub fn check_moser_asymptotics(n_max: u32, params: &WeightParams) -> Result<CheckResult> {
    let mut res = CheckResult::new("moser_asymptotics", "Moser sequence norms and L^p decay", 1e-6);
    let mut seq = Vec::with_capacity(n_max as usize);
    let mut worst_grad: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    for n in 1..=n_max {
        let u = make_moser(n, params, &RadialGrid::for_moser(n, params, 10.0)?)?;
        let g = grad_norm_pow(&u, params);
        let l = lq_norm_pow(&u, params.p(), params.theta(), DEFAULT_PANEL_ORDER)?;
        let cf = moser_lp_closed_form(n, params);
        worst_grad = worst_grad.max((g - 1.0).abs());
        worst_closed = worst_closed.max(((l - cf) / cf).abs());
        res.record((g - 1.0).abs());
        res.record(((l - cf) / cf).abs());
        seq.push(n as f64 * l);
    }
    let last_ratio = if n_max >= 2 {
        seq[n_max as usize - 1] / seq[n_max as usize - 2]
    } else {
        1.0
    };
    let tail = &seq[(n_max as usize / 3).max(1) - 1..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let spread = hi / lo - 1.0;
    if (last_ratio - 1.0).abs() > 0.02 || spread > 0.10 {
        res.passed = false;
    }
    res.details = format!(
        "p={} theta={}: max|grad-1|={worst_grad:.2e}, max rel closed-form error={worst_closed:.2e}, \
         n*L at n_max={:.8}, consecutive ratio={last_ratio:.6}, spread on tail={spread:.4}",
        params.p(),
        params.theta(),
        seq[n_max as usize - 1]
    );
    Ok(res.finish())
}

/// One row of the sharpness family.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SharpnessRow {
    pub n: u32,
    /// `τ_n = (1 + ‖u_n‖^p_{L^p_θ})^{−1/p}`.
    pub tau: f64,
    /// `ln ∫φ_p(σ|τ_n u_n|^{p/(p−1)})`.
    pub log_critical: f64,
    /// `ln(∫φ_p(μ*|u_n|^{p/(p−1)}) / ‖u_n‖^p_{L^p_θ})`.
    pub log_subcritical_at_mu_star: f64,
    /// `ln ∫φ_p(σ|u_n|^{p/(p−1)})`.
    pub log_moser_integral: f64,
    /// `ln` of the cap contribution `ω_θ/(θ+1)·e^{−n}·φ_p(nσ/μ*)`.
    pub log_cap_bound: f64,
}

/// The sharpness family `v_n = τ_n u_n` at `σ = sigma_frac·μ*`, `n = 1..=n_max`.
pub fn sharpness_series(sigma_frac: f64, n_max: u32, params: &WeightParams) -> Result<Vec<SharpnessRow>> {
    let p = params.p();
    let ms = params.mu_star();
    let sigma = sigma_frac * ms;
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let u = make_moser(n, params, &RadialGrid::for_moser(n, params, 10.0)?)?;
        let l = lq_norm_pow(&u, p, params.theta(), DEFAULT_PANEL_ORDER)?;
        let tau = (1.0 + l).powf(-1.0 / p);
        let v = rescale(&u, tau, 1.0)?;
        let log_critical = tm_integral(&v, sigma, params)?.log_value;
        let log_sub = tm_integral(&u, ms, params)?.log_value - l.ln();
        let log_cap = (params.omega_theta() / (params.theta() + 1.0)).ln() - n as f64
            + crate::functionals::ln_exp_tail(n as f64 * sigma_frac, params.k0());
        out.push(SharpnessRow {
            n,
            tau,
            log_critical,
            log_subcritical_at_mu_star: log_sub,
            log_moser_integral: tm_integral(&u, sigma, params)?.log_value,
            log_cap_bound: log_cap,
        });
    }
    Ok(out)
}

/// Minimum of `ln value(n+10) − ln value(n)` over `n ∈ [lo, hi]`.
pub fn min_ten_step_log_gain(rows: &[SharpnessRow], lo: u32, hi: u32) -> f64 {
    (lo..=hi)
        .filter_map(|n| {
            let a = rows.iter().find(|r| r.n == n)?;
            let b = rows.iter().find(|r| r.n == n + 10)?;
            Some(b.log_critical - a.log_critical)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Blow-up of the critical functional above `μ*` along `v_n = τ_n u_n`
/// (log domain), boundedness below `μ*`, `τ_n → 1` monotonically, and the
/// cap lower bound for the integral of `u_n`.
pub fn check_sharpness_blowup(sigma_frac: f64, n_max: u32, params: &WeightParams) -> Result<CheckResult> {
    let mut res = CheckResult::new("sharpness_blowup", "blow-up above the sharp constant", 0.0);
    if !(sigma_frac > 1.0) || n_max < 60 {
        return Err(Error::domain("sharpness check needs sigma_frac > 1 and n_max >= 60"));
    }
    let above = sharpness_series(sigma_frac, n_max, params)?;
    let below = sharpness_series(0.9, n_max, params)?;
    let get = |rows: &[SharpnessRow], n: u32| rows[n as usize - 1].clone();
    let mut fails = Vec::new();

    let slope = (get(&above, 60).log_critical - get(&above, 40).log_critical) / 20.0;
    let expected = 0.8 * (sigma_frac - 1.0);
    if slope < expected {
        fails.push(format!("slope {slope:.4} < {expected:.4}"));
    }
    let growth = min_ten_step_log_gain(&above, 40, n_max - 10);
    if !(growth > 0.0) {
        fails.push(format!("ten-step log gain {growth:.4} not positive"));
    }
    for w in above[9..].windows(2) {
        if !(w[1].tau > w[0].tau && w[1].tau < 1.0) {
            fails.push(format!("tau not increasing below 1 at n={}", w[1].n));
            break;
        }
    }
    let sub_slope = get(&above, 60).log_subcritical_at_mu_star - get(&above, 40).log_subcritical_at_mu_star;
    if !(sub_slope > 0.0) {
        fails.push("subcritical ratio at mu* not increasing".into());
    }
    let bounded = get(&below, 60).log_critical - get(&below, 40).log_critical;
    if bounded > 2f64.ln() {
        fails.push(format!("below mu*: log growth {bounded:.4} over [40, 60]"));
    }
    for r in &above {
        res.record((r.log_cap_bound - r.log_moser_integral).max(0.0));
    }
    res.passed = fails.is_empty();
    res.details = format!(
        "sigma={sigma_frac}mu*: slope {slope:.5}/n over [40,60], min ten-step log gain {growth:.4} \
         (doubling needs {:.4}); 1-tau_{n_max}={:.3e}; below-mu* log growth {bounded:.4}{}",
        2f64.ln(),
        1.0 - get(&above, n_max).tau,
        if fails.is_empty() { String::new() } else { format!("; failures: {}", fails.join(", ")) }
    );
    Ok(res.finish())
}

/// `TMSC` along nested `μ` grids with spacings `h, h/2, h/4`: the largest
/// successive difference shrinks with `h`, and the estimates are non-decreasing.
pub fn check_tmsc_continuity(
    lo_frac: f64,
    hi_frac: f64,
    h_frac: f64,
    params: &WeightParams,
    cfg: &OptimizerConfig,
) -> Result<CheckResult> {
    let mut res = CheckResult::new("tmsc_continuity", "continuity of TMSC in mu", 1e-9);
    let steps = ((hi_frac - lo_frac) / (h_frac / 4.0)).round() as usize;
    if steps == 0 {
        res.details = "constant grid: no differences".into();
        return Ok(res.finish());
    }
    let ms = params.mu_star();
    let mus: Vec<f64> = (0..=steps)
        .map(|i| (lo_frac + i as f64 * h_frac / 4.0) * ms)
        .collect();
    let ests = tmsc_chain(&mus, params, cfg)?;
    let vals: Vec<f64> = ests.iter().map(|e| e.value).collect();
    for w in vals.windows(2) {
        res.record(((w[0] - w[1]) / w[0]).max(0.0));
    }
    let max_diff = |stride: usize| {
        let sub: Vec<f64> = vals.iter().step_by(stride).copied().collect();
        sub.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0f64, f64::max)
    };
    let diffs = [max_diff(4), max_diff(2), max_diff(1)];
    if !(diffs[1] < diffs[0] && diffs[2] < diffs[1]) {
        res.passed = false;
    }
    res.details = format!(
        "mu/mu* in [{lo_frac}, {hi_frac}]; max |delta f| for h = {h_frac}, {}, {}: {:.6e}, {:.6e}, {:.6e}",
        h_frac / 2.0,
        h_frac / 4.0,
        diffs[0],
        diffs[1],
        diffs[2]
    );
    Ok(res.finish())
}

fn ishiwata_base(params: &WeightParams) -> Result<RadialProfile> {
    let tent = RadialProfile::tent(1.0, &RadialGrid::default_grid())?;
    let n = full_norm_pow(&tent, params)?;
    rescale(&tent, n.powf(-1.0 / params.p()), 1.0)
}

/// For `p = 2`: `σ − 1e−6 ≤ TMC(σ)`, the Ishiwata family reaches
/// `σ(1 − 1e−4)`, and `TMC(0) = 0`. Estimates above `σ(1 + resolution)` are
/// flagged as evidence that `σ > σ_*`.
pub fn check_small_sigma_value(
    sigma_fracs: &[f64],
    resolution: f64,
    params: &WeightParams,
    cfg: &OptimizerConfig,
) -> Result<CheckResult> {
    if params.p() != 2.0 {
        return Err(Error::Regime("the small-sigma value check is stated for p = 2".into()));
    }
    let mut res = CheckResult::new("small_sigma_value", "TMC(sigma) = sigma for small sigma", 1e-6);
    let base = ishiwata_base(params)?;
    let mut flagged = Vec::new();
    let mut lines = Vec::new();
    for &f in sigma_fracs {
        let sigma = f * params.mu_star();
        if sigma == 0.0 {
            res.record(critical_objective(&base, 0.0, params)?.abs());
            continue;
        }
        let est = maximize_tmc(sigma, params, cfg)?;
        res.record((sigma - 1e-6 - est.value).max(0.0));
        let ish = [1e-12, 1e-10, 1e-8]
            .iter()
            .map(|&t| make_ishiwata(t, &base, params).and_then(|v| critical_objective(&v, sigma, params)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0f64, f64::max);
        if ish < sigma * (1.0 - 1e-4) {
            res.passed = false;
        }
        if est.value > sigma * (1.0 + resolution) {
            flagged.push(format!("{f}"));
        }
        lines.push(format!("{f}mu*: est/sigma={:.12}, ishiwata/sigma={:.12}", est.value / sigma, ish / sigma));
    }
    res.details = format!(
        "{}; beats sigma beyond {resolution:e} at fractions [{}]",
        lines.join("; "),
        flagged.join(", ")
    );
    Ok(res.finish())
}

/// `TMC(σ) ≥ σ^{p−1}/(p−1)! − 1e−6`; for `p > 2` the gap is strictly positive.
pub fn check_critical_lower_bound(
    sigma_fracs: &[f64],
    params: &WeightParams,
    cfg: &OptimizerConfig,
) -> Result<CheckResult> {
    if !params.k0_is_p_minus_one() {
        return Err(Error::Regime("the critical lower bound is checked for integer p-1".into()));
    }
    let mut res = CheckResult::new("critical_lower_bound", "TMC(sigma) >= sigma^(p-1)/(p-1)!", 1e-6);
    let p = params.p();
    let mut gaps = Vec::new();
    for &f in sigma_fracs {
        let sigma = f * params.mu_star();
        let est = maximize_tmc(sigma, params, cfg)?;
        let base = sigma.powf(p - 1.0) / params.factorial_p_minus_one();
        let gap = est.value - base;
        res.record((-gap).max(0.0));
        if p > 2.0 && !(gap > 0.0) {
            res.passed = false;
        }
        gaps.push(format!("{f}mu*: gap={gap:.6e}"));
    }
    res.details = gaps.join("; ");
    Ok(res.finish())
}

/// `identity_ratio(μ,σ)·TMSC(μ) ≤ TMC(σ) + 2·tol` on a `μ` grid, with the
/// transformed norms pinned by the identity engine.
pub fn check_identity_lower_bound(
    sigma_frac: f64,
    params: &WeightParams,
    cfg: &OptimizerConfig,
) -> Result<CheckResult> {
    let mut res = CheckResult::new("identity_lower_bound", "identity ratio times TMSC below TMC", 0.0);
    let sigma = sigma_frac * params.mu_star();
    let grid: Vec<f64> = crate::optimize::DEFAULT_IDENTITY_FRACS.iter().map(|f| f * sigma).collect();
    let rep = tmc_via_identity(sigma, params, &grid, cfg)?;
    let tmc = maximize_tmc(sigma, params, cfg)?;
    let top = tmc.value.max(rep.estimate.value);
    let tol = 2.0 * CERTIFICATION_TOL * top;
    for row in &rep.rows {
        res.record((row.predicted - top - tol).max(0.0));
        res.record(((row.critical_value - row.predicted) / row.predicted).abs() - 1e-6);
    }
    let rel = (rep.estimate.value - tmc.value).abs() / tmc.value;
    res.details = format!(
        "sigma={sigma_frac}mu*: identity {:.10}, direct {:.10}, relative difference {rel:.3e}",
        rep.estimate.value, tmc.value
    );
    Ok(res.finish())
}

/// `ν(σ)` non-decreasing and `TMC ≥ σ^{p−1}/(p−1)!` along a probe grid.
pub fn check_nu_monotone(sigma_fracs: &[f64], params: &WeightParams, cfg: &OptimizerConfig) -> Result<CheckResult> {
    let mut res = CheckResult::new("nu_monotone", "nu(sigma) is non-decreasing", 1e-6);
    let ms = params.mu_star();
    let grid: Vec<f64> = sigma_fracs.iter().map(|f| f * ms).collect();
    let rep = sigma_star_probe(params, &grid, cfg)?;
    for w in rep.rows.windows(2) {
        res.record(((w[0].nu - w[1].nu) / w[0].nu.max(1.0)).max(0.0));
    }
    for r in &rep.rows {
        res.record((-r.gap).max(0.0));
    }
    let fmt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{:.4}mu*", v / ms));
    res.details = format!(
        "nu = [{}]; sigma_* bracket: ({}, {}]",
        rep.rows.iter().map(|r| format!("{:.8}", r.nu)).collect::<Vec<_>>().join(", "),
        fmt(rep.sigma_star_lower),
        fmt(rep.sigma_star_upper)
    );
    Ok(res.finish())
}

/// The vanishing family: the truncated-series lower bound at `t = 0.25`, and
/// convergence of the critical objective to `σ^{p−1}/(p−1)!` as `t → 0`.
pub fn check_ishiwata_limit(sigma_frac: f64, params: &WeightParams) -> Result<CheckResult> {
    if !params.k0_is_p_minus_one() {
        return Err(Error::Regime("the vanishing-family bound is checked for integer p-1".into()));
    }
    let mut res = CheckResult::new("ishiwata_limit", "vanishing family approaches sigma^(p-1)/(p-1)!", 1e-6);
    let p = params.p();
    let sigma = sigma_frac * params.mu_star();
    let fact = params.factorial_p_minus_one();
    let base = ishiwata_base(params)?;
    let lp = lq_norm_pow(&base, p, params.theta(), DEFAULT_PANEL_ORDER)?;
    let q = p * p / (p - 1.0);
    let lq = lq_norm_pow(&base, q, params.theta(), DEFAULT_PANEL_ORDER)?;
    let t = 0.25;
    let xi = crate::profiles::ishiwata_xi(t, lp, p);
    let v = make_ishiwata(t, &base, params)?;
    let obj = critical_objective(&v, sigma, params)?;
    let bound = sigma.powf(p - 1.0) / fact
        * (xi.powf(p) * lp + sigma / p * xi.powf(q) * lq * t.powf(1.0 / (p - 1.0)));
    res.record(deficit(bound, obj));
    let target = sigma.powf(p - 1.0) / fact;
    let errs: Vec<f64> = [0.2, 0.1, 0.05, 0.02]
        .iter()
        .map(|&t| {
            make_ishiwata(t, &base, params)
                .and_then(|v| critical_objective(&v, sigma, params))
                .map(|o| (o - target).abs())
        })
        .collect::<Result<_>>()?;
    if !errs.windows(2).all(|w| w[1] < w[0]) {
        res.passed = false;
    }
    res.details = format!(
        "t=0.25: objective {obj:.10} vs bound {bound:.10}; |objective - target| at t=0.2,0.1,0.05,0.02: {}",
        errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(", ")
    );
    Ok(res.finish())
}

/// Bi-normalized Moser profiles satisfy `J_μ > μ^{k₀}/k₀!`.
pub fn check_subcritical_floor(params: &WeightParams) -> Result<CheckResult> {
    let mut res = CheckResult::new("subcritical_floor", "TMSC(mu) > mu^k0/k0!", 0.0);
    let k0 = params.k0();
    let kf: f64 = (1..=k0).map(|j| j as f64).product();
    for n in 1..=20 {
        let u = make_moser(n, params, &RadialGrid::for_moser(n, params, 10.0)?)?;
        let v = normalize_subcritical(&u, params)?;
        for &f in &[0.1, 0.5, 0.9] {
            let mu = f * params.mu_star();
            let obj = subcritical_objective(&v, mu, params)?;
            let floor = mu.powi(k0 as i32) / kf;
            res.record(if obj > floor { 0.0 } else { floor - obj + f64::MIN_POSITIVE });
        }
    }
    res.details = "Moser n = 1..20, bi-normalized; mu in {0.1, 0.5, 0.9} mu*".into();
    Ok(res.finish())
}

/// `identity_ratio` sanity at the symmetric point `(μ/σ)^{p−1} = 1/2`.
fn check_identity_ratio(params: &WeightParams) -> Result<CheckResult> {
    let mut res = CheckResult::new("identity_ratio", "identity ratio (1-rho)/rho", 1e-14);
    let x = 0.5f64.powf(1.0 / (params.p() - 1.0));
    res.record((identity_ratio(x, 1.0, params)? - 1.0).abs());
    res.record((identity_ratio(0.25f64.powf(1.0 / (params.p() - 1.0)), 1.0, params)? - 3.0).abs());
    res.record(exp_tail(0.0, params.k0()).abs());
    Ok(res.finish())
}

/// Named groups of checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Sampling inequalities.
    Inequalities,
    /// Quadrature, dilations and the Moser family.
    Measure,
    /// Blow-up above the sharp constant.
    Sharpness,
    /// Optimizer-backed checks.
    Optimizer,
    /// Everything that runs without the optimizer.
    Quick,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "inequalities" => Suite::Inequalities,
            "measure" => Suite::Measure,
            "sharpness" => Suite::Sharpness,
            "optimizer" => Suite::Optimizer,
            "quick" => Suite::Quick,
            "all" => Suite::All,
            other => {
                return Err(Error::Parse(format!(
                    "unknown suite '{other}' (inequalities, measure, sharpness, optimizer, quick, all)"
                )))
            }
        })
    }
}

/// Runs a suite with fixed seeds derived from `rng_seed`; results are ordered
/// by execution order, which is fixed.
pub fn run_suite(suite: Suite, rng_seed: u64, cfg: &OptimizerConfig) -> Result<Vec<CheckResult>> {
    let p21 = WeightParams::new(2.0, 1.0)?;
    let p32 = WeightParams::new(3.0, 2.0)?;
    let p20 = WeightParams::new(2.0, 0.0)?;
    let ineq = matches!(suite, Suite::Inequalities | Suite::Quick | Suite::All);
    let meas = matches!(suite, Suite::Measure | Suite::Quick | Suite::All);
    let sharp = matches!(suite, Suite::Sharpness | Suite::Quick | Suite::All);
    let opt = matches!(suite, Suite::Optimizer | Suite::All);
    let mut out = Vec::new();
    if ineq {
        out.push(check_lemma_convexity(100_000, rng_seed));
        out.push(check_phi_homogeneity(100_000, rng_seed.wrapping_add(1))?);
        out.push(check_exp_estimate(100_000, rng_seed.wrapping_add(2))?);
        out.push(check_varphi_mono(100_000, rng_seed.wrapping_add(3))?);
        out.push(check_phi_phiconj(rng_seed.wrapping_add(4), 1.0)?);
        out.push(check_identity_ratio(&p21)?);
    }
    if meas {
        out.push(check_scaling_laws(1000, rng_seed.wrapping_add(5), &p21)?);
        out.push(check_radial_decay(&p21, rng_seed.wrapping_add(6))?);
        for params in [&p21, &p32, &p20] {
            let mut r = check_moser_asymptotics(60, params)?;
            r.name = format!("moser_asymptotics_p{}_theta{}", params.p(), params.theta());
            out.push(r);
        }
    }
    if sharp {
        out.push(check_sharpness_blowup(1.05, 70, &p21)?);
    }
    if opt {
        let mut c = cfg.clone();
        c.rng_seed = rng_seed;
        out.push(check_subcritical_floor(&p21)?);
        out.push(check_ishiwata_limit(0.25, &p21)?);
        out.push(check_small_sigma_value(&[0.0, 0.05, 0.1], 1e-3, &p21, &c)?);
        out.push(check_critical_lower_bound(&[0.1, 0.3, 0.5, 0.7, 0.9], &p21, &c)?);
        let mut r = check_critical_lower_bound(&[0.1, 0.5, 0.9], &p32, &c)?;
        r.name = "critical_lower_bound_strict_p3".into();
        out.push(r);
        out.push(check_identity_lower_bound(0.5, &p21, &c)?);
        out.push(check_nu_monotone(&[0.1, 0.3, 0.5, 0.7, 0.9, 0.95], &p21, &c)?);
        out.push(check_tmsc_continuity(0.3, 0.7, 0.1, &p21, &c)?);
    }
    Ok(out)
}

/// Text manifest: one line per check.
pub fn manifest(results: &[CheckResult]) -> String {
    let mut s = String::from("# check | property | status | worst_violation | tolerance | samples | details\n");
    for r in results {
        s.push_str(&format!(
            "{} | {} | {} | {:.6e} | {:.1e} | {} | {}\n",
            r.name,
            r.anchor,
            if r.passed { "PASS" } else { "FAIL" },
            r.worst_violation,
            r.tolerance,
            r.samples,
            r.details
        ));
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    s.push_str(&format!("# {} checks, {} failed\n", results.len(), failed));
    s
}
