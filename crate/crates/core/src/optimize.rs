//! Lower-bound estimates of `TMSC(μ)` and `TMC(σ)` over discretized monotone
//! profiles, the identity engine, sweeps and the `σ_*` probe.
//!
//! Profiles are parametrized by nonnegative scaled increments `w_j` with
//! `v_j − v_{j+1} = w_j h_j^{(p−1)/p} ω_α^{−1/p}` on a grid that is log-linear
//! in each cell (`h_j = ln(r_{j+1}/r_j)`). Then `‖v′‖^p_{L^p_α} = Σ w_j^p`
//! exactly, monotonicity is `w ≥ 0`, and the gradient constraint is a
//! rescaling of `w`.
//!
//! The critical problem is searched over pairs `(v, x)` with `‖v′‖ = 1` and
//! `x = μ/σ ∈ (0, 1)`: the transform [`crate::profiles::critical_transform`]
//! sends such a pair to the full-norm unit sphere with critical value
//! `((1 − x^{p−1})/x^{p−1}) · J_{xσ}(v)`, where `J_μ` is the subcritical
//! quotient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{
    critical_objective, exp_tail, identity_ratio, subcritical_objective, tm_integral,
    tm_integral_with_order,
};
use crate::measure::{grad_norm_pow, lq_norm_pow, QuadratureRule, WeightParams, DEFAULT_PANEL_ORDER};
use crate::profiles::{
    critical_transform, make_ishiwata, make_moser, moser_knee, normalize_subcritical, rescale,
    Interpolation, RadialGrid, RadialProfile, TestFamilySpec,
};

/// Relative agreement required between the two quadrature orders.
pub const CERTIFICATION_TOL: f64 = 1e-6;
/// Smallest and largest `μ/σ` visited by the critical search.
pub const X_MIN: f64 = 1e-10;
pub const X_MAX: f64 = 0.999;
/// Moser indices evaluated on the engine grid during the critical search.
const MOSER_LADDER: [u32; 12] = [1, 2, 3, 5, 8, 12, 18, 27, 40, 55, 70, 80];

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// First step, as the largest change of any scaled increment.
    pub step_init: f64,
    pub step_shrink: f64,
    pub tol_obj: f64,
    pub restarts: usize,
    pub seed_families: Vec<TestFamilySpec>,
    /// Engine grid; built around the best Moser knee when `None`.
    pub grid: Option<RadialGrid>,
    pub grid_nodes: usize,
    pub r_max: f64,
    pub rng_seed: u64,
    pub panel_order: usize,
    pub moser_n_max: u32,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            step_init: 0.1,
            step_shrink: 0.5,
            tol_obj: 1e-10,
            restarts: 4,
            seed_families: Vec::new(),
            grid: None,
            grid_nodes: 512,
            r_max: 10.0,
            rng_seed: 0,
            panel_order: DEFAULT_PANEL_ORDER,
            moser_n_max: 80,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.max_iters < 1 {
            bad.push("max_iters must be >= 1".to_string());
        }
        if self.restarts < 1 {
            bad.push("restarts must be >= 1".to_string());
        }
        if !(self.tol_obj > 0.0) {
            bad.push("tol_obj must be > 0".to_string());
        }
        if !(self.step_init > 0.0) {
            bad.push("step_init must be > 0".to_string());
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            bad.push("step_shrink must lie in (0,1)".to_string());
        }
        if self.grid.is_none() && self.grid_nodes < crate::profiles::MIN_GRID_NODES {
            bad.push(format!("grid_nodes must be >= {}", crate::profiles::MIN_GRID_NODES));
        }
        if !(self.r_max >= 1.0 && self.r_max.is_finite()) {
            bad.push("r_max must be finite and >= 1".to_string());
        }
        if self.panel_order < 2 {
            bad.push("panel_order must be >= 2".to_string());
        }
        if self.moser_n_max < 1 {
            bad.push("moser_n_max must be >= 1".to_string());
        }
        for s in &self.seed_families {
            if let Err(e) = s.validate() {
                bad.push(e.to_string());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::domain(bad.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EstimateKind {
    Subcritical,
    Critical,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SupremumEstimate {
    pub kind: EstimateKind,
    pub mu_or_sigma: f64,
    /// Objective of `argmax_profile`; a lower bound for the supremum.
    pub value: f64,
    /// The same objective at double Gauss order.
    pub certified_value: f64,
    pub certification_error: f64,
    pub argmax_profile: RadialProfile,
    pub iterations_used: usize,
    pub converged: bool,
    pub constraint_residual: f64,
    /// Set for critical runs at `σ = μ*`, where the value is resolution-limited.
    pub exploratory: bool,
    /// Winning seed.
    pub source: String,
    /// `μ/σ` of the winning pair for critical runs.
    pub mu_over_sigma: Option<f64>,
}

impl SupremumEstimate {
    pub fn is_certified(&self) -> bool {
        self.certification_error <= CERTIFICATION_TOL
    }
}

#[inline]
fn pow(u: f64, e: f64) -> f64 {
    if e == 1.0 {
        u
    } else if e == 2.0 {
        u * u
    } else if e == 1.5 {
        u * u.sqrt()
    } else if e == 0.5 {
        u.sqrt()
    } else if e == 3.0 {
        u * u * u
    } else {
        u.powf(e)
    }
}

#[derive(Clone, Copy)]
struct EnginePoint {
    weight: f64,
    cell: usize,
    lam: f64,
}

struct Ascent {
    w: Vec<f64>,
    value: f64,
    iters: usize,
    converged: bool,
}

/// Discretized subcritical quotient on a fixed log-linear grid.
struct Engine<'a> {
    params: &'a WeightParams,
    grid: RadialGrid,
    cap_weight: f64,
    pts: Vec<EnginePoint>,
    scale: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(params: &'a WeightParams, grid: RadialGrid, panel_order: usize) -> Result<Self> {
        let rule = QuadratureRule::from_grid(&grid, panel_order)?;
        let nodes = grid.nodes();
        let mut cap_weight = 0.0;
        let mut pts = Vec::new();
        for q in rule.points(params.theta())? {
            match q.cell {
                None => cap_weight += q.weight,
                Some(i) => pts.push(EnginePoint {
                    weight: q.weight,
                    cell: i,
                    lam: (q.r / nodes[i]).ln() / (nodes[i + 1] / nodes[i]).ln(),
                }),
            }
        }
        let p = params.p();
        let oa = params.omega_alpha().powf(-1.0 / p);
        let scale = nodes
            .windows(2)
            .map(|w| (w[1] / w[0]).ln().powf((p - 1.0) / p) * oa)
            .collect();
        Ok(Self {
            params,
            grid,
            cap_weight,
            pts,
            scale,
        })
    }

    fn dim(&self) -> usize {
        self.scale.len()
    }

    fn values(&self, w: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let mut v = vec![0.0; n];
        for j in (0..n - 1).rev() {
            v[j] = v[j + 1] + self.scale[j] * w[j];
        }
        v
    }

    fn normalize(&self, w: &mut [f64]) -> bool {
        let p = self.params.p();
        let s: f64 = w.iter().map(|&x| pow(x, p)).sum();
        if !(s > 0.0 && s.is_finite()) {
            return false;
        }
        let f = s.powf(-1.0 / p);
        w.iter_mut().for_each(|x| *x *= f);
        true
    }

    /// Scaled increments of a profile resampled onto the engine grid.
    fn shape_from_profile(&self, u: &RadialProfile) -> Result<Vec<f64>> {
        // the quotient is dilation invariant: move the support end to r = 1
        let end = u.support_end();
        let moved = if (end - 1.0).abs() > 1e-12 && end > 0.0 {
            rescale(u, 1.0, end)?
        } else {
            u.clone()
        };
        let target = if moved.support_end() <= self.grid.r_max() {
            moved
        } else {
            rescale(&moved, 1.0, moved.support_end() / self.grid.r_max())?
        };
        let res = target.resample(&self.grid)?;
        let v = res.values();
        let mut w: Vec<f64> = (0..self.dim())
            .map(|j| ((v[j] - v[j + 1]) / self.scale[j]).max(0.0))
            .collect();
        if !self.normalize(&mut w) {
            return Err(Error::domain("seed profile vanishes on the engine grid"));
        }
        Ok(w)
    }

    fn profile(&self, w: &[f64]) -> Result<RadialProfile> {
        RadialProfile::new(self.grid.clone(), self.values(w), Interpolation::LogLinear)
    }

    /// `J_μ(v(w)) = ∫φ_p(μ v^{p'}) / ∫v^p`, with its gradient in `w` when asked.
    fn eval(&self, w: &[f64], mu: f64, grad: Option<&mut Vec<f64>>) -> f64 {
        let p = self.params.p();
        let pe = self.params.exponent();
        let k0 = self.params.k0();
        let v = self.values(w);
        let want = grad.is_some();
        let n = v.len();
        let mut gt = if want { vec![0.0; n] } else { Vec::new() };
        let mut gl = if want { vec![0.0; n] } else { Vec::new() };
        let mut t_sum = 0.0;
        let mut l_sum = 0.0;
        let mut point = |weight: f64, u: f64| -> (f64, f64) {
            if u <= 0.0 {
                return (0.0, 0.0);
            }
            let up = pow(u, pe);
            let t = mu * up;
            t_sum += weight * exp_tail(t, k0);
            let upm = pow(u, p - 1.0);
            l_sum += weight * upm * u;
            if want {
                let dt = weight * exp_tail(t, k0 - 1) * mu * pe * up / u;
                (dt, weight * p * upm)
            } else {
                (0.0, 0.0)
            }
        };
        let (dt0, dl0) = point(self.cap_weight, v[0]);
        if want {
            gt[0] += dt0;
            gl[0] += dl0;
        }
        for pt in &self.pts {
            let (a, b) = (v[pt.cell], v[pt.cell + 1]);
            let u = a + pt.lam * (b - a);
            let (dt, dl) = point(pt.weight, u);
            if want && (dt != 0.0 || dl != 0.0) {
                gt[pt.cell] += (1.0 - pt.lam) * dt;
                gt[pt.cell + 1] += pt.lam * dt;
                gl[pt.cell] += (1.0 - pt.lam) * dl;
                gl[pt.cell + 1] += pt.lam * dl;
            }
        }
        let j = t_sum / l_sum;
        if let Some(g) = grad {
            g.clear();
            let mut prefix = 0.0;
            for i in 0..self.dim() {
                prefix += (gt[i] - j * gl[i]) / l_sum;
                g.push(self.scale[i] * prefix);
            }
        }
        j
    }

    /// Projected ascent on `{w ≥ 0, Σ w^p = 1}` with Barzilai–Borwein steps
    /// and backtracking.
    fn ascend(&self, w0: &[f64], mu: f64, iters: usize, cfg: &OptimizerConfig) -> Ascent {
        let mut w = w0.to_vec();
        self.normalize(&mut w);
        let mut g = Vec::new();
        let mut f = self.eval(&w, mu, Some(&mut g));
        let gmax = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(f.is_finite() && gmax > 0.0) {
            return Ascent {
                w,
                value: f,
                iters: 0,
                converged: true,
            };
        }
        let mut step = cfg.step_init / gmax;
        let mut stall = 0;
        let mut g_new = Vec::new();
        for it in 0..iters {
            let mut accepted = None;
            let mut tries = 0;
            while tries < 60 {
                let mut trial: Vec<f64> = w
                    .iter()
                    .zip(&g)
                    .map(|(x, d)| (x + step * d).max(0.0))
                    .collect();
                if self.normalize(&mut trial) {
                    let ft = self.eval(&trial, mu, Some(&mut g_new));
                    if ft.is_finite() && ft > f {
                        accepted = Some((trial, ft));
                        break;
                    }
                }
                step *= cfg.step_shrink;
                tries += 1;
            }
            let Some((trial, ft)) = accepted else {
                return Ascent {
                    w,
                    value: f,
                    iters: it + 1,
                    converged: true,
                };
            };
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..trial.len() {
                let s = trial[i] - w[i];
                ss += s * s;
                sy += s * (g_new[i] - g[i]);
            }
            step = if sy < 0.0 { ss / -sy } else { step * 2.0 };
            step = step.clamp(1e-16 / gmax, 1e6 / gmax);
            if (ft - f) <= cfg.tol_obj * f.abs() {
                stall += 1;
            } else {
                stall = 0;
            }
            w = trial;
            f = ft;
            std::mem::swap(&mut g, &mut g_new);
            if stall >= 3 {
                return Ascent {
                    w,
                    value: f,
                    iters: it + 1,
                    converged: true,
                };
            }
        }
        Ascent {
            w,
            value: f,
            iters,
            converged: false,
        }
    }
}

/// `J_μ` of `u_n` for `n = 1..=n_max`, each on its own exact grid.
fn moser_scan(mu: f64, params: &WeightParams, n_max: u32, r_max: f64) -> Result<Vec<(u32, f64, RadialProfile)>> {
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let u = make_moser(n, params, &RadialGrid::for_moser(n, params, r_max)?)?;
        let l = lq_norm_pow(&u, params.p(), params.theta(), DEFAULT_PANEL_ORDER)?;
        let j = (tm_integral(&u, mu, params)?.log_value - l.ln()).exp();
        out.push((n, j, u));
    }
    Ok(out)
}

fn best_moser(scan: &[(u32, f64, RadialProfile)]) -> &(u32, f64, RadialProfile) {
    scan.iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty scan")
}

fn engine_grid(knee: f64, cfg: &OptimizerConfig) -> Result<RadialGrid> {
    if let Some(g) = &cfg.grid {
        return Ok(g.with_breakpoints(&[knee, 1.0]));
    }
    let r_lo = (1e-10f64).min(knee * 1e-3);
    Ok(RadialGrid::log_uniform(r_lo, cfg.r_max, cfg.grid_nodes)?.with_breakpoints(&[knee, 1.0]))
}

fn run_rng(cfg: &OptimizerConfig, param: f64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ param.to_bits().rotate_left(17))
}

fn perturb(w: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    w.iter()
        .map(|x| x * (1.0 + 0.5 * (2.0 * rng.gen::<f64>() - 1.0)))
        .collect()
}

/// Certified re-evaluation at double Gauss order.
fn certify(value: f64, recomputed: f64) -> f64 {
    if value == 0.0 {
        recomputed.abs()
    } else {
        ((recomputed - value) / value).abs()
    }
}

/// Lower bound for `TMSC(μ)`.
///
/// Seeds: the Moser family line-searched over `n ∈ [1, moser_n_max]`, the tent,
/// and the configured families. The best seeds are refined by projected
/// ascent; every seed is also kept as a candidate on its own grid. The
/// returned profile is bi-normalized by an exact dilation.
pub fn maximize_tmsc(mu: f64, params: &WeightParams, cfg: &OptimizerConfig) -> Result<SupremumEstimate> {
    cfg.validate()?;
    if !(mu > 0.0 && mu < params.mu_star()) {
        return Err(Error::domain(format!(
            "TMSC needs 0 < mu < mu* = {}, got {mu}",
            params.mu_star()
        )));
    }
    let scan = moser_scan(mu, params, cfg.moser_n_max, cfg.r_max)?;
    let (n_best, _, moser_best) = best_moser(&scan);

    // candidates kept on their own grids
    let mut direct: Vec<(String, RadialProfile)> = vec![(format!("moser n={n_best}"), moser_best.clone())];
    let tent = RadialProfile::tent(1.0, &RadialGrid::log_uniform(1e-10, cfg.r_max, cfg.grid_nodes.max(64))?)?;
    direct.push(("tent".into(), tent));
    for (k, s) in cfg.seed_families.iter().enumerate() {
        let u = s.build(params, cfg.r_max)?;
        if !u.is_zero() {
            direct.push((format!("seed {k}"), u));
        }
    }

    let engine = Engine::new(params, engine_grid(moser_knee(*n_best, params), cfg)?, cfg.panel_order)?;
    let mut starts: Vec<(String, Vec<f64>, f64)> = Vec::new();
    let mut ranked: Vec<&(u32, f64, RadialProfile)> = scan.iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (n, _, u) in ranked.iter().take(3) {
        let w = engine.shape_from_profile(u)?;
        let f = engine.eval(&w, mu, None);
        starts.push((format!("ascent from moser n={n}"), w, f));
    }
    for (label, u) in direct.iter().skip(1) {
        let w = engine.shape_from_profile(u)?;
        let f = engine.eval(&w, mu, None);
        starts.push((format!("ascent from {label}"), w, f));
    }
    starts.sort_by(|a, b| b.2.total_cmp(&a.2));

    let mut rng = run_rng(cfg, mu);
    let mut runs = Vec::new();
    let mut total_iters = 0;
    for k in 0..cfg.restarts {
        let (label, w0) = if k < starts.len() && k < 2 {
            (starts[k].0.clone(), starts[k].1.clone())
        } else {
            (format!("{} (perturbed)", starts[0].0), perturb(&starts[0].1, &mut rng))
        };
        let a = engine.ascend(&w0, mu, cfg.max_iters, cfg);
        total_iters += a.iters;
        runs.push((label, a));
    }
    let mut best_run = 0;
    for (i, (_, a)) in runs.iter().enumerate() {
        if a.value > runs[best_run].1.value * (1.0 + cfg.tol_obj) {
            best_run = i;
        }
    }
    let (label, asc) = &runs[best_run];
    let converged = asc.converged;

    let mut candidates: Vec<(String, RadialProfile)> = vec![(label.clone(), engine.profile(&asc.w)?)];
    candidates.extend(direct);
    let mut best: Option<(String, RadialProfile, f64)> = None;
    for (label, u) in candidates {
        let v = normalize_subcritical(&u, params)?;
        let f = subcritical_objective(&v, mu, params)?;
        if best.as_ref().is_none_or(|b| f > b.2) {
            best = Some((label, v, f));
        }
    }
    let (source, argmax, value) = best.expect("at least one candidate");
    let order2 = 2 * cfg.panel_order.max(DEFAULT_PANEL_ORDER);
    let l2 = lq_norm_pow(&argmax, params.p(), params.theta(), order2)?;
    let t2 = tm_integral_with_order(&argmax, mu, params, order2)?.value;
    let certified = t2 / l2;
    let residual = (grad_norm_pow(&argmax, params) - 1.0).abs();
    Ok(SupremumEstimate {
        kind: EstimateKind::Subcritical,
        mu_or_sigma: mu,
        value,
        certified_value: certified,
        certification_error: certify(value, certified),
        argmax_profile: argmax,
        iterations_used: total_iters,
        converged,
        constraint_residual: residual,
        exploratory: false,
        source,
        mu_over_sigma: None,
    })
}

/// Scales a nonzero profile into the full-norm unit ball when it lies outside.
fn into_unit_ball(u: &RadialProfile, params: &WeightParams) -> Result<RadialProfile> {
    let n = crate::functionals::full_norm_pow(u, params)?;
    if n > 1.0 {
        rescale(u, n.powf(-1.0 / params.p()), 1.0)
    } else {
        Ok(u.clone())
    }
}

fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, evals: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..evals {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Lower bound for `TMC(σ)`.
///
/// Searches pairs `(v, x)` with `‖v′‖ = 1`, `x = μ/σ`: a log scan of `x` on
/// `[X_MIN, X_MAX]` with warm-started short ascents, golden refinement, a full
/// ascent at the best `x`, and a final refinement of `x` at fixed shape. The
/// Ishiwata family (line search in `t ∈ [1e−12, 0.5]`) and the configured seeds
/// are kept as direct candidates.
pub fn maximize_tmc(sigma: f64, params: &WeightParams, cfg: &OptimizerConfig) -> Result<SupremumEstimate> {
    cfg.validate()?;
    let ms = params.mu_star();
    if !(sigma > 0.0 && sigma <= ms) {
        return Err(Error::domain(format!("TMC needs 0 < sigma <= mu* = {ms}, got {sigma}")));
    }
    let exploratory = sigma >= ms * (1.0 - 1e-12);
    let p = params.p();
    let rho = |x: f64| x.powf(p - 1.0);
    let ratio = |x: f64| (1.0 - rho(x)) / rho(x);

    let scan = moser_scan(sigma * X_MAX, params, cfg.moser_n_max, cfg.r_max)?;
    let (n_hi, _, _) = best_moser(&scan);
    let engine = Engine::new(params, engine_grid(moser_knee(*n_hi, params), cfg)?, cfg.panel_order)?;

    // unit-ball direct candidates
    let grid = RadialGrid::log_uniform(1e-10, cfg.r_max, cfg.grid_nodes.max(64))?;
    let tent = RadialProfile::tent(1.0, &grid)?;
    let tent_ball = rescale(
        &tent,
        crate::functionals::full_norm_pow(&tent, params)?.powf(-1.0 / p),
        1.0,
    )?;
    let mut direct: Vec<(String, RadialProfile)> = Vec::new();
    let ish = |t: f64| -> f64 {
        make_ishiwata(t, &tent_ball, params)
            .and_then(|v| critical_objective(&v, sigma, params))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let mut best_t = (1e-12, ish(1e-12));
    for k in 0..=24 {
        let t = 1e-12 * (0.5f64 / 1e-12).powf(k as f64 / 24.0);
        let f = ish(t);
        if f > best_t.1 {
            best_t = (t, f);
        }
    }
    direct.push((
        format!("ishiwata t={:e}", best_t.0),
        make_ishiwata(best_t.0, &tent_ball, params)?,
    ));
    let mut shapes: Vec<Vec<f64>> = Vec::new();
    for n in MOSER_LADDER.iter().filter(|&&n| n <= cfg.moser_n_max) {
        let u = make_moser(*n, params, &RadialGrid::for_moser(*n, params, cfg.r_max)?)?;
        shapes.push(engine.shape_from_profile(&u)?);
    }
    shapes.push(engine.shape_from_profile(&tent)?);
    let mut seed_pairs: Vec<(Vec<f64>, f64)> = Vec::new();
    for (k, s) in cfg.seed_families.iter().enumerate() {
        let u = s.build(params, cfg.r_max)?;
        if u.is_zero() {
            continue;
        }
        let u = into_unit_ball(&u, params)?;
        let g = grad_norm_pow(&u, params);
        let w = engine.shape_from_profile(&u)?;
        let x = g.powf(1.0 / (p - 1.0)).clamp(X_MIN, X_MAX);
        shapes.push(w.clone());
        seed_pairs.push((w, x));
        direct.push((format!("seed {k}"), u));
    }

    let short = (cfg.max_iters / 20).max(25);
    let mut total_iters = 0usize;
    let best_shape = |x: f64, extra: Option<&Vec<f64>>| -> (Vec<f64>, f64) {
        let mu = x * sigma;
        let mut best: Option<(Vec<f64>, f64)> = None;
        for w in shapes.iter().chain(extra) {
            let f = engine.eval(w, mu, None);
            if best.as_ref().is_none_or(|b| f > b.1) {
                best = Some((w.clone(), f));
            }
        }
        best.expect("shapes non-empty")
    };

    let mut xs: Vec<f64> = (0..=20)
        .map(|k| X_MIN * (X_MAX / X_MIN).powf(k as f64 / 20.0))
        .collect();
    xs.extend(seed_pairs.iter().map(|s| s.1));
    xs.sort_by(f64::total_cmp);
    let mut scan_vals: Vec<(f64, f64, Vec<f64>)> = Vec::with_capacity(xs.len());
    let mut prev: Option<Vec<f64>> = None;
    for &x in &xs {
        let (w0, _) = best_shape(x, prev.as_ref());
        let a = engine.ascend(&w0, x * sigma, short, cfg);
        total_iters += a.iters;
        scan_vals.push((x, ratio(x) * a.value, a.w.clone()));
        prev = Some(a.w);
    }
    let k_best = (0..scan_vals.len())
        .max_by(|&a, &b| scan_vals[a].1.total_cmp(&scan_vals[b].1))
        .expect("scan non-empty");
    let lo = scan_vals[k_best.saturating_sub(1)].0;
    let hi = scan_vals[(k_best + 1).min(scan_vals.len() - 1)].0;
    let mut incumbent = scan_vals[k_best].clone();
    if hi > lo {
        let mut warm = incumbent.2.clone();
        let mut found: Vec<(f64, f64, Vec<f64>)> = Vec::new();
        golden_max(
            |lx| {
                let x = lx.exp();
                let (w0, _) = best_shape(x, Some(&warm));
                let a = engine.ascend(&w0, x * sigma, short, cfg);
                total_iters += a.iters;
                let v = ratio(x) * a.value;
                warm = a.w.clone();
                found.push((x, v, a.w));
                v
            },
            lo.ln(),
            hi.ln(),
            10,
        );
        for c in found {
            if c.1 > incumbent.1 {
                incumbent = c;
            }
        }
    }

    // full refinement at the incumbent ratio
    let (x_star, _, w_star) = incumbent;
    let mut rng = run_rng(cfg, sigma);
    let mut best_asc: Option<Ascent> = None;
    for k in 0..cfg.restarts {
        let w0 = if k == 0 { w_star.clone() } else { perturb(&w_star, &mut rng) };
        let a = engine.ascend(&w0, x_star * sigma, cfg.max_iters, cfg);
        total_iters += a.iters;
        if best_asc.as_ref().is_none_or(|b| a.value > b.value * (1.0 + cfg.tol_obj)) {
            best_asc = Some(a);
        }
    }
    let asc = best_asc.expect("restarts >= 1");
    let converged = asc.converged;
    let (mut x_fin, mut v_fin) = (x_star, ratio(x_star) * asc.value);
    let (xl, xh) = ((x_star / 3.0).max(1e-12), (x_star * 3.0).min(0.9999));
    let (lx, fv) = golden_max(
        |lx| ratio(lx.exp()) * engine.eval(&asc.w, lx.exp() * sigma, None),
        xl.ln(),
        xh.ln(),
        40,
    );
    if fv > v_fin {
        x_fin = lx.exp();
        v_fin = fv;
    }
    let _ = v_fin;
    let shape = engine.profile(&asc.w)?;
    let mut candidates = vec![(
        format!("ascent at mu/sigma={x_fin:e}"),
        critical_transform(&shape, x_fin * sigma, sigma, params)?,
    )];
    candidates.extend(direct);

    let mut best: Option<(String, RadialProfile, f64)> = None;
    for (label, u) in candidates {
        let f = critical_objective(&u, sigma, params)?;
        if best.as_ref().is_none_or(|b| f > b.2) {
            best = Some((label, u, f));
        }
    }
    let (source, argmax, value) = best.expect("at least one candidate");
    let order2 = 2 * cfg.panel_order.max(DEFAULT_PANEL_ORDER);
    let certified = tm_integral_with_order(&argmax, sigma, params, order2)?.value;
    let g = grad_norm_pow(&argmax, params);
    let l = lq_norm_pow(&argmax, p, params.theta(), DEFAULT_PANEL_ORDER)?;
    let mu_over_sigma = if source.starts_with("ascent") {
        Some(x_fin)
    } else {
        Some(g.powf(1.0 / (p - 1.0)))
    };
    Ok(SupremumEstimate {
        kind: EstimateKind::Critical,
        mu_or_sigma: sigma,
        value,
        certified_value: certified,
        certification_error: certify(value, certified),
        argmax_profile: argmax,
        iterations_used: total_iters,
        converged,
        constraint_residual: (g + l - 1.0).abs(),
        exploratory,
        source,
        mu_over_sigma,
    })
}

/// One row of the identity engine.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct IdentityRow {
    pub mu: f64,
    pub mu_over_sigma: f64,
    pub ratio: f64,
    pub tmsc_estimate: f64,
    /// `ratio · tmsc_estimate`.
    pub predicted: f64,
    /// Critical objective of the transformed profile.
    pub critical_value: f64,
    pub grad_norm_p: f64,
    pub lp_norm_p: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct IdentityReport {
    pub sigma: f64,
    pub rows: Vec<IdentityRow>,
    /// Best transformed profile, as a critical estimate.
    pub estimate: SupremumEstimate,
}

/// Critical estimate from subcritical maximizers: each `TMSC(μ)` argmax is
/// mapped to the full-norm unit sphere and evaluated at `σ`.
pub fn tmc_via_identity(
    sigma: f64,
    params: &WeightParams,
    mu_grid: &[f64],
    cfg: &OptimizerConfig,
) -> Result<IdentityReport> {
    if mu_grid.is_empty() {
        return Err(Error::domain("identity engine needs a nonempty mu grid"));
    }
    if !(sigma > 0.0 && sigma <= params.mu_star()) {
        return Err(Error::domain(format!(
            "sigma must lie in (0, mu* = {}], got {sigma}",
            params.mu_star()
        )));
    }
    if let Some(bad) = mu_grid.iter().find(|&&m| !(m > 0.0 && m < sigma)) {
        return Err(Error::domain(format!("mu grid value {bad} is not inside (0, sigma)")));
    }
    let mut mus = mu_grid.to_vec();
    mus.sort_by(f64::total_cmp);
    let p = params.p();
    let results: Vec<Result<(IdentityRow, SupremumEstimate)>> = mus
        .par_iter()
        .map(|&mu| {
            let est = maximize_tmsc(mu, params, cfg)?;
            let ut = critical_transform(&est.argmax_profile, mu, sigma, params)?;
            let g = grad_norm_pow(&ut, params);
            let l = lq_norm_pow(&ut, p, params.theta(), DEFAULT_PANEL_ORDER)?;
            let rho = (mu / sigma).powf(p - 1.0);
            if (g - rho).abs() > 1e-6 || (l - (1.0 - rho)).abs() > 1e-6 {
                return Err(Error::Constraint(format!(
                    "transformed profile norms ({g}, {l}) miss ({rho}, {})",
                    1.0 - rho
                )));
            }
            let crit = critical_objective(&ut, sigma, params)?;
            let ratio = identity_ratio(mu, sigma, params)?;
            let row = IdentityRow {
                mu,
                mu_over_sigma: mu / sigma,
                ratio,
                tmsc_estimate: est.value,
                predicted: ratio * est.value,
                critical_value: crit,
                grad_norm_p: g,
                lp_norm_p: l,
            };
            let order2 = 2 * cfg.panel_order.max(DEFAULT_PANEL_ORDER);
            let certified = tm_integral_with_order(&ut, sigma, params, order2)?.value;
            let out = SupremumEstimate {
                kind: EstimateKind::Critical,
                mu_or_sigma: sigma,
                value: crit,
                certified_value: certified,
                certification_error: certify(crit, certified),
                argmax_profile: ut,
                iterations_used: est.iterations_used,
                converged: est.converged,
                constraint_residual: (g + l - 1.0).abs(),
                exploratory: sigma >= params.mu_star() * (1.0 - 1e-12),
                source: format!("identity from mu={mu:e}"),
                mu_over_sigma: Some(mu / sigma),
            };
            Ok((row, out))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut best: Option<SupremumEstimate> = None;
    for r in results {
        let (row, est) = r?;
        if best.as_ref().is_none_or(|b| est.value > b.value) {
            best = Some(est);
        }
        rows.push(row);
    }
    Ok(IdentityReport {
        sigma,
        rows,
        estimate: best.expect("nonempty grid"),
    })
}

/// Default identity grid as fractions of `σ`.
pub const DEFAULT_IDENTITY_FRACS: [f64; 9] = [1e-6, 0.01, 0.05, 0.1, 0.2, 0.35, 0.5, 0.7, 0.9];

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepRow {
    pub mu_frac: f64,
    pub mu: f64,
    pub estimate: f64,
    /// `estimate · (1 − (μ/μ*)^{p−1})`.
    pub normalized_product: f64,
    pub converged: bool,
}

/// `TMSC` estimates along fractions of `μ*`, ordered by fraction.
pub fn sweep_subcritical(
    mu_fracs: &[f64],
    params: &WeightParams,
    cfg: &OptimizerConfig,
) -> Result<Vec<SweepRow>> {
    if let Some(bad) = mu_fracs.iter().find(|&&f| !(f > 0.0 && f < 1.0)) {
        return Err(Error::domain(format!("mu fraction {bad} is not inside (0,1)")));
    }
    let mut fracs = mu_fracs.to_vec();
    fracs.sort_by(f64::total_cmp);
    let ms = params.mu_star();
    let p = params.p();
    fracs
        .par_iter()
        .map(|&f| {
            let est = maximize_tmsc(f * ms, params, cfg)?;
            Ok(SweepRow {
                mu_frac: f,
                mu: f * ms,
                estimate: est.value,
                normalized_product: est.value * (1.0 - f.powf(p - 1.0)),
                converged: est.converged,
            })
        })
        .collect()
}

/// `TMSC` estimates at increasing `μ`, each run seeded with the previous
/// maximizer so the sequence is non-decreasing.
pub fn tmsc_chain(mus: &[f64], params: &WeightParams, cfg: &OptimizerConfig) -> Result<Vec<SupremumEstimate>> {
    let mut sorted = mus.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<SupremumEstimate> = Vec::with_capacity(sorted.len());
    for mu in sorted {
        let mut c = cfg.clone();
        if let Some(prev) = out.last() {
            c.seed_families.push(TestFamilySpec::Custom {
                base: prev.argmax_profile.clone(),
            });
        }
        out.push(maximize_tmsc(mu, params, &c)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ProbeRow {
    pub sigma: f64,
    pub sigma_frac: f64,
    pub tmc_estimate: f64,
    /// `TMC − σ^{p−1}/(p−1)!`.
    pub gap: f64,
    /// `(p−1)!/σ^{p−1} · TMC`.
    pub nu: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    /// Relative gap above which `TMC > σ^{p−1}/(p−1)!` is counted as resolved.
    pub gap_tolerance: f64,
    /// Largest grid `σ` below the first resolved gap.
    pub sigma_star_lower: Option<f64>,
    /// First grid `σ` with a resolved gap: an empirical upper bound for `σ_*`.
    pub sigma_star_upper: Option<f64>,
    pub nu_monotone: bool,
    pub caveat: String,
}

/// Relative gap needed to count `TMC(σ) > σ^{p−1}/(p−1)!`.
pub const PROBE_GAP_TOL: f64 = 1e-6;

/// Scans `σ` upward, reporting the gap over `σ^{p−1}/(p−1)!` and `ν(σ)`.
/// Each run is seeded with the previous maximizer.
pub fn sigma_star_probe(
    params: &WeightParams,
    sigma_grid: &[f64],
    cfg: &OptimizerConfig,
) -> Result<ProbeReport> {
    if !params.k0_is_p_minus_one() {
        return Err(Error::Regime(format!(
            "the sigma_* probe needs p-1 to be an integer (k0 = p-1); got p = {}",
            params.p()
        )));
    }
    let ms = params.mu_star();
    if let Some(bad) = sigma_grid.iter().find(|&&s| !(s > 0.0 && s < ms)) {
        return Err(Error::domain(format!("sigma {bad} is not inside (0, mu* = {ms})")));
    }
    let mut sigmas = sigma_grid.to_vec();
    sigmas.sort_by(f64::total_cmp);
    let fact = params.factorial_p_minus_one();
    let p = params.p();
    let mut rows = Vec::with_capacity(sigmas.len());
    let mut prev: Option<RadialProfile> = None;
    for s in sigmas {
        let mut c = cfg.clone();
        if let Some(u) = &prev {
            c.seed_families.push(TestFamilySpec::Custom { base: u.clone() });
        }
        let est = maximize_tmc(s, params, &c)?;
        let base = s.powf(p - 1.0) / fact;
        rows.push(ProbeRow {
            sigma: s,
            sigma_frac: s / ms,
            tmc_estimate: est.value,
            gap: est.value - base,
            nu: est.value / base,
        });
        prev = Some(est.argmax_profile);
    }
    let nu_monotone = rows
        .windows(2)
        .all(|w| w[1].nu >= w[0].nu - 1e-6 * w[0].nu.max(1.0));
    let first = rows.iter().position(|r| r.gap > PROBE_GAP_TOL * (r.tmc_estimate - r.gap));
    let (lower, upper) = match first {
        Some(0) => (None, Some(rows[0].sigma)),
        Some(i) => (Some(rows[i - 1].sigma), Some(rows[i].sigma)),
        None => (rows.last().map(|r| r.sigma), None),
    };
    Ok(ProbeReport {
        rows,
        gap_tolerance: PROBE_GAP_TOL,
        sigma_star_lower: lower,
        sigma_star_upper: upper,
        nu_monotone,
        caveat: "lower-bound estimates on a finite grid: a resolved gap proves sigma_* <= sigma_upper; \
                 an unresolved gap does not prove sigma_* >= sigma_lower"
            .into(),
    })
}
