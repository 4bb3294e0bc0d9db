//! The truncated exponential `φ_p` and the Trudinger–Moser functionals.

use crate::error::{Error, Result};
use crate::measure::{grad_norm_pow, lq_norm_pow, QuadratureRule, WeightParams, DEFAULT_PANEL_ORDER};
use crate::profiles::RadialProfile;

/// Arguments above this are handled in the log domain.
pub const LOG_DOMAIN_THRESHOLD: f64 = 600.0;
/// Slack on the unit-ball constraints.
pub const CONSTRAINT_SLACK: f64 = 1e-8;

fn ln_factorial(k: u32) -> f64 {
    (1..=k).map(|j| (j as f64).ln()).sum()
}

/// `Σ_{j ≥ k} t^j / j!` for `t ≥ 0`.
///
/// Summed directly from the leading term when `t < k + 5`, where subtracting
/// the partial sum from `e^t` would cancel; otherwise `e^t − Σ_{j<k} t^j/j!`.
pub fn exp_tail(t: f64, k: u32) -> f64 {
    if t <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if t < k as f64 + 5.0 {
        let mut term = if k == 0 {
            1.0
        } else {
            (k as f64 * t.ln() - ln_factorial(k)).exp()
        };
        let mut sum = 0.0;
        let mut j = k;
        loop {
            sum += term;
            j += 1;
            term *= t / j as f64;
            if term <= 1e-17 * sum {
                break;
            }
        }
        sum
    } else {
        let mut partial = 0.0;
        let mut term = 1.0;
        for j in 0..k {
            partial += term;
            term *= t / (j + 1) as f64;
        }
        t.exp() - partial
    }
}

/// `ln Σ_{j ≥ k} t^j / j!`, finite for arguments where `e^t` overflows.
pub fn ln_exp_tail(t: f64, k: u32) -> f64 {
    if t <= LOG_DOMAIN_THRESHOLD {
        return exp_tail(t, k).ln();
    }
    // e^{-t} Σ_{j<k} t^j/j! is far below one here
    let head: f64 = (0..k)
        .map(|j| (j as f64 * t.ln() - ln_factorial(j) - t).exp())
        .sum();
    t + (-head).ln_1p()
}

/// `φ_p(t) = e^t − Σ_{k<k₀} t^k/k!`. Returns `+∞` past the `f64` range.
pub fn phi_p(t: f64, params: &WeightParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("phi_p needs t >= 0, got {t}")));
    }
    Ok(exp_tail(t, params.k0()))
}

/// `φ_p′(t) = e^t − Σ_{k<k₀−1} t^k/k!`.
pub fn phi_p_derivative(t: f64, params: &WeightParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("phi_p' needs t >= 0, got {t}")));
    }
    Ok(exp_tail(t, params.k0() - 1))
}

/// An integral that may exceed the `f64` range.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TmValue {
    /// The value, `+∞` when `overflow` is set.
    pub value: f64,
    /// Natural log of the value (`−∞` for zero).
    pub log_value: f64,
    /// Whether the log-domain path was taken.
    pub overflow: bool,
}

impl TmValue {
    fn direct(value: f64) -> Self {
        Self {
            value,
            log_value: value.ln(),
            overflow: false,
        }
    }

    fn from_log(log_value: f64) -> Self {
        let value = log_value.exp();
        Self {
            value,
            log_value,
            overflow: true,
        }
    }
}

/// `∫ φ_p(μ|u|^{p/(p−1)}) dλ_θ` on the profile's own cells.
pub fn tm_integral(u: &RadialProfile, mu: f64, params: &WeightParams) -> Result<TmValue> {
    tm_integral_with_order(u, mu, params, DEFAULT_PANEL_ORDER)
}

/// [`tm_integral`] with an explicit Gauss order per cell.
pub fn tm_integral_with_order(
    u: &RadialProfile,
    mu: f64,
    params: &WeightParams,
    panel_order: usize,
) -> Result<TmValue> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::domain(format!("mu must be finite and >= 0, got {mu}")));
    }
    if mu == 0.0 || u.is_zero() {
        return Ok(TmValue::direct(0.0));
    }
    let k0 = params.k0();
    let pe = params.exponent();
    let rule = QuadratureRule::from_grid(u.grid(), panel_order)?;
    let pts = rule.points(params.theta())?;
    let args: Vec<(f64, f64)> = pts
        .iter()
        .map(|pt| (pt.weight, mu * u.value_in_cell(pt.cell, pt.r).powf(pe)))
        .collect();
    // the cap holds the largest value of a non-increasing profile
    let t_max = mu * u.left_cap().powf(pe);
    if t_max <= LOG_DOMAIN_THRESHOLD {
        let s: f64 = args.iter().map(|&(w, t)| w * exp_tail(t, k0)).sum();
        return Ok(TmValue::direct(s));
    }
    let logs: Vec<f64> = args
        .iter()
        .filter(|&&(w, t)| w > 0.0 && t > 0.0)
        .map(|&(w, t)| w.ln() + ln_exp_tail(t, k0))
        .collect();
    Ok(TmValue::from_log(log_sum_exp(&logs)))
}

/// `ln Σ e^{x_i}`, stable for large arguments.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn check_profile_nonzero(u: &RadialProfile) -> Result<()> {
    if u.is_zero() {
        Err(Error::domain("objective undefined for the zero profile"))
    } else {
        Ok(())
    }
}

/// `∫ φ_p(μ|u|^{p/(p−1)}) dλ_θ / ‖u‖^p_{L^p_θ}` on `‖u′‖_{L^p_α} ≤ 1`.
pub fn subcritical_objective(u: &RadialProfile, mu: f64, params: &WeightParams) -> Result<f64> {
    Ok(subcritical_objective_log(u, mu, params)?.exp())
}

/// Natural log of [`subcritical_objective`].
pub fn subcritical_objective_log(u: &RadialProfile, mu: f64, params: &WeightParams) -> Result<f64> {
    if !(mu >= 0.0 && mu < params.mu_star()) {
        return Err(Error::domain(format!(
            "subcritical mu must lie in [0, {}), got {mu}",
            params.mu_star()
        )));
    }
    check_profile_nonzero(u)?;
    let g = grad_norm_pow(u, params);
    if g > 1.0 + CONSTRAINT_SLACK {
        return Err(Error::Constraint(format!("‖u′‖^p = {g} exceeds 1")));
    }
    let l = lq_norm_pow(u, params.p(), params.theta(), DEFAULT_PANEL_ORDER)?;
    Ok(tm_integral(u, mu, params)?.log_value - l.ln())
}

/// `∫ φ_p(σ|u|^{p/(p−1)}) dλ_θ` on the full-norm unit ball.
pub fn critical_objective(u: &RadialProfile, sigma: f64, params: &WeightParams) -> Result<f64> {
    if !(sigma >= 0.0 && sigma <= params.mu_star()) {
        return Err(Error::domain(format!(
            "critical sigma must lie in [0, {}], got {sigma}",
            params.mu_star()
        )));
    }
    let norm = full_norm_pow(u, params)?;
    if norm > 1.0 + CONSTRAINT_SLACK {
        return Err(Error::Constraint(format!("‖u‖^p = {norm} exceeds 1")));
    }
    Ok(tm_integral(u, sigma, params)?.value)
}

/// `‖u′‖^p_{L^p_α} + ‖u‖^p_{L^p_θ}`.
pub fn full_norm_pow(u: &RadialProfile, params: &WeightParams) -> Result<f64> {
    Ok(grad_norm_pow(u, params) + lq_norm_pow(u, params.p(), params.theta(), DEFAULT_PANEL_ORDER)?)
}

/// `(1 − (μ/σ)^{p−1}) / (μ/σ)^{p−1}`.
pub fn identity_ratio(mu: f64, sigma: f64, params: &WeightParams) -> Result<f64> {
    if !(mu > 0.0 && mu < sigma) {
        return Err(Error::domain(format!("need 0 < mu < sigma, got mu={mu}, sigma={sigma}")));
    }
    let rho = (mu / sigma).powf(params.p() - 1.0);
    Ok((1.0 - rho) / rho)
}

/// Which normalization the report's `objective` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ObjectiveKind {
    /// Divided by `‖u‖^p_{L^p_θ}`.
    Subcritical,
    /// The integral itself.
    Critical,
}

/// Norms and Trudinger–Moser integral of one profile.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FunctionalReport {
    pub grad_norm_p: f64,
    pub lp_theta_norm: f64,
    pub full_norm: f64,
    pub tm_integral: f64,
    pub tm_log: f64,
    pub objective: f64,
    pub objective_log: f64,
    pub overflow_flag: bool,
}

impl FunctionalReport {
    /// Evaluates everything without enforcing the unit-ball constraints.
    pub fn evaluate(
        u: &RadialProfile,
        mu: f64,
        params: &WeightParams,
        kind: ObjectiveKind,
    ) -> Result<Self> {
        let p = params.p();
        let g = grad_norm_pow(u, params);
        let l = lq_norm_pow(u, p, params.theta(), DEFAULT_PANEL_ORDER)?;
        let tm = tm_integral(u, mu, params)?;
        let objective_log = match kind {
            ObjectiveKind::Subcritical => {
                check_profile_nonzero(u)?;
                tm.log_value - l.ln()
            }
            ObjectiveKind::Critical => tm.log_value,
        };
        Ok(Self {
            grad_norm_p: g.powf(1.0 / p),
            lp_theta_norm: l.powf(1.0 / p),
            full_norm: (g + l).powf(1.0 / p),
            tm_integral: tm.value,
            tm_log: tm.log_value,
            objective: objective_log.exp(),
            objective_log,
            overflow_flag: tm.overflow,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{make_moser, normalize_subcritical, RadialGrid};
    use std::f64::consts::E;

    fn series_oracle(t: f64, k: u32) -> f64 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for j in 0..400u32 {
            if j >= k {
                sum += term;
            }
            term *= t / (j + 1) as f64;
        }
        sum
    }

    #[test]
    fn phi_examples() {
        let p2 = WeightParams::new(2.0, 1.0).unwrap();
        let p3 = WeightParams::new(3.0, 1.0).unwrap();
        let p25 = WeightParams::new(2.5, 1.0).unwrap();
        assert!((phi_p(1.0, &p2).unwrap() - (E - 1.0)).abs() < 1e-14);
        assert_eq!(phi_p(0.0, &p3).unwrap(), 0.0);
        let v = phi_p(2.0, &p25).unwrap();
        assert!((v - 4.3890560989306504).abs() < 1e-12);
        assert!((v - series_oracle(2.0, 2)).abs() < 1e-13);
        assert!(phi_p(-1.0, &p2).is_err());
    }

    #[test]
    fn exp_tail_matches_series_across_switch() {
        for k in 1..5u32 {
            for i in 0..200 {
                let t = 1e-4 * 1.08f64.powi(i);
                if t > 60.0 {
                    break;
                }
                let a = exp_tail(t, k);
                let b = series_oracle(t, k);
                assert!((a - b).abs() <= 1e-13 * b, "k={k} t={t} {a} {b}");
            }
        }
    }

    #[test]
    fn small_argument_keeps_precision() {
        // k0 = 2: φ(t) ≈ t²/2 where e^t − 1 − t would lose every digit
        let v = exp_tail(1e-9, 2);
        assert!((v / 5e-19 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn log_tail_is_consistent() {
        for &t in &[10.0, 300.0, 599.0] {
            for k in 1..4 {
                assert!((ln_exp_tail(t, k) - exp_tail(t, k).ln()).abs() < 1e-12);
            }
        }
        assert!((ln_exp_tail(1000.0, 2) - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_is_shorter_tail() {
        let p = WeightParams::new(3.0, 0.0).unwrap();
        for &t in &[0.1, 1.0, 4.0, 20.0] {
            let h = 1e-6 * t;
            let fd = (phi_p(t + h, &p).unwrap() - phi_p(t - h, &p).unwrap()) / (2.0 * h);
            let d = phi_p_derivative(t, &p).unwrap();
            assert!((fd - d).abs() < 1e-6 * d);
        }
    }

    #[test]
    fn identity_ratio_examples() {
        let p = WeightParams::new(2.0, 1.0).unwrap();
        assert!((identity_ratio(0.25, 1.0, &p).unwrap() - 3.0).abs() < 1e-15);
        assert!((identity_ratio(0.5, 1.0, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!(identity_ratio(1.0, 1.0, &p).is_err());
        assert!(identity_ratio(0.0, 1.0, &p).is_err());
        let p3 = WeightParams::new(3.0, 1.0).unwrap();
        let x = 0.5f64.sqrt();
        assert!((identity_ratio(x, 1.0, &p3).unwrap() - 1.0).abs() < 1e-14);
        assert!(identity_ratio(1.0 - 1e-12, 1.0, &p).unwrap() < 1e-11);
    }

    #[test]
    fn objectives_at_zero_parameter() {
        let p = WeightParams::new(2.0, 1.0).unwrap();
        let g = RadialGrid::for_moser(5, &p, 10.0).unwrap();
        let u = make_moser(5, &p, &g).unwrap();
        assert_eq!(tm_integral(&u, 0.0, &p).unwrap().value, 0.0);
        assert_eq!(subcritical_objective(&u, 0.0, &p).unwrap(), 0.0);
        let z = crate::profiles::RadialProfile::zero(g);
        assert!(subcritical_objective(&z, 1.0, &p).is_err());
    }

    #[test]
    fn subcritical_exceeds_leading_term() {
        let p = WeightParams::new(2.0, 1.0).unwrap();
        let g = RadialGrid::for_moser(4, &p, 10.0).unwrap();
        let v = normalize_subcritical(&make_moser(4, &p, &g).unwrap(), &p).unwrap();
        for &mu in &[0.1, 1.0, 5.0] {
            let obj = subcritical_objective(&v, mu, &p).unwrap();
            let tm = tm_integral(&v, mu, &p).unwrap().value;
            assert!((obj - tm).abs() < 1e-8 * tm);
            assert!(obj > mu);
        }
    }

    #[test]
    fn constraint_violations_are_reported() {
        let p = WeightParams::new(2.0, 1.0).unwrap();
        let g = RadialGrid::for_moser(4, &p, 10.0).unwrap();
        let u = crate::profiles::rescale(&make_moser(4, &p, &g).unwrap(), 2.0, 1.0).unwrap();
        assert!(matches!(subcritical_objective(&u, 1.0, &p), Err(Error::Constraint(_))));
        assert!(matches!(critical_objective(&u, 1.0, &p), Err(Error::Constraint(_))));
    }

    #[test]
    fn log_domain_switch() {
        let p = WeightParams::new(2.0, 1.0).unwrap();
        let g = RadialGrid::for_moser(700, &p, 10.0).unwrap();
        let u = make_moser(700, &p, &g).unwrap();
        let tm = tm_integral(&u, p.mu_star(), &p).unwrap();
        assert!(tm.overflow);
        assert!(tm.log_value.is_finite());
        let rep = FunctionalReport::evaluate(&u, p.mu_star(), &p, ObjectiveKind::Critical).unwrap();
        assert!(rep.overflow_flag);
        assert!((rep.full_norm.powi(2) - rep.grad_norm_p.powi(2) - rep.lp_theta_norm.powi(2)).abs() < 1e-10);
    }
}
