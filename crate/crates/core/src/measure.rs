//! Fractional-dimension measure `dλ_θ = ω_θ r^θ dr` and weighted norms.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::profiles::{Interpolation, RadialGrid, RadialProfile};

/// Default Gauss points per cell.
pub const DEFAULT_PANEL_ORDER: usize = 8;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the positive reals (Lanczos, g = 7, with reflection below 1/2).
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("gamma_fn needs x > 0, got {x}")));
    }
    Ok(gamma_positive(x))
}

fn gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_positive(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    // t^(x+1/2) split in two halves so large arguments do not overflow early
    let half = t.powf(0.5 * (x + 0.5));
    (2.0 * PI).sqrt() * half * (-t).exp() * half * acc
}

/// `ω_θ = 2π^{(θ+1)/2} / Γ((θ+1)/2)`.
pub fn omega(theta: f64) -> Result<f64> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("omega needs theta >= 0, got {theta}")));
    }
    let h = 0.5 * (theta + 1.0);
    Ok(2.0 * PI.powf(h) / gamma_positive(h))
}

/// `|B_R|_θ = ω_θ R^{θ+1} / (θ+1)`.
pub fn ball_volume(radius: f64, theta: f64) -> Result<f64> {
    if !(radius >= 0.0) {
        return Err(Error::domain(format!("ball radius must be >= 0, got {radius}")));
    }
    Ok(omega(theta)? * radius.powf(theta + 1.0) / (theta + 1.0))
}

/// Parameter bundle `(p, α, θ)` restricted to the Trudinger–Moser regime `α = p − 1`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightParams {
    p: f64,
    alpha: f64,
    theta: f64,
    k0: u32,
    mu_star: f64,
    omega_alpha: f64,
    omega_theta: f64,
}

impl WeightParams {
    /// Builds the Trudinger–Moser bundle with `α = p − 1`.
    pub fn new(p: f64, theta: f64) -> Result<Self> {
        Self::with_alpha(p, p - 1.0, theta)
    }

    /// Rejects every `α` other than `p − 1`.
    pub fn with_alpha(p: f64, alpha: f64, theta: f64) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::domain(format!("p must be a finite real >= 2, got {p}")));
        }
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::domain(format!("theta must be a finite real >= 0, got {theta}")));
        }
        if alpha != p - 1.0 {
            return Err(Error::Regime(format!(
                "alpha = {alpha} but the Trudinger-Moser regime needs alpha = p - 1 = {}",
                p - 1.0
            )));
        }
        let omega_alpha = omega(alpha)?;
        let omega_theta = omega(theta)?;
        // smallest integer >= p - 1; the tolerance absorbs p values like 3.0000000000000004
        let k0 = ((p - 1.0) - 1e-12).ceil().max(1.0) as u32;
        Ok(Self {
            p,
            alpha,
            theta,
            k0,
            mu_star: (theta + 1.0) * omega_alpha.powf(1.0 / alpha),
            omega_alpha,
            omega_theta,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `min{ j ∈ ℕ : j ≥ p − 1 }`.
    pub fn k0(&self) -> u32 {
        self.k0
    }

    /// Sharp exponent `μ_{α,θ} = (θ+1) ω_α^{1/α}`.
    pub fn mu_star(&self) -> f64 {
        self.mu_star
    }

    pub fn omega_alpha(&self) -> f64 {
        self.omega_alpha
    }

    pub fn omega_theta(&self) -> f64 {
        self.omega_theta
    }

    /// Conjugate-type exponent `p/(p−1)` appearing inside `φ_p`.
    pub fn exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// True when `k0 = p − 1`, i.e. `p` is an integer.
    pub fn k0_is_p_minus_one(&self) -> bool {
        (self.k0 as f64 - (self.p - 1.0)).abs() < 1e-12
    }

    /// `Γ(p)`, which is `(p−1)!` for integer `p`.
    pub fn factorial_p_minus_one(&self) -> f64 {
        gamma_positive(self.p)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton on `P_n`).
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[n - 1 - i] = x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
    (xs, ws)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// One quadrature point of a composite rule.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub r: f64,
    /// Full weight, including `ω_θ r^θ` and the Jacobian.
    pub weight: f64,
    /// Left node of the containing cell; `None` for the cap cell `(0, r_1]`.
    pub cell: Option<usize>,
}

/// Composite Gauss–Legendre panels on the cells of a radial grid.
///
/// Interior cells `[r_i, r_{i+1}]` are integrated in `s = ln r`, so the weight
/// `r^θ dr = e^{(θ+1)s} ds` stays smooth. The cap cell `(0, r_1]` uses the
/// substitution `r = r_1 x^{1/(θ+1)}`, which is exact for integrands that are
/// constant there.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    panel_order: usize,
    r_min_cutoff: f64,
    gl_x: Vec<f64>,
    gl_w: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(nodes: Vec<f64>, panel_order: usize) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::domain("quadrature rule needs at least 2 nodes"));
        }
        if panel_order < 2 {
            return Err(Error::domain("panel order must be >= 2"));
        }
        if !(nodes[0] > 0.0) {
            return Err(Error::domain("quadrature nodes must be positive"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || !nodes[nodes.len() - 1].is_finite() {
            return Err(Error::domain("quadrature nodes must be finite and strictly increasing"));
        }
        let (gl_x, gl_w) = gauss_legendre(panel_order);
        let r_min_cutoff = nodes[0];
        Ok(Self {
            nodes,
            panel_order,
            r_min_cutoff,
            gl_x,
            gl_w,
        })
    }

    pub fn from_grid(grid: &RadialGrid, panel_order: usize) -> Result<Self> {
        Self::new(grid.nodes().to_vec(), panel_order)
    }

    /// Log-uniform nodes on `[r_min, r_max]`.
    pub fn log_uniform(r_min: f64, r_max: f64, count: usize, panel_order: usize) -> Result<Self> {
        let grid = RadialGrid::log_uniform(r_min, r_max, count)?;
        Self::from_grid(&grid, panel_order)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn panel_order(&self) -> usize {
        self.panel_order
    }

    pub fn r_min_cutoff(&self) -> f64 {
        self.r_min_cutoff
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// All quadrature points for the measure `ω_θ r^θ dr` on `(0, R_max]`.
    pub fn points(&self, theta: f64) -> Result<Vec<QuadPoint>> {
        let om = omega(theta)?;
        let tp1 = theta + 1.0;
        let mut out = Vec::with_capacity((self.nodes.len()) * self.panel_order);
        let r1 = self.nodes[0];
        let cap_scale = om * r1.powf(tp1) / tp1;
        for (x, w) in self.gl_x.iter().zip(&self.gl_w) {
            let t = 0.5 * (x + 1.0);
            out.push(QuadPoint {
                r: r1 * t.powf(1.0 / tp1),
                weight: cap_scale * 0.5 * w,
                cell: None,
            });
        }
        for i in 0..self.nodes.len() - 1 {
            let (sa, sb) = (self.nodes[i].ln(), self.nodes[i + 1].ln());
            let half = 0.5 * (sb - sa);
            let mid = 0.5 * (sb + sa);
            for (x, w) in self.gl_x.iter().zip(&self.gl_w) {
                let s = mid + half * x;
                out.push(QuadPoint {
                    r: s.exp(),
                    weight: om * half * w * (tp1 * s).exp(),
                    cell: Some(i),
                });
            }
        }
        Ok(out)
    }
}

/// `∫_0^{R_max} f dλ_θ = ω_θ ∫_0^{R_max} f(r) r^θ dr` by composite Gauss panels.
pub fn integrate_weighted<F>(f: F, rule: &QuadratureRule, theta: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut acc = 0.0;
    for q in rule.points(theta)? {
        let v = f(q.r);
        if !v.is_finite() {
            return Err(Error::Evaluation {
                radius: q.r,
                value: v,
            });
        }
        acc += q.weight * v;
    }
    Ok(acc)
}

/// `‖u‖^q_{L^q_θ}` (no root taken), on the profile's own cells.
pub fn lq_norm_pow(u: &RadialProfile, q: f64, theta: f64, panel_order: usize) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::domain(format!("norm exponent q must be >= 1, got {q}")));
    }
    let rule = QuadratureRule::from_grid(u.grid(), panel_order)?;
    let mut acc = 0.0;
    for pt in rule.points(theta)? {
        let v = u.value_in_cell(pt.cell, pt.r);
        if v > 0.0 {
            acc += pt.weight * v.powf(q);
        }
    }
    Ok(acc)
}

/// `‖u‖_{L^q_θ}`.
pub fn norm_lq_theta(u: &RadialProfile, q: f64, theta: f64) -> Result<f64> {
    Ok(lq_norm_pow(u, q, theta, DEFAULT_PANEL_ORDER)?.powf(1.0 / q))
}

/// `‖u′‖^p_{L^p_α}` in closed form, cell by cell.
///
/// On a linear cell `|u′|` is constant and `∫ r^α dr` is exact; on a
/// log-linear cell `u′ = b/r` and `∫ r^{α−p} dr` is exact.
pub fn grad_norm_pow(u: &RadialProfile, params: &WeightParams) -> f64 {
    let p = params.p();
    let alpha = params.alpha();
    let nodes = u.grid().nodes();
    let vals = u.values();
    let mut acc = 0.0;
    for i in 0..nodes.len() - 1 {
        let dv = (vals[i + 1] - vals[i]).abs();
        if dv == 0.0 {
            continue;
        }
        let (a, b) = (nodes[i], nodes[i + 1]);
        acc += match u.interpolation() {
            Interpolation::Linear => {
                let slope = dv / (b - a);
                slope.powf(p) * power_integral(a, b, alpha)
            }
            Interpolation::LogLinear => {
                let slope = dv / (b / a).ln();
                slope.powf(p) * power_integral(a, b, alpha - p)
            }
        };
    }
    params.omega_alpha() * acc
}

/// `‖u′‖_{L^p_α}`.
pub fn norm_grad_lp_alpha(u: &RadialProfile, params: &WeightParams) -> f64 {
    grad_norm_pow(u, params).powf(1.0 / params.p())
}

/// `∫_a^b r^e dr` without cancellation trouble near `e = −1`.
fn power_integral(a: f64, b: f64, e: f64) -> f64 {
    let k = e + 1.0;
    let l = (b / a).ln();
    if (k * l).abs() < 1e-8 {
        a.powf(k) * l * (1.0 + 0.5 * k * l)
    } else {
        a.powf(k) * (k * l).exp_m1() / k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(gamma_fn(1.0).unwrap(), 1.0) < 1e-14);
        assert!(rel(gamma_fn(0.5).unwrap(), PI.sqrt()) < 1e-14);
        assert!(rel(gamma_fn(5.0).unwrap(), 24.0) < 1e-14);
        let mut fact = 1.0_f64;
        for n in 1..50 {
            fact *= n as f64;
            assert!(rel(gamma_fn(n as f64 + 1.0).unwrap(), fact) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(matches!(gamma_fn(0.0), Err(Error::Domain(_))));
        assert!(gamma_fn(-1.5).is_err());
        assert!(gamma_fn(f64::NAN).is_err());
    }

    #[test]
    fn omega_integer_dimensions() {
        assert!(rel(omega(0.0).unwrap(), 2.0) < 1e-14);
        assert!(rel(omega(1.0).unwrap(), 2.0 * PI) < 1e-14);
        assert!(rel(omega(2.0).unwrap(), 4.0 * PI) < 1e-14);
        assert!(omega(-0.1).is_err());
    }

    #[test]
    fn params_regime_and_k0() {
        let p = WeightParams::new(2.0, 1.0).unwrap();
        assert_eq!(p.k0(), 1);
        assert!(rel(p.mu_star(), 4.0 * PI) < 1e-14);
        assert_eq!(WeightParams::new(2.5, 0.0).unwrap().k0(), 2);
        assert_eq!(WeightParams::new(3.0, 0.0).unwrap().k0(), 2);
        assert!(matches!(
            WeightParams::with_alpha(2.0, 1.5, 1.0),
            Err(Error::Regime(_))
        ));
        assert!(WeightParams::new(1.5, 1.0).is_err());
        assert!(WeightParams::new(2.0, -1.0).is_err());
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in 2..20 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn integrate_examples() {
        let rule = QuadratureRule::log_uniform(1e-12, 1.0, 200, 8).unwrap();
        let v = integrate_weighted(|_| 1.0, &rule, 1.0).unwrap();
        assert!(rel(v, PI) < 1e-12);
        let v = integrate_weighted(|r| r, &rule, 0.0).unwrap();
        assert!(rel(v, 1.0) < 1e-12);
    }

    #[test]
    fn integrate_reports_offending_radius() {
        let rule = QuadratureRule::log_uniform(1e-3, 1.0, 32, 4).unwrap();
        let err = integrate_weighted(|r| if r > 0.5 { f64::NAN } else { 1.0 }, &rule, 0.0)
            .unwrap_err();
        match err {
            Error::Evaluation { radius, .. } => assert!(radius > 0.5),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn quadrature_rejects_bad_nodes() {
        assert!(QuadratureRule::new(vec![1.0], 8).is_err());
        assert!(QuadratureRule::new(vec![0.0, 1.0], 8).is_err());
        assert!(QuadratureRule::new(vec![0.5, 0.5, 1.0], 8).is_err());
        assert!(QuadratureRule::new(vec![0.1, 1.0], 1).is_err());
    }

    #[test]
    fn power_integral_matches_direct_formula() {
        assert!(rel(power_integral(0.5, 2.0, 1.0), (4.0 - 0.25) / 2.0) < 1e-14);
        assert!(rel(power_integral(0.5, 2.0, -1.0), 4f64.ln()) < 1e-14);
        assert!(rel(power_integral(0.5, 2.0, -1.0 + 1e-10), 4f64.ln()) < 1e-9);
    }
}
