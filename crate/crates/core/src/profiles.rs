//! Radial grids, monotone piecewise profiles, the explicit test families, and
//! the dilation transforms used to move between constraint sets.
//!
//! A profile stores nodal values on a grid and is constant on the cap
//! `(0, r_1]`. Between nodes it is either linear in `r` or linear in `ln r`;
//! the second form represents the logarithmic segment of the Moser family
//! exactly. Dilations `u ↦ ζu(τ·)` are applied by scaling the grid, so they
//! are exact for both interpolation kinds.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::measure::{grad_norm_pow, lq_norm_pow, WeightParams, DEFAULT_PANEL_ORDER};

/// Minimum node count of a grid.
pub const MIN_GRID_NODES: usize = 16;
/// Nodes required strictly below the Moser knee.
pub const MIN_NODES_BELOW_KNEE: usize = 8;

/// How the nodes of a grid were laid out.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Spacing {
    /// Constant ratio `r_{i+1}/r_i`.
    LogUniform { ratio: f64 },
    /// Log-uniform base with extra nodes packed below `focus`.
    Refined { ratio: f64, focus: f64, extra: usize },
    /// Log-uniform between consecutive breakpoints.
    Piecewise { breaks: Vec<f64> },
    /// Arbitrary strictly increasing nodes.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    spacing: Spacing,
}

impl RadialGrid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        Self::with_spacing(nodes, Spacing::Explicit)
    }

    fn with_spacing(nodes: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if nodes.len() < MIN_GRID_NODES {
            return Err(Error::Resolution {
                reason: "radial grid too small".into(),
                required: MIN_GRID_NODES,
                available: nodes.len(),
            });
        }
        if !(nodes[0] > 0.0) {
            return Err(Error::domain(format!("grid nodes must be positive, got {}", nodes[0])));
        }
        if nodes.iter().any(|r| !r.is_finite()) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("grid nodes must be finite and strictly increasing"));
        }
        Ok(Self { nodes, spacing })
    }

    /// `count` nodes log-uniformly spaced on `[r_min, r_max]`.
    pub fn log_uniform(r_min: f64, r_max: f64, count: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::domain(format!(
                "log grid needs 0 < r_min < r_max < inf, got [{r_min}, {r_max}]"
            )));
        }
        if count < 2 {
            return Err(Error::Resolution {
                reason: "radial grid too small".into(),
                required: MIN_GRID_NODES,
                available: count,
            });
        }
        let nodes = log_points(r_min, r_max, count);
        let ratio = (r_max / r_min).powf(1.0 / (count - 1) as f64);
        Self::with_spacing(nodes, Spacing::LogUniform { ratio })
    }

    /// 512 log-spaced nodes on `[1e-10, 10]`.
    pub fn default_grid() -> Self {
        Self::log_uniform(1e-10, 10.0, 512).expect("default grid is valid")
    }

    /// Log-uniform on each `[breaks[k], breaks[k+1]]` with `counts[k]` cells.
    pub fn piecewise_log(breaks: &[f64], counts: &[usize]) -> Result<Self> {
        if breaks.len() < 2 || counts.len() != breaks.len() - 1 {
            return Err(Error::domain("piecewise grid needs k+1 breaks and k cell counts"));
        }
        let mut nodes = vec![breaks[0]];
        for (k, &cells) in counts.iter().enumerate() {
            if cells == 0 || !(breaks[k + 1] > breaks[k]) || !(breaks[k] > 0.0) {
                return Err(Error::domain("piecewise grid breaks must increase and counts be >= 1"));
            }
            let seg = log_points(breaks[k], breaks[k + 1], cells + 1);
            nodes.extend_from_slice(&seg[1..]);
        }
        Self::with_spacing(
            nodes,
            Spacing::Piecewise {
                breaks: breaks.to_vec(),
            },
        )
    }

    /// Default grid for a declared Moser index: 512 log-spaced nodes reaching
    /// at least two decades below the knee, plus 128 nodes packed below it.
    pub fn for_moser(n: u32, params: &WeightParams, r_max: f64) -> Result<Self> {
        let knee = moser_knee(n, params);
        let r_min = (1e-10f64).min(knee * 1e-2);
        Self::log_uniform(r_min, r_max, 512)?.refine_below(knee, 128)
    }

    /// Adds `extra` log-spaced nodes in `(r_1, focus)`.
    pub fn refine_below(&self, focus: f64, extra: usize) -> Result<Self> {
        if !(focus > self.r_min()) {
            return Err(Error::domain(format!(
                "refinement focus {focus:e} is not above the first node {:e}",
                self.r_min()
            )));
        }
        let ratio = match self.spacing {
            Spacing::LogUniform { ratio } | Spacing::Refined { ratio, .. } => ratio,
            _ => f64::NAN,
        };
        let pts = log_points(self.r_min(), focus, extra + 2);
        let merged = merge_nodes(&self.nodes, &pts[1..pts.len() - 1]);
        Self::with_spacing(merged, Spacing::Refined { ratio, focus, extra })
    }

    /// Inserts the given radii as nodes (values outside `(r_1, R_max)` are ignored).
    pub fn with_breakpoints(&self, points: &[f64]) -> Self {
        let inside: Vec<f64> = points
            .iter()
            .copied()
            .filter(|&r| r > self.r_min() && r < self.r_max())
            .collect();
        let merged = merge_nodes(&self.nodes, &inside);
        let spacing = if merged.len() == self.nodes.len() {
            self.spacing.clone()
        } else {
            Spacing::Explicit
        };
        Self {
            nodes: merged,
            spacing,
        }
    }

    /// Grid of `r ↦ u(τr)`: every node divided by `tau`.
    pub fn dilate(&self, tau: f64) -> Self {
        let spacing = match &self.spacing {
            Spacing::Refined { ratio, focus, extra } => Spacing::Refined {
                ratio: *ratio,
                focus: focus / tau,
                extra: *extra,
            },
            Spacing::Piecewise { breaks } => Spacing::Piecewise {
                breaks: breaks.iter().map(|b| b / tau).collect(),
            },
            s => s.clone(),
        };
        Self {
            nodes: self.nodes.iter().map(|r| r / tau).collect(),
            spacing,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> &Spacing {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index `i` with `r_i <= r < r_{i+1}`; `None` for `r <= r_1` or `r >= R_max`.
    pub fn locate(&self, r: f64) -> Option<usize> {
        if r <= self.nodes[0] || r >= self.r_max() {
            return None;
        }
        let idx = self.nodes.partition_point(|&x| x <= r);
        Some(idx - 1)
    }
}

fn log_points(a: f64, b: f64, count: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    let mut pts: Vec<f64> = (0..count)
        .map(|i| (la + (lb - la) * i as f64 / (count - 1) as f64).exp())
        .collect();
    pts[0] = a;
    pts[count - 1] = b;
    pts
}

fn merge_nodes(base: &[f64], extra: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = base.iter().chain(extra).copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
    all.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs());
    all
}

/// Interpolation between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Interpolation {
    /// Linear in `r`.
    Linear,
    /// Linear in `ln r`.
    LogLinear,
}

impl Interpolation {
    fn tag(self) -> &'static str {
        match self {
            Interpolation::Linear => "linear",
            Interpolation::LogLinear => "log-linear",
        }
    }

    fn from_tag(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Interpolation::Linear),
            "log-linear" => Ok(Interpolation::LogLinear),
            other => Err(Error::Parse(format!("unknown interpolation '{other}'"))),
        }
    }
}

/// Non-increasing, nonnegative radial profile vanishing at `R_max`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<f64>,
    interp: Interpolation,
}

impl RadialProfile {
    pub fn new(grid: RadialGrid, values: Vec<f64>, interp: Interpolation) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Profile(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Profile(format!(
                "value {} at node {i} is not a finite nonnegative number",
                values[i]
            )));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::Profile(format!(
                "profile increases between nodes {i} and {}",
                i + 1
            )));
        }
        if values[values.len() - 1] != 0.0 {
            return Err(Error::Profile("profile must vanish at R_max".into()));
        }
        Ok(Self {
            grid,
            values,
            interp,
        })
    }

    /// Samples `f` at the nodes; the result must already be admissible.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: RadialGrid, f: F, interp: Interpolation) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, interp)
    }

    /// Projects arbitrary nodal data onto the admissible cone (pool-adjacent
    /// violators, clamp at zero, zero at `R_max`).
    pub fn from_values_projected(grid: RadialGrid, values: &[f64], interp: Interpolation) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Profile(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        let mut v = project_non_increasing(values);
        let last = v.len() - 1;
        v[last] = 0.0;
        for x in v.iter_mut() {
            *x = x.max(0.0);
        }
        Self::new(grid, v, interp)
    }

    pub fn zero(grid: RadialGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
            interp: Interpolation::Linear,
        }
    }

    /// `u(r) = (1 − r/radius)_+`, linear in `r`, with `radius` inserted as a node.
    pub fn tent(radius: f64, grid: &RadialGrid) -> Result<Self> {
        if !(radius > grid.r_min() && radius <= grid.r_max()) {
            return Err(Error::domain(format!("tent radius {radius} outside the grid")));
        }
        let g = grid.with_breakpoints(&[radius]);
        Self::from_fn(g, |r| (1.0 - r / radius).max(0.0), Interpolation::Linear)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interp
    }

    /// Value on `(0, r_1]`.
    pub fn left_cap(&self) -> f64 {
        self.values[0]
    }

    pub fn r_max(&self) -> f64 {
        self.grid.r_max()
    }

    pub fn is_zero(&self) -> bool {
        self.values[0] == 0.0
    }

    /// Last radius where the profile is positive, or the first node if zero.
    pub fn support_end(&self) -> f64 {
        let k = self.values.iter().rposition(|&v| v > 0.0).unwrap_or(0);
        self.grid.nodes()[(k + 1).min(self.grid.len() - 1)]
    }

    /// Largest node up to which the profile equals its cap.
    pub fn cap_end(&self) -> f64 {
        let c = self.values[0];
        let k = self.values.iter().position(|&v| v < c).unwrap_or(1);
        self.grid.nodes()[k.saturating_sub(1)]
    }

    pub fn value_at(&self, r: f64) -> f64 {
        if r <= self.grid.r_min() {
            return self.values[0];
        }
        match self.grid.locate(r) {
            Some(i) => self.value_in_cell(Some(i), r),
            None => 0.0,
        }
    }

    /// Interpolated value when the containing cell is already known.
    pub fn value_in_cell(&self, cell: Option<usize>, r: f64) -> f64 {
        let Some(i) = cell else {
            return self.values[0];
        };
        let nodes = self.grid.nodes();
        let (a, b) = (nodes[i], nodes[i + 1]);
        let lam = match self.interp {
            Interpolation::Linear => (r - a) / (b - a),
            Interpolation::LogLinear => (r / a).ln() / (b / a).ln(),
        };
        (1.0 - lam) * self.values[i] + lam * self.values[i + 1]
    }

    /// Nodal evaluation on another grid.
    pub fn resample(&self, grid: &RadialGrid) -> Result<Self> {
        if self.support_end() > grid.r_max() * (1.0 + 1e-12) && !self.is_zero() {
            return Err(Error::Resolution {
                reason: format!(
                    "support ends at {:e}, beyond the target R_max {:e}",
                    self.support_end(),
                    grid.r_max()
                ),
                required: grid.len(),
                available: grid.len(),
            });
        }
        let mut values: Vec<f64> = grid.nodes().iter().map(|&r| self.value_at(r)).collect();
        let last = values.len() - 1;
        values[last] = 0.0;
        // interpolation round-off can break monotonicity by an ulp
        for i in 1..values.len() {
            if values[i] > values[i - 1] {
                values[i] = values[i - 1];
            }
        }
        Self::new(grid.clone(), values, self.interp)
    }

    /// Columnar text: a header with `p, α, θ, R_max` and one `radius value` row per node.
    pub fn to_text(&self, params: &WeightParams) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# tmfrac-profile p={:.16e} alpha={:.16e} theta={:.16e} r_max={:.16e} interp={} nodes={}",
            params.p(),
            params.alpha(),
            params.theta(),
            self.r_max(),
            self.interp.tag(),
            self.grid.len()
        );
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            let _ = writeln!(s, "{r:.16e} {v:.16e}");
        }
        s
    }

    /// Inverse of [`RadialProfile::to_text`].
    pub fn from_text(text: &str) -> Result<(Self, WeightParams)> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty profile file".into()))?;
        let body = header
            .strip_prefix("# tmfrac-profile")
            .ok_or_else(|| Error::Parse("missing '# tmfrac-profile' header".into()))?;
        let mut p = None;
        let mut alpha = None;
        let mut theta = None;
        let mut interp = None;
        for kv in body.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field '{kv}'")))?;
            match k {
                "p" => p = Some(parse_f64(v)?),
                "alpha" => alpha = Some(parse_f64(v)?),
                "theta" => theta = Some(parse_f64(v)?),
                "interp" => interp = Some(Interpolation::from_tag(v)?),
                _ => {}
            }
        }
        let params = WeightParams::with_alpha(
            p.ok_or_else(|| Error::Parse("header lacks p".into()))?,
            alpha.ok_or_else(|| Error::Parse("header lacks alpha".into()))?,
            theta.ok_or_else(|| Error::Parse("header lacks theta".into()))?,
        )?;
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut it = line.split_whitespace();
            let (Some(r), Some(v), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse(format!("bad profile row '{line}'")));
            };
            nodes.push(parse_f64(r)?);
            values.push(parse_f64(v)?);
        }
        let grid = RadialGrid::from_nodes(nodes)?;
        let prof = Self::new(grid, values, interp.unwrap_or(Interpolation::Linear))?;
        Ok((prof, params))
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::Parse(format!("'{s}': {e}")))
}

/// Euclidean projection onto non-increasing sequences (pool adjacent violators).
pub fn project_non_increasing(values: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, w2) = blocks[blocks.len() - 1];
            let (m1, w1) = blocks[blocks.len() - 2];
            if m2 <= m1 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            let last = blocks.len() - 1;
            blocks[last] = ((m1 * w1 as f64 + m2 * w2 as f64) / w as f64, w);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, w)| std::iter::repeat_n(m, w))
        .collect()
}

/// Knee radius `e^{−n/(θ+1)}` of the Moser profile `u_n`.
pub fn moser_knee(n: u32, params: &WeightParams) -> f64 {
    (-(n as f64) / (params.theta() + 1.0)).exp()
}

/// Moser concentration profile `u_n`, exact on the sampled grid.
///
/// The knee and `r = 1` are inserted as nodes and the profile is log-linear,
/// so the logarithmic segment is represented without interpolation error.
pub fn make_moser(n: u32, params: &WeightParams, grid: &RadialGrid) -> Result<RadialProfile> {
    if n == 0 {
        return Err(Error::domain("Moser index must be >= 1"));
    }
    if grid.r_max() < 1.0 {
        return Err(Error::domain(format!(
            "Moser profiles need R_max >= 1, got {}",
            grid.r_max()
        )));
    }
    let knee = moser_knee(n, params);
    let below = grid.nodes().iter().filter(|&&r| r < knee).count();
    if below < MIN_NODES_BELOW_KNEE {
        let l = grid.r_max().ln() - grid.r_min().ln();
        let per_unit = grid.len() as f64 / l.max(1e-300);
        return Err(Error::Resolution {
            reason: format!(
                "Moser knee e^(-{n}/(theta+1)) = {knee:e} has {below} nodes below it; \
                 extend the grid below the knee (e.g. RadialGrid::for_moser) or add nodes"
            ),
            required: grid.len() + MIN_NODES_BELOW_KNEE - below
                + (per_unit * (grid.r_min() / knee).ln().max(0.0)).ceil() as usize,
            available: grid.len(),
        });
    }
    let g = grid.with_breakpoints(&[knee, 1.0]);
    let (p, theta) = (params.p(), params.theta());
    let nn = n as f64;
    let scale = params.omega_alpha().powf(-1.0 / p);
    let cap = scale * (nn / (theta + 1.0)).powf((p - 1.0) / p);
    let slope = scale * ((theta + 1.0) / nn).powf(1.0 / p);
    let mut values: Vec<f64> = g
        .nodes()
        .iter()
        .map(|&r| {
            if r <= knee {
                cap
            } else if r < 1.0 {
                (slope * (1.0 / r).ln()).min(cap)
            } else {
                0.0
            }
        })
        .collect();
    let last = values.len() - 1;
    values[last] = 0.0;
    RadialProfile::new(g, values, Interpolation::LogLinear)
}

/// Ishiwata vanishing family `v_t = ξ_t t^{1/p} u(t^{1/(θ+1)} r)` for a base with `‖u‖ = 1`.
pub fn make_ishiwata(t: f64, base: &RadialProfile, params: &WeightParams) -> Result<RadialProfile> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::domain(format!("Ishiwata parameter t must lie in (0,1), got {t}")));
    }
    let g = grad_norm_pow(base, params);
    let l = lq_norm_pow(base, params.p(), params.theta(), DEFAULT_PANEL_ORDER)?;
    if ((g + l).powf(1.0 / params.p()) - 1.0).abs() > 1e-8 {
        return Err(Error::Constraint(format!(
            "Ishiwata base must have full norm 1, got {}",
            (g + l).powf(1.0 / params.p())
        )));
    }
    let p = params.p();
    let xi = ishiwata_xi(t, l, p);
    rescale(base, xi * t.powf(1.0 / p), t.powf(1.0 / (params.theta() + 1.0)))
}

/// `ξ_t = (t + (1−t)‖u‖^p_{L^p_θ})^{−1/p}`.
pub fn ishiwata_xi(t: f64, lp_pow: f64, p: f64) -> f64 {
    (t + (1.0 - t) * lp_pow).powf(-1.0 / p)
}

/// `r ↦ ζ u(τ r)`, exact: the grid is dilated by `1/τ`.
pub fn rescale(u: &RadialProfile, zeta: f64, tau: f64) -> Result<RadialProfile> {
    if !(zeta > 0.0 && zeta.is_finite()) || !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::domain(format!(
            "rescale needs positive finite zeta and tau, got ({zeta}, {tau})"
        )));
    }
    let grid = if tau == 1.0 {
        u.grid.clone()
    } else {
        u.grid.dilate(tau)
    };
    let values = u.values.iter().map(|v| v * zeta).collect();
    RadialProfile::new(grid, values, u.interp)
}

/// Bi-normalization `v(r) = u(τr)/‖u′‖` with `τ = (‖u‖^p/‖u′‖^p)^{1/(θ+1)}`,
/// giving `‖v′‖_{L^p_α} = ‖v‖_{L^p_θ} = 1`.
pub fn normalize_subcritical(u: &RadialProfile, params: &WeightParams) -> Result<RadialProfile> {
    let g = grad_norm_pow(u, params);
    if u.is_zero() || !(g > 0.0) {
        return Err(Error::domain("cannot normalize the zero profile"));
    }
    let l = lq_norm_pow(u, params.p(), params.theta(), DEFAULT_PANEL_ORDER)?;
    let tau = (l / g).powf(1.0 / (params.theta() + 1.0));
    rescale(u, g.powf(-1.0 / params.p()), tau)
}

/// `w(r) = u(τr)/‖u′‖` with `τ = ((1−‖u′‖^p)/‖u′‖^p)^{1/(θ+1)}`, which moves a
/// profile with `‖u′‖ < 1` onto the gradient-unit sphere and sets
/// `‖w‖^p_{L^p_θ} = ‖u‖^p_{L^p_θ}/(1−‖u′‖^p)`.
pub fn to_critical_boundary(u: &RadialProfile, params: &WeightParams) -> Result<RadialProfile> {
    let g = grad_norm_pow(u, params);
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::domain(format!(
            "transform needs 0 < ‖u′‖^p < 1, got {g}"
        )));
    }
    let tau = ((1.0 - g) / g).powf(1.0 / (params.theta() + 1.0));
    rescale(u, g.powf(-1.0 / params.p()), tau)
}

/// Map from the gradient-unit sphere to the full-norm unit sphere at ratio `μ/σ`:
/// `u_t(r) = (μ/σ)^{(p−1)/p} v(t r)` where `v = u/‖u′‖` and
/// `t^{θ+1} = (μ/σ)^{p−1}‖v‖^p_{L^p_θ} / (1 − (μ/σ)^{p−1})`.
///
/// The output has `‖u_t′‖^p = (μ/σ)^{p−1}` and `‖u_t‖^p_{L^p_θ} = 1 − (μ/σ)^{p−1}`,
/// and `∫φ_p(σ|u_t|^{p/(p−1)}) = ((1−ρ)/ρ) ∫φ_p(μ|v|^{p/(p−1)}) / ‖v‖^p_{L^p_θ}`.
pub fn critical_transform(
    u: &RadialProfile,
    mu: f64,
    sigma: f64,
    params: &WeightParams,
) -> Result<RadialProfile> {
    if !(mu > 0.0 && mu < sigma) {
        return Err(Error::domain(format!("need 0 < mu < sigma, got mu={mu}, sigma={sigma}")));
    }
    let g = grad_norm_pow(u, params);
    if u.is_zero() || !(g > 0.0) {
        return Err(Error::domain("cannot transform the zero profile"));
    }
    let p = params.p();
    let l = lq_norm_pow(u, p, params.theta(), DEFAULT_PANEL_ORDER)? / g;
    let rho = (mu / sigma).powf(p - 1.0);
    let tau = (rho * l / (1.0 - rho)).powf(1.0 / (params.theta() + 1.0));
    rescale(u, (rho / g).powf(1.0 / p), tau)
}

/// Seed family for the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFamilySpec {
    Moser { n: u32 },
    Ishiwata { t: f64, base: RadialProfile },
    Custom { base: RadialProfile },
}

impl TestFamilySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TestFamilySpec::Moser { n } if *n == 0 => {
                Err(Error::domain("Moser index must be >= 1"))
            }
            TestFamilySpec::Ishiwata { t, .. } if !(*t > 0.0 && *t < 1.0) => {
                Err(Error::domain(format!("Ishiwata t must be in (0,1), got {t}")))
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self, params: &WeightParams, r_max: f64) -> Result<RadialProfile> {
        self.validate()?;
        match self {
            TestFamilySpec::Moser { n } => {
                make_moser(*n, params, &RadialGrid::for_moser(*n, params, r_max)?)
            }
            TestFamilySpec::Ishiwata { t, base } => make_ishiwata(*t, base, params),
            TestFamilySpec::Custom { base } => Ok(base.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{norm_grad_lp_alpha, norm_lq_theta};
    use std::f64::consts::PI;

    fn p21() -> WeightParams {
        WeightParams::new(2.0, 1.0).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = RadialGrid::default_grid();
        assert_eq!(g.len(), 512);
        assert_eq!(g.r_min(), 1e-10);
        assert_eq!(g.r_max(), 10.0);
        assert!(RadialGrid::log_uniform(1e-3, 1.0, 8).is_err());
        assert!(RadialGrid::log_uniform(0.0, 1.0, 32).is_err());
        assert!(RadialGrid::from_nodes((1..=20).rev().map(|i| i as f64).collect()).is_err());
    }

    #[test]
    fn grid_locate() {
        let g = RadialGrid::log_uniform(0.01, 1.0, 16).unwrap();
        assert_eq!(g.locate(0.001), None);
        assert_eq!(g.locate(2.0), None);
        let i = g.locate(0.5).unwrap();
        assert!(g.nodes()[i] <= 0.5 && 0.5 < g.nodes()[i + 1]);
    }

    #[test]
    fn moser_cap_value() {
        let params = p21();
        let u = make_moser(1, &params, &RadialGrid::for_moser(1, &params, 10.0).unwrap()).unwrap();
        assert!((u.left_cap() - (4.0 * PI).powf(-0.5)).abs() < 1e-15);
        assert_eq!(u.value_at(1.0), 0.0);
        assert_eq!(u.value_at(5.0), 0.0);
    }

    #[test]
    fn moser_needs_resolution_below_knee() {
        let params = WeightParams::new(2.0, 0.0).unwrap();
        let err = make_moser(50, &params, &RadialGrid::default_grid()).unwrap_err();
        match err {
            Error::Resolution { required, available, .. } => assert!(required > available),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn moser_gradient_norm_is_one() {
        for (p, theta) in [(2.0, 1.0), (3.0, 2.0), (2.0, 0.0), (2.5, 0.5)] {
            let params = WeightParams::new(p, theta).unwrap();
            for n in [1, 7, 30] {
                let g = RadialGrid::for_moser(n, &params, 10.0).unwrap();
                let u = make_moser(n, &params, &g).unwrap();
                assert!((norm_grad_lp_alpha(&u, &params) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tent_norms() {
        let params = p21();
        let g = RadialGrid::log_uniform(1e-12, 10.0, 200).unwrap();
        let u = RadialProfile::tent(1.0, &g).unwrap();
        assert!((norm_grad_lp_alpha(&u, &params) - PI.sqrt()).abs() < 1e-12);
        // ‖1 − r‖²_{L²_1} = 2π ∫ (1−r)² r dr = π/6
        assert!((norm_lq_theta(&u, 2.0, 1.0).unwrap().powi(2) - PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_profiles() {
        let g = RadialGrid::log_uniform(0.01, 1.0, 16).unwrap();
        let mut v = vec![1.0; 16];
        assert!(RadialProfile::new(g.clone(), v.clone(), Interpolation::Linear).is_err());
        v[15] = 0.0;
        v[3] = 2.0;
        assert!(RadialProfile::new(g.clone(), v.clone(), Interpolation::Linear).is_err());
        v[3] = -1.0;
        assert!(RadialProfile::new(g.clone(), v, Interpolation::Linear).is_err());
        assert!(RadialProfile::new(g, vec![0.0; 3], Interpolation::Linear).is_err());
    }

    #[test]
    fn pava_projection() {
        assert_eq!(project_non_increasing(&[3.0, 1.0, 2.0, 0.0]), vec![3.0, 1.5, 1.5, 0.0]);
        assert_eq!(project_non_increasing(&[1.0, 2.0, 3.0]), vec![2.0, 2.0, 2.0]);
        let g = RadialGrid::log_uniform(0.01, 1.0, 16).unwrap();
        let raw: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64 - 1.0).collect();
        let u = RadialProfile::from_values_projected(g, &raw, Interpolation::Linear).unwrap();
        assert!(u.values().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rescale_identity_and_errors() {
        let params = p21();
        let g = RadialGrid::for_moser(3, &params, 10.0).unwrap();
        let u = make_moser(3, &params, &g).unwrap();
        assert_eq!(rescale(&u, 1.0, 1.0).unwrap(), u);
        assert!(rescale(&u, 0.0, 1.0).is_err());
        assert!(rescale(&u, 1.0, -2.0).is_err());
    }

    #[test]
    fn rescale_examples() {
        let params = p21();
        let g = RadialGrid::log_uniform(1e-12, 10.0, 300).unwrap();
        let u = RadialProfile::tent(1.0, &g).unwrap();
        let gu = grad_norm_pow(&u, &params);
        let lu = lq_norm_pow(&u, 2.0, 1.0, 8).unwrap();
        let a = rescale(&u, 2.0, 1.0).unwrap();
        assert!((grad_norm_pow(&a, &params) / gu - 4.0).abs() < 1e-12);
        let b = rescale(&u, 1.0, 2.0).unwrap();
        assert!((lq_norm_pow(&b, 2.0, 1.0, 8).unwrap() / lu - 0.25).abs() < 1e-12);
    }

    #[test]
    fn to_critical_boundary_example() {
        // ‖u′‖^p = 1/2 and ‖u‖^p = 1/2 map to ‖w′‖ = 1, ‖w‖^p = 1
        let params = p21();
        let g = RadialGrid::log_uniform(1e-12, 10.0, 300).unwrap();
        let tent = RadialProfile::tent(1.0, &g).unwrap();
        let gt = grad_norm_pow(&tent, &params);
        let lt = lq_norm_pow(&tent, 2.0, 1.0, 8).unwrap();
        // ζ² gt τ⁰ = 1/2 and ζ² lt τ^{-2} = 1/2
        let zeta = (0.5 / gt).sqrt();
        let tau = (zeta * zeta * lt / 0.5).sqrt();
        let u = rescale(&tent, zeta, tau).unwrap();
        assert!((grad_norm_pow(&u, &params) - 0.5).abs() < 1e-12);
        assert!((lq_norm_pow(&u, 2.0, 1.0, 8).unwrap() - 0.5).abs() < 1e-12);
        let w = to_critical_boundary(&u, &params).unwrap();
        assert!((grad_norm_pow(&w, &params) - 1.0).abs() < 1e-12);
        assert!((lq_norm_pow(&w, 2.0, 1.0, 8).unwrap() - 1.0).abs() < 1e-12);
        let big = rescale(&tent, 1.0, 1.0).unwrap();
        assert!(to_critical_boundary(&big, &params).is_err());
    }

    #[test]
    fn ishiwata_domain() {
        let params = p21();
        let g = RadialGrid::log_uniform(1e-12, 10.0, 100).unwrap();
        let tent = RadialProfile::tent(1.0, &g).unwrap();
        assert!(make_ishiwata(0.0, &tent, &params).is_err());
        assert!(make_ishiwata(1.0, &tent, &params).is_err());
        // tent has full norm != 1
        assert!(matches!(
            make_ishiwata(0.5, &tent, &params),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let params = WeightParams::new(2.5, 0.75).unwrap();
        let g = RadialGrid::for_moser(9, &params, 10.0).unwrap();
        let u = make_moser(9, &params, &g).unwrap();
        let text = u.to_text(&params);
        let (back, bp) = RadialProfile::from_text(&text).unwrap();
        assert_eq!(back.values(), u.values());
        assert_eq!(back.grid().nodes(), u.grid().nodes());
        assert_eq!(back.interpolation(), u.interpolation());
        assert_eq!(bp.p(), params.p());
        assert_eq!(bp.theta(), params.theta());
        assert!(RadialProfile::from_text("garbage").is_err());
    }
}
