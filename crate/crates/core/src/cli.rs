//! Command-line front end.
//!
//! Parameters `μ`, `σ` are given as fractions of `μ*` by default
//! (`--mu-frac`, `--sigma-frac`) with absolute overrides. Output goes to
//! `--out` or stdout, as CSV or as structured text (JSON). Exit codes:
//! 0 success, 1 failed verification checks, 2 usage error, 3 numeric or
//! regime error.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::measure::{grad_norm_pow, lq_norm_pow, WeightParams, DEFAULT_PANEL_ORDER};
use crate::optimize::{
    maximize_tmc, maximize_tmsc, sigma_star_probe, sweep_subcritical, tmc_via_identity,
    OptimizerConfig, SupremumEstimate, DEFAULT_IDENTITY_FRACS,
};
use crate::profiles::{make_moser, RadialGrid};
use crate::verify::{manifest, moser_lp_closed_form, run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const DEFAULT_SWEEP: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95];
const DEFAULT_PROBE: [f64; 7] = [0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99];

#[derive(Debug, Parser)]
#[command(name = "tmfrac", version, about = "Lower bounds for weighted Trudinger-Moser suprema")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    StructuredText,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// Weight exponent of the gradient term; only alpha = p - 1 is supported.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "grid-nodes", default_value_t = 512)]
    pub grid_nodes: usize,
    #[arg(long = "r-max", default_value_t = 10.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long = "max-iters", default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower bounds for the subcritical supremum TMSC(mu).
    Tmsc {
        #[command(flatten)]
        common: Common,
        #[arg(long = "mu-frac", value_delimiter = ',', num_args = 1..)]
        mu_frac: Vec<f64>,
        #[arg(long = "mu-abs", value_delimiter = ',', num_args = 1..)]
        mu_abs: Vec<f64>,
        /// Write the maximizer for the first mu as a profile file.
        #[arg(long = "emit-profile")]
        emit_profile: Option<PathBuf>,
    },
    /// Lower bounds for the critical supremum TMC(sigma).
    Tmc {
        #[command(flatten)]
        common: Common,
        #[arg(long = "sigma-frac", value_delimiter = ',', num_args = 1..)]
        sigma_frac: Vec<f64>,
        #[arg(long = "sigma-abs", value_delimiter = ',', num_args = 1..)]
        sigma_abs: Vec<f64>,
        #[arg(long = "emit-profile")]
        emit_profile: Option<PathBuf>,
    },
    /// TMC(sigma) from TMSC maximizers through the identity transform.
    Identity {
        #[command(flatten)]
        common: Common,
        #[arg(long = "sigma-frac")]
        sigma_frac: Option<f64>,
        #[arg(long = "sigma-abs")]
        sigma_abs: Option<f64>,
        /// mu values as fractions of sigma.
        #[arg(long = "mu-grid", value_delimiter = ',', num_args = 1..)]
        mu_grid: Vec<f64>,
    },
    /// TMSC along fractions of mu* with the normalized product.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long = "mu-frac", value_delimiter = ',', num_args = 1..)]
        mu_frac: Vec<f64>,
    },
    /// Norms of the Moser sequence u_1..u_n.
    Moser {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        n: u32,
        /// Write u_n as a profile file.
        #[arg(long = "emit-profile")]
        emit_profile: Option<PathBuf>,
    },
    /// Gap over sigma^(p-1)/(p-1)! and nu(sigma) along a sigma grid.
    ProbeSigmaStar {
        #[command(flatten)]
        common: Common,
        /// sigma values as fractions of mu*.
        #[arg(long = "sigma-grid", value_delimiter = ',', num_args = 1..)]
        sigma_grid: Vec<f64>,
    },
    /// Property checks with a manifest.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let hint = match &e {
            Error::Regime(_) => " (hint: use p with integer p-1, or omit --alpha so alpha = p-1)",
            Error::Resolution { .. } => " (hint: raise --grid-nodes or --r-max)",
            Error::Parse(_) => "",
            _ => "",
        };
        match e {
            Error::Parse(m) => CliError::Usage(m),
            other => CliError::Numeric(format!("{other}{hint}")),
        }
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            if let Some(note) = &outcome.note {
                eprintln!("{note}");
            }
            if let Err(e) = emit(&cli, &outcome.body) {
                eprintln!("error: {e}");
                return EXIT_NUMERIC;
            }
            if outcome.checks_failed {
                EXIT_CHECKS_FAILED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn common(cli: &Cli) -> &Common {
    match &cli.command {
        Command::Tmsc { common, .. }
        | Command::Tmc { common, .. }
        | Command::Identity { common, .. }
        | Command::Sweep { common, .. }
        | Command::Moser { common, .. }
        | Command::ProbeSigmaStar { common, .. }
        | Command::Verify { common, .. } => common,
    }
}

fn emit(cli: &Cli, body: &str) -> std::io::Result<()> {
    match &common(cli).out {
        Some(path) => std::fs::write(path, body),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(body.as_bytes())
        }
    }
}

/// Result of a command before it is written out.
pub struct Outcome {
    pub body: String,
    /// Extra human-readable lines for stderr.
    pub note: Option<String>,
    pub checks_failed: bool,
}

impl Outcome {
    fn body(body: String) -> Self {
        Self {
            body,
            note: None,
            checks_failed: false,
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn params_of(c: &Common) -> Result<WeightParams, CliError> {
    let mut bad = Vec::new();
    if !(c.p >= 2.0 && c.p.is_finite()) {
        bad.push(format!("--p must be a finite number >= 2, got {}", c.p));
    }
    if !(c.theta >= 0.0 && c.theta.is_finite()) {
        bad.push(format!("--theta must be a finite number >= 0, got {}", c.theta));
    }
    if c.grid_nodes < crate::profiles::MIN_GRID_NODES {
        bad.push(format!("--grid-nodes must be >= {}", crate::profiles::MIN_GRID_NODES));
    }
    if !(c.r_max >= 1.0 && c.r_max.is_finite()) {
        bad.push(format!("--r-max must be finite and >= 1, got {}", c.r_max));
    }
    if c.restarts < 1 {
        bad.push("--restarts must be >= 1".into());
    }
    if c.max_iters < 1 {
        bad.push("--max-iters must be >= 1".into());
    }
    if !bad.is_empty() {
        return Err(CliError::Usage(bad.join("; ")));
    }
    let alpha = c.alpha.unwrap_or(c.p - 1.0);
    Ok(WeightParams::with_alpha(c.p, alpha, c.theta)?)
}

fn config_of(c: &Common) -> OptimizerConfig {
    OptimizerConfig {
        max_iters: c.max_iters,
        restarts: c.restarts,
        grid_nodes: c.grid_nodes,
        r_max: c.r_max,
        rng_seed: c.seed,
        ..OptimizerConfig::default()
    }
}

/// `(fraction, absolute)` pairs from either flag, validated against `(0, upper)`
/// (or `(0, upper]` when `closed`).
fn resolve(
    fracs: &[f64],
    abs: &[f64],
    mu_star: f64,
    name: &str,
    closed: bool,
    required: bool,
) -> Result<Vec<(f64, f64)>, CliError> {
    if !fracs.is_empty() && !abs.is_empty() {
        return Err(CliError::Usage(format!("give either --{name}-frac or --{name}-abs, not both")));
    }
    let vals: Vec<(f64, f64)> = if abs.is_empty() {
        fracs.iter().map(|&f| (f, f * mu_star)).collect()
    } else {
        abs.iter().map(|&a| (a / mu_star, a)).collect()
    };
    if vals.is_empty() && required {
        return Err(CliError::Usage(format!("missing --{name}-frac or --{name}-abs")));
    }
    let bad: Vec<String> = vals
        .iter()
        .filter(|(f, _)| !(*f > 0.0 && (*f < 1.0 || (closed && *f == 1.0))))
        .map(|(f, a)| format!("{name} = {a} ({f} mu*)"))
        .collect();
    if !bad.is_empty() {
        let range = if closed { "(0, mu*]" } else { "(0, mu*)" };
        return Err(CliError::Usage(format!(
            "{} outside {range} with mu* = {mu_star} (hint: pass fractions of mu* via --{name}-frac)",
            bad.join(", ")
        )));
    }
    Ok(vals)
}

fn write_profile(path: &PathBuf, est: &SupremumEstimate, params: &WeightParams) -> Result<(), CliError> {
    std::fs::write(path, est.argmax_profile.to_text(params)).map_err(|e| CliError::Numeric(e.to_string()))
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Runs a parsed command and renders its output.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let c = common(cli);
    let params = params_of(c)?;
    let cfg = config_of(c);
    let ms = params.mu_star();
    match &cli.command {
        Command::Tmsc {
            mu_frac,
            mu_abs,
            emit_profile,
            ..
        } => {
            let mut vals = resolve(mu_frac, mu_abs, ms, "mu", false, true)?;
            vals.sort_by(|a, b| a.1.total_cmp(&b.1));
            let ests = run_each(&vals, |mu| maximize_tmsc(mu, &params, &cfg))?;
            if let Some(path) = emit_profile {
                write_profile(path, &ests[0], &params)?;
            }
            Ok(Outcome::body(match c.format {
                Format::StructuredText => json(&ests)?,
                Format::Csv => estimate_csv("mu_frac,mu", &vals, &ests),
            }))
        }
        Command::Tmc {
            sigma_frac,
            sigma_abs,
            emit_profile,
            ..
        } => {
            let mut vals = resolve(sigma_frac, sigma_abs, ms, "sigma", true, true)?;
            vals.sort_by(|a, b| a.1.total_cmp(&b.1));
            let ests = run_each(&vals, |s| maximize_tmc(s, &params, &cfg))?;
            if let Some(path) = emit_profile {
                write_profile(path, &ests[0], &params)?;
            }
            Ok(Outcome::body(match c.format {
                Format::StructuredText => json(&ests)?,
                Format::Csv => estimate_csv("sigma_frac,sigma", &vals, &ests),
            }))
        }
        Command::Identity {
            sigma_frac,
            sigma_abs,
            mu_grid,
            ..
        } => {
            let f: Vec<f64> = sigma_frac.iter().copied().collect();
            let a: Vec<f64> = sigma_abs.iter().copied().collect();
            let (_, sigma) = resolve(&f, &a, ms, "sigma", true, true)?[0];
            let fracs = if mu_grid.is_empty() {
                DEFAULT_IDENTITY_FRACS.to_vec()
            } else {
                mu_grid.clone()
            };
            if let Some(bad) = fracs.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
                return Err(CliError::Usage(format!(
                    "--mu-grid entries are fractions of sigma in (0,1), got {bad}"
                )));
            }
            let grid: Vec<f64> = fracs.iter().map(|x| x * sigma).collect();
            let rep = tmc_via_identity(sigma, &params, &grid, &cfg)?;
            Ok(Outcome::body(match c.format {
                Format::StructuredText => json(&rep)?,
                Format::Csv => {
                    let mut s = String::from(
                        "mu_over_sigma,mu,ratio,tmsc_estimate,predicted,critical_value,grad_norm_p,lp_norm_p\n",
                    );
                    for r in &rep.rows {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{},{},{},{}",
                            num(r.mu_over_sigma),
                            num(r.mu),
                            num(r.ratio),
                            num(r.tmsc_estimate),
                            num(r.predicted),
                            num(r.critical_value),
                            num(r.grad_norm_p),
                            num(r.lp_norm_p)
                        );
                    }
                    s
                }
            }))
        }
        Command::Sweep { mu_frac, .. } => {
            let fracs = if mu_frac.is_empty() {
                DEFAULT_SWEEP.to_vec()
            } else {
                mu_frac.clone()
            };
            resolve(&fracs, &[], ms, "mu", false, false)?;
            let rows = sweep_subcritical(&fracs, &params, &cfg)?;
            Ok(Outcome::body(match c.format {
                Format::StructuredText => json(&rows)?,
                Format::Csv => {
                    let mut s = String::from("mu_frac,mu,estimate,normalized_product,converged\n");
                    for r in &rows {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{}",
                            num(r.mu_frac),
                            num(r.mu),
                            num(r.estimate),
                            num(r.normalized_product),
                            r.converged
                        );
                    }
                    s
                }
            }))
        }
        Command::Moser { n, emit_profile, .. } => {
            if *n < 1 {
                return Err(CliError::Usage("--n must be >= 1".into()));
            }
            let mut rows = Vec::new();
            for k in 1..=*n {
                let u = make_moser(k, &params, &RadialGrid::for_moser(k, &params, c.r_max)?)?;
                let g = grad_norm_pow(&u, &params);
                let l = lq_norm_pow(&u, params.p(), params.theta(), DEFAULT_PANEL_ORDER)?;
                rows.push((k, g, l, moser_lp_closed_form(k, &params)));
                if k == *n {
                    if let Some(path) = emit_profile {
                        std::fs::write(path, u.to_text(&params)).map_err(|e| CliError::Numeric(e.to_string()))?;
                    }
                }
            }
            Ok(Outcome::body(match c.format {
                Format::StructuredText => {
                    let v: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|&(k, g, l, cf)| {
                            serde_json::json!({
                                "n": k, "grad_norm_p": g, "lp_norm_p": l,
                                "n_times_lp_norm_p": k as f64 * l, "closed_form": cf
                            })
                        })
                        .collect();
                    json(&v)?
                }
                Format::Csv => {
                    let mut s = String::from("n,grad_norm_p,lp_norm_p,n_times_lp_norm_p,closed_form\n");
                    for &(k, g, l, cf) in &rows {
                        let _ = writeln!(s, "{k},{},{},{},{}", num(g), num(l), num(k as f64 * l), num(cf));
                    }
                    s
                }
            }))
        }
        Command::ProbeSigmaStar { sigma_grid, .. } => {
            let fracs = if sigma_grid.is_empty() {
                DEFAULT_PROBE.to_vec()
            } else {
                sigma_grid.clone()
            };
            resolve(&fracs, &[], ms, "sigma", false, false)?;
            let grid: Vec<f64> = fracs.iter().map(|f| f * ms).collect();
            let rep = sigma_star_probe(&params, &grid, &cfg)?;
            let fmt = |x: Option<f64>| x.map_or("none".to_string(), num);
            let note = format!(
                "sigma_* bracket: ({}, {}]; nu non-decreasing: {}; {}",
                fmt(rep.sigma_star_lower),
                fmt(rep.sigma_star_upper),
                rep.nu_monotone,
                rep.caveat
            );
            let body = match c.format {
                Format::StructuredText => json(&rep)?,
                Format::Csv => {
                    let mut s = String::from("sigma_frac,sigma,tmc_estimate,gap,nu\n");
                    for r in &rep.rows {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{}",
                            num(r.sigma_frac),
                            num(r.sigma),
                            num(r.tmc_estimate),
                            num(r.gap),
                            num(r.nu)
                        );
                    }
                    s
                }
            };
            Ok(Outcome {
                body,
                note: Some(note),
                checks_failed: false,
            })
        }
        Command::Verify { suite, .. } => {
            let suite: Suite = suite.parse().map_err(CliError::from)?;
            let results = run_suite(suite, c.seed, &cfg)?;
            let failed = results.iter().any(|r| !r.passed);
            let body = match c.format {
                Format::StructuredText => json(&results)?,
                Format::Csv => manifest(&results),
            };
            Ok(Outcome {
                body,
                note: None,
                checks_failed: failed,
            })
        }
    }
}

fn run_each<F>(vals: &[(f64, f64)], f: F) -> Result<Vec<SupremumEstimate>, CliError>
where
    F: Fn(f64) -> crate::error::Result<SupremumEstimate> + Sync,
{
    use rayon::prelude::*;
    let out: crate::error::Result<Vec<_>> = vals.par_iter().map(|&(_, x)| f(x)).collect();
    Ok(out?)
}

fn estimate_csv(lead: &str, vals: &[(f64, f64)], ests: &[SupremumEstimate]) -> String {
    let mut s = format!("{lead},estimate,certified_estimate,converged,iterations,constraint_residual,exploratory\n");
    for ((f, x), e) in vals.iter().zip(ests) {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            num(*f),
            num(*x),
            num(e.value),
            num(e.certified_value),
            e.converged,
            e.iterations_used,
            num(e.constraint_residual),
            e.exploratory
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_defaults() {
        let cli = Cli::try_parse_from(["tmfrac", "tmsc", "--p", "2", "--theta", "1", "--mu-frac", "0.5,0.7"]).unwrap();
        match cli.command {
            Command::Tmsc { common, mu_frac, .. } => {
                assert_eq!(mu_frac, vec![0.5, 0.7]);
                assert_eq!(common.grid_nodes, 512);
                assert_eq!(common.r_max, 10.0);
                assert_eq!(common.restarts, 4);
                assert_eq!(common.max_iters, 2000);
            }
            _ => panic!("wrong command"),
        }
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["tmfrac", "tmsc", "--bogus", "1"]), EXIT_USAGE);
    }

    #[test]
    fn regime_violation_is_numeric_error() {
        assert_eq!(run(["tmfrac", "moser", "--p", "2", "--alpha", "2", "--n", "2"]), EXIT_NUMERIC);
    }

    #[test]
    fn out_of_range_mu_is_usage_error() {
        assert_eq!(run(["tmfrac", "tmsc", "--mu-frac", "1.5"]), EXIT_USAGE);
        assert_eq!(run(["tmfrac", "tmsc"]), EXIT_USAGE);
    }

    #[test]
    fn aggregated_usage_message() {
        let cli = Cli::try_parse_from(["tmfrac", "moser", "--p", "1", "--theta=-1"]).unwrap();
        let Err(CliError::Usage(msg)) = execute(&cli) else {
            panic!("expected usage error");
        };
        assert!(msg.contains("--p") && msg.contains("--theta"));
    }

    #[test]
    fn moser_csv_has_17_digit_cells() {
        let cli = Cli::try_parse_from(["tmfrac", "moser", "--n", "3"]).unwrap();
        let out = execute(&cli).unwrap().body;
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("n,grad_norm_p,lp_norm_p,n_times_lp_norm_p,closed_form"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 5);
        let mantissa = row[1].split('e').next().unwrap();
        assert_eq!(mantissa.replace(['.', '-'], "").len(), 17);
    }
}
