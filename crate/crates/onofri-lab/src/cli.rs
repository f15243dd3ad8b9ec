//! Command drivers shared by the `onofri-lab` binary and the runnable
//! examples: quadrature exactness checks, bubble asymptotics reports,
//! configuration searches, branch continuation and constrained minimization,
//! with CSV/JSON emission suitable for plotting and regression.
//!
//! Floating values are printed with 17 significant digits so that identical
//! seeded invocations produce byte-identical outputs.

use crate::bubble::{verify_asymptotics, BubbleConfig, BubbleSpec, DEFAULT_DELTA};
use crate::concentration::min_lambda_over_configs_with;
use crate::error::{Error, Result};
use crate::field::{exp_mass, mean_value, onofri_gap};
use crate::meanfield::{continue_branch_with, ContinuationOptions, ONE_THIRD};
use crate::minimizer::{minimize, random_profile, ConstraintSpec, MinimizeOptions, MinimizeRecord};
use crate::sphere::{build_gauss_grid, integrate};
use crate::spectral::{random_band_limited, synthesize};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::sync::Arc;

/// 17 significant digits, reproducible across runs.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rendered output of one command plus its pass/fail status.
#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub output: String,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown output format '{other}' (expected csv or json)"
            ))),
        }
    }
}

// ---------------------------------------------------------------------------
// quad-check

#[derive(Debug, Clone, Default, Deserialize)]
pub struct QuadCheckParams {
    pub grid_l: Option<usize>,
}

fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// Closed-form integral of x1^a x2^b x3^c over the unit sphere.
fn monomial_integral(a: u32, b: u32, c: u32) -> f64 {
    if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
        return 0.0;
    }
    4.0 * std::f64::consts::PI * double_factorial(a as i64 - 1) * double_factorial(b as i64 - 1)
        / double_factorial((a + b + c) as i64 + 1)
        * double_factorial(c as i64 - 1)
}

/// Integrates every monomial of degree <= 4 against the closed forms at
/// tolerance 1e-12.
pub fn cmd_quad_check(params: &QuadCheckParams) -> Result<CommandOutcome> {
    let l = params.grid_l.unwrap_or(32);
    if l == 0 {
        return Err(Error::InvalidArgument("grid latitude count must be >= 2".into()));
    }
    let grid = build_gauss_grid(l)?;
    let mut out = String::from("monomial,measured,expected,abs_error,pass\n");
    let mut all_pass = true;
    for degree in 0..=4u32 {
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                let c = degree - a - b;
                let measured = integrate(&grid, |p| {
                    p.x1.powi(a as i32) * p.x2.powi(b as i32) * p.x3.powi(c as i32)
                })?;
                let expected = monomial_integral(a, b, c);
                let err = (measured - expected).abs();
                let pass = err <= 1e-12;
                all_pass &= pass;
                out.push_str(&format!(
                    "x1^{a}*x2^{b}*x3^{c},{},{},{},{}\n",
                    fmt17(measured),
                    fmt17(expected),
                    fmt17(err),
                    pass
                ));
            }
        }
    }
    Ok(CommandOutcome {
        output: out,
        ok: all_pass,
    })
}

// ---------------------------------------------------------------------------
// bubble-report

#[derive(Debug, Clone, Default, Deserialize)]
pub struct BubbleReportParams {
    /// comma list of pair|triangle|tetrahedron|octahedron
    pub configs: Option<Vec<String>>,
    pub epsilons: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub grid_l: Option<usize>,
}

pub const DEFAULT_EPSILON_LADDER: [f64; 3] = [1e-2, 3e-3, 1e-3];

/// Verifies the bubble asymptotics over configurations x epsilon ladder;
/// rows with invalid parameters carry an error status instead of values.
pub fn cmd_bubble_report(params: &BubbleReportParams) -> Result<CommandOutcome> {
    let configs: Vec<BubbleConfig> = match &params.configs {
        None => BubbleConfig::all().to_vec(),
        Some(names) => names
            .iter()
            .map(|s| BubbleConfig::parse(s))
            .collect::<Result<_>>()?,
    };
    let ladder = params
        .epsilons
        .clone()
        .unwrap_or_else(|| DEFAULT_EPSILON_LADDER.to_vec());
    let delta = params.delta.unwrap_or(DEFAULT_DELTA);
    let grid = Arc::new(build_gauss_grid(params.grid_l.unwrap_or(64))?);
    let mut out =
        String::from("config,epsilon,mass_ratio,energy_ratio,lambda_norm_sq,kw_defect,mean,status\n");
    let mut ok = true;
    for config in &configs {
        for eps in &ladder {
            match BubbleSpec::named(*config, *eps, delta)
                .and_then(|spec| verify_asymptotics(&spec, grid.clone()))
            {
                Ok(report) => {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},ok\n",
                        config.name(),
                        fmt17(*eps),
                        fmt17(report.mass_ratio),
                        fmt17(report.energy_ratio),
                        fmt17(report.lambda_norm_sq),
                        fmt17(report.kw_defect),
                        fmt17(report.mean),
                    ));
                }
                Err(e) => {
                    ok = false;
                    out.push_str(&format!(
                        "{},{},,,,,,error: {}\n",
                        config.name(),
                        fmt17(*eps),
                        e
                    ));
                }
            }
        }
    }
    Ok(CommandOutcome { output: out, ok })
}

// ---------------------------------------------------------------------------
// config-search

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ConfigSearchParams {
    pub n: Option<Vec<usize>>,
    pub even: Option<bool>,
    pub starts: Option<usize>,
    pub seed: Option<u64>,
}

/// Runs the Lambda-threshold search for each requested atom count and emits
/// JSON records.
pub fn cmd_config_search(params: &ConfigSearchParams) -> Result<CommandOutcome> {
    let ns = params.n.clone().unwrap_or_else(|| vec![2, 3, 4]);
    let even = params.even.unwrap_or(false);
    let starts = params.starts.unwrap_or(200);
    let seed = params.seed.unwrap_or(0);
    let mut records = Vec::new();
    for n in ns {
        let outcome = min_lambda_over_configs_with(n, even, starts, seed)?;
        records.push(outcome.to_record(n, even));
    }
    Ok(CommandOutcome {
        output: serde_json::to_string_pretty(&records)? + "\n",
        ok: true,
    })
}

// ---------------------------------------------------------------------------
// branch

#[derive(Debug, Clone, Default, Deserialize)]
pub struct BranchParams {
    pub a_start: Option<f64>,
    pub a_end: Option<f64>,
    pub step: Option<f64>,
    pub switch_at_third: Option<bool>,
    pub l_max: Option<usize>,
}

/// Continues a solution branch and emits one CSV row per accepted point.
pub fn cmd_branch(params: &BranchParams) -> Result<CommandOutcome> {
    let a_start = params
        .a_start
        .ok_or_else(|| Error::InvalidArgument("branch needs --a-start".into()))?;
    let a_end = params
        .a_end
        .ok_or_else(|| Error::InvalidArgument("branch needs --a-end".into()))?;
    let step = params.step.unwrap_or(5e-3);
    let switch = params.switch_at_third.unwrap_or(false);
    let mut opts = ContinuationOptions::default();
    if let Some(l) = params.l_max {
        opts.l_max = l;
    }
    let branch = continue_branch_with(a_start, a_end, step, switch, &opts)?;
    for w in &branch.warnings {
        eprintln!("warning: {w}");
    }
    let mut out = String::from(
        "a,sup_norm,mean,beta,lambda_norm_sq,beta_ratio,profile_corr,uhat_l2,mass_defect,kw3,newton_iters\n",
    );
    for p in &branch.points {
        let d = &p.diagnostics;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt17(p.a),
            fmt17(d.sup_norm),
            fmt17(d.mean),
            fmt17(d.beta),
            fmt17(d.lambda_norm_sq),
            fmt17(d.beta_ratio),
            fmt17(d.profile_corr),
            fmt17(d.uhat_l2),
            fmt17(d.mass_defect),
            fmt17(d.kw3),
            p.newton_iters,
        ));
    }
    if let Some(f) = &branch.failure {
        out.push_str(&format!("# partial branch: {f}\n"));
    }
    Ok(CommandOutcome {
        output: out,
        ok: branch.failure.is_none(),
    })
}

// ---------------------------------------------------------------------------
// minimize

#[derive(Debug, Clone, Default, Deserialize)]
pub struct MinimizeParams {
    pub a: Option<f64>,
    pub c0: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub penalty_weight: Option<f64>,
    pub l_max: Option<usize>,
    pub init_sup: Option<f64>,
}

/// Seeded constrained minimization runs, one JSON record each.
pub fn cmd_minimize(params: &MinimizeParams) -> Result<CommandOutcome> {
    let a = params.a.unwrap_or(0.49);
    let c0 = params.c0.unwrap_or(0.5);
    let spec = match params.penalty_weight {
        Some(w) => ConstraintSpec::penalty(c0, w)?,
        None => ConstraintSpec::backtrack(c0)?,
    };
    if !(ONE_THIRD < a && a < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "parameter a = {a} outside (1/3, 1)"
        )));
    }
    let seeds = params
        .seeds
        .clone()
        .unwrap_or_else(|| (0..10).collect::<Vec<u64>>());
    let basis = crate::meanfield::LegendreBasis::new(params.l_max.unwrap_or(48))?;
    let init_sup = params.init_sup.unwrap_or(0.3);
    let mut records: Vec<MinimizeRecord> = Vec::new();
    let mut ok = true;
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = random_profile(basis.clone(), 10, init_sup, &mut rng)?;
        let result = minimize(a, &spec, &init, &MinimizeOptions::default())?;
        ok &= result.feasible_moments && result.feasible_lambda;
        records.push(result.to_record(a, c0));
    }
    Ok(CommandOutcome {
        output: serde_json::to_string_pretty(&records)? + "\n",
        ok,
    })
}

// ---------------------------------------------------------------------------
// mto-sample

#[derive(Debug, Clone, Default, Deserialize)]
pub struct MtoSampleParams {
    pub count: Option<usize>,
    pub band_l: Option<usize>,
    pub amplitude: Option<f64>,
    pub seed: Option<u64>,
    pub grid_l: Option<usize>,
}

/// Samples random band-limited fields and checks the Onofri gap and the
/// Jensen slack on every one; any violation fails the run.
pub fn cmd_mto_sample(params: &MtoSampleParams) -> Result<CommandOutcome> {
    let count = params.count.unwrap_or(100);
    let band_l = params.band_l.unwrap_or(8);
    let amplitude = params.amplitude.unwrap_or(0.8);
    let seed = params.seed.unwrap_or(0);
    let grid_l = params.grid_l.unwrap_or(2 * band_l + 8);
    let grid = Arc::new(build_gauss_grid(grid_l)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("index,onofri_gap,jensen_slack,pass\n");
    let mut ok = true;
    for i in 0..count {
        let e = random_band_limited(band_l, amplitude, &mut rng);
        let u = synthesize(&e, grid.clone())?;
        let gap = onofri_gap(&u)?;
        let slack = exp_mass(&u)?.ln() - 2.0 * mean_value(&u);
        let pass = gap >= -1e-10 && slack >= -1e-12;
        ok &= pass;
        out.push_str(&format!(
            "{i},{},{},{pass}\n",
            fmt17(gap),
            fmt17(slack)
        ));
    }
    Ok(CommandOutcome { output: out, ok })
}

// ---------------------------------------------------------------------------
// batch config files

/// One entry of a JSON batch file: a command name plus its parameters.
/// Command-line flags override file values when both are given.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    QuadCheck(QuadCheckParams),
    BubbleReport(BubbleReportParams),
    ConfigSearch(ConfigSearchParams),
    Branch(BranchParams),
    Minimize(MinimizeParams),
    MtoSample(MtoSampleParams),
}

fn take<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

impl QuadCheckParams {
    /// Flag values win over file values.
    pub fn overriding(&self, file: &QuadCheckParams) -> QuadCheckParams {
        QuadCheckParams {
            grid_l: take(&self.grid_l, &file.grid_l),
        }
    }
}

impl BubbleReportParams {
    pub fn overriding(&self, file: &BubbleReportParams) -> BubbleReportParams {
        BubbleReportParams {
            configs: take(&self.configs, &file.configs),
            epsilons: take(&self.epsilons, &file.epsilons),
            delta: take(&self.delta, &file.delta),
            grid_l: take(&self.grid_l, &file.grid_l),
        }
    }
}

impl ConfigSearchParams {
    pub fn overriding(&self, file: &ConfigSearchParams) -> ConfigSearchParams {
        ConfigSearchParams {
            n: take(&self.n, &file.n),
            even: take(&self.even, &file.even),
            starts: take(&self.starts, &file.starts),
            seed: take(&self.seed, &file.seed),
        }
    }
}

impl BranchParams {
    pub fn overriding(&self, file: &BranchParams) -> BranchParams {
        BranchParams {
            a_start: take(&self.a_start, &file.a_start),
            a_end: take(&self.a_end, &file.a_end),
            step: take(&self.step, &file.step),
            switch_at_third: take(&self.switch_at_third, &file.switch_at_third),
            l_max: take(&self.l_max, &file.l_max),
        }
    }
}

impl MinimizeParams {
    pub fn overriding(&self, file: &MinimizeParams) -> MinimizeParams {
        MinimizeParams {
            a: take(&self.a, &file.a),
            c0: take(&self.c0, &file.c0),
            seeds: take(&self.seeds, &file.seeds),
            penalty_weight: take(&self.penalty_weight, &file.penalty_weight),
            l_max: take(&self.l_max, &file.l_max),
            init_sup: take(&self.init_sup, &file.init_sup),
        }
    }
}

impl MtoSampleParams {
    pub fn overriding(&self, file: &MtoSampleParams) -> MtoSampleParams {
        MtoSampleParams {
            count: take(&self.count, &file.count),
            band_l: take(&self.band_l, &file.band_l),
            amplitude: take(&self.amplitude, &file.amplitude),
            seed: take(&self.seed, &file.seed),
            grid_l: take(&self.grid_l, &file.grid_l),
        }
    }
}

/// Loads a single-entry config file and checks it names the expected command.
pub fn load_single(path: &std::path::Path, expected: &str) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let config: RunConfig = serde_json::from_str(&text)?;
    let name = match &config {
        RunConfig::QuadCheck(_) => "quad-check",
        RunConfig::BubbleReport(_) => "bubble-report",
        RunConfig::ConfigSearch(_) => "config-search",
        RunConfig::Branch(_) => "branch",
        RunConfig::Minimize(_) => "minimize",
        RunConfig::MtoSample(_) => "mto-sample",
    };
    if name != expected {
        return Err(Error::InvalidArgument(format!(
            "config file drives '{name}' but the invoked command is '{expected}'"
        )));
    }
    Ok(config)
}

impl RunConfig {
    pub fn execute(&self) -> Result<CommandOutcome> {
        match self {
            RunConfig::QuadCheck(p) => cmd_quad_check(p),
            RunConfig::BubbleReport(p) => cmd_bubble_report(p),
            RunConfig::ConfigSearch(p) => cmd_config_search(p),
            RunConfig::Branch(p) => cmd_branch(p),
            RunConfig::Minimize(p) => cmd_minimize(p),
            RunConfig::MtoSample(p) => cmd_mto_sample(p),
        }
    }
}

/// Loads a batch file holding either one entry or an array of entries.
pub fn load_batch(path: &std::path::Path) -> Result<Vec<RunConfig>> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(many) = serde_json::from_str::<Vec<RunConfig>>(&text) {
        return Ok(many);
    }
    Ok(vec![serde_json::from_str::<RunConfig>(&text)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_check_passes_at_l32_fails_at_l2() {
        let out = cmd_quad_check(&QuadCheckParams { grid_l: Some(32) }).unwrap();
        assert!(out.ok);
        let out = cmd_quad_check(&QuadCheckParams { grid_l: Some(2) }).unwrap();
        assert!(!out.ok, "degree-4 monomials must fail at L = 2");
        assert!(cmd_quad_check(&QuadCheckParams { grid_l: Some(0) }).is_err());
    }

    #[test]
    fn monomial_oracle_values() {
        let pi4 = 4.0 * std::f64::consts::PI;
        assert!((monomial_integral(0, 0, 0) - pi4).abs() < 1e-15);
        assert!((monomial_integral(0, 0, 2) - pi4 / 3.0).abs() < 1e-15);
        assert!((monomial_integral(0, 0, 4) - pi4 / 5.0).abs() < 1e-15);
        assert!((monomial_integral(2, 2, 0) - pi4 / 15.0).abs() < 1e-15);
        assert!(monomial_integral(1, 0, 2) == 0.0);
    }

    #[test]
    fn bubble_report_rows_and_errors() {
        let params = BubbleReportParams {
            configs: Some(vec!["triangle".into()]),
            epsilons: Some(vec![1e-2, 0.2]),
            delta: None,
            grid_l: Some(24),
        };
        let out = cmd_bubble_report(&params).unwrap();
        assert!(!out.ok); // epsilon = 0.2 > delta/10 yields an error row
        let lines: Vec<&str> = out.output.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with("ok"));
        assert!(lines[2].contains("error:"));
    }

    #[test]
    fn mto_sample_small_run() {
        let params = MtoSampleParams {
            count: Some(10),
            band_l: Some(6),
            amplitude: Some(0.6),
            seed: Some(1),
            grid_l: Some(20),
        };
        let out = cmd_mto_sample(&params).unwrap();
        assert!(out.ok, "gap/Jensen violation:\n{}", out.output);
        // deterministic given the seed
        let again = cmd_mto_sample(&params).unwrap();
        assert_eq!(out.output, again.output);
    }

    #[test]
    fn batch_round_trip() {
        let json = r#"[{"command": "quad-check", "grid_l": 8}]"#;
        let path = std::env::temp_dir().join("onofri_lab_batch_test.json");
        std::fs::write(&path, json).unwrap();
        let batch = load_batch(&path).unwrap();
        assert_eq!(batch.len(), 1);
        assert!(batch[0].execute().unwrap().ok);
        std::fs::remove_file(&path).ok();
    }
}
