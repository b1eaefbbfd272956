//! Experiment harness: single solves, the noise × regularizer × seed table
//! with per-cell medians, and nearness-distance curves.
//!
//! Everything here is a deterministic function of the configuration and
//! the seeds, and all CSV is produced with fixed formatting.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nearness::nearness_distance;
use crate::problems::{add_noise, relative_error, ProblemKind, TestProblem};
use crate::regops::{
    make_nullspace_basis, make_regularization_matrix, NullSpaceKind, RegularizerKind,
    RegularizerName,
};
use crate::solver::{rrgmres_solve, IterationLog, SolverConfig, StopReason};
use crate::transform::StandardFormContext;

pub const RUN_CSV_HEADER: &str =
    "problem,n,nu,regularizer,seed,iterations,matvecs,relative_error,stop_reason,matvecs_nullspace,matvecs_arnoldi,matvecs_back";
pub const DISTANCES_CSV_HEADER: &str = "n,dist_L20,dist_PL2P,dist_L2P";

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub n: usize,
    pub noise_levels: Vec<f64>,
    pub regularizers: Vec<RegularizerName>,
    pub eta: f64,
    pub delta: f64,
    pub seeds: Vec<u64>,
    pub max_iter: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Phillips,
            n: 200,
            noise_levels: vec![1e-2, 1e-3, 1e-4],
            regularizers: RegularizerName::ALL.to_vec(),
            eta: 1.01,
            delta: 1.0,
            seeds: (1..=10).collect(),
            max_iter: 100,
        }
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::InvalidConfig(format!("bad value `{s}` for `{key}`")))
        })
        .collect()
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value `{value}` for `{key}`")))
}

/// Seeds as a comma list, an inclusive range `a..b`, or a mix of both.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = parse_value("seeds", a)?;
            let b: u64 = parse_value("seeds", b.trim_start_matches('='))?;
            if a > b {
                return Err(Error::InvalidConfig(format!("empty seed range `{part}`")));
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(parse_value("seeds", part)?);
        }
    }
    Ok(seeds)
}

impl ExperimentConfig {
    /// Applies one `key=value` setting. Keys match the command-line flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "problem" => self.problem = value.trim().parse()?,
            "n" => self.n = parse_value(key, value)?,
            "noise" | "noise_levels" => self.noise_levels = parse_list(key, value)?,
            "reg" | "regularizers" => {
                self.regularizers = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(RegularizerName::from_str)
                    .collect::<Result<_>>()?
            }
            "eta" => self.eta = parse_value(key, value)?,
            "delta" => self.delta = parse_value(key, value)?,
            "seed" | "seeds" => self.seeds = parse_seeds(value)?,
            "max_iter" | "max-iter" => self.max_iter = parse_value(key, value)?,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown configuration key `{key}`"
                )))
            }
        }
        Ok(())
    }

    /// Parses flat `key=value` text; `#` starts a comment.
    ///
    /// Keys the harness does not know are reported with their line
    /// number. Keys listed in `passthrough` are skipped and returned so the
    /// caller can handle them (e.g. an output path).
    pub fn parse_text(text: &str, passthrough: &[&str]) -> Result<(Self, Vec<(String, String)>)> {
        let mut cfg = Self::default();
        let mut extra = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected key=value, got `{line}`"),
            })?;
            let key = key.trim();
            if passthrough.contains(&key) {
                extra.push((key.to_string(), value.trim().to_string()));
                continue;
            }
            cfg.set(key, value).map_err(|e| match e {
                Error::InvalidConfig(msg) => Error::Parse { line: idx + 1, msg },
                other => other,
            })?;
        }
        Ok((cfg, extra))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidConfig(format!(
                "n must be at least 4, got {}",
                self.n
            )));
        }
        if self.noise_levels.is_empty() {
            return Err(Error::InvalidConfig("no noise levels given".into()));
        }
        if let Some(nu) = self
            .noise_levels
            .iter()
            .find(|nu| !(**nu >= 0.0 && nu.is_finite()))
        {
            return Err(Error::InvalidConfig(format!(
                "noise level must be non-negative, got {nu}"
            )));
        }
        if self.regularizers.is_empty() {
            return Err(Error::InvalidConfig("no regularizers given".into()));
        }
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "eta must exceed 1, got {}",
                self.eta
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("no seeds given".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one solve.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub problem: ProblemKind,
    pub n: usize,
    pub nu: f64,
    pub regularizer: RegularizerName,
    pub seed: u64,
    pub iterations: usize,
    /// Total products with `K`.
    pub matvecs: usize,
    /// Products spent on `K·V` when splitting off the null space.
    pub matvecs_nullspace: usize,
    /// Products inside RRGMRES, `k + 1`.
    pub matvecs_arnoldi: usize,
    /// Products spent in the back-transformation.
    pub matvecs_back: usize,
    pub relative_error: f64,
    pub stop_reason: StopReason,
    pub x_k: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub log: IterationLog<f64>,
}

/// Solves one noisy instance: transform, RRGMRES, back-transform.
pub fn solve_problem(
    problem: &TestProblem<f64>,
    regularizer: RegularizerName,
    eta: f64,
    delta: f64,
    max_iter: usize,
) -> Result<RunResult> {
    let reg = regularizer.build(problem.n, delta)?;
    let ctx = StandardFormContext::prepare(&problem.k, &problem.b, &reg)?;
    let after_prepare = ctx.matvec_count();
    let cfg = SolverConfig::new(problem.epsilon())
        .with_eta(eta)
        .with_max_iter(max_iter);
    let log = rrgmres_solve(&ctx, ctx.b1(), &cfg)?;
    let after_solve = ctx.matvec_count();
    let x_k = ctx.back_transform(&log.final_z)?;
    let total = ctx.matvec_count();
    let (nu, seed) = problem.noise.as_ref().map_or((0.0, 0), |n| (n.nu, n.seed));
    Ok(RunResult {
        problem: problem.kind,
        n: problem.n,
        nu,
        regularizer,
        seed,
        iterations: log.final_k,
        matvecs: total,
        matvecs_nullspace: after_prepare,
        matvecs_arnoldi: after_solve - after_prepare,
        matvecs_back: total - after_solve,
        relative_error: relative_error(&x_k, &problem.x_hat)?,
        stop_reason: log.stop_reason,
        x_k,
        x_hat: problem.x_hat.clone(),
        log,
    })
}

/// Coordinates of a single solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSpec {
    pub problem: ProblemKind,
    pub n: usize,
    pub nu: f64,
    pub regularizer: RegularizerName,
    pub seed: u64,
    pub eta: f64,
    pub delta: f64,
    pub max_iter: usize,
}

impl RunSpec {
    pub fn new(
        problem: ProblemKind,
        n: usize,
        nu: f64,
        regularizer: RegularizerName,
        seed: u64,
    ) -> Self {
        Self {
            problem,
            n,
            nu,
            regularizer,
            seed,
            eta: 1.01,
            delta: 1.0,
            max_iter: 100,
        }
    }
}

/// Builds the problem, adds noise and solves.
pub fn run_single(spec: &RunSpec) -> Result<RunResult> {
    let clean = spec.problem.build::<f64>(spec.n)?;
    let noisy = add_noise(&clean, spec.nu, spec.seed)?;
    solve_problem(
        &noisy,
        spec.regularizer,
        spec.eta,
        spec.delta,
        spec.max_iter,
    )
}

/// One table cell outcome; failures keep their coordinates and error.
#[derive(Clone, Debug)]
pub struct TableEntry {
    pub nu: f64,
    pub regularizer: RegularizerName,
    pub seed: u64,
    pub outcome: std::result::Result<RunResult, Error>,
}

#[derive(Clone, Debug)]
pub struct TableResult {
    pub problem: ProblemKind,
    pub n: usize,
    pub entries: Vec<TableEntry>,
}

/// Per-cell aggregate over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub nu: f64,
    pub regularizer: RegularizerName,
    pub successes: usize,
    pub median_iterations: f64,
    pub median_matvecs: f64,
    pub median_relative_error: f64,
    /// Most frequent stop reason (earliest seed wins ties).
    pub stop_reason: Option<StopReason>,
    /// Number of seeds that stopped with `k = 0`.
    pub zero_iteration_runs: usize,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl TableResult {
    pub fn cell(&self, nu: f64, regularizer: RegularizerName) -> impl Iterator<Item = &TableEntry> {
        self.entries
            .iter()
            .filter(move |e| e.nu == nu && e.regularizer == regularizer)
    }

    pub fn summary(&self, nu: f64, regularizer: RegularizerName) -> CellSummary {
        let runs: Vec<&RunResult> = self
            .cell(nu, regularizer)
            .filter_map(|e| e.outcome.as_ref().ok())
            .collect();
        let pick =
            |f: fn(&RunResult) -> f64| median(&runs.iter().map(|r| f(r)).collect::<Vec<_>>());
        let mut counts: Vec<(StopReason, usize)> = Vec::new();
        for r in &runs {
            match counts.iter_mut().find(|(s, _)| *s == r.stop_reason) {
                Some((_, c)) => *c += 1,
                None => counts.push((r.stop_reason, 1)),
            }
        }
        let stop_reason =
            counts
                .iter()
                .fold(None::<(StopReason, usize)>, |best, &(s, c)| match best {
                    Some((_, bc)) if bc >= c => best,
                    _ => Some((s, c)),
                });
        CellSummary {
            nu,
            regularizer,
            successes: runs.len(),
            median_iterations: pick(|r| r.iterations as f64),
            median_matvecs: pick(|r| r.matvecs as f64),
            median_relative_error: pick(|r| r.relative_error),
            stop_reason: stop_reason.map(|(s, _)| s),
            zero_iteration_runs: runs.iter().filter(|r| r.iterations == 0).count(),
        }
    }

    /// Distinct cells in table order.
    pub fn cells(&self) -> Vec<(f64, RegularizerName)> {
        let mut out: Vec<(f64, RegularizerName)> = Vec::new();
        for e in &self.entries {
            if !out.iter().any(|&(nu, r)| nu == e.nu && r == e.regularizer) {
                out.push((e.nu, e.regularizer));
            }
        }
        out
    }

    /// One row per run followed by one median row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(RUN_CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let _ = write!(
                out,
                "{},{},{:e},{},{},",
                self.problem, self.n, e.nu, e.regularizer, e.seed
            );
            match &e.outcome {
                Ok(r) => {
                    let _ = writeln!(
                        out,
                        "{},{},{:.6e},{},{},{},{}",
                        r.iterations,
                        r.matvecs,
                        r.relative_error,
                        r.stop_reason,
                        r.matvecs_nullspace,
                        r.matvecs_arnoldi,
                        r.matvecs_back
                    );
                }
                Err(err) => {
                    let _ = writeln!(out, ",,,ERROR:{},,,", err.tag());
                }
            }
        }
        for (nu, reg) in self.cells() {
            let s = self.summary(nu, reg);
            let _ = write!(out, "{},{},{:e},{},median,", self.problem, self.n, nu, reg);
            if s.successes == 0 {
                let _ = writeln!(out, ",,,ERROR,,,");
            } else {
                let _ = writeln!(
                    out,
                    "{},{},{:.6e},{},,,",
                    s.median_iterations,
                    s.median_matvecs,
                    s.median_relative_error,
                    s.stop_reason.map_or("", StopReason::as_str)
                );
            }
        }
        out
    }
}

/// Runs the full cross product; a failing cell does not stop the others.
pub fn run_table(cfg: &ExperimentConfig) -> Result<TableResult> {
    cfg.validate()?;
    let clean = cfg.problem.build::<f64>(cfg.n)?;
    let mut entries = Vec::new();
    for &nu in &cfg.noise_levels {
        let noisy: Vec<(u64, Result<TestProblem<f64>>)> = cfg
            .seeds
            .iter()
            .map(|&seed| (seed, add_noise(&clean, nu, seed)))
            .collect();
        for &reg in &cfg.regularizers {
            // building the regularizer once validates it before the seeds run
            let valid = reg.build::<f64>(cfg.n, cfg.delta).map(|_| ());
            for (seed, problem) in &noisy {
                let outcome = match (&valid, problem) {
                    (Err(e), _) | (_, Err(e)) => Err(e.clone()),
                    (Ok(()), Ok(p)) => solve_problem(p, reg, cfg.eta, cfg.delta, cfg.max_iter),
                };
                entries.push(TableEntry {
                    nu,
                    regularizer: reg,
                    seed: *seed,
                    outcome,
                });
            }
        }
    }
    Ok(TableResult {
        problem: cfg.problem,
        n: cfg.n,
        entries,
    })
}

/// CSV row for a single solve (the run header applies).
pub fn run_csv_row(r: &RunResult) -> String {
    format!(
        "{},{},{:e},{},{},{},{},{:.6e},{},{},{},{}",
        r.problem,
        r.n,
        r.nu,
        r.regularizer,
        r.seed,
        r.iterations,
        r.matvecs,
        r.relative_error,
        r.stop_reason,
        r.matvecs_nullspace,
        r.matvecs_arnoldi,
        r.matvecs_back
    )
}

/// `(‖L̃₂ − L_{2,0}‖_F, ‖L̃₂ − P₂L̃₂P₂‖_F, ‖L̃₂ − L̃₂P₂‖_F)` for order `n`.
pub fn distances(n: usize) -> Result<(f64, f64, f64)> {
    let l2t = make_regularization_matrix::<f64>(RegularizerKind::L2Tilde, n)?;
    let l20 = make_regularization_matrix::<f64>(RegularizerKind::L2Zero, n)?;
    let basis = make_nullspace_basis::<f64>(NullSpaceKind::N2, n)?;
    let d_l20 = (&l2t - &l20).frobenius_norm();
    let d_plp = nearness_distance(&l2t, &basis, true)?;
    let d_lp = nearness_distance(&l2t, &basis, false)?;
    Ok((d_l20, d_plp, d_lp))
}

pub fn distances_csv(n_min: usize, n_max: usize, step: usize) -> Result<String> {
    if n_min < 4 || n_min > n_max {
        return Err(Error::BadDimension(format!(
            "need 4 <= n_min <= n_max, got {n_min}..{n_max}"
        )));
    }
    if step == 0 {
        return Err(Error::BadDimension("step must be positive".into()));
    }
    let mut out = String::from(DISTANCES_CSV_HEADER);
    out.push('\n');
    for n in (n_min..=n_max).step_by(step) {
        let (a, b, c) = distances(n)?;
        let _ = writeln!(out, "{n},{a:.16e},{b:.16e},{c:.16e}");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing_and_validation() {
        let text = "# table setup\nproblem = deriv2\nn=50\nnoise=1e-2, 1e-3\nreg=I,L2tP2\nseeds=1..3,7\nout=table.csv\n";
        let (cfg, extra) = ExperimentConfig::parse_text(text, &["out"]).unwrap();
        assert_eq!(cfg.problem, ProblemKind::Deriv2);
        assert_eq!(cfg.n, 50);
        assert_eq!(cfg.noise_levels, vec![1e-2, 1e-3]);
        assert_eq!(
            cfg.regularizers,
            vec![RegularizerName::Identity, RegularizerName::L2tP2]
        );
        assert_eq!(cfg.seeds, vec![1, 2, 3, 7]);
        assert_eq!(extra, vec![("out".to_string(), "table.csv".to_string())]);
        cfg.validate().unwrap();

        let err = ExperimentConfig::parse_text("reg=L3\n", &[]).unwrap_err();
        assert!(matches!(&err, Error::Parse { line: 1, msg } if msg.contains("L1dP1")));
        assert!(ExperimentConfig::parse_text("bogus=1\n", &[]).is_err());
        assert!(ExperimentConfig::parse_text("no equals sign\n", &[]).is_err());
        let mut bad = ExperimentConfig {
            eta: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        bad = ExperimentConfig {
            delta: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        bad = ExperimentConfig {
            seeds: vec![],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn matvec_breakdown_adds_up() {
        let r = run_single(&RunSpec::new(
            ProblemKind::Phillips,
            40,
            1e-2,
            RegularizerName::L1dP1,
            1,
        ))
        .unwrap();
        assert_eq!(r.matvecs_nullspace, 1);
        assert_eq!(r.matvecs_arnoldi, r.iterations + 1);
        assert_eq!(r.matvecs_back, 1);
        assert_eq!(r.matvecs, r.iterations + 3);
        let r = run_single(&RunSpec::new(
            ProblemKind::Phillips,
            40,
            1e-2,
            RegularizerName::Identity,
            1,
        ))
        .unwrap();
        assert_eq!(r.matvecs, r.iterations + 1);
    }

    #[test]
    fn noise_free_identity_runs_to_max_iter() {
        let spec = RunSpec {
            max_iter: 12,
            ..RunSpec::new(ProblemKind::Phillips, 40, 0.0, RegularizerName::Identity, 1)
        };
        let r = run_single(&spec).unwrap();
        assert_eq!(r.stop_reason, StopReason::MaxIter);
        assert_eq!(r.iterations, 12);
    }

    #[test]
    fn small_table_shape_and_determinism() {
        let cfg = ExperimentConfig {
            n: 24,
            noise_levels: vec![1e-2, 1e-3],
            seeds: vec![1, 2, 3],
            ..Default::default()
        };
        let a = run_table(&cfg).unwrap().to_csv();
        let b = run_table(&cfg).unwrap().to_csv();
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 6 * 3 + 2 * 6);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 12));
        assert_eq!(lines.iter().filter(|l| l.contains(",median,")).count(), 12);
    }

    #[test]
    fn distances_examples() {
        let (l20, plp, lp) = distances(3).unwrap();
        assert!((l20 - 10f64.sqrt() / 4.0).abs() < 1e-14);
        let l2t = make_regularization_matrix::<f64>(RegularizerKind::L2Tilde, 3).unwrap();
        let p = crate::regops::make_projector_closed::<f64>(NullSpaceKind::N2, 3).unwrap();
        let explicit = (&l2t - &l2t.matmul(p.matrix())).frobenius_norm();
        assert!((lp - explicit).abs() < 1e-14);
        let explicit = (&l2t - &p.matrix().matmul(&l2t).matmul(p.matrix())).frobenius_norm();
        assert!((plp - explicit).abs() < 1e-14);
        let csv = distances_csv(4, 10, 3).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().starts_with("4,7.9056941504209"));
        assert!(distances_csv(3, 10, 1).is_err());
        assert!(distances_csv(10, 4, 1).is_err());
    }
}
