//! Monte Carlo laboratory for the error rates of the screening pipeline.
//!
//! Test statistics for `m` SAs of `n` AE variables are drawn from a
//! multivariate normal with unit variances and compound-symmetry correlation
//! (`rho_v` within an SA, `rho_r` across SAs). The mean of AE `j` in SA `i`
//! is `mu0[j] + w[i]`, and p-values are upper normal tails.
//!
//! Every iteration `t` draws from its own ChaCha8 stream: the generator is
//! seeded from the scenario seed with `seed_from_u64` and then switched to
//! stream `t` with `set_stream`. Iterations are therefore independent of how
//! work is split across threads, and all tallies are integer counters, so a
//! report is bit-for-bit identical for any worker count.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{cross_sa_qvalues, first_layer, sa_decision, CrossSaMethod};
use crate::linalg::{build_cs_correlation, cholesky_lower, cs_lower_bound};
use crate::stats::upper_tail_unchecked;
use crate::{Result, SafeError};

pub const DEFAULT_ITERATIONS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub label: String,
    /// Number of synergy areas.
    pub m: usize,
    /// AE variables per synergy area.
    pub n: usize,
    pub mu0: Vec<f64>,
    pub w: Vec<f64>,
    pub rho_r: f64,
    pub rho_v: f64,
    pub iterations: u64,
    pub seed: u64,
    pub l: usize,
    pub alpha: f64,
    #[serde(default)]
    pub cross_sa_method: CrossSaMethod,
}

impl Scenario {
    /// Scenario with zero means and the usual defaults (`l = 2`, `alpha = 0.05`, BH).
    pub fn new(m: usize, n: usize, rho_r: f64, rho_v: f64) -> Self {
        Scenario {
            label: String::new(),
            m,
            n,
            mu0: vec![0.0; n],
            w: vec![0.0; m],
            rho_r,
            rho_v,
            iterations: DEFAULT_ITERATIONS,
            seed: DEFAULT_SEED,
            l: 2,
            alpha: 0.05,
            cross_sa_method: CrossSaMethod::Bh,
        }
    }

    /// Checks everything except positive definiteness, which needs the factorization.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SafeError::invalid(format!("scenario `{}`: {msg}", self.label)));
        if self.m == 0 || self.n == 0 {
            return bad(format!("m and n must be positive (m = {}, n = {})", self.m, self.n));
        }
        if self.mu0.len() != self.n {
            return bad(format!("mu0 has {} entries, expected n = {}", self.mu0.len(), self.n));
        }
        if self.w.len() != self.m {
            return bad(format!("w has {} entries, expected m = {}", self.w.len(), self.m));
        }
        if self.mu0.iter().chain(&self.w).any(|v| !v.is_finite()) {
            return bad("means must be finite".into());
        }
        for (name, rho) in [("rho_r", self.rho_r), ("rho_v", self.rho_v)] {
            if !(rho > -1.0 && rho < 1.0) {
                return bad(format!("{name} must lie in (-1, 1), got {rho}"));
            }
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.l == 0 {
            return bad("synergy count l must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1), got {}", self.alpha));
        }
        Ok(())
    }

    pub fn mean(&self, sa: usize, ae: usize) -> f64 {
        self.mu0[ae] + self.w[sa]
    }

    pub fn correlation(&self) -> DMatrix<f64> {
        build_cs_correlation(self.m, self.n, self.rho_r, self.rho_v)
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth::new(self)
    }
}

/// Which hypotheses are false in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `elementary_alt[i][j]` is true iff AE `j` of SA `i` has a positive mean.
    pub elementary_alt: Vec<Vec<bool>>,
    /// SA `i` is under the alternative iff it has at least `l` elementary alternatives.
    pub sa_alt: Vec<bool>,
}

impl GroundTruth {
    pub fn new(scenario: &Scenario) -> Self {
        let elementary_alt: Vec<Vec<bool>> =
            (0..scenario.m).map(|i| (0..scenario.n).map(|j| scenario.mean(i, j) > 0.0).collect()).collect();
        let sa_alt = elementary_alt.iter().map(|row| row.iter().filter(|&&a| a).count() >= scenario.l).collect();
        GroundTruth { elementary_alt, sa_alt }
    }

    pub fn true_null_count(&self) -> usize {
        self.sa_alt.iter().filter(|&&a| !a).count()
    }
}

/// Draws test statistics for one scenario. The Cholesky factor is computed
/// once and shared read-only by all iterations.
#[derive(Debug, Clone)]
pub struct ScenarioSampler {
    m: usize,
    n: usize,
    seed: u64,
    mean: Vec<f64>,
    /// Row `a` of the lower factor, entries `0..=a`, packed back to back.
    packed: Vec<f64>,
}

impl ScenarioSampler {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let l = cholesky_lower(&scenario.correlation()).map_err(|e| match e {
            SafeError::NotPositiveDefinite { index, pivot } => SafeError::invalid(format!(
                "scenario `{}`: compound-symmetry correlation (rho_r = {}, rho_v = {}) is not positive definite \
                 (Cholesky pivot {index} = {pivot:e}); correlations must stay at or above -1/(n*m-1) = {:.6}",
                scenario.label,
                scenario.rho_r,
                scenario.rho_v,
                cs_lower_bound(scenario.m, scenario.n)
            )),
            other => other,
        })?;
        let dim = scenario.m * scenario.n;
        let mut packed = Vec::with_capacity(dim * (dim + 1) / 2);
        for a in 0..dim {
            packed.extend((0..=a).map(|b| l[(a, b)]));
        }
        let mean = (0..dim).map(|a| scenario.mean(a / scenario.n, a % scenario.n)).collect();
        Ok(ScenarioSampler { m: scenario.m, n: scenario.n, seed: scenario.seed, mean, packed })
    }

    fn dim(&self) -> usize {
        self.m * self.n
    }

    /// Fills `out` (SA-major, length `m·n`) with the statistics of iteration `t`.
    fn fill(&self, t: u64, normals: &mut [f64], out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t);
        for z in normals.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        let mut offset = 0;
        for (a, x) in out.iter_mut().enumerate() {
            let row = &self.packed[offset..offset + a + 1];
            offset += a + 1;
            *x = self.mean[a] + row.iter().zip(&normals[..=a]).map(|(l, z)| l * z).sum::<f64>();
        }
    }

    /// Statistics of iteration `t` as an `m × n` matrix (row = SA).
    pub fn sample(&self, t: u64) -> DMatrix<f64> {
        let mut normals = vec![0.0; self.dim()];
        let mut flat = vec![0.0; self.dim()];
        self.fill(t, &mut normals, &mut flat);
        DMatrix::from_row_slice(self.m, self.n, &flat)
    }
}

/// Statistics of iteration `t`: `μ + L·z` with `z` from the `(seed, t)` stream.
pub fn sample_statistics(scenario: &Scenario, iteration: u64) -> Result<DMatrix<f64>> {
    Ok(ScenarioSampler::new(scenario)?.sample(iteration))
}

/// Element-wise upper normal tail.
pub fn pvalues_from_statistics(stats: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(bad) = stats.iter().find(|v| !v.is_finite()) {
        return Err(SafeError::invalid(format!("non-finite test statistic {bad}")));
    }
    Ok(stats.map(upper_tail_unchecked))
}

/// Monte Carlo estimate of a probability or expectation with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub se: f64,
}

impl Estimate {
    fn proportion(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Estimate { estimate: p, se: (p * (1.0 - p) / trials as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub label: String,
    pub m: usize,
    pub n: usize,
    pub rho_r: f64,
    pub rho_v: f64,
    pub l: usize,
    pub alpha: f64,
    pub cross_sa_method: CrossSaMethod,
    pub iterations: u64,
    pub seed: u64,
    /// First-layer rejection probability for each SA; `None` for SAs under the alternative.
    pub per_sa_wrong_rejection: Vec<Option<Estimate>>,
    /// Expected false discovery proportion across SAs (`Q = 0` when nothing is flagged).
    pub fdr: Estimate,
    /// Probability the pipeline flags each SA; `None` for true-null SAs.
    pub power_per_true_sa: Vec<Option<Estimate>>,
    /// Mean number of flagged SAs per iteration.
    pub mean_discoveries: f64,
    /// Number of iterations in which no SA was flagged.
    pub zero_discovery_iterations: u64,
}

/// Integer tallies; merging is exact, so the reduction order is irrelevant.
#[derive(Debug, Clone)]
struct Tally {
    iterations: u64,
    first_layer_hits: Vec<u64>,
    flags: Vec<u64>,
    /// Counts of `(S, R)` outcomes at index `S·(m+1) + R`.
    outcomes: Vec<u64>,
}

impl Tally {
    fn new(m: usize) -> Self {
        Tally { iterations: 0, first_layer_hits: vec![0; m], flags: vec![0; m], outcomes: vec![0; (m + 1) * (m + 1)] }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.iterations += other.iterations;
        for (a, b) in self.first_layer_hits.iter_mut().zip(other.first_layer_hits) {
            *a += b;
        }
        for (a, b) in self.flags.iter_mut().zip(other.flags) {
            *a += b;
        }
        for (a, b) in self.outcomes.iter_mut().zip(other.outcomes) {
            *a += b;
        }
        self
    }
}

struct Scratch {
    normals: Vec<f64>,
    stats: Vec<f64>,
    sa_p: Vec<f64>,
}

/// Outcome of one iteration, shared with tests that re-derive it through
/// [`crate::engine::safe_analyze`].
pub(crate) struct IterationOutcome {
    pub first_layer_reject: Vec<bool>,
    pub flagged: Vec<bool>,
}

fn run_iteration(scenario: &Scenario, pvalues: &[f64], sa_p: &mut [f64]) -> IterationOutcome {
    let n = scenario.n;
    let mut first_layer_reject = Vec::with_capacity(scenario.m);
    for (i, slot) in sa_p.iter_mut().enumerate() {
        let layer = first_layer(&pvalues[i * n..(i + 1) * n], scenario.l);
        first_layer_reject.push(sa_decision(&layer.adjusted, scenario.l, scenario.alpha));
        *slot = layer.sa_pvalue.unwrap_or(1.0);
    }
    let q = cross_sa_qvalues(sa_p, scenario.cross_sa_method);
    let flagged = q.iter().map(|&v| v <= scenario.alpha).collect();
    IterationOutcome { first_layer_reject, flagged }
}

/// Raw p-values of iteration `t`, SA-major.
#[cfg(test)]
pub(crate) fn iteration_pvalues(sampler: &ScenarioSampler, t: u64) -> Vec<f64> {
    let mut normals = vec![0.0; sampler.dim()];
    let mut stats = vec![0.0; sampler.dim()];
    sampler.fill(t, &mut normals, &mut stats);
    stats.into_iter().map(upper_tail_unchecked).collect()
}

#[cfg(test)]
pub(crate) fn iteration_outcome(scenario: &Scenario, sampler: &ScenarioSampler, t: u64) -> IterationOutcome {
    let p = iteration_pvalues(sampler, t);
    let mut sa_p = vec![0.0; scenario.m];
    run_iteration(scenario, &p, &mut sa_p)
}

/// Runs all iterations of a scenario on the current rayon pool.
pub fn run_scenario(scenario: &Scenario) -> Result<SimulationReport> {
    let sampler = ScenarioSampler::new(scenario)?;
    let truth = scenario.ground_truth();
    let m = scenario.m;
    let dim = sampler.dim();

    let tally = (0..scenario.iterations)
        .into_par_iter()
        .fold(
            || {
                let scratch = Scratch { normals: vec![0.0; dim], stats: vec![0.0; dim], sa_p: vec![0.0; m] };
                (Tally::new(m), scratch)
            },
            |(mut tally, mut scratch), t| {
                sampler.fill(t, &mut scratch.normals, &mut scratch.stats);
                for v in scratch.stats.iter_mut() {
                    *v = upper_tail_unchecked(*v);
                }
                let outcome = run_iteration(scenario, &scratch.stats, &mut scratch.sa_p);
                let mut discoveries = 0;
                let mut false_discoveries = 0;
                for i in 0..m {
                    if outcome.first_layer_reject[i] {
                        tally.first_layer_hits[i] += 1;
                    }
                    if outcome.flagged[i] {
                        tally.flags[i] += 1;
                        discoveries += 1;
                        if !truth.sa_alt[i] {
                            false_discoveries += 1;
                        }
                    }
                }
                tally.outcomes[false_discoveries * (m + 1) + discoveries] += 1;
                tally.iterations += 1;
                (tally, scratch)
            },
        )
        .map(|(tally, _)| tally)
        .reduce(|| Tally::new(m), Tally::merge);

    Ok(summarize(scenario, &truth, &tally))
}

fn summarize(scenario: &Scenario, truth: &GroundTruth, tally: &Tally) -> SimulationReport {
    let m = scenario.m;
    let n_iter = tally.iterations;
    let (mut q_sum, mut q_sq_sum, mut r_sum) = (0.0, 0.0, 0.0);
    for s in 0..=m {
        for r in 0..=m {
            let count = tally.outcomes[s * (m + 1) + r];
            if count == 0 {
                continue;
            }
            let q = if r == 0 { 0.0 } else { s as f64 / r as f64 };
            q_sum += count as f64 * q;
            q_sq_sum += count as f64 * q * q;
            r_sum += (count * r as u64) as f64;
        }
    }
    let mean_q = q_sum / n_iter as f64;
    let var_q = (q_sq_sum / n_iter as f64 - mean_q * mean_q).max(0.0);

    SimulationReport {
        label: scenario.label.clone(),
        m,
        n: scenario.n,
        rho_r: scenario.rho_r,
        rho_v: scenario.rho_v,
        l: scenario.l,
        alpha: scenario.alpha,
        cross_sa_method: scenario.cross_sa_method,
        iterations: n_iter,
        seed: scenario.seed,
        per_sa_wrong_rejection: (0..m)
            .map(|i| (!truth.sa_alt[i]).then(|| Estimate::proportion(tally.first_layer_hits[i], n_iter)))
            .collect(),
        fdr: Estimate { estimate: mean_q, se: (var_q / n_iter as f64).sqrt() },
        power_per_true_sa: (0..m)
            .map(|i| truth.sa_alt[i].then(|| Estimate::proportion(tally.flags[i], n_iter)))
            .collect(),
        mean_discoveries: r_sum / n_iter as f64,
        zero_discovery_iterations: (0..=m).map(|s| tally.outcomes[s * (m + 1)]).sum(),
    }
}

/// Common mean pattern across SAs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanPattern {
    /// All AE means zero.
    M1,
    /// First AE of every SA has mean 6, the rest zero.
    M2,
}

/// Per-SA shift pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftPattern {
    /// No shifts.
    S1,
    /// SA 1 shifted by 3.
    S2,
    /// SAs 1 and 2 shifted by 3.
    S3,
}

impl MeanPattern {
    pub fn vector(self, n: usize) -> Vec<f64> {
        let mut mu = vec![0.0; n];
        if self == MeanPattern::M2 {
            mu[0] = 6.0;
        }
        mu
    }
}

impl ShiftPattern {
    pub fn vector(self, m: usize) -> Vec<f64> {
        let shifted = match self {
            ShiftPattern::S1 => 0,
            ShiftPattern::S2 => 1,
            ShiftPattern::S3 => 2,
        };
        (0..m).map(|i| if i < shifted { 3.0 } else { 0.0 }).collect()
    }
}

pub const GRID_BLOCKS: [(MeanPattern, ShiftPattern); 4] = [
    (MeanPattern::M1, ShiftPattern::S1),
    (MeanPattern::M2, ShiftPattern::S1),
    (MeanPattern::M2, ShiftPattern::S2),
    (MeanPattern::M2, ShiftPattern::S3),
];

/// Correlation rows of each block; `None` stands for the boundary `−1/(n·m − 1)`.
pub const GRID_CORRELATIONS: [(Option<f64>, Option<f64>); 7] = [
    (Some(0.0), Some(0.0)),
    (Some(0.0), None),
    (Some(0.0), Some(0.7)),
    (None, Some(0.0)),
    (None, None),
    (None, Some(0.7)),
    (Some(0.7), Some(0.7)),
];

/// The 28 scenarios (4 mean/shift blocks × 7 correlation rows) for `m` SAs of 15 AEs.
pub fn block_grid(table: &str, m: usize, iterations: u64, seed: u64) -> Vec<Scenario> {
    let n = 15;
    let boundary = cs_lower_bound(m, n);
    let denom = m * n - 1;
    let fmt_rho = |r: Option<f64>| r.map_or(format!("-1/{denom}"), |v| format!("{v}"));
    let mut out = Vec::with_capacity(28);
    for (mu, w) in GRID_BLOCKS {
        for (rr, rv) in GRID_CORRELATIONS {
            out.push(Scenario {
                label: format!("{table}/{mu:?}+{w:?}/rho_r={}/rho_v={}", fmt_rho(rr), fmt_rho(rv)),
                m,
                n,
                mu0: mu.vector(n),
                w: w.vector(m),
                rho_r: rr.unwrap_or(boundary),
                rho_v: rv.unwrap_or(boundary),
                iterations,
                seed,
                l: 2,
                alpha: 0.05,
                cross_sa_method: CrossSaMethod::Bh,
            });
        }
    }
    out
}

pub fn table1_grid(iterations: u64, seed: u64) -> Vec<Scenario> {
    block_grid("table1", 5, iterations, seed)
}

pub fn table2_grid(iterations: u64, seed: u64) -> Vec<Scenario> {
    block_grid("table2", 10, iterations, seed)
}

/// Both built-in grids (m = 5, then m = 10) with default iterations and seed.
pub fn scenario_grid() -> Vec<Scenario> {
    let mut grid = table1_grid(DEFAULT_ITERATIONS, DEFAULT_SEED);
    grid.extend(table2_grid(DEFAULT_ITERATIONS, DEFAULT_SEED));
    grid
}

fn parse_real(key: &str, raw: &str, line: u64) -> Result<f64> {
    let raw = raw.trim();
    let parsed = match raw.split_once('/') {
        Some((num, den)) => num
            .trim()
            .parse::<f64>()
            .ok()
            .zip(den.trim().parse::<f64>().ok())
            .filter(|(_, d)| *d != 0.0)
            .map(|(a, b)| a / b),
        None => raw.parse::<f64>().ok(),
    };
    parsed
        .filter(|v| v.is_finite())
        .ok_or_else(|| SafeError::Parse { line, reason: format!("`{key}`: `{raw}` is not a real number") })
}

fn parse_int<T: std::str::FromStr>(key: &str, raw: &str, line: u64) -> Result<T> {
    raw.trim().parse().map_err(|_| SafeError::Parse {
        line,
        reason: format!("`{key}`: `{}` is not a nonnegative integer", raw.trim()),
    })
}

/// Parses scenario files in the flat `key = value` format.
///
/// Keys are the [`Scenario`] field names. `mu0` and `w` are comma-separated
/// reals; any real may be written as a fraction such as `-1/74`. `#` starts a
/// comment, and a line holding only `---` separates scenarios. `m`, `n`,
/// `rho_r` and `rho_v` are required; the rest default to zero means,
/// 100000 iterations, `l = 2`, `alpha = 0.05` and `cross_sa_method = bh`.
pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    let mut fields: Vec<(u64, String, String)> = Vec::new();
    let mut start_line = 1;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line == "---" {
            if !fields.is_empty() {
                out.push(scenario_from_fields(&fields, start_line)?);
                fields.clear();
            }
            start_line = line_no + 1;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| SafeError::Parse {
            line: line_no,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        fields.push((line_no, key.trim().to_string(), value.trim().to_string()));
    }
    if !fields.is_empty() {
        out.push(scenario_from_fields(&fields, start_line)?);
    }
    if out.is_empty() {
        return Err(SafeError::Parse { line: 1, reason: "no scenario found".into() });
    }
    Ok(out)
}

fn scenario_from_fields(fields: &[(u64, String, String)], start_line: u64) -> Result<Scenario> {
    let mut label = String::new();
    let (mut m, mut n, mut rho_r, mut rho_v) = (None, None, None, None);
    let (mut mu0, mut w) = (None, None);
    let mut iterations = DEFAULT_ITERATIONS;
    let mut seed = DEFAULT_SEED;
    let mut l = 2;
    let mut alpha = 0.05;
    let mut method = CrossSaMethod::Bh;
    for (line, key, value) in fields {
        let line = *line;
        let list = |v: &str| -> Result<Vec<f64>> {
            v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_real(key, s, line)).collect()
        };
        match key.as_str() {
            "label" => label = value.clone(),
            "m" => m = Some(parse_int(key, value, line)?),
            "n" => n = Some(parse_int(key, value, line)?),
            "mu0" => mu0 = Some(list(value)?),
            "w" => w = Some(list(value)?),
            "rho_r" => rho_r = Some(parse_real(key, value, line)?),
            "rho_v" => rho_v = Some(parse_real(key, value, line)?),
            "iterations" => iterations = parse_int(key, value, line)?,
            "seed" => seed = parse_int(key, value, line)?,
            "l" => l = parse_int(key, value, line)?,
            "alpha" => alpha = parse_real(key, value, line)?,
            "cross_sa_method" => {
                method = match value.to_ascii_lowercase().as_str() {
                    "bh" => CrossSaMethod::Bh,
                    "by" => CrossSaMethod::By,
                    other => {
                        return Err(SafeError::Parse { line, reason: format!("unknown cross_sa_method `{other}`") })
                    }
                }
            }
            other => return Err(SafeError::Parse { line, reason: format!("unknown key `{other}`") }),
        }
    }
    let missing = |k: &str| SafeError::Parse { line: start_line, reason: format!("missing required key `{k}`") };
    let m: usize = m.ok_or_else(|| missing("m"))?;
    let n: usize = n.ok_or_else(|| missing("n"))?;
    let scenario = Scenario {
        label,
        m,
        n,
        mu0: mu0.unwrap_or_else(|| vec![0.0; n]),
        w: w.unwrap_or_else(|| vec![0.0; m]),
        rho_r: rho_r.ok_or_else(|| missing("rho_r"))?,
        rho_v: rho_v.ok_or_else(|| missing("rho_v"))?,
        iterations,
        seed,
        l,
        alpha,
        cross_sa_method: method,
    };
    Ok(scenario)
}

/// Writes a scenario in the `key = value` format read by [`parse_scenarios`].
pub fn format_scenario(s: &Scenario) -> String {
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
    let method = match s.cross_sa_method {
        CrossSaMethod::Bh => "bh",
        CrossSaMethod::By => "by",
    };
    format!(
        "label = {}\nm = {}\nn = {}\nmu0 = {}\nw = {}\nrho_r = {:?}\nrho_v = {:?}\niterations = {}\nseed = {}\nl = {}\nalpha = {:?}\ncross_sa_method = {}\n",
        s.label, s.m, s.n, join(&s.mu0), join(&s.w), s.rho_r, s.rho_v, s.iterations, s.seed, s.l, s.alpha, method
    )
}

/// Human-readable table of simulation reports, probabilities in percent.
pub fn render_reports_table(reports: &[SimulationReport]) -> String {
    let max_m = reports.iter().map(|r| r.m).max().unwrap_or(0);
    let label_width = reports.iter().map(|r| r.label.len()).max().unwrap_or(0).max(8);
    let mut out = String::new();
    let _ = write!(out, "{:<label_width$}", "scenario");
    for i in 1..=max_m {
        let _ = write!(out, " {:>8}", format!("G0[{i}]"));
    }
    let _ = writeln!(out, " {:>8} {:>8}", "FDR", "FDR se");
    for r in reports {
        let _ = write!(out, "{:<label_width$}", r.label);
        for i in 0..max_m {
            let cell = match r.per_sa_wrong_rejection.get(i) {
                Some(Some(e)) => format!("{:.2}%", 100.0 * e.estimate),
                Some(None) => "-".to_string(),
                None => String::new(),
            };
            let _ = write!(out, " {cell:>8}");
        }
        let _ = writeln!(out, " {:>7.2}% {:>7.3}%", 100.0 * r.fdr.estimate, 100.0 * r.fdr.se);
    }
    out
}
