//! JSON query files, their execution, result documents and grid sweeps.

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bnb::{BnbOptions, Progress, SolveStatus};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{Hyperrectangle, Norm, Polytope, Zonotope};
use crate::io::{fold_normalization, load_network, NNetMetadata};
use crate::linalg::Matrix;
use crate::network::FeedForwardNetwork;
use crate::problems::{
    check_containment, check_reachability, max_network_difference, optimize_convex, solve_noise_buffer, Containment,
    DistanceNorm, InputSet, NetworkDifferenceProblem, NoiseBufferProblem, Objective, Outcome, Reachability, Sense,
};

pub const DEFAULT_STOP_GAP: f64 = 1e-4;
pub const DEFAULT_TIMEOUT_SECONDS: f64 = 300.0;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000_000;

fn default_stop_gap() -> f64 {
    DEFAULT_STOP_GAP
}

fn default_stop_frequency() -> usize {
    1
}

fn default_max_iterations() -> usize {
    DEFAULT_MAX_ITERATIONS
}

fn default_timeout() -> Option<f64> {
    Some(DEFAULT_TIMEOUT_SECONDS)
}

fn default_l1() -> NormSpec {
    NormSpec::Order(1.0)
}

fn default_l2() -> NormSpec {
    NormSpec::Order(2.0)
}

/// Norm order as a number (`1`, `2`, `3.5`) or a name (`"l1"`, `"l2"`, `"linf"`, `"inf"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormSpec {
    Order(f64),
    Name(String),
}

impl NormSpec {
    pub fn to_norm(&self) -> Result<Norm> {
        match self {
            NormSpec::Order(p) => Norm::new(*p),
            NormSpec::Name(name) => match name.to_ascii_lowercase().as_str() {
                "l1" | "1" => Ok(Norm::L1),
                "l2" | "2" => Ok(Norm::L2),
                "linf" | "inf" | "infinity" => Ok(Norm::LInf),
                _ => Err(Error::Query(format!(
                    "unknown norm {name:?}; use a number >= 1, \"l1\", \"l2\" or \"linf\""
                ))),
            },
        }
    }

    fn to_distance_norm(&self) -> Result<DistanceNorm> {
        match self.to_norm()? {
            Norm::L1 => Ok(DistanceNorm::L1),
            Norm::L2 => Ok(DistanceNorm::L2),
            Norm::LInf => Ok(DistanceNorm::LInf),
            Norm::P(p) => Err(Error::Query(format!("distance objectives support l1, l2 and linf, not p = {p}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSetSpec {
    Hyperrectangle { center: Vec<f64>, radius: Vec<f64> },
    /// Hyperrectangle given by its corners.
    Box { low: Vec<f64>, high: Vec<f64> },
    /// `generators` lists the generator vectors (columns of `G`).
    Zonotope { center: Vec<f64>, generators: Vec<Vec<f64>> },
}

impl InputSetSpec {
    pub fn build(&self) -> Result<InputSet<f64>> {
        Ok(match self {
            InputSetSpec::Hyperrectangle { center, radius } => {
                InputSet::Box(Hyperrectangle::new(center.clone(), radius.clone())?)
            }
            InputSetSpec::Box { low, high } => InputSet::Box(Hyperrectangle::from_bounds(low, high)?),
            InputSetSpec::Zonotope { center, generators } => {
                InputSet::Zonotope(Zonotope::new(center.clone(), Matrix::from_columns(center.len(), generators)?)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeSpec {
    #[serde(rename = "A", alias = "a")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl PolytopeSpec {
    pub fn build(&self) -> Result<Polytope<f64>> {
        let cols = self.a.first().map_or(0, Vec::len);
        Polytope::new(Matrix::from_rows(&self.a, cols)?, self.b.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ObjectiveSpec {
    Affine {
        a: Vec<f64>,
        #[serde(default)]
        b: f64,
    },
    PolytopeViolation {
        #[serde(rename = "A", alias = "a")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Distance {
        target: Vec<f64>,
        #[serde(default = "default_l2")]
        norm: NormSpec,
    },
}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<Objective<f64>> {
        Ok(match self {
            ObjectiveSpec::Affine { a, b } => Objective::Affine { a: a.clone(), b: *b },
            ObjectiveSpec::PolytopeViolation { a, b } => Objective::PolytopeViolation(
                PolytopeSpec {
                    a: a.clone(),
                    b: b.clone(),
                }
                .build()?,
            ),
            ObjectiveSpec::Distance { target, norm } => Objective::Distance {
                target: target.clone(),
                norm: norm.to_distance_norm()?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemSpec {
    MinConvex {
        network: PathBuf,
        objective: ObjectiveSpec,
        /// Maximize instead (affine objectives only).
        #[serde(default)]
        maximize: bool,
    },
    PolytopeContained {
        network: PathBuf,
        polytope: PolytopeSpec,
    },
    PolytopeReach {
        network: PathBuf,
        polytope: PolytopeSpec,
    },
    Project {
        network: PathBuf,
        target: Vec<f64>,
        #[serde(default = "default_l2")]
        norm: NormSpec,
    },
    NoiseBuffer {
        first_network: PathBuf,
        second_network: PathBuf,
        buffer: InputSetSpec,
        objective: ObjectiveSpec,
    },
    NetDiff {
        network1: PathBuf,
        network2: PathBuf,
        #[serde(default = "default_l1")]
        norm: NormSpec,
    },
}

/// Two input dimensions split into a grid of root cells; other dimensions
/// keep the bounds of the query's input set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dims: [usize; 2],
    pub low: [f64; 2],
    pub high: [f64; 2],
    pub cells: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    #[serde(flatten)]
    pub problem: ProblemSpec,
    pub input_set: InputSetSpec,
    #[serde(default = "default_stop_gap")]
    pub stop_gap: f64,
    #[serde(default = "default_stop_frequency")]
    pub stop_frequency: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// `null` disables the timeout.
    #[serde(default = "default_timeout")]
    pub timeout_seconds: Option<f64>,
    /// Interpret inputs and outputs in the raw coordinates described by the
    /// network's normalization constants.
    #[serde(default)]
    pub apply_normalization: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl QuerySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.stop_gap > 0.0 && self.stop_gap.is_finite()) {
            return Err(Error::Query(format!("stop_gap must be positive, got {}", self.stop_gap)));
        }
        if self.stop_frequency == 0 {
            return Err(Error::Query("stop_frequency must be at least 1".into()));
        }
        if let Some(t) = self.timeout_seconds {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Query(format!("timeout_seconds must be non-negative, got {t}")));
            }
        }
        self.input_set.build()?;
        match &self.problem {
            ProblemSpec::MinConvex { objective, maximize, .. } => {
                objective.build()?;
                if *maximize && !matches!(objective, ObjectiveSpec::Affine { .. }) {
                    return Err(Error::Query("only affine objectives can be maximized".into()));
                }
            }
            ProblemSpec::PolytopeContained { polytope, .. } | ProblemSpec::PolytopeReach { polytope, .. } => {
                polytope.build()?;
            }
            ProblemSpec::Project { norm, .. } => {
                norm.to_distance_norm()?;
            }
            ProblemSpec::NoiseBuffer { buffer, objective, .. } => {
                buffer.build()?;
                objective.build()?;
            }
            ProblemSpec::NetDiff { norm, .. } => {
                norm.to_norm()?;
            }
        }
        if let Some(grid) = &self.grid {
            if grid.dims[0] == grid.dims[1] {
                return Err(Error::Query("grid dims must be two different dimensions".into()));
            }
            if grid.cells.contains(&0) {
                return Err(Error::Query("grid cells must be at least 1 per dimension".into()));
            }
            if (0..2).any(|i| !(grid.low[i] <= grid.high[i]) || !grid.low[i].is_finite() || !grid.high[i].is_finite()) {
                return Err(Error::Query("grid low must not exceed grid high".into()));
            }
        }
        Ok(())
    }

    pub fn options(&self) -> BnbOptions<f64> {
        BnbOptions {
            stop_gap: self.stop_gap,
            stop_frequency: self.stop_frequency,
            max_iterations: self.max_iterations,
            timeout: self.timeout_seconds.map(Duration::from_secs_f64),
            ..BnbOptions::default()
        }
    }
}

/// Parses and validates a query document (network files are not opened).
pub fn read_query(text: &str) -> Result<QuerySpec> {
    let spec: QuerySpec = serde_json::from_str(text).map_err(|e| Error::Query(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Reachable,
    Unreachable,
    Unknown,
}

/// Result document. Bounds are in the query's own sense: for maximization and
/// containment `lower_bound` is the best value found and `upper_bound` the
/// certified bound. Containment bounds the maximum violation; reachability
/// bounds the minimum violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub status: SolveStatus,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub witness_input: Vec<f64>,
    /// Network output at the witness; for `net-diff` the difference `N₁(x) − N₂(x)`.
    pub witness_output: Vec<f64>,
    pub iterations: usize,
    pub subproblems_expanded: usize,
    pub wall_time_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    /// Input to the second network for `noise-buffer` queries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_intermediate: Option<Vec<f64>>,
}

impl QueryResult {
    /// Process exit code: 0 when the gap closed or the decision was reached, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            SolveStatus::Optimal => 0,
            SolveStatus::Timeout | SolveStatus::MaxIter => 2,
        }
    }

    fn from_outcome<W>(outcome: &Outcome<f64, W>, witness_input: Vec<f64>, witness_output: Vec<f64>) -> Self {
        Self {
            status: outcome.status,
            lower_bound: outcome.lower_bound,
            upper_bound: outcome.upper_bound,
            gap: outcome.gap(),
            witness_input,
            witness_output,
            iterations: outcome.iterations,
            subproblems_expanded: outcome.expansions,
            wall_time_seconds: outcome.wall_time.as_secs_f64(),
            verdict: None,
            witness_intermediate: None,
        }
    }
}

pub fn write_result(result: &QueryResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)?)
}

pub fn read_result(text: &str) -> Result<QueryResult> {
    Ok(serde_json::from_str(text)?)
}

/// One progress report in the query's sense.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceLine {
    pub iteration: usize,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub queue_size: usize,
}

impl std::fmt::Display for TraceLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.iteration, self.lower, self.upper, self.gap, self.queue_size
        )
    }
}

enum Prepared {
    Convex {
        net: FeedForwardNetwork<f64>,
        objective: Objective<f64>,
        sense: Sense,
    },
    Contained {
        net: FeedForwardNetwork<f64>,
        polytope: Polytope<f64>,
    },
    Reach {
        net: FeedForwardNetwork<f64>,
        polytope: Polytope<f64>,
    },
    NoiseBuffer(NoiseBufferProblem<f64>),
    Difference(NetworkDifferenceProblem<f64>),
}

/// A query with its networks loaded and every dimension checked.
pub struct PreparedQuery {
    spec: QuerySpec,
    problem: Prepared,
    /// Raw-coordinate input bounds when normalization is applied.
    clamp: Option<Hyperrectangle<f64>>,
    input_dim: usize,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl PreparedQuery {
    /// Reads `path` and resolves network paths relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Query(format!("cannot read query {}: {e}", path.display())))?;
        let spec = read_query(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::new(spec, base)
    }

    pub fn new(spec: QuerySpec, base_dir: &Path) -> Result<Self> {
        spec.validate()?;
        let normalize = spec.apply_normalization;
        let mut clamp = None;
        let mut load = |p: &Path, is_input_net: bool| -> Result<FeedForwardNetwork<f64>> {
            let (net, meta) = load_network(&resolve(base_dir, p))?;
            if !normalize {
                return Ok(net);
            }
            let meta: NNetMetadata = meta.ok_or_else(|| {
                Error::Query(format!(
                    "apply_normalization needs normalization constants, but {} has none",
                    p.display()
                ))
            })?;
            if is_input_net {
                clamp = Some(Hyperrectangle::from_bounds(&meta.input_mins, &meta.input_maxes)?);
            }
            fold_normalization(&net, &meta)
        };

        let problem = match &spec.problem {
            ProblemSpec::MinConvex {
                network,
                objective,
                maximize,
            } => Prepared::Convex {
                net: load(network, true)?,
                objective: objective.build()?,
                sense: if *maximize { Sense::Maximize } else { Sense::Minimize },
            },
            ProblemSpec::PolytopeContained { network, polytope } => Prepared::Contained {
                net: load(network, true)?,
                polytope: polytope.build()?,
            },
            ProblemSpec::PolytopeReach { network, polytope } => Prepared::Reach {
                net: load(network, true)?,
                polytope: polytope.build()?,
            },
            ProblemSpec::Project { network, target, norm } => Prepared::Convex {
                net: load(network, true)?,
                objective: Objective::Distance {
                    target: target.clone(),
                    norm: norm.to_distance_norm()?,
                },
                sense: Sense::Minimize,
            },
            ProblemSpec::NoiseBuffer {
                first_network,
                second_network,
                buffer,
                objective,
            } => {
                let first = load(first_network, true)?;
                let second = load(second_network, false)?;
                let buffer = buffer.build()?.to_zonotope().into_owned();
                Prepared::NoiseBuffer(NoiseBufferProblem::new(first, second, buffer, objective.build()?)?)
            }
            ProblemSpec::NetDiff {
                network1,
                network2,
                norm,
            } => {
                let net1 = load(network1, true)?;
                let net2 = load(network2, true)?;
                Prepared::Difference(NetworkDifferenceProblem::new(net1, net2, norm.to_norm()?)?)
            }
        };

        let input_dim = match &problem {
            Prepared::Convex { net, objective, .. } => {
                check_dim("objective dimension", net.output_dim(), objective.dim())?;
                net.input_dim()
            }
            Prepared::Contained { net, polytope } | Prepared::Reach { net, polytope } => {
                check_dim("polytope dimension", net.output_dim(), polytope.dim())?;
                net.input_dim()
            }
            Prepared::NoiseBuffer(p) => p.first.input_dim(),
            Prepared::Difference(p) => p.net1.input_dim(),
        };
        let prepared = Self {
            spec,
            problem,
            clamp,
            input_dim,
        };
        prepared.input_set(&prepared.spec.input_set)?;
        if let Some(grid) = &prepared.spec.grid {
            if grid.dims.iter().any(|&d| d >= input_dim) {
                return Err(Error::Query(format!(
                    "grid dims {:?} out of range for input dimension {input_dim}",
                    grid.dims
                )));
            }
        }
        Ok(prepared)
    }

    pub fn spec(&self) -> &QuerySpec {
        &self.spec
    }

    /// Builds a root cell, restricted to the network's input bounds when normalization is applied.
    pub fn input_set(&self, spec: &InputSetSpec) -> Result<InputSet<f64>> {
        let set = spec.build()?;
        check_dim("input set dimension", self.input_dim, set.dim())?;
        let Some(bounds) = &self.clamp else {
            return Ok(set);
        };
        let InputSet::Box(h) = set else {
            return Err(Error::Query("apply_normalization requires a hyperrectangle input set".into()));
        };
        let (bl, bh) = (bounds.low(), bounds.high());
        let low: Vec<f64> = h.low().iter().zip(&bl).map(|(a, b)| a.max(*b)).collect();
        let high: Vec<f64> = h.high().iter().zip(&bh).map(|(a, b)| a.min(*b)).collect();
        if low.iter().zip(&high).any(|(l, h)| l > h) {
            return Err(Error::Query("input set lies outside the network's input bounds".into()));
        }
        Ok(InputSet::Box(Hyperrectangle::from_bounds(&low, &high)?))
    }

    pub fn run(&self, trace: &mut dyn FnMut(&TraceLine)) -> Result<QueryResult> {
        let input = self.input_set(&self.spec.input_set)?;
        self.run_on(&input, trace)
    }

    pub fn run_on(&self, input: &InputSet<f64>, trace: &mut dyn FnMut(&TraceLine)) -> Result<QueryResult> {
        let opts = self.spec.options();
        let maximizing = matches!(
            self.problem,
            Prepared::Convex {
                sense: Sense::Maximize,
                ..
            } | Prepared::Contained { .. }
                | Prepared::Difference(_)
        );
        let mut progress = |p: &Progress<f64>| {
            let (lower, upper) = if maximizing {
                (-p.best_upper, -p.best_lower)
            } else {
                (p.best_lower, p.best_upper)
            };
            trace(&TraceLine {
                iteration: p.iteration,
                lower,
                upper,
                gap: p.gap(),
                queue_size: p.queue_len,
            });
        };

        Ok(match &self.problem {
            Prepared::Convex { net, objective, sense } => {
                let out = optimize_convex(net, input, objective, *sense, &opts, &mut progress)?;
                let y = net.evaluate(&out.witness)?;
                QueryResult::from_outcome(&out, out.witness.clone(), y)
            }
            Prepared::Contained { net, polytope } => {
                let report = check_containment(net, input, polytope, &opts, &mut progress)?;
                let out = &report.outcome;
                let mut result = QueryResult::from_outcome(out, out.witness.clone(), net.evaluate(&out.witness)?);
                result.verdict = Some(match report.verdict {
                    Containment::Holds => Verdict::Holds,
                    Containment::Violated { .. } => Verdict::Violated,
                    Containment::Unknown => Verdict::Unknown,
                });
                result
            }
            Prepared::Reach { net, polytope } => {
                let report = check_reachability(net, input, polytope, &opts, &mut progress)?;
                let out = &report.outcome;
                let mut result = QueryResult::from_outcome(out, out.witness.clone(), net.evaluate(&out.witness)?);
                result.verdict = Some(match report.verdict {
                    Reachability::Reachable { .. } => Verdict::Reachable,
                    Reachability::Unreachable => Verdict::Unreachable,
                    Reachability::Unknown => Verdict::Unknown,
                });
                result
            }
            Prepared::NoiseBuffer(problem) => {
                let out = solve_noise_buffer(problem, input, &opts, &mut progress)?;
                let y = problem.second.evaluate(&out.witness.second_input)?;
                let mut result = QueryResult::from_outcome(&out, out.witness.input.clone(), y);
                result.witness_intermediate = Some(out.witness.second_input.clone());
                result
            }
            Prepared::Difference(problem) => {
                let out = max_network_difference(problem, input, &opts, &mut progress)?;
                let y1 = problem.net1.evaluate(&out.witness)?;
                let y2 = problem.net2.evaluate(&out.witness)?;
                let diff = y1.iter().zip(&y2).map(|(a, b)| a - b).collect();
                QueryResult::from_outcome(&out, out.witness.clone(), diff)
            }
        })
    }

    /// Best value found: the achieved objective in the query's sense.
    fn achieved(&self, result: &QueryResult) -> f64 {
        let maximizing = matches!(
            self.problem,
            Prepared::Convex {
                sense: Sense::Maximize,
                ..
            } | Prepared::Contained { .. }
                | Prepared::Difference(_)
        );
        if maximizing {
            result.lower_bound
        } else {
            result.upper_bound
        }
    }

    /// Root cells of the grid in row order (first grid dimension outermost).
    pub fn grid_cells(&self) -> Result<Vec<GridCell>> {
        let grid = self
            .spec
            .grid
            .as_ref()
            .ok_or_else(|| Error::Query("sweep needs a grid block".into()))?;
        let base = self.spec.input_set.build()?;
        let InputSet::Box(base) = base else {
            return Err(Error::Query("sweep needs a hyperrectangle input set".into()));
        };
        let edges = |k: usize| -> Vec<(f64, f64)> {
            let n = grid.cells[k];
            let (lo, hi) = (grid.low[k], grid.high[k]);
            let at = |i: usize| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 };
            (0..n).map(|i| (at(i), at(i + 1))).collect()
        };
        let mut cells = Vec::with_capacity(grid.cells[0] * grid.cells[1]);
        for &(a_lo, a_hi) in &edges(0) {
            for &(b_lo, b_hi) in &edges(1) {
                let mut low = base.low();
                let mut high = base.high();
                low[grid.dims[0]] = a_lo;
                high[grid.dims[0]] = a_hi;
                low[grid.dims[1]] = b_lo;
                high[grid.dims[1]] = b_hi;
                cells.push(GridCell {
                    bounds: [a_lo, a_hi, b_lo, b_hi],
                    input: InputSetSpec::Box { low, high },
                });
            }
        }
        Ok(cells)
    }

    /// Solves every grid cell and appends one CSV row per cell to `out`.
    /// Cells already present in `out` are skipped, so an interrupted sweep can
    /// be resumed by running it again.
    pub fn sweep(&self, out: &Path) -> Result<SweepSummary> {
        let cells = self.grid_cells()?;
        let done = read_sweep_keys(out)?;
        let fresh = done.is_none();
        let done = done.unwrap_or_default();
        let file = OpenOptions::new().create(true).append(true).open(out)?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if fresh {
            writer.write_record(SWEEP_HEADER)?;
            writer.flush()?;
        }
        let mut summary = SweepSummary::default();
        for cell in cells {
            let key = cell.key();
            if done.contains(&key) {
                summary.skipped += 1;
                continue;
            }
            let row = match self.input_set(&cell.input).and_then(|input| self.run_on(&input, &mut |_| {})) {
                Ok(result) => {
                    summary.solved += 1;
                    let status = serde_json::to_value(result.status)?;
                    [self.achieved(&result).to_string(), status.as_str().unwrap_or_default().to_string()]
                }
                Err(e) => {
                    summary.failed += 1;
                    [String::new(), format!("error: {e}")]
                }
            };
            writer.write_record(key.iter().chain(row.iter()))?;
            writer.flush()?;
        }
        Ok(summary)
    }
}

pub const SWEEP_HEADER: [&str; 6] = ["dim1_lo", "dim1_hi", "dim2_lo", "dim2_hi", "value", "status"];

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    /// `[dim1_lo, dim1_hi, dim2_lo, dim2_hi]`
    pub bounds: [f64; 4],
    pub input: InputSetSpec,
}

impl GridCell {
    fn key(&self) -> [String; 4] {
        self.bounds.map(|v| v.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub solved: usize,
    pub failed: usize,
    pub skipped: usize,
}

/// Cell keys already written to `path`, or `None` when there is nothing to resume.
fn read_sweep_keys(path: &Path) -> Result<Option<HashSet<[String; 4]>>> {
    if !path.exists() || fs::metadata(path)?.len() == 0 {
        return Ok(None);
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    if reader.headers()?.iter().ne(SWEEP_HEADER) {
        return Err(Error::Query(format!(
            "{} exists but is not a sweep file; refusing to append",
            path.display()
        )));
    }
    let mut keys = HashSet::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != SWEEP_HEADER.len() {
            return Err(Error::Query(format!("{} has a malformed row", path.display())));
        }
        keys.insert([0, 1, 2, 3].map(|i| record[i].to_string()));
    }
    Ok(Some(keys))
}
