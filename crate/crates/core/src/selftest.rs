//! Randomized self-checks at reduced scale, plus the instance generators they use.
//!
//! Every check is seeded, so the same seed produces the same report text.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bnb::{BnbOptions, SolveStatus};
use crate::error::Result;
use crate::geometry::{max_hyperrect_distance, Hyperrectangle, Norm, Polytope, Zonotope};
use crate::linalg::Matrix;
use crate::network::FeedForwardNetwork;
use crate::problems::{
    check_containment, check_reachability, max_network_difference, optimize_convex, Containment, InputSet,
    NetworkDifferenceProblem, Objective, Reachability, Sense,
};
use crate::propagation::{propagate_with, relu_transform};
use crate::subsolvers::{simplex_lp, LinearProgram, LpOutcome};

pub const DEFAULT_SEED: u64 = 20_240_611;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..=hi)
}

/// Dense network with weights in `[-1, 1]` and biases in `[-0.5, 0.5]`.
pub fn random_network(rng: &mut impl Rng, input_dim: usize, hidden: &[usize], output_dim: usize) -> FeedForwardNetwork<f64> {
    let mut sizes = vec![input_dim];
    sizes.extend_from_slice(hidden);
    sizes.push(output_dim);
    let params = sizes
        .windows(2)
        .map(|w| {
            let data = (0..w[0] * w[1]).map(|_| uniform(rng, -1.0, 1.0)).collect();
            let bias = (0..w[1]).map(|_| uniform(rng, -0.5, 0.5)).collect();
            (Matrix::from_row_major(w[1], w[0], data).expect("sizes match"), bias)
        })
        .collect();
    FeedForwardNetwork::from_parameters(params).expect("generated layers chain")
}

/// Random hidden-layer widths: `1..=max_layers` layers of `1..=max_width` neurons.
pub fn random_widths(rng: &mut impl Rng, max_layers: usize, max_width: usize) -> Vec<usize> {
    let layers = rng.gen_range(1..=max_layers);
    (0..layers).map(|_| rng.gen_range(1..=max_width)).collect()
}

pub fn random_box(rng: &mut impl Rng, dim: usize, max_radius: f64) -> Hyperrectangle<f64> {
    let center = (0..dim).map(|_| uniform(rng, -1.0, 1.0)).collect();
    let radius = (0..dim).map(|_| uniform(rng, 0.01, max_radius)).collect();
    Hyperrectangle::new(center, radius).expect("positive radii")
}

pub fn random_zonotope(rng: &mut impl Rng, dim: usize, generators: usize) -> Zonotope<f64> {
    let center = (0..dim).map(|_| uniform(rng, -2.0, 2.0)).collect();
    let data = (0..dim * generators).map(|_| uniform(rng, -1.0, 1.0)).collect();
    Zonotope::new(center, Matrix::from_row_major(dim, generators, data).expect("sizes match")).expect("dims match")
}

/// Point of the set; roughly a third of the coordinates sit on a face so that
/// vertices get sampled too.
pub fn sample_point(rng: &mut impl Rng, set: &InputSet<f64>) -> Vec<f64> {
    let z = set.to_zonotope();
    let coords: Vec<f64> = (0..z.num_generators())
        .map(|_| match rng.gen_range(0..6) {
            0 => -1.0,
            1 => 1.0,
            _ => uniform(rng, -1.0, 1.0),
        })
        .collect();
    z.point_at(&coords).expect("coordinate count matches")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: &'static str,
    pub checks: usize,
    /// First failure, if any.
    pub failure: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "PASS {} ({} checks)", self.name, self.checks),
            Some(msg) => write!(f, "FAIL {} ({} checks): {msg}", self.name, self.checks),
        }
    }
}

struct Tally {
    name: &'static str,
    checks: usize,
    failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            failure: None,
        }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(msg());
        }
    }

    fn error(&mut self, e: crate::Error) {
        self.check(false, || format!("unexpected error: {e}"));
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            checks: self.checks,
            failure: self.failure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelftestReport {
    pub seed: u64,
    pub results: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(CheckResult::passed)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "selftest seed {}", self.seed)?;
        for r in &self.results {
            writeln!(f, "{r}")?;
        }
        let failed = self.results.iter().filter(|r| !r.passed()).count();
        write!(f, "{} of {} properties passed", self.results.len() - failed, self.results.len())
    }
}

pub fn run_selftest(seed: u64) -> SelftestReport {
    let results = vec![
        propagation_soundness(seed, 20, 10, 100, &relu_transform),
        support_agrees_with_lp(seed.wrapping_add(1), 100),
        box_distance_is_corner_maximum(seed.wrapping_add(2), 100),
        split_soundness(seed.wrapping_add(3), 50, 100),
        convex_bounds_bracket_samples(seed.wrapping_add(4), 10, 500),
        verdict_witnesses_hold(seed.wrapping_add(5), 10, 500),
        difference_dominates_samples(seed.wrapping_add(6), 5, 500),
    ];
    SelftestReport { seed, results }
}

/// Every sampled output must lie in the propagated zonotope (tolerance 1e-7).
pub fn propagation_soundness(
    seed: u64,
    networks: usize,
    cells: usize,
    samples: usize,
    relu: &dyn Fn(&Zonotope<f64>) -> Zonotope<f64>,
) -> CheckResult {
    let mut rng = rng(seed);
    let mut t = Tally::new("propagation soundness");
    for n in 0..networks {
        let dim = rng.gen_range(1..=3);
        let hidden = random_widths(&mut rng, 3, 8);
        let out_dim = rng.gen_range(1..=3);
        let net = random_network(&mut rng, dim, &hidden, out_dim);
        for _ in 0..cells {
            let cell = InputSet::Box(random_box(&mut rng, dim, 1.0));
            let z = match propagate_with(&net, &cell.to_zonotope(), relu) {
                Ok(z) => z,
                Err(e) => return fail_early(t, e),
            };
            for _ in 0..samples {
                let x = sample_point(&mut rng, &cell);
                let y = net.evaluate(&x).expect("dimensions match");
                match z.contains(&y, 1e-7) {
                    Ok(inside) => t.check(inside, || format!("network {n}: output {y:?} of input {x:?} escapes")),
                    Err(e) => t.error(e),
                }
                if t.failure.is_some() {
                    return t.finish();
                }
            }
        }
    }
    t.finish()
}

fn fail_early(mut t: Tally, e: crate::Error) -> CheckResult {
    t.error(e);
    t.finish()
}

/// Analytic support values against the simplex solver on `max/min aᵀ(G·x + c)`, `x ∈ [-1,1]^k`.
pub fn support_agrees_with_lp(seed: u64, pairs: usize) -> CheckResult {
    let mut rng = rng(seed);
    let mut t = Tally::new("support function vs LP");
    for _ in 0..pairs {
        let dim = rng.gen_range(1..=4);
        let k = rng.gen_range(1..=6);
        let z = random_zonotope(&mut rng, dim, k);
        let a: Vec<f64> = (0..dim).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
        let ga = z.generators().tr_mul_vec(&a).expect("dims match");
        let ca: f64 = a.iter().zip(z.center()).map(|(x, y)| x * y).sum();
        for sign in [1.0, -1.0] {
            let objective = ga.iter().map(|&v| -sign * v).collect();
            let lp = LinearProgram::new(objective, Matrix::zeros(0, k), vec![], vec![-1.0; k], vec![1.0; k]);
            let lp_value = match lp.and_then(|lp| simplex_lp(&lp)) {
                Ok(LpOutcome::Optimal { value, .. }) => ca - sign * value,
                Ok(other) => {
                    t.check(false, || format!("box LP returned {other:?}"));
                    continue;
                }
                Err(e) => {
                    t.error(e);
                    continue;
                }
            };
            let analytic = if sign > 0.0 {
                z.support_max(&a, 0.0)
            } else {
                z.support_min(&a, 0.0)
            }
            .expect("dims match");
            t.check((analytic - lp_value).abs() <= 1e-9, || {
                format!("analytic {analytic} vs LP {lp_value}")
            });
        }
    }
    t.finish()
}

/// Maximum of `‖h₁ − h₂‖_p` over the corners of both boxes.
pub fn corner_maximum(h1: &Hyperrectangle<f64>, h2: &Hyperrectangle<f64>, norm: Norm) -> f64 {
    let n = h1.dim();
    let corner = |h: &Hyperrectangle<f64>, mask: usize| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                h.center()[i] + s * h.radius()[i]
            })
            .collect()
    };
    let mut best = f64::NEG_INFINITY;
    for m1 in 0..1usize << n {
        let p1 = corner(h1, m1);
        for m2 in 0..1usize << n {
            best = best.max(norm.distance(&p1, &corner(h2, m2)));
        }
    }
    best
}

pub fn box_distance_is_corner_maximum(seed: u64, pairs: usize) -> CheckResult {
    let mut rng = rng(seed);
    let mut t = Tally::new("box distance vs corner enumeration");
    for _ in 0..pairs {
        let n = rng.gen_range(1..=4);
        let h1 = random_box(&mut rng, n, 1.0);
        let h2 = random_box(&mut rng, n, 1.0);
        for norm in [Norm::L1, Norm::L2, Norm::LInf] {
            let d = max_hyperrect_distance(&h1, &h2, norm).expect("dims match").value;
            let oracle = corner_maximum(&h1, &h2, norm);
            t.check(d == oracle, || format!("{norm:?}: analytic {d} vs corners {oracle}"));
        }
    }
    t.finish()
}

pub fn split_soundness(seed: u64, zonotopes: usize, samples: usize) -> CheckResult {
    let mut rng = rng(seed);
    let mut t = Tally::new("split soundness");
    for _ in 0..zonotopes {
        let dim = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=5);
        let z = random_zonotope(&mut rng, dim, k);
        let (a, b) = z.split().expect("random generators are nonzero");
        let set = InputSet::Zonotope(z);
        for _ in 0..samples {
            let p = sample_point(&mut rng, &set);
            let inside = a.contains(&p, 1e-9).and_then(|ia| Ok(ia || b.contains(&p, 1e-9)?));
            match inside {
                Ok(ok) => t.check(ok, || format!("{p:?} is in neither half")),
                Err(e) => t.error(e),
            }
        }
    }
    t.finish()
}

fn small_options(stop_gap: f64) -> BnbOptions<f64> {
    BnbOptions {
        max_iterations: 200_000,
        timeout: None,
        ..BnbOptions::with_gap(stop_gap)
    }
}

/// Certified minimum of a random affine objective: lower ≤ every sample, the
/// witness attains the reported value, and the gap closed.
pub fn convex_bounds_bracket_samples(seed: u64, instances: usize, samples: usize) -> CheckResult {
    let mut rng = rng(seed);
    let mut t = Tally::new("min-convex bounds bracket samples");
    for _ in 0..instances {
        let hidden = random_widths(&mut rng, 2, 4);
        let net = random_network(&mut rng, 2, &hidden, 2);
        let input = InputSet::Box(random_box(&mut rng, 2, 1.0));
        let a: Vec<f64> = (0..2).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
        let objective = Objective::Affine { a, b: 0.0 };
        let out = match optimize_convex(&net, &input, &objective, Sense::Minimize, &small_options(1e-4), &mut |_| {}) {
            Ok(out) => out,
            Err(e) => return fail_early(t, e),
        };
        t.check(out.status == SolveStatus::Optimal && out.gap() <= 1e-4, || {
            format!("gap {} with status {:?}", out.gap(), out.status)
        });
        let attained = objective.eval(&net.evaluate(&out.witness).expect("dims match"));
        t.check(attained == out.value, || format!("witness attains {attained}, reported {}", out.value));
        for _ in 0..samples {
            let x = sample_point(&mut rng, &input);
            let v = objective.eval(&net.evaluate(&x).expect("dims match"));
            t.check(out.lower_bound <= v + 1e-9, || {
                format!("lower bound {} above sampled value {v}", out.lower_bound)
            });
        }
    }
    t.finish()
}

/// Containment and reachability witnesses are verified by direct evaluation,
/// and no sample contradicts a "holds" or "unreachable" verdict.
pub fn verdict_witnesses_hold(seed: u64, instances: usize, samples: usize) -> CheckResult {
    let mut rng = rng(seed);
    let mut t = Tally::new("containment and reachability verdicts");
    for _ in 0..instances {
        let hidden = random_widths(&mut rng, 2, 4);
        let net = random_network(&mut rng, 2, &hidden, 1);
        let input = InputSet::Box(random_box(&mut rng, 2, 1.0));
        let lo = uniform(&mut rng, -1.5, 0.5);
        let hi = lo + uniform(&mut rng, 0.05, 1.5);
        let polytope = Polytope::new(Matrix::from_rows(&[vec![1.0], vec![-1.0]], 1).expect("rows"), vec![hi, -lo])
            .expect("one row at least");
        let opts = small_options(1e-4);
        let contained = match check_containment(&net, &input, &polytope, &opts, &mut |_| {}) {
            Ok(r) => r,
            Err(e) => return fail_early(t, e),
        };
        let reach = match check_reachability(&net, &input, &polytope, &opts, &mut |_| {}) {
            Ok(r) => r,
            Err(e) => return fail_early(t, e),
        };
        if let Containment::Violated { input: x, .. } = &contained.verdict {
            let v = polytope.violation(&net.evaluate(x).expect("dims match"));
            t.check(v > 0.0, || format!("containment witness has violation {v}"));
        }
        if let Reachability::Reachable { input: x, .. } = &reach.verdict {
            let v = polytope.violation(&net.evaluate(x).expect("dims match"));
            t.check(v < 1e-9, || format!("reachability witness has violation {v}"));
        }
        t.check(contained.verdict != Containment::Unknown, || "containment undecided".into());
        t.check(reach.verdict != Reachability::Unknown, || "reachability undecided".into());
        for _ in 0..samples {
            let x = sample_point(&mut rng, &input);
            let v = polytope.violation(&net.evaluate(&x).expect("dims match"));
            if contained.verdict == Containment::Holds {
                t.check(v <= 1e-9, || format!("containment holds but {x:?} violates by {v}"));
            }
            if reach.verdict == Reachability::Unreachable {
                t.check(v > 0.0, || format!("unreachable but {x:?} lands in the polytope"));
            }
        }
    }
    t.finish()
}

pub fn difference_dominates_samples(seed: u64, instances: usize, samples: usize) -> CheckResult {
    let mut rng = rng(seed);
    let mut t = Tally::new("network difference dominates samples");
    for _ in 0..instances {
        let widths = random_widths(&mut rng, 1, 3);
        let net1 = random_network(&mut rng, 2, &widths, 1);
        let widths = random_widths(&mut rng, 1, 3);
        let net2 = random_network(&mut rng, 2, &widths, 1);
        let input = InputSet::Box(random_box(&mut rng, 2, 0.5));
        let problem = NetworkDifferenceProblem::new(net1, net2, Norm::L1).expect("dims match");
        let out = match max_network_difference(&problem, &input, &small_options(0.1), &mut |_| {}) {
            Ok(out) => out,
            Err(e) => return fail_early(t, e),
        };
        for _ in 0..samples {
            let x = sample_point(&mut rng, &input);
            let d = Norm::L1.distance(
                &problem.net1.evaluate(&x).expect("dims match"),
                &problem.net2.evaluate(&x).expect("dims match"),
            );
            t.check(d <= out.upper_bound + 1e-9, || {
                format!("sampled difference {d} above certified {}", out.upper_bound)
            });
        }
    }
    t.finish()
}

/// Sampled minimum of `g(net(x))`, used as a sanity bound by callers.
pub fn sampled_minimum(
    rng: &mut impl Rng,
    net: &FeedForwardNetwork<f64>,
    input: &InputSet<f64>,
    objective: &Objective<f64>,
    samples: usize,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let x = sample_point(rng, input);
        best = best.min(objective.eval(&net.evaluate(&x)?));
    }
    Ok(best)
}
