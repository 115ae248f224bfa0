//! Independent reference computations for the integration and acceptance tests.
//!
//! Nothing here calls the solver, the propagation code or the LP solver: exact
//! answers come from planar geometry (two-input networks are affine on convex
//! polygons), facet enumeration, vertex enumeration and dense grids.

#![allow(dead_code)]

use zonopt::{FeedForwardNetwork, Zonotope};

pub type P2 = [f64; 2];

fn dot2(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Convex polygon with vertices in order.
#[derive(Debug, Clone)]
pub struct Polygon(pub Vec<P2>);

impl Polygon {
    pub fn from_box(lo: P2, hi: P2) -> Self {
        Polygon(vec![[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    }

    pub fn area(&self) -> f64 {
        let n = self.0.len();
        if n < 3 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..n {
            let (p, q) = (self.0[i], self.0[(i + 1) % n]);
            s += p[0] * q[1] - q[0] * p[1];
        }
        s.abs() / 2.0
    }

    /// The part where `a·x + c ≥ 0`.
    pub fn clip(&self, a: P2, c: f64) -> Polygon {
        let n = self.0.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let (p, q) = (self.0[i], self.0[(i + 1) % n]);
            let (fp, fq) = (dot2(a, p) + c, dot2(a, q) + c);
            if fp >= 0.0 {
                out.push(p);
            }
            if (fp > 0.0 && fq < 0.0) || (fp < 0.0 && fq > 0.0) {
                let t = fp / (fp - fq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        Polygon(out)
    }

    pub fn is_empty(&self) -> bool {
        self.area() <= 1e-18
    }

    pub fn edges(&self) -> impl Iterator<Item = (P2, P2)> + '_ {
        let n = self.0.len();
        (0..n).map(move |i| (self.0[i], self.0[(i + 1) % n]))
    }

    /// Membership with an absolute slack, orientation-independent.
    pub fn contains(&self, p: P2, tol: f64) -> bool {
        let mut sign = 0.0;
        for (a, b) in self.edges() {
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            if len == 0.0 {
                continue;
            }
            let cross = ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])) / len;
            if cross.abs() <= tol {
                continue;
            }
            if sign == 0.0 {
                sign = cross.signum();
            } else if cross.signum() != sign {
                return false;
            }
        }
        true
    }
}

/// A region where the network is affine: `y = A·x + b` on `poly`.
#[derive(Debug, Clone)]
pub struct Piece {
    pub poly: Polygon,
    pub a: Vec<P2>,
    pub b: Vec<f64>,
}

impl Piece {
    pub fn eval(&self, x: P2) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(r, c)| dot2(*r, x) + c).collect()
    }
}

/// Splits `poly` into activation regions of a two-input network.
pub fn linear_pieces(net: &FeedForwardNetwork<f64>, poly: Polygon) -> Vec<Piece> {
    assert_eq!(net.input_dim(), 2);
    let mut out = Vec::new();
    let identity = (vec![[1.0, 0.0], [0.0, 1.0]], vec![0.0, 0.0]);
    walk_layer(net, 0, poly, identity.0, identity.1, &mut out);
    out
}

fn walk_layer(net: &FeedForwardNetwork<f64>, layer: usize, poly: Polygon, m: Vec<P2>, c: Vec<f64>, out: &mut Vec<Piece>) {
    let Some(l) = net.layers().get(layer) else {
        out.push(Piece { poly, a: m, b: c });
        return;
    };
    let rows = l.weights.nrows();
    let mut pm = Vec::with_capacity(rows);
    let mut pc = Vec::with_capacity(rows);
    for i in 0..rows {
        let w = l.weights.row(i);
        let mut r = [0.0, 0.0];
        let mut s = l.bias[i];
        for (k, &wk) in w.iter().enumerate() {
            r[0] += wk * m[k][0];
            r[1] += wk * m[k][1];
            s += wk * c[k];
        }
        pm.push(r);
        pc.push(s);
    }
    if l.activation == zonopt::Activation::Identity {
        walk_layer(net, layer + 1, poly, pm, pc, out);
    } else {
        walk_neuron(net, layer, 0, poly, pm, pc, out);
    }
}

fn walk_neuron(
    net: &FeedForwardNetwork<f64>,
    layer: usize,
    j: usize,
    poly: Polygon,
    mut m: Vec<P2>,
    mut c: Vec<f64>,
    out: &mut Vec<Piece>,
) {
    if j == m.len() {
        walk_layer(net, layer + 1, poly, m, c, out);
        return;
    }
    let (a, s) = (m[j], c[j]);
    let values: Vec<f64> = poly.0.iter().map(|&v| dot2(a, v) + s).collect();
    if values.iter().all(|&v| v >= 0.0) {
        walk_neuron(net, layer, j + 1, poly, m, c, out);
        return;
    }
    if values.iter().all(|&v| v <= 0.0) {
        m[j] = [0.0, 0.0];
        c[j] = 0.0;
        walk_neuron(net, layer, j + 1, poly, m, c, out);
        return;
    }
    let pos = poly.clip(a, s);
    let neg = poly.clip([-a[0], -a[1]], -s);
    if !pos.is_empty() {
        walk_neuron(net, layer, j + 1, pos, m.clone(), c.clone(), out);
    }
    if !neg.is_empty() {
        m[j] = [0.0, 0.0];
        c[j] = 0.0;
        walk_neuron(net, layer, j + 1, neg, m, c, out);
    }
}

/// Affine function `g·x + c` of the two inputs.
pub type Affine2 = (P2, f64);

fn max_at(fns: &[Affine2], x: P2) -> f64 {
    fns.iter().map(|(g, c)| dot2(*g, x) + c).fold(f64::NEG_INFINITY, f64::max)
}

/// Exact `min_{x∈poly} max_i f_i(x)`. The minimizer of this two-variable LP sits
/// where three of {polygon edges, f_i = f_j breakpoints} meet, so it is among
/// the vertices, edge/breakpoint crossings and breakpoint/breakpoint crossings.
pub fn min_max_affine(poly: &Polygon, fns: &[Affine2]) -> (f64, P2) {
    let mut best = (f64::INFINITY, [f64::NAN, f64::NAN]);
    let mut consider = |x: P2| {
        let v = max_at(fns, x);
        if v < best.0 {
            best = (v, x);
        }
    };
    for &v in &poly.0 {
        consider(v);
    }
    let lines: Vec<Affine2> = (0..fns.len())
        .flat_map(|i| (i + 1..fns.len()).map(move |j| (i, j)))
        .map(|(i, j)| {
            let (gi, ci) = fns[i];
            let (gj, cj) = fns[j];
            ([gi[0] - gj[0], gi[1] - gj[1]], ci - cj)
        })
        .filter(|(g, _)| g[0] != 0.0 || g[1] != 0.0)
        .collect();
    for &(g, c) in &lines {
        for (p, q) in poly.edges() {
            let (fp, fq) = (dot2(g, p) + c, dot2(g, q) + c);
            if (fp <= 0.0 && fq >= 0.0) || (fp >= 0.0 && fq <= 0.0) {
                let t = if fp == fq { 0.0 } else { fp / (fp - fq) };
                consider([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
    }
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let ((g1, c1), (g2, c2)) = (lines[i], lines[j]);
            let det = g1[0] * g2[1] - g1[1] * g2[0];
            if det.abs() < 1e-14 {
                continue;
            }
            let x = [(-c1 * g2[1] + c2 * g1[1]) / det, (-g1[0] * c2 + g2[0] * c1) / det];
            if poly.contains(x, 1e-12) {
                consider(x);
            }
        }
    }
    best
}

/// Pulls an output-space affine function `w·y + s` back through `y = A·x + b`.
pub fn pull_back(piece: &Piece, w: &[f64], s: f64) -> Affine2 {
    let mut g = [0.0, 0.0];
    let mut c = s;
    for (k, &wk) in w.iter().enumerate() {
        g[0] += wk * piece.a[k][0];
        g[1] += wk * piece.a[k][1];
        c += wk * piece.b[k];
    }
    (g, c)
}

/// Output-space description of a convex piecewise-affine objective as a max of affine terms.
#[derive(Debug, Clone)]
pub enum PlObjective {
    Affine { a: Vec<f64>, b: f64 },
    /// `‖y − target‖∞`
    LInf { target: Vec<f64> },
    /// `max_i (A_i·y − b_i)`, optionally clamped at 0.
    MaxRows { rows: Vec<Vec<f64>>, rhs: Vec<f64>, clamp_zero: bool },
}

impl PlObjective {
    pub fn terms(&self, piece: &Piece) -> Vec<Affine2> {
        match self {
            PlObjective::Affine { a, b } => vec![pull_back(piece, a, *b)],
            PlObjective::LInf { target } => {
                let n = target.len();
                let mut out = Vec::with_capacity(2 * n);
                for i in 0..n {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    out.push(pull_back(piece, &e, -target[i]));
                    e[i] = -1.0;
                    out.push(pull_back(piece, &e, target[i]));
                }
                out
            }
            PlObjective::MaxRows { rows, rhs, clamp_zero } => {
                let mut out: Vec<Affine2> = rows.iter().zip(rhs).map(|(r, &b)| pull_back(piece, r, -b)).collect();
                if *clamp_zero {
                    out.push(([0.0, 0.0], 0.0));
                }
                out
            }
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            PlObjective::Affine { a, b } => a.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() + b,
            PlObjective::LInf { target } => y.iter().zip(target).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max),
            PlObjective::MaxRows { rows, rhs, clamp_zero } => {
                let m = rows
                    .iter()
                    .zip(rhs)
                    .map(|(r, b)| r.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() - b)
                    .fold(f64::NEG_INFINITY, f64::max);
                if *clamp_zero {
                    m.max(0.0)
                } else {
                    m
                }
            }
        }
    }
}

/// Exact global minimum of a convex piecewise-affine objective over a box.
pub fn exact_minimum(net: &FeedForwardNetwork<f64>, lo: P2, hi: P2, objective: &PlObjective) -> (f64, P2) {
    linear_pieces(net, Polygon::from_box(lo, hi))
        .iter()
        .map(|piece| min_max_affine(&piece.poly, &objective.terms(piece)))
        .fold((f64::INFINITY, [f64::NAN; 2]), |a, b| if b.0 < a.0 { b } else { a })
}

/// Exact global maximum of a convex objective over a box: attained at region vertices.
pub fn exact_maximum(net: &FeedForwardNetwork<f64>, lo: P2, hi: P2, objective: impl Fn(&[f64]) -> f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for piece in linear_pieces(net, Polygon::from_box(lo, hi)) {
        for &v in &piece.poly.0 {
            best = best.max(objective(&piece.eval(v)));
        }
    }
    best
}

/// Exact `max_x ‖N₁(x) − N₂(x)‖_p` over a box, from the common refinement of both
/// networks' regions (the difference is affine on each overlap, so its norm
/// peaks at a vertex).
pub fn exact_max_difference(
    net1: &FeedForwardNetwork<f64>,
    net2: &FeedForwardNetwork<f64>,
    lo: P2,
    hi: P2,
    norm: impl Fn(&[f64]) -> f64,
) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for p1 in linear_pieces(net1, Polygon::from_box(lo, hi)) {
        for p2 in linear_pieces(net2, p1.poly.clone()) {
            for &v in &p2.poly.0 {
                let d: Vec<f64> = p1.eval(v).iter().zip(p2.eval(v)).map(|(a, b)| a - b).collect();
                best = best.max(norm(&d));
            }
        }
    }
    best
}

/// Facet description of `Z ⊕ [-tol, tol]^n` for `n ≤ 3`. Every hyperplane spanned by
/// `n − 1` generators gives a valid support inequality, and the facets are among
/// them, so the intersection is exact. The padding generators make the set
/// full-dimensional, matching an ∞-norm membership slack of `tol`.
pub struct ZonotopeFacets {
    center: Vec<f64>,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl ZonotopeFacets {
    pub fn new(z: &Zonotope<f64>, tol: f64) -> Self {
        let n = z.dim();
        assert!((1..=3).contains(&n), "facet enumeration supports dimensions 1 to 3");
        let mut gens: Vec<Vec<f64>> = (0..z.num_generators())
            .map(|j| z.generators().column(j).collect::<Vec<_>>())
            .filter(|g| g.iter().any(|&v| v != 0.0))
            .collect();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = tol;
            gens.push(e);
        }
        let mut normals = Vec::new();
        match n {
            1 => normals.push(vec![1.0]),
            2 => {
                for g in &gens {
                    normals.push(vec![-g[1], g[0]]);
                }
            }
            _ => {
                for i in 0..gens.len() {
                    for j in i + 1..gens.len() {
                        let (a, b) = (&gens[i], &gens[j]);
                        let cross = vec![
                            a[1] * b[2] - a[2] * b[1],
                            a[2] * b[0] - a[0] * b[2],
                            a[0] * b[1] - a[1] * b[0],
                        ];
                        let norm = cross.iter().map(|v| v * v).sum::<f64>().sqrt();
                        let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt() * b.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if norm > 1e-12 * scale {
                            normals.push(cross.iter().map(|v| v / norm).collect());
                        }
                    }
                }
            }
        }
        let offsets = normals
            .iter()
            .map(|nu| gens.iter().map(|g| nu.iter().zip(g).map(|(a, b)| a * b).sum::<f64>().abs()).sum())
            .collect();
        Self {
            center: z.center().to_vec(),
            normals,
            offsets,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.normals.iter().zip(&self.offsets).all(|(nu, &h)| {
            let v: f64 = nu.iter().zip(p).zip(&self.center).map(|((a, x), c)| a * (x - c)).sum();
            v.abs() <= h * (1.0 + 1e-12)
        })
    }
}

/// Brute-force LP: `min cᵀx` s.t. `A·x ≤ b`, `l ≤ x ≤ u` with finite bounds,
/// by enumerating every basic point. Returns `None` when infeasible.
pub fn lp_by_vertices(c: &[f64], a: &[Vec<f64>], b: &[f64], l: &[f64], u: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e.clone(), u[j]));
        e[j] = -1.0;
        rows.push((e, -l[j]));
    }
    let feasible = |x: &[f64]| {
        rows.iter()
            .all(|(r, rhs)| r.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= rhs + 1e-9 * (1.0 + rhs.abs()))
    };
    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let m: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].0.clone()).collect();
        let rhs: Vec<f64> = subset.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = solve_dense(m, rhs) {
            if feasible(&x) {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        if !next_combination(&mut subset, rows.len()) {
            break;
        }
    }
    best
}

fn next_combination(idx: &mut [usize], total: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < total - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting; `None` for (near-)singular systems.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for k in col..n {
                m[r][k] -= f * m[col][k];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (rhs[i] - s) / m[i][i];
    }
    Some(x)
}

/// `∏ ‖W_k‖_∞` over the layers: an ∞-norm Lipschitz constant of the network.
pub fn lipschitz_inf(net: &FeedForwardNetwork<f64>) -> f64 {
    net.layers()
        .iter()
        .map(|l| {
            (0..l.weights.nrows())
                .map(|i| l.weights.row(i).iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .product()
}

/// Evenly spaced points from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| if i + 1 == points { hi } else { lo + (hi - lo) * i as f64 / (points - 1) as f64 })
        .collect()
}
