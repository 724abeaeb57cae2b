//! Spectral flow of a continuous family of unitary matrices through a point
//! `e^{iθ}` of the unit circle.
//!
//! A family is sampled on a grid and refined until the eigenphases of
//! adjacent nodes are within `step` of each other (circle Hausdorff
//! distance). The parameter interval is then cut greedily into maximal
//! pieces whose eigenphases leave a free arc; on a piece with free angle
//! `θ₀` the flow is `N(θ, θ₀; U(end)) - N(θ, θ₀; U(start))`, and the pieces
//! are summed.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_unitary, ComplexMatrix};

/// Clearance required between an eigenphase and a counting endpoint, and
/// clustering tolerance for multiplicities.
pub const PHASE_TOL: f64 = 1e-8;
pub const DEFAULT_STEP: f64 = 1e-2;
pub const DEFAULT_NODE_BUDGET: usize = 1 << 16;

/// Distance on the circle `ℝ / 2πℤ`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Signed representative of `x` in `(-π, π]`.
fn wrap_signed(x: f64) -> f64 {
    let t = x.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < TAU) {
        return Err(Error::AngleOutOfRange(theta));
    }
    Ok(())
}

/// Half-open arc count `#{φ ∈ [lo, hi)}` for `lo ≤ hi`, negated when
/// `lo > hi`. No clearance check.
fn count_arc(phases: &[f64], lo: f64, hi: f64) -> i64 {
    if lo <= hi {
        phases.iter().filter(|&&p| p >= lo && p < hi).count() as i64
    } else {
        -count_arc(phases, hi, lo)
    }
}

/// `N(e^{iθ₁}, e^{iθ₂})` from eigenphases in `[0, 2π)`: the number of phases
/// in `[θ₁, θ₂)`, antisymmetric in the arguments.
pub fn counting_between_phases(phases: &[f64], theta1: f64, theta2: f64, phase_tol: f64) -> Result<i64> {
    check_angle(theta1)?;
    check_angle(theta2)?;
    for &p in phases {
        for endpoint in [theta1, theta2] {
            if circle_distance(p, endpoint) < phase_tol {
                return Err(Error::AmbiguousEndpoint {
                    phase: p,
                    endpoint,
                    tol: phase_tol,
                });
            }
        }
    }
    Ok(count_arc(phases, theta1, theta2))
}

/// Counting function on the eigenvalues of a unitary matrix.
pub fn counting_between(u: &ComplexMatrix, theta1: f64, theta2: f64) -> Result<i64> {
    counting_between_phases(&eig_unitary(u)?, theta1, theta2, PHASE_TOL)
}

/// One grid node of a sampled family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyNode {
    pub lambda: f64,
    /// Eigenphases in `[0, 2π)`, ascending, with multiplicity.
    pub phases: Vec<f64>,
}

/// Serialized node: distinct phases with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub lambda: f64,
    pub phases: Vec<f64>,
    pub mults: Vec<usize>,
}

impl FamilyNode {
    /// Groups phases closer than `tol` (also across the cut at `0 ≡ 2π`).
    pub fn record(&self, tol: f64) -> NodeRecord {
        let mut phases: Vec<f64> = Vec::new();
        let mut mults: Vec<usize> = Vec::new();
        for &p in &self.phases {
            match phases.last() {
                Some(&last) if p - last < tol => *mults.last_mut().expect("paired") += 1,
                _ => {
                    phases.push(p);
                    mults.push(1);
                }
            }
        }
        if phases.len() > 1 && circle_distance(phases[0], *phases.last().expect("nonempty")) < tol {
            let m = mults.pop().expect("nonempty");
            phases.pop();
            mults[0] += m;
        }
        NodeRecord {
            lambda: self.lambda,
            phases,
            mults,
        }
    }
}

/// Circle Hausdorff distance between two phase multisets.
pub fn hausdorff_circle(a: &[f64], b: &[f64]) -> f64 {
    let one_way = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|&p| y.iter().map(|&q| circle_distance(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    one_way(a, b).max(one_way(b, a))
}

/// A frozen sample `{(λ_j, Θ_j)}` of a unitary family on `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitaryFamilySample {
    pub nodes: Vec<FamilyNode>,
}

impl UnitaryFamilySample {
    pub fn interval(&self) -> (f64, f64) {
        (self.nodes[0].lambda, self.nodes[self.nodes.len() - 1].lambda)
    }

    /// Largest phase movement between adjacent nodes.
    pub fn max_step(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| hausdorff_circle(&w[0].phases, &w[1].phases))
            .fold(0.0, f64::max)
    }

    pub fn records(&self, tol: f64) -> Vec<NodeRecord> {
        self.nodes.iter().map(|n| n.record(tol)).collect()
    }
}

/// Free angle for a run of nodes, or `None` when no arc is wide enough.
pub type GapAngle = Option<f64>;

/// Midpoint of the largest arc of `(0, 2π)` that stays `step` away from
/// every eigenphase of every node; `None` if that arc is narrower than
/// `3·step`.
pub fn find_gap_angle(nodes: &[FamilyNode], step: f64) -> GapAngle {
    let mut points: Vec<f64> = nodes.iter().flat_map(|n| n.phases.iter().copied()).collect();
    points.push(0.0);
    points.push(TAU);
    points.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    for w in points.windows(2) {
        let lo = w[0] + step;
        let hi = w[1] - step;
        let width = hi - lo;
        if best.map_or(true, |(bw, _)| width > bw) {
            best = Some((width, 0.5 * (lo + hi)));
        }
    }
    match best {
        Some((width, mid)) if width >= 3.0 * step => Some(mid),
        _ => None,
    }
}

/// Options for the flow engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub step: f64,
    pub phase_tol: f64,
    pub node_budget: usize,
    pub initial_nodes: usize,
    /// How often `step` may be halved when a single grid step has no gap.
    pub max_halvings: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            phase_tol: PHASE_TOL,
            node_budget: DEFAULT_NODE_BUDGET,
            initial_nodes: 17,
            max_halvings: 10,
        }
    }
}

/// One piece of the partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subinterval {
    pub lo: f64,
    pub hi: f64,
    pub gap_angle: f64,
    pub flow: i64,
}

/// A grid step across which the count against the gap angle changed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub lo: f64,
    pub hi: f64,
    /// `+1` anticlockwise, `-1` clockwise (net over the step).
    pub direction: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub theta: f64,
    pub flow: i64,
    pub partition: Vec<Subinterval>,
    pub crossings_log: Vec<Crossing>,
    pub step: f64,
    pub nodes: usize,
}

/// Flow on nodes `i..=j` against `theta`, using the free angle `theta0`.
pub fn flow_on_piece(sample: &UnitaryFamilySample, i: usize, j: usize, theta: f64, theta0: f64) -> i64 {
    let n = &sample.nodes;
    count_arc(&n[j].phases, theta, theta0) - count_arc(&n[i].phases, theta, theta0)
}

/// Flow over an explicit partition given by node indices
/// `cuts = [0, c₁, …, M]`. Every piece must admit a gap angle.
pub fn flow_over_partition(sample: &UnitaryFamilySample, theta: f64, cuts: &[usize], step: f64) -> Result<i64> {
    let mut total = 0;
    for w in cuts.windows(2) {
        let (i, j) = (w[0], w[1]);
        let theta0 = find_gap_angle(&sample.nodes[i..=j], step).ok_or_else(|| no_gap(sample, i, j, step))?;
        total += flow_on_piece(sample, i, j, theta, theta0);
    }
    Ok(total)
}

fn no_gap(sample: &UnitaryFamilySample, i: usize, j: usize, step: f64) -> Error {
    Error::RefinementExhausted {
        budget: sample.nodes.len(),
        lo: sample.nodes[i].lambda,
        hi: sample.nodes[j].lambda,
        movement: step,
    }
}

/// Largest `j ≥ i + 1` such that nodes `i..=j` admit a gap angle, or `None`
/// if even `i..=i+1` does not. Gap existence is monotone in `j`, so galloping
/// plus bisection suffices.
pub fn maximal_piece(sample: &UnitaryFamilySample, i: usize, step: f64) -> Option<usize> {
    let last = sample.nodes.len() - 1;
    let ok = |j: usize| find_gap_angle(&sample.nodes[i..=j], step).is_some();
    if i >= last || !ok(i + 1) {
        return None;
    }
    let mut good = i + 1;
    let mut width = 1;
    loop {
        let probe = (good + width).min(last);
        if probe == good {
            return Some(good);
        }
        if ok(probe) {
            good = probe;
            width *= 2;
        } else {
            let mut bad = probe;
            while bad - good > 1 {
                let mid = good + (bad - good) / 2;
                if ok(mid) {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            return Some(good);
        }
    }
}

/// Greedy evaluation on a frozen sample. Fails if some grid step admits no
/// gap angle at this `step`.
pub fn flow_greedy(sample: &UnitaryFamilySample, theta: f64, step: f64, phase_tol: f64) -> Result<FlowResult> {
    check_angle(theta)?;
    let nodes = &sample.nodes;
    if nodes.len() < 2 {
        return Err(Error::InvalidArgument("family needs at least two nodes".into()));
    }
    for end in [&nodes[0], &nodes[nodes.len() - 1]] {
        for &p in &end.phases {
            if circle_distance(p, theta) < phase_tol {
                return Err(Error::AmbiguousEndpoint {
                    phase: p,
                    endpoint: theta,
                    tol: phase_tol,
                });
            }
        }
    }
    let mut partition = Vec::new();
    let mut crossings_log = Vec::new();
    let mut flow = 0;
    let mut i = 0;
    let last = nodes.len() - 1;
    while i < last {
        let j = maximal_piece(sample, i, step).ok_or_else(|| no_gap(sample, i, i + 1, step))?;
        let theta0 = find_gap_angle(&nodes[i..=j], step).expect("checked by maximal_piece");
        let piece = flow_on_piece(sample, i, j, theta, theta0);
        for s in i..j {
            let d = flow_on_piece(sample, s, s + 1, theta, theta0);
            if d != 0 {
                crossings_log.push(Crossing {
                    lo: nodes[s].lambda,
                    hi: nodes[s + 1].lambda,
                    direction: d,
                });
            }
        }
        partition.push(Subinterval {
            lo: nodes[i].lambda,
            hi: nodes[j].lambda,
            gap_angle: theta0,
            flow: piece,
        });
        flow += piece;
        i = j;
    }
    Ok(FlowResult {
        theta,
        flow,
        partition,
        crossings_log,
        step,
        nodes: nodes.len(),
    })
}

/// Signed crossing count by tracking phases between adjacent nodes: phases
/// are matched by the cyclic shift of the sorted lists with the smallest
/// largest displacement, and each matched pair moving across `theta`
/// contributes `+1` (anticlockwise) or `-1` (clockwise).
pub fn naive_crossing_count(sample: &UnitaryFamilySample, theta: f64) -> i64 {
    let mut total = 0;
    for w in sample.nodes.windows(2) {
        let (a, b) = (&w[0].phases, &w[1].phases);
        let n = a.len();
        if n == 0 || b.len() != n {
            continue;
        }
        let mut best_shift = 0;
        let mut best_cost = f64::INFINITY;
        for shift in 0..n {
            let cost = (0..n)
                .map(|i| circle_distance(a[i], b[(i + shift) % n]))
                .fold(0.0, f64::max);
            if cost < best_cost {
                best_cost = cost;
                best_shift = shift;
            }
        }
        for i in 0..n {
            let p = a[i];
            let q = b[(i + best_shift) % n];
            let start = wrap_signed(p - theta);
            let end = wrap_signed(q - theta);
            if start < 0.0 && end >= 0.0 && end - start < PI {
                total += 1;
            } else if end < 0.0 && start >= 0.0 && start - end < PI {
                total -= 1;
            }
        }
    }
    total
}

/// Family source: the unitary matrix at a parameter value.
pub type Source<'a> = Box<dyn FnMut(f64) -> Result<ComplexMatrix> + 'a>;

/// A sampled family together with the means to evaluate it anywhere.
pub struct UnitaryFamily<'a> {
    source: Source<'a>,
    sample: UnitaryFamilySample,
}

impl<'a> UnitaryFamily<'a> {
    /// Samples `initial_nodes ≥ 2` equally spaced points of `[a, b]`.
    pub fn new(a: f64, b: f64, initial_nodes: usize, source: impl FnMut(f64) -> Result<ComplexMatrix> + 'a) -> Result<Self> {
        if !(a < b) || initial_nodes < 2 {
            return Err(Error::InvalidArgument(format!(
                "family needs a < b and at least two nodes (got [{a}, {b}], {initial_nodes})"
            )));
        }
        let mut source: Source<'a> = Box::new(source);
        let mut nodes = Vec::with_capacity(initial_nodes);
        for j in 0..initial_nodes {
            let lambda = if j + 1 == initial_nodes {
                b
            } else {
                a + (b - a) * j as f64 / (initial_nodes - 1) as f64
            };
            nodes.push(FamilyNode {
                lambda,
                phases: eig_unitary(&source(lambda)?)?,
            });
        }
        Ok(Self {
            source,
            sample: UnitaryFamilySample { nodes },
        })
    }

    pub fn sample(&self) -> &UnitaryFamilySample {
        &self.sample
    }

    pub fn into_sample(self) -> UnitaryFamilySample {
        self.sample
    }

    /// Bisects grid steps until every adjacent pair moves by at most `step`.
    pub fn refine(&mut self, step: f64, node_budget: usize) -> Result<&UnitaryFamilySample> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("step = {step} must be positive")));
        }
        let old = std::mem::take(&mut self.sample.nodes);
        let mut out: Vec<FamilyNode> = Vec::with_capacity(old.len());
        let mut pending: Vec<FamilyNode> = old.into_iter().rev().collect();
        let mut current = pending.pop().expect("at least two nodes");
        while let Some(next) = pending.pop() {
            let movement = hausdorff_circle(&current.phases, &next.phases);
            if movement <= step {
                out.push(std::mem::replace(&mut current, next));
                continue;
            }
            let total = out.len() + pending.len() + 2;
            let mid = 0.5 * (current.lambda + next.lambda);
            if total >= node_budget || !(mid > current.lambda && mid < next.lambda) {
                let (lo, hi) = (current.lambda, next.lambda);
                out.push(current);
                out.push(next);
                out.extend(pending.into_iter().rev());
                self.sample.nodes = out;
                return Err(Error::RefinementExhausted {
                    budget: node_budget,
                    lo,
                    hi,
                    movement,
                });
            }
            let phases = eig_unitary(&(self.source)(mid)?)?;
            pending.push(next);
            pending.push(FamilyNode { lambda: mid, phases });
        }
        out.push(current);
        self.sample.nodes = out;
        Ok(&self.sample)
    }

    /// Refines, then evaluates the flow greedily, halving `step` whenever a
    /// single grid step admits no gap angle.
    pub fn spectral_flow(&mut self, theta: f64, opts: &FlowOptions) -> Result<FlowResult> {
        check_angle(theta)?;
        let mut step = opts.step;
        let mut last_err = None;
        for _ in 0..=opts.max_halvings {
            self.refine(step, opts.node_budget)?;
            match flow_greedy(&self.sample, theta, step, opts.phase_tol) {
                Ok(r) => return Ok(r),
                Err(e @ Error::RefinementExhausted { .. }) => {
                    last_err = Some(e);
                    step *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        Err(last_err.expect("at least one attempt"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn scalar(phase: f64) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&[Complex64::from_polar(1.0, phase)])
    }

    #[test]
    fn counting_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(counting_between(&i2, 1.0, 2.0).unwrap(), 0);
        let u = ComplexMatrix::from_diagonal(&[
            Complex64::from_polar(1.0, PI / 2.0),
            Complex64::from_polar(1.0, PI),
        ]);
        assert_eq!(counting_between(&u, 1.0, 3.0).unwrap(), 1);
        assert_eq!(counting_between(&u, 3.0, 1.0).unwrap(), -1);
        assert!(matches!(
            counting_between(&u, PI, 4.0),
            Err(Error::AmbiguousEndpoint { .. })
        ));
        assert!(matches!(counting_between(&u, 0.0, 1.0), Err(Error::AngleOutOfRange(_))));
    }

    #[test]
    fn constant_identity_gap_is_pi() {
        let n = FamilyNode {
            lambda: 0.0,
            phases: vec![0.0, 0.0],
        };
        let theta0 = find_gap_angle(&[n.clone(), n], 0.01).unwrap();
        assert!((theta0 - PI).abs() < 1e-12);
    }

    #[test]
    fn scalar_sweep_gap_is_outside_swept_arc() {
        let mut fam = UnitaryFamily::new(0.1, 0.2, 5, |l| Ok(scalar(l))).unwrap();
        let s = fam.refine(0.01, 1000).unwrap();
        let theta0 = find_gap_angle(&s.nodes, 0.01).unwrap();
        assert!(theta0 > 0.2 + 0.01);
    }

    #[test]
    fn anticlockwise_and_clockwise_crossings() {
        let opts = FlowOptions::default();
        let mut up = UnitaryFamily::new(0.0, 2.0, 3, |l| Ok(scalar(PI * l))).unwrap();
        let r = up.spectral_flow(PI, &opts).unwrap();
        assert_eq!(r.flow, 1);
        assert_eq!(naive_crossing_count(up.sample(), PI), 1);
        let mut down = UnitaryFamily::new(0.0, 2.0, 3, |l| Ok(scalar(PI * (2.0 - l)))).unwrap();
        assert_eq!(down.spectral_flow(PI, &opts).unwrap().flow, -1);
    }

    #[test]
    fn refinement_reaches_step() {
        let mut fam = UnitaryFamily::new(0.0, 1.0, 2, |l| Ok(scalar(l))).unwrap();
        let s = fam.refine(0.01, 1 << 16).unwrap();
        assert!(s.nodes.len() >= 100);
        assert!(s.max_step() <= 0.01);
    }

    #[test]
    fn refinement_budget_is_reported() {
        let mut fam = UnitaryFamily::new(0.0, 1.0, 2, |l| Ok(scalar(if l < 0.5 { 0.0 } else { 2.0 }))).unwrap();
        assert!(matches!(
            fam.refine(0.01, 64),
            Err(Error::RefinementExhausted { .. })
        ));
    }

    #[test]
    fn records_merge_degenerate_phases() {
        let n = FamilyNode {
            lambda: 0.5,
            phases: vec![0.0, 1.0, 1.0 + 1e-12, TAU - 1e-12],
        };
        let r = n.record(1e-8);
        assert_eq!(r.phases, vec![0.0, 1.0]);
        assert_eq!(r.mults, vec![2, 2]);
    }
}
