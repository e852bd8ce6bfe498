//! Randomized stopping policy and least favorable distribution extracted
//! from a [`CostTable`], plus exact evaluation and the optimality checks.
//!
//! Every node carries `e_enter`, the expected remaining sample size on
//! arrival, chosen from the superdifferential of its slice at the node's
//! `z0`. A node continues surely below its threshold, stops above it and
//! randomizes exactly at it; the continuation probability is
//! `e_enter / e_continue`.

use std::collections::{HashMap, VecDeque};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bellman::{CostTable, DesignState, NominalModel, Threshold};
use crate::rational::{self, Rational};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StopDecision {
    H1,
    H2,
    /// `lambda1 z1 = lambda2 z2`: decide H1 with probability 1/2.
    Tie,
}

impl StopDecision {
    pub fn from_costs(model: &NominalModel, counts: &[u32]) -> StopDecision {
        StopDecision::for_state(model, &model.state(counts))
    }

    pub fn for_state(model: &NominalModel, s: &DesignState) -> StopDecision {
        let a = &model.lambda1 * &s.z1;
        let b = &model.lambda2 * &s.z2;
        match a.cmp(&b) {
            std::cmp::Ordering::Greater => StopDecision::H1,
            std::cmp::Ordering::Less => StopDecision::H2,
            std::cmp::Ordering::Equal => StopDecision::Tie,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            StopDecision::H1 => "H1",
            StopDecision::H2 => "H2",
            StopDecision::Tie => "tie",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyNode {
    pub parent: Option<usize>,
    /// Symbol observed on the edge from the parent.
    pub symbol: Option<usize>,
    pub depth: usize,
    pub counts: Vec<u32>,
    pub z0: Rational,
    pub e_enter: u64,
    /// `1 + c`, where `c` is the value every child enters with. `None` at
    /// sure stops.
    pub e_continue: Option<u64>,
    pub p_continue: Rational,
    /// Decision taken when stopping; `None` when the node never stops.
    pub stop_decision: Option<StopDecision>,
    /// Conditional least favorable distribution of the next symbol.
    pub lfd: Option<Vec<Rational>>,
    /// Children in symbol order; empty at sure stops and at the display cut.
    pub children: Vec<usize>,
}

impl PolicyNode {
    pub fn continues(&self) -> bool {
        !self.p_continue.is_zero()
    }

    pub fn randomizes(&self) -> bool {
        self.continues() && !self.p_continue.is_one()
    }

    pub fn is_cut(&self) -> bool {
        self.continues() && self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyTree {
    pub model: NominalModel,
    /// Depth at which extraction stopped materializing children.
    pub max_depth: usize,
    /// Nodes in breadth-first order, root first.
    pub nodes: Vec<PolicyNode>,
}

impl PolicyTree {
    pub fn root(&self) -> &PolicyNode {
        &self.nodes[0]
    }

    pub fn is_full(&self) -> bool {
        self.nodes.iter().all(|n| !n.is_cut())
    }

    fn require_full(&self) -> Result<(), Error> {
        if self.is_full() {
            Ok(())
        } else {
            Err(Error::TruncatedTree(self.max_depth))
        }
    }

    /// Node reached by a sequence of symbols, if materialized.
    pub fn find(&self, path: &[usize]) -> Option<usize> {
        let mut i = 0;
        for &x in path {
            i = *self.nodes[i].children.get(x)?;
        }
        Some(i)
    }

    pub fn path(&self, mut i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while let (Some(p), Some(x)) = (self.nodes[i].parent, self.nodes[i].symbol) {
            out.push(x);
            i = p;
        }
        out.reverse();
        out
    }

    /// Deterministic fixed-sample-size policy of length `n`, with the
    /// likelihood decision at the end and a uniform placeholder LFD.
    pub fn fixed_sample_size(model: &NominalModel, n: usize) -> PolicyTree {
        let k = model.alphabet_size();
        let uniform = vec![Rational::new(1.into(), (k as i64).into()); k];
        let mut nodes = vec![PolicyNode {
            parent: None,
            symbol: None,
            depth: 0,
            counts: vec![0; k],
            z0: Rational::one(),
            e_enter: n as u64,
            e_continue: None,
            p_continue: Rational::zero(),
            stop_decision: None,
            lfd: None,
            children: vec![],
        }];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let depth = nodes[i].depth;
            if depth == n {
                nodes[i].stop_decision = Some(StopDecision::from_costs(model, &nodes[i].counts));
                continue;
            }
            nodes[i].p_continue = Rational::one();
            nodes[i].e_continue = Some((n - depth) as u64);
            nodes[i].lfd = Some(uniform.clone());
            for x in 0..k {
                let mut counts = nodes[i].counts.clone();
                counts[x] += 1;
                let child = PolicyNode {
                    parent: Some(i),
                    symbol: Some(x),
                    depth: depth + 1,
                    counts,
                    z0: &nodes[i].z0 * &uniform[x],
                    e_enter: (n - depth - 1) as u64,
                    e_continue: None,
                    p_continue: Rational::zero(),
                    stop_decision: None,
                    lfd: None,
                    children: vec![],
                };
                nodes.push(child);
                let c = nodes.len() - 1;
                nodes[i].children.push(c);
                queue.push_back(c);
            }
        }
        PolicyTree {
            model: model.clone(),
            max_depth: n,
            nodes,
        }
    }
}

struct Step {
    node: PolicyNode,
    /// `(child z0, child e_enter)` per symbol when the node continues.
    next: Option<Vec<(Rational, u64)>>,
}

fn step(
    table: &CostTable,
    counts: &[u32],
    z0: Rational,
    e_enter: u64,
    parent: Option<usize>,
    symbol: Option<usize>,
) -> Result<Step, Error> {
    let model = &table.model;
    let slice = table
        .get(counts)
        .ok_or_else(|| Error::Inconsistent(format!("no state {counts:?}")))?;
    let depth = slice.state.depth;
    let sd = slice.rho.superdiff(&z0)?;
    if !sd.contains(e_enter) {
        return Err(Error::Inconsistent(format!(
            "state {counts:?} at z0 = {}: e_enter {e_enter} outside superdifferential {sd}",
            rational::to_string(&z0)
        )));
    }
    let decision = StopDecision::for_state(model, &slice.state);
    let mut node = PolicyNode {
        parent,
        symbol,
        depth,
        counts: counts.to_vec(),
        z0: z0.clone(),
        e_enter,
        e_continue: None,
        p_continue: Rational::zero(),
        stop_decision: Some(decision),
        lfd: None,
        children: vec![],
    };
    let Some(cont) = &slice.cont else {
        return Ok(Step { node, next: None });
    };
    enum Mode {
        Sure,
        Randomized,
    }
    let mode = match &slice.threshold {
        Threshold::AlwaysContinue => Mode::Sure,
        Threshold::At(t) if z0 < *t => Mode::Sure,
        Threshold::At(t) if z0 > *t || e_enter == 0 => return Ok(Step { node, next: None }),
        Threshold::At(_) => Mode::Randomized,
    };
    let dsd = cont.d.superdiff(&z0)?;
    let c = match mode {
        Mode::Sure => {
            let c = e_enter.checked_sub(1).ok_or_else(|| {
                Error::Inconsistent(format!("state {counts:?} continues with e_enter 0"))
            })?;
            if !dsd.contains(c) {
                return Err(Error::Inconsistent(format!(
                    "state {counts:?}: continuation value {c} outside {dsd}"
                )));
            }
            node.stop_decision = None;
            node.p_continue = Rational::one();
            c
        }
        Mode::Randomized => {
            let c = dsd.lo.max(e_enter - 1);
            if c > dsd.hi {
                return Err(Error::Inconsistent(format!(
                    "state {counts:?}: continuation value {c} outside {dsd}"
                )));
            }
            node.p_continue = Rational::new(e_enter.into(), (1 + c).into());
            if node.p_continue.is_one() {
                node.stop_decision = None;
            }
            c
        }
    };
    node.e_continue = Some(1 + c);
    let alloc = cont.split.split_at(&z0)?;
    let lfd = if z0.is_zero() {
        cont.split.limit_direction()
    } else {
        alloc.iter().map(|a| a / &z0).collect()
    };
    node.lfd = Some(lfd);
    let mut next = Vec::with_capacity(alloc.len());
    for (x, a) in alloc.into_iter().enumerate() {
        let e = if a.is_zero() {
            let child = table
                .get(&slice.state.child_counts(x))
                .ok_or_else(|| Error::Inconsistent(format!("child {x} of {counts:?} missing")))?;
            child.rho.right_slope(&a)?
        } else {
            c
        };
        next.push((a, e));
    }
    debug_assert!(depth < model.horizon);
    Ok(Step {
        node,
        next: Some(next),
    })
}

/// Materializes the policy down to `max_depth` (the horizon for a full
/// tree). The root enters at `z0 = 1` with the right derivative of its
/// slice.
pub fn extract_tree(table: &CostTable, max_depth: usize) -> Result<PolicyTree, Error> {
    let model = &table.model;
    if max_depth > model.horizon {
        return Err(Error::InvalidModel(format!(
            "depth {max_depth} exceeds horizon {}",
            model.horizon
        )));
    }
    let k = model.alphabet_size();
    let root_e = table.root_expected_sample_size();
    let first = step(table, &vec![0; k], Rational::one(), root_e, None, None)?;
    let mut nodes = vec![first.node];
    let mut queue = VecDeque::from([(0usize, first.next)]);
    while let Some((i, next)) = queue.pop_front() {
        let Some(next) = next else { continue };
        if nodes[i].depth >= max_depth {
            continue;
        }
        let counts = nodes[i].counts.clone();
        for (x, (z0, e)) in next.into_iter().enumerate() {
            let mut child_counts = counts.clone();
            child_counts[x] += 1;
            let s = step(table, &child_counts, z0, e, Some(i), Some(x))?;
            nodes.push(s.node);
            let c = nodes.len() - 1;
            nodes[i].children.push(c);
            queue.push_back((c, s.next));
        }
    }
    Ok(PolicyTree {
        model: model.clone(),
        max_depth,
        nodes,
    })
}

/// Smallest and largest LFD probability of `symbol` over nodes whose
/// outgoing edges are part of the tree.
pub fn lfd_range(tree: &PolicyTree, symbol: usize) -> Result<(Rational, Rational), Error> {
    let mut values = tree
        .nodes
        .iter()
        .filter(|n| n.continues() && !n.children.is_empty())
        .filter_map(|n| n.lfd.as_ref().map(|l| l[symbol].clone()));
    let first = values.next().ok_or(Error::EmptyTree)?;
    Ok(values.fold((first.clone(), first), |(lo, hi), v| {
        let lo = if v < lo { v.clone() } else { lo };
        let hi = if v > hi { v } else { hi };
        (lo, hi)
    }))
}

/// Largest `e_continue` over randomizing nodes; 0 if none randomize.
pub fn max_conditional_remaining(tree: &PolicyTree) -> u64 {
    tree.nodes
        .iter()
        .filter(|n| n.randomizes())
        .filter_map(|n| n.e_continue)
        .max()
        .unwrap_or(0)
}

/// Largest depth at which some node is reached with positive probability
/// under the LFD and continues with positive probability, plus one: the
/// deepest sample count the test can actually take.
pub fn max_sample_size(tree: &PolicyTree) -> usize {
    tree.nodes
        .iter()
        .filter(|n| n.continues() && !n.z0.is_zero())
        .map(|n| n.depth + 1)
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalReport {
    pub probe: Vec<Rational>,
    pub expected_sample_size: Rational,
    /// Probability of deciding H2 (the first-kind error when the probe is P1).
    pub alpha1: Rational,
    /// Probability of deciding H1 (the second-kind error when the probe is P2).
    pub alpha2: Rational,
    /// `P(tau = n)` for `n = 0..=horizon`.
    pub stop_time_pmf: Vec<Rational>,
}

#[derive(Default)]
struct CountMass {
    cont: Rational,
    stop: Rational,
    h1: Rational,
}

/// Exact forward pass of the policy under i.i.d. observations from `probe`.
pub fn evaluate(tree: &PolicyTree, probe: &[Rational]) -> Result<EvalReport, Error> {
    let mut out = evaluate_many(tree, std::slice::from_ref(&probe.to_vec()))?;
    Ok(out.remove(0))
}

/// [`evaluate`] for several probes with a single pass over the tree.
///
/// The probability of a node factors into the probe likelihood of its
/// counts times the product of continuation probabilities along its path,
/// so the second factor is summed per count state once and each probe is
/// applied once per state.
pub fn evaluate_many(
    tree: &PolicyTree,
    probes: &[Vec<Rational>],
) -> Result<Vec<EvalReport>, Error> {
    tree.require_full()?;
    for probe in probes {
        if probe.len() != tree.model.alphabet_size() {
            return Err(Error::InvalidModel(
                "probe has the wrong alphabet size".into(),
            ));
        }
        rational::check_pmf(probe)?;
    }
    let half = Rational::new(1.into(), 2.into());
    let mut reach = vec![Rational::zero(); tree.nodes.len()];
    reach[0] = Rational::one();
    let mut by_counts: HashMap<&[u32], CountMass> = HashMap::new();
    for (i, node) in tree.nodes.iter().enumerate() {
        let r = std::mem::take(&mut reach[i]);
        if r.is_zero() {
            continue;
        }
        let cont = &r * &node.p_continue;
        let stopped = &r - &cont;
        let entry = by_counts.entry(&node.counts).or_default();
        if !stopped.is_zero() {
            match node.stop_decision {
                Some(StopDecision::H1) => entry.h1 += &stopped,
                Some(StopDecision::H2) => {}
                Some(StopDecision::Tie) => entry.h1 += &stopped * &half,
                None => {
                    return Err(Error::Inconsistent(format!(
                        "node {:?} stops without a decision",
                        tree.path(i)
                    )))
                }
            }
            entry.stop += stopped;
        }
        if cont.is_zero() {
            continue;
        }
        entry.cont += &cont;
        for &c in &node.children {
            reach[c] = cont.clone();
        }
    }
    let mut states: Vec<(&[u32], CountMass)> = by_counts.into_iter().collect();
    states.sort_by(|a, b| a.0.cmp(b.0));
    Ok(probes
        .iter()
        .map(|probe| apply_probe(tree.model.horizon, &states, probe))
        .collect())
}

fn apply_probe(horizon: usize, states: &[(&[u32], CountMass)], probe: &[Rational]) -> EvalReport {
    let mut pmf = vec![Rational::zero(); horizon + 1];
    let mut ess = Rational::zero();
    let mut h1 = Rational::zero();
    let mut stop_total = Rational::zero();
    for (counts, m) in states {
        let like: Rational = counts
            .iter()
            .zip(probe)
            .map(|(&c, p)| rational::pow(p, c))
            .product();
        if like.is_zero() {
            continue;
        }
        let depth: usize = counts.iter().map(|&c| c as usize).sum();
        ess += &like * &m.cont;
        h1 += &like * &m.h1;
        let s = like * &m.stop;
        stop_total += &s;
        pmf[depth] += s;
    }
    let h2 = stop_total - &h1;
    EvalReport {
        probe: probe.to_vec(),
        expected_sample_size: ess,
        alpha1: h2,
        alpha2: h1,
        stop_time_pmf: pmf,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathExpectation {
    pub path: Vec<usize>,
    pub expectation: Rational,
    /// Every transition on the path has positive LFD probability.
    pub lfd_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqualizationCertificate {
    pub c_root: u64,
    pub max_path_expectation: Rational,
    pub q0_path_expectations_equal: bool,
    pub paths_checked: usize,
    pub violating_paths: Vec<PathExpectation>,
}

impl EqualizationCertificate {
    pub fn passed(&self) -> bool {
        self.violating_paths.is_empty()
    }
}

/// Expected stopping time along every observation path (averaging only
/// over the stopping coins). Passes iff no path exceeds `c_root` and every
/// LFD-positive path attains it exactly.
pub fn verify_equalization(tree: &PolicyTree) -> Result<EqualizationCertificate, Error> {
    tree.require_full()?;
    let c_root = tree.root().e_enter;
    let c = Rational::from_integer(c_root.into());
    let n = tree.nodes.len();
    let mut reach = vec![Rational::zero(); n];
    let mut acc = vec![Rational::zero(); n];
    reach[0] = Rational::one();
    let mut max = Rational::zero();
    let mut checked = 0;
    let mut violating = Vec::new();
    for (i, node) in tree.nodes.iter().enumerate() {
        if node.children.is_empty() {
            checked += 1;
            let e = acc[i].clone();
            let positive = !node.z0.is_zero();
            if e > c || (positive && e != c) {
                violating.push(PathExpectation {
                    path: tree.path(i),
                    expectation: e.clone(),
                    lfd_positive: positive,
                });
            }
            if e > max {
                max = e;
            }
            continue;
        }
        let r = &reach[i] * &node.p_continue;
        for &ch in &node.children {
            acc[ch] = &acc[i] + &r;
            reach[ch] = r.clone();
        }
    }
    let equal = violating.iter().all(|v| !v.lfd_positive);
    Ok(EqualizationCertificate {
        c_root,
        max_path_expectation: max,
        q0_path_expectations_equal: equal,
        paths_checked: checked,
        violating_paths: violating,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportViolation {
    pub path: Vec<usize>,
    pub reason: String,
}

/// Checks that continuing nodes give positive LFD mass to every symbol both
/// hypotheses support, and that mass outside that set only appears where
/// every child stops surely. Nodes at the display cut are only checked for
/// the first property.
pub fn verify_lfd_support(tree: &PolicyTree) -> Vec<SupportViolation> {
    let common = tree.model.support_intersection();
    let mut out = Vec::new();
    for (i, node) in tree.nodes.iter().enumerate() {
        if !node.continues() {
            continue;
        }
        let Some(lfd) = &node.lfd else {
            out.push(SupportViolation {
                path: tree.path(i),
                reason: "continuing node without an LFD".into(),
            });
            continue;
        };
        if let Some(&x) = common.iter().find(|&&x| lfd[x].is_zero()) {
            out.push(SupportViolation {
                path: tree.path(i),
                reason: format!("zero mass on commonly supported symbol {x}"),
            });
        }
        let outside = (0..lfd.len()).any(|x| !common.contains(&x) && !lfd[x].is_zero());
        if outside && node.children.iter().any(|&c| tree.nodes[c].continues()) {
            out.push(SupportViolation {
                path: tree.path(i),
                reason: "mass outside the common support before the last sample".into(),
            });
        }
    }
    out
}

/// How the simulated observations are generated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    /// i.i.d. draws from a fixed PMF.
    Fixed(Vec<Rational>),
    /// Symbol `n mod K` at step `n`.
    Alternating,
    /// Draws from each node's conditional LFD.
    LfdReplay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationStats {
    pub trials: u64,
    pub mean_stopping_time: f64,
    pub std_error: f64,
    pub decide_h1: u64,
    pub decide_h2: u64,
    /// Count of trials stopping after `n` samples, `n = 0..=horizon`.
    pub histogram: Vec<u64>,
}

fn draw(rng: &mut ChaCha8Rng, pmf: &[Rational]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (x, p) in pmf.iter().enumerate() {
        acc += rational::to_f64(p);
        if u < acc {
            return x;
        }
    }
    pmf.iter().rposition(|p| !p.is_zero()).unwrap_or(0)
}

/// Monte Carlo run of the policy. Trial `i` draws from stream `i` of a
/// ChaCha8 generator seeded with `seed`, so results do not depend on how
/// trials are scheduled.
pub fn simulate(
    tree: &PolicyTree,
    strategy: &Strategy,
    trials: u64,
    seed: u64,
) -> Result<SimulationStats, Error> {
    tree.require_full()?;
    let k = tree.model.alphabet_size();
    if let Strategy::Fixed(p) = strategy {
        if p.len() != k {
            return Err(Error::InvalidModel(
                "probe has the wrong alphabet size".into(),
            ));
        }
        rational::check_pmf(p)?;
    }
    if trials == 0 {
        return Err(Error::InvalidModel("at least one trial is required".into()));
    }
    let mut hist = vec![0u64; tree.model.horizon + 1];
    let (mut h1, mut h2) = (0u64, 0u64);
    let (mut sum, mut sum_sq) = (0f64, 0f64);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let mut i = 0;
        loop {
            let node = &tree.nodes[i];
            let p = rational::to_f64(&node.p_continue);
            let go_on = p >= 1.0 || (p > 0.0 && rng.gen::<f64>() < p);
            if !go_on {
                let h1_wins = match node.stop_decision {
                    Some(StopDecision::H1) => true,
                    Some(StopDecision::H2) => false,
                    _ => rng.gen::<bool>(),
                };
                if h1_wins {
                    h1 += 1;
                } else {
                    h2 += 1;
                }
                hist[node.depth] += 1;
                let t = node.depth as f64;
                sum += t;
                sum_sq += t * t;
                break;
            }
            let x = match strategy {
                Strategy::Fixed(pmf) => draw(&mut rng, pmf),
                Strategy::Alternating => node.depth % k,
                Strategy::LfdReplay => draw(&mut rng, node.lfd.as_deref().unwrap_or(&[])),
            };
            i = node.children[x];
        }
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = if trials > 1 {
        (sum_sq - n * mean * mean).max(0.0) / (n - 1.0)
    } else {
        0.0
    };
    Ok(SimulationStats {
        trials,
        mean_stopping_time: mean,
        std_error: (var / n).sqrt(),
        decide_h1: h1,
        decide_h2: h2,
        histogram: hist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellman::backward_recursion;
    use crate::rational::{int, ratio};

    fn fig_tree(horizon: usize, depth: usize) -> PolicyTree {
        let model =
            NominalModel::bernoulli(ratio(4, 5), ratio(1, 5), int(20), int(20), horizon).unwrap();
        extract_tree(&backward_recursion(&model), depth).unwrap()
    }

    #[test]
    fn two_successes_node() {
        let tree = fig_tree(21, 7);
        let root = tree.root();
        assert_eq!(root.e_enter, 3);
        assert_eq!(root.lfd.as_ref().unwrap(), &vec![ratio(1, 2), ratio(1, 2)]);
        let ss = &tree.nodes[tree.find(&[1, 1]).unwrap()];
        assert_eq!(ss.e_enter, 1);
        assert_eq!(ss.e_continue, Some(3));
        assert_eq!(ss.p_continue, ratio(1, 3));
        assert_eq!(max_conditional_remaining(&tree), 12);
        let s7 = &tree.nodes[tree.find(&[1; 7]).unwrap()];
        assert_eq!(s7.e_continue, Some(12));
    }

    #[test]
    fn children_enter_with_equal_values() {
        let tree = fig_tree(9, 9);
        for node in &tree.nodes {
            if node.children.is_empty() {
                continue;
            }
            let c = node.e_continue.unwrap() - 1;
            for &ch in &node.children {
                let child = &tree.nodes[ch];
                if !child.z0.is_zero() {
                    assert_eq!(child.e_enter, c);
                } else {
                    assert!(child.e_enter <= c);
                }
            }
        }
    }

    #[test]
    fn decisions_follow_likelihoods() {
        let tree = fig_tree(9, 9);
        for node in tree.nodes.iter().filter(|n| n.stop_decision.is_some()) {
            let s = node.counts[1] as i64 - node.counts[0] as i64;
            let expected = match s.signum() {
                1 => StopDecision::H1,
                -1 => StopDecision::H2,
                _ => StopDecision::Tie,
            };
            assert_eq!(node.stop_decision, Some(expected));
        }
    }

    #[test]
    fn evaluation_requires_full_tree() {
        let tree = fig_tree(9, 3);
        assert!(matches!(
            evaluate(&tree, &[ratio(1, 2), ratio(1, 2)]),
            Err(Error::TruncatedTree(3))
        ));
    }

    #[test]
    fn fixed_sample_tree_is_equalized() {
        let model = NominalModel::bernoulli(ratio(4, 5), ratio(1, 5), int(20), int(20), 3).unwrap();
        let tree = PolicyTree::fixed_sample_size(&model, 3);
        let cert = verify_equalization(&tree).unwrap();
        assert!(cert.passed());
        assert_eq!(cert.c_root, 3);
        assert_eq!(cert.max_path_expectation, int(3));
        let r = evaluate(&tree, &model.p1).unwrap();
        assert_eq!(r.alpha1, ratio(13, 125));
        assert_eq!(r.expected_sample_size, int(3));
    }

    #[test]
    fn simulation_is_reproducible() {
        let tree = fig_tree(9, 9);
        let a = simulate(&tree, &Strategy::LfdReplay, 50, 7).unwrap();
        let b = simulate(&tree, &Strategy::LfdReplay, 50, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.histogram.iter().sum::<u64>(), 50);
        let alt = simulate(&tree, &Strategy::Alternating, 1, 0).unwrap();
        assert_eq!(alt.trials, 1);
    }
}
