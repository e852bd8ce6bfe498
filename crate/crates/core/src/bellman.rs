//! Backward recursion over count-histogram states.
//!
//! For an i.i.d. model the likelihoods of a history depend only on how
//! often each symbol occurred, so the states at depth `n` are the
//! histograms summing to `n`. Each state carries the slice
//! `rho(z0) = min(g, z0 + d(z0))`, where `d` is the sup-convolution of the
//! children's slices and `g = min(lambda1 z1, lambda2 z2)` is the cost of
//! stopping.

use std::collections::HashMap;

use num_traits::{One, Zero};

use crate::pwl::{supconv, PwlConcave, SplitMap};
use crate::rational::{self, int, Rational};
use crate::Error;

/// Right end of every slice domain. Histories have `z0 <= 1`; the extra room
/// gives the root a right derivative at `z0 = 1`.
pub const SLICE_UPPER: i64 = 2;

pub fn slice_upper() -> Rational {
    int(SLICE_UPPER)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NominalModel {
    pub p1: Vec<Rational>,
    pub p2: Vec<Rational>,
    pub lambda1: Rational,
    pub lambda2: Rational,
    pub horizon: usize,
}

impl NominalModel {
    pub fn new(
        p1: Vec<Rational>,
        p2: Vec<Rational>,
        lambda1: Rational,
        lambda2: Rational,
        horizon: usize,
    ) -> Result<Self, Error> {
        if p1.len() < 2 || p1.len() != p2.len() {
            return Err(Error::InvalidModel(
                "p1 and p2 need the same alphabet of at least two symbols".into(),
            ));
        }
        rational::check_pmf(&p1)?;
        rational::check_pmf(&p2)?;
        if p1 == p2 {
            return Err(Error::InvalidModel("p1 and p2 coincide".into()));
        }
        if lambda1 <= Rational::zero() || lambda2 <= Rational::zero() {
            return Err(Error::InvalidModel(
                "cost coefficients must be positive".into(),
            ));
        }
        if horizon < 1 {
            return Err(Error::InvalidModel("horizon must be at least 1".into()));
        }
        Ok(NominalModel {
            p1,
            p2,
            lambda1,
            lambda2,
            horizon,
        })
    }

    /// Two-symbol model; symbol 0 is a failure, symbol 1 a success.
    pub fn bernoulli(
        theta1: Rational,
        theta2: Rational,
        lambda1: Rational,
        lambda2: Rational,
        horizon: usize,
    ) -> Result<Self, Error> {
        for th in [&theta1, &theta2] {
            if *th <= Rational::zero() || *th >= Rational::one() {
                return Err(Error::InvalidModel(format!(
                    "success probability {} not in (0, 1)",
                    rational::to_string(th)
                )));
            }
        }
        NominalModel::new(
            bernoulli_pmf(&theta1),
            bernoulli_pmf(&theta2),
            lambda1,
            lambda2,
            horizon,
        )
    }

    pub fn alphabet_size(&self) -> usize {
        self.p1.len()
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self, Error> {
        NominalModel::new(
            self.p1.clone(),
            self.p2.clone(),
            self.lambda1.clone(),
            self.lambda2.clone(),
            horizon,
        )
    }

    /// Symbols with positive probability under both hypotheses.
    pub fn support_intersection(&self) -> Vec<usize> {
        (0..self.alphabet_size())
            .filter(|&x| !self.p1[x].is_zero() && !self.p2[x].is_zero())
            .collect()
    }

    pub fn state(&self, counts: &[u32]) -> DesignState {
        let mut z1 = Rational::one();
        let mut z2 = Rational::one();
        for (x, &c) in counts.iter().enumerate() {
            z1 *= rational::pow(&self.p1[x], c);
            z2 *= rational::pow(&self.p2[x], c);
        }
        let g1 = &self.lambda1 * &z1;
        let g2 = &self.lambda2 * &z2;
        let g = if g1 <= g2 { g1 } else { g2 };
        DesignState {
            depth: counts.iter().map(|&c| c as usize).sum(),
            counts: counts.to_vec(),
            z1,
            z2,
            g,
        }
    }
}

/// `[1 - theta, theta]`.
pub fn bernoulli_pmf(theta: &Rational) -> Vec<Rational> {
    vec![Rational::one() - theta, theta.clone()]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignState {
    pub depth: usize,
    pub counts: Vec<u32>,
    pub z1: Rational,
    pub z2: Rational,
    pub g: Rational,
}

impl DesignState {
    pub fn child_counts(&self, x: usize) -> Vec<u32> {
        let mut c = self.counts.clone();
        c[x] += 1;
        c
    }
}

/// Histograms over `k` symbols summing to `n`, first component descending.
pub fn compositions(n: u32, k: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, k: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in (0..=left).rev() {
            prefix.push(c);
            rec(left - c, k - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

pub fn build_states(model: &NominalModel) -> Vec<Vec<DesignState>> {
    (0..=model.horizon)
        .map(|n| {
            compositions(n as u32, model.alphabet_size())
                .iter()
                .map(|c| model.state(c))
                .collect()
        })
        .collect()
}

/// Where stopping starts to beat continuing along `z0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Threshold {
    /// Continue for `z0 < t`, stop for `z0 > t`, randomize at `z0 = t`.
    /// `At(0)` means stop whenever `z0 > 0`.
    At(Rational),
    /// Continuing is strictly cheaper on the whole slice domain.
    AlwaysContinue,
}

impl Threshold {
    pub fn to_json_string(&self) -> String {
        match self {
            Threshold::At(t) => rational::to_string(t),
            Threshold::AlwaysContinue => "always-continue".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Continuation {
    pub d: PwlConcave,
    pub split: SplitMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSlice {
    pub state: DesignState,
    pub rho: PwlConcave,
    pub cont: Option<Continuation>,
    pub threshold: Threshold,
}

#[derive(Debug, Clone)]
pub struct CostTable {
    pub model: NominalModel,
    pub levels: Vec<Vec<StateSlice>>,
    index: Vec<HashMap<Vec<u32>, usize>>,
}

impl CostTable {
    /// Assembles a table and checks every recursion identity against the
    /// stored slices.
    pub fn from_levels(model: NominalModel, levels: Vec<Vec<StateSlice>>) -> Result<Self, Error> {
        let table = CostTable::assemble(model, levels);
        table.validate()?;
        Ok(table)
    }

    fn assemble(model: NominalModel, levels: Vec<Vec<StateSlice>>) -> Self {
        let index = levels
            .iter()
            .map(|level| {
                level
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.state.counts.clone(), i))
                    .collect()
            })
            .collect();
        CostTable {
            model,
            levels,
            index,
        }
    }

    pub fn get(&self, counts: &[u32]) -> Option<&StateSlice> {
        let depth: usize = counts.iter().map(|&c| c as usize).sum();
        let i = *self.index.get(depth)?.get(counts)?;
        Some(&self.levels[depth][i])
    }

    pub fn root(&self) -> &StateSlice {
        &self.levels[0][0]
    }

    pub fn horizon(&self) -> usize {
        self.model.horizon
    }

    /// `rho_root(1)`.
    pub fn root_value(&self) -> Rational {
        self.root()
            .rho
            .eval(&Rational::one())
            .expect("root slice covers z0 = 1")
    }

    /// Right derivative of the root slice at `z0 = 1`.
    pub fn root_expected_sample_size(&self) -> u64 {
        self.root()
            .rho
            .right_slope(&Rational::one())
            .expect("root slice covers z0 = 1")
    }

    pub fn validate(&self) -> Result<(), Error> {
        let model = &self.model;
        let bad = |msg: String| Err(Error::Inconsistent(msg));
        if self.levels.len() != model.horizon + 1 {
            return bad(format!(
                "{} levels for horizon {}",
                self.levels.len(),
                model.horizon
            ));
        }
        let upper = slice_upper();
        for (n, level) in self.levels.iter().enumerate() {
            let expected = compositions(n as u32, model.alphabet_size());
            if level.len() != expected.len() || self.index[n].len() != expected.len() {
                return bad(format!("depth {n} has {} states", level.len()));
            }
            for slice in level {
                let counts = &slice.state.counts;
                if model.state(counts) != slice.state || slice.state.depth != n {
                    return bad(format!("state {counts:?} does not match the model"));
                }
                if *slice.rho.upper() != upper {
                    return bad(format!("slice {counts:?} has the wrong domain"));
                }
                if slice.rho.max_slope() > (model.horizon - n) as u64 {
                    return bad(format!("slice {counts:?} exceeds the slope bound"));
                }
                let g = &slice.state.g;
                if n == model.horizon {
                    if slice.rho != PwlConcave::constant(g.clone(), upper.clone())
                        || slice.cont.is_some()
                        || slice.threshold != Threshold::At(Rational::zero())
                    {
                        return bad(format!("terminal slice {counts:?} is not the constant g"));
                    }
                    continue;
                }
                let Some(cont) = &slice.cont else {
                    return bad(format!("internal slice {counts:?} lacks its continuation"));
                };
                let children: Option<Vec<PwlConcave>> = (0..model.alphabet_size())
                    .map(|x| {
                        self.get(&slice.state.child_counts(x))
                            .map(|c| c.rho.clone())
                    })
                    .collect();
                let Some(children) = children else {
                    return bad(format!("children of {counts:?} missing"));
                };
                let (d, split) = supconv(&children, &upper)?;
                if d != cont.d || split != cont.split {
                    return bad(format!(
                        "continuation of {counts:?} is not the sup-convolution"
                    ));
                }
                let (rho, threshold) = cap_step(&d, g);
                if rho != slice.rho || threshold != slice.threshold {
                    return bad(format!("slice {counts:?} is not min(g, z0 + d)"));
                }
            }
        }
        Ok(())
    }
}

fn cap_step(d: &PwlConcave, g: &Rational) -> (PwlConcave, Threshold) {
    let lifted = d.lift_identity();
    let threshold = match lifted.first_reach(g) {
        Some(t) => Threshold::At(t),
        None => Threshold::AlwaysContinue,
    };
    (lifted.cap_min_const(g), threshold)
}

pub fn backward_recursion(model: &NominalModel) -> CostTable {
    let states = build_states(model);
    let upper = slice_upper();
    let k = model.alphabet_size();
    let mut levels: Vec<Vec<StateSlice>> = vec![Vec::new(); model.horizon + 1];
    let mut states = states.into_iter().rev();
    let terminal = states.next().expect("at least one level");
    levels[model.horizon] = terminal
        .into_iter()
        .map(|state| StateSlice {
            rho: PwlConcave::constant(state.g.clone(), upper.clone()),
            cont: None,
            threshold: Threshold::At(Rational::zero()),
            state,
        })
        .collect();
    for (n, level) in (0..model.horizon).rev().zip(states) {
        let below: HashMap<&[u32], &PwlConcave> = levels[n + 1]
            .iter()
            .map(|s| (s.state.counts.as_slice(), &s.rho))
            .collect();
        let built: Vec<StateSlice> = level
            .into_iter()
            .map(|state| {
                let children: Vec<PwlConcave> = (0..k)
                    .map(|x| below[state.child_counts(x).as_slice()].clone())
                    .collect();
                let (d, split) =
                    supconv(&children, &upper).expect("children cover the slice domain");
                let (rho, threshold) = cap_step(&d, &state.g);
                StateSlice {
                    state,
                    rho,
                    cont: Some(Continuation { d, split }),
                    threshold,
                }
            })
            .collect();
        levels[n] = built;
    }
    CostTable::assemble(model.clone(), levels)
}

pub fn stopping_threshold(table: &CostTable, counts: &[u32]) -> Option<Threshold> {
    table.get(counts).map(|s| s.threshold.clone())
}

/// Number of samples after which a design whose hypotheses share exactly
/// one symbol `x_star` must stop: the smallest `n >= 0` such that one more
/// observation of `x_star` lowers the stopping cost by at most one.
pub fn kwt_truncation_bound(model: &NominalModel, x_star: usize) -> Result<usize, Error> {
    if model.support_intersection() != [x_star] {
        return Err(Error::InvalidModel(format!(
            "supports must intersect exactly in symbol {x_star}"
        )));
    }
    let g = |n: u32| {
        let a = &model.lambda1 * rational::pow(&model.p1[x_star], n);
        let b = &model.lambda2 * rational::pow(&model.p2[x_star], n);
        if a <= b {
            a
        } else {
            b
        }
    };
    let mut n = 0u32;
    loop {
        if g(n) - g(n + 1) <= Rational::one() {
            return Ok(n as usize);
        }
        n += 1;
    }
}

/// Closed form of [`kwt_truncation_bound`] for `lambda1 = lambda2 = lambda`
/// and `p* = min(p1(x*), p2(x*))`: `ceil(log(lambda (1 - p*)) / log(1/p*))`,
/// clipped at zero. Values within `1e-9` of an integer are snapped to it.
pub fn truncation_closed_form(lambda: f64, p_star: f64) -> usize {
    let y = (lambda * (1.0 - p_star)).ln() / (1.0 / p_star).ln();
    let snapped = if (y - y.round()).abs() < 1e-9 {
        y.round()
    } else {
        y.ceil()
    };
    snapped.max(0.0) as usize
}
