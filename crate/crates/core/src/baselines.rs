//! Comparison tests for Bernoulli hypotheses `theta1 > theta2`: the SPRT,
//! the fixed-sample-size test (FSST) and the modified Kiefer-Weiss test
//! (KWT), all analyzed exactly on the statistic `T_n = 2 S_n - n`
//! (successes minus failures).

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::bellman::NominalModel;
use crate::rational::{self, int, Rational};
use crate::Error;

/// Extracts `(theta1, theta2)` from a two-symbol model with `theta1 > theta2`.
pub fn bernoulli_thetas(model: &NominalModel) -> Result<(Rational, Rational), Error> {
    if model.alphabet_size() != 2 {
        return Err(Error::InvalidModel(
            "baselines need a two-symbol model".into(),
        ));
    }
    let (t1, t2) = (model.p1[1].clone(), model.p2[1].clone());
    if t1 <= t2 {
        return Err(Error::InvalidModel(
            "baselines expect the success probability under H1 to exceed that under H2".into(),
        ));
    }
    Ok((t1, t2))
}

fn binomial(n: u32, m: u32) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..m {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

/// `P(S_n = m)` for `S_n ~ Binomial(n, theta)`.
pub fn binomial_pmf(n: u32, m: u32, theta: &Rational) -> Rational {
    Rational::from_integer(binomial(n, m))
        * rational::pow(theta, m)
        * rational::pow(&(Rational::one() - theta), n - m)
}

/// Expected sample size and decision probabilities of a test under one
/// success probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operating {
    pub expected_sample_size: Rational,
    pub decide_h1: Rational,
    pub decide_h2: Rational,
}

// ---------------------------------------------------------------- SPRT

/// Stops the first time `T_n <= lower` (decide H2) or `T_n >= upper`
/// (decide H1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SprtDesign {
    pub lower: i64,
    pub upper: i64,
}

impl SprtDesign {
    pub fn symmetric(b: i64) -> Self {
        SprtDesign {
            lower: -b,
            upper: b,
        }
    }

    fn check(&self) -> Result<(), Error> {
        if self.lower < 0 && self.upper > 0 {
            Ok(())
        } else {
            Err(Error::InvalidModel(
                "SPRT thresholds must satisfy A < 0 < B".into(),
            ))
        }
    }
}

/// Solves `-q x[i-1] + x[i] - p x[i+1] = rhs[i]` with `x[-1] = left` and
/// `x[m] = right`.
fn solve_walk(p: &Rational, rhs: &[Rational], left: &Rational, right: &Rational) -> Vec<Rational> {
    let q = Rational::one() - p;
    let m = rhs.len();
    let mut c_prime = Vec::with_capacity(m);
    let mut d_prime = Vec::with_capacity(m);
    for i in 0..m {
        let mut r = rhs[i].clone();
        if i == 0 {
            r += &q * left;
        }
        if i == m - 1 {
            r += p * right;
        }
        let (denom, num) = if i == 0 {
            (Rational::one(), r)
        } else {
            let denom = Rational::one() - &q * &c_prime[i - 1];
            (denom, r + &q * &d_prime[i - 1])
        };
        c_prime.push(p / &denom);
        d_prime.push(num / denom);
    }
    let mut x = vec![Rational::zero(); m];
    for i in (0..m).rev() {
        x[i] = if i == m - 1 {
            d_prime[i].clone()
        } else {
            &d_prime[i] + &c_prime[i] * &x[i + 1]
        };
    }
    x
}

/// Exact first-step analysis of the walk started at 0.
pub fn sprt_analyze(design: &SprtDesign, theta: &Rational) -> Result<Operating, Error> {
    design.check()?;
    if *theta <= Rational::zero() || *theta >= Rational::one() {
        return Err(Error::InvalidModel("theta must lie in (0, 1)".into()));
    }
    let m = (design.upper - design.lower - 1) as usize;
    let start = (-design.lower - 1) as usize;
    let zeros = vec![Rational::zero(); m];
    let up = solve_walk(theta, &zeros, &Rational::zero(), &Rational::one());
    let ones = vec![Rational::one(); m];
    let time = solve_walk(theta, &ones, &Rational::zero(), &Rational::zero());
    let h1 = up[start].clone();
    Ok(Operating {
        expected_sample_size: time[start].clone(),
        decide_h2: Rational::one() - &h1,
        decide_h1: h1,
    })
}

/// `P(tau > n)` by forward iteration of the walk.
pub fn sprt_tail(design: &SprtDesign, theta: &Rational, n: usize) -> Result<Rational, Error> {
    design.check()?;
    let m = (design.upper - design.lower - 1) as usize;
    let q = Rational::one() - theta;
    let mut mass = vec![Rational::zero(); m];
    mass[(-design.lower - 1) as usize] = Rational::one();
    for _ in 0..n {
        let mut next = vec![Rational::zero(); m];
        for (i, w) in mass.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            if i + 1 < m {
                next[i + 1] += w * theta;
            }
            if i > 0 {
                next[i - 1] += w * &q;
            }
        }
        mass = next;
    }
    Ok(mass.iter().sum())
}

/// `(alpha1, alpha2)`: deciding H2 under `theta1`, H1 under `theta2`.
pub fn sprt_errors(
    design: &SprtDesign,
    theta1: &Rational,
    theta2: &Rational,
) -> Result<(Rational, Rational), Error> {
    Ok((
        sprt_analyze(design, theta1)?.decide_h2,
        sprt_analyze(design, theta2)?.decide_h1,
    ))
}

/// Smallest symmetric integer thresholds `+-B` with both errors at most
/// `alpha`. Both errors fall geometrically in `B`, so the search ends once
/// Wald's bound `B >= log(1/alpha) / log(LR)` is exceeded by a margin.
pub fn sprt_design(
    model: &NominalModel,
    alpha: &Rational,
) -> Result<(SprtDesign, (Rational, Rational)), Error> {
    let (t1, t2) = bernoulli_thetas(model)?;
    check_alpha(alpha)?;
    let lr = rational::to_f64(&(&t1 * (Rational::one() - &t2) / (&t2 * (Rational::one() - &t1))));
    let wald = ((1.0 / rational::to_f64(alpha)).ln() / lr.ln())
        .ceil()
        .max(1.0) as i64;
    for b in 1..=(2 * wald + 8) {
        let design = SprtDesign::symmetric(b);
        let (a1, a2) = sprt_errors(&design, &t1, &t2)?;
        if a1 <= *alpha && a2 <= *alpha {
            return Ok((design, (a1, a2)));
        }
    }
    Err(Error::Design("no SPRT threshold meets the target".into()))
}

fn check_alpha(alpha: &Rational) -> Result<(), Error> {
    if *alpha <= Rational::zero() || *alpha >= rational::ratio(1, 2) {
        return Err(Error::InvalidModel(
            "error target must lie in (0, 1/2)".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------- FSST

/// Takes `n` samples, decides H1 iff `S_n >= k`; if `tie_at = Some(m)`,
/// `S_n = m` decides H1 with probability 1/2 instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FsstDesign {
    pub n: u32,
    pub k: u32,
    pub tie_at: Option<u32>,
}

impl FsstDesign {
    pub fn new(n: u32, k: u32) -> Self {
        FsstDesign { n, k, tie_at: None }
    }

    /// Majority rule; an even split is decided by a fair coin.
    pub fn symmetric(n: u32) -> Self {
        if n % 2 == 1 {
            FsstDesign::new(n, n.div_ceil(2))
        } else {
            FsstDesign {
                n,
                k: n / 2 + 1,
                tie_at: Some(n / 2),
            }
        }
    }
}

pub fn fsst_analyze(design: &FsstDesign, theta: &Rational) -> Operating {
    let half = rational::ratio(1, 2);
    let mut h1 = Rational::zero();
    for m in 0..=design.n {
        let p = binomial_pmf(design.n, m, theta);
        if design.tie_at == Some(m) {
            h1 += p * &half;
        } else if m >= design.k {
            h1 += p;
        }
    }
    Operating {
        expected_sample_size: Rational::from_integer(design.n.into()),
        decide_h2: Rational::one() - &h1,
        decide_h1: h1,
    }
}

pub fn fsst_errors(
    design: &FsstDesign,
    theta1: &Rational,
    theta2: &Rational,
) -> (Rational, Rational) {
    (
        fsst_analyze(design, theta1).decide_h2,
        fsst_analyze(design, theta2).decide_h1,
    )
}

/// Smallest `n` whose best threshold keeps both errors at most `alpha`.
/// Symmetric hypotheses (`theta2 = 1 - theta1`) use the majority rule.
pub fn fsst_design(
    model: &NominalModel,
    alpha: &Rational,
) -> Result<(FsstDesign, (Rational, Rational)), Error> {
    let (t1, t2) = bernoulli_thetas(model)?;
    check_alpha(alpha)?;
    let symmetric = t2 == Rational::one() - &t1;
    for n in 1..=100_000u32 {
        let candidates: Vec<FsstDesign> = if symmetric {
            vec![FsstDesign::symmetric(n)]
        } else {
            (0..=n + 1).map(|k| FsstDesign::new(n, k)).collect()
        };
        for design in candidates {
            let (a1, a2) = fsst_errors(&design, &t1, &t2);
            if a1 <= *alpha && a2 <= *alpha {
                return Ok((design, (a1, a2)));
            }
        }
    }
    Err(Error::Design(
        "no fixed sample size meets the target".into(),
    ))
}

// ---------------------------------------------------------------- KWT

/// Modified Kiefer-Weiss test: minimizes `E_{P0}[tau] + lambda1 alpha1 +
/// lambda2 alpha2` for a fixed sampling distribution `P0`, by backward
/// induction over `(n, S_n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KwtDesign {
    pub theta1: Rational,
    pub theta2: Rational,
    pub lambda1: Rational,
    pub lambda2: Rational,
    pub p0: Rational,
    pub horizon: usize,
    /// `continue_at[n][m]`: whether the test samples again after `m`
    /// successes in `n` observations.
    pub continue_at: Vec<Vec<bool>>,
}

pub fn kwt_design(model: &NominalModel, p0: &[Rational]) -> Result<KwtDesign, Error> {
    let (t1, t2) = bernoulli_thetas(model)?;
    if p0.len() != 2 {
        return Err(Error::InvalidModel("P0 must be a two-symbol PMF".into()));
    }
    rational::check_pmf(p0)?;
    let horizon = model.horizon;
    let mut value: Vec<Rational> = Vec::new();
    let mut continue_at = vec![Vec::new(); horizon + 1];
    for n in (0..=horizon).rev() {
        let mut level = Vec::with_capacity(n + 1);
        let mut cont = Vec::with_capacity(n + 1);
        for m in 0..=n as u32 {
            let f = n as u32 - m;
            let z1 = rational::pow(&t1, m) * rational::pow(&model.p1[0], f);
            let z2 = rational::pow(&t2, m) * rational::pow(&model.p2[0], f);
            let g1 = &model.lambda1 * z1;
            let g2 = &model.lambda2 * z2;
            let g = if g1 <= g2 { g1 } else { g2 };
            if n == horizon {
                level.push(g);
                cont.push(false);
                continue;
            }
            let z0 = rational::pow(&p0[1], m) * rational::pow(&p0[0], f);
            let go = z0 + &value[m as usize] + &value[m as usize + 1];
            if go < g {
                level.push(go);
                cont.push(true);
            } else {
                level.push(g);
                cont.push(false);
            }
        }
        value = level;
        continue_at[n] = cont;
    }
    Ok(KwtDesign {
        theta1: t1,
        theta2: t2,
        lambda1: model.lambda1.clone(),
        lambda2: model.lambda2.clone(),
        p0: p0[1].clone(),
        horizon,
        continue_at,
    })
}

impl KwtDesign {
    /// `reachable[n][m]`: some observation sequence leads to `m` successes in
    /// `n` observations without stopping earlier.
    fn reachable(&self) -> Vec<Vec<bool>> {
        let mut out = vec![vec![true]];
        for n in 0..self.horizon {
            let mut next = vec![false; n + 2];
            for (m, &r) in out[n].iter().enumerate() {
                if r && self.continue_at[n][m] {
                    next[m] = true;
                    next[m + 1] = true;
                }
            }
            out.push(next);
        }
        out
    }

    /// Per `n`, the smallest and largest reachable `T_n` at which the test
    /// continues.
    pub fn bounds(&self) -> Vec<Option<(i64, i64)>> {
        let reachable = self.reachable();
        self.continue_at
            .iter()
            .zip(&reachable)
            .enumerate()
            .map(|(n, (row, reach))| {
                let ts: Vec<i64> = row
                    .iter()
                    .zip(reach)
                    .enumerate()
                    .filter(|(_, (&c, &r))| c && r)
                    .map(|(m, _)| 2 * m as i64 - n as i64)
                    .collect();
                Some((*ts.iter().min()?, *ts.iter().max()?))
            })
            .collect()
    }

    /// Largest number of samples the test can take.
    pub fn truncation(&self) -> usize {
        self.bounds()
            .iter()
            .rposition(Option::is_some)
            .map_or(0, |n| n + 1)
    }

    fn decide(&self, n: usize, m: usize) -> (Rational, Rational) {
        let f = (n - m) as u32;
        let m = m as u32;
        let one = Rational::one();
        let a = &self.lambda1
            * rational::pow(&self.theta1, m)
            * rational::pow(&(&one - &self.theta1), f);
        let b = &self.lambda2
            * rational::pow(&self.theta2, m)
            * rational::pow(&(&one - &self.theta2), f);
        match a.cmp(&b) {
            std::cmp::Ordering::Greater => (one, Rational::zero()),
            std::cmp::Ordering::Less => (Rational::zero(), one),
            std::cmp::Ordering::Equal => (rational::ratio(1, 2), rational::ratio(1, 2)),
        }
    }

    /// Forward pass over `(n, S_n)` under success probability `theta`.
    pub fn analyze(&self, theta: &Rational) -> Operating {
        let q = Rational::one() - theta;
        let mut mass = vec![Rational::one()];
        let mut ess = Rational::zero();
        let mut h1 = Rational::zero();
        let mut h2 = Rational::zero();
        for n in 0..=self.horizon {
            let mut next = vec![Rational::zero(); n + 2];
            for (m, w) in mass.iter().enumerate() {
                if w.is_zero() {
                    continue;
                }
                if self.continue_at[n][m] {
                    ess += w;
                    next[m + 1] += w * theta;
                    next[m] += w * &q;
                } else {
                    let (d1, d2) = self.decide(n, m);
                    h1 += w * d1;
                    h2 += w * d2;
                }
            }
            mass = next;
        }
        Operating {
            expected_sample_size: ess,
            decide_h1: h1,
            decide_h2: h2,
        }
    }

    pub fn errors(&self) -> (Rational, Rational) {
        (
            self.analyze(&self.theta1).decide_h2,
            self.analyze(&self.theta2).decide_h1,
        )
    }
}

/// Smallest integer `lambda = lambda1 = lambda2` (by doubling and
/// bisection) whose KWT keeps both errors at most `alpha`.
pub fn kwt_calibrate(
    model: &NominalModel,
    p0: &[Rational],
    alpha: &Rational,
) -> Result<KwtDesign, Error> {
    check_alpha(alpha)?;
    let build = |lambda: i64| -> Result<KwtDesign, Error> {
        let m = NominalModel::new(
            model.p1.clone(),
            model.p2.clone(),
            int(lambda),
            int(lambda),
            model.horizon,
        )?;
        kwt_design(&m, p0)
    };
    let meets = |d: &KwtDesign| {
        let (a1, a2) = d.errors();
        a1 <= *alpha && a2 <= *alpha
    };
    let mut hi = 1i64;
    let mut best = build(hi)?;
    while !meets(&best) {
        hi *= 2;
        if hi > 1 << 40 {
            return Err(Error::Design("no cost coefficient meets the target".into()));
        }
        best = build(hi)?;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let d = build(mid)?;
        if meets(&d) {
            hi = mid;
            best = d;
        } else {
            lo = mid;
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------- curves

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Baseline {
    Sprt(SprtDesign),
    Fsst(FsstDesign),
    Kwt(Box<KwtDesign>),
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Sprt(_) => "SPRT",
            Baseline::Fsst(_) => "FSST",
            Baseline::Kwt(_) => "KWT",
        }
    }

    pub fn analyze(&self, theta: &Rational) -> Result<Operating, Error> {
        match self {
            Baseline::Sprt(d) => sprt_analyze(d, theta),
            Baseline::Fsst(d) => Ok(fsst_analyze(d, theta)),
            Baseline::Kwt(d) => Ok(d.analyze(theta)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveRow {
    pub theta: Rational,
    pub expected_sample_size: Rational,
    /// Design error under `theta1`.
    pub alpha1: Rational,
    /// Design error under `theta2`.
    pub alpha2: Rational,
    pub test_name: String,
}

/// Expected sample size of each test over the grid, with the test's
/// design errors repeated on every row.
pub fn sample_size_curve(
    tests: &[Baseline],
    theta1: &Rational,
    theta2: &Rational,
    grid: &[Rational],
) -> Result<Vec<CurveRow>, Error> {
    let mut rows = Vec::new();
    for test in tests {
        let alpha1 = test.analyze(theta1)?.decide_h2;
        let alpha2 = test.analyze(theta2)?.decide_h1;
        for theta in grid {
            if *theta <= Rational::zero() || *theta >= Rational::one() {
                return Err(Error::InvalidModel("grid points must lie in (0, 1)".into()));
            }
            rows.push(CurveRow {
                theta: theta.clone(),
                expected_sample_size: test.analyze(theta)?.expected_sample_size,
                alpha1: alpha1.clone(),
                alpha2: alpha2.clone(),
                test_name: test.name().to_string(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn fig_model() -> NominalModel {
        NominalModel::bernoulli(ratio(4, 5), ratio(1, 5), int(20), int(20), 40).unwrap()
    }

    #[test]
    fn fsst_three_samples() {
        let d = FsstDesign::new(3, 2);
        let (a1, a2) = fsst_errors(&d, &ratio(4, 5), &ratio(1, 5));
        assert_eq!(a1, ratio(13, 125));
        assert_eq!(a2, ratio(13, 125));
        assert_eq!(
            fsst_errors(&FsstDesign::new(1, 1), &ratio(4, 5), &ratio(1, 5)).0,
            ratio(1, 5)
        );
        let (a1, a2) = fsst_errors(&FsstDesign::new(3, 0), &ratio(4, 5), &ratio(1, 5));
        assert_eq!((a1, a2), (int(0), int(1)));
    }

    #[test]
    fn fsst_design_targets() {
        let m = fig_model();
        assert_eq!(fsst_design(&m, &ratio(104, 1000)).unwrap().0.n, 3);
        assert_eq!(fsst_design(&m, &ratio(49, 100)).unwrap().0.n, 1);
    }

    #[test]
    fn sprt_symmetry_and_small_targets() {
        let d = SprtDesign::symmetric(3);
        let op = sprt_analyze(&d, &ratio(1, 2)).unwrap();
        assert_eq!(op.decide_h1, ratio(1, 2));
        assert_eq!(op.expected_sample_size, int(9));
        let (d, (a1, _)) = sprt_design(&fig_model(), &ratio(2, 5)).unwrap();
        assert_eq!(d, SprtDesign::symmetric(1));
        assert_eq!(a1, ratio(1, 5));
        assert!(sprt_analyze(&SprtDesign { lower: 1, upper: 3 }, &ratio(1, 2)).is_err());
    }

    #[test]
    fn sprt_tail_is_monotone() {
        let d = SprtDesign::symmetric(4);
        let th = ratio(1, 2);
        assert_eq!(sprt_tail(&d, &th, 0).unwrap(), int(1));
        assert_eq!(sprt_tail(&d, &th, 3).unwrap(), int(1));
        assert!(sprt_tail(&d, &th, 5).unwrap() < int(1));
    }

    #[test]
    fn kwt_immediate_stop_for_small_costs() {
        let m = NominalModel::bernoulli(ratio(4, 5), ratio(1, 5), ratio(1, 2), ratio(1, 2), 10)
            .unwrap();
        let d = kwt_design(&m, &[ratio(1, 2), ratio(1, 2)]).unwrap();
        assert_eq!(d.truncation(), 0);
        assert_eq!(d.analyze(&ratio(1, 2)).expected_sample_size, int(0));
    }
}
