//! Oracles shared by the integration tests. Nothing here calls into the
//! recursion or the policy code, so agreement is independent evidence.
#![allow(dead_code)]

use npkwt::rational::{int, pow, ratio};
use npkwt::{NominalModel, PwlConcave, Rational};
use num_traits::{One, Signed, Zero};

pub fn fig_model(horizon: usize) -> NominalModel {
    NominalModel::bernoulli(ratio(4, 5), ratio(1, 5), int(20), int(20), horizon).unwrap()
}

/// Minimizes `c.x + c0` subject to `a x <= b`, `x >= 0`, with `b >= 0`, by
/// the tableau simplex method with Bland's rule in exact arithmetic.
pub fn simplex_min(c: &[Rational], a: &[Vec<Rational>], b: &[Rational]) -> Rational {
    let m = a.len();
    let n = c.len();
    let w = n + m + 1;
    let mut t = vec![vec![Rational::zero(); w]; m + 1];
    for i in 0..m {
        assert!(!b[i].is_negative());
        t[i][..n].clone_from_slice(&a[i]);
        t[i][n + i] = Rational::one();
        t[i][w - 1] = b[i].clone();
    }
    t[m][..n].clone_from_slice(c);
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        let Some(j) = (0..w - 1).find(|&j| t[m][j].is_negative()) else {
            return -t[m][w - 1].clone();
        };
        let mut pick: Option<(usize, Rational)> = None;
        for i in 0..m {
            if t[i][j].is_positive() {
                let r = &t[i][w - 1] / &t[i][j];
                let better = match &pick {
                    None => true,
                    Some((k, best)) => r < *best || (r == *best && basis[i] < basis[*k]),
                };
                if better {
                    pick = Some((i, r));
                }
            }
        }
        let (p, _) = pick.expect("bounded program");
        let piv = t[p][j].clone();
        for v in t[p].iter_mut() {
            *v /= &piv;
        }
        let row = t[p].clone();
        for (i, r) in t.iter_mut().enumerate() {
            if i == p || r[j].is_zero() {
                continue;
            }
            let f = r[j].clone();
            for (v, pv) in r.iter_mut().zip(&row) {
                *v -= &f * pv;
            }
        }
        basis[p] = j;
    }
}

fn stop_cost(model: &NominalModel, h: &[usize]) -> Rational {
    let mut z1 = Rational::one();
    let mut z2 = Rational::one();
    for &x in h {
        z1 *= &model.p1[x];
        z2 *= &model.p2[x];
    }
    let a = &model.lambda1 * z1;
    let b = &model.lambda2 * z2;
    a.min(b)
}

/// Exact minimax value over all behavioral stopping policies on the full
/// history tree, against an adversary choosing any law on observation
/// sequences. Variable `u_h` is the probability of reaching history `h` and
/// sampling again; the adversary's best reply is a single path, so the
/// sample-size term is an epigraph variable over all paths.
pub fn minimax_lp(model: &NominalModel) -> Rational {
    let k = model.alphabet_size();
    let horizon = model.horizon;
    let mut inner: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 1..horizon {
        let mut next = Vec::new();
        for h in &frontier {
            for x in 0..k {
                let mut c: Vec<usize> = h.clone();
                c.push(x);
                next.push(c);
            }
        }
        inner.extend(next.iter().cloned());
        frontier = next;
    }
    let pos = |h: &[usize]| inner.iter().position(|g| g == h).unwrap();
    let nv = inner.len() + 1;
    let tvar = inner.len();
    let mut c = vec![Rational::zero(); nv];
    for (i, h) in inner.iter().enumerate() {
        let mut coef = -stop_cost(model, h);
        for x in 0..k {
            let mut ch = h.clone();
            ch.push(x);
            coef += stop_cost(model, &ch);
        }
        c[i] = coef;
    }
    c[tvar] = Rational::one();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut row = vec![Rational::zero(); nv];
    row[0] = Rational::one();
    a.push(row);
    b.push(Rational::one());
    for (i, h) in inner.iter().enumerate().skip(1) {
        let mut row = vec![Rational::zero(); nv];
        row[i] = Rational::one();
        row[pos(&h[..h.len() - 1])] = -Rational::one();
        a.push(row);
        b.push(Rational::zero());
    }
    for h in frontier {
        for x in 0..k {
            let mut row = vec![Rational::zero(); nv];
            let mut path = h.clone();
            path.push(x);
            for d in 0..horizon {
                row[pos(&path[..d])] = Rational::one();
            }
            row[tvar] = -Rational::one();
            a.push(row);
            b.push(Rational::zero());
        }
    }
    simplex_min(&c, &a, &b) + stop_cost(model, &[])
}

/// Every length-`n` sequence over a `k`-symbol alphabet.
pub fn sequences(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|h: Vec<usize>| {
                (0..k).map(move |x| {
                    let mut c = h.clone();
                    c.push(x);
                    c
                })
            })
            .collect();
    }
    out
}

pub fn seq_prob(seq: &[usize], pmf: &[Rational]) -> Rational {
    seq.iter().map(|&x| pmf[x].clone()).product()
}

pub fn bernoulli_seq_prob(seq: &[usize], theta: &Rational) -> Rational {
    let s = seq.iter().filter(|&&x| x == 1).count() as u32;
    pow(theta, s) * pow(&(Rational::one() - theta), seq.len() as u32 - s)
}

/// Best value over allocations restricted to multiples of `h`, for every
/// grid target: entry `j` is the maximum at `t = j h`.
pub fn grid_max(fs: &[PwlConcave], h: &Rational) -> Vec<Rational> {
    let samples = |f: &PwlConcave| -> Vec<Rational> {
        let mut out = Vec::new();
        let mut a = Rational::zero();
        while a <= *f.upper() {
            out.push(f.eval(&a).unwrap());
            a += h;
        }
        out
    };
    let mut best = samples(&fs[0]);
    for f in &fs[1..] {
        let vals = samples(f);
        let mut next: Vec<Option<Rational>> = vec![None; best.len() + vals.len() - 1];
        for (i, b) in best.iter().enumerate() {
            for (j, v) in vals.iter().enumerate() {
                let s = b + v;
                if next[i + j].as_ref().is_none_or(|cur| s > *cur) {
                    next[i + j] = Some(s);
                }
            }
        }
        best = next.into_iter().map(Option::unwrap).collect();
    }
    best
}

pub fn grid_index(t: &Rational, h: &Rational) -> usize {
    let q = t / h;
    assert!(q.is_integer());
    q.to_integer().try_into().unwrap()
}
