mod common;

use std::sync::OnceLock;

use common::{bernoulli_seq_prob, fig_model, sequences};
use npkwt::baselines::{
    fsst_analyze, fsst_design, kwt_calibrate, kwt_design, sample_size_curve, sprt_analyze,
    sprt_design, sprt_errors, sprt_tail, Baseline, FsstDesign, KwtDesign, SprtDesign,
};
use npkwt::rational::{int, pow, ratio, to_f64};
use npkwt::Rational;
use num_traits::{One, Zero};

fn half() -> Rational {
    ratio(1, 2)
}

fn kwt_1e4() -> &'static KwtDesign {
    static K: OnceLock<KwtDesign> = OnceLock::new();
    K.get_or_init(|| kwt_calibrate(&fig_model(60), &[half(), half()], &ratio(1, 10_000)).unwrap())
}

/// Walk on `{-a, ..., b}` started at 0, absorbed at both ends.
fn gamblers_ruin(a: i64, b: i64, p: &Rational) -> (Rational, Rational) {
    let q = Rational::one() - p;
    let n = a + b;
    let i = a;
    if *p == q {
        return (ratio(i, n), int(i * (n - i)));
    }
    let r = &q / p;
    let win = (Rational::one() - pow(&r, i as u32)) / (Rational::one() - pow(&r, n as u32));
    let time = (int(i) - int(n) * &win) / (&q - p);
    (win, time)
}

#[test]
fn sprt_matches_gamblers_ruin() {
    for (a, b) in [(1, 1), (1, 3), (2, 5), (4, 4), (7, 7), (3, 9)] {
        for theta in [
            ratio(1, 10),
            ratio(1, 3),
            half(),
            ratio(3, 5),
            ratio(4, 5),
            ratio(19, 20),
        ] {
            let op = sprt_analyze(
                &SprtDesign {
                    lower: -a,
                    upper: b,
                },
                &theta,
            )
            .unwrap();
            let (win, time) = gamblers_ruin(a, b, &theta);
            assert_eq!(op.decide_h1, win);
            assert_eq!(op.expected_sample_size, time);
            assert_eq!(&op.decide_h1 + &op.decide_h2, Rational::one());
        }
    }
}

#[test]
fn sprt_rejects_bad_inputs() {
    assert!(sprt_analyze(&SprtDesign { lower: 0, upper: 3 }, &half()).is_err());
    assert!(sprt_analyze(&SprtDesign::symmetric(3), &int(1)).is_err());
}

#[test]
fn sprt_tail_matches_enumeration() {
    let design = SprtDesign {
        lower: -2,
        upper: 3,
    };
    for theta in [ratio(1, 5), half(), ratio(4, 5)] {
        for n in 0..=8 {
            let mut alive = Rational::zero();
            for seq in sequences(n, 2) {
                let mut t = 0i64;
                let survives = seq.iter().all(|&x| {
                    t += if x == 1 { 1 } else { -1 };
                    t > design.lower && t < design.upper
                });
                if survives {
                    alive += bernoulli_seq_prob(&seq, &theta);
                }
            }
            assert_eq!(sprt_tail(&design, &theta, n).unwrap(), alive, "n {n}");
        }
    }
}

#[test]
fn sprt_symmetric_design_at_one_half() {
    let op = sprt_analyze(&SprtDesign::symmetric(5), &half()).unwrap();
    assert_eq!(op.decide_h1, half());
    assert_eq!(op.expected_sample_size, int(25));
}

#[test]
fn sprt_design_is_minimal() {
    let model = fig_model(10);
    let (d, (a1, a2)) = sprt_design(&model, &ratio(2, 5)).unwrap();
    assert_eq!(d, SprtDesign::symmetric(1));
    assert_eq!((a1, a2), (ratio(1, 5), ratio(1, 5)));
    for target in [ratio(1, 1000), ratio(1, 10_000)] {
        let (d, (a1, a2)) = sprt_design(&model, &target).unwrap();
        assert!(a1 <= target && a2 <= target);
        let (b1, _) = sprt_errors(
            &SprtDesign::symmetric(d.upper - 1),
            &ratio(4, 5),
            &ratio(1, 5),
        )
        .unwrap();
        assert!(b1 > target);
    }
    assert_eq!(sprt_design(&model, &ratio(1, 10_000)).unwrap().0.upper, 7);
}

#[test]
fn fsst_probabilities_sum_to_one() {
    for n in [1, 2, 3, 4, 10, 31] {
        for theta in [ratio(1, 7), half(), ratio(4, 5)] {
            let op = fsst_analyze(&FsstDesign::symmetric(n), &theta);
            assert_eq!(&op.decide_h1 + &op.decide_h2, Rational::one());
            assert_eq!(op.expected_sample_size, int(n as i64));
        }
    }
    let even = fsst_analyze(&FsstDesign::symmetric(4), &half());
    assert_eq!(even.decide_h1, half());
}

#[test]
fn fsst_matches_enumeration() {
    for n in 1..=8u32 {
        let d = FsstDesign::symmetric(n);
        for theta in [ratio(1, 5), ratio(2, 3)] {
            let mut h1 = Rational::zero();
            for seq in sequences(n as usize, 2) {
                let s = seq.iter().filter(|&&x| x == 1).count() as u32;
                let p = bernoulli_seq_prob(&seq, &theta);
                if Some(s) == d.tie_at {
                    h1 += p * half();
                } else if s >= d.k {
                    h1 += p;
                }
            }
            assert_eq!(fsst_analyze(&d, &theta).decide_h1, h1);
        }
    }
}

#[test]
fn fsst_design_targets() {
    let model = fig_model(10);
    let (d, (a1, a2)) = fsst_design(&model, &ratio(1, 10_000)).unwrap();
    assert_eq!(d.n, 31);
    assert_eq!(a1, a2);
    assert!((to_f64(&a1) - 9.2e-5).abs() < 5e-6);
    assert_eq!(fsst_design(&model, &ratio(104, 1000)).unwrap().0.n, 3);
    assert_eq!(fsst_design(&model, &ratio(1, 2 + 1)).unwrap().0.n, 1);
}

#[test]
#[allow(clippy::needless_range_loop)]
fn kwt_matches_enumeration() {
    for horizon in [1usize, 4, 8] {
        let d = kwt_design(&fig_model(horizon), &[half(), half()]).unwrap();
        for theta in [ratio(1, 5), half(), ratio(7, 8)] {
            let mut ess = Rational::zero();
            let mut h1 = Rational::zero();
            for seq in sequences(horizon, 2) {
                let p = bernoulli_seq_prob(&seq, &theta);
                let mut m = 0;
                for n in 0..=horizon {
                    if !d.continue_at[n][m] {
                        let z1 = pow(&ratio(4, 5), m as u32) * pow(&ratio(1, 5), (n - m) as u32);
                        let z2 = pow(&ratio(1, 5), m as u32) * pow(&ratio(4, 5), (n - m) as u32);
                        if z1 > z2 {
                            h1 += &p;
                        } else if z1 == z2 {
                            h1 += &p * half();
                        }
                        break;
                    }
                    ess += &p;
                    m += seq[n];
                }
            }
            let op = d.analyze(&theta);
            assert_eq!(op.expected_sample_size, ess);
            assert_eq!(op.decide_h1, h1);
        }
    }
}

#[test]
fn kwt_thresholds_narrow_and_meet() {
    let d = kwt_1e4();
    let bounds = d.bounds();
    let t = d.truncation();
    assert!(t < d.horizon);
    assert!(bounds[t].is_none());
    assert!(bounds[..t].iter().all(Option::is_some));
    // T_n has the parity of n, so each parity class is checked separately.
    // Early on every reachable state continues and the bounds are +-n; once
    // the stopping boundary binds it only moves inward.
    for parity in 0..2 {
        let rows: Vec<(usize, (i64, i64))> = bounds[..t]
            .iter()
            .enumerate()
            .filter(|(n, _)| n % 2 == parity)
            .map(|(n, b)| (n, b.unwrap()))
            .collect();
        let first = rows.iter().position(|&(n, b)| b.1 < n as i64).unwrap();
        assert!(rows[..first]
            .iter()
            .all(|&(n, b)| b == (-(n as i64), n as i64)));
        for w in rows[first..].windows(2) {
            assert!(w[1].1 .1 <= w[0].1 .1, "upper bound grows: {rows:?}");
            assert!(w[1].1 .0 >= w[0].1 .0, "lower bound falls: {rows:?}");
        }
    }
    assert_eq!(t, 37);
}

#[test]
fn kwt_starts_wider_than_the_sprt() {
    let model = fig_model(60);
    let (sprt, _) = sprt_design(&model, &ratio(1, 10_000)).unwrap();
    let widest = kwt_1e4()
        .bounds()
        .iter()
        .flatten()
        .map(|b| b.1)
        .max()
        .unwrap();
    assert!(widest > sprt.upper - 1);
}

#[test]
fn kwt_worst_case_beats_the_sprt() {
    let model = fig_model(60);
    let (sprt, _) = sprt_design(&model, &ratio(1, 10_000)).unwrap();
    let (a1, a2) = kwt_1e4().errors();
    assert!(a1 <= ratio(1, 10_000) && a2 <= ratio(1, 10_000));
    let grid: Vec<Rational> = (1..20).map(|i| ratio(i, 20)).collect();
    let worst = |b: Baseline| {
        sample_size_curve(&[b], &ratio(4, 5), &ratio(1, 5), &grid)
            .unwrap()
            .into_iter()
            .map(|r| r.expected_sample_size)
            .max()
            .unwrap()
    };
    assert!(worst(Baseline::Kwt(Box::new(kwt_1e4().clone()))) <= worst(Baseline::Sprt(sprt)));
}

#[test]
fn kwt_with_cheap_errors_never_samples() {
    let model =
        npkwt::NominalModel::bernoulli(ratio(4, 5), ratio(1, 5), ratio(1, 2), ratio(1, 2), 10)
            .unwrap();
    let d = kwt_design(&model, &[half(), half()]).unwrap();
    assert_eq!(d.truncation(), 0);
    assert_eq!(d.analyze(&half()).expected_sample_size, int(0));
}

#[test]
fn curves_are_symmetric_for_symmetric_designs() {
    let grid: Vec<Rational> = (1..10).map(|i| ratio(i, 10)).collect();
    let tests = [
        Baseline::Sprt(SprtDesign::symmetric(4)),
        Baseline::Fsst(FsstDesign::symmetric(6)),
        Baseline::Kwt(Box::new(
            kwt_design(&fig_model(12), &[half(), half()]).unwrap(),
        )),
    ];
    let rows = sample_size_curve(&tests, &ratio(4, 5), &ratio(1, 5), &grid).unwrap();
    for chunk in rows.chunks(grid.len()) {
        for i in 0..grid.len() {
            assert_eq!(
                chunk[i].expected_sample_size,
                chunk[grid.len() - 1 - i].expected_sample_size
            );
        }
        assert_eq!(chunk[0].alpha1, chunk[0].alpha2);
    }
    assert!(rows[grid.len()..2 * grid.len()]
        .iter()
        .all(|r| r.expected_sample_size == int(6)));
    assert!(sample_size_curve(&tests, &ratio(4, 5), &ratio(1, 5), &[int(1)]).is_err());
}

#[test]
fn two_symbol_models_only() {
    let m = npkwt::NominalModel::new(
        vec![half(), ratio(1, 4), ratio(1, 4)],
        vec![ratio(1, 4), ratio(1, 4), half()],
        int(2),
        int(2),
        3,
    )
    .unwrap();
    assert!(sprt_design(&m, &ratio(1, 10)).is_err());
    assert!(fsst_design(&m, &ratio(1, 10)).is_err());
}
