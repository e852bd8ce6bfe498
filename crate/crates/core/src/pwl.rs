//! Concave, nondecreasing, piecewise-linear functions with nonnegative
//! integer slopes on a rational interval `[0, U]`.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::rational::{self, Rational};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub slope: u64,
    pub width: Rational,
}

impl Segment {
    pub fn new(slope: u64, width: Rational) -> Self {
        Segment { slope, width }
    }
}

/// Canonical form: widths positive, slopes strictly decreasing, widths sum
/// to the domain's upper end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PwlConcave {
    upper: Rational,
    f0: Rational,
    segments: Vec<Segment>,
}

/// Superdifferential `[lo, hi]` at a point. `lo` is the right derivative,
/// `hi` the left derivative; at `t = 0` the left derivative is taken to be
/// the first slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuperDiff {
    pub lo: u64,
    pub hi: u64,
}

impl SuperDiff {
    pub fn contains(&self, v: u64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn intersect(&self, other: &SuperDiff) -> Option<SuperDiff> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(SuperDiff { lo, hi })
    }
}

impl fmt::Display for SuperDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl PwlConcave {
    /// Builds a function from raw segments, dropping zero widths and merging
    /// equal adjacent slopes.
    pub fn new(f0: Rational, segments: Vec<Segment>, upper: Rational) -> Result<Self, Error> {
        if upper.is_negative() {
            return Err(Error::InvalidPwl("negative domain".into()));
        }
        if f0.is_negative() {
            return Err(Error::InvalidPwl("negative value at zero".into()));
        }
        let mut merged: Vec<Segment> = Vec::with_capacity(segments.len());
        for seg in segments {
            if seg.width.is_negative() {
                return Err(Error::InvalidPwl("negative width".into()));
            }
            if seg.width.is_zero() {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.slope == seg.slope => last.width += seg.width,
                Some(last) if last.slope < seg.slope => {
                    return Err(Error::InvalidPwl(format!(
                        "slope {} follows {}; not concave",
                        seg.slope, last.slope
                    )))
                }
                _ => merged.push(seg),
            }
        }
        let total: Rational = merged.iter().map(|s| &s.width).sum();
        if total != upper {
            return Err(Error::InvalidPwl(format!(
                "widths sum to {}, domain is {}",
                rational::to_string(&total),
                rational::to_string(&upper)
            )));
        }
        Ok(PwlConcave {
            upper,
            f0,
            segments: merged,
        })
    }

    pub fn constant(c: Rational, upper: Rational) -> Self {
        let segments = if upper.is_zero() {
            vec![]
        } else {
            vec![Segment::new(0, upper.clone())]
        };
        PwlConcave {
            upper,
            f0: c,
            segments,
        }
    }

    pub fn upper(&self) -> &Rational {
        &self.upper
    }

    pub fn value_at_zero(&self) -> &Rational {
        &self.f0
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn max_slope(&self) -> u64 {
        self.segments.first().map_or(0, |s| s.slope)
    }

    /// Breakpoints including both domain ends.
    pub fn breakpoints(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero()];
        let mut t = Rational::zero();
        for seg in &self.segments {
            t += &seg.width;
            out.push(t.clone());
        }
        if self.segments.is_empty() {
            out.push(self.upper.clone());
            out.dedup();
        }
        out
    }

    fn check_domain(&self, t: &Rational) -> Result<(), Error> {
        if t.is_negative() || *t > self.upper {
            return Err(Error::OutOfDomain(rational::to_string(t)));
        }
        Ok(())
    }

    pub fn eval(&self, t: &Rational) -> Result<Rational, Error> {
        self.check_domain(t)?;
        let mut value = self.f0.clone();
        let mut left = t.clone();
        for seg in &self.segments {
            if left.is_zero() {
                break;
            }
            let used = if left < seg.width {
                left.clone()
            } else {
                seg.width.clone()
            };
            value += Rational::from_integer(seg.slope.into()) * &used;
            left -= used;
        }
        Ok(value)
    }

    pub fn superdiff(&self, t: &Rational) -> Result<SuperDiff, Error> {
        self.check_domain(t)?;
        let first = self.max_slope();
        let mut start = Rational::zero();
        let mut prev: Option<u64> = None;
        for seg in &self.segments {
            let end = &start + &seg.width;
            if *t < end {
                let hi = if *t > start {
                    seg.slope
                } else {
                    prev.unwrap_or(first)
                };
                return Ok(SuperDiff { lo: seg.slope, hi });
            }
            prev = Some(seg.slope);
            start = end;
        }
        Ok(SuperDiff {
            lo: 0,
            hi: prev.unwrap_or(0),
        })
    }

    pub fn right_slope(&self, t: &Rational) -> Result<u64, Error> {
        Ok(self.superdiff(t)?.lo)
    }

    /// Smallest `t` with `f(t) >= c`, if any.
    pub fn first_reach(&self, c: &Rational) -> Option<Rational> {
        if *c <= self.f0 {
            return Some(Rational::zero());
        }
        let mut value = self.f0.clone();
        let mut start = Rational::zero();
        for seg in &self.segments {
            let slope = Rational::from_integer(seg.slope.into());
            let end_value = &value + &slope * &seg.width;
            if end_value >= *c {
                return Some(start + (c - &value) / slope);
            }
            value = end_value;
            start += &seg.width;
        }
        None
    }

    /// `t -> min(f(t), c)`.
    pub fn cap_min_const(&self, c: &Rational) -> PwlConcave {
        match self.first_reach(c) {
            None => self.clone(),
            Some(t) if t.is_zero() => PwlConcave::constant(c.clone(), self.upper.clone()),
            Some(t) => {
                let mut segments = Vec::new();
                let mut left = t.clone();
                for seg in &self.segments {
                    if left.is_zero() {
                        break;
                    }
                    let used = if left < seg.width {
                        left.clone()
                    } else {
                        seg.width.clone()
                    };
                    left -= &used;
                    segments.push(Segment::new(seg.slope, used));
                }
                segments.push(Segment::new(0, &self.upper - &t));
                PwlConcave::new(self.f0.clone(), segments, self.upper.clone())
                    .expect("capping preserves canonical form")
            }
        }
    }

    /// `t -> t + f(t)`.
    pub fn lift_identity(&self) -> PwlConcave {
        PwlConcave {
            upper: self.upper.clone(),
            f0: self.f0.clone(),
            segments: self
                .segments
                .iter()
                .map(|s| Segment::new(s.slope + 1, s.width.clone()))
                .collect(),
        }
    }

    /// Debug dump: a header `f0 num/den U num/den`, then one line
    /// `slope width_num/width_den` per segment.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "f0 {} U {}\n",
            rational::to_string(&self.f0),
            rational::to_string(&self.upper)
        );
        for seg in &self.segments {
            out.push_str(&format!(
                "{} {}\n",
                seg.slope,
                rational::to_string(&seg.width)
            ));
        }
        out
    }
}

impl fmt::Display for PwlConcave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// One merged slope class of a sup-convolution: the operands that
/// contribute to it and the width each one supplies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitGroup {
    pub slope: u64,
    pub start: Rational,
    pub width: Rational,
    pub parts: Vec<(usize, Rational)>,
}

/// Argmax record of a sup-convolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMap {
    pub arity: usize,
    pub groups: Vec<SplitGroup>,
}

impl SplitMap {
    pub fn total(&self) -> Rational {
        self.groups
            .last()
            .map_or_else(Rational::zero, |g| &g.start + &g.width)
    }

    /// Maximizing allocation `(a_1, ..., a_K)` with `sum a_x = t`. Inside a
    /// slope class all contributing operands advance in proportion to their
    /// widths.
    pub fn split_at(&self, t: &Rational) -> Result<Vec<Rational>, Error> {
        if t.is_negative() || *t > self.total() {
            return Err(Error::OutOfDomain(rational::to_string(t)));
        }
        let mut alloc = vec![Rational::zero(); self.arity];
        for group in &self.groups {
            if *t <= group.start {
                break;
            }
            let end = &group.start + &group.width;
            if *t >= end {
                for (x, w) in &group.parts {
                    alloc[*x] += w;
                }
            } else {
                let frac = (t - &group.start) / &group.width;
                for (x, w) in &group.parts {
                    alloc[*x] += w * &frac;
                }
            }
        }
        Ok(alloc)
    }

    /// Direction in which mass leaves zero: the normalized composition of the
    /// steepest slope class.
    pub fn limit_direction(&self) -> Vec<Rational> {
        let mut dir = vec![Rational::zero(); self.arity];
        if let Some(group) = self.groups.first() {
            for (x, w) in &group.parts {
                dir[*x] += w / &group.width;
            }
        }
        dir
    }
}

/// `d(t) = max { sum_x f_x(a_x) : a_x >= 0, sum_x a_x = t }` on `[0, target]`.
pub fn supconv(fs: &[PwlConcave], target: &Rational) -> Result<(PwlConcave, SplitMap), Error> {
    if fs.is_empty() {
        return Err(Error::InvalidPwl("sup-convolution of no operands".into()));
    }
    let capacity: Rational = fs.iter().map(|f| &f.upper).sum();
    if *target > capacity || target.is_negative() {
        return Err(Error::OutOfDomain(format!(
            "target {} exceeds total width {}",
            rational::to_string(target),
            rational::to_string(&capacity)
        )));
    }
    let f0: Rational = fs.iter().map(|f| &f.f0).sum();
    let mut pieces: Vec<(u64, usize, &Rational)> = fs
        .iter()
        .enumerate()
        .flat_map(|(x, f)| f.segments.iter().map(move |s| (s.slope, x, &s.width)))
        .collect();
    pieces.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut groups: Vec<SplitGroup> = Vec::new();
    let mut segments = Vec::new();
    let mut start = Rational::zero();
    let mut i = 0;
    while i < pieces.len() && start < *target {
        let slope = pieces[i].0;
        let mut j = i;
        let mut parts = Vec::new();
        let mut width = Rational::zero();
        while j < pieces.len() && pieces[j].0 == slope {
            parts.push((pieces[j].1, pieces[j].2.clone()));
            width += pieces[j].2;
            j += 1;
        }
        let room = target - &start;
        if width > room {
            let frac = &room / &width;
            for part in parts.iter_mut() {
                part.1 = &part.1 * &frac;
            }
            width = room;
        }
        segments.push(Segment::new(slope, width.clone()));
        groups.push(SplitGroup {
            slope,
            start: start.clone(),
            width: width.clone(),
            parts,
        });
        start += width;
        i = j;
    }
    let result = PwlConcave::new(f0, segments, target.clone())?;
    Ok((
        result,
        SplitMap {
            arity: fs.len(),
            groups,
        },
    ))
}
