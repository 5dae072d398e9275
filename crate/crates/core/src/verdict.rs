//! Targets, witnesses and verdicts shared by the MDP and game solvers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::Point;
use crate::runtime::Improviser;

/// Tolerance for dominance and chord witnesses.
pub const WITNESS_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("core has an env node with more than one action")]
    NotAnMdp,
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rationality grid exceeded {0} samples")]
    ResolutionExhausted(usize),
}

/// Requested guarantees, either absolute or as regret ratios in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Target {
    Absolute { p: f64, h: f64 },
    Regret { epsilon: f64, delta: f64 },
}

/// Extreme points used to resolve regret targets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    /// Max-entropy end (rationality 0).
    pub zero: Point,
    /// Max-performance end (rationality infinity).
    pub inf: Point,
}

impl Target {
    /// Absolute `(p, h)` target. Regret form maps `epsilon` onto
    /// `[p at 0, p at inf]` and `delta` onto `[h at inf, h at 0]`.
    pub fn resolve(&self, ends: &Endpoints) -> Result<Point, SolveError> {
        match *self {
            Target::Absolute { p, h } => {
                if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                    return Err(SolveError::InvalidTarget(format!("p = {p} outside [0, 1]")));
                }
                if h < 0.0 || !h.is_finite() {
                    return Err(SolveError::InvalidTarget(format!("h = {h} is negative")));
                }
                Ok(Point::new(p, h))
            }
            Target::Regret { epsilon, delta } => {
                for (name, v) in [("epsilon", epsilon), ("delta", delta)] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(SolveError::InvalidTarget(format!("{name} = {v} outside [0, 1]")));
                    }
                }
                Ok(Point::new(
                    epsilon * (ends.inf.p - ends.zero.p) + ends.zero.p,
                    delta * (ends.zero.h - ends.inf.h) + ends.inf.h,
                ))
            }
        }
    }
}

/// One sampled point of a front, tagged with its rationality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontSample {
    #[serde(with = "crate::io::lambda_serde")]
    pub lambda: f64,
    pub p: f64,
    pub h: f64,
}

impl FrontSample {
    pub fn point(&self) -> Point {
        Point::new(self.p, self.h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Witness {
    /// A single achievable point dominating the target.
    Point { sample: FrontSample },
    /// `w * a + (1 - w) * b` dominates the target.
    Pair { a: FrontSample, b: FrontSample, w: f64 },
    /// Every achievable point satisfies `wp * p + wh * h <= bound`, while the
    /// target exceeds `bound`.
    Scalarization { sample: FrontSample, wp: f64, wh: f64, bound: f64 },
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Realizable { target: Point, witness: Witness, improviser: Improviser },
    Unrealizable { target: Point, witness: Witness },
    Unknown { target: Point, lo: f64, hi: f64, reason: String },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Realizable { .. } => "realizable",
            Verdict::Unrealizable { .. } => "unrealizable",
            Verdict::Unknown { .. } => "unknown",
        }
    }

    pub fn is_realizable(&self) -> bool {
        matches!(self, Verdict::Realizable { .. })
    }

    pub fn is_unrealizable(&self) -> bool {
        matches!(self, Verdict::Unrealizable { .. })
    }

    pub fn target(&self) -> Point {
        match self {
            Verdict::Realizable { target, .. } | Verdict::Unrealizable { target, .. } | Verdict::Unknown { target, .. } => *target,
        }
    }
}

/// Scans sorted samples (rationality increasing) for a dominating sample or
/// an adjacent chord that dominates `target`.
pub fn realizability_witness(samples: &[FrontSample], target: &Point) -> Option<Witness> {
    if let Some(s) = samples.iter().find(|s| s.point().dominates(target, WITNESS_TOL)) {
        return Some(Witness::Point { sample: *s });
    }
    for pair in samples.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.h > target.h && target.h > b.h {
            let w = (target.h - b.h) / (a.h - b.h);
            if w * a.p + (1.0 - w) * b.p >= target.p - WITNESS_TOL {
                return Some(Witness::Pair { a, b, w });
            }
        }
    }
    None
}

/// Scalarization test: `slack` is an additive error bound on the sample's
/// `p` coordinate.
pub fn unrealizability_witness(samples: &[FrontSample], target: &Point, slack: f64) -> Option<Witness> {
    for s in samples {
        let (wp, wh) = if s.lambda.is_infinite() { (1.0, 0.0) } else { (s.lambda, 1.0) };
        let bound = wp * (s.p + slack) + wh * s.h;
        if wp * target.p + wh * target.h > bound + WITNESS_TOL {
            return Some(Witness::Scalarization { sample: *s, wp, wh, bound });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(lambda: f64, p: f64, h: f64) -> FrontSample {
        FrontSample { lambda, p, h }
    }

    #[test]
    fn regret_resolution() {
        let ends = Endpoints { zero: Point::new(0.5, 2f64.ln()), inf: Point::new(1.0, 0.0) };
        let t = Target::Regret { epsilon: 0.5, delta: 1.0 }.resolve(&ends).unwrap();
        assert!((t.p - 0.75).abs() < 1e-15 && (t.h - 2f64.ln()).abs() < 1e-15);
        assert!(Target::Absolute { p: 1.5, h: 0.0 }.resolve(&ends).is_err());
        assert!(Target::Absolute { p: 0.5, h: -1.0 }.resolve(&ends).is_err());
        assert!(Target::Regret { epsilon: 2.0, delta: 0.0 }.resolve(&ends).is_err());
    }

    #[test]
    fn witnesses() {
        let samples = [s(0.0, 0.5, 1.0), s(f64::INFINITY, 1.0, 0.0)];
        assert!(matches!(realizability_witness(&samples, &Point::new(0.7, 0.5)), Some(Witness::Pair { .. })));
        assert!(matches!(realizability_witness(&samples, &Point::new(0.4, 1.0)), Some(Witness::Point { .. })));
        assert!(realizability_witness(&samples, &Point::new(0.8, 0.5)).is_none());
        assert!(unrealizability_witness(&samples, &Point::new(0.5, 1.1), 0.0).is_some());
        assert!(unrealizability_witness(&samples, &Point::new(0.8, 0.5), 0.0).is_none());
    }
}
