use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::env::Observation;
use crate::expr::Token;
use crate::policy::SymbolicPolicy;

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.points)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub i_ratio: Axis,
    pub rtt_ratio: Axis,
    /// Loss ratio held fixed over the grid.
    pub x4: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            i_ratio: Axis {
                lo: 0.2,
                hi: 10.0,
                points: 50,
            },
            rtt_ratio: Axis {
                lo: 1.0,
                hi: 10.0,
                points: 50,
            },
            x4: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub i_ratio: f64,
    pub rtt_ratio: f64,
    pub action: f64,
}

/// Mapped actions over (intersend ratio, RTT ratio) for a fixed minimum RTT.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisGrid {
    /// Minimum RTT in seconds.
    pub c: f64,
    pub spec: GridSpec,
    /// Row-major: RTT ratio outer, intersend ratio inner.
    pub cells: Vec<GridCell>,
}

impl AnalysisGrid {
    fn at(&self, r: usize, i: usize) -> &GridCell {
        &self.cells[r * self.spec.i_ratio.points + i]
    }

    /// Cells where the action equals `level` or crosses it towards the next
    /// cell along either axis.
    pub fn level_set(&self, level: f64) -> Vec<GridCell> {
        let (ni, nr) = (self.spec.i_ratio.points, self.spec.rtt_ratio.points);
        let side = |a: f64| (a - level).signum();
        let mut out = Vec::new();
        for r in 0..nr {
            for i in 0..ni {
                let c = self.at(r, i);
                let crosses = c.action == level
                    || (i + 1 < ni && side(self.at(r, i + 1).action) != side(c.action))
                    || (r + 1 < nr && side(self.at(r + 1, i).action) != side(c.action));
                if crosses {
                    out.push(*c);
                }
            }
        }
        out
    }

    /// True when cells lie strictly on both sides of `level`.
    pub fn straddles(&self, level: f64) -> bool {
        self.cells.iter().any(|c| c.action > level) && self.cells.iter().any(|c| c.action < level)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        for c in &self.cells {
            out.serialize(c)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn observation(i_ratio: f64, rtt_ratio: f64, c: f64, x4: f64) -> Observation {
    Observation {
        x1: i_ratio * c,
        x2: rtt_ratio * c,
        x3: rtt_ratio,
        x4,
    }
}

/// Evaluates `n(expr(i·c, r·c, r, x4))` over the grid.
pub fn contour_grid(policy: &SymbolicPolicy, c: f64, spec: GridSpec) -> AnalysisGrid {
    let is = spec.i_ratio.values();
    let rs = spec.rtt_ratio.values();
    let mut cells = Vec::with_capacity(is.len() * rs.len());
    for &r in &rs {
        for &i in &is {
            let a = policy.action(&observation(i, r, c, spec.x4)).get();
            cells.push(GridCell {
                i_ratio: i,
                rtt_ratio: r,
                action: a,
            });
        }
    }
    AnalysisGrid { c, spec, cells }
}

/// A curve family member: fixed RTT ratio and minimum RTT.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub rtt_ratio: f64,
    /// Minimum RTT in seconds.
    pub c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanPoint {
    pub rtt_ratio: f64,
    pub c: f64,
    pub i_ratio: f64,
    /// Cosine argument reduced to `[0, 2π)`.
    pub argument: f64,
    pub action: f64,
}

/// For a cos-rooted policy, the reduced cosine argument and the mapped
/// action along `i_ratio` for every slice.
pub fn cosine_span(
    policy: &SymbolicPolicy,
    slices: &[Slice],
    i_ratio: Axis,
) -> Result<Vec<SpanPoint>, EvalError> {
    if policy.expr.root() != Token::Cos {
        return Err(EvalError::NotCosineRooted(policy.expr.to_infix()));
    }
    let argument = policy.expr.subtree(1);
    let mut out = Vec::new();
    for s in slices {
        for i in i_ratio.values() {
            let obs = observation(i, s.rtt_ratio, s.c, 0.0);
            let raw = argument.evaluate(&obs.to_vars(policy.units));
            let mut reduced = raw.rem_euclid(TAU);
            if reduced >= TAU {
                reduced = 0.0;
            }
            out.push(SpanPoint {
                rtt_ratio: s.rtt_ratio,
                c: s.c,
                i_ratio: i,
                argument: reduced,
                action: policy.action(&obs).get(),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponsePoint {
    pub rtt_ratio: f64,
    pub c: f64,
    pub i_ratio: f64,
    pub action: f64,
    /// Intersend ratio after applying the action, `i_ratio / action`.
    pub new_i_ratio: f64,
}

/// Post-action intersend ratio along `i_ratio` for every slice.
pub fn intersend_response(
    policy: &SymbolicPolicy,
    slices: &[Slice],
    i_ratio: Axis,
) -> Vec<ResponsePoint> {
    let mut out = Vec::new();
    for s in slices {
        for i in i_ratio.values() {
            let a = policy.action(&observation(i, s.rtt_ratio, s.c, 0.0)).get();
            out.push(ResponsePoint {
                rtt_ratio: s.rtt_ratio,
                c: s.c,
                i_ratio: i,
                action: a,
                new_i_ratio: i / a,
            });
        }
    }
    out
}

/// Largest pointwise action difference between curves that share an RTT
/// ratio and intersend ratio but differ in `c`.
pub fn max_action_gap(points: &[ResponsePoint]) -> f64 {
    let mut gap: f64 = 0.0;
    for (k, a) in points.iter().enumerate() {
        for b in &points[k + 1..] {
            if a.rtt_ratio == b.rtt_ratio && a.i_ratio == b.i_ratio && a.c != b.c {
                gap = gap.max((a.action - b.action).abs());
            }
        }
    }
    gap
}

pub fn write_rows<W: std::io::Write, T: Serialize>(rows: &[T], w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
