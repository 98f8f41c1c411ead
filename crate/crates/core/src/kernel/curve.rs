use std::f64::consts::FRAC_1_SQRT_2;

use super::bezier::BezierCurve2;
use super::knots::KnotVector;
use crate::error::{Error, Result};
use crate::geom::{Aabb2, ParamPoint};

/// A rational B-spline curve in a surface's parameter space (a trimming
/// curve).
#[derive(Debug, Clone)]
pub struct RationalCurve2 {
    knots: KnotVector,
    control: Vec<ParamPoint>,
    weights: Vec<f64>,
    beziers: Vec<BezierCurve2>,
}

impl PartialEq for RationalCurve2 {
    fn eq(&self, o: &Self) -> bool {
        self.knots == o.knots && self.control == o.control && self.weights == o.weights
    }
}

impl RationalCurve2 {
    pub fn new(knots: KnotVector, control: Vec<ParamPoint>, weights: Vec<f64>) -> Result<Self> {
        if control.len() != knots.control_count() {
            return Err(Error::InvalidGeometry(format!(
                "curve has {} control points but its knots require {}",
                control.len(),
                knots.control_count()
            )));
        }
        if weights.len() != control.len() {
            return Err(Error::InvalidGeometry(
                "curve weight count differs from control point count".into(),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "non-positive curve weight {w}"
            )));
        }
        if control.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGeometry(
                "non-finite curve control point".into(),
            ));
        }
        Ok(Self::build(knots, control, weights))
    }

    /// Constructs without validating weights; the counts must still agree.
    pub(crate) fn build(knots: KnotVector, control: Vec<ParamPoint>, weights: Vec<f64>) -> Self {
        let hom: Vec<[f64; 3]> = control
            .iter()
            .zip(&weights)
            .map(|(p, &w)| [p.u * w, p.v * w, w])
            .collect();
        let beziers = knots
            .decompose(&hom)
            .into_iter()
            .map(|(cw, range)| BezierCurve2 { cw, range })
            .collect();
        Self {
            knots,
            control,
            weights,
            beziers,
        }
    }

    /// Polynomial curve through `points` with unit weights and a Bézier knot
    /// vector on `[0, 1]`.
    pub fn bezier(points: Vec<ParamPoint>) -> Self {
        let n = points.len();
        let w = vec![1.0; n];
        Self::build(KnotVector::bezier(n - 1, 0.0, 1.0), points, w)
    }

    pub fn line(a: ParamPoint, b: ParamPoint) -> Self {
        Self::bezier(vec![a, b])
    }

    /// Closed polyline as a single degree-1 spline with uniform knots.
    pub fn polyline(points: &[ParamPoint]) -> Self {
        let n = points.len();
        let mut knots = vec![0.0, 0.0];
        for i in 1..n - 1 {
            knots.push(i as f64 / (n - 1) as f64);
        }
        knots.extend([1.0, 1.0]);
        Self::build(
            KnotVector::new(knots, 1).expect("valid polyline knots"),
            points.to_vec(),
            vec![1.0; n],
        )
    }

    pub(crate) fn from_bezier(b: &BezierCurve2) -> Self {
        let control: Vec<ParamPoint> = b.points().collect();
        let weights: Vec<f64> = b.cw.iter().map(|h| h[2]).collect();
        Self::build(
            KnotVector::bezier(b.degree(), b.range.0, b.range.1),
            control,
            weights,
        )
    }

    /// Joins consecutive Bézier pieces (sharing endpoints) into one spline.
    pub(crate) fn from_bezier_chain(pieces: &[BezierCurve2]) -> Self {
        if pieces.len() == 1 {
            return Self::from_bezier(&pieces[0]);
        }
        let p = pieces.iter().map(|b| b.degree()).max().unwrap_or(1);
        let pieces: Vec<BezierCurve2> = pieces.iter().map(|b| elevate_to(b, p)).collect();
        let mut knots = vec![pieces[0].range.0; p + 1];
        let mut hom: Vec<[f64; 3]> = vec![pieces[0].cw[0]];
        for (k, b) in pieces.iter().enumerate() {
            // scale so the shared homogeneous endpoint matches
            let scale = if k == 0 {
                1.0
            } else {
                hom.last().unwrap()[2] / b.cw[0][2]
            };
            for h in &b.cw[1..] {
                hom.push([h[0] * scale, h[1] * scale, h[2] * scale]);
            }
            if k + 1 < pieces.len() {
                knots.extend(std::iter::repeat_n(b.range.1, p));
            }
        }
        knots.extend(std::iter::repeat_n(pieces.last().unwrap().range.1, p + 1));
        let control = hom
            .iter()
            .map(|h| ParamPoint::new(h[0] / h[2], h[1] / h[2]))
            .collect();
        let weights = hom.iter().map(|h| h[2]).collect();
        Self::build(
            KnotVector::new(knots, p).expect("chain knots are valid"),
            control,
            weights,
        )
    }

    pub fn degree(&self) -> usize {
        self.knots.degree()
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn control(&self) -> &[ParamPoint] {
        &self.control
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn domain(&self) -> (f64, f64) {
        self.knots.domain()
    }

    pub fn beziers(&self) -> &[BezierCurve2] {
        &self.beziers
    }

    pub fn start(&self) -> ParamPoint {
        self.control[0]
    }

    pub fn end(&self) -> ParamPoint {
        *self.control.last().unwrap()
    }

    pub fn bbox(&self) -> Aabb2 {
        Aabb2::from_points(self.control.iter().copied())
    }

    fn span_of(&self, t: f64) -> usize {
        let i = self.beziers.partition_point(|b| b.range.1 < t);
        i.min(self.beziers.len() - 1)
    }

    /// Point and derivative at `t`.
    pub fn eval(&self, t: f64) -> Result<(ParamPoint, ParamPoint)> {
        let (a, b) = self.domain();
        let slack = 1e-12 * (b - a);
        if !(t >= a - slack && t <= b + slack) {
            return Err(Error::Domain(t, a, b));
        }
        Ok(self.beziers[self.span_of(t)].eval(t))
    }

    /// Same curve traversed in the opposite direction, on the same domain.
    pub fn reversed(&self) -> Self {
        let (a, b) = self.domain();
        let knots: Vec<f64> = self
            .knots
            .values()
            .iter()
            .rev()
            .map(|k| a + b - k)
            .collect();
        let mut control = self.control.clone();
        control.reverse();
        let mut weights = self.weights.clone();
        weights.reverse();
        Self::build(
            KnotVector::new(knots, self.degree()).expect("reversed knots stay valid"),
            control,
            weights,
        )
    }

    /// Degree elevation by one (exact, same parametrization).
    pub fn elevated(&self) -> Self {
        let pieces: Vec<BezierCurve2> = self
            .beziers
            .iter()
            .map(|b| elevate_to(b, b.degree() + 1))
            .collect();
        Self::from_bezier_chain(&pieces)
    }

    /// Copy with every control point mapped through `f`.
    pub fn map_points(&self, f: impl Fn(ParamPoint) -> ParamPoint) -> Self {
        Self::build(
            self.knots.clone(),
            self.control.iter().map(|&p| f(p)).collect(),
            self.weights.clone(),
        )
    }
}

fn elevate_to(b: &BezierCurve2, p: usize) -> BezierCurve2 {
    let mut cw = b.cw.clone();
    while cw.len() - 1 < p {
        let n = cw.len() - 1;
        let mut next = Vec::with_capacity(n + 2);
        next.push(cw[0]);
        for i in 1..=n {
            let a = i as f64 / (n + 1) as f64;
            let mut h = [0.0; 3];
            for c in 0..3 {
                h[c] = a * cw[i - 1][c] + (1.0 - a) * cw[i][c];
            }
            next.push(h);
        }
        next.push(cw[n]);
        cw = next;
    }
    BezierCurve2 { cw, range: b.range }
}

/// Orientation of a generated loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopOrientation {
    CounterClockwise,
    Clockwise,
}

/// Circle as four rational quadratic arcs (middle weights √2/2), each on the
/// parameter interval `[0, 1]`.
pub fn circle_loop(
    center: ParamPoint,
    radius: f64,
    orientation: LoopOrientation,
) -> Vec<RationalCurve2> {
    let p = |x: f64, y: f64| ParamPoint::new(center.u + radius * x, center.v + radius * y);
    let corners = [
        (p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)),
        (p(0.0, 1.0), p(-1.0, 1.0), p(-1.0, 0.0)),
        (p(-1.0, 0.0), p(-1.0, -1.0), p(0.0, -1.0)),
        (p(0.0, -1.0), p(1.0, -1.0), p(1.0, 0.0)),
    ];
    let mut arcs: Vec<RationalCurve2> = corners
        .iter()
        .map(|&(a, m, b)| {
            RationalCurve2::build(
                KnotVector::bezier(2, 0.0, 1.0),
                vec![a, m, b],
                vec![1.0, FRAC_1_SQRT_2, 1.0],
            )
        })
        .collect();
    if orientation == LoopOrientation::Clockwise {
        arcs.reverse();
        arcs = arcs.iter().map(|c| c.reversed()).collect();
    }
    arcs
}

/// Counterclockwise circular arc from angle `a0` to `a1 > a0`, split into
/// rational quadratic pieces of at most a quarter turn.
pub fn circle_arc(center: ParamPoint, radius: f64, a0: f64, a1: f64) -> Vec<RationalCurve2> {
    let span = a1 - a0;
    let n = ((span / std::f64::consts::FRAC_PI_2) - 1e-12)
        .ceil()
        .max(1.0) as usize;
    let step = span / n as f64;
    let at = |a: f64| ParamPoint::new(center.u + radius * a.cos(), center.v + radius * a.sin());
    (0..n)
        .map(|k| {
            let s = a0 + k as f64 * step;
            let e = s + step;
            let half = 0.5 * step;
            let m = s + half;
            let mid = ParamPoint::new(
                center.u + radius * m.cos() / half.cos(),
                center.v + radius * m.sin() / half.cos(),
            );
            RationalCurve2::build(
                KnotVector::bezier(2, 0.0, 1.0),
                vec![at(s), mid, at(e)],
                vec![1.0, half.cos(), 1.0],
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_circle_midpoint() {
        let arc = &circle_loop(
            ParamPoint::new(0.0, 0.0),
            1.0,
            LoopOrientation::CounterClockwise,
        )[0];
        let (p, _) = arc.eval(0.5).unwrap();
        assert!((p.u - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((p.v - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn linear_curve_eval() {
        let c = RationalCurve2::line(ParamPoint::new(0.0, 0.0), ParamPoint::new(2.0, 2.0));
        let (p, d) = c.eval(0.25).unwrap();
        assert_eq!(p, ParamPoint::new(0.5, 0.5));
        assert!((d.u - 2.0).abs() < 1e-15 && (d.v - 2.0).abs() < 1e-15);
        assert!(matches!(c.eval(1.5), Err(Error::Domain(..))));
    }

    #[test]
    fn circle_closure_and_radius() {
        for orient in [
            LoopOrientation::CounterClockwise,
            LoopOrientation::Clockwise,
        ] {
            let c = ParamPoint::new(0.5, 0.5);
            let arcs = circle_loop(c, 0.25, orient);
            for k in 0..4 {
                let e = arcs[k].end();
                let s = arcs[(k + 1) % 4].start();
                assert!(e.distance(s) < 1e-15);
                for i in 0..=16 {
                    let (p, _) = arcs[k].eval(i as f64 / 16.0).unwrap();
                    assert!((p.distance(c) - 0.25).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn arbitrary_arc_stays_on_circle() {
        let c = ParamPoint::new(0.1, -0.3);
        let arcs = circle_arc(c, 0.7, 0.3, 5.0);
        assert_eq!(arcs.len(), 3);
        for a in &arcs {
            for i in 0..=10 {
                let (p, _) = a.eval(i as f64 / 10.0).unwrap();
                assert!((p.distance(c) - 0.7).abs() < 1e-12);
            }
        }
        let (end, _) = arcs[2].eval(1.0).unwrap();
        assert!(
            end.distance(ParamPoint::new(
                c.u + 0.7 * 5f64.cos(),
                c.v + 0.7 * 5f64.sin()
            )) < 1e-12
        );
    }

    #[test]
    fn reversal_and_elevation_preserve_the_point_set() {
        let c = RationalCurve2::new(
            KnotVector::new(vec![0.0, 0.0, 0.0, 0.4, 1.0, 1.0, 1.0], 2).unwrap(),
            vec![
                ParamPoint::new(0.0, 0.0),
                ParamPoint::new(0.3, 0.8),
                ParamPoint::new(0.9, 0.2),
                ParamPoint::new(1.0, 1.0),
            ],
            vec![1.0, 2.0, 0.5, 1.0],
        )
        .unwrap();
        let r = c.reversed();
        let e = c.elevated();
        assert_eq!(e.degree(), 3);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let (p, _) = c.eval(t).unwrap();
            let (q, _) = r.eval(1.0 - t).unwrap();
            let (s, _) = e.eval(t).unwrap();
            assert!(p.distance(q) < 1e-13);
            assert!(p.distance(s) < 1e-13);
        }
    }
}
