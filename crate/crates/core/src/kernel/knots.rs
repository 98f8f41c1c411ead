use crate::error::{Error, Result};

/// A clamped, non-decreasing knot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    values: Vec<f64>,
    degree: usize,
}

/// Bézier control polygon of one span with its parameter range.
pub type Segment<const N: usize> = (Vec<[f64; N]>, (f64, f64));

impl KnotVector {
    /// Validates monotonicity, clamping (end multiplicity `degree + 1`) and
    /// interior multiplicity at most `degree`.
    pub fn new(values: Vec<f64>, degree: usize) -> Result<Self> {
        if values.len() < 2 * (degree + 1) {
            return Err(Error::InvalidGeometry(format!(
                "knot vector of length {} too short for degree {degree}",
                values.len()
            )));
        }
        if values.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite knot".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidGeometry(
                "knots are not non-decreasing".into(),
            ));
        }
        let n = values.len();
        let first = values[0];
        let last = values[n - 1];
        if values[..=degree].iter().any(|&k| k != first)
            || values[n - degree - 1..].iter().any(|&k| k != last)
        {
            return Err(Error::InvalidGeometry(format!(
                "knot vector is not clamped (end multiplicity must be {})",
                degree + 1
            )));
        }
        if !(last > first) {
            return Err(Error::InvalidGeometry("empty knot domain".into()));
        }
        let kv = Self { values, degree };
        for (_, m) in kv.interior_breaks() {
            if m > degree {
                return Err(Error::InvalidGeometry(format!(
                    "interior knot multiplicity {m} exceeds degree {degree}"
                )));
            }
        }
        Ok(kv)
    }

    /// Clamped uniform knots on `[0, 1]` with `spans` spans.
    pub fn uniform(degree: usize, spans: usize) -> Self {
        let mut values = vec![0.0; degree + 1];
        for s in 1..spans {
            values.push(s as f64 / spans as f64);
        }
        values.extend(std::iter::repeat_n(1.0, degree + 1));
        Self { values, degree }
    }

    /// Bézier knot vector on `[a, b]`.
    pub fn bezier(degree: usize, a: f64, b: f64) -> Self {
        let mut values = vec![a; degree + 1];
        values.extend(std::iter::repeat_n(b, degree + 1));
        Self { values, degree }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of control points this knot vector supports.
    pub fn control_count(&self) -> usize {
        self.values.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.values[0], self.values[self.values.len() - 1])
    }

    /// Distinct interior knots with their multiplicities.
    fn interior_breaks(&self) -> Vec<(f64, usize)> {
        let (a, b) = self.domain();
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &k in &self.values {
            if k <= a || k >= b {
                continue;
            }
            match out.last_mut() {
                Some((v, m)) if *v == k => *m += 1,
                _ => out.push((k, 1)),
            }
        }
        out
    }

    /// Span boundaries `a = b_0 < b_1 < ... < b_n = b`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.domain();
        let mut out = vec![a];
        out.extend(self.interior_breaks().into_iter().map(|(k, _)| k));
        out.push(b);
        out
    }

    /// Adds `t` to the knot values without touching any control polygon.
    pub(crate) fn insert_value(&mut self, t: f64) {
        let k = self.values.partition_point(|&x| x <= t);
        self.values.insert(k, t);
    }

    /// Inserts `t` once (Boehm) into a homogeneous control polygon.
    pub(crate) fn insert<const N: usize>(&mut self, pts: &mut Vec<[f64; N]>, t: f64) {
        let p = self.degree;
        // k: last index with values[k] <= t
        let k = self.values.partition_point(|&x| x <= t) - 1;
        let mut out = Vec::with_capacity(pts.len() + 1);
        out.extend_from_slice(&pts[..=k - p]);
        for i in (k - p + 1)..=k {
            let denom = self.values[i + p] - self.values[i];
            let alpha = if denom > 0.0 {
                (t - self.values[i]) / denom
            } else {
                0.0
            };
            let mut q = [0.0; N];
            for c in 0..N {
                q[c] = alpha * pts[i][c] + (1.0 - alpha) * pts[i - 1][c];
            }
            out.push(q);
        }
        for pt in pts.iter().skip(k) {
            out.push(*pt);
        }
        self.values.insert(k + 1, t);
        *pts = out;
    }

    /// Splits a homogeneous control polygon into Bézier segments, one per
    /// non-empty span, returned together with the span parameter ranges.
    pub fn decompose<const N: usize>(&self, pts: &[[f64; N]]) -> Vec<Segment<N>> {
        let p = self.degree;
        let mut kv = self.clone();
        let mut cps = pts.to_vec();
        for (k, m) in self.interior_breaks() {
            for _ in m..p {
                kv.insert(&mut cps, k);
            }
        }
        let bps = self.breakpoints();
        (0..bps.len() - 1)
            .map(|s| (cps[s * p..=s * p + p].to_vec(), (bps[s], bps[s + 1])))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unclamped_and_decreasing() {
        assert!(KnotVector::new(vec![0.0, 0.5, 1.0, 1.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 1.0, 0.5, 1.0, 1.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 0.5, 0.5, 0.5, 1.0, 1.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0], 2).is_ok());
    }

    #[test]
    fn decompose_linear_spline() {
        let kv = KnotVector::new(vec![0.0, 0.0, 0.25, 1.0, 1.0], 1).unwrap();
        let pts = [[0.0, 1.0], [1.0, 1.0], [3.0, 1.0]];
        let segs = kv.decompose(&pts);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].1, (0.0, 0.25));
        assert_eq!(segs[1].0, vec![[1.0, 1.0], [3.0, 1.0]]);
    }

    #[test]
    fn uniform_has_expected_breakpoints() {
        let kv = KnotVector::uniform(3, 3);
        assert_eq!(kv.control_count(), 6);
        let b = kv.breakpoints();
        assert_eq!(b.len(), 4);
        assert!((b[1] - 1.0 / 3.0).abs() < 1e-15);
    }
}
