//! Planar slices through the winding number field.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom::{Point3, Vec3};

/// Rectangle centered at `origin` spanned by `u` and `v`, sampled at
/// pixel centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceSpec {
    pub origin: Point3,
    pub u: Vec3,
    pub v: Vec3,
    /// Full widths along `u` and `v`.
    pub extent: (f64, f64),
    /// Pixels along `u` and `v`.
    pub resolution: (usize, usize),
}

impl SliceSpec {
    /// Normalizes the spanning vectors and checks extent and resolution.
    pub fn new(
        origin: Point3,
        u: Vec3,
        v: Vec3,
        extent: (f64, f64),
        resolution: (usize, usize),
    ) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidGeometry(format!("slice: {m}")));
        let (Some(un), Some(vn)) = (u.normalized(), v.normalized()) else {
            return bad("spanning vectors must be non-zero");
        };
        if un.cross(vn).norm() < 1e-9 {
            return bad("spanning vectors are parallel");
        }
        if resolution.0 == 0 || resolution.1 == 0 {
            return bad("resolution must be at least 1");
        }
        if !(extent.0 >= 0.0 && extent.1 >= 0.0)
            || !extent.0.is_finite()
            || !extent.1.is_finite()
            || !origin.is_finite()
        {
            return bad("extent and origin must be finite, extents non-negative");
        }
        Ok(Self {
            origin,
            u: un,
            v: vn,
            extent,
            resolution,
        })
    }

    /// Pixel centers, row-major; the first row lies on the `+v` side.
    pub fn points(&self) -> Vec<Point3> {
        let (nx, ny) = self.resolution;
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let t = 0.5 - (j as f64 + 0.5) / ny as f64;
            for i in 0..nx {
                let s = (i as f64 + 0.5) / nx as f64 - 0.5;
                out.push(self.origin + self.u * (s * self.extent.0) + self.v * (t * self.extent.1));
            }
        }
        out
    }
}

/// Binary 16-bit graymap (`P5`, maxval 65535, big-endian samples); values
/// map linearly from `range` to black..white and are clamped.
pub fn write_pgm(values: &[f64], nx: usize, ny: usize, range: (f64, f64)) -> Result<Vec<u8>> {
    if values.len() != nx * ny {
        return Err(Error::InvalidGeometry(format!(
            "{} values for a {nx}×{ny} image",
            values.len()
        )));
    }
    if !(range.1 > range.0) {
        return Err(Error::InvalidGeometry(
            "graymap range must be increasing".into(),
        ));
    }
    let mut out = format!("P5\n{nx} {ny}\n65535\n").into_bytes();
    for &v in values {
        let t = if v.is_finite() {
            ((v - range.0) / (range.1 - range.0)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.extend_from_slice(&((t * 65535.0).round() as u16).to_be_bytes());
    }
    Ok(out)
}

/// One comma-separated row per image row, full precision.
pub fn write_values(values: &[f64], nx: usize) -> String {
    let mut out = String::new();
    for row in values.chunks(nx.max(1)) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
