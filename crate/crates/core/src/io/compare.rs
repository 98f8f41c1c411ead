//! Side-by-side evaluation of the boundary method and the reference
//! methods, with misclassification counts at the 0.5 level set.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{
    cloud_gwn, mesh_gwn, sample_model, surface_quadrature_gwn, tessellate_model,
};
use crate::error::{Error, Result};
use crate::geom::{Point3, Vec3};
use crate::kernel::Model;
use crate::winding3d::{GwnConfig, GwnEngine};

/// Evaluation method named on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Boundary method with the configured tolerances.
    Gwn,
    /// Boundary method with one fixed rule of this order per curve span
    /// and no memoization.
    GwnFixed(usize),
    /// Triangle mesh from an `n × n` grid per patch.
    Mesh(usize),
    /// Dipole sum over `n × n` samples per patch.
    Cloud(usize),
    /// Direct surface quadrature of this order per span, fixed or
    /// adaptive.
    SurfQuad { order: usize, adaptive: bool },
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidGeometry(format!(
                "unknown method `{s}` (gwn, gwn:ORDER, mesh:N, cloud:N, surfquad:ORDER[:adaptive])"
            ))
        };
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<usize> {
            let n: usize = parts.get(i).ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if n < 2 {
                return Err(bad());
            }
            Ok(n)
        };
        match (parts[0], parts.len()) {
            ("gwn", 1) => Ok(Method::Gwn),
            ("gwn", 2) => Ok(Method::GwnFixed(num(1)?)),
            ("mesh", 2) => Ok(Method::Mesh(num(1)?)),
            ("cloud", 2) => Ok(Method::Cloud(num(1)?)),
            ("surfquad", 2) => Ok(Method::SurfQuad {
                order: num(1)?,
                adaptive: false,
            }),
            ("surfquad", 3) if parts[2] == "adaptive" => Ok(Method::SurfQuad {
                order: num(1)?,
                adaptive: true,
            }),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Gwn => write!(f, "gwn"),
            Method::GwnFixed(n) => write!(f, "gwn:{n}"),
            Method::Mesh(n) => write!(f, "mesh:{n}"),
            Method::Cloud(n) => write!(f, "cloud:{n}"),
            Method::SurfQuad {
                order,
                adaptive: false,
            } => write!(f, "surfquad:{order}"),
            Method::SurfQuad {
                order,
                adaptive: true,
            } => write!(f, "surfquad:{order}:adaptive"),
        }
    }
}

/// Exact containment for simple solids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    Sphere {
        center: Point3,
        radius: f64,
    },
    Box {
        min: Point3,
        max: Point3,
    },
    Torus {
        center: Point3,
        major: f64,
        minor: f64,
    },
}

impl Oracle {
    pub fn winding(&self, q: Point3) -> f64 {
        let inside = match *self {
            Oracle::Sphere { center, radius } => q.distance(center) < radius,
            Oracle::Box { min, max } => (0..3).all(|i| q[i] > min[i] && q[i] < max[i]),
            Oracle::Torus {
                center,
                major,
                minor,
            } => {
                let d = q - center;
                let rho = d.x.hypot(d.y);
                (rho - major).hypot(d.z) < minor
            }
        };
        if inside {
            1.0
        } else {
            0.0
        }
    }
}

impl FromStr for Oracle {
    type Err = Error;

    /// `sphere:cx,cy,cz,r`, `box:x0,y0,z0,x1,y1,z1` or
    /// `torus:cx,cy,cz,R,r`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidGeometry(format!(
                "bad oracle `{s}` (sphere:cx,cy,cz,r | box:x0,y0,z0,x1,y1,z1 | torus:cx,cy,cz,R,r)"
            ))
        };
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let v: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match (kind, v.len()) {
            ("sphere", 4) => Ok(Oracle::Sphere {
                center: Vec3::new(v[0], v[1], v[2]),
                radius: v[3],
            }),
            ("box", 6) => Ok(Oracle::Box {
                min: Vec3::new(v[0], v[1], v[2]),
                max: Vec3::new(v[3], v[4], v[5]),
            }),
            ("torus", 5) => Ok(Oracle::Torus {
                center: Vec3::new(v[0], v[1], v[2]),
                major: v[3],
                minor: v[4],
            }),
            _ => Err(bad()),
        }
    }
}

/// What the methods are scored against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Oracle(Oracle),
    /// Index into the method list.
    Method(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    /// `None` where the method failed for that query.
    pub values: Vec<Option<f64>>,
    pub evals: Vec<u64>,
    pub misclassified: usize,
    pub nanos: u128,
}

impl MethodResult {
    pub fn failures(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn total_evals(&self) -> u64 {
        self.evals.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub reference: Vec<f64>,
    pub methods: Vec<MethodResult>,
}

/// Points with a value above this count as inside.
pub const CLASSIFY_LEVEL: f64 = 0.5;

fn evaluate(
    model: &Model,
    cfg: &GwnConfig,
    qs: &[Point3],
    m: Method,
) -> Result<(Vec<Option<f64>>, Vec<u64>)> {
    Ok(match m {
        Method::Gwn | Method::GwnFixed(_) => {
            let cfg = match m {
                Method::GwnFixed(order) => GwnConfig {
                    quad_order: order,
                    adaptive: false,
                    memoize: false,
                    ..*cfg
                },
                _ => *cfg,
            };
            let engine = GwnEngine::new(model, cfg)?;
            qs.iter()
                .map(|&q| {
                    let r = engine.query(q);
                    let ok = !r.patches.iter().any(|p| p.is_err());
                    (ok.then_some(r.value), r.surface_evals())
                })
                .unzip()
        }
        Method::Mesh(n) => {
            let soup = tessellate_model(model, n)?;
            let evals = (n as u64 + 1).pow(2) * model.len() as u64;
            let values = qs.par_iter().map(|&q| Some(mesh_gwn(&soup, q))).collect();
            (values, vec![evals; qs.len()])
        }
        Method::Cloud(n) => {
            let cloud = sample_model(model, n)?;
            let evals = cloud.len() as u64;
            let values = qs.par_iter().map(|&q| cloud_gwn(&cloud, q).ok()).collect();
            (values, vec![evals; qs.len()])
        }
        Method::SurfQuad { order, adaptive } => qs
            .par_iter()
            .map(|&q| {
                let mut total = 0.0;
                let mut evals = 0;
                let mut ok = true;
                for p in &model.patches {
                    match surface_quadrature_gwn(p, q, order, adaptive, cfg.eps_quad) {
                        Ok((v, n)) => {
                            total += v;
                            evals += n;
                        }
                        Err(_) => ok = false,
                    }
                }
                (ok.then_some(total), evals)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .unzip(),
    })
}

pub fn compare_methods(
    model: &Model,
    cfg: &GwnConfig,
    queries: &[Point3],
    methods: &[Method],
    reference: Reference,
) -> Result<CompareReport> {
    let mut results = Vec::with_capacity(methods.len());
    for &m in methods {
        let t = Instant::now();
        let (values, evals) = evaluate(model, cfg, queries, m)?;
        results.push(MethodResult {
            method: m,
            values,
            evals,
            misclassified: 0,
            nanos: t.elapsed().as_nanos(),
        });
    }
    let reference: Vec<f64> = match reference {
        Reference::Oracle(o) => queries.iter().map(|&q| o.winding(q)).collect(),
        Reference::Method(i) => {
            let r = results.get(i).ok_or_else(|| {
                Error::InvalidGeometry(format!("reference method {i} out of range"))
            })?;
            r.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
        }
    };
    for r in &mut results {
        r.misclassified = r
            .values
            .iter()
            .zip(&reference)
            .filter(|(v, want)| match v {
                Some(v) => (*v > CLASSIFY_LEVEL) != (**want > CLASSIFY_LEVEL),
                None => false,
            })
            .count();
    }
    Ok(CompareReport {
        reference,
        methods: results,
    })
}

impl CompareReport {
    /// `method,misclassified,failures,total_evals,mean_evals,time_ms`.
    pub fn to_table(&self) -> String {
        let mut out =
            String::from("method,misclassified,failures,total_evals,mean_evals,time_ms\n");
        for r in &self.methods {
            let n = r.evals.len().max(1) as f64;
            let _ = writeln!(
                out,
                "{},{},{},{},{:.3},{:.3}",
                r.method,
                r.misclassified,
                r.failures(),
                r.total_evals(),
                r.total_evals() as f64 / n,
                r.nanos as f64 / 1e6
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for s in [
            "gwn",
            "gwn:20",
            "mesh:8",
            "cloud:64",
            "surfquad:20",
            "surfquad:20:adaptive",
        ] {
            assert_eq!(s.parse::<Method>().unwrap().to_string(), s);
        }
        for s in ["", "mesh", "mesh:x", "quad:3", "surfquad:20:fast", "mesh:1"] {
            assert!(s.parse::<Method>().is_err(), "{s}");
        }
    }

    #[test]
    fn oracles() {
        let o: Oracle = "sphere:0,0,0,1".parse().unwrap();
        assert_eq!(o.winding(Vec3::new(0.5, 0.0, 0.0)), 1.0);
        assert_eq!(o.winding(Vec3::new(1.5, 0.0, 0.0)), 0.0);
        let t: Oracle = "torus:0,0,0,2,0.5".parse().unwrap();
        assert_eq!(t.winding(Vec3::new(2.0, 0.0, 0.1)), 1.0);
        assert_eq!(t.winding(Vec3::ZERO), 0.0);
        assert!("cube:1".parse::<Oracle>().is_err());
    }
}
