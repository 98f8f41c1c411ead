//! Query files, batch execution and per-query output records.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Point3;
use crate::winding3d::{CaseCategory, GwnCase, GwnEngine};

/// Parses one point per row: three reals separated by whitespace, commas
/// or semicolons. Blank rows and text after `#` are ignored.
pub fn parse_queries(text: &str) -> Result<Vec<Point3>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body
            .split(|c: char| c.is_whitespace() || c == ',' || c == ';')
            .filter(|s| !s.is_empty())
            .collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: i + 1,
                column: 1,
                message: format!("expected 3 coordinates, found {}", fields.len()),
            });
        }
        let mut v = [0.0; 3];
        for (k, f) in fields.iter().enumerate() {
            v[k] = f.parse().map_err(|_| Error::Parse {
                line: i + 1,
                column: raw.find(f).map_or(1, |c| c + 1),
                message: format!("`{f}` is not a number"),
            })?;
        }
        out.push(Point3::from_array(v));
    }
    Ok(out)
}

/// Turns a rounded winding number into an inside/outside decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rule {
    #[default]
    NonZero,
    EvenOdd,
}

impl Rule {
    pub fn inside(self, rounded: i64) -> bool {
        match self {
            Rule::NonZero => rounded != 0,
            Rule::EvenOdd => rounded.rem_euclid(2) == 1,
        }
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonzero" => Ok(Rule::NonZero),
            "evenodd" => Ok(Rule::EvenOdd),
            _ => Err(Error::InvalidGeometry(format!(
                "unknown rule `{s}` (nonzero, evenodd)"
            ))),
        }
    }
}

/// Result of one patch for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchOutcome {
    /// `None` when the patch evaluation failed.
    pub case: Option<GwnCase>,
    pub value: f64,
    pub surface_evals: u64,
    pub nanos: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputRecord {
    pub query: Point3,
    pub value: f64,
    pub rounded: i64,
    pub inside: bool,
    /// Hardest case met by any patch.
    pub case: CaseCategory,
    pub surface_evals: u64,
    pub coincident: bool,
    pub unresolved: bool,
    pub nanos: u64,
    pub patches: Vec<PatchOutcome>,
}

fn category_rank(c: CaseCategory) -> u8 {
    match c {
        CaseCategory::FarField => 0,
        CaseCategory::NearField => 1,
        CaseCategory::Edge => 2,
    }
}

pub fn category_name(c: CaseCategory) -> &'static str {
    match c {
        CaseCategory::FarField => "far",
        CaseCategory::NearField => "near",
        CaseCategory::Edge => "edge",
    }
}

/// Evaluates one query patch by patch, timing each patch.
pub fn run_query(engine: &GwnEngine, q: Point3, rule: Rule) -> OutputRecord {
    let start = Instant::now();
    let cfg = engine.config();
    let mut patches = Vec::with_capacity(engine.patches().len());
    let mut value = 0.0;
    let mut case = CaseCategory::FarField;
    let (mut coincident, mut unresolved) = (false, false);
    for (i, p) in engine.patches().iter().enumerate() {
        let t = Instant::now();
        let r = p.gwn(q, cfg, i as u64);
        let nanos = t.elapsed().as_nanos() as u64;
        patches.push(match r {
            Ok(r) => {
                value += r.value;
                coincident |= r.coincident;
                unresolved |= r.unresolved;
                if category_rank(r.case.tag.category()) > category_rank(case) {
                    case = r.case.tag.category();
                }
                PatchOutcome {
                    case: Some(r.case.tag),
                    value: r.value,
                    surface_evals: r.surface_evals,
                    nanos,
                    error: None,
                }
            }
            Err(e) => {
                unresolved = true;
                PatchOutcome {
                    case: None,
                    value: 0.0,
                    surface_evals: 0,
                    nanos,
                    error: Some(e.to_string()),
                }
            }
        });
    }
    let rounded = value.round() as i64;
    OutputRecord {
        query: q,
        value,
        rounded,
        inside: rule.inside(rounded),
        case,
        surface_evals: patches.iter().map(|p| p.surface_evals).sum(),
        coincident,
        unresolved,
        nanos: start.elapsed().as_nanos() as u64,
        patches,
    }
}

/// Runs every query on the current rayon pool; records keep input order.
pub fn run_queries(engine: &GwnEngine, queries: &[Point3], rule: Rule) -> Vec<OutputRecord> {
    queries
        .par_iter()
        .map(|&q| run_query(engine, q, rule))
        .collect()
}

/// [`run_queries`] on a dedicated pool of `threads` workers.
pub fn run_queries_with_threads(
    engine: &GwnEngine,
    queries: &[Point3],
    rule: Rule,
    threads: usize,
) -> Result<Vec<OutputRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    Ok(pool.install(|| run_queries(engine, queries, rule)))
}

pub const RECORD_HEADER: &str = "x,y,z,gwn,rounded,inside,case,surface_evals,coincident,unresolved";

/// Comma-separated records with a header row. Timings are left out so
/// the output is reproducible; `per_patch` appends `tag:value` pairs.
pub fn write_records(records: &[OutputRecord], per_patch: bool) -> String {
    let mut out = String::from(RECORD_HEADER);
    if per_patch {
        out.push_str(",patches");
    }
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{:?},{:?},{:?},{:?},{},{},{},{},{},{}",
            r.query.x,
            r.query.y,
            r.query.z,
            r.value,
            r.rounded,
            r.inside,
            category_name(r.case),
            r.surface_evals,
            r.coincident,
            r.unresolved
        );
        if per_patch {
            out.push(',');
            let parts: Vec<String> = r
                .patches
                .iter()
                .map(|p| match p.case {
                    Some(c) => format!("{}:{:?}", c.name(), p.value),
                    None => "error".to_string(),
                })
                .collect();
            out.push_str(&parts.join(";"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_delimiters_and_comments() {
        let q = parse_queries("# header\n1 2 3\n\n4,5,6 # trailing\n7;8;9\n").unwrap();
        assert_eq!(q.len(), 3);
        assert_eq!(q[1], Point3::new(4.0, 5.0, 6.0));
        assert!(matches!(
            parse_queries("1 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_queries("1 2 3\n1 b 3"),
            Err(Error::Parse {
                line: 2,
                column: 3,
                ..
            })
        ));
    }

    #[test]
    fn rules() {
        assert!(Rule::NonZero.inside(-2));
        assert!(!Rule::EvenOdd.inside(-2));
        assert!(Rule::EvenOdd.inside(-1));
        assert_eq!("evenodd".parse::<Rule>().unwrap(), Rule::EvenOdd);
        assert!("both".parse::<Rule>().is_err());
    }
}
