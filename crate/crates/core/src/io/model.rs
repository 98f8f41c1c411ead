//! Native text format for trimmed NURBS models.
//!
//! ```text
//! trimwind-model 1
//! units mm
//! patch lid
//! degree 1 1
//! knots_u 0 0 1 1
//! knots_v 0 0 1 1
//! control 2 2
//! 0 0 0 1
//! 0 1 0 1
//! 1 0 0 1
//! 1 1 0 1
//! orientation ccw
//! loop
//! curve 1
//! knots 0 0 1 1
//! 0 0 1
//! 1 0 1
//! endloop
//! endpatch
//! ```
//!
//! Control rows are `x y z w` in row-major order (u index outer), trimming
//! rows are `u v w`. Blank lines and text after `#` are ignored. See
//! `docs/model-format.md` for the full grammar.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Aabb2, ParamPoint, Vec3};
use crate::kernel::{KnotVector, LoopOrientation, Model, NurbsPatch, RationalCurve2, TrimmedPatch};

pub const FORMAT_HEADER: &str = "trimwind-model";
pub const FORMAT_VERSION: u32 = 1;

/// One trimming curve as written in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveDoc {
    pub degree: usize,
    pub knots: Vec<f64>,
    /// `[u, v, w]` rows.
    pub control: Vec<[f64; 3]>,
    pub line: usize,
}

/// One patch as written in the file, before any geometric validation.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchDoc {
    pub id: String,
    pub degree_u: usize,
    pub degree_v: usize,
    pub knots_u: Vec<f64>,
    pub knots_v: Vec<f64>,
    pub count_u: usize,
    pub count_v: usize,
    /// `[x, y, z, w]` rows.
    pub control: Vec<[f64; 4]>,
    pub orientation: LoopOrientation,
    pub loops: Vec<Vec<CurveDoc>>,
    pub line: usize,
}

/// Parsed model file. Syntax is checked on parse; geometry by
/// [`ModelDoc::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDoc {
    pub units: String,
    pub patches: Vec<PatchDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub severity: Severity,
    pub patch: usize,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues
            .iter()
            .filter(|i| i.severity == Severity::Warning)
    }

    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in &self.issues {
            let sev = match i.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            writeln!(
                f,
                "{sev}: patch {} (line {}): {}",
                i.patch, i.line, i.message
            )?;
        }
        Ok(())
    }
}

/// Relative gap between consecutive trimming curves reported as an open
/// loop.
const LOOP_GAP: f64 = 1e-9;
/// Trim control points may stray this fraction of the domain diagonal
/// outside the knot domain.
const DOMAIN_SLACK: f64 = 0.01;

impl ModelDoc {
    pub fn from_model(model: &Model) -> Self {
        let patches = model
            .patches
            .iter()
            .map(|p| {
                let s = p.surface();
                PatchDoc {
                    id: p.id.clone(),
                    degree_u: s.degree_u(),
                    degree_v: s.degree_v(),
                    knots_u: s.knots_u().values().to_vec(),
                    knots_v: s.knots_v().values().to_vec(),
                    count_u: s.count_u(),
                    count_v: s.count_v(),
                    control: s
                        .control()
                        .iter()
                        .zip(s.weights())
                        .map(|(c, &w)| [c.x, c.y, c.z, w])
                        .collect(),
                    orientation: p.orientation(),
                    loops: p
                        .declared_loops()
                        .iter()
                        .map(|l| {
                            l.iter()
                                .map(|c| CurveDoc {
                                    degree: c.degree(),
                                    knots: c.knots().values().to_vec(),
                                    control: c
                                        .control()
                                        .iter()
                                        .zip(c.weights())
                                        .map(|(p, &w)| [p.u, p.v, w])
                                        .collect(),
                                    line: 0,
                                })
                                .collect()
                        })
                        .collect(),
                    line: 0,
                }
            })
            .collect();
        Self {
            units: model.units.clone(),
            patches,
        }
    }

    /// Checks every kernel invariant without stopping at the first
    /// violation. Open trimming loops are warnings only.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        for (pi, p) in self.patches.iter().enumerate() {
            let mut err = |line: usize, message: String| {
                issues.push(Issue {
                    severity: Severity::Error,
                    patch: pi,
                    line,
                    message,
                })
            };
            let ku = KnotVector::new(p.knots_u.clone(), p.degree_u);
            let kv = KnotVector::new(p.knots_v.clone(), p.degree_v);
            if let Err(e) = &ku {
                err(p.line, format!("u knots: {e}"));
            }
            if let Err(e) = &kv {
                err(p.line, format!("v knots: {e}"));
            }
            if let (Ok(ku), Ok(kv)) = (&ku, &kv) {
                if ku.control_count() != p.count_u || kv.control_count() != p.count_v {
                    err(
                        p.line,
                        format!(
                            "control grid {}×{} does not match knots ({}×{})",
                            p.count_u,
                            p.count_v,
                            ku.control_count(),
                            kv.control_count()
                        ),
                    );
                }
            }
            for (k, c) in p.control.iter().enumerate() {
                if c.iter().any(|x| !x.is_finite()) {
                    err(p.line, format!("control point {k} is not finite"));
                } else if !(c[3] > 0.0) {
                    err(
                        p.line,
                        format!("control point {k} has non-positive weight {}", c[3]),
                    );
                }
            }
            let domain = match (&ku, &kv) {
                (Ok(ku), Ok(kv)) => {
                    let (u0, u1) = ku.domain();
                    let (v0, v1) = kv.domain();
                    Some(Aabb2::new(ParamPoint::new(u0, v0), ParamPoint::new(u1, v1)))
                }
                _ => None,
            };
            let mut curves_ok = Vec::new();
            for l in &p.loops {
                let mut built = Vec::new();
                for c in l {
                    match curve_from_doc(c) {
                        Ok(curve) => built.push(curve),
                        Err(e) => err(c.line, format!("trimming curve: {e}")),
                    }
                    if let Some(d) = &domain {
                        let slack = DOMAIN_SLACK * d.diagonal();
                        if c.control
                            .iter()
                            .any(|r| !d.expanded(slack).contains(ParamPoint::new(r[0], r[1])))
                        {
                            err(
                                c.line,
                                "trimming control point outside the parameter domain".into(),
                            );
                        }
                    }
                }
                curves_ok.push((built.len() == l.len(), built));
            }
            if p.loops.iter().all(|l| l.is_empty()) {
                issues.push(Issue {
                    severity: Severity::Warning,
                    patch: pi,
                    line: p.line,
                    message: "patch has no trimming curves and is invisible".into(),
                });
            }
            if let Some(d) = &domain {
                let tol = LOOP_GAP * d.diagonal();
                for (li, (complete, l)) in curves_ok.iter().enumerate() {
                    if !complete || l.is_empty() {
                        continue;
                    }
                    let open = (0..l.len())
                        .any(|k| l[k].end().distance(l[(k + 1) % l.len()].start()) > tol);
                    if open {
                        issues.push(Issue {
                            severity: Severity::Warning,
                            patch: pi,
                            line: p.line,
                            message: format!("trimming loop {li} is not closed"),
                        });
                    }
                }
            }
        }
        ValidationReport { issues }
    }

    /// Builds the model; fails on the first invalid patch.
    pub fn to_model(&self) -> Result<Model> {
        let mut patches = Vec::with_capacity(self.patches.len());
        for (pi, p) in self.patches.iter().enumerate() {
            let wrap = |e: Error| Error::InvalidGeometry(format!("patch {pi} ({}): {e}", p.id));
            let ku = KnotVector::new(p.knots_u.clone(), p.degree_u).map_err(wrap)?;
            let kv = KnotVector::new(p.knots_v.clone(), p.degree_v).map_err(wrap)?;
            let control = p
                .control
                .iter()
                .map(|c| Vec3::new(c[0], c[1], c[2]))
                .collect();
            let weights = p.control.iter().map(|c| c[3]).collect();
            let surface = NurbsPatch::new(ku, kv, control, weights).map_err(wrap)?;
            let mut loops = Vec::with_capacity(p.loops.len());
            for l in &p.loops {
                loops.push(
                    l.iter()
                        .map(curve_from_doc)
                        .collect::<Result<Vec<_>>>()
                        .map_err(wrap)?,
                );
            }
            patches.push(
                TrimmedPatch::with_orientation(surface, loops, p.orientation).with_id(p.id.clone()),
            );
        }
        Ok(Model {
            units: self.units.clone(),
            patches,
        })
    }
}

fn curve_from_doc(c: &CurveDoc) -> Result<RationalCurve2> {
    let knots = KnotVector::new(c.knots.clone(), c.degree)?;
    RationalCurve2::new(
        knots,
        c.control
            .iter()
            .map(|r| ParamPoint::new(r[0], r[1]))
            .collect(),
        c.control.iter().map(|r| r[2]).collect(),
    )
}

fn push_reals(out: &mut String, vals: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in vals {
        if !first {
            out.push(' ');
        }
        first = false;
        // Debug formatting is the shortest exact round-trip form
        let _ = write!(out, "{v:?}");
    }
    out.push('\n');
}

pub fn serialize(doc: &ModelDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_HEADER} {FORMAT_VERSION}");
    let _ = writeln!(out, "units {}", doc.units);
    for p in &doc.patches {
        let _ = writeln!(out, "patch {}", p.id);
        let _ = writeln!(out, "degree {} {}", p.degree_u, p.degree_v);
        out.push_str("knots_u ");
        push_reals(&mut out, p.knots_u.iter().copied());
        out.push_str("knots_v ");
        push_reals(&mut out, p.knots_v.iter().copied());
        let _ = writeln!(out, "control {} {}", p.count_u, p.count_v);
        for c in &p.control {
            push_reals(&mut out, c.iter().copied());
        }
        let o = match p.orientation {
            LoopOrientation::CounterClockwise => "ccw",
            LoopOrientation::Clockwise => "cw",
        };
        let _ = writeln!(out, "orientation {o}");
        for l in &p.loops {
            out.push_str("loop\n");
            for c in l {
                let _ = writeln!(out, "curve {}", c.degree);
                out.push_str("knots ");
                push_reals(&mut out, c.knots.iter().copied());
                for r in &c.control {
                    push_reals(&mut out, r.iter().copied());
                }
            }
            out.push_str("endloop\n");
        }
        out.push_str("endpatch\n");
    }
    out
}

pub fn serialize_model(model: &Model) -> String {
    serialize(&ModelDoc::from_model(model))
}

struct Tok<'a> {
    text: &'a str,
    col: usize,
}

struct Line<'a> {
    no: usize,
    toks: Vec<Tok<'a>>,
}

fn lex(text: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let mut toks = Vec::new();
        let mut start = None;
        for (ci, ch) in body
            .char_indices()
            .chain(std::iter::once((body.len(), ' ')))
        {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(ci),
                (true, Some(s)) => {
                    toks.push(Tok {
                        text: &body[s..ci],
                        col: body[..s].chars().count() + 1,
                    });
                    start = None;
                }
                _ => {}
            }
        }
        if !toks.is_empty() {
            out.push(Line { no: i + 1, toks });
        }
    }
    out
}

fn perr(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

struct Parser<'a> {
    lines: Vec<Line<'a>>,
    pos: usize,
    last_line: usize,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Result<&Line<'a>> {
        let l = self
            .lines
            .get(self.pos)
            .ok_or_else(|| perr(self.last_line + 1, 1, "unexpected end of file"))?;
        self.pos += 1;
        Ok(l)
    }

    fn peek_keyword(&self) -> Option<&str> {
        self.lines.get(self.pos).map(|l| l.toks[0].text)
    }

    /// Next line, which must start with `kw`; returns its arguments.
    fn expect(&mut self, kw: &str) -> Result<(usize, Vec<(usize, String)>)> {
        let l = self.next()?;
        let head = &l.toks[0];
        if head.text != kw {
            return Err(perr(
                l.no,
                head.col,
                format!("expected `{kw}`, found `{}`", head.text),
            ));
        }
        Ok((
            l.no,
            l.toks[1..]
                .iter()
                .map(|t| (t.col, t.text.to_string()))
                .collect(),
        ))
    }

    fn reals_row(&mut self, n: usize) -> Result<Vec<f64>> {
        let l = self.next()?;
        let no = l.no;
        let vals = l
            .toks
            .iter()
            .map(|t| real(no, t.col, t.text))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != n {
            return Err(perr(
                no,
                1,
                format!("expected {n} numbers, found {}", vals.len()),
            ));
        }
        Ok(vals)
    }
}

fn real(line: usize, col: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| perr(line, col, format!("`{s}` is not a number")))
}

fn count(line: usize, col: usize, s: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| perr(line, col, format!("`{s}` is not a non-negative integer")))
}

fn args_exact(line: usize, args: &[(usize, String)], n: usize, what: &str) -> Result<()> {
    if args.len() != n {
        return Err(perr(
            line,
            1,
            format!("`{what}` takes {n} argument(s), found {}", args.len()),
        ));
    }
    Ok(())
}

pub fn parse(text: &str) -> Result<ModelDoc> {
    let lines = lex(text);
    let last_line = text.lines().count();
    let mut p = Parser {
        lines,
        pos: 0,
        last_line,
    };
    let (no, args) = p.expect(FORMAT_HEADER).map_err(|e| match e {
        Error::Parse { line, column, .. } => perr(
            line,
            column,
            format!("missing `{FORMAT_HEADER} {FORMAT_VERSION}` header"),
        ),
        e => e,
    })?;
    args_exact(no, &args, 1, FORMAT_HEADER)?;
    let version = count(no, args[0].0, &args[0].1)?;
    if version != FORMAT_VERSION as usize {
        return Err(perr(
            no,
            args[0].0,
            format!("unsupported format version {version}"),
        ));
    }
    let (no, args) = p.expect("units")?;
    args_exact(no, &args, 1, "units")?;
    let units = args[0].1.clone();
    let mut patches = Vec::new();
    while p.peek_keyword().is_some() {
        patches.push(parse_patch(&mut p)?);
    }
    Ok(ModelDoc { units, patches })
}

fn parse_patch(p: &mut Parser) -> Result<PatchDoc> {
    let (line, args) = p.expect("patch")?;
    let id = args
        .iter()
        .map(|(_, s)| s.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let (no, a) = p.expect("degree")?;
    args_exact(no, &a, 2, "degree")?;
    let degree_u = count(no, a[0].0, &a[0].1)?;
    let degree_v = count(no, a[1].0, &a[1].1)?;
    let (no, a) = p.expect("knots_u")?;
    let knots_u = a
        .iter()
        .map(|(c, s)| real(no, *c, s))
        .collect::<Result<Vec<_>>>()?;
    let (no, a) = p.expect("knots_v")?;
    let knots_v = a
        .iter()
        .map(|(c, s)| real(no, *c, s))
        .collect::<Result<Vec<_>>>()?;
    let (no, a) = p.expect("control")?;
    args_exact(no, &a, 2, "control")?;
    let count_u = count(no, a[0].0, &a[0].1)?;
    let count_v = count(no, a[1].0, &a[1].1)?;
    let mut control = Vec::with_capacity(count_u * count_v);
    for _ in 0..count_u * count_v {
        let r = p.reals_row(4)?;
        control.push([r[0], r[1], r[2], r[3]]);
    }
    let (no, a) = p.expect("orientation")?;
    args_exact(no, &a, 1, "orientation")?;
    let orientation = match a[0].1.as_str() {
        "ccw" => LoopOrientation::CounterClockwise,
        "cw" => LoopOrientation::Clockwise,
        other => {
            return Err(perr(
                no,
                a[0].0,
                format!("orientation must be `ccw` or `cw`, found `{other}`"),
            ))
        }
    };
    let mut loops = Vec::new();
    loop {
        match p.peek_keyword() {
            Some("loop") => {
                p.expect("loop")?;
                let mut curves = Vec::new();
                while p.peek_keyword() == Some("curve") {
                    let (cl, a) = p.expect("curve")?;
                    args_exact(cl, &a, 1, "curve")?;
                    let degree = count(cl, a[0].0, &a[0].1)?;
                    let (no, ka) = p.expect("knots")?;
                    let knots = ka
                        .iter()
                        .map(|(c, s)| real(no, *c, s))
                        .collect::<Result<Vec<_>>>()?;
                    let n = knots.len().checked_sub(degree + 1).ok_or_else(|| {
                        perr(
                            no,
                            1,
                            format!("{} knots are too few for degree {degree}", knots.len()),
                        )
                    })?;
                    let mut rows = Vec::with_capacity(n);
                    for _ in 0..n {
                        let r = p.reals_row(3)?;
                        rows.push([r[0], r[1], r[2]]);
                    }
                    curves.push(CurveDoc {
                        degree,
                        knots,
                        control: rows,
                        line: cl,
                    });
                }
                p.expect("endloop")?;
                loops.push(curves);
            }
            Some("endpatch") => {
                p.expect("endpatch")?;
                break;
            }
            _ => {
                let l = p.next()?;
                return Err(perr(
                    l.no,
                    l.toks[0].col,
                    format!("expected `loop` or `endpatch`, found `{}`", l.toks[0].text),
                ));
            }
        }
    }
    Ok(PatchDoc {
        id,
        degree_u,
        degree_v,
        knots_u,
        knots_v,
        count_u,
        count_v,
        control,
        orientation,
        loops,
        line,
    })
}

/// Parses and builds a model, rejecting geometric violations.
pub fn parse_model(text: &str) -> Result<Model> {
    parse(text)?.to_model()
}

pub fn load_doc(path: &Path) -> Result<ModelDoc> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn load_model(path: &Path) -> Result<Model> {
    load_doc(path)?.to_model()
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_model(model))?;
    Ok(())
}
