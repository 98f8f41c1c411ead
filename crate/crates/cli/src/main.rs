use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use trimwind::io::{
    compare_methods, model, parse_queries, run_queries, write_pgm, write_records, write_values,
    Method, Oracle, Reference, Rule, SliceSpec, StatsReport,
};
use trimwind::{GwnConfig, GwnEngine, Model, Point3, Vec3};

/// Winding number queries against trimmed NURBS models.
#[derive(Parser, Debug)]
#[command(name = "trimwind", version, about)]
struct Cli {
    #[command(flatten)]
    opts: Opts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Opts {
    /// Absolute tolerance of the adaptive boundary quadrature.
    #[arg(long, global = true, default_value_t = 1e-6)]
    eps_quad: f64,

    /// Flatness tolerance of the line/surface intersection search.
    #[arg(long, global = true, default_value_t = 1e-6)]
    eps_ls: f64,

    /// Edge disk radius, percent of the parameter box diagonal.
    #[arg(long, global = true, default_value_t = 1.0)]
    disk_radius_pct: f64,

    /// Gauss–Legendre nodes per quadrature segment.
    #[arg(long, global = true, default_value_t = 15)]
    order: usize,

    /// Containment rule applied to the rounded winding number.
    #[arg(long, global = true, default_value = "nonzero", value_parser = ["nonzero", "evenodd"])]
    rule: String,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "TRIMWIND_THREADS", default_value_t = 0)]
    threads: usize,

    /// Seed for the random line directions used in degenerate cases.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

impl Opts {
    fn config(&self) -> anyhow::Result<GwnConfig> {
        let cfg = GwnConfig {
            eps_quad: self.eps_quad,
            eps_ls: self.eps_ls,
            disk_radius_pct: self.disk_radius_pct,
            quad_order: self.order,
            rng_seed: self.seed,
            ..GwnConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn rule(&self) -> anyhow::Result<Rule> {
        Ok(self.rule.parse()?)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model file and list violations and warnings.
    Validate { model: PathBuf },

    /// Evaluate the winding number at every point of a query file.
    Query {
        model: PathBuf,
        /// Query file, `-` for stdin.
        queries: PathBuf,
        /// Output file (default stdout).
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Append per-patch case tags and values.
        #[arg(long)]
        per_patch: bool,
    },

    /// Sample the field on a planar grid.
    Slice {
        model: PathBuf,
        /// Slice center `x,y,z`.
        #[arg(long, value_parser = parse_vec3)]
        origin: Vec3,
        /// First spanning direction `x,y,z`.
        #[arg(long, value_parser = parse_vec3)]
        u: Vec3,
        /// Second spanning direction `x,y,z`.
        #[arg(long, value_parser = parse_vec3)]
        v: Vec3,
        /// Full widths `w,h`.
        #[arg(long, value_parser = parse_pair_f64)]
        extent: (f64, f64),
        /// Pixels `nx,ny`.
        #[arg(long, value_parser = parse_pair_usize)]
        res: (usize, usize),
        /// 16-bit graymap output.
        #[arg(long)]
        pgm: Option<PathBuf>,
        /// Comma-separated values output (default stdout).
        #[arg(long)]
        values: Option<PathBuf>,
        /// Value range mapped to black..white.
        #[arg(long, value_parser = parse_pair_f64, default_value = "0,1", allow_hyphen_values = true)]
        range: (f64, f64),
    },

    /// Case breakdown and timing table for a query batch.
    Stats { model: PathBuf, queries: PathBuf },

    /// Compare evaluation methods and count misclassifications.
    Compare {
        model: PathBuf,
        queries: PathBuf,
        /// Comma-separated methods: gwn, gwn:ORDER, mesh:N, cloud:N,
        /// surfquad:ORDER[:adaptive].
        #[arg(long, default_value = "gwn")]
        methods: String,
        /// `sphere:cx,cy,cz,r`, `box:x0,y0,z0,x1,y1,z1`,
        /// `torus:cx,cy,cz,R,r`, or a method from the list (default: the
        /// first method).
        #[arg(long)]
        reference: Option<String>,
    },
}

fn parse_reals(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{t}` is not a number"))
        })
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers"));
    }
    Ok(v)
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v = parse_reals(s, 3)?;
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn parse_pair_f64(s: &str) -> Result<(f64, f64), String> {
    let v = parse_reals(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_pair_usize(s: &str) -> Result<(usize, usize), String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{t}` is not a count"))
        })
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b] => Ok((a, b)),
        _ => Err("expected `nx,ny`".into()),
    }
}

const EXIT_USAGE: u8 = 1;
const EXIT_UNRESOLVED: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if cli.opts.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.opts.threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let cfg = cli.opts.config()?;
    let rule = cli.opts.rule()?;
    match cli.command {
        Command::Validate { model: path } => {
            let doc =
                model::load_doc(&path).with_context(|| format!("reading {}", path.display()))?;
            let report = doc.validate();
            print!("{report}");
            let errors = report.errors().count();
            println!(
                "{} patches, {errors} errors, {} warnings",
                doc.patches.len(),
                report.warnings().count()
            );
            Ok(if errors == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_UNRESOLVED)
            })
        }
        Command::Query {
            model,
            queries,
            out,
            per_patch,
        } => {
            let (engine, qs) = setup(&model, &queries, cfg)?;
            let records = run_queries(&engine, &qs, rule);
            emit(
                out.as_deref(),
                write_records(&records, per_patch).as_bytes(),
            )?;
            Ok(status(records.iter().any(|r| r.unresolved)))
        }
        Command::Slice {
            model,
            origin,
            u,
            v,
            extent,
            res,
            pgm,
            values,
            range,
        } => {
            let spec = SliceSpec::new(origin, u, v, extent, res)?;
            let engine = GwnEngine::new(&load(&model)?, cfg)?;
            let records = run_queries(&engine, &spec.points(), rule);
            let vals: Vec<f64> = records.iter().map(|r| r.value).collect();
            if let Some(p) = pgm {
                let img = write_pgm(&vals, res.0, res.1, range)?;
                std::fs::write(&p, img).with_context(|| format!("writing {}", p.display()))?;
            }
            emit(values.as_deref(), write_values(&vals, res.0).as_bytes())?;
            Ok(status(records.iter().any(|r| r.unresolved)))
        }
        Command::Stats { model, queries } => {
            let (engine, qs) = setup(&model, &queries, cfg)?;
            let records = run_queries(&engine, &qs, rule);
            print!("{}", StatsReport::from_records(&records).to_table());
            Ok(status(records.iter().any(|r| r.unresolved)))
        }
        Command::Compare {
            model,
            queries,
            methods,
            reference,
        } => {
            let methods: Vec<Method> = methods
                .split(',')
                .map(|m| m.trim().parse::<Method>())
                .collect::<Result<_, _>>()?;
            if methods.is_empty() {
                bail!("no methods given");
            }
            let reference = match reference {
                None => Reference::Method(0),
                Some(r) => match r.parse::<Oracle>() {
                    Ok(o) => Reference::Oracle(o),
                    Err(_) => {
                        let m: Method =
                            r.parse().map_err(|_| anyhow!("unknown reference `{r}`"))?;
                        let i = methods
                            .iter()
                            .position(|x| *x == m)
                            .ok_or_else(|| anyhow!("reference `{r}` is not among the methods"))?;
                        Reference::Method(i)
                    }
                },
            };
            let m = load(&model)?;
            let qs = read_queries(&queries)?;
            let report = compare_methods(&m, &cfg, &qs, &methods, reference)?;
            print!("{}", report.to_table());
            Ok(status(report.methods.iter().any(|r| r.failures() > 0)))
        }
    }
}

fn status(unresolved: bool) -> ExitCode {
    if unresolved {
        ExitCode::from(EXIT_UNRESOLVED)
    } else {
        ExitCode::SUCCESS
    }
}

fn load(path: &Path) -> anyhow::Result<Model> {
    model::load_model(path).with_context(|| format!("loading {}", path.display()))
}

fn read_queries(path: &Path) -> anyhow::Result<Vec<Point3>> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    };
    parse_queries(&text).with_context(|| format!("parsing {}", path.display()))
}

fn setup(model: &Path, queries: &Path, cfg: GwnConfig) -> anyhow::Result<(GwnEngine, Vec<Point3>)> {
    let m = load(model)?;
    let qs = read_queries(queries)?;
    Ok((GwnEngine::new(&m, cfg)?, qs))
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().lock().write_all(bytes)?),
    }
}
