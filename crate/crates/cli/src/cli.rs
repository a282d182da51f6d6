//! Command-line front end. Exit status is 0 on success, 1 on a runtime
//! error and 2 on a usage error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use trivine::estimate::StructureCriterion;
use trivine::field::{bundle, write_obj, GridSpec, IsoMesh, Pair};
use trivine::kde::{kde_fit, normal_scores, rank_transform, Bandwidth3D};
use trivine::stats::kendall_tau;
use trivine::{scenarios, Family, VineSpec3D};

use crate::engine::{self, FitRequest, Mode, Model, Quantize, Scale};
use crate::service;

#[derive(Debug, Parser)]
#[command(name = "trivine", version, about = "Trivariate vine copulas: contours, simulation and fitting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iso-surfaces of a model density, written as OBJ or JSON.
    Contour3d(Contour3d),
    /// Contour lines of the bivariate margins.
    Contour2d(Contour2d),
    /// Kendall's tau of the conditional pair as a function of u2.
    TauCurve(TauCurveArgs),
    /// Draws a sample from a model.
    Simulate(Simulate),
    /// Fits a simplified or binned non-simplified vine to a CSV.
    Fit(Fit),
    /// Best simplified approximation of a model.
    Approx(Approx),
    /// Kernel density iso-surfaces of data on the normal-score scale.
    Kde(Kde),
    /// Lists the built-in scenarios.
    Scenarios,
    /// Runs the HTTP service.
    Serve(Serve),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ModelArg {
    /// Built-in scenario id (see `trivine scenarios`).
    #[arg(long)]
    scenario: Option<String>,
    /// Model file in the VineSpec3D JSON format.
    #[arg(long)]
    spec: Option<PathBuf>,
}

impl ModelArg {
    fn load(&self) -> Result<VineSpec3D> {
        let model = match (&self.scenario, &self.spec) {
            (Some(id), _) => Model::Scenario(id.clone()),
            (None, Some(p)) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Model::Spec(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?)
            }
            (None, None) => unreachable!("clap enforces the group"),
        };
        Ok(model.resolve()?)
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Nodes per axis.
    #[arg(long, default_value_t = 96)]
    grid: usize,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    hi: f64,
    /// Comma-separated, ascending.
    #[arg(long, value_delimiter = ',', default_values_t = engine::default_levels())]
    levels: Vec<f64>,
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        GridSpec::cube(self.lo, self.hi, self.grid)
    }
}

#[derive(Debug, Args)]
pub struct Contour3d {
    #[command(flatten)]
    model: ModelArg,
    #[command(flatten)]
    grid: GridArgs,
    /// `.obj` for one group per level, anything else for a JSON bundle.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Contour2d {
    #[command(flatten)]
    model: ModelArg,
    /// Pairs to contour; all three by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    pairs: Vec<Pair>,
    #[arg(long, default_value_t = 81)]
    grid: usize,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    hi: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.02, 0.05, 0.1, 0.15, 0.2])]
    levels: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_pair(s: &str) -> std::result::Result<Pair, String> {
    s.parse().map_err(|e: trivine::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct TauCurveArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// `.json` for JSON, anything else for CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SampleScale {
    Uniform,
    Normal,
}

#[derive(Debug, Args)]
pub struct Simulate {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SampleScale::Uniform)]
    scale: SampleScale,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FitMode {
    Simplified,
    Nonsimplified,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Structure {
    Aic,
    Tau,
}

#[derive(Debug, Args)]
pub struct Fit {
    /// CSV with a header and three numeric columns.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = FitMode::Simplified)]
    mode: FitMode,
    /// The data are already on the copula scale; skip the rank transform.
    #[arg(long)]
    uniform: bool,
    #[arg(long, value_enum, default_value_t = Structure::Aic)]
    structure: Structure,
    #[arg(long, default_value_t = 8)]
    bins: usize,
    #[arg(long, default_value_t = 200)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict the candidate families (comma-separated).
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    families: Vec<Family>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        let names: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
        format!("unknown family '{s}' (one of {})", names.join(", "))
    })
}

#[derive(Debug, Args)]
pub struct Approx {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    families: Vec<Family>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Kde {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    uniform: bool,
    /// Bandwidths per axis; the normal-reference rule otherwise.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    bandwidth: Option<Vec<f64>>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Serve {
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    host: IpAddr,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Simultaneous computations; the number of CPUs by default.
    #[arg(long)]
    workers: Option<usize>,
    /// Seconds a finished job stays retrievable.
    #[arg(long, default_value_t = 600)]
    job_ttl: u64,
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn is_ext(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn write_meshes(out: &Path, b: &engine::MeshResponse) -> Result<()> {
    for l in &b.bundle.levels {
        let m = &l.mesh;
        println!(
            "level {:<8} vertices {:>7} triangles {:>7} components {}",
            l.level,
            m.vertices.len(),
            m.triangles.len(),
            m.components()
        );
    }
    for l in &b.empty_levels {
        eprintln!("note: level {l} exceeds the field maximum {:.5}; its mesh is empty", b.bundle.field_max);
    }
    if is_ext(out, "obj") {
        let meshes: Vec<IsoMesh> = b.bundle.levels.iter().map(|l| l.mesh.clone()).collect();
        let mut w = create(out)?;
        write_obj(&mut w, &meshes)?;
        w.flush()?;
        Ok(())
    } else {
        write_json(out, b)
    }
}

fn read_table(path: &Path) -> Result<trivine::io::Table3> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    trivine::io::read_table3(f).with_context(|| format!("reading {}", path.display()))
}

fn families(fs: &[Family]) -> Option<&[Family]> {
    (!fs.is_empty()).then_some(fs)
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Contour3d(a) => {
            let spec = a.model.load()?;
            let b = engine::mesh(&spec, &a.grid.spec(), &a.grid.levels, Quantize::Never)?;
            println!("field max {:.6}", b.bundle.field_max);
            write_meshes(&a.out, &b)
        }
        Command::Contour2d(a) => {
            let spec = a.model.load()?;
            let pairs = if a.pairs.is_empty() { Pair::ALL.to_vec() } else { a.pairs };
            let m = engine::margins(&spec, &pairs, a.lo, a.hi, a.grid, &a.levels)?;
            for c in &m.margins {
                let lines: usize = c.contours.iter().map(|s| s.polylines.len()).sum();
                println!("pair {} max {:.5} polylines {lines}", c.pair.label(), c.field_max);
                if c.unconverged > 0 {
                    eprintln!("note: {} grid points of pair {} hit the quadrature cap", c.unconverged, c.pair.label());
                }
            }
            write_json(&a.out, &m)
        }
        Command::TauCurve(a) => {
            if a.points < 2 {
                bail!("--points must be at least 2");
            }
            let spec = a.model.load()?;
            let c = engine::tau_curve(&spec, a.points)?;
            let (lo, hi) = c.tau.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), t| (l.min(*t), h.max(*t)));
            println!("tau range [{lo:.4}, {hi:.4}] over {} points", c.u2.len());
            match &a.out {
                Some(p) if is_ext(p, "json") => write_json(p, &c),
                Some(p) => {
                    let mut w = create(p)?;
                    writeln!(w, "u2,tau")?;
                    for (u, t) in c.u2.iter().zip(&c.tau) {
                        writeln!(w, "{u},{t}")?;
                    }
                    Ok(w.flush()?)
                }
                None => Ok(()),
            }
        }
        Command::Simulate(a) => {
            let spec = a.model.load()?;
            let s = spec.simulate(a.n, a.seed)?;
            let s = match a.scale {
                SampleScale::Uniform => s,
                SampleScale::Normal => s.to_normal(),
            };
            let col = |j: usize| s.column(j);
            println!(
                "n {} tau12 {:.4} tau23 {:.4} tau13 {:.4}",
                s.len(),
                kendall_tau(&col(0), &col(1)),
                kendall_tau(&col(1), &col(2)),
                kendall_tau(&col(0), &col(2))
            );
            let mut w = create(&a.out)?;
            s.write_csv(&mut w)?;
            Ok(w.flush()?)
        }
        Command::Fit(a) => {
            let table = read_table(&a.data)?;
            let req = FitRequest {
                mode: match a.mode {
                    FitMode::Simplified => Mode::Simplified,
                    FitMode::Nonsimplified => Mode::Nonsimplified,
                },
                scale: if a.uniform { Scale::Uniform } else { Scale::Raw },
                structure: match a.structure {
                    Structure::Aic => StructureCriterion::Aic,
                    Structure::Tau => StructureCriterion::Tau,
                },
                bins: a.bins,
                bootstrap: a.bootstrap,
                seed: a.seed,
                families: families(&a.families).map(<[Family]>::to_vec),
            };
            let out = engine::fit(&table, &req)?;
            println!("order {}", out["names"]);
            for k in ["c12", "c23", "c13_2"] {
                if let Some(f) = out.get(k) {
                    println!("{k:<6} {} aic {:.2}", f["copula"], f["aic"]);
                }
            }
            if let Some(c) = out.get("curve") {
                println!("tau_hat {} at {}", c["tau_hat"], c["grid"]);
            }
            write_json(&a.out, &out)
        }
        Command::Approx(a) => {
            let spec = a.model.load()?;
            let r = engine::approx(&spec, a.n, a.seed, families(&a.families), 101)?;
            println!("{} tau {:.4} aic {:.2}", r.fit.copula, r.tau_hat, r.fit.aic);
            write_json(&a.out, &r)
        }
        Command::Kde(a) => {
            let table = read_table(&a.data)?;
            let u = if a.uniform { table.rows } else { rank_transform(&table.rows) };
            let z = normal_scores(&u)?;
            let bw = a.bandwidth.map(|h| Bandwidth3D::new([h[0], h[1], h[2]])).transpose()?;
            let k = kde_fit(&z, bw)?;
            println!("bandwidth {:?}", k.bandwidth().h);
            let field = k.sample_grid(&a.grid.spec())?;
            let b = bundle(&field, &a.grid.levels, None)?;
            let empty_levels = b.levels.iter().filter(|l| l.level >= b.field_max).map(|l| l.level).collect();
            let r = engine::MeshResponse {
                bundle: b,
                quantized: false,
                quantize_above: engine::QUANTIZE_ABOVE,
                empty_levels,
            };
            write_meshes(&a.out, &r)
        }
        Command::Scenarios => {
            println!("{:<8} {:<11} {:>8} {:>8}  title", "id", "simplified", "tau12", "tau23");
            for s in scenarios::list() {
                println!(
                    "{:<8} {:<11} {:>8.4} {:>8.4}  {}",
                    s.id,
                    s.simplified,
                    s.spec.c12.tau(),
                    s.spec.c23.tau(),
                    s.title
                );
            }
            Ok(())
        }
        Command::Serve(a) => {
            let mut cfg = service::Config {
                job_ttl: Duration::from_secs(a.job_ttl),
                ..service::Config::default()
            };
            if let Some(w) = a.workers {
                cfg.workers = w;
            }
            if !a.host.is_loopback() {
                eprintln!("warning: binding {} exposes an unauthenticated service", a.host);
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(SocketAddr::new(a.host, a.port), cfg))
        }
    }
}
