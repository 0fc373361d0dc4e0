//! Command-line front end: argument parsing and class validation, kernel-grid
//! and bounds writers, the verify report and special-function evaluation.

use crate::error::{Error, Result};
use crate::glkernel::{
    bound_B, diag_B, fit_c_tilde, kernel_grid_B, lp_norm_partial, solve_B_goursat, BoundParamsGL, GlKernel,
    KernelGrid, PotentialSpec,
};
use crate::makernel::{
    bound_K, diag_K, fit_c_l, kernel_grid_K, solve_K_goursat, BoundParamsMA, DecayPotentialSpec, MaKernel,
};
use crate::potential::{Potential, TablePotential};
use crate::solutions::{
    direct_jost, direct_regular, jost_free, ode_residual, phi_free, uniform_nodes, GlTransform, MaTransform,
    SpectralPoint,
};
use crate::specfun::{digamma, gamma_fn, hyp2f1, incomplete_gamma_upper};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

/// Multiplier applied to fitted bound constants before the fine-grid check.
pub const CALIBRATION_MARGIN: f64 = 1.25;
const RESIDUAL_STEP: f64 = 1e-3;
const RESIDUAL_NODES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialDesc {
    Const(f64),
    Power { coeff: f64, exponent: f64 },
    ExpDecay { rate: f64 },
    Table(PathBuf),
}

impl FromStr for PotentialDesc {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| format!("expected KIND:ARGS, got '{s}'"))?;
        let nums = || -> std::result::Result<Vec<f64>, String> {
            rest.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}' in '{s}'")))
                .collect()
        };
        let arity = |v: &[f64], n: usize| {
            if v.len() == n {
                Ok(())
            } else {
                Err(format!("'{kind}' takes {n} value(s), got {}", v.len()))
            }
        };
        match kind {
            "const" => {
                let v = nums()?;
                arity(&v, 1)?;
                Ok(PotentialDesc::Const(v[0]))
            }
            "power" => {
                let v = nums()?;
                arity(&v, 2)?;
                Ok(PotentialDesc::Power { coeff: v[0], exponent: v[1] })
            }
            "expdecay" => {
                let v = nums()?;
                arity(&v, 1)?;
                Ok(PotentialDesc::ExpDecay { rate: v[0] })
            }
            "table" => Ok(PotentialDesc::Table(PathBuf::from(rest))),
            _ => Err(format!("unknown potential kind '{kind}' (const, power, expdecay, table)")),
        }
    }
}

impl PotentialDesc {
    pub fn build(&self) -> Result<Potential> {
        Ok(match self {
            PotentialDesc::Const(c) => Potential::Const(*c),
            PotentialDesc::Power { coeff, exponent } => Potential::power(*coeff, *exponent),
            PotentialDesc::ExpDecay { rate } => Potential::exp_decay(1.0, *rate),
            PotentialDesc::Table(path) => Potential::Table(read_table(path)?),
        })
    }
}

/// Two numeric columns x, q separated by commas or whitespace; '#' lines and a
/// non-numeric header line are skipped.
fn read_table(path: &PathBuf) -> Result<TablePotential> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let (mut xs, mut qs) = (Vec::new(), Vec::new());
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|t| t.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == 2 => {
                xs.push(v[0]);
                qs.push(v[1]);
            }
            Err(_) if xs.is_empty() => continue,
            _ => {
                return Err(Error::Usage(format!("{}:{}: expected two numbers per line", path.display(), n + 1)));
            }
        }
    }
    TablePotential::new(xs, qs).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Series,
    Goursat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelChoice {
    Gl,
    Ma,
    Both,
}

#[derive(Parser, Debug)]
#[command(name = "transmute", version, about = "Gelfand-Levitan and Marchenko kernels of -d²/dx² + l(l+1)/x² + q(x)")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Gelfand-Levitan kernel B on 0 < y <= x <= L.
    KernelGl(GlArgs),
    /// Marchenko kernel K on x_min <= x <= y <= y_max.
    KernelMa(MaArgs),
    /// Diagonal, cross-method, oracle and residual checks; JSON report.
    Verify(VerifyArgs),
    /// Calibrate the envelope constant on a coarse grid, report ratios on a fine one.
    BoundsReport(BoundsArgs),
    /// Evaluate hyp2f1 A B C Z, digamma X, gammainc A Z or gamma X.
    SpecfunEval(SpecfunArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Angular parameter, l >= -1/2.
    #[arg(long, allow_hyphen_values = true)]
    l: f64,
    /// const:C | power:COEFF,EXP | expdecay:RATE | table:PATH
    #[arg(long)]
    q: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Output file; standard output if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct GlGeom {
    /// Right end of the interval (0, L].
    #[arg(long = "L", default_value_t = 1.0)]
    cap: f64,
    /// Integrability exponent of q.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct MaGeom {
    #[arg(long, default_value_t = 0.5)]
    x_min: f64,
    #[arg(long, default_value_t = 10.0)]
    y_max: f64,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args, Debug)]
struct GlArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    geom: GlGeom,
    /// N or NXxNY.
    #[arg(long, default_value = "20")]
    grid: String,
    #[arg(long, value_enum, default_value_t = Method::Series)]
    method: Method,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct MaArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    geom: MaGeom,
    #[arg(long, default_value = "20")]
    grid: String,
    #[arg(long, value_enum, default_value_t = Method::Series)]
    method: Method,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    gl: GlGeom,
    #[command(flatten)]
    ma: MaGeom,
    #[arg(long, value_enum, default_value_t = KernelChoice::Both)]
    kernel: KernelChoice,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    gl: GlGeom,
    #[command(flatten)]
    ma: MaGeom,
    #[arg(long, value_enum, default_value_t = KernelChoice::Gl)]
    kernel: KernelChoice,
    #[arg(long, default_value = "60")]
    grid: String,
}

#[derive(Args, Debug)]
struct SpecfunArgs {
    /// hyp2f1, digamma, gammainc or gamma.
    name: String,
    #[arg(allow_hyphen_values = true, num_args = 1..)]
    args: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    KernelGl,
    KernelMa,
    Verify,
    BoundsReport,
    SpecfunEval,
}

/// Grid extent: GL nodes are (L·i/nx, x·j/ny), MA nodes (x_i, x_i + (y_max − x_i)·j/ny).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub cap: f64,
    pub x_min: f64,
    pub y_max: f64,
}

/// A validated invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub l: f64,
    pub potential: Option<PotentialDesc>,
    pub gl: Option<PotentialSpec>,
    pub ma: Option<DecayPotentialSpec>,
    pub grid: GridSpec,
    pub tol: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub method: Method,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub specfun: Option<(String, Vec<f64>)>,
}

fn usage(e: Error) -> Error {
    match e {
        Error::Usage(_) | Error::Io(_) => e,
        Error::Domain(m) | Error::Divergence(m) => Error::Usage(m),
        other => Error::Usage(other.to_string()),
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Usage(format!("--grid expects N or NXxNY with N >= 1, got '{s}'"));
    let (a, b) = match s.split_once('x') {
        Some((a, b)) => (a, b),
        None => (s, s),
    };
    let nx: usize = a.trim().parse().map_err(|_| bad())?;
    let ny: usize = b.trim().parse().map_err(|_| bad())?;
    if nx == 0 || ny == 0 {
        return Err(bad());
    }
    Ok((nx, ny))
}

fn parse_potential(s: &str) -> Result<PotentialDesc> {
    s.parse::<PotentialDesc>().map_err(|m| Error::Usage(format!("--q: {m}")))
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!("--tol must lie in (0, 1), got {tol}")))
    }
}

fn gl_spec(q: &Potential, l: f64, g: &GlGeom) -> Result<PotentialSpec> {
    let pot = PotentialSpec::new(q.clone(), l, g.p, g.cap).map_err(usage)?;
    let norm = lp_norm_partial(&pot, g.cap).map_err(|e| {
        let class = if l == -0.5 { "weighted L^p((0, L]; z^(-p/p'))" } else { "L^p((0, L])" };
        Error::Usage(format!("q is not in {class} with p = {}: {e}", g.p))
    })?;
    if !norm.is_finite() {
        return Err(Error::Usage(format!("q has infinite L^p norm on (0, {}]", g.cap)));
    }
    if let Some(a) = g.alpha {
        BoundParamsGL { alpha: a, c_tilde: 1.0 }.validate(l, g.p).map_err(usage)?;
    }
    Ok(pot)
}

fn ma_spec(q: &Potential, l: f64, g: &MaGeom) -> Result<DecayPotentialSpec> {
    if !(g.y_max > g.x_min) {
        return Err(Error::Usage(format!("need y_max > x_min, got {} and {}", g.y_max, g.x_min)));
    }
    if let Potential::Table(t) = q {
        if t.q.last().copied().unwrap_or(0.0) != 0.0 {
            return Err(Error::Usage("a table potential must end at q = 0 to decay".into()));
        }
    }
    let pot = DecayPotentialSpec::with_floor(q.clone(), l, g.x_min).map_err(usage)?;
    if let Some(b) = g.beta {
        BoundParamsMA { beta: b, c_l: 1.0 }.validate().map_err(usage)?;
    }
    Ok(pot)
}

fn empty_grid() -> GridSpec {
    GridSpec { nx: 0, ny: 0, cap: 0.0, x_min: 0.0, y_max: 0.0 }
}

/// Parses and validates the argument list (without the program name).
pub fn parse_config<S: AsRef<str>>(args: &[S]) -> Result<RunConfig> {
    let argv = std::iter::once("transmute").chain(args.iter().map(|s| s.as_ref()));
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Usage(e.render().to_string()))?;
    match cli.command {
        Cmd::KernelGl(a) => {
            check_tol(a.common.tol)?;
            let desc = parse_potential(&a.common.q)?;
            let q = desc.build()?;
            let pot = gl_spec(&q, a.common.l, &a.geom)?;
            let (nx, ny) = parse_grid(&a.grid)?;
            if a.method == Method::Goursat && nx != ny {
                return Err(Error::Usage("--method goursat needs a square grid".into()));
            }
            Ok(RunConfig {
                command: Command::KernelGl,
                l: a.common.l,
                potential: Some(desc),
                gl: Some(pot),
                ma: None,
                grid: GridSpec { nx, ny, cap: a.geom.cap, ..empty_grid() },
                tol: a.common.tol,
                alpha: a.geom.alpha,
                beta: None,
                method: a.method,
                output: a.common.output,
                format: a.format,
                specfun: None,
            })
        }
        Cmd::KernelMa(a) => {
            check_tol(a.common.tol)?;
            let desc = parse_potential(&a.common.q)?;
            let q = desc.build()?;
            let pot = ma_spec(&q, a.common.l, &a.geom)?;
            let (nx, ny) = parse_grid(&a.grid)?;
            if a.method == Method::Goursat && nx != ny {
                return Err(Error::Usage("--method goursat needs a square grid".into()));
            }
            Ok(RunConfig {
                command: Command::KernelMa,
                l: a.common.l,
                potential: Some(desc),
                gl: None,
                ma: Some(pot),
                grid: GridSpec { nx, ny, x_min: a.geom.x_min, y_max: a.geom.y_max, ..empty_grid() },
                tol: a.common.tol,
                alpha: None,
                beta: a.geom.beta,
                method: a.method,
                output: a.common.output,
                format: a.format,
                specfun: None,
            })
        }
        Cmd::Verify(a) => {
            check_tol(a.common.tol)?;
            let desc = parse_potential(&a.common.q)?;
            let q = desc.build()?;
            let (gl, ma) = both_specs(&q, a.common.l, &a.gl, &a.ma, a.kernel)?;
            Ok(RunConfig {
                command: Command::Verify,
                l: a.common.l,
                potential: Some(desc),
                gl,
                ma,
                grid: GridSpec { nx: 0, ny: 0, cap: a.gl.cap, x_min: a.ma.x_min, y_max: a.ma.y_max },
                tol: a.common.tol,
                alpha: a.gl.alpha,
                beta: a.ma.beta,
                method: Method::Series,
                output: a.common.output,
                format: Format::Json,
                specfun: None,
            })
        }
        Cmd::BoundsReport(a) => {
            check_tol(a.common.tol)?;
            if a.kernel == KernelChoice::Both {
                return Err(Error::Usage("bounds-report takes --kernel gl or --kernel ma".into()));
            }
            let desc = parse_potential(&a.common.q)?;
            let q = desc.build()?;
            let (gl, ma) = both_specs(&q, a.common.l, &a.gl, &a.ma, a.kernel)?;
            let (nx, ny) = parse_grid(&a.grid)?;
            Ok(RunConfig {
                command: Command::BoundsReport,
                l: a.common.l,
                potential: Some(desc),
                gl,
                ma,
                grid: GridSpec { nx, ny, cap: a.gl.cap, x_min: a.ma.x_min, y_max: a.ma.y_max },
                tol: a.common.tol,
                alpha: a.gl.alpha,
                beta: a.ma.beta,
                method: Method::Series,
                output: a.common.output,
                format: Format::Csv,
                specfun: None,
            })
        }
        Cmd::SpecfunEval(a) => {
            let need = match a.name.as_str() {
                "hyp2f1" => 4,
                "gammainc" => 2,
                "digamma" | "gamma" => 1,
                other => return Err(Error::Usage(format!("unknown function '{other}' (hyp2f1, digamma, gammainc, gamma)"))),
            };
            if a.args.len() != need {
                return Err(Error::Usage(format!("{} takes {need} argument(s), got {}", a.name, a.args.len())));
            }
            Ok(RunConfig {
                command: Command::SpecfunEval,
                l: 0.0,
                potential: None,
                gl: None,
                ma: None,
                grid: empty_grid(),
                tol: 0.0,
                alpha: None,
                beta: None,
                method: Method::Series,
                output: None,
                format: Format::Csv,
                specfun: Some((a.name, a.args)),
            })
        }
    }
}

/// Specs for the requested kernels; `Both` keeps whichever class the potential is in.
fn both_specs(
    q: &Potential,
    l: f64,
    gl: &GlGeom,
    ma: &MaGeom,
    which: KernelChoice,
) -> Result<(Option<PotentialSpec>, Option<DecayPotentialSpec>)> {
    match which {
        KernelChoice::Gl => Ok((Some(gl_spec(q, l, gl)?), None)),
        KernelChoice::Ma => Ok((None, Some(ma_spec(q, l, ma)?))),
        KernelChoice::Both => {
            let a = gl_spec(q, l, gl);
            let b = ma_spec(q, l, ma);
            match (a, b) {
                (Err(e1), Err(e2)) => Err(Error::Usage(format!("not admissible for either kernel: {e1}; {e2}"))),
                (a, b) => Ok((a.ok(), b.ok())),
            }
        }
    }
}

/// printf-style %.12e.
pub fn fmt_e12(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let e: i32 = exp.parse().expect("exponent digits");
    format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

fn gl_nodes(g: &GridSpec) -> Vec<(f64, f64)> {
    let mut v = Vec::with_capacity(g.nx * g.ny);
    for i in 1..=g.nx {
        let x = g.cap * i as f64 / g.nx as f64;
        for j in 1..=g.ny {
            v.push((x, x * j as f64 / g.ny as f64));
        }
    }
    v
}

fn ma_nodes(g: &GridSpec) -> Vec<(f64, f64)> {
    let mut v = Vec::with_capacity(g.nx * (g.ny + 1));
    for i in 0..g.nx {
        let x = g.x_min + (g.y_max - g.x_min) * i as f64 / g.nx as f64;
        for j in 0..=g.ny {
            v.push((x, x + (g.y_max - x) * j as f64 / g.ny as f64));
        }
    }
    v
}

/// C¹ stand-in for the lattice oracles: tables are mollified.
fn lattice_potential(q: &Potential) -> Potential {
    match q {
        Potential::Table(t) => Potential::Table(t.mollified()),
        other => other.clone(),
    }
}

fn gl_grid(cfg: &RunConfig, pot: &PotentialSpec) -> Result<KernelGrid> {
    match cfg.method {
        Method::Series => {
            let k = GlKernel::new(pot, cfg.l, cfg.tol)?;
            kernel_grid_B(&k, &gl_nodes(&cfg.grid))
        }
        Method::Goursat => {
            let p = PotentialSpec { q: lattice_potential(&pot.q), ..pot.clone() };
            solve_B_goursat(&p, cfg.l, cfg.grid.cap / cfg.grid.nx as f64, cfg.grid.cap)
        }
    }
}

fn ma_grid(cfg: &RunConfig, pot: &DecayPotentialSpec) -> Result<KernelGrid> {
    match cfg.method {
        Method::Series => {
            let k = MaKernel::new(pot, &ma_params(cfg, 1.0), cfg.tol)?;
            kernel_grid_K(&k, &ma_nodes(&cfg.grid))
        }
        Method::Goursat => {
            let p = DecayPotentialSpec { q: lattice_potential(&pot.q), ..pot.clone() };
            let h = (cfg.grid.y_max - cfg.grid.x_min) / cfg.grid.nx as f64;
            solve_K_goursat(&p, h, cfg.grid.x_min, cfg.grid.y_max)
        }
    }
}

fn ma_params(cfg: &RunConfig, c_l: f64) -> BoundParamsMA {
    BoundParamsMA { beta: cfg.beta.unwrap_or(BoundParamsMA::default().beta), c_l }
}

#[derive(Serialize)]
struct GridJson<'a> {
    l: f64,
    method: &'a str,
    tol: f64,
    nodes: Vec<[f64; 3]>,
}

fn write_grid(out: &mut dyn Write, g: &KernelGrid, col: &str, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "x,y,{col},method,tol")?;
            let tol = fmt_e12(g.tol);
            for (&(x, y), &v) in g.nodes.iter().zip(&g.values) {
                writeln!(out, "{},{},{},{},{}", fmt_e12(x), fmt_e12(y), fmt_e12(v), g.method.name(), tol)?;
            }
        }
        Format::Json => {
            let j = GridJson {
                l: g.l,
                method: g.method.name(),
                tol: g.tol,
                nodes: g.nodes.iter().zip(&g.values).map(|(&(x, y), &v)| [x, y, v]).collect(),
            };
            serde_json::to_writer_pretty(&mut *out, &j).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: String,
    pub measured: f64,
    pub threshold: f64,
}

impl Check {
    fn new(name: &str, measured: f64, threshold: f64) -> Self {
        let status = if measured <= threshold { "pass" } else { "fail" };
        Check { name: name.into(), status: status.into(), measured, threshold }
    }

    fn from_result(name: &str, r: Result<f64>, threshold: f64) -> Self {
        match r {
            Ok(m) => Check::new(name, m, threshold),
            Err(e) => Check { name: format!("{name}: {e}"), status: "error".into(), measured: f64::NAN, threshold },
        }
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

fn rel_sup(a: &[f64], b: &[f64]) -> f64 {
    let sup = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if sup > 0.0 {
        diff / sup
    } else {
        diff
    }
}

fn rel(a: C64, b: C64) -> f64 {
    let d = (a - b).norm();
    if b.norm() > 0.0 {
        d / b.norm()
    } else {
        d
    }
}

fn spectral_points() -> [SpectralPoint; 2] {
    [SpectralPoint::real(1.0), SpectralPoint::new(C64::new(0.0, 1.0))]
}

fn residual_threshold(h: f64, tol: f64) -> f64 {
    10.0 * h * h + 10.0 * tol
}

fn verify_gl(cfg: &RunConfig, pot: &PotentialSpec) -> Vec<Check> {
    let l = cfg.l;
    let cap = pot.domain_cap;
    let mut checks = Vec::new();
    let tr = match GlTransform::new(pot, l, cfg.tol) {
        Ok(t) => t,
        Err(e) => return vec![Check::from_result("gl.build", Err(e), 0.0)],
    };
    let k = &tr.kernel;
    let diag = (|| {
        let mut m: f64 = 0.0;
        for x in [0.25 * cap, 0.5 * cap, cap] {
            let d = diag_B(x, pot)?;
            m = m.max((k.b(x, x * (1.0 - 1e-9))? - d).abs() / d.abs().max(1.0));
        }
        Ok(m)
    })();
    checks.push(Check::from_result("gl.diagonal", diag, 1e-6));
    let h = cap / 50.0;
    let cross = (|| {
        let lp = PotentialSpec { q: lattice_potential(&pot.q), ..pot.clone() };
        let g = solve_B_goursat(&lp, l, h, cap)?;
        let s = kernel_grid_B(k, &g.nodes)?;
        Ok(rel_sup(&s.values, &g.values))
    })();
    checks.push(Check::from_result("gl.cross_method", cross, (10.0 * h * h).max(1e-4)));
    let oracle = (|| {
        let mut m: f64 = 0.0;
        for pt in spectral_points() {
            for x in [0.25 * cap, 0.5 * cap, cap] {
                m = m.max(rel(tr.apply(pt, x)?, direct_regular(pot, l, pt, x, 1e-10)?));
            }
        }
        Ok(m)
    })();
    checks.push(Check::from_result("gl.oracle", oracle, 1e-3));
    // the sample must fit inside (0, L]
    let rh = RESIDUAL_STEP.min(0.5 * cap / RESIDUAL_NODES as f64);
    let resid = (|| {
        let xs = uniform_nodes(0.5 * cap, rh, RESIDUAL_NODES);
        let pts = spectral_points();
        let mut m: f64 = 0.0;
        for (s, pt) in tr.sample(&pts, &xs)?.iter().zip(&pts) {
            m = m.max(ode_residual(s, pot, l, *pt)?);
        }
        Ok(m)
    })();
    checks.push(Check::from_result("gl.residual", resid, residual_threshold(rh, cfg.tol)));
    if pot.q.is_zero() {
        let zero = (|| {
            let g = kernel_grid_B(k, &gl_nodes(&GridSpec { nx: 50, ny: 50, cap, ..empty_grid() }))?;
            let mut m = g.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for pt in spectral_points() {
                for x in [0.25 * cap, cap] {
                    m = m.max((tr.apply(pt, x)? - phi_free(l, pt, x)?).norm());
                }
            }
            Ok(m)
        })();
        checks.push(Check::from_result("gl.zero_potential", zero, 1e-12));
    }
    checks
}

fn verify_ma(cfg: &RunConfig, pot: &DecayPotentialSpec) -> Vec<Check> {
    let l = pot.l;
    let x0 = pot.x_floor;
    let params = ma_params(cfg, 1.0);
    let mut checks = Vec::new();
    let tr = match MaTransform::new(pot, &params, cfg.tol) {
        Ok(t) => t,
        Err(e) => return vec![Check::from_result("ma.build", Err(e), 0.0)],
    };
    let k = &tr.kernel;
    let diag = (|| {
        let mut m: f64 = 0.0;
        for x in [x0, x0 + 1.0, x0 + 3.0] {
            let d = diag_K(x, pot)?;
            m = m.max((k.k(x, x * (1.0 + 1e-9))? - d).abs() / d.abs().max(1.0));
        }
        Ok(m)
    })();
    checks.push(Check::from_result("ma.diagonal", diag, 1e-6));
    let h = 0.05;
    let cross = (|| {
        let lp = DecayPotentialSpec { q: lattice_potential(&pot.q), ..pot.clone() };
        let g = solve_K_goursat(&lp, h, x0, x0 + 14.0)?;
        let keep: Vec<usize> = (0..g.nodes.len()).filter(|&i| g.nodes[i].1 <= x0 + 4.0 + 1e-9).collect();
        let nodes: Vec<_> = keep.iter().map(|&i| g.nodes[i]).collect();
        let vals: Vec<_> = keep.iter().map(|&i| g.values[i]).collect();
        let s = kernel_grid_K(k, &nodes)?;
        Ok(rel_sup(&s.values, &vals))
    })();
    checks.push(Check::from_result("ma.cross_method", cross, (10.0 * h * h).max(1e-4)));
    let oracle = (|| {
        let mut m: f64 = 0.0;
        for pt in spectral_points() {
            for x in [x0 + 1.0, x0 + 3.0, x0 + 8.0] {
                m = m.max(rel(tr.apply(pt, x)?, direct_jost(pot, pt, x, 1e-10)?));
            }
        }
        Ok(m)
    })();
    checks.push(Check::from_result("ma.oracle", oracle, 1e-3));
    let resid = (|| {
        let xs = uniform_nodes(x0 + 1.5, RESIDUAL_STEP, RESIDUAL_NODES);
        let pts = spectral_points();
        let mut m: f64 = 0.0;
        for (s, pt) in tr.sample(&pts, &xs)?.iter().zip(&pts) {
            m = m.max(ode_residual(s, pot, l, *pt)?);
        }
        Ok(m)
    })();
    checks.push(Check::from_result("ma.residual", resid, residual_threshold(RESIDUAL_STEP, cfg.tol)));
    if pot.q.is_zero() {
        let zero = (|| {
            let g = GridSpec { nx: 50, ny: 49, x_min: x0, y_max: x0 + 10.0, ..empty_grid() };
            let kg = kernel_grid_K(k, &ma_nodes(&g))?;
            let mut m = kg.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for pt in spectral_points() {
                for x in [x0 + 1.0, x0 + 5.0] {
                    m = m.max((tr.apply(pt, x)? - jost_free(l, pt, x)?).norm());
                }
            }
            Ok(m)
        })();
        checks.push(Check::from_result("ma.zero_potential", zero, 1e-12));
    }
    checks
}

/// One (x, y, |kernel|, envelope) row per fine node after fitting on the coarse grid.
pub struct BoundsTable {
    pub constant_name: &'static str,
    pub fitted: f64,
    pub used: f64,
    pub coarse_nodes: usize,
    pub rows: Vec<(f64, f64, f64, f64)>,
}

impl BoundsTable {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| ratio(r.2, r.3)).fold(0.0, f64::max)
    }
}

fn ratio(v: f64, env: f64) -> f64 {
    if env > 0.0 {
        v / env
    } else if v == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Coarse calibration nodes: cell midpoints of a 10×10 grid, disjoint from the fine grid.
fn coarse_gl(cap: f64) -> Vec<(f64, f64)> {
    let mut v = Vec::new();
    for i in 0..10 {
        let x = cap * (i as f64 + 0.5) / 10.0;
        for j in 0..10 {
            v.push((x, x * (j as f64 + 0.5) / 10.0));
        }
    }
    v
}

fn coarse_ma(x_min: f64, y_max: f64) -> Vec<(f64, f64)> {
    let mut v = Vec::new();
    for i in 0..10 {
        let x = x_min + (y_max - x_min) * (i as f64 + 0.5) / 10.0;
        for j in 0..10 {
            v.push((x, x + (y_max - x) * (j as f64 + 0.5) / 10.0));
        }
    }
    v
}

pub fn gl_bounds(pot: &PotentialSpec, l: f64, alpha: f64, tol: f64, fine: &[(f64, f64)]) -> Result<BoundsTable> {
    let k = GlKernel::new(pot, l, tol)?;
    let coarse = coarse_gl(pot.domain_cap);
    let cv = kernel_grid_B(&k, &coarse)?;
    let samples: Vec<_> = coarse.iter().zip(&cv.values).map(|(&(x, y), &b)| (x, y, b.abs())).collect();
    let fitted = fit_c_tilde(&samples, pot, l, alpha)?;
    let used = CALIBRATION_MARGIN * fitted;
    let params = BoundParamsGL { alpha, c_tilde: used };
    let fv = kernel_grid_B(&k, fine)?;
    let rows = fine
        .iter()
        .zip(&fv.values)
        .map(|(&(x, y), &b)| Ok((x, y, b.abs(), bound_B(x, y, pot, l, &params)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsTable { constant_name: "c_tilde", fitted, used, coarse_nodes: coarse.len(), rows })
}

pub fn ma_bounds(pot: &DecayPotentialSpec, beta: f64, tol: f64, x_min: f64, y_max: f64, fine: &[(f64, f64)]) -> Result<BoundsTable> {
    let k = MaKernel::new(pot, &BoundParamsMA { beta, c_l: 1.0 }, tol)?;
    let coarse = coarse_ma(x_min, y_max);
    let cv = kernel_grid_K(&k, &coarse)?;
    let samples: Vec<_> = coarse.iter().zip(&cv.values).map(|(&(x, y), &v)| (x, y, v.abs())).collect();
    let fitted = fit_c_l(&samples, pot, beta)?;
    let used = CALIBRATION_MARGIN * fitted;
    let params = BoundParamsMA { beta, c_l: used };
    let fv = kernel_grid_K(&k, fine)?;
    let rows = fine
        .iter()
        .zip(&fv.values)
        .map(|(&(x, y), &v)| Ok((x, y, v.abs(), bound_K(x, y, pot, &params)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsTable { constant_name: "c_l", fitted, used, coarse_nodes: coarse.len(), rows })
}

fn write_bounds(out: &mut dyn Write, t: &BoundsTable) -> Result<()> {
    writeln!(out, "# calibration: {} fitted on {} coarse nodes", t.constant_name, t.coarse_nodes)?;
    writeln!(out, "# {}_fitted={}", t.constant_name, fmt_e12(t.fitted))?;
    writeln!(out, "# {}_used={} (margin {})", t.constant_name, fmt_e12(t.used), CALIBRATION_MARGIN)?;
    writeln!(out, "x,y,value,envelope,ratio")?;
    for &(x, y, v, e) in &t.rows {
        writeln!(out, "{},{},{},{},{}", fmt_e12(x), fmt_e12(y), fmt_e12(v), fmt_e12(e), fmt_e12(ratio(v, e)))?;
    }
    Ok(())
}

fn specfun_value(name: &str, a: &[f64]) -> Result<f64> {
    match name {
        "hyp2f1" => hyp2f1(a[0], a[1], a[2], a[3]),
        "digamma" => digamma(a[0]),
        "gammainc" => incomplete_gamma_upper(a[0], a[1]),
        "gamma" => gamma_fn(a[0]),
        _ => Err(Error::Usage(format!("unknown function '{name}'"))),
    }
}

/// Executes a validated configuration, writing artifacts to `stdout` unless an
/// output path is set. Returns the process exit status.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32> {
    let mut buf: Vec<u8> = Vec::new();
    let status = match cfg.command {
        Command::KernelGl => {
            let pot = cfg.gl.as_ref().expect("validated");
            write_grid(&mut buf, &gl_grid(cfg, pot)?, "B", cfg.format)?;
            0
        }
        Command::KernelMa => {
            let pot = cfg.ma.as_ref().expect("validated");
            write_grid(&mut buf, &ma_grid(cfg, pot)?, "K", cfg.format)?;
            0
        }
        Command::Verify => {
            let mut checks = Vec::new();
            if let Some(p) = &cfg.gl {
                checks.extend(verify_gl(cfg, p));
            }
            if let Some(p) = &cfg.ma {
                checks.extend(verify_ma(cfg, p));
            }
            let ok = checks.iter().all(Check::passed);
            serde_json::to_writer_pretty(&mut buf, &Report { checks }).map_err(|e| Error::Io(e.to_string()))?;
            buf.push(b'\n');
            if ok {
                0
            } else {
                1
            }
        }
        Command::BoundsReport => {
            let t = if let Some(p) = &cfg.gl {
                let alpha = cfg.alpha.unwrap_or(BoundParamsGL::default_for(cfg.l, p.p).alpha);
                gl_bounds(p, cfg.l, alpha, cfg.tol, &gl_nodes(&cfg.grid))?
            } else {
                let p = cfg.ma.as_ref().expect("validated");
                let beta = ma_params(cfg, 1.0).beta;
                ma_bounds(p, beta, cfg.tol, cfg.grid.x_min, cfg.grid.y_max, &ma_nodes(&cfg.grid))?
            };
            write_bounds(&mut buf, &t)?;
            if t.max_ratio() <= 1.0 {
                0
            } else {
                1
            }
        }
        Command::SpecfunEval => {
            let (name, args) = cfg.specfun.as_ref().expect("validated");
            let v = specfun_value(name, args)?;
            writeln!(buf, "{v:.17e}")?;
            0
        }
    };
    match &cfg.output {
        Some(path) => std::fs::write(path, &buf).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => match stdout.write_all(&buf) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(status)
}

/// Applies TRANSMUTE_THREADS to the global worker pool.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("TRANSMUTE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Usage(format!("TRANSMUTE_THREADS must be a positive integer, got '{v}'")))?;
        // a pool that is already running keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Entry point behind `main`: 0 on success, 1 on failed checks or runtime
/// errors, 2 on usage errors.
pub fn main_with_args(args: &[String]) -> i32 {
    if let Err(e) = configure_threads() {
        eprintln!("{e}");
        return 2;
    }
    let argv = std::iter::once("transmute").chain(args.iter().map(|s| s.as_str()));
    if let Err(e) = Cli::try_parse_from(argv) {
        if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
            print!("{}", e.render());
            return 0;
        }
    }
    let cfg = match parse_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", e.to_string().trim_end());
            return 2;
        }
    };
    let mut out = std::io::stdout().lock();
    match run(&cfg, &mut out) {
        Ok(code) => {
            if code != 0 {
                eprintln!("one or more checks failed");
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponent() {
        assert_eq!(fmt_e12(1.0), "1.000000000000e+00");
        assert_eq!(fmt_e12(-2.5e-7), "-2.500000000000e-07");
        assert_eq!(fmt_e12(6.02e123), "6.020000000000e+123");
        assert_eq!(fmt_e12(0.0), "0.000000000000e+00");
    }

    #[test]
    fn descriptors() {
        assert_eq!("const:1".parse::<PotentialDesc>(), Ok(PotentialDesc::Const(1.0)));
        assert_eq!(
            "power:1,-1.5".parse::<PotentialDesc>(),
            Ok(PotentialDesc::Power { coeff: 1.0, exponent: -1.5 })
        );
        assert!("power:1".parse::<PotentialDesc>().is_err());
        assert!("wave:1".parse::<PotentialDesc>().is_err());
    }

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("50").unwrap(), (50, 50));
        assert_eq!(parse_grid("30x20").unwrap(), (30, 20));
        assert!(parse_grid("0").is_err());
    }
}
