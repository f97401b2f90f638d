//! Command-line front end behind the `stein` binary.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad input or malformed document,
//! 3 no operator within the given bounds, 4 a check failed, 5 a deadline or
//! the memory cap was hit.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{
    charfn_ode, charfn_pole_classify, charfn_residual, gamma_characterization_check, linspace, GammaIdentity,
    GaussianRational, DEFAULT_NODES,
};
use crate::chain::SteinOperator;
use crate::control::{
    min_degree_search_with, min_order_search_with, search, ControlError, SearchOptions, ZeroOrder,
};
use crate::document::{emit_latex, emit_symbolic, verify_operator, OperatorDocument, Timing};
use crate::fixtures;
use crate::hermite::hermite;
use crate::malliavin::{gamma_power, GammaVariant, TargetSpec};
use crate::poly::{display_order, format_rational, Poly, Rational};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_REACHABLE: i32 = 3;
pub const EXIT_CHECK: i32 = 4;
pub const EXIT_LIMIT: i32 = 5;

/// Solver memory cap in MiB.
pub const MEMORY_CAP_ENV: &str = "STEIN_MEMORY_CAP_MB";

#[derive(Parser, Debug)]
#[command(name = "stein", version, about = "Algebraic polynomial Stein operators for Gaussian polynomial targets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Latex,
    Symbolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Standard,
    Modified,
}

impl From<VariantArg> for GammaVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Standard => GammaVariant::Standard,
            VariantArg::Modified => GammaVariant::Modified,
        }
    }
}

#[derive(clap::Args, Debug)]
#[group(required = true, multiple = false)]
pub struct TargetArg {
    /// Named target H1..H20.
    #[arg(long)]
    pub target: Option<String>,
    /// Target polynomial in x or x1..xd, e.g. "x^3" or "x1*x2".
    #[arg(long)]
    pub poly: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Search for a Stein operator by null control and validate it.
    Find {
        #[command(flatten)]
        target: TargetArg,
        /// Largest order T tried.
        #[arg(long)]
        max_order: usize,
        /// Degree bound m on the coefficients.
        #[arg(long)]
        max_degree: usize,
        /// cy, y^k, generic, or a polynomial in y.
        #[arg(long, default_value = "cy")]
        zero_order: String,
        /// Report every feasible order up to --max-order with its solution space.
        #[arg(long)]
        all: bool,
        #[arg(long, value_enum, default_value = "standard")]
        variant: VariantArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Record solver wall time in the document.
        #[arg(long)]
        timing: bool,
    },
    /// Minimal (T, m) pairs for Hermite targets next to the reference table.
    Table {
        #[arg(long, default_value_t = 8)]
        p_max: usize,
        /// Allow p above 8.
        #[arg(long)]
        heavy: bool,
        /// Per-cell budget in seconds.
        #[arg(long, default_value_t = 120)]
        timeout: u64,
        /// Print per-cell wall times.
        #[arg(long)]
        timing: bool,
    },
    /// Re-run every check on an operator document.
    Verify { file: PathBuf },
    /// Render an operator document.
    Emit {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "latex")]
        format: Format,
    },
    /// Print the Hermite polynomial H_n.
    Hermite {
        n: usize,
        #[arg(long)]
        latex: bool,
    },
    /// Apply the Gamma operator of a target to a polynomial.
    Gamma {
        /// Target: H<n> or a polynomial in x.
        #[arg(long)]
        target: String,
        #[arg(long)]
        apply: String,
        #[arg(long)]
        modified: bool,
        #[arg(long, default_value_t = 1)]
        iterate: usize,
    },
    /// Characteristic-function ODE of an operator and its pole classification.
    Charode {
        /// Operator document path or catalog fixture name.
        source: String,
        /// Also check the ODE numerically on t in [0.1, 2].
        #[arg(long)]
        residual: bool,
    },
    /// Residual of a Gamma relation (h3-gamma5, h3-gamma4, h3-gamma4-unit, h4-gamma3).
    Gammacheck { name: String },
}

/// Output sinks and error reporting for one invocation.
struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn fail(&mut self, code: i32, msg: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {msg}");
        code
    }
}

macro_rules! out {
    ($io:expr, $($arg:tt)*) => {
        if writeln!($io.out, $($arg)*).is_err() {
            return EXIT_IO;
        }
    };
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut io = Io { out, err };
    let cap = match memory_cap() {
        Ok(c) => c,
        Err(msg) => return io.fail(EXIT_INPUT, msg),
    };
    match cli.command {
        Command::Find { target, max_order, max_degree, zero_order, all, variant, format, timing } => {
            let opts = SearchOptions { variant: variant.into(), all, deadline: None, memory_cap: cap };
            cmd_find(&mut io, &target, max_order, max_degree, &zero_order, opts, format, timing)
        }
        Command::Table { p_max, heavy, timeout, timing } => cmd_table(&mut io, p_max, heavy, timeout, timing, cap),
        Command::Verify { file } => cmd_verify(&mut io, &file),
        Command::Emit { file, format } => cmd_emit(&mut io, &file, format),
        Command::Hermite { n, latex } => {
            let h = hermite(n);
            out!(io, "{}", if latex { latex_x(&h) } else { h.to_string() });
            EXIT_OK
        }
        Command::Gamma { target, apply, modified, iterate } => cmd_gamma(&mut io, &target, &apply, modified, iterate),
        Command::Charode { source, residual } => cmd_charode(&mut io, &source, residual),
        Command::Gammacheck { name } => {
            let id: GammaIdentity = match name.parse() {
                Ok(id) => id,
                Err(e) => return io.fail(EXIT_INPUT, e),
            };
            let r = gamma_characterization_check(id);
            out!(io, "{}", r);
            if r.is_zero() {
                EXIT_OK
            } else {
                EXIT_CHECK
            }
        }
    }
}

fn memory_cap() -> Result<Option<u64>, String> {
    match std::env::var(MEMORY_CAP_ENV) {
        Err(_) => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(|mb| Some(mb.saturating_mul(1 << 20)))
            .map_err(|_| format!("{MEMORY_CAP_ENV} must be a whole number of MiB, got '{v}'")),
    }
}

/// H<n> by name, otherwise a polynomial in x.
pub fn parse_target(s: &str) -> Result<TargetSpec, String> {
    let s = s.trim();
    if let Some(n) = s.strip_prefix(['H', 'h']).and_then(|r| r.parse::<usize>().ok()) {
        if !(1..=20).contains(&n) {
            return Err(format!("named targets are H1..H20, got {s}"));
        }
        return TargetSpec::new(hermite(n)).map_err(|e| e.to_string());
    }
    TargetSpec::parse(s).map_err(|e| e.to_string())
}

pub fn parse_zero_order(s: &str) -> Result<ZeroOrder, String> {
    let s = s.trim();
    match s {
        "cy" => return Ok(ZeroOrder::Cy),
        "generic" => return Ok(ZeroOrder::Generic),
        _ => {}
    }
    if let Some(k) = s.strip_prefix("y^").and_then(|k| k.parse::<u32>().ok()) {
        return Ok(ZeroOrder::Monomial(k));
    }
    Poly::parse_y(s).map(ZeroOrder::Explicit).map_err(|e| format!("zero order '{s}': {e}"))
}

fn control_exit(io: &mut Io, e: ControlError) -> i32 {
    let code = match e {
        ControlError::NotReachable { .. } => EXIT_NOT_REACHABLE,
        ControlError::Timeout { .. } | ControlError::MemoryCap { .. } => EXIT_LIMIT,
        ControlError::ZeroOrderZero | ControlError::Poly(_) => EXIT_INPUT,
        ControlError::DimensionAudit { .. } => EXIT_CHECK,
    };
    io.fail(code, e)
}

fn render(doc: &OperatorDocument, op: &SteinOperator, format: Format) -> String {
    match format {
        Format::Json => doc.to_json(),
        Format::Latex => emit_latex(op),
        Format::Symbolic => emit_symbolic(op),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_find(
    io: &mut Io,
    target: &TargetArg,
    t_max: usize,
    m: usize,
    zero: &str,
    opts: SearchOptions,
    format: Format,
    timing: bool,
) -> i32 {
    let spec = match (&target.target, &target.poly) {
        (Some(t), _) if t.trim_start().starts_with(['H', 'h']) => parse_target(t),
        (Some(t), _) => Err(format!("--target takes H1..H20, got '{t}'; use --poly for expressions")),
        (None, Some(p)) => TargetSpec::parse(p).map_err(|e| e.to_string()),
        (None, None) => Err("no target given".to_string()),
    };
    let spec = match spec {
        Ok(s) => s,
        Err(e) => return io.fail(EXIT_INPUT, e),
    };
    let zero = match parse_zero_order(zero) {
        Ok(z) => z,
        Err(e) => return io.fail(EXIT_INPUT, e),
    };
    let start = Instant::now();
    let sols = match search(&spec, t_max, m, &zero, opts) {
        Ok(s) => s,
        Err(e) => return control_exit(io, e),
    };
    let elapsed = start.elapsed();
    let mut docs = Vec::new();
    let mut ok = true;
    for sol in &sols {
        let mut doc = OperatorDocument::from_solution(&spec, sol, &zero.label(), opts.variant);
        if timing {
            doc.timing = Some(Timing { solve_ms: elapsed.as_millis() as u64 });
        }
        ok &= doc.verification.ok();
        docs.push((doc, sol.operator(&spec)));
    }
    if format == Format::Json && opts.all {
        let list: Vec<&OperatorDocument> = docs.iter().map(|(d, _)| d).collect();
        out!(io, "{}", serde_json::to_string_pretty(&list).expect("documents serialize"));
    } else {
        for (doc, op) in &docs {
            out!(io, "{}", render(doc, op, format));
        }
    }
    if ok {
        EXIT_OK
    } else {
        io.fail(EXIT_CHECK, "an emitted operator failed validation")
    }
}

fn read_document(path: &Path) -> Result<OperatorDocument, (i32, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| (EXIT_IO, format!("{}: {e}", path.display())))?;
    OperatorDocument::from_json(&text).map_err(|e| (EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn load_operator(path: &Path) -> Result<(OperatorDocument, SteinOperator), (i32, String)> {
    let doc = read_document(path)?;
    let op = doc.to_operator().map_err(|e| (EXIT_INPUT, format!("{}: {e}", path.display())))?;
    Ok((doc, op))
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    file: String,
    ok: bool,
    /// Whether the stored verification block agrees with the recomputed one.
    stored_block_matches: bool,
    #[serde(flatten)]
    report: &'a crate::document::VerificationReport,
}

fn cmd_verify(io: &mut Io, path: &Path) -> i32 {
    let (doc, op) = match load_operator(path) {
        Ok(x) => x,
        Err((code, msg)) => return io.fail(code, msg),
    };
    let report = verify_operator(&op, doc.variant);
    let ok = report.summary.ok();
    let output =
        VerifyOutput { file: path.display().to_string(), ok, stored_block_matches: report.summary == doc.verification, report: &report };
    out!(io, "{}", serde_json::to_string_pretty(&output).expect("report serializes"));
    if ok {
        EXIT_OK
    } else {
        EXIT_CHECK
    }
}

fn cmd_emit(io: &mut Io, path: &Path, format: Format) -> i32 {
    let (doc, op) = match load_operator(path) {
        Ok(x) => x,
        Err((code, msg)) => return io.fail(code, msg),
    };
    out!(io, "{}", render(&doc, &op, format));
    EXIT_OK
}

fn cmd_gamma(io: &mut Io, target: &str, apply: &str, modified: bool, iterate: usize) -> i32 {
    let spec = match parse_target(target) {
        Ok(s) => s,
        Err(e) => return io.fail(EXIT_INPUT, e),
    };
    let f = match Poly::parse_xd(apply, spec.d()) {
        Ok(f) => f,
        Err(e) => return io.fail(EXIT_INPUT, format!("--apply: {e}")),
    };
    let variant = if modified { GammaVariant::Modified } else { GammaVariant::Standard };
    match gamma_power(&spec, &f, iterate, variant) {
        Ok(g) => {
            out!(io, "{}", g);
            EXIT_OK
        }
        Err(e) => io.fail(EXIT_INPUT, e),
    }
}

fn gaussian_string(z: &GaussianRational) -> String {
    match (z.re.is_zero(), z.im.is_zero()) {
        (_, true) => format_rational(&z.re),
        (true, false) => format!("{}i", format_rational(&z.im)),
        (false, false) => {
            let sign = if z.im < Rational::zero() { "-" } else { "+" };
            format!("{}{sign}{}i", format_rational(&z.re), format_rational(&num_traits::Signed::abs(&z.im)))
        }
    }
}

fn cmd_charode(io: &mut Io, source: &str, residual: bool) -> i32 {
    let op = if Path::new(source).exists() {
        match load_operator(Path::new(source)) {
            Ok((_, op)) => op,
            Err((code, msg)) => return io.fail(code, msg),
        }
    } else {
        match fixtures::by_name(source) {
            Some(f) => f.operator(),
            None => return io.fail(EXIT_INPUT, format!("'{source}' is neither a file nor a fixture name")),
        }
    };
    let ode = charfn_ode(&op).normalized();
    out!(io, "{}", ode.to_latex());
    match charfn_pole_classify(&ode) {
        Ok(c) => {
            out!(io, "alpha: {}", c.alpha);
            out!(io, "leading: {}", gaussian_string(&c.leading));
            out!(io, "next: {}", gaussian_string(&c.next));
            out!(io, "condition: {}", serde_json::to_string(&c.condition).expect("condition serializes"));
        }
        Err(e) => out!(io, "classification: not available ({e})"),
    }
    if residual {
        match charfn_residual(&op, &linspace(0.1, 2.0, 20), DEFAULT_NODES) {
            Ok(r) => {
                out!(io, "max residual: {:.3e} (doubled nodes {:.3e}, converged {})", r.max_residual, r.max_residual_doubled, r.converged);
            }
            Err(e) => return io.fail(EXIT_INPUT, e),
        }
    }
    EXIT_OK
}

/// LaTeX for a univariate polynomial in x, descending powers.
pub fn latex_x(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut s = String::new();
    for (i, (a, c)) in display_order(p).into_iter().enumerate() {
        let neg = *c < Rational::zero();
        match (i, neg) {
            (0, true) => s.push('-'),
            (0, false) => {}
            (_, true) => s.push_str(" - "),
            (_, false) => s.push_str(" + "),
        }
        let abs = num_traits::Signed::abs(c);
        let e = a.get(0);
        let coeff = if abs.is_integer() {
            abs.numer().to_string()
        } else {
            format!("\\frac{{{}}}{{{}}}", abs.numer(), abs.denom())
        };
        let var = match e {
            0 => String::new(),
            1 => "x".into(),
            _ => format!("x^{{{e}}}"),
        };
        if var.is_empty() {
            s.push_str(&coeff);
        } else if coeff != "1" {
            s.push_str(&coeff);
            s.push_str(&var);
        } else {
            s.push_str(&var);
        }
    }
    s
}

/// (T, m) pairs printed for H1..H10: general min-T, general min-m, cy min-T, cy min-m.
pub const TABLE_REFERENCE: [[(usize, usize); 4]; 10] = [
    [(1, 1), (1, 1), (1, 1), (1, 1)],
    [(1, 1), (1, 1), (1, 1), (1, 1)],
    [(3, 4), (5, 2), (4, 3), (5, 2)],
    [(2, 3), (3, 2), (3, 2), (3, 2)],
    [(5, 12), (13, 4), (6, 11), (13, 4)],
    [(3, 6), (6, 3), (4, 5), (6, 3)],
    [(7, 24), (25, 6), (8, 23), (25, 6)],
    [(4, 10), (10, 4), (5, 9), (10, 4)],
    [(9, 40), (41, 8), (10, 39), (41, 8)],
    [(5, 15), (15, 5), (6, 14), (15, 5)],
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    MinOrder,
    MinDegree,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableCell {
    pub p: usize,
    pub generic: bool,
    pub objective: Objective,
}

impl TableCell {
    pub fn reference(&self) -> Option<(usize, usize)> {
        let col = match (self.generic, self.objective) {
            (true, Objective::MinOrder) => 0,
            (true, Objective::MinDegree) => 1,
            (false, Objective::MinOrder) => 2,
            (false, Objective::MinDegree) => 3,
        };
        TABLE_REFERENCE.get(self.p.wrapping_sub(1)).map(|row| row[col])
    }

    /// min-T: m ≤ p², T ≤ p(p+1)/2 + 2. min-m: the same T bound, m ≤ p.
    pub fn run(&self, opts: SearchOptions) -> Result<(usize, usize), ControlError> {
        let spec = TargetSpec::new(hermite(self.p)).expect("nonconstant");
        let zero = if self.generic { ZeroOrder::Generic } else { ZeroOrder::Cy };
        let t_cap = self.p * (self.p + 1) / 2 + 2;
        let cell = match self.objective {
            Objective::MinOrder => min_order_search_with(&spec, &zero, self.p * self.p, t_cap, opts)?,
            Objective::MinDegree => min_degree_search_with(&spec, &zero, t_cap, self.p, opts)?,
        };
        Ok((cell.t, cell.m))
    }
}

fn cmd_table(io: &mut Io, p_max: usize, heavy: bool, timeout: u64, timing: bool, cap: Option<u64>) -> i32 {
    if p_max == 0 || p_max > 20 {
        return io.fail(EXIT_INPUT, "--p-max must be in 1..=20");
    }
    if p_max > 8 && !heavy {
        return io.fail(EXIT_INPUT, "--p-max above 8 needs --heavy");
    }
    let mut cells = Vec::new();
    for p in 1..=p_max {
        for generic in [true, false] {
            for objective in [Objective::MinOrder, Objective::MinDegree] {
                cells.push(TableCell { p, generic, objective });
            }
        }
    }
    let budget = Duration::from_secs(timeout);
    type Timed = (Result<(usize, usize), ControlError>, Duration);
    let results: Vec<Timed> = cells
        .par_iter()
        .map(|c| {
            let start = Instant::now();
            let opts = SearchOptions { deadline: Some(start + budget), memory_cap: cap, ..Default::default() };
            (c.run(opts), start.elapsed())
        })
        .collect();
    out!(io, "{:<5}{:<9}{:<7}{:<11}{:<11}status", "p", "mode", "obj", "found", "reference");
    let mut mismatches = 0;
    for (cell, (res, dt)) in cells.iter().zip(&results) {
        let found = match res {
            Ok((t, m)) => format!("({t},{m})"),
            Err(ControlError::Timeout { .. }) => "timeout".into(),
            Err(ControlError::MemoryCap { .. }) => "memcap".into(),
            Err(ControlError::NotReachable { .. }) => "none".into(),
            Err(e) => format!("error: {e}"),
        };
        let reference = cell.reference();
        let status = match (res, reference) {
            (Ok(pair), Some(r)) if *pair == r => "ok",
            (Ok(_), Some(_)) => {
                mismatches += 1;
                "MISMATCH"
            }
            (Ok(_), None) => "-",
            (Err(ControlError::Timeout { .. } | ControlError::MemoryCap { .. }), _) => "skipped",
            (Err(_), _) => {
                mismatches += 1;
                "MISMATCH"
            }
        };
        let reference = reference.map_or("-".to_string(), |(t, m)| format!("({t},{m})"));
        let mode = if cell.generic { "generic" } else { "cy" };
        let obj = if cell.objective == Objective::MinOrder { "minT" } else { "minm" };
        let time = if timing { format!("  {:.2}s", dt.as_secs_f64()) } else { String::new() };
        out!(io, "{:<5}{:<9}{:<7}{:<11}{:<11}{status}{time}", format!("H{}", cell.p), mode, obj, found, reference);
    }
    if mismatches > 0 {
        io.fail(EXIT_CHECK, format!("{mismatches} cell(s) differ from the reference"))
    } else {
        EXIT_OK
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("stein").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn find_symbolic_h4() {
        let (code, out, _) = call(&[
            "find", "--target", "H4", "--max-order", "5", "--max-degree", "2", "--zero-order", "cy", "--format", "symbolic",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "(192*y^2+576*y-3456)*D^3+(-16*y^2+144*y+576)*D^2+(-44*y-24)*D+y");
    }

    #[test]
    fn find_latex_examples() {
        let (code, out, _) =
            call(&["find", "--poly", "x+x^2-1", "--max-order", "2", "--max-degree", "1", "--format", "latex"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "y - (4\\,y + 3)\\partial + (4\\,y + 5)\\partial^{2}");
        let (code, out, _) = call(&["find", "--poly", "x^3", "--max-order", "3", "--max-degree", "2", "--format", "latex"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "y - 15\\partial - 81\\,y\\partial^{2} - 27\\,y^{2}\\partial^{3}");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(call(&["find", "--target", "H4", "--max-order", "2", "--max-degree", "2"]).0, EXIT_NOT_REACHABLE);
        assert_eq!(call(&["find", "--poly", "x^^2", "--max-order", "2", "--max-degree", "2"]).0, EXIT_INPUT);
        assert_eq!(call(&["find", "--target", "H21", "--max-order", "2", "--max-degree", "2"]).0, EXIT_INPUT);
        assert_eq!(call(&["bogus"]).0, EXIT_INPUT);
        assert_eq!(call(&["table", "--p-max", "9"]).0, EXIT_INPUT);
        assert_eq!(call(&["gammacheck", "h3-gamma4"]).0, EXIT_OK);
        assert_eq!(call(&["gammacheck", "h3-gamma4-unit"]).0, EXIT_CHECK);
        assert_eq!(call(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn hermite_and_gamma() {
        assert_eq!(call(&["hermite", "4"]).1.trim(), "x^4-6*x^2+3");
        assert_eq!(call(&["hermite", "3", "--latex"]).1.trim(), "x^{3} - 3x");
        // Γ(x) for h = H2 is 2x
        assert_eq!(call(&["gamma", "--target", "H2", "--apply", "x"]).1.trim(), "2*x");
        assert_eq!(call(&["gamma", "--target", "H2", "--apply", "x^2-1", "--iterate", "2"]).1.trim(), "4*x^2");
    }

    #[test]
    fn charode_h4() {
        let (code, out, _) = call(&["charode", "h4-cy"]);
        assert_eq!(code, 0);
        assert!(out.contains("\"condition\":\"double_pole\""), "{out}");
        assert!(out.contains("\"a\":\"1/16\""), "{out}");
    }

    #[test]
    fn table_small() {
        let (code, out, _) = call(&["table", "--p-max", "4"]);
        assert_eq!(code, 0, "{out}");
        assert_eq!(out.lines().count(), 17);
        assert!(!out.contains("MISMATCH"));
    }
}
