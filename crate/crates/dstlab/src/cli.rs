//! Argument parsing and the subcommands of the `dstlab` binary.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dstlab_core::asymptotics::depth_constants;
use dstlab_core::depoisson::charlier_exp_partial_sums;
use dstlab_core::moments::{
    depth_moments_exact, depth_moments_f64, profile_poly_closed_f64, variance_series, MomentSeries, Param, ParamSpec,
    VariancePath,
};
use dstlab_core::scalar::{LogPoly, Scalar};
use dstlab_core::trees::{measure, BucketTree, Key, ShapeReport};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use crate::montecarlo::{simulate, Observable, SimConfig};
use crate::registry;
use crate::validate::{self, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "dstlab", version, about = "Moments, constants and simulations for digital search trees")]
pub struct Cli {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    F64,
    Exact,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharlierTarget {
    /// e^{−2z}: the partial sums tend to (−1)^n.
    Alternating,
    /// e^{z}: the partial sums tend to 2^n.
    Power,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate the asymptotic constants and compare with reference values.
    Constants {
        /// Comma-separated names; a trailing '*' matches a prefix.
        #[arg(long)]
        filter: Option<String>,
        /// Replace every reference tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Mean and variance series from the exact recurrences.
    Moments {
        #[arg(long)]
        param: String,
        #[arg(long, default_value_t = 1)]
        b: u32,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long)]
        nmax: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::F64)]
        mode: ModeArg,
        /// Emit (log₂n, V/n) pairs instead of the full table.
        #[arg(long)]
        figure: bool,
    },
    /// Run a validation suite.
    Validate {
        #[arg(long, default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(Suite::NAMES))]
        suite: String,
    },
    /// Monte Carlo estimates and histograms over random trees.
    Simulate {
        /// Comma-separated observables: ipl, kpl, npl, ppl, leaves, dpl, wpl, nodes, wpl_label.
        #[arg(long)]
        param: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        b: u32,
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// Histogram bin width.
        #[arg(long, default_value_t = 1.0)]
        width: f64,
    },
    /// Depth of a uniformly chosen node from the expected profile.
    Depth {
        #[arg(long)]
        n: usize,
        /// Defaults to exact up to n = 8192.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Emit the expected number of nodes per level instead.
        #[arg(long)]
        profile: bool,
    },
    /// Partial sums of the Poisson–Charlier expansion of an exponential.
    Charlier {
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum)]
        target: CharlierTarget,
        /// Largest order J.
        #[arg(long, default_value_t = 80)]
        j: u32,
    },
    /// Build a tree from a key file (one 0/1 string per line) and report its shape.
    Tree {
        /// Key file, or '-' for standard input.
        #[arg(long)]
        keys: PathBuf,
        #[arg(long, default_value_t = 1)]
        b: u32,
        /// Comma-separated powers for DPL and WPL.
        #[arg(long, default_value = "1")]
        m: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(io::Error),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Twelve significant digits, '.' decimal, no exponent for moderate magnitudes.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..15).contains(&exp) {
        format!("{:.*}", (11 - exp).max(0) as usize, x)
    } else {
        format!("{x:.11e}")
    };
    trim_zeros(s)
}

fn trim_zeros(s: String) -> String {
    let (mant, exp) = match s.find('e') {
        Some(i) => (&s[..i], &s[i..]),
        None => (&s[..], ""),
    };
    if !mant.contains('.') {
        return s;
    }
    let mant = mant.trim_end_matches('0').trim_end_matches('.');
    format!("{mant}{exp}")
}

fn opt12(x: Option<f64>) -> String {
    x.map(fmt12).unwrap_or_default()
}

struct Sink {
    out: Box<dyn Write>,
    format: Format,
}

impl Sink {
    fn open(args: &OutputArgs) -> Result<Self, CliError> {
        let out: Box<dyn Write> = match &args.out {
            Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
            None => Box::new(io::BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { out, format: args.format })
    }

    fn csv(&mut self, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(&mut self.out);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, v: &T) -> Result<(), CliError> {
        serde_json::to_writer_pretty(&mut self.out, v)?;
        writeln!(self.out)?;
        Ok(())
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.out.flush()?;
        Ok(())
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            EXIT_FAILED
        }
    }
}

pub fn execute(cli: Cli) -> Result<i32, CliError> {
    // argument problems are reported before any output file is created
    check_args(&cli.command)?;
    let mut sink = Sink::open(&cli.output)?;
    let code = match cli.command {
        Command::Constants { filter, tol } => constants(&mut sink, filter.as_deref(), tol)?,
        Command::Moments { param, b, m, nmax, mode, figure } => {
            moments(&mut sink, spec_of(&param, b, m)?, nmax, mode, figure)?
        }
        Command::Validate { suite } => validate_cmd(&mut sink, Suite::from_name(&suite).expect("checked by clap"))?,
        Command::Simulate { param, n, trials, seed, b, m, width } => {
            simulate_cmd(&mut sink, &param, n, trials, seed, b, m, width)?
        }
        Command::Depth { n, mode, profile } => depth(&mut sink, n, mode, profile)?,
        Command::Charlier { n, target, j } => charlier(&mut sink, n, target, j)?,
        Command::Tree { keys, b, m } => tree(&mut sink, &keys, b, &m)?,
    };
    sink.finish()?;
    Ok(code)
}

fn check_args(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Constants { tol: Some(t), .. } if !(*t >= 0.0) => Err(usage("--tol must be non-negative")),
        Command::Moments { param, b, m, .. } => spec_of(param, *b, *m).map(|_| ()),
        Command::Simulate { param, b, .. } => observables(param, *b).map(|_| ()),
        Command::Depth { n: 0, .. } => Err(usage("--n must be at least 1")),
        Command::Tree { m, .. } => powers(m).map(|_| ()),
        _ => Ok(()),
    }
}

fn spec_of(param: &str, b: u32, m: u32) -> Result<ParamSpec, CliError> {
    if param == "depth" {
        return Err(usage("depth moments come from the `depth` subcommand"));
    }
    let p = Param::from_name(param).ok_or_else(|| usage(format!("unknown parameter '{param}'")))?;
    let spec = ParamSpec::new(p).with_b(b).with_m(m);
    spec.check().map_err(|e| usage(e.to_string()))?;
    if matches!(p, Param::Dpl | Param::Wpl) && m == 0 {
        return Err(usage("--m must be at least 1"));
    }
    Ok(spec)
}

fn constants(sink: &mut Sink, filter: Option<&str>, tol: Option<f64>) -> Result<i32, CliError> {
    let mut recs = registry::evaluate_all(filter);
    if let Some(t) = tol {
        for r in &mut recs {
            if let (Some(v), Some(reference)) = (r.value, r.reference) {
                r.tolerance = Some(t);
                r.within_tolerance = Some((v - reference).abs() <= t);
            }
        }
    }
    if recs.is_empty() {
        return Err(usage(format!("no constant matches '{}'", filter.unwrap_or(""))));
    }
    match sink.format {
        Format::Json => sink.json(&recs)?,
        Format::Csv => sink.csv(
            &["name", "b", "m", "value", "est_error", "reference", "tolerance", "within_tolerance", "method", "error"],
            recs.iter().map(|r| {
                vec![
                    r.name.to_string(),
                    r.b.map(|b| b.to_string()).unwrap_or_default(),
                    r.m.map(|m| m.to_string()).unwrap_or_default(),
                    opt12(r.value),
                    r.est_error.map(|e| format!("{e:.3e}")).unwrap_or_default(),
                    opt12(r.reference),
                    r.tolerance.map(|e| format!("{e:e}")).unwrap_or_default(),
                    r.within_tolerance.map(|w| w.to_string()).unwrap_or_default(),
                    r.method.clone(),
                    r.error.clone().unwrap_or_default(),
                ]
            }),
        )?,
    }
    Ok(if recs.iter().all(registry::Record::ok) { EXIT_OK } else { EXIT_FAILED })
}

/// Column name and values, as f64 and optionally as exact text.
struct Column {
    name: &'static str,
    values: Vec<f64>,
    exact: Option<Vec<String>>,
}

fn column<S: Scalar>(name: &'static str, v: &[S], exact: Option<fn(&S) -> String>) -> Column {
    Column { name, values: v.iter().map(Scalar::as_f64).collect(), exact: exact.map(|f| v.iter().map(f).collect()) }
}

fn columns<S: Scalar>(s: &MomentSeries<S>, exact: Option<fn(&S) -> String>) -> Vec<Column> {
    let mut cols = vec![column("mu", &s.mu, exact), column("var", s.var(), exact)];
    if let Some(j) = &s.npl {
        cols.push(column("nodes_mu", &j.mu_n, exact));
        cols.push(column("nodes_var", &j.var_n, exact));
        cols.push(column("cov", &j.cov, exact));
    }
    cols
}

fn moments(sink: &mut Sink, spec: ParamSpec, nmax: usize, mode: ModeArg, figure: bool) -> Result<i32, CliError> {
    let err = |e: dstlab_core::moments::MomentError| usage(e.to_string());
    let cols = match (mode, spec.param) {
        (ModeArg::F64, _) => columns(&variance_series::<f64>(spec, nmax, VariancePath::Direct).map_err(err)?, None),
        (ModeArg::Exact, Param::Wpl) => {
            columns(&variance_series::<LogPoly>(spec, nmax, VariancePath::Both).map_err(err)?, None)
        }
        (ModeArg::Exact, _) => columns(
            &variance_series::<BigRational>(spec, nmax, VariancePath::Both).map_err(err)?,
            Some(|q: &BigRational| q.to_string()),
        ),
    };
    if figure {
        let var = &cols[1].values;
        let pts: Vec<(f64, f64)> = (1..=nmax).map(|n| ((n as f64).log2(), var[n] / n as f64)).collect();
        match sink.format {
            Format::Json => sink.json(&pts.iter().map(|(x, y)| json!({"log2n": x, "v_over_n": y})).collect::<Vec<_>>())?,
            Format::Csv => {
                sink.csv(&["log2n", "v_over_n"], pts.iter().map(|(x, y)| vec![fmt12(*x), fmt12(*y)]))?
            }
        }
        return Ok(EXIT_OK);
    }
    match sink.format {
        Format::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("param".into(), json!(spec.param.name()));
            obj.insert("b".into(), json!(spec.b));
            obj.insert("m".into(), json!(spec.m));
            obj.insert("n".into(), json!((0..=nmax).collect::<Vec<_>>()));
            for c in &cols {
                obj.insert(c.name.into(), json!(c.values));
                if let Some(e) = &c.exact {
                    obj.insert(format!("{}_exact", c.name), json!(e));
                }
            }
            sink.json(&Value::Object(obj))?;
        }
        Format::Csv => {
            let mut header = vec!["n".to_string()];
            for c in &cols {
                header.push(c.name.to_string());
            }
            for c in cols.iter().filter(|c| c.exact.is_some()) {
                header.push(format!("{}_exact", c.name));
            }
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            sink.csv(
                &header,
                (0..=nmax).map(|n| {
                    let mut row = vec![n.to_string()];
                    row.extend(cols.iter().map(|c| fmt12(c.values[n])));
                    row.extend(cols.iter().filter_map(|c| c.exact.as_ref().map(|e| e[n].clone())));
                    row
                }),
            )?;
        }
    }
    Ok(EXIT_OK)
}

fn validate_cmd(sink: &mut Sink, suite: Suite) -> Result<i32, CliError> {
    let reports = validate::run(suite);
    match sink.format {
        Format::Json => sink.json(&reports)?,
        Format::Csv => sink.csv(
            &["suite", "check", "passed", "measured", "target", "tolerance", "note"],
            reports.iter().flat_map(|r| {
                r.checks.iter().map(move |c| {
                    vec![
                        r.suite.to_string(),
                        c.name.clone(),
                        c.passed.to_string(),
                        opt12(c.measured),
                        opt12(c.target),
                        c.tolerance.map(|t| format!("{t:e}")).unwrap_or_default(),
                        c.note.clone(),
                    ]
                })
            }),
        )?,
    }
    for r in &reports {
        let failed = r.checks.iter().filter(|c| !c.passed).count();
        eprintln!("{}: {} checks, {failed} failed", r.suite, r.checks.len());
    }
    Ok(if reports.iter().all(validate::SuiteReport::passed) { EXIT_OK } else { EXIT_FAILED })
}

fn observables(list: &str, b: u32) -> Result<Vec<Observable>, CliError> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let o = Observable::from_name(name).ok_or_else(|| usage(format!("unknown observable '{name}'")))?;
        if !o.supports(b) {
            return Err(usage(format!("{name} is only defined for b = 1")));
        }
        if !out.contains(&o) {
            out.push(o);
        }
    }
    if out.is_empty() {
        return Err(usage("--param needs at least one observable"));
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(
    sink: &mut Sink,
    param: &str,
    n: usize,
    trials: u64,
    seed: u64,
    b: u32,
    m: u32,
    width: f64,
) -> Result<i32, CliError> {
    let mut cfg = SimConfig::new(observables(param, b)?, b, n, trials, seed);
    cfg.m = m;
    cfg.hist_width = width;
    let summary = simulate(&cfg).map_err(|e| usage(e.to_string()))?;
    match sink.format {
        Format::Json => sink.json(&summary)?,
        Format::Csv if summary.stats.len() == 1 => sink.csv(
            &["value", "count"],
            summary.stats[0].histogram.iter().map(|(v, c)| vec![fmt12(*v), c.to_string()]),
        )?,
        Format::Csv => sink.csv(
            &["observable", "value", "count"],
            summary.stats.iter().flat_map(|s| {
                s.histogram.iter().map(move |(v, c)| vec![s.name.to_string(), fmt12(*v), c.to_string()])
            }),
        )?,
    }
    Ok(EXIT_OK)
}

/// Largest n for which `depth` defaults to exact arithmetic.
pub const DEPTH_EXACT_DEFAULT: usize = 8192;

fn depth(sink: &mut Sink, n: usize, mode: Option<ModeArg>, profile: bool) -> Result<i32, CliError> {
    if profile {
        let p = profile_poly_closed_f64(n).map_err(|e| usage(e.to_string()))?;
        match sink.format {
            Format::Json => sink.json(&json!({ "n": n, "expected_nodes_per_level": p }))?,
            Format::Csv => sink.csv(
                &["level", "expected_nodes"],
                p.iter().enumerate().map(|(k, v)| vec![k.to_string(), fmt12(*v)]),
            )?,
        }
        return Ok(EXIT_OK);
    }
    let mode = mode.unwrap_or(if n <= DEPTH_EXACT_DEFAULT { ModeArg::Exact } else { ModeArg::F64 });
    let d = match mode {
        ModeArg::Exact => depth_moments_exact(n),
        ModeArg::F64 => depth_moments_f64(n),
    };
    let k = depth_constants();
    let shifted = d.mean - (n as f64).log2();
    match sink.format {
        Format::Json => sink.json(&json!({
            "n": n,
            "mean": d.mean,
            "variance": d.variance,
            "mean_minus_log2n": shifted,
            "mean_constant": k.mean,
            "variance_constant": k.variance,
        }))?,
        Format::Csv => sink.csv(
            &["n", "mean", "variance", "mean_minus_log2n", "mean_constant", "variance_constant"],
            [vec![
                n.to_string(),
                fmt12(d.mean),
                fmt12(d.variance),
                fmt12(shifted),
                fmt12(k.mean),
                fmt12(k.variance),
            ]],
        )?,
    }
    Ok(EXIT_OK)
}

fn charlier(sink: &mut Sink, n: u64, target: CharlierTarget, j: u32) -> Result<i32, CliError> {
    let (a, limit) = match target {
        CharlierTarget::Alternating => (-2, if n % 2 == 0 { 1.0 } else { -1.0 }),
        CharlierTarget::Power => (1, (n as f64).exp2()),
    };
    let sums = charlier_exp_partial_sums(a, n, j);
    match sink.format {
        Format::Json => sink.json(&json!({ "n": n, "limit": limit, "partial_sums": sums }))?,
        Format::Csv => sink.csv(
            &["j", "partial_sum", "error"],
            sums.iter().enumerate().map(|(i, s)| vec![i.to_string(), fmt12(*s), fmt12(s - limit)]),
        )?,
    }
    Ok(EXIT_OK)
}

fn powers(list: &str) -> Result<Vec<u32>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u32>().map_err(|_| usage(format!("bad power '{s}'"))))
        .collect()
}

fn read_keys(path: &PathBuf) -> Result<Vec<String>, CliError> {
    let reader: Box<dyn BufRead> = if path.as_os_str() == "-" {
        Box::new(BufReader::new(io::stdin().lock()))
    } else {
        Box::new(BufReader::new(File::open(path)?))
    };
    let mut keys = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            keys.push(t.to_string());
        }
    }
    Ok(keys)
}

pub fn report_json(r: &ShapeReport) -> Value {
    let pairs = |v: &[(u32, f64)]| v.iter().map(|(m, x)| json!({"m": m, "value": x})).collect::<Vec<_>>();
    json!({
        "b": r.b,
        "n": r.n,
        "nodes": r.node_count,
        "kpl": r.kpl,
        "npl": r.npl,
        "leaves": r.leaf_count,
        "ppl": r.ppl,
        "dpl": pairs(&r.dpl),
        "wpl": pairs(&r.wpl_toll),
        "wpl_label": pairs(&r.wpl),
        "depth_profile": r.depth_profile,
        "occupancy": r.occupancy,
    })
}

fn tree(sink: &mut Sink, keys: &PathBuf, b: u32, m: &str) -> Result<i32, CliError> {
    let lines = read_keys(keys)?;
    let mut t = BucketTree::with_capacity(b, lines.len()).map_err(|e| usage(e.to_string()))?;
    for (i, s) in lines.iter().enumerate() {
        let mut k = Key::parse(s).map_err(|e| usage(format!("line {}: {e}", i + 1)))?;
        t.insert(&mut k).map_err(|e| usage(format!("key {}: {e}", i + 1)))?;
    }
    let r = measure(&t, &powers(m)?);
    let v = report_json(&r);
    match sink.format {
        Format::Json => sink.json(&v)?,
        Format::Csv => {
            let mut rows = Vec::new();
            for (k, x) in v.as_object().expect("object") {
                let text = match x {
                    Value::Number(num) => num.to_string(),
                    Value::Null => String::new(),
                    other => other.to_string(),
                };
                rows.push(vec![k.clone(), text]);
            }
            sink.csv(&["metric", "value"], rows)?;
        }
    }
    Ok(EXIT_OK)
}
