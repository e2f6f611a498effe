//! `geoindex`: command-line front end for index iteration, common index
//! jumps and the three-geodesic contradiction pipeline.
//!
//! Exit codes: 0 computed, 1 error, 2 contradiction certified by `anosov`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

use geoindex_core::anosov::{
    self, run_pipeline, verify_lemma41, AnosovError, GeodesicSystem, ImpossibilityReport,
    SearchBudget, Verdict,
};
use geoindex_core::exact::{fmt_rational, parse_rational, rat, ArithError, PrecisionBudget};
use geoindex_core::io::{SystemError, SystemFile};
use geoindex_core::iteration::{gamma_invariant, mbar as system_mbar, IndexGerm, IterationError};
use geoindex_core::jump::{build_problem, verify_t34, verify_t36, JumpCertificate, JumpError};
use geoindex_core::morse::{betti, morse_numbers_up_to, MorseError};
use geoindex_core::normal_forms::NormalFormError;

type Rational = BigRational;

#[derive(Parser)]
#[command(
    name = "geoindex",
    version,
    about = "Index iteration, common index jumps and closed-geodesic certificates"
)]
struct Cli {
    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the JSON artifact to this path.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for the jump search.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Table of i(c^m) and ν(c^m) over a range of m.
    Index {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        curve: String,
        #[arg(long, default_value_t = 1)]
        m_min: u64,
        #[arg(long)]
        m_max: u64,
    },
    /// Mean index of each curve.
    MeanIndex {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        curve: Option<String>,
    },
    /// The invariant γ of each curve.
    Gamma {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        curve: Option<String>,
    },
    /// Iteration horizon m̄ of the system.
    Mbar {
        #[command(flatten)]
        sys: SystemArg,
    },
    /// Search a common index jump certificate.
    JumpSearch {
        #[command(flatten)]
        sys: SystemArg,
        /// Restrict to these curves (repeatable).
        #[arg(long)]
        curve: Vec<String>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Re-verify a certificate against the system.
    VerifyJump {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long)]
        mbar_override: Option<u64>,
    },
    /// Scale a certificate by p̂.
    ScaleJump {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long, default_value_t = 4)]
        p_hat: u64,
    },
    /// Morse numbers M_q against Betti numbers b_q up to 2N.
    Morse {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long)]
        mbar_override: Option<u64>,
    },
    /// Run the full contradiction pipeline, or replay a saved report.
    Anosov {
        #[arg(long, required_unless_present = "replay")]
        system: Option<PathBuf>,
        /// Re-derive a saved report without searching.
        #[arg(long, conflicts_with = "system")]
        replay: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 4)]
        p_hat: u64,
    },
}

#[derive(Args)]
struct SystemArg {
    #[arg(long)]
    system: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value = "1/64", value_parser = tolerance)]
    delta: Rational,
    /// Defaults to the smallest admissible value for jump-search and to 1/64 for anosov.
    #[arg(long, value_parser = tolerance)]
    epsilon: Option<Rational>,
    #[arg(long, default_value_t = 1)]
    n_min: u64,
    #[arg(long, default_value_t = 10_000_000)]
    n_max: u64,
    #[arg(long, default_value_t = 1)]
    m0: u64,
    #[arg(long)]
    mbar_override: Option<u64>,
}

fn tolerance(s: &str) -> std::result::Result<Rational, String> {
    let q = parse_rational(s).map_err(|e| e.to_string())?;
    if q <= rat(0, 1) || q >= rat(1, 2) {
        return Err(format!("{s} is not in (0, 1/2)"));
    }
    Ok(q)
}

impl SearchArgs {
    fn check(&self) -> Result<()> {
        if self.n_min == 0 || self.n_min > self.n_max {
            bail!(Usage(format!(
                "empty search range [{}, {}]",
                self.n_min, self.n_max
            )));
        }
        if self.m0 == 0 {
            bail!(Usage("--m0 must be positive".into()));
        }
        Ok(())
    }
}

/// Invalid flags or arguments.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// What a subcommand produced.
struct Outcome {
    artifact: Value,
    table: String,
    exit: u8,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // exit code 2 is reserved for certified contradictions
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&cli, &out) {
                return fail(&cli, &e);
            }
            ExitCode::from(out.exit)
        }
        Err(e) => fail(&cli, &e),
    }
}

fn fail(cli: &Cli, e: &anyhow::Error) -> ExitCode {
    let code = error_code(e);
    match cli.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(
                &json!({ "error": { "code": code, "message": format!("{e:#}") } })
            )
            .expect("plain data")
        ),
        Format::Table => eprintln!("error[{code}]: {e:#}"),
    }
    ExitCode::from(1)
}

fn emit(cli: &Cli, out: &Outcome) -> Result<()> {
    let text = serde_json::to_string_pretty(&out.artifact)? + "\n";
    match cli.format {
        Format::Json => print!("{text}"),
        Format::Table => print!("{}", out.table),
    }
    if let Some(path) = &cli.output {
        std::fs::write(path, &text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

/// Stable machine-readable code for an error.
fn error_code(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if cause.downcast_ref::<Usage>().is_some() {
            return "usage";
        }
        if let Some(a) = cause.downcast_ref::<AnosovError>() {
            return match a {
                AnosovError::Admissibility(_) => "admissibility",
                AnosovError::Lemma41Violation { .. } => "index-bound-violation",
                AnosovError::Inconsistent(_) => "internal-inconsistency",
                AnosovError::Replay(_) => "replay",
                AnosovError::System(s) => system_code(s),
                AnosovError::Jump(j) => jump_code(j),
                AnosovError::Iteration(_) => "iteration",
                AnosovError::Morse(_) => "morse",
            };
        }
        if let Some(s) = cause.downcast_ref::<SystemError>() {
            return system_code(s);
        }
        if let Some(j) = cause.downcast_ref::<JumpError>() {
            return jump_code(j);
        }
        if cause.downcast_ref::<IterationError>().is_some() {
            return "iteration";
        }
        if cause.downcast_ref::<MorseError>().is_some() {
            return "morse";
        }
        if cause.downcast_ref::<NormalFormError>().is_some() {
            return "normal-form";
        }
        if cause.downcast_ref::<ArithError>().is_some() {
            return "arithmetic";
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return "schema";
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
    }
    "error"
}

fn system_code(e: &SystemError) -> &'static str {
    match e {
        SystemError::Io { .. } => "io",
        SystemError::Schema { .. } => "schema",
        SystemError::Block { .. } => "range",
        SystemError::DuplicateName(_) => "duplicate-name",
        SystemError::Dimension { .. } => "dimension",
        SystemError::Invalid(_) => "invalid-system",
    }
}

fn jump_code(e: &JumpError) -> &'static str {
    match e {
        JumpError::ZeroMeanIndex { .. } => "zero-mean-index",
        JumpError::Precondition(_) => "precondition",
        JumpError::NotFound { .. } => "not-found",
        JumpError::ScaleMismatch(..) => "scale-mismatch",
        JumpError::IdentityViolation { .. } => "identity-violation",
        JumpError::InvalidCertificate(_) => "invalid-certificate",
        JumpError::Arith(_) => "arithmetic",
        JumpError::Iteration(_) => "iteration",
        JumpError::NormalForm(_) => "normal-form",
    }
}

fn precision_fallback() -> Result<PrecisionBudget> {
    match std::env::var("GEOINDEX_PRECISION") {
        Ok(v) => {
            let digits: u32 = v
                .trim()
                .parse()
                .map_err(|_| Usage(format!("GEOINDEX_PRECISION={v:?} is not a digit count")))?;
            let budget =
                PrecisionBudget::new(digits, digits.min(PrecisionBudget::default().refine_step))
                    .map_err(|e| Usage(format!("GEOINDEX_PRECISION: {e}")))?;
            Ok(budget)
        }
        Err(_) => Ok(PrecisionBudget::default()),
    }
}

fn load(path: &Path) -> Result<GeodesicSystem> {
    let file = SystemFile::read(path)?;
    Ok(GeodesicSystem::new(file, precision_fallback()?)?)
}

fn select(system: &GeodesicSystem, names: &[String]) -> Result<Vec<IndexGerm>> {
    names
        .iter()
        .map(|n| {
            system
                .germs
                .iter()
                .find(|g| g.name() == n)
                .cloned()
                .ok_or_else(|| anyhow!(Usage(format!("no curve named {n}"))))
        })
        .collect()
}

fn read_certificate(path: &Path) -> Result<JumpCertificate> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut v: Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
    // scale-jump output carries the scaled certificate
    if let Some(s) = v.get_mut("scaled") {
        v = s.take();
    }
    serde_json::from_value(v).with_context(|| format!("{} is not a certificate", path.display()))
}

fn run(cli: &Cli) -> Result<Outcome> {
    if let Some(w) = cli.workers {
        if w == 0 {
            bail!(Usage("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()?;
    }
    match &cli.command {
        Command::Index {
            sys,
            curve,
            m_min,
            m_max,
        } => index(&load(&sys.system)?, curve, *m_min, *m_max),
        Command::MeanIndex { sys, curve } => mean_index(&load(&sys.system)?, curve.as_deref()),
        Command::Gamma { sys, curve } => gamma(&load(&sys.system)?, curve.as_deref()),
        Command::Mbar { sys } => mbar(&load(&sys.system)?),
        Command::JumpSearch { sys, curve, search } => {
            jump_search(&load(&sys.system)?, curve, search)
        }
        Command::VerifyJump {
            sys,
            certificate,
            mbar_override,
        } => verify_jump(
            &load(&sys.system)?,
            &read_certificate(certificate)?,
            *mbar_override,
        ),
        Command::ScaleJump {
            sys,
            certificate,
            p_hat,
        } => scale_jump(&load(&sys.system)?, &read_certificate(certificate)?, *p_hat),
        Command::Morse {
            sys,
            certificate,
            mbar_override,
        } => morse(
            &load(&sys.system)?,
            &read_certificate(certificate)?,
            *mbar_override,
        ),
        Command::Anosov {
            system,
            replay,
            search,
            p_hat,
        } => match (system, replay) {
            (_, Some(path)) => replay_report(path),
            (Some(path), None) => pipeline(&load(path)?, search, *p_hat),
            (None, None) => bail!(Usage("--system or --replay is required".into())),
        },
    }
}

fn curves<'a>(system: &'a GeodesicSystem, name: Option<&str>) -> Result<Vec<&'a IndexGerm>> {
    match name {
        None => Ok(system.germs.iter().collect()),
        Some(n) => Ok(vec![system
            .germs
            .iter()
            .find(|g| g.name() == n)
            .ok_or_else(|| anyhow!(Usage(format!("no curve named {n}"))))?]),
    }
}

fn index(system: &GeodesicSystem, curve: &str, m_min: u64, m_max: u64) -> Result<Outcome> {
    if m_min == 0 || m_min > m_max {
        bail!(Usage(format!("empty range [{m_min}, {m_max}]")));
    }
    let g = curves(system, Some(curve))?[0];
    let profile = g.profile(m_min..=m_max)?;
    let mut table = format!("{:>8} {:>10} {:>4}\n", "m", "i", "nu");
    let mut rows = Vec::new();
    for e in &profile.entries {
        writeln!(table, "{:>8} {:>10} {:>4}", e.m, e.index, e.nullity)?;
        rows.push(json!({ "m": e.m, "index": e.index, "nullity": e.nullity }));
    }
    Ok(Outcome {
        artifact: json!({ "curve": g.name(), "rows": rows }),
        table,
        exit: 0,
    })
}

fn mean_index(system: &GeodesicSystem, curve: Option<&str>) -> Result<Outcome> {
    let mut table = format!("{:<12} {:<24} {}\n", "curve", "mean index", "exact");
    let mut rows = Vec::new();
    for g in curves(system, curve)? {
        let exact = g.mean_index().to_string();
        let approx = g.mean_index().to_certified().map(|c| c.approx_f64());
        let shown = approx.map_or_else(|| "-".to_string(), |a| format!("{a:.12}"));
        writeln!(table, "{:<12} {:<24} {}", g.name(), shown, exact)?;
        rows.push(json!({ "curve": g.name(), "mean_index": exact, "sign": format!("{:?}", g.mean_index_sign()?) }));
    }
    Ok(Outcome {
        artifact: json!({ "curves": rows }),
        table,
        exit: 0,
    })
}

fn gamma(system: &GeodesicSystem, curve: Option<&str>) -> Result<Outcome> {
    let mut table = format!(
        "{:<12} {:>6} {:>6} {:>8}\n",
        "curve", "i(c)", "i(c^2)", "gamma"
    );
    let mut rows = Vec::new();
    for g in curves(system, curve)? {
        let (i1, i2) = (g.initial_index(), g.index_at(2)?);
        let gm = fmt_rational(&gamma_invariant(i1, i2));
        writeln!(table, "{:<12} {:>6} {:>6} {:>8}", g.name(), i1, i2, gm)?;
        rows.push(json!({ "curve": g.name(), "i1": i1, "i2": i2, "gamma": gm }));
    }
    Ok(Outcome {
        artifact: json!({ "curves": rows }),
        table,
        exit: 0,
    })
}

fn mbar(system: &GeodesicSystem) -> Result<Outcome> {
    let mut table = format!("{:<12} {:>8}\n", "curve", "m0");
    let mut rows = Vec::new();
    for g in &system.germs {
        let m = g.mbar()?;
        writeln!(table, "{:<12} {:>8}", g.name(), m)?;
        rows.push(json!({ "curve": g.name(), "m0": m }));
    }
    let all = system_mbar(&system.germs)?;
    writeln!(table, "mbar = {all}")?;
    Ok(Outcome {
        artifact: json!({ "curves": rows, "mbar": all }),
        table,
        exit: 0,
    })
}

fn certificate_table(c: &JumpCertificate) -> Result<String> {
    let mut t = format!(
        "N = {}  M = {}  M0 = {}  delta = {}  epsilon = {}\n",
        c.n,
        c.big_m,
        c.m0,
        fmt_rational(&c.delta),
        fmt_rational(&c.epsilon)
    );
    writeln!(t, "chi = {:?}", c.chi)?;
    writeln!(t, "{:<12} {:>12} {:>6} {:>4}", "curve", "m", "Delta", "rho")?;
    for k in &c.curves {
        writeln!(t, "{:<12} {:>12} {:>6} {:>4}", k.name, k.m, k.delta, k.rho)?;
    }
    Ok(t)
}

fn jump_search(system: &GeodesicSystem, names: &[String], s: &SearchArgs) -> Result<Outcome> {
    s.check()?;
    let germs = if names.is_empty() {
        system.germs.clone()
    } else {
        select(system, names)?
    };
    let mut problem = build_problem(&germs, s.delta.clone(), s.epsilon.clone(), s.m0)?;
    if let Some(m) = s.mbar_override {
        problem.set_mbar(m);
    }
    let cert = problem.search(s.n_min, s.n_max)?;
    Ok(Outcome {
        table: certificate_table(&cert)?,
        artifact: serde_json::to_value(&cert)?,
        exit: 0,
    })
}

fn problem_for(
    system: &GeodesicSystem,
    cert: &JumpCertificate,
    mbar_override: Option<u64>,
) -> Result<geoindex_core::jump::JumpProblem> {
    let names: Vec<String> = cert.curves.iter().map(|c| c.name.clone()).collect();
    let germs = select(system, &names)?;
    let mut problem = build_problem(
        &germs,
        cert.delta.clone(),
        Some(cert.epsilon.clone()),
        cert.m0,
    )?;
    if let Some(m) = mbar_override {
        problem.set_mbar(m);
    }
    Ok(problem)
}

fn verify_jump(
    system: &GeodesicSystem,
    cert: &JumpCertificate,
    mbar_override: Option<u64>,
) -> Result<Outcome> {
    let problem = problem_for(system, cert, mbar_override)?;
    let mut report = verify_t34(&problem, cert)?;
    report.extend(verify_t36(problem.germs(), cert, problem.mbar())?);
    let n = report.checks.len();
    let report = report.into_result()?;
    Ok(Outcome {
        table: format!(
            "{n} identities verified for N = {} (mbar = {})\n",
            cert.n,
            problem.mbar()
        ),
        artifact: json!({ "N": cert.n, "mbar": problem.mbar(), "passed": true, "report": report }),
        exit: 0,
    })
}

fn scale_jump(system: &GeodesicSystem, cert: &JumpCertificate, p_hat: u64) -> Result<Outcome> {
    if p_hat == 0 {
        bail!(Usage("--p-hat must be positive".into()));
    }
    let problem = problem_for(system, cert, None)?;
    let scaled = problem.scale(cert, p_hat)?;
    let table = format!(
        "p_hat = {p_hat}, {} identities verified\n{}",
        scaled.ledger.checks.len(),
        certificate_table(&scaled.scaled)?
    );
    Ok(Outcome {
        artifact: serde_json::to_value(&scaled)?,
        table,
        exit: 0,
    })
}

fn morse(
    system: &GeodesicSystem,
    cert: &JumpCertificate,
    mbar_override: Option<u64>,
) -> Result<Outcome> {
    let problem = problem_for(system, cert, mbar_override)?;
    if problem.germs().len() != system.germs.len() {
        bail!(Usage(
            "Morse numbers need a certificate covering every curve".into()
        ));
    }
    let (bound, _) = verify_lemma41(problem.germs(), cert, problem.mbar())?;
    let top = 2 * cert.n as i64;
    let counts = morse_numbers_up_to(problem.germs(), cert, top, Some(&bound))?;
    let mut table = format!("{:>8} {:>6} {:>6}\n", "q", "M_q", "b_q");
    let mut rows = Vec::new();
    for q in 0..=top {
        let (m, b) = (counts.get(q), betti(q));
        writeln!(
            table,
            "{:>8} {:>6} {:>6}{}",
            q,
            m,
            b,
            if m < b { "  M_q < b_q" } else { "" }
        )?;
        rows.push(json!({ "q": q, "M": m, "b": b }));
    }
    let (a2n, a2n1) = (counts.alternating_sum(top), counts.alternating_sum(top - 1));
    writeln!(table, "alternating sums: 2N -> {a2n}, 2N-1 -> {a2n1}")?;
    Ok(Outcome {
        artifact: json!({
            "N": cert.n,
            "rows": rows,
            "alternating_2N": a2n,
            "alternating_2N_minus_1": a2n1,
            "weak_violations": counts.weak_violations(top),
        }),
        table,
        exit: 0,
    })
}

fn report_outcome(report: ImpossibilityReport) -> Result<Outcome> {
    let mut table = format!("{:<28} {}\n", "stage", "verdict");
    for st in &report.stages {
        writeln!(table, "{:<28} {}", st.name, st.verdict)?;
    }
    writeln!(table, "final: {}", report.final_verdict)?;
    let exit = if matches!(report.final_verdict, Verdict::Contradiction(_)) {
        2
    } else {
        0
    };
    Ok(Outcome {
        artifact: serde_json::to_value(&report)?,
        table,
        exit,
    })
}

fn pipeline(system: &GeodesicSystem, s: &SearchArgs, p_hat: u64) -> Result<Outcome> {
    s.check()?;
    if p_hat == 0 {
        bail!(Usage("--p-hat must be positive".into()));
    }
    let budget = SearchBudget {
        delta: s.delta.clone(),
        epsilon: s.epsilon.clone().unwrap_or_else(|| rat(1, 64)),
        n_min: s.n_min,
        n_max: s.n_max,
        m0: s.m0,
        p_hat,
        mbar_override: s.mbar_override,
    };
    report_outcome(run_pipeline(system, &budget)?)
}

fn replay_report(path: &Path) -> Result<Outcome> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let saved: ImpossibilityReport = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a report", path.display()))?;
    let again = anosov::replay(&saved, precision_fallback()?)?;
    if again != saved {
        let at = saved
            .stages
            .iter()
            .zip(&again.stages)
            .find(|(a, b)| a != b)
            .map_or_else(|| "stage list".to_string(), |(a, _)| a.name.clone());
        bail!(AnosovError::Replay(format!(
            "re-derived report differs at {at}"
        )));
    }
    report_outcome(again)
}
