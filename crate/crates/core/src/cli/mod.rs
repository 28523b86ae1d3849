//! Command-line front end: `check`, `solve`, `verify`, `invariants` and
//! `reduce` on TOML problem files.
//!
//! Exit codes: 0 success, 1 condition violated, 2 input error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::conditions::{
    check_chiellini, check_generalized_chiellini, check_generalized_chiellini_second, check_riccati, check_theorem1,
    check_theorem2, check_theorem3, ConditionError, ConditionReport,
};
use crate::invariants::{
    absolute_invariants, classical_particular_reduction, normal_form, relative_invariants, AbsoluteInvariant,
    InvariantError,
};
use crate::model::{lienard_to_abel, LienardProblem, ModelError, PARTICULAR_TOL};
use crate::solvers::{
    solve_riccati, solve_theorem1, solve_theorem2, solve_theorem3, solve_theorem4, Branch, SolutionCurve, SolverError,
    TheoremId,
};
use crate::verify::{abel_residual, crosscheck_reference, lienard_residual, ResidualReport, VerifyError};

pub mod csv;
pub mod problem;

use csv::{num, report_line, Residuals};
use problem::{parse_expr, ProblemFile};

/// Bound on the maximum relative Abel residual of an accepted curve.
pub const ABEL_BOUND: f64 = 1e-6;
/// Bound on the maximum relative Liénard residual of an accepted curve.
pub const LIENARD_BOUND: f64 = 1e-5;
/// Bound on the deviation from the Runge–Kutta reference.
pub const ORACLE_BOUND: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("{0}")]
    Violated(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Violated(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Power { .. } | ModelError::Numerics(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ConditionError> for CliError {
    fn from(e: ConditionError) -> Self {
        match e {
            ConditionError::Model(m) => m.into(),
            ConditionError::NotPositive { what: "P", .. } => CliError::Input(e.to_string()),
            ConditionError::Vanishes { .. }
            | ConditionError::NegativeDiscriminant { .. }
            | ConditionError::NotPositive { .. } => CliError::Violated(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Condition(c) => c.into(),
            SolverError::Model(m) => m.into(),
            SolverError::ConditionViolated { .. } => CliError::Violated(e.to_string()),
            SolverError::ZeroS
            | SolverError::AnchorOutside { .. }
            | SolverError::Invalid(_)
            | SolverError::ConstantMismatch { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Model(m) => m.into(),
            VerifyError::Oracle { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<InvariantError> for CliError {
    fn from(e: InvariantError) -> Self {
        match e {
            InvariantError::Model(m) => m.into(),
            InvariantError::Undefined { .. } | InvariantError::Numerics(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lienard", version, about = "Integrability checks and solutions for extended Lienard equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check integrability conditions; every applicable one by default.
    Check {
        file: PathBuf,
        #[arg(long, value_enum)]
        condition: Option<ConditionArg>,
    },
    /// Solve with the theorem and constants of the [solve] block.
    Solve {
        file: PathBuf,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute all residuals of a curve CSV against its problem.
    Verify { curve: PathBuf, file: PathBuf },
    /// Relative and absolute invariants of the [classical] equation.
    Invariants {
        file: PathBuf,
        /// Number of relative invariants S3, S5, ... (at least 4).
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
    /// Normal form, or reduction by a particular solution y1(x).
    Reduce {
        file: PathBuf,
        #[arg(long, conflicts_with = "particular", required_unless_present = "particular")]
        normal_form: bool,
        #[arg(long, value_name = "EXPR")]
        particular: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConditionArg {
    T1,
    T2,
    T3,
    #[value(alias = "t4a")]
    T4,
    T4b,
    Riccati,
    Chiellini,
}

const ALL_CONDITIONS: [ConditionArg; 7] = [
    ConditionArg::T1,
    ConditionArg::T2,
    ConditionArg::T3,
    ConditionArg::T4,
    ConditionArg::T4b,
    ConditionArg::Riccati,
    ConditionArg::Chiellini,
];

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Results go to standard output, diagnostics to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let mut diag = String::new();
    let result = execute(cli.command, &mut diag).and_then(|text| {
        out.write_all(text.stdout.as_bytes())
            .map_err(|e| CliError::Input(format!("cannot write output: {e}")))?;
        Ok(text.code)
    });
    let _ = err.write_all(diag.as_bytes());
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}

struct Output {
    stdout: String,
    code: i32,
}

fn execute(command: Command, diag: &mut String) -> Result<Output, CliError> {
    match command {
        Command::Check { file, condition } => cmd_check(&ProblemFile::load(&file)?, condition, diag),
        Command::Solve { file, out } => cmd_solve(&ProblemFile::load(&file)?, out.as_deref(), diag),
        Command::Verify { curve, file } => cmd_verify(&curve, &ProblemFile::load(&file)?, diag),
        Command::Invariants { file, count } => cmd_invariants(&ProblemFile::load(&file)?, count),
        Command::Reduce {
            file,
            normal_form,
            particular,
        } => cmd_reduce(&ProblemFile::load(&file)?, normal_form, particular.as_deref()),
    }
}

fn run_condition(file: &ProblemFile, which: ConditionArg) -> Result<ConditionReport, CliError> {
    let opts = file.tolerances.check()?;
    let p = file.solve.as_ref().and_then(|s| s.p).unwrap_or(1.0);
    let report = match which {
        ConditionArg::Chiellini => {
            if let Some(eq) = &file.equation {
                let prob = file.lienard()?;
                if !(prob.f.is_zero() && prob.k.is_zero()) {
                    return Err(CliError::Input(format!(
                        "chiellini needs f = k = 0 in the (n, m) = ({}, {}) equation",
                        eq.n, eq.m
                    )));
                }
                check_chiellini(&prob.h, &prob.g, &prob.domain, &opts)?
            } else {
                let eq = file.classical()?;
                if !(eq.r.is_zero() && eq.s.is_zero()) {
                    return Err(CliError::Input("chiellini needs r = s = 0 in the classical equation".to_string()));
                }
                check_chiellini(&eq.p, &eq.q, &eq.domain, &opts)?
            }
        }
        ConditionArg::T1 => check_theorem1(&file.lienard()?, &opts)?,
        ConditionArg::T2 => check_theorem2(&file.lienard()?, &opts)?,
        ConditionArg::T3 => {
            let v_p = file
                .particular()?
                .ok_or_else(|| CliError::Input("T3 needs a [particular] block with v_p".to_string()))?;
            check_theorem3(&file.lienard()?, &v_p, &opts)?
        }
        ConditionArg::T4 => check_generalized_chiellini(&file.lienard()?, p, &opts)?,
        ConditionArg::T4b => check_generalized_chiellini_second(&file.lienard()?, p, &opts)?,
        ConditionArg::Riccati => {
            let prob = riccati_problem(file)?;
            check_riccati(&prob.f, &prob.k, &prob.domain, &opts)?
        }
    };
    Ok(report)
}

fn riccati_problem(file: &ProblemFile) -> Result<LienardProblem, CliError> {
    let prob = file.lienard()?;
    if prob.n != 3.0 || prob.m != 1.0 || !prob.g.is_zero() || !prob.h.is_zero() {
        return Err(CliError::Input(
            "the Riccati case needs (n, m) = (3, 1) and g = h = 0".to_string(),
        ));
    }
    Ok(prob)
}

fn applicable(file: &ProblemFile, which: ConditionArg) -> bool {
    let Some(eq) = &file.equation else {
        return which == ConditionArg::Chiellini;
    };
    let zero = |s: &str| s.trim() == "0";
    match which {
        ConditionArg::T1 | ConditionArg::T2 => (eq.n, eq.m) == (2.0, 3.0),
        ConditionArg::T3 => (eq.n, eq.m) == (2.0, 3.0) && file.particular.is_some(),
        ConditionArg::T4 | ConditionArg::T4b => zero(&eq.g) && zero(&eq.h),
        ConditionArg::Riccati => (eq.n, eq.m) == (3.0, 1.0) && zero(&eq.g) && zero(&eq.h),
        ConditionArg::Chiellini => zero(&eq.f) && zero(&eq.k),
    }
}

fn report_text(report: &ConditionReport) -> String {
    let mut text = report.summary();
    text.push('\n');
    for note in &report.notes {
        let _ = writeln!(text, "  note: {note}");
    }
    text
}

fn cmd_check(file: &ProblemFile, which: Option<ConditionArg>, diag: &mut String) -> Result<Output, CliError> {
    if let Some(which) = which {
        let report = run_condition(file, which)?;
        return Ok(Output {
            stdout: report_text(&report),
            code: if report.satisfied() { 0 } else { 1 },
        });
    }
    let mut stdout = String::new();
    let mut any_ran = false;
    let mut any_satisfied = false;
    let mut worst_failure: Option<CliError> = None;
    for which in ALL_CONDITIONS.into_iter().filter(|w| applicable(file, *w)) {
        match run_condition(file, which) {
            Ok(report) => {
                any_ran = true;
                any_satisfied |= report.satisfied();
                stdout.push_str(&report_text(&report));
            }
            Err(e) => {
                let _ = writeln!(diag, "{}: not applicable: {e}", which.to_possible_value().expect("named").get_name());
                if matches!(e, CliError::Violated(_)) {
                    any_ran = true;
                } else if worst_failure.as_ref().is_none_or(|w| e.code() > w.code()) {
                    worst_failure = Some(e);
                }
            }
        }
    }
    if !any_ran {
        return Err(worst_failure.unwrap_or_else(|| CliError::Input("no integrability condition applies".to_string())));
    }
    Ok(Output {
        stdout,
        code: if any_satisfied { 0 } else { 1 },
    })
}

fn branch_of(block: &problem::SolveBlock) -> Result<Branch, CliError> {
    block
        .branch
        .as_deref()
        .ok_or_else(|| CliError::Input("[solve] needs branch = \"+\" or \"-\"".to_string()))?
        .parse()
        .map_err(CliError::Input)
}

/// Solves the problem described by `file`.
pub fn solve_file(file: &ProblemFile) -> Result<SolutionCurve, CliError> {
    let block = file.solve_block()?;
    let opts = file.tolerances.solve()?;
    let theorem: TheoremId = block.theorem.parse().map_err(CliError::Input)?;
    let x0 = block.x0.unwrap_or(file.domain.min);
    let curve = match theorem {
        TheoremId::T1 => solve_theorem1(&file.lienard()?, block.constant("C")?, branch_of(block)?, x0, &opts)?,
        TheoremId::T2 => solve_theorem2(
            &file.lienard()?,
            block.constant("S")?,
            block.constant("K0")?,
            branch_of(block)?,
            x0,
            &opts,
        )?,
        TheoremId::T3 => {
            let v_p = file
                .particular()?
                .ok_or_else(|| CliError::Input("T3 needs a [particular] block with v_p".to_string()))?;
            solve_theorem3(&file.lienard()?, &v_p, block.constant("S")?, block.anchor()?, x0, &opts)?
        }
        TheoremId::T4 => solve_theorem4(
            &file.lienard()?,
            block.constant("S")?,
            block.p.unwrap_or(1.0),
            block.anchor()?,
            x0,
            &opts,
        )?,
        TheoremId::T5 => {
            let prob = riccati_problem(file)?;
            solve_riccati(&prob.f, &prob.k, block.constant("K")?, block.constant("C")?, &prob.domain, x0, &opts)?
        }
    };
    Ok(curve)
}

/// The three verification reports of `curve`.
pub struct Verification {
    pub abel: Result<ResidualReport, CliError>,
    pub lienard: Result<ResidualReport, CliError>,
    pub oracle: Result<ResidualReport, CliError>,
}

impl Verification {
    pub fn run(curve: &SolutionCurve, file: &ProblemFile) -> Result<Verification, CliError> {
        let prob = file.lienard()?;
        let tol = file.tolerances.numerics()?;
        Ok(Verification {
            abel: abel_residual(curve, &lienard_to_abel(&prob)).map_err(CliError::from),
            lienard: lienard_residual(curve, &prob).map_err(CliError::from),
            oracle: crosscheck_reference(curve, &prob, &tol).map_err(CliError::from),
        })
    }

    fn entries(&self) -> [(&'static str, &Result<ResidualReport, CliError>, f64); 3] {
        [
            ("abel", &self.abel, ABEL_BOUND),
            ("lienard", &self.lienard, LIENARD_BOUND),
            ("oracle", &self.oracle, ORACLE_BOUND),
        ]
    }

    /// First failure: an error, or a residual above its bound.
    pub fn failure(&self) -> Option<CliError> {
        for (name, r, bound) in self.entries() {
            match r {
                Err(e) => return Some(CliError::Numerical(format!("{name} residual: {e}"))),
                Ok(report) if !report.passes(bound) => {
                    return Some(CliError::Numerical(format!(
                        "{name} residual {} exceeds {bound:e} at {}",
                        num(report.max_rel),
                        num(report.worst_point)
                    )))
                }
                Ok(_) => {}
            }
        }
        None
    }

    fn csv_residuals(&self) -> Residuals<'_> {
        fn conv(r: &Result<ResidualReport, CliError>) -> Result<&ResidualReport, String> {
            r.as_ref().map_err(|e| e.to_string())
        }
        Residuals {
            abel: conv(&self.abel),
            lienard: conv(&self.lienard),
            oracle: conv(&self.oracle),
        }
    }
}

fn cmd_solve(file: &ProblemFile, out: Option<&Path>, diag: &mut String) -> Result<Output, CliError> {
    let curve = solve_file(file)?;
    let verification = Verification::run(&curve, file)?;
    let text = csv::write_curve(&curve, &verification.csv_residuals());
    let stdout = match out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            String::new()
        }
        None => text,
    };
    let code = match verification.failure() {
        Some(e) => {
            let _ = writeln!(diag, "error: {e}");
            e.code()
        }
        None => 0,
    };
    Ok(Output { stdout, code })
}

fn cmd_verify(curve_path: &Path, file: &ProblemFile, diag: &mut String) -> Result<Output, CliError> {
    let text = std::fs::read_to_string(curve_path)
        .map_err(|e| CliError::Input(format!("{}: {e}", curve_path.display())))?;
    let curve = csv::read_curve(&text)?;
    let verification = Verification::run(&curve, file)?;
    let mut stdout = String::new();
    for (name, r, bound) in verification.entries() {
        match r {
            Ok(report) => {
                let verdict = if report.passes(bound) { "pass" } else { "fail" };
                let _ = writeln!(stdout, "{} bound={bound:e} {verdict}", report_line(name, report));
            }
            Err(e) => {
                let _ = writeln!(stdout, "{name} error: {e}");
            }
        }
    }
    let code = match verification.failure() {
        Some(e) => {
            let _ = writeln!(diag, "error: {e}");
            e.code()
        }
        None => 0,
    };
    Ok(Output { stdout, code })
}

fn constancy_line(name: &str, inv: &AbsoluteInvariant) -> String {
    match (inv.constant, inv.mean()) {
        (Some(c), Some(mean)) => format!(
            "# {name} {} mean={} excluded={}",
            if c { "constant" } else { "varying" },
            num(mean),
            inv.excluded.len()
        ),
        _ => format!("# {name} undefined"),
    }
}

fn cmd_invariants(file: &ProblemFile, count: usize) -> Result<Output, CliError> {
    if count < 4 {
        return Err(CliError::Input(format!("--count must be at least 4, got {count}")));
    }
    let eq = file.classical()?;
    let seq = relative_invariants(&eq, count)?;
    let abs = absolute_invariants(&seq, file.tolerances.invariant())?;
    let mut stdout = format!("# S3 formula: {}\nx,S3,S5,S7,I1,I2\n", seq.formula);
    let (s3, s5, s7) = (seq.get(3).expect("count >= 4"), seq.get(5).expect("count >= 4"), seq.get(7).expect("count >= 4"));
    for i in 0..seq.xs.len() {
        let _ = writeln!(
            stdout,
            "{},{},{},{},{},{}",
            num(seq.xs[i]),
            num(s3[i]),
            num(s5[i]),
            num(s7[i]),
            num(abs.i1.values[i]),
            num(abs.i2.values[i])
        );
    }
    for (name, inv) in [("I1", &abs.i1), ("I2", &abs.i2), ("I3", &abs.i3)] {
        stdout.push_str(&constancy_line(name, inv));
        stdout.push('\n');
    }
    Ok(Output { stdout, code: 0 })
}

fn cmd_reduce(file: &ProblemFile, normal: bool, particular: Option<&str>) -> Result<Output, CliError> {
    let eq = file.classical()?;
    let tol = file.tolerances.numerics()?;
    let mut stdout = String::new();
    if normal {
        let rec = normal_form(&eq, &tol, file.tolerances.invariant())?;
        let _ = writeln!(stdout, "# normal form invariant {}", if rec.constant { "constant" } else { "varying" });
        stdout.push_str("x,omega,xi,I\n");
        for i in 0..rec.xs.len() {
            let _ = writeln!(
                stdout,
                "{},{},{},{}",
                num(rec.xs[i]),
                num(rec.omega[i]),
                num(rec.xi[i]),
                num(rec.invariant[i])
            );
        }
    } else {
        let y1 = parse_expr("particular", particular.expect("clap enforces one mode"))?;
        let red = classical_particular_reduction(&eq, &y1, PARTICULAR_TOL, &tol)?;
        let _ = writeln!(stdout, "# particular y1 = {}", red.y1);
        let _ = writeln!(stdout, "# particular residual {}", num(red.particular_residual));
        let _ = writeln!(stdout, "# separable {}", red.separable);
        stdout.push_str("x,E,Phi1,Phi2\n");
        for i in 0..red.xs.len() {
            let _ = writeln!(
                stdout,
                "{},{},{},{}",
                num(red.xs[i]),
                num(red.e[i]),
                num(red.phi1[i]),
                num(red.phi2[i])
            );
        }
    }
    Ok(Output { stdout, code: 0 })
}
