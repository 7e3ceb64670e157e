//! The `p1f` command line.
//!
//! Every command reads and writes JSON. Exit codes: `0` success or perfect,
//! `1` negative verdict (not perfect, merge dead end, failed reproduction),
//! `2` invalid input or I/O failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::dataset::PaperDataset;
use crate::factorisation::{build_from_even_starter, validate_factorisation, OneFactorisation};
use crate::merge::{merge_starters, MergeError};
use crate::perfection::{verify_perfect_full, verify_perfect_reduced, PerfectnessReport};
use crate::search::{run_search_with_progress, SearchConfig, SearchMode, MAX_EXHAUSTIVE_M};
use crate::starters::{
    enumerate_starters, random_starter, validate_even_starter, validate_starter, EvenStarter, HighLowAssignment, Pair,
    Starter, StarterError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "p1f", version, about = "Build, search for and verify perfect one-factorisations of K_4m")]
pub struct Cli {
    /// Write the JSON result to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Suppress progress and diagnostic messages on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    Full,
    Reduced,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rebuild and verify the embedded K_56 instance.
    Reproduce {
        #[arg(long, value_enum, default_value_t = VerifyMode::Both)]
        mode: VerifyMode,
        /// Also write the dataset and results as JSON files into this directory.
        #[arg(long)]
        export_dir: Option<PathBuf>,
    },
    /// Merge two starters under a high/low assignment into an even starter.
    Merge {
        #[arg(long)]
        s1: PathBuf,
        #[arg(long)]
        s2: PathBuf,
        #[arg(long)]
        assignment: PathBuf,
    },
    /// Build the one-factorisation generated by an even starter.
    Build { even_starter: PathBuf },
    /// Check whether a one-factorisation is perfect.
    Verify {
        factorisation: PathBuf,
        /// Check every pair of factors (default).
        #[arg(long, conflicts_with = "reduced")]
        full: bool,
        /// Check the t rotation-class representatives; needs an embedded even starter.
        #[arg(long)]
        reduced: bool,
    },
    /// Sweep starter pairs and assignments for perfect outcomes.
    #[command(after_help = format!(
        "Exhaustive mode enumerates every ordered starter pair and is limited to m <= {MAX_EXHAUSTIVE_M}."
    ))]
    Search {
        #[arg(long)]
        m: u32,
        #[arg(long, conflicts_with = "seed", required_unless_present = "seed")]
        exhaustive: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Maximum starter pairs to examine in total, including resumed progress.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Checkpoint file; resumed from when it exists.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Stop at the first perfect outcome (default: true for m >= 4).
        #[arg(long)]
        stop_on_hit: Option<bool>,
        /// Log cumulative statistics every this many pairs.
        #[arg(long)]
        report_every: Option<u64>,
    },
    /// Enumerate, sample or check starters.
    Starters {
        #[arg(long, required_unless_present = "check")]
        m: Option<u32>,
        /// Every starter of Z_{2m-1}, in lexicographic order.
        #[arg(long, conflicts_with_all = ["seed", "check"])]
        all: bool,
        /// Stop the enumeration after this many starters.
        #[arg(long, requires = "all")]
        cap: Option<u64>,
        /// One starter drawn with this seed.
        #[arg(long, conflicts_with = "check")]
        seed: Option<u64>,
        /// Validate a starter (odd modulus) or even starter (even modulus) file.
        #[arg(long, conflicts_with = "m")]
        check: Option<PathBuf>,
    },
}

/// Failure of a command: the exit code and a message for standard error.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_INVALID, message: message.into() }
    }

    fn negative(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_NEGATIVE, message: message.into() }
    }
}

struct Io<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
    output: Option<PathBuf>,
    quiet: bool,
}

impl Io<'_> {
    fn emit<T: Serialize>(&mut self, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).expect("results serialize");
        text.push('\n');
        match &self.output {
            Some(path) => fs::write(path, text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display()))),
            None => self.stdout.write_all(text.as_bytes()).map_err(|e| Failure::invalid(e.to_string())),
        }
    }

    fn note(&mut self, line: &str) {
        if !self.quiet {
            let _ = writeln!(self.stderr, "{line}");
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("results serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let mut io = Io { stdout, stderr, output: cli.output, quiet: cli.quiet };
    let result = match cli.command {
        Command::Reproduce { mode, export_dir } => {
            cmd_reproduce_into(&PaperDataset::k56(), mode, export_dir.as_deref(), &mut io)
        }
        Command::Merge { s1, s2, assignment } => cmd_merge(&s1, &s2, &assignment, &mut io),
        Command::Build { even_starter } => cmd_build(&even_starter, &mut io),
        Command::Verify { factorisation, reduced, .. } => {
            cmd_verify(&factorisation, if reduced { VerifyMode::Reduced } else { VerifyMode::Full }, &mut io)
        }
        Command::Search { m, exhaustive, seed, budget, workers, checkpoint, stop_on_hit, report_every } => {
            let mode = match (exhaustive, seed) {
                (true, _) => SearchMode::Exhaustive,
                (false, Some(seed)) => SearchMode::Random { seed },
                (false, None) => unreachable!("clap requires --exhaustive or --seed"),
            };
            let cfg = SearchConfig {
                m,
                mode,
                workers,
                budget,
                checkpoint,
                report_every,
                stop_on_hit: stop_on_hit.unwrap_or(SearchConfig::default_stop_on_hit(m)),
            };
            cmd_search(&cfg, &mut io)
        }
        Command::Starters { m, all, cap, seed, check } => cmd_starters(m, all, cap, seed, check.as_deref(), &mut io),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(io.stderr, "error: {}", f.message);
            f.code
        }
    }
}

/// One named assertion of the reproduction run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diff: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReproduceReport {
    pub ok: bool,
    pub order: u32,
    pub missing_pair: Option<[u32; 2]>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full: Option<PerfectnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced: Option<PerfectnessReport>,
    /// `hamiltonian/checked` for the full verifier, when it ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamilton_pairs: Option<String>,
}

fn emission_diff(expected: &[[u32; 2]], got: &[[u32; 2]]) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..expected.len().max(got.len()) {
        let (e, g) = (expected.get(i), got.get(i));
        let same = match (e, g) {
            (Some(e), Some(g)) => e == g || (e[0] == g[1] && e[1] == g[0]),
            _ => false,
        };
        if !same {
            out.push(format!("position {i}: expected {e:?}, got {g:?}"));
        }
    }
    out
}

fn set_diff(expected: &[Pair], got: &[Pair]) -> Vec<String> {
    let mut out: Vec<String> = expected.iter().filter(|p| !got.contains(p)).map(|p| format!("missing {p}")).collect();
    out.extend(got.iter().filter(|p| !expected.contains(p)).map(|p| format!("unexpected {p}")));
    out
}

/// Merges the dataset's starters, compares with the expected even starter,
/// builds the factorisation and runs the requested verifiers.
pub fn cmd_reproduce(
    dataset: &PaperDataset,
    mode: VerifyMode,
) -> (ReproduceReport, Option<(EvenStarter, OneFactorisation)>) {
    let mut checks = Vec::new();
    let order = 4 * dataset.s1.m();
    let even = match merge_starters(&dataset.s1, &dataset.s2, &dataset.assignment) {
        Ok(e) => e,
        Err(e) => {
            checks.push(Check { name: "merge", passed: false, diff: vec![e.to_string()] });
            let report = ReproduceReport {
                ok: false,
                order,
                missing_pair: None,
                checks,
                full: None,
                reduced: None,
                hamilton_pairs: None,
            };
            return (report, None);
        }
    };
    checks.push(Check { name: "merge", passed: true, diff: vec![] });

    let diff = emission_diff(&dataset.expected_even_starter, even.listing());
    checks.push(Check { name: "emission_order", passed: diff.is_empty(), diff });
    let expected_set: Result<Vec<Pair>, StarterError> =
        dataset.expected_even_starter.iter().map(|&p| Pair::try_from(p)).collect();
    let diff = match expected_set {
        Ok(mut set) => {
            set.sort_unstable();
            set_diff(&set, even.pairs())
        }
        Err(e) => vec![format!("expected listing is malformed: {e}")],
    };
    checks.push(Check { name: "pair_set", passed: diff.is_empty(), diff });
    let (a, b) = even.missing_pair();
    let diff = if (a, b) == dataset.expected_missing {
        vec![]
    } else {
        vec![format!("expected {:?}, got {:?}", dataset.expected_missing, (a, b))]
    };
    checks.push(Check { name: "missing_pair", passed: diff.is_empty(), diff });

    let f = build_from_even_starter(&even);
    let validity = validate_factorisation(&f);
    checks.push(Check {
        name: "factorisation",
        passed: validity.is_valid(),
        diff: validity.violations.iter().map(ToString::to_string).collect(),
    });

    let full = matches!(mode, VerifyMode::Full | VerifyMode::Both).then(|| verify_perfect_full(&f));
    let reduced = matches!(mode, VerifyMode::Reduced | VerifyMode::Both).then(|| verify_perfect_reduced(&f));
    let mut take = |name: &'static str, r: Option<Result<PerfectnessReport, _>>| match r {
        Some(Ok(report)) => {
            checks.push(Check {
                name,
                passed: report.is_perfect,
                diff: report
                    .failures
                    .iter()
                    .map(|x| format!("factors {:?}: cycles {:?}", x.factors, x.cycle_lengths))
                    .collect(),
            });
            Some(report)
        }
        Some(Err(e)) => {
            checks.push(Check { name, passed: false, diff: vec![format!("{e}")] });
            None
        }
        None => None,
    };
    let full = take("perfect_full", full);
    let reduced = take("perfect_reduced", reduced);
    if let (Some(x), Some(y)) = (&full, &reduced) {
        let agree = x.is_perfect == y.is_perfect;
        checks.push(Check {
            name: "verifiers_agree",
            passed: agree,
            diff: if agree { vec![] } else { vec![format!("full={}, reduced={}", x.is_perfect, y.is_perfect)] },
        });
    }

    let hamilton_pairs = full.as_ref().map(|r| format!("{}/{}", r.pairs_checked - r.failures.len(), r.pairs_checked));
    let report = ReproduceReport {
        ok: checks.iter().all(|c| c.passed),
        order: f.order(),
        missing_pair: Some([a, b]),
        checks,
        full,
        reduced,
        hamilton_pairs,
    };
    (report, Some((even, f)))
}

fn cmd_reproduce_into(
    dataset: &PaperDataset,
    mode: VerifyMode,
    export_dir: Option<&Path>,
    io: &mut Io,
) -> Result<i32, Failure> {
    let (report, built) = cmd_reproduce(dataset, mode);
    if let Some(dir) = export_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::invalid(format!("{}: {e}", dir.display())))?;
        write_json(&dir.join("s1.json"), &dataset.s1)?;
        write_json(&dir.join("s2.json"), &dataset.s2)?;
        write_json(&dir.join("assignment.json"), &dataset.assignment)?;
        if let Some((even, f)) = &built {
            write_json(&dir.join("even_starter.json"), even)?;
            write_json(&dir.join("factorisation.json"), f)?;
        }
    }
    io.emit(&report)?;
    if !report.ok {
        for c in report.checks.iter().filter(|c| !c.passed) {
            io.note(&format!("check {} failed: {}", c.name, c.diff.join("; ")));
        }
    }
    Ok(if report.ok { EXIT_OK } else { EXIT_NEGATIVE })
}

fn cmd_merge(s1: &Path, s2: &Path, assignment: &Path, io: &mut Io) -> Result<i32, Failure> {
    let s1: Starter = read_json(s1)?;
    let s2: Starter = read_json(s2)?;
    let assignment: HighLowAssignment = read_json(assignment)?;
    match merge_starters(&s1, &s2, &assignment) {
        Ok(even) => {
            io.emit(&even)?;
            Ok(EXIT_OK)
        }
        Err(e @ (MergeError::DeadEnd { .. } | MergeError::InvalidOutput(_))) => {
            let detail = match &e {
                MergeError::DeadEnd { step } => json!({"error": "dead_end", "step": step}),
                _ => json!({"error": "invalid_even_starter", "reason": e.to_string()}),
            };
            io.emit(&detail)?;
            Err(Failure::negative(e.to_string()))
        }
        Err(e) => Err(Failure::invalid(e.to_string())),
    }
}

fn cmd_build(path: &Path, io: &mut Io) -> Result<i32, Failure> {
    let even: EvenStarter = read_json(path)?;
    io.emit(&build_from_even_starter(&even))?;
    Ok(EXIT_OK)
}

fn cmd_verify(path: &Path, mode: VerifyMode, io: &mut Io) -> Result<i32, Failure> {
    let f: OneFactorisation = read_json(path)?;
    let report = match mode {
        VerifyMode::Reduced => verify_perfect_reduced(&f),
        _ => verify_perfect_full(&f),
    }
    .map_err(|e| Failure::invalid(e.to_string()))?;
    io.emit(&report)?;
    Ok(if report.is_perfect { EXIT_OK } else { EXIT_NEGATIVE })
}

fn cmd_search(cfg: &SearchConfig, io: &mut Io) -> Result<i32, Failure> {
    let mut lines = Vec::new();
    let report = run_search_with_progress(cfg, |stats| {
        lines.push(
            json!({
                "pairs_examined": stats.pairs_examined,
                "incompatible_pairs": stats.incompatible_pairs,
                "assignments_tried": stats.assignments_tried,
                "invalid_even_starters": stats.invalid_even_starters,
                "perfect_hits": stats.perfect_hits.len(),
            })
            .to_string(),
        )
    })
    .map_err(|e| Failure::invalid(e.to_string()))?;
    for line in &lines {
        io.note(line);
    }
    io.emit(&json!({
        "config": cfg,
        "stop": report.stop,
        "next_attempt": report.next_attempt,
        "stats": report.stats,
        "elapsed_ms": report.elapsed.as_millis() as u64,
    }))?;
    Ok(EXIT_OK)
}

fn cmd_starters(
    m: Option<u32>,
    all: bool,
    cap: Option<u64>,
    seed: Option<u64>,
    check: Option<&Path>,
    io: &mut Io,
) -> Result<i32, Failure> {
    if let Some(path) = check {
        #[derive(serde::Deserialize)]
        struct Raw {
            modulus: u32,
            pairs: Vec<Pair>,
        }
        let raw: Raw = read_json(path)?;
        let verdict = if raw.modulus % 2 == 1 {
            validate_starter(&raw.pairs, raw.modulus).map(|s| serde_json::to_value(s).expect("serializes"))
        } else {
            validate_even_starter(&raw.pairs, raw.modulus).map(|e| serde_json::to_value(e).expect("serializes"))
        };
        return match verdict {
            Ok(value) => {
                io.emit(&json!({"valid": true, "value": value}))?;
                Ok(EXIT_OK)
            }
            Err(e) => {
                io.emit(&json!({"valid": false, "reason": e.to_string()}))?;
                Ok(EXIT_NEGATIVE)
            }
        };
    }
    let m = m.expect("clap requires --m without --check");
    if all {
        let mut starters = Vec::new();
        let mut capped = None;
        for s in enumerate_starters(m, cap).map_err(|e| Failure::invalid(e.to_string()))? {
            match s {
                Ok(s) => starters.push(s),
                Err(e) => capped = Some(e),
            }
        }
        io.emit(&starters)?;
        return match capped {
            Some(e) => Err(Failure::negative(e.to_string())),
            None => Ok(EXIT_OK),
        };
    }
    let seed = seed.ok_or_else(|| Failure::invalid("starters needs --all, --seed or --check"))?;
    let s = random_starter(m, seed).map_err(|e| Failure::invalid(e.to_string()))?;
    io.emit(&s)?;
    Ok(EXIT_OK)
}
