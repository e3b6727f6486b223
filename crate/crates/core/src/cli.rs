//! Command-line front end.
//!
//! Reports are JSON on the output stream unless `--text` is given. Exit
//! codes: 0 equivalent (or feasible, or verified), 1 not equivalent (or
//! infeasible, or rejected), 2 inconclusive, 3 usage or I/O error, 4
//! numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::catalog;
use crate::constructors::{self, Construction, LocalUnitary, EQUIVALENCE_RESIDUAL};
use crate::error::Error;
use crate::invariants::{self, InvariantId, InvariantReport, ScanOptions, Tolerance, Verdict, Witness};
use crate::io::{self, StateFile};
use crate::linalg::{DEFAULT_GAP, DEFAULT_TOL};
use crate::pairability::{self, Pairability, PairSolution};
use crate::schmidt;
use crate::state::{Bipartition, MultiState, PartyDims, StateKind};

pub const EXIT_EQUIVALENT: i32 = 0;
pub const EXIT_NOT_EQUIVALENT: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Environment variable overriding `--seed` for generated states.
pub const SEED_ENV: &str = "LUEQUIV_SEED";

#[derive(Parser, Debug)]
#[command(name = "luequiv", version, about = "Local unitary equivalence of multi-qudit states")]
struct Cli {
    /// Tolerance for comparing spectra.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Eigenvalues closer than this are treated as degenerate.
    #[arg(long, global = true, default_value_t = DEFAULT_GAP)]
    gap: f64,
    /// Human-readable output instead of JSON.
    #[arg(long, global = true)]
    text: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Invariants at one cut, then an explicit unitary when a constructor applies.
    Check {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        cut: String,
        /// Also write the unitary file when one is found.
        #[arg(long)]
        unitary_out: Option<PathBuf>,
    },
    /// Invariants at every cut, recursing into the reduced states.
    Scan {
        a: PathBuf,
        b: PathBuf,
        /// Keep recursing below failing cuts.
        #[arg(long)]
        full: bool,
    },
    /// Invariant report for one cut.
    Invariants {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        cut: String,
    },
    /// Schmidt coefficients of a pure state.
    Schmidt {
        a: PathBuf,
        #[arg(long)]
        cut: String,
    },
    /// Whether the entanglement across the cut is carried by qudit pairs.
    Pairable {
        a: PathBuf,
        #[arg(long)]
        cut: String,
    },
    /// Write a named or random state.
    Catalog {
        name: CatalogName,
        /// Parties (ghz, w, epr-ancilla) or ring size (ring, ring-pairs).
        #[arg(long)]
        n: Option<usize>,
        /// Local dimension for ghz.
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Party dimensions for random states, e.g. `2,3`.
        #[arg(long)]
        dims: Option<String>,
        #[arg(long, value_enum, default_value_t = KindArg::Pure)]
        kind: KindArg,
        #[arg(long, default_value_t = 1)]
        rank: usize,
        /// Eigenvector order for the counterexample σ, e.g. `0,1,2,3`.
        #[arg(long)]
        assignment: Option<String>,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// Residual of a claimed local unitary.
    Verify {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        unitary: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CatalogName {
    Ghz,
    W,
    EprAncilla,
    Ring,
    RingPairs,
    CexRho,
    CexSigma,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Pure,
    Mixed,
}

/// Outcome of `check`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum CheckVerdict {
    Equivalent {
        #[serde(serialize_with = "serialize_lu")]
        unitary: LocalUnitary,
        residual: f64,
        constructor: &'static str,
    },
    NotEquivalent {
        failing: Vec<String>,
        witnesses: Vec<Witness>,
    },
    Inconclusive {
        reason: String,
    },
}

impl CheckVerdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            CheckVerdict::Equivalent { .. } => EXIT_EQUIVALENT,
            CheckVerdict::NotEquivalent { .. } => EXIT_NOT_EQUIVALENT,
            CheckVerdict::Inconclusive { .. } => EXIT_INCONCLUSIVE,
        }
    }
}

fn serialize_lu<S: serde::Serializer>(lu: &LocalUnitary, ser: S) -> Result<S::Ok, S::Error> {
    io::unitary_to_json(lu).serialize(ser)
}

/// Error tagged with the stage that produced it.
struct Failure {
    stage: &'static str,
    error: Error,
}

type Outcome = Result<i32, Failure>;

trait Stage<T> {
    fn at(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T> Stage<T> for crate::error::Result<T> {
    fn at(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|error| Failure { stage, error })
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::NoConvergence(_) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_EQUIVALENT };
            let _ = write!(out, "{}", e.render());
            return code;
        }
    };
    let tol = Tolerance { spectrum: cli.tol, gap: cli.gap };
    if !(tol.spectrum > 0.0 && tol.gap > 0.0) {
        let _ = writeln!(out, "error: tolerances must be positive");
        return EXIT_USAGE;
    }
    let mut ctx = Context { out, text: cli.text, tol };
    match ctx.dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure { stage, error }) => {
            let code = exit_code_for(&error);
            if ctx.text {
                let _ = writeln!(ctx.out, "error in {stage}: {error}");
            } else {
                let _ = ctx.emit(&json!({ "error": { "stage": stage, "message": error.to_string() } }));
            }
            code
        }
    }
}

struct Context<'a> {
    out: &'a mut dyn Write,
    text: bool,
    tol: Tolerance,
}

fn read(path: &PathBuf) -> Result<MultiState, Failure> {
    io::read_state(path).at("read")
}

fn read_pair(a: &PathBuf, b: &PathBuf) -> Result<(MultiState, MultiState), Failure> {
    let (a, b) = (read(a)?, read(b)?);
    if a.dims() != b.dims() {
        return Err(Failure {
            stage: "read",
            error: Error::DimMismatch(format!("{:?} vs {:?}", a.dims().as_slice(), b.dims().as_slice())),
        });
    }
    Ok((a, b))
}

fn parse_cut(cut: &str, s: &MultiState) -> Result<Bipartition, Failure> {
    Bipartition::parse(cut, s.dims().parties()).at("cut")
}

fn parse_list(text: &str, what: &str) -> crate::error::Result<Vec<usize>> {
    text.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::BadArgs(format!("bad {what} entry `{t}`"))))
        .collect()
}

fn fmt_values(v: &[f64]) -> String {
    // negative zeros from roundoff print as 0
    let parts: Vec<String> = v.iter().map(|&x| format!("{:.10}", if x.abs() < 5e-11 { 0.0 } else { x })).collect();
    format!("[{}]", parts.join(", "))
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
        Verdict::Inconclusive => "inconclusive",
    }
}

impl Context<'_> {
    fn emit(&mut self, v: &impl Serialize) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(v).map_err(|e| Failure { stage: "output", error: Error::Io(e.to_string()) })?;
        self.line(&text)
    }

    fn line(&mut self, s: &str) -> Result<(), Failure> {
        writeln!(self.out, "{s}").map_err(|e| Failure { stage: "output", error: Error::Io(e.to_string()) })
    }

    fn dispatch(&mut self, cmd: Command) -> Outcome {
        match cmd {
            Command::Check { a, b, cut, unitary_out } => self.check(&a, &b, &cut, unitary_out),
            Command::Scan { a, b, full } => self.scan(&a, &b, full),
            Command::Invariants { a, b, cut } => self.invariants(&a, &b, &cut),
            Command::Schmidt { a, cut } => self.schmidt(&a, &cut),
            Command::Pairable { a, cut } => self.pairable(&a, &cut),
            Command::Catalog { name, n, d, seed, dims, kind, rank, assignment, output } => {
                let seed = match std::env::var(SEED_ENV) {
                    Ok(v) => v
                        .trim()
                        .parse()
                        .map_err(|_| Error::BadArgs(format!("{SEED_ENV}={v} is not an integer")))
                        .at("arguments")?,
                    Err(_) => seed,
                };
                let file = build_catalog(name, n, d, seed, dims.as_deref(), kind, rank, assignment.as_deref())
                    .at("catalog")?;
                io::write_state_file(&file, &output).at("write")?;
                if self.text {
                    self.line(&format!("wrote {} to {}", file.name.as_deref().unwrap_or("state"), output.display()))?;
                } else {
                    self.emit(&json!({ "written": output.display().to_string(), "name": file.name, "dims": file.state.dims() }))?;
                }
                Ok(EXIT_EQUIVALENT)
            }
            Command::Verify { a, b, unitary } => self.verify(&a, &b, &unitary),
        }
    }

    fn report_text(&mut self, r: &InvariantReport) -> Result<(), Failure> {
        self.line(&format!("cut {}", r.bipartition))?;
        self.line(&format!("  A1 global spectrum        {}", verdict_word(r.a1_global)))?;
        self.line(&format!("  A2 reduced spectra        {}", verdict_word(r.a2_reduced)))?;
        self.line(&format!("  A3 eigenprojectors        {}", verdict_word(r.a3_projectors)))?;
        self.line(&format!("  A4 partial transposes     {}", verdict_word(r.a4_partial_transpose)))?;
        for w in &r.witnesses {
            self.line(&format!("  witness {} ({})", w.invariant, w.detail))?;
            self.line(&format!("    first  {}", fmt_values(w.first.values())))?;
            self.line(&format!("    second {}", fmt_values(w.second.values())))?;
        }
        Ok(())
    }

    fn invariants(&mut self, a: &PathBuf, b: &PathBuf, cut: &str) -> Outcome {
        let (rho, sigma) = read_pair(a, b)?;
        let bp = parse_cut(cut, &rho)?;
        let report = invariants::check_bipartition(&rho, &sigma, &bp, &self.tol).at("invariants")?;
        if self.text {
            self.report_text(&report)?;
            self.line(&format!("verdict {}", verdict_word(report.verdict)))?;
        } else {
            self.emit(&report)?;
        }
        Ok(if report.verdict == Verdict::Fail { EXIT_NOT_EQUIVALENT } else { EXIT_INCONCLUSIVE })
    }

    fn check(&mut self, a: &PathBuf, b: &PathBuf, cut: &str, unitary_out: Option<PathBuf>) -> Outcome {
        let (rho, sigma) = read_pair(a, b)?;
        let bp = parse_cut(cut, &rho)?;
        let report = invariants::check_bipartition(&rho, &sigma, &bp, &self.tol).at("invariants")?;
        let verdict = decide(&rho, &sigma, &bp, &report, &self.tol).at("constructor")?;
        if let (CheckVerdict::Equivalent { unitary, .. }, Some(path)) = (&verdict, &unitary_out) {
            io::write_unitary(unitary, path).at("write")?;
        }
        if self.text {
            self.report_text(&report)?;
            match &verdict {
                CheckVerdict::Equivalent { residual, constructor, .. } => {
                    self.line(&format!("verdict Equivalent ({constructor} construction, residual {residual:.3e})"))?
                }
                CheckVerdict::NotEquivalent { failing, .. } => {
                    self.line(&format!("verdict NotEquivalent (failing {})", failing.join(", ")))?
                }
                CheckVerdict::Inconclusive { reason } => self.line(&format!("verdict Inconclusive ({reason})"))?,
            }
        } else {
            self.emit(&json!({ "cut": bp.label(), "invariants": report, "result": verdict }))?;
        }
        Ok(verdict.exit_code())
    }

    fn scan(&mut self, a: &PathBuf, b: &PathBuf, full: bool) -> Outcome {
        let (rho, sigma) = read_pair(a, b)?;
        let report = invariants::recursive_scan(&rho, &sigma, &self.tol, ScanOptions { full }).at("scan")?;
        if self.text {
            for node in &report.nodes {
                let labels: Vec<String> = node.parties.iter().map(|p| p.to_string()).collect();
                self.line(&format!("parties {{{}}} A1 {}", labels.join(","), verdict_word(node.a1_global)))?;
                for c in &node.cuts {
                    let failing: Vec<String> = c.report.failing().iter().map(|i| i.to_string()).collect();
                    let extra = if failing.is_empty() { String::new() } else { format!(" [{}]", failing.join(", ")) };
                    self.line(&format!("  {} {}{}", c.cut, verdict_word(c.report.verdict), extra))?;
                }
            }
            self.line(&format!("verdict {}", verdict_word(report.verdict)))?;
        } else {
            self.emit(&report)?;
        }
        Ok(if report.verdict == Verdict::Fail { EXIT_NOT_EQUIVALENT } else { EXIT_INCONCLUSIVE })
    }

    fn schmidt(&mut self, a: &PathBuf, cut: &str) -> Outcome {
        let psi = read(a)?;
        let bp = parse_cut(cut, &psi)?;
        let sd = schmidt::schmidt_decompose(&psi, &bp).at("schmidt")?;
        let entropy = schmidt::entanglement_entropy(&sd);
        if self.text {
            self.line(&format!("cut {bp}"))?;
            self.line(&format!("coefficients {}", fmt_values(sd.coefficients.values())))?;
            self.line(&format!("schmidt number {}", sd.schmidt_number))?;
            self.line(&format!("entropy {entropy:.10} bits"))?;
        } else {
            self.emit(&json!({
                "cut": bp.label(),
                "coefficients": sd.coefficients,
                "schmidt_number": sd.schmidt_number,
                "entropy_bits": entropy,
            }))?;
        }
        Ok(EXIT_EQUIVALENT)
    }

    fn pairable(&mut self, a: &PathBuf, cut: &str) -> Outcome {
        let psi = read(a)?;
        let bp = parse_cut(cut, &psi)?;
        match pairability::pairable(&psi, &bp, &self.tol).at("pairable")? {
            Pairability::Pairable { solution, lu, residual, .. } => {
                let summary = pair_summary(&solution, self.tol.spectrum);
                if self.text {
                    self.line(&format!("cut {bp}: pairable"))?;
                    for (j, a) in solution.a.iter().enumerate() {
                        self.line(&format!("  pair {} spectrum {}", j + 1, fmt_values(a)))?;
                    }
                    self.line(&format!(
                        "  {} maximally entangled pairs, {} entangled pairs",
                        summary["maximally_entangled_pairs"], summary["entangled_pairs"]
                    ))?;
                    self.line(&format!("  residual {residual:.3e}"))?;
                } else {
                    let mut v = summary;
                    v["cut"] = json!(bp.label());
                    v["pairable"] = json!(true);
                    v["unitary"] = io::unitary_to_json(&lu);
                    v["residual"] = json!(residual);
                    self.emit(&v)?;
                }
                Ok(EXIT_EQUIVALENT)
            }
            Pairability::Infeasible { q, explored } => {
                if self.text {
                    self.line(&format!("cut {bp}: not pairable (search exhausted after {explored} nodes)"))?;
                    self.line(&format!("  squared Schmidt coefficients {}", fmt_values(q.values())))?;
                } else {
                    self.emit(&json!({ "cut": bp.label(), "pairable": false, "q": q, "explored": explored }))?;
                }
                Ok(EXIT_NOT_EQUIVALENT)
            }
        }
    }

    fn verify(&mut self, a: &PathBuf, b: &PathBuf, unitary: &PathBuf) -> Outcome {
        let (rho, sigma) = read_pair(a, b)?;
        let lu = io::read_unitary(unitary, rho.dims()).at("read")?;
        let residual = constructors::verify_equivalence(&rho, &sigma, &lu).at("verify")?;
        let ok = residual <= EQUIVALENCE_RESIDUAL;
        if self.text {
            self.line(&format!("residual {residual:.3e} ({})", if ok { "accepted" } else { "rejected" }))?;
        } else {
            self.emit(&json!({ "cut": lu.bipartition.label(), "residual": residual, "accepted": ok }))?;
        }
        Ok(if ok { EXIT_EQUIVALENT } else { EXIT_NOT_EQUIVALENT })
    }
}

fn pair_summary(s: &PairSolution, tol: f64) -> Value {
    json!({
        "pairs": s.a,
        "pair_entropies_bits": s.pair_entropies(),
        "maximally_entangled_pairs": s.maximally_entangled_pairs(tol),
        "entangled_pairs": s.entangled_pairs(tol),
    })
}

/// Invariants first; when they do not refute equivalence, try the matching
/// constructor. A constructor mismatch on mixed states is reported as
/// inconclusive because that condition is only known to be sufficient.
pub fn decide(
    rho: &MultiState,
    sigma: &MultiState,
    bp: &Bipartition,
    report: &InvariantReport,
    tol: &Tolerance,
) -> crate::error::Result<CheckVerdict> {
    if report.verdict == Verdict::Fail {
        return Ok(CheckVerdict::NotEquivalent {
            failing: report.failing().iter().map(InvariantId::to_string).collect(),
            witnesses: report.witnesses.clone(),
        });
    }
    let (built, constructor) = if rho.is_pure() && sigma.is_pure() {
        (constructors::pure_lu_construct(rho, sigma, bp, tol)?, "schmidt")
    } else {
        (constructors::nondegenerate_lu_construct(rho, sigma, bp, tol)?, "nondegenerate")
    };
    Ok(match built {
        Construction::Found { lu, residual } => CheckVerdict::Equivalent { unitary: lu, residual, constructor },
        Construction::NotEquivalent { reason, first, second } if constructor == "schmidt" => {
            CheckVerdict::NotEquivalent {
                failing: vec![InvariantId::A2.to_string()],
                witnesses: vec![Witness { invariant: InvariantId::A2, detail: reason, first, second }],
            }
        }
        Construction::NotEquivalent { reason, .. } => CheckVerdict::Inconclusive {
            reason: format!("invariants pass but {reason}; that condition is not known to be necessary"),
        },
        Construction::Inapplicable { reason } => CheckVerdict::Inconclusive { reason },
    })
}

#[allow(clippy::too_many_arguments)]
fn build_catalog(
    name: CatalogName,
    n: Option<usize>,
    d: usize,
    seed: u64,
    dims: Option<&str>,
    kind: KindArg,
    rank: usize,
    assignment: Option<&str>,
) -> crate::error::Result<StateFile> {
    let need_n = |default: Option<usize>| {
        n.or(default).ok_or_else(|| Error::BadArgs("--n is required for this state".into()))
    };
    let file = match name {
        CatalogName::Ghz => StateFile::named(catalog::ghz(need_n(None)?, d)?, "ghz"),
        CatalogName::W => StateFile::named(catalog::w_state(need_n(None)?)?, "w"),
        CatalogName::EprAncilla => StateFile::named(catalog::epr_with_ancilla(need_n(None)?, None)?, "epr-ancilla"),
        CatalogName::Ring => StateFile::named(catalog::ring_state(need_n(None)?)?.0, "ring"),
        CatalogName::RingPairs => {
            let n = need_n(None)?;
            let sol = PairSolution {
                a: vec![vec![0.5, 0.5]; n],
                assignment: Vec::new(),
            };
            StateFile::named(pairability::build_pair_state(&sol, n + 1, None)?, "ring-pairs")
        }
        CatalogName::CexRho | CatalogName::CexSigma => {
            let order = match assignment {
                Some(text) => {
                    let v = parse_list(text, "assignment")?;
                    <[usize; 4]>::try_from(v.as_slice())
                        .map_err(|_| Error::BadArgs("assignment needs 4 entries".into()))?
                }
                None => catalog::PRINTED_ORDER,
            };
            let (rho, sigma, _) = catalog::counterexample_pair(&order)?;
            match name {
                CatalogName::CexRho => StateFile::named(rho, "counterexample-rho"),
                _ => StateFile::named(sigma, "counterexample-sigma"),
            }
        }
        CatalogName::Random => {
            let dims = dims.ok_or_else(|| Error::BadArgs("--dims is required for random states".into()))?;
            let dims = PartyDims::new(parse_list(dims, "dims")?)?;
            let kind = match kind {
                KindArg::Pure => StateKind::Pure,
                KindArg::Mixed => StateKind::Mixed,
            };
            let mut f = StateFile::named(catalog::random_state(&dims, kind, rank, seed)?, "random");
            f.seed = Some(seed);
            f
        }
    };
    Ok(file)
}
