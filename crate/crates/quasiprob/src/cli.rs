//! Command-line front end.
//!
//! `quasiprob compute` evaluates any distribution by any route onto a grid
//! and writes CSV or JSON; `quasiprob verify` runs the cross-route
//! certification suite. Exit codes: 0 success, 1 failed verification rows,
//! 2 command-line misuse, 3 numeric or infrastructure failure.

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use std::fmt;
use std::path::PathBuf;

use crate::dist::{self, CohenInput, CohenKernel};
use crate::fock::{make_state, StateSpec};
use crate::grid::{DistributionGrid, GridSpec};
use crate::verify::{run_checks, VerifyOptions};

#[derive(Parser)]
#[command(name = "quasiprob", version, about = "Phase-space quasiprobability distributions of a bosonic mode in truncated Fock space")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Evaluate a distribution on a (q, p) grid and write it to a file.
    Compute(ComputeArgs),
    /// Run the cross-route verification suite and report per-check rows.
    Verify(VerifyArgs),
}

#[derive(Args)]
pub struct ComputeArgs {
    /// State specification, e.g. fock:1, coherent:1.0+0.5i, thermal:0.5,
    /// squeezed:0.4,0, cat:1.5,0, vacuum.
    #[arg(long)]
    pub state: String,
    /// Distribution: wigner | kr | q | charfn | cohen.
    #[arg(long)]
    pub dist: String,
    /// Route within the distribution; defaults per distribution
    /// (wigner -> parity, kr -> direct, q -> expectation, charfn -> trace,
    /// cohen -> unity).
    #[arg(long)]
    pub route: Option<String>,
    /// Fock-space truncation.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// Grid as qmin,qmax,nq,pmin,pmax,np.
    #[arg(long, default_value = "-6,6,121,-6,6,121")]
    pub grid: String,
    /// Output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Output format: csv | json.
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Omit the timestamp from JSON metadata, enabling byte-exact reruns.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Fock-space truncation.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// Tolerance applied to the route-equivalence and marginal rows.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Comma-separated state list; state arguments keep their own commas
    /// (e.g. "vacuum,fock:1,squeezed:0.4,0").
    #[arg(long)]
    pub states: Option<String>,
    /// Also write the report as JSON to this path.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Positioned parse failure for state specifications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownKind(String),
    ArityMismatch { kind: &'static str, expected: &'static str, got: usize },
    MalformedNumber(String),
    MalformedComplex(String),
    OutOfRange(String),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: ", self.pos)?;
        match &self.kind {
            ParseErrorKind::UnknownKind(k) => write!(
                f,
                "unknown state kind {k:?}; expected vacuum, fock, coherent, thermal, squeezed or cat"
            ),
            ParseErrorKind::ArityMismatch { kind, expected, got } => {
                write!(f, "{kind} takes {expected} argument(s), got {got}")
            }
            ParseErrorKind::MalformedNumber(s) => write!(f, "malformed number {s:?}"),
            ParseErrorKind::MalformedComplex(s) => {
                write!(f, "malformed complex literal {s:?}; expected forms like 1.0, 0.5i, 1.0+0.5i")
            }
            ParseErrorKind::OutOfRange(m) => write!(f, "out-of-range parameter: {m}"),
        }
    }
}

impl std::error::Error for ParseError {}

/// A token of the cleaned spec plus the original byte position of its start.
struct Cleaned {
    text: String,
    map: Vec<usize>,
}

fn strip_whitespace(original: &str) -> Cleaned {
    let mut text = String::with_capacity(original.len());
    let mut map = Vec::with_capacity(original.len());
    for (i, ch) in original.char_indices() {
        if !ch.is_whitespace() {
            text.push(ch);
            map.push(i);
        }
    }
    Cleaned { text, map }
}

impl Cleaned {
    fn pos(&self, cleaned_idx: usize) -> usize {
        self.map.get(cleaned_idx).copied().unwrap_or_else(|| {
            self.map.last().map(|p| p + 1).unwrap_or(0)
        })
    }
}

fn parse_f64(token: &str, pos: usize) -> Result<f64, ParseError> {
    if token.is_empty() || token.contains(|c: char| !c.is_ascii_digit() && !"+-.".contains(c)) {
        return Err(ParseError { pos, kind: ParseErrorKind::MalformedNumber(token.to_string()) });
    }
    token
        .parse()
        .map_err(|_| ParseError { pos, kind: ParseErrorKind::MalformedNumber(token.to_string()) })
}

fn parse_complex(token: &str, pos: usize) -> Result<Complex64, ParseError> {
    let err = || ParseError { pos, kind: ParseErrorKind::MalformedComplex(token.to_string()) };
    if token.is_empty() {
        return Err(err());
    }
    let bytes = token.as_bytes();
    // Locate a +/- that separates real and imaginary parts (not a leading
    // sign).
    let mut split = None;
    for (i, &b) in bytes.iter().enumerate().skip(1) {
        if b == b'+' || b == b'-' {
            split = Some(i);
        }
    }
    if let Some(i) = split {
        let (re_part, im_part) = (&token[..i], &token[i..]);
        let im_body = im_part.strip_suffix('i').ok_or_else(err)?;
        let im = match im_body {
            "+" => 1.0,
            "-" => -1.0,
            other => parse_f64(other, pos)?,
        };
        Ok(Complex64::new(parse_f64(re_part, pos)?, im))
    } else if let Some(body) = token.strip_suffix('i') {
        let im = match body {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => parse_f64(other, pos)?,
        };
        Ok(Complex64::new(0.0, im))
    } else {
        Ok(Complex64::new(parse_f64(token, pos)?, 0.0))
    }
}

const KIND_WORDS: &[&str] = &["vacuum", "fock", "coherent", "thermal", "squeezed", "cat"];

/// Parse one state specification: `kind ':' arg (',' arg)*`, whitespace- and
/// case-insensitive kinds, complex literals as `a+bi`.
pub fn parse_state_spec(text: &str) -> Result<StateSpec, ParseError> {
    let cleaned = strip_whitespace(text);
    let s = cleaned.text.as_str();
    let (kind_raw, args_str, args_start) = match s.find(':') {
        Some(i) => (&s[..i], &s[i + 1..], i + 1),
        None => (s, "", s.len()),
    };
    let kind = kind_raw.to_ascii_lowercase();
    let args: Vec<(&str, usize)> = if args_str.is_empty() {
        Vec::new()
    } else {
        let mut out = Vec::new();
        let mut start = 0usize;
        for (i, ch) in args_str.char_indices() {
            if ch == ',' {
                out.push((&args_str[start..i], cleaned.pos(args_start + start)));
                start = i + 1;
            }
        }
        out.push((&args_str[start..], cleaned.pos(args_start + start)));
        out
    };
    let arity = |expected: &'static str, ok: bool, kind: &'static str| -> Result<(), ParseError> {
        if ok {
            Ok(())
        } else {
            Err(ParseError {
                pos: cleaned.pos(args_start),
                kind: ParseErrorKind::ArityMismatch { kind, expected, got: args.len() },
            })
        }
    };
    match kind.as_str() {
        "vacuum" => {
            arity("no", args.is_empty(), "vacuum")?;
            Ok(StateSpec::Fock(0))
        }
        "fock" => {
            arity("one integer", args.len() == 1, "fock")?;
            let (tok, pos) = args[0];
            let n: usize = tok.parse().map_err(|_| ParseError {
                pos,
                kind: ParseErrorKind::MalformedNumber(tok.to_string()),
            })?;
            Ok(StateSpec::Fock(n))
        }
        "coherent" => {
            arity("one complex", args.len() == 1, "coherent")?;
            let (tok, pos) = args[0];
            Ok(StateSpec::Coherent(parse_complex(tok, pos)?))
        }
        "thermal" => {
            arity("one real", args.len() == 1, "thermal")?;
            let (tok, pos) = args[0];
            let nbar = parse_f64(tok, pos)?;
            if nbar < 0.0 {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::OutOfRange(format!(
                        "thermal mean occupation must satisfy nbar >= 0, got {nbar}"
                    )),
                });
            }
            Ok(StateSpec::Thermal(nbar))
        }
        "squeezed" => {
            arity("one or two real", args.len() == 1 || args.len() == 2, "squeezed")?;
            let (rtok, rpos) = args[0];
            let r = parse_f64(rtok, rpos)?;
            let phi = if args.len() == 2 {
                let (ptok, ppos) = args[1];
                parse_f64(ptok, ppos)?
            } else {
                0.0
            };
            Ok(StateSpec::Squeezed { r, phi })
        }
        "cat" => {
            arity("one complex plus optional real", args.len() == 1 || args.len() == 2, "cat")?;
            let (atok, apos) = args[0];
            let alpha = parse_complex(atok, apos)?;
            let phase = if args.len() == 2 {
                let (ptok, ppos) = args[1];
                parse_f64(ptok, ppos)?
            } else {
                0.0
            };
            Ok(StateSpec::Cat { alpha, phase })
        }
        other => Err(ParseError {
            pos: cleaned.pos(0),
            kind: ParseErrorKind::UnknownKind(other.to_string()),
        }),
    }
}

/// Split a comma-separated state list, re-attaching fragments that are
/// trailing arguments of the previous spec (they contain no colon and are
/// not a bare kind word), so `squeezed:0.4,0` survives list splitting.
pub fn split_state_list(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for fragment in text.split(',') {
        let trimmed = fragment.trim();
        let is_new_spec = trimmed.contains(':')
            || KIND_WORDS.contains(&trimmed.to_ascii_lowercase().as_str())
            || out.is_empty();
        if is_new_spec {
            out.push(trimmed.to_string());
        } else {
            let last = out.last_mut().expect("non-empty by construction");
            last.push(',');
            last.push_str(trimmed);
        }
    }
    out
}

enum CliFailure {
    Usage(String),
    Numeric(String),
}

const DIST_NAMES: &[&str] = &["wigner", "kr", "q", "charfn", "cohen"];

fn routes_for(dist: &str) -> Option<(&'static [&'static str], &'static str)> {
    match dist {
        "wigner" => Some((&["integral", "parity", "charfn"], "parity")),
        "kr" => Some((&["direct", "charfn", "vacuum", "p"], "direct")),
        "q" => Some((&["expectation"], "expectation")),
        "charfn" => Some((&["trace"], "trace")),
        "cohen" => Some((&["unity", "dirac-pair"], "unity")),
        _ => None,
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Micros, true)
}

fn run_compute(args: &ComputeArgs) -> Result<(), CliFailure> {
    let spec = parse_state_spec(&args.state).map_err(|e| CliFailure::Usage(format!("--state: {e}")))?;
    let grid_spec = GridSpec::parse(&args.grid).map_err(|e| CliFailure::Usage(format!("--grid: {e}")))?;
    let (routes, default_route) = routes_for(args.dist.as_str()).ok_or_else(|| {
        CliFailure::Usage(format!(
            "unknown distribution {:?}; valid: {}",
            args.dist,
            DIST_NAMES.join(", ")
        ))
    })?;
    let route = args.route.clone().unwrap_or_else(|| default_route.to_string());
    if !routes.contains(&route.as_str()) {
        return Err(CliFailure::Usage(format!(
            "unknown route {:?} for --dist {}; valid routes: {}",
            route,
            args.dist,
            routes.join(", ")
        )));
    }
    match args.format.as_str() {
        "csv" | "json" => {}
        other => {
            return Err(CliFailure::Usage(format!(
                "unknown format {other:?}; valid: csv, json"
            )))
        }
    }
    let rho = make_state(&spec, args.dim).map_err(|e| CliFailure::Numeric(e.to_string()))?;
    let numeric = |e: &dyn std::fmt::Display| CliFailure::Numeric(e.to_string());
    let mut grid: DistributionGrid = match (args.dist.as_str(), route.as_str()) {
        ("wigner", "integral") => dist::wigner_integral_grid(&rho, grid_spec).map_err(|e| numeric(&e))?,
        ("wigner", "parity") => dist::wigner_parity_grid(&rho, grid_spec).map_err(|e| numeric(&e))?,
        ("wigner", "charfn") => dist::wigner_from_charfn(&rho, grid_spec).map_err(|e| numeric(&e))?,
        ("kr", "direct") => dist::kr_direct_grid(&rho, grid_spec).map_err(|e| numeric(&e))?,
        ("kr", "charfn") => dist::kr_from_charfn_grid(&rho, grid_spec).map_err(|e| numeric(&e))?,
        ("kr", "vacuum") => dist::kr_vacuum_form_grid(&rho, grid_spec).map_err(|e| numeric(&e))?,
        ("kr", "p") => {
            let p_rep = crate::prep::PRepresentation::for_state(&spec).ok_or_else(|| {
                CliFailure::Numeric(format!(
                    "state {spec} has no regular P representation; the p route applies to vacuum, coherent and thermal states"
                ))
            })?;
            crate::prep::kr_from_p_grid(&p_rep, grid_spec).map_err(|e| numeric(&e))?
        }
        ("q", "expectation") => dist::husimi_grid(&rho, grid_spec).map_err(|e| numeric(&e))?,
        ("charfn", "trace") => dist::charfn_grid(&rho, grid_spec).map_err(|e| numeric(&e))?,
        ("cohen", "unity") => {
            dist::cohen(CohenInput::State(&rho), &CohenKernel::Unity, grid_spec).map_err(|e| numeric(&e))?
        }
        ("cohen", "dirac-pair") => dist::cohen(CohenInput::State(&rho), &CohenKernel::DiracPair, grid_spec)
            .map_err(|e| numeric(&e))?,
        _ => unreachable!("route validated above"),
    };
    grid.metadata.state = spec.to_string();
    grid.metadata.timestamp = if args.no_timestamp { None } else { Some(timestamp()) };
    let body = match args.format.as_str() {
        "csv" => grid.to_csv(),
        _ => grid.to_json(),
    };
    std::fs::write(&args.out, body)
        .map_err(|e| CliFailure::Numeric(format!("writing {}: {e}", args.out.display())))?;
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> i32 {
    let states = match &args.states {
        Some(s) => split_state_list(s),
        None => crate::verify::checks::default_states(),
    };
    let opts = VerifyOptions { dim: args.dim, tol: args.tol, states };
    let report = match run_checks(&opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("verification infrastructure failure: {e}");
            return 3;
        }
    };
    print!("{}", report.to_text());
    if let Some(path) = &args.json {
        if let Err(e) = std::fs::write(path, report.to_json()) {
            eprintln!("writing {}: {e}", path.display());
            return 3;
        }
    }
    if report.pass {
        0
    } else {
        1
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Commands::Compute(args) => match run_compute(&args) {
            Ok(()) => 0,
            Err(CliFailure::Usage(msg)) => {
                eprintln!("error: {msg}");
                2
            }
            Err(CliFailure::Numeric(msg)) => {
                eprintln!("error: {msg}");
                3
            }
        },
        Commands::Verify(args) => run_verify(&args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_simple_specs() {
        assert_eq!(parse_state_spec("fock:3").unwrap(), StateSpec::Fock(3));
        assert_eq!(parse_state_spec("vacuum").unwrap(), StateSpec::Fock(0));
        assert_eq!(
            parse_state_spec("coherent:1.0+0.5i").unwrap(),
            StateSpec::Coherent(Complex64::new(1.0, 0.5))
        );
        assert_eq!(
            parse_state_spec("COHERENT: 1.0 - 0.5i").unwrap(),
            StateSpec::Coherent(Complex64::new(1.0, -0.5))
        );
        assert_eq!(
            parse_state_spec("squeezed:0.4,0").unwrap(),
            StateSpec::Squeezed { r: 0.4, phi: 0.0 }
        );
        assert_eq!(
            parse_state_spec("cat:1.5,0").unwrap(),
            StateSpec::Cat { alpha: Complex64::new(1.5, 0.0), phase: 0.0 }
        );
    }

    #[test]
    fn thermal_out_of_range_names_constraint() {
        let err = parse_state_spec("thermal:-1").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::OutOfRange(_)));
        assert!(err.to_string().contains("nbar >= 0"));
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_state_spec("fock:x").unwrap_err();
        assert_eq!(err.pos, 5);
        let err = parse_state_spec("blah:1").unwrap_err();
        assert_eq!(err.pos, 0);
        let err = parse_state_spec("coherent:1.0?2i").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::MalformedComplex(_) | ParseErrorKind::MalformedNumber(_)));
    }

    #[test]
    fn arity_checked() {
        assert!(matches!(
            parse_state_spec("fock:1,2").unwrap_err().kind,
            ParseErrorKind::ArityMismatch { .. }
        ));
        assert!(matches!(
            parse_state_spec("coherent:").unwrap_err().kind,
            ParseErrorKind::MalformedComplex(_) | ParseErrorKind::ArityMismatch { .. }
        ));
    }

    #[test]
    fn state_list_splitting_keeps_argument_commas() {
        let parts = split_state_list("vacuum,fock:1,fock:2,coherent:1,thermal:0.5,squeezed:0.4,0");
        assert_eq!(
            parts,
            vec!["vacuum", "fock:1", "fock:2", "coherent:1", "thermal:0.5", "squeezed:0.4,0"]
        );
        let parts = split_state_list("cat:1.5,0,vacuum");
        assert_eq!(parts, vec!["cat:1.5,0", "vacuum"]);
    }

    #[test]
    fn complex_literal_forms() {
        assert_eq!(parse_complex("2", 0).unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(parse_complex("-2.5", 0).unwrap(), Complex64::new(-2.5, 0.0));
        assert_eq!(parse_complex("0.3i", 0).unwrap(), Complex64::new(0.0, 0.3));
        assert_eq!(parse_complex("-i", 0).unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("1-i", 0).unwrap(), Complex64::new(1.0, -1.0));
        assert!(parse_complex("1.0+0.5j", 0).is_err());
        assert!(parse_complex("", 0).is_err());
    }
}
