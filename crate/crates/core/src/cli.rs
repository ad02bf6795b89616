//! Command-line front end.
//!
//! Every command recomputes at `K + 4` and compares; a disagreement or an
//! order reaching `2^K` exits with [`Exit::Precision`].
//!
//! EXIT CODES
//!   0   every checked assertion holds
//!   1   an assertion fails
//!   2   precision exhausted, or `K` and `K + 4` disagree
//!   64  usage error
//!   65  `alpha(B)` precondition fails and `--force` was not given

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::phicheck::{phi_report, verify_indn, worked_case, WorkedCase};
use crate::poly::{verify_peq, verify_pp};
use crate::presentation::{build_grading, genthm_diagonal, top_grading};
use crate::queries::{
    annihilator_profile, default_precision, grading_summaries, group_order_from_summary,
    table1_check, xy_nonzero, EchelonCache, Flavor, GroupOrderReport, QueryError, XYReport,
};
use crate::tcbound::{bound_table, to_csv, BoundError, BoundRow};
use crate::twolocal::{Ring2k, MAX_PRECISION};

pub const PRECISION_ENV: &str = "KULENS_PRECISION";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Mismatch = 1,
    Precision = 2,
    Usage = 64,
    Precondition = 65,
}

impl Exit {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Exit::Ok
        } else {
            Exit::Mismatch
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "kulens",
    version,
    about = "Exact 2-local ku-homology of products of mod-2^e lens spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Work mod 2^K (default max(e+4, 2e-1), or $KULENS_PRECISION)
    #[arg(long, global = true, value_name = "K")]
    pub precision: Option<u32>,
    /// Emit JSON
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the report here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Annihilator profile of the bottom class, compared with I_e
    Ann {
        #[arg(long)]
        e: u32,
    },
    /// Run a verification suite
    Verify {
        target: VerifyTarget,
        /// restrict `phi` to one k
        #[arg(long)]
        k: Option<u32>,
        /// restrict `phi` or `orders` to one e
        #[arg(long)]
        e: Option<u32>,
    },
    /// Whether (x-y)^N is nonzero in M_e for a c1/c2 instance
    Nonzero {
        #[arg(long)]
        e: u32,
        #[arg(long)]
        t: u32,
        #[arg(long = "B", value_name = "B")]
        b: u64,
        #[arg(long = "case", value_name = "c1|c2")]
        flavor: Flavor,
        /// run even when alpha(B) misses the hypothesis
        #[arg(long)]
        force: bool,
    },
    /// Table of lower bounds for b(n,e) and TC(L^{2n+1}(2^e))
    Tc {
        #[arg(long)]
        e: u32,
        #[arg(long = "n-max")]
        n_max: u64,
        #[arg(long)]
        csv: bool,
    },
    /// Sparse dump of the relations of G_d
    Present {
        #[arg(long)]
        e: u32,
        #[arg(long)]
        d: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyTarget {
    Table1,
    Phi,
    Identities,
    Orders,
}

struct Run {
    out: String,
    err: String,
}

type Outcome = Result<Exit, (Exit, String)>;

fn usage(msg: impl Into<String>) -> (Exit, String) {
    (Exit::Usage, msg.into())
}

fn query_failure(e: QueryError) -> (Exit, String) {
    let code = match e {
        QueryError::Echelon(_) | QueryError::Unstable { .. } => Exit::Precision,
        QueryError::Hypothesis { .. } => Exit::Precondition,
        _ => Exit::Usage,
    };
    (code, e.to_string())
}

fn bound_failure(e: BoundError) -> (Exit, String) {
    usage(e.to_string())
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("report serializes")
}

/// Base precision for exponent `e`: flag, then environment, then
/// [`default_precision`].
fn base_bits(flag: Option<u32>, e: u32) -> Result<u32, (Exit, String)> {
    let bits = match flag {
        Some(k) => k,
        None => match std::env::var(PRECISION_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| usage(format!("{PRECISION_ENV}={v:?} is not an integer")))?,
            Err(_) => default_precision(e),
        },
    };
    if bits <= e {
        return Err(usage(format!("precision {bits} must exceed e = {e}")));
    }
    if bits + 4 > MAX_PRECISION {
        return Err(usage(format!(
            "precision {bits} leaves no room for the K+4 rerun (max {})",
            MAX_PRECISION - 4
        )));
    }
    Ok(bits)
}

/// Rings at `K` and `K + 4`.
fn rings(flag: Option<u32>, e: u32) -> Result<(Ring2k, Ring2k), (Exit, String)> {
    let k = base_bits(flag, e)?;
    Ok((Ring2k::new(k).unwrap(), Ring2k::new(k + 4).unwrap()))
}

fn stable<T: PartialEq>(
    low: Ring2k,
    high: Ring2k,
    f: impl Fn(Ring2k) -> Result<T, QueryError>,
) -> Result<T, (Exit, String)> {
    let a = f(low).map_err(query_failure)?;
    let b = f(high).map_err(query_failure)?;
    if a == b {
        Ok(a)
    } else {
        Err(query_failure(QueryError::Unstable {
            low: low.bits(),
            high: high.bits(),
        }))
    }
}

#[derive(Serialize)]
struct AnnReport<'a> {
    e: u32,
    profile: &'a [u32],
    #[serde(rename = "matches_Ie")]
    matches_ie: bool,
}

fn cmd_ann(cli: &Cli, e: u32, run: &mut Run) -> Outcome {
    if !(1..=6).contains(&e) {
        return Err(usage(format!("ann needs 1 <= e <= 6 (got {e})")));
    }
    let (low, high) = rings(cli.precision, e)?;
    let prof = stable(low, high, |r| annihilator_profile(e, r))?;
    let matches = prof.matches_ie();
    if cli.json {
        run.out = json(&AnnReport {
            e,
            profile: &prof.profile,
            matches_ie: matches,
        });
    } else {
        let list: Vec<String> = prof.profile.iter().map(u32::to_string).collect();
        run.out = format!(
            "e = {e}\nlog2 order of u^b[0,0], b = 0..{}: {}\nmatches I_e: {matches}",
            prof.profile.len() - 1,
            list.join(" ")
        );
    }
    Ok(Exit::from_pass(matches))
}

#[derive(Serialize)]
struct Table1Line {
    d: usize,
    pass: bool,
}

fn verify_table1(cli: &Cli, run: &mut Run) -> Outcome {
    let (low, high) = rings(cli.precision, 4)?;
    let mut lines = Vec::new();
    for d in 0..=top_grading(4) {
        lines.push(Table1Line {
            d,
            pass: stable(low, high, |r| table1_check(d, r))?,
        });
    }
    let pass = lines.iter().all(|l| l.pass);
    if cli.json {
        run.out = json(&lines);
    } else {
        for l in &lines {
            let _ = writeln!(run.out, "table1 d={:<2} {}", l.d, verdict(l.pass));
        }
        let ok = lines.iter().filter(|l| l.pass).count();
        let _ = write!(run.out, "{ok}/{} lattice checks pass", lines.len());
    }
    if let Some(l) = lines.iter().find(|l| !l.pass) {
        run.err = format!("first failure: d = {}", l.d);
    }
    Ok(Exit::from_pass(pass))
}

#[derive(Serialize)]
struct PhiLine {
    k: u32,
    e: u32,
    pass: bool,
    modulus_log2: u32,
    relations_checked: usize,
    nondegenerate: bool,
}

#[derive(Serialize)]
struct PhiSuite {
    results: Vec<PhiLine>,
    worked_case: Option<WorkedCase>,
}

fn verify_phi_suite(cli: &Cli, k: Option<u32>, e: Option<u32>, run: &mut Run) -> Outcome {
    let ks: Vec<u32> = match k {
        Some(k) if (2..=5).contains(&k) => vec![k],
        Some(k) => return Err(usage(format!("phi tables exist for k = 2..5 (got {k})"))),
        None => (2..=5).collect(),
    };
    let mut results = Vec::new();
    for &k in &ks {
        let es: Vec<u32> = match e {
            Some(e) => vec![e],
            None => (k..=k + 3).collect(),
        };
        for e in es {
            let r = phi_report(k, e).map_err(|err| usage(err.to_string()))?;
            if let Some(&(fam, i, j)) = r.failures.first() {
                if run.err.is_empty() {
                    run.err = format!("first failure: k={k} e={e} family {fam:?} (i,j)=({i},{j})");
                }
            }
            results.push(PhiLine {
                k,
                e,
                pass: r.passes(),
                modulus_log2: r.modulus_log2,
                relations_checked: r.relations_checked,
                nondegenerate: r.nondegenerate,
            });
        }
    }
    let worked = (ks.contains(&3) && e.is_none_or(|e| e == 3)).then(worked_case);
    let pass = results.iter().all(|l| l.pass) && worked.as_ref().is_none_or(|w| w.vanishes);
    if cli.json {
        run.out = json(&PhiSuite {
            results,
            worked_case: worked,
        });
    } else {
        for l in &results {
            let _ = writeln!(
                run.out,
                "phi k={} e={} mod 2^{}: {} relations, nondegenerate {} {}",
                l.k,
                l.e,
                l.modulus_log2,
                l.relations_checked,
                l.nondegenerate,
                verdict(l.pass)
            );
        }
        if let Some(w) = &worked {
            let _ = writeln!(
                run.out,
                "worked case k=3 e=3 (i,j)=(5,4): value {} mod {} vanishes {}",
                w.value, w.modulus, w.vanishes
            );
        }
        run.out.truncate(run.out.trim_end().len());
    }
    Ok(Exit::from_pass(pass))
}

#[derive(Serialize)]
struct IdentityLine {
    name: &'static str,
    range: String,
    pass: bool,
}

fn verify_identities(cli: &Cli, run: &mut Run) -> Outcome {
    let ring = Ring2k::new(MAX_PRECISION).unwrap();
    let first_fail = |f: &dyn Fn(usize) -> bool, lo: usize, hi: usize| (lo..=hi).find(|&n| !f(n));
    let pp = first_fail(&|t| verify_pp(ring, t), 1, 64);
    let peq = first_fail(&|k| verify_peq(ring, k), 1, 64);
    let mut indn = None;
    for e in 2..=7 {
        if !verify_indn(e).map_err(|err| usage(err.to_string()))? {
            indn = Some(e as usize);
            break;
        }
    }
    let lines = [
        IdentityLine {
            name: "pp",
            range: "t = 1..64".into(),
            pass: pp.is_none(),
        },
        IdentityLine {
            name: "peq",
            range: "k = 1..64".into(),
            pass: peq.is_none(),
        },
        IdentityLine {
            name: "indn",
            range: "e = 2..7".into(),
            pass: indn.is_none(),
        },
    ];
    for (line, fail) in lines.iter().zip([pp, peq, indn]) {
        if let (Some(n), true) = (fail, run.err.is_empty()) {
            run.err = format!("first failure: {} at {n}", line.name);
        }
    }
    let pass = lines.iter().all(|l| l.pass);
    if cli.json {
        run.out = json(&lines);
    } else {
        run.out = lines
            .iter()
            .map(|l| format!("{} {}: {}", l.name, l.range, verdict(l.pass)))
            .collect::<Vec<_>>()
            .join("\n");
    }
    Ok(Exit::from_pass(pass))
}

#[derive(Serialize)]
struct OrdersLine {
    e: u32,
    d: usize,
    order_log2: u32,
    diagonal_log2: u32,
    pivot_valuations_match: bool,
}

fn verify_orders(cli: &Cli, e: Option<u32>, run: &mut Run) -> Outcome {
    let es: Vec<u32> = match e {
        Some(e) if (1..=6).contains(&e) => vec![e],
        Some(e) => return Err(usage(format!("orders needs 1 <= e <= 6 (got {e})"))),
        None => (1..=5).collect(),
    };
    let mut pass = true;
    let mut lines = Vec::new();
    for e in es {
        let (low, high) = rings(cli.precision, e)?;
        let top = top_grading(e);
        let summaries = stable(low, high, |r| grading_summaries(e, top, r))?;
        let reports: Vec<GroupOrderReport> = summaries
            .iter()
            .map(group_order_from_summary)
            .collect::<Result<_, _>>()
            .map_err(query_failure)?;
        if let Some(bad) = reports.iter().find(|r| !r.holds()) {
            pass = false;
            if run.err.is_empty() {
                run.err = format!("first failure: e = {} d = {}", bad.e, bad.d);
            }
        }
        lines.extend(reports.into_iter().map(|r| OrdersLine {
            e: r.e,
            d: r.d,
            order_log2: r.order_log2,
            diagonal_log2: r.diagonal_log2,
            pivot_valuations_match: r.pivots_match_diagonal,
        }));
    }
    if cli.json {
        run.out = json(&lines);
    } else {
        let mut by_e: Vec<u32> = lines.iter().map(|l| l.e).collect();
        by_e.dedup();
        for e in by_e {
            let rows: Vec<&OrdersLine> = lines.iter().filter(|l| l.e == e).collect();
            let ok = rows
                .iter()
                .all(|l| l.order_log2 == l.diagonal_log2 && l.pivot_valuations_match);
            let last = rows.last().unwrap();
            let unweighted: u32 = genthm_diagonal(e).iter().sum();
            let _ = writeln!(
                run.out,
                "orders e={e} d=0..{}: log2|G_top| = {} (diagonal {}, unweighted diagonal sum {}) {}",
                last.d,
                last.order_log2,
                last.diagonal_log2,
                unweighted,
                verdict(ok)
            );
        }
        run.out.truncate(run.out.trim_end().len());
    }
    Ok(Exit::from_pass(pass))
}

fn cmd_nonzero(
    cli: &Cli,
    e: u32,
    t: u32,
    b: u64,
    flavor: Flavor,
    force: bool,
    run: &mut Run,
) -> Outcome {
    let (low, high) = rings(cli.precision, e)?;
    let cache = EchelonCache::new();
    let report: XYReport = stable(low, high, |r| xy_nonzero(e, t, b, flavor, r, force, &cache))?;
    if cli.json {
        run.out = json(&report);
    } else {
        run.out = format!(
            "(x-y)^{} in G_{} of M_{e} (n = {}, t = {t}, B = {b}, case {flavor}): {}",
            report.big_n,
            report.d,
            report.n,
            if report.nonzero { "nonzero" } else { "zero" }
        );
        if !report.hypothesis_holds {
            run.out
                .push_str("\nalpha(B) hypothesis fails; no claim to check");
        }
    }
    Ok(Exit::from_pass(report.nonzero || !report.hypothesis_holds))
}

fn cmd_tc(cli: &Cli, e: u32, n_max: u64, csv: bool, run: &mut Run) -> Outcome {
    if cli.json && csv {
        return Err(usage("--json and --csv are exclusive"));
    }
    let table = bound_table(e, n_max).map_err(bound_failure)?;
    let monotone = table.windows(2).all(|w| w[0].b_lower <= w[1].b_lower);
    if cli.json {
        let rows: Vec<BoundRow> = table.iter().map(BoundRow::from).collect();
        run.out = json(&rows);
    } else if csv {
        run.out = to_csv(&table);
        run.out.truncate(run.out.trim_end().len());
    } else {
        for r in &table {
            let w = r
                .witnesses
                .iter()
                .map(|w| format!("(m={}, t={})", w.m, w.t))
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(
                run.out,
                "n={:<4} b >= {:<5} TC(L^{}) >= {:<5} (at most 2b+1) {w}",
                r.n,
                r.b_lower,
                2 * r.n + 1,
                r.tc_lower
            );
        }
        run.out.truncate(run.out.trim_end().len());
    }
    Ok(Exit::from_pass(monotone))
}

fn cmd_present(cli: &Cli, e: u32, d: usize, run: &mut Run) -> Outcome {
    if e == 0 {
        return Err(usage("present needs e >= 1"));
    }
    let (low, _) = rings(cli.precision, e)?;
    let p = build_grading(e, d, low).map_err(|err| usage(err.to_string()))?;
    run.out = p.dump();
    run.out.truncate(run.out.trim_end().len());
    Ok(Exit::Ok)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn dispatch(cli: &Cli, run: &mut Run) -> Outcome {
    match cli.command {
        Command::Ann { e } => cmd_ann(cli, e, run),
        Command::Verify { target, k, e } => match target {
            VerifyTarget::Table1 => verify_table1(cli, run),
            VerifyTarget::Phi => verify_phi_suite(cli, k, e, run),
            VerifyTarget::Identities => verify_identities(cli, run),
            VerifyTarget::Orders => verify_orders(cli, e, run),
        },
        Command::Nonzero {
            e,
            t,
            b,
            flavor,
            force,
        } => cmd_nonzero(cli, e, t, b, flavor, force, run),
        Command::Tc { e, n_max, csv } => cmd_tc(cli, e, n_max, csv, run),
        Command::Present { e, d } => cmd_present(cli, e, d, run),
    }
}

/// Parses `args`, runs the command and writes the report. Returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() {
                Exit::Usage as i32
            } else {
                0
            };
            let text = err.render().to_string();
            let _ = if err.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut run = Run {
        out: String::new(),
        err: String::new(),
    };
    let code = match dispatch(&cli, &mut run) {
        Ok(code) => code,
        Err((code, msg)) => {
            run.err = msg;
            code
        }
    };
    if !run.out.is_empty() {
        run.out.push('\n');
        let written = match &cli.output {
            Some(path) => {
                std::fs::write(path, &run.out).map_err(|e| format!("{}: {e}", path.display()))
            }
            None => stdout
                .write_all(run.out.as_bytes())
                .map_err(|e| e.to_string()),
        };
        if let Err(msg) = written {
            let _ = writeln!(stderr, "kulens: {msg}");
            return Exit::Usage as i32;
        }
    }
    if !run.err.is_empty() {
        let _ = writeln!(stderr, "kulens: {}", run.err);
    }
    code as i32
}
