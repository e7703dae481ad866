//! Command-line front end: every library operation as a subcommand with
//! file I/O, seeds, budgets, and one JSON report per line on stdout.
//!
//! Exit codes: 0 success, 2 a check ran and found a violation, 3 a budget
//! or search limit prevented a definite answer, 1 usage or input error.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use anticode::chain::{chain_correlation, gap_lower_bound_check};
use anticode::code::{ball, best_ball, BallSpec};
use anticode::compression::{compress_family, compress_full, is_compressed, reduce};
use anticode::configs::{crosscut, find_cross, find_realisation, shearer_check};
use anticode::es::efron_stein;
use anticode::extremal::{
    max_avoiding, max_intersecting, verify_main_theorem, ExtremalResult, Optimality,
    DEFAULT_NODE_BUDGET,
};
use anticode::fileio::{
    read_code, read_config, read_gluing, read_measure, read_realfn, write_code, write_gluing,
    CodeEncoding,
};
use anticode::gluing::{
    boost_measure, expected_glued_measure, glue_code, glue_measure, sample_gluing, BoostAction,
};
use anticode::hoffman::{hoffman_check, hoffman_uniform_check};
use anticode::hyper::{hypercontract_check, HYPER_RHO};
use anticode::noise::noise_stability;
use anticode::pseudo::{
    fairness_estimate, is_global, is_pseudorandom, is_uncapturable, regularity_large_m,
    regularity_small_m, CaptureStatus, CheckStatus, DEFAULT_SCAN_BUDGET,
};
use anticode::report::exit_code;
use anticode::seeds::child_seed;
use anticode::space::agreement;
use anticode::{
    rat, rat_to_f64, Code, Configuration, Error, MarkovChain, Point, ProductMeasure, Rat,
    RealFn, Report, Restriction, Result, Shape, Verdict, TOL,
};
use anticode_cli::criteria;

#[derive(Parser)]
#[command(
    name = "anticode",
    version,
    about = "exact and numeric checks for agreement problems on codes in [m]^n",
    disable_help_subcommand = true
)]
struct Cli {
    /// RNG seed; falls back to ANTICODE_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the canned suites; output is byte-identical for
    /// any value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output mode.
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Json)]
    format: OutputMode,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputMode {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the agreeing ball S_{t,r} in [m]^n (best radius if --r is
    /// omitted) and report its size.
    Ball {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply one compression step T_{i,j} (with --i/--j, 1-based) or the
    /// full compression to a code file.
    Compress {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        i: Option<usize>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a code to its binary image (symbol 1 vs the rest) and report
    /// monotonicity and biased measures.
    Reduce {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regularity decompositions.
    #[command(subcommand)]
    Decompose(DecomposeCmd),
    /// Structural checks on a single code.
    #[command(subcommand)]
    Check(CheckCmd),
    /// Alphabet gluings: sampling, application, measure boosting.
    #[command(subcommand)]
    Glue(GlueCmd),
    /// Noise stability of a code's indicator.
    Stab {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Global hypercontractivity inequality on a code's indicator or a
    /// real-valued function file.
    Hyper {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long = "fn")]
        realfn: Option<PathBuf>,
        #[arg(long, default_value_t = HYPER_RHO)]
        rho: f64,
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long, default_value_t = TOL)]
        tol: f64,
    },
    /// Spectral bound on the measure product of a cross-intersecting pair.
    Hoffman {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "in2")]
        input2: PathBuf,
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long, value_parser = parse_rat)]
        lambda: Option<Rat>,
    },
    /// Shadow of a code: the projection deleting the given 1-based
    /// coordinates.
    Shadow {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        coords: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shearer projection inequality for k-subsets of coordinates.
    Shearer {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Configuration containment and crosscut.
    #[command(subcommand)]
    Config(ConfigCmd),
    /// Exact extremal sizes by branch and bound.
    #[command(subcommand)]
    Extremal(ExtremalCmd),
    /// Markov chain diagnostics.
    #[command(subcommand)]
    Chain(ChainCmd),
    /// Monte-Carlo fairness of the restriction sampler.
    Fairness {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long, value_parser = parse_rat)]
        delta: Rat,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Canned experiment bundles.
    #[command(subcommand)]
    Suite(SuiteCmd),
}

#[derive(Subcommand)]
enum DecomposeCmd {
    /// Energy-increment decomposition for small alphabets.
    Small {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long, value_parser = parse_rat)]
        eps: Rat,
        #[arg(long, value_parser = parse_rat)]
        delta: Rat,
        #[arg(long, default_value_t = DEFAULT_SCAN_BUDGET)]
        budget: usize,
    },
    /// Subcube decomposition into uncapturable pieces for large alphabets.
    Large {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = parse_rat)]
        eps: Rat,
        #[arg(long, default_value_t = 1 << 20)]
        budget: usize,
    },
}

#[derive(Subcommand)]
enum CheckCmd {
    /// Every restriction on at most r coordinates moves the measure by at
    /// most eps.
    Pseudo {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long, value_parser = parse_rat)]
        eps: Rat,
        #[arg(long, default_value_t = DEFAULT_SCAN_BUDGET)]
        budget: usize,
    },
    /// Every restriction on at most r coordinates has measure at most eps.
    Global {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long, value_parser = parse_rat)]
        eps: Rat,
        #[arg(long, default_value_t = DEFAULT_SCAN_BUDGET)]
        budget: usize,
    },
    /// No r dictators cover all but eps of the measure.
    Uncap {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long, value_parser = parse_rat)]
        eps: Rat,
        #[arg(long, default_value_t = 1 << 20)]
        budget: usize,
    },
    /// No pair of members agrees on exactly s coordinates.
    Avoid {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        s: usize,
    },
    /// Every pair of members agrees on at least t coordinates.
    Intersect {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        t: usize,
    },
}

#[derive(Subcommand)]
enum GlueCmd {
    /// Sample a b-balanced gluing [m] -> [k]; with --in also estimate the
    /// expected glued measure over fresh samples.
    Sample {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        b: usize,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a gluing file to a code (and optionally push a measure
    /// forward); verifies the glued measure never drops.
    Apply {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        gluing: PathBuf,
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boost the measure of a code towards mu^eps by alternating gluing
    /// and restriction steps.
    Boost {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        b: usize,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 3)]
        rcap: usize,
        #[arg(long, default_value_t = 16)]
        steps: usize,
        #[arg(long)]
        measure: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ConfigCmd {
    /// Search one or more codes for a realisation of a configuration.
    Find {
        #[arg(long = "in", required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        pair: Option<usize>,
        #[arg(long)]
        matching: Option<String>,
        #[arg(long, default_value_t = 1 << 22)]
        budget: u64,
    },
    /// Minimum subcube-cover crosscut of a configuration.
    Crosscut {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        pair: Option<usize>,
        #[arg(long)]
        matching: Option<String>,
    },
}

#[derive(Subcommand)]
enum ExtremalCmd {
    /// Largest (t-1)-avoiding code in [m]^n.
    Avoid {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: u64,
    },
    /// Largest t-intersecting code in [m]^n.
    Intersect {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: u64,
    },
    /// Compare the extremal avoiding size against the best ball and test
    /// the witness for ball isomorphism.
    Verify {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: u64,
    },
}

#[derive(Subcommand)]
enum ChainCmd {
    /// Absolute spectral gap and floor bound of a single chain: the
    /// disagreement chain on [m], or a resampling / noise chain on --nu.
    Gap {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        nu: Option<Vec<f64>>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = anticode::TOL_GAP)]
        tol: f64,
    },
    /// Exact vs sampled correlation of two codes under the per-coordinate
    /// disagreement chain.
    Correlate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "in2")]
        input2: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

#[derive(Subcommand)]
enum SuiteCmd {
    /// The full acceptance bundle, one report per criterion.
    Acceptance {
        #[arg(long)]
        filter: Option<String>,
    },
    /// A sub-second sanity subset.
    Smoke,
    /// Extremal exploration table over n = t..nmax.
    Explore {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        nmax: u32,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: u64,
    },
}

fn parse_rat(s: &str) -> std::result::Result<Rat, String> {
    s.parse::<Rat>().map_err(|e| format!("expected a rational like 1/4: {e}"))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().ok();
    }
    let seed = cli
        .seed
        .or_else(|| std::env::var("ANTICODE_SEED").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0);
    match dispatch(cli.cmd, seed) {
        Ok(reports) => {
            let verdicts: Vec<Verdict> = reports.iter().map(|r| r.verdict).collect();
            for r in &reports {
                println!("{}", render(r, cli.format));
            }
            std::process::exit(exit_code(&verdicts));
        }
        Err(Error::Budget(msg)) => {
            let r = Report::new("budget", json!({ "error": msg }), Verdict::Unknown);
            println!("{}", render(&r, cli.format));
            std::process::exit(3);
        }
        Err(e) => {
            eprintln!("anticode: {e}");
            std::process::exit(1);
        }
    }
}

fn render(r: &Report, mode: OutputMode) -> String {
    match mode {
        OutputMode::Json => r.to_json_line(),
        OutputMode::Text => {
            let verdict = match r.verdict {
                Verdict::Pass => "PASS",
                Verdict::Finding => "FINDING",
                Verdict::Unknown => "UNKNOWN",
            };
            format!("{verdict} {} {}", r.kind, r.params)
        }
    }
}

// ---------------------------------------------------------------------------
// Shared helpers.

fn load_code(path: &PathBuf) -> Result<Code> {
    read_code(&fs::read_to_string(path)?)
}

fn load_measure_for(path: &Option<PathBuf>, f: &Code) -> Result<ProductMeasure> {
    match path {
        Some(p) => {
            let nu = read_measure(&fs::read_to_string(p)?)?;
            if nu.n() != f.shape().n() || (0..nu.n()).any(|i| nu.radix(i) != f.shape().m()) {
                return Err(Error::ShapeMismatch("measure does not match the code".into()));
            }
            Ok(nu)
        }
        None => Ok(ProductMeasure::uniform(f.shape().m(), f.shape().n())),
    }
}

/// The code in its own file format, list encoding for small families and
/// hex for large ones.
fn code_string(f: &Code) -> String {
    let enc = if f.len() <= 64 { CodeEncoding::List } else { CodeEncoding::Hex };
    write_code(f, enc)
}

fn save(path: &Option<PathBuf>, text: &str) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, text)?;
    }
    Ok(())
}

fn rat_json(r: &Rat) -> Value {
    json!({ "exact": r.to_string(), "float": rat_to_f64(r) })
}

fn point_json(p: &Point) -> Value {
    json!(p.coords().iter().map(|&a| a as u32 + 1).collect::<Vec<u32>>())
}

fn restriction_json(rho: &Restriction) -> Value {
    json!(rho
        .coords()
        .iter()
        .zip(rho.values())
        .map(|(&i, &a)| json!([i + 1, a as u32 + 1]))
        .collect::<Vec<Value>>())
}

fn optimality_str(o: Optimality) -> &'static str {
    match o {
        Optimality::Exact => "exact",
        Optimality::LowerBound => "lower-bound",
        Optimality::Unknown => "unknown",
    }
}

fn status_verdict(s: CheckStatus) -> Verdict {
    match s {
        CheckStatus::Holds => Verdict::Pass,
        CheckStatus::Fails => Verdict::Finding,
        CheckStatus::Unknown => Verdict::Unknown,
    }
}

/// First pair of members whose agreement satisfies the predicate.
fn agreement_witness(f: &Code, pred: impl Fn(usize) -> bool) -> Option<(Point, Point)> {
    let pts: Vec<Point> = f.members().collect();
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            if pred(agreement(a, b)) {
                return Some((a.clone(), b.clone()));
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Dispatch.

fn dispatch(cmd: Cmd, seed: u64) -> Result<Vec<Report>> {
    match cmd {
        Cmd::Ball { m, n, t, r, out } => {
            let shape = Shape::new(m, n)?;
            let (radius, code) = match r {
                Some(r) => (r, ball(&shape, BallSpec { t, r })?),
                None => {
                    let (r, _, c) = best_ball(&shape, t)?;
                    (r, c)
                }
            };
            let text = code_string(&code);
            save(&out, &text)?;
            Ok(vec![Report::new(
                "ball",
                json!({ "m": m, "n": n, "t": t, "r": radius }),
                Verdict::Pass,
            )
            .with_witness(json!({ "size": code.len(), "code": text }))])
        }

        Cmd::Compress { input, i, j, out } => {
            let f = load_code(&input)?;
            let g = match (i, j) {
                (Some(i), Some(j)) => {
                    if i == 0 || i > f.shape().n() {
                        return Err(Error::Invalid(format!("coordinate {i} out of range")));
                    }
                    if j < 2 || j > f.shape().m() {
                        return Err(Error::Invalid(format!(
                            "symbol {j} not compressible (need 2..=m)"
                        )));
                    }
                    compress_family(&f, i - 1, (j - 1) as u16)
                }
                (None, None) => compress_full(&f),
                _ => return Err(Error::Invalid("pass both --i and --j or neither".into())),
            };
            let text = code_string(&g);
            save(&out, &text)?;
            Ok(vec![Report::new(
                "compress",
                json!({ "in": input.display().to_string(), "i": i, "j": j }),
                Verdict::Pass,
            )
            .with_witness(json!({
                "size_before": f.len(),
                "size_after": g.len(),
                "compressed": is_compressed(&g),
                "code": text,
            }))])
        }

        Cmd::Reduce { input, out } => {
            let f = load_code(&input)?;
            let b = reduce(&f);
            let shape2 = Shape::new(2, b.n() as u32)?;
            let image = Code::from_ranks(&shape2, b.members().map(|w| b.rank(&w)));
            let text = code_string(&image);
            save(&out, &text)?;
            Ok(vec![Report::new(
                "reduce",
                json!({ "in": input.display().to_string(), "m": f.shape().m() }),
                Verdict::Pass,
            )
            .with_witness(json!({
                "input_compressed": is_compressed(&f),
                "size": b.len(),
                "monotone": b.is_monotone(),
                "mu_at_inv_m": rat_json(&b.mu_p(&rat(1, f.shape().m()))?),
                "mu_at_half": rat_json(&b.mu_p(&rat(1, 2))?),
                "mu_before": rat_json(&f.measure()),
                "code": text,
            }))])
        }

        Cmd::Decompose(sub) => decompose(sub),
        Cmd::Check(sub) => check(sub),
        Cmd::Glue(sub) => glue(sub, seed),

        Cmd::Stab { input, rho, measure } => {
            let f = load_code(&input)?;
            let nu = load_measure_for(&measure, &f)?;
            let ind = RealFn::indicator(&f);
            let stab = noise_stability(&ind, &nu, rho)?;
            let mean = rat_to_f64(&f.measure_under(&nu)?);
            Ok(vec![Report::new(
                "stab",
                json!({ "in": input.display().to_string(), "rho": rho }),
                Verdict::Pass,
            )
            .with_witness(json!({ "stability": stab, "mean": mean }))])
        }

        Cmd::Hyper { input, realfn, rho, measure, tol } => {
            let (f, label) = match (&input, &realfn) {
                (Some(p), None) => (RealFn::indicator(&load_code(p)?), p.display().to_string()),
                (None, Some(p)) => (read_realfn(&fs::read_to_string(p)?)?, p.display().to_string()),
                _ => {
                    return Err(Error::Invalid("pass exactly one of --in or --fn".into()));
                }
            };
            let nu = match &measure {
                Some(p) => read_measure(&fs::read_to_string(p)?)?,
                None => {
                    let radices = f.shape().radices();
                    ProductMeasure::new(
                        radices
                            .iter()
                            .map(|&m| vec![rat(1, m as usize); m as usize])
                            .collect(),
                    )?
                }
            };
            let chk = hypercontract_check(&f, &nu, rho, tol)?;
            let verdict = if chk.holds { Verdict::Pass } else { Verdict::Finding };
            Ok(vec![Report::new(
                "hyper",
                json!({ "in": label, "rho": rho, "tol": tol }),
                verdict,
            )
            .with_witness(json!({
                "lhs": chk.lhs,
                "rhs": chk.rhs,
                "in_regime": chk.in_regime,
            }))])
        }

        Cmd::Hoffman { input, input2, measure, lambda } => {
            let g1 = load_code(&input)?;
            let g2 = load_code(&input2)?;
            let chk = match &measure {
                None => hoffman_uniform_check(&g1, &g2)?,
                Some(_) => {
                    let nu = load_measure_for(&measure, &g1)?;
                    let lam = match lambda {
                        Some(l) => l,
                        None => (0..nu.n())
                            .flat_map(|i| nu.factor(i).to_vec())
                            .max()
                            .expect("measure has entries"),
                    };
                    hoffman_check(&nu, &g1, &g2, &lam)?
                }
            };
            let verdict = if chk.holds { Verdict::Pass } else { Verdict::Finding };
            Ok(vec![Report::new(
                "hoffman",
                json!({
                    "in": input.display().to_string(),
                    "in2": input2.display().to_string(),
                }),
                verdict,
            )
            .with_witness(json!({
                "premise_ok": chk.premise_ok,
                "cross_intersecting": chk.cross_intersecting,
                "lhs": rat_json(&chk.lhs),
                "rhs": rat_json(&chk.rhs),
                "tight": chk.tight,
            }))])
        }

        Cmd::Shadow { input, coords, out } => {
            let f = load_code(&input)?;
            if coords.iter().any(|&c| c == 0 || c > f.shape().n()) {
                return Err(Error::Invalid("shadow coordinates are 1-based".into()));
            }
            let zero: Vec<usize> = coords.iter().map(|&c| c - 1).collect();
            let g = anticode::configs::shadow_set(&f, &zero)?;
            let text = code_string(&g);
            save(&out, &text)?;
            Ok(vec![Report::new(
                "shadow",
                json!({ "in": input.display().to_string(), "coords": coords }),
                Verdict::Pass,
            )
            .with_witness(json!({
                "size_before": f.len(),
                "size_after": g.len(),
                "code": text,
            }))])
        }

        Cmd::Shearer { input, k } => {
            let f = load_code(&input)?;
            let chk = shearer_check(&f, k)?;
            let verdict = if chk.holds { Verdict::Pass } else { Verdict::Finding };
            Ok(vec![Report::new(
                "shearer",
                json!({ "in": input.display().to_string(), "k": k }),
                verdict,
            )
            .with_witness(json!({
                "lhs": chk.lhs.to_string(),
                "rhs": chk.rhs.to_string(),
                "exponent": chk.exponent.to_string(),
                "equality": chk.equality,
            }))])
        }

        Cmd::Config(sub) => config(sub),
        Cmd::Extremal(sub) => extremal(sub),
        Cmd::Chain(sub) => chain(sub, seed),

        Cmd::Fairness { input, s, delta, trials } => {
            let f = load_code(&input)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rep = fairness_estimate(&f, s, &delta, trials, &mut rng)?;
            Ok(vec![Report::new(
                "fairness",
                json!({
                    "in": input.display().to_string(),
                    "s": s,
                    "delta": delta.to_string(),
                    "trials": trials,
                    "seed": seed,
                }),
                Verdict::Pass,
            )
            .with_witness(json!({
                "successes": rep.successes,
                "estimate": rep.estimate,
                "mu": rat_json(&rep.mu),
                "threshold": rat_json(&rep.threshold),
            }))])
        }

        Cmd::Suite(sub) => suite(sub, seed),
    }
}

fn decompose(sub: DecomposeCmd) -> Result<Vec<Report>> {
    match sub {
        DecomposeCmd::Small { input, r, eps, delta, budget } => {
            let f = load_code(&input)?;
            let d = regularity_small_m(&f, r, &eps, &delta, budget)?;
            let ledger: Vec<Value> = d
                .ledger
                .iter()
                .map(|step| {
                    json!({
                        "coords": step.t_coords.iter().map(|&c| c + 1).collect::<Vec<usize>>(),
                        "energy": rat_json(&step.energy),
                        "bad_mass": rat_json(&step.bad_mass),
                    })
                })
                .collect();
            Ok(vec![Report::new(
                "decompose.small",
                json!({
                    "in": input.display().to_string(),
                    "r": r,
                    "eps": eps.to_string(),
                    "delta": delta.to_string(),
                }),
                Verdict::Pass,
            )
            .with_witness(json!({
                "coords": d.t_coords.iter().map(|&c| c + 1).collect::<Vec<usize>>(),
                "bad_patterns": d.bad_patterns.len(),
                "bad_mass": rat_json(&d.bad_mass),
                "iterations": d.iterations,
                "step_cap": d.step_cap,
            }))
            .with_ledger(json!(ledger))])
        }
        DecomposeCmd::Large { input, r, k, eps, budget } => {
            let f = load_code(&input)?;
            let d = regularity_large_m(&f, r, k, &eps, budget)?;
            let mut any_unknown = false;
            let pieces: Vec<Value> = d
                .pieces
                .iter()
                .map(|p| {
                    let status = match p.capture.status {
                        CaptureStatus::Capturable => "capturable",
                        CaptureStatus::Uncapturable => "uncapturable",
                        CaptureStatus::Unknown => {
                            any_unknown = true;
                            "unknown"
                        }
                    };
                    json!({
                        "restriction": restriction_json(&p.restriction),
                        "threshold": rat_json(&p.threshold),
                        "status": status,
                    })
                })
                .collect();
            let verdict = if any_unknown {
                Verdict::Unknown
            } else if d.leftover_ok && d.size_ok {
                Verdict::Pass
            } else {
                Verdict::Finding
            };
            Ok(vec![Report::new(
                "decompose.large",
                json!({
                    "in": input.display().to_string(),
                    "r": r,
                    "k": k,
                    "eps": eps.to_string(),
                }),
                verdict,
            )
            .with_witness(json!({
                "pieces": d.pieces.len(),
                "leftover": rat_json(&d.leftover),
                "leftover_bound": rat_json(&d.leftover_bound),
                "leftover_ok": d.leftover_ok,
                "size_ok": d.size_ok,
            }))
            .with_ledger(json!(pieces))])
        }
    }
}

fn check(sub: CheckCmd) -> Result<Vec<Report>> {
    match sub {
        CheckCmd::Pseudo { input, r, eps, budget } => {
            let f = load_code(&input)?;
            let scan = is_pseudorandom(&f, r, &eps, budget);
            Ok(vec![scan_report("check.pseudo", &input, r, &eps, &scan)])
        }
        CheckCmd::Global { input, r, eps, budget } => {
            let f = load_code(&input)?;
            let scan = is_global(&f, r, &eps, budget);
            Ok(vec![scan_report("check.global", &input, r, &eps, &scan)])
        }
        CheckCmd::Uncap { input, r, eps, budget } => {
            let f = load_code(&input)?;
            let cap = is_uncapturable(&f, r, &eps, budget);
            let verdict = match cap.status {
                CaptureStatus::Uncapturable => Verdict::Pass,
                CaptureStatus::Capturable => Verdict::Finding,
                CaptureStatus::Unknown => Verdict::Unknown,
            };
            let witness = match (&cap.dictators, &cap.leftover) {
                (Some(dicts), Some(leftover)) if cap.status == CaptureStatus::Capturable => {
                    json!({
                        "dictators": dicts
                            .iter()
                            .map(|&(i, a)| json!([i + 1, a as u32 + 1]))
                            .collect::<Vec<Value>>(),
                        "leftover": rat_json(leftover),
                    })
                }
                _ => json!({ "exhaustive": cap.exhaustive }),
            };
            Ok(vec![Report::new(
                "check.uncap",
                json!({
                    "in": input.display().to_string(),
                    "r": r,
                    "eps": eps.to_string(),
                }),
                verdict,
            )
            .with_witness(witness)])
        }
        CheckCmd::Avoid { input, s } => {
            let f = load_code(&input)?;
            let witness = agreement_witness(&f, |a| a == s);
            Ok(vec![pair_report("check.avoid", &input, json!({ "s": s }), witness)])
        }
        CheckCmd::Intersect { input, t } => {
            let f = load_code(&input)?;
            let witness = agreement_witness(&f, |a| a < t);
            Ok(vec![pair_report("check.intersect", &input, json!({ "t": t }), witness)])
        }
    }
}

fn scan_report(
    kind: &str,
    input: &PathBuf,
    r: usize,
    eps: &Rat,
    scan: &anticode::pseudo::ScanReport,
) -> Report {
    let verdict = status_verdict(scan.status);
    let witness = match &scan.witness {
        Some((rho, mass)) => json!({
            "restriction": restriction_json(rho),
            "mass": rat_json(mass),
        }),
        None => Value::Null,
    };
    Report::new(
        kind,
        json!({ "in": input.display().to_string(), "r": r, "eps": eps.to_string() }),
        verdict,
    )
    .with_witness(witness)
    .with_ledger(json!({ "restrictions_checked": scan.restrictions_checked }))
}

fn pair_report(kind: &str, input: &PathBuf, mut params: Value, pair: Option<(Point, Point)>) -> Report {
    let obj = params.as_object_mut().expect("params is an object");
    obj.insert("in".into(), json!(input.display().to_string()));
    match pair {
        Some((a, b)) => {
            let agr = agreement(&a, &b);
            Report::new(kind, params, Verdict::Finding).with_witness(json!({
                "x": point_json(&a),
                "y": point_json(&b),
                "agreement": agr,
            }))
        }
        None => Report::new(kind, params, Verdict::Pass),
    }
}

fn config(sub: ConfigCmd) -> Result<Vec<Report>> {
    match sub {
        ConfigCmd::Find { input, config, pair, matching, budget } => {
            let cfg = load_configuration(&config, &pair, &matching)?;
            let fams: Vec<Code> = input.iter().map(load_code).collect::<Result<_>>()?;
            let outcome = if fams.len() == 1 {
                find_realisation(&fams[0], &cfg, budget)?
            } else if fams.len() == cfg.size() {
                let refs: Vec<&Code> = fams.iter().collect();
                find_cross(&refs, &cfg, budget)?
            } else {
                return Err(Error::Invalid(format!(
                    "pass one code or one per edge ({} edges)",
                    cfg.size()
                )));
            };
            let verdict = match (&outcome.found, outcome.exhaustive) {
                (Some(_), _) => Verdict::Pass,
                (None, true) => Verdict::Finding,
                (None, false) => Verdict::Unknown,
            };
            let witness = match &outcome.found {
                Some(real) => json!({
                    "coords": real.phi.iter().map(|&c| c + 1).collect::<Vec<usize>>(),
                    "points": real.points.iter().map(point_json).collect::<Vec<Value>>(),
                }),
                None => Value::Null,
            };
            Ok(vec![Report::new(
                "config.find",
                json!({
                    "in": input.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
                    "edges": cfg.size(),
                    "ell": cfg.ell(),
                    "budget": budget,
                }),
                verdict,
            )
            .with_witness(witness)
            .with_ledger(json!({ "nodes": outcome.nodes, "exhaustive": outcome.exhaustive }))])
        }
        ConfigCmd::Crosscut { config, pair, matching } => {
            let cfg = load_configuration(&config, &pair, &matching)?;
            let sigma = crosscut(&cfg)?;
            Ok(vec![Report::new(
                "config.crosscut",
                json!({ "edges": cfg.size(), "ell": cfg.ell() }),
                Verdict::Pass,
            )
            .with_witness(json!({ "sigma": sigma, "flat": cfg.is_flat() }))])
        }
    }
}

fn load_configuration(
    file: &Option<PathBuf>,
    pair: &Option<usize>,
    matching: &Option<String>,
) -> Result<Configuration> {
    match (file, pair, matching) {
        (Some(p), None, None) => read_config(&fs::read_to_string(p)?),
        (None, Some(s), None) => Ok(Configuration::pair_config(*s)),
        (None, None, Some(hl)) => {
            let parts: Vec<&str> = hl.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Invalid("--matching takes h,l".into()));
            }
            let h = parts[0].trim().parse::<usize>().map_err(|e| {
                Error::Invalid(format!("bad matching size: {e}"))
            })?;
            let l = parts[1].trim().parse::<usize>().map_err(|e| {
                Error::Invalid(format!("bad matching arity: {e}"))
            })?;
            Ok(Configuration::matching(h, l))
        }
        _ => Err(Error::Invalid(
            "pass exactly one of --config, --pair, --matching".into(),
        )),
    }
}

fn extremal_report(kind: &str, m: u32, n: u32, t: usize, out: &ExtremalResult) -> Result<Report> {
    let shape = Shape::new(m, n)?;
    let (ball_r, ball_size, _) = best_ball(&shape, t)?;
    let verdict = match out.optimality {
        Optimality::Exact => Verdict::Pass,
        _ => Verdict::Unknown,
    };
    Ok(Report::new(kind, json!({ "m": m, "n": n, "t": t }), verdict).with_witness(json!({
        "size": out.size,
        "optimality": optimality_str(out.optimality),
        "nodes": out.nodes,
        "ball_radius": ball_r,
        "ball_size": ball_size,
        "code": code_string(&out.witness),
    })))
}

fn extremal(sub: ExtremalCmd) -> Result<Vec<Report>> {
    match sub {
        ExtremalCmd::Avoid { m, n, t, budget } => {
            let out = max_avoiding(m, n, t, budget)?;
            Ok(vec![extremal_report("extremal.avoid", m, n, t, &out)?])
        }
        ExtremalCmd::Intersect { m, n, t, budget } => {
            let out = max_intersecting(m, n, t, budget)?;
            Ok(vec![extremal_report("extremal.intersect", m, n, t, &out)?])
        }
        ExtremalCmd::Verify { m, n, t, budget } => {
            let rep = verify_main_theorem(m, n, t, budget)?;
            let verdict = if rep.brute.optimality != Optimality::Exact {
                Verdict::Unknown
            } else if rep.equal && rep.witness_isomorphic_to_ball == Some(true) {
                Verdict::Pass
            } else {
                Verdict::Finding
            };
            Ok(vec![Report::new(
                "extremal.verify",
                json!({ "m": m, "n": n, "t": t }),
                verdict,
            )
            .with_witness(json!({
                "size": rep.brute.size,
                "optimality": optimality_str(rep.brute.optimality),
                "ball_size": rep.ball_size,
                "ball_radius": rep.ball_radius,
                "equal": rep.equal,
                "isomorphic_to_ball": rep.witness_isomorphic_to_ball,
                "excess_over_ball": rep.excess_over_ball,
                "code": code_string(&rep.brute.witness),
            }))])
        }
    }
}

fn chain(sub: ChainCmd, seed: u64) -> Result<Vec<Report>> {
    match sub {
        ChainCmd::Gap { m, nu, rho, tol } => {
            let (chain, params) = match (&nu, m) {
                (Some(nu), None) => {
                    let c = match rho {
                        Some(r) => MarkovChain::noise(r, nu),
                        None => MarkovChain::resample_off_diagonal(nu)?,
                    };
                    (c, json!({ "nu": nu, "rho": rho }))
                }
                (None, Some(m)) => {
                    (MarkovChain::disagreement(m), json!({ "m": m }))
                }
                _ => {
                    return Err(Error::Invalid("pass exactly one of --m or --nu".into()));
                }
            };
            let chk = gap_lower_bound_check(&chain, tol)?;
            let verdict = if chk.holds { Verdict::Pass } else { Verdict::Finding };
            Ok(vec![Report::new("chain.gap", params, verdict).with_witness(json!({
                "gap": chk.gap,
                "floor": chk.alpha,
            }))])
        }
        ChainCmd::Correlate { input, input2, trials } => {
            let f = load_code(&input)?;
            let g = load_code(&input2)?;
            let chains: Vec<MarkovChain> =
                (0..f.shape().n()).map(|_| MarkovChain::disagreement(f.shape().m())).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let corr = chain_correlation(&chains, &f, &g, trials, &mut rng)?;
            Ok(vec![Report::new(
                "chain.correlate",
                json!({
                    "in": input.display().to_string(),
                    "in2": input2.display().to_string(),
                    "trials": trials,
                    "seed": seed,
                }),
                Verdict::Pass,
            )
            .with_witness(json!({ "exact": corr.exact, "estimate": corr.estimate }))])
        }
    }
}

fn glue(sub: GlueCmd, seed: u64) -> Result<Vec<Report>> {
    match sub {
        GlueCmd::Sample { m, k, n, b, input, trials, out } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pi = sample_gluing(m, k, n, b, &mut rng)?;
            let text = write_gluing(&pi);
            save(&out, &text)?;
            let mut witness = json!({
                "gluing": text,
                "balanced": pi.is_balanced(b),
                "fibers": (0..n).map(|i| pi.fiber_sizes(i)).collect::<Vec<_>>(),
            });
            let mut verdict = Verdict::Pass;
            if let Some(path) = &input {
                let f = load_code(path)?;
                if f.shape().m() != m || f.shape().n() != n {
                    return Err(Error::ShapeMismatch("--in does not match --m/--n".into()));
                }
                let nu = ProductMeasure::uniform(m, n);
                let est = expected_glued_measure(&f, &nu, k, trials, &mut rng)?;
                if !est.all_at_least_nu_f {
                    verdict = Verdict::Finding;
                }
                let obj = witness.as_object_mut().expect("witness is an object");
                obj.insert("mean".into(), json!(est.mean));
                obj.insert("stderr".into(), json!(est.stderr));
                obj.insert("nu_f".into(), rat_json(&est.nu_f));
                obj.insert("sample_min".into(), rat_json(&est.sample_min));
                obj.insert("all_at_least_nu_f".into(), json!(est.all_at_least_nu_f));
            }
            Ok(vec![Report::new(
                "glue.sample",
                json!({ "m": m, "k": k, "n": n, "b": b, "trials": trials, "seed": seed }),
                verdict,
            )
            .with_witness(witness)])
        }
        GlueCmd::Apply { input, gluing, measure, out } => {
            let f = load_code(&input)?;
            let pi = read_gluing(&fs::read_to_string(&gluing)?)?;
            let nu = load_measure_for(&measure, &f)?;
            let glued = glue_code(&f, &pi)?;
            let pushed = glue_measure(&nu, &pi)?;
            let before = f.measure_under(&nu)?;
            let after = glued.measure_under(&pushed)?;
            let text = code_string(&glued);
            save(&out, &text)?;
            let verdict = if after >= before { Verdict::Pass } else { Verdict::Finding };
            Ok(vec![Report::new(
                "glue.apply",
                json!({
                    "in": input.display().to_string(),
                    "gluing": gluing.display().to_string(),
                }),
                verdict,
            )
            .with_witness(json!({
                "size_before": f.len(),
                "size_after": glued.len(),
                "mu_before": rat_json(&before),
                "mu_after": rat_json(&after),
                "code": text,
            }))])
        }
        GlueCmd::Boost { input, eps, b, c, rcap, steps, measure } => {
            let f = load_code(&input)?;
            let nu = load_measure_for(&measure, &f)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rep = boost_measure(&f, &nu, eps, b, c, rcap, steps, &mut rng)?;
            let ledger: Vec<Value> = rep
                .ledger
                .iter()
                .map(|e| {
                    let action = match &e.action {
                        BoostAction::Restrict { coords } => json!({
                            "restrict": coords.iter().map(|&c| c + 1).collect::<Vec<usize>>(),
                        }),
                        BoostAction::Glue { to } => json!({ "glue_to": to }),
                    };
                    json!({
                        "action": action,
                        "alphabet": e.alphabet,
                        "mu": rat_json(&e.mu),
                        "r_used": e.r_used,
                    })
                })
                .collect();
            let verdict = if rep.reached {
                Verdict::Pass
            } else if rep.cap_hit {
                Verdict::Unknown
            } else {
                Verdict::Finding
            };
            Ok(vec![Report::new(
                "glue.boost",
                json!({
                    "in": input.display().to_string(),
                    "eps": eps,
                    "b": b,
                    "c": c,
                    "rcap": rcap,
                    "steps": steps,
                    "seed": seed,
                }),
                verdict,
            )
            .with_witness(json!({
                "final_mu": rat_json(&rep.final_mu),
                "reassembled_mu": rat_json(&rep.reassembled_mu),
                "target": rep.target,
                "reached": rep.reached,
                "cap_hit": rep.cap_hit,
                "in_regime": rep.premise_in_regime,
                "restriction": restriction_json(&rep.restriction),
            }))
            .with_ledger(json!(ledger))])
        }
    }
}

fn suite(sub: SuiteCmd, seed: u64) -> Result<Vec<Report>> {
    match sub {
        SuiteCmd::Acceptance { filter } => {
            let numbers = criteria::matching_numbers(filter.as_deref());
            if numbers.is_empty() {
                return Err(Error::Invalid(format!(
                    "no acceptance criterion matches {:?}",
                    filter.unwrap_or_default()
                )));
            }
            let bin = std::env::current_exe()?;
            let mut reports = Vec::new();
            for number in numbers {
                let out = criteria::run(number, &bin).expect("registry numbers are valid");
                let verdict = if out.pass { Verdict::Pass } else { Verdict::Finding };
                reports.push(
                    Report::new(
                        "acceptance",
                        json!({ "criterion": out.number, "slug": out.slug }),
                        verdict,
                    )
                    .with_ledger(json!(out.detail)),
                );
            }
            Ok(reports)
        }
        SuiteCmd::Smoke => smoke(seed),
        SuiteCmd::Explore { m, nmax, t, budget } => {
            let mut reports = Vec::new();
            for n in t.max(1) as u32..=nmax {
                if Shape::new(m, n).is_err() {
                    break;
                }
                let shape = Shape::new(m, n)?;
                let (ball_r, ball_size, _) = best_ball(&shape, t)?;
                let avoid = max_avoiding(m, n, t, budget)?;
                let intersect = max_intersecting(m, n, t, budget)?;
                let verdict = if avoid.optimality == Optimality::Exact
                    && intersect.optimality == Optimality::Exact
                {
                    Verdict::Pass
                } else {
                    Verdict::Unknown
                };
                reports.push(
                    Report::new("explore", json!({ "m": m, "n": n, "t": t }), verdict)
                        .with_witness(json!({
                            "ball_radius": ball_r,
                            "ball_size": ball_size,
                            "max_avoiding": avoid.size,
                            "avoiding_optimality": optimality_str(avoid.optimality),
                            "max_intersecting": intersect.size,
                            "intersecting_optimality": optimality_str(intersect.optimality),
                        })),
                );
            }
            Ok(reports)
        }
    }
}

/// Sub-second sanity bundle: one report per area, all seeded.
fn smoke(seed: u64) -> Result<Vec<Report>> {
    let mut reports = Vec::new();
    let mut push = |kind: &str, ok: bool, witness: Value| {
        let verdict = if ok { Verdict::Pass } else { Verdict::Finding };
        reports.push(
            Report::new(format!("smoke.{kind}"), json!({ "seed": seed }), verdict)
                .with_witness(witness),
        );
    };

    let s33 = Shape::new(3, 3)?;
    let s34 = Shape::new(3, 4)?;
    let sizes = [
        ball(&s33, BallSpec { t: 1, r: 0 })?.len(),
        ball(&s33, BallSpec { t: 1, r: 1 })?.len(),
        ball(&s34, BallSpec { t: 2, r: 0 })?.len(),
        ball(&s34, BallSpec { t: 2, r: 1 })?.len(),
    ];
    push("ball", sizes == [9, 7, 9, 9], json!({ "sizes": sizes }));

    let rep = verify_main_theorem(3, 2, 1, DEFAULT_NODE_BUDGET)?;
    push(
        "extremal",
        rep.equal && rep.brute.size == 3,
        json!({ "size": rep.brute.size, "ball_size": rep.ball_size }),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, 1));
    let mut comp_ok = true;
    let mut reduce_ok = true;
    for _ in 0..25 {
        let density = rng.random_range(0.2..0.8);
        let f = Code::from_fn(&s33, |_| rng.random_bool(density));
        for i in 0..3 {
            for j in 1..3u16 {
                comp_ok &= compress_family(&f, i, j).len() == f.len();
            }
        }
        let c = compress_full(&f);
        comp_ok &= is_compressed(&c);
        let b = reduce(&c);
        reduce_ok &= b.is_monotone() && b.mu_p(&rat(1, 3))? >= f.measure();
    }
    push("compression", comp_ok, json!({ "families": 25 }));
    push("reduction", reduce_ok, json!({ "families": 25 }));

    let mut es_ok = true;
    let nu = ProductMeasure::uniform(3, 3);
    for _ in 0..10 {
        let f = RealFn::from_fn(s33.mixed(), |_| rng.random_range(-1.0..1.0));
        let dec = efron_stein(&f, &nu, 3)?;
        es_ok &= dec.parseval_gap(&f) <= TOL && dec.orthogonality_defect() <= TOL;
    }
    push("efron-stein", es_ok, json!({ "functions": 10 }));

    let mut gap_ok = true;
    for m in 3..=5usize {
        let gap = MarkovChain::disagreement(m).abs_spectral_gap()?;
        gap_ok &= (gap - (1.0 - 1.0 / (m as f64 - 1.0))).abs() <= TOL;
    }
    push("spectral", gap_ok, json!({ "alphabets": [3, 4, 5] }));

    let s32 = Shape::new(3, 2)?;
    let d = Code::dictator(&s32, 0, 0);
    let chk = hoffman_uniform_check(&d, &d)?;
    push(
        "hoffman",
        chk.holds && chk.tight && chk.lhs == rat(1, 9),
        json!({ "lhs": rat_json(&chk.lhs), "rhs": rat_json(&chk.rhs) }),
    );

    let s23 = Shape::new(2, 3)?;
    let mut shearer_ok = true;
    for _ in 0..20 {
        let density = rng.random_range(0.2..0.8);
        let f = Code::from_fn(&s23, |_| rng.random_bool(density));
        shearer_ok &= shearer_check(&f, 2)?.holds;
    }
    push("shearer", shearer_ok, json!({ "families": 20 }));

    let mut cut_ok = true;
    for h in 1..=3usize {
        for ell in 1..=2usize {
            cut_ok &= crosscut(&Configuration::matching(h, ell))? == h;
        }
    }
    push("crosscut", cut_ok, json!({ "max_size": 3 }));

    let s43 = Shape::new(4, 3)?;
    let uniform4 = ProductMeasure::uniform(4, 3);
    let mut glue_ok = true;
    for i in 0..20u64 {
        let mut grng = ChaCha8Rng::seed_from_u64(child_seed(seed, 100 + i));
        let density = grng.random_range(0.2..0.8);
        let f = Code::from_fn(&s43, |_| grng.random_bool(density));
        let pi = sample_gluing(4, 2, 3, 1, &mut grng)?;
        let glued = glue_code(&f, &pi)?;
        let pushed = glue_measure(&uniform4, &pi)?;
        glue_ok &= glued.measure_under(&pushed)? >= f.measure_under(&uniform4)?;
    }
    push("gluing", glue_ok, json!({ "samples": 20 }));

    let f = ball(&s33, BallSpec { t: 1, r: 1 })?;
    let scan = is_pseudorandom(&f, 1, &rat(1, 2), DEFAULT_SCAN_BUDGET);
    push(
        "pseudorandom",
        scan.status == CheckStatus::Holds,
        json!({ "restrictions": scan.restrictions_checked }),
    );

    Ok(reports)
}
