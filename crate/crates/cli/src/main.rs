//! `symred` — verify symmetry models, compute reductions, classify strata,
//! sample reduced surfaces and locate relative equilibria.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 solver non-convergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use symred_core::catalog::{self, Params};
use symred_core::model::{self, HamiltonianSpec, VerifiedModel};
use symred_core::orbitmap;
use symred_core::poly::Polynomial;
use symred_core::releq;
use symred_core::report::{self, Provenance};
use symred_core::semialg::{self, ChartSpec, SampleOptions};
use symred_core::strata;

use num_bigint::BigInt;
use num_rational::BigRational;

#[derive(Parser)]
#[command(name = "symred", version, about = "Reduction by invariants for symmetric Hamiltonian systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List catalog models and their parameter schemas.
    List,
    /// Verify a model: invariance, relations, Casimirs, inequalities.
    Verify {
        /// `catalog:key[?p=v,...]` or a model document path.
        model: String,
        /// Override the rewrite degree bound.
        #[arg(long)]
        degree_bound: Option<u32>,
    },
    /// Write a catalog model document (byte-stable).
    Export {
        model: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the reduced phase space and induced structure documents.
    Reduce {
        model: String,
        /// Momentum levels (torus models) or momentum vector (SO(3) models).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mu: Vec<String>,
        #[arg(long)]
        degree_bound: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank reports at a point, or a principal-stratum estimate over samples.
    Strata(StrataArgs),
    /// Sample a reduced surface as a triangle mesh.
    Sample {
        model: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mu: Vec<String>,
        /// Chart `i,j->k`: free invariant indices i,j; k solved by bisection.
        #[arg(long)]
        chart: String,
        /// Window `a:b,c:d` for the two free coordin+ates.
        #[arg(long, allow_hyphen_values = true)]
        window: String,
        /// Cells per axis.
        #[arg(long, default_value_t = 32)]
        grid: usize,
        /// Scan range `lo:hi` of the solved coordinate.
        #[arg(long, default_value = "-2:2", allow_hyphen_values = true)]
        solved_range: String,
        /// Scan subdivisions along the solved axis.
        #[arg(long, default_value_t = 256)]
        scan: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find relative equilibria with formal-stability verdicts.
    Releq {
        model: String,
        /// Hamiltonian expression, or a path to a file holding one.
        #[arg(long)]
        ham: String,
        /// Interpret the Hamiltonian in invariant coordinates and solve the
        /// reduced stationary problem.
        #[arg(long)]
        reduced: bool,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mu: Vec<String>,
        #[arg(long, default_value_t = 64)]
        seeds: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct StrataArgs {
    model: String,
    /// Phase point `c1,...,cn`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "random")]
    point: Option<Vec<f64>>,
    /// Number of standard-normal samples for the principal-stratum estimate.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Marker error: a model failed verification (exit code 1, not 2).
#[derive(Debug)]
struct VerificationFailed(String);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "model `{}` failed verification", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<VerificationFailed>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::List => {
            for entry in catalog::list() {
                if entry.params.is_empty() {
                    println!("{:<22} {}", entry.key, entry.summary);
                } else {
                    println!("{:<22} {}  [params: {}]", entry.key, entry.summary, entry.params);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { model, degree_bound } => verify(&model, degree_bound),
        Command::Export { model, out } => {
            let loaded = load_model_arg(&model, None)?;
            let text = model::export_model(loaded.verified.model());
            emit(out.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Reduce { model, mu, degree_bound, out } => {
            let loaded = load_model_arg(&model, degree_bound)?;
            let m = &loaded.verified;
            let mu = parse_mu(&mu)?;
            let bound = degree_bound.unwrap_or(m.degree_bound);
            let reduced = semialg::reduced_space(m, &mu, bound)?;
            let induced = orbitmap::induced_structure(m, bound)?;
            let prov = loaded
                .provenance()
                .with_option("mu", join_rationals(&mu))
                .with_option("degree_bound", bound);
            let space_doc = report::reduced_space_document(&reduced, m, prov.clone());
            let induced_doc = report::induced_structure_document(&induced, prov);
            match out {
                Some(path) => {
                    std::fs::write(&path, &space_doc)
                        .with_context(|| format!("writing {}", path.display()))?;
                    let induced_path = sibling(&path, "induced");
                    std::fs::write(&induced_path, &induced_doc)
                        .with_context(|| format!("writing {}", induced_path.display()))?;
                    println!("wrote {} and {}", path.display(), induced_path.display());
                }
                None => {
                    print!("{space_doc}");
                    print!("{induced_doc}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Strata(args) => strata_cmd(args),
        Command::Sample {
            model,
            mu,
            chart,
            window,
            grid,
            solved_range,
            scan,
            out,
        } => {
            let loaded = load_model_arg(&model, None)?;
            let m = &loaded.verified;
            let mu = parse_mu(&mu)?;
            let reduced = semialg::reduced_space(m, &mu, m.degree_bound)?;
            let set = reduced.set();
            let chart_spec = parse_chart(&chart)?;
            let opts = SampleOptions {
                window: parse_window(&window)?,
                grid,
                solved_range: parse_range(&solved_range)?,
                scan,
            };
            let mesh = semialg::sample_surface(&set, chart_spec, &opts)?;
            if mesh.empty_flagged {
                eprintln!("note: chart relation never changed sign in the window; empty mesh");
            }
            let prov = loaded
                .provenance()
                .with_option("mu", join_rationals(&mu))
                .with_option("chart", &chart)
                .with_option("window", &window)
                .with_option("grid", grid)
                .with_option("solved_range", &solved_range)
                .with_option("scan", scan);
            emit(out.as_deref(), &report::mesh_document(&mesh, prov))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Releq {
            model,
            ham,
            reduced,
            mu,
            seeds,
            tol,
            seed,
            max_iter,
            out,
        } => releq_cmd(&model, &ham, reduced, &mu, seeds, tol, seed, max_iter, out),
    }
}

fn verify(model_arg: &str, degree_bound: Option<u32>) -> Result<ExitCode> {
    let (raw, _, _) = load_raw_model(model_arg, degree_bound)?;
    match VerifiedModel::new(raw) {
        Ok(verified) => {
            print!("{}", report::verification_text(verified.report()));
            Ok(ExitCode::SUCCESS)
        }
        Err(failure) => {
            print!("{}", report::verification_text(&failure.report));
            Ok(ExitCode::from(1))
        }
    }
}

fn strata_cmd(args: StrataArgs) -> Result<ExitCode> {
    let loaded = load_model_arg(&args.model, None)?;
    let m = &loaded.verified;
    if let Some(point) = &args.point {
        let rep = strata::rank_report(m, point, args.tol)?;
        let sig = rep.signature();
        print!("{}", report::rank_table(std::slice::from_ref(&rep)));
        println!(
            "signature: ({}, {})  image: {:?}",
            sig.rank_drho, sig.rank_orbit_span, rep.image
        );
        let prov = loaded
            .provenance()
            .with_option("point", format!("{point:?}"))
            .with_option("tol", args.tol);
        if let Some(out) = &args.out {
            std::fs::write(out, report::rank_report_document(&[rep], prov))?;
        }
        return Ok(ExitCode::SUCCESS);
    }
    let samples = args
        .random
        .ok_or_else(|| anyhow!("provide --point or --random"))?;
    let est = strata::principal_stratum_estimate(m, samples, args.seed, args.tol)?;
    match est.max_signature {
        Some(sig) => println!(
            "principal stratum estimate over {} samples: signature ({}, {}), frequency {}",
            est.samples, sig.rank_drho, sig.rank_orbit_span, est.frequency
        ),
        None => println!("no samples requested; empty estimate"),
    }
    let prov = loaded
        .provenance()
        .with_option("random", samples)
        .with_option("seed", args.seed)
        .with_option("tol", args.tol);
    if let Some(out) = &args.out {
        std::fs::write(out, report::principal_stratum_document(&est, prov))?;
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn releq_cmd(
    model_arg: &str,
    ham: &str,
    reduced_mode: bool,
    mu: &[String],
    seeds: usize,
    tol: f64,
    seed: u64,
    max_iter: usize,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let loaded = load_model_arg(model_arg, None)?;
    let m = &loaded.verified;
    let mu_rat = parse_mu(mu)?;
    let opts = releq::SolverOptions {
        seeds,
        tol,
        seed,
        max_iter,
    };
    let ham_text = read_expression(ham)?;
    let outcome = if reduced_mode {
        let names = m.invariant_names();
        let h = Polynomial::parse(&ham_text, &names)?;
        let reduced = semialg::reduced_space(m, &mu_rat, m.degree_bound)?;
        releq::find_reduced_stationary(m, &h, &reduced, &opts)?
    } else {
        let names = m.variable_names();
        let h = HamiltonianSpec::full_space(m, Polynomial::parse(&ham_text, &names)?)?;
        let mu_f: Vec<f64> = mu_rat
            .iter()
            .map(symred_core::poisson::rational_to_f64)
            .collect();
        let mut outcome = releq::find_relative_equilibria(m, &h, &mu_f, &opts)?;
        for res in &mut outcome.results {
            releq::assess_stability(m, &h, res, 1e-9)?;
        }
        outcome
    };
    for note in &outcome.notes {
        eprintln!("note: {note}");
    }
    for (i, r) in outcome.results.iter().enumerate() {
        println!(
            "equilibrium {i}: image {:?}, residual {:.3e}, stability {}",
            r.image,
            r.residual,
            r.stability.label()
        );
    }
    let prov = loaded
        .provenance()
        .with_option("ham", ham)
        .with_option("reduced", reduced_mode)
        .with_option("mu", join_rationals(&mu_rat))
        .with_option("seeds", seeds)
        .with_option("tol", tol)
        .with_option("seed", seed)
        .with_option("max_iter", max_iter);
    if let Some(path) = &out {
        std::fs::write(path, report::equilibria_document(&outcome, prov))?;
    }
    if outcome.results.is_empty() {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// Argument parsing helpers
// ---------------------------------------------------------------------------

struct LoadedModel {
    verified: VerifiedModel,
    source: String,
    params: Params,
}

impl LoadedModel {
    fn provenance(&self) -> Provenance {
        Provenance::new(self.source.clone()).with_params(&self.params)
    }
}

fn load_raw_model(
    arg: &str,
    degree_bound: Option<u32>,
) -> Result<(model::SymmetryModel, String, Params)> {
    if let Some(rest) = arg.strip_prefix("catalog:") {
        let (key, params) = match rest.split_once('?') {
            Some((key, query)) => (key, parse_params(query)?),
            None => (rest, Params::new()),
        };
        let verified = catalog::catalog_model(key, &params)?;
        let mut raw = verified.model().clone();
        if let Some(b) = degree_bound {
            raw.degree_bound = b;
        }
        return Ok((raw, key.to_string(), params));
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading model {arg}"))?;
    let mut raw = model::load_model(&text)?;
    if let Some(b) = degree_bound {
        raw.degree_bound = b;
    }
    Ok((raw, arg.to_string(), Params::new()))
}

fn load_model_arg(arg: &str, degree_bound: Option<u32>) -> Result<LoadedModel> {
    let (raw, source, params) = load_raw_model(arg, degree_bound)?;
    match VerifiedModel::new(raw) {
        Ok(verified) => Ok(LoadedModel {
            verified,
            source,
            params,
        }),
        Err(failure) => {
            print!("{}", report::verification_text(&failure.report));
            Err(VerificationFailed(source).into())
        }
    }
}

fn parse_params(query: &str) -> Result<Params> {
    let mut params = Params::new();
    for pair in query.split(',') {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("parameter `{pair}` is not key=value"))?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(params)
}

/// Rational from `p/q`, integer, or decimal text.
fn parse_level(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let digits = format!("{int_part}{frac_part}");
        let numer: BigInt = digits
            .parse()
            .map_err(|_| anyhow!("not a number: `{s}`"))?;
        let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
        return Ok(BigRational::new(numer, denom));
    }
    if let Some((n, d)) = s.split_once('/') {
        let numer: BigInt = n.trim().parse().map_err(|_| anyhow!("bad rational `{s}`"))?;
        let denom: BigInt = d.trim().parse().map_err(|_| anyhow!("bad rational `{s}`"))?;
        if denom == BigInt::from(0) {
            bail!("zero denominator in `{s}`");
        }
        return Ok(BigRational::new(numer, denom));
    }
    let numer: BigInt = s.parse().map_err(|_| anyhow!("not a number: `{s}`"))?;
    Ok(BigRational::from_integer(numer))
}

fn parse_mu(mu: &[String]) -> Result<Vec<BigRational>> {
    if mu.is_empty() {
        bail!("--mu is required");
    }
    mu.iter().map(|s| parse_level(s)).collect()
}

fn join_rationals(mu: &[BigRational]) -> String {
    mu.iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// `i,j->k` with zero-based invariant indices.
fn parse_chart(s: &str) -> Result<ChartSpec> {
    let (free, solved) = s
        .split_once("->")
        .ok_or_else(|| anyhow!("chart must look like i,j->k"))?;
    let (i, j) = free
        .split_once(',')
        .ok_or_else(|| anyhow!("chart must look like i,j->k"))?;
    Ok(ChartSpec {
        free: (i.trim().parse()?, j.trim().parse()?),
        solved: solved.trim().parse()?,
    })
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| anyhow!("range must look like lo:hi"))?;
    Ok((lo.trim().parse()?, hi.trim().parse()?))
}

fn parse_window(s: &str) -> Result<((f64, f64), (f64, f64))> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("window must look like a:b,c:d"))?;
    Ok((parse_range(a)?, parse_range(b)?))
}

fn read_expression(arg: &str) -> Result<String> {
    let path = Path::new(arg);
    if path.exists() && path.is_file() {
        Ok(std::fs::read_to_string(path)?.trim().to_string())
    } else {
        Ok(arg.to_string())
    }
}

fn sibling(path: &Path, tag: &str) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => path.with_extension(format!("{tag}.{ext}")),
        None => path.with_extension(tag),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
