//! Command-line surface: theta builds, singularity reports, the full proof
//! pipeline, representation info, and the lattice catalog.
//!
//! Exit codes: 0 success, 2 invalid configuration or parse error, 3 build
//! failure, 4 contradiction detected by a report.

use std::fs;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::congruence::{self, Status};
use crate::expansion::{read_sfex, write_sfex, FourierExpansion};
use crate::theta::{self, EvenLattice};
use crate::weylrep::{self, HighestWeight};
use crate::{Error, Result};

#[derive(Parser)]
#[command(name = "sigform", about = "Siegel theta expansions and mod p^m singularity checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a theta expansion and write it in SFEX form
    Theta(ThetaArgs),
    /// Classify an SFEX expansion mod p^m
    Report(ReportArgs),
    /// Run the full verification pipeline on an SFEX expansion
    Pipeline(ReportArgs),
    /// Inspect an integral highest-weight representation
    Rep(RepArgs),
    /// List the built-in lattice catalog
    Catalog {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct ThetaArgs {
    /// Catalog name (A1, A2, D4, E8)
    #[arg(long, conflicts_with = "gram_file")]
    lattice: Option<String>,
    /// File with the doubled Gram matrix: m, then m(m+1)/2 upper-triangle entries
    #[arg(long)]
    gram_file: Option<PathBuf>,
    #[arg(long)]
    degree: usize,
    #[arg(long)]
    bound: i64,
    /// Harmonic weight lambda_0 (comma-separated); omitted = scalar theta
    #[arg(long)]
    weight: Option<String>,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// SFEX input file
    #[arg(long = "in", short = 'i')]
    input: PathBuf,
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 1)]
    m: u32,
    /// Error on coefficient lookups outside the stored keys
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RepArgs {
    /// Highest weight, comma-separated non-increasing (e.g. "2,1,0")
    #[arg(long)]
    weight: String,
    #[arg(long)]
    json: bool,
}

fn parse_gram_text(text: &str) -> Result<Vec<Vec<i64>>> {
    let mut it = text.split_whitespace().map(|t| {
        t.parse::<i64>().map_err(|_| Error::Parse(format!("bad integer {:?}", t)))
    });
    let m = it.next().ok_or_else(|| Error::Parse("empty gram file".into()))?? as usize;
    let mut g = vec![vec![0i64; m]; m];
    for i in 0..m {
        for j in i..m {
            let v = it.next().ok_or_else(|| Error::Parse("truncated gram file".into()))??;
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    Ok(g)
}

fn cache_dir() -> PathBuf {
    match std::env::var_os("SIGFORM_CACHE_DIR") {
        Some(d) => PathBuf::from(d),
        None => std::env::temp_dir().join("sigform-cache"),
    }
}

fn cache_key(l: &EvenLattice, degree: usize, bound: i64, weight: Option<&str>) -> String {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    l.gram.hash(&mut h);
    degree.hash(&mut h);
    bound.hash(&mut h);
    weight.hash(&mut h);
    format!("theta-{:016x}.sfex", h.finish())
}

fn build_theta(args: &ThetaArgs) -> Result<FourierExpansion> {
    let lattice = match (&args.lattice, &args.gram_file) {
        (Some(name), None) => theta::catalog(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)?;
            EvenLattice::new(parse_gram_text(&text)?, None)?
        }
        _ => return Err(Error::Invalid("exactly one of --lattice / --gram-file required".into())),
    };
    let cache = cache_dir().join(cache_key(&lattice, args.degree, args.bound, args.weight.as_deref()));
    if let Ok(text) = fs::read_to_string(&cache) {
        if let Ok(f) = read_sfex(&text) {
            return Ok(f);
        }
    }
    let f = match &args.weight {
        None => theta::scalar_theta(&lattice, args.degree, args.bound)?,
        Some(w) => {
            let lambda0 = HighestWeight::parse(w)?;
            match theta::find_harmonic_with_nonzero_theta(&lattice, args.degree, &lambda0, args.bound)? {
                Some((_, f)) => f,
                None => {
                    return Err(Error::Invalid(format!(
                        "no harmonic of weight {} with nonzero theta for this lattice",
                        w
                    )))
                }
            }
        }
    };
    let _ = fs::create_dir_all(cache_dir());
    if let Ok(text) = write_sfex(&f) {
        let _ = fs::write(&cache, text);
    }
    Ok(f)
}

fn cmd_theta(args: &ThetaArgs) -> Result<i32> {
    let f = build_theta(args)?;
    let text = write_sfex(&f)?;
    match &args.out {
        Some(path) => fs::write(path, &text)?,
        None => print!("{}", text),
    }
    let nonzero = f.coeffs.values().filter(|v| v.iter().any(|x| !num_traits::Zero::is_zero(x))).count();
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "degree": f.n,
                "ell": f.ell(),
                "classes": f.coeffs.len(),
                "nonzeroClasses": nonzero,
                "traceBound": f.trace_bound,
            })
        );
    } else {
        eprintln!(
            "degree {} | ell {} | {} classes within trace bound {} ({} nonzero)",
            f.n,
            f.ell(),
            f.coeffs.len(),
            f.trace_bound,
            nonzero
        );
    }
    Ok(0)
}

fn load_sfex(args: &ReportArgs) -> Result<FourierExpansion> {
    let text = fs::read_to_string(&args.input)?;
    let mut f = read_sfex(&text)?;
    f.strict = args.strict;
    Ok(f)
}

fn cmd_report(args: &ReportArgs) -> Result<i32> {
    let f = load_sfex(args)?;
    let rep = congruence::report(&f, args.p, args.m)?;
    if args.json {
        println!("{}", congruence::report_json(&rep, f.rep.scalar_weight()));
    } else {
        println!(
            "status {} | pRank {} | singularRank {:?} | theorem {:?}",
            rep.status.as_str(),
            rep.p_rank,
            rep.singular_rank,
            rep.theorem_holds
        );
        if let Some(note) = &rep.note {
            println!("note: {}", note);
        }
        for (t, _) in rep.witnesses.iter().take(5) {
            println!("witness rank-{} class: {:?}", t.rank(), t.upper_triangle());
        }
    }
    Ok(if rep.status == Status::Contradiction { 4 } else { 0 })
}

fn cmd_pipeline(args: &ReportArgs) -> Result<i32> {
    let f = load_sfex(args)?;
    let pipe = congruence::run_pipeline(&f, args.p, args.m)?;
    if args.json {
        println!("{}", congruence::pipeline_json(&pipe, f.rep.scalar_weight()));
    } else {
        println!(
            "status {} | identity1 {:?} | identity3 {:?} | square {:?}",
            pipe.report.status.as_str(),
            pipe.identity1,
            pipe.identity3,
            pipe.square
        );
        if let Some(ex) = &pipe.extraction {
            println!(
                "extraction: j0 {} | c {} | verdict {} | bound {}",
                ex.j0, ex.c, ex.verdict, ex.effective_bound
            );
        }
    }
    Ok(if pipe.report.status == Status::Contradiction { 4 } else { 0 })
}

fn cmd_rep(args: &RepArgs) -> Result<i32> {
    let weight = HighestWeight::parse(&args.weight)?;
    let n = weight.lambda.len();
    let rep = weylrep::build_rep(n, &weight)?;
    let grading = weylrep::weight_grading(&rep)?;
    let dims: Vec<(u32, usize)> = grading.iter().map(|g| (g.weight, g.basis.cols)).collect();
    assert_eq!(dims.iter().map(|x| x.1).sum::<usize>(), rep.ell);
    // sample integrality: rep matrices of a shear and its square must be integral
    let mut shear = crate::symmat::mat_identity(n);
    if n >= 2 {
        shear[0][1] = 1;
    }
    let m1 = rep.rep_matrix(&shear)?;
    let m2 = rep.rep_matrix(&crate::symmat::mat_mul(&shear, &shear))?;
    let sample_ok = n < 2 || m1.mul(&m1) == m2;
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "weight": weight.lambda,
                "ell": rep.ell,
                "grading": dims.iter().map(|(w, d)| serde_json::json!({"weight": w, "dim": d})).collect::<Vec<_>>(),
                "sampleIntegrality": sample_ok,
            })
        );
    } else {
        println!("ell {} | weyl {} | grading {:?} | integrality {}", rep.ell, weight.weyl_dimension(), dims, sample_ok);
    }
    Ok(if sample_ok { 0 } else { 4 })
}

fn cmd_catalog(json: bool) -> Result<i32> {
    let names = ["A1", "A2", "D4", "E8"];
    if json {
        let items: Vec<_> = names
            .iter()
            .map(|n| {
                let l = theta::catalog(n).unwrap();
                serde_json::json!({
                    "name": n,
                    "rank": l.m,
                    "det": l.det().to_string(),
                    "level": l.level(),
                })
            })
            .collect();
        println!("{}", serde_json::Value::Array(items));
    } else {
        for n in names {
            let l = theta::catalog(n).unwrap();
            println!("{:3}  rank {:2}  det {:3}  level {}", n, l.m, l.det(), l.level());
        }
    }
    Ok(0)
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Io(_) | Error::Invalid(_) | Error::InvalidWeight(_)
        | Error::UnknownLattice(_) | Error::TwistedExpansion | Error::MissingKey(_)
        | Error::IncompatibleModulus(_, _) => 2,
        _ => 3,
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Theta(a) => cmd_theta(a),
        Command::Report(a) => cmd_report(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Rep(a) => cmd_rep(a),
        Command::Catalog { json } => cmd_catalog(*json),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            exit_code_for(&e)
        }
    }
}
