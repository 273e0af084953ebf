use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use detrep::construct::{self, corollary_cone};
use detrep::hyper;
use detrep::pencil::{self, Pencil};
use detrep::sos::{self, SosCertificate, SosOptions, TheoremBData};
use detrep::uniroots::{self, Region};
use detrep::{parse_poly, suite, Config, Error, Polynomial, Report};

mod vars;

#[derive(Parser)]
#[command(name = "detrep", version, about = "Determinantal representations of semi-hyperbolic polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with Config fields; missing fields take defaults.
    #[arg(long, global = true)]
    config_file: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct PolyArgs {
    /// Polynomial text, e.g. "x1*x2 - x0^2".
    #[arg(long, conflicts_with = "poly_file")]
    poly: Option<String>,
    #[arg(long)]
    poly_file: Option<PathBuf>,
    /// Comma separated variable names; inferred from the text when absent.
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Real-rootedness of t -> P(x - t e) at sampled x.
    CheckSemihyperbolic {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        e: Vec<f64>,
    },
    /// Semi-hyperbolicity plus P(e) != 0.
    CheckHyperbolic {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        e: Vec<f64>,
    },
    /// Hyperbolicity for random directions in a cone.
    CheckCone {
        #[command(flatten)]
        poly: PolyArgs,
        /// Generators separated by ';', entries by ',' (default: the positive orthant of x1, x2).
        #[arg(long, allow_hyphen_values = true)]
        gens: Option<String>,
    },
    /// Trivariate pencil with the (B+, B-) split.
    ConstructT1 {
        #[command(flatten)]
        poly: PolyArgs,
        /// Unitary data `{u, dims, c}` to use instead of the automatic search.
        #[arg(long)]
        thmb_file: Option<PathBuf>,
    },
    /// Definite pencil for a cone-hyperbolic trivariate form.
    ConstructCor {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, allow_hyphen_values = true)]
        gens: Option<String>,
    },
    /// Four-variable pencil up to a cofactor.
    ConstructT2 {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long)]
        cert_file: Option<PathBuf>,
    },
    /// Coefficient-wise comparison of a polynomial and a pencil.
    Verify {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long)]
        pencil_file: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Four-variable lift of a split trivariate pencil.
    Lift {
        /// Defaults to the worked cubic's pencil.
        #[arg(long)]
        pencil_file: Option<PathBuf>,
    },
    /// All checks on the worked cubic.
    ExampleSec3,
    /// Search for a chord leaving a component of {P != 0}.
    Nonconvexity {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
    },
    /// Sum-of-squares certificate on the tridisk.
    SosTridisk {
        #[command(flatten)]
        poly: PolyArgs,
    },
    /// Roots of a univariate polynomial with region counts.
    Roots {
        #[command(flatten)]
        poly: PolyArgs,
    },
}

enum Failure {
    Usage(String),
    Check(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::DimensionMismatch { .. }
            | Error::VariableIndex { .. }
            | Error::NotHermitian(_)
            | Error::Invalid(_)
            | Error::Json(_)
            | Error::Io(_) => Failure::Usage(e.to_string()),
            other => Failure::Check(other),
        }
    }
}

type Outcome = Result<Report, Failure>;

fn read_text(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_json(path: &PathBuf) -> Result<Value, Failure> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn poly_text(args: &PolyArgs) -> Result<String, Failure> {
    match (&args.poly, &args.poly_file) {
        (Some(t), _) => Ok(t.clone()),
        (None, Some(path)) => Ok(read_text(path)?.trim().to_string()),
        (None, None) => Err(Failure::Usage("one of --poly or --poly-file is required".into())),
    }
}

fn load_poly(args: &PolyArgs, default_vars: Option<&[&str]>) -> Result<Polynomial, Failure> {
    let text = poly_text(args)?;
    let names: Vec<String> = match (&args.vars, default_vars) {
        (Some(v), _) => v.clone(),
        (None, Some(d)) => d.iter().map(|s| s.to_string()).collect(),
        (None, None) => vars::infer(&text).map_err(Failure::Usage)?,
    };
    Ok(parse_poly(&text, &names)?)
}

fn load_config(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = match &cli.config_file {
        Some(path) => Config::from_json(&read_text(path)?)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_gens(text: Option<&str>) -> Result<Vec<Vec<f64>>, Failure> {
    let Some(text) = text else {
        return Ok(corollary_cone());
    };
    text.split(';')
        .map(|g| {
            g.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Failure::Usage(format!("bad generator entry `{v}`: {e}")))
                })
                .collect()
        })
        .collect()
}

fn direction(e: &[f64], p: &Polynomial) -> Vec<f64> {
    if e.is_empty() {
        let mut d = vec![0.0; p.nvars()];
        if let Some(last) = d.last_mut() {
            *last = 1.0;
        }
        d
    } else {
        e.to_vec()
    }
}

const T1_VARS: [&str; 3] = ["x0", "x1", "x2"];
const T2_VARS: [&str; 4] = ["x0", "x1", "x2", "x3"];
const Z_VARS: [&str; 3] = ["z1", "z2", "z3"];

fn verdict_report(name: &str, p: &Polynomial, v: &hyper::Verdict, cfg: &Config) -> Report {
    let mut r = Report::new(p.to_string(), cfg);
    r.stage("verdict", serde_json::to_value(v).expect("verdict serializes"));
    r.check(name, v.holds, json!({"worst_imag": v.worst_imag, "p_at_e": v.p_at_e}));
    r
}

fn run(cmd: &Command, cfg: &Config) -> Outcome {
    match cmd {
        Command::CheckSemihyperbolic { poly, e } => {
            let p = load_poly(poly, None)?;
            let v = hyper::is_semi_hyperbolic(&p, &direction(e, &p), cfg.n_samples, cfg.seed, cfg.real_tol)?;
            Ok(verdict_report("semi_hyperbolic", &p, &v, cfg))
        }
        Command::CheckHyperbolic { poly, e } => {
            let p = load_poly(poly, None)?;
            let v = hyper::is_hyperbolic(&p, &direction(e, &p), cfg.n_samples, cfg.seed, cfg.real_tol)?;
            Ok(verdict_report("hyperbolic", &p, &v, cfg))
        }
        Command::CheckCone { poly, gens } => {
            let p = load_poly(poly, None)?;
            let g = parse_gens(gens.as_deref())?;
            let v = hyper::is_cone_hyperbolic(&p, &g, cfg.n_dirs, cfg.n_samples, cfg.seed, cfg.real_tol)?;
            let mut r = verdict_report("cone_hyperbolic", &p, &v, cfg);
            r.stage("cone", json!(g));
            Ok(r)
        }
        Command::ConstructT1 { poly, thmb_file } => {
            let p = load_poly(poly, Some(&T1_VARS))?;
            let data = match thmb_file {
                Some(path) => Some(TheoremBData::from_json(&read_json(path)?)?),
                None => None,
            };
            Ok(construct::theorem1_construct(&p, data.as_ref(), cfg)?.report)
        }
        Command::ConstructCor { poly, gens } => {
            let p = load_poly(poly, Some(&T1_VARS))?;
            let g = parse_gens(gens.as_deref())?;
            Ok(construct::corollary_construct(&p, &g, cfg)?.report)
        }
        Command::ConstructT2 { poly, cert_file } => {
            let p = load_poly(poly, Some(&T2_VARS))?;
            let cert = match cert_file {
                Some(path) => Some(SosCertificate::from_json(&read_json(path)?)?),
                None => None,
            };
            Ok(construct::theorem2_construct(&p, cert.as_ref(), cfg)?.report)
        }
        Command::Verify { poly, pencil_file, tol } => {
            let pencil = Pencil::from_json(&read_json(pencil_file)?)?;
            let default: Vec<String> = detrep::poly::var_names("x", 0, pencil.nmats());
            let names: Vec<&str> = default.iter().map(String::as_str).collect();
            let p = load_poly(poly, Some(&names))?;
            Ok(pencil::verify_representation(&p, &pencil, *tol, cfg))
        }
        Command::Lift { pencil_file } => {
            let pencil = match pencil_file {
                Some(path) => Pencil::from_json(&read_json(path)?)?,
                None => detrep::fixtures::cubic_pencil(),
            };
            Ok(construct::lift_to_four(&pencil, cfg)?.1)
        }
        Command::ExampleSec3 => Ok(suite::cubic_suite(cfg)?),
        Command::Nonconvexity { poly, point } => {
            let p = load_poly(poly, None)?;
            let seed_point = if point.is_empty() {
                direction(&[], &p)
            } else {
                point.clone()
            };
            let cert = hyper::nonconvexity_certificate(&p, &seed_point, cfg.nonconvex_budget, cfg.seed)?;
            let mut r = Report::new(p.to_string(), cfg);
            r.stage("seed_point", json!(seed_point));
            r.check("nonconvexity_certificate", cert.is_some(), &cert);
            Ok(r)
        }
        Command::SosTridisk { poly } => {
            let p = load_poly(poly, Some(&Z_VARS))?;
            let opts = SosOptions::from_config(cfg);
            let cert = sos::find_sos_tridisk(&p, p.degree_in(0), &opts)?;
            let res = sos::sos_residual(&cert, &p, cfg.grid_size)?;
            let mut r = Report::new(p.to_string(), cfg);
            r.stage("certificate", cert.to_json());
            r.check(
                "sos_residual",
                res <= cfg.sos_tol,
                json!({"residual": res, "grid_size": cfg.grid_size, "iterations": cert.iterations}),
            );
            Ok(r)
        }
        Command::Roots { poly } => {
            let p = load_poly(poly, None)?;
            if p.nvars() != 1 {
                return Err(Failure::Usage(format!("expected one variable, got {}", p.nvars())));
            }
            let rs = uniroots::roots(&p)?;
            let mut counts = serde_json::Map::new();
            for (name, region) in [
                ("uhp", Region::Uhp),
                ("lhp", Region::Lhp),
                ("real", Region::Real),
                ("disk", Region::Disk),
                ("exterior", Region::Exterior),
                ("circle", Region::Circle),
            ] {
                let c = uniroots::count_region(&rs, region, false).ok();
                counts.insert(name.into(), json!(c));
            }
            let mut r = Report::new(p.to_string(), cfg);
            r.stage(
                "roots",
                json!({
                    "roots": rs.roots.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                    "residuals": rs.residuals,
                    "degree_drop": rs.degree_drop,
                    "counts": counts,
                }),
            );
            let worst = rs.max_residual();
            r.check("root_residual", worst <= cfg.root_tol, worst);
            Ok(r)
        }
    }
}

fn failure_report(cmd: &Command, err: &Error, cfg: &Config) -> Report {
    let mut r = Report::new(command_name(cmd), cfg);
    r.check("completed", false, json!({"error": err.to_string()}));
    r
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::CheckSemihyperbolic { .. } => "check-semihyperbolic",
        Command::CheckHyperbolic { .. } => "check-hyperbolic",
        Command::CheckCone { .. } => "check-cone",
        Command::ConstructT1 { .. } => "construct-t1",
        Command::ConstructCor { .. } => "construct-cor",
        Command::ConstructT2 { .. } => "construct-t2",
        Command::Verify { .. } => "verify",
        Command::Lift { .. } => "lift",
        Command::ExampleSec3 => "example-sec3",
        Command::Nonconvexity { .. } => "nonconvexity",
        Command::SosTridisk { .. } => "sos-tridisk",
        Command::Roots { .. } => "roots",
    }
}

fn emit(report: &Report, out: Option<&PathBuf>) -> Result<(), String> {
    let text = report.to_json();
    match out {
        Some(path) => fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}").and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
                _ => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(Failure::Usage(msg)) | Err(Failure::Check(Error::Invalid(msg))) => {
            eprintln!("{name}: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Check(e)) => {
            eprintln!("{name}: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&cli.command, &cfg) {
        Ok(r) => r,
        Err(Failure::Usage(msg)) => {
            eprintln!("{name}: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Check(e)) => {
            eprintln!("{name}: {e}");
            failure_report(&cli.command, &e, &cfg)
        }
    };
    if let Err(msg) = emit(&report, cli.out.as_ref()) {
        eprintln!("{name}: {msg}");
        return ExitCode::from(2);
    }
    let total = report.invariants.len();
    let failed = report.failures();
    if failed.is_empty() {
        eprintln!("{name}: PASS ({total} invariants)");
        ExitCode::SUCCESS
    } else {
        eprintln!("{name}: FAIL ({} of {total}): {}", failed.len(), failed.join(", "));
        ExitCode::from(1)
    }
}
