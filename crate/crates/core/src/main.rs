use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use flatchain::chains::io::{read_chain, write_chain};
use flatchain::chains::PolyChain;
use flatchain::cones::{cone, cone_quantize, CoeffNet};
use flatchain::flatnorm::{build_complex, embed_chain, flat_norm_upper, SolveMode};
use flatchain::foundation::Functional;
use flatchain::harness::{emit_report, run_experiment, ExperimentConfig, ReportFormat};
use flatchain::linalg::Vector;
use flatchain::mass::{chain_norms, density_entry, mass_breakdown, mass_direct, DirectGrid};
use flatchain::slicing::{restrict_lipschitz, slice, LipschitzFn, RestrictOptions};
use flatchain::{Error, Result};

#[derive(Parser)]
#[command(name = "flatchain", version, about = "Polyhedral chains, masses, slices, cones and flat norms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mass, per-summand breakdown and density reports
    Mass {
        chain: PathBuf,
        /// also evaluate the slicing definition directly
        #[arg(long)]
        direct: bool,
        /// dual-sphere starts for --direct
        #[arg(long, default_value_t = 64)]
        resolution: usize,
    },
    /// Slice by a linear functional at a level
    Slice {
        chain: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        functional: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        level: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Restrict to a ball through piecewise-linear approximations
    Restrict {
        chain: PathBuf,
        /// center coordinates followed by the radius
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ball: Vec<f64>,
        #[arg(long, default_value_t = 6)]
        stages: usize,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Cone over the chain from an apex
    Cone {
        chain: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        apex: Vec<f64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Quantize onto centers with an itemized error budget
    Quantize {
        chain: PathBuf,
        #[arg(long)]
        delta: f64,
        /// JSON array of center coordinate arrays
        #[arg(long)]
        centers_file: PathBuf,
        /// coefficient grid step (real coefficients); exact when absent
        #[arg(long)]
        coeff_grid: Option<f64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Flat-norm upper bound with a filling certificate
    Flatnorm {
        chain: PathBuf,
        /// `lo,hi` for every axis, or all lower then all upper coordinates
        #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
        bbox: Vec<f64>,
        #[arg(long)]
        resolution: usize,
        #[arg(long, default_value = "real")]
        mode: String,
        /// write the filling Q as a chain file
        #[arg(long)]
        emit_filling: Option<PathBuf>,
    },
    /// Experiment suites
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
}

#[derive(Args)]
struct OutArg {
    /// write the resulting chain here (printed inside the JSON otherwise)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentAction {
    /// Run a config; exit code 0 iff every row and suite check passes
    Run {
        #[arg(long)]
        config: PathBuf,
        /// output directory (overrides output_dir in the config)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn vector(xs: &[f64], dim: usize, what: &str) -> Result<Vector> {
    if xs.len() != dim {
        return Err(Error::Parse(format!("{what} needs {dim} coordinates, got {}", xs.len())));
    }
    Ok(Vector::from_vec(xs.to_vec()))
}

fn chain_output(chain: &PolyChain, out: &OutArg) -> Result<Value> {
    match &out.out {
        Some(path) => {
            write_chain(chain, path)?;
            Ok(json!(path.display().to_string()))
        }
        None => Ok(serde_json::to_value(flatchain::chains::io::ChainFile::from_chain(chain))?),
    }
}

fn mass_cmd(path: &Path, direct: bool, resolution: usize) -> Result<Value> {
    let chain = read_chain(path)?;
    let norms = chain_norms(&chain)?;
    let canonical = chain.canonicalize();
    let breakdown = mass_breakdown(&chain)?;
    let mut summands = Vec::new();
    for (s, m) in canonical.summands().iter().zip(&breakdown) {
        let mut entry = json!({ "mass": m, "coefficient_norm": s.coeff.norm() });
        if s.poly.k() > 0 {
            let d = density_entry(canonical.space(), &s.poly.plane()?)?;
            entry["density"] = serde_json::to_value(&d)?;
            if direct {
                let grid = DirectGrid {
                    functional_resolution: resolution,
                    ..DirectGrid::default()
                };
                entry["mass_direct"] = json!(mass_direct(canonical.space(), s, grid)?);
            }
        }
        summands.push(entry);
    }
    Ok(json!({
        "mass": norms.mass,
        "boundary_mass": norms.boundary_mass,
        "n": norms.n_value,
        "summands": summands,
    }))
}

fn slice_cmd(path: &Path, functional: &[f64], level: f64, out: &OutArg) -> Result<Value> {
    let chain = read_chain(path)?;
    let f = Functional::new(chain.space(), vector(functional, chain.space().dim(), "--functional")?)?;
    let s = slice(&chain, &f, level)?;
    Ok(json!({ "level": level, "mass": flatchain::mass::mass(&s)?, "chain": chain_output(&s, out)? }))
}

fn restrict_cmd(path: &Path, ball: &[f64], stages: usize, tolerance: f64, out: &OutArg) -> Result<(Value, bool)> {
    let chain = read_chain(path)?;
    let d = chain.space().dim();
    if ball.len() != d + 1 {
        return Err(Error::Parse(format!("--ball needs {} numbers (center, radius)", d + 1)));
    }
    let center = vector(&ball[..d], d, "ball center")?;
    let report = restrict_lipschitz(
        &chain,
        &LipschitzFn::DistanceToPoint(center),
        ball[d],
        RestrictOptions { stages, tolerance },
    )?;
    let value = json!({
        "level": report.level,
        "converged": report.converged,
        "tolerance": report.tolerance,
        "fullness_floor": report.fullness_floor,
        "size_u_nonincreasing": report.size_u_nonincreasing(),
        "stages": report.stages,
        "chain": chain_output(report.result(), out)?,
    });
    Ok((value, report.converged))
}

fn cone_cmd(path: &Path, apex: &[f64], out: &OutArg) -> Result<Value> {
    let chain = read_chain(path)?;
    let z = vector(apex, chain.space().dim(), "--apex")?;
    let c = cone(&z, &chain)?;
    Ok(json!({ "mass": flatchain::mass::mass(&c)?, "chain": chain_output(&c, out)? }))
}

fn quantize_cmd(path: &Path, delta: f64, centers_file: &Path, coeff_grid: Option<f64>, out: &OutArg) -> Result<Value> {
    let chain = read_chain(path)?;
    let raw: Vec<Vec<f64>> = serde_json::from_str(&std::fs::read_to_string(centers_file)?)?;
    let centers = raw
        .iter()
        .map(|c| vector(c, chain.space().dim(), "center"))
        .collect::<Result<Vec<_>>>()?;
    let net = coeff_grid.map_or(CoeffNet::Exact, CoeffNet::Grid);
    let q = cone_quantize(&chain, &centers, delta, net)?;
    Ok(json!({
        "budget": q.budget,
        "certificate": {
            "filling_mass": flatchain::mass::mass(&q.filling)?,
            "residual_mass": flatchain::mass::mass(&q.residual)?,
        },
        "chain": chain_output(&q.chain, out)?,
    }))
}

fn flatnorm_cmd(path: &Path, bbox: &[f64], resolution: usize, mode: &str, emit: Option<&Path>) -> Result<Value> {
    let chain = read_chain(path)?;
    let d = chain.space().dim();
    let (lo, hi) = match bbox.len() {
        2 => (Vector::from_element(d, bbox[0]), Vector::from_element(d, bbox[1])),
        n if n == 2 * d => (Vector::from_vec(bbox[..d].to_vec()), Vector::from_vec(bbox[d..].to_vec())),
        n => return Err(Error::Parse(format!("--box needs 2 or {} numbers, got {n}", 2 * d))),
    };
    let mode: SolveMode = mode.parse()?;
    let complex = build_complex(chain.space(), &lo, &hi, resolution)?;
    let (p, embed) = embed_chain(&chain, &complex)?;
    let cert = flat_norm_upper(&complex, &p, mode)?;
    let recomputed = cert.recompute(&complex, &p)?;
    if let Some(out) = emit {
        write_chain(&cert.filling.to_poly_chain(&complex)?, out)?;
    }
    Ok(json!({
        "value": cert.value,
        "upper_bound": cert.value + embed.discrepancy,
        "certificate": {
            "filling_mass": cert.filling_mass,
            "residual_mass": cert.residual_mass,
            "recomputed_value": recomputed,
            "filling_simplices": cert.filling.coeffs.iter().filter(|g| !g.is_zero()).count(),
            "residual_simplices": cert.residual.coeffs.iter().filter(|g| !g.is_zero()).count(),
        },
        "solver": {
            "mode": mode,
            "optimal": cert.optimal,
            "relaxation_integral": cert.relaxation_integral,
            "nodes": cert.nodes,
        },
        "embedding": embed,
        "complex": {
            "resolution": resolution,
            "vertices": complex.count(0),
            "top_simplices": complex.count(d),
        },
    }))
}

fn experiment_cmd(config: &Path, out: Option<&Path>) -> Result<(Value, bool)> {
    let cfg = ExperimentConfig::read(config)?;
    let report = run_experiment(&cfg)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| Error::Parse("no output directory (use --out or output_dir)".into()))?;
    let files = emit_report(&report, &dir, &[ReportFormat::Csv, ReportFormat::Json])?;
    let failed_checks: Vec<&String> = report.checks.iter().filter(|c| !c.pass).map(|c| &c.name).collect();
    let value = json!({
        "experiment": report.experiment,
        "rows": report.rows.len(),
        "failures": report.failures(),
        "failed_checks": failed_checks,
        "aggregates": report.aggregates,
        "files": files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
    });
    Ok((value, report.passed()))
}

fn run(cli: Cli) -> Result<(Value, bool)> {
    match cli.command {
        Command::Mass { chain, direct, resolution } => Ok((mass_cmd(&chain, direct, resolution)?, true)),
        Command::Slice {
            chain,
            functional,
            level,
            out,
        } => Ok((slice_cmd(&chain, &functional, level, &out)?, true)),
        Command::Restrict {
            chain,
            ball,
            stages,
            tolerance,
            out,
        } => restrict_cmd(&chain, &ball, stages, tolerance, &out),
        Command::Cone { chain, apex, out } => Ok((cone_cmd(&chain, &apex, &out)?, true)),
        Command::Quantize {
            chain,
            delta,
            centers_file,
            coeff_grid,
            out,
        } => Ok((quantize_cmd(&chain, delta, &centers_file, coeff_grid, &out)?, true)),
        Command::Flatnorm {
            chain,
            bbox,
            resolution,
            mode,
            emit_filling,
        } => Ok((flatnorm_cmd(&chain, &bbox, resolution, &mode, emit_filling.as_deref())?, true)),
        Command::Experiment {
            action: ExperimentAction::Run { config, out },
        } => experiment_cmd(&config, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((value, ok)) => {
            // a closed pipe downstream is not an error worth reporting
            let _ = writeln!(
                std::io::stdout().lock(),
                "{}",
                serde_json::to_string_pretty(&value).expect("serializable")
            );
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
