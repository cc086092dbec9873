use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

mod commands;
mod config;
mod render;

/// Word metrics, horofunctions, stable norms and crossed-product checks.
#[derive(Parser, Debug)]
#[command(name = "horocp", version)]
struct Cli {
    /// key=value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON document here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GroupArgs {
    /// Z, Z2, Z3, ..., ZmxCn, H3 or Cn.
    #[arg(long, default_value = "Z2")]
    pub group: String,
    /// standard (alias diamond), hexagonal, king, or explicit elements
    /// separated by '|', e.g. "(1,0)|(0,1)|(1,1)".
    #[arg(long, default_value = "standard")]
    pub gens: String,
    /// word, l1, l2, linf or central-sqrt (2⌈2√|k|⌉ on Z).
    #[arg(long, default_value = "word")]
    pub length: String,
    /// Rational multiple p/q applied to the length.
    #[arg(long)]
    pub scale: Option<String>,
    /// Ball size cap; overrides HOROCP_CAP.
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate the ball of radius R.
    GroupBall {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        radius: f64,
        /// Include every element with its length.
        #[arg(long)]
        list: bool,
    },
    /// Values of h ↦ ℓ(h) − ℓ(g⁻¹h) on a ball.
    Phi {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        g: String,
        #[arg(long)]
        radius: f64,
    },
    /// Facets of the generator polytope with their support functionals.
    Facets {
        #[command(flatten)]
        group: GroupArgs,
    },
    /// Limit of φ_g along a lattice ray or a repeated word.
    Busemann {
        #[command(flatten)]
        group: GroupArgs,
        /// Direction components: rationals like 1/2 or decimals.
        #[arg(long, conflicts_with = "word")]
        direction: Option<String>,
        /// Letters separated by '|' (a, b, A, B allowed on H3).
        #[arg(long)]
        word: Option<String>,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long)]
        g: String,
        /// Horizon for the geodesic defect.
        #[arg(long, default_value_t = 20.0)]
        horizon: f64,
    },
    /// min ℓ(ig)/i over i ≤ horizon, with the dual polytope norm.
    StableNorm {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        g: String,
        #[arg(long, default_value_t = 40)]
        horizon: u64,
    },
    /// Separation certificate of the length function.
    Separate {
        #[command(flatten)]
        group: GroupArgs,
    },
    /// Run one check of the default suite, or all of them.
    Verify {
        /// A check name or "all".
        check: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Group for the single-group checks (commutator_identity, cocycle).
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Clock–shift relations and the equicontinuity sweep at θ = p/q.
    Nctorus {
        #[arg(long, default_value_t = 1)]
        p: i64,
        #[arg(long, default_value_t = 3)]
        q: usize,
        #[arg(long, default_value_t = -50, allow_hyphen_values = true)]
        n_min: i64,
        #[arg(long, default_value_t = 50)]
        n_max: i64,
        #[arg(long, default_value_t = 20.0)]
        radius: f64,
    },
    /// Structural checks of the odometer triple.
    AfTriple {
        /// Orders n_1,...,n_k.
        #[arg(long, default_value = "2,2,2,2,2")]
        orders: String,
        /// λ_1,...,λ_k; defaults to 1, 2, 4, ...
        #[arg(long)]
        eigenvalues: Option<String>,
        #[arg(long, default_value_t = 3)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Distance between two states of C*(Z_n) with D = M_ℓ.
    MkDistance {
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// ℓ(0),...,ℓ(n−1); defaults to the word length min(k, n − k).
        #[arg(long)]
        lengths: Option<String>,
        /// Multiply D by this factor.
        #[arg(long, default_value_t = 1.0)]
        dirac_scale: f64,
        /// char:j or point:x.
        #[arg(long, default_value = "char:0")]
        psi: String,
        #[arg(long, default_value = "char:1")]
        psi2: String,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also run the grid oracle with this many points per axis.
        #[arg(long)]
        brute_force_grid: Option<usize>,
    },
}

/// What a subcommand hands back for the document.
pub struct Outcome {
    pub inputs: Value,
    pub result: Value,
    pub diagnostics: serde_json::Map<String, Value>,
    /// Checks ran and at least one failed.
    pub failed: bool,
    pub summary: String,
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let args = match config::config_path(&raw) {
        Some(p) => match config::load(std::path::Path::new(&p)) {
            Ok(entries) => config::inject(&raw, &entries),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => raw,
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let name = command_name(&cli.command);
    let started = Instant::now();
    let (doc, code) = match run(cli.command) {
        Ok(o) => {
            eprintln!("{name}: {} ({:.2} s)", o.summary, started.elapsed().as_secs_f64());
            let code = if o.failed { 1 } else { 0 };
            (json!({"command": name, "inputs": o.inputs, "result": o.result, "diagnostics": o.diagnostics}), code)
        }
        Err(e) => {
            eprintln!("{name}: error: {e}");
            let kind = match e {
                horocp::Error::CapExceeded { .. } | horocp::Error::DimensionCap { .. } => "cap",
                horocp::Error::Parse(_) => "usage",
                _ => "input",
            };
            let diagnostics = json!({"error": e.to_string(), "kind": kind});
            (json!({"command": name, "inputs": null, "result": null, "diagnostics": diagnostics}), 2)
        }
    };
    let text = render::to_string(&doc);
    match cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::GroupBall { .. } => "group-ball",
        Command::Phi { .. } => "phi",
        Command::Facets { .. } => "facets",
        Command::Busemann { .. } => "busemann",
        Command::StableNorm { .. } => "stable-norm",
        Command::Separate { .. } => "separate",
        Command::Verify { .. } => "verify",
        Command::Nctorus { .. } => "nctorus",
        Command::AfTriple { .. } => "af-triple",
        Command::MkDistance { .. } => "mk-distance",
    }
}

fn run(c: Command) -> horocp::Result<Outcome> {
    match c {
        Command::GroupBall { group, radius, list } => commands::group_ball(&group, radius, list),
        Command::Phi { group, g, radius } => commands::phi(&group, &g, radius),
        Command::Facets { group } => commands::facets(&group),
        Command::Busemann { group, direction, word, steps, g, horizon } => {
            commands::busemann(&group, direction.as_deref(), word.as_deref(), steps, &g, horizon)
        }
        Command::StableNorm { group, g, horizon } => commands::stable_norm(&group, &g, horizon),
        Command::Separate { group } => commands::separate(&group),
        Command::Verify { check, seed, group, radius } => commands::verify(&check, seed, group.as_deref(), radius),
        Command::Nctorus { p, q, n_min, n_max, radius } => commands::nctorus(p, q, n_min, n_max, radius),
        Command::AfTriple { orders, eigenvalues, samples, seed } => {
            commands::af_triple(&orders, eigenvalues.as_deref(), samples, seed)
        }
        Command::MkDistance {
            order,
            lengths,
            dirac_scale,
            psi,
            psi2,
            restarts,
            iterations,
            step,
            seed,
            brute_force_grid,
        } => commands::mk_distance(commands::MkArgs {
            order,
            lengths,
            dirac_scale,
            psi,
            psi2,
            restarts,
            iterations,
            step,
            seed,
            brute_force_grid,
        }),
    }
}
