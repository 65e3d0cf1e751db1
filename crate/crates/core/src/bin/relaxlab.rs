use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relaxlab::densemat::parse_matrix;
use relaxlab::lab::{self, ExperimentConfig, LabError, LayerMode, ReferenceMode, RunSpec};
use relaxlab::relaxsys::{self, RelaxationSystem, StabilityCertificate};
use relaxlab::spectral;
use relaxlab::tableaux::{self, Tableau};

#[derive(Parser)]
#[command(
    name = "relaxlab",
    version,
    about = "IMEX Runge-Kutta schemes for hyperbolic relaxation systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect double Butcher tableaux.
    #[command(subcommand)]
    Tableau(TableauCmd),
    /// Inspect relaxation systems.
    #[command(subcommand)]
    System(SystemCmd),
    /// Single run; writes grid values at the final time as CSV.
    Run(RunArgs),
    /// ε × Δt × scheme convergence study.
    Converge(ConvergeArgs),
}

#[derive(Subcommand)]
enum TableauCmd {
    /// List the registered schemes.
    List,
    /// Print order conditions and classification of a registered scheme or
    /// a tableau file.
    Verify { scheme: String },
}

#[derive(Subcommand)]
enum SystemCmd {
    /// Check the structural stability conditions.
    Check(SystemArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// `broadwell` or `grad:M`.
    model: Option<String>,
    #[arg(long = "a", value_name = "FILE", requires = "q_file")]
    a_file: Option<PathBuf>,
    #[arg(long = "q", value_name = "FILE", requires = "a_file")]
    q_file: Option<PathBuf>,
    /// Rank of the stiff block.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Transformation `P` of the certificate; derived when omitted.
    #[arg(long = "p", value_name = "FILE", requires = "a0_file")]
    p_file: Option<PathBuf>,
    /// Symmetrizer `A₀` of the certificate.
    #[arg(long = "a0", value_name = "FILE", requires = "p_file")]
    a0_file: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    scheme: String,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    dt: f64,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value = "exact")]
    layer: LayerMode,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    /// TOML configuration; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    #[arg(long)]
    eps_lo: Option<f64>,
    #[arg(long)]
    eps_hi: Option<f64>,
    #[arg(long)]
    eps_count: Option<usize>,
    #[arg(long)]
    dt_base: Option<f64>,
    #[arg(long)]
    dt_levels: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long = "ref")]
    reference: Option<ReferenceMode>,
    #[arg(long)]
    layer: Option<LayerMode>,
    /// Error table CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Order-fit CSV.
    #[arg(long)]
    fits: Option<PathBuf>,
}

/// Exit statuses.
const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CELL_FAILED: u8 = 2;
const EXIT_CONFIG: u8 = 3;

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn config(msg: impl ToString) -> Self {
        Self {
            code: EXIT_CONFIG,
            msg: msg.to_string(),
        }
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        let code = if e.is_config() {
            EXIT_CONFIG
        } else {
            EXIT_CELL_FAILED
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Tableau(TableauCmd::List) => tableau_list(),
        Command::Tableau(TableauCmd::Verify { scheme }) => tableau_verify(&scheme),
        Command::System(SystemCmd::Check(args)) => system_check(&args),
        Command::Run(args) => run(&args),
        Command::Converge(args) => converge(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("relaxlab: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn tableau_list() -> Result<(), Failure> {
    for name in tableaux::REGISTRY {
        let t = tableaux::registry(name).expect("registered");
        println!(
            "{:<10} stages {}  order {}",
            name,
            t.stages(),
            tableaux::claimed_order(name).unwrap_or(0)
        );
    }
    Ok(())
}

fn load_tableau(arg: &str) -> Result<Tableau, Failure> {
    if tableaux::REGISTRY.contains(&arg) {
        return Ok(tableaux::registry(arg).expect("registered"));
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Failure::config(format!(
            "`{arg}` is neither a registered scheme nor a file"
        )));
    }
    tableaux::parse_tableau(&read_text(path)?)
        .map(|t| t.with_name(arg))
        .map_err(|e| Failure {
            code: EXIT_CHECK_FAILED,
            msg: format!("{arg}: {e}"),
        })
}

fn tableau_verify(arg: &str) -> Result<(), Failure> {
    let t = load_tableau(arg)?;
    let c = tableaux::classify(&t);
    println!("scheme    {}", t.name());
    println!("stages    {}", t.stages());
    let flag = |b: bool| if b { "yes" } else { "no" };
    println!(
        "type      CK {}  ARS {}  ISA {}  GSA {}  c~ = c {}",
        flag(c.is_ck),
        flag(c.is_ars),
        flag(c.is_isa),
        flag(c.is_gsa),
        flag(c.c_matched)
    );
    let mut order = 0;
    for p in 1..=3u8 {
        let report = tableaux::order_residuals(&t, p);
        println!("\norder {p} conditions");
        print!("{report}");
        if report.all_pass() && order == p - 1 {
            order = p;
        }
    }
    println!("\norder     {order}");
    match tableaux::stage_conditions(&t) {
        Ok(report) => {
            println!("\nstage-order and vanishing-coefficient conditions");
            print!("{report}");
        }
        Err(e) => println!("\nstage conditions: {e}"),
    }
    match tableaux::assumption_h(&t) {
        Ok(h) => println!(
            "\nnull space of H: last component vanishes: {}  v = {:?}",
            flag(h.pass),
            h.null_vector
        ),
        Err(e) => println!("\nnull space of H: {e}"),
    }
    Ok(())
}

fn system_check(args: &SystemArgs) -> Result<(), Failure> {
    let (sys, cert): (RelaxationSystem, StabilityCertificate) = match (&args.model, &args.a_file) {
        (Some(model), None) => relaxsys::builtin(model, args.eps).map_err(Failure::config)?,
        (None, Some(a_file)) => {
            let q_file = args.q_file.as_ref().expect("clap enforces --q");
            let a = parse_matrix(&read_text(a_file)?).map_err(Failure::config)?;
            let q = parse_matrix(&read_text(q_file)?).map_err(Failure::config)?;
            let r = args
                .r
                .ok_or_else(|| Failure::config("--r is required with --a/--q"))?;
            let sys = RelaxationSystem::new(a, q, r, args.eps).map_err(Failure::config)?;
            let cert = match (&args.p_file, &args.a0_file) {
                (Some(p), Some(a0)) => {
                    let p = parse_matrix(&read_text(p)?).map_err(Failure::config)?;
                    let a0 = parse_matrix(&read_text(a0)?).map_err(Failure::config)?;
                    StabilityCertificate::from_transform(p, a0, sys.q(), r)
                        .map_err(Failure::config)?
                }
                _ => relaxsys::derive_certificate(sys.a(), sys.q(), r).map_err(|e| Failure {
                    code: EXIT_CHECK_FAILED,
                    msg: e.to_string(),
                })?,
            };
            (sys, cert)
        }
        _ => return Err(Failure::config("give either a model name or --a/--q files")),
    };
    let report = relaxsys::check_structural_stability(sys.a(), sys.q(), &cert, sys.stiff_rank())
        .map_err(Failure::config)?;
    println!(
        "m = {}, r = {}, eps = {:e}",
        sys.dim(),
        sys.stiff_rank(),
        sys.epsilon()
    );
    print!("{report}");
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_CHECK_FAILED,
            msg: "structural stability conditions not met".into(),
        })
    }
}

fn emit(
    path: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), Failure> {
    let res = match path {
        Some(p) => std::fs::File::create(p).and_then(|f| {
            let mut w = std::io::BufWriter::new(f);
            body(&mut w)?;
            w.flush()
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)
        }
    };
    res.map_err(|e| Failure::config(format!("writing output: {e}")))
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let spec = RunSpec {
        model: args.model.clone(),
        scheme: args.scheme.clone(),
        epsilon: args.eps,
        dt: args.dt,
        n: args.n,
        t0: args.t0,
        t: args.t,
        layer: args.layer,
    };
    let state = lab::run(&spec).map_err(|e| match e {
        LabError::Step(_) => Failure {
            code: EXIT_CELL_FAILED,
            msg: e.to_string(),
        },
        other => Failure::config(other),
    })?;
    let field = spectral::synthesize(&state);
    emit(args.out.as_deref(), |w| field.write_csv(w))
}

fn converge(args: &ConvergeArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path).map_err(Failure::config)?,
        None => ExperimentConfig::default(),
    };
    macro_rules! overlay {
        ($($field:ident),*) => {
            $(if let Some(v) = &args.$field { cfg.$field = v.clone(); })*
        };
    }
    overlay!(
        model, schemes, eps_lo, eps_hi, eps_count, dt_base, dt_levels, n, t0, t, reference, layer
    );
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    if args.eps_lo.is_some() || args.eps_hi.is_some() || args.eps_count.is_some() {
        cfg.eps_list = None;
    }
    cfg.validate().map_err(Failure::config)?;

    let table = lab::convergence_study(&cfg)?;
    emit(cfg.out.as_deref(), |w| lab::write_table(&table, w))?;

    let fits = lab::fit_table(&table)?;
    for f in fits.iter().filter(|f| f.epsilon == lab::FitTarget::Uniform) {
        eprintln!("{:<10} uniform slope {:.3}", f.scheme, f.slope);
    }
    if let Some(path) = &args.fits {
        emit(Some(path), |w| lab::write_fits(&fits, w))?;
    }
    Ok(())
}
