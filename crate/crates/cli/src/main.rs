use clap::{Args, Parser, Subcommand, ValueEnum};
use polycrit::bubble::{bubble_integrals, bubble_residual, farfield_normalization_check, log_radii, BubbleParams};
use polycrit::config::SuiteConfig;
use polycrit::constants::named_constants;
use polycrit::green::hardy_potential::hardy_green_report;
use polycrit::green::kernel::sidecar_path;
use polycrit::green::{
    extract_mass, fourier_green_oracle, neumann_green, verify_table, Cutoff, HardyPotential, KernelTable,
    OperatorSpec, Shape, TorusGrid,
};
use polycrit::hardy::{hardy_best_constant, hardy_refinement, RayleighProblem};
use polycrit::pohozaev::{pohozaev_check, PohozaevCase};
use polycrit::rates::{kappa_values, radial_trace_identity, rate_report, RateCase};
use polycrit::report::{round_floats, CheckReport, Provenance};
use polycrit::suite::run_suite;
use polycrit::tensor::SymTensor;
use polycrit::{describe, DimPair, Error, RadialProfile};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "polycrit", version, about = "Checks for polyharmonic critical equations in the flat model")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Copy)]
struct Dim {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    k: u32,
}

impl Dim {
    fn pair(self) -> polycrit::Result<DimPair> {
        DimPair::new(self.n, self.k)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BubbleCheck {
    Residual,
    Integrals,
    Farfield,
}

#[derive(Subcommand)]
enum Cmd {
    /// Critical exponent, bubble scale, kernel constant, sphere area, kappa.
    Constants(Dim),
    Bubble {
        #[command(flatten)]
        dim: Dim,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, value_enum, default_value = "residual")]
        check: BubbleCheck,
    },
    /// Pohozaev identity for a radial profile file.
    Pohozaev {
        #[command(flatten)]
        dim: Dim,
        #[arg(long)]
        case: PathBuf,
        /// Weight f in front of the nonlinearity (profile file); default 1.
        #[arg(long)]
        weight: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        rin: f64,
        #[arg(long)]
        rout: f64,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    Green {
        #[command(subcommand)]
        action: GreenCmd,
    },
    /// Discrete Hardy best constant with a refinement table.
    Hardy {
        #[command(flatten)]
        dim: Dim,
        #[arg(long, default_value_t = 3200)]
        mesh: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Rate prediction for a RateCase JSON document.
    Rates {
        #[arg(long)]
        case: PathBuf,
    },
    Kappa {
        #[arg(long)]
        k: u32,
    },
    /// Radial trace identity for a tensor file.
    TraceCheck {
        #[command(flatten)]
        dim: Dim,
        #[arg(long)]
        tensor: PathBuf,
    },
    /// Runs registered checks; exit 0 iff all pass.
    Suite {
        #[arg(long = "suite")]
        suites: Vec<String>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        timing: bool,
    },
    Describe {
        #[arg(default_value = "")]
        topic: String,
    },
}

#[derive(Args, Clone)]
struct GreenArgs {
    #[arg(long, default_value_t = 3)]
    n: u32,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 1.0)]
    b0: f64,
    #[arg(long)]
    b1: Option<f64>,
    #[arg(long)]
    b2: Option<f64>,
    #[arg(long)]
    b3: Option<f64>,
    #[arg(long = "N", default_value_t = 32)]
    points: usize,
    #[arg(long = "L", default_value_t = std::f64::consts::TAU)]
    side: f64,
    /// Source cell, comma separated.
    #[arg(long, value_delimiter = ',')]
    source: Option<Vec<usize>>,
}

impl GreenArgs {
    fn setup(&self) -> polycrit::Result<(TorusGrid, OperatorSpec, Vec<usize>)> {
        let d = DimPair::new(self.n, self.k)?;
        let mut b = vec![self.b0];
        for (j, v) in [self.b1, self.b2, self.b3].iter().enumerate() {
            if (j + 1) < self.k as usize {
                b.push(v.unwrap_or(0.0));
            } else if v.is_some() {
                return Err(Error::Range(format!("--b{} given but k = {}", j + 1, self.k)));
            }
        }
        if b.len() != self.k as usize {
            return Err(Error::Range("k > 4 needs more lower coefficients than the CLI takes".into()));
        }
        let grid = TorusGrid::new(self.n, self.side, self.points)?;
        let src = self.source.clone().unwrap_or_else(|| vec![0; self.n as usize]);
        Ok((grid, OperatorSpec::new(d, b)?, src))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Neumann,
    Oracle,
}

#[derive(Subcommand)]
enum GreenCmd {
    /// Builds G(x0, .) and writes the table plus its JSON sidecar.
    Build {
        #[command(flatten)]
        g: GreenArgs,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, value_enum, default_value = "neumann")]
        method: Method,
        #[arg(long)]
        out: PathBuf,
    },
    /// Checks a stored table against the oracle and the representation identity.
    Verify {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, default_value_t = 5)]
        functions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Mass {
        #[command(flatten)]
        g: GreenArgs,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    HardyEstimate {
        #[command(flatten)]
        g: GreenArgs,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        /// Constant sign s of the potential lambda s d^{-2k}.
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        sign: f64,
    },
}

/// Failure of a subcommand: bad input (2) or a failing check (1).
enum Fail {
    Input(String),
    Check,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Input(e.to_string())
    }
}

type Out = Result<(), Fail>;

/// Writes to stdout; a closed pipe (e.g. `| head`) ends the process quietly.
fn say(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing output: {e}");
        std::process::exit(2);
    }
}

fn print_json(v: &Value) {
    say(&format!("{}\n", serde_json::to_string_pretty(&round_floats(v.clone())).expect("json")));
}

fn emit(reports: &[CheckReport]) -> Out {
    let v: Vec<Value> = reports.iter().map(|r| r.to_json(false)).collect();
    print_json(&if v.len() == 1 { v[0].clone() } else { Value::Array(v) });
    if reports.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Fail::Check)
    }
}

fn read(p: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(p).map_err(|e| Fail::Input(format!("{}: {e}", p.display())))
}

fn green(action: GreenCmd) -> Out {
    match action {
        GreenCmd::Build { g, depth, method, out } => {
            let (grid, spec, x) = g.setup()?;
            let t = match method {
                Method::Neumann => neumann_green(&grid, &spec, &x, depth, &Cutoff::for_grid(&grid))?.table,
                Method::Oracle => fourier_green_oracle(&grid, &spec, &x)?,
            };
            t.save(&out)?;
            print_json(&json!({
                "table": out.display().to_string(),
                "sidecar": sidecar_path(&out).display().to_string(),
                "method": t.meta.method,
                "N": grid.points,
                "source": t.meta.source,
                "max_abs": t.values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            }));
            Ok(())
        }
        GreenCmd::Verify { kernel, functions, seed } => {
            let t = KernelTable::load(&kernel)?;
            emit(&verify_table(&t, functions, seed)?)
        }
        GreenCmd::Mass { g, depth } => {
            let (grid, spec, x) = g.setup()?;
            let cut = Cutoff::for_grid(&grid);
            let t = neumann_green(&grid, &spec, &x, depth, &cut)?.table;
            let m = extract_mass(&t, &spec, &x, &cut)?;
            let r = CheckReport::flag("green.mass", m.mass, m.spread, m.mass.is_finite(), Provenance::Derived)
                .input("N", grid.points as u64)
                .input("L", grid.side)
                .input("b0", spec.b[0])
                .detail("spread", m.spread)
                .detail("samples", json!(m.samples));
            emit(&[r])
        }
        GreenCmd::HardyEstimate { g, lambda, gamma, sign } => {
            let (grid, spec, x) = g.setup()?;
            let spec = spec.with_potential(HardyPotential::new(lambda, x, Shape::Constant(sign))?);
            emit(&[hardy_green_report(&grid, &spec, gamma)?])
        }
    }
}

fn run(cmd: Cmd) -> Out {
    match cmd {
        Cmd::Constants(d) => {
            print_json(&serde_json::to_value(named_constants(d.pair()?)?).expect("json"));
            Ok(())
        }
        Cmd::Bubble { dim, mu, check } => {
            let d = dim.pair()?;
            let r = match check {
                BubbleCheck::Residual => bubble_residual(&BubbleParams::with_mu(d, mu)?, &log_radii(1e-3, 1e3, 241))?,
                BubbleCheck::Farfield => farfield_normalization_check(d)?,
                BubbleCheck::Integrals => {
                    let b = bubble_integrals(d)?;
                    let ok = b.int_u_2star.is_finite() && b.k0.is_finite();
                    let mut r = CheckReport::flag(&format!("bubble.integrals.n{}k{}", d.n, d.k), b.k0, 0.0, ok, Provenance::Derived)
                        .input("n", d.n)
                        .input("k", d.k);
                    if let Value::Object(m) = serde_json::to_value(b).expect("json") {
                        r.details.extend(m);
                    }
                    r
                }
            };
            emit(&[r])
        }
        Cmd::Pohozaev { dim, case, weight, rin, rout, eps } => {
            let u = RadialProfile::parse_text(&read(&case)?)?;
            let f = match weight {
                Some(p) => RadialProfile::parse_text(&read(&p)?)?,
                None => RadialProfile::constant(1.0),
            };
            let c = PohozaevCase::new(u, f, eps, rin, rout, dim.pair()?)?;
            emit(&[pohozaev_check(&c)?])
        }
        Cmd::Green { action } => green(action),
        Cmd::Hardy { dim, mesh, levels } => {
            let p = RayleighProblem::with_points(dim.pair()?, mesh)?;
            let est = hardy_best_constant(&p)?;
            let table = hardy_refinement(&p, levels.max(1))?;
            let rows: Vec<Value> = table.iter().map(|(m, c)| json!({"M": m, "constant": c})).collect();
            print_json(&json!({
                "n": dim.n,
                "k": dim.k,
                "best_constant": est.constant,
                "iterations": est.iterations,
                "refinement_table": rows,
            }));
            Ok(())
        }
        Cmd::Rates { case } => emit(&[rate_report(&RateCase::from_json(&read(&case)?)?)?]),
        Cmd::Kappa { k } => {
            let (kp, ka) = kappa_values(k)?;
            let expected = match k {
                1 => Some(2.0),
                2 => Some(2.0 * 30f64.sqrt()),
                _ => None,
            };
            let r = match expected {
                Some(e) => CheckReport::compare(&format!("rates.kappa.k{k}"), ka, e, 1e-6 * e, Provenance::Paper),
                None => CheckReport::flag(&format!("rates.kappa.k{k}"), ka, 0.0, ka.is_finite(), Provenance::Derived),
            };
            emit(&[r.input("k", k).detail("kappa_prime", kp)])
        }
        Cmd::TraceCheck { dim, tensor } => {
            let a = SymTensor::parse_text(&read(&tensor)?)?;
            emit(&[radial_trace_identity(&a, dim.pair()?)?])
        }
        Cmd::Suite { suites, json, csv, config, seed, timing } => {
            let mut cfg = match config {
                Some(p) => SuiteConfig::parse(&read(&p)?)?,
                None => SuiteConfig::default(),
            };
            if !suites.is_empty() {
                let list: Vec<String> = suites.iter().flat_map(|s| s.split(',')).map(|s| s.trim().to_string()).collect();
                cfg.select(&list)?;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.json = json.or(cfg.json);
            cfg.csv = csv.or(cfg.csv);
            cfg.timing |= timing;
            let run = run_suite(&cfg)?;
            for r in run.reports.iter() {
                say(&format!("{} {}\n", if r.pass { "PASS" } else { "FAIL" }, r.name));
            }
            let failed = run.reports.iter().filter(|r| !r.pass).count();
            say(&format!("{} checks, {} failed\n", run.reports.len(), failed));
            if failed == 0 {
                Ok(())
            } else {
                Err(Fail::Check)
            }
        }
        Cmd::Describe { topic } => match describe::describe(&topic) {
            Some(t) => {
                say(&t);
                Ok(())
            }
            None => Err(Fail::Input(format!("unknown topic {topic:?}; topics:\n{}", describe::topic_list()))),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Check) => ExitCode::from(1),
        Err(Fail::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
