//! `urm`: offline sweeps, POD, online solves, benchmarks and convergence
//! studies for the unfitted reduced-order pipeline.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use urm::rom::{evaluate, solve_at, EvaluationOptions, ReducedModel};
use urm::scenario::{Extension, Scenario, ScenarioConfig, ScenarioId};
use urm::snapshots::{run_raw_sweep, run_sweep, test_set, training_set, SnapshotSet};
use urm::studies;
use urm::Error;

#[derive(Parser)]
#[command(
    name = "urm",
    version,
    about = "Reduced-order models on unfitted finite element discretizations"
)]
struct Cli {
    /// Worker threads (falls back to URM_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full-order training sweep and write a snapshot store.
    Offline {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Write all four {zero, smooth} x {plain, transport} variants from one sweep.
        #[arg(long)]
        grid: bool,
    },
    /// Build POD bases (and supremizers) from a snapshot store.
    Pod {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Modes to keep; defaults to the largest configured mode count.
        #[arg(long)]
        modes: Option<usize>,
        /// Inner product: euclidean or mass.
        #[arg(long)]
        inner: Option<String>,
        /// Treat `store` as the output of `offline --grid`.
        #[arg(long)]
        grid: bool,
    },
    /// Reduced solve at one parameter (field dump) or over the test set (report).
    Online {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated parameter vector.
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<String>,
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<usize>>,
        #[arg(long)]
        n_test: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        /// Stokes: do not enrich the velocity basis with supremizers.
        #[arg(long)]
        no_supremizers: bool,
    },
    /// Sweep, POD and test-set evaluation in one run, with timings.
    Benchmark {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full-order verification: mesh refinement, patch tests, sliver conditioning.
    Convergence {
        /// sbm, cutfem or all.
        #[arg(long, default_value = "all")]
        method: String,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        #[arg(long)]
        patch: bool,
        #[arg(long)]
        sliver: bool,
        /// Output directory; tables go to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration; keys not given take the scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// zero or smooth.
    #[arg(long)]
    extension: Option<String>,
    #[arg(long)]
    transport: Option<bool>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> urm::Result<ScenarioConfig> {
        let mut obj = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                match serde_json::from_str(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => return Err(Error::Config("config must be a JSON object".into())),
                    Err(e) => {
                        return Err(Error::Config(format!(
                            "invalid JSON in {}: {e}",
                            path.display()
                        )))
                    }
                }
            }
            None => serde_json::Map::new(),
        };
        let mut set = |k: &str, v: Value| {
            obj.insert(k.to_string(), v);
        };
        if let Some(s) = &self.scenario {
            set("scenario", s.clone().into());
        }
        if let Some(m) = &self.modes {
            set("modes", m.clone().into());
        }
        if let Some(s) = self.seed {
            set("seed", s.into());
        }
        if let Some(e) = &self.extension {
            set("extension", e.clone().into());
        }
        if let Some(t) = self.transport {
            set("transport", t.into());
        }
        for (k, v) in [
            ("n_train", self.n_train),
            ("n_test", self.n_test),
            ("nx", self.nx),
            ("ny", self.ny),
            ("repeats", self.repeats),
        ] {
            if let Some(v) = v {
                set(k, v.into());
            }
        }
        ScenarioConfig::from_json(&Value::Object(obj).to_string())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Format(_)
        | Error::InvalidArgument(_)
        | Error::UnsupportedTransport(_)
        | Error::Io(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("URM_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: Command) -> urm::Result<()> {
    match cmd {
        Command::Offline { config, out, grid } => offline(config.resolve()?, &out, grid),
        Command::Pod {
            store,
            out,
            modes,
            inner,
            grid,
        } => {
            if grid {
                pod_grid(&store, &out, modes, inner.as_deref())
            } else {
                pod_one(&store, &out, modes, inner.as_deref()).map(|_| ())
            }
        }
        Command::Online {
            basis,
            out,
            mu,
            modes,
            n_test,
            repeats,
            no_supremizers,
        } => online(
            &basis,
            &out,
            mu.as_deref(),
            modes,
            n_test,
            repeats,
            no_supremizers,
        ),
        Command::Benchmark { config, out } => benchmark(config.resolve()?, &out),
        Command::Convergence {
            method,
            levels,
            patch,
            sliver,
            out,
        } => convergence(&method, levels, patch, sliver, out.as_deref()),
    }
}

/// Variant directories written by `offline --grid`.
const GRID: [(&str, Extension, bool); 4] = [
    ("zero-plain", Extension::Zero, false),
    ("zero-transport", Extension::Zero, true),
    ("smooth-plain", Extension::Smooth, false),
    ("smooth-transport", Extension::Smooth, true),
];

fn log_times(params: &[Vec<f64>], secs: &[f64]) {
    for (mu, s) in params.iter().zip(secs) {
        log::info!("mu={mu:?} fom {s:.4}s");
    }
}

fn offline(cfg: ScenarioConfig, out: &Path, grid: bool) -> urm::Result<()> {
    let scenario = Scenario::new(cfg)?;
    let params = training_set(&scenario.config)?;
    log::info!(
        "{}: {} full-order solves on {} vertices",
        scenario.id().as_str(),
        params.len(),
        scenario.n_h()
    );
    if grid {
        let raw = run_raw_sweep(&scenario, &params);
        if raw.params.is_empty() {
            return Err(Error::SolverFailure {
                reason: "every snapshot solve failed".into(),
                residual: f64::NAN,
            });
        }
        log_times(&raw.params, &raw.fom_seconds);
        for (name, ext, transport) in GRID {
            if transport {
                scenario.transport_map(&scenario.config.reference)?;
            }
            raw.finish(&scenario, ext, transport)?
                .save(&out.join(name))?;
        }
        println!(
            "wrote {} snapshots x 4 variants to {}",
            raw.params.len(),
            out.display()
        );
    } else {
        let set = run_sweep(&scenario, &params)?;
        log_times(&set.params, &set.fom_seconds);
        set.save(out)?;
        println!("wrote {} snapshots to {}", set.n_s(), out.display());
    }
    Ok(())
}

fn pod_one(
    store: &Path,
    out: &Path,
    modes: Option<usize>,
    inner: Option<&str>,
) -> urm::Result<ReducedModel> {
    let mut set = SnapshotSet::load(store)?;
    if let Some(i) = inner {
        set.config.inner = serde_json::from_value(Value::String(i.into()))
            .map_err(|_| Error::Config(format!("unknown inner product '{i}'")))?;
    }
    let scenario = Scenario::new(set.config.clone())?;
    let n = modes.unwrap_or_else(|| {
        set.config
            .modes
            .iter()
            .copied()
            .max()
            .unwrap_or(1)
            .min(set.n_s())
    });
    let model = ReducedModel::build(&scenario, &set, n)?;
    model.save(out)?;
    println!("wrote {n} modes per block to {}", out.display());
    Ok(model)
}

fn pod_grid(
    store: &Path,
    out: &Path,
    modes: Option<usize>,
    inner: Option<&str>,
) -> urm::Result<()> {
    let mut models = Vec::new();
    for (name, _, _) in GRID {
        let dir = store.join(name);
        if dir.is_dir() {
            models.push((name, pod_one(&dir, &out.join(name), modes, inner)?));
        }
    }
    if models.is_empty() {
        return Err(Error::Format(format!(
            "{} holds no grid variants",
            store.display()
        )));
    }
    let mut header = String::from("index");
    let mut cols: Vec<&[f64]> = Vec::new();
    for (name, m) in &models {
        for b in &m.blocks {
            let _ = write!(header, ",{name}.{}", b.name);
            cols.push(&b.pod.eigenvalues);
        }
    }
    let mut csv = header + "\n";
    for i in 0..cols.iter().map(|c| c.len()).max().unwrap_or(0) {
        let _ = write!(csv, "{}", i + 1);
        for c in &cols {
            match c.get(i) {
                Some(v) => {
                    let _ = write!(csv, ",{v:.17e}");
                }
                None => csv.push(','),
            }
        }
        csv.push('\n');
    }
    fs::write(out.join("decay.csv"), csv)?;
    println!(
        "wrote {} decay curves to {}",
        cols.len(),
        out.join("decay.csv").display()
    );
    Ok(())
}

fn field_names(id: ScenarioId) -> &'static [&'static str] {
    match id {
        ScenarioId::Heat => &["T"],
        ScenarioId::Ellipse => &["u"],
        ScenarioId::Stokes1p | ScenarioId::Stokes2p => &["ux", "uy", "p"],
    }
}

fn parse_mu(s: &str) -> urm::Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad parameter value '{x}': {e}")))
        })
        .collect()
}

fn online(
    basis_dir: &Path,
    out: &Path,
    mu: Option<&str>,
    modes: Option<Vec<usize>>,
    n_test: Option<usize>,
    repeats: Option<usize>,
    no_supremizers: bool,
) -> urm::Result<()> {
    let model = ReducedModel::load(basis_dir)?;
    let mut cfg = model.config.clone();
    if let Some(n) = n_test {
        cfg.n_test = n;
    }
    if let Some(r) = repeats {
        cfg.repeats = r;
    }
    cfg.validate()?;
    let scenario = Scenario::new(cfg)?;
    let enrich = scenario.id().is_stokes() && model.supremizers.is_some() && !no_supremizers;
    let max = model.max_modes();
    fs::create_dir_all(out)?;

    if let Some(mu) = mu {
        let mu = parse_mu(mu)?;
        if mu.len() != scenario.id().dim() {
            return Err(Error::Config(format!(
                "{} takes {} parameters",
                scenario.id().as_str(),
                scenario.id().dim()
            )));
        }
        let n = modes.and_then(|m| m.into_iter().max()).unwrap_or(max);
        let basis = model.state_basis(&scenario, n, enrich)?;
        let rom = solve_at(&scenario, &basis, &mu)?;
        let fom = scenario.solve(&mu)?;
        let n_h = scenario.n_h();
        let names = field_names(scenario.id());
        let mut csv = String::from("x,y,active");
        for f in names {
            let _ = write!(csv, ",{f}_rom");
        }
        for f in names {
            let _ = write!(csv, ",{f}_fom");
        }
        csv.push('\n');
        let active = fom.discretization.active();
        for (v, p) in scenario.mesh.vertices.iter().enumerate() {
            let _ = write!(csv, "{:?},{:?},{}", p.x, p.y, u8::from(active[v]));
            for state in [&rom.state, &fom.state] {
                for k in 0..names.len() {
                    let _ = write!(csv, ",{:?}", state[k * n_h + v]);
                }
            }
            csv.push('\n');
        }
        fs::write(out.join("field.csv"), csv)?;
        let err: f64 = fom
            .state
            .iter()
            .zip(&rom.state)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = fom.state.iter().map(|a| a * a).sum::<f64>().sqrt();
        println!(
            "mu={mu:?} modes={n} relative error vs full order {:.3e}",
            err / norm.max(f64::MIN_POSITIVE)
        );
        println!("wrote {}", out.join("field.csv").display());
        return Ok(());
    }

    let wanted = modes.unwrap_or_else(|| scenario.config.modes.clone());
    let (keep, drop): (Vec<usize>, Vec<usize>) = wanted.into_iter().partition(|&n| n <= max);
    if !drop.is_empty() {
        log::warn!("basis holds {max} modes; skipping mode counts {drop:?}");
    }
    if keep.is_empty() {
        return Err(Error::Config(format!(
            "no requested mode count fits the {max}-mode basis"
        )));
    }
    let test = test_set(&scenario.config)?;
    let opts = EvaluationOptions {
        modes: keep,
        repeats: scenario.config.repeats,
        enrich,
    };
    let report = evaluate(&scenario, &model, &test, &opts)?;
    let csv = report.to_csv();
    fs::write(out.join("report.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn benchmark(cfg: ScenarioConfig, out: &Path) -> urm::Result<()> {
    offline(cfg.clone(), &out.join("snapshots"), false)?;
    pod_one(&out.join("snapshots"), &out.join("basis"), None, None)?;
    online(
        &out.join("basis"),
        out,
        None,
        Some(cfg.modes),
        None,
        None,
        !cfg.supremizers,
    )
}

fn convergence(
    method: &str,
    levels: Option<Vec<usize>>,
    patch: bool,
    sliver: bool,
    out: Option<&Path>,
) -> urm::Result<()> {
    let (sbm, cut) = match method {
        "sbm" => (true, false),
        "cutfem" => (false, true),
        "all" => (true, true),
        other => {
            return Err(Error::Config(format!(
                "unknown method '{other}' (sbm, cutfem, all)"
            )))
        }
    };
    let mut table = String::from("method,n,h,l2_error,ratio\n");
    let mut add = |name: &str, rows: Vec<studies::ConvergenceRow>| {
        for r in rows {
            let ratio = r.ratio.map(|x| format!("{x:.6}")).unwrap_or_default();
            let _ = writeln!(
                table,
                "{name},{},{:.10e},{:.10e},{ratio}",
                r.n, r.h, r.l2_error
            );
        }
    };
    if sbm {
        add(
            "sbm",
            studies::sbm_convergence(levels.as_deref().unwrap_or(&[32, 64, 128]))?,
        );
    }
    if cut {
        add(
            "cutfem",
            studies::cutfem_convergence(levels.as_deref().unwrap_or(&[24, 48, 96]))?,
        );
    }
    let mut outputs = vec![("convergence.csv", table)];
    if patch {
        let mut t = String::from("case,max_error\n");
        for r in studies::patch_tests()? {
            let _ = writeln!(t, "\"{}\",{:.6e}", r.name, r.max_error);
        }
        outputs.push(("patch.csv", t));
    }
    if sliver {
        let mut t = String::from("offset,min_fraction,gamma_1,condition,cg_iterations\n");
        for &o in studies::SLIVER_SWEEP
            .iter()
            .chain([studies::SLIVER_EXTREME].iter())
        {
            for g in [0.1, 0.0] {
                let c = studies::sliver_case(o, g)?;
                let it = c.cg_iterations.map(|i| i.to_string()).unwrap_or_default();
                let _ = writeln!(
                    t,
                    "{:.6e},{:.6e},{},{:.6e},{it}",
                    c.offset, c.min_fraction, c.gamma_1, c.condition
                );
            }
        }
        outputs.push(("sliver.csv", t));
    }
    for (name, text) in outputs {
        match out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(name), text)?;
                println!("wrote {}", dir.join(name).display());
            }
            None => print!("{text}"),
        }
    }
    Ok(())
}
