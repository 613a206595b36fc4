use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use shiftbench_core::harness::{
    read_regions, read_root_trace, write_page_trace, write_regions, write_root_trace, write_series,
    RESULTS_HEADER,
};
use shiftbench_core::objectbase::write_graph;
use shiftbench_core::{
    analyze_trace, emit_results, generate_database, run_on_graph, sweep_h, DependencyProtocol,
    Error, ExperimentConfig, PolicyKind, RegionalProtocol, RunOptions,
};

#[derive(Parser)]
#[command(
    name = "shiftbench",
    version,
    about = "Object-store workload dynamics benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the object database and dump it as text.
    Generate(Common),
    /// Run a single experiment.
    Run(Common),
    /// Sweep the change rate H across policies.
    Sweep(Common),
    /// Emit the root-selection trace of a run.
    Trace(Common),
    /// Compute hot-region statistics of a root trace.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Workload seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Clustering policy, or a comma-separated list for `sweep`.
    #[arg(long)]
    policy: Option<String>,
    /// Regional protocol: moving, gradual or cycles.
    #[arg(long)]
    protocol: Option<String>,
    /// Dependency protocol: random, by-reference, traversed or same-class.
    #[arg(long)]
    dependency: Option<String>,
    /// Comma-separated change rates; a single value outside `sweep`.
    #[arg(long)]
    h: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write the page-event trace (`run` only).
    #[arg(long)]
    trace_pages: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Root trace CSV written by `trace`.
    #[arg(long)]
    trace: PathBuf,
    /// Region sidecar; defaults to regions.csv next to the trace.
    #[arg(long)]
    regions: Option<PathBuf>,
    /// Expected hot-region size as a fraction of the database.
    #[arg(long, default_value_t = 0.003)]
    hr_size: f64,
    /// Allowed deviation of the hot share.
    #[arg(long, default_value_t = 0.02)]
    tolerance: f64,
}

fn config_error(field: &str, message: String) -> anyhow::Error {
    Error::Config {
        field: field.into(),
        message,
    }
    .into()
}

fn parse_policies(s: &str) -> anyhow::Result<Vec<PolicyKind>> {
    s.split(',')
        .map(|p| {
            PolicyKind::parse(p.trim())
                .ok_or_else(|| config_error("policy", format!("unknown policy {p:?}")))
        })
        .collect()
}

fn parse_h(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| config_error("h", format!("not a number: {v:?}")))
        })
        .collect()
}

type Loaded = (ExperimentConfig, Option<Vec<PolicyKind>>, Option<Vec<f64>>);

/// Loads the config and applies flag overrides, except the list-valued
/// `--policy` and `--h` which are returned for `sweep` to use.
fn load(c: &Common) -> anyhow::Result<Loaded> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
        cfg.sweep.seeds.clear();
    }
    if let Some(p) = &c.protocol {
        cfg.regional.protocol = RegionalProtocol::parse(p)
            .ok_or_else(|| config_error("protocol", format!("unknown protocol {p:?}")))?;
    }
    if let Some(d) = &c.dependency {
        cfg.dependency.protocol = DependencyProtocol::parse(d)
            .ok_or_else(|| config_error("dependency", format!("unknown protocol {d:?}")))?;
    }
    let policies = c.policy.as_deref().map(parse_policies).transpose()?;
    let hs = c.h.as_deref().map(parse_h).transpose()?;
    cfg.validate()?;
    Ok((cfg, policies, hs))
}

/// Applies single-valued `--policy` and `--h` overrides.
fn single(
    mut cfg: ExperimentConfig,
    policies: Option<Vec<PolicyKind>>,
    hs: Option<Vec<f64>>,
) -> anyhow::Result<ExperimentConfig> {
    match policies.as_deref() {
        None => {}
        Some([p]) => cfg.policy.kind = *p,
        Some(_) => return Err(config_error("policy", "expects a single policy".into())),
    }
    match hs.as_deref() {
        None => {}
        Some([h]) => cfg.regional.h = *h,
        Some(_) => return Err(config_error("h", "expects a single value".into())),
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_out(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn generate(c: &Common) -> anyhow::Result<()> {
    let (cfg, _, _) = load(c)?;
    let graph = generate_database(&cfg.db)?;
    create_out(&c.out)?;
    let path = c.out.join("objectbase.txt");
    write_graph(&graph, BufWriter::new(File::create(&path)?))?;
    println!(
        "classes {} objects {} refs {} bytes {} mean_size {:.1}",
        graph.classes().len(),
        graph.len(),
        graph.num_refs(),
        graph.total_bytes(),
        graph.total_bytes() as f64 / graph.len() as f64
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn run(c: &Common) -> anyhow::Result<()> {
    let (cfg, policies, hs) = load(c)?;
    let cfg = single(cfg, policies, hs)?;
    let graph = generate_database(&cfg.db)?;
    let opts = RunOptions {
        record_roots: false,
        record_pages: c.trace_pages,
    };
    let out = run_on_graph(&cfg, &graph, opts)?;
    let m = &out.metrics;
    create_out(&c.out)?;
    let mut w = std::io::BufWriter::new(File::create(c.out.join("run.csv"))?);
    use std::io::Write;
    writeln!(w, "{}", RESULTS_HEADER.join(","))?;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{:.6}",
        cfg.regional.protocol.name(),
        cfg.dependency.protocol.name(),
        cfg.policy.kind.name(),
        cfg.regional.h,
        cfg.seed,
        cfg.num_transactions,
        m.transaction_io,
        m.clustering_io,
        m.total_io,
        m.hit_rate
    )?;
    w.flush()?;
    write_series(m, &c.out.join("series.csv"))?;
    if c.trace_pages {
        write_page_trace(&out.pages, &c.out.join("pages.csv"))?;
    }
    println!(
        "policy {} h {} transaction_io {} clustering_io {} total_io {} hit_rate {:.4} reclusters {} wall {:.2?}",
        cfg.policy.kind.name(),
        cfg.regional.h,
        m.transaction_io,
        m.clustering_io,
        m.total_io,
        m.hit_rate,
        m.reclusters,
        m.wall_time
    );
    Ok(())
}

fn sweep(c: &Common) -> anyhow::Result<()> {
    let (cfg, policies, hs) = load(c)?;
    let policies = policies.unwrap_or_else(|| cfg.sweep.policies.clone());
    let hs = hs.unwrap_or_else(|| cfg.sweep.h_values.clone());
    let rows = sweep_h(&cfg, &hs, &policies)?;
    for path in emit_results(&rows, &c.out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn trace(c: &Common) -> anyhow::Result<()> {
    let (cfg, policies, hs) = load(c)?;
    let cfg = single(cfg, policies, hs)?;
    let graph = generate_database(&cfg.db)?;
    let opts = RunOptions {
        record_roots: true,
        record_pages: c.trace_pages,
    };
    let out = run_on_graph(&cfg, &graph, opts)?;
    create_out(&c.out)?;
    write_root_trace(&out.roots, &c.out.join("roots.csv"))?;
    write_regions(&out.regions, &c.out.join("regions.csv"))?;
    if c.trace_pages {
        write_page_trace(&out.pages, &c.out.join("pages.csv"))?;
    }
    println!(
        "wrote {} roots to {}",
        out.roots.len(),
        c.out.join("roots.csv").display()
    );
    Ok(())
}

fn analyze(a: &AnalyzeArgs) -> anyhow::Result<()> {
    let regions_path = match &a.regions {
        Some(p) => p.clone(),
        None => a.trace.with_file_name("regions.csv"),
    };
    let records = read_root_trace(&a.trace)?;
    let regions = read_regions(&regions_path)?;
    if !(a.hr_size > 0.0 && a.hr_size <= 1.0) {
        bail!(config_error("hr_size", "must be in (0, 1]".into()));
    }
    let s = analyze_trace(&records, &regions)?;
    println!("roots {}", s.total);
    println!("regions {}", s.counts.len());
    println!("hot_regions {:?}", s.hot_regions);
    println!("hot_size {:.6}", s.hot_size);
    println!("hot_share {:.4}", s.hot_share);
    println!("expected_share {:.4}", s.expected_share);
    println!(
        "chi_square {:.3} df {}",
        s.chi_square(),
        s.degrees_of_freedom()
    );
    println!(
        "{}",
        if s.passes(a.hr_size, a.tolerance) {
            "PASS"
        } else {
            "FAIL"
        }
    );
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_config() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(c) => generate(c),
        Command::Run(c) => run(c),
        Command::Sweep(c) => sweep(c),
        Command::Trace(c) => trace(c),
        Command::Analyze(a) => analyze(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
