use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use bipeel::coarse::{default_wing_partitions, PartitionPlan};
use bipeel::gen::erdos_renyi;
use bipeel::{
    build_be_index_with_budget, bup_tip, bup_wing, count_butterflies, oracle_entity_numbers, read_edge_list_file,
    tip_decomposition, verify_hierarchy, wing_decomposition, BipartiteGraph, DecompositionKind, DecompositionResult,
    PeelConfig, VertexSide, DEFAULT_TIP_PARTITIONS,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "bipeel", version, about = "Butterfly counting and tip/wing decomposition of bipartite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count butterflies; optionally write per-entity counts.
    Count {
        #[arg(long)]
        input: PathBuf,
        /// Write per-vertex counts of this side instead of per-edge counts.
        #[arg(long)]
        side: Option<VertexSide>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tip decomposition of one vertex side.
    Tip {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        side: VertexSide,
    },
    /// Wing decomposition of all edges.
    Wing {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare the decompositions against brute-force oracles.
    Verify {
        /// Edge list to check; random graphs are generated when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        graphs: usize,
        #[arg(long, default_value_t = 40)]
        max_side: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        partitions: usize,
        #[arg(long, default_value_t = 2)]
        workers: usize,
    },
    /// Time the two-phase runs over a grid of partition and worker counts.
    Bench {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Vertices per side of the generated graph when no input is given.
        #[arg(long, default_value_t = 400)]
        size: usize,
        #[arg(long, default_value_t = 0.05)]
        density: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 4, 16, 64])]
        partitions: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4])]
        workers: Vec<usize>,
        #[arg(long, default_value = "wing")]
        kind: String,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the graph summary as JSON.
    Info {
        #[arg(long)]
        input: PathBuf,
    },
    /// Write the bloom-edge index, one bloom per line.
    IndexDump {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mem_budget: Option<u64>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    /// Number of coarse partitions (default: 150 for tip, 400 or 1000 for wing).
    #[arg(long)]
    partitions: Option<usize>,
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    /// Run the sequential bottom-up peel instead.
    #[arg(long)]
    baseline: bool,
    #[arg(long)]
    no_batch: bool,
    #[arg(long)]
    no_delete: bool,
    /// θ CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Accepted for reproducible command lines; the decomposition itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Byte budget for the bloom-edge index.
    #[arg(long)]
    mem_budget: Option<u64>,
    #[arg(long)]
    plan_out: Option<PathBuf>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Serialize)]
struct RunReport<'a> {
    kind: DecompositionKind,
    input: &'a Path,
    algorithm: &'static str,
    partitions: usize,
    workers: usize,
    batch: bool,
    dynamic_deletes: bool,
    seed: u64,
    max_number: u64,
    metrics: &'a bipeel::Metrics,
}

fn load(path: &Path) -> Result<BipartiteGraph> {
    read_edge_list_file(path).with_context(|| format!("reading {}", path.display()))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn count(input: &Path, side: Option<VertexSide>, out: Option<&Path>) -> Result<()> {
    let g = load(input)?;
    let c = count_butterflies(&g);
    println!("total={}", c.total);
    if let Some(path) = out {
        let values = match side {
            Some(s) => c.side(&g, s),
            None => c.edge.values.clone(),
        };
        let mut w = sink(Some(path))?;
        writeln!(w, "entity_id,butterflies")?;
        for (i, v) in values.iter().enumerate() {
            writeln!(w, "{i},{v}")?;
        }
        w.flush()?;
    }
    Ok(())
}

fn decompose(run: &RunArgs, kind: DecompositionKind) -> Result<()> {
    let g = load(&run.input)?;
    let partitions = run.partitions.unwrap_or(match kind {
        DecompositionKind::Wing => default_wing_partitions(g.edge_count()),
        DecompositionKind::Tip(_) => DEFAULT_TIP_PARTITIONS,
    });
    let mut cfg = PeelConfig::new(partitions).workers(run.workers);
    cfg.batch = !run.no_batch;
    cfg.dynamic_deletes = !run.no_delete;
    cfg.mem_budget = run.mem_budget;
    cfg.validate()?;

    let (result, plan): (DecompositionResult, Option<PartitionPlan>) = if run.baseline {
        let r = match kind {
            DecompositionKind::Wing => bup_wing(&g, true),
            DecompositionKind::Tip(side) => bup_tip(&g, side),
        };
        (r, None)
    } else {
        let out = match kind {
            DecompositionKind::Wing => wing_decomposition(&g, &cfg)?,
            DecompositionKind::Tip(side) => tip_decomposition(&g, side, &cfg)?,
        };
        (out.result, Some(out.plan))
    };

    let mut w = sink(run.out.as_deref())?;
    result.write_csv(&mut w)?;
    w.flush()?;

    if let Some(path) = &run.metrics {
        let report = RunReport {
            kind,
            input: &run.input,
            algorithm: if run.baseline { "bottom-up" } else { "two-phase" },
            partitions: result.metrics.partitions,
            workers: run.workers,
            batch: cfg.batch,
            dynamic_deletes: cfg.dynamic_deletes,
            seed: run.seed,
            max_number: result.max_number(),
            metrics: &result.metrics,
        };
        let mut m = sink(Some(path))?;
        serde_json::to_writer_pretty(&mut m, &report)?;
        writeln!(m)?;
        m.flush()?;
    }
    match (&run.plan_out, plan) {
        (Some(path), Some(plan)) => {
            let mut json = sink(Some(&path.with_extension("json")))?;
            plan.write_json(&mut json)?;
            json.flush()?;
            let mut csv = sink(Some(&path.with_extension("csv")))?;
            plan.write_csv(&mut csv)?;
            csv.flush()?;
        }
        (Some(_), None) => bail!("--plan-out needs the two-phase algorithm"),
        _ => {}
    }
    Ok(())
}

const KINDS: [DecompositionKind; 3] =
    [DecompositionKind::Wing, DecompositionKind::Tip(VertexSide::U), DecompositionKind::Tip(VertexSide::V)];

/// Returns the number of failed checks on `g`.
fn verify_one(label: &str, g: &BipartiteGraph, cfg: &PeelConfig) -> Result<usize> {
    let mut failed = 0;
    for kind in KINDS {
        let oracle = oracle_entity_numbers(g, kind)?;
        let (base, two) = match kind {
            DecompositionKind::Wing => (bup_wing(g, true), wing_decomposition(g, cfg)?),
            DecompositionKind::Tip(side) => (bup_tip(g, side), tip_decomposition(g, side, cfg)?),
        };
        let hierarchy = verify_hierarchy(g, &two.result.entity_numbers, kind)?;
        let checks = [
            ("baseline", base.entity_numbers == oracle),
            ("two-phase", two.result.entity_numbers == oracle),
            ("ranges", two.plan.ranges_hold(&oracle)),
            ("hierarchy", hierarchy.all_passed()),
        ];
        for (name, ok) in checks {
            if !ok {
                failed += 1;
                println!("FAIL {label} {kind:?} {name}");
            }
        }
    }
    Ok(failed)
}

fn verify(
    input: Option<&Path>,
    graphs: usize,
    max_side: usize,
    seed: u64,
    partitions: usize,
    workers: usize,
) -> Result<()> {
    let cfg = PeelConfig::new(partitions).workers(workers);
    cfg.validate()?;
    let mut failed = 0;
    let mut checked = 0;
    if let Some(path) = input {
        failed += verify_one(&path.display().to_string(), &load(path)?, &cfg)?;
        checked += 1;
    } else {
        if max_side < 2 {
            bail!("--max-side must be at least 2");
        }
        for i in 0..graphs as u64 {
            let s = seed.wrapping_mul(0x9e37_79b9).wrapping_add(i);
            let nu = 2 + (s % (max_side as u64 - 1)) as usize;
            let nv = 2 + (s / 7 % (max_side as u64 - 1)) as usize;
            let p = [0.05, 0.1, 0.2, 0.3, 0.5][(i % 5) as usize];
            let g = erdos_renyi(nu, nv, p, s)?;
            failed += verify_one(&format!("#{i} {nu}x{nv} p={p}"), &g, &cfg)?;
            checked += 1;
        }
    }
    println!("checked {checked} graphs, {failed} failures");
    if failed > 0 {
        bail!("{failed} verification checks failed");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench(
    input: Option<&Path>,
    size: usize,
    density: f64,
    seed: u64,
    partitions: &[usize],
    workers: &[usize],
    kind: &str,
    repeats: usize,
    out: Option<&Path>,
) -> Result<()> {
    let g = match input {
        Some(p) => load(p)?,
        None => erdos_renyi(size, size, density, seed)?,
    };
    let kind = match kind {
        "wing" => DecompositionKind::Wing,
        "tip-u" => DecompositionKind::Tip(VertexSide::U),
        "tip-v" => DecompositionKind::Tip(VertexSide::V),
        other => bail!("unknown kind {other:?}; expected wing, tip-u or tip-v"),
    };
    let mut w = sink(out)?;
    writeln!(w, "algorithm,partitions,workers,repeat,seconds,rho,support_updates,wedges_traversed")?;
    for r in 0..repeats.max(1) {
        let t = Instant::now();
        let base = match kind {
            DecompositionKind::Wing => bup_wing(&g, true),
            DecompositionKind::Tip(side) => bup_tip(&g, side),
        };
        let secs = t.elapsed().as_secs_f64();
        let m = &base.metrics;
        writeln!(w, "bottom-up,0,1,{r},{secs:.6},{},{},{}", m.iterations_rho, m.support_updates, m.wedges_traversed)?;
        for &p in partitions {
            for &t in workers {
                let cfg = PeelConfig::new(p).workers(t);
                let out = match kind {
                    DecompositionKind::Wing => wing_decomposition(&g, &cfg)?,
                    DecompositionKind::Tip(side) => tip_decomposition(&g, side, &cfg)?,
                };
                let m = &out.result.metrics;
                writeln!(
                    w,
                    "two-phase,{p},{t},{r},{:.6},{},{},{}",
                    m.wall_time_secs, m.iterations_rho, m.support_updates, m.wedges_traversed
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn index_dump(input: &Path, out: Option<&Path>, budget: Option<u64>) -> Result<()> {
    let g = load(input)?;
    let index = build_be_index_with_budget(&g, budget)?;
    let mut w = sink(out)?;
    index.dump(&mut w)?;
    w.flush()?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Count { input, side, out } => count(&input, side, out.as_deref()),
        Command::Tip { run, side } => decompose(&run, DecompositionKind::Tip(side)),
        Command::Wing { run } => decompose(&run, DecompositionKind::Wing),
        Command::Verify { input, graphs, max_side, seed, partitions, workers } => {
            verify(input.as_deref(), graphs, max_side, seed, partitions, workers)
        }
        Command::Bench { input, size, density, seed, partitions, workers, kind, repeats, out } => bench(
            input.as_deref(),
            size,
            density,
            seed,
            &partitions,
            &workers,
            &kind,
            repeats,
            out.as_deref(),
        ),
        Command::Info { input } => {
            let g = load(&input)?;
            println!("{}", serde_json::to_string_pretty(&g.summary())?);
            Ok(())
        }
        Command::IndexDump { input, out, mem_budget } => index_dump(&input, out.as_deref(), mem_budget),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
