use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pentatrope::automaton::TropicalState;
use pentatrope::dynamics::{Block, MapKind, SignedState};
use pentatrope::experiments::{Config, Experiment, ExperimentReport};
use pentatrope::geometry::{PolygonFile, TwistedPolygon};
use pentatrope::invariants::{relative_drift, resolve_sign_convention, Family, InvariantId, InvariantTable, SignConvention};
use pentatrope::sampling::DEFAULT_SEED;

mod orbit;

use orbit::{Format, InitFile, Orbit, OrbitRequest};

#[derive(Parser)]
#[command(name = "pentatrope", version, about = "Pentagram map, its max-plus automaton, and numerical checks")]
struct Cli {
    /// JSON file overriding tolerances and the sign convention.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate one of the maps and write the orbit.
    Orbit {
        #[arg(long, value_parser = parse_map)]
        map: MapKind,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        steps: usize,
        /// Semiring parameter for phi_t.
        #[arg(long)]
        t: Option<f64>,
        /// JSON initial state: {"z": [..], "w": [..]} or {"x": [..], "y": [..]}.
        #[arg(long, conflicts_with = "seed")]
        init: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: Format,
    },
    /// Evaluate the conserved quantities along a JSON-lines orbit.
    Invariants {
        #[arg(long)]
        orbit: PathBuf,
        /// Which map produced a coordinate orbit.
        #[arg(long, value_enum, default_value = "t")]
        map: CoordinateMap,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterate the geometric pentagram construction on a polygon file.
    Polygon {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        steps: usize,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run experiments and write their JSON reports.
    Verify {
        which: Which,
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CoordinateMap {
    T,
    F,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Lemma21,
    Thm22,
    Prop33,
    Thm23,
    Crosschecks,
    Conjugacy,
    Conservation,
    Tropical,
    All,
}

fn parse_map(s: &str) -> Result<MapKind, String> {
    match s {
        "T" | "t" => Ok(MapKind::T),
        "F" | "f" => Ok(MapKind::F),
        "phi" => Ok(MapKind::Phi),
        "phi_t" => Ok(MapKind::PhiT),
        _ => Err(format!("unknown map {s:?}; expected T, F, phi or phi_t")),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("cannot parse {}", path.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn convention(config: &Config, n: usize) -> Result<SignConvention> {
    match config.sign_convention {
        Some(c) => Ok(c),
        None => Ok(resolve_sign_convention(n, DEFAULT_SEED)?),
    }
}

fn invariants_csv(orbit: &Orbit, map: CoordinateMap, config: &Config, out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "name", "value", "drift"])?;
    match orbit {
        Orbit::Coordinates(states) => {
            let n = states[0].n();
            let table = InvariantTable::new(n, convention(config, n)?)?;
            // F orbits become T orbits after negating z
            let as_t = |s: &SignedState| match map {
                CoordinateMap::T => s.clone(),
                CoordinateMap::F => s.sign_conjugate(Block::Z),
            };
            let start: Vec<(f64, f64)> = table.ids().map(|id| table.eval_with_scale(id, &as_t(&states[0]))).collect::<Result<_, _>>()?;
            for (step, s) in states.iter().enumerate() {
                for (id, first) in table.ids().zip(&start) {
                    let now = table.eval_with_scale(id, &as_t(s))?;
                    w.serialize((step, id.to_string(), now.0, relative_drift(*first, now)))?;
                }
            }
        }
        Orbit::Real(states) => tropical_rows(states, &mut w)?,
        Orbit::Exact(states) => tropical_rows(&states.iter().map(TropicalState::to_f64).collect::<Vec<_>>(), &mut w)?,
    }
    w.flush()?;
    Ok(())
}

/// `trop_O_k`, `trop_E_k` (max over all monomials) and the two signed halves
/// of `trop_E_k`; drift is the absolute change from step 0.
fn tropical_rows(states: &[TropicalState<f64>], w: &mut csv::Writer<&mut dyn Write>) -> Result<()> {
    let table = InvariantTable::new(states[0].n(), SignConvention::CONSERVED)?;
    let values = |s: &TropicalState<f64>| -> Result<Vec<(String, Option<f64>)>> {
        let mut out = Vec::new();
        for id in table.ids() {
            out.push((format!("trop_{id}"), Some(table.tropical(id, s)?)));
        }
        for k in 1..=table.n() / 2 {
            let id = InvariantId { family: Family::E, k };
            let (plus, minus) = table.tropical_pm(id, s)?;
            out.push((format!("trop_{id}(+1)"), plus));
            out.push((format!("trop_{id}(-1)"), minus));
        }
        Ok(out)
    };
    let start = values(&states[0])?;
    for (step, s) in states.iter().enumerate() {
        for ((name, v), (_, v0)) in values(s)?.into_iter().zip(&start) {
            let drift = v.zip(*v0).map(|(a, b)| (a - b).abs());
            w.serialize((step, name, v, drift))?;
        }
    }
    Ok(())
}

fn polygon_csv(poly: TwistedPolygon, steps: usize, out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "i", "x", "y"])?;
    let mut cur = poly;
    for step in 0..=steps {
        for (i, v) in cur.base_vertices().iter().enumerate() {
            // a vertex on the line at infinity has empty affine coordinates
            let (x, y) = v.to_affine().map_or((None, None), |(x, y)| (Some(x), Some(y)));
            w.serialize((step, i, x, y))?;
        }
        if step < steps {
            cur = cur.pentagram_step().with_context(|| format!("pentagram step {} failed", step + 1))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn verify(which: Which, ns: &[usize], seed: u64, config: &Config, report: &Path) -> Result<bool> {
    let experiments: Vec<Experiment> = match which {
        Which::All => Experiment::ALL.to_vec(),
        Which::Lemma21 => vec![Experiment::Lemma21],
        Which::Thm22 => vec![Experiment::Thm22],
        Which::Prop33 => vec![Experiment::Prop33],
        Which::Thm23 => vec![Experiment::Thm23],
        Which::Crosschecks => vec![Experiment::Crosschecks],
        Which::Conjugacy => vec![Experiment::Conjugacy],
        Which::Conservation => vec![Experiment::Conservation],
        Which::Tropical => vec![Experiment::Tropical],
    };
    if let Some(bad) = ns.iter().find(|&&n| n < 5) {
        bail!("--n {bad}: polygons need at least 5 vertices");
    }
    let mut reports: Vec<ExperimentReport> = Vec::new();
    for e in experiments {
        let sizes = if ns.is_empty() { e.default_ns() } else { ns.to_vec() };
        for r in e.run(&sizes, seed, config) {
            eprintln!(
                "{} {}: max_observed {:e}, bound {:e} ({} samples, {} ms)",
                if r.pass { "PASS" } else { "FAIL" },
                r.name,
                r.max_observed,
                r.bound,
                r.samples,
                r.runtime_ms
            );
            reports.push(r);
        }
    }
    let mut out = output(Some(report))?;
    serde_json::to_writer_pretty(&mut out, &reports)?;
    writeln!(out)?;
    out.flush()?;
    Ok(reports.iter().all(|r| r.pass))
}

fn run(cli: Cli) -> Result<bool> {
    let config: Config = match &cli.config {
        Some(path) => read_json(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Orbit { map, n, steps, t, init, seed, out, format } => {
            let init: Option<InitFile> = init.as_deref().map(read_json).transpose()?;
            let run = orbit::compute(OrbitRequest { map, n, steps, t, init, seed: seed.unwrap_or(DEFAULT_SEED) })?;
            let mut w = output(Some(&out))?;
            orbit::write(&run.orbit, format, &mut w)?;
            w.flush()?;
            if let Some(e) = run.error {
                bail!("{e} (states up to the failure were written)");
            }
            Ok(true)
        }
        Command::Invariants { orbit: path, map, out } => {
            let file = File::open(&path).with_context(|| format!("cannot open {}", path.display()))?;
            let orbit = orbit::read_jsonl(BufReader::new(file))?;
            let mut w = output(out.as_deref())?;
            invariants_csv(&orbit, map, &config, &mut w)?;
            w.flush()?;
            Ok(true)
        }
        Command::Polygon { input, steps, out } => {
            let poly = TwistedPolygon::try_from(read_json::<PolygonFile>(&input)?)?;
            let mut w = output(out.as_deref())?;
            polygon_csv(poly, steps, &mut w)?;
            w.flush()?;
            Ok(true)
        }
        Command::Verify { which, n, seed, report } => verify(which, &n, seed, &config, &report),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
