//! Orbit generation and the on-disk orbit formats.
//!
//! JSON lines: one `{"step", "z", "w"}` (coordinate maps) or
//! `{"step", "x", "y"}` (automaton) object per line. CSV: a header
//! `step,z_0..z_{n-1},w_0..w_{n-1}` (or `x_*`, `y_*`) and one row per step.

use std::io::{BufRead, Write};

use anyhow::{bail, ensure, Context, Result};
use pentatrope::automaton::{orbit_phi, orbit_phi_t, TropicalRecord, TropicalState};
use pentatrope::dynamics::{orbit_f, orbit_t, CoordinateRecord, MapKind, PositiveState, SignedState};
use pentatrope::sampling::{integer_state, positive_state, real_state, trial_rng};
use pentatrope::tropical::{Scalar, SemiringParam};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

/// Initial data as read from `--init`: `{"z": [..], "w": [..]}` or
/// `{"x": [..], "y": [..]}`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum InitFile {
    Coordinates { z: Vec<f64>, w: Vec<f64> },
    Tropical { x: Vec<Value>, y: Vec<Value> },
}

/// A computed orbit; integral automaton data stays exact.
#[derive(Debug, Clone, PartialEq)]
pub enum Orbit {
    Coordinates(Vec<SignedState>),
    Exact(Vec<TropicalState<i64>>),
    Real(Vec<TropicalState<f64>>),
}

/// Either a full orbit, or the part computed before a singular step.
pub struct OrbitRun {
    pub orbit: Orbit,
    pub error: Option<String>,
}

fn as_integers(v: &[Value]) -> Option<Vec<i64>> {
    v.iter().map(Value::as_i64).collect()
}

fn as_reals(v: &[Value]) -> Result<Vec<f64>> {
    v.iter().map(|x| x.as_f64().with_context(|| format!("not a number: {x}"))).collect()
}

pub struct OrbitRequest {
    pub map: MapKind,
    pub n: Option<usize>,
    pub steps: usize,
    pub t: Option<f64>,
    pub init: Option<InitFile>,
    pub seed: u64,
}

pub fn compute(req: OrbitRequest) -> Result<OrbitRun> {
    ensure!(req.t.is_none() || req.map == MapKind::PhiT, "--t only applies to --map phi_t");
    let check_n = |got: usize| -> Result<()> {
        if let Some(n) = req.n {
            ensure!(n == got, "--n {n} does not match the initial data (n = {got})");
        }
        Ok(())
    };
    let n = || req.n.context("--n is required without --init");
    let mut rng = trial_rng(req.seed, 0);
    match req.map {
        MapKind::T | MapKind::F => {
            let (z, w) = match req.init {
                Some(InitFile::Coordinates { z, w }) => (z, w),
                Some(InitFile::Tropical { .. }) => bail!("--map T and F take {{\"z\", \"w\"}} initial data"),
                None if req.map == MapKind::F => {
                    let p = positive_state(&mut rng, n()?, 1.0);
                    (p.z().to_vec(), p.w().to_vec())
                }
                None => {
                    let mut draw = |n| -> Vec<f64> {
                        (0..n).map(|_| rng.gen_range(0.2..1.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect()
                    };
                    (draw(n()?), draw(n()?))
                }
            };
            check_n(z.len())?;
            if req.map == MapKind::F {
                let p = PositiveState::new(z, w)?;
                let states = orbit_f(&p, req.steps).iter().map(PositiveState::to_signed).collect();
                return Ok(OrbitRun { orbit: Orbit::Coordinates(states), error: None });
            }
            let s = SignedState::new(z, w)?;
            Ok(match orbit_t(&s, req.steps) {
                Ok(states) => OrbitRun { orbit: Orbit::Coordinates(states), error: None },
                Err(e) => OrbitRun { error: Some(e.to_string()), orbit: Orbit::Coordinates(e.states) },
            })
        }
        MapKind::Phi | MapKind::PhiT => {
            let init = match req.init {
                Some(InitFile::Tropical { x, y }) => Some((x, y)),
                Some(InitFile::Coordinates { .. }) => bail!("--map phi and phi_t take {{\"x\", \"y\"}} initial data"),
                None => None,
            };
            if req.map == MapKind::Phi {
                let exact = match &init {
                    Some((x, y)) => as_integers(x).zip(as_integers(y)).map(|(x, y)| TropicalState::new(x, y)).transpose()?,
                    None => Some(integer_state(&mut rng, n()?, 10)),
                };
                if let Some(s) = exact {
                    check_n(s.n())?;
                    return Ok(OrbitRun { orbit: Orbit::Exact(orbit_phi(&s, req.steps)), error: None });
                }
            }
            let s = match init {
                Some((x, y)) => TropicalState::new(as_reals(&x)?, as_reals(&y)?)?,
                None => real_state(&mut rng, n()?, 5.0),
            };
            check_n(s.n())?;
            let states = if req.map == MapKind::Phi {
                orbit_phi(&s, req.steps)
            } else {
                let t = SemiringParam::new(req.t.context("--map phi_t needs --t")?)?;
                orbit_phi_t(t, &s, req.steps)
            };
            Ok(OrbitRun { orbit: Orbit::Real(states), error: None })
        }
    }
}

fn header(prefix: [&str; 2], n: usize) -> Vec<String> {
    std::iter::once("step".to_string())
        .chain(prefix.iter().flat_map(|p| (0..n).map(move |i| format!("{p}_{i}"))))
        .collect()
}

fn write_tropical<T: Scalar + Serialize + ToString>(states: &[TropicalState<T>], format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Jsonl => {
            for (step, s) in states.iter().enumerate() {
                let rec = TropicalRecord { step, x: s.x().to_vec(), y: s.y().to_vec() };
                writeln!(out, "{}", serde_json::to_string(&rec)?)?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(header(["x", "y"], states.first().map_or(0, |s| s.n())))?;
            for (step, s) in states.iter().enumerate() {
                let row = std::iter::once(step.to_string()).chain(s.x().iter().chain(s.y()).map(T::to_string));
                w.write_record(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn write(orbit: &Orbit, format: Format, out: &mut dyn Write) -> Result<()> {
    match orbit {
        Orbit::Exact(states) => write_tropical(states, format, out),
        Orbit::Real(states) => write_tropical(states, format, out),
        Orbit::Coordinates(states) => {
            match format {
                Format::Jsonl => {
                    for (step, s) in states.iter().enumerate() {
                        let rec = CoordinateRecord { step, z: s.z().to_vec(), w: s.w().to_vec() };
                        writeln!(out, "{}", serde_json::to_string(&rec)?)?;
                    }
                }
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(out);
                    w.write_record(header(["z", "w"], states.first().map_or(0, SignedState::n)))?;
                    for (step, s) in states.iter().enumerate() {
                        let row = std::iter::once(step.to_string()).chain(s.z().iter().chain(s.w()).map(f64::to_string));
                        w.write_record(row)?;
                    }
                    w.flush()?;
                }
            }
            Ok(())
        }
    }
}

/// Reads a JSON-lines orbit written by [`write`].
pub fn read_jsonl(input: impl BufRead) -> Result<Orbit> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Line {
        Coordinates(CoordinateRecord),
        Tropical(TropicalRecord<f64>),
    }
    let mut coords = Vec::new();
    let mut tropical = Vec::new();
    for (no, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).with_context(|| format!("line {}: not an orbit record", no + 1))?;
        match parsed {
            Line::Coordinates(r) => {
                ensure!(r.step == coords.len(), "line {}: expected step {}", no + 1, coords.len());
                coords.push(SignedState::new(r.z, r.w)?);
            }
            Line::Tropical(r) => {
                ensure!(r.step == tropical.len(), "line {}: expected step {}", no + 1, tropical.len());
                tropical.push(TropicalState::new(r.x, r.y)?);
            }
        }
    }
    match (coords.is_empty(), tropical.is_empty()) {
        (false, true) => Ok(Orbit::Coordinates(coords)),
        (true, false) => Ok(Orbit::Real(tropical)),
        (true, true) => bail!("empty orbit file"),
        (false, false) => bail!("orbit file mixes coordinate and tropical records"),
    }
}
