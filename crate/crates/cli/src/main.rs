//! `mmrisk`: validate models, run the analytic pipeline, simulate, and
//! compare the two.
//!
//! Exit codes: 0 success, 2 schema error or bad flag, 3 model or
//! precondition failure, 4 pipeline failure, 5 analytic/simulation mismatch.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use mmrisk::factorization::{factorize, integer_denominator, RuinFactorization};
use mmrisk::linalg::Mat;
use mmrisk::model::{validate_spec, ProcessSpec, ValidatedModel};
use mmrisk::montecarlo::{self, format_sig, SimConfig, SimEstimate};
use mmrisk::overshoot::{self, OvershootKind, OvershootTails};
use mmrisk::spectral::{lundberg_bounds, lundberg_certificate};
use mmrisk::transforms::CumulantDomain;
use mmrisk::Error;

#[derive(Parser)]
#[command(name = "mmrisk", version, about = "Ruin and overshoot analysis for Markov-modulated jump processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model file.
    Validate {
        model: PathBuf,
    },
    /// Ruin probabilities, Lundberg bounds and overshoot tails.
    Analyze(AnalyzeArgs),
    /// Monte Carlo estimates of ruin and passage probabilities.
    Simulate(SimulateArgs),
    /// Check every analytic output against simulation.
    Compare(CompareArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    model: PathBuf,
    /// Initial capital grid `start:end:step`.
    #[arg(long, default_value = "0:20:1")]
    u_grid: Grid,
    /// Overshoot grid `start:end:step`.
    #[arg(long, default_value = "0:2:0.5")]
    z_grid: Grid,
    /// Ruin CSV path; the overshoot CSV and JSON sidecar are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    model: PathBuf,
    /// Level for the ruin estimate.
    #[arg(long, default_value_t = 1.0)]
    u: f64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    paths: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 500.0)]
    t_max: f64,
    /// Also sample passages over this level.
    #[arg(long)]
    level_x: Option<f64>,
    /// Initial state (1-based); all states when omitted.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    state: Option<u64>,
    /// Raw passage samples (requires --level-x and a single state).
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    model: PathBuf,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    paths: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 500.0)]
    t_max: f64,
    /// Level for the ruin checks.
    #[arg(long, default_value_t = 1.0)]
    u: f64,
    /// Overshoot levels, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1")]
    z: Vec<f64>,
    /// Largest admissible |z-score|.
    #[arg(long, default_value_t = 3.0)]
    threshold: f64,
    /// Perturbs the analytic psi_1(u) (comparator self-test).
    #[arg(long, default_value_t = 0.0, hide = true)]
    tamper: f64,
}

#[derive(Clone, Debug)]
struct Grid {
    spec: String,
    points: Vec<f64>,
}

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("bad grid {s:?}: {e}"))?;
        let [a, b, step] = parts[..] else {
            return Err(format!("grid {s:?} must look like start:end:step"));
        };
        if !(a.is_finite() && b.is_finite() && step > 0.0 && step.is_finite()) || a < 0.0 || b < a {
            return Err(format!("grid {s:?} is empty or invalid"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        Ok(Grid {
            spec: s.to_string(),
            points: (0..=n).map(|k| a + k as f64 * step).collect(),
        })
    }
}

enum Failure {
    Usage(String),
    Lib(Error),
    Io(String),
    Mismatch,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Lib(e) => match e {
                Error::Schema { .. } | Error::Argument(_) => 2,
                Error::InvalidModel { .. }
                | Error::Drift(_)
                | Error::Domain { .. }
                | Error::NoRoot(_)
                | Error::Unsupported(_) => 3,
                _ => 4,
            },
            Failure::Io(_) => 4,
            Failure::Mismatch => 5,
        }
    }
}

type Outcome = Result<(), Failure>;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

struct Manifest {
    command: &'static str,
    model: String,
    params: Vec<(String, String)>,
    seed: Option<u64>,
    wall_clock: f64,
}

impl Manifest {
    fn new(command: &'static str, model: &Path) -> Self {
        Manifest {
            command,
            model: model.display().to_string(),
            params: vec![],
            seed: None,
            wall_clock: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0.0, |d| d.as_secs_f64()),
        }
    }

    fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    fn comments(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# mmrisk {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# model: {}", self.model);
        for (k, v) in &self.params {
            let _ = writeln!(s, "# {k}: {v}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "# seed: {seed}");
        }
        let _ = writeln!(s, "# wall_clock_unix: {:.3}", self.wall_clock);
        s
    }

    fn json(&self) -> Value {
        let params: serde_json::Map<String, Value> = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        json!({
            "command": self.command,
            "model": self.model,
            "parameters": params,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_clock_unix": self.wall_clock,
        })
    }
}

fn load(path: &Path) -> Result<ValidatedModel, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(validate_spec(ProcessSpec::from_json(&text)?)?)
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn matrix_json(a: &Mat) -> Value {
    Value::Array(
        (0..a.nrows())
            .map(|i| Value::Array((0..a.ncols()).map(|j| json!(a[(i, j)])).collect()))
            .collect(),
    )
}

fn cmd_validate(model: &Path) -> Outcome {
    let m = load(model)?;
    let dom = CumulantDomain::of(&m);
    let mut s = Manifest::new("validate", model).comments();
    let _ = writeln!(s, "valid: true");
    let _ = writeln!(s, "states: {}", m.states());
    let pi: Vec<String> = m.pi().iter().map(|p| format_sig(*p)).collect();
    let _ = writeln!(s, "pi: {}", pi.join(" "));
    let _ = writeln!(s, "drift_m1: {}", format_sig(m.drift()));
    let _ = writeln!(s, "cumulant_domain: ({}, {})", format_sig(dom.r_lo), format_sig(dom.r_hi));
    let _ = writeln!(s, "switching_jumps: {}", m.has_switching_jumps());
    emit(None, &s)
}

fn ruin_csv(m: &ValidatedModel, f: &RuinFactorization, grid: &Grid, head: &str) -> Result<String, Failure> {
    let cert = lundberg_certificate(m)?;
    let n = m.states();
    let mut s = head.to_string();
    let cols: Vec<String> = ["psi", "lb", "ub"]
        .iter()
        .flat_map(|p| (1..=n).map(move |i| format!("{p}_{i}")))
        .collect();
    let _ = writeln!(s, "u,{}", cols.join(","));
    for &u in &grid.points {
        let mut row = vec![format_sig(u)];
        row.extend((0..n).map(|i| format_sig(f.psi(i, u))));
        row.extend((0..n).map(|i| format_sig(lundberg_bounds(&cert, i, u).0)));
        row.extend((0..n).map(|i| format_sig(lundberg_bounds(&cert, i, u).1)));
        let _ = writeln!(s, "{}", row.join(","));
    }
    Ok(s)
}

fn overshoot_csv(tails: &OvershootTails, grid: &Grid, head: &str) -> String {
    let mut s = head.to_string();
    let _ = writeln!(s, "kind,z,i,k,probability");
    for kind in OvershootKind::ALL {
        for &z in &grid.points {
            let t = tails.get(kind).value(z);
            for i in 0..t.nrows() {
                for k in 0..t.ncols() {
                    let _ = writeln!(s, "{},{},{},{},{}", kind.name(), format_sig(z), i + 1, k + 1, format_sig(t[(i, k)]));
                }
            }
        }
    }
    s
}

fn sidecar(m: &ValidatedModel, f: &RuinFactorization, tails: &OvershootTails, manifest: &Manifest) -> Result<Value, Failure> {
    let cert = lundberg_certificate(m)?;
    let xi = overshoot::xi_bar_limit(m)?;
    let ladder = overshoot::ladder_measure_from(tails);
    let d_int: Option<Vec<Value>> = integer_denominator(&f.g).map(|v| v.into_iter().map(|c| json!(c)).collect());
    let d_exact: Vec<String> = f.g.denominator().coeffs().iter().map(|c| c.to_string()).collect();
    let complex = |z: &mmrisk::Complex64| json!([z.re, z.im]);
    let ruin: Vec<Value> = (0..m.states())
        .map(|i| {
            json!({
                "state": i + 1,
                "atom_at_zero": f.infimum.atoms[i],
                "terms": f.infimum.tails[i].terms.iter().map(|(c, r)| json!({
                    "coefficient": complex(c),
                    "rate": complex(r),
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({
        "manifest": manifest.json(),
        "pi": m.pi().as_slice(),
        "drift_m1": m.drift(),
        "lundberg": {
            "gamma": cert.gamma,
            "h": cert.h.as_slice(),
            "nu": cert.nu.as_slice(),
            "c_minus": cert.c_minus,
            "c_plus": cert.c_plus,
        },
        "d_polynomial": f.g.denominator().to_string(),
        "d_coefficients_ascending": d_int.map(Value::Array).unwrap_or_else(|| json!(d_exact)),
        "d_roots": f.poles.iter().map(complex).collect::<Vec<_>>(),
        "r_plus": matrix_json(&f.r_plus),
        "ladder_norm": matrix_json(&ladder.norm),
        "ruin_mixtures": ruin,
        "xi_bar_spectrum": xi.spectrum.iter().map(complex).collect::<Vec<_>>(),
    }))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_analyze(a: &AnalyzeArgs) -> Outcome {
    let m = load(&a.model)?;
    let manifest = Manifest::new("analyze", &a.model)
        .param("u_grid", &a.u_grid.spec)
        .param("z_grid", &a.z_grid.spec);
    let head = manifest.comments();
    let f = factorize(&m)?;
    let tails = overshoot::overshoot_tails(&m)?;
    let ruin = ruin_csv(&m, &f, &a.u_grid, &head)?;
    let over = overshoot_csv(&tails, &a.z_grid, &head);
    match &a.out {
        None => {
            emit(None, &ruin)?;
            println!();
            emit(None, &over)
        }
        Some(p) => {
            emit(Some(p), &ruin)?;
            emit(Some(&sibling(p, ".overshoot.csv")), &over)?;
            let side = sidecar(&m, &f, &tails, &manifest)?;
            let text = serde_json::to_string_pretty(&side).expect("serializable") + "\n";
            emit(Some(&sibling(p, ".json")), &text)
        }
    }
}

fn estimate_row(s: &mut String, what: &str, state: usize, level: f64, e: &SimEstimate) {
    let _ = writeln!(
        s,
        "{what},{},{},{},{},{},{},{}",
        state + 1,
        format_sig(level),
        format_sig(e.point),
        format_sig(e.stderr),
        e.n,
        e.seed,
        format_sig(e.truncated_fraction)
    );
}

fn cmd_simulate(a: &SimulateArgs) -> Outcome {
    let m = load(&a.model)?;
    if !(a.u >= 0.0 && a.u.is_finite()) || !(a.t_max > 0.0) {
        return Err(Failure::Usage("--u must be >= 0 and --t-max > 0".into()));
    }
    let states: Vec<usize> = match a.state {
        Some(s) if s as usize > m.states() => {
            return Err(Failure::Usage(format!("--state {s} exceeds {} states", m.states())))
        }
        Some(s) => vec![s as usize - 1],
        None => (0..m.states()).collect(),
    };
    if a.dump.is_some() && (a.level_x.is_none() || states.len() != 1) {
        return Err(Failure::Usage("--dump needs --level-x and --state".into()));
    }
    let cfg = SimConfig::new(a.seed, a.paths, a.t_max)?;
    let mut manifest = Manifest::new("simulate", &a.model)
        .param("u", a.u)
        .param("paths", a.paths)
        .param("t_max", a.t_max)
        .param("level_x", a.level_x.map_or("-".into(), |x| x.to_string()))
        .param("state", a.state.map_or("all".into(), |s| s.to_string()));
    manifest.seed = Some(a.seed);
    let mut s = manifest.comments();
    let _ = writeln!(s, "quantity,state,level,point,stderr,n,seed,truncated_fraction");
    for &i in &states {
        let e = montecarlo::estimate_ruin(&m, i, a.u, &cfg)?;
        estimate_row(&mut s, "ruin", i, a.u, &e);
    }
    if let Some(x) = a.level_x {
        for &i in &states {
            let run = montecarlo::sample_overshoot(&m, i, x, &cfg)?;
            estimate_row(&mut s, "passage", i, x, &run.passage());
            if let Some(p) = &a.dump {
                let mut buf = manifest.comments().into_bytes();
                run.write_csv(&mut buf).map_err(|e| io_err(p, e))?;
                fs::write(p, buf).map_err(|e| io_err(p, e))?;
            }
        }
    }
    emit(a.out.as_deref(), &s)
}

struct Check {
    name: String,
    analytic: f64,
    estimate: SimEstimate,
}

fn cmd_compare(a: &CompareArgs) -> Outcome {
    let m = load(&a.model)?;
    if a.z.iter().any(|z| !(*z >= 0.0)) || !(a.u >= 0.0) || !(a.t_max > 0.0) {
        return Err(Failure::Usage("levels must be >= 0 and --t-max > 0".into()));
    }
    let f = factorize(&m)?;
    let tails = overshoot::overshoot_tails(&m)?;
    let cfg = SimConfig::new(a.seed, a.paths, a.t_max)?;
    let n = m.states();
    let mut checks = Vec::new();
    for i in 0..n {
        let mut analytic = f.psi(i, a.u);
        if i == 0 {
            analytic += a.tamper;
        }
        checks.push(Check {
            name: format!("psi,{},-,{}", i + 1, format_sig(a.u)),
            analytic,
            estimate: montecarlo::estimate_ruin(&m, i, a.u, &cfg)?,
        });
    }
    for i in 0..n {
        let run = montecarlo::sample_overshoot(&m, i, 0.0, &cfg)?;
        checks.push(Check {
            name: format!("passage,{},-,0", i + 1),
            analytic: f.psi(i, 0.0),
            estimate: run.passage(),
        });
        for kind in OvershootKind::ALL {
            for &z in &a.z {
                let t = tails.get(kind).value(z);
                for (k, e) in run.tail(kind, z).into_iter().enumerate() {
                    checks.push(Check {
                        name: format!("{},{},{},{}", kind.name(), i + 1, k + 1, format_sig(z)),
                        analytic: t[(i, k)],
                        estimate: e,
                    });
                }
            }
        }
    }
    let mut manifest = Manifest::new("compare", &a.model)
        .param("paths", a.paths)
        .param("t_max", a.t_max)
        .param("u", a.u)
        .param("z", a.z.iter().map(|z| z.to_string()).collect::<Vec<_>>().join(","))
        .param("threshold", a.threshold);
    if a.tamper != 0.0 {
        manifest = manifest.param("tamper", a.tamper);
    }
    manifest.seed = Some(a.seed);
    let mut s = manifest.comments();
    let _ = writeln!(s, "check,i,k,level,analytic,estimate,stderr,z_score,truncated_fraction,status");
    let mut failed = 0;
    for c in &checks {
        let z = c.estimate.z_score(c.analytic);
        let ok = z.abs() < a.threshold && c.estimate.truncated_fraction < 1e-4;
        failed += usize::from(!ok);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            c.name,
            format_sig(c.analytic),
            format_sig(c.estimate.point),
            format_sig(c.estimate.stderr),
            format_sig(z),
            format_sig(c.estimate.truncated_fraction),
            if ok { "pass" } else { "FAIL" }
        );
    }
    let _ = writeln!(
        s,
        "# result: {} ({} of {} checks failed)",
        if failed == 0 { "PASS" } else { "FAIL" },
        failed,
        checks.len()
    );
    emit(None, &s)?;
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { model } => cmd_validate(model),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) | Failure::Io(msg) => eprintln!("error: {msg}"),
                Failure::Lib(e) => eprintln!("error [{}]: {e}", e.module()),
                Failure::Mismatch => eprintln!("error: analytic and simulated values disagree"),
            }
            ExitCode::from(f.code())
        }
    }
}
