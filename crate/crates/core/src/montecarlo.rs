//! Event-driven simulation of the level and chain, with estimators for ruin
//! probabilities, overshoot laws and killed transforms.
//!
//! Every replication draws from its own ChaCha stream keyed by
//! `(seed, replication index)`. Replications are processed in fixed-size
//! blocks whose partial sums are combined in block order, so estimates are
//! bit-identical for any number of worker threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ErlangMixture, ValidatedModel};
use crate::overshoot::OvershootKind;
use crate::spectral::{lundberg_bounds, lundberg_certificate, LundbergCertificate};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MMRISK_THREADS";

/// CSV header of the raw overshoot dump.
pub const SAMPLE_HEADER: &str = "rep,tau,gamma_plus,gamma_under,gamma_total,state_at_tau";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub n_paths: u64,
    pub t_max: f64,
    /// Replications per aggregation block.
    pub batch_size: u64,
    /// A surviving path is retired once the Lundberg bound on its remaining
    /// ruin chance drops below this; the bound is still charged to
    /// `truncated_fraction`. Zero disables early retirement.
    pub residual_tol: f64,
}

impl SimConfig {
    pub fn new(seed: u64, n_paths: u64, t_max: f64) -> Result<Self> {
        let cfg = SimConfig {
            seed,
            n_paths,
            t_max,
            batch_size: 4096,
            residual_tol: 1e-10,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Argument("need at least one path".into()));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::Argument(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.residual_tol) {
            return Err(Error::Argument("residual_tol must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimEstimate {
    pub point: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
    /// Probability mass left undecided by the horizon (bounded through the
    /// Lundberg certificate when one exists). Estimates are biased low by
    /// at most this amount.
    pub truncated_fraction: f64,
}

impl SimEstimate {
    fn binomial(hits: u64, n: u64, seed: u64, truncated_fraction: f64) -> Self {
        let p = hits as f64 / n as f64;
        SimEstimate {
            point: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            n,
            seed,
            truncated_fraction,
        }
    }

    fn from_moments(sum: f64, sum_sq: f64, n: u64, seed: u64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = (sum_sq / nf - mean * mean).max(0.0);
        SimEstimate {
            point: mean,
            stderr: (var / nf).sqrt(),
            n,
            seed,
            truncated_fraction: 0.0,
        }
    }

    /// `(analytic - point) / stderr`; zero when both agree exactly.
    pub fn z_score(&self, analytic: f64) -> f64 {
        let d = analytic - self.point;
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d.abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY.copysign(d)
        }
    }
}

pub fn rng_for(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Worker count from `MMRISK_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match threads_from_env() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); using the default");
                f()
            }
        },
        None => f(),
    }
}

/// Map each block of replication indices in parallel; results keep block order.
fn run_blocks<T: Send>(cfg: &SimConfig, f: impl Fn(u64, u64) -> T + Sync) -> Vec<T> {
    let blocks: Vec<(u64, u64)> = (0..cfg.n_paths.div_ceil(cfg.batch_size))
        .map(|b| {
            let lo = b * cfg.batch_size;
            (lo, (lo + cfg.batch_size).min(cfg.n_paths))
        })
        .collect();
    with_pool(|| blocks.par_iter().map(|&(lo, hi)| f(lo, hi)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    /// First passage strictly above the level, or the horizon.
    Level(f64),
    /// The horizon only.
    Horizon,
    /// The first jump of the level process, or the horizon.
    FirstJump,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Passage,
    FirstJump,
    Horizon,
    /// Retired early because the residual passage bound became negligible.
    Residual,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSummary {
    pub outcome: Outcome,
    /// Stopping time (passage, first jump, or horizon).
    pub time: f64,
    /// Level at the stopping time.
    pub level: f64,
    /// Level just before the stopping time.
    pub level_before: f64,
    /// Chain state at the stopping time.
    pub state: usize,
    pub sup: f64,
    pub inf: f64,
    /// Number of level jumps, including jumps at chain transitions.
    pub jumps: u64,
    /// Time spent in each state.
    pub occupation: Vec<f64>,
}

struct StateTable {
    total: f64,
    chain: f64,
    pos: f64,
    /// Cumulative embedded transition probabilities.
    targets: Vec<(usize, f64)>,
    pos_law: Option<ErlangMixture>,
    c: f64,
}

struct Sampler {
    states: Vec<StateTable>,
    switching: Option<Vec<Vec<Option<ErlangMixture>>>>,
}

impl Sampler {
    fn new(model: &ValidatedModel) -> Self {
        let q = model.q();
        let m = model.states();
        let states = (0..m)
            .map(|k| {
                let law = model.law(k);
                let chain = -q[(k, k)];
                let mut acc = 0.0;
                let mut targets = vec![];
                for j in (0..m).filter(|&j| j != k && q[(k, j)] > 0.0) {
                    acc += q[(k, j)] / chain;
                    targets.push((j, acc));
                }
                if let Some(last) = targets.last_mut() {
                    last.1 = 1.0;
                }
                let pos_law = law.active_pos_law().cloned();
                let pos = if pos_law.is_some() { law.pos_rate } else { 0.0 };
                let neg = if law.neg_rate > 0.0 { law.neg_rate } else { 0.0 };
                StateTable {
                    total: chain + pos + neg,
                    chain,
                    pos,
                    targets,
                    pos_law,
                    c: law.neg_exp_rate,
                }
            })
            .collect();
        Sampler {
            states,
            switching: model.spec().switching_jumps.clone(),
        }
    }
}

/// Per-state level below which a surviving path may be retired.
struct Retirement {
    floor: Vec<f64>,
}

impl Retirement {
    fn new(cert: Option<&LundbergCertificate>, level: f64, tol: f64) -> Option<Self> {
        let cert = cert?;
        if tol <= 0.0 {
            return None;
        }
        Some(Retirement {
            floor: cert
                .h
                .iter()
                .map(|h| level - (cert.c_plus * h / tol).max(1.0).ln() / cert.gamma)
                .collect(),
        })
    }
}

fn run_path<R: Rng + ?Sized>(
    sampler: &Sampler,
    rng: &mut R,
    start: usize,
    stop: Stop,
    t_max: f64,
    retire: Option<&Retirement>,
) -> PathSummary {
    let mut s = PathSummary {
        outcome: Outcome::Horizon,
        time: 0.0,
        level: 0.0,
        level_before: 0.0,
        state: start,
        sup: 0.0,
        inf: 0.0,
        jumps: 0,
        occupation: vec![0.0; sampler.states.len()],
    };
    let level = match stop {
        Stop::Level(u) => u,
        _ => f64::INFINITY,
    };
    if s.level > level {
        s.outcome = Outcome::Passage;
        return s;
    }
    let first_jump = stop == Stop::FirstJump;
    let mut k = start;
    loop {
        let st = &sampler.states[k];
        let dt = if st.total > 0.0 {
            let e: f64 = Exp1.sample(rng);
            e / st.total
        } else {
            f64::INFINITY
        };
        if s.time + dt >= t_max {
            s.occupation[k] += t_max - s.time;
            s.time = t_max;
            s.state = k;
            s.level_before = s.level;
            s.outcome = Outcome::Horizon;
            return s;
        }
        s.occupation[k] += dt;
        s.time += dt;
        let v = rng.random::<f64>() * st.total;
        let before = s.level;
        if v < st.chain {
            let w = v / st.chain;
            let j = st
                .targets
                .iter()
                .find(|(_, acc)| w < *acc)
                .map_or(k, |(j, _)| *j);
            let kick = sampler
                .switching
                .as_ref()
                .and_then(|t| t[k][j].as_ref())
                .map(|mix| mix.sample(rng));
            k = j;
            match kick {
                Some(x) => {
                    s.level += x;
                    s.jumps += 1;
                }
                None => continue,
            }
        } else if v < st.chain + st.pos {
            let law = st.pos_law.as_ref().expect("active law");
            s.level += law.sample(rng);
            s.jumps += 1;
        } else {
            let e: f64 = Exp1.sample(rng);
            s.level -= e / st.c;
            s.jumps += 1;
        }
        s.sup = s.sup.max(s.level);
        s.inf = s.inf.min(s.level);
        if first_jump || s.level > level {
            s.state = k;
            s.level_before = before;
            s.outcome = if first_jump {
                Outcome::FirstJump
            } else {
                Outcome::Passage
            };
            return s;
        }
        if let Some(r) = retire {
            if s.level < r.floor[k] {
                s.state = k;
                s.level_before = s.level;
                s.outcome = Outcome::Residual;
                return s;
            }
        }
    }
}

/// One path from state `start` until `stop` or `t_max`.
pub fn simulate_path<R: Rng + ?Sized>(
    model: &ValidatedModel,
    rng: &mut R,
    start: usize,
    stop: Stop,
    t_max: f64,
) -> PathSummary {
    run_path(&Sampler::new(model), rng, start, stop, t_max, None)
}

fn check_state(model: &ValidatedModel, i: usize) -> Result<()> {
    if i >= model.states() {
        return Err(Error::Argument(format!(
            "state {i} out of range for {} states",
            model.states()
        )));
    }
    Ok(())
}

fn certificate(model: &ValidatedModel) -> Option<LundbergCertificate> {
    lundberg_certificate(model).ok()
}

/// Remaining passage bound for a path stopped below `level` in `state`.
fn residual_mass(cert: Option<&LundbergCertificate>, level: f64, p: &PathSummary) -> f64 {
    match cert {
        Some(c) => lundberg_bounds(c, p.state, level - p.level).1.min(1.0),
        None => 1.0,
    }
}

#[derive(Default)]
struct PassageTally {
    hits: u64,
    residual: f64,
}

/// `P_i{tau+(u) < t_max}`, an estimate of `psi_i(u)` biased low by at most
/// `truncated_fraction`.
pub fn estimate_ruin(model: &ValidatedModel, i: usize, u: f64, cfg: &SimConfig) -> Result<SimEstimate> {
    check_state(model, i)?;
    cfg.check()?;
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::Argument(format!("level must be >= 0, got {u}")));
    }
    let sampler = Sampler::new(model);
    let cert = certificate(model);
    let retire = Retirement::new(cert.as_ref(), u, cfg.residual_tol);
    let tallies = run_blocks(cfg, |lo, hi| {
        let mut t = PassageTally::default();
        for rep in lo..hi {
            let mut rng = rng_for(cfg.seed, rep);
            let p = run_path(&sampler, &mut rng, i, Stop::Level(u), cfg.t_max, retire.as_ref());
            if p.outcome == Outcome::Passage {
                t.hits += 1;
            } else {
                t.residual += residual_mass(cert.as_ref(), u, &p);
            }
        }
        t
    });
    let (hits, residual) = tallies
        .iter()
        .fold((0, 0.0), |(h, r), t| (h + t.hits, r + t.residual));
    Ok(SimEstimate::binomial(
        hits,
        cfg.n_paths,
        cfg.seed,
        residual / cfg.n_paths as f64,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OvershootSample {
    pub rep: u64,
    pub tau: f64,
    pub gamma_plus: f64,
    pub gamma_under: f64,
    pub gamma_total: f64,
    pub state_at_tau: usize,
    /// Exp(1) variable of the independent killing clock: `tau < theta_s`
    /// iff `s tau < kill`.
    pub kill: f64,
}

impl OvershootSample {
    pub fn gamma(&self, kind: OvershootKind) -> f64 {
        match kind {
            OvershootKind::GammaPlus => self.gamma_plus,
            OvershootKind::GammaUnder => self.gamma_under,
            OvershootKind::GammaTotal => self.gamma_total,
        }
    }
}

/// Passage samples over level `x` from a fixed initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct OvershootRun {
    pub states: usize,
    pub level: f64,
    pub n: u64,
    pub seed: u64,
    pub truncated_fraction: f64,
    pub samples: Vec<OvershootSample>,
}

impl OvershootRun {
    /// `P_i{tau+(x) < inf}`.
    pub fn passage(&self) -> SimEstimate {
        SimEstimate::binomial(self.samples.len() as u64, self.n, self.seed, self.truncated_fraction)
    }

    /// `P_i{gamma(x) > z, tau+(x) < inf, x(tau) = k}` for every `k`.
    pub fn tail(&self, kind: OvershootKind, z: f64) -> Vec<SimEstimate> {
        (0..self.states)
            .map(|k| {
                let hits = self
                    .samples
                    .iter()
                    .filter(|s| s.state_at_tau == k && s.gamma(kind) > z)
                    .count() as u64;
                SimEstimate::binomial(hits, self.n, self.seed, self.truncated_fraction)
            })
            .collect()
    }

    /// Plug-in estimate of
    /// `E_i[e^{-s tau - u gamma_plus - v gamma_under - mu gamma_total}; tau < inf, x(tau) = k]`.
    pub fn transform(&self, s: f64, u: f64, v: f64, mu: f64) -> Result<Vec<SimEstimate>> {
        if [s, u, v, mu].iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Argument("transform arguments must be >= 0".into()));
        }
        let mut sum = vec![0.0; self.states];
        let mut sum_sq = vec![0.0; self.states];
        for p in &self.samples {
            if s * p.tau < p.kill {
                let w = (-u * p.gamma_plus - v * p.gamma_under - mu * p.gamma_total).exp();
                sum[p.state_at_tau] += w;
                sum_sq[p.state_at_tau] += w * w;
            }
        }
        Ok((0..self.states)
            .map(|k| SimEstimate::from_moments(sum[k], sum_sq[k], self.n, self.seed))
            .collect())
    }

    /// Raw samples as CSV with a 1-based `state_at_tau`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{SAMPLE_HEADER}")?;
        for s in &self.samples {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s.rep,
                format_sig(s.tau),
                format_sig(s.gamma_plus),
                format_sig(s.gamma_under),
                format_sig(s.gamma_total),
                s.state_at_tau + 1
            )?;
        }
        Ok(())
    }
}

/// Fixed 12-significant-digit rendering.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.11e}")
}

pub fn sample_overshoot(model: &ValidatedModel, i: usize, x: f64, cfg: &SimConfig) -> Result<OvershootRun> {
    check_state(model, i)?;
    cfg.check()?;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Argument(format!("level must be >= 0, got {x}")));
    }
    let sampler = Sampler::new(model);
    let cert = certificate(model);
    let retire = Retirement::new(cert.as_ref(), x, cfg.residual_tol);
    let blocks = run_blocks(cfg, |lo, hi| {
        let mut out = Vec::new();
        let mut residual = 0.0;
        for rep in lo..hi {
            let mut rng = rng_for(cfg.seed, rep);
            let kill: f64 = Exp1.sample(&mut rng);
            let p = run_path(&sampler, &mut rng, i, Stop::Level(x), cfg.t_max, retire.as_ref());
            if p.outcome == Outcome::Passage {
                let gamma_plus = p.level - x;
                let gamma_under = x - p.level_before;
                out.push(OvershootSample {
                    rep,
                    tau: p.time,
                    gamma_plus,
                    gamma_under,
                    gamma_total: gamma_plus + gamma_under,
                    state_at_tau: p.state,
                    kill,
                });
            } else {
                residual += residual_mass(cert.as_ref(), x, &p);
            }
        }
        (out, residual)
    });
    let mut samples = Vec::new();
    let mut residual = 0.0;
    for (s, r) in blocks {
        samples.extend(s);
        residual += r;
    }
    if samples.is_empty() {
        return Err(Error::DegenerateSample(format!(
            "no passage over {x} in {} paths; lower the level or raise t_max/paths",
            cfg.n_paths
        )));
    }
    Ok(OvershootRun {
        states: model.states(),
        level: x,
        n: cfg.n_paths,
        seed: cfg.seed,
        truncated_fraction: residual / cfg.n_paths as f64,
        samples,
    })
}

fn moment_blocks(
    model: &ValidatedModel,
    cfg: &SimConfig,
    each: impl Fn(&Sampler, &mut ChaCha8Rng) -> Option<(usize, f64)> + Sync,
) -> Vec<SimEstimate> {
    let m = model.states();
    let sampler = Sampler::new(model);
    let blocks = run_blocks(cfg, |lo, hi| {
        let mut sum = vec![0.0; m];
        let mut sq = vec![0.0; m];
        for rep in lo..hi {
            let mut rng = rng_for(cfg.seed, rep);
            if let Some((k, w)) = each(&sampler, &mut rng) {
                sum[k] += w;
                sq[k] += w * w;
            }
        }
        (sum, sq)
    });
    let mut sum = vec![0.0; m];
    let mut sq = vec![0.0; m];
    for (s, q) in blocks {
        for k in 0..m {
            sum[k] += s[k];
            sq[k] += q[k];
        }
    }
    (0..m)
        .map(|k| SimEstimate::from_moments(sum[k], sq[k], cfg.n_paths, cfg.seed))
        .collect()
}

/// Row `i` of `E[e^{r xi(theta_s)}; x(theta_s)]` with `theta_s ~ Exp(s)`.
pub fn estimate_resolvent(
    model: &ValidatedModel,
    i: usize,
    s: f64,
    r: f64,
    cfg: &SimConfig,
) -> Result<Vec<SimEstimate>> {
    check_state(model, i)?;
    cfg.check()?;
    if !(s > 0.0) {
        return Err(Error::Argument(format!("killing rate must be positive, got {s}")));
    }
    Ok(moment_blocks(model, cfg, |sampler, rng| {
        let e: f64 = Exp1.sample(rng);
        let p = run_path(sampler, rng, i, Stop::Horizon, e / s, None);
        Some((p.state, (r * p.level).exp()))
    }))
}

/// Row `i` of `E[e^{-s zeta}; x(zeta)]` with `zeta` the first level jump.
/// Paths with no jump before `t_max` contribute zero.
pub fn estimate_first_jump(model: &ValidatedModel, i: usize, s: f64, cfg: &SimConfig) -> Result<Vec<SimEstimate>> {
    check_state(model, i)?;
    cfg.check()?;
    if !(s >= 0.0) {
        return Err(Error::Argument(format!("s must be >= 0, got {s}")));
    }
    Ok(moment_blocks(model, cfg, |sampler, rng| {
        let p = run_path(sampler, rng, i, Stop::FirstJump, cfg.t_max, None);
        (p.outcome == Outcome::FirstJump).then(|| (p.state, (-s * p.time).exp()))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::model::{validate_spec, ProcessSpec, StateJumpLaw};

    fn reference_model() -> ValidatedModel {
        let q = Mat::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        validate_spec(ProcessSpec::new(
            q,
            vec![
                StateJumpLaw::new(1.0, Some(ErlangMixture::erlang(2, 2.0)), 1.0, 1.0 / 3.0),
                StateJumpLaw::new(1.0, Some(ErlangMixture::erlang(2, 1.0)), 1.0, 0.5),
            ],
        ))
        .unwrap()
    }

    #[test]
    fn jump_free_model_only_moves_chain() {
        let q = Mat::from_row_slice(2, 2, &[-1.0, 1.0, 2.0, -2.0]);
        let spec = ProcessSpec::new(q, vec![StateJumpLaw::new(0.0, None, 0.0, 1.0); 2]);
        let model = ValidatedModel::unchecked(spec);
        let mut rng = rng_for(3, 0);
        let p = simulate_path(&model, &mut rng, 0, Stop::Level(0.0), 50.0);
        assert_eq!(p.outcome, Outcome::Horizon);
        assert_eq!((p.level, p.sup, p.inf, p.jumps), (0.0, 0.0, 0.0, 0));
        assert!((p.occupation.iter().sum::<f64>() - 50.0).abs() < 1e-9);
        assert!(p.occupation.iter().all(|&t| t > 0.0));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = rng_for(7, 3).random();
        let b: u64 = rng_for(7, 3).random();
        let c: u64 = rng_for(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn thread_count_does_not_change_estimates() {
        let model = reference_model();
        let mut cfg = SimConfig::new(11, 3000, 100.0).unwrap();
        cfg.batch_size = 256;
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| sample_overshoot(&model, 0, 0.5, &cfg).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn overshoot_identity_holds() {
        let cfg = SimConfig::new(5, 2000, 200.0).unwrap();
        let run = sample_overshoot(&reference_model(), 1, 1.0, &cfg).unwrap();
        for s in &run.samples {
            assert!(s.gamma_plus > 0.0);
            assert!(s.gamma_under >= 0.0);
            assert_eq!(s.gamma_total, s.gamma_plus + s.gamma_under);
        }
    }

    #[test]
    fn retirement_is_charged_to_truncation() {
        let cfg = SimConfig::new(1, 2000, 1e6).unwrap();
        let e = estimate_ruin(&reference_model(), 0, 0.0, &cfg).unwrap();
        assert!(e.truncated_fraction > 0.0 && e.truncated_fraction <= 1e-10 * 1.0001);
        let mut open = cfg.clone();
        open.residual_tol = 0.0;
        open.t_max = 1.0;
        let e = estimate_ruin(&reference_model(), 0, 50.0, &open).unwrap();
        assert!(e.point < 1e-3 && e.truncated_fraction > 0.0);
    }

    #[test]
    fn degenerate_sample_is_reported() {
        let cfg = SimConfig::new(1, 10, 0.01).unwrap();
        assert!(matches!(
            sample_overshoot(&reference_model(), 0, 100.0, &cfg),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(SimConfig::new(0, 0, 1.0).is_err());
        assert!(SimConfig::new(0, 1, 0.0).is_err());
    }

    #[test]
    fn sig_format() {
        assert_eq!(format_sig(0.1), "1.00000000000e-1");
        assert_eq!(format_sig(0.0), "0");
    }
}
