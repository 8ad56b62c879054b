//! Process specification: the modulating chain, per-state jump laws, and
//! the validated model every other module consumes.
//!
//! In state `k` the level process makes upward jumps at rate `pos_rate`
//! with sizes drawn from an Erlang mixture, and downward jumps at rate
//! `neg_rate` with `Exp(c)` sizes. Downward level crossings therefore
//! always happen by an exponential jump, which is what makes the analytic
//! pipeline rational.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

const WEIGHT_TOL: f64 = 1e-12;
const GENERATOR_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

/// One Erlang component: `weight * Erlang(shape, rate)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErlangTerm {
    pub weight: f64,
    pub shape: u32,
    pub rate: f64,
}

/// Finite mixture of Erlang laws on `(0, inf)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErlangMixture {
    terms: Vec<ErlangTerm>,
}

impl ErlangMixture {
    pub fn new(terms: Vec<ErlangTerm>) -> Result<Self> {
        let mix = ErlangMixture { terms };
        mix.check("pos_law")?;
        Ok(mix)
    }

    pub fn exponential(rate: f64) -> Self {
        ErlangMixture::erlang(1, rate)
    }

    pub fn erlang(shape: u32, rate: f64) -> Self {
        ErlangMixture {
            terms: vec![ErlangTerm {
                weight: 1.0,
                shape,
                rate,
            }],
        }
    }

    fn check(&self, path: &str) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::schema(path, "mixture has no terms"));
        }
        for (t, term) in self.terms.iter().enumerate() {
            let p = format!("{path}[{t}]");
            if !(term.weight > 0.0 && term.weight <= 1.0) {
                return Err(Error::schema(format!("{p}.w"), "weight must lie in (0, 1]"));
            }
            if term.shape == 0 {
                return Err(Error::schema(format!("{p}.n"), "shape must be >= 1"));
            }
            if !(term.rate > 0.0 && term.rate.is_finite()) {
                return Err(Error::schema(format!("{p}.delta"), "rate must be > 0"));
            }
        }
        let total: f64 = self.terms.iter().map(|t| t.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::schema(
                path,
                format!("mixture weights sum to {total}, expected 1"),
            ));
        }
        Ok(())
    }

    pub fn terms(&self) -> &[ErlangTerm] {
        &self.terms
    }

    pub fn mean(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight * t.shape as f64 / t.rate)
            .sum()
    }

    pub fn min_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.rate).fold(f64::INFINITY, f64::min)
    }

    pub fn max_shape(&self) -> u32 {
        self.terms.iter().map(|t| t.shape).max().unwrap_or(1)
    }

    /// `E exp(r X)`, finite for `r < min rate`.
    pub fn mgf(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight * (t.rate / (t.rate - r)).powi(t.shape as i32))
            .sum()
    }

    /// Derivative of [`Self::mgf`] in `r`.
    pub fn mgf_derivative(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let n = t.shape as i32;
                t.weight * n as f64 * t.rate.powi(n) / (t.rate - r).powi(n + 1)
            })
            .sum()
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.terms
            .iter()
            .map(|t| {
                let n = t.shape as usize;
                t.weight * t.rate.powi(n as i32) * x.powi(n as i32 - 1) * (-t.rate * x).exp()
                    / linalg::factorial(n - 1)
            })
            .sum()
    }

    /// `P(X > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.terms
            .iter()
            .map(|t| t.weight * erlang_tail(t.shape, t.rate, x))
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let term = if self.terms.len() == 1 {
            &self.terms[0]
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = self.terms.last().expect("non-empty");
            for t in &self.terms {
                acc += t.weight;
                if u < acc {
                    pick = t;
                    break;
                }
            }
            pick
        };
        let mut s = 0.0;
        for _ in 0..term.shape {
            let e: f64 = Exp1.sample(rng);
            s += e;
        }
        s / term.rate
    }
}

/// `P(Erlang(n, rate) > x)` for `x >= 0`.
pub fn erlang_tail(shape: u32, rate: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..shape as usize {
        term *= rate * x / k as f64;
        sum += term;
    }
    (-rate * x).exp() * sum
}

/// Jump behaviour of the level process while the chain sits in one state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateJumpLaw {
    /// Rate of upward jumps.
    pub pos_rate: f64,
    /// Size law of upward jumps; required when `pos_rate > 0`.
    pub pos_law: Option<ErlangMixture>,
    /// Rate of downward jumps.
    pub neg_rate: f64,
    /// Exponential parameter of downward jump sizes.
    pub neg_exp_rate: f64,
}

impl StateJumpLaw {
    pub fn new(pos_rate: f64, pos_law: Option<ErlangMixture>, neg_rate: f64, c: f64) -> Self {
        StateJumpLaw {
            pos_rate,
            pos_law,
            neg_rate,
            neg_exp_rate: c,
        }
    }

    /// Total jump rate `lambda_k`.
    pub fn total_rate(&self) -> f64 {
        self.pos_rate + self.neg_rate
    }

    /// Expected jump displacement per unit time in this state.
    pub fn mean_rate(&self) -> f64 {
        let up = match (&self.pos_law, self.pos_rate > 0.0) {
            (Some(l), true) => self.pos_rate * l.mean(),
            _ => 0.0,
        };
        up - self.neg_rate / self.neg_exp_rate
    }

    /// Upward law when upward jumps are active.
    pub fn active_pos_law(&self) -> Option<&ErlangMixture> {
        if self.pos_rate > 0.0 {
            self.pos_law.as_ref()
        } else {
            None
        }
    }

    fn check(&self, path: &str) -> Result<()> {
        let rate_ok = |v: f64| v >= 0.0 && v.is_finite();
        if !rate_ok(self.pos_rate) {
            return Err(Error::schema(format!("{path}.pos_rate"), "rate must be >= 0"));
        }
        if !rate_ok(self.neg_rate) {
            return Err(Error::schema(format!("{path}.neg_rate"), "rate must be >= 0"));
        }
        if !(self.neg_exp_rate > 0.0 && self.neg_exp_rate.is_finite()) {
            return Err(Error::schema(format!("{path}.c"), "exponential rate must be > 0"));
        }
        match (&self.pos_law, self.pos_rate > 0.0) {
            (Some(law), _) => law.check(&format!("{path}.pos_law"))?,
            (None, true) => {
                return Err(Error::schema(
                    format!("{path}.pos_law"),
                    "required when pos_rate > 0",
                ))
            }
            (None, false) => {}
        }
        Ok(())
    }
}

/// Finite continuous-time Markov chain given by its generator.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChainSpec {
    pub q: Mat,
}

impl MarkovChainSpec {
    pub fn new(q: Mat) -> Self {
        MarkovChainSpec { q }
    }

    pub fn states(&self) -> usize {
        self.q.nrows()
    }

    /// Sojourn rates `nu_k = -Q_kk`.
    pub fn sojourn_rates(&self) -> Vec<f64> {
        (0..self.states()).map(|k| -self.q[(k, k)]).collect()
    }

    /// Embedded jump-chain matrix `p_kr = Q_kr / nu_k` (zero rows where `nu_k = 0`).
    pub fn embedded(&self) -> Mat {
        let m = self.states();
        Mat::from_fn(m, m, |k, r| {
            let nu = -self.q[(k, k)];
            if k == r || nu <= 0.0 {
                0.0
            } else {
                self.q[(k, r)] / nu
            }
        })
    }
}

/// Table of jumps applied at chain transitions; `None` means no jump.
pub type SwitchingJumps = Vec<Vec<Option<ErlangMixture>>>;

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessSpec {
    pub chain: MarkovChainSpec,
    pub laws: Vec<StateJumpLaw>,
    pub switching_jumps: Option<SwitchingJumps>,
}

impl ProcessSpec {
    pub fn new(q: Mat, laws: Vec<StateJumpLaw>) -> Self {
        ProcessSpec {
            chain: MarkovChainSpec::new(q),
            laws,
            switching_jumps: None,
        }
    }

    pub fn with_switching_jumps(mut self, table: SwitchingJumps) -> Self {
        self.switching_jumps = Some(table);
        self
    }

    pub fn states(&self) -> usize {
        self.chain.states()
    }

    pub fn has_switching_jumps(&self) -> bool {
        self.switching_jumps
            .as_ref()
            .is_some_and(|t| t.iter().flatten().any(|c| c.is_some()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::schema("$", e.to_string()))?;
        file.into_spec()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from_spec(self)).expect("serializable")
    }
}

/// A process specification that passed validation, with derived data cached.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedModel {
    spec: ProcessSpec,
    pi: DVector<f64>,
    drift: f64,
}

impl ValidatedModel {
    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn states(&self) -> usize {
        self.spec.states()
    }

    pub fn q(&self) -> &Mat {
        &self.spec.chain.q
    }

    pub fn laws(&self) -> &[StateJumpLaw] {
        &self.spec.laws
    }

    pub fn law(&self, k: usize) -> &StateJumpLaw {
        &self.spec.laws[k]
    }

    /// Stationary distribution of the chain.
    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    /// Mean drift `m1` of the level process under stationarity.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// `Lambda = diag(lambda_k)`.
    pub fn lambda(&self) -> Mat {
        linalg::diag(&self.laws().iter().map(|l| l.total_rate()).collect::<Vec<_>>())
    }

    pub fn lambda_pos(&self) -> Mat {
        linalg::diag(&self.laws().iter().map(|l| l.pos_rate).collect::<Vec<_>>())
    }

    pub fn lambda_neg(&self) -> Mat {
        linalg::diag(&self.laws().iter().map(|l| l.neg_rate).collect::<Vec<_>>())
    }

    /// `C = diag(c_k)`.
    pub fn c(&self) -> Mat {
        linalg::diag(&self.laws().iter().map(|l| l.neg_exp_rate).collect::<Vec<_>>())
    }

    pub fn n(&self) -> Mat {
        linalg::diag(&self.spec.chain.sojourn_rates())
    }

    pub fn p(&self) -> Mat {
        self.spec.chain.embedded()
    }

    pub fn has_switching_jumps(&self) -> bool {
        self.spec.has_switching_jumps()
    }

    pub(crate) fn require_no_switching(&self, op: &str) -> Result<()> {
        if self.has_switching_jumps() {
            return Err(Error::Unsupported(format!(
                "{op} requires zero switching jumps"
            )));
        }
        Ok(())
    }

    pub(crate) fn require_negative_drift(&self, op: &str) -> Result<()> {
        if !(self.drift < 0.0) {
            return Err(Error::Drift(format!(
                "{op} requires negative drift, got m1 = {}",
                self.drift
            )));
        }
        Ok(())
    }

    /// Model with no structural checks on the jump rates; used to simulate
    /// the degenerate jump-free process.
    #[cfg(test)]
    pub(crate) fn unchecked(spec: ProcessSpec) -> Self {
        let pi = linalg::stationary(&spec.chain.q).unwrap();
        let drift = drift_of(&spec, &pi);
        ValidatedModel { spec, pi, drift }
    }
}

fn drift_of(spec: &ProcessSpec, pi: &DVector<f64>) -> f64 {
    spec.laws
        .iter()
        .enumerate()
        .map(|(k, l)| pi[k] * l.mean_rate())
        .sum()
}

/// Check every invariant of the specification and cache `pi` and the drift.
pub fn validate_spec(spec: ProcessSpec) -> Result<ValidatedModel> {
    let m = spec.states();
    if m == 0 || spec.chain.q.ncols() != m {
        return Err(Error::schema("Q", "generator must be a non-empty square matrix"));
    }
    if spec.laws.len() != m {
        return Err(Error::schema(
            "laws",
            format!("expected {m} state laws, got {}", spec.laws.len()),
        ));
    }
    for (k, law) in spec.laws.iter().enumerate() {
        law.check(&format!("laws[{k}]"))?;
    }
    if let Some(table) = &spec.switching_jumps {
        if table.len() != m || table.iter().any(|row| row.len() != m) {
            return Err(Error::schema("switching_jumps", format!("expected {m}x{m} table")));
        }
        for (k, row) in table.iter().enumerate() {
            for (r, cell) in row.iter().enumerate() {
                if let Some(mix) = cell {
                    let path = format!("switching_jumps[{k}][{r}]");
                    if k == r {
                        return Err(Error::schema(path, "diagonal entries must be empty"));
                    }
                    mix.check(&path)?;
                }
            }
        }
    }

    let q = &spec.chain.q;
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::schema("Q", "entries must be finite"));
    }
    let scale = q.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    for k in 0..m {
        for r in 0..m {
            if k != r && q[(k, r)] < 0.0 {
                return Err(Error::invalid(
                    format!("Q[{k}][{r}]"),
                    "off-diagonal entries must be >= 0",
                ));
            }
        }
        let row: f64 = q.row(k).sum();
        if row.abs() > GENERATOR_TOL * scale {
            return Err(Error::invalid(
                format!("Q[{k}]"),
                format!("row sums to {row}, expected 0"),
            ));
        }
    }
    if !linalg::strongly_connected(q) {
        return Err(Error::invalid("Q", "chain is reducible"));
    }
    if spec.laws.iter().all(|l| l.total_rate() == 0.0) {
        return Err(Error::invalid(
            "laws",
            "no state has a positive jump rate; the level process is identically zero",
        ));
    }

    let pi = linalg::stationary(q)?;
    let residual = (pi.transpose() * q).amax();
    if pi.iter().any(|&p| !(p > 0.0)) || residual > STATIONARY_TOL {
        return Err(Error::invalid(
            "Q",
            format!("stationary distribution check failed (residual {residual:e})"),
        ));
    }
    let drift = drift_of(&spec, &pi);
    Ok(ValidatedModel { spec, pi, drift })
}

/// Mean drift `m1 = sum_k pi_k (lambda+_k E J+_k - lambda-_k / c_k)`.
pub fn drift_m1(model: &ValidatedModel) -> f64 {
    model.drift()
}

/// Per-state law of the negated process: upward `Exp(c)` jumps and
/// downward Erlang-mixture jumps.
#[derive(Clone, Debug, PartialEq)]
pub struct DualJumpLaw {
    pub up_rate: f64,
    pub up_exp_rate: f64,
    pub down_rate: f64,
    pub down_law: Option<ErlangMixture>,
}

/// Descriptor of the negated level process `-xi` on the same chain.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSpec {
    pub chain: MarkovChainSpec,
    pub laws: Vec<DualJumpLaw>,
}

impl DualSpec {
    /// Back to the primal orientation; `dual_spec` followed by this is the identity.
    pub fn dual(&self) -> ProcessSpec {
        ProcessSpec {
            chain: self.chain.clone(),
            laws: self
                .laws
                .iter()
                .map(|l| StateJumpLaw {
                    pos_rate: l.down_rate,
                    pos_law: l.down_law.clone(),
                    neg_rate: l.up_rate,
                    neg_exp_rate: l.up_exp_rate,
                })
                .collect(),
            switching_jumps: None,
        }
    }

    pub fn states(&self) -> usize {
        self.chain.states()
    }

    /// Cumulant of the negated process, `K_dual(r) = K(-r)`.
    pub fn cumulant(&self, r: f64) -> Mat {
        let mut k = self.chain.q.clone();
        for (i, l) in self.laws.iter().enumerate() {
            let mut d = 0.0;
            if l.up_rate > 0.0 {
                d += l.up_rate * (l.up_exp_rate / (l.up_exp_rate - r) - 1.0);
            }
            if let (Some(law), true) = (&l.down_law, l.down_rate > 0.0) {
                d += l.down_rate * (law.mgf(-r) - 1.0);
            }
            k[(i, i)] += d;
        }
        k
    }

    /// Mean drift of the negated process.
    pub fn drift(&self, pi: &DVector<f64>) -> f64 {
        -drift_of(&self.dual(), pi)
    }
}

pub fn dual_spec(model: &ValidatedModel) -> Result<DualSpec> {
    model.require_no_switching("dual_spec")?;
    Ok(DualSpec {
        chain: model.spec.chain.clone(),
        laws: model
            .laws()
            .iter()
            .map(|l| DualJumpLaw {
                up_rate: l.neg_rate,
                up_exp_rate: l.neg_exp_rate,
                down_rate: l.pos_rate,
                down_law: l.pos_law.clone(),
            })
            .collect(),
    })
}

/// Time reversal of the chain under `pi`: `Q^ = diag(pi)^-1 Q^T diag(pi)`.
/// Jump laws are kept per state; switching jumps follow their transitions.
pub fn reverse_chain(model: &ValidatedModel) -> ValidatedModel {
    let m = model.states();
    let pi = model.pi();
    let q = model.q();
    let qhat = Mat::from_fn(m, m, |i, j| {
        if i == j {
            q[(i, i)]
        } else {
            q[(j, i)] * pi[j] / pi[i]
        }
    });
    let switching = model.spec.switching_jumps.as_ref().map(|t| {
        (0..m)
            .map(|i| (0..m).map(|j| t[j][i].clone()).collect())
            .collect()
    });
    let spec = ProcessSpec {
        chain: MarkovChainSpec::new(qhat),
        laws: model.spec.laws.clone(),
        switching_jumps: switching,
    };
    ValidatedModel {
        spec,
        pi: pi.clone(),
        drift: model.drift,
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermFile {
    w: f64,
    n: u32,
    delta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LawFile {
    pos_rate: f64,
    #[serde(default)]
    pos_law: Vec<TermFile>,
    neg_rate: f64,
    c: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    states: usize,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    laws: Vec<LawFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    switching_jumps: Option<Vec<Vec<Option<Vec<TermFile>>>>>,
}

fn mixture_from_file(terms: Vec<TermFile>) -> ErlangMixture {
    ErlangMixture {
        terms: terms
            .into_iter()
            .map(|t| ErlangTerm {
                weight: t.w,
                shape: t.n,
                rate: t.delta,
            })
            .collect(),
    }
}

fn mixture_to_file(mix: &ErlangMixture) -> Vec<TermFile> {
    mix.terms
        .iter()
        .map(|t| TermFile {
            w: t.weight,
            n: t.shape,
            delta: t.rate,
        })
        .collect()
}

impl ModelFile {
    fn into_spec(self) -> Result<ProcessSpec> {
        let m = self.states;
        if m == 0 {
            return Err(Error::schema("states", "must be >= 1"));
        }
        if self.q.len() != m || self.q.iter().any(|row| row.len() != m) {
            return Err(Error::schema("Q", format!("expected {m}x{m} matrix")));
        }
        let q = Mat::from_fn(m, m, |i, j| self.q[i][j]);
        let laws = self
            .laws
            .into_iter()
            .map(|l| StateJumpLaw {
                pos_rate: l.pos_rate,
                pos_law: (!l.pos_law.is_empty()).then(|| mixture_from_file(l.pos_law)),
                neg_rate: l.neg_rate,
                neg_exp_rate: l.c,
            })
            .collect();
        let switching_jumps = self.switching_jumps.map(|t| {
            t.into_iter()
                .map(|row| row.into_iter().map(|c| c.map(mixture_from_file)).collect())
                .collect()
        });
        Ok(ProcessSpec {
            chain: MarkovChainSpec::new(q),
            laws,
            switching_jumps,
        })
    }

    fn from_spec(spec: &ProcessSpec) -> Self {
        let m = spec.states();
        ModelFile {
            states: m,
            q: (0..m)
                .map(|i| (0..m).map(|j| spec.chain.q[(i, j)]).collect())
                .collect(),
            laws: spec
                .laws
                .iter()
                .map(|l| LawFile {
                    pos_rate: l.pos_rate,
                    pos_law: l.pos_law.as_ref().map(mixture_to_file).unwrap_or_default(),
                    neg_rate: l.neg_rate,
                    c: l.neg_exp_rate,
                })
                .collect(),
            switching_jumps: spec.switching_jumps.as_ref().map(|t| {
                t.iter()
                    .map(|row| row.iter().map(|c| c.as_ref().map(mixture_to_file)).collect())
                    .collect()
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_model() -> ProcessSpec {
        let q = Mat::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        ProcessSpec::new(
            q,
            vec![
                StateJumpLaw::new(1.0, Some(ErlangMixture::erlang(2, 2.0)), 1.0, 1.0 / 3.0),
                StateJumpLaw::new(1.0, Some(ErlangMixture::erlang(2, 1.0)), 1.0, 0.5),
            ],
        )
    }

    #[test]
    fn reference_model_stationary_and_drift() {
        let m = validate_spec(reference_model()).unwrap();
        assert!((m.pi()[0] - 0.5).abs() < 1e-15 && (m.pi()[1] - 0.5).abs() < 1e-15);
        assert!((drift_m1(&m) + 1.0).abs() < 1e-14);
        let dual = dual_spec(&m).unwrap();
        assert!((dual.drift(m.pi()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_state_is_allowed() {
        let spec = ProcessSpec::new(
            Mat::zeros(1, 1),
            vec![StateJumpLaw::new(1.0, Some(ErlangMixture::exponential(2.0)), 1.0, 1.0)],
        );
        let m = validate_spec(spec).unwrap();
        assert_eq!(m.pi()[0], 1.0);
        assert!((m.drift() - (0.5 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn absorbing_state_is_rejected() {
        let mut spec = reference_model();
        spec.chain.q = Mat::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.0]);
        let err = validate_spec(spec).unwrap_err();
        assert!(matches!(err, Error::InvalidModel { .. }), "{err}");
    }

    #[test]
    fn non_generator_is_rejected_with_path() {
        let mut spec = reference_model();
        spec.chain.q[(0, 0)] = -0.5;
        match validate_spec(spec).unwrap_err() {
            Error::InvalidModel { path, .. } => assert_eq!(path, "Q[0]"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bad_weights_and_rates_are_schema_errors() {
        let mut spec = reference_model();
        spec.laws[1].pos_law = Some(ErlangMixture {
            terms: vec![ErlangTerm {
                weight: 0.9,
                shape: 2,
                rate: 1.0,
            }],
        });
        match validate_spec(spec).unwrap_err() {
            Error::Schema { path, .. } => assert_eq!(path, "laws[1].pos_law"),
            e => panic!("unexpected {e}"),
        }
        let mut spec = reference_model();
        spec.laws[0].neg_rate = -1.0;
        match validate_spec(spec).unwrap_err() {
            Error::Schema { path, .. } => assert_eq!(path, "laws[0].neg_rate"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn jump_free_model_is_rejected() {
        let spec = ProcessSpec::new(
            Mat::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]),
            vec![StateJumpLaw::new(0.0, None, 0.0, 1.0); 2],
        );
        assert!(matches!(validate_spec(spec), Err(Error::InvalidModel { .. })));
    }

    #[test]
    fn dual_is_an_involution_and_flips_drift() {
        let m = validate_spec(reference_model()).unwrap();
        let back = dual_spec(&m).unwrap().dual();
        assert_eq!(&back, m.spec());
    }

    #[test]
    fn dual_of_negative_only_model_has_only_upward_jumps() {
        let spec = ProcessSpec::new(
            Mat::zeros(1, 1),
            vec![StateJumpLaw::new(0.0, None, 2.0, 1.5)],
        );
        let m = validate_spec(spec).unwrap();
        let d = dual_spec(&m).unwrap();
        assert_eq!(d.laws[0].down_rate, 0.0);
        assert_eq!(d.laws[0].up_rate, 2.0);
        assert!(d.laws[0].down_law.is_none());
    }

    #[test]
    fn reversal_of_asymmetric_chain() {
        let mut spec = reference_model();
        spec.chain.q = Mat::from_row_slice(2, 2, &[-1.0, 1.0, 2.0, -2.0]);
        let m = validate_spec(spec).unwrap();
        let r = reverse_chain(&m);
        // pi = (2/3, 1/3): qhat_01 = q_10 pi_1 / pi_0 = 2 * 1/2 = 1.
        let expect = Mat::from_row_slice(2, 2, &[-1.0, 1.0, 2.0, -2.0]);
        assert!((r.q() - &expect).amax() < 1e-14);
        let res = (r.pi().transpose() * r.q()).amax();
        assert!(res < 1e-14);
        let rr = reverse_chain(&r);
        assert!((rr.q() - m.q()).amax() < 1e-14);
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let spec = reference_model();
        let text = spec.to_json();
        let back = ProcessSpec::from_json(&text).unwrap();
        assert_eq!(back, spec);
        let bad = text.replacen("\"states\"", "\"extra\": 1, \"states\"", 1);
        assert!(matches!(ProcessSpec::from_json(&bad), Err(Error::Schema { .. })));
    }

    #[test]
    fn erlang_tail_and_density_are_consistent() {
        let mix = ErlangMixture::new(vec![
            ErlangTerm { weight: 0.25, shape: 3, rate: 2.0 },
            ErlangTerm { weight: 0.75, shape: 1, rate: 0.5 },
        ])
        .unwrap();
        // trapezoid integral of the density from x to a far cutoff
        let x = 0.7;
        let n = 200_000;
        let h = (80.0 - x) / n as f64;
        let mut s = 0.5 * (mix.density(x) + mix.density(80.0));
        for i in 1..n {
            s += mix.density(x + i as f64 * h);
        }
        assert!((s * h - mix.tail(x)).abs() < 1e-8);
        assert!((mix.mean() - (0.25 * 1.5 + 0.75 * 2.0)).abs() < 1e-15);
    }
}
