//! Overshoot laws at level zero, the ascending ladder-height measure and the
//! Pollaczek-Khinchine renewal series, all in the undiscounted limit.
//!
//! The kernel driving everything is the descending-ladder state matrix `H`
//! of the time-reversed process, the unique substochastic solution of
//!
//! ```text
//! (Lambda - Q^) H = Lambda- + B(H),  B(H)_j. = lambda+_j (H E[e^{a C (H - I)}])_j.
//! ```
//!
//! With `H^ = Pi^{-1} H' Pi` the occupation density of `xi - sup xi` at depth
//! `y > 0` before the first passage over zero is `(Lambda - Q)^{-1} C e^{-yR} H^`
//! where `R = (I - H^) C`; the atom at depth zero is `(Lambda - Q)^{-1}`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Mat};
use crate::model::ValidatedModel;
use crate::transforms::p0_limit;

const FIXED_POINT_TOL: f64 = 1e-15;
const FIXED_POINT_MAX_ITER: usize = 2_000_000;
const PK_GRID: usize = 1024;

/// Finite sum `sum_t e^{-rate_t z} sum_l coeffs_t[l] z^l` of matrix terms.
/// Complex rates come in conjugate pairs; [`value`](Self::value) is real.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixExpMixture {
    dim: usize,
    pub terms: Vec<MatrixExpTerm>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixExpTerm {
    pub rate: Complex64,
    pub coeffs: Vec<CMat>,
}

impl MatrixExpMixture {
    pub fn new(dim: usize) -> Self {
        MatrixExpMixture { dim, terms: vec![] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Add `a z^power e^{-rate z}`, merging with an existing equal rate.
    pub fn push(&mut self, rate: Complex64, power: usize, a: CMat) {
        let tol = 1e-12 * (1.0 + rate.norm());
        let idx = match self.terms.iter().position(|t| (t.rate - rate).norm() <= tol) {
            Some(i) => i,
            None => {
                self.terms.push(MatrixExpTerm {
                    rate,
                    coeffs: vec![],
                });
                self.terms.len() - 1
            }
        };
        let coeffs = &mut self.terms[idx].coeffs;
        while coeffs.len() <= power {
            coeffs.push(CMat::zeros(self.dim, self.dim));
        }
        coeffs[power] += a;
    }

    pub fn value(&self, z: f64) -> Mat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for t in &self.terms {
            let e = (-t.rate * z).exp();
            let mut zl = 1.0;
            for c in &t.coeffs {
                out += c * (e * zl);
                zl *= z;
            }
        }
        linalg::real_part(&out)
    }

    pub fn derivative(&self) -> MatrixExpMixture {
        let mut d = MatrixExpMixture::new(self.dim);
        for t in &self.terms {
            for (l, c) in t.coeffs.iter().enumerate() {
                d.push(t.rate, l, c * (-t.rate));
                if l > 0 {
                    d.push(t.rate, l - 1, c * Complex64::new(l as f64, 0.0));
                }
            }
        }
        d
    }

    /// Real decay rates, deduplicated, ascending.
    pub fn real_rates(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.terms.iter().map(|t| t.rate.re).collect();
        r.sort_by(f64::total_cmp);
        r.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        r
    }
}

/// Limits of the reversed-process objects as the killing rate vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct XiBarLimit {
    /// Descending-ladder state kernel of the reversed process.
    pub h: Mat,
    /// `Pi^{-1} H' Pi`, the limit of `P_s^{-1} q-(s)`.
    pub q_minus: Mat,
    /// `I - q_minus`.
    pub r_minus: Mat,
    /// `(I - q_minus) C`, the exponent of the depth density.
    pub r_c: Mat,
    /// Eigenvalues of `r_c`, one of them exactly zero.
    pub spectrum: Vec<Complex64>,
    pub iterations: usize,
}

fn erlang_mixture_mgf_matrix(law: &crate::model::ErlangMixture, a: &Mat) -> Result<Mat> {
    let m = a.nrows();
    let mut out = Mat::zeros(m, m);
    for t in law.terms() {
        let x = linalg::inverse(&(Mat::identity(m, m) * t.rate - a), "delta I - A")? * t.rate;
        let mut p = Mat::identity(m, m);
        for _ in 0..t.shape {
            p = &p * &x;
        }
        out += p * t.weight;
    }
    Ok(out)
}

pub fn xi_bar_limit(model: &ValidatedModel) -> Result<XiBarLimit> {
    model.require_no_switching("xi_bar_limit")?;
    model.require_negative_drift("xi_bar_limit")?;
    let m = model.states();
    let pi = model.pi();
    let pi_mat = linalg::diag(pi.as_slice());
    let pi_inv = linalg::diag(&pi.iter().map(|p| 1.0 / p).collect::<Vec<_>>());
    let q_hat = &pi_inv * model.q().transpose() * &pi_mat;
    let c = model.c();
    let lambda_neg = model.lambda_neg();
    let solve = (model.lambda() - q_hat).lu();
    let eye = Mat::identity(m, m);

    let mut h = Mat::zeros(m, m);
    let mut iterations = 0;
    loop {
        iterations += 1;
        let a = &c * (&h - &eye);
        let mut b = lambda_neg.clone();
        for (j, law) in model.laws().iter().enumerate() {
            if let Some(pos) = law.active_pos_law() {
                let row = (&h * erlang_mixture_mgf_matrix(pos, &a)?).row(j) * law.pos_rate;
                let mut target = b.row_mut(j);
                target += row;
            }
        }
        let next = solve
            .solve(&b)
            .ok_or_else(|| Error::singular("Lambda - Q^ is singular"))?;
        let diff = (&next - &h).amax();
        h = next;
        if diff < FIXED_POINT_TOL {
            break;
        }
        if iterations >= FIXED_POINT_MAX_ITER {
            return Err(Error::Convergence(format!(
                "ladder kernel iteration stalled at step {diff:e}"
            )));
        }
    }
    for i in 0..m {
        let s = h.row(i).sum();
        if (s - 1.0).abs() > 1e-7 {
            return Err(Error::Convergence(format!(
                "ladder kernel row {i} sums to {s}, expected 1"
            )));
        }
        h.row_mut(i).unscale_mut(s);
    }
    let q_minus = &pi_inv * h.transpose() * &pi_mat;
    let r_minus = &eye - &q_minus;
    let r_c = &r_minus * &c;
    let spectrum = snap_spectrum(linalg::eigenvalues(&r_c));
    Ok(XiBarLimit {
        h,
        q_minus,
        r_minus,
        r_c,
        spectrum,
        iterations,
    })
}

fn snap_spectrum(mut eig: Vec<Complex64>) -> Vec<Complex64> {
    let scale = eig.iter().map(|z| z.norm()).fold(1.0, f64::max);
    for z in eig.iter_mut() {
        if z.norm() < 1e-9 * scale {
            *z = Complex64::new(0.0, 0.0);
        } else if z.im.abs() < 1e-12 * scale {
            z.im = 0.0;
        }
    }
    eig
}

/// `(theta_a, E_a)` with `e^{-yR} = sum_a e^{-theta_a y} E_a`.
fn spectral_projectors(r: &Mat, spectrum: &[Complex64]) -> Result<Vec<(Complex64, CMat)>> {
    let m = r.nrows();
    let scale = spectrum.iter().map(|z| z.norm()).fold(1.0, f64::max);
    for (a, x) in spectrum.iter().enumerate() {
        for y in &spectrum[a + 1..] {
            if (x - y).norm() < 1e-8 * scale {
                return Err(Error::Unsupported(format!(
                    "repeated eigenvalue {x} in the depth exponent"
                )));
            }
        }
    }
    let rc = linalg::to_complex(r);
    let eye = CMat::identity(m, m);
    Ok(spectrum
        .iter()
        .enumerate()
        .map(|(a, &ta)| {
            let mut e = eye.clone();
            for (b, &tb) in spectrum.iter().enumerate() {
                if a != b {
                    e = e * (&rc - &eye * tb) / (ta - tb);
                }
            }
            (ta, e)
        })
        .collect())
}

/// One summand `zeta z^l e^{-delta z}` of `Kbar0(z)[k][k]`.
struct TailTerm {
    state: usize,
    delta: f64,
    power: usize,
    zeta: f64,
}

fn tail_terms(model: &ValidatedModel) -> Vec<TailTerm> {
    let mut out = vec![];
    for (k, law) in model.laws().iter().enumerate() {
        if let Some(pos) = law.active_pos_law() {
            for t in pos.terms() {
                for l in 0..t.shape as usize {
                    out.push(TailTerm {
                        state: k,
                        delta: t.rate,
                        power: l,
                        zeta: law.pos_rate * t.weight * t.rate.powi(l as i32) / linalg::factorial(l),
                    });
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OvershootKind {
    /// Excess over the level at first passage.
    GammaPlus,
    /// Deficit just before the passage.
    GammaUnder,
    /// Size of the crossing jump.
    GammaTotal,
}

impl OvershootKind {
    pub const ALL: [OvershootKind; 3] = [
        OvershootKind::GammaPlus,
        OvershootKind::GammaUnder,
        OvershootKind::GammaTotal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OvershootKind::GammaPlus => "gamma_plus",
            OvershootKind::GammaUnder => "gamma_under",
            OvershootKind::GammaTotal => "gamma_total",
        }
    }
}

impl std::str::FromStr for OvershootKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        OvershootKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown overshoot kind {s:?}")))
    }
}

/// `z -> P_i{gamma(0) > z, tau+(0) < inf, x(tau+) = k}` for the three kinds.
#[derive(Clone, Debug, PartialEq)]
pub struct OvershootTails {
    pub plus: MatrixExpMixture,
    pub under: MatrixExpMixture,
    pub total: MatrixExpMixture,
}

impl OvershootTails {
    pub fn get(&self, kind: OvershootKind) -> &MatrixExpMixture {
        match kind {
            OvershootKind::GammaPlus => &self.plus,
            OvershootKind::GammaUnder => &self.under,
            OvershootKind::GammaTotal => &self.total,
        }
    }
}

fn unit(m: usize, k: usize) -> CMat {
    let mut e = CMat::zeros(m, m);
    e[(k, k)] = Complex64::new(1.0, 0.0);
    e
}

pub fn overshoot_tails(model: &ValidatedModel) -> Result<OvershootTails> {
    let xi = xi_bar_limit(model)?;
    overshoot_tails_from(model, &xi)
}

pub fn overshoot_tails_from(model: &ValidatedModel, xi: &XiBarLimit) -> Result<OvershootTails> {
    let m = model.states();
    let p0 = linalg::to_complex(&p0_limit(model)?);
    let p0c = &p0 * linalg::to_complex(&model.c());
    let mc = linalg::to_complex(&xi.q_minus);
    let proj = spectral_projectors(&xi.r_c, &xi.spectrum)?;
    let terms = tail_terms(model);
    let one = Complex64::new(1.0, 0.0);

    let mut plus = MatrixExpMixture::new(m);
    let mut under = MatrixExpMixture::new(m);
    let mut total = MatrixExpMixture::new(m);
    for t in &terms {
        let ekk = unit(m, t.state);
        let direct = &p0 * &ekk * Complex64::new(t.zeta, 0.0);
        let delta = Complex64::new(t.delta, 0.0);
        plus.push(delta, t.power, direct.clone());
        total.push(delta, t.power, direct);
        for (theta, e) in &proj {
            let base = &p0c * e * &mc * &ekk * Complex64::new(t.zeta, 0.0);
            let beta = theta + delta;
            let l = t.power;
            // int_0^inf e^{-theta y} (y + z)^l e^{-delta (y + z)} dy
            for j in 0..=l {
                let w = linalg::binomial(l, j) * linalg::factorial(j) / beta.powi(j as i32 + 1);
                plus.push(delta, l - j, &base * w);
            }
            // int_z^inf e^{-beta y} y^l dy
            for j in 0..=l {
                let w = linalg::factorial(l) / linalg::factorial(j) / beta.powi((l - j) as i32 + 1);
                under.push(beta, j, &base * w);
                total.push(beta, j, &base * w);
            }
            // int_0^z e^{-theta y} dy * z^l e^{-delta z}
            if theta.norm() == 0.0 {
                total.push(delta, l + 1, base.clone());
            } else {
                total.push(delta, l, &base * (one / theta));
                total.push(beta, l, &base * (-one / theta));
            }
        }
    }
    Ok(OvershootTails { plus, under, total })
}

/// `P{gamma_kind(0) > z, tau+(0) < inf}` per (initial state, state at passage).
pub fn overshoot_tail_zero(model: &ValidatedModel, kind: OvershootKind, z: f64) -> Result<Mat> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(Error::Argument(format!("need z >= 0, got {z}")));
    }
    Ok(overshoot_tails(model)?.get(kind).value(z))
}

/// Ascending ladder-height measure of the first strict passage over zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderMeasure {
    /// Matrix density on `(0, inf)`.
    pub density: MatrixExpMixture,
    /// Total mass; row sums are `P_i{tau+(0) < inf}`.
    pub norm: Mat,
    tail: MatrixExpMixture,
}

impl LadderMeasure {
    /// `G+(u) = G+((0, u])`.
    pub fn cdf(&self, u: f64) -> Mat {
        &self.norm - self.tail.value(u)
    }

    /// Largest row sum of the total mass.
    pub fn norm_inf(&self) -> f64 {
        (0..self.norm.nrows())
            .map(|i| self.norm.row(i).sum())
            .fold(0.0, f64::max)
    }
}

pub fn ladder_measure(model: &ValidatedModel) -> Result<LadderMeasure> {
    let tails = overshoot_tails(model)?;
    Ok(ladder_measure_from(&tails))
}

pub fn ladder_measure_from(tails: &OvershootTails) -> LadderMeasure {
    let density = {
        let mut d = tails.plus.derivative();
        for t in d.terms.iter_mut() {
            for c in t.coeffs.iter_mut() {
                *c = -c.clone();
            }
        }
        d
    };
    LadderMeasure {
        density,
        norm: tails.plus.value(0.0),
        tail: tails.plus.clone(),
    }
}

/// Number of renewal terms `N` with `rho^{N+1} / (1 - rho) < tol`.
pub fn pk_terms(rho: f64, tol: f64) -> Result<usize> {
    if !(rho < 1.0) {
        return Err(Error::Drift(format!(
            "ladder mass {rho} is not below one; the renewal series diverges"
        )));
    }
    if rho <= 0.0 {
        return Ok(0);
    }
    let mut n = 0usize;
    while rho.powi(n as i32 + 1) / (1.0 - rho) >= tol {
        n += 1;
    }
    Ok(n)
}

/// `psi_i(u)` from the renewal series `1 - psi = sum_n G+^{*n}(u) (I - ||G||) e`,
/// with convolutions done numerically on a uniform grid.
pub fn pk_series(model: &ValidatedModel, i: usize, u: f64, tol: f64) -> Result<f64> {
    let m = model.states();
    if i >= m || !(u >= 0.0 && u.is_finite()) || !(tol > 0.0) {
        return Err(Error::Argument(format!(
            "pk_series needs state < {m}, u >= 0 and tol > 0"
        )));
    }
    let g = ladder_measure(model)?;
    Ok(pk_series_from(&g, u, tol)?[i])
}

/// Every state at once; see [`pk_series`].
pub fn pk_series_from(g: &LadderMeasure, u: f64, tol: f64) -> Result<Vec<f64>> {
    let m = g.norm.nrows();
    let n_terms = pk_terms(g.norm_inf(), tol)?;
    let exit: Vec<f64> = (0..m).map(|i| 1.0 - g.norm.row(i).sum()).collect();
    if u == 0.0 || n_terms == 0 {
        return Ok(exit.iter().map(|e| 1.0 - e).collect());
    }
    let h = u / PK_GRID as f64;
    let mm = m * m;
    let dens: Vec<f64> = (0..=PK_GRID)
        .flat_map(|j| {
            let d = g.density.value(j as f64 * h);
            (0..mm).map(move |q| d[(q / m, q % m)])
        })
        .collect();

    // F_1 on the grid; F_0 = I is handled separately.
    let mut f: Vec<f64> = (0..=PK_GRID)
        .flat_map(|j| {
            let c = g.cdf(j as f64 * h);
            (0..mm).map(move |q| c[(q / m, q % m)])
        })
        .collect();
    let mut sum_u: Vec<f64> = f[PK_GRID * mm..].to_vec();
    for _ in 2..=n_terms {
        let next: Vec<f64> = (0..=PK_GRID)
            .into_par_iter()
            .flat_map_iter(|j| convolve_at(&dens, &f, j, m, h))
            .collect();
        f = next;
        for (s, v) in sum_u.iter_mut().zip(&f[PK_GRID * mm..]) {
            *s += v;
        }
    }
    Ok((0..m)
        .map(|i| {
            let survive = exit[i]
                + (0..m)
                    .map(|k| sum_u[i * m + k] * exit[k])
                    .sum::<f64>();
            1.0 - survive
        })
        .collect())
}

/// `int_0^{x_j} g(y) F(x_j - y) dy` by the trapezoid rule (Simpson when the
/// interval count is even).
fn convolve_at(dens: &[f64], f: &[f64], j: usize, m: usize, h: f64) -> Vec<f64> {
    let mm = m * m;
    let mut out = vec![0.0; mm];
    if j == 0 {
        return out;
    }
    let simpson = j.is_multiple_of(2);
    for s in 0..=j {
        let w = if simpson {
            if s == 0 || s == j {
                h / 3.0
            } else if s % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            }
        } else if s == 0 || s == j {
            h / 2.0
        } else {
            h
        };
        let a = &dens[s * mm..(s + 1) * mm];
        let b = &f[(j - s) * mm..(j - s + 1) * mm];
        for r in 0..m {
            for c in 0..m {
                let mut acc = 0.0;
                for k in 0..m {
                    acc += a[r * m + k] * b[k * m + c];
                }
                out[r * m + c] += w * acc;
            }
        }
    }
    out
}
