//! Lundberg exponent and two-sided exponential bounds on ruin probabilities.
//!
//! `k(r)` is the Perron root of the cumulant matrix `K(r)`; it is convex
//! with `k(0) = 0` and `k'(0) = m1`. Under negative drift the positive zero
//! `gamma` of `k` is the decay rate of every `psi_i(u)`, and
//! `C- h_i e^{-gamma u} <= psi_i(u) <= C+ h_i e^{-gamma u}`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{ErlangMixture, ValidatedModel};
use crate::transforms::{cumulant_derivative, cumulant_matrix, CumulantDomain};

/// Everything needed to evaluate the Lundberg bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LundbergCertificate {
    pub gamma: f64,
    /// Left Perron vector of `K(gamma)` (row), scaled so `nu h = 1`.
    pub nu: DVector<f64>,
    /// Right Perron vector of `K(gamma)`, scaled so `max h = 1`.
    pub h: DVector<f64>,
    pub c_minus: f64,
    pub c_plus: f64,
}

/// Real eigenvalue of `K(r)` with maximal real part.
pub fn perron_root(model: &ValidatedModel, r: f64) -> Result<f64> {
    let k = cumulant_matrix(model, r)?;
    Ok(perron_of(&k))
}

fn perron_of(k: &Mat) -> f64 {
    linalg::eigenvalues(k)
        .last()
        .map(|z| z.re)
        .expect("non-empty matrix")
}

/// `k'(r) = nu K'(r) h / (nu h)` from the Perron eigenpair at `r`.
fn perron_slope(model: &ValidatedModel, r: f64) -> Result<f64> {
    let k = cumulant_matrix(model, r)?;
    let (nu, h) = perron_pair(&k)?;
    let dk = cumulant_derivative(model, r)?;
    Ok((nu.transpose() * dk * &h)[(0, 0)] / nu.dot(&h))
}

/// Positive left/right Perron vectors of an ML-matrix (unnormalized scale).
fn perron_pair(k: &Mat) -> Result<(DVector<f64>, DVector<f64>)> {
    let m = k.nrows();
    let shifted = k - Mat::identity(m, m) * perron_of(k);
    let scale = linalg::max_abs(k).max(1.0);
    let (h, _, second_r) = linalg::null_vector(&shifted);
    let (nu, _, second_l) = linalg::null_vector(&shifted.transpose());
    if second_r < 1e-9 * scale || second_l < 1e-9 * scale {
        return Err(Error::Spectral("Perron root is not simple".into()));
    }
    let orient = |v: DVector<f64>| -> Result<DVector<f64>> {
        let v = if v.sum() < 0.0 { -v } else { v };
        let top = v.amax();
        if v.iter().any(|&x| x <= 1e-12 * top) {
            return Err(Error::Spectral(
                "Perron eigenvector has non-positive entries".into(),
            ));
        }
        Ok(v)
    };
    Ok((orient(nu)?, orient(h)?))
}

/// Positive root `gamma` of `k(r) = 0` on `(0, r_hi)`.
pub fn lundberg_exponent(model: &ValidatedModel) -> Result<f64> {
    model.require_no_switching("lundberg_exponent")?;
    if !(model.drift() < 0.0) {
        return Err(Error::NoRoot(format!(
            "drift m1 = {} is not negative, so k(r) > 0 for all r > 0",
            model.drift()
        )));
    }
    let domain = CumulantDomain::of(model);
    if !domain.r_hi.is_finite() {
        return Err(Error::NoRoot(
            "no upward jumps: k(r) < 0 for every r > 0".into(),
        ));
    }
    let k = |r: f64| perron_root(model, r);

    let mut hi = None;
    for j in 1..60 {
        let b = domain.r_hi * (1.0 - 0.5f64.powi(j));
        if k(b)? > 0.0 {
            hi = Some(b);
            break;
        }
    }
    let mut hi = hi.ok_or_else(|| {
        Error::NoRoot("k(r) has no sign change on (0, r_hi): Cramer condition fails".into())
    })?;
    let mut lo = hi;
    let mut found = false;
    for _ in 0..200 {
        lo *= 0.5;
        if k(lo)? < 0.0 {
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::NoRoot("could not bracket the root from below".into()));
    }

    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if k(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut gamma = 0.5 * (lo + hi);
    for _ in 0..20 {
        let value = k(gamma)?;
        if value.abs() < 1e-14 {
            break;
        }
        let next = gamma - value / perron_slope(model, gamma)?;
        if !(next > lo - 1e-12 && next < hi + 1e-12) {
            break;
        }
        gamma = next;
    }
    let residual = k(gamma)?.abs();
    if residual >= 1e-12 {
        return Err(Error::NoRoot(format!("root polish stalled at |k| = {residual:e}")));
    }
    Ok(gamma)
}

/// Perron eigenvectors of `K(gamma)`: `h` with unit maximum, `nu` with `nu h = 1`.
pub fn lundberg_vectors(
    model: &ValidatedModel,
    gamma: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let k = cumulant_matrix(model, gamma)?;
    let root = perron_of(&k);
    if root.abs() >= 1e-10 {
        return Err(Error::Spectral(format!(
            "k(gamma) = {root:e} is not zero; gamma is not a Lundberg root"
        )));
    }
    let (nu, h) = perron_pair(&k)?;
    let h = &h / h.amax();
    let nu = &nu / nu.dot(&h);
    Ok((nu, h))
}

/// `F+bar(x) / int_x^inf e^{gamma (y - x)} F+(dy)` for an Erlang mixture,
/// with the common factor `e^{-min delta x}` removed from both parts.
fn tail_ratio(law: &ErlangMixture, gamma: f64, x: f64) -> f64 {
    let dmin = law.min_rate();
    let mut num = 0.0;
    let mut den = 0.0;
    for t in law.terms() {
        let damp = (-(t.rate - dmin) * x).exp();
        let a = t.rate - gamma;
        let mut xk = 1.0; // x^k / k!
        for k in 0..t.shape as i32 {
            if k > 0 {
                xk *= x / k as f64;
            }
            num += t.weight * damp * t.rate.powi(k) * xk;
            den += t.weight * damp * t.rate.powi(t.shape as i32) / a.powi(t.shape as i32 - k) * xk;
        }
    }
    num / den
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, maximize: bool) -> (f64, f64) {
    let sign = if maximize { -1.0 } else { 1.0 };
    let g = |x: f64| sign * f(x);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..100 {
        if (b - a).abs() < 1e-12 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = g(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Infimum and supremum over `x >= 0` of the tail ratio of one state.
fn ratio_extrema(law: &ErlangMixture, gamma: f64) -> (f64, f64) {
    let dmin = law.min_rate();
    let step = 0.01 / dmin;
    let x_max = 200.0 * law.max_shape() as f64 / dmin;
    let n = (x_max / step).ceil() as usize;
    let values: Vec<f64> = (0..=n).map(|i| tail_ratio(law, gamma, i as f64 * step)).collect();
    let refine = |maximize: bool| {
        let pick = |a: &&f64, b: &&f64| a.total_cmp(b);
        let idx = if maximize {
            values.iter().enumerate().max_by(|a, b| pick(&a.1, &b.1)).unwrap().0
        } else {
            values.iter().enumerate().min_by(|a, b| pick(&a.1, &b.1)).unwrap().0
        };
        let a = idx.saturating_sub(1) as f64 * step;
        let b = (idx + 1).min(n) as f64 * step;
        let (_, refined) = golden_section(|x| tail_ratio(law, gamma, x), a, b, maximize);
        if maximize {
            refined.max(values[idx])
        } else {
            refined.min(values[idx])
        }
    };
    let limit = (dmin - gamma) / dmin;
    (refine(false).min(limit), refine(true).max(limit))
}

/// `(C-, C+)` for the given exponent and right eigenvector.
///
/// States without upward jumps never produce the overshoot and are skipped.
pub fn lundberg_constants(
    model: &ValidatedModel,
    gamma: f64,
    h: &DVector<f64>,
) -> Result<(f64, f64)> {
    let domain = CumulantDomain::of(model);
    if !(gamma > 0.0 && gamma < domain.r_hi) {
        return Err(Error::Domain {
            r: gamma,
            lo: 0.0,
            hi: domain.r_hi,
        });
    }
    let mut c_minus = f64::INFINITY;
    let mut c_plus: f64 = 0.0;
    for (j, law) in model.laws().iter().enumerate() {
        let Some(pos) = law.active_pos_law() else {
            continue;
        };
        let (lo, hi) = ratio_extrema(pos, gamma);
        c_minus = c_minus.min(lo / h[j]);
        c_plus = c_plus.max(hi / h[j]);
    }
    if !c_minus.is_finite() {
        return Err(Error::NoRoot("no state has upward jumps".into()));
    }
    Ok((c_minus, c_plus))
}

pub fn lundberg_certificate(model: &ValidatedModel) -> Result<LundbergCertificate> {
    let gamma = lundberg_exponent(model)?;
    let (nu, h) = lundberg_vectors(model, gamma)?;
    let (c_minus, c_plus) = lundberg_constants(model, gamma, &h)?;
    Ok(LundbergCertificate {
        gamma,
        nu,
        h,
        c_minus,
        c_plus,
    })
}

/// `(C- h_i e^{-gamma u}, C+ h_i e^{-gamma u})`.
pub fn lundberg_bounds(cert: &LundbergCertificate, i: usize, u: f64) -> (f64, f64) {
    let decay = (-cert.gamma * u).exp();
    (
        cert.c_minus * cert.h[i] * decay,
        cert.c_plus * cert.h[i] * decay,
    )
}
