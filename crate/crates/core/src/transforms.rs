//! Matrix cumulant, killed resolvent and first-jump transforms, all on the
//! real line (`K(r) = E[e^{r xi(1)}; x(1)]` in generator form).

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::ValidatedModel;

/// Open interval of `r` where the cumulant is finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CumulantDomain {
    /// `-min c_k` over states with downward jumps (`-inf` if none).
    pub r_lo: f64,
    /// Smallest Erlang rate among active upward laws (`+inf` if none).
    pub r_hi: f64,
}

impl CumulantDomain {
    pub fn of(model: &ValidatedModel) -> Self {
        let r_lo = model
            .laws()
            .iter()
            .filter(|l| l.neg_rate > 0.0)
            .map(|l| -l.neg_exp_rate)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut r_hi = model
            .laws()
            .iter()
            .filter_map(|l| l.active_pos_law())
            .map(|law| law.min_rate())
            .fold(f64::INFINITY, f64::min);
        if let Some(table) = &model.spec().switching_jumps {
            for mix in table.iter().flatten().flatten() {
                r_hi = r_hi.min(mix.min_rate());
            }
        }
        CumulantDomain { r_lo, r_hi }
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.r_lo && r < self.r_hi
    }

    fn check(&self, r: f64) -> Result<()> {
        if self.contains(r) {
            Ok(())
        } else {
            Err(Error::Domain {
                r,
                lo: self.r_lo,
                hi: self.r_hi,
            })
        }
    }
}

/// `K(r)`: jump terms on the diagonal, chain generator (with switching-jump
/// transforms on the off-diagonal) elsewhere. `K(0) = Q`.
pub fn cumulant_matrix(model: &ValidatedModel, r: f64) -> Result<Mat> {
    CumulantDomain::of(model).check(r)?;
    let m = model.states();
    let mut k = model.q().clone();
    if let Some(table) = &model.spec().switching_jumps {
        for i in 0..m {
            for j in 0..m {
                if let Some(mix) = &table[i][j] {
                    k[(i, j)] *= mix.mgf(r);
                }
            }
        }
    }
    for (i, law) in model.laws().iter().enumerate() {
        k[(i, i)] += state_exponent(law, r);
    }
    Ok(k)
}

fn state_exponent(law: &crate::model::StateJumpLaw, r: f64) -> f64 {
    let mut d = 0.0;
    if let Some(pos) = law.active_pos_law() {
        d += law.pos_rate * (pos.mgf(r) - 1.0);
    }
    if law.neg_rate > 0.0 {
        let c = law.neg_exp_rate;
        d += law.neg_rate * (c / (c + r) - 1.0);
    }
    d
}

/// Entrywise derivative `K'(r)`.
pub fn cumulant_derivative(model: &ValidatedModel, r: f64) -> Result<Mat> {
    CumulantDomain::of(model).check(r)?;
    let m = model.states();
    let mut k = Mat::zeros(m, m);
    if let Some(table) = &model.spec().switching_jumps {
        for i in 0..m {
            for j in 0..m {
                if let Some(mix) = &table[i][j] {
                    k[(i, j)] = model.q()[(i, j)] * mix.mgf_derivative(r);
                }
            }
        }
    }
    for (i, law) in model.laws().iter().enumerate() {
        let mut d = 0.0;
        if let Some(pos) = law.active_pos_law() {
            d += law.pos_rate * pos.mgf_derivative(r);
        }
        if law.neg_rate > 0.0 {
            let c = law.neg_exp_rate;
            d -= law.neg_rate * c / ((c + r) * (c + r));
        }
        k[(i, i)] = d;
    }
    Ok(k)
}

/// Transform of the level at an independent `Exp(s)` time:
/// `E[e^{r xi(theta_s)}; x(theta_s)] = s (sI - K(r))^{-1}`.
pub fn resolvent(model: &ValidatedModel, s: f64, r: f64) -> Result<Mat> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Argument(format!("resolvent needs s > 0, got {s}")));
    }
    let k = cumulant_matrix(model, r)?;
    let m = model.states();
    let a = Mat::identity(m, m) * s - k;
    Ok(linalg::inverse(&a, &format!("sI - K(r) at s = {s}, r = {r}"))? * s)
}

/// `E[e^{-s zeta*}; x(zeta*)] = (sI + Lambda - Q)^{-1} Lambda`, with `zeta*`
/// the epoch of the first jump of the level process.
pub fn first_jump_transform(model: &ValidatedModel, s: f64) -> Result<Mat> {
    model.require_no_switching("first_jump_transform")?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Argument(format!("first_jump_transform needs s >= 0, got {s}")));
    }
    let m = model.states();
    let lambda = model.lambda();
    let a = Mat::identity(m, m) * s + &lambda - model.q();
    Ok(linalg::inverse(&a, "sI + Lambda - Q")? * lambda)
}

/// `lim_{s->0} s^{-1} P(xi(theta_s) = 0) = (Lambda - Q)^{-1}`: expected
/// occupation of each state before the first jump.
pub fn p0_limit(model: &ValidatedModel) -> Result<Mat> {
    model.require_no_switching("p0_limit")?;
    linalg::inverse(&(model.lambda() - model.q()), "Lambda - Q")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_spec, ErlangMixture, ProcessSpec, StateJumpLaw};

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
    fn cumulant_at_zero_is_generator() {
        let m = reference_model();
        assert_eq!(cumulant_matrix(&m, 0.0).unwrap(), *m.q());
    }

    #[test]
    fn domain_bounds_and_errors() {
        let m = reference_model();
        let d = CumulantDomain::of(&m);
        assert!((d.r_lo + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.r_hi, 1.0);
        match cumulant_matrix(&m, 1.0) {
            Err(Error::Domain { lo, hi, .. }) => assert!(lo < 0.0 && hi == 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resolvent_rows_sum_to_one_at_zero() {
        let m = reference_model();
        for s in [0.01, 0.1, 1.0, 10.0] {
            let p = resolvent(&m, s, 0.0).unwrap();
            for i in 0..2 {
                assert!((p.row(i).sum() - 1.0).abs() < 1e-12);
            }
        }
        let big = resolvent(&m, 1e6, 0.3).unwrap();
        assert!((big - Mat::identity(2, 2)).amax() < 1e-5);
    }

    #[test]
    fn first_jump_transform_limits() {
        let m = reference_model();
        let f0 = first_jump_transform(&m, 0.0).unwrap();
        for i in 0..2 {
            assert!((f0.row(i).sum() - 1.0).abs() < 1e-14);
        }
        assert!(first_jump_transform(&m, 1e6).unwrap().amax() < 1e-5);
    }

    #[test]
    fn p0_limit_values() {
        let m = reference_model();
        let p = p0_limit(&m).unwrap();
        let expect = Mat::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 3.0]) / 8.0;
        assert!((p - expect).amax() < 1e-15);

        let single = validate_spec(ProcessSpec::new(
            Mat::zeros(1, 1),
            vec![StateJumpLaw::new(1.0, Some(ErlangMixture::exponential(1.0)), 1.0, 1.0)],
        ))
        .unwrap();
        assert!((p0_limit(&single).unwrap()[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn switching_jumps_enter_off_diagonal() {
        let q = Mat::from_row_slice(2, 2, &[-2.0, 2.0, 1.0, -1.0]);
        let spec = ProcessSpec::new(
            q,
            vec![StateJumpLaw::new(1.0, Some(ErlangMixture::exponential(3.0)), 1.0, 1.0); 2],
        )
        .with_switching_jumps(vec![
            vec![None, Some(ErlangMixture::exponential(2.0))],
            vec![None, None],
        ]);
        let m = validate_spec(spec).unwrap();
        let k = cumulant_matrix(&m, 0.5).unwrap();
        assert!((k[(0, 1)] - 2.0 * 2.0 / 1.5).abs() < 1e-14);
        assert_eq!(k[(1, 0)], 1.0);
        assert!(first_jump_transform(&m, 0.0).is_err());
    }
}
