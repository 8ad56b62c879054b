#![allow(dead_code)]

pub mod invariants;

use mmrisk::linalg::Mat;
use mmrisk::model::{validate_spec, ErlangMixture, ErlangTerm, ProcessSpec, StateJumpLaw, ValidatedModel};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

pub const REFERENCE_JSON: &str = include_str!("../../examples/paper.json");

pub fn reference_model() -> ValidatedModel {
    validate_spec(ProcessSpec::from_json(REFERENCE_JSON).unwrap()).unwrap()
}

/// Fixed-seed runner config so the randomized suites are reproducible.
pub fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(20240917),
        failure_persistence: None,
        ..Config::default()
    }
}

fn grid(lo: u32, hi: u32) -> impl Strategy<Value = f64> {
    (lo..=hi).prop_map(|k| k as f64 * 0.05)
}

fn mixture() -> impl Strategy<Value = ErlangMixture> {
    prop::collection::vec((1u32..=4, 1u32..=3, grid(10, 80)), 1..=2).prop_map(|raw| {
        let total: u32 = raw.iter().map(|t| t.0).sum();
        let terms = raw
            .iter()
            .map(|&(w, n, delta)| ErlangTerm {
                weight: w as f64 / total as f64,
                shape: n,
                rate: delta,
            })
            .collect();
        ErlangMixture::new(terms).unwrap()
    })
}

fn law() -> impl Strategy<Value = StateJumpLaw> {
    (grid(4, 40), mixture(), grid(10, 60), grid(4, 40))
        .prop_map(|(lp, mix, lm, c)| StateJumpLaw::new(lp, Some(mix), lm, c))
}

/// Valid models with `m` in 1..=4, full generators and negative drift.
pub fn random_model() -> impl Strategy<Value = ValidatedModel> {
    (1usize..=4)
        .prop_flat_map(|m| {
            (
                prop::collection::vec(grid(4, 40), m * m),
                prop::collection::vec(law(), m),
            )
        })
        .prop_map(|(rates, mut laws)| {
            let m = laws.len();
            let mut q = Mat::from_fn(m, m, |i, j| if i == j { 0.0 } else { rates[i * m + j] });
            for i in 0..m {
                q[(i, i)] = -q.row(i).sum();
            }
            // Raise downward intensities so every state drifts down; the chain
            // may still mix states of very different drift.
            for l in laws.iter_mut() {
                let up = l.pos_rate * l.pos_law.as_ref().unwrap().mean();
                if l.neg_rate / l.neg_exp_rate < 1.2 * up {
                    l.neg_rate = (1.2 * up * l.neg_exp_rate * 20.0).ceil() / 20.0;
                }
            }
            let model = validate_spec(ProcessSpec::new(q, laws)).unwrap();
            assert!(model.drift() < 0.0);
            model
        })
}
