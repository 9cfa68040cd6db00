#![allow(dead_code)]

use farming_core::gaussian::CovarianceMatrix;
use farming_core::linalg::{congruence, expm, omega_left};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// `exp(Ω K)` for symmetric `K` built from `entries`.
pub fn symplectic_from(n_modes: usize, entries: &[f64]) -> DMatrix<f64> {
    let dim = 2 * n_modes;
    let mut k = DMatrix::zeros(dim, dim);
    let mut it = entries.iter().cycle();
    for i in 0..dim {
        for j in i..dim {
            let v = *it.next().unwrap();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    expm(&omega_left(&k)).unwrap()
}

pub fn state_from(n_modes: usize, nus: &[f64], entries: &[f64]) -> CovarianceMatrix {
    let s = symplectic_from(n_modes, entries);
    let d = DMatrix::from_fn(2 * n_modes, 2 * n_modes, |i, j| if i == j { nus[i / 2] } else { 0.0 });
    CovarianceMatrix::new(congruence(&s, &d)).unwrap()
}

pub fn generator_entries(n_modes: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    let dim = 2 * n_modes;
    prop::collection::vec(-scale..scale, dim * (dim + 1) / 2)
}

pub fn spectrum(n_modes: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1.0..4.0f64, n_modes)
}

/// Random physical state with `n_modes` modes: `(σ, ν)`.
pub fn physical_state(n_modes: usize) -> impl Strategy<Value = (CovarianceMatrix, Vec<f64>)> {
    (spectrum(n_modes), generator_entries(n_modes, 0.6)).prop_map(move |(nu, e)| (state_from(n_modes, &nu, &e), nu))
}

pub fn pure_state(n_modes: usize) -> impl Strategy<Value = CovarianceMatrix> {
    generator_entries(n_modes, 0.6).prop_map(move |e| state_from(n_modes, &vec![1.0; n_modes], &e))
}
