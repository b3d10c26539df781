#![allow(dead_code)]

use medqsl_core::linalg::{expm_i_hermitian, kron, ComplexMatrix};
use medqsl_core::randgen::{haar_pure_on, random_density_on, random_hermitian, RngStream};
use medqsl_core::{DensityState, SystemLayout};

pub fn layout(spec: &[(&str, usize)]) -> SystemLayout {
    SystemLayout::new(spec.iter().copied()).unwrap()
}

/// Pure or Hilbert-Schmidt mixed, chosen by the stream.
pub fn any_state(layout: SystemLayout, rng: &mut RngStream) -> DensityState {
    if rng.uniform() < 0.3 {
        haar_pure_on(layout, rng).unwrap()
    } else {
        random_density_on(layout, rng).unwrap()
    }
}

pub fn random_unitary(dim: usize, rng: &mut RngStream) -> ComplexMatrix {
    let h = random_hermitian(dim, rng).unwrap();
    expm_i_hermitian(&h, 1.0).unwrap()
}

pub fn conjugate(s: &DensityState, u: &ComplexMatrix) -> DensityState {
    let m = u.matmul(s.matrix()).matmul(&u.adjoint()).hermitian_part();
    DensityState::from_density(s.layout().clone(), m).unwrap()
}

pub fn local_unitary(da: usize, db: usize, rng: &mut RngStream) -> ComplexMatrix {
    kron(&random_unitary(da, rng), &random_unitary(db, rng))
}
