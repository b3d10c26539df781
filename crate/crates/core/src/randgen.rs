//! Seeded random states and Hamiltonians.
//!
//! Each [`RngStream`] is a ChaCha8 generator seeded from `seed` and switched
//! to stream `stream_id`, so instance `k` of a sweep draws the same numbers
//! regardless of which worker runs it.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StandardUniform};

use crate::error::{Error, Result};
use crate::hamiltonian::{embed_operator, Hamiltonian};
use crate::linalg::{ComplexMatrix, C64};
use crate::state::{DensityState, SystemLayout};

/// Label of the single subsystem used by the dimension-only samplers.
pub const SINGLE_LABEL: &str = "S";

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        StandardUniform.sample(&mut self.rng)
    }

    /// Real and imaginary parts independent standard normals.
    pub fn complex_normal(&mut self) -> C64 {
        let re = self.normal();
        let im = self.normal();
        C64::new(re, im)
    }

    fn ginibre(&mut self, dim: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(dim, dim, |_, _| self.complex_normal())
    }
}

/// Hamiltonian ensembles for sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum HamiltonianEnsemble {
    /// `(G + G†)/2` with complex Ginibre `G`.
    #[default]
    Gue,
    /// Real and imaginary parts of each entry uniform on `[-1, 1)`, Hermitized.
    Uniform,
}

/// Mediator state ensembles for sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum StateEnsemble {
    /// `GG†/tr(GG†)`.
    #[default]
    HilbertSchmidt,
    /// Haar-random pure states.
    Pure,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::BadDimension(dim));
    }
    Ok(())
}

fn single(dim: usize) -> SystemLayout {
    SystemLayout::new([(SINGLE_LABEL, dim)]).expect("dim ≥ 2")
}

/// Haar-random pure state on a one-subsystem layout labeled `S`.
pub fn haar_pure(dim: usize, rng: &mut RngStream) -> Result<DensityState> {
    check_dim(dim)?;
    haar_pure_on(single(dim), rng)
}

/// Haar-random pure state on `layout`.
pub fn haar_pure_on(layout: SystemLayout, rng: &mut RngStream) -> Result<DensityState> {
    check_dim(layout.total_dim())?;
    let v: Vec<C64> = (0..layout.total_dim())
        .map(|_| rng.complex_normal())
        .collect();
    DensityState::from_pure(layout, v)
}

/// Hilbert-Schmidt random density matrix on a one-subsystem layout.
pub fn random_density(dim: usize, rng: &mut RngStream) -> Result<DensityState> {
    check_dim(dim)?;
    random_density_on(single(dim), rng)
}

pub fn random_density_on(layout: SystemLayout, rng: &mut RngStream) -> Result<DensityState> {
    let dim = layout.total_dim();
    check_dim(dim)?;
    let g = rng.ginibre(dim);
    let w = g.matmul(&g.adjoint());
    let tr = w.trace().re;
    Ok(DensityState::from_matrix_unchecked(
        layout,
        w.scale(1.0 / tr),
    ))
}

/// Draws from `ensemble` on `layout`.
pub fn random_state_on(
    layout: SystemLayout,
    ensemble: StateEnsemble,
    rng: &mut RngStream,
) -> Result<DensityState> {
    match ensemble {
        StateEnsemble::HilbertSchmidt => random_density_on(layout, rng),
        StateEnsemble::Pure => haar_pure_on(layout, rng),
    }
}

/// GUE matrix `(G + G†)/2`.
pub fn random_hermitian(dim: usize, rng: &mut RngStream) -> Result<ComplexMatrix> {
    random_hermitian_from(dim, HamiltonianEnsemble::Gue, rng)
}

pub fn random_hermitian_from(
    dim: usize,
    ensemble: HamiltonianEnsemble,
    rng: &mut RngStream,
) -> Result<ComplexMatrix> {
    check_dim(dim)?;
    let g = match ensemble {
        HamiltonianEnsemble::Gue => rng.ginibre(dim),
        HamiltonianEnsemble::Uniform => ComplexMatrix::from_fn(dim, dim, |_, _| {
            let re = 2.0 * rng.uniform() - 1.0;
            let im = 2.0 * rng.uniform() - 1.0;
            C64::new(re, im)
        }),
    };
    Ok(g.hermitian_part())
}

/// `H_AC + H_BC` with GUE blocks on layout `A, B, C`, or `A, B` with local
/// terms only when `d_c = 1`.
pub fn random_mediated_hamiltonian(
    d_a: usize,
    d_b: usize,
    d_c: usize,
    rng: &mut RngStream,
) -> Result<Hamiltonian> {
    random_mediated_hamiltonian_from(d_a, d_b, d_c, HamiltonianEnsemble::Gue, rng)
}

pub fn random_mediated_hamiltonian_from(
    d_a: usize,
    d_b: usize,
    d_c: usize,
    ensemble: HamiltonianEnsemble,
    rng: &mut RngStream,
) -> Result<Hamiltonian> {
    check_dim(d_a)?;
    check_dim(d_b)?;
    if d_c == 0 {
        return Err(Error::BadDimension(d_c));
    }
    let h_ac = random_hermitian_from(d_a * d_c, ensemble, rng)?;
    let h_bc = random_hermitian_from(d_b * d_c, ensemble, rng)?;
    let (layout, ac, bc): (SystemLayout, &[&str], &[&str]) = if d_c == 1 {
        (SystemLayout::new([("A", d_a), ("B", d_b)])?, &["A"], &["B"])
    } else {
        (
            SystemLayout::new([("A", d_a), ("B", d_b), ("C", d_c)])?,
            &["A", "C"],
            &["B", "C"],
        )
    };
    let m = &embed_operator(&layout, ac, &h_ac)? + &embed_operator(&layout, bc, &h_bc)?;
    Hamiltonian::new(layout, m, format!("random-mediated:{d_a},{d_b},{d_c}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, kron};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let mut other = RngStream::new(7, 4);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..8).map(|_| other.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
        assert_eq!((a.seed(), a.stream_id()), (7, 3));
    }

    #[test]
    fn samplers_are_valid() {
        let mut rng = RngStream::new(1, 0);
        let psi = haar_pure(3, &mut rng).unwrap();
        let norm: f64 = psi
            .pure_vector()
            .unwrap()
            .iter()
            .map(|z| z.norm_sqr())
            .sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let rho = random_density(4, &mut rng).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(rho.eigenvalues()[0] > -1e-12);
        let h = random_hermitian(5, &mut rng).unwrap();
        assert_eq!(h.hermitian_deviation(), 0.0);
        assert!(hermitian_eigenvalues(&h).is_ok());
        assert!(matches!(
            haar_pure(1, &mut rng),
            Err(Error::BadDimension(1))
        ));
    }

    #[test]
    fn mediated_has_no_direct_term() {
        let mut rng = RngStream::new(11, 2);
        let h = random_mediated_hamiltonian(2, 3, 2, &mut rng).unwrap();
        let layout = h.layout().clone();
        let n = layout.total_dim();
        // <a b c| H |a' b' c'> vanishes unless a = a' or b = b'
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (layout.digits(i), layout.digits(j));
                if x[0] != y[0] && x[1] != y[1] {
                    assert_eq!(h.matrix()[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn trivial_mediator_is_local() {
        let mut rng = RngStream::new(5, 9);
        let h = random_mediated_hamiltonian(2, 2, 1, &mut rng).unwrap();
        let mut replay = RngStream::new(5, 9);
        let ha = random_hermitian(2, &mut replay).unwrap();
        let hb = random_hermitian(2, &mut replay).unwrap();
        let i2 = ComplexMatrix::identity(2);
        let expected = &kron(&ha, &i2) + &kron(&i2, &hb);
        assert!(h.matrix().max_abs_diff(&expected) < 1e-15);
        assert_eq!(h.layout().len(), 2);
    }
}
