//! Hamiltonians in units of ħΩ, energy moments, and the builtin examples.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eig_unchecked, kron, ComplexMatrix, EigDecomposition, C64};
use crate::math;
use crate::state::{DensityState, SystemLayout};

/// Below this, `min{<M>, ΔM}` is treated as zero.
pub const STATIONARY_TOL: f64 = 1e-12;

/// Single-subsystem operators shared by the builtins and the `.hspec` grammar.
pub mod ops {
    use super::*;

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::from_row_major(
            2,
            2,
            vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        )
        .expect("2x2")
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::real_diagonal(&[1.0, -1.0])
    }

    /// `|0><j| + |j><0|`.
    pub fn gen_x(dim: usize, j: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(0, j)] += c(1.0, 0.0);
        m[(j, 0)] += c(1.0, 0.0);
        m
    }

    /// `-i|0><j| + i|j><0|`.
    pub fn gen_y(dim: usize, j: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(0, j)] += c(0.0, -1.0);
        m[(j, 0)] += c(0.0, 1.0);
        m
    }

    /// `|j><j|`.
    pub fn projector(dim: usize, j: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(j, j)] = c(1.0, 0.0);
        m
    }
}

/// Embeds `op`, acting on the subsystems `labels` (in that order), into the
/// full layout with identities elsewhere.
pub fn embed_operator<S: AsRef<str>>(
    layout: &SystemLayout,
    labels: &[S],
    op: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let positions = labels
        .iter()
        .map(|l| layout.position(l.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    for (k, p) in positions.iter().enumerate() {
        if positions[..k].contains(p) {
            return Err(Error::InvalidArgument(format!(
                "subsystem `{}` listed twice",
                labels[k].as_ref()
            )));
        }
    }
    let dims = layout.dims();
    let d_op: usize = positions.iter().map(|&p| dims[p]).product();
    if op.rows() != d_op || op.cols() != d_op {
        return Err(Error::DimensionMismatch {
            expected: d_op,
            found: op.rows(),
        });
    }
    let n = layout.total_dim();
    let all_digits: Vec<Vec<usize>> = (0..n).map(|i| layout.digits(i)).collect();
    let op_index = |digits: &[usize]| {
        positions
            .iter()
            .fold(0, |acc, &p| acc * dims[p] + digits[p])
    };
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let di = &all_digits[i];
        let oi = op_index(di);
        for j in 0..n {
            let dj = &all_digits[j];
            let spectators_match = (0..dims.len())
                .filter(|k| !positions.contains(k))
                .all(|k| di[k] == dj[k]);
            if spectators_match {
                out[(i, j)] = op[(oi, op_index(dj))];
            }
        }
    }
    Ok(out)
}

/// Hermitian generator in units of ħΩ.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    layout: SystemLayout,
    matrix: ComplexMatrix,
    label: String,
}

impl Hamiltonian {
    pub fn new(
        layout: SystemLayout,
        matrix: ComplexMatrix,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = layout.total_dim();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.rows(),
            });
        }
        if !matrix.is_finite() {
            return Err(Error::InvalidArgument(
                "non-finite Hamiltonian entry".into(),
            ));
        }
        matrix.check_hermitian()?;
        Ok(Hamiltonian {
            layout,
            matrix,
            label: label.into(),
        })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `k · H`.
    pub fn scaled(&self, k: f64) -> Hamiltonian {
        Hamiltonian {
            layout: self.layout.clone(),
            matrix: self.matrix.scale(k),
            label: self.label.clone(),
        }
    }

    pub fn eig(&self) -> EigDecomposition {
        hermitian_eig_unchecked(&self.matrix)
    }

    pub fn ground_energy(&self) -> f64 {
        crate::linalg::hermitian_eigenvalues_unchecked(&self.matrix)[0]
    }

    /// Same matrix on a layout with renamed subsystems.
    pub fn relabel(&self, labels: &[&str]) -> Result<Hamiltonian> {
        if labels.len() != self.layout.len() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.len(),
                found: labels.len(),
            });
        }
        let layout = SystemLayout::new(
            labels
                .iter()
                .zip(self.layout.subsystems())
                .map(|(l, s)| (*l, s.dim)),
        )?;
        Ok(Hamiltonian {
            layout,
            matrix: self.matrix.clone(),
            label: self.label.clone(),
        })
    }
}

/// Dimensionless energy moments of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyMoments {
    /// `<M> = tr(Mρ) - λ_min(M)`, clamped at 0.
    pub mean_above_ground: f64,
    /// `ΔM`.
    pub std_dev: f64,
    /// `E_g / ħΩ`.
    pub ground_energy: f64,
}

impl EnergyMoments {
    /// The speed-limit denominator `min{<M>, ΔM}`.
    pub fn denominator(&self) -> f64 {
        self.mean_above_ground.min(self.std_dev)
    }
}

pub fn energy_moments(h: &Hamiltonian, s: &DensityState) -> Result<EnergyMoments> {
    energy_moments_with_ground(h, s, h.ground_energy())
}

/// [`energy_moments`] with a precomputed ground energy.
pub fn energy_moments_with_ground(
    h: &Hamiltonian,
    s: &DensityState,
    ground_energy: f64,
) -> Result<EnergyMoments> {
    if h.layout != *s.layout() {
        return Err(Error::LayoutMismatch);
    }
    let (mean, second) = match s.pure_vector() {
        Some(psi) => {
            let h_psi = h.matrix.matvec(psi);
            let mean: f64 = crate::linalg::inner(psi, &h_psi).re;
            let second: f64 = h_psi.iter().map(|z| z.norm_sqr()).sum();
            (mean, second)
        }
        None => {
            let h_rho = h.matrix.matmul(s.matrix());
            let mean = h_rho.trace().re;
            let second = h_rho.trace_product(&h.matrix).re;
            (mean, second)
        }
    };
    let variance = (second - mean * mean).max(0.0);
    Ok(EnergyMoments {
        mean_above_ground: (mean - ground_energy).max(0.0),
        std_dev: math::sqrt(variance),
        ground_energy,
    })
}

/// Rescales `h` so that `min{<M>, ΔM} = 1` on `s`; returns the scaled
/// Hamiltonian and the factor `k > 0`.
pub fn resource_equality_scale(h: &Hamiltonian, s: &DensityState) -> Result<(Hamiltonian, f64)> {
    let moments = energy_moments(h, s)?;
    let k = scale_factor(&moments)?;
    Ok((h.scaled(k), k))
}

pub(crate) fn scale_factor(moments: &EnergyMoments) -> Result<f64> {
    let denominator = moments.denominator();
    if !(denominator > STATIONARY_TOL) {
        return Err(Error::StationaryState { denominator });
    }
    Ok(1.0 / denominator)
}

fn check_principal_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::BadDimension(d));
    }
    Ok(())
}

/// Optimal direct entangler on `A:d, B:d`:
/// `1/(2√(d-1)) Σ_{j≥1} (X^j + Y^j)_A ⊗ (X^j + Y^j)_B`.
pub fn direct_optimal(d: usize) -> Result<Hamiltonian> {
    check_principal_dim(d)?;
    let layout = SystemLayout::uniform(&["A", "B"], d)?;
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for j in 1..d {
        let local = &ops::gen_x(d, j) + &ops::gen_y(d, j);
        m = &m + &kron(&local, &local);
    }
    let m = m.scale(1.0 / (2.0 * math::sqrt((d - 1) as f64)));
    Hamiltonian::new(layout, m, format!("direct-optimal:{d}"))
}

/// `|0...0>` on a layout.
pub fn ground_ket(layout: SystemLayout) -> DensityState {
    let zeros = vec![0; layout.len()];
    DensityState::basis(layout, &zeros).expect("zero digits are valid")
}

fn three_qubit_hamiltonian(terms: &[(f64, [ComplexMatrix; 3])], label: &str) -> Hamiltonian {
    let mut m = ComplexMatrix::zeros(8, 8);
    for (k, [a, b, cc]) in terms {
        m = &m + &kron(&kron(a, b), cc).scale(*k);
    }
    Hamiltonian::new(SystemLayout::three_qubits(), m, label).expect("builtin is Hermitian")
}

/// `(X_A Y_C + Y_B X_C)/√2` from `|000>`.
pub fn cmi_product_example() -> (Hamiltonian, DensityState) {
    let (i, x, y) = (ComplexMatrix::identity(2), ops::pauli_x(), ops::pauli_y());
    let s = 1.0 / math::sqrt(2.0);
    let h = three_qubit_hamiltonian(
        &[(s, [x.clone(), i.clone(), y.clone()]), (s, [i, y, x])],
        "cmi-product",
    );
    (h, ground_ket(SystemLayout::three_qubits()))
}

/// GHZ state with `(Z_A ⊗ H_C1 + Z_B ⊗ H_C2)/(2√2)`,
/// `H_C1 = -(1 + X + Y + Z)`, `H_C2 = 1 - X - Y + Z`.
pub fn entangled_mediator_example() -> (Hamiltonian, DensityState) {
    let (i, x, y, z) = (
        ComplexMatrix::identity(2),
        ops::pauli_x(),
        ops::pauli_y(),
        ops::pauli_z(),
    );
    let h_c1 = (&(&(&i + &x) + &y) + &z).scale(-1.0);
    let h_c2 = &(&(&i - &x) - &y) + &z;
    let k = 1.0 / (2.0 * math::sqrt(2.0));
    let h = three_qubit_hamiltonian(
        &[(k, [z.clone(), i.clone(), h_c1]), (k, [i, z, h_c2])],
        "cmi-entangled",
    );
    let s = 1.0 / math::sqrt(2.0);
    let mut v = vec![C64::new(0.0, 0.0); 8];
    v[0] = c(s, 0.0);
    v[7] = c(s, 0.0);
    let state = DensityState::from_pure(SystemLayout::three_qubits(), v).expect("normalized");
    (h, state)
}

/// `½|ψ_m><ψ_m| ⊗ |0><0| + ½|ψ̃_m><ψ̃_m| ⊗ |1><1|` with
/// `ψ_m = (|+-> + |-+>)/√2`, `ψ̃_m = (|--> + |++>)/√2`.
pub fn flagged_bell_mixture() -> DensityState {
    let s = 1.0 / math::sqrt(2.0);
    let plus = [c(s, 0.0), c(s, 0.0)];
    let minus = [c(s, 0.0), c(-s, 0.0)];
    let pair = |a: &[C64; 2], b: &[C64; 2], e: &[C64; 2], f: &[C64; 2]| -> Vec<C64> {
        let first = crate::linalg::kron_vec(a, b);
        let second = crate::linalg::kron_vec(e, f);
        first
            .iter()
            .zip(&second)
            .map(|(u, v)| (u + v) * s)
            .collect()
    };
    let psi_m = pair(&plus, &minus, &minus, &plus);
    let psi_t = pair(&minus, &minus, &plus, &plus);
    let rho = &kron(&ComplexMatrix::outer(&psi_m), &ops::projector(2, 0)).scale(0.5)
        + &kron(&ComplexMatrix::outer(&psi_t), &ops::projector(2, 1)).scale(0.5);
    DensityState::from_density(SystemLayout::three_qubits(), rho).expect("valid mixture")
}

/// Flagged Bell mixture with `½(Z_A Z_C + Z_B Z_C)`.
pub fn classical_mediator_example() -> (Hamiltonian, DensityState) {
    let (i, z) = (ComplexMatrix::identity(2), ops::pauli_z());
    let h = three_qubit_hamiltonian(
        &[
            (0.5, [z.clone(), i.clone(), z.clone()]),
            (0.5, [i, z.clone(), z]),
        ],
        "cmi-classical",
    );
    (h, flagged_bell_mixture())
}

/// Flagged Bell mixture with `Z_A Z_C`: only A touches C.
pub fn open_system_example() -> (Hamiltonian, DensityState) {
    let (i, z) = (ComplexMatrix::identity(2), ops::pauli_z());
    let h = three_qubit_hamiltonian(&[(1.0, [z.clone(), i, z])], "open-system");
    (h, flagged_bell_mixture())
}

/// `(H_A ⊗ I_B + I_A ⊗ H_B) ⊗ H_C` on `A, B, C`.
pub fn commuting_mediated(
    h_a: &ComplexMatrix,
    h_b: &ComplexMatrix,
    h_c: &ComplexMatrix,
) -> Result<Hamiltonian> {
    for m in [h_a, h_b, h_c] {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        m.check_hermitian()?;
    }
    let layout = SystemLayout::new([("A", h_a.rows()), ("B", h_b.rows()), ("C", h_c.rows())])?;
    let principal = &kron(h_a, &ComplexMatrix::identity(h_b.rows()))
        + &kron(&ComplexMatrix::identity(h_a.rows()), h_b);
    Hamiltonian::new(layout, kron(&principal, h_c), "commuting-mediated")
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "direct-optimal",
    "cmi-product",
    "cmi-entangled",
    "cmi-classical",
    "open-system",
];

/// Looks up a builtin example by name; `direct-optimal` takes `:d`
/// (default 2). The state is the example's initial state.
pub fn builtin(name: &str) -> Result<(Hamiltonian, DensityState)> {
    let (base, arg) = match name.split_once(':') {
        Some((b, a)) => (b, Some(a)),
        None => (name, None),
    };
    let no_arg = |pair: (Hamiltonian, DensityState)| {
        if arg.is_some() {
            Err(Error::InvalidArgument(format!(
                "builtin `{base}` takes no argument"
            )))
        } else {
            Ok(pair)
        }
    };
    match base {
        "direct-optimal" => {
            let d = match arg {
                None => 2,
                Some(a) => a
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad dimension `{a}`")))?,
            };
            let h = direct_optimal(d)?;
            let s = ground_ket(h.layout().clone());
            Ok((h, s))
        }
        "cmi-product" => no_arg(cmi_product_example()),
        "cmi-entangled" => no_arg(entangled_mediator_example()),
        "cmi-classical" => no_arg(classical_mediator_example()),
        "open-system" => no_arg(open_system_example()),
        other => Err(Error::InvalidArgument(format!(
            "unknown builtin `{other}` (expected one of {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
    .map(|(h, s)| {
        let label = name.to_string();
        (h.with_label(label), s)
    })
}
