//! Multi-qudit layouts, density states and information measures.
//!
//! Basis index convention: for subsystems with dimensions `d_0, d_1, ...`
//! the basis index is `i = Σ_k i_k · Π_{l>k} d_l`, so the first subsystem is
//! the most significant digit. Every tensor-structured operation in the
//! crate goes through [`SystemLayout::digits`] / [`SystemLayout::index`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eig_unchecked, hermitian_eigenvalues_unchecked, kron, kron_vec, ComplexMatrix,
    C64, PSD_CLAMP,
};
use crate::math;

/// Tolerance for the trace and Hermiticity checks on density matrices.
pub const STATE_TOL: f64 = 1e-10;

/// Partial-transpose eigenvalues in `(-NEGATIVITY_CUTOFF, 0)` count as zero.
pub const NEGATIVITY_CUTOFF: f64 = 1e-10;

/// Off-diagonal mediator blocks below this Frobenius norm count as zero.
pub const CLASSICAL_BLOCK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

/// Ordered subsystems; defines the tensor index convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemLayout {
    subsystems: Vec<Subsystem>,
}

impl SystemLayout {
    pub fn new<S: Into<String>>(subsystems: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let subsystems: Vec<Subsystem> = subsystems
            .into_iter()
            .map(|(label, dim)| Subsystem {
                label: label.into(),
                dim,
            })
            .collect();
        if subsystems.is_empty() {
            return Err(Error::InvalidLayout("no subsystems".into()));
        }
        for (k, s) in subsystems.iter().enumerate() {
            if s.label.is_empty() {
                return Err(Error::InvalidLayout("empty label".into()));
            }
            if s.dim < 2 {
                return Err(Error::InvalidLayout(format!(
                    "subsystem `{}` has dimension {} (< 2)",
                    s.label, s.dim
                )));
            }
            if subsystems[..k].iter().any(|o| o.label == s.label) {
                return Err(Error::InvalidLayout(format!(
                    "duplicate label `{}`",
                    s.label
                )));
            }
        }
        let total = subsystems
            .iter()
            .try_fold(1usize, |acc, s| acc.checked_mul(s.dim));
        if total.is_none() {
            return Err(Error::InvalidLayout("total dimension overflows".into()));
        }
        Ok(SystemLayout { subsystems })
    }

    /// Subsystems of equal dimension `dim` labelled by `labels`.
    pub fn uniform(labels: &[&str], dim: usize) -> Result<Self> {
        Self::new(labels.iter().map(|l| (*l, dim)))
    }

    /// `A`, `B`, `C` qubits.
    pub fn three_qubits() -> Self {
        Self::uniform(&["A", "B", "C"], 2).expect("static layout")
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|s| s.label.as_str())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.subsystems[self.position(label)?].dim)
    }

    /// Stride of subsystem `k` in the flat basis index.
    pub fn stride(&self, k: usize) -> usize {
        self.subsystems[k + 1..].iter().map(|s| s.dim).product()
    }

    /// Per-subsystem digits of a flat basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.subsystems.len()];
        for (k, s) in self.subsystems.iter().enumerate().rev() {
            out[k] = index % s.dim;
            index /= s.dim;
        }
        out
    }

    /// Flat basis index of per-subsystem digits.
    pub fn index(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.subsystems.len());
        digits
            .iter()
            .zip(&self.subsystems)
            .fold(0, |acc, (d, s)| acc * s.dim + d)
    }

    /// Layout restricted to `positions`, kept in their original order.
    pub fn restrict(&self, positions: &[usize]) -> SystemLayout {
        let mut positions = positions.to_vec();
        positions.sort_unstable();
        positions.dedup();
        SystemLayout {
            subsystems: positions
                .iter()
                .map(|&p| self.subsystems[p].clone())
                .collect(),
        }
    }

    /// Concatenation `self ⊗ other`.
    pub fn concat(&self, other: &SystemLayout) -> Result<SystemLayout> {
        SystemLayout::new(
            self.subsystems
                .iter()
                .chain(&other.subsystems)
                .map(|s| (s.label.clone(), s.dim)),
        )
    }

    /// Sorted, de-duplicated positions of `labels`.
    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut out = labels
            .iter()
            .map(|l| self.position(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// For every flat index, the flat index of its digits at `positions`
    /// (in layout order) and of the remaining digits.
    fn split(&self, positions: &[usize]) -> (Vec<usize>, Vec<usize>, usize, usize) {
        let n = self.total_dim();
        let mut inside = vec![false; self.subsystems.len()];
        for &p in positions {
            inside[p] = true;
        }
        let d_in: usize = positions.iter().map(|&p| self.subsystems[p].dim).product();
        let d_out = n / d_in;
        let mut idx_in = vec![0; n];
        let mut idx_out = vec![0; n];
        for i in 0..n {
            let digits = self.digits(i);
            let (mut a, mut b) = (0, 0);
            for (k, s) in self.subsystems.iter().enumerate() {
                if inside[k] {
                    a = a * s.dim + digits[k];
                } else {
                    b = b * s.dim + digits[k];
                }
            }
            idx_in[i] = a;
            idx_out[i] = b;
        }
        (idx_in, idx_out, d_in, d_out)
    }
}

/// Two disjoint, non-empty groups of subsystem labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    pub side_a: Vec<String>,
    pub side_b: Vec<String>,
}

impl Bipartition {
    pub fn new<S: AsRef<str>>(side_a: &[S], side_b: &[S]) -> Result<Self> {
        let side_a: Vec<String> = side_a.iter().map(|s| s.as_ref().to_string()).collect();
        let side_b: Vec<String> = side_b.iter().map(|s| s.as_ref().to_string()).collect();
        if side_a.is_empty() || side_b.is_empty() {
            return Err(Error::PartitionMismatch("empty side".into()));
        }
        if side_a.iter().any(|l| side_b.contains(l)) {
            return Err(Error::PartitionMismatch("sides overlap".into()));
        }
        Ok(Bipartition { side_a, side_b })
    }

    /// `A:B` between two single subsystems.
    pub fn pair(a: &str, b: &str) -> Self {
        Self::new(&[a], &[b]).expect("distinct labels")
    }

    /// Parses `A:B` or `A,B:C`.
    pub fn parse(text: &str) -> Result<Self> {
        let (a, b) = text
            .split_once(':')
            .ok_or_else(|| Error::PartitionMismatch(format!("expected `X:Y`, got `{text}`")))?;
        let side = |s: &str| -> Vec<String> {
            s.split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(String::from)
                .collect()
        };
        Self::new(&side(a), &side(b))
    }

    pub fn labels(&self) -> Vec<String> {
        self.side_a.iter().chain(&self.side_b).cloned().collect()
    }

    /// Checks every label exists and the two sides cover the whole layout.
    pub fn check_covers(&self, layout: &SystemLayout) -> Result<()> {
        for l in self.side_a.iter().chain(&self.side_b) {
            layout.position(l)?;
        }
        if self.side_a.len() + self.side_b.len() != layout.len() {
            return Err(Error::PartitionMismatch(format!(
                "{} does not cover all {} subsystems",
                self,
                layout.len()
            )));
        }
        Ok(())
    }
}

impl core::fmt::Display for Bipartition {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}:{}", self.side_a.join(","), self.side_b.join(","))
    }
}

/// A density matrix bound to a layout; pure states keep their vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    layout: SystemLayout,
    matrix: ComplexMatrix,
    pure_vector: Option<Vec<C64>>,
}

impl DensityState {
    /// Pure state from an amplitude vector; the vector is normalized.
    pub fn from_pure(layout: SystemLayout, mut amplitudes: Vec<C64>) -> Result<Self> {
        let n = layout.total_dim();
        if amplitudes.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: amplitudes.len(),
            });
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm = linalg::vec_norm(&amplitudes);
        if norm < 1e-150 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        for z in &mut amplitudes {
            *z /= norm;
        }
        Ok(Self::from_normalized_pure(layout, amplitudes))
    }

    pub(crate) fn from_normalized_pure(layout: SystemLayout, amplitudes: Vec<C64>) -> Self {
        DensityState {
            matrix: ComplexMatrix::outer(&amplitudes),
            layout,
            pure_vector: Some(amplitudes),
        }
    }

    /// Validated density matrix.
    pub fn from_density(layout: SystemLayout, matrix: ComplexMatrix) -> Result<Self> {
        let n = layout.total_dim();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.rows(),
            });
        }
        if !matrix.is_finite() {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        matrix.check_hermitian()?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let lowest = hermitian_eigenvalues_unchecked(&matrix)[0];
        if lowest < -PSD_CLAMP {
            return Err(Error::NotPsd { eigenvalue: lowest });
        }
        Ok(DensityState {
            layout,
            matrix,
            pure_vector: None,
        })
    }

    /// Evolution output: Hermitized, no validation.
    pub(crate) fn from_matrix_unchecked(layout: SystemLayout, matrix: ComplexMatrix) -> Self {
        DensityState {
            layout,
            matrix: matrix.hermitian_part(),
            pure_vector: None,
        }
    }

    /// Computational basis state `|digits>`.
    pub fn basis(layout: SystemLayout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                found: digits.len(),
            });
        }
        for (d, s) in digits.iter().zip(layout.subsystems()) {
            if *d >= s.dim {
                return Err(Error::InvalidState(format!(
                    "digit {d} out of range for `{}` (dim {})",
                    s.label, s.dim
                )));
            }
        }
        let mut v = vec![C64::new(0.0, 0.0); layout.total_dim()];
        v[layout.index(digits)] = C64::new(1.0, 0.0);
        Ok(Self::from_normalized_pure(layout, v))
    }

    /// `self ⊗ other` on the concatenated layout.
    pub fn tensor(&self, other: &DensityState) -> Result<DensityState> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(match (&self.pure_vector, &other.pure_vector) {
            (Some(u), Some(v)) => Self::from_normalized_pure(layout, kron_vec(u, v)),
            _ => DensityState {
                layout,
                matrix: kron(&self.matrix, &other.matrix),
                pure_vector: None,
            },
        })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn pure_vector(&self) -> Option<&[C64]> {
        self.pure_vector.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// Ascending spectrum of the density matrix.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues_unchecked(&self.matrix)
    }

    /// Spectral decomposition into weighted pure components; weights below
    /// `cutoff` are dropped.
    pub fn pure_components(&self, cutoff: f64) -> Vec<(f64, Vec<C64>)> {
        if let Some(v) = &self.pure_vector {
            return vec![(1.0, v.clone())];
        }
        let eig = hermitian_eig_unchecked(&self.matrix);
        eig.eigenvalues
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &w)| w > cutoff)
            .map(|(k, &w)| (w, eig.eigenvectors.column(k)))
            .collect()
    }

    /// Same state with the layout's labels replaced, dimensions unchanged.
    pub fn relabel(&self, labels: &[&str]) -> Result<DensityState> {
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
        Ok(DensityState {
            layout,
            ..self.clone()
        })
    }
}

/// `(1/√d) Σ_j |j>|j>` on a two-subsystem layout of dims `d, d`.
pub fn maximally_entangled(d: usize, layout: SystemLayout) -> Result<DensityState> {
    let dims = layout.dims();
    if dims.len() != 2 || dims[0] != d || dims[1] != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if dims.len() == 2 {
                if dims[0] != d {
                    dims[0]
                } else {
                    dims[1]
                }
            } else {
                dims.len()
            },
        });
    }
    let amp = 1.0 / math::sqrt(d as f64);
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    for j in 0..d {
        v[j * d + j] = C64::new(amp, 0.0);
    }
    Ok(DensityState::from_normalized_pure(layout, v))
}

/// Precomputed index tables for tracing a layout down to a subset of its
/// subsystems.
#[derive(Debug, Clone)]
pub struct PartialTracePlan {
    layout: SystemLayout,
    // full[k * d_out + t] = flat index with kept part k and traced part t
    full: Vec<usize>,
    d_in: usize,
    d_out: usize,
}

impl PartialTracePlan {
    pub fn new<S: AsRef<str>>(layout: &SystemLayout, keep: &[S]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidArgument(
                "partial trace must keep a subsystem".into(),
            ));
        }
        let positions = layout.positions(keep)?;
        let (idx_in, idx_out, d_in, d_out) = layout.split(&positions);
        let mut full = vec![0; d_in * d_out];
        for (i, (&a, &b)) in idx_in.iter().zip(&idx_out).enumerate() {
            full[a * d_out + b] = i;
        }
        Ok(PartialTracePlan {
            layout: layout.restrict(&positions),
            full,
            d_in,
            d_out,
        })
    }

    /// Layout of the reduced state.
    pub fn reduced_layout(&self) -> &SystemLayout {
        &self.layout
    }

    /// Adds `weight · tr_out |psi><psi|` into `acc`.
    pub fn accumulate_pure(&self, psi: &[C64], weight: f64, acc: &mut ComplexMatrix) {
        let (d_in, d_out) = (self.d_in, self.d_out);
        for k in 0..d_in {
            let row_k = &self.full[k * d_out..(k + 1) * d_out];
            for l in 0..=k {
                let row_l = &self.full[l * d_out..(l + 1) * d_out];
                let mut z = C64::new(0.0, 0.0);
                for (&a, &b) in row_k.iter().zip(row_l) {
                    z += psi[a] * psi[b].conj();
                }
                z *= weight;
                acc[(k, l)] += z;
                if l != k {
                    acc[(l, k)] += z.conj();
                }
            }
        }
    }

    pub fn apply_pure(&self, psi: &[C64]) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.d_in, self.d_in);
        self.accumulate_pure(psi, 1.0, &mut acc);
        acc
    }

    pub fn apply_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let (d_in, d_out) = (self.d_in, self.d_out);
        ComplexMatrix::from_fn(d_in, d_in, |k, l| {
            (0..d_out)
                .map(|t| m[(self.full[k * d_out + t], self.full[l * d_out + t])])
                .sum()
        })
    }

    pub fn apply(&self, s: &DensityState) -> DensityState {
        let matrix = match &s.pure_vector {
            Some(psi) => self.apply_pure(psi),
            None => self.apply_matrix(&s.matrix),
        };
        DensityState {
            layout: self.layout.clone(),
            matrix,
            pure_vector: None,
        }
    }
}

/// Reduced state on `keep`, subsystems kept in layout order.
pub fn partial_trace<S: AsRef<str>>(s: &DensityState, keep: &[S]) -> Result<DensityState> {
    let plan = PartialTracePlan::new(&s.layout, keep)?;
    if plan.d_out == 1 {
        return Ok(s.clone());
    }
    Ok(plan.apply(s))
}

/// Precomputed permutation for the negativity of a fixed bipartition.
#[derive(Debug, Clone)]
pub struct NegativityPlan {
    // target[i * n + j] = flat position of ρ[i][j] in the partial transpose
    target: Vec<usize>,
    n: usize,
}

impl NegativityPlan {
    /// `p` must cover `layout`.
    pub fn new(layout: &SystemLayout, p: &Bipartition) -> Result<Self> {
        p.check_covers(layout)?;
        let positions = layout.positions(&p.side_a)?;
        let n = layout.total_dim();
        let (t_part, r_part) = transpose_parts(layout, &positions);
        let mut target = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                target[i * n + j] = (t_part[j] + r_part[i]) * n + t_part[i] + r_part[j];
            }
        }
        Ok(NegativityPlan { target, n })
    }

    pub fn negativity(&self, m: &ComplexMatrix) -> f64 {
        let mut pt = ComplexMatrix::zeros(self.n, self.n);
        let out = pt.as_mut_slice();
        for (src, &dst) in m.as_slice().iter().zip(&self.target) {
            out[dst] = *src;
        }
        negative_sum(&hermitian_eigenvalues_unchecked(&pt))
    }
}

/// Plans for `N` across `p` on `layout`, everything outside `p` traced out.
pub fn negativity_plan_pair(
    layout: &SystemLayout,
    p: &Bipartition,
) -> Result<(PartialTracePlan, NegativityPlan)> {
    let trace = PartialTracePlan::new(layout, &p.labels())?;
    let plan = NegativityPlan::new(trace.reduced_layout(), p)?;
    Ok((trace, plan))
}

fn transpose_parts(layout: &SystemLayout, positions: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n = layout.total_dim();
    let mut t_part = vec![0; n];
    let mut r_part = vec![0; n];
    for i in 0..n {
        let digits = layout.digits(i);
        for (k, d) in digits.iter().enumerate() {
            let contribution = d * layout.stride(k);
            if positions.contains(&k) {
                t_part[i] += contribution;
            } else {
                r_part[i] += contribution;
            }
        }
    }
    (t_part, r_part)
}

/// Partial transpose on the subsystems named in `transposed`.
pub fn partial_transpose<S: AsRef<str>>(
    s: &DensityState,
    transposed: &[S],
) -> Result<ComplexMatrix> {
    let positions = s.layout.positions(transposed)?;
    if positions.is_empty() || positions.len() == s.layout.len() {
        return Err(Error::FullOrEmptySet);
    }
    Ok(partial_transpose_positions(
        &s.layout, &s.matrix, &positions,
    ))
}

pub(crate) fn partial_transpose_positions(
    layout: &SystemLayout,
    m: &ComplexMatrix,
    positions: &[usize],
) -> ComplexMatrix {
    let n = layout.total_dim();
    // flat index = (part on transposed subsystems) + (part on the rest)
    let (t_part, r_part) = transpose_parts(layout, positions);
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(t_part[j] + r_part[i], t_part[i] + r_part[j])] = m[(i, j)];
        }
    }
    out
}

/// Negativity: absolute sum of the negative eigenvalues of the partial
/// transpose. The bipartition must cover every subsystem of `s`.
pub fn negativity(s: &DensityState, p: &Bipartition) -> Result<f64> {
    p.check_covers(&s.layout)?;
    let positions = s.layout.positions(&p.side_a)?;
    let pt = partial_transpose_positions(&s.layout, &s.matrix, &positions);
    Ok(negative_sum(&hermitian_eigenvalues_unchecked(&pt)))
}

/// Negativity after tracing out everything outside `p`.
pub fn reduced_negativity(s: &DensityState, p: &Bipartition) -> Result<f64> {
    let reduced = partial_trace(s, &p.labels())?;
    negativity(&reduced, p)
}

pub(crate) fn negative_sum(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l <= -NEGATIVITY_CUTOFF)
        .fold(0.0, |acc, l| acc - l)
}

fn check_same_layout(a: &DensityState, b: &DensityState) -> Result<()> {
    if a.layout != b.layout {
        return Err(Error::LayoutMismatch);
    }
    Ok(())
}

/// Uhlmann root fidelity `tr √(√ρ σ √ρ)`, clamped to `[0, 1]`.
pub fn uhlmann_fidelity(rho: &DensityState, sigma: &DensityState) -> Result<f64> {
    check_same_layout(rho, sigma)?;
    if let (Some(u), Some(v)) = (&rho.pure_vector, &sigma.pure_vector) {
        return Ok(math::clamp(linalg::inner(u, v).norm(), 0.0, 1.0));
    }
    let pure_mixed = match (&rho.pure_vector, &sigma.pure_vector) {
        (Some(u), None) => Some((u, &sigma.matrix)),
        (None, Some(v)) => Some((v, &rho.matrix)),
        _ => None,
    };
    if let Some((u, m)) = pure_mixed {
        let overlap = linalg::inner(u, &m.matvec(u)).re;
        return Ok(math::clamp(math::sqrt(overlap.max(0.0)), 0.0, 1.0));
    }
    let product = linalg::sqrtm_psd(&rho.matrix)?.matmul(&linalg::sqrtm_psd(&sigma.matrix)?);
    let fidelity = linalg::singular_values(&product)
        .iter()
        .fold(0.0, |acc, s| acc + s);
    Ok(math::clamp(fidelity, 0.0, 1.0))
}

/// Bures angle `arccos F(ρ, σ)`, in `[0, π/2]`.
///
/// Computed as `atan2(‖v - <u|v>u‖, |<u|v>|)` for pure pairs and from the
/// Bures distance otherwise; both keep full precision near zero.
pub fn bures_angle(rho: &DensityState, sigma: &DensityState) -> Result<f64> {
    if let (Some(u), Some(v)) = (&rho.pure_vector, &sigma.pure_vector) {
        check_same_layout(rho, sigma)?;
        let overlap = linalg::inner(u, v);
        let perp: Vec<C64> = v.iter().zip(u).map(|(b, a)| b - overlap * a).collect();
        return Ok(math::atan2(linalg::vec_norm(&perp), overlap.norm()));
    }
    check_same_layout(rho, sigma)?;
    // Bures distance ‖√ρ - √σ W‖ with the aligning unitary W
    let sqrt_rho = linalg::sqrtm_psd(&rho.matrix)?;
    let sqrt_sigma = linalg::sqrtm_psd(&sigma.matrix)?;
    let w = linalg::optimal_alignment(&sqrt_rho.matmul(&sqrt_sigma));
    let diff = &sqrt_rho - &sqrt_sigma.matmul(&w);
    let distance = diff.frobenius_norm();
    Ok(2.0
        * math::asin(math::clamp(
            distance / 2.0,
            0.0,
            core::f64::consts::FRAC_1_SQRT_2,
        )))
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(s: &DensityState) -> f64 {
    if s.pure_vector.is_some() {
        return 0.0;
    }
    entropy_of_spectrum(&s.eigenvalues())
}

pub(crate) fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    let h: f64 = eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * math::log2(l))
        .sum();
    if h > 0.0 {
        h
    } else {
        0.0
    }
}

/// `S(ρ_A) + S(ρ_B) - S(ρ_AB)` in bits; the bipartition must cover `s`.
pub fn mutual_information(s: &DensityState, p: &Bipartition) -> Result<f64> {
    p.check_covers(&s.layout)?;
    let a = partial_trace(s, &p.side_a)?;
    let b = partial_trace(s, &p.side_b)?;
    let mi = von_neumann_entropy(&a) + von_neumann_entropy(&b) - von_neumann_entropy(s);
    Ok(mi.max(0.0))
}

/// Mutual information after tracing out everything outside `p`.
pub fn reduced_mutual_information(s: &DensityState, p: &Bipartition) -> Result<f64> {
    let reduced = partial_trace(s, &p.labels())?;
    mutual_information(&reduced, p)
}

/// `tr(ρ²)`.
pub fn purity(s: &DensityState) -> f64 {
    if s.pure_vector.is_some() {
        return 1.0;
    }
    // Hermitian: tr(ρ²) = Σ |ρ_ij|²
    s.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// Whether `s` is block-diagonal in some orthonormal basis of `mediator`
/// (a quantum-classical state with the mediator as the classical flag).
///
/// The candidate basis is the eigenbasis of the mediator marginal. Inside a
/// degenerate eigenspace the basis is fixed by diagonalizing a generic
/// Hermitian combination of the mediator-conditioned blocks, which
/// simultaneously diagonalizes them whenever the state is classical on the
/// mediator.
pub fn is_classically_correlated_on(s: &DensityState, mediator: &str) -> Result<bool> {
    let m = s.layout.position(mediator)?;
    let (idx_c, idx_r, dc, dr) = s.layout.split(&[m]);
    let mut full = vec![0; dr * dc];
    for (i, (&cc, &r)) in idx_c.iter().zip(&idx_r).enumerate() {
        full[r * dc + cc] = i;
    }
    // blocks[a * dr + b][c][c'] = ρ[(a, c), (b, c')]
    let rho = &s.matrix;
    let blocks: Vec<ComplexMatrix> = (0..dr * dr)
        .map(|ab| {
            let (a, b) = (ab / dr, ab % dr);
            ComplexMatrix::from_fn(dc, dc, |x, y| rho[(full[a * dc + x], full[b * dc + y])])
        })
        .collect();

    let mut marginal = ComplexMatrix::zeros(dc, dc);
    for a in 0..dr {
        marginal = &marginal + &blocks[a * dr + a];
    }
    let eig = hermitian_eig_unchecked(&marginal.hermitian_part());

    // Hermitian generators of the block algebra: M_aa, M_ab + M_ba, i(M_ab - M_ba).
    let mut generators: Vec<ComplexMatrix> = Vec::new();
    for a in 0..dr {
        generators.push(blocks[a * dr + a].hermitian_part());
        for b in a + 1..dr {
            let (ab, ba) = (&blocks[a * dr + b], &blocks[b * dr + a]);
            generators.push(ab + ba);
            generators.push((ab - ba).scale_complex(C64::new(0.0, 1.0)));
        }
    }

    let mut basis = ComplexMatrix::zeros(dc, dc);
    let mut start = 0;
    while start < dc {
        let mut end = start + 1;
        while end < dc && eig.eigenvalues[end] - eig.eigenvalues[end - 1] <= 1e-9 {
            end += 1;
        }
        let group = end - start;
        let projector = ComplexMatrix::from_fn(dc, group, |i, j| eig.eigenvectors[(i, start + j)]);
        let rotation = if group == 1 {
            ComplexMatrix::identity(1)
        } else {
            let mut combo = ComplexMatrix::zeros(group, group);
            for (k, g) in generators.iter().enumerate() {
                let w = generic_weight(k);
                let projected = projector.adjoint().matmul(g).matmul(&projector);
                combo = &combo + &projected.scale(w);
            }
            hermitian_eig_unchecked(&combo.hermitian_part()).eigenvectors
        };
        let columns = projector.matmul(&rotation);
        for i in 0..dc {
            for j in 0..group {
                basis[(i, start + j)] = columns[(i, j)];
            }
        }
        start = end;
    }

    let basis_adj = basis.adjoint();
    let mut off_diagonal = vec![0.0; dc * dc];
    for block in &blocks {
        let rotated = basis_adj.matmul(block).matmul(&basis);
        for x in 0..dc {
            for y in 0..dc {
                if x != y {
                    off_diagonal[x * dc + y] += rotated[(x, y)].norm_sqr();
                }
            }
        }
    }
    Ok(off_diagonal
        .iter()
        .all(|&n2| math::sqrt(n2) <= CLASSICAL_BLOCK_TOL))
}

/// Deterministic, rationally independent weights for generic combinations.
fn generic_weight(k: usize) -> f64 {
    let golden = 0.618_033_988_749_894_9;
    let x = (k as f64 + 1.0) * golden;
    1.0 + (x - math::floor(x))
}
