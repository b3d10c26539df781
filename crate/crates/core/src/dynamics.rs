//! Unitary and Lindblad evolution, trajectory observables, and
//! entanglement-timing probes.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hamiltonian::{embed_operator, energy_moments_with_ground, Hamiltonian};
use crate::linalg::{
    c, hermitian_eigenvalues_unchecked, phase, ComplexMatrix, EigDecomposition, C64,
};
use crate::math;
use crate::state::{
    bures_angle, negativity_plan_pair, partial_trace, purity, reduced_mutual_information,
    uhlmann_fidelity, Bipartition, DensityState, NegativityPlan, PartialTracePlan, SystemLayout,
};

/// Largest number of grid points a [`TimeGrid`] may hold.
pub const MAX_GRID_POINTS: f64 = 1e7;

/// Default largest internal Lindblad step.
pub const LINDBLAD_MAX_SUBSTEP: f64 = 1e-3;

/// Eigenvalues below this signal a Lindblad step that lost positivity.
pub const POSITIVITY_TOL: f64 = 1e-6;

/// Evenly spaced times `start, start + step, ...` up to `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let grid = TimeGrid { start, stop, step };
        grid.validate()?;
        Ok(grid)
    }

    /// `[0, stop]` with spacing `step`.
    pub fn from_zero(stop: f64, step: f64) -> Result<Self> {
        Self::new(0.0, stop, step)
    }

    pub fn validate(&self) -> Result<()> {
        let TimeGrid { start, stop, step } = *self;
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bound".into()));
        }
        if start < 0.0 {
            return Err(Error::InvalidGrid(format!("start {start} < 0")));
        }
        if stop <= start {
            return Err(Error::InvalidGrid(format!("stop {stop} <= start {start}")));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step {step} <= 0")));
        }
        if (stop - start) / step > MAX_GRID_POINTS {
            return Err(Error::InvalidGrid(format!(
                "{} points exceed the limit of {MAX_GRID_POINTS}",
                (stop - start) / step
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        math::floor((self.stop - self.start) / self.step + 1e-9) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `start + i·step`.
    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Index of the grid point closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let i = math::round((t - self.start) / self.step).max(0.0) as usize;
        i.min(self.len() - 1)
    }
}

/// Which observables a trajectory records.
#[derive(Debug, Clone, Default)]
pub struct ObserveConfig {
    /// Negativity across this bipartition, after tracing out the rest.
    pub negativity: Option<Bipartition>,
    /// Fidelity of every state to this target.
    pub target: Option<DensityState>,
    /// Purity of the marginal on these labels.
    pub purity_marginal: Option<Vec<String>>,
    /// Mutual information across this bipartition, after tracing out the rest.
    pub mutual_information: Option<Bipartition>,
}

impl ObserveConfig {
    /// Negativity, marginal purity and mutual information on `A:B`, when the
    /// layout has subsystems `A` and `B`.
    pub fn principal_pair(layout: &SystemLayout) -> Self {
        if layout.position("A").is_ok() && layout.position("B").is_ok() {
            let ab = Bipartition::pair("A", "B");
            ObserveConfig {
                negativity: Some(ab.clone()),
                target: None,
                purity_marginal: Some(vec!["A".to_string(), "B".to_string()]),
                mutual_information: Some(ab),
            }
        } else {
            ObserveConfig::default()
        }
    }

    pub fn with_target(mut self, target: DensityState) -> Self {
        self.target = Some(target);
        self
    }
}

/// One row of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observables {
    pub time: f64,
    pub negativity: Option<f64>,
    pub fidelity_to_target: Option<f64>,
    pub bures_angle_from_initial: f64,
    pub purity_marginal: Option<f64>,
    pub mutual_information: Option<f64>,
    pub mean_energy: f64,
    pub energy_std: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<DensityState>,
    pub observables: Vec<Observables>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.observables.iter().map(|o| o.time).collect()
    }

    /// Negativity column; `None` when it was not configured.
    pub fn negativity(&self) -> Option<Vec<f64>> {
        self.observables.iter().map(|o| o.negativity).collect()
    }
}

struct Observer<'a> {
    h: &'a Hamiltonian,
    ground_energy: f64,
    initial: &'a DensityState,
    cfg: &'a ObserveConfig,
    negativity: Option<(PartialTracePlan, NegativityPlan)>,
    purity: Option<PartialTracePlan>,
}

impl<'a> Observer<'a> {
    fn new(h: &'a Hamiltonian, initial: &'a DensityState, cfg: &'a ObserveConfig) -> Result<Self> {
        let layout = initial.layout();
        let negativity = match &cfg.negativity {
            Some(p) => Some(negativity_plan_pair(layout, p)?),
            None => None,
        };
        let purity = match &cfg.purity_marginal {
            Some(labels) => Some(PartialTracePlan::new(layout, labels)?),
            None => None,
        };
        if let Some(p) = &cfg.mutual_information {
            for l in p.labels() {
                layout.position(&l)?;
            }
        }
        if let Some(t) = &cfg.target {
            if t.layout() != layout {
                return Err(Error::LayoutMismatch);
            }
        }
        Ok(Observer {
            h,
            ground_energy: h.ground_energy(),
            initial,
            cfg,
            negativity,
            purity,
        })
    }

    fn observe(&self, time: f64, s: &DensityState) -> Result<Observables> {
        let moments = energy_moments_with_ground(self.h, s, self.ground_energy)?;
        let negativity = self
            .negativity
            .as_ref()
            .map(|(trace, plan)| plan.negativity(trace.apply(s).matrix()));
        let fidelity_to_target = match &self.cfg.target {
            Some(t) => Some(uhlmann_fidelity(s, t)?),
            None => None,
        };
        let purity_marginal = self.purity.as_ref().map(|plan| purity(&plan.apply(s)));
        let mutual_information = match &self.cfg.mutual_information {
            Some(p) => Some(reduced_mutual_information(s, p)?),
            None => None,
        };
        Ok(Observables {
            time,
            negativity,
            fidelity_to_target,
            bures_angle_from_initial: bures_angle(self.initial, s)?,
            purity_marginal,
            mutual_information,
            mean_energy: moments.mean_above_ground,
            energy_std: moments.std_dev,
        })
    }
}

/// Exact closed-system propagation from one eigendecomposition of `M`.
#[derive(Debug, Clone)]
pub struct UnitaryPropagator {
    layout: SystemLayout,
    eig: EigDecomposition,
    initial: Prepared,
}

#[derive(Debug, Clone)]
enum Prepared {
    /// Amplitudes in the eigenbasis.
    Pure(Vec<C64>),
    /// Weighted pure components, amplitudes in the eigenbasis.
    Mixture(Vec<(f64, Vec<C64>)>),
    /// `V† ρ V`.
    Matrix(ComplexMatrix),
}

/// Pure components lighter than this are dropped from mixtures.
const COMPONENT_CUTOFF: f64 = 1e-15;

impl UnitaryPropagator {
    pub fn new(h: &Hamiltonian, s0: &DensityState) -> Result<Self> {
        Self::with_eig(h.layout(), h.eig(), s0)
    }

    /// Uses a precomputed eigendecomposition of the Hamiltonian.
    pub fn with_eig(
        layout: &SystemLayout,
        eig: EigDecomposition,
        s0: &DensityState,
    ) -> Result<Self> {
        if layout != s0.layout() {
            return Err(Error::LayoutMismatch);
        }
        let initial = match s0.pure_vector() {
            Some(psi) => Prepared::Pure(eig.to_eigenbasis(psi)),
            None => {
                let components = s0.pure_components(COMPONENT_CUTOFF);
                if components.len() * 2 <= s0.dim() {
                    Prepared::Mixture(
                        components
                            .into_iter()
                            .map(|(w, v)| (w, eig.to_eigenbasis(&v)))
                            .collect(),
                    )
                } else {
                    let v = &eig.eigenvectors;
                    Prepared::Matrix(v.adjoint().matmul(s0.matrix()).matmul(v))
                }
            }
        };
        Ok(UnitaryPropagator {
            layout: layout.clone(),
            eig,
            initial,
        })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn eig(&self) -> &EigDecomposition {
        &self.eig
    }

    fn evolve_coeffs(&self, coeffs: &[C64], t: f64) -> Vec<C64> {
        let rotated: Vec<C64> = coeffs
            .iter()
            .zip(&self.eig.eigenvalues)
            .map(|(z, &l)| z * phase(-t * l))
            .collect();
        self.eig.from_eigenbasis(&rotated)
    }

    /// `ρ(T) = U ρ(0) U†`.
    pub fn state_at(&self, t: f64) -> DensityState {
        match &self.initial {
            Prepared::Pure(coeffs) => DensityState::from_normalized_pure(
                self.layout.clone(),
                self.evolve_coeffs(coeffs, t),
            ),
            Prepared::Mixture(components) => {
                let n = self.layout.total_dim();
                let mut rho = ComplexMatrix::zeros(n, n);
                for (w, coeffs) in components {
                    let psi = self.evolve_coeffs(coeffs, t);
                    for i in 0..n {
                        for j in 0..n {
                            rho[(i, j)] += psi[i] * psi[j].conj() * *w;
                        }
                    }
                }
                DensityState::from_matrix_unchecked(self.layout.clone(), rho)
            }
            Prepared::Matrix(rho_eig) => {
                let n = self.layout.total_dim();
                let phases: Vec<C64> = self
                    .eig
                    .eigenvalues
                    .iter()
                    .map(|&l| phase(-t * l))
                    .collect();
                let rotated = ComplexMatrix::from_fn(n, n, |k, l| {
                    phases[k] * rho_eig[(k, l)] * phases[l].conj()
                });
                let v = &self.eig.eigenvectors;
                let rho = v.matmul(&rotated).matmul(&v.adjoint());
                DensityState::from_matrix_unchecked(self.layout.clone(), rho)
            }
        }
    }

    /// Reduced density matrix at time `t`, without forming the full state
    /// when the initial state is a short mixture.
    pub fn reduced_at(&self, t: f64, plan: &PartialTracePlan) -> ComplexMatrix {
        match &self.initial {
            Prepared::Pure(coeffs) => plan.apply_pure(&self.evolve_coeffs(coeffs, t)),
            Prepared::Mixture(components) => {
                let d = plan.reduced_layout().total_dim();
                let mut acc = ComplexMatrix::zeros(d, d);
                for (w, coeffs) in components {
                    plan.accumulate_pure(&self.evolve_coeffs(coeffs, t), *w, &mut acc);
                }
                acc
            }
            Prepared::Matrix(_) => plan.apply_matrix(self.state_at(t).matrix()),
        }
    }
}

/// Unitary evolution sampled on `grid`, with exact per-point exponentials.
pub fn evolve_unitary(
    h: &Hamiltonian,
    s0: &DensityState,
    grid: &TimeGrid,
    observe: &ObserveConfig,
) -> Result<Trajectory> {
    grid.validate()?;
    let propagator = UnitaryPropagator::new(h, s0)?;
    let observer = Observer::new(h, s0, observe)?;
    let mut states = Vec::with_capacity(grid.len());
    let mut observables = Vec::with_capacity(grid.len());
    for t in grid.points() {
        let s = if t == 0.0 {
            s0.clone()
        } else {
            propagator.state_at(t)
        };
        observables.push(observer.observe(t, &s)?);
        states.push(s);
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        observables,
    })
}

/// Local jump operators `Q^X_k`, each acting on one subsystem.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JumpOperatorSet {
    entries: Vec<(String, ComplexMatrix)>,
}

/// Canonical single-subsystem jump families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum JumpKind {
    /// `√γ · diag(ω^j)`, the Pauli `Z` for qubits.
    Dephasing,
    /// `√γ · Σ_j |j-1><j|`, `|0><1|` for qubits.
    Damping,
}

impl core::str::FromStr for JumpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dephasing" => Ok(JumpKind::Dephasing),
            "damping" => Ok(JumpKind::Damping),
            other => Err(Error::InvalidArgument(format!(
                "unknown jump type `{other}` (expected dephasing or damping)"
            ))),
        }
    }
}

impl JumpKind {
    pub fn name(self) -> &'static str {
        match self {
            JumpKind::Dephasing => "dephasing",
            JumpKind::Damping => "damping",
        }
    }

    pub fn operator(self, dim: usize, rate: f64) -> ComplexMatrix {
        let amp = math::sqrt(rate);
        match self {
            JumpKind::Dephasing => {
                let diag: Vec<C64> = (0..dim)
                    .map(|j| phase(2.0 * math::PI * j as f64 / dim as f64) * amp)
                    .collect();
                // exact ±1 for qubits
                let mut m = ComplexMatrix::diagonal(&diag);
                if dim == 2 {
                    m = ComplexMatrix::real_diagonal(&[amp, -amp]);
                }
                m
            }
            JumpKind::Damping => {
                let mut m = ComplexMatrix::zeros(dim, dim);
                for j in 1..dim {
                    m[(j - 1, j)] = c(amp, 0.0);
                }
                m
            }
        }
    }
}

impl JumpOperatorSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: impl Into<String>, op: ComplexMatrix) {
        self.entries.push((label.into(), op));
    }

    /// One `kind` operator with rate `rate` on each of `labels`.
    pub fn local<S: AsRef<str>>(
        layout: &SystemLayout,
        labels: &[S],
        kind: JumpKind,
        rate: f64,
    ) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad rate {rate}")));
        }
        let mut set = Self::new();
        for l in labels {
            let dim = layout.dim_of(l.as_ref())?;
            set.push(l.as_ref(), kind.operator(dim, rate));
        }
        Ok(set)
    }

    /// `kind` on every subsystem of `layout`.
    pub fn everywhere(layout: &SystemLayout, kind: JumpKind, rate: f64) -> Result<Self> {
        let labels: Vec<String> = layout.labels().map(String::from).collect();
        Self::local(layout, &labels, kind, rate)
    }

    pub fn extend(&mut self, other: JumpOperatorSet) {
        self.entries.extend(other.entries);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(String, ComplexMatrix)] {
        &self.entries
    }

    fn embedded(&self, layout: &SystemLayout) -> Result<Vec<ComplexMatrix>> {
        self.entries
            .iter()
            .map(|(label, op)| {
                let dim = layout.dim_of(label)?;
                if op.rows() != dim || op.cols() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: op.rows(),
                    });
                }
                embed_operator(layout, &[label.as_str()], op)
            })
            .collect()
    }
}

/// `dρ/dT = -i[M, ρ] + Σ (Q ρ Q† - ½{Q†Q, ρ})`, written as
/// `-i(K ρ - ρ K†) + Σ Q ρ Q†` with `K = M - (i/2) Σ Q†Q`.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    effective: ComplexMatrix,
    effective_adj: ComplexMatrix,
    jumps: Vec<(ComplexMatrix, ComplexMatrix)>,
}

impl LindbladGenerator {
    pub fn new(h: &Hamiltonian, jumps: &JumpOperatorSet) -> Result<Self> {
        let embedded = jumps.embedded(h.layout())?;
        let n = h.layout().total_dim();
        let mut decay = ComplexMatrix::zeros(n, n);
        for q in &embedded {
            decay = &decay + &q.adjoint().matmul(q);
        }
        let effective = h.matrix() - &decay.scale_complex(c(0.0, 0.5));
        Ok(LindbladGenerator {
            effective_adj: effective.adjoint(),
            effective,
            jumps: embedded.into_iter().map(|q| (q.adjoint(), q)).collect(),
        })
    }

    pub fn rhs(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let minus_i = c(0.0, -1.0);
        let coherent = &self.effective.matmul(rho) - &rho.matmul(&self.effective_adj);
        let mut out = coherent.scale_complex(minus_i);
        for (q_adj, q) in &self.jumps {
            out = &out + &q.matmul(rho).matmul(q_adj);
        }
        out
    }

    /// One classical RK4 step, Hermitized.
    pub fn rk4_step(&self, rho: &ComplexMatrix, dt: f64) -> ComplexMatrix {
        let k1 = self.rhs(rho);
        let k2 = self.rhs(&(rho + &k1.scale(dt / 2.0)));
        let k3 = self.rhs(&(rho + &k2.scale(dt / 2.0)));
        let k4 = self.rhs(&(rho + &k3.scale(dt)));
        let incr = &(&(&k1 + &k2.scale(2.0)) + &k3.scale(2.0)) + &k4;
        (rho + &incr.scale(dt / 6.0)).hermitian_part()
    }

    /// Integrates over `duration` in equal substeps no longer than `max_step`.
    pub fn advance(&self, rho: &ComplexMatrix, duration: f64, max_step: f64) -> ComplexMatrix {
        if duration <= 0.0 {
            return rho.clone();
        }
        let steps = math::ceil(duration / max_step - 1e-9).max(1.0) as usize;
        let dt = duration / steps as f64;
        let mut out = rho.clone();
        for _ in 0..steps {
            out = self.rk4_step(&out, dt);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladOptions {
    /// Largest internal RK4 step.
    pub max_substep: f64,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        LindbladOptions {
            max_substep: LINDBLAD_MAX_SUBSTEP,
        }
    }
}

/// Lindblad evolution sampled on `grid` (RK4, substeps ≤ 1e-3).
pub fn evolve_lindblad(
    h: &Hamiltonian,
    jumps: &JumpOperatorSet,
    s0: &DensityState,
    grid: &TimeGrid,
    observe: &ObserveConfig,
) -> Result<Trajectory> {
    evolve_lindblad_with(h, jumps, s0, grid, observe, LindbladOptions::default())
}

pub fn evolve_lindblad_with(
    h: &Hamiltonian,
    jumps: &JumpOperatorSet,
    s0: &DensityState,
    grid: &TimeGrid,
    observe: &ObserveConfig,
    options: LindbladOptions,
) -> Result<Trajectory> {
    grid.validate()?;
    if h.layout() != s0.layout() {
        return Err(Error::LayoutMismatch);
    }
    if !(options.max_substep > 0.0) {
        return Err(Error::InvalidArgument(
            "max_substep must be positive".into(),
        ));
    }
    let generator = LindbladGenerator::new(h, jumps)?;
    let observer = Observer::new(h, s0, observe)?;
    let layout = s0.layout().clone();
    let mut rho = s0.matrix().clone();
    let mut now = 0.0;
    let mut states = Vec::with_capacity(grid.len());
    let mut observables = Vec::with_capacity(grid.len());
    for t in grid.points() {
        let s = if t == 0.0 {
            s0.clone()
        } else {
            rho = generator.advance(&rho, t - now, options.max_substep);
            now = t;
            let lowest = hermitian_eigenvalues_unchecked(&rho)[0];
            if lowest < -POSITIVITY_TOL {
                return Err(Error::PositivityLost {
                    time: t,
                    eigenvalue: lowest,
                });
            }
            DensityState::from_matrix_unchecked(layout.clone(), rho.clone())
        };
        observables.push(observer.observe(t, &s)?);
        states.push(s);
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        observables,
    })
}

/// `N(δ) - N(0)` across `p` (everything outside `p` traced out), using the
/// exact propagator when `jumps` is empty or absent and RK4 otherwise.
pub fn entanglement_change_at_zero(
    h: &Hamiltonian,
    jumps: Option<&JumpOperatorSet>,
    s0: &DensityState,
    p: &Bipartition,
    delta: f64,
) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&delta) {
        return Err(Error::InvalidArgument(format!(
            "delta {delta} outside [1e-6, 1e-3]"
        )));
    }
    if h.layout() != s0.layout() {
        return Err(Error::LayoutMismatch);
    }
    let (trace, plan) = negativity_plan_pair(s0.layout(), p)?;
    let before = plan.negativity(trace.apply(s0).matrix());
    let evolved = match jumps {
        Some(j) if !j.is_empty() => {
            let generator = LindbladGenerator::new(h, j)?;
            generator.advance(s0.matrix(), delta, LINDBLAD_MAX_SUBSTEP)
        }
        _ => UnitaryPropagator::new(h, s0)?
            .state_at(delta)
            .matrix()
            .clone(),
    };
    let after = plan.negativity(&trace.apply_matrix(&evolved).hermitian_part());
    Ok(after - before)
}

/// Earliest time at which `N` across `p` reaches `(d-1)/2 - 1e-7`.
///
/// Negativity approaches its maximum quadratically, so the time returned is
/// the location of the first local maximum that reaches the level: grid
/// maxima on a 1e-3 scan are refined by golden-section search to 1e-9.
/// `Ok(None)` when the horizon is exhausted.
pub fn first_max_entanglement_time(
    h: &Hamiltonian,
    s0: &DensityState,
    p: &Bipartition,
    d: usize,
    horizon: f64,
) -> Result<Option<f64>> {
    if d < 2 {
        return Err(Error::BadDimension(d));
    }
    if !(horizon > 0.0 && horizon <= 50.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} outside (0, 50]"
        )));
    }
    let propagator = UnitaryPropagator::new(h, s0)?;
    let (trace, plan) = negativity_plan_pair(s0.layout(), p)?;
    let level = (d as f64 - 1.0) / 2.0 - 1e-7;
    let peak = search::first_peak_reaching(
        |t| plan.negativity(&propagator.reduced_at(t, &trace)),
        0.0,
        horizon,
        1e-3,
        level,
    );
    Ok(peak.map(|p| p.time))
}

/// Negativity of `s` across `p`, everything else traced out.
pub fn negativity_across(s: &DensityState, p: &Bipartition) -> Result<f64> {
    let reduced = partial_trace(s, &p.labels())?;
    crate::state::negativity(&reduced, p)
}

/// One-dimensional scans used for entanglement timing.
pub mod search {
    use crate::math;

    /// Grid maxima below `level - PEAK_MARGIN` are not refined.
    pub const PEAK_MARGIN: f64 = 1e-2;

    /// Time resolution of golden-section and bisection refinement.
    pub const TIME_RESOLUTION: f64 = 1e-9;

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Peak {
        pub time: f64,
        pub value: f64,
    }

    /// Maximizes `f` on `[lo, hi]` by golden-section search.
    pub fn golden_section_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> Peak {
        let inv_phi = (math::sqrt(5.0) - 1.0) / 2.0;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = f(x1);
        let mut f2 = f(x2);
        while hi - lo > TIME_RESOLUTION {
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = f(x2);
            }
        }
        if f1 >= f2 {
            Peak {
                time: x1,
                value: f1,
            }
        } else {
            Peak {
                time: x2,
                value: f2,
            }
        }
    }

    /// Smallest `t` in `[lo, hi]` with `f(t) >= level`, given `f(lo) < level <= f(hi)`.
    pub fn bisect_crossing(
        mut f: impl FnMut(f64) -> f64,
        mut lo: f64,
        mut hi: f64,
        level: f64,
    ) -> f64 {
        while hi - lo > TIME_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if f(mid) >= level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn scan(
        f: &mut impl FnMut(f64) -> f64,
        start: f64,
        stop: f64,
        step: f64,
        level: f64,
        crossing: bool,
    ) -> Option<Peak> {
        let n = math::ceil((stop - start) / step - 1e-9).max(1.0) as usize;
        let time = |i: usize| {
            if i == n {
                stop
            } else {
                start + i as f64 * step
            }
        };
        let mut prev = f64::NEG_INFINITY;
        let mut cur = f(time(0));
        for i in 0..=n {
            let next = if i < n {
                f(time(i + 1))
            } else {
                f64::NEG_INFINITY
            };
            let t = time(i);
            if crossing && cur >= level {
                if i == 0 {
                    return Some(Peak {
                        time: t,
                        value: cur,
                    });
                }
                let at = bisect_crossing(&mut *f, time(i - 1), t, level);
                return Some(Peak {
                    time: at,
                    value: f(at),
                });
            }
            if cur >= prev && cur >= next && cur >= level - PEAK_MARGIN {
                let lo = if i == 0 { t } else { time(i - 1) };
                let hi = if i == n { t } else { time(i + 1) };
                let mut best = golden_section_max(&mut *f, lo, hi);
                if cur > best.value {
                    best = Peak {
                        time: t,
                        value: cur,
                    };
                }
                if best.value >= level {
                    if !crossing {
                        return Some(best);
                    }
                    if i == 0 && best.time == t {
                        return Some(best);
                    }
                    let at = bisect_crossing(&mut *f, lo, best.time, level);
                    return Some(Peak {
                        time: at,
                        value: f(at),
                    });
                }
            }
            prev = cur;
            cur = next;
        }
        None
    }

    /// First local maximum of `f` on `[start, stop]` whose refined value
    /// reaches `level`.
    pub fn first_peak_reaching(
        mut f: impl FnMut(f64) -> f64,
        start: f64,
        stop: f64,
        step: f64,
        level: f64,
    ) -> Option<Peak> {
        scan(&mut f, start, stop, step, level, false)
    }

    /// Earliest time `f` reaches `level`, including narrow peaks that fall
    /// between grid points.
    pub fn first_crossing(
        mut f: impl FnMut(f64) -> f64,
        start: f64,
        stop: f64,
        step: f64,
        level: f64,
    ) -> Option<Peak> {
        scan(&mut f, start, stop, step, level, true)
    }
}
