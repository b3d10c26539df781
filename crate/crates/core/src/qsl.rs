//! Closed-form speed-limit bounds.
//!
//! The unified bound is `Γ = Θ(ρ₀, ρ_T) / min{<M>, ΔM}`, a lower bound on the
//! dimensionless time needed to drive `ρ₀` into `ρ_T`.

use alloc::vec;

use crate::error::{Error, Result};
use crate::hamiltonian::{energy_moments, Hamiltonian, STATIONARY_TOL};
use crate::linalg::{inner, C64};
use crate::math;
use crate::state::{bures_angle, DensityState, SystemLayout};

/// Bounds for `d`-level principal systems, all positive for `d ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReferenceBounds {
    pub d: usize,
    /// `arccos(1/√d)`, attained by direct interactions.
    pub di: f64,
    /// `2·arccos(1/√d)`, conjectured for continuously mediated interactions.
    pub conjecture: f64,
    /// `arccos(1/√d) + arccos(1/d)`, sequentially mediated interactions.
    pub smi: f64,
}

impl ReferenceBounds {
    pub fn new(d: usize) -> Result<Self> {
        Ok(ReferenceBounds {
            d,
            di: di_bound(d)?,
            conjecture: conjecture_bound(d)?,
            smi: smi_bound(d)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    /// Bures angle between the two states.
    pub theta: f64,
    /// `min{<M>, ΔM}` on the initial state.
    pub denominator: f64,
    /// `theta / denominator`.
    pub bound: f64,
    pub reference_bounds: ReferenceBounds,
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::BadDimension(d));
    }
    Ok(())
}

pub fn di_bound(d: usize) -> Result<f64> {
    check_dim(d)?;
    Ok(math::acos(1.0 / math::sqrt(d as f64)))
}

pub fn conjecture_bound(d: usize) -> Result<f64> {
    Ok(2.0 * di_bound(d)?)
}

pub fn smi_bound(d: usize) -> Result<f64> {
    Ok(di_bound(d)? + math::acos(1.0 / d as f64))
}

/// Unified bound with reference bounds for the first subsystem's dimension.
pub fn unified_bound(
    s0: &DensityState,
    target: &DensityState,
    h: &Hamiltonian,
) -> Result<BoundReport> {
    let d = s0.layout().subsystems().first().map_or(2, |s| s.dim.max(2));
    unified_bound_for(s0, target, h, d)
}

/// Unified bound with reference bounds for principal dimension `d`.
pub fn unified_bound_for(
    s0: &DensityState,
    target: &DensityState,
    h: &Hamiltonian,
    d: usize,
) -> Result<BoundReport> {
    if s0.layout() != target.layout() || s0.layout() != h.layout() {
        return Err(Error::LayoutMismatch);
    }
    let reference_bounds = ReferenceBounds::new(d)?;
    let denominator = energy_moments(h, s0)?.denominator();
    if !(denominator > STATIONARY_TOL) {
        return Err(Error::StationaryState { denominator });
    }
    let theta = bures_angle(s0, target)?;
    Ok(BoundReport {
        theta,
        denominator,
        bound: theta / denominator,
        reference_bounds,
    })
}

/// `|Ψ_AC>|0_B>` and `|Ψ_AB>|0_C>` on `A, B, C` with all dimensions `d`.
pub fn swap_stage_states(d: usize) -> Result<(DensityState, DensityState)> {
    check_dim(d)?;
    let layout = SystemLayout::uniform(&["A", "B", "C"], d)?;
    let amp = C64::new(1.0 / math::sqrt(d as f64), 0.0);
    let mut ac = vec![C64::new(0.0, 0.0); d * d * d];
    let mut ab = ac.clone();
    for j in 0..d {
        ac[layout.index(&[j, 0, j])] = amp;
        ab[layout.index(&[j, j, 0])] = amp;
    }
    Ok((
        DensityState::from_pure(layout.clone(), ac)?,
        DensityState::from_pure(layout, ab)?,
    ))
}

/// Overlap `|<Ψ_AC, 0_B | Ψ_AB, 0_C>|`, equal to `1/d`.
pub fn swap_stage_fidelity(d: usize) -> Result<f64> {
    let (before, after) = swap_stage_states(d)?;
    let (u, v) = (
        before.pure_vector().expect("pure"),
        after.pure_vector().expect("pure"),
    );
    Ok(inner(u, v).norm())
}
