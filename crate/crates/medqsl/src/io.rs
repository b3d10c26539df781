//! File formats: state JSON, trajectory and envelope CSV, report JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use medqsl_core::hamiltonian::builtin;
use medqsl_core::linalg::{ComplexMatrix, C64};
use medqsl_core::{DensityState, SystemLayout, Trajectory};
use serde::{Deserialize, Serialize};

use crate::sweep::Envelope;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsystemJson {
    pub label: String,
    pub dim: usize,
}

/// `{"layout": [...], "pure": [[re, im], ...]}` or
/// `{"layout": [...], "density": [[[re, im], ...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub layout: Vec<SubsystemJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pure: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<Vec<[f64; 2]>>>,
}

pub fn layout_to_json(layout: &SystemLayout) -> Vec<SubsystemJson> {
    layout
        .subsystems()
        .iter()
        .map(|s| SubsystemJson {
            label: s.label.clone(),
            dim: s.dim,
        })
        .collect()
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

impl StateJson {
    pub fn from_state(s: &DensityState) -> Self {
        let layout = layout_to_json(s.layout());
        match s.pure_vector() {
            Some(v) => StateJson {
                layout,
                pure: Some(v.iter().map(|z| [z.re, z.im]).collect()),
                density: None,
            },
            None => StateJson {
                layout,
                pure: None,
                density: Some(matrix_to_json(s.matrix())),
            },
        }
    }

    pub fn to_state(&self) -> anyhow::Result<DensityState> {
        let layout = SystemLayout::new(self.layout.iter().map(|s| (s.label.as_str(), s.dim)))?;
        let c = |p: &[f64; 2]| C64::new(p[0], p[1]);
        match (&self.pure, &self.density) {
            (Some(v), None) => Ok(DensityState::from_pure(layout, v.iter().map(c).collect())?),
            (None, Some(rows)) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    bail!("density matrix rows must all have length {n}");
                }
                let data = rows.iter().flatten().map(c).collect();
                Ok(DensityState::from_density(
                    layout,
                    ComplexMatrix::from_row_major(n, n, data)?,
                )?)
            }
            _ => bail!("state JSON needs exactly one of `pure` and `density`"),
        }
    }
}

pub fn read_state_json(path: &Path) -> anyhow::Result<DensityState> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed: StateJson =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    parsed
        .to_state()
        .with_context(|| format!("validating {}", path.display()))
}

/// `ket:<digits>` basis state, a builtin example's initial state, or a
/// state JSON file.
///
/// Digits are written `ket:012` when every dimension is at most 10, or
/// comma-separated (`ket:0,11,2`).
pub fn parse_state_arg(arg: &str, layout: &SystemLayout) -> anyhow::Result<DensityState> {
    if let Some(digits) = arg.strip_prefix("ket:") {
        let parsed: Vec<usize> = if digits.contains(',') {
            digits
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .with_context(|| format!("bad ket digits `{digits}`"))?
        } else {
            digits
                .chars()
                .map(|ch| ch.to_digit(10).map(|d| d as usize))
                .collect::<Option<_>>()
                .with_context(|| format!("bad ket digits `{digits}`"))?
        };
        return Ok(DensityState::basis(layout.clone(), &parsed)?);
    }
    if arg.ends_with(".json") || Path::new(arg).is_file() {
        let s = read_state_json(Path::new(arg))?;
        if s.layout() != layout {
            bail!("state file `{arg}` has a different layout from the Hamiltonian");
        }
        return Ok(s);
    }
    match builtin(arg) {
        Ok((_, s)) if s.layout() == layout => Ok(s),
        Ok(_) => bail!("builtin state `{arg}` has a different layout from the Hamiltonian"),
        Err(_) => {
            bail!("unknown state `{arg}` (expected ket:<digits>, a builtin name or a .json file)")
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

type Column = (&'static str, fn(&medqsl_core::Observables) -> Option<f64>);

/// Trajectory CSV: `T` then every recorded observable.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let first = traj.observables.first();
    let has = |f: fn(&medqsl_core::Observables) -> Option<f64>| first.and_then(f).is_some();
    let optional: [Column; 4] = [
        ("negativity", |o| o.negativity),
        ("fidelity_to_target", |o| o.fidelity_to_target),
        ("purity_marginal", |o| o.purity_marginal),
        ("mutual_information", |o| o.mutual_information),
    ];
    let present: Vec<_> = optional.iter().filter(|(_, f)| has(*f)).collect();
    let mut out = String::from("T");
    for (name, _) in &present {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",bures_angle_from_initial,mean_energy,energy_std\n");
    for o in &traj.observables {
        out.push_str(&fmt_float(o.time));
        for (_, f) in &present {
            out.push(',');
            out.push_str(&f(o).map(fmt_float).unwrap_or_default());
        }
        for v in [o.bures_angle_from_initial, o.mean_energy, o.energy_std] {
            out.push(',');
            out.push_str(&fmt_float(v));
        }
        out.push('\n');
    }
    out
}

/// Envelope CSV: `T,max,mean,p99`.
pub fn envelope_csv(env: &Envelope) -> String {
    let mut out = String::from("T,max,mean,p99\n");
    let p99 = env.quantile(0.99).unwrap_or(&[]);
    for (i, t) in env.times.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_float(*t),
            fmt_float(env.max[i]),
            fmt_float(env.mean[i]),
            p99.get(i).map(|v| fmt_float(*v)).unwrap_or_default()
        );
    }
    out
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use medqsl_core::hamiltonian::flagged_bell_mixture;

    #[test]
    fn state_json_round_trip() {
        for s in [flagged_bell_mixture(), builtin("cmi-entangled").unwrap().1] {
            let json = serde_json::to_string(&StateJson::from_state(&s)).unwrap();
            let back: StateJson = serde_json::from_str(&json).unwrap();
            let t = back.to_state().unwrap();
            assert!(t.matrix().max_abs_diff(s.matrix()) < 1e-15);
            assert_eq!(t.layout(), s.layout());
        }
    }

    #[test]
    fn ket_literals() {
        let layout = SystemLayout::uniform(&["A", "B", "C"], 3).unwrap();
        let a = parse_state_arg("ket:012", &layout).unwrap();
        let b = parse_state_arg("ket:0,1,2", &layout).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pure_vector().unwrap()[5].re, 1.0);
        assert!(parse_state_arg("ket:013", &layout).is_err());
        assert!(parse_state_arg("ket:01", &layout).is_err());
        assert!(parse_state_arg("nonsense", &layout).is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, std::f64::consts::PI, 1e-300, -2.5] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
