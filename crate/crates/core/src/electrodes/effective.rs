use super::{effective_potential, ElectrodeGeometry, VoltageTrace};
use crate::design::{ControlWaveform, K_FLOOR_FRACTION};
use crate::numerics::{bracket_roots_in, midpoint};

/// Spatial interval scanned for stationary points of the potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchWindow {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    /// Preferred location at the first time; later times prefer the
    /// previous stationary point. Defaults to the window midpoint.
    pub hint: Option<f64>,
}

/// Position resolution of the stationary-point search (m).
pub const CENTER_RESOLUTION: f64 = 1e-12;

impl SearchWindow {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            samples: 2048,
            hint: None,
        }
    }

    pub fn with_hint(mut self, z: f64) -> Self {
        self.hint = Some(z);
        self
    }
}

/// Controls reconstructed from a voltage trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveControls {
    pub waveform: ControlWaveform,
    /// Times at which no stationary point lies inside the window.
    pub untrapped: Vec<bool>,
}

impl EffectiveControls {
    pub fn untrapped_count(&self) -> usize {
        self.untrapped.iter().filter(|&&u| u).count()
    }
}

/// Stationary points of `V` in the window, nearest to `reference` first.
pub fn stationary_points(
    geometry: &ElectrodeGeometry,
    voltages: [f64; 2],
    charge: f64,
    window: &SearchWindow,
    reference: f64,
) -> Vec<f64> {
    if voltages == [0.0, 0.0] {
        return Vec::new();
    }
    let v = effective_potential(geometry, voltages[0], voltages[1], charge);
    let mut roots: Vec<f64> = bracket_roots_in(
        |z| v.gradient(z),
        window.lo,
        window.hi,
        window.samples.max(64),
        CENTER_RESOLUTION,
    )
    .into_iter()
    .map(midpoint)
    .collect();
    roots.sort_by(|a, b| (a - reference).abs().total_cmp(&(b - reference).abs()));
    roots
}

/// Locate the stationary point `z*` at each trace time and report
/// `k_eff = V''(z*)`, `g_eff = k_eff z*`. Untrapped times carry `k = g = 0`
/// and no center.
pub fn extract_effective_controls(
    geometry: &ElectrodeGeometry,
    trace: &VoltageTrace,
    charge: f64,
    mass: f64,
    window: &SearchWindow,
) -> EffectiveControls {
    let mut reference = window.hint.unwrap_or(0.5 * (window.lo + window.hi));
    let mut stiffness = Vec::with_capacity(trace.len());
    let mut centers = Vec::with_capacity(trace.len());
    let mut untrapped = Vec::with_capacity(trace.len());
    for i in 0..trace.len() {
        let volts = [trace.u1[i], trace.u2[i]];
        match stationary_points(geometry, volts, charge, window, reference).first() {
            Some(&z) => {
                let v = effective_potential(geometry, volts[0], volts[1], charge);
                stiffness.push(v.curvature(z));
                centers.push(Some(z));
                untrapped.push(false);
                reference = z;
            }
            None => {
                stiffness.push(0.0);
                centers.push(None);
                untrapped.push(true);
            }
        }
    }
    let k_ends = [stiffness.first(), stiffness.last()]
        .into_iter()
        .flatten()
        .fold(0.0f64, |a, k| a.max(k.abs()));
    let k_floor = K_FLOOR_FRACTION * k_ends;
    let force_offset = stiffness
        .iter()
        .zip(&centers)
        .map(|(k, z)| z.map_or(0.0, |z| k * z))
        .collect();
    let center = stiffness
        .iter()
        .zip(&centers)
        .map(|(k, z)| z.filter(|_| k.abs() > k_floor))
        .collect();
    EffectiveControls {
        waveform: ControlWaveform {
            times: trace.times.clone(),
            stiffness,
            force_offset,
            center,
            k_floor,
            mass,
        },
        untrapped,
    }
}

/// Newton iteration for `V'(z) = 0` from `start`; `None` when it fails to
/// converge or wanders more than `max_shift` away.
pub fn refine_stationary_point(
    geometry: &ElectrodeGeometry,
    voltages: [f64; 2],
    charge: f64,
    start: f64,
    max_shift: f64,
) -> Option<f64> {
    let v = effective_potential(geometry, voltages[0], voltages[1], charge);
    let mut z = start;
    for _ in 0..50 {
        let c = v.curvature(z);
        if !(c.abs() > 0.0) {
            return None;
        }
        let step = v.gradient(z) / c;
        z -= step;
        if !z.is_finite() || (z - start).abs() > max_shift {
            return None;
        }
        if step.abs() <= CENTER_RESOLUTION {
            return Some(z);
        }
    }
    None
}
