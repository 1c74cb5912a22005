use rand_distr::{Distribution, StandardNormal};

use super::{ElectrodeError, ElectrodeGeometry};
use crate::design::{ControlModel, DesignConstraint};
use crate::dynamics::substream;

/// Relative determinant below which the geometry cannot place a trap.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// One relative factor per electrode for the whole waveform.
    PerShotOffset,
    /// An independent factor per electrode per grid sample.
    White,
}

impl NoiseMode {
    pub fn label(&self) -> &'static str {
        match self {
            NoiseMode::PerShotOffset => "per-shot-offset",
            NoiseMode::White => "white",
        }
    }
}

impl std::str::FromStr for NoiseMode {
    type Err = ElectrodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-shot-offset" => Ok(NoiseMode::PerShotOffset),
            "white" => Ok(NoiseMode::White),
            other => Err(ElectrodeError::InvalidNoise(format!("unknown noise mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Relative voltage uncertainty `dU/U`.
    pub relative: f64,
    pub mode: NoiseMode,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(relative: f64, mode: NoiseMode, seed: u64) -> Result<Self, ElectrodeError> {
        if !(relative >= 0.0 && relative.is_finite()) {
            return Err(ElectrodeError::InvalidNoise(format!(
                "dU/U must be non-negative, got {relative}"
            )));
        }
        Ok(Self { relative, mode, seed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Ideal,
    Perturbed(NoiseModel),
}

impl Provenance {
    pub fn label(&self) -> String {
        match self {
            Provenance::Ideal => "ideal".into(),
            Provenance::Perturbed(n) => format!("perturbed {} dU/U={} seed={}", n.mode.label(), n.relative, n.seed),
        }
    }
}

/// Electrode voltages on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageTrace {
    pub times: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub provenance: Provenance,
}

impl VoltageTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.u1.iter().chain(&self.u2).fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Voltages at `t`: the sample itself on grid times, linear
    /// interpolation between them, end values outside.
    pub fn at(&self, t: f64) -> [f64; 2] {
        let n = self.times.len();
        if n == 0 {
            return [0.0, 0.0];
        }
        let i = self.times.partition_point(|&x| x < t);
        if i == 0 {
            return [self.u1[0], self.u2[0]];
        }
        if i == n {
            return [self.u1[n - 1], self.u2[n - 1]];
        }
        let spacing = self.times[i] - self.times[i - 1];
        if (self.times[i] - t).abs() <= 1e-9 * spacing {
            return [self.u1[i], self.u2[i]];
        }
        let w = (t - self.times[i - 1]) / spacing;
        [
            self.u1[i - 1] + w * (self.u1[i] - self.u1[i - 1]),
            self.u2[i - 1] + w * (self.u2[i] - self.u2[i - 1]),
        ]
    }
}

/// All `2 n + 1` stage times of an `n`-step fourth-order integration.
pub fn stage_times(duration: f64, n_steps: usize) -> Vec<f64> {
    let m = 2 * n_steps;
    (0..=m)
        .map(|j| {
            if j == m {
                duration
            } else {
                duration * j as f64 / m as f64
            }
        })
        .collect()
}

/// Voltages and `log|det|` of the placement system at one time.
fn solve_pair(geometry: &ElectrodeGeometry, k: f64, z0: f64, charge: f64) -> ([f64; 2], f64) {
    let [j1, j2] = geometry.jets(z0);
    let d = j1.d1 * j2.d2 - j2.d1 * j1.d2;
    let log_det = j1.log_scale + j2.log_scale + d.abs().ln();
    if k == 0.0 {
        return ([0.0, 0.0], log_det);
    }
    // U1 = -phi2' k / (q det), U2 = phi1' k / (q det)
    let a = k / (charge * d);
    let u1 = -j2.d1 * a * (-j1.log_scale).exp();
    let u2 = j1.d1 * a * (-j2.log_scale).exp();
    ([u1, u2], log_det)
}

/// `log10` of the larger voltage magnitude, free of overflow.
fn log10_max_voltage(geometry: &ElectrodeGeometry, k: f64, z0: f64, charge: f64) -> f64 {
    if k == 0.0 {
        return f64::NEG_INFINITY;
    }
    let [j1, j2] = geometry.jets(z0);
    let d = j1.d1 * j2.d2 - j2.d1 * j1.d2;
    let base = (k / (charge * d)).abs().ln();
    let l1 = base + j2.d1.abs().ln() - j1.log_scale;
    let l2 = base + j1.d1.abs().ln() - j2.log_scale;
    l1.max(l2) / std::f64::consts::LN_10
}

/// Voltages that place a harmonic well of stiffness `k(t)` at `z0(t)`:
/// `q (phi_1' U1 + phi_2' U2)(z0) = 0` and `q (phi_1'' U1 + phi_2'' U2)(z0) = k`.
pub fn synthesize_voltages(
    model: &ControlModel,
    geometry: &ElectrodeGeometry,
    charge: f64,
    times: &[f64],
) -> Result<VoltageTrace, ElectrodeError> {
    let mut u1 = Vec::with_capacity(times.len());
    let mut u2 = Vec::with_capacity(times.len());
    let mut log_dets = Vec::with_capacity(times.len());
    for &t in times {
        let ([a, b], ld) = solve_pair(geometry, model.stiffness(t), model.bridged_center(t), charge);
        u1.push(a);
        u2.push(b);
        log_dets.push(ld);
    }
    let max_ld = log_dets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = max_ld + DEGENERACY_THRESHOLD.ln();
    if let Some(i) = log_dets.iter().position(|&ld| !(ld.is_finite() && ld >= floor)) {
        return Err(ElectrodeError::DegenerateGeometry { time: times[i] });
    }
    if let Some(i) = u1.iter().zip(&u2).position(|(a, b)| !(a.is_finite() && b.is_finite())) {
        return Err(ElectrodeError::NonFiniteVoltage { time: times[i] });
    }
    Ok(VoltageTrace {
        times: times.to_vec(),
        u1,
        u2,
        provenance: Provenance::Ideal,
    })
}

/// Scale each electrode's voltage by `1 + eps`, `eps ~ N(0, (dU/U)²)`.
///
/// Per-shot mode draws both factors from stream 0 of the seed; white mode
/// draws sample `i`'s factors from stream `i`.
pub fn perturb_voltages(trace: &VoltageTrace, noise: &NoiseModel) -> VoltageTrace {
    let draw = |stream: u64| -> [f64; 2] {
        let mut rng = substream(noise.seed, stream);
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        [1.0 + noise.relative * a, 1.0 + noise.relative * b]
    };
    let (u1, u2) = match noise.mode {
        NoiseMode::PerShotOffset => {
            let [f1, f2] = draw(0);
            (
                trace.u1.iter().map(|v| v * f1).collect(),
                trace.u2.iter().map(|v| v * f2).collect(),
            )
        }
        NoiseMode::White => {
            let factors: Vec<[f64; 2]> = (0..trace.len() as u64).map(draw).collect();
            (
                trace.u1.iter().zip(&factors).map(|(v, f)| v * f[0]).collect(),
                trace.u2.iter().zip(&factors).map(|(v, f)| v * f[1]).collect(),
            )
        }
    };
    VoltageTrace {
        times: trace.times.clone(),
        u1,
        u2,
        provenance: Provenance::Perturbed(*noise),
    }
}

/// Keeps `max(|U1|, |U2|)` at or below `limit` volts over `samples + 1`
/// uniform times. Violation is `log10(max|U| / limit)` when positive.
#[derive(Debug, Clone)]
pub struct VoltageCeiling {
    pub geometry: ElectrodeGeometry,
    pub charge: f64,
    pub limit: f64,
    pub samples: usize,
}

impl VoltageCeiling {
    pub fn new(geometry: ElectrodeGeometry, charge: f64, limit: f64) -> Self {
        Self {
            geometry,
            charge,
            limit,
            samples: 1024,
        }
    }

    pub fn log10_peak(&self, model: &ControlModel) -> f64 {
        let tf = model.duration();
        (0..=self.samples)
            .map(|i| {
                let t = tf * i as f64 / self.samples as f64;
                log10_max_voltage(&self.geometry, model.stiffness(t), model.bridged_center(t), self.charge)
            })
            .fold(
                f64::NEG_INFINITY,
                |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) },
            )
    }
}

impl DesignConstraint for VoltageCeiling {
    fn name(&self) -> &str {
        "voltage ceiling"
    }

    fn violation(&self, model: &ControlModel) -> f64 {
        (self.log10_peak(model) - self.limit.log10()).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electrodes::{effective_potential, GaussianElectrode};
    use crate::physics::{IonSpecies, ELEMENTARY_CHARGE};
    use crate::scenarios::TRAP_FREQUENCY;
    use crate::testutil::truncated_cosine_pair;

    fn fig2() -> ElectrodeGeometry {
        ElectrodeGeometry::gaussian_pair(
            GaussianElectrode::new(0.2, 0.0, 200e-6).unwrap(),
            GaussianElectrode::new(0.2, 250e-6, 200e-6).unwrap(),
        )
    }

    #[test]
    fn static_trap_voltages_match_hand_evaluation() {
        let pair = truncated_cosine_pair(TRAP_FREQUENCY, 0.0625);
        let model = ControlModel::new(&pair).unwrap();
        let geo = fig2();
        let trace = synthesize_voltages(&model, &geo, ELEMENTARY_CHARGE, &[0.0, pair.duration()]).unwrap();
        // at the first electrode's center phi_1' = 0, phi_1'' = -A / sigma²
        let m = IonSpecies::n2_plus().mass();
        let k = m * TRAP_FREQUENCY * TRAP_FREQUENCY;
        let oracle = -k * 200e-6 * 200e-6 / (0.2 * ELEMENTARY_CHARGE);
        assert!((trace.u1[0] / oracle - 1.0).abs() < 1e-6);
        assert!((oracle + 1.6565).abs() < 1e-3);
        assert_eq!(trace.u2[0], 0.0);
    }

    #[test]
    fn placement_identities_hold() {
        let geo = fig2();
        let k = 1.3e-12;
        for z0 in [-150e-6, 10e-6, 130e-6, 300e-6] {
            let ([u1, u2], _) = solve_pair(&geo, k, z0, ELEMENTARY_CHARGE);
            let v = effective_potential(&geo, u1, u2, ELEMENTARY_CHARGE);
            let scale = ELEMENTARY_CHARGE * (u1.abs() + u2.abs()) / 200e-6;
            assert!(v.gradient(z0).abs() <= 1e-13 * scale);
            assert!((v.curvature(z0) / k - 1.0).abs() < 1e-12);
            let l = log10_max_voltage(&geo, k, z0, ELEMENTARY_CHARGE);
            assert!((10f64.powf(l) / u1.abs().max(u2.abs()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_stiffness_gives_zero_voltages() {
        let ([u1, u2], _) = solve_pair(&fig2(), 0.0, 80e-6, ELEMENTARY_CHARGE);
        assert_eq!((u1, u2), (0.0, 0.0));
    }

    #[test]
    fn coincident_electrodes_are_degenerate() {
        let same = GaussianElectrode::new(0.2, 0.0, 200e-6).unwrap();
        let geo = ElectrodeGeometry::gaussian_pair(same, same);
        let pair = truncated_cosine_pair(TRAP_FREQUENCY, 0.0625);
        let model = ControlModel::new(&pair).unwrap();
        let r = synthesize_voltages(&model, &geo, ELEMENTARY_CHARGE, &[0.0, 1e-8]);
        assert!(matches!(r, Err(ElectrodeError::DegenerateGeometry { .. })));
    }

    fn sample_trace() -> VoltageTrace {
        VoltageTrace {
            times: vec![0.0, 1.0, 2.0, 3.0],
            u1: vec![-1.0, -2.0, -1.5, 0.5],
            u2: vec![0.2, 0.4, -0.3, 1.0],
            provenance: Provenance::Ideal,
        }
    }

    #[test]
    fn zero_noise_is_identity_and_seed_is_deterministic() {
        let t = sample_trace();
        let quiet = perturb_voltages(&t, &NoiseModel::new(0.0, NoiseMode::PerShotOffset, 3).unwrap());
        assert_eq!(quiet.u1, t.u1);
        assert_eq!(quiet.u2, t.u2);
        for mode in [NoiseMode::PerShotOffset, NoiseMode::White] {
            let n = NoiseModel::new(0.1, mode, 11).unwrap();
            assert_eq!(perturb_voltages(&t, &n), perturb_voltages(&t, &n));
        }
    }

    #[test]
    fn per_shot_mode_scales_whole_waveform() {
        let t = sample_trace();
        let p = perturb_voltages(&t, &NoiseModel::new(0.1, NoiseMode::PerShotOffset, 5).unwrap());
        let r: Vec<f64> = p.u1.iter().zip(&t.u1).map(|(a, b)| a / b).collect();
        assert!(r.iter().all(|x| (x - r[0]).abs() < 1e-15));
        let w = perturb_voltages(&t, &NoiseModel::new(0.1, NoiseMode::White, 5).unwrap());
        let rw: Vec<f64> = w.u1.iter().zip(&t.u1).map(|(a, b)| a / b).collect();
        assert!(rw.iter().any(|x| (x - rw[0]).abs() > 1e-6));
    }

    #[test]
    fn per_shot_offsets_are_unbiased() {
        let t = sample_trace();
        let shots = 4000;
        let level = 0.1;
        let mean: f64 = (0..shots)
            .map(|s| perturb_voltages(&t, &NoiseModel::new(level, NoiseMode::PerShotOffset, s).unwrap()).u1[1])
            .sum::<f64>()
            / shots as f64;
        let se = 2.0 * level / (shots as f64).sqrt();
        assert!((mean - t.u1[1]).abs() < 3.0 * se);
    }

    #[test]
    fn negative_noise_rejected() {
        assert!(NoiseModel::new(-1e-3, NoiseMode::White, 0).is_err());
        assert!("pink".parse::<NoiseMode>().is_err());
        assert_eq!("white".parse::<NoiseMode>().unwrap(), NoiseMode::White);
    }

    #[test]
    fn trace_lookup_hits_samples_and_interpolates() {
        let t = sample_trace();
        assert_eq!(t.at(2.0), [-1.5, -0.3]);
        assert_eq!(t.at(-1.0), [-1.0, 0.2]);
        let mid = t.at(0.5);
        assert!((mid[0] + 1.5).abs() < 1e-15);
    }
}
