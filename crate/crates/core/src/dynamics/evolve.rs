use rayon::prelude::*;

use super::{moments_of, DynamicsError, MomentSet, PhasePoint};
use crate::design::{AuxiliaryPair, ControlModel};

/// Minimum number of integration steps.
pub const MIN_STEPS: usize = 100;
/// Default number of integration steps over the protocol.
pub const DEFAULT_STEPS: usize = 4000;

/// Time-dependent axial force.
///
/// `frame` is called once per stage time, single-threaded and in order;
/// `force` is then evaluated for every particle against that frame.
pub trait ForceField: Sync {
    type Frame: Send + Sync;

    fn frame(&self, t: f64) -> Self::Frame;

    fn force(&self, frame: &Self::Frame, z: f64) -> f64;

    /// Whether a particle at `z` has left the modeled region.
    fn escaped(&self, _frame: &Self::Frame, _z: f64) -> bool {
        false
    }
}

type StiffnessFn = dyn Fn(f64) -> (f64, f64) + Send + Sync;

/// Harmonic force `-k(t) z + g(t)`.
pub struct HarmonicField {
    controls: Box<StiffnessFn>,
}

impl HarmonicField {
    pub fn new(controls: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        Self {
            controls: Box::new(controls),
        }
    }

    pub fn from_design(model: &ControlModel) -> Self {
        let model = model.clone();
        Self::new(move |t| (model.stiffness(t), model.force_offset(t)))
    }

    pub fn constant(k: f64, g: f64) -> Self {
        Self::new(move |_| (k, g))
    }

    pub fn free() -> Self {
        Self::constant(0.0, 0.0)
    }
}

impl ForceField for HarmonicField {
    type Frame = (f64, f64);

    fn frame(&self, t: f64) -> (f64, f64) {
        (self.controls)(t)
    }

    fn force(&self, &(k, g): &(f64, f64), z: f64) -> f64 {
        -k * z + g
    }
}

/// Per-trajectory tracking of the invariant `u p - m u' z + f`.
#[derive(Debug, Clone)]
pub struct InvariantTracking<'a> {
    pub pair: &'a AuxiliaryPair,
    /// Momentum added to `|I(0)|` when normalizing the drift.
    pub momentum_scale: f64,
}

#[derive(Debug, Clone)]
pub struct EvolveOptions<'a> {
    pub mass: f64,
    pub duration: f64,
    pub n_steps: usize,
    /// Number of checkpoint intervals; moments are recorded at their ends
    /// and at `t = 0`.
    pub checkpoints: usize,
    pub invariant: Option<InvariantTracking<'a>>,
}

impl<'a> EvolveOptions<'a> {
    pub fn new(mass: f64, duration: f64) -> Self {
        Self {
            mass,
            duration,
            n_steps: DEFAULT_STEPS,
            checkpoints: 20,
            invariant: None,
        }
    }

    pub fn steps(mut self, n_steps: usize) -> Self {
        self.n_steps = n_steps;
        self
    }

    pub fn checkpoints(mut self, n: usize) -> Self {
        self.checkpoints = n;
        self
    }

    pub fn track_invariant(mut self, pair: &'a AuxiliaryPair, momentum_scale: f64) -> Self {
        self.invariant = Some(InvariantTracking { pair, momentum_scale });
        self
    }
}

/// Checkpointed ensemble history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Moments over the particles that have not escaped.
    pub moments: Vec<MomentSet>,
    /// Largest relative invariant drift over all particles and all steps up
    /// to each checkpoint; zero when tracking is off.
    pub invariant_drift_max: Vec<f64>,
    /// Per-particle state at every checkpoint (outer index: checkpoint).
    pub snapshots: Vec<Vec<PhasePoint>>,
    pub escaped: Vec<bool>,
}

impl Trajectory {
    pub fn final_points(&self) -> &[PhasePoint] {
        self.snapshots.last().map_or(&[], Vec::as_slice)
    }

    pub fn final_moments(&self) -> MomentSet {
        self.moments.last().copied().unwrap_or_default()
    }

    pub fn escaped_fraction(&self) -> f64 {
        if self.escaped.is_empty() {
            return 0.0;
        }
        self.escaped.iter().filter(|&&e| e).count() as f64 / self.escaped.len() as f64
    }

    /// Largest relative invariant drift over the whole run.
    pub fn max_invariant_drift(&self) -> f64 {
        self.invariant_drift_max.iter().copied().fold(0.0, f64::max)
    }

    /// Surviving particles at a checkpoint.
    pub fn survivors(&self, checkpoint: usize) -> Vec<PhasePoint> {
        self.snapshots[checkpoint]
            .iter()
            .zip(&self.escaped)
            .filter(|(_, &e)| !e)
            .map(|(p, _)| *p)
            .collect()
    }
}

/// RK4 with default options and at most 20 checkpoints.
pub fn evolve_ensemble<F: ForceField>(
    points: &[PhasePoint],
    field: &F,
    mass: f64,
    duration: f64,
    n_steps: usize,
) -> Result<Trajectory, DynamicsError> {
    evolve_ensemble_with(points, field, &EvolveOptions::new(mass, duration).steps(n_steps))
}

struct ParticleRun {
    checkpoints: Vec<PhasePoint>,
    drift: Vec<f64>,
    escaped: bool,
}

/// Classic fourth-order Runge-Kutta with a fixed step. Results do not
/// depend on the number of worker threads.
pub fn evolve_ensemble_with<F: ForceField>(
    points: &[PhasePoint],
    field: &F,
    options: &EvolveOptions<'_>,
) -> Result<Trajectory, DynamicsError> {
    let n = options.n_steps;
    if n < MIN_STEPS {
        return Err(DynamicsError::TooFewSteps(n));
    }
    let tf = options.duration;
    let m = options.mass;
    let h = tf / n as f64;
    let stage_time = |j: usize| if j == 2 * n { tf } else { 0.5 * h * j as f64 };
    let frames: Vec<F::Frame> = (0..=2 * n).map(|j| field.frame(stage_time(j))).collect();
    let nc = options.checkpoints.clamp(1, n);
    let checkpoint_steps: Vec<usize> = (0..=nc).map(|c| (c * n + nc / 2) / nc).collect();
    // u, m u', f at every step node
    let invariant_nodes: Option<Vec<[f64; 3]>> = options.invariant.as_ref().map(|tr| {
        (0..=n)
            .map(|i| {
                let t = stage_time(2 * i);
                [
                    tr.pair.u_at(t, 0),
                    tr.pair.mass * tr.pair.u_at(t, 1),
                    tr.pair.f_at(t, 0),
                ]
            })
            .collect()
    });
    let momentum_scale = options.invariant.as_ref().map_or(0.0, |tr| tr.momentum_scale);
    let invariant = |node: &[f64; 3], z: f64, p: f64| node[0] * p - node[1] * z + node[2];

    let run_one = |start: &PhasePoint| -> Result<ParticleRun, DynamicsError> {
        let (mut z, mut p) = (start.position, start.momentum);
        let mut out = Vec::with_capacity(nc + 1);
        let mut drift = Vec::with_capacity(nc + 1);
        out.push(*start);
        drift.push(0.0);
        let inv0 = invariant_nodes.as_ref().map(|v| invariant(&v[0], z, p));
        let norm = inv0.map_or(1.0, |i| i.abs() + momentum_scale);
        let mut worst = 0.0f64;
        let mut escaped = false;
        let mut next_cp = 1;
        for i in 0..n {
            if !escaped {
                let (f0, fm, f1) = (&frames[2 * i], &frames[2 * i + 1], &frames[2 * i + 2]);
                let k1z = p / m;
                let k1p = field.force(f0, z);
                let k2z = (p + 0.5 * h * k1p) / m;
                let k2p = field.force(fm, z + 0.5 * h * k1z);
                let k3z = (p + 0.5 * h * k2p) / m;
                let k3p = field.force(fm, z + 0.5 * h * k2z);
                let k4z = (p + h * k3p) / m;
                let k4p = field.force(f1, z + h * k3z);
                if !(k1p.is_finite() && k2p.is_finite() && k3p.is_finite() && k4p.is_finite()) {
                    return Err(DynamicsError::NonFiniteForce {
                        time: stage_time(2 * i),
                    });
                }
                z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
                p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
                if field.escaped(f1, z) {
                    escaped = true;
                }
                if let (Some(nodes), Some(i0)) = (&invariant_nodes, inv0) {
                    let d = (invariant(&nodes[i + 1], z, p) - i0).abs() / norm;
                    worst = worst.max(d);
                }
            }
            while next_cp <= nc && checkpoint_steps[next_cp] == i + 1 {
                out.push(PhasePoint::new(z, p));
                drift.push(worst);
                next_cp += 1;
            }
        }
        Ok(ParticleRun {
            checkpoints: out,
            drift,
            escaped,
        })
    };

    let runs: Vec<Result<ParticleRun, DynamicsError>> = points.par_iter().map(run_one).collect();
    let runs: Vec<ParticleRun> = runs.into_iter().collect::<Result<_, _>>()?;

    let times: Vec<f64> = checkpoint_steps.iter().map(|&s| stage_time(2 * s)).collect();
    let escaped: Vec<bool> = runs.iter().map(|r| r.escaped).collect();
    let snapshots: Vec<Vec<PhasePoint>> = (0..=nc)
        .map(|c| runs.iter().map(|r| r.checkpoints[c]).collect())
        .collect();
    let moments = snapshots
        .iter()
        .map(|snap| {
            let alive: Vec<PhasePoint> = snap
                .iter()
                .zip(&escaped)
                .filter(|(_, &e)| !e)
                .map(|(p, _)| *p)
                .collect();
            moments_of(&alive)
        })
        .collect();
    let invariant_drift_max = (0..=nc)
        .map(|c| runs.iter().map(|r| r.drift[c]).fold(0.0, f64::max))
        .collect();
    Ok(Trajectory {
        times,
        moments,
        invariant_drift_max,
        snapshots,
        escaped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const M: f64 = 4.65e-26;

    #[test]
    fn static_trap_orbit_closes() {
        let w = std::f64::consts::TAU * 0.85e6;
        let field = HarmonicField::constant(M * w * w, 0.0);
        let p0 = PhasePoint::new(1e-5, M * w * 3e-6);
        let tr = evolve_ensemble(&[p0], &field, M, std::f64::consts::TAU / w, 4000).unwrap();
        let pf = tr.final_points()[0];
        assert!(((pf.position - p0.position) / p0.position).abs() < 1e-8);
        assert!(((pf.momentum - p0.momentum) / p0.momentum).abs() < 1e-8);
    }

    #[test]
    fn free_flight_is_exact() {
        let t = 3e-6;
        let pts = [PhasePoint::new(1e-6, 2e-22), PhasePoint::new(-4e-6, -5e-23)];
        let tr = evolve_ensemble(&pts, &HarmonicField::free(), M, t, 100).unwrap();
        for (a, b) in pts.iter().zip(tr.final_points()) {
            let z = a.position + a.momentum * t / M;
            assert!((b.position - z).abs() <= 1e-12 * z.abs());
            assert_eq!(b.momentum, a.momentum);
        }
    }

    #[test]
    fn checkpoints_cover_the_run() {
        let tr = evolve_ensemble(&[PhasePoint::default(); 3], &HarmonicField::free(), M, 1e-6, 400).unwrap();
        assert_eq!(tr.times.len(), 21);
        assert_eq!(tr.times[0], 0.0);
        assert_eq!(*tr.times.last().unwrap(), 1e-6);
        assert_eq!(tr.snapshots.len(), 21);
    }

    #[test]
    fn too_few_steps_rejected() {
        let r = evolve_ensemble(&[PhasePoint::default()], &HarmonicField::free(), M, 1e-6, 99);
        assert!(matches!(r, Err(DynamicsError::TooFewSteps(99))));
    }

    #[test]
    fn non_finite_force_reports_time() {
        let field = HarmonicField::new(|t| if t > 0.5e-6 { (f64::NAN, 0.0) } else { (0.0, 0.0) });
        match evolve_ensemble(&[PhasePoint::new(1e-6, 0.0)], &field, M, 1e-6, 100) {
            Err(DynamicsError::NonFiniteForce { time }) => assert!((0.49e-6..=0.5e-6).contains(&time)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
