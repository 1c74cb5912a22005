use super::{
    perturb_voltages, stage_times, synthesize_voltages, EffectiveHarmonicField, ElectrodeError, ElectrodeGeometry,
    FullPotentialField, NoiseMode, NoiseModel, VoltageTrace,
};
use rayon::prelude::*;

use crate::design::ControlModel;
use crate::dynamics::{evolve_ensemble_with, moments_of, sample_thermal, EvolveOptions, PhasePoint, ThermalEnsemble};
use crate::numerics::pairwise_sum;
use crate::physics::{thermal_moments, IonSpecies, ThermalSpec};

/// How the perturbed electrode potential acts on the ion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceModel {
    /// Harmonic expansion about the effective trap center at each instant.
    EffectiveHarmonic,
    /// Exact gradient of the Gaussian-electrode potential, with escapes.
    FullPotential,
}

impl ForceModel {
    pub fn label(&self) -> &'static str {
        match self {
            ForceModel::EffectiveHarmonic => "effective-harmonic",
            ForceModel::FullPotential => "full-potential",
        }
    }
}

impl std::str::FromStr for ForceModel {
    type Err = ElectrodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "effective-harmonic" => Ok(ForceModel::EffectiveHarmonic),
            "full-potential" => Ok(ForceModel::FullPotential),
            other => Err(ElectrodeError::InvalidNoise(format!("unknown force model '{other}'"))),
        }
    }
}

pub const MIN_SHOTS: usize = 10;

/// XORed into the run seed to derive per-shot noise seeds.
const NOISE_SALT: u64 = 0x6e6f_6973_655f_7368;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweepOptions {
    pub levels: Vec<f64>,
    pub shots: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub mode: NoiseMode,
    pub force: ForceModel,
    pub n_steps: usize,
}

/// Noise seed of shot `s`; identical across levels, so every level sees
/// the same standard-normal draws scaled by its own `dU/U`.
pub fn shot_seed(seed: u64, shot: usize) -> u64 {
    (seed ^ NOISE_SALT).wrapping_add(shot as u64)
}

/// Statistics of one ensemble run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotStatistics {
    pub v_mean: f64,
    pub v_std: f64,
    /// `Std(p_f) / Std(p_0)` over surviving particles.
    pub r_eff: f64,
    pub escaped_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweepRow {
    pub du_over_u: f64,
    /// Mean over shots of the shot-mean final velocity.
    pub v_mean: f64,
    /// Mean over shots of the within-shot velocity spread.
    pub v_std: f64,
    pub r_eff: f64,
    pub escaped_fraction: f64,
    /// RMS over shots of `(v_shot - v_ideal) / v_ideal`.
    pub v_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweep {
    pub ideal: ShotStatistics,
    pub rows: Vec<NoiseSweepRow>,
    pub mode: NoiseMode,
    pub force: ForceModel,
}

/// Final-velocity statistics of `ensemble` driven by `trace`.
pub fn run_trace(
    model: &ControlModel,
    geometry: &ElectrodeGeometry,
    species: &IonSpecies,
    ensemble: &[PhasePoint],
    trace: &VoltageTrace,
    force: ForceModel,
    n_steps: usize,
) -> Result<ShotStatistics, ElectrodeError> {
    let m = species.mass();
    let opts = EvolveOptions::new(m, model.duration()).steps(n_steps).checkpoints(1);
    let tr = match force {
        ForceModel::EffectiveHarmonic => {
            let field = EffectiveHarmonicField::new(geometry, trace, species.charge(), model);
            evolve_ensemble_with(ensemble, &field, &opts)?
        }
        ForceModel::FullPotential => {
            let field = FullPotentialField::new(geometry, trace, species.charge());
            evolve_ensemble_with(ensemble, &field, &opts)?
        }
    };
    let last = tr.snapshots.len() - 1;
    let alive_final = tr.survivors(last);
    let alive_initial = tr.survivors(0);
    let fm = moments_of(&alive_final);
    let im = moments_of(&alive_initial);
    let r_eff = if im.momentum_variance() > 0.0 {
        (fm.momentum_variance() / im.momentum_variance()).sqrt()
    } else {
        f64::NAN
    };
    Ok(ShotStatistics {
        v_mean: fm.mean_momentum / m,
        v_std: fm.momentum_variance().sqrt() / m,
        r_eff,
        escaped_fraction: tr.escaped_fraction(),
    })
}

/// Final-velocity statistics under voltage uncertainty, one row per level.
pub fn noise_sweep(
    model: &ControlModel,
    geometry: &ElectrodeGeometry,
    species: &IonSpecies,
    thermal: &ThermalSpec,
    options: &NoiseSweepOptions,
) -> Result<NoiseSweep, ElectrodeError> {
    if options.shots < MIN_SHOTS {
        return Err(ElectrodeError::TooFewShots(options.shots));
    }
    let exact = thermal_moments(thermal)?;
    let ensemble: ThermalEnsemble = sample_thermal(exact, options.n_samples, options.seed)?;
    let times = stage_times(model.duration(), options.n_steps);
    let ideal_trace = synthesize_voltages(model, geometry, species.charge(), &times)?;
    let run = |trace: &VoltageTrace| {
        run_trace(
            model,
            geometry,
            species,
            &ensemble.samples,
            trace,
            options.force,
            options.n_steps,
        )
    };
    let ideal = run(&ideal_trace)?;
    let mut rows = Vec::with_capacity(options.levels.len());
    for &level in &options.levels {
        let stats = (0..options.shots)
            .into_par_iter()
            .map(|shot| {
                let noise = NoiseModel::new(level, options.mode, shot_seed(options.seed, shot))?;
                let trace = perturb_voltages(&ideal_trace, &noise);
                run(&trace).map_err(|e| ElectrodeError::Shot {
                    shot,
                    level,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n = stats.len() as f64;
        let avg = |f: &dyn Fn(&ShotStatistics) -> f64| pairwise_sum(&stats.iter().map(f).collect::<Vec<_>>()) / n;
        let dev_sq = avg(&|s| ((s.v_mean - ideal.v_mean) / ideal.v_mean).powi(2));
        rows.push(NoiseSweepRow {
            du_over_u: level,
            v_mean: avg(&|s| s.v_mean),
            v_std: avg(&|s| s.v_std),
            r_eff: avg(&|s| s.r_eff),
            escaped_fraction: avg(&|s| s.escaped_fraction),
            v_deviation: dev_sq.sqrt(),
        });
    }
    Ok(NoiseSweep {
        ideal,
        rows,
        mode: options.mode,
        force: options.force,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;
    use crate::testutil::truncated_cosine_pair;

    fn options(levels: Vec<f64>, shots: usize) -> NoiseSweepOptions {
        NoiseSweepOptions {
            levels,
            shots,
            n_samples: 200,
            seed: 11,
            mode: NoiseMode::PerShotOffset,
            force: ForceModel::EffectiveHarmonic,
            n_steps: 400,
        }
    }

    fn static_setup() -> (ControlModel, ThermalSpec) {
        let pair = truncated_cosine_pair(scenarios::TRAP_FREQUENCY, 0.0625);
        let thermal = ThermalSpec::new(300.0, scenarios::TRAP_FREQUENCY, pair.mass).unwrap();
        (ControlModel::new(&pair).unwrap(), thermal)
    }

    #[test]
    fn zero_level_reproduces_ideal() {
        let (model, thermal) = static_setup();
        let sweep = noise_sweep(
            &model,
            &scenarios::extraction_geometry(),
            &IonSpecies::n2_plus(),
            &thermal,
            &options(vec![0.0, 1e-2], 10),
        )
        .unwrap();
        let row = &sweep.rows[0];
        assert_eq!(row.v_deviation, 0.0);
        assert!((row.v_mean - sweep.ideal.v_mean).abs() <= 1e-12 * sweep.ideal.v_std);
        assert!((row.v_std / sweep.ideal.v_std - 1.0).abs() < 1e-12);
        assert!(sweep.rows[1].v_deviation > 0.0);
    }

    #[test]
    fn too_few_shots_rejected() {
        let (model, thermal) = static_setup();
        let err = noise_sweep(
            &model,
            &scenarios::extraction_geometry(),
            &IonSpecies::n2_plus(),
            &thermal,
            &options(vec![1e-3], 9),
        )
        .unwrap_err();
        assert_eq!(err, ElectrodeError::TooFewShots(9));
    }

    #[test]
    fn force_model_labels_parse_back() {
        for f in [ForceModel::EffectiveHarmonic, ForceModel::FullPotential] {
            assert_eq!(f.label().parse::<ForceModel>().unwrap(), f);
        }
        assert!("quadratic".parse::<ForceModel>().is_err());
    }
}
