use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{DynamicsError, MomentSet, PhasePoint};
use crate::numerics::pairwise_sum;
use crate::physics::ThermalMoments;

/// Seeded sample of the thermal phase-space distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalEnsemble {
    pub samples: Vec<PhasePoint>,
    pub seed: u64,
    pub exact: ThermalMoments,
}

impl ThermalEnsemble {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn exact_moments(&self) -> MomentSet {
        MomentSet::centered(self.exact.position_variance, self.exact.momentum_variance)
    }
}

/// Stream layout: sample `i` is drawn from ChaCha8 stream `i` of the seed,
/// position first, momentum second. Independent of thread count.
pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn sample_thermal(moments: ThermalMoments, n: usize, seed: u64) -> Result<ThermalEnsemble, DynamicsError> {
    if n < 2 {
        return Err(DynamicsError::TooFewSamples(n));
    }
    if !(moments.position_variance > 0.0 && moments.momentum_variance > 0.0) {
        return Err(DynamicsError::NonPositiveVariance {
            position: moments.position_variance,
            momentum: moments.momentum_variance,
        });
    }
    let sz = moments.position_variance.sqrt();
    let sp = moments.momentum_variance.sqrt();
    let samples = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            let z: f64 = StandardNormal.sample(&mut rng);
            let p: f64 = StandardNormal.sample(&mut rng);
            PhasePoint::new(z * sz, p * sp)
        })
        .collect();
    Ok(ThermalEnsemble {
        samples,
        seed,
        exact: moments,
    })
}

/// Sample moments. Second moments use `1/(n-1)` about the sample mean and
/// add the squared mean back, so variances derived from the result are
/// unbiased. Reductions are fixed-order pairwise sums.
pub fn moments_of(points: &[PhasePoint]) -> MomentSet {
    let n = points.len();
    if n == 0 {
        return MomentSet::default();
    }
    let nf = n as f64;
    let zs: Vec<f64> = points.iter().map(|p| p.position).collect();
    let ps: Vec<f64> = points.iter().map(|p| p.momentum).collect();
    let mz = pairwise_sum(&zs) / nf;
    let mp = pairwise_sum(&ps) / nf;
    if n == 1 {
        return MomentSet {
            mean_position: mz,
            mean_momentum: mp,
            position_sq: mz * mz,
            momentum_sq: mp * mp,
            symmetric_cross: 2.0 * mz * mp,
        };
    }
    let dz: Vec<f64> = zs.iter().map(|z| z - mz).collect();
    let dp: Vec<f64> = ps.iter().map(|p| p - mp).collect();
    let denom = nf - 1.0;
    let vz = pairwise_sum(&dz.iter().map(|d| d * d).collect::<Vec<_>>()) / denom;
    let vp = pairwise_sum(&dp.iter().map(|d| d * d).collect::<Vec<_>>()) / denom;
    let czp = pairwise_sum(&dz.iter().zip(&dp).map(|(a, b)| a * b).collect::<Vec<_>>()) / denom;
    MomentSet {
        mean_position: mz,
        mean_momentum: mp,
        position_sq: vz + mz * mz,
        momentum_sq: vp + mp * mp,
        symmetric_cross: 2.0 * (czp + mz * mp),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments() -> ThermalMoments {
        ThermalMoments {
            position_variance: 1.04e-8,
            momentum_variance: 6.42e-46,
        }
    }

    #[test]
    fn variances_within_three_standard_errors() {
        let n = 100_000;
        let e = sample_thermal(moments(), n, 7).unwrap();
        let m = moments_of(&e.samples);
        let se = |v: f64| v * (2.0 / (n as f64 - 1.0)).sqrt();
        let exact = moments();
        assert!((m.position_variance() - exact.position_variance).abs() < 3.0 * se(exact.position_variance));
        assert!((m.momentum_variance() - exact.momentum_variance).abs() < 3.0 * se(exact.momentum_variance));
        let mean_se = (exact.position_variance / n as f64).sqrt();
        assert!(m.mean_position.abs() < 3.0 * mean_se);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = sample_thermal(moments(), 1000, 42).unwrap();
        let b = sample_thermal(moments(), 1000, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_thermal(moments(), 1000, 43).unwrap();
        assert_ne!(a.samples, c.samples);
        // prefix property of the stream layout
        let d = sample_thermal(moments(), 10, 42).unwrap();
        assert_eq!(&a.samples[..10], &d.samples[..]);
    }

    #[test]
    fn ground_state_widths_are_still_gaussian() {
        use crate::physics::{thermal_moments, IonSpecies, ThermalSpec};
        let mass = IonSpecies::n2_plus().mass();
        let spec = ThermalSpec::new(0.0, 2.0 * std::f64::consts::PI * 0.85e6, mass).unwrap();
        let exact = thermal_moments(&spec).unwrap();
        let n = 50_000;
        let e = sample_thermal(exact, n, 1).unwrap();
        let m = moments_of(&e.samples);
        let se = exact.position_variance * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((m.position_variance() - exact.position_variance).abs() < 3.0 * se);
        // fourth standardized moment of a normal is 3
        let k4: f64 = e
            .samples
            .iter()
            .map(|p| (p.position / exact.position_variance.sqrt()).powi(4))
            .sum::<f64>()
            / n as f64;
        assert!((k4 - 3.0).abs() < 0.1);
    }

    #[test]
    fn rejects_small_or_degenerate_requests() {
        assert!(matches!(
            sample_thermal(moments(), 1, 0),
            Err(DynamicsError::TooFewSamples(1))
        ));
        let bad = ThermalMoments {
            position_variance: 0.0,
            momentum_variance: 1.0,
        };
        assert!(sample_thermal(bad, 10, 0).is_err());
    }

    #[test]
    fn symmetric_pair_has_zero_mean() {
        let pts = [PhasePoint::new(1e-6, -2e-22), PhasePoint::new(-1e-6, 2e-22)];
        let m = moments_of(&pts);
        assert_eq!(m.mean_position, 0.0);
        assert_eq!(m.mean_momentum, 0.0);
    }

    #[test]
    fn duplicated_point_has_zero_variance() {
        let pts = vec![PhasePoint::new(3e-6, 1e-22); 17];
        let m = moments_of(&pts);
        assert_eq!(m.position_variance(), 0.0);
        assert_eq!(m.momentum_variance(), 0.0);
        assert_eq!(m.covariance(), 0.0);
    }
}
