use std::sync::Arc;

use super::ElectrodeError;

/// Value and first two derivatives of a shape function, stored as
/// `exp(log_scale) * (value, d1, d2)` so that far tails neither underflow
/// nor overflow when ratios are taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeJet {
    pub log_scale: f64,
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl ShapeJet {
    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    /// `(phi, phi', phi'')` in linear form.
    pub fn linear(&self) -> [f64; 3] {
        let s = self.scale();
        [s * self.value, s * self.d1, s * self.d2]
    }
}

/// Dimensionless, twice-differentiable electrode shape function `phi(z)`.
pub trait ShapeFunction: Send + Sync + std::fmt::Debug {
    fn jet(&self, z: f64) -> ShapeJet;

    /// Interval outside which the electrode's field is not modeled.
    fn extent(&self) -> (f64, f64);
}

/// `phi(z) = A exp(-(z - beta)² / (2 sigma²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianElectrode {
    pub amplitude: f64,
    pub center: f64,
    pub sigma: f64,
}

/// Half-width of the modeled region in units of sigma.
pub const EXTENT_SIGMAS: f64 = 5.0;

impl GaussianElectrode {
    pub fn new(amplitude: f64, center: f64, sigma: f64) -> Result<Self, ElectrodeError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(ElectrodeError::InvalidGeometry(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !(amplitude != 0.0 && amplitude.is_finite()) {
            return Err(ElectrodeError::InvalidGeometry(format!(
                "amplitude must be finite and nonzero, got {amplitude}"
            )));
        }
        if !center.is_finite() {
            return Err(ElectrodeError::InvalidGeometry("center must be finite".into()));
        }
        Ok(Self {
            amplitude,
            center,
            sigma,
        })
    }
}

impl ShapeFunction for GaussianElectrode {
    fn jet(&self, z: f64) -> ShapeJet {
        let x = (z - self.center) / self.sigma;
        ShapeJet {
            log_scale: self.amplitude.abs().ln() - 0.5 * x * x,
            value: self.amplitude.signum(),
            d1: -self.amplitude.signum() * x / self.sigma,
            d2: self.amplitude.signum() * (x * x - 1.0) / (self.sigma * self.sigma),
        }
    }

    fn extent(&self) -> (f64, f64) {
        (
            self.center - EXTENT_SIGMAS * self.sigma,
            self.center + EXTENT_SIGMAS * self.sigma,
        )
    }
}

/// Two electrodes driven by voltages `U1`, `U2`; the potential energy of
/// charge `q` is `q (phi_1 U1 + phi_2 U2)`.
#[derive(Debug, Clone)]
pub struct ElectrodeGeometry {
    pub shapes: [Arc<dyn ShapeFunction>; 2],
}

impl ElectrodeGeometry {
    pub fn new(first: impl ShapeFunction + 'static, second: impl ShapeFunction + 'static) -> Self {
        Self {
            shapes: [Arc::new(first), Arc::new(second)],
        }
    }

    pub fn gaussian_pair(first: GaussianElectrode, second: GaussianElectrode) -> Self {
        Self::new(first, second)
    }

    pub fn jets(&self, z: f64) -> [ShapeJet; 2] {
        [self.shapes[0].jet(z), self.shapes[1].jet(z)]
    }

    /// Hull of both electrodes' modeled extents.
    pub fn region(&self) -> (f64, f64) {
        let (a0, b0) = self.shapes[0].extent();
        let (a1, b1) = self.shapes[1].extent();
        (a0.min(a1), b0.max(b1))
    }
}

/// Static potential of one voltage pair.
#[derive(Debug, Clone, Copy)]
pub struct EffectivePotential<'a> {
    pub geometry: &'a ElectrodeGeometry,
    pub voltages: [f64; 2],
    pub charge: f64,
}

impl<'a> EffectivePotential<'a> {
    fn combine(&self, z: f64, pick: impl Fn(&[f64; 3]) -> f64) -> f64 {
        let j = self.geometry.jets(z);
        self.charge * (pick(&j[0].linear()) * self.voltages[0] + pick(&j[1].linear()) * self.voltages[1])
    }

    /// `V(z)` (J).
    pub fn value(&self, z: f64) -> f64 {
        self.combine(z, |l| l[0])
    }

    /// `V'(z)` (N).
    pub fn gradient(&self, z: f64) -> f64 {
        self.combine(z, |l| l[1])
    }

    /// `V''(z)` (N/m).
    pub fn curvature(&self, z: f64) -> f64 {
        self.combine(z, |l| l[2])
    }
}

/// Potential energy function `V(z) = q (phi_1 U1 + phi_2 U2)`.
pub fn effective_potential<'a>(
    geometry: &'a ElectrodeGeometry,
    u1: f64,
    u2: f64,
    charge: f64,
) -> EffectivePotential<'a> {
    EffectivePotential {
        geometry,
        voltages: [u1, u2],
        charge,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> ElectrodeGeometry {
        ElectrodeGeometry::gaussian_pair(
            GaussianElectrode::new(0.2, 0.0, 200e-6).unwrap(),
            GaussianElectrode::new(0.2, 250e-6, 200e-6).unwrap(),
        )
    }

    #[test]
    fn gaussian_derivatives_match_finite_differences() {
        let g = GaussianElectrode::new(0.2, 50e-6, 200e-6).unwrap();
        for z in [-300e-6, -10e-6, 0.0, 120e-6, 600e-6] {
            let h = 1e-9;
            let [v, d1, d2] = g.jet(z).linear();
            let [vp, d1p, _] = g.jet(z + h).linear();
            let [vm, d1m, _] = g.jet(z - h).linear();
            assert!(((vp - vm) / (2.0 * h) - d1).abs() <= 1e-6 * d1.abs().max(v / 200e-6));
            assert!(((d1p - d1m) / (2.0 * h) - d2).abs() <= 1e-6 * d2.abs().max(v / 4e-8));
        }
    }

    #[test]
    fn far_tail_stays_finite_in_log_form() {
        let g = GaussianElectrode::new(0.2, 0.0, 200e-6).unwrap();
        let j = g.jet(0.1);
        assert_eq!(j.scale(), 0.0);
        assert!(j.log_scale.is_finite() && j.d1.is_finite());
    }

    #[test]
    fn zero_voltages_give_zero_potential() {
        let geo = fig2();
        let v = effective_potential(&geo, 0.0, 0.0, 1.602e-19);
        for z in [-1e-4, 0.0, 3e-4] {
            assert_eq!(v.value(z), 0.0);
            assert_eq!(v.gradient(z), 0.0);
        }
    }

    #[test]
    fn potential_is_linear_in_voltages() {
        let geo = fig2();
        let a = effective_potential(&geo, -1.3, 0.7, 1.602e-19);
        let b = effective_potential(&geo, -2.6, 1.4, 1.602e-19);
        for z in [-1e-4, 0.0, 3e-4] {
            assert_eq!(b.value(z), 2.0 * a.value(z));
            assert_eq!(b.curvature(z), 2.0 * a.curvature(z));
        }
    }

    #[test]
    fn invalid_sigma_rejected() {
        assert!(GaussianElectrode::new(0.2, 0.0, 0.0).is_err());
        assert!(GaussianElectrode::new(0.0, 0.0, 1e-4).is_err());
    }

    #[test]
    fn region_spans_both_electrodes() {
        let (lo, hi) = fig2().region();
        assert!((lo + 1e-3).abs() < 1e-15);
        assert!((hi - 1.25e-3).abs() < 1e-15);
    }
}
