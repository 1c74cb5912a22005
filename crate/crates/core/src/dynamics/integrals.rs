use super::DynamicsError;
use crate::design::AuxiliaryPair;
use crate::numerics::{cumulative_simpson, simpson_cell};

/// Running integrals `I1 = ∫dt/u²`, `I2 = ∫f dt/u²` and optionally
/// `I3 = ∫(f - f0)² dt/u²` on a uniform grid, evaluable at any time by
/// completing the partial cell.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantIntegrals {
    pub duration: f64,
    pub grid_size: usize,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub i3: Option<Vec<f64>>,
    pair: AuxiliaryPair,
}

impl InvariantIntegrals {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.grid_size;
        (0..=n).map(move |i| self.node_time(i))
    }

    pub fn node_time(&self, i: usize) -> f64 {
        if i == self.grid_size {
            self.duration
        } else {
            self.duration * i as f64 / self.grid_size as f64
        }
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let t = t.clamp(0.0, self.duration);
        let i = ((t / self.duration) * self.grid_size as f64).floor() as usize;
        let i = i.min(self.grid_size);
        (i, self.node_time(i))
    }

    fn complete(&self, values: &[f64], t: f64, g: impl Fn(f64) -> f64) -> f64 {
        let (i, ti) = self.locate(t);
        if t <= ti {
            values[i]
        } else {
            values[i] + simpson_cell(&g, ti, t)
        }
    }

    pub fn i1_at(&self, t: f64) -> f64 {
        let p = &self.pair;
        self.complete(&self.i1, t, |s| p.u_at(s, 0).powi(-2))
    }

    pub fn i2_at(&self, t: f64) -> f64 {
        let p = &self.pair;
        self.complete(&self.i2, t, |s| p.f_at(s, 0) / p.u_at(s, 0).powi(2))
    }

    pub fn i3_at(&self, t: f64) -> Option<f64> {
        let p = &self.pair;
        let f0 = p.f_at(0.0, 0);
        self.i3
            .as_ref()
            .map(|v| self.complete(v, t, |s| (p.f_at(s, 0) - f0).powi(2) / p.u_at(s, 0).powi(2)))
    }
}

fn check_u(pair: &AuxiliaryPair, grid_size: usize) -> Result<(), DynamicsError> {
    let tf = pair.duration();
    for i in 0..=2 * grid_size {
        let t = tf * i as f64 / (2 * grid_size) as f64;
        let u = pair.u_at(t, 0);
        if !(u > 0.0) {
            return Err(DynamicsError::NonPositiveU { time: t, value: u });
        }
    }
    Ok(())
}

/// `I1` and `I2` by cumulative Simpson quadrature on `grid_size` cells.
pub fn compute_integrals(pair: &AuxiliaryPair, grid_size: usize) -> Result<InvariantIntegrals, DynamicsError> {
    build(pair, grid_size, false)
}

/// As [`compute_integrals`], also accumulating `I3`.
pub fn compute_integrals_with_third(
    pair: &AuxiliaryPair,
    grid_size: usize,
) -> Result<InvariantIntegrals, DynamicsError> {
    build(pair, grid_size, true)
}

fn build(pair: &AuxiliaryPair, grid_size: usize, third: bool) -> Result<InvariantIntegrals, DynamicsError> {
    let n = grid_size.max(1);
    check_u(pair, n)?;
    let tf = pair.duration();
    let i1 = cumulative_simpson(|t| pair.u_at(t, 0).powi(-2), tf, n);
    let i2 = if pair.f.is_some() {
        cumulative_simpson(|t| pair.f_at(t, 0) / pair.u_at(t, 0).powi(2), tf, n)
    } else {
        vec![0.0; n + 1]
    };
    let i3 = third.then(|| {
        let f0 = pair.f_at(0.0, 0);
        cumulative_simpson(|t| (pair.f_at(t, 0) - f0).powi(2) / pair.u_at(t, 0).powi(2), tf, n)
    });
    Ok(InvariantIntegrals {
        duration: tf,
        grid_size: n,
        i1,
        i2,
        i3,
        pair: pair.clone(),
    })
}
