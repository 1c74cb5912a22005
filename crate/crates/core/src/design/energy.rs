use super::{AuxiliaryPair, ControlModel, DesignError};
use crate::dynamics::{analytic_moments, compute_integrals, MomentSet};
use crate::physics::{thermal_moments, ThermalSpec};

/// `E_p(t) = k <(z - z0)²> / 2` on `grid_size + 1` uniform times, for the
/// thermal initial state. Signed: an expulsive potential lowers it.
pub fn potential_energy_profile(
    pair: &AuxiliaryPair,
    thermal: &ThermalSpec,
    grid_size: usize,
) -> Result<Vec<(f64, f64)>, DesignError> {
    let n = grid_size.max(1);
    let m0 = thermal_moments(thermal)?;
    let initial = MomentSet::centered(m0.position_variance, m0.momentum_variance);
    let ints = compute_integrals(pair, n)?;
    let model = ControlModel::new(pair)?;
    (0..=n)
        .map(|i| {
            let t = ints.node_time(i);
            let mt = analytic_moments(pair, &ints, &initial, t)?;
            let k = model.stiffness(t);
            let g = model.force_offset(t);
            let z0 = model.bridged_center(t);
            let e = 0.5 * (k * mt.position_sq - 2.0 * g * mt.mean_position + g * z0);
            Ok((t, e))
        })
        .collect()
}

/// Largest signed potential energy over the grid.
pub fn peak_potential_energy(
    pair: &AuxiliaryPair,
    thermal: &ThermalSpec,
    grid_size: usize,
) -> Result<f64, DesignError> {
    Ok(potential_energy_profile(pair, thermal, grid_size)?
        .into_iter()
        .map(|(_, e)| e)
        .fold(f64::NEG_INFINITY, f64::max))
}
