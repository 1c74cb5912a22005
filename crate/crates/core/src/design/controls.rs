use super::{AuxiliaryPair, DesignError};
use crate::numerics::{bisect, bracket_roots, midpoint};

/// Relative stiffness below which the trap-center position is not reported.
pub const K_FLOOR_FRACTION: f64 = 1e-6;

/// Analytic controls of a design, evaluable at any time.
///
/// The canonical pair is the signed stiffness `k = -m u''/u` and the force
/// offset `g = -f'/u`, both finite everywhere. The trap center `z0 = g/k`
/// is derived; inside the short windows where `|k| <= k_floor` it is
/// bridged by a cubic Hermite segment matching value and slope at the
/// window edges.
#[derive(Debug, Clone)]
pub struct ControlModel {
    pair: AuxiliaryPair,
    k_floor: f64,
    bridges: Vec<Bridge>,
}

#[derive(Debug, Clone, Copy)]
struct Bridge {
    start: f64,
    end: f64,
    z_start: f64,
    z_end: f64,
    dz_start: f64,
    dz_end: f64,
}

impl Bridge {
    fn eval(&self, t: f64) -> f64 {
        let h = self.end - self.start;
        if h <= 0.0 {
            return 0.5 * (self.z_start + self.z_end);
        }
        let s = (t - self.start) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.z_start
            + (s3 - 2.0 * s2 + s) * h * self.dz_start
            + (-2.0 * s3 + 3.0 * s2) * self.z_end
            + (s3 - s2) * h * self.dz_end
    }
}

impl ControlModel {
    pub fn new(pair: &AuxiliaryPair) -> Result<Self, DesignError> {
        let tf = pair.duration();
        let bcs = &pair.bcs;
        let k_floor = K_FLOOR_FRACTION * pair.mass * bcs.omega_start_sq().abs().max(bcs.omega_end_sq().abs());
        let mut model = Self {
            pair: pair.clone(),
            k_floor,
            bridges: Vec::new(),
        };
        if pair.f.is_none() {
            return Ok(model);
        }
        let n = super::solve::DETECTION_GRID;
        let h = tf / n as f64;
        let excess = |t: f64| model.stiffness(t).abs() - k_floor;
        let mut bridges = Vec::new();
        for b in bracket_roots(|t| model.pair.u_at(t, 2), tf, n) {
            let root = midpoint(b);
            // walk outwards until |k| clears the floor
            let mut lo = root;
            while lo > 0.0 && excess(lo) <= 0.0 {
                lo = (lo - h).max(0.0);
            }
            let mut hi = root;
            while hi < tf && excess(hi) <= 0.0 {
                hi = (hi + h).min(tf);
            }
            let start = if excess(lo) > 0.0 {
                bisect(&excess, lo, root, excess(lo), tf * 1e-15).0
            } else {
                lo
            };
            let end = if excess(hi) > 0.0 {
                bisect(&excess, root, hi, excess(root), tf * 1e-15).1
            } else {
                hi
            };
            bridges.push((start, end));
        }
        model.bridges = bridges
            .into_iter()
            .map(|(start, end)| Bridge {
                start,
                end,
                z_start: model.direct_center(start),
                z_end: model.direct_center(end),
                dz_start: model.direct_center_rate(start),
                dz_end: model.direct_center_rate(end),
            })
            .collect();
        Ok(model)
    }

    pub fn pair(&self) -> &AuxiliaryPair {
        &self.pair
    }

    pub fn duration(&self) -> f64 {
        self.pair.duration()
    }

    pub fn k_floor(&self) -> f64 {
        self.k_floor
    }

    pub fn mass(&self) -> f64 {
        self.pair.mass
    }

    pub fn stiffness(&self, t: f64) -> f64 {
        -self.pair.mass * self.pair.u_at(t, 2) / self.pair.u_at(t, 0)
    }

    pub fn force_offset(&self, t: f64) -> f64 {
        -self.pair.f_at(t, 1) / self.pair.u_at(t, 0)
    }

    /// `z0 = f' / (m u'')`, undefined where `u''` vanishes.
    fn direct_center(&self, t: f64) -> f64 {
        if self.pair.f.is_none() {
            return 0.0;
        }
        self.pair.f_at(t, 1) / (self.pair.mass * self.pair.u_at(t, 2))
    }

    fn direct_center_rate(&self, t: f64) -> f64 {
        if self.pair.f.is_none() {
            return 0.0;
        }
        let udd = self.pair.u_at(t, 2);
        let uddd = self.pair.u_at(t, 3);
        let fd = self.pair.f_at(t, 1);
        let fdd = self.pair.f_at(t, 2);
        (fdd * udd - fd * uddd) / (self.pair.mass * udd * udd)
    }

    /// Whether `z0` at `t` is a direct ratio (`|k| > k_floor`).
    pub fn center_is_determinate(&self, t: f64) -> bool {
        self.stiffness(t).abs() > self.k_floor
    }

    /// Trap center where it is determinate, `None` elsewhere.
    pub fn center(&self, t: f64) -> Option<f64> {
        self.center_is_determinate(t).then(|| self.direct_center(t))
    }

    /// Trap center everywhere, bridged across `|k| <= k_floor`.
    pub fn bridged_center(&self, t: f64) -> f64 {
        if let Some(b) = self.bridges.iter().find(|b| t >= b.start && t <= b.end) {
            return b.eval(t);
        }
        if self.center_is_determinate(t) {
            self.direct_center(t)
        } else {
            // tangential zero of k not caught by the root scan
            self.direct_center(t).clamp(-1.0, 1.0)
        }
    }

    /// Time derivative of the trap center where it is determinate.
    pub fn center_rate(&self, t: f64) -> Option<f64> {
        self.center_is_determinate(t).then(|| self.direct_center_rate(t))
    }

    /// Windows `(start, end)` in which the center is bridged.
    pub fn bridge_windows(&self) -> Vec<(f64, f64)> {
        self.bridges.iter().map(|b| (b.start, b.end)).collect()
    }
}

/// Sampled control functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlWaveform {
    pub times: Vec<f64>,
    pub stiffness: Vec<f64>,
    pub force_offset: Vec<f64>,
    /// `None` marks times where the center is indeterminate.
    pub center: Vec<Option<f64>>,
    pub k_floor: f64,
    pub mass: f64,
}

impl ControlWaveform {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Intervals `[t_i, t_j]` of consecutive samples with negative stiffness.
    pub fn expulsive_intervals(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut open: Option<f64> = None;
        for (t, k) in self.times.iter().zip(&self.stiffness) {
            match (open, *k < 0.0) {
                (None, true) => open = Some(*t),
                (Some(s), false) => {
                    out.push((s, *t));
                    open = None;
                }
                _ => {}
            }
        }
        if let (Some(s), Some(&last)) = (open, self.times.last()) {
            out.push((s, last));
        }
        out
    }
}

/// Sample `k`, `g` and `z0` on `grid_size + 1` uniform points.
pub fn extract_controls(pair: &AuxiliaryPair, grid_size: usize) -> Result<ControlWaveform, DesignError> {
    let n = grid_size.max(1);
    let tf = pair.duration();
    let times: Vec<f64> = (0..=n)
        .map(|i| if i == n { tf } else { tf * i as f64 / n as f64 })
        .collect();
    if let Some(&t) = times.iter().find(|&&t| !(pair.u_at(t, 0) > 0.0)) {
        return Err(DesignError::USignChange {
            minimum: pair.u_at(t, 0),
        });
    }
    let model = ControlModel::new(pair)?;
    Ok(ControlWaveform {
        stiffness: times.iter().map(|&t| model.stiffness(t)).collect(),
        force_offset: times.iter().map(|&t| model.force_offset(t)).collect(),
        center: times.iter().map(|&t| model.center(t)).collect(),
        k_floor: model.k_floor(),
        mass: pair.mass,
        times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{
        build_boundary_conditions, solve_constrained_polynomials, static_trap_pair, AxialTargets, ShapeParams,
    };
    use crate::physics::IonSpecies;
    use crate::scenarios;
    use crate::testutil::{constant_pair, truncated_cosine_pair};

    #[test]
    fn cosine_auxiliary_gives_static_trap() {
        let w = std::f64::consts::TAU * 0.85e6;
        let pair = truncated_cosine_pair(w, 0.0625);
        let m = pair.mass;
        let wf = extract_controls(&pair, 200).unwrap();
        for (i, k) in wf.stiffness.iter().enumerate() {
            assert!((k / (m * w * w) - 1.0).abs() < 1e-9, "sample {i}");
            assert_eq!(wf.force_offset[i], 0.0);
            assert_eq!(wf.center[i], Some(0.0));
        }
    }

    #[test]
    fn identity_protocol_boundaries() {
        let m = IonSpecies::n2_plus().mass();
        let w = std::f64::consts::TAU * 0.85e6;
        let t = AxialTargets::for_mean_velocity(1.0, 0.0, w, w, 0.0, 0.0, 0.94e-6, m);
        let bcs = build_boundary_conditions(&t).unwrap();
        let pair = solve_constrained_polynomials(&bcs, ShapeParams::default_for(&bcs)).unwrap();
        let wf = extract_controls(&pair, 512).unwrap();
        let k0 = m * w * w;
        assert!((wf.stiffness[0] / k0 - 1.0).abs() < 1e-9);
        assert!((wf.stiffness[512] / k0 - 1.0).abs() < 1e-9);
        assert_eq!(wf.center[0], Some(0.0));
        assert_eq!(wf.center[512], Some(0.0));
    }

    #[test]
    fn extraction_design_reaches_final_center_and_velocity() {
        let t = scenarios::extraction_targets();
        let bcs = build_boundary_conditions(&t).unwrap();
        let pair = solve_constrained_polynomials(&bcs, ShapeParams::default_for(&bcs)).unwrap();
        let model = ControlModel::new(&pair).unwrap();
        let tf = pair.duration();
        let z_end = model.center(tf).unwrap();
        assert!((z_end / 250e-6 - 1.0).abs() < 1e-9);
        // finite-difference oracle on the sampled center near t_f
        let h = tf * 1e-6;
        let fd = (model.center(tf).unwrap() - model.center(tf - h).unwrap()) / h;
        assert!((fd / 1e4 - 1.0).abs() < 1e-4, "fd velocity {fd}");
        assert!((model.center_rate(tf).unwrap() / 1e4 - 1.0).abs() < 1e-9);
        assert_eq!(model.center(0.0), Some(0.0));
    }

    #[test]
    fn bridged_center_is_continuous_through_zero_stiffness() {
        let t = scenarios::extraction_targets();
        let bcs = build_boundary_conditions(&t).unwrap();
        let pair = solve_constrained_polynomials(&bcs, ShapeParams::default_for(&bcs)).unwrap();
        let model = ControlModel::new(&pair).unwrap();
        let windows = model.bridge_windows();
        assert_eq!(windows.len(), pair.matched_roots.len());
        for (a, b) in windows {
            assert!(b > a);
            let w = b - a;
            let outside = [a - 1e-3 * w, b + 1e-3 * w];
            for (&edge, &probe) in [a, b].iter().zip(&outside) {
                let inside = model.bridged_center(edge);
                let out = model.bridged_center(probe);
                // the direct ratio loses digits to cancellation near the floor
                let slope = model.center_rate(probe).unwrap().abs() * (edge - probe).abs();
                assert!((inside - out).abs() <= slope + 1e-5 * inside.abs().max(1e-6));
            }
            assert!(model.bridged_center(0.5 * (a + b)).is_finite());
            assert!(model.center(0.5 * (a + b)).is_none());
        }
    }

    #[test]
    fn nonpositive_u_is_rejected() {
        let w = std::f64::consts::TAU * 0.85e6;
        // a cosine run past a quarter period goes negative
        let m = crate::physics::IonSpecies::n2_plus().mass();
        let tf = 0.3 * std::f64::consts::TAU / w;
        assert!(matches!(
            static_trap_pair(w, tf, m),
            Err(DesignError::USignChange { .. })
        ));
        let pair = constant_pair(-1.0, tf);
        assert!(matches!(
            extract_controls(&pair, 100),
            Err(DesignError::USignChange { .. })
        ));
    }
}
