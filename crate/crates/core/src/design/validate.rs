use super::controls::ControlModel;
use super::solve::{interior_roots, u_minimum, DETECTION_GRID};
use super::{build_boundary_conditions, AuxiliaryPair, AxialTargets, BoundaryConditions, CONDITION_NAMES};

pub const BC_TOLERANCE: f64 = 1e-9;
pub const FDOT_TOLERANCE: f64 = 1e-9;
pub const K_BOUNDARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// `|achieved - required| / (1 + |required|)` per condition, in
    /// normalized time with `f` measured in units of `f_scale`.
    pub bc_residuals: [f64; 14],
    pub u_min: f64,
    /// `(t*, |f'(t*)| / max|f'|)` at each interior root of `u''`.
    pub fdot_at_k_zeros: Vec<(f64, f64)>,
    /// Relative errors of `k(0)/m` against `w0²` and `k(t_f)/m` against `wf²`.
    pub k_boundaries: [f64; 2],
    /// Intervals in which the stiffness is negative.
    pub expulsive_intervals: Vec<(f64, f64)>,
    pub bc_pass: bool,
    pub u_pass: bool,
    pub fdot_pass: bool,
    pub k_pass: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.bc_pass && self.u_pass && self.fdot_pass && self.k_pass
    }

    pub fn max_bc_residual(&self) -> f64 {
        self.bc_residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Name and residual of the worst boundary condition.
    pub fn worst_condition(&self) -> (&'static str, f64) {
        let (i, r) = self
            .bc_residuals
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc });
        (CONDITION_NAMES[i], r)
    }

    pub fn max_fdot_at_k_zeros(&self) -> f64 {
        self.fdot_at_k_zeros.iter().map(|x| x.1).fold(0.0, f64::max)
    }

    /// `key = value` lines.
    pub fn to_lines(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (name, r) in CONDITION_NAMES.iter().zip(&self.bc_residuals) {
            out.push((format!("residual.{name}"), format!("{r:.16e}")));
        }
        out.push(("residual.max".into(), format!("{:.16e}", self.max_bc_residual())));
        out.push(("u_min".into(), format!("{:.16e}", self.u_min)));
        out.push((
            "fdot_at_k_zeros.max".into(),
            format!("{:.16e}", self.max_fdot_at_k_zeros()),
        ));
        let roots: Vec<String> = self.fdot_at_k_zeros.iter().map(|(t, _)| format!("{t:.16e}")).collect();
        out.push(("k_zeros".into(), roots.join(",")));
        out.push(("k_boundary.start".into(), format!("{:.16e}", self.k_boundaries[0])));
        out.push(("k_boundary.end".into(), format!("{:.16e}", self.k_boundaries[1])));
        let exp: Vec<String> = self
            .expulsive_intervals
            .iter()
            .map(|(a, b)| format!("{a:.16e}:{b:.16e}"))
            .collect();
        out.push(("expulsive_intervals".into(), exp.join(",")));
        for (k, v) in [
            ("pass.bc", self.bc_pass),
            ("pass.u_positive", self.u_pass),
            ("pass.fdot_at_k_zeros", self.fdot_pass),
            ("pass.k_boundaries", self.k_pass),
            ("pass", self.passed()),
        ] {
            out.push((k.into(), v.to_string()));
        }
        out
    }
}

fn achieved(pair: &AuxiliaryPair) -> [f64; 14] {
    let tf = pair.duration();
    let mut out = [0.0; 14];
    for r in 0..4u8 {
        let scale = tf.powi(r as i32);
        out[r as usize] = pair.u_at(0.0, r) * scale;
        out[4 + r as usize] = pair.u_at(tf, r) * scale;
    }
    for r in 0..3u8 {
        let scale = tf.powi(r as i32);
        out[8 + r as usize] = pair.f_at(0.0, r) * scale;
        out[11 + r as usize] = pair.f_at(tf, r) * scale;
    }
    out
}

/// Residuals against `required`, measured in normalized time.
pub fn boundary_residuals(pair: &AuxiliaryPair, required: &BoundaryConditions) -> [f64; 14] {
    let req = required.normalized();
    let got = achieved(pair);
    let fs = required.f_scale();
    let mut out = [0.0; 14];
    for i in 0..14 {
        let (a, r) = if i >= 8 {
            (got[i] / fs, req[i] / fs)
        } else {
            (got[i], req[i])
        };
        out[i] = (a - r).abs() / (1.0 + r.abs());
    }
    out
}

/// Check a design against its targets on the detection grid.
pub fn validate_design(pair: &AuxiliaryPair, targets: &AxialTargets) -> ValidationReport {
    let required = build_boundary_conditions(targets).unwrap_or(pair.bcs);
    validate_against(pair, &required)
}

/// As [`validate_design`], against explicit boundary values.
pub fn validate_against(pair: &AuxiliaryPair, required: &BoundaryConditions) -> ValidationReport {
    let tf = pair.duration();
    let n = DETECTION_GRID;
    let bc_residuals = boundary_residuals(pair, required);
    let u_min = u_minimum(&pair.u);
    let max_fdot = (0..=n)
        .map(|i| pair.f_at(tf * i as f64 / n as f64, 1).abs())
        .fold(0.0, f64::max);
    let fdot_at_k_zeros: Vec<(f64, f64)> = interior_roots(&pair.u, 2)
        .into_iter()
        .map(|t| {
            let v = pair.f_at(t, 1).abs();
            (t, if max_fdot > 0.0 { v / max_fdot } else { v })
        })
        .collect();
    let m = pair.mass;
    let k_at = |t: f64| -m * pair.u_at(t, 2) / pair.u_at(t, 0);
    let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { (a / b - 1.0).abs() };
    let k_boundaries = [
        rel(k_at(0.0) / m, required.omega_start_sq()),
        rel(k_at(tf) / m, required.omega_end_sq()),
    ];
    let expulsive_intervals = if u_min > 0.0 {
        super::extract_controls(pair, n)
            .map(|w| w.expulsive_intervals())
            .unwrap_or_default()
    } else {
        Vec::new()
    };
    // the control model must also build; it fails only on root-scan errors
    let model_ok = u_min <= 0.0 || ControlModel::new(pair).is_ok();
    ValidationReport {
        bc_pass: bc_residuals.iter().all(|&r| r <= BC_TOLERANCE),
        u_pass: u_min > 0.0 && model_ok,
        fdot_pass: fdot_at_k_zeros.iter().all(|&(_, r)| r <= FDOT_TOLERANCE),
        k_pass: k_boundaries.iter().all(|&r| r <= K_BOUNDARY_TOLERANCE),
        bc_residuals,
        u_min,
        fdot_at_k_zeros,
        k_boundaries,
        expulsive_intervals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{solve_constrained_polynomials, ShapeParams};
    use crate::poly::Polynomial;
    use crate::scenarios;

    fn extraction() -> (AuxiliaryPair, AxialTargets) {
        let t = scenarios::extraction_targets();
        let bcs = build_boundary_conditions(&t).unwrap();
        (
            solve_constrained_polynomials(&bcs, ShapeParams::default_for(&bcs)).unwrap(),
            t,
        )
    }

    #[test]
    fn solved_design_passes() {
        let (pair, t) = extraction();
        let r = validate_design(&pair, &t);
        assert!(r.passed(), "{r:?}");
        assert!(r.max_bc_residual() <= 1e-9);
    }

    #[test]
    fn perturbed_coefficient_fails_residuals() {
        let (mut pair, t) = extraction();
        let mut c = pair.u.coefficients().to_vec();
        c[3] += 1e-3;
        pair.u = Polynomial::new(c, pair.duration()).unwrap();
        let r = validate_design(&pair, &t);
        assert!(!r.bc_pass);
        assert!(!r.passed());
    }

    #[test]
    fn missing_f_fails_for_moving_center() {
        let (mut pair, t) = extraction();
        pair.f = None;
        let r = validate_design(&pair, &t);
        assert!(!r.bc_pass);
        assert!(r.bc_residuals[12] > 1e-3, "f'(tf) residual {}", r.bc_residuals[12]);
    }
}
