use std::cmp::Ordering;

use super::energy::peak_potential_energy;
use super::solve::{interior_roots, solve_f, solve_u, u_minimum, MAX_MATCHED_ROOTS};
use super::{AuxiliaryPair, ControlModel, DesignError, FreeCoefficients, ShapeParams};
use crate::physics::{ThermalSpec, HBAR, K_B};

/// Extra requirement on a candidate design, expressed as a non-negative
/// violation (zero when satisfied).
pub trait DesignConstraint: Sync {
    fn name(&self) -> &str;

    fn violation(&self, model: &ControlModel) -> f64;
}

#[derive(Clone, Copy)]
pub struct OptimizeOptions<'a> {
    /// Grid used for the peak-energy objective.
    pub grid_size: usize,
    /// Initial simplex step as a fraction of each coefficient scale.
    pub initial_step: f64,
    /// Stop when the relative spread of simplex values drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Fresh simplices started from the best point after convergence.
    pub restarts: usize,
    pub constraint: Option<&'a dyn DesignConstraint>,
}

impl Default for OptimizeOptions<'_> {
    fn default() -> Self {
        Self {
            grid_size: 2048,
            initial_step: 0.1,
            tolerance: 1e-6,
            max_iterations: 500,
            restarts: 2,
            constraint: None,
        }
    }
}

impl std::fmt::Debug for OptimizeOptions<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OptimizeOptions")
            .field("grid_size", &self.grid_size)
            .field("initial_step", &self.initial_step)
            .field("tolerance", &self.tolerance)
            .field("max_iterations", &self.max_iterations)
            .field("restarts", &self.restarts)
            .field("constraint", &self.constraint.map(|c| c.name().to_string()))
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub pair: AuxiliaryPair,
    /// Peak potential energy of the returned pair (J).
    pub peak_energy: f64,
    /// Peak potential energy of the input pair, if it was feasible.
    pub input_peak_energy: Option<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    /// Set when no feasible candidate was found and the input came back.
    pub warning: Option<String>,
}

/// Multiplier on the thermal energy scale for constraint penalties.
const PENALTY_FACTOR: f64 = 1e6;

enum Candidate {
    Feasible { pair: Box<AuxiliaryPair>, energy: f64 },
    Infeasible { violation: f64 },
}

struct Problem<'a> {
    base: &'a AuxiliaryPair,
    thermal: &'a ThermalSpec,
    options: OptimizeOptions<'a>,
    allocated_roots: usize,
    penalty: f64,
}

impl Problem<'_> {
    fn candidate(&self, x: [f64; 4]) -> Candidate {
        let free = FreeCoefficients::from_array(x);
        let bcs = &self.base.bcs;
        let u_mid = self.base.shape.u_mid;
        let infeasible = |violation: f64| Candidate::Infeasible {
            violation: violation.max(0.0),
        };
        let u = match solve_u(bcs, u_mid, free.a9, free.a10) {
            Ok(u) => u,
            Err(_) => return infeasible(1e3),
        };
        let u_min = u_minimum(&u);
        if !(u_min > 0.0) {
            let scale = bcs.u_start[0].abs().max(bcs.u_end[0].abs());
            return infeasible(1.0 + (-u_min / scale).min(1e3));
        }
        let roots = interior_roots(&u, 2);
        if roots.len() != self.allocated_roots || roots.len() > MAX_MATCHED_ROOTS {
            return infeasible(1.0 + roots.len().abs_diff(self.allocated_roots) as f64);
        }
        let f = match solve_f(bcs, &roots, free.b10, free.b11) {
            Ok(f) => f,
            Err(_) => return infeasible(1e3),
        };
        let pair = AuxiliaryPair {
            u,
            f: Some(f),
            mass: bcs.mass,
            bcs: *bcs,
            shape: ShapeParams { u_mid, free },
            matched_roots: roots,
        };
        if let Some(c) = self.options.constraint {
            let v = match ControlModel::new(&pair) {
                Ok(model) => c.violation(&model),
                Err(_) => 1e3,
            };
            if !(v <= 0.0) {
                return infeasible(if v.is_nan() { 1e3 } else { v });
            }
        }
        match peak_potential_energy(&pair, self.thermal, self.options.grid_size) {
            Ok(e) if e.is_finite() => Candidate::Feasible {
                pair: Box::new(pair),
                energy: e,
            },
            _ => infeasible(1e3),
        }
    }

    fn objective(&self, c: &Candidate) -> f64 {
        match c {
            Candidate::Feasible { energy, .. } => *energy,
            Candidate::Infeasible { violation } => self.penalty * (1.0 + violation),
        }
    }
}

fn lexicographic(a: &[f64; 4], b: &[f64; 4]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

struct Best {
    x: [f64; 4],
    pair: AuxiliaryPair,
    energy: f64,
}

impl Best {
    fn offer(slot: &mut Option<Best>, x: [f64; 4], pair: AuxiliaryPair, energy: f64) {
        let better = match slot {
            None => true,
            Some(b) => match energy.total_cmp(&b.energy) {
                Ordering::Less => true,
                Ordering::Equal => lexicographic(&x, &b.x).is_lt(),
                Ordering::Greater => false,
            },
        };
        if better {
            *slot = Some(Best { x, pair, energy });
        }
    }
}

/// Step three of the construction: derivative-free simplex search over
/// `(a9, a10, b10, b11)`, re-solving steps one and two at every candidate.
pub fn optimize_free_coefficients(
    pair: &AuxiliaryPair,
    thermal: &ThermalSpec,
    options: OptimizeOptions<'_>,
) -> Result<OptimizeOutcome, DesignError> {
    thermal.validate()?;
    let energy_scale = K_B * thermal.temperature + HBAR * thermal.omega_ref;
    let problem = Problem {
        base: pair,
        thermal,
        options,
        allocated_roots: pair.matched_roots.len(),
        penalty: PENALTY_FACTOR * energy_scale,
    };
    let scales = coefficient_scales(pair)?;
    let x0 = pair.free_coefficients().to_array();
    let mut best: Option<Best> = None;
    let mut evaluations = 0usize;
    let mut eval = |x: [f64; 4], best: &mut Option<Best>| -> f64 {
        evaluations += 1;
        let c = problem.candidate(x);
        let value = problem.objective(&c);
        if let Candidate::Feasible { pair, energy } = c {
            Best::offer(best, x, *pair, energy);
        }
        value
    };

    let input_value = eval(x0, &mut best);
    let input_peak = best.as_ref().map(|b| b.energy);
    let mut iterations = 0;
    let mut start = x0;
    let mut start_value = input_value;
    for _ in 0..=options.restarts {
        let (x, v, it) = nelder_mead(&mut |x| eval(x, &mut best), start, start_value, &scales, &options);
        iterations += it;
        let improved = v < start_value;
        start = x;
        start_value = v;
        if !improved {
            break;
        }
    }

    Ok(match best {
        Some(b) => {
            if input_peak.is_some_and(|e| e <= b.energy) {
                // input is at least as good
                OptimizeOutcome {
                    pair: pair.clone(),
                    peak_energy: input_peak.unwrap_or(b.energy),
                    input_peak_energy: input_peak,
                    iterations,
                    evaluations,
                    warning: None,
                }
            } else {
                OptimizeOutcome {
                    pair: b.pair,
                    peak_energy: b.energy,
                    input_peak_energy: input_peak,
                    iterations,
                    evaluations,
                    warning: None,
                }
            }
        }
        None => {
            let msg = format!(
                "no feasible candidate in {evaluations} evaluations{}; returning input",
                options
                    .constraint
                    .map(|c| format!(" under constraint '{}'", c.name()))
                    .unwrap_or_default()
            );
            log::warn!("{msg}");
            OptimizeOutcome {
                pair: pair.clone(),
                peak_energy: peak_potential_energy(pair, thermal, options.grid_size).unwrap_or(f64::NAN),
                input_peak_energy: None,
                iterations,
                evaluations,
                warning: Some(msg),
            }
        }
    })
}

/// Norms of the step-one and step-two solutions, used as coordinate scales.
fn coefficient_scales(pair: &AuxiliaryPair) -> Result<[f64; 4], DesignError> {
    let bcs = &pair.bcs;
    let norm = |c: &[f64]| c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let u = solve_u(bcs, pair.shape.u_mid, 0.0, 0.0)
        .map_or_else(|_| norm(pair.u.coefficients()), |u| norm(u.coefficients()));
    let f_norm = pair
        .f
        .as_ref()
        .map_or(0.0, |f| norm(&f.coefficients()[..10.min(f.coefficients().len())]));
    let f = if f_norm > 0.0 { f_norm } else { bcs.f_scale() };
    Ok([u.max(1.0), u.max(1.0), f, f])
}

/// Nelder-Mead on `x = x0 + scale * y`. Returns the best vertex, its value
/// and the iteration count.
fn nelder_mead(
    f: &mut dyn FnMut([f64; 4]) -> f64,
    x0: [f64; 4],
    f0: f64,
    scales: &[f64; 4],
    options: &OptimizeOptions<'_>,
) -> ([f64; 4], f64, usize) {
    const N: usize = 4;
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, f0));
    for i in 0..N {
        let mut x = x0;
        x[i] += options.initial_step * scales[i];
        simplex.push((x, f(x)));
    }
    let order = |s: &mut Vec<([f64; N], f64)>| {
        s.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lexicographic(&a.0, &b.0)));
    };
    let lin = |a: &[f64; N], b: &[f64; N], t: f64| -> [f64; N] {
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = a[i] + t * (b[i] - a[i]);
        }
        out
    };
    let mut it = 0;
    while it < options.max_iterations {
        order(&mut simplex);
        let lo = simplex[0].1;
        let hi = simplex[N].1;
        if (hi - lo).abs() <= options.tolerance * lo.abs().max(hi.abs()) {
            break;
        }
        it += 1;
        let mut c = [0.0; N];
        for (x, _) in &simplex[..N] {
            for i in 0..N {
                c[i] += x[i] / N as f64;
            }
        }
        let worst = simplex[N].0;
        let xr = lin(&c, &worst, -alpha);
        let fr = f(xr);
        if fr < simplex[0].1 {
            let xe = lin(&c, &worst, -gamma);
            let fe = f(xe);
            simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (xr, fr);
        } else {
            let (xc, fc) = if fr < hi {
                let x = lin(&c, &xr, rho);
                (x, f(x))
            } else {
                let x = lin(&c, &worst, rho);
                (x, f(x))
            };
            if fc < fr.min(hi) {
                simplex[N] = (xc, fc);
            } else {
                let b = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let x = lin(&b, &v.0, sigma);
                    *v = (x, f(x));
                }
            }
        }
    }
    order(&mut simplex);
    (simplex[0].0, simplex[0].1, it)
}
