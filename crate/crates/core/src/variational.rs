//! Energy functional for the double-curl boundary value problem and its
//! scalar conductivity sibling, with the exact discrete Gateaux gradient and
//! a conjugate-gradient minimizer over interior degrees of freedom.
//!
//! The admissible set fixes values on the boundary ring (mask voxels with an
//! exposed face); everything else is free. The gradient uses the exact matrix
//! transpose of the discrete curl/gradient stencils, so central finite
//! differences of the energy match the assembled gradient to rounding, and
//! the minimizer satisfies the discrete weak form by construction.

use serde::Serialize;

use crate::conductivity::Conductivity;
use crate::diffops;
use crate::error::{Error, Result};
use crate::grid::{Field, Support};
use crate::solvers::DEFAULT_GATE_TOL;
use crate::verify;

/// Stop when the gradient norm falls below this ratio of its initial value.
pub const GRAD_RATIO_TOL: f64 = 1e-8;
/// Iteration cap: this factor times the number of free scalar unknowns.
pub const MAX_ITER_FACTOR: usize = 10;
/// Iterations without a meaningful gradient-norm improvement before the
/// minimizer declares a stall. The curl energy is only semidefinite (discrete
/// gradients of interior scalars are flat directions); a source with a
/// component along that kernel leaves a residual floor CG cannot pass, and
/// iterating further just drifts the iterate along the flat directions.
pub const STALL_WINDOW: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyMode {
    /// eps[W] = sum f^-2 |curl W|^2 h^3 (- 2 sum g . W h^3 with a source).
    DoubleCurl,
    /// eps[W0] = sum f^2 |grad W0|^2 h^3 + 2 sum g0 W0 h^3.
    ConductivityScalar,
}

pub struct EnergyProblem {
    cond: Conductivity,
    mode: EnergyMode,
    /// Field whose ring values define the admissible set (off-ring entries
    /// are ignored).
    boundary: Field,
    source: Option<Field>,
    /// f^-2 for double-curl, f^2 for the scalar mode.
    weight: Field,
    ring: Vec<usize>,
    free: Vec<usize>,
}

impl EnergyProblem {
    pub fn double_curl(
        cond: Conductivity,
        boundary: Field,
        source: Option<Field>,
    ) -> Result<EnergyProblem> {
        if boundary.comps() != 3 {
            return Err(Error::ComponentMismatch { expected: 3, got: boundary.comps() });
        }
        if let Some(g) = &source {
            if g.comps() != 3 {
                return Err(Error::ComponentMismatch { expected: 3, got: g.comps() });
            }
            let interior = g.domain().interior_cells(2);
            let rel = verify::relative(
                verify::l2_region(&diffops::divergence(g), &interior),
                verify::jacobian_scale(g, &interior),
            );
            if rel > DEFAULT_GATE_TOL {
                return Err(Error::Precondition {
                    check: "solenoidal source (div g = 0)".into(),
                    relative: rel,
                    tolerance: DEFAULT_GATE_TOL,
                });
            }
        }
        Self::build(cond, EnergyMode::DoubleCurl, boundary, source)
    }

    pub fn conductivity_scalar(
        cond: Conductivity,
        boundary: Field,
        source: Option<Field>,
    ) -> Result<EnergyProblem> {
        if boundary.comps() != 1 {
            return Err(Error::ComponentMismatch { expected: 1, got: boundary.comps() });
        }
        if let Some(g) = &source {
            if g.comps() != 1 {
                return Err(Error::ComponentMismatch { expected: 1, got: g.comps() });
            }
        }
        Self::build(cond, EnergyMode::ConductivityScalar, boundary, source)
    }

    fn build(
        cond: Conductivity,
        mode: EnergyMode,
        boundary: Field,
        source: Option<Field>,
    ) -> Result<EnergyProblem> {
        let dom = boundary.domain().clone();
        let weight_src = cond.f_sq().clone();
        let mut weight = Field::zeros(&dom, 1, weight_src.support());
        for &idx in dom.cells_for(weight_src.support()) {
            let f2 = weight_src.scalar_at(idx);
            let v = match mode {
                EnergyMode::DoubleCurl => 1.0 / f2,
                EnergyMode::ConductivityScalar => f2,
            };
            weight.set(idx, 0, v);
        }
        let ring: Vec<usize> = dom.boundary_voxels().to_vec();
        let ring_set: std::collections::HashSet<usize> = ring.iter().copied().collect();
        let free: Vec<usize> = dom
            .mask()
            .cells()
            .iter()
            .copied()
            .filter(|idx| !ring_set.contains(idx))
            .collect();
        Ok(EnergyProblem { cond, mode, boundary, source, weight, ring, free })
    }

    pub fn mode(&self) -> EnergyMode {
        self.mode
    }

    pub fn comps(&self) -> usize {
        match self.mode {
            EnergyMode::DoubleCurl => 3,
            EnergyMode::ConductivityScalar => 1,
        }
    }

    pub fn conductivity(&self) -> &Conductivity {
        &self.cond
    }

    pub fn free_cells(&self) -> &[usize] {
        &self.free
    }

    /// Admissibility: W carries the problem's ring values (within rounding of
    /// their magnitude).
    pub fn check_admissible(&self, w: &Field) -> Result<()> {
        if w.comps() != self.comps() {
            return Err(Error::ComponentMismatch { expected: self.comps(), got: w.comps() });
        }
        let comps = self.comps();
        let mut dev = 0.0f64;
        let mut mag = 0.0f64;
        for &idx in &self.ring {
            for c in 0..comps {
                let want = self.boundary.get(idx, c);
                dev = dev.max((w.get(idx, c) - want).abs());
                mag = mag.max(want.abs());
            }
        }
        if dev > 1e-8 * (1.0 + mag) {
            return Err(Error::BoundaryMismatch(dev));
        }
        Ok(())
    }

    /// Componentwise harmonic extension of the ring values: the default
    /// starting point for [`minimize`].
    pub fn extend_boundary(&self) -> Result<Field> {
        let dom = self.boundary.domain();
        let unit = Conductivity::uniform(dom);
        let rhs = Field::zeros(dom, 1, Support::Mask);
        let comps = self.comps();
        let mut out = Field::zeros(dom, comps, Support::Mask);
        for c in 0..comps {
            let mut ring_vals = Field::zeros(dom, 1, Support::Mask);
            for &idx in &self.ring {
                ring_vals.set(idx, 0, self.boundary.get(idx, c));
            }
            let sol = crate::conductivity::solve_conductivity(&unit, &rhs, &ring_vals)?;
            for &idx in dom.mask().cells() {
                out.set(idx, c, sol.u.scalar_at(idx));
            }
        }
        Ok(out)
    }
}

fn dot(a: &Field, b: &Field) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn energy_raw(p: &EnergyProblem, w: &Field) -> f64 {
    let dom = w.domain();
    let h3 = dom.grid().spacing().powi(3);
    let mut acc = 0.0;
    match p.mode {
        EnergyMode::DoubleCurl => {
            let c = diffops::curl(w);
            for &idx in dom.mask().cells() {
                acc += p.weight.scalar_at(idx) * c.vec3_at(idx).norm_sq();
            }
            acc *= h3;
            if let Some(g) = &p.source {
                let mut s = 0.0;
                for &idx in dom.mask().cells() {
                    s += g.vec3_at(idx).dot(w.vec3_at(idx));
                }
                acc -= 2.0 * h3 * s;
            }
        }
        EnergyMode::ConductivityScalar => {
            let grad = diffops::gradient(w);
            for &idx in dom.mask().cells() {
                acc += p.weight.scalar_at(idx) * grad.vec3_at(idx).norm_sq();
            }
            acc *= h3;
            if let Some(g0) = &p.source {
                let mut s = 0.0;
                for &idx in dom.mask().cells() {
                    s += g0.scalar_at(idx) * w.scalar_at(idx);
                }
                acc += 2.0 * h3 * s;
            }
        }
    }
    acc
}

/// Assembled gradient of the energy, zeroed outside the free cells. With
/// `with_source = false` this is the (linear) Hessian application used by the
/// CG minimizer.
fn gradient_raw(p: &EnergyProblem, w: &Field, with_source: bool) -> Field {
    let dom = w.domain();
    let h3 = dom.grid().spacing().powi(3);
    let comps = p.comps();
    let full = match p.mode {
        EnergyMode::DoubleCurl => {
            let weighted = diffops::curl(w)
                .mul_scalar_field(&p.weight)
                .expect("weight is scalar on the same grid");
            diffops::curl_transpose(&weighted)
        }
        EnergyMode::ConductivityScalar => {
            let weighted = diffops::gradient(w)
                .mul_scalar_field(&p.weight)
                .expect("weight is scalar on the same grid");
            diffops::gradient_transpose(&weighted)
        }
    };
    let mut out = Field::zeros(dom, comps, Support::Mask);
    for &idx in &p.free {
        for c in 0..comps {
            let mut v = 2.0 * h3 * full.get(idx, c);
            if with_source {
                if let Some(g) = &p.source {
                    let sign = match p.mode {
                        EnergyMode::DoubleCurl => -2.0,
                        EnergyMode::ConductivityScalar => 2.0,
                    };
                    v += sign * h3 * g.get(idx, c);
                }
            }
            out.set(idx, c, v);
        }
    }
    out
}

/// The energy of an admissible field.
pub fn energy(p: &EnergyProblem, w: &Field) -> Result<f64> {
    p.check_admissible(w)?;
    Ok(energy_raw(p, w))
}

/// The discrete Gateaux gradient of the energy at an admissible field,
/// supported on the free (non-ring) mask cells.
pub fn energy_gradient(p: &EnergyProblem, w: &Field) -> Result<Field> {
    p.check_admissible(w)?;
    Ok(gradient_raw(p, w, true))
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizeReport {
    /// Energy at the initial iterate and after each CG step.
    pub energy_trajectory: Vec<f64>,
    pub initial_gradient_norm: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Conjugate-gradient minimization of the quadratic energy over the free
/// cells, starting from an admissible `initial`. On hitting the iteration cap
/// the best (final) iterate is returned with `converged = false`.
pub fn minimize(p: &EnergyProblem, initial: &Field) -> Result<(Field, MinimizeReport)> {
    p.check_admissible(initial)?;
    let comps = p.comps();
    let n = p.free.len() * comps;
    let mut report = MinimizeReport {
        energy_trajectory: vec![energy_raw(p, initial)],
        initial_gradient_norm: 0.0,
        gradient_norm: 0.0,
        iterations: 0,
        converged: true,
        warnings: Vec::new(),
    };
    let mut current = initial.clone();
    // r = -grad eps(current); the CG residual tracks the true gradient for a
    // quadratic functional.
    let mut r = gradient_raw(p, initial, true).scaled(-1.0);
    let g0 = dot(&r, &r).sqrt();
    report.initial_gradient_norm = g0;
    report.gradient_norm = g0;
    if g0 == 0.0 || n == 0 {
        return Ok((current, report));
    }
    let mut dir = r.clone();
    let mut rr = g0 * g0;
    let max_iter = MAX_ITER_FACTOR * n;
    // Best iterate by gradient norm, for the stall and breakdown exits.
    let mut best = current.clone();
    let mut best_g = g0;
    let mut best_it = 0usize;
    let mut best_len = 1usize;
    for it in 1..=max_iter {
        let adir = gradient_raw(p, &dir, false);
        let dad = dot(&dir, &adir);
        if dad <= 0.0 {
            report
                .warnings
                .push(format!("nonpositive curvature {dad:.3e} along search direction; stopping"));
            report.converged = false;
            break;
        }
        let alpha = rr / dad;
        current = current.axpy(alpha, &dir)?;
        r = r.axpy(-alpha, &adir)?;
        let rr_new = dot(&r, &r);
        report.iterations = it;
        report.gradient_norm = rr_new.sqrt();
        let e_prev = *report.energy_trajectory.last().expect("trajectory nonempty");
        let e_new = energy_raw(p, &current);
        if !e_new.is_finite() || e_new > e_prev + 1e-9 * (e_prev.abs() + 1.0) {
            // Exact line minimization cannot raise a quadratic energy; an
            // increase means floating-point breakdown (typically far along a
            // flat direction). Fall back to the best recorded iterate.
            report.energy_trajectory.truncate(best_len);
            report.iterations = best_it;
            report.gradient_norm = best_g;
            report.converged = false;
            report.warnings.push(format!(
                "energy rose at iteration {it} ({e_prev:.6e} -> {e_new:.6e}); \
                 returning the best iterate"
            ));
            return Ok((best, report));
        }
        report.energy_trajectory.push(e_new);
        if report.gradient_norm <= GRAD_RATIO_TOL * g0 {
            break;
        }
        if report.gradient_norm < 0.999 * best_g {
            best_g = report.gradient_norm;
            best_it = it;
            best_len = report.energy_trajectory.len();
            best.clone_from(&current);
        } else if it - best_it >= STALL_WINDOW {
            report.energy_trajectory.truncate(best_len);
            report.iterations = best_it;
            report.gradient_norm = best_g;
            report.converged = false;
            report.warnings.push(format!(
                "gradient norm stalled at ratio {:.3e} for {STALL_WINDOW} iterations \
                 (source has a component the curl operator cannot reach); \
                 returning the best iterate",
                best_g / g0
            ));
            return Ok((best, report));
        }
        if it == max_iter {
            report.converged = false;
            report.warnings.push(format!(
                "iteration cap {max_iter} reached with gradient ratio {:.3e}; returning best iterate",
                report.gradient_norm / g0
            ));
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        dir = r.axpy(beta, &dir)?;
    }
    Ok((current, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StarDomain;
    use crate::vec3::{vec3, Vec3};

    fn unit_problem(dom: &std::sync::Arc<StarDomain>, boundary: Field) -> EnergyProblem {
        let cond = Conductivity::uniform(dom);
        EnergyProblem::double_curl(cond, boundary, None).unwrap()
    }

    #[test]
    fn gradient_field_has_zero_energy() {
        let dom = StarDomain::ball(12, 1.0, Vec3::ZERO).unwrap();
        let w = Field::from_vector_fn(&dom, |x| vec3(x.y, x.x, 0.0)); // grad(x1 x2)
        let p = unit_problem(&dom, w.clone());
        let e = energy(&p, &w).unwrap();
        assert!(e.abs() < 1e-20, "energy {e}");
    }

    #[test]
    fn constant_curl_energy_is_volume() {
        let dom = StarDomain::ball(24, 1.0, Vec3::ZERO).unwrap();
        let w = Field::from_vector_fn(&dom, |x| vec3(0.0, x.z / 2.0, -x.y / 2.0));
        let p = unit_problem(&dom, w.clone());
        let e = energy(&p, &w).unwrap();
        let vol = 4.0 * std::f64::consts::PI / 3.0;
        assert!((e - vol).abs() / vol < 0.03, "energy {e} vs {vol}");
    }

    #[test]
    fn boundary_mismatch_rejected() {
        let dom = StarDomain::ball(10, 1.0, Vec3::ZERO).unwrap();
        let w = Field::from_vector_fn(&dom, |_| vec3(1.0, 0.0, 0.0));
        let p = unit_problem(&dom, Field::zeros(&dom, 3, Support::Mask));
        assert!(matches!(energy(&p, &w), Err(Error::BoundaryMismatch(_))));
    }

    #[test]
    fn zero_boundary_minimizes_to_zero_energy() {
        let dom = StarDomain::ball(8, 1.0, Vec3::ZERO).unwrap();
        let boundary = Field::zeros(&dom, 3, Support::Mask);
        let p = unit_problem(&dom, boundary);
        let initial = p.extend_boundary().unwrap();
        let (w, rep) = minimize(&p, &initial).unwrap();
        let e = energy(&p, &w).unwrap();
        assert!(e <= 1e-10, "final energy {e}");
        assert!(rep.converged);
    }
}
