//! Ray integrals anchored at the star center: radial moments, the straight-ray
//! antigradient, and the completion of a harmonic scalar to a monogenic
//! quaternion field.
//!
//! All three evaluate integrands along the segment from the star center a to
//! the voxel center x by trilinear interpolation of grid data, which the
//! star-shape property keeps inside the populated region. Gradients wanted
//! along rays are formed on the grid first and interpolated afterwards;
//! interpolating the scalar and differencing along the ray loses an order.

use rayon::prelude::*;

use crate::diffops;
use crate::error::{Error, Result};
use crate::gauss::RayQuadrature;
use crate::grid::{Field, Support};
use crate::vec3::{vec3, Vec3};
use crate::verify;

/// Default relative tolerance for the irrotational / harmonic gates.
pub const GATE_TOL: f64 = 1e-2;

fn eval_parallel(
    src: &Field,
    out_comps: usize,
    support: Support,
    f: impl Fn(usize, Vec3) -> [f64; 4] + Sync,
) -> Field {
    let dom = src.domain();
    let cells = dom.cells_for(support);
    let rows: Vec<[f64; 4]> = cells
        .par_iter()
        .map(|&idx| f(idx, dom.grid().center_of(idx)))
        .collect();
    let mut out = Field::zeros(dom, out_comps, support);
    for (&idx, row) in cells.iter().zip(rows) {
        for c in 0..out_comps {
            out.set(idx, c, row[c]);
        }
    }
    out
}

/// Radial moment I^alpha[w](x) = int_0^1 t^alpha w(a + t (x - a)) dt,
/// componentwise, for alpha > -1.
pub fn radial_moment(alpha: f64, w: &Field, rule: &RayQuadrature) -> Result<Field> {
    if !(alpha > -1.0) {
        return Err(Error::BadExponent(alpha));
    }
    Ok(radial_moment_weighted(|t| t.powf(alpha), w, rule))
}

/// Generalized moment with an arbitrary weight in t; the regularized alpha=-1
/// composition used by the double-curl inverse folds its |x'|^2/2 factor in
/// here rather than evaluating a divergent t^-1 moment.
pub fn radial_moment_weighted(
    tweight: impl Fn(f64) -> f64 + Sync,
    w: &Field,
    rule: &RayQuadrature,
) -> Field {
    let a = w.domain().star_center();
    let comps = w.comps();
    eval_parallel(w, comps, w.support(), |_, x| {
        let dx = x - a;
        let mut acc = [0.0f64; 4];
        for (&t, &wt) in rule.nodes().iter().zip(rule.weights()) {
            let p = a + dx * t;
            let v = w.interp(p).unwrap_or([0.0; 4]);
            let tw = wt * tweight(t);
            for c in 0..comps {
                acc[c] += tw * v[c];
            }
        }
        acc
    })
}

/// Scalar potential by straight-ray integration:
/// A[g](x) = int_0^1 (x - a) . g(a + t (x - a)) dt, the antigradient of g
/// when g is irrotational (gated).
pub fn antigradient(g: &Field, rule: &RayQuadrature, gate_tol: f64) -> Result<Field> {
    assert_eq!(g.comps(), 3, "antigradient expects a vector field");
    let dom = g.domain();
    let interior = dom.interior_cells(2);
    let rot = diffops::curl(g);
    let residual = verify::l2_region(&rot, &interior);
    let scale = verify::jacobian_scale(g, &interior);
    let rel = verify::relative(residual, scale);
    if rel > gate_tol {
        return Err(Error::Precondition {
            check: "irrotational datum (curl g = 0)".into(),
            relative: rel,
            tolerance: gate_tol,
        });
    }
    let a = dom.star_center();
    Ok(eval_parallel(g, 1, g.support(), |_, x| {
        let dx = x - a;
        let mut acc = 0.0;
        for (&t, &wt) in rule.nodes().iter().zip(rule.weights()) {
            let p = a + dx * t;
            let v = g.interp(p).unwrap_or([0.0; 4]);
            acc += wt * dx.dot(vec3(v[0], v[1], v[2]));
        }
        [acc, 0.0, 0.0, 0.0]
    }))
}

/// Vector part completing a harmonic scalar w0 to a monogenic quaternion:
/// S[w0](x) = int_0^1 t (x - a) x grad w0(a + t (x - a)) dt.
/// Then w0 + S[w0] has both zero divergence and grad w0 = -curl of it.
pub fn monogenic_completion(w0: &Field, rule: &RayQuadrature, gate_tol: f64) -> Result<Field> {
    assert_eq!(w0.comps(), 1, "completion expects a scalar field");
    let dom = w0.domain();
    let interior = dom.interior_cells(2);
    let grad = diffops::gradient(w0);
    let lap = diffops::laplacian(w0);
    let residual = verify::l2_region(&lap, &interior);
    let scale = verify::jacobian_scale(&grad, &interior);
    let rel = verify::relative(residual, scale);
    if rel > gate_tol {
        return Err(Error::Precondition {
            check: "harmonic scalar (laplacian w0 = 0)".into(),
            relative: rel,
            tolerance: gate_tol,
        });
    }
    Ok(completion_from_gradient(&grad, rule))
}

/// The ray integral of S with a precomputed gradient field; shared by the
/// solvers, which already hold grad T0,1 on the grid.
pub fn completion_from_gradient(grad: &Field, rule: &RayQuadrature) -> Field {
    assert_eq!(grad.comps(), 3);
    let a = grad.domain().star_center();
    eval_parallel(grad, 3, grad.support(), |_, x| {
        let dx = x - a;
        let mut acc = Vec3::ZERO;
        for (&t, &wt) in rule.nodes().iter().zip(rule.weights()) {
            let p = a + dx * t;
            let v = grad.interp(p).unwrap_or([0.0; 4]);
            acc += dx.cross(vec3(v[0], v[1], v[2])) * (wt * t);
        }
        [acc.x, acc.y, acc.z, 0.0]
    })
}

/// Recover the scalar part matching a vector part w: w0 = -A[curl w], the
/// inverse direction of [`monogenic_completion`] (gated inside the
/// antigradient: curl w must itself be irrotational).
pub fn complete_from_vector(w: &Field, rule: &RayQuadrature, gate_tol: f64) -> Result<Field> {
    assert_eq!(w.comps(), 3);
    let rot = diffops::curl(w);
    Ok(antigradient(&rot, rule, gate_tol)?.scaled(-1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StarDomain;
    use crate::vec3::Vec3;

    #[test]
    fn moment_of_homogeneous_polynomial() {
        // Degree-k homogeneous u about the star center: I^alpha[u] = u / (alpha + k + 1).
        let dom = StarDomain::ball(16, 1.0, Vec3::ZERO).unwrap();
        let rule = RayQuadrature::default_rule();
        let u = Field::from_scalar_fn(&dom, |x| x.x * x.y); // k = 2
        let m = radial_moment(1.0, &u, &rule).unwrap();
        for &idx in dom.interior_cells(2).iter().take(500) {
            let want = u.scalar_at(idx) / 4.0;
            assert!((m.scalar_at(idx) - want).abs() < 1e-10 + 1e-10 * want.abs());
        }
    }

    #[test]
    fn antigradient_recovers_linear_potential() {
        let dom = StarDomain::ball(16, 1.0, Vec3::ZERO).unwrap();
        let rule = RayQuadrature::default_rule();
        let g = Field::from_vector_fn(&dom, |_| vec3(2.0, -1.0, 0.5));
        let psi = antigradient(&g, &rule, GATE_TOL).unwrap();
        for &idx in dom.interior_cells(1).iter().take(500) {
            let x = dom.grid().center_of(idx);
            let want = 2.0 * x.x - x.y + 0.5 * x.z;
            assert!((psi.scalar_at(idx) - want).abs() < 1e-11);
        }
    }

    #[test]
    fn antigradient_rejects_rotational_datum() {
        let dom = StarDomain::ball(12, 1.0, Vec3::ZERO).unwrap();
        let rule = RayQuadrature::default_rule();
        let g = Field::from_vector_fn(&dom, |x| vec3(-x.y, x.x, 0.0));
        assert!(matches!(
            antigradient(&g, &rule, GATE_TOL),
            Err(Error::Precondition { .. })
        ));
    }
}
