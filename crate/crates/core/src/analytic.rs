//! Closed-form reference fields.
//!
//! Two kinds of things live here. First, a small registry of named analytic
//! expressions (`scalar_expr`, `vector_expr`) used by the command line to
//! synthesize data and by tests to build batteries. Second, hand-derived
//! closed forms for the worked ball example (Coulomb datum with a cavity
//! cutoff), the manufactured conductivity solutions, and the monogenic
//! completion of a few low-degree polynomials. Everything here is exact up to
//! quadrature of one-dimensional smooth integrals, so tests can use these as
//! independent oracles against the volume-quadrature operators.

use std::sync::Arc;

use crate::error::Error;
use crate::gauss::RayQuadrature;
use crate::grid::{BoundaryField, BoundarySet, Field, StarDomain};
use crate::vec3::{vec3, Vec3};

/// Radius of the excluded cavity around the Coulomb singularity.
pub const CAVITY_RADIUS: f64 = 0.2;

/// Star center used by the worked ball example.
pub const EXAMPLE_STAR_CENTER: Vec3 = vec3(0.0, 0.0, -0.5);

type ScalarFn = Box<dyn Fn(Vec3) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(Vec3) -> Vec3 + Send + Sync>;

/// Names accepted by [`scalar_expr`].
pub const SCALAR_NAMES: &[&str] = &["zero", "one", "x1", "x1x2", "rsq", "expz"];

/// Names accepted by [`vector_expr`].
pub const VECTOR_NAMES: &[&str] = &["zero", "e3", "xvec", "gradx1x2", "coulomb"];

/// Look up a named scalar expression.
pub fn scalar_expr(name: &str) -> Result<ScalarFn, Error> {
    let f: ScalarFn = match name {
        "zero" => Box::new(|_| 0.0),
        "one" => Box::new(|_| 1.0),
        "x1" => Box::new(|p: Vec3| p.x),
        "x1x2" => Box::new(|p: Vec3| p.x * p.y),
        "rsq" => Box::new(|p: Vec3| p.norm_sq()),
        "expz" => Box::new(|p: Vec3| (0.5 * p.z).exp()),
        _ => {
            return Err(Error::UnknownField(format!(
                "scalar `{name}` (available: {})",
                SCALAR_NAMES.join(", ")
            )))
        }
    };
    Ok(f)
}

/// Look up a named vector expression.
///
/// `coulomb` is the field `x / |x|^3` with the value forced to zero inside
/// the cavity `|x| < CAVITY_RADIUS`, matching the worked ball example.
pub fn vector_expr(name: &str) -> Result<VectorFn, Error> {
    let f: VectorFn = match name {
        "zero" => Box::new(|_| Vec3::ZERO),
        "e3" => Box::new(|_| vec3(0.0, 0.0, 1.0)),
        "xvec" => Box::new(|p: Vec3| p),
        "gradx1x2" => Box::new(|p: Vec3| vec3(p.y, p.x, 0.0)),
        "coulomb" => Box::new(coulomb_cut),
        _ => {
            return Err(Error::UnknownField(format!(
                "vector `{name}` (available: {})",
                VECTOR_NAMES.join(", ")
            )))
        }
    };
    Ok(f)
}

/// Sample a named scalar expression on a domain.
pub fn builtin_scalar(dom: &Arc<StarDomain>, name: &str) -> Result<Field, Error> {
    let f = scalar_expr(name)?;
    Ok(Field::from_scalar_fn(dom, |p| f(p)))
}

/// Sample a named vector expression on a domain.
pub fn builtin_vector(dom: &Arc<StarDomain>, name: &str) -> Result<Field, Error> {
    let f = vector_expr(name)?;
    Ok(Field::from_vector_fn(dom, |p| f(p)))
}

/// Sample a named scalar expression on a boundary quadrature set.
pub fn builtin_boundary_scalar(
    set: &Arc<BoundarySet>,
    name: &str,
) -> Result<BoundaryField, Error> {
    let f = scalar_expr(name)?;
    Ok(BoundaryField::from_scalar_fn(set, |p| f(p)))
}

/// Sample a named vector expression on a boundary quadrature set.
pub fn builtin_boundary_vector(
    set: &Arc<BoundarySet>,
    name: &str,
) -> Result<BoundaryField, Error> {
    let f = vector_expr(name)?;
    Ok(BoundaryField::from_vector_fn(set, |p| f(p)))
}

/// Coulomb field `x / |x|^3`, zeroed inside the cavity.
pub fn coulomb_cut(p: Vec3) -> Vec3 {
    let r = p.norm();
    if r < CAVITY_RADIUS {
        Vec3::ZERO
    } else {
        p * (1.0 / (r * r * r))
    }
}

// ---------------------------------------------------------------------------
// Worked ball example: curl w = coulomb datum, div w = 0.
// ---------------------------------------------------------------------------

/// Closed-form curl inverse of the *uncut* Coulomb field seen from center `a`:
///
/// `w(x) = (a x x) / (|x| (a . x + |a| |x|))`.
///
/// Singular on the ray from the origin away from `a` (where the denominator
/// vanishes) and undefined at the origin.
pub fn example_solution(a: Vec3) -> impl Fn(Vec3) -> Vec3 {
    move |x: Vec3| {
        let r = x.norm();
        let den = r * (a.dot(x) + a.norm() * r);
        a.cross(x) * (1.0 / den)
    }
}

/// Parameter window `t in [t1, t2]` of the ray `a + t (x - a)` that dips into
/// the cavity `|y| < cutoff`, clipped to `[0, 1]`. `None` when the segment
/// stays outside the cavity.
pub fn shadow_window(a: Vec3, cutoff: f64, x: Vec3) -> Option<(f64, f64)> {
    let xp = x - a;
    let alpha = xp.norm_sq();
    let beta = 2.0 * a.dot(xp);
    let gamma = a.norm_sq();
    if alpha <= 0.0 {
        return None;
    }
    // |a + t xp|^2 < cutoff^2  <=>  alpha t^2 + beta t + (gamma - cutoff^2) < 0
    let disc = beta * beta - 4.0 * alpha * (gamma - cutoff * cutoff);
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t1 = ((-beta - sq) / (2.0 * alpha)).clamp(0.0, 1.0);
    let t2 = ((-beta + sq) / (2.0 * alpha)).clamp(0.0, 1.0);
    if t2 - t1 > 0.0 {
        Some((t1, t2))
    } else {
        None
    }
}

/// Whether the segment from `a` to `x` crosses the cavity, i.e. whether the
/// cut datum differs from the full Coulomb field along this ray.
pub fn in_shadow(a: Vec3, cutoff: f64, x: Vec3) -> bool {
    shadow_window(a, cutoff, x).is_some()
}

/// Ray-integral curl inverse of the *cut* Coulomb datum seen from center `a`:
///
/// `w(x) = (a x x) * Int_{[0,1] \ window} t / |a + t(x-a)|^3 dt`,
///
/// where the window is the part of the ray inside the cavity. Evaluated by
/// Gauss-Legendre on the at most two kept sub-segments; the integrand is
/// smooth and bounded there, so 32 nodes per segment are far beyond the
/// accuracy of anything this is compared against. Unlike the uncut closed
/// form this stays bounded across the shadow of the cavity.
pub fn example_cut_solution(a: Vec3, cutoff: f64) -> impl Fn(Vec3) -> Vec3 {
    let rule = RayQuadrature::default_rule();
    move |x: Vec3| {
        let xp = x - a;
        let alpha = xp.norm_sq();
        let beta = 2.0 * a.dot(xp);
        let gamma = a.norm_sq();
        let q = move |t: f64| gamma + beta * t + alpha * t * t;
        let seg = |lo: f64, hi: f64| -> f64 {
            if hi <= lo {
                return 0.0;
            }
            let len = hi - lo;
            let mut acc = 0.0;
            for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
                let s = lo + t * len;
                acc += w * s / q(s).powf(1.5);
            }
            acc * len
        };
        let integral = match shadow_window(a, cutoff, x) {
            Some((t1, t2)) => seg(0.0, t1) + seg(t2, 1.0),
            None => seg(0.0, 1.0),
        };
        a.cross(x) * integral
    }
}

/// Closed form of the scalar Teodorescu part `T_{0,1}` applied to the cut
/// Coulomb field on the unit ball: `1 - 1/|x|` outside the cavity, constant
/// `1 - 1/cutoff` inside it.
pub fn t01_coulomb(cutoff: f64) -> impl Fn(Vec3) -> f64 {
    move |x: Vec3| 1.0 - 1.0 / x.norm().max(cutoff)
}

/// Membership test for the annulus `lo <= |x| <= hi` minus a tube of the
/// given radius around the positive `x3` ray.
pub fn annulus_minus_tube(lo: f64, hi: f64, tube: f64) -> impl Fn(Vec3) -> bool {
    move |p: Vec3| {
        let r = p.norm();
        if r < lo || r > hi {
            return false;
        }
        let axial = (p.x * p.x + p.y * p.y).sqrt();
        !(p.z > 0.0 && axial < tube)
    }
}

// ---------------------------------------------------------------------------
// Monogenic completions of low-degree polynomials.
// ---------------------------------------------------------------------------

/// Completion of `x1`: the vector part making `x1 + w` monogenic from 0.
pub fn completion_x1(p: Vec3) -> Vec3 {
    vec3(0.0, 0.5 * p.z, -0.5 * p.y)
}

/// Completion of `x1 x2`.
pub fn completion_x1x2(p: Vec3) -> Vec3 {
    vec3(-p.x * p.z, p.y * p.z, p.x * p.x - p.y * p.y) * (1.0 / 3.0)
}

/// Completion of `x1^2 - x2^2`.
pub fn completion_x1sq_minus_x2sq(p: Vec3) -> Vec3 {
    vec3(p.y * p.z, p.x * p.z, -2.0 * p.x * p.y) * (2.0 / 3.0)
}

// ---------------------------------------------------------------------------
// Manufactured conductivity solutions for f^2 = 1 + x3^2 / 2.
// ---------------------------------------------------------------------------

/// Conductivity coefficient `f = sqrt(1 + x3^2 / 2)`.
pub fn mms_f(p: Vec3) -> f64 {
    (1.0 + 0.5 * p.z * p.z).sqrt()
}

/// Manufactured solution `u = x1 x2`; satisfies `div(f^2 grad u) = 0` for the
/// coefficient above, and the seven-point scheme reproduces it exactly.
pub fn mms_bilinear(p: Vec3) -> f64 {
    p.x * p.y
}

/// Manufactured solution `u = x1^2 x2`, which exercises genuine second-order
/// truncation of the seven-point scheme.
pub fn mms_cubic(p: Vec3) -> f64 {
    p.x * p.x * p.y
}

/// `div(f^2 grad u)` for [`mms_cubic`] and the coefficient [`mms_f`].
pub fn mms_cubic_rhs(p: Vec3) -> f64 {
    2.0 * p.y * (1.0 + 0.5 * p.z * p.z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::RayQuadrature;

    fn ray_integral_brute(a: Vec3, cutoff: f64, x: Vec3) -> Vec3 {
        // Direct quadrature of -(x - a) x I^1[g] with the cut datum. The
        // cavity crossings are located by scanning and bisection (independent
        // of the quadratic-formula window), then each smooth piece is
        // integrated with the midpoint rule.
        let xp = x - a;
        let level = |t: f64| (a + xp * t).norm() - cutoff;
        let scan = 4096;
        let mut edges = vec![0.0];
        let mut prev = level(0.0);
        for k in 1..=scan {
            let t = k as f64 / scan as f64;
            let cur = level(t);
            if (prev < 0.0) != (cur < 0.0) {
                let (mut lo, mut hi) = ((k - 1) as f64 / scan as f64, t);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if (level(lo) < 0.0) == (level(mid) < 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                edges.push(0.5 * (lo + hi));
            }
            prev = cur;
        }
        edges.push(1.0);
        let mut acc = Vec3::ZERO;
        for pair in edges.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let mid = 0.5 * (lo + hi);
            if level(mid) < 0.0 {
                continue; // inside the cavity: datum vanishes
            }
            let n = 20_000;
            let step = (hi - lo) / n as f64;
            for k in 0..n {
                let t = lo + (k as f64 + 0.5) * step;
                let y = a + xp * t;
                let r = y.norm();
                acc += y * (t * step / (r * r * r));
            }
        }
        xp.cross(acc) * -1.0
    }

    #[test]
    fn cut_solution_matches_brute_force_ray_integration() {
        let a = EXAMPLE_STAR_CENTER;
        let w = example_cut_solution(a, CAVITY_RADIUS);
        let pts = [
            vec3(0.5, 0.1, 0.2),
            vec3(-0.3, 0.4, -0.4),
            vec3(0.05, -0.02, 0.7), // inside the shadow of the cavity
            vec3(0.0, 0.6, 0.0),
            vec3(0.2, 0.2, -0.8),
        ];
        for &x in &pts {
            let got = w(x);
            let want = ray_integral_brute(a, CAVITY_RADIUS, x);
            let err = (got - want).norm();
            assert!(
                err <= 2e-6 * (1.0 + want.norm()),
                "cut ray integral mismatch at {x:?}: got {got:?} want {want:?}"
            );
        }
    }

    #[test]
    fn cut_solution_agrees_with_closed_form_outside_shadow() {
        let a = EXAMPLE_STAR_CENTER;
        let w_cut = example_cut_solution(a, CAVITY_RADIUS);
        let w_full = example_solution(a);
        let outside = vec3(-0.3, 0.4, -0.4);
        assert!(!in_shadow(a, CAVITY_RADIUS, outside));
        let d = (w_cut(outside) - w_full(outside)).norm();
        assert!(d <= 1e-10, "cut and full solutions differ off-shadow: {d}");

        let inside = vec3(0.05, -0.02, 0.7);
        assert!(in_shadow(a, CAVITY_RADIUS, inside));
        let d = (w_cut(inside) - w_full(inside)).norm();
        assert!(d > 1e-3, "shadow point should feel the cavity: {d}");
    }

    #[test]
    fn full_solution_inverts_curl_analytically() {
        // Central finite differences of the closed form reproduce the Coulomb
        // field away from the singular ray and the origin.
        let a = EXAMPLE_STAR_CENTER;
        let w = example_solution(a);
        let h = 1e-5;
        for &x in &[vec3(0.4, -0.2, 0.3), vec3(-0.5, 0.1, -0.6), vec3(0.3, 0.6, 0.1)] {
            let dx = vec3(h, 0.0, 0.0);
            let dy = vec3(0.0, h, 0.0);
            let dz = vec3(0.0, 0.0, h);
            let jx = (w(x + dx) - w(x - dx)) * (0.5 / h);
            let jy = (w(x + dy) - w(x - dy)) * (0.5 / h);
            let jz = (w(x + dz) - w(x - dz)) * (0.5 / h);
            let curl = vec3(jy.z - jz.y, jz.x - jx.z, jx.y - jy.x);
            let g = x * (1.0 / x.norm().powi(3));
            let div = jx.x + jy.y + jz.z;
            assert!((curl - g).norm() <= 1e-6 * g.norm(), "curl mismatch at {x:?}");
            assert!(div.abs() <= 1e-6 * g.norm(), "divergence leak at {x:?}");
        }
    }

    #[test]
    fn shadow_window_shape_is_a_cone_above_the_cavity() {
        let a = EXAMPLE_STAR_CENTER;
        assert!(in_shadow(a, CAVITY_RADIUS, vec3(0.0, 0.0, 0.8)));
        assert!(in_shadow(a, CAVITY_RADIUS, vec3(0.0, 0.0, 0.25)));
        assert!(!in_shadow(a, CAVITY_RADIUS, vec3(0.0, 0.0, -0.8)));
        assert!(!in_shadow(a, CAVITY_RADIUS, vec3(0.8, 0.0, 0.0)));
        // Points inside the cavity itself sit in their own window.
        assert!(in_shadow(a, CAVITY_RADIUS, vec3(0.0, 0.0, 0.1)));
    }

    #[test]
    fn completions_are_monogenic_in_closed_form() {
        // D(w0 + S[w0]) = 0 checked with central differences: the scalar part
        // requires div S[w0] ... = 0 packaged as grad w0 + curl S = 0 and
        // div S = 0.
        let h = 1e-5;
        let cases: [(&dyn Fn(Vec3) -> f64, &dyn Fn(Vec3) -> Vec3); 3] = [
            (&|p: Vec3| p.x, &completion_x1),
            (&|p: Vec3| p.x * p.y, &completion_x1x2),
            (&|p: Vec3| p.x * p.x - p.y * p.y, &completion_x1sq_minus_x2sq),
        ];
        for (w0, s) in cases {
            for &x in &[vec3(0.3, -0.2, 0.5), vec3(-0.1, 0.4, -0.3)] {
                let dx = vec3(h, 0.0, 0.0);
                let dy = vec3(0.0, h, 0.0);
                let dz = vec3(0.0, 0.0, h);
                let jx = (s(x + dx) - s(x - dx)) * (0.5 / h);
                let jy = (s(x + dy) - s(x - dy)) * (0.5 / h);
                let jz = (s(x + dz) - s(x - dz)) * (0.5 / h);
                let curl = vec3(jy.z - jz.y, jz.x - jx.z, jx.y - jy.x);
                let div = jx.x + jy.y + jz.z;
                let grad = vec3(
                    (w0(x + dx) - w0(x - dx)) * 0.5 / h,
                    (w0(x + dy) - w0(x - dy)) * 0.5 / h,
                    (w0(x + dz) - w0(x - dz)) * 0.5 / h,
                );
                assert!((grad + curl).norm() <= 1e-8, "grad + curl != 0 at {x:?}");
                assert!(div.abs() <= 1e-8, "completion not solenoidal at {x:?}");
            }
        }
    }

    #[test]
    fn mms_cubic_rhs_is_consistent() {
        let h = 1e-4;
        for &x in &[vec3(0.2, 0.3, -0.4), vec3(-0.5, 0.1, 0.6)] {
            // div(f^2 grad u) by nested central differences.
            let flux = |p: Vec3, d: Vec3| {
                let f2 = 1.0 + 0.5 * p.z * p.z;
                let du = (mms_cubic(p + d) - mms_cubic(p - d)) * 0.5 / h;
                f2 * du
            };
            let dx = vec3(h, 0.0, 0.0);
            let dy = vec3(0.0, h, 0.0);
            let dz = vec3(0.0, 0.0, h);
            let div = (flux(x + dx, dx) - flux(x - dx, dx)) * 0.5 / h
                + (flux(x + dy, dy) - flux(x - dy, dy)) * 0.5 / h
                + (flux(x + dz, dz) - flux(x - dz, dz)) * 0.5 / h;
            assert!((div - mms_cubic_rhs(x)).abs() <= 1e-5 * (1.0 + mms_cubic_rhs(x).abs()));
        }
    }

    #[test]
    fn unknown_names_are_rejected_with_inventory() {
        let err = match scalar_expr("nope") {
            Err(e) => e,
            Ok(_) => panic!("`nope` should not resolve"),
        };
        assert!(matches!(err, Error::UnknownField(_)));
        let err = match vector_expr("one") {
            Err(e) => e,
            Ok(_) => panic!("`one` is scalar-only and should not resolve as a vector"),
        };
        let msg = err.to_string();
        assert!(msg.contains("e3"), "error should list the inventory: {msg}");
    }

    #[test]
    fn quadrature_rule_sanity_for_cut_integrand() {
        // The default rule must integrate the uncut kernel to the closed form.
        let a = EXAMPLE_STAR_CENTER;
        let rule = RayQuadrature::default_rule();
        assert!(rule.len() >= 16);
        let x = vec3(0.2, -0.5, 0.3);
        let w_full = example_solution(a)(x);
        let w_gl = example_cut_solution(a, 0.0)(x);
        assert!((w_full - w_gl).norm() <= 1e-10 * w_full.norm());
    }
}
