//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use divcurl::{vec3, Field, StarDomain, Vec3};

/// Unit ball at the given resolution.
pub fn ball(n: usize) -> Arc<StarDomain> {
    StarDomain::ball(n, 1.0, Vec3::ZERO).expect("ball domain")
}

/// A smooth divergence-free vector field.
pub fn solenoidal(dom: &Arc<StarDomain>) -> Field {
    Field::from_vector_fn(dom, |p| vec3(-p.y, p.x, 0.5))
}

/// A smooth scalar field.
pub fn scalar(dom: &Arc<StarDomain>) -> Field {
    Field::from_scalar_fn(dom, |p| p.x * p.y + (0.5 * p.z).exp())
}
