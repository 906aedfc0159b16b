//! Finite-difference operators on voxel fields.
//!
//! Second-order centered stencils wherever both axis neighbors carry data,
//! falling back to one-sided second-order, one-sided first-order and finally
//! zero on degenerate rows. Extended-support fields never degrade on the mask
//! (the halo provides neighbors); mask-supported fields degrade only on the
//! boundary ring. [`degradation_report`] counts affected voxels so callers can
//! tell when the fallbacks were actually exercised.

use crate::grid::{Field, StarDomain, Support};
use crate::vec3::{vec3, Quat, Vec3};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StencilQuality {
    /// Voxels where some axis derivative dropped to first order.
    pub first_order: usize,
    /// Voxels where some axis had no usable neighbor at all.
    pub dropped: usize,
}

#[derive(Clone, Copy)]
enum Stencil {
    Centered,
    Forward2,
    Backward2,
    Forward1,
    Backward1,
    None,
}

struct Axes {
    stride: [usize; 3],
    dims: [usize; 3],
}

impl Axes {
    fn of(dom: &StarDomain) -> Axes {
        let (nx, ny, nz) = dom.grid().dims();
        Axes { stride: [1, nx, nx * ny], dims: [nx, ny, nz] }
    }
}

#[inline]
fn pick(dom: &StarDomain, ax: &Axes, support: Support, idx: usize, a: usize) -> Stencil {
    let (i, j, k) = dom.grid().coords(idx);
    let pos = [i, j, k][a];
    let ok = |off: i64| -> bool {
        let p = pos as i64 + off;
        if p < 0 || p >= ax.dims[a] as i64 {
            return false;
        }
        let nidx = (idx as i64 + off * ax.stride[a] as i64) as usize;
        dom.in_support(support, nidx)
    };
    let (m1, p1) = (ok(-1), ok(1));
    if m1 && p1 {
        Stencil::Centered
    } else if p1 && ok(2) {
        Stencil::Forward2
    } else if m1 && ok(-2) {
        Stencil::Backward2
    } else if p1 {
        Stencil::Forward1
    } else if m1 {
        Stencil::Backward1
    } else {
        Stencil::None
    }
}

/// The stencil applied as (neighbor offset in voxels, coefficient in units of 1/h).
#[inline]
fn taps(s: Stencil) -> &'static [(i64, f64)] {
    match s {
        Stencil::Centered => &[(-1, -0.5), (1, 0.5)],
        Stencil::Forward2 => &[(0, -1.5), (1, 2.0), (2, -0.5)],
        Stencil::Backward2 => &[(0, 1.5), (-1, -2.0), (-2, 0.5)],
        Stencil::Forward1 => &[(0, -1.0), (1, 1.0)],
        Stencil::Backward1 => &[(0, 1.0), (-1, -1.0)],
        Stencil::None => &[],
    }
}

#[inline]
fn d_at(f: &Field, ax: &Axes, idx: usize, a: usize, c: usize, s: Stencil) -> f64 {
    let h = f.domain().grid().spacing();
    let comps = f.comps();
    let mut acc = 0.0;
    for &(off, w) in taps(s) {
        let nidx = (idx as i64 + off * ax.stride[a] as i64) as usize;
        acc += w * f.data()[nidx * comps + c];
    }
    acc / h
}

/// Count voxels of the support set whose stencils degrade, per the same
/// selection rule the operators use. Purely geometric.
pub fn degradation_report(dom: &StarDomain, support: Support) -> StencilQuality {
    let ax = Axes::of(dom);
    let mut q = StencilQuality::default();
    for &idx in dom.cells_for(support) {
        let mut first = false;
        let mut none = false;
        for a in 0..3 {
            match pick(dom, &ax, support, idx, a) {
                Stencil::Centered | Stencil::Forward2 | Stencil::Backward2 => {}
                Stencil::Forward1 | Stencil::Backward1 => first = true,
                Stencil::None => none = true,
            }
        }
        if none {
            q.dropped += 1;
        } else if first {
            q.first_order += 1;
        }
    }
    q
}

pub fn gradient(f: &Field) -> Field {
    assert_eq!(f.comps(), 1, "gradient expects a scalar field");
    let dom = f.domain();
    let ax = Axes::of(dom);
    let support = f.support();
    let mut out = Field::zeros(dom, 3, support);
    for &idx in dom.cells_for(support) {
        let mut g = Vec3::ZERO;
        for a in 0..3 {
            let s = pick(dom, &ax, support, idx, a);
            let v = d_at(f, &ax, idx, a, 0, s);
            match a {
                0 => g.x = v,
                1 => g.y = v,
                _ => g.z = v,
            }
        }
        out.set_vec3(idx, g);
    }
    out
}

pub fn divergence(f: &Field) -> Field {
    assert_eq!(f.comps(), 3, "divergence expects a vector field");
    let dom = f.domain();
    let ax = Axes::of(dom);
    let support = f.support();
    let mut out = Field::zeros(dom, 1, support);
    for &idx in dom.cells_for(support) {
        let mut acc = 0.0;
        for a in 0..3 {
            let s = pick(dom, &ax, support, idx, a);
            acc += d_at(f, &ax, idx, a, a, s);
        }
        out.set(idx, 0, acc);
    }
    out
}

pub fn curl(f: &Field) -> Field {
    assert_eq!(f.comps(), 3, "curl expects a vector field");
    let dom = f.domain();
    let ax = Axes::of(dom);
    let support = f.support();
    let mut out = Field::zeros(dom, 3, support);
    for &idx in dom.cells_for(support) {
        let mut d = [[0.0f64; 3]; 3]; // d[a][c] = d f_c / d x_a
        for a in 0..3 {
            let s = pick(dom, &ax, support, idx, a);
            for c in 0..3 {
                d[a][c] = d_at(f, &ax, idx, a, c, s);
            }
        }
        out.set_vec3(
            idx,
            vec3(d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0]),
        );
    }
    out
}

/// Componentwise Laplacian via compact second differences, with a shifted
/// (first-order) fallback at support rims.
pub fn laplacian(f: &Field) -> Field {
    let dom = f.domain();
    let ax = Axes::of(dom);
    let support = f.support();
    let comps = f.comps();
    let h2 = dom.grid().spacing().powi(2);
    let mut out = Field::zeros(dom, comps, support);
    for &idx in dom.cells_for(support) {
        let (i, j, k) = dom.grid().coords(idx);
        for c in 0..comps {
            let mut acc = 0.0;
            for a in 0..3 {
                let pos = [i, j, k][a];
                let ok = |off: i64| -> bool {
                    let p = pos as i64 + off;
                    if p < 0 || p >= ax.dims[a] as i64 {
                        return false;
                    }
                    dom.in_support(support, (idx as i64 + off * ax.stride[a] as i64) as usize)
                };
                let val = |off: i64| -> f64 {
                    f.data()[((idx as i64 + off * ax.stride[a] as i64) as usize) * comps + c]
                };
                if ok(-1) && ok(1) {
                    acc += (val(1) - 2.0 * val(0) + val(-1)) / h2;
                } else if ok(1) && ok(2) {
                    acc += (val(2) - 2.0 * val(1) + val(0)) / h2;
                } else if ok(-1) && ok(-2) {
                    acc += (val(-2) - 2.0 * val(-1) + val(0)) / h2;
                }
            }
            out.set(idx, c, acc);
        }
    }
    out
}

/// Frobenius norm of the Jacobian at each voxel: the natural scale against
/// which first-order residuals of homogeneous equations are measured.
pub fn jacobian_norm(f: &Field) -> Field {
    let dom = f.domain();
    let ax = Axes::of(dom);
    let support = f.support();
    let comps = f.comps();
    let mut out = Field::zeros(dom, 1, support);
    for &idx in dom.cells_for(support) {
        let mut acc = 0.0;
        for a in 0..3 {
            let s = pick(dom, &ax, support, idx, a);
            for c in 0..comps {
                let v = d_at(f, &ax, idx, a, c, s);
                acc += v * v;
            }
        }
        out.set(idx, 0, acc.sqrt());
    }
    out
}

/// Left Dirac operator D w = -div(vec w) + grad(w0) + curl(vec w), for
/// quaternion-valued fields (scalar and vector inputs embed).
pub fn dirac_left(f: &Field) -> Field {
    dirac(f, 1.0)
}

/// Right Dirac operator w D = -div(vec w) + grad(w0) - curl(vec w).
pub fn dirac_right(f: &Field) -> Field {
    dirac(f, -1.0)
}

fn dirac(f: &Field, curl_sign: f64) -> Field {
    let dom = f.domain();
    let ax = Axes::of(dom);
    let support = f.support();
    let comps = f.comps();
    let mut out = Field::zeros(dom, 4, support);
    for &idx in dom.cells_for(support) {
        let mut d = [[0.0f64; 4]; 3]; // d[a][c], c in quaternion layout
        for a in 0..3 {
            let s = pick(dom, &ax, support, idx, a);
            match comps {
                4 => {
                    for c in 0..4 {
                        d[a][c] = d_at(f, &ax, idx, a, c, s);
                    }
                }
                3 => {
                    for c in 0..3 {
                        d[a][c + 1] = d_at(f, &ax, idx, a, c, s);
                    }
                }
                1 => d[a][0] = d_at(f, &ax, idx, a, 0, s),
                _ => unreachable!(),
            }
        }
        let div = d[0][1] + d[1][2] + d[2][3];
        let grad0 = vec3(d[0][0], d[1][0], d[2][0]);
        let curl = vec3(
            d[1][3] - d[2][2],
            d[2][1] - d[0][3],
            d[0][2] - d[1][1],
        );
        out.set_quat(idx, Quat { s: -div, v: grad0 + curl * curl_sign });
    }
    out
}

/// Exact transpose of [`curl`] as assembled on `support`: satisfies
/// <curl w, q> = <w, curl_transpose q> in the plain (unweighted) dot product
/// over all voxels, including the one-sided rows. The variational module
/// needs the matrix transpose, not the analytic adjoint.
pub fn curl_transpose(q: &Field) -> Field {
    assert_eq!(q.comps(), 3);
    let dom = q.domain();
    let ax = Axes::of(dom);
    let support = q.support();
    let h = dom.grid().spacing();
    let mut out = Field::zeros(dom, 3, support);
    // (curl w)_r = sum_{(a,c)} eps_{r?}: component r of curl reads d[a][c]
    // with signs: curl_0 = d1 w2 - d2 w1; curl_1 = d2 w0 - d0 w2; curl_2 = d0 w1 - d1 w0.
    const TERMS: [(usize, usize, usize, f64); 6] = [
        (0, 1, 2, 1.0),
        (0, 2, 1, -1.0),
        (1, 2, 0, 1.0),
        (1, 0, 2, -1.0),
        (2, 0, 1, 1.0),
        (2, 1, 0, -1.0),
    ];
    for &idx in dom.cells_for(support) {
        let mut st = [Stencil::None; 3];
        for a in 0..3 {
            st[a] = pick(dom, &ax, support, idx, a);
        }
        for &(r, a, c, sign) in &TERMS {
            let qv = q.get(idx, r);
            if qv == 0.0 {
                continue;
            }
            for &(off, w) in taps(st[a]) {
                let nidx = (idx as i64 + off * ax.stride[a] as i64) as usize;
                let cur = out.get(nidx, c);
                out.set(nidx, c, cur + sign * w / h * qv);
            }
        }
    }
    out
}

/// Exact transpose of [`gradient`] on `support` (same contract as
/// [`curl_transpose`]).
pub fn gradient_transpose(q: &Field) -> Field {
    assert_eq!(q.comps(), 3);
    let dom = q.domain();
    let ax = Axes::of(dom);
    let support = q.support();
    let h = dom.grid().spacing();
    let mut out = Field::zeros(dom, 1, support);
    for &idx in dom.cells_for(support) {
        for a in 0..3 {
            let s = pick(dom, &ax, support, idx, a);
            let qv = q.get(idx, a);
            if qv == 0.0 {
                continue;
            }
            for &(off, w) in taps(s) {
                let nidx = (idx as i64 + off * ax.stride[a] as i64) as usize;
                let cur = out.get(nidx, 0);
                out.set(nidx, 0, cur + w / h * qv);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StarDomain;
    use crate::vec3::Vec3;

    #[test]
    fn gradient_exact_on_linear() {
        let dom = StarDomain::ball(12, 1.0, Vec3::ZERO).unwrap();
        let f = Field::from_scalar_fn(&dom, |x| 2.0 * x.x - x.y + 0.5 * x.z);
        let g = gradient(&f);
        for &idx in dom.mask().cells() {
            let v = g.vec3_at(idx);
            assert!((v - vec3(2.0, -1.0, 0.5)).norm() < 1e-12);
        }
    }

    #[test]
    fn extended_support_never_degrades_on_mask() {
        let dom = StarDomain::ball(16, 1.0, Vec3::ZERO).unwrap();
        let q = degradation_report(&dom, Support::Extended);
        // The outermost dilation ring may degrade; the mask itself must not.
        let ax = Axes::of(&dom);
        for &idx in dom.mask().cells() {
            for a in 0..3 {
                assert!(matches!(
                    pick(&dom, &ax, Support::Extended, idx, a),
                    Stencil::Centered
                ));
            }
        }
        let _ = q;
    }

    #[test]
    fn curl_transpose_is_adjoint() {
        use rand::{Rng, SeedableRng};
        let dom = StarDomain::ball(10, 1.0, Vec3::ZERO).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        let mut w = Field::zeros(&dom, 3, Support::Mask);
        let mut q = Field::zeros(&dom, 3, Support::Mask);
        for &idx in dom.mask().cells() {
            for c in 0..3 {
                w.set(idx, c, rng.random_range(-1.0..1.0));
                q.set(idx, c, rng.random_range(-1.0..1.0));
            }
        }
        let cw = curl(&w);
        let ctq = curl_transpose(&q);
        let lhs: f64 = cw.data().iter().zip(q.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = w.data().iter().zip(ctq.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}
