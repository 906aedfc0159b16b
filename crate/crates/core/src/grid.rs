//! Voxel grids, star-shaped domains, grid fields and boundary quadrature.
//!
//! A domain is a boolean mask over a uniform cell-centered grid. The grid box
//! always carries a 3-voxel halo beyond the nominal domain bounding box so
//! that smooth fields can be extended past the mask: integral operators and
//! analytic samplers fill the mask plus a 3-voxel (Chebyshev) dilation, which
//! keeps every finite-difference stencil on the mask centered and every
//! interpolation cell fully populated. Fields record which of the two
//! conventions they satisfy via [`Support`].

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vec3::{vec3, Quat, Vec3};

/// Width of the halo (in voxels) added around the nominal domain box, and the
/// dilation radius on which extended fields are defined.
pub const EXT_LAYERS: u8 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    nz: usize,
    origin: Vec3,
    h: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, nz: usize, origin: Vec3, h: f64) -> Result<Grid> {
        if nx < 4 || ny < 4 || nz < 4 {
            return Err(Error::GridTooSmall(nx, ny, nz));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::BadSpacing(h));
        }
        Ok(Grid { nx, ny, nz, origin, h })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nx, self.ny, self.nz)
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index, x fastest, z slowest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.ny + j) * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.nx;
        let j = (idx / self.nx) % self.ny;
        let k = idx / (self.nx * self.ny);
        (i, j, k)
    }

    /// Center of voxel (i, j, k).
    #[inline]
    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + vec3(i as f64, j as f64, k as f64) * self.h
    }

    #[inline]
    pub fn center_of(&self, idx: usize) -> Vec3 {
        let (i, j, k) = self.coords(idx);
        self.center(i, j, k)
    }

    /// Voxel containing `p` (nearest center), or None outside the box.
    pub fn voxel_of(&self, p: Vec3) -> Option<(usize, usize, usize)> {
        let u = (p - self.origin) / self.h;
        let r = [u.x.round(), u.y.round(), u.z.round()];
        let dims = [self.nx, self.ny, self.nz];
        let mut out = [0usize; 3];
        for a in 0..3 {
            if r[a] < 0.0 || r[a] >= dims[a] as f64 {
                return None;
            }
            out[a] = r[a] as usize;
        }
        Some((out[0], out[1], out[2]))
    }
}

/// Voxel membership plus the list of member cells in linear-index order.
#[derive(Clone, Debug)]
pub struct VoxelMask {
    inside: Vec<bool>,
    cells: Vec<usize>,
}

impl VoxelMask {
    pub fn from_inside(grid: &Grid, inside: Vec<bool>) -> Result<VoxelMask> {
        assert_eq!(inside.len(), grid.len());
        let cells: Vec<usize> = (0..inside.len()).filter(|&i| inside[i]).collect();
        if cells.is_empty() {
            return Err(Error::EmptyMask);
        }
        Ok(VoxelMask { inside, cells })
    }

    pub fn from_predicate(grid: &Grid, pred: impl Fn(Vec3) -> bool) -> Result<VoxelMask> {
        let inside: Vec<bool> = (0..grid.len()).map(|idx| pred(grid.center_of(idx))).collect();
        Self::from_inside(grid, inside)
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn inside_slice(&self) -> &[bool] {
        &self.inside
    }
}

/// Geometric origin of a mask, kept so boundary extraction can use an exact
/// parametrization where one exists.
#[derive(Clone, Debug)]
pub enum Shape {
    Ball { center: Vec3, radius: f64 },
    Cuboid { center: Vec3, half: Vec3 },
    Custom,
}

/// A voxelized domain star-shaped with respect to `star_center`, together
/// with the dilation bookkeeping used to extend fields past the mask.
#[derive(Clone, Debug)]
pub struct StarDomain {
    grid: Grid,
    mask: VoxelMask,
    star_center: Vec3,
    shape: Shape,
    /// Chebyshev distance to the mask, saturated at EXT_LAYERS + 1.
    ext: Vec<u8>,
    ext_cells: Vec<usize>,
    dirichlet: Vec<usize>,
    res: usize,
}

fn chebyshev_distance(grid: &Grid, inside: &[bool], layers: u8) -> Vec<u8> {
    let (nx, ny, nz) = grid.dims();
    let mut dist: Vec<u8> = inside
        .iter()
        .map(|&b| if b { 0 } else { layers + 1 })
        .collect();
    for pass in 1..=layers {
        let prev = dist.clone();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let idx = grid.idx(i, j, k);
                    if prev[idx] <= pass {
                        continue;
                    }
                    'scan: for dk in -1i64..=1 {
                        for dj in -1i64..=1 {
                            for di in -1i64..=1 {
                                let (ii, jj, kk) =
                                    (i as i64 + di, j as i64 + dj, k as i64 + dk);
                                if ii < 0
                                    || jj < 0
                                    || kk < 0
                                    || ii >= nx as i64
                                    || jj >= ny as i64
                                    || kk >= nz as i64
                                {
                                    continue;
                                }
                                if prev[grid.idx(ii as usize, jj as usize, kk as usize)]
                                    == pass - 1
                                {
                                    dist[idx] = pass;
                                    break 'scan;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    dist
}

impl StarDomain {
    fn build(grid: Grid, mask: VoxelMask, star_center: Vec3, shape: Shape, res: usize) -> Result<Arc<StarDomain>> {
        let ext = chebyshev_distance(&grid, mask.inside_slice(), EXT_LAYERS);
        let ext_cells: Vec<usize> = (0..grid.len()).filter(|&i| ext[i] <= EXT_LAYERS).collect();
        let mut dom = StarDomain {
            grid,
            mask,
            star_center,
            shape,
            ext,
            ext_cells,
            dirichlet: Vec::new(),
            res,
        };
        dom.dirichlet = dom.compute_dirichlet_ring();
        let dom = Arc::new(dom);
        if !dom.star_check(star_center) {
            return Err(Error::NotStarShaped(star_center.x, star_center.y, star_center.z));
        }
        Ok(dom)
    }

    /// Ball of radius `radius` about `center`, `res` voxels across the
    /// diameter (h = 2 radius / res), voxel centers strictly inside count.
    pub fn ball(res: usize, radius: f64, center: Vec3) -> Result<Arc<StarDomain>> {
        let h = 2.0 * radius / res as f64;
        let n = res + 2 * EXT_LAYERS as usize;
        let off = radius + (EXT_LAYERS as f64 - 0.5) * h;
        let grid = Grid::new(n, n, n, center - vec3(off, off, off), h)?;
        let mask = VoxelMask::from_predicate(&grid, |x| (x - center).norm() < radius)?;
        Self::build(grid, mask, center, Shape::Ball { center, radius }, res)
    }

    /// Axis-aligned box with half-extents `half` about `center`; `res` voxels
    /// across the largest side.
    pub fn cuboid(res: usize, half: Vec3, center: Vec3) -> Result<Arc<StarDomain>> {
        let side = half.x.max(half.y).max(half.z) * 2.0;
        let h = side / res as f64;
        let halo = EXT_LAYERS as f64;
        let dims = [half.x, half.y, half.z]
            .map(|e| ((2.0 * e / h).round() as usize).max(1) + 2 * EXT_LAYERS as usize);
        let origin = center
            - vec3(
                ((dims[0] - 1) as f64) / 2.0 * h,
                ((dims[1] - 1) as f64) / 2.0 * h,
                ((dims[2] - 1) as f64) / 2.0 * h,
            );
        let _ = halo;
        let grid = Grid::new(dims[0], dims[1], dims[2], origin, h)?;
        let mask = VoxelMask::from_predicate(&grid, |x| {
            let d = x - center;
            d.x.abs() < half.x && d.y.abs() < half.y && d.z.abs() < half.z
        })?;
        Self::build(grid, mask, center, Shape::Cuboid { center, half }, res)
    }

    /// Wrap an imported mask. The star center must pass the segment check.
    pub fn from_mask(grid: Grid, inside: Vec<bool>, star_center: Vec3) -> Result<Arc<StarDomain>> {
        let res = {
            let (nx, ny, nz) = grid.dims();
            nx.max(ny).max(nz)
        };
        let mask = VoxelMask::from_inside(&grid, inside)?;
        Self::build(grid, mask, star_center, Shape::Custom, res)
    }

    /// Same domain with a different star center (Example: ray operators
    /// anchored away from a field singularity).
    pub fn with_star_center(self: &Arc<Self>, a: Vec3) -> Result<Arc<StarDomain>> {
        if !self.star_check(a) {
            return Err(Error::NotStarShaped(a.x, a.y, a.z));
        }
        let mut dom = (**self).clone();
        dom.star_center = a;
        Ok(Arc::new(dom))
    }

    /// Segment test: every masked voxel center x must see `a` through the
    /// mask, sampled at t = 0.1, 0.2, ..., 0.9 along a + t (x - a).
    pub fn star_check(&self, a: Vec3) -> bool {
        match self.grid.voxel_of(a) {
            Some((i, j, k)) if self.mask.contains(self.grid.idx(i, j, k)) => {}
            _ => return false,
        }
        self.mask.cells().iter().all(|&idx| {
            let x = self.grid.center_of(idx);
            (1..=9).all(|s| {
                let p = a + (x - a) * (s as f64 / 10.0);
                match self.grid.voxel_of(p) {
                    Some((i, j, k)) => self.mask.contains(self.grid.idx(i, j, k)),
                    None => false,
                }
            })
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &VoxelMask {
        &self.mask
    }

    pub fn star_center(&self) -> Vec3 {
        self.star_center
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Nominal resolution (voxels across the domain diameter).
    pub fn resolution(&self) -> usize {
        self.res
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    /// Voxels within the given Chebyshev dilation of the mask (0 = mask).
    #[inline]
    pub fn ext_level(&self, idx: usize) -> u8 {
        self.ext[idx]
    }

    pub fn cells_for(&self, support: Support) -> &[usize] {
        match support {
            Support::Extended => &self.ext_cells,
            Support::Mask => self.mask.cells(),
        }
    }

    #[inline]
    pub fn in_support(&self, support: Support, idx: usize) -> bool {
        match support {
            Support::Extended => self.ext[idx] <= EXT_LAYERS,
            Support::Mask => self.ext[idx] == 0,
        }
    }

    fn compute_dirichlet_ring(&self) -> Vec<usize> {
        let (nx, ny, nz) = self.grid.dims();
        self.mask
            .cells()
            .iter()
            .copied()
            .filter(|&idx| {
                let (i, j, k) = self.grid.coords(idx);
                let mut exposed = false;
                let neigh: [(i64, i64, i64); 6] = [
                    (-1, 0, 0),
                    (1, 0, 0),
                    (0, -1, 0),
                    (0, 1, 0),
                    (0, 0, -1),
                    (0, 0, 1),
                ];
                for (di, dj, dk) in neigh {
                    let (ii, jj, kk) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                    if ii < 0
                        || jj < 0
                        || kk < 0
                        || ii >= nx as i64
                        || jj >= ny as i64
                        || kk >= nz as i64
                        || !self.mask.contains(self.grid.idx(ii as usize, jj as usize, kk as usize))
                    {
                        exposed = true;
                        break;
                    }
                }
                exposed
            })
            .collect()
    }

    /// Mask voxels with an unmasked (or out-of-box) 6-neighbor: where
    /// Dirichlet data lives and what erosion peels.
    pub fn boundary_voxels(&self) -> &[usize] {
        &self.dirichlet
    }

    /// Mask eroded `depth` times with the 6-neighborhood; the region on which
    /// residuals are reported (depth 2 keeps every centered stencil of a
    /// mask-supported field away from one-sided fallbacks).
    pub fn interior_cells(&self, depth: usize) -> Vec<usize> {
        let (nx, ny, nz) = self.grid.dims();
        let mut inside: Vec<bool> = self.mask.inside_slice().to_vec();
        for _ in 0..depth {
            let prev = inside.clone();
            for &idx in self.mask.cells() {
                if !prev[idx] {
                    continue;
                }
                let (i, j, k) = self.grid.coords(idx);
                let neigh: [(i64, i64, i64); 6] = [
                    (-1, 0, 0),
                    (1, 0, 0),
                    (0, -1, 0),
                    (0, 1, 0),
                    (0, 0, -1),
                    (0, 0, 1),
                ];
                for (di, dj, dk) in neigh {
                    let (ii, jj, kk) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                    if ii < 0
                        || jj < 0
                        || kk < 0
                        || ii >= nx as i64
                        || jj >= ny as i64
                        || kk >= nz as i64
                        || !prev[self.grid.idx(ii as usize, jj as usize, kk as usize)]
                    {
                        inside[idx] = false;
                        break;
                    }
                }
            }
        }
        (0..inside.len()).filter(|&i| inside[i]).collect()
    }
}

/// Where a field's samples are meaningful.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Support {
    /// Mask plus the 3-voxel dilation: analytic samples and integral-operator
    /// outputs. Stencils stay centered on the whole mask.
    Extended,
    /// Mask only: PDE solves and anything derived from them. Stencils fall
    /// back to one-sided differences at the mask edge.
    Mask,
}

impl Support {
    pub fn meet(self, other: Support) -> Support {
        if self == Support::Mask || other == Support::Mask {
            Support::Mask
        } else {
            Support::Extended
        }
    }
}

/// A scalar (1), vector (3) or quaternion (4) field sampled at voxel centers,
/// stored interleaved over the full grid box (zero off-support).
#[derive(Clone, Debug)]
pub struct Field {
    dom: Arc<StarDomain>,
    comps: usize,
    data: Vec<f64>,
    support: Support,
}

impl Field {
    pub fn zeros(dom: &Arc<StarDomain>, comps: usize, support: Support) -> Field {
        assert!(matches!(comps, 1 | 3 | 4), "field components must be 1, 3 or 4");
        Field {
            dom: Arc::clone(dom),
            comps,
            data: vec![0.0; dom.grid().len() * comps],
            support,
        }
    }

    pub fn from_scalar_fn(dom: &Arc<StarDomain>, f: impl Fn(Vec3) -> f64 + Sync) -> Field {
        let mut out = Field::zeros(dom, 1, Support::Extended);
        for &idx in dom.cells_for(Support::Extended) {
            out.data[idx] = f(dom.grid().center_of(idx));
        }
        out
    }

    pub fn from_vector_fn(dom: &Arc<StarDomain>, f: impl Fn(Vec3) -> Vec3 + Sync) -> Field {
        let mut out = Field::zeros(dom, 3, Support::Extended);
        for &idx in dom.cells_for(Support::Extended) {
            let v = f(dom.grid().center_of(idx));
            out.data[idx * 3] = v.x;
            out.data[idx * 3 + 1] = v.y;
            out.data[idx * 3 + 2] = v.z;
        }
        out
    }

    pub fn from_quat_fn(dom: &Arc<StarDomain>, f: impl Fn(Vec3) -> Quat + Sync) -> Field {
        let mut out = Field::zeros(dom, 4, Support::Extended);
        for &idx in dom.cells_for(Support::Extended) {
            let q = f(dom.grid().center_of(idx));
            out.data[idx * 4] = q.s;
            out.data[idx * 4 + 1] = q.v.x;
            out.data[idx * 4 + 2] = q.v.y;
            out.data[idx * 4 + 3] = q.v.z;
        }
        out
    }

    pub fn domain(&self) -> &Arc<StarDomain> {
        &self.dom
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn set_support(&mut self, support: Support) {
        self.support = support;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, idx: usize, c: usize) -> f64 {
        self.data[idx * self.comps + c]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, c: usize, v: f64) {
        self.data[idx * self.comps + c] = v;
    }

    #[inline]
    pub fn scalar_at(&self, idx: usize) -> f64 {
        debug_assert_eq!(self.comps, 1);
        self.data[idx]
    }

    #[inline]
    pub fn vec3_at(&self, idx: usize) -> Vec3 {
        debug_assert_eq!(self.comps, 3);
        vec3(
            self.data[idx * 3],
            self.data[idx * 3 + 1],
            self.data[idx * 3 + 2],
        )
    }

    #[inline]
    pub fn set_vec3(&mut self, idx: usize, v: Vec3) {
        debug_assert_eq!(self.comps, 3);
        self.data[idx * 3] = v.x;
        self.data[idx * 3 + 1] = v.y;
        self.data[idx * 3 + 2] = v.z;
    }

    #[inline]
    pub fn quat_at(&self, idx: usize) -> Quat {
        match self.comps {
            4 => Quat::from_array([
                self.data[idx * 4],
                self.data[idx * 4 + 1],
                self.data[idx * 4 + 2],
                self.data[idx * 4 + 3],
            ]),
            3 => Quat::vector(self.vec3_at(idx)),
            1 => Quat::scalar(self.data[idx]),
            _ => unreachable!(),
        }
    }

    #[inline]
    pub fn set_quat(&mut self, idx: usize, q: Quat) {
        debug_assert_eq!(self.comps, 4);
        self.data[idx * 4] = q.s;
        self.data[idx * 4 + 1] = q.v.x;
        self.data[idx * 4 + 2] = q.v.y;
        self.data[idx * 4 + 3] = q.v.z;
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        if !Arc::ptr_eq(&self.dom, &other.dom) && self.dom.grid() != other.dom.grid() {
            return Err(Error::GridMismatch);
        }
        if self.comps != other.comps {
            return Err(Error::ComponentMismatch { expected: self.comps, got: other.comps });
        }
        Ok(())
    }

    /// self + scale * other.
    pub fn axpy(&self, scale: f64, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.support = self.support.meet(other.support);
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(out)
    }

    pub fn scaled(&self, k: f64) -> Field {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= k;
        }
        out
    }

    /// Pointwise multiply by a scalar field.
    pub fn mul_scalar_field(&self, s: &Field) -> Result<Field> {
        if s.comps != 1 {
            return Err(Error::ComponentMismatch { expected: 1, got: s.comps });
        }
        if !Arc::ptr_eq(&self.dom, &s.dom) && self.dom.grid() != s.dom.grid() {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        out.support = self.support.meet(s.support);
        for idx in 0..self.dom.grid().len() {
            let f = s.data[idx];
            for c in 0..self.comps {
                out.data[idx * self.comps + c] *= f;
            }
        }
        Ok(out)
    }

    /// Trilinear interpolation of all components at `p`. Errors outside the
    /// grid box; cells straddling the support edge read extended data, which
    /// is why samplers fill the halo.
    pub fn interp(&self, p: Vec3) -> Result<[f64; 4]> {
        let g = self.dom.grid();
        let (nx, ny, nz) = g.dims();
        let u = (p - g.origin()) / g.spacing();
        let fl = [u.x.floor(), u.y.floor(), u.z.floor()];
        let dims = [nx, ny, nz];
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let mut b = fl[a];
            let coord = [u.x, u.y, u.z][a];
            // Clamp points sitting exactly on the last plane into the final cell.
            if b >= (dims[a] - 1) as f64 && coord <= (dims[a] - 1) as f64 + 1e-12 {
                b = (dims[a] - 2) as f64;
            }
            if b < 0.0 {
                if coord >= -1e-12 {
                    b = 0.0;
                } else {
                    return Err(Error::OutOfGrid(p.x, p.y, p.z));
                }
            }
            if b > (dims[a] - 2) as f64 {
                return Err(Error::OutOfGrid(p.x, p.y, p.z));
            }
            base[a] = b as usize;
            frac[a] = (coord - b).clamp(0.0, 1.0);
        }
        let mut out = [0.0f64; 4];
        for dz in 0..2 {
            let wz = if dz == 0 { 1.0 - frac[2] } else { frac[2] };
            for dy in 0..2 {
                let wy = if dy == 0 { 1.0 - frac[1] } else { frac[1] };
                for dx in 0..2 {
                    let wx = if dx == 0 { 1.0 - frac[0] } else { frac[0] };
                    let w = wx * wy * wz;
                    if w == 0.0 {
                        continue;
                    }
                    let idx = g.idx(base[0] + dx, base[1] + dy, base[2] + dz);
                    for c in 0..self.comps {
                        out[c] += w * self.data[idx * self.comps + c];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn interp_scalar(&self, p: Vec3) -> Result<f64> {
        Ok(self.interp(p)?[0])
    }

    pub fn interp_vec3(&self, p: Vec3) -> Result<Vec3> {
        let a = self.interp(p)?;
        Ok(vec3(a[0], a[1], a[2]))
    }
}

/// Surface quadrature: points, outward normals and weights.
#[derive(Clone, Debug)]
pub struct BoundarySet {
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub kind: BoundaryKind,
}

#[derive(Clone, Debug)]
pub enum BoundaryKind {
    /// Analytic sphere rule: Gauss-Legendre in cos(theta) x uniform phi.
    Sphere { center: Vec3, radius: f64, ntheta: usize, nphi: usize },
    /// Exposed voxel faces (h^2 each).
    Faces,
}

impl BoundarySet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Values attached to a boundary quadrature set (1 or 3 components).
#[derive(Clone, Debug)]
pub struct BoundaryField {
    set: Arc<BoundarySet>,
    comps: usize,
    values: Vec<f64>,
}

impl BoundaryField {
    pub fn zeros(set: &Arc<BoundarySet>, comps: usize) -> BoundaryField {
        assert!(matches!(comps, 1 | 3));
        BoundaryField {
            set: Arc::clone(set),
            comps,
            values: vec![0.0; set.len() * comps],
        }
    }

    pub fn from_scalar_fn(set: &Arc<BoundarySet>, f: impl Fn(Vec3) -> f64) -> BoundaryField {
        let mut out = Self::zeros(set, 1);
        for (q, &p) in set.points.iter().enumerate() {
            out.values[q] = f(p);
        }
        out
    }

    pub fn from_vector_fn(set: &Arc<BoundarySet>, f: impl Fn(Vec3) -> Vec3) -> BoundaryField {
        let mut out = Self::zeros(set, 3);
        for (q, &p) in set.points.iter().enumerate() {
            let v = f(p);
            out.values[q * 3] = v.x;
            out.values[q * 3 + 1] = v.y;
            out.values[q * 3 + 2] = v.z;
        }
        out
    }

    pub fn set(&self) -> &Arc<BoundarySet> {
        &self.set
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn scalar_at(&self, q: usize) -> f64 {
        debug_assert_eq!(self.comps, 1);
        self.values[q]
    }

    pub fn vec3_at(&self, q: usize) -> Vec3 {
        debug_assert_eq!(self.comps, 3);
        vec3(self.values[q * 3], self.values[q * 3 + 1], self.values[q * 3 + 2])
    }

    /// Normal trace w . eta as a scalar boundary field.
    pub fn dot_normal(&self) -> BoundaryField {
        assert_eq!(self.comps, 3);
        let mut out = BoundaryField::zeros(&self.set, 1);
        for q in 0..self.set.len() {
            out.values[q] = self.vec3_at(q).dot(self.set.normals[q]);
        }
        out
    }

    /// Tangential trace w x eta as a vector boundary field.
    pub fn cross_normal(&self) -> BoundaryField {
        assert_eq!(self.comps, 3);
        let mut out = BoundaryField::zeros(&self.set, 3);
        for q in 0..self.set.len() {
            let v = self.vec3_at(q).cross(self.set.normals[q]);
            out.values[q * 3] = v.x;
            out.values[q * 3 + 1] = v.y;
            out.values[q * 3 + 2] = v.z;
        }
        out
    }
}

/// Boundary quadrature for a domain. Balls get the analytic lat-long rule
/// (2 res x 4 res points, total weight exactly 4 pi r^2); anything else uses
/// exposed voxel faces (total weight = face count * h^2, exact for boxes).
pub fn extract_boundary(dom: &Arc<StarDomain>) -> Result<Arc<BoundarySet>> {
    match *dom.shape() {
        Shape::Ball { center, radius } => {
            let ntheta = 2 * dom.resolution();
            let nphi = 4 * dom.resolution();
            let gl = crate::gauss::RayQuadrature::gauss_legendre(ntheta.max(8))?;
            let mut points = Vec::with_capacity(ntheta * nphi);
            let mut normals = Vec::with_capacity(ntheta * nphi);
            let mut weights = Vec::with_capacity(ntheta * nphi);
            for (tq, (&t01, &wt)) in gl.nodes().iter().zip(gl.weights()).enumerate() {
                let _ = tq;
                // Map the [0,1] rule back to cos(theta) in [-1,1].
                let c = 2.0 * t01 - 1.0;
                let wc = 2.0 * wt;
                let s = (1.0 - c * c).max(0.0).sqrt();
                for p in 0..nphi {
                    let phi = (p as f64 + 0.5) * std::f64::consts::TAU / nphi as f64;
                    let n = vec3(s * phi.cos(), s * phi.sin(), c);
                    points.push(center + n * radius);
                    normals.push(n);
                    weights.push(wc * std::f64::consts::TAU / nphi as f64 * radius * radius);
                }
            }
            Ok(Arc::new(BoundarySet {
                points,
                normals,
                weights,
                kind: BoundaryKind::Sphere { center, radius, ntheta: ntheta.max(8), nphi },
            }))
        }
        _ => {
            let g = dom.grid();
            let (nx, ny, nz) = g.dims();
            let h = g.spacing();
            let mut points = Vec::new();
            let mut normals = Vec::new();
            let mut weights = Vec::new();
            let dirs: [(i64, i64, i64); 6] = [
                (-1, 0, 0),
                (1, 0, 0),
                (0, -1, 0),
                (0, 1, 0),
                (0, 0, -1),
                (0, 0, 1),
            ];
            for &idx in dom.mask().cells() {
                let (i, j, k) = g.coords(idx);
                let x = g.center_of(idx);
                for (di, dj, dk) in dirs {
                    let (ii, jj, kk) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                    let outside = ii < 0
                        || jj < 0
                        || kk < 0
                        || ii >= nx as i64
                        || jj >= ny as i64
                        || kk >= nz as i64
                        || !dom.mask().contains(g.idx(ii as usize, jj as usize, kk as usize));
                    if outside {
                        let n = vec3(di as f64, dj as f64, dk as f64);
                        points.push(x + n * (h / 2.0));
                        normals.push(n);
                        weights.push(h * h);
                    }
                }
            }
            if points.is_empty() {
                return Err(Error::EmptyMask);
            }
            Ok(Arc::new(BoundarySet { points, normals, weights, kind: BoundaryKind::Faces }))
        }
    }
}
