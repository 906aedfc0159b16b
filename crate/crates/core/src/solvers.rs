//! Constructive solvers built from the integral operators: curl inverse,
//! div-curl general solution, double-curl inverse, boundary reconstruction,
//! the Grigor'ev formula, Vekua completion/antiderivative, the Hilbert
//! transform and the static Maxwell system.
//!
//! Every solver is a pure pipeline: gates (precondition residual checks) first,
//! then quadrature passes, then a [`SolveReport`] with named residuals over
//! both the full mask and the twice-eroded interior. Arbitrary harmonic gauge
//! terms default to zero so outputs are deterministic; callers exercise the
//! gauge freedom explicitly.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::conductivity::{
    compact_residual, solve_conductivity, solve_conductivity_from_boundary, Conductivity,
};
use crate::diffops;
use crate::error::{Error, Result};
use crate::gauss::RayQuadrature;
use crate::grid::{BoundaryField, Field, StarDomain, Support};
use crate::integral::{self, QuadratureConfig};
use crate::rayops;
use crate::vec3::{Quat, Vec3};
use crate::verify::{self, ResidualCheck, ResidualSuite, ZERO_SCALE};

/// Default relative tolerance for precondition gates (solenoidal, harmonic,
/// conductivity-equation, antiderivative compatibility).
pub const DEFAULT_GATE_TOL: f64 = 5e-2;
/// Default tolerance recorded on report residuals.
pub const DEFAULT_REPORT_TOL: f64 = 8e-2;
/// Tolerance multiplier for full-region (ring-inclusive) residual checks.
pub const FULL_REGION_SLACK: f64 = 5.0;

#[derive(Clone)]
pub struct SolveOptions {
    pub gate_tol: f64,
    pub report_tol: f64,
    pub quadrature: QuadratureConfig,
    pub rule: RayQuadrature,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            gate_tol: DEFAULT_GATE_TOL,
            report_tol: DEFAULT_REPORT_TOL,
            quadrature: QuadratureConfig::default(),
            rule: RayQuadrature::default_rule(),
        }
    }
}

impl SolveOptions {
    pub fn with_gate_tol(mut self, tol: f64) -> Self {
        self.gate_tol = tol;
        self
    }

    pub fn with_report_tol(mut self, tol: f64) -> Self {
        self.report_tol = tol;
        self
    }
}

/// What a solver did and how well its output satisfies the equations it
/// claims to solve, ready for JSON.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub solver: String,
    pub gauge: String,
    pub checks: ResidualSuite,
    pub iterations: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
    pub runtime_seconds: f64,
}

impl SolveReport {
    fn new(solver: &str) -> SolveReport {
        SolveReport {
            solver: solver.to_string(),
            gauge: "h = 0".to_string(),
            checks: ResidualSuite::new(),
            iterations: BTreeMap::new(),
            warnings: Vec::new(),
            runtime_seconds: 0.0,
        }
    }

    fn finish(mut self, start: Instant) -> SolveReport {
        self.runtime_seconds = start.elapsed().as_secs_f64();
        self
    }

    pub fn all_pass(&self) -> bool {
        self.checks.all_pass()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub struct Solution {
    pub w: Field,
    pub report: SolveReport,
}

pub struct MaxwellSolution {
    pub e: Field,
    pub h: Field,
    pub b: Field,
    /// The scalar potential whose gradient corrects B into H.
    pub potential: Field,
    pub report: SolveReport,
}

pub struct HilbertSolution {
    /// Tangential trace of the completed vector part at the boundary nodes.
    pub trace: BoundaryField,
    /// The completed quaternion field W = W0 + vec W.
    pub w: Field,
    pub report: SolveReport,
}

// ---------------------------------------------------------------------------
// small field utilities

fn build_field(
    dom: &Arc<StarDomain>,
    comps: usize,
    support: Support,
    f: impl Fn(usize, Vec3) -> [f64; 4],
) -> Field {
    let mut out = Field::zeros(dom, comps, support);
    for &idx in dom.cells_for(support) {
        let row = f(idx, dom.grid().center_of(idx));
        for c in 0..comps {
            out.set(idx, c, row[c]);
        }
    }
    out
}

/// Componentwise division by a positive scalar field, written only on the
/// support cells so nothing off-support turns into inf/NaN.
fn div_by_scalar(v: &Field, f: &Field) -> Field {
    assert_eq!(f.comps(), 1);
    let dom = v.domain();
    let support = v.support().meet(f.support());
    let comps = v.comps();
    let mut out = Field::zeros(dom, comps, support);
    for &idx in dom.cells_for(support) {
        let d = f.get(idx, 0);
        for c in 0..comps {
            out.set(idx, c, v.get(idx, c) / d);
        }
    }
    out
}

/// Pack an optional scalar part and an optional vector part into a
/// quaternion field. Each part is copied over its own support cells (so an
/// extended vector part stays usable for interpolation even when the scalar
/// part only lives on the mask); the combined support is the meet.
pub fn compose_quat(scalar: Option<&Field>, vector: Option<&Field>) -> Field {
    let (dom, mut support) = match (scalar, vector) {
        (Some(s), Some(v)) => {
            assert_eq!(s.comps(), 1);
            assert_eq!(v.comps(), 3);
            (s.domain(), s.support().meet(v.support()))
        }
        (Some(s), None) => {
            assert_eq!(s.comps(), 1);
            (s.domain(), s.support())
        }
        (None, Some(v)) => {
            assert_eq!(v.comps(), 3);
            (v.domain(), v.support())
        }
        (None, None) => panic!("compose_quat needs at least one part"),
    };
    if scalar.is_none() || vector.is_none() {
        support = match (scalar, vector) {
            (Some(s), None) => s.support(),
            (None, Some(v)) => v.support(),
            _ => support,
        };
    }
    let mut out = Field::zeros(dom, 4, support);
    if let Some(s) = scalar {
        for &idx in dom.cells_for(s.support()) {
            out.set(idx, 0, s.get(idx, 0));
        }
    }
    if let Some(v) = vector {
        for &idx in dom.cells_for(v.support()) {
            for c in 0..3 {
                out.set(idx, c + 1, v.get(idx, c));
            }
        }
    }
    out
}

fn scale_chain(primary: f64, fallback: f64) -> f64 {
    if primary >= ZERO_SCALE {
        primary
    } else {
        fallback
    }
}

// ---------------------------------------------------------------------------
// precondition gates

fn gate_solenoidal(g: &Field, tol: f64) -> Result<()> {
    assert_eq!(g.comps(), 3);
    let interior = g.domain().interior_cells(2);
    let rel = verify::relative(
        verify::l2_region(&diffops::divergence(g), &interior),
        verify::jacobian_scale(g, &interior),
    );
    if rel > tol {
        return Err(Error::Precondition {
            check: "solenoidal datum (div g = 0)".into(),
            relative: rel,
            tolerance: tol,
        });
    }
    Ok(())
}

fn component(v: &Field, c: usize) -> Field {
    let dom = v.domain();
    let mut out = Field::zeros(dom, 1, v.support());
    for &idx in dom.cells_for(v.support()) {
        out.set(idx, 0, v.get(idx, c));
    }
    out
}

/// Scale for second-order residuals: the L2 norm of all second derivatives.
fn hessian_scale(v: &Field, region: &[usize]) -> f64 {
    let mut acc = 0.0;
    for c in 0..v.comps() {
        let grad = diffops::gradient(&component(v, c));
        let s = verify::jacobian_scale(&grad, region);
        acc += s * s;
    }
    acc.sqrt()
}

fn gate_harmonic(v: &Field, what: &str, tol: f64) -> Result<()> {
    let interior = v.domain().interior_cells(2);
    let rel = verify::relative(
        verify::l2_region(&diffops::laplacian(v), &interior),
        hessian_scale(v, &interior),
    );
    if rel > tol {
        return Err(Error::Precondition {
            check: format!("harmonic datum ({what})"),
            relative: rel,
            tolerance: tol,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// residual recording

struct Recorder {
    mask: Vec<usize>,
    interior: Vec<usize>,
    tol: f64,
}

impl Recorder {
    fn of(dom: &StarDomain, tol: f64) -> Recorder {
        Recorder {
            mask: dom.mask().cells().to_vec(),
            interior: dom.interior_cells(2),
            tol,
        }
    }

    /// Record `name`_interior and `name`_full for a residual field, with
    /// per-region scales. "full" covers every masked voxel including the
    /// boundary ring, where one-sided stencils and the quadrature boundary
    /// layer inflate residuals; its tolerance carries a fixed slack factor so
    /// the full-region numbers stay visible without failing reports whose
    /// interior behavior is sound. Equation-level acceptance always reads the
    /// interior checks.
    fn push(
        &self,
        suite: &mut ResidualSuite,
        name: &str,
        res: &Field,
        scale: impl Fn(&[usize]) -> f64,
    ) {
        suite.push(
            &format!("{name}_interior"),
            ResidualCheck::new(
                verify::l2_region(res, &self.interior),
                scale(&self.interior),
                "interior",
                self.tol,
            ),
        );
        suite.push(
            &format!("{name}_full"),
            ResidualCheck::new(
                verify::l2_region(res, &self.mask),
                scale(&self.mask),
                "full",
                FULL_REGION_SLACK * self.tol,
            ),
        );
    }

    /// Interior-only variant for second-order stencil compositions (double
    /// curls): composed one-sided fallbacks at the staircase are not a
    /// consistent discretization of the operator, so a judged full-region
    /// number would be noise rather than a boundary-quality signal.
    fn push_interior(
        &self,
        suite: &mut ResidualSuite,
        name: &str,
        res: &Field,
        scale: impl Fn(&[usize]) -> f64,
    ) {
        suite.push(
            &format!("{name}_interior"),
            ResidualCheck::new(
                verify::l2_region(res, &self.interior),
                scale(&self.interior),
                "interior",
                self.tol,
            ),
        );
    }
}

/// div/curl residuals against (optional) data, recorded under the usual
/// scale chain: data norm first, then the other datum, then the Jacobian of
/// the solution for fully homogeneous equations.
fn divcurl_checks(
    report: &mut SolveReport,
    w: &Field,
    g0: Option<&Field>,
    g: Option<&Field>,
    rec: &Recorder,
) {
    let div_w = diffops::divergence(w);
    let curl_w = diffops::curl(w);
    let div_res = match g0 {
        Some(g0) => div_w.axpy(-1.0, g0).expect("same grid"),
        None => div_w,
    };
    let curl_res = match g {
        Some(g) => curl_w.axpy(-1.0, g).expect("same grid"),
        None => curl_w,
    };
    rec.push(&mut report.checks, "div", &div_res, |r| {
        let pri = g0.map_or(0.0, |f| verify::l2_region(f, r));
        let sec = g.map_or(0.0, |f| verify::l2_region(f, r));
        scale_chain(pri, scale_chain(sec, verify::jacobian_scale(w, r)))
    });
    rec.push(&mut report.checks, "curl", &curl_res, |r| {
        let pri = g.map_or(0.0, |f| verify::l2_region(f, r));
        let sec = g0.map_or(0.0, |f| verify::l2_region(f, r));
        scale_chain(pri, scale_chain(sec, verify::jacobian_scale(w, r)))
    });
}

// ---------------------------------------------------------------------------
// curl inverse and div-curl

/// The ungated composition T0,3[g] - S[T0,1[g]]. Shared by every solver whose
/// intermediate data is solenoidal by construction; public entry points gate.
pub fn curl_inverse_core(g: &Field, opts: &SolveOptions) -> Result<Field> {
    let parts = integral::teodorescu_components(g, &opts.quadrature)?;
    let grad_t1 = diffops::gradient(&parts.t1);
    let s = rayops::completion_from_gradient(&grad_t1, &opts.rule);
    parts.t3.axpy(-1.0, &s)
}

/// Right inverse of the curl on solenoidal data: w with curl w = g,
/// div w = 0, gauge fixed by the zero harmonic term.
pub fn curl_inverse(g: &Field, opts: &SolveOptions) -> Result<Solution> {
    let start = Instant::now();
    assert_eq!(g.comps(), 3, "curl_inverse expects a vector field");
    gate_solenoidal(g, opts.gate_tol)?;
    let w = curl_inverse_core(g, opts)?;
    let mut report = SolveReport::new("curl_inverse");
    let rec = Recorder::of(g.domain(), opts.report_tol);
    divcurl_checks(&mut report, &w, None, Some(g), &rec);
    Ok(Solution { w, report: report.finish(start) })
}

/// General solution of div w = g0, curl w = g:
/// w = -T0,2[g0] + T0,3[g] - S[T0,1[g]] + grad h.
pub fn solve_divcurl(
    g0: &Field,
    g: &Field,
    gauge: Option<&Field>,
    opts: &SolveOptions,
) -> Result<Solution> {
    let start = Instant::now();
    assert_eq!(g0.comps(), 1);
    assert_eq!(g.comps(), 3);
    gate_solenoidal(g, opts.gate_tol)?;
    if let Some(h) = gauge {
        gate_harmonic(h, "gauge h", opts.gate_tol)?;
    }
    // One combined kernel pass over the quaternion datum g0 + g.
    let datum = compose_quat(Some(g0), Some(g));
    let parts = integral::teodorescu_components(&datum, &opts.quadrature)?;
    let grad_t1 = diffops::gradient(&parts.t1);
    let s = rayops::completion_from_gradient(&grad_t1, &opts.rule);
    let mut w = parts.t3.axpy(-1.0, &s)?.axpy(-1.0, &parts.t2)?;
    let mut report = SolveReport::new("solve_divcurl");
    if let Some(h) = gauge {
        w = w.axpy(1.0, &diffops::gradient(h))?;
        report.gauge = "caller-supplied h".to_string();
    }
    let rec = Recorder::of(g.domain(), opts.report_tol);
    divcurl_checks(&mut report, &w, Some(g0), Some(g), &rec);
    Ok(Solution { w, report: report.finish(start) })
}

/// Right inverse of curl(curl .) on solenoidal data:
/// w = -L[g] - (|x'|^2 / 2) * int_0^1 t (grad T0,1[g])(a + t x') dt,
/// the regularized alpha = -1 moment with the |x'|^2 factor folded in.
pub fn double_curl_inverse(g: &Field, opts: &SolveOptions) -> Result<Solution> {
    let start = Instant::now();
    assert_eq!(g.comps(), 3);
    gate_solenoidal(g, opts.gate_tol)?;
    let dom = g.domain();
    let newton = integral::newton_potential(g, &opts.quadrature)?;
    let parts = integral::teodorescu_components(g, &opts.quadrature)?;
    let grad_t1 = diffops::gradient(&parts.t1);
    let moment = rayops::radial_moment_weighted(|t| t, &grad_t1, &opts.rule);
    let a = dom.star_center();
    let w = build_field(dom, 3, newton.support().meet(moment.support()), |idx, x| {
        let r2 = (x - a).norm_sq();
        let v = -newton.vec3_at(idx) - moment.vec3_at(idx) * (0.5 * r2);
        [v.x, v.y, v.z, 0.0]
    });
    let mut report = SolveReport::new("double_curl_inverse");
    let rec = Recorder::of(dom, opts.report_tol);
    let curl_curl = diffops::curl(&diffops::curl(&w));
    let res = curl_curl.axpy(-1.0, g)?;
    rec.push_interior(&mut report.checks, "curlcurl", &res, |r| verify::l2_region(g, r));
    Ok(Solution { w, report: report.finish(start) })
}

/// Reconstruction from tangential-and-normal boundary data:
/// w = M[phi x eta] - S[M[phi . eta]]. When phi is the trace of a
/// divergence-free irrotational-completable field g, curl w = g and
/// div w = 0 in the domain.
pub fn solve_divcurl_boundary(
    phi: &BoundaryField,
    dom: &Arc<StarDomain>,
    opts: &SolveOptions,
) -> Result<Solution> {
    let start = Instant::now();
    assert_eq!(phi.comps(), 3, "boundary datum must be a vector trace");
    let (m_cross, near_cross) = integral::single_layer(&phi.cross_normal(), dom);
    let (m_dot, near_dot) = integral::single_layer(&phi.dot_normal(), dom);
    let s = rayops::completion_from_gradient(&diffops::gradient(&m_dot), &opts.rule);
    let w = m_cross.axpy(-1.0, &s)?;
    let mut report = SolveReport::new("solve_divcurl_boundary");
    if near_cross + near_dot > 0 {
        report.warnings.push(format!(
            "{} voxels within h/2 of a boundary quadrature node; single-layer values there are inaccurate",
            near_cross.max(near_dot)
        ));
    }
    let rec = Recorder::of(dom, opts.report_tol);
    divcurl_checks(&mut report, &w, None, None, &rec);
    Ok(Solution { w, report: report.finish(start) })
}

/// Grigor'ev's ray-integral solution of the div-curl system for harmonic
/// data: w = -x' x I^1[g] + grad( (|x'|^2/4) I^{1/2}[ g0 - x' . I^2[curl g] ] ).
pub fn grigorev_solution(g0: &Field, g: &Field, opts: &SolveOptions) -> Result<Solution> {
    let start = Instant::now();
    assert_eq!(g0.comps(), 1);
    assert_eq!(g.comps(), 3);
    gate_solenoidal(g, opts.gate_tol)?;
    gate_harmonic(g0, "scalar datum g0", opts.gate_tol)?;
    gate_harmonic(g, "vector datum g", opts.gate_tol)?;
    let dom = g.domain();
    let a = dom.star_center();
    let rot = diffops::curl(g);
    let i2 = rayops::radial_moment(2.0, &rot, &opts.rule)?;
    let inner_support = g0.support().meet(i2.support());
    let inner = build_field(dom, 1, inner_support, |idx, x| {
        [g0.get(idx, 0) - (x - a).dot(i2.vec3_at(idx)), 0.0, 0.0, 0.0]
    });
    let ihalf = rayops::radial_moment(0.5, &inner, &opts.rule)?;
    let pot = build_field(dom, 1, ihalf.support(), |idx, x| {
        [(x - a).norm_sq() / 4.0 * ihalf.get(idx, 0), 0.0, 0.0, 0.0]
    });
    let grad_pot = diffops::gradient(&pot);
    let i1 = rayops::radial_moment(1.0, g, &opts.rule)?;
    let w = build_field(dom, 3, grad_pot.support().meet(i1.support()), |idx, x| {
        let v = grad_pot.vec3_at(idx) - (x - a).cross(i1.vec3_at(idx));
        [v.x, v.y, v.z, 0.0]
    });
    let mut report = SolveReport::new("grigorev_solution");
    let rec = Recorder::of(dom, opts.report_tol);
    divcurl_checks(&mut report, &w, Some(g0), Some(g), &rec);
    Ok(Solution { w, report: report.finish(start) })
}

// ---------------------------------------------------------------------------
// Vekua layer

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VekuaOperatorTag {
    /// V W = DW - (Df/f) conj(W)
    V,
    /// Vbar W = WD - conj(W) (Df/f)
    VBar,
    /// V1 W = WD + (Df/f) W
    V1,
    /// Vbar1 W = DW + W (Df/f)
    VBar1,
}

/// Df/f as a vector field (the logarithmic derivative of the conductivity
/// factor): the pure-vector quaternion grad f / f.
pub fn log_derivative(cond: &Conductivity) -> Field {
    div_by_scalar(&diffops::gradient(cond.f()), cond.f())
}

/// Apply one of the four Vekua operators. Scalar/vector inputs embed as
/// quaternions; the result always has four components.
pub fn vekua_operator_apply(tag: VekuaOperatorTag, cond: &Conductivity, w: &Field) -> Field {
    let dom = w.domain();
    let dff = log_derivative(cond);
    let dw = diffops::dirac_left(w);
    let wd = diffops::dirac_right(w);
    let support = w.support().meet(dff.support());
    build_field(dom, 4, support, |idx, _| {
        let m = Quat::vector(dff.vec3_at(idx));
        let wq = w.quat_at(idx);
        let out = match tag {
            VekuaOperatorTag::V => dw.quat_at(idx) - m * wq.conj(),
            VekuaOperatorTag::VBar => wd.quat_at(idx) - wq.conj() * m,
            VekuaOperatorTag::V1 => wd.quat_at(idx) + m * wq,
            VekuaOperatorTag::VBar1 => dw.quat_at(idx) + wq * m,
        };
        out.to_array()
    })
}

/// Complete a conductivity-equation solution W0 to a full Vekua solution
/// W = W0 + vec W with V W = 0: the vector part is
/// (1/f) (T0,3[-f^2 grad(W0/f)] - S[T0,1[-f^2 grad(W0/f)]]).
pub fn vekua_complete(cond: &Conductivity, w0: &Field, opts: &SolveOptions) -> Result<Solution> {
    let start = Instant::now();
    assert_eq!(w0.comps(), 1, "vekua_complete expects the scalar part");
    let dom = w0.domain();
    let u = div_by_scalar(w0, cond.f());
    // The equation is judged by the solver's own 7-point scheme so that
    // conjugate-gradient solutions (which satisfy it to the CG tolerance)
    // pass the gate; the wide centered composition div(grad .) would read
    // the first-order Dirichlet ring transfer from two cells in and reject
    // pipeline data that is discretely exact.
    let (cres, cparts) = compact_residual(cond, &u);
    let interior = dom.interior_cells(2);
    let cresidual = verify::l2_region(&cres, &interior);
    let flux = diffops::gradient(&u).mul_scalar_field(cond.f_sq())?;
    // Scale floor for discretely exact solutions: with all per-axis flux
    // differences at rounding level the parts norm is conjugate-gradient
    // noise, and noise over noise is O(1); the floor ties exactness to the
    // grid-scale bound on flux variation instead.
    let floor = verify::EXACT_FLOOR * verify::l2_region(&flux, &interior) / dom.spacing();
    let cscale = verify::l2_region(&cparts, &interior).max(floor);
    let rel = verify::relative(cresidual, cscale);
    if rel > opts.gate_tol {
        return Err(Error::Precondition {
            check: "conductivity equation (div f^2 grad(W0/f) = 0)".into(),
            relative: rel,
            tolerance: opts.gate_tol,
        });
    }
    let core = curl_inverse_core(&flux.scaled(-1.0), opts)?;
    let wvec = div_by_scalar(&core, cond.f());
    let w = compose_quat(Some(w0), Some(&wvec));
    let mut report = SolveReport::new("vekua_complete");
    report.checks.push(
        "conductivity_interior",
        ResidualCheck::new(cresidual, cscale, "interior", opts.gate_tol),
    );
    let rec = Recorder::of(dom, opts.report_tol);
    let vw = vekua_operator_apply(VekuaOperatorTag::V, cond, &w);
    let dw = diffops::dirac_left(&w);
    rec.push(&mut report.checks, "vekua", &vw, |r| verify::l2_region(&dw, r));
    Ok(Solution { w, report: report.finish(start) })
}

/// Antiderivative of a purely vectorial Vekua datum G with Vbar1 G = 0:
/// W = (1/2) ( f A[G/f] - (1/f)(T0,3[fG] - S[T0,1[fG]]) ), so that
/// V W = 0 and Vbar W = G.
pub fn vekua_antiderivative(cond: &Conductivity, g: &Field, opts: &SolveOptions) -> Result<Solution> {
    let start = Instant::now();
    assert_eq!(g.comps(), 3, "vekua_antiderivative expects a vector datum");
    let dom = g.domain();
    let interior = dom.interior_cells(2);
    let vbar1 = vekua_operator_apply(VekuaOperatorTag::VBar1, cond, g);
    let dff = log_derivative(cond);
    let zero_order = build_field(dom, 4, g.support().meet(dff.support()), |idx, _| {
        (Quat::vector(g.vec3_at(idx)) * Quat::vector(dff.vec3_at(idx))).to_array()
    });
    let scale = verify::l2_region(&diffops::dirac_left(g), &interior)
        + verify::l2_region(&zero_order, &interior);
    let rel = verify::relative(verify::l2_region(&vbar1, &interior), scale);
    if rel > opts.gate_tol {
        return Err(Error::Precondition {
            check: "antiderivative datum (Vbar1 G = 0)".into(),
            relative: rel,
            tolerance: opts.gate_tol,
        });
    }
    let g_over_f = div_by_scalar(g, cond.f());
    let anti = rayops::antigradient(&g_over_f, &opts.rule, f64::INFINITY)?;
    let fg = g.mul_scalar_field(cond.f())?;
    let core = curl_inverse_core(&fg, opts)?;
    let w0 = anti.mul_scalar_field(cond.f())?.scaled(0.5);
    let wvec = div_by_scalar(&core, cond.f()).scaled(-0.5);
    let w = compose_quat(Some(&w0), Some(&wvec));
    let mut report = SolveReport::new("vekua_antiderivative");
    let rec = Recorder::of(dom, opts.report_tol);
    let vw = vekua_operator_apply(VekuaOperatorTag::V, cond, &w);
    let dw = diffops::dirac_left(&w);
    rec.push(&mut report.checks, "vekua_v", &vw, |r| verify::l2_region(&dw, r));
    let vbar_w = vekua_operator_apply(VekuaOperatorTag::VBar, cond, &w);
    let g_quat = compose_quat(None, Some(g));
    let vbar_res = vbar_w.axpy(-1.0, &g_quat)?;
    rec.push(&mut report.checks, "vekua_vbar", &vbar_res, |r| verify::l2_region(g, r));
    Ok(Solution { w, report: report.finish(start) })
}

/// Hilbert transform on the boundary: maps Dirichlet data phi to the
/// tangential trace of the completed Vekua solution, via the conductivity
/// solve u (boundary data phi/f), W0 = f u, completion, and trilinear
/// restriction at points pulled 1.5 h inward along the normal.
pub fn hilbert_transform(
    cond: &Conductivity,
    phi: &BoundaryField,
    dom: &Arc<StarDomain>,
    opts: &SolveOptions,
) -> Result<HilbertSolution> {
    let start = Instant::now();
    assert_eq!(phi.comps(), 1, "Hilbert transform expects scalar boundary data");
    let set = phi.set();
    let mut data = BoundaryField::zeros(set, 1);
    for q in 0..set.len() {
        let fval = cond.f().interp_scalar(set.points[q])?;
        data.values_mut()[q] = phi.scalar_at(q) / fval;
    }
    let rhs = Field::zeros(dom, 1, Support::Mask);
    let esol = solve_conductivity_from_boundary(cond, &rhs, &data)?;
    let w0 = esol.u.mul_scalar_field(cond.f())?;
    let vsol = vekua_complete(cond, &w0, opts)?;
    let h = dom.grid().spacing();
    let mut trace = BoundaryField::zeros(set, 3);
    for q in 0..set.len() {
        let p = set.points[q] - set.normals[q] * (1.5 * h);
        let row = vsol.w.interp(p)?;
        trace.values_mut()[q * 3] = row[1];
        trace.values_mut()[q * 3 + 1] = row[2];
        trace.values_mut()[q * 3 + 2] = row[3];
    }
    let mut report = vsol.report;
    report.solver = "hilbert_transform".to_string();
    report.iterations.insert("conductivity_cg".to_string(), esol.iterations);
    Ok(HilbertSolution { trace, w: vsol.w, report: report.finish(start) })
}

/// Static Maxwell system div(f^2 H) = 0, curl H = g, div E = 0,
/// curl E = f^2 H: B = curl_inverse(g); h from the inhomogeneous
/// conductivity equation div(f^2 grad h) = -grad(f^2) . B with h = 0 on the
/// ring; H = B + grad h; E = curl_inverse(f^2 H).
pub fn solve_maxwell(cond: &Conductivity, g: &Field, opts: &SolveOptions) -> Result<MaxwellSolution> {
    let start = Instant::now();
    assert_eq!(g.comps(), 3);
    gate_solenoidal(g, opts.gate_tol)?;
    let dom = g.domain();
    let b = curl_inverse_core(g, opts)?;
    let grad_f2 = diffops::gradient(cond.f_sq());
    let rhs = build_field(dom, 1, b.support().meet(grad_f2.support()), |idx, _| {
        [-grad_f2.vec3_at(idx).dot(b.vec3_at(idx)), 0.0, 0.0, 0.0]
    });
    let zeros = Field::zeros(dom, 1, Support::Mask);
    let esol = solve_conductivity(cond, &rhs, &zeros)?;
    let grad_h = diffops::gradient(&esol.u);
    let h_field = b.axpy(1.0, &grad_h)?;
    let f2h = h_field.mul_scalar_field(cond.f_sq())?;
    let e = curl_inverse_core(&f2h, opts)?;

    let mut report = SolveReport::new("solve_maxwell");
    report.iterations.insert("conductivity_cg".to_string(), esol.iterations);
    let rec = Recorder::of(dom, opts.report_tol);
    rec.push(
        &mut report.checks,
        "div_f2h",
        &diffops::divergence(&f2h),
        |r| verify::jacobian_scale(&f2h, r),
    );
    rec.push(&mut report.checks, "div_e", &diffops::divergence(&e), |r| {
        verify::jacobian_scale(&e, r)
    });
    let curl_h_res = diffops::curl(&h_field).axpy(-1.0, g)?;
    rec.push(&mut report.checks, "curl_h", &curl_h_res, |r| verify::l2_region(g, r));
    let curl_e_res = diffops::curl(&e).axpy(-1.0, &f2h)?;
    rec.push(&mut report.checks, "curl_e", &curl_e_res, |r| {
        verify::l2_region(&f2h, r)
    });
    let f_inv_sq = build_field(dom, 1, cond.f_sq().support(), |idx, _| {
        [1.0 / cond.f_sq().get(idx, 0), 0.0, 0.0, 0.0]
    });
    let double = diffops::curl(&diffops::curl(&e).mul_scalar_field(&f_inv_sq)?);
    let double_res = double.axpy(-1.0, g)?;
    rec.push_interior(&mut report.checks, "double_curl_e", &double_res, |r| {
        verify::l2_region(g, r)
    });
    Ok(MaxwellSolution {
        e,
        h: h_field,
        b,
        potential: esol.u,
        report: report.finish(start),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StarDomain;
    use crate::vec3::vec3;

    fn small_opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn curl_inverse_rejects_non_solenoidal() {
        let dom = StarDomain::ball(10, 1.0, Vec3::ZERO).unwrap();
        let g = Field::from_vector_fn(&dom, |x| x); // div = 3
        let err = match curl_inverse(&g, &small_opts()) {
            Err(e) => e,
            Ok(_) => panic!("solenoidal gate should reject g = x"),
        };
        assert!(err.is_precondition(), "got {err}");
    }

    #[test]
    fn zero_datum_gives_zero_solution() {
        let dom = StarDomain::ball(8, 1.0, Vec3::ZERO).unwrap();
        let g = Field::zeros(&dom, 3, Support::Extended);
        let sol = curl_inverse(&g, &small_opts()).unwrap();
        let m = verify::max_region(&sol.w, &dom.mask().cells().to_vec());
        assert!(m < 1e-13, "max {m}");
    }

    #[test]
    fn compose_quat_keeps_parts() {
        let dom = StarDomain::ball(8, 1.0, Vec3::ZERO).unwrap();
        let s = Field::from_scalar_fn(&dom, |x| x.x);
        let v = Field::from_vector_fn(&dom, |x| vec3(x.y, x.z, 1.0));
        let q = compose_quat(Some(&s), Some(&v));
        let idx = dom.mask().cells()[dom.mask().len() / 2];
        let x = dom.grid().center_of(idx);
        let got = q.quat_at(idx);
        assert!((got.s - x.x).abs() < 1e-15);
        assert!((got.v - vec3(x.y, x.z, 1.0)).norm() < 1e-15);
    }
}
