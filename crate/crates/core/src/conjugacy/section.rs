//! Root solves against the eigen-coordinates of `H` along invariant curves:
//! the transverse-intersection finder (unstable curve against a center-stable
//! leaf) and the section `σ` with `H ∘ σ = id`.

use super::SemiConjugacy;
use crate::dynamics::{bundle_direction, integrate_curve, Bundle, CurvePolyline, NilDiffeo};
use crate::error::{Error, Result};
use crate::heis::{frame_to_ambient, HPoint};

const CURVE_STEP: f64 = 0.005;
const FIELD_HORIZON: usize = 28;
const MAX_CURVE_LENGTH: f64 = 64.0;

/// Root solver along the unstable curve through a base point: the unstable
/// eigen-coordinate of `H` is strictly monotone there (checkable), so
/// `u_coord = target` has exactly one solution, found by bisection on the
/// polyline and a final field-integration refinement. The grown curve is
/// cached and extended on demand.
pub struct UnstableRootSolver {
    base: HPoint,
    curve: CurvePolyline,
    step: f64,
    horizon: usize,
}

impl UnstableRootSolver {
    pub fn new(f: &NilDiffeo, base: &HPoint, initial_length: f64) -> Result<Self> {
        let curve = crate::dynamics::grow_by_iteration(
            f,
            base,
            Bundle::Unstable,
            initial_length.max(1.0),
            CURVE_STEP,
            FIELD_HORIZON,
        )?;
        Ok(UnstableRootSolver {
            base: *base,
            curve,
            step: CURVE_STEP,
            horizon: FIELD_HORIZON,
        })
    }

    pub fn curve(&self) -> &CurvePolyline {
        &self.curve
    }

    /// Checks strict monotonicity of the u-coordinate along the polyline.
    pub fn check_monotone(&self, h: &SemiConjugacy) -> Result<()> {
        let mut prev = f64::NAN;
        let increasing = {
            let a = h.u_coord(&self.curve.start())?;
            let b = h.u_coord(&self.curve.end())?;
            b > a
        };
        for (i, p) in self.curve.points().iter().enumerate() {
            let c = h.u_coord(p)?;
            let c = if increasing { c } else { -c };
            if i > 0 && c <= prev {
                return Err(Error::GpsCheckFailed {
                    detail: format!("u-coordinate not strictly monotone at vertex {i}"),
                });
            }
            prev = c;
        }
        Ok(())
    }

    fn ensure_bracket(&mut self, f: &NilDiffeo, h: &SemiConjugacy, target: f64) -> Result<()> {
        loop {
            let lo = h.u_coord(&self.curve.start())?;
            let hi = h.u_coord(&self.curve.end())?;
            if (lo - target) * (hi - target) <= 0.0 {
                return Ok(());
            }
            let new_len = self.curve.arclength() * 1.8;
            if new_len > MAX_CURVE_LENGTH {
                return Err(Error::RootNotBracketed {
                    detail: format!(
                        "u-coordinate {target} not bracketed within curve length {MAX_CURVE_LENGTH}"
                    ),
                });
            }
            self.curve = crate::dynamics::grow_by_iteration(
                f,
                &self.base,
                Bundle::Unstable,
                new_len,
                self.step,
                self.horizon,
            )?;
        }
    }

    /// Solves `u_coord(H(r)) = target` on the curve and returns `r`.
    pub fn solve(&mut self, f: &NilDiffeo, h: &SemiConjugacy, target: f64) -> Result<HPoint> {
        self.ensure_bracket(f, h, target)?;
        let pts = self.curve.points();
        let mut prev_val = h.u_coord(&pts[0])?;
        let mut idx = None;
        for i in 0..pts.len() - 1 {
            let next_val = h.u_coord(&pts[i + 1])?;
            if (prev_val - target) * (next_val - target) <= 0.0 {
                idx = Some(i);
                break;
            }
            prev_val = next_val;
        }
        let i = idx.ok_or(Error::RootNotBracketed {
            detail: "bracket lost between vertices".into(),
        })?;
        let (a, b) = (pts[i], pts[i + 1]);
        refine_along_bundle(f, h, &a, &b, Bundle::Unstable, self.horizon, u_coord_of, target)
    }
}

fn u_coord_of(h: &SemiConjugacy, p: &HPoint) -> Result<f64> {
    h.u_coord(p)
}

fn s_coord_of(h: &SemiConjugacy, p: &HPoint) -> Result<f64> {
    h.s_coord(p)
}

/// One-dimensional root refinement between two nearby curve vertices: trial
/// points are produced by integrating the bundle field from the lower
/// vertex, so the result sits on the integral curve rather than a chord.
fn refine_along_bundle(
    f: &NilDiffeo,
    h: &SemiConjugacy,
    lo_pt: &HPoint,
    hi_pt: &HPoint,
    bundle: Bundle,
    horizon: usize,
    coord: impl Fn(&SemiConjugacy, &HPoint) -> Result<f64>,
    target: f64,
) -> Result<HPoint> {
    let span = lo_pt.euclid_dist(hi_pt) * 1.2 + 1e-9;
    let toward = [hi_pt.x - lo_pt.x, hi_pt.y - lo_pt.y, hi_pt.z - lo_pt.z];
    let mut dir = bundle_direction(f, lo_pt, bundle, horizon, None)?;
    let amb0 = frame_to_ambient(lo_pt, &dir);
    if amb0[0] * toward[0] + amb0[1] * toward[1] + amb0[2] * toward[2] < 0.0 {
        dir = dir.scale(-1.0);
    }
    let point_at = |s: f64| -> Result<HPoint> {
        if s <= 0.0 {
            return Ok(*lo_pt);
        }
        // Single RK4 step; s never exceeds one polyline spacing.
        let a1 = frame_to_ambient(lo_pt, &dir);
        let p2 = HPoint::new(
            lo_pt.x + 0.5 * s * a1[0],
            lo_pt.y + 0.5 * s * a1[1],
            lo_pt.z + 0.5 * s * a1[2],
        );
        let k2 = bundle_direction(f, &p2, bundle, horizon, Some(&dir))?;
        let a2 = frame_to_ambient(&p2, &k2);
        let p3 = HPoint::new(
            lo_pt.x + 0.5 * s * a2[0],
            lo_pt.y + 0.5 * s * a2[1],
            lo_pt.z + 0.5 * s * a2[2],
        );
        let k3 = bundle_direction(f, &p3, bundle, horizon, Some(&k2))?;
        let a3 = frame_to_ambient(&p3, &k3);
        let p4 = HPoint::new(lo_pt.x + s * a3[0], lo_pt.y + s * a3[1], lo_pt.z + s * a3[2]);
        let k4 = bundle_direction(f, &p4, bundle, horizon, Some(&k3))?;
        let a4 = frame_to_ambient(&p4, &k4);
        Ok(HPoint::new(
            lo_pt.x + s / 6.0 * (a1[0] + 2.0 * a2[0] + 2.0 * a3[0] + a4[0]),
            lo_pt.y + s / 6.0 * (a1[1] + 2.0 * a2[1] + 2.0 * a3[1] + a4[1]),
            lo_pt.z + s / 6.0 * (a1[2] + 2.0 * a2[2] + 2.0 * a3[2] + a4[2]),
        ))
    };

    let mut lo = 0.0f64;
    let mut hi = span;
    let mut g_lo = coord(h, &point_at(lo)?)? - target;
    let g_hi = coord(h, &point_at(hi)?)? - target;
    if g_lo == 0.0 {
        return point_at(lo);
    }
    if g_lo * g_hi > 0.0 {
        return Err(Error::RootNotBracketed {
            detail: "refinement interval does not bracket".into(),
        });
    }
    let mut best = *lo_pt;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let p = point_at(mid)?;
        let g = coord(h, &p)? - target;
        best = p;
        if g.abs() < 1e-13 {
            break;
        }
        if g * g_lo > 0.0 {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(best)
}

/// Finds the unique intersection of the unstable curve through `q` with the
/// center-stable leaf of `p` (the locus where the unstable eigen-coordinate
/// of `H` matches that of `H(p)`), after checking the monotone-coordinate
/// property along the curve.
pub fn gps_intersect(
    f: &NilDiffeo,
    h: &SemiConjugacy,
    p: &HPoint,
    q: &HPoint,
) -> Result<HPoint> {
    let target = h.u_coord(p)?;
    let mut solver = UnstableRootSolver::new(f, q, 1.5)?;
    solver.check_monotone(h)?;
    let r = solver.solve(f, h, target)?;
    debug_assert!((h.u_coord(&r)? - target).abs() < 1e-8);
    Ok(r)
}

/// The section of `H`: `σ(v)` is the unique point of the us-pseudoleaf
/// through the base point with `H(σ(v)) = v`.
///
/// Two nested root solves: along the unstable curve through the base point
/// (matching the unstable eigen-coordinate), then along the stable curve
/// through that intersection (matching the stable one; the unstable
/// coordinate is constant along stable curves).
pub struct SectionSigma {
    base: HPoint,
    unstable: UnstableRootSolver,
}

impl SectionSigma {
    pub fn new(f: &NilDiffeo, base: &HPoint) -> Result<Self> {
        let unstable = UnstableRootSolver::new(f, base, 2.0)?;
        Ok(SectionSigma { base: *base, unstable })
    }

    pub fn base(&self) -> HPoint {
        self.base
    }

    /// Evaluates `σ(v)`.
    pub fn eval(&mut self, f: &NilDiffeo, h: &SemiConjugacy, v: [f64; 2]) -> Result<HPoint> {
        let (cs, cu) = h.eigen_coords(v);
        let x_pt = self.unstable.solve(f, h, cu)?;
        let r = stable_root(f, h, &x_pt, cs)?;
        debug_assert!({
            let hv = h.eval(&r)?;
            ((hv[0] - v[0]).powi(2) + (hv[1] - v[1]).powi(2)).sqrt() < 1e-7
        });
        Ok(r)
    }
}

/// Root solve of `s_coord(H(·)) = target` along the stable curve through
/// `base`, growing the curve until the target is bracketed.
pub fn stable_root(
    f: &NilDiffeo,
    h: &SemiConjugacy,
    base: &HPoint,
    target: f64,
) -> Result<HPoint> {
    let mut length = 2.0f64;
    loop {
        let curve = integrate_curve(f, base, Bundle::Stable, length, 0.01, FIELD_HORIZON, true)?;
        let pts = curve.points();
        let mut prev_val = h.s_coord(&pts[0])?;
        for i in 0..pts.len() - 1 {
            let next_val = h.s_coord(&pts[i + 1])?;
            if (prev_val - target) * (next_val - target) <= 0.0 {
                let (a, b) = (pts[i], pts[i + 1]);
                return refine_along_bundle(
                    f,
                    h,
                    &a,
                    &b,
                    Bundle::Stable,
                    FIELD_HORIZON,
                    s_coord_of,
                    target,
                );
            }
            prev_val = next_val;
        }
        length *= 1.8;
        if length > MAX_CURVE_LENGTH {
            return Err(Error::RootNotBracketed {
                detail: format!("s-coordinate {target} not bracketed on the stable curve"),
            });
        }
    }
}
