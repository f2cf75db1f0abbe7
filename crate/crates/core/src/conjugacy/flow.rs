//! The normalized center flow: unit-speed motion along center leaves,
//! rescaled per leaf so the time-one map is left multiplication by
//! `(0,0,1)`.
//!
//! Left multiplication by a central element maps each center leaf to itself
//! by an arclength translation, so the `k` translate steps `(0,0,1/k)` are
//! equally spaced along the leaf; the leaf period is `k` times the distance
//! to the first translate, and reducing flow times modulo `1/k` is exact.

use super::super::dynamics::{bundle_direction, Bundle, NilDiffeo};
use crate::error::{Error, Result};
use crate::heis::{frame_to_ambient, FrameVector, HPoint};

#[derive(Debug, Clone, Copy)]
pub struct CenterFlow<'a> {
    f: &'a NilDiffeo,
    /// Splitting horizon used for the center field.
    pub horizon: usize,
    /// Arclength integration step.
    pub step: f64,
}

impl<'a> CenterFlow<'a> {
    pub fn new(f: &'a NilDiffeo) -> Self {
        CenterFlow { f, horizon: 32, step: 1.0 / 64.0 }
    }

    pub fn with_params(f: &'a NilDiffeo, horizon: usize, step: f64) -> Self {
        CenterFlow { f, horizon, step }
    }

    pub fn system(&self) -> &'a NilDiffeo {
        self.f
    }

    /// Unit center direction with positive vertical component.
    fn dir(&self, p: &HPoint, along: Option<&FrameVector>) -> Result<FrameVector> {
        let mut e = bundle_direction(self.f, p, Bundle::Center, self.horizon, along)?;
        if along.is_none() && e.vz < 0.0 {
            e = e.scale(-1.0);
        }
        Ok(e)
    }

    fn rk4(&self, p: &HPoint, dir: &FrameVector, h: f64) -> Result<(HPoint, FrameVector)> {
        let amb = |q: &HPoint, v: &FrameVector| frame_to_ambient(q, v);
        let shift = |q: &HPoint, a: [f64; 3], s: f64| {
            HPoint::new(q.x + s * a[0], q.y + s * a[1], q.z + s * a[2])
        };
        let k1 = self.dir(p, Some(dir))?;
        let a1 = amb(p, &k1);
        let k2 = self.dir(&shift(p, a1, 0.5 * h), Some(&k1))?;
        let a2 = amb(&shift(p, a1, 0.5 * h), &k2);
        let k3 = self.dir(&shift(p, a2, 0.5 * h), Some(&k2))?;
        let a3 = amb(&shift(p, a2, 0.5 * h), &k3);
        let k4 = self.dir(&shift(p, a3, h), Some(&k3))?;
        let a4 = amb(&shift(p, a3, h), &k4);
        Ok((
            HPoint::new(
                p.x + h / 6.0 * (a1[0] + 2.0 * a2[0] + 2.0 * a3[0] + a4[0]),
                p.y + h / 6.0 * (a1[1] + 2.0 * a2[1] + 2.0 * a3[1] + a4[1]),
                p.z + h / 6.0 * (a1[2] + 2.0 * a2[2] + 2.0 * a3[2] + a4[2]),
            ),
            k4,
        ))
    }

    /// Point at signed arclength `s` along the center leaf through `p`.
    pub fn leaf_point(&self, p: &HPoint, s: f64) -> Result<HPoint> {
        let base = self.dir(p, None)?;
        let mut dir = if s < 0.0 { base.scale(-1.0) } else { base };
        let mut remaining = s.abs();
        let mut cur = *p;
        while remaining > 1e-14 {
            let h = remaining.min(self.step);
            let (next, d) = self.rk4(&cur, &dir, h)?;
            cur = next;
            dir = d;
            remaining -= h;
        }
        Ok(cur)
    }

    /// Arclength from `p` to its first center translate `(0,0,1/k)·p`,
    /// with the transverse miss distance at the detected event.
    pub fn gap_to_translate(&self, p: &HPoint) -> Result<(f64, f64)> {
        let k = self.f.lattice().k as f64;
        let target = HPoint::new(0.0, 0.0, 1.0 / k).mul(p);
        self.arclength_to(p, &target, 10.0 * (1.0 + 1.0 / k))
            .ok_or(Error::EventNotDetected { searched: 10.0 * (1.0 + 1.0 / k) })
    }

    /// Leaf period `ℓ(p) = d_c(p, (0,0,1)·p)`: `k` equally spaced translate
    /// gaps.
    pub fn ell(&self, p: &HPoint) -> Result<f64> {
        let (gap, _) = self.gap_to_translate(p)?;
        Ok(gap * self.f.lattice().k as f64)
    }

    /// Searches forward (then backward) along the leaf for the closest
    /// approach to `target`; returns the signed arclength and miss distance.
    fn arclength_to(&self, p: &HPoint, target: &HPoint, s_max: f64) -> Option<(f64, f64)> {
        for sign in [1.0f64, -1.0] {
            if let Some(hit) = self.scan_for_target(p, target, sign, s_max) {
                return Some(hit);
            }
        }
        None
    }

    fn scan_for_target(
        &self,
        p: &HPoint,
        target: &HPoint,
        sign: f64,
        s_max: f64,
    ) -> Option<(f64, f64)> {
        let base = self.dir(p, None).ok()?;
        let mut dir = base.scale(sign);
        let mut cur = *p;
        let mut s = 0.0;
        // g(s) = (c(s) - T)·ĉ'(s) crosses zero at the closest approach.
        let g = |q: &HPoint, d: &FrameVector| {
            let dv = q.coord_sub(target);
            let a = frame_to_ambient(q, d);
            dv[0] * a[0] + dv[1] * a[1] + dv[2] * a[2]
        };
        let mut g_prev = g(&cur, &dir);
        while s < s_max {
            let (next, d) = self.rk4(&cur, &dir, self.step).ok()?;
            let g_next = g(&next, &d);
            if g_prev < 0.0 && g_next >= 0.0 && next.euclid_dist(target) < 0.5 {
                // Refine within [0, step] from `cur` by bisection on g.
                let mut lo = 0.0f64;
                let mut hi = self.step;
                let mut best = (next, g_next);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let (q, dq) = self.rk4(&cur, &dir, mid).ok()?;
                    let gm = g(&q, &dq);
                    best = (q, gm);
                    if gm < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-14 {
                        break;
                    }
                }
                let s_star = s + 0.5 * (lo + hi);
                let miss = best.0.euclid_dist(target);
                if miss < 0.05 {
                    return Some((sign * s_star, miss));
                }
            }
            g_prev = g_next;
            cur = next;
            dir = d;
            s += self.step;
        }
        None
    }

    /// The flow without the exact translate reduction: integrates the full
    /// arclength `t·ℓ(p)`. This is the map the normalization claims are
    /// about, so the time-one and group-property checks use it.
    pub fn flow_raw(&self, p: &HPoint, t: f64) -> Result<HPoint> {
        let ell = self.ell(p)?;
        self.leaf_point(p, t * ell)
    }

    /// The flow with times reduced modulo `1/k` through exact central
    /// translations; integration never exceeds one translate gap.
    pub fn flow(&self, p: &HPoint, t: f64) -> Result<HPoint> {
        let k = self.f.lattice().k as f64;
        let j = (t * k).floor();
        let frac = t - j / k;
        let (gap, _) = self.gap_to_translate(p)?;
        let moved = self.leaf_point(p, frac * k * gap)?;
        Ok(HPoint::new(0.0, 0.0, j / k).mul(&moved))
    }

    /// Signed flow time `r` with `φ_r(from) = to`; errors unless `to` lies on
    /// the center leaf of `from` within the searched arclength.
    pub fn time_to(&self, from: &HPoint, to: &HPoint, s_max: f64) -> Result<f64> {
        let (s, miss) = self
            .arclength_to(from, to, s_max)
            .ok_or(Error::EventNotDetected { searched: s_max })?;
        if miss > 1e-3 {
            return Err(Error::EventNotDetected { searched: s_max });
        }
        Ok(s / self.ell(from)?)
    }
}
