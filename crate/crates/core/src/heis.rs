//! Exact arithmetic on the Heisenberg group, lattices, the left-invariant
//! frame and the projections used throughout the rest of the crate.
//!
//! A point `(x, y, z)` stands for the unipotent upper-triangular matrix with
//! `x` and `y` on the first superdiagonal and `z` in the corner, so the group
//! law reads `(a,b,c) * (x,y,z) = (a+x, b+y, z+c+a*y)`.

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// A point of the Heisenberg group on the universal cover.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HPoint {
    pub const IDENTITY: HPoint = HPoint { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        HPoint { x, y, z }
    }

    /// Group product `self * q`.
    pub fn mul(&self, q: &HPoint) -> HPoint {
        HPoint {
            x: self.x + q.x,
            y: self.y + q.y,
            z: q.z + self.z + self.x * q.y,
        }
    }

    /// Group inverse: `(a,b,c)^-1 = (-a, -b, a*b - c)`.
    pub fn inv(&self) -> HPoint {
        HPoint {
            x: -self.x,
            y: -self.y,
            z: self.x * self.y - self.z,
        }
    }

    /// Commutator `[p, q] = p q p^-1 q^-1 = (0, 0, p.x*q.y - p.y*q.x)`.
    pub fn commutator(&self, q: &HPoint) -> HPoint {
        HPoint::new(0.0, 0.0, self.x * q.y - self.y * q.x)
    }

    /// Left translation of `q` by `self`; alias of [`HPoint::mul`], named for
    /// call sites where the deck-transformation reading is clearer.
    pub fn translate(&self, q: &HPoint) -> HPoint {
        self.mul(q)
    }

    /// Coordinate-wise difference (Euclidean chart, not a group operation).
    pub fn coord_sub(&self, q: &HPoint) -> [f64; 3] {
        [self.x - q.x, self.y - q.y, self.z - q.z]
    }

    pub fn euclid_dist(&self, q: &HPoint) -> f64 {
        let d = self.coord_sub(q);
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub fn max_abs_coord(&self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

impl Serialize for HPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(3))?;
        seq.serialize_element(&self.x)?;
        seq.serialize_element(&self.y)?;
        seq.serialize_element(&self.z)?;
        seq.end()
    }
}

impl<'de> Deserialize<'de> for HPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = HPoint;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "an array [x, y, z]")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<HPoint, A::Error> {
                let x = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let y = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                let z = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(2, &self))?;
                if seq.next_element::<f64>()?.is_some() {
                    return Err(de::Error::invalid_length(4, &self));
                }
                Ok(HPoint::new(x, y, z))
            }
        }
        deserializer.deserialize_seq(V)
    }
}

/// The lattice `Γ_k` generated by `(1,0,0)`, `(0,1,0)` and `(0,0,1/k)`.
///
/// Membership is `x, y ∈ Z` and `z ∈ (1/k)Z`; elements are carried with exact
/// integer tags so lattice arithmetic never drifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub k: u32,
}

impl Lattice {
    pub fn new(k: u32) -> Self {
        assert!(k >= 1, "lattice index k must be positive");
        Lattice { k }
    }

    pub fn generators(&self) -> [HPoint; 3] {
        [
            HPoint::new(1.0, 0.0, 0.0),
            HPoint::new(0.0, 1.0, 0.0),
            HPoint::new(0.0, 0.0, 1.0 / self.k as f64),
        ]
    }

    /// Exact generators with integer tags.
    pub fn generator_elements(&self) -> [LatticeElement; 3] {
        [
            LatticeElement::new(1, 0, 0, self.k),
            LatticeElement::new(0, 1, 0, self.k),
            LatticeElement::new(0, 0, 1, self.k),
        ]
    }

    /// Rounds `p` to the nearest lattice element; `None` if any coordinate is
    /// farther than `tol` from the lattice.
    pub fn round_point(&self, p: &HPoint, tol: f64) -> Option<LatticeElement> {
        let a = p.x.round();
        let b = p.y.round();
        let zk = p.z * self.k as f64;
        let c = zk.round();
        if (p.x - a).abs() <= tol && (p.y - b).abs() <= tol && (zk - c).abs() <= tol * self.k as f64
        {
            Some(LatticeElement::new(a as i64, b as i64, c as i64, self.k))
        } else {
            None
        }
    }

    pub fn contains(&self, p: &HPoint, tol: f64) -> bool {
        self.round_point(p, tol).is_some()
    }

    /// Decomposes `p = γ * q` with `γ ∈ Γ_k` and `q` in the fundamental
    /// domain `x, y ∈ [0,1)`, `z ∈ [0,1/k)`.
    ///
    /// The reduction floors x, then y, then translates by `(⌊x⌋,⌊y⌋,0)^-1`
    /// before flooring z; ties at the boundary always land in the half-open
    /// interval, so the result is deterministic.
    pub fn reduce(&self, p: &HPoint) -> (LatticeElement, HPoint) {
        let m = p.x.floor();
        let n = p.y.floor();
        let xq = p.x - m;
        let yq = p.y - n;
        // z-coordinate after translating by (m, n, 0)^-1.
        let w = p.z - m * yq;
        let kf = self.k as f64;
        let j = (w * kf).floor();
        let zq = w - j / kf;
        let gamma = LatticeElement::new(m as i64, n as i64, j as i64, self.k);
        (gamma, HPoint::new(xq, yq, zq))
    }
}

/// A lattice element with exact integer coordinates: the point
/// `(a, b, c/k)` of `Γ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeElement {
    pub a: i64,
    pub b: i64,
    /// Numerator of the z-coordinate over the fixed denominator `k`.
    pub c: i64,
    pub k: u32,
}

impl LatticeElement {
    pub fn new(a: i64, b: i64, c: i64, k: u32) -> Self {
        LatticeElement { a, b, c, k }
    }

    pub fn identity(k: u32) -> Self {
        LatticeElement::new(0, 0, 0, k)
    }

    pub fn is_identity(&self) -> bool {
        self.a == 0 && self.b == 0 && self.c == 0
    }

    pub fn point(&self) -> HPoint {
        HPoint::new(self.a as f64, self.b as f64, self.c as f64 / self.k as f64)
    }

    /// Exact group product of two elements of the same lattice.
    pub fn mul(&self, other: &LatticeElement) -> LatticeElement {
        assert_eq!(self.k, other.k, "lattice index mismatch");
        LatticeElement {
            a: self.a + other.a,
            b: self.b + other.b,
            c: self.c + other.c + self.k as i64 * self.a * other.b,
            k: self.k,
        }
    }

    /// Exact inverse.
    pub fn inv(&self) -> LatticeElement {
        LatticeElement {
            a: -self.a,
            b: -self.b,
            c: self.k as i64 * self.a * self.b - self.c,
            k: self.k,
        }
    }
}

/// A tangent vector written in the left-invariant frame `(X, Y, Z)`.
///
/// The frame fields are `X = ∂/∂x`, `Y = ∂/∂y + x ∂/∂z`, `Z = ∂/∂z`; they
/// are declared orthonormal, so the left-invariant norm of a frame vector is
/// its Euclidean norm regardless of the base point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameVector {
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl FrameVector {
    pub fn new(vx: f64, vy: f64, vz: f64) -> Self {
        FrameVector { vx, vy, vz }
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        FrameVector::new(v[0], v[1], v[2])
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.vx, self.vy, self.vz]
    }

    pub fn norm(&self) -> f64 {
        (self.vx * self.vx + self.vy * self.vy + self.vz * self.vz).sqrt()
    }

    pub fn dot(&self, o: &FrameVector) -> f64 {
        self.vx * o.vx + self.vy * o.vy + self.vz * o.vz
    }

    pub fn cross(&self, o: &FrameVector) -> FrameVector {
        FrameVector::new(
            self.vy * o.vz - self.vz * o.vy,
            self.vz * o.vx - self.vx * o.vz,
            self.vx * o.vy - self.vy * o.vx,
        )
    }

    pub fn scale(&self, s: f64) -> FrameVector {
        FrameVector::new(self.vx * s, self.vy * s, self.vz * s)
    }

    pub fn add(&self, o: &FrameVector) -> FrameVector {
        FrameVector::new(self.vx + o.vx, self.vy + o.vy, self.vz + o.vz)
    }

    pub fn sub(&self, o: &FrameVector) -> FrameVector {
        FrameVector::new(self.vx - o.vx, self.vy - o.vy, self.vz - o.vz)
    }

    pub fn normalized(&self) -> FrameVector {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        self.scale(1.0 / n)
    }

    /// Unoriented angle to another vector, in radians.
    pub fn angle_to(&self, o: &FrameVector) -> f64 {
        let c = self.dot(o) / (self.norm() * o.norm());
        c.clamp(-1.0, 1.0).acos()
    }

    /// Angle between the lines spanned by the two vectors (sign-blind).
    pub fn line_angle_to(&self, o: &FrameVector) -> f64 {
        let a = self.angle_to(o);
        a.min(std::f64::consts::PI - a)
    }
}

/// Frame coordinates at `p` of an ambient tangent vector `v` (coordinates in
/// the chart basis `∂/∂x, ∂/∂y, ∂/∂z`).
pub fn frame_coords(p: &HPoint, v: [f64; 3]) -> FrameVector {
    FrameVector::new(v[0], v[1], v[2] - p.x * v[1])
}

/// Inverse of [`frame_coords`]: the ambient components of a frame vector.
pub fn frame_to_ambient(p: &HPoint, v: &FrameVector) -> [f64; 3] {
    [v.vx, v.vy, v.vz + p.x * v.vy]
}

/// Discretized left-invariant length of a polyline.
///
/// Each chord is expressed in the frame at the segment midpoint and its
/// Euclidean norm is summed. The result upper-bounds `d(start, end)` once the
/// polyline is fine enough to track the path; the projection inequalities
/// `|π_s(end) - π_s(start)| ≤ length` hold for every polyline exactly.
pub fn path_length(points: &[HPoint]) -> f64 {
    assert!(points.len() >= 2, "path needs at least two points");
    let mut total = 0.0;
    for w in points.windows(2) {
        total += segment_length(&w[0], &w[1]);
    }
    total
}

/// Left-invariant length estimate of a single chord.
pub fn segment_length(p: &HPoint, q: &HPoint) -> f64 {
    let delta = q.coord_sub(p);
    let mid_x = 0.5 * (p.x + q.x);
    let v = FrameVector::new(delta[0], delta[1], delta[2] - mid_x * delta[1]);
    v.norm()
}

/// Upper bound for `d(p, q)` from a straight chord split into `segments`
/// pieces. For pure frame-direction chords this is exact.
pub fn distance_upper_bound(p: &HPoint, q: &HPoint, segments: usize) -> f64 {
    let n = segments.max(1);
    let mut pts = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = i as f64 / n as f64;
        pts.push(HPoint::new(
            p.x + t * (q.x - p.x),
            p.y + t * (q.y - p.y),
            p.z + t * (q.z - p.z),
        ));
    }
    path_length(&pts)
}

/// Stable projection `π_s(x,y,z) = x`.
pub fn proj_s(p: &HPoint) -> f64 {
    p.x
}

/// Unstable projection `π_u(x,y,z) = y`.
pub fn proj_u(p: &HPoint) -> f64 {
    p.y
}

/// Plane projection `P(x,y,z) = (x,y)`; satisfies `P(γ·p) = P(p) + (a,b)`.
pub fn proj_plane(p: &HPoint) -> [f64; 2] {
    [p.x, p.y]
}

/// Exponential map of the Lie algebra in frame coordinates:
/// `exp(uX + vY + wZ) = (u, v, w + uv/2)`.
pub fn exp_h(w: &FrameVector) -> HPoint {
    HPoint::new(w.vx, w.vy, w.vz + 0.5 * w.vx * w.vy)
}

/// Exact inverse of [`exp_h`].
pub fn log_h(p: &HPoint) -> FrameVector {
    FrameVector::new(p.x, p.y, p.z - 0.5 * p.x * p.y)
}

/// The box `B_{x0,y0,z0}` of §-style bounding arguments; any bound may be
/// infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRegion {
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
}

impl BoxRegion {
    pub fn new(x0: f64, y0: f64, z0: f64) -> Self {
        assert!(x0 > 0.0 && y0 > 0.0 && z0 > 0.0, "box bounds must be positive");
        BoxRegion { x0, y0, z0 }
    }

    pub fn contains(&self, p: &HPoint) -> bool {
        p.x.abs() <= self.x0 && p.y.abs() <= self.y0 && p.z.abs() <= self.z0
    }

    /// Slack of the membership test: nonnegative iff the point is inside.
    pub fn margin(&self, p: &HPoint) -> f64 {
        (self.x0 - p.x.abs())
            .min(self.y0 - p.y.abs())
            .min(self.z0 - p.z.abs())
    }
}
