//! Assembly of the deck-equivariant leaf conjugacy
//! `h(x,y,z) = φ_{ρ(x,y)+z}(σ(x,y))`.
//!
//! The offset `ρ` is built on the unit square: the origin corner pins
//! `h(0,0,0) = σ(0,0)`, the bottom and left edges interpolate linearly to
//! the corners forced by the horizontal deck transformations, the top and
//! right edges are transported from them (the right edge picks up the `-y`
//! shear of the `(1,0,0)` face identification), and the interior is a Coons
//! blend of the four edges. Outside the square, `h((a,b,0)·s) = (a,b,0)·h(s)`
//! extends the map to the whole group.

use super::flow::CenterFlow;
use super::section::SectionSigma;
use super::{semiconjugacy, SemiConjugacy};
use crate::dynamics::NilDiffeo;
use crate::error::{Error, Result};
use crate::heis::HPoint;
use std::cell::RefCell;
use std::collections::HashMap;

const EDGE_SOLVE_SPAN: f64 = 6.0;
const CORNER_TOL: f64 = 1e-6;

pub struct LeafConjugacy<'a> {
    f: &'a NilDiffeo,
    pub h: SemiConjugacy<'a>,
    pub flow: CenterFlow<'a>,
    sigma: RefCell<SectionSigma>,
    /// `h(0,0,0)`; the image of the origin corner.
    pub q0: HPoint,
    rho10: f64,
    rho01: f64,
    rho11: f64,
    /// Residual between the two corner-(1,1) transports.
    pub corner_residual: f64,
    sigma_cache: RefCell<HashMap<(u64, u64), HPoint>>,
    top_cache: RefCell<HashMap<u64, f64>>,
    right_cache: RefCell<HashMap<u64, f64>>,
}

/// Builds the conjugacy for a lattice-preserving system. `truncation` sizes
/// the series behind `H`.
pub fn build_leaf_conjugacy(f: &NilDiffeo, truncation: usize) -> Result<LeafConjugacy<'_>> {
    let h = semiconjugacy(f, truncation)?;
    let flow = CenterFlow::new(f);
    let mut sigma = SectionSigma::new(f, &HPoint::IDENTITY)?;

    let q0 = sigma.eval(f, &h, [0.0, 0.0])?;
    // Corner (1,0): slide σ(1,0) onto (1,0,0)·q0.
    let s10 = sigma.eval(f, &h, [1.0, 0.0])?;
    let rho10 = flow.time_to(&s10, &HPoint::new(1.0, 0.0, 0.0).mul(&q0), EDGE_SOLVE_SPAN)?;
    // Corner (0,1): slide σ(0,1) onto (0,1,0)·q0.
    let s01 = sigma.eval(f, &h, [0.0, 1.0])?;
    let rho01 = flow.time_to(&s01, &HPoint::new(0.0, 1.0, 0.0).mul(&q0), EDGE_SOLVE_SPAN)?;

    let mut lc = LeafConjugacy {
        f,
        h,
        flow,
        sigma: RefCell::new(sigma),
        q0,
        rho10,
        rho01,
        rho11: 0.0,
        corner_residual: f64::NAN,
        sigma_cache: RefCell::new(HashMap::new()),
        top_cache: RefCell::new(HashMap::new()),
        right_cache: RefCell::new(HashMap::new()),
    };

    // Corner (1,1) through both edge transports; they differ by a full
    // central deck transformation absorbed by the right edge's -y shear, so
    // the two values must agree.
    let via_top = lc.rho_top(1.0)?;
    let via_right = lc.rho_right(1.0)?;
    let residual = (via_top - via_right).abs();
    if residual > CORNER_TOL {
        return Err(Error::BoundaryGluing { residual });
    }
    lc.rho11 = via_top;
    lc.corner_residual = residual;
    Ok(lc)
}

impl<'a> LeafConjugacy<'a> {
    pub fn system(&self) -> &'a NilDiffeo {
        self.f
    }

    /// Cached section evaluation.
    pub fn sigma_at(&self, x: f64, y: f64) -> Result<HPoint> {
        let key = (x.to_bits(), y.to_bits());
        if let Some(p) = self.sigma_cache.borrow().get(&key) {
            return Ok(*p);
        }
        let p = self.sigma.borrow_mut().eval(self.f, &self.h, [x, y])?;
        self.sigma_cache.borrow_mut().insert(key, p);
        Ok(p)
    }

    fn rho_bottom(&self, x: f64) -> f64 {
        x * self.rho10
    }

    fn rho_left(&self, y: f64) -> f64 {
        y * self.rho01
    }

    /// Top edge: transport of the bottom edge by the deck transformation
    /// `(0,1,0)`.
    fn rho_top(&self, x: f64) -> Result<f64> {
        if let Some(v) = self.top_cache.borrow().get(&x.to_bits()) {
            return Ok(*v);
        }
        let bottom = self.flow.flow(&self.sigma_at(x, 0.0)?, self.rho_bottom(x))?;
        let target = HPoint::new(0.0, 1.0, 0.0).mul(&bottom);
        let r = self.flow.time_to(&self.sigma_at(x, 1.0)?, &target, EDGE_SOLVE_SPAN)?;
        self.top_cache.borrow_mut().insert(x.to_bits(), r);
        Ok(r)
    }

    /// Right edge: transport of the left edge by `(1,0,0)`, whose face
    /// identification shears z by y; the offset absorbs the shear.
    fn rho_right(&self, y: f64) -> Result<f64> {
        if let Some(v) = self.right_cache.borrow().get(&y.to_bits()) {
            return Ok(*v);
        }
        let left = self.flow.flow(&self.sigma_at(0.0, y)?, self.rho_left(y))?;
        let target = HPoint::new(1.0, 0.0, 0.0).mul(&left);
        let r = self.flow.time_to(&self.sigma_at(1.0, y)?, &target, EDGE_SOLVE_SPAN)? - y;
        self.right_cache.borrow_mut().insert(y.to_bits(), r);
        Ok(r)
    }

    /// Coons blend of the four edges.
    pub fn rho(&self, x: f64, y: f64) -> Result<f64> {
        let b = self.rho_bottom(x);
        let t = self.rho_top(x)?;
        let l = self.rho_left(y);
        let r = self.rho_right(y)?;
        Ok((1.0 - y) * b + y * t + (1.0 - x) * l + x * r
            - ((1.0 - x) * (1.0 - y) * 0.0
                + x * (1.0 - y) * self.rho10
                + (1.0 - x) * y * self.rho01
                + x * y * self.rho11))
    }

    /// The conjugacy on the unit cell: `φ_{ρ(x,y)+z}(σ(x,y))`.
    pub fn eval_unit(&self, x: f64, y: f64, z: f64) -> Result<HPoint> {
        let rho = self.rho(x, y)?;
        self.flow.flow(&self.sigma_at(x, y)?, rho + z)
    }

    /// The conjugacy on all of the group, through the equivariant extension
    /// `h((a,b,0)·s) = (a,b,0)·h(s)`.
    pub fn eval(&self, p: &HPoint) -> Result<HPoint> {
        let a = p.x.floor();
        let b = p.y.floor();
        let x = p.x - a;
        let y = p.y - b;
        let z = p.z - a * y;
        let inner = self.eval_unit(x, y, z)?;
        Ok(HPoint::new(a, b, 0.0).mul(&inner))
    }
}

/// Quantitative report of the conjugacy quality on seeded samples.
#[derive(Debug, Clone)]
pub struct LeafConjugacyReport {
    /// `sup |φ₁(p) − (0,0,1)·p|` over flow samples.
    pub phi1_residual: f64,
    /// The corner-(1,1) gluing residual.
    pub corner_residual: f64,
    /// Seam residuals of the two nontrivial face identifications.
    pub seam_residual: f64,
    /// `sup |h(γ·p) − γ·h(p)|` over the three generators.
    pub equivariance_residual: f64,
    /// Number of sampled algebraic center leaves on which `h∘g` and `f∘h`
    /// landed on the same center leaf.
    pub same_leaf_ok: usize,
    pub leaves: usize,
    /// `sup ‖H(h(x,y,z)) − (x,y)‖`.
    pub fiber_index_residual: f64,
    /// Spread of `H∘h` along vertical segments (single-fiber property).
    pub vertical_fiber_spread: f64,
    pub pass: bool,
}

/// Exercises the defining properties of the leaf conjugacy: the flow
/// normalization, seam gluing, deck equivariance, the same-center-leaf
/// criterion for `h∘g` against `f∘h`, and fiber indexing.
pub fn verify_leaf_conjugacy(
    lc: &LeafConjugacy,
    leaves: usize,
    points_per_leaf: usize,
    seed: u64,
) -> Result<LeafConjugacyReport> {
    use rand::{Rng, SeedableRng};
    let f = lc.system();
    let g = f.auto();
    let k = f.lattice().k as f64;
    let tol = lc.h.fiber_tol();

    // Flow normalization on a handful of points.
    let mut phi1 = 0.0f64;
    for i in 0..20 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (0x51 + i));
        let p = HPoint::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>() / k);
        let q = lc.flow.flow_raw(&p, 1.0)?;
        phi1 = phi1.max(q.euclid_dist(&HPoint::new(0.0, 0.0, 1.0).mul(&p)));
    }

    // Seam well-definedness: (a+1,b,0)·(0,y,z) = (a,b,0)·(1,y,z+y) and the
    // top/bottom identification.
    let mut seam = 0.0f64;
    for i in 0..12 {
        let y = (i as f64 + 0.5) / 12.0;
        let z = (i as f64 * 0.37) % 1.0 / k;
        let lhs = lc.eval_unit(1.0, y, z + y)?;
        let rhs = HPoint::new(1.0, 0.0, 0.0).mul(&lc.eval_unit(0.0, y, z)?);
        seam = seam.max(lhs.euclid_dist(&rhs));
        let x = y;
        let lhs_t = lc.eval_unit(x, 1.0, z)?;
        let rhs_t = HPoint::new(0.0, 1.0, 0.0).mul(&lc.eval_unit(x, 0.0, z)?);
        seam = seam.max(lhs_t.euclid_dist(&rhs_t));
    }

    // Deck equivariance on the three generators.
    let mut equiv = 0.0f64;
    let gens = f.lattice().generators();
    for i in 0..15 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (0x91 + i));
        let p = HPoint::new(
            rng.gen_range(-1.5..1.5),
            rng.gen_range(-1.5..1.5),
            rng.gen_range(-1.0..1.0),
        );
        let hp = lc.eval(&p)?;
        for gamma in gens {
            let lhs = lc.eval(&gamma.mul(&p))?;
            let rhs = gamma.mul(&hp);
            equiv = equiv.max(lhs.euclid_dist(&rhs));
        }
    }

    // Same-center-leaf criterion on sampled vertical leaves of g, plus the
    // fiber indexing of h.
    let mut same_leaf_ok = 0usize;
    let mut fiber_index = 0.0f64;
    let mut vertical_spread = 0.0f64;
    for i in 0..leaves {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (0x1000 + i as u64));
        let (x, y) = (rng.gen::<f64>(), rng.gen::<f64>());
        let mut leaf_ok = true;
        let mut h_vals: Vec<[f64; 2]> = Vec::new();
        for j in 0..points_per_leaf {
            let z = j as f64 / (points_per_leaf as f64 * k);
            let p = HPoint::new(x, y, z);
            let hp = lc.eval(&p)?;
            // H(h(x,y,z)) = (x,y) within the certified tolerance.
            let hv = lc.h.eval(&hp)?;
            fiber_index = fiber_index
                .max(((hv[0] - x).powi(2) + (hv[1] - y).powi(2)).sqrt());
            h_vals.push(hv);
            // h∘g and f∘h land on the same center leaf.
            let lhs = lc.eval(&g.apply(&p))?;
            let rhs = f.apply(&hp);
            if !lc.h.center_leaf_test(&lhs, &rhs)? {
                leaf_ok = false;
            }
        }
        for w in h_vals.windows(2) {
            let d = ((w[0][0] - w[1][0]).powi(2) + (w[0][1] - w[1][1]).powi(2)).sqrt();
            vertical_spread = vertical_spread.max(d);
        }
        if leaf_ok {
            same_leaf_ok += 1;
        }
    }

    let pass = phi1 < 1e-6
        && lc.corner_residual < CORNER_TOL
        && seam < 1e-6
        && equiv < 1e-6
        && same_leaf_ok == leaves
        && fiber_index < tol;
    Ok(LeafConjugacyReport {
        phi1_residual: phi1,
        corner_residual: lc.corner_residual,
        seam_residual: seam,
        equivariance_residual: equiv,
        same_leaf_ok,
        leaves,
        fiber_index_residual: fiber_index,
        vertical_fiber_spread: vertical_spread,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auto::{from_derivative, GMatrix};
    use crate::dynamics::Perturbation;
    use crate::heis::Lattice;

    #[test]
    fn unperturbed_conjugacy_is_leaf_identity() {
        let auto = from_derivative(&GMatrix::from_block([[2.0, 1.0], [1.0, 1.0]])).unwrap();
        let f = NilDiffeo::new(auto, Perturbation::none(), Lattice::new(2)).unwrap();
        let lc = build_leaf_conjugacy(&f, 15).unwrap();
        assert!(lc.corner_residual < 1e-7);
        // h preserves every vertical line: P ∘ h = P.
        for (x, y, z) in [(0.0, 0.0, 0.0), (0.3, 0.6, 0.2), (0.9, 0.1, 0.4)] {
            let p = HPoint::new(x, y, z);
            let hp = lc.eval(&p).unwrap();
            assert!(
                (hp.x - x).abs() < 1e-8 && (hp.y - y).abs() < 1e-8,
                "leaf identity failed at ({x},{y},{z}): {hp:?}"
            );
        }
    }
}
