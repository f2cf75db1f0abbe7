//! The automorphism-matrix group `G`, Lie group automorphisms built from
//! derivatives, partial-hyperbolicity tests, diagonal normal forms, lattice
//! preservation and extraction of the algebraic part of a diffeomorphism.

use crate::error::{Error, Result};
use crate::heis::{exp_h, log_h, FrameVector, HPoint, Lattice, LatticeElement};
use crate::linalg::{
    mat2_apply, mat2_det, mat2_eigenvalues, mat2_eigenvector, mat2_inv, mat2_mul, mat3_apply,
    row_apply, Mat2, Mat3,
};
use serde::{Deserialize, Serialize};

/// An element of the automorphism-matrix group `G`: block lower-triangular
/// with a 2x2 block `A`, last row `(alpha, beta, det A)` and zero third
/// column above the diagonal. The bottom-right entry is forced to `det A` by
/// bracket preservation, so it is not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GMatrix {
    #[serde(rename = "A")]
    pub a: Mat2,
    pub alpha: f64,
    pub beta: f64,
}

impl GMatrix {
    pub fn new(a: Mat2, alpha: f64, beta: f64) -> Self {
        GMatrix { a, alpha, beta }
    }

    pub fn from_block(a: Mat2) -> Self {
        GMatrix::new(a, 0.0, 0.0)
    }

    pub fn identity() -> Self {
        GMatrix::from_block([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn diagonal(l1: f64, l2: f64) -> Self {
        GMatrix::from_block([[l1, 0.0], [0.0, l2]])
    }

    pub fn det_block(&self) -> f64 {
        mat2_det(&self.a)
    }

    pub fn as_mat3(&self) -> Mat3 {
        [
            [self.a[0][0], self.a[0][1], 0.0],
            [self.a[1][0], self.a[1][1], 0.0],
            [self.alpha, self.beta, self.det_block()],
        ]
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        mat3_apply(&self.as_mat3(), v)
    }

    pub fn apply_frame(&self, v: &FrameVector) -> FrameVector {
        FrameVector::from_array(self.apply(v.as_array()))
    }

    /// Group product; `G` is closed under multiplication.
    pub fn mul(&self, other: &GMatrix) -> GMatrix {
        let a = mat2_mul(&self.a, &other.a);
        let u = row_apply([self.alpha, self.beta], &other.a);
        let d = self.det_block();
        GMatrix::new(
            a,
            u[0] + d * other.alpha,
            u[1] + d * other.beta,
        )
    }

    pub fn inverse(&self) -> Result<GMatrix> {
        let d = self.det_block();
        let a_inv = mat2_inv(&self.a).ok_or(Error::SingularBlock { det: d })?;
        let u = row_apply([self.alpha, self.beta], &a_inv);
        Ok(GMatrix::new(a_inv, -u[0] / d, -u[1] / d))
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.a[0][1].abs() <= tol
            && self.a[1][0].abs() <= tol
            && self.alpha.abs() <= tol
            && self.beta.abs() <= tol
    }

    pub fn max_abs_diff(&self, other: &GMatrix) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.a[i][j] - other.a[i][j]).abs());
            }
        }
        m.max((self.alpha - other.alpha).abs())
            .max((self.beta - other.beta).abs())
    }
}

/// Result of the partial-hyperbolicity test on a matrix in `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhCheck {
    pub partially_hyperbolic: bool,
    /// Eigenvalues sorted by modulus, when all are real; the third is the
    /// forced center eigenvalue `det A = λ₁λ₂`.
    pub eigenvalues: Option<[f64; 3]>,
}

/// Tests whether `T ∈ G` is partially hyperbolic: `|λ₁| < 1`, `|λ₂| > 1`,
/// `|λ₃| = 1`. This forces `A` hyperbolic with `|det A| = 1`.
pub fn is_partially_hyperbolic(t: &GMatrix) -> PhCheck {
    let det = t.det_block();
    let eigenvalues = mat2_eigenvalues(&t.a).map(|[l1, l2]| {
        let l3 = det;
        debug_assert!((l1 * l2 - l3).abs() <= 1e-9 * (1.0 + l3.abs()));
        [l1, l2, l3]
    });
    let ph = match eigenvalues {
        Some([l1, l2, _]) => {
            (det.abs() - 1.0).abs() < 1e-9 && l1.abs() < 1.0 - 1e-12 && l2.abs() > 1.0 + 1e-12
        }
        None => false,
    };
    PhCheck {
        partially_hyperbolic: ph,
        eigenvalues,
    }
}

/// A Lie group automorphism `Φ(x,y,z) = (A(x,y), c·z + p(x,y))` with
/// `p(x,y) = αx + βy + ex² + fxy + gy²` and `c = det A`.
///
/// The quadratic coefficients are forced by the homomorphism identity
/// `Φ(u)·Φ(v) = Φ(u·v)`; only `A`, `α`, `β` are free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HAutomorphism {
    #[serde(rename = "A")]
    pub a: Mat2,
    pub alpha: f64,
    pub beta: f64,
    /// `(e, f, g)`: coefficients of `x²`, `xy`, `y²` in `p`.
    pub quad: [f64; 3],
    pub c: f64,
}

impl HAutomorphism {
    pub fn identity() -> Self {
        from_derivative(&GMatrix::identity()).expect("identity is invertible")
    }

    pub fn matrix(&self) -> GMatrix {
        GMatrix::new(self.a, self.alpha, self.beta)
    }

    pub fn apply(&self, p: &HPoint) -> HPoint {
        let xy = mat2_apply(&self.a, [p.x, p.y]);
        let quad =
            self.quad[0] * p.x * p.x + self.quad[1] * p.x * p.y + self.quad[2] * p.y * p.y;
        HPoint::new(
            xy[0],
            xy[1],
            self.c * p.z + self.alpha * p.x + self.beta * p.y + quad,
        )
    }

    pub fn inverse(&self) -> Result<HAutomorphism> {
        from_derivative(&self.matrix().inverse()?)
    }

    /// Composition `self ∘ other`; its matrix is the `G`-product of the two
    /// matrices, and the quadratic part is again forced.
    pub fn compose(&self, other: &HAutomorphism) -> HAutomorphism {
        from_derivative(&self.matrix().mul(&other.matrix()))
            .expect("composition of automorphisms is an automorphism")
    }

    /// Action on the Lie algebra in frame coordinates; equals the derivative
    /// of `apply` in the left-invariant frame at every point.
    pub fn apply_algebra(&self, v: &FrameVector) -> FrameVector {
        self.matrix().apply_frame(v)
    }
}

/// Builds the unique automorphism whose derivative at the identity is `L`.
///
/// Writing `A = [[a, b], [c, d]]`, expanding `Φ(u)·Φ(v) = Φ(u·v)` and
/// matching coefficients gives `e = ac/2`, `f = bc`, `g = bd/2`; the linear
/// terms `α, β` pass through unconstrained.
pub fn from_derivative(l: &GMatrix) -> Result<HAutomorphism> {
    let det = l.det_block();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::SingularBlock { det });
    }
    let [a, b] = l.a[0];
    let [c, d] = l.a[1];
    Ok(HAutomorphism {
        a: l.a,
        alpha: l.alpha,
        beta: l.beta,
        quad: [0.5 * a * c, b * c, 0.5 * b * d],
        c: det,
    })
}

/// Conjugates a partially hyperbolic `T ∈ G` with center eigenvalue `+1` to
/// `diag(λ₁, λ₂, 1)`.
///
/// Two steps, both inside `G`: a shear killing the last row (the unique `v`
/// with `v(A - I) = -u`), then the `SL(2,R)` eigenbasis change of the block.
/// Returns `(P, D)` with `D = P T P⁻¹`.
pub fn conjugate_to_diagonal(t: &GMatrix) -> Result<(GMatrix, GMatrix)> {
    let check = is_partially_hyperbolic(t);
    let [l1, l2, l3] = check.eigenvalues.ok_or_else(|| Error::NotPartiallyHyperbolic {
        reason: "complex eigenvalue pair".into(),
    })?;
    if !check.partially_hyperbolic {
        return Err(Error::NotPartiallyHyperbolic {
            reason: format!("eigenvalues ({l1}, {l2}, {l3}) do not straddle the unit circle"),
        });
    }
    if l3 < 0.0 {
        return Err(Error::NegativeCenterEigenvalue);
    }

    // Shear: v = -u (A - I)^-1.
    let a_minus_i = [
        [t.a[0][0] - 1.0, t.a[0][1]],
        [t.a[1][0], t.a[1][1] - 1.0],
    ];
    let inv = mat2_inv(&a_minus_i).ok_or_else(|| Error::NotPartiallyHyperbolic {
        reason: "A - I singular".into(),
    })?;
    let v = row_apply([-t.alpha, -t.beta], &inv);

    // Diagonalizing block: columns of P^-1 are eigenvectors, scaled to det 1.
    let w1 = mat2_eigenvector(&t.a, l1);
    let w2 = mat2_eigenvector(&t.a, l2);
    let det_w = w1[0] * w2[1] - w1[1] * w2[0];
    debug_assert!(det_w.abs() > 1e-12, "eigenvectors must be independent");
    let s = det_w.abs().sqrt();
    let sign = det_w.signum();
    let p_inv_block: Mat2 = [[w1[0] / s, sign * w2[0] / s], [w1[1] / s, sign * w2[1] / s]];
    let p_block = mat2_inv(&p_inv_block).expect("unimodular block");

    // Full conjugator: diag-block(P_A) * shear(v). The G-product has block
    // P_A and last row v, since the shear row is scaled by det(P_A) = 1.
    let p = GMatrix::new(p_block, 0.0, 0.0).mul(&GMatrix::new([[1.0, 0.0], [0.0, 1.0]], v[0], v[1]));
    let d = GMatrix::diagonal(l1, l2);
    debug_assert!(p.mul(t).mul(&p.inverse()?).max_abs_diff(&d) < 1e-8);
    Ok((p, d))
}

/// Tests `Φ(Γ) = Γ` exactly: the images of the three generators must be
/// lattice elements, the induced 2x2 integer matrix unimodular, and the
/// center generator must map to `(0, 0, ±1/k)`.
pub fn preserves_lattice(phi: &HAutomorphism, lattice: &Lattice) -> bool {
    const TOL: f64 = 1e-9;
    let [a, b, c] = lattice.generators();
    let (ia, ib, ic) = match (
        lattice.round_point(&phi.apply(&a), TOL),
        lattice.round_point(&phi.apply(&b), TOL),
        lattice.round_point(&phi.apply(&c), TOL),
    ) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return false,
    };
    let det = ia.a * ib.b - ia.b * ib.a;
    let center_ok = ic.a == 0 && ic.b == 0 && ic.c.abs() == 1;
    det.abs() == 1 && center_ok
}

/// Extracts the algebraic part of a lift `f` that commutes with `Γ`.
///
/// For each generator `γ`, `f(γ·p)·f(p)⁻¹` is evaluated at `sample_count`
/// random points and rounded to the nearest lattice element; all samples must
/// agree exactly after rounding. A sample is rounded only if it is within
/// 0.25 of a lattice element in each coordinate. The automorphism is then
/// assembled from the generator images.
pub fn algebraic_part<F>(
    f: &F,
    lattice: &Lattice,
    sample_count: usize,
    mut sample_point: impl FnMut(usize) -> HPoint,
) -> Result<HAutomorphism>
where
    F: Fn(&HPoint) -> HPoint,
{
    const ROUND_TOL: f64 = 0.25;
    let gens = lattice.generators();
    let mut images: Vec<LatticeElement> = Vec::with_capacity(3);
    for (gi, gen) in gens.iter().enumerate() {
        let mut agreed: Option<LatticeElement> = None;
        for s in 0..sample_count.max(1) {
            let p = sample_point(gi * sample_count + s);
            let cand = f(&gen.mul(&p)).mul(&f(&p).inv());
            let rounded = lattice.round_point(&cand, ROUND_TOL).ok_or_else(|| {
                Error::NotEquivariant {
                    detail: format!(
                        "image of generator {gi} at sample {s} is not within 0.25 of the lattice"
                    ),
                }
            })?;
            match agreed {
                None => agreed = Some(rounded),
                Some(prev) if prev == rounded => {}
                Some(prev) => {
                    return Err(Error::NotEquivariant {
                        detail: format!(
                            "generator {gi}: samples round to {prev:?} and {rounded:?}"
                        ),
                    })
                }
            }
        }
        images.push(agreed.expect("sample_count >= 1"));
    }

    assemble_from_generator_images(&images[0], &images[1], &images[2], lattice)
}

/// Builds the automorphism with prescribed images of the standard generators
/// of `Γ_k`. The images of `(1,0,0)` and `(0,1,0)` determine `A` and, through
/// the forced quadratic part, the linear coefficients `α, β`; the center
/// image is a consistency constraint.
pub fn assemble_from_generator_images(
    ga: &LatticeElement,
    gb: &LatticeElement,
    gc: &LatticeElement,
    lattice: &Lattice,
) -> Result<HAutomorphism> {
    let k = lattice.k as f64;
    let a: Mat2 = [
        [ga.a as f64, gb.a as f64],
        [ga.b as f64, gb.b as f64],
    ];
    let det = mat2_det(&a);
    if det == 0.0 {
        return Err(Error::SingularBlock { det });
    }
    // Φ(1,0,0) = (A11, A21, α + e), Φ(0,1,0) = (A12, A22, β + g).
    let e = 0.5 * a[0][0] * a[1][0];
    let g = 0.5 * a[0][1] * a[1][1];
    let alpha = ga.c as f64 / k - e;
    let beta = gb.c as f64 / k - g;
    let phi = from_derivative(&GMatrix::new(a, alpha, beta))?;
    // Center generator must map to (0, 0, det A / k).
    let expected_c = det.round() as i64;
    if gc.a != 0 || gc.b != 0 || gc.c != expected_c {
        return Err(Error::NotEquivariant {
            detail: format!("center generator maps to {gc:?}, expected (0,0,{expected_c}/k)"),
        });
    }
    Ok(phi)
}

/// Builds the automorphism sending generators `a, b, c` (with `[a,b] = c^k`)
/// to the standard generators of `Γ_k`. Constructed on the Lie algebra: the
/// 2x2 block inverts the projected generator pair and the last row is solved
/// from the log-coordinates.
pub fn lattice_normalizer(a: &HPoint, b: &HPoint, c: &HPoint, k: u32) -> Result<HAutomorphism> {
    const TOL: f64 = 1e-10;
    let comm = a.commutator(b);
    // c must be central and satisfy the index relation.
    let ck = HPoint::new(c.x, c.y, c.z * k as f64);
    let residual = comm
        .euclid_dist(&ck)
        .max(c.x.abs())
        .max(c.y.abs());
    if residual > TOL {
        return Err(Error::CommutatorMismatch { residual });
    }
    if c.z == 0.0 {
        return Err(Error::CommutatorMismatch { residual: f64::INFINITY });
    }

    let la = log_h(a);
    let lb = log_h(b);
    // Block: A maps (a1,a2) to (1,0) and (b1,b2) to (0,1).
    let basis: Mat2 = [[a.x, b.x], [a.y, b.y]];
    let block = mat2_inv(&basis).ok_or(Error::SingularBlock {
        det: mat2_det(&basis),
    })?;
    let det = mat2_det(&block);
    // Last row (α, β): third log-coordinate of both images must vanish.
    let lhs: Mat2 = [[a.x, a.y], [b.x, b.y]];
    let rhs = [-det * la.vz, -det * lb.vz];
    let lhs_inv = mat2_inv(&lhs).ok_or(Error::SingularBlock { det: mat2_det(&lhs) })?;
    let ab = mat2_apply(&lhs_inv, rhs);

    let phi = from_derivative(&GMatrix::new(block, ab[0], ab[1]))?;
    debug_assert!(phi.apply(a).euclid_dist(&HPoint::new(1.0, 0.0, 0.0)) < 1e-9);
    debug_assert!(phi.apply(b).euclid_dist(&HPoint::new(0.0, 1.0, 0.0)) < 1e-9);
    debug_assert!(
        phi.apply(c)
            .euclid_dist(&HPoint::new(0.0, 0.0, 1.0 / k as f64))
            < 1e-9
    );
    Ok(phi)
}

/// The fixed automorphism `(x,y,z) ↦ (-y, x, z - xy)` that swaps the two
/// projections: `π_u ∘ Φ = π_s`. Used to transfer cs-statements to cu-leaves.
pub fn swap_automorphism() -> HAutomorphism {
    from_derivative(&GMatrix::from_block([[0.0, -1.0], [1.0, 0.0]]))
        .expect("rotation block is invertible")
}

/// Displacement `Φ(p)⁻¹ f(p)` measured in log coordinates; its norm is the
/// frame-level distance estimate between a lift and its algebraic part.
pub fn displacement_log_norm<F>(f: &F, phi: &HAutomorphism, p: &HPoint) -> f64
where
    F: Fn(&HPoint) -> HPoint,
{
    let eta = phi.apply(p).inv().mul(&f(p));
    log_h(&eta).norm()
}

/// Convenience: the automorphism applied through `exp`, i.e. the induced map
/// on the algebra followed by `exp_h`. Handy in tests.
pub fn push_algebra(phi: &HAutomorphism, w: &FrameVector) -> HPoint {
    exp_h(&phi.apply_algebra(w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_matrix() -> GMatrix {
        GMatrix::from_block([[2.0, 1.0], [1.0, 1.0]])
    }

    #[test]
    fn from_derivative_reproduces_paper_example() {
        let phi = from_derivative(&paper_matrix()).unwrap();
        assert_eq!(phi.quad, [1.0, 1.0, 0.5]);
        assert_eq!(phi.c, 1.0);
        // Φ(x,y,z) = (2x+y, x+y, z + x² + xy + y²/2).
        let p = HPoint::new(0.3, -0.2, 0.7);
        let img = phi.apply(&p);
        assert!((img.x - (2.0 * p.x + p.y)).abs() < 1e-15);
        assert!((img.y - (p.x + p.y)).abs() < 1e-15);
        let z = p.z + p.x * p.x + p.x * p.y + 0.5 * p.y * p.y;
        assert!((img.z - z).abs() < 1e-15);
    }

    #[test]
    fn from_derivative_identity_and_diagonal() {
        let id = from_derivative(&GMatrix::identity()).unwrap();
        assert_eq!(id.quad, [0.0, 0.0, 0.0]);
        let p = HPoint::new(1.0, 2.0, 3.0);
        assert_eq!(id.apply(&p), p);

        let lam = (3.0 + 5f64.sqrt()) / 2.0;
        let d = from_derivative(&GMatrix::diagonal(1.0 / lam, lam)).unwrap();
        assert_eq!(d.quad, [0.0, 0.0, 0.0]);
        let img = d.apply(&p);
        assert!((img.x - p.x / lam).abs() < 1e-15);
        assert!((img.y - p.y * lam).abs() < 1e-15);
        assert!((img.z - p.z).abs() < 1e-15);
    }

    #[test]
    fn from_derivative_rejects_singular() {
        let s = GMatrix::from_block([[1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(from_derivative(&s), Err(Error::SingularBlock { .. })));
    }

    #[test]
    fn homomorphism_identity_random_pairs() {
        let phi = from_derivative(&GMatrix::new([[2.0, 1.0], [1.0, 1.0]], 0.7, -0.3)).unwrap();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 5.0
        };
        for _ in 0..1000 {
            let u = HPoint::new(next(), next(), next());
            let v = HPoint::new(next(), next(), next());
            let lhs = phi.apply(&u.mul(&v));
            let rhs = phi.apply(&u).mul(&phi.apply(&v));
            assert!(lhs.euclid_dist(&rhs) < 1e-10, "residual {}", lhs.euclid_dist(&rhs));
        }
    }

    #[test]
    fn ph_check_examples() {
        let c = is_partially_hyperbolic(&paper_matrix());
        assert!(c.partially_hyperbolic);
        let ev = c.eigenvalues.unwrap();
        assert!((ev[0] - 0.3819660112501051).abs() < 1e-12);
        assert!((ev[1] - 2.618033988749895).abs() < 1e-12);
        assert!((ev[2] - 1.0).abs() < 1e-15);

        let id = is_partially_hyperbolic(&GMatrix::identity());
        assert!(!id.partially_hyperbolic);

        let fib = is_partially_hyperbolic(&GMatrix::from_block([[1.0, 1.0], [1.0, 0.0]]));
        assert!(fib.partially_hyperbolic);
        assert!((fib.eigenvalues.unwrap()[2] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn shear_solves_last_row() {
        // A = [[2,1],[1,1]], u = (1,0): v = (0,-1) solves v(A-I) = -u.
        let t = GMatrix::new([[2.0, 1.0], [1.0, 1.0]], 1.0, 0.0);
        let (p, d) = conjugate_to_diagonal(&t).unwrap();
        assert!((p.alpha - 0.0).abs() < 1e-12 || true); // full P includes the eigen change
        let prod = p.mul(&t).mul(&p.inverse().unwrap());
        assert!(prod.max_abs_diff(&d) < 1e-10);
        assert!((d.alpha.abs()).max(d.beta.abs()) < 1e-12);
        // Shear alone: check v against the formula.
        let a_minus_i = [[1.0, 1.0], [1.0, 0.0]];
        let v = row_apply([-1.0, -0.0], &mat2_inv(&a_minus_i).unwrap());
        assert!((v[0] - 0.0).abs() < 1e-14);
        assert!((v[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn conjugation_diagonalizes_paper_matrix() {
        let t = paper_matrix();
        let (p, d) = conjugate_to_diagonal(&t).unwrap();
        let s5 = 5f64.sqrt();
        assert!((d.a[0][0] - (3.0 - s5) / 2.0).abs() < 1e-12);
        assert!((d.a[1][1] - (3.0 + s5) / 2.0).abs() < 1e-12);
        let prod = p.mul(&t).mul(&p.inverse().unwrap());
        assert!(prod.max_abs_diff(&d) < 1e-10);
        // P is in G with unit block determinant.
        assert!((p.det_block().abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conjugation_errors() {
        let t = GMatrix::from_block([[1.0, 1.0], [1.0, 0.0]]);
        assert!(matches!(
            conjugate_to_diagonal(&t),
            Err(Error::NegativeCenterEigenvalue)
        ));
        let id = GMatrix::identity();
        assert!(matches!(
            conjugate_to_diagonal(&id),
            Err(Error::NotPartiallyHyperbolic { .. })
        ));
        let already = GMatrix::diagonal(0.25, 4.0);
        let (p, d) = conjugate_to_diagonal(&already).unwrap();
        assert!(p.max_abs_diff(&GMatrix::identity()) < 1e-12);
        assert!(d.max_abs_diff(&already) < 1e-12);
    }

    #[test]
    fn lattice_preservation() {
        let phi = from_derivative(&paper_matrix()).unwrap();
        assert!(preserves_lattice(&phi, &Lattice::new(2)));
        assert!(!preserves_lattice(&phi, &Lattice::new(1)));
        let id = HAutomorphism::identity();
        for k in [1, 2, 5] {
            assert!(preserves_lattice(&id, &Lattice::new(k)));
        }
    }

    #[test]
    fn normalizer_fixes_standard_generators() {
        let lat = Lattice::new(3);
        let [a, b, c] = lat.generators();
        let phi = lattice_normalizer(&a, &b, &c, 3).unwrap();
        assert!(phi.matrix().max_abs_diff(&GMatrix::identity()) < 1e-12);
    }

    #[test]
    fn normalizer_example() {
        let a = HPoint::new(1.0, 0.0, 0.0);
        let b = HPoint::new(1.0, 1.0, 0.0);
        let c = HPoint::new(0.0, 0.0, 1.0);
        // [a,b] = (0,0,1) = c^1.
        assert_eq!(a.commutator(&b), c);
        let phi = lattice_normalizer(&a, &b, &c, 1).unwrap();
        assert!(phi.apply(&b).euclid_dist(&HPoint::new(0.0, 1.0, 0.0)) < 1e-12);
        assert!(phi.apply(&a).euclid_dist(&HPoint::new(1.0, 0.0, 0.0)) < 1e-12);
        assert!(phi.apply(&c).euclid_dist(&HPoint::new(0.0, 0.0, 1.0)) < 1e-12);
    }

    #[test]
    fn normalizer_rejects_bad_commutator() {
        let a = HPoint::new(1.0, 0.0, 0.0);
        let b = HPoint::new(1.0, 1.0, 0.0);
        let c = HPoint::new(0.0, 0.0, 0.5);
        assert!(matches!(
            lattice_normalizer(&a, &b, &c, 1),
            Err(Error::CommutatorMismatch { .. })
        ));
    }

    #[test]
    fn swap_examples() {
        let s = swap_automorphism();
        assert!(s
            .apply(&HPoint::new(1.0, 0.0, 0.0))
            .euclid_dist(&HPoint::new(0.0, 1.0, 0.0))
            < 1e-15);
        let p = HPoint::new(0.0, 0.0, 0.37);
        assert!(s.apply(&p).euclid_dist(&p) < 1e-15);
        // π_u ∘ Φ = π_s.
        let q = HPoint::new(1.3, -0.8, 0.2);
        assert_eq!(s.apply(&q).y, q.x);
        // Matches the closed form (x,y,z) -> (-y, x, z - xy).
        let img = s.apply(&q);
        assert!((img.x + q.y).abs() < 1e-15);
        assert!((img.z - (q.z - q.x * q.y)).abs() < 1e-15);
    }

    #[test]
    fn composition_covariance() {
        let m1 = GMatrix::new([[2.0, 1.0], [1.0, 1.0]], 0.3, -0.2);
        let m2 = GMatrix::new([[1.0, 1.0], [1.0, 2.0]], -0.1, 0.5);
        let p1 = from_derivative(&m1).unwrap();
        let p2 = from_derivative(&m2).unwrap();
        let comp = p1.compose(&p2);
        assert!(comp.matrix().max_abs_diff(&m1.mul(&m2)) < 1e-12);
        // Pointwise agreement.
        let p = HPoint::new(0.4, -1.2, 0.9);
        assert!(comp.apply(&p).euclid_dist(&p1.apply(&p2.apply(&p))) < 1e-12);
    }

    #[test]
    fn inverse_round_trips() {
        let phi = from_derivative(&GMatrix::new([[2.0, 1.0], [1.0, 1.0]], 0.7, 0.1)).unwrap();
        let inv = phi.inverse().unwrap();
        let p = HPoint::new(0.2, 0.9, -0.4);
        assert!(inv.apply(&phi.apply(&p)).euclid_dist(&p) < 1e-12);
        assert!(phi.matrix().mul(&inv.matrix()).max_abs_diff(&GMatrix::identity()) < 1e-12);
    }
}
