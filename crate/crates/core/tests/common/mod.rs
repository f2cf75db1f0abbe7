//! Shared oracles for the property suites. Everything here recomputes
//! expected values through an independent route: unipotent 3x3 matrices for
//! the group law, dense linear solves for frame coordinates, characteristic
//! polynomials for eigenvalues, finite differences for derivatives.

#![allow(dead_code)]

use heisenlab_core::auto::{from_derivative, GMatrix, HAutomorphism};
use heisenlab_core::dynamics::{
    FrameComponent, NilDiffeo, Perturbation, PerturbationTerm, WaveKind,
};
use heisenlab_core::heis::{HPoint, Lattice};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A Heisenberg point as the literal unipotent matrix it abbreviates.
#[derive(Debug, Clone, Copy)]
pub struct UniTri(pub [[f64; 3]; 3]);

impl UniTri {
    pub fn from_point(p: &HPoint) -> Self {
        UniTri([
            [1.0, p.x, p.z],
            [0.0, 1.0, p.y],
            [0.0, 0.0, 1.0],
        ])
    }

    pub fn to_point(&self) -> HPoint {
        HPoint::new(self.0[0][1], self.0[1][2], self.0[0][2])
    }

    pub fn mul(&self, o: &UniTri) -> UniTri {
        let mut c = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    c[i][j] += self.0[i][k] * o.0[k][j];
                }
            }
        }
        UniTri(c)
    }

    /// Inverse of a unipotent upper-triangular matrix in closed form.
    pub fn inv(&self) -> UniTri {
        let x = self.0[0][1];
        let y = self.0[1][2];
        let z = self.0[0][2];
        UniTri([
            [1.0, -x, x * y - z],
            [0.0, 1.0, -y],
            [0.0, 0.0, 1.0],
        ])
    }
}

/// Oracle group product via matrix multiplication.
pub fn mul_oracle(p: &HPoint, q: &HPoint) -> HPoint {
    UniTri::from_point(p).mul(&UniTri::from_point(q)).to_point()
}

/// Oracle inverse via the matrix inverse.
pub fn inv_oracle(p: &HPoint) -> HPoint {
    UniTri::from_point(p).inv().to_point()
}

/// Dense 3x3 solve by Gaussian elimination with partial pivoting.
pub fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        for row in col + 1..3 {
            let fac = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= fac * m[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut s = m[i][3];
        for k in i + 1..3 {
            s -= m[i][k] * x[k];
        }
        x[i] = s / m[i][i];
    }
    x
}

/// Roots of the characteristic polynomial of a 2x2 matrix, smallest modulus
/// first; `None` when complex.
pub fn char_roots(a: [[f64; 2]; 2]) -> Option<[f64; 2]> {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let r1 = 0.5 * (tr + s);
    let r2 = 0.5 * (tr - s);
    Some(if r1.abs() < r2.abs() { [r1, r2] } else { [r2, r1] })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(r: &mut ChaCha8Rng, scale: f64) -> HPoint {
    HPoint::new(
        r.gen_range(-scale..scale),
        r.gen_range(-scale..scale),
        r.gen_range(-scale..scale),
    )
}

pub fn paper_matrix() -> GMatrix {
    GMatrix::from_block([[2.0, 1.0], [1.0, 1.0]])
}

pub fn paper_auto() -> HAutomorphism {
    from_derivative(&paper_matrix()).unwrap()
}

pub fn lambda() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

/// The canonical three-wave perturbation of weight `amp`.
pub fn canonical_terms(amp: f64) -> Vec<PerturbationTerm> {
    if amp == 0.0 {
        return Vec::new();
    }
    vec![
        PerturbationTerm::new(FrameComponent::X, 0, 1, WaveKind::Sin, 0.5 * amp),
        PerturbationTerm::new(FrameComponent::Y, 1, 0, WaveKind::Cos, 0.3 * amp),
        PerturbationTerm::new(FrameComponent::Z, 1, 1, WaveKind::Cos, 0.2 * amp),
    ]
}

/// The worked-example system on `Γ_2` at a given perturbation weight.
pub fn paper_system(amp: f64) -> NilDiffeo {
    let pert = Perturbation::new(canonical_terms(amp)).unwrap();
    NilDiffeo::new(paper_auto(), pert, Lattice::new(2)).unwrap()
}

/// A diagonal-normal-form system (not lattice-preserving; perturbation-free
/// uses only direct orbits).
pub fn diagonal_system() -> NilDiffeo {
    let auto = from_derivative(&GMatrix::diagonal(1.0 / lambda(), lambda())).unwrap();
    NilDiffeo::new(auto, Perturbation::none(), Lattice::new(1)).unwrap()
}
