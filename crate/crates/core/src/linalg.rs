//! Small fixed-size matrix helpers. Everything here is 2x2 or 3x3 and
//! hand-rolled; the sizes never change and the closed forms keep results
//! reproducible across platforms.

pub type Mat2 = [[f64; 2]; 2];
pub type Mat3 = [[f64; 3]; 3];

pub fn mat2_det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat2_inv(a: &Mat2) -> Option<Mat2> {
    let d = mat2_det(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]])
}

pub fn mat2_apply(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Row-vector action `v A`.
pub fn row_apply(v: [f64; 2], a: &Mat2) -> [f64; 2] {
    [v[0] * a[0][0] + v[1] * a[1][0], v[0] * a[0][1] + v[1] * a[1][1]]
}

/// Real eigenvalues of a 2x2 matrix by the quadratic formula with a
/// stabilized discriminant; `None` when the pair is complex.
pub fn mat2_eigenvalues(a: &Mat2) -> Option<[f64; 2]> {
    let tr = a[0][0] + a[1][1];
    let det = mat2_det(a);
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // Avoid cancellation: compute the root of larger magnitude first.
    let r1 = if tr >= 0.0 { 0.5 * (tr + s) } else { 0.5 * (tr - s) };
    let r2 = if r1 != 0.0 { det / r1 } else { 0.5 * (tr - s.copysign(tr)) };
    let (lo, hi) = if r1.abs() <= r2.abs() { (r1, r2) } else { (r2, r1) };
    Some([lo, hi])
}

/// Right eigenvector of `a` for the eigenvalue `lambda`, unnormalized.
pub fn mat2_eigenvector(a: &Mat2, lambda: f64) -> [f64; 2] {
    // (a - lambda I) v = 0: pick the larger row for stability.
    let m = [[a[0][0] - lambda, a[0][1]], [a[1][0], a[1][1] - lambda]];
    let r0 = m[0][0].abs() + m[0][1].abs();
    let r1 = m[1][0].abs() + m[1][1].abs();
    let row = if r0 >= r1 { m[0] } else { m[1] };
    if row[0].abs() >= row[1].abs() && row[0] != 0.0 {
        [-row[1] / row[0], 1.0]
    } else if row[1] != 0.0 {
        [1.0, -row[0] / row[1]]
    } else {
        [1.0, 0.0]
    }
}

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (k, bk) in b.iter().enumerate() {
                c[i][j] += a[i][k] * bk[j];
            }
        }
    }
    c
}

pub fn mat3_apply(a: &Mat3, v: [f64; 3]) -> [f64; 3] {
    let mut r = [0.0; 3];
    for i in 0..3 {
        r[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2];
    }
    r
}

pub fn mat3_transpose(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn mat3_det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Adjugate (transposed cofactor matrix): `adj(A) = det(A) A^-1`.
pub fn mat3_adjugate(a: &Mat3) -> Mat3 {
    let c = |i: usize, j: usize| -> f64 {
        let r = [(i + 1) % 3, (i + 2) % 3];
        let s = [(j + 1) % 3, (j + 2) % 3];
        a[r[0]][s[0]] * a[r[1]][s[1]] - a[r[0]][s[1]] * a[r[1]][s[0]]
    };
    // adj[j][i] = cofactor(i, j); the cyclic index trick folds the signs in.
    let mut adj = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            adj[j][i] = c(i, j);
        }
    }
    adj
}

pub fn mat3_inv(a: &Mat3) -> Option<Mat3> {
    let d = mat3_det(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let adj = mat3_adjugate(a);
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            inv[i][j] = adj[i][j] / d;
        }
    }
    Some(inv)
}

pub fn mat3_max_abs(a: &Mat3) -> f64 {
    let mut m: f64 = 0.0;
    for row in a {
        for &v in row {
            m = m.max(v.abs());
        }
    }
    m
}

pub fn mat3_sub(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][j] - b[i][j];
        }
    }
    c
}

pub const MAT3_IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
