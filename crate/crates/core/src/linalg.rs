//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type Mat = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const ZERO: C64 = Complex { re: 0.0, im: 0.0 };
pub const ONE: C64 = Complex { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn r(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in diff");
    max_abs(&(a - b))
}

pub fn hermitize(m: &Mat) -> Mat {
    (m + m.adjoint()) * r(0.5)
}

// nalgebra's symmetric_eigen and complex SVD occasionally return wrong
// factors on degenerate input (commuting projections, low rank), so the
// decompositions go through faer.
fn to_faer(a: &Mat) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| faer::c64::new(a[(i, j)].re, a[(i, j)].im))
}

fn from_faer(a: faer::MatRef<'_, faer::c64>) -> Mat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c(a[(i, j)].re, a[(i, j)].im))
}

// (U, σ descending, V) with U and V square.
fn svd(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    let f = to_faer(a).svd().expect("svd converges");
    let s = f.S().column_vector();
    let sv = (0..s.nrows()).map(|i| s[i].re).collect();
    (from_faer(f.U()), sv, from_faer(f.V()))
}

/// Eigen-decomposition of the Hermitian part, eigenvalues ascending.
pub fn herm_eig(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], Mat::zeros(0, 0));
    }
    let eig = to_faer(&hermitize(m)).self_adjoint_eigen(faer::Side::Lower).expect("eigen converges");
    let s = eig.S().column_vector();
    let vals: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let vecs = from_faer(eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let mut sorted = Mat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        sorted.set_column(k, &vecs.column(i));
    }
    (order.iter().map(|&i| vals[i]).collect(), sorted)
}

pub fn min_eig(m: &Mat) -> f64 {
    herm_eig(m).0.first().copied().unwrap_or(0.0)
}

pub fn spectral_norm(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    svd(m).1.iter().fold(0.0, |a: f64, &s| a.max(s))
}

/// Orthonormal basis (as columns) of the kernel of `a`; singular values
/// below `rel · max(σ_max, 1)` count as zero.
pub fn nullspace(a: &Mat, rel: f64) -> Mat {
    let n = a.ncols();
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return Mat::identity(n, n);
    }
    let (_, sv, v) = svd(a);
    let top = sv.iter().fold(1.0f64, |m, &s| m.max(s));
    let live = sv.iter().filter(|&&s| s > rel * top).count();
    v.columns(live, n - live).into_owned()
}

/// Numerical rank with a threshold relative to the largest singular value.
pub fn rank(m: &Mat, rel: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = svd(m).1;
    let top = sv.iter().fold(0.0, |a: f64, &s| a.max(s));
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * top).count()
}

/// Minimum-norm least-squares solution of `a x = b`; singular values at or
/// below `eps` are dropped.
pub fn solve_lstsq(a: &Mat, b: &Vector, eps: f64) -> Vector {
    let (u, sv, v) = svd(a);
    let mut x = Vector::zeros(a.ncols());
    for (i, &s) in sv.iter().enumerate().filter(|(_, &s)| s > eps) {
        let coef = u.column(i).dotc(b) / r(s);
        x += v.column(i) * coef;
    }
    x
}

/// `(G^{1/2}, G^{-1/2})` for a positive definite `g`.
pub fn sqrt_pair(g: &Mat, floor: f64) -> Option<(Mat, Mat)> {
    let (vals, vecs) = herm_eig(g);
    if vals.iter().any(|&v| v <= floor) {
        return None;
    }
    let n = vals.len();
    let mut s = Mat::zeros(n, n);
    let mut si = Mat::zeros(n, n);
    for (i, &v) in vals.iter().enumerate() {
        s[(i, i)] = r(v.sqrt());
        si[(i, i)] = r(1.0 / v.sqrt());
    }
    Some((&vecs * s * vecs.adjoint(), &vecs * si * vecs.adjoint()))
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

pub fn random_c64<R: Rng>(rng: &mut R) -> C64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| random_c64(rng))
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| random_c64(rng)).collect()
}

pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> Mat {
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    random_matrix(rng, n, n).qr().q()
}

/// Gram–Schmidt on columns; drops columns that fall below `tol`.
pub fn orthonormalize(cols: &[Vector], tol: f64) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::new();
    for v in cols {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let p = u.dotc(&w);
                w -= u * p;
            }
        }
        let n = w.norm();
        if n > tol {
            out.push(w / r(n));
        }
    }
    out
}

pub fn columns_to_mat(n: usize, cols: &[Vector]) -> Mat {
    let mut m = Mat::zeros(n, cols.len());
    for (k, v) in cols.iter().enumerate() {
        m.set_column(k, v);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nullspace_of_rank_one() {
        let a = Mat::from_row_slice(1, 3, &[ONE, ONE, ZERO]);
        let k = nullspace(&a, 1e-12);
        assert_eq!(k.ncols(), 2);
        assert!(max_abs(&(&a * &k)) < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(&mut rng, 5);
        assert!(diff(&(u.adjoint() * &u), &Mat::identity(5, 5)) < 1e-12);
    }

    #[test]
    fn sqrt_pair_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 4, 4);
        let g = a.adjoint() * &a + Mat::identity(4, 4);
        let (s, si) = sqrt_pair(&g, 0.0).unwrap();
        assert!(diff(&(&s * &s), &g) < 1e-10);
        assert!(diff(&(&s * &si), &Mat::identity(4, 4)) < 1e-10);
    }
}
