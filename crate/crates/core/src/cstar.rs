//! Finite-dimensional *-algebras given by structure constants.

use crate::error::{Error, Result};
use crate::linalg::{diff, herm_eig, kron, max_abs, r, spectral_norm, sqrt_pair, Mat, Vector, C64, ZERO};

/// `left[i]` is the matrix of left multiplication by the basis element
/// `e_i`; the star is `a* = star · conj(a)`.
#[derive(Clone, Debug)]
pub struct FdAlgebra {
    pub left: Vec<Mat>,
    pub star: Mat,
    pub unit: Vector,
}

/// GNS data of a faithful functional: `gh = G^{1/2}`, `ghi = G^{-1/2}`.
#[derive(Clone, Debug)]
pub struct Gns {
    pub functional: Vector,
    pub gram: Mat,
    pub gh: Mat,
    pub ghi: Mat,
}

impl FdAlgebra {
    /// Builds the algebra from a product on basis elements; the unit is
    /// solved for and must exist.
    pub fn from_product(dim: usize, star: Mat, prod: impl Fn(usize, usize) -> Vector) -> Result<FdAlgebra> {
        let mut left = vec![Mat::zeros(dim, dim); dim];
        for (i, li) in left.iter_mut().enumerate() {
            for j in 0..dim {
                li.set_column(j, &prod(i, j));
            }
        }
        let unit = solve_unit(&left)?;
        Ok(FdAlgebra { left, star, unit })
    }

    pub fn dim(&self) -> usize {
        self.left.len()
    }

    pub fn lmat(&self, a: &Vector) -> Mat {
        let n = self.dim();
        let mut m = Mat::zeros(n, n);
        for (i, l) in self.left.iter().enumerate() {
            if a[i] != ZERO {
                m += l * a[i];
            }
        }
        m
    }

    pub fn mul(&self, a: &Vector, b: &Vector) -> Vector {
        self.lmat(a) * b
    }

    pub fn adj(&self, a: &Vector) -> Vector {
        &self.star * a.map(|z| z.conj())
    }

    pub fn basis(&self, i: usize) -> Vector {
        let mut v = Vector::zeros(self.dim());
        v[i] = r(1.0);
        v
    }

    /// `τ(a) = Tr(L_a) / Tr(L_1)` as a row functional.
    pub fn regular_trace(&self) -> Vector {
        let t1 = self.lmat(&self.unit).trace();
        Vector::from_iterator(self.dim(), self.left.iter().map(|l| l.trace() / t1))
    }

    pub fn apply(functional: &Vector, a: &Vector) -> C64 {
        functional.iter().zip(a.iter()).map(|(f, x)| f * x).sum()
    }

    pub fn gram(&self, functional: &Vector) -> Mat {
        let n = self.dim();
        let stars: Vec<Vector> = (0..n).map(|i| self.adj(&self.basis(i))).collect();
        Mat::from_fn(n, n, |i, j| Self::apply(functional, &self.left_col(&stars[i], j)))
    }

    fn left_col(&self, a: &Vector, j: usize) -> Vector {
        self.lmat(a).column(j).into_owned()
    }

    pub fn gns(&self, functional: &Vector) -> Result<Gns> {
        let gram = self.gram(functional);
        let scale = max_abs(&gram).max(1e-300);
        let (gh, ghi) = sqrt_pair(&gram, 1e-12 * scale).ok_or_else(|| {
            Error::Degenerate(format!("functional is not faithful (min eig {:e})", crate::linalg::min_eig(&gram)))
        })?;
        Ok(Gns { functional: functional.clone(), gram, gh, ghi })
    }

    /// Left multiplication by `a` in an orthonormal GNS frame.
    pub fn rep(&self, g: &Gns, a: &Vector) -> Mat {
        &g.gh * self.lmat(a) * &g.ghi
    }

    pub fn op_norm(&self, g: &Gns, a: &Vector) -> f64 {
        spectral_norm(&self.rep(g, a))
    }

    /// Spectrum of the Hermitian part of `a`.
    pub fn spectrum(&self, g: &Gns, a: &Vector) -> Vec<f64> {
        herm_eig(&self.rep(g, a)).0
    }

    pub fn min_eig(&self, g: &Gns, a: &Vector) -> f64 {
        self.spectrum(g, a).first().copied().unwrap_or(0.0)
    }

    pub fn associativity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let lhs = self.lmat(&self.left[i].column(j).into_owned());
                let rhs = &self.left[i] * &self.left[j];
                worst = worst.max(diff(&lhs, &rhs));
            }
        }
        worst
    }

    /// Max of `|(ab)* - b*a*|` over basis pairs and `|a** - a|`.
    pub fn star_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let ei = self.basis(i);
            worst = worst.max(crate::linalg::max_abs_vec((self.adj(&self.adj(&ei)) - &ei).as_slice()));
            for j in 0..n {
                let ej = self.basis(j);
                let lhs = self.adj(&self.mul(&ei, &ej));
                let rhs = self.mul(&self.adj(&ej), &self.adj(&ei));
                worst = worst.max(crate::linalg::max_abs_vec((lhs - rhs).as_slice()));
            }
        }
        worst
    }

    pub fn unit_residual(&self) -> f64 {
        let n = self.dim();
        let lu = self.lmat(&self.unit);
        let mut worst = diff(&lu, &Mat::identity(n, n));
        for i in 0..n {
            let ei = self.basis(i);
            let v = self.mul(&ei, &self.unit) - &ei;
            worst = worst.max(crate::linalg::max_abs_vec(v.as_slice()));
        }
        worst
    }

    pub fn tensor(&self, other: &FdAlgebra) -> FdAlgebra {
        let mut left = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.left {
            for b in &other.left {
                left.push(kron(a, b));
            }
        }
        FdAlgebra {
            left,
            star: kron(&self.star, &other.star),
            unit: Vector::from_iterator(
                self.dim() * other.dim(),
                self.unit.iter().flat_map(|&x| other.unit.iter().map(move |&y| x * y)),
            ),
        }
    }

    /// Basis of the center.
    pub fn center(&self) -> Mat {
        let n = self.dim();
        // z central iff L_z e_j = L_{e_j} z for all j
        let mut a = Mat::zeros(n * n, n);
        for j in 0..n {
            for k in 0..n {
                let col = self.left[k].column(j) - self.left[j].column(k);
                a.view_mut((j * n, k), (n, 1)).copy_from(&col);
            }
        }
        crate::linalg::nullspace(&a, 1e-10)
    }

    /// Dimensions of the simple summands, via the commutant of the left
    /// regular representation.
    pub fn block_sizes(&self) -> Result<Vec<usize>> {
        let g = self.gns(&self.regular_trace())?;
        let gens: Vec<Mat> = (0..self.dim()).map(|i| self.rep(&g, &self.basis(i))).collect();
        let blocks = crate::inclusion_analysis::commutant_blocks_raw(&gens, 7)?;
        let mut out: Vec<usize> = blocks.iter().map(|b| b.h).collect();
        out.sort();
        Ok(out)
    }

    /// Smallest value of the regular trace on a minimal projection.
    pub fn min_projection_weight(&self) -> Result<f64> {
        let sizes = self.block_sizes()?;
        let total: usize = sizes.iter().map(|n| n * n).sum();
        Ok(sizes.iter().map(|&n| n as f64 / total as f64).fold(f64::INFINITY, f64::min))
    }
}

fn solve_unit(left: &[Mat]) -> Result<Vector> {
    let n = left.len();
    if n == 0 {
        return Ok(Vector::zeros(0));
    }
    let mut a = Mat::zeros(n * n, n);
    for (i, l) in left.iter().enumerate() {
        a.set_column(i, &Vector::from_column_slice(l.as_slice()));
    }
    let id = Mat::identity(n, n);
    let b = Vector::from_column_slice(id.as_slice());
    let u = crate::linalg::solve_lstsq(&a, &b, 1e-12);
    let res = crate::linalg::max_abs_vec((&a * &u - &b).as_slice());
    if res > 1e-8 {
        return Err(Error::Degenerate(format!("algebra has no unit (residual {res:e})")));
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ONE};

    /// M_2 in the matrix-unit basis E11, E12, E21, E22.
    pub(crate) fn m2() -> FdAlgebra {
        let idx = |i: usize, j: usize| i * 2 + j;
        let mut star = Mat::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                star[(idx(j, i), idx(i, j))] = ONE;
            }
        }
        FdAlgebra::from_product(4, star, |a, b| {
            let (i, j) = (a / 2, a % 2);
            let (k, l) = (b / 2, b % 2);
            let mut v = Vector::zeros(4);
            if j == k {
                v[idx(i, l)] = ONE;
            }
            v
        })
        .unwrap()
    }

    #[test]
    fn matrix_algebra_norms() {
        let a = m2();
        assert!(a.associativity_residual() < 1e-14);
        assert!(a.star_residual() < 1e-14);
        let tau = a.regular_trace();
        assert!((FdAlgebra::apply(&tau, &a.unit) - ONE).norm() < 1e-14);
        let g = a.gns(&tau).unwrap();
        let x = Vector::from_vec(vec![ONE, c(0.0, 2.0), ZERO, r(-1.0)]);
        // [[1, 2i], [0, -1]] has operator norm 1 + √2
        assert!((a.op_norm(&g, &x) - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(a.block_sizes().unwrap(), vec![2]);
        assert_eq!(a.center().ncols(), 1);
    }

    #[test]
    fn tensor_with_c2() {
        let c2 = FdAlgebra::from_product(2, Mat::identity(2, 2), |i, j| {
            let mut v = Vector::zeros(2);
            if i == j {
                v[i] = ONE;
            }
            v
        })
        .unwrap();
        let t = m2().tensor(&c2);
        assert!(t.associativity_residual() < 1e-14);
        assert_eq!(t.block_sizes().unwrap(), vec![2, 2]);
        assert!((t.min_projection_weight().unwrap() - 0.25).abs() < 1e-12);
    }
}
