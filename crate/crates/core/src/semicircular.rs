//! Truncated Fock spaces of `A`-valued covariance matrices and their
//! semicircular operators, for `A` a concrete *-subalgebra of `M_k`.
//!
//! Level `n` of the Fock space is kept as a scalar Hilbert space
//! `V_n = X^{⊗n} ⊗_A L²(A, τ)`, spanned by `a ξ_i ⊗ v` with `v ∈ V_{n-1}` and
//! Gram entries `⟨v, η_ij(a* b) ▹ w⟩`. Null directions are quotiented.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cstar::FdAlgebra;
use crate::error::{Error, Result};
use crate::inclusion_analysis::commutant_blocks_raw;
use crate::io::{as_arr, as_obj, as_str, as_usize, child, cmatrix, field, matrix_json, split_key};
use crate::linalg::{herm_eig, kron, max_abs, r, random_vector, spectral_norm, Mat, Vector, ONE, ZERO};

pub const CP_FLOOR: f64 = 1e-10;
pub const RANK_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_DEPTH: usize = 12;
pub const DEFAULT_DIM_CAP: usize = 4096;
pub const VERDICT: &str = "criterion ingredients verified (finite A)";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    Scalar,
    Matrix,
    Diagonal,
}

/// `A ⊂ M_k` with a basis of matrices and the normalized trace.
#[derive(Clone, Debug)]
pub struct BaseAlgebra {
    pub kind: BaseKind,
    pub k: usize,
    pub mats: Vec<Mat>,
    pub alg: FdAlgebra,
    pub trace: Vector,
}

impl BaseAlgebra {
    pub fn scalar() -> BaseAlgebra {
        Self::from_mats(BaseKind::Scalar, 1, vec![Mat::identity(1, 1)])
    }

    /// `M_k` in matrix units, `E_ij` at `i k + j`.
    pub fn matrix(k: usize) -> BaseAlgebra {
        let mats = (0..k * k)
            .map(|p| {
                let mut m = Mat::zeros(k, k);
                m[(p / k, p % k)] = ONE;
                m
            })
            .collect();
        Self::from_mats(BaseKind::Matrix, k, mats)
    }

    /// `ℂ^k` as diagonal matrices.
    pub fn diagonal(k: usize) -> BaseAlgebra {
        let mats = (0..k)
            .map(|p| {
                let mut m = Mat::zeros(k, k);
                m[(p, p)] = ONE;
                m
            })
            .collect();
        Self::from_mats(BaseKind::Diagonal, k, mats)
    }

    fn from_mats(kind: BaseKind, k: usize, mats: Vec<Mat>) -> BaseAlgebra {
        let n = mats.len();
        let coords = |m: &Mat| -> Vector { Self::coords_in(&mats, m) };
        let mut star = Mat::zeros(n, n);
        for (i, m) in mats.iter().enumerate() {
            star.set_column(i, &coords(&m.adjoint()));
        }
        let alg =
            FdAlgebra::from_product(n, star, |i, j| coords(&(&mats[i] * &mats[j]))).expect("base algebra is unital");
        let trace = Vector::from_iterator(n, mats.iter().map(|m| m.trace() / r(k as f64)));
        BaseAlgebra { kind, k, mats, alg, trace }
    }

    fn coords_in(mats: &[Mat], m: &Mat) -> Vector {
        // the bases used here consist of matrix units, so coordinates are entries
        Vector::from_iterator(
            mats.len(),
            mats.iter().map(|b| {
                let (p, q) = b
                    .iter()
                    .enumerate()
                    .find(|(_, z)| **z != ZERO)
                    .map(|(i, _)| (i % b.nrows(), i / b.nrows()))
                    .unwrap();
                m[(p, q)]
            }),
        )
    }

    pub fn dim(&self) -> usize {
        self.mats.len()
    }

    pub fn coords(&self, m: &Mat) -> Vector {
        Self::coords_in(&self.mats, m)
    }

    pub fn matrix_of(&self, x: &Vector) -> Mat {
        let mut m = Mat::zeros(self.k, self.k);
        for (b, z) in self.mats.iter().zip(x.iter()) {
            m += b * *z;
        }
        m
    }

    pub fn tau(&self, x: &Vector) -> crate::linalg::C64 {
        FdAlgebra::apply(&self.trace, x)
    }

    pub fn norm(&self, x: &Vector) -> f64 {
        spectral_norm(&self.matrix_of(x))
    }

    pub fn basis(&self, i: usize) -> Vector {
        self.alg.basis(i)
    }

    pub fn unit(&self) -> Vector {
        self.alg.unit.clone()
    }

    /// The trace-preserving conditional expectation `M_k -> A`.
    pub fn project(&self, m: &Mat) -> Vector {
        match self.kind {
            BaseKind::Diagonal => Vector::from_iterator(self.k, (0..self.k).map(|p| m[(p, p)])),
            _ => self.coords(m),
        }
    }

    pub fn from_json(v: &Value) -> Result<BaseAlgebra> {
        let o = as_obj(v, "")?;
        let kind = as_str(field(o, "kind", "")?, "/kind")?;
        let k = match o.get("k") {
            Some(k) => as_usize(k, "/k", 16)?,
            None => 1,
        };
        if k == 0 {
            return Err(Error::schema("/k", "must be positive"));
        }
        match kind {
            "scalar" => Ok(Self::scalar()),
            "matrix" => Ok(Self::matrix(k)),
            "diagonal" => Ok(Self::diagonal(k)),
            _ => Err(Error::schema("/kind", format!("unknown base algebra `{kind}`"))),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "kind": self.kind, "k": self.k })
    }
}

/// `η = (η_ij)`, each `η_ij: A -> A` a matrix in the basis of `A`.
#[derive(Clone, Debug)]
pub struct CovarianceMatrix {
    pub base: BaseAlgebra,
    pub index: Vec<String>,
    pub maps: Vec<Vec<Mat>>,
    /// Computed row bound `C`.
    pub bound: f64,
    pub choi_min_eig: f64,
}

impl CovarianceMatrix {
    pub fn new(base: BaseAlgebra, index: Vec<String>, maps: Vec<Vec<Mat>>) -> Result<CovarianceMatrix> {
        let n = index.len();
        let d = base.dim();
        if maps.len() != n || maps.iter().any(|row| row.len() != n || row.iter().any(|m| m.shape() != (d, d))) {
            return Err(Error::schema("/entries", "covariance blocks have the wrong shape"));
        }
        let mut out = CovarianceMatrix { base, index, maps, bound: 0.0, choi_min_eig: 0.0 };
        out.choi_min_eig = out.choi_min();
        let scale = out.maps.iter().flatten().map(max_abs).fold(1.0, f64::max);
        if out.choi_min_eig < -CP_FLOOR * scale {
            return Err(Error::CpFailure(out.choi_min_eig));
        }
        out.bound = out.row_bound();
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn apply(&self, i: usize, j: usize, x: &Vector) -> Vector {
        &self.maps[i][j] * x
    }

    /// Choi matrix of `η ∘ E_A : M_k -> M_k ⊗ M_I`, smallest eigenvalue.
    fn choi_min(&self) -> f64 {
        let k = self.base.k;
        let n = self.len();
        let blk = k * n;
        let mut choi = Mat::zeros(k * blk, k * blk);
        for p in 0..k {
            for q in 0..k {
                let mut e = Mat::zeros(k, k);
                e[(p, q)] = ONE;
                let x = self.base.project(&e);
                let mut img = Mat::zeros(blk, blk);
                for i in 0..n {
                    for j in 0..n {
                        let y = self.base.matrix_of(&self.apply(i, j, &x));
                        let mut eij = Mat::zeros(n, n);
                        eij[(i, j)] = ONE;
                        img += kron(&y, &eij);
                    }
                }
                choi.view_mut((p * blk, q * blk), (blk, blk)).copy_from(&img);
            }
        }
        herm_eig(&choi).0.first().copied().unwrap_or(0.0)
    }

    /// `max_i sup_a Σ_j ‖η_ij(a)‖² / ‖a‖²`, over the basis of `A` and a
    /// fixed sample of random elements.
    fn row_bound(&self) -> f64 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let d = self.base.dim();
        let mut samples: Vec<Vector> = (0..d).map(|i| self.base.basis(i)).collect();
        for _ in 0..16 {
            samples.push(Vector::from_vec(random_vector(&mut rng, d)));
        }
        let mut c: f64 = 0.0;
        for a in &samples {
            let na = self.base.norm(a);
            if na == 0.0 {
                continue;
            }
            for i in 0..self.len() {
                let s: f64 = (0..self.len()).map(|j| self.base.norm(&self.apply(i, j, a)).powi(2)).sum();
                c = c.max(s / (na * na));
            }
        }
        c
    }

    /// `max |τ(η_ij(x) y) - τ(x η_ji(y))|` over basis pairs.
    pub fn trace_symmetry_residual(&self) -> f64 {
        let b = &self.base;
        let d = b.dim();
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in 0..self.len() {
                for p in 0..d {
                    for q in 0..d {
                        let (x, y) = (b.basis(p), b.basis(q));
                        let lhs = b.tau(&b.alg.mul(&self.apply(i, j, &x), &y));
                        let rhs = b.tau(&b.alg.mul(&x, &self.apply(j, i, &y)));
                        worst = worst.max((lhs - rhs).norm());
                    }
                }
            }
        }
        worst
    }

    pub fn from_json(base: BaseAlgebra, v: &Value) -> Result<CovarianceMatrix> {
        let o = as_obj(v, "")?;
        let index: Vec<String> = as_arr(field(o, "index", "")?, "/index")?
            .iter()
            .enumerate()
            .map(|(i, s)| as_str(s, &child("/index", &i.to_string())).map(str::to_string))
            .collect::<Result<_>>()?;
        if index.is_empty() {
            return Err(Error::schema("/index", "index set is empty"));
        }
        let pos: BTreeMap<&str, usize> = index.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if pos.len() != index.len() {
            return Err(Error::schema("/index", "duplicate index"));
        }
        let d = base.dim();
        let n = index.len();
        let mut maps = vec![vec![Mat::zeros(d, d); n]; n];
        for (key, m) in as_obj(field(o, "entries", "")?, "/entries")? {
            let ptr = child("/entries", key);
            let parts = split_key(key, &[2], &ptr)?;
            let look =
                |s: &str| pos.get(s).copied().ok_or_else(|| Error::schema(ptr.clone(), format!("unknown index `{s}`")));
            let (i, j) = (look(&parts[0][0])?, look(&parts[0][1])?);
            let m = cmatrix(m, &ptr)?;
            if m.shape() != (d, d) {
                return Err(Error::schema(ptr, format!("expected a {d}×{d} matrix")));
            }
            maps[i][j] = m;
        }
        let out = CovarianceMatrix::new(base, index, maps)?;
        if let Some(c) = o.get("bound") {
            let c = crate::io::as_f64(c, "/bound")?;
            if out.bound > c * (1.0 + 1e-12) {
                return Err(Error::RowBoundFailure(format!("computed {} exceeds declared {c}", out.bound)));
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let mut entries = serde_json::Map::new();
        for i in 0..self.len() {
            for j in 0..self.len() {
                if max_abs(&self.maps[i][j]) > 0.0 {
                    entries.insert(format!("{},{}", self.index[i], self.index[j]), matrix_json(&self.maps[i][j]));
                }
            }
        }
        json!({ "index": self.index, "entries": entries })
    }
}

/// An `A`-`A` correspondence `M_{km×k}` with right multiplication, left
/// action `π` and inner product `E_A(ξ* η)`.
#[derive(Clone, Debug)]
pub struct Correspondence {
    pub base: BaseAlgebra,
    pub m: usize,
    /// `π(e_a)` for the basis of `A`, each `km × km`.
    pub pi: Vec<Mat>,
}

impl Correspondence {
    /// `π(a) = U (a ⊗ 1_m) U*`.
    pub fn twisted(base: BaseAlgebra, m: usize, u: &Mat) -> Correspondence {
        let pi = base.mats.iter().map(|a| u * kron(a, &Mat::identity(m, m)) * u.adjoint()).collect();
        Correspondence { base, m, pi }
    }

    pub fn inner(&self, xi: &Mat, a: &Vector, eta: &Mat) -> Vector {
        let mut pa = Mat::zeros(self.pi[0].nrows(), self.pi[0].ncols());
        for (p, z) in self.pi.iter().zip(a.iter()) {
            pa += p * *z;
        }
        self.base.project(&(xi.adjoint() * pa * eta))
    }
}

/// `η(a) = Σ ⟨ξ_i, a ▹ ξ_j⟩ ⊗ e_ij`.
pub fn covariance_from_vectors(c: &Correspondence, vectors: &[Mat]) -> Result<CovarianceMatrix> {
    let d = c.base.dim();
    let n = vectors.len();
    let rows = c.base.k * c.m;
    if vectors.iter().any(|v| v.shape() != (rows, c.base.k)) {
        return Err(Error::schema("/vectors", format!("vectors must be {rows}×{} matrices", c.base.k)));
    }
    let mut maps = vec![vec![Mat::zeros(d, d); n]; n];
    for i in 0..n {
        for j in 0..n {
            for a in 0..d {
                maps[i][j].set_column(a, &c.inner(&vectors[i], &c.base.basis(a), &vectors[j]));
            }
        }
    }
    CovarianceMatrix::new(c.base.clone(), (0..n).map(|i| format!("x{i}")).collect(), maps)
}

/// `η = diag(α_i + α_i⁻¹)` for automorphisms given as matrices on `A`.
pub fn covariance_from_automorphisms(base: BaseAlgebra, alphas: &[Mat]) -> Result<CovarianceMatrix> {
    let d = base.dim();
    let n = alphas.len();
    let mut maps = vec![vec![Mat::zeros(d, d); n]; n];
    for (i, al) in alphas.iter().enumerate() {
        if al.shape() != (d, d) {
            return Err(Error::schema("/automorphisms", "automorphism has the wrong shape"));
        }
        let mut res: f64 = 0.0;
        for p in 0..d {
            let x = base.basis(p);
            let ax = al * &x;
            res = res.max((al * base.alg.adj(&x) - base.alg.adj(&ax)).norm());
            for q in 0..d {
                let y = base.basis(q);
                res = res.max((al * base.alg.mul(&x, &y) - base.alg.mul(&ax, &(al * &y))).norm());
            }
        }
        let inv = al.clone().try_inverse().ok_or(Error::NotAnAutomorphism(f64::INFINITY))?;
        if res > 1e-10 {
            return Err(Error::NotAnAutomorphism(res));
        }
        maps[i][i] = al + inv;
    }
    CovarianceMatrix::new(base, (0..n).map(|i| format!("a{i}")).collect(), maps)
}

/// `Ad(u)` as a matrix on `A`.
pub fn inner_automorphism(base: &BaseAlgebra, u: &Mat) -> Mat {
    let d = base.dim();
    let mut m = Mat::zeros(d, d);
    for p in 0..d {
        m.set_column(p, &base.coords(&(u * &base.mats[p] * u.adjoint())));
    }
    m
}

/// One level: its dimension, the left action of the basis of `A` and the
/// number of spanning vectors dropped by the quotient.
#[derive(Clone, Debug)]
pub struct Level {
    pub dim: usize,
    pub left: Vec<Mat>,
    pub dropped: usize,
}

#[derive(Clone, Debug)]
pub struct TruncatedFock {
    pub cov: CovarianceMatrix,
    pub depth: usize,
    pub levels: Vec<Level>,
    /// `creation[i][m]: V_m -> V_{m+1}`.
    pub creation: Vec<Vec<Mat>>,
    /// `Ω` in the frame of `V_0`.
    pub vacuum: Vector,
    /// Frame of `V_0 = L²(A)`: coordinates are `G^{1/2}` times `A`-coordinates.
    l2_half: Mat,
    l2_half_inv: Mat,
}

#[derive(Clone, Debug, Serialize)]
pub struct FockSummary {
    pub depth: usize,
    pub level_dims: Vec<usize>,
    pub dropped: Vec<usize>,
}

pub fn build_fock(cov: &CovarianceMatrix, depth: usize) -> Result<TruncatedFock> {
    build_fock_capped(cov, depth, DEFAULT_MAX_DEPTH, DEFAULT_DIM_CAP)
}

pub fn build_fock_capped(cov: &CovarianceMatrix, depth: usize, max_depth: usize, cap: usize) -> Result<TruncatedFock> {
    if depth > max_depth {
        return Err(Error::DimensionCap(depth, max_depth));
    }
    let b = &cov.base;
    let d = b.dim();
    let n = cov.len();
    // V_0 = L²(A, τ)
    let g0 = Mat::from_fn(d, d, |p, q| b.tau(&b.alg.mul(&b.alg.adj(&b.basis(p)), &b.basis(q))));
    let (gh, ghi) =
        crate::linalg::sqrt_pair(&g0, 1e-14).ok_or_else(|| Error::Degenerate("trace is not faithful".into()))?;
    let left0: Vec<Mat> = b.alg.left.iter().map(|l| &gh * l * &ghi).collect();
    let vacuum = &gh * b.unit();
    let mut levels = vec![Level { dim: d, left: left0, dropped: 0 }];
    let mut creation: Vec<Vec<Mat>> = vec![Vec::new(); n];
    let mut total = d;
    let products: Vec<Vec<Vector>> =
        (0..d).map(|p| (0..d).map(|q| b.alg.mul(&b.alg.adj(&b.basis(p)), &b.basis(q))).collect()).collect();
    for _ in 1..=depth {
        let prev = levels.last().unwrap();
        let dp = prev.dim;
        let span = d * n * dp;
        if total + span > cap {
            return Err(Error::DimensionCap(total + span, cap));
        }
        let lam = |x: &Vector| -> Mat {
            let mut m = Mat::zeros(dp, dp);
            for (l, z) in prev.left.iter().zip(x.iter()) {
                if *z != ZERO {
                    m += l * *z;
                }
            }
            m
        };
        // spanning vector (a, i, r) at a * n * dp + i * dp + r
        let mut gram = Mat::zeros(span, span);
        for a in 0..d {
            for i in 0..n {
                for c in 0..d {
                    for j in 0..n {
                        let blk = lam(&cov.apply(i, j, &products[a][c]));
                        gram.view_mut((a * n * dp + i * dp, c * n * dp + j * dp), (dp, dp)).copy_from(&blk);
                    }
                }
            }
        }
        let (vals, vecs) = herm_eig(&gram);
        let top = vals.last().copied().unwrap_or(0.0).max(1e-300);
        let keep: Vec<usize> = (0..span).filter(|&t| vals[t] > RANK_TOL * top).collect();
        let dim = keep.len();
        // embed = Λ^{1/2} Q*, lift = Q Λ^{-1/2}
        let mut embed = Mat::zeros(dim, span);
        let mut lift = Mat::zeros(span, dim);
        for (row, &t) in keep.iter().enumerate() {
            let s = vals[t].sqrt();
            for k in 0..span {
                embed[(row, k)] = vecs[(k, t)].conj() * s;
                lift[(k, row)] = vecs[(k, t)] / s;
            }
        }
        let unit = b.unit();
        for (i, out) in creation.iter_mut().enumerate() {
            let mut sel = Mat::zeros(span, dp);
            for a in 0..d {
                for r0 in 0..dp {
                    sel[(a * n * dp + i * dp + r0, r0)] = unit[a];
                }
            }
            out.push(&embed * sel);
        }
        let left: Vec<Mat> = (0..d)
            .map(|c| {
                let mut m = Mat::zeros(span, span);
                for a in 0..d {
                    let ca = b.alg.mul(&b.basis(c), &b.basis(a));
                    for (a2, z) in ca.iter().enumerate() {
                        if *z == ZERO {
                            continue;
                        }
                        for t in 0..n * dp {
                            m[(a2 * n * dp + t, a * n * dp + t)] += *z;
                        }
                    }
                }
                &embed * m * &lift
            })
            .collect();
        total += dim;
        levels.push(Level { dim, left, dropped: span - dim });
    }
    Ok(TruncatedFock { cov: cov.clone(), depth, levels, creation, vacuum, l2_half: gh, l2_half_inv: ghi })
}

impl TruncatedFock {
    pub fn summary(&self) -> FockSummary {
        FockSummary {
            depth: self.depth,
            level_dims: self.levels.iter().map(|l| l.dim).collect(),
            dropped: self.levels.iter().map(|l| l.dropped).collect(),
        }
    }

    pub fn total_dim(&self) -> usize {
        self.levels.iter().map(|l| l.dim).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut o = vec![0];
        for l in &self.levels {
            o.push(o.last().unwrap() + l.dim);
        }
        o
    }

    /// Element of `A` from `V_0` frame coordinates.
    pub fn to_base(&self, v0: &Vector) -> Vector {
        &self.l2_half_inv * v0
    }

    /// `V_0` frame coordinates of an element of `A`.
    pub fn from_base(&self, a: &Vector) -> Vector {
        &self.l2_half * a
    }
}

/// A letter of a word acting on the Fock space.
#[derive(Clone, Debug)]
pub enum Letter {
    X(usize),
    Create(usize),
    Annihilate(usize),
    A(Vector),
}

#[derive(Clone, Debug)]
pub struct SemicircularFamily {
    pub fock: TruncatedFock,
}

/// Level-wise vector on the truncated Fock space.
pub type FockVector = Vec<Vector>;

pub fn semicircular_ops(fock: &TruncatedFock) -> SemicircularFamily {
    SemicircularFamily { fock: fock.clone() }
}

impl SemicircularFamily {
    pub fn len(&self) -> usize {
        self.fock.cov.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fock.cov.is_empty()
    }

    pub fn vacuum(&self) -> FockVector {
        let mut v: FockVector = self.fock.levels.iter().map(|l| Vector::zeros(l.dim)).collect();
        v[0] = self.fock.vacuum.clone();
        v
    }

    fn create(&self, i: usize, v: &FockVector) -> FockVector {
        let mut out: FockVector = self.fock.levels.iter().map(|l| Vector::zeros(l.dim)).collect();
        for m in 0..self.fock.depth {
            out[m + 1] = &self.fock.creation[i][m] * &v[m];
        }
        out
    }

    fn annihilate(&self, i: usize, v: &FockVector) -> FockVector {
        let mut out: FockVector = self.fock.levels.iter().map(|l| Vector::zeros(l.dim)).collect();
        for m in 0..self.fock.depth {
            out[m] = self.fock.creation[i][m].adjoint() * &v[m + 1];
        }
        out
    }

    fn act_base(&self, a: &Vector, v: &FockVector) -> FockVector {
        self.fock
            .levels
            .iter()
            .zip(v)
            .map(|(l, x)| {
                let mut m = Mat::zeros(l.dim, l.dim);
                for (b, z) in l.left.iter().zip(a.iter()) {
                    if *z != ZERO {
                        m += b * *z;
                    }
                }
                m * x
            })
            .collect()
    }

    pub fn apply(&self, letter: &Letter, v: &FockVector) -> FockVector {
        match letter {
            Letter::X(i) => {
                let (c, a) = (self.create(*i, v), self.annihilate(*i, v));
                c.into_iter().zip(a).map(|(x, y)| x + y).collect()
            }
            Letter::Create(i) => self.create(*i, v),
            Letter::Annihilate(i) => self.annihilate(*i, v),
            Letter::A(a) => self.act_base(a, v),
        }
    }

    /// Applies the word right to left: the last letter acts first.
    pub fn apply_word(&self, word: &[Letter], v: &FockVector) -> FockVector {
        word.iter().rev().fold(v.clone(), |acc, l| self.apply(l, &acc))
    }

    /// `E(x) = ⟨Ω, x Ω⟩ ∈ A`.
    pub fn vacuum_expectation(&self, word: &[Letter]) -> Result<Vector> {
        let len = word.iter().filter(|l| !matches!(l, Letter::A(_))).count();
        if len > 2 * self.fock.depth {
            return Err(Error::WordTooLong { len, depth: self.fock.depth });
        }
        let out = self.apply_word(word, &self.vacuum());
        Ok(self.fock.to_base(&out[0]))
    }

    /// Matrices of `T_i` and `X_i` on the whole truncated space.
    pub fn full_matrices(&self, i: usize) -> (Mat, Mat) {
        let off = self.fock.offsets();
        let n = self.fock.total_dim();
        let mut t = Mat::zeros(n, n);
        for m in 0..self.fock.depth {
            let c = &self.fock.creation[i][m];
            t.view_mut((off[m + 1], off[m]), c.shape()).copy_from(c);
        }
        let x = &t + t.adjoint();
        (t, x)
    }

    /// `E(X^m)` for `m = 0..=max` with a single index `i`.
    pub fn moments(&self, i: usize, max: usize) -> Result<Vec<Vector>> {
        (0..=max).map(|m| self.vacuum_expectation(&vec![Letter::X(i); m])).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub trace_symmetry_residual: f64,
    pub trace_symmetric: bool,
    /// Worst `|‖pΩ‖² - τ(E(p*p))|` over the sampled polynomials.
    pub expectation_norm_residual: f64,
    /// Sampled `p` with `E(p*p) = 0` but `pΩ ≠ 0`.
    pub kernel_failures: usize,
    pub samples: usize,
    /// Per index `i`, the blocks `(h, m)` of the commutant of `A ⊗_{η_ii} A`.
    pub blocks: Vec<Vec<(usize, usize)>>,
    /// `max |η' - η|` after reconstructing `η` from the vectors `ξ_i`.
    pub vector_presentation_residual: f64,
    pub corner_index: String,
    pub verdict: String,
}

/// Trace symmetry, the Gram-kernel probe on sampled polynomials, the
/// commutants of `A ⊗_{η_ii} A` and the vector presentation round trip.
pub fn ind_faithfulness_probe<R: Rng>(
    cov: &CovarianceMatrix,
    depth: usize,
    samples: usize,
    rng: &mut R,
) -> Result<ProbeReport> {
    let fock = build_fock(cov, depth.max(1))?;
    let fam = semicircular_ops(&fock);
    let b = &cov.base;
    let d = b.dim();
    let n = cov.len();
    let tsym = cov.trace_symmetry_residual();

    let mut resid: f64 = 0.0;
    let mut failures = 0;
    let max_x = fock.depth;
    for _ in 0..samples {
        // p = Σ of a few random words with at most `depth` semicircular letters
        let terms: Vec<Vec<Letter>> = (0..3)
            .map(|_| {
                let len = rng.gen_range(0..=max_x);
                let mut w = vec![Letter::A(Vector::from_vec(random_vector(rng, d)))];
                for _ in 0..len {
                    w.push(Letter::X(rng.gen_range(0..n)));
                    w.push(Letter::A(Vector::from_vec(random_vector(rng, d))));
                }
                w
            })
            .collect();
        let omega = fam.vacuum();
        let p_omega: FockVector = terms
            .iter()
            .map(|w| fam.apply_word(w, &omega))
            .fold(fock.levels.iter().map(|l| Vector::zeros(l.dim)).collect(), |acc: FockVector, v| {
                acc.into_iter().zip(v).map(|(x, y)| x + y).collect()
            });
        let norm2: f64 = p_omega.iter().map(|v| v.norm_squared()).sum();
        // E(p*p) = Σ_{s,t} E(w_s* w_t)
        let mut e = Vector::zeros(d);
        for s in &terms {
            let adj = adjoint_word(b, s);
            for t in &terms {
                let mut w = adj.clone();
                w.extend(t.iter().cloned());
                e += fam.vacuum_expectation(&w)?;
            }
        }
        let te = b.tau(&e).re;
        resid = resid.max((norm2 - te).abs() / norm2.max(1.0));
        if te.abs() < 1e-12 && norm2 > 1e-9 {
            failures += 1;
        }
    }

    let mut blocks = Vec::with_capacity(n);
    for i in 0..n {
        blocks.push(bimodule_blocks(cov, i)?);
    }

    // η_ij(a) from ⟨T_i e_p, a T_j e_q⟩ = τ(e_p* η_ij(a) e_q)
    let mut pres: f64 = 0.0;
    if fock.depth >= 1 {
        let lvl1 = &fock.levels[1];
        for i in 0..n {
            for j in 0..n {
                for a in 0..d {
                    let la = lvl1.left[a].clone();
                    let lhs = Mat::from_fn(d, d, |p, q| {
                        let u = &fock.creation[i][0] * fock.from_base(&b.basis(p));
                        let v = &fock.creation[j][0] * fock.from_base(&b.basis(q));
                        u.dotc(&(&la * v))
                    });
                    let want = cov.apply(i, j, &b.basis(a));
                    let rhs = Mat::from_fn(d, d, |p, q| {
                        b.tau(&b.alg.mul(&b.alg.mul(&b.alg.adj(&b.basis(p)), &want), &b.basis(q)))
                    });
                    pres = pres.max(crate::linalg::diff(&lhs, &rhs));
                }
            }
        }
    }
    Ok(ProbeReport {
        trace_symmetry_residual: tsym,
        trace_symmetric: tsym < 1e-12,
        expectation_norm_residual: resid,
        kernel_failures: failures,
        samples,
        blocks,
        vector_presentation_residual: pres,
        corner_index: cov.index.iter().min().cloned().unwrap_or_default(),
        verdict: VERDICT.into(),
    })
}

fn adjoint_word(b: &BaseAlgebra, w: &[Letter]) -> Vec<Letter> {
    w.iter()
        .rev()
        .map(|l| match l {
            Letter::A(a) => Letter::A(b.alg.adj(a)),
            Letter::X(i) => Letter::X(*i),
            Letter::Create(i) => Letter::Annihilate(*i),
            Letter::Annihilate(i) => Letter::Create(*i),
        })
        .collect()
}

/// `A ⊗_{η_ii} A` as a scalar Hilbert space with its left and right
/// actions; returns the commutant blocks `(h, m)`.
fn bimodule_blocks(cov: &CovarianceMatrix, i: usize) -> Result<Vec<(usize, usize)>> {
    let b = &cov.base;
    let d = b.dim();
    // spanning vectors a ⊗ c at a * d + c; ⟨a ⊗ c, a' ⊗ c'⟩ = τ(c* η(a* a') c')
    let span = d * d;
    let gram = Mat::from_fn(span, span, |s, t| {
        let (a, c) = (s / d, s % d);
        let (a2, c2) = (t / d, t % d);
        let inner = cov.apply(i, i, &b.alg.mul(&b.alg.adj(&b.basis(a)), &b.basis(a2)));
        b.tau(&b.alg.mul(&b.alg.mul(&b.alg.adj(&b.basis(c)), &inner), &b.basis(c2)))
    });
    let (vals, vecs) = herm_eig(&gram);
    let top = vals.last().copied().unwrap_or(0.0).max(1e-300);
    let keep: Vec<usize> = (0..span).filter(|&t| vals[t] > RANK_TOL * top).collect();
    if keep.is_empty() {
        return Ok(vec![]);
    }
    let dim = keep.len();
    let mut embed = Mat::zeros(dim, span);
    let mut lift = Mat::zeros(span, dim);
    for (row, &t) in keep.iter().enumerate() {
        let s = vals[t].sqrt();
        for k in 0..span {
            embed[(row, k)] = vecs[(k, t)].conj() * s;
            lift[(k, row)] = vecs[(k, t)] / s;
        }
    }
    let mut gens = Vec::new();
    for x in 0..d {
        let mut lm = Mat::zeros(span, span);
        let mut rm = Mat::zeros(span, span);
        for a in 0..d {
            for c in 0..d {
                let xa = b.alg.mul(&b.basis(x), &b.basis(a));
                let cx = b.alg.mul(&b.basis(c), &b.basis(x));
                for (a2, z) in xa.iter().enumerate() {
                    lm[(a2 * d + c, a * d + c)] += *z;
                }
                for (c2, z) in cx.iter().enumerate() {
                    rm[(a * d + c2, a * d + c)] += *z;
                }
            }
        }
        gens.push(&embed * lm * &lift);
        gens.push(&embed * rm * &lift);
    }
    let blocks = commutant_blocks_raw(&gens, 11)?;
    Ok(blocks.iter().map(|bl| (bl.h, bl.m)).collect())
}

/// Catalan numbers `C_0..=C_n` by the convolution recursion.
pub fn catalan(n: usize) -> Vec<u64> {
    let mut c = vec![1u64];
    for m in 0..n {
        c.push((0..=m).map(|k| c[k] * c[m - k]).sum());
    }
    c
}

/// The scalar covariance `η = 1` on `A = ℂ`.
pub fn unit_covariance() -> CovarianceMatrix {
    CovarianceMatrix::new(BaseAlgebra::scalar(), vec!["x".into()], vec![vec![Mat::identity(1, 1)]])
        .expect("η = 1 is a covariance")
}

/// `η = id_n` on `A = ℂ`.
pub fn identity_covariance(n: usize) -> CovarianceMatrix {
    let maps =
        (0..n).map(|i| (0..n).map(|j| if i == j { Mat::identity(1, 1) } else { Mat::zeros(1, 1) }).collect()).collect();
    CovarianceMatrix::new(BaseAlgebra::scalar(), (0..n).map(|i| format!("x{i}")).collect(), maps)
        .expect("identity is a covariance")
}

pub fn moments_json(ms: &[Vector]) -> Value {
    Value::Array(ms.iter().map(|m| crate::io::vec_json(m.as_slice())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn re(v: &Vector) -> f64 {
        v[0].re
    }

    #[test]
    fn catalan_moments() {
        let fam = semicircular_ops(&build_fock(&unit_covariance(), 10).unwrap());
        let ms = fam.moments(0, 8).unwrap();
        let want = catalan(4);
        for (m, v) in ms.iter().enumerate() {
            let w = if m % 2 == 0 { want[m / 2] as f64 } else { 0.0 };
            assert!((v[0] - r(w)).norm() < 1e-10, "moment {m}: {}", v[0]);
        }
        assert_eq!(fam.fock.summary().level_dims, vec![1; 11]);
    }

    #[test]
    fn free_pair() {
        let fam = semicircular_ops(&build_fock(&identity_covariance(2), 3).unwrap());
        assert_eq!(fam.fock.summary().level_dims, vec![1, 2, 4, 8]);
        let e =
            |w: &[usize]| re(&fam.vacuum_expectation(&w.iter().map(|&i| Letter::X(i)).collect::<Vec<_>>()).unwrap());
        assert!((e(&[0, 1, 1, 0]) - 1.0).abs() < 1e-12);
        assert!(e(&[0, 1, 0, 1]).abs() < 1e-12);
        assert!((e(&[0, 0]) - 1.0).abs() < 1e-12);
        assert!(e(&[0, 1]).abs() < 1e-12);
        let (_, x) = fam.full_matrices(1);
        assert!(crate::linalg::diff(&x, &x.adjoint()) < 1e-14);
    }

    #[test]
    fn word_too_long() {
        let fam = semicircular_ops(&build_fock(&unit_covariance(), 2).unwrap());
        assert!(matches!(fam.vacuum_expectation(&vec![Letter::X(0); 5]), Err(Error::WordTooLong { len: 5, depth: 2 })));
        assert!(matches!(build_fock(&unit_covariance(), 13), Err(Error::DimensionCap(..))));
    }

    #[test]
    fn second_moment_is_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = BaseAlgebra::matrix(2);
        let u = random_unitary(&mut rng, 4);
        let corr = Correspondence::twisted(base.clone(), 2, &u);
        let vecs: Vec<Mat> = (0..2).map(|_| crate::linalg::random_matrix(&mut rng, 4, 2)).collect();
        let cov = covariance_from_vectors(&corr, &vecs).unwrap();
        let fam = semicircular_ops(&build_fock(&cov, 2).unwrap());
        for i in 0..2 {
            for j in 0..2 {
                let e = fam.vacuum_expectation(&[Letter::X(i), Letter::X(j)]).unwrap();
                assert!((e - cov.apply(i, j, &base.unit())).norm() < 1e-9);
            }
        }
        // E is A-bimodular
        let a = Vector::from_vec(crate::linalg::random_vector(&mut rng, 4));
        let b2 = Vector::from_vec(crate::linalg::random_vector(&mut rng, 4));
        let word = [Letter::A(a.clone()), Letter::X(0), Letter::X(1), Letter::A(b2.clone())];
        let lhs = fam.vacuum_expectation(&word).unwrap();
        let mid = fam.vacuum_expectation(&[Letter::X(0), Letter::X(1)]).unwrap();
        let rhs = base.alg.mul(&base.alg.mul(&a, &mid), &b2);
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn choi_rejects_transpose() {
        let base = BaseAlgebra::matrix(2);
        let mut t = Mat::zeros(4, 4);
        for p in 0..4 {
            t[((p % 2) * 2 + p / 2, p)] = ONE;
        }
        assert!(matches!(CovarianceMatrix::new(base, vec!["x".into()], vec![vec![t]]), Err(Error::CpFailure(_))));
    }

    #[test]
    fn automorphisms() {
        let base = BaseAlgebra::diagonal(2);
        let swap = Mat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let cov = covariance_from_automorphisms(base.clone(), &[swap]).unwrap();
        assert!(cov.trace_symmetry_residual() < 1e-14);
        let bad = Mat::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(covariance_from_automorphisms(base, &[bad]), Err(Error::NotAnAutomorphism(_))));
        let m2 = BaseAlgebra::matrix(2);
        let u = Mat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(0.0, 1.0)]);
        let cov = covariance_from_automorphisms(m2.clone(), &[inner_automorphism(&m2, &u)]).unwrap();
        assert!(cov.trace_symmetry_residual() < 1e-12);
    }

    #[test]
    fn probe() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rep = ind_faithfulness_probe(&unit_covariance(), 4, 8, &mut rng).unwrap();
        assert_eq!(rep.blocks, vec![vec![(1, 1)]]);
        assert!(rep.trace_symmetric && rep.kernel_failures == 0);
        assert!(rep.expectation_norm_residual < 1e-9 && rep.vector_presentation_residual < 1e-12);

        // η(x) = x_1 on ℂ²
        let base = BaseAlgebra::diagonal(2);
        let eta = Mat::from_row_slice(2, 2, &[ONE, ZERO, ONE, ZERO]);
        let cov = CovarianceMatrix::new(base, vec!["x".into()], vec![vec![eta]]).unwrap();
        let rep = ind_faithfulness_probe(&cov, 2, 4, &mut rng).unwrap();
        assert!(rep.trace_symmetry_residual > 0.1);
        assert!(rep.vector_presentation_residual < 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let base = BaseAlgebra::from_json(&json!({"kind": "diagonal", "k": 2})).unwrap();
        let v = json!({"index": ["a", "b"], "entries": {"a,a": [[1, 0], [0, 1]], "b,b": [[0, 1], [1, 0]]}});
        let cov = CovarianceMatrix::from_json(base.clone(), &v).unwrap();
        let back = CovarianceMatrix::from_json(base.clone(), &cov.to_json()).unwrap();
        assert_eq!(back.maps, cov.maps);
        let capped = json!({"index": ["a"], "entries": {"a,a": [[2, 0], [0, 2]]}, "bound": 1.0});
        assert!(matches!(CovarianceMatrix::from_json(base, &capped), Err(Error::RowBoundFailure(_))));
    }
}
