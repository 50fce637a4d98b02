//! The coend realization `𝔸 ⋈ 𝔹` of an algebra object `𝔸` over the
//! opposite category and `𝔹` over the category, truncated to a support set.
//!
//! The graded space `⊕_{X ∈ S} 𝔸(X) ⊗ 𝔹(X)` is both the algebra and the
//! module `ℰ_S`; its basis is `a_i ⊗ b_j` in lexicographic order, grade by
//! grade. Elements and module vectors are flat coefficient vectors.
//!
//! The module inner product on grade `X` is `d_X ⟨a, a'⟩ ⊗ ⟨b, b'⟩`, with the
//! fiber inner products normalized by `E_X`. The weight `d_X` is what makes
//! `j(T) ▹ -` the adjoint of `T ▹ -` for an orthonormal vertex basis.

use std::collections::BTreeSet;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::algebra_object::{AlgebraObject, FiberElement};
use crate::cstar::{FdAlgebra, Gns};
use crate::error::{Error, Result};
use crate::fusion_ring::{Label, SupportSet};
use crate::linalg::{
    herm_eig, kron, max_abs, max_abs_vec, r, random_vector, spectral_norm, sqrt_pair, Mat, Vector, ONE,
};
use crate::skeletal_cat::Gauge;

pub const SANDWICH_SLACK: f64 = 1e-8;
pub const REP_TOL: f64 = 1e-9;
pub const POSITIVITY_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strict,
    Project,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "strict" => Ok(Mode::Strict),
            "project" => Ok(Mode::Project),
            _ => Err(Error::schema("/mode", format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoendAlgebra {
    left: AlgebraObject,
    right: AlgebraObject,
    mode: Mode,
    support: SupportSet,
    /// Grades carrying a nonzero `𝔸(X) ⊗ 𝔹(X)`, ascending.
    grades: Vec<Label>,
    offsets: Vec<Option<usize>>,
    /// Grade pairs whose product has a channel outside the support.
    overflow: BTreeSet<(Label, Label)>,
    /// The product compressed to `ℰ_S`, with the star.
    pub alg: FdAlgebra,
    pub ground: FdAlgebra,
    ground_gns: Gns,
    /// `⟨e_p, e_q⟩` for `p, q` in grade `X`: a `dim G × k²` matrix, column `p k + q`.
    inner: Vec<Mat>,
    /// The scalar inner product `τ(⟨·,·⟩)` on `ℰ_S` and its square roots.
    gram: Mat,
    gh: Mat,
    ghi: Mat,
    pub name: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub label: String,
    /// `‖TΩ‖`.
    pub vector_norm: f64,
    /// Norm of `T` on the submodule generated by the ground vectors.
    pub cyclic_norm: f64,
    /// Norm of the compression of `T` to `ℰ_S`, a lower bound for `‖T‖`.
    pub truncated_norm: f64,
    pub bound: f64,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        let tol = SANDWICH_SLACK * self.vector_norm.max(1.0);
        self.vector_norm <= self.cyclic_norm + tol
            && self.vector_norm <= self.truncated_norm + tol
            && self.cyclic_norm <= self.bound * self.vector_norm + tol
            && self.truncated_norm <= self.bound * self.vector_norm + tol
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FaithfulnessReport {
    pub trials: usize,
    pub failures: usize,
    /// Smallest value of `‖E(T*T)‖ / ‖T‖₂²` over the trials.
    pub min_expectation_ratio: f64,
    pub gram_kernel_dim: usize,
    /// Worst `λ_min(G_vec) - w d⁻⁴ λ_min(G_op)` over grades; negative is a failure.
    pub kernel_bound_slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoendReport {
    pub associativity: f64,
    pub star_antimultiplicativity: f64,
    pub star_involution: f64,
    pub representation: f64,
    pub grading: f64,
    pub expectation_bimodularity: f64,
    pub expectation_unit: f64,
    pub cyclic_rank: usize,
    pub dim: usize,
}

impl CoendReport {
    pub fn holds(&self) -> bool {
        self.associativity < REP_TOL
            && self.star_antimultiplicativity < REP_TOL
            && self.star_involution < REP_TOL
            && self.representation < REP_TOL
            && self.grading < REP_TOL
            && self.expectation_bimodularity < 1e-10
            && self.expectation_unit < 1e-10
            && self.cyclic_rank == self.dim
    }
}

/// `E_ω = (id ⊗ ω) ∘ 𝔼` as an `n_𝔸(1) × dim` matrix.
#[derive(Clone, Debug)]
pub struct Descent {
    pub map: Mat,
    pub state_faithful: bool,
    pub faithful: bool,
}

impl CoendAlgebra {
    pub fn new(left: AlgebraObject, right: AlgebraObject, support: &SupportSet, mode: Mode) -> Result<CoendAlgebra> {
        let ring = right.cat().ring().clone();
        if left.cat().ring().labels() != ring.labels() {
            return Err(Error::schema("/left", "left and right objects live over different fusion rings"));
        }
        let l = ring.len();
        let u = ring.unit();
        let paired = |x: Label| left.fiber_dim(x) * right.fiber_dim(x);
        let grades: Vec<Label> = support.labels.iter().copied().filter(|&x| paired(x) > 0).collect();
        if !grades.contains(&u) {
            return Err(Error::Degenerate("the unit grade is empty".into()));
        }
        let mut offsets = vec![None; l];
        let mut dim = 0;
        for &x in &grades {
            offsets[x] = Some(dim);
            dim += paired(x);
        }

        let mut overflow = BTreeSet::new();
        let mut left_mats = vec![Mat::zeros(dim, dim); dim];
        for &x0 in &grades {
            let (na0, nb0) = (left.fiber_dim(x0), right.fiber_dim(x0));
            for &x1 in &grades {
                let (na1, nb1) = (left.fiber_dim(x1), right.fiber_dim(x1));
                for (x2, m) in ring.fuse_idx(x0, x1) {
                    for v in 0..m {
                        let (Some(ma), Some(mb)) = (left.mu(x0, x1, x2, v), right.mu(x0, x1, x2, v)) else { continue };
                        if ma.nrows() == 0 || mb.nrows() == 0 || max_abs(ma) == 0.0 || max_abs(mb) == 0.0 {
                            continue;
                        }
                        let Some(o2) = offsets[x2] else {
                            overflow.insert((x0, x1));
                            continue;
                        };
                        let nb2 = mb.nrows();
                        for i0 in 0..na0 {
                            for j0 in 0..nb0 {
                                let k = offsets[x0].unwrap() + i0 * nb0 + j0;
                                for i1 in 0..na1 {
                                    for j1 in 0..nb1 {
                                        let col = offsets[x1].unwrap() + i1 * nb1 + j1;
                                        let ca = ma.column(i0 * na1 + i1);
                                        let cb = mb.column(j0 * nb1 + j1);
                                        for (i2, za) in ca.iter().enumerate() {
                                            for (j2, zb) in cb.iter().enumerate() {
                                                left_mats[k][(o2 + i2 * nb2 + j2, col)] += za * zb;
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        if mode == Mode::Strict && !overflow.is_empty() {
            let missing: BTreeSet<String> = overflow
                .iter()
                .flat_map(|&(a, b)| ring.fuse_idx(a, b).map(|(z, _)| z).collect::<Vec<_>>())
                .filter(|&z| offsets[z].is_none() && paired(z) > 0)
                .map(|z| ring.name(z).to_string())
                .collect();
            return Err(Error::SupportOverflow(missing.into_iter().collect::<Vec<_>>().join(",")));
        }

        let mut star = Mat::zeros(dim, dim);
        for &x in &grades {
            let xb = ring.dual(x);
            let (Some(o), Some(ob)) = (offsets[x], offsets[xb]) else {
                return Err(Error::schema("/support", "support is not closed under duals"));
            };
            let js = kron(left.star_matrix(x), right.star_matrix(x));
            star.view_mut((ob, o), js.shape()).copy_from(&js);
        }
        let left_clone = left_mats.clone();
        let alg = FdAlgebra::from_product(dim, star, move |i, j| left_clone[i].column(j).into_owned())?;

        let ground = left.ground()?.tensor(&right.ground()?);
        let ground_gns = ground.gns(&ground.regular_trace())?;
        let (tau_a, tau_b) = (left.ground()?.regular_trace(), right.ground()?.regular_trace());
        let mut inner = vec![Mat::zeros(0, 0); l];
        let mut gram = Mat::zeros(dim, dim);
        for &x in &grades {
            let (na, nb) = (left.fiber_dim(x), right.fiber_dim(x));
            let ipa = fiber_grams(&left, x)?;
            let ipb = fiber_grams(&right, x)?;
            let k = na * nb;
            let dx = r(right.cat().qdim(x));
            let mut m = Mat::zeros(ground.dim(), k * k);
            let o = offsets[x].unwrap();
            for p in 0..k {
                for q in 0..k {
                    let (ia, ib) = (&ipa[(p / nb) * na + q / nb], &ipb[(p % nb) * nb + q % nb]);
                    m.set_column(p * k + q, &(kron_vec(ia, ib) * dx));
                    gram[(o + p, o + q)] = FdAlgebra::apply(&tau_a, ia) * FdAlgebra::apply(&tau_b, ib) * dx;
                }
            }
            inner[x] = m;
        }
        let scale = max_abs(&gram).max(1e-300);
        let (gh, ghi) = sqrt_pair(&gram, 1e-12 * scale)
            .ok_or_else(|| Error::Degenerate("the module inner product is not faithful".into()))?;
        Ok(CoendAlgebra {
            left,
            right,
            mode,
            support: support.clone(),
            grades,
            offsets,
            overflow,
            alg,
            ground,
            ground_gns,
            inner,
            gram,
            gh,
            ghi,
            name: "coend".into(),
        })
    }

    pub fn left(&self) -> &AlgebraObject {
        &self.left
    }

    pub fn right(&self) -> &AlgebraObject {
        &self.right
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn grades(&self) -> &[Label] {
        &self.grades
    }

    pub fn dim(&self) -> usize {
        self.alg.dim()
    }

    /// Flat index range of grade `x`.
    pub fn range(&self, x: Label) -> Option<std::ops::Range<usize>> {
        self.offsets[x].map(|o| o..o + self.left.fiber_dim(x) * self.right.fiber_dim(x))
    }

    pub fn grade_of(&self, k: usize) -> Label {
        *self.grades.iter().rev().find(|&&x| self.offsets[x].unwrap() <= k).unwrap()
    }

    /// The homogeneous element `Σ c[i][j] a_i ⊗ b_j` at grade `x`.
    pub fn homogeneous(&self, x: Label, c: &Mat) -> Result<Vector> {
        let range = self.range(x).ok_or_else(|| Error::SupportOverflow(self.label_name(x)))?;
        let mut v = Vector::zeros(self.dim());
        for (k, idx) in range.enumerate() {
            let nb = self.right.fiber_dim(x);
            v[idx] = c[(k / nb, k % nb)];
        }
        Ok(v)
    }

    pub fn random_homogeneous<R: Rng>(&self, x: Label, rng: &mut R) -> Vector {
        let mut v = Vector::zeros(self.dim());
        if let Some(range) = self.range(x) {
            for (z, idx) in random_vector(rng, range.len()).into_iter().zip(range) {
                v[idx] = z;
            }
        }
        v
    }

    pub fn random_element<R: Rng>(&self, rng: &mut R) -> Vector {
        Vector::from_vec(random_vector(rng, self.dim()))
    }

    /// `Ω = 1_𝔸(1) ⊗ 1_𝔹(1)`.
    pub fn omega(&self) -> Vector {
        let mut v = Vector::zeros(self.dim());
        let o = self.offsets[self.left.cat().unit()].unwrap();
        for (i, z) in self.ground.unit.iter().enumerate() {
            v[o + i] = *z;
        }
        v
    }

    fn label_name(&self, x: Label) -> String {
        self.right.cat().ring().name(x).to_string()
    }

    fn grades_of(&self, t: &Vector) -> Vec<Label> {
        self.grades.iter().copied().filter(|&x| self.range(x).unwrap().any(|k| t[k].norm() > 0.0)).collect()
    }

    /// `T ▹ ξ`, compressed to `ℰ_S` in project mode.
    pub fn triangle_act(&self, t: &Vector, xi: &Vector) -> Vector {
        self.alg.mul(t, xi)
    }

    pub fn mul(&self, a: &Vector, b: &Vector) -> Vector {
        self.alg.mul(a, b)
    }

    /// Whether some product of live grades leaves the support.
    pub fn is_closed(&self) -> bool {
        self.overflow.is_empty()
    }

    pub fn adj(&self, a: &Vector) -> Vector {
        self.alg.adj(a)
    }

    /// `𝔼(T)`: the unit-graded component, an element of `𝔸(1) ⊗ 𝔹(1)`.
    pub fn expectation(&self, t: &Vector) -> Vector {
        let range = self.range(self.left.cat().unit()).unwrap();
        Vector::from_iterator(range.len(), range.map(|k| t[k]))
    }

    /// The ground element embedded in `ℰ_S`.
    pub fn embed_ground(&self, g: &Vector) -> Vector {
        let mut v = Vector::zeros(self.dim());
        let o = self.offsets[self.left.cat().unit()].unwrap();
        for (i, z) in g.iter().enumerate() {
            v[o + i] = *z;
        }
        v
    }

    /// The `𝔸(1) ⊗ 𝔹(1)`-valued inner product, antilinear in `xi`.
    pub fn inner_product(&self, xi: &Vector, eta: &Vector) -> Vector {
        let mut out = Vector::zeros(self.ground.dim());
        for &x in &self.grades {
            let range = self.range(x).unwrap();
            let k = range.len();
            let o = range.start;
            for p in 0..k {
                let a = xi[o + p].conj();
                if a.norm() == 0.0 {
                    continue;
                }
                for q in 0..k {
                    let b = eta[o + q];
                    if b.norm() != 0.0 {
                        out += self.inner[x].column(p * k + q) * (a * b);
                    }
                }
            }
        }
        out
    }

    /// `‖ξ‖ = ‖⟨ξ, ξ⟩‖^{1/2}`.
    pub fn vector_norm(&self, xi: &Vector) -> f64 {
        self.ground.op_norm(&self.ground_gns, &self.inner_product(xi, xi)).sqrt()
    }

    /// The action of `t` in an orthonormal frame of `ℰ_S`.
    pub fn rep(&self, t: &Vector) -> Mat {
        &self.gh * self.alg.lmat(t) * &self.ghi
    }

    pub fn op_norm(&self, t: &Vector) -> f64 {
        spectral_norm(&self.rep(t))
    }

    pub fn norm_sandwich(&self, t: &Vector) -> Result<SandwichReport> {
        let gs = self.grades_of(t);
        let x = match gs.as_slice() {
            [] => self.left.cat().unit(),
            [x] => *x,
            _ => return Err(Error::Degenerate("norm sandwich needs a homogeneous element".into())),
        };
        if self.mode == Mode::Strict {
            let xb = self.right.cat().dual(x);
            let missing: Vec<String> = self
                .right
                .cat()
                .ring()
                .fuse_idx(xb, x)
                .map(|(z, _)| z)
                .filter(|&z| !self.support.contains(z))
                .map(|z| self.label_name(z))
                .collect();
            if !missing.is_empty() {
                return Err(Error::SupportOverflow(missing.join(",")));
            }
        }
        let rep = self.rep(t);
        let ground = self.range(self.left.cat().unit()).unwrap();
        let cyc = rep.columns(ground.start, ground.len()).into_owned();
        let d = self.right.cat().qdim(x);
        Ok(SandwichReport {
            label: self.label_name(x),
            vector_norm: self.vector_norm(&self.alg.mul(t, &self.omega())),
            cyclic_norm: spectral_norm(&cyc),
            truncated_norm: spectral_norm(&rep),
            bound: d * d,
        })
    }

    /// Positivity of `Σ_{i,j} 𝔸²(j(a_i) ⊙ a_j) ⊗ 𝔹²(j(b_i) ⊙ b_j)` in the
    /// tensor product of the square algebras; returns the normalized
    /// minimum eigenvalue.
    pub fn positivity_check(&self, terms: &[(FiberElement, FiberElement)]) -> Result<(bool, f64)> {
        let Some((a0, _)) = terms.first() else { return Ok((true, 0.0)) };
        let x = a0.label;
        let sa = self.left.square_algebra(x)?;
        let sb = self.right.square_algebra(x)?;
        let alg = sa.alg.tensor(&sb.alg);
        let phi = kron_vec(&sa.gns.functional, &sb.gns.functional);
        let g = alg.gns(&phi)?;
        let mut sum = Vector::zeros(alg.dim());
        for (ai, bi) in terms {
            for (aj, bj) in terms {
                let pa = self.left.flatten(&self.left.module_inner_product(ai, aj)?);
                let pb = self.right.flatten(&self.right.module_inner_product(bi, bj)?);
                sum += kron_vec(&pa, &pb);
            }
        }
        let (vals, _) = herm_eig(&alg.rep(&g, &sum));
        let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let min = vals.first().copied().unwrap_or(0.0) / top;
        Ok((min >= -POSITIVITY_FLOOR, min))
    }

    /// Random nonzero `T` must have `𝔼(T*T) ≠ 0`; the Gram matrix of
    /// `{TΩ}` must dominate the operator Gram matrix grade by grade.
    pub fn faithfulness_probe<R: Rng>(&self, trials: usize, rng: &mut R) -> Result<FaithfulnessReport> {
        let mut failures = 0;
        let mut min_ratio = f64::INFINITY;
        let tau = self.ground.regular_trace();
        for _ in 0..trials {
            let t = self.random_element(rng);
            let e = self.expectation(&self.alg.mul(&self.adj(&t), &t));
            let n2 = FdAlgebra::apply(&tau, &e).re;
            let ratio = self.ground.op_norm(&self.ground_gns, &e) / t.norm_squared();
            min_ratio = min_ratio.min(ratio);
            if !(n2 > 0.0 && ratio > 1e-12) {
                failures += 1;
            }
        }
        let (vals, _) = herm_eig(&self.gram);
        let top = vals.last().copied().unwrap_or(1.0).max(1e-300);
        let kernel = vals.iter().filter(|&&v| v <= 1e-12 * top).count();

        let w = self.ground.min_projection_weight()?;
        let dmax = self.grades.iter().map(|&x| self.right.cat().qdim(x)).fold(1.0, f64::max);
        let n = self.dim() as f64;
        let mut slack = f64::INFINITY;
        for &x in &self.grades {
            let range = self.range(x).unwrap();
            let reps: Vec<Mat> = range
                .clone()
                .map(|k| {
                    let mut e = Vector::zeros(self.dim());
                    e[k] = ONE;
                    self.rep(&e)
                })
                .collect();
            let k = reps.len();
            let gop = Mat::from_fn(k, k, |p, q| (reps[p].adjoint() * &reps[q]).trace() / r(n));
            let gvec = self.gram.view((range.start, range.start), (k, k)).into_owned();
            let lv = herm_eig(&gvec).0[0];
            let lo = herm_eig(&gop).0[0];
            slack = slack.min(lv - w * dmax.powi(-4) * lo);
        }
        if failures > 0 || kernel > 0 || slack < -1e-12 {
            return Err(Error::CounterexampleFound(format!(
                "faithfulness: {failures} zero expectations, kernel dim {kernel}, bound slack {slack:e}"
            )));
        }
        Ok(FaithfulnessReport {
            trials,
            failures,
            min_expectation_ratio: min_ratio,
            gram_kernel_dim: kernel,
            kernel_bound_slack: slack,
        })
    }

    /// Associativity, star, representation and expectation checks on basis
    /// elements.
    pub fn verify<R: Rng>(&self, rng: &mut R) -> Result<CoendReport> {
        let n = self.dim();
        let closed = self.overflow.is_empty();
        let associativity = if closed { self.alg.associativity_residual() } else { 0.0 };
        let star_anti = if closed { self.alg.star_residual() } else { 0.0 };
        let mut inv: f64 = 0.0;
        let mut rep_res: f64 = 0.0;
        let mut grading: f64 = 0.0;
        let mut basis_reps = Vec::with_capacity(n);
        for k in 0..n {
            let mut e = Vector::zeros(n);
            e[k] = ONE;
            inv = inv.max(max_abs_vec((self.adj(&self.adj(&e)) - &e).as_slice()));
            let rk = self.rep(&e);
            rep_res = rep_res.max(crate::linalg::diff(&self.rep(&self.adj(&e)), &rk.adjoint()));
            basis_reps.push((e, rk));
        }
        if closed {
            // act(T T') = act(T) act(T') on basis pairs
            for (a, ra) in &basis_reps {
                for (b, rb) in &basis_reps {
                    let prod = self.alg.mul(a, b);
                    rep_res = rep_res.max(crate::linalg::diff(&self.rep(&prod), &(ra * rb)));
                }
            }
        }
        let ring = self.right.cat().ring();
        for (i, (a, _)) in basis_reps.iter().enumerate() {
            let x0 = self.grade_of(i);
            for (j, (b, _)) in basis_reps.iter().enumerate() {
                let x1 = self.grade_of(j);
                let prod = self.alg.mul(a, b);
                for &z in &self.grades {
                    if ring.n(x0, x1, z) == 0 {
                        for k in self.range(z).unwrap() {
                            grading = grading.max(prod[k].norm());
                        }
                    }
                }
            }
        }
        let mut bimod: f64 = 0.0;
        for _ in 0..8 {
            let t = self.random_element(rng);
            let g1 = Vector::from_vec(random_vector(rng, self.ground.dim()));
            let g2 = Vector::from_vec(random_vector(rng, self.ground.dim()));
            let lhs =
                self.expectation(&self.alg.mul(&self.alg.mul(&self.embed_ground(&g1), &t), &self.embed_ground(&g2)));
            let rhs = self.ground.mul(&self.ground.mul(&g1, &self.expectation(&t)), &g2);
            bimod = bimod.max(max_abs_vec((lhs - rhs).as_slice()) / t.norm().max(1.0));
        }
        let e1 = self.expectation(&self.alg.unit);
        let expectation_unit = max_abs_vec((e1 - &self.ground.unit).as_slice());
        let omega = self.omega();
        let cyc = Mat::from_columns(&basis_reps.iter().map(|(e, _)| self.alg.mul(e, &omega)).collect::<Vec<_>>());
        Ok(CoendReport {
            associativity,
            star_antimultiplicativity: star_anti,
            star_involution: inv,
            representation: rep_res,
            grading,
            expectation_bimodularity: bimod,
            expectation_unit,
            cyclic_rank: if n == 0 { 0 } else { crate::linalg::rank(&cyc, 1e-10) },
            dim: n,
        })
    }

    /// `E_ω = (id ⊗ ω) ∘ 𝔼` for a state `ω` on `𝔹(1)`.
    pub fn descend_expectation(&self, omega: &Vector) -> Result<Descent> {
        if !self.left.trivial_center {
            return Err(Error::CenterNotTrivial);
        }
        let gb = self.right.ground()?;
        crate::inclusion_analysis::check_state(&gb, omega)?;
        let na = self.left.fiber_dim(self.left.cat().unit());
        let nb = gb.dim();
        let range = self.range(self.left.cat().unit()).unwrap();
        let mut map = Mat::zeros(na, self.dim());
        for i in 0..na {
            for j in 0..nb {
                map[(i, range.start + i * nb + j)] = omega[j];
            }
        }
        let rank_of = |g: &Mat| {
            let (vals, _) = herm_eig(g);
            let top = vals.last().copied().unwrap_or(0.0).abs().max(1e-300);
            vals.iter().filter(|&&v| v > 1e-10 * top).count()
        };
        let state_faithful = rank_of(&gb.gram(omega)) == nb;
        let ga = self.left.ground()?;
        let tau_a = ga.regular_trace();
        let n = self.dim();
        let es: Vec<Vector> = (0..n)
            .map(|k| {
                let mut e = Vector::zeros(n);
                e[k] = ONE;
                e
            })
            .collect();
        let gram = Mat::from_fn(n, n, |p, q| {
            let prod = self.alg.mul(&self.adj(&es[p]), &es[q]);
            FdAlgebra::apply(&tau_a, &(&map * prod))
        });
        let faithful = rank_of(&gram) == n;
        Ok(Descent { map, state_faithful, faithful })
    }

    /// The same realization after a change of vertex basis; the left object
    /// transforms with the conjugate gauge.
    pub fn rebase(&self, g: &Gauge) -> Result<CoendAlgebra> {
        let gbar = Gauge { u: g.u.iter().map(|(k, m)| (*k, m.map(|z| z.conj()))).collect() };
        let cat_op = std::sync::Arc::new(self.left.cat().rebase(&gbar));
        let cat = std::sync::Arc::new(self.right.cat().rebase(g));
        let left = self.left.rebase(&gbar, cat_op);
        let right = self.right.rebase(g, cat);
        let mut out = CoendAlgebra::new(left, right, &self.support, self.mode)?;
        out.name = self.name.clone();
        Ok(out)
    }

    pub fn scalar_gram(&self) -> &Mat {
        &self.gram
    }
}

/// `A ⋊ 𝒟`: the realization of an action `𝔸` on `A = 𝔸(1)` with `𝒟`.
pub fn crossed_product(
    action: AlgebraObject,
    d: AlgebraObject,
    support: &SupportSet,
    mode: Mode,
) -> Result<CoendAlgebra> {
    let mut out = CoendAlgebra::new(action, d, support, mode)?;
    out.name = "A⋊D".into();
    Ok(out)
}

/// Comparison of a realization over a cyclic pointed category with `ℂ[ℤ/n]`.
#[derive(Clone, Debug, Serialize)]
pub struct GroupCheck {
    pub order: usize,
    pub generator: String,
    /// `max |u_k u_l - u_{k+l}|` in the normalized basis `u_k = u_g^k`.
    pub product_residual: f64,
    /// `max |u_k* - u_{-k}|`.
    pub star_residual: f64,
    /// `max |E(u_k) - δ_{k,0}|`.
    pub expectation_residual: f64,
}

impl GroupCheck {
    pub fn max_residual(&self) -> f64 {
        self.product_residual.max(self.star_residual).max(self.expectation_residual)
    }
}

/// Looks for a generator `g` of a cyclic fusion group whose grades all have
/// one-dimensional paired fibers, normalizes `u_g` so that `u_g^n = 1` and
/// compares the realized algebra against the group table. `None` when the
/// shape does not fit.
pub fn cyclic_group_check(c: &CoendAlgebra) -> Option<GroupCheck> {
    let ring = c.right().cat().ring();
    let n = ring.len();
    if c.grades().len() != n || (0..n).any(|x| c.range(x).is_none_or(|r| r.len() != 1)) {
        return None;
    }
    let u = ring.unit();
    let times = |x: Label, y: Label| -> Option<Label> {
        let mut it = ring.fuse_idx(x, y);
        let (z, m) = it.next()?;
        (m == 1 && it.next().is_none()).then_some(z)
    };
    let gen = (0..n).find(|&g| {
        let mut seen = vec![false; n];
        let mut x = u;
        for _ in 0..n {
            if seen[x] {
                return false;
            }
            seen[x] = true;
            match times(x, g) {
                Some(z) => x = z,
                None => return false,
            }
        }
        x == u
    })?;
    let e = |x: Label| c.homogeneous(x, &Mat::from_element(1, 1, ONE)).ok();
    let eg = e(gen)?;
    let mut pw = c.omega();
    for _ in 0..n {
        pw = c.mul(&pw, &eg);
    }
    let top = pw[c.range(u)?.start];
    if top.norm() < 1e-12 {
        return None;
    }
    let lambda = top.powf(-1.0 / n as f64);
    let ug = eg * lambda;
    let mut us = vec![c.omega()];
    for k in 1..n {
        us.push(c.mul(&us[k - 1], &ug));
    }
    let (mut prod, mut star, mut exp): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..n {
        for l in 0..n {
            prod = prod.max((c.mul(&us[k], &us[l]) - &us[(k + l) % n]).norm());
        }
        star = star.max((c.adj(&us[k]) - &us[(n - k) % n]).norm());
        let want = if k == 0 { ONE } else { crate::linalg::ZERO };
        exp = exp.max((c.expectation(&us[k])[0] - want).norm());
    }
    Some(GroupCheck {
        order: n,
        generator: ring.name(gen).into(),
        product_residual: prod,
        star_residual: star,
        expectation_residual: exp,
    })
}

fn kron_vec(a: &Vector, b: &Vector) -> Vector {
    Vector::from_iterator(a.len() * b.len(), a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)))
}

/// `⟨e_p, e_q⟩_{D(1)}` for the basis of `D(x)`, index `p n + q`.
fn fiber_grams(d: &AlgebraObject, x: Label) -> Result<Vec<Vector>> {
    let n = d.fiber_dim(x);
    let e = |i: usize| {
        let mut v = Vector::zeros(n);
        v[i] = ONE;
        FiberElement { label: x, coeffs: v }
    };
    let mut out = Vec::with_capacity(n * n);
    for p in 0..n {
        for q in 0..n {
            out.push(d.fiber_inner_product(&e(p), &e(q))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra_object::{diagonal_algebra, ground_only, group_algebra_object, unit_object};
    use crate::annulus::build_annulus;
    use crate::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn group_coend(n: usize) -> CoendAlgebra {
        let cat = Arc::new(fixtures::cyclic(n));
        let op = Arc::new(cat.opposite());
        let left = group_algebra_object(op).unwrap();
        let right = group_algebra_object(cat.clone()).unwrap();
        crossed_product(left, right, &SupportSet::full(cat.ring()), Mode::Strict).unwrap()
    }

    fn fib_coend() -> CoendAlgebra {
        let cat = Arc::new(fixtures::fibonacci());
        let op = Arc::new(cat.opposite());
        let b = build_annulus(cat.clone(), &SupportSet::full(cat.ring())).unwrap().object;
        CoendAlgebra::new(b.opposite(op), b, &SupportSet::full(cat.ring()), Mode::Strict).unwrap()
    }

    #[test]
    fn cyclic_group_algebra() {
        let c = group_coend(3);
        assert_eq!(c.dim(), 3);
        let ring = c.right().cat().ring().clone();
        for x in 0..3 {
            for y in 0..3 {
                let (ex, ey) = (
                    c.homogeneous(x, &Mat::from_element(1, 1, ONE)).unwrap(),
                    c.homogeneous(y, &Mat::from_element(1, 1, ONE)).unwrap(),
                );
                let z = ring.fuse_idx(x, y).next().unwrap().0;
                let want = c.homogeneous(z, &Mat::from_element(1, 1, ONE)).unwrap();
                assert!((c.mul(&ex, &ey) - want).norm() < 1e-12);
            }
        }
        let check = cyclic_group_check(&c).unwrap();
        assert!(check.max_residual() < 1e-12, "{check:?}");
        let g = ring.label("g").unwrap();
        let h = ring.label("g2").unwrap();
        let t = c.homogeneous(g, &Mat::from_element(1, 1, ONE)).unwrap()
            - c.homogeneous(h, &Mat::from_element(1, 1, ONE)).unwrap();
        let e = c.expectation(&c.mul(&c.adj(&t), &t));
        assert!((e[0] - r(2.0)).norm() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(c.verify(&mut rng).unwrap().holds());
        let s = c.norm_sandwich(&c.random_homogeneous(g, &mut rng)).unwrap();
        assert!((s.vector_norm - s.truncated_norm).abs() < 1e-9, "{s:?}");
    }

    #[test]
    fn fibonacci_realization() {
        let c = fib_coend();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rep = c.verify(&mut rng).unwrap();
        assert!(rep.holds(), "{rep:?}");
        for &x in c.grades() {
            for _ in 0..20 {
                let s = c.norm_sandwich(&c.random_homogeneous(x, &mut rng)).unwrap();
                assert!(s.holds(), "{s:?}");
                assert!((s.cyclic_norm - s.vector_norm).abs() < 1e-9 * s.vector_norm.max(1.0));
            }
        }
        let f = c.faithfulness_probe(50, &mut rng).unwrap();
        assert_eq!(f.gram_kernel_dim, 0);
    }

    #[test]
    fn triangle_adjoint() {
        let c = fib_coend();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let (t, x, y) = (c.random_element(&mut rng), c.random_element(&mut rng), c.random_element(&mut rng));
            let lhs = c.inner_product(&c.triangle_act(&t, &x), &y);
            let rhs = c.inner_product(&x, &c.triangle_act(&c.adj(&t), &y));
            assert!((lhs - rhs).norm() < 1e-9);
        }
    }

    #[test]
    fn positivity_of_paired_squares() {
        let c = fib_coend();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let tau = c.right().cat().label("tau").unwrap();
        let terms: Vec<_> = (0..3)
            .map(|_| {
                let a = FiberElement { label: tau, coeffs: Vector::from_vec(random_vector(&mut rng, 1)) };
                let b = FiberElement { label: tau, coeffs: Vector::from_vec(random_vector(&mut rng, 1)) };
                (a, b)
            })
            .collect();
        let (ok, min) = c.positivity_check(&terms).unwrap();
        assert!(ok, "{min}");
    }

    #[test]
    fn basis_independence() {
        let c = fib_coend();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = Gauge::random(c.right().cat().ring(), &mut rng);
        let c2 = c.rebase(&g).unwrap();
        for &x in c.grades() {
            let t = c.random_homogeneous(x, &mut rng);
            let (a, b) = (c.norm_sandwich(&t).unwrap(), c2.norm_sandwich(&t).unwrap());
            assert!((a.truncated_norm - b.truncated_norm).abs() < 1e-9);
            assert!((a.vector_norm - b.vector_norm).abs() < 1e-9);
        }
    }

    #[test]
    fn strict_mode_overflow() {
        let cat = Arc::new(fixtures::cyclic(4));
        let op = Arc::new(cat.opposite());
        let (a, b) = (group_algebra_object(op.clone()).unwrap(), group_algebra_object(cat.clone()).unwrap());
        let s = SupportSet::from_labels(cat.ring(), &["g"]).unwrap();
        match CoendAlgebra::new(a.clone(), b.clone(), &s, Mode::Strict) {
            Err(Error::SupportOverflow(m)) => assert_eq!(m, "g2"),
            other => panic!("{other:?}"),
        }
        let c = CoendAlgebra::new(a, b.clone(), &s, Mode::Project).unwrap();
        assert!(!c.is_closed());
        assert_eq!(c.dim(), 3);
        // the unit object on the left keeps only the ground grade
        let c = crossed_product(unit_object(op), b, &SupportSet::full(cat.ring()), Mode::Strict).unwrap();
        assert_eq!(c.dim(), 1);
    }

    #[test]
    fn descended_expectations() {
        let cat = Arc::new(fixtures::cyclic(2));
        let op = Arc::new(cat.opposite());
        let left = unit_object(op);
        let right = ground_only(cat.clone(), &diagonal_algebra(2));
        let c = crossed_product(left, right, &SupportSet::full(cat.ring()), Mode::Strict).unwrap();
        let coord = c.descend_expectation(&Vector::from_vec(vec![ONE, r(0.0)])).unwrap();
        assert!(!coord.state_faithful && !coord.faithful);
        let tr = c.descend_expectation(&Vector::from_vec(vec![r(0.5), r(0.5)])).unwrap();
        assert!(tr.state_faithful && tr.faithful);
        assert!(matches!(c.descend_expectation(&Vector::from_vec(vec![r(2.0), r(-1.0)])), Err(Error::NotAState(_))));
    }
}
