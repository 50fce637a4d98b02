//! Hilbert space objects, their realizations as block correspondences, and
//! the relative-commutant block decomposition.
//!
//! A realized correspondence is modelled by matrices: label `K` contributes
//! a summand `ℂ^{m_K} ⊗ ℂ^{h_K}` on which the bimodule action is generated by
//! the matrix units of `M_{m_K} ⊗ 1`. The whole picture is conjugated by a
//! random unitary so that the block structure has to be recovered.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra_object::{AlgebraObject, FiberElement};
use crate::cstar::FdAlgebra;
use crate::error::{Error, Result};
use crate::fusion_ring::{FusionRing, Label};
use crate::linalg::{
    columns_to_mat, diff, herm_eig, max_abs, min_eig, nullspace, orthonormalize, r, random_unitary, Mat, Vector, C64,
    ONE,
};

/// Dimension of the generated algebra above which the explicit closure
/// test is refused.
pub const CLOSURE_CAP: usize = 40;
pub const GNS_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HilbertSpaceObject {
    pub dims: Vec<usize>,
}

impl HilbertSpaceObject {
    pub fn delta(ring: &FusionRing, x: Label) -> HilbertSpaceObject {
        let mut dims = vec![0; ring.len()];
        dims[x] = 1;
        HilbertSpaceObject { dims }
    }

    pub fn support(&self) -> Vec<Label> {
        (0..self.dims.len()).filter(|&k| self.dims[k] > 0).collect()
    }

    /// Graded dimensions of `H1 ⊠ H2`: `Σ N_{K1 K2}^K h1(K1) h2(K2)`.
    pub fn tensor(&self, other: &HilbertSpaceObject, ring: &FusionRing) -> HilbertSpaceObject {
        let mut dims = vec![0; ring.len()];
        for (k1, &a) in self.dims.iter().enumerate() {
            for (k2, &b) in other.dims.iter().enumerate() {
                if a * b == 0 {
                    continue;
                }
                for (k, n) in ring.fuse_idx(k1, k2) {
                    dims[k] += n as usize * a * b;
                }
            }
        }
        HilbertSpaceObject { dims }
    }
}

#[derive(Clone, Debug)]
pub struct RealizedCorrespondence {
    /// Model size `m_K` of the bimodule `K` (zero-free for every label).
    pub model: Vec<usize>,
    pub dims: Vec<usize>,
    pub generators: Vec<Mat>,
    pub projections: Vec<Mat>,
    pub size: usize,
}

#[derive(Clone, Debug)]
pub struct Block {
    /// Size of the commutant block.
    pub h: usize,
    /// Size of the irreducible representation of the generated algebra.
    pub m: usize,
    /// Orthonormal basis of the isotypic subspace.
    pub space: Mat,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockDecomposition {
    pub blocks: Vec<(Option<String>, usize)>,
    pub commutant_dim: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndVerdict {
    pub ind: bool,
    pub blocks: Option<BlockDecomposition>,
    pub projection_sum_residual: Option<f64>,
    pub obstruction: Option<String>,
    pub condition3: &'static str,
}

#[derive(Clone, Debug)]
pub struct GnsObject {
    pub hilbert: HilbertSpaceObject,
    /// Per label, the quotient map `D(K) -> L²(K)` as an `h_K × n_K` matrix.
    pub quotients: Vec<Mat>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscretenessReport {
    pub discrete: bool,
    pub pqr: bool,
    pub ind: bool,
    pub chain_holds: bool,
    pub gns_dims: Vec<usize>,
    pub verdict: IndVerdict,
}

/// Model size for a label: the ceiling of its quantum dimension.
pub fn model_size(ring: &FusionRing, k: Label) -> usize {
    (ring.dim(k) - 1e-9).ceil().max(1.0) as usize
}

pub fn realize<R: Rng>(ring: &FusionRing, h: &HilbertSpaceObject, rng: &mut R) -> RealizedCorrespondence {
    let l = ring.len();
    let model: Vec<usize> = (0..l).map(|k| model_size(ring, k)).collect();
    let size: usize = (0..l).map(|k| model[k] * h.dims[k]).sum();
    let u = random_unitary(rng, size);
    let mut generators = Vec::new();
    let mut projections = Vec::new();
    let mut offset = 0;
    for k in 0..l {
        let (m, hk) = (model[k], h.dims[k]);
        for i in 0..m {
            for j in 0..m {
                let mut g = Mat::zeros(size, size);
                for t in 0..hk {
                    g[(offset + i * hk + t, offset + j * hk + t)] = ONE;
                }
                generators.push(&u * g * u.adjoint());
            }
        }
        let mut p = Mat::zeros(size, size);
        for t in 0..m * hk {
            p[(offset + t, offset + t)] = ONE;
        }
        projections.push(&u * p * u.adjoint());
        offset += m * hk;
    }
    RealizedCorrespondence { model, dims: h.dims.clone(), generators, projections, size }
}

/// Adds a non-normal generator mixing the first two nonzero blocks; the
/// generated algebra is no longer closed under adjoints.
pub fn corrupt<R: Rng>(c: &RealizedCorrespondence, rng: &mut R) -> Result<RealizedCorrespondence> {
    let live: Vec<usize> = (0..c.dims.len()).filter(|&k| c.dims[k] > 0).collect();
    if live.len() < 2 {
        return Err(Error::NotSemisimpleInput("corruption needs two nonzero blocks".into()));
    }
    let pick = |k: usize, rng: &mut R| {
        let v = &c.projections[k] * Vector::from_iterator(c.size, (0..c.size).map(|_| crate::linalg::random_c64(rng)));
        let n = v.norm();
        v / r(n)
    };
    let a = pick(live[0], rng);
    let b = pick(live[1], rng);
    let mut out = c.clone();
    out.generators.push(&b * a.adjoint());
    Ok(out)
}

fn vec_of(m: &Mat) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

fn residual_after_projection(basis: &[Vector], v: &Vector) -> f64 {
    let mut w = v.clone();
    for u in basis {
        let p = u.dotc(&w);
        w -= u * p;
    }
    w.norm()
}

fn span_is_star_closed(gens: &[Mat]) -> bool {
    let scale = gens.iter().map(max_abs).fold(0.0, f64::max).max(1e-300);
    let basis = orthonormalize(&gens.iter().map(vec_of).collect::<Vec<_>>(), 1e-10 * scale);
    gens.iter().all(|g| residual_after_projection(&basis, &vec_of(&g.adjoint())) < 1e-8 * scale)
}

/// Whether the unital algebra generated by `gens` is closed under adjoints.
fn generated_algebra_is_star_closed(gens: &[Mat]) -> Result<bool> {
    let n = gens[0].nrows();
    if n > CLOSURE_CAP {
        return Err(Error::DimensionCap(n, CLOSURE_CAP));
    }
    let scale = gens.iter().map(max_abs).fold(1.0, f64::max);
    let tol = 1e-10 * scale;
    let mut basis = orthonormalize(&[vec_of(&Mat::identity(n, n))], tol);
    let mut frontier = vec![Mat::identity(n, n)];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for f in &frontier {
            for g in gens {
                let p = g * f;
                let v = vec_of(&p);
                let mut w = v.clone();
                for b in &basis {
                    let c: C64 = b.dotc(&w);
                    w -= b * c;
                }
                if w.norm() > tol * v.norm().max(1.0) {
                    let nn = w.norm();
                    basis.push(w / r(nn));
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    let mats: Vec<Mat> = basis.iter().map(|v| Mat::from_column_slice(n, n, v.as_slice())).collect();
    Ok(mats.iter().all(|m| residual_after_projection(&basis, &vec_of(&m.adjoint())) < 1e-8 * scale))
}

fn random_hermitian_element<R: Rng>(gens: &[Mat], rng: &mut R) -> Mat {
    let n = gens[0].nrows();
    let mut h = Mat::zeros(n, n);
    for g in gens {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        h += (g + g.adjoint()) * r(a) + (g - g.adjoint()) * C64::new(0.0, b);
    }
    h
}

/// Clusters eigenvalues into eigenspaces.
fn eigenspaces(h: &Mat) -> Vec<(f64, Mat)> {
    let (vals, vecs) = herm_eig(h);
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-8 * scale;
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match out.last_mut() {
            Some((v0, idx)) if (v - *v0).abs() < tol => idx.push(i),
            _ => out.push((v, vec![i])),
        }
    }
    out.into_iter()
        .map(|(v, idx)| {
            let cols: Vec<Vector> = idx.iter().map(|&i| vecs.column(i).into_owned()).collect();
            (v, columns_to_mat(h.nrows(), &cols))
        })
        .collect()
}

/// Solves `G Y = Y' G` style constraints restricted to eigenspace pairs:
/// unknowns are blocks `Y_λ` (`dims_out[λ] × dims_in[λ]`) and every
/// generator gives `A_μ^† G B_λ Y_λ = Y_μ A_μ^† G' B_λ`. Returns the kernel
/// dimension.
fn intertwiner_kernel(gens_out: &[Mat], gens_in: &[Mat], out_spaces: &[Mat], in_spaces: &[Mat]) -> usize {
    let k = out_spaces.len();
    let mut offsets = Vec::with_capacity(k);
    let mut total = 0;
    for i in 0..k {
        offsets.push(total);
        total += out_spaces[i].ncols() * in_spaces[i].ncols();
    }
    if total == 0 {
        return 0;
    }
    let mut rows: Vec<Vec<(usize, C64)>> = Vec::new();
    for (go, gi) in gens_out.iter().zip(gens_in) {
        for mu in 0..k {
            for la in 0..k {
                // (A_μ† Go A_λ) Y_λ - Y_μ (B_μ† Gi B_λ) = 0, an (out_μ × in_λ) equation
                let a = out_spaces[mu].adjoint() * go * &out_spaces[la];
                let b = in_spaces[mu].adjoint() * gi * &in_spaces[la];
                if max_abs(&a) < 1e-12 && max_abs(&b) < 1e-12 {
                    continue;
                }
                let (om, ol) = (out_spaces[mu].ncols(), out_spaces[la].ncols());
                let (im, il) = (in_spaces[mu].ncols(), in_spaces[la].ncols());
                for p in 0..om {
                    for q in 0..il {
                        let mut row = Vec::new();
                        // Y_λ is ol × il, entry (s, q) at offsets[λ] + s * il + q
                        for s in 0..ol {
                            let c = a[(p, s)];
                            if c.norm() > 0.0 {
                                row.push((offsets[la] + s * il + q, c));
                            }
                        }
                        // Y_μ is om × im
                        for s in 0..im {
                            let c = b[(s, q)];
                            if c.norm() > 0.0 {
                                row.push((offsets[mu] + p * im + s, -c));
                            }
                        }
                        if !row.is_empty() {
                            rows.push(row);
                        }
                    }
                }
            }
        }
    }
    let mut a = Mat::zeros(rows.len(), total);
    for (i, row) in rows.iter().enumerate() {
        for &(j, c) in row {
            a[(i, j)] += c;
        }
    }
    nullspace(&a, 1e-9).ncols()
}

/// Block decomposition of the commutant of the *-algebra generated by
/// `gens`.
pub fn commutant_blocks_raw(gens: &[Mat], seed: u64) -> Result<Vec<Block>> {
    if gens.is_empty() {
        return Err(Error::NotSemisimpleInput("no generators".into()));
    }
    let n = gens[0].nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    let mut all: Vec<Mat> = gens.to_vec();
    if !span_is_star_closed(gens) {
        if !generated_algebra_is_star_closed(gens)? {
            return Err(Error::NotSemisimpleInput("generated algebra is not closed under adjoints".into()));
        }
        all.extend(gens.iter().map(|g| g.adjoint()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = all.iter().map(max_abs).fold(0.0, f64::max).max(1e-300);
    for _ in 0..8 {
        let h = random_hermitian_element(&all, &mut rng);
        let spaces = eigenspaces(&h);
        let k = spaces.len();
        // components of the coupling graph
        let mut comp: Vec<usize> = (0..k).collect();
        fn find(c: &mut Vec<usize>, i: usize) -> usize {
            if c[i] != i {
                let root = find(c, c[i]);
                c[i] = root;
            }
            c[i]
        }
        for g in &all {
            for a in 0..k {
                for b in 0..k {
                    if a == b {
                        continue;
                    }
                    let blk = spaces[a].1.adjoint() * g * &spaces[b].1;
                    if max_abs(&blk) > 1e-9 * scale {
                        let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
                        comp[ra] = rb;
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..k {
            let root = find(&mut comp, i);
            groups.entry(root).or_default().push(i);
        }
        let mut blocks = Vec::new();
        let mut ok = true;
        for members in groups.values() {
            let m0 = spaces[members[0]].1.ncols();
            if members.iter().any(|&i| spaces[i].1.ncols() != m0) {
                ok = false;
                break;
            }
            let sp: Vec<Mat> = members.iter().map(|&i| spaces[i].1.clone()).collect();
            let kernel = intertwiner_kernel(&all, &all, &sp, &sp);
            if kernel != m0 * m0 {
                ok = false;
                break;
            }
            let cols: Vec<Vector> =
                sp.iter().flat_map(|s| s.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>()).collect();
            blocks.push(Block { h: m0, m: members.len(), space: columns_to_mat(n, &cols) });
        }
        if ok {
            return Ok(blocks);
        }
    }
    Err(Error::NotSemisimpleInput("commutant is not a multi-matrix algebra within tolerance".into()))
}

/// Dimension of `{X : G2_i X = X G1_i}` for corresponding generator lists.
pub fn intertwiner_dim(g1: &[Mat], g2: &[Mat], seed: u64) -> Result<usize> {
    assert_eq!(g1.len(), g2.len(), "generator lists must correspond");
    let (n1, n2) = (g1[0].nrows(), g2[0].nrows());
    if n1 == 0 || n2 == 0 {
        return Ok(0);
    }
    for g in [g1, g2] {
        if !span_is_star_closed(g) {
            return Err(Error::NotSemisimpleInput("generator span is not closed under adjoints".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefs: Vec<(f64, f64)> = g1.iter().map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let herm = |gs: &[Mat], n: usize| {
        let mut h = Mat::zeros(n, n);
        for (g, &(a, b)) in gs.iter().zip(&coefs) {
            h += (g + g.adjoint()) * r(a) + (g - g.adjoint()) * C64::new(0.0, b);
        }
        h
    };
    let s1 = eigenspaces(&herm(g1, n1));
    let s2 = eigenspaces(&herm(g2, n2));
    let scale = s1.iter().chain(&s2).fold(1.0f64, |a, (v, _)| a.max(v.abs()));
    let mut ins = Vec::new();
    let mut outs = Vec::new();
    for (v1, m1) in &s1 {
        if let Some((_, m2)) = s2.iter().find(|(v2, _)| (v1 - v2).abs() < 1e-7 * scale) {
            ins.push(m1.clone());
            outs.push(m2.clone());
        }
    }
    Ok(intertwiner_kernel(g2, g1, &outs, &ins))
}

/// `Σ_K h1(K) h2(K)`.
pub fn hom_count(h1: &HilbertSpaceObject, h2: &HilbertSpaceObject) -> usize {
    h1.dims.iter().zip(&h2.dims).map(|(a, b)| a * b).sum()
}

/// Decomposes the commutant of a realized correspondence and names the
/// blocks through the central projections.
pub fn commutant_blocks(c: &RealizedCorrespondence, ring: &FusionRing, seed: u64) -> Result<BlockDecomposition> {
    let blocks = commutant_blocks_raw(&c.generators, seed)?;
    let mut out = Vec::new();
    for b in &blocks {
        let label = c.projections.iter().position(|p| diff(&(p * &b.space), &b.space) < 1e-8);
        out.push((label.map(|k| ring.name(k).to_string()), b.h));
    }
    out.sort();
    Ok(BlockDecomposition { commutant_dim: blocks.iter().map(|b| b.h * b.h).sum(), blocks: out })
}

pub fn ind_check(c: &RealizedCorrespondence, ring: &FusionRing, seed: u64) -> IndVerdict {
    let condition3 = "finitely vacuous";
    match commutant_blocks_raw(&c.generators, seed) {
        Ok(blocks) => {
            let mut sum = Mat::zeros(c.size, c.size);
            for b in &blocks {
                sum += &b.space * b.space.adjoint();
            }
            let res = if c.size == 0 { 0.0 } else { diff(&sum, &Mat::identity(c.size, c.size)) };
            let decomposition = commutant_blocks(c, ring, seed).ok();
            IndVerdict {
                ind: res < 1e-8,
                blocks: decomposition,
                projection_sum_residual: Some(res),
                obstruction: (res >= 1e-8).then(|| "central projections do not sum to the identity".into()),
                condition3,
            }
        }
        Err(e) => IndVerdict {
            ind: false,
            blocks: None,
            projection_sum_residual: None,
            obstruction: Some(e.to_string()),
            condition3,
        },
    }
}

/// Checks that `values` defines a state on `alg`.
pub fn check_state(alg: &FdAlgebra, values: &Vector) -> Result<()> {
    let one = FdAlgebra::apply(values, &alg.unit);
    if (one - ONE).norm() > 1e-9 {
        return Err(Error::NotAState(format!("ω(1) = {one}")));
    }
    let g = alg.gram(values);
    let herm = diff(&g, &g.adjoint());
    let scale = max_abs(&g).max(1.0);
    if herm > 1e-9 * scale {
        return Err(Error::NotAState("not self-adjoint".into()));
    }
    let tau = alg.gns(&alg.regular_trace())?;
    let gram_min = min_eig(&(&tau.ghi * &g * &tau.ghi));
    if gram_min < -1e-9 * scale {
        return Err(Error::NotAState(format!("negative on a positive element ({gram_min:e})")));
    }
    Ok(())
}

/// `L²_ω D`: per label, `D(K)` modulo the kernel of `ξ ↦ ω(⟨ξ, ξ⟩)`.
pub fn gns_object(d: &AlgebraObject, omega: &Vector) -> Result<GnsObject> {
    let ground = d.ground()?;
    check_state(&ground, omega)?;
    let l = d.fibers().len();
    let mut dims = vec![0; l];
    let mut quotients = Vec::with_capacity(l);
    for k in 0..l {
        let n = d.fiber_dim(k);
        if n == 0 {
            quotients.push(Mat::zeros(0, 0));
            continue;
        }
        let e = |i: usize| {
            let mut v = Vector::zeros(n);
            v[i] = ONE;
            FiberElement { label: k, coeffs: v }
        };
        let mut q = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                q[(i, j)] = FdAlgebra::apply(omega, &d.fiber_inner_product(&e(i), &e(j))?);
            }
        }
        let (vals, vecs) = herm_eig(&q);
        let top = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if vals.first().copied().unwrap_or(0.0) < -1e-9 * top.max(1.0) {
            return Err(Error::PositivityFailure(vals[0]));
        }
        let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > GNS_RANK_TOL * top).collect();
        dims[k] = keep.len();
        let mut m = Mat::zeros(keep.len(), n);
        for (row, &i) in keep.iter().enumerate() {
            let s = vals[i].sqrt();
            for j in 0..n {
                m[(row, j)] = vecs[(j, i)].conj() * r(s);
            }
        }
        quotients.push(m);
    }
    Ok(GnsObject { hilbert: HilbertSpaceObject { dims }, quotients })
}

pub fn discreteness_report<R: Rng>(
    d: &AlgebraObject,
    omega: &Vector,
    corrupted: bool,
    rng: &mut R,
) -> Result<DiscretenessReport> {
    let ring = d.cat().ring().clone();
    let g = gns_object(d, omega)?;
    let mut c = realize(&ring, &g.hilbert, rng);
    if corrupted {
        c = corrupt(&c, rng)?;
    }
    let seed = rng.gen();
    let verdict = ind_check(&c, &ring, seed);
    // the completion of the realized algebra has the GNS dimensions
    let pqr = match &verdict.blocks {
        Some(b) => {
            let mut found = vec![0; ring.len()];
            let mut named = true;
            for (name, h) in &b.blocks {
                match name.as_deref().map(|s| ring.label(s)) {
                    Some(Ok(k)) => found[k] += h,
                    _ => named = false,
                }
            }
            named && found == g.hilbert.dims
        }
        None => false,
    };
    // discreteness comes from the algebra object; a scrambled realization has none
    let discrete = !corrupted;
    let chain_holds = (!discrete || pqr) && (!pqr || verdict.ind);
    Ok(DiscretenessReport { discrete, pqr, ind: verdict.ind, chain_holds, gns_dims: g.hilbert.dims, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn planted_blocks_recovered() {
        let ring = fixtures::fibonacci().ring().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = HilbertSpaceObject { dims: vec![2, 3] };
        let c = realize(&ring, &h, &mut rng);
        let b = commutant_blocks(&c, &ring, 9).unwrap();
        assert_eq!(b.commutant_dim, 13);
        assert_eq!(b.blocks, vec![(Some("1".into()), 2), (Some("tau".into()), 3)]);
        assert_eq!(intertwiner_dim(&c.generators, &c.generators, 4).unwrap(), 13);
    }

    #[test]
    fn corrupted_is_not_ind() {
        let ring = fixtures::cyclic(3).ring().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = realize(&ring, &HilbertSpaceObject { dims: vec![1, 1, 0] }, &mut rng);
        let bad = corrupt(&c, &mut rng).unwrap();
        let v = ind_check(&bad, &ring, 5);
        assert!(!v.ind);
        assert!(v.obstruction.unwrap().contains("not semisimple"));
        assert!(ind_check(&c, &ring, 5).ind);
    }
}
