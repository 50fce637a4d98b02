//! The annulus algebra object `D_Ann(Y) = ⊕_{X ∈ S} Hom(Y, X̄ ⊠ X)`.
//!
//! The product of `f: Z1 -> X̄X` and `g: Z2 -> ȲY` along `v: W -> Z1 Z2` is
//! `(Σ_γ conj(γ)* ⊗ γ*) ∘ (c_{X̄X, Ȳ} ⊗ id_Y) ∘ (f ⊗ g) ∘ v`, with `γ` running
//! over the basis vertices of `V(W'; X, Y)`. No extra scalars are inserted.
//!
//! The star sends `f: Y -> X̄X` to `r_X⁻¹ · c_{X̄,X} ∘ conj(f): Ȳ -> XX̄`, where
//! the phase `r_X` is the braiding eigenvalue on the unit channel of `X̄X`.

use std::collections::HashMap;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::algebra_object::AlgebraObject;
use crate::error::{Error, Result};
use crate::fusion_ring::{Label, SupportSet};
use crate::linalg::{Mat, Vector, ONE};
use crate::skeletal_cat::SkeletalUTC;

#[derive(Clone, Debug)]
pub struct AnnulusObject {
    pub object: AlgebraObject,
    /// The summands `X ∈ S`.
    pub summands: Vec<Label>,
    /// Basis of each fiber `D_Ann(Y)`: pairs `(X, μ)` with `μ ∈ V(Y; X̄, X)`.
    pub basis: Vec<Vec<(Label, u32)>>,
}

impl AnnulusObject {
    pub fn index(&self, y: Label, x: Label, mu: u32) -> Option<usize> {
        self.basis[y].iter().position(|&p| p == (x, mu))
    }

    pub fn provenance(&self) -> Value {
        let ring = self.object.cat().ring();
        json!({
            "construction": "annulus",
            "summands": self.summands.iter().map(|&x| ring.name(x)).collect::<Vec<_>>(),
            "decomposition": "orthonormal vertex basis, no extra scalars",
            "star": "unit-channel normalized braiding after conjugation",
        })
    }

    /// The functional reading off the `X = 1` coefficient of `D_Ann(1)`.
    pub fn z_state(&self) -> Result<Vector> {
        let u = self.object.cat().unit();
        let n = self.object.fiber_dim(u);
        let mut w = Vector::zeros(n);
        let i = self.index(u, u, 0).expect("unit summand is present");
        w[i] = ONE;
        let ground = self.object.ground()?;
        let norm = crate::cstar::FdAlgebra::apply(&w, &ground.unit);
        let w = w / norm;
        let gram = ground.gram(&w);
        let (vals, _) = crate::linalg::herm_eig(&gram);
        if vals.first().copied().unwrap_or(0.0) < -1e-10 {
            return Err(Error::PositivityFailure(vals[0]));
        }
        Ok(w)
    }
}

pub fn build_annulus(cat: Arc<SkeletalUTC>, s: &SupportSet) -> Result<AnnulusObject> {
    if !cat.is_braided() {
        return Err(Error::MissingBraiding);
    }
    let ring = cat.ring().clone();
    let l = ring.len();
    let u = ring.unit();
    let summands: Vec<Label> = s.labels.clone();
    let mut missing = std::collections::BTreeSet::new();
    for &x in &summands {
        if !s.contains(ring.dual(x)) {
            missing.insert(ring.name(ring.dual(x)).to_string());
        }
        for &y in &summands {
            for (w, _) in ring.fuse_idx(x, y) {
                if !s.contains(w) {
                    missing.insert(ring.name(w).to_string());
                }
            }
        }
    }
    if !s.contains(u) {
        missing.insert(ring.name(u).to_string());
    }
    if !missing.is_empty() {
        return Err(Error::SupportTooSmall(missing.into_iter().collect()));
    }

    let mut basis: Vec<Vec<(Label, u32)>> = vec![vec![]; l];
    for &x in &summands {
        let xb = ring.dual(x);
        for (y, m) in ring.fuse_idx(xb, x) {
            for mu in 0..m {
                basis[y].push((x, mu));
            }
        }
    }
    let fibers: Vec<usize> = basis.iter().map(|b| b.len()).collect();
    let idx = |y: Label, x: Label, mu: u32| basis[y].iter().position(|&p| p == (x, mu)).unwrap();
    // the fiber support, closed under duals
    let mut labels: Vec<Label> = (0..l).filter(|&y| fibers[y] > 0 || y == u).collect();
    for y in labels.clone() {
        labels.push(ring.dual(y));
    }
    labels.sort();
    labels.dedup();
    let support = SupportSet { labels, generators: s.generators.clone(), depth: s.depth };

    let mut mult: HashMap<(Label, Label, Label, u32), Mat> = HashMap::new();
    for &x in &summands {
        let xb = ring.dual(x);
        for &y in &summands {
            let yb = ring.dual(y);
            let src = [xb, x, yb, y];
            let sp = cat.split(&[xb, x], &[yb, y]);
            let braid = cat.compose(&cat.braid_at(&[xb, yb, x, y], 0)?, &cat.braid_at(&src, 1)?);
            for (wp, m) in ring.fuse_idx(x, y) {
                for g in 0..m {
                    let gamma = cat.vertex(wp, x, y, g);
                    let gbar = cat.conj_morphism(&gamma)?;
                    let proj = cat.compose(&cat.tensor(&gbar.adjoint(), &gamma.adjoint()), &braid);
                    for (w, blocks) in sp.blocks.iter().enumerate() {
                        if blocks.is_empty() || proj.blocks[w].nrows() == 0 {
                            continue;
                        }
                        let coefs = &proj.blocks[w] * &sp.k[w];
                        for blk in blocks {
                            let (n1, n2) = (fibers[blk.z1], fibers[blk.z2]);
                            let key = (blk.z1, blk.z2, w, blk.nu);
                            let entry = mult.entry(key).or_insert_with(|| Mat::zeros(fibers[w], n1 * n2));
                            for al in 0..blk.n1 {
                                for be in 0..blk.n2 {
                                    let col = blk.offset + al * blk.n2 + be;
                                    let c_in = idx(blk.z1, x, al as u32) * n2 + idx(blk.z2, y, be as u32);
                                    for nu in 0..coefs.nrows() {
                                        entry[(idx(w, wp, nu as u32), c_in)] += coefs[(nu, col)];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let mut star: Vec<Mat> = (0..l).map(|y| Mat::zeros(fibers[ring.dual(y)], fibers[y])).collect();
    for &x in &summands {
        let xb = ring.dual(x);
        let turn = cat.braid_at(&[xb, x], 0)?;
        let image = |y: Label, mu: u32| -> Result<Mat> {
            Ok(cat.compose(&turn, &cat.conj_morphism(&cat.vertex(y, xb, x, mu))?).blocks[ring.dual(y)].clone())
        };
        // normalize so that the X = 1 channel is fixed: e_X* = e_X̄ in D(1)
        let phase = image(u, 0)?[(0, 0)];
        let phase = phase / phase.norm();
        for (y, m) in ring.fuse_idx(xb, x) {
            let yb = ring.dual(y);
            for mu in 0..m {
                let g = image(y, mu)?;
                for nu in 0..g.nrows() {
                    star[y][(idx(yb, xb, nu as u32), idx(y, x, mu))] = g[(nu, 0)] / phase;
                }
            }
        }
    }
    let mut unit = Vector::zeros(fibers[u]);
    unit[idx(u, u, 0)] = ONE;
    let mut object = AlgebraObject::new(cat, support, fibers, mult, star, unit)?;
    object.trivial_center = false;
    Ok(AnnulusObject { object, summands, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn full(cat: &SkeletalUTC) -> SupportSet {
        SupportSet::full(cat.ring())
    }

    #[test]
    fn fiber_dimensions() {
        let fib = Arc::new(fixtures::fibonacci());
        let a = build_annulus(fib.clone(), &full(&fib)).unwrap();
        assert_eq!(a.object.fibers(), &[2, 1]);
        let z2 = Arc::new(fixtures::cyclic(2));
        let a = build_annulus(z2.clone(), &full(&z2)).unwrap();
        assert_eq!(a.object.fibers(), &[2, 0]);
        let ising = Arc::new(fixtures::ising());
        let a = build_annulus(ising.clone(), &full(&ising)).unwrap();
        assert_eq!(a.object.fiber_dim(ising.unit()), 3);
    }

    #[test]
    fn annulus_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for cat in [fixtures::fibonacci(), fixtures::ising(), fixtures::cyclic(3), fixtures::rep_a4()] {
            let cat = Arc::new(cat);
            let a = build_annulus(cat.clone(), &full(&cat)).unwrap();
            let rep = a.object.verify(&mut rng).unwrap();
            assert!(rep.violations().is_empty(), "{cat:?}: {rep:?}");
            let w = a.z_state().unwrap();
            assert!((w[0].re - 1.0).abs() < 1e-12);
        }
    }
}
