//! Skeletal unitary tensor categories.
//!
//! Morphisms between tensor words of simple objects are stored as blocks
//! over channels `Z`, with rows and columns indexed by left-associated
//! fusion trees `((x1 x2)_{z2} x3)_{z3} ... -> Z`. Tensor products and
//! re-associations are carried out through the F-symbols.
//!
//! F convention: with `L(e;α,β) = (v_α ⊗ id_c) w_β` for `v_α ∈ V(e;a,b)`,
//! `w_β ∈ V(d;e,c)` and `R(f;γ,δ) = (id_a ⊗ x_γ) y_δ` for `x_γ ∈ V(f;b,c)`,
//! `y_δ ∈ V(d;a,f)`, the associator acts as `α L = Σ F[L,R] R`.
//! R convention: `c_{a,b} v_μ = Σ_ν R[ν][μ] w_ν`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rand::Rng;
use serde_json::{json, Map, Value};

use crate::error::{AxiomViolation, Error, Result};
use crate::fusion_ring::{validate_ring, FusionRing, Label, RawRing};
use crate::io::{as_f64, as_obj, child, cmatrix, matrix_json, split_key};
use crate::linalg::{c, diff, max_abs, r, Mat, C64, ONE, ZERO};

pub const STRUCTURAL_TOL: f64 = 1e-10;
pub const DERIVED_TOL: f64 = 1e-9;

/// Index into an F-move basis: (intermediate label, first vertex, second vertex).
pub type Channel3 = (Label, u32, u32);

#[derive(Clone, Debug)]
pub struct FMove {
    pub left: Vec<Channel3>,
    pub right: Vec<Channel3>,
    pub m: Mat,
    lidx: HashMap<Channel3, usize>,
    ridx: HashMap<Channel3, usize>,
}

impl FMove {
    fn basis(ring: &FusionRing, a: Label, b: Label, c3: Label, d: Label) -> FMove {
        let mut left = Vec::new();
        for (e, m1) in ring.fuse_idx(a, b) {
            let m2 = ring.n(e, c3, d);
            for al in 0..m1 {
                for be in 0..m2 {
                    left.push((e, al, be));
                }
            }
        }
        let mut right = Vec::new();
        for (f, m1) in ring.fuse_idx(b, c3) {
            let m2 = ring.n(a, f, d);
            for ga in 0..m1 {
                for de in 0..m2 {
                    right.push((f, ga, de));
                }
            }
        }
        let lidx = left.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let ridx = right.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let m = Mat::zeros(left.len(), right.len());
        FMove { left, right, m, lidx, ridx }
    }

    pub fn get(&self, l: Channel3, rr: Channel3) -> C64 {
        match (self.lidx.get(&l), self.ridx.get(&rr)) {
            (Some(&i), Some(&j)) => self.m[(i, j)],
            _ => ZERO,
        }
    }

    pub fn left_index(&self, l: Channel3) -> Option<usize> {
        self.lidx.get(&l).copied()
    }

    pub fn right_index(&self, rr: Channel3) -> Option<usize> {
        self.ridx.get(&rr).copied()
    }

    fn rows_of(&self, e: Label) -> Vec<usize> {
        (0..self.left.len()).filter(|&i| self.left[i].0 == e).collect()
    }

    fn cols_of(&self, f: Label) -> Vec<usize> {
        (0..self.right.len()).filter(|&i| self.right[i].0 == f).collect()
    }

    fn unit_default(a: Label, b: Label, c3: Label, d: Label, unit: Label, mut fm: FMove) -> FMove {
        for i in 0..fm.left.len() {
            let (_, al, be) = fm.left[i];
            let target = if a == unit {
                (d, be, 0)
            } else if b == unit {
                (c3, 0, be)
            } else {
                (b, 0, al)
            };
            let j = fm.ridx[&target];
            fm.m[(i, j)] = ONE;
        }
        fm
    }
}

/// Left-associated fusion tree on a word: internal labels `z2..z_{n-1}`
/// and vertex indices `μ2..μn`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tree {
    pub mids: Vec<Label>,
    pub verts: Vec<u32>,
}

/// All left-associated trees of a word, grouped by channel.
#[derive(Debug)]
pub struct WordBasis {
    pub trees: Vec<Vec<Tree>>,
    index: Vec<HashMap<Tree, usize>>,
}

impl WordBasis {
    pub fn dim(&self, z: Label) -> usize {
        self.trees[z].len()
    }

    pub fn index(&self, z: Label, t: &Tree) -> usize {
        self.index[z][t]
    }
}

/// Basis of `⊕ Hom(Z1,w1) ⊗ Hom(Z2,w2) ⊗ V(W;Z1,Z2)` at a fixed `W`.
#[derive(Debug, Clone)]
pub struct SplitBlock {
    pub z1: Label,
    pub z2: Label,
    pub nu: u32,
    pub offset: usize,
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug)]
pub struct Split {
    pub blocks: Vec<Vec<SplitBlock>>,
    /// `k[W]`: columns are split-basis vectors, rows left-associated trees.
    pub k: Vec<Mat>,
}

#[derive(Default)]
struct Cache {
    words: Mutex<HashMap<Vec<Label>, Arc<WordBasis>>>,
    splits: Mutex<HashMap<(Vec<Label>, Vec<Label>), Arc<Split>>>,
    conj_trees: Mutex<HashMap<Vec<Label>, Arc<Vec<Mat>>>>,
}

/// Coefficients of the standard solution: `R_X = r·v`, `R̄_X = rbar·v̄` on
/// the basis vertices of `V(1; X̄, X)` and `V(1; X, X̄)`.
#[derive(Clone, Copy, Debug)]
pub struct ConjugateSolution {
    pub r: C64,
    pub rbar: C64,
    pub zigzag: f64,
}

pub struct SkeletalUTC {
    ring: FusionRing,
    f: HashMap<[Label; 4], FMove>,
    r: Option<HashMap<[Label; 3], Mat>>,
    qdims: Vec<f64>,
    conj: Vec<std::result::Result<ConjugateSolution, String>>,
    cache: Cache,
}

impl Clone for SkeletalUTC {
    fn clone(&self) -> Self {
        SkeletalUTC {
            ring: self.ring.clone(),
            f: self.f.clone(),
            r: self.r.clone(),
            qdims: self.qdims.clone(),
            conj: self.conj.clone(),
            cache: Cache::default(),
        }
    }
}

impl std::fmt::Debug for SkeletalUTC {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SkeletalUTC").field("labels", &self.ring.labels()).field("braided", &self.r.is_some()).finish()
    }
}

/// A morphism between words, one block per channel.
#[derive(Clone, Debug)]
pub struct Morphism {
    pub src: Vec<Label>,
    pub dst: Vec<Label>,
    pub blocks: Vec<Mat>,
}

impl Morphism {
    pub fn adjoint(&self) -> Morphism {
        Morphism {
            src: self.dst.clone(),
            dst: self.src.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Morphism {
        Morphism { src: self.src.clone(), dst: self.dst.clone(), blocks: self.blocks.iter().map(|b| b * s).collect() }
    }

    pub fn add(&self, other: &Morphism) -> Morphism {
        assert_eq!((&self.src, &self.dst), (&other.src, &other.dst), "adding morphisms of different type");
        Morphism {
            src: self.src.clone(),
            dst: self.dst.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_diff(&self, other: &Morphism) -> f64 {
        assert_eq!((&self.src, &self.dst), (&other.src, &other.dst), "comparing morphisms of different type");
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| diff(a, b)).fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(crate::linalg::spectral_norm).fold(0.0, f64::max)
    }

    /// The single coefficient of a morphism `[] -> []`, or `[z] -> [z]`.
    pub fn scalar(&self, z: Label) -> C64 {
        self.blocks[z][(0, 0)]
    }
}

/// Recoupled target basis: leaves `p` and `p+1` are fused first.
#[derive(Clone, Debug)]
pub struct Recoupled {
    pub src: Vec<Label>,
    pub dst: Vec<Label>,
    pub position: usize,
    pub keys: Vec<Vec<Tree>>,
    pub blocks: Vec<Mat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    /// Left-associated to grouped at `p`.
    Forward(usize),
    /// Grouped at `p` back to left-associated.
    Backward(usize),
}

/// A unitary change of basis on every vertex space `V(c; a, b)`;
/// new vertex `v'_μ = Σ_ν U[ν][μ] v_ν`.
#[derive(Clone, Debug, Default)]
pub struct Gauge {
    pub u: HashMap<[Label; 3], Mat>,
}

impl Gauge {
    pub fn get(&self, a: Label, b: Label, c3: Label, n: usize) -> Mat {
        self.u.get(&[a, b, c3]).cloned().unwrap_or_else(|| Mat::identity(n, n))
    }

    /// Random permutations times phases on vertex spaces whose legs and
    /// channel all differ from the unit.
    pub fn random<R: Rng>(ring: &FusionRing, rng: &mut R) -> Gauge {
        let u0 = ring.unit();
        let mut u = HashMap::new();
        for a in 0..ring.len() {
            for b in 0..ring.len() {
                for (z, m) in ring.fuse_idx(a, b) {
                    if a == u0 || b == u0 || z == u0 {
                        continue;
                    }
                    let m = m as usize;
                    let mut perm: Vec<usize> = (0..m).collect();
                    for i in (1..m).rev() {
                        perm.swap(i, rng.gen_range(0..=i));
                    }
                    let mut g = Mat::zeros(m, m);
                    for (j, &i) in perm.iter().enumerate() {
                        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                        g[(i, j)] = c(t.cos(), t.sin());
                    }
                    u.insert([a, b, z], g);
                }
            }
        }
        Gauge { u }
    }
}

/// Numerical residuals of a category.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Residuals {
    pub pentagon: f64,
    pub hexagon: Option<f64>,
    pub zigzag: f64,
    pub unitarity: f64,
    pub standardness: f64,
}

impl SkeletalUTC {
    pub fn from_parts(
        ring: FusionRing,
        fblocks: HashMap<[Label; 4], Mat>,
        rblocks: Option<HashMap<[Label; 3], Mat>>,
    ) -> Result<SkeletalUTC> {
        let l = ring.len();
        let u = ring.unit();
        let mut f = HashMap::new();
        let mut violations = Vec::new();
        let nm = |xs: &[Label]| xs.iter().map(|&x| ring.name(x).to_string()).collect::<Vec<_>>();
        for a in 0..l {
            for b in 0..l {
                for c3 in 0..l {
                    for d in 0..l {
                        let mut fm = FMove::basis(&ring, a, b, c3, d);
                        if fm.left.is_empty() {
                            if fblocks.contains_key(&[a, b, c3, d]) {
                                return Err(Error::schema(
                                    child("/F", &key4(&ring, a, b, c3, d)),
                                    "block for an inadmissible tuple",
                                ));
                            }
                            continue;
                        }
                        let given = fblocks.get(&[a, b, c3, d]);
                        if let Some(m) = given {
                            if m.shape() != fm.m.shape() {
                                return Err(Error::schema(
                                    child("/F", &key4(&ring, a, b, c3, d)),
                                    format!("expected shape {:?}", fm.m.shape()),
                                ));
                            }
                        }
                        if a == u || b == u || c3 == u {
                            let fm = FMove::unit_default(a, b, c3, d, u, fm);
                            if let Some(m) = given {
                                if diff(m, &fm.m) > STRUCTURAL_TOL {
                                    violations.push(AxiomViolation {
                                        axiom: "unit_normalization".into(),
                                        witness: nm(&[a, b, c3, d]),
                                        detail: "F-move with a unit leg is not the identity".into(),
                                    });
                                }
                            }
                            f.insert([a, b, c3, d], fm);
                        } else {
                            let m = given.ok_or_else(|| {
                                Error::schema(child("/F", &key4(&ring, a, b, c3, d)), "missing F block")
                            })?;
                            fm.m = m.clone();
                            f.insert([a, b, c3, d], fm);
                        }
                    }
                }
            }
        }
        let r = match rblocks {
            None => None,
            Some(rb) => {
                let mut out = HashMap::new();
                for a in 0..l {
                    for b in 0..l {
                        for (z, m) in ring.fuse_idx(a, b) {
                            let m = m as usize;
                            let n2 = ring.n(b, a, z) as usize;
                            let k = ring.name(a).to_string() + "," + ring.name(b) + ";" + ring.name(z);
                            let block = if a == u || b == u {
                                Mat::identity(n2, m)
                            } else {
                                rb.get(&[a, b, z])
                                    .cloned()
                                    .ok_or_else(|| Error::schema(child("/R", &k), "missing R block"))?
                            };
                            if block.shape() != (n2, m) {
                                return Err(Error::schema(child("/R", &k), "wrong shape"));
                            }
                            out.insert([a, b, z], block);
                        }
                    }
                }
                for k in rb.keys() {
                    if ring.n(k[0], k[1], k[2]) == 0 {
                        return Err(Error::schema("/R", "block for an inadmissible tuple"));
                    }
                }
                Some(out)
            }
        };
        if !violations.is_empty() {
            return Err(Error::Axioms(violations));
        }
        let qdims = ring.dims().to_vec();
        let mut cat = SkeletalUTC { ring, f, r, qdims, conj: vec![], cache: Cache::default() };
        cat.conj = cat.solve_conjugates();
        Ok(cat)
    }

    pub fn from_json(v: &Value) -> Result<SkeletalUTC> {
        let raw = RawRing::from_json(v)?;
        let ring = validate_ring(&raw)?;
        let m = as_obj(v, "")?;
        let mut fblocks = HashMap::new();
        if let Some(fv) = m.get("F") {
            for (k, blocks) in as_obj(fv, "/F")? {
                let p = child("/F", k);
                let key = split_key(k, &[3, 1], &p)?;
                let look =
                    |s: &String| ring.label(s).map_err(|_| Error::schema(p.clone(), format!("unknown label `{s}`")));
                let (a, b, c3, d) = (look(&key[0][0])?, look(&key[0][1])?, look(&key[0][2])?, look(&key[1][0])?);
                let mut fm = FMove::basis(&ring, a, b, c3, d);
                if fm.left.is_empty() {
                    return Err(Error::schema(p, "inadmissible tuple"));
                }
                for (ef, mv) in as_obj(blocks, &p)? {
                    let pe = child(&p, ef);
                    let kk = split_key(ef, &[2], &pe)?;
                    let e = ring.label(&kk[0][0]).map_err(|_| Error::schema(pe.clone(), "unknown label"))?;
                    let f = ring.label(&kk[0][1]).map_err(|_| Error::schema(pe.clone(), "unknown label"))?;
                    let sub = cmatrix(mv, &pe)?;
                    let rows = fm.rows_of(e);
                    let cols = fm.cols_of(f);
                    if rows.is_empty() || cols.is_empty() || sub.shape() != (rows.len(), cols.len()) {
                        return Err(Error::schema(pe, format!("expected a {}x{} block", rows.len(), cols.len())));
                    }
                    for (i, &ri) in rows.iter().enumerate() {
                        for (j, &cj) in cols.iter().enumerate() {
                            fm.m[(ri, cj)] = sub[(i, j)];
                        }
                    }
                }
                fblocks.insert([a, b, c3, d], fm.m);
            }
        }
        let rblocks = match m.get("R") {
            None => None,
            Some(rv) => {
                let mut out = HashMap::new();
                for (k, mv) in as_obj(rv, "/R")? {
                    let p = child("/R", k);
                    let key = split_key(k, &[2, 1], &p)?;
                    let look = |s: &String| {
                        ring.label(s).map_err(|_| Error::schema(p.clone(), format!("unknown label `{s}`")))
                    };
                    out.insert([look(&key[0][0])?, look(&key[0][1])?, look(&key[1][0])?], cmatrix(mv, &p)?);
                }
                Some(out)
            }
        };
        let cat = SkeletalUTC::from_parts(ring, fblocks, rblocks)?;
        if let Some(qv) = m.get("qdim") {
            let mut bad = Vec::new();
            for (k, x) in as_obj(qv, "/qdim")? {
                let p = child("/qdim", k);
                let lx = cat.ring.label(k).map_err(|_| Error::schema(p.clone(), "unknown label"))?;
                let d = as_f64(x, &p)?;
                if (d - cat.qdims[lx]).abs() > DERIVED_TOL {
                    bad.push(AxiomViolation {
                        axiom: "qdim".into(),
                        witness: vec![k.clone()],
                        detail: format!("declared {d}, Perron–Frobenius {}", cat.qdims[lx]),
                    });
                }
            }
            if !bad.is_empty() {
                return Err(Error::Axioms(bad));
            }
        }
        Ok(cat)
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.ring.to_json();
        let o = v.as_object_mut().unwrap();
        let u = self.ring.unit();
        let mut fmap = Map::new();
        let mut keys: Vec<_> = self.f.keys().copied().collect();
        keys.sort();
        for [a, b, c3, d] in keys {
            if a == u || b == u || c3 == u {
                continue;
            }
            let fm = &self.f[&[a, b, c3, d]];
            let mut blk = Map::new();
            let mut es: Vec<Label> = fm.left.iter().map(|k| k.0).collect();
            es.dedup();
            let mut fs: Vec<Label> = fm.right.iter().map(|k| k.0).collect();
            fs.dedup();
            for &e in &es {
                for &f in &fs {
                    let rows = fm.rows_of(e);
                    let cols = fm.cols_of(f);
                    let sub = Mat::from_fn(rows.len(), cols.len(), |i, j| fm.m[(rows[i], cols[j])]);
                    blk.insert(format!("{},{}", self.ring.name(e), self.ring.name(f)), matrix_json(&sub));
                }
            }
            fmap.insert(key4(&self.ring, a, b, c3, d), Value::Object(blk));
        }
        o.insert("F".into(), Value::Object(fmap));
        if let Some(rs) = &self.r {
            let mut rmap = Map::new();
            let mut keys: Vec<_> = rs.keys().copied().collect();
            keys.sort();
            for [a, b, z] in keys {
                if a == u || b == u {
                    continue;
                }
                rmap.insert(
                    format!("{},{};{}", self.ring.name(a), self.ring.name(b), self.ring.name(z)),
                    matrix_json(&rs[&[a, b, z]]),
                );
            }
            o.insert("R".into(), Value::Object(rmap));
        }
        let q: BTreeMap<String, f64> =
            (0..self.ring.len()).map(|x| (self.ring.name(x).to_string(), self.qdims[x])).collect();
        o.insert("qdim".into(), json!(q));
        v
    }

    pub fn ring(&self) -> &FusionRing {
        &self.ring
    }

    pub fn unit(&self) -> Label {
        self.ring.unit()
    }

    pub fn dual(&self, x: Label) -> Label {
        self.ring.dual(x)
    }

    pub fn n(&self, x: Label, y: Label, z: Label) -> u32 {
        self.ring.n(x, y, z)
    }

    pub fn qdim(&self, x: Label) -> f64 {
        self.qdims[x]
    }

    pub fn label(&self, s: &str) -> Result<Label> {
        self.ring.label(s)
    }

    pub fn is_braided(&self) -> bool {
        self.r.is_some()
    }

    pub fn fmove(&self, a: Label, b: Label, c3: Label, d: Label) -> Option<&FMove> {
        self.f.get(&[a, b, c3, d])
    }

    pub fn fmove_mut(&mut self, a: Label, b: Label, c3: Label, d: Label) -> Option<&mut FMove> {
        self.cache = Cache::default();
        self.f.get_mut(&[a, b, c3, d])
    }

    pub fn r_block(&self, a: Label, b: Label, z: Label) -> Result<&Mat> {
        let rs = self.r.as_ref().ok_or(Error::MissingBraiding)?;
        rs.get(&[a, b, z]).ok_or_else(|| Error::EmptyHomSpace {
            z: self.ring.name(z).into(),
            x: self.ring.name(a).into(),
            y: self.ring.name(b).into(),
        })
    }

    /// The same category with every R-symbol conjugated.
    pub fn with_conjugated_r(&self) -> SkeletalUTC {
        let mut out = self.clone();
        if let Some(rs) = &mut out.r {
            for m in rs.values_mut() {
                *m = m.map(|z| z.conj());
            }
        }
        out
    }

    /// The category with F and R complex conjugated. This models the
    /// opposite category in the conventions used for algebra objects over it.
    pub fn opposite(&self) -> SkeletalUTC {
        let mut out = self.clone();
        for fm in out.f.values_mut() {
            fm.m = fm.m.map(|z| z.conj());
        }
        if let Some(rs) = &mut out.r {
            for m in rs.values_mut() {
                *m = m.map(|z| z.conj());
            }
        }
        out.conj = out.solve_conjugates();
        out
    }

    pub fn rebase(&self, g: &Gauge) -> SkeletalUTC {
        let mut out = self.clone();
        let gu = |a: Label, b: Label, z: Label| g.get(a, b, z, self.n(a, b, z) as usize);
        for (&[a, b, c3, d], fm) in out.f.iter_mut() {
            let nl = fm.left.len();
            let mut ul = Mat::zeros(nl, nl);
            for (i, &(e, al, be)) in fm.left.iter().enumerate() {
                for (j, &(e2, al2, be2)) in fm.left.iter().enumerate() {
                    if e != e2 {
                        continue;
                    }
                    ul[(i, j)] = gu(a, b, e)[(al as usize, al2 as usize)] * gu(e, c3, d)[(be as usize, be2 as usize)];
                }
            }
            let mut ur = Mat::zeros(nl, nl);
            for (i, &(f, ga, de)) in fm.right.iter().enumerate() {
                for (j, &(f2, ga2, de2)) in fm.right.iter().enumerate() {
                    if f != f2 {
                        continue;
                    }
                    ur[(i, j)] = gu(b, c3, f)[(ga as usize, ga2 as usize)] * gu(a, f, d)[(de as usize, de2 as usize)];
                }
            }
            fm.m = ul.transpose() * &fm.m * ur.map(|z| z.conj());
        }
        if let Some(rs) = &mut out.r {
            for (&[a, b, z], m) in rs.iter_mut() {
                *m = gu(b, a, z).adjoint() * &*m * gu(a, b, z);
            }
        }
        out.conj = out.solve_conjugates();
        out
    }

    // ---------------------------------------------------------------- trees

    pub fn word_basis(&self, w: &[Label]) -> Arc<WordBasis> {
        if let Some(b) = self.cache.words.lock().unwrap().get(w) {
            return b.clone();
        }
        let l = self.ring.len();
        let mut trees: Vec<Vec<Tree>> = vec![vec![]; l];
        if w.is_empty() {
            trees[self.unit()].push(Tree { mids: vec![], verts: vec![] });
        } else {
            let mut states = vec![(w[0], Tree { mids: vec![], verts: vec![] })];
            for (k, &x) in w.iter().enumerate().skip(1) {
                let mut next = Vec::new();
                for (z, t) in &states {
                    for (z2, m) in self.ring.fuse_idx(*z, x) {
                        for mu in 0..m {
                            let mut t2 = t.clone();
                            if k >= 2 {
                                t2.mids.push(*z);
                            }
                            t2.verts.push(mu);
                            next.push((z2, t2));
                        }
                    }
                }
                states = next;
            }
            for (z, t) in states {
                trees[z].push(t);
            }
        }
        let index = trees.iter().map(|ts| ts.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect()).collect();
        let b = Arc::new(WordBasis { trees, index });
        self.cache.words.lock().unwrap().insert(w.to_vec(), b.clone());
        b
    }

    pub fn hom_dim(&self, z: Label, w: &[Label]) -> usize {
        self.word_basis(w).dim(z)
    }

    pub fn hom_dim_named(&self, z: &str, w: &[&str]) -> Result<usize> {
        let z = self.label(z)?;
        let w = w.iter().map(|s| self.label(s)).collect::<Result<Vec<_>>>()?;
        Ok(self.hom_dim(z, &w))
    }

    fn extend(t: &Tree, len: usize, z: Label, v: u32) -> Tree {
        let mut t2 = t.clone();
        if len >= 2 {
            t2.mids.push(z);
        } else {
            t2.mids.clear();
        }
        t2.verts.push(v);
        t2
    }

    /// Expansion of `(t1 ⊗ t2) ∘ ν` in the left-associated trees of `w1 w2`.
    #[allow(clippy::too_many_arguments)]
    fn graft(
        &self,
        w1: &[Label],
        z1: Label,
        t1: &Tree,
        w2: &[Label],
        z2: Label,
        t2: &Tree,
        nu: u32,
        w: Label,
        out: &mut Vec<(Tree, C64)>,
        coef: C64,
    ) {
        if w2.is_empty() {
            out.push((t1.clone(), coef));
            return;
        }
        if w1.is_empty() {
            out.push((t2.clone(), coef));
            return;
        }
        let m = w2.len();
        if m == 1 {
            out.push((Self::extend(t1, w1.len(), z1, nu), coef));
            return;
        }
        let y = w2[m - 1];
        let z2p = if m >= 3 { *t2.mids.last().unwrap() } else { w2[0] };
        let t2p = Tree {
            mids: if m >= 3 { t2.mids[..t2.mids.len() - 1].to_vec() } else { vec![] },
            verts: t2.verts[..m - 2].to_vec(),
        };
        let vlast = *t2.verts.last().unwrap();
        let fm = &self.f[&[z1, z2p, y, w]];
        let j = fm.ridx[&(z2, vlast, nu)];
        let prefix = w1.len() + m - 1;
        for (i, &(e, al, be)) in fm.left.iter().enumerate() {
            let f = fm.m[(i, j)].conj();
            if f.norm() < 1e-15 {
                continue;
            }
            let mut sub = Vec::new();
            self.graft(w1, z1, t1, &w2[..m - 1], z2p, &t2p, al, e, &mut sub, coef * f);
            for (s, cs) in sub {
                out.push((Self::extend(&s, prefix, e, be), cs));
            }
        }
    }

    /// The unitary from the split basis of `(w1, w2)` to the left-associated
    /// trees of `w1 w2`, per channel.
    pub fn split(&self, w1: &[Label], w2: &[Label]) -> Arc<Split> {
        let key = (w1.to_vec(), w2.to_vec());
        if let Some(s) = self.cache.splits.lock().unwrap().get(&key) {
            return s.clone();
        }
        let l = self.ring.len();
        let b1 = self.word_basis(w1);
        let b2 = self.word_basis(w2);
        let mut joined = w1.to_vec();
        joined.extend_from_slice(w2);
        let b = self.word_basis(&joined);
        let mut blocks = vec![vec![]; l];
        let mut k = Vec::with_capacity(l);
        for w in 0..l {
            let mut offset = 0;
            for z1 in 0..l {
                let n1 = b1.dim(z1);
                if n1 == 0 {
                    continue;
                }
                for z2 in 0..l {
                    let n2 = b2.dim(z2);
                    if n2 == 0 {
                        continue;
                    }
                    for nu in 0..self.n(z1, z2, w) {
                        blocks[w].push(SplitBlock { z1, z2, nu, offset, n1, n2 });
                        offset += n1 * n2;
                    }
                }
            }
            let mut kw = Mat::zeros(b.dim(w), offset);
            for blk in &blocks[w] {
                for (i1, t1) in b1.trees[blk.z1].iter().enumerate() {
                    for (i2, t2) in b2.trees[blk.z2].iter().enumerate() {
                        let col = blk.offset + i1 * blk.n2 + i2;
                        let mut out = Vec::new();
                        self.graft(w1, blk.z1, t1, w2, blk.z2, t2, blk.nu, w, &mut out, ONE);
                        for (t, cf) in out {
                            kw[(b.index(w, &t), col)] += cf;
                        }
                    }
                }
            }
            k.push(kw);
        }
        let s = Arc::new(Split { blocks, k });
        self.cache.splits.lock().unwrap().insert(key, s.clone());
        s
    }

    // ---------------------------------------------------------- morphisms

    pub fn zero(&self, src: &[Label], dst: &[Label]) -> Morphism {
        let bs = self.word_basis(src);
        let bd = self.word_basis(dst);
        Morphism {
            src: src.to_vec(),
            dst: dst.to_vec(),
            blocks: (0..self.ring.len()).map(|z| Mat::zeros(bd.dim(z), bs.dim(z))).collect(),
        }
    }

    pub fn identity(&self, w: &[Label]) -> Morphism {
        let b = self.word_basis(w);
        Morphism {
            src: w.to_vec(),
            dst: w.to_vec(),
            blocks: (0..self.ring.len()).map(|z| Mat::identity(b.dim(z), b.dim(z))).collect(),
        }
    }

    pub fn compose(&self, g: &Morphism, f: &Morphism) -> Morphism {
        assert_eq!(g.src, f.dst, "composing morphisms with mismatched words");
        Morphism {
            src: f.src.clone(),
            dst: g.dst.clone(),
            blocks: g.blocks.iter().zip(&f.blocks).map(|(a, b)| a * b).collect(),
        }
    }

    /// Composes a chain given in application order.
    pub fn chain(&self, fs: &[&Morphism]) -> Morphism {
        let mut acc = fs[0].clone();
        for f in &fs[1..] {
            acc = self.compose(f, &acc);
        }
        acc
    }

    pub fn tensor(&self, f: &Morphism, g: &Morphism) -> Morphism {
        let s = self.split(&f.src, &g.src);
        let t = self.split(&f.dst, &g.dst);
        let mut src = f.src.clone();
        src.extend_from_slice(&g.src);
        let mut dst = f.dst.clone();
        dst.extend_from_slice(&g.dst);
        let mut blocks = Vec::with_capacity(self.ring.len());
        for w in 0..self.ring.len() {
            let ks = &s.k[w];
            let kt = &t.k[w];
            let mut d = Mat::zeros(kt.ncols(), ks.ncols());
            for bs in &s.blocks[w] {
                let bt = t.blocks[w].iter().find(|b| b.z1 == bs.z1 && b.z2 == bs.z2 && b.nu == bs.nu);
                let Some(bt) = bt else { continue };
                let kr = f.blocks[bs.z1].kronecker(&g.blocks[bs.z2]);
                d.view_mut((bt.offset, bs.offset), kr.shape()).copy_from(&kr);
            }
            blocks.push(kt * d * ks.adjoint());
        }
        Morphism { src, dst, blocks }
    }

    /// `id_a ⊗ f ⊗ id_b`.
    pub fn whisker(&self, a: &[Label], f: &Morphism, b: &[Label]) -> Morphism {
        let left = if a.is_empty() { f.clone() } else { self.tensor(&self.identity(a), f) };
        if b.is_empty() {
            left
        } else {
            self.tensor(&left, &self.identity(b))
        }
    }

    /// Basis vertex `v_μ ∈ V(z; a, b)` as a morphism `[z] -> [a, b]`.
    pub fn vertex(&self, z: Label, a: Label, b: Label, mu: u32) -> Morphism {
        let mut m = self.zero(&[z], &[a, b]);
        m.blocks[z][(mu as usize, 0)] = ONE;
        m
    }

    pub fn onb_trees(&self, z: Label, x: Label, y: Label) -> Result<Vec<Morphism>> {
        let n = self.n(x, y, z);
        if n == 0 {
            return Err(Error::EmptyHomSpace {
                z: self.ring.name(z).into(),
                x: self.ring.name(x).into(),
                y: self.ring.name(y).into(),
            });
        }
        Ok((0..n).map(|mu| self.vertex(z, x, y, mu)).collect())
    }

    /// Braiding `c_{a,b}: [a, b] -> [b, a]`.
    pub fn braid2(&self, a: Label, b: Label) -> Result<Morphism> {
        let mut m = self.zero(&[a, b], &[b, a]);
        for (z, _) in self.ring.fuse_idx(a, b) {
            m.blocks[z] = self.r_block(a, b, z)?.clone();
        }
        Ok(m)
    }

    /// Braiding of the letters at positions `p, p+1` of `w`.
    pub fn braid_at(&self, w: &[Label], p: usize) -> Result<Morphism> {
        let c2 = self.braid2(w[p], w[p + 1])?;
        Ok(self.whisker(&w[..p], &c2, &w[p + 2..]))
    }

    pub fn dual_word(&self, w: &[Label]) -> Vec<Label> {
        w.iter().rev().map(|&x| self.dual(x)).collect()
    }

    pub fn conjugate_solution(&self, x: Label) -> Result<ConjugateSolution> {
        self.conj[x].clone().map_err(Error::SolveFailed)
    }

    fn raw_cup(&self, x: Label, coef: C64) -> Morphism {
        let mut m = self.zero(&[], &[self.dual(x), x]);
        m.blocks[self.unit()][(0, 0)] = coef;
        m
    }

    fn raw_cupbar(&self, x: Label, coef: C64) -> Morphism {
        let mut m = self.zero(&[], &[x, self.dual(x)]);
        m.blocks[self.unit()][(0, 0)] = coef;
        m
    }

    fn solve_conjugates(&self) -> Vec<std::result::Result<ConjugateSolution, String>> {
        let l = self.ring.len();
        let mut out: Vec<std::result::Result<ConjugateSolution, String>> = vec![Err(String::new()); l];
        for x in 0..l {
            let xb = self.dual(x);
            if xb < x {
                continue;
            }
            let d = self.qdims[x];
            let zig1 = self.chain(&[
                &self.whisker(&[x], &self.raw_cup(x, ONE), &[]),
                &self.whisker(&[], &self.raw_cupbar(x, ONE).adjoint(), &[x]),
            ]);
            let s1 = zig1.blocks[x][(0, 0)];
            if s1.norm() < 1e-12 {
                let name = self.ring.name(x).to_string();
                out[x] = Err(name.clone());
                out[xb] = Err(name);
                continue;
            }
            let rr = r(d.sqrt());
            let rb = ONE / (rr * s1.conj());
            let sol = ConjugateSolution { r: rr, rbar: rb, zigzag: 0.0 };
            out[x] = Ok(sol);
            if xb != x {
                out[xb] = Ok(ConjugateSolution { r: rb, rbar: rr, zigzag: 0.0 });
            }
        }
        out
    }

    /// `R_x: [] -> [x̄, x]`.
    pub fn cup(&self, x: Label) -> Result<Morphism> {
        Ok(self.raw_cup(x, self.conjugate_solution(x)?.r))
    }

    /// `R̄_x: [] -> [x, x̄]`.
    pub fn cupbar(&self, x: Label) -> Result<Morphism> {
        Ok(self.raw_cupbar(x, self.conjugate_solution(x)?.rbar))
    }

    /// `R_w: [] -> w̄ w` built by nesting.
    pub fn cup_word(&self, w: &[Label]) -> Result<Morphism> {
        if w.is_empty() {
            return Ok(self.identity(&[]));
        }
        let rest = self.cup_word(&w[1..])?;
        let outer = self.dual_word(&w[1..]);
        let inner = self.whisker(&outer, &self.cup(w[0])?, &w[1..]);
        Ok(self.compose(&inner, &rest))
    }

    /// `R̄_w: [] -> w w̄` built by nesting.
    pub fn cupbar_word(&self, w: &[Label]) -> Result<Morphism> {
        if w.is_empty() {
            return Ok(self.identity(&[]));
        }
        let n = w.len();
        let rest = self.cupbar_word(&w[..n - 1])?;
        let tail = self.dual_word(&w[..n - 1]);
        let inner = self.whisker(&w[..n - 1], &self.cupbar(w[n - 1])?, &tail);
        Ok(self.compose(&inner, &rest))
    }

    /// The antilinear conjugate `f̄: w̄ -> w̄'` of `f: w -> w'`.
    pub fn conj_morphism(&self, f: &Morphism) -> Result<Morphism> {
        let wb = self.dual_word(&f.src);
        let wpb = self.dual_word(&f.dst);
        let a = self.whisker(&wb, &self.cupbar_word(&f.dst)?, &[]);
        let b = self.whisker(&wb, &f.adjoint(), &wpb);
        let cc = self.whisker(&[], &self.cup_word(&f.src)?.adjoint(), &wpb);
        Ok(self.chain(&[&a, &b, &cc]))
    }

    /// Conjugates of the basis trees of `w`: column `t` of the block at `Z`
    /// holds the coefficients of `t̄: [Z̄] -> w̄` in the trees of `w̄` at `Z̄`.
    pub fn conj_trees(&self, w: &[Label]) -> Result<Arc<Vec<Mat>>> {
        if let Some(m) = self.cache.conj_trees.lock().unwrap().get(w) {
            return Ok(m.clone());
        }
        let b = self.word_basis(w);
        let wb = self.dual_word(w);
        let bb = self.word_basis(&wb);
        let mut out = Vec::with_capacity(self.ring.len());
        for z in 0..self.ring.len() {
            let zb = self.dual(z);
            let mut m = Mat::zeros(bb.dim(zb), b.dim(z));
            for i in 0..b.dim(z) {
                let mut t = self.zero(&[z], w);
                t.blocks[z][(i, 0)] = ONE;
                let tb = self.conj_morphism(&t)?;
                m.set_column(i, &tb.blocks[zb].column(0));
            }
            out.push(m);
        }
        let out = Arc::new(out);
        self.cache.conj_trees.lock().unwrap().insert(w.to_vec(), out.clone());
        Ok(out)
    }

    /// Frobenius bending `u: [b] -> [a, c]` to `[c] -> [ā, b]`.
    pub fn bend(&self, u: &Morphism) -> Result<Morphism> {
        assert!(u.src.len() == 1 && u.dst.len() == 2, "bend expects [b] -> [a, c]");
        let (a, c3) = (u.dst[0], u.dst[1]);
        let first = self.whisker(&[], &self.cup(a)?, &[c3]);
        let second = self.whisker(&[self.dual(a)], &u.adjoint(), &[]);
        Ok(self.compose(&second, &first))
    }

    // ------------------------------------------------------------ recoupling

    fn grouped_keys(&self, w: &[Label], p: usize) -> Vec<Vec<Tree>> {
        let b = self.word_basis(w);
        let mut keys: Vec<Vec<Tree>> = vec![vec![]; self.ring.len()];
        for z in 0..self.ring.len() {
            let mut set = std::collections::BTreeSet::new();
            for t in &b.trees[z] {
                for (g, _) in self.recouple_tree(w, p, z, t) {
                    set.insert(g);
                }
            }
            keys[z] = set.into_iter().collect();
        }
        keys
    }

    /// Expansion of a left-associated tree in the basis grouped at `p`.
    /// Grouped trees reuse the `Tree` layout with `(e, α, β)` replaced by
    /// `(f, γ, δ)`.
    fn recouple_tree(&self, w: &[Label], p: usize, z: Label, t: &Tree) -> Vec<(Tree, C64)> {
        if p == 0 {
            return vec![(t.clone(), ONE)];
        }
        let u = if p >= 2 { t.mids[p - 2] } else { w[0] };
        let e = t.mids[p - 1];
        let g = if p + 2 < w.len() { t.mids[p] } else { z };
        let (al, be) = (t.verts[p - 1], t.verts[p]);
        let fm = &self.f[&[u, w[p], w[p + 1], g]];
        let i = fm.lidx[&(e, al, be)];
        let mut out = Vec::new();
        for (j, &(f, ga, de)) in fm.right.iter().enumerate() {
            let cf = fm.m[(i, j)];
            if cf.norm() < 1e-15 {
                continue;
            }
            let mut t2 = t.clone();
            t2.mids[p - 1] = f;
            t2.verts[p - 1] = ga;
            t2.verts[p] = de;
            out.push((t2, cf));
        }
        out
    }

    pub fn recouple_identity_basis(&self, w: &[Label], p: usize) -> Result<(Vec<Vec<Tree>>, Vec<Mat>)> {
        if w.len() < 2 || p > w.len() - 2 {
            return Err(Error::InapplicableMove(format!("position {p} on a word of length {}", w.len())));
        }
        let b = self.word_basis(w);
        let keys = self.grouped_keys(w, p);
        let mut us = Vec::new();
        for z in 0..self.ring.len() {
            let idx: HashMap<&Tree, usize> = keys[z].iter().enumerate().map(|(i, t)| (t, i)).collect();
            let mut u = Mat::zeros(keys[z].len(), b.dim(z));
            for (j, t) in b.trees[z].iter().enumerate() {
                for (g, cf) in self.recouple_tree(w, p, z, t) {
                    u[(idx[&g], j)] += cf;
                }
            }
            us.push(u);
        }
        Ok((keys, us))
    }

    pub fn recouple(&self, m: &Morphism, mv: Move) -> Result<Recoupled> {
        let Move::Forward(p) = mv else {
            return Err(Error::InapplicableMove("backward move on a left-associated target".into()));
        };
        let (keys, us) = self.recouple_identity_basis(&m.dst, p)?;
        Ok(Recoupled {
            src: m.src.clone(),
            dst: m.dst.clone(),
            position: p,
            keys,
            blocks: us.iter().zip(&m.blocks).map(|(u, b)| u * b).collect(),
        })
    }

    pub fn recouple_back(&self, m: &Recoupled, mv: Move) -> Result<Morphism> {
        match mv {
            Move::Backward(p) if p == m.position => {
                let (_, us) = self.recouple_identity_basis(&m.dst, p)?;
                Ok(Morphism {
                    src: m.src.clone(),
                    dst: m.dst.clone(),
                    blocks: us.iter().zip(&m.blocks).map(|(u, b)| u.adjoint() * b).collect(),
                })
            }
            _ => Err(Error::InapplicableMove(format!("{mv:?} on a basis grouped at {}", m.position))),
        }
    }

    // ---------------------------------------------------------- verification

    pub fn verify_unitarity(&self) -> f64 {
        self.f
            .values()
            .map(|fm| diff(&(&fm.m * fm.m.adjoint()), &Mat::identity(fm.m.nrows(), fm.m.nrows())))
            .fold(0.0, f64::max)
    }

    pub fn verify_pentagon(&self) -> f64 {
        let l = self.ring.len();
        let mut worst: f64 = 0.0;
        type Key5 = (Label, u32, Label, u32, u32);
        for a in 0..l {
            for b in 0..l {
                for c3 in 0..l {
                    for d in 0..l {
                        for e in 0..l {
                            // B1 basis: (f, α, g, β, γ)
                            for (f, nf) in self.ring.fuse_idx(a, b) {
                                for (g, ng) in self.ring.fuse_idx(f, c3) {
                                    let ne = self.n(g, d, e);
                                    for al in 0..nf {
                                        for be in 0..ng {
                                            for ga in 0..ne {
                                                let mut pa: HashMap<Key5, C64> = HashMap::new();
                                                let mut pb: HashMap<Key5, C64> = HashMap::new();
                                                // path A
                                                let f1 = &self.f[&[f, c3, d, e]];
                                                let i1 = f1.lidx[&(g, be, ga)];
                                                for (j1, &(k, x, y)) in f1.right.iter().enumerate() {
                                                    let c1 = f1.m[(i1, j1)];
                                                    if c1 == ZERO {
                                                        continue;
                                                    }
                                                    let f2 = &self.f[&[a, b, k, e]];
                                                    let i2 = f2.lidx[&(f, al, y)];
                                                    for (j2, &(ll, yy, zz)) in f2.right.iter().enumerate() {
                                                        *pa.entry((k, x, ll, yy, zz)).or_insert(ZERO) +=
                                                            c1 * f2.m[(i2, j2)];
                                                    }
                                                }
                                                // path B
                                                let g1 = &self.f[&[a, b, c3, g]];
                                                let i1 = g1.lidx[&(f, al, be)];
                                                for (j1, &(h, hx, hy)) in g1.right.iter().enumerate() {
                                                    let c1 = g1.m[(i1, j1)];
                                                    if c1 == ZERO {
                                                        continue;
                                                    }
                                                    let g2 = &self.f[&[a, h, d, e]];
                                                    let i2 = g2.lidx[&(g, hy, ga)];
                                                    for (j2, &(ll, ly, lz)) in g2.right.iter().enumerate() {
                                                        let c2 = g2.m[(i2, j2)];
                                                        if c2 == ZERO {
                                                            continue;
                                                        }
                                                        let g3 = &self.f[&[b, c3, d, ll]];
                                                        let i3 = g3.lidx[&(h, hx, ly)];
                                                        for (j3, &(k, kx, ky)) in g3.right.iter().enumerate() {
                                                            *pb.entry((k, kx, ll, ky, lz)).or_insert(ZERO) +=
                                                                c1 * c2 * g3.m[(i3, j3)];
                                                        }
                                                    }
                                                }
                                                for (key, v) in &pa {
                                                    let w = pb.get(key).copied().unwrap_or(ZERO);
                                                    worst = worst.max((v - w).norm());
                                                }
                                                for (key, w) in &pb {
                                                    if !pa.contains_key(key) {
                                                        worst = worst.max(w.norm());
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
            }
        }
        worst
    }

    pub fn verify_hexagon(&self) -> Result<f64> {
        if self.r.is_none() {
            return Err(Error::MissingBraiding);
        }
        let l = self.ring.len();
        let mut worst: f64 = 0.0;
        for a in 0..l {
            for b in 0..l {
                for c3 in 0..l {
                    let w = [a, b, c3];
                    // c_{a, bc}
                    let eng = self.compose(&self.braid_at(&[b, a, c3], 1)?, &self.braid_at(&w, 0)?);
                    let tgt = self.word_basis(&[b, c3, a]);
                    let src = self.word_basis(&w);
                    for d in 0..l {
                        let mut direct = Mat::zeros(tgt.dim(d), src.dim(d));
                        for (j, t) in src.trees[d].iter().enumerate() {
                            let Some(fm) = self.f.get(&[a, b, c3, d]) else { continue };
                            let i = fm.lidx[&(t.mids[0], t.verts[0], t.verts[1])];
                            for (k, &(f, ga, de)) in fm.right.iter().enumerate() {
                                let rm = self.r_block(a, f, d)?;
                                for dp in 0..rm.nrows() {
                                    let tt = Tree { mids: vec![f], verts: vec![ga, dp as u32] };
                                    direct[(tgt.index(d, &tt), j)] += rm[(dp, de as usize)] * fm.m[(i, k)];
                                }
                            }
                        }
                        worst = worst.max(diff(&direct, &eng.blocks[d]));
                    }
                    // c_{ab, c}
                    let eng = self.compose(&self.braid_at(&[a, c3, b], 0)?, &self.braid_at(&w, 1)?);
                    let tgt = self.word_basis(&[c3, a, b]);
                    for d in 0..l {
                        let mut direct = Mat::zeros(tgt.dim(d), src.dim(d));
                        let Some(fm) = self.f.get(&[c3, a, b, d]) else { continue };
                        for (j, t) in src.trees[d].iter().enumerate() {
                            let (e, al, be) = (t.mids[0], t.verts[0], t.verts[1]);
                            let rm = self.r_block(e, c3, d)?;
                            for bp in 0..rm.nrows() {
                                let rc = rm[(bp, be as usize)];
                                let col = fm.ridx[&(e, al, bp as u32)];
                                for (i, &(g, x, y)) in fm.left.iter().enumerate() {
                                    let tt = Tree { mids: vec![g], verts: vec![x, y] };
                                    direct[(tgt.index(d, &tt), j)] += rc * fm.m[(i, col)].conj();
                                }
                            }
                        }
                        worst = worst.max(diff(&direct, &eng.blocks[d]));
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Max zig-zag residual and max standardness defect over all labels.
    pub fn verify_zigzag(&self) -> Result<(f64, f64)> {
        let mut zz: f64 = 0.0;
        let mut st: f64 = 0.0;
        for x in 0..self.ring.len() {
            let xb = self.dual(x);
            let a = self.chain(&[
                &self.whisker(&[x], &self.cup(x)?, &[]),
                &self.whisker(&[], &self.cupbar(x)?.adjoint(), &[x]),
            ]);
            let b = self.chain(&[
                &self.whisker(&[xb], &self.cupbar(x)?, &[]),
                &self.whisker(&[], &self.cup(x)?.adjoint(), &[xb]),
            ]);
            zz = zz.max(a.max_diff(&self.identity(&[x]))).max(b.max_diff(&self.identity(&[xb])));
            let s = self.conjugate_solution(x)?;
            let d = self.qdims[x];
            st = st.max((s.r.norm_sqr() - d).abs()).max((s.rbar.norm_sqr() - d).abs());
        }
        Ok((zz, st))
    }

    pub fn residuals(&self) -> Result<Residuals> {
        let (zigzag, standardness) = self.verify_zigzag()?;
        Ok(Residuals {
            pentagon: self.verify_pentagon(),
            hexagon: if self.is_braided() { Some(self.verify_hexagon()?) } else { None },
            zigzag,
            unitarity: self.verify_unitarity(),
            standardness,
        })
    }
}

fn key4(ring: &FusionRing, a: Label, b: Label, c3: Label, d: Label) -> String {
    format!("{},{},{};{}", ring.name(a), ring.name(b), ring.name(c3), ring.name(d))
}

pub fn max_block(m: &Morphism) -> f64 {
    m.blocks.iter().map(max_abs).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bundled_residuals() {
        for cat in fixtures::all_categories() {
            let res = cat.residuals().unwrap();
            eprintln!("{:?} {:?}", cat.ring().labels(), res);
            assert!(res.pentagon < STRUCTURAL_TOL, "{res:?}");
            assert!(res.hexagon.unwrap() < STRUCTURAL_TOL, "{res:?}");
            assert!(res.zigzag < STRUCTURAL_TOL, "{res:?}");
            assert!(res.unitarity < STRUCTURAL_TOL, "{res:?}");
            assert!(res.standardness < STRUCTURAL_TOL, "{res:?}");
        }
    }

    #[test]
    fn sign_flip_breaks_pentagon() {
        let mut cat = fixtures::fibonacci();
        let t = cat.label("tau").unwrap();
        cat.fmove_mut(t, t, t, t).unwrap().m[(1, 1)] *= r(-1.0);
        assert!(cat.verify_pentagon() > 0.1);
    }

    #[test]
    fn conjugated_braiding_needs_a_real_gauge() {
        // For real F the mirror braiding is the conjugate one, so the hexagons
        // survive; in a complex gauge they do not.
        let fib = fixtures::fibonacci().with_conjugated_r();
        assert!(fib.verify_hexagon().unwrap() < STRUCTURAL_TOL);
        let ising = fixtures::ising();
        let (p, s) = (ising.label("psi").unwrap(), ising.label("sigma").unwrap());
        let mut g = Gauge::default();
        g.u.insert([s, p, s], Mat::from_element(1, 1, c(0.6, 0.8)));
        let gauged = ising.rebase(&g);
        assert!(gauged.verify_hexagon().unwrap() < STRUCTURAL_TOL);
        assert!(gauged.with_conjugated_r().verify_hexagon().unwrap() > 0.1);
    }

    #[test]
    fn hom_dims() {
        let fib = fixtures::fibonacci();
        assert_eq!(fib.hom_dim_named("tau", &["tau", "tau", "tau"]).unwrap(), 2);
        assert_eq!(fib.hom_dim_named("tau", &["tau"]).unwrap(), 1);
        assert_eq!(fib.hom_dim_named("1", &["tau", "tau"]).unwrap(), 1);
        assert_eq!(fib.hom_dim_named("1", &[]).unwrap(), 1);
        assert!(matches!(fib.hom_dim_named("x", &[]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn onb_trees_multiplicity_two() {
        let a4 = fixtures::rep_a4();
        let t = a4.label("3").unwrap();
        let vs = a4.onb_trees(t, t, t).unwrap();
        assert_eq!(vs.len(), 2);
        for (i, v) in vs.iter().enumerate() {
            for (j, w) in vs.iter().enumerate() {
                let g = a4.compose(&v.adjoint(), w).scalar(t);
                assert!((g - r(if i == j { 1.0 } else { 0.0 })).norm() < 1e-12);
            }
        }
        let one = a4.label("1a").unwrap();
        assert!(matches!(a4.onb_trees(t, one, one), Err(Error::EmptyHomSpace { .. })));
    }

    #[test]
    fn recoupling_moves() {
        let fib = fixtures::fibonacci();
        let t = fib.label("tau").unwrap();
        let id2 = fib.identity(&[t, t]);
        let rc = fib.recouple(&id2, Move::Forward(0)).unwrap();
        assert!(rc.blocks.iter().zip(&id2.blocks).all(|(a, b)| diff(a, b) == 0.0));
        let id3 = fib.identity(&[t, t, t]);
        let rc = fib.recouple(&id3, Move::Forward(1)).unwrap();
        let f = &fib.fmove(t, t, t, t).unwrap().m;
        assert!(diff(&rc.blocks[t], &f.transpose()) < 1e-12);
        let back = fib.recouple_back(&rc, Move::Backward(1)).unwrap();
        assert!(back.max_diff(&id3) < 1e-12);
        assert!(matches!(fib.recouple(&id3, Move::Forward(2)), Err(Error::InapplicableMove(_))));
        assert!(matches!(fib.recouple_back(&rc, Move::Backward(0)), Err(Error::InapplicableMove(_))));
    }

    #[test]
    fn bending_round_trip() {
        for cat in [fixtures::fibonacci(), fixtures::ising(), fixtures::rep_a4(), fixtures::cyclic(3)] {
            let l = cat.ring().len();
            for x0 in 0..l {
                for x1 in 0..l {
                    for (x2, m) in cat.ring().fuse_idx(x0, x1) {
                        let vs: Vec<Morphism> = (0..m).map(|mu| cat.vertex(x2, x0, x1, mu)).collect();
                        let bent: Vec<Morphism> = vs.iter().map(|v| cat.bend(v).unwrap()).collect();
                        let ratio = cat.qdim(x2) / cat.qdim(x1);
                        for (i, u) in bent.iter().enumerate() {
                            for (j, w) in bent.iter().enumerate() {
                                let g = cat.compose(&u.adjoint(), w).scalar(x1);
                                let expect = if i == j { ratio } else { 0.0 };
                                assert!((g - r(expect)).norm() < 1e-10);
                            }
                            assert!(cat.bend(u).unwrap().max_diff(&vs[i]) < 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn resolution_of_identity() {
        let cat = fixtures::rep_a4();
        let l = cat.ring().len();
        for x in 0..l {
            for y in 0..l {
                let mut acc = cat.zero(&[x, y], &[x, y]);
                for (z, m) in cat.ring().fuse_idx(x, y) {
                    for v in cat.onb_trees(z, x, y).unwrap() {
                        acc = acc.add(&cat.compose(&v, &v.adjoint()));
                    }
                    let _ = m;
                }
                assert!(acc.max_diff(&cat.identity(&[x, y])) < 1e-12);
            }
        }
    }

    #[test]
    fn rebased_category_stays_coherent() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for cat in [fixtures::fibonacci(), fixtures::ising(), fixtures::rep_a4()] {
            let g = Gauge::random(cat.ring(), &mut rng);
            let res = cat.rebase(&g).residuals().unwrap();
            assert!(res.pentagon < 1e-10 && res.hexagon.unwrap() < 1e-10 && res.zigzag < 1e-10, "{res:?}");
        }
    }

    #[test]
    fn missing_braiding_reported() {
        let fib = fixtures::fibonacci();
        let plain = SkeletalUTC::from_json(&{
            let mut v = fib.to_json();
            v.as_object_mut().unwrap().remove("R");
            v
        })
        .unwrap();
        assert!(matches!(plain.verify_hexagon(), Err(Error::MissingBraiding)));
    }

    #[test]
    fn json_round_trip() {
        for cat in fixtures::all_categories() {
            let back = SkeletalUTC::from_json(&cat.to_json()).unwrap();
            for (k, fm) in &cat.f {
                assert!(diff(&fm.m, &back.f[k].m) < 1e-15);
            }
        }
    }

    #[test]
    fn conjugate_solutions() {
        let fib = fixtures::fibonacci();
        let t = fib.label("tau").unwrap();
        let s = fib.conjugate_solution(t).unwrap();
        assert!((s.r.norm_sqr() - crate::fixtures::golden()).abs() < 1e-9);
        let one = fib.conjugate_solution(fib.unit()).unwrap();
        assert!((one.r - ONE).norm() < 1e-15 && (one.rbar - ONE).norm() < 1e-15);
        let z5 = fixtures::cyclic(5);
        for x in 0..5 {
            let s = z5.conjugate_solution(x).unwrap();
            assert!((s.r.norm() - 1.0).abs() < 1e-12);
        }
    }
}
