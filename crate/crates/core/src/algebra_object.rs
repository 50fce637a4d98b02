//! C*-algebra objects in `Vec(C)` stored at finite support.
//!
//! An element of `D(w)` for a word `w` is kept through its components
//! `D(t)ξ ∈ D(Z)` on the left-associated trees `t: Z -> w`; `comps[Z]` is an
//! `n_Z × |LT(Z; w)|` matrix. Morphisms act contravariantly.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::cstar::{FdAlgebra, Gns};
use crate::error::{AxiomViolation, Error, Result};
use crate::fusion_ring::{Label, SupportSet};
use crate::io::{as_arr, as_obj, as_str, as_usize, child, cmatrix, cvec, matrix_json, split_key, vec_json};
use crate::linalg::{diff, herm_eig, kron, max_abs, r, random_c64, Mat, Vector, ONE};
use crate::skeletal_cat::{Gauge, Morphism, SkeletalUTC};

pub const ASSOC_TOL: f64 = 1e-9;
pub const INVOLUTION_TOL: f64 = 1e-10;
pub const PP_SLACK: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct AlgebraObject {
    cat: Arc<SkeletalUTC>,
    support: SupportSet,
    fibers: Vec<usize>,
    /// `μ^v` as an `n_Z × (n_X n_Y)` matrix, column `i * n_Y + j`.
    mult: HashMap<(Label, Label, Label, u32), Mat>,
    /// `j_X(ξ) = J_X conj(ξ)`, `J_X` of shape `n_X̄ × n_X`.
    star: Vec<Mat>,
    unit: Vector,
    pub trivial_center: bool,
}

#[derive(Clone, Debug)]
pub struct WordElement {
    pub word: Vec<Label>,
    pub comps: Vec<Mat>,
}

#[derive(Clone, Debug)]
pub struct FiberElement {
    pub label: Label,
    pub coeffs: Vector,
}

/// `D(X̄ ⊠ X)` as a finite-dimensional C*-algebra, with its expectation
/// onto `D(1)` and the GNS frame of `τ_1 ∘ E_X`.
#[derive(Clone, Debug)]
pub struct SquareAlgebra {
    pub x: Label,
    pub word: Vec<Label>,
    pub alg: FdAlgebra,
    /// `E_X` as an `n_1 × dim` matrix.
    pub expect: Mat,
    pub gns: Gns,
}

#[derive(Clone, Debug, Serialize)]
pub struct PpReport {
    pub label: String,
    pub samples: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub bound: f64,
    pub worst_slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AobjReport {
    pub associativity: f64,
    pub unitality: f64,
    pub star_involution: f64,
    pub star_unit: f64,
    pub star_monoidality: f64,
    pub positivity_min_eig: f64,
    pub cstar_min_eig: f64,
}

impl AobjReport {
    pub fn violations(&self) -> Vec<AxiomViolation> {
        let mut v = Vec::new();
        let mut push = |axiom: &str, val: f64, ok: bool| {
            if !ok {
                v.push(AxiomViolation { axiom: axiom.into(), witness: vec![], detail: format!("{val:e}") });
            }
        };
        push("associativity", self.associativity, self.associativity < ASSOC_TOL);
        push("unitality", self.unitality, self.unitality < ASSOC_TOL);
        push("star_involution", self.star_involution, self.star_involution < INVOLUTION_TOL);
        push("star_unit", self.star_unit, self.star_unit < INVOLUTION_TOL);
        push("star_monoidality", self.star_monoidality, self.star_monoidality < ASSOC_TOL);
        push("positivity", self.positivity_min_eig, self.positivity_min_eig > -ASSOC_TOL);
        push("cstar_condition", self.cstar_min_eig, self.cstar_min_eig > 0.0);
        v
    }
}

impl AlgebraObject {
    pub fn new(
        cat: Arc<SkeletalUTC>,
        support: SupportSet,
        fibers: Vec<usize>,
        mult: HashMap<(Label, Label, Label, u32), Mat>,
        star: Vec<Mat>,
        unit: Vector,
    ) -> Result<AlgebraObject> {
        let l = cat.ring().len();
        let name = |x: Label| cat.ring().name(x).to_string();
        if fibers.len() != l || star.len() != l {
            return Err(Error::schema("", "fibers and star must cover every label"));
        }
        if !support.contains(cat.unit()) {
            return Err(Error::schema("/support", "support must contain the unit"));
        }
        for x in 0..l {
            if !support.contains(x) && fibers[x] != 0 {
                return Err(Error::SupportOverflow(name(x)));
            }
            if support.contains(x) && !support.contains(cat.dual(x)) {
                return Err(Error::schema("/support", format!("support is not closed under duals at `{}`", name(x))));
            }
            if star[x].shape() != (fibers[cat.dual(x)], fibers[x]) {
                return Err(Error::schema(child("/star", &name(x)), "star matrix has the wrong shape"));
            }
        }
        for (&(x, y, z, v), m) in &mult {
            let key = format!("{},{};{};{}", name(x), name(y), name(z), v);
            if v >= cat.n(x, y, z) {
                return Err(Error::schema(child("/mult", &key), "no such vertex"));
            }
            if !support.contains(z) && max_abs(m) > 0.0 {
                return Err(Error::SupportOverflow(name(z)));
            }
            if m.shape() != (fibers[z], fibers[x] * fibers[y]) {
                return Err(Error::schema(child("/mult", &key), "coefficient array has the wrong shape"));
            }
        }
        if unit.len() != fibers[cat.unit()] {
            return Err(Error::schema("/unit", "unit has the wrong length"));
        }
        Ok(AlgebraObject { cat, support, fibers, mult, star, unit, trivial_center: false })
    }

    pub fn from_json(cat: Arc<SkeletalUTC>, v: &Value) -> Result<AlgebraObject> {
        let ring = cat.ring().clone();
        let top = as_obj(v, "")?;
        let look = |s: &str, p: &str| ring.label(s).map_err(|_| Error::schema(p, format!("unknown label `{s}`")));
        let sup = as_arr(crate::io::field(top, "support", "")?, "/support")?;
        let mut labels = Vec::new();
        for (i, s) in sup.iter().enumerate() {
            let p = format!("/support/{i}");
            labels.push(look(as_str(s, &p)?, &p)?);
        }
        labels.sort();
        labels.dedup();
        let support = SupportSet { labels, generators: vec![], depth: 0 };
        let l = ring.len();
        let mut fibers = vec![0; l];
        for (k, n) in as_obj(crate::io::field(top, "fibers", "")?, "/fibers")? {
            let p = child("/fibers", k);
            fibers[look(k, &p)?] = as_usize(n, &p, 1 << 12)?;
        }
        let mut star: Vec<Mat> = (0..l).map(|x| Mat::zeros(fibers[ring.dual(x)], fibers[x])).collect();
        if let Some(s) = top.get("star") {
            for (k, m) in as_obj(s, "/star")? {
                let p = child("/star", k);
                let x = look(k, &p)?;
                let mat = if fibers[x] == 0 && fibers[ring.dual(x)] == 0 { Mat::zeros(0, 0) } else { cmatrix(m, &p)? };
                star[x] = mat;
            }
        }
        let mut mult = HashMap::new();
        if let Some(mv) = top.get("mult") {
            for (k, arr) in as_obj(mv, "/mult")? {
                let p = child("/mult", k);
                let parts = split_key(k, &[2, 1, 1], &p)?;
                let x = look(&parts[0][0], &p)?;
                let y = look(&parts[0][1], &p)?;
                let z = look(&parts[1][0], &p)?;
                let vtx: u32 = parts[2][0].parse().map_err(|_| Error::schema(&p, "vertex index must be an integer"))?;
                let (nx, ny, nz) = (fibers[x], fibers[y], fibers[z]);
                let outer = as_arr(arr, &p)?;
                if outer.len() != nx {
                    return Err(Error::schema(&p, format!("expected {nx} rows")));
                }
                let mut m = Mat::zeros(nz, nx * ny);
                for (i, row) in outer.iter().enumerate() {
                    let pi = format!("{p}/{i}");
                    let inner = as_arr(row, &pi)?;
                    if inner.len() != ny {
                        return Err(Error::schema(&pi, format!("expected {ny} entries")));
                    }
                    for (j, cell) in inner.iter().enumerate() {
                        let pj = format!("{pi}/{j}");
                        let vals = cvec(cell, &pj)?;
                        if vals.len() != nz {
                            return Err(Error::schema(&pj, format!("expected {nz} coefficients")));
                        }
                        for (kk, z3) in vals.into_iter().enumerate() {
                            m[(kk, i * ny + j)] = z3;
                        }
                    }
                }
                if mult.insert((x, y, z, vtx), m).is_some() {
                    return Err(Error::schema(&p, "duplicate key"));
                }
            }
        }
        let unit = match top.get("unit") {
            Some(u) => Vector::from_vec(cvec(u, "/unit")?),
            None => return Err(Error::schema("/unit", "missing field")),
        };
        let mut out = AlgebraObject::new(cat, support, fibers, mult, star, unit)?;
        if let Some(t) = top.get("trivial_center") {
            out.trivial_center = t.as_bool().ok_or_else(|| Error::schema("/trivial_center", "expected a boolean"))?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let ring = self.cat.ring();
        let mut fibers = Map::new();
        let mut star = Map::new();
        for &x in &self.support.labels {
            fibers.insert(ring.name(x).into(), json!(self.fibers[x]));
            star.insert(ring.name(x).into(), matrix_json(&self.star[x]));
        }
        let mut keys: Vec<_> = self.mult.keys().copied().collect();
        keys.sort();
        let mut mult = Map::new();
        for k @ (x, y, z, v) in keys {
            let m = &self.mult[&k];
            let ny = self.fibers[y];
            let arr: Vec<Value> = (0..self.fibers[x])
                .map(|i| Value::Array((0..ny).map(|j| vec_json(m.column(i * ny + j).as_slice())).collect()))
                .collect();
            mult.insert(format!("{},{};{};{}", ring.name(x), ring.name(y), ring.name(z), v), Value::Array(arr));
        }
        let mut out = json!({
            "support": self.support.names(ring),
            "fibers": fibers,
            "mult": mult,
            "star": star,
            "unit": vec_json(self.unit.as_slice()),
        });
        if self.trivial_center {
            out["trivial_center"] = json!(true);
        }
        out
    }

    pub fn cat(&self) -> &Arc<SkeletalUTC> {
        &self.cat
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn fiber_dim(&self, x: Label) -> usize {
        self.fibers[x]
    }

    pub fn fibers(&self) -> &[usize] {
        &self.fibers
    }

    pub fn mu(&self, x: Label, y: Label, z: Label, v: u32) -> Option<&Mat> {
        self.mult.get(&(x, y, z, v))
    }

    pub fn star_matrix(&self, x: Label) -> &Mat {
        &self.star[x]
    }

    pub fn unit(&self) -> &Vector {
        &self.unit
    }

    /// Labels with a nonzero fiber.
    pub fn live_labels(&self) -> Vec<Label> {
        self.support.labels.iter().copied().filter(|&x| self.fibers[x] > 0).collect()
    }

    /// The same data read over the conjugate category `cat_op`, which must
    /// share the fusion ring: every structure constant is conjugated.
    pub fn opposite(&self, cat_op: Arc<SkeletalUTC>) -> AlgebraObject {
        AlgebraObject {
            cat: cat_op,
            support: self.support.clone(),
            fibers: self.fibers.clone(),
            mult: self.mult.iter().map(|(k, m)| (*k, m.map(|z| z.conj()))).collect(),
            star: self.star.iter().map(|m| m.map(|z| z.conj())).collect(),
            unit: self.unit.map(|z| z.conj()),
            trivial_center: self.trivial_center,
        }
    }

    /// Transport along a vertex gauge; `cat` must be the rebased category.
    pub fn rebase(&self, g: &Gauge, cat: Arc<SkeletalUTC>) -> AlgebraObject {
        let mut mult: HashMap<(Label, Label, Label, u32), Mat> = HashMap::new();
        for (&(x, y, z, v), m) in &self.mult {
            let n = self.cat.n(x, y, z) as usize;
            let u = g.get(x, y, z, n);
            for mu in 0..n {
                let coef = u[(v as usize, mu)];
                if coef.norm() == 0.0 {
                    continue;
                }
                let e = mult.entry((x, y, z, mu as u32)).or_insert_with(|| Mat::zeros(m.nrows(), m.ncols()));
                *e += m * coef;
            }
        }
        AlgebraObject { cat, mult, ..self.clone() }
    }

    // ------------------------------------------------------------ elements

    pub fn zero_word(&self, w: &[Label]) -> WordElement {
        let b = self.cat.word_basis(w);
        WordElement {
            word: w.to_vec(),
            comps: (0..self.fibers.len()).map(|z| Mat::zeros(self.fibers[z], b.dim(z))).collect(),
        }
    }

    pub fn fiber(&self, x: Label, coeffs: &Vector) -> WordElement {
        let mut e = self.zero_word(&[x]);
        e.comps[x].set_column(0, coeffs);
        e
    }

    pub fn unit_element(&self) -> WordElement {
        self.fiber(self.cat.unit(), &self.unit)
    }

    pub fn fiber_vector(&self, e: &WordElement) -> Vector {
        assert_eq!(e.word.len(), 1, "fiber_vector expects a one-letter word");
        e.comps[e.word[0]].column(0).into_owned()
    }

    pub fn random_word<R: Rng>(&self, w: &[Label], rng: &mut R) -> WordElement {
        let mut e = self.zero_word(w);
        for m in e.comps.iter_mut() {
            for z in m.iter_mut() {
                *z = random_c64(rng);
            }
        }
        e
    }

    pub fn word_dim(&self, w: &[Label]) -> usize {
        let b = self.cat.word_basis(w);
        (0..self.fibers.len()).map(|z| self.fibers[z] * b.dim(z)).sum()
    }

    pub fn flatten(&self, e: &WordElement) -> Vector {
        Vector::from_iterator(self.word_dim(&e.word), e.comps.iter().flat_map(|m| m.as_slice().iter().copied()))
    }

    pub fn unflatten(&self, w: &[Label], v: &Vector) -> WordElement {
        let mut e = self.zero_word(w);
        let mut at = 0;
        for m in e.comps.iter_mut() {
            let n = m.len();
            m.as_mut_slice().copy_from_slice(&v.as_slice()[at..at + n]);
            at += n;
        }
        e
    }

    /// `D(f)`: pulls an element of `D(f.dst)` back to `D(f.src)`.
    pub fn pull(&self, f: &Morphism, e: &WordElement) -> WordElement {
        assert_eq!(f.dst, e.word, "pull: word mismatch");
        WordElement { word: f.src.clone(), comps: e.comps.iter().zip(&f.blocks).map(|(c, b)| c * b).collect() }
    }

    /// The lax multiplication `D²_{w1,w2}(a ⊙ b) ∈ D(w1 w2)`.
    pub fn mul(&self, a: &WordElement, b: &WordElement) -> WordElement {
        let sp = self.cat.split(&a.word, &b.word);
        let mut word = a.word.clone();
        word.extend_from_slice(&b.word);
        let mut out = self.zero_word(&word);
        for (w, blocks) in sp.blocks.iter().enumerate() {
            let nw = self.fibers[w];
            let k = &sp.k[w];
            if nw == 0 || k.ncols() == 0 {
                continue;
            }
            let mut cols = Mat::zeros(nw, k.ncols());
            for blk in blocks {
                let Some(mu) = self.mult.get(&(blk.z1, blk.z2, w, blk.nu)) else { continue };
                if mu.ncols() == 0 {
                    continue;
                }
                let prod = mu * kron(&a.comps[blk.z1], &b.comps[blk.z2]);
                cols.view_mut((0, blk.offset), prod.shape()).copy_from(&prod);
            }
            out.comps[w] = cols * k.adjoint();
        }
        out
    }

    /// The antilinear star `j: D(w) -> D(w̄)`.
    pub fn star(&self, a: &WordElement) -> Result<WordElement> {
        let ct = self.cat.conj_trees(&a.word)?;
        let wb = self.cat.dual_word(&a.word);
        let mut out = self.zero_word(&wb);
        for z in 0..self.fibers.len() {
            if a.comps[z].ncols() == 0 || self.fibers[z] == 0 {
                continue;
            }
            let zb = self.cat.dual(z);
            out.comps[zb] = &self.star[z] * a.comps[z].map(|q| q.conj()) * ct[z].adjoint();
        }
        Ok(out)
    }

    pub fn word_diff(a: &WordElement, b: &WordElement) -> f64 {
        assert_eq!(a.word, b.word, "comparing elements of different words");
        a.comps.iter().zip(&b.comps).map(|(x, y)| if x.is_empty() { 0.0 } else { diff(x, y) }).fold(0.0, f64::max)
    }

    // ---------------------------------------------------- ground and squares

    /// `D(1)` with its own product.
    pub fn ground(&self) -> Result<FdAlgebra> {
        let u = self.cat.unit();
        let n = self.fibers[u];
        let mu = self.mult.get(&(u, u, u, 0)).cloned().unwrap_or_else(|| Mat::zeros(n, n * n));
        let alg = FdAlgebra::from_product(n, self.star[u].clone(), |i, j| mu.column(i * n + j).into_owned())?;
        Ok(alg)
    }

    pub fn ground_gns(&self) -> Result<(FdAlgebra, Gns)> {
        let g = self.ground()?;
        let gns = g.gns(&g.regular_trace())?;
        Ok((g, gns))
    }

    fn check_channels(&self, w: &[Label]) -> Result<()> {
        let b = self.cat.word_basis(w);
        let missing: Vec<String> = (0..self.fibers.len())
            .filter(|&z| b.dim(z) > 0 && !self.support.contains(z))
            .map(|z| self.cat.ring().name(z).to_string())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::SupportTooSmall(missing))
        }
    }

    /// `E_X(T) = d_X⁻¹ D(R_X) T`.
    pub fn cond_expect(&self, x: Label, t: &WordElement) -> Result<Vector> {
        let xb = self.cat.dual(x);
        if t.word != [xb, x] {
            return Err(Error::LabelMismatch(format!("{:?}", t.word), format!("{:?}", [xb, x])));
        }
        self.check_channels(&t.word)?;
        let e = self.pull(&self.cat.cup(x)?, t);
        Ok(e.comps[self.cat.unit()].column(0) * r(1.0 / self.cat.qdim(x)))
    }

    /// `⟨ξ, η⟩ = E_X(D²(j(ξ) ⊙ η))`.
    pub fn fiber_inner_product(&self, xi: &FiberElement, eta: &FiberElement) -> Result<Vector> {
        if xi.label != eta.label {
            let n = |x| self.cat.ring().name(x).to_string();
            return Err(Error::LabelMismatch(n(xi.label), n(eta.label)));
        }
        let x = xi.label;
        let a = self.star(&self.fiber(x, &xi.coeffs))?;
        let t = self.mul(&a, &self.fiber(x, &eta.coeffs));
        self.cond_expect(x, &t)
    }

    /// `D(1)`-valued inner product on a word: `d_w⁻¹ D(R_w) D²(j(a) ⊙ b)`.
    pub fn word_inner_product(&self, a: &WordElement, b: &WordElement) -> Result<Vector> {
        let t = self.mul(&self.star(a)?, b);
        let d: f64 = a.word.iter().map(|&x| self.cat.qdim(x)).product();
        let e = self.pull(&self.cat.cup_word(&a.word)?, &t);
        Ok(e.comps[self.cat.unit()].column(0) * r(1.0 / d))
    }

    /// Left action of `D(1)` on a word through the lax multiplication.
    pub fn left_ground_action(&self, g: &Vector, a: &WordElement) -> WordElement {
        let prod = self.mul(&self.fiber(self.cat.unit(), g), a);
        WordElement { word: a.word.clone(), comps: prod.comps }
    }

    pub fn square_algebra(&self, x: Label) -> Result<SquareAlgebra> {
        let xb = self.cat.dual(x);
        let word = vec![xb, x];
        self.check_channels(&word)?;
        let n = self.word_dim(&word);
        let basis: Vec<WordElement> = (0..n)
            .map(|i| {
                let mut v = Vector::zeros(n);
                v[i] = ONE;
                self.unflatten(&word, &v)
            })
            .collect();
        let contract = self.cat.whisker(&[xb], &self.cat.cupbar(x)?, &[x]);
        let mut star = Mat::zeros(n, n);
        for (i, e) in basis.iter().enumerate() {
            star.set_column(i, &self.flatten(&self.star(e)?));
        }
        let prod = |i: usize, j: usize| self.flatten(&self.pull(&contract, &self.mul(&basis[i], &basis[j])));
        let alg = FdAlgebra::from_product(n, star, prod)?;
        let mut expect = Mat::zeros(self.fibers[self.cat.unit()], n);
        for (i, e) in basis.iter().enumerate() {
            expect.set_column(i, &self.cond_expect(x, e)?);
        }
        let ground = self.ground()?;
        let tau = ground.regular_trace();
        let phi = expect.transpose() * &tau;
        let gns = alg.gns(&phi)?;
        Ok(SquareAlgebra { x, word, alg, expect, gns })
    }

    /// Right action of `D(X̄ ⊠ X)` on `D(X)`: `D(R̄_X ⊗ id_X)(D²(a ⊙ t))`.
    pub fn right_action(&self, a: &FiberElement, t: &WordElement) -> Result<FiberElement> {
        let x = a.label;
        let m = self.mul(&self.fiber(x, &a.coeffs), t);
        let f = self.cat.whisker(&[], &self.cat.cupbar(x)?, &[x]);
        let e = self.pull(&f, &m);
        Ok(FiberElement { label: x, coeffs: e.comps[x].column(0).into_owned() })
    }

    /// `D(X̄ ⊠ X)`-valued inner product `D²(j(a) ⊙ a')`.
    pub fn module_inner_product(&self, a: &FiberElement, b: &FiberElement) -> Result<WordElement> {
        if a.label != b.label {
            let n = |x| self.cat.ring().name(x).to_string();
            return Err(Error::LabelMismatch(n(a.label), n(b.label)));
        }
        Ok(self.mul(&self.star(&self.fiber(a.label, &a.coeffs))?, &self.fiber(b.label, &b.coeffs)))
    }

    /// `(‖ξ‖_{D(1)}, ‖ξ‖)`.
    pub fn fiber_norms(&self, xi: &FiberElement) -> Result<(f64, f64)> {
        let (g, gg) = self.ground_gns()?;
        let ip = self.fiber_inner_product(xi, xi)?;
        let module = g.op_norm(&gg, &ip).sqrt();
        let sq = self.square_algebra(xi.label)?;
        let op = self.square_norm(&sq, xi)?;
        Ok((module, op))
    }

    fn square_norm(&self, sq: &SquareAlgebra, xi: &FiberElement) -> Result<f64> {
        let t = self.module_inner_product(xi, xi)?;
        Ok(sq.alg.op_norm(&sq.gns, &self.flatten(&t)).sqrt())
    }

    /// Samples `T = S*S` and checks `‖E(T)‖ ≤ ‖T‖ ≤ d_X² ‖E(T)‖`.
    pub fn pp_check<R: Rng>(&self, x: Label, samples: usize, rng: &mut R) -> Result<PpReport> {
        let sq = self.square_algebra(x)?;
        let (g, gg) = self.ground_gns()?;
        let d2 = self.cat.qdim(x).powi(2);
        let n = sq.alg.dim();
        let mut max_ratio: f64 = 0.0;
        let mut min_ratio = f64::INFINITY;
        let mut worst_slack = f64::INFINITY;
        for _ in 0..samples {
            let s = Vector::from_iterator(n, (0..n).map(|_| random_c64(rng)));
            let t = sq.alg.mul(&sq.alg.adj(&s), &s);
            let nt = sq.alg.op_norm(&sq.gns, &t);
            let ne = g.op_norm(&gg, &(&sq.expect * &t));
            let tol = PP_SLACK * nt.max(1.0);
            let lower = nt - ne;
            let upper = d2 * ne - nt;
            worst_slack = worst_slack.min(lower).min(upper);
            if lower < -tol || upper < -tol {
                return Err(Error::CounterexampleFound(format!(
                    "label `{}`: ‖T‖ = {nt:e}, ‖E(T)‖ = {ne:e}, d² = {d2}",
                    self.cat.ring().name(x)
                )));
            }
            if ne > 0.0 {
                max_ratio = max_ratio.max(nt / ne);
                min_ratio = min_ratio.min(nt / ne);
            }
        }
        Ok(PpReport { label: self.cat.ring().name(x).into(), samples, max_ratio, min_ratio, bound: d2, worst_slack })
    }

    // ----------------------------------------------------------- validation

    pub fn verify<R: Rng>(&self, rng: &mut R) -> Result<AobjReport> {
        let live = self.live_labels();
        let u = self.cat.unit();
        let mut assoc: f64 = 0.0;
        for &x in &live {
            for &y in &live {
                for &z in &live {
                    let a = self.random_word(&[x], rng);
                    let b = self.random_word(&[y], rng);
                    let c3 = self.random_word(&[z], rng);
                    let lhs = self.mul(&self.mul(&a, &b), &c3);
                    let rhs = self.mul(&a, &self.mul(&b, &c3));
                    assoc = assoc.max(Self::word_diff(&lhs, &rhs));
                }
            }
        }
        let one = self.unit_element();
        let mut unitality: f64 = 0.0;
        let mut inv: f64 = 0.0;
        for &x in &live {
            let a = self.random_word(&[x], rng);
            let v = self.fiber_vector(&a);
            let l = self.mul(&one, &a);
            let rr = self.mul(&a, &one);
            unitality = unitality.max(crate::linalg::max_abs_vec((l.comps[x].column(0) - &v).as_slice()));
            unitality = unitality.max(crate::linalg::max_abs_vec((rr.comps[x].column(0) - &v).as_slice()));
            let xb = self.cat.dual(x);
            let twice = &self.star[xb] * (&self.star[x] * v.map(|q| q.conj())).map(|q| q.conj());
            inv = inv.max(crate::linalg::max_abs_vec((twice - &v).as_slice()));
        }
        let star_unit = if self.fibers[u] == 0 {
            0.0
        } else {
            crate::linalg::max_abs_vec((&self.star[u] * self.unit.map(|q| q.conj()) - &self.unit).as_slice())
        };
        let mut mono: f64 = 0.0;
        for &x in &live {
            for &y in &live {
                let a = self.random_word(&[x], rng);
                let b = self.random_word(&[y], rng);
                let lhs = self.star(&self.mul(&a, &b))?;
                let rhs = self.mul(&self.star(&b)?, &self.star(&a)?);
                mono = mono.max(Self::word_diff(&lhs, &rhs));
            }
        }
        let mut pos = f64::INFINITY;
        let mut cstar = f64::INFINITY;
        let ground = if self.fibers[u] > 0 { Some(self.ground()?) } else { None };
        let ground_gns = ground.as_ref().map(|g| g.gns(&g.regular_trace()));
        if let (Some(g), Some(Err(Error::Degenerate(_)))) = (&ground, &ground_gns) {
            // the regular trace is not positive, so D(1) is not a C*-algebra
            let gram = g.gram(&g.regular_trace());
            let (vals, _) = herm_eig(&gram);
            let top = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
            pos = vals[0] / top;
            cstar = pos;
        } else if let (Some(g), Some(gg)) = (&ground, ground_gns) {
            let gg = gg?;
            let g = g.clone();
            for &x in &live {
                pos = pos.min(self.positivity_min_eig(x, &g, &gg)?);
                match self.square_algebra(x) {
                    Ok(sq) => {
                        let (vals, _) = herm_eig(&sq.gns.gram);
                        let top = vals.last().copied().unwrap_or(1.0).abs().max(1e-300);
                        cstar = cstar.min(vals[0] / top);
                    }
                    Err(Error::Degenerate(_)) => cstar = cstar.min(0.0),
                    Err(e) => return Err(e),
                }
            }
        } else {
            pos = 0.0;
            cstar = 0.0;
        }
        Ok(AobjReport {
            associativity: assoc,
            unitality,
            star_involution: inv,
            star_unit,
            star_monoidality: mono,
            positivity_min_eig: pos,
            cstar_min_eig: cstar,
        })
    }

    /// Smallest eigenvalue of the `D(1)`-valued Gram matrix of the basis of
    /// `D(X)`, represented on the GNS space of the ground algebra.
    fn positivity_min_eig(&self, x: Label, g: &FdAlgebra, gg: &Gns) -> Result<f64> {
        let n = self.fibers[x];
        let k = g.dim();
        let mut big = Mat::zeros(n * k, n * k);
        let e = |i: usize| {
            let mut v = Vector::zeros(n);
            v[i] = ONE;
            FiberElement { label: x, coeffs: v }
        };
        for i in 0..n {
            for j in 0..n {
                let ip = self.fiber_inner_product(&e(i), &e(j))?;
                let rep = g.rep(gg, &ip);
                big.view_mut((i * k, j * k), (k, k)).copy_from(&rep);
            }
        }
        let (vals, _) = herm_eig(&big);
        let top = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        Ok(vals.first().copied().unwrap_or(0.0) / top)
    }

    /// Verifies and returns the object, or the violated axioms.
    pub fn validated<R: Rng>(self, rng: &mut R) -> Result<AlgebraObject> {
        let rep = self.verify(rng)?;
        let v = rep.violations();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::Axioms(v))
        }
    }
}

/// The connected unit object: `D(1) = ℂ`, every other fiber zero.
pub fn unit_object(cat: Arc<SkeletalUTC>) -> AlgebraObject {
    ground_only(cat, &FdAlgebra::from_product(1, Mat::identity(1, 1), |_, _| Vector::from_element(1, ONE)).unwrap())
}

/// An object concentrated on `1` with the given finite-dimensional algebra.
pub fn ground_only(cat: Arc<SkeletalUTC>, alg: &FdAlgebra) -> AlgebraObject {
    let l = cat.ring().len();
    let u = cat.unit();
    let n = alg.dim();
    let mut fibers = vec![0; l];
    fibers[u] = n;
    let mut mu = Mat::zeros(n, n * n);
    for i in 0..n {
        for j in 0..n {
            mu.set_column(i * n + j, &alg.left[i].column(j));
        }
    }
    let mut star: Vec<Mat> = (0..l).map(|_| Mat::zeros(0, 0)).collect();
    star[u] = alg.star.clone();
    let support = SupportSet { labels: vec![u], generators: vec![], depth: 0 };
    let mut out = AlgebraObject::new(cat, support, fibers, [((u, u, u, 0), mu)].into(), star, alg.unit.clone())
        .expect("ground-only object is well formed");
    out.trivial_center = alg.center().ncols() == 1;
    out
}

/// `ℂ^k` with its minimal projections as basis.
pub fn diagonal_algebra(k: usize) -> FdAlgebra {
    FdAlgebra::from_product(k, Mat::identity(k, k), |i, j| {
        let mut v = Vector::zeros(k);
        if i == j {
            v[i] = ONE;
        }
        v
    })
    .expect("ℂ^k is unital")
}

/// `M_k` in the matrix-unit basis `E_{ij}` at index `i k + j`.
pub fn matrix_algebra(k: usize) -> FdAlgebra {
    let n = k * k;
    let mut star = Mat::zeros(n, n);
    for i in 0..k {
        for j in 0..k {
            star[(j * k + i, i * k + j)] = ONE;
        }
    }
    FdAlgebra::from_product(n, star, |a, b| {
        let mut v = Vector::zeros(n);
        if a % k == b / k {
            v[(a / k) * k + b % k] = ONE;
        }
        v
    })
    .expect("M_k is unital")
}

/// The group algebra object over `Vec_{ℤ/n}` (or its conjugate): every
/// fiber is `ℂ`, the product is the group law and `j` is complex conjugation.
pub fn group_algebra_object(cat: Arc<SkeletalUTC>) -> Result<AlgebraObject> {
    let ring = cat.ring().clone();
    let l = ring.len();
    if (0..l).any(|x| ring.dim(x) != 1.0) {
        return Err(Error::NotSemisimpleInput("group algebra objects need a pointed category".into()));
    }
    let mut mult = HashMap::new();
    for x in 0..l {
        for y in 0..l {
            for (z, _) in ring.fuse_idx(x, y) {
                mult.insert((x, y, z, 0), Mat::from_element(1, 1, ONE));
            }
        }
    }
    let support = SupportSet::full(&ring);
    let mut out = AlgebraObject::new(
        cat,
        support,
        vec![1; l],
        mult,
        (0..l).map(|_| Mat::from_element(1, 1, ONE)).collect(),
        Vector::from_element(1, ONE),
    )?;
    out.trivial_center = true;
    Ok(out)
}

/// Parses a state on `D(1)`: `{"values": [ω(e_1), ...]}`.
pub fn parse_state(v: &Value, n: usize) -> Result<Vector> {
    let top = as_obj(v, "")?;
    let vals = cvec(crate::io::field(top, "values", "")?, "/values")?;
    if vals.len() != n {
        return Err(Error::schema("/values", format!("expected {n} values")));
    }
    Ok(Vector::from_vec(vals))
}

pub fn state_json(values: &Vector) -> Value {
    json!({ "values": vec_json(values.as_slice()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::build_annulus;
    use crate::fixtures;
    use crate::linalg::random_vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fib_annulus() -> AlgebraObject {
        let cat = Arc::new(fixtures::fibonacci());
        build_annulus(cat.clone(), &SupportSet::full(cat.ring())).unwrap().object
    }

    fn rand_fiber(o: &AlgebraObject, x: Label, rng: &mut ChaCha8Rng) -> FiberElement {
        FiberElement { label: x, coeffs: Vector::from_vec(random_vector(rng, o.fiber_dim(x))) }
    }

    #[test]
    fn group_objects_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 3] {
            let cat = Arc::new(fixtures::cyclic(n));
            let o = group_algebra_object(cat.clone()).unwrap();
            let rep = o.verify(&mut rng).unwrap();
            assert!(rep.associativity < 1e-14);
            assert!(rep.violations().is_empty(), "{rep:?}");
            let g = cat.label("g").unwrap();
            let sq = o.square_algebra(g).unwrap();
            assert_eq!(sq.alg.dim(), 1);
            // the identity coefficient
            let t = o.unflatten(&sq.word, &Vector::from_element(1, r(2.5)));
            assert!((o.cond_expect(g, &t).unwrap()[0] - r(2.5)).norm() < 1e-14);
            let pp = o.pp_check(g, 50, &mut rng).unwrap();
            assert!(pp.max_ratio <= 1.0 + 1e-8);
        }
    }

    #[test]
    fn unit_object_is_trivial() {
        let cat = Arc::new(fixtures::fibonacci());
        let o = unit_object(cat.clone());
        let tau = cat.label("tau").unwrap();
        assert!(matches!(o.square_algebra(tau), Err(Error::SupportTooSmall(_))));
        let sq = o.square_algebra(cat.unit()).unwrap();
        assert_eq!(sq.alg.dim(), 1);
        assert!(o.trivial_center);
    }

    #[test]
    fn fibonacci_annulus_square_algebra() {
        let o = fib_annulus();
        let tau = o.cat().label("tau").unwrap();
        let sq = o.square_algebra(tau).unwrap();
        assert_eq!(sq.alg.dim(), 3);
        assert!(sq.alg.associativity_residual() < 1e-9);
        assert!(sq.alg.star_residual() < 1e-9);
        let one = sq.alg.unit.clone();
        let e = &sq.expect * &one;
        assert!((e - o.unit()).norm() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pp = o.pp_check(tau, 200, &mut rng).unwrap();
        assert!(pp.max_ratio <= fixtures::golden().powi(2) + 1e-8, "{pp:?}");
        assert!(pp.min_ratio >= 1.0 - 1e-8);
    }

    #[test]
    fn fiber_norm_sandwich() {
        let o = fib_annulus();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for x in o.live_labels() {
            let d = o.cat().qdim(x);
            for _ in 0..10 {
                let xi = rand_fiber(&o, x, &mut rng);
                let (m, n) = o.fiber_norms(&xi).unwrap();
                assert!(m <= n + 1e-8 && n <= d * m + 1e-8, "{x}: {m} {n}");
                if x == o.cat().unit() {
                    assert!((m - n).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn right_module_identity() {
        let o = fib_annulus();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for x in o.live_labels() {
            let sq = o.square_algebra(x).unwrap();
            let a = rand_fiber(&o, x, &mut rng);
            let b = rand_fiber(&o, x, &mut rng);
            let t = o.random_word(&sq.word, &mut rng);
            let lhs = o.module_inner_product(&a, &o.right_action(&b, &t).unwrap()).unwrap();
            let ip = o.flatten(&o.module_inner_product(&a, &b).unwrap());
            let rhs = sq.alg.mul(&ip, &o.flatten(&t));
            assert!((o.flatten(&lhs) - rhs).norm() < 1e-9);
        }
    }

    #[test]
    fn lax_maps_are_isometric() {
        let o = fib_annulus();
        let (g, gg) = o.ground_gns().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for x in o.live_labels() {
            for y in o.live_labels() {
                let xi = rand_fiber(&o, x, &mut rng);
                let eta = rand_fiber(&o, y, &mut rng);
                let fused = o.mul(&o.fiber(x, &xi.coeffs), &o.fiber(y, &eta.coeffs));
                let lhs = g.op_norm(&gg, &o.word_inner_product(&fused, &fused).unwrap());
                let inner = o.fiber_inner_product(&xi, &xi).unwrap();
                let acted = o.left_ground_action(&inner, &o.fiber(y, &eta.coeffs));
                let acted = FiberElement { label: y, coeffs: o.fiber_vector(&acted) };
                let rhs = g.op_norm(&gg, &o.fiber_inner_product(&eta, &acted).unwrap());
                assert!((lhs - rhs).abs() < 1e-9 * lhs.max(1.0), "{x},{y}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let o = fib_annulus();
        let back = AlgebraObject::from_json(o.cat().clone(), &o.to_json()).unwrap();
        assert_eq!(back.to_json(), o.to_json());
    }
}
