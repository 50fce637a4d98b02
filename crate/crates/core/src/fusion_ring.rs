//! Combinatorial fusion data: labels, unit, duals and multiplicities.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde_json::{json, Value};

use crate::error::{AxiomViolation, Error, Result};
use crate::io::{as_arr, as_obj, as_str, as_usize, child, field, split_key};

pub type Label = usize;

const MAX_LABELS: usize = 64;
const MAX_MULT: usize = 16;

/// Unvalidated ring data, as read from JSON or produced by a generator.
#[derive(Clone, Debug, Default)]
pub struct RawRing {
    pub labels: Vec<String>,
    pub unit: String,
    pub dual: BTreeMap<String, String>,
    pub fusion: BTreeMap<(String, String), BTreeMap<String, u32>>,
}

impl RawRing {
    pub fn from_json(v: &Value) -> Result<RawRing> {
        let m = as_obj(v, "")?;
        let mut labels = Vec::new();
        for (i, l) in as_arr(field(m, "labels", "")?, "/labels")?.iter().enumerate() {
            let s = as_str(l, &child("/labels", &i.to_string()))?;
            check_label_name(s, &child("/labels", &i.to_string()))?;
            labels.push(s.to_string());
        }
        let unit = as_str(field(m, "unit", "")?, "/unit")?.to_string();
        let mut dual = BTreeMap::new();
        for (k, x) in as_obj(field(m, "dual", "")?, "/dual")? {
            dual.insert(k.clone(), as_str(x, &child("/dual", k))?.to_string());
        }
        let mut fusion = BTreeMap::new();
        for (k, row) in as_obj(field(m, "fusion", "")?, "/fusion")? {
            let p = child("/fusion", k);
            let key = split_key(k, &[2], &p)?;
            let mut out = BTreeMap::new();
            for (z, n) in as_obj(row, &p)? {
                let n = as_usize(n, &child(&p, z), MAX_MULT)? as u32;
                if n > 0 {
                    out.insert(z.clone(), n);
                }
            }
            fusion.insert((key[0][0].clone(), key[0][1].clone()), out);
        }
        Ok(RawRing { labels, unit, dual, fusion })
    }
}

pub(crate) fn check_label_name(s: &str, ptr: &str) -> Result<()> {
    if s.is_empty() || s.contains([',', ';']) || s.trim() != s {
        return Err(Error::schema(ptr, format!("invalid label name `{s}`")));
    }
    Ok(())
}

/// A validated fusion ring. Labels are stored in lexicographic order and
/// addressed by their index.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionRing {
    labels: Vec<String>,
    index: HashMap<String, Label>,
    unit: Label,
    dual: Vec<Label>,
    n: Vec<u32>,
    dims: Vec<f64>,
}

/// Validates raw data against the ring axioms.
pub fn validate_ring(raw: &RawRing) -> Result<FusionRing> {
    if raw.labels.is_empty() {
        return Err(Error::schema("/labels", "no labels"));
    }
    if raw.labels.len() > MAX_LABELS {
        return Err(Error::schema("/labels", format!("more than {MAX_LABELS} labels")));
    }
    let mut labels = raw.labels.clone();
    labels.sort();
    labels.dedup();
    if labels.len() != raw.labels.len() {
        return Err(Error::schema("/labels", "duplicate labels"));
    }
    let index: HashMap<String, Label> = labels.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let look = |s: &str, ptr: String| -> Result<Label> {
        index.get(s).copied().ok_or_else(|| Error::schema(ptr, format!("unknown label `{s}`")))
    };
    let unit = look(&raw.unit, "/unit".into())?;
    let l = labels.len();
    let mut dual = vec![usize::MAX; l];
    for (k, v) in &raw.dual {
        let p = child("/dual", k);
        let i = look(k, p.clone())?;
        dual[i] = look(v, p)?;
    }
    if let Some(i) = dual.iter().position(|&d| d == usize::MAX) {
        return Err(Error::schema(child("/dual", &labels[i]), "missing dual"));
    }
    let mut n = vec![0u32; l * l * l];
    for ((x, y), row) in &raw.fusion {
        let p = child("/fusion", &format!("{x},{y}"));
        let (xi, yi) = (look(x, p.clone())?, look(y, p.clone())?);
        for (z, &m) in row {
            n[(xi * l + yi) * l + look(z, child(&p, z))?] = m;
        }
    }
    let mut ring = FusionRing { labels, index, unit, dual, n, dims: vec![] };
    let violations = ring.violations();
    if !violations.is_empty() {
        return Err(Error::Axioms(violations));
    }
    ring.dims = (0..l).map(|x| ring.perron(x)).collect();
    Ok(ring)
}

impl FusionRing {
    pub fn from_json(v: &Value) -> Result<FusionRing> {
        validate_ring(&RawRing::from_json(v)?)
    }

    pub fn to_raw(&self) -> RawRing {
        let mut raw =
            RawRing { labels: self.labels.clone(), unit: self.labels[self.unit].clone(), ..Default::default() };
        for x in 0..self.len() {
            raw.dual.insert(self.labels[x].clone(), self.labels[self.dual[x]].clone());
            for y in 0..self.len() {
                let row: BTreeMap<String, u32> =
                    self.fuse_idx(x, y).map(|(z, m)| (self.labels[z].clone(), m)).collect();
                if !row.is_empty() {
                    raw.fusion.insert((self.labels[x].clone(), self.labels[y].clone()), row);
                }
            }
        }
        raw
    }

    pub fn to_json(&self) -> Value {
        let raw = self.to_raw();
        let fusion: serde_json::Map<String, Value> =
            raw.fusion.iter().map(|((x, y), row)| (format!("{x},{y}"), json!(row))).collect();
        json!({ "labels": raw.labels, "unit": raw.unit, "dual": raw.dual, "fusion": fusion })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn name(&self, x: Label) -> &str {
        &self.labels[x]
    }

    pub fn label(&self, s: &str) -> Result<Label> {
        self.index.get(s).copied().ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }

    pub fn unit(&self) -> Label {
        self.unit
    }

    pub fn dual(&self, x: Label) -> Label {
        self.dual[x]
    }

    #[inline]
    pub fn n(&self, x: Label, y: Label, z: Label) -> u32 {
        let l = self.labels.len();
        self.n[(x * l + y) * l + z]
    }

    /// Nonzero channels of `x ⊗ y` with their multiplicities.
    pub fn fuse_idx(&self, x: Label, y: Label) -> impl Iterator<Item = (Label, u32)> + '_ {
        (0..self.len()).filter_map(move |z| {
            let m = self.n(x, y, z);
            (m > 0).then_some((z, m))
        })
    }

    pub fn fuse(&self, x: &str, y: &str) -> Result<BTreeMap<String, u32>> {
        let (x, y) = (self.label(x)?, self.label(y)?);
        Ok(self.fuse_idx(x, y).map(|(z, m)| (self.labels[z].clone(), m)).collect())
    }

    pub fn fp_dimension(&self, x: &str) -> Result<f64> {
        let i = self.index.get(x).ok_or_else(|| Error::NonIrreducibleInput(x.to_string()))?;
        Ok(self.dims[*i])
    }

    pub fn dim(&self, x: Label) -> f64 {
        self.dims[x]
    }

    pub fn dims(&self) -> &[f64] {
        &self.dims
    }

    /// Perron root of left multiplication by `x`. The iteration runs on
    /// `N_x + 1` so that bipartite fusion graphs do not oscillate.
    fn perron(&self, x: Label) -> f64 {
        let l = self.len();
        let mut v = vec![1.0 / (l as f64).sqrt(); l];
        let mut last = f64::NAN;
        for _ in 0..10_000 {
            let w: Vec<f64> =
                (0..l).map(|y| v[y] + (0..l).map(|z| self.n(x, y, z) as f64 * v[z]).sum::<f64>()).collect();
            let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            v = w.iter().map(|a| a / norm).collect();
            if (norm - last).abs() < 1e-12 {
                return norm - 1.0;
            }
            last = norm;
        }
        last - 1.0
    }

    /// All violated axioms, each with a witness tuple.
    pub fn violations(&self) -> Vec<AxiomViolation> {
        let l = self.len();
        let mut out = Vec::new();
        let name = |xs: &[Label]| xs.iter().map(|&i| self.labels[i].clone()).collect::<Vec<_>>();
        let u = self.unit;
        for y in 0..l {
            for z in 0..l {
                let d = u32::from(y == z);
                if self.n(u, y, z) != d || self.n(y, u, z) != d {
                    out.push(AxiomViolation {
                        axiom: "unit".into(),
                        witness: name(&[y, z]),
                        detail: "unit does not act trivially".into(),
                    });
                }
            }
        }
        for x in 0..l {
            let dx = self.dual[x];
            if self.dual[dx] != x {
                out.push(AxiomViolation {
                    axiom: "duality".into(),
                    witness: name(&[x]),
                    detail: "dual is not an involution".into(),
                });
            }
            for y in 0..l {
                if self.n(x, y, u) != u32::from(y == dx) {
                    out.push(AxiomViolation {
                        axiom: "duality".into(),
                        witness: name(&[x, y]),
                        detail: format!("N[x][y][1] = {}", self.n(x, y, u)),
                    });
                }
                for z in 0..l {
                    let m = self.n(x, y, z);
                    if m != self.n(dx, z, y) || m != self.n(z, self.dual[y], x) {
                        out.push(AxiomViolation {
                            axiom: "frobenius_reciprocity".into(),
                            witness: name(&[x, y, z]),
                            detail: "multiplicities differ under rotation".into(),
                        });
                    }
                }
            }
        }
        if self.dual[u] != u {
            out.push(AxiomViolation {
                axiom: "duality".into(),
                witness: name(&[u]),
                detail: "unit is not self-dual".into(),
            });
        }
        for x in 0..l {
            for y in 0..l {
                for v in 0..l {
                    for z in 0..l {
                        let lhs: u32 = (0..l).map(|w| self.n(x, y, w) * self.n(w, v, z)).sum();
                        let rhs: u32 = (0..l).map(|w| self.n(y, v, w) * self.n(x, w, z)).sum();
                        if lhs != rhs {
                            out.push(AxiomViolation {
                                axiom: "associativity".into(),
                                witness: name(&[x, y, v, z]),
                                detail: format!("{lhs} != {rhs}"),
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn fusion_closure(&self, generators: &[&str], depth: usize) -> Result<SupportSet> {
        let gens: Vec<Label> = generators.iter().map(|g| self.label(g)).collect::<Result<Vec<_>>>()?;
        Ok(self.closure_idx(&gens, depth))
    }

    pub fn closure_idx(&self, gens: &[Label], depth: usize) -> SupportSet {
        let step: BTreeSet<Label> = gens.iter().flat_map(|&g| [g, self.dual[g]]).collect();
        let mut set: BTreeSet<Label> = [self.unit].into();
        for _ in 0..depth {
            let mut next = set.clone();
            for &x in &set {
                for &y in &step {
                    next.extend(self.fuse_idx(x, y).map(|(z, _)| z));
                }
            }
            if next == set {
                break;
            }
            set = next;
        }
        let duals: Vec<Label> = set.iter().map(|&x| self.dual[x]).collect();
        set.extend(duals);
        let mut generators = gens.to_vec();
        generators.sort();
        generators.dedup();
        SupportSet { labels: set.into_iter().collect(), generators, depth }
    }

    /// Whether every channel of `x ⊗ y` for `x, y ∈ s` stays inside `s`.
    pub fn is_closed(&self, s: &SupportSet) -> bool {
        s.labels.iter().all(|&x| s.labels.iter().all(|&y| self.fuse_idx(x, y).all(|(z, _)| s.contains(z))))
    }
}

/// A finite, unit-containing, dual-closed set of labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSet {
    pub labels: Vec<Label>,
    pub generators: Vec<Label>,
    pub depth: usize,
}

impl SupportSet {
    pub fn full(ring: &FusionRing) -> SupportSet {
        SupportSet { labels: (0..ring.len()).collect(), generators: vec![], depth: 0 }
    }

    pub fn from_labels(ring: &FusionRing, names: &[&str]) -> Result<SupportSet> {
        let mut labels: BTreeSet<Label> = [ring.unit()].into();
        for s in names {
            let x = ring.label(s)?;
            labels.insert(x);
            labels.insert(ring.dual(x));
        }
        Ok(SupportSet { labels: labels.into_iter().collect(), generators: vec![], depth: 0 })
    }

    /// `all`, `labels=a+b` or `gen=a+b,depth=n`.
    pub fn parse_spec<'a>(ring: &FusionRing, spec: &'a str) -> Result<SupportSet> {
        let spec = spec.trim();
        if spec == "all" {
            return Ok(Self::full(ring));
        }
        let mut gens: Option<Vec<&str>> = None;
        let mut labels: Option<Vec<&str>> = None;
        let mut depth = None;
        let list = |v: &'a str| v.split(['+', ';']).map(str::trim).filter(|s| !s.is_empty()).collect::<Vec<_>>();
        for part in spec.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::schema("/support", format!("expected key=value, got `{part}`")))?;
            match k.trim() {
                "gen" => gens = Some(list(v)),
                "labels" => labels = Some(list(v)),
                "depth" => {
                    depth = Some(
                        v.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::schema("/support/depth", format!("not a depth: `{v}`")))?,
                    )
                }
                other => return Err(Error::schema("/support", format!("unknown key `{other}`"))),
            }
        }
        match (gens, labels) {
            (Some(g), None) => ring.fusion_closure(&g, depth.unwrap_or(1)),
            (None, Some(l)) if depth.is_none() => Self::from_labels(ring, &l),
            _ => Err(Error::schema("/support", "give either gen=..,depth=.. or labels=..")),
        }
    }

    pub fn contains(&self, x: Label) -> bool {
        self.labels.binary_search(&x).is_ok()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn names(&self, ring: &FusionRing) -> Vec<String> {
        self.labels.iter().map(|&x| ring.name(x).to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fibonacci_fusion_and_dimension() {
        let ring = fixtures::fibonacci().ring().clone();
        let f = ring.fuse("tau", "tau").unwrap();
        assert_eq!(f.get("1"), Some(&1));
        assert_eq!(f.get("tau"), Some(&1));
        assert!((ring.fp_dimension("tau").unwrap() - 1.618_033_988_7).abs() < 1e-9);
    }

    #[test]
    fn ising_sigma_dimension() {
        let ring = fixtures::ising().ring().clone();
        assert!((ring.fp_dimension("sigma").unwrap() - std::f64::consts::SQRT_2).abs() < 1e-9);
        assert!(matches!(ring.fp_dimension("nope"), Err(Error::NonIrreducibleInput(_))));
    }

    #[test]
    fn doubled_tau_multiplicity_is_still_associative() {
        // x² = 1 + 2x generates a commutative rank-two ring, so associativity holds
        let mut raw = fixtures::fibonacci().ring().to_raw();
        raw.fusion.get_mut(&("tau".into(), "tau".into())).unwrap().insert("tau".into(), 2);
        let ring = validate_ring(&raw).unwrap();
        assert!((ring.fp_dimension("tau").unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn non_associative_table_rejected() {
        let raw: RawRing = RawRing::from_json(&serde_json::json!({
            "labels": ["1", "x", "y"],
            "unit": "1",
            "dual": {"1": "1", "x": "x", "y": "y"},
            "fusion": {
                "1,1": {"1": 1}, "1,x": {"x": 1}, "x,1": {"x": 1}, "1,y": {"y": 1}, "y,1": {"y": 1},
                "x,x": {"1": 1, "y": 1}, "y,y": {"1": 1, "x": 1},
                "x,y": {"x": 1, "y": 1}, "y,x": {"x": 1, "y": 1}
            }
        }))
        .unwrap();
        let Err(Error::Axioms(v)) = validate_ring(&raw) else { panic!("accepted") };
        assert!(v.iter().any(|a| a.axiom == "associativity"));
    }

    #[test]
    fn closures() {
        let fib = fixtures::fibonacci().ring().clone();
        assert_eq!(fib.fusion_closure(&["1"], 5).unwrap().len(), 1);
        assert_eq!(fib.fusion_closure(&["tau"], 1).unwrap().len(), 2);
        let z4 = fixtures::cyclic(4).ring().clone();
        let s = z4.fusion_closure(&["g"], 1).unwrap();
        assert_eq!(s.names(&z4), vec!["e", "g", "g3"]);
        assert_eq!(z4.fusion_closure(&["g"], 2).unwrap().len(), 4);
    }

    #[test]
    fn revalidation_is_clean() {
        for cat in fixtures::all_categories() {
            let ring = validate_ring(&cat.ring().to_raw()).unwrap();
            assert_eq!(&ring, cat.ring());
        }
    }
}
