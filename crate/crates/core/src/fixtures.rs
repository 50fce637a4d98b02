//! Bundled categories and algebra objects.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use crate::fusion_ring::{validate_ring, FusionRing, Label, RawRing};
use crate::linalg::{c, kron, nullspace, orthonormalize, r, Mat, Vector, C64, ONE};
use crate::skeletal_cat::SkeletalUTC;

fn cyclic_name(k: usize) -> String {
    match k {
        0 => "e".into(),
        1 => "g".into(),
        _ => format!("g{k}"),
    }
}

/// `Vec_{ℤ/n}` with trivial associator and trivial symmetric braiding.
pub fn cyclic(n: usize) -> SkeletalUTC {
    assert!((1..=9).contains(&n), "cyclic fixtures cover 1 <= n <= 9");
    let mut raw = RawRing { unit: "e".into(), ..Default::default() };
    for i in 0..n {
        raw.labels.push(cyclic_name(i));
        raw.dual.insert(cyclic_name(i), cyclic_name((n - i) % n));
        for j in 0..n {
            raw.fusion.insert((cyclic_name(i), cyclic_name(j)), [(cyclic_name((i + j) % n), 1)].into());
        }
    }
    let ring = validate_ring(&raw).expect("cyclic ring");
    from_scalar_rule(ring, |_| ONE, |_| ONE)
}

/// The trivial category with a single simple object.
pub fn trivial() -> SkeletalUTC {
    cyclic(1)
}

/// Builds a multiplicity-free category whose F- and R-moves are 1×1 except
/// where `fblock` returns a full matrix.
fn from_scalar_rule(
    ring: FusionRing,
    fval: impl Fn([Label; 4]) -> C64,
    rval: impl Fn([Label; 3]) -> C64,
) -> SkeletalUTC {
    from_rules(ring, |k, n| (n == 1).then(|| Mat::from_element(1, 1, fval(k))), Some(rval))
}

fn from_rules(
    ring: FusionRing,
    fblock: impl Fn([Label; 4], usize) -> Option<Mat>,
    rval: Option<impl Fn([Label; 3]) -> C64>,
) -> SkeletalUTC {
    let l = ring.len();
    let mut fb = HashMap::new();
    for a in 0..l {
        for b in 0..l {
            for c3 in 0..l {
                for d in 0..l {
                    let n: usize = ring.fuse_idx(a, b).map(|(e, m)| (m * ring.n(e, c3, d)) as usize).sum();
                    if n > 0 {
                        fb.insert([a, b, c3, d], fblock([a, b, c3, d], n).expect("F block"));
                    }
                }
            }
        }
    }
    let rb = rval.map(|rv| {
        let mut out = HashMap::new();
        for a in 0..l {
            for b in 0..l {
                for (z, _) in ring.fuse_idx(a, b) {
                    out.insert([a, b, z], Mat::from_element(1, 1, rv([a, b, z])));
                }
            }
        }
        out
    });
    SkeletalUTC::from_parts(ring, fb, rb).expect("bundled category")
}

pub fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

fn ring_from_table(labels: &[&str], unit: &str, dual: &[(&str, &str)], table: &[(&str, &str, &[&str])]) -> FusionRing {
    let mut raw =
        RawRing { labels: labels.iter().map(|s| s.to_string()).collect(), unit: unit.into(), ..Default::default() };
    for (a, b) in dual {
        raw.dual.insert(a.to_string(), b.to_string());
    }
    for x in labels {
        raw.fusion.insert((unit.into(), x.to_string()), [(x.to_string(), 1)].into());
        raw.fusion.insert((x.to_string(), unit.into()), [(x.to_string(), 1)].into());
    }
    for (a, b, zs) in table {
        let row: BTreeMap<String, u32> = zs.iter().map(|z| (z.to_string(), 1)).collect();
        raw.fusion.insert((a.to_string(), b.to_string()), row);
    }
    validate_ring(&raw).expect("bundled ring")
}

/// Fibonacci category `{1, τ}`, `τ ⊗ τ = 1 ⊕ τ`.
pub fn fibonacci() -> SkeletalUTC {
    let ring = ring_from_table(&["1", "tau"], "1", &[("1", "1"), ("tau", "tau")], &[("tau", "tau", &["1", "tau"])]);
    let t = ring.label("tau").unwrap();
    let phi = golden();
    let fm = Mat::from_row_slice(2, 2, &[r(1.0 / phi), r(phi.powf(-0.5)), r(phi.powf(-0.5)), r(-1.0 / phi)]);
    let rv = move |k: [Label; 3]| {
        if k[0] != t || k[1] != t {
            ONE
        } else if k[2] == t {
            c((3.0 * PI / 5.0).cos(), (3.0 * PI / 5.0).sin())
        } else {
            c((-4.0 * PI / 5.0).cos(), (-4.0 * PI / 5.0).sin())
        }
    };
    from_rules(
        ring,
        |k, n| {
            if n == 2 && k == [t, t, t, t] {
                Some(fm.clone())
            } else {
                (n == 1).then(|| Mat::from_element(1, 1, ONE))
            }
        },
        Some(rv),
    )
}

/// Ising category `{1, ψ, σ}`.
pub fn ising() -> SkeletalUTC {
    let ring = ring_from_table(
        &["1", "psi", "sigma"],
        "1",
        &[("1", "1"), ("psi", "psi"), ("sigma", "sigma")],
        &[
            ("psi", "psi", &["1"]),
            ("psi", "sigma", &["sigma"]),
            ("sigma", "psi", &["sigma"]),
            ("sigma", "sigma", &["1", "psi"]),
        ],
    );
    let p = ring.label("psi").unwrap();
    let s = ring.label("sigma").unwrap();
    let h = 1.0 / 2f64.sqrt();
    let fm = Mat::from_row_slice(2, 2, &[r(h), r(h), r(h), r(-h)]);
    let fblock = move |k: [Label; 4], n: usize| {
        if k == [s, s, s, s] {
            return Some(fm.clone());
        }
        let v = if k == [s, p, s, p] || k == [p, s, p, s] { -1.0 } else { 1.0 };
        (n == 1).then(|| Mat::from_element(1, 1, r(v)))
    };
    let rv = move |k: [Label; 3]| {
        let e = |t: f64| c(t.cos(), t.sin());
        match k {
            [a, b, z] if a == s && b == s && z == p => e(3.0 * PI / 8.0),
            [a, b, _] if a == s && b == s => e(-PI / 8.0),
            [a, b, _] if a == p && b == p => r(-1.0),
            [a, b, _] if (a == s && b == p) || (a == p && b == s) => c(0.0, -1.0),
            _ => ONE,
        }
    };
    from_rules(ring, fblock, Some(rv))
}

/// Concrete unitary representations of a finite group on its irreducibles,
/// given on generators, together with orthonormal intertwiner bases.
pub struct ConcreteReps {
    pub ring: FusionRing,
    pub gens: Vec<Vec<Mat>>,
    pub dims: Vec<usize>,
    pub vertices: HashMap<[Label; 3], Vec<Mat>>,
}

impl ConcreteReps {
    fn swap(&self, a: Label, b: Label) -> Mat {
        let (da, db) = (self.dims[a], self.dims[b]);
        let mut p = Mat::zeros(da * db, da * db);
        for i in 0..da {
            for j in 0..db {
                p[(j * da + i, i * db + j)] = ONE;
            }
        }
        p
    }

    /// Skeletal data extracted from the concrete intertwiners.
    pub fn skeletal(&self) -> SkeletalUTC {
        let l = self.ring.len();
        let ip = |x: &Mat, y: &Mat, d: usize| (x.adjoint() * y).trace() / r(d as f64);
        let mut fb = HashMap::new();
        for a in 0..l {
            for b in 0..l {
                for c3 in 0..l {
                    for d in 0..l {
                        let mut lefts = Vec::new();
                        for (e, _) in self.ring.fuse_idx(a, b) {
                            for v in &self.vertices[&[a, b, e]] {
                                for w in self.vertices.get(&[e, c3, d]).into_iter().flatten() {
                                    lefts.push(kron(v, &Mat::identity(self.dims[c3], self.dims[c3])) * w);
                                }
                            }
                        }
                        if lefts.is_empty() {
                            continue;
                        }
                        let mut rights = Vec::new();
                        for (f, _) in self.ring.fuse_idx(b, c3) {
                            for x in &self.vertices[&[b, c3, f]] {
                                for y in self.vertices.get(&[a, f, d]).into_iter().flatten() {
                                    rights.push(kron(&Mat::identity(self.dims[a], self.dims[a]), x) * y);
                                }
                            }
                        }
                        let m = Mat::from_fn(lefts.len(), rights.len(), |i, j| ip(&rights[j], &lefts[i], self.dims[d]));
                        fb.insert([a, b, c3, d], m);
                    }
                }
            }
        }
        let mut rb = HashMap::new();
        for a in 0..l {
            for b in 0..l {
                let p = self.swap(a, b);
                for (z, _) in self.ring.fuse_idx(a, b) {
                    let vs = &self.vertices[&[a, b, z]];
                    let ws = &self.vertices[&[b, a, z]];
                    rb.insert(
                        [a, b, z],
                        Mat::from_fn(ws.len(), vs.len(), |i, j| ip(&ws[i], &(&p * &vs[j]), self.dims[z])),
                    );
                }
            }
        }
        SkeletalUTC::from_parts(self.ring.clone(), fb, Some(rb)).expect("concrete category")
    }
}

fn intertwiners(ga: &[Mat], gb: &[Mat], gc: &[Mat]) -> Vec<Mat> {
    let (da, db, dc) = (ga[0].nrows(), gb[0].nrows(), gc[0].nrows());
    let n = da * db;
    let mut rows = Vec::new();
    for k in 0..ga.len() {
        let left = kron(&Mat::identity(dc, dc), &kron(&ga[k], &gb[k]));
        let right = kron(&gc[k].transpose(), &Mat::identity(n, n));
        rows.push(left - right);
    }
    let mut a = Mat::zeros(rows.len() * n * dc, n * dc);
    for (k, m) in rows.iter().enumerate() {
        a.view_mut((k * n * dc, 0), m.shape()).copy_from(m);
    }
    let ker = nullspace(&a, 1e-10);
    let cols: Vec<Vector> = (0..ker.ncols()).map(|j| ker.column(j).into_owned()).collect();
    orthonormalize(&cols, 1e-8)
        .into_iter()
        .map(|v| Mat::from_column_slice(n, dc, v.as_slice()) * r((dc as f64).sqrt()))
        .collect()
}

/// Representations of the alternating group A4 on `1, 1a, 1b, 3`.
pub fn a4_reps() -> ConcreteReps {
    let w = c((2.0 * PI / 3.0).cos(), (2.0 * PI / 3.0).sin());
    let one = Mat::from_element(1, 1, ONE);
    let s3 = Mat::from_diagonal(&Vector::from_vec(vec![ONE, r(-1.0), r(-1.0)]));
    let mut t3 = Mat::zeros(3, 3);
    t3[(1, 0)] = ONE;
    t3[(2, 1)] = ONE;
    t3[(0, 2)] = ONE;
    let names = ["1", "1a", "1b", "3"];
    let gens: Vec<Vec<Mat>> = vec![
        vec![one.clone(), one.clone()],
        vec![one.clone(), Mat::from_element(1, 1, w)],
        vec![one.clone(), Mat::from_element(1, 1, w * w)],
        vec![s3, t3],
    ];
    let l = names.len();
    let mut vertices = HashMap::new();
    let mut raw =
        RawRing { labels: names.iter().map(|s| s.to_string()).collect(), unit: "1".into(), ..Default::default() };
    for a in 0..l {
        for b in 0..l {
            let mut row = BTreeMap::new();
            for z in 0..l {
                let vs = if a == 0 || b == 0 {
                    if (a == 0 && b == z) || (b == 0 && a == z) {
                        let d = gens[z][0].nrows();
                        vec![Mat::identity(d, d)]
                    } else {
                        vec![]
                    }
                } else {
                    intertwiners(&gens[a], &gens[b], &gens[z])
                };
                if !vs.is_empty() {
                    row.insert(names[z].to_string(), vs.len() as u32);
                    vertices.insert([a, b, z], vs);
                }
                if z == 0 && row.contains_key("1") {
                    raw.dual.insert(names[a].to_string(), names[b].to_string());
                }
            }
            raw.fusion.insert((names[a].to_string(), names[b].to_string()), row);
        }
    }
    let ring = validate_ring(&raw).expect("A4 ring");
    let dims = gens.iter().map(|g| g[0].nrows()).collect();
    ConcreteReps { ring, gens, dims, vertices }
}

/// `Rep(A4)`, whose `3 ⊗ 3` contains `3` twice.
pub fn rep_a4() -> SkeletalUTC {
    a4_reps().skeletal()
}

pub fn all_categories() -> Vec<SkeletalUTC> {
    let mut v: Vec<SkeletalUTC> = (1..=6).map(cyclic).collect();
    v.push(fibonacci());
    v.push(ising());
    v.push(rep_a4());
    v
}

pub fn category_by_name(name: &str) -> Option<SkeletalUTC> {
    match name {
        "fibonacci" | "fib" => Some(fibonacci()),
        "ising" => Some(ising()),
        "rep_a4" | "a4" => Some(rep_a4()),
        _ => {
            let n: usize = name.strip_prefix('z')?.parse().ok()?;
            (1..=9).contains(&n).then(|| cyclic(n))
        }
    }
}
