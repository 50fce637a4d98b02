use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use utcat::algebra_object::{group_algebra_object, parse_state, unit_object, AlgebraObject};
use utcat::annulus::build_annulus;
use utcat::coend_realization::{cyclic_group_check, CoendAlgebra, Mode};
use utcat::fixtures;
use utcat::fusion_ring::{validate_ring, RawRing, SupportSet};
use utcat::inclusion_analysis::discreteness_report;
use utcat::io::parse_value;
use utcat::semicircular::{
    build_fock, ind_faithfulness_probe, semicircular_ops, unit_covariance, BaseAlgebra, CovarianceMatrix,
};
use utcat::skeletal_cat::SkeletalUTC;
use utcat::Error;

const SCHEMA: &str = "utcat-report/1";

#[derive(Parser, Debug)]
#[command(name = "utcat", version, about = "Numerics for unitary tensor categories and their C*-algebra objects")]
struct Cli {
    /// Residual tolerance for pass/fail decisions (defaults depend on the command).
    #[arg(long, global = true, allow_negative_numbers = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Also write the report to this path.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[arg(long, global = true, default_value = "strict")]
    mode: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a fusion ring (and its category data, if present).
    Validate { input: String },
    /// Pentagon, hexagon, zig-zag and unitarity residuals of a category.
    Verify { cat: String },
    /// Axioms of an algebra object over a category.
    AobjVerify {
        cat: String,
        aobj: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Realize `A ⋈ B` on a support and check it.
    Coend {
        #[arg(long)]
        cat: String,
        /// Left object, given over the opposite category.
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long, default_value = "all")]
        support: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Discreteness, pqr and ind verdicts for the GNS object of a state.
    Analyze {
        #[arg(long)]
        cat: String,
        #[arg(long)]
        aobj: String,
        #[arg(long)]
        state: Option<String>,
        #[arg(long, default_value = "all")]
        support: String,
        /// Scramble the realized correspondence before the ind check.
        #[arg(long)]
        corrupt: bool,
    },
    /// Build the annulus algebra object.
    Annulus {
        #[arg(long)]
        cat: String,
        #[arg(long, default_value = "all")]
        support: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated Fock space, semicircular moments and the faithfulness probe.
    Fock {
        #[arg(long)]
        base: Option<String>,
        #[arg(long)]
        cov: Option<String>,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, default_value_t = 8)]
        moments: usize,
        #[arg(long, default_value_t = 16)]
        probe: usize,
    },
}

/// How a run ended: all assertions hold, some fail, or the input is bad.
enum Outcome {
    Pass,
    Fail,
}

struct Ctx {
    tol: Option<f64>,
    seed: u64,
    mode: Mode,
    fixtures: Vec<Value>,
}

impl Ctx {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    fn read(&mut self, spec: &str) -> Result<Value, Error> {
        let text =
            std::fs::read_to_string(spec).map_err(|e| Error::schema("", format!("cannot read `{spec}`: {e}")))?;
        self.fixtures.push(json!({ "path": spec }));
        parse_value(&text)
    }

    fn cat(&mut self, spec: &str) -> Result<Arc<SkeletalUTC>, Error> {
        if let Some(name) = spec.strip_prefix("fixture:") {
            self.fixtures.push(json!({ "fixture": name }));
            return fixtures::category_by_name(name)
                .map(Arc::new)
                .ok_or_else(|| Error::schema("", format!("no bundled category `{name}`")));
        }
        let v = self.read(spec)?;
        SkeletalUTC::from_json(&v).map(Arc::new)
    }

    fn aobj(&mut self, spec: &str, cat: Arc<SkeletalUTC>) -> Result<AlgebraObject, Error> {
        if let Some(name) = spec.strip_prefix("fixture:") {
            self.fixtures.push(json!({ "fixture": name }));
            return match name {
                "unit" => Ok(unit_object(cat)),
                "group" => group_algebra_object(cat),
                "annulus" => Ok(build_annulus(cat.clone(), &SupportSet::full(cat.ring()))?.object),
                _ => Err(Error::schema("", format!("no bundled algebra object `{name}`"))),
            };
        }
        let v = self.read(spec)?;
        AlgebraObject::from_json(cat, &v)
    }
}

fn verdict(ok: bool) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn run(cmd: &Command, ctx: &mut Ctx) -> Result<(Value, Outcome), Error> {
    match cmd {
        Command::Validate { input } => {
            let v = if let Some(name) = input.strip_prefix("fixture:") {
                ctx.fixtures.push(json!({ "fixture": name }));
                fixtures::category_by_name(name)
                    .ok_or_else(|| Error::schema("", format!("no bundled category `{name}`")))?
                    .to_json()
            } else {
                ctx.read(input)?
            };
            let tol = ctx.tol(1e-10);
            let ring = validate_ring(&RawRing::from_json(&v)?)?;
            let mut out = json!({
                "labels": ring.labels(),
                "dims": ring.dims(),
                "tolerances": { "residual": tol },
            });
            let mut ok = true;
            if v.get("F").is_some() {
                let cat = SkeletalUTC::from_json(&v)?;
                let r = cat.residuals()?;
                ok = r.pentagon < tol && r.hexagon.is_none_or(|h| h < tol) && r.zigzag < tol && r.unitarity < tol;
                out["residuals"] = serde_json::to_value(&r).unwrap();
            }
            Ok((out, verdict(ok)))
        }
        Command::Verify { cat } => {
            let cat = ctx.cat(cat)?;
            let tol = ctx.tol(1e-10);
            let r = cat.residuals()?;
            let ok = r.pentagon < tol && r.hexagon.is_none_or(|h| h < tol) && r.zigzag < tol && r.unitarity < tol;
            Ok((
                json!({
                    "pentagon": r.pentagon,
                    "hexagon": r.hexagon,
                    "zigzag": r.zigzag,
                    "unitarity": r.unitarity,
                    "standardness": r.standardness,
                    "tolerances": { "residual": tol },
                }),
                verdict(ok),
            ))
        }
        Command::AobjVerify { cat, aobj, samples } => {
            let cat = ctx.cat(cat)?;
            let d = ctx.aobj(aobj, cat.clone())?;
            let mut rng = ctx.rng(1);
            let rep = d.verify(&mut rng)?;
            let violations = rep.violations();
            let mut pp = Vec::new();
            let mut pp_ok = true;
            for x in d.live_labels() {
                if d.fiber_dim(x) == 0 || x == cat.unit() {
                    continue;
                }
                let p = d.pp_check(x, *samples, &mut rng)?;
                pp_ok &= p.worst_slack >= -1e-8;
                pp.push(p);
            }
            Ok((
                json!({
                    "fibers": d.fibers(),
                    "residuals": rep,
                    "violations": violations,
                    "pimsner_popa": pp,
                    "tolerances": { "pp_slack": 1e-8 },
                }),
                verdict(violations.is_empty() && pp_ok),
            ))
        }
        Command::Coend { cat, left, right, support, samples } => {
            let cat = ctx.cat(cat)?;
            let op = Arc::new(cat.opposite());
            let a = ctx.aobj(left, op)?;
            let b = ctx.aobj(right, cat.clone())?;
            let s = SupportSet::parse_spec(cat.ring(), support)?;
            let c = CoendAlgebra::new(a, b, &s, ctx.mode)?;
            let mut rng = ctx.rng(2);
            let rep = c.verify(&mut rng)?;
            let mut violations = 0;
            let (mut lo, mut hi): (f64, f64) = (f64::INFINITY, 0.0);
            for k in 0..*samples {
                let x = c.grades()[k % c.grades().len()];
                let t = c.random_homogeneous(x, &mut rng);
                let sw = c.norm_sandwich(&t)?;
                if !sw.holds() {
                    violations += 1;
                }
                if sw.vector_norm > 0.0 {
                    lo = lo.min(sw.cyclic_norm / sw.vector_norm);
                    hi = hi.max(sw.cyclic_norm / (sw.bound * sw.vector_norm));
                }
            }
            let faith = c.faithfulness_probe(50, &mut rng)?;
            let group = cyclic_group_check(&c);
            let tol = ctx.tol(1e-12);
            let group_ok = group.as_ref().is_none_or(|g| g.max_residual() < tol);
            let ok = rep.holds() && violations == 0 && faith.gram_kernel_dim == 0 && faith.failures == 0 && group_ok;
            Ok((
                json!({
                    "name": c.name,
                    "support": c.support().names(cat.ring()),
                    "dim": c.dim(),
                    "residuals": rep,
                    "sandwich": {
                        "samples": samples,
                        "violations": violations,
                        "min_cyclic_over_vector": lo,
                        "max_cyclic_over_bound": hi,
                    },
                    "faithfulness": faith,
                    "group_algebra": group.map(|g| json!({ "check": g, "pass": group_ok })),
                    "tolerances": {
                        "sandwich_slack": utcat::coend_realization::SANDWICH_SLACK,
                        "representation": utcat::coend_realization::REP_TOL,
                        "group_table": tol,
                    },
                }),
                verdict(ok),
            ))
        }
        Command::Analyze { cat, aobj, state, support, corrupt } => {
            let cat = ctx.cat(cat)?;
            let d = ctx.aobj(aobj, cat.clone())?;
            let s = SupportSet::parse_spec(cat.ring(), support)?;
            let n = d.fiber_dim(cat.unit());
            let omega = match state {
                Some(p) => {
                    let v = ctx.read(p)?;
                    parse_state(&v, n)?
                }
                None => d.ground()?.regular_trace(),
            };
            let mut rng = ctx.rng(3);
            let rep = discreteness_report(&d, &omega, *corrupt, &mut rng)?;
            let gns: serde_json::Map<String, Value> =
                s.labels.iter().map(|&x| (cat.ring().name(x).to_string(), json!(rep.gns_dims[x]))).collect();
            let ok = rep.chain_holds;
            Ok((json!({ "report": rep, "gns_dims_on_support": gns, "corrupted": corrupt }), verdict(ok)))
        }
        Command::Annulus { cat, support, out } => {
            let cat = ctx.cat(cat)?;
            let s = SupportSet::parse_spec(cat.ring(), support)?;
            let a = build_annulus(cat.clone(), &s)?;
            let mut rng = ctx.rng(4);
            let rep = a.object.verify(&mut rng)?;
            let violations = rep.violations();
            let w = a.z_state()?;
            let unit_dim = a.object.fiber_dim(cat.unit());
            if let Some(p) = out {
                write(p, &a.object.to_json())?;
            }
            let ok = violations.is_empty() && unit_dim == a.summands.len();
            Ok((
                json!({
                    "provenance": a.provenance(),
                    "fibers": a.object.fibers(),
                    "unit_fiber_dim": unit_dim,
                    "summands": a.summands.len(),
                    "residuals": rep,
                    "violations": violations,
                    "z_state": utcat::io::vec_json(w.as_slice()),
                }),
                verdict(ok),
            ))
        }
        Command::Fock { base, cov, depth, moments, probe } => {
            let base = match base {
                Some(p) => {
                    let v = ctx.read(p)?;
                    BaseAlgebra::from_json(&v)?
                }
                None => BaseAlgebra::scalar(),
            };
            let cov = match cov {
                Some(p) => {
                    let v = ctx.read(p)?;
                    CovarianceMatrix::from_json(base, &v)?
                }
                None => {
                    ctx.fixtures.push(json!({ "fixture": "eta=1" }));
                    unit_covariance()
                }
            };
            let fock = build_fock(&cov, *depth)?;
            let fam = semicircular_ops(&fock);
            let b = &cov.base;
            let max = (*moments).min(2 * depth);
            let mut tau_moments = serde_json::Map::new();
            let mut a_moments = serde_json::Map::new();
            for (i, id) in cov.index.iter().enumerate() {
                let ms = fam.moments(i, max)?;
                tau_moments.insert(id.clone(), json!(ms.iter().map(|m| b.tau(m).re).collect::<Vec<_>>()));
                a_moments.insert(id.clone(), utcat::semicircular::moments_json(&ms));
            }
            let mut rng = ctx.rng(5);
            let rep = ind_faithfulness_probe(&cov, (*depth).min(4), *probe, &mut rng)?;
            let tol = ctx.tol(1e-9);
            let ok = rep.kernel_failures == 0
                && rep.expectation_norm_residual < tol
                && rep.vector_presentation_residual < tol;
            Ok((
                json!({
                    "base": b.to_json(),
                    "index": cov.index,
                    "fock": fock.summary(),
                    "moments": tau_moments,
                    "moments_in_a": a_moments,
                    "row_bound": cov.bound,
                    "choi_min_eig": cov.choi_min_eig,
                    "probe": rep,
                    "tolerances": { "residual": tol, "cp_floor": utcat::semicircular::CP_FLOOR },
                }),
                verdict(ok),
            ))
        }
    }
}

fn write(p: &PathBuf, v: &Value) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(v).unwrap();
    std::fs::write(p, text + "\n").map_err(|e| Error::schema("", format!("cannot write `{}`: {e}", p.display())))
}

fn is_input_error(e: &Error) -> bool {
    matches!(e, Error::Schema { .. } | Error::UnknownLabel(_) | Error::LabelMismatch(..) | Error::NotAState(_))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Verify { .. } => "verify",
        Command::AobjVerify { .. } => "aobj-verify",
        Command::Coend { .. } => "coend",
        Command::Analyze { .. } => "analyze",
        Command::Annulus { .. } => "annulus",
        Command::Fock { .. } => "fock",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let started = Instant::now();
    let echo: Vec<String> = std::env::args().skip(1).collect();
    let mut report = json!({
        "schema": SCHEMA,
        "command": command_name(&cli.command),
        "args": echo,
        "seed": cli.seed,
    });
    let mode = cli.mode.parse::<Mode>();
    let outcome = match (cli.tol, mode) {
        (Some(t), _) if !(t > 0.0 && t.is_finite()) => Err(Error::schema("/tol", "tolerance must be positive")),
        (_, Err(e)) => Err(e),
        (_, Ok(mode)) => {
            let mut ctx = Ctx { tol: cli.tol, seed: cli.seed, mode, fixtures: vec![] };
            report["mode"] = json!(mode);
            let res = run(&cli.command, &mut ctx);
            report["inputs"] = Value::Array(ctx.fixtures);
            res
        }
    };
    let code = match outcome {
        Ok((body, o)) => {
            let pass = matches!(o, Outcome::Pass);
            report["result"] = body;
            report["pass"] = json!(pass);
            if pass {
                0
            } else {
                2
            }
        }
        Err(e) => {
            let input = is_input_error(&e);
            report["error"] = json!({ "kind": if input { "input" } else { "assertion" }, "message": e.to_string() });
            if let Error::Axioms(v) = &e {
                report["violations"] = serde_json::to_value(v).unwrap();
            }
            report["pass"] = json!(false);
            if input {
                3
            } else {
                2
            }
        }
    };
    report["wall_clock_ms"] = json!(started.elapsed().as_millis() as u64);
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    if let Some(p) = &cli.report {
        if let Err(e) = write(p, &report) {
            eprintln!("{e}");
            return ExitCode::from(3);
        }
    }
    ExitCode::from(code)
}
