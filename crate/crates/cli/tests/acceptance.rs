//! Acceptance criteria 1 to 9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::{Command, ExitCode};

use kahler_toric::dombrowski::{check_kahler_function, TangentChartPoint};
use kahler_toric::dually_flat::DuallyFlatSpace;
use kahler_toric::families::ExponentialFamily;
use kahler_toric::lifts::{compose_lifts, LiftMap};
use kahler_toric::torification::make_factorization;
use kahler_toric::{Error, Vector};
use kahler_toric_cli::checks::{plan, run, RunOptions};
use kahler_toric_cli::config::SuiteConfig;
use kahler_toric_cli::report::{CheckReport, REPORT_SCHEMA};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Required tolerance for a sub-metric; `None` falls back to the report's own.
fn required_tol(r: &CheckReport) -> Option<f64> {
    let countable = r.target.starts_with("poisson") || r.target.starts_with("negative-binomial");
    Some(match r.check_name.as_str() {
        "legendre-involution/roundtrip" | "legendre-involution/pairing-spread" => 1e-8,
        "dual-flatness/inverse-metric" => 1e-10,
        "dual-flatness/dual-jacobian" => 1e-5,
        "dual-flatness/dual-torsion" => 1e-6,
        "fisher-crosscheck/expectation-vs-hessian" if countable => 1e-6,
        "fisher-crosscheck/expectation-vs-hessian" => 1e-8,
        "kahler-closed/d-omega" => 1e-4,
        "kahler-closed/j-squared" | "kahler-closed/compatibility" => 0.0,
        "factorization/projection" | "factorization/probability" => 1e-10,
        "factorization/periodicity" | "factorization/equivariance" => 1e-12,
        "factorization/pullback-metric" => 1e-5,
        "momentum/gradient-identity" => 1e-10,
        "momentum/metric-from-action" => 1e-8,
        "convexity-scan/violations" => 0.0,
        "lift/lift-equation" => 1e-10,
        "lift/isometry-chart" | "lift/isometry-target" => 1e-4,
        "kahler-function/lattice-periodicity" => 1e-12,
        name if name.starts_with("kahler-function/killing") => 1e-3,
        _ => return None,
    })
}

struct Verdict {
    ok: bool,
    detail: String,
}

impl Verdict {
    fn and(mut self, ok: bool, what: &str) -> Self {
        if !ok {
            self.ok = false;
            self.detail += &format!("; {what} failed");
        }
        self
    }
}

fn run_suite(text: &str, min_samples: &[(&str, usize)]) -> Verdict {
    let suite = match SuiteConfig::parse(text) {
        Ok(s) => s,
        Err(e) => return Verdict { ok: false, detail: format!("suite rejected: {e}") },
    };
    let planned = match plan(&suite, &RunOptions::default()) {
        Ok(p) => p,
        Err(e) => return Verdict { ok: false, detail: format!("suite rejected: {e}") },
    };
    let reports = run(&planned, true);
    let mut failures = Vec::new();
    for r in &reports {
        let tol = required_tol(r).unwrap_or(r.tolerance);
        if !(r.max_abs_error <= tol) || !r.pass {
            failures.push(format!("{} {} err={:e} tol={:e}", r.check_name, r.target, r.max_abs_error, tol));
        }
        for (prefix, n) in min_samples {
            if r.check_name.starts_with(prefix) && r.n_samples < *n {
                failures.push(format!("{} {} used {} samples", r.check_name, r.target, r.n_samples));
            }
        }
    }
    Verdict {
        ok: failures.is_empty() && !reports.is_empty(),
        detail: if failures.is_empty() { format!("{} sub-checks", reports.len()) } else { failures.join("; ") },
    }
}

fn entry(check: &str, target: &str, samples: usize) -> String {
    format!("[[check]]\ncheck = \"{check}\"\nfamily = \"{target}\"\nsamples = {samples}\n\n")
}

const FAMILIES: [&str; 6] =
    ["poisson", "categorical:2", "binomial:3", "multinomial:3:2", "negative-binomial:2", "normal-known-var"];
const TORIC: [&str; 5] = ["poisson", "categorical:2", "binomial:3", "multinomial:3:2", "negative-binomial:2"];

fn legendre() -> Verdict {
    let mut s = entry("legendre-involution", "quadratic:1", 50) + &entry("legendre-involution", "exp", 50);
    for n in 1..=3 {
        s += &entry("legendre-involution", &format!("flat:{n}"), 50);
        for c in ["1", "0.5"] {
            s += &entry("legendre-involution", &format!("projective:{n}:{c}"), 50);
        }
    }
    run_suite(&s, &[("legendre", 50)])
}

fn dually_flat() -> Verdict {
    let s: String = FAMILIES.iter().map(|f| entry("dual-flatness", f, 20)).collect();
    run_suite(&s, &[("dual-flatness", 20)])
}

fn fisher() -> Verdict {
    let s: String = FAMILIES.iter().map(|f| entry("fisher-crosscheck", f, 20)).collect();
    run_suite(&s, &[("fisher", 20)])
}

fn kahler() -> Verdict {
    let s: String = FAMILIES.iter().map(|f| entry("kahler-closed", f, 50)).collect();
    run_suite(&s, &[("kahler-closed", 50)])
}

fn factorization() -> Verdict {
    let s: String = TORIC.iter().map(|f| entry("factorization", f, 100)).collect();
    let not_toric = matches!(make_factorization(&ExponentialFamily::normal_known_variance()), Err(Error::NotToric(_)));
    run_suite(&s, &[("factorization", 100)]).and(not_toric, "NotToric for normal-known-var")
}

fn momentum() -> Verdict {
    let mut s: String =
        ["categorical:1", "categorical:2", "categorical:3"].iter().map(|f| entry("momentum", f, 50)).collect();
    for f in ["categorical:2", "binomial:3", "multinomial:3:2"] {
        s += &entry("convexity-scan", f, 1000);
    }
    for t in ["flat:1", "flat:2", "projective:1:1", "projective:2:1", "projective:1:0.5", "projective:2:0.5"] {
        s += &entry("momentum", t, 10);
    }
    run_suite(&s, &[("convexity-scan", 1000), ("momentum/metric-from-action", 10)])
}

fn lifts() -> Verdict {
    let mut s = String::new();
    for n in 1..=5 {
        s += &entry("lift", &format!("veronese:{n}"), 100);
        s += &entry("lift", &format!("veronese-printed:{n}"), 100);
    }
    for m in 1..=3 {
        for n in 1..=3 {
            s += &entry("lift", &format!("veronese-multinomial:{m}:{n}"), 100);
        }
    }
    for n in 1..=2 {
        for m in 1..=2 {
            s += &entry("lift", &format!("segre:{n}:{m}"), 100);
        }
    }
    let verdict = run_suite(&s, &[("lift", 100)]);

    let rho_ok = (1..=5).all(|n| {
        let printed = LiftMap::veronese_printed(n).unwrap().rho_rows();
        let expected: Vec<Vec<i64>> = (0..n).map(|k| vec![(n - k) as i64]).collect();
        printed == expected
    });

    let v = LiftMap::veronese(3).unwrap();
    let id_cat = LiftMap::identity(&ExponentialFamily::categorical(3).unwrap()).unwrap();
    let id_bin = LiftMap::identity(&ExponentialFamily::binomial(3).unwrap()).unwrap();
    let right = compose_lifts(&v, &id_cat).unwrap();
    let left = compose_lifts(&id_bin, &v).unwrap();
    let perm = LiftMap::outcome_permutation(3, vec![3, 1, 0, 2]).unwrap();
    let vp = compose_lifts(&v, &perm).unwrap();
    let assoc = compose_lifts(&vp, &perm).unwrap();
    let assoc2 = compose_lifts(&v, &compose_lifts(&perm, &perm).unwrap()).unwrap();
    let composition_ok = [&right, &left]
        .iter()
        .all(|c| c.exponents == v.exponents && c.coefficients == v.coefficients && c.rho == v.rho)
        && vp.rho == &perm.rho * &v.rho
        && assoc.exponents == assoc2.exponents
        && assoc.coefficients == assoc2.coefficients
        && assoc.rho == assoc2.rho;
    verdict.and(rho_ok, "Veronese rho = [nt,...,t]").and(composition_ok, "composition identities")
}

fn kahler_functions() -> Verdict {
    let verdict = run_suite(&entry("kahler-function", "poisson", 20), &[("kahler-function", 20)]);
    let space = DuallyFlatSpace::new(ExponentialFamily::poisson().potential());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let samples: Vec<TangentChartPoint> = (0..20)
        .map(|_| {
            TangentChartPoint::new(
                Vector::from_element(1, rng.gen_range(-2.0..2.0)),
                Vector::from_element(1, rng.gen_range(-6.0..6.0)),
            )
        })
        .collect();
    let q = check_kahler_function(&space, |x| x[0], &samples, &mut rng).map(|r| r.max_violation);
    let q_fails = matches!(q, Ok(v) if v > 1e-3);
    verdict.and(q_fails, "f(q,r) = q rejected by the Killing test")
}

fn cli() -> Verdict {
    let dir = tempfile::tempdir().expect("temp dir");
    let exe = env!("CARGO_BIN_EXE_kahler-toric");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("report{i}.json"));
        let out = Command::new(exe)
            .args(["check", "--seed", "42", "--deterministic", "--json"])
            .arg(&path)
            .output()
            .expect("binary runs");
        if !out.status.success() {
            return Verdict { ok: false, detail: format!("default suite exit {:?}", out.status.code()) };
        }
        outputs.push((std::fs::read(&path).expect("report written"), out.stdout));
    }
    let identical = outputs[0] == outputs[1];
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).expect("schema parses");
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let report: serde_json::Value = serde_json::from_slice(&outputs[0].0).expect("report parses");
    let n = report.as_array().map_or(0, Vec::len);
    Verdict { ok: n > 0, detail: format!("exit 0, {n} reports") }
        .and(identical, "byte-identical reruns")
        .and(compiled.is_valid(&report), "schema validation")
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("Legendre suite", legendre),
        ("dually flat suite", dually_flat),
        ("Fisher cross-check", fisher),
        ("Kahler suite", kahler),
        ("factorization suite", factorization),
        ("momentum suite", momentum),
        ("lift suite", lifts),
        ("Kahler-function suite", kahler_functions),
        ("CLI default suite", cli),
    ];
    let mut all = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = f();
        all &= v.ok;
        println!("criterion {}: {} {name}: {}", i + 1, if v.ok { "PASS" } else { "FAIL" }, v.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
