//! One line per acceptance criterion; exits nonzero if any criterion fails.

use std::time::Instant;

use tiling_core::crosscheck::{
    comparison_seven, density_exact, density_gerth, density_monte_carlo, identities, nontrivial_example,
    oracle_equiv, root_table, theorem_a, DensityConfig, IdentityConfig, SuiteReport, GERTH_TOLERANCE,
    MC_TOLERANCE,
};

const THEOREM_A_BOUND: u64 = 20_000;
const COMPARISON_BOUND: u64 = 20_000;
const ORACLE_BOUND: i64 = 1000;
const NONTRIVIAL_BOUND: u64 = 10_000;
const MC_RUNTIME_LIMIT_SECS: u64 = 120;
const THEOREM_A_RUNTIME_LIMIT_SECS: u64 = 600;

struct Line {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn summarize(r: &SuiteReport, secs: f64) -> String {
    let mut s = format!("{} checked, {} violations, {secs:.1}s", r.checked, r.violations.len());
    for n in &r.notes {
        s.push_str("; ");
        s.push_str(n);
    }
    for v in r.violations.iter().take(3) {
        s.push_str(&format!("; {}: {}", v.input, v.detail));
    }
    s
}

fn run(id: u32, title: &'static str, f: impl FnOnce() -> SuiteReport, limit_secs: Option<u64>) -> Line {
    let t = Instant::now();
    let r = f();
    let secs = t.elapsed().as_secs_f64();
    let in_time = limit_secs.is_none_or(|l| secs < l as f64);
    let mut detail = summarize(&r, secs);
    if !in_time {
        detail.push_str(&format!("; over the {}s budget", limit_secs.unwrap_or(0)));
    }
    Line { id, title, pass: r.passed() && in_time, detail }
}

fn main() {
    let density = DensityConfig::default();
    let lines = vec![
        run(1, "theorem A equivalence, n = 3 mod 24 up to 20000", || theorem_a(THEOREM_A_BOUND), Some(THEOREM_A_RUNTIME_LIMIT_SECS)),
        run(2, "comparison 7 with both ternary forms, n = 7 mod 24 up to 20000", || comparison_seven(COMPARISON_BOUND), None),
        run(3, "descent matrices equal the local-table oracle, |m| <= 1000", || oracle_equiv(ORACLE_BOUND), None),
        run(4, "exact model densities Q_{k,j} for k = 3,4,5 and delta_{1,0}, delta_{2,0}", density_exact, None),
        run(
            5,
            "Monte Carlo k = 20, 10^6 samples, tolerance 0.005",
            || {
                assert_eq!(MC_TOLERANCE, 0.005);
                density_monte_carlo(density)
            },
            Some(MC_RUNTIME_LIMIT_SECS),
        ),
        run(
            6,
            "odd genus frequency, omega = 4, n < 10^7, against the model, tolerance 0.02",
            || {
                assert_eq!(GERTH_TOLERANCE, 0.02);
                density_gerth(density)
            },
            None,
        ),
        run(7, "root number formula reproduces the 36-entry table", root_table, None),
        run(8, "determinant identities, induction residuals, triple sums", || identities(IdentityConfig::default()), None),
        run(9, "Sel_2(E^(-n)) mod torsion even and >= 2 for n = 1 mod 12 up to 10^4", || nontrivial_example(NONTRIVIAL_BOUND), None),
    ];
    let mut failed = 0;
    for l in &lines {
        println!("criterion {} {}: {} ({})", l.id, if l.pass { "PASS" } else { "FAIL" }, l.title, l.detail);
        failed += usize::from(!l.pass);
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
