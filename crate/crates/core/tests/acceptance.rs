//! Acceptance checks; prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::{Duration, Instant};

use curvstab::cli_reporting::catalog_rows;
use curvstab::geometry_engine::{curvature_at, fd_second_variation, FdFamily, FdOptions, MetricModel, ProductSpheres};
use curvstab::spectral_forms::{ft_coefficients, stability_polynomial, threshold_c, FunctionalId, PolynomialKind};
use curvstab::stability_classifier::{catalog, classify, ClassifyOptions, ScanFamily, StabilityStatus};
use curvstab::verification_harness::{
    consistency_suite, continuation_suite, verify_case, Verdict, VerificationReport,
};

type Check = Result<Vec<String>, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn ensure(ok: bool, msg: String) -> Result<String, String> {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Collects every line; any failing line fails the criterion.
fn gather(lines: Vec<Result<String, String>>) -> Check {
    let mut out = Vec::new();
    let mut failed = false;
    for l in lines {
        match l {
            Ok(s) => out.push(s),
            Err(s) => {
                failed = true;
                out.push(format!("FAILED {s}"));
            }
        }
    }
    if failed {
        Err(out.join("\n    "))
    } else {
        Ok(out)
    }
}

fn c1() -> Check {
    let c5 = threshold_c(5).map_err(|e| e.to_string())?;
    let p = stability_polynomial(PolynomialKind::RicWarped { a: 5 }, 0.5).map_err(|e| e.to_string())?;
    let c3 = threshold_c(3).map_err(|e| e.to_string())?;
    let c4 = threshold_c(4).map_err(|e| e.to_string())?;
    gather(vec![
        ensure((c5 - 0.5).abs() <= 1e-12, format!("c(5) = {c5}")),
        ensure(p.abs() <= 1e-12, format!("p(5, 0.5) = {p}")),
        ensure(c3 == f64::NEG_INFINITY && c4 == f64::NEG_INFINITY, format!("c(3) = {c3}, c(4) = {c4}")),
    ])
}

fn c2() -> Check {
    let (n, m) = (5u32, 5u32);
    let (nf, mf) = (n as f64, m as f64);
    let threshold = (2.0 * (mf - 4.0) / mf)
        .max((nf + 2.0 + (9.0 * nf * nf - 20.0 * nf - 28.0).sqrt()) / (2.0 * (nf + 1.0)));
    let opts = ClassifyOptions::default();
    let status = |r: f64| classify(FunctionalId::Ric, &ScanFamily::SphereHyperbolic.product(n, m, Some(r)), &opts)
        .map(|v| v.status)
        .map_err(|e| e.to_string());
    let mut bad = Vec::new();
    for k in 0..100 {
        let r = 1.0 + 0.8 * (k as f64 + 0.5) / 100.0;
        let want = if r < threshold { StabilityStatus::Unstable } else { StabilityStatus::Stable };
        let got = status(r)?;
        if got != want {
            bad.push(format!("{r}: {got}"));
        }
    }
    let at = status(threshold)?;
    gather(vec![
        ensure((threshold - 1.4041).abs() < 5e-5, format!("threshold {threshold:.6}")),
        ensure(bad.is_empty(), format!("100-point sweep on [1.0, 1.8], mismatches {bad:?}")),
        ensure(at == StabilityStatus::Marginal, format!("boundary point {at}")),
    ])
}

fn c3() -> Check {
    let opts = ClassifyOptions::default();
    let p = ScanFamily::OppositeAbstract.product(3, 3, None);
    let status = |t: f64| classify(FunctionalId::Ft { t }, &p, &opts).map(|v| v.status).map_err(|e| e.to_string());
    let mut bad = Vec::new();
    for k in 0..60 {
        let t = -1.0 / 3.0 + (2.0 / 3.0) * (k as f64 + 0.5) / 60.0;
        if status(t)? != StabilityStatus::Stable {
            bad.push(t);
        }
    }
    for t in [-1.0 / 3.0, -0.4, -1.0, -3.0] {
        if status(t)? != StabilityStatus::Unstable {
            bad.push(t);
        }
    }
    let d = |t: f64| ft_coefficients(3, t).map(|c| c.d).map_err(|e| e.to_string());
    let t0 = 7.0 / 204.0;
    let (below, at, above) = (d(t0 - 1e-6)?, d(t0)?, d(t0 + 1e-6)?);
    gather(vec![
        ensure(bad.is_empty(), format!("status sweep over t, mismatches {bad:?}")),
        ensure(at.abs() <= 1e-12 && below * above < 0.0, format!("D(3, 7/204) = {at:e}, sides {below:e} / {above:e}")),
    ])
}

fn report_line(r: &VerificationReport, want: f64, tol: f64) -> Result<String, String> {
    let d = rel(r.oracle, want);
    ensure(d <= tol, format!("{}: oracle {} vs {want}, rel {d:e}", r.case_id, r.oracle))
}

fn c4() -> Check {
    let mut lines = Vec::new();
    for (id, want) in [
        ("ric_conformal_s3s3", 39.0),
        ("s_conformal_s3s3", 162.0),
        ("ft_conformal_s3s3:t=-0.5", 39.0 - 81.0),
        ("ft_conformal_s3s3:t=0.25", 39.0 + 40.5),
        ("ft_conformal_s3s3:t=1", 39.0 + 162.0),
    ] {
        let r = verify_case(id).map_err(|e| e.to_string())?;
        lines.push(report_line(&r, want, 1e-4));
    }
    gather(lines)
}

fn c5() -> Check {
    let main = verify_case("ric_mixedtt_su2su2").map_err(|e| e.to_string())?;
    let alt = verify_case("ric_mixedtt_su2su2_alt_line").map_err(|e| e.to_string())?;
    let cites = |r: &VerificationReport| r.notes.iter().any(|n| n.contains("12λ²")) && r.notes.iter().any(|n| n.contains("8λ²"));
    gather(vec![
        report_line(&main, 16.0, 1e-4),
        ensure(
            matches!(alt.verdict, Verdict::Refuted | Verdict::Confirmed) && cites(&alt),
            format!("alternative line predicts {}, verdict {:?}, both anchors cited: {}", alt.predicted, alt.verdict, cites(&alt)),
        ),
    ])
}

fn c6() -> Check {
    let reports = continuation_suite(&FdOptions::default()).map_err(|e| e.to_string())?;
    let frozen = [
        ("ric:s3s3", [6.0, -4.5, 3.0]),
        ("s:s3s3", [18.0, 0.0, 0.0]),
        ("ric:s3s4", [10.0, -4.0, 0.0]),
        ("s:s3s4", [32.0, 20.0, -24.0]),
    ];
    let names = ["mu^2", "lambda*mu", "lambda^2"];
    let mut lines = Vec::new();
    for (label, coeffs) in frozen {
        for (k, want) in coeffs.iter().enumerate() {
            let id = format!("continuation:{label}:{}", names[k]);
            match reports.iter().find(|r| r.case_id == id) {
                Some(r) => lines.push(ensure(
                    rel(r.oracle, *want) <= 1e-4 && rel(r.predicted, *want) <= 1e-4,
                    format!("{id}: fitted {} closed form {} expected {want}", r.oracle, r.predicted),
                )),
                None => lines.push(Err(format!("{id} missing"))),
            }
        }
    }
    gather(lines)
}

fn c7() -> Check {
    let a = verify_case("w2_pointwise_product_chart").map_err(|e| e.to_string())?;
    let b = verify_case("w2_pointwise_product_chart_s4h3").map_err(|e| e.to_string())?;
    let model = MetricModel::ProductSpheres(ProductSpheres::new(vec![3, 3], vec![1.0, 1.0]));
    let w = curvature_at(&model, &[0.7, 1.1, 0.4, 0.9, 1.3, 0.2]).map_err(|e| e.to_string())?.invariants().weyl_sq;
    gather(vec![
        ensure(a.oracle <= 1e-10, format!("S³×H³ max |W|² = {:e}", a.oracle)),
        ensure(b.oracle <= 1e-10, format!("S⁴×H³ max |W|² = {:e}", b.oracle)),
        ensure((w - 9.6).abs() <= 1e-9, format!("unit S³×S³ |W|² = {w} vs 9.6")),
    ])
}

fn c8() -> Check {
    let reports = consistency_suite(100, 2024).map_err(|e| e.to_string())?;
    gather(
        reports
            .iter()
            .map(|r| ensure(r.discrepancy <= 1e-12, format!("{}: worst residual {:e}", r.case_id, r.discrepancy)))
            .collect(),
    )
}

fn c9() -> Check {
    let entries = catalog();
    let stable = entries.iter().filter(|e| e.expected == StabilityStatus::Stable).count();
    let unstable = entries.iter().filter(|e| e.expected == StabilityStatus::Unstable).count();
    let rows = catalog_rows(&ClassifyOptions::default());
    let bad: Vec<String> = rows.iter().filter(|r| !r.agrees).map(|r| format!("{} {:?}", r.id, r.classified)).collect();
    let opts = ClassifyOptions::default();
    let st = |r| classify(FunctionalId::Ric, &ScanFamily::HyperbolicPair.product(5, 5, Some(r)), &opts).map(|v| v.status);
    let window = |r| classify(FunctionalId::Ric, &ScanFamily::SphereHyperbolic.product(6, 6, Some(r)), &opts).map(|v| v.status);
    let pair_ok = st(2.05) == Ok(StabilityStatus::Stable);
    let window_ok = window(0.5) == Ok(StabilityStatus::Unstable) && window(2.0) == Ok(StabilityStatus::Stable);
    gather(vec![
        ensure(stable == 7 && unstable == 2, format!("{stable} stable and {unstable} unstable families")),
        ensure(bad.is_empty(), format!("{} samples, disagreements {bad:?}", rows.len())),
        ensure(pair_ok, "H⁵×H⁵ with μ/|λ| above 2 is stable".to_string()),
        ensure(window_ok, "S⁶×H⁶ unstable inside the window, stable above it".to_string()),
    ])
}

fn c10() -> Check {
    let fds = [("conformal", FdFamily::conformal_unit_s3s3()), ("mixed", FdFamily::mixed_unit_s3s3())];
    let fns = [FunctionalId::Ric, FunctionalId::S, FunctionalId::Ft { t: 0.3 }, FunctionalId::R];
    let mut lines = Vec::new();
    for (label, fam) in &fds {
        for f in fns {
            let r = fd_second_variation(f, fam, &FdOptions::default()).map_err(|e| e.to_string())?;
            lines.push(ensure(r.first_derivative.abs() <= 1e-8, format!("{f} {label}: first derivative {:e}", r.first_derivative)));
        }
    }
    gather(lines)
}

fn main() {
    let criteria: [(u32, fn() -> Check, Duration); 10] = [
        (1, c1, Duration::from_secs(1)),
        (2, c2, Duration::from_secs(1)),
        (3, c3, Duration::from_secs(1)),
        (4, c4, Duration::from_secs(120)),
        (5, c5, Duration::from_secs(60)),
        (6, c6, Duration::from_secs(300)),
        (7, c7, Duration::from_secs(10)),
        (8, c8, Duration::from_secs(5)),
        (9, c9, Duration::from_secs(5)),
        (10, c10, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (n, f, budget) in criteria {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = result.is_ok() && in_time;
        if !pass {
            failures += 1;
        }
        println!("criterion {n}: {}", if pass { "PASS" } else { "FAIL" });
        let detail = match &result {
            Ok(lines) => lines.join("\n    "),
            Err(e) => e.clone(),
        };
        println!("    {detail}");
        println!("    {:.3} s (budget {} s{})", elapsed.as_secs_f64(), budget.as_secs(), if in_time { "" } else { ", exceeded" });
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
