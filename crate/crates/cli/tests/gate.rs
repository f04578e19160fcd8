//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Every oracle here is computed independently of the
//! library code paths it checks.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rkpf::estimator::{cluster_robust_cov, fit_model, ols_fit, time_dummy_name, CovarianceKind, ModelSpec, Term};
use rkpf::indicators::{
    attribute_full_counting, compute_fwci, compute_quartile_shares, compute_thematic_profile, PublicationRecord,
    Quartile, SubjectVocabulary,
};
use rkpf::panel::PanelDataset;
use rkpf::simulator::{generate_panel, monte_carlo, DgpConfig};
use rkpf::suite::{
    expand_notation, render_table, run_suite, vertex_of_quadratic, ComparisonTable, SuiteColumn, SuiteVariables,
    TableFormat, TableOptions, MAIN_TAGS,
};
use rkpf::weights::{build_weights, CorrelationMatrix};

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Least squares through the normal equations, the independent oracle.
fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    xtx.cholesky().expect("positive definite").solve(&xty)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn weights_construction() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    let mut isolated = 0usize;
    for _ in 0..1000 {
        let n = r.random_range(2..=20);
        let m = r.random_range(3..=12);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| r.random::<f64>()).collect()).collect();
        let values = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { pearson(&rows[i], &rows[j]) });
        let c = CorrelationMatrix {
            regions: (0..n).map(|i| format!("r{i}")).collect(),
            values,
        };
        let w = build_weights(&c);
        let mat = w.matrix();
        for i in 0..n {
            worst = worst.max(mat[(i, i)].abs());
            for j in 0..n {
                worst = worst.max((-mat[(i, j)]).max(0.0));
            }
            let s: f64 = mat.row(i).sum();
            if s == 0.0 {
                isolated += 1;
            }
            worst = worst.max((s - 1.0).abs().min(s.abs()));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(5),
        format!("1000 matrices, worst violation {worst:.1e}, {isolated} isolated rows, {elapsed:.2?} (< 5 s)"),
    )
}

fn random_panel(r: &mut ChaCha8Rng, n: usize, t: usize, k: usize) -> PanelDataset {
    let mut d = PanelDataset::new(
        (0..n).map(|i| format!("R{i}")).collect(),
        (2000..2000 + t as i32).collect(),
    )
    .unwrap();
    d = d
        .with_variable("y", (0..n * t).map(|_| r.random_range(-2.0..2.0)).collect())
        .unwrap();
    for j in 0..k {
        d = d
            .with_variable(format!("x{j}"), (0..n * t).map(|_| r.random_range(-1.0..1.0)).collect())
            .unwrap();
    }
    d
}

fn within_equals_lsdv() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    let mut panels = 0;
    while panels < 100 {
        let n = r.random_range(2..=10);
        let t = r.random_range(2..=6);
        let k = r.random_range(1..=3);
        if n * t <= k + (t - 1) + n + 1 {
            continue;
        }
        let d = random_panel(&mut r, n, t, k);
        let spec = ModelSpec {
            dependent: "y".into(),
            regressors: (0..k).map(|j| Term::level(format!("x{j}"))).collect(),
            intercept: false,
            region_effects: true,
            time_dummies: true,
            covariance: CovarianceKind::Classical,
        };
        let fit = fit_model(&d, &spec, None).unwrap();
        // explicit dummies: regressors, T-1 year dummies, all region dummies
        let cols = k + (t - 1) + n;
        let x = DMatrix::from_fn(n * t, cols, |row, c| {
            let (reg, yr) = (row / t, row % t);
            if c < k {
                d.variable(&format!("x{c}")).unwrap()[row]
            } else if c < k + t - 1 {
                f64::from(yr == c - k + 1)
            } else {
                f64::from(reg == c - k - (t - 1))
            }
        });
        let y = DVector::from_column_slice(d.variable("y").unwrap());
        let b = normal_equations(&x, &y);
        for j in 0..k + t - 1 {
            worst = worst.max((fit.coefficients[j] - b[j]).abs());
        }
        panels += 1;
    }
    outcome(
        worst < 1e-8,
        format!("100 panels (n <= 10, T <= 6), max |within - LSDV| = {worst:.1e} (< 1e-8)"),
    )
}

fn least_squares_oracle() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = r.random_range(1..=8);
        let m = r.random_range(k + 2..=50);
        let x = DMatrix::from_fn(m, k, |_, _| r.random_range(-1.0..1.0));
        let y = DVector::from_fn(m, |_, _| r.random_range(-5.0..5.0));
        let names: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
        let fit = ols_fit(&x, &y, &names).unwrap();
        let b = normal_equations(&x, &y);
        worst = worst.max((&fit.coefficients - &b).norm() / b.norm().max(f64::MIN_POSITIVE));
    }
    outcome(
        worst < 1e-8,
        format!("100 systems (<= 50 x 8), max relative error {worst:.1e} (< 1e-8)"),
    )
}

fn cluster_robust_oracle() -> Outcome {
    // 3 regions x 4 years, two regressors
    let x = DMatrix::from_row_slice(
        12,
        2,
        &[
            1.0, 0.5, 2.0, -1.0, 3.0, 0.25, 4.5, 1.0, //
            0.2, 2.0, 1.1, 1.5, -0.7, 0.3, 0.9, -2.0, //
            2.2, 0.0, -1.3, 1.2, 0.4, 0.8, 1.7, -0.6,
        ],
    );
    let y = DVector::from_column_slice(&[1.2, 0.7, 3.1, 5.0, 2.9, 3.3, -0.4, -0.8, 1.9, 0.2, 1.0, 1.1]);
    let clusters = [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2];
    let fit = ols_fit(&x, &y, &["a".into(), "b".into()]).unwrap();
    let v = cluster_robust_cov(&fit, &x, &clusters).unwrap();

    let bread = (x.transpose() * &x).try_inverse().unwrap();
    let beta = &bread * x.transpose() * &y;
    let u = &y - &x * &beta;
    let mut meat = DMatrix::<f64>::zeros(2, 2);
    for g in 0..3 {
        let mut s = [0.0; 2];
        for i in (0..12).filter(|&i| clusters[i] == g) {
            for (c, sc) in s.iter_mut().enumerate() {
                *sc += x[(i, c)] * u[i];
            }
        }
        for a in 0..2 {
            for b in 0..2 {
                meat[(a, b)] += s[a] * s[b];
            }
        }
    }
    let (g, n, k) = (3.0, 12.0, 2.0);
    let scale = g / (g - 1.0) * (n - 1.0) / (n - k);
    let oracle = &bread * meat * &bread * scale;
    let err = (&v - &oracle).amax() / oracle.amax();
    outcome(
        err < 1e-10,
        format!("3 x 4 toy vs hand-built sandwich, relative error {err:.1e} (< 1e-10)"),
    )
}

const MC_TERMS: [&str; 10] = [
    "log(EXPEMP10)",
    "log(GRPCAP10)",
    "log(PAPEMP)",
    "FWCI",
    "I(FWCI^2)",
    "Q1SH",
    "NQSH",
    "slFWCI",
    "slQ1SH",
    "slNQSH",
];

fn monte_carlo_recovery() -> Outcome {
    let start = Instant::now();
    let cfg = DgpConfig::default();
    let truth = [
        ("log(EXPEMP10)", 0.460),
        ("FWCI", 0.348),
        ("I(FWCI^2)", -0.049),
        ("Q1SH", -0.009),
        ("NQSH", 0.003),
    ];
    let mut pass = cfg.n_regions == 78 && cfg.n_years == 12;
    for (term, v) in truth {
        pass &= cfg.true_coefficients[term] == v;
    }
    let report = monte_carlo(&cfg, "fe.tw.q.sl", 200).unwrap();
    let elapsed = start.elapsed();
    let bias = |t: &str| report.term(t).unwrap().bias.abs();
    let bias_ok = bias("log(EXPEMP10)") < 0.05 && bias("Q1SH") < 0.02 && bias("NQSH") < 0.02;
    let outside: Vec<String> = MC_TERMS
        .iter()
        .map(|t| report.term(t).unwrap())
        .filter(|t| !(0.90..=0.98).contains(&t.coverage_cluster))
        .map(|t| format!("{} {:.3}", t.term, t.coverage_cluster))
        .collect();
    pass &= bias_ok && outside.is_empty() && elapsed < Duration::from_secs(120);
    let coverage: Vec<String> = MC_TERMS
        .iter()
        .map(|t| format!("{:.3}", report.term(t).unwrap().coverage_cluster))
        .collect();
    outcome(
        pass,
        format!(
            "78 x 12, 200 reps: |bias| EXPEMP10 {:.4} (< 0.05), Q1SH {:.5}, NQSH {:.5} (< 0.02); cluster coverage [{}]; outside [0.90, 0.98]: {}; {elapsed:.1?} (< 120 s)",
            bias("log(EXPEMP10)"),
            bias("Q1SH"),
            bias("NQSH"),
            coverage.join(", "),
            if outside.is_empty() { "none".to_string() } else { outside.join(", ") }
        ),
    )
}

fn elasticity_check() -> Outcome {
    let mut cfg = DgpConfig::default();
    cfg.true_coefficients.insert("log(EXPEMP10)".into(), 0.5);
    let report = monte_carlo(&cfg, "fe.tw.q.sl", 200).unwrap();
    let t = report.term("log(EXPEMP10)").unwrap();
    outcome(
        t.coverage >= 0.90 && t.truth == 0.5,
        format!(
            "95% interval contains 0.5 in {:.1}% of 200 replications (>= 90%), mean estimate {:.4}",
            100.0 * t.coverage,
            t.mean_estimate
        ),
    )
}

fn vertex_arithmetic() -> Outcome {
    let a = vertex_of_quadratic(0.348, -0.049).unwrap();
    let b = vertex_of_quadratic(0.346, -0.051).unwrap();
    outcome(
        (a - 3.551).abs() <= 0.01 && (b - 3.392).abs() <= 0.01,
        format!("(0.348, -0.049) -> {a:.4} (3.551 +- 0.01); (0.346, -0.051) -> {b:.4} (3.392 +- 0.01)"),
    )
}

fn table_fidelity() -> Outcome {
    // p-value grid straddling each threshold, with the expected star strings
    let grid: [(f64, &str); 12] = [
        (0.0001, "***"),
        (0.0099, "***"),
        (0.01, "**"),
        (0.0101, "**"),
        (0.0499, "**"),
        (0.05, "*"),
        (0.0501, "*"),
        (0.0999, "*"),
        (0.1, ""),
        (0.1001, ""),
        (0.5, ""),
        (1.0, ""),
    ];
    let mut r = rng(8);
    let k = grid.len();
    let d = random_panel(&mut r, 8, 4, k);
    let spec = ModelSpec {
        dependent: "y".into(),
        regressors: (0..k).map(|j| Term::level(format!("x{j}"))).collect(),
        intercept: true,
        region_effects: false,
        time_dummies: false,
        covariance: CovarianceKind::ClusterByRegion,
    };
    let mut fit = fit_model(&d, &spec, None).unwrap();
    for (j, (p, _)) in grid.iter().enumerate() {
        fit.p_values[j] = *p;
    }
    let table = ComparisonTable {
        dependent: "y".into(),
        rows: fit.terms.clone(),
        columns: vec![SuiteColumn {
            notation: "ols.q".parse().unwrap(),
            fit,
        }],
    };
    let csv = render_table(
        &table,
        &TableOptions {
            format: TableFormat::Csv,
            ..TableOptions::default()
        },
    );
    let mut first: BTreeMap<String, String> = BTreeMap::new();
    for line in csv.lines().skip(1) {
        let (term, cell) = line.split_once(',').unwrap();
        first.entry(term.to_string()).or_insert_with(|| cell.to_string());
    }
    let mut mismatches = Vec::new();
    for (j, (p, expected)) in grid.iter().enumerate() {
        let cell = &first[&format!("x{j}")];
        let stars = &cell[cell.trim_end_matches('*').len()..];
        if stars != *expected {
            mismatches.push(format!("p={p}: got '{stars}', want '{expected}'"));
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{} p-values around 0.01 / 0.05 / 0.10 rendered; mismatches: {}",
            grid.len(),
            if mismatches.is_empty() {
                "none".into()
            } else {
                mismatches.join("; ")
            }
        ),
    )
}

/// Populated (1) / blank (0) cells of the reference results table, in
/// column order ols.q, fe.tw, fe.ow.q, fe.tw.q, fe.tw.q.sl.non,
/// fe.tw.q.sl.noq, fe.tw.q.sl.
const TABLE_PATTERN: [(&str, [u8; 7]); 12] = [
    ("log(EXPEMP10)", [1, 1, 1, 1, 1, 1, 1]),
    ("log(GRPCAP10)", [1, 1, 1, 1, 1, 1, 1]),
    ("log(PAPEMP)", [1, 1, 1, 1, 1, 1, 1]),
    ("FWCI", [1, 0, 1, 1, 1, 1, 1]),
    ("I(FWCI^2)", [1, 0, 1, 1, 1, 1, 1]),
    ("Q1SH", [1, 0, 1, 1, 1, 0, 1]),
    ("NQSH", [1, 0, 1, 1, 0, 1, 1]),
    ("slFWCI", [0, 0, 0, 0, 1, 1, 1]),
    ("slQ1SH", [0, 0, 0, 0, 1, 0, 1]),
    ("slNQSH", [0, 0, 0, 0, 0, 1, 1]),
    ("factor(year)", [0, 1, 0, 1, 1, 1, 1]),
    ("Constant", [1, 0, 0, 0, 0, 0, 0]),
];

fn notation_expansion() -> Outcome {
    let g = generate_panel(&DgpConfig::default()).unwrap();
    let table = run_suite(&g.data, Some(&g.weights), &MAIN_TAGS, &SuiteVariables::default()).unwrap();
    let mut mismatches = Vec::new();
    for (row, pattern) in TABLE_PATTERN {
        for (c, col) in table.columns.iter().enumerate() {
            let present = if row == "factor(year)" {
                let expected: BTreeSet<String> = (2010..=2020).map(time_dummy_name).collect();
                let got: BTreeSet<String> = col
                    .fit
                    .terms
                    .iter()
                    .filter(|t| t.starts_with("factor(year)"))
                    .cloned()
                    .collect();
                if !got.is_empty() && got != expected {
                    mismatches.push(format!("{}: dummies {:?}", col.notation.tag, got));
                }
                !got.is_empty()
            } else {
                col.cell(row).is_some()
            };
            if present != (pattern[c] == 1) {
                mismatches.push(format!("{row} in {}", col.notation.tag));
            }
        }
    }
    for (c, tag) in MAIN_TAGS.iter().enumerate() {
        let spec = expand_notation(tag).unwrap();
        let n_terms = TABLE_PATTERN[..10].iter().filter(|(_, p)| p[c] == 1).count();
        if spec.regressors.len() != n_terms {
            mismatches.push(format!("{tag}: {} terms, want {n_terms}", spec.regressors.len()));
        }
    }
    let n_obs: Vec<usize> = table.columns.iter().map(|c| c.fit.n_obs).collect();
    if n_obs.iter().any(|&n| n != 936) {
        mismatches.push(format!("observations {n_obs:?}"));
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "7 tags x 12 row groups vs reference populated/blank pattern, 936 obs each; mismatches: {}",
            if mismatches.is_empty() {
                "none".into()
            } else {
                mismatches.join("; ")
            }
        ),
    )
}

fn random_records(r: &mut ChaCha8Rng, n: usize, subjects: &[String]) -> Vec<PublicationRecord> {
    let regions = ["A", "B", "C", "D", "E"];
    let quartiles = [Quartile::Q1, Quartile::Q2, Quartile::Q3, Quartile::Q4, Quartile::None];
    let expected = [0.5, 1.25, 2.0, 3.7, 0.8];
    (0..n)
        .map(|i| {
            let mut rs: BTreeSet<String> = BTreeSet::new();
            for _ in 0..r.random_range(1..=3) {
                rs.insert(regions[r.random_range(0..regions.len())].to_string());
            }
            let mut sa: BTreeSet<String> = BTreeSet::new();
            for _ in 0..r.random_range(1..=3) {
                sa.insert(subjects[r.random_range(0..subjects.len())].clone());
            }
            PublicationRecord {
                id: format!("p{i}"),
                year: 2015 + r.random_range(0..2),
                regions: rs,
                subject_areas: sa,
                citations: r.random_range(0..30),
                expected_citations: expected[r.random_range(0..expected.len())],
                journal_quartile: quartiles[r.random_range(0..quartiles.len())],
            }
        })
        .collect()
}

fn ratio_to_f64(q: Ratio<i64>) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn indicator_correctness() -> Outcome {
    let mut r = rng(5);
    let subjects: Vec<String> = (1..=6).map(|i| format!("S{i}")).collect();
    let vocab = SubjectVocabulary::new(subjects.clone()).unwrap();
    let mut failures = Vec::new();
    let mut cells = 0usize;
    let mut worst_fwci = 0.0f64;
    for set in 0..200 {
        let n = r.random_range(1..=50);
        let pubs = random_records(&mut r, n, &subjects);
        let attributed = attribute_full_counting(&pubs);
        // brute force: every region and year, scan all records
        let mut expected_keys = BTreeSet::new();
        for region in ["A", "B", "C", "D", "E"] {
            for year in [2015, 2016] {
                let members: Vec<&PublicationRecord> = pubs
                    .iter()
                    .filter(|p| p.year == year && p.regions.contains(region))
                    .collect();
                if members.is_empty() {
                    continue;
                }
                expected_keys.insert((region.to_string(), year));
                cells += 1;
                let got = &attributed[&(region.to_string(), year)];
                let got_ids: Vec<&str> = got.iter().map(|p| p.id.as_str()).collect();
                let want_ids: Vec<&str> = members.iter().map(|p| p.id.as_str()).collect();
                if got_ids != want_ids {
                    failures.push(format!("set {set} {region}/{year}: attribution"));
                }
                let total = members.len() as i64;
                let q1 = members.iter().filter(|p| p.journal_quartile == Quartile::Q1).count() as i64;
                let nq = members.iter().filter(|p| p.journal_quartile == Quartile::None).count() as i64;
                let (s1, s2) = compute_quartile_shares(&members).unwrap();
                if s1 != ratio_to_f64(Ratio::new(100 * q1, total)) || s2 != ratio_to_f64(Ratio::new(100 * nq, total)) {
                    failures.push(format!("set {set} {region}/{year}: shares"));
                }
                let fwci = members
                    .iter()
                    .map(|p| p.citations as f64 / p.expected_citations)
                    .sum::<f64>()
                    / total as f64;
                let got_fwci = compute_fwci(&members).unwrap();
                worst_fwci = worst_fwci.max((got_fwci - fwci).abs());
                // profile: incidence counts per subject over the member records
                let mut counts = vec![0i64; subjects.len()];
                for p in &members {
                    for (j, s) in subjects.iter().enumerate() {
                        if p.subject_areas.contains(s) {
                            counts[j] += 1;
                        }
                    }
                }
                let incidences: i64 = counts.iter().sum();
                let profile = compute_thematic_profile(&members, &vocab).unwrap();
                for (j, c) in counts.iter().enumerate() {
                    if profile[j] != ratio_to_f64(Ratio::new(*c, incidences)) {
                        failures.push(format!("set {set} {region}/{year}: profile {j}"));
                    }
                }
            }
        }
        if attributed.keys().cloned().collect::<BTreeSet<_>>() != expected_keys {
            failures.push(format!("set {set}: attributed cells"));
        }
    }
    let pass = failures.is_empty() && worst_fwci <= 1e-12;
    outcome(
        pass,
        format!(
            "200 record sets (<= 50 pubs), {cells} region-years: exact rational shares/profiles, FWCI max error {worst_fwci:.1e} (<= 1e-12); failures: {}",
            if failures.is_empty() { "none".into() } else { failures[..failures.len().min(5)].join("; ") }
        ),
    )
}

fn run_pipeline(root: &Path) -> Vec<u8> {
    let bin = env!("CARGO_BIN_EXE_rkpf");
    let run = |args: &[&str]| {
        let status = Command::new(bin)
            .current_dir(root)
            .args(args)
            .stdout(std::process::Stdio::null())
            .status()
            .expect("spawn rkpf");
        assert!(status.success(), "rkpf {args:?} failed");
    };
    run(&["simulate", "--seed", "7", "--output-dir", "sim"]);
    run(&["ingest", "--panel", "sim/panel.csv", "--output-dir", "bundle"]);
    run(&["weights", "--profiles", "sim/profiles.csv", "--output-dir", "w"]);
    run(&[
        "suite",
        "--bundle",
        "bundle",
        "--weights",
        "w/weights.csv",
        "--output-dir",
        "suite",
    ]);
    std::fs::read(root.join("suite/suite.json")).unwrap()
}

fn pipeline_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ja = run_pipeline(a.path());
    let jb = run_pipeline(b.path());
    outcome(
        ja == jb && !ja.is_empty(),
        format!(
            "simulate --seed 7 -> ingest -> weights -> suite twice: {} byte sidecars, identical = {}",
            ja.len(),
            ja == jb
        ),
    )
}

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("weights construction", weights_construction),
        ("within equals LSDV", within_equals_lsdv),
        ("least-squares oracle", least_squares_oracle),
        ("cluster-robust oracle", cluster_robust_oracle),
        ("Monte Carlo recovery", monte_carlo_recovery),
        ("elasticity check", elasticity_check),
        ("vertex arithmetic", vertex_arithmetic),
        ("table fidelity", table_fidelity),
        ("notation expansion", notation_expansion),
        ("indicator correctness", indicator_correctness),
        ("pipeline determinism", pipeline_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "[{}] {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
