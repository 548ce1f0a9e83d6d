//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines always print.
//! Exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;

use qsphere::constructions::{
    build_isotropic, build_odd_critical, build_single_point, evaluate_construction, Outcome,
};
use qsphere::exact::int;
use qsphere::field::{prime_power_parts, Field, FieldElement};
use qsphere::forms::{FormKind, QuadraticForm};
use qsphere::geometry::{
    bisector_count_brute, bisector_sweep_exhaustive, fiber_profile, intersection_excess_formula,
    intersection_size_brute, intersection_size_formula, sphere_points_brute, sphere_size_formula,
    FormSpace, IntersectionClass, Sphere, TableRow, DEFAULT_ENUM_CAP,
};
use qsphere::harness::{
    emit_report, run, run_verify_bounds, thomason_trial, Command, OutputFormat, RunConfig,
};
use qsphere::incidence::{count_incidences, dilate_instance, check_discriminant_lemma, TheoremId};
use qsphere::sampling::{derive_seed, rng_from_seed, sample_instance, Layout};

const CAP: u64 = DEFAULT_ENUM_CAP;

type Verdict = Result<String, String>;

fn field(q: u64) -> Arc<Field> {
    Arc::new(Field::from_order(q).unwrap())
}

fn kinds_for(d: usize) -> Vec<FormKind> {
    [FormKind::Q1, FormKind::Q2, FormKind::Q3, FormKind::Q4, FormKind::Norm]
        .into_iter()
        .filter(|k| k.allows_dim(d))
        .collect()
}

fn form(kind: FormKind, d: usize, f: &Arc<Field>) -> Arc<QuadraticForm> {
    Arc::new(QuadraticForm::new(kind, d, f.clone()).unwrap())
}

fn origin(d: usize) -> Vec<FieldElement> {
    vec![FieldElement::ZERO; d]
}

const SIZE_GRID: [(u64, usize); 11] =
    [(3, 2), (5, 2), (9, 2), (3, 3), (5, 3), (7, 3), (9, 3), (3, 4), (5, 4), (3, 5), (3, 6)];

fn criterion_1() -> Verdict {
    let mut checked = 0;
    for (q, d) in SIZE_GRID {
        let f = field(q);
        for kind in kinds_for(d) {
            let qf = form(kind, d, &f);
            for r in f.elements() {
                let s = Sphere::new(qf.clone(), origin(d), r).unwrap();
                let oracle = sphere_points_brute(&s, CAP).unwrap().len() as u64;
                let formula = sphere_size_formula(kind, d, &f, r).unwrap();
                if oracle != formula {
                    return Err(format!("q={q} d={d} {kind} r={r}: formula {formula}, oracle {oracle}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (q,d,kind,r) sizes equal"))
}

/// Every `(r1, r2, t)` with witness centers 0 and the first non-zero point
/// at distance `t`; returns rows hit per kind.
fn tables(grid: &[(u64, usize)], kinds: &[FormKind]) -> Verdict {
    let mut checked = 0;
    for &(q, d) in grid {
        let f = field(q);
        for &kind in kinds.iter().filter(|k| k.allows_dim(d)) {
            let fs = FormSpace::with_kind(kind, d, f.clone(), CAP).unwrap();
            let qf = fs.form().clone();
            let mut rows: BTreeMap<&str, u64> = TableRow::ALL.iter().map(|r| (r.label(), 0)).collect();
            for t in f.elements() {
                let c = fs.witness_center(t).expect("isotropic vectors exist for d >= 3");
                let center = fs.space().decode(c);
                for r1 in f.elements() {
                    for r2 in f.elements() {
                        let s1 = Sphere::new(qf.clone(), origin(d), r1).unwrap();
                        let s2 = Sphere::new(qf.clone(), center.clone(), r2).unwrap();
                        let oracle = intersection_size_brute(&s1, &s2, CAP).unwrap();
                        let formula = intersection_size_formula(kind, d, &f, r1, r2, t).unwrap();
                        if oracle != formula {
                            return Err(format!(
                                "q={q} d={d} {kind} r1={r1} r2={r2} t={t}: formula {formula}, oracle {oracle}"
                            ));
                        }
                        *rows.get_mut(IntersectionClass::classify(&f, t, r1, r2).row.label()).unwrap() += 1;
                        checked += 1;
                    }
                }
            }
            if let Some((row, _)) = rows.iter().find(|(_, &n)| n == 0) {
                return Err(format!("q={q} d={d} {kind}: row {row} never exercised"));
            }
        }
    }
    Ok(format!("{checked} intersections equal, 6/6 rows for every (q,d,kind)"))
}

fn criterion_2() -> Verdict {
    tables(&[(3, 4), (5, 4), (9, 4), (3, 6)], &[FormKind::Q1, FormKind::Q2])
}

fn criterion_3() -> Verdict {
    tables(&[(3, 3), (5, 3), (7, 3), (9, 3), (3, 5), (5, 5)], &[FormKind::Q3, FormKind::Q4])
}

fn criterion_4() -> Verdict {
    let mut checked = 0;
    for q in (3..=13u64).filter(|&q| prime_power_parts(q).is_some_and(|(p, _)| p % 2 == 1)) {
        let f = field(q);
        for d in 3..=5 {
            for kind in FormKind::CANONICAL.into_iter().filter(|k| k.allows_dim(d)) {
                for t in f.elements() {
                    for r1 in f.elements() {
                        for r2 in f.elements() {
                            let fiber = fiber_profile(kind, d, &f, r1, r2, t).unwrap().excess(kind, d, q as u32);
                            let table = intersection_excess_formula(kind, d, &f, r1, r2, t).unwrap();
                            if fiber != table {
                                return Err(format!("q={q} d={d} {kind} ({r1},{r2},{t}): fiber {fiber}, table {table}"));
                            }
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{checked} fiber sums equal the tables"))
}

fn criterion_5() -> Verdict {
    let mut random = 0;
    let mut exhaustive = 0;
    for (q, d) in SIZE_GRID {
        let f = field(q);
        let expected = q.pow(d as u32 - 1);
        for kind in kinds_for(d) {
            let fs = FormSpace::with_kind(kind, d, f.clone(), CAP).unwrap();
            let ps = fs.space();
            let mut rng = rng_from_seed(derive_seed(5, &[q, d as u64]));
            for _ in 0..100 {
                let x = rng.gen_range(0..ps.size());
                let y = (x + rng.gen_range(1..ps.size())) % ps.size();
                let n = bisector_count_brute(fs.form(), &ps.decode(x), &ps.decode(y), CAP).unwrap();
                if n != expected {
                    return Err(format!("q={q} d={d} {kind}: bisector of {x},{y} has {n} points"));
                }
                random += 1;
            }
            if q.pow(2 * d as u32) <= 1_000_000 {
                let sweep = bisector_sweep_exhaustive(&fs, 1_000_000).unwrap();
                if sweep.min != expected || sweep.max != expected {
                    return Err(format!("q={q} d={d} {kind}: sweep range {}..{}", sweep.min, sweep.max));
                }
                exhaustive += sweep.pairs;
            }
        }
    }
    Ok(format!("{random} random pairs and {exhaustive} exhaustive pairs have q^(d-1) points"))
}

fn criterion_6() -> Verdict {
    let mut n = 0;
    for q in [3, 5] {
        let f = field(q);
        for d in [2, 3] {
            for kind in kinds_for(d) {
                let fs = FormSpace::with_kind(kind, d, f.clone(), CAP).unwrap();
                let c = build_single_point(&fs, &origin(d)).unwrap();
                let i = count_incidences(&c.points, &c.spheres).unwrap();
                let qd = q.pow(d as u32);
                if i != qd || int(i) * int(i) != c.bound_squared() {
                    return Err(format!("q={q} d={d} {kind}: I={i}"));
                }
                n += 1;
            }
        }
    }
    Ok(format!("I = q^d = sqrt(q^d|P||S|) on {n} instances"))
}

fn criterion_7() -> Verdict {
    for (q, d) in [(3, 2), (3, 4), (5, 4)] {
        let c = build_isotropic(field(q), d, CAP).unwrap();
        let i = count_incidences(&c.points, &c.spheres).unwrap();
        if i != q.pow(d as u32) || int(i) * int(i) != c.bound_squared() {
            return Err(format!("q={q} d={d}: I={i}"));
        }
    }
    Ok("I = q^d = sqrt(q^d|P||S|) for (3,2), (3,4), (5,4)".into())
}

fn criterion_8() -> Verdict {
    let c = build_odd_critical(field(5), 3, FormKind::Q3, CAP).unwrap();
    if (c.points.len(), c.spheres.len()) != (25, 50) {
        return Err(format!("|P|={} |S|={}", c.points.len(), c.spheres.len()));
    }
    let r = evaluate_construction(&c).unwrap();
    let claimed = r.claimed_incidences.unwrap();
    for w in &r.warnings {
        println!("    warning: {w}");
    }
    if r.outcome != Outcome::Match || !r.simple_bound_holds {
        return Err("evaluation failed".into());
    }
    if claimed != r.incidences && r.warnings.is_empty() {
        return Err("discrepancy not flagged".into());
    }
    let big = evaluate_construction(&build_odd_critical(field(25), 3, FormKind::Q3, CAP).unwrap()).unwrap();
    if big.incidence_ratio <= 1.3 {
        return Err(format!("q=25 incidence ratio {:.6}", big.incidence_ratio));
    }
    Ok(format!(
        "|P|=25 |S|=50, oracle I={} vs claimed {claimed}; q=5 deviation ratio {:.6}, incidence ratio {:.6}; q=25 deviation ratio {:.6}, incidence ratio {:.6} > 1.3",
        r.incidences, r.deviation_ratio, r.incidence_ratio, big.deviation_ratio, big.incidence_ratio
    ))
}

fn criterion_9() -> Verdict {
    let mut checks = 0;
    for trial in 0..10_000u64 {
        for r in thomason_trial(derive_seed(9, &[trial])).unwrap() {
            if !r.holds {
                return Err(format!("graph {trial} violates the inequality"));
            }
            checks += 1;
        }
    }
    Ok(format!("10000 graphs, {checks} endpoint checks, 0 violations"))
}

fn bounds_config() -> RunConfig {
    let mut c = RunConfig::new(Command::VerifyBounds);
    c.apply("q", "3,5,7").unwrap();
    c.apply("d", "2,3,4,5").unwrap();
    c.apply("trials", "1000").unwrap();
    c.apply("seed", "42").unwrap();
    c
}

fn criterion_10_and_13() -> (Verdict, Verdict) {
    let report = run_verify_bounds(&bounds_config()).unwrap();
    let mut met: BTreeMap<(TheoremId, u32, usize), u64> = BTreeMap::new();
    let mut violations = 0;
    let mut small_fail = 0;
    for r in report.reports.iter().filter(|r| r.hypotheses_met) {
        if let (Some(q), Some(d)) = (r.q, r.d) {
            *met.entry((r.theorem, q, d)).or_default() += 1;
        }
        if !r.holds {
            if r.theorem.is_small_set() {
                small_fail += 1;
            } else {
                violations += 1;
            }
        }
    }
    let required = [
        TheoremId::SameRadius,
        TheoremId::BoundedRadii,
        TheoremId::Simple,
        TheoremId::OddRestricted,
        TheoremId::Weighted,
        TheoremId::ZeroRadiusOdd,
        TheoremId::OddSameRadius,
        TheoremId::DistanceCharacterSum,
    ];
    let odd_only = [TheoremId::OddRestricted, TheoremId::ZeroRadiusOdd, TheoremId::OddSameRadius];
    let mut short = Vec::new();
    let mut instances = 0;
    for t in required {
        for q in [3, 5, 7] {
            for d in 2..=5 {
                if odd_only.contains(&t) && d % 2 == 0 {
                    continue;
                }
                let n = met.get(&(t, q, d)).copied().unwrap_or(0);
                instances += n;
                if n < 1000 {
                    short.push(format!("{t} q={q} d={d}: {n}"));
                }
            }
        }
    }
    let c10 = if violations > 0 {
        Err(format!("{violations} violations"))
    } else if !short.is_empty() {
        Err(format!("too few instances: {}", short.join("; ")))
    } else {
        Ok(format!("{instances} hypothesis-satisfying instances, >= 1000 per theorem per (q,d), 0 violations"))
    };
    let ratios: Vec<String> = ["SMALL_S_1_9a", "SMALL_S_1_9b", "SMALL_S_1_9c"]
        .iter()
        .map(|k| format!("{k} max ratio {:.6}", report.max_ratio.get(*k).copied().unwrap_or(0.0)))
        .collect();
    let small_n: u64 = met.iter().filter(|((t, _, _), _)| t.is_small_set()).map(|(_, n)| n).sum();
    let c13 = if small_fail > 0 {
        Err(format!("weighted inequality failed on {small_fail} small-set instances"))
    } else {
        Ok(format!("weighted inequality holds on {small_n} small-set instances; {}", ratios.join(", ")))
    };
    (c10, c13)
}

fn criterion_11() -> Verdict {
    let mut triples = 0;
    let qs: Vec<u64> = (3..=27).filter(|&q| prime_power_parts(q).is_some_and(|(p, _)| p % 2 == 1)).collect();
    for &q in &qs {
        let c = check_discriminant_lemma(&Field::from_order(q).unwrap());
        if c.character_violations + c.root_count_violations > 0 {
            return Err(format!("q={q}: {} character, {} root-count violations", c.character_violations, c.root_count_violations));
        }
        triples += c.triples;
    }
    Ok(format!("q in {qs:?}: {triples} triples, 0 violations"))
}

fn criterion_12() -> Verdict {
    let grid = [(FormKind::Q1, 2, 5), (FormKind::Q3, 3, 5), (FormKind::Norm, 3, 7), (FormKind::Q2, 4, 3), (FormKind::Q4, 5, 3)];
    for k in 0..500u64 {
        let (kind, d, q) = grid[k as usize % grid.len()];
        let fs = FormSpace::with_kind(kind, d, field(q), CAP).unwrap();
        let mut rng = rng_from_seed(derive_seed(12, &[k]));
        let radii: Vec<FieldElement> = fs.field().elements().collect();
        let (p, s) = sample_instance(&mut rng, &fs, &radii, Layout::Uniform, 100, 100);
        let lambda = FieldElement::from_index(rng.gen_range(1..q as u32));
        let (pl, sl) = dilate_instance(&p, &s, lambda).unwrap();
        let (a, b) = (count_incidences(&p, &s).unwrap(), count_incidences(&pl, &sl).unwrap());
        if a != b {
            return Err(format!("instance {k}: {a} became {b}"));
        }
    }
    Ok("500 dilated instances keep their incidence count".into())
}

fn criterion_14() -> Verdict {
    let mut configs = Vec::new();
    let mut t = RunConfig::new(Command::VerifyTables);
    t.apply("q", "3,9").unwrap();
    t.apply("d", "2,3,4").unwrap();
    configs.push(t);
    let mut b = RunConfig::new(Command::VerifyBounds);
    b.apply("q", "3,5").unwrap();
    b.apply("d", "2,3").unwrap();
    b.apply("trials", "50").unwrap();
    b.apply("seed", "42").unwrap();
    configs.push(b);
    for which in ["single-point", "isotropic", "odd-critical"] {
        let mut c = RunConfig::new(Command::Construct);
        c.apply("which", which).unwrap();
        c.apply("d", if which == "isotropic" { "4" } else { "3" }).unwrap();
        configs.push(c);
    }
    let mut s = RunConfig::new(Command::Search);
    s.apply("steps", "200").unwrap();
    s.apply("seed", "7").unwrap();
    configs.push(s);
    let mut compared = 0;
    for c in &configs {
        for format in [OutputFormat::Json, OutputFormat::Csv, OutputFormat::Text] {
            let a = emit_report(&run(c).unwrap(), format).unwrap();
            let b = emit_report(&run(c).unwrap(), format).unwrap();
            if a != b {
                return Err(format!("{:?} {:?} output differs between runs", c.command, format));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} (command, format) outputs byte-identical across reruns"))
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, Duration, fn() -> Verdict);
    let criteria: [Criterion; 11] = [
        (1, "sphere sizes", Duration::from_secs(120), criterion_1),
        (2, "intersection table, even d", Duration::from_secs(300), criterion_2),
        (3, "intersection table, odd d", Duration::from_secs(300), criterion_3),
        (4, "fiber reduction", Duration::MAX, criterion_4),
        (5, "bisector count", Duration::MAX, criterion_5),
        (6, "single-point construction", Duration::MAX, criterion_6),
        (7, "isotropic construction", Duration::MAX, criterion_7),
        (8, "odd-critical construction", Duration::MAX, criterion_8),
        (9, "pseudo-random bipartite inequality", Duration::MAX, criterion_9),
        (11, "D = 0 character lemma", Duration::MAX, criterion_11),
        (12, "dilation invariance", Duration::MAX, criterion_12),
    ];
    let mut results: Vec<(u32, &str, Verdict, Duration, Duration)> = Vec::new();
    for (n, name, limit, f) in criteria {
        let start = Instant::now();
        let out = f();
        results.push((n, name, out, start.elapsed(), limit));
    }
    let start = Instant::now();
    let (c10, c13) = criterion_10_and_13();
    let elapsed = start.elapsed();
    results.push((10, "incidence bounds, randomized", c10, elapsed, Duration::from_secs(1800)));
    results.push((13, "small-set bound via weighted inequality", c13, elapsed, Duration::from_secs(1800)));
    let start = Instant::now();
    let c14 = criterion_14();
    results.push((14, "determinism", c14, start.elapsed(), Duration::MAX));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, name, out, took, limit) in results {
        let out = match out {
            Ok(msg) if took > limit => Err(format!("{msg}; took {took:?}, limit {limit:?}")),
            other => other,
        };
        match out {
            Ok(msg) => println!("criterion {n:>2} PASS  {name}: {msg} [{:.1}s]", took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {msg} [{:.1}s]", took.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 14 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
