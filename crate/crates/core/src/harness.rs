//! Run orchestration: table verification, randomized bound sweeps,
//! constructions, tightness search, and report output.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::constructions::{
    build_isotropic, build_odd_critical, build_single_point, evaluate_construction, ConstructionKind,
    ConstructionReport, ConstructionResult,
};
use crate::error::{Error, Result};
use crate::exact::{self, int};
use crate::field::{prime_power_parts, Field, FieldElement, DEFAULT_MAX_ORDER};
use crate::forms::{norm_equivalence_class, FormKind};
use crate::geometry::{
    bisector_count_brute, bisector_sweep_exhaustive, fiber_profile, intersection_size_formula,
    sign_class, sphere_size_formula, FormSpace, IntersectionClass, TableRow, DEFAULT_ENUM_CAP,
};
use crate::incidence::{
    char_sum_distances, check_bound, check_discriminant_lemma, check_thomason, deviation,
    BipartiteGraph, BoundRecord, BoundReport, CheckOptions, PointSet, SphereKey, SphereSet,
    TheoremId,
};
use crate::instance::format_instance;
use crate::sampling::{derive_seed, rng_from_seed, sample_instance, sample_points, Layout};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest `q^{2d}` for which every bisector is counted.
pub const BISECTOR_SWEEP_CAP: u64 = 1_000_000;

pub const ENUM_CAP_ENV: &str = "QSPHERE_ENUM_CAP";

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Command {
    VerifyTables,
    VerifyBounds,
    Construct,
    Search,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::VerifyTables => "verify-tables",
            Command::VerifyBounds => "verify-bounds",
            Command::Construct => "construct",
            Command::Search => "search",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "text" | "txt" => Ok(OutputFormat::Text),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Text => "text",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub qs: Vec<u32>,
    pub ds: Vec<usize>,
    pub forms: Vec<FormKind>,
    pub trials: u64,
    pub seed: u64,
    pub enum_cap: u64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub export: Option<PathBuf>,
    pub which: Option<ConstructionKind>,
    pub steps: u64,
    pub max_points: usize,
    pub max_spheres: usize,
}

const ALL_FORMS: [FormKind; 5] = [FormKind::Q1, FormKind::Q2, FormKind::Q3, FormKind::Q4, FormKind::Norm];

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value '{s}' for {key}")))
        })
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for {key}")))
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        let (qs, ds) = match command {
            Command::VerifyTables => (vec![3, 5], vec![2, 3, 4]),
            Command::VerifyBounds => (vec![3, 5, 7], vec![2, 3, 4, 5]),
            Command::Construct | Command::Search => (vec![3], vec![2]),
        };
        RunConfig {
            command,
            qs,
            ds,
            forms: ALL_FORMS.to_vec(),
            trials: 100,
            seed: 0,
            enum_cap: DEFAULT_ENUM_CAP,
            format: OutputFormat::Json,
            out: None,
            export: None,
            which: None,
            steps: 200,
            max_points: 100,
            max_spheres: 100,
        }
    }

    /// Sets one option by its flag name (without dashes).
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "q" => self.qs = parse_list(key, value)?,
            "d" => self.ds = parse_list(key, value)?,
            "forms" => {
                self.forms = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse().map_err(|_| Error::Config(format!("unknown form '{s}'"))))
                    .collect::<Result<_>>()?
            }
            "trials" => self.trials = parse_one(key, value)?,
            "seed" => self.seed = parse_one(key, value)?,
            "enum-cap" | "enum_cap" => self.enum_cap = parse_one(key, value)?,
            "format" => self.format = value.parse()?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "export" => self.export = Some(PathBuf::from(value.trim())),
            "which" => {
                self.which = Some(value.parse().map_err(|e: Error| Error::Config(e.to_string()))?)
            }
            "steps" => self.steps = parse_one(key, value)?,
            "max-points" | "max_points" => self.max_points = parse_one(key, value)?,
            "max-spheres" | "max_spheres" => self.max_spheres = parse_one(key, value)?,
            other => return Err(Error::Config(format!("unknown option '{other}'"))),
        }
        Ok(())
    }

    /// Reads `QSPHERE_ENUM_CAP` if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(ENUM_CAP_ENV) {
            self.enum_cap = parse_one(ENUM_CAP_ENV, &v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if self.max_points == 0 || self.max_spheres == 0 {
            return bad("instance size limits must be positive".into());
        }
        if self.qs.is_empty() || self.ds.is_empty() || self.forms.is_empty() {
            return bad("q, d and forms must be non-empty".into());
        }
        for &q in &self.qs {
            match prime_power_parts(q as u64) {
                Some((p, _)) if p % 2 == 1 && q as u64 <= DEFAULT_MAX_ORDER => {}
                _ => return bad(format!("q={q} is not an odd prime power up to {DEFAULT_MAX_ORDER}")),
            }
            for &d in &self.ds {
                if d < 2 {
                    return bad(format!("d={d} is below 2"));
                }
                let size = (q as u64).checked_pow(d as u32);
                if size.is_none_or(|s| s > self.enum_cap) {
                    return bad(format!("q^d for q={q}, d={d} exceeds the enumeration cap {}", self.enum_cap));
                }
            }
        }
        if self.command == Command::Construct && self.which.is_none() {
            return bad("construct needs --which".into());
        }
        Ok(())
    }

    fn echo(&self) -> BTreeMap<String, String> {
        let join = |v: Vec<String>| v.join(",");
        let mut m = BTreeMap::new();
        m.insert("q".into(), join(self.qs.iter().map(|q| q.to_string()).collect()));
        m.insert("d".into(), join(self.ds.iter().map(|d| d.to_string()).collect()));
        m.insert("forms".into(), join(self.forms.iter().map(|f| f.to_string()).collect()));
        m.insert("seed".into(), self.seed.to_string());
        m.insert("enum_cap".into(), self.enum_cap.to_string());
        match self.command {
            Command::VerifyBounds => {
                m.insert("trials".into(), self.trials.to_string());
                m.insert("max_points".into(), self.max_points.to_string());
                m.insert("max_spheres".into(), self.max_spheres.to_string());
            }
            Command::Search => {
                m.insert("steps".into(), self.steps.to_string());
            }
            Command::Construct => {
                if let Some(w) = self.which {
                    m.insert("which".into(), w.to_string());
                }
            }
            Command::VerifyTables => {}
        }
        m
    }

    /// `(q, d, form)` combinations whose parity matches, in config order.
    fn combos(&self) -> Result<Vec<(Arc<Field>, usize, FormKind)>> {
        let mut seen_q = BTreeMap::new();
        let mut out = Vec::new();
        let mut forms: Vec<FormKind> = Vec::new();
        for &k in &self.forms {
            if !forms.contains(&k) {
                forms.push(k);
            }
        }
        for &q in &self.qs {
            if seen_q.contains_key(&q) {
                continue;
            }
            let f = Arc::new(Field::from_order(q as u64)?);
            seen_q.insert(q, ());
            for &d in &self.ds {
                for &k in &forms {
                    if k.allows_dim(d) && !out.iter().any(|(g, e, j): &(Arc<Field>, usize, FormKind)| g.order() == q && *e == d && *j == k) {
                        out.push((f.clone(), d, k));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Parses flat `key=value` lines; `#` starts a comment line.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected key=value", n + 1)))?;
        out.push((k.trim().trim_start_matches("--").to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// One formula-versus-enumeration comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRecord {
    pub check: &'static str,
    pub q: u32,
    pub d: usize,
    pub form: &'static str,
    pub r1: Option<u32>,
    pub r2: Option<u32>,
    pub t: Option<u32>,
    pub row: Option<&'static str>,
    pub formula: i64,
    pub oracle: i64,
    /// The fiber-sum value, for intersections.
    pub fiber: Option<i64>,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageRecord {
    pub q: u32,
    pub d: usize,
    pub form: &'static str,
    pub rows: BTreeMap<&'static str, u64>,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchRecord {
    pub q: u32,
    pub d: usize,
    pub form: &'static str,
    pub seed: u64,
    pub steps: u64,
    pub accepted: u64,
    pub initial_ratio: f64,
    pub best_ratio: f64,
    pub best_deviation: String,
    pub ceiling_ok: bool,
    pub best_points: Vec<u32>,
    pub best_spheres: Vec<(u32, u32)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceReport {
    pub command: &'static str,
    pub version: &'static str,
    pub config: BTreeMap<String, String>,
    pub reports: Vec<BoundReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<TableRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub coverage: Vec<CoverageRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub constructions: Vec<ConstructionReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub searches: Vec<SearchRecord>,
    /// Largest observed ratio per theorem, over hypothesis-satisfying reports.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub max_ratio: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub checked: u64,
    pub passed: u64,
    pub failed: u64,
    pub skipped: u64,
}

impl InstanceReport {
    pub fn new(config: &RunConfig) -> Self {
        InstanceReport {
            command: config.command.as_str(),
            version: VERSION,
            config: config.echo(),
            reports: Vec::new(),
            tables: Vec::new(),
            coverage: Vec::new(),
            constructions: Vec::new(),
            searches: Vec::new(),
            max_ratio: BTreeMap::new(),
            warnings: Vec::new(),
            checked: 0,
            passed: 0,
            failed: 0,
            skipped: 0,
        }
    }

    fn tally(&mut self, ok: bool) {
        self.checked += 1;
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }

    fn add_bound(&mut self, r: BoundReport) {
        if r.hypotheses_met {
            self.tally(r.holds);
            let key = r.theorem.as_str().to_string();
            let entry = self.max_ratio.entry(key).or_insert(0.0);
            if r.ratio > *entry {
                *entry = r.ratio;
            }
        } else {
            self.skipped += 1;
        }
        self.reports.push(r);
    }

    fn add_table(&mut self, r: TableRecord) {
        self.tally(r.ok);
        self.tables.push(r);
    }

    fn finish(&mut self) {
        self.reports.sort_by(|a, b| {
            (a.theorem, a.q, a.d, a.form, a.seed).cmp(&(b.theorem, b.q, b.d, b.form, b.seed))
        });
    }

    pub fn exit_code(&self) -> i32 {
        if self.failed == 0 {
            0
        } else {
            1
        }
    }
}

fn space_for(field: &Arc<Field>, d: usize, kind: FormKind, cap: u64) -> Result<Arc<FormSpace>> {
    FormSpace::with_kind(kind, d, field.clone(), cap)
}

fn form_code(kind: FormKind) -> u64 {
    kind.index().map_or(0, u64::from)
}

pub fn run_verify_tables(config: &RunConfig) -> Result<InstanceReport> {
    config.validate()?;
    let mut report = InstanceReport::new(config);
    for (f, d, kind) in config.combos()? {
        let fs = space_for(&f, d, kind, config.enum_cap)?;
        verify_combo(&fs, config, &mut report)?;
    }
    report.finish();
    Ok(report)
}

fn verify_combo(fs: &Arc<FormSpace>, config: &RunConfig, report: &mut InstanceReport) -> Result<()> {
    let f = fs.field().clone();
    let q = f.order();
    let d = fs.dim();
    let kind = fs.form().kind();
    let canon = fs.form().canonical_kind();
    let ps = fs.space();
    let form = kind.as_str();
    let record = |check, r1: Option<FieldElement>, r2: Option<FieldElement>, t: Option<FieldElement>| TableRecord {
        check,
        q,
        d,
        form,
        r1: r1.map(FieldElement::index),
        r2: r2.map(FieldElement::index),
        t: t.map(FieldElement::index),
        row: None,
        formula: 0,
        oracle: 0,
        fiber: None,
        ok: false,
    };

    for r in f.elements() {
        let formula = sphere_size_formula(kind, d, &f, r)? as i64;
        let oracle = fs.level(r).len() as i64;
        report.add_table(TableRecord {
            formula,
            oracle,
            ok: formula == oracle,
            ..record("size", Some(r), None, None)
        });
    }

    let expected = (q as i64).pow(d as u32 - 1);
    let mut rng = rng_from_seed(derive_seed(config.seed, &[0xB15E, q as u64, d as u64, form_code(kind)]));
    let mut worst = expected;
    for _ in 0..100 {
        let x = rng.gen_range(0..ps.size());
        let mut y = rng.gen_range(0..ps.size());
        while y == x {
            y = rng.gen_range(0..ps.size());
        }
        let count = bisector_count_brute(fs.form(), &ps.decode(x), &ps.decode(y), config.enum_cap)? as i64;
        if count != expected {
            worst = count;
        }
    }
    report.add_table(TableRecord {
        formula: expected,
        oracle: worst,
        ok: worst == expected,
        ..record("bisector-random", None, None, None)
    });
    let n = ps.size() as u64;
    if n * n <= BISECTOR_SWEEP_CAP {
        let sweep = bisector_sweep_exhaustive(fs, BISECTOR_SWEEP_CAP)?;
        let oracle = if sweep.min as i64 != expected { sweep.min } else { sweep.max } as i64;
        report.add_table(TableRecord {
            formula: expected,
            oracle,
            ok: sweep.min == sweep.max && oracle == expected,
            ..record("bisector-exhaustive", None, None, None)
        });
    }

    if d < 3 {
        return Ok(());
    }
    let mut rows: BTreeMap<&'static str, u64> = TableRow::ALL.iter().map(|r| (r.label(), 0)).collect();
    for t in f.elements() {
        let Some(c2) = fs.witness_center(t) else { continue };
        for r1 in f.elements() {
            for r2 in f.elements() {
                let class = IntersectionClass::classify(&f, t, r1, r2);
                let formula = intersection_size_formula(kind, d, &f, r1, r2, t)? as i64;
                let oracle = fs.sphere_points(0, r1).filter(|&x| fs.on_sphere(c2, r2, x)).count() as i64;
                let profile = fiber_profile(canon, d, &f, r1, r2, t)?;
                let fiber = (q as i64).pow(d as u32 - 2) + profile.excess(canon, d, q);
                let ok = formula == oracle && fiber == formula;
                if ok {
                    *rows.get_mut(class.row.label()).expect("row") += 1;
                }
                report.add_table(TableRecord {
                    row: Some(class.row.label()),
                    formula,
                    oracle,
                    fiber: Some(fiber),
                    ok,
                    ..record("intersection", Some(r1), Some(r2), Some(t))
                });
            }
        }
    }
    let complete = rows.values().all(|&c| c > 0);
    if !complete {
        let missing: Vec<_> = rows.iter().filter(|(_, &c)| c == 0).map(|(k, _)| *k).collect();
        report.warnings.push(format!("q={q} d={d} form={form}: rows never verified: {}", missing.join(", ")));
    }
    report.tally(complete);
    report.coverage.push(CoverageRecord {
        q,
        d,
        form,
        rows,
        complete,
    });
    Ok(())
}

/// Admissible radii for `theorem`, or `None` if it cannot apply to `fs`.
fn radius_pool(theorem: TheoremId, fs: &FormSpace) -> Option<Vec<FieldElement>> {
    let f = fs.field();
    let d = fs.dim();
    let kind = fs.form().kind();
    let canon = fs.form().canonical_kind();
    let nonzero: Vec<FieldElement> = f.nonzero_elements().collect();
    let odd = d % 2 == 1;
    let norm_like = kind == FormKind::Norm || kind == norm_equivalence_class(d, f);
    match theorem {
        TheoremId::Simple | TheoremId::Weighted | TheoremId::DistanceCharacterSum => Some(f.elements().collect()),
        TheoremId::SameRadius | TheoremId::BoundedRadii => norm_like.then_some(nonzero),
        TheoremId::OddSameRadius => odd.then_some(nonzero),
        TheoremId::ZeroRadiusOdd => odd.then(|| vec![FieldElement::ZERO]),
        TheoremId::OddRestricted => odd.then(|| {
            nonzero
                .into_iter()
                .filter(|&r| sign_class(canon, f, r) == Ok(-1))
                .collect()
        }),
        TheoremId::SmallNonzero => (!odd).then_some(nonzero),
        TheoremId::SmallZeroAnisotropic => (canon == FormKind::Q2).then(|| vec![FieldElement::ZERO]),
        TheoremId::SmallZeroSplit => (canon == FormKind::Q1).then(|| vec![FieldElement::ZERO]),
        TheoremId::PseudoRandom | TheoremId::DiscriminantCharacters => None,
    }
}

/// Theorems swept per `(q, d, form)` by `verify-bounds`.
pub const SWEPT_THEOREMS: [TheoremId; 11] = [
    TheoremId::Weighted,
    TheoremId::SameRadius,
    TheoremId::BoundedRadii,
    TheoremId::Simple,
    TheoremId::SmallNonzero,
    TheoremId::SmallZeroAnisotropic,
    TheoremId::SmallZeroSplit,
    TheoremId::OddRestricted,
    TheoremId::ZeroRadiusOdd,
    TheoremId::OddSameRadius,
    TheoremId::DistanceCharacterSum,
];

fn theorem_code(t: TheoremId) -> u64 {
    TheoremId::ALL.iter().position(|&x| x == t).expect("listed") as u64
}

/// One seeded instance for `theorem` on `fs`; all radii satisfy its hypotheses.
pub fn bound_instance(
    theorem: TheoremId,
    fs: &Arc<FormSpace>,
    seed: u64,
    layout: Layout,
    max_points: usize,
    max_spheres: usize,
) -> Option<(PointSet, SphereSet)> {
    let pool = radius_pool(theorem, fs)?;
    if pool.is_empty() {
        return None;
    }
    let mut rng = rng_from_seed(seed);
    let f = fs.field();
    let radii: Vec<FieldElement> = match theorem {
        TheoremId::SameRadius | TheoremId::OddSameRadius => vec![*pool.choose(&mut rng)?],
        TheoremId::Weighted => {
            let r = *pool.choose(&mut rng)?;
            let size = fs.level(r).len();
            f.elements().filter(|&s| fs.level(s).len() == size).collect()
        }
        TheoremId::BoundedRadii | TheoremId::OddRestricted | TheoremId::SmallNonzero | TheoremId::Simple => {
            let k = rng.gen_range(1..=pool.len());
            let mut chosen: Vec<FieldElement> = pool.choose_multiple(&mut rng, k).copied().collect();
            chosen.sort();
            chosen
        }
        _ => pool,
    };
    Some(sample_instance(&mut rng, fs, &radii, layout, max_points, max_spheres))
}

pub fn run_verify_bounds(config: &RunConfig) -> Result<InstanceReport> {
    config.validate()?;
    let mut report = InstanceReport::new(config);
    for (f, d, kind) in config.combos()? {
        let fs = space_for(&f, d, kind, config.enum_cap)?;
        let q = f.order() as u64;
        for theorem in SWEPT_THEOREMS {
            if radius_pool(theorem, &fs).is_none_or(|p| p.is_empty()) {
                continue;
            }
            for trial in 0..config.trials {
                let seed = derive_seed(config.seed, &[theorem_code(theorem), q, d as u64, form_code(kind), trial]);
                let layout = if trial % 2 == 0 { Layout::Uniform } else { Layout::Clustered };
                if theorem == TheoremId::DistanceCharacterSum {
                    let mut rng = rng_from_seed(seed);
                    let n = rng.gen_range(1..=config.max_points.min(fs.space().size() as usize));
                    let centers = sample_points(&mut rng, &fs, n);
                    report.add_bound(char_sum_distances(&centers, &fs, seed)?.1);
                    continue;
                }
                let (p, s) = bound_instance(theorem, &fs, seed, layout, config.max_points, config.max_spheres)
                    .expect("pool is non-empty");
                report.add_bound(check_bound(theorem, &p, &s, &CheckOptions { seed })?);
            }
        }
    }

    let mut lemma_qs = BTreeSet::new();
    for &q in &config.qs {
        lemma_qs.insert(q);
    }
    for q in lemma_qs {
        let check = check_discriminant_lemma(&Field::from_order(q as u64)?);
        report.add_bound(check.report);
    }

    for trial in 0..config.trials {
        let seed = derive_seed(config.seed, &[theorem_code(TheoremId::PseudoRandom), trial]);
        for r in thomason_trial(seed)? {
            report.add_bound(r);
        }
    }
    report.finish();
    Ok(report)
}

/// A random bipartite graph with `|L|, |U| <= 12` and a non-empty density
/// range, checked at both ends of the range.
pub fn thomason_trial(seed: u64) -> Result<Vec<BoundReport>> {
    let mut rng = rng_from_seed(seed);
    loop {
        let left = rng.gen_range(1..=12);
        let right = rng.gen_range(1..=12);
        let density: f64 = rng.gen_range(0.05..1.0);
        let mut g = BipartiteGraph::new(left, right);
        for v in 0..left {
            for u in 0..right {
                g.set_edge(v, u, rng.gen_bool(density));
            }
        }
        let Some((lo, hi)) = g.admissible_p() else { continue };
        let subset: Vec<usize> = (0..right).filter(|_| rng.gen_bool(0.5)).collect();
        let mut out = Vec::with_capacity(2);
        for p in [lo, hi] {
            let mut r = check_thomason(&g, &p, &subset)?;
            r.seed = seed;
            out.push(r);
        }
        return Ok(out);
    }
}

fn build(kind: ConstructionKind, field: &Arc<Field>, d: usize, form: FormKind, cap: u64) -> Result<ConstructionResult> {
    match kind {
        ConstructionKind::SinglePoint => {
            let fs = space_for(field, d, form, cap)?;
            build_single_point(&fs, &vec![FieldElement::ZERO; d])
        }
        ConstructionKind::Isotropic => build_isotropic(field.clone(), d, cap),
        ConstructionKind::OddCritical => build_odd_critical(field.clone(), d, form, cap),
    }
}

fn export_path(base: &Path, suffix: &str, many: bool) -> PathBuf {
    if !many {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("txt");
    base.with_file_name(format!("{stem}-{suffix}.{ext}"))
}

pub fn run_construct(config: &RunConfig) -> Result<InstanceReport> {
    config.validate()?;
    let which = config.which.expect("validated");
    let mut jobs = Vec::new();
    for &q in &config.qs {
        let f = Arc::new(Field::from_order(q as u64)?);
        for &d in &config.ds {
            let forms: Vec<FormKind> = match which {
                ConstructionKind::Isotropic => {
                    if d % 2 == 1 {
                        return Err(Error::ParityMismatch { kind: FormKind::Q1, dim: d });
                    }
                    vec![FormKind::Q1]
                }
                ConstructionKind::OddCritical => {
                    if d % 2 == 0 {
                        return Err(Error::ParityMismatch { kind: FormKind::Q3, dim: d });
                    }
                    let odd: Vec<FormKind> = config
                        .forms
                        .iter()
                        .copied()
                        .filter(|k| matches!(k, FormKind::Q3 | FormKind::Q4))
                        .collect();
                    if odd.is_empty() {
                        vec![FormKind::Q3, FormKind::Q4]
                    } else {
                        odd
                    }
                }
                ConstructionKind::SinglePoint => {
                    config.forms.iter().copied().filter(|k| k.allows_dim(d)).collect()
                }
            };
            for form in forms {
                if !jobs.iter().any(|(g, e, k): &(Arc<Field>, usize, FormKind)| g.order() == q && *e == d && *k == form) {
                    jobs.push((f.clone(), d, form));
                }
            }
        }
    }
    if jobs.is_empty() {
        return Err(Error::Config("no form matches the requested dimensions".into()));
    }
    let mut report = InstanceReport::new(config);
    let many = jobs.len() > 1;
    for (f, d, form) in jobs {
        let c = build(which, &f, d, form, config.enum_cap)?;
        let eval = evaluate_construction(&c)?;
        for w in &eval.warnings {
            report
                .warnings
                .push(format!("{which} q={} d={d} form={form}: {w}", f.order()));
        }
        report.tally(eval.simple_bound_holds);
        if let Some(base) = &config.export {
            let path = export_path(base, &format!("q{}-d{d}-{form}", f.order()), many);
            let header = format!("{which} construction\n{}", c.notes);
            std::fs::write(&path, format_instance(&c.points, &c.spheres, &header))?;
        }
        report.constructions.push(eval);
    }
    Ok(report)
}

fn simple_ceiling_ok(dev: &BigRational, q: u32, d: usize, n: usize, m: usize) -> bool {
    let bound = int(q as u64).pow(d as i32) * int(n as u64) * int(m as u64);
    exact::le_sqrt(dev, &bound)
}

fn simple_ratio(dev: &BigRational, q: u32, d: usize, n: usize, m: usize) -> f64 {
    let bound = (q as f64).powi(d as i32) * n as f64 * m as f64;
    exact::ratio(exact::to_f64(dev), bound.sqrt())
}

/// Hill-climb on the simple-bound ratio from the single-point construction.
pub fn search_combo(fs: &Arc<FormSpace>, seed: u64, steps: u64) -> Result<SearchRecord> {
    let f = fs.field().clone();
    let q = f.order();
    let d = fs.dim();
    let ps = fs.space();
    let start = build_single_point(fs, &vec![FieldElement::ZERO; d])?;
    let mut points: Vec<u32> = start.points.ids().to_vec();
    let mut spheres: Vec<SphereKey> = start.spheres.keys().to_vec();
    let (n, m) = (points.len(), spheres.len());
    let mut current = deviation(&start.points, &start.spheres)?;
    let initial_ratio = simple_ratio(&current, q, d, n, m);
    let mut ceiling_ok = simple_ceiling_ok(&current, q, d, n, m);
    let mut best = (current.clone(), points.clone(), spheres.clone());
    let mut accepted = 0;
    let mut rng = rng_from_seed(seed);
    let mut point_set: HashSet<u32> = points.iter().copied().collect();
    let mut sphere_set: HashSet<SphereKey> = spheres.iter().copied().collect();
    let total_spheres = ps.size() as u64 * q as u64;
    for _ in 0..steps {
        let move_point = rng.gen_bool(0.5) && (n as u64) < ps.size() as u64;
        let move_sphere = !move_point && (m as u64) < total_spheres;
        let (mut new_points, mut new_spheres) = (points.clone(), spheres.clone());
        if move_point {
            let i = rng.gen_range(0..n);
            let x = loop {
                let x = rng.gen_range(0..ps.size());
                if !point_set.contains(&x) {
                    break x;
                }
            };
            new_points[i] = x;
        } else if move_sphere {
            let j = rng.gen_range(0..m);
            let s = loop {
                let s = SphereKey::new(rng.gen_range(0..ps.size()), f.element(rng.gen_range(0..q as u64))?);
                if !sphere_set.contains(&s) {
                    break s;
                }
            };
            new_spheres[j] = s;
        } else {
            continue;
        }
        let p = PointSet::new(ps, new_points.clone())?;
        let s = SphereSet::new(fs.clone(), new_spheres.clone())?;
        let dev = deviation(&p, &s)?;
        ceiling_ok &= simple_ceiling_ok(&dev, q, d, n, m);
        if dev >= current {
            accepted += 1;
            points = new_points;
            spheres = new_spheres;
            point_set = points.iter().copied().collect();
            sphere_set = spheres.iter().copied().collect();
            if dev > best.0 {
                best = (dev.clone(), points.clone(), spheres.clone());
            }
            current = dev;
        }
    }
    Ok(SearchRecord {
        q,
        d,
        form: fs.form().kind().as_str(),
        seed,
        steps,
        accepted,
        initial_ratio,
        best_ratio: simple_ratio(&best.0, q, d, n, m),
        best_deviation: exact::format_rational(&best.0),
        ceiling_ok,
        best_points: best.1,
        best_spheres: best.2.iter().map(|s| (s.center, s.radius.index())).collect(),
    })
}

pub fn run_search(config: &RunConfig) -> Result<InstanceReport> {
    config.validate()?;
    let mut report = InstanceReport::new(config);
    let combos = config.combos()?;
    let many = combos.len() > 1;
    for (f, d, kind) in combos {
        let fs = space_for(&f, d, kind, config.enum_cap)?;
        let seed = derive_seed(config.seed, &[0x5EA2C4, f.order() as u64, d as u64, form_code(kind)]);
        let rec = search_combo(&fs, seed, config.steps)?;
        report.tally(rec.ceiling_ok);
        if !rec.ceiling_ok {
            report
                .warnings
                .push(format!("search q={} d={d} form={kind}: simple bound exceeded", f.order()));
        }
        if let Some(base) = &config.export {
            let p = PointSet::new(fs.space(), rec.best_points.clone())?;
            let keys = rec
                .best_spheres
                .iter()
                .map(|&(c, r)| SphereKey::new(c, FieldElement::from_index(r)))
                .collect();
            let s = SphereSet::new(fs.clone(), keys)?;
            let path = export_path(base, &format!("q{}-d{d}-{kind}", f.order()), many);
            std::fs::write(&path, format_instance(&p, &s, &format!("search best, ratio {}", rec.best_ratio)))?;
        }
        report.searches.push(rec);
    }
    Ok(report)
}

pub fn run(config: &RunConfig) -> Result<InstanceReport> {
    match config.command {
        Command::VerifyTables => run_verify_tables(config),
        Command::VerifyBounds => run_verify_bounds(config),
        Command::Construct => run_construct(config),
        Command::Search => run_search(config),
    }
}

const BOUND_HEADER: [&str; 12] = [
    "theorem", "q", "d", "form", "n_points", "n_spheres", "lhs", "rhs", "ratio", "holds", "hypotheses_met", "seed",
];
const TABLE_HEADER: [&str; 12] = [
    "check", "q", "d", "form", "r1", "r2", "t", "row", "formula", "oracle", "fiber", "ok",
];

#[derive(Serialize)]
struct ConstructionRow<'a> {
    construction: &'static str,
    q: u32,
    d: usize,
    form: &'static str,
    n_points: usize,
    n_spheres: usize,
    incidences: u64,
    claimed_incidences: Option<u64>,
    deviation: &'a str,
    bound: f64,
    deviation_ratio: f64,
    incidence_ratio: f64,
    simple_bound_holds: bool,
}
const CONSTRUCTION_HEADER: [&str; 13] = [
    "construction", "q", "d", "form", "n_points", "n_spheres", "incidences", "claimed_incidences", "deviation",
    "bound", "deviation_ratio", "incidence_ratio", "simple_bound_holds",
];

#[derive(Serialize)]
struct SearchRow<'a> {
    q: u32,
    d: usize,
    form: &'static str,
    seed: u64,
    steps: u64,
    accepted: u64,
    initial_ratio: f64,
    best_ratio: f64,
    best_deviation: &'a str,
    ceiling_ok: bool,
}
const SEARCH_HEADER: [&str; 10] = [
    "q", "d", "form", "seed", "steps", "accepted", "initial_ratio", "best_ratio", "best_deviation", "ceiling_ok",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn emit_csv(report: &InstanceReport) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    match report.command {
        "verify-tables" => {
            w.write_record(TABLE_HEADER).map_err(csv_err)?;
            for r in &report.tables {
                w.serialize(r).map_err(csv_err)?;
            }
        }
        "construct" => {
            w.write_record(CONSTRUCTION_HEADER).map_err(csv_err)?;
            for c in &report.constructions {
                w.serialize(ConstructionRow {
                    construction: c.construction.as_str(),
                    q: c.q,
                    d: c.d,
                    form: c.form,
                    n_points: c.n_points,
                    n_spheres: c.n_spheres,
                    incidences: c.incidences,
                    claimed_incidences: c.claimed_incidences,
                    deviation: &c.deviation,
                    bound: c.bound,
                    deviation_ratio: c.deviation_ratio,
                    incidence_ratio: c.incidence_ratio,
                    simple_bound_holds: c.simple_bound_holds,
                })
                .map_err(csv_err)?;
            }
        }
        "search" => {
            w.write_record(SEARCH_HEADER).map_err(csv_err)?;
            for s in &report.searches {
                w.serialize(SearchRow {
                    q: s.q,
                    d: s.d,
                    form: s.form,
                    seed: s.seed,
                    steps: s.steps,
                    accepted: s.accepted,
                    initial_ratio: s.initial_ratio,
                    best_ratio: s.best_ratio,
                    best_deviation: &s.best_deviation,
                    ceiling_ok: s.ceiling_ok,
                })
                .map_err(csv_err)?;
            }
        }
        _ => {
            w.write_record(BOUND_HEADER).map_err(csv_err)?;
            for r in &report.reports {
                let rec: BoundRecord = r.record();
                w.serialize(rec).map_err(csv_err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn emit_text(report: &InstanceReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "qsphere {} (version {})", report.command, report.version);
    let cfg: Vec<String> = report.config.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let _ = writeln!(s, "config: {}", cfg.join(" "));
    let _ = writeln!(
        s,
        "checked {} passed {} failed {} skipped {}",
        report.checked, report.passed, report.failed, report.skipped
    );
    for c in &report.coverage {
        let rows: Vec<String> = c.rows.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        let _ = writeln!(s, "coverage q={} d={} form={} {}", c.q, c.d, c.form, rows.join(" "));
    }
    for t in report.tables.iter().filter(|t| !t.ok) {
        let _ = writeln!(
            s,
            "[FAIL] {} q={} d={} form={} r1={:?} r2={:?} t={:?} formula={} oracle={}",
            t.check, t.q, t.d, t.form, t.r1, t.r2, t.t, t.formula, t.oracle
        );
    }
    for r in &report.reports {
        let tag = match (r.hypotheses_met, r.holds) {
            (false, _) => "SKIP",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "[{tag}] {} q={} d={} form={} |P|={} |S|={} lhs={} rhs={} ratio={:.6} seed={}",
            r.theorem,
            opt(r.q.map(|v| v.to_string())),
            opt(r.d.map(|v| v.to_string())),
            opt(r.form.map(|v| v.to_string())),
            r.n_points,
            r.n_spheres,
            exact::format_rational(&r.lhs),
            r.rhs,
            r.ratio,
            r.seed
        );
    }
    for c in &report.constructions {
        let _ = writeln!(
            s,
            "{} q={} d={} form={} |P|={} |S|={} I={} deviation={} bound={:.6} deviation_ratio={:.6} incidence_ratio={:.6}",
            c.construction, c.q, c.d, c.form, c.n_points, c.n_spheres, c.incidences, c.deviation, c.bound,
            c.deviation_ratio, c.incidence_ratio
        );
    }
    for r in &report.searches {
        let _ = writeln!(
            s,
            "search q={} d={} form={} steps={} accepted={} initial_ratio={:.6} best_ratio={:.6} ceiling_ok={}",
            r.q, r.d, r.form, r.steps, r.accepted, r.initial_ratio, r.best_ratio, r.ceiling_ok
        );
    }
    for (k, v) in &report.max_ratio {
        let _ = writeln!(s, "max ratio {k}: {v:.6}");
    }
    for w in &report.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

/// Serializes `report`. Identical reports give identical bytes.
pub fn emit_report(report: &InstanceReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Csv => emit_csv(report),
        OutputFormat::Text => Ok(emit_text(report)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(command: Command) -> RunConfig {
        RunConfig::new(command)
    }

    #[test]
    fn config_validation() {
        let mut c = config(Command::VerifyBounds);
        c.apply("trials", "0").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = config(Command::VerifyTables);
        c.apply("q", "4").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = config(Command::VerifyTables);
        c.apply("enum-cap", "100").unwrap();
        c.apply("q", "5").unwrap();
        c.apply("d", "3").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        assert!(matches!(config(Command::Construct).validate(), Err(Error::Config(_))));
        assert!(c.apply("colour", "blue").is_err());
    }

    #[test]
    fn config_file_lines() {
        let kv = parse_config_file("# comment\nq = 3,5\n\n--seed=7\n").unwrap();
        assert_eq!(kv, vec![("q".to_string(), "3,5".to_string()), ("seed".to_string(), "7".to_string())]);
        assert!(parse_config_file("oops").is_err());
    }

    #[test]
    fn empty_report_json() {
        let c = config(Command::VerifyBounds);
        let r = InstanceReport::new(&c);
        let v: serde_json::Value = serde_json::from_str(&emit_report(&r, OutputFormat::Json).unwrap()).unwrap();
        assert_eq!(v["reports"], serde_json::json!([]));
        for k in ["checked", "passed", "failed", "skipped"] {
            assert_eq!(v[k], 0);
        }
        for k in ["command", "version", "config"] {
            assert!(v.get(k).is_some());
        }
    }

    #[test]
    fn verify_tables_small() {
        let mut c = config(Command::VerifyTables);
        c.apply("q", "3").unwrap();
        c.apply("d", "3,4").unwrap();
        let r = run_verify_tables(&c).unwrap();
        assert_eq!(r.failed, 0);
        assert!(r.coverage.iter().all(|c| c.complete));
        assert_eq!(r.coverage.len(), 6);
    }

    #[test]
    fn verify_bounds_small() {
        let mut c = config(Command::VerifyBounds);
        c.apply("q", "3").unwrap();
        c.apply("d", "2,3").unwrap();
        c.apply("trials", "5").unwrap();
        let r = run_verify_bounds(&c).unwrap();
        assert_eq!(r.failed, 0);
        assert!(r.checked > 0);
        let csv = emit_report(&r, OutputFormat::Csv).unwrap();
        assert_eq!(csv.lines().count(), r.reports.len() + 1);
        assert!(csv.starts_with("theorem,q,d,form,"));
    }

    #[test]
    fn construct_and_search() {
        let mut c = config(Command::Construct);
        c.apply("which", "isotropic").unwrap();
        c.apply("d", "4").unwrap();
        let r = run_construct(&c).unwrap();
        assert_eq!(r.constructions.len(), 1);
        assert!((r.constructions[0].deviation_ratio - 2.0 / 3.0).abs() < 1e-12);
        c.apply("d", "3").unwrap();
        assert!(matches!(run_construct(&c), Err(Error::ParityMismatch { .. })));

        let mut s = config(Command::Search);
        s.apply("forms", "Q1").unwrap();
        s.apply("seed", "7").unwrap();
        let a = run_search(&s).unwrap();
        let b = run_search(&s).unwrap();
        assert_eq!(a.searches, b.searches);
        let rec = &a.searches[0];
        assert!(rec.ceiling_ok && rec.best_ratio >= rec.initial_ratio);
        assert!((rec.initial_ratio - 2.0 / 3.0).abs() < 1e-12);
        assert!(rec.best_ratio <= 1.0);
    }
}
