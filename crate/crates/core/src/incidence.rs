//! Point-sphere incidences and exact checks of the incidence bounds.
//!
//! All inequalities are decided in rational arithmetic. Right sides with
//! square roots are compared after squaring (see [`crate::exact`]); the
//! floating-point `ratio` in a [`BoundReport`] is for reading only.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{self, int};
use crate::field::{Field, FieldElement};
use crate::forms::{norm_equivalence_class, FormKind};
use crate::geometry::{discriminant, sign_class, FormSpace, Point, PointSpace, Sphere};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    q: u32,
    dim: usize,
    ids: Vec<u32>,
}

impl PointSet {
    pub fn new(space: &PointSpace, ids: Vec<u32>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(ids.len());
        for &id in &ids {
            if id >= space.size() {
                return Err(Error::InvalidElement {
                    index: id as u64,
                    q: space.size(),
                });
            }
            if !seen.insert(id) {
                return Err(Error::Duplicate);
            }
        }
        Ok(PointSet {
            q: space.field().order(),
            dim: space.dim(),
            ids,
        })
    }

    pub fn empty(space: &PointSpace) -> Self {
        PointSet {
            q: space.field().order(),
            dim: space.dim(),
            ids: Vec::new(),
        }
    }

    pub fn from_points(space: &PointSpace, points: &[Point]) -> Result<Self> {
        let ids = points
            .iter()
            .map(|p| space.encode(p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, ids)
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self, space: &PointSpace) -> Vec<Point> {
        self.ids.iter().map(|&i| space.decode(i)).collect()
    }
}

/// A sphere addressed by its center index and radius.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SphereKey {
    pub center: u32,
    pub radius: FieldElement,
}

impl SphereKey {
    pub fn new(center: u32, radius: FieldElement) -> Self {
        SphereKey { center, radius }
    }
}

#[derive(Clone, Debug)]
pub struct SphereSet {
    space: Arc<FormSpace>,
    spheres: Vec<SphereKey>,
}

impl SphereSet {
    pub fn new(space: Arc<FormSpace>, spheres: Vec<SphereKey>) -> Result<Self> {
        let q = space.field().order();
        let n = space.space().size();
        let mut seen = HashSet::with_capacity(spheres.len());
        for s in &spheres {
            if s.center >= n || s.radius.index() >= q {
                return Err(Error::InvalidElement {
                    index: s.center as u64,
                    q: n,
                });
            }
            if !seen.insert(*s) {
                return Err(Error::Duplicate);
            }
        }
        Ok(SphereSet { space, spheres })
    }

    pub fn empty(space: Arc<FormSpace>) -> Self {
        SphereSet {
            space,
            spheres: Vec::new(),
        }
    }

    pub fn from_spheres(space: Arc<FormSpace>, spheres: &[Sphere]) -> Result<Self> {
        let keys = spheres
            .iter()
            .map(|s| {
                if **s.form() != **space.form() {
                    return Err(Error::FormMismatch);
                }
                Ok(SphereKey::new(space.space().encode(s.center())?, s.radius()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, keys)
    }

    pub fn space(&self) -> &Arc<FormSpace> {
        &self.space
    }

    pub fn keys(&self) -> &[SphereKey] {
        &self.spheres
    }

    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    pub fn sphere(&self, i: usize) -> Sphere {
        let k = self.spheres[i];
        self.space.sphere(k.center, k.radius)
    }

    pub fn radii(&self) -> BTreeSet<FieldElement> {
        self.spheres.iter().map(|s| s.radius).collect()
    }

    /// Distinct centers in first-seen order.
    pub fn centers(&self) -> Vec<u32> {
        let mut seen = HashSet::new();
        self.spheres
            .iter()
            .map(|s| s.center)
            .filter(|c| seen.insert(*c))
            .collect()
    }

    fn size_of(&self, s: &SphereKey) -> usize {
        self.space.level(s.radius).len()
    }
}

fn ensure_compatible(points: &PointSet, spheres: &SphereSet) -> Result<()> {
    let sp = spheres.space();
    if points.dim != sp.dim() {
        return Err(Error::DimensionMismatch {
            expected: sp.dim(),
            got: points.dim,
        });
    }
    if points.q != sp.field().order() {
        return Err(Error::FormMismatch);
    }
    Ok(())
}

/// `I(P, S)`: the number of pairs `(x, s)` with `x` on `s`.
pub fn count_incidences(points: &PointSet, spheres: &SphereSet) -> Result<u64> {
    ensure_compatible(points, spheres)?;
    let fs = spheres.space();
    let sphere_work: usize = spheres.keys().iter().map(|s| spheres.size_of(s)).sum();
    let pair_work = points.len() * spheres.len();
    if pair_work <= sphere_work + fs.space().size() as usize {
        let mut count = 0u64;
        for s in spheres.keys() {
            for &x in points.ids() {
                if fs.on_sphere(s.center, s.radius, x) {
                    count += 1;
                }
            }
        }
        Ok(count)
    } else {
        let mut member = vec![false; fs.space().size() as usize];
        for &x in points.ids() {
            member[x as usize] = true;
        }
        Ok(spheres
            .keys()
            .iter()
            .map(|s| {
                fs.sphere_points(s.center, s.radius)
                    .filter(|&x| member[x as usize])
                    .count() as u64
            })
            .sum())
    }
}

/// `|I(P, S) - |P||S|/q|`, exactly.
pub fn deviation(points: &PointSet, spheres: &SphereSet) -> Result<BigRational> {
    let i = count_incidences(points, spheres)?;
    let q = spheres.space().field().order();
    Ok(deviation_from_count(i, points.len(), spheres.len(), q))
}

fn deviation_from_count(i: u64, n: usize, m: usize, q: u32) -> BigRational {
    let expected = BigRational::new((n as u64 * m as u64).into(), q.into());
    exact::abs(int(i) - expected)
}

/// `Σ_{s1 != s2} |s1 ∩ s2|` over ordered pairs, from how many spheres of
/// `S` pass through each point of the space.
pub fn pair_intersection_total(spheres: &SphereSet) -> u64 {
    let fs = spheres.space();
    let mut degree = vec![0u32; fs.space().size() as usize];
    let mut total_size = 0u64;
    for s in spheres.keys() {
        for x in fs.sphere_points(s.center, s.radius) {
            degree[x as usize] += 1;
        }
        total_size += spheres.size_of(s) as u64;
    }
    let squares: u64 = degree.iter().map(|&k| k as u64 * k as u64).sum();
    squares - total_size
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoremId {
    /// Pseudo-random bipartite graph inequality.
    PseudoRandom,
    /// Weighted bound for spheres of one common size.
    Weighted,
    /// Sum-of-squares spheres of one non-zero radius.
    SameRadius,
    /// Sum-of-squares spheres with radii in a set of non-zero radii.
    BoundedRadii,
    /// Any form, arbitrary radii.
    Simple,
    /// Even dimension, non-zero radii.
    SmallNonzero,
    /// Even dimension, `Q2`, zero radii.
    SmallZeroAnisotropic,
    /// Even dimension, `Q1`, zero radii.
    SmallZeroSplit,
    /// Odd dimension, radii with sign class -1.
    OddRestricted,
    /// Odd dimension, zero radii.
    ZeroRadiusOdd,
    /// Odd dimension, one non-zero radius.
    OddSameRadius,
    /// Character sum of the distances within a set.
    DistanceCharacterSum,
    /// `D = 0` forces equal characters.
    DiscriminantCharacters,
}

impl TheoremId {
    pub const ALL: [TheoremId; 13] = [
        TheoremId::PseudoRandom,
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
        TheoremId::DiscriminantCharacters,
    ];

    /// Wire name used in reports and on the command line.
    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::PseudoRandom => "THOMASON_2_1",
            TheoremId::Weighted => "WEIGHTED_2_3",
            TheoremId::SameRadius => "IR_1_1",
            TheoremId::BoundedRadii => "MULTI_1_2",
            TheoremId::Simple => "SIMPLE_1_3",
            TheoremId::SmallNonzero => "SMALL_S_1_9a",
            TheoremId::SmallZeroAnisotropic => "SMALL_S_1_9b",
            TheoremId::SmallZeroSplit => "SMALL_S_1_9c",
            TheoremId::OddRestricted => "ODD_RESTRICTED_1_12",
            TheoremId::ZeroRadiusOdd => "ZERO_ODD_4_3",
            TheoremId::OddSameRadius => "NEW_IR_4_5",
            TheoremId::DistanceCharacterSum => "CHAR_SUM_4_2",
            TheoremId::DiscriminantCharacters => "D_ETA_4_4",
        }
    }

    pub fn is_small_set(self) -> bool {
        matches!(
            self,
            TheoremId::SmallNonzero | TheoremId::SmallZeroAnisotropic | TheoremId::SmallZeroSplit
        )
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown theorem id '{s}'")))
    }
}

impl Serialize for TheoremId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rhs {
    Exact(BigRational),
    /// An irrational bound; the decision was made exactly, this value is
    /// only for display.
    Irrational(f64),
    /// The check was skipped.
    NotApplicable,
}

impl Rhs {
    pub fn to_f64(&self) -> f64 {
        match self {
            Rhs::Exact(r) => exact::to_f64(r),
            Rhs::Irrational(v) => *v,
            Rhs::NotApplicable => f64::NAN,
        }
    }
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Exact(r) => f.write_str(&exact::format_rational(r)),
            Rhs::Irrational(v) => write!(f, "{v:.9}"),
            Rhs::NotApplicable => f.write_str("n/a"),
        }
    }
}

/// Outcome of one inequality check.
///
/// For the small-set theorems `holds` is the exact weighted inequality on
/// the same instance, while `lhs`, `rhs` and `ratio` describe the small-set
/// bound without its `1 + o(1)` factor, which has no explicit constant.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub theorem: TheoremId,
    pub q: Option<u32>,
    pub d: Option<usize>,
    pub form: Option<FormKind>,
    pub n_points: usize,
    pub n_spheres: usize,
    pub lhs: BigRational,
    pub rhs: Rhs,
    pub ratio: f64,
    pub hypotheses_met: bool,
    pub holds: bool,
    pub seed: u64,
    pub note: Option<String>,
}

/// Flat, serializable view of a [`BoundReport`].
#[derive(Serialize)]
pub struct BoundRecord {
    pub theorem: &'static str,
    pub q: Option<u32>,
    pub d: Option<usize>,
    pub form: Option<&'static str>,
    pub n_points: usize,
    pub n_spheres: usize,
    pub lhs: String,
    pub rhs: String,
    pub ratio: f64,
    pub holds: bool,
    pub hypotheses_met: bool,
    pub seed: u64,
}

impl BoundReport {
    fn new(theorem: TheoremId, fs: Option<&FormSpace>, n_points: usize, n_spheres: usize, seed: u64) -> Self {
        BoundReport {
            theorem,
            q: fs.map(|f| f.field().order()),
            d: fs.map(|f| f.dim()),
            form: fs.map(|f| f.form().kind()),
            n_points,
            n_spheres,
            lhs: BigRational::zero(),
            rhs: Rhs::NotApplicable,
            ratio: 0.0,
            hypotheses_met: true,
            holds: false,
            seed,
            note: None,
        }
    }

    fn skipped(mut self, reason: impl Into<String>) -> Self {
        self.hypotheses_met = false;
        self.holds = false;
        self.note = Some(reason.into());
        self
    }

    fn decided(mut self, lhs: BigRational, rhs: Rhs, holds: bool) -> Self {
        self.ratio = exact::ratio(exact::to_f64(&lhs), rhs.to_f64());
        self.lhs = lhs;
        self.rhs = rhs;
        self.holds = holds;
        self
    }

    pub fn record(&self) -> BoundRecord {
        BoundRecord {
            theorem: self.theorem.as_str(),
            q: self.q,
            d: self.d,
            form: self.form.map(FormKind::as_str),
            n_points: self.n_points,
            n_spheres: self.n_spheres,
            lhs: exact::format_rational(&self.lhs),
            rhs: self.rhs.to_string(),
            ratio: self.ratio,
            holds: self.holds,
            hypotheses_met: self.hypotheses_met,
            seed: self.seed,
        }
    }

    /// A report that counts as a failure: hypotheses met, inequality false.
    pub fn is_violation(&self) -> bool {
        self.hypotheses_met && !self.holds
    }
}

impl Serialize for BoundReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.record().serialize(s)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CheckOptions {
    pub seed: u64,
}

fn qpow(q: u32, e: usize) -> BigRational {
    int(q as u64).pow(e as i32)
}

fn sqrt_f64(r: &BigRational) -> f64 {
    exact::to_f64(r).sqrt()
}

/// Hypotheses of `theorem` for the sphere family, `Err(reason)` if unmet.
fn hypotheses(theorem: TheoremId, spheres: &SphereSet) -> std::result::Result<(), String> {
    let fs = spheres.space();
    let f = fs.field();
    let d = fs.dim();
    let kind = fs.form().kind();
    let canon = fs.form().canonical_kind();
    let keys = spheres.keys();
    let all = |pred: &dyn Fn(FieldElement) -> bool| keys.iter().all(|s| pred(s.radius));
    let same_radius = keys.windows(2).all(|w| w[0].radius == w[1].radius);
    let norm_like = kind == FormKind::Norm || kind == norm_equivalence_class(d, f);
    let fail = |cond: bool, why: &str| if cond { Ok(()) } else { Err(why.to_string()) };
    match theorem {
        TheoremId::Simple => Ok(()),
        TheoremId::SameRadius => {
            fail(norm_like, "form is not equivalent to the sum of squares")?;
            fail(same_radius && all(&|r| !r.is_zero()), "radii must be one non-zero value")
        }
        TheoremId::BoundedRadii => {
            fail(norm_like, "form is not equivalent to the sum of squares")?;
            fail(all(&|r| !r.is_zero()), "radii must be non-zero")
        }
        TheoremId::SmallNonzero => {
            fail(d % 2 == 0, "dimension must be even")?;
            fail(all(&|r| !r.is_zero()), "radii must be non-zero")
        }
        TheoremId::SmallZeroAnisotropic => {
            fail(canon == FormKind::Q2, "form must be Q2")?;
            fail(all(&|r| r.is_zero()), "radii must be zero")
        }
        TheoremId::SmallZeroSplit => {
            fail(canon == FormKind::Q1, "form must be Q1")?;
            fail(all(&|r| r.is_zero()), "radii must be zero")
        }
        TheoremId::OddRestricted => {
            fail(d % 2 == 1, "dimension must be odd")?;
            fail(
                all(&|r| !r.is_zero() && sign_class(canon, f, r) == Ok(-1)),
                "radii must be non-zero with sign class -1",
            )
        }
        TheoremId::ZeroRadiusOdd => {
            fail(d % 2 == 1, "dimension must be odd")?;
            fail(all(&|r| r.is_zero()), "radii must be zero")
        }
        TheoremId::OddSameRadius => {
            fail(d % 2 == 1, "dimension must be odd")?;
            fail(same_radius && all(&|r| !r.is_zero()), "radii must be one non-zero value")
        }
        TheoremId::Weighted => {
            let sizes: BTreeSet<usize> = keys.iter().map(|s| spheres.size_of(s)).collect();
            fail(sizes.len() <= 1, "spheres differ in size")
        }
        TheoremId::PseudoRandom
        | TheoremId::DistanceCharacterSum
        | TheoremId::DiscriminantCharacters => Err("not a point-sphere bound".to_string()),
    }
}

/// Both sides of the weighted inequality for spheres of size `q^{d-1} + excess`.
pub fn weighted_sides(points: &PointSet, spheres: &SphereSet, excess: i64) -> Result<(BigRational, BigRational)> {
    let fs = spheres.space();
    let q = fs.field().order();
    let d = fs.dim();
    let i = count_incidences(points, spheres)?;
    let n = int(points.len() as u64);
    let m = int(spheres.len() as u64);
    let size = qpow(q, d - 1) + int(excess);
    let qd = qpow(q, d);
    let p = &size / &qd;
    let dev = int(i) - &p * &n * &m;
    let lhs = &dev * &dev;
    let pairs = int(pair_intersection_total(spheres));
    let ordered = &m * (&m - int(1));
    let rhs = &n * (pairs - ordered * &qd * &p * &p) + &n * &m * &size;
    Ok((lhs, rhs))
}

/// The weighted inequality, with every sphere required to have size
/// `q^{d-1} + excess`.
pub fn check_general_weighted(points: &PointSet, spheres: &SphereSet, excess: i64) -> Result<BoundReport> {
    ensure_compatible(points, spheres)?;
    let fs = spheres.space();
    let want = (fs.field().order() as i64).pow(fs.dim() as u32 - 1) + excess;
    if spheres.keys().iter().any(|s| spheres.size_of(s) as i64 != want) {
        return Err(Error::MixedSphereSizes);
    }
    let (lhs, rhs) = weighted_sides(points, spheres, excess)?;
    let holds = lhs <= rhs;
    Ok(BoundReport::new(TheoremId::Weighted, Some(fs), points.len(), spheres.len(), 0)
        .decided(lhs, Rhs::Exact(rhs), holds))
}

fn common_excess(spheres: &SphereSet) -> i64 {
    let fs = spheres.space();
    let base = (fs.field().order() as i64).pow(fs.dim() as u32 - 1);
    spheres
        .keys()
        .first()
        .map_or(0, |s| spheres.size_of(s) as i64 - base)
}

/// Checks one point-sphere bound on `(P, S)`.
///
/// Unmet hypotheses give a report with `hypotheses_met = false` rather than
/// an error.
pub fn check_bound(
    theorem: TheoremId,
    points: &PointSet,
    spheres: &SphereSet,
    options: &CheckOptions,
) -> Result<BoundReport> {
    ensure_compatible(points, spheres)?;
    let fs = spheres.space();
    let report = BoundReport::new(theorem, Some(fs), points.len(), spheres.len(), options.seed);
    if let Err(reason) = hypotheses(theorem, spheres) {
        return Ok(report.skipped(reason));
    }
    if theorem == TheoremId::Weighted {
        let (lhs, rhs) = weighted_sides(points, spheres, common_excess(spheres))?;
        let holds = lhs <= rhs;
        return Ok(report.decided(lhs, Rhs::Exact(rhs), holds));
    }

    let q = fs.field().order();
    let d = fs.dim();
    let i = count_incidences(points, spheres)?;
    let dev = deviation_from_count(i, points.len(), spheres.len(), q);
    let n = int(points.len() as u64);
    let m = int(spheres.len() as u64);
    let nm = &n * &m;

    // (bound squared, decision) for bounds of the form c * sqrt(stuff)
    let sqrt_bound = |squared: BigRational| {
        let holds = exact::le_sqrt(&dev, &squared);
        (Rhs::Irrational(sqrt_f64(&squared)), holds)
    };
    let (rhs, holds) = match theorem {
        TheoremId::SameRadius => sqrt_bound(int(4) * qpow(q, d - 1) * &nm),
        TheoremId::BoundedRadii => {
            let radii = int(spheres.radii().len() as u64);
            sqrt_bound(int(4) * qpow(q, d - 1) * radii * &nm)
        }
        TheoremId::Simple => sqrt_bound(qpow(q, d) * &nm),
        TheoremId::OddSameRadius => sqrt_bound(int(9) * qpow(q, d - 1) * &nm),
        TheoremId::OddRestricted => {
            let a = qpow(q, d - 1) * &nm;
            let b = int(3) * qpow(q, (d - 3) / 2) * &n * &m * &m;
            let holds = exact::le_sqrt_sum(&dev, &a, &b);
            (Rhs::Irrational(sqrt_f64(&a) + sqrt_f64(&b)), holds)
        }
        TheoremId::ZeroRadiusOdd => {
            let c = qpow(q, d - 1) * &nm;
            let holds = exact::le_sqrt_one_plus_sqrt2(&dev, &c);
            let shown = ((1.0 + 2f64.sqrt()) * exact::to_f64(&c)).sqrt();
            (Rhs::Irrational(shown), holds)
        }
        TheoremId::SmallNonzero | TheoremId::SmallZeroAnisotropic | TheoremId::SmallZeroSplit => {
            let (wl, wr) = weighted_sides(points, spheres, common_excess(spheres))?;
            let pair_power = if theorem == TheoremId::SmallZeroSplit {
                qpow(q, d / 2)
            } else {
                qpow(q, d / 2 - 1)
            };
            let inner = &n * (qpow(q, d - 1) * &m + pair_power * &m * &m);
            (Rhs::Irrational(sqrt_f64(&inner)), wl <= wr)
        }
        TheoremId::Weighted
        | TheoremId::PseudoRandom
        | TheoremId::DistanceCharacterSum
        | TheoremId::DiscriminantCharacters => unreachable!("filtered by hypotheses"),
    };
    Ok(report.decided(dev, rhs, holds))
}

/// `Σ_{x,y ∈ C} η(Q(x - y))` and the check `|value| <= sqrt(2) q^{(d+1)/2} |C|`.
pub fn char_sum_distances(centers: &PointSet, space: &FormSpace, seed: u64) -> Result<(i64, BoundReport)> {
    if centers.dim != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: centers.dim,
        });
    }
    let f = space.field();
    let ps = space.space();
    let mut value = 0i64;
    for &x in centers.ids() {
        for &y in centers.ids() {
            value += f.eta(space.value(ps.sub(x, y))) as i64;
        }
    }
    let q = f.order();
    let c = int(centers.len() as u64);
    let squared = int(2) * qpow(q, space.dim() + 1) * &c * &c;
    let lhs = int(value.unsigned_abs());
    let holds = exact::le_sqrt(&lhs, &squared);
    let report = BoundReport::new(TheoremId::DistanceCharacterSum, Some(space), centers.len(), 0, seed)
        .decided(lhs, Rhs::Irrational(sqrt_f64(&squared)), holds);
    Ok((value, report))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscriminantLemmaCheck {
    /// Triples `(t, r1, r2)` of non-zero elements visited.
    pub triples: u64,
    /// Of those, how many have `D = 0`.
    pub zero_discriminant: u64,
    /// `D = 0` with unequal characters.
    pub character_violations: u64,
    /// Pairs `(r1, r2)` whose root count in `t` is not 2 / 0 as predicted.
    pub root_count_violations: u64,
    pub report: BoundReport,
}

/// Exhaustive check that `D(t, r1, r2) = 0` with `t, r1, r2 != 0` forces
/// `η(t) = η(r1) = η(r2)`, and that `D` has two roots in `t` when
/// `η(r1) = η(r2)` and none otherwise.
pub fn check_discriminant_lemma(field: &Field) -> DiscriminantLemmaCheck {
    let mut triples = 0;
    let mut zero = 0;
    let mut bad = 0;
    let mut bad_roots = 0;
    for r1 in field.nonzero_elements() {
        for r2 in field.nonzero_elements() {
            let roots = field
                .elements()
                .filter(|&t| discriminant(field, t, r1, r2).is_zero())
                .count();
            let expected = if field.eta(r1) == field.eta(r2) { 2 } else { 0 };
            if roots != expected {
                bad_roots += 1;
            }
            for t in field.nonzero_elements() {
                triples += 1;
                if discriminant(field, t, r1, r2).is_zero() {
                    zero += 1;
                    if !(field.eta(t) == field.eta(r1) && field.eta(r1) == field.eta(r2)) {
                        bad += 1;
                    }
                }
            }
        }
    }
    let mut report = BoundReport::new(TheoremId::DiscriminantCharacters, None, 0, 0, 0);
    report.q = Some(field.order());
    let report = report.decided(
        int(bad + bad_roots),
        Rhs::Exact(BigRational::zero()),
        bad == 0 && bad_roots == 0,
    );
    DiscriminantLemmaCheck {
        triples,
        zero_discriminant: zero,
        character_violations: bad,
        root_count_violations: bad_roots,
        report,
    }
}

/// Brute-force and table-grouped values of `Σ_{s1 != s2} (|s1 ∩ s2| - q^{d-2})`
/// for an odd-dimensional family sharing one non-zero radius `r`.
///
/// The grouped value splits pairs by center distance: distance 0 and `4r`
/// are counted as incidences with the zero- and `4r`-radius spheres about
/// the centers, the rest through the character sum of `-Q(x - y)`.
pub fn intersection_sum_decomposition(spheres: &SphereSet) -> Result<(i64, i64)> {
    let fs = spheres.space();
    let d = fs.dim();
    let kind = fs.form().canonical_kind();
    if d % 2 == 0 {
        return Err(Error::ParityMismatch { kind, dim: d });
    }
    let Some(first) = spheres.keys().first() else {
        return Ok((0, 0));
    };
    let r = first.radius;
    if spheres.keys().iter().any(|s| s.radius != r) {
        return Err(Error::MixedRadii);
    }
    if r.is_zero() {
        return Err(Error::ZeroRadius);
    }
    let f = fs.field();
    let q = f.order() as i64;
    let m = spheres.len() as i64;
    let lo = q.pow((d as u32 - 3) / 2);
    let hi = q.pow((d as u32 - 1) / 2);

    let brute = pair_intersection_total(spheres) as i64 - m * (m - 1) * lo * q;

    let centers = PointSet::new(fs.space(), spheres.centers())?;
    let shell = |radius: FieldElement| {
        let keys = centers.ids().iter().map(|&c| SphereKey::new(c, radius)).collect();
        SphereSet::new(fs.clone(), keys)
    };
    let four_r = f.mul(f.from_int(4), r);
    let at_zero = count_incidences(&centers, &shell(FieldElement::ZERO)?)? as i64 - m;
    let at_four_r = count_incidences(&centers, &shell(four_r)?)? as i64;
    let ps = fs.space();
    let mut chi = 0i64;
    for &x in centers.ids() {
        for &y in centers.ids() {
            chi += f.eta(f.neg(fs.value(ps.sub(x, y)))) as i64;
        }
    }
    let j = sign_class(kind, f, r)? as i64;
    let sign = if kind == FormKind::Q4 { 1 } else { -1 }; // (-1)^i
    let grouped = j * hi * (at_zero + at_four_r) + sign * lo * chi;
    Ok((brute, grouped))
}

/// Scales points and centers by `λ` and radii by `λ^2`.
pub fn dilate_instance(
    points: &PointSet,
    spheres: &SphereSet,
    lambda: FieldElement,
) -> Result<(PointSet, SphereSet)> {
    ensure_compatible(points, spheres)?;
    if lambda.is_zero() {
        return Err(Error::ZeroScalar);
    }
    let fs = spheres.space();
    let ps = fs.space();
    let f = fs.field();
    let l2 = f.square(lambda);
    let new_points = points.ids().iter().map(|&x| ps.scale(x, lambda)).collect();
    let new_spheres = spheres
        .keys()
        .iter()
        .map(|s| SphereKey::new(ps.scale(s.center, lambda), f.mul(l2, s.radius)))
        .collect();
    Ok((PointSet::new(ps, new_points)?, SphereSet::new(fs.clone(), new_spheres)?))
}

/// A bipartite graph between `L = 0..left` and `U = 0..right`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    left: usize,
    right: usize,
    adj: Vec<bool>,
}

impl BipartiteGraph {
    pub fn new(left: usize, right: usize) -> Self {
        BipartiteGraph {
            left,
            right,
            adj: vec![false; left * right],
        }
    }

    pub fn complete(left: usize, right: usize) -> Self {
        BipartiteGraph {
            left,
            right,
            adj: vec![true; left * right],
        }
    }

    pub fn set_edge(&mut self, v: usize, u: usize, on: bool) {
        self.adj[v * self.right + u] = on;
    }

    pub fn has_edge(&self, v: usize, u: usize) -> bool {
        self.adj[v * self.right + u]
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    /// `[1/|L|, E(L,U)/(|L||U|)]`, or `None` if empty.
    pub fn admissible_p(&self) -> Option<(BigRational, BigRational)> {
        if self.left == 0 || self.right == 0 {
            return None;
        }
        let lo = BigRational::new(1.into(), (self.left as u64).into());
        let hi = BigRational::new(
            (self.edge_count() as u64).into(),
            ((self.left * self.right) as u64).into(),
        );
        (lo <= hi).then_some((lo, hi))
    }
}

/// The pseudo-random bipartite inequality for `R ⊆ U` at density `p`.
pub fn check_thomason(graph: &BipartiteGraph, p: &BigRational, subset: &[usize]) -> Result<BoundReport> {
    let (lo, hi) = graph
        .admissible_p()
        .ok_or_else(|| Error::PNotInRange { p: exact::format_rational(p) })?;
    if *p < lo || *p > hi || !p.is_positive() {
        return Err(Error::PNotInRange {
            p: exact::format_rational(p),
        });
    }
    let (l, u) = (graph.left, graph.right);
    let edges_to_subset = subset
        .iter()
        .map(|&w| (0..l).filter(|&v| graph.has_edge(v, w)).count())
        .sum::<usize>();
    let dev = int(edges_to_subset as u64) - p * int(l as u64) * int(subset.len() as u64);
    let lhs = &dev * &dev;

    let p2 = p * p;
    let mut inner = BigRational::zero();
    for w in 0..u {
        let mut both = 0u64;
        let mut pairs = 0u64;
        for v1 in 0..l {
            for v2 in 0..l {
                if v1 != v2 {
                    pairs += 1;
                    if graph.has_edge(v1, w) && graph.has_edge(v2, w) {
                        both += 1;
                    }
                }
            }
        }
        inner += int(both) - int(pairs) * &p2;
    }
    let rhs = int(subset.len() as u64) * (inner + int(graph.edge_count() as u64));
    let holds = lhs <= rhs;
    Ok(BoundReport::new(TheoremId::PseudoRandom, None, l, u, 0).decided(lhs, Rhs::Exact(rhs), holds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DEFAULT_ENUM_CAP;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fe(i: u32) -> FieldElement {
        FieldElement::from_index(i)
    }

    fn space(kind: FormKind, d: usize, q: u64) -> Arc<FormSpace> {
        let f = Arc::new(Field::from_order(q).unwrap());
        FormSpace::with_kind(kind, d, f, DEFAULT_ENUM_CAP).unwrap()
    }

    fn all_through(fs: &Arc<FormSpace>, x: u32) -> SphereSet {
        let ps = fs.space();
        let keys = (0..ps.size())
            .map(|c| SphereKey::new(c, fs.value(ps.sub(x, c))))
            .collect();
        SphereSet::new(fs.clone(), keys).unwrap()
    }

    fn random_instance(fs: &Arc<FormSpace>, rng: &mut ChaCha8Rng, radius: impl Fn(FieldElement) -> bool) -> (PointSet, SphereSet) {
        let ps = fs.space();
        let n = rng.gen_range(0..=ps.size().min(60)) as usize;
        let ids = rand::seq::index::sample(rng, ps.size() as usize, n)
            .into_iter()
            .map(|i| i as u32)
            .collect();
        let radii: Vec<_> = fs.field().elements().filter(|&r| radius(r)).collect();
        let total = ps.size() as usize * radii.len();
        let m = rng.gen_range(0..=total.min(40));
        let keys = rand::seq::index::sample(rng, total, m)
            .into_iter()
            .map(|k| SphereKey::new((k / radii.len()) as u32, radii[k % radii.len()]))
            .collect();
        (
            PointSet::new(ps, ids).unwrap(),
            SphereSet::new(fs.clone(), keys).unwrap(),
        )
    }

    /// Incidences by testing every (point, sphere) pair with the form itself.
    fn incidences_oracle(points: &PointSet, spheres: &SphereSet) -> u64 {
        let fs = spheres.space();
        let pts = points.points(fs.space());
        (0..spheres.len())
            .map(|i| {
                let s = spheres.sphere(i);
                pts.iter()
                    .filter(|x| crate::geometry::sphere_contains(&s, x).unwrap())
                    .count() as u64
            })
            .sum()
    }

    #[test]
    fn count_examples() {
        let fs = space(FormKind::Q1, 2, 3);
        let s = all_through(&fs, 0);
        assert_eq!(count_incidences(&PointSet::empty(fs.space()), &s).unwrap(), 0);
        let p = PointSet::new(fs.space(), vec![0]).unwrap();
        assert_eq!(count_incidences(&p, &s).unwrap(), 9);

        let fs = space(FormKind::Q3, 3, 5);
        let r = fe(2);
        let one = SphereSet::new(fs.clone(), vec![SphereKey::new(7, r)]).unwrap();
        let on: Vec<u32> = fs.sphere_points(7, r).collect();
        let p = PointSet::new(fs.space(), on).unwrap();
        let want = crate::geometry::sphere_size_formula(FormKind::Q3, 3, fs.field(), r).unwrap();
        assert_eq!(count_incidences(&p, &one).unwrap(), want);
    }

    #[test]
    fn count_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (kind, d, q) in [(FormKind::Q1, 2, 5), (FormKind::Q4, 3, 3), (FormKind::Norm, 3, 5)] {
            let fs = space(kind, d, q);
            for _ in 0..30 {
                let (p, s) = random_instance(&fs, &mut rng, |_| true);
                assert_eq!(count_incidences(&p, &s).unwrap(), incidences_oracle(&p, &s));
            }
        }
    }

    #[test]
    fn pair_total_matches_pairwise_brute() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fs = space(FormKind::Q3, 3, 5);
        for _ in 0..5 {
            let (_, s) = random_instance(&fs, &mut rng, |_| true);
            let mut total = 0;
            for a in 0..s.len() {
                for b in 0..s.len() {
                    if a != b {
                        total += crate::geometry::intersection_size_brute(
                            &s.sphere(a),
                            &s.sphere(b),
                            DEFAULT_ENUM_CAP,
                        )
                        .unwrap();
                    }
                }
            }
            assert_eq!(pair_intersection_total(&s), total);
        }
    }

    #[test]
    fn duplicates_rejected() {
        let fs = space(FormKind::Q1, 2, 3);
        assert_eq!(PointSet::new(fs.space(), vec![1, 1]), Err(Error::Duplicate));
        let k = SphereKey::new(0, fe(1));
        assert!(matches!(SphereSet::new(fs.clone(), vec![k, k]), Err(Error::Duplicate)));
    }

    #[test]
    fn deviation_examples() {
        let fs = space(FormKind::Q1, 2, 3);
        let s = all_through(&fs, 0);
        assert!(deviation(&PointSet::empty(fs.space()), &s).unwrap().is_zero());
        let p = PointSet::new(fs.space(), vec![0]).unwrap();
        assert_eq!(deviation(&p, &s).unwrap(), int(6));
    }

    #[test]
    fn thomason_examples() {
        let g = BipartiteGraph::complete(2, 2);
        let r = check_thomason(&g, &int(1), &[0, 1]).unwrap();
        assert_eq!((r.lhs.clone(), r.rhs.clone()), (int(0), Rhs::Exact(int(8))));
        assert!(r.holds);
        let empty = BipartiteGraph::new(3, 3);
        assert!(matches!(
            check_thomason(&empty, &BigRational::new(1.into(), 3.into()), &[0]),
            Err(Error::PNotInRange { .. })
        ));
    }

    #[test]
    fn thomason_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut checked = 0;
        for _ in 0..300 {
            let mut g = BipartiteGraph::new(5, 6);
            for v in 0..5 {
                for u in 0..6 {
                    g.set_edge(v, u, rng.gen_bool(0.5));
                }
            }
            let Some((lo, hi)) = g.admissible_p() else { continue };
            let subset: Vec<usize> = (0..6).filter(|_| rng.gen_bool(0.5)).collect();
            for p in [lo, hi] {
                assert!(check_thomason(&g, &p, &subset).unwrap().holds);
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn weighted_examples() {
        let fs = space(FormKind::Q3, 3, 5);
        let r = fe(1);
        let size = fs.level(r).len() as i64 - 25;
        let one = SphereSet::new(fs.clone(), vec![SphereKey::new(3, r)]).unwrap();
        let p = PointSet::new(fs.space(), (0..40).collect()).unwrap();
        let rep = check_general_weighted(&p, &one, size).unwrap();
        assert_eq!(rep.rhs, Rhs::Exact(int(40 * fs.level(r).len() as u64)));
        assert!(rep.holds);

        let mixed = SphereSet::new(fs.clone(), vec![SphereKey::new(0, fe(1)), SphereKey::new(1, fe(2))]).unwrap();
        // η(-1) = η(-2)? over GF(5) -1 = 4 is a square, -2 = 3 is not
        assert_eq!(check_general_weighted(&p, &mixed, size), Err(Error::MixedSphereSizes));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (p, s) = random_instance(&fs, &mut rng, |x| x.is_zero());
            let rep = check_general_weighted(&p, &s, 0).unwrap();
            assert!(rep.holds);
        }
    }

    #[test]
    fn single_point_against_simple_bound() {
        for (kind, d, q) in [(FormKind::Q1, 2, 3), (FormKind::Q3, 3, 5)] {
            let fs = space(kind, d, q);
            let s = all_through(&fs, 0);
            let p = PointSet::new(fs.space(), vec![0]).unwrap();
            let rep = check_bound(TheoremId::Simple, &p, &s, &CheckOptions::default()).unwrap();
            assert!(rep.holds);
            let want = (q as f64 - 1.0) / q as f64;
            assert!((rep.ratio - want).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_points_hold_everywhere() {
        for (kind, d, q) in [(FormKind::Q3, 3, 3), (FormKind::Q1, 4, 3), (FormKind::Norm, 2, 3)] {
            let fs = space(kind, d, q);
            let p = PointSet::empty(fs.space());
            let s = SphereSet::new(fs.clone(), vec![SphereKey::new(1, fe(1))]).unwrap();
            for t in TheoremId::ALL {
                if matches!(
                    t,
                    TheoremId::PseudoRandom | TheoremId::DistanceCharacterSum | TheoremId::DiscriminantCharacters
                ) {
                    continue;
                }
                let rep = check_bound(t, &p, &s, &CheckOptions::default()).unwrap();
                assert!(rep.lhs.is_zero());
                assert!(!rep.is_violation(), "{t} {kind}");
            }
        }
    }

    #[test]
    fn hypothesis_violation_is_reported() {
        let fs = space(FormKind::Q3, 3, 5);
        let p = PointSet::new(fs.space(), vec![0, 1]).unwrap();
        let s = SphereSet::new(fs.clone(), vec![SphereKey::new(1, fe(0))]).unwrap();
        let rep = check_bound(TheoremId::OddSameRadius, &p, &s, &CheckOptions::default()).unwrap();
        assert!(!rep.hypotheses_met && !rep.holds);
        assert_eq!(rep.rhs, Rhs::NotApplicable);
    }

    #[test]
    fn odd_restricted_random_q5() {
        let fs = space(FormKind::Q3, 3, 5);
        let f = fs.field().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for r in f.nonzero_elements().filter(|&r| sign_class(FormKind::Q3, &f, r) == Ok(-1)) {
            for _ in 0..200 {
                let (p, s) = random_instance(&fs, &mut rng, |x| x == r);
                let rep = check_bound(TheoremId::OddRestricted, &p, &s, &CheckOptions::default()).unwrap();
                assert!(rep.hypotheses_met && rep.holds);
            }
        }
    }

    #[test]
    fn char_sum_examples() {
        let fs = space(FormKind::Q3, 3, 5);
        let one = PointSet::new(fs.space(), vec![17]).unwrap();
        assert_eq!(char_sum_distances(&one, &fs, 0).unwrap().0, 0);
        let f = fs.field();
        let t = fs.field().elements().find(|&t| f.eta(t) == 1).unwrap();
        let c = fs.witness_center(t).unwrap();
        let two = PointSet::new(fs.space(), vec![0, c]).unwrap();
        assert_eq!(char_sum_distances(&two, &fs, 0).unwrap().0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ids = rand::seq::index::sample(&mut rng, 125, 40).into_iter().map(|i| i as u32).collect();
        let (v, rep) = char_sum_distances(&PointSet::new(fs.space(), ids).unwrap(), &fs, 0).unwrap();
        assert!(v.abs() <= 1414 && rep.holds);
    }

    #[test]
    fn discriminant_lemma_small_fields() {
        let f5 = Field::new(5, 1).unwrap();
        let four = f5.from_int(4);
        for r in f5.nonzero_elements() {
            let t = f5.mul(four, r);
            assert!(discriminant(&f5, t, r, r).is_zero());
            assert_eq!(f5.eta(t), f5.eta(r));
        }
        let c3 = check_discriminant_lemma(&Field::new(3, 1).unwrap());
        assert_eq!(c3.triples, 8);
        assert!(c3.report.holds);
        let c27 = check_discriminant_lemma(&Field::new(3, 3).unwrap());
        assert_eq!(c27.triples, 26 * 26 * 26);
        assert_eq!(c27.character_violations + c27.root_count_violations, 0);
    }

    #[test]
    fn decomposition_examples() {
        let fs = space(FormKind::Q3, 3, 3);
        assert_eq!(
            intersection_sum_decomposition(&SphereSet::empty(fs.clone())).unwrap(),
            (0, 0)
        );
        let r = fe(1);
        let c = fs.witness_center(FieldElement::ZERO).unwrap();
        let s = SphereSet::new(fs.clone(), vec![SphereKey::new(0, r), SphereKey::new(c, r)]).unwrap();
        let j = sign_class(FormKind::Q3, fs.field(), r).unwrap() as i64;
        assert_eq!(intersection_sum_decomposition(&s).unwrap(), (2 * j * 3, 2 * j * 3));

        let fs = space(FormKind::Q4, 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for r in fs.field().nonzero_elements() {
            let (_, s) = random_instance(&fs, &mut rng, |x| x == r);
            let (a, b) = intersection_sum_decomposition(&s).unwrap();
            assert_eq!(a, b);
        }
        let even = space(FormKind::Q1, 4, 3);
        assert!(matches!(
            intersection_sum_decomposition(&SphereSet::new(even, vec![SphereKey::new(0, r)]).unwrap()),
            Err(Error::ParityMismatch { .. })
        ));
        let mixed = SphereSet::new(fs.clone(), vec![SphereKey::new(0, fe(1)), SphereKey::new(1, fe(2))]).unwrap();
        assert_eq!(intersection_sum_decomposition(&mixed), Err(Error::MixedRadii));
    }

    #[test]
    fn dilation_preserves_incidences() {
        let fs = space(FormKind::Norm, 3, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (p, s) = random_instance(&fs, &mut rng, |_| true);
        let (p1, s1) = dilate_instance(&p, &s, FieldElement::ONE).unwrap();
        assert_eq!((p1.ids(), s1.keys()), (p.ids(), s.keys()));
        for l in fs.field().nonzero_elements() {
            let (pl, sl) = dilate_instance(&p, &s, l).unwrap();
            assert_eq!(count_incidences(&pl, &sl).unwrap(), count_incidences(&p, &s).unwrap());
        }
        assert!(matches!(dilate_instance(&p, &s, FieldElement::ZERO), Err(Error::ZeroScalar)));
    }

    #[test]
    fn report_json_fields() {
        let fs = space(FormKind::Q1, 2, 3);
        let p = PointSet::new(fs.space(), vec![0]).unwrap();
        let rep = check_bound(TheoremId::Simple, &p, &all_through(&fs, 0), &CheckOptions { seed: 42 }).unwrap();
        let v = serde_json::to_value(&rep).unwrap();
        for key in ["theorem", "q", "d", "form", "n_points", "n_spheres", "lhs", "rhs", "ratio", "holds", "hypotheses_met", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["theorem"], "SIMPLE_1_3");
        assert_eq!(v["lhs"], "6");
        assert_eq!(v["rhs"], "9.000000000");
        assert_eq!(v["seed"], 42);
    }
}
