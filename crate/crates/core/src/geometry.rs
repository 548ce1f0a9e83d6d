//! Spheres of a quadratic form, their sizes and pairwise intersections.
//!
//! Every closed form here has a brute-force twin that enumerates `F_q^d`
//! point by point. Points are ordered lexicographically with `x_1` most
//! significant, and a point's index is its rank in that order.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::forms::{norm_equivalence_class, FormKind, QuadraticForm};

/// Default limit on the number of points a brute-force pass may visit.
pub const DEFAULT_ENUM_CAP: u64 = 10_000_000;

pub type Point = Vec<FieldElement>;

/// `F_q^d` with points addressed by their enumeration index.
#[derive(Clone, Debug)]
pub struct PointSpace {
    field: Arc<Field>,
    dim: usize,
    size: u32,
}

impl PointSpace {
    pub fn new(field: Arc<Field>, dim: usize, cap: u64) -> Result<Self> {
        let size = (field.order() as u64)
            .checked_pow(dim as u32)
            .filter(|&n| n <= cap && n <= u32::MAX as u64)
            .ok_or(Error::TooLarge {
                size: (field.order() as u64).saturating_pow(dim as u32),
                max: cap,
            })?;
        Ok(PointSpace {
            field,
            dim,
            size: size as u32,
        })
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `q^d`.
    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn encode(&self, x: &[FieldElement]) -> Result<u32> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let q = self.field.order();
        let mut idx = 0u32;
        for &c in x {
            if c.index() >= q {
                return Err(Error::InvalidElement {
                    index: c.index() as u64,
                    q,
                });
            }
            idx = idx * q + c.index();
        }
        Ok(idx)
    }

    pub fn decode(&self, mut idx: u32) -> Point {
        let q = self.field.order();
        let mut x = vec![FieldElement::ZERO; self.dim];
        for slot in x.iter_mut().rev() {
            *slot = FieldElement::from_index(idx % q);
            idx /= q;
        }
        x
    }

    #[inline]
    fn zip_digits(&self, a: u32, b: u32, op: impl Fn(FieldElement, FieldElement) -> FieldElement) -> u32 {
        let q = self.field.order();
        let (mut a, mut b) = (a, b);
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.dim {
            let c = op(FieldElement::from_index(a % q), FieldElement::from_index(b % q));
            out += c.index() * place;
            a /= q;
            b /= q;
            place *= q;
        }
        out
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.zip_digits(a, b, |x, y| self.field.sub(x, y))
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        self.zip_digits(a, b, |x, y| self.field.add(x, y))
    }

    pub fn scale(&self, a: u32, lambda: FieldElement) -> u32 {
        self.zip_digits(a, 0, |x, _| self.field.mul(lambda, x))
    }
}

/// Calls `f` on every point of `F_q^d` in enumeration order.
pub fn for_each_point(field: &Field, dim: usize, mut f: impl FnMut(&[FieldElement])) {
    let q = field.order();
    let mut x = vec![FieldElement::ZERO; dim];
    loop {
        f(&x);
        let mut i = dim;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            let next = x[i].index() + 1;
            if next < q {
                x[i] = FieldElement::from_index(next);
                break;
            }
            x[i] = FieldElement::ZERO;
        }
    }
}

fn check_cap(field: &Field, dim: usize, cap: u64) -> Result<()> {
    let n = (field.order() as u64).saturating_pow(dim as u32);
    if n > cap {
        return Err(Error::TooLarge { size: n, max: cap });
    }
    Ok(())
}

fn vec_sub(f: &Field, a: &[FieldElement], b: &[FieldElement], out: &mut [FieldElement]) {
    for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
        *o = f.sub(x, y);
    }
}

/// A form together with the value of the form at every point of `F_q^d`.
///
/// The table is filled by evaluating the form point by point, so lookups
/// are as trustworthy as the enumeration itself.
#[derive(Debug)]
pub struct FormSpace {
    form: Arc<QuadraticForm>,
    space: PointSpace,
    values: Vec<FieldElement>,
    levels: Vec<Vec<u32>>,
}

impl FormSpace {
    pub fn new(form: Arc<QuadraticForm>, cap: u64) -> Result<Arc<Self>> {
        let space = PointSpace::new(form.field().clone(), form.dim(), cap)?;
        let q = form.field().order() as usize;
        let mut values = Vec::with_capacity(space.size() as usize);
        let mut levels = vec![Vec::new(); q];
        for_each_point(form.field(), form.dim(), |x| {
            let v = form.eval_unchecked(x);
            levels[v.index() as usize].push(values.len() as u32);
            values.push(v);
        });
        Ok(Arc::new(FormSpace {
            form,
            space,
            values,
            levels,
        }))
    }

    pub fn with_kind(kind: FormKind, dim: usize, field: Arc<Field>, cap: u64) -> Result<Arc<Self>> {
        Self::new(Arc::new(QuadraticForm::new(kind, dim, field)?), cap)
    }

    pub fn form(&self) -> &Arc<QuadraticForm> {
        &self.form
    }

    pub fn space(&self) -> &PointSpace {
        &self.space
    }

    pub fn field(&self) -> &Arc<Field> {
        self.form.field()
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    #[inline]
    pub fn value(&self, idx: u32) -> FieldElement {
        self.values[idx as usize]
    }

    /// Indices of the points `v` with `Q(v) = r`.
    pub fn level(&self, r: FieldElement) -> &[u32] {
        &self.levels[r.index() as usize]
    }

    /// Is point `x` on the sphere of radius `r` about `center`?
    #[inline]
    pub fn on_sphere(&self, center: u32, radius: FieldElement, x: u32) -> bool {
        self.values[self.space.sub(x, center) as usize] == radius
    }

    /// Point indices of the sphere of radius `r` about `center`.
    pub fn sphere_points(&self, center: u32, radius: FieldElement) -> impl Iterator<Item = u32> + '_ {
        self.level(radius)
            .iter()
            .map(move |&v| self.space.add(center, v))
    }

    pub fn sphere(&self, center: u32, radius: FieldElement) -> Sphere {
        Sphere {
            form: self.form.clone(),
            center: self.space.decode(center),
            radius,
        }
    }

    /// First non-zero point, in enumeration order, with `Q(c) = t`.
    pub fn witness_center(&self, t: FieldElement) -> Option<u32> {
        self.level(t).iter().copied().find(|&c| c != 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sphere {
    form: Arc<QuadraticForm>,
    center: Point,
    radius: FieldElement,
}

impl Sphere {
    pub fn new(form: Arc<QuadraticForm>, center: Point, radius: FieldElement) -> Result<Self> {
        if center.len() != form.dim() {
            return Err(Error::DimensionMismatch {
                expected: form.dim(),
                got: center.len(),
            });
        }
        Ok(Sphere {
            form,
            center,
            radius,
        })
    }

    pub fn form(&self) -> &Arc<QuadraticForm> {
        &self.form
    }

    pub fn center(&self) -> &[FieldElement] {
        &self.center
    }

    pub fn radius(&self) -> FieldElement {
        self.radius
    }
}

pub fn sphere_contains(s: &Sphere, x: &[FieldElement]) -> Result<bool> {
    let d = s.form.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let mut diff = vec![FieldElement::ZERO; d];
    vec_sub(s.form.field(), x, &s.center, &mut diff);
    Ok(s.form.eval_unchecked(&diff) == s.radius)
}

/// All points of `s`, by testing every point of the space.
pub fn sphere_points_brute(s: &Sphere, cap: u64) -> Result<Vec<Point>> {
    let f = s.form.field();
    check_cap(f, s.form.dim(), cap)?;
    let mut out = Vec::new();
    let mut diff = vec![FieldElement::ZERO; s.form.dim()];
    for_each_point(f, s.form.dim(), |x| {
        vec_sub(f, x, &s.center, &mut diff);
        if s.form.eval_unchecked(&diff) == s.radius {
            out.push(x.to_vec());
        }
    });
    Ok(out)
}

fn ipow(q: u32, e: usize) -> i64 {
    (q as i64).pow(e as u32)
}

fn resolve_kind(kind: FormKind, dim: usize, field: &Field) -> Result<FormKind> {
    if !kind.allows_dim(dim) {
        return Err(Error::ParityMismatch { kind, dim });
    }
    Ok(match kind {
        FormKind::Norm => norm_equivalence_class(dim, field),
        k => k,
    })
}

/// Excess `N(Q_i^dim, e)` of a level set over `q^{dim-1}`, where `e` is
/// `η(-r)` for the radius `r` (0 for the zero radius).
///
/// Odd kinds are accepted from dimension 1 (`Q3^1 = -x^2`, `Q4^1 = -εx^2`),
/// which the fiber reduction needs when `d = 3`.
pub fn level_excess(kind: FormKind, dim: usize, q: u32, e: i8) -> i64 {
    let sign = kind.parity_sign();
    match kind {
        FormKind::Q1 | FormKind::Q2 => {
            assert!(dim >= 2 && dim % 2 == 0);
            let lo = ipow(q, (dim - 2) / 2);
            if e == 0 {
                -sign * (ipow(q, dim / 2) - lo)
            } else {
                sign * lo
            }
        }
        FormKind::Q3 | FormKind::Q4 => {
            assert!(dim % 2 == 1);
            -sign * e as i64 * ipow(q, (dim - 1) / 2)
        }
        FormKind::Norm => panic!("resolve the norm form to a canonical kind first"),
    }
}

/// `|{x : Q(x) = r}|` from the closed forms.
pub fn sphere_size_formula(kind: FormKind, dim: usize, field: &Field, r: FieldElement) -> Result<u64> {
    let kind = resolve_kind(kind, dim, field)?;
    let e = field.eta(field.neg(r));
    let size = ipow(field.order(), dim - 1) + level_excess(kind, dim, field.order(), e);
    Ok(size as u64)
}

/// `t^2 + r1^2 + r2^2 - 2(t r1 + t r2 + r1 r2)`.
pub fn discriminant(f: &Field, t: FieldElement, r1: FieldElement, r2: FieldElement) -> FieldElement {
    let squares = f.add(f.add(f.square(t), f.square(r1)), f.square(r2));
    let cross = f.add(f.add(f.mul(t, r1), f.mul(t, r2)), f.mul(r1, r2));
    f.sub(squares, f.add(cross, cross))
}

/// The six cases of the intersection-size tables.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TableRow {
    /// `t = 0, r1 = r2 = 0`
    ZeroDistanceZeroRadii,
    /// `t = 0, r1 = r2 != 0`
    ZeroDistanceEqualRadii,
    /// `t = 0, r1 != r2`
    ZeroDistanceDistinctRadii,
    /// `t != 0, D = 0`
    DiscriminantZero,
    /// `t != 0, η(D) = 1`
    DiscriminantSquare,
    /// `t != 0, η(D) = -1`
    DiscriminantNonsquare,
}

impl TableRow {
    pub const ALL: [TableRow; 6] = [
        TableRow::ZeroDistanceZeroRadii,
        TableRow::ZeroDistanceEqualRadii,
        TableRow::ZeroDistanceDistinctRadii,
        TableRow::DiscriminantZero,
        TableRow::DiscriminantSquare,
        TableRow::DiscriminantNonsquare,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TableRow::ZeroDistanceZeroRadii => "t=0,r1=r2=0",
            TableRow::ZeroDistanceEqualRadii => "t=0,r1=r2!=0",
            TableRow::ZeroDistanceDistinctRadii => "t=0,r1!=r2",
            TableRow::DiscriminantZero => "t!=0,D=0",
            TableRow::DiscriminantSquare => "t!=0,eta(D)=1",
            TableRow::DiscriminantNonsquare => "t!=0,eta(D)=-1",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct IntersectionClass {
    pub t: FieldElement,
    pub r1: FieldElement,
    pub r2: FieldElement,
    pub discriminant: FieldElement,
    pub row: TableRow,
}

impl IntersectionClass {
    pub fn classify(f: &Field, t: FieldElement, r1: FieldElement, r2: FieldElement) -> Self {
        let discriminant = discriminant(f, t, r1, r2);
        let row = if t.is_zero() {
            match (r1 == r2, r1.is_zero()) {
                (true, true) => TableRow::ZeroDistanceZeroRadii,
                (true, false) => TableRow::ZeroDistanceEqualRadii,
                (false, _) => TableRow::ZeroDistanceDistinctRadii,
            }
        } else {
            match f.eta(discriminant) {
                0 => TableRow::DiscriminantZero,
                1 => TableRow::DiscriminantSquare,
                _ => TableRow::DiscriminantNonsquare,
            }
        };
        IntersectionClass {
            t,
            r1,
            r2,
            discriminant,
            row,
        }
    }
}

/// Tabulated `N_2`: the excess of `|s1 ∩ s2|` over `q^{d-2}` for two spheres
/// with distinct centers at distance `t`.
pub fn intersection_excess_formula(
    kind: FormKind,
    dim: usize,
    field: &Field,
    r1: FieldElement,
    r2: FieldElement,
    t: FieldElement,
) -> Result<i64> {
    let kind = resolve_kind(kind, dim, field)?;
    if dim < 3 {
        return Err(Error::DimensionTooSmall { dim, min: 3 });
    }
    let q = field.order();
    let sign = kind.parity_sign();
    let class = IntersectionClass::classify(field, t, r1, r2);
    let eta_neg = |x: FieldElement| field.eta(field.neg(x)) as i64;
    let value = if dim % 2 == 0 {
        let lo = ipow(q, (dim - 2) / 2);
        match class.row {
            TableRow::ZeroDistanceZeroRadii => -sign * (ipow(q, dim / 2) - lo),
            TableRow::ZeroDistanceEqualRadii => sign * lo,
            TableRow::ZeroDistanceDistinctRadii | TableRow::DiscriminantZero => 0,
            TableRow::DiscriminantSquare => -sign * lo,
            TableRow::DiscriminantNonsquare => sign * lo,
        }
    } else {
        let hi = ipow(q, (dim - 1) / 2);
        let lo = ipow(q, (dim - 3) / 2);
        match class.row {
            TableRow::ZeroDistanceZeroRadii | TableRow::ZeroDistanceDistinctRadii => 0,
            TableRow::ZeroDistanceEqualRadii => -sign * eta_neg(r1) * hi,
            TableRow::DiscriminantZero => -sign * eta_neg(t) * (hi - lo),
            TableRow::DiscriminantSquare | TableRow::DiscriminantNonsquare => {
                sign * eta_neg(t) * lo
            }
        }
    };
    Ok(value)
}

/// `|s1 ∩ s2|` for distinct centers at distance `t`, from the tables.
/// Concentric spheres are not covered: they coincide or are disjoint.
pub fn intersection_size_formula(
    kind: FormKind,
    dim: usize,
    field: &Field,
    r1: FieldElement,
    r2: FieldElement,
    t: FieldElement,
) -> Result<u64> {
    let excess = intersection_excess_formula(kind, dim, field, r1, r2, t)?;
    Ok((ipow(field.order(), dim - 2) + excess) as u64)
}

pub fn intersection_size_brute(s1: &Sphere, s2: &Sphere, cap: u64) -> Result<u64> {
    if s1.form != s2.form {
        return Err(Error::FormMismatch);
    }
    if s1 == s2 {
        return Err(Error::SameSphere);
    }
    let form = &s1.form;
    let f = form.field();
    check_cap(f, form.dim(), cap)?;
    let mut count = 0;
    let mut diff = vec![FieldElement::ZERO; form.dim()];
    for_each_point(f, form.dim(), |x| {
        vec_sub(f, x, &s1.center, &mut diff);
        if form.eval_unchecked(&diff) != s1.radius {
            return;
        }
        vec_sub(f, x, &s2.center, &mut diff);
        if form.eval_unchecked(&diff) == s2.radius {
            count += 1;
        }
    });
    Ok(count)
}

/// Counts of `η(-f(x))` over `x ∈ F_q`, with `f(x) = t x^2 - (r1 - r2 + t) x + r1`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FiberProfile {
    pub minus: u64,
    pub zero: u64,
    pub plus: u64,
}

impl FiberProfile {
    pub fn count(&self, e: i8) -> u64 {
        match e {
            -1 => self.minus,
            0 => self.zero,
            _ => self.plus,
        }
    }

    /// `Σ_x N(Q_i^{d-2}, η(-f(x)))`: the excess `N_2` rebuilt fiber by fiber.
    pub fn excess(&self, kind: FormKind, dim: usize, q: u32) -> i64 {
        [-1i8, 0, 1]
            .into_iter()
            .map(|e| self.count(e) as i64 * level_excess(kind, dim - 2, q, e))
            .sum()
    }
}

pub fn fiber_profile(
    kind: FormKind,
    dim: usize,
    field: &Field,
    r1: FieldElement,
    r2: FieldElement,
    t: FieldElement,
) -> Result<FiberProfile> {
    resolve_kind(kind, dim, field)?;
    if dim < 3 {
        return Err(Error::DimensionTooSmall { dim, min: 3 });
    }
    let f = field;
    let lin = f.add(f.sub(r1, r2), t);
    let mut profile = FiberProfile::default();
    for x in f.elements() {
        let fx = f.add(f.sub(f.mul(t, f.square(x)), f.mul(lin, x)), r1);
        match f.eta(f.neg(fx)) {
            -1 => profile.minus += 1,
            0 => profile.zero += 1,
            _ => profile.plus += 1,
        }
    }
    Ok(profile)
}

/// `(-1)^{i+1} η(-r)` for the odd-dimensional kinds.
pub fn sign_class(kind: FormKind, field: &Field, r: FieldElement) -> Result<i8> {
    match kind {
        FormKind::Q3 | FormKind::Q4 => {
            Ok((-kind.parity_sign()) as i8 * field.eta(field.neg(r)))
        }
        _ => Err(Error::ParityMismatch { kind, dim: 0 }),
    }
}

/// Number of centers `z` with `Q(z - x) = Q(z - y)`, i.e. of spheres
/// through both points.
pub fn bisector_count_brute(
    form: &QuadraticForm,
    x: &[FieldElement],
    y: &[FieldElement],
    cap: u64,
) -> Result<u64> {
    let d = form.dim();
    for v in [x, y] {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.len(),
            });
        }
    }
    if x == y {
        return Err(Error::EqualPoints);
    }
    let f = form.field();
    check_cap(f, d, cap)?;
    let mut count = 0;
    let (mut dx, mut dy) = (vec![FieldElement::ZERO; d], vec![FieldElement::ZERO; d]);
    for_each_point(f, d, |z| {
        vec_sub(f, z, x, &mut dx);
        vec_sub(f, z, y, &mut dy);
        if form.eval_unchecked(&dx) == form.eval_unchecked(&dy) {
            count += 1;
        }
    });
    Ok(count)
}

/// Outcome of checking every unordered pair of distinct points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BisectorSweep {
    pub pairs: u64,
    pub min: u64,
    pub max: u64,
}

/// Bisector counts for every pair of distinct points, by direct comparison
/// of the distance profiles `z -> Q(z - x)`. Needs `q^{2d}` table entries.
pub fn bisector_sweep_exhaustive(space: &FormSpace, table_cap: u64) -> Result<BisectorSweep> {
    let n = space.space().size() as u64;
    if n * n > table_cap {
        return Err(Error::TooLarge {
            size: n * n,
            max: table_cap,
        });
    }
    let n = n as usize;
    let ps = space.space();
    let mut profile = vec![0u32; n * n];
    for x in 0..n {
        for z in 0..n {
            profile[x * n + z] = space.value(ps.sub(z as u32, x as u32)).index();
        }
    }
    let mut sweep = BisectorSweep {
        pairs: 0,
        min: u64::MAX,
        max: 0,
    };
    for x in 0..n {
        let rx = &profile[x * n..(x + 1) * n];
        for y in x + 1..n {
            let ry = &profile[y * n..(y + 1) * n];
            let c = rx.iter().zip(ry).filter(|(a, b)| a == b).count() as u64;
            sweep.pairs += 1;
            sweep.min = sweep.min.min(c);
            sweep.max = sweep.max.max(c);
        }
    }
    Ok(sweep)
}
