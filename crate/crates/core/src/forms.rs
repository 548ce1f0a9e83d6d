//! The canonical non-degenerate quadratic forms and the sum-of-squares form.
//!
//! With `h(x) = x1*x2 + x3*x4 + ...` a sum of hyperbolic pairs:
//!
//! | kind | parity of d | tail after the pairs         |
//! |------|-------------|------------------------------|
//! | Q1   | even        | (none)                       |
//! | Q2   | even        | `x_{d-1}^2 - ε x_d^2`        |
//! | Q3   | odd         | `-x_d^2`                     |
//! | Q4   | odd         | `-ε x_d^2`                   |
//! | Norm | any         | `x1^2 + .. + xd^2` (no pairs)|

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FormKind {
    Q1,
    Q2,
    Q3,
    Q4,
    #[serde(rename = "norm")]
    Norm,
}

impl FormKind {
    pub const CANONICAL: [FormKind; 4] = [FormKind::Q1, FormKind::Q2, FormKind::Q3, FormKind::Q4];

    pub fn as_str(self) -> &'static str {
        match self {
            FormKind::Q1 => "Q1",
            FormKind::Q2 => "Q2",
            FormKind::Q3 => "Q3",
            FormKind::Q4 => "Q4",
            FormKind::Norm => "norm",
        }
    }

    /// The subscript `i` of `Q_i`; `None` for the norm form.
    pub fn index(self) -> Option<u32> {
        match self {
            FormKind::Q1 => Some(1),
            FormKind::Q2 => Some(2),
            FormKind::Q3 => Some(3),
            FormKind::Q4 => Some(4),
            FormKind::Norm => None,
        }
    }

    pub fn allows_dim(self, dim: usize) -> bool {
        match self {
            FormKind::Q1 | FormKind::Q2 => dim % 2 == 0,
            FormKind::Q3 | FormKind::Q4 => dim % 2 == 1,
            FormKind::Norm => true,
        }
    }

    pub fn uses_epsilon(self) -> bool {
        matches!(self, FormKind::Q2 | FormKind::Q4)
    }

    /// Sign `(-1)^i`.
    pub(crate) fn parity_sign(self) -> i64 {
        match self.index() {
            Some(i) if i % 2 == 0 => 1,
            Some(_) => -1,
            None => panic!("the norm form has no index"),
        }
    }
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Q1" | "q1" => Ok(FormKind::Q1),
            "Q2" | "q2" => Ok(FormKind::Q2),
            "Q3" | "q3" => Ok(FormKind::Q3),
            "Q4" | "q4" => Ok(FormKind::Q4),
            "norm" | "Norm" | "NORM" => Ok(FormKind::Norm),
            other => Err(Error::Parse(format!("unknown form kind '{other}'"))),
        }
    }
}

/// Canonical kind equivalent to the sum-of-squares form in dimension `dim`.
pub fn norm_equivalence_class(dim: usize, field: &Field) -> FormKind {
    let q3 = field.order_mod4() == 3;
    if dim % 2 == 0 {
        if q3 && dim % 4 == 2 {
            FormKind::Q2
        } else {
            FormKind::Q1
        }
    } else if q3 && dim % 4 == 1 {
        FormKind::Q4
    } else {
        FormKind::Q3
    }
}

#[derive(Clone, Debug)]
pub struct QuadraticForm {
    kind: FormKind,
    dim: usize,
    field: Arc<Field>,
    epsilon: Option<FieldElement>,
}

impl PartialEq for QuadraticForm {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.dim == other.dim
            && self.epsilon == other.epsilon
            && *self.field == *other.field
    }
}

impl Eq for QuadraticForm {}

impl QuadraticForm {
    /// Builds a form with ε fixed to the smallest non-square.
    pub fn new(kind: FormKind, dim: usize, field: Arc<Field>) -> Result<Self> {
        let eps = field.smallest_nonsquare();
        Self::with_epsilon(kind, dim, field, eps)
    }

    pub fn with_epsilon(
        kind: FormKind,
        dim: usize,
        field: Arc<Field>,
        epsilon: FieldElement,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall { dim, min: 2 });
        }
        if !kind.allows_dim(dim) {
            return Err(Error::ParityMismatch { kind, dim });
        }
        let epsilon = if kind.uses_epsilon() {
            if field.eta(epsilon) != -1 {
                return Err(Error::NotANonsquare);
            }
            Some(epsilon)
        } else {
            None
        };
        Ok(QuadraticForm {
            kind,
            dim,
            field,
            epsilon,
        })
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn epsilon(&self) -> Option<FieldElement> {
        self.epsilon
    }

    /// The canonical kind whose size and intersection formulas apply.
    pub fn canonical_kind(&self) -> FormKind {
        match self.kind {
            FormKind::Norm => norm_equivalence_class(self.dim, &self.field),
            k => k,
        }
    }

    pub fn eval(&self, x: &[FieldElement]) -> Result<FieldElement> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluates without the length check; `x` must have `dim` entries.
    pub fn eval_unchecked(&self, x: &[FieldElement]) -> FieldElement {
        let f = &*self.field;
        let d = self.dim;
        let pairs_upto = |n: usize| {
            (0..n / 2).fold(FieldElement::ZERO, |acc, j| {
                f.add(acc, f.mul(x[2 * j], x[2 * j + 1]))
            })
        };
        match self.kind {
            FormKind::Q1 => pairs_upto(d),
            FormKind::Q2 => {
                let eps = self.epsilon.unwrap();
                let tail = f.sub(f.square(x[d - 2]), f.mul(eps, f.square(x[d - 1])));
                f.add(pairs_upto(d - 2), tail)
            }
            FormKind::Q3 => f.sub(pairs_upto(d - 1), f.square(x[d - 1])),
            FormKind::Q4 => {
                let eps = self.epsilon.unwrap();
                f.sub(pairs_upto(d - 1), f.mul(eps, f.square(x[d - 1])))
            }
            FormKind::Norm => x
                .iter()
                .fold(FieldElement::ZERO, |acc, &xi| f.add(acc, f.square(xi))),
        }
    }

    /// Symmetric matrix `A` with `Q(x) = x^T A x`; off-diagonal entries
    /// carry half of each cross-term coefficient.
    pub fn matrix(&self) -> Vec<Vec<FieldElement>> {
        let f = &*self.field;
        let d = self.dim;
        let half = f.inv(f.from_int(2)).expect("q is odd");
        let mut a = vec![vec![FieldElement::ZERO; d]; d];
        let hyperbolic = |a: &mut Vec<Vec<FieldElement>>, n: usize| {
            for j in 0..n / 2 {
                a[2 * j][2 * j + 1] = half;
                a[2 * j + 1][2 * j] = half;
            }
        };
        let minus_one = f.neg(FieldElement::ONE);
        match self.kind {
            FormKind::Q1 => hyperbolic(&mut a, d),
            FormKind::Q2 => {
                hyperbolic(&mut a, d - 2);
                a[d - 2][d - 2] = FieldElement::ONE;
                a[d - 1][d - 1] = f.neg(self.epsilon.unwrap());
            }
            FormKind::Q3 => {
                hyperbolic(&mut a, d - 1);
                a[d - 1][d - 1] = minus_one;
            }
            FormKind::Q4 => {
                hyperbolic(&mut a, d - 1);
                a[d - 1][d - 1] = f.neg(self.epsilon.unwrap());
            }
            FormKind::Norm => {
                for (i, row) in a.iter_mut().enumerate() {
                    row[i] = FieldElement::ONE;
                }
            }
        }
        a
    }

    /// `η(det A)` from the closed forms for each kind.
    pub fn det_character(&self) -> i8 {
        let f = &*self.field;
        let eta_minus_one = f.eta(f.neg(FieldElement::ONE));
        let eta_pow = |e: usize| if e % 2 == 0 { 1 } else { eta_minus_one };
        let d = self.dim;
        match self.kind {
            FormKind::Q1 => eta_pow(d / 2),
            FormKind::Q2 => -eta_pow(d / 2),
            FormKind::Q3 => eta_pow((d + 1) / 2),
            FormKind::Q4 => -eta_pow((d + 1) / 2),
            FormKind::Norm => 1,
        }
    }

    /// `η(det A)` computed by elimination on the associated matrix.
    pub fn det_character_direct(&self) -> i8 {
        self.field.eta(determinant(&self.field, self.matrix()))
    }
}

/// Gaussian elimination over the field.
pub fn determinant(f: &Field, mut a: Vec<Vec<FieldElement>>) -> FieldElement {
    let n = a.len();
    let mut det = FieldElement::ONE;
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return FieldElement::ZERO;
        };
        if pivot != col {
            a.swap(pivot, col);
            det = f.neg(det);
        }
        let pv = a[col][col];
        det = f.mul(det, pv);
        let inv = f.inv(pv).expect("pivot is non-zero");
        for r in col + 1..n {
            let factor = f.mul(a[r][col], inv);
            if factor.is_zero() {
                continue;
            }
            for c in col..n {
                let v = f.mul(factor, a[col][c]);
                a[r][c] = f.sub(a[r][c], v);
            }
        }
    }
    det
}
