//! Field elements as exact truncated π-digit expansions, and the digit
//! engine that implements carry-exact arithmetic on them.

use super::residue::FqElt;
use super::FieldDesc;
use crate::error::{Error, Result};
use crate::rat::{format_rat, parse_rat, Rat};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Canonical digit string: `None` is the exact zero; otherwise the leading
/// digit is nonzero and trailing zero digits are trimmed.
pub(crate) type Raw = Option<(i64, Vec<FqElt>)>;

pub(crate) mod engine {
    use super::*;

    /// Carry-normalizes integer-coefficient digit polynomials sitting at
    /// consecutive π-positions from `lead`, truncating at the absolute
    /// position `end` (exclusive). Carries move from position i to i + e
    /// because p = π^e.
    pub fn normalize(desc: &FieldDesc, lead: i64, mut work: Vec<Vec<i64>>, end: i64) -> Raw {
        let p = desc.p;
        let f = desc.f;
        let e = desc.e as usize;
        let modulus = &desc.residue.modulus;
        let cap = (end - lead).max(0) as usize;
        work.truncate(cap);
        let mut i = 0;
        while i < work.len() {
            // reduce the polynomial part to degree < f
            while work[i].len() > f {
                let d = work[i].len() - 1;
                let c = work[i][d];
                if c != 0 {
                    for (k, &mc) in modulus.iter().enumerate() {
                        work[i][d - f + k] -= c * mc;
                    }
                }
                work[i].pop();
            }
            // base-p carries into position i + e
            for k in 0..work[i].len() {
                let c = work[i][k];
                let r = c.rem_euclid(p);
                let q = (c - r) / p;
                work[i][k] = r;
                if q != 0 && i + e < cap {
                    if work.len() <= i + e {
                        work.resize(i + e + 1, Vec::new());
                    }
                    if work[i + e].len() <= k {
                        work[i + e].resize(k + 1, 0);
                    }
                    work[i + e][k] += q;
                }
            }
            i += 1;
        }
        // canonical trim
        let is_zero = |poly: &Vec<i64>| poly.iter().all(|&c| c == 0);
        let first = work.iter().position(|d| !is_zero(d));
        let first = first?;
        let last = work.iter().rposition(|d| !is_zero(d)).unwrap();
        let digits = work[first..=last]
            .iter()
            .map(|poly| {
                let mut v = poly.clone();
                v.resize(f, 0);
                v
            })
            .collect();
        Some((lead + first as i64, digits))
    }

    fn to_work(digits: &[FqElt]) -> Vec<Vec<i64>> {
        digits.to_vec()
    }

    /// Exact signed sum `a + sign*b`, truncated to the window of `n`
    /// digits past the smaller lead. Total cancellation inside the window
    /// (for instance x + (−x)) yields the canonical zero.
    fn combine(desc: &FieldDesc, a: &Raw, b: &Raw, sign: i64, n: usize) -> Raw {
        match (a, b) {
            (None, None) => None,
            (Some((la, da)), None) => normalize(desc, *la, to_work(da), la + n as i64),
            (None, Some((lb, db))) => {
                let work = db
                    .iter()
                    .map(|d| d.iter().map(|&c| sign * c).collect())
                    .collect();
                normalize(desc, *lb, work, lb + n as i64)
            }
            (Some((la, da)), Some((lb, db))) => {
                let lead = (*la).min(*lb);
                let mut work: Vec<Vec<i64>> = Vec::new();
                for (l, ds, s) in [(la, da, 1i64), (lb, db, sign)] {
                    for (i, d) in ds.iter().enumerate() {
                        let pos = (l - lead) as usize + i;
                        if work.len() <= pos {
                            work.resize(pos + 1, Vec::new());
                        }
                        for (k, &c) in d.iter().enumerate() {
                            if work[pos].len() <= k {
                                work[pos].resize(k + 1, 0);
                            }
                            work[pos][k] += s * c;
                        }
                    }
                }
                normalize(desc, lead, work, lead + n as i64)
            }
        }
    }

    /// Exact sum truncated at `n` digits past the smaller lead.
    pub fn add_raw(desc: &FieldDesc, a: &Raw, b: &Raw, n: usize) -> Raw {
        combine(desc, a, b, 1, n)
    }

    /// Exact difference truncated at `n` digits past the smaller lead.
    pub fn sub_raw(desc: &FieldDesc, a: &Raw, b: &Raw, n: usize) -> Raw {
        combine(desc, a, b, -1, n)
    }

    /// Negation, truncated at `n` digits past the lead (the borrow
    /// cascade makes most negations carry the full window of digits).
    pub fn neg_raw(desc: &FieldDesc, a: &Raw, n: usize) -> Raw {
        sub_raw(desc, &None, a, n)
    }

    /// Exact product truncated at `n` digits past the (exact) product lead.
    pub fn mul_raw(desc: &FieldDesc, a: &Raw, b: &Raw, n: usize) -> Raw {
        let (la, da) = a.as_ref()?;
        let (lb, db) = b.as_ref()?;
        let lead = la + lb;
        let end = lead + n as i64;
        let mut work: Vec<Vec<i64>> = Vec::new();
        for (i, x) in da.iter().enumerate() {
            if (i as i64) + lead >= end {
                break;
            }
            for (j, y) in db.iter().enumerate() {
                let pos = i + j;
                if (pos as i64) + lead >= end {
                    break;
                }
                if work.len() <= pos {
                    work.resize(pos + 1, Vec::new());
                }
                poly_mul_acc(&mut work[pos], x, y);
            }
        }
        normalize(desc, lead, work, end)
    }

    fn poly_mul_acc(acc: &mut Vec<i64>, x: &FqElt, y: &FqElt) {
        if acc.len() < x.len() + y.len() {
            acc.resize(x.len() + y.len() - 1, 0);
        }
        for (i, &cx) in x.iter().enumerate() {
            if cx == 0 {
                continue;
            }
            for (j, &cy) in y.iter().enumerate() {
                acc[i + j] += cx * cy;
            }
        }
    }

    pub fn from_int(desc: &FieldDesc, c: i64, n: usize) -> Raw {
        normalize(desc, 0, vec![vec![c]], n as i64)
    }

    /// Newton inversion to `n` digits past the result lead.
    pub fn inv_raw(desc: &FieldDesc, a: &Raw, n: usize) -> Result<Raw> {
        let (la, da) = match a {
            None => return Err(Error::DivisionByZero),
            Some(x) => x,
        };
        let d0inv = desc.residue.inv(&da[0])?;
        let mut x: Raw = Some((-la, vec![d0inv]));
        let mut correct = 1usize;
        while correct < n + 1 {
            // x <- x(2 - a x)
            let ax = mul_raw(desc, a, &x, n);
            let two = from_int(desc, 2, n);
            let t = sub_raw(desc, &two, &ax, n);
            x = mul_raw(desc, &x, &t, n);
            correct *= 2;
        }
        debug_assert!({
            let ax = mul_raw(desc, a, &x, n);
            let one = from_int(desc, 1, n);
            sub_raw(desc, &ax, &one, n).is_none()
        });
        Ok(x)
    }

    fn eval_int_poly(desc: &FieldDesc, coeffs: &[i64], x: &Raw, n: usize) -> Raw {
        let mut acc: Raw = None;
        for &c in coeffs.iter().rev() {
            acc = mul_raw(desc, &acc, x, n);
            acc = add_raw(desc, &acc, &from_int(desc, c, n), n);
        }
        acc
    }

    /// Hensel-lifts the residue root `target` of the integer polynomial
    /// `poly` (derivative `deriv`) to `n` digits. The derivative must be a
    /// unit at the root, which holds for all uses here (separable moduli,
    /// tame roots of unity).
    pub fn hensel_root(
        desc: &FieldDesc,
        poly: &[i64],
        deriv: &[i64],
        target: &FqElt,
        n: usize,
    ) -> Result<(i64, Vec<FqElt>)> {
        let mut x: Raw = Some((0, vec![target.clone()]));
        for _ in 0..64 {
            let fx = eval_int_poly(desc, poly, &x, n);
            if fx.is_none() {
                return x.ok_or_else(|| Error::Internal("hensel root vanished".into()));
            }
            let dfx = eval_int_poly(desc, deriv, &x, n);
            let delta = mul_raw(desc, &fx, &inv_raw(desc, &dfx, n)?, n);
            x = sub_raw(desc, &x, &delta, n);
        }
        Err(Error::Internal(
            "hensel iteration failed to converge".into(),
        ))
    }
}

/// An exact element of E, stored as a canonical finite expansion
/// Σ c_i π^(lead + i) with at most N digits.
#[derive(Clone)]
pub struct FieldElement {
    pub(crate) desc: Arc<FieldDesc>,
    pub(crate) value: Raw,
}

impl FieldElement {
    pub fn zero(desc: &Arc<FieldDesc>) -> Self {
        FieldElement {
            desc: desc.clone(),
            value: None,
        }
    }

    pub fn one(desc: &Arc<FieldDesc>) -> Self {
        Self::from_integer(desc, 1)
    }

    pub fn from_integer(desc: &Arc<FieldDesc>, c: i64) -> Self {
        FieldElement {
            desc: desc.clone(),
            value: engine::from_int(desc, c, desc.precision),
        }
    }

    /// Exact expansion of a rational number, truncated to N digits.
    /// Digits land at multiples of e since the value lies in the base field.
    pub fn from_rational(desc: &Arc<FieldDesc>, r: Rat) -> Self {
        let (mut num, mut den) = (*r.numer(), *r.denom());
        if num == 0 {
            return Self::zero(desc);
        }
        let p = desc.p;
        let mut v: i64 = 0;
        while num % p == 0 {
            num /= p;
            v += 1;
        }
        while den % p == 0 {
            den /= p;
            v -= 1;
        }
        // digit-by-digit division of units
        let k = (desc.precision as i64 - 1) / desc.e + 1;
        let den_inv = {
            // inverse of den mod p
            let mut x = 1i64;
            let dp = den.rem_euclid(p);
            while (x * dp).rem_euclid(p) != 1 {
                x += 1;
            }
            x
        };
        let mut work: Vec<Vec<i64>> = Vec::new();
        let mut cur = num;
        for j in 0..k {
            let d = (cur.rem_euclid(p) * den_inv).rem_euclid(p);
            let pos = (j * desc.e) as usize;
            if work.len() <= pos {
                work.resize(pos + 1, Vec::new());
            }
            work[pos] = vec![d];
            cur = (cur - d * den) / p;
            if cur == 0 {
                break;
            }
        }
        let lead = v * desc.e;
        FieldElement {
            desc: desc.clone(),
            value: engine::normalize(desc, lead, work, lead + desc.precision as i64),
        }
    }

    /// The element `digit · π^pos`.
    pub fn monomial(desc: &Arc<FieldDesc>, pos: i64, digit: FqElt) -> Result<Self> {
        if digit.len() != desc.f {
            return Err(Error::Parse("digit has wrong length".into()));
        }
        let work = vec![digit];
        Ok(FieldElement {
            desc: desc.clone(),
            value: engine::normalize(desc, pos, work, pos + desc.precision as i64),
        })
    }

    pub fn pi_pow(desc: &Arc<FieldDesc>, pos: i64) -> Self {
        Self::monomial(desc, pos, desc.residue.one()).expect("one is a valid digit")
    }

    pub fn desc(&self) -> &Arc<FieldDesc> {
        &self.desc
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_none()
    }

    /// Normalized valuation: val(p) = 1, val(π) = 1/e; `None` is +∞.
    pub fn val(&self) -> Option<Rat> {
        self.value
            .as_ref()
            .map(|(lead, _)| Rat::new(*lead, self.desc.e))
    }

    /// Leading π-position (valuation times e); `None` for zero.
    pub fn lead_pos(&self) -> Option<i64> {
        self.value.as_ref().map(|(lead, _)| *lead)
    }

    pub fn digits(&self) -> &[FqElt] {
        self.value.as_ref().map(|(_, d)| d.as_slice()).unwrap_or(&[])
    }

    fn check_same_desc(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.desc, &other.desc) || *self.desc == *other.desc {
            Ok(())
        } else {
            Err(Error::MismatchedField)
        }
    }

    /// Exact sum, truncated to N digits past the smaller lead.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_desc(other)?;
        Ok(FieldElement {
            desc: self.desc.clone(),
            value: engine::add_raw(&self.desc, &self.value, &other.value, self.desc.precision),
        })
    }

    pub fn neg(&self) -> Self {
        FieldElement {
            desc: self.desc.clone(),
            value: engine::neg_raw(&self.desc, &self.value, self.desc.precision),
        }
    }

    /// Exact difference truncated to N digits past the smaller lead;
    /// total digit cancellation yields the canonical zero.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_desc(other)?;
        Ok(FieldElement {
            desc: self.desc.clone(),
            value: engine::sub_raw(&self.desc, &self.value, &other.value, self.desc.precision),
        })
    }

    /// Exact product, truncated to N digits past the product lead.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_desc(other)?;
        Ok(FieldElement {
            desc: self.desc.clone(),
            value: engine::mul_raw(&self.desc, &self.value, &other.value, self.desc.precision),
        })
    }

    /// Newton inverse to N digits; errors on zero.
    pub fn inv(&self) -> Result<Self> {
        Ok(FieldElement {
            desc: self.desc.clone(),
            value: engine::inv_raw(&self.desc, &self.value, self.desc.precision)?,
        })
    }

    pub fn scale_int(&self, c: i64) -> Self {
        let ce = Self::from_integer(&self.desc, c);
        self.mul(&ce).expect("same descriptor")
    }

    /// Keeps at most `digits` digits of content: the nearest shorter
    /// exact element. Generators use this to keep sampled content well
    /// inside the N-digit windows, where all arithmetic is loss-free.
    pub fn truncated(&self, digits: usize) -> Self {
        let value = self.value.as_ref().and_then(|(lead, d)| {
            let mut d = d[..d.len().min(digits.max(1))].to_vec();
            while d.last().map(|x| x.iter().all(|&c| c == 0)) == Some(true) {
                d.pop();
            }
            if d.is_empty() {
                None
            } else {
                Some((*lead, d))
            }
        });
        FieldElement {
            desc: self.desc.clone(),
            value,
        }
    }

    /// Keeps only the digits at positions strictly below `end`.
    pub fn truncate_at_position(&self, end: i64) -> Self {
        let value = self.value.as_ref().and_then(|(lead, d)| {
            if *lead >= end {
                return None;
            }
            let keep = ((end - lead) as usize).min(d.len());
            let mut d = d[..keep].to_vec();
            while d.last().map(|x| x.iter().all(|&c| c == 0)) == Some(true) {
                d.pop();
            }
            if d.is_empty() {
                None
            } else {
                Some((*lead, d))
            }
        });
        FieldElement {
            desc: self.desc.clone(),
            value,
        }
    }

    /// Multiplies by π^k (exact shift).
    pub fn shift(&self, k: i64) -> Self {
        FieldElement {
            desc: self.desc.clone(),
            value: self
                .value
                .as_ref()
                .map(|(lead, d)| (lead + k, d.clone())),
        }
    }
}

impl FieldElement {
    /// Window-aware agreement: the two elements coincide as far as both
    /// stored windows reach. Operation routes with different window
    /// histories (a subtraction capped at the smaller lead versus a
    /// Galois conjugation filling its own window) store different tail
    /// lengths for the same value; semantic validations compare with
    /// this instead of structural equality.
    pub fn agrees(&self, other: &Self) -> bool {
        match (&self.value, &other.value) {
            (None, None) => true,
            (Some((la, da)), Some((lb, db))) => {
                la == lb && {
                    let m = da.len().min(db.len());
                    da[..m] == db[..m]
                }
            }
            _ => false,
        }
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        *self.desc == *other.desc && self.value == other.value
    }
}
impl Eq for FieldElement {}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            None => write!(f, "0"),
            Some((lead, digits)) => {
                write!(f, "pi^{lead}*{digits:?}")
            }
        }
    }
}

/// Wire form: `{"val": "a/b", "digits": [[c0,...,c_{f-1}], ...]}`, with
/// `"val": "inf"` for the zero element.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldElementRepr {
    pub val: String,
    pub digits: Vec<Vec<i64>>,
}

impl FieldElement {
    pub fn to_repr(&self) -> FieldElementRepr {
        match &self.value {
            None => FieldElementRepr {
                val: "inf".into(),
                digits: Vec::new(),
            },
            Some((lead, digits)) => FieldElementRepr {
                val: format_rat(Rat::new(*lead, self.desc.e)),
                digits: digits.clone(),
            },
        }
    }

    pub fn from_repr(desc: &Arc<FieldDesc>, repr: &FieldElementRepr) -> Result<Self> {
        if repr.val == "inf" {
            if !repr.digits.is_empty() {
                return Err(Error::Parse("zero element must have no digits".into()));
            }
            return Ok(Self::zero(desc));
        }
        let v = parse_rat(&repr.val)?;
        let lead = desc.val_to_pos(v)?;
        if repr.digits.is_empty() || repr.digits.len() > desc.precision {
            return Err(Error::Parse(format!(
                "element must carry between 1 and {} digits",
                desc.precision
            )));
        }
        let mut work = Vec::with_capacity(repr.digits.len());
        for d in &repr.digits {
            if d.len() > desc.f {
                return Err(Error::Parse("digit exceeds residue degree".into()));
            }
            work.push(d.iter().map(|&c| c.rem_euclid(desc.p)).collect());
        }
        let value = engine::normalize(desc, lead, work, lead + desc.precision as i64);
        match &value {
            Some((l, _)) if *l == lead => {}
            None => return Err(Error::Parse("leading digit must be nonzero".into())),
            _ => return Err(Error::Parse("leading digit must be nonzero".into())),
        }
        Ok(FieldElement {
            desc: desc.clone(),
            value,
        })
    }
}
