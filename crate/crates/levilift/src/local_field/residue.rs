//! The residue field F_{p^f} = F_p[z]/(m), with m a user-supplied
//! irreducible monic polynomial (verified at construction).

use crate::error::{Error, Result};

/// Element of the residue field: coefficient vector of length `f`
/// (little-endian in the class of `z`), entries reduced into `[0, p)`.
pub type FqElt = Vec<i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueField {
    pub p: i64,
    pub f: usize,
    /// Monic modulus of degree `f`, length `f + 1`, coefficients in `[0, p)`.
    pub modulus: Vec<i64>,
}

pub fn trial_division_is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn prime_factors(mut n: i64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn mod_inv(a: i64, p: i64) -> i64 {
    // extended Euclid; p prime, a not divisible by p
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (p, a.rem_euclid(p));
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1, "inverse of non-unit mod p");
    t.rem_euclid(p)
}

/// Dense polynomial arithmetic over F_p, used for the modulus checks and
/// for element arithmetic (elements are polynomials of degree < f).
fn poly_trim(a: &mut Vec<i64>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn poly_mul_mod_p(a: &[i64], b: &[i64], p: i64) -> Vec<i64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y).rem_euclid(p);
        }
    }
    poly_trim(&mut out);
    out
}

fn poly_rem(a: &[i64], m: &[i64], p: i64) -> Vec<i64> {
    let mut r: Vec<i64> = a.to_vec();
    poly_trim(&mut r);
    let dm = m.len() - 1;
    let lead_inv = mod_inv(m[dm], p);
    while r.len() > dm {
        let dr = r.len() - 1;
        let c = (r[dr] * lead_inv).rem_euclid(p);
        for k in 0..=dm {
            r[dr - dm + k] = (r[dr - dm + k] - c * m[k]).rem_euclid(p);
        }
        poly_trim(&mut r);
    }
    r
}

fn poly_powmod(base: &[i64], mut exp: u128, m: &[i64], p: i64) -> Vec<i64> {
    let mut result = vec![1i64];
    let mut b = poly_rem(base, m, p);
    while exp > 0 {
        if exp & 1 == 1 {
            result = poly_rem(&poly_mul_mod_p(&result, &b, p), m, p);
        }
        b = poly_rem(&poly_mul_mod_p(&b, &b, p), m, p);
        exp >>= 1;
    }
    result
}

fn poly_gcd(a: &[i64], b: &[i64], p: i64) -> Vec<i64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    poly_trim(&mut a);
    poly_trim(&mut b);
    while !b.is_empty() {
        let r = poly_rem(&a, &make_monic(&b, p), p);
        a = b;
        b = r;
    }
    a
}

fn make_monic(a: &[i64], p: i64) -> Vec<i64> {
    let mut a = a.to_vec();
    poly_trim(&mut a);
    if let Some(&lead) = a.last() {
        let inv = mod_inv(lead, p);
        for c in &mut a {
            *c = (*c * inv).rem_euclid(p);
        }
    }
    a
}

impl ResidueField {
    pub fn new(p: i64, f: usize, modulus: &[i64]) -> Result<Self> {
        if !trial_division_is_prime(p) {
            return Err(Error::FieldDesc(format!("p = {p} is not prime")));
        }
        if f == 0 {
            return Err(Error::FieldDesc("f must be >= 1".into()));
        }
        let mut m: Vec<i64> = modulus.iter().map(|c| c.rem_euclid(p)).collect();
        poly_trim(&mut m);
        if m.len() != f + 1 {
            return Err(Error::FieldDesc(format!(
                "residue modulus must have degree f = {f}"
            )));
        }
        let m = make_monic(&m, p);
        let rf = ResidueField { p, f, modulus: m };
        if !rf.modulus_is_irreducible() {
            return Err(Error::FieldDesc(
                "residue modulus is reducible over F_p".into(),
            ));
        }
        Ok(rf)
    }

    /// Rabin test: m irreducible of degree f over F_p iff z^{p^f} = z mod m
    /// and gcd(z^{p^{f/l}} - z, m) = 1 for every prime l | f.
    fn modulus_is_irreducible(&self) -> bool {
        let p = self.p;
        let f = self.f as u32;
        let x = poly_rem(&[0i64, 1], &self.modulus, p);
        let q_pow = |k: u32| (p as u128).pow(k);
        let mut top = poly_powmod(&x, q_pow(f), &self.modulus, p);
        // z^{p^f} - z must vanish
        sub_in_place(&mut top, &x, p);
        if !top.is_empty() {
            return false;
        }
        for l in prime_factors(f as i64) {
            let mut t = poly_powmod(&x, q_pow(f / l as u32), &self.modulus, p);
            sub_in_place(&mut t, &x, p);
            let g = poly_gcd(&self.modulus, &t, p);
            if g.len() != 1 {
                return false;
            }
        }
        true
    }

    pub fn q(&self) -> u128 {
        (self.p as u128).pow(self.f as u32)
    }

    pub fn zero(&self) -> FqElt {
        vec![0; self.f]
    }

    pub fn one(&self) -> FqElt {
        let mut v = vec![0; self.f];
        v[0] = 1;
        v
    }

    pub fn from_int(&self, n: i64) -> FqElt {
        let mut v = vec![0; self.f];
        v[0] = n.rem_euclid(self.p);
        v
    }

    /// The class of z itself (the residue generator).
    pub fn gen(&self) -> FqElt {
        if self.f == 1 {
            // degree-1 modulus x - c: the generator is the constant c
            self.from_int(-self.modulus[0])
        } else {
            let mut v = vec![0; self.f];
            v[1] = 1;
            v
        }
    }

    pub fn is_zero(&self, a: &FqElt) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: &FqElt, b: &FqElt) -> FqElt {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| (x + y).rem_euclid(self.p))
            .collect()
    }

    pub fn neg(&self, a: &FqElt) -> FqElt {
        a.iter().map(|&x| (-x).rem_euclid(self.p)).collect()
    }

    pub fn mul(&self, a: &FqElt, b: &FqElt) -> FqElt {
        let prod = poly_mul_mod_p(a, b, self.p);
        let mut r = poly_rem(&prod, &self.modulus, self.p);
        r.resize(self.f, 0);
        r
    }

    pub fn pow(&self, a: &FqElt, mut exp: u128) -> FqElt {
        let mut result = self.one();
        let mut b = a.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul(&result, &b);
            }
            b = self.mul(&b, &b);
            exp >>= 1;
        }
        result
    }

    pub fn inv(&self, a: &FqElt) -> Result<FqElt> {
        if self.is_zero(a) {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a, self.q() - 2))
    }

    /// x -> x^p, the residue Frobenius.
    pub fn frobenius(&self, a: &FqElt) -> FqElt {
        self.pow(a, self.p as u128)
    }

    /// Smallest element (in lexicographic coefficient order) of
    /// multiplicative order exactly `e`. Requires e | p^f - 1.
    pub fn element_of_order(&self, e: i64) -> Result<FqElt> {
        if e == 1 {
            return Ok(self.one());
        }
        let ls = prime_factors(e);
        let mut c = self.zero();
        loop {
            // lexicographic successor over coefficient vectors
            let mut i = 0;
            loop {
                if i == self.f {
                    return Err(Error::FieldDesc(format!(
                        "no element of order {e} in the residue field"
                    )));
                }
                c[i] += 1;
                if c[i] < self.p {
                    break;
                }
                c[i] = 0;
                i += 1;
            }
            if self.is_zero(&c) {
                continue;
            }
            if !self.is_zero(&sub(self, &self.pow(&c, e as u128), &self.one()))
            {
                continue;
            }
            if ls
                .iter()
                .all(|&l| !self.is_zero(&sub(self, &self.pow(&c, (e / l) as u128), &self.one())))
            {
                return Ok(c);
            }
        }
    }
}

fn sub(rf: &ResidueField, a: &FqElt, b: &FqElt) -> FqElt {
    rf.add(a, &rf.neg(b))
}

fn sub_in_place(a: &mut Vec<i64>, b: &[i64], p: i64) {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (i, &c) in b.iter().enumerate() {
        a[i] = (a[i] - c).rem_euclid(p);
    }
    poly_trim(a);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f25() -> ResidueField {
        // z^2 - 2 over F_5, written z^2 + 3
        ResidueField::new(5, 2, &[3, 0, 1]).unwrap()
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(ResidueField::new(4, 1, &[0, 1]).is_err()); // p not prime
        assert!(ResidueField::new(5, 2, &[4, 0, 1]).is_err()); // z^2 - 1 reducible
        assert!(ResidueField::new(5, 2, &[0, 1]).is_err()); // degree mismatch
    }

    #[test]
    fn field_axioms_smoke() {
        let k = f25();
        let z = k.gen();
        // z^2 = 2
        assert_eq!(k.mul(&z, &z), k.from_int(2));
        let a = k.add(&z, &k.one());
        let ai = k.inv(&a).unwrap();
        assert_eq!(k.mul(&a, &ai), k.one());
        assert!(k.inv(&k.zero()).is_err());
    }

    #[test]
    fn frobenius_negates_sqrt2() {
        // z^5 = z * (z^2)^2 = 4z in F_25
        let k = f25();
        let z = k.gen();
        assert_eq!(k.frobenius(&z), k.neg(&z));
    }

    #[test]
    fn order_element_canonical() {
        let k = ResidueField::new(5, 1, &[0, 1]).unwrap();
        // order 2 element in F_5 is 4
        assert_eq!(k.element_of_order(2).unwrap(), vec![4]);
        assert_eq!(k.element_of_order(4).unwrap(), vec![2]);
        let k2 = f25();
        let c = k2.element_of_order(8).unwrap();
        assert_eq!(k2.pow(&c, 8), k2.one());
        assert_ne!(k2.pow(&c, 4), k2.one());
    }
}
