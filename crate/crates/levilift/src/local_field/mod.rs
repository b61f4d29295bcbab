//! Exact arithmetic in a fixed tame Galois extension E/F of F = Q_p.
//!
//! The extension is described by an unramified degree `f` (residue field
//! F_{p^f}, given by a user-supplied irreducible modulus), a totally and
//! tamely ramified degree `e` with uniformizer π satisfying π^e = p, and a
//! digit precision `N`. Requiring e | p^f − 1 makes E/F Galois; the Galois
//! group is generated by a Frobenius lift σ (fixing π) and the tame twist
//! τ : π ↦ ζ_e·π, with στσ⁻¹ = τ^p.
//!
//! Elements are finite expansions Σ c_i π^i with digits c_i in the residue
//! field, represented by their reduced polynomial lifts. Every stored
//! element is exact; arithmetic is exact followed by truncation to N
//! digits per the window rules documented on each operation.

mod element;
mod galois;
mod residue;

pub use element::{FieldElement, FieldElementRepr};
pub use galois::GaloisElement;
pub use residue::{FqElt, ResidueField};

use crate::error::{Error, Result};
use crate::rat::Rat;
use element::engine;
use num_integer::Integer;
use std::sync::Arc;

/// Description of the ambient extension E/F: all elements of a scenario
/// share one of these.
#[derive(Debug)]
pub struct FieldDesc {
    pub p: i64,
    pub f: usize,
    pub e: i64,
    /// Number of stored π-digits per element.
    pub precision: usize,
    pub(crate) residue: ResidueField,
    /// σ^a(w) for a = 0..f, to extended precision.
    pub(crate) frob_w: Vec<(i64, Vec<FqElt>)>,
    /// ζ_e^j for j = 0..e, to extended precision.
    pub(crate) zeta: Vec<(i64, Vec<FqElt>)>,
    /// Inverse of p modulo e (for the metacyclic composition law).
    pub(crate) p_inv_mod_e: i64,
    /// Precision used for the precomputed Galois constants.
    pub(crate) n_const: usize,
}

impl PartialEq for FieldDesc {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
            && self.f == other.f
            && self.e == other.e
            && self.precision == other.precision
            && self.residue == other.residue
    }
}
impl Eq for FieldDesc {}

impl FieldDesc {
    /// Builds the extension and precomputes its Galois data.
    ///
    /// Verifies: p prime (p ≥ 5; the dyadic and triadic cases are out of
    /// scope), gcd(e, p) = 1, e | p^f − 1 (so E/F is Galois), modulus
    /// irreducible of degree f, N ≥ 1.
    pub fn new(p: i64, f: usize, e: i64, modulus: &[i64], precision: usize) -> Result<Arc<Self>> {
        if p < 5 {
            return Err(Error::FieldDesc(format!(
                "p = {p} rejected: residue characteristic must be a prime >= 5"
            )));
        }
        let residue = ResidueField::new(p, f, modulus)?;
        if e < 1 {
            return Err(Error::FieldDesc("e must be >= 1".into()));
        }
        if e.gcd(&p) != 1 {
            return Err(Error::FieldDesc(format!(
                "e = {e} is not coprime to p = {p}: extension would be wild"
            )));
        }
        let qm1 = residue.q() - 1;
        if qm1 % (e as u128) != 0 {
            return Err(Error::FieldDesc(format!(
                "e = {e} does not divide p^f - 1 = {qm1}: E/F would not be Galois"
            )));
        }
        if precision < 1 {
            return Err(Error::FieldDesc("precision must be >= 1".into()));
        }
        let n_const = precision + 2 * e as usize + 2;
        let mut desc = FieldDesc {
            p,
            f,
            e,
            precision,
            residue,
            frob_w: Vec::new(),
            zeta: Vec::new(),
            p_inv_mod_e: mod_pow_inv(p, e),
            n_const,
        };
        desc.precompute_galois_data()?;
        Ok(Arc::new(desc))
    }

    pub fn residue_field(&self) -> &ResidueField {
        &self.residue
    }

    /// π-position of the valuation-1 element p (= e).
    pub fn pi_positions_per_unit(&self) -> i64 {
        self.e
    }

    /// Converts a rational valuation to a π-position; errors unless the
    /// denominator divides e.
    pub fn val_to_pos(&self, v: Rat) -> Result<i64> {
        let scaled = v * Rat::from_integer(self.e);
        if scaled.denom() != &1 {
            return Err(Error::FieldDesc(format!(
                "valuation {v} is not in (1/{})Z",
                self.e
            )));
        }
        Ok(*scaled.numer())
    }

    pub fn pos_to_val(&self, pos: i64) -> Rat {
        Rat::new(pos, self.e)
    }

    /// Hensel-lifts the Frobenius images of the residue generator and a
    /// canonical primitive e-th root of unity.
    fn precompute_galois_data(&mut self) -> Result<()> {
        let rf = self.residue.clone();
        let cap = self.n_const;
        // σ^a(w): root of the modulus lying above gen^{p^a}
        let modulus = self.residue.modulus.clone();
        let deriv: Vec<i64> = modulus
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| (i as i64) * c)
            .collect();
        let mut frob_w = Vec::with_capacity(self.f);
        for a in 0..self.f {
            let target = rf.pow(&rf.gen(), (self.p as u128).pow(a as u32));
            let root = engine::hensel_root(self, &modulus, &deriv, &target, cap)?;
            frob_w.push(root);
        }
        // ζ_e^j: Hensel root of x^e − 1 over the canonical residue element
        // of order e, then exact powers.
        let mut zeta = Vec::with_capacity(self.e as usize);
        zeta.push((0, vec![rf.one()]));
        if self.e > 1 {
            let mut poly = vec![0i64; self.e as usize + 1];
            poly[0] = -1;
            poly[self.e as usize] = 1;
            let deriv: Vec<i64> = poly
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| (i as i64) * c)
                .collect();
            let zbar = rf.element_of_order(self.e)?;
            let z1 = engine::hensel_root(self, &poly, &deriv, &zbar, cap)?;
            zeta.push(z1.clone());
            for _ in 2..self.e {
                let prev = Some(zeta.last().unwrap().clone());
                let next = engine::mul_raw(self, &prev, &Some(z1.clone()), cap)
                    .ok_or_else(|| Error::Internal("root of unity vanished".into()))?;
                zeta.push(next);
            }
        }
        self.frob_w = frob_w;
        self.zeta = zeta;
        Ok(())
    }

    /// The Galois group as a list, frobenius-major order.
    pub fn galois_group(&self) -> Vec<GaloisElement> {
        let mut out = Vec::with_capacity(self.f * self.e as usize);
        for a in 0..self.f {
            for b in 0..self.e {
                out.push(GaloisElement::new(self, a as i64, b));
            }
        }
        out
    }
}

/// Inverse of p modulo e (1 when e = 1).
fn mod_pow_inv(p: i64, e: i64) -> i64 {
    if e == 1 {
        return 0;
    }
    let mut x = 1i64;
    let pe = p.rem_euclid(e);
    // p^(φ(e)-1) would do; a linear scan is fine at this scale
    for _ in 0..e {
        if (x * pe).rem_euclid(e) == 1 {
            return x;
        }
        x = (x + 1).rem_euclid(e);
        if x == 0 {
            x = 1;
        }
    }
    unreachable!("p invertible mod e by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_galois_and_wild() {
        // e = 3 does not divide 5 - 1
        assert!(FieldDesc::new(5, 1, 3, &[0, 1], 8).is_err());
        // e = 5 = p would be wild
        assert!(FieldDesc::new(5, 1, 5, &[0, 1], 8).is_err());
        assert!(FieldDesc::new(3, 1, 1, &[0, 1], 8).is_err());
    }

    #[test]
    fn builds_all_acceptance_fields() {
        for (f, modulus) in [(1usize, vec![0i64, 1]), (2, vec![3, 0, 1])] {
            for e in [1i64, 2] {
                let d = FieldDesc::new(5, f, e, &modulus, 16).unwrap();
                assert_eq!(d.galois_group().len(), f * e as usize);
            }
        }
    }
}
