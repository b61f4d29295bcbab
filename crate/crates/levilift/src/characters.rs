//! Quasicharacters of twisted Levi subgroups, represented canonically by
//! their graded realizer lists plus a formal depth-zero tail.
//!
//! A quasicharacter of depth r restricted to a filtration subgroup is
//! determined by a realizer X in the dual of the center, via
//! η(e(Y)) = ψ(X(Y)). The canonical representation stores one realizer
//! per depth, strictly increasing; products merge level lists, with
//! cancellations re-filed at their true depth. The depth-zero part is a
//! formal free-abelian tail that is never evaluated: the lifting
//! contracts are all "up to a depth-zero twist".

use crate::error::{Error, Result};
use crate::rat::{QZ, Rat};
use crate::root_datum::{DualElement, HSide, TorusFrame, TwistedLevi};
use num_traits::Zero;
use std::collections::BTreeMap;
use std::sync::Arc;

/// The group a quasicharacter lives on: an ambient-side twisted Levi, or
/// a fixed-point-side Levi referenced by descriptor name.
#[derive(Debug, Clone)]
pub enum CharDomain {
    Levi(TwistedLevi),
    Fixed { frame: Arc<TorusFrame>, name: String },
}

impl PartialEq for CharDomain {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CharDomain::Levi(a), CharDomain::Levi(b)) => a == b,
            (
                CharDomain::Fixed { frame: fa, name: na },
                CharDomain::Fixed { frame: fb, name: nb },
            ) => *fa == *fb && na == nb,
            _ => false,
        }
    }
}

impl CharDomain {
    pub fn frame(&self) -> &Arc<TorusFrame> {
        match self {
            CharDomain::Levi(l) => &l.frame,
            CharDomain::Fixed { frame, .. } => frame,
        }
    }

    pub fn fixed_name(&self) -> Option<&str> {
        match self {
            CharDomain::Fixed { name, .. } => Some(name),
            CharDomain::Levi(_) => None,
        }
    }

    pub fn levi(&self) -> Option<&TwistedLevi> {
        match self {
            CharDomain::Levi(l) => Some(l),
            CharDomain::Fixed { .. } => None,
        }
    }
}

/// One graded piece: a realizer of exact depth `depth_pos`/e.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub depth_pos: i64,
    pub realizer: DualElement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiCharacter {
    pub domain: CharDomain,
    levels: Vec<Level>,
    tail: BTreeMap<String, i64>,
}

impl QuasiCharacter {
    pub fn trivial(domain: CharDomain) -> Self {
        QuasiCharacter {
            domain,
            levels: Vec::new(),
            tail: BTreeMap::new(),
        }
    }

    /// A pure depth-zero character: just a formal tail.
    pub fn from_tail(domain: CharDomain, tail: BTreeMap<String, i64>) -> Self {
        let mut q = Self::trivial(domain);
        q.tail = tail;
        q.tail.retain(|_, c| *c != 0);
        q
    }

    /// The canonical depth-r character realized by X on an ambient-side
    /// Levi: the single-level list {(r, X)} with zero tail.
    pub fn canonical_on_levi(levi: &TwistedLevi, depth: Rat, x: DualElement) -> Result<Self> {
        if !x.is_central_for(levi)? {
            return Err(Error::Character(
                "realizer is not central for the domain Levi".into(),
            ));
        }
        Self::single_level(CharDomain::Levi(levi.clone()), depth, x)
    }

    /// The canonical depth-r character realized by a Γ-fixed X on a
    /// fixed-point-side Levi.
    pub fn canonical_on_fixed(
        hside: &HSide,
        frame: &Arc<TorusFrame>,
        name: &str,
        depth: Rat,
        x: DualElement,
    ) -> Result<Self> {
        if !hside.is_central_fixed(&x, name)? {
            return Err(Error::Character(format!(
                "realizer is not central for the fixed-side Levi `{name}`"
            )));
        }
        Self::single_level(
            CharDomain::Fixed {
                frame: frame.clone(),
                name: name.to_string(),
            },
            depth,
            x,
        )
    }

    fn single_level(domain: CharDomain, depth: Rat, x: DualElement) -> Result<Self> {
        let pos = domain.frame().desc.val_to_pos(depth)?;
        if pos <= 0 {
            return Err(Error::Character(format!("level depth {depth} must be positive")));
        }
        if x.depth_pos() != Some(pos) {
            return Err(Error::Character(format!(
                "realizer depth {:?} does not equal the declared depth {depth}",
                x.depth()
            )));
        }
        let mut q = Self::trivial(domain);
        q.levels = normalize_levels(vec![(pos, x)])?;
        if q.depth_pos() != pos {
            return Err(Error::Character(format!(
                "realizer content does not reach the declared depth {depth}"
            )));
        }
        Ok(q)
    }

    /// Builds a character from raw levels, normalizing (merging equal
    /// depths, re-filing cancellations, dropping trivial pieces).
    pub fn from_levels(
        domain: CharDomain,
        levels: Vec<(i64, DualElement)>,
        tail: BTreeMap<String, i64>,
    ) -> Result<Self> {
        let mut q = Self::from_tail(domain, tail);
        q.levels = normalize_levels(levels)?;
        Ok(q)
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn tail(&self) -> &BTreeMap<String, i64> {
        &self.tail
    }

    pub fn is_trivial(&self) -> bool {
        self.levels.is_empty() && self.tail.is_empty()
    }

    /// Depth in π-position units: the top level, or 0 when no levels.
    pub fn depth_pos(&self) -> i64 {
        self.levels.last().map(|l| l.depth_pos).unwrap_or(0)
    }

    /// Depth as a rational (0 for a depth-zero character).
    pub fn depth(&self) -> Rat {
        self.domain.frame().desc.pos_to_val(self.depth_pos())
    }

    /// The top level (r, X): the realizer of the character on the
    /// depth-(r/2)^+ filtration, modulo shallower levels.
    pub fn realize_at_top(&self) -> Result<(Rat, &DualElement)> {
        let top = self
            .levels
            .last()
            .ok_or_else(|| Error::Character("depth-zero character has no realizer".into()))?;
        Ok((
            self.domain.frame().desc.pos_to_val(top.depth_pos),
            &top.realizer,
        ))
    }

    /// Sum of all realizers at levels of depth > s: the realizer of the
    /// restriction to the depth-s^+ filtration subgroup.
    pub fn realizer_sum_above(&self, s_pos: i64) -> Result<DualElement> {
        let frame = self.domain.frame();
        let mut acc = DualElement::zero(frame);
        for lv in &self.levels {
            if lv.depth_pos > s_pos {
                acc = acc.add(&lv.realizer)?;
            }
        }
        Ok(acc)
    }

    fn check_same_domain(&self, other: &Self) -> Result<()> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(Error::Character("domain mismatch in character operation".into()))
        }
    }

    /// Product: merges level lists (equal-depth realizers add and are
    /// re-filed at their true depth when cancellation lowers it); tails
    /// add formally.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_domain(other)?;
        let mut levels: Vec<(i64, DualElement)> = Vec::new();
        for lv in self.levels.iter().chain(&other.levels) {
            levels.push((lv.depth_pos, lv.realizer.clone()));
        }
        let mut tail = self.tail.clone();
        for (sym, c) in &other.tail {
            *tail.entry(sym.clone()).or_insert(0) += c;
        }
        tail.retain(|_, c| *c != 0);
        Ok(QuasiCharacter {
            domain: self.domain.clone(),
            levels: normalize_levels(levels)?,
            tail,
        })
    }

    pub fn inv(&self) -> Self {
        QuasiCharacter {
            domain: self.domain.clone(),
            levels: self
                .levels
                .iter()
                .map(|lv| Level {
                    depth_pos: lv.depth_pos,
                    realizer: lv.realizer.neg(),
                })
                .collect(),
            tail: self.tail.iter().map(|(s, c)| (s.clone(), -c)).collect(),
        }
    }

    /// Keeps only levels of depth > s and drops the tail: the model of
    /// the restriction to the depth-s^+ filtration subgroup.
    pub fn restrict_above_depth(&self, s: Rat) -> Result<Self> {
        let e = self.domain.frame().desc.e;
        Ok(QuasiCharacter {
            domain: self.domain.clone(),
            levels: self
                .levels
                .iter()
                .filter(|lv| Rat::new(lv.depth_pos, e) > s)
                .cloned()
                .collect(),
            tail: BTreeMap::new(),
        })
    }

    /// Restriction to a smaller ambient-side Levi (realizers unchanged:
    /// central functionals of the larger group remain central).
    pub fn restrict_to_levi(&self, levi: &TwistedLevi) -> Result<Self> {
        match &self.domain {
            CharDomain::Levi(own) => {
                if !levi.contained_in(own) {
                    return Err(Error::Character(
                        "restriction target is not contained in the domain".into(),
                    ));
                }
            }
            CharDomain::Fixed { .. } => {
                return Err(Error::Character(
                    "cannot restrict a fixed-side character to an ambient Levi".into(),
                ))
            }
        }
        Ok(QuasiCharacter {
            domain: CharDomain::Levi(levi.clone()),
            levels: self.levels.clone(),
            tail: self.tail.clone(),
        })
    }

    /// Restriction to the fixed-point side. From an ambient-side domain
    /// this requires every realizer to be Γ-fixed; between fixed-side
    /// Levis it requires containment of root sets.
    pub fn restrict_to_fixed(&self, hside: &HSide, name: &str) -> Result<Self> {
        let frame = self.domain.frame().clone();
        match &self.domain {
            CharDomain::Levi(_) => {
                for lv in &self.levels {
                    if !lv.realizer.is_gamma_fixed() {
                        return Err(Error::Character(
                            "restriction to the fixed-point group needs Γ-fixed realizers".into(),
                        ));
                    }
                }
            }
            CharDomain::Fixed { name: own, .. } => {
                if !hside.contained_in(name, own)? {
                    return Err(Error::Character(format!(
                        "`{name}` is not contained in `{own}`"
                    )));
                }
            }
        }
        for lv in &self.levels {
            if !hside.is_central_fixed(&lv.realizer, name)? {
                return Err(Error::Character(format!(
                    "realizer at depth {} is not central for `{name}`",
                    lv.depth_pos
                )));
            }
        }
        Ok(QuasiCharacter {
            domain: CharDomain::Fixed {
                frame,
                name: name.to_string(),
            },
            levels: self.levels.clone(),
            tail: self.tail.clone(),
        })
    }

    /// Replaces every level's realizer by its Γ-average and renormalizes.
    /// On Γ-fixed levels this is the identity; coset-stable levels keep
    /// their depth.
    pub fn gamma_average(&self) -> Result<Self> {
        let mut levels = Vec::new();
        for lv in &self.levels {
            levels.push((lv.depth_pos, lv.realizer.gamma_average()?));
        }
        QuasiCharacter::from_levels(self.domain.clone(), levels, self.tail.clone())
    }

    /// Equality modulo depth s: the normalized quotient has depth ≤ s.
    /// Tails are ignored unless `strict_tails` is set.
    pub fn equal_mod(&self, other: &Self, s: Rat, strict_tails: bool) -> Result<bool> {
        let q = self.mul(&other.inv())?;
        if q.depth() > s {
            return Ok(false);
        }
        if strict_tails && !q.tail.is_empty() {
            return Ok(false);
        }
        Ok(true)
    }

    /// Evaluation on a Lie-algebra argument of positive depth d in the
    /// linear regime d > depth(χ)/2:
    /// ψ(Tr(Σ_k X_k u_k)) summed over the levels. Additive in u.
    pub fn evaluate(&self, u: &DualElement) -> Result<QZ> {
        let d = match u.coords().iter().filter_map(|c| c.val()).min() {
            None => return Ok(QZ::zero()),
            Some(d) => d,
        };
        if d <= Rat::zero() {
            return Err(Error::Character(format!(
                "evaluation argument must have positive depth, found {d}"
            )));
        }
        if Rat::new(2, 1) * d <= self.depth() {
            return Err(Error::Character(format!(
                "argument depth {d} is outside the linear regime (need > {}/2)",
                self.depth()
            )));
        }
        let mut acc = QZ::zero();
        for lv in &self.levels {
            let pairing = lv.realizer.pair(u)?;
            acc = acc + pairing.trace_to_base()?.psi_value()?;
        }
        Ok(acc)
    }
}

/// The canonical realizer of a level: content at valuation ≥ 0 is
/// stripped, being invisible to every positive-depth observable (its
/// pairings land in the maximal ideal, where ψ is trivial). This bounds
/// every realizer's content by the depth scale.
fn strip_nonnegative(x: &DualElement) -> DualElement {
    x.map_coords(|c| c.truncate_at_position(0))
}

/// Sorts, merges equal depths, and re-files any merged realizer whose
/// true depth dropped; iterates until every stored level is exact.
///
/// The stored level list is determined by the inputs up to merge-order
/// effects in cancellation corner cases (a partially cancelling merge
/// may keep a shallow remainder inside a deeper level or as its own
/// level). The two forms are equal as characters: their quotient has no
/// levels, which is what `equal_mod` and all the pipeline checks use.
fn normalize_levels(levels: Vec<(i64, DualElement)>) -> Result<Vec<Level>> {
    let mut pending = levels;
    let mut slots: BTreeMap<i64, DualElement> = BTreeMap::new();
    let mut rounds = 0usize;
    while let Some((pos, x)) = pending.pop() {
        rounds += 1;
        if rounds > 10_000 {
            return Err(Error::Internal("level normalization did not settle".into()));
        }
        let x = strip_nonnegative(&x);
        let true_pos = match x.depth_pos() {
            None => continue, // realizer vanished
            Some(p) => p,
        };
        if true_pos > pos {
            return Err(Error::Character(format!(
                "realizer at slot {pos} has larger depth {true_pos}"
            )));
        }
        if true_pos <= 0 {
            // depth-zero remainder: observably trivial at positive depth
            continue;
        }
        match slots.remove(&true_pos) {
            None => {
                slots.insert(true_pos, x);
            }
            Some(existing) => {
                let merged = existing.add(&x)?;
                pending.push((true_pos, merged));
            }
        }
    }
    Ok(slots
        .into_iter()
        .map(|(depth_pos, realizer)| Level { depth_pos, realizer })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_field::{FieldDesc, FieldElement};
    use crate::root_datum::TwistedLevi;

    fn frame() -> Arc<TorusFrame> {
        let d = FieldDesc::new(5, 1, 1, &[0, 1], 16).unwrap();
        TorusFrame::new(&d, 2, vec![0, 1], vec![0, 1], vec![], None).unwrap()
    }

    fn dual(frame: &Arc<TorusFrame>, a: Rat, b: Rat) -> DualElement {
        let d = &frame.desc;
        DualElement::new(
            frame,
            vec![
                FieldElement::from_rational(d, a),
                FieldElement::from_rational(d, b),
            ],
        )
        .unwrap()
    }

    fn full(frame: &Arc<TorusFrame>) -> TwistedLevi {
        TwistedLevi::full(frame)
    }

    #[test]
    fn depth_and_top_realizer() {
        let fr = frame();
        let g = full(&fr);
        let x = dual(&fr, Rat::new(1, 125), Rat::new(1, 125));
        let chi = QuasiCharacter::canonical_on_levi(&g, Rat::new(3, 1), x.clone()).unwrap();
        assert_eq!(chi.depth(), Rat::new(3, 1));
        let y = dual(&fr, Rat::new(2, 5), Rat::new(2, 5));
        let low = QuasiCharacter::canonical_on_levi(&g, Rat::new(1, 1), y).unwrap();
        let prod = chi.mul(&low).unwrap();
        assert_eq!(prod.depth(), Rat::new(3, 1));
        assert_eq!(prod.levels().len(), 2);
        let (r, top) = prod.realize_at_top().unwrap();
        assert_eq!(r, Rat::new(3, 1));
        assert_eq!(top, &x);
        assert!(QuasiCharacter::trivial(CharDomain::Levi(g)).realize_at_top().is_err());
    }

    #[test]
    fn group_laws_and_cancellation() {
        let fr = frame();
        let g = full(&fr);
        let x = dual(&fr, Rat::new(1, 125), Rat::new(1, 125));
        let mut tail = BTreeMap::new();
        tail.insert("chi0".to_string(), 2);
        let chi = QuasiCharacter::from_levels(
            CharDomain::Levi(g.clone()),
            vec![(3, x.clone())],
            tail,
        )
        .unwrap();
        let id = chi.mul(&chi.inv()).unwrap();
        assert!(id.is_trivial());
        // cancellation then re-filing: {(3, X)}·{(3, −X+Y)} → {(2, Y)}
        let y = dual(&fr, Rat::new(3, 25), Rat::new(3, 25));
        let other = QuasiCharacter::from_levels(
            CharDomain::Levi(g.clone()),
            vec![(3, x.neg().add(&y).unwrap())],
            BTreeMap::new(),
        )
        .unwrap();
        let prod = chi.mul(&other).unwrap();
        assert_eq!(prod.levels().len(), 1);
        assert_eq!(prod.depth(), Rat::new(2, 1));
        assert_eq!(prod.realize_at_top().unwrap().1, &y);
    }

    #[test]
    fn depth_slot_validation() {
        let fr = frame();
        let g = full(&fr);
        let x = dual(&fr, Rat::new(1, 5), Rat::new(1, 5));
        // declared depth 3 but realizer has depth 1
        assert!(QuasiCharacter::canonical_on_levi(&g, Rat::new(3, 1), x.clone()).is_err());
        // slot below the true depth is rejected
        assert!(QuasiCharacter::from_levels(
            CharDomain::Levi(g.clone()),
            vec![(0, x.clone())],
            BTreeMap::new()
        )
        .is_err());
        // non-central realizer rejected
        let skew = dual(&fr, Rat::new(1, 5), Rat::new(2, 5));
        assert!(QuasiCharacter::canonical_on_levi(&g, Rat::new(1, 1), skew).is_err());
    }

    #[test]
    fn restrict_above_depth_keeps_deep_levels() {
        let fr = frame();
        let g = full(&fr);
        let a = dual(&fr, Rat::new(2, 5), Rat::new(2, 5));
        let b = dual(&fr, Rat::new(1, 125), Rat::new(1, 125));
        let mut tail = BTreeMap::new();
        tail.insert("t".into(), 1);
        let chi = QuasiCharacter::from_levels(
            CharDomain::Levi(g.clone()),
            vec![(1, a), (3, b.clone())],
            tail,
        )
        .unwrap();
        let hi = chi.restrict_above_depth(Rat::new(2, 1)).unwrap();
        assert_eq!(hi.levels().len(), 1);
        assert_eq!(hi.realize_at_top().unwrap().1, &b);
        assert!(hi.tail().is_empty());
        assert!(chi
            .restrict_above_depth(Rat::new(3, 1))
            .unwrap()
            .levels()
            .is_empty());
        // s = 0 keeps all levels, drops tail
        let all = chi.restrict_above_depth(Rat::zero()).unwrap();
        assert_eq!(all.levels().len(), 2);
        assert!(all.tail().is_empty());
    }

    #[test]
    fn equality_mod_depth() {
        let fr = frame();
        let g = full(&fr);
        let x = dual(&fr, Rat::new(1, 125), Rat::new(1, 125));
        let chi = QuasiCharacter::canonical_on_levi(&g, Rat::new(3, 1), x.clone()).unwrap();
        assert!(chi.equal_mod(&chi, Rat::new(3, 2), true).unwrap());
        // perturb by a deep element: equal mod shallower s
        let eps = dual(&fr, Rat::new(1, 5), Rat::new(1, 5));
        let chi2 = QuasiCharacter::canonical_on_levi(&g, Rat::new(3, 1), x.add(&eps).unwrap())
            .unwrap();
        assert!(chi.equal_mod(&chi2, Rat::new(1, 1), false).unwrap());
        assert!(!chi.equal_mod(&chi2, Rat::new(1, 2), false).unwrap());
        // top realizers differing at full depth: not equal mod 3/2
        let x2 = dual(&fr, Rat::new(2, 125), Rat::new(2, 125));
        let chi3 = QuasiCharacter::canonical_on_levi(&g, Rat::new(3, 1), x2).unwrap();
        assert!(!chi.equal_mod(&chi3, Rat::new(3, 2), false).unwrap());
        // strict mode also compares tails symbolically
        let mut tail = BTreeMap::new();
        tail.insert("chi0".to_string(), 1);
        let twisted = chi
            .mul(&QuasiCharacter::from_tail(chi.domain.clone(), tail))
            .unwrap();
        assert!(chi.equal_mod(&twisted, Rat::new(1, 2), false).unwrap());
        assert!(!chi.equal_mod(&twisted, Rat::new(1, 2), true).unwrap());
    }

    #[test]
    fn evaluation_in_linear_regime() {
        let fr = frame();
        let g = full(&fr);
        let x = dual(&fr, Rat::new(1, 25), Rat::new(1, 25));
        let chi = QuasiCharacter::canonical_on_levi(&g, Rat::new(2, 1), x).unwrap();
        // u = 0 → 0
        assert!(chi.evaluate(&DualElement::zero(&fr)).unwrap().is_zero());
        // u deeper than the depth → 0 (pairing lands in 𝔭_F)
        let deep = dual(&fr, Rat::new(125, 1), Rat::new(125, 1));
        assert!(chi.evaluate(&deep).unwrap().is_zero());
        // pairing of valuation 0: nontrivial value, additivity
        let u = dual(&fr, Rat::new(25, 1), Rat::new(25, 1));
        let v = dual(&fr, Rat::new(50, 1), Rat::new(75, 1));
        let eu = chi.evaluate(&u).unwrap();
        assert!(!eu.is_zero());
        let ev = chi.evaluate(&v).unwrap();
        assert_eq!(
            chi.evaluate(&u.add(&v).unwrap()).unwrap(),
            eu + ev
        );
        // below the linear regime: explicit error
        let shallow = dual(&fr, Rat::new(5, 1), Rat::new(5, 1));
        assert!(chi.evaluate(&shallow).is_err());
    }

    #[test]
    fn restriction_products_commute() {
        let fr = frame();
        let g = full(&fr);
        let a = dual(&fr, Rat::new(2, 5), Rat::new(2, 5));
        let b = dual(&fr, Rat::new(1, 125), Rat::new(1, 125));
        let chi1 = QuasiCharacter::canonical_on_levi(&g, Rat::new(1, 1), a).unwrap();
        let chi2 = QuasiCharacter::canonical_on_levi(&g, Rat::new(3, 1), b).unwrap();
        let s = Rat::new(1, 1);
        let lhs = chi1.mul(&chi2).unwrap().restrict_above_depth(s).unwrap();
        let rhs = chi1
            .restrict_above_depth(s)
            .unwrap()
            .mul(&chi2.restrict_above_depth(s).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
        // restriction to the torus keeps the level list
        let torus = TwistedLevi::torus(&fr);
        let res = chi2.restrict_to_levi(&torus).unwrap();
        assert_eq!(res.levels(), chi2.levels());
        assert!(chi2.restrict_to_levi(&g).unwrap() == chi2);
    }
}
