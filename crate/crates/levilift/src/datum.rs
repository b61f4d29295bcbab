//! Character-data: a strictly increasing twisted Levi sequence, a symbolic
//! base point, strictly increasing positive depths, and one generic
//! quasicharacter per Levi. This module validates the four defining
//! conditions, decides Γ-stability at the realizer-coset level, restricts
//! a Γ-stable datum to the fixed-point side (collapsing Levis whose fixed
//! points coincide), verifies refactorization, and evaluates the attached
//! semisimple character on test arguments.

use crate::characters::{CharDomain, QuasiCharacter};
use crate::error::{Error, Result};
use crate::rat::{format_rat, QZ, Rat};
use crate::report::{CheckItem, CheckReport};
use crate::root_datum::{is_generic, DualElement, GammaElement, HSide, TorusFrame, TwistedLevi};
use num_traits::Zero;
use std::sync::Arc;

/// The Levi chain of a datum: ambient-side partitions, or fixed-side
/// descriptor names. `ambient` is the group the datum lives in (the full
/// group for a complete datum; an intermediate Levi for the data produced
/// inside a lifting run).
#[derive(Debug, Clone, PartialEq)]
pub enum DatumSide {
    Ambient {
        levis: Vec<TwistedLevi>,
        ambient: TwistedLevi,
    },
    Fixed {
        levis: Vec<String>,
        ambient: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterDatum {
    pub frame: Arc<TorusFrame>,
    pub side: DatumSide,
    /// Symbolic base point: the canonical Γ-fixed point of the standard
    /// apartment. All filtration depths used here are independent of it.
    pub point: String,
    depths: Vec<Rat>,
    chars: Vec<QuasiCharacter>,
}

impl CharacterDatum {
    pub fn new(
        frame: &Arc<TorusFrame>,
        side: DatumSide,
        point: String,
        depths: Vec<Rat>,
        chars: Vec<QuasiCharacter>,
    ) -> Result<Self> {
        let len = match &side {
            DatumSide::Ambient { levis, .. } => levis.len(),
            DatumSide::Fixed { levis, .. } => levis.len(),
        };
        if len == 0 {
            return Err(Error::Datum("a character-datum needs at least one entry".into()));
        }
        if depths.len() != len || chars.len() != len {
            return Err(Error::Datum(format!(
                "shape mismatch: {len} Levis, {} depths, {} characters",
                depths.len(),
                chars.len()
            )));
        }
        Ok(CharacterDatum {
            frame: frame.clone(),
            side,
            point,
            depths,
            chars,
        })
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    pub fn depths(&self) -> &[Rat] {
        &self.depths
    }

    pub fn chars(&self) -> &[QuasiCharacter] {
        &self.chars
    }

    /// s_i = r_i / 2.
    pub fn half_depth(&self, i: usize) -> Rat {
        self.depths[i] / Rat::new(2, 1)
    }

    pub fn is_fixed_side(&self) -> bool {
        matches!(self.side, DatumSide::Fixed { .. })
    }

    fn domain_for(&self, i: usize) -> CharDomain {
        match &self.side {
            DatumSide::Ambient { levis, .. } => CharDomain::Levi(levis[i].clone()),
            DatumSide::Fixed { levis, .. } => CharDomain::Fixed {
                frame: self.frame.clone(),
                name: levis[i].clone(),
            },
        }
    }

    /// Validates the four datum conditions; all violations are reported
    /// rather than raised.
    pub fn validate(&self, hside: Option<&HSide>) -> Result<CheckReport> {
        let mut report = CheckReport::default();
        let n = self.len();

        // CD1: strictly increasing Levi chain, contained in the ambient
        match &self.side {
            DatumSide::Ambient { levis, ambient } => {
                let mut ok = true;
                let mut witness = String::new();
                for i in 0..n {
                    if i + 1 < n
                        && !(levis[i].contained_in(&levis[i + 1]) && levis[i] != levis[i + 1])
                    {
                        ok = false;
                        witness = format!("entry {i} is not strictly contained in entry {}", i + 1);
                        break;
                    }
                }
                if ok && !levis[n - 1].contained_in(ambient) {
                    ok = false;
                    witness = "last Levi is not contained in the ambient group".into();
                }
                report.push(if ok {
                    CheckItem::ok("CD1 levi chain")
                } else {
                    CheckItem::fail("CD1 levi chain", witness)
                });
            }
            DatumSide::Fixed { levis, ambient } => {
                let hside = hside.ok_or_else(|| {
                    Error::Datum("fixed-side datum needs the fixed-side descriptors".into())
                })?;
                let mut ok = true;
                let mut witness = String::new();
                for i in 0..n {
                    let next = if i + 1 < n { &levis[i + 1] } else { ambient };
                    let contained = hside.contained_in(&levis[i], next)?;
                    let strict = hside.roots(&levis[i])? != hside.roots(next)? || i + 1 >= n;
                    if !(contained && strict) {
                        ok = false;
                        witness =
                            format!("`{}` is not strictly contained in `{next}`", levis[i]);
                        break;
                    }
                }
                report.push(if ok {
                    CheckItem::ok("CD1 levi chain")
                } else {
                    CheckItem::fail("CD1 levi chain", witness)
                });
            }
        }

        // CD2: the symbolic point tag
        report.push(if self.point == "standard" {
            CheckItem::ok("CD2 base point")
        } else {
            CheckItem::fail(
                "CD2 base point",
                format!("unknown point tag `{}`", self.point),
            )
        });

        // CD3: strictly increasing positive depths
        let cd3 = self.depths.iter().all(|r| *r > Rat::zero())
            && self.depths.windows(2).all(|w| w[0] < w[1]);
        report.push(if cd3 {
            CheckItem::ok("CD3 depths")
        } else {
            CheckItem::fail("CD3 depths", format!("{:?}", self.depths_display()))
        });

        // CD4: depth and genericity of each character
        for i in 0..n {
            let name = format!("CD4 character {i}");
            let item = match self.cd4_entry(i, hside) {
                Ok(None) => CheckItem::ok(&name),
                Ok(Some(w)) => CheckItem::fail(&name, w),
                Err(e) => CheckItem::fail(&name, e.to_string()),
            };
            report.push(item);
        }
        Ok(report)
    }

    fn cd4_entry(&self, i: usize, hside: Option<&HSide>) -> Result<Option<String>> {
        let chi = &self.chars[i];
        if chi.domain != self.domain_for(i) {
            return Ok(Some("character domain does not match the Levi".into()));
        }
        if chi.depth() != self.depths[i] {
            return Ok(Some(format!(
                "character depth {} != r_{i} = {}",
                format_rat(chi.depth()),
                format_rat(self.depths[i])
            )));
        }
        let (r, top) = chi.realize_at_top()?;
        match &self.side {
            DatumSide::Ambient { levis, ambient } => {
                let next = if i + 1 < levis.len() {
                    &levis[i + 1]
                } else {
                    ambient
                };
                if !is_generic(top, r, &levis[i], next)? {
                    return Ok(Some("top realizer is not generic for the next Levi".into()));
                }
            }
            DatumSide::Fixed { levis, ambient } => {
                let hside = hside.ok_or_else(|| {
                    Error::Datum("fixed-side datum needs the fixed-side descriptors".into())
                })?;
                let next = if i + 1 < levis.len() {
                    &levis[i + 1]
                } else {
                    ambient
                };
                if !hside.is_generic_fixed(top, r, &levis[i], next)? {
                    return Ok(Some("top realizer is not generic for the next Levi".into()));
                }
            }
        }
        Ok(None)
    }

    /// Γ-stability (ambient-side data): every Levi of the chain is
    /// Γ-stable as a partition, and for each entry the realizer coset
    /// X_i + (depth ≤ s_i) is Γ-stable, i.e. depth(γ·X_i − X_i) ≤ s_i
    /// for every generator, where X_i is the realizer sum above s_i.
    /// The point condition holds by the symbolic-point convention.
    pub fn check_gamma_stable(&self) -> Result<CheckReport> {
        let levis = match &self.side {
            DatumSide::Ambient { levis, .. } => levis,
            DatumSide::Fixed { .. } => {
                return Err(Error::Datum(
                    "Γ-stability applies to ambient-side data".into(),
                ))
            }
        };
        let mut report = CheckReport::default();
        report.push(CheckItem::ok("point class Γ-fixed (symbolic convention)"));
        for (i, levi) in levis.iter().enumerate() {
            report.push(if levi.is_gamma_stable() {
                CheckItem::ok(format!("levi {i} Γ-stable"))
            } else {
                CheckItem::fail(
                    format!("levi {i} Γ-stable"),
                    format!("partition {:?} is moved by Γ", levi.blocks()),
                )
            });
        }
        for i in 0..self.len() {
            let s_i = self.half_depth(i);
            let x_i = self.realizer_above(i, s_i)?;
            let mut item = CheckItem::ok(format!("realizer coset {i} Γ-stable"));
            for gen in &self.frame.gamma_gens {
                let gamma = GammaElement {
                    perm: gen.perm.clone(),
                    sign: gen.sign,
                    galois: gen.galois,
                };
                let diff = x_i.gamma_apply(&gamma).sub(&x_i)?;
                let moved = diff.depth().map(|d| d > s_i).unwrap_or(false);
                if moved {
                    item = CheckItem::fail(
                        format!("realizer coset {i} Γ-stable"),
                        format!(
                            "generator `{}` moves the coset: depth(γX−X) = {} > s_{i} = {}",
                            gen.name,
                            format_rat(diff.depth().unwrap()),
                            format_rat(s_i)
                        ),
                    );
                    break;
                }
            }
            report.push(item);
        }
        Ok(report)
    }

    fn realizer_above(&self, i: usize, s: Rat) -> Result<DualElement> {
        let e = self.frame.desc.e;
        let mut acc = DualElement::zero(&self.frame);
        for lv in self.chars[i].levels() {
            if Rat::new(lv.depth_pos, e) > s {
                acc = acc.add(&lv.realizer)?;
            }
        }
        Ok(acc)
    }

    /// Restriction of a Γ-stable ambient-side datum to the fixed-point
    /// group: realizers are replaced by their Γ-averages, each Levi is
    /// matched against the fixed-side descriptors, and maximal runs with
    /// the same fixed point collapse to one entry carrying the run's
    /// largest depth and the product character.
    pub fn restrict_datum(&self, hside: &HSide) -> Result<CharacterDatum> {
        let levis = match &self.side {
            DatumSide::Ambient { levis, .. } => levis,
            DatumSide::Fixed { .. } => {
                return Err(Error::Datum("datum is already on the fixed-point side".into()))
            }
        };
        let stability = self.check_gamma_stable()?;
        if !stability.pass() {
            let w = stability
                .first_failure()
                .map(|i| i.witness.clone().unwrap_or_else(|| i.name.clone()))
                .unwrap_or_default();
            return Err(Error::Datum(format!("datum is not Γ-stable: {w}")));
        }
        // fixed-side name for each Levi
        let mut names = Vec::with_capacity(levis.len());
        for (i, levi) in levis.iter().enumerate() {
            let mut found = None;
            for name in hside.names() {
                if hside.fixed_levi_equals(levi, name)? {
                    found = Some(name.to_string());
                    break;
                }
            }
            names.push(found.ok_or_else(|| {
                Error::Datum(format!(
                    "no fixed-side descriptor matches the fixed point of levi {i}"
                ))
            })?);
        }
        // γ-average every level, re-normalize, restrict to the fixed side
        let mut restricted = Vec::with_capacity(self.len());
        for (i, chi) in self.chars.iter().enumerate() {
            let averaged = chi.gamma_average()?;
            restricted.push(averaged.restrict_to_fixed(hside, &names[i])?);
        }
        // collapse maximal runs with equal fixed points
        let mut out_levis: Vec<String> = Vec::new();
        let mut out_depths: Vec<Rat> = Vec::new();
        let mut out_chars: Vec<QuasiCharacter> = Vec::new();
        for i in 0..self.len() {
            if out_levis.last() == Some(&names[i]) {
                let chi = out_chars.pop().unwrap().mul(&restricted[i])?;
                out_chars.push(chi);
                *out_depths.last_mut().unwrap() = self.depths[i];
            } else {
                out_levis.push(names[i].clone());
                out_depths.push(self.depths[i]);
                out_chars.push(restricted[i].clone());
            }
        }
        let out = CharacterDatum::new(
            &self.frame,
            DatumSide::Fixed {
                levis: out_levis,
                ambient: hside.ambient.clone(),
            },
            self.point.clone(),
            out_depths,
            out_chars,
        )?;
        let validation = out.validate(Some(hside))?;
        if !validation.pass() {
            let w = validation
                .first_failure()
                .map(|i| format!("{}: {:?}", i.name, i.witness))
                .unwrap_or_default();
            return Err(Error::Internal(format!(
                "restriction produced an invalid datum ({w})"
            )));
        }
        Ok(out)
    }

    /// Refactorization: for every i, the normalized product
    /// Π_{j≥i} chars[j]·other[j]⁻¹ restricted to the i-th Levi has depth
    /// ≤ r_{i−1} (with r_{−1} = 0); tails are ignored.
    pub fn check_refactorization(
        &self,
        other: &CharacterDatum,
        hside: Option<&HSide>,
    ) -> Result<CheckReport> {
        if self.side != other.side || self.point != other.point || self.depths != other.depths {
            return Err(Error::Datum(
                "refactorization needs equal Levi chains, point, and depths".into(),
            ));
        }
        let mut report = CheckReport::default();
        for i in 0..self.len() {
            let bound = if i == 0 {
                Rat::zero()
            } else {
                self.depths[i - 1]
            };
            let mut q = QuasiCharacter::trivial(self.domain_for(i));
            for j in i..self.len() {
                let factor = self.chars[j].mul(&other.chars[j].inv())?;
                let restricted = match &self.side {
                    DatumSide::Ambient { levis, .. } => factor.restrict_to_levi(&levis[i])?,
                    DatumSide::Fixed { levis, .. } => {
                        let hside = hside.ok_or_else(|| {
                            Error::Datum("fixed-side refactorization needs descriptors".into())
                        })?;
                        factor.restrict_to_fixed(hside, &levis[i])?
                    }
                };
                q = q.mul(&restricted)?;
            }
            let name = format!("quotient {i} trivial above depth {}", format_rat(bound));
            report.push(if q.depth() <= bound || q.levels().is_empty() {
                CheckItem::ok(name)
            } else {
                CheckItem::fail(
                    name,
                    format!("quotient has depth {}", format_rat(q.depth())),
                )
            });
        }
        Ok(report)
    }

    /// Value of the semisimple character on a test argument declared to
    /// lie in the `factor`-th piece of the attached pro-p group: factors
    /// below contribute through their depth-(s_i)^+ restrictions, the
    /// rest contribute in full.
    pub fn theta_evaluate(&self, u: &DualElement, factor: usize) -> Result<QZ> {
        if factor >= self.len() {
            return Err(Error::Datum(format!(
                "factor index {factor} out of range (datum length {})",
                self.len()
            )));
        }
        let mut acc = QZ::zero();
        for i in 0..self.len() {
            let contribution = if i < factor {
                self.chars[i]
                    .restrict_above_depth(self.half_depth(i))?
                    .evaluate(u)?
            } else {
                self.chars[i].evaluate(u)?
            };
            acc = acc + contribution;
        }
        Ok(acc)
    }

    /// Human-readable depth list.
    pub fn depths_display(&self) -> Vec<String> {
        self.depths.iter().map(|r| format_rat(*r)).collect()
    }

    /// The compact-open-group descriptor attached to the datum: one
    /// factor per Levi with its filtration bound.
    pub fn group_descriptor(&self) -> Vec<(String, String)> {
        (0..self.len())
            .map(|i| {
                let levi = match &self.side {
                    DatumSide::Ambient { levis, .. } => format!("{:?}", levis[i].blocks()),
                    DatumSide::Fixed { levis, .. } => levis[i].clone(),
                };
                let bound = if i == 0 {
                    "0+".to_string()
                } else {
                    format!("{}+", format_rat(self.half_depth(i - 1)))
                };
                (levi, bound)
            })
            .collect()
    }

    /// The semisimple-character descriptor: per-entry extension level.
    pub fn theta_descriptor(&self) -> Vec<(usize, String)> {
        (0..self.len())
            .map(|i| (i, format!("{}+", format_rat(self.half_depth(i)))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_field::{FieldDesc, FieldElement, GaloisElement};
    use crate::root_datum::GammaGen;
    use std::collections::BTreeMap;

    /// Split GL(4) over Q_5 with the trivial-action involution: the
    /// fixed-point group is the (2,2) block Levi.
    fn inner_split() -> (Arc<TorusFrame>, HSide) {
        let d = FieldDesc::new(5, 1, 1, &[0, 1], 16).unwrap();
        let fr = TorusFrame::new(
            &d,
            4,
            vec![0, 1, 2, 3],
            vec![0, 1, 2, 3],
            vec![GammaGen {
                name: "inner".into(),
                perm: vec![0, 1, 2, 3],
                sign: 1,
                galois: GaloisElement::identity(),
            }],
            None,
        )
        .unwrap();
        let root = |j: usize, k: usize| {
            let mut v = vec![Rat::zero(); 4];
            v[j] = Rat::new(1, 1);
            v[k] = Rat::new(-1, 1);
            v
        };
        let hside = HSide::new(
            &fr,
            "H".into(),
            vec![
                (
                    "H".into(),
                    vec![root(0, 1), root(1, 0), root(2, 3), root(3, 2)],
                ),
                ("T".into(), vec![]),
            ],
        )
        .unwrap();
        (fr, hside)
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    fn dual4(fr: &Arc<TorusFrame>, vals: [Rat; 4]) -> DualElement {
        DualElement::new(
            fr,
            vals.iter()
                .map(|v| FieldElement::from_rational(&fr.desc, *v))
                .collect(),
        )
        .unwrap()
    }

    /// The two-regime block-character datum on the fixed side: realizer
    /// (c0, c0, c1, c1) of depth t.
    fn block_datum(fr: &Arc<TorusFrame>, hside: &HSide, c0: Rat, c1: Rat, t: Rat) -> CharacterDatum {
        let x = dual4(fr, [c0, c0, c1, c1]);
        let mut tail = BTreeMap::new();
        tail.insert("chi0".into(), 1);
        tail.insert("chi1".into(), 1);
        let chi = QuasiCharacter::canonical_on_fixed(hside, fr, "H", t, x).unwrap();
        let chi = chi.mul(&QuasiCharacter::from_tail(chi.domain.clone(), tail)).unwrap();
        CharacterDatum::new(
            fr,
            DatumSide::Fixed {
                levis: vec!["H".into()],
                ambient: "H".into(),
            },
            "standard".into(),
            vec![t],
            vec![chi],
        )
        .unwrap()
    }

    #[test]
    fn validate_block_datum() {
        let (fr, hside) = inner_split();
        let delta = block_datum(&fr, &hside, rat(1, 25), rat(2, 25), rat(2, 1));
        let report = delta.validate(Some(&hside)).unwrap();
        assert!(report.pass(), "{:?}", report.first_failure());
    }

    #[test]
    fn cd3_violation_reported() {
        let (fr, hside) = inner_split();
        let x0 = dual4(&fr, [rat(1, 25); 4]);
        let x1 = dual4(&fr, [rat(1, 5); 4]);
        let chi0 = QuasiCharacter::canonical_on_fixed(&hside, &fr, "H", rat(2, 1), x0).unwrap();
        let chi1 = QuasiCharacter::canonical_on_fixed(&hside, &fr, "H", rat(1, 1), x1).unwrap();
        // depths out of order across a two-entry chain
        let datum = CharacterDatum::new(
            &fr,
            DatumSide::Fixed {
                levis: vec!["T".into(), "H".into()],
                ambient: "H".into(),
            },
            "standard".into(),
            vec![rat(2, 1), rat(1, 1)],
            vec![chi0, chi1],
        )
        .unwrap();
        let report = datum.validate(Some(&hside)).unwrap();
        assert!(!report.pass());
        assert!(report.items.iter().any(|i| i.name == "CD3 depths" && !i.pass));
    }

    #[test]
    fn cd4_genericity_violation_reported() {
        let (fr, hside) = inner_split();
        // realizer central for H (not just T): not H-generic relative to T ⊂ H
        let x = dual4(&fr, [rat(1, 25), rat(1, 25), rat(2, 25), rat(2, 25)]);
        let chi = QuasiCharacter::canonical_on_fixed(&hside, &fr, "T", rat(2, 1), x).unwrap();
        let datum = CharacterDatum::new(
            &fr,
            DatumSide::Fixed {
                levis: vec!["T".into()],
                ambient: "H".into(),
            },
            "standard".into(),
            vec![rat(2, 1)],
            vec![chi],
        )
        .unwrap();
        let report = datum.validate(Some(&hside)).unwrap();
        assert!(report.items.iter().any(|i| i.name.starts_with("CD4") && !i.pass));
    }

    /// Ambient-side datum on the split frame: (H-blocks ⊂ G) with generic
    /// characters; Γ acts trivially so stability holds.
    fn gside_datum(fr: &Arc<TorusFrame>) -> CharacterDatum {
        let h = TwistedLevi::new(fr, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let g = TwistedLevi::full(fr);
        let x0 = dual4(fr, [rat(1, 5), rat(1, 5), rat(2, 5), rat(2, 5)]);
        let x1 = dual4(fr, [rat(1, 25); 4]);
        let chi0 = QuasiCharacter::canonical_on_levi(&h, rat(1, 1), x0).unwrap();
        let chi1 = QuasiCharacter::canonical_on_levi(&g, rat(2, 1), x1).unwrap();
        CharacterDatum::new(
            fr,
            DatumSide::Ambient {
                levis: vec![h, g.clone()],
                ambient: g,
            },
            "standard".into(),
            vec![rat(1, 1), rat(2, 1)],
            vec![chi0, chi1],
        )
        .unwrap()
    }

    #[test]
    fn gamma_stability_and_restriction_with_collapse() {
        let (fr, hside) = inner_split();
        let sigma = gside_datum(&fr);
        assert!(sigma.validate(None).unwrap().pass());
        assert!(sigma.check_gamma_stable().unwrap().pass());
        let delta = sigma.restrict_datum(&hside).unwrap();
        // both Levis have fixed point H: single collapsed entry at the
        // larger depth with the product character
        match &delta.side {
            DatumSide::Fixed { levis, .. } => assert_eq!(levis, &vec!["H".to_string()]),
            _ => panic!("expected fixed side"),
        }
        assert_eq!(delta.depths(), &[rat(2, 1)]);
        assert_eq!(delta.chars()[0].levels().len(), 2);
    }

    #[test]
    fn refactorization_reflexive_and_sensitive() {
        let (fr, _) = inner_split();
        let sigma = gside_datum(&fr);
        assert!(sigma.check_refactorization(&sigma, None).unwrap().pass());
        // moving a shallow component from entry 0 into entry 1 (restricted)
        // keeps the refactorization relation
        let mut chars = sigma.chars().to_vec();
        let extra = dual4(&fr, [rat(3, 5); 4]);
        let bump = QuasiCharacter::canonical_on_levi(
            chars[1].domain.levi().unwrap(),
            rat(1, 1),
            extra.clone(),
        )
        .unwrap();
        chars[0] = chars[0]
            .mul(&bump.restrict_to_levi(chars[0].domain.levi().unwrap()).unwrap().inv())
            .unwrap();
        chars[1] = chars[1].mul(&bump).unwrap();
        let moved = CharacterDatum::new(
            &fr,
            sigma.side.clone(),
            sigma.point.clone(),
            sigma.depths().to_vec(),
            chars,
        )
        .unwrap();
        // the moved component telescopes away at entry 0 and has depth
        // 1 ≤ r_0 = 1 at entry 1
        assert!(sigma.check_refactorization(&moved, None).unwrap().pass());
        // changing the top realizer at full depth breaks it
        let mut chars2 = sigma.chars().to_vec();
        let deep = dual4(&fr, [rat(3, 25); 4]);
        let break_top = QuasiCharacter::canonical_on_levi(
            chars2[1].domain.levi().unwrap(),
            rat(2, 1),
            deep,
        )
        .unwrap();
        chars2[1] = chars2[1].mul(&break_top).unwrap();
        let broken = CharacterDatum::new(
            &fr,
            sigma.side.clone(),
            sigma.point.clone(),
            sigma.depths().to_vec(),
            chars2,
        )
        .unwrap();
        assert!(!sigma.check_refactorization(&broken, None).unwrap().pass());
    }

    /// Builds a refactorization of the datum by moving a depth-`d`
    /// central component from entry 0 into entry 1.
    fn moved_variant(fr: &Arc<TorusFrame>, sigma: &CharacterDatum, num: i64) -> CharacterDatum {
        let mut chars = sigma.chars().to_vec();
        let extra = dual4(fr, [rat(num, 5); 4]);
        let bump = QuasiCharacter::canonical_on_levi(
            chars[1].domain.levi().unwrap(),
            rat(1, 1),
            extra,
        )
        .unwrap();
        chars[0] = chars[0]
            .mul(&bump.restrict_to_levi(chars[0].domain.levi().unwrap()).unwrap().inv())
            .unwrap();
        chars[1] = chars[1].mul(&bump).unwrap();
        CharacterDatum::new(
            fr,
            sigma.side.clone(),
            sigma.point.clone(),
            sigma.depths().to_vec(),
            chars,
        )
        .unwrap()
    }

    #[test]
    fn refactorization_is_an_equivalence_relation() {
        let (fr, _) = inner_split();
        let a = gside_datum(&fr);
        let b = moved_variant(&fr, &a, 3);
        let c = moved_variant(&fr, &a, 4);
        // symmetric
        assert!(a.check_refactorization(&b, None).unwrap().pass());
        assert!(b.check_refactorization(&a, None).unwrap().pass());
        // transitive
        assert!(b.check_refactorization(&c, None).unwrap().pass());
        assert!(a.check_refactorization(&c, None).unwrap().pass());
    }

    #[test]
    fn refactorization_equivalent_data_share_theta_values() {
        let (fr, _) = inner_split();
        let a = gside_datum(&fr);
        let b = moved_variant(&fr, &a, 3);
        for num in [25i64, 125, 50] {
            let u = dual4(&fr, [rat(num, 1); 4]);
            for factor in 0..a.len() {
                assert_eq!(
                    a.theta_evaluate(&u, factor).unwrap(),
                    b.theta_evaluate(&u, factor).unwrap(),
                );
            }
        }
    }

    #[test]
    fn theta_values_respect_refactorization() {
        let (fr, hside) = inner_split();
        let sigma = gside_datum(&fr);
        let delta = sigma.restrict_datum(&hside).unwrap();
        // test arguments: Γ-fixed rational vectors at various depths
        for (num, den, depth_ok) in [(25i64, 1i64, true), (125, 1, true), (5, 1, false)] {
            let u = dual4(&fr, [rat(num, den); 4]);
            let theta_sigma = sigma.theta_evaluate(&u, sigma.len() - 1);
            let theta_delta = delta.theta_evaluate(&u, delta.len() - 1);
            if depth_ok {
                assert_eq!(theta_sigma.unwrap(), theta_delta.unwrap());
            } else {
                assert!(theta_sigma.is_err());
            }
        }
        // deep argument evaluates to zero
        let deep = dual4(&fr, [rat(625, 1); 4]);
        assert!(sigma
            .theta_evaluate(&deep, sigma.len() - 1)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn coset_stability_ignores_sub_half_depth_twists() {
        // symplectic frame: a Γ-stable torus datum stays stable when a
        // non-Γ-fixed level at depth ≤ s_0 is multiplied in, and loses
        // stability when the perturbation sits above s_0
        let d = FieldDesc::new(5, 2, 1, &[3, 0, 1], 16).unwrap();
        let fr = TorusFrame::new(
            &d,
            4,
            vec![1, 0, 3, 2],
            vec![0, 1, 2, 3],
            vec![GammaGen {
                name: "duality".into(),
                perm: vec![2, 3, 0, 1],
                sign: -1,
                galois: GaloisElement::identity(),
            }],
            Some(2),
        )
        .unwrap();
        let z = |k: i64| {
            FieldElement::monomial(&d, k, d.residue_field().gen()).unwrap()
        };
        let sigma_gal = GaloisElement::new(&d, 1, 0);
        let x = z(-4)
            .add(&FieldElement::from_rational(&d, rat(1, 625)))
            .unwrap();
        let sx = x.apply_galois(&sigma_gal);
        let top = DualElement::new(&fr, vec![x.clone(), sx.clone(), x.neg(), sx.neg()]).unwrap();
        let torus = TwistedLevi::torus(&fr);
        let chi = QuasiCharacter::canonical_on_levi(&torus, rat(4, 1), top).unwrap();
        // a non-Γ-fixed rational perturbation (not sign-flipped)
        let perturb_at = |k: i64| {
            let y = z(k);
            let sy = y.apply_galois(&sigma_gal);
            DualElement::new(&fr, vec![y.clone(), sy.clone(), y, sy]).unwrap()
        };
        let mk_datum = |chi: QuasiCharacter| {
            CharacterDatum::new(
                &fr,
                DatumSide::Ambient {
                    levis: vec![torus.clone()],
                    ambient: TwistedLevi::full(&fr),
                },
                "standard".into(),
                vec![rat(4, 1)],
                vec![chi],
            )
            .unwrap()
        };
        assert!(mk_datum(chi.clone()).check_gamma_stable().unwrap().pass());
        // s_0 = 2: a depth-1 non-fixed twist keeps the realizer coset stable
        let shallow = QuasiCharacter::canonical_on_levi(&torus, rat(1, 1), perturb_at(-1)).unwrap();
        let twisted = mk_datum(chi.mul(&shallow).unwrap());
        assert!(twisted.validate(None).unwrap().pass());
        assert!(twisted.check_gamma_stable().unwrap().pass());
        // a depth-3 non-fixed twist moves the coset
        let deep = QuasiCharacter::canonical_on_levi(&torus, rat(3, 1), perturb_at(-3)).unwrap();
        let broken = mk_datum(chi.mul(&deep).unwrap());
        assert!(broken.validate(None).unwrap().pass());
        let report = broken.check_gamma_stable().unwrap();
        assert!(!report.pass());
        assert!(report
            .first_failure()
            .unwrap()
            .name
            .contains("realizer coset"));
    }

    #[test]
    fn nonstable_levi_reported_with_witness() {
        // swap-action frame: the Levi {{0},{1},{2,3}} is not Γ-stable
        let d = FieldDesc::new(5, 1, 1, &[0, 1], 16).unwrap();
        let fr = TorusFrame::new(
            &d,
            4,
            vec![0, 1, 2, 3],
            vec![0, 1, 2, 3],
            vec![GammaGen {
                name: "swap".into(),
                perm: vec![2, 3, 0, 1],
                sign: 1,
                galois: GaloisElement::identity(),
            }],
            Some(2),
        )
        .unwrap();
        let levi = TwistedLevi::new(&fr, vec![vec![0], vec![1], vec![2, 3]]).unwrap();
        let g = TwistedLevi::full(&fr);
        let x = dual4(&fr, [rat(1, 25), rat(2, 25), rat(3, 25), rat(3, 25)]);
        let chi = QuasiCharacter::canonical_on_levi(&levi, rat(2, 1), x).unwrap();
        let datum = CharacterDatum::new(
            &fr,
            DatumSide::Ambient {
                levis: vec![levi],
                ambient: g,
            },
            "standard".into(),
            vec![rat(2, 1)],
            vec![chi],
        )
        .unwrap();
        assert!(datum.validate(None).unwrap().pass());
        let report = datum.check_gamma_stable().unwrap();
        assert!(!report.pass());
        let fail = report.first_failure().unwrap();
        assert!(fail.name.contains("levi 0"));
    }
}
