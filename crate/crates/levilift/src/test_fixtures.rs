//! Shared in-crate scenario builders for tests: the split and unramified
//! GL(4) frames with an inner involution (fixed point GL(2)×GL(2)), and
//! the symplectic-duality frame (fixed point Sp(4)).

use crate::characters::QuasiCharacter;
use crate::datum::{CharacterDatum, DatumSide};
use crate::local_field::{FieldDesc, FieldElement, GaloisElement};
use crate::rat::Rat;
use crate::root_datum::{DualElement, GammaGen, HSide, TorusFrame, TwistedLevi};
use std::sync::Arc;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

fn e_root(n: usize, j: usize, k: usize) -> Vec<Rat> {
    let mut v = vec![Rat::new(0, 1); n];
    v[j] = Rat::new(1, 1);
    v[k] = Rat::new(-1, 1);
    v
}

/// Split GL(4) over Q_5, inner involution: H = GL(2)×GL(2) as the block
/// partition {{0,1},{2,3}}; fixed-side Levis H, T×GL2, GL2×T, T.
pub fn split_inner() -> (Arc<TorusFrame>, HSide) {
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
    let hside = HSide::new(
        &fr,
        "H".into(),
        vec![
            (
                "H".into(),
                vec![e_root(4, 0, 1), e_root(4, 1, 0), e_root(4, 2, 3), e_root(4, 3, 2)],
            ),
            ("TxGL2".into(), vec![e_root(4, 2, 3), e_root(4, 3, 2)]),
            ("GL2xT".into(), vec![e_root(4, 0, 1), e_root(4, 1, 0)]),
            ("T".into(), vec![]),
        ],
    )
    .unwrap();
    (fr, hside)
}

/// GL(4) over Q_5 with the unramified quadratic splitting field: the
/// torus is (Res_{E/F} G_m)^2 with Galois pairing (0,1) and (2,3);
/// Γ is the inner involution fixing GL(2)×GL(2).
pub fn unramified_inner() -> (Arc<TorusFrame>, HSide) {
    let d = FieldDesc::new(5, 2, 1, &[3, 0, 1], 16).unwrap();
    let fr = TorusFrame::new(
        &d,
        4,
        vec![1, 0, 3, 2],
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
    let hside = HSide::new(
        &fr,
        "H".into(),
        vec![
            (
                "H".into(),
                vec![e_root(4, 0, 1), e_root(4, 1, 0), e_root(4, 2, 3), e_root(4, 3, 2)],
            ),
            ("T".into(), vec![]),
        ],
    )
    .unwrap();
    (fr, hside)
}

/// GL(4) over Q_5 with the unramified quadratic and the symplectic
/// duality action γ: coordinate swap (0↔2, 1↔3) with sign −1; the fixed
/// point group is Sp(4) with maximal torus Res_{E/F} G_m.
pub fn symplectic() -> (Arc<TorusFrame>, HSide) {
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
    let half = Rat::new(1, 2);
    let short1 = vec![half, -half, -half, half];
    let short2 = vec![half, half, -half, -half];
    let long1 = vec![Rat::new(1, 1), Rat::new(0, 1), Rat::new(-1, 1), Rat::new(0, 1)];
    let long2 = vec![Rat::new(0, 1), Rat::new(1, 1), Rat::new(0, 1), Rat::new(-1, 1)];
    let neg = |v: &Vec<Rat>| v.iter().map(|c| -*c).collect::<Vec<Rat>>();
    let sp4 = vec![
        short1.clone(),
        neg(&short1),
        short2.clone(),
        neg(&short2),
        long1.clone(),
        neg(&long1),
        long2.clone(),
        neg(&long2),
    ];
    let hside = HSide::new(
        &fr,
        "Sp4".into(),
        vec![("Sp4".into(), sp4), ("S".into(), vec![])],
    )
    .unwrap();
    (fr, hside)
}

pub fn dual(fr: &Arc<TorusFrame>, vals: &[FieldElement]) -> DualElement {
    DualElement::new(fr, vals.to_vec()).unwrap()
}

pub fn fe(fr: &Arc<TorusFrame>, v: Rat) -> FieldElement {
    FieldElement::from_rational(&fr.desc, v)
}

/// z·p^k where z is the residue generator: a convenient unit whose
/// difference from its Frobenius conjugate has exact valuation k.
pub fn gen_times_p_pow(fr: &Arc<TorusFrame>, k: i64) -> FieldElement {
    FieldElement::monomial(&fr.desc, k * fr.desc.e, fr.desc.residue_field().gen()).unwrap()
}

pub fn fixed_side_datum(
    fr: &Arc<TorusFrame>,
    levis: Vec<&str>,
    ambient: &str,
    depths: Vec<Rat>,
    chars: Vec<QuasiCharacter>,
) -> CharacterDatum {
    CharacterDatum::new(
        fr,
        DatumSide::Fixed {
            levis: levis.into_iter().map(String::from).collect(),
            ambient: ambient.into(),
        },
        "standard".into(),
        depths,
        chars,
    )
    .unwrap()
}

pub fn gside_datum(
    fr: &Arc<TorusFrame>,
    levis: Vec<TwistedLevi>,
    depths: Vec<Rat>,
    chars: Vec<QuasiCharacter>,
) -> CharacterDatum {
    CharacterDatum::new(
        fr,
        DatumSide::Ambient {
            levis,
            ambient: TwistedLevi::full(fr),
        },
        "standard".into(),
        depths,
        chars,
    )
    .unwrap()
}
