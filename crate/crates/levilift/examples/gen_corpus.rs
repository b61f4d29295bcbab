//! Regenerates the scenario corpus and its expected-report fixtures.
//!
//! Usage: cargo run -p levilift --example gen_corpus [-- <output-dir>]
//!
//! Scenarios are built through the library so every digit trail
//! (conjugates, negations) is exact; the expected reports are the
//! command outputs frozen at generation time.

use levilift::characters::QuasiCharacter;
use levilift::datum::{CharacterDatum, DatumSide};
use levilift::lifting::ChoiceStrategy;
use levilift::local_field::{FieldDesc, FieldElement, GaloisElement};
use levilift::ops::{
    cmd_check_refactor, cmd_eval_theta, cmd_lift, cmd_lift_single, cmd_restrict, cmd_roundtrip,
    cmd_validate, CommandReport,
};
use levilift::rat::Rat;
use levilift::root_datum::{DualElement, GammaGen, HSide, TorusFrame, TwistedLevi};
use levilift::scenario::{
    datum_to_repr, DatumRepr, FieldRepr, FrameRepr, GammaGenRepr, HLeviRepr, HSideRepr,
    OptionsRepr, Scenario, ScenarioRepr,
};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

fn root_str(n: usize, entries: &[(usize, Rat)]) -> Vec<String> {
    let mut v = vec![Rat::new(0, 1); n];
    for (i, c) in entries {
        v[*i] = *c;
    }
    v.iter().map(|c| levilift::rat::format_rat(*c)).collect()
}

struct Builder {
    out: std::path::PathBuf,
}

impl Builder {
    fn write_scenario(&self, repr: &ScenarioRepr) {
        // sanity: every emitted scenario must load and round-trip
        let text = serde_json::to_string_pretty(repr).expect("serialize scenario");
        Scenario::from_json(&text, None).expect("generated scenario must load");
        let path = self.out.join(format!("{}.json", repr.name));
        fs::write(&path, text + "\n").expect("write scenario");
        println!("wrote {}", path.display());
    }

    fn write_report(&self, name: &str, command: &str, report: &CommandReport) {
        let dir = self.out.join("expected");
        fs::create_dir_all(&dir).expect("create expected dir");
        let path = dir.join(format!("{name}.{command}.json"));
        let text = serde_json::to_string_pretty(report).expect("serialize report");
        fs::write(&path, text + "\n").expect("write report");
        println!("wrote {}", path.display());
    }
}

/// Split GL(4) over Q_5, trivial Galois, inner involution with fixed
/// point the (2,2) block Levi.
fn split_field() -> FieldRepr {
    FieldRepr {
        p: 5,
        f: 1,
        e: 1,
        residue_modulus: vec![0, 1],
        precision: 16,
    }
}

fn split_frame_repr() -> FrameRepr {
    FrameRepr {
        n: 4,
        frobenius_perm: vec![0, 1, 2, 3],
        twist_perm: vec![0, 1, 2, 3],
        gamma: vec![GammaGenRepr {
            name: "inner".into(),
            perm: vec![0, 1, 2, 3],
            sign: 1,
            galois: [0, 0],
        }],
        gamma_order: None,
    }
}

fn block_hside_repr() -> HSideRepr {
    let one = Rat::new(1, 1);
    HSideRepr {
        ambient: "H".into(),
        levis: vec![
            HLeviRepr {
                name: "H".into(),
                roots: vec![
                    root_str(4, &[(0, one), (1, -one)]),
                    root_str(4, &[(0, -one), (1, one)]),
                    root_str(4, &[(2, one), (3, -one)]),
                    root_str(4, &[(2, -one), (3, one)]),
                ],
            },
            HLeviRepr {
                name: "T".into(),
                roots: vec![],
            },
        ],
    }
}

fn split_context() -> (Arc<TorusFrame>, HSide) {
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
    let one = rat(1, 1);
    let root = |j: usize, k: usize| {
        let mut v = vec![Rat::new(0, 1); 4];
        v[j] = one;
        v[k] = -one;
        v
    };
    let hside = HSide::new(
        &fr,
        "H".into(),
        vec![
            ("H".into(), vec![root(0, 1), root(1, 0), root(2, 3), root(3, 2)]),
            ("T".into(), vec![]),
        ],
    )
    .unwrap();
    (fr, hside)
}

/// The block-character datum: realizer (c0, c0, c1, c1) of depth 2 with
/// formal depth-zero tail symbols for the two component characters.
fn block_datum(fr: &Arc<TorusFrame>, hside: &HSide, c0: Rat, c1: Rat) -> DatumRepr {
    let d = &fr.desc;
    let x = DualElement::new(
        fr,
        vec![
            FieldElement::from_rational(d, c0),
            FieldElement::from_rational(d, c0),
            FieldElement::from_rational(d, c1),
            FieldElement::from_rational(d, c1),
        ],
    )
    .unwrap();
    let chi = QuasiCharacter::canonical_on_fixed(hside, fr, "H", rat(2, 1), x).unwrap();
    let mut tail = BTreeMap::new();
    tail.insert("chi0".to_string(), 1);
    tail.insert("chi1".to_string(), 1);
    let chi = chi
        .mul(&QuasiCharacter::from_tail(chi.domain.clone(), tail))
        .unwrap();
    let datum = CharacterDatum::new(
        fr,
        DatumSide::Fixed {
            levis: vec!["H".into()],
            ambient: "H".into(),
        },
        "standard".into(),
        vec![rat(2, 1)],
        vec![chi],
    )
    .unwrap();
    datum_to_repr(&datum)
}

/// Unramified quadratic GL(4): residue field F_25 = F_5[z]/(z^2 - 2),
/// coordinates Galois-paired (0,1) and (2,3), inner involution.
fn unramified_field() -> FieldRepr {
    FieldRepr {
        p: 5,
        f: 2,
        e: 1,
        residue_modulus: vec![3, 0, 1],
        precision: 16,
    }
}

fn unramified_frame_repr(gamma: GammaGenRepr, gamma_order: Option<usize>) -> FrameRepr {
    FrameRepr {
        n: 4,
        frobenius_perm: vec![1, 0, 3, 2],
        twist_perm: vec![0, 1, 2, 3],
        gamma: vec![gamma],
        gamma_order,
    }
}

fn inner_gamma() -> GammaGenRepr {
    GammaGenRepr {
        name: "inner".into(),
        perm: vec![0, 1, 2, 3],
        sign: 1,
        galois: [0, 0],
    }
}

fn unramified_context() -> (Arc<TorusFrame>, HSide) {
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
    let one = rat(1, 1);
    let root = |j: usize, k: usize| {
        let mut v = vec![Rat::new(0, 1); 4];
        v[j] = one;
        v[k] = -one;
        v
    };
    let hside = HSide::new(
        &fr,
        "H".into(),
        vec![
            ("H".into(), vec![root(0, 1), root(1, 0), root(2, 3), root(3, 2)]),
            ("T".into(), vec![]),
        ],
    )
    .unwrap();
    (fr, hside)
}

/// z·p^k: difference from its conjugate has exact valuation k.
fn zq(fr: &Arc<TorusFrame>, k: i64) -> FieldElement {
    FieldElement::monomial(&fr.desc, k * fr.desc.e, fr.desc.residue_field().gen()).unwrap()
}

fn frob(fr: &Arc<TorusFrame>) -> GaloisElement {
    GaloisElement::new(&fr.desc, 1, 0)
}

/// Torus-character datum (x1, σx1, x2, σx2) of depth 2 on the fixed-side
/// torus.
fn torus_datum(
    fr: &Arc<TorusFrame>,
    hside: &HSide,
    x1: &FieldElement,
    x2: &FieldElement,
    tail: &[(&str, i64)],
) -> DatumRepr {
    let s = frob(fr);
    let x = DualElement::new(
        fr,
        vec![x1.clone(), x1.apply_galois(&s), x2.clone(), x2.apply_galois(&s)],
    )
    .unwrap();
    let chi = QuasiCharacter::canonical_on_fixed(hside, fr, "T", rat(2, 1), x).unwrap();
    let tail: BTreeMap<String, i64> = tail.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let chi = chi
        .mul(&QuasiCharacter::from_tail(chi.domain.clone(), tail))
        .unwrap();
    let datum = CharacterDatum::new(
        fr,
        DatumSide::Fixed {
            levis: vec!["T".into()],
            ambient: "H".into(),
        },
        "standard".into(),
        vec![rat(2, 1)],
        vec![chi],
    )
    .unwrap();
    datum_to_repr(&datum)
}

fn options(seed: u64, samples: usize) -> OptionsRepr {
    OptionsRepr {
        target_depth: None,
        samples: Some(samples),
        seed: Some(seed),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let out = args
        .get(1)
        .map(String::from)
        .unwrap_or_else(|| "corpus".to_string());
    let builder = Builder {
        out: Path::new(&out).to_path_buf(),
    };
    fs::create_dir_all(&builder.out).expect("create corpus dir");

    // ------------------------------------------------------------------
    // Block-character scenarios: the two regimes of the direct lift.
    // ------------------------------------------------------------------
    let (sfr, shside) = split_context();
    for (name, c0, c1) in [
        ("eg_weird_equal", rat(2, 25), rat(2, 25)),
        ("eg_weird_distinct", rat(1, 25), rat(2, 25)),
    ] {
        let repr = ScenarioRepr {
            name: name.into(),
            field: split_field(),
            frame: split_frame_repr(),
            h_side: block_hside_repr(),
            datum: block_datum(&sfr, &shside, c0, c1),
            datum2: None,
            options: options(1, 100),
        };
        builder.write_scenario(&repr);
    }

    // ------------------------------------------------------------------
    // Torus-character scenarios over the unramified quadratic: the three
    // decomposition regimes, and the full two-run lift.
    // ------------------------------------------------------------------
    let (ufr, uhside) = unramified_context();
    let x1 = zq(&ufr, -2);
    let shallow = FieldElement::from_rational(&ufr.desc, rat(1, 5));
    let cases = [
        ("eg_pindstep_equal", x1.add(&shallow).unwrap()),
        (
            "eg_pindstep_conj",
            x1.apply_galois(&frob(&ufr)).add(&shallow).unwrap(),
        ),
        ("eg_pindstep_generic", x1.scale_int(2)),
    ];
    for (name, x2) in cases {
        let repr = ScenarioRepr {
            name: name.into(),
            field: unramified_field(),
            frame: unramified_frame_repr(inner_gamma(), None),
            h_side: block_hside_repr(),
            datum: torus_datum(&ufr, &uhside, &x1, &x2, &[("eta", 1), ("eta_prime", 1)]),
            datum2: None,
            options: options(2, 100),
        };
        builder.write_scenario(&repr);
    }
    // two-run lift: congruent components with a deeper offset
    let x2 = x1.add(&zq(&ufr, -1)).unwrap();
    let repr = ScenarioRepr {
        name: "eg_tliftone".into(),
        field: unramified_field(),
        frame: unramified_frame_repr(inner_gamma(), None),
        h_side: block_hside_repr(),
        datum: torus_datum(&ufr, &uhside, &x1, &x2, &[("eta", 2)]),
        datum2: None,
        options: options(3, 200),
    };
    builder.write_scenario(&repr);

    // ------------------------------------------------------------------
    // The incompatible pair: a two-entry datum whose naive per-entry
    // lift produces incomparable Levis; the top-down lift threads
    // T ⊂ H-blocks ⊂ G.
    // ------------------------------------------------------------------
    {
        let t0 = rat(1, 1);
        let t1 = rat(3, 1);
        let y1 = zq(&ufr, -1);
        let s = frob(&ufr);
        let x0 = DualElement::new(
            &ufr,
            vec![y1.clone(), y1.apply_galois(&s), y1.clone(), y1.apply_galois(&s)],
        )
        .unwrap();
        let xi0 = QuasiCharacter::canonical_on_fixed(&uhside, &ufr, "T", t0, x0).unwrap();
        let cp = FieldElement::from_rational(&ufr.desc, rat(1, 125));
        let cm = cp
            .add(&FieldElement::from_rational(&ufr.desc, rat(1, 25)))
            .unwrap();
        let x1d = DualElement::new(&ufr, vec![cp.clone(), cp, cm.clone(), cm]).unwrap();
        let xi1 = QuasiCharacter::canonical_on_fixed(&uhside, &ufr, "H", t1, x1d).unwrap();
        let datum = CharacterDatum::new(
            &ufr,
            DatumSide::Fixed {
                levis: vec!["T".into(), "H".into()],
                ambient: "H".into(),
            },
            "standard".into(),
            vec![t0, t1],
            vec![xi0, xi1],
        )
        .unwrap();
        let repr = ScenarioRepr {
            name: "eg_incompatible".into(),
            field: unramified_field(),
            frame: unramified_frame_repr(inner_gamma(), None),
            h_side: block_hside_repr(),
            datum: datum_to_repr(&datum),
            datum2: None,
            options: options(4, 200),
        };
        builder.write_scenario(&repr);
    }

    // ------------------------------------------------------------------
    // Symplectic duality: the fixed point is Sp(4). One scenario carries
    // the factorization-route datum through the non-Γ-stable Levi
    // T0×GL(2); the other carries the generic torus character whose lift
    // is Γ-stable on T ⊂ G.
    // ------------------------------------------------------------------
    let sp_gamma = GammaGenRepr {
        name: "duality".into(),
        perm: vec![2, 3, 0, 1],
        sign: -1,
        galois: [0, 0],
    };
    let sp_hside_repr = {
        let h = rat(1, 2);
        let one = rat(1, 1);
        HSideRepr {
            ambient: "Sp4".into(),
            levis: vec![
                HLeviRepr {
                    name: "Sp4".into(),
                    roots: vec![
                        root_str(4, &[(0, h), (1, -h), (2, -h), (3, h)]),
                        root_str(4, &[(0, -h), (1, h), (2, h), (3, -h)]),
                        root_str(4, &[(0, h), (1, h), (2, -h), (3, -h)]),
                        root_str(4, &[(0, -h), (1, -h), (2, h), (3, h)]),
                        root_str(4, &[(0, one), (2, -one)]),
                        root_str(4, &[(0, -one), (2, one)]),
                        root_str(4, &[(1, one), (3, -one)]),
                        root_str(4, &[(1, -one), (3, one)]),
                    ],
                },
                HLeviRepr {
                    name: "S".into(),
                    roots: vec![],
                },
            ],
        }
    };
    let sp_context = || {
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
        fr
    };
    {
        // factorization route: ambient-side datum through T0×GL(2)
        let fr = sp_context();
        let d = &fr.desc;
        let s = frob(&fr);
        let levi = TwistedLevi::new(&fr, vec![vec![0], vec![1], vec![2, 3]]).unwrap();
        let xphi = zq(&fr, -2)
            .add(&FieldElement::from_rational(d, rat(2, 25)))
            .unwrap();
        let ceta = FieldElement::from_rational(d, rat(1, 25));
        let x = DualElement::new(
            &fr,
            vec![xphi.clone(), xphi.apply_galois(&s), ceta.clone(), ceta.clone()],
        )
        .unwrap();
        let chi = QuasiCharacter::canonical_on_levi(&levi, rat(2, 1), x).unwrap();
        let datum = CharacterDatum::new(
            &fr,
            DatumSide::Ambient {
                levis: vec![levi],
                ambient: TwistedLevi::full(&fr),
            },
            "standard".into(),
            vec![rat(2, 1)],
            vec![chi],
        )
        .unwrap();
        let repr = ScenarioRepr {
            name: "sp4_nonstable".into(),
            field: unramified_field(),
            frame: unramified_frame_repr(sp_gamma.clone(), Some(2)),
            h_side: sp_hside_repr.clone(),
            datum: datum_to_repr(&datum),
            datum2: None,
            options: options(5, 100),
        };
        builder.write_scenario(&repr);
    }
    {
        // the generic torus character of Sp(4): lifts to T ⊂ G
        let fr = sp_context();
        let d = &fr.desc;
        let s = frob(&fr);
        let x = zq(&fr, -2)
            .add(&FieldElement::from_rational(d, rat(1, 25)))
            .unwrap();
        let sx = x.apply_galois(&s);
        let xd = DualElement::new(&fr, vec![x.clone(), sx.clone(), x.neg(), sx.neg()]).unwrap();
        let hside = HSide::new(
            &fr,
            "Sp4".into(),
            sp_hside_repr
                .levis
                .iter()
                .map(|l| {
                    (
                        l.name.clone(),
                        l.roots
                            .iter()
                            .map(|r| {
                                r.iter()
                                    .map(|c| levilift::rat::parse_rat(c).unwrap())
                                    .collect()
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
        .unwrap();
        let chi = QuasiCharacter::canonical_on_fixed(&hside, &fr, "S", rat(2, 1), xd).unwrap();
        let datum = CharacterDatum::new(
            &fr,
            DatumSide::Fixed {
                levis: vec!["S".into()],
                ambient: "Sp4".into(),
            },
            "standard".into(),
            vec![rat(2, 1)],
            vec![chi],
        )
        .unwrap();
        let repr = ScenarioRepr {
            name: "sp4_thetas".into(),
            field: unramified_field(),
            frame: unramified_frame_repr(sp_gamma.clone(), Some(2)),
            h_side: sp_hside_repr.clone(),
            datum: datum_to_repr(&datum),
            datum2: None,
            options: options(6, 100),
        };
        builder.write_scenario(&repr);
    }

    // ------------------------------------------------------------------
    // Ambient-side scenarios: a Γ-stable two-entry datum for restrict /
    // roundtrip / eval-theta, and a refactorization pair.
    // ------------------------------------------------------------------
    {
        let (fr, _hside) = unramified_context();
        let d = &fr.desc;
        let h_blocks = TwistedLevi::new(&fr, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let g = TwistedLevi::full(&fr);
        let x0 = DualElement::new(
            &fr,
            vec![
                FieldElement::from_rational(d, rat(1, 5)),
                FieldElement::from_rational(d, rat(1, 5)),
                FieldElement::from_rational(d, rat(2, 5)),
                FieldElement::from_rational(d, rat(2, 5)),
            ],
        )
        .unwrap();
        let x1 = DualElement::new(&fr, vec![FieldElement::from_rational(d, rat(1, 25)); 4])
            .unwrap();
        let chi0 = QuasiCharacter::canonical_on_levi(&h_blocks, rat(1, 1), x0).unwrap();
        let chi1 = QuasiCharacter::canonical_on_levi(&g, rat(2, 1), x1.clone()).unwrap();
        let sigma = CharacterDatum::new(
            &fr,
            DatumSide::Ambient {
                levis: vec![h_blocks.clone(), g.clone()],
                ambient: g.clone(),
            },
            "standard".into(),
            vec![rat(1, 1), rat(2, 1)],
            vec![chi0.clone(), chi1.clone()],
        )
        .unwrap();
        let repr = ScenarioRepr {
            name: "roundtrip_stable".into(),
            field: unramified_field(),
            frame: unramified_frame_repr(inner_gamma(), None),
            h_side: block_hside_repr(),
            datum: datum_to_repr(&sigma),
            datum2: None,
            options: options(7, 200),
        };
        builder.write_scenario(&repr);

        // refactorization pair: move a depth-1 component from entry 0
        // into entry 1
        let extra = DualElement::new(&fr, vec![FieldElement::from_rational(d, rat(3, 5)); 4])
            .unwrap();
        let bump = QuasiCharacter::canonical_on_levi(&g, rat(1, 1), extra).unwrap();
        let chi0b = chi0
            .mul(&bump.restrict_to_levi(&h_blocks).unwrap().inv())
            .unwrap();
        let chi1b = chi1.mul(&bump).unwrap();
        let sigma2 = CharacterDatum::new(
            &fr,
            DatumSide::Ambient {
                levis: vec![h_blocks, g.clone()],
                ambient: g,
            },
            "standard".into(),
            vec![rat(1, 1), rat(2, 1)],
            vec![chi0b, chi1b],
        )
        .unwrap();
        let repr = ScenarioRepr {
            name: "refactor_pair".into(),
            field: unramified_field(),
            frame: unramified_frame_repr(inner_gamma(), None),
            h_side: block_hside_repr(),
            datum: datum_to_repr(&sigma),
            datum2: Some(datum_to_repr(&sigma2)),
            options: options(8, 100),
        };
        builder.write_scenario(&repr);
    }

    // ------------------------------------------------------------------
    // Expected-report fixtures.
    // ------------------------------------------------------------------
    let run = |name: &str, commands: &[&str]| {
        let text = fs::read_to_string(builder.out.join(format!("{name}.json"))).unwrap();
        let scn = Scenario::from_json(&text, None).unwrap();
        for &command in commands {
            let report = match command {
                "validate" => cmd_validate(&scn).unwrap(),
                "lift" => cmd_lift(&scn, None, ChoiceStrategy::Canonical).unwrap(),
                "lift-single" => {
                    cmd_lift_single(&scn, None, ChoiceStrategy::Canonical).unwrap()
                }
                "restrict" => cmd_restrict(&scn).unwrap(),
                "roundtrip" => cmd_roundtrip(&scn).unwrap(),
                "check-refactor" => cmd_check_refactor(&scn).unwrap(),
                "eval-theta" => cmd_eval_theta(&scn, None, None).unwrap(),
                other => panic!("unknown command {other}"),
            };
            builder.write_report(name, command, &report);
        }
    };
    run("eg_weird_equal", &["validate", "lift"]);
    run("eg_weird_distinct", &["validate", "lift"]);
    run("eg_pindstep_equal", &["validate", "lift"]);
    run("eg_pindstep_conj", &["validate", "lift"]);
    run("eg_pindstep_generic", &["validate", "lift"]);
    run("eg_tliftone", &["validate", "lift", "eval-theta"]);
    run("eg_incompatible", &["validate", "lift", "eval-theta"]);
    run("sp4_nonstable", &["validate"]);
    run("sp4_thetas", &["validate", "lift-single", "lift"]);
    run(
        "roundtrip_stable",
        &["validate", "restrict", "roundtrip", "eval-theta"],
    );
    run("refactor_pair", &["check-refactor"]);
}
