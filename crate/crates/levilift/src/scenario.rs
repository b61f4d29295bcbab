//! Scenario files: one JSON document describing the field, the torus
//! frame with its Γ-action, the fixed-side Levi descriptors, and one or
//! two character-data. All rationals travel as `"a/b"` strings and all
//! coordinate indices are 0-based; nothing in the data plane is a float.

use crate::characters::{CharDomain, QuasiCharacter};
use crate::datum::{CharacterDatum, DatumSide};
use crate::error::{Error, Result};
use crate::lifting::{ChoiceStrategy, StepOverride};
use crate::local_field::{FieldDesc, FieldElement, FieldElementRepr, GaloisElement};
use crate::rat::{format_rat, parse_rat, Rat};
use crate::root_datum::{DualElement, GammaGen, HSide, TorusFrame, TwistedLevi};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldRepr {
    pub p: i64,
    pub f: usize,
    pub e: i64,
    pub residue_modulus: Vec<i64>,
    pub precision: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaGenRepr {
    pub name: String,
    pub perm: Vec<usize>,
    pub sign: i64,
    /// Galois twist as `[frobenius_power, ramified_twist]`.
    pub galois: [i64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRepr {
    pub n: usize,
    pub frobenius_perm: Vec<usize>,
    pub twist_perm: Vec<usize>,
    #[serde(default)]
    pub gamma: Vec<GammaGenRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_order: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HLeviRepr {
    pub name: String,
    /// Restricted roots as rational coordinate vectors of length n.
    pub roots: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HSideRepr {
    pub ambient: String,
    pub levis: Vec<HLeviRepr>,
}

/// A Levi reference: a fixed-side descriptor name or an ambient-side
/// partition (list of index lists).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LeviRepr {
    Name(String),
    Partition(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelRepr {
    pub depth: String,
    pub realizer: Vec<FieldElementRepr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharRepr {
    pub domain: LeviRepr,
    #[serde(default)]
    pub levels: Vec<LevelRepr>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tail: BTreeMap<String, i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatumRepr {
    /// `"H"` for a fixed-side datum, `"G"` for an ambient-side datum.
    pub side: String,
    pub levis: Vec<LeviRepr>,
    pub point: String,
    pub depths: Vec<String>,
    pub chars: Vec<CharRepr>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OptionsRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_depth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioRepr {
    pub name: String,
    pub field: FieldRepr,
    pub frame: FrameRepr,
    pub h_side: HSideRepr,
    pub datum: DatumRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datum2: Option<DatumRepr>,
    #[serde(default)]
    pub options: OptionsRepr,
}

#[derive(Debug, Clone)]
pub struct ScenarioOptions {
    pub target_depth: Option<Rat>,
    pub samples: usize,
    pub seed: u64,
}

/// A fully resolved scenario: every cross-reference checked at load.
pub struct Scenario {
    pub name: String,
    pub desc: Arc<FieldDesc>,
    pub frame: Arc<TorusFrame>,
    pub hside: HSide,
    pub datum: CharacterDatum,
    pub datum2: Option<CharacterDatum>,
    pub options: ScenarioOptions,
}

impl Scenario {
    pub fn from_json(text: &str, precision_override: Option<usize>) -> Result<Scenario> {
        let repr: ScenarioRepr = serde_json::from_str(text)?;
        Scenario::from_repr(repr, precision_override)
    }

    pub fn from_repr(repr: ScenarioRepr, precision_override: Option<usize>) -> Result<Scenario> {
        let f = &repr.field;
        let precision = precision_override.unwrap_or(f.precision);
        let desc = FieldDesc::new(f.p, f.f, f.e, &f.residue_modulus, precision)?;
        let gamma_gens = repr
            .frame
            .gamma
            .iter()
            .map(|g| GammaGen {
                name: g.name.clone(),
                perm: g.perm.clone(),
                sign: g.sign,
                galois: GaloisElement::new(&desc, g.galois[0], g.galois[1]),
            })
            .collect();
        let frame = TorusFrame::new(
            &desc,
            repr.frame.n,
            repr.frame.frobenius_perm.clone(),
            repr.frame.twist_perm.clone(),
            gamma_gens,
            repr.frame.gamma_order,
        )?;
        let mut levis = Vec::new();
        for l in &repr.h_side.levis {
            let mut roots = Vec::new();
            for r in &l.roots {
                roots.push(r.iter().map(|c| parse_rat(c)).collect::<Result<Vec<_>>>()?);
            }
            levis.push((l.name.clone(), roots));
        }
        let hside = HSide::new(&frame, repr.h_side.ambient.clone(), levis)?;
        let datum = load_datum(&frame, &hside, &repr.datum)?;
        let datum2 = repr
            .datum2
            .as_ref()
            .map(|d| load_datum(&frame, &hside, d))
            .transpose()?;
        let options = ScenarioOptions {
            target_depth: repr
                .options
                .target_depth
                .as_deref()
                .map(parse_rat)
                .transpose()?,
            samples: repr.options.samples.unwrap_or(200),
            seed: repr.options.seed.unwrap_or(0),
        };
        Ok(Scenario {
            name: repr.name,
            desc,
            frame,
            hside,
            datum,
            datum2,
            options,
        })
    }
}

fn load_levi(frame: &Arc<TorusFrame>, repr: &LeviRepr) -> Result<TwistedLevi> {
    match repr {
        LeviRepr::Partition(blocks) => TwistedLevi::new(frame, blocks.clone()),
        LeviRepr::Name(n) => Err(Error::Scenario(format!(
            "expected a partition, found the fixed-side name `{n}`"
        ))),
    }
}

fn load_dual(frame: &Arc<TorusFrame>, coords: &[FieldElementRepr]) -> Result<DualElement> {
    let elems = coords
        .iter()
        .map(|r| FieldElement::from_repr(&frame.desc, r))
        .collect::<Result<Vec<_>>>()?;
    DualElement::new(frame, elems)
}

fn load_char(
    frame: &Arc<TorusFrame>,
    hside: &HSide,
    repr: &CharRepr,
    fixed_side: bool,
) -> Result<QuasiCharacter> {
    let domain = match (&repr.domain, fixed_side) {
        (LeviRepr::Name(name), true) => {
            hside.roots(name)?; // must resolve
            CharDomain::Fixed {
                frame: frame.clone(),
                name: name.clone(),
            }
        }
        (LeviRepr::Partition(_), false) => CharDomain::Levi(load_levi(frame, &repr.domain)?),
        _ => {
            return Err(Error::Scenario(
                "character domain does not match the datum side".into(),
            ))
        }
    };
    let mut levels = Vec::new();
    for lv in &repr.levels {
        let depth = parse_rat(&lv.depth)?;
        let pos = frame.desc.val_to_pos(depth)?;
        let x = load_dual(frame, &lv.realizer)?;
        if x.depth_pos() != Some(pos) {
            return Err(Error::Scenario(format!(
                "realizer at declared depth {} has depth {:?}",
                lv.depth,
                x.depth()
            )));
        }
        // centrality (and Γ-fixedness on the fixed side) checked up front
        match &domain {
            CharDomain::Levi(l) => {
                if !x.is_central_for(l)? {
                    return Err(Error::Scenario(format!(
                        "realizer at depth {} is not central for its Levi",
                        lv.depth
                    )));
                }
            }
            CharDomain::Fixed { name, .. } => {
                if !x.is_gamma_fixed() {
                    return Err(Error::Scenario(format!(
                        "fixed-side realizer at depth {} is not Γ-fixed",
                        lv.depth
                    )));
                }
                if !hside.is_central_fixed(&x, name)? {
                    return Err(Error::Scenario(format!(
                        "realizer at depth {} is not central for `{name}`",
                        lv.depth
                    )));
                }
            }
        }
        levels.push((pos, x));
    }
    QuasiCharacter::from_levels(domain, levels, repr.tail.clone())
}

fn load_datum(
    frame: &Arc<TorusFrame>,
    hside: &HSide,
    repr: &DatumRepr,
) -> Result<CharacterDatum> {
    let fixed = match repr.side.as_str() {
        "H" => true,
        "G" => false,
        other => {
            return Err(Error::Scenario(format!(
                "datum side must be \"H\" or \"G\", found `{other}`"
            )))
        }
    };
    let side = if fixed {
        let mut names = Vec::new();
        for l in &repr.levis {
            match l {
                LeviRepr::Name(n) => {
                    hside.roots(n)?;
                    names.push(n.clone());
                }
                LeviRepr::Partition(_) => {
                    return Err(Error::Scenario(
                        "fixed-side datum must reference descriptor names".into(),
                    ))
                }
            }
        }
        DatumSide::Fixed {
            levis: names,
            ambient: hside.ambient.clone(),
        }
    } else {
        let levis = repr
            .levis
            .iter()
            .map(|l| load_levi(frame, l))
            .collect::<Result<Vec<_>>>()?;
        DatumSide::Ambient {
            levis,
            ambient: TwistedLevi::full(frame),
        }
    };
    let depths = repr
        .depths
        .iter()
        .map(|d| parse_rat(d))
        .collect::<Result<Vec<_>>>()?;
    let chars = repr
        .chars
        .iter()
        .map(|c| load_char(frame, hside, c, fixed))
        .collect::<Result<Vec<_>>>()?;
    CharacterDatum::new(frame, side, repr.point.clone(), depths, chars)
}

/// Serializes a datum back to the wire form (used for produced lifts).
pub fn datum_to_repr(datum: &CharacterDatum) -> DatumRepr {
    let (side, levis) = match &datum.side {
        DatumSide::Ambient { levis, .. } => (
            "G".to_string(),
            levis
                .iter()
                .map(|l| LeviRepr::Partition(l.blocks().to_vec()))
                .collect(),
        ),
        DatumSide::Fixed { levis, .. } => (
            "H".to_string(),
            levis.iter().map(|n| LeviRepr::Name(n.clone())).collect(),
        ),
    };
    DatumRepr {
        side,
        levis,
        point: datum.point.clone(),
        depths: datum.depths_display(),
        chars: datum.chars().iter().map(char_to_repr).collect(),
    }
}

pub fn char_to_repr(chi: &QuasiCharacter) -> CharRepr {
    let domain = match &chi.domain {
        CharDomain::Levi(l) => LeviRepr::Partition(l.blocks().to_vec()),
        CharDomain::Fixed { name, .. } => LeviRepr::Name(name.clone()),
    };
    let e = chi.domain.frame().desc.e;
    CharRepr {
        domain,
        levels: chi
            .levels()
            .iter()
            .map(|lv| LevelRepr {
                depth: format_rat(Rat::new(lv.depth_pos, e)),
                realizer: lv.realizer.coords().iter().map(|c| c.to_repr()).collect(),
            })
            .collect(),
        tail: chi.tail().clone(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyStepRepr {
    pub step: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_sharp: Option<Vec<FieldElementRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_domain: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_levels: Option<Vec<LevelRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_tail: Option<BTreeMap<String, i64>>,
}

/// Loads a scripted strategy: a JSON list of per-step overrides.
pub fn load_strategy(frame: &Arc<TorusFrame>, text: &str) -> Result<ChoiceStrategy> {
    let steps: Vec<StrategyStepRepr> = serde_json::from_str(text)?;
    let max_step = steps.iter().map(|s| s.step).max().unwrap_or(0);
    let mut slots: Vec<Option<StepOverride>> = vec![None; max_step + 1];
    for s in &steps {
        let x_sharp = s
            .x_sharp
            .as_deref()
            .map(|coords| load_dual(frame, coords))
            .transpose()?;
        let phi = match (&s.phi_domain, &s.phi_levels) {
            (None, None) => None,
            (Some(blocks), Some(levels)) => {
                let levi = TwistedLevi::new(frame, blocks.clone())?;
                let mut lvl = Vec::new();
                for l in levels {
                    let pos = frame.desc.val_to_pos(parse_rat(&l.depth)?)?;
                    lvl.push((pos, load_dual(frame, &l.realizer)?));
                }
                Some(QuasiCharacter::from_levels(
                    CharDomain::Levi(levi),
                    lvl,
                    s.phi_tail.clone().unwrap_or_default(),
                )?)
            }
            _ => {
                return Err(Error::Scenario(
                    "scripted character override needs both phi_domain and phi_levels".into(),
                ))
            }
        };
        slots[s.step] = Some(StepOverride { x_sharp, phi });
    }
    Ok(ChoiceStrategy::Scripted(slots))
}
