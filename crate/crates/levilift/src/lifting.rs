//! The constructive lifting loop: a single sharp/flat step, the
//! single-quasicharacter lift with regrouping, the top-down full-datum
//! lift with correction folding, and the choice-replay round trip.
//!
//! One step takes the residual's top realizer X, splits it as
//! X = X♯ + X♭ along the shallow-pairing classes, passes to the
//! centralizer of X♯ (a Γ-stable twisted Levi with the required fixed
//! point), and divides off a canonical character realized by X♯. The
//! residual's depth drops strictly, and depths live in the discrete set
//! (1/e)Z, so the loop terminates. Runs on the same Levi are then
//! regrouped into single datum entries.

use crate::characters::{CharDomain, QuasiCharacter};
use crate::datum::{CharacterDatum, DatumSide};
use crate::error::{Error, Result};
use crate::rat::{format_rat, Rat};
use crate::root_datum::{is_generic, DualElement, HSide, TorusFrame, TwistedLevi};
use num_traits::Zero;
use std::sync::Arc;

/// One step of the lifting loop, kept for the audit trail.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Which datum entry (top-down run) the step belongs to.
    pub run: usize,
    /// Global step index across the whole lift.
    pub index: usize,
    /// The Levi produced: the centralizer of the sharp part.
    pub levi: TwistedLevi,
    /// The character divided off at this step.
    pub phi: QuasiCharacter,
    /// The Γ-fixed sharp realizer.
    pub x_sharp: DualElement,
    /// Depth of the residual after the step.
    pub residual_depth: Rat,
}

/// A scripted per-step override: replaces the canonical sharp element
/// and/or the canonical character, subject to the same validity checks.
#[derive(Debug, Clone)]
pub struct StepOverride {
    pub x_sharp: Option<DualElement>,
    pub phi: Option<QuasiCharacter>,
}

/// How choices are made at each step of the loop.
pub enum ChoiceStrategy {
    /// Class-average sharp part, single-level character with zero tail.
    Canonical,
    /// Replay the entries of a Γ-stable ambient-side datum; used to
    /// verify that every such datum arises as a lift.
    Replay { queues: Vec<Vec<(DualElement, QuasiCharacter)>> },
    /// Scripted overrides keyed by global step index.
    Scripted(Vec<Option<StepOverride>>),
}

impl ChoiceStrategy {
    fn next(&mut self, run: usize, global_step: usize) -> Option<StepOverride> {
        match self {
            ChoiceStrategy::Canonical => None,
            ChoiceStrategy::Replay { queues } => {
                queues.get_mut(run).and_then(|q| q.pop()).map(|(x, phi)| StepOverride {
                    x_sharp: Some(x),
                    phi: Some(phi),
                })
            }
            ChoiceStrategy::Scripted(list) => list.get(global_step).cloned().flatten(),
        }
    }
}

/// Output of a lift: the produced datum, the shallow correction factor on
/// the input's group, and the audit trail.
#[derive(Debug, Clone)]
pub struct LiftResult {
    pub sigma: CharacterDatum,
    pub correction: QuasiCharacter,
    pub steps: Vec<StepRecord>,
}

pub struct LiftContext<'a> {
    pub frame: &'a Arc<TorusFrame>,
    pub hside: &'a HSide,
}

impl<'a> LiftContext<'a> {
    pub fn new(frame: &'a Arc<TorusFrame>, hside: &'a HSide) -> Self {
        LiftContext { frame, hside }
    }

    /// One inductive step: decompose the residual's top realizer, pass to
    /// the centralizer of the sharp part, divide off a character realized
    /// by it. Returns (M′, X♯, φ′, next residual).
    pub fn single_step(
        &self,
        m: &TwistedLevi,
        hprime: &str,
        tau: &QuasiCharacter,
        t: Rat,
        overrides: Option<StepOverride>,
        step: usize,
    ) -> Result<(TwistedLevi, DualElement, QuasiCharacter, QuasiCharacter)> {
        let (r, top) = tau.realize_at_top()?;
        if r != t {
            return Err(Error::Lift(format!(
                "residual depth {} does not match the declared depth {}",
                format_rat(r),
                format_rat(t)
            )));
        }
        if !top.is_gamma_fixed() {
            return Err(Error::Internal("residual realizer is not Γ-fixed".into()));
        }
        let (x_sharp, phi_override) = match overrides {
            None => (m.sharp_flat(top, t)?.0, None),
            Some(ov) => {
                let x = match ov.x_sharp {
                    Some(x) => {
                        self.validate_sharp_override(&x, top, m, hprime, t, step)?;
                        x
                    }
                    None => m.sharp_flat(top, t)?.0,
                };
                (x, ov.phi)
            }
        };
        let m_prime = m.centralizer_levi(&x_sharp)?;
        if !self.hside.fixed_levi_equals(&m_prime, hprime)? {
            return Err(Error::Lift(format!(
                "centralizer at step {step} has the wrong fixed point (expected `{hprime}`)"
            )));
        }
        if !is_generic(&x_sharp, t, &m_prime, m)? {
            return Err(Error::Internal(format!(
                "sharp part is not generic at step {step}"
            )));
        }
        let phi = match phi_override {
            None => QuasiCharacter::canonical_on_levi(&m_prime, t, x_sharp.clone())?,
            Some(phi) => {
                self.validate_phi_override(&phi, &m_prime, &x_sharp, t, step)?;
                phi
            }
        };
        // fold the character back into the residual on the fixed side
        let phi_fixed = phi.gamma_average()?.restrict_to_fixed(self.hside, hprime)?;
        let tau_next = tau.mul(&phi_fixed.inv())?;
        if tau_next.depth() >= t {
            return Err(Error::Internal(format!(
                "residual depth failed to drop at step {step}"
            )));
        }
        Ok((m_prime, x_sharp, phi, tau_next))
    }

    fn validate_sharp_override(
        &self,
        x: &DualElement,
        top: &DualElement,
        m: &TwistedLevi,
        hprime: &str,
        t: Rat,
        step: usize,
    ) -> Result<()> {
        let fail = |reason: &str| Error::Strategy {
            step,
            reason: reason.to_string(),
        };
        if !x.is_gamma_fixed() {
            return Err(fail("override sharp element is not Γ-fixed"));
        }
        if x.depth() != Some(t) {
            return Err(fail("override sharp element has the wrong depth"));
        }
        if !self.hside.is_central_fixed(x, hprime)? {
            return Err(fail("override sharp element is not central for the input Levi"));
        }
        // realizes the residual: lies in the (−t)^+ coset of the top realizer
        let diff = x.sub(top)?;
        if diff.depth().map(|d| d >= t).unwrap_or(false) {
            return Err(fail("override sharp element does not realize the residual"));
        }
        let cent = m.centralizer_levi(x)?;
        if !is_generic(x, t, &cent, m)? {
            return Err(fail("override sharp element is not generic after decomposition"));
        }
        Ok(())
    }

    fn validate_phi_override(
        &self,
        phi: &QuasiCharacter,
        m_prime: &TwistedLevi,
        x_sharp: &DualElement,
        t: Rat,
        step: usize,
    ) -> Result<()> {
        let fail = |reason: &str| Error::Strategy {
            step,
            reason: reason.to_string(),
        };
        match &phi.domain {
            CharDomain::Levi(l) if l == m_prime => {}
            _ => return Err(fail("override character lives on the wrong group")),
        }
        if phi.depth() != t {
            return Err(fail("override character has the wrong depth"));
        }
        // realized by the sharp element on the half-depth filtration
        let half = t / Rat::new(2, 1);
        let e = self.frame.desc.e;
        let mut sum = DualElement::zero(self.frame);
        for lv in phi.levels() {
            if Rat::new(lv.depth_pos, e) > half {
                sum = sum.add(&lv.realizer)?;
            }
        }
        let diff = sum.sub(x_sharp)?;
        if diff.depth().map(|d| d > half).unwrap_or(false) {
            return Err(fail("override character is not realized by the sharp element"));
        }
        Ok(())
    }

    /// Lifts a single generic quasicharacter of a fixed-side Levi to a
    /// Γ-stable chain inside the ambient-side group `ambient_g`, stopping
    /// once the residual depth is at most `s`.
    #[allow(clippy::too_many_arguments)]
    pub fn lift_single(
        &self,
        ambient_g: &TwistedLevi,
        ambient_h: &str,
        hprime: &str,
        xi: &QuasiCharacter,
        s: Rat,
        strategy: &mut ChoiceStrategy,
        run: usize,
        step_base: usize,
    ) -> Result<LiftResult> {
        match xi.domain.fixed_name() {
            Some(name) if name == hprime => {}
            _ => {
                return Err(Error::Lift(format!(
                    "input character must live on the fixed-side Levi `{hprime}`"
                )))
            }
        }
        let t = xi.depth();
        if s < Rat::zero() || s >= t {
            return Err(Error::Lift(format!(
                "target depth {} must satisfy 0 <= s < t = {}",
                format_rat(s),
                format_rat(t)
            )));
        }
        let (_, top) = xi.realize_at_top()?;
        if !self.hside.is_generic_fixed(top, t, hprime, ambient_h)? {
            return Err(Error::Lift(format!(
                "input character of `{hprime}` is not `{ambient_h}`-generic"
            )));
        }
        if !self.hside.fixed_levi_equals(ambient_g, ambient_h)? {
            return Err(Error::Lift(format!(
                "ambient group does not have fixed point `{ambient_h}`"
            )));
        }
        // termination bound: depths live in (1/e)Z ∩ (s, t]
        let e = self.frame.desc.e;
        let max_steps = (t * Rat::from_integer(e)).ceil().to_integer().max(1) as usize + 2;

        let mut m = ambient_g.clone();
        let mut tau = xi.clone();
        let mut t_i = t;
        let mut steps: Vec<StepRecord> = Vec::new();
        while t_i > s {
            let index = step_base + steps.len();
            if steps.len() >= max_steps {
                return Err(Error::Internal(format!(
                    "lifting loop exceeded the termination bound {max_steps}"
                )));
            }
            if !steps.is_empty() && !self.hside.fixed_levi_equals(&m, hprime)? {
                return Err(Error::Internal(
                    "loop invariant lost: current Levi has the wrong fixed point".into(),
                ));
            }
            let ov = strategy.next(run, index);
            let (m_prime, x_sharp, phi, tau_next) =
                self.single_step(&m, hprime, &tau, t_i, ov, index)?;
            t_i = tau_next.depth();
            steps.push(StepRecord {
                run,
                index,
                levi: m_prime.clone(),
                phi,
                x_sharp,
                residual_depth: t_i,
            });
            m = m_prime;
            tau = tau_next;
        }
        if steps.is_empty() {
            return Err(Error::Internal("lifting loop produced no steps".into()));
        }

        // regroup: runs on the same Levi collapse to one entry carrying
        // the run's largest depth and the product character
        let mut levis: Vec<TwistedLevi> = Vec::new();
        let mut chars: Vec<QuasiCharacter> = Vec::new();
        for rec in &steps {
            if levis.first() == Some(&rec.levi) {
                let merged = chars[0].mul(&rec.phi)?;
                chars[0] = merged;
            } else {
                levis.insert(0, rec.levi.clone());
                chars.insert(0, rec.phi.clone());
            }
        }
        let depths: Vec<Rat> = chars.iter().map(|c| c.depth()).collect();
        let sigma = CharacterDatum::new(
            self.frame,
            DatumSide::Ambient {
                levis,
                ambient: ambient_g.clone(),
            },
            "standard".into(),
            depths,
            chars,
        )?;
        let validation = sigma.validate(None)?;
        if !validation.pass() {
            return Err(Error::Internal(format!(
                "lift produced an invalid datum: {:?}",
                validation.first_failure()
            )));
        }
        let stability = sigma.check_gamma_stable()?;
        if !stability.pass() {
            return Err(Error::Internal(format!(
                "lift produced a non-Γ-stable datum: {:?}",
                stability.first_failure()
            )));
        }
        let correction = tau.inv();
        self.verify_product_identity(&sigma, &correction, xi, hprime)?;
        Ok(LiftResult {
            sigma,
            correction,
            steps,
        })
    }

    /// The defining identity of a lift: correction · ξ equals the product
    /// of the produced characters restricted to the input's group, exactly
    /// at all positive depths (tails may differ only trivially here
    /// because every factor's tail is carried along).
    fn verify_product_identity(
        &self,
        sigma: &CharacterDatum,
        correction: &QuasiCharacter,
        xi: &QuasiCharacter,
        hprime: &str,
    ) -> Result<()> {
        let mut rhs = QuasiCharacter::trivial(xi.domain.clone());
        for chi in sigma.chars() {
            let restricted = chi.gamma_average()?.restrict_to_fixed(self.hside, hprime)?;
            rhs = rhs.mul(&restricted)?;
        }
        let lhs = correction.mul(xi)?;
        if !lhs.mul(&rhs.inv())?.levels().is_empty() {
            return Err(Error::Internal(
                "product identity failed: correction·ξ != Π φ|_{H'}".into(),
            ));
        }
        Ok(())
    }

    /// The full top-down lift: entries of the input datum are processed
    /// from deepest to shallowest, each inside the smallest Levi produced
    /// by the previous step, folding every correction factor into the
    /// next character.
    pub fn lift_datum(
        &self,
        delta: &CharacterDatum,
        strategy: &mut ChoiceStrategy,
    ) -> Result<LiftResult> {
        let (h_levis, h_ambient) = match &delta.side {
            DatumSide::Fixed { levis, ambient } => (levis.clone(), ambient.clone()),
            DatumSide::Ambient { .. } => {
                return Err(Error::Lift("lift input must be a fixed-side datum".into()))
            }
        };
        let validation = delta.validate(Some(self.hside))?;
        if !validation.pass() {
            return Err(Error::Lift(format!(
                "input datum is invalid: {:?}",
                validation.first_failure()
            )));
        }
        let n = delta.len();
        let mut ambient_g = TwistedLevi::full(self.frame);
        let mut ambient_h = h_ambient;
        let mut correction = QuasiCharacter::trivial(CharDomain::Fixed {
            frame: self.frame.clone(),
            name: h_levis[n - 1].clone(),
        });
        let mut runs: Vec<LiftResult> = Vec::new();
        let mut step_base = 0usize;
        for j in (0..n).rev() {
            // fold the previous correction into this entry
            let corr_restricted = correction.restrict_to_fixed(self.hside, &h_levis[j])?;
            let xi_j = delta.chars()[j].mul(&corr_restricted.inv())?;
            if xi_j.depth() != delta.depths()[j] {
                return Err(Error::Internal(format!(
                    "folded character at entry {j} lost its depth"
                )));
            }
            let s = if j == 0 {
                Rat::zero()
            } else {
                delta.depths()[j - 1]
            };
            let result = self.lift_single(
                &ambient_g,
                &ambient_h,
                &h_levis[j],
                &xi_j,
                s,
                strategy,
                j,
                step_base,
            )?;
            step_base += result.steps.len();
            // next run works inside the smallest Levi just produced
            ambient_g = match &result.sigma.side {
                DatumSide::Ambient { levis, .. } => levis[0].clone(),
                _ => unreachable!("lift_single returns ambient-side data"),
            };
            ambient_h = h_levis[j].clone();
            correction = result.correction.clone();
            runs.push(result);
        }
        runs.reverse(); // now indexed by entry, shallowest first

        // concatenate the runs into one datum for the full group
        let mut levis = Vec::new();
        let mut depths = Vec::new();
        let mut chars = Vec::new();
        let mut steps = Vec::new();
        for r in &runs {
            if let DatumSide::Ambient { levis: rl, .. } = &r.sigma.side {
                levis.extend(rl.iter().cloned());
            }
            depths.extend(r.sigma.depths().iter().copied());
            chars.extend(r.sigma.chars().iter().cloned());
            steps.extend(r.steps.iter().cloned());
        }
        // depth interleaving: each run tops out at its input depth,
        // strictly below the next run's first depth
        for w in depths.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Internal(format!(
                    "depth interleaving failed: {} >= {}",
                    format_rat(w[0]),
                    format_rat(w[1])
                )));
            }
        }
        for (j, r) in runs.iter().enumerate() {
            let top = *r.sigma.depths().last().unwrap();
            if top != delta.depths()[j] {
                return Err(Error::Internal(format!(
                    "run {j} tops out at {} instead of t_{j} = {}",
                    format_rat(top),
                    format_rat(delta.depths()[j])
                )));
            }
        }
        let sigma = CharacterDatum::new(
            self.frame,
            DatumSide::Ambient {
                levis,
                ambient: TwistedLevi::full(self.frame),
            },
            "standard".into(),
            depths,
            chars,
        )?;
        // the main-theorem contract, verified programmatically
        let validation = sigma.validate(None)?;
        if !validation.pass() {
            return Err(Error::Internal(format!(
                "assembled lift is invalid: {:?}",
                validation.first_failure()
            )));
        }
        let stability = sigma.check_gamma_stable()?;
        if !stability.pass() {
            return Err(Error::Internal(format!(
                "assembled lift is not Γ-stable: {:?}",
                stability.first_failure()
            )));
        }
        let refact = sigma
            .restrict_datum(self.hside)?
            .check_refactorization(delta, Some(self.hside))?;
        if !refact.pass() {
            return Err(Error::Internal(format!(
                "fixed point of the lift is not a refactorization of the input: {:?}",
                refact.first_failure()
            )));
        }
        let correction = runs[0].correction.clone();
        Ok(LiftResult {
            sigma,
            correction,
            steps,
        })
    }

    /// Replays a Γ-stable ambient-side datum through the lifting loop,
    /// choosing its own realizers and characters at every step; returns
    /// true when the pipeline reproduces the datum with a trivial
    /// correction.
    pub fn replay_roundtrip(&self, sigma: &CharacterDatum) -> Result<bool> {
        let levis = match &sigma.side {
            DatumSide::Ambient { levis, .. } => levis.clone(),
            DatumSide::Fixed { .. } => {
                return Err(Error::Lift("round trip needs an ambient-side datum".into()))
            }
        };
        let validation = sigma.validate(None)?;
        if !validation.pass() {
            return Err(Error::Lift(format!(
                "datum is invalid: {:?}",
                validation.first_failure()
            )));
        }
        let stability = sigma.check_gamma_stable()?;
        if !stability.pass() {
            return Err(Error::Lift(format!(
                "datum is not Γ-stable: {:?}",
                stability.first_failure()
            )));
        }
        let delta = sigma.restrict_datum(self.hside)?;
        // group the datum entries by their fixed-point Levi, exactly as
        // the restriction collapsed them; queue each run deepest-first
        let mut names = Vec::with_capacity(levis.len());
        for levi in &levis {
            let mut found = None;
            for name in self.hside.names() {
                if self.hside.fixed_levi_equals(levi, name)? {
                    found = Some(name.to_string());
                    break;
                }
            }
            names.push(found.ok_or_else(|| Error::Lift("unmatched Levi in round trip".into()))?);
        }
        let mut queues: Vec<Vec<(DualElement, QuasiCharacter)>> = Vec::new();
        let mut run_names: Vec<String> = Vec::new();
        for (i, chi) in sigma.chars().iter().enumerate() {
            let s_i = sigma.half_depth(i);
            let e = self.frame.desc.e;
            let mut x = DualElement::zero(self.frame);
            for lv in chi.gamma_average()?.levels() {
                if Rat::new(lv.depth_pos, e) > s_i {
                    x = x.add(&lv.realizer)?;
                }
            }
            if run_names.last() != Some(&names[i]) {
                run_names.push(names[i].clone());
                queues.push(Vec::new());
            }
            queues.last_mut().unwrap().push((x, chi.clone()));
        }
        // queues are popped from the back, so entry order is already
        // deepest-first for the loop
        let mut strategy = ChoiceStrategy::Replay { queues };
        let lifted = self.lift_datum(&delta, &mut strategy)?;
        Ok(datum_equal_mod_tails(&lifted.sigma, sigma) && lifted.correction.is_trivial())
    }
}

/// Levelwise equality of two data: same Levis, depths, and realizer
/// lists; depth-zero tails are ignored.
pub fn datum_equal_mod_tails(a: &CharacterDatum, b: &CharacterDatum) -> bool {
    if a.side != b.side || a.depths() != b.depths() {
        return false;
    }
    a.chars().iter().zip(b.chars()).all(|(x, y)| {
        x.levels().len() == y.levels().len()
            && x.levels().iter().zip(y.levels()).all(|(lx, ly)| {
                lx.depth_pos == ly.depth_pos && lx.realizer.agrees_with(&ly.realizer)
            })
    })
}

/// Outcome of the entrywise lift: per-entry results plus the first
/// incomparable pair of produced Levis, if any.
pub type NaiveLiftOutcome = (Vec<LiftResult>, Option<(usize, usize)>);

/// Lifts every entry of a fixed-side datum independently against the full
/// group; the produced Levi chains need not be compatible. Returns the
/// per-entry results along with the first incomparable pair of Levis, if
/// any. This is the documented negative control for the top-down lift.
pub fn naive_lift_datum(
    ctx: &LiftContext<'_>,
    delta: &CharacterDatum,
) -> Result<NaiveLiftOutcome> {
    let (h_levis, _) = match &delta.side {
        DatumSide::Fixed { levis, ambient } => (levis.clone(), ambient.clone()),
        DatumSide::Ambient { .. } => {
            return Err(Error::Lift("naive lift input must be a fixed-side datum".into()))
        }
    };
    let g = TwistedLevi::full(ctx.frame);
    let mut results = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for j in 0..delta.len() {
        let mut strategy = ChoiceStrategy::Canonical;
        let result = ctx.lift_single(
            &g,
            &ctx.hside.ambient.clone(),
            &h_levis[j],
            &delta.chars()[j],
            Rat::zero(),
            &mut strategy,
            j,
            0,
        )?;
        results.push(result);
    }
    let mut incomparable = None;
    'outer: for j in 0..results.len().saturating_sub(1) {
        let last = match &results[j].sigma.side {
            DatumSide::Ambient { levis, .. } => levis.last().unwrap().clone(),
            _ => unreachable!(),
        };
        let first_next = match &results[j + 1].sigma.side {
            DatumSide::Ambient { levis, .. } => levis[0].clone(),
            _ => unreachable!(),
        };
        if !last.contained_in(&first_next) {
            incomparable = Some((j, j + 1));
            break 'outer;
        }
    }
    Ok((results, incomparable))
}
