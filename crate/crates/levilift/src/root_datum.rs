//! Torus coordinates for the ambient GL(n), twisted Levi subgroups as
//! Galois-stable partitions, Γ-actions as signed permutations with a
//! Galois twist, dual elements, genericity, and the sharp/flat
//! decomposition.
//!
//! The maximal torus splits over E; each coordinate is one embedding of
//! one Res-factor into the diagonal. Twisted Levi subgroups containing
//! the torus correspond exactly to Galois-stable partitions of the
//! coordinate set, which turns all subgroup computations into finite
//! combinatorics. The fixed-point side is handled through restricted-root
//! descriptors supplied by the scenario and cross-validated here.

use crate::error::{Error, Result};
use crate::local_field::{FieldDesc, FieldElement, GaloisElement};
use crate::rat::Rat;
use num_integer::Integer;
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

/// A generator of Γ as it acts on the torus coordinates: a permutation,
/// a global sign, and a Galois twist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaGen {
    pub name: String,
    pub perm: Vec<usize>,
    pub sign: i64,
    pub galois: GaloisElement,
}

/// One element of the group generated by Γ's action tuples.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GammaElement {
    pub perm: Vec<usize>,
    pub sign: i64,
    pub galois: GaloisElement,
}

impl GammaElement {
    fn identity(n: usize) -> Self {
        GammaElement {
            perm: (0..n).collect(),
            sign: 1,
            galois: GaloisElement::identity(),
        }
    }

    fn compose(&self, desc: &FieldDesc, other: &Self) -> Self {
        // apply `other` first
        let perm = other.perm.iter().map(|&k| self.perm[k]).collect();
        GammaElement {
            perm,
            sign: self.sign * other.sign,
            galois: self.galois.compose(desc, &other.galois),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.sign == 1
            && self.galois.is_identity()
            && self.perm.iter().enumerate().all(|(i, &k)| i == k)
    }
}

/// Coordinate system for the maximal torus: Galois action and Γ-action
/// as (signed) coordinate permutations.
#[derive(Debug)]
pub struct TorusFrame {
    pub desc: Arc<FieldDesc>,
    pub n: usize,
    pub frobenius_perm: Vec<usize>,
    pub twist_perm: Vec<usize>,
    pub gamma_gens: Vec<GammaGen>,
    gamma_closure: Vec<GammaElement>,
    /// P(e_j) for the signed-permutation action of Γ on the rational
    /// coordinate space; `proj[j][k]` is the k-th coordinate of P(e_j).
    proj: Vec<Vec<Rat>>,
}

impl PartialEq for TorusFrame {
    fn eq(&self, other: &Self) -> bool {
        *self.desc == *other.desc
            && self.n == other.n
            && self.frobenius_perm == other.frobenius_perm
            && self.twist_perm == other.twist_perm
            && self.gamma_gens == other.gamma_gens
    }
}

fn check_perm(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::Frame(format!("permutation has length {} != n = {n}", perm.len())));
    }
    let mut seen = vec![false; n];
    for &k in perm {
        if k >= n || seen[k] {
            return Err(Error::Frame("not a permutation".into()));
        }
        seen[k] = true;
    }
    Ok(())
}

fn compose_perm(outer: &[usize], inner: &[usize]) -> Vec<usize> {
    inner.iter().map(|&k| outer[k]).collect()
}

fn perm_pow(perm: &[usize], k: usize) -> Vec<usize> {
    let n = perm.len();
    let mut out: Vec<usize> = (0..n).collect();
    for _ in 0..k {
        out = compose_perm(perm, &out);
    }
    out
}

fn is_id_perm(perm: &[usize]) -> bool {
    perm.iter().enumerate().all(|(i, &k)| i == k)
}

impl TorusFrame {
    pub fn new(
        desc: &Arc<FieldDesc>,
        n: usize,
        frobenius_perm: Vec<usize>,
        twist_perm: Vec<usize>,
        gamma_gens: Vec<GammaGen>,
        declared_gamma_order: Option<usize>,
    ) -> Result<Arc<Self>> {
        check_perm(&frobenius_perm, n)?;
        check_perm(&twist_perm, n)?;
        // the permutation assignment must satisfy the presentation of
        // Gal(E/F): σ^f = τ^e = 1 and στσ⁻¹ = τ^p
        if !is_id_perm(&perm_pow(&frobenius_perm, desc.f)) {
            return Err(Error::Frame("frobenius permutation order does not divide f".into()));
        }
        if !is_id_perm(&perm_pow(&twist_perm, desc.e as usize)) {
            return Err(Error::Frame("twist permutation order does not divide e".into()));
        }
        let lhs = compose_perm(&frobenius_perm, &twist_perm);
        let rhs = compose_perm(
            &perm_pow(&twist_perm, (desc.p.rem_euclid(desc.e)) as usize),
            &frobenius_perm,
        );
        if lhs != rhs {
            return Err(Error::Frame(
                "galois permutations violate the metacyclic relation".into(),
            ));
        }
        for g in &gamma_gens {
            check_perm(&g.perm, n)?;
            if g.sign != 1 && g.sign != -1 {
                return Err(Error::Frame(format!("gamma sign must be ±1, got {}", g.sign)));
            }
        }
        let mut frame = TorusFrame {
            desc: desc.clone(),
            n,
            frobenius_perm,
            twist_perm,
            gamma_gens,
            gamma_closure: Vec::new(),
            proj: Vec::new(),
        };
        frame.gamma_closure = frame.compute_gamma_closure()?;
        if let Some(ord) = declared_gamma_order {
            if ord != frame.gamma_closure.len() {
                return Err(Error::Frame(format!(
                    "declared |Γ| = {ord} but the action tuples generate a group of order {}",
                    frame.gamma_closure.len()
                )));
            }
        }
        if (frame.gamma_closure.len() as i64).gcd(&desc.p) != 1 {
            return Err(Error::Frame(format!(
                "|Γ| = {} is divisible by p = {}",
                frame.gamma_closure.len(),
                desc.p
            )));
        }
        frame.check_gamma_galois_commute()?;
        frame.proj = frame.compute_projection();
        Ok(Arc::new(frame))
    }

    fn compute_gamma_closure(&self) -> Result<Vec<GammaElement>> {
        let id = GammaElement::identity(self.n);
        let gens: Vec<GammaElement> = self
            .gamma_gens
            .iter()
            .map(|g| GammaElement {
                perm: g.perm.clone(),
                sign: g.sign,
                galois: g.galois,
            })
            .collect();
        let mut seen: BTreeSet<(Vec<usize>, i64, (i64, i64))> = BTreeSet::new();
        let mut list = vec![id.clone()];
        seen.insert((id.perm.clone(), id.sign, (0, 0)));
        let mut queue = vec![id];
        while let Some(cur) = queue.pop() {
            for g in &gens {
                let next = g.compose(&self.desc, &cur);
                let key = (next.perm.clone(), next.sign, (next.galois.frob, next.galois.twist));
                if seen.insert(key) {
                    if list.len() >= 512 {
                        return Err(Error::Frame("gamma closure exceeds 512 elements".into()));
                    }
                    list.push(next.clone());
                    queue.push(next);
                }
            }
        }
        Ok(list)
    }

    /// F-rationality of the Γ-action: each generator tuple commutes with
    /// each Galois generator tuple.
    fn check_gamma_galois_commute(&self) -> Result<()> {
        let desc = &self.desc;
        let galois_tuples = [
            GammaElement {
                perm: self.frobenius_perm.clone(),
                sign: 1,
                galois: GaloisElement::new(desc, 1, 0),
            },
            GammaElement {
                perm: self.twist_perm.clone(),
                sign: 1,
                galois: GaloisElement::new(desc, 0, 1),
            },
        ];
        for g in &self.gamma_gens {
            let gt = GammaElement {
                perm: g.perm.clone(),
                sign: g.sign,
                galois: g.galois,
            };
            for s in &galois_tuples {
                if gt.compose(desc, s) != s.compose(desc, &gt) {
                    return Err(Error::Frame(format!(
                        "gamma generator `{}` does not commute with the Galois action",
                        g.name
                    )));
                }
            }
        }
        Ok(())
    }

    fn compute_projection(&self) -> Vec<Vec<Rat>> {
        let n = self.n;
        let order = self.gamma_closure.len() as i64;
        let mut proj = vec![vec![Rat::zero(); n]; n];
        for gamma in &self.gamma_closure {
            for j in 0..n {
                proj[j][gamma.perm[j]] += Rat::new(gamma.sign, order);
            }
        }
        proj
    }

    pub fn gamma_closure(&self) -> &[GammaElement] {
        &self.gamma_closure
    }

    pub fn gamma_order(&self) -> usize {
        self.gamma_closure.len()
    }

    /// The coordinate permutation attached to a Galois element.
    pub fn galois_perm(&self, g: &GaloisElement) -> Vec<usize> {
        compose_perm(
            &perm_pow(&self.frobenius_perm, g.frob.rem_euclid(self.desc.f as i64) as usize),
            &perm_pow(&self.twist_perm, g.twist.rem_euclid(self.desc.e) as usize),
        )
    }

    /// Projection of e_j − e_k to the Γ-fixed subspace, as a rational
    /// vector in the ambient coordinates.
    pub fn restricted_root(&self, j: usize, k: usize) -> Vec<Rat> {
        (0..self.n).map(|i| self.proj[j][i] - self.proj[k][i]).collect()
    }

    /// Sign-consistent Γ-orbits of coordinates: a basis of the fixed
    /// subspace V^Γ. Each orbit lists (index, sign relative to the
    /// minimal representative).
    pub fn orbit_basis(&self) -> Vec<Vec<(usize, i64)>> {
        let n = self.n;
        let mut assigned: Vec<Option<(usize, i64)>> = vec![None; n]; // (orbit id, sign)
        let mut orbits: Vec<Vec<(usize, i64)>> = Vec::new();
        for start in 0..n {
            if assigned[start].is_some() {
                continue;
            }
            let id = orbits.len();
            let mut members: BTreeMap<usize, i64> = BTreeMap::new();
            members.insert(start, 1);
            let mut consistent = true;
            for gamma in &self.gamma_closure {
                let img = gamma.perm[start];
                let sign = gamma.sign;
                if let Some(&s) = members.get(&img) {
                    if s != sign {
                        consistent = false;
                        break;
                    }
                } else {
                    members.insert(img, sign);
                }
            }
            for (&idx, &s) in &members {
                assigned[idx] = Some((id, s));
            }
            if consistent {
                orbits.push(members.into_iter().collect());
            } else {
                orbits.push(Vec::new()); // keep ids aligned; dead orbit
            }
        }
        orbits.into_iter().filter(|o| !o.is_empty()).collect()
    }
}

/// A twisted Levi subgroup containing the torus: a Galois-stable set
/// partition of the coordinates. The all-in-one-block partition is the
/// ambient group; singletons are the torus.
#[derive(Debug, Clone)]
pub struct TwistedLevi {
    pub frame: Arc<TorusFrame>,
    blocks: Vec<Vec<usize>>,
}

impl PartialEq for TwistedLevi {
    fn eq(&self, other: &Self) -> bool {
        *self.frame == *other.frame && self.blocks == other.blocks
    }
}
impl Eq for TwistedLevi {}

impl TwistedLevi {
    pub fn new(frame: &Arc<TorusFrame>, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n = frame.n;
        let mut seen = vec![false; n];
        let mut canon: Vec<Vec<usize>> = Vec::with_capacity(blocks.len());
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::Levi("empty block".into()));
            }
            let mut b = b.clone();
            b.sort_unstable();
            for &k in &b {
                if k >= n || seen[k] {
                    return Err(Error::Levi(format!("index {k} repeated or out of range")));
                }
                seen[k] = true;
            }
            canon.push(b);
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::Levi("blocks do not cover all coordinates".into()));
        }
        canon.sort_by_key(|b| b[0]);
        let levi = TwistedLevi {
            frame: frame.clone(),
            blocks: canon,
        };
        if !levi.stable_under(&frame.frobenius_perm) || !levi.stable_under(&frame.twist_perm) {
            return Err(Error::Levi("partition is not Galois-stable".into()));
        }
        Ok(levi)
    }

    /// The ambient group: a single block.
    pub fn full(frame: &Arc<TorusFrame>) -> Self {
        TwistedLevi {
            frame: frame.clone(),
            blocks: vec![(0..frame.n).collect()],
        }
    }

    /// The torus: singleton blocks.
    pub fn torus(frame: &Arc<TorusFrame>) -> Self {
        TwistedLevi {
            frame: frame.clone(),
            blocks: (0..frame.n).map(|k| vec![k]).collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, k: usize) -> usize {
        self.blocks.iter().position(|b| b.contains(&k)).expect("index in range")
    }

    pub fn same_block(&self, j: usize, k: usize) -> bool {
        self.block_of(j) == self.block_of(k)
    }

    fn stable_under(&self, perm: &[usize]) -> bool {
        self.blocks.iter().all(|b| {
            let img: BTreeSet<usize> = b.iter().map(|&k| perm[k]).collect();
            self.blocks
                .iter()
                .any(|c| c.len() == img.len() && c.iter().all(|k| img.contains(k)))
        })
    }

    pub fn is_gamma_stable(&self) -> bool {
        self.frame
            .gamma_closure()
            .iter()
            .all(|g| self.stable_under(&g.perm))
    }

    /// Containment M′ ⊆ M as refinement of partitions.
    pub fn contained_in(&self, other: &Self) -> bool {
        self.blocks
            .iter()
            .all(|b| other.blocks.iter().any(|c| b.iter().all(|k| c.contains(k))))
    }

    /// All ordered intra-block pairs (j, k), j ≠ k: the roots of this Levi.
    pub fn root_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for &j in b {
                for &k in b {
                    if j != k {
                        out.push((j, k));
                    }
                }
            }
        }
        out
    }

    /// Nonzero restrictions of this Levi's roots to the Γ-fixed subspace.
    pub fn fixed_point_restricted_roots(&self) -> Result<BTreeSet<Vec<Rat>>> {
        if !self.is_gamma_stable() {
            return Err(Error::Levi(
                "restricted roots requested for a non-Γ-stable Levi".into(),
            ));
        }
        let mut out = BTreeSet::new();
        for (j, k) in self.root_pairs() {
            let v = self.frame.restricted_root(j, k);
            if v.iter().any(|c| !c.is_zero()) {
                out.insert(v);
            }
        }
        Ok(out)
    }
}

/// A rational functional on the torus's Lie algebra over E, stored by its
/// coordinates. Rationality (Galois equivariance) is validated at
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DualElement {
    pub frame: Arc<TorusFrame>,
    coords: Vec<FieldElement>,
}

impl DualElement {
    pub fn new(frame: &Arc<TorusFrame>, coords: Vec<FieldElement>) -> Result<Self> {
        if coords.len() != frame.n {
            return Err(Error::Dual(format!(
                "expected {} coordinates, got {}",
                frame.n,
                coords.len()
            )));
        }
        let x = DualElement {
            frame: frame.clone(),
            coords,
        };
        x.check_rational()?;
        Ok(x)
    }

    /// Rationality: coords(g·k) = g(coords(k)) for the Galois generators.
    fn check_rational(&self) -> Result<()> {
        let desc = &self.frame.desc;
        for (gen, perm) in [
            (GaloisElement::new(desc, 1, 0), &self.frame.frobenius_perm),
            (GaloisElement::new(desc, 0, 1), &self.frame.twist_perm),
        ] {
            if gen.is_identity() && is_id_perm(perm) {
                continue;
            }
            #[allow(clippy::needless_range_loop)]
            for k in 0..self.frame.n {
                if !self.coords[perm[k]].agrees(&self.coords[k].apply_galois(&gen)) {
                    return Err(Error::Dual(format!(
                        "coordinates are not Galois-equivariant at index {k}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn zero(frame: &Arc<TorusFrame>) -> Self {
        DualElement {
            frame: frame.clone(),
            coords: vec![FieldElement::zero(&frame.desc); frame.n],
        }
    }

    /// Galois action on coordinates: (g·X)(g·k) = g(X(k)).
    pub fn galois_apply(&self, g: &GaloisElement) -> Self {
        let perm = self.frame.galois_perm(g);
        let mut coords = vec![FieldElement::zero(&self.frame.desc); self.frame.n];
        for k in 0..self.frame.n {
            coords[perm[k]] = self.coords[k].apply_galois(g);
        }
        DualElement {
            frame: self.frame.clone(),
            coords,
        }
    }

    pub fn coords(&self) -> &[FieldElement] {
        &self.coords
    }

    pub fn coord(&self, k: usize) -> &FieldElement {
        &self.coords[k]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    /// depth(X) = −min_k val(coords[k]); `None` for the zero functional.
    pub fn depth(&self) -> Option<Rat> {
        self.coords
            .iter()
            .filter_map(|c| c.val())
            .min()
            .map(|v| -v)
    }

    /// Depth in π-position units (depth times e).
    pub fn depth_pos(&self) -> Option<i64> {
        self.coords
            .iter()
            .filter_map(|c| c.lead_pos())
            .min()
            .map(|l| -l)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&FieldElement, &FieldElement) -> Result<FieldElement>,
    ) -> Result<Self> {
        if *self.frame != *other.frame {
            return Err(Error::Dual("frame mismatch".into()));
        }
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(DualElement {
            frame: self.frame.clone(),
            coords,
        })
    }

    pub fn neg(&self) -> Self {
        DualElement {
            frame: self.frame.clone(),
            coords: self.coords.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn scale(&self, c: &FieldElement) -> Result<Self> {
        let coords = self
            .coords
            .iter()
            .map(|x| x.mul(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(DualElement {
            frame: self.frame.clone(),
            coords,
        })
    }

    /// γ·X for one Γ-action tuple: (γ·X)(γk) = ε·g(X(k)).
    pub fn gamma_apply(&self, gamma: &GammaElement) -> Self {
        let mut coords = vec![FieldElement::zero(&self.frame.desc); self.frame.n];
        for (k, coord) in self.coords.iter().enumerate() {
            let mut v = coord.apply_galois(&gamma.galois);
            if gamma.sign < 0 {
                v = v.neg();
            }
            coords[gamma.perm[k]] = v;
        }
        DualElement {
            frame: self.frame.clone(),
            coords,
        }
    }

    pub fn is_gamma_fixed(&self) -> bool {
        self.frame
            .gamma_gens
            .iter()
            .map(|g| GammaElement {
                perm: g.perm.clone(),
                sign: g.sign,
                galois: g.galois,
            })
            .all(|g| self.gamma_apply(&g).agrees_with(self))
    }

    /// Coordinatewise window-aware agreement.
    pub fn agrees_with(&self, other: &Self) -> bool {
        *self.frame == *other.frame
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| a.agrees(b))
    }

    /// (1/|Γ|) Σ_γ γ·X: the Γ-fixed average. |Γ| is coprime to p, so the
    /// scaling preserves depth.
    pub fn gamma_average(&self) -> Result<Self> {
        let closure = self.frame.gamma_closure();
        let mut acc = DualElement::zero(&self.frame);
        for gamma in closure {
            acc = acc.add(&self.gamma_apply(gamma))?;
        }
        let inv_order =
            FieldElement::from_rational(&self.frame.desc, Rat::new(1, closure.len() as i64));
        let content = self
            .coords
            .iter()
            .map(|c| c.digits().len())
            .max()
            .unwrap_or(1)
            .max(1);
        let avg = acc.scale(&inv_order)?.truncate_content(content);
        avg.check_rational()?;
        Ok(avg)
    }

    /// Applies a coordinate-wise transformation.
    pub fn map_coords(&self, f: impl Fn(&FieldElement) -> FieldElement) -> Self {
        DualElement {
            frame: self.frame.clone(),
            coords: self.coords.iter().map(f).collect(),
        }
    }

    /// Caps every coordinate's content length.
    fn truncate_content(&self, digits: usize) -> Self {
        DualElement {
            frame: self.frame.clone(),
            coords: self.coords.iter().map(|c| c.truncated(digits)).collect(),
        }
    }

    /// The duality pairing Σ_k X_k·u_k with a Lie-algebra argument in
    /// the same coordinates. For rational arguments the value lies in F
    /// after a trace.
    pub fn pair(&self, u: &DualElement) -> Result<FieldElement> {
        if *self.frame != *u.frame {
            return Err(Error::Dual("frame mismatch".into()));
        }
        let mut acc = FieldElement::zero(&self.frame.desc);
        for (x, y) in self.coords.iter().zip(&u.coords) {
            acc = acc.add(&x.mul(y)?)?;
        }
        Ok(acc)
    }

    /// X(H_α) = coords(j) − coords(k) for the root α = e_j − e_k.
    pub fn coroot_pairing(&self, j: usize, k: usize) -> Result<FieldElement> {
        if j == k {
            return Err(Error::Dual("coroot pairing needs j != k".into()));
        }
        self.coords[j].sub(&self.coords[k])
    }

    /// Decides whether the pairing at (j, k) is exactly zero, erroring
    /// when a nonzero difference first appears outside the reliable
    /// digit window of the operands.
    pub fn pairing_is_zero(&self, j: usize, k: usize) -> Result<bool> {
        let d = self.coroot_pairing(j, k)?;
        decide_zero(&d, window_end(&self.coords[j]).min(window_end(&self.coords[k])))
    }

    /// True iff the coordinates are constant on every block of L.
    pub fn is_central_for(&self, levi: &TwistedLevi) -> Result<bool> {
        for b in levi.blocks() {
            for w in b.windows(2) {
                if !self.pairing_is_zero(w[0], w[1])? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Coefficients of a Γ-fixed element on the orbit basis of V^Γ.
    pub fn fixed_space_coordinates(&self) -> Result<Vec<(usize, FieldElement)>> {
        if !self.is_gamma_fixed() {
            return Err(Error::Dual("element is not Γ-fixed".into()));
        }
        Ok(self
            .frame
            .orbit_basis()
            .into_iter()
            .map(|orbit| {
                let (rep, _) = orbit[0];
                (rep, self.coords[rep].clone())
            })
            .collect())
    }
}

fn window_end(x: &FieldElement) -> i64 {
    match x.lead_pos() {
        Some(l) => l + x.desc().precision as i64,
        None => i64::MAX,
    }
}

/// Exact-zero policy: a nonzero difference whose leading digit falls at or
/// beyond the reliable window raises a precision error instead of
/// deciding membership.
pub(crate) fn decide_zero(diff: &FieldElement, window_end: i64) -> Result<bool> {
    match diff.lead_pos() {
        None => Ok(true),
        Some(l) if l >= window_end => Err(Error::Precision(format!(
            "difference vanishes to stored precision (lead {l} beyond window {window_end})"
        ))),
        Some(_) => Ok(false),
    }
}

impl TwistedLevi {
    /// Refines this Levi by the exact-zero pairings of X: j ~ k iff they
    /// share a block and X(H_{e_j−e_k}) = 0. Galois-stable by rationality
    /// of X, Γ-stable whenever X is Γ-fixed.
    pub fn centralizer_levi(&self, x: &DualElement) -> Result<TwistedLevi> {
        self.refine_by(x, |d: &DualElement, j, k| d.pairing_is_zero(j, k))
    }

    /// Φ′-membership: pairs whose pairing is zero or of valuation > −t.
    /// Returns the classes of the induced equivalence relation on each
    /// block (the ultrametric inequality closes the relation).
    pub fn phi_prime_classes(&self, x: &DualElement, t: Rat) -> Result<TwistedLevi> {
        let neg_t = -t;
        let levi = self.refine_by(x, |d: &DualElement, j, k| {
            if d.pairing_is_zero(j, k)? {
                return Ok(true);
            }
            let v = d.coroot_pairing(j, k)?.val().expect("nonzero");
            if v < neg_t {
                return Err(Error::Internal(format!(
                    "pairing valuation {v} below −depth at ({j}, {k})"
                )));
            }
            Ok(v > neg_t)
        })?;
        // ultrametric closure sanity: every intra-class pair qualifies
        for (j, k) in levi.root_pairs() {
            let ok = x.pairing_is_zero(j, k)?
                || x.coroot_pairing(j, k)?.val().expect("nonzero") > neg_t;
            if !ok {
                return Err(Error::Internal(
                    "Φ′ relation failed to be transitive".into(),
                ));
            }
        }
        Ok(levi)
    }

    /// The root-pair set Φ′ itself.
    pub fn phi_prime(&self, x: &DualElement, t: Rat) -> Result<Vec<(usize, usize)>> {
        Ok(self.phi_prime_classes(x, t)?.root_pairs())
    }

    fn refine_by(
        &self,
        x: &DualElement,
        related: impl Fn(&DualElement, usize, usize) -> Result<bool>,
    ) -> Result<TwistedLevi> {
        if *x.frame != *self.frame {
            return Err(Error::Dual("frame mismatch".into()));
        }
        let n = self.frame.n;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for b in self.blocks() {
            for (ai, &j) in b.iter().enumerate() {
                for &k in &b[ai + 1..] {
                    if related(x, j, k)? {
                        let (rj, rk) = (find(&mut parent, j), find(&mut parent, k));
                        parent[rj] = rk;
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        TwistedLevi::new(&self.frame, groups.into_values().collect())
    }

    /// Splits X into the class-average part (killing every Φ′ coroot) and
    /// the deviation.
    ///
    /// Exactness contract: X = X♯ + X♭ coordinatewise, X♯ constant on
    /// every Φ′ class, depth(X♭) < t strictly.
    pub fn sharp_flat(&self, x: &DualElement, t: Rat) -> Result<(DualElement, DualElement)> {
        if x.depth() != Some(t) {
            return Err(Error::Dual(format!(
                "sharp/flat requires depth(X) = {t}, found {:?}",
                x.depth()
            )));
        }
        let classes = self.phi_prime_classes(x, t)?;
        let desc = &self.frame.desc;
        // the averages carry no more content than their inputs: the 1/c
        // expansion must not manufacture window-filling tails, and digits
        // past the coordinates' own content are not conjugacy-reliable.
        // The cap is uniform over the coordinates to respect classes.
        let content = x
            .coords()
            .iter()
            .map(|c| c.digits().len())
            .max()
            .unwrap_or(1)
            .max(1);
        let mut sharp_coords = vec![FieldElement::zero(desc); self.frame.n];
        for class in classes.blocks() {
            let c = class.len() as i64;
            if c % desc.p == 0 {
                return Err(Error::Levi(format!(
                    "Φ′ class of size {c} is divisible by p = {}",
                    desc.p
                )));
            }
            let mut sum = FieldElement::zero(desc);
            let mut class_lead: Option<i64> = None;
            for &k in class {
                sum = sum.add(x.coord(k))?;
                class_lead = match (class_lead, x.coord(k).lead_pos()) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
            }
            // a class of shallow conjugates can cancel completely; an
            // average whose lead falls past the class's reliable content
            // vanishes to stored precision, and zero is a valid choice of
            // representative in the sharp coset
            let reliable_end = class_lead.map(|l| l + content as i64);
            let avg = match (sum.lead_pos(), reliable_end) {
                (Some(lead), Some(end)) if lead >= end => FieldElement::zero(desc),
                _ => sum
                    .mul(&FieldElement::from_rational(desc, Rat::new(1, c)))?
                    .truncated(content),
            };
            for &k in class {
                sharp_coords[k] = avg.clone();
            }
        }
        let sharp = DualElement::new(&self.frame, sharp_coords)?;
        let flat = x.sub(&sharp)?;
        // depth(X♭) < t strictly
        if let Some(df) = flat.depth() {
            if df >= t {
                return Err(Error::Internal(format!(
                    "flat part has depth {df} >= {t}"
                )));
            }
        }
        Ok((sharp, flat))
    }
}

/// G-genericity of X relative to M′ ⊆ M: every pairing inside an M-block
/// crossing M′-blocks has valuation exactly −t.
pub fn is_generic(
    x: &DualElement,
    t: Rat,
    m_prime: &TwistedLevi,
    m: &TwistedLevi,
) -> Result<bool> {
    if !m_prime.contained_in(m) {
        return Err(Error::Levi("M′ is not contained in M".into()));
    }
    if !x.is_central_for(m_prime)? {
        return Err(Error::Dual("X is not central for M′".into()));
    }
    if x.depth() != Some(t) {
        return Err(Error::Dual(format!(
            "genericity requires depth(X) = {t}, found {:?}",
            x.depth()
        )));
    }
    let neg_t = -t;
    for (j, k) in m.root_pairs() {
        if m_prime.same_block(j, k) {
            continue;
        }
        if x.pairing_is_zero(j, k)? {
            return Ok(false);
        }
        if x.coroot_pairing(j, k)?.val().expect("nonzero") != neg_t {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Fixed-point-side Levi descriptors: named restricted-root sets on V^Γ,
/// supplied by the scenario and cross-validated against the frame.
#[derive(Debug, Clone)]
pub struct HSide {
    pub ambient: String,
    levis: Vec<(String, BTreeSet<Vec<Rat>>)>,
    /// Representative ambient root pair for each listed restricted root.
    reps: BTreeMap<Vec<Rat>, (usize, usize)>,
}

impl HSide {
    pub fn new(
        frame: &Arc<TorusFrame>,
        ambient: String,
        levis: Vec<(String, Vec<Vec<Rat>>)>,
    ) -> Result<Self> {
        let n = frame.n;
        // nonzero projections of all ambient roots, with representatives
        let mut proj_reps: BTreeMap<Vec<Rat>, (usize, usize)> = BTreeMap::new();
        for j in 0..n {
            for k in 0..n {
                if j == k {
                    continue;
                }
                let v = frame.restricted_root(j, k);
                if v.iter().any(|c| !c.is_zero()) {
                    proj_reps.entry(v).or_insert((j, k));
                }
            }
        }
        let mut canon: Vec<(String, BTreeSet<Vec<Rat>>)> = Vec::new();
        let mut reps = BTreeMap::new();
        let mut ambient_roots: Option<BTreeSet<Vec<Rat>>> = None;
        for (name, roots) in levis {
            let mut set = BTreeSet::new();
            for r in roots {
                if r.len() != n {
                    return Err(Error::Scenario(format!(
                        "restricted root in `{name}` has length {} != n = {n}",
                        r.len()
                    )));
                }
                if r.iter().all(|c| c.is_zero()) {
                    return Err(Error::Scenario(format!("zero root listed in `{name}`")));
                }
                let rep = proj_reps.get(&r).ok_or_else(|| {
                    Error::Scenario(format!(
                        "root {r:?} in `{name}` is not the restriction of any ambient root"
                    ))
                })?;
                reps.insert(r.clone(), *rep);
                set.insert(r);
            }
            // closed under negation
            for r in &set {
                let neg: Vec<Rat> = r.iter().map(|c| -*c).collect();
                if !set.contains(&neg) {
                    return Err(Error::Scenario(format!(
                        "root set of `{name}` is not closed under negation"
                    )));
                }
            }
            if name == ambient {
                ambient_roots = Some(set.clone());
            }
            if canon.iter().any(|(m, _)| *m == name) {
                return Err(Error::Scenario(format!("duplicate fixed-side Levi `{name}`")));
            }
            canon.push((name, set));
        }
        let ambient_roots = ambient_roots
            .ok_or_else(|| Error::Scenario(format!("ambient `{ambient}` not in fixed-side list")))?;
        for (name, set) in &canon {
            if !set.is_subset(&ambient_roots) {
                return Err(Error::Scenario(format!(
                    "`{name}` has roots outside the ambient fixed-point root system"
                )));
            }
        }
        Ok(HSide {
            ambient,
            levis: canon,
            reps,
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.levis.iter().map(|(n, _)| n.as_str())
    }

    pub fn roots(&self, name: &str) -> Result<&BTreeSet<Vec<Rat>>> {
        self.levis
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::Scenario(format!("unknown fixed-side Levi `{name}`")))
    }

    /// Containment of fixed-side Levis as root-set inclusion.
    pub fn contained_in(&self, small: &str, big: &str) -> Result<bool> {
        Ok(self.roots(small)?.is_subset(self.roots(big)?))
    }

    /// Pairing X(H_a) for a restricted root, via any ambient root that
    /// restricts to it. Well-defined for Γ-fixed X.
    pub fn pairing(&self, x: &DualElement, root: &[Rat]) -> Result<FieldElement> {
        let (j, k) = self
            .reps
            .get(root)
            .ok_or_else(|| Error::Scenario("pairing against unlisted root".into()))?;
        x.coroot_pairing(*j, *k)
    }

    /// Centrality on the fixed side: pairings vanish on the named Levi's
    /// roots. Requires a Γ-fixed element.
    pub fn is_central_fixed(&self, x: &DualElement, name: &str) -> Result<bool> {
        if !x.is_gamma_fixed() {
            return Err(Error::Dual("fixed-side centrality needs a Γ-fixed element".into()));
        }
        for root in self.roots(name)? {
            let (j, k) = self.reps[root];
            if !x.pairing_is_zero(j, k)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Genericity on the fixed side: pairings on big ∖ small have
    /// valuation exactly −t.
    pub fn is_generic_fixed(&self, x: &DualElement, t: Rat, small: &str, big: &str) -> Result<bool> {
        if !self.contained_in(small, big)? {
            return Err(Error::Levi(format!("`{small}` not contained in `{big}`")));
        }
        if !self.is_central_fixed(x, small)? {
            return Err(Error::Dual(format!("element is not central for `{small}`")));
        }
        let small_roots = self.roots(small)?.clone();
        for root in self.roots(big)? {
            if small_roots.contains(root) {
                continue;
            }
            let (j, k) = self.reps[root];
            if x.pairing_is_zero(j, k)? {
                return Ok(false);
            }
            if x.coroot_pairing(j, k)?.val().expect("nonzero") != -t {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether the fixed point of the ambient-side Levi L equals the named
    /// fixed-side Levi: the restrictions of L's roots that are roots of
    /// the fixed-point group must be exactly the named root set.
    pub fn fixed_levi_equals(&self, l: &TwistedLevi, name: &str) -> Result<bool> {
        let ambient_roots = self.roots(&self.ambient.clone())?.clone();
        let target = self.roots(name)?;
        let projected = l.fixed_point_restricted_roots()?;
        let image: BTreeSet<Vec<Rat>> = projected
            .into_iter()
            .filter(|v| ambient_roots.contains(v))
            .collect();
        Ok(image == *target)
    }
}
