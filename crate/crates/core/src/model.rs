//! Action groupoids `X ⋊ Γ` over a finite unit space.
//!
//! An element is a pair `(x, γ)` with range `x` and source `x·γ`, where Γ acts
//! on the right by permutations. Composition is `(x, γ)(x·γ, η) = (x, γη)`.
//! The one-unit model is the group Γ itself.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::{FiniteGroup, FiniteGroupSpec, GroupBackend, GroupElem, Letter};

/// Default cap on the number of elements a single enumeration may produce.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 5_000_000;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitId(pub u32);

impl UnitId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An arrow `(x, γ)` of the action groupoid.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GroupoidElement {
    range: UnitId,
    elem: GroupElem,
}

impl GroupoidElement {
    pub fn new(range: UnitId, elem: GroupElem) -> Self {
        GroupoidElement { range, elem }
    }

    #[inline]
    pub fn range(&self) -> UnitId {
        self.range
    }

    #[inline]
    pub fn group_elem(&self) -> &GroupElem {
        &self.elem
    }
}

/// JSON form of a model.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub backend: BackendSpec,
    pub units: usize,
    #[serde(default)]
    pub action: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum BackendSpec {
    Free(usize),
    Finite(FiniteGroupSpec),
}

#[derive(Debug)]
pub struct GroupoidModel {
    backend: GroupBackend,
    units: usize,
    /// Right action of each letter (generators and their inverses).
    letter_perms: Vec<Vec<u32>>,
    /// Finite backends: the permutation of every group element.
    element_perms: Vec<Vec<u32>>,
    spec: ModelSpec,
    digest: String,
    enumeration_limit: usize,
}

impl GroupoidModel {
    /// Validates and builds a model. `action` holds one permutation of
    /// `0..units` per generator; inverse actions are derived.
    pub fn new(backend: GroupBackend, units: usize, action: Vec<Vec<u32>>) -> Result<Self> {
        let spec = ModelSpec {
            backend: match &backend {
                GroupBackend::Free { rank } => BackendSpec::Free(*rank),
                GroupBackend::Finite(g) => BackendSpec::Finite(finite_spec_of(g)),
            },
            units,
            action: action.clone(),
        };
        Self::build(backend, spec)
    }

    pub fn from_spec(spec: ModelSpec) -> Result<Self> {
        let backend = match &spec.backend {
            BackendSpec::Free(rank) => GroupBackend::free(*rank)?,
            BackendSpec::Finite(f) => GroupBackend::Finite(FiniteGroup::from_spec(f)?),
        };
        Self::build(backend, spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(serde_json::from_str(text)?)
    }

    fn build(backend: GroupBackend, mut spec: ModelSpec) -> Result<Self> {
        let units = spec.units;
        if units == 0 {
            return Err(Error::InvalidParameter("unit space must be nonempty".into()));
        }
        if units > u32::MAX as usize {
            return Err(Error::InvalidParameter("too many units".into()));
        }
        let gens = backend.num_generators();
        if spec.action.is_empty() && units == 1 {
            spec.action = vec![vec![0]; gens];
        }
        if spec.action.len() != gens {
            return Err(Error::ActionArity {
                expected: gens,
                found: spec.action.len(),
            });
        }
        let mut letter_perms = Vec::with_capacity(2 * gens);
        for (i, perm) in spec.action.iter().enumerate() {
            if perm.len() != units {
                return Err(Error::ActionLength {
                    generator: i,
                    expected: units,
                    found: perm.len(),
                });
            }
            let mut inv = vec![u32::MAX; units];
            for (x, &y) in perm.iter().enumerate() {
                if y as usize >= units || inv[y as usize] != u32::MAX {
                    return Err(Error::NonBijectiveAction { generator: i });
                }
                inv[y as usize] = x as u32;
            }
            letter_perms.push(perm.clone());
            letter_perms.push(inv);
        }

        let element_perms = match &backend {
            GroupBackend::Free { .. } => Vec::new(),
            GroupBackend::Finite(g) => finite_element_perms(g, &letter_perms, units)?,
        };

        let digest = hex::encode(Sha256::digest(serde_json::to_vec(&spec)?));
        Ok(GroupoidModel {
            backend,
            units,
            letter_perms,
            element_perms,
            spec,
            digest,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        })
    }

    /// The group Γ as a one-unit groupoid.
    pub fn group(backend: GroupBackend) -> Result<Self> {
        let gens = backend.num_generators();
        Self::new(backend, 1, vec![vec![0]; gens])
    }

    pub fn free_group(rank: usize) -> Result<Self> {
        Self::group(GroupBackend::free(rank)?)
    }

    /// Free group of the given rank acting on `units` points through seeded
    /// random permutations.
    pub fn random_free_action(rank: usize, units: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let action = (0..rank)
            .map(|_| {
                let mut p: Vec<u32> = (0..units as u32).collect();
                p.shuffle(&mut rng);
                p
            })
            .collect();
        Self::new(GroupBackend::free(rank)?, units, action)
    }

    pub fn with_enumeration_limit(mut self, limit: usize) -> Self {
        self.enumeration_limit = limit;
        self
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn backend(&self) -> &GroupBackend {
        &self.backend
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn unit_ids(&self) -> impl Iterator<Item = UnitId> + Clone {
        (0..self.units as u32).map(UnitId)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// SHA-256 of the canonical JSON description.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn enumeration_limit(&self) -> usize {
        self.enumeration_limit
    }

    pub fn letter_perm(&self, l: Letter) -> &[u32] {
        &self.letter_perms[l as usize]
    }

    pub fn unit_check(&self, u: UnitId) -> Result<()> {
        if u.index() < self.units {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("unit {u} out of range 0..{}", self.units)))
        }
    }

    /// `x·γ` for the right action.
    pub fn act(&self, x: UnitId, g: &GroupElem) -> UnitId {
        match g {
            GroupElem::Word(w) => UnitId(
                w.letters()
                    .iter()
                    .fold(x.0, |y, &l| self.letter_perms[l as usize][y as usize]),
            ),
            GroupElem::Id(id) => UnitId(self.element_perms[*id as usize][x.index()]),
        }
    }

    pub fn unit(&self, u: UnitId) -> GroupoidElement {
        GroupoidElement::new(u, self.backend.identity())
    }

    /// The generator-labelled arrow `(u, letter)`.
    pub fn generator(&self, u: UnitId, l: Letter) -> GroupoidElement {
        GroupoidElement::new(u, self.backend.letter(l))
    }

    pub fn element(&self, u: UnitId, g: GroupElem) -> GroupoidElement {
        GroupoidElement::new(u, g)
    }

    /// Parses `"a b A"`-style labels into the arrow with range `u`.
    pub fn parse_element(&self, u: UnitId, word: &str) -> Result<GroupoidElement> {
        self.unit_check(u)?;
        Ok(GroupoidElement::new(u, self.backend.parse(word)?))
    }

    pub fn label(&self, g: &GroupoidElement) -> String {
        self.backend.label(&g.elem)
    }

    #[inline]
    pub fn range(&self, g: &GroupoidElement) -> UnitId {
        g.range
    }

    #[inline]
    pub fn source(&self, g: &GroupoidElement) -> UnitId {
        self.act(g.range, &g.elem)
    }

    pub fn is_unit(&self, g: &GroupoidElement) -> bool {
        self.backend.is_identity(&g.elem)
    }

    pub fn composable(&self, g: &GroupoidElement, h: &GroupoidElement) -> bool {
        self.source(g) == h.range
    }

    pub fn compose(&self, g: &GroupoidElement, h: &GroupoidElement) -> Result<GroupoidElement> {
        let s = self.source(g);
        if s != h.range {
            return Err(Error::NotComposable {
                left_source: s.0,
                right_range: h.range.0,
            });
        }
        Ok(self.compose_unchecked(g, h))
    }

    /// Composition without the source/range check.
    #[inline]
    pub fn compose_unchecked(&self, g: &GroupoidElement, h: &GroupoidElement) -> GroupoidElement {
        GroupoidElement::new(g.range, self.backend.mul(&g.elem, &h.elem))
    }

    pub fn inverse(&self, g: &GroupoidElement) -> GroupoidElement {
        GroupoidElement::new(self.source(g), self.backend.inverse(&g.elem))
    }

    /// Word length `l_S`; units have length 0.
    #[inline]
    pub fn length(&self, g: &GroupoidElement) -> usize {
        self.backend.length(&g.elem)
    }

    /// Size of `W_k ∩ G^u`. Every range fiber of an action groupoid is a copy
    /// of the Cayley graph of Γ, so this does not depend on `u`.
    pub fn sphere_size(&self, _u: UnitId, k: usize) -> u128 {
        self.backend.sphere_size(k)
    }

    pub fn ball_size(&self, _u: UnitId, k: usize) -> u128 {
        self.backend.ball_size(k)
    }

    fn check_budget(&self, k: usize) -> Result<()> {
        let required = self.backend.ball_size(k);
        if required > self.enumeration_limit as u128 {
            return Err(Error::EnumerationLimit {
                required,
                limit: self.enumeration_limit as u128,
            });
        }
        Ok(())
    }

    /// `W_k ∩ G^u`, in deterministic order.
    pub fn enumerate_sphere(&self, u: UnitId, k: usize) -> Result<Vec<GroupoidElement>> {
        self.unit_check(u)?;
        self.check_budget(k)?;
        Ok(self
            .backend
            .sphere(k)
            .into_iter()
            .map(|g| GroupoidElement::new(u, g))
            .collect())
    }

    /// `B_k ∩ G^u`: spheres `0..=k` concatenated.
    pub fn enumerate_ball(&self, u: UnitId, k: usize) -> Result<Vec<GroupoidElement>> {
        self.unit_check(u)?;
        self.check_budget(k)?;
        let mut out = Vec::with_capacity(self.backend.ball_size(k) as usize);
        for j in 0..=k {
            out.extend(self.backend.sphere(j).into_iter().map(|g| GroupoidElement::new(u, g)));
        }
        Ok(out)
    }

    /// `B_k ∩ G_u`, the source fiber, as inverses of the range-fiber ball.
    pub fn enumerate_source_ball(&self, u: UnitId, k: usize) -> Result<Vec<GroupoidElement>> {
        Ok(self
            .enumerate_ball(u, k)?
            .iter()
            .map(|g| self.inverse(g))
            .collect())
    }
}

fn finite_spec_of(g: &FiniteGroup) -> FiniteGroupSpec {
    let n = g.order() as u32;
    FiniteGroupSpec {
        table: (0..n).map(|a| (0..n).map(|b| g.mul(a, b)).collect()).collect(),
        inverse: Some((0..n).map(|a| g.inverse(a)).collect()),
        identity: Some(g.identity()),
        generators: g.generators().to_vec(),
    }
}

/// Extends the generator permutations to every group element by BFS and
/// verifies the extension is a homomorphism (right action).
fn finite_element_perms(g: &FiniteGroup, letter_perms: &[Vec<u32>], units: usize) -> Result<Vec<Vec<u32>>> {
    let order = g.order();
    let mut perms: Vec<Option<Vec<u32>>> = vec![None; order];
    perms[g.identity() as usize] = Some((0..units as u32).collect());
    let mut queue = std::collections::VecDeque::from([g.identity()]);
    while let Some(x) = queue.pop_front() {
        let px = perms[x as usize].clone().unwrap();
        for l in 0..g.num_letters() as Letter {
            let y = g.mul(x, g.letter_elem(l));
            let py: Vec<u32> = px.iter().map(|&u| letter_perms[l as usize][u as usize]).collect();
            match &perms[y as usize] {
                None => {
                    perms[y as usize] = Some(py);
                    queue.push_back(y);
                }
                Some(existing) if *existing != py => {
                    return Err(Error::NotHomomorphism(format!(
                        "element {y} receives two different permutations"
                    )));
                }
                Some(_) => {}
            }
        }
    }
    let perms: Vec<Vec<u32>> = perms.into_iter().map(|p| p.expect("generators span the group")).collect();
    // x·(ab) = (x·a)·b for all a, b.
    for a in 0..order as u32 {
        for b in 0..order as u32 {
            let ab = g.mul(a, b) as usize;
            for u in 0..units {
                let lhs = perms[ab][u];
                let rhs = perms[b as usize][perms[a as usize][u] as usize];
                if lhs != rhs {
                    return Err(Error::NotHomomorphism(format!("fails on ({a}, {b}) at unit {u}")));
                }
            }
        }
    }
    Ok(perms)
}

/// Probability weights on the units, invariant under the action.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasureContext {
    weights: Vec<f64>,
}

impl MeasureContext {
    pub fn uniform(model: &GroupoidModel) -> Self {
        MeasureContext {
            weights: vec![1.0 / model.units() as f64; model.units()],
        }
    }

    /// Validates normalization (to 1e-12) and exact invariance under every
    /// generator. Invariance makes `ν = ν⁻¹` and the modular function trivial.
    pub fn new(model: &GroupoidModel, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != model.units() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} units",
                weights.len(),
                model.units()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("weights sum to {total}, not 1")));
        }
        for l in 0..model.backend().num_letters() as Letter {
            let perm = model.letter_perm(l);
            for (u, &v) in perm.iter().enumerate() {
                if weights[v as usize] != weights[u] {
                    return Err(Error::InvalidParameter(format!(
                        "measure is not invariant: generator letter {l} moves unit {u} to {v}"
                    )));
                }
            }
        }
        Ok(MeasureContext { weights })
    }

    #[inline]
    pub fn weight(&self, u: UnitId) -> f64 {
        self.weights[u.index()]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}
