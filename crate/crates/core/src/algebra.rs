//! The convolution *-algebra `C_c(G)` of finitely supported functions.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElem, Word};
use crate::kernels::Kernel;
use crate::model::{GroupoidElement, GroupoidModel, MeasureContext, UnitId};

/// Near-zero threshold used only by [`CcFunction::prune`].
pub const PRUNE_EPS: f64 = 1e-15;

/// A finitely supported complex function on the arrows of one model.
#[derive(Clone, Debug)]
pub struct CcFunction {
    model: Arc<GroupoidModel>,
    terms: BTreeMap<GroupoidElement, Complex64>,
}

/// One entry of the JSON form: `{"unit": 0, "word": "a b A", "re": 1.0, "im": 0.0}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermRecord {
    pub unit: u32,
    pub word: String,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// `|f|_p` together with its exponent.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct LpValue {
    pub value: f64,
    pub p: f64,
}

impl CcFunction {
    pub fn zero(model: &Arc<GroupoidModel>) -> Self {
        CcFunction {
            model: Arc::clone(model),
            terms: BTreeMap::new(),
        }
    }

    pub fn delta(model: &Arc<GroupoidModel>, g: GroupoidElement) -> Self {
        let mut f = Self::zero(model);
        f.set(g, Complex64::new(1.0, 0.0));
        f
    }

    /// Sums repeated elements; exact zeros are dropped.
    pub fn from_terms<I>(model: &Arc<GroupoidModel>, terms: I) -> Self
    where
        I: IntoIterator<Item = (GroupoidElement, Complex64)>,
    {
        let mut f = Self::zero(model);
        for (g, v) in terms {
            f.add_at(g, v);
        }
        f
    }

    /// Indicator of a set of arrows.
    pub fn indicator<I>(model: &Arc<GroupoidModel>, elems: I) -> Self
    where
        I: IntoIterator<Item = GroupoidElement>,
    {
        Self::from_terms(model, elems.into_iter().map(|g| (g, Complex64::new(1.0, 0.0))))
    }

    /// `χ_{G^{(0)}}`, the unit of the algebra.
    pub fn unit_indicator(model: &Arc<GroupoidModel>) -> Self {
        Self::indicator(model, model.unit_ids().map(|u| model.unit(u)))
    }

    /// `χ_k`: the indicator of `W_k` over every unit.
    pub fn sphere_indicator(model: &Arc<GroupoidModel>, k: usize) -> Result<Self> {
        let mut elems = Vec::new();
        for u in model.unit_ids() {
            elems.extend(model.enumerate_sphere(u, k)?);
        }
        Ok(Self::indicator(model, elems))
    }

    pub fn model(&self) -> &Arc<GroupoidModel> {
        &self.model
    }

    pub fn get(&self, g: &GroupoidElement) -> Complex64 {
        self.terms.get(g).copied().unwrap_or_default()
    }

    /// Sets a coefficient; assigning exactly zero removes it.
    pub fn set(&mut self, g: GroupoidElement, v: Complex64) {
        if v == Complex64::new(0.0, 0.0) {
            self.terms.remove(&g);
        } else {
            self.terms.insert(g, v);
        }
    }

    fn add_at(&mut self, g: GroupoidElement, v: Complex64) {
        let nv = self.get(&g) + v;
        self.set(g, nv);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupoidElement, &Complex64)> {
        self.terms.iter()
    }

    /// Terms with range unit `u`, i.e. the restriction to `G^u`.
    pub fn fiber(&self, u: UnitId) -> impl Iterator<Item = (&GroupoidElement, &Complex64)> {
        // (u, ε-word) sorts before every arrow with range u in either backend.
        let start = GroupoidElement::new(u, GroupElem::Word(Word::identity()));
        self.terms
            .range(start..)
            .take_while(move |(g, _)| g.range() == u)
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest word length in the support (0 for the zero function).
    pub fn max_length(&self) -> usize {
        self.terms.keys().map(|g| self.model.length(g)).max().unwrap_or(0)
    }

    pub fn sup_abs(&self) -> f64 {
        self.terms.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn same_model(&self, other: &CcFunction) -> Result<()> {
        if Arc::ptr_eq(&self.model, &other.model) || self.model.digest() == other.model.digest() {
            Ok(())
        } else {
            Err(Error::MixedModels)
        }
    }

    pub fn scale(&self, c: Complex64) -> CcFunction {
        CcFunction::from_terms(&self.model, self.terms.iter().map(|(g, v)| (g.clone(), v * c)))
    }

    pub fn add(&self, other: &CcFunction) -> Result<CcFunction> {
        self.same_model(other)?;
        let mut out = self.clone();
        for (g, v) in &other.terms {
            out.add_at(g.clone(), *v);
        }
        Ok(out)
    }

    /// Pointwise product with a function of the arrow.
    pub fn pointwise<F: Fn(&GroupoidElement) -> Complex64>(&self, weight: F) -> CcFunction {
        CcFunction::from_terms(&self.model, self.terms.iter().map(|(g, v)| (g.clone(), v * weight(g))))
    }

    /// Restriction to arrows of length `m` (multiplication by `χ_m`).
    pub fn restrict_length(&self, m: usize) -> CcFunction {
        CcFunction {
            model: Arc::clone(&self.model),
            terms: self
                .terms
                .iter()
                .filter(|(g, _)| self.model.length(g) == m)
                .map(|(g, v)| (g.clone(), *v))
                .collect(),
        }
    }

    /// `(f ∗ g)(x) = Σ f(a) g(b)` over factorizations `x = ab`.
    pub fn convolve(&self, other: &CcFunction) -> Result<CcFunction> {
        self.same_model(other)?;
        let model = &self.model;
        // Composability index: terms of `other` keyed by range unit.
        let mut by_range: HashMap<UnitId, Vec<(&GroupoidElement, &Complex64)>> = HashMap::new();
        for (b, v) in &other.terms {
            by_range.entry(b.range()).or_default().push((b, v));
        }
        let mut acc: HashMap<GroupoidElement, Complex64> = HashMap::new();
        for (a, fa) in &self.terms {
            let s = model.source(a);
            if let Some(bs) = by_range.get(&s) {
                for (b, gb) in bs {
                    *acc.entry(model.compose_unchecked(a, b)).or_default() += fa * *gb;
                }
            }
        }
        Ok(CcFunction {
            model: Arc::clone(model),
            terms: acc
                .into_iter()
                .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
                .collect(),
        })
    }

    /// `f*(x) = conj f(x⁻¹)`.
    pub fn involution(&self) -> CcFunction {
        CcFunction {
            model: Arc::clone(&self.model),
            terms: self
                .terms
                .iter()
                .map(|(g, v)| (self.model.inverse(g), v.conj()))
                .collect(),
        }
    }

    /// Drops coefficients with modulus below [`PRUNE_EPS`].
    pub fn prune(&self) -> CcFunction {
        CcFunction {
            model: Arc::clone(&self.model),
            terms: self
                .terms
                .iter()
                .filter(|(_, v)| v.norm() >= PRUNE_EPS)
                .map(|(g, v)| (g.clone(), *v))
                .collect(),
        }
    }

    /// `max(sup_u Σ_{G^u} |f|, sup_u Σ_{G_u} |f|)`.
    pub fn i_norm(&self) -> f64 {
        let n = self.model.units();
        let mut by_range = vec![0.0; n];
        let mut by_source = vec![0.0; n];
        for (g, v) in &self.terms {
            by_range[g.range().index()] += v.norm();
            by_source[self.model.source(g).index()] += v.norm();
        }
        by_range
            .into_iter()
            .chain(by_source)
            .fold(0.0, f64::max)
    }

    /// Per-unit `Σ_{x ∈ G^u} |f(x)|^p`.
    fn fiber_power_sums(&self, p: f64) -> Vec<f64> {
        let mut sums = vec![0.0; self.model.units()];
        for (g, v) in &self.terms {
            sums[g.range().index()] += v.norm().powf(p);
        }
        sums
    }

    /// `|f|_p = (∫ Σ_{x∈G^u} |f(x)|^p dμ(u))^{1/p}`.
    pub fn lp_norm(&self, p: f64, mu: &MeasureContext) -> Result<LpValue> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p = {p} must lie in [1, ∞)")));
        }
        let total: f64 = self
            .fiber_power_sums(p)
            .iter()
            .enumerate()
            .map(|(u, s)| mu.weight(UnitId(u as u32)) * s)
            .sum();
        Ok(LpValue {
            value: total.powf(1.0 / p),
            p,
        })
    }

    /// ℓ¹ norm of the restriction to `G^u`.
    pub fn l1_fiber(&self, u: UnitId) -> f64 {
        self.fiber(u).map(|(_, v)| v.norm()).sum()
    }

    /// `ω_φ(f) = ∫ Σ_{x∈G^u} f(x) φ(x) dμ(u)`.
    pub fn omega_pairing(&self, phi: &Kernel, mu: &MeasureContext) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for (g, v) in &self.terms {
            total += mu.weight(g.range()) * v * phi.eval(&self.model, g)?;
        }
        Ok(total)
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(g, v)| TermRecord {
                unit: g.range().0,
                word: self.model.label(g),
                re: v.re,
                im: v.im,
            })
            .collect()
    }

    pub fn from_records(model: &Arc<GroupoidModel>, records: &[TermRecord]) -> Result<CcFunction> {
        let mut terms = Vec::with_capacity(records.len());
        for r in records {
            terms.push((model.parse_element(UnitId(r.unit), &r.word)?, Complex64::new(r.re, r.im)));
        }
        Ok(CcFunction::from_terms(model, terms))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_records())?)
    }

    pub fn from_json(model: &Arc<GroupoidModel>, text: &str) -> Result<CcFunction> {
        let records: Vec<TermRecord> = serde_json::from_str(text)?;
        Self::from_records(model, &records)
    }

    /// Largest coefficient-wise distance to another function.
    pub fn max_abs_diff(&self, other: &CcFunction) -> f64 {
        let mut d: f64 = 0.0;
        for (g, v) in &self.terms {
            d = d.max((v - other.get(g)).norm());
        }
        for (g, v) in &other.terms {
            if !self.terms.contains_key(g) {
                d = d.max(v.norm());
            }
        }
        d
    }
}
