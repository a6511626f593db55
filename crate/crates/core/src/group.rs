//! Group backends: free groups with reduced-word arithmetic and finite groups
//! given by an explicit multiplication table.
//!
//! Letters encode the symmetric generating set: generator `i` is letter `2i`,
//! its formal inverse is letter `2i + 1`. Labels are `a, b, c, ...` for
//! generators and `A, B, C, ...` for their inverses.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type Letter = u8;

/// Largest finite group accepted; the associativity check is exhaustive.
pub const MAX_FINITE_ORDER: usize = 256;

#[inline]
pub fn inverse_letter(l: Letter) -> Letter {
    l ^ 1
}

pub fn letter_label(l: Letter) -> char {
    let base = (l / 2) as u8;
    if l % 2 == 0 {
        (b'a' + base) as char
    } else {
        (b'A' + base) as char
    }
}

pub fn parse_letter(c: char, generators: usize) -> Result<Letter> {
    let (idx, inv) = if c.is_ascii_lowercase() {
        (c as u8 - b'a', 0)
    } else if c.is_ascii_uppercase() {
        (c as u8 - b'A', 1)
    } else {
        return Err(Error::Parse(format!("invalid generator label {c:?}")));
    };
    if (idx as usize) >= generators {
        return Err(Error::Parse(format!(
            "label {c:?} names generator {idx}, only {generators} generators exist"
        )));
    }
    Ok(idx * 2 + inv)
}

/// A reduced word in a free group.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(SmallVec<[Letter; 16]>);

impl Word {
    pub fn identity() -> Self {
        Word(SmallVec::new())
    }

    /// Builds a word from raw letters, freely reducing as it goes.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut w = Word::identity();
        for l in letters {
            w.push_reduced(l);
        }
        w
    }

    #[inline]
    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    fn push_reduced(&mut self, l: Letter) {
        if self.0.last() == Some(&inverse_letter(l)) {
            self.0.pop();
        } else {
            self.0.push(l);
        }
    }

    pub fn mul(&self, other: &Word) -> Word {
        let a = &self.0;
        let b = &other.0;
        let mut cancel = 0;
        while cancel < a.len() && cancel < b.len() && a[a.len() - 1 - cancel] == inverse_letter(b[cancel]) {
            cancel += 1;
        }
        let mut out: SmallVec<[Letter; 16]> = SmallVec::with_capacity(a.len() + b.len() - 2 * cancel);
        out.extend_from_slice(&a[..a.len() - cancel]);
        out.extend_from_slice(&b[cancel..]);
        Word(out)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&l| inverse_letter(l)).collect())
    }

    pub fn label(&self) -> String {
        let mut s = String::with_capacity(self.0.len() * 2);
        for (i, &l) in self.0.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push(letter_label(l));
        }
        s
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            write!(f, "ε")
        } else {
            write!(f, "{}", self.label())
        }
    }
}

/// Group element in either backend.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum GroupElem {
    Word(Word),
    Id(u32),
}

/// Serialized description of a finite group.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FiniteGroupSpec {
    /// `table[a][b]` is the id of `a·b`.
    pub table: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<u32>,
    /// Element ids of the generators; the symmetric generating set adds their inverses.
    pub generators: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<u32>,
    inverse: Vec<u32>,
    identity: u32,
    generators: Vec<u32>,
    /// Cayley-graph distance from the identity.
    lengths: Vec<u32>,
    /// One geodesic word per element (BFS tree).
    geodesics: Vec<Vec<Letter>>,
    /// Element ids grouped by length, ascending id within each sphere.
    spheres: Vec<Vec<u32>>,
}

impl FiniteGroup {
    pub fn from_spec(spec: &FiniteGroupSpec) -> Result<Self> {
        let order = spec.table.len();
        if order == 0 {
            return Err(Error::GroupAxiom("empty table".into()));
        }
        if order > MAX_FINITE_ORDER {
            return Err(Error::InvalidParameter(format!(
                "finite group of order {order} exceeds the supported maximum {MAX_FINITE_ORDER}"
            )));
        }
        let mut table = Vec::with_capacity(order * order);
        for (a, row) in spec.table.iter().enumerate() {
            if row.len() != order {
                return Err(Error::GroupAxiom(format!("row {a} has length {}, expected {order}", row.len())));
            }
            for &c in row {
                if c as usize >= order {
                    return Err(Error::GroupAxiom(format!("entry {c} out of range in row {a}")));
                }
            }
            table.extend_from_slice(row);
        }
        let mul = |a: u32, b: u32| table[a as usize * order + b as usize];

        let identity = match spec.identity {
            Some(e) => e,
            None => (0..order as u32)
                .find(|&e| (0..order as u32).all(|x| mul(e, x) == x && mul(x, e) == x))
                .ok_or_else(|| Error::GroupAxiom("no identity element".into()))?,
        };
        if identity as usize >= order {
            return Err(Error::GroupAxiom(format!("identity {identity} out of range")));
        }
        for x in 0..order as u32 {
            if mul(identity, x) != x || mul(x, identity) != x {
                return Err(Error::GroupAxiom(format!("{identity} is not a two-sided identity (fails at {x})")));
            }
        }

        let inverse = match &spec.inverse {
            Some(inv) => {
                if inv.len() != order {
                    return Err(Error::GroupAxiom("inverse table has wrong length".into()));
                }
                inv.clone()
            }
            None => (0..order as u32)
                .map(|x| {
                    (0..order as u32)
                        .find(|&y| mul(x, y) == identity)
                        .ok_or_else(|| Error::GroupAxiom(format!("element {x} has no inverse")))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        for x in 0..order as u32 {
            let y = inverse[x as usize];
            if y as usize >= order || mul(x, y) != identity || mul(y, x) != identity {
                return Err(Error::GroupAxiom(format!("inverse table inconsistent at {x}")));
            }
        }
        for a in 0..order as u32 {
            for b in 0..order as u32 {
                let ab = mul(a, b);
                for c in 0..order as u32 {
                    if mul(ab, c) != mul(a, mul(b, c)) {
                        return Err(Error::GroupAxiom(format!("associativity fails on ({a}, {b}, {c})")));
                    }
                }
            }
        }
        for &g in &spec.generators {
            if g as usize >= order {
                return Err(Error::GroupAxiom(format!("generator {g} out of range")));
            }
        }
        if spec.generators.len() > 26 {
            return Err(Error::InvalidParameter("at most 26 generators are supported".into()));
        }

        let mut group = FiniteGroup {
            order,
            table,
            inverse,
            identity,
            generators: spec.generators.clone(),
            lengths: Vec::new(),
            geodesics: Vec::new(),
            spheres: Vec::new(),
        };
        group.build_cayley_bfs()?;
        Ok(group)
    }

    fn build_cayley_bfs(&mut self) -> Result<()> {
        let n = self.order;
        let mut lengths = vec![u32::MAX; n];
        let mut geodesics: Vec<Vec<Letter>> = vec![Vec::new(); n];
        let mut queue = VecDeque::new();
        lengths[self.identity as usize] = 0;
        queue.push_back(self.identity);
        while let Some(g) = queue.pop_front() {
            for l in 0..self.num_letters() as Letter {
                let h = self.mul(g, self.letter_elem(l));
                if lengths[h as usize] == u32::MAX {
                    lengths[h as usize] = lengths[g as usize] + 1;
                    let mut w = geodesics[g as usize].clone();
                    w.push(l);
                    geodesics[h as usize] = w;
                    queue.push_back(h);
                }
            }
        }
        if let Some(x) = lengths.iter().position(|&d| d == u32::MAX) {
            return Err(Error::GroupAxiom(format!("generators do not generate the group (element {x} unreachable)")));
        }
        let diameter = *lengths.iter().max().unwrap() as usize;
        let mut spheres = vec![Vec::new(); diameter + 1];
        for (x, &d) in lengths.iter().enumerate() {
            spheres[d as usize].push(x as u32);
        }
        self.lengths = lengths;
        self.geodesics = geodesics;
        self.spheres = spheres;
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> u32 {
        self.identity
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.table[a as usize * self.order + b as usize]
    }

    #[inline]
    pub fn inverse(&self, a: u32) -> u32 {
        self.inverse[a as usize]
    }

    pub fn num_letters(&self) -> usize {
        2 * self.generators.len()
    }

    #[inline]
    pub fn letter_elem(&self, l: Letter) -> u32 {
        let g = self.generators[(l / 2) as usize];
        if l % 2 == 0 {
            g
        } else {
            self.inverse(g)
        }
    }

    pub fn length(&self, a: u32) -> usize {
        self.lengths[a as usize] as usize
    }

    pub fn geodesic(&self, a: u32) -> &[Letter] {
        &self.geodesics[a as usize]
    }

    pub fn diameter(&self) -> usize {
        self.spheres.len() - 1
    }

    pub fn sphere(&self, k: usize) -> &[u32] {
        self.spheres.get(k).map(|s| s.as_slice()).unwrap_or(&[])
    }
}

/// The acting group Γ.
#[derive(Clone, Debug)]
pub enum GroupBackend {
    Free { rank: usize },
    Finite(FiniteGroup),
}

impl GroupBackend {
    pub fn free(rank: usize) -> Result<Self> {
        if rank == 0 || rank > 26 {
            return Err(Error::InvalidParameter(format!("free group rank {rank} not in 1..=26")));
        }
        Ok(GroupBackend::Free { rank })
    }

    /// Cyclic group Z_n with generator 1.
    pub fn cyclic(n: usize) -> Result<Self> {
        let table = (0..n)
            .map(|a| (0..n).map(|b| ((a + b) % n) as u32).collect())
            .collect();
        let spec = FiniteGroupSpec {
            table,
            inverse: None,
            identity: Some(0),
            generators: vec![if n > 1 { 1 } else { 0 }],
        };
        Ok(GroupBackend::Finite(FiniteGroup::from_spec(&spec)?))
    }

    pub fn num_generators(&self) -> usize {
        match self {
            GroupBackend::Free { rank } => *rank,
            GroupBackend::Finite(g) => g.generators.len(),
        }
    }

    pub fn num_letters(&self) -> usize {
        2 * self.num_generators()
    }

    pub fn is_free(&self) -> bool {
        matches!(self, GroupBackend::Free { .. })
    }

    pub fn identity(&self) -> GroupElem {
        match self {
            GroupBackend::Free { .. } => GroupElem::Word(Word::identity()),
            GroupBackend::Finite(g) => GroupElem::Id(g.identity),
        }
    }

    pub fn letter(&self, l: Letter) -> GroupElem {
        match self {
            GroupBackend::Free { .. } => GroupElem::Word(Word::from_letters([l])),
            GroupBackend::Finite(g) => GroupElem::Id(g.letter_elem(l)),
        }
    }

    pub fn is_identity(&self, a: &GroupElem) -> bool {
        match (self, a) {
            (_, GroupElem::Word(w)) => w.is_empty(),
            (GroupBackend::Finite(g), GroupElem::Id(x)) => *x == g.identity,
            _ => false,
        }
    }

    pub fn mul(&self, a: &GroupElem, b: &GroupElem) -> GroupElem {
        match (self, a, b) {
            (GroupBackend::Free { .. }, GroupElem::Word(x), GroupElem::Word(y)) => GroupElem::Word(x.mul(y)),
            (GroupBackend::Finite(g), GroupElem::Id(x), GroupElem::Id(y)) => GroupElem::Id(g.mul(*x, *y)),
            _ => panic!("group element does not belong to this backend"),
        }
    }

    pub fn inverse(&self, a: &GroupElem) -> GroupElem {
        match (self, a) {
            (GroupBackend::Free { .. }, GroupElem::Word(x)) => GroupElem::Word(x.inverse()),
            (GroupBackend::Finite(g), GroupElem::Id(x)) => GroupElem::Id(g.inverse(*x)),
            _ => panic!("group element does not belong to this backend"),
        }
    }

    /// Word length with respect to the symmetric generating set.
    pub fn length(&self, a: &GroupElem) -> usize {
        match (self, a) {
            (_, GroupElem::Word(w)) => w.len(),
            (GroupBackend::Finite(g), GroupElem::Id(x)) => g.length(*x),
            _ => panic!("group element does not belong to this backend"),
        }
    }

    /// Size of the length-`k` sphere, from the closed form (free) or the
    /// BFS table (finite). Saturates at `u128::MAX`.
    pub fn sphere_size(&self, k: usize) -> u128 {
        match self {
            GroupBackend::Free { rank } => {
                if k == 0 {
                    return 1;
                }
                let d = 2 * *rank as u128;
                let mut s = d;
                for _ in 1..k {
                    s = s.saturating_mul(d - 1);
                }
                s
            }
            GroupBackend::Finite(g) => g.sphere(k).len() as u128,
        }
    }

    pub fn ball_size(&self, k: usize) -> u128 {
        (0..=k).fold(0u128, |acc, j| acc.saturating_add(self.sphere_size(j)))
    }

    /// Sphere size as a float, valid far beyond the enumeration range.
    pub fn sphere_size_f64(&self, k: usize) -> f64 {
        match self {
            GroupBackend::Free { rank } => {
                if k == 0 {
                    1.0
                } else {
                    let d = 2.0 * *rank as f64;
                    d * (d - 1.0).powi(k as i32 - 1)
                }
            }
            GroupBackend::Finite(g) => g.sphere(k).len() as f64,
        }
    }

    /// Elements of length exactly `k` in deterministic order: shortlex on
    /// letter codes for free groups, ascending id for finite groups.
    pub fn sphere(&self, k: usize) -> Vec<GroupElem> {
        match self {
            GroupBackend::Free { rank } => free_sphere(*rank, k).into_iter().map(GroupElem::Word).collect(),
            GroupBackend::Finite(g) => g.sphere(k).iter().map(|&x| GroupElem::Id(x)).collect(),
        }
    }

    pub fn parse(&self, text: &str) -> Result<GroupElem> {
        let mut letters = Vec::new();
        for tok in text.split_whitespace() {
            for c in tok.chars() {
                letters.push(parse_letter(c, self.num_generators())?);
            }
        }
        Ok(match self {
            GroupBackend::Free { .. } => GroupElem::Word(Word::from_letters(letters)),
            GroupBackend::Finite(g) => GroupElem::Id(
                letters
                    .into_iter()
                    .fold(g.identity, |acc, l| g.mul(acc, g.letter_elem(l))),
            ),
        })
    }

    /// Label text: the reduced word, or a geodesic word for finite groups.
    pub fn label(&self, a: &GroupElem) -> String {
        match (self, a) {
            (_, GroupElem::Word(w)) => w.label(),
            (GroupBackend::Finite(g), GroupElem::Id(x)) => Word(g.geodesic(*x).iter().copied().collect()).label(),
            _ => panic!("group element does not belong to this backend"),
        }
    }
}

/// All reduced words of length `k` over `rank` generators, in lexicographic
/// order of letter codes.
pub fn free_sphere(rank: usize, k: usize) -> Vec<Word> {
    let letters = 2 * rank as Letter;
    let mut level = vec![Word::identity()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(level.len() * (letters as usize).max(1));
        for w in &level {
            let forbidden = w.0.last().map(|&l| inverse_letter(l));
            for l in 0..letters {
                if Some(l) != forbidden {
                    let mut v = w.clone();
                    v.0.push(l);
                    next.push(v);
                }
            }
        }
        level = next;
    }
    level
}
