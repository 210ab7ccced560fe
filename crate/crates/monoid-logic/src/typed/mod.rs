//! Typed monoids: a base monoid, a Boolean algebra of types over it, and a
//! finite set of units. Finite typed monoids are fully concrete; two infinite
//! bases are supported symbolically (the additive integers with the positive
//! type, the additive naturals with the square type), with membership decided
//! by predicate rather than by a materialized algebra.

mod algebra;
mod block;

pub use algebra::{generated_algebra, TypeAlgebra, DEFAULT_ALGEBRA_CAP};
pub use block::{block_product, full_block_product, BlockElem, BlockProduct, DEFAULT_CARRIER_CAP};

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::monoids::{FiniteMonoid, LetterMap, MonoidEnv, MonoidError};
use crate::regular::{dfa_from_recognizer, equivalent, syntactic_monoid, Dfa, DfaError};
use crate::words::{index_to_letter, words_up_to};

pub const DEFAULT_SEARCH_BUDGET: u64 = 2_000_000;

#[derive(Debug, Error)]
pub enum TypedError {
    #[error("type algebra has {atoms} atoms; member count exceeds cap {cap}")]
    AlgebraTooLarge { atoms: usize, cap: u128 },
    #[error("operation requires a finite-concrete typed monoid")]
    SymbolicUnsupported,
    #[error("search exceeded its budget of {0} steps")]
    SearchBudgetExceeded(u64),
    #[error("block product carrier exceeded the cap of {0} elements")]
    CarrierTooLarge(usize),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("invalid typed monoid syntax: {0}")]
    Parse(String),
    #[error(transparent)]
    Monoid(#[from] MonoidError),
    #[error(transparent)]
    Dfa(#[from] DfaError),
}

/// A finite-concrete typed monoid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTyped {
    pub name: String,
    pub base: FiniteMonoid,
    pub types: TypeAlgebra,
    pub units: BTreeSet<usize>,
}

impl FiniteTyped {
    pub fn new(
        name: &str,
        base: FiniteMonoid,
        types: TypeAlgebra,
        units: BTreeSet<usize>,
    ) -> Result<Self, TypedError> {
        assert_eq!(types.base_size(), base.size(), "types must cover the base");
        if let Some(&u) = units.iter().find(|&&u| u >= base.size()) {
            return Err(TypedError::UnknownElement(format!("unit index {u}")));
        }
        Ok(FiniteTyped {
            name: name.to_string(),
            base,
            types,
            units,
        })
    }

    /// Base with only the trivial types and no units.
    pub fn bare(base: FiniteMonoid) -> Self {
        let types = TypeAlgebra::trivial(base.size());
        FiniteTyped {
            name: base.name().to_string(),
            base,
            types,
            units: BTreeSet::new(),
        }
    }
}

/// The two symbolic bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolicBase {
    /// Additive integers, type generated by the positives, units +1 and -1.
    Integers,
    /// Additive naturals, type generated by the positive squares, units 0
    /// and 1.
    Naturals,
}

impl SymbolicBase {
    pub fn unit_values(&self) -> &'static [i64] {
        match self {
            SymbolicBase::Integers => &[1, -1],
            SymbolicBase::Naturals => &[0, 1],
        }
    }

    /// Membership in the distinguished (non-trivial) type.
    pub fn in_type(&self, value: i64) -> bool {
        match self {
            SymbolicBase::Integers => value > 0,
            SymbolicBase::Naturals => is_positive_square(value),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SymbolicBase::Integers => "Z",
            SymbolicBase::Naturals => "N",
        }
    }
}

fn is_positive_square(value: i64) -> bool {
    if value <= 0 {
        return false;
    }
    let r = (value as f64).sqrt().round() as i64;
    r * r == value
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypedMonoid {
    Finite(FiniteTyped),
    Symbolic(SymbolicBase),
}

impl TypedMonoid {
    pub fn as_finite(&self) -> Result<&FiniteTyped, TypedError> {
        match self {
            TypedMonoid::Finite(ft) => Ok(ft),
            TypedMonoid::Symbolic(_) => Err(TypedError::SymbolicUnsupported),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            TypedMonoid::Finite(ft) => &ft.name,
            TypedMonoid::Symbolic(s) => s.name(),
        }
    }
}

/// `(Z, Z+, {1, -1})`.
pub fn typed_integers() -> TypedMonoid {
    TypedMonoid::Symbolic(SymbolicBase::Integers)
}

/// `(N, squares, {0, 1})`.
pub fn typed_naturals() -> TypedMonoid {
    TypedMonoid::Symbolic(SymbolicBase::Naturals)
}

/// The symmetric group on five points with the full powerset of types and
/// every element a unit.
pub fn s5_powerset() -> FiniteTyped {
    let base = crate::monoids::symmetric(5);
    let size = base.size();
    FiniteTyped {
        name: "S5_full".to_string(),
        base,
        types: TypeAlgebra::powerset(size),
        units: (0..size).collect(),
    }
}

/// An explicit typed monoid homomorphism: an element map, a map of type
/// members given as (source, image) pairs, and a unit map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedHom {
    pub elem_map: Vec<usize>,
    pub type_map: Vec<(BTreeSet<usize>, BTreeSet<usize>)>,
    pub unit_map: BTreeMap<usize, usize>,
}

impl TypedHom {
    /// The identity homomorphism of a finite typed monoid (with types
    /// materialized, so only usable under the cap).
    pub fn identity(t: &FiniteTyped) -> Result<Self, TypedError> {
        let type_map = t
            .types
            .members(DEFAULT_ALGEBRA_CAP)?
            .into_iter()
            .map(|m| (m.clone(), m))
            .collect();
        Ok(TypedHom {
            elem_map: (0..t.base.size()).collect(),
            type_map,
            unit_map: t.units.iter().map(|&u| (u, u)).collect(),
        })
    }
}

fn image_of(elem_map: &[usize], set: &BTreeSet<usize>) -> BTreeSet<usize> {
    set.iter().map(|&e| elem_map[e]).collect()
}

/// Whether `h` is a valid typed homomorphism from `src` to `dst`: the element
/// map is a monoid homomorphism, the type map is a Boolean-algebra
/// homomorphism defined on all of `src`'s types, every type satisfies
/// `h1(A) = h2(A) ∩ h1(S)`, and units map to units compatibly.
pub fn hom_valid(h: &TypedHom, src: &FiniteTyped, dst: &FiniteTyped) -> Result<bool, TypedError> {
    let (s, t) = (src.base.size(), dst.base.size());
    if h.elem_map.len() != s || h.elem_map.iter().any(|&v| v >= t) {
        return Ok(false);
    }
    if h.elem_map[src.base.identity()] != dst.base.identity() {
        return Ok(false);
    }
    for a in 0..s {
        for b in 0..s {
            if h.elem_map[src.base.op(a, b)] != dst.base.op(h.elem_map[a], h.elem_map[b]) {
                return Ok(false);
            }
        }
    }

    let src_members = src.types.members(DEFAULT_ALGEBRA_CAP)?;
    let lookup: BTreeMap<&BTreeSet<usize>, &BTreeSet<usize>> =
        h.type_map.iter().map(|(a, b)| (a, b)).collect();
    if lookup.len() != h.type_map.len() || src_members.len() != h.type_map.len() {
        return Ok(false);
    }
    for m in &src_members {
        let Some(img) = lookup.get(m) else {
            return Ok(false);
        };
        if !dst.types.contains(img) {
            return Ok(false);
        }
    }
    let get = |m: &BTreeSet<usize>| *lookup.get(m).unwrap();
    let full_src: BTreeSet<usize> = (0..s).collect();
    let full_dst: BTreeSet<usize> = (0..t).collect();
    if !get(&BTreeSet::new()).is_empty() || get(&full_src) != &full_dst {
        return Ok(false);
    }
    for a in &src_members {
        for b in &src_members {
            let union: BTreeSet<usize> = a.union(b).copied().collect();
            let inter: BTreeSet<usize> = a.intersection(b).copied().collect();
            let img_union: BTreeSet<usize> = get(a).union(get(b)).copied().collect();
            let img_inter: BTreeSet<usize> = get(a).intersection(get(b)).copied().collect();
            if get(&union) != &img_union || get(&inter) != &img_inter {
                return Ok(false);
            }
        }
        let comp = src.types.complement(a);
        if get(&comp) != &dst.types.complement(get(a)) {
            return Ok(false);
        }
    }

    // Condition (i): h1(A) = h2(A) ∩ h1(S).
    let h1_s = image_of(&h.elem_map, &full_src);
    for a in &src_members {
        let h1_a = image_of(&h.elem_map, a);
        let rhs: BTreeSet<usize> = get(a).intersection(&h1_s).copied().collect();
        if h1_a != rhs {
            return Ok(false);
        }
    }

    // Condition (ii): units map to units through both maps consistently.
    for &u in &src.units {
        match h.unit_map.get(&u) {
            Some(&v) if dst.units.contains(&v) && h.elem_map[u] == v => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Candidate images ordered with the same-named element first; a cheap
/// heuristic that finds identity-like witnesses immediately.
fn ordered_candidates(pool: &[usize], pool_monoid: &FiniteMonoid, name: &str) -> Vec<usize> {
    let mut out = Vec::with_capacity(pool.len());
    for &cand in pool {
        if pool_monoid.element_name(cand) == name {
            out.push(cand);
        }
    }
    for &cand in pool {
        if pool_monoid.element_name(cand) != name {
            out.push(cand);
        }
    }
    out
}

struct DividesSearch<'a> {
    t1: &'a FiniteTyped,
    t2: &'a FiniteTyped,
    budget: u64,
}

impl DividesSearch<'_> {
    /// Checks that the chosen generator images extend to a homomorphism on
    /// the generated submonoid and that every atom of `t2` meets the
    /// submonoid inside a single preimage atom of `t1`.
    fn consistent(&mut self, pairs: &[(usize, usize)]) -> Result<bool, TypedError> {
        if self.budget == 0 {
            return Err(TypedError::SearchBudgetExceeded(DEFAULT_SEARCH_BUDGET));
        }
        self.budget -= 1;
        let size2 = self.t2.base.size();
        let mut image: Vec<Option<usize>> = vec![None; size2];
        image[self.t2.base.identity()] = Some(self.t1.base.identity());
        for &(s, m) in pairs {
            match image[s] {
                Some(existing) if existing != m => return Ok(false),
                _ => image[s] = Some(m),
            }
        }
        let mut queue = VecDeque::from([self.t2.base.identity()]);
        let mut seen = vec![false; size2];
        seen[self.t2.base.identity()] = true;
        while let Some(x) = queue.pop_front() {
            let mx = image[x].unwrap();
            for &(g, gm) in pairs {
                let y = self.t2.base.op(x, g);
                let my = self.t1.base.op(mx, gm);
                match image[y] {
                    Some(existing) if existing != my => return Ok(false),
                    _ => image[y] = Some(my),
                }
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        // Atom purity over the generated submonoid.
        let mut atom_image: Vec<Option<usize>> = vec![None; self.t2.types.atom_count()];
        for s in 0..size2 {
            if !seen[s] {
                continue;
            }
            let a2 = self.t2.types.atom_of(s);
            let a1 = self.t1.types.atom_of(image[s].unwrap());
            match atom_image[a2] {
                Some(existing) if existing != a1 => return Ok(false),
                _ => atom_image[a2] = Some(a1),
            }
        }
        Ok(true)
    }

    fn dfs(&mut self, slot: usize, pairs: &mut Vec<(usize, usize)>) -> Result<bool, TypedError> {
        if !self.consistent(pairs)? {
            return Ok(false);
        }
        let size1 = self.t1.base.size();
        let units1: Vec<usize> = self.t1.units.iter().copied().collect();
        if slot == size1 + units1.len() {
            return Ok(true);
        }
        let (target_image, pool): (usize, Vec<usize>) = if slot < size1 {
            (slot, (0..self.t2.base.size()).collect())
        } else {
            (
                units1[slot - size1],
                self.t2.units.iter().copied().collect(),
            )
        };
        let name = self.t1.base.element_name(target_image).to_string();
        for cand in ordered_candidates(&pool, &self.t2.base, &name) {
            pairs.push((cand, target_image));
            if self.dfs(slot + 1, pairs)? {
                return Ok(true);
            }
            pairs.pop();
        }
        Ok(false)
    }
}

/// Whether `t1` divides `t2`: some typed submonoid of `t2` admits a
/// surjective typed homomorphism onto `t1`. The search chooses, for every
/// element of `t1`, a preimage in `t2` (so surjectivity is built in) and for
/// every unit of `t1` a unit preimage, pruning assignments whose generated
/// submonoid is inconsistent.
pub fn divides(t1: &FiniteTyped, t2: &FiniteTyped, budget: u64) -> Result<bool, TypedError> {
    if t1.base.size() > t2.base.size() {
        return Ok(false);
    }
    let mut search = DividesSearch { t1, t2, budget };
    search.dfs(0, &mut Vec::new())
}

/// Whether there is a surjective typed homomorphism from all of `t1` onto
/// `t2` (making `t1` a trivial extension of `t2`).
pub fn trivial_extension(t1: &FiniteTyped, t2: &FiniteTyped, budget: u64) -> Result<bool, TypedError> {
    if t1.base.size() < t2.base.size() {
        return Ok(false);
    }
    // A small generating sequence for t1's base.
    let mut gens: Vec<usize> = Vec::new();
    let mut closure = t1.base.generated_by(&gens);
    for e in 0..t1.base.size() {
        if !closure.contains(&e) {
            gens.push(e);
            closure = t1.base.generated_by(&gens);
        }
    }
    let mut budget = budget;
    surjection_dfs(t1, t2, &gens, &mut Vec::new(), &mut budget)
}

fn surjection_dfs(
    t1: &FiniteTyped,
    t2: &FiniteTyped,
    gens: &[usize],
    images: &mut Vec<usize>,
    budget: &mut u64,
) -> Result<bool, TypedError> {
    if images.len() < gens.len() {
        let name = t1.base.element_name(gens[images.len()]).to_string();
        let pool: Vec<usize> = (0..t2.base.size()).collect();
        for cand in ordered_candidates(&pool, &t2.base, &name) {
            images.push(cand);
            if surjection_dfs(t1, t2, gens, images, budget)? {
                return Ok(true);
            }
            images.pop();
        }
        return Ok(false);
    }
    if *budget == 0 {
        return Err(TypedError::SearchBudgetExceeded(DEFAULT_SEARCH_BUDGET));
    }
    *budget -= 1;

    // Extend generator images to all of t1 by closure; reject conflicts.
    let size1 = t1.base.size();
    let mut h: Vec<Option<usize>> = vec![None; size1];
    h[t1.base.identity()] = Some(t2.base.identity());
    let mut queue = VecDeque::from([t1.base.identity()]);
    while let Some(x) = queue.pop_front() {
        let hx = h[x].unwrap();
        for (i, &g) in gens.iter().enumerate() {
            let y = t1.base.op(x, g);
            let hy = t2.base.op(hx, images[i]);
            match h[y] {
                Some(existing) if existing != hy => return Ok(false),
                Some(_) => {}
                None => {
                    h[y] = Some(hy);
                    queue.push_back(y);
                }
            }
        }
    }
    let h: Vec<usize> = h.into_iter().map(Option::unwrap).collect();

    // Surjective on elements.
    let image_set: BTreeSet<usize> = h.iter().copied().collect();
    if image_set.len() != t2.base.size() {
        return Ok(false);
    }
    // Every type generator must be fiber-saturated and land in t2's algebra.
    for gen in t1.types.generators() {
        for a in 0..size1 {
            for b in 0..size1 {
                if h[a] == h[b] && gen.contains(&a) != gen.contains(&b) {
                    return Ok(false);
                }
            }
        }
        if !t2.types.contains(&image_of(&h, gen)) {
            return Ok(false);
        }
    }
    // The image algebra must be all of t2's algebra (surjective type map):
    // compare atom partitions.
    let image_algebra = TypeAlgebra::generated(
        t2.base.size(),
        t1.types.generators().iter().map(|g| image_of(&h, g)).collect(),
    );
    let image_atoms: BTreeSet<&BTreeSet<usize>> = image_algebra.atoms().iter().collect();
    let t2_atoms: BTreeSet<&BTreeSet<usize>> = t2.types.atoms().iter().collect();
    if image_atoms != t2_atoms {
        return Ok(false);
    }
    // Units onto units.
    let unit_images: BTreeSet<usize> = t1.units.iter().map(|&u| h[u]).collect();
    if !unit_images.is_subset(&t2.units) || !t2.units.is_subset(&unit_images) {
        return Ok(false);
    }
    Ok(true)
}

/// The syntactic typed monoid of a DFA's language: base the syntactic
/// monoid, types generated by the image of the language, units the letter
/// images.
pub fn syntactic_typed_monoid(d: &Dfa) -> FiniteTyped {
    let r = syntactic_monoid(d);
    let size = r.monoid.size();
    let units: BTreeSet<usize> = match &r.letter_images {
        LetterMap::Explicit { images, .. } => images.values().copied().collect(),
        _ => unreachable!("syntactic letter images are explicit"),
    };
    FiniteTyped {
        name: format!("syn_typed_{}", d.name()),
        base: r.monoid,
        types: TypeAlgebra::generated(size, vec![r.accept_set]),
        units,
    }
}

fn context_classes(t: &FiniteTyped) -> Vec<usize> {
    let c = t.base.size();
    let mut signatures: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut class = vec![0usize; c];
    for s in 0..c {
        let mut sig = Vec::with_capacity(c * c);
        for x in 0..c {
            let xs = t.base.op(x, s);
            for y in 0..c {
                sig.push(t.types.atom_of(t.base.op(xs, y)));
            }
        }
        let fresh = signatures.len();
        class[s] = *signatures.entry(sig).or_insert(fresh);
    }
    class
}

/// Quotient by the coarsest typed congruence: elements are identified when
/// no context and no type distinguishes them.
pub fn minimal_reduced(t: &FiniteTyped) -> FiniteTyped {
    let class = context_classes(t);
    let count = class.iter().max().map_or(0, |&m| m + 1);
    // Representative per class: the least element, in class index order.
    let mut reps = vec![usize::MAX; count];
    for (e, &k) in class.iter().enumerate() {
        if reps[k] == usize::MAX {
            reps[k] = e;
        }
    }
    let names = reps
        .iter()
        .map(|&r| t.base.element_name(r).to_string())
        .collect();
    let table = (0..count)
        .map(|i| {
            (0..count)
                .map(|j| class[t.base.op(reps[i], reps[j])])
                .collect()
        })
        .collect();
    let base = FiniteMonoid::validate(&format!("{}_red", t.base.name()), names, table)
        .expect("quotient of a monoid is a monoid");
    let generators = t
        .types
        .generators()
        .iter()
        .map(|g| g.iter().map(|&e| class[e]).collect())
        .collect();
    FiniteTyped {
        name: format!("{}_red", t.name),
        base,
        types: TypeAlgebra::generated(count, generators),
        units: t.units.iter().map(|&u| class[u]).collect(),
    }
}

/// The structural test for being a syntactic typed monoid: already reduced,
/// generated by its units, and carrying four or two types.
pub fn is_syntactic_shape(t: &FiniteTyped) -> bool {
    let class = context_classes(t);
    let reduced = class.iter().collect::<BTreeSet<_>>().len() == t.base.size();
    let units: Vec<usize> = t.units.iter().copied().collect();
    let generated = t.base.generated_by(&units).len() == t.base.size();
    let type_count_ok = matches!(t.types.atom_count(), 1 | 2);
    reduced && generated && type_count_ok
}

/// Direct product of typed monoids: componentwise base, the algebra
/// generated by cylinders over both factors' generators, units pairwise.
pub fn direct_product(a: &FiniteTyped, b: &FiniteTyped) -> FiniteTyped {
    let (ca, cb) = (a.base.size(), b.base.size());
    let idx = |i: usize, j: usize| i * cb + j;
    let names = (0..ca)
        .flat_map(|i| {
            (0..cb).map(move |j| format!("{},{}", a.base.element_name(i), b.base.element_name(j)))
        })
        .collect();
    let mut table = vec![vec![0usize; ca * cb]; ca * cb];
    for i1 in 0..ca {
        for j1 in 0..cb {
            for i2 in 0..ca {
                for j2 in 0..cb {
                    table[idx(i1, j1)][idx(i2, j2)] = idx(a.base.op(i1, i2), b.base.op(j1, j2));
                }
            }
        }
    }
    let base = FiniteMonoid::validate(
        &format!("{}x{}", a.base.name(), b.base.name()),
        names,
        table,
    )
    .expect("product of monoids is a monoid");
    let mut generators: Vec<BTreeSet<usize>> = Vec::new();
    for g in a.types.generators() {
        generators.push(
            g.iter()
                .flat_map(|&i| (0..cb).map(move |j| idx(i, j)))
                .collect(),
        );
    }
    for g in b.types.generators() {
        generators.push(
            (0..ca)
                .flat_map(|i| g.iter().map(move |&j| idx(i, j)))
                .collect(),
        );
    }
    let units = a
        .units
        .iter()
        .flat_map(|&i| b.units.iter().map(move |&j| idx(i, j)))
        .collect();
    FiniteTyped {
        name: format!("{}x{}", a.name, b.name),
        base,
        types: TypeAlgebra::generated(ca * cb, generators),
        units,
    }
}

/// Whether a finite typed monoid recognizes the DFA's language: some
/// assignment of letters to units and some type give exactly the language.
///
/// The search assigns letters one at a time; a partial assignment is pruned
/// when the product automaton over the assigned letters already forces one
/// monoid-element atom to contain both an accepting and a rejecting word
/// image (no type can then separate them). A full assignment is confirmed
/// exactly, by building the recognizer DFA and checking equivalence.
pub fn recognizes(t: &TypedMonoid, d: &Dfa) -> Result<bool, TypedError> {
    let ft = t.as_finite()?;
    let letters = 1usize << d.width();
    if ft.units.is_empty() {
        return Ok(false);
    }
    let units: Vec<usize> = ft.units.iter().copied().collect();
    let mut assignment: Vec<Option<usize>> = vec![None; letters];
    recognizes_dfs(ft, d, &units, &mut assignment, 0)
}

fn recognizes_dfs(
    t: &FiniteTyped,
    d: &Dfa,
    units: &[usize],
    assignment: &mut Vec<Option<usize>>,
    letter: usize,
) -> Result<bool, TypedError> {
    let Some((must_accept, must_reject)) = recognizes_consistent(t, d, assignment) else {
        return Ok(false);
    };
    if letter == assignment.len() {
        // Take the union of atoms that meet an accepting image.
        let mut accept_type: BTreeSet<usize> = BTreeSet::new();
        for atom in t.types.atoms() {
            if atom.iter().any(|e| must_accept.contains(e)) {
                accept_type.extend(atom.iter().copied());
            }
        }
        if accept_type.iter().any(|e| must_reject.contains(e)) {
            return Ok(false);
        }
        let mut images = BTreeMap::new();
        for (l, img) in assignment.iter().enumerate() {
            images.insert(index_to_letter(l, d.width()), img.unwrap());
        }
        let map = LetterMap::explicit(d.width(), images)?;
        let candidate = dfa_from_recognizer(&t.base, &map, &accept_type, d.width());
        return Ok(equivalent(&candidate, d)?);
    }
    for &u in units {
        assignment[letter] = Some(u);
        if recognizes_dfs(t, d, units, assignment, letter + 1)? {
            return Ok(true);
        }
    }
    assignment[letter] = None;
    Ok(false)
}

/// Joint reachability of (DFA state, monoid element) over the assigned
/// letters; `None` when some atom already mixes accepting and rejecting
/// images.
fn recognizes_consistent(
    t: &FiniteTyped,
    d: &Dfa,
    assignment: &[Option<usize>],
) -> Option<(BTreeSet<usize>, BTreeSet<usize>)> {
    let msize = t.base.size();
    let mut seen = vec![false; d.num_states() * msize];
    let mut queue = VecDeque::from([(d.start(), t.base.identity())]);
    seen[d.start() * msize + t.base.identity()] = true;
    let mut must_accept = BTreeSet::new();
    let mut must_reject = BTreeSet::new();
    while let Some((q, m)) = queue.pop_front() {
        if d.accepting().contains(&q) {
            must_accept.insert(m);
        } else {
            must_reject.insert(m);
        }
        for (l, img) in assignment.iter().enumerate() {
            let Some(img) = img else { continue };
            let q2 = d.step(q, l);
            let m2 = t.base.op(m, *img);
            if !seen[q2 * msize + m2] {
                seen[q2 * msize + m2] = true;
                queue.push_back((q2, m2));
            }
        }
    }
    for atom in t.types.atoms() {
        let hits_accept = atom.iter().any(|e| must_accept.contains(e));
        let hits_reject = atom.iter().any(|e| must_reject.contains(e));
        if hits_accept && hits_reject {
            return None;
        }
    }
    Some((must_accept, must_reject))
}

/// Bounded recognition for the symbolic bases: some assignment of letters to
/// unit values and one of the four types agree with the DFA on every word of
/// length at most `max_len`.
pub fn symbolic_recognizes_upto(base: SymbolicBase, d: &Dfa, max_len: usize) -> bool {
    let letters = 1usize << d.width();
    let units = base.unit_values();
    let words = words_up_to(d.width(), max_len);
    // Letter sums per word for each assignment, compared against the DFA
    // under each of the four types of the algebra.
    let mut assignment = vec![0usize; letters];
    loop {
        'types: for type_choice in 0..4u8 {
            for w in &words {
                let sum: i64 = w
                    .letters()
                    .iter()
                    .map(|l| units[assignment[crate::words::letter_to_index(l)]])
                    .sum();
                let in_type = match type_choice {
                    0 => false,
                    1 => base.in_type(sum),
                    2 => !base.in_type(sum),
                    _ => true,
                };
                if in_type != d.accepts(w).unwrap() {
                    continue 'types;
                }
            }
            return true;
        }
        // Next assignment in odometer order.
        let mut i = 0;
        loop {
            if i == letters {
                return false;
            }
            assignment[i] += 1;
            if assignment[i] < units.len() {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
    }
}

impl fmt::Display for FiniteTyped {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "typed {}", self.name)?;
        writeln!(f, "base: {}", self.base.name())?;
        let gens: Vec<String> = self
            .types
            .generators()
            .iter()
            .map(|g| {
                let names: Vec<&str> = g.iter().map(|&e| self.base.element_name(e)).collect();
                format!("{{ {} }}", names.join(" "))
            })
            .collect();
        writeln!(f, "types: {}", gens.join(" ; "))?;
        let units: Vec<&str> = self
            .units
            .iter()
            .map(|&e| self.base.element_name(e))
            .collect();
        writeln!(f, "units: {}", units.join(" "))?;
        Ok(())
    }
}

/// Parses the typed monoid text format. Finite bases are resolved through
/// the environment by name; `Z` and `N` denote the symbolic bases.
pub fn parse_typed(text: &str, env: &MonoidEnv) -> Result<TypedMonoid, TypedError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let name = lines
        .next()
        .and_then(|l| l.strip_prefix("typed "))
        .ok_or_else(|| TypedError::Parse("expected `typed <name>` header".into()))?
        .trim()
        .to_string();
    let base_name = lines
        .next()
        .and_then(|l| l.strip_prefix("base:"))
        .ok_or_else(|| TypedError::Parse("expected `base:` line".into()))?
        .trim()
        .to_string();
    match base_name.as_str() {
        "Z" => return Ok(typed_integers()),
        "N" => return Ok(typed_naturals()),
        _ => {}
    }
    let base = env.resolve(&base_name)?;
    let types_line = lines
        .next()
        .and_then(|l| l.strip_prefix("types:"))
        .ok_or_else(|| TypedError::Parse("expected `types:` line".into()))?
        .trim()
        .to_string();
    let mut generators = Vec::new();
    if !types_line.is_empty() {
        for group in types_line.split(';') {
            let group = group.trim();
            let inner = group
                .strip_prefix('{')
                .and_then(|g| g.strip_suffix('}'))
                .ok_or_else(|| TypedError::Parse(format!("expected `{{ ... }}`: `{group}`")))?;
            let set: Result<BTreeSet<usize>, MonoidError> = inner
                .split_whitespace()
                .map(|e| base.element_index(e))
                .collect();
            generators.push(set?);
        }
    }
    let units_line = lines
        .next()
        .and_then(|l| l.strip_prefix("units:"))
        .ok_or_else(|| TypedError::Parse("expected `units:` line".into()))?;
    let units: Result<BTreeSet<usize>, MonoidError> = units_line
        .split_whitespace()
        .map(|e| base.element_index(e))
        .collect();
    let size = base.size();
    Ok(TypedMonoid::Finite(FiniteTyped::new(
        &name,
        (*base).clone(),
        TypeAlgebra::generated(size, generators),
        units?,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monoids::{cyclic, symmetric, u1};
    use crate::regular::fixtures::{all_words, contains_one, even_ones, no_words};

    fn u1_typed() -> FiniteTyped {
        // Types generated by the absorbing element, both elements units.
        FiniteTyped::new(
            "u1t",
            u1(),
            TypeAlgebra::generated(2, vec![[1].into()]),
            [0, 1].into(),
        )
        .unwrap()
    }

    #[test]
    fn syntactic_typed_monoid_of_all_words() {
        let t = syntactic_typed_monoid(&all_words(1));
        assert_eq!(t.base.size(), 1);
        assert_eq!(t.types.atom_count(), 1); // two types
        assert_eq!(t.types.member_count(), Some(2));
    }

    #[test]
    fn syntactic_typed_monoid_of_parity() {
        let t = syntactic_typed_monoid(&even_ones());
        assert_eq!(t.base.size(), 2);
        assert!(t.base.is_group());
        assert_eq!(t.types.member_count(), Some(4));
        assert_eq!(t.units.len(), 2);
    }

    #[test]
    fn syntactic_typed_monoid_of_contains_one() {
        let t = syntactic_typed_monoid(&contains_one());
        assert_eq!(t.base.size(), 2);
        assert_eq!(t.types.member_count(), Some(4));
        // Units are the images of both letters.
        assert_eq!(t.units.len(), 2);
    }

    #[test]
    fn identity_hom_is_valid() {
        let t = u1_typed();
        let h = TypedHom::identity(&t).unwrap();
        assert!(hom_valid(&h, &t, &t).unwrap());
    }

    #[test]
    fn collapse_to_identity_violates_type_condition() {
        let t = u1_typed();
        // Map everything to the identity; type map collapses accordingly.
        let full: BTreeSet<usize> = [0, 1].into();
        let h = TypedHom {
            elem_map: vec![0, 0],
            type_map: vec![
                (BTreeSet::new(), BTreeSet::new()),
                ([1].into(), BTreeSet::new()),
                ([0].into(), full.clone()),
                (full.clone(), full.clone()),
            ],
            unit_map: [(0, 0), (1, 0)].into(),
        };
        assert!(!hom_valid(&h, &t, &t).unwrap());
    }

    #[test]
    fn canonical_hom_onto_syntactic_typed_monoid() {
        // The parity word monoid on words of length <= 4, mapped by word
        // value onto the syntactic typed monoid.
        let t = syntactic_typed_monoid(&even_ones());
        let h = TypedHom::identity(&t).unwrap();
        assert!(hom_valid(&h, &t, &t).unwrap());
    }

    #[test]
    fn canonical_hom_conditions_on_a_word_fragment() {
        // The map sending a word to its syntactic image, checked on every
        // word of length <= 4: multiplicative, sends the language fragment
        // exactly onto the accepting type, and letters onto units.
        let d = even_ones();
        let r = crate::regular::syntactic_monoid(&d);
        let t = syntactic_typed_monoid(&d);
        let h = |w: &crate::words::WordStructure| {
            crate::monoids::gamma_extend(&r.monoid, &r.letter_images, w)
        };
        let words = crate::words::words_up_to(1, 4);
        for u in &words {
            for v in &words {
                if u.len() + v.len() > 4 {
                    continue;
                }
                let mut letters = u.letters().to_vec();
                letters.extend_from_slice(v.letters());
                let uv = crate::words::WordStructure::new(1, letters).unwrap();
                assert_eq!(h(&uv), r.monoid.op(h(u), h(v)));
            }
            assert_eq!(d.accepts(u).unwrap(), r.accept_set.contains(&h(u)));
            if u.len() == 1 {
                assert!(t.units.contains(&h(u)));
            }
        }
    }

    #[test]
    fn divides_is_reflexive() {
        for t in [
            u1_typed(),
            syntactic_typed_monoid(&even_ones()),
            syntactic_typed_monoid(&contains_one()),
        ] {
            assert!(divides(&t, &t, DEFAULT_SEARCH_BUDGET).unwrap());
        }
    }

    #[test]
    fn singleton_typed_s5_divides_full_s5() {
        let full = s5_powerset();
        let s = full.base.element_index("12").unwrap();
        let t1 = FiniteTyped::new(
            "s5_single",
            symmetric(5),
            TypeAlgebra::generated(120, vec![[s].into()]),
            (0..120).collect(),
        )
        .unwrap();
        assert!(divides(&t1, &full, DEFAULT_SEARCH_BUDGET).unwrap());
    }

    #[test]
    fn cardinality_blocks_division() {
        let big = FiniteTyped::bare(cyclic(3));
        let small = FiniteTyped::bare(u1());
        assert!(!divides(&big, &small, DEFAULT_SEARCH_BUDGET).unwrap());
    }

    #[test]
    fn exhausted_budget_is_an_error_not_an_answer() {
        let t = syntactic_typed_monoid(&even_ones());
        assert!(matches!(
            divides(&t, &t, 0),
            Err(TypedError::SearchBudgetExceeded(_))
        ));
        assert!(matches!(
            trivial_extension(&t, &t, 0),
            Err(TypedError::SearchBudgetExceeded(_))
        ));
    }

    #[test]
    fn division_respects_types() {
        // Same base, but t2 has only trivial types: the parity type cannot
        // be pulled back.
        let with_type = syntactic_typed_monoid(&even_ones());
        let bare = FiniteTyped {
            name: "bare".into(),
            base: with_type.base.clone(),
            types: TypeAlgebra::trivial(2),
            units: with_type.units.clone(),
        };
        assert!(!divides(&with_type, &bare, DEFAULT_SEARCH_BUDGET).unwrap());
        assert!(divides(&bare, &with_type, DEFAULT_SEARCH_BUDGET).unwrap());
    }

    #[test]
    fn division_is_transitive_on_fixtures() {
        let t1 = FiniteTyped::bare(u1());
        let t2 = syntactic_typed_monoid(&contains_one());
        let t3 = direct_product(&t2, &syntactic_typed_monoid(&even_ones()));
        assert!(divides(&t1, &t2, DEFAULT_SEARCH_BUDGET).unwrap());
        assert!(divides(&t2, &t3, DEFAULT_SEARCH_BUDGET).unwrap());
        assert!(divides(&t1, &t3, DEFAULT_SEARCH_BUDGET).unwrap());
    }

    #[test]
    fn minimal_reduced_is_idempotent_on_syntactic_monoids() {
        for d in [even_ones(), contains_one(), all_words(1)] {
            let t = syntactic_typed_monoid(&d);
            let r = minimal_reduced(&t);
            assert_eq!(r.base.size(), t.base.size(), "dfa {}", d.name());
            let rr = minimal_reduced(&r);
            assert_eq!(rr.base.size(), r.base.size());
        }
    }

    #[test]
    fn trivial_types_collapse_everything() {
        let t = FiniteTyped::bare(u1());
        let r = minimal_reduced(&t);
        assert_eq!(r.base.size(), 1);
    }

    #[test]
    fn full_powerset_is_already_reduced() {
        let t = s5_powerset();
        let class = context_classes(&t);
        assert_eq!(class.iter().collect::<BTreeSet<_>>().len(), 120);
    }

    #[test]
    fn syntactic_shape_checks() {
        assert!(is_syntactic_shape(&syntactic_typed_monoid(&even_ones())));
        assert!(is_syntactic_shape(&syntactic_typed_monoid(&contains_one())));
        assert!(is_syntactic_shape(&syntactic_typed_monoid(&all_words(1))));
        // Too many types.
        assert!(!is_syntactic_shape(&s5_powerset()));
        // Units do not generate.
        let no_units = FiniteTyped::new(
            "nounit",
            u1(),
            TypeAlgebra::generated(2, vec![[1].into()]),
            BTreeSet::new(),
        )
        .unwrap();
        assert!(!is_syntactic_shape(&no_units));
        // Not reduced: trivial types on a two-element base.
        assert!(!is_syntactic_shape(&FiniteTyped::bare(u1())));
    }

    #[test]
    fn recognizes_its_own_language() {
        for d in [even_ones(), contains_one(), no_words(1)] {
            let t = TypedMonoid::Finite(syntactic_typed_monoid(&d));
            assert!(recognizes(&t, &d).unwrap(), "dfa {}", d.name());
        }
    }

    #[test]
    fn trivial_monoid_does_not_recognize_contains_one() {
        let t = TypedMonoid::Finite(FiniteTyped {
            name: "triv".into(),
            base: crate::monoids::trivial(),
            types: TypeAlgebra::trivial(1),
            units: [0].into(),
        });
        assert!(!recognizes(&t, &contains_one()).unwrap());
        assert!(recognizes(&t, &all_words(1)).unwrap());
        assert!(recognizes(&t, &no_words(1)).unwrap());
    }

    #[test]
    fn recognition_is_monotone_under_division() {
        // Languages recognized by t1 are recognized by every t2 it divides.
        let t1 = syntactic_typed_monoid(&contains_one());
        let t2 = direct_product(&t1, &syntactic_typed_monoid(&even_ones()));
        assert!(divides(&t1, &t2, DEFAULT_SEARCH_BUDGET).unwrap());
        for d in [contains_one(), all_words(1), no_words(1)] {
            if recognizes(&TypedMonoid::Finite(t1.clone()), &d).unwrap() {
                assert!(
                    recognizes(&TypedMonoid::Finite(t2.clone()), &d).unwrap(),
                    "dfa {}",
                    d.name()
                );
            }
        }
    }

    #[test]
    fn symbolic_operations_are_rejected_on_finite_api() {
        let t = typed_integers();
        assert!(matches!(
            recognizes(&t, &even_ones()),
            Err(TypedError::SymbolicUnsupported)
        ));
    }

    #[test]
    fn trivial_extension_via_projection() {
        // Pair the parity monoid with a trivially-typed copy: projecting
        // away the trivial factor is a surjective typed homomorphism. With a
        // typed second factor the projection stops being one (its type
        // cylinder is not a union of fibers), so the product with two typed
        // factors is not a trivial extension of one factor.
        let c2 = syntactic_typed_monoid(&even_ones());
        let plain = FiniteTyped::new(
            "c2_plain",
            c2.base.clone(),
            TypeAlgebra::trivial(2),
            [0, 1].into(),
        )
        .unwrap();
        let prod = direct_product(&c2, &plain);
        assert!(trivial_extension(&prod, &c2, DEFAULT_SEARCH_BUDGET).unwrap());
        assert!(!trivial_extension(&c2, &prod, DEFAULT_SEARCH_BUDGET).unwrap());
        let both_typed = direct_product(&c2, &c2);
        assert!(!trivial_extension(&both_typed, &c2, DEFAULT_SEARCH_BUDGET).unwrap());
    }

    #[test]
    fn typed_text_round_trip() {
        let t = u1_typed();
        let text = t.to_string();
        let mut env = MonoidEnv::new();
        env.register(u1());
        let parsed = parse_typed(&text, &env).unwrap();
        let TypedMonoid::Finite(parsed) = parsed else { panic!() };
        assert_eq!(parsed.base, t.base);
        assert_eq!(parsed.units, t.units);
        assert_eq!(parsed.types, t.types);
        // Symbolic bases.
        assert_eq!(
            parse_typed("typed z\nbase: Z\n", &env).unwrap(),
            typed_integers()
        );
    }

    #[test]
    fn direct_product_projects_recognition() {
        let a = syntactic_typed_monoid(&even_ones());
        let b = syntactic_typed_monoid(&contains_one());
        let p = direct_product(&a, &b);
        assert_eq!(p.base.size(), 4);
        for d in [even_ones(), contains_one()] {
            assert!(recognizes(&TypedMonoid::Finite(p.clone()), &d).unwrap());
        }
    }
}
