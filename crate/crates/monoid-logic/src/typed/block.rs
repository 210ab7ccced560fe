//! Typed block products.
//!
//! The block product of monoids `M` and `N` lives on functions
//! `N x N -> M` paired with an element of `N`; the product twists the
//! function arguments by the paired elements on either side:
//!
//! ```text
//! (f1, n1) * (f2, n2) = (f, n1 n2)   with   f(a, b) = f1(a, n2 b) . f2(a n1, b)
//! ```
//!
//! The typed variant restricts to the submonoid generated by pairs whose
//! function maps into the left units and is constant on context-equivalence
//! classes of argument pairs, and whose right component is a right unit or a
//! context element. The ordered variant refines the equivalence with
//! one-sided contexts, so its generator set is contained in the unordered
//! one.

use std::collections::{BTreeSet, HashMap};

use super::{FiniteTyped, TypeAlgebra, TypedError};
use crate::monoids::FiniteMonoid;

pub const DEFAULT_CARRIER_CAP: usize = 100_000;

/// An element of a block product: the function table (indexed by
/// `left_arg * right_size + right_arg`) and the right component.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockElem {
    pub f: Vec<usize>,
    pub right: usize,
}

/// A computed typed block product, keeping the raw carrier and generator
/// sets for inspection.
#[derive(Debug, Clone)]
pub struct BlockProduct {
    pub typed: FiniteTyped,
    pub generators: Vec<BlockElem>,
    pub elements: Vec<BlockElem>,
    pub right_size: usize,
}

fn star(m1: &FiniteMonoid, m2: &FiniteMonoid, a: &BlockElem, b: &BlockElem) -> BlockElem {
    let s2 = m2.size();
    let mut f = vec![0usize; s2 * s2];
    for b1 in 0..s2 {
        for b2 in 0..s2 {
            let left = a.f[b1 * s2 + m2.op(b.right, b2)];
            let right = b.f[m2.op(b1, a.right) * s2 + b2];
            f[b1 * s2 + b2] = m1.op(left, right);
        }
    }
    BlockElem {
        f,
        right: m2.op(a.right, b.right),
    }
}

/// Context-equivalence classes of argument pairs `(b1, b2)`: two pairs are
/// equivalent when every context element and every type agree on
/// `b1 c b2` (and, in the ordered variant, on `b1 c` and `c b2` as well).
fn pair_classes(t2: &FiniteTyped, context: &BTreeSet<usize>, ordered: bool) -> Vec<usize> {
    let s2 = t2.base.size();
    let mut signature_ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut classes = vec![0usize; s2 * s2];
    for b1 in 0..s2 {
        for b2 in 0..s2 {
            let mut sig = Vec::with_capacity(context.len() * 3);
            for &c in context {
                sig.push(t2.types.atom_of(t2.base.op(t2.base.op(b1, c), b2)));
                if ordered {
                    sig.push(t2.types.atom_of(t2.base.op(b1, c)));
                    sig.push(t2.types.atom_of(t2.base.op(c, b2)));
                }
            }
            let fresh = signature_ids.len();
            classes[b1 * s2 + b2] = *signature_ids.entry(sig).or_insert(fresh);
        }
    }
    classes
}

/// The (ordered) typed block product of `t1` and `t2` with context `C`.
/// Fails when the generated carrier would exceed `cap` elements.
pub fn block_product(
    t1: &FiniteTyped,
    t2: &FiniteTyped,
    context: &BTreeSet<usize>,
    ordered: bool,
    cap: usize,
) -> Result<BlockProduct, TypedError> {
    if let Some(&c) = context.iter().find(|&&c| c >= t2.base.size()) {
        return Err(TypedError::UnknownElement(format!(
            "context element index {c}"
        )));
    }
    let s2 = t2.base.size();
    let classes = pair_classes(t2, context, ordered);
    let class_count = classes.iter().max().map_or(0, |&m| m + 1);
    let units1: Vec<usize> = t1.units.iter().copied().collect();

    // All class-respecting functions into the left units.
    let function_count = units1.len().checked_pow(class_count as u32);
    match function_count {
        Some(n) if n <= cap => {}
        _ => return Err(TypedError::CarrierTooLarge(cap)),
    }
    let mut functions: Vec<Vec<usize>> = Vec::new();
    if !units1.is_empty() {
        let mut choice = vec![0usize; class_count];
        loop {
            functions.push(classes.iter().map(|&k| units1[choice[k]]).collect());
            let mut i = 0;
            loop {
                if i == class_count {
                    break;
                }
                choice[i] += 1;
                if choice[i] < units1.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == class_count {
                break;
            }
        }
    }

    let mut right_pool: BTreeSet<usize> = t2.units.clone();
    right_pool.extend(context.iter().copied());
    let mut generators = Vec::new();
    for f in &functions {
        for &r in &right_pool {
            generators.push(BlockElem {
                f: f.clone(),
                right: r,
            });
        }
    }

    // Closure under the product, identity first.
    let identity = BlockElem {
        f: vec![t1.base.identity(); s2 * s2],
        right: t2.base.identity(),
    };
    let mut index: HashMap<BlockElem, usize> = HashMap::new();
    let mut elements: Vec<BlockElem> = Vec::new();
    let insert = |elem: BlockElem,
                      index: &mut HashMap<BlockElem, usize>,
                      elements: &mut Vec<BlockElem>|
     -> Result<usize, TypedError> {
        if let Some(&id) = index.get(&elem) {
            return Ok(id);
        }
        if elements.len() >= cap {
            return Err(TypedError::CarrierTooLarge(cap));
        }
        let id = elements.len();
        index.insert(elem.clone(), id);
        elements.push(elem);
        Ok(id)
    };
    insert(identity, &mut index, &mut elements)?;
    for g in &generators {
        insert(g.clone(), &mut index, &mut elements)?;
    }
    // Pairwise closure; every new element re-enters the loop.
    let mut next = 0usize;
    while next < elements.len() {
        for j in 0..elements.len() {
            for (a, b) in [(next, j), (j, next)] {
                let prod = star(&t1.base, &t2.base, &elements[a], &elements[b]);
                insert(prod, &mut index, &mut elements)?;
            }
        }
        next += 1;
    }

    let carrier = elements.len();
    let names = (0..carrier).map(|i| format!("b{i}")).collect();
    let table: Vec<Vec<usize>> = (0..carrier)
        .map(|i| {
            (0..carrier)
                .map(|j| index[&star(&t1.base, &t2.base, &elements[i], &elements[j])])
                .collect()
        })
        .collect();
    let base = FiniteMonoid::validate(
        &format!("{}[]{}", t1.base.name(), t2.base.name()),
        names,
        table,
    )
    .expect("block product carrier is a monoid");

    // Types: pull each left type through evaluation at the double identity.
    let eval_at_identity =
        |e: &BlockElem| e.f[t2.base.identity() * s2 + t2.base.identity()];
    let type_generators: Vec<BTreeSet<usize>> = t1
        .types
        .generators()
        .iter()
        .map(|a| {
            (0..carrier)
                .filter(|&i| a.contains(&eval_at_identity(&elements[i])))
                .collect()
        })
        .collect();

    // Units: generators whose right component is a right unit.
    let units: BTreeSet<usize> = generators
        .iter()
        .filter(|g| t2.units.contains(&g.right))
        .map(|g| index[g])
        .collect();

    let op = if ordered { "(x)" } else { "(.)" };
    let typed = FiniteTyped {
        name: format!("{}{}{}", t1.name, op, t2.name),
        base,
        types: TypeAlgebra::generated(carrier, type_generators),
        units,
    };
    Ok(BlockProduct {
        typed,
        generators,
        elements,
        right_size: s2,
    })
}

/// The full (untyped) block product `M [] N` on every function `N x N -> M`:
/// the reference object the typed carrier embeds into. Guarded by `cap`
/// since its size is `|M|^(|N|^2) * |N|`.
pub fn full_block_product(
    m1: &FiniteMonoid,
    m2: &FiniteMonoid,
    cap: usize,
) -> Result<(FiniteMonoid, Vec<BlockElem>), TypedError> {
    let s1 = m1.size();
    let s2 = m2.size();
    let total = s1
        .checked_pow((s2 * s2) as u32)
        .and_then(|f| f.checked_mul(s2));
    match total {
        Some(t) if t <= cap => {}
        _ => return Err(TypedError::CarrierTooLarge(cap)),
    }
    let mut elements = Vec::new();
    let mut f = vec![0usize; s2 * s2];
    loop {
        for right in 0..s2 {
            elements.push(BlockElem {
                f: f.clone(),
                right,
            });
        }
        let mut i = 0;
        loop {
            if i == s2 * s2 {
                break;
            }
            f[i] += 1;
            if f[i] < s1 {
                break;
            }
            f[i] = 0;
            i += 1;
        }
        if i == s2 * s2 {
            break;
        }
    }
    let index: HashMap<&BlockElem, usize> =
        elements.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let names = (0..elements.len()).map(|i| format!("f{i}")).collect();
    let table: Vec<Vec<usize>> = elements
        .iter()
        .map(|a| {
            elements
                .iter()
                .map(|b| index[&star(m1, m2, a, b)])
                .collect()
        })
        .collect();
    let monoid = FiniteMonoid::validate(
        &format!("{}[]{}full", m1.name(), m2.name()),
        names,
        table,
    )
    .expect("full block product is a monoid");
    Ok((monoid, elements))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monoids::{trivial, u1};
    use crate::regular::fixtures::contains_one;
    use crate::typed::{syntactic_typed_monoid, DEFAULT_ALGEBRA_CAP};

    fn u1_typed() -> FiniteTyped {
        syntactic_typed_monoid(&contains_one())
    }

    #[test]
    fn trivial_block_product_is_trivial() {
        let t = FiniteTyped::new(
            "triv",
            trivial(),
            TypeAlgebra::trivial(1),
            [0].into(),
        )
        .unwrap();
        let bp = block_product(&t, &t, &BTreeSet::new(), false, DEFAULT_CARRIER_CAP).unwrap();
        assert_eq!(bp.typed.base.size(), 1);
    }

    #[test]
    fn u1_block_u1_embeds_in_the_full_product() {
        let t = u1_typed();
        let bp = block_product(&t, &t, &BTreeSet::new(), false, DEFAULT_CARRIER_CAP).unwrap();
        assert!(bp.typed.base.size() <= 32);
        // With an empty context every pair is equivalent, so generator
        // functions are constant.
        for g in &bp.generators {
            assert!(g.f.windows(2).all(|w| w[0] == w[1]));
        }
        // Every carrier element appears in the 32-element full product and
        // multiplies the same way.
        let (full, full_elems) = full_block_product(&t.base, &t.base, 10_000).unwrap();
        assert_eq!(full.size(), 32);
        let find = |e: &BlockElem| full_elems.iter().position(|x| x == e).unwrap();
        for a in &bp.elements {
            for b in &bp.elements {
                let ours = star(&t.base, &t.base, a, b);
                let theirs = full.op(find(a), find(b));
                assert_eq!(find(&ours), theirs);
            }
        }
    }

    #[test]
    fn ordered_condition_refines_the_equivalence() {
        // The one-sided context conditions make the equivalence on argument
        // pairs finer, so every unordered generator is also an ordered one;
        // with an empty context both premises are vacuous and the generator
        // sets coincide.
        let t = u1_typed();
        for context in [BTreeSet::new(), BTreeSet::from([0usize]), BTreeSet::from([0usize, 1])] {
            let plain = block_product(&t, &t, &context, false, DEFAULT_CARRIER_CAP).unwrap();
            let ordered = block_product(&t, &t, &context, true, DEFAULT_CARRIER_CAP).unwrap();
            let ordered_set: BTreeSet<(Vec<usize>, usize)> = ordered
                .generators
                .iter()
                .map(|g| (g.f.clone(), g.right))
                .collect();
            for g in &plain.generators {
                assert!(ordered_set.contains(&(g.f.clone(), g.right)));
            }
            if context.is_empty() {
                assert_eq!(plain.generators.len(), ordered.generators.len());
            }
        }
    }

    #[test]
    fn result_types_have_the_evaluation_shape() {
        let t = u1_typed();
        let bp = block_product(&t, &t, &BTreeSet::from([1usize]), false, DEFAULT_CARRIER_CAP)
            .unwrap();
        let s2 = bp.right_size;
        let id2 = t.base.identity();
        let members = bp.typed.types.members(DEFAULT_ALGEBRA_CAP).unwrap();
        let left_members = t.types.members(DEFAULT_ALGEBRA_CAP).unwrap();
        for member in &members {
            let matches_some_left = left_members.iter().any(|a| {
                let pulled: BTreeSet<usize> = (0..bp.typed.base.size())
                    .filter(|&i| a.contains(&bp.elements[i].f[id2 * s2 + id2]))
                    .collect();
                &pulled == member
            });
            assert!(matches_some_left);
        }
    }

    #[test]
    fn carrier_cap_is_enforced() {
        let t = u1_typed();
        assert!(matches!(
            block_product(&t, &t, &BTreeSet::new(), false, 2),
            Err(TypedError::CarrierTooLarge(2))
        ));
    }

    #[test]
    fn full_block_product_of_u1_u1_has_32_elements() {
        let (full, _) = full_block_product(&u1(), &u1(), 10_000).unwrap();
        assert_eq!(full.size(), 32);
    }
}
