//! Boolean algebras of subsets of a finite carrier, represented by their
//! atoms.
//!
//! The algebra generated by finitely many subsets partitions the carrier
//! into signature classes (elements belonging to exactly the same
//! generators); its members are precisely the unions of those atoms. Keeping
//! only generators and atoms lets us answer membership and cardinality
//! questions even when the member count (`2^atoms`) is astronomically large,
//! as it is for a full powerset algebra over a 120-element group.

use std::collections::{BTreeMap, BTreeSet};

use super::TypedError;

pub const DEFAULT_ALGEBRA_CAP: u128 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeAlgebra {
    base_size: usize,
    generators: Vec<BTreeSet<usize>>,
    /// Nonempty signature classes, each sorted; together they partition the
    /// carrier.
    atoms: Vec<BTreeSet<usize>>,
    /// Atom index per carrier element.
    atom_of: Vec<usize>,
}

impl TypeAlgebra {
    /// The algebra generated by the given subsets, without any size cap.
    pub fn generated(base_size: usize, generators: Vec<BTreeSet<usize>>) -> Self {
        let mut signature_to_atom: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
        let mut atoms: Vec<BTreeSet<usize>> = Vec::new();
        let mut atom_of = vec![0usize; base_size];
        for elem in 0..base_size {
            let signature: Vec<bool> = generators.iter().map(|g| g.contains(&elem)).collect();
            let idx = *signature_to_atom.entry(signature).or_insert_with(|| {
                atoms.push(BTreeSet::new());
                atoms.len() - 1
            });
            atoms[idx].insert(elem);
            atom_of[elem] = idx;
        }
        TypeAlgebra {
            base_size,
            generators,
            atoms,
            atom_of,
        }
    }

    /// Only the two trivial types: the empty set and the whole carrier.
    pub fn trivial(base_size: usize) -> Self {
        TypeAlgebra::generated(base_size, Vec::new())
    }

    /// One type per subset: generated by all singletons.
    pub fn powerset(base_size: usize) -> Self {
        let generators = (0..base_size).map(|e| BTreeSet::from([e])).collect();
        TypeAlgebra::generated(base_size, generators)
    }

    pub fn base_size(&self) -> usize {
        self.base_size
    }

    pub fn generators(&self) -> &[BTreeSet<usize>] {
        &self.generators
    }

    pub fn atoms(&self) -> &[BTreeSet<usize>] {
        &self.atoms
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Which atom an element belongs to.
    pub fn atom_of(&self, elem: usize) -> usize {
        self.atom_of[elem]
    }

    /// Number of members, `2^atoms`, when it fits in a `u128`.
    pub fn member_count(&self) -> Option<u128> {
        1u128.checked_shl(self.atom_count() as u32)
    }

    /// Membership: a set is in the algebra iff it is a union of atoms.
    pub fn contains(&self, set: &BTreeSet<usize>) -> bool {
        if set.iter().any(|&e| e >= self.base_size) {
            return false;
        }
        self.atoms.iter().all(|atom| {
            let hit = atom.intersection(set).count();
            hit == 0 || hit == atom.len()
        })
    }

    /// All members, enumerated as unions of atom subsets in mask order.
    /// Fails when there would be more than `cap`.
    pub fn members(&self, cap: u128) -> Result<Vec<BTreeSet<usize>>, TypedError> {
        match self.member_count() {
            Some(count) if count <= cap => {}
            _ => {
                return Err(TypedError::AlgebraTooLarge {
                    atoms: self.atom_count(),
                    cap,
                })
            }
        }
        let a = self.atom_count();
        let mut out = Vec::with_capacity(1 << a);
        for mask in 0..1usize << a {
            let mut member = BTreeSet::new();
            for (i, atom) in self.atoms.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    member.extend(atom.iter().copied());
                }
            }
            out.push(member);
        }
        Ok(out)
    }

    pub fn complement(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        (0..self.base_size).filter(|e| !set.contains(e)).collect()
    }
}

/// The smallest Boolean algebra over `0..base_size` containing the given
/// generators, refusing to materialize more than `cap` members (default
/// `2^16`).
pub fn generated_algebra(
    base_size: usize,
    generators: Vec<BTreeSet<usize>>,
    cap: Option<u128>,
) -> Result<TypeAlgebra, TypedError> {
    let cap = cap.unwrap_or(DEFAULT_ALGEBRA_CAP);
    let algebra = TypeAlgebra::generated(base_size, generators);
    match algebra.member_count() {
        Some(count) if count <= cap => Ok(algebra),
        _ => Err(TypedError::AlgebraTooLarge {
            atoms: algebra.atom_count(),
            cap,
        }),
    }
}
