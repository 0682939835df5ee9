//! The holomorph Aut(G) ⋉ G as a concrete group of (automorphism,
//! translation) pairs acting on G by x ↦ apply(φ, x) + g, and the
//! enumeration of its regular subgroups.
//!
//! A regular subgroup N ≤ Hol(G) — one whose action on G is sharply
//! transitive — is the same data as a gamma function on G and hence as a
//! skew brace with additive group G: the unique ν(g) ∈ N sending 0 to g
//! has the form (γ(g), g), and closure of N is exactly the functional
//! equation for γ. The two directions of that dictionary live here as
//! [`RegularSubgroup::to_brace`] and [`gamma_to_subgroup`].
//!
//! Enumeration grows partial subgroups depth-first: regularity allows at
//! most one member per translation, so the search always branches on the
//! smallest translation not yet covered, closes the chosen set under
//! composition, and prunes on any translation collision or size overflow.
//! Automorphism components are confined to the p-power-order elements of
//! Aut(G), because a gamma function is a homomorphism out of the p-group
//! (G,∘).

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use thiserror::Error;

use crate::brace::{Brace, BraceError};
use crate::gamma::{GammaError, GammaFunction};
use crate::morphism::{Automorphism, EndoMatrix};
use crate::pgroup::{
    abelian_invariants_from_histogram, checked_pow, GroupElement, GroupError, GroupSpec,
    OrderHistogram,
};
use crate::sweep::SweepCfg;

/// Enumeration is admitted for |G| ≤ 16 unconditionally, and up to |G| ≤ 81
/// when the automorphism group is no larger than this.
pub const AUT_ORDER_CAP: u128 = 10_000;
/// Hard order cap for enumeration.
pub const ENUM_ORDER_BOUND: u64 = 81;
/// Order up to which enumeration runs regardless of |Aut(G)|.
pub const ENUM_SMALL_ORDER: u64 = 16;
/// Cap on the candidate count for automorphism-group enumeration.
pub const AUT_CANDIDATE_BOUND: u128 = 1 << 24;
/// The naive subset-filter oracle is only run when Hol(G) has at most this
/// many elements.
pub const NAIVE_HOL_BOUND: u128 = 32;

#[derive(Debug, Error)]
pub enum HolError {
    #[error(
        "group order {order} exceeds the enumeration bound \
         (order <= 16, or order <= 81 with |Aut| <= 10^4{})",
        aut_count.map(|a| format!("; |Aut| = {a}")).unwrap_or_default()
    )]
    EnumerationBound {
        order: u64,
        aut_count: Option<u128>,
    },
    #[error("automorphism enumeration would scan {candidates} candidates (bound 2^24)")]
    CandidateBound { candidates: u128 },
    #[error("holomorph order {hol_order} exceeds the naive-oracle bound 32")]
    OracleBound { hol_order: u128 },
    #[error("subgroup has {got} elements, the group order is {want}")]
    WrongSize { got: usize, want: u64 },
    #[error("not regular: two members share the translation {translation}")]
    NotRegular { translation: GroupElement },
    #[error("not closed: the product of members {left} and {right} is missing")]
    NotClosed { left: usize, right: usize },
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error(transparent)]
    Brace(#[from] BraceError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// An element (φ, g) of Hol(G), acting on G by x ↦ apply(φ, x) + g.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HolElement {
    auto: Automorphism,
    trans: GroupElement,
}

impl HolElement {
    pub fn new(auto: Automorphism, trans: GroupElement) -> HolElement {
        HolElement { auto, trans }
    }

    pub fn identity(spec: &Arc<GroupSpec>) -> HolElement {
        HolElement {
            auto: Automorphism::identity(spec),
            trans: spec.zero(),
        }
    }

    /// The right translation ρ(g) = (id, g).
    pub fn rho(g: GroupElement) -> HolElement {
        HolElement {
            auto: Automorphism::identity(g.spec()),
            trans: g,
        }
    }

    pub fn auto(&self) -> &Automorphism {
        &self.auto
    }

    pub fn translation(&self) -> &GroupElement {
        &self.trans
    }

    pub fn apply(&self, x: &GroupElement) -> GroupElement {
        self.auto.apply(x).add(&self.trans)
    }

    /// Semidirect product in action order:
    /// apply(a.compose(b), x) = apply(b, apply(a, x)), i.e.
    /// (φ,g)(ψ,h) = (φ then ψ, apply(ψ,g) + h).
    pub fn compose(&self, rhs: &HolElement) -> HolElement {
        HolElement {
            auto: self.auto.then(&rhs.auto),
            trans: rhs.auto.apply(&self.trans).add(&rhs.trans),
        }
    }

    pub fn inverse(&self) -> HolElement {
        let auto = self.auto.inverse();
        let trans = auto.apply(&self.trans).neg();
        HolElement { auto, trans }
    }

    pub fn is_identity(&self) -> bool {
        self.trans.is_zero() && self.auto.is_identity()
    }
}

impl fmt::Display for HolElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.auto.matrix(), self.trans)
    }
}

/// ν(g) = (γ(g), g): the unique element of the brace's regular subgroup
/// sending 0 to g. Satisfies hol_apply(ν(g), h) = h ∘ g.
pub fn nu_of(b: &Brace, g: &GroupElement) -> HolElement {
    HolElement {
        auto: b.gamma().at(g).clone(),
        trans: g.clone(),
    }
}

/// Isomorphism fingerprint of a regular subgroup: order histogram, abelian
/// flag, center order — and, when abelian, the invariant-factor exponents
/// recovered from the histogram (which pin the isomorphism type exactly).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    pub histogram: OrderHistogram,
    pub abelian: bool,
    pub center_order: u64,
    pub invariants: Option<Vec<u32>>,
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} center={}",
            self.histogram,
            if self.abelian { "abelian" } else { "non-abelian" },
            self.center_order
        )
    }
}

/// A regular subgroup of Hol(G): exactly one member per translation,
/// closed under composition. `members[i]` is the element whose translation
/// is the group element of canonical index i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularSubgroup {
    spec: Arc<GroupSpec>,
    members: Vec<HolElement>,
}

impl RegularSubgroup {
    /// Build from an explicit member list, checking size, regularity, and
    /// closure (inverses follow: a nonempty finite subset of a group that
    /// is closed under the operation is a subgroup).
    pub fn from_elements(
        spec: &Arc<GroupSpec>,
        elements: Vec<HolElement>,
    ) -> Result<RegularSubgroup, HolError> {
        if elements.len() as u64 != spec.order() {
            return Err(HolError::WrongSize {
                got: elements.len(),
                want: spec.order(),
            });
        }
        let mut members: Vec<Option<HolElement>> = vec![None; elements.len()];
        for e in elements {
            let slot = e.trans.index() as usize;
            if members[slot].is_some() {
                return Err(HolError::NotRegular {
                    translation: e.trans.clone(),
                });
            }
            members[slot] = Some(e);
        }
        let members: Vec<HolElement> = members
            .into_iter()
            .map(|m| m.expect("n distinct translations over n slots"))
            .collect();
        let sub = RegularSubgroup {
            spec: Arc::clone(spec),
            members,
        };
        for (i, a) in sub.members.iter().enumerate() {
            for (j, b) in sub.members.iter().enumerate() {
                let p = a.compose(b);
                if sub.members[p.trans.index() as usize] != p {
                    return Err(HolError::NotClosed { left: i, right: j });
                }
            }
        }
        Ok(sub)
    }

    /// Construct without the closure sweep — for callers holding a proof
    /// (the ν-image of a validated brace, or the output of the closing
    /// search).
    fn from_members_unchecked(spec: &Arc<GroupSpec>, members: Vec<HolElement>) -> RegularSubgroup {
        debug_assert!(members
            .iter()
            .enumerate()
            .all(|(i, m)| m.trans.index() as usize == i));
        RegularSubgroup {
            spec: Arc::clone(spec),
            members,
        }
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    pub fn members(&self) -> &[HolElement] {
        &self.members
    }

    /// The member sending 0 to g (regularity makes it unique).
    pub fn member_at(&self, g: &GroupElement) -> &HolElement {
        &self.members[g.index() as usize]
    }

    /// Read off the gamma function (member automorphism components, by
    /// translation) and validate it into a brace. Closure of the subgroup
    /// already implies the functional equation, so validation is a
    /// re-derivation that cannot fail on a genuine subgroup.
    pub fn to_brace(&self, cfg: &SweepCfg) -> Result<Brace, HolError> {
        let autos: Vec<Automorphism> = self.members.iter().map(|m| m.auto.clone()).collect();
        let gamma = GammaFunction::table(&self.spec, autos)?;
        Ok(Brace::new(gamma, cfg)?)
    }

    /// Order of a member inside the subgroup (a p-power).
    fn member_order(&self, m: &HolElement) -> u64 {
        let p = self.spec.p();
        let cap: u32 = self.spec.exponents().iter().sum();
        let mut current = m.clone();
        let mut steps = 0u32;
        while !current.is_identity() {
            assert!(
                steps <= cap,
                "member order exceeds the group order: not a p-subgroup"
            );
            let mut next = current.clone();
            for _ in 1..p {
                next = next.compose(&current);
            }
            current = next;
            steps += 1;
        }
        checked_pow(p, u64::from(steps)).expect("order divides group order")
    }

    /// Order histogram, abelian flag, center order, and (when abelian) the
    /// recovered invariant factors.
    pub fn fingerprint(&self) -> Fingerprint {
        let histogram =
            OrderHistogram::from_orders(self.members.iter().map(|m| self.member_order(m)));
        let mut abelian = true;
        let mut center_order = 0u64;
        for a in &self.members {
            let mut central = true;
            for b in &self.members {
                if a.compose(b) != b.compose(a) {
                    central = false;
                    abelian = false;
                }
            }
            if central {
                center_order += 1;
            }
        }
        let invariants = if abelian {
            abelian_invariants_from_histogram(&histogram)
                .ok()
                .map(|s| s.exponents().to_vec())
        } else {
            None
        };
        Fingerprint {
            histogram,
            abelian,
            center_order,
            invariants,
        }
    }

    /// Canonical comparison key: per-translation automorphism entries.
    fn canonical_key(&self) -> Vec<&[u64]> {
        self.members
            .iter()
            .map(|m| m.auto.matrix().entries())
            .collect()
    }
}

/// ν-image of a validated brace: the regular subgroup {(γ(g), g) : g ∈ G}.
pub fn gamma_to_subgroup(b: &Brace) -> Result<RegularSubgroup, HolError> {
    let spec = b.spec();
    let members: Vec<HolElement> = spec.elements()?.map(|g| nu_of(b, &g)).collect();
    Ok(RegularSubgroup::from_members_unchecked(spec, members))
}

/// |Aut(G)| by the Hillar–Rhea closed form over the invariant-factor
/// profile. None when the value overflows 128 bits (far beyond any bound
/// used here).
pub fn automorphism_count(spec: &GroupSpec) -> Option<u128> {
    // ascending exponent profile f_1 ≤ f_2 ≤ … ≤ f_n
    let mut f: Vec<u64> = spec.exponents().iter().map(|&e| u64::from(e)).collect();
    f.reverse();
    let n = f.len();
    let p = u128::from(spec.p());
    let d = |k: usize| (0..n).rev().find(|&l| f[l] == f[k]).unwrap() + 1;
    let c = |k: usize| (0..n).find(|&l| f[l] == f[k]).unwrap() + 1;

    let pow = |e: u64| -> Option<u128> {
        let mut acc: u128 = 1;
        for _ in 0..e {
            acc = acc.checked_mul(p)?;
        }
        Some(acc)
    };
    let mut total: u128 = 1;
    for k in 0..n {
        let dk = d(k) as u64;
        let ck = c(k) as u64;
        let head = pow(dk)? - pow(k as u64)?;
        let tail = pow(f[k] * (n as u64 - dk))?;
        let diag = pow((f[k] - 1) * (n as u64 - ck + 1))?;
        total = total
            .checked_mul(head)?
            .checked_mul(tail)?
            .checked_mul(diag)?;
    }
    Some(total)
}

/// Every automorphism of G, by scanning all generator-image tuples
/// (column j ranges over elements of order dividing the j-th generator's)
/// and keeping the invertible ones. Deterministic order: lexicographic in
/// the image tuple.
pub fn all_automorphisms(spec: &Arc<GroupSpec>) -> Result<Vec<Automorphism>, HolError> {
    let r = spec.exponents().len();
    let mut candidates: u128 = 1;
    for j in 0..r {
        candidates = candidates.saturating_mul(u128::from(spec.omega_size(spec.exponents()[j])));
    }
    if candidates > AUT_CANDIDATE_BOUND {
        return Err(HolError::CandidateBound { candidates });
    }

    // columns[j]: the candidate images of generator j, in canonical order
    let columns: Vec<Vec<GroupElement>> = (0..r)
        .map(|j| {
            let cap = spec.moduli()[j];
            spec.elements()
                .expect("candidate bound implies materializable")
                .filter(|g| cap % g.order() == 0)
                .collect()
        })
        .collect();

    let mut found = Vec::new();
    let mut odometer = vec![0usize; r];
    loop {
        let images: Vec<GroupElement> = (0..r)
            .map(|j| columns[j][odometer[j]].clone())
            .collect();
        let matrix = EndoMatrix::from_images(spec, &images)
            .expect("image orders divide generator orders by construction");
        if let Ok(auto) = matrix.to_automorphism() {
            found.push(auto);
        }
        // advance the odometer, most significant column first so the
        // output is lexicographic in the image tuple
        let mut j = r;
        loop {
            if j == 0 {
                return Ok(found);
            }
            j -= 1;
            odometer[j] += 1;
            if odometer[j] < columns[j].len() {
                break;
            }
            odometer[j] = 0;
        }
    }
}

/// Does this automorphism have p-power order? (Repeated p-th powers reach
/// the identity iff no other prime divides the order.)
fn has_p_power_order(a: &Automorphism, p: u64) -> bool {
    let mut x = a.clone();
    for _ in 0..=128 {
        if x.is_identity() {
            return true;
        }
        x = x.pow(p);
    }
    false
}

/// The automorphisms eligible as gamma values: γ is a homomorphism from
/// the p-group (G,∘), so every γ(g) has p-power order. Sorted by matrix
/// entries for determinism.
fn p_power_pool(spec: &Arc<GroupSpec>) -> Result<Vec<Automorphism>, HolError> {
    let p = spec.p();
    let mut pool: Vec<Automorphism> = all_automorphisms(spec)?
        .into_iter()
        .filter(|a| has_p_power_order(a, p))
        .collect();
    pool.sort_by(|a, b| a.matrix().entries().cmp(b.matrix().entries()));
    Ok(pool)
}

/// Partial-subgroup state for the depth-first search: pool-index per
/// translation slot, plus the member list for product sweeps.
#[derive(Clone)]
struct SearchState {
    /// slots[t] = pool index of the member with translation t, if chosen.
    slots: Vec<Option<u32>>,
    /// (pool index, translation index) of every member, insertion order.
    members: Vec<(u32, u32)>,
}

struct SearchCtx<'a> {
    pool: &'a [Automorphism],
    /// matrix entries → pool index, for closure products
    pool_index: HashMap<Vec<u64>, u32>,
    elements: Vec<GroupElement>,
}

impl SearchCtx<'_> {
    /// hol product (pool[a], t_i) ∘ (pool[b], t_j) as (pool index,
    /// translation index); None when the automorphism part leaves the
    /// p-power pool (which proves the branch dead).
    fn compose(&self, a: u32, i: u32, b: u32, j: u32) -> Option<(u32, u32)> {
        let auto = self.pool[a as usize].then(&self.pool[b as usize]);
        let idx = *self.pool_index.get(auto.matrix().entries())?;
        let trans = self.pool[b as usize]
            .apply(&self.elements[i as usize])
            .add(&self.elements[j as usize]);
        Some((idx, trans.index() as u32))
    }

    /// Add (pool[a], t) to the state and close under composition.
    /// Returns false (state poisoned) on any regularity conflict, pool
    /// escape, or size overflow.
    fn close_with(&self, state: &mut SearchState, a: u32, t: u32) -> bool {
        let n = state.slots.len();
        let mut queue = vec![(a, t)];
        match state.slots[t as usize] {
            Some(existing) => return existing == a, // already present / conflict
            None => {
                state.slots[t as usize] = Some(a);
                state.members.push((a, t));
            }
        }
        while let Some((xa, xt)) = queue.pop() {
            // products against every member present when x pops; members
            // discovered later multiply against x when they pop themselves
            let snapshot = state.members.len();
            for k in 0..snapshot {
                let (ma, mt) = state.members[k];
                for product in [
                    self.compose(xa, xt, ma, mt),
                    self.compose(ma, mt, xa, xt),
                ] {
                    let Some((pa, pt)) = product else {
                        return false; // left the p-power pool
                    };
                    match state.slots[pt as usize] {
                        Some(existing) => {
                            if existing != pa {
                                return false; // regularity conflict
                            }
                        }
                        None => {
                            if state.members.len() >= n {
                                return false; // size overflow
                            }
                            state.slots[pt as usize] = Some(pa);
                            state.members.push((pa, pt));
                            queue.push((pa, pt));
                        }
                    }
                }
            }
        }
        true
    }
}

/// Exhaustively enumerate the regular subgroups of Hol(G).
///
/// Admitted for |G| ≤ 16, or |G| ≤ 81 when |Aut(G)| ≤ 10⁴ — chosen so
/// that every supported case finishes in seconds. The output is complete,
/// duplicate-free, canonically ordered, and independent of the worker
/// count.
pub fn enumerate_regular_subgroups(
    spec: &Arc<GroupSpec>,
    cfg: &SweepCfg,
) -> Result<Vec<RegularSubgroup>, HolError> {
    let n = spec.order();
    let aut_count = automorphism_count(spec);
    let admitted = n <= ENUM_SMALL_ORDER
        || (n <= ENUM_ORDER_BOUND && aut_count.is_some_and(|a| a <= AUT_ORDER_CAP));
    if !admitted {
        return Err(HolError::EnumerationBound {
            order: n,
            aut_count,
        });
    }

    let pool = p_power_pool(spec)?;
    let pool_index: HashMap<Vec<u64>, u32> = pool
        .iter()
        .enumerate()
        .map(|(i, a)| (a.matrix().entries().to_vec(), i as u32))
        .collect();
    let identity_idx = *pool_index
        .get(EndoMatrix::identity(spec).entries())
        .expect("identity has p-power order");
    let ctx = SearchCtx {
        pool: &pool,
        pool_index,
        elements: spec.elements()?.collect(),
    };

    // seed: the identity of Hol sits at translation 0 in every subgroup
    let mut seed = SearchState {
        slots: vec![None; n as usize],
        members: Vec::new(),
    };
    assert!(ctx.close_with(&mut seed, identity_idx, 0));

    // the first branch is always translation 1; split its candidate list
    // across workers (results are concatenated in candidate order, so the
    // outcome does not depend on the split)
    let candidates: Vec<u32> = (0..pool.len() as u32).collect();
    let workers = cfg.workers.clamp(1, 64).min(candidates.len().max(1));
    let run_chunk = |chunk: &[u32]| -> Vec<Vec<Option<u32>>> {
        let mut found = Vec::new();
        for &a in chunk {
            let mut state = seed.clone();
            if ctx.close_with(&mut state, a, 1) {
                search(&ctx, state, &mut found);
            }
        }
        found
    };

    let mut complete: Vec<Vec<Option<u32>>> = if workers <= 1 {
        run_chunk(&candidates)
    } else {
        let chunk_len = candidates.len().div_ceil(workers);
        let mut merged = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = candidates
                .chunks(chunk_len)
                .map(|chunk| {
                    let run_chunk = &run_chunk;
                    scope.spawn(move || run_chunk(chunk))
                })
                .collect();
            for h in handles {
                merged.extend(h.join().expect("search worker panicked"));
            }
        });
        merged
    };

    // canonical order and duplicate elimination by the slot table
    complete.sort();
    complete.dedup();

    Ok(complete
        .into_iter()
        .map(|slots| {
            let members: Vec<HolElement> = slots
                .iter()
                .enumerate()
                .map(|(t, a)| {
                    HolElement::new(
                        pool[a.expect("complete state covers every translation") as usize].clone(),
                        ctx.elements[t].clone(),
                    )
                })
                .collect();
            RegularSubgroup::from_members_unchecked(spec, members)
        })
        .collect())
}

/// Depth-first recursion: branch on the smallest uncovered translation.
fn search(ctx: &SearchCtx<'_>, state: SearchState, found: &mut Vec<Vec<Option<u32>>>) {
    let next = state.slots.iter().position(|s| s.is_none());
    let Some(t) = next else {
        found.push(state.slots);
        return;
    };
    for a in 0..ctx.pool.len() as u32 {
        let mut child = state.clone();
        if ctx.close_with(&mut child, a, t as u32) {
            search(ctx, child, found);
        }
    }
}

/// Independent certification oracle: filter ALL |G|-element subsets of
/// Hol(G) for regular subgroups. Exponential; admitted only for
/// |Hol(G)| ≤ 32.
pub fn naive_regular_subgroups(spec: &Arc<GroupSpec>) -> Result<Vec<RegularSubgroup>, HolError> {
    let n = spec.order();
    let hol_order = automorphism_count(spec)
        .and_then(|a| a.checked_mul(u128::from(n)))
        .unwrap_or(u128::MAX);
    if hol_order > NAIVE_HOL_BOUND {
        return Err(HolError::OracleBound { hol_order });
    }
    let autos = all_automorphisms(spec)?;
    let mut hol: Vec<HolElement> = Vec::new();
    for a in &autos {
        for g in spec.elements()? {
            hol.push(HolElement::new(a.clone(), g));
        }
    }
    // every subgroup contains the identity, so fix it and choose the rest
    let identity = HolElement::identity(spec);
    let rest: Vec<&HolElement> = hol.iter().filter(|e| !e.is_identity()).collect();
    let mut out = Vec::new();
    for combo in rest.iter().copied().combinations(n as usize - 1) {
        let mut elements: Vec<HolElement> = combo.into_iter().cloned().collect();
        elements.push(identity.clone());
        if let Ok(sub) = RegularSubgroup::from_elements(spec, elements) {
            out.push(sub);
        }
    }
    out.sort_by(|a, b| a.canonical_key().cmp(&b.canonical_key()));
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgroup::parse_spec;
    use std::collections::BTreeSet;

    fn cfg() -> SweepCfg {
        SweepCfg::default()
    }

    fn z4_flip_brace() -> Brace {
        let g = parse_spec("2:[2]").unwrap();
        let a = EndoMatrix::new(&g, &[vec![3]])
            .unwrap()
            .to_automorphism()
            .unwrap();
        let gamma = GammaFunction::from_kernel_hom(&g, &[1], 1, &a).unwrap();
        Brace::new(gamma, &cfg()).unwrap()
    }

    #[test]
    fn hol_action_and_composition() {
        let spec = parse_spec("3:[2]").unwrap();
        let autos = all_automorphisms(&spec).unwrap();
        let els: Vec<GroupElement> = spec.elements().unwrap().collect();
        for a in &autos {
            for g in &els {
                let ha = HolElement::new(a.clone(), g.clone());
                for b in &autos {
                    for h in &els {
                        let hb = HolElement::new(b.clone(), h.clone());
                        let prod = ha.compose(&hb);
                        for x in &els {
                            assert_eq!(prod.apply(x), hb.apply(&ha.apply(x)));
                        }
                    }
                }
                // inverse round-trip
                let inv = ha.inverse();
                assert!(ha.compose(&inv).is_identity());
                assert!(inv.compose(&ha).is_identity());
            }
        }
    }

    #[test]
    fn translations_compose_additively() {
        let spec = parse_spec("2:[2,1]").unwrap();
        for g in spec.elements().unwrap() {
            for h in spec.elements().unwrap() {
                let lhs = HolElement::rho(g.clone()).compose(&HolElement::rho(h.clone()));
                assert_eq!(lhs, HolElement::rho(g.add(&h)));
            }
            assert_eq!(
                HolElement::rho(g.clone()).inverse(),
                HolElement::rho(g.neg())
            );
        }
    }

    #[test]
    fn nu_matches_circle_action() {
        let b = z4_flip_brace();
        let spec = b.spec().clone();
        assert!(nu_of(&b, &spec.zero()).is_identity());
        // hol_apply(nu(1), 2) = 2∘1 = 3
        let e = |v: i64| spec.element(&[v]);
        assert_eq!(nu_of(&b, &e(1)).apply(&e(2)), e(3));
        // ν(g∘h) = ν(g)ν(h), exhaustively
        for g in spec.elements().unwrap() {
            for h in spec.elements().unwrap() {
                let lhs = nu_of(&b, &b.circle(&g, &h));
                let rhs = nu_of(&b, &g).compose(&nu_of(&b, &h));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn automorphism_count_closed_form() {
        // frozen table, cross-checked against the image-tuple scan below
        let table: &[(&str, u128)] = &[
            ("2:[2]", 2),
            ("2:[1,1]", 6),
            ("2:[3]", 4),
            ("2:[2,1]", 8),
            ("2:[1,1,1]", 168),
            ("2:[2,2]", 96),
            ("2:[2,1,1]", 192),
            ("2:[1,1,1,1]", 20160),
            ("2:[2,2,1]", 1536),
            ("2:[3,1,1]", 384),
            ("2:[4,1]", 32),
            ("2:[2,1,1,1]", 21504),
            ("2:[2,2,2]", 86016),
            ("3:[2]", 6),
            ("3:[1,1]", 48),
            ("3:[2,1]", 108),
            ("3:[2,2]", 3888),
            ("3:[1,1,1]", 11232),
            ("3:[2,1,1]", 23328),
            ("5:[2]", 20),
            ("5:[1,1]", 480),
        ];
        for &(text, want) in table {
            let spec = parse_spec(text).unwrap();
            assert_eq!(automorphism_count(&spec), Some(want), "{text}");
        }
    }

    #[test]
    fn automorphism_scan_matches_closed_form() {
        for text in ["2:[2]", "2:[1,1]", "2:[2,1]", "2:[1,1,1]", "3:[2]", "3:[1,1]", "3:[2,1]"] {
            let spec = parse_spec(text).unwrap();
            let autos = all_automorphisms(&spec).unwrap();
            assert_eq!(
                Some(autos.len() as u128),
                automorphism_count(&spec),
                "{text}"
            );
            // all distinct
            let keys: BTreeSet<Vec<u64>> = autos
                .iter()
                .map(|a| a.matrix().entries().to_vec())
                .collect();
            assert_eq!(keys.len(), autos.len());
        }
    }

    #[test]
    fn p_power_pool_contents() {
        // Aut(Z/4) = {1, 3}: both of 2-power order
        let spec = parse_spec("2:[2]").unwrap();
        assert_eq!(p_power_pool(&spec).unwrap().len(), 2);
        // Aut(Z/9) is cyclic of order 6; the 3-power-order part is {1,4,7}
        let spec = parse_spec("3:[2]").unwrap();
        let pool = p_power_pool(&spec).unwrap();
        let mults: BTreeSet<u64> = pool.iter().map(|a| a.matrix().entries()[0]).collect();
        assert_eq!(mults, BTreeSet::from([1, 4, 7]));
    }

    #[test]
    fn enumerate_c4_finds_both_braces() {
        let spec = parse_spec("2:[2]").unwrap();
        let subs = enumerate_regular_subgroups(&spec, &cfg()).unwrap();
        assert_eq!(subs.len(), 2);
        let prints: Vec<String> = subs
            .iter()
            .map(|s| s.fingerprint().histogram.to_string())
            .collect();
        let mut sorted = prints.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["1:1,2:1,4:2", "1:1,2:3"]);
        // the translation subgroup rho(G) is always among them
        assert!(subs
            .iter()
            .any(|s| s.members().iter().all(|m| m.auto().is_identity())));
    }

    #[test]
    fn enumerate_klein_finds_four_braces() {
        let spec = parse_spec("2:[1,1]").unwrap();
        let subs = enumerate_regular_subgroups(&spec, &cfg()).unwrap();
        assert_eq!(subs.len(), 4);
        let klein_hist = subs
            .iter()
            .filter(|s| s.fingerprint().histogram.to_string() == "1:1,2:3")
            .count();
        let c4_hist = subs
            .iter()
            .filter(|s| s.fingerprint().histogram.to_string() == "1:1,2:1,4:2")
            .count();
        assert_eq!((klein_hist, c4_hist), (1, 3));
        // the C4-shaped ones witness order increase: additive order 2,
        // circle order 4 somewhere
        for s in subs
            .iter()
            .filter(|s| s.fingerprint().invariants != Some(vec![1, 1]))
        {
            let b = s.to_brace(&cfg()).unwrap();
            assert!(!b.check_omega_containment().unwrap().all_contained());
        }
    }

    #[test]
    fn backtracker_agrees_with_naive_oracle() {
        for text in ["2:[2]", "2:[1,1]"] {
            let spec = parse_spec(text).unwrap();
            let fast = enumerate_regular_subgroups(&spec, &cfg()).unwrap();
            let slow = naive_regular_subgroups(&spec).unwrap();
            let fast_keys: BTreeSet<Vec<Vec<u64>>> = fast
                .iter()
                .map(|s| s.canonical_key().iter().map(|e| e.to_vec()).collect())
                .collect();
            let slow_keys: BTreeSet<Vec<Vec<u64>>> = slow
                .iter()
                .map(|s| s.canonical_key().iter().map(|e| e.to_vec()).collect())
                .collect();
            assert_eq!(fast_keys, slow_keys, "{text}");
        }
    }

    #[test]
    fn enumeration_is_deterministic_across_workers() {
        let spec = parse_spec("3:[2]").unwrap();
        let one = enumerate_regular_subgroups(&spec, &cfg()).unwrap();
        let mut wide_cfg = cfg();
        wide_cfg.workers = 4;
        let wide = enumerate_regular_subgroups(&spec, &wide_cfg).unwrap();
        assert_eq!(one, wide);
        assert!(!one.is_empty());
        // small rank: every subgroup carries the C9 histogram
        for s in &one {
            assert_eq!(s.fingerprint().histogram.to_string(), "1:1,3:2,9:6");
        }
    }

    #[test]
    fn enumeration_bounds_are_enforced() {
        // order 81 with |Aut| = 24261120 > 10^4
        let spec = parse_spec("3:[1,1,1,1]").unwrap();
        assert!(matches!(
            enumerate_regular_subgroups(&spec, &cfg()),
            Err(HolError::EnumerationBound { order: 81, .. })
        ));
        // order 32 > 16 with |Aut| = 9999360 > 10^4
        let spec = parse_spec("2:[1,1,1,1,1]").unwrap();
        assert!(matches!(
            enumerate_regular_subgroups(&spec, &cfg()),
            Err(HolError::EnumerationBound { order: 32, .. })
        ));
        // order 128 is out regardless of Aut
        let spec = parse_spec("2:[7]").unwrap();
        assert!(matches!(
            enumerate_regular_subgroups(&spec, &cfg()),
            Err(HolError::EnumerationBound { order: 128, .. })
        ));
    }

    #[test]
    fn dictionary_round_trips() {
        // brace -> subgroup -> brace is the identity on gamma tables
        let b = z4_flip_brace();
        let sub = gamma_to_subgroup(&b).unwrap();
        let back = sub.to_brace(&cfg()).unwrap();
        for g in b.spec().elements().unwrap() {
            assert_eq!(b.gamma().at(&g), back.gamma().at(&g));
        }
        // subgroup -> brace -> subgroup is the identity on every
        // enumerated subgroup of Hol(C9)
        let spec = parse_spec("3:[2]").unwrap();
        for sub in enumerate_regular_subgroups(&spec, &cfg()).unwrap() {
            let brace = sub.to_brace(&cfg()).unwrap();
            let again = gamma_to_subgroup(&brace).unwrap();
            assert_eq!(sub, again);
        }
        // trivial brace <-> rho(G)
        let trivial = Brace::new(GammaFunction::trivial(&spec), &cfg()).unwrap();
        let rho_image = gamma_to_subgroup(&trivial).unwrap();
        assert!(rho_image.members().iter().all(|m| m.auto().is_identity()));
    }

    #[test]
    fn fingerprint_of_translations() {
        let spec = parse_spec("3:[2,1]").unwrap();
        let trivial = Brace::new(GammaFunction::trivial(&spec), &cfg()).unwrap();
        let f = gamma_to_subgroup(&trivial).unwrap().fingerprint();
        assert_eq!(f.histogram, crate::pgroup::order_histogram(&spec));
        assert!(f.abelian);
        assert_eq!(f.center_order, 27);
        assert_eq!(f.invariants, Some(vec![2, 1]));
    }

    #[test]
    fn from_elements_rejects_bad_sets() {
        let spec = parse_spec("2:[2]").unwrap();
        let id = HolElement::identity(&spec);
        // wrong size
        assert!(matches!(
            RegularSubgroup::from_elements(&spec, vec![id.clone()]),
            Err(HolError::WrongSize { got: 1, want: 4 })
        ));
        // right size but not closed: {e, rho(1), rho(2), (neg, 3)}
        let neg = EndoMatrix::new(&spec, &[vec![3]])
            .unwrap()
            .to_automorphism()
            .unwrap();
        let bad = vec![
            id.clone(),
            HolElement::rho(spec.element(&[1])),
            HolElement::rho(spec.element(&[2])),
            HolElement::new(neg, spec.element(&[3])),
        ];
        assert!(matches!(
            RegularSubgroup::from_elements(&spec, bad),
            Err(HolError::NotClosed { .. })
        ));
        // regularity: two members with the same translation
        let dup = vec![
            id.clone(),
            HolElement::rho(spec.element(&[1])),
            HolElement::rho(spec.element(&[1])),
            HolElement::rho(spec.element(&[2])),
        ];
        assert!(matches!(
            RegularSubgroup::from_elements(&spec, dup),
            Err(HolError::NotRegular { .. })
        ));
    }
}
