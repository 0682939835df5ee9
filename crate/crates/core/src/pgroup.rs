//! Finite abelian p-groups in coordinate form.
//!
//! A group is described by a prime `p` and a non-increasing exponent vector
//! `[e1, ..., er]`, read as Z/p^e1 x ... x Z/p^er. Elements are coordinate
//! vectors with coordinate `i` reduced into `[0, p^ei)`. All arithmetic is
//! exact 64-bit integer arithmetic: a spec whose group order would exceed
//! 2^62 is rejected at construction time, and operations that materialise
//! whole element sets enforce a 2^24 cap on the group order.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Cap on group order for operations that materialise element sets.
pub const MATERIALIZE_BOUND: u64 = 1 << 24;

/// Cap on group order for element-only arithmetic (coordinates, orders).
pub const ARITHMETIC_BOUND_LOG2: u32 = 62;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("malformed group spec `{0}`: expected the form p:[e1,...,er]")]
    Malformed(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("exponent {0} is out of range: exponents must be at least 1")]
    ExponentRange(u64),
    #[error("group order {p}^{esum} exceeds the 2^62 arithmetic bound")]
    OrderBound { p: u64, esum: u64 },
    #[error("group order {order} exceeds the 2^24 materialisation bound")]
    MaterializeBound { order: u64 },
    #[error("histogram is not the order profile of any finite abelian p-group: {0}")]
    NotRealizable(String),
}

/// Description of a finite abelian p-group in invariant-factor form.
///
/// Exponents are kept non-increasing, so the textual form is canonical:
/// parsing `3:[1,2]` and `3:[2,1]` yields the same spec, displayed as
/// `3:[2,1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupSpec {
    p: u64,
    exponents: Vec<u32>,
    moduli: Vec<u64>,
    order: u64,
}

/// Parse `p:[e1,...,er]` into a spec. Whitespace is insignificant.
pub fn parse_spec(text: &str) -> Result<Arc<GroupSpec>, GroupError> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let malformed = || GroupError::Malformed(text.trim().to_string());
    let (p_part, rest) = compact.split_once(':').ok_or_else(malformed)?;
    let list = rest
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(malformed)?;
    if p_part.is_empty() || list.is_empty() {
        return Err(malformed());
    }
    let p: u64 = p_part.parse().map_err(|_| malformed())?;
    let mut exponents = Vec::new();
    for field in list.split(',') {
        let e: u64 = field.parse().map_err(|_| malformed())?;
        if e == 0 {
            return Err(GroupError::ExponentRange(e));
        }
        exponents.push(u32::try_from(e).map_err(|_| GroupError::ExponentRange(e))?);
    }
    GroupSpec::new(p, &exponents)
}

impl GroupSpec {
    /// Build a spec from a prime and a list of exponents (any order; they
    /// are sorted non-increasing here).
    pub fn new(p: u64, exponents: &[u32]) -> Result<Arc<GroupSpec>, GroupError> {
        if !is_prime(p) {
            return Err(GroupError::NotPrime(p));
        }
        if exponents.is_empty() {
            return Err(GroupError::Malformed(format!("{p}:[]")));
        }
        let mut exponents = exponents.to_vec();
        if exponents.iter().any(|&e| e == 0) {
            return Err(GroupError::ExponentRange(0));
        }
        exponents.sort_unstable_by(|a, b| b.cmp(a));
        let esum: u64 = exponents.iter().map(|&e| u64::from(e)).sum();
        let order = checked_pow(p, esum).ok_or(GroupError::OrderBound { p, esum })?;
        let moduli = exponents
            .iter()
            .map(|&e| checked_pow(p, u64::from(e)).expect("modulus below order"))
            .collect();
        Ok(Arc::new(GroupSpec {
            p,
            exponents,
            moduli,
            order,
        }))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Exponents `e1 >= e2 >= ... >= er`.
    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// Coordinate moduli `p^ei`.
    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    /// Number of cyclic invariant factors. For an abelian p-group this is
    /// the rank: the largest r such that the group has a subgroup of
    /// exponent p and order p^r.
    pub fn rank(&self) -> u32 {
        self.exponents.len() as u32
    }

    /// Rank strictly below p - 1. Degenerate for p = 2, where it would
    /// require rank 0 and therefore never holds for a nontrivial group.
    pub fn is_small_rank(&self) -> bool {
        u64::from(self.rank()) < self.p - 1
    }

    /// |G| = p^(e1+...+er).
    pub fn order(&self) -> u64 {
        self.order
    }

    /// Exponent of the group, p^e1.
    pub fn group_exponent(&self) -> u64 {
        self.moduli[0]
    }

    /// log_p of the group exponent.
    pub fn exponent_log(&self) -> u32 {
        self.exponents[0]
    }

    /// |Omega_i| = p^(sum_j min(ej, i)), the number of elements whose order
    /// divides p^i. Closed-form; no materialisation.
    pub fn omega_size(&self, i: u32) -> u64 {
        let esum: u64 = self
            .exponents
            .iter()
            .map(|&e| u64::from(e.min(i)))
            .sum();
        checked_pow(self.p, esum).expect("omega size below order")
    }

    /// The identity element.
    pub fn zero(self: &Arc<Self>) -> GroupElement {
        GroupElement {
            spec: Arc::clone(self),
            coords: vec![0; self.exponents.len()],
        }
    }

    /// Element from raw coordinates, reduced modulo the coordinate moduli.
    /// Negative inputs are reduced into range as well.
    pub fn element(self: &Arc<Self>, coords: &[i64]) -> GroupElement {
        assert_eq!(
            coords.len(),
            self.exponents.len(),
            "coordinate count {} does not match rank {}",
            coords.len(),
            self.exponents.len()
        );
        let coords = coords
            .iter()
            .zip(&self.moduli)
            .map(|(&a, &m)| a.rem_euclid(m as i64) as u64)
            .collect();
        GroupElement {
            spec: Arc::clone(self),
            coords,
        }
    }

    /// The j-th standard generator (1 in coordinate j, 0 elsewhere).
    pub fn unit(self: &Arc<Self>, j: usize) -> GroupElement {
        let mut coords = vec![0; self.exponents.len()];
        coords[j] = 1;
        GroupElement {
            spec: Arc::clone(self),
            coords,
        }
    }

    /// Canonical (lexicographic) position of an element, in `0..order()`.
    pub fn index_of(&self, el: &GroupElement) -> u64 {
        debug_assert!(**el.spec() == *self, "mixed group specs");
        let mut idx = 0u64;
        for (a, m) in el.coords.iter().zip(&self.moduli) {
            idx = idx * m + a;
        }
        idx
    }

    /// Inverse of `index_of`.
    pub fn element_at(self: &Arc<Self>, index: u64) -> GroupElement {
        assert!(index < self.order, "element index out of range");
        let mut coords = vec![0u64; self.exponents.len()];
        let mut rest = index;
        for i in (0..coords.len()).rev() {
            coords[i] = rest % self.moduli[i];
            rest /= self.moduli[i];
        }
        GroupElement {
            spec: Arc::clone(self),
            coords,
        }
    }

    /// Iterate the whole group in canonical order. Requires the order to be
    /// within the materialisation bound.
    pub fn elements(self: &Arc<Self>) -> Result<impl Iterator<Item = GroupElement> + '_, GroupError> {
        self.check_materialize()?;
        let spec = Arc::clone(self);
        Ok((0..self.order).map(move |i| spec.element_at(i)))
    }

    pub fn check_materialize(&self) -> Result<(), GroupError> {
        if self.order > MATERIALIZE_BOUND {
            return Err(GroupError::MaterializeBound { order: self.order });
        }
        Ok(())
    }

    // -- raw coordinate helpers used by the hot loops -------------------

    pub(crate) fn add_raw(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        for i in 0..a.len() {
            let s = a[i] + b[i];
            out[i] = if s >= self.moduli[i] { s - self.moduli[i] } else { s };
        }
    }

    pub(crate) fn neg_raw(&self, a: &[u64], out: &mut [u64]) {
        for i in 0..a.len() {
            out[i] = if a[i] == 0 { 0 } else { self.moduli[i] - a[i] };
        }
    }

    pub(crate) fn order_raw(&self, a: &[u64]) -> u64 {
        let mut best = 0u32;
        for i in 0..a.len() {
            let v = if a[i] == 0 {
                self.exponents[i]
            } else {
                let mut v = 0u32;
                let mut x = a[i];
                while x % self.p == 0 {
                    x /= self.p;
                    v += 1;
                }
                v
            };
            best = best.max(self.exponents[i] - v);
        }
        checked_pow(self.p, u64::from(best)).expect("element order below order bound")
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:[", self.p)?;
        for (i, e) in self.exponents.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "]")
    }
}

/// An element of a [`GroupSpec`] group: a reduced coordinate vector.
///
/// Comparison, equality and hashing look at the coordinates only; elements
/// of different groups are never meant to meet, and the arithmetic methods
/// enforce that with a spec assertion.
#[derive(Debug, Clone)]
pub struct GroupElement {
    spec: Arc<GroupSpec>,
    coords: Vec<u64>,
}

impl GroupElement {
    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub(crate) fn from_coords(spec: Arc<GroupSpec>, coords: Vec<u64>) -> GroupElement {
        debug_assert!(coords
            .iter()
            .zip(spec.moduli())
            .all(|(&a, &m)| a < m));
        GroupElement { spec, coords }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&a| a == 0)
    }

    fn assert_same_spec(&self, rhs: &GroupElement) {
        assert!(
            Arc::ptr_eq(&self.spec, &rhs.spec) || self.spec == rhs.spec,
            "mixed group specs: {} vs {}",
            self.spec,
            rhs.spec
        );
    }

    pub fn add(&self, rhs: &GroupElement) -> GroupElement {
        self.assert_same_spec(rhs);
        let mut coords = vec![0u64; self.coords.len()];
        self.spec.add_raw(&self.coords, &rhs.coords, &mut coords);
        GroupElement {
            spec: Arc::clone(&self.spec),
            coords,
        }
    }

    pub fn neg(&self) -> GroupElement {
        let mut coords = vec![0u64; self.coords.len()];
        self.spec.neg_raw(&self.coords, &mut coords);
        GroupElement {
            spec: Arc::clone(&self.spec),
            coords,
        }
    }

    pub fn sub(&self, rhs: &GroupElement) -> GroupElement {
        self.add(&rhs.neg())
    }

    /// Scalar multiple `n * a` (n may be any integer; it acts through the
    /// residue class modulo each coordinate modulus).
    pub fn smul(&self, n: i64) -> GroupElement {
        let coords = self
            .coords
            .iter()
            .zip(self.spec.moduli())
            .map(|(&a, &m)| {
                let n = n.rem_euclid(m as i64) as u128;
                ((n * a as u128) % m as u128) as u64
            })
            .collect();
        GroupElement {
            spec: Arc::clone(&self.spec),
            coords,
        }
    }

    /// Multiplicative order: the least n >= 1 with n*a = 0. Always a power
    /// of p, computed from coordinate valuations.
    pub fn order(&self) -> u64 {
        self.spec.order_raw(&self.coords)
    }

    /// Canonical index within the group.
    pub fn index(&self) -> u64 {
        self.spec.index_of(self)
    }
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords
    }
}

impl Eq for GroupElement {}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.coords.cmp(&other.coords)
    }
}

impl std::hash::Hash for GroupElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.coords.hash(state);
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Parse `(a1,...,ar)` as an element of `spec`. Entries may be any signed
/// base-10 integers; they are reduced into range.
pub fn parse_element(spec: &Arc<GroupSpec>, text: &str) -> Result<GroupElement, GroupError> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let malformed = || GroupError::Malformed(text.trim().to_string());
    let inner = compact
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(malformed)?;
    let mut coords = Vec::new();
    for field in inner.split(',') {
        coords.push(field.parse::<i64>().map_err(|_| malformed())?);
    }
    if coords.len() != spec.exponents().len() {
        return Err(malformed());
    }
    Ok(spec.element(&coords))
}

/// A subgroup of the additive group, materialised as a sorted element list.
///
/// The element list is closed under addition and negation by construction;
/// membership is a binary search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgroup {
    spec: Arc<GroupSpec>,
    generators: Vec<GroupElement>,
    elements: Vec<GroupElement>,
}

impl Subgroup {
    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    /// Sorted, duplicate-free element list.
    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn order(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn contains(&self, el: &GroupElement) -> bool {
        self.elements.binary_search(el).is_ok()
    }
}

/// Closure of a generating set under the group operation.
pub fn span(spec: &Arc<GroupSpec>, generators: &[GroupElement]) -> Result<Subgroup, GroupError> {
    spec.check_materialize()?;
    let mut set = std::collections::BTreeSet::new();
    set.insert(spec.zero());
    for g in generators {
        assert!(
            **g.spec() == **spec,
            "generator from a different group: {} vs {}",
            g.spec(),
            spec
        );
        // <S, g> = { s + k*g : s in S, 0 <= k < order(g) }, since the
        // group is abelian.
        let o = g.order();
        let mut fresh = Vec::new();
        for s in &set {
            let mut cur = s.clone();
            for _ in 1..o {
                cur = cur.add(g);
                fresh.push(cur.clone());
            }
        }
        set.extend(fresh);
    }
    Ok(Subgroup {
        spec: Arc::clone(spec),
        generators: generators.to_vec(),
        elements: set.into_iter().collect(),
    })
}

/// Omega_i: the subgroup of elements whose order divides p^i.
pub fn omega_set(spec: &Arc<GroupSpec>, i: u32) -> Result<Subgroup, GroupError> {
    spec.check_materialize()?;
    let cutoff = checked_pow(spec.p(), u64::from(i.min(spec.exponent_log())))
        .expect("cutoff below order bound");
    let elements: Vec<GroupElement> = spec
        .elements()?
        .filter(|el| cutoff % el.order() == 0)
        .collect();
    // p^max(0, ej - i) times the j-th generator, dropping redundant zeros:
    // a generating set realising the same subgroup.
    let generators = (0..spec.exponents().len())
        .map(|j| {
            let shift = spec.exponents()[j].saturating_sub(i);
            let scale = checked_pow(spec.p(), u64::from(shift)).expect("scale below modulus");
            spec.unit(j).smul(scale as i64)
        })
        .filter(|g| !g.is_zero())
        .collect();
    Ok(Subgroup {
        spec: Arc::clone(spec),
        generators,
        elements,
    })
}

/// Every subgroup of the additive group. A lattice walk: repeatedly extend
/// known subgroups by one new element and close. Intended for small groups;
/// bounded by the materialisation cap and practical only well below it.
pub fn all_subgroups(spec: &Arc<GroupSpec>) -> Result<Vec<Subgroup>, GroupError> {
    spec.check_materialize()?;
    let everything: Vec<GroupElement> = spec.elements()?.collect();
    let trivial = span(spec, &[])?;
    let mut seen = std::collections::BTreeSet::new();
    seen.insert(trivial.elements.clone());
    let mut queue = vec![trivial.clone()];
    let mut found = vec![trivial];
    while let Some(h) = queue.pop() {
        for g in &everything {
            if h.contains(g) {
                continue;
            }
            let mut gens = h.generators.clone();
            gens.push(g.clone());
            let bigger = span(spec, &gens)?;
            if seen.insert(bigger.elements.clone()) {
                queue.push(bigger.clone());
                found.push(bigger);
            }
        }
    }
    found.sort_by(|a, b| {
        (a.elements.len(), &a.elements).cmp(&(b.elements.len(), &b.elements))
    });
    Ok(found)
}

/// Element counts by order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OrderHistogram {
    counts: BTreeMap<u64, u64>,
}

impl OrderHistogram {
    pub fn from_counts(counts: BTreeMap<u64, u64>) -> OrderHistogram {
        OrderHistogram { counts }
    }

    pub fn from_orders(orders: impl IntoIterator<Item = u64>) -> OrderHistogram {
        let mut counts = BTreeMap::new();
        for o in orders {
            *counts.entry(o).or_insert(0) += 1;
        }
        OrderHistogram { counts }
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn count(&self, order: u64) -> u64 {
        self.counts.get(&order).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

impl fmt::Display for OrderHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (order, count)) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{order}:{count}")?;
        }
        Ok(())
    }
}

/// Exact order histogram of the additive group, by the standard counting
/// formula: exactly |Omega_i| - |Omega_(i-1)| elements have order p^i.
/// The enumeration-based cross-check lives in the tests.
pub fn order_histogram(spec: &GroupSpec) -> OrderHistogram {
    let mut counts = BTreeMap::new();
    let mut below = 0u64;
    for i in 0..=spec.exponent_log() {
        let upto = spec.omega_size(i);
        if upto > below {
            let order = checked_pow(spec.p(), u64::from(i)).expect("order below bound");
            counts.insert(order, upto - below);
        }
        below = upto;
    }
    OrderHistogram { counts }
}

/// Recover the spec of a finite abelian p-group from its order histogram.
///
/// Order statistics determine an abelian p-group up to isomorphism: the
/// count of factors with exponent >= i is log_p |Omega_i| - log_p |Omega_(i-1)|,
/// and the exponent vector is the conjugate of that profile. Errors if the
/// histogram is not realised by any spec (and, as a final check, round-trips
/// the reconstruction through `order_histogram`).
pub fn abelian_invariants_from_histogram(
    histogram: &OrderHistogram,
) -> Result<Arc<GroupSpec>, GroupError> {
    let fail = |msg: &str| GroupError::NotRealizable(format!("{msg} (got {histogram})"));
    if histogram.count(1) != 1 {
        return Err(fail("count at order 1 must be exactly 1"));
    }
    let p = *histogram
        .counts
        .keys()
        .find(|&&o| o > 1)
        .ok_or_else(|| fail("trivial profile has no p"))?;
    if !is_prime(p) {
        return Err(fail("smallest order above 1 is not prime"));
    }
    // Cumulative sizes |Omega_i| must be powers of p and the orders present
    // must be the consecutive powers of p.
    let mut steps = Vec::new(); // number of factors with exponent >= i
    let mut cumulative = 1u64;
    let mut prev_log = 0u64;
    let mut expected = 1u64;
    for (&order, &count) in &histogram.counts {
        if order != expected {
            return Err(fail("orders must be consecutive powers of a single prime"));
        }
        expected = expected
            .checked_mul(p)
            .ok_or(GroupError::OrderBound { p, esum: 0 })?;
        if order == 1 {
            continue;
        }
        cumulative = cumulative
            .checked_add(count)
            .ok_or_else(|| fail("counts overflow"))?;
        let log = log_exact(cumulative, p).ok_or_else(|| fail("|Omega_i| must be a power of p"))?;
        if log <= prev_log {
            return Err(fail("cumulative counts must strictly increase"));
        }
        steps.push(log - prev_log);
        prev_log = log;
    }
    // steps must be non-increasing for a conjugate partition to exist.
    if steps.windows(2).any(|w| w[1] > w[0]) {
        return Err(fail("order profile is not a partition profile"));
    }
    let top = steps[0];
    let exponents: Vec<u32> = (1..=top)
        .map(|t| steps.iter().filter(|&&d| d >= t).count() as u32)
        .collect();
    let spec = GroupSpec::new(p, &exponents)?;
    if order_histogram(&spec) != *histogram {
        return Err(fail("profile fails the reconstruction round-trip"));
    }
    Ok(spec)
}

pub(crate) fn log_exact(mut n: u64, p: u64) -> Option<u64> {
    let mut log = 0;
    while n > 1 {
        if n % p != 0 {
            return None;
        }
        n /= p;
        log += 1;
    }
    Some(log)
}

pub(crate) fn checked_pow(base: u64, exp: u64) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
        if acc > (1u64 << ARITHMETIC_BOUND_LOG2) {
            return None;
        }
    }
    Some(acc)
}

/// Deterministic Miller-Rabin for u64 (the classical 12-witness set).
pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}
