//! Skew braces: a validated gamma function together with the circle
//! operation it induces,
//!
//! ```text
//!     a ∘ g = apply(γ(g), a) + g
//! ```
//!
//! and the checkable statements about the pair of group structures living
//! on the same carrier — order transfer between (G,·) and (G,∘), circle
//! powers by iteration and by closed formula, Ω-set containment, the
//! exponent-p subgroup rank of (G,∘), the two-implies-third subgroup
//! criterion, and the brace axiom in both orientations.
//!
//! Everything here is derived data over an immutable [`Brace`]; sweeps
//! follow the determinism rules of [`crate::sweep`].

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::gamma::{GammaFunction, GammaValidation};
use crate::morphism::EndoMatrix;
use crate::pgroup::{checked_pow, order_histogram, GroupElement, GroupError, GroupSpec, OrderHistogram};
use crate::sweep::SweepCfg;

/// Cap on group order for the exponent-p-subgroup backtracking search.
pub const RANK_BACKTRACK_BOUND: u64 = 1 << 12;

/// Cap on the triple count for exhaustive brace-axiom sweeps (|G|³).
pub const TRIPLE_SWEEP_BOUND: u64 = 1 << 24;

#[derive(Debug, Error)]
pub enum BraceError {
    #[error("gamma validation failed: the functional equation does not balance at h={h}, g={g}")]
    ValidationFailed { h: GroupElement, g: GroupElement },
    #[error("group order {order} exceeds the 2^12 rank-backtracking bound")]
    RankBound { order: u64 },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// How a triple sweep covered its domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Exhaustive,
    Sampled,
}

/// Result of a brace-axiom sweep (either orientation). `witness` is the
/// earliest violating triple under the sweep order, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub mode: SweepMode,
    pub triples: u64,
    pub witness: Option<(GroupElement, GroupElement, GroupElement)>,
}

impl AxiomReport {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            SweepMode::Exhaustive => "exhaustive",
            SweepMode::Sampled => "sampled",
        };
        match &self.witness {
            None => write!(f, "{mode}-pass ({} triples)", self.triples),
            Some((a, b, c)) => write!(f, "{mode}-fail (witness a={a}, b={b}, c={c})"),
        }
    }
}

/// One level of the Ω-containment report: is every element of additive
/// order dividing p^level also of circle order dividing p^level?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaLevel {
    pub level: u32,
    pub contained: bool,
    /// Earliest element (canonical order) inside Ω_level(G,·) but outside
    /// Ω_level(G,∘).
    pub witness: Option<GroupElement>,
}

/// Per-level verdicts for Ω_i(G,·) ⊆ Ω_i(G,∘), i.e. for "circle order
/// never exceeds additive order". Guaranteed to be all-true when the
/// additive rank is at most p−1; computed unconditionally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaContainment {
    pub levels: Vec<OmegaLevel>,
}

impl OmegaContainment {
    pub fn all_contained(&self) -> bool {
        self.levels.iter().all(|l| l.contained)
    }
}

impl fmt::Display for OmegaContainment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.all_contained() {
            return write!(f, "all {} levels contained", self.levels.len());
        }
        let broken: Vec<String> = self
            .levels
            .iter()
            .filter(|l| !l.contained)
            .map(|l| match &l.witness {
                Some(w) => format!("level {} (witness {})", l.level, w),
                None => format!("level {}", l.level),
            })
            .collect();
        write!(f, "violated at {}", broken.join(", "))
    }
}

/// Verdict of the rank-transfer check between (G,·) and (G,∘).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankTransferVerdict {
    /// Every asserted clause held.
    Pass,
    /// p = 2: no nontrivial group has rank below p−1 = 1, so the statement
    /// has no content here.
    Vacuous,
    /// Group too large for the backtracking rank computation.
    Skipped,
    /// A clause failed — see the fields.
    Fail,
}

/// Rank of (G,·) vs rank of (G,∘): the "small rank" property (rank < p−1)
/// must transfer in both directions, and when both sides are small the two
/// order histograms must agree element-for-element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTransferReport {
    pub verdict: RankTransferVerdict,
    pub rank_additive: u32,
    pub small_additive: bool,
    pub rank_circle: Option<u32>,
    pub small_circle: Option<bool>,
    pub iff_holds: Option<bool>,
    /// Some iff both sides have small rank.
    pub histograms_equal: Option<bool>,
}

impl fmt::Display for RankTransferReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.verdict {
            RankTransferVerdict::Skipped => write!(f, "skipped (group too large)"),
            v => {
                let tag = match v {
                    RankTransferVerdict::Pass => "pass",
                    RankTransferVerdict::Vacuous => "vacuous",
                    RankTransferVerdict::Fail => "fail",
                    RankTransferVerdict::Skipped => unreachable!(),
                };
                write!(
                    f,
                    "{tag}: rank(+)={} rank(circle)={}",
                    self.rank_additive,
                    self.rank_circle.map_or("?".into(), |r| r.to_string()),
                )?;
                if let Some(eq) = self.histograms_equal {
                    write!(f, " histograms{}equal", if eq { " " } else { " NOT " })?;
                }
                Ok(())
            }
        }
    }
}

/// The three conditions of the two-implies-third subgroup criterion,
/// evaluated on one subset H ⊆ G: H is an additive subgroup; H is a circle
/// subgroup; H is invariant under γ(h) for every h ∈ H.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriadReport {
    pub additive: bool,
    pub circle: bool,
    pub invariant: bool,
}

impl TriadReport {
    pub fn count_true(&self) -> u32 {
        u32::from(self.additive) + u32::from(self.circle) + u32::from(self.invariant)
    }

    /// The criterion: any two of the conditions imply the third, so a
    /// score of exactly two is impossible for a genuine brace.
    pub fn consistent(&self) -> bool {
        self.count_true() != 2
    }

    pub fn all(&self) -> bool {
        self.count_true() == 3
    }
}

impl fmt::Display for TriadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "additive={} circle={} invariant={}",
            self.additive, self.circle, self.invariant
        )
    }
}

/// An immutable validated skew brace: the additive group of the gamma
/// function's spec, plus the circle group the gamma induces.
#[derive(Debug, Clone)]
pub struct Brace {
    gamma: GammaFunction,
    validation: GammaValidation,
}

impl Brace {
    /// Validate `gamma` under `cfg` and wrap it. Fails with the earliest
    /// witness pair if the functional equation does not balance.
    pub fn new(gamma: GammaFunction, cfg: &SweepCfg) -> Result<Brace, BraceError> {
        match gamma.validate(cfg) {
            GammaValidation::Failed { h, g } => Err(BraceError::ValidationFailed { h, g }),
            validation => Ok(Brace { gamma, validation }),
        }
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        self.gamma.spec()
    }

    pub fn gamma(&self) -> &GammaFunction {
        &self.gamma
    }

    /// The validation report recorded at construction.
    pub fn validation(&self) -> &GammaValidation {
        &self.validation
    }

    /// a ∘ g = apply(γ(g), a) + g.
    pub fn circle(&self, a: &GroupElement, g: &GroupElement) -> GroupElement {
        self.gamma.at(g).apply(a).add(g)
    }

    /// The ∘-inverse: apply(γ(g)⁻¹, −g), the unique x with x ∘ g = 0.
    pub fn circle_inverse(&self, g: &GroupElement) -> GroupElement {
        self.gamma.at(g).apply_inv(&g.neg())
    }

    /// n-fold circle power by plain iteration: 0, g, g∘g, (g∘g)∘g, …
    /// This is the ground-truth evaluator; the closed formula below is
    /// checked against it.
    pub fn circle_power_iter(&self, g: &GroupElement, n: u64) -> GroupElement {
        let mut acc = self.spec().zero();
        for _ in 0..n {
            acc = self.circle(&acc, g);
        }
        acc
    }

    /// The p-th circle power by the closed formula
    ///
    /// ```text
    ///   g^{∘p} = apply(Σ_{j=0}^{p−2} C(p, j+1)·δ^j, g) + apply(δ^{p−1}, g),
    ///   δ = γ(g) − id.
    /// ```
    ///
    /// δ is nilpotent (γ(g) has p-power order, hence is unipotent mod p),
    /// so the sum is cut short as soon as δ^j vanishes; binomials are
    /// carried exactly in 128 bits and reduced mod p^{e₁} only when they
    /// scale a matrix.
    pub fn circle_power_formula(&self, g: &GroupElement) -> GroupElement {
        let spec = self.spec();
        let p = spec.p();
        let top_modulus = spec.moduli()[0];
        let delta = self.gamma.at(g).matrix().sub(&EndoMatrix::identity(spec));
        let zero_matrix = EndoMatrix::zero(spec);

        let mut power_sum = zero_matrix.clone();
        let mut delta_pow = EndoMatrix::identity(spec); // δ^j
        let mut binom: u128 = u128::from(p); // C(p, j+1)
        for j in 0..p - 1 {
            if delta_pow == zero_matrix {
                break;
            }
            let reduced = (binom % u128::from(top_modulus)) as i64;
            power_sum = power_sum.add(&delta_pow.scale(reduced));
            // advance C(p, j+1) -> C(p, j+2); the division is exact
            binom = binom
                .checked_mul(u128::from(p - j - 1))
                .expect("binomial fits 128 bits within the order bound")
                / u128::from(j + 2);
            delta_pow = delta_pow.then(&delta);
        }
        // after the loop delta_pow = δ^{p−1} (or a vanished power)
        power_sum.apply(g).add(&delta_pow.apply(g))
    }

    /// Order of g in (G,∘), by repeated p-th powering of the iterative
    /// evaluator (orders are p-powers because |G| is).
    pub fn circle_order(&self, g: &GroupElement) -> u64 {
        let p = self.spec().p();
        let cap: u32 = self.spec().exponents().iter().sum();
        let mut current = g.clone();
        let mut steps = 0u32;
        while !current.is_zero() {
            assert!(
                steps <= cap,
                "circle order exceeds the group order: invalid brace"
            );
            current = self.circle_power_iter(&current, p);
            steps += 1;
        }
        checked_pow(p, u64::from(steps)).expect("order divides group order")
    }

    /// Circle order of every element, in canonical element order.
    fn all_circle_orders(&self) -> Result<Vec<u64>, BraceError> {
        Ok(self
            .spec()
            .elements()?
            .map(|g| self.circle_order(&g))
            .collect())
    }

    /// The set of elements of circle order dividing p^i — not in general a
    /// subgroup of (G,∘). Canonical element order.
    pub fn omega_circle(&self, i: u32) -> Result<Vec<GroupElement>, BraceError> {
        let bound = checked_pow(self.spec().p(), u64::from(i)).unwrap_or(u64::MAX);
        let orders = self.all_circle_orders()?;
        Ok(self
            .spec()
            .elements()?
            .zip(orders)
            .filter(|(_, o)| *o <= bound)
            .map(|(g, _)| g)
            .collect())
    }

    /// Element counts by circle order.
    pub fn order_histogram_circle(&self) -> Result<OrderHistogram, BraceError> {
        Ok(OrderHistogram::from_orders(self.all_circle_orders()?))
    }

    /// For each level i, check Ω_i(G,·) ⊆ Ω_i(G,∘) — equivalently, that no
    /// element's order increases from (G,·) to (G,∘). Reports the earliest
    /// witness per violated level.
    pub fn check_omega_containment(&self) -> Result<OmegaContainment, BraceError> {
        let spec = self.spec();
        let p = spec.p();
        let mut top_level = spec.exponent_log();
        let mut violations: Vec<(u32, u32, GroupElement)> = Vec::new(); // (from, to, witness)
        for g in spec.elements()? {
            let add_log =
                crate::pgroup::log_exact(g.order(), p).expect("additive order is a p-power") as u32;
            let circle_log = crate::pgroup::log_exact(self.circle_order(&g), p)
                .expect("circle order is a p-power") as u32;
            top_level = top_level.max(circle_log);
            if circle_log > add_log {
                // g sits in Ω_i(·) \ Ω_i(∘) exactly for add_log ≤ i < circle_log
                violations.push((add_log.max(1), circle_log - 1, g));
            }
        }
        let levels = (1..=top_level.max(1))
            .map(|level| {
                let witness = violations
                    .iter()
                    .filter(|(lo, hi, _)| *lo <= level && level <= *hi)
                    .map(|(_, _, g)| g)
                    .min_by_key(|g| g.index())
                    .cloned();
                OmegaLevel {
                    level,
                    contained: witness.is_none(),
                    witness,
                }
            })
            .collect();
        Ok(OmegaContainment { levels })
    }

    /// Rank of (G,·): the largest r with an exponent-p subgroup of order
    /// p^r. For an abelian group this is the number of cyclic factors
    /// (Ω₁ itself is that subgroup, and exponent-p subgroups are
    /// subgroups of Ω₁).
    pub fn rank_additive(&self) -> u32 {
        self.spec().rank()
    }

    /// Rank of (G,∘) by backtracking over exponent-p subgroups.
    pub fn rank_circle(&self) -> Result<u32, BraceError> {
        let n = self.spec().order();
        if n > RANK_BACKTRACK_BOUND {
            return Err(BraceError::RankBound { order: n });
        }
        let orders = self.all_circle_orders()?;
        let elements: Vec<GroupElement> = self.spec().elements()?.collect();
        let mul = |i: u32, j: u32| -> u32 {
            self.circle(&elements[i as usize], &elements[j as usize]).index() as u32
        };
        Ok(rank_backtrack(self.spec().p(), &orders, mul))
    }

    /// Rank transfer between (G,·) and (G,∘): "rank < p−1" must hold on
    /// both sides or neither, and when it holds on both the order
    /// histograms must coincide. For p = 2 the property is vacuous (rank
    /// < 1 never happens for a nontrivial group) and is reported as such.
    pub fn check_small_rank_transfer(&self) -> RankTransferReport {
        let spec = self.spec();
        let rank_additive = self.rank_additive();
        let small_additive = spec.is_small_rank();
        let rank_circle = match self.rank_circle() {
            Ok(r) => r,
            Err(_) => {
                return RankTransferReport {
                    verdict: RankTransferVerdict::Skipped,
                    rank_additive,
                    small_additive,
                    rank_circle: None,
                    small_circle: None,
                    iff_holds: None,
                    histograms_equal: None,
                }
            }
        };
        let small_circle = u64::from(rank_circle) < spec.p() - 1;
        let iff_holds = small_additive == small_circle;
        let histograms_equal = if small_additive && small_circle {
            let additive = order_histogram(spec);
            let circle = self
                .order_histogram_circle()
                .expect("within materialize bound: order within rank bound");
            Some(additive == circle)
        } else {
            None
        };
        let verdict = if spec.p() == 2 {
            RankTransferVerdict::Vacuous
        } else if iff_holds && histograms_equal != Some(false) {
            RankTransferVerdict::Pass
        } else {
            RankTransferVerdict::Fail
        };
        RankTransferReport {
            verdict,
            rank_additive,
            small_additive,
            rank_circle: Some(rank_circle),
            small_circle: Some(small_circle),
            iff_holds: Some(iff_holds),
            histograms_equal,
        }
    }

    /// Evaluate the three subgroup conditions on a subset of G given by
    /// its members (duplicates tolerated): additive closure, circle
    /// closure, and γ(H)-invariance. Any two imply the third, so
    /// [`TriadReport::consistent`] must hold for every subset of a genuine
    /// brace.
    pub fn check_subgroup_triad(&self, members: &[GroupElement]) -> TriadReport {
        let set: BTreeSet<&GroupElement> = members.iter().collect();
        let has_zero = members.first().map(|m| {
            let zero = m.spec().zero();
            set.contains(&zero)
        });
        let has_zero = has_zero.unwrap_or(false);

        let mut additive = has_zero;
        let mut circle = has_zero;
        let mut invariant = !members.is_empty();
        'outer: for a in &set {
            for b in &set {
                if additive && !set.contains(&a.add(b)) {
                    additive = false;
                }
                if circle && !set.contains(&self.circle(a, b)) {
                    circle = false;
                }
                if invariant && !set.contains(&self.gamma.at(b).apply(a)) {
                    invariant = false;
                }
                if !additive && !circle && !invariant {
                    break 'outer;
                }
            }
        }
        TriadReport {
            additive,
            circle,
            invariant,
        }
    }

    fn axiom_sweep<F>(&self, cfg: &SweepCfg, eval: F) -> AxiomReport
    where
        F: Fn(&GroupElement, &GroupElement, &GroupElement) -> bool + Sync,
    {
        let spec = self.spec();
        let n = spec.order();
        if n.checked_pow(3).is_some_and(|t| t <= TRIPLE_SWEEP_BOUND) {
            let total = n * n * n;
            let fail = cfg.scan_min_fail(total, |s| {
                let a = spec.element_at(s / (n * n));
                let b = spec.element_at((s / n) % n);
                let c = spec.element_at(s % n);
                eval(&a, &b, &c)
            });
            AxiomReport {
                mode: SweepMode::Exhaustive,
                triples: total,
                witness: fail.map(|s| {
                    (
                        spec.element_at(s / (n * n)),
                        spec.element_at((s / n) % n),
                        spec.element_at(s % n),
                    )
                }),
            }
        } else {
            let samples = cfg.sample_indices(3 * cfg.sample_triples, n);
            let fail = cfg.scan_min_fail(cfg.sample_triples, |i| {
                let k = 3 * i as usize;
                let a = spec.element_at(samples[k]);
                let b = spec.element_at(samples[k + 1]);
                let c = spec.element_at(samples[k + 2]);
                eval(&a, &b, &c)
            });
            AxiomReport {
                mode: SweepMode::Sampled,
                triples: cfg.sample_triples,
                witness: fail.map(|i| {
                    let k = 3 * i as usize;
                    (
                        spec.element_at(samples[k]),
                        spec.element_at(samples[k + 1]),
                        spec.element_at(samples[k + 2]),
                    )
                }),
            }
        }
    }

    /// The brace axiom for (G,·,∘): ((a+b)∘c) − c = ((a∘c) − c) + ((b∘c) − c).
    /// Exhaustive when |G|³ ≤ 2²⁴, else over `cfg.sample_triples` seeded
    /// random triples.
    pub fn check_brace_axiom(&self, cfg: &SweepCfg) -> AxiomReport {
        self.axiom_sweep(cfg, |a, b, c| {
            let lhs = self.circle(&a.add(b), c).sub(c);
            let rhs = self.circle(a, c).sub(c).add(&self.circle(b, c).sub(c));
            lhs == rhs
        })
    }

    /// The brace axiom with the two operations exchanged — does (G,∘,·)
    /// also form a skew brace? ((a∘b)+c)∘c^{⊖1} = ((a+c)∘c^{⊖1}) ∘ ((b+c)∘c^{⊖1}).
    pub fn check_biskew_axiom(&self, cfg: &SweepCfg) -> AxiomReport {
        self.axiom_sweep(cfg, |a, b, c| {
            let c_inv = self.circle_inverse(c);
            let lhs = self.circle(&self.circle(a, b).add(c), &c_inv);
            let rhs = self.circle(
                &self.circle(&a.add(c), &c_inv),
                &self.circle(&b.add(c), &c_inv),
            );
            lhs == rhs
        })
    }

    /// Convenience wrapper: does the swapped axiom hold under `cfg`?
    pub fn is_biskew(&self, cfg: &SweepCfg) -> bool {
        self.check_biskew_axiom(cfg).holds()
    }
}

/// Exact maximal exponent-p subgroup rank of the group given by `mul` on
/// element indices (identity at index 0) with the given element orders.
///
/// Backtracking: grow an exponent-p subgroup S by adjoining an order-p
/// element x ∉ S that normalizes S; then T = S∘⟨x⟩ is a subgroup of order
/// p·|S|, kept when it still has exponent p. Every exponent-p subgroup K
/// is reached this way: inside the p-group K any proper subgroup is
/// properly contained in its normalizer, so a chain {0} = K₀ ◁ K₁ ◁ … ◁ K
/// with index-p steps exists and each step adjoins such an x. Visited
/// subgroups are deduplicated by their sorted member list.
pub(crate) fn rank_backtrack<M>(p: u64, orders: &[u64], mul: M) -> u32
where
    M: Fn(u32, u32) -> u32,
{
    let candidates: Vec<u32> = (0..orders.len() as u32)
        .filter(|&i| orders[i as usize] == p)
        .collect();

    fn grow<M: Fn(u32, u32) -> u32>(
        s: &BTreeSet<u32>,
        p: u64,
        orders: &[u64],
        candidates: &[u32],
        mul: &M,
        visited: &mut BTreeSet<Vec<u32>>,
        best: &mut u32,
    ) {
        'cand: for &x in candidates {
            if s.contains(&x) {
                continue;
            }
            // x^{∘(p−1)} = x^{⊖1} since x has order p
            let mut x_inv = 0u32;
            for _ in 0..p - 1 {
                x_inv = mul(x_inv, x);
            }
            for &a in s {
                if !s.contains(&mul(mul(x_inv, a), x)) {
                    continue 'cand; // x does not normalize S
                }
            }
            // T = S ∘ ⟨x⟩, a subgroup because S is normalized and x^p ∈ S
            let mut t = BTreeSet::new();
            let mut x_pow = 0u32;
            for _ in 0..p {
                for &a in s {
                    let e = mul(a, x_pow);
                    if orders[e as usize] > p {
                        continue 'cand; // exponent exceeds p
                    }
                    t.insert(e);
                }
                x_pow = mul(x_pow, x);
            }
            debug_assert_eq!(t.len() as u64, s.len() as u64 * p);
            let key: Vec<u32> = t.iter().copied().collect();
            if visited.insert(key) {
                let log = (t.len() as u64).ilog(p);
                *best = (*best).max(log);
                grow(&t, p, orders, candidates, mul, visited, best);
            }
        }
    }

    let mut best = 0;
    let mut visited = BTreeSet::new();
    let seed: BTreeSet<u32> = [0u32].into();
    grow(&seed, p, orders, &candidates, &mul, &mut visited, &mut best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::GammaFunction;
    use crate::pgroup::parse_spec;

    fn cfg() -> SweepCfg {
        SweepCfg::default()
    }

    /// The running 2:[2] example: c = parity, A = negation on Z/4, giving
    /// a circle group isomorphic to the Klein group.
    fn z4_flip_brace() -> Brace {
        let g = parse_spec("2:[2]").unwrap();
        let a = EndoMatrix::new(&g, &[vec![3]])
            .unwrap()
            .to_automorphism()
            .unwrap();
        let gamma = GammaFunction::from_kernel_hom(&g, &[1], 1, &a).unwrap();
        Brace::new(gamma, &cfg()).unwrap()
    }

    fn trivial_brace(text: &str) -> Brace {
        let g = parse_spec(text).unwrap();
        Brace::new(GammaFunction::trivial(&g), &cfg()).unwrap()
    }

    #[test]
    fn trivial_brace_circle_is_addition() {
        let b = trivial_brace("3:[2,1]");
        let spec = b.spec().clone();
        for x in spec.elements().unwrap() {
            for y in spec.elements().unwrap() {
                assert_eq!(b.circle(&x, &y), x.add(&y));
            }
            assert_eq!(b.circle_inverse(&x), x.neg());
            assert_eq!(b.circle_order(&x), x.order());
        }
        assert_eq!(
            b.order_histogram_circle().unwrap(),
            order_histogram(&spec)
        );
    }

    #[test]
    fn z4_flip_circle_values() {
        let b = z4_flip_brace();
        let e = |v: i64| b.spec().element(&[v]);
        // γ(1) = −1: 1∘1 = −1+1 = 0, 2∘1 = −2+1 = 3
        assert_eq!(b.circle(&e(1), &e(1)), e(0));
        assert_eq!(b.circle(&e(2), &e(1)), e(3));
        // identities on either side
        for v in 0..4 {
            assert_eq!(b.circle(&e(v), &e(0)), e(v));
            assert_eq!(b.circle(&e(0), &e(v)), e(v));
        }
        // circle_inverse(1) = apply([[3]]⁻¹, −1) = 3·3 = 1
        assert_eq!(b.circle_inverse(&e(1)), e(1));
        for v in 0..4 {
            assert_eq!(b.circle(&b.circle_inverse(&e(v)), &e(v)), e(0));
            assert_eq!(b.circle(&e(v), &b.circle_inverse(&e(v))), e(0));
        }
    }

    #[test]
    fn z4_flip_is_klein_under_circle() {
        let b = z4_flip_brace();
        let e = |v: i64| b.spec().element(&[v]);
        assert_eq!(b.circle_order(&e(0)), 1);
        assert_eq!(b.circle_order(&e(1)), 2);
        assert_eq!(e(1).order(), 4);
        let hist = b.order_histogram_circle().unwrap();
        assert_eq!(hist.to_string(), "1:1,2:3");
        // whole group has exponent 2 under ∘, so circle rank is 2
        assert_eq!(b.rank_circle().unwrap(), 2);
        assert_eq!(b.rank_additive(), 1);
    }

    #[test]
    fn circle_is_associative_small() {
        // independent associativity oracle over all triples
        for b in [z4_flip_brace(), trivial_brace("2:[1,1]")] {
            let spec = b.spec().clone();
            let els: Vec<_> = spec.elements().unwrap().collect();
            for x in &els {
                for y in &els {
                    for z in &els {
                        assert_eq!(
                            b.circle(&b.circle(x, y), z),
                            b.circle(x, &b.circle(y, z))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_is_circle_homomorphism() {
        let b = z4_flip_brace();
        let spec = b.spec().clone();
        for h in spec.elements().unwrap() {
            for g in spec.elements().unwrap() {
                let left = b.gamma().at(&b.circle(&h, &g));
                let right = b.gamma().at(&h).then(b.gamma().at(&g));
                assert_eq!(left.matrix(), right.matrix());
            }
        }
    }

    #[test]
    fn circle_power_iter_basics() {
        let b = z4_flip_brace();
        let e = |v: i64| b.spec().element(&[v]);
        assert_eq!(b.circle_power_iter(&e(3), 0), e(0));
        assert_eq!(b.circle_power_iter(&e(3), 1), e(3));
        assert_eq!(b.circle_power_iter(&e(1), 2), e(0));
    }

    #[test]
    fn power_formula_matches_iteration() {
        // 2:[2] by hand: δ(1) = [[2]], so the formula gives
        // apply([[2]],1) + apply([[2]],1) = 2+2 = 0
        let b = z4_flip_brace();
        let e = |v: i64| b.spec().element(&[v]);
        assert_eq!(b.circle_power_formula(&e(1)), e(0));
        for v in 0..4 {
            assert_eq!(
                b.circle_power_formula(&e(v)),
                b.circle_power_iter(&e(v), 2),
                "element {v}"
            );
        }
        // trivial gamma: formula must collapse to p·g
        let t = trivial_brace("5:[2]");
        for g in t.spec().elements().unwrap() {
            assert_eq!(t.circle_power_formula(&g), g.smul(5));
            assert_eq!(t.circle_power_formula(&g), t.circle_power_iter(&g, 5));
        }
    }

    #[test]
    fn omega_circle_sets() {
        let b = z4_flip_brace();
        assert_eq!(b.omega_circle(0).unwrap(), vec![b.spec().zero()]);
        assert_eq!(b.omega_circle(1).unwrap().len(), 4); // Klein: everything
        assert_eq!(b.omega_circle(7).unwrap().len(), 4);
    }

    #[test]
    fn omega_containment_holds_at_rank_p_minus_1() {
        // 2:[2] has rank 1 = p−1, so containment is guaranteed
        let report = z4_flip_brace().check_omega_containment().unwrap();
        assert!(report.all_contained(), "{report}");
        // trivial braces satisfy it trivially
        let report = trivial_brace("3:[2,2]").check_omega_containment().unwrap();
        assert!(report.all_contained());
    }

    #[test]
    fn small_rank_transfer_reports() {
        // 3:[3]: rank 1 < 2 on both sides, histograms equal
        let b = trivial_brace("3:[3]");
        let r = b.check_small_rank_transfer();
        assert_eq!(r.verdict, RankTransferVerdict::Pass);
        assert_eq!(r.rank_additive, 1);
        assert_eq!(r.rank_circle, Some(1));
        assert_eq!(r.histograms_equal, Some(true));

        // p = 2 is vacuous, but the ranks still get computed
        let r = z4_flip_brace().check_small_rank_transfer();
        assert_eq!(r.verdict, RankTransferVerdict::Vacuous);
        assert_eq!(r.rank_circle, Some(2));
        assert_eq!(r.iff_holds, Some(true));
        assert_eq!(r.histograms_equal, None);
    }

    #[test]
    fn rank_backtracker_matches_abelian_rank_on_trivial_braces() {
        for text in ["2:[2]", "2:[1,1]", "3:[2,1]", "2:[2,1,1]", "5:[1,1]", "3:[1,1,1]"] {
            let b = trivial_brace(text);
            assert_eq!(
                b.rank_circle().unwrap(),
                b.rank_additive(),
                "additive rank must be recovered on {text}"
            );
        }
    }

    #[test]
    fn rank_bound_is_enforced() {
        let b = trivial_brace("2:[13]");
        assert!(matches!(
            b.rank_circle(),
            Err(BraceError::RankBound { order: 8192 })
        ));
        assert_eq!(
            b.check_small_rank_transfer().verdict,
            RankTransferVerdict::Skipped
        );
    }

    #[test]
    fn subgroup_triad_on_z4_flip() {
        let b = z4_flip_brace();
        let e = |v: i64| b.spec().element(&[v]);
        // {0,2}: all three conditions hold
        let r = b.check_subgroup_triad(&[e(0), e(2)]);
        assert!(r.all(), "{r}");
        // {0,1}: 1∘1 = 0 so ∘-closed, but 1+1 = 2 escapes and γ(1)·1 = 3 escapes
        let r = b.check_subgroup_triad(&[e(0), e(1)]);
        assert_eq!(
            r,
            TriadReport {
                additive: false,
                circle: true,
                invariant: false
            }
        );
        assert!(r.consistent());
        // every subset containing 0 scores a consistent triad
        let els: Vec<_> = b.spec().elements().unwrap().collect();
        for mask in 0u32..16 {
            if mask & 1 == 0 {
                continue;
            }
            let members: Vec<_> = els
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, g)| g.clone())
                .collect();
            let r = b.check_subgroup_triad(&members);
            assert!(r.consistent(), "subset mask {mask:#b} scored {r}");
        }
    }

    #[test]
    fn axiom_sweeps_pass_on_small_braces() {
        for b in [z4_flip_brace(), trivial_brace("3:[2]")] {
            let axiom = b.check_brace_axiom(&cfg());
            assert_eq!(axiom.mode, SweepMode::Exhaustive);
            assert!(axiom.holds(), "{axiom}");
            // kernel-hom gammas here are homomorphisms from (G,·) too,
            // so the swapped axiom must also hold
            let swapped = b.check_biskew_axiom(&cfg());
            assert!(swapped.holds(), "{swapped}");
            assert!(b.is_biskew(&cfg()));
        }
    }

    #[test]
    fn axiom_sweep_samples_above_the_triple_bound() {
        // 2^9 = 512 elements: 512³ > 2²⁴ forces sampling
        let b = trivial_brace("2:[9]");
        let report = b.check_brace_axiom(&cfg());
        assert_eq!(report.mode, SweepMode::Sampled);
        assert_eq!(report.triples, 100_000);
        assert!(report.holds());
    }

    #[test]
    fn invalid_gamma_is_rejected_with_witness() {
        let g = parse_spec("2:[2]").unwrap();
        let a = EndoMatrix::new(&g, &[vec![3]])
            .unwrap()
            .to_automorphism()
            .unwrap();
        let id = crate::morphism::Automorphism::identity(&g);
        let gamma =
            GammaFunction::table(&g, vec![id.clone(), a, id.clone(), id]).unwrap();
        match Brace::new(gamma, &cfg()) {
            Err(BraceError::ValidationFailed { .. }) => {}
            other => panic!("expected validation failure, got {other:?}"),
        }
    }
}
