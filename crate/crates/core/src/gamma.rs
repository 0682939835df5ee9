//! Gamma functions: maps γ from a group into its automorphism group that
//! satisfy the twisted cocycle condition
//!
//! ```text
//!     γ( apply(γ(g), h) + g ) = γ(h) then γ(g)        for all h, g
//! ```
//!
//! (the "functional equation" below). Such a map is exactly the data of a
//! second, generally non-abelian, group operation h ∘ g = apply(γ(g), h) + g
//! on the same carrier set; the brace layer builds on that.
//!
//! Two encodings are supported. A dense table stores one automorphism per
//! element and is capped at group order 2^12 — beyond that, both the file
//! size and the pair-validation cost stop being desk-scale. A kernel
//! homomorphism stores a linear functional c: G → Z/p^m and one
//! automorphism A with A^(p^m) = id, and reads γ(g) = A^(c(g)). The
//! kernel-hom premises (c well-defined, A of p-power order, and
//! apply(A,x) − x ∈ ker c) *prove* the functional equation — the map
//! x ↦ c(apply(A,x) − x) is a homomorphism, so checking it on generators
//! suffices, and then c(apply(A^j, h) + g) = c(h) + c(g) telescopes for
//! every power j. Validation still sweeps pairs as an independent check.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::morphism::{Automorphism, MorphismError};
use crate::pgroup::{checked_pow, GroupElement, GroupError, GroupSpec};
use crate::sweep::SweepCfg;

/// Cap on group order for the dense table encoding, and the threshold
/// below which validation checks every pair exhaustively.
pub const TABLE_BOUND: u64 = 1 << 12;

#[derive(Debug, Error)]
pub enum GammaError {
    #[error("gamma table has {got} entries for a group of order {want}")]
    TableSize { got: usize, want: u64 },
    #[error("group order {order} exceeds the 2^12 dense-table bound (use the kernel-hom encoding)")]
    TableBound { order: u64 },
    #[error("exponent modulus {modulus} exceeds the 2^12 power-cache bound")]
    PowerCacheBound { modulus: u64 },
    #[error(
        "coefficient {index} = {value} does not define a homomorphism into Z/p^m: \
         it must be divisible by p^{needed}"
    )]
    CoeffNotWellDefined {
        index: usize,
        value: u64,
        needed: u32,
    },
    #[error("base automorphism does not satisfy A^{modulus} = id")]
    BaseOrder { modulus: u64 },
    #[error("kernel premise fails: apply(A,x) - x is outside ker c at x = {witness}")]
    CommutatorPremise { witness: GroupElement },
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Outcome of [`GammaFunction::validate`].
///
/// `Failed` carries the offending pair: the functional equation evaluated
/// at that (h, g) does not balance. With an exhaustive sweep the witness is
/// the lexicographically first such pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GammaValidation {
    /// Every pair checked (group order within the 2^12 threshold).
    ExhaustivePass { pairs: u64 },
    /// Structural premises re-verified plus a seeded random pair sample.
    StructuralSampledPass { pairs: u64 },
    Failed {
        h: GroupElement,
        g: GroupElement,
    },
}

impl GammaValidation {
    pub fn passed(&self) -> bool {
        !matches!(self, GammaValidation::Failed { .. })
    }
}

impl fmt::Display for GammaValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaValidation::ExhaustivePass { pairs } => {
                write!(f, "exhaustive-pass ({pairs} pairs)")
            }
            GammaValidation::StructuralSampledPass { pairs } => {
                write!(f, "structural+sampled-pass ({pairs} pairs)")
            }
            GammaValidation::Failed { h, g } => {
                write!(f, "fail (witness h={h}, g={g})")
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Table {
        /// One automorphism per element, in canonical element order.
        autos: Vec<Automorphism>,
    },
    KernelHom {
        /// Functional coefficients, reduced mod p^m.
        coeffs: Vec<u64>,
        modulus_log: u32,
        /// p^m.
        modulus: u64,
        base: Automorphism,
        /// powers[i] = base^i for 0 <= i < p^m.
        powers: Vec<Automorphism>,
    },
}

/// A structurally checked gamma-function candidate. Construction verifies
/// the encoding-level premises; [`GammaFunction::validate`] sweeps the
/// functional equation itself.
#[derive(Debug, Clone)]
pub struct GammaFunction {
    spec: Arc<GroupSpec>,
    repr: Repr,
}

impl GammaFunction {
    /// Dense-table encoding. `autos[i]` is γ of the element with canonical
    /// index i.
    pub fn table(
        spec: &Arc<GroupSpec>,
        autos: Vec<Automorphism>,
    ) -> Result<GammaFunction, GammaError> {
        if spec.order() > TABLE_BOUND {
            return Err(GammaError::TableBound {
                order: spec.order(),
            });
        }
        if autos.len() as u64 != spec.order() {
            return Err(GammaError::TableSize {
                got: autos.len(),
                want: spec.order(),
            });
        }
        Ok(GammaFunction {
            spec: Arc::clone(spec),
            repr: Repr::Table { autos },
        })
    }

    /// The identity gamma function (γ ≡ id, so ∘ coincides with +).
    /// Encoded as a kernel-hom with the zero functional, which works at
    /// any group size.
    pub fn trivial(spec: &Arc<GroupSpec>) -> GammaFunction {
        GammaFunction {
            spec: Arc::clone(spec),
            repr: Repr::KernelHom {
                coeffs: vec![0; spec.exponents().len()],
                modulus_log: 0,
                modulus: 1,
                powers: vec![Automorphism::identity(spec)],
                base: Automorphism::identity(spec),
            },
        }
    }

    /// Kernel-hom encoding: γ(g) = A^(c(g)) with c(g) = Σ coeffs[j]·g_j
    /// mod p^m.
    ///
    /// Checks, in order: the power cache stays desk-scale; each
    /// coefficient is divisible by p^(m−e_j) so c is well defined; unless
    /// c is the zero functional, A^(p^m) = id; and the kernel premise
    /// c(apply(A,x) − x) = 0 — on every element when the group is small,
    /// otherwise on the generators (a proof, since the defect map is a
    /// homomorphism) plus a fixed-seed random sample as an independent
    /// belt.
    pub fn from_kernel_hom(
        spec: &Arc<GroupSpec>,
        raw_coeffs: &[i64],
        modulus_log: u32,
        base: &Automorphism,
    ) -> Result<GammaFunction, GammaError> {
        let r = spec.exponents().len();
        if raw_coeffs.len() != r {
            return Err(MorphismError::Shape {
                rows: 1,
                cols: raw_coeffs.len(),
                rank: r,
            }
            .into());
        }
        let p = spec.p();
        let modulus = checked_pow(p, u64::from(modulus_log))
            .filter(|&m| m <= TABLE_BOUND)
            .ok_or(GammaError::PowerCacheBound { modulus: u64::MAX })?;

        let coeffs: Vec<u64> = raw_coeffs
            .iter()
            .map(|&c| c.rem_euclid(modulus as i64) as u64)
            .collect();
        for (j, &c) in coeffs.iter().enumerate() {
            let needed = modulus_log.saturating_sub(spec.exponents()[j]);
            if needed > 0 {
                let divisor = checked_pow(p, u64::from(needed)).expect("divisor below modulus");
                if c % divisor != 0 {
                    return Err(GammaError::CoeffNotWellDefined {
                        index: j,
                        value: c,
                        needed,
                    });
                }
            }
        }

        if coeffs.iter().all(|&c| c == 0) {
            // zero functional: γ ≡ id regardless of A
            return Ok(GammaFunction::trivial(spec));
        }

        if !base.pow(modulus).is_identity() {
            return Err(GammaError::BaseOrder { modulus });
        }

        let gamma = {
            let mut powers = Vec::with_capacity(modulus as usize);
            let mut acc = Automorphism::identity(spec);
            for _ in 0..modulus {
                powers.push(acc.clone());
                acc = acc.then(base);
            }
            GammaFunction {
                spec: Arc::clone(spec),
                repr: Repr::KernelHom {
                    coeffs,
                    modulus_log,
                    modulus,
                    base: base.clone(),
                    powers,
                },
            }
        };

        // kernel premise: c(apply(A,x) - x) = 0
        let premise = |x: &GroupElement| gamma.c_of(&base.apply(x).sub(x)) == 0;
        if spec.order() <= TABLE_BOUND {
            for x in spec.elements()? {
                if !premise(&x) {
                    return Err(GammaError::CommutatorPremise { witness: x });
                }
            }
        } else {
            for j in 0..r {
                let x = spec.unit(j);
                if !premise(&x) {
                    return Err(GammaError::CommutatorPremise { witness: x });
                }
            }
            let cfg = SweepCfg::default();
            for idx in cfg.sample_indices(cfg.sample_elements, spec.order()) {
                let x = spec.element_at(idx);
                if !premise(&x) {
                    return Err(GammaError::CommutatorPremise { witness: x });
                }
            }
        }

        Ok(gamma)
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    /// Encoding tag as it appears in brace files.
    pub fn encoding(&self) -> &'static str {
        match self.repr {
            Repr::Table { .. } => "table",
            Repr::KernelHom { .. } => "kernelhom",
        }
    }

    /// Kernel-hom internals (coefficients, m, p^m, base automorphism), or
    /// None for a table encoding. Used by the file writer.
    pub fn kernel_parts(&self) -> Option<(&[u64], u32, u64, &Automorphism)> {
        match &self.repr {
            Repr::Table { .. } => None,
            Repr::KernelHom {
                coeffs,
                modulus_log,
                modulus,
                base,
                ..
            } => Some((coeffs, *modulus_log, *modulus, base)),
        }
    }

    /// The exponent functional c(g), for kernel-hom encodings.
    fn c_of(&self, g: &GroupElement) -> u64 {
        match &self.repr {
            Repr::Table { .. } => unreachable!("c_of is kernel-hom only"),
            Repr::KernelHom {
                coeffs, modulus, ..
            } => {
                let mut acc = 0u128;
                for (c, x) in coeffs.iter().zip(g.coords()) {
                    acc += *c as u128 * *x as u128;
                }
                (acc % *modulus as u128) as u64
            }
        }
    }

    /// γ(g).
    pub fn at(&self, g: &GroupElement) -> &Automorphism {
        debug_assert!(**g.spec() == *self.spec, "mixed group specs");
        match &self.repr {
            Repr::Table { autos } => &autos[g.index() as usize],
            Repr::KernelHom { powers, .. } => &powers[self.c_of(g) as usize],
        }
    }

    pub fn at_index(&self, index: u64) -> &Automorphism {
        match &self.repr {
            Repr::Table { autos } => &autos[index as usize],
            Repr::KernelHom { .. } => self.at(&self.spec.element_at(index)),
        }
    }

    /// Does the functional equation balance at (h, g)?
    fn fe_holds(&self, h: &GroupElement, g: &GroupElement) -> bool {
        let lhs_arg = self.at(g).apply(h).add(g);
        match &self.repr {
            Repr::KernelHom { modulus, powers, .. } => {
                // γ = A^c: compare cached powers (indices may alias when
                // the true order of A divides p^m properly, so compare the
                // automorphisms, not the exponents)
                let lhs = self.c_of(&lhs_arg);
                let rhs = (self.c_of(h) + self.c_of(g)) % modulus;
                lhs == rhs || powers[lhs as usize] == powers[rhs as usize]
            }
            Repr::Table { autos } => {
                let lhs = &autos[lhs_arg.index() as usize];
                let rhs = autos[h.index() as usize]
                    .matrix()
                    .then(autos[g.index() as usize].matrix());
                *lhs.matrix() == rhs
            }
        }
    }

    /// Sweep the functional equation.
    ///
    /// Group order within 2^12: every (h, g) pair, partitioned across
    /// `cfg.workers`. Above: the structural kernel-hom premises are
    /// re-verified on the generators and `cfg.sample_pairs` seeded random
    /// pairs are checked. Failures are reported with the earliest witness,
    /// never thrown.
    pub fn validate(&self, cfg: &SweepCfg) -> GammaValidation {
        let n = self.spec.order();
        // γ(0) = id is forced by the equation at (0,0); check it first for
        // a readable witness.
        if !self.at_index(0).is_identity() {
            return GammaValidation::Failed {
                h: self.spec.zero(),
                g: self.spec.zero(),
            };
        }

        if n <= TABLE_BOUND {
            let total = n * n;
            let fail = cfg.scan_min_fail(total, |s| {
                let h = self.spec.element_at(s / n);
                let g = self.spec.element_at(s % n);
                self.fe_holds(&h, &g)
            });
            return match fail {
                None => GammaValidation::ExhaustivePass { pairs: total },
                Some(s) => GammaValidation::Failed {
                    h: self.spec.element_at(s / n),
                    g: self.spec.element_at(s % n),
                },
            };
        }

        // Structural tier. The table encoding is capped at the bound, so
        // only kernel-homs reach here.
        let Repr::KernelHom {
            coeffs,
            modulus_log,
            modulus,
            base,
            ..
        } = &self.repr
        else {
            unreachable!("table encoding is capped at the pair-sweep bound");
        };
        if coeffs.iter().any(|&c| c != 0) {
            let p = self.spec.p();
            for (j, &c) in coeffs.iter().enumerate() {
                let needed = modulus_log.saturating_sub(self.spec.exponents()[j]);
                let divisor = checked_pow(p, u64::from(needed)).expect("below modulus");
                if c % divisor != 0 {
                    return GammaValidation::Failed {
                        h: self.spec.unit(j),
                        g: self.spec.zero(),
                    };
                }
            }
            if !base.pow(*modulus).is_identity() {
                return GammaValidation::Failed {
                    h: self.spec.zero(),
                    g: self.spec.unit(0),
                };
            }
            for j in 0..self.spec.exponents().len() {
                let x = self.spec.unit(j);
                if self.c_of(&base.apply(&x).sub(&x)) != 0 {
                    return GammaValidation::Failed {
                        h: x,
                        g: self.spec.unit(0),
                    };
                }
            }
        }

        let samples = cfg.sample_indices(2 * cfg.sample_pairs, n);
        let fail = cfg.scan_min_fail(cfg.sample_pairs, |i| {
            let h = self.spec.element_at(samples[2 * i as usize]);
            let g = self.spec.element_at(samples[2 * i as usize + 1]);
            self.fe_holds(&h, &g)
        });
        match fail {
            None => GammaValidation::StructuralSampledPass {
                pairs: cfg.sample_pairs,
            },
            Some(i) => GammaValidation::Failed {
                h: self.spec.element_at(samples[2 * i as usize]),
                g: self.spec.element_at(samples[2 * i as usize + 1]),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphism::EndoMatrix;
    use crate::pgroup::parse_spec;

    fn spec(text: &str) -> Arc<GroupSpec> {
        parse_spec(text).unwrap()
    }

    fn cfg() -> SweepCfg {
        SweepCfg::default()
    }

    #[test]
    fn trivial_gamma_validates_on_anything() {
        for text in ["2:[2]", "3:[2,1]", "2:[13]"] {
            let g = spec(text);
            let gamma = GammaFunction::trivial(&g);
            let report = gamma.validate(&cfg());
            assert!(report.passed(), "{text}: {report}");
            if g.order() <= TABLE_BOUND {
                assert_eq!(
                    report,
                    GammaValidation::ExhaustivePass {
                        pairs: g.order() * g.order()
                    }
                );
            }
        }
    }

    #[test]
    fn dihedral_type_gamma_on_z4() {
        let g = spec("2:[2]");
        let a = EndoMatrix::new(&g, &[vec![3]]).unwrap().to_automorphism().unwrap();
        let gamma = GammaFunction::from_kernel_hom(&g, &[1], 1, &a).unwrap();
        assert_eq!(gamma.validate(&cfg()), GammaValidation::ExhaustivePass { pairs: 16 });
        // γ alternates id, A with the parity of the element
        assert!(gamma.at(&g.element(&[0])).is_identity());
        assert_eq!(gamma.at(&g.element(&[1])), &a);
        assert!(gamma.at(&g.element(&[2])).is_identity());
        assert_eq!(gamma.at(&g.element(&[3])), &a);
    }

    #[test]
    fn table_and_kernel_hom_encodings_agree() {
        let g = spec("2:[2]");
        let a = EndoMatrix::new(&g, &[vec![3]]).unwrap().to_automorphism().unwrap();
        let kh = GammaFunction::from_kernel_hom(&g, &[1], 1, &a).unwrap();
        let autos: Vec<Automorphism> = (0..4).map(|i| kh.at_index(i).clone()).collect();
        let table = GammaFunction::table(&g, autos).unwrap();
        assert_eq!(table.encoding(), "table");
        assert_eq!(kh.encoding(), "kernelhom");
        assert!(table.validate(&cfg()).passed());
        for i in 0..4 {
            assert_eq!(table.at_index(i), kh.at_index(i));
        }
    }

    #[test]
    fn corrupt_table_fails_with_witness() {
        let g = spec("2:[2]");
        let a = EndoMatrix::new(&g, &[vec![3]]).unwrap().to_automorphism().unwrap();
        let id = Automorphism::identity(&g);
        // γ(1) = [[3]], all others id: not a gamma function
        let table =
            GammaFunction::table(&g, vec![id.clone(), a, id.clone(), id]).unwrap();
        let report = table.validate(&cfg());
        let GammaValidation::Failed { h, g: w } = &report else {
            panic!("expected failure, got {report}");
        };
        // the reported pair really does violate the equation
        assert!(!table.fe_holds(h, w), "witness ({h},{w}) must violate");
    }

    #[test]
    fn companion_matrix_gamma_on_3_11() {
        // coordinate-sum functional with the companion matrix of
        // x^2 + x + 1 over Z/3
        let g = spec("3:[1,1]");
        let m = EndoMatrix::new(&g, &[vec![0, -1], vec![1, -1]]).unwrap();
        let a = m.to_automorphism().unwrap();
        let gamma = GammaFunction::from_kernel_hom(&g, &[1, 1], 1, &a).unwrap();
        assert_eq!(gamma.validate(&cfg()), GammaValidation::ExhaustivePass { pairs: 81 });
        // γ(g) depends only on the coordinate sum mod 3
        assert_eq!(gamma.at(&g.element(&[1, 0])), &a);
        assert_eq!(gamma.at(&g.element(&[2, 2])), &a);
        assert!(gamma.at(&g.element(&[1, 2])).is_identity());
    }

    #[test]
    fn zero_functional_ignores_the_base() {
        // any A is fine when c = 0: γ is the trivial gamma
        let g = spec("3:[2]");
        let a = EndoMatrix::new(&g, &[vec![2]]).unwrap().to_automorphism().unwrap();
        // A = [[2]] has order 6, not a power of 3 — irrelevant for c = 0
        let gamma = GammaFunction::from_kernel_hom(&g, &[0], 1, &a).unwrap();
        assert!(gamma.validate(&cfg()).passed());
        for i in 0..9 {
            assert!(gamma.at_index(i).is_identity());
        }
    }

    #[test]
    fn kernel_hom_premises_are_enforced() {
        // coefficient not divisible enough: c: Z/9 x Z/3 -> Z/9 with c_2 = 1
        let g = spec("3:[2,1]");
        let id = Automorphism::identity(&g);
        assert!(matches!(
            GammaFunction::from_kernel_hom(&g, &[1, 1], 2, &id),
            Err(GammaError::CoeffNotWellDefined {
                index: 1,
                needed: 1,
                ..
            })
        ));

        // base of non-p-power order: [[2]] on Z/9 has order 6
        let h = spec("3:[2]");
        let two = EndoMatrix::new(&h, &[vec![2]]).unwrap().to_automorphism().unwrap();
        assert!(matches!(
            GammaFunction::from_kernel_hom(&h, &[1], 1, &two),
            Err(GammaError::BaseOrder { modulus: 3 })
        ));

        // kernel premise: A = [[1,1],[0,1]] on 3:[1,1] moves u2 by u1;
        // c = (1,0) sees that, c = (0,1) does not
        let k = spec("3:[1,1]");
        let shear = EndoMatrix::new(&k, &[vec![1, 1], vec![0, 1]])
            .unwrap()
            .to_automorphism()
            .unwrap();
        assert!(matches!(
            GammaFunction::from_kernel_hom(&k, &[1, 0], 1, &shear),
            Err(GammaError::CommutatorPremise { .. })
        ));
        let ok = GammaFunction::from_kernel_hom(&k, &[0, 1], 1, &shear).unwrap();
        assert_eq!(ok.validate(&cfg()), GammaValidation::ExhaustivePass { pairs: 81 });
    }

    #[test]
    fn table_bound_is_enforced() {
        let g = spec("2:[13]"); // order 8192 > 4096
        assert!(matches!(
            GammaFunction::table(&g, vec![]),
            Err(GammaError::TableBound { order: 8192 })
        ));
        let h = spec("2:[2]");
        assert!(matches!(
            GammaFunction::table(&h, vec![Automorphism::identity(&h)]),
            Err(GammaError::TableSize { got: 1, want: 4 })
        ));
    }

    #[test]
    fn big_kernel_hom_validates_structurally() {
        // negation on Z/2^13: A = [[-1]], c = parity
        let g = spec("2:[13]");
        let a = EndoMatrix::new(&g, &[vec![-1]]).unwrap().to_automorphism().unwrap();
        let gamma = GammaFunction::from_kernel_hom(&g, &[1], 1, &a).unwrap();
        let report = gamma.validate(&cfg());
        assert_eq!(
            report,
            GammaValidation::StructuralSampledPass { pairs: 10_000 }
        );
        // deterministic across reruns and worker counts
        let mut wide = cfg();
        wide.workers = 8;
        assert_eq!(gamma.validate(&wide), report);
    }

    #[test]
    fn validation_catches_gamma_zero() {
        let g = spec("2:[2]");
        let a = EndoMatrix::new(&g, &[vec![3]]).unwrap().to_automorphism().unwrap();
        let id = Automorphism::identity(&g);
        let table = GammaFunction::table(&g, vec![a.clone(), id.clone(), id.clone(), id]).unwrap();
        assert_eq!(
            table.validate(&cfg()),
            GammaValidation::Failed {
                h: g.zero(),
                g: g.zero()
            }
        );
    }
}
