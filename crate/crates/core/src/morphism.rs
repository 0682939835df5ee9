//! Endomorphisms and automorphisms of coordinate p-groups.
//!
//! An endomorphism of Z/p^e1 x ... x Z/p^er is an r x r integer matrix M
//! acting on column coordinate vectors, `apply(M, x) = M x`, with the
//! entry at (i, j) reduced modulo the row modulus p^ei. Not every residue
//! matrix defines a map: column j is the image of a generator of order
//! p^ej and must be annihilated by p^ej, which forces p^(ei-ej) | m_ij
//! wherever ei > ej. Every [`EndoMatrix`] carries that invariant from
//! construction.
//!
//! Composition is written in data-flow order throughout the crate:
//! `a.then(&b)` is the map "apply a, then apply b", whose matrix is the
//! product B*A. Keeping one fixed order here is what lets the twisted
//! cocycle identities elsewhere be transcribed without sign gymnastics.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::pgroup::{checked_pow, GroupElement, GroupError, GroupSpec};

#[derive(Debug, Error)]
pub enum MorphismError {
    #[error("matrix shape {rows}x{cols} does not fit group rank {rank}")]
    Shape {
        rows: usize,
        cols: usize,
        rank: usize,
    },
    #[error(
        "entry ({row},{col}) = {entry} does not give a well-defined map: \
         it must be divisible by p^{needed}"
    )]
    NotWellDefined {
        row: usize,
        col: usize,
        entry: u64,
        needed: u32,
    },
    #[error("image of generator {col} has order {got}; the generator has order {cap}")]
    ImageOrder { col: usize, got: u64, cap: u64 },
    #[error("matrix is singular modulo {p}, so it is not an automorphism")]
    NotInvertible { p: u64 },
    #[error("malformed matrix literal `{0}`")]
    MalformedMatrix(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// A well-defined endomorphism in matrix form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EndoMatrix {
    spec: Arc<GroupSpec>,
    /// Row-major, entry (i, j) reduced modulo p^ei.
    entries: Vec<u64>,
}

impl EndoMatrix {
    /// Build from signed integer rows; entries are reduced modulo their
    /// row modulus and the well-definedness divisibilities are checked.
    pub fn new(spec: &Arc<GroupSpec>, rows: &[Vec<i64>]) -> Result<EndoMatrix, MorphismError> {
        let r = spec.exponents().len();
        if rows.len() != r || rows.iter().any(|row| row.len() != r) {
            return Err(MorphismError::Shape {
                rows: rows.len(),
                cols: rows.first().map_or(0, |row| row.len()),
                rank: r,
            });
        }
        let mut entries = Vec::with_capacity(r * r);
        for (i, row) in rows.iter().enumerate() {
            let m = spec.moduli()[i];
            for &raw in row {
                entries.push(raw.rem_euclid(m as i64) as u64);
            }
        }
        let endo = EndoMatrix {
            spec: Arc::clone(spec),
            entries,
        };
        endo.check_well_defined()?;
        Ok(endo)
    }

    /// Build from the images of the standard generators: column j of the
    /// matrix is `images[j]`. Well-definedness here is exactly the
    /// condition that each image order divides the generator order.
    pub fn from_images(
        spec: &Arc<GroupSpec>,
        images: &[GroupElement],
    ) -> Result<EndoMatrix, MorphismError> {
        let r = spec.exponents().len();
        if images.len() != r {
            return Err(MorphismError::Shape {
                rows: r,
                cols: images.len(),
                rank: r,
            });
        }
        for (j, im) in images.iter().enumerate() {
            let cap = spec.moduli()[j];
            let got = im.order();
            if cap % got != 0 {
                return Err(MorphismError::ImageOrder { col: j, got, cap });
            }
        }
        let mut entries = vec![0u64; r * r];
        for (j, im) in images.iter().enumerate() {
            for i in 0..r {
                entries[i * r + j] = im.coords()[i];
            }
        }
        Ok(EndoMatrix {
            spec: Arc::clone(spec),
            entries,
        })
    }

    pub(crate) fn from_entries_unchecked(spec: Arc<GroupSpec>, entries: Vec<u64>) -> EndoMatrix {
        let endo = EndoMatrix { spec, entries };
        debug_assert!(endo.check_well_defined().is_ok());
        endo
    }

    fn check_well_defined(&self) -> Result<(), MorphismError> {
        let exps = self.spec.exponents();
        let r = exps.len();
        for i in 0..r {
            for j in 0..r {
                if exps[i] > exps[j] {
                    let needed = exps[i] - exps[j];
                    let divisor = checked_pow(self.spec.p(), u64::from(needed))
                        .expect("divisor below row modulus");
                    let entry = self.entries[i * r + j];
                    if entry % divisor != 0 {
                        return Err(MorphismError::NotWellDefined {
                            row: i,
                            col: j,
                            entry,
                            needed,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn identity(spec: &Arc<GroupSpec>) -> EndoMatrix {
        let r = spec.exponents().len();
        let mut entries = vec![0u64; r * r];
        for i in 0..r {
            entries[i * r + i] = 1 % spec.moduli()[i];
        }
        EndoMatrix {
            spec: Arc::clone(spec),
            entries,
        }
    }

    pub fn zero(spec: &Arc<GroupSpec>) -> EndoMatrix {
        let r = spec.exponents().len();
        EndoMatrix {
            spec: Arc::clone(spec),
            entries: vec![0u64; r * r],
        }
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    pub fn entry(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.rank() + j]
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    fn rank(&self) -> usize {
        self.spec.exponents().len()
    }

    pub fn is_identity(&self) -> bool {
        *self == EndoMatrix::identity(&self.spec)
    }

    pub fn apply(&self, x: &GroupElement) -> GroupElement {
        debug_assert!(**x.spec() == *self.spec, "mixed group specs");
        let r = self.rank();
        let coords = (0..r)
            .map(|i| {
                let m = self.spec.moduli()[i] as u128;
                let mut acc = 0u128;
                for j in 0..r {
                    acc += self.entries[i * r + j] as u128 * x.coords()[j] as u128;
                }
                (acc % m) as u64
            })
            .collect();
        GroupElement::from_coords(Arc::clone(&self.spec), coords)
    }

    /// The map "apply `self`, then apply `rhs`" (matrix product rhs * self).
    pub fn then(&self, rhs: &EndoMatrix) -> EndoMatrix {
        debug_assert!(*rhs.spec == *self.spec, "mixed group specs");
        let r = self.rank();
        let mut entries = vec![0u64; r * r];
        for i in 0..r {
            let m = self.spec.moduli()[i] as u128;
            for j in 0..r {
                let mut acc = 0u128;
                for k in 0..r {
                    acc += rhs.entries[i * r + k] as u128 * self.entries[k * r + j] as u128;
                }
                entries[i * r + j] = (acc % m) as u64;
            }
        }
        EndoMatrix::from_entries_unchecked(Arc::clone(&self.spec), entries)
    }

    pub fn add(&self, rhs: &EndoMatrix) -> EndoMatrix {
        debug_assert!(*rhs.spec == *self.spec, "mixed group specs");
        let r = self.rank();
        let entries = (0..r * r)
            .map(|k| {
                let m = self.spec.moduli()[k / r];
                (self.entries[k] + rhs.entries[k]) % m
            })
            .collect();
        EndoMatrix::from_entries_unchecked(Arc::clone(&self.spec), entries)
    }

    pub fn sub(&self, rhs: &EndoMatrix) -> EndoMatrix {
        debug_assert!(*rhs.spec == *self.spec, "mixed group specs");
        let r = self.rank();
        let entries = (0..r * r)
            .map(|k| {
                let m = self.spec.moduli()[k / r];
                (self.entries[k] + m - rhs.entries[k]) % m
            })
            .collect();
        EndoMatrix::from_entries_unchecked(Arc::clone(&self.spec), entries)
    }

    pub fn scale(&self, n: i64) -> EndoMatrix {
        let r = self.rank();
        let entries = (0..r * r)
            .map(|k| {
                let m = self.spec.moduli()[k / r];
                let n = n.rem_euclid(m as i64) as u128;
                ((n * self.entries[k] as u128) % m as u128) as u64
            })
            .collect();
        EndoMatrix::from_entries_unchecked(Arc::clone(&self.spec), entries)
    }

    /// n-th compositional power (binary exponentiation; powers of a single
    /// matrix commute, so the multiplication order is immaterial).
    pub fn pow(&self, mut n: u64) -> EndoMatrix {
        let mut acc = EndoMatrix::identity(&self.spec);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.then(&base);
            }
            base = base.then(&base);
            n >>= 1;
        }
        acc
    }

    /// An endomorphism of a finite abelian p-group is an automorphism
    /// exactly when it is invertible on G/pG, i.e. when the mod-p
    /// reduction has nonzero determinant (surjectivity lifts from the
    /// quotient, and surjective implies bijective on a finite set).
    pub fn is_automorphism(&self) -> bool {
        let p = self.spec.p();
        let r = self.rank();
        let reduced: Vec<u64> = self.entries.iter().map(|&e| e % p).collect();
        mod_p_inverse(p, r, &reduced).is_some()
    }

    /// Upgrade to an [`Automorphism`], computing the inverse matrix.
    ///
    /// The inverse is found by Hensel/Newton iteration: starting from the
    /// mod-p inverse X of M, each step X <- X(2I - MX) doubles the p-adic
    /// precision of MX = I, so ceil(log2 e1) steps reach Z/p^e1 exactly.
    /// The valuation pattern v_p(x_ij) >= ei - ej is closed under matrix
    /// products and holds for the seed, so the limit reduces row-wise to a
    /// well-defined endomorphism.
    pub fn to_automorphism(&self) -> Result<Automorphism, MorphismError> {
        let p = self.spec.p();
        let r = self.rank();
        let reduced: Vec<u64> = self.entries.iter().map(|&e| e % p).collect();
        let seed = mod_p_inverse(p, r, &reduced).ok_or(MorphismError::NotInvertible { p })?;

        let e1 = u64::from(self.spec.exponent_log());
        let modulus = self.spec.group_exponent();
        let mut x = seed;
        let mut precision = 1u64;
        while precision < e1 {
            let mx = mat_mul_single(r, modulus, &self.entries, &x);
            // t = 2I - MX
            let mut t = vec![0u64; r * r];
            for i in 0..r {
                for j in 0..r {
                    let two_i = if i == j { 2 % modulus } else { 0 };
                    t[i * r + j] = (two_i + modulus - mx[i * r + j]) % modulus;
                }
            }
            x = mat_mul_single(r, modulus, &x, &t);
            precision *= 2;
        }

        let entries = (0..r * r)
            .map(|k| x[k] % self.spec.moduli()[k / r])
            .collect();
        let inverse = EndoMatrix::from_entries_unchecked(Arc::clone(&self.spec), entries);
        debug_assert!(self.then(&inverse).is_identity());
        debug_assert!(inverse.then(self).is_identity());
        Ok(Automorphism {
            forward: self.clone(),
            backward: inverse,
        })
    }

    /// Parse `[[a,b],[c,d]]` (whitespace-insensitive, signed entries).
    pub fn parse(spec: &Arc<GroupSpec>, text: &str) -> Result<EndoMatrix, MorphismError> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let malformed = || MorphismError::MalformedMatrix(text.trim().to_string());
        let inner = compact
            .strip_prefix("[[")
            .and_then(|s| s.strip_suffix("]]"))
            .ok_or_else(malformed)?;
        let mut rows = Vec::new();
        for row_text in inner.split("],[") {
            let mut row = Vec::new();
            for field in row_text.split(',') {
                row.push(field.parse::<i64>().map_err(|_| malformed())?);
            }
            rows.push(row);
        }
        EndoMatrix::new(spec, &rows)
    }
}

impl fmt::Display for EndoMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.rank();
        write!(f, "[")?;
        for i in 0..r {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..r {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.entries[i * r + j])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// An automorphism: a matrix bundled with its precomputed inverse, so both
/// directions apply in O(r^2).
#[derive(Debug, Clone)]
pub struct Automorphism {
    forward: EndoMatrix,
    backward: EndoMatrix,
}

impl Automorphism {
    pub fn identity(spec: &Arc<GroupSpec>) -> Automorphism {
        let id = EndoMatrix::identity(spec);
        Automorphism {
            forward: id.clone(),
            backward: id,
        }
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        self.forward.spec()
    }

    pub fn matrix(&self) -> &EndoMatrix {
        &self.forward
    }

    pub fn inverse_matrix(&self) -> &EndoMatrix {
        &self.backward
    }

    pub fn apply(&self, x: &GroupElement) -> GroupElement {
        self.forward.apply(x)
    }

    pub fn apply_inv(&self, x: &GroupElement) -> GroupElement {
        self.backward.apply(x)
    }

    pub fn inverse(&self) -> Automorphism {
        Automorphism {
            forward: self.backward.clone(),
            backward: self.forward.clone(),
        }
    }

    /// "apply `self`, then apply `rhs`".
    pub fn then(&self, rhs: &Automorphism) -> Automorphism {
        Automorphism {
            forward: self.forward.then(&rhs.forward),
            backward: rhs.backward.then(&self.backward),
        }
    }

    pub fn pow(&self, n: u64) -> Automorphism {
        Automorphism {
            forward: self.forward.pow(n),
            backward: self.backward.pow(n),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.forward.is_identity()
    }
}

impl PartialEq for Automorphism {
    fn eq(&self, other: &Self) -> bool {
        self.forward == other.forward
    }
}

impl Eq for Automorphism {}

impl std::hash::Hash for Automorphism {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.forward.hash(state);
    }
}

impl fmt::Display for Automorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.forward.fmt(f)
    }
}

/// Gauss-Jordan inverse over F_p; None when singular.
fn mod_p_inverse(p: u64, r: usize, entries: &[u64]) -> Option<Vec<u64>> {
    let mut a: Vec<u64> = entries.to_vec();
    let mut inv: Vec<u64> = vec![0; r * r];
    for i in 0..r {
        inv[i * r + i] = 1 % p;
    }
    for col in 0..r {
        let pivot_row = (col..r).find(|&row| a[row * r + col] % p != 0)?;
        a.swap_rows(r, col, pivot_row);
        inv.swap_rows(r, col, pivot_row);
        let inv_pivot = inverse_mod_prime(a[col * r + col], p);
        for j in 0..r {
            a[col * r + j] = mul_mod(a[col * r + j], inv_pivot, p);
            inv[col * r + j] = mul_mod(inv[col * r + j], inv_pivot, p);
        }
        for row in 0..r {
            if row == col || a[row * r + col] == 0 {
                continue;
            }
            let factor = a[row * r + col];
            for j in 0..r {
                let s = mul_mod(factor, a[col * r + j], p);
                a[row * r + j] = (a[row * r + j] + p - s) % p;
                let s = mul_mod(factor, inv[col * r + j], p);
                inv[row * r + j] = (inv[row * r + j] + p - s) % p;
            }
        }
    }
    Some(inv)
}

trait SwapRows {
    fn swap_rows(&mut self, r: usize, a: usize, b: usize);
}

impl SwapRows for Vec<u64> {
    fn swap_rows(&mut self, r: usize, a: usize, b: usize) {
        if a != b {
            for j in 0..r {
                self.swap(a * r + j, b * r + j);
            }
        }
    }
}

fn inverse_mod_prime(a: u64, p: u64) -> u64 {
    // Fermat
    let mut acc = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        e >>= 1;
    }
    acc
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Plain matrix product a*b with every entry modulo one modulus.
fn mat_mul_single(r: usize, modulus: u64, a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; r * r];
    for i in 0..r {
        for j in 0..r {
            let mut acc = 0u128;
            for k in 0..r {
                acc += a[i * r + k] as u128 * b[k * r + j] as u128;
            }
            out[i * r + j] = (acc % modulus as u128) as u64;
        }
    }
    out
}
