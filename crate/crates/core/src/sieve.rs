//! Decidable sieves of a standard simplex `Δ^a`.
//!
//! A sieve is stored as its set of non-degenerate simplices, each one a
//! nonempty vertex subset of `{0..a}` encoded as a bitmask. A degenerate
//! simplex `p : Δ^k -> Δ^a` factors through the sieve iff the image of `p`
//! is a member, so membership of any simplex is decided from the image.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delta::MonotoneMap;

/// Largest ambient dimension representable with a `u64` vertex mask.
pub const MAX_AMBIENT: usize = 62;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SieveError {
    #[error("ambient dimension {0} exceeds the supported maximum {MAX_AMBIENT}")]
    AmbientTooLarge(usize),
    #[error("sieves live over different simplices: Δ^{left} and Δ^{right}")]
    AmbientMismatch { left: usize, right: usize },
    #[error("face index {k} out of range for Δ^{n}")]
    FaceOutOfRange { n: usize, k: usize },
    #[error("invalid horn Λ^{n}_{m}")]
    InvalidHorn { n: usize, m: usize },
    #[error("member {member:?} is not a nonempty subset of {{0..{ambient}}}")]
    BadMember { ambient: usize, member: Vec<usize> },
    #[error("family is not downward closed: {missing:?} is missing below {member:?}")]
    NotDownwardClosed {
        member: Vec<usize>,
        missing: Vec<usize>,
    },
    #[error("embedding {0:?} is not injective")]
    NotInjective(MonotoneMap),
    #[error("horn attachment fails the pullback condition: the simplex meets the sieve in {found:?}")]
    PullbackCondition { found: Vec<Vec<usize>> },
}

/// The horn `Λ^n_m`: all faces of `Δ^n` except the `m`-th.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HornSpec {
    n: usize,
    m: usize,
}

impl HornSpec {
    pub fn new(n: usize, m: usize) -> Result<Self, SieveError> {
        // there are no 0-horns
        if n == 0 || m > n || n > MAX_AMBIENT {
            return Err(SieveError::InvalidHorn { n, m });
        }
        Ok(HornSpec { n, m })
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn m(self) -> usize {
        self.m
    }

    pub fn is_inner(self) -> bool {
        self.m != 0 && self.m != self.n
    }

    /// All horns of dimension `n`.
    pub fn all(n: usize) -> impl Iterator<Item = HornSpec> {
        (0..=n).map(move |m| HornSpec { n, m })
    }
}

impl fmt::Display for HornSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Λ^{}_{}", self.n, self.m)
    }
}

pub(crate) fn mask_to_vertices(mask: u64) -> Vec<usize> {
    (0..64).filter(|v| mask >> v & 1 == 1).collect()
}

pub(crate) fn full_mask(a: usize) -> u64 {
    if a + 1 == 64 {
        u64::MAX
    } else {
        (1u64 << (a + 1)) - 1
    }
}

/// Iterate over the nonempty subsets of `mask`.
pub(crate) fn nonempty_subsets(mask: u64) -> impl Iterator<Item = u64> {
    let mut sub = mask;
    let mut done = mask == 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = sub;
        if sub == 0 {
            return None;
        }
        sub = (sub - 1) & mask;
        if sub == 0 {
            done = true;
        }
        Some(out)
    })
}

/// A downward-closed family of nonempty vertex subsets of `{0..ambient}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sieve {
    ambient: usize,
    members: BTreeSet<u64>,
}

impl fmt::Debug for Sieve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sieve(Δ^{}; {:?})", self.ambient, self.member_lists())
    }
}

impl Sieve {
    fn check_ambient(ambient: usize) -> Result<(), SieveError> {
        if ambient > MAX_AMBIENT {
            return Err(SieveError::AmbientTooLarge(ambient));
        }
        Ok(())
    }

    pub fn empty(ambient: usize) -> Result<Self, SieveError> {
        Self::check_ambient(ambient)?;
        Ok(Sieve {
            ambient,
            members: BTreeSet::new(),
        })
    }

    /// The sieve of all simplices, i.e. `Δ^ambient` itself.
    pub fn full(ambient: usize) -> Result<Self, SieveError> {
        Self::check_ambient(ambient)?;
        Ok(Sieve {
            ambient,
            members: nonempty_subsets(full_mask(ambient)).collect(),
        })
    }

    /// The smallest sieve containing the given vertex subsets.
    pub fn generated_by(
        ambient: usize,
        generators: impl IntoIterator<Item = u64>,
    ) -> Result<Self, SieveError> {
        Self::check_ambient(ambient)?;
        let mut members = BTreeSet::new();
        for g in generators {
            if g == 0 || g & !full_mask(ambient) != 0 {
                return Err(SieveError::BadMember {
                    ambient,
                    member: mask_to_vertices(g),
                });
            }
            members.extend(nonempty_subsets(g));
        }
        Ok(Sieve { ambient, members })
    }

    /// Build from an explicit member family, rejecting families that are not
    /// downward closed.
    pub fn from_members(
        ambient: usize,
        members: impl IntoIterator<Item = u64>,
    ) -> Result<Self, SieveError> {
        Self::check_ambient(ambient)?;
        let members: BTreeSet<u64> = members.into_iter().collect();
        for &s in &members {
            if s == 0 || s & !full_mask(ambient) != 0 {
                return Err(SieveError::BadMember {
                    ambient,
                    member: mask_to_vertices(s),
                });
            }
            for v in mask_to_vertices(s) {
                let face = s & !(1 << v);
                if face != 0 && !members.contains(&face) {
                    return Err(SieveError::NotDownwardClosed {
                        member: mask_to_vertices(s),
                        missing: mask_to_vertices(face),
                    });
                }
            }
        }
        Ok(Sieve { ambient, members })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn contains(&self, mask: u64) -> bool {
        self.members.contains(&mask)
    }

    /// Whether the simplex `p : Δ^k -> Δ^ambient` factors through the sieve.
    pub fn contains_map(&self, p: &MonotoneMap) -> bool {
        p.cod() == self.ambient && self.contains(p.image())
    }

    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        self.members.iter().copied()
    }

    /// Members ordered by dimension, then by mask.
    pub fn members_by_dimension(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self.members.iter().copied().collect();
        out.sort_by_key(|&m| (m.count_ones(), m));
        out
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.contains(full_mask(self.ambient))
    }

    pub fn is_downward_closed(&self) -> bool {
        self.members.iter().all(|&s| {
            mask_to_vertices(s)
                .into_iter()
                .map(|v| s & !(1 << v))
                .all(|face| face == 0 || self.members.contains(&face))
        })
    }

    pub fn is_subsieve_of(&self, other: &Sieve) -> bool {
        self.ambient == other.ambient && self.members.is_subset(&other.members)
    }

    /// Members sorted ascending, list sorted lexicographically.
    pub fn member_lists(&self) -> Vec<Vec<usize>> {
        let mut lists: Vec<Vec<usize>> = self.members.iter().map(|&m| mask_to_vertices(m)).collect();
        lists.sort();
        lists
    }

    /// Number of non-degenerate simplices; each member is exactly one.
    pub fn nondegenerate_count(&self) -> usize {
        self.members.len()
    }

    fn same_ambient(&self, other: &Sieve) -> Result<(), SieveError> {
        if self.ambient != other.ambient {
            return Err(SieveError::AmbientMismatch {
                left: self.ambient,
                right: other.ambient,
            });
        }
        Ok(())
    }

    pub fn union(&self, other: &Sieve) -> Result<Sieve, SieveError> {
        self.same_ambient(other)?;
        Ok(Sieve {
            ambient: self.ambient,
            members: self.members.union(&other.members).copied().collect(),
        })
    }

    pub fn intersect(&self, other: &Sieve) -> Result<Sieve, SieveError> {
        self.same_ambient(other)?;
        Ok(Sieve {
            ambient: self.ambient,
            members: self.members.intersection(&other.members).copied().collect(),
        })
    }

    /// Insert a vertex subset together with all of its faces.
    pub(crate) fn with_simplex(&self, mask: u64) -> Sieve {
        let mut members = self.members.clone();
        members.extend(nonempty_subsets(mask));
        Sieve {
            ambient: self.ambient,
            members,
        }
    }
}

/// The `k`-th face of `Δ^n`: all nonempty subsets of `{0..n} \ {k}`.
pub fn face_sieve(n: usize, k: usize) -> Result<Sieve, SieveError> {
    if k > n || n == 0 {
        return Err(SieveError::FaceOutOfRange { n, k });
    }
    Sieve::generated_by(n, [full_mask(n) & !(1 << k)])
}

pub fn horn(spec: HornSpec) -> Sieve {
    let n = spec.n;
    let gens = (0..=n)
        .filter(|&k| k != spec.m)
        .map(|k| full_mask(n) & !(1 << k));
    Sieve::generated_by(n, gens).expect("horn generators lie in Δ^n")
}

pub fn union(s: &Sieve, t: &Sieve) -> Result<Sieve, SieveError> {
    s.union(t)
}

pub fn intersect(s: &Sieve, t: &Sieve) -> Result<Sieve, SieveError> {
    s.intersect(t)
}

/// `f^*(T)`: the simplices of `Δ^a` whose image under `f` lies in `T`.
pub fn pullback_sieve(f: &MonotoneMap, target: &Sieve) -> Result<Sieve, SieveError> {
    if f.cod() != target.ambient {
        return Err(SieveError::AmbientMismatch {
            left: f.cod(),
            right: target.ambient,
        });
    }
    Sieve::check_ambient(f.dom())?;
    let members = nonempty_subsets(full_mask(f.dom()))
        .filter(|&s| target.contains(f.image_of(s)))
        .collect();
    Ok(Sieve {
        ambient: f.dom(),
        members,
    })
}

pub fn nondegenerate_count(s: &Sieve) -> usize {
    s.nondegenerate_count()
}

/// Glue `Δ^n` onto `sieve` along the horn `Λ^n_m`, embedded by `e`.
///
/// The attachment is valid only when the square with the horn inclusion is a
/// pullback, i.e. `e^*(sieve)` is exactly the horn.
pub fn attach_horn(sieve: &Sieve, spec: HornSpec, e: &MonotoneMap) -> Result<Sieve, SieveError> {
    if e.dom() != spec.n() || e.cod() != sieve.ambient {
        return Err(SieveError::AmbientMismatch {
            left: e.cod(),
            right: sieve.ambient,
        });
    }
    if !e.is_mono() {
        return Err(SieveError::NotInjective(e.clone()));
    }
    let restricted = pullback_sieve(e, sieve)?;
    if restricted != horn(spec) {
        return Err(SieveError::PullbackCondition {
            found: restricted.member_lists(),
        });
    }
    Ok(sieve.with_simplex(e.image()))
}

/// Every valid horn attachment `(spec, embedding)` on `sieve`.
///
/// A simplex `E` with distinguished vertex `v` can be attached iff every
/// facet of `E` except `E \ {v}` is already present and `E \ {v}` is not.
pub fn horn_attachments(sieve: &Sieve) -> Vec<(HornSpec, MonotoneMap)> {
    let mut out = Vec::new();
    for e_mask in nonempty_subsets(full_mask(sieve.ambient)) {
        if e_mask.count_ones() < 2 || sieve.contains(e_mask) {
            continue;
        }
        let vertices = mask_to_vertices(e_mask);
        let missing: Vec<usize> = vertices
            .iter()
            .enumerate()
            .filter(|&(_, &v)| !sieve.contains(e_mask & !(1 << v)))
            .map(|(pos, _)| pos)
            .collect();
        if let [m] = missing[..] {
            let spec = HornSpec {
                n: vertices.len() - 1,
                m,
            };
            out.push((spec, MonotoneMap::inclusion(e_mask, sieve.ambient)));
        }
    }
    out.sort();
    out
}

/// Every sieve of `Δ^ambient`, including the empty one.
pub fn all_sieves(ambient: usize) -> Vec<Sieve> {
    let mut candidates: Vec<u64> = nonempty_subsets(full_mask(ambient)).collect();
    candidates.sort_by_key(|&m| (m.count_ones(), m));
    let mut out = Vec::new();
    let mut chosen = BTreeSet::new();
    fn go(idx: usize, candidates: &[u64], chosen: &mut BTreeSet<u64>, ambient: usize, out: &mut Vec<Sieve>) {
        if idx == candidates.len() {
            out.push(Sieve {
                ambient,
                members: chosen.clone(),
            });
            return;
        }
        let s = candidates[idx];
        go(idx + 1, candidates, chosen, ambient, out);
        let faces_present = mask_to_vertices(s)
            .into_iter()
            .map(|v| s & !(1 << v))
            .all(|f| f == 0 || chosen.contains(&f));
        if faces_present {
            chosen.insert(s);
            go(idx + 1, candidates, chosen, ambient, out);
            chosen.remove(&s);
        }
    }
    go(0, &candidates, &mut chosen, ambient, &mut out);
    out.sort();
    out
}

#[derive(Serialize, Deserialize)]
struct RawSieve {
    ambient: usize,
    members: Vec<Vec<usize>>,
}

impl Serialize for Sieve {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawSieve {
            ambient: self.ambient,
            members: self.member_lists(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Sieve {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawSieve::deserialize(deserializer)?;
        let mut masks = Vec::with_capacity(raw.members.len());
        for member in raw.members {
            let mut mask = 0u64;
            for v in &member {
                if *v > raw.ambient.min(MAX_AMBIENT) {
                    return Err(serde::de::Error::custom(SieveError::BadMember {
                        ambient: raw.ambient,
                        member,
                    }));
                }
                mask |= 1 << v;
            }
            masks.push(mask);
        }
        Sieve::from_members(raw.ambient, masks).map_err(serde::de::Error::custom)
    }
}
