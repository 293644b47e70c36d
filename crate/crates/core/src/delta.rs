//! The simplex category: monotone maps `[a] -> [b]`, the face and degeneracy
//! generators, composition, and the canonical epi-mono factorization.
//!
//! A map is stored by its full value sequence, so two maps are equal exactly
//! when their values agree. Composition follows the usual convention:
//! `compose(g, f)` is "g after f" and requires `f.cod() == g.dom()`.
//!
//! Generator words are always listed innermost-first: the first generator in
//! the list is applied first.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeltaError {
    #[error("index {index} out of range for {generator} on [{n}]")]
    IndexOutOfRange {
        generator: &'static str,
        n: usize,
        index: usize,
    },
    #[error("cannot compose: codomain [{left}] does not match domain [{right}]")]
    DomainMismatch { left: usize, right: usize },
    #[error("value sequence of length {len} does not describe a map out of [{dom}]")]
    BadLength { dom: usize, len: usize },
    #[error("value {value} exceeds codomain [{cod}]")]
    ValueOutOfRange { value: usize, cod: usize },
    #[error("values are not nondecreasing at position {position}")]
    NotMonotone { position: usize },
}

/// An order-preserving map `[dom] -> [cod]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct MonotoneMap {
    dom: usize,
    cod: usize,
    values: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawMap {
    dom: usize,
    cod: usize,
    values: Vec<usize>,
}

impl TryFrom<RawMap> for MonotoneMap {
    type Error = DeltaError;

    fn try_from(raw: RawMap) -> Result<Self, Self::Error> {
        MonotoneMap::new(raw.dom, raw.cod, raw.values)
    }
}

impl From<MonotoneMap> for RawMap {
    fn from(map: MonotoneMap) -> Self {
        RawMap {
            dom: map.dom,
            cod: map.cod,
            values: map.values,
        }
    }
}

impl fmt::Debug for MonotoneMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]->[{}] {:?}", self.dom, self.cod, self.values)
    }
}

impl MonotoneMap {
    pub fn new(dom: usize, cod: usize, values: Vec<usize>) -> Result<Self, DeltaError> {
        if values.len() != dom + 1 {
            return Err(DeltaError::BadLength {
                dom,
                len: values.len(),
            });
        }
        for (position, pair) in values.windows(2).enumerate() {
            if pair[0] > pair[1] {
                return Err(DeltaError::NotMonotone { position });
            }
        }
        if let Some(&value) = values.iter().find(|&&v| v > cod) {
            return Err(DeltaError::ValueOutOfRange { value, cod });
        }
        Ok(MonotoneMap { dom, cod, values })
    }

    pub fn identity(n: usize) -> Self {
        MonotoneMap {
            dom: n,
            cod: n,
            values: (0..=n).collect(),
        }
    }

    /// The inclusion of the vertex subset `mask` of `[cod]`, listed in
    /// increasing order. `mask` must be nonempty.
    pub fn inclusion(mask: u64, cod: usize) -> Self {
        debug_assert!(mask != 0 && mask >> (cod + 1) == 0);
        let values: Vec<usize> = (0..=cod).filter(|v| mask >> v & 1 == 1).collect();
        MonotoneMap {
            dom: values.len() - 1,
            cod,
            values,
        }
    }

    pub fn dom(&self) -> usize {
        self.dom
    }

    pub fn cod(&self) -> usize {
        self.cod
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn apply(&self, k: usize) -> usize {
        self.values[k]
    }

    pub fn is_identity(&self) -> bool {
        self.dom == self.cod && self.values.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn is_mono(&self) -> bool {
        self.values.windows(2).all(|w| w[0] < w[1])
    }

    pub fn is_epi(&self) -> bool {
        self.values[0] == 0
            && self.values[self.dom] == self.cod
            && self.values.windows(2).all(|w| w[1] - w[0] <= 1)
    }

    /// Image of a vertex subset, as a bitmask over `[cod]`.
    pub fn image_of(&self, mask: u64) -> u64 {
        let mut out = 0u64;
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            out |= 1 << self.values[v];
            rest &= rest - 1;
        }
        out
    }

    pub fn image(&self) -> u64 {
        self.values.iter().fold(0u64, |acc, &v| acc | 1 << v)
    }

    /// The map restricted to the vertex subset `mask` of its domain and
    /// corestricted to the image of that subset, reindexed so both sides are
    /// standard simplices.
    pub fn restrict(&self, mask: u64) -> MonotoneMap {
        let image = self.image_of(mask);
        let values: Vec<usize> = (0..=self.dom)
            .filter(|v| mask >> v & 1 == 1)
            .map(|v| rank_in(image, self.values[v]))
            .collect();
        MonotoneMap {
            dom: values.len() - 1,
            cod: image.count_ones() as usize - 1,
            values,
        }
    }
}

/// Position of vertex `v` among the set bits of `mask`.
pub(crate) fn rank_in(mask: u64, v: usize) -> usize {
    (mask & ((1u64 << v) - 1)).count_ones() as usize
}

/// The face map `d_i : [n] -> [n+1]`, the injection skipping `i`.
pub fn face_map(n: usize, i: usize) -> Result<MonotoneMap, DeltaError> {
    if i > n + 1 {
        return Err(DeltaError::IndexOutOfRange {
            generator: "face map",
            n,
            index: i,
        });
    }
    let values = (0..=n).map(|k| if k < i { k } else { k + 1 }).collect();
    Ok(MonotoneMap {
        dom: n,
        cod: n + 1,
        values,
    })
}

/// The degeneracy map `s_i : [n+1] -> [n]`, hitting `i` twice.
pub fn degeneracy_map(n: usize, i: usize) -> Result<MonotoneMap, DeltaError> {
    if i > n {
        return Err(DeltaError::IndexOutOfRange {
            generator: "degeneracy map",
            n,
            index: i,
        });
    }
    let values = (0..=n + 1).map(|k| if k <= i { k } else { k - 1 }).collect();
    Ok(MonotoneMap {
        dom: n + 1,
        cod: n,
        values,
    })
}

/// `g` after `f`.
pub fn compose(g: &MonotoneMap, f: &MonotoneMap) -> Result<MonotoneMap, DeltaError> {
    if f.cod != g.dom {
        return Err(DeltaError::DomainMismatch {
            left: f.cod,
            right: g.dom,
        });
    }
    Ok(MonotoneMap {
        dom: f.dom,
        cod: g.cod,
        values: f.values.iter().map(|&v| g.values[v]).collect(),
    })
}

/// Compose a word of maps given innermost-first.
pub fn compose_word<'a>(
    dom: usize,
    word: impl IntoIterator<Item = &'a MonotoneMap>,
) -> Result<MonotoneMap, DeltaError> {
    word.into_iter()
        .try_fold(MonotoneMap::identity(dom), |acc, g| compose(g, &acc))
}

/// A single generator of the simplex category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    /// `d_index : [source] -> [source + 1]`
    Face { source: usize, index: usize },
    /// `s_index : [source] -> [source - 1]`
    Degeneracy { source: usize, index: usize },
}

impl Generator {
    pub fn to_map(self) -> MonotoneMap {
        match self {
            Generator::Face { source, index } => face_map(source, index).expect("valid face"),
            Generator::Degeneracy { source, index } => {
                degeneracy_map(source - 1, index).expect("valid degeneracy")
            }
        }
    }

    pub fn source(self) -> usize {
        match self {
            Generator::Face { source, .. } | Generator::Degeneracy { source, .. } => source,
        }
    }

    pub fn target(self) -> usize {
        match self {
            Generator::Face { source, .. } => source + 1,
            Generator::Degeneracy { source, .. } => source - 1,
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Face { index, .. } => write!(f, "d_{index}"),
            Generator::Degeneracy { index, .. } => write!(f, "s_{index}"),
        }
    }
}

/// The epi-mono normal form of a monotone map.
///
/// With missed values `i_1 < ... < i_r` and repeated positions
/// `j_1 < ... < j_t`, the map equals
/// `d_{i_r} ∘ ... ∘ d_{i_1} ∘ s_{j_1} ∘ ... ∘ s_{j_t}`: the degeneracies act
/// first (largest index innermost), then the faces (smallest index innermost).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalFactorization {
    pub dom: usize,
    pub cod: usize,
    pub face_indices: Vec<usize>,
    pub degeneracy_indices: Vec<usize>,
}

impl CanonicalFactorization {
    /// The generator word, innermost-first.
    pub fn generators(&self) -> Vec<Generator> {
        let mut word = Vec::with_capacity(self.face_indices.len() + self.degeneracy_indices.len());
        let mut level = self.dom;
        for &j in self.degeneracy_indices.iter().rev() {
            word.push(Generator::Degeneracy {
                source: level,
                index: j,
            });
            level -= 1;
        }
        for &i in &self.face_indices {
            word.push(Generator::Face {
                source: level,
                index: i,
            });
            level += 1;
        }
        word
    }

    pub fn recompose(&self) -> MonotoneMap {
        let maps: Vec<MonotoneMap> = self.generators().into_iter().map(Generator::to_map).collect();
        compose_word(self.dom, &maps).expect("canonical word is composable")
    }

    pub fn is_mono(&self) -> bool {
        self.degeneracy_indices.is_empty()
    }

    pub fn is_epi(&self) -> bool {
        self.face_indices.is_empty()
    }
}

pub fn factorize(f: &MonotoneMap) -> CanonicalFactorization {
    let image = f.image();
    CanonicalFactorization {
        dom: f.dom,
        cod: f.cod,
        face_indices: (0..=f.cod).filter(|v| image >> v & 1 == 0).collect(),
        degeneracy_indices: (0..f.dom).filter(|&j| f.values[j] == f.values[j + 1]).collect(),
    }
}

/// All monotone maps `[dom] -> [cod]`, in lexicographic order of values.
pub fn all_maps(dom: usize, cod: usize) -> Vec<MonotoneMap> {
    fn go(dom: usize, cod: usize, prefix: &mut Vec<usize>, out: &mut Vec<MonotoneMap>) {
        if prefix.len() == dom + 1 {
            out.push(MonotoneMap {
                dom,
                cod,
                values: prefix.clone(),
            });
            return;
        }
        let start = prefix.last().copied().unwrap_or(0);
        for v in start..=cod {
            prefix.push(v);
            go(dom, cod, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(dom, cod, &mut Vec::with_capacity(dom + 1), &mut out);
    out
}

/// All surjective monotone maps `[dom] -> [cod]`.
pub fn all_epis(dom: usize, cod: usize) -> Vec<MonotoneMap> {
    all_maps(dom, cod).into_iter().filter(MonotoneMap::is_epi).collect()
}

/// One instance of the simplicial identities that failed to hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityViolation {
    pub family: &'static str,
    pub n: usize,
    pub j: usize,
    pub k: usize,
    pub lhs: MonotoneMap,
    pub rhs: MonotoneMap,
}

impl fmt::Display for IdentityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} on [{}] with j={}, k={}: {:?} != {:?}",
            self.family, self.n, self.j, self.k, self.lhs, self.rhs
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct IdentityReport {
    pub checked: usize,
    pub violations: Vec<IdentityViolation>,
}

impl IdentityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const FAMILY_DEGENERACY_FACE: &str = "s_j∘d_k";
pub const FAMILY_FACE_FACE: &str = "d_j∘d_k = d_{k+1}∘d_j";
pub const FAMILY_DEGENERACY_DEGENERACY: &str = "s_j∘s_k = s_k∘s_{j+1}";

/// Verify the three families of simplicial identities by composing maps,
/// for every base object `[n]` with `n <= max_n`:
///
/// * `s_j ∘ d_k` on `[n]` is `d_{k-1} ∘ s_j` if `k > j+1`, the identity if
///   `k ∈ {j, j+1}`, and `d_k ∘ s_{j-1}` if `k < j`;
/// * `d_j ∘ d_k = d_{k+1} ∘ d_j` on `[n]` for `k >= j`;
/// * `s_j ∘ s_k = s_k ∘ s_{j+1}` on `[n+2]` for `j >= k`.
pub fn check_simplicial_identities(max_n: usize) -> IdentityReport {
    let mut report = IdentityReport::default();
    let mut record = |family, n, j, k, lhs: MonotoneMap, rhs: MonotoneMap| {
        report.checked += 1;
        if lhs != rhs {
            report.violations.push(IdentityViolation {
                family,
                n,
                j,
                k,
                lhs,
                rhs,
            });
        }
    };
    let d = |n, i| face_map(n, i).expect("face index in range");
    let s = |n, i| degeneracy_map(n, i).expect("degeneracy index in range");
    let c = |g: &MonotoneMap, f: &MonotoneMap| compose(g, f).expect("composable");

    for n in 0..=max_n {
        // s_j : [n+1] -> [n], d_k : [n] -> [n+1]
        for j in 0..=n {
            for k in 0..=n + 1 {
                let lhs = c(&s(n, j), &d(n, k));
                let rhs = if k == j || k == j + 1 {
                    MonotoneMap::identity(n)
                } else if k > j + 1 {
                    c(&d(n - 1, k - 1), &s(n - 1, j))
                } else {
                    c(&d(n - 1, k), &s(n - 1, j - 1))
                };
                record(FAMILY_DEGENERACY_FACE, n, j, k, lhs, rhs);
            }
        }
        // d_k : [n] -> [n+1], d_j : [n+1] -> [n+2]
        for k in 0..=n + 1 {
            for j in 0..=k {
                let lhs = c(&d(n + 1, j), &d(n, k));
                let rhs = c(&d(n + 1, k + 1), &d(n, j));
                record(FAMILY_FACE_FACE, n, j, k, lhs, rhs);
            }
        }
        // s_k : [n+2] -> [n+1], s_j : [n+1] -> [n]
        for j in 0..=n {
            for k in 0..=j {
                let lhs = c(&s(n, j), &s(n + 1, k));
                let rhs = c(&s(n, k), &s(n + 1, j + 1));
                record(FAMILY_DEGENERACY_DEGENERACY, n, j, k, lhs, rhs);
            }
        }
    }
    report
}
