//! Truncated finite simplicial sets with optional Malcev structure.
//!
//! Elements are opaque tokens: at each level they are indices into the
//! carrier, and every piece of structure lives in a table. The truncation
//! level `N` is explicit; asking for data above it is an error.

mod builtin;
mod json;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::delta::{factorize, MonotoneMap};

pub use builtin::{
    constant_algebra, cocycle_algebra, nerve_abelian, section_from_point, terminal, FiniteGroup,
    FiniteMalcevAlgebra,
};
pub use json::{SimplicialMapJson, SimplicialSetJson};

/// Upper bound on `|X_n|^3` for a stored Malcev table.
pub const MAX_MALCEV_TABLE: usize = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SalgError {
    #[error("level {level} is out of the truncation range 0..={truncation}")]
    OutOfTruncation { level: usize, truncation: usize },
    #[error("malformed tables: {0}")]
    Malformed(String),
    #[error("no element named {name:?} at level {level}")]
    UnknownElement { level: usize, name: String },
    #[error("duplicate element name {name:?} at level {level}")]
    DuplicateName { level: usize, name: String },
    #[error("Malcev axiom fails: {0}")]
    MalcevAxiom(String),
    #[error("group is not abelian: {a} * {b} != {b} * {a}")]
    NonAbelian { a: String, b: String },
    #[error("not a group: {0}")]
    NotAGroup(String),
    #[error("Malcev table at level {level} would have {entries} entries")]
    TableTooLarge { level: usize, entries: usize },
    #[error("structure is invalid: {0}")]
    Invalid(String),
    #[error("truncation levels differ: {0} and {1}")]
    TruncationMismatch(usize, usize),
    #[error("map is not simplicial: {0}")]
    NotSimplicial(String),
    #[error("missing Malcev structure on the {0}")]
    MissingMalcev(&'static str),
    #[error("degeneracy-section law fails: {0}")]
    SectionLaw(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Level {
    names: Vec<String>,
    index: HashMap<String, usize>,
    /// `faces[i][x] = d_i(x)`, empty at level 0
    faces: Vec<Vec<usize>>,
    /// `degeneracies[i][x] = s_i(x)`, empty at the top level
    degeneracies: Vec<Vec<usize>>,
}

/// Ternary tables `μ_n : X_n^3 -> X_n`, flattened as `(a * len + b) * len + c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalcevStructure {
    tables: Vec<Vec<usize>>,
}

impl MalcevStructure {
    pub fn new(tables: Vec<Vec<usize>>) -> Self {
        MalcevStructure { tables }
    }
}

/// Raw per-level data used to assemble a [`SimplicialSet`].
#[derive(Debug, Clone, Default)]
pub struct LevelTables {
    pub names: Vec<String>,
    pub faces: Vec<Vec<usize>>,
    pub degeneracies: Vec<Vec<usize>>,
}

/// A simplicial set truncated at level `N`, with finite carriers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialSet {
    levels: Vec<Level>,
    mu: Option<MalcevStructure>,
}

impl SimplicialSet {
    /// Assemble from tables, checking only shapes and index bounds. The
    /// simplicial identities are checked by [`SimplicialSet::validate`].
    pub fn from_tables(
        levels: Vec<LevelTables>,
        mu: Option<MalcevStructure>,
    ) -> Result<Self, SalgError> {
        if levels.is_empty() {
            return Err(SalgError::Malformed("no levels".into()));
        }
        let top = levels.len() - 1;
        let sizes: Vec<usize> = levels.iter().map(|l| l.names.len()).collect();
        let mut built = Vec::with_capacity(levels.len());
        for (n, level) in levels.into_iter().enumerate() {
            if level.names.is_empty() {
                return Err(SalgError::Malformed(format!("level {n} has an empty carrier")));
            }
            let expected_faces = if n == 0 { 0 } else { n + 1 };
            if level.faces.len() != expected_faces {
                return Err(SalgError::Malformed(format!(
                    "level {n} has {} face tables, expected {expected_faces}",
                    level.faces.len()
                )));
            }
            let expected_degeneracies = if n == top { 0 } else { n + 1 };
            if level.degeneracies.len() != expected_degeneracies {
                return Err(SalgError::Malformed(format!(
                    "level {n} has {} degeneracy tables, expected {expected_degeneracies}",
                    level.degeneracies.len()
                )));
            }
            for (i, table) in level.faces.iter().enumerate() {
                check_table(table, sizes[n], sizes[n.saturating_sub(1)], || {
                    format!("face d_{i} at level {n}")
                })?;
            }
            for (i, table) in level.degeneracies.iter().enumerate() {
                check_table(table, sizes[n], sizes.get(n + 1).copied().unwrap_or(0), || {
                    format!("degeneracy s_{i} at level {n}")
                })?;
            }
            let mut index = HashMap::with_capacity(level.names.len());
            for (x, name) in level.names.iter().enumerate() {
                if index.insert(name.clone(), x).is_some() {
                    return Err(SalgError::DuplicateName {
                        level: n,
                        name: name.clone(),
                    });
                }
            }
            built.push(Level {
                names: level.names,
                index,
                faces: level.faces,
                degeneracies: level.degeneracies,
            });
        }
        if let Some(mu) = &mu {
            if mu.tables.len() != built.len() {
                return Err(SalgError::Malformed(format!(
                    "{} Malcev tables for {} levels",
                    mu.tables.len(),
                    built.len()
                )));
            }
            for (n, table) in mu.tables.iter().enumerate() {
                let size = sizes[n];
                check_table(table, size * size * size, size, || format!("μ at level {n}"))?;
            }
        }
        Ok(SimplicialSet { levels: built, mu })
    }

    pub fn truncation(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn check_level(&self, level: usize) -> Result<(), SalgError> {
        if level > self.truncation() {
            return Err(SalgError::OutOfTruncation {
                level,
                truncation: self.truncation(),
            });
        }
        Ok(())
    }

    /// `|X_level|`; panics above the truncation.
    pub fn len(&self, level: usize) -> usize {
        self.levels[level].names.len()
    }

    pub fn name(&self, level: usize, x: usize) -> &str {
        &self.levels[level].names[x]
    }

    pub fn names(&self, level: usize) -> &[String] {
        &self.levels[level].names
    }

    pub fn lookup(&self, level: usize, name: &str) -> Result<usize, SalgError> {
        self.check_level(level)?;
        self.levels[level]
            .index
            .get(name)
            .copied()
            .ok_or_else(|| SalgError::UnknownElement {
                level,
                name: name.to_string(),
            })
    }

    /// `d_i` on `X_level`, landing in `X_{level-1}`.
    pub fn face(&self, level: usize, i: usize, x: usize) -> usize {
        self.levels[level].faces[i][x]
    }

    /// `s_i` on `X_level`, landing in `X_{level+1}`.
    pub fn degeneracy(&self, level: usize, i: usize, x: usize) -> usize {
        self.levels[level].degeneracies[i][x]
    }

    pub fn has_malcev(&self) -> bool {
        self.mu.is_some()
    }

    pub fn malcev(&self) -> Option<&MalcevStructure> {
        self.mu.as_ref()
    }

    /// `μ(a, b, c)` at `level`, if a Malcev structure is present.
    pub fn mu(&self, level: usize, a: usize, b: usize, c: usize) -> Option<usize> {
        let size = self.len(level);
        self.mu
            .as_ref()
            .map(|mu| mu.tables[level][(a * size + b) * size + c])
    }

    /// The presheaf action `x ∘ f` for `x ∈ X_{cod f}`, landing in `X_{dom f}`.
    ///
    /// `f` is factored as faces after degeneracies; the faces act first
    /// (outermost generator first), then the degeneracies.
    pub fn act(&self, x: usize, f: &MonotoneMap) -> Result<usize, SalgError> {
        self.check_level(f.cod())?;
        self.check_level(f.dom())?;
        let fac = factorize(f);
        let mut level = f.cod();
        let mut current = x;
        for &i in fac.face_indices.iter().rev() {
            current = self.face(level, i, current);
            level -= 1;
        }
        for &j in &fac.degeneracy_indices {
            current = self.degeneracy(level, j, current);
            level += 1;
        }
        debug_assert_eq!(level, f.dom());
        Ok(current)
    }

    /// Exhaustively check every simplicial identity instance that stays
    /// within the truncation, and the Malcev axioms and naturality of `μ`
    /// when present.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let top = self.truncation();
        // s_j then d_k, read on x ∈ X_n with n + 1 <= N
        for n in 0..top {
            for x in 0..self.len(n) {
                for j in 0..=n {
                    let sx = self.degeneracy(n, j, x);
                    for k in 0..=n + 1 {
                        let lhs = self.face(n + 1, k, sx);
                        let rhs = if k == j || k == j + 1 {
                            x
                        } else if k > j + 1 {
                            self.degeneracy(n - 1, j, self.face(n, k - 1, x))
                        } else {
                            self.degeneracy(n - 1, j - 1, self.face(n, k, x))
                        };
                        report.record(lhs == rhs, || Violation {
                            identity: "d_k(s_j x) [s_j∘d_k]".into(),
                            level: n,
                            indices: vec![j, k],
                            element: self.name(n, x).to_string(),
                        });
                    }
                }
            }
        }
        // d_j∘d_k = d_{k+1}∘d_j, read on x ∈ X_{n+2}
        for n2 in 2..=top {
            for x in 0..self.len(n2) {
                for k in 0..n2 {
                    for j in 0..=k {
                        let lhs = self.face(n2 - 1, k, self.face(n2, j, x));
                        let rhs = self.face(n2 - 1, j, self.face(n2, k + 1, x));
                        report.record(lhs == rhs, || Violation {
                            identity: "d_k(d_j x) = d_j(d_{k+1} x) [d_j∘d_k = d_{k+1}∘d_j]".into(),
                            level: n2,
                            indices: vec![j, k],
                            element: self.name(n2, x).to_string(),
                        });
                    }
                }
            }
        }
        // s_j∘s_k = s_k∘s_{j+1}, read on x ∈ X_n with n + 2 <= N
        for n in 0..top.saturating_sub(1) {
            for x in 0..self.len(n) {
                for j in 0..=n {
                    for k in 0..=j {
                        let lhs = self.degeneracy(n + 1, k, self.degeneracy(n, j, x));
                        let rhs = self.degeneracy(n + 1, j + 1, self.degeneracy(n, k, x));
                        report.record(lhs == rhs, || Violation {
                            identity: "s_k(s_j x) = s_{j+1}(s_k x) [s_j∘s_k = s_k∘s_{j+1}]".into(),
                            level: n,
                            indices: vec![j, k],
                            element: self.name(n, x).to_string(),
                        });
                    }
                }
            }
        }
        if self.mu.is_some() {
            self.validate_malcev(&mut report);
        }
        report
    }

    fn validate_malcev(&self, report: &mut ValidationReport) {
        let mu = |n, a, b, c| self.mu(n, a, b, c).expect("Malcev structure present");
        for n in 0..=self.truncation() {
            let size = self.len(n);
            for a in 0..size {
                for b in 0..size {
                    report.record(mu(n, a, a, b) == b, || Violation {
                        identity: "μ(x,x,y) = y".into(),
                        level: n,
                        indices: vec![],
                        element: format!("{},{}", self.name(n, a), self.name(n, b)),
                    });
                    report.record(mu(n, a, b, b) == a, || Violation {
                        identity: "μ(x,y,y) = x".into(),
                        level: n,
                        indices: vec![],
                        element: format!("{},{}", self.name(n, a), self.name(n, b)),
                    });
                }
            }
            for a in 0..size {
                for b in 0..size {
                    for c in 0..size {
                        let m = mu(n, a, b, c);
                        let triple = || format!("{},{},{}", self.name(n, a), self.name(n, b), self.name(n, c));
                        if n > 0 {
                            for i in 0..=n {
                                let f = |x| self.face(n, i, x);
                                report.record(f(m) == mu(n - 1, f(a), f(b), f(c)), || Violation {
                                    identity: "d_i μ = μ d_i".into(),
                                    level: n,
                                    indices: vec![i],
                                    element: triple(),
                                });
                            }
                        }
                        if n < self.truncation() {
                            for i in 0..=n {
                                let s = |x| self.degeneracy(n, i, x);
                                report.record(s(m) == mu(n + 1, s(a), s(b), s(c)), || Violation {
                                    identity: "s_i μ = μ s_i".into(),
                                    level: n,
                                    indices: vec![i],
                                    element: triple(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    /// Copy with a single face-table entry replaced; used for mutation tests
    /// and negative controls.
    pub fn with_face_entry(&self, level: usize, i: usize, x: usize, value: usize) -> SimplicialSet {
        let mut out = self.clone();
        out.levels[level].faces[i][x] = value;
        out
    }
}

fn check_table(
    table: &[usize],
    len: usize,
    bound: usize,
    what: impl Fn() -> String,
) -> Result<(), SalgError> {
    if table.len() != len {
        return Err(SalgError::Malformed(format!(
            "{} has {} entries, expected {len}",
            what(),
            table.len()
        )));
    }
    if let Some(bad) = table.iter().find(|&&v| v >= bound) {
        return Err(SalgError::Malformed(format!("{} has out-of-range entry {bad}", what())));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub struct Violation {
    pub identity: String,
    pub level: usize,
    pub indices: Vec<usize>,
    pub element: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} fails at level {} (indices {:?}) on {}",
            self.identity, self.level, self.indices, self.element
        )
    }
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ValidationReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn record(&mut self, ok: bool, violation: impl FnOnce() -> Violation) {
        self.checked += 1;
        if !ok {
            self.violations.push(violation());
        }
    }

    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A levelwise map between two simplicial sets of the same truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialMap {
    components: Vec<Vec<usize>>,
}

impl SimplicialMap {
    /// Check that the components commute with every face and degeneracy.
    pub fn new(
        source: &SimplicialSet,
        target: &SimplicialSet,
        components: Vec<Vec<usize>>,
    ) -> Result<Self, SalgError> {
        if source.truncation() != target.truncation() {
            return Err(SalgError::TruncationMismatch(source.truncation(), target.truncation()));
        }
        if components.len() != source.levels.len() {
            return Err(SalgError::Malformed("wrong number of map components".into()));
        }
        for (n, comp) in components.iter().enumerate() {
            check_table(comp, source.len(n), target.len(n), || format!("map component {n}"))?;
        }
        let map = SimplicialMap { components };
        map.check_simplicial(source, target)?;
        Ok(map)
    }

    /// The unique map to the terminal object.
    pub fn to_terminal(source: &SimplicialSet) -> Self {
        SimplicialMap {
            components: (0..=source.truncation()).map(|n| vec![0; source.len(n)]).collect(),
        }
    }

    pub fn apply(&self, level: usize, x: usize) -> usize {
        self.components[level][x]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    fn check_simplicial(&self, source: &SimplicialSet, target: &SimplicialSet) -> Result<(), SalgError> {
        for n in 0..=source.truncation() {
            for x in 0..source.len(n) {
                let fx = self.apply(n, x);
                if n > 0 {
                    for i in 0..=n {
                        if self.apply(n - 1, source.face(n, i, x)) != target.face(n, i, fx) {
                            return Err(SalgError::NotSimplicial(format!(
                                "d_{i} at level {n} on {}",
                                source.name(n, x)
                            )));
                        }
                    }
                }
                if n < source.truncation() {
                    for i in 0..=n {
                        if self.apply(n + 1, source.degeneracy(n, i, x)) != target.degeneracy(n, i, fx) {
                            return Err(SalgError::NotSimplicial(format!(
                                "s_{i} at level {n} on {}",
                                source.name(n, x)
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether the map commutes with `μ` at every level.
    pub fn is_algebraic(&self, source: &SimplicialSet, target: &SimplicialSet) -> Result<bool, SalgError> {
        if !source.has_malcev() {
            return Err(SalgError::MissingMalcev("source"));
        }
        if !target.has_malcev() {
            return Err(SalgError::MissingMalcev("target"));
        }
        for n in 0..=source.truncation() {
            let size = source.len(n);
            for a in 0..size {
                for b in 0..size {
                    for c in 0..size {
                        let lhs = self.apply(n, source.mu(n, a, b, c).unwrap());
                        let rhs = target
                            .mu(n, self.apply(n, a), self.apply(n, b), self.apply(n, c))
                            .unwrap();
                        if lhs != rhs {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    /// `g ∘ self`.
    pub fn then(&self, g: &SimplicialMap) -> SimplicialMap {
        SimplicialMap {
            components: self
                .components
                .iter()
                .enumerate()
                .map(|(n, comp)| comp.iter().map(|&x| g.apply(n, x)).collect())
                .collect(),
        }
    }
}

/// Levelwise functions `β_n : Y_n -> X_n` splitting `α` and commuting with
/// degeneracies. `β` need not commute with faces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegeneracySection {
    components: Vec<Vec<usize>>,
}

impl DegeneracySection {
    pub fn new(
        total: &SimplicialSet,
        base: &SimplicialSet,
        alpha: &SimplicialMap,
        components: Vec<Vec<usize>>,
    ) -> Result<Self, SalgError> {
        if components.len() != base.levels.len() {
            return Err(SalgError::Malformed("wrong number of section components".into()));
        }
        for (n, comp) in components.iter().enumerate() {
            check_table(comp, base.len(n), total.len(n), || format!("section component {n}"))?;
        }
        for n in 0..=base.truncation() {
            for y in 0..base.len(n) {
                if alpha.apply(n, components[n][y]) != y {
                    return Err(SalgError::SectionLaw(format!(
                        "α_{n}(β_{n}({})) != {}",
                        base.name(n, y),
                        base.name(n, y)
                    )));
                }
                if n < base.truncation() {
                    for k in 0..=n {
                        let lhs = components[n + 1][base.degeneracy(n, k, y)];
                        let rhs = total.degeneracy(n, k, components[n][y]);
                        if lhs != rhs {
                            return Err(SalgError::SectionLaw(format!(
                                "β_{}(s_{k} {}) != s_{k} β_{n}({})",
                                n + 1,
                                base.name(n, y),
                                base.name(n, y)
                            )));
                        }
                    }
                }
            }
        }
        Ok(DegeneracySection { components })
    }

    pub fn apply(&self, level: usize, y: usize) -> usize {
        self.components[level][y]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }
}
