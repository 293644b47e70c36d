//! JSON form of simplicial sets and maps. Tables refer to elements by name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{LevelTables, MalcevStructure, SalgError, SimplicialMap, SimplicialSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelJson {
    pub carrier: Vec<String>,
    #[serde(default)]
    pub faces: Vec<Vec<String>>,
    #[serde(default)]
    pub degeneracies: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<Vec<Vec<String>>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplicialSetJson {
    pub truncation: usize,
    pub levels: Vec<LevelJson>,
}

/// Per-level `name → name` tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplicialMapJson {
    pub components: Vec<BTreeMap<String, String>>,
}

fn resolve(names: &BTreeMap<&str, usize>, level: usize, name: &str) -> Result<usize, SalgError> {
    names.get(name).copied().ok_or_else(|| SalgError::UnknownElement {
        level,
        name: name.to_string(),
    })
}

impl SimplicialSetJson {
    pub fn from_set(x: &SimplicialSet) -> Self {
        let top = x.truncation();
        let levels = (0..=top)
            .map(|n| {
                let names = x.names(n);
                let faces = if n == 0 {
                    Vec::new()
                } else {
                    (0..=n)
                        .map(|i| (0..x.len(n)).map(|e| x.name(n - 1, x.face(n, i, e)).to_string()).collect())
                        .collect()
                };
                let degeneracies = if n == top {
                    Vec::new()
                } else {
                    (0..=n)
                        .map(|i| {
                            (0..x.len(n))
                                .map(|e| x.name(n + 1, x.degeneracy(n, i, e)).to_string())
                                .collect()
                        })
                        .collect()
                };
                let mu = x.has_malcev().then(|| {
                    (0..x.len(n))
                        .map(|a| {
                            (0..x.len(n))
                                .map(|b| {
                                    (0..x.len(n))
                                        .map(|c| x.name(n, x.mu(n, a, b, c).unwrap()).to_string())
                                        .collect()
                                })
                                .collect()
                        })
                        .collect()
                });
                LevelJson {
                    carrier: names.to_vec(),
                    faces,
                    degeneracies,
                    mu,
                }
            })
            .collect();
        SimplicialSetJson {
            truncation: top,
            levels,
        }
    }

    /// Resolve names into tables. Shapes are checked; the simplicial
    /// identities are not (see [`SimplicialSet::validate`]).
    pub fn to_set(&self) -> Result<SimplicialSet, SalgError> {
        if self.levels.len() != self.truncation + 1 {
            return Err(SalgError::Malformed(format!(
                "truncation {} needs {} levels, found {}",
                self.truncation,
                self.truncation + 1,
                self.levels.len()
            )));
        }
        let indices: Vec<BTreeMap<&str, usize>> = self
            .levels
            .iter()
            .map(|l| l.carrier.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect())
            .collect();
        let with_mu = self.levels.iter().filter(|l| l.mu.is_some()).count();
        if with_mu != 0 && with_mu != self.levels.len() {
            return Err(SalgError::Malformed("μ must be given at every level or none".into()));
        }
        let mut levels = Vec::with_capacity(self.levels.len());
        let mut mu_tables = Vec::new();
        for (n, level) in self.levels.iter().enumerate() {
            let map_table = |table: &Vec<String>, target: usize| -> Result<Vec<usize>, SalgError> {
                let index = indices.get(target).ok_or_else(|| {
                    SalgError::Malformed(format!("level {n} refers to missing level {target}"))
                })?;
                table.iter().map(|s| resolve(index, target, s)).collect()
            };
            let faces = level
                .faces
                .iter()
                .map(|t| map_table(t, n.wrapping_sub(1)))
                .collect::<Result<_, _>>()?;
            let degeneracies = level
                .degeneracies
                .iter()
                .map(|t| map_table(t, n + 1))
                .collect::<Result<_, _>>()?;
            if let Some(mu) = &level.mu {
                let size = level.carrier.len();
                let mut table = Vec::with_capacity(size * size * size);
                if mu.len() != size || mu.iter().any(|r| r.len() != size || r.iter().any(|c| c.len() != size)) {
                    return Err(SalgError::Malformed(format!("μ at level {n} has the wrong shape")));
                }
                for plane in mu {
                    for row in plane {
                        for s in row {
                            table.push(resolve(&indices[n], n, s)?);
                        }
                    }
                }
                mu_tables.push(table);
            }
            levels.push(LevelTables {
                names: level.carrier.clone(),
                faces,
                degeneracies,
            });
        }
        let mu = (with_mu > 0).then(|| MalcevStructure::new(mu_tables));
        SimplicialSet::from_tables(levels, mu)
    }
}

impl SimplicialMapJson {
    pub fn from_map(map: &SimplicialMap, source: &SimplicialSet, target: &SimplicialSet) -> Self {
        let components = map
            .components()
            .iter()
            .enumerate()
            .map(|(n, comp)| {
                comp.iter()
                    .enumerate()
                    .map(|(x, &y)| (source.name(n, x).to_string(), target.name(n, y).to_string()))
                    .collect()
            })
            .collect();
        SimplicialMapJson { components }
    }

    pub fn to_map(&self, source: &SimplicialSet, target: &SimplicialSet) -> Result<SimplicialMap, SalgError> {
        if self.components.len() != source.truncation() + 1 {
            return Err(SalgError::Malformed("wrong number of map components".into()));
        }
        let mut components = Vec::with_capacity(self.components.len());
        for (n, table) in self.components.iter().enumerate() {
            let mut comp = Vec::with_capacity(source.len(n));
            for name in source.names(n) {
                let image = table.get(name).ok_or_else(|| {
                    SalgError::Malformed(format!("map component {n} has no entry for {name:?}"))
                })?;
                comp.push(target.lookup(n, image)?);
            }
            components.push(comp);
        }
        SimplicialMap::new(source, target, components)
    }
}

impl SimplicialSet {
    pub fn to_json(&self) -> SimplicialSetJson {
        SimplicialSetJson::from_set(self)
    }

    /// Parse and validate; any violated invariant is an error.
    pub fn from_json_str(text: &str) -> Result<Self, SalgError> {
        let raw: SimplicialSetJson =
            serde_json::from_str(text).map_err(|e| SalgError::Malformed(e.to_string()))?;
        let set = raw.to_set()?;
        let report = set.validate();
        match report.violations.first() {
            None => Ok(set),
            Some(v) => Err(SalgError::Invalid(v.to_string())),
        }
    }
}
