//! Builtin finite groups, Malcev algebras, and simplicial algebras built from them.

use std::collections::BTreeMap;

use super::{
    DegeneracySection, LevelTables, MalcevStructure, SalgError, SimplicialMap, SimplicialSet,
    MAX_MALCEV_TABLE,
};
use crate::delta::{degeneracy_map, face_map, MonotoneMap};

/// A finite group given by its multiplication table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    names: Vec<String>,
    table: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    /// `table[a * len + b] = a * b`. Checks the group axioms.
    pub fn new(names: Vec<String>, table: Vec<usize>) -> Result<Self, SalgError> {
        let len = names.len();
        if len == 0 || table.len() != len * len || table.iter().any(|&v| v >= len) {
            return Err(SalgError::NotAGroup("table shape".into()));
        }
        let op = |a: usize, b: usize| table[a * len + b];
        let identity = (0..len)
            .find(|&e| (0..len).all(|a| op(e, a) == a && op(a, e) == a))
            .ok_or_else(|| SalgError::NotAGroup("no identity".into()))?;
        let mut inverse = Vec::with_capacity(len);
        for a in 0..len {
            let inv = (0..len)
                .find(|&b| op(a, b) == identity && op(b, a) == identity)
                .ok_or_else(|| SalgError::NotAGroup(format!("{} has no inverse", names[a])))?;
            inverse.push(inv);
        }
        for a in 0..len {
            for b in 0..len {
                for c in 0..len {
                    if op(op(a, b), c) != op(a, op(b, c)) {
                        return Err(SalgError::NotAGroup(format!(
                            "not associative at ({}, {}, {})",
                            names[a], names[b], names[c]
                        )));
                    }
                }
            }
        }
        Ok(FiniteGroup {
            names,
            table,
            identity,
            inverse,
        })
    }

    pub fn cyclic(order: usize) -> Self {
        assert!(order > 0, "cyclic group of order 0");
        let names = (0..order).map(|a| a.to_string()).collect();
        let table = (0..order * order).map(|ab| (ab / order + ab % order) % order).collect();
        FiniteGroup::new(names, table).expect("cyclic group")
    }

    /// Direct product, with element names concatenated.
    pub fn product(&self, other: &FiniteGroup) -> Self {
        let (l1, l2) = (self.len(), other.len());
        let mut names = Vec::with_capacity(l1 * l2);
        for a in &self.names {
            for b in &other.names {
                names.push(format!("{a}{b}"));
            }
        }
        let mut table = Vec::with_capacity(l1 * l2 * l1 * l2);
        for x in 0..l1 * l2 {
            for y in 0..l1 * l2 {
                let first = self.op(x / l2, y / l2);
                let second = other.op(x % l2, y % l2);
                table.push(first * l2 + second);
            }
        }
        FiniteGroup::new(names, table).expect("product of groups")
    }

    /// The symmetric group on three letters, the smallest non-abelian group.
    pub fn symmetric3() -> Self {
        let perms: Vec<[usize; 3]> = vec![
            [0, 1, 2],
            [1, 2, 0],
            [2, 0, 1],
            [1, 0, 2],
            [0, 2, 1],
            [2, 1, 0],
        ];
        let names = ["e", "r", "rr", "t01", "t12", "t02"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).expect("closed");
        let mut table = Vec::with_capacity(36);
        for p in &perms {
            for q in &perms {
                table.push(index([p[q[0]], p[q[1]], p[q[2]]]));
            }
        }
        FiniteGroup::new(names, table).expect("S3")
    }

    /// `Z<k>`, `Z<k>xZ<l>...`, or `S3`.
    pub fn builtin(name: &str) -> Option<Self> {
        if name == "S3" {
            return Some(FiniteGroup::symmetric3());
        }
        let mut group: Option<FiniteGroup> = None;
        for part in name.split('x') {
            let order: usize = part.strip_prefix('Z')?.parse().ok()?;
            if order == 0 || order > 64 {
                return None;
            }
            let cyclic = FiniteGroup::cyclic(order);
            group = Some(match group {
                None => cyclic,
                Some(g) => g.product(&cyclic),
            });
        }
        group
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn op(&self, a: usize, b: usize) -> usize {
        self.table[a * self.len() + b]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn check_abelian(&self) -> Result<(), SalgError> {
        for a in 0..self.len() {
            for b in 0..self.len() {
                if self.op(a, b) != self.op(b, a) {
                    return Err(SalgError::NonAbelian {
                        a: self.names[a].clone(),
                        b: self.names[b].clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// `x y⁻¹ z`
    pub fn malcev(&self, x: usize, y: usize, z: usize) -> usize {
        self.op(self.op(x, self.inverse(y)), z)
    }
}

/// A finite set with a ternary operation satisfying the Malcev identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMalcevAlgebra {
    names: Vec<String>,
    table: Vec<usize>,
}

impl FiniteMalcevAlgebra {
    /// `table[(a * len + b) * len + c] = μ(a, b, c)`. Checks the Malcev identities.
    pub fn new(names: Vec<String>, table: Vec<usize>) -> Result<Self, SalgError> {
        let len = names.len();
        if len == 0 || table.len() != len * len * len || table.iter().any(|&v| v >= len) {
            return Err(SalgError::MalcevAxiom("table shape".into()));
        }
        let algebra = FiniteMalcevAlgebra { names, table };
        for a in 0..len {
            for b in 0..len {
                if algebra.mu(a, a, b) != b {
                    return Err(SalgError::MalcevAxiom(format!(
                        "μ({0},{0},{1}) != {1}",
                        algebra.names[a], algebra.names[b]
                    )));
                }
                if algebra.mu(a, b, b) != a {
                    return Err(SalgError::MalcevAxiom(format!(
                        "μ({0},{1},{1}) != {0}",
                        algebra.names[a], algebra.names[b]
                    )));
                }
            }
        }
        Ok(algebra)
    }

    pub fn from_group(group: &FiniteGroup) -> Self {
        let len = group.len();
        let mut table = Vec::with_capacity(len * len * len);
        for a in 0..len {
            for b in 0..len {
                for c in 0..len {
                    table.push(group.malcev(a, b, c));
                }
            }
        }
        FiniteMalcevAlgebra::new(group.names().to_vec(), table).expect("groups are Malcev")
    }

    /// The one-point algebra `{*}`.
    pub fn trivial() -> Self {
        FiniteMalcevAlgebra::new(vec!["*".into()], vec![0]).expect("trivial algebra")
    }

    /// The Heyting algebra on a chain `0 < 1 < ... < size-1`, with
    /// `μ(x,y,z) = ((z→y)→x) ∧ ((x→y)→z)`.
    pub fn heyting_chain(size: usize) -> Self {
        assert!(size >= 2, "a Heyting chain needs at least two elements");
        let top = size - 1;
        let implies = |a: usize, b: usize| if a <= b { top } else { b };
        let names = (0..size).map(|a| a.to_string()).collect();
        let mut table = Vec::with_capacity(size * size * size);
        for x in 0..size {
            for y in 0..size {
                for z in 0..size {
                    let left = implies(implies(z, y), x);
                    let right = implies(implies(x, y), z);
                    table.push(left.min(right));
                }
            }
        }
        FiniteMalcevAlgebra::new(names, table).expect("Heyting algebras are Malcev")
    }

    /// `trivial`, `heyting2`, `heyting3`, or any [`FiniteGroup::builtin`] name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "trivial" => Some(FiniteMalcevAlgebra::trivial()),
            "heyting2" => Some(FiniteMalcevAlgebra::heyting_chain(2)),
            "heyting3" => Some(FiniteMalcevAlgebra::heyting_chain(3)),
            _ => FiniteGroup::builtin(name).map(|g| FiniteMalcevAlgebra::from_group(&g)),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn mu(&self, a: usize, b: usize, c: usize) -> usize {
        let len = self.len();
        self.table[(a * len + b) * len + c]
    }
}

/// Tabulate a simplicial set from carriers and a contravariant action.
fn tabulate<T: Clone + Ord>(
    carriers: Vec<Vec<T>>,
    name: impl Fn(&T) -> String,
    act: impl Fn(&T, &MonotoneMap) -> T,
    mu: Option<&dyn Fn(&T, &T, &T) -> T>,
) -> Result<SimplicialSet, SalgError> {
    let top = carriers.len() - 1;
    let index: Vec<BTreeMap<T, usize>> = carriers
        .iter()
        .map(|c| c.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect())
        .collect();
    let lookup = |level: usize, t: &T| -> usize { index[level][t] };
    let mut levels = Vec::with_capacity(carriers.len());
    for (n, carrier) in carriers.iter().enumerate() {
        let faces = if n == 0 {
            Vec::new()
        } else {
            (0..=n)
                .map(|i| {
                    let d = face_map(n - 1, i).expect("face index in range");
                    carrier.iter().map(|x| lookup(n - 1, &act(x, &d))).collect()
                })
                .collect()
        };
        let degeneracies = if n == top {
            Vec::new()
        } else {
            (0..=n)
                .map(|i| {
                    let s = degeneracy_map(n, i).expect("degeneracy index in range");
                    carrier.iter().map(|x| lookup(n + 1, &act(x, &s))).collect()
                })
                .collect()
        };
        levels.push(LevelTables {
            names: carrier.iter().map(&name).collect(),
            faces,
            degeneracies,
        });
    }
    let mu = match mu {
        None => None,
        Some(op) => {
            let mut tables = Vec::with_capacity(carriers.len());
            for (n, carrier) in carriers.iter().enumerate() {
                let size = carrier.len();
                let entries = size.saturating_mul(size).saturating_mul(size);
                if entries > MAX_MALCEV_TABLE {
                    return Err(SalgError::TableTooLarge { level: n, entries });
                }
                let mut table = Vec::with_capacity(entries);
                for a in carrier {
                    for b in carrier {
                        for c in carrier {
                            table.push(lookup(n, &op(a, b, c)));
                        }
                    }
                }
                tables.push(table);
            }
            Some(MalcevStructure::new(tables))
        }
    };
    SimplicialSet::from_tables(levels, mu)
}

/// Every carrier is `M`, every face and degeneracy is the identity, and
/// `μ` is `M`'s operation at each level.
pub fn constant_algebra(algebra: &FiniteMalcevAlgebra, truncation: usize) -> SimplicialSet {
    let carriers = vec![(0..algebra.len()).collect::<Vec<_>>(); truncation + 1];
    let mu = |a: &usize, b: &usize, c: &usize| algebra.mu(*a, *b, *c);
    tabulate(
        carriers,
        |&a| algebra.names()[a].clone(),
        |&x, _| x,
        Some(&mu),
    )
    .expect("constant algebra tables")
}

/// The terminal simplicial set `Δ^0` truncated at `truncation`, with
/// `μ(*,*,*) = *`.
pub fn terminal(truncation: usize) -> SimplicialSet {
    constant_algebra(&FiniteMalcevAlgebra::trivial(), truncation)
}

/// All tuples in `{0..base}^len`, lexicographically.
fn tuples(base: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..base).map(move |g| {
                    let mut t = t.clone();
                    t.push(g);
                    t
                })
            })
            .collect();
    }
    out
}

fn tuple_name(group: &FiniteGroup, t: &[usize]) -> String {
    let parts: Vec<&str> = t.iter().map(|&g| group.names()[g].as_str()).collect();
    format!("({})", parts.join(","))
}

/// The nerve of an abelian group: an `n`-simplex is a tuple `(g_1,…,g_n)`,
/// read as a string of composable arrows `0 → 1 → … → n`.
pub fn nerve_abelian(group: &FiniteGroup, truncation: usize) -> Result<SimplicialSet, SalgError> {
    group.check_abelian()?;
    let carriers: Vec<Vec<Vec<usize>>> = (0..=truncation).map(|n| tuples(group.len(), n)).collect();
    let act = |x: &Vec<usize>, f: &MonotoneMap| -> Vec<usize> {
        // the arrow f(i-1) → f(i) is the product of g_t for f(i-1) < t ≤ f(i)
        (1..=f.dom())
            .map(|i| {
                (f.apply(i - 1) + 1..=f.apply(i))
                    .fold(group.identity(), |acc, t| group.op(acc, x[t - 1]))
            })
            .collect()
    };
    let mu = |a: &Vec<usize>, b: &Vec<usize>, c: &Vec<usize>| -> Vec<usize> {
        (0..a.len()).map(|i| group.malcev(a[i], b[i], c[i])).collect()
    };
    tabulate(carriers, |t| tuple_name(group, t), act, Some(&mu))
}

/// Strictly increasing triples in `{0..n}`, lexicographically.
fn triples(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 0..=n {
        for j in i + 1..=n {
            for k in j + 1..=n {
                out.push([i, j, k]);
            }
        }
    }
    out
}

/// Normalized 2-cocycles on `Δ^n` with values in an abelian group: a
/// simplicial abelian group whose horns have many fillers in dimension 3.
pub fn cocycle_algebra(group: &FiniteGroup, truncation: usize) -> Result<SimplicialSet, SalgError> {
    group.check_abelian()?;
    let tri: Vec<Vec<[usize; 3]>> = (0..=truncation).map(triples).collect();
    let position = |n: usize, t: [usize; 3]| tri[n].iter().position(|&u| u == t).expect("triple");
    let carriers: Vec<Vec<Vec<usize>>> = (0..=truncation)
        .map(|n| {
            tuples(group.len(), tri[n].len())
                .into_iter()
                .filter(|c| {
                    // c(j,k,l) - c(i,k,l) + c(i,j,l) - c(i,j,k) = 0 for i<j<k<l
                    let value = |t| c[position(n, t)];
                    (0..=n).all(|i| {
                        (i + 1..=n).all(|j| {
                            (j + 1..=n).all(|k| {
                                (k + 1..=n).all(|l| {
                                    let plus = group.op(value([j, k, l]), value([i, j, l]));
                                    let minus = group.op(value([i, k, l]), value([i, j, k]));
                                    plus == minus
                                })
                            })
                        })
                    })
                })
                .collect()
        })
        .collect();
    let act = |c: &Vec<usize>, f: &MonotoneMap| -> Vec<usize> {
        tri[f.dom()]
            .iter()
            .map(|&[i, j, k]| {
                let (a, b, d) = (f.apply(i), f.apply(j), f.apply(k));
                if a < b && b < d {
                    c[position(f.cod(), [a, b, d])]
                } else {
                    group.identity()
                }
            })
            .collect()
    };
    let mu = |a: &Vec<usize>, b: &Vec<usize>, c: &Vec<usize>| -> Vec<usize> {
        (0..a.len()).map(|i| group.malcev(a[i], b[i], c[i])).collect()
    };
    let name = |c: &Vec<usize>| {
        let parts: Vec<&str> = c.iter().map(|&g| group.names()[g].as_str()).collect();
        format!("<{}>", parts.join(","))
    };
    tabulate(carriers, name, act, Some(&mu))
}

/// The degeneracy-section of `X → Δ^0` determined by a vertex:
/// `β_n(*) = s_0^n(x0)`. Returns the terminal object, the projection and
/// the section.
pub fn section_from_point(
    x: &SimplicialSet,
    x0: usize,
) -> Result<(SimplicialSet, SimplicialMap, DegeneracySection), SalgError> {
    if x0 >= x.len(0) {
        return Err(SalgError::Invalid(format!("no vertex with index {x0}")));
    }
    let base = terminal(x.truncation());
    let alpha = SimplicialMap::to_terminal(x);
    let mut components = vec![vec![x0]];
    for n in 0..x.truncation() {
        let prev = components[n][0];
        components.push(vec![x.degeneracy(n, 0, prev)]);
    }
    let beta = DegeneracySection::new(x, &base, &alpha, components)?;
    Ok((base, alpha, beta))
}
