//! Finite p-groups given by a multiplication table.

use crate::error::{HaloError, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    names: Vec<String>,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
    symbols: BTreeMap<String, usize>,
}

fn is_symbol(s: &str) -> bool {
    let mut ch = s.chars();
    matches!(ch.next(), Some(c) if c.is_ascii_alphabetic())
        && ch.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s != "T"
}

impl FiniteGroup {
    /// Builds a group from element names and `table[a][b] = a*b`.
    ///
    /// Names that are plain identifiers act as symbols; every other name must be a
    /// `*`-separated word in symbols (with optional `^k`) evaluating to its element.
    pub fn from_table(names: Vec<String>, table: Vec<Vec<usize>>) -> Result<Self> {
        let n = names.len();
        if n == 0 || table.len() != n || table.iter().any(|r| r.len() != n) {
            return Err(HaloError::Invalid("group table shape".into()));
        }
        if table.iter().flatten().any(|&x| x >= n) {
            return Err(HaloError::Invalid("group table entry out of range".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a))
            .ok_or_else(|| HaloError::Invalid("group has no identity".into()))?;
        let mut inverse = vec![usize::MAX; n];
        for a in 0..n {
            inverse[a] = (0..n)
                .find(|&b| table[a][b] == identity && table[b][a] == identity)
                .ok_or_else(|| HaloError::Invalid("group element without inverse".into()))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(HaloError::Invalid("group table is not associative".into()));
                    }
                }
            }
        }
        let mut symbols = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            if is_symbol(name) && symbols.insert(name.clone(), i).is_some() {
                return Err(HaloError::Invalid(format!("duplicate group symbol {name}")));
            }
        }
        let g = FiniteGroup {
            names,
            table,
            identity,
            inverse,
            symbols,
        };
        for (i, name) in g.names.iter().enumerate() {
            if g.parse_word(name) != Some(i) {
                return Err(HaloError::Invalid(format!("group name {name} does not evaluate to its element")));
            }
        }
        Ok(g)
    }

    /// Cyclic group of order `n` with elements `e, g, g^2, ...`.
    pub fn cyclic(n: usize) -> Self {
        let names = (0..n)
            .map(|k| match k {
                0 => "e".to_string(),
                1 => "g".to_string(),
                _ => format!("g^{k}"),
            })
            .collect();
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::from_table(names, table).expect("cyclic group")
    }

    /// Heisenberg group of unipotent 3x3 matrices over Z/p, order p^3.
    ///
    /// `(a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')`; element `(a,b,c)` is named
    /// `x^a*y^b*z^(c-ab)`.
    pub fn heisenberg(p: usize) -> Self {
        let idx = |a: usize, b: usize, c: usize| (a * p + b) * p + c;
        let n = p * p * p;
        let mut table = vec![vec![0; n]; n];
        let mut names = vec![String::new(); n];
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    for a2 in 0..p {
                        for b2 in 0..p {
                            for c2 in 0..p {
                                table[idx(a, b, c)][idx(a2, b2, c2)] =
                                    idx((a + a2) % p, (b + b2) % p, (c + c2 + a * b2) % p);
                            }
                        }
                    }
                    let z = (c + p * p - (a * b) % p) % p;
                    let mut parts = Vec::new();
                    for (sym, k) in [("x", a), ("y", b), ("z", z)] {
                        match k {
                            0 => {}
                            1 => parts.push(sym.to_string()),
                            _ => parts.push(format!("{sym}^{k}")),
                        }
                    }
                    names[idx(a, b, c)] = if parts.is_empty() {
                        "e".into()
                    } else {
                        parts.join("*")
                    };
                }
            }
        }
        Self::from_table(names, table).expect("heisenberg group")
    }

    pub fn order(&self) -> usize {
        self.names.len()
    }
    pub fn identity(&self) -> usize {
        self.identity
    }
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }
    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }
    pub fn name(&self, a: usize) -> &str {
        &self.names[a]
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }
    pub fn symbol(&self, s: &str) -> Option<usize> {
        self.symbols.get(s).copied()
    }
    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.table[a][b] == self.table[b][a]))
    }

    pub fn pow(&self, a: usize, k: u64) -> usize {
        let mut r = self.identity;
        for _ in 0..k {
            r = self.mul(r, a);
        }
        r
    }

    /// Evaluates a word such as `x^2*y` in the group symbols.
    pub fn parse_word(&self, s: &str) -> Option<usize> {
        let mut acc = self.identity;
        for factor in s.split('*') {
            let factor = factor.trim();
            let (sym, k) = match factor.split_once('^') {
                Some((a, b)) => (a.trim(), b.trim().parse::<u64>().ok()?),
                None => (factor, 1),
            };
            acc = self.mul(acc, self.pow(self.symbol(sym)?, k));
        }
        Some(acc)
    }

    /// Whether the order is a power of `p`.
    pub fn is_p_group(&self, p: u64) -> bool {
        let mut n = self.order() as u64;
        while n % p == 0 {
            n /= p;
        }
        n == 1
    }
}
