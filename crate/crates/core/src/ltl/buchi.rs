//! Tableau translation of LTL in negation normal form into a Büchi
//! automaton, followed by degeneralization.

use std::collections::{BTreeSet, HashMap};

/// Negation normal form over proposition indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nnf {
    True,
    False,
    Lit(bool, usize),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
    Next(Box<Nnf>),
    Until(Box<Nnf>, Box<Nnf>),
    Release(Box<Nnf>, Box<Nnf>),
}

impl Nnf {
    pub fn and(a: Nnf, b: Nnf) -> Nnf {
        Nnf::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Nnf, b: Nnf) -> Nnf {
        Nnf::Or(Box::new(a), Box::new(b))
    }
    pub fn until(a: Nnf, b: Nnf) -> Nnf {
        Nnf::Until(Box::new(a), Box::new(b))
    }
    pub fn release(a: Nnf, b: Nnf) -> Nnf {
        Nnf::Release(Box::new(a), Box::new(b))
    }
}

/// State of the automaton: the literals it requires of the position it
/// reads, as `(positive, proposition)` pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuchiState {
    pub label: Vec<(bool, usize)>,
    pub succ: Vec<usize>,
    pub accepting: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Buchi {
    pub states: Vec<BuchiState>,
    pub initial: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("automaton exceeds {0} nodes")]
pub struct SizeExceeded(pub usize);

#[derive(Clone)]
struct Node {
    incoming: BTreeSet<usize>,
    new: BTreeSet<usize>,
    old: BTreeSet<usize>,
    next: BTreeSet<usize>,
}

const INIT: usize = usize::MAX;

struct Tableau {
    forms: Vec<Nnf>,
    ids: HashMap<Nnf, usize>,
    done: Vec<Node>,
    budget: usize,
}

impl Tableau {
    fn id(&mut self, f: &Nnf) -> usize {
        if let Some(&i) = self.ids.get(f) {
            return i;
        }
        self.forms.push(f.clone());
        self.ids.insert(f.clone(), self.forms.len() - 1);
        self.forms.len() - 1
    }

    fn expand(&mut self, start: Node) -> Result<(), SizeExceeded> {
        let mut work = vec![start];
        while let Some(mut node) = work.pop() {
            let Some(&f) = node.new.iter().next() else {
                if let Some(d) = self
                    .done
                    .iter_mut()
                    .find(|d| d.old == node.old && d.next == node.next)
                {
                    d.incoming.extend(node.incoming);
                    continue;
                }
                self.done.push(node.clone());
                if self.done.len() > self.budget {
                    return Err(SizeExceeded(self.budget));
                }
                let me = self.done.len() - 1;
                work.push(Node {
                    incoming: [me].into_iter().collect(),
                    new: node.next.clone(),
                    old: BTreeSet::new(),
                    next: BTreeSet::new(),
                });
                continue;
            };
            node.new.remove(&f);
            if node.old.contains(&f) {
                work.push(node);
                continue;
            }
            let form = self.forms[f].clone();
            match form {
                Nnf::False => {}
                Nnf::True => {
                    node.old.insert(f);
                    work.push(node);
                }
                Nnf::Lit(pos, p) => {
                    let neg = self.id(&Nnf::Lit(!pos, p));
                    if !node.old.contains(&neg) {
                        node.old.insert(f);
                        work.push(node);
                    }
                }
                Nnf::And(a, b) => {
                    let (a, b) = (self.id(&a), self.id(&b));
                    node.old.insert(f);
                    for g in [a, b] {
                        if !node.old.contains(&g) {
                            node.new.insert(g);
                        }
                    }
                    work.push(node);
                }
                Nnf::Next(a) => {
                    let a = self.id(&a);
                    node.old.insert(f);
                    node.next.insert(a);
                    work.push(node);
                }
                Nnf::Or(a, b) => {
                    let (a, b) = (self.id(&a), self.id(&b));
                    work.extend(self.split(node, f, &[a], &[], &[b]));
                }
                Nnf::Until(a, b) => {
                    let (a, b) = (self.id(&a), self.id(&b));
                    work.extend(self.split(node, f, &[a], &[f], &[b]));
                }
                Nnf::Release(a, b) => {
                    let (a, b) = (self.id(&a), self.id(&b));
                    let both = [a, b];
                    work.extend(self.split(node, f, &[b], &[f], &both));
                }
            }
        }
        Ok(())
    }

    /// Branches on `f`: left gets `new1` now and `next1` later, right gets
    /// `new2` now.
    fn split(
        &self,
        node: Node,
        f: usize,
        new1: &[usize],
        next1: &[usize],
        new2: &[usize],
    ) -> [Node; 2] {
        let mut n1 = node.clone();
        let mut n2 = node;
        n1.old.insert(f);
        n2.old.insert(f);
        for &g in new1 {
            if !n1.old.contains(&g) {
                n1.new.insert(g);
            }
        }
        n1.next.extend(next1.iter().copied());
        for &g in new2 {
            if !n2.old.contains(&g) {
                n2.new.insert(g);
            }
        }
        [n2, n1]
    }
}

/// Builds a Büchi automaton accepting exactly the words satisfying `f`.
pub fn to_buchi(f: &Nnf, budget: usize) -> Result<Buchi, SizeExceeded> {
    let mut t = Tableau {
        forms: vec![],
        ids: HashMap::new(),
        done: vec![],
        budget,
    };
    let root = t.id(f);
    t.expand(Node {
        incoming: [INIT].into_iter().collect(),
        new: [root].into_iter().collect(),
        old: BTreeSet::new(),
        next: BTreeSet::new(),
    })?;
    let untils: Vec<(usize, usize)> = (0..t.forms.len())
        .filter_map(|i| match &t.forms[i] {
            Nnf::Until(_, b) => Some((i, t.ids[b.as_ref()])),
            _ => None,
        })
        .collect();
    let n = t.done.len();
    // fair[k][q]: node q satisfies the k-th acceptance condition
    let fair: Vec<Vec<bool>> = untils
        .iter()
        .map(|&(u, b)| {
            t.done
                .iter()
                .map(|d| !d.old.contains(&u) || d.old.contains(&b))
                .collect()
        })
        .collect();
    let k = fair.len().max(1);
    let index = |q: usize, i: usize| q * k + i;
    let mut states = Vec::with_capacity(n * k);
    for q in 0..n {
        let label: Vec<(bool, usize)> = t.done[q]
            .old
            .iter()
            .filter_map(|&g| match t.forms[g] {
                Nnf::Lit(pos, p) => Some((pos, p)),
                _ => None,
            })
            .collect();
        for i in 0..k {
            let in_fair = fair.is_empty() || fair[i][q];
            states.push(BuchiState {
                label: label.clone(),
                succ: vec![],
                accepting: i == 0 && in_fair,
            });
        }
    }
    let mut initial = Vec::new();
    for q in 0..n {
        for &p in &t.done[q].incoming {
            if p == INIT {
                initial.push(index(q, 0));
                continue;
            }
            for i in 0..k {
                let j = if fair.is_empty() || fair[i][p] {
                    (i + 1) % k
                } else {
                    i
                };
                states[index(p, i)].succ.push(index(q, j));
            }
        }
    }
    for s in &mut states {
        s.succ.sort_unstable();
        s.succ.dedup();
    }
    Ok(Buchi { states, initial })
}
