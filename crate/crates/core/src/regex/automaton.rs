use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::parse::{intersect, Node};
use super::RegexError;

#[derive(Debug, Default, Clone)]
struct NState {
    eps: Vec<usize>,
    trans: Vec<(u32, u32, usize)>,
}

#[derive(Debug, Default)]
struct Nfa {
    states: Vec<NState>,
}

impl Nfa {
    fn add(&mut self) -> usize {
        self.states.push(NState::default());
        self.states.len() - 1
    }

    /// Thompson construction: returns (entry, exit).
    fn build(&mut self, node: &Node, alphabet: &[(u32, u32)]) -> (usize, usize) {
        match node {
            Node::Empty => {
                let s = self.add();
                (s, s)
            }
            Node::Class(rs) => {
                let s = self.add();
                let e = self.add();
                for (lo, hi) in intersect(rs, alphabet) {
                    self.states[s].trans.push((lo, hi, e));
                }
                (s, e)
            }
            Node::Concat(items) => {
                let (entry, mut exit) = self.build(&items[0], alphabet);
                for n in &items[1..] {
                    let (s, e) = self.build(n, alphabet);
                    self.states[exit].eps.push(s);
                    exit = e;
                }
                (entry, exit)
            }
            Node::Alt(branches) => {
                let s = self.add();
                let e = self.add();
                for b in branches {
                    let (bs, be) = self.build(b, alphabet);
                    self.states[s].eps.push(bs);
                    self.states[be].eps.push(e);
                }
                (s, e)
            }
            Node::Star(inner) => {
                let s = self.add();
                let e = self.add();
                let (is, ie) = self.build(inner, alphabet);
                self.states[s].eps.extend([is, e]);
                self.states[ie].eps.extend([is, e]);
                (s, e)
            }
            Node::Plus(inner) => {
                let e = self.add();
                let (is, ie) = self.build(inner, alphabet);
                self.states[ie].eps.extend([is, e]);
                (is, e)
            }
            Node::Opt(inner) => {
                let s = self.add();
                let e = self.add();
                let (is, ie) = self.build(inner, alphabet);
                self.states[s].eps.extend([is, e]);
                self.states[ie].eps.push(e);
                (s, e)
            }
            Node::Repeat { node, min, max } => {
                let entry = self.add();
                let mut exit = entry;
                for _ in 0..*min {
                    let (s, e) = self.build(node, alphabet);
                    self.states[exit].eps.push(s);
                    exit = e;
                }
                match max {
                    None => {
                        let (s, e) = self.build(&Node::Star(node.clone()), alphabet);
                        self.states[exit].eps.push(s);
                        exit = e;
                    }
                    Some(max) => {
                        let end = self.add();
                        for _ in *min..*max {
                            let (s, e) = self.build(node, alphabet);
                            self.states[exit].eps.extend([s, end]);
                            exit = e;
                        }
                        self.states[exit].eps.push(end);
                        exit = end;
                    }
                }
                (entry, exit)
            }
        }
    }

    fn closure(&self, seed: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut set = BTreeSet::new();
        let mut stack: Vec<usize> = seed.into_iter().collect();
        while let Some(s) = stack.pop() {
            if set.insert(s) {
                stack.extend(self.states[s].eps.iter().copied());
            }
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DState {
    pub accept: bool,
    /// Sorted disjoint `(lo, hi, target)` intervals; anything else is dead.
    pub trans: Vec<(u32, u32, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    pub states: Vec<DState>,
}

impl Dfa {
    pub fn build(node: &Node, alphabet: &[(u32, u32)], cap: usize) -> Result<Dfa, RegexError> {
        let mut nfa = Nfa::default();
        let (entry, exit) = nfa.build(node, alphabet);
        let start = nfa.closure([entry]);
        let mut ids: BTreeMap<BTreeSet<usize>, usize> = BTreeMap::new();
        let mut states = Vec::new();
        let mut queue = VecDeque::new();
        ids.insert(start.clone(), 0);
        states.push(DState {
            accept: start.contains(&exit),
            trans: Vec::new(),
        });
        queue.push_back(start);
        while let Some(set) = queue.pop_front() {
            let id = ids[&set];
            let moves: Vec<(u32, u32, usize)> = set
                .iter()
                .flat_map(|&s| nfa.states[s].trans.iter().copied())
                .collect();
            let mut points: Vec<u32> = moves
                .iter()
                .flat_map(|&(lo, hi, _)| [lo, hi.saturating_add(1)])
                .collect();
            points.sort_unstable();
            points.dedup();
            let mut trans: Vec<(u32, u32, usize)> = Vec::new();
            for w in points.windows(2) {
                let (lo, hi) = (w[0], w[1] - 1);
                let targets: Vec<usize> = moves
                    .iter()
                    .filter(|&&(a, b, _)| a <= lo && hi <= b)
                    .map(|&(_, _, t)| t)
                    .collect();
                if targets.is_empty() {
                    continue;
                }
                let next = nfa.closure(targets);
                let tid = match ids.get(&next) {
                    Some(&t) => t,
                    None => {
                        if states.len() >= cap {
                            return Err(RegexError::TooManyStates { cap });
                        }
                        let t = states.len();
                        states.push(DState {
                            accept: next.contains(&exit),
                            trans: Vec::new(),
                        });
                        ids.insert(next.clone(), t);
                        queue.push_back(next);
                        t
                    }
                };
                match trans.last_mut() {
                    Some(last) if last.2 == tid && last.1 + 1 == lo => last.1 = hi,
                    _ => trans.push((lo, hi, tid)),
                }
            }
            states[id].trans = trans;
        }
        Ok(Dfa { states })
    }

    pub fn step(&self, state: usize, c: u32) -> Option<usize> {
        let trans = &self.states[state].trans;
        let i = trans.partition_point(|&(_, hi, _)| hi < c);
        match trans.get(i) {
            Some(&(lo, _, t)) if lo <= c => Some(t),
            _ => None,
        }
    }

    pub fn accepts(&self, input: &str) -> bool {
        let mut s = 0;
        for c in input.chars() {
            match self.step(s, c as u32) {
                Some(t) => s = t,
                None => return false,
            }
        }
        self.states[s].accept
    }

    /// Shortest string accepted by both automata, if any.
    pub fn intersection_witness(&self, other: &Dfa) -> Option<String> {
        let mut seen = BTreeMap::new();
        let mut queue = VecDeque::new();
        seen.insert((0usize, 0usize), None::<((usize, usize), u32)>);
        queue.push_back((0usize, 0usize));
        while let Some((a, b)) = queue.pop_front() {
            if self.states[a].accept && other.states[b].accept {
                let mut out = Vec::new();
                let mut cur = (a, b);
                while let Some(Some((prev, c))) = seen.get(&cur) {
                    out.push(char::from_u32(*c).unwrap_or('?'));
                    cur = *prev;
                }
                out.reverse();
                return Some(out.into_iter().collect());
            }
            for &(alo, ahi, at) in &self.states[a].trans {
                for &(blo, bhi, bt) in &other.states[b].trans {
                    let lo = alo.max(blo);
                    if lo > ahi.min(bhi) {
                        continue;
                    }
                    let next = (at, bt);
                    if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(next) {
                        let c = if char::from_u32(lo).is_some() { lo } else { lo + 1 };
                        e.insert(Some(((a, b), c)));
                        queue.push_back(next);
                    }
                }
            }
        }
        None
    }
}
