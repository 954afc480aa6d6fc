//! States, transitions, call trees from cbv proofs and call dags from memo
//! proofs, with rank-wise counting.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde_json::json;

use crate::error::{Error, Result};
use crate::explore::Explorer;
use crate::ordering::Precedence;
use crate::semantics::{Budget, DerivationProof, Judgement, Rule};
use crate::term::{apply_subst, match_patterns, matching_equations, Program, SymId, Term, Value};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    pub function: SymId,
    pub args: Vec<Value>,
}

impl State {
    pub fn from_call(t: &Term) -> Option<State> {
        match t {
            Term::App(f, args) => Some(State {
                function: *f,
                args: args.clone(),
            }),
            Term::Var(_) => None,
        }
    }

    pub fn to_term(&self) -> Term {
        Term::App(self.function, self.args.clone())
    }

    /// Size of the call term f(v1..vn).
    pub fn size(&self) -> usize {
        1 + self.args.iter().map(|a| a.size()).sum::<usize>()
    }

    pub fn show(&self, program: &Program) -> String {
        program.show(&self.to_term())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TransitionEdge {
    pub from: State,
    pub to: State,
    pub equation: usize,
    /// Pre-order index of the function-headed rhs subterm.
    pub occurrence: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureKind {
    Forest,
    Dag,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub state: State,
    pub equation: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeRef {
    pub from: usize,
    pub to: usize,
    pub equation: usize,
    pub occurrence: usize,
}

#[derive(Clone, Debug)]
pub struct CallStructure {
    pub kind: StructureKind,
    pub nodes: Vec<Node>,
    pub roots: Vec<usize>,
    pub edges: Vec<EdgeRef>,
    /// Read judgements resolved to the node of their Update (dags only).
    pub read_links: Vec<EdgeRef>,
}

impl CallStructure {
    fn empty(kind: StructureKind) -> Self {
        CallStructure {
            kind,
            nodes: Vec::new(),
            roots: Vec::new(),
            edges: Vec::new(),
            read_links: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Outgoing edges and links in rhs occurrence order.
    pub fn children(&self, n: usize) -> Vec<EdgeRef> {
        let mut out: Vec<EdgeRef> = self
            .edges
            .iter()
            .chain(self.read_links.iter())
            .filter(|e| e.from == n)
            .copied()
            .collect();
        out.sort_by_key(|e| e.occurrence);
        out
    }

    pub fn adjacency(&self) -> Vec<Vec<EdgeRef>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in self.edges.iter().chain(self.read_links.iter()) {
            adj[e.from].push(*e);
        }
        for v in &mut adj {
            v.sort_by_key(|e| e.occurrence);
        }
        adj
    }

    pub fn transition(&self, e: &EdgeRef) -> TransitionEdge {
        TransitionEdge {
            from: self.nodes[e.from].state.clone(),
            to: self.nodes[e.to].state.clone(),
            equation: e.equation,
            occurrence: e.occurrence,
        }
    }

    pub fn to_dot(&self, program: &Program) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "digraph {} {{",
            if self.kind == StructureKind::Forest { "call_tree" } else { "call_dag" }
        );
        let _ = writeln!(s, "  node [shape=box, fontname=monospace];");
        for (i, n) in self.nodes.iter().enumerate() {
            let label = n.state.show(program).replace('\\', "\\\\").replace('"', "\\\"");
            let _ = writeln!(s, "  n{i} [label=\"{label}\"];");
        }
        for e in &self.edges {
            let _ = writeln!(s, "  n{} -> n{} [label=\"e{}.{}\"];", e.from, e.to, e.equation, e.occurrence);
        }
        for e in &self.read_links {
            let _ = writeln!(
                s,
                "  n{} -> n{} [label=\"e{}.{}\", style=dashed];",
                e.from, e.to, e.equation, e.occurrence
            );
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self, program: &Program) -> serde_json::Value {
        let edge = |e: &EdgeRef| json!({"from": e.from, "to": e.to, "equation": e.equation, "occurrence": e.occurrence});
        json!({
            "kind": if self.kind == StructureKind::Forest { "forest" } else { "dag" },
            "nodes": self.nodes.iter().enumerate().map(|(i, n)| json!({
                "id": i,
                "state": n.state.show(program),
                "function": program.signature.name(n.state.function),
                "equation": n.equation,
            })).collect::<Vec<_>>(),
            "roots": self.roots,
            "edges": self.edges.iter().map(edge).collect::<Vec<_>>(),
            "read_links": self.read_links.iter().map(edge).collect::<Vec<_>>(),
        })
    }
}

/// Maps each function-headed subterm of `rhs` (by pre-order occurrence) to
/// the judgement evaluating that call inside the activation proof `j`.
pub fn occurrence_judgements<'j>(program: &Program, rhs: &Term, j: &'j Judgement) -> Result<Vec<(usize, &'j Judgement)>> {
    let sig = &program.signature;
    let index: HashMap<Vec<usize>, usize> = rhs
        .function_subterms(sig)
        .into_iter()
        .enumerate()
        .map(|(i, (p, _))| (p, i))
        .collect();
    let mut out = Vec::new();
    fn go<'j>(
        program: &Program,
        s: &Term,
        j: &'j Judgement,
        pos: &mut Vec<usize>,
        index: &HashMap<Vec<usize>, usize>,
        out: &mut Vec<(usize, &'j Judgement)>,
    ) -> Result<()> {
        let sig = &program.signature;
        let Term::App(f, args) = s else { return Ok(()) };
        let bad = || Error::Malformed(format!("activation proof does not follow {}", program.show(s)));
        if sig.is_constructor(*f) {
            if j.rule != Rule::Constructor || j.children.len() != args.len() {
                return Err(bad());
            }
            for (i, a) in args.iter().enumerate() {
                pos.push(i);
                go(program, a, &j.children[i], pos, index, out)?;
                pos.pop();
            }
            return Ok(());
        }
        let occ = index[pos.as_slice()];
        match j.rule {
            Rule::Split => {
                if j.children.len() != args.len() + 1 {
                    return Err(bad());
                }
                out.push((occ, j.children.last().unwrap()));
                for (i, a) in args.iter().enumerate() {
                    pos.push(i);
                    go(program, a, &j.children[i], pos, index, out)?;
                    pos.pop();
                }
            }
            Rule::Function | Rule::Update | Rule::Read => {
                // the arguments were values already: no calls below
                if args.iter().any(|a| a.has_function(sig)) {
                    return Err(bad());
                }
                out.push((occ, j));
            }
            Rule::Constructor => return Err(bad()),
        }
        Ok(())
    }
    go(program, rhs, j, &mut Vec::new(), &index, &mut out)?;
    out.sort_by_key(|(o, _)| *o);
    Ok(out)
}

fn active_state(j: &Judgement) -> Result<State> {
    State::from_call(&j.lhs).ok_or_else(|| Error::Malformed("active judgement on a variable".into()))
}

/// Call tree (forest) of a cbv proof: only active judgements are kept.
pub fn call_tree(program: &Program, proof: &DerivationProof) -> Result<CallStructure> {
    let mut cs = CallStructure::empty(StructureKind::Forest);
    fn node(program: &Program, j: &Judgement, cs: &mut CallStructure) -> Result<usize> {
        let e = j.equation.ok_or_else(|| Error::Malformed("active judgement without equation".into()))?;
        let id = cs.nodes.len();
        cs.nodes.push(Node {
            state: active_state(j)?,
            equation: e,
        });
        let rhs = &program.equations[e].rhs;
        for (occ, cj) in occurrence_judgements(program, rhs, &j.children[0])? {
            if cj.rule != Rule::Function {
                return Err(Error::Malformed("call tree requires a cbv proof".into()));
            }
            let c = node(program, cj, cs)?;
            cs.edges.push(EdgeRef {
                from: id,
                to: c,
                equation: e,
                occurrence: occ,
            });
        }
        Ok(id)
    }
    fn roots(program: &Program, j: &Judgement, cs: &mut CallStructure) -> Result<()> {
        match j.rule {
            Rule::Function => {
                let r = node(program, j, cs)?;
                cs.roots.push(r);
            }
            Rule::Constructor | Rule::Split => {
                for c in &j.children {
                    roots(program, c, cs)?;
                }
            }
            Rule::Read | Rule::Update => return Err(Error::Malformed("call tree requires a cbv proof".into())),
        }
        Ok(())
    }
    roots(program, &proof.root, &mut cs)?;
    Ok(cs)
}

/// Call dag of a memo proof: one node per Update, Read leaves become links.
pub fn call_dag(program: &Program, proof: &DerivationProof) -> Result<CallStructure> {
    struct B<'p> {
        program: &'p Program,
        cs: CallStructure,
        key: HashMap<State, usize>,
        pending: Vec<(usize, State, usize, usize)>,
    }
    impl B<'_> {
        fn node(&mut self, j: &Judgement) -> Result<usize> {
            let e = j.equation.ok_or_else(|| Error::Malformed("Update without equation".into()))?;
            let state = active_state(j)?;
            if self.key.contains_key(&state) {
                return Err(Error::Malformed(format!("state {} updated twice", state.show(self.program))));
            }
            let id = self.cs.nodes.len();
            self.cs.nodes.push(Node { state: state.clone(), equation: e });
            self.key.insert(state, id);
            let rhs = &self.program.equations[e].rhs;
            for (occ, cj) in occurrence_judgements(self.program, rhs, &j.children[0])? {
                match cj.rule {
                    Rule::Update => {
                        let c = self.node(cj)?;
                        self.cs.edges.push(EdgeRef {
                            from: id,
                            to: c,
                            equation: e,
                            occurrence: occ,
                        });
                    }
                    Rule::Read => self.pending.push((id, active_state(cj)?, e, occ)),
                    _ => return Err(Error::Malformed("call dag requires a memo proof".into())),
                }
            }
            Ok(id)
        }

        fn roots(&mut self, j: &Judgement) -> Result<()> {
            match j.rule {
                Rule::Update => {
                    let r = self.node(j)?;
                    self.cs.roots.push(r);
                }
                Rule::Read => {
                    // a Read at top level links nowhere: the root already exists
                }
                Rule::Constructor | Rule::Split => {
                    for c in &j.children {
                        self.roots(c)?;
                    }
                }
                Rule::Function => return Err(Error::Malformed("call dag requires a memo proof".into())),
            }
            Ok(())
        }
    }
    let mut b = B {
        program,
        cs: CallStructure::empty(StructureKind::Dag),
        key: HashMap::new(),
        pending: Vec::new(),
    };
    b.roots(&proof.root)?;
    for (from, state, e, occ) in std::mem::take(&mut b.pending) {
        let to = *b
            .key
            .get(&state)
            .ok_or_else(|| Error::Malformed(format!("Read of {} has no Update", state.show(program))))?;
        b.cs.read_links.push(EdgeRef {
            from,
            to,
            equation: e,
            occurrence: occ,
        });
    }
    Ok(b.cs)
}

/// All transitions from `state`: every matching equation, every
/// function-headed rhs subterm, every derivable argument tuple.
pub fn successors(program: &Program, state: &State, budget: Budget) -> Result<Vec<TransitionEdge>> {
    let sig = &program.signature;
    let mut ex = Explorer::new(program, budget);
    let mut out = BTreeSet::new();
    for (e, sigma) in matching_equations(program, &state.to_term())? {
        for (occ, (_, sub)) in e.rhs.function_subterms(sig).into_iter().enumerate() {
            let Term::App(g, args) = sub else { continue };
            let mut tuples: Vec<Vec<Value>> = vec![Vec::new()];
            for a in args {
                let vals = ex.outcomes(&apply_subst(a, &sigma)?)?;
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        vals.keys().map(move |v| {
                            let mut t2 = t.clone();
                            t2.push(v.clone());
                            t2
                        })
                    })
                    .collect();
            }
            for args in tuples {
                out.insert(TransitionEdge {
                    from: state.clone(),
                    to: State { function: *g, args },
                    equation: e.index,
                    occurrence: occ,
                });
            }
        }
    }
    if ex.truncated {
        return Err(Error::BudgetExceeded("argument evaluation truncated".into()));
    }
    Ok(out.into_iter().collect())
}

/// Checks the three transition conditions for an edge.
pub fn is_transition(program: &Program, edge: &TransitionEdge, budget: Budget) -> Result<bool> {
    let sig = &program.signature;
    let Some(e) = program.equations.get(edge.equation) else { return Ok(false) };
    if e.function != edge.from.function {
        return Ok(false);
    }
    let Some(sigma) = match_patterns(&e.patterns, &edge.from.args) else { return Ok(false) };
    let subs = e.rhs.function_subterms(sig);
    let Some((_, Term::App(g, args))) = subs.get(edge.occurrence) else { return Ok(false) };
    if *g != edge.to.function || args.len() != edge.to.args.len() {
        return Ok(false);
    }
    let mut ex = Explorer::new(program, budget);
    for (a, v) in args.iter().zip(&edge.to.args) {
        if !ex.outcomes(&apply_subst(a, &sigma)?)?.contains_key(v) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The largest number of function-headed subterm occurrences in any rhs;
/// no call tree node has more children.
pub fn arity_bound(program: &Program) -> usize {
    program
        .equations
        .iter()
        .map(|e| e.rhs.function_subterms(&program.signature).len())
        .max()
        .unwrap_or(0)
}

/// Same-class descendants of `n` including `n`: distinct nodes for dags,
/// occurrences for forests.
pub fn same_class_descendants(cs: &CallStructure, adj: &[Vec<EdgeRef>], prec: &Precedence, n: usize) -> usize {
    let class = prec.class_of(cs.nodes[n].state.function);
    let mut seen = BTreeSet::new();
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if !seen.insert(m) {
            continue;
        }
        for e in &adj[m] {
            if prec.class_of(cs.nodes[e.to].state.function) == class {
                stack.push(e.to);
            }
        }
    }
    seen.len()
}

#[derive(Clone, Debug)]
pub struct ClassStats {
    pub members: Vec<String>,
    pub rank: usize,
    pub nodes: usize,
    pub max_descendants: usize,
}

#[derive(Clone, Debug)]
pub struct RankStats {
    pub classes: Vec<ClassStats>,
    /// Same-class descendant count per node, including the node.
    pub per_node: Vec<usize>,
    pub a: usize,
    pub arity_bound: usize,
    pub max_rank: usize,
    /// B_i per rank, highest rank first.
    pub rank_bounds: Vec<(usize, u128)>,
    pub bound: u128,
    pub size: usize,
    pub holds: bool,
    /// Edges whose target's class is not below or equal to the source's.
    pub precedence_violations: Vec<String>,
    /// Nodes with more children than the arity bound.
    pub arity_violations: Vec<usize>,
}

impl RankStats {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "classes": self.classes.iter().map(|c| json!({
                "members": c.members, "rank": c.rank, "nodes": c.nodes, "max_same_class_descendants": c.max_descendants,
            })).collect::<Vec<_>>(),
            "per_node_same_class_descendants": self.per_node,
            "A": self.a,
            "arity_bound": self.arity_bound,
            "max_rank": self.max_rank,
            "rank_bounds": self.rank_bounds.iter().map(|(r, b)| json!({"rank": r, "B": b.to_string()})).collect::<Vec<_>>(),
            "bound": self.bound.to_string(),
            "size": self.size,
            "holds": self.holds,
            "precedence_violations": self.precedence_violations,
            "arity_violations": self.arity_violations,
            "note": "descendants are counted within the precedence class of each node",
        })
    }
}

/// Rank recurrence: B_k = r·A for the r roots, B_i = d·A·Σ_{j>i} B_j.
pub fn rank_bound(a: usize, d: usize, max_rank: usize, roots: usize) -> (Vec<(usize, u128)>, u128) {
    let a = a as u128;
    let d = d as u128;
    let mut bounds = Vec::new();
    let mut above: u128 = 0;
    for rank in (1..=max_rank).rev() {
        let b = if rank == max_rank {
            (roots as u128).saturating_mul(a)
        } else {
            d.saturating_mul(a).saturating_mul(above)
        };
        bounds.push((rank, b));
        above = above.saturating_add(b);
    }
    (bounds, above)
}

pub fn rank_stats(program: &Program, cs: &CallStructure, prec: &Precedence) -> RankStats {
    let sig = &program.signature;
    let adj = cs.adjacency();
    let ranks = prec.ranks(sig);
    let per_node: Vec<usize> = (0..cs.len()).map(|n| same_class_descendants(cs, &adj, prec, n)).collect();
    let mut by_class: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (n, node) in cs.nodes.iter().enumerate() {
        let e = by_class.entry(prec.class_of(node.state.function)).or_default();
        e.0 += 1;
        e.1 = e.1.max(per_node[n]);
    }
    let classes = by_class
        .iter()
        .map(|(&c, &(nodes, max_descendants))| {
            let members = &prec.classes()[c];
            ClassStats {
                members: members.iter().map(|&s| sig.name(s).to_string()).collect(),
                rank: ranks[members[0].0 as usize],
                nodes,
                max_descendants,
            }
        })
        .collect();
    let a = per_node.iter().copied().max().unwrap_or(0);
    let d = arity_bound(program);
    let max_rank = sig.functions().iter().map(|f| ranks[f.0 as usize]).max().unwrap_or(0);
    let (rank_bounds, bound) = rank_bound(a, d, max_rank, cs.roots.len());
    let mut precedence_violations = Vec::new();
    for e in cs.edges.iter().chain(cs.read_links.iter()) {
        let (f, g) = (cs.nodes[e.from].state.function, cs.nodes[e.to].state.function);
        if !prec.le(g, f) {
            precedence_violations.push(format!("{} calls {}", sig.name(f), sig.name(g)));
        }
    }
    let arity_violations = (0..cs.len()).filter(|&n| adj[n].len() > d).collect();
    RankStats {
        classes,
        per_node,
        a,
        arity_bound: d,
        max_rank,
        rank_bounds,
        bound,
        size: cs.len(),
        holds: (cs.len() as u128) <= bound,
        precedence_violations,
        arity_violations,
    }
}

/// A same-class call site: the `occurrence`-th function-headed subterm of
/// equation `equation`, whose head shares the class of the defined symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallSite {
    pub label: usize,
    pub equation: usize,
    pub occurrence: usize,
    pub callee: SymId,
}

/// Global enumeration of same-class call sites, in equation then occurrence order.
pub fn call_site_labels(program: &Program, prec: &Precedence) -> Vec<CallSite> {
    let sig = &program.signature;
    let mut out = Vec::new();
    for e in &program.equations {
        for (occ, (_, sub)) in e.rhs.function_subterms(sig).into_iter().enumerate() {
            let g = sub.head().expect("function-headed");
            if prec.equiv(g, e.function) {
                out.push(CallSite {
                    label: out.len(),
                    equation: e.index,
                    occurrence: occ,
                    callee: g,
                });
            }
        }
    }
    out
}

/// Lookup from (equation, occurrence) to label.
pub fn label_table(sites: &[CallSite]) -> HashMap<(usize, usize), usize> {
    sites.iter().map(|s| ((s.equation, s.occurrence), s.label)).collect()
}
