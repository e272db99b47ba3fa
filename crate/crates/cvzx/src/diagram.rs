//! Open-graph data model for CV-ZX diagrams.
//!
//! A diagram is an open multigraph: labelled nodes with numbered legs, edges
//! between legs (or boundary ports), an ordered boundary, and a global scalar.
//! Z, X and Fock spiders are flexsymmetric (legs unordered); W nodes have a
//! distinguished head at leg 0; multipliers are 2-legged with head at leg 0
//! and tail at leg 1.
//!
//! Every edge endpoint carries a polarity. A `Ket` endpoint means the node leg
//! acts on the output side of its node, `Bra` on the input side. This only
//! affects nodes whose tensor is not symmetric under bending (the X spider);
//! it is preserved by transposition and composition so wire bending is free.

use crate::label::{LabelFun, NatFun, RealFun};
use num_complex::Complex64 as C64;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagramError {
    #[error("composition arity mismatch: {0} outputs vs {1} inputs")]
    CompositionArity(usize, usize),
    #[error("port {0:?} is used {1} times (expected exactly once)")]
    PortUsage(Port, usize),
    #[error("invalid diagram: {0}")]
    Invalid(String),
    #[error("json: {0}")]
    Json(String),
    #[error("label: {0}")]
    Label(#[from] crate::label::LabelError),
}

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    ZSpider,
    XSpider,
    FockSpider,
    WNode,
    Multiplier,
}

/// A single generator occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    /// Spider label; `None` for W nodes and multipliers.
    pub label: Option<LabelFun>,
    /// Multiplier coefficient; `None` for the other kinds.
    pub mult: Option<f64>,
    pub arity: usize,
}

impl Node {
    pub fn z(label: RealFun, arity: usize) -> Self {
        Node {
            kind: NodeKind::ZSpider,
            label: Some(LabelFun::Real(label)),
            mult: None,
            arity,
        }
    }
    pub fn x(label: RealFun, arity: usize) -> Self {
        Node {
            kind: NodeKind::XSpider,
            label: Some(LabelFun::Real(label)),
            mult: None,
            arity,
        }
    }
    pub fn fock(label: NatFun, arity: usize) -> Self {
        Node {
            kind: NodeKind::FockSpider,
            label: Some(LabelFun::Nat(label)),
            mult: None,
            arity,
        }
    }
    pub fn w(arity: usize) -> Self {
        assert!(arity >= 1, "W node needs at least its head leg");
        Node {
            kind: NodeKind::WNode,
            label: None,
            mult: None,
            arity,
        }
    }
    pub fn multiplier(m: f64) -> Self {
        Node {
            kind: NodeKind::Multiplier,
            label: None,
            mult: Some(m),
            arity: 2,
        }
    }
}

/// An attachment point: a node leg or a boundary slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Port {
    In(usize),
    Out(usize),
    Leg(NodeId, usize),
}

/// Polarity of an edge endpoint at a node leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pol {
    Ket,
    Bra,
}

impl Pol {
    pub fn flip(self) -> Pol {
        match self {
            Pol::Ket => Pol::Bra,
            Pol::Bra => Pol::Ket,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct End {
    pub port: Port,
    pub pol: Pol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: End,
    pub b: End,
}

impl Edge {
    pub fn ends(&self) -> [End; 2] {
        [self.a, self.b]
    }
    pub fn other(&self, p: Port) -> End {
        if self.a.port == p {
            self.b
        } else {
            self.a
        }
    }
    pub fn touches(&self, p: Port) -> bool {
        self.a.port == p || self.b.port == p
    }
}

/// Global scalar of a diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarFactor {
    pub value: C64,
    /// When set, the scalar is only known to be nonzero; equality checks
    /// ignore its value ("up to scalar" mode).
    pub nonzero_unknown: bool,
}

impl Default for ScalarFactor {
    fn default() -> Self {
        ScalarFactor {
            value: C64::new(1.0, 0.0),
            nonzero_unknown: false,
        }
    }
}

impl ScalarFactor {
    pub fn one() -> Self {
        Self::default()
    }
    pub fn of(value: C64) -> Self {
        ScalarFactor {
            value,
            nonzero_unknown: false,
        }
    }
    pub fn mul(&self, other: &ScalarFactor) -> ScalarFactor {
        ScalarFactor {
            value: self.value * other.value,
            nonzero_unknown: self.nonzero_unknown || other.nonzero_unknown,
        }
    }
    pub fn compatible(&self, other: &ScalarFactor, ignore: bool) -> bool {
        if ignore || self.nonzero_unknown || other.nonzero_unknown {
            true
        } else {
            (self.value - other.value).norm() <= 1e-9 * (1.0 + self.value.norm())
        }
    }
}

/// An open undirected multigraph diagram.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagram {
    pub nodes: BTreeMap<NodeId, Node>,
    pub edges: Vec<Edge>,
    pub n_in: usize,
    pub n_out: usize,
    pub scalar: ScalarFactor,
    /// Closed loops carrying no nodes; each contributes a factor of the wire
    /// dimension in any backend.
    pub circles: usize,
    next_id: NodeId,
}

impl Diagram {
    pub fn new(n_in: usize, n_out: usize) -> Self {
        Diagram {
            n_in,
            n_out,
            scalar: ScalarFactor::one(),
            ..Default::default()
        }
    }

    /// The empty diagram (tensor unit).
    pub fn empty() -> Self {
        Self::new(0, 0)
    }

    /// A scalar-only diagram.
    pub fn scalar_only(value: C64) -> Self {
        let mut d = Self::new(0, 0);
        d.scalar = ScalarFactor::of(value);
        d
    }

    /// Identity on `n` wires.
    pub fn identity(n: usize) -> Self {
        let mut d = Self::new(n, n);
        for i in 0..n {
            d.edges.push(Edge {
                a: End {
                    port: Port::In(i),
                    pol: Pol::Ket,
                },
                b: End {
                    port: Port::Out(i),
                    pol: Pol::Bra,
                },
            });
        }
        d
    }

    pub fn add_node(&mut self, node: Node) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        self.nodes.insert(id, node);
        id
    }

    pub fn remove_node(&mut self, id: NodeId) -> Option<Node> {
        self.nodes.remove(&id)
    }

    /// Connect two ports with a wire. `ket` is the endpoint acting on the
    /// output side of its node, `bra` on the input side.
    pub fn connect(&mut self, ket: Port, bra: Port) {
        self.edges.push(Edge {
            a: End {
                port: ket,
                pol: Pol::Ket,
            },
            b: End {
                port: bra,
                pol: Pol::Bra,
            },
        });
    }

    /// Connect with explicit polarities (for bent wires).
    pub fn connect_pol(&mut self, a: End, b: End) {
        self.edges.push(Edge { a, b });
    }

    pub fn edge_at(&self, p: Port) -> Option<(usize, End)> {
        for (i, e) in self.edges.iter().enumerate() {
            if e.a.port == p {
                return Some((i, e.a));
            }
            if e.b.port == p {
                return Some((i, e.b));
            }
        }
        None
    }

    /// All edges incident to a node, as (edge index, this end, other end).
    /// Self-loops appear twice, once per endpoint.
    pub fn incident(&self, id: NodeId) -> Vec<(usize, End, End)> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if let Port::Leg(n, _) = e.a.port {
                if n == id {
                    out.push((i, e.a, e.b));
                }
            }
            if let Port::Leg(n, _) = e.b.port {
                if n == id {
                    out.push((i, e.b, e.a));
                }
            }
        }
        out
    }

    pub fn neighbors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        for (_, _, other) in self.incident(id) {
            if let Port::Leg(n, _) = other.port {
                out.push(n);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Verify the port-usage invariant: every node leg and every boundary slot
    /// is an endpoint of exactly one edge.
    pub fn validate(&self) -> Result<(), DiagramError> {
        let mut usage: BTreeMap<Port, usize> = BTreeMap::new();
        for e in &self.edges {
            *usage.entry(e.a.port).or_insert(0) += 1;
            *usage.entry(e.b.port).or_insert(0) += 1;
        }
        for (&id, node) in &self.nodes {
            if node.kind == NodeKind::Multiplier && node.arity != 2 {
                return Err(DiagramError::Invalid(format!(
                    "multiplier {id} must have exactly 2 legs"
                )));
            }
            for leg in 0..node.arity {
                let p = Port::Leg(id, leg);
                match usage.remove(&p) {
                    Some(1) => {}
                    Some(n) => return Err(DiagramError::PortUsage(p, n)),
                    None => return Err(DiagramError::PortUsage(p, 0)),
                }
            }
        }
        for i in 0..self.n_in {
            match usage.remove(&Port::In(i)) {
                Some(1) => {}
                Some(n) => return Err(DiagramError::PortUsage(Port::In(i), n)),
                None => return Err(DiagramError::PortUsage(Port::In(i), 0)),
            }
        }
        for i in 0..self.n_out {
            match usage.remove(&Port::Out(i)) {
                Some(1) => {}
                Some(n) => return Err(DiagramError::PortUsage(Port::Out(i), n)),
                None => return Err(DiagramError::PortUsage(Port::Out(i), 0)),
            }
        }
        if let Some((p, _)) = usage.into_iter().next() {
            return Err(DiagramError::Invalid(format!(
                "edge endpoint {p:?} does not exist"
            )));
        }
        Ok(())
    }

    /// Shift all node ids by `offset`, returning the renamed diagram.
    fn shifted(&self, offset: NodeId) -> Diagram {
        let map_port = |p: Port| match p {
            Port::Leg(id, l) => Port::Leg(id + offset, l),
            other => other,
        };
        Diagram {
            nodes: self
                .nodes
                .iter()
                .map(|(&id, n)| (id + offset, n.clone()))
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    a: End {
                        port: map_port(e.a.port),
                        pol: e.a.pol,
                    },
                    b: End {
                        port: map_port(e.b.port),
                        pol: e.b.pol,
                    },
                })
                .collect(),
            n_in: self.n_in,
            n_out: self.n_out,
            scalar: self.scalar,
            circles: self.circles,
            next_id: self.next_id + offset,
        }
    }

    /// Sequential composition: `self` then `d2`, gluing output i of `self` to
    /// input i of `d2`.
    pub fn compose(&self, d2: &Diagram) -> Result<Diagram, DiagramError> {
        if self.n_out != d2.n_in {
            return Err(DiagramError::CompositionArity(self.n_out, d2.n_in));
        }
        let d2 = d2.shifted(self.next_id);

        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
        enum WPort {
            First(Port),
            Second(Port),
        }
        let mut edges: Vec<(WPort, Pol, WPort, Pol)> = Vec::new();
        for e in &self.edges {
            edges.push((
                WPort::First(e.a.port),
                e.a.pol,
                WPort::First(e.b.port),
                e.b.pol,
            ));
        }
        for e in &d2.edges {
            edges.push((
                WPort::Second(e.a.port),
                e.a.pol,
                WPort::Second(e.b.port),
                e.b.pol,
            ));
        }
        // Weld point i joins First(Out(i)) to Second(In(i)). Chase chains of
        // welds so that stacked bare wires collapse correctly.
        let is_weld = |p: WPort| -> Option<(usize, bool)> {
            match p {
                WPort::First(Port::Out(i)) => Some((i, true)),
                WPort::Second(Port::In(i)) => Some((i, false)),
                _ => None,
            }
        };
        let follow = |p: WPort| -> Option<WPort> {
            is_weld(p).map(|(i, first)| {
                if first {
                    WPort::Second(Port::In(i))
                } else {
                    WPort::First(Port::Out(i))
                }
            })
        };
        let proj = |p: WPort, pol: Pol| -> End {
            let port = match p {
                WPort::First(q) => q,
                WPort::Second(q) => q,
            };
            End { port, pol }
        };
        let mut at: BTreeMap<WPort, Vec<usize>> = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            at.entry(e.0).or_default().push(i);
            at.entry(e.2).or_default().push(i);
        }
        let mut consumed = vec![false; edges.len()];
        let mut out_edges: Vec<Edge> = Vec::new();
        let mut circles = self.circles + d2.circles;

        // First pass: chains starting at a free (non-weld) endpoint.
        for start in 0..edges.len() {
            if consumed[start] {
                continue;
            }
            let (pa, la, pb, lb) = edges[start];
            let (free, far) = if is_weld(pa).is_none() {
                ((pa, la), (pb, lb))
            } else if is_weld(pb).is_none() {
                ((pb, lb), (pa, la))
            } else {
                continue;
            };
            consumed[start] = true;
            let mut far = far;
            loop {
                match follow(far.0) {
                    None => {
                        out_edges.push(Edge {
                            a: proj(free.0, free.1),
                            b: proj(far.0, far.1),
                        });
                        break;
                    }
                    Some(next_port) => {
                        let cands = at.get(&next_port).cloned().unwrap_or_default();
                        let next_edge = cands
                            .into_iter()
                            .find(|&i| !consumed[i])
                            .expect("dangling weld chain");
                        consumed[next_edge] = true;
                        let e = edges[next_edge];
                        far = if e.0 == next_port {
                            (e.2, e.3)
                        } else {
                            (e.0, e.1)
                        };
                    }
                }
            }
        }
        // Second pass: whatever is left is a closed circle of welds.
        for start in 0..edges.len() {
            if consumed[start] {
                continue;
            }
            consumed[start] = true;
            let mut far = (edges[start].2, edges[start].3);
            loop {
                let next_port = follow(far.0).expect("closed chain endpoint");
                let cands = at.get(&next_port).cloned().unwrap_or_default();
                match cands.into_iter().find(|&i| !consumed[i]) {
                    None => break,
                    Some(next_edge) => {
                        consumed[next_edge] = true;
                        let e = edges[next_edge];
                        far = if e.0 == next_port {
                            (e.2, e.3)
                        } else {
                            (e.0, e.1)
                        };
                    }
                }
            }
            circles += 1;
        }

        let mut nodes = self.nodes.clone();
        nodes.extend(d2.nodes.clone());
        let d = Diagram {
            nodes,
            edges: out_edges,
            n_in: self.n_in,
            n_out: d2.n_out,
            scalar: self.scalar.mul(&d2.scalar),
            circles,
            next_id: d2.next_id,
        };
        debug_assert!(d.validate().is_ok(), "compose produced invalid diagram");
        Ok(d)
    }

    /// Parallel composition: boundaries concatenated self-then-other.
    pub fn tensor(&self, other: &Diagram) -> Diagram {
        let d2 = other.shifted(self.next_id);
        let map_port = |p: Port| match p {
            Port::In(i) => Port::In(i + self.n_in),
            Port::Out(i) => Port::Out(i + self.n_out),
            other => other,
        };
        let mut edges = self.edges.clone();
        edges.extend(d2.edges.iter().map(|e| Edge {
            a: End {
                port: map_port(e.a.port),
                pol: e.a.pol,
            },
            b: End {
                port: map_port(e.b.port),
                pol: e.b.pol,
            },
        }));
        let mut nodes = self.nodes.clone();
        nodes.extend(d2.nodes.clone());
        Diagram {
            nodes,
            edges,
            n_in: self.n_in + d2.n_in,
            n_out: self.n_out + d2.n_out,
            scalar: self.scalar.mul(&d2.scalar),
            circles: self.circles + d2.circles,
            next_id: d2.next_id,
        }
    }

    /// Swap inputs and outputs by bending wires. Endpoint polarities are
    /// untouched, so the semantics is the tensor transpose in both backends.
    pub fn transpose(&self) -> Diagram {
        let map_port = |p: Port| match p {
            Port::In(i) => Port::Out(i),
            Port::Out(i) => Port::In(i),
            other => other,
        };
        let mut d = self.clone();
        for e in &mut d.edges {
            e.a.port = map_port(e.a.port);
            e.b.port = map_port(e.b.port);
        }
        std::mem::swap(&mut d.n_in, &mut d.n_out);
        d
    }

    /// Conjugate-transpose: transpose plus conjugation of all labels,
    /// endpoint polarities, and the global scalar.
    pub fn adjoint(&self) -> Diagram {
        let mut d = self.transpose();
        for node in d.nodes.values_mut() {
            if let Some(l) = &node.label {
                node.label = Some(l.conj());
            }
        }
        for e in &mut d.edges {
            e.a.pol = e.a.pol.flip();
            e.b.pol = e.b.pol.flip();
        }
        d.scalar.value = d.scalar.value.conj();
        d
    }

    // -- isomorphism ---------------------------------------------------------

    fn node_color0(&self, id: NodeId) -> u64 {
        let n = &self.nodes[&id];
        let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
        let mut mix = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x1000_0000_01b3);
        };
        mix(match n.kind {
            NodeKind::ZSpider => 1,
            NodeKind::XSpider => 2,
            NodeKind::FockSpider => 3,
            NodeKind::WNode => 4,
            NodeKind::Multiplier => 5,
        });
        mix(n.arity as u64);
        if let Some(l) = &n.label {
            mix(l.fingerprint());
        }
        if let Some(m) = n.mult {
            mix((m * 1e9).round() as i64 as u64);
        }
        h
    }

    /// Role of a leg within its node. Flexsymmetric kinds give all legs role
    /// 0; W distinguishes the head; the multiplier head and tail.
    fn leg_role(&self, id: NodeId, leg: usize) -> u8 {
        match self.nodes[&id].kind {
            NodeKind::WNode => (leg == 0) as u8,
            NodeKind::Multiplier => (leg == 0) as u8 + 1,
            _ => 0,
        }
    }

    fn pol_matters(&self, id: NodeId) -> bool {
        let n = &self.nodes[&id];
        if n.kind != NodeKind::XSpider {
            return false;
        }
        // even labels are insensitive to bending
        if let Some(LabelFun::Real(f)) = &n.label {
            !f.syn_eq(&f.reflect())
        } else {
            true
        }
    }

    fn refined_colors(&self) -> BTreeMap<NodeId, u64> {
        let mut colors: BTreeMap<NodeId, u64> = self
            .nodes
            .keys()
            .map(|&id| (id, self.node_color0(id)))
            .collect();
        for _ in 0..(self.nodes.len() + 2) {
            let mut next = BTreeMap::new();
            for &id in self.nodes.keys() {
                let mut sig: Vec<(u8, u8, u64)> = Vec::new();
                for (_, this_end, other_end) in self.incident(id) {
                    let leg = match this_end.port {
                        Port::Leg(_, l) => l,
                        _ => unreachable!(),
                    };
                    let my_role = self.leg_role(id, leg);
                    let my_pol = if self.pol_matters(id) {
                        this_end.pol as u8 + 1
                    } else {
                        0
                    };
                    let other_sig = match other_end.port {
                        Port::In(i) => 0x1_0000_0000u64 + i as u64,
                        Port::Out(i) => 0x2_0000_0000u64 + i as u64,
                        Port::Leg(nid, l) => {
                            let role = self.leg_role(nid, l) as u64;
                            let pol = if self.pol_matters(nid) {
                                other_end.pol as u64 + 1
                            } else {
                                0
                            };
                            colors[&nid].wrapping_mul(31).wrapping_add(role * 7 + pol)
                        }
                    };
                    sig.push((my_role, my_pol, other_sig));
                }
                sig.sort_unstable();
                let mut h = colors[&id];
                for (r, p, s) in sig {
                    h ^= ((r as u64) << 56) | ((p as u64) << 48);
                    h = h.wrapping_mul(0x100_0000_01b3).wrapping_add(s);
                }
                next.insert(id, h);
            }
            if next == colors {
                break;
            }
            colors = next;
        }
        colors
    }

    /// Canonical multiset of edge descriptors under a node relabelling.
    fn edge_profile(&self, map: &BTreeMap<NodeId, u64>) -> Vec<(u64, u64, u8, u8)> {
        let desc = |end: &End| -> (u64, u8, u8) {
            match end.port {
                Port::In(i) => (0xFFFF_0000_0000_0000u64 + i as u64, 0, 0),
                Port::Out(i) => (0xFFFE_0000_0000_0000u64 + i as u64, 0, 0),
                Port::Leg(id, l) => {
                    let mapped = *map.get(&id).unwrap_or(&(id as u64));
                    let role = self.leg_role(id, l);
                    let pol = if self.pol_matters(id) {
                        end.pol as u8 + 1
                    } else {
                        0
                    };
                    (mapped, role, pol)
                }
            }
        };
        let mut prof: Vec<(u64, u64, u8, u8)> = self
            .edges
            .iter()
            .map(|e| {
                let da = desc(&e.a);
                let db = desc(&e.b);
                let (x, y) = if (da.0, da.1, da.2) <= (db.0, db.1, db.2) {
                    (da, db)
                } else {
                    (db, da)
                };
                (x.0, y.0, x.1 * 4 + x.2, y.1 * 4 + y.2)
            })
            .collect();
        prof.sort_unstable();
        prof
    }

    /// Structural equality up to node renaming, flexsymmetric leg permutation
    /// and label normalization. `ignore_scalar` activates up-to-scalar mode in
    /// addition to any `nonzero_unknown` flags.
    pub fn iso_equal_mode(&self, other: &Diagram, ignore_scalar: bool) -> bool {
        if self.n_in != other.n_in
            || self.n_out != other.n_out
            || self.nodes.len() != other.nodes.len()
            || self.edges.len() != other.edges.len()
            || self.circles != other.circles
        {
            return false;
        }
        if !self.scalar.compatible(&other.scalar, ignore_scalar) {
            return false;
        }
        let ca = self.refined_colors();
        let cb = other.refined_colors();
        let mut by_color: BTreeMap<u64, (Vec<NodeId>, Vec<NodeId>)> = BTreeMap::new();
        for (&id, &c) in &ca {
            by_color.entry(c).or_default().0.push(id);
        }
        for (&id, &c) in &cb {
            by_color.entry(c).or_default().1.push(id);
        }
        for (xs, ys) in by_color.values() {
            if xs.len() != ys.len() {
                return false;
            }
        }
        let classes: Vec<(Vec<NodeId>, Vec<NodeId>)> = by_color.into_values().collect();
        let target_profile = {
            let idmap: BTreeMap<NodeId, u64> =
                other.nodes.keys().map(|&id| (id, id as u64)).collect();
            other.edge_profile(&idmap)
        };
        let mut assignment: BTreeMap<NodeId, u64> = BTreeMap::new();
        self.backtrack(&classes, 0, &mut assignment, other, &target_profile)
    }

    fn nodes_compatible(&self, a: NodeId, other: &Diagram, b: NodeId) -> bool {
        let na = &self.nodes[&a];
        let nb = &other.nodes[&b];
        if na.kind != nb.kind || na.arity != nb.arity {
            return false;
        }
        match (&na.label, &nb.label) {
            (Some(x), Some(y)) if !x.syn_eq(y) => return false,
            (None, Some(_)) | (Some(_), None) => return false,
            _ => {}
        }
        match (na.mult, nb.mult) {
            (Some(x), Some(y)) if (x - y).abs() > 1e-12 * (1.0 + x.abs()) => return false,
            (None, Some(_)) | (Some(_), None) => return false,
            _ => {}
        }
        true
    }

    fn backtrack(
        &self,
        classes: &[(Vec<NodeId>, Vec<NodeId>)],
        ci: usize,
        assignment: &mut BTreeMap<NodeId, u64>,
        other: &Diagram,
        target_profile: &Vec<(u64, u64, u8, u8)>,
    ) -> bool {
        if ci == classes.len() {
            return &self.edge_profile(assignment) == target_profile;
        }
        let (xs, ys) = &classes[ci];
        self.perm_rec(xs, ys, 0, &mut vec![false; ys.len()], classes, ci, assignment, other, target_profile)
    }

    #[allow(clippy::too_many_arguments)]
    fn perm_rec(
        &self,
        xs: &[NodeId],
        ys: &[NodeId],
        k: usize,
        taken: &mut Vec<bool>,
        classes: &[(Vec<NodeId>, Vec<NodeId>)],
        ci: usize,
        assignment: &mut BTreeMap<NodeId, u64>,
        other: &Diagram,
        target_profile: &Vec<(u64, u64, u8, u8)>,
    ) -> bool {
        if k == xs.len() {
            return self.backtrack(classes, ci + 1, assignment, other, target_profile);
        }
        for (j, &y) in ys.iter().enumerate() {
            if taken[j] || !self.nodes_compatible(xs[k], other, y) {
                continue;
            }
            taken[j] = true;
            assignment.insert(xs[k], y as u64);
            if self.perm_rec(
                xs,
                ys,
                k + 1,
                taken,
                classes,
                ci,
                assignment,
                other,
                target_profile,
            ) {
                return true;
            }
            assignment.remove(&xs[k]);
            taken[j] = false;
        }
        false
    }

    pub fn iso_equal(&self, other: &Diagram) -> bool {
        self.iso_equal_mode(other, false)
    }

    /// A hash invariant under node renaming. Collisions only cost time;
    /// equality is always confirmed via [`Self::iso_equal`].
    pub fn canonical_hash(&self) -> u64 {
        let colors = self.refined_colors();
        let mut cs: Vec<u64> = colors.values().copied().collect();
        cs.sort_unstable();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x1000_0000_01b3);
        };
        mix(self.n_in as u64);
        mix(self.n_out as u64);
        mix(self.circles as u64);
        for c in cs {
            mix(c);
        }
        for e in self.edge_profile(&colors) {
            mix(e.0);
            mix(e.1);
            mix(e.2 as u64);
            mix(e.3 as u64);
        }
        h
    }

    // -- serialization -------------------------------------------------------

    pub fn to_json(&self) -> Value {
        let port_json = |p: Port| -> Value {
            match p {
                Port::In(i) => json!(["in", i]),
                Port::Out(i) => json!(["out", i]),
                Port::Leg(id, l) => json!([id, l]),
            }
        };
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .map(|(&id, n)| {
                let kind = match n.kind {
                    NodeKind::ZSpider => "z",
                    NodeKind::XSpider => "x",
                    NodeKind::FockSpider => "fock",
                    NodeKind::WNode => "w",
                    NodeKind::Multiplier => "mult",
                };
                let mut obj = json!({"id": id, "kind": kind, "arity": n.arity});
                if let Some(l) = &n.label {
                    obj["label"] = json!(l.to_string());
                }
                if let Some(m) = n.mult {
                    obj["m"] = json!(m);
                }
                obj
            })
            .collect();
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|e| {
                let (x, y) = match (e.a.pol, e.b.pol) {
                    (Pol::Bra, Pol::Ket) => (e.b, e.a),
                    _ => (e.a, e.b),
                };
                let tag = match (x.pol, y.pol) {
                    (Pol::Ket, Pol::Bra) => None,
                    (Pol::Ket, Pol::Ket) => Some("kk"),
                    (Pol::Bra, Pol::Bra) => Some("bb"),
                    (Pol::Bra, Pol::Ket) => unreachable!(),
                };
                match tag {
                    None => json!([port_json(x.port), port_json(y.port)]),
                    Some(t) => json!([port_json(x.port), port_json(y.port), t]),
                }
            })
            .collect();
        json!({
            "version": 1,
            "nodes": nodes,
            "edges": edges,
            "inputs": (0..self.n_in).map(|i| json!(["in", i])).collect::<Vec<_>>(),
            "outputs": (0..self.n_out).map(|i| json!(["out", i])).collect::<Vec<_>>(),
            "circles": self.circles,
            "scalar": {
                "re": self.scalar.value.re,
                "im": self.scalar.value.im,
                "nonzero_unknown": self.scalar.nonzero_unknown,
            },
        })
    }

    pub fn from_json(v: &Value) -> Result<Diagram, DiagramError> {
        let err = |m: &str| DiagramError::Json(m.to_string());
        let obj = v.as_object().ok_or_else(|| err("expected object"))?;
        let nodes_v = obj
            .get("nodes")
            .and_then(|x| x.as_array())
            .ok_or_else(|| err("missing nodes"))?;
        let mut d = Diagram::new(
            obj.get("inputs")
                .and_then(|x| x.as_array())
                .map(|a| a.len())
                .unwrap_or(0),
            obj.get("outputs")
                .and_then(|x| x.as_array())
                .map(|a| a.len())
                .unwrap_or(0),
        );
        d.circles = obj.get("circles").and_then(|x| x.as_u64()).unwrap_or(0) as usize;
        let mut max_id = 0u32;
        for nv in nodes_v {
            let id = nv
                .get("id")
                .and_then(|x| x.as_u64())
                .ok_or_else(|| err("node id"))? as u32;
            let kind = nv
                .get("kind")
                .and_then(|x| x.as_str())
                .ok_or_else(|| err("node kind"))?;
            let arity = nv
                .get("arity")
                .and_then(|x| x.as_u64())
                .ok_or_else(|| err("node arity"))? as usize;
            let label = match nv.get("label").and_then(|x| x.as_str()) {
                Some(s) => Some(crate::label::parse::parse_label(s)?),
                None => None,
            };
            let node = match kind {
                "z" | "x" => {
                    let l = label.ok_or_else(|| err("z/x spider needs a label"))?;
                    let f = match l {
                        LabelFun::Real(f) => f,
                        LabelFun::Nat(_) => {
                            return Err(err("z/x spider label must be over the reals"))
                        }
                    };
                    if kind == "z" {
                        Node::z(f, arity)
                    } else {
                        Node::x(f, arity)
                    }
                }
                "fock" => {
                    let l = label.ok_or_else(|| err("fock spider needs a label"))?;
                    match l {
                        LabelFun::Nat(g) => Node::fock(g, arity),
                        LabelFun::Real(f) => {
                            // a bare constant parses as a real label; coerce
                            match LabelFun::Real(f).as_constant() {
                                Some(w) => Node::fock(NatFun::constant(w), arity),
                                None => {
                                    return Err(err(
                                        "fock spider label must be over the naturals",
                                    ))
                                }
                            }
                        }
                    }
                }
                "w" => Node::w(arity),
                "mult" => Node::multiplier(
                    nv.get("m")
                        .and_then(|x| x.as_f64())
                        .ok_or_else(|| err("mult needs m"))?,
                ),
                other => return Err(err(&format!("unknown node kind `{other}`"))),
            };
            d.nodes.insert(id, node);
            max_id = max_id.max(id + 1);
        }
        d.next_id = max_id;
        let parse_port = |pv: &Value| -> Result<Port, DiagramError> {
            let arr = pv.as_array().ok_or_else(|| err("port must be an array"))?;
            if arr.len() != 2 {
                return Err(err("port must have 2 entries"));
            }
            match (&arr[0], &arr[1]) {
                (Value::String(s), k) => {
                    let i = k.as_u64().ok_or_else(|| err("boundary index"))? as usize;
                    match s.as_str() {
                        "in" => Ok(Port::In(i)),
                        "out" => Ok(Port::Out(i)),
                        _ => Err(err("boundary side must be `in` or `out`")),
                    }
                }
                (a, b) => {
                    let id = a.as_u64().ok_or_else(|| err("node id in port"))? as u32;
                    let l = b.as_u64().ok_or_else(|| err("leg index"))? as usize;
                    Ok(Port::Leg(id, l))
                }
            }
        };
        let edges_v = obj
            .get("edges")
            .and_then(|x| x.as_array())
            .ok_or_else(|| err("missing edges"))?;
        for ev in edges_v {
            let arr = ev.as_array().ok_or_else(|| err("edge must be an array"))?;
            if arr.len() < 2 || arr.len() > 3 {
                return Err(err("edge must have 2 ports and an optional tag"));
            }
            let pa = parse_port(&arr[0])?;
            let pb = parse_port(&arr[1])?;
            let (la, lb) = match arr.get(2).and_then(|x| x.as_str()) {
                None => (Pol::Ket, Pol::Bra),
                Some("kk") => (Pol::Ket, Pol::Ket),
                Some("bb") => (Pol::Bra, Pol::Bra),
                Some(t) => return Err(err(&format!("unknown edge tag `{t}`"))),
            };
            d.connect_pol(End { port: pa, pol: la }, End { port: pb, pol: lb });
        }
        if let Some(s) = obj.get("scalar") {
            d.scalar = ScalarFactor {
                value: C64::new(
                    s.get("re").and_then(|x| x.as_f64()).unwrap_or(1.0),
                    s.get("im").and_then(|x| x.as_f64()).unwrap_or(0.0),
                ),
                nonzero_unknown: s
                    .get("nonzero_unknown")
                    .and_then(|x| x.as_bool())
                    .unwrap_or(false),
            };
        }
        d.validate()?;
        Ok(d)
    }

    /// GraphViz rendering: Z = green circle, X = red circle, Fock = white
    /// square, W = black triangle, Multiplier = labelled box.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph diagram {\n  rankdir=LR;\n");
        for i in 0..self.n_in {
            s += &format!("  in{i} [shape=plaintext,label=\"in {i}\"];\n");
        }
        for i in 0..self.n_out {
            s += &format!("  out{i} [shape=plaintext,label=\"out {i}\"];\n");
        }
        for (&id, n) in &self.nodes {
            let (shape, fill, lbl) = match n.kind {
                NodeKind::ZSpider => ("circle", "green", label_str(n)),
                NodeKind::XSpider => ("circle", "red", label_str(n)),
                NodeKind::FockSpider => ("square", "white", label_str(n)),
                NodeKind::WNode => ("triangle", "black", String::new()),
                NodeKind::Multiplier => {
                    ("box", "lightgray", format!("{}", n.mult.unwrap_or(0.0)))
                }
            };
            s += &format!(
                "  n{id} [shape={shape},style=filled,fillcolor={fill},label=\"{}\"];\n",
                lbl.replace('"', "'")
            );
        }
        for e in &self.edges {
            let pname = |p: Port| match p {
                Port::In(i) => format!("in{i}"),
                Port::Out(i) => format!("out{i}"),
                Port::Leg(id, _) => format!("n{id}"),
            };
            s += &format!("  {} -- {};\n", pname(e.a.port), pname(e.b.port));
        }
        s += "}\n";
        s
    }
}

fn label_str(n: &Node) -> String {
    match &n.label {
        Some(l) if !l.is_one() => l.to_string(),
        _ => String::new(),
    }
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "diagram({} -> {}, {} nodes, {} edges)",
            self.n_in,
            self.n_out,
            self.nodes.len(),
            self.edges.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::{NatFun, RealFun};

    fn ket_fock(n: u64) -> Diagram {
        let mut d = Diagram::new(0, 1);
        let id = d.add_node(Node::fock(NatFun::kron(n), 1));
        d.connect(Port::Leg(id, 0), Port::Out(0));
        d
    }

    #[test]
    fn identity_compose() {
        let id1 = Diagram::identity(1);
        let c = id1.compose(&id1).unwrap();
        assert!(c.iso_equal(&Diagram::identity(1)));
    }

    #[test]
    fn compose_arity_mismatch() {
        let id1 = Diagram::identity(1);
        let id2 = Diagram::identity(2);
        assert!(matches!(
            id1.compose(&id2),
            Err(DiagramError::CompositionArity(1, 2))
        ));
    }

    #[test]
    fn tensor_unit() {
        let d = ket_fock(0);
        assert!(Diagram::empty().tensor(&d).iso_equal(&d));
        assert!(d.tensor(&Diagram::empty()).iso_equal(&d));
    }

    #[test]
    fn tensor_scalars_multiply() {
        let a = Diagram::scalar_only(C64::new(2.0, 0.0));
        let b = Diagram::scalar_only(C64::new(3.0, 0.0));
        let t = a.tensor(&b);
        assert!((t.scalar.value - C64::new(6.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn transpose_involution() {
        let mut d = Diagram::new(1, 2);
        let z = d.add_node(Node::z(RealFun::chi_bar(0.5), 3));
        d.connect(Port::Leg(z, 1), Port::Out(0));
        d.connect(Port::Leg(z, 2), Port::Out(1));
        d.connect_pol(
            End {
                port: Port::In(0),
                pol: Pol::Ket,
            },
            End {
                port: Port::Leg(z, 0),
                pol: Pol::Bra,
            },
        );
        assert!(d.transpose().transpose().iso_equal(&d));
    }

    #[test]
    fn transpose_ket_to_bra() {
        let k = ket_fock(3);
        let b = k.transpose();
        assert_eq!(b.n_in, 1);
        assert_eq!(b.n_out, 0);
        assert!(b.transpose().iso_equal(&k));
    }

    #[test]
    fn iso_detects_leg_permutation() {
        let mk = |perm: [usize; 3]| {
            let mut d = Diagram::new(0, 3);
            let z = d.add_node(Node::z(RealFun::one(), 3));
            for (i, &p) in perm.iter().enumerate() {
                d.connect(Port::Leg(z, p), Port::Out(i));
            }
            d
        };
        assert!(mk([0, 1, 2]).iso_equal(&mk([2, 0, 1])));
    }

    #[test]
    fn iso_distinguishes_kinds() {
        let mut a = Diagram::new(0, 1);
        let z = a.add_node(Node::z(RealFun::chi_bar(1.0), 1));
        a.connect(Port::Leg(z, 0), Port::Out(0));
        let mut b = Diagram::new(0, 1);
        let x = b.add_node(Node::x(RealFun::chi_bar(1.0), 1));
        b.connect(Port::Leg(x, 0), Port::Out(0));
        assert!(!a.iso_equal(&b));
    }

    #[test]
    fn scalar_modes() {
        let a = Diagram::scalar_only(C64::new(2.0, 0.0));
        let mut b = Diagram::scalar_only(C64::new(3.0, 0.0));
        assert!(!a.iso_equal(&b));
        b.scalar.nonzero_unknown = true;
        assert!(a.iso_equal(&b));
    }

    #[test]
    fn snake_becomes_identity_shape() {
        let mut cup = Diagram::new(0, 2);
        cup.connect_pol(
            End {
                port: Port::Out(0),
                pol: Pol::Ket,
            },
            End {
                port: Port::Out(1),
                pol: Pol::Ket,
            },
        );
        let mut cap = Diagram::new(2, 0);
        cap.connect_pol(
            End {
                port: Port::In(0),
                pol: Pol::Bra,
            },
            End {
                port: Port::In(1),
                pol: Pol::Bra,
            },
        );
        let left = Diagram::identity(1).tensor(&cup); // 1 -> 3
        let right = cap.tensor(&Diagram::identity(1)); // 3 -> 1
        let snake = left.compose(&right).unwrap();
        assert_eq!(snake.n_in, 1);
        assert_eq!(snake.n_out, 1);
        assert_eq!(snake.nodes.len(), 0);
        assert_eq!(snake.circles, 0);
        assert_eq!(snake.edges.len(), 1);
    }

    #[test]
    fn circle_from_cup_cap() {
        let mut cup = Diagram::new(0, 2);
        cup.connect_pol(
            End {
                port: Port::Out(0),
                pol: Pol::Ket,
            },
            End {
                port: Port::Out(1),
                pol: Pol::Ket,
            },
        );
        let mut cap = Diagram::new(2, 0);
        cap.connect_pol(
            End {
                port: Port::In(0),
                pol: Pol::Bra,
            },
            End {
                port: Port::In(1),
                pol: Pol::Bra,
            },
        );
        let circ = cup.compose(&cap).unwrap();
        assert_eq!(circ.circles, 1);
        assert_eq!(circ.edges.len(), 0);
    }

    #[test]
    fn json_roundtrip_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let mut d = Diagram::new(0, 0);
            let n_nodes = rng.gen_range(1..5);
            let mut legs: Vec<Port> = Vec::new();
            for _ in 0..n_nodes {
                let arity = rng.gen_range(1..4);
                let node = match rng.gen_range(0..4) {
                    0 => Node::z(RealFun::chi_bar(rng.gen_range(-1.0..1.0)), arity),
                    1 => Node::x(RealFun::chi(rng.gen_range(-1.0..1.0)), arity),
                    2 => Node::fock(
                        NatFun::geom(C64::new(rng.gen_range(-1.0..1.0), 0.2)),
                        arity,
                    ),
                    _ => Node::w(arity),
                };
                let id = d.add_node(node);
                for l in 0..arity {
                    legs.push(Port::Leg(id, l));
                }
            }
            while legs.len() >= 2 {
                let i = rng.gen_range(0..legs.len());
                let a = legs.swap_remove(i);
                let j = rng.gen_range(0..legs.len());
                let b = legs.swap_remove(j);
                d.connect(a, b);
            }
            if let Some(a) = legs.pop() {
                d.n_out = 1;
                d.connect(a, Port::Out(0));
            }
            d.validate().unwrap();
            let j = d.to_json();
            let d2 = Diagram::from_json(&j).unwrap();
            assert!(d.iso_equal(&d2), "roundtrip failed: {}", j);
        }
    }
}
