use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use super::AutodiffError;

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

const NONE: u32 = u32::MAX;
const ONE: u32 = 0;
const MINUS_ONE: u32 = 1;

/// Primitive recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpKind {
    Leaf,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Tanh,
    Sin,
    Cos,
    Exp,
    Ln,
    Relu,
    /// Heaviside step, the derivative of relu. Its own derivative is zero.
    Step,
    Powi(i32),
    Powf(f64),
    /// Sum of pairwise products `Σ x_k·y_k`.
    Dot,
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::Leaf => "leaf",
            OpKind::Const => "const",
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::Div => "div",
            OpKind::Neg => "neg",
            OpKind::Tanh => "tanh",
            OpKind::Sin => "sin",
            OpKind::Cos => "cos",
            OpKind::Exp => "exp",
            OpKind::Ln => "ln",
            OpKind::Relu => "relu",
            OpKind::Step => "step",
            OpKind::Powi(_) => "powi",
            OpKind::Powf(_) => "powf",
            OpKind::Dot => "dot",
        }
    }

    fn arity(&self) -> Option<usize> {
        match self {
            OpKind::Leaf | OpKind::Const => Some(0),
            OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::Div => Some(2),
            OpKind::Dot => None,
            _ => Some(1),
        }
    }

    fn unary(&self, a: f64) -> f64 {
        match *self {
            OpKind::Neg => -a,
            OpKind::Tanh => a.tanh(),
            OpKind::Sin => a.sin(),
            OpKind::Cos => a.cos(),
            OpKind::Exp => a.exp(),
            OpKind::Ln => a.ln(),
            OpKind::Relu => a.max(0.0),
            OpKind::Step => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            OpKind::Powi(n) => a.powi(n),
            OpKind::Powf(p) => a.powf(p),
            _ => unreachable!("not a unary op"),
        }
    }

    fn binary(&self, a: f64, b: f64) -> f64 {
        match self {
            OpKind::Add => a + b,
            OpKind::Sub => a - b,
            OpKind::Mul => a * b,
            OpKind::Div => a / b,
            _ => unreachable!("not a binary op"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    op: OpKind,
    /// First parent, or start offset into `pairs` for `Dot`.
    a: u32,
    /// Second parent, or pair count for `Dot`.
    b: u32,
    value: f64,
}

#[derive(Default)]
struct Inner {
    nodes: Vec<Node>,
    pairs: Vec<(u32, u32)>,
    leaves: Vec<u32>,
    error: Option<AutodiffError>,
}

/// Append-only record of scalar operations.
///
/// Nodes are stored in creation order, so every parent precedes its
/// children. Reverse sweeps can either produce plain numbers
/// ([`Tape::gradient`]) or be recorded back onto the tape
/// ([`Tape::gradient_graph`]) so that they can be differentiated again.
pub struct Tape {
    id: u64,
    inner: RefCell<Inner>,
}

/// Handle to a value recorded on a tape.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
    value: f64,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var(#{} = {})", self.idx, self.value)
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        let tape = Tape {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            inner: RefCell::new(Inner::default()),
        };
        tape.seed_constants();
        tape
    }

    fn seed_constants(&self) {
        let mut inner = self.inner.borrow_mut();
        for v in [1.0, -1.0] {
            inner.nodes.push(Node { op: OpKind::Const, a: NONE, b: NONE, value: v });
        }
    }

    /// Drops every recorded node but keeps the allocations.
    pub fn clear(&self) {
        {
            let mut inner = self.inner.borrow_mut();
            inner.nodes.clear();
            inner.pairs.clear();
            inner.leaves.clear();
            inner.error = None;
        }
        self.seed_constants();
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First non-finite value recorded on this tape, if any.
    pub fn check(&self) -> Result<(), AutodiffError> {
        match &self.inner.borrow().error {
            Some(e) => Err(e.clone()),
            None => Ok(()),
        }
    }

    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push(OpKind::Leaf, NONE, NONE, value, &[value]);
        self.inner.borrow_mut().leaves.push(idx);
        Var { tape: self, idx, value }
    }

    pub fn vars(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        let idx = self.push(OpKind::Const, NONE, NONE, value, &[value]);
        Var { tape: self, idx, value }
    }

    pub fn one(&self) -> Var<'_> {
        Var { tape: self, idx: ONE, value: 1.0 }
    }

    fn push(&self, op: OpKind, a: u32, b: u32, value: f64, inputs: &[f64]) -> u32 {
        let mut inner = self.inner.borrow_mut();
        if !value.is_finite() && inner.error.is_none() {
            inner.error = Some(AutodiffError::NonFinite {
                op: op.name(),
                inputs: inputs.to_vec(),
                value,
            });
        }
        let idx = inner.nodes.len() as u32;
        inner.nodes.push(Node { op, a, b, value });
        idx
    }

    fn owns(&self, v: &Var<'_>) -> bool {
        std::ptr::eq(self, v.tape)
    }

    fn foreign(&self) {
        let mut inner = self.inner.borrow_mut();
        if inner.error.is_none() {
            inner.error = Some(AutodiffError::ForeignTape);
        }
    }

    fn value_of(&self, idx: u32) -> f64 {
        self.inner.borrow().nodes[idx as usize].value
    }

    fn unary(&self, op: OpKind, a: Var<'_>) -> Var<'_> {
        if !self.owns(&a) {
            self.foreign();
        }
        let value = op.unary(a.value);
        let idx = self.push(op, a.idx, NONE, value, &[a.value]);
        Var { tape: self, idx, value }
    }

    fn binary(&self, op: OpKind, a: Var<'_>, b: Var<'_>) -> Var<'_> {
        if !self.owns(&a) || !self.owns(&b) {
            self.foreign();
        }
        let value = op.binary(a.value, b.value);
        let idx = self.push(op, a.idx, b.idx, value, &[a.value, b.value]);
        Var { tape: self, idx, value }
    }

    fn unary_idx(&self, op: OpKind, a: u32) -> u32 {
        let av = self.value_of(a);
        self.push(op, a, NONE, op.unary(av), &[av])
    }

    fn binary_idx(&self, op: OpKind, a: u32, b: u32) -> u32 {
        let (av, bv) = (self.value_of(a), self.value_of(b));
        self.push(op, a, b, op.binary(av, bv), &[av, bv])
    }

    fn const_idx(&self, value: f64) -> u32 {
        self.push(OpKind::Const, NONE, NONE, value, &[value])
    }

    fn dot_idx(&self, pairs: &[(u32, u32)]) -> u32 {
        let mut inner = self.inner.borrow_mut();
        let mut value = 0.0;
        for &(x, y) in pairs {
            value += inner.nodes[x as usize].value * inner.nodes[y as usize].value;
        }
        let start = inner.pairs.len() as u32;
        inner.pairs.extend_from_slice(pairs);
        drop(inner);
        self.push(OpKind::Dot, start, pairs.len() as u32, value, &[value])
    }

    /// `Σ x_k·y_k` as a single node.
    pub fn dot<'t>(&'t self, pairs: &[(Var<'t>, Var<'t>)]) -> Var<'t> {
        if pairs.iter().any(|(x, y)| !self.owns(x) || !self.owns(y)) {
            self.foreign();
        }
        let raw: Vec<(u32, u32)> = pairs.iter().map(|(x, y)| (x.idx, y.idx)).collect();
        let idx = self.dot_idx(&raw);
        Var { tape: self, idx, value: self.value_of(idx) }
    }

    /// `Σ w_k·x_k + bias` as a single node.
    pub fn affine<'t>(&'t self, weights: &[Var<'t>], inputs: &[Var<'t>], bias: Var<'t>) -> Var<'t> {
        debug_assert_eq!(weights.len(), inputs.len());
        let mut raw = Vec::with_capacity(weights.len() + 1);
        raw.extend(weights.iter().zip(inputs).map(|(w, x)| (w.idx, x.idx)));
        raw.push((bias.idx, ONE));
        let idx = self.dot_idx(&raw);
        Var { tape: self, idx, value: self.value_of(idx) }
    }

    /// Records `op` applied to `parents`, failing immediately when the
    /// result is not finite or a parent lives on another tape.
    pub fn record<'t>(&'t self, op: OpKind, parents: &[Var<'t>]) -> Result<Var<'t>, AutodiffError> {
        if parents.iter().any(|p| !self.owns(p)) {
            return Err(AutodiffError::ForeignTape);
        }
        let inputs: Vec<f64> = parents.iter().map(|p| p.value).collect();
        let arity_ok = match op.arity() {
            Some(n) => n == parents.len(),
            None => parents.len() % 2 == 0,
        };
        if !arity_ok || matches!(op, OpKind::Leaf | OpKind::Const) {
            return Err(AutodiffError::Arity { op: op.name(), got: parents.len() });
        }
        let value = match op {
            OpKind::Dot => parents.chunks(2).map(|c| c[0].value * c[1].value).sum(),
            _ if parents.len() == 1 => op.unary(parents[0].value),
            _ => op.binary(parents[0].value, parents[1].value),
        };
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite { op: op.name(), inputs, value });
        }
        let var = match op {
            OpKind::Dot => {
                let pairs: Vec<(Var<'t>, Var<'t>)> = parents.chunks(2).map(|c| (c[0], c[1])).collect();
                self.dot(&pairs)
            }
            _ if parents.len() == 1 => self.unary(op, parents[0]),
            _ => self.binary(op, parents[0], parents[1]),
        };
        Ok(var)
    }

    /// Local partial derivatives of `v` with respect to each of its parents,
    /// in parent order (pairs flattened as `x_0, y_0, x_1, ...` for `Dot`).
    pub fn partials(&self, v: Var<'_>) -> Vec<f64> {
        let inner = self.inner.borrow();
        let node = inner.nodes[v.idx as usize];
        let val = |i: u32| inner.nodes[i as usize].value;
        match node.op {
            OpKind::Leaf | OpKind::Const => vec![],
            OpKind::Add => vec![1.0, 1.0],
            OpKind::Sub => vec![1.0, -1.0],
            OpKind::Mul => vec![val(node.b), val(node.a)],
            OpKind::Div => vec![1.0 / val(node.b), -node.value / val(node.b)],
            OpKind::Dot => inner.pairs[node.a as usize..(node.a + node.b) as usize]
                .iter()
                .flat_map(|&(x, y)| [val(y), val(x)])
                .collect(),
            op => vec![unary_partial(op, val(node.a), node.value)],
        }
    }

    /// Reverse sweep returning the adjoint of every node up to `output`.
    fn adjoints(&self, output: u32) -> Vec<f64> {
        let inner = self.inner.borrow();
        let n = output as usize + 1;
        let mut adj = vec![0.0; n];
        adj[output as usize] = 1.0;
        for i in (0..n).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            let node = inner.nodes[i];
            match node.op {
                OpKind::Leaf | OpKind::Const | OpKind::Step => {}
                OpKind::Add => {
                    adj[node.a as usize] += g;
                    adj[node.b as usize] += g;
                }
                OpKind::Sub => {
                    adj[node.a as usize] += g;
                    adj[node.b as usize] -= g;
                }
                OpKind::Mul => {
                    let (av, bv) = (inner.nodes[node.a as usize].value, inner.nodes[node.b as usize].value);
                    adj[node.a as usize] += g * bv;
                    adj[node.b as usize] += g * av;
                }
                OpKind::Div => {
                    let bv = inner.nodes[node.b as usize].value;
                    adj[node.a as usize] += g / bv;
                    adj[node.b as usize] -= g * node.value / bv;
                }
                OpKind::Dot => {
                    for &(x, y) in &inner.pairs[node.a as usize..(node.a + node.b) as usize] {
                        let (xv, yv) = (inner.nodes[x as usize].value, inner.nodes[y as usize].value);
                        adj[x as usize] += g * yv;
                        adj[y as usize] += g * xv;
                    }
                }
                op => {
                    let av = inner.nodes[node.a as usize].value;
                    adj[node.a as usize] += g * unary_partial(op, av, node.value);
                }
            }
        }
        adj
    }

    /// `∂output/∂leaf` for every leaf via one reverse sweep. Leaves that the
    /// output does not depend on receive 0.
    pub fn gradient(&self, output: Var<'_>, leaves: &[Var<'_>]) -> Result<Vec<f64>, AutodiffError> {
        if !self.owns(&output) || leaves.iter().any(|l| !self.owns(l)) {
            return Err(AutodiffError::ForeignTape);
        }
        self.check()?;
        let adj = self.adjoints(output.idx);
        let grads: Vec<f64> = leaves
            .iter()
            .map(|l| adj.get(l.idx as usize).copied().unwrap_or(0.0))
            .collect();
        if let Some(bad) = grads.iter().find(|g| !g.is_finite()) {
            return Err(AutodiffError::NonFinite { op: "gradient", inputs: vec![], value: *bad });
        }
        Ok(grads)
    }

    /// Reverse sweep recorded as tape operations: the returned handles are
    /// ordinary nodes and can themselves be differentiated.
    pub fn gradient_graph<'t>(&'t self, output: Var<'t>, wrt: &[Var<'t>]) -> Result<Vec<Var<'t>>, AutodiffError> {
        if !self.owns(&output) || wrt.iter().any(|l| !self.owns(l)) {
            return Err(AutodiffError::ForeignTape);
        }
        self.check()?;
        let n = output.idx as usize + 1;

        // Only nodes that depend on a requested variable need adjoints.
        let mut needs = vec![false; n];
        for w in wrt {
            if (w.idx as usize) < n {
                needs[w.idx as usize] = true;
            }
        }
        {
            let inner = self.inner.borrow();
            for i in 0..n {
                if needs[i] {
                    continue;
                }
                let node = inner.nodes[i];
                needs[i] = match node.op {
                    OpKind::Leaf | OpKind::Const => false,
                    OpKind::Dot => inner.pairs[node.a as usize..(node.a + node.b) as usize]
                        .iter()
                        .any(|&(x, y)| needs[x as usize] || needs[y as usize]),
                    op if op.arity() == Some(2) => needs[node.a as usize] || needs[node.b as usize],
                    _ => needs[node.a as usize],
                };
            }
        }

        // Contributions g·factor to each node's adjoint, as linked lists.
        let mut head = vec![NONE; n];
        let mut entries: Vec<(u32, u32, u32)> = Vec::new();
        let mut adj = vec![NONE; n];
        let mut pairs_buf: Vec<(u32, u32)> = Vec::new();

        if needs[output.idx as usize] {
            adj[output.idx as usize] = ONE;
        }
        for i in (0..n).rev() {
            if !needs[i] {
                continue;
            }
            let g = if i == output.idx as usize {
                ONE
            } else {
                if head[i] == NONE {
                    continue;
                }
                pairs_buf.clear();
                let mut e = head[i];
                while e != NONE {
                    let (gv, factor, next) = entries[e as usize];
                    pairs_buf.push((gv, factor));
                    e = next;
                }
                let g = match pairs_buf.as_slice() {
                    [(gv, NONE)] => *gv,
                    [(gv, f)] => self.binary_idx(OpKind::Mul, *gv, *f),
                    _ => {
                        let raw: Vec<(u32, u32)> =
                            pairs_buf.iter().map(|&(gv, f)| (gv, if f == NONE { ONE } else { f })).collect();
                        self.dot_idx(&raw)
                    }
                };
                adj[i] = g;
                g
            };

            let node = self.inner.borrow().nodes[i];
            let mut contribute = |target: u32, factor: u32, head: &mut Vec<u32>| {
                if needs[target as usize] {
                    entries.push((g, factor, head[target as usize]));
                    head[target as usize] = (entries.len() - 1) as u32;
                }
            };
            match node.op {
                OpKind::Leaf | OpKind::Const | OpKind::Step => {}
                OpKind::Add => {
                    contribute(node.a, NONE, &mut head);
                    contribute(node.b, NONE, &mut head);
                }
                OpKind::Sub => {
                    contribute(node.a, NONE, &mut head);
                    contribute(node.b, MINUS_ONE, &mut head);
                }
                OpKind::Mul => {
                    contribute(node.a, node.b, &mut head);
                    contribute(node.b, node.a, &mut head);
                }
                OpKind::Div => {
                    if needs[node.a as usize] {
                        let recip = self.binary_idx(OpKind::Div, ONE, node.b);
                        contribute(node.a, recip, &mut head);
                    }
                    if needs[node.b as usize] {
                        let q = self.binary_idx(OpKind::Div, i as u32, node.b);
                        let f = self.unary_idx(OpKind::Neg, q);
                        contribute(node.b, f, &mut head);
                    }
                }
                OpKind::Dot => {
                    let span: Vec<(u32, u32)> =
                        self.inner.borrow().pairs[node.a as usize..(node.a + node.b) as usize].to_vec();
                    for (x, y) in span {
                        contribute(x, y, &mut head);
                        contribute(y, x, &mut head);
                    }
                }
                op => {
                    if !needs[node.a as usize] {
                        continue;
                    }
                    let a = node.a;
                    let factor = match op {
                        OpKind::Neg => MINUS_ONE,
                        OpKind::Tanh => {
                            let sq = self.binary_idx(OpKind::Mul, i as u32, i as u32);
                            self.binary_idx(OpKind::Sub, ONE, sq)
                        }
                        OpKind::Sin => self.unary_idx(OpKind::Cos, a),
                        OpKind::Cos => {
                            let s = self.unary_idx(OpKind::Sin, a);
                            self.unary_idx(OpKind::Neg, s)
                        }
                        OpKind::Exp => i as u32,
                        OpKind::Ln => self.binary_idx(OpKind::Div, ONE, a),
                        OpKind::Relu => self.unary_idx(OpKind::Step, a),
                        OpKind::Powi(0) => continue,
                        OpKind::Powi(1) => NONE,
                        OpKind::Powi(k) => {
                            let p = self.unary_idx(OpKind::Powi(k - 1), a);
                            let c = self.const_idx(k as f64);
                            self.binary_idx(OpKind::Mul, p, c)
                        }
                        OpKind::Powf(p) => {
                            let q = self.unary_idx(OpKind::Powf(p - 1.0), a);
                            let c = self.const_idx(p);
                            self.binary_idx(OpKind::Mul, q, c)
                        }
                        _ => unreachable!(),
                    };
                    contribute(a, factor, &mut head);
                }
            }
        }

        let out = wrt
            .iter()
            .map(|w| {
                let i = w.idx as usize;
                if i < n && adj[i] != NONE {
                    let idx = adj[i];
                    Var { tape: self, idx, value: self.value_of(idx) }
                } else {
                    self.constant(0.0)
                }
            })
            .collect();
        self.check()?;
        Ok(out)
    }

    /// Re-evaluates every node from new leaf values (in leaf creation
    /// order). Identical leaf values reproduce identical node values.
    pub fn replay(&self, leaf_values: &[f64]) -> Result<Vec<f64>, AutodiffError> {
        let inner = self.inner.borrow();
        if leaf_values.len() != inner.leaves.len() {
            return Err(AutodiffError::Arity { op: "replay", got: leaf_values.len() });
        }
        let mut values = Vec::with_capacity(inner.nodes.len());
        let mut next_leaf = 0;
        for node in &inner.nodes {
            let v = match node.op {
                OpKind::Leaf => {
                    next_leaf += 1;
                    leaf_values[next_leaf - 1]
                }
                OpKind::Const => node.value,
                OpKind::Dot => {
                    let mut s = 0.0;
                    for &(x, y) in &inner.pairs[node.a as usize..(node.a + node.b) as usize] {
                        s += values[x as usize] * values[y as usize];
                    }
                    s
                }
                op if op.arity() == Some(2) => op.binary(values[node.a as usize], values[node.b as usize]),
                op => op.unary(values[node.a as usize]),
            };
            values.push(v);
        }
        Ok(values)
    }

    /// Recorded node values, in topological order.
    pub fn values(&self) -> Vec<f64> {
        self.inner.borrow().nodes.iter().map(|n| n.value).collect()
    }

    /// Parents of every node, in topological order (pairs flattened).
    pub fn parents(&self) -> Vec<Vec<usize>> {
        let inner = self.inner.borrow();
        inner
            .nodes
            .iter()
            .map(|n| match n.op {
                OpKind::Leaf | OpKind::Const => vec![],
                OpKind::Dot => inner.pairs[n.a as usize..(n.a + n.b) as usize]
                    .iter()
                    .flat_map(|&(x, y)| [x as usize, y as usize])
                    .collect(),
                op if op.arity() == Some(2) => vec![n.a as usize, n.b as usize],
                _ => vec![n.a as usize],
            })
            .collect()
    }
}

fn unary_partial(op: OpKind, a: f64, y: f64) -> f64 {
    match op {
        OpKind::Neg => -1.0,
        OpKind::Tanh => 1.0 - y * y,
        OpKind::Sin => a.cos(),
        OpKind::Cos => -a.sin(),
        OpKind::Exp => y,
        OpKind::Ln => 1.0 / a,
        OpKind::Relu => {
            if a > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        OpKind::Step => 0.0,
        OpKind::Powi(0) => 0.0,
        OpKind::Powi(n) => n as f64 * a.powi(n - 1),
        OpKind::Powf(p) => p * a.powf(p - 1.0),
        _ => unreachable!("not a unary op"),
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    /// Position of the node on its tape.
    pub fn index(&self) -> usize {
        self.idx as usize
    }

    pub fn tanh(self) -> Self {
        self.tape.unary(OpKind::Tanh, self)
    }
    pub fn sin(self) -> Self {
        self.tape.unary(OpKind::Sin, self)
    }
    pub fn cos(self) -> Self {
        self.tape.unary(OpKind::Cos, self)
    }
    pub fn exp(self) -> Self {
        self.tape.unary(OpKind::Exp, self)
    }
    pub fn ln(self) -> Self {
        self.tape.unary(OpKind::Ln, self)
    }
    pub fn relu(self) -> Self {
        self.tape.unary(OpKind::Relu, self)
    }
    pub fn powi(self, n: i32) -> Self {
        self.tape.unary(OpKind::Powi(n), self)
    }
    pub fn powf(self, p: f64) -> Self {
        self.tape.unary(OpKind::Powf(p), self)
    }
}

macro_rules! var_binop {
    ($tr:ident, $method:ident, $op:expr) => {
        impl<'t> $tr for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: Var<'t>) -> Var<'t> {
                self.tape.binary($op, self, rhs)
            }
        }
        impl<'t> $tr<f64> for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: f64) -> Var<'t> {
                let c = self.tape.constant(rhs);
                self.tape.binary($op, self, c)
            }
        }
        impl<'t> $tr<Var<'t>> for f64 {
            type Output = Var<'t>;
            fn $method(self, rhs: Var<'t>) -> Var<'t> {
                let c = rhs.tape.constant(self);
                rhs.tape.binary($op, c, rhs)
            }
        }
    };
}

var_binop!(Add, add, OpKind::Add);
var_binop!(Sub, sub, OpKind::Sub);
var_binop!(Mul, mul, OpKind::Mul);
var_binop!(Div, div, OpKind::Div);

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.tape.unary(OpKind::Neg, self)
    }
}
