//! Segment classes, the marked-tree and elementary-sequence codecs, boundary
//! addresses, relative/induced decompositions, and fiber factorization.
//!
//! Erasable paths are generated from the trivial path by loop insertion; the
//! canonical tree records the genealogy of insertions, and the
//! elementary-sequence map records, per tree address, the ordered types of
//! the blocks attached there.

use crate::error::{Error, Result};
use crate::lattice::{LoopFamily, Path, Point};
use crate::prune::{first_loop_time, prune, prune_once, retained_profile};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

/// A tree address: the root is the empty sequence, children are numbered
/// from 1. The derived ordering is lexicographic with prefixes first, which
/// is exactly the exploration order used throughout.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub Vec<u32>);

impl Address {
    pub fn root() -> Address {
        Address(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn parent(&self) -> Option<Address> {
        if self.0.is_empty() {
            None
        } else {
            Some(Address(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn child(&self, i: u32) -> Address {
        let mut v = self.0.clone();
        v.push(i);
        Address(v)
    }

    pub fn last(&self) -> Option<u32> {
        self.0.last().copied()
    }

    /// Proper-prefix (strict ancestor) test.
    pub fn is_proper_ancestor_of(&self, other: &Address) -> bool {
        self.0.len() < other.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn is_ancestor_of(&self, other: &Address) -> bool {
        self == other || self.is_proper_ancestor_of(other)
    }

    /// Longest common prefix.
    pub fn meet(&self, other: &Address) -> Address {
        let n = self
            .0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count();
        Address(self.0[..n].to_vec())
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a\"{}\"", self)
    }
}

impl std::str::FromStr for Address {
    type Err = Error;

    fn from_str(s: &str) -> Result<Address> {
        if s.is_empty() {
            return Ok(Address::root());
        }
        let parts = s
            .split('.')
            .map(|p| {
                p.parse::<u32>()
                    .map_err(|_| Error::MalformedEs(format!("bad address component {:?}", p)))
            })
            .collect::<Result<Vec<_>>>()?;
        if parts.iter().any(|&x| x == 0) {
            return Err(Error::MalformedEs("address components are 1-based".into()));
        }
        Ok(Address(parts))
    }
}

/// A rooted ordered tree with loop-type labels (1-based family indices) on
/// the non-root vertices. Equality is structural (labels and child order),
/// independent of internal node numbering.
#[derive(Clone, Debug)]
pub struct MarkedTree {
    nodes: Vec<NodeData>,
}

impl PartialEq for MarkedTree {
    fn eq(&self, other: &Self) -> bool {
        fn eq_node(a: &MarkedTree, na: usize, b: &MarkedTree, nb: usize) -> bool {
            a.nodes[na].label == b.nodes[nb].label
                && a.nodes[na].children.len() == b.nodes[nb].children.len()
                && a.nodes[na]
                    .children
                    .iter()
                    .zip(&b.nodes[nb].children)
                    .all(|(&ca, &cb)| eq_node(a, ca, b, cb))
        }
        eq_node(self, MarkedTree::ROOT, other, MarkedTree::ROOT)
    }
}

impl Eq for MarkedTree {}

#[derive(Clone, Debug, PartialEq, Eq)]
struct NodeData {
    parent: Option<usize>,
    children: Vec<usize>,
    /// 1-based loop type; 0 on the root.
    label: u32,
}

impl MarkedTree {
    pub fn single() -> MarkedTree {
        MarkedTree {
            nodes: vec![NodeData {
                parent: None,
                children: Vec::new(),
                label: 0,
            }],
        }
    }

    pub const ROOT: usize = 0;

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn label(&self, node: usize) -> u32 {
        self.nodes[node].label
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.nodes[node].children
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.nodes[node].parent
    }

    /// Insert `count` fresh children labeled `label` under `parent`,
    /// starting at child position `at` (0-based). Returns their ids.
    pub fn insert_children(&mut self, parent: usize, at: usize, count: usize, label: u32) -> Vec<usize> {
        let mut ids = Vec::with_capacity(count);
        for k in 0..count {
            let id = self.nodes.len();
            self.nodes.push(NodeData {
                parent: Some(parent),
                children: Vec::new(),
                label,
            });
            self.nodes[parent].children.insert(at + k, id);
            ids.push(id);
        }
        ids
    }

    pub fn address_of(&self, mut node: usize) -> Address {
        let mut rev = Vec::new();
        while let Some(p) = self.nodes[node].parent {
            let pos = self.nodes[p].children.iter().position(|&c| c == node).unwrap();
            rev.push(pos as u32 + 1);
            node = p;
        }
        rev.reverse();
        Address(rev)
    }

    pub fn node_at(&self, addr: &Address) -> Option<usize> {
        let mut node = Self::ROOT;
        for &i in &addr.0 {
            node = *self.nodes[node].children.get(i as usize - 1)?;
        }
        Some(node)
    }

    fn child_labels(&self, node: usize) -> Vec<u32> {
        self.nodes[node]
            .children
            .iter()
            .map(|&c| self.nodes[c].label)
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut nodes = BTreeMap::new();
        for id in 0..self.nodes.len() {
            let addr = self.address_of(id).to_string();
            nodes.insert(
                addr,
                serde_json::json!({
                    "label": self.nodes[id].label,
                    "children": self.nodes[id].children.len(),
                }),
            );
        }
        serde_json::json!({ "nodes": nodes })
    }
}

/// Parse a child-label sequence into its ordered block types. The parse is
/// greedy left to right and unique, because a block's type determines its
/// length; malformed sequences are rejected, never repaired.
pub fn parse_blocks(labels: &[u32], fam: &LoopFamily) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        let t = labels[i];
        if t == 0 || t as usize > fam.count() {
            return Err(Error::MalformedTree(format!("label {} out of range", t)));
        }
        let lam = fam.lambda(t as usize - 1);
        if lam == 0 {
            return Err(Error::MalformedTree(
                "family has a length-1 loop; tree codecs need strict families".into(),
            ));
        }
        if i + lam > labels.len() || labels[i..i + lam].iter().any(|&x| x != t) {
            return Err(Error::MalformedTree(format!(
                "child labels do not split into elementary blocks at position {}",
                i
            )));
        }
        out.push(t);
        i += lam;
    }
    Ok(out)
}

/// Whether every vertex's child labels decompose into elementary sequences.
pub fn validate_tree(tree: &MarkedTree, fam: &LoopFamily) -> bool {
    (0..tree.node_count()).all(|n| parse_blocks(&tree.child_labels(n), fam).is_ok())
}

/// Per-child block geometry: (block ordinal, position within block, block length).
fn block_positions(labels: &[u32], fam: &LoopFamily) -> Result<Vec<(usize, usize, usize)>> {
    let blocks = parse_blocks(labels, fam)?;
    let mut out = Vec::with_capacity(labels.len());
    let mut i = 0;
    for (b, &t) in blocks.iter().enumerate() {
        let lam = fam.lambda(t as usize - 1);
        for k in 0..lam {
            out.push((b, k, lam));
        }
        i += lam;
    }
    debug_assert_eq!(i, labels.len());
    Ok(out)
}

/// The depth-first traversal adapted to elementary blocks: within a block the
/// walk steps to the next sibling, returning to the parent only after the
/// block's last subtree. The number of traversal steps equals the length of
/// the encoded segment.
pub fn e_dfs(tree: &MarkedTree, fam: &LoopFamily) -> Result<Vec<usize>> {
    let n = tree.node_count();
    let mut pos_meta: Vec<Option<Vec<(usize, usize, usize)>>> = vec![None; n];
    let mut next_child = vec![0usize; n];
    let mut seq = vec![MarkedTree::ROOT];
    let mut current = MarkedTree::ROOT;
    loop {
        if next_child[current] < tree.children(current).len() {
            let child = tree.children(current)[next_child[current]];
            next_child[current] += 1;
            seq.push(child);
            current = child;
            continue;
        }
        if current == MarkedTree::ROOT {
            break;
        }
        let parent = tree.parent(current).unwrap();
        if pos_meta[parent].is_none() {
            pos_meta[parent] = Some(block_positions(&tree.child_labels(parent), fam)?);
        }
        let meta = pos_meta[parent].as_ref().unwrap();
        let my_pos = tree.children(parent).iter().position(|&c| c == current).unwrap();
        let (_, in_block, block_len) = meta[my_pos];
        if in_block + 1 < block_len {
            let sibling = tree.children(parent)[my_pos + 1];
            debug_assert_eq!(next_child[parent], my_pos + 1);
            next_child[parent] += 1;
            seq.push(sibling);
            current = sibling;
        } else {
            seq.push(parent);
            current = parent;
        }
    }
    Ok(seq)
}

/// Canonical tree of an erasable path: peel the first occurring loop and
/// attach its block of children at the traversal position where the loop was
/// inserted.
pub fn tree_of_segment(eta: &Path, fam: &LoopFamily) -> Result<MarkedTree> {
    if !eta.first().is_origin() {
        return Err(Error::NotRootedAtOrigin);
    }
    if eta.len() == 0 {
        return Ok(MarkedTree::single());
    }
    let (tau, j) = first_loop_time(eta, fam).ok_or(Error::NotErasable)?;
    let m = fam.loops()[j].len();
    let inner = prune_once(eta, fam);
    let mut tree = tree_of_segment(&inner, fam)?;
    let f = e_dfs(&tree, fam)?;
    let target = f[tau - m];
    let visited: HashSet<usize> = f[..=tau - m].iter().copied().collect();
    let at = tree
        .children(target)
        .iter()
        .filter(|c| visited.contains(c))
        .count();
    tree.insert_children(target, at, fam.lambda(j), j as u32 + 1);
    Ok(tree)
}

/// Inverse of `tree_of_segment` on its image: positions come from the block
/// geometry, and the path reads the traversal through them.
pub fn segment_of_tree(tree: &MarkedTree, fam: &LoopFamily) -> Result<Path> {
    let d = fam.dim();
    let mut pos = vec![Point::origin(d); tree.node_count()];
    // Vertex positions: a child in a block of type t at in-block position k
    // sits at parent + e_t[k+1].
    let mut stack = vec![MarkedTree::ROOT];
    while let Some(node) = stack.pop() {
        let labels = tree.child_labels(node);
        let meta = block_positions(&labels, fam)?;
        for (i, &c) in tree.children(node).iter().enumerate() {
            let (_, k, _) = meta[i];
            let t = labels[i] as usize - 1;
            pos[c] = pos[node].add(fam.loops()[t].point(k + 1));
            stack.push(c);
        }
    }
    let f = e_dfs(tree, fam)?;
    Path::validate(f.iter().map(|&n| pos[n]).collect(), false)
}

/// Finite-support map from addresses to ordered block-type lists; absorbing
/// zeros are implicit (only the nonzero prefix is stored).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EsRep {
    entries: BTreeMap<Address, Vec<u32>>,
}

impl EsRep {
    pub fn blocks(&self, addr: &Address) -> &[u32] {
        self.entries.get(addr).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn entries(&self) -> &BTreeMap<Address, Vec<u32>> {
        &self.entries
    }

    pub fn insert(&mut self, addr: Address, blocks: Vec<u32>) {
        if !blocks.is_empty() {
            self.entries.insert(addr, blocks);
        }
    }

    /// The induced vertex set V(W): the root plus every child position under
    /// a vertex whose entry demands it.
    pub fn vertex_set(&self, fam: &LoopFamily) -> Result<BTreeSet<Address>> {
        let mut out = BTreeSet::new();
        let mut queue = vec![Address::root()];
        while let Some(u) = queue.pop() {
            let total: usize = self
                .blocks(&u)
                .iter()
                .map(|&t| {
                    if t == 0 || t as usize > fam.count() {
                        0
                    } else {
                        fam.lambda(t as usize - 1)
                    }
                })
                .sum();
            for (i, &t) in self.blocks(&u).iter().enumerate() {
                if t == 0 || t as usize > fam.count() {
                    return Err(Error::MalformedEs(format!(
                        "block type {} out of range at {} (entry {})",
                        t, u, i
                    )));
                }
            }
            for c in 1..=total as u32 {
                queue.push(u.child(c));
            }
            out.insert(u);
        }
        // Support must be prefix-stable under the induced vertex set.
        for addr in self.entries.keys() {
            if !out.contains(addr) {
                return Err(Error::MalformedEs(format!(
                    "entry at {} lies outside the induced vertex set",
                    addr
                )));
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut nodes = BTreeMap::new();
        for (addr, blocks) in &self.entries {
            nodes.insert(addr.to_string(), blocks.clone());
        }
        serde_json::json!({ "blocks": nodes })
    }

    /// Parse a raw address -> sequence map, validating absorbing zeros.
    pub fn from_raw(raw: BTreeMap<String, Vec<u32>>) -> Result<EsRep> {
        let mut entries = BTreeMap::new();
        for (k, seq) in raw {
            let addr: Address = k.parse()?;
            let nz = seq.iter().take_while(|&&x| x != 0).count();
            if seq[nz..].iter().any(|&x| x != 0) {
                return Err(Error::MalformedEs(format!(
                    "sequence at {:?} is not absorbing-zero",
                    k
                )));
            }
            if nz > 0 {
                entries.insert(addr, seq[..nz].to_vec());
            }
        }
        Ok(EsRep { entries })
    }
}

/// Elementary-sequence encoding of a marked tree.
pub fn es_encode(tree: &MarkedTree, fam: &LoopFamily) -> Result<EsRep> {
    let mut rep = EsRep::default();
    for n in 0..tree.node_count() {
        let blocks = parse_blocks(&tree.child_labels(n), fam)?;
        rep.insert(tree.address_of(n), blocks);
    }
    Ok(rep)
}

/// Decode an elementary-sequence map back to its marked tree.
pub fn es_decode(rep: &EsRep, fam: &LoopFamily) -> Result<MarkedTree> {
    rep.vertex_set(fam)?;
    let mut tree = MarkedTree::single();
    let mut queue = vec![(MarkedTree::ROOT, Address::root())];
    while let Some((node, addr)) = queue.pop() {
        let mut at = 0usize;
        for &t in rep.blocks(&addr) {
            let lam = fam.lambda(t as usize - 1);
            let ids = tree.insert_children(node, at, lam, t);
            for (k, id) in ids.into_iter().enumerate() {
                queue.push((id, addr.child((at + k + 1) as u32)));
            }
            at += lam;
        }
    }
    Ok(tree)
}

/// Elementary-sequence representation of an erasable path.
pub fn es_of_segment(eta: &Path, fam: &LoopFamily) -> Result<EsRep> {
    es_encode(&tree_of_segment(eta, fam)?, fam)
}

/// A boundary address: the seam after `pre` completed blocks at its parent;
/// `next` is the type of the following block, 0 when there is none.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct BoundaryAddress {
    #[serde(serialize_with = "crate::segment::serialize_address")]
    pub addr: Address,
    pub pre: usize,
    pub next: u32,
}

pub(crate) fn serialize_address<S: serde::Serializer>(
    a: &Address,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&a.to_string())
}

/// All boundary addresses of an elementary-sequence map, in exploration
/// (lexicographic) order.
pub fn boundary_scan(rep: &EsRep, fam: &LoopFamily) -> Result<Vec<BoundaryAddress>> {
    let vertices = rep.vertex_set(fam)?;
    let mut out = Vec::new();
    for u in &vertices {
        let blocks = rep.blocks(u);
        let mut b = 1u32;
        for k in 0..=blocks.len() {
            if k > 0 {
                b += fam.lambda(blocks[k - 1] as usize - 1) as u32;
            }
            out.push(BoundaryAddress {
                addr: u.child(b),
                pre: k,
                next: if k < blocks.len() { blocks[k] } else { 0 },
            });
        }
    }
    out.sort_by(|a, b| a.addr.cmp(&b.addr));
    Ok(out)
}

/// Find the boundary-address record for `v`, if `v` is one.
pub fn boundary_at(rep: &EsRep, fam: &LoopFamily, v: &Address) -> Result<BoundaryAddress> {
    let parent = v
        .parent()
        .ok_or_else(|| Error::NotBoundaryAddress(v.to_string()))?;
    let vertices = rep.vertex_set(fam)?;
    if !vertices.contains(&parent) {
        return Err(Error::NotBoundaryAddress(v.to_string()));
    }
    let blocks = rep.blocks(&parent);
    let mut b = 1u32;
    for k in 0..=blocks.len() {
        if k > 0 {
            b += fam.lambda(blocks[k - 1] as usize - 1) as u32;
        }
        if v.last() == Some(b) {
            return Ok(BoundaryAddress {
                addr: v.clone(),
                pre: k,
                next: if k < blocks.len() { blocks[k] } else { 0 },
            });
        }
    }
    Err(Error::NotBoundaryAddress(v.to_string()))
}

/// The four-part partition of V(W) relative to a boundary address: the
/// explored set, the parent block (descendants of par(v) from v on), and the
/// younger-sibling descendant blocks keyed by their roots.
#[derive(Clone, Debug)]
pub struct RelativeDecomposition {
    pub v: BoundaryAddress,
    pub v_exp: BTreeSet<Address>,
    pub d_par_hat: BTreeSet<Address>,
    /// Younger-sibling roots (grouped by depth via `Address::depth`) mapped
    /// to their descendant blocks.
    pub d_blocks: BTreeMap<Address, BTreeSet<Address>>,
}

pub fn relative_decomposition(
    rep: &EsRep,
    fam: &LoopFamily,
    v: &Address,
) -> Result<RelativeDecomposition> {
    let boundary = boundary_at(rep, fam, v)?;
    let vertices = rep.vertex_set(fam)?;
    let par = v.parent().unwrap();
    let mut v_exp = BTreeSet::new();
    let mut d_par_hat = BTreeSet::new();
    let mut d_blocks: BTreeMap<Address, BTreeSet<Address>> = BTreeMap::new();
    for u in vertices {
        if u < *v {
            v_exp.insert(u);
        } else if par.is_proper_ancestor_of(&u) {
            d_par_hat.insert(u);
        } else {
            // u branches off the ancestor chain of v at depth |u ^ v| + 1.
            let q = u.meet(v).depth() + 1;
            debug_assert!(q <= v.depth().saturating_sub(1), "unexpected branch depth");
            let root = Address(u.0[..q].to_vec());
            d_blocks.entry(root).or_default().insert(u);
        }
    }
    Ok(RelativeDecomposition {
        v: boundary,
        v_exp,
        d_par_hat,
        d_blocks,
    })
}

/// Truncated exploration data at a boundary address: the explored vertex
/// set, the explored entries away from the parent, and the parent's
/// completed-block prefix. Does not reveal the type of the next block at the
/// parent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiberData {
    pub v: Address,
    pub explored: BTreeSet<Address>,
    pub res_entries: BTreeMap<Address, Vec<u32>>,
    pub parent_prefix: Vec<u32>,
}

impl FiberData {
    pub fn pre(&self) -> usize {
        self.parent_prefix.len()
    }

    /// Canonical single-line form, usable as a conditioning-atom key.
    pub fn canonical_key(&self) -> String {
        let mut s = format!("v={};pre={};res=", self.v, self.parent_prefix.len());
        for (a, b) in &self.res_entries {
            s.push_str(&format!("{}:{:?};", a, b));
        }
        s.push_str(&format!("par={:?}", self.parent_prefix));
        s
    }
}

pub fn truncated_data(rep: &EsRep, fam: &LoopFamily, v: &Address) -> Result<FiberData> {
    let rel = relative_decomposition(rep, fam, v)?;
    let par = v.parent().unwrap();
    let mut res_entries = BTreeMap::new();
    for u in &rel.v_exp {
        if *u != par {
            let blocks = rep.blocks(u);
            if !blocks.is_empty() {
                res_entries.insert(u.clone(), blocks.to_vec());
            }
        }
    }
    let parent_prefix = rep.blocks(&par)[..rel.v.pre].to_vec();
    Ok(FiberData {
        v: v.clone(),
        explored: rel.v_exp,
        res_entries,
        parent_prefix,
    })
}

/// The explored-part map W_exp determined by truncated exploration data:
/// explored vertices keep their entries, the parent keeps only its completed
/// prefix, everything else is zero. Decoding it yields the backbone path.
fn exp_es(h: &FiberData) -> EsRep {
    let mut rep = EsRep::default();
    for (a, b) in &h.res_entries {
        rep.insert(a.clone(), b.clone());
    }
    rep.insert(h.v.parent().unwrap(), h.parent_prefix.clone());
    rep
}

/// Backbone path and insertion time determined by truncated exploration
/// data: the path explored strictly before the boundary, and the time of the
/// (pre+1)-st visit to the boundary's parent along its traversal.
pub fn exp_path(h: &FiberData, fam: &LoopFamily) -> Result<(Path, usize)> {
    let rep = exp_es(h);
    let tree = es_decode(&rep, fam)?;
    let f = e_dfs(&tree, fam)?;
    let par = tree
        .node_at(&h.v.parent().unwrap())
        .ok_or(Error::OutsideFiber)?;
    let mut visits = 0usize;
    let mut tau_exp = None;
    for (t, &n) in f.iter().enumerate() {
        if n == par {
            visits += 1;
            if visits == h.pre() + 1 {
                tau_exp = Some(t);
                break;
            }
        }
    }
    let tau_exp = tau_exp.ok_or(Error::OutsideFiber)?;
    Ok((segment_of_tree(&tree, fam)?, tau_exp))
}

/// The path decomposition induced by a boundary address: the backbone, the
/// parent-level piece, and one piece per younger-sibling root, together with
/// the times that locate them.
#[derive(Clone, Debug)]
pub struct InducedDecomposition {
    pub v: BoundaryAddress,
    pub eta_exp: Path,
    pub eta_par: Path,
    pub eta_sub: BTreeMap<Address, Path>,
    pub tau_exp: usize,
    pub tau_par: usize,
    pub tau_sub: BTreeMap<Address, (usize, usize)>,
}

pub fn induced_decomposition(
    eta: &Path,
    fam: &LoopFamily,
    v: &Address,
) -> Result<InducedDecomposition> {
    let tree = tree_of_segment(eta, fam)?;
    let rep = es_encode(&tree, fam)?;
    let rel = relative_decomposition(&rep, fam, v)?;
    let f = e_dfs(&tree, fam)?;
    debug_assert_eq!(f.len(), eta.len() + 1);
    let par_node = tree.node_at(&v.parent().unwrap()).unwrap();

    let mut visits = 0usize;
    let mut tau_exp = None;
    let mut tau_par = 0usize;
    for (t, &n) in f.iter().enumerate() {
        if n == par_node {
            visits += 1;
            if visits == rel.v.pre + 1 {
                tau_exp.get_or_insert(t);
            }
            tau_par = t;
        }
    }
    let tau_exp = tau_exp.ok_or(Error::OutsideFiber)?;

    let mut tau_sub = BTreeMap::new();
    for u in rel.d_blocks.keys() {
        let node = tree.node_at(u).unwrap();
        let first = f.iter().position(|&n| n == node).unwrap();
        let last = f.iter().rposition(|&n| n == node).unwrap();
        tau_sub.insert(u.clone(), (first, last));
    }

    let mut excluded = vec![false; eta.len() + 1];
    for t in (tau_exp + 1)..=tau_par {
        excluded[t] = true;
    }
    for &(a, b) in tau_sub.values() {
        for t in (a + 1)..=b {
            excluded[t] = true;
        }
    }
    let kept: Vec<Point> = (0..=eta.len())
        .filter(|&t| !excluded[t])
        .map(|t| *eta.point(t))
        .collect();
    let eta_exp = Path::validate(kept, false)?;
    let eta_par = eta.window_rooted(tau_exp, tau_par);
    let eta_sub = tau_sub
        .iter()
        .map(|(u, &(a, b))| (u.clone(), eta.window_rooted(a, b)))
        .collect();
    Ok(InducedDecomposition {
        v: rel.v,
        eta_exp,
        eta_par,
        eta_sub,
        tau_exp,
        tau_par,
        tau_sub,
    })
}

/// Membership in Seg(E), or in Seg(prefix, E) when a pruned prefix is given:
/// the path must erase to the trivial path, and appending it to the prefix
/// must never disturb the prefix's retained steps.
pub fn seg_membership(eta: &Path, fam: &LoopFamily, prefix: Option<&Path>) -> Result<bool> {
    if !eta.first().is_origin() {
        return Err(Error::NotRootedAtOrigin);
    }
    if prune(eta, fam).len() != 0 {
        return Ok(false);
    }
    if let Some(s) = prefix {
        if &prune(s, fam) != s {
            return Err(Error::PrefixNotPruned);
        }
        let joined = s.concat_translated(eta)?;
        let profile = retained_profile(&joined, fam);
        for n in s.len()..=joined.len() {
            if profile.n[n] < s.len() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Exact, duplicate-free enumeration of Seg(E) (or Seg(prefix, E)) up to
/// `max_len`, by breadth-first loop insertion with membership
/// re-verification, in canonical (length, pointwise) order.
pub fn enumerate_segments(
    fam: &LoopFamily,
    max_len: usize,
    prefix: Option<&Path>,
) -> Result<Vec<Path>> {
    const MAX_ENUM_LEN: usize = 24;
    const MAX_COUNT: usize = 4_000_000;
    if max_len > MAX_ENUM_LEN {
        return Err(Error::BudgetExceeded(format!(
            "enumeration capped at length {}",
            MAX_ENUM_LEN
        )));
    }
    let d = fam.dim();
    let mut seen: HashSet<Path> = HashSet::new();
    let trivial = Path::origin(d);
    seen.insert(trivial.clone());
    let mut by_len: Vec<Vec<Path>> = vec![Vec::new(); max_len + 1];
    by_len[0].push(trivial);
    let min_loop = fam.loops().iter().map(|e| e.len()).min().unwrap();
    for len in 0..=max_len.saturating_sub(min_loop) {
        let current = by_len[len].clone();
        for eta in current {
            for e in fam.loops() {
                let new_len = len + e.len();
                if new_len > max_len {
                    continue;
                }
                for j in 0..=len {
                    let grown = eta.insert_loop(j, e)?;
                    if seen.contains(&grown) {
                        continue;
                    }
                    if seen.len() >= MAX_COUNT {
                        return Err(Error::BudgetExceeded(format!(
                            "enumeration exceeded {} members",
                            MAX_COUNT
                        )));
                    }
                    // An insertion can fall out of the erasable class when an
                    // accidental occurrence straddling the seam erases first,
                    // so membership is re-verified, never assumed. Dropping
                    // such candidates keeps the walk complete: every member is
                    // one insertion away from a shorter member.
                    seen.insert(grown.clone());
                    if !seg_membership(&grown, fam, None)? {
                        continue;
                    }
                    by_len[new_len].push(grown);
                }
            }
        }
    }
    let mut out = Vec::new();
    for bucket in by_len {
        let mut bucket: Vec<Path> = match prefix {
            None => bucket,
            Some(s) => bucket
                .into_iter()
                .filter(|eta| seg_membership(eta, fam, Some(s)).unwrap_or(false))
                .collect(),
        };
        bucket.sort_by(|a, b| a.points().cmp(b.points()));
        out.extend(bucket);
    }
    Ok(out)
}

/// Factor a fiber member into its parent-level piece and younger-sibling
/// pieces. Fails if the path's exploration data disagree with `h`.
pub fn fiber_factorize(
    eta: &Path,
    fam: &LoopFamily,
    h: &FiberData,
) -> Result<(Path, BTreeMap<Address, Path>)> {
    let rep = es_of_segment(eta, fam)?;
    let data = truncated_data(&rep, fam, &h.v).map_err(|_| Error::OutsideFiber)?;
    if &data != h {
        return Err(Error::OutsideFiber);
    }
    let dec = induced_decomposition(eta, fam, &h.v)?;
    Ok((dec.eta_par, dec.eta_sub))
}

/// Younger-sibling roots determined by truncated data alone: vertices of the
/// explored tree at depths 1..|v|-1 that branch off v's ancestor chain on the
/// later side. They appear in the decoded explored tree as leaf stubs.
fn younger_sibling_roots(h: &FiberData, fam: &LoopFamily) -> Result<Vec<Address>> {
    let rep = exp_es(h);
    let verts = rep.vertex_set(fam)?;
    let v = &h.v;
    let mut roots = Vec::new();
    for u in verts {
        let q = u.depth();
        if q >= 1 && q + 1 <= v.depth() && u.meet(v).depth() == q - 1 && u > *v {
            roots.push(u);
        }
    }
    Ok(roots)
}

/// Backbone data of a fiber: the explored path, the parent insertion time,
/// the parent's pruned prefix, and per younger-sibling root its first-visit
/// time on the backbone and pruned prefix. All of it depends only on the
/// truncated exploration data.
pub fn fiber_prefixes(
    h: &FiberData,
    fam: &LoopFamily,
) -> Result<(Path, usize, Path, BTreeMap<Address, (usize, Path)>)> {
    let rep = exp_es(h);
    let tree = es_decode(&rep, fam)?;
    let f = e_dfs(&tree, fam)?;
    let eta_exp = segment_of_tree(&tree, fam)?;
    let par_node = tree
        .node_at(&h.v.parent().ok_or(Error::OutsideFiber)?)
        .ok_or(Error::OutsideFiber)?;
    let mut visits = 0usize;
    let mut tau_exp = None;
    for (t, &n) in f.iter().enumerate() {
        if n == par_node {
            visits += 1;
            if visits == h.pre() + 1 {
                tau_exp = Some(t);
                break;
            }
        }
    }
    let tau_exp = tau_exp.ok_or(Error::OutsideFiber)?;
    let tau_par_first = f.iter().position(|&n| n == par_node).unwrap();
    let pi_par = prune(&eta_exp.window(0, tau_par_first), fam);
    let mut subs = BTreeMap::new();
    for u in younger_sibling_roots(h, fam)? {
        let node = tree.node_at(&u).ok_or(Error::OutsideFiber)?;
        let first = f.iter().position(|&n| n == node).unwrap();
        subs.insert(u, (first, prune(&eta_exp.window(0, first), fam)));
    }
    Ok((eta_exp, tau_exp, pi_par, subs))
}

/// Rebuild a fiber member from its pieces: insert the parent piece at the
/// backbone's insertion time and each younger-sibling piece at its root's
/// first-visit time on the backbone. Pieces must lie in their admissible
/// segment classes.
pub fn fiber_reconstruct(
    fam: &LoopFamily,
    prefix: Option<&Path>,
    h: &FiberData,
    eta_par: &Path,
    pieces: &BTreeMap<Address, Path>,
) -> Result<Path> {
    let (eta_exp, tau_exp, pi_par, subs) = fiber_prefixes(h, fam)?;
    if pieces.len() != subs.len() || pieces.keys().any(|k| !subs.contains_key(k)) {
        return Err(Error::OutsideFiber);
    }
    let class_prefix = |pi: &Path| -> Result<Path> {
        match prefix {
            None => Ok(pi.clone()),
            Some(s) => s.concat_translated(pi),
        }
    };
    if !seg_membership(eta_par, fam, Some(&class_prefix(&pi_par)?))? {
        return Err(Error::PieceOutsideClass("par".into()));
    }
    for (u, piece) in pieces {
        let (_, pi_u) = &subs[u];
        if !seg_membership(piece, fam, Some(&class_prefix(pi_u)?))? {
            return Err(Error::PieceOutsideClass(u.to_string()));
        }
    }
    // Insert at descending times so earlier indices stay valid.
    let mut inserts: Vec<(usize, &Path)> = pieces
        .iter()
        .map(|(u, piece)| (subs[u].0, piece))
        .collect();
    inserts.push((tau_exp, eta_par));
    inserts.sort_by(|a, b| b.0.cmp(&a.0));
    let mut out = eta_exp;
    for (t, piece) in inserts {
        out = out.insert_rooted(t, piece)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SimpleLoop;

    fn o() -> Point {
        Point::origin(3)
    }

    fn u(axis: usize) -> Point {
        Point::unit(3, axis, true)
    }

    fn path(pts: Vec<Point>) -> Path {
        Path::validate(pts, false).unwrap()
    }

    fn e1() -> LoopFamily {
        LoopFamily::back_and_forth(3, 0)
    }

    /// Two loops with lambda = (1, 2): a back-and-forth step and a 3-step
    /// loop (combinatorial, not walk-compatible).
    fn fam12() -> LoopFamily {
        let a = SimpleLoop::from_coords(&[[0, 0, 0].as_slice(), &[1, 0, 0], &[0, 0, 0]]).unwrap();
        let b = SimpleLoop::from_coords(&[
            [0, 0, 0].as_slice(),
            &[0, 1, 0],
            &[1, 1, 0],
            &[0, 0, 0],
        ])
        .unwrap();
        LoopFamily::new(vec![a, b], true).unwrap()
    }

    /// The nine-vertices-plus-root marked tree of the paper's first figure:
    /// root children labeled (1,2,2); the label-1 child carries a (2,2)
    /// block; the last root child carries (2,2,1); its first child carries
    /// one (1) block.
    fn figure_tree() -> MarkedTree {
        let mut t = MarkedTree::single();
        let a = t.insert_children(MarkedTree::ROOT, 0, 1, 1)[0];
        let bc = t.insert_children(MarkedTree::ROOT, 1, 2, 2);
        t.insert_children(a, 0, 2, 2);
        let c = t.insert_children(bc[1], 0, 2, 2);
        t.insert_children(bc[1], 2, 1, 1);
        t.insert_children(c[0], 0, 1, 1);
        t
    }

    #[test]
    fn address_orders() {
        let v: Address = "1.3.2".parse().unwrap();
        assert_eq!(v.to_string(), "1.3.2");
        assert!(Address::root() < v);
        let w: Address = "1.3".parse().unwrap();
        assert!(w < v);
        assert!(w.is_proper_ancestor_of(&v));
        assert!(!v.is_proper_ancestor_of(&v));
        let x: Address = "1.4".parse().unwrap();
        assert!(v < x);
        assert_eq!(v.meet(&x).to_string(), "1");
    }

    #[test]
    fn validate_tree_examples() {
        let fam = fam12();
        assert!(validate_tree(&figure_tree(), &fam));
        assert!(validate_tree(&MarkedTree::single(), &fam));
        let mut bad = MarkedTree::single();
        bad.insert_children(MarkedTree::ROOT, 0, 1, 2);
        assert!(!validate_tree(&bad, &fam));
    }

    #[test]
    fn e_dfs_examples() {
        let fam = fam12();
        let single = MarkedTree::single();
        assert_eq!(e_dfs(&single, &fam).unwrap(), vec![MarkedTree::ROOT]);

        let mut t = MarkedTree::single();
        let c = t.insert_children(MarkedTree::ROOT, 0, 1, 1)[0];
        assert_eq!(e_dfs(&t, &fam).unwrap(), vec![MarkedTree::ROOT, c, MarkedTree::ROOT]);

        // The figure tree has 10 vertices and a 15-step contour: the sum of
        // |e_type| over its six blocks.
        let ft = figure_tree();
        assert_eq!(ft.node_count(), 10);
        let f = e_dfs(&ft, &fam).unwrap();
        assert_eq!(f.len(), 16);
        assert_eq!(f[0], MarkedTree::ROOT);
        assert_eq!(*f.last().unwrap(), MarkedTree::ROOT);
        // Within a (2,2) block the walk steps to the sibling, not the parent.
        let addrs: Vec<String> = f.iter().map(|&n| ft.address_of(n).to_string()).collect();
        assert_eq!(
            addrs,
            vec!["", "1", "1.1", "1.2", "1", "", "2", "3", "3.1", "3.1.1", "3.1", "3.2", "3", "3.3", "3", ""]
        );
    }

    #[test]
    fn tree_of_segment_examples() {
        let fam = e1();
        let t = tree_of_segment(&path(vec![o(), u(0), o()]), &fam).unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.children(MarkedTree::ROOT).len(), 1);

        let t = tree_of_segment(&path(vec![o(), u(0), o(), u(0), o()]), &fam).unwrap();
        assert_eq!(t.children(MarkedTree::ROOT).len(), 2);
        assert!(t.children(t.children(MarkedTree::ROOT)[0]).is_empty());

        let two = Point::new(&[2, 0, 0]).unwrap();
        let t = tree_of_segment(&path(vec![o(), u(0), two, u(0), o()]), &fam).unwrap();
        let c = t.children(MarkedTree::ROOT);
        assert_eq!(c.len(), 1);
        let g = t.children(c[0]);
        assert_eq!(g.len(), 1);
        assert!(t.children(g[0]).is_empty());

        assert!(matches!(
            tree_of_segment(&path(vec![o(), u(1), o()]), &fam),
            Err(Error::NotErasable)
        ));
    }

    #[test]
    fn segment_of_tree_examples() {
        let fam = e1();
        assert_eq!(
            segment_of_tree(&MarkedTree::single(), &fam).unwrap(),
            Path::origin(3)
        );
        let mut t = MarkedTree::single();
        t.insert_children(MarkedTree::ROOT, 0, 1, 1);
        t.insert_children(MarkedTree::ROOT, 1, 1, 1);
        assert_eq!(
            segment_of_tree(&t, &fam).unwrap().points(),
            &[o(), u(0), o(), u(0), o()]
        );
    }

    #[test]
    fn figure_tree_es_and_round_trip() {
        let fam = fam12();
        let ft = figure_tree();
        let rep = es_encode(&ft, &fam).unwrap();
        assert_eq!(rep.blocks(&Address::root()), &[1, 2]);
        assert_eq!(rep.blocks(&"1".parse().unwrap()), &[2]);
        assert_eq!(rep.blocks(&"3".parse().unwrap()), &[2, 1]);
        assert_eq!(rep.blocks(&"3.1".parse().unwrap()), &[1]);
        assert_eq!(es_decode(&rep, &fam).unwrap(), ft);

        // The encoded path reproduces the tree through the other codec.
        let eta = segment_of_tree(&ft, &fam).unwrap();
        assert_eq!(eta.len(), 15);
        assert_eq!(tree_of_segment(&eta, &fam).unwrap(), ft);
    }

    #[test]
    fn es_rejects_malformed() {
        let mut raw = BTreeMap::new();
        raw.insert("".to_string(), vec![1, 0, 1]);
        assert!(matches!(
            EsRep::from_raw(raw),
            Err(Error::MalformedEs(_))
        ));
        let mut raw = BTreeMap::new();
        raw.insert("5".to_string(), vec![1]);
        let rep = EsRep::from_raw(raw).unwrap();
        assert!(rep.vertex_set(&e1()).is_err());
    }

    #[test]
    fn boundary_scan_examples() {
        let fam = e1();
        // W(root) = (1,1): boundaries (1),(2),(3) with (pre,next).
        let eta = path(vec![o(), u(0), o(), u(0), o()]);
        let rep = es_of_segment(&eta, &fam).unwrap();
        let bs = boundary_scan(&rep, &fam).unwrap();
        let at_root: Vec<&BoundaryAddress> =
            bs.iter().filter(|b| b.addr.depth() == 1).collect();
        assert_eq!(at_root.len(), 3);
        assert_eq!(
            (at_root[0].addr.to_string().as_str(), at_root[0].pre, at_root[0].next),
            ("1", 0, 1)
        );
        assert_eq!(
            (at_root[1].addr.to_string().as_str(), at_root[1].pre, at_root[1].next),
            ("2", 1, 1)
        );
        assert_eq!(
            (at_root[2].addr.to_string().as_str(), at_root[2].pre, at_root[2].next),
            ("3", 2, 0)
        );

        // All-zero map: single boundary (1) with pre = 0, next = 0.
        let rep = EsRep::default();
        let bs = boundary_scan(&rep, &fam).unwrap();
        assert_eq!(bs.len(), 1);
        assert_eq!((bs[0].addr.to_string().as_str(), bs[0].pre, bs[0].next), ("1", 0, 0));

        // Figure tree root blocks (1,2) with lambda (1,2): seams at 1, 2, 4.
        let fam = fam12();
        let rep = es_encode(&figure_tree(), &fam).unwrap();
        let bs = boundary_scan(&rep, &fam).unwrap();
        let at_root: Vec<u32> = bs
            .iter()
            .filter(|b| b.addr.depth() == 1)
            .map(|b| b.addr.last().unwrap())
            .collect();
        assert_eq!(at_root, vec![1, 2, 4]);
    }

    #[test]
    fn relative_decomposition_example() {
        let fam = e1();
        let eta = path(vec![o(), u(0), o(), u(0), o()]);
        let rep = es_of_segment(&eta, &fam).unwrap();
        let v: Address = "2".parse().unwrap();
        let rel = relative_decomposition(&rep, &fam, &v).unwrap();
        let names = |s: &BTreeSet<Address>| -> Vec<String> {
            s.iter().map(|a| a.to_string()).collect()
        };
        assert_eq!(names(&rel.v_exp), vec!["", "1"]);
        assert_eq!(names(&rel.d_par_hat), vec!["2"]);
        assert!(rel.d_blocks.is_empty());
        assert!(relative_decomposition(&rep, &fam, &"5".parse().unwrap()).is_err());
    }

    #[test]
    fn relative_decomposition_partitions() {
        let fam = e1();
        for eta in enumerate_segments(&fam, 8, None).unwrap() {
            let rep = es_of_segment(&eta, &fam).unwrap();
            let vertices = rep.vertex_set(&fam).unwrap();
            for b in boundary_scan(&rep, &fam).unwrap() {
                let rel = relative_decomposition(&rep, &fam, &b.addr).unwrap();
                let mut union: Vec<Address> = Vec::new();
                union.extend(rel.v_exp.iter().cloned());
                union.extend(rel.d_par_hat.iter().cloned());
                for block in rel.d_blocks.values() {
                    union.extend(block.iter().cloned());
                }
                let as_set: BTreeSet<Address> = union.iter().cloned().collect();
                assert_eq!(union.len(), as_set.len(), "parts overlap at {:?}", b.addr);
                assert_eq!(as_set, vertices, "parts miss vertices at {:?}", b.addr);
            }
        }
    }

    #[test]
    fn seg_membership_examples() {
        let fam = e1();
        assert!(seg_membership(&path(vec![o(), u(0), o()]), &fam, None).unwrap());
        let minus = Point::new(&[-1, 0, 0]).unwrap();
        assert!(!seg_membership(&path(vec![o(), u(0), o(), minus, o()]), &fam, None).unwrap());
        let prefix = path(vec![o(), u(1)]);
        assert!(seg_membership(&path(vec![o(), u(0), o()]), &fam, Some(&prefix)).unwrap());
        let unpruned = path(vec![o(), u(0), o(), u(1)]);
        assert!(matches!(
            seg_membership(&Path::origin(3), &fam, Some(&unpruned)),
            Err(Error::PrefixNotPruned)
        ));
    }

    #[test]
    fn enumerate_catalan_counts() {
        let fam = e1();
        let segs = enumerate_segments(&fam, 10, None).unwrap();
        let mut counts = vec![0usize; 11];
        for s in &segs {
            counts[s.len()] += 1;
        }
        assert_eq!(counts[0], 1);
        assert_eq!(counts[2], 1);
        assert_eq!(counts[4], 2);
        assert_eq!(counts[6], 5);
        assert_eq!(counts[8], 14);
        assert_eq!(counts[10], 42);
        assert!(counts[1] == 0 && counts[3] == 0);
        assert!(enumerate_segments(&fam, 25, None).is_err());
        assert_eq!(enumerate_segments(&fam, 0, None).unwrap().len(), 1);
    }

    #[test]
    fn codec_round_trips_on_enumeration() {
        for fam in [e1(), LoopFamily::all_back_and_forth(3)] {
            let segs = enumerate_segments(&fam, 6, None).unwrap();
            let mut seen_trees = HashSet::new();
            for eta in &segs {
                let tree = tree_of_segment(eta, &fam).unwrap();
                assert_eq!(&segment_of_tree(&tree, &fam).unwrap(), eta);
                let rep = es_encode(&tree, &fam).unwrap();
                assert_eq!(es_decode(&rep, &fam).unwrap(), tree);
                // Injectivity: distinct paths never share a tree.
                assert!(seen_trees.insert(serde_json::to_string(&tree.to_json()).unwrap()));
                // Contour length accounting.
                assert_eq!(e_dfs(&tree, &fam).unwrap().len(), eta.len() + 1);
            }
        }
    }

    #[test]
    fn induced_decomposition_examples() {
        let fam = e1();
        let eta = path(vec![o(), u(0), o(), u(0), o()]);
        // Last root boundary (pre = 2): everything explored.
        let dec = induced_decomposition(&eta, &fam, &"3".parse().unwrap()).unwrap();
        assert_eq!(dec.eta_exp, eta);
        assert_eq!(dec.eta_par, Path::origin(3));
        assert!(dec.eta_sub.is_empty());

        // Middle root boundary (pre = 1): one block explored, one hidden.
        let dec = induced_decomposition(&eta, &fam, &"2".parse().unwrap()).unwrap();
        assert_eq!(dec.eta_exp.points(), &[o(), u(0), o()]);
        assert_eq!(dec.eta_par.points(), &[o(), u(0), o()]);
        assert!(dec.eta_sub.is_empty());

        // Boundary inside the child of a nested segment: the backbone is the
        // outer loop, the parent piece the inner cluster.
        let two = Point::new(&[2, 0, 0]).unwrap();
        let eta = path(vec![o(), u(0), two, u(0), o()]);
        let dec = induced_decomposition(&eta, &fam, &"1.1".parse().unwrap()).unwrap();
        assert_eq!(dec.eta_exp.points(), &[o(), u(0), o()]);
        assert_eq!(dec.eta_par.points(), &[o(), u(0), o()]);
        // The later seam at the same parent hides nothing: everything explored.
        let dec = induced_decomposition(&eta, &fam, &"1.2".parse().unwrap()).unwrap();
        assert_eq!(dec.eta_exp, eta);
        assert_eq!(dec.eta_par, Path::origin(3));
    }

    #[test]
    fn fiber_factorize_and_reconstruct_round_trip() {
        let fam = e1();
        for eta in enumerate_segments(&fam, 6, None).unwrap() {
            let rep = es_of_segment(&eta, &fam).unwrap();
            for b in boundary_scan(&rep, &fam).unwrap() {
                let h = truncated_data(&rep, &fam, &b.addr).unwrap();
                let (eta_par, pieces) = fiber_factorize(&eta, &fam, &h).unwrap();
                let back = fiber_reconstruct(&fam, None, &h, &eta_par, &pieces).unwrap();
                assert_eq!(back, eta, "fiber round trip at v = {}", b.addr);
            }
        }
    }

    #[test]
    fn fiber_trivial_cases() {
        let fam = e1();
        // First boundary with empty history: factorization is the identity.
        let eta = path(vec![o(), u(0), o()]);
        let rep = es_of_segment(&eta, &fam).unwrap();
        let h = truncated_data(&rep, &fam, &"1".parse().unwrap()).unwrap();
        let (eta_par, pieces) = fiber_factorize(&eta, &fam, &h).unwrap();
        assert_eq!(eta_par, eta);
        assert!(pieces.is_empty());
        // Reconstructing with the trivial piece returns the backbone.
        let back = fiber_reconstruct(&fam, None, &h, &Path::origin(3), &BTreeMap::new()).unwrap();
        assert_eq!(back, Path::origin(3));
        // Both one- and two-block paths share the fiber whose data stop at
        // the seam after one completed root block: the data hide Next.
        let other = path(vec![o(), u(0), o(), u(0), o()]);
        let rep2 = es_of_segment(&other, &fam).unwrap();
        let h2 = truncated_data(&rep2, &fam, &"2".parse().unwrap()).unwrap();
        assert!(fiber_factorize(&eta, &fam, &h2).is_ok());
        // A nested history is a different fiber: rejected.
        let nested = path(vec![o(), u(0), Point::new(&[2, 0, 0]).unwrap(), u(0), o()]);
        let rep3 = es_of_segment(&nested, &fam).unwrap();
        let h3 = truncated_data(&rep3, &fam, &"2".parse().unwrap()).unwrap();
        assert!(matches!(
            fiber_factorize(&eta, &fam, &h3),
            Err(Error::OutsideFiber)
        ));
    }
}
