//! Rooted phylogenetic trees with per-arc branch lengths.
//!
//! Nodes live in a flat arena addressed by [`NodeId`]. Every node except the
//! root has exactly one incoming arc, so an arc is identified by its terminal
//! node ([`ArcId`]). Leaves are the species; species are numbered `0..n` in
//! increasing node-id order, independently of their display labels.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Index into the node arena.
pub type NodeId = usize;

/// The arc entering a non-root node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArcId(pub NodeId);

impl ArcId {
    /// Terminal (child-side) node of the arc.
    pub fn head(self) -> NodeId {
        self.0
    }
}

/// Raw description of a tree, as produced by parsers and generators.
///
/// `parents[v]` is `None` exactly for the root, `lengths[v]` is the length of
/// the arc entering `v` (ignored for the root) and `labels[v]` an optional
/// display name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TreeSpec {
    pub parents: Vec<Option<NodeId>>,
    pub lengths: Vec<f64>,
    pub labels: Vec<Option<String>>,
}

/// A validated rooted tree together with its clade index.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Phylogeny {
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    length: Vec<f64>,
    labels: Vec<Option<String>>,
    root: NodeId,
    preorder: Vec<NodeId>,
    species_node: Vec<NodeId>,
    node_species: Vec<Option<usize>>,
    // Species in depth-first order; every clade is a contiguous window.
    leaf_order: Vec<usize>,
    clade_span: Vec<(usize, usize)>,
}

impl Phylogeny {
    /// Validates `spec` and builds the tree.
    pub fn build(spec: TreeSpec) -> Result<Self> {
        let TreeSpec {
            parents,
            mut lengths,
            labels,
        } = spec;
        let n = parents.len();
        if lengths.len() != n {
            return Err(Error::ShapeMismatch("lengths vs parents"));
        }
        if labels.len() != n {
            return Err(Error::ShapeMismatch("labels vs parents"));
        }

        let mut root = None;
        let mut children = vec![Vec::new(); n];
        for (v, p) in parents.iter().enumerate() {
            match *p {
                None => match root {
                    None => root = Some(v),
                    Some(r) => return Err(Error::MultipleRoots(r, v)),
                },
                Some(p) if p >= n => return Err(Error::UnknownParent { node: v, parent: p }),
                Some(p) if p == v => return Err(Error::Cycle(v)),
                Some(p) => children[p].push(v),
            }
        }
        let root = root.ok_or(Error::NoRoot)?;

        let mut preorder = Vec::with_capacity(n);
        let mut stack = vec![root];
        let mut seen = vec![false; n];
        while let Some(v) = stack.pop() {
            if seen[v] {
                return Err(Error::Cycle(v));
            }
            seen[v] = true;
            preorder.push(v);
            stack.extend(children[v].iter().rev());
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            // Every node has a parent but is unreachable from the root.
            return Err(Error::Cycle(v));
        }

        for (v, kids) in children.iter().enumerate() {
            let is_leaf = kids.is_empty() && v != root;
            if !is_leaf && kids.len() < 2 {
                return Err(Error::TooFewChildren {
                    node: v,
                    children: kids.len(),
                });
            }
        }

        for (v, len) in lengths.iter_mut().enumerate() {
            if v == root {
                *len = 0.0;
            } else if !len.is_finite() || *len < 0.0 {
                return Err(Error::InvalidLength {
                    node: v,
                    length: *len,
                });
            }
        }

        let mut node_species = vec![None; n];
        let mut species_node = Vec::new();
        let mut seen_labels = BTreeSet::new();
        for v in 0..n {
            if v != root && children[v].is_empty() {
                if let Some(label) = &labels[v] {
                    if !seen_labels.insert(label.as_str()) {
                        return Err(Error::DuplicateLabel(label.clone()));
                    }
                }
                node_species[v] = Some(species_node.len());
                species_node.push(v);
            }
        }

        let leaf_order: Vec<usize> = preorder.iter().filter_map(|&v| node_species[v]).collect();
        let mut position = vec![0; species_node.len()];
        for (pos, &s) in leaf_order.iter().enumerate() {
            position[s] = pos;
        }
        let mut clade_span = vec![(0, 0); n];
        for &v in preorder.iter().rev() {
            clade_span[v] = match node_species[v] {
                Some(s) => (position[s], position[s] + 1),
                None => {
                    let first = children[v][0];
                    let last = children[v][children[v].len() - 1];
                    (clade_span[first].0, clade_span[last].1)
                }
            };
        }

        Ok(Self {
            parent: parents,
            children,
            length: lengths,
            labels,
            root,
            preorder,
            species_node,
            node_species,
            leaf_order,
            clade_span,
        })
    }

    /// Convenience constructor from a parent list, per-node arc lengths and
    /// per-node labels.
    pub fn from_parents(
        parents: Vec<Option<NodeId>>,
        lengths: Vec<f64>,
        labels: Vec<Option<String>>,
    ) -> Result<Self> {
        Self::build(TreeSpec {
            parents,
            lengths,
            labels,
        })
    }

    pub fn to_spec(&self) -> TreeSpec {
        TreeSpec {
            parents: self.parent.clone(),
            lengths: self.length.clone(),
            labels: self.labels.clone(),
        }
    }

    /// Same topology and labels, new arc lengths (indexed by node, root entry ignored).
    pub fn with_lengths(&self, lengths: Vec<f64>) -> Result<Self> {
        if lengths.len() != self.node_count() {
            return Err(Error::ShapeMismatch("lengths vs nodes"));
        }
        let mut out = self.clone();
        for (v, len) in lengths.into_iter().enumerate() {
            if v == self.root {
                continue;
            }
            if !len.is_finite() || len < 0.0 {
                return Err(Error::InvalidLength { node: v, length: len });
            }
            out.length[v] = len;
        }
        Ok(out)
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn arc_count(&self) -> usize {
        self.node_count() - 1
    }

    pub fn species_count(&self) -> usize {
        self.species_node.len()
    }

    /// Number of non-leaf nodes, root included.
    pub fn internal_count(&self) -> usize {
        self.node_count() - self.species_count()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.parent[node]
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.children[node]
    }

    /// Nodes in depth-first preorder, root first.
    pub fn preorder(&self) -> &[NodeId] {
        &self.preorder
    }

    /// All arcs, ordered by terminal node id.
    pub fn arcs(&self) -> impl Iterator<Item = ArcId> + '_ {
        (0..self.node_count())
            .filter(move |&v| v != self.root)
            .map(ArcId)
    }

    pub fn arc_into(&self, node: NodeId) -> Option<ArcId> {
        (node < self.node_count() && node != self.root).then_some(ArcId(node))
    }

    pub fn branch_length(&self, arc: ArcId) -> Result<f64> {
        self.check_arc(arc)?;
        Ok(self.length[arc.0])
    }

    /// Arc lengths indexed by node id (root entry is 0).
    pub fn lengths(&self) -> &[f64] {
        &self.length
    }

    pub fn species_node(&self, species: usize) -> Result<NodeId> {
        self.species_node
            .get(species)
            .copied()
            .ok_or(Error::UnknownSpecies(species))
    }

    pub fn node_species(&self, node: NodeId) -> Option<usize> {
        self.node_species.get(node).copied().flatten()
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        self.node_species(node).is_some()
    }

    /// Display label of a species, if one was given.
    pub fn species_label(&self, species: usize) -> Option<&str> {
        let node = *self.species_node.get(species)?;
        self.labels[node].as_deref()
    }

    pub fn node_label(&self, node: NodeId) -> Option<&str> {
        self.labels.get(node)?.as_deref()
    }

    /// Species reachable from the terminal node of `arc`, in depth-first order.
    pub fn clade(&self, arc: ArcId) -> Result<&[usize]> {
        self.check_arc(arc)?;
        Ok(self.node_clade(arc.0))
    }

    /// Species below `node` (all species for the root).
    pub fn node_clade(&self, node: NodeId) -> &[usize] {
        let (start, end) = self.clade_span[node];
        &self.leaf_order[start..end]
    }

    /// Arcs from the root down to `species`.
    pub fn root_path_arcs(&self, species: usize) -> Result<Vec<ArcId>> {
        let mut v = self.species_node(species)?;
        let mut path = Vec::new();
        while let Some(p) = self.parent[v] {
            path.push(ArcId(v));
            v = p;
        }
        path.reverse();
        Ok(path)
    }

    /// Faith PD of the whole species set: the sum of all arc lengths.
    pub fn total_pd(&self) -> f64 {
        self.arcs().map(|a| self.length[a.0]).sum()
    }

    /// Rooted Faith PD of `survivors`: total length of arcs whose clade
    /// contains at least one survivor.
    pub fn pd_of_subset(&self, survivors: &[usize]) -> Result<f64> {
        let mut alive = vec![false; self.node_count()];
        for &s in survivors {
            alive[self.species_node(s)?] = true;
        }
        for &v in self.preorder.iter().rev() {
            if alive[v] {
                if let Some(p) = self.parent[v] {
                    alive[p] = true;
                }
            }
        }
        Ok(self
            .arcs()
            .filter(|a| alive[a.0])
            .map(|a| self.length[a.0])
            .sum())
    }

    /// Distance from the root to every node, indexed by node id.
    pub fn node_depths(&self) -> Vec<f64> {
        let mut depth = vec![0.0; self.node_count()];
        for &v in &self.preorder {
            if let Some(p) = self.parent[v] {
                depth[v] = depth[p] + self.length[v];
            }
        }
        depth
    }

    /// Root-to-leaf path length of every species.
    pub fn root_path_lengths(&self) -> Vec<f64> {
        let depth = self.node_depths();
        self.species_node.iter().map(|&v| depth[v]).collect()
    }

    /// Extends each leaf arc so that every root-to-leaf path has the length
    /// of the longest one. Internal arcs are untouched.
    pub fn ultrametrize(&self) -> Self {
        let paths = self.root_path_lengths();
        let longest = paths.iter().copied().fold(0.0, f64::max);
        let mut out = self.clone();
        for (s, &v) in self.species_node.iter().enumerate() {
            let extra = longest - paths[s];
            if extra > 0.0 {
                out.length[v] += extra;
            }
        }
        out
    }

    /// True iff all root-to-leaf path lengths lie within `tol` of each other.
    pub fn is_ultrametric(&self, tol: f64) -> bool {
        let paths = self.root_path_lengths();
        let lo = paths.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = paths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo <= tol
    }

    fn check_arc(&self, arc: ArcId) -> Result<()> {
        if arc.0 >= self.node_count() || arc.0 == self.root {
            return Err(Error::UnknownArc(arc.0));
        }
        Ok(())
    }
}
