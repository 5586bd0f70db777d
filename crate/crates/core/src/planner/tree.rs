use std::collections::VecDeque;

use crate::primitives::{RobotState, Segment};
use crate::stl::MonitorState;

/// A tree node in workspace × time.
#[derive(Debug, Clone)]
pub struct Node {
    pub state: RobotState,
    pub time: f64,
    pub parent: Option<usize>,
    /// Policy sequence of the incoming edge; empty for the root.
    pub segments: Vec<Segment>,
    /// Accumulated negative prefix robustness along the path from the root.
    pub cost: f64,
    /// Prefix robustness of the trajectory ending at this node.
    pub prefix_robustness: f64,
    /// False once pruned.
    pub alive: bool,
    pub(crate) children: Vec<usize>,
    pub(crate) monitor: MonitorState,
}

/// Arena of nodes; ids are indices and never reused. Pruned nodes stay in
/// the arena with `alive == false`.
#[derive(Debug, Clone, Default)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn alive(&self) -> impl Iterator<Item = (usize, &Node)> {
        self.nodes.iter().enumerate().filter(|(_, n)| n.alive)
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.nodes[id].children
    }

    /// Node ids from the root to `id`.
    pub fn path(&self, id: usize) -> Vec<usize> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Whether `a` lies on the path from the root to `b` (inclusive).
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        let mut cur = Some(b);
        while let Some(c) = cur {
            if c == a {
                return true;
            }
            cur = self.nodes[c].parent;
        }
        false
    }

    /// Strict descendants of `id` in breadth-first order.
    pub fn descendants(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut queue: VecDeque<usize> = self.nodes[id].children.iter().copied().collect();
        while let Some(n) = queue.pop_front() {
            out.push(n);
            queue.extend(self.nodes[n].children.iter().copied());
        }
        out
    }

    pub(crate) fn push(&mut self, node: Node) -> usize {
        let id = self.nodes.len();
        if let Some(p) = node.parent {
            self.nodes[p].children.push(id);
        }
        self.nodes.push(node);
        id
    }

    pub(crate) fn node_mut(&mut self, id: usize) -> &mut Node {
        &mut self.nodes[id]
    }

    fn detach(&mut self, id: usize) {
        if let Some(p) = self.nodes[id].parent {
            self.nodes[p].children.retain(|&c| c != id);
        }
    }

    pub(crate) fn reparent(&mut self, id: usize, parent: usize) {
        self.detach(id);
        self.nodes[id].parent = Some(parent);
        self.nodes[parent].children.push(id);
    }

    /// Marks `id` and its subtree dead; returns how many nodes were removed.
    pub(crate) fn prune(&mut self, id: usize) -> usize {
        let mut gone = self.descendants(id);
        gone.push(id);
        self.detach(id);
        for &n in &gone {
            self.nodes[n].alive = false;
            self.nodes[n].children.clear();
        }
        gone.len()
    }
}
