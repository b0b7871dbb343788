//! An in-memory B-tree with the two classical insertion algorithms.
//!
//! The tree is only ever grown; it exists to provide ground truth for the
//! fringe dynamics that the urn chains model.

use crate::composition::CompositionVector;
use crate::error::{Error, Result};
use crate::rules::Algorithm;

/// A tree node. `children` is empty iff the node is a fringe node, i.e. all
/// of its descendants are leaves (gaps).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node<K> {
    keys: Vec<K>,
    children: Vec<Node<K>>,
}

impl<K> Node<K> {
    pub fn fringe(keys: Vec<K>) -> Self {
        Self {
            keys,
            children: Vec::new(),
        }
    }

    pub fn internal(keys: Vec<K>, children: Vec<Node<K>>) -> Self {
        Self { keys, children }
    }

    pub fn keys(&self) -> &[K] {
        &self.keys
    }

    pub fn children(&self) -> &[Node<K>] {
        &self.children
    }

    pub fn is_fringe(&self) -> bool {
        self.children.is_empty()
    }
}

impl<K: Ord> Node<K> {
    /// Splits a node around its middle key; both halves receive `mid` keys.
    fn split(&mut self, mid: usize) -> (K, Node<K>) {
        let right_keys = self.keys.split_off(mid + 1);
        let median = self.keys.pop().expect("split of an empty node");
        let right_children = if self.children.is_empty() {
            Vec::new()
        } else {
            self.children.split_off(mid + 1)
        };
        (median, Node::internal(right_keys, right_children))
    }
}

#[derive(Debug, Clone)]
pub struct BTree<K> {
    m: usize,
    algorithm: Algorithm,
    root: Option<Node<K>>,
    len: usize,
}

impl<K: Ord + Clone> BTree<K> {
    pub fn new(m: usize, algorithm: Algorithm) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!(
                "B-tree parameter m must be at least 2, got {m}"
            )));
        }
        Ok(Self {
            m,
            algorithm,
            root: None,
            len: 0,
        })
    }

    /// Builds a tree from an explicit root and checks every invariant.
    pub fn from_root(m: usize, algorithm: Algorithm, root: Node<K>) -> Result<Self> {
        let mut tree = Self::new(m, algorithm)?;
        tree.len = count_keys(&root);
        tree.root = Some(root);
        tree.check_invariants()?;
        Ok(tree)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn root(&self) -> Option<&Node<K>> {
        self.root.as_ref()
    }

    /// Number of stored keys.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Maximal key count of any node.
    pub fn capacity(&self) -> usize {
        match self.algorithm {
            Algorithm::Optimistic => 2 * self.m - 2,
            Algorithm::Prudent => 2 * self.m - 1,
        }
    }

    pub fn contains(&self, key: &K) -> bool {
        let mut node = match &self.root {
            Some(root) => root,
            None => return false,
        };
        loop {
            match node.keys.binary_search(key) {
                Ok(_) => return true,
                Err(_) if node.is_fringe() => return false,
                Err(i) => node = &node.children[i],
            }
        }
    }

    /// Inserts `key`. Returns `false` (leaving the tree untouched) when the
    /// key is already present.
    pub fn insert_key(&mut self, key: K) -> bool {
        if self.contains(&key) {
            return false;
        }
        match self.algorithm {
            Algorithm::Optimistic => self.insert_optimistic(key),
            Algorithm::Prudent => self.insert_prudent(key),
        }
        self.len += 1;
        true
    }

    fn insert_optimistic(&mut self, key: K) {
        let cap = self.capacity();
        let mid = self.m - 1;
        let Some(root) = self.root.as_mut() else {
            self.root = Some(Node::fringe(vec![key]));
            return;
        };
        if let Some((median, right)) = insert_bottom_up(root, key, cap, mid) {
            let left = std::mem::replace(root, Node::fringe(Vec::new()));
            *root = Node::internal(vec![median], vec![left, right]);
        }
    }

    fn insert_prudent(&mut self, key: K) {
        let cap = self.capacity();
        let mid = self.m - 1;
        let Some(root) = self.root.as_mut() else {
            self.root = Some(Node::fringe(vec![key]));
            return;
        };
        if root.keys.len() == cap {
            let (median, right) = root.split(mid);
            let left = std::mem::replace(root, Node::fringe(Vec::new()));
            *root = Node::internal(vec![median], vec![left, right]);
        }
        let mut node = root;
        loop {
            let i = match node.keys.binary_search(&key) {
                Ok(_) => unreachable!("duplicate keys are filtered before insertion"),
                Err(i) => i,
            };
            if node.is_fringe() {
                node.keys.insert(i, key);
                return;
            }
            let mut i = i;
            if node.children[i].keys.len() == cap {
                let (median, right) = node.children[i].split(mid);
                let go_right = key > median;
                node.keys.insert(i, median);
                node.children.insert(i + 1, right);
                if go_right {
                    i += 1;
                }
            }
            node = &mut node.children[i];
        }
    }

    /// Verifies equal leaf depth, key-count bounds and search ordering.
    pub fn check_invariants(&self) -> Result<()> {
        let Some(root) = &self.root else {
            return if self.len == 0 {
                Ok(())
            } else {
                Err(Error::Invariant("empty root with nonzero length".into()))
            };
        };
        let mut fringe_depth = None;
        self.check_node(root, true, 0, None, None, &mut fringe_depth)?;
        if count_keys(root) != self.len {
            return Err(Error::Invariant("key count does not match length".into()));
        }
        Ok(())
    }

    fn check_node(
        &self,
        node: &Node<K>,
        is_root: bool,
        depth: usize,
        lo: Option<&K>,
        hi: Option<&K>,
        fringe_depth: &mut Option<usize>,
    ) -> Result<()> {
        let n = node.keys.len();
        let min = if is_root { 1 } else { self.m - 1 };
        if n < min || n > self.capacity() {
            return Err(Error::Invariant(format!(
                "node at depth {depth} holds {n} keys, allowed {min}..={}",
                self.capacity()
            )));
        }
        if node.keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invariant("keys out of order within a node".into()));
        }
        if lo.is_some_and(|lo| node.keys[0] <= *lo) || hi.is_some_and(|hi| node.keys[n - 1] >= *hi)
        {
            return Err(Error::Invariant("search ordering broken".into()));
        }
        if node.is_fringe() {
            match *fringe_depth {
                None => *fringe_depth = Some(depth),
                Some(d) if d != depth => {
                    return Err(Error::Invariant("leaves at different depths".into()))
                }
                Some(_) => {}
            }
            return Ok(());
        }
        if node.children.len() != n + 1 {
            return Err(Error::Invariant("child count is not key count + 1".into()));
        }
        for (i, child) in node.children.iter().enumerate() {
            let clo = if i == 0 { lo } else { Some(&node.keys[i - 1]) };
            let chi = if i == n { hi } else { Some(&node.keys[i]) };
            self.check_node(child, false, depth + 1, clo, chi, fringe_depth)?;
        }
        Ok(())
    }

    /// Visits fringe nodes left to right.
    pub fn for_each_fringe<'a>(&'a self, mut f: impl FnMut(&'a Node<K>)) {
        fn walk<'a, K>(node: &'a Node<K>, f: &mut impl FnMut(&'a Node<K>)) {
            if node.is_fringe() {
                f(node);
            } else {
                node.children.iter().for_each(|c| walk(c, f));
            }
        }
        if let Some(root) = &self.root {
            walk(root, &mut f);
        }
    }

    /// Fringe node type of a node holding `keys` keys, if it has one.
    fn fringe_type(&self, keys: usize) -> Option<usize> {
        let k = (keys + 2).checked_sub(self.m)?;
        (1..=self.algorithm.dim(self.m)).contains(&k).then_some(k)
    }

    /// Counts fringe nodes per type: `L^(k)` is the number of fringe nodes
    /// holding `m+k-2` keys.
    pub fn fringe_composition(&self) -> Result<CompositionVector> {
        let Some(root) = &self.root else {
            return Err(Error::InvalidState("the tree is empty".into()));
        };
        if root.is_fringe() && self.fringe_type(root.keys.len()).is_none() {
            return Err(Error::InvalidState(format!(
                "root fringe node holds {} keys, fewer than m-1 = {}",
                root.keys.len(),
                self.m - 1
            )));
        }
        let mut counts = vec![0u64; self.algorithm.dim(self.m)];
        let mut bad = None;
        self.for_each_fringe(|node| match self.fringe_type(node.keys.len()) {
            Some(k) => counts[k - 1] += 1,
            None => bad = Some(node.keys.len()),
        });
        if let Some(n) = bad {
            return Err(Error::Invariant(format!("fringe node with {n} keys")));
        }
        Ok(CompositionVector::fringe(counts))
    }

    /// Gap composition: `G^(k) = (m+k-1) L^(k)`.
    pub fn gap_composition(&self) -> Result<CompositionVector> {
        Ok(self.fringe_composition()?.to_gaps(self.m))
    }

    /// Exclusive key bounds of the gap with rank `rank` among the gaps of
    /// fringe type `k` (1-based), ranking type-`k` fringe nodes left to right
    /// and gaps left to right within a node.
    pub fn gap_bounds(&self, k: usize, rank: u64) -> Option<(Option<&K>, Option<&K>)> {
        let size = (self.m + k - 1) as u64;
        let mut target = rank / size;
        let slot = (rank % size) as usize;
        let root = self.root.as_ref()?;
        let mut stack: Vec<(&Node<K>, Option<&K>, Option<&K>)> = vec![(root, None, None)];
        while let Some((node, lo, hi)) = stack.pop() {
            if node.is_fringe() {
                if self.fringe_type(node.keys.len()) == Some(k) {
                    if target == 0 {
                        let lower = if slot == 0 { lo } else { Some(&node.keys[slot - 1]) };
                        let upper = if slot == node.keys.len() {
                            hi
                        } else {
                            Some(&node.keys[slot])
                        };
                        return Some((lower, upper));
                    }
                    target -= 1;
                }
                continue;
            }
            let n = node.keys.len();
            for i in (0..=n).rev() {
                let clo = if i == 0 { lo } else { Some(&node.keys[i - 1]) };
                let chi = if i == n { hi } else { Some(&node.keys[i]) };
                stack.push((&node.children[i], clo, chi));
            }
        }
        None
    }
}

fn count_keys<K>(node: &Node<K>) -> usize {
    node.keys.len() + node.children.iter().map(count_keys).sum::<usize>()
}

/// Optimistic insertion below `node`; returns the split product when `node`
/// overflowed.
fn insert_bottom_up<K: Ord>(node: &mut Node<K>, key: K, cap: usize, mid: usize) -> Option<(K, Node<K>)> {
    let i = match node.keys.binary_search(&key) {
        Ok(_) => unreachable!("duplicate keys are filtered before insertion"),
        Err(i) => i,
    };
    if node.is_fringe() {
        node.keys.insert(i, key);
    } else if let Some((median, right)) = insert_bottom_up(&mut node.children[i], key, cap, mid) {
        node.keys.insert(i, median);
        node.children.insert(i + 1, right);
    }
    (node.keys.len() > cap).then(|| node.split(mid))
}
