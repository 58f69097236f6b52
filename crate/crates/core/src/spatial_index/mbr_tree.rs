//! R-tree over footprint bounding rectangles (quadratic split).

use crate::error::{Error, Result};
use crate::geom::{Rect, Scalar};

pub const MAX_ENTRIES: usize = 16;
pub const MIN_ENTRIES: usize = 6;

#[derive(Clone, Debug)]
struct Node<S: Scalar> {
    leaf: bool,
    /// Child node index for inner nodes, payload id for leaves.
    entries: Vec<(Rect<S>, u32)>,
}

#[derive(Clone, Debug)]
pub struct MbrTree<S: Scalar = f64> {
    nodes: Vec<Node<S>>,
    root: usize,
    len: usize,
    height: usize,
}

impl<S: Scalar> Default for MbrTree<S> {
    fn default() -> Self {
        MbrTree { nodes: vec![Node { leaf: true, entries: Vec::new() }], root: 0, len: 0, height: 1 }
    }
}

fn cover<S: Scalar>(entries: &[(Rect<S>, u32)]) -> Rect<S> {
    entries[1..].iter().fold(entries[0].0, |acc, e| acc.union(&e.0))
}

fn enlargement<S: Scalar>(base: &Rect<S>, add: &Rect<S>) -> S {
    base.union(add).area() - base.area()
}

/// Guttman's quadratic split of an overfull entry list.
fn quadratic_split<S: Scalar>(mut entries: Vec<(Rect<S>, u32)>) -> (Vec<(Rect<S>, u32)>, Vec<(Rect<S>, u32)>) {
    let mut seeds = (0, 1);
    let mut worst = S::neg_infinity();
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            let waste = entries[i].0.union(&entries[j].0).area() - entries[i].0.area() - entries[j].0.area();
            if waste > worst {
                worst = waste;
                seeds = (i, j);
            }
        }
    }
    let b = entries.swap_remove(seeds.1);
    let a = entries.swap_remove(seeds.0);
    let (mut ga, mut gb) = (vec![a], vec![b]);
    let (mut ra, mut rb) = (a.0, b.0);
    while !entries.is_empty() {
        if ga.len() + entries.len() == MIN_ENTRIES {
            ga.append(&mut entries);
            break;
        }
        if gb.len() + entries.len() == MIN_ENTRIES {
            gb.append(&mut entries);
            break;
        }
        // pick the entry with the strongest preference for one group
        let mut pick = 0;
        let mut best = S::neg_infinity();
        for (i, e) in entries.iter().enumerate() {
            let diff = (enlargement(&ra, &e.0) - enlargement(&rb, &e.0)).abs();
            if diff > best {
                best = diff;
                pick = i;
            }
        }
        let e = entries.swap_remove(pick);
        let (da, db) = (enlargement(&ra, &e.0), enlargement(&rb, &e.0));
        let to_a = match da.partial_cmp(&db) {
            Some(std::cmp::Ordering::Less) => true,
            Some(std::cmp::Ordering::Greater) => false,
            _ => match ra.area().partial_cmp(&rb.area()) {
                Some(std::cmp::Ordering::Less) => true,
                Some(std::cmp::Ordering::Greater) => false,
                _ => ga.len() <= gb.len(),
            },
        };
        if to_a {
            ra = ra.union(&e.0);
            ga.push(e);
        } else {
            rb = rb.union(&e.0);
            gb.push(e);
        }
    }
    (ga, gb)
}

impl<S: Scalar> MbrTree<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bulk<I: IntoIterator<Item = (Rect<S>, u32)>>(items: I) -> Self {
        let mut tree = Self::new();
        for (rect, id) in items {
            tree.insert(rect, id);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn insert(&mut self, rect: Rect<S>, id: u32) {
        if let Some((left, right)) = self.insert_at(self.root, rect, id) {
            let l = self.push(left);
            let r = self.push(right);
            let entries = vec![(cover(&self.nodes[l].entries), l as u32), (cover(&self.nodes[r].entries), r as u32)];
            self.nodes[self.root] = Node { leaf: false, entries };
            self.height += 1;
        }
        self.len += 1;
    }

    fn push(&mut self, node: Node<S>) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Returns the two halves when `node` splits; the caller owns placing them.
    fn insert_at(&mut self, node: usize, rect: Rect<S>, id: u32) -> Option<(Node<S>, Node<S>)> {
        if !self.nodes[node].leaf {
            let slot = self.choose_subtree(node, &rect);
            let child = self.nodes[node].entries[slot].1 as usize;
            match self.insert_at(child, rect, id) {
                None => {
                    let e = &mut self.nodes[node].entries[slot];
                    e.0 = e.0.union(&rect);
                }
                Some((left, right)) => {
                    self.nodes[child] = left;
                    let sibling = self.push(right);
                    let child_cover = cover(&self.nodes[child].entries);
                    let sibling_cover = cover(&self.nodes[sibling].entries);
                    self.nodes[node].entries[slot].0 = child_cover;
                    self.nodes[node].entries.push((sibling_cover, sibling as u32));
                }
            }
        } else {
            self.nodes[node].entries.push((rect, id));
        }
        if self.nodes[node].entries.len() > MAX_ENTRIES {
            let leaf = self.nodes[node].leaf;
            let entries = std::mem::take(&mut self.nodes[node].entries);
            let (a, b) = quadratic_split(entries);
            return Some((Node { leaf, entries: a }, Node { leaf, entries: b }));
        }
        None
    }

    fn choose_subtree(&self, node: usize, rect: &Rect<S>) -> usize {
        let entries = &self.nodes[node].entries;
        let mut best = 0;
        let mut key = (S::infinity(), S::infinity());
        for (i, e) in entries.iter().enumerate() {
            let k = (enlargement(&e.0, rect), e.0.area());
            if k.0 < key.0 || (k.0 == key.0 && k.1 < key.1) {
                key = k;
                best = i;
            }
        }
        best
    }

    /// Ids whose rectangle intersects `query` (closed), ascending.
    pub fn query(&self, query: &Rect<S>) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            for (r, v) in &node.entries {
                if r.intersects(query) {
                    if node.leaf {
                        out.push(*v);
                    } else {
                        stack.push(*v as usize);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Checks that parents contain their children, leaves sit at one depth and
    /// non-root nodes respect the fill bounds.
    pub fn check_invariants(&self) -> Result<()> {
        let mut count = 0;
        self.check_node(self.root, None, 1, &mut count)?;
        if count != self.len {
            return Err(Error::invalid(format!("tree holds {count} entries, expected {}", self.len)));
        }
        Ok(())
    }

    fn check_node(&self, n: usize, bound: Option<&Rect<S>>, depth: usize, count: &mut usize) -> Result<()> {
        let node = &self.nodes[n];
        if n != self.root && !(MIN_ENTRIES..=MAX_ENTRIES).contains(&node.entries.len()) {
            return Err(Error::invalid(format!("node {n} has {} entries", node.entries.len())));
        }
        for (r, v) in &node.entries {
            if let Some(b) = bound {
                if !b.contains(r) {
                    return Err(Error::invalid(format!("node {n} entry escapes its parent rectangle")));
                }
            }
            if node.leaf {
                *count += 1;
            } else {
                self.check_node(*v as usize, Some(r), depth + 1, count)?;
            }
        }
        if node.leaf && depth != self.height {
            return Err(Error::invalid(format!("leaf {n} at depth {depth}, height {}", self.height)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rects(n: usize, seed: u64) -> Vec<Rect> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x = rng.gen_range(0.0..0.98);
                let y = rng.gen_range(0.0..0.98);
                Rect::new(x, y, x + rng.gen_range(0.0..0.02), y + rng.gen_range(0.0..0.02)).unwrap()
            })
            .collect()
    }

    #[test]
    fn empty_and_single() {
        let tree: MbrTree = MbrTree::new();
        assert!(tree.query(&Rect::unit()).is_empty());
        tree.check_invariants().unwrap();
        let one = MbrTree::bulk([(Rect::new(0.1, 0.1, 0.2, 0.2).unwrap(), 7)]);
        assert_eq!(one.query(&Rect::new(0.2, 0.2, 0.3, 0.3).unwrap()), [7]);
        assert!(one.query(&Rect::new(0.3, 0.3, 0.4, 0.4).unwrap()).is_empty());
    }

    #[test]
    fn matches_linear_scan() {
        let rects = random_rects(10_000, 5);
        let tree = MbrTree::bulk(rects.iter().enumerate().map(|(i, r)| (*r, i as u32)));
        tree.check_invariants().unwrap();
        assert_eq!(tree.len(), 10_000);
        assert!(tree.height() >= 3);
        for q in random_rects(200, 6) {
            let q = Rect::new(q.xmin, q.ymin, (q.xmax * 3.0).min(1.0), (q.ymax * 1.5).min(1.0)).unwrap();
            let want: Vec<u32> = rects.iter().enumerate().filter(|(_, r)| r.intersects(&q)).map(|(i, _)| i as u32).collect();
            assert_eq!(tree.query(&q), want);
        }
    }

    #[test]
    fn works_in_f32() {
        let rects: Vec<Rect<f32>> = random_rects(500, 9)
            .iter()
            .map(|r| Rect::new(r.xmin as f32, r.ymin as f32, r.xmax as f32, r.ymax as f32).unwrap())
            .collect();
        let tree = MbrTree::bulk(rects.iter().enumerate().map(|(i, r)| (*r, i as u32)));
        tree.check_invariants().unwrap();
        let q = Rect::new(0.2f32, 0.2, 0.4, 0.4).unwrap();
        let want: Vec<u32> = rects.iter().enumerate().filter(|(_, r)| r.intersects(&q)).map(|(i, _)| i as u32).collect();
        assert_eq!(tree.query(&q), want);
    }
}
