//! A forest of implicit-key treaps over the node set `0..n`.
//!
//! Each tree stores one cyclic sequence (a cycle of the permutation) in orbit
//! order. Nodes are array slots, so locating the tree of a node, its rank in
//! the sequence, splitting and concatenating all run in `O(log n)` expected
//! time without allocation. Priorities are a fixed hash of the node index,
//! which keeps the tree shapes independent of the operation sequence.

pub(crate) const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub(crate) struct SequenceForest {
    left: Vec<u32>,
    right: Vec<u32>,
    parent: Vec<u32>,
    size: Vec<u32>,
    priority: Vec<u64>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl SequenceForest {
    /// `n` singleton sequences.
    pub(crate) fn singletons(n: usize) -> Self {
        SequenceForest {
            left: vec![NIL; n],
            right: vec![NIL; n],
            parent: vec![NIL; n],
            size: vec![1; n],
            priority: (0..n as u64).map(splitmix64).collect(),
        }
    }

    #[inline]
    fn sz(&self, t: u32) -> u32 {
        if t == NIL {
            0
        } else {
            self.size[t as usize]
        }
    }

    #[inline]
    fn pull(&mut self, t: u32) {
        let tu = t as usize;
        self.size[tu] = 1 + self.sz(self.left[tu]) + self.sz(self.right[tu]);
    }

    #[inline]
    fn set_parent(&mut self, child: u32, parent: u32) {
        if child != NIL {
            self.parent[child as usize] = parent;
        }
    }

    pub(crate) fn root(&self, mut x: u32) -> u32 {
        while self.parent[x as usize] != NIL {
            x = self.parent[x as usize];
        }
        x
    }

    /// Length of the sequence rooted at `root`.
    pub(crate) fn len(&self, root: u32) -> usize {
        self.sz(root) as usize
    }

    /// Zero-based position of `x` within its sequence.
    pub(crate) fn rank(&self, x: u32) -> usize {
        let mut r = self.sz(self.left[x as usize]) as usize;
        let mut node = x;
        let mut p = self.parent[x as usize];
        while p != NIL {
            if self.right[p as usize] == node {
                r += self.sz(self.left[p as usize]) as usize + 1;
            }
            node = p;
            p = self.parent[p as usize];
        }
        r
    }

    fn split_rec(&mut self, t: u32, k: u32) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        let tu = t as usize;
        let left_size = self.sz(self.left[tu]);
        if k <= left_size {
            let (a, b) = self.split_rec(self.left[tu], k);
            self.left[tu] = b;
            self.set_parent(b, t);
            self.pull(t);
            (a, t)
        } else {
            let (a, b) = self.split_rec(self.right[tu], k - left_size - 1);
            self.right[tu] = a;
            self.set_parent(a, t);
            self.pull(t);
            (t, b)
        }
    }

    /// Splits the sequence rooted at `root` into its first `k` elements and
    /// the rest.
    pub(crate) fn split(&mut self, root: u32, k: usize) -> (u32, u32) {
        let (a, b) = self.split_rec(root, k as u32);
        self.set_parent(a, NIL);
        self.set_parent(b, NIL);
        (a, b)
    }

    fn merge_rec(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.priority[a as usize] > self.priority[b as usize] {
            let r = self.merge_rec(self.right[a as usize], b);
            self.right[a as usize] = r;
            self.set_parent(r, a);
            self.pull(a);
            a
        } else {
            let l = self.merge_rec(a, self.left[b as usize]);
            self.left[b as usize] = l;
            self.set_parent(l, b);
            self.pull(b);
            b
        }
    }

    /// Concatenates two sequences; both arguments must be roots.
    pub(crate) fn merge(&mut self, a: u32, b: u32) -> u32 {
        let r = self.merge_rec(a, b);
        self.set_parent(r, NIL);
        r
    }

    /// Rotates the cyclic sequence containing `x` so that `x` is last, and
    /// returns the new root.
    pub(crate) fn rotate_to_end(&mut self, x: u32) -> u32 {
        let root = self.root(x);
        let k = self.rank(x) + 1;
        if k == self.len(root) {
            return root;
        }
        let (head, tail) = self.split(root, k);
        self.merge(tail, head)
    }

    /// In-order listing of the sequence rooted at `root`.
    #[cfg(test)]
    pub(crate) fn sequence(&self, root: u32) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.len(root));
        let mut stack = Vec::new();
        let mut node = root;
        while node != NIL || !stack.is_empty() {
            while node != NIL {
                stack.push(node);
                node = self.left[node as usize];
            }
            let top = stack.pop().unwrap();
            out.push(top);
            node = self.right[top as usize];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(forest: &mut SequenceForest, items: &[u32]) -> u32 {
        items.iter().fold(NIL, |acc, &x| forest.merge(acc, x))
    }

    #[test]
    fn split_merge_rank() {
        let mut f = SequenceForest::singletons(10);
        let root = build(&mut f, &[3, 1, 4, 0, 5, 9, 2, 6, 8, 7]);
        assert_eq!(f.sequence(root), vec![3, 1, 4, 0, 5, 9, 2, 6, 8, 7]);
        for (pos, &x) in f.sequence(root).iter().enumerate() {
            assert_eq!(f.rank(x), pos);
            assert_eq!(f.root(x), root);
        }
        let (a, b) = f.split(root, 4);
        assert_eq!(f.sequence(a), vec![3, 1, 4, 0]);
        assert_eq!(f.sequence(b), vec![5, 9, 2, 6, 8, 7]);
        assert_ne!(f.root(3), f.root(7));
        let r = f.rotate_to_end(9);
        assert_eq!(f.sequence(r), vec![2, 6, 8, 7, 5, 9]);
        let r = f.rotate_to_end(9);
        assert_eq!(f.sequence(r), vec![2, 6, 8, 7, 5, 9]);
    }
}
