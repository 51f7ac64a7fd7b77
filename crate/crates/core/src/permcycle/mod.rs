//! Permutations of `{1..n}` with incrementally maintained cycle structure.
//!
//! [`DynamicPermutation`] is the state of the transposition walk. Applying
//! the transposition `(i j)` on the right swaps the images of `i` and `j`:
//! two cycles merge when `i` and `j` lie in different cycles and one cycle
//! splits otherwise. The split point falls where the orbit places `i` and
//! `j`, so no extra randomness is involved.
//!
//! Membership queries go through a cycle index. The default
//! [`CycleIndexMode::Treap`] keeps each cycle as a balanced sequence and
//! answers in `O(log n)` expected time even when a giant cycle holds most of
//! the elements. [`CycleIndexMode::Traversal`] walks the orbit instead; it is
//! slow on large cycles and exists as a cross-check.
//!
//! Positions are 1-based throughout the public API.

mod forest;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use forest::{SequenceForest, NIL};

/// How cycle membership is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CycleIndexMode {
    #[default]
    Treap,
    Traversal,
}

/// What a transposition did to the cycle structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranspositionEffect {
    /// `i = j`: nothing happened.
    NoOp,
    /// Cycles of sizes `sizes.0` (containing `i`) and `sizes.1` (containing
    /// `j`) merged into one cycle of size `merged`.
    Coagulation {
        sizes: (usize, usize),
        merged: usize,
    },
    /// A cycle of size `size` split; `parts.0` is the new cycle through `i`,
    /// `parts.1` the one through `j`.
    Fragmentation { size: usize, parts: (usize, usize) },
}

impl TranspositionEffect {
    pub fn is_fragmentation(&self) -> bool {
        matches!(self, TranspositionEffect::Fragmentation { .. })
    }

    /// Change in the number of cycles.
    pub fn cycle_delta(&self) -> i64 {
        match self {
            TranspositionEffect::NoOp => 0,
            TranspositionEffect::Coagulation { .. } => -1,
            TranspositionEffect::Fragmentation { .. } => 1,
        }
    }
}

/// Snapshot statistics of the cycle structure.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleStats {
    pub cycle_count: usize,
    /// L₁: size of the largest cycle.
    pub largest_cycle: usize,
    /// K₁: size of the cycle containing element 1.
    pub cycle_of_one: usize,
    /// `(k, X_k)` for every size `k` with `X_k > 0`, ascending.
    pub spectrum: Vec<(usize, usize)>,
    /// N↑: elements on cycles of size strictly greater than `n^a`.
    pub mass_above: usize,
}

#[derive(Debug, Clone)]
pub struct DynamicPermutation {
    /// σ as 0-based images.
    succ: Vec<u32>,
    mode: CycleIndexMode,
    forest: Option<SequenceForest>,
    cycle_count: usize,
    /// X_k, indexed by size.
    size_counts: Vec<u32>,
    /// Sizes with X_k > 0.
    present: BTreeSet<u32>,
}

impl DynamicPermutation {
    pub fn identity(n: usize) -> Result<Self> {
        Self::identity_with_mode(n, CycleIndexMode::default())
    }

    pub fn identity_with_mode(n: usize, mode: CycleIndexMode) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig(
                "permutation size must be at least 1".into(),
            ));
        }
        if n >= NIL as usize {
            return Err(Error::InvalidConfig(format!(
                "permutation size {n} too large"
            )));
        }
        let mut size_counts = vec![0; n + 1];
        size_counts[1] = n as u32;
        Ok(DynamicPermutation {
            succ: (0..n as u32).collect(),
            mode,
            forest: (mode == CycleIndexMode::Treap).then(|| SequenceForest::singletons(n)),
            cycle_count: n,
            size_counts,
            present: BTreeSet::from([1]),
        })
    }

    /// Builds a permutation from its images: `images[k − 1] = σ(k)`.
    pub fn from_images(images: &[usize], mode: CycleIndexMode) -> Result<Self> {
        let n = images.len();
        let mut perm = Self::identity_with_mode(n, mode)?;
        let mut seen = vec![false; n];
        for &img in images {
            if img == 0 || img > n || std::mem::replace(&mut seen[img - 1], true) {
                return Err(Error::InvalidConfig(format!(
                    "images do not form a permutation of 1..={n}"
                )));
            }
        }
        perm.succ = images.iter().map(|&x| (x - 1) as u32).collect();
        perm.rebuild_index();
        Ok(perm)
    }

    /// Builds a permutation from its cycle notation; unlisted elements are
    /// fixed points.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>], mode: CycleIndexMode) -> Result<Self> {
        let mut images: Vec<usize> = (1..=n).collect();
        let mut seen = vec![false; n + 1];
        for cycle in cycles {
            for (idx, &x) in cycle.iter().enumerate() {
                if x == 0 || x > n {
                    return Err(Error::OutOfRange { position: x, n });
                }
                if std::mem::replace(&mut seen[x], true) {
                    return Err(Error::InvalidConfig(format!(
                        "element {x} repeated in cycles"
                    )));
                }
                images[x - 1] = cycle[(idx + 1) % cycle.len()];
            }
        }
        Self::from_images(&images, mode)
    }

    fn rebuild_index(&mut self) {
        let n = self.succ.len();
        self.size_counts.iter_mut().for_each(|c| *c = 0);
        self.present.clear();
        self.cycle_count = 0;
        if self.forest.is_some() {
            self.forest = Some(SequenceForest::singletons(n));
        }
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0usize;
            let mut root = NIL;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                len += 1;
                if let Some(f) = self.forest.as_mut() {
                    root = f.merge(root, x as u32);
                }
                x = self.succ[x] as usize;
            }
            self.cycle_count += 1;
            self.add_size(len);
        }
    }

    pub fn n(&self) -> usize {
        self.succ.len()
    }

    pub fn mode(&self) -> CycleIndexMode {
        self.mode
    }

    fn check(&self, position: usize) -> Result<u32> {
        if position == 0 || position > self.n() {
            Err(Error::OutOfRange {
                position,
                n: self.n(),
            })
        } else {
            Ok((position - 1) as u32)
        }
    }

    /// σ(i).
    pub fn image(&self, i: usize) -> Result<usize> {
        Ok(self.succ[self.check(i)? as usize] as usize + 1)
    }

    pub fn cycle_count(&self) -> usize {
        self.cycle_count
    }

    /// Cayley distance to the identity, `n − |σ|`.
    pub fn distance(&self) -> usize {
        self.n() - self.cycle_count
    }

    fn add_size(&mut self, k: usize) {
        let c = &mut self.size_counts[k];
        *c += 1;
        if *c == 1 {
            self.present.insert(k as u32);
        }
    }

    fn remove_size(&mut self, k: usize) {
        let c = &mut self.size_counts[k];
        debug_assert!(*c > 0);
        *c -= 1;
        if *c == 0 {
            self.present.remove(&(k as u32));
        }
    }

    /// Steps from `from` along σ until `to` is reached, or `None` if `to` is
    /// not on the orbit. Also returns the orbit length when not found.
    fn orbit_distance(&self, from: u32, to: u32) -> (Option<usize>, usize) {
        let mut x = self.succ[from as usize];
        let mut steps = 1;
        while x != from {
            if x == to {
                return (Some(steps), 0);
            }
            x = self.succ[x as usize];
            steps += 1;
        }
        (None, steps)
    }

    fn orbit_len(&self, from: u32) -> usize {
        let mut x = self.succ[from as usize];
        let mut len = 1;
        while x != from {
            x = self.succ[x as usize];
            len += 1;
        }
        len
    }

    pub fn same_cycle(&self, i: usize, j: usize) -> Result<bool> {
        let (a, b) = (self.check(i)?, self.check(j)?);
        if a == b {
            return Ok(true);
        }
        Ok(match &self.forest {
            Some(f) => f.root(a) == f.root(b),
            None => self.orbit_distance(a, b).0.is_some(),
        })
    }

    /// Size of the cycle containing `i`.
    pub fn cycle_size_of(&self, i: usize) -> Result<usize> {
        let a = self.check(i)?;
        Ok(match &self.forest {
            Some(f) => f.len(f.root(a)),
            None => self.orbit_len(a),
        })
    }

    /// Replaces σ by σ∘(i j).
    pub fn apply_transposition(&mut self, i: usize, j: usize) -> Result<TranspositionEffect> {
        let (a, b) = (self.check(i)?, self.check(j)?);
        if a == b {
            return Ok(TranspositionEffect::NoOp);
        }
        let effect = match self.forest.as_mut() {
            Some(f) => {
                let (ra, rb) = (f.root(a), f.root(b));
                if ra != rb {
                    let sizes = (f.len(ra), f.len(rb));
                    // [.., a] ++ [.., b] is the merged orbit once σ(a), σ(b) swap
                    let sa = f.rotate_to_end(a);
                    let sb = f.rotate_to_end(b);
                    f.merge(sa, sb);
                    TranspositionEffect::Coagulation {
                        sizes,
                        merged: sizes.0 + sizes.1,
                    }
                } else {
                    let size = f.len(ra);
                    // [x.., b, y.., a] splits into orbits [x.., b] and [y.., a]
                    let root = f.rotate_to_end(a);
                    let cut = f.rank(b) + 1;
                    let (with_b, with_a) = f.split(root, cut);
                    TranspositionEffect::Fragmentation {
                        size,
                        parts: (f.len(with_a), f.len(with_b)),
                    }
                }
            }
            None => match self.orbit_distance(a, b) {
                (Some(steps), _) => {
                    let size = self.orbit_len(a);
                    TranspositionEffect::Fragmentation {
                        size,
                        parts: (size - steps, steps),
                    }
                }
                (None, len_a) => {
                    let sizes = (len_a, self.orbit_len(b));
                    TranspositionEffect::Coagulation {
                        sizes,
                        merged: sizes.0 + sizes.1,
                    }
                }
            },
        };
        self.succ.swap(a as usize, b as usize);
        match effect {
            TranspositionEffect::Coagulation { sizes, merged } => {
                self.remove_size(sizes.0);
                self.remove_size(sizes.1);
                self.add_size(merged);
                self.cycle_count -= 1;
            }
            TranspositionEffect::Fragmentation { size, parts } => {
                self.remove_size(size);
                self.add_size(parts.0);
                self.add_size(parts.1);
                self.cycle_count += 1;
            }
            TranspositionEffect::NoOp => unreachable!(),
        }
        Ok(effect)
    }

    /// L₁.
    pub fn largest_cycle(&self) -> usize {
        self.present.last().map_or(0, |&k| k as usize)
    }

    /// X_k.
    pub fn count_of_size(&self, k: usize) -> usize {
        self.size_counts.get(k).map_or(0, |&c| c as usize)
    }

    /// `(k, X_k)` for every occupied size, ascending.
    pub fn spectrum(&self) -> Vec<(usize, usize)> {
        self.present
            .iter()
            .map(|&k| (k as usize, self.size_counts[k as usize] as usize))
            .collect()
    }

    /// Smallest cycle size counted by [`mass_above`](Self::mass_above):
    /// the least integer `k` with `k > n^a`.
    pub fn mass_threshold(&self, a: f64) -> usize {
        (self.n() as f64).powf(a).floor() as usize + 1
    }

    /// N↑ = Σ_{k > n^a} k X_k.
    pub fn mass_above(&self, a: f64) -> usize {
        let threshold = self.mass_threshold(a) as u32;
        self.present
            .range(threshold..)
            .map(|&k| k as usize * self.size_counts[k as usize] as usize)
            .sum()
    }

    pub fn cycle_stats(&self, a: f64) -> Result<CycleStats> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::domain("cycle_stats", a, "0 < a < 1"));
        }
        Ok(CycleStats {
            cycle_count: self.cycle_count,
            largest_cycle: self.largest_cycle(),
            cycle_of_one: self.cycle_size_of(1)?,
            spectrum: self.spectrum(),
            mass_above: self.mass_above(a),
        })
    }

    /// Full O(n) cycle decomposition, each cycle starting at its least
    /// element, cycles ordered by that element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x + 1);
                x = self.succ[x] as usize;
            }
            out.push(cycle);
        }
        out
    }

    /// Checks the cycle index against the images; used by tests.
    #[cfg(test)]
    fn index_is_consistent(&self) -> bool {
        let Some(f) = &self.forest else {
            return true;
        };
        for x in 0..self.n() as u32 {
            let root = f.root(x);
            let seq = f.sequence(root);
            let pos = f.rank(x);
            if seq[pos] != x || seq[(pos + 1) % seq.len()] != self.succ[x as usize] {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn worked_example(mode: CycleIndexMode) -> DynamicPermutation {
        DynamicPermutation::from_cycles(
            14,
            &[
                vec![1, 7, 4],
                vec![2],
                vec![3, 12],
                vec![5, 13, 9, 11, 6],
                vec![8, 10, 14],
            ],
            mode,
        )
        .unwrap()
    }

    const MODES: [CycleIndexMode; 2] = [CycleIndexMode::Treap, CycleIndexMode::Traversal];

    #[test]
    fn identity_basics() {
        for mode in MODES {
            let p = DynamicPermutation::identity_with_mode(5, mode).unwrap();
            assert_eq!(p.cycle_count(), 5);
            assert_eq!(p.distance(), 0);
            assert_eq!(p.spectrum(), vec![(1, 5)]);
            for i in 1..=5 {
                for j in 1..=5 {
                    assert_eq!(p.same_cycle(i, j).unwrap(), i == j);
                }
            }
        }
        assert_eq!(DynamicPermutation::identity(1).unwrap().cycle_count(), 1);
        assert!(DynamicPermutation::identity(0).is_err());
    }

    #[test]
    fn fourteen_element_example() {
        for mode in MODES {
            let p = worked_example(mode);
            assert_eq!(p.distance(), 9);
            let stats = p.cycle_stats(0.55).unwrap();
            assert_eq!(
                (stats.largest_cycle, stats.cycle_of_one, stats.cycle_count),
                (5, 3, 5)
            );
            assert!(p.same_cycle(13, 11).unwrap());
            assert!(!p.same_cycle(7, 9).unwrap());

            let mut merged = p.clone();
            let effect = merged.apply_transposition(7, 9).unwrap();
            assert_eq!(
                effect,
                TranspositionEffect::Coagulation {
                    sizes: (3, 5),
                    merged: 8
                }
            );
            assert!(merged.same_cycle(7, 9).unwrap());

            let mut split = p.clone();
            match split.apply_transposition(13, 11).unwrap() {
                TranspositionEffect::Fragmentation { size, parts } => {
                    assert_eq!(size, 5);
                    // 13 -> 6 -> 5 -> 13 and 11 -> 9 -> 11
                    assert_eq!(parts, (3, 2));
                }
                other => panic!("expected fragmentation, got {other:?}"),
            }
            assert!(split.cycles().contains(&vec![5, 13, 6]));
            assert!(split.cycles().contains(&vec![9, 11]));
        }
    }

    #[test]
    fn small_transpositions() {
        let mut p = DynamicPermutation::identity(5).unwrap();
        assert_eq!(
            p.apply_transposition(1, 2).unwrap(),
            TranspositionEffect::Coagulation {
                sizes: (1, 1),
                merged: 2
            }
        );
        assert_eq!(
            p.apply_transposition(3, 3).unwrap(),
            TranspositionEffect::NoOp
        );
        assert!(p.apply_transposition(0, 1).is_err());
        assert!(p.apply_transposition(1, 6).is_err());
    }

    #[test]
    fn single_cycle_distance_and_mass() {
        let cycle: Vec<usize> = (1..=100).collect();
        let p = DynamicPermutation::from_cycles(100, &[cycle], CycleIndexMode::Treap).unwrap();
        assert_eq!(p.distance(), 99);
        assert_eq!(p.mass_above(0.55), 100);
        let id = DynamicPermutation::identity(10).unwrap();
        assert_eq!(id.mass_above(0.55), 0);
    }

    #[test]
    fn mass_threshold_is_strict() {
        // n^a = 10 exactly: a 10-cycle is not counted, an 11-cycle is.
        let p = DynamicPermutation::from_cycles(100, &[(1..=10).collect()], CycleIndexMode::Treap)
            .unwrap();
        assert_eq!(p.mass_threshold(0.5), 11);
        assert_eq!(p.mass_above(0.5), 0);
        let q = DynamicPermutation::from_cycles(100, &[(1..=11).collect()], CycleIndexMode::Treap)
            .unwrap();
        assert_eq!(q.mass_above(0.5), 11);
    }

    #[test]
    fn from_images_rejects_non_permutations() {
        assert!(DynamicPermutation::from_images(&[1, 1], CycleIndexMode::Treap).is_err());
        assert!(DynamicPermutation::from_images(&[3, 1], CycleIndexMode::Treap).is_err());
    }

    fn ops() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..40).prop_flat_map(|n| (Just(n), prop::collection::vec((1..=n, 1..=n), 0..200)))
    }

    proptest! {
        #[test]
        fn treap_and_traversal_agree((n, steps) in ops()) {
            let mut fast = DynamicPermutation::identity_with_mode(n, CycleIndexMode::Treap).unwrap();
            let mut slow = DynamicPermutation::identity_with_mode(n, CycleIndexMode::Traversal).unwrap();
            for (i, j) in steps {
                let same = fast.same_cycle(i, j).unwrap();
                prop_assert_eq!(same, slow.same_cycle(i, j).unwrap());
                let e1 = fast.apply_transposition(i, j).unwrap();
                let e2 = slow.apply_transposition(i, j).unwrap();
                prop_assert_eq!(e1, e2);
                if i != j {
                    prop_assert_eq!(same, e1.is_fragmentation());
                }
                prop_assert!(fast.index_is_consistent());
                prop_assert_eq!(fast.cycles(), slow.cycles());
                prop_assert_eq!(fast.spectrum(), slow.spectrum());
                let total: usize = fast.spectrum().iter().map(|(k, c)| k * c).sum();
                prop_assert_eq!(total, n);
            }
        }

        #[test]
        fn transposition_is_an_involution((n, steps) in ops(), i in 1usize..40, j in 1usize..40) {
            prop_assume!(i <= n && j <= n && i != j);
            let mut p = DynamicPermutation::identity(n).unwrap();
            for (a, b) in steps {
                p.apply_transposition(a, b).unwrap();
            }
            let before = (p.cycles(), p.cycle_count(), p.spectrum());
            let first = p.apply_transposition(i, j).unwrap();
            let second = p.apply_transposition(i, j).unwrap();
            prop_assert_eq!(first.cycle_delta(), -second.cycle_delta());
            prop_assert_eq!(before, (p.cycles(), p.cycle_count(), p.spectrum()));
            prop_assert!(p.index_is_consistent());
        }
    }
}
