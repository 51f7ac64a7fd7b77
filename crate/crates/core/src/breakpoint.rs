//! Signed genomes, breakpoint graphs and the d₀ parsimony bound.
//!
//! Marker `+i` doubles to `(2i−1, 2i)` and `−i` to `(2i, 2i−1)`; the doubled
//! sequence is framed by `0` and `2m+1`. Pairs that sit across a comma in the
//! subject genome are joined by black edges, pairs across a comma in the
//! identity (`(2k, 2k+1)`) by gray edges. Every vertex has one edge of each
//! colour, so components are alternating cycles and
//! `d₀ = m + 1 − c(π)` bounds the reversal distance from below. Hurdle and
//! fortress corrections are not computed: d₀ is always a lower bound only.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::permcycle::DynamicPermutation;

/// Bundled human/mouse X chromosome comparison (11 markers).
pub const MOUSE_X: &str = include_str!("../data/mouse_x.txt");
/// Bundled D. repleta / D. melanogaster gene order (79 unsigned genes).
pub const REPLETA: &str = include_str!("../data/repleta.txt");

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignedGenome {
    markers: Vec<i32>,
}

impl SignedGenome {
    /// Validates that the magnitudes are a permutation of `1..=m`.
    pub fn new(markers: Vec<i32>) -> Result<Self> {
        let m = markers.len();
        let mut seen = vec![false; m + 1];
        for &x in &markers {
            let a = x.unsigned_abs() as usize;
            if a == 0 || a > m {
                return Err(Error::InvalidGenome(format!("marker {x} outside ±1..={m}")));
            }
            if std::mem::replace(&mut seen[a], true) {
                return Err(Error::InvalidGenome(format!("marker {a} appears twice")));
            }
        }
        Ok(SignedGenome { markers })
    }

    pub fn identity(m: usize) -> Self {
        SignedGenome {
            markers: (1..=m as i32).collect(),
        }
    }

    pub fn markers(&self) -> &[i32] {
        &self.markers
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.markers
            .iter()
            .enumerate()
            .all(|(k, &x)| x == k as i32 + 1)
    }

    /// The framed doubled sequence `0, …, 2m+1`.
    pub fn double_markers(&self) -> Vec<u32> {
        let m = self.markers.len() as u32;
        let mut out = Vec::with_capacity(2 * self.markers.len() + 2);
        out.push(0);
        for &x in &self.markers {
            let a = x.unsigned_abs();
            if x > 0 {
                out.extend([2 * a - 1, 2 * a]);
            } else {
                out.extend([2 * a, 2 * a - 1]);
            }
        }
        out.push(2 * m + 1);
        out
    }

    pub fn breakpoint_graph(&self) -> BreakpointGraph {
        BreakpointGraph::new(self)
    }

    /// c(π), counted without materialising the component lists.
    pub fn component_count(&self) -> usize {
        let mut scratch = Scratch::default();
        scratch.component_count(&self.markers)
    }

    /// `d₀(π) = m + 1 − c(π)`.
    pub fn d0_lower_bound(&self) -> usize {
        self.len() + 1 - self.component_count()
    }

    /// Reverses markers `lo..=hi` (1-based) and flips their signs.
    pub fn reverse_in_place(&mut self, lo: usize, hi: usize) -> Result<()> {
        let m = self.len();
        if lo == 0 || lo > hi || hi > m {
            return Err(Error::OutOfRange {
                position: if lo == 0 || lo > m { lo } else { hi },
                n: m,
            });
        }
        let segment = &mut self.markers[lo - 1..hi];
        segment.reverse();
        segment.iter_mut().for_each(|x| *x = -*x);
        Ok(())
    }

    pub fn apply_reversal(&self, lo: usize, hi: usize) -> Result<SignedGenome> {
        let mut g = self.clone();
        g.reverse_in_place(lo, hi)?;
        Ok(g)
    }
}

impl fmt::Display for SignedGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, x) in self.markers.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl FromStr for SignedGenome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let markers = s
            .split_whitespace()
            .map(|t| {
                t.parse::<i32>()
                    .map_err(|e| Error::InvalidGenome(format!("bad marker `{t}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        SignedGenome::new(markers)
    }
}

/// Parses a genome file: one genome per line, `#` starts a comment line,
/// blank lines are skipped.
pub fn parse_genomes(text: &str) -> Result<Vec<SignedGenome>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(k, l)| {
            l.parse().map_err(|e: Error| Error::Parse {
                line: k + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Renders a doubled sequence with commas between marker ends:
/// `0, 1 2, 14 13, …, 23`.
pub fn format_doubled(doubled: &[u32]) -> String {
    let mut out = String::new();
    for (k, v) in doubled.iter().enumerate() {
        if k > 0 {
            out.push_str(if k % 2 == 1 { ", " } else { " " });
        }
        out.push_str(&v.to_string());
    }
    out
}

/// Parses the comma form produced by [`format_doubled`].
pub fn parse_doubled(line: &str) -> Result<Vec<u32>> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u32>().map_err(|e| Error::Parse {
                line: 1,
                message: format!("bad vertex `{t}`: {e}"),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BreakpointGraph {
    doubled: Vec<u32>,
    black: Vec<u32>,
    components: Vec<Vec<u32>>,
}

impl BreakpointGraph {
    pub fn new(genome: &SignedGenome) -> Self {
        let doubled = genome.double_markers();
        let black = black_partners(&doubled);
        let mut seen = vec![false; doubled.len()];
        let mut components = Vec::new();
        // walk components in the order their first vertex appears in the
        // subject genome
        for &start in &doubled {
            if seen[start as usize] {
                continue;
            }
            let mut comp = Vec::new();
            let mut v = start;
            loop {
                seen[v as usize] = true;
                comp.push(v);
                let w = black[v as usize];
                seen[w as usize] = true;
                comp.push(w);
                v = w ^ 1;
                if v == start {
                    break;
                }
            }
            components.push(comp);
        }
        BreakpointGraph {
            doubled,
            black,
            components,
        }
    }

    pub fn doubled(&self) -> &[u32] {
        &self.doubled
    }

    /// Black-edge partner of vertex `v`.
    pub fn black_partner(&self, v: u32) -> u32 {
        self.black[v as usize]
    }

    /// Gray-edge partner of vertex `v`.
    pub fn gray_partner(&self, v: u32) -> u32 {
        v ^ 1
    }

    /// Each component as an alternating black/gray vertex cycle.
    pub fn components(&self) -> &[Vec<u32>] {
        &self.components
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }
}

fn black_partners(doubled: &[u32]) -> Vec<u32> {
    let mut black = vec![0; doubled.len()];
    for pair in doubled.chunks_exact(2) {
        black[pair[0] as usize] = pair[1];
        black[pair[1] as usize] = pair[0];
    }
    black
}

/// Reusable buffers for repeated component counts.
#[derive(Debug, Default, Clone)]
struct Scratch {
    black: Vec<u32>,
    seen: Vec<bool>,
}

impl Scratch {
    fn component_count(&mut self, markers: &[i32]) -> usize {
        let size = 2 * markers.len() + 2;
        self.black.resize(size, 0);
        self.seen.clear();
        self.seen.resize(size, false);
        let mut prev = 0u32;
        for &x in markers {
            let a = x.unsigned_abs();
            let (first, second) = if x > 0 {
                (2 * a - 1, 2 * a)
            } else {
                (2 * a, 2 * a - 1)
            };
            self.black[prev as usize] = first;
            self.black[first as usize] = prev;
            prev = second;
        }
        let last = size as u32 - 1;
        self.black[prev as usize] = last;
        self.black[last as usize] = prev;
        let mut count = 0;
        for start in 0..size {
            if self.seen[start] {
                continue;
            }
            count += 1;
            let mut v = start as u32;
            while !self.seen[v as usize] {
                self.seen[v as usize] = true;
                let w = self.black[v as usize];
                self.seen[w as usize] = true;
                v = w ^ 1;
            }
        }
        count
    }
}

/// Depth-first search for a sorting sequence made only of reversals that
/// raise c(π) by one, trying reversals in lexicographic `(lo, hi)` order.
/// Returns the reversals as 1-based `(lo, hi)` pairs; a sequence of length
/// d₀ proves the bound is attained.
pub fn sort_by_cycle_increasing_reversals(genome: &SignedGenome) -> Option<Vec<(usize, usize)>> {
    fn search(
        g: &mut SignedGenome,
        depth: usize,
        path: &mut Vec<(usize, usize)>,
        scratch: &mut Scratch,
    ) -> bool {
        if depth == 0 {
            return g.is_identity();
        }
        let m = g.len();
        let c = scratch.component_count(&g.markers);
        for lo in 1..=m {
            for hi in lo..=m {
                g.reverse_in_place(lo, hi).expect("in range");
                if scratch.component_count(&g.markers) == c + 1 {
                    path.push((lo, hi));
                    if search(g, depth - 1, path, scratch) {
                        return true;
                    }
                    path.pop();
                }
                g.reverse_in_place(lo, hi).expect("in range");
            }
        }
        false
    }
    let mut g = genome.clone();
    let mut path = Vec::new();
    let mut scratch = Scratch::default();
    search(&mut g, genome.d0_lower_bound(), &mut path, &mut scratch).then_some(path)
}

/// One step of the coupled reversal walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReversalStep {
    /// Step number, starting at 1.
    pub k: u64,
    /// Cayley distance of the coupled transposition walk after the step.
    pub transposition_distance: u64,
    /// d₀ of the genome after the step.
    pub d0: u64,
    /// Change in c(π); `None` for an idle draw.
    pub delta_c: Option<i8>,
}

/// Tallies of the component-count change over non-idle steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeltaCounts {
    pub merged: u64,
    pub unchanged: u64,
    pub split: u64,
}

impl DeltaCounts {
    pub fn total(&self) -> u64 {
        self.merged + self.unchanged + self.split
    }

    pub fn add(&mut self, other: &DeltaCounts) {
        self.merged += other.merged;
        self.unchanged += other.unchanged;
        self.split += other.split;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReversalWalkTrace {
    pub n_markers: usize,
    pub steps: Vec<ReversalStep>,
    pub counts: DeltaCounts,
}

/// Runs the reversal walk on `n_markers` markers coupled to the transposition
/// walk on `n = n_markers + 1` labels for `⌊horizon_c · n/2⌋` steps.
///
/// The `n` gaps between markers (both ends included) are numbered
/// `0..n_markers`; label `ℓ` names gap `ℓ − 1`. A draw `(i, j)` with `i ≠ j`
/// transposes `i` and `j` in the permutation and reverses the markers strictly
/// between gaps `min − 1` and `max − 1`, i.e. markers `min..=max − 1`.
pub fn coupled_reversal_walk<R: Rng + ?Sized>(
    n_markers: usize,
    horizon_c: f64,
    rng: &mut R,
) -> Result<ReversalWalkTrace> {
    if n_markers == 0 {
        return Err(Error::InvalidConfig(
            "reversal walk needs at least one marker".into(),
        ));
    }
    if !(horizon_c >= 0.0 && horizon_c.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "horizon c must be >= 0, got {horizon_c}"
        )));
    }
    let n = n_markers + 1;
    let total = (horizon_c * n as f64 / 2.0).floor() as u64;
    let mut perm = DynamicPermutation::identity(n)?;
    let mut genome = SignedGenome::identity(n_markers);
    let mut scratch = Scratch::default();
    let mut c = scratch.component_count(&genome.markers);
    let mut steps = Vec::with_capacity(total as usize);
    let mut counts = DeltaCounts::default();
    for k in 1..=total {
        let i = rng.random_range(1..=n);
        let j = rng.random_range(1..=n);
        perm.apply_transposition(i, j)?;
        let delta_c = if i == j {
            None
        } else {
            let (lo, hi) = (i.min(j), i.max(j));
            genome.reverse_in_place(lo, hi - 1)?;
            let next = scratch.component_count(&genome.markers);
            let delta = next as i64 - c as i64;
            debug_assert!(delta.abs() <= 1);
            c = next;
            match delta {
                -1 => counts.merged += 1,
                0 => counts.unchanged += 1,
                _ => counts.split += 1,
            }
            Some(delta as i8)
        };
        steps.push(ReversalStep {
            k,
            transposition_distance: perm.distance() as u64,
            d0: (n_markers + 1 - c) as u64,
            delta_c,
        });
    }
    Ok(ReversalWalkTrace {
        n_markers,
        steps,
        counts,
    })
}

/// Signs chosen for an unsigned gene order, with the d₀ they induce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignAssignment {
    pub genome: SignedGenome,
    pub d0: usize,
}

impl SignAssignment {
    pub fn signs(&self) -> Vec<i8> {
        self.genome
            .markers()
            .iter()
            .map(|x| x.signum() as i8)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub moves: u64,
    /// Geometric cooling factor applied after every move.
    pub cooling: f64,
    /// Starting temperature; `None` calibrates it on a pilot walk so that
    /// about half of the uphill moves would be accepted.
    pub initial_temperature: Option<f64>,
    pub pilot_moves: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            moves: 100_000,
            cooling: 0.9999,
            initial_temperature: None,
            pilot_moves: 2_000,
        }
    }
}

pub const DEFAULT_RESTARTS: u64 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealResult {
    pub best: SignAssignment,
    /// Best d₀ reached within each restart.
    pub restart_objectives: Vec<usize>,
    /// Running minimum of `restart_objectives`.
    pub best_so_far: Vec<usize>,
}

fn anneal_once<R: Rng + ?Sized>(
    order: &[u32],
    schedule: &AnnealSchedule,
    rng: &mut R,
) -> SignAssignment {
    let m = order.len();
    let mut markers: Vec<i32> = order
        .iter()
        .map(|&x| {
            if rng.random::<bool>() {
                x as i32
            } else {
                -(x as i32)
            }
        })
        .collect();
    let mut scratch = Scratch::default();
    let d0 = |markers: &[i32], s: &mut Scratch| m + 1 - s.component_count(markers);
    let mut current = d0(&markers, &mut scratch);

    let mut temperature = match schedule.initial_temperature {
        Some(t) => t,
        None => {
            let mut probe = markers.clone();
            let mut base = current;
            let (mut uphill, mut count) = (0.0, 0u64);
            for _ in 0..schedule.pilot_moves {
                let idx = rng.random_range(0..m);
                probe[idx] = -probe[idx];
                let next = d0(&probe, &mut scratch);
                if next > base {
                    uphill += (next - base) as f64;
                    count += 1;
                }
                base = next;
            }
            // exp(−Δ̄/T) = 1/2
            if count > 0 {
                uphill / count as f64 / std::f64::consts::LN_2
            } else {
                1.0
            }
        }
    };

    let mut best = (current, markers.clone());
    for _ in 0..schedule.moves {
        if best.0 == 0 {
            break;
        }
        let idx = rng.random_range(0..m);
        markers[idx] = -markers[idx];
        let next = d0(&markers, &mut scratch);
        let accept = next <= current
            || (temperature > 0.0
                && rng.random::<f64>() < (-((next - current) as f64) / temperature).exp());
        if accept {
            current = next;
            if current < best.0 {
                best = (current, markers.clone());
            }
        } else {
            markers[idx] = -markers[idx];
        }
        temperature *= schedule.cooling;
    }
    SignAssignment {
        genome: SignedGenome { markers: best.1 },
        d0: best.0,
    }
}

/// Simulated annealing over sign vectors for an unsigned gene order,
/// minimising d₀. Each move flips one sign; restarts run on independent
/// streams of `seed` and the best result wins.
pub fn anneal_signs(
    order: &[u32],
    schedule: &AnnealSchedule,
    restarts: u64,
    seed: u64,
) -> Result<AnnealResult> {
    let as_genome = SignedGenome::new(order.iter().map(|&x| x as i32).collect())?;
    if restarts == 0 {
        return Err(Error::InvalidConfig(
            "at least one restart is required".into(),
        ));
    }
    if as_genome.is_empty() {
        return Ok(AnnealResult {
            best: SignAssignment {
                genome: as_genome,
                d0: 0,
            },
            restart_objectives: vec![0; restarts as usize],
            best_so_far: vec![0; restarts as usize],
        });
    }
    let results = par::replicate(seed, restarts, |_, rng| anneal_once(order, schedule, rng));
    let restart_objectives: Vec<usize> = results.iter().map(|r| r.d0).collect();
    let best_so_far = restart_objectives
        .iter()
        .scan(usize::MAX, |acc, &d| {
            *acc = (*acc).min(d);
            Some(*acc)
        })
        .collect();
    let best = results
        .into_iter()
        .min_by_key(|r| r.d0)
        .expect("at least one restart");
    Ok(AnnealResult {
        best,
        restart_objectives,
        best_so_far,
    })
}

/// Reads an unsigned order (magnitudes of the first genome in `text`).
pub fn parse_unsigned_order(text: &str) -> Result<Vec<u32>> {
    let genomes = parse_genomes(text)?;
    let first = genomes
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidGenome("no genome in input".into()))?;
    Ok(first.markers().iter().map(|x| x.unsigned_abs()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::replicate_rng;

    fn mouse() -> SignedGenome {
        parse_genomes(MOUSE_X).unwrap().remove(0)
    }

    #[test]
    fn doubling() {
        let g = mouse();
        let d = g.double_markers();
        // 6 sits third, -7 second
        assert_eq!(&d[5..7], &[11, 12]);
        assert_eq!(&d[3..5], &[14, 13]);
        let id = SignedGenome::identity(4).double_markers();
        assert_eq!(id, (0..=9).collect::<Vec<u32>>());
    }

    #[test]
    fn mouse_line_round_trip() {
        let line = "0, 1 2, 14 13, 11 12, 20 19, 17 18, 16 15, 3 4, 22 21, 6 5, 9 10, 7 8, 23";
        assert_eq!(format_doubled(&mouse().double_markers()), line);
        assert_eq!(parse_doubled(line).unwrap(), mouse().double_markers());
    }

    #[test]
    fn mouse_components() {
        let graph = mouse().breakpoint_graph();
        assert_eq!(graph.component_count(), 5);
        assert_eq!(mouse().component_count(), 5);
        assert_eq!(mouse().d0_lower_bound(), 7);
        let mut sorted: Vec<Vec<u32>> = graph
            .components()
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort();
                c
            })
            .collect();
        sorted.sort();
        let mut expected = vec![
            vec![0, 1],
            vec![2, 3, 14, 15],
            vec![4, 5, 8, 9, 22, 23],
            vec![16, 17, 18, 19],
            vec![6, 7, 10, 11, 12, 13, 20, 21],
        ];
        expected.iter_mut().for_each(|c| c.sort());
        expected.sort();
        assert_eq!(sorted, expected);
        for v in 0..24 {
            assert_eq!(graph.black_partner(graph.black_partner(v)), v);
            assert_eq!(graph.gray_partner(graph.gray_partner(v)), v);
        }
    }

    #[test]
    fn small_genomes() {
        assert_eq!(SignedGenome::identity(6).component_count(), 7);
        assert_eq!(SignedGenome::identity(6).d0_lower_bound(), 0);
        let single: SignedGenome = "-1".parse().unwrap();
        assert_eq!(single.component_count(), 1);
        let g: SignedGenome = "-2 -1 3".parse().unwrap();
        assert_eq!(g.d0_lower_bound(), 1);
        assert_eq!(SignedGenome::identity(3).apply_reversal(1, 2).unwrap(), g);
    }

    #[test]
    fn reversal_is_an_involution() {
        let g = mouse();
        assert_eq!(
            g.apply_reversal(3, 9)
                .unwrap()
                .apply_reversal(3, 9)
                .unwrap(),
            g
        );
        assert!(g.apply_reversal(0, 2).is_err());
        assert!(g.apply_reversal(4, 3).is_err());
        assert!(g.apply_reversal(2, 12).is_err());
    }

    #[test]
    fn invalid_genomes() {
        assert!("1 1".parse::<SignedGenome>().is_err());
        assert!("1 3".parse::<SignedGenome>().is_err());
        assert!("1 0".parse::<SignedGenome>().is_err());
        assert!("1 x".parse::<SignedGenome>().is_err());
        assert!(parse_genomes("# c\n\n1 2\n2 1\n").unwrap().len() == 2);
    }

    #[test]
    fn mouse_sorts_in_seven_moves() {
        let moves = sort_by_cycle_increasing_reversals(&mouse()).expect("sorting found");
        assert_eq!(moves.len(), 7);
        let mut g = mouse();
        for (lo, hi) in moves {
            g.reverse_in_place(lo, hi).unwrap();
        }
        assert!(g.is_identity());
    }

    #[test]
    fn single_reversals_change_components_by_at_most_one() {
        let mut rng = replicate_rng(17, 0);
        let mut g = SignedGenome::identity(30);
        let mut c = g.component_count();
        for k in 1..=400u64 {
            let lo = rng.random_range(1..=30);
            let hi = rng.random_range(lo..=30);
            g.reverse_in_place(lo, hi).unwrap();
            let next = g.component_count();
            assert!((next as i64 - c as i64).abs() <= 1);
            assert!(g.d0_lower_bound() as u64 <= k);
            c = next;
        }
    }

    #[test]
    fn reversal_walk_counts_are_exhaustive() {
        let trace = coupled_reversal_walk(60, 1.5, &mut replicate_rng(2, 0)).unwrap();
        let nontrivial = trace.steps.iter().filter(|s| s.delta_c.is_some()).count() as u64;
        assert_eq!(trace.counts.total(), nontrivial);
        assert_eq!(trace.steps.len(), (1.5f64 * 61.0 / 2.0).floor() as usize);
    }

    #[test]
    fn trivial_annealing() {
        let r = anneal_signs(&[1, 2, 3, 4], &AnnealSchedule::default(), 3, 1).unwrap();
        assert_eq!(r.best.d0, 0);
        assert_eq!(r.best.signs(), vec![1, 1, 1, 1]);
        let r = anneal_signs(&[1], &AnnealSchedule::default(), 2, 1).unwrap();
        assert_eq!((r.best.d0, r.best.signs()), (0, vec![1]));
        assert!(anneal_signs(&[1, 1], &AnnealSchedule::default(), 2, 1).is_err());
    }

    #[test]
    fn best_so_far_never_increases() {
        let order = parse_unsigned_order(MOUSE_X).unwrap();
        let schedule = AnnealSchedule {
            moves: 2_000,
            ..Default::default()
        };
        let r = anneal_signs(&order, &schedule, 8, 5).unwrap();
        assert!(r.best_so_far.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.best.d0, *r.best_so_far.last().unwrap());
        assert_eq!(r.best.genome.d0_lower_bound(), r.best.d0);
    }
}
