//! Discrete-time gap urn chains and their continuous-time embedding.
//!
//! One step draws a gap uniformly among the `K_n` gaps present and adds the
//! replacement row of its color. The continuous-time process is obtained
//! from a finished discrete chain by attaching independent exponential
//! holding times with rate `K_n` (one unit-rate clock per gap).

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::btree::BTree;
use crate::composition::{CompositionVector, Coordinates};
use crate::error::{Error, Result};
use crate::rules::{check_tenable, ReplacementRule};

/// The generator behind every simulated stream.
pub type StreamRng = ChaCha8Rng;

/// Generator for trajectory `stream` under `master_seed`.
pub fn stream_rng(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

// holding times use their own stream family so discrete chains stay reusable
const HOLDING_STREAM_BIT: u64 = 1 << 63;

/// A uniformly drawn gap: its color (0-based) and its rank among the gaps of
/// that color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapDraw {
    pub color: usize,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UrnState {
    rule: Arc<ReplacementRule>,
    counts: Vec<u64>,
    n: u64,
    total: u64,
}

impl UrnState {
    pub fn new(rule: Arc<ReplacementRule>, initial: &CompositionVector) -> Result<Self> {
        if !check_tenable(&rule, initial)? {
            return Err(Error::InvalidInput(format!(
                "initial composition {:?} is not tenable",
                initial.counts
            )));
        }
        Ok(Self {
            counts: initial.counts.clone(),
            total: initial.total(),
            n: 0,
            rule,
        })
    }

    pub fn rule(&self) -> &ReplacementRule {
        &self.rule
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn composition(&self) -> CompositionVector {
        CompositionVector::gaps(self.counts.clone())
    }

    /// Number of steps taken.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Total number of gaps `K_n`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Draws a gap uniformly; color `k` has probability `G^(k) / K_n`.
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> GapDraw {
        let mut u = rng.random_range(0..self.total);
        for (color, &c) in self.counts.iter().enumerate() {
            if u < c {
                return GapDraw { color, offset: u };
            }
            u -= c;
        }
        unreachable!("gap total out of sync with counts")
    }

    /// Adds the replacement row of `color`.
    pub fn apply(&mut self, color: usize) -> Result<()> {
        for &(j, delta) in self.rule.moves(color) {
            self.counts[j] = self.counts[j].checked_add_signed(delta).ok_or_else(|| {
                Error::Invariant(format!(
                    "color {} went negative at step {}",
                    j + 1,
                    self.n + 1
                ))
            })?;
        }
        self.n += 1;
        self.total += self.rule.balance as u64;
        Ok(())
    }

    pub fn step<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<GapDraw> {
        let d = self.draw(rng);
        self.apply(d.color)?;
        Ok(d)
    }
}

/// Which step indices a trajectory keeps. The final step is always kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordSchedule {
    /// Every multiple of the stride.
    Every(u64),
    /// About `per_decade` log-spaced indices per decade of `n`.
    Geometric(u32),
    /// Geometric indices together with the listed ones.
    GeometricWith(u32, Vec<u64>),
}

impl RecordSchedule {
    /// Smallest recorded index strictly greater than `n`.
    pub fn next_after(&self, n: u64) -> u64 {
        match self {
            RecordSchedule::Every(stride) => {
                let stride = (*stride).max(1);
                (n / stride + 1) * stride
            }
            RecordSchedule::Geometric(per_decade) => geometric_after(*per_decade, n),
            RecordSchedule::GeometricWith(per_decade, extra) => {
                let g = geometric_after(*per_decade, n);
                extra.iter().copied().filter(|&x| x > n).fold(g, u64::min)
            }
        }
    }
}

fn geometric_after(per_decade: u32, n: u64) -> u64 {
    let d = per_decade.max(1) as f64;
    let mut i = (d * ((n + 1) as f64).log10()).floor() - 1.0;
    loop {
        let cand = 10f64.powf(i / d).ceil() as u64;
        if cand > n {
            return cand;
        }
        i += 1.0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub n: u64,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    #[serde(skip)]
    pub rule: Arc<ReplacementRule>,
    pub initial: CompositionVector,
    pub seed: u64,
    pub stream: u64,
    pub schedule: RecordSchedule,
    pub records: Vec<Record>,
    /// `tau_(n)` at each recorded `n`, once embedded in continuous time.
    pub jump_times: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records.last().expect("a trajectory always holds n = 0")
    }

    pub fn final_n(&self) -> u64 {
        self.last().n
    }

    /// Gap total at step `n`.
    pub fn total_at(&self, n: u64) -> u64 {
        self.initial.total() + n * self.rule.balance as u64
    }

    pub fn coords(&self) -> Coordinates {
        self.initial.coords
    }
}

/// Runs the urn chain for `n_steps` from `initial` on stream
/// `(seed, stream)`.
pub fn run_trajectory(
    rule: &Arc<ReplacementRule>,
    initial: &CompositionVector,
    n_steps: u64,
    seed: u64,
    stream: u64,
    schedule: RecordSchedule,
) -> Result<Trajectory> {
    let mut state = UrnState::new(Arc::clone(rule), initial)?;
    let mut rng = stream_rng(seed, stream);
    let mut records = vec![Record {
        n: 0,
        counts: initial.counts.clone(),
    }];
    let mut next = schedule.next_after(0);
    while state.n() < n_steps {
        state.step(&mut rng)?;
        if state.n() == next || state.n() == n_steps {
            records.push(Record {
                n: state.n(),
                counts: state.counts().to_vec(),
            });
            next = schedule.next_after(state.n());
        }
    }
    Ok(Trajectory {
        rule: Arc::clone(rule),
        initial: initial.clone(),
        seed,
        stream,
        schedule,
        records,
        jump_times: None,
    })
}

/// Grows a B-tree with uniform random 64-bit keys (duplicates redrawn) and
/// records its gap composition. The tree starts as one fringe node of type 1
/// so that its composition is `P e_1`.
pub fn run_tree_trajectory(
    rule: &Arc<ReplacementRule>,
    n_steps: u64,
    seed: u64,
    stream: u64,
    schedule: RecordSchedule,
) -> Result<Trajectory> {
    let mut rng = stream_rng(seed, stream);
    let mut tree = BTree::new(rule.m, rule.algorithm)?;
    while tree.len() < rule.m - 1 {
        tree.insert_key(rng.random::<u64>());
    }
    let initial = tree.gap_composition()?;
    let mut records = vec![Record {
        n: 0,
        counts: initial.counts.clone(),
    }];
    let mut next = schedule.next_after(0);
    let mut n = 0;
    while n < n_steps {
        if tree.insert_key(rng.random::<u64>()) {
            n += 1;
            if n == next || n == n_steps {
                records.push(Record {
                    n,
                    counts: tree.gap_composition()?.counts,
                });
                next = schedule.next_after(n);
            }
        }
    }
    Ok(Trajectory {
        rule: Arc::clone(rule),
        initial,
        seed,
        stream,
        schedule,
        records,
        jump_times: None,
    })
}

/// A B-tree driven by the urn's gap draws: each draw `(color, offset)`
/// selects the gap of that rank among the gaps of that color, and a key
/// strictly inside that gap is inserted by ordinary search.
#[derive(Debug, Clone)]
pub struct CoupledTree {
    tree: BTree<u128>,
}

impl CoupledTree {
    /// A tree holding `m-1` keys in a single fringe node.
    pub fn new(rule: &ReplacementRule) -> Result<Self> {
        let mut tree = BTree::new(rule.m, rule.algorithm)?;
        let spacing = u128::MAX / rule.m as u128;
        for i in 1..rule.m as u128 {
            tree.insert_key(i * spacing);
        }
        Ok(Self { tree })
    }

    pub fn tree(&self) -> &BTree<u128> {
        &self.tree
    }

    pub fn insert_at(&mut self, draw: GapDraw) -> Result<()> {
        let (lo, hi) = self
            .tree
            .gap_bounds(draw.color + 1, draw.offset)
            .ok_or_else(|| {
                Error::Invariant(format!(
                    "no gap of rank {} among type {} gaps",
                    draw.offset,
                    draw.color + 1
                ))
            })?;
        let lo = lo.copied().unwrap_or(0);
        let hi = hi.copied().unwrap_or(u128::MAX);
        if hi - lo < 2 {
            return Err(Error::Resource("key space exhausted inside a gap".into()));
        }
        let key = lo + (hi - lo) / 2;
        if !self.tree.insert_key(key) {
            return Err(Error::Invariant("midpoint key already present".into()));
        }
        Ok(())
    }
}

/// Runs the urn and a coupled tree on one draw stream and returns both
/// composition sequences (index `t` = after `t` insertions).
pub fn couple_with_tree(
    rule: &Arc<ReplacementRule>,
    n_steps: u64,
    seed: u64,
    stream: u64,
) -> Result<(Vec<CompositionVector>, Vec<CompositionVector>)> {
    let mut state = UrnState::new(Arc::clone(rule), &rule.btree_start())?;
    let mut tree = CoupledTree::new(rule)?;
    let mut rng = stream_rng(seed, stream);
    let mut urn_seq = vec![state.composition()];
    let mut tree_seq = vec![tree.tree().gap_composition()?];
    for _ in 0..n_steps {
        let draw = state.step(&mut rng)?;
        tree.insert_at(draw)?;
        urn_seq.push(state.composition());
        tree_seq.push(tree.tree().gap_composition()?);
    }
    Ok((urn_seq, tree_seq))
}

/// Attaches continuous-time jump instants: the holding time after step `n`
/// is exponential with rate `K_n`. The discrete records are left untouched.
pub fn embed_continuous(trajectory: &Trajectory, seed: u64) -> Trajectory {
    let mut rng = stream_rng(seed, trajectory.stream | HOLDING_STREAM_BIT);
    let mut out = trajectory.clone();
    let mut times = Vec::with_capacity(trajectory.records.len());
    let mut tau = 0.0f64;
    let mut n = 0u64;
    for rec in &trajectory.records {
        while n < rec.n {
            let hold: f64 = rng.sample(Exp1);
            tau += hold / trajectory.total_at(n) as f64;
            n += 1;
        }
        times.push(tau);
    }
    out.jump_times = Some(times);
    out
}

/// `n exp(-tau_(n))` at the final recorded step; converges to the
/// Gamma(|PV|) growth factor.
pub fn estimate_xi(trajectory: &Trajectory) -> Result<f64> {
    let times = trajectory
        .jump_times
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("trajectory has no jump times".into()))?;
    let n = trajectory.final_n();
    if n < 1000 {
        return Err(Error::InvalidInput(format!(
            "final step {n} is too short for the growth factor (need >= 1000)"
        )));
    }
    let tau = *times.last().expect("jump times align with records");
    Ok(n as f64 * (-tau).exp())
}
