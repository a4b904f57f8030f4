//! The ATV statistic over grid boxes: box enumeration and ranking, the pure
//! random search, and an exhaustive oracle for small lattices.

use std::cell::RefCell;
use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::empirical::{GridBox, GridField};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Largest number of candidate families [`atv_exact`] will examine.
pub const EXACT_GUARD: u128 = 10_000_000;
/// Largest number of grid boxes [`BoxIndex`] will tabulate.
const MAX_BOXES: usize = 50_000_000;
/// Draws per random sub-stream in the pure random search.
const CHUNK: usize = 1024;

/// Parameters of the pure random search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtvConfig {
    /// Number of disjoint boxes `L`.
    #[serde(rename = "L")]
    pub boxes: usize,
    /// Shortlist size `m`.
    #[serde(rename = "m")]
    pub shortlist: usize,
    /// Random draws `K`.
    #[serde(rename = "K")]
    pub draws: usize,
    pub seed: u64,
}

impl AtvConfig {
    pub fn new(boxes: usize, shortlist: usize, draws: usize, seed: u64) -> Result<Self> {
        let config = Self {
            boxes,
            shortlist,
            draws,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    /// `L = L_n`, `m = n`, `K = 10⁴`.
    pub fn for_sample_size(n: usize, seed: u64) -> Self {
        let boxes = super::box_count_rule(n);
        Self {
            boxes,
            shortlist: n.max(boxes),
            draws: 10_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.boxes == 0 {
            return Err(Error::Config(
                "the number of boxes L must be at least 1".into(),
            ));
        }
        if self.boxes > self.shortlist {
            return Err(Error::Config(format!(
                "L = {} exceeds the shortlist size m = {}",
                self.boxes, self.shortlist
            )));
        }
        if self.draws == 0 {
            return Err(Error::Config(
                "the number of draws K must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A grid box with its signed measure `G(B)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredBox {
    #[serde(rename = "box")]
    pub bx: GridBox,
    pub measure: f64,
}

impl ScoredBox {
    pub fn score(&self) -> f64 {
        self.measure.abs()
    }
}

/// Pairwise-disjoint boxes and the sum of their absolute measures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxFamily {
    pub boxes: Vec<GridBox>,
    pub measures: Vec<f64>,
    pub score: f64,
}

impl BoxFamily {
    fn empty() -> Self {
        Self {
            boxes: Vec::new(),
            measures: Vec::new(),
            score: 0.0,
        }
    }

    pub fn is_pairwise_disjoint(&self) -> bool {
        self.boxes
            .iter()
            .enumerate()
            .all(|(i, a)| self.boxes[i + 1..].iter().all(|b| a.is_disjoint(b)))
    }
}

/// Every grid box of a `(p+1)^d` lattice, enumerated in lexicographic order
/// of `(lo, hi)`, with the flat lattice offsets of its `2^d` corners.
#[derive(Debug, Clone)]
pub struct BoxIndex {
    p: usize,
    d: usize,
    count: usize,
    /// `lo` then `hi`, `2d` entries per box.
    bounds: Vec<u16>,
    /// `2^d` flat corner offsets per box; corner `mask` takes `lo` on the
    /// axes whose bit is set.
    corners: Vec<u32>,
    signs: Vec<f64>,
}

impl BoxIndex {
    pub fn new(p: usize, d: usize) -> Result<Self> {
        if p == 0 || d == 0 {
            return Err(Error::Config(format!("no grid boxes for p={p}, d={d}")));
        }
        let per_axis = p * (p + 1) / 2;
        let count = (per_axis as u128).pow(d as u32);
        if count > MAX_BOXES as u128 || p > u16::MAX as usize {
            return Err(Error::ResourceGuard {
                candidates: count,
                limit: MAX_BOXES as u128,
            });
        }
        let count = count as usize;
        let side = p + 1;
        let n_corners = 1usize << d;
        let mut bounds = Vec::with_capacity(count * 2 * d);
        let mut corners = Vec::with_capacity(count * n_corners);
        if d == 2 {
            for a0 in 0..p {
                for a1 in 0..p {
                    for b0 in a0 + 1..=p {
                        for b1 in a1 + 1..=p {
                            bounds.extend([a0, a1, b0, b1].map(|x| x as u16));
                            corners.extend(
                                [
                                    b0 * side + b1,
                                    b0 * side + a1,
                                    a0 * side + b1,
                                    a0 * side + a1,
                                ]
                                .map(|x| x as u32),
                            );
                        }
                    }
                }
            }
        } else {
            let mut lo = vec![0usize; d];
            let mut hi = vec![0usize; d];
            loop {
                // Every hi with hi_j > lo_j, in lexicographic order.
                for j in 0..d {
                    hi[j] = lo[j] + 1;
                }
                loop {
                    bounds.extend(lo.iter().chain(&hi).map(|&x| x as u16));
                    for mask in 0..n_corners {
                        let mut flat = 0;
                        for j in 0..d {
                            let c = if mask >> (d - 1 - j) & 1 == 1 {
                                lo[j]
                            } else {
                                hi[j]
                            };
                            flat = flat * side + c;
                        }
                        corners.push(flat as u32);
                    }
                    if !advance(&mut hi, |j| lo[j] + 1, p) {
                        break;
                    }
                }
                if !advance(&mut lo, |_| 0, p - 1) {
                    break;
                }
            }
        }
        debug_assert_eq!(bounds.len(), count * 2 * d);
        let signs = (0..n_corners)
            .map(|mask: usize| {
                if mask.count_ones().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        Ok(Self {
            p,
            d,
            count,
            bounds,
            corners,
            signs,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn grid_box(&self, k: usize) -> GridBox {
        let b = &self.bounds[k * 2 * self.d..(k + 1) * 2 * self.d];
        GridBox::new(
            b[..self.d].iter().map(|&x| x as usize).collect(),
            b[self.d..].iter().map(|&x| x as usize).collect(),
        )
        .expect("enumerated boxes are proper")
    }

    fn check_field(&self, field: &GridField) -> Result<()> {
        if field.p() != self.p || field.d() != self.d {
            return Err(Error::Config(format!(
                "box index built for p={}, d={} but the field has p={}, d={}",
                self.p,
                self.d,
                field.p(),
                field.d()
            )));
        }
        Ok(())
    }

    /// Signed measure of every box, in enumeration order.
    pub fn measures(&self, field: &GridField) -> Result<Vec<f64>> {
        self.check_field(field)?;
        let v = field.values();
        Ok(if self.d == 2 {
            self.corners
                .chunks_exact(4)
                .map(|c| v[c[0] as usize] - v[c[1] as usize] - v[c[2] as usize] + v[c[3] as usize])
                .collect()
        } else {
            self.corners
                .chunks_exact(self.signs.len())
                .map(|c| {
                    c.iter()
                        .zip(&self.signs)
                        .map(|(&k, s)| s * v[k as usize])
                        .sum()
                })
                .collect()
        })
    }

    fn disjoint(&self, a: usize, b: usize) -> bool {
        let d = self.d;
        let (ba, bb) = (
            &self.bounds[a * 2 * d..(a + 1) * 2 * d],
            &self.bounds[b * 2 * d..(b + 1) * 2 * d],
        );
        (0..d).any(|j| ba[j].max(bb[j]) >= ba[d + j].min(bb[d + j]))
    }

    /// The `m` boxes of largest `|G|`, ranked in descending order; ties go to
    /// the earlier box in enumeration order.
    pub fn rank(&self, field: &GridField, m: usize) -> Result<Shortlist> {
        let measures = self.measures(field)?;
        let m = m.min(self.count);
        let cmp = |a: &usize, b: &usize| {
            measures[*b]
                .abs()
                .total_cmp(&measures[*a].abs())
                .then(a.cmp(b))
        };
        let mut order: Vec<usize> = (0..self.count).collect();
        if m > 0 && m < self.count {
            order.select_nth_unstable_by(m - 1, cmp);
            order.truncate(m);
        }
        order.sort_unstable_by(cmp);
        let d = self.d;
        let mut bounds = Vec::with_capacity(m * 2 * d);
        for &k in &order {
            bounds.extend_from_slice(&self.bounds[k * 2 * d..(k + 1) * 2 * d]);
        }
        Ok(Shortlist {
            d,
            measures: order.iter().map(|&k| measures[k]).collect(),
            bounds,
            ids: order,
        })
    }

    /// Greedy family: repeatedly the largest `|G|` box disjoint from those
    /// already chosen.
    pub fn greedy(&self, field: &GridField, boxes: usize) -> BoxFamily {
        let measures = match self.measures(field) {
            Ok(m) => m,
            Err(_) => return BoxFamily::empty(),
        };
        let scores: Vec<f64> = measures.iter().map(|m| m.abs()).collect();
        let mut chosen: Vec<usize> = Vec::with_capacity(boxes);
        for _ in 0..boxes {
            let mut best: Option<usize> = None;
            let mut top = f64::NEG_INFINITY;
            for (k, &score) in scores.iter().enumerate() {
                if score > top && chosen.iter().all(|&c| self.disjoint(c, k)) {
                    best = Some(k);
                    top = score;
                }
            }
            match best {
                Some(k) => chosen.push(k),
                None => break,
            }
        }
        self.family(&chosen, &measures)
    }

    /// Exhaustive maximum of `Σ |G(B_k)|` over families of at most `L`
    /// pairwise-disjoint boxes.
    pub fn exact(&self, field: &GridField, boxes: usize) -> Result<BoxFamily> {
        let candidates = binomial(self.count as u128, boxes.min(self.count) as u128);
        if candidates > EXACT_GUARD {
            return Err(Error::ResourceGuard {
                candidates,
                limit: EXACT_GUARD,
            });
        }
        let measures = self.measures(field)?;
        let mut search = ExactSearch {
            index: self,
            scores: measures.iter().map(|m| m.abs()).collect(),
            limit: boxes,
            current: Vec::with_capacity(boxes),
            best: Vec::new(),
            best_score: -1.0,
        };
        search.descend(0, 0.0);
        let best = search.best;
        Ok(self.family(&best, &measures))
    }

    fn family(&self, ids: &[usize], measures: &[f64]) -> BoxFamily {
        let mut family = BoxFamily::empty();
        for &k in ids {
            family.boxes.push(self.grid_box(k));
            family.measures.push(measures[k]);
            family.score += measures[k].abs();
        }
        family
    }
}

/// Odometer step over `x_j ∈ start(j)..=end`, last axis fastest.
fn advance(x: &mut [usize], start: impl Fn(usize) -> usize, end: usize) -> bool {
    for j in (0..x.len()).rev() {
        if x[j] < end {
            x[j] += 1;
            for (k, slot) in x.iter_mut().enumerate().skip(j + 1) {
                *slot = start(k);
            }
            return true;
        }
    }
    false
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

struct ExactSearch<'a> {
    index: &'a BoxIndex,
    scores: Vec<f64>,
    limit: usize,
    current: Vec<usize>,
    best: Vec<usize>,
    best_score: f64,
}

impl ExactSearch<'_> {
    fn descend(&mut self, start: usize, score: f64) {
        if score > self.best_score {
            self.best_score = score;
            self.best.clone_from(&self.current);
        }
        if self.current.len() == self.limit {
            return;
        }
        for k in start..self.scores.len() {
            if self.current.iter().all(|&c| self.index.disjoint(c, k)) {
                self.current.push(k);
                self.descend(k + 1, score + self.scores[k]);
                self.current.pop();
            }
        }
    }
}

/// The ranked boxes the random search draws from.
#[derive(Debug, Clone)]
pub struct Shortlist {
    d: usize,
    bounds: Vec<u16>,
    measures: Vec<f64>,
    ids: Vec<usize>,
}

impl Shortlist {
    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    /// Positions of the entries in the enumeration order of [`BoxIndex`].
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn entry(&self, i: usize) -> ScoredBox {
        let b = &self.bounds[i * 2 * self.d..(i + 1) * 2 * self.d];
        ScoredBox {
            bx: GridBox::new(
                b[..self.d].iter().map(|&x| x as usize).collect(),
                b[self.d..].iter().map(|&x| x as usize).collect(),
            )
            .expect("enumerated boxes are proper"),
            measure: self.measures[i],
        }
    }

    pub fn entries(&self) -> Vec<ScoredBox> {
        (0..self.len()).map(|i| self.entry(i)).collect()
    }

    fn disjoint(&self, a: usize, b: usize) -> bool {
        let d = self.d;
        let (ba, bb) = (
            &self.bounds[a * 2 * d..(a + 1) * 2 * d],
            &self.bounds[b * 2 * d..(b + 1) * 2 * d],
        );
        (0..d).any(|j| ba[j].max(bb[j]) >= ba[d + j].min(bb[d + j]))
    }

    /// Pure random search: `K` independent draws of `L` distinct entries;
    /// a draw scores `Σ_j |G(A_j)|` over the entries disjoint from every
    /// entry accepted before them. Returns the best draw, the earliest one on
    /// ties.
    ///
    /// Draw `k` comes from sub-stream `k / 1024` of the seed, so a run with
    /// more draws extends, and never lowers, a run with fewer.
    pub fn prs(&self, config: &AtvConfig) -> Result<BoxFamily> {
        config.validate()?;
        let (l, m) = (config.boxes, self.len());
        if l > m {
            return Err(Error::Config(format!(
                "L = {l} exceeds the {m} boxes available for the search"
            )));
        }
        let scores: Vec<f64> = self.measures.iter().map(|m| m.abs()).collect();
        let bounds = &self.bounds;
        let disjoint = |a: usize, b: usize| {
            if self.d == 2 {
                let (x, y) = (&bounds[4 * a..4 * a + 4], &bounds[4 * b..4 * b + 4]);
                x[0].max(y[0]) >= x[2].min(y[2]) || x[1].max(y[1]) >= x[3].min(y[3])
            } else {
                self.disjoint(a, b)
            }
        };
        let mut picked = Vec::with_capacity(l);
        let mut accepted = Vec::with_capacity(l);
        let mut best: Vec<usize> = Vec::new();
        let mut best_score = f64::NEG_INFINITY;
        let chunks = config.draws.div_ceil(CHUNK);
        for chunk in 0..chunks {
            let mut rng = stream(config.seed, chunk as u64, Purpose::Chunk);
            let draws = CHUNK.min(config.draws - chunk * CHUNK);
            for _ in 0..draws {
                picked.clear();
                while picked.len() < l {
                    let i = rng.random_range(0..m);
                    if !picked.contains(&i) {
                        picked.push(i);
                    }
                }
                accepted.clear();
                let mut score = 0.0;
                for &i in &picked {
                    if accepted.iter().all(|&a| disjoint(a, i)) {
                        accepted.push(i);
                        score += scores[i];
                    }
                }
                if score > best_score {
                    best_score = score;
                    best.clone_from(&accepted);
                }
            }
        }
        let mut family = BoxFamily::empty();
        for &i in &best {
            let entry = self.entry(i);
            family.score += entry.score();
            family.boxes.push(entry.bx);
            family.measures.push(entry.measure);
        }
        Ok(family)
    }
}

thread_local! {
    static LAST_INDEX: RefCell<Option<Rc<BoxIndex>>> = const { RefCell::new(None) };
}

/// The index for a `p`-lattice in `d` dimensions, reusing the one built last
/// on this thread when the shape matches.
pub(crate) fn shared_index(p: usize, d: usize) -> Result<Rc<BoxIndex>> {
    LAST_INDEX.with(|slot| {
        let mut slot = slot.borrow_mut();
        if let Some(index) = slot.as_ref().filter(|i| i.p == p && i.d == d) {
            return Ok(Rc::clone(index));
        }
        let index = Rc::new(BoxIndex::new(p, d)?);
        *slot = Some(Rc::clone(&index));
        Ok(index)
    })
}

/// All grid boxes ranked by `|G|`, keeping the top `m`.
pub fn enumerate_and_rank_boxes(field: &GridField, m: usize) -> Result<Vec<ScoredBox>> {
    Ok(shared_index(field.p(), field.d())?
        .rank(field, m)?
        .entries())
}

/// The ATV statistic by pure random search over the top-`m` boxes.
pub fn atv_prs(field: &GridField, config: &AtvConfig) -> Result<BoxFamily> {
    shared_index(field.p(), field.d())?
        .rank(field, config.shortlist)?
        .prs(config)
}

/// The ATV statistic by exhaustive search; refuses instances with more than
/// [`EXACT_GUARD`] candidate families.
pub fn atv_exact(field: &GridField, boxes: usize) -> Result<BoxFamily> {
    if boxes == 0 {
        return Err(Error::Config(
            "the number of boxes L must be at least 1".into(),
        ));
    }
    shared_index(field.p(), field.d())?.exact(field, boxes)
}
