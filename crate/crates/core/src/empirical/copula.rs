use super::{PseudoObservations, Sample};

/// The empirical copula `C_n(u) = H_n(F⁻_{n,1}(u₁), …, F⁻_{n,d}(u_d))`.
///
/// With `F⁻(u) = inf{x : F_n(x) ≥ u}` the quantile of order `u` is the
/// `⌈nu⌉`-th order statistic, so `C_n(u)` is the fraction of rows whose rank
/// in every column `j` is at most `⌈n u_j⌉`.
#[derive(Debug, Clone)]
pub struct EmpiricalCopula {
    pseudo: PseudoObservations,
}

impl EmpiricalCopula {
    pub fn new(pseudo: PseudoObservations) -> Self {
        Self { pseudo }
    }

    pub fn from_sample(sample: &Sample) -> Self {
        Self::new(PseudoObservations::from_sample(sample))
    }

    pub fn pseudo(&self) -> &PseudoObservations {
        &self.pseudo
    }

    pub fn n(&self) -> usize {
        self.pseudo.n()
    }

    pub fn d(&self) -> usize {
        self.pseudo.d()
    }

    /// `C_n(u)` at an arbitrary point of `[0, 1]^d`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        let n = self.n();
        let thresholds: Vec<u32> = u.iter().map(|&x| rank_threshold(n, x)).collect();
        self.count_below(&thresholds) as f64 / n as f64
    }

    /// Number of rows whose ranks are all ≤ the given thresholds.
    pub fn count_below(&self, thresholds: &[u32]) -> usize {
        (0..self.n())
            .filter(|&i| {
                self.pseudo
                    .ranks_of(i)
                    .iter()
                    .zip(thresholds)
                    .all(|(r, t)| r <= t)
            })
            .count()
    }

    /// [`count_below`](Self::count_below) for many threshold vectors at once
    /// (`queries` is row-major with `d` entries per query). Bivariate queries
    /// use an offline sweep with a Fenwick tree, O((n + m) log n).
    pub fn count_below_many(&self, queries: &[u32]) -> Vec<usize> {
        let d = self.d();
        if d != 2 {
            return queries
                .chunks_exact(d)
                .map(|q| self.count_below(q))
                .collect();
        }
        let n = self.n();
        // Second-column rank of the row whose first-column rank is r (1-based).
        let mut second_by_first = vec![0u32; n + 1];
        for i in 0..n {
            let r = self.pseudo.ranks_of(i);
            second_by_first[r[0] as usize] = r[1];
        }
        let m = queries.len() / 2;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_unstable_by_key(|&q| queries[2 * q]);
        let mut tree = Fenwick::new(n);
        let mut added = 0usize;
        let mut out = vec![0usize; m];
        for q in order {
            let (t1, t2) = (queries[2 * q] as usize, queries[2 * q + 1] as usize);
            while added < t1.min(n) {
                added += 1;
                tree.add(second_by_first[added] as usize);
            }
            out[q] = tree.prefix(t2.min(n));
        }
        out
    }

    /// `C_n` at every lattice point `(i₁/p, …, i_d/p)`, `0 ≤ i_j ≤ p`, in
    /// row-major order with the first axis most significant.
    ///
    /// Each row is binned into the smallest lattice cell that contains it,
    /// then a d-dimensional prefix sum accumulates the counts.
    pub fn grid(&self, p: usize) -> Vec<f64> {
        let (n, d) = (self.n(), self.d());
        let side = p + 1;
        let len = side.pow(d as u32);
        let mut counts = vec![0u32; len];
        for i in 0..n {
            let mut flat = 0usize;
            for &r in self.pseudo.ranks_of(i) {
                // Smallest lattice index i with ⌈n·i/p⌉ ≥ r.
                let cell = (r as usize - 1) * p / n + 1;
                flat = flat * side + cell;
            }
            counts[flat] += 1;
        }
        // Prefix sums along each axis in turn.
        let mut stride = 1;
        for _ in 0..d {
            for idx in 0..len {
                if (idx / stride) % side != 0 {
                    counts[idx] += counts[idx - stride];
                }
            }
            stride *= side;
        }
        counts.into_iter().map(|c| c as f64 / n as f64).collect()
    }
}

/// `⌈n·u⌉`, clamped to `0..=n`. The small offset keeps points such as
/// `u = k/n` from rounding up to `k + 1`.
pub(crate) fn rank_threshold(n: usize, u: f64) -> u32 {
    let t = (n as f64 * u - 1e-9).ceil();
    t.clamp(0.0, n as f64) as u32
}

/// `C_n(u)` for the empirical copula of `sample`.
pub fn empirical_copula(sample: &Sample, u: &[f64]) -> f64 {
    EmpiricalCopula::from_sample(sample).eval(u)
}

/// Binary indexed tree over positions `1..=n`.
struct Fenwick {
    tree: Vec<usize>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self {
            tree: vec![0; n + 1],
        }
    }

    fn add(&mut self, mut pos: usize) {
        while pos < self.tree.len() {
            self.tree[pos] += 1;
            pos += pos & pos.wrapping_neg();
        }
    }

    fn prefix(&self, mut pos: usize) -> usize {
        let mut sum = 0;
        while pos > 0 {
            sum += self.tree[pos];
            pos -= pos & pos.wrapping_neg();
        }
        sum
    }
}
