//! Test statistics computed from copula processes.
//!
//! Every statistic except Cramér–von Mises reads a [`GridField`]; CvM
//! integrates the process against the atoms of the empirical copula.

mod atv;

use crate::copula::CopulaCdf;
use crate::empirical::box_measure_unchecked;
use crate::empirical::{CopulaProcess, EmpiricalCopula, GridField, Sample};
use crate::error::{Error, Result};

pub use atv::{
    atv_exact, atv_prs, enumerate_and_rank_boxes, AtvConfig, BoxFamily, BoxIndex, ScoredBox,
    Shortlist, EXACT_GUARD,
};

/// Kolmogorov–Smirnov statistic: the largest `|value|` on the lattice.
pub fn ks_statistic(field: &GridField) -> f64 {
    field.values().iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Cramér–von Mises statistic `∫ {√n (C_n − C₀)}² dC_n` of a simple null,
/// i.e. the average squared process value over the pseudo-observations.
pub fn cvm_statistic(sample: &Sample, null: &dyn CopulaCdf) -> Result<f64> {
    let empirical = EmpiricalCopula::from_sample(sample);
    Ok(cvm_of_process(&CopulaProcess::simple(&empirical, null)?))
}

/// `(1/n) Σ_i X(Û_i)²` for any process `X`, with `Û_i` the atoms of its
/// primary empirical copula.
pub fn cvm_of_process(process: &CopulaProcess<'_>) -> f64 {
    let values = process.atom_values();
    values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64
}

/// Number of boxes `L_n = max(1, ⌊(ln n)^0.95⌋ − 2)`.
pub fn box_count_rule(n: usize) -> usize {
    if n < 2 {
        return 1;
    }
    let raw = (n as f64).ln().powf(0.95).floor() as i64 - 2;
    raw.max(1) as usize
}

/// Resolution `⌊L^{1/d}⌋ + 1` of the equidistant partition used by the
/// generalized χ² statistic.
pub fn chi2_resolution(boxes: usize, d: usize) -> usize {
    let mut r = (boxes.max(1) as f64).powf(1.0 / d as f64).floor() as usize;
    while (r + 1).pow(d as u32) <= boxes {
        r += 1;
    }
    while r > 1 && r.pow(d as u32) > boxes {
        r -= 1;
    }
    r + 1
}

/// Generalized χ² statistic: the sum of squared box measures over the
/// `q^d` cells of the equidistant partition with `q = ⌊L^{1/d}⌋ + 1`.
///
/// The field's resolution must be a multiple of `q`.
pub fn chi2_statistic(field: &GridField, boxes: usize) -> Result<f64> {
    let q = chi2_resolution(boxes, field.d());
    if !field.p().is_multiple_of(q) {
        return Err(Error::Config(format!(
            "the χ² partition needs a field resolution divisible by {q}, got {}",
            field.p()
        )));
    }
    let coarse = field.coarsen(field.p() / q)?;
    let d = coarse.d();
    let cells = q.pow(d as u32);
    let mut lo = vec![0; d];
    let mut hi = vec![0; d];
    let mut total = 0.0;
    for cell in 0..cells {
        let mut rest = cell;
        for j in (0..d).rev() {
            lo[j] = rest % q;
            hi[j] = lo[j] + 1;
            rest /= q;
        }
        let m = box_measure_unchecked(&coarse, &lo, &hi);
        total += m * m;
    }
    Ok(total)
}

/// Generalized Kuiper statistic: greedily takes the grid box of largest
/// `|measure|` that is disjoint from the boxes already chosen, `L` times,
/// and returns the chosen family. Stops early when no disjoint box remains.
pub fn kuiper_family(field: &GridField, boxes: usize) -> Result<BoxFamily> {
    let index = atv::shared_index(field.p(), field.d())?;
    Ok(index.greedy(field, boxes))
}

/// Score of [`kuiper_family`].
pub fn kuiper_statistic(field: &GridField, boxes: usize) -> Result<f64> {
    Ok(kuiper_family(field, boxes)?.score)
}

#[cfg(test)]
mod tests;
