use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// What a [`GridField`] tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    EmpiricalCopula,
    /// `√n (C_n − C₀)`
    SimpleProcess,
    /// `√n (C_n − C_θ̂)`
    CompositeProcess,
    /// `√n (C*_n − C_n)`
    BootstrapSimple,
    /// `√n (C*_n − C_n) − √n (C_θ̂* − C_θ̂)`
    BootstrapComposite,
}

impl FieldKind {
    pub fn is_process(self) -> bool {
        self != FieldKind::EmpiricalCopula
    }
}

/// Values of a copula-type function at every lattice point `i/p`,
/// `i ∈ {0, …, p}^d`, stored row-major with the first axis most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    p: usize,
    d: usize,
    kind: FieldKind,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(p: usize, d: usize, kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        if p == 0 || d == 0 {
            return Err(Error::Config(format!(
                "grid needs p ≥ 1 and d ≥ 1, got p={p}, d={d}"
            )));
        }
        let expected = (p + 1).pow(d as u32);
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { p, d, kind, values })
    }

    pub fn zeros(p: usize, d: usize, kind: FieldKind) -> Self {
        Self {
            p,
            d,
            kind,
            values: vec![0.0; (p + 1).pow(d as u32)],
        }
    }

    /// Resolution: lattice coordinates run over `0, 1/p, …, 1`.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.d);
        index.iter().fold(0, |acc, &i| acc * (self.p + 1) + i)
    }

    /// Multi-index of a flat position.
    pub fn lattice_index(&self, mut flat: usize) -> Vec<usize> {
        let side = self.p + 1;
        let mut index = vec![0; self.d];
        for slot in index.iter_mut().rev() {
            *slot = flat % side;
            flat /= side;
        }
        index
    }

    pub fn at(&self, index: &[usize]) -> f64 {
        self.values[self.flat_index(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let flat = self.flat_index(index);
        self.values[flat] = value;
    }

    /// Field restricted to the coarser lattice of resolution `p / factor`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.p.is_multiple_of(factor) {
            return Err(Error::Config(format!(
                "resolution {} is not a multiple of {factor}",
                self.p
            )));
        }
        let q = self.p / factor;
        let mut out = Self::zeros(q, self.d, self.kind);
        for flat in 0..out.values.len() {
            let index: Vec<usize> = out.lattice_index(flat).iter().map(|i| i * factor).collect();
            out.values[flat] = self.at(&index);
        }
        Ok(out)
    }
}

/// Half-open box `∏_j (lo_j/p, hi_j/p]` with integer lattice corners.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GridBox {
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl GridBox {
    pub fn new(lo: Vec<usize>, hi: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::DegenerateBox { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// The whole cube `(0, 1]^d` at resolution `p`.
    pub fn full(p: usize, d: usize) -> Self {
        Self {
            lo: vec![0; d],
            hi: vec![p; d],
        }
    }

    pub fn lo(&self) -> &[usize] {
        &self.lo
    }

    pub fn hi(&self) -> &[usize] {
        &self.hi
    }

    pub fn d(&self) -> usize {
        self.lo.len()
    }

    /// Half-open boxes are disjoint iff their intervals fail to overlap on at
    /// least one axis.
    pub fn is_disjoint(&self, other: &GridBox) -> bool {
        (0..self.d()).any(|j| self.lo[j].max(other.lo[j]) >= self.hi[j].min(other.hi[j]))
    }
}

impl fmt::Display for GridBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, (a, b)) in self.lo.iter().zip(&self.hi).enumerate() {
            if j > 0 {
                f.write_str("×")?;
            }
            write!(f, "({a},{b}]")?;
        }
        Ok(())
    }
}

/// Signed mass the field assigns to a box: the `2^d`-term inclusion–exclusion
/// `Δ¹_{a₁,b₁} ⋯ Δ^d_{a_d,b_d} F` over the box corners.
pub fn box_measure(field: &GridField, bx: &GridBox) -> Result<f64> {
    if bx.d() != field.d() {
        return Err(Error::DimensionMismatch {
            expected: field.d(),
            got: bx.d(),
        });
    }
    if bx.lo.iter().zip(&bx.hi).any(|(a, b)| a >= b) {
        return Err(Error::DegenerateBox {
            lo: bx.lo.clone(),
            hi: bx.hi.clone(),
        });
    }
    if bx.hi.iter().any(|&b| b > field.p()) {
        return Err(Error::BoxOutOfRange {
            lo: bx.lo.clone(),
            hi: bx.hi.clone(),
            p: field.p(),
        });
    }
    Ok(box_measure_unchecked(field, &bx.lo, &bx.hi))
}

pub(crate) fn box_measure_unchecked(field: &GridField, lo: &[usize], hi: &[usize]) -> f64 {
    let d = field.d();
    let side = field.p() + 1;
    let mut sum = 0.0;
    for mask in 0..(1usize << d) {
        let mut flat = 0;
        for j in 0..d {
            let corner = if mask >> j & 1 == 1 { lo[j] } else { hi[j] };
            flat = flat * side + corner;
        }
        if mask.count_ones() % 2 == 0 {
            sum += field.values[flat];
        } else {
            sum -= field.values[flat];
        }
    }
    sum
}

/// Default lattice resolution `⌊n^{1/d}⌋` (at least 2).
pub fn default_resolution(n: usize, d: usize) -> usize {
    let mut p = (n as f64).powf(1.0 / d as f64).floor() as usize;
    while (p + 1).checked_pow(d as u32).is_some_and(|v| v <= n) {
        p += 1;
    }
    while p > 0 && p.pow(d as u32) > n {
        p -= 1;
    }
    p.max(2)
}
