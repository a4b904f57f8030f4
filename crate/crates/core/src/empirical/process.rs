use super::copula::EmpiricalCopula;
use super::field::{FieldKind, GridField};
use super::{PseudoObservations, Sample};
use crate::copula::{fit, CopulaCdf, CopulaModel, EstimatorKind, Family};
use crate::error::{Error, Result};

/// A copula process of the form
/// `√n (primary − centre) − √n (fitted − anchor)`, where missing terms are 0.
///
/// | kind                 | primary | centre | fitted  | anchor |
/// |----------------------|---------|--------|---------|--------|
/// | `SimpleProcess`      | `C_n`   |        | `C₀`    |        |
/// | `CompositeProcess`   | `C_n`   |        | `C_θ̂`   |        |
/// | `BootstrapSimple`    | `C*_n`  | `C_n`  |         |        |
/// | `BootstrapComposite` | `C*_n`  | `C_n`  | `C_θ̂*`  | `C_θ̂`  |
pub struct CopulaProcess<'a> {
    kind: FieldKind,
    scale: f64,
    primary: &'a EmpiricalCopula,
    centre: Option<&'a EmpiricalCopula>,
    fitted: Option<&'a dyn CopulaCdf>,
    anchor: Option<&'a dyn CopulaCdf>,
}

impl<'a> CopulaProcess<'a> {
    fn build(
        kind: FieldKind,
        primary: &'a EmpiricalCopula,
        centre: Option<&'a EmpiricalCopula>,
        fitted: Option<&'a dyn CopulaCdf>,
        anchor: Option<&'a dyn CopulaCdf>,
    ) -> Result<Self> {
        let d = primary.d();
        if let Some(c) = centre {
            if c.d() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.d(),
                });
            }
            if c.n() != primary.n() {
                return Err(Error::Data(format!(
                    "resample has {} rows but the sample has {}",
                    primary.n(),
                    c.n()
                )));
            }
        }
        for cdf in [fitted, anchor].into_iter().flatten() {
            if let Some(k) = cdf.dim() {
                if k != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: k,
                    });
                }
            }
        }
        Ok(Self {
            kind,
            scale: (primary.n() as f64).sqrt(),
            primary,
            centre,
            fitted,
            anchor,
        })
    }

    /// `Z_n = √n (C_n − C₀)`.
    pub fn simple(empirical: &'a EmpiricalCopula, null: &'a dyn CopulaCdf) -> Result<Self> {
        Self::build(FieldKind::SimpleProcess, empirical, None, Some(null), None)
    }

    /// `Y_n = √n (C_n − C_θ̂)`.
    pub fn composite(empirical: &'a EmpiricalCopula, fitted: &'a dyn CopulaCdf) -> Result<Self> {
        Self::build(
            FieldKind::CompositeProcess,
            empirical,
            None,
            Some(fitted),
            None,
        )
    }

    /// `Z*_n = √n (C*_n − C_n)`.
    pub fn bootstrap_simple(
        resampled: &'a EmpiricalCopula,
        empirical: &'a EmpiricalCopula,
    ) -> Result<Self> {
        Self::build(
            FieldKind::BootstrapSimple,
            resampled,
            Some(empirical),
            None,
            None,
        )
    }

    /// `Y*_n = √n (C*_n − C_n) − √n (C_θ̂* − C_θ̂)`.
    pub fn bootstrap_composite(
        resampled: &'a EmpiricalCopula,
        empirical: &'a EmpiricalCopula,
        refitted: &'a dyn CopulaCdf,
        fitted: &'a dyn CopulaCdf,
    ) -> Result<Self> {
        Self::build(
            FieldKind::BootstrapComposite,
            resampled,
            Some(empirical),
            Some(refitted),
            Some(fitted),
        )
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.primary.n()
    }

    pub fn d(&self) -> usize {
        self.primary.d()
    }

    /// The empirical copula whose atoms the process is integrated against.
    pub fn primary(&self) -> &EmpiricalCopula {
        self.primary
    }

    /// Value of the process at an arbitrary point.
    pub fn value(&self, u: &[f64]) -> f64 {
        combine_point(
            self.scale,
            self.primary.eval(u),
            self.centre.map(|c| c.eval(u)),
            self.fitted.map(|c| c.cdf(u)),
            self.anchor.map(|c| c.cdf(u)),
        )
    }

    /// The process on the lattice of resolution `p`.
    pub fn grid(&self, p: usize) -> Result<GridField> {
        if p == 0 {
            return Err(Error::Config("grid resolution must be at least 1".into()));
        }
        let d = self.d();
        let primary = self.primary.grid(p);
        let centre = self.centre.map(|c| c.grid(p));
        let fitted = self.fitted.map(|c| model_grid(c, p, d));
        let anchor = self.anchor.map(|c| model_grid(c, p, d));
        Ok(combine_grids(
            self.kind,
            p,
            d,
            self.scale,
            &primary,
            centre.as_deref(),
            fitted.as_deref(),
            anchor.as_deref(),
        ))
    }

    /// The process at every atom `Û_i = R_i / n` of the primary empirical
    /// copula, in row order.
    pub fn atom_values(&self) -> Vec<f64> {
        let (n, d) = (self.n(), self.d());
        let pseudo = self.primary.pseudo();
        let queries = pseudo.ranks();
        let primary = self.primary.count_below_many(queries);
        let centre = self.centre.map(|c| c.count_below_many(queries));
        let mut point = vec![0.0; d];
        (0..n)
            .map(|i| {
                for (j, slot) in point.iter_mut().enumerate() {
                    *slot = pseudo.value(i, j);
                }
                combine_point(
                    self.scale,
                    primary[i] as f64 / n as f64,
                    centre.as_ref().map(|c| c[i] as f64 / n as f64),
                    self.fitted.map(|c| c.cdf(&point)),
                    self.anchor.map(|c| c.cdf(&point)),
                )
            })
            .collect()
    }
}

#[inline]
fn combine_point(
    scale: f64,
    primary: f64,
    centre: Option<f64>,
    fitted: Option<f64>,
    anchor: Option<f64>,
) -> f64 {
    let empirical = scale * (primary - centre.unwrap_or(0.0));
    let parametric = match fitted {
        Some(f) => scale * (f - anchor.unwrap_or(0.0)),
        None => 0.0,
    };
    empirical - parametric
}

/// A copula cdf at every lattice point of resolution `p`.
fn model_grid(cdf: &dyn CopulaCdf, p: usize, d: usize) -> Vec<f64> {
    let side = p + 1;
    let len = side.pow(d as u32);
    let coords: Vec<f64> = (0..=p).map(|i| i as f64 / p as f64).collect();
    let mut point = vec![0.0; d];
    (0..len)
        .map(|mut flat| {
            for slot in point.iter_mut().rev() {
                *slot = coords[flat % side];
                flat /= side;
            }
            cdf.cdf(&point)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn combine_grids(
    kind: FieldKind,
    p: usize,
    d: usize,
    scale: f64,
    primary: &[f64],
    centre: Option<&[f64]>,
    fitted: Option<&[f64]>,
    anchor: Option<&[f64]>,
) -> GridField {
    let values = (0..primary.len())
        .map(|k| {
            combine_point(
                scale,
                primary[k],
                centre.map(|c| c[k]),
                fitted.map(|c| c[k]),
                anchor.map(|c| c[k]),
            )
        })
        .collect();
    GridField::new(p, d, kind, values).expect("lattice sizes agree")
}

/// `Z_n = √n (C_n − C₀)` on the lattice of resolution `p`.
pub fn grid_simple(sample: &Sample, null: &dyn CopulaCdf, p: usize) -> Result<GridField> {
    let empirical = EmpiricalCopula::from_sample(sample);
    CopulaProcess::simple(&empirical, null)?.grid(p)
}

/// Fits the family on the sample and returns `Y_n = √n (C_n − C_θ̂)` on the
/// lattice together with the fitted model.
pub fn grid_composite(
    sample: &Sample,
    family: Family,
    estimator: EstimatorKind,
    p: usize,
) -> Result<(GridField, CopulaModel)> {
    let model = crate::copula::fit_sample(family, estimator, sample)?;
    let empirical = EmpiricalCopula::from_sample(sample);
    let field = CopulaProcess::composite(&empirical, &model)?.grid(p)?;
    Ok((field, model))
}

/// `Z*_n = √n (C*_n − C_n)`, where `C*_n` is the empirical copula of the
/// resample, re-ranked within the resample.
pub fn grid_bootstrap_simple(sample: &Sample, resample: &Sample, p: usize) -> Result<GridField> {
    let empirical = EmpiricalCopula::from_sample(sample);
    let resampled = EmpiricalCopula::from_sample(resample);
    CopulaProcess::bootstrap_simple(&resampled, &empirical)?.grid(p)
}

/// `Y*_n = √n (C*_n − C_n) − √n (C_θ̂* − C_θ̂)`, refitting `θ̂*` on the
/// pseudo-observations of the resample.
pub fn grid_bootstrap_composite(
    sample: &Sample,
    resample: &Sample,
    family: Family,
    estimator: EstimatorKind,
    theta_hat: &CopulaModel,
    p: usize,
) -> Result<GridField> {
    let empirical = EmpiricalCopula::from_sample(sample);
    let pseudo = PseudoObservations::from_sample(resample);
    let refitted = fit(family, estimator, &pseudo)?;
    let resampled = EmpiricalCopula::new(pseudo);
    CopulaProcess::bootstrap_composite(&resampled, &empirical, &refitted, theta_hat)?.grid(p)
}
