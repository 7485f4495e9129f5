//! Eigenvalues, spectral abscissae and resolvent norms.
//!
//! Everything is computed on the transported generator `G = S A S^{-1}`
//! (see [`SemiDiscreteSystem::transported_generator`]), in which the scheme's
//! natural norm is Euclidean: eigenvalues are unchanged and resolvent norms
//! become plain reciprocal smallest singular values.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::matrix::DenseComplexMatrix;
use crate::systems::{Scheme, SemiDiscreteSystem};

pub const MAX_EIGEN_DIMENSION: usize = 2048;
pub const DEFAULT_EIGEN_TOL: f64 = 1e-8;
/// `σ_min / σ_max` below which `iβ - A` is treated as singular.
pub const SINGULAR_RATIO: f64 = 1e-14;

fn check_square(a: &DenseComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return domain(format!("matrix must be square, got {}x{}", a.rows(), a.cols()));
    }
    if a.rows() == 0 {
        return domain("matrix must be nonempty");
    }
    if a.rows() > MAX_EIGEN_DIMENSION {
        return domain(format!(
            "dimension {} exceeds the eigensolver cap {MAX_EIGEN_DIMENSION}",
            a.rows()
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    /// Unit eigenvectors, one per column.
    pub vectors: DenseComplexMatrix,
    /// `||A v - λ v||` per eigenpair.
    pub residuals: Vec<f64>,
}

impl EigenDecomposition {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn eigen_decomposition(a: &DenseComplexMatrix) -> Result<EigenDecomposition> {
    check_square(a)?;
    let n = a.rows();
    let m = a.to_faer();
    let evd = m
        .eigen()
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let u = evd.U();
    let s = evd.S().column_vector();
    let values: Vec<Complex64> = (0..n).map(|j| s[j]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("eigensolver returned non-finite values".into()));
    }
    let av = &m * u;
    let mut vectors = DenseComplexMatrix::zeros(n, n);
    let mut residuals = Vec::with_capacity(n);
    for j in 0..n {
        let norm = (0..n).map(|i| u[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        let mut r = 0.0;
        for i in 0..n {
            vectors[(i, j)] = u[(i, j)] * scale;
            r += ((av[(i, j)] - values[j] * u[(i, j)]) * scale).norm_sqr();
        }
        residuals.push(r.sqrt());
    }
    Ok(EigenDecomposition {
        values,
        vectors,
        residuals,
    })
}

/// All eigenvalues with multiplicity. Each eigenpair is checked against
/// `||A v - λ v|| <= tol ||A||`, `||A||` being the largest column norm.
pub fn eigenvalues(a: &DenseComplexMatrix, tol: f64) -> Result<Vec<Complex64>> {
    let evd = eigen_decomposition(a)?;
    let bound = tol * a.max_column_norm();
    if evd.max_residual() > bound {
        return Err(Error::Numerical(format!(
            "eigen-residual {:e} exceeds {tol:e} x ||A||",
            evd.max_residual()
        )));
    }
    Ok(evd.values)
}

/// Eigenvalues only, without residual checks.
pub fn eigenvalues_unchecked(a: &DenseComplexMatrix) -> Result<Vec<Complex64>> {
    check_square(a)?;
    a.to_faer()
        .eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub scheme: Scheme,
    pub n: usize,
    pub h: f64,
    pub k: f64,
    pub eigenvalues: Vec<Complex64>,
    pub abscissa: f64,
    /// Largest eigen-residual divided by `||G||` (largest column norm).
    pub max_eigen_residual: f64,
    pub generator_norm: f64,
}

pub fn spectral_abscissa(system: &SemiDiscreteSystem) -> Result<SpectrumReport> {
    let g = system.transported_generator();
    let evd = eigen_decomposition(g)?;
    let norm = g.max_column_norm();
    let relative = evd.max_residual() / norm;
    if relative > DEFAULT_EIGEN_TOL {
        return Err(Error::Numerical(format!(
            "{} N = {}: eigen-residual {relative:e} x ||A|| exceeds {DEFAULT_EIGEN_TOL:e}",
            system.scheme(),
            system.mesh().n()
        )));
    }
    let abscissa = evd.values.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumReport {
        scheme: system.scheme(),
        n: system.mesh().n(),
        h: system.mesh().h(),
        k: system.k(),
        eigenvalues: evd.values,
        abscissa,
        max_eigen_residual: relative,
        generator_norm: norm,
    })
}

fn shifted(g: &DenseComplexMatrix, beta: f64) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(g.rows(), g.cols(), |i, j| {
        let d = if i == j { Complex64::new(0.0, beta) } else { Complex64::new(0.0, 0.0) };
        d - g[(i, j)]
    })
}

/// `||(iβ - A)^{-1}||` in the scheme's natural norm.
pub fn resolvent_norm(system: &SemiDiscreteSystem, beta: f64) -> Result<f64> {
    resolvent_norm_of(system.transported_generator(), beta)
}

/// `1 / σ_min(iβ - G)` for a matrix already in Euclidean coordinates.
pub fn resolvent_norm_of(g: &DenseComplexMatrix, beta: f64) -> Result<f64> {
    check_square(g)?;
    if !beta.is_finite() {
        return domain(format!("beta must be finite, got {beta}"));
    }
    let sv = shifted(g, beta)
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed at beta = {beta}: {e:?}")))?;
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if !(smin > SINGULAR_RATIO * smax) {
        return Err(Error::NearSingular {
            beta,
            ratio: if smax > 0.0 { smin / smax } else { 0.0 },
        });
    }
    Ok(1.0 / smin)
}

/// Frequencies at which the resolvent is sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Linear grid bounds; defaults to `±2 (π (N+1))^2`.
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub linear_steps: usize,
    /// Log-spaced tail points `±10^e`, `0 <= e <= log_decades`.
    pub log_decades: f64,
    pub log_points_per_decade: usize,
    /// Also sample at `Im λ` of every eigenvalue, where peaks sit.
    pub include_eigen_imag: bool,
    /// When set, exactly these frequencies are used.
    pub explicit: Option<Vec<f64>>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            beta_min: None,
            beta_max: None,
            linear_steps: 401,
            log_decades: 6.0,
            log_points_per_decade: 10,
            include_eigen_imag: true,
            explicit: None,
        }
    }
}

impl SweepConfig {
    pub fn explicit(betas: Vec<f64>) -> Self {
        Self {
            explicit: Some(betas),
            ..Self::default()
        }
    }

    pub fn default_beta_max(n: usize) -> f64 {
        2.0 * (std::f64::consts::PI * (n as f64 + 1.0)).powi(2)
    }

    /// Sorted, deduplicated frequency grid for `system`.
    pub fn grid(&self, system: &SemiDiscreteSystem) -> Result<Vec<f64>> {
        let mut betas = match &self.explicit {
            Some(list) => {
                if list.is_empty() {
                    return domain("explicit beta list is empty");
                }
                list.clone()
            }
            None => self.generated(system)?,
        };
        if betas.iter().any(|b| !b.is_finite()) {
            return domain("beta values must be finite");
        }
        betas.sort_by(f64::total_cmp);
        betas.dedup();
        Ok(betas)
    }

    fn generated(&self, system: &SemiDiscreteSystem) -> Result<Vec<f64>> {
        let hi = self
            .beta_max
            .unwrap_or_else(|| Self::default_beta_max(system.mesh().n()));
        let lo = self.beta_min.unwrap_or(-hi);
        if !(lo < hi) {
            return domain(format!("need beta_min < beta_max, got {lo} >= {hi}"));
        }
        if self.linear_steps < 2 {
            return domain("linear_steps must be at least 2");
        }
        let steps = self.linear_steps - 1;
        let mut betas: Vec<f64> = (0..=steps)
            .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
            .collect();
        if self.log_decades >= 0.0 && self.log_points_per_decade > 0 {
            let count = (self.log_decades * self.log_points_per_decade as f64).floor() as usize;
            for i in 0..=count {
                let b = 10f64.powf(i as f64 / self.log_points_per_decade as f64);
                betas.push(b);
                betas.push(-b);
            }
        }
        if self.include_eigen_imag {
            betas.extend(eigenvalues_unchecked(system.transported_generator())?.iter().map(|l| l.im));
        }
        Ok(betas)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSweepReport {
    pub scheme: Scheme,
    pub n: usize,
    pub k: f64,
    pub beta_grid: Vec<f64>,
    pub norms: Vec<f64>,
    pub sup_norm: f64,
    pub argmax_beta: f64,
}

/// Largest norm and its frequency; the smallest `|β|` wins ties.
fn sup_and_argmax(betas: &[f64], norms: &[f64]) -> (f64, f64) {
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0f64);
    for (&b, &v) in betas.iter().zip(norms) {
        if v > best || (v == best && b.abs() < arg.abs()) {
            best = v;
            arg = b;
        }
    }
    (best, arg)
}

/// Resolvent norms over the configured grid. Points are evaluated in
/// parallel; the report does not depend on scheduling.
pub fn resolvent_sweep(system: &SemiDiscreteSystem, cfg: &SweepConfig) -> Result<ResolventSweepReport> {
    let betas = cfg.grid(system)?;
    let g = system.transported_generator();
    let norms: Vec<f64> = betas
        .par_iter()
        .map(|&b| resolvent_norm_of(g, b))
        .collect::<Result<_>>()?;
    let (best, arg) = sup_and_argmax(&betas, &norms);
    Ok(ResolventSweepReport {
        scheme: system.scheme(),
        n: system.mesh().n(),
        k: system.k(),
        beta_grid: betas,
        norms,
        sup_norm: best,
        argmax_beta: arg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityRow {
    pub n: usize,
    pub h: f64,
    pub abscissa_or: f64,
    pub abscissa_cl: f64,
    pub sup_resolvent_or: Option<f64>,
    pub sup_resolvent_cl: Option<f64>,
}

/// Abscissae of both schemes per `N`, plus resolvent sups when a sweep is
/// given.
pub fn uniformity_report(
    n_list: &[usize],
    k: f64,
    sweep: Option<&SweepConfig>,
) -> Result<Vec<UniformityRow>> {
    if n_list.is_empty() {
        return domain("N list is empty");
    }
    n_list
        .iter()
        .map(|&n| {
            let or = SemiDiscreteSystem::new(Scheme::OrderReduction, n, k)?;
            let cl = SemiDiscreteSystem::new(Scheme::Classical, n, k)?;
            let sup = |s: &SemiDiscreteSystem| -> Result<Option<f64>> {
                sweep.map(|c| resolvent_sweep(s, c).map(|r| r.sup_norm)).transpose()
            };
            Ok(UniformityRow {
                n,
                h: or.mesh().h(),
                abscissa_or: spectral_abscissa(&or)?.abscissa,
                abscissa_cl: spectral_abscissa(&cl)?.abscissa,
                sup_resolvent_or: sup(&or)?,
                sup_resolvent_cl: sup(&cl)?,
            })
        })
        .collect()
}
