//! Gap functionals for the exact discrete identities behind the stability
//! proof. Each returns `|lhs - rhs|` together with the largest absolute term
//! entering the identity, so `gap <= tol * scale` is a meaningful relative
//! test for inputs of any magnitude.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_gain, Result};
use crate::grid::{self, build_scheme_matrices, Mesh};
use crate::matrix::DenseComplexMatrix;
use crate::rng::{complex_normal, complex_uniform, seeded};
use crate::systems::{self, Scheme, SemiDiscreteSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityGap {
    pub gap: f64,
    pub scale: f64,
}

impl IdentityGap {
    /// `gap / scale`, with `0/0 = 0`.
    pub fn relative(&self) -> f64 {
        if self.gap == 0.0 {
            0.0
        } else {
            self.gap / self.scale
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.gap <= tol * self.scale
    }
}

fn sum_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Gap of
/// `2 Re(h Σ x_{j+1/2} u_{j+1/2} conj(δ_x u_{j+1/2})) = |u_{N+1}|^2 - h Σ |u_{j+1/2}|^2 - (h^3/4) Σ |δ_x u_{j+1/2}|^2`
/// for an extended vector `u = (u_0, ..., u_{N+1})`.
fn boundary_multiplier(u: &[Complex64], mesh: &Mesh) -> Result<IdentityGap> {
    let h = mesh.h();
    let mid = grid::average(u)?;
    let diff = grid::difference(u, h)?;
    let mut lhs = 0.0;
    let mut lhs_mass = 0.0;
    for (j, (m, d)) in mid.iter().zip(&diff).enumerate() {
        let term = mesh.midpoint(j) * m * d.conj();
        lhs += term.re;
        lhs_mass += term.norm();
    }
    lhs *= 2.0 * h;
    lhs_mass *= 2.0 * h;
    let boundary = u[u.len() - 1].norm_sqr();
    let mids = h * sum_sq(&mid);
    let diffs = h.powi(3) / 4.0 * sum_sq(&diff);
    Ok(IdentityGap {
        gap: (lhs - (boundary - mids - diffs)).abs(),
        scale: lhs_mass.max(boundary).max(mids).max(diffs),
    })
}

/// Multiplier identity for a state vector, padded with `y_0 = 0`.
pub fn boundary_multiplier_gap_y(y: &[Complex64], mesh: &Mesh) -> Result<IdentityGap> {
    boundary_multiplier(grid::extend_state(y, mesh)?.values(), mesh)
}

/// Multiplier identity for an extended vector `(z_0, ..., z_{N+1})`.
pub fn boundary_multiplier_gap_z(z_ext: &[Complex64], mesh: &Mesh) -> Result<IdentityGap> {
    if z_ext.len() != mesh.dim() + 1 {
        return domain(format!(
            "extended vector must have length N+2 = {}, got {}",
            mesh.dim() + 1,
            z_ext.len()
        ));
    }
    boundary_multiplier(z_ext, mesh)
}

/// Padded pair `(Ŷ, Ẑ) = ((0, Y), (Z, -i k y_{N+1}))` with `Z` the shadow element.
pub fn padded_pair(
    y: &[Complex64],
    k: f64,
    mesh: &Mesh,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let z = grid::shadow_element(y, k, mesh)?;
    let y_hat = grid::extend_state(y, mesh)?.into_values();
    let z_hat = grid::extend_shadow(&z, y[y.len() - 1], k, mesh)?.into_values();
    Ok((y_hat, z_hat))
}

/// Gap of `h Σ (conj(y_{j+1/2}) δ_x z_{j+1/2} + y_{j+1/2} conj(δ_x z_{j+1/2})) + 2 h Σ |z_{j+1/2}|^2 = 0`.
pub fn cross_term_gap(y: &[Complex64], k: f64, mesh: &Mesh) -> Result<IdentityGap> {
    let h = mesh.h();
    let (y_hat, z_hat) = padded_pair(y, k, mesh)?;
    let y_mid = grid::average(&y_hat)?;
    let z_mid = grid::average(&z_hat)?;
    let z_diff = grid::difference(&z_hat, h)?;
    let mut cross = 0.0;
    let mut cross_mass = 0.0;
    for (a, b) in y_mid.iter().zip(&z_diff) {
        let t = a.conj() * b;
        cross += 2.0 * t.re;
        cross_mass += 2.0 * t.norm();
    }
    let square = 2.0 * h * sum_sq(&z_mid);
    Ok(IdentityGap {
        gap: (h * cross + square).abs(),
        scale: (h * cross_mass).max(square),
    })
}

/// Matrix-form versus sum-form gaps of the two functional equalities used
/// with a spectral parameter `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaimGaps {
    pub claim2: IdentityGap,
    pub claim3: IdentityGap,
}

/// Nonzeros of a dense matrix, row by row.
struct RowPattern {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl RowPattern {
    fn new(m: &DenseComplexMatrix) -> Self {
        let rows = (0..m.rows())
            .map(|i| {
                m.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.norm() != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    fn norm_sq(&self, x: &[Complex64]) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * x[j]).sum::<Complex64>().norm_sqr())
            .sum()
    }
}

/// `Σ_h`, `Δ_h` in row form, reusable across many inputs on one mesh.
pub struct ClaimOperators {
    mesh: Mesh,
    sigma: RowPattern,
    delta: RowPattern,
}

impl ClaimOperators {
    pub fn new(mesh: &Mesh) -> Self {
        let s = build_scheme_matrices(mesh);
        Self {
            mesh: mesh.clone(),
            sigma: RowPattern::new(&s.sigma),
            delta: RowPattern::new(&s.delta),
        }
    }

    pub fn gaps(&self, y: &[Complex64], k: f64, beta: f64) -> Result<ClaimGaps> {
        if beta == 0.0 || !beta.is_finite() {
            return domain(format!("beta must be finite and nonzero, got {beta}"));
        }
        let mesh = &self.mesh;
        let h = mesh.h();
        let (y_hat, z_hat) = padded_pair(y, k, mesh)?;

        let yh = grid::yh_inner(y, y, mesh)?.re;
        let sigma_z = h * self.sigma.norm_sq(&z_hat);
        let delta_z = h * self.delta.norm_sq(&z_hat);
        let delta_y = h * self.delta.norm_sq(&y_hat);

        let y_mid = h * sum_sq(&grid::average(&y_hat)?);
        let y_diff = h * sum_sq(&grid::difference(&y_hat, h)?);
        let z_mid = h * sum_sq(&grid::average(&z_hat)?);
        let z_diff = h * sum_sq(&grid::difference(&z_hat, h)?);

        let q = h * h / 4.0;
        let claim2 = gap_of(
            &[yh, sigma_z / beta, q * delta_z / beta, q * delta_y],
            &[y_mid, z_mid / beta, q * z_diff / beta, q * y_diff],
        );
        let b2 = beta * beta;
        let claim3 = gap_of(
            &[yh, delta_z / b2, -2.0 * sigma_z / beta],
            &[y_mid, z_diff / b2, -2.0 * z_mid / beta],
        );
        Ok(ClaimGaps { claim2, claim3 })
    }
}

fn gap_of(lhs: &[f64], rhs: &[f64]) -> IdentityGap {
    let scale = lhs.iter().chain(rhs).map(|v| v.abs()).fold(0.0, f64::max);
    IdentityGap {
        gap: (lhs.iter().sum::<f64>() - rhs.iter().sum::<f64>()).abs(),
        scale,
    }
}

/// One-shot form of [`ClaimOperators::gaps`].
pub fn claim_functionals_gap(y: &[Complex64], k: f64, beta: f64, mesh: &Mesh) -> Result<ClaimGaps> {
    ClaimOperators::new(mesh).gaps(y, k, beta)
}

/// The triple-product summation identity with scale `max|u| max|v| max|w| m`.
pub fn triple_sum_check(u: &[Complex64], v: &[Complex64], w: &[Complex64]) -> Result<IdentityGap> {
    let gap = grid::triple_sum_identity_gap(u, v, w)?;
    Ok(IdentityGap {
        gap: gap.norm(),
        scale: max_abs(u) * max_abs(v) * max_abs(w) * u.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    /// `Re <A_h Y, Y>_{Y_h} = -k |y_{N+1}|^2`, matrix-free.
    Dissipation,
    /// Same identity through the assembled dense generator.
    DenseDissipation,
    /// Dense generator against the matrix-free applier.
    AssemblyAgreement,
    TripleSum,
    BoundaryMultiplierY,
    BoundaryMultiplierZ,
    CrossTerm,
    Claim2,
    Claim3,
}

impl IdentityKind {
    pub const ALL: [IdentityKind; 9] = [
        IdentityKind::Dissipation,
        IdentityKind::DenseDissipation,
        IdentityKind::AssemblyAgreement,
        IdentityKind::TripleSum,
        IdentityKind::BoundaryMultiplierY,
        IdentityKind::BoundaryMultiplierZ,
        IdentityKind::CrossTerm,
        IdentityKind::Claim2,
        IdentityKind::Claim3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IdentityKind::Dissipation => "dissipation",
            IdentityKind::DenseDissipation => "dense_dissipation",
            IdentityKind::AssemblyAgreement => "assembly_agreement",
            IdentityKind::TripleSum => "triple_sum",
            IdentityKind::BoundaryMultiplierY => "boundary_multiplier_y",
            IdentityKind::BoundaryMultiplierZ => "boundary_multiplier_z",
            IdentityKind::CrossTerm => "cross_term",
            IdentityKind::Claim2 => "claim2",
            IdentityKind::Claim3 => "claim3",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            IdentityKind::Dissipation | IdentityKind::DenseDissipation => 1e-10,
            _ => 1e-12,
        }
    }

    fn needs_dense(self) -> bool {
        matches!(
            self,
            IdentityKind::DenseDissipation | IdentityKind::AssemblyAgreement
        )
    }
}

impl fmt::Display for IdentityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Worst case of one identity over the samples of one `(N, k)` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub identity: IdentityKind,
    pub n: usize,
    pub k: f64,
    pub seed: u64,
    pub samples: usize,
    pub gap: f64,
    pub scale: f64,
    pub relative_gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub n_list: Vec<usize>,
    pub k_list: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub beta: f64,
    /// Dense checks are skipped above this `N`.
    pub dense_cap: usize,
    /// Relative size of a fault injected into one dense generator entry.
    pub perturb: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n_list: vec![1, 2, 7, 64, 255, 1023],
            k_list: vec![0.1, 1.0, 10.0],
            samples: 1000,
            seed: 20240607,
            beta: 3.7,
            dense_cap: 255,
            perturb: None,
        }
    }
}

fn job_seed(seed: u64, n: usize, k_index: usize, kind: IdentityKind) -> u64 {
    let kind_index = IdentityKind::ALL.iter().position(|&x| x == kind).unwrap_or(0) as u64;
    seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (k_index as u64 + 1).wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ (kind_index + 1).wrapping_mul(0x94D0_49BB_1331_11EB)
}

/// Dense generator with one seeded entry shifted by `perturb * max|entry|`.
fn perturbed_generator(sys: &SemiDiscreteSystem, perturb: f64, seed: u64) -> DenseComplexMatrix {
    use rand::Rng;
    let mut a = sys.generator().clone();
    let mut rng = seeded(seed);
    let (i, j) = (rng.random_range(0..a.rows()), rng.random_range(0..a.cols()));
    let shift = perturb * a.max_abs_entry();
    a[(i, j)] += shift;
    a
}

fn run_job(
    cfg: &SuiteConfig,
    n: usize,
    k_index: usize,
    kind: IdentityKind,
    claims: Option<&ClaimOperators>,
) -> Result<MultiplierReport> {
    let k = cfg.k_list[k_index];
    ensure_gain(k)?;
    let seed = job_seed(cfg.seed, n, k_index, kind);
    let mut rng = seeded(seed);
    let mesh = Mesh::new(n)?;
    let dim = mesh.dim();
    let dense = if kind.needs_dense() {
        let sys = SemiDiscreteSystem::new(Scheme::OrderReduction, n, k)?;
        Some(match cfg.perturb {
            Some(p) => perturbed_generator(&sys, p, seed),
            None => sys.generator().clone(),
        })
    } else {
        None
    };

    let mut worst = IdentityGap { gap: 0.0, scale: 0.0 };
    let mut worst_rel = -1.0;
    for _ in 0..cfg.samples {
        let y = complex_normal(&mut rng, dim);
        let check = match kind {
            IdentityKind::Dissipation => {
                systems::dissipation_check(&y, k, &mesh, Scheme::OrderReduction)?
            }
            IdentityKind::DenseDissipation => {
                let a = dense.as_ref().expect("dense generator prepared");
                dense_dissipation(a, &y, k, &mesh)?
            }
            IdentityKind::AssemblyAgreement => {
                let a = dense.as_ref().expect("dense generator prepared");
                assembly_agreement(a, &y, k, &mesh)?
            }
            IdentityKind::TripleSum => {
                let u = complex_uniform(&mut rng, dim + 1);
                let v = complex_uniform(&mut rng, dim + 1);
                let w = complex_uniform(&mut rng, dim + 1);
                triple_sum_check(&u, &v, &w)?
            }
            IdentityKind::BoundaryMultiplierY => boundary_multiplier_gap_y(&y, &mesh)?,
            IdentityKind::BoundaryMultiplierZ => {
                let z = complex_normal(&mut rng, dim + 1);
                boundary_multiplier_gap_z(&z, &mesh)?
            }
            IdentityKind::CrossTerm => cross_term_gap(&y, k, &mesh)?,
            IdentityKind::Claim2 | IdentityKind::Claim3 => {
                let ops = claims.expect("claim operators prepared");
                let g = ops.gaps(&y, k, cfg.beta)?;
                if kind == IdentityKind::Claim2 {
                    g.claim2
                } else {
                    g.claim3
                }
            }
        };
        let rel = check.relative();
        if rel > worst_rel {
            worst_rel = rel;
            worst = check;
        }
    }
    let tolerance = kind.tolerance();
    Ok(MultiplierReport {
        identity: kind,
        n,
        k,
        seed,
        samples: cfg.samples,
        gap: worst.gap,
        scale: worst.scale,
        relative_gap: worst_rel.max(0.0),
        tolerance,
        passed: worst.passes(tolerance),
    })
}

fn dense_dissipation(
    a: &DenseComplexMatrix,
    y: &[Complex64],
    k: f64,
    mesh: &Mesh,
) -> Result<IdentityGap> {
    let ay = a.mul_vec(y)?;
    let form = grid::yh_inner(&ay, y, mesh)?;
    let boundary = k * y[y.len() - 1].norm_sqr();
    Ok(IdentityGap {
        gap: (form.re + boundary).abs(),
        scale: grid::yh_norm(y, mesh)? * grid::yh_norm(&ay, mesh)? + boundary,
    })
}

/// `max_i |(A y)_i - (A_free y)_i|` against the entrywise bound `max_i (|A| |y|)_i`.
fn assembly_agreement(
    a: &DenseComplexMatrix,
    y: &[Complex64],
    k: f64,
    mesh: &Mesh,
) -> Result<IdentityGap> {
    let dense = a.mul_vec(y)?;
    let free = systems::apply_order_reduction(y, k, mesh)?;
    let gap = dense
        .iter()
        .zip(&free)
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max);
    let scale = (0..a.rows())
        .map(|i| a.row(i).iter().zip(y).map(|(x, v)| x.norm() * v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(IdentityGap { gap, scale })
}

/// Runs every identity on every `(N, k)` of the configuration. Reports come
/// back ordered by `N`, then `k`, then identity, regardless of scheduling.
pub fn run_identity_suite(cfg: &SuiteConfig) -> Result<Vec<MultiplierReport>> {
    if cfg.n_list.is_empty() || cfg.k_list.is_empty() || cfg.samples == 0 {
        return domain("identity suite needs nonempty N and k lists and at least one sample");
    }
    for &k in &cfg.k_list {
        ensure_gain(k)?;
    }
    let meshes: Vec<Mesh> = cfg.n_list.iter().map(|&n| Mesh::new(n)).collect::<Result<_>>()?;
    let claim_ops: Vec<ClaimOperators> = meshes.iter().map(ClaimOperators::new).collect();
    let mut jobs = Vec::new();
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        for ki in 0..cfg.k_list.len() {
            for kind in IdentityKind::ALL {
                if kind.needs_dense() && n > cfg.dense_cap {
                    continue;
                }
                jobs.push((ni, n, ki, kind));
            }
        }
    }
    jobs.par_iter()
        .map(|&(ni, n, ki, kind)| run_job(cfg, n, ki, kind, Some(&claim_ops[ni])))
        .collect()
}
