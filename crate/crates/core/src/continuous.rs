//! Reference quantities for the continuous closed loop
//! `A f = -i f''` on `D(A) = { f : f(0) = 0, f'(1) = -i k f(1) }`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_gain, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Minimum sample count accepted by [`apply_continuous_inverse`].
pub const MIN_INVERSE_SAMPLES: usize = 33;

/// Samples of a complex function on a uniform grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    grid: Vec<f64>,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if grid.len() != values.len() {
            return domain(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            ));
        }
        if grid.len() < 2 {
            return domain("a sampled function needs at least 2 points");
        }
        if grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 {
            return domain("sample grid must start at 0 and end at 1");
        }
        let step = 1.0 / (grid.len() - 1) as f64;
        if grid
            .iter()
            .enumerate()
            .any(|(j, &x)| (x - j as f64 * step).abs() > 1e-12)
        {
            return domain("sample grid must be uniform");
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at `points` equispaced points of `[0, 1]`.
    pub fn from_fn(points: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        if points < 2 {
            return domain("a sampled function needs at least 2 points");
        }
        let step = 1.0 / (points - 1) as f64;
        let mut grid: Vec<f64> = (0..points).map(|j| j as f64 * step).collect();
        grid[points - 1] = 1.0;
        let values = grid.iter().map(|&x| f(x)).collect();
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.len() - 1) as f64
    }
}

fn cumulative_trapezoid(values: &[Complex64], dx: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = Complex64::new(0.0, 0.0);
    out.push(acc);
    for w in values.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// `g = A^{-1} f`, i.e. `-i g'' = f`, `g(0) = 0`, `g'(1) = -i k g(1)`.
///
/// With `F0 = ∫_0^x f` and `F1 = ∫_0^x τ f(τ) dτ`,
/// `g(x) = a x + i (x F0(x) - F1(x))` where
/// `a (1 + i k) = -i F0(1) + k (F0(1) - F1(1))`.
pub fn apply_continuous_inverse(f: &SampledFunction, k: f64) -> Result<SampledFunction> {
    ensure_gain(k)?;
    if f.len() < MIN_INVERSE_SAMPLES {
        return domain(format!(
            "need at least {MIN_INVERSE_SAMPLES} samples, got {}",
            f.len()
        ));
    }
    let dx = f.step();
    let f0 = cumulative_trapezoid(f.values(), dx);
    let weighted: Vec<Complex64> = f.grid().iter().zip(f.values()).map(|(&x, &v)| x * v).collect();
    let f1 = cumulative_trapezoid(&weighted, dx);
    let last = f.len() - 1;
    let a = (-I * f0[last] + k * (f0[last] - f1[last])) / Complex64::new(1.0, k);
    let values = f
        .grid()
        .iter()
        .zip(f0.iter().zip(&f1))
        .map(|(&x, (p0, p1))| a * x + I * (x * p0 - p1))
        .collect();
    Ok(SampledFunction {
        grid: f.grid().to_vec(),
        values,
    })
}

/// `(1/2) ∫_0^1 |w|^2` by the trapezoid rule.
pub fn continuous_energy(w: &SampledFunction) -> f64 {
    let sq: Vec<Complex64> = w.values().iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect();
    0.5 * cumulative_trapezoid(&sq, w.step())[w.len() - 1].re
}

/// An eigenvalue `λ = -i μ^2` of the continuous generator, `μ` being a root of
/// `μ cosh μ + i k sinh μ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRoot {
    pub mu: Complex64,
    pub lambda: Complex64,
    pub residual: f64,
}

pub const NEWTON_MAX_ITERATIONS: usize = 100;
const CONTINUATION_STEPS: usize = 200;

fn characteristic(mu: Complex64, k: f64) -> (Complex64, Complex64) {
    let (c, s) = (mu.cosh(), mu.sinh());
    let f = mu * c + I * k * s;
    let df = c + mu * s + I * k * c;
    (f, df)
}

fn tolerance(mu: Complex64) -> f64 {
    1e-12 * (1.0 + mu.norm() * mu.re.abs().exp())
}

fn newton(seed: Complex64, k: f64) -> Option<Complex64> {
    let mut mu = seed;
    for _ in 0..NEWTON_MAX_ITERATIONS {
        let (f, df) = characteristic(mu, k);
        if f.norm() <= tolerance(mu) {
            return Some(mu);
        }
        if df.norm() == 0.0 || !df.is_finite() {
            return None;
        }
        mu -= f / df;
        if !mu.is_finite() {
            return None;
        }
    }
    let (f, _) = characteristic(mu, k);
    (f.norm() <= tolerance(mu)).then_some(mu)
}

/// Tracks the root leaving `seed` at `k = 0` up to the requested gain.
fn continuation(seed: Complex64, k: f64) -> Option<Complex64> {
    let mut mu = seed;
    for step in 1..=CONTINUATION_STEPS {
        let kk = k * step as f64 / CONTINUATION_STEPS as f64;
        mu = newton(mu, kk)?;
    }
    Some(mu)
}

fn root(mu: Complex64, k: f64) -> CharacteristicRoot {
    CharacteristicRoot {
        mu,
        lambda: -I * mu * mu,
        residual: characteristic(mu, k).0.norm(),
    }
}

/// The first `count` eigenvalues, seeded from the conservative roots
/// `μ_n = i (n + 1/2) π`, `n = 0..count`. A seed whose Newton run stalls or
/// lands on a root already found is retried by continuation in `k`.
pub fn characteristic_roots(k: f64, count: usize) -> Result<Vec<CharacteristicRoot>> {
    if !(k >= 0.0 && k.is_finite()) {
        return domain(format!("gain k must be nonnegative and finite, got {k}"));
    }
    if count == 0 {
        return domain("count must be at least 1");
    }
    let seeds: Vec<Complex64> = (0..count)
        .map(|n| I * ((n as f64 + 0.5) * std::f64::consts::PI))
        .collect();
    let direct: Vec<Option<Complex64>> = seeds.par_iter().map(|&s| newton(s, k)).collect();

    let mut roots: Vec<Complex64> = Vec::with_capacity(count);
    for (&seed, first) in seeds.iter().zip(direct) {
        let distinct = |mu: &Complex64| roots.iter().all(|r| (r - mu).norm() > 1e-6);
        let mu = match first.filter(|m| distinct(m)) {
            Some(mu) => mu,
            None => continuation(seed, k)
                .filter(|m| distinct(m))
                .ok_or(Error::NonConvergence {
                    seed,
                    iterations: NEWTON_MAX_ITERATIONS,
                })?,
        };
        roots.push(mu);
    }
    Ok(roots.into_iter().map(|mu| root(mu, k)).collect())
}

/// `max Re λ` over the first `count` characteristic roots.
pub fn continuous_abscissa(k: f64, count: usize) -> Result<f64> {
    Ok(characteristic_roots(k, count)?
        .iter()
        .map(|r| r.lambda.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Three-point differencing reproduces the trapezoid construction exactly,
    // so the residual oracle uses the five-point stencil.
    fn interior_residual(g: &SampledFunction, f: &SampledFunction) -> f64 {
        let dx = g.step();
        let v = g.values();
        (2..v.len() - 2)
            .map(|j| {
                let d2 = (-v[j + 2] + 16.0 * v[j + 1] - 30.0 * v[j] + 16.0 * v[j - 1] - v[j - 2])
                    / (12.0 * dx * dx);
                (-I * d2 - f.values()[j]).norm()
            })
            .fold(0.0, f64::max)
    }

    fn three_point_residual(g: &SampledFunction, f: &SampledFunction) -> f64 {
        let dx = g.step();
        let v = g.values();
        (1..v.len() - 1)
            .map(|j| (-I * (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (dx * dx) - f.values()[j]).norm())
            .fold(0.0, f64::max)
    }

    fn boundary_residual(g: &SampledFunction, k: f64) -> f64 {
        let v = g.values();
        let n = v.len() - 1;
        let slope = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * g.step());
        (slope + I * k * v[n]).norm()
    }

    #[test]
    fn sampled_function_validation() {
        assert!(SampledFunction::new(vec![0.0, 0.5, 1.0], vec![c(0.0, 0.0); 2]).is_err());
        assert!(SampledFunction::new(vec![0.0, 0.3, 1.0], vec![c(0.0, 0.0); 3]).is_err());
        assert!(SampledFunction::new(vec![0.1, 0.55, 1.0], vec![c(0.0, 0.0); 3]).is_err());
        assert!(SampledFunction::new(vec![0.0, 0.5, 1.0], vec![c(0.0, 0.0); 3]).is_ok());
    }

    #[test]
    fn inverse_of_zero_is_zero() {
        let f = SampledFunction::from_fn(65, |_| c(0.0, 0.0)).unwrap();
        let g = apply_continuous_inverse(&f, 1.0).unwrap();
        assert!(g.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn inverse_argument_errors() {
        let f = SampledFunction::from_fn(32, |_| c(1.0, 0.0)).unwrap();
        assert!(apply_continuous_inverse(&f, 1.0).is_err());
        let f = SampledFunction::from_fn(33, |_| c(1.0, 0.0)).unwrap();
        assert!(apply_continuous_inverse(&f, 1.0).is_ok());
        assert!(apply_continuous_inverse(&f, 0.0).is_err());
    }

    #[test]
    fn inverse_of_constant_is_exact() {
        // f = 1: g = a x + i x^2 / 2, trapezoid is exact for F0 and F1 up to O(dx^2) in F1 only.
        let f = SampledFunction::from_fn(129, |_| c(1.0, 0.0)).unwrap();
        for k in [0.1, 1.0, 7.0] {
            let g = apply_continuous_inverse(&f, k).unwrap();
            assert_eq!(g.values()[0], c(0.0, 0.0));
            assert!(interior_residual(&g, &f) < 1e-6);
            assert!(three_point_residual(&g, &f) < 1e-6);
            assert!(boundary_residual(&g, k) < 1e-3);
        }
    }

    #[test]
    fn inverse_residual_is_second_order() {
        let f_of = |x: f64| c((PI * x).sin(), (3.0 * x).cos());
        let mut prev = None;
        for points in [65, 129, 257, 513] {
            let f = SampledFunction::from_fn(points, f_of).unwrap();
            let g = apply_continuous_inverse(&f, 1.0).unwrap();
            assert_eq!(g.values()[0], c(0.0, 0.0));
            let r = interior_residual(&g, &f);
            if let Some(p) = prev {
                let ratio: f64 = p / r;
                assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
            }
            prev = Some(r);
        }
    }

    #[test]
    fn inverse_converges_to_closed_form() {
        // f = sin(πx): F0 = (1 - cos πx)/π, F1 = (sin πx - πx cos πx)/π^2.
        let k = 1.0;
        let f0 = |x: f64| (1.0 - (PI * x).cos()) / PI;
        let f1 = |x: f64| ((PI * x).sin() - PI * x * (PI * x).cos()) / (PI * PI);
        let a = (-I * f0(1.0) + k * (f0(1.0) - f1(1.0))) / c(1.0, k);
        let exact = |x: f64| a * x + I * (x * f0(x) - f1(x));
        let err = |points: usize| {
            let f = SampledFunction::from_fn(points, |x| c((PI * x).sin(), 0.0)).unwrap();
            let g = apply_continuous_inverse(&f, k).unwrap();
            g.grid()
                .iter()
                .zip(g.values())
                .map(|(&x, v)| (v - exact(x)).norm())
                .fold(0.0, f64::max)
        };
        let ratio = err(129) / err(257);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn energy_examples() {
        let zero = SampledFunction::from_fn(17, |_| c(0.0, 0.0)).unwrap();
        assert_eq!(continuous_energy(&zero), 0.0);
        let one = SampledFunction::from_fn(17, |_| c(1.0, 0.0)).unwrap();
        assert!((continuous_energy(&one) - 0.5).abs() <= 1e-15);
        let s = SampledFunction::from_fn(1025, |x| c((PI * x).sin(), 0.0)).unwrap();
        assert!((continuous_energy(&s) - 0.25).abs() <= 1e-6);
    }

    #[test]
    fn conservative_roots_are_closed_form() {
        let roots = characteristic_roots(0.0, 12).unwrap();
        for (n, r) in roots.iter().enumerate() {
            let expect = ((n as f64 + 0.5) * PI).powi(2);
            assert!(r.lambda.re.abs() <= 1e-9 * expect);
            assert!((r.lambda.im - expect).abs() <= 1e-12 * expect);
        }
    }

    #[test]
    fn damped_roots_satisfy_the_equation_and_lie_left() {
        for k in [0.1, 1.0, 10.0] {
            let roots = characteristic_roots(k, 20).unwrap();
            assert_eq!(roots.len(), 20);
            for r in &roots {
                assert!(r.residual <= tolerance(r.mu), "{r:?}");
                assert!(r.lambda.re < 0.0, "k = {k}: {r:?}");
            }
            for i in 0..roots.len() {
                for j in 0..i {
                    assert!((roots[i].mu - roots[j].mu).norm() > 1e-6);
                }
            }
        }
    }

    #[test]
    fn rightmost_root_at_unit_gain() {
        let roots = characteristic_roots(1.0, 50).unwrap();
        let first = roots[0];
        assert!((first.mu - c(-0.5455, 1.7793)).norm() < 1e-3, "{first:?}");
        let abscissa = continuous_abscissa(1.0, 50).unwrap();
        assert!((abscissa + 1.9413113).abs() < 1e-6, "{abscissa}");
    }

    #[test]
    fn root_arguments() {
        assert!(characteristic_roots(-1.0, 3).is_err());
        assert!(characteristic_roots(1.0, 0).is_err());
    }
}
