//! Time integration of `W' = A_h W` with exact energy bookkeeping.
//!
//! The implicit midpoint rule `W+ = W + dt A_h m`, `m = (W + W+)/2`, inherits
//! the dissipation identity of the generator step by step:
//! `E(W+) - E(W) = dt Re <A_h m, m> = -k dt |m_{N+1}|^2`.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::banded::{BandLu, BandMatrix};
use crate::error::{domain, Error, Result};
use crate::grid::Mesh;
use crate::rng::{complex_normal, seeded};
use crate::systems::{Scheme, SemiDiscreteSystem};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

enum Factorization {
    /// Two-field form of the order-reduction scheme: unknowns
    /// `(z_0, m_1, z_1, m_2, ..., z_N, m_{N+1})`.
    Banded(BandLu),
    /// `I - (dt/2) A`.
    Dense {
        lu: PartialPivLu<Complex64>,
    },
}

/// Factorized midpoint step for one `(system, dt)`, reused across steps.
pub struct MidpointStepper<'a> {
    system: &'a SemiDiscreteSystem,
    dt: f64,
    factorization: Factorization,
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        domain(format!("time step must be positive and finite, got {dt}"))
    }
}

impl<'a> MidpointStepper<'a> {
    /// Banded two-field solve for order reduction, dense LU otherwise.
    pub fn new(system: &'a SemiDiscreteSystem, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        let factorization = match system.scheme() {
            Scheme::OrderReduction => Factorization::Banded(two_field_matrix(system, dt).factor().map_err(
                |e| Error::Numerical(format!("midpoint system singular for dt = {dt}: {e}")),
            )?),
            Scheme::Classical => dense_factorization(system, dt)?,
        };
        Ok(Self {
            system,
            dt,
            factorization,
        })
    }

    /// Dense LU of `I - (dt/2) A` for either scheme.
    pub fn dense(system: &'a SemiDiscreteSystem, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        Ok(Self {
            system,
            dt,
            factorization: dense_factorization(system, dt)?,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        self.system.mesh().check_state(w, "state")?;
        let next = match &self.factorization {
            Factorization::Banded(lu) => self.banded_step(lu, w),
            Factorization::Dense { lu } => self.dense_step(lu, w)?,
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "midpoint step produced non-finite values for dt = {}",
                self.dt
            )));
        }
        Ok(next)
    }

    fn banded_step(&self, lu: &BandLu, w: &[Complex64]) -> Vec<Complex64> {
        let dim = w.len();
        let mut rhs = vec![ZERO; 2 * dim];
        let mut prev = ZERO;
        for (j, &v) in w.iter().enumerate() {
            rhs[2 * j] = 0.5 * (prev + v);
            prev = v;
        }
        lu.solve_in_place(&mut rhs);
        (0..dim).map(|j| 2.0 * rhs[2 * j + 1] - w[j]).collect()
    }

    fn dense_step(&self, lu: &PartialPivLu<Complex64>, w: &[Complex64]) -> Result<Vec<Complex64>> {
        let aw = self.system.apply(w)?;
        let half = 0.5 * self.dt;
        let mut rhs = Mat::from_fn(w.len(), 1, |i, _| w[i] + half * aw[i]);
        lu.solve_in_place(rhs.as_mut());
        Ok((0..w.len()).map(|i| rhs[(i, 0)]).collect())
    }
}

fn dense_factorization(system: &SemiDiscreteSystem, dt: f64) -> Result<Factorization> {
    let a = system.generator();
    let half = 0.5 * dt;
    let m = Mat::from_fn(a.rows(), a.cols(), |i, j| {
        let d = if i == j { Complex64::new(1.0, 0.0) } else { ZERO };
        d - half * a[(i, j)]
    });
    let lu = m.partial_piv_lu();
    let diag_ok = (0..a.rows()).all(|i| {
        let u = lu.U()[(i, i)];
        u.norm() > 0.0 && u.is_finite()
    });
    if !diag_ok {
        return Err(Error::Numerical(format!("I - (dt/2) A is singular for dt = {dt}")));
    }
    Ok(Factorization::Dense { lu })
}

/// Rows `2j` and `2j+1` are, for cell `j = 0..=N` (with `m_0 = 0` and
/// `ẑ_{N+1} = -i k m_{N+1}`):
///
/// * `m_{j+1/2} + i dt/(2h) (ẑ_{j+1} - z_j) = w_{j+1/2}`,
/// * `(z_j + ẑ_{j+1})/2 - (m_{j+1} - m_j)/h = 0`.
fn two_field_matrix(system: &SemiDiscreteSystem, dt: f64) -> BandMatrix {
    let mesh: &Mesh = system.mesh();
    let (h, k) = (mesh.h(), system.k());
    let n = mesh.n();
    let size = 2 * (n + 1);
    let z = |j: usize| 2 * j;
    let m = |j: usize| 2 * j - 1;
    let mut a = BandMatrix::zeros(size, 2, 2);
    let half = Complex64::new(0.5, 0.0);
    let c = I * (dt / (2.0 * h));
    for j in 0..=n {
        let (r1, r2) = (2 * j, 2 * j + 1);
        if j >= 1 {
            a.add(r1, m(j), half);
            a.add(r2, m(j), Complex64::new(1.0 / h, 0.0));
        }
        a.add(r1, m(j + 1), half);
        a.add(r1, z(j), -c);
        a.add(r2, z(j), half);
        a.add(r2, m(j + 1), Complex64::new(-1.0 / h, 0.0));
        if j < n {
            a.add(r1, z(j + 1), c);
            a.add(r2, z(j + 1), half);
        } else {
            a.add(r1, m(j + 1), c * (-I * k));
            a.add(r2, m(j + 1), half * (-I * k));
        }
    }
    a
}

/// One implicit midpoint step.
pub fn step_midpoint(system: &SemiDiscreteSystem, w: &[Complex64], dt: f64) -> Result<Vec<Complex64>> {
    MidpointStepper::new(system, dt)?.step(w)
}

/// `E+ - E + k dt |m_{N+1}|^2` for one step `w -> next`.
pub fn step_gap(system: &SemiDiscreteSystem, w: &[Complex64], next: &[Complex64], dt: f64) -> Result<f64> {
    let last = w.len() - 1;
    let mid = 0.5 * (w[last] + next[last]);
    Ok(system.energy(next)? - system.energy(w)? + system.k() * dt * mid.norm_sqr())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// `w_{N+1}(t)` at each recorded time.
    pub boundary_values: Vec<Complex64>,
    /// Per-step residual of the discrete energy identity; one shorter than `times`.
    pub step_gaps: Vec<f64>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_abs_step_gap(&self) -> f64 {
        self.step_gaps.iter().map(|g| g.abs()).fold(0.0, f64::max)
    }

    /// Largest increase `E(t_{i+1}) - E(t_i)`, or 0 for a non-increasing trace.
    pub fn max_energy_increase(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    /// Implicit midpoint; energy identity exact per step.
    #[default]
    Midpoint,
    /// `e^{t A}` from the eigendecomposition of the transported generator;
    /// resolves the decay of every mode, including stiff ones.
    Exponential,
}

/// Preset initial states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// Complex standard normal entries.
    Random { seed: u64 },
    /// `sin(π x_j)` at `j = 1..=N+1`.
    Sine,
    Values(Vec<Complex64>),
}

impl InitialData {
    pub fn realize(&self, mesh: &Mesh) -> Result<Vec<Complex64>> {
        match self {
            InitialData::Random { seed } => Ok(complex_normal(&mut seeded(*seed), mesh.dim())),
            InitialData::Sine => Ok(mesh.nodes()[1..]
                .iter()
                .map(|&x| Complex64::new((std::f64::consts::PI * x).sin(), 0.0))
                .collect()),
            InitialData::Values(v) => {
                mesh.check_state(v, "initial data")?;
                Ok(v.clone())
            }
        }
    }
}

fn step_count(dt: f64, t_final: f64) -> Result<usize> {
    check_dt(dt)?;
    if !(t_final >= dt) || !t_final.is_finite() {
        return domain(format!("t_final must be finite and >= dt, got {t_final}"));
    }
    Ok((t_final / dt).round() as usize)
}

/// Midpoint simulation from `w0` up to `t_final`.
pub fn simulate(system: &SemiDiscreteSystem, w0: &[Complex64], dt: f64, t_final: f64) -> Result<EnergyTrace> {
    simulate_with(system, w0, dt, t_final, Propagator::Midpoint)
}

pub fn simulate_with(
    system: &SemiDiscreteSystem,
    w0: &[Complex64],
    dt: f64,
    t_final: f64,
    propagator: Propagator,
) -> Result<EnergyTrace> {
    system.mesh().check_state(w0, "initial data")?;
    let steps = step_count(dt, t_final)?;
    let mut trace = EnergyTrace {
        times: Vec::with_capacity(steps + 1),
        energies: Vec::with_capacity(steps + 1),
        boundary_values: Vec::with_capacity(steps + 1),
        step_gaps: Vec::with_capacity(steps),
    };
    let last = w0.len() - 1;
    let record = |trace: &mut EnergyTrace, i: usize, w: &[Complex64]| -> Result<()> {
        trace.times.push(i as f64 * dt);
        trace.energies.push(system.energy(w)?);
        trace.boundary_values.push(w[last]);
        Ok(())
    };
    record(&mut trace, 0, w0)?;
    let mut w = w0.to_vec();
    match propagator {
        Propagator::Midpoint => {
            let stepper = MidpointStepper::new(system, dt)?;
            for i in 1..=steps {
                let next = stepper.step(&w)?;
                trace.step_gaps.push(step_gap(system, &w, &next, dt)?);
                record(&mut trace, i, &next)?;
                w = next;
            }
        }
        Propagator::Exponential => {
            let prop = ExponentialPropagator::new(system, w0)?;
            for i in 1..=steps {
                let next = prop.at(i as f64 * dt)?;
                trace.step_gaps.push(step_gap(system, &w, &next, dt)?);
                record(&mut trace, i, &next)?;
                w = next;
            }
        }
    }
    Ok(trace)
}

/// `W(t) = S^{-1} V e^{Λ t} V^{-1} S W0` with `G = V Λ V^{-1}`.
struct ExponentialPropagator<'a> {
    system: &'a SemiDiscreteSystem,
    values: Vec<Complex64>,
    vectors: Mat<Complex64>,
    coefficients: Vec<Complex64>,
}

impl<'a> ExponentialPropagator<'a> {
    fn new(system: &'a SemiDiscreteSystem, w0: &[Complex64]) -> Result<Self> {
        let evd = crate::spectral::eigen_decomposition(system.transported_generator())?;
        let n = evd.values.len();
        let vectors = evd.vectors.to_faer();
        let x0 = system.to_natural_coordinates(w0)?;
        let mut c = Mat::from_fn(n, 1, |i, _| x0[i]);
        vectors.partial_piv_lu().solve_in_place(c.as_mut());
        let coefficients: Vec<Complex64> = (0..n).map(|i| c[(i, 0)]).collect();
        if coefficients.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("eigenvector basis is singular".into()));
        }
        Ok(Self {
            system,
            values: evd.values,
            vectors,
            coefficients,
        })
    }

    fn at(&self, t: f64) -> Result<Vec<Complex64>> {
        let n = self.values.len();
        let modal: Vec<Complex64> = self
            .values
            .iter()
            .zip(&self.coefficients)
            .map(|(l, c)| (l * t).exp() * c)
            .collect();
        let x: Vec<Complex64> = (0..n)
            .map(|i| (0..n).map(|j| self.vectors[(i, j)] * modal[j]).sum())
            .collect();
        self.system.from_natural_coordinates(&x)
    }
}

/// Least-squares slope of `ln E` on `[t_start, t_end]`, negated and halved,
/// so that `E ≈ e^{-2 ω t}`.
pub fn fit_decay_rate(trace: &EnergyTrace, t_start: f64, t_end: f64) -> Result<f64> {
    if !(t_start < t_end) {
        return domain(format!("fit window [{t_start}, {t_end}] is empty"));
    }
    let window: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.energies)
        .filter(|(&t, _)| t >= t_start && t <= t_end)
        .map(|(&t, &e)| (t, e))
        .collect();
    if window.len() < 10 {
        return domain(format!(
            "fit window [{t_start}, {t_end}] holds {} samples, need at least 10",
            window.len()
        ));
    }
    if window.iter().any(|&(_, e)| !(e > 0.0)) {
        return domain(format!(
            "energy vanishes inside [{t_start}, {t_end}]; shrink the fit window"
        ));
    }
    let n = window.len() as f64;
    let tm = window.iter().map(|p| p.0).sum::<f64>() / n;
    let lm = window.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, e) in &window {
        sxy += (t - tm) * (e.ln() - lm);
        sxx += (t - tm) * (t - tm);
    }
    Ok(-0.5 * sxy / sxx)
}
