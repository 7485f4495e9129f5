//! Meshes, grid functions and the discrete calculus of the order-reduction
//! scheme.
//!
//! Index conventions (grid index `j`, array index `a`):
//!
//! * state vectors `Y = (y_1, ..., y_{N+1})` live at `a = j - 1`,
//! * shadow vectors `Z = (z_0, ..., z_N)` live at `a = j`,
//! * extended vectors `(u_0, ..., u_{N+1})` live at `a = j`.
//!
//! The bidiagonal kernels below never form `D`, `M` or their inverses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_gain, Result};
use crate::matrix::DenseComplexMatrix;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Equidistant partition `0 = x_0 < x_1 < ... < x_{N+1} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    n: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl Mesh {
    /// Mesh with `n` interior nodes, step `h = 1/(n+1)`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return domain("mesh needs n >= 1 interior nodes");
        }
        let h = 1.0 / (n as f64 + 1.0);
        let mut nodes: Vec<f64> = (0..=n + 1).map(|j| j as f64 * h).collect();
        nodes[n + 1] = 1.0;
        Ok(Self { n, h, nodes })
    }

    /// Number of interior nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Dimension of the state space, `N + 1`.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// Cell midpoint `x_{j+1/2}`.
    pub fn midpoint(&self, j: usize) -> f64 {
        0.5 * (self.nodes[j] + self.nodes[j + 1])
    }

    pub(crate) fn check_state(&self, y: &[Complex64], what: &str) -> Result<()> {
        if y.len() != self.dim() {
            return domain(format!(
                "{what} must have length N+1 = {}, got {}",
                self.dim(),
                y.len()
            ));
        }
        Ok(())
    }
}

/// Which index range a grid vector covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridConvention {
    /// `j = 1..N+1` (unknowns `W_h`, states in `Y_h`).
    State,
    /// `j = 0..N` (shadow element `Z_h`).
    Shadow,
    /// `j = 0..N+1` (padded vectors such as `(0, Y)` or `(Z, z_{N+1})`).
    Extended,
}

impl GridConvention {
    pub fn first_index(self) -> usize {
        match self {
            GridConvention::State => 1,
            GridConvention::Shadow | GridConvention::Extended => 0,
        }
    }

    pub fn len_for(self, mesh: &Mesh) -> usize {
        match self {
            GridConvention::State | GridConvention::Shadow => mesh.dim(),
            GridConvention::Extended => mesh.dim() + 1,
        }
    }
}

/// A complex grid function tagged with its index convention.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGridVector {
    convention: GridConvention,
    values: Vec<Complex64>,
}

impl ComplexGridVector {
    pub fn new(convention: GridConvention, mesh: &Mesh, values: Vec<Complex64>) -> Result<Self> {
        let expected = convention.len_for(mesh);
        if values.len() != expected {
            return domain(format!(
                "{convention:?} vector on N = {} needs {expected} values, got {}",
                mesh.n(),
                values.len()
            ));
        }
        Ok(Self { convention, values })
    }

    pub fn zeros(convention: GridConvention, mesh: &Mesh) -> Self {
        Self {
            convention,
            values: vec![Complex64::new(0.0, 0.0); convention.len_for(mesh)],
        }
    }

    pub fn convention(&self) -> GridConvention {
        self.convention
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at grid index `j`.
    pub fn at(&self, j: usize) -> Complex64 {
        let first = self.convention.first_index();
        assert!(
            j >= first && j - first < self.values.len(),
            "grid index {j} outside {:?} range",
            self.convention
        );
        self.values[j - first]
    }
}

/// `(0, y_1, ..., y_{N+1})`: the state padded with the Dirichlet value `y_0 = 0`.
pub fn extend_state(y: &[Complex64], mesh: &Mesh) -> Result<ComplexGridVector> {
    mesh.check_state(y, "state")?;
    let mut values = Vec::with_capacity(y.len() + 1);
    values.push(Complex64::new(0.0, 0.0));
    values.extend_from_slice(y);
    ComplexGridVector::new(GridConvention::Extended, mesh, values)
}

/// `(z_0, ..., z_N, -i k y_{N+1})`: the shadow element closed by the feedback law.
pub fn extend_shadow(
    z: &ComplexGridVector,
    y_boundary: Complex64,
    k: f64,
    mesh: &Mesh,
) -> Result<ComplexGridVector> {
    if z.convention() != GridConvention::Shadow {
        return domain(format!("expected a shadow vector, got {:?}", z.convention()));
    }
    let mut values = z.values().to_vec();
    values.push(feedback_closure(y_boundary, k));
    ComplexGridVector::new(GridConvention::Extended, mesh, values)
}

/// `z_{N+1} = -i k y_{N+1}`.
pub fn feedback_closure(y_boundary: Complex64, k: f64) -> Complex64 {
    -I * k * y_boundary
}

/// Midpoint averages `u_{j+1/2} = (u_j + u_{j+1}) / 2`.
pub fn average(u: &[Complex64]) -> Result<Vec<Complex64>> {
    if u.len() < 2 {
        return domain(format!("average needs at least 2 values, got {}", u.len()));
    }
    Ok(u.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
}

/// Scaled differences `δ_x u_{j+1/2} = (u_{j+1} - u_j) / h`.
pub fn difference(u: &[Complex64], h: f64) -> Result<Vec<Complex64>> {
    if u.len() < 2 {
        return domain(format!("difference needs at least 2 values, got {}", u.len()));
    }
    if !(h > 0.0) {
        return domain(format!("step h must be positive, got {h}"));
    }
    Ok(u.windows(2).map(|w| (w[1] - w[0]) / h).collect())
}

/// Dense forms of `D_h`, `M_h`, `Σ_h`, `Δ_h`.
///
/// `sigma` and `delta` are `(N+1) x (N+2)`: they map an extended vector to its
/// `N+1` midpoint averages and scaled differences.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeMatrices {
    pub d: DenseComplexMatrix,
    pub m: DenseComplexMatrix,
    pub sigma: DenseComplexMatrix,
    pub delta: DenseComplexMatrix,
}

pub fn build_scheme_matrices(mesh: &Mesh) -> SchemeMatrices {
    let n = mesh.dim();
    let inv_h = 1.0 / mesh.h();
    let half = Complex64::new(0.5, 0.0);
    let mut d = DenseComplexMatrix::zeros(n, n);
    let mut m = DenseComplexMatrix::zeros(n, n);
    let mut sigma = DenseComplexMatrix::zeros(n, n + 1);
    let mut delta = DenseComplexMatrix::zeros(n, n + 1);
    for j in 0..n {
        d[(j, j)] = half;
        if j > 0 {
            d[(j, j - 1)] = half;
        }
        m[(j, j)] = Complex64::new(-inv_h, 0.0);
        if j + 1 < n {
            m[(j, j + 1)] = Complex64::new(inv_h, 0.0);
        }
        sigma[(j, j)] = half;
        sigma[(j, j + 1)] = half;
        delta[(j, j)] = Complex64::new(-inv_h, 0.0);
        delta[(j, j + 1)] = Complex64::new(inv_h, 0.0);
    }
    SchemeMatrices {
        d,
        m,
        sigma,
        delta,
    }
}

/// `D_h y`.
pub(crate) fn apply_d(y: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(y.len());
    let mut prev = Complex64::new(0.0, 0.0);
    for &v in y {
        out.push(0.5 * (prev + v));
        prev = v;
    }
    out
}

/// Solves `D_h x = t` by forward substitution.
pub(crate) fn solve_d(t: &[Complex64]) -> Vec<Complex64> {
    let mut x = Vec::with_capacity(t.len());
    let mut prev = Complex64::new(0.0, 0.0);
    for &v in t {
        let cur = 2.0 * v - prev;
        x.push(cur);
        prev = cur;
    }
    x
}

/// Solves `D_h^T x = r` by back-substitution.
pub(crate) fn solve_dt(r: &[Complex64]) -> Vec<Complex64> {
    let mut x = vec![Complex64::new(0.0, 0.0); r.len()];
    let mut next = Complex64::new(0.0, 0.0);
    for a in (0..r.len()).rev() {
        next = 2.0 * r[a] - next;
        x[a] = next;
    }
    x
}

/// `M_h z`.
pub(crate) fn apply_m(z: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = z.len();
    (0..n)
        .map(|a| {
            let right = if a + 1 < n { z[a + 1] } else { Complex64::new(0.0, 0.0) };
            (right - z[a]) / h
        })
        .collect()
}

/// `M_h^T y`.
pub(crate) fn apply_mt(y: &[Complex64], h: f64) -> Vec<Complex64> {
    let mut prev = Complex64::new(0.0, 0.0);
    y.iter()
        .map(|&v| {
            let out = (prev - v) / h;
            prev = v;
            out
        })
        .collect()
}

/// Weighted inner product `<Y, Ỹ>_{Y_h} = h <D_h Y, D_h Ỹ>`.
pub fn yh_inner(y: &[Complex64], y_tilde: &[Complex64], mesh: &Mesh) -> Result<Complex64> {
    mesh.check_state(y, "first argument")?;
    mesh.check_state(y_tilde, "second argument")?;
    let dy = apply_d(y);
    let dyt = apply_d(y_tilde);
    Ok(mesh.h() * dy.iter().zip(&dyt).map(|(a, b)| a * b.conj()).sum::<Complex64>())
}

/// `||Y||_{Y_h}`.
pub fn yh_norm(y: &[Complex64], mesh: &Mesh) -> Result<f64> {
    mesh.check_state(y, "state")?;
    Ok((mesh.h() * apply_d(y).iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt())
}

/// Shadow element `Z` of `Y`: the solution of
/// `D_h^T Z = -M_h^T Y + (0, ..., 0, i k y_{N+1} / 2)^T`.
pub fn shadow_element(y: &[Complex64], k: f64, mesh: &Mesh) -> Result<ComplexGridVector> {
    ensure_gain(k)?;
    mesh.check_state(y, "state")?;
    let mut rhs = apply_mt(y, mesh.h());
    for v in rhs.iter_mut() {
        *v = -*v;
    }
    let last = y.len() - 1;
    rhs[last] += 0.5 * I * k * y[last];
    ComplexGridVector::new(GridConvention::Shadow, mesh, solve_dt(&rhs))
}

/// Left side minus right side of the triple-product summation-by-parts identity
///
/// `1/4 Σ [Δu σv σw + Δu Δv Δw + σu Δv σw + σu σv Δw] = u_last v_last w_last - u_0 v_0 w_0`
///
/// where `Δu = u_{i+1} - u_i` and `σu = u_{i+1} + u_i`.
pub fn triple_sum_identity_gap(
    u: &[Complex64],
    v: &[Complex64],
    w: &[Complex64],
) -> Result<Complex64> {
    let m = u.len();
    if v.len() != m || w.len() != m {
        return domain(format!(
            "sequence lengths differ: {}, {}, {}",
            u.len(),
            v.len(),
            w.len()
        ));
    }
    if m < 2 {
        return domain(format!("sequences need length >= 2, got {m}"));
    }
    let mut lhs = Complex64::new(0.0, 0.0);
    for i in 0..m - 1 {
        let (du, su) = (u[i + 1] - u[i], u[i + 1] + u[i]);
        let (dv, sv) = (v[i + 1] - v[i], v[i + 1] + v[i]);
        let (dw, sw) = (w[i + 1] - w[i], w[i + 1] + w[i]);
        lhs += du * sv * sw + du * dv * dw + su * dv * sw + su * sv * dw;
    }
    let rhs = u[m - 1] * v[m - 1] * w[m - 1] - u[0] * v[0] * w[0];
    Ok(0.25 * lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
            .prop_map(|v| v.into_iter().map(|(re, im)| c(re, im)).collect())
    }

    #[test]
    fn mesh_definition() {
        let m = Mesh::new(1).unwrap();
        assert_eq!(m.h(), 0.5);
        assert_eq!(m.nodes(), &[0.0, 0.5, 1.0]);
        let m = Mesh::new(3).unwrap();
        assert_eq!(m.h(), 0.25);
        assert_eq!(m.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(matches!(Mesh::new(0), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn mesh_invariants() {
        for n in [1, 2, 7, 10, 99, 1000, 4095] {
            let m = Mesh::new(n).unwrap();
            assert!((m.h() * (n as f64 + 1.0) - 1.0).abs() <= f64::EPSILON);
            assert_eq!(m.nodes()[0], 0.0);
            assert_eq!(*m.nodes().last().unwrap(), 1.0);
            assert!(m.nodes().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn grid_vector_lengths() {
        let mesh = Mesh::new(4).unwrap();
        assert!(ComplexGridVector::new(GridConvention::State, &mesh, vec![c(0.0, 0.0); 5]).is_ok());
        assert!(ComplexGridVector::new(GridConvention::Shadow, &mesh, vec![c(0.0, 0.0); 6]).is_err());
        let e = ComplexGridVector::zeros(GridConvention::Extended, &mesh);
        assert_eq!(e.len(), 6);
        let y: Vec<_> = (1..=5).map(|j| c(j as f64, 0.0)).collect();
        let s = ComplexGridVector::new(GridConvention::State, &mesh, y).unwrap();
        assert_eq!(s.at(1), c(1.0, 0.0));
        assert_eq!(s.at(5), c(5.0, 0.0));
    }

    #[test]
    #[should_panic]
    fn state_vector_has_no_index_zero() {
        let mesh = Mesh::new(2).unwrap();
        ComplexGridVector::zeros(GridConvention::State, &mesh).at(0);
    }

    #[test]
    fn average_examples() {
        let one = c(1.0, 0.0);
        assert_eq!(average(&[one, one, one]).unwrap(), vec![one, one]);
        assert_eq!(average(&[c(0.0, 0.0), one]).unwrap(), vec![c(0.5, 0.0)]);
        assert_eq!(
            average(&[c(0.0, 0.0), c(0.0, 1.0), c(0.0, 2.0)]).unwrap(),
            vec![c(0.0, 0.5), c(0.0, 1.5)]
        );
        assert!(average(&[one]).is_err());
    }

    #[test]
    fn difference_examples() {
        let k = c(2.0, -3.0);
        assert_eq!(difference(&[k, k, k], 0.1).unwrap(), vec![c(0.0, 0.0); 2]);
        assert_eq!(difference(&[c(0.0, 0.0), c(1.0, 0.0)], 0.5).unwrap(), vec![c(2.0, 0.0)]);
        let mesh = Mesh::new(9).unwrap();
        let nodes: Vec<_> = mesh.nodes().iter().map(|&x| c(x, 0.0)).collect();
        for d in difference(&nodes, mesh.h()).unwrap() {
            assert!(close(d, c(1.0, 0.0), 1e-13));
        }
        assert!(difference(&[c(1.0, 0.0)], 0.5).is_err());
        assert!(difference(&[c(1.0, 0.0), c(1.0, 0.0)], 0.0).is_err());
        assert!(difference(&[c(1.0, 0.0), c(1.0, 0.0)], -1.0).is_err());
    }

    #[test]
    fn scheme_matrices_n1() {
        let s = build_scheme_matrices(&Mesh::new(1).unwrap());
        let r = |v: &[f64]| v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>();
        assert_eq!(s.d.entries(), r(&[0.5, 0.0, 0.5, 0.5]).as_slice());
        assert_eq!(s.m.entries(), r(&[-2.0, 2.0, 0.0, -2.0]).as_slice());
        assert_eq!(s.sigma.entries(), r(&[0.5, 0.5, 0.0, 0.0, 0.5, 0.5]).as_slice());
        assert_eq!(s.delta.entries(), r(&[-2.0, 2.0, 0.0, 0.0, -2.0, 2.0]).as_slice());
    }

    #[test]
    fn d_and_m_are_invertible_triangular() {
        for n in [1, 5, 40] {
            let s = build_scheme_matrices(&Mesh::new(n).unwrap());
            for i in 0..=n {
                assert!(s.d[(i, i)].norm() > 0.0 && s.m[(i, i)].norm() > 0.0);
                for j in i + 1..=n {
                    assert_eq!(s.d[(i, j)], c(0.0, 0.0), "D lower triangular");
                }
                for j in 0..i {
                    assert_eq!(s.m[(i, j)], c(0.0, 0.0), "M upper triangular");
                }
            }
        }
    }

    #[test]
    fn bidiagonal_kernels_match_dense_matrices() {
        let mesh = Mesh::new(6).unwrap();
        let s = build_scheme_matrices(&mesh);
        let y: Vec<_> = (0..7).map(|j| c(j as f64 * 0.3 - 1.0, (j * j) as f64 * 0.1)).collect();
        let dense = |m: &DenseComplexMatrix, x: &[Complex64]| m.mul_vec(x).unwrap();
        let transpose = |m: &DenseComplexMatrix| {
            let mut t = DenseComplexMatrix::zeros(m.cols(), m.rows());
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    t[(j, i)] = m[(i, j)];
                }
            }
            t
        };
        let cmp = |a: &[Complex64], b: &[Complex64]| {
            a.iter().zip(b).all(|(x, y)| close(*x, *y, 1e-12 * (1.0 + y.norm())))
        };
        assert!(cmp(&apply_d(&y), &dense(&s.d, &y)));
        assert!(cmp(&apply_m(&y, mesh.h()), &dense(&s.m, &y)));
        assert!(cmp(&apply_mt(&y, mesh.h()), &dense(&transpose(&s.m), &y)));
        assert!(cmp(&dense(&s.d, &solve_d(&y)), &y));
        assert!(cmp(&dense(&transpose(&s.d), &solve_dt(&y)), &y));
    }

    #[test]
    fn yh_inner_examples() {
        let mesh = Mesh::new(1).unwrap();
        let zero = [c(0.0, 0.0); 2];
        assert_eq!(yh_inner(&zero, &zero, &mesh).unwrap(), c(0.0, 0.0));
        // D (0,1) = (0, 1/2); h |.|^2 = 1/2 * 1/4.
        let y = [c(0.0, 0.0), c(1.0, 0.0)];
        assert!(close(yh_inner(&y, &y, &mesh).unwrap(), c(0.125, 0.0), 1e-16));
        assert!(yh_inner(&y, &[c(0.0, 0.0); 3], &mesh).is_err());
    }

    #[test]
    fn shadow_element_n1_hand_value() {
        let mesh = Mesh::new(1).unwrap();
        let z = shadow_element(&[c(0.0, 0.0), c(1.0, 0.0)], 1.0, &mesh).unwrap();
        assert_eq!(z.convention(), GridConvention::Shadow);
        assert!(close(z.at(0), c(-4.0, -1.0), 1e-14));
        assert!(close(z.at(1), c(4.0, 1.0), 1e-14));
        let zero = shadow_element(&[c(0.0, 0.0); 2], 1.0, &mesh).unwrap();
        assert!(zero.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn shadow_element_rejects_bad_gain() {
        let mesh = Mesh::new(2).unwrap();
        let y = [c(1.0, 0.0); 3];
        assert!(shadow_element(&y, 0.0, &mesh).is_err());
        assert!(shadow_element(&y, -1.0, &mesh).is_err());
        assert!(shadow_element(&y[..2], 1.0, &mesh).is_err());
    }

    #[test]
    fn sigma_delta_norms_match_sums() {
        let mesh = Mesh::new(5).unwrap();
        let s = build_scheme_matrices(&mesh);
        let z: Vec<_> = (0..7).map(|j| c((j as f64).sin(), (2.0 * j as f64).cos())).collect();
        let h = mesh.h();
        let sq = |v: &[Complex64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let lhs_sigma = h * sq(&s.sigma.mul_vec(&z).unwrap());
        let lhs_delta = h * sq(&s.delta.mul_vec(&z).unwrap());
        let rhs_sigma = h * sq(&average(&z).unwrap());
        let rhs_delta = h * sq(&difference(&z, h).unwrap());
        assert!((lhs_sigma - rhs_sigma).abs() <= 1e-14 * rhs_sigma);
        assert!((lhs_delta - rhs_delta).abs() <= 1e-14 * rhs_delta);
    }

    #[test]
    fn triple_sum_trivial_cases() {
        let zero = vec![c(0.0, 0.0); 5];
        assert_eq!(triple_sum_identity_gap(&zero, &zero, &zero).unwrap(), c(0.0, 0.0));
        let ones = vec![c(1.0, 0.0); 9];
        assert_eq!(triple_sum_identity_gap(&ones, &ones, &ones).unwrap(), c(0.0, 0.0));
        assert!(triple_sum_identity_gap(&ones, &ones[..3], &ones).is_err());
        assert!(triple_sum_identity_gap(&ones[..1], &ones[..1], &ones[..1]).is_err());
    }

    proptest! {
        #[test]
        fn yh_inner_is_hermitian_positive(
            y in complex_vec(9), yt in complex_vec(9)
        ) {
            let mesh = Mesh::new(8).unwrap();
            let a = yh_inner(&y, &yt, &mesh).unwrap();
            let b = yh_inner(&yt, &y, &mesh).unwrap();
            prop_assert!(close(a.conj(), b, 1e-14));
            let yy = yh_inner(&y, &y, &mesh).unwrap();
            prop_assert!(yy.im.abs() <= 1e-15);
            let norm2: f64 = y.iter().map(|v| v.norm_sqr()).sum();
            if norm2 > 1e-6 {
                prop_assert!(yy.re > 0.0);
            }
        }

        #[test]
        fn average_and_difference_are_linear(
            u in complex_vec(12), v in complex_vec(12),
            ar in -2.0f64..2.0, ai in -2.0f64..2.0
        ) {
            let alpha = c(ar, ai);
            let combo: Vec<_> = u.iter().zip(&v).map(|(a, b)| alpha * a + b).collect();
            let h = 0.125;
            for (op_combo, (op_u, op_v)) in [
                (average(&combo).unwrap(), (average(&u).unwrap(), average(&v).unwrap())),
                (
                    difference(&combo, h).unwrap(),
                    (difference(&u, h).unwrap(), difference(&v, h).unwrap()),
                ),
            ] {
                for i in 0..op_combo.len() {
                    let expect = alpha * op_u[i] + op_v[i];
                    prop_assert!(close(op_combo[i], expect, 1e-12 * (1.0 + expect.norm())));
                }
            }
        }

        #[test]
        fn shadow_element_is_linear(
            y1 in complex_vec(17), y2 in complex_vec(17),
            ar in -2.0f64..2.0, ai in -2.0f64..2.0, k in 0.01f64..100.0
        ) {
            let mesh = Mesh::new(16).unwrap();
            let alpha = c(ar, ai);
            let combo: Vec<_> = y1.iter().zip(&y2).map(|(a, b)| alpha * a + b).collect();
            let z1 = shadow_element(&y1, k, &mesh).unwrap();
            let z2 = shadow_element(&y2, k, &mesh).unwrap();
            let zc = shadow_element(&combo, k, &mesh).unwrap();
            let scale = 1.0 + z1.values().iter().chain(z2.values()).map(|v| v.norm()).fold(0.0, f64::max);
            for a in 0..zc.len() {
                let expect = alpha * z1.values()[a] + z2.values()[a];
                prop_assert!(close(zc.values()[a], expect, 1e-12 * scale * (1.0 + alpha.norm())));
            }
        }

        #[test]
        fn shadow_element_satisfies_averaged_difference_relation(
            y in complex_vec(33), k in 0.01f64..100.0
        ) {
            let mesh = Mesh::new(32).unwrap();
            let z = shadow_element(&y, k, &mesh).unwrap();
            let z_ext = extend_shadow(&z, y[32], k, &mesh).unwrap();
            let y_ext = extend_state(&y, &mesh).unwrap();
            let lhs = average(z_ext.values()).unwrap();
            let rhs = difference(y_ext.values(), mesh.h()).unwrap();
            let scale = rhs.iter().chain(&lhs).map(|v| v.norm()).fold(1.0, f64::max);
            for (a, b) in lhs.iter().zip(&rhs) {
                prop_assert!(close(*a, *b, 1e-12 * scale));
            }
        }

        #[test]
        fn triple_sum_gap_vanishes(
            u in complex_vec(257), v in complex_vec(257), w in complex_vec(257)
        ) {
            let gap = triple_sum_identity_gap(&u, &v, &w).unwrap();
            let mag = |s: &[Complex64]| s.iter().map(|x| x.norm()).fold(0.0, f64::max);
            let scale = mag(&u) * mag(&v) * mag(&w) * 257.0;
            prop_assert!(gap.norm() <= 1e-12 * scale);
        }

        #[test]
        fn sigma_delta_shape_identity(z in complex_vec(12)) {
            let mesh = Mesh::new(10).unwrap();
            let s = build_scheme_matrices(&mesh);
            let h = mesh.h();
            let sq = |v: &[Complex64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>();
            let a = h * sq(&s.sigma.mul_vec(&z).unwrap());
            let b = h * sq(&average(&z).unwrap());
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + b));
            let a = h * sq(&s.delta.mul_vec(&z).unwrap());
            let b = h * sq(&difference(&z, h).unwrap());
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + b));
        }
    }
}
