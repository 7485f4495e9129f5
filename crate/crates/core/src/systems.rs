//! The order-reduction generator `A_h`, the classical generator `Â_h`, and
//! the discrete energy.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_gain, Error, Result};
use crate::grid::{self, apply_d, apply_m, apply_mt, solve_d, Mesh};
use crate::identities::IdentityGap;
use crate::matrix::DenseComplexMatrix;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    OrderReduction,
    Classical,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::OrderReduction, Scheme::Classical];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::OrderReduction => "order_reduction",
            Scheme::Classical => "classical",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "order_reduction" | "or" => Ok(Scheme::OrderReduction),
            "classical" | "cl" => Ok(Scheme::Classical),
            other => domain(format!("unknown scheme {other:?}")),
        }
    }
}

/// `A_h Y = D^{-1} [ -i M Z - (0, ..., 0, k y_{N+1} / h) ]` with `Z` the
/// shadow element of `Y`. Two bidiagonal solves and one bidiagonal product.
pub fn apply_order_reduction(y: &[Complex64], k: f64, mesh: &Mesh) -> Result<Vec<Complex64>> {
    let z = grid::shadow_element(y, k, mesh)?;
    let mut t = apply_m(z.values(), mesh.h());
    for v in t.iter_mut() {
        *v *= -I;
    }
    let last = t.len() - 1;
    t[last] -= k / mesh.h() * y[last];
    Ok(solve_d(&t))
}

/// `Â_h Y = i M (M^T Y - (0, ..., 0, i k y_{N+1} / 2)) - (0, ..., 0, k y_{N+1} / h)`.
pub fn apply_classical(y: &[Complex64], k: f64, mesh: &Mesh) -> Result<Vec<Complex64>> {
    ensure_gain(k)?;
    mesh.check_state(y, "state")?;
    let last = y.len() - 1;
    let mut r = apply_mt(y, mesh.h());
    r[last] -= 0.5 * I * k * y[last];
    let mut out = apply_m(&r, mesh.h());
    for v in out.iter_mut() {
        *v *= I;
    }
    out[last] -= k / mesh.h() * y[last];
    Ok(out)
}

pub fn apply_generator(
    scheme: Scheme,
    y: &[Complex64],
    k: f64,
    mesh: &Mesh,
) -> Result<Vec<Complex64>> {
    match scheme {
        Scheme::OrderReduction => apply_order_reduction(y, k, mesh),
        Scheme::Classical => apply_classical(y, k, mesh),
    }
}

fn basis(n: usize, j: usize) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    e[j] = Complex64::new(1.0, 0.0);
    e
}

/// Dense generator, column `j` being the applier at `e_j`.
pub fn assemble_generator(scheme: Scheme, k: f64, mesh: &Mesh) -> Result<DenseComplexMatrix> {
    ensure_gain(k)?;
    let n = mesh.dim();
    DenseComplexMatrix::from_columns(n, n, |j| apply_generator(scheme, &basis(n, j), k, mesh))
}

/// A scheme on a mesh with gain `k`. Dense forms are assembled on first use.
#[derive(Debug)]
pub struct SemiDiscreteSystem {
    scheme: Scheme,
    mesh: Mesh,
    k: f64,
    generator: OnceLock<DenseComplexMatrix>,
    transported: OnceLock<DenseComplexMatrix>,
}

impl Clone for SemiDiscreteSystem {
    fn clone(&self) -> Self {
        Self {
            scheme: self.scheme,
            mesh: self.mesh.clone(),
            k: self.k,
            generator: self.generator.clone(),
            transported: self.transported.clone(),
        }
    }
}

impl SemiDiscreteSystem {
    pub fn new(scheme: Scheme, n: usize, k: f64) -> Result<Self> {
        ensure_gain(k)?;
        Ok(Self {
            scheme,
            mesh: Mesh::new(n)?,
            k,
            generator: OnceLock::new(),
            transported: OnceLock::new(),
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    /// Matrix-free product with the generator.
    pub fn apply(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        apply_generator(self.scheme, y, self.k, &self.mesh)
    }

    /// Dense generator `A_h` (or `Â_h`).
    pub fn generator(&self) -> &DenseComplexMatrix {
        self.generator.get_or_init(|| {
            assemble_generator(self.scheme, self.k, &self.mesh)
                .expect("gain and mesh validated at construction")
        })
    }

    /// `G = S A S^{-1}`, the generator in coordinates where the scheme's
    /// natural norm is the Euclidean one (`S = sqrt(h) D` for order
    /// reduction, `S = sqrt(h) I` for the classical scheme).
    pub fn transported_generator(&self) -> &DenseComplexMatrix {
        self.transported.get_or_init(|| match self.scheme {
            Scheme::Classical => self.generator().clone(),
            Scheme::OrderReduction => {
                let n = self.dim();
                DenseComplexMatrix::from_columns(n, n, |j| {
                    let y = solve_d(&basis(n, j));
                    Ok(apply_d(&self.apply(&y)?))
                })
                .expect("gain and mesh validated at construction")
            }
        })
    }

    /// `S Y`.
    pub fn to_natural_coordinates(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        self.mesh.check_state(y, "state")?;
        let s = self.mesh.h().sqrt();
        Ok(match self.scheme {
            Scheme::OrderReduction => apply_d(y).into_iter().map(|v| s * v).collect(),
            Scheme::Classical => y.iter().map(|v| s * v).collect(),
        })
    }

    /// `S^{-1} X`.
    pub fn from_natural_coordinates(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.mesh.check_state(x, "coordinates")?;
        let s = 1.0 / self.mesh.h().sqrt();
        Ok(match self.scheme {
            Scheme::OrderReduction => solve_d(x).into_iter().map(|v| s * v).collect(),
            Scheme::Classical => x.iter().map(|v| s * v).collect(),
        })
    }

    /// Energy in the scheme's own norm: `E_h` for order reduction,
    /// `(h/2) Σ |w_j|^2` for the classical scheme.
    pub fn energy(&self, w: &[Complex64]) -> Result<f64> {
        match self.scheme {
            Scheme::OrderReduction => discrete_energy(w, &self.mesh),
            Scheme::Classical => {
                self.mesh.check_state(w, "state")?;
                Ok(0.5 * self.mesh.h() * w.iter().map(|v| v.norm_sqr()).sum::<f64>())
            }
        }
    }

    pub fn dissipation_check(&self, y: &[Complex64]) -> Result<IdentityGap> {
        dissipation_check(y, self.k, &self.mesh, self.scheme)
    }
}

/// `Re <A Y, Y> + k |y_{N+1}|^2`, in the `Y_h` product for order reduction
/// and the `h`-scaled Euclidean product for the classical scheme.
pub fn dissipation_gap(y: &[Complex64], k: f64, mesh: &Mesh, scheme: Scheme) -> Result<f64> {
    let ay = apply_generator(scheme, y, k, mesh)?;
    let last = y.len() - 1;
    Ok(quadratic_form(scheme, &ay, y, mesh)?.re + k * y[last].norm_sqr())
}

/// The dissipation gap together with the scale
/// `||Y|| ||A Y|| + k |y_{N+1}|^2` it should be compared against.
pub fn dissipation_check(
    y: &[Complex64],
    k: f64,
    mesh: &Mesh,
    scheme: Scheme,
) -> Result<IdentityGap> {
    let ay = apply_generator(scheme, y, k, mesh)?;
    let last = y.len() - 1;
    let boundary = k * y[last].norm_sqr();
    let form = quadratic_form(scheme, &ay, y, mesh)?;
    let norm = |v: &[Complex64]| quadratic_form(scheme, v, v, mesh).map(|q| q.re.max(0.0).sqrt());
    Ok(IdentityGap {
        gap: (form.re + boundary).abs(),
        scale: norm(y)? * norm(&ay)? + boundary,
    })
}

fn quadratic_form(
    scheme: Scheme,
    a: &[Complex64],
    b: &[Complex64],
    mesh: &Mesh,
) -> Result<Complex64> {
    match scheme {
        Scheme::OrderReduction => grid::yh_inner(a, b, mesh),
        Scheme::Classical => {
            mesh.check_state(a, "first argument")?;
            mesh.check_state(b, "second argument")?;
            Ok(mesh.h() * a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<Complex64>())
        }
    }
}

/// `E_h(W) = (h/2) Σ_{j=0}^{N} |w_{j+1/2}|^2` with `w_0 = 0`.
pub fn discrete_energy(w: &[Complex64], mesh: &Mesh) -> Result<f64> {
    let ext = grid::extend_state(w, mesh)?;
    let mids = grid::average(ext.values())?;
    Ok(0.5 * mesh.h() * mids.iter().map(|v| v.norm_sqr()).sum::<f64>())
}
