//! Banded LU with partial pivoting (the `gbtrf`/`gbtrs` pattern).

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square matrix with `kl` sub- and `ku` superdiagonals. Row `i` stores
/// columns `i - kl ..= i + kl + ku`; the extra `kl` slots receive fill-in
/// from row interchanges.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub(crate) fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![ZERO; n * width],
        }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let lo = i as isize - self.kl as isize;
        let off = j as isize - lo;
        (j < self.n && off >= 0 && (off as usize) < self.width).then(|| i * self.width + off as usize)
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> Complex64 {
        self.slot(i, j).map_or(ZERO, |s| self.data[s])
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside the band"));
        &mut self.data[s]
    }

    /// Adds `v` at `(i, j)`, which must lie within the declared bandwidths.
    pub(crate) fn add(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "({i}, {j}) outside bandwidths ({}, {})",
            self.kl,
            self.ku
        );
        *self.at_mut(i, j) += v;
    }

    pub(crate) fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut pivots = Vec::with_capacity(n);
        let mut lower = vec![ZERO; n * kl];
        for i in 0..n {
            let last_row = (i + kl).min(n - 1);
            let last_col = (i + kl + ku).min(n - 1);
            let mut p = i;
            let mut best = self.get(i, i).norm();
            for r in i + 1..=last_row {
                let v = self.get(r, i).norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::Numerical(format!("banded matrix is singular at column {i}")));
            }
            if p != i {
                for c in i..=last_col {
                    let a = self.get(i, c);
                    let b = self.get(p, c);
                    *self.at_mut(i, c) = b;
                    *self.at_mut(p, c) = a;
                }
            }
            pivots.push(p);
            let diag = self.get(i, i);
            for r in i + 1..=last_row {
                let l = self.get(r, i) / diag;
                lower[i * kl + (r - i - 1)] = l;
                if l == ZERO {
                    continue;
                }
                *self.at_mut(r, i) = ZERO;
                for c in i + 1..=last_col {
                    let u = self.get(i, c);
                    *self.at_mut(r, c) -= l * u;
                }
            }
        }
        Ok(BandLu {
            upper: self,
            lower,
            pivots,
        })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandLu {
    upper: BandMatrix,
    lower: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl BandLu {
    pub(crate) fn solve_in_place(&self, b: &mut [Complex64]) {
        let u = &self.upper;
        let (n, kl) = (u.n, u.kl);
        assert_eq!(b.len(), n, "right-hand side length");
        for i in 0..n {
            b.swap(i, self.pivots[i]);
            let bi = b[i];
            for r in i + 1..=(i + kl).min(n - 1) {
                b[r] -= self.lower[i * kl + (r - i - 1)] * bi;
            }
        }
        let reach = u.kl + u.ku;
        for i in (0..n).rev() {
            let mut acc = b[i];
            for c in i + 1..=(i + reach).min(n - 1) {
                acc -= u.get(i, c) * b[c];
            }
            b[i] = acc / u.get(i, i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, seeded};

    #[test]
    fn matches_dense_product() {
        for (n, kl, ku) in [(1, 0, 0), (6, 2, 2), (40, 2, 2), (25, 1, 3), (17, 3, 0)] {
            let mut rng = seeded(n as u64);
            let mut a = BandMatrix::zeros(n, kl, ku);
            let mut dense = vec![ZERO; n * n];
            for i in 0..n {
                let vals = complex_normal(&mut rng, kl + ku + 1);
                for (t, v) in vals.into_iter().enumerate() {
                    let j = i as isize - kl as isize + t as isize;
                    if j >= 0 && (j as usize) < n {
                        // Weak diagonal to force row interchanges.
                        let v = if j as usize == i { v * 1e-3 } else { v };
                        a.add(i, j as usize, v);
                        dense[i * n + j as usize] = v;
                    }
                }
            }
            let x = complex_normal(&mut rng, n);
            let product = |v: &[Complex64]| -> Vec<Complex64> {
                (0..n).map(|i| (0..n).map(|j| dense[i * n + j] * v[j]).sum()).collect()
            };
            let b = product(&x);
            let mut sol = b.clone();
            a.factor().unwrap().solve_in_place(&mut sol);
            // Backward error: the weak diagonal can make the matrix ill-conditioned.
            let r = product(&sol);
            let scale: f64 = dense.iter().map(|v| v.norm()).fold(0.0, f64::max)
                * sol.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (p, q) in r.iter().zip(&b) {
                assert!((p - q).norm() <= 1e-12 * scale, "n={n}: {p} vs {q}");
            }
        }
    }

    #[test]
    fn singular_is_reported() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.add(0, 0, Complex64::new(1.0, 0.0));
        a.add(2, 2, Complex64::new(1.0, 0.0));
        assert!(matches!(a.factor(), Err(Error::Numerical(_))));
    }
}
