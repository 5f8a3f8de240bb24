//! Small dense linear algebra: complex Hermitian Cholesky (with the failure
//! mode surfaced as a diagnostic), triangular solves, and a cyclic-Jacobi
//! symmetric eigensolver. Sizes here are at most a few hundred, so clarity
//! and deterministic behavior win over clever blocking.

use crate::{Error, Result};
use num_complex::Complex64;

/// Dense row-major complex matrix.
#[derive(Clone, Debug)]
pub struct Cmatrix {
    pub n: usize,
    pub a: Vec<Complex64>,
}

impl Cmatrix {
    pub fn zeros(n: usize) -> Cmatrix {
        Cmatrix { n, a: vec![Complex64::ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Cmatrix {
        let mut m = Cmatrix::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = Complex64::ONE;
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(n: usize, mut f: F) -> Cmatrix {
        let mut m = Cmatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i * n + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.a[i * self.n + j] = v;
    }

    /// Largest `|m[i,j] − conj(m[j,i])|` over all pairs.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.n {
            for j in 0..=i {
                d = d.max((self.at(i, j) - self.at(j, i).conj()).norm());
            }
        }
        d
    }

    /// Largest entry magnitude of `self − I`.
    pub fn max_deviation_from_identity(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                let e = if i == j { Complex64::ONE } else { Complex64::ZERO };
                d = d.max((self.at(i, j) - e).norm());
            }
        }
        d
    }
}

/// Cholesky factorization `M = L·Lᴴ` of a Hermitian positive-definite matrix.
///
/// Returns the lower-triangular factor. A non-positive pivot aborts with
/// [`Error::Cholesky`]; for Gram matrices built by quadrature that error is
/// the designated "rule too coarse" diagnostic rather than a fatal bug.
pub fn cholesky(m: &Cmatrix) -> Result<Cmatrix> {
    let n = m.n;
    let mut l = Cmatrix::zeros(n);
    for j in 0..n {
        let mut d = m.at(j, j).re;
        for k in 0..j {
            d -= l.at(j, k).norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Cholesky { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l.set(j, j, Complex64::new(djj, 0.0));
        for i in (j + 1)..n {
            let mut s = m.at(i, j);
            for k in 0..j {
                s -= l.at(i, k) * l.at(j, k).conj();
            }
            l.set(i, j, s / djj);
        }
    }
    Ok(l)
}

/// `log det M` from the Cholesky factor: `2·Σ ln L[j,j]`.
pub fn log_det_from_cholesky(l: &Cmatrix) -> f64 {
    let mut s = 0.0;
    for j in 0..l.n {
        s += l.at(j, j).re.ln();
    }
    2.0 * s
}

/// Solve `L x = b` in place (forward substitution, `L` lower-triangular).
pub fn solve_lower(l: &Cmatrix, b: &mut [Complex64]) {
    let n = l.n;
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.at(i, k) * b[k];
        }
        b[i] = s / l.at(i, i);
    }
}

/// Solve `Lᴴ x = b` in place (back substitution).
pub fn solve_lower_adjoint(l: &Cmatrix, b: &mut [Complex64]) {
    let n = l.n;
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l.at(k, i).conj() * b[k];
        }
        b[i] = s / l.at(i, i);
    }
}

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi sweeps.
///
/// `a` is row-major `n×n` (only required symmetric to rounding). Returns the
/// eigenvalues ascending and, when requested, the matching orthonormal
/// eigenvectors as columns of a row-major matrix.
pub fn sym_eigen(a: &[f64], n: usize, want_vectors: bool) -> (Vec<f64>, Option<Vec<f64>>) {
    assert_eq!(a.len(), n * n, "sym_eigen: matrix size mismatch");
    let mut m = a.to_vec();
    let mut v = if want_vectors {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        Some(id)
    } else {
        None
    };

    let scale: f64 =
        (0..n * n).map(|k| m[k] * m[k]).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * m[p * n + q] * m[p * n + q];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Apply the rotation G(p,q,θ) on both sides.
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                if let Some(vm) = v.as_mut() {
                    for k in 0..n {
                        let vkp = vm[k * n + p];
                        let vkq = vm[k * n + q];
                        vm[k * n + p] = c * vkp - s * vkq;
                        vm[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let vecs = v.map(|vm| {
        let mut out = vec![0.0; n * n];
        for (newcol, &oldcol) in order.iter().enumerate() {
            for k in 0..n {
                out[k * n + newcol] = vm[k * n + oldcol];
            }
        }
        out
    });
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cholesky_reconstructs() {
        // Hermitian positive definite 3×3.
        let m = Cmatrix::from_fn(3, |i, j| match (i, j) {
            (0, 0) => c(4.0, 0.0),
            (1, 1) => c(5.0, 0.0),
            (2, 2) => c(6.0, 0.0),
            (1, 0) => c(1.0, 1.0),
            (0, 1) => c(1.0, -1.0),
            (2, 0) => c(0.5, -0.25),
            (0, 2) => c(0.5, 0.25),
            (2, 1) => c(-1.0, 0.5),
            (1, 2) => c(-1.0, -0.5),
            _ => unreachable!(),
        });
        let l = cholesky(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = Complex64::ZERO;
                for k in 0..3 {
                    s += l.at(i, k) * l.at(j, k).conj();
                }
                assert!((s - m.at(i, j)).norm() < 1e-12, "entry ({i},{j})");
            }
        }
        // log det via the factor matches the 3×3 determinant expansion.
        let det = {
            let a = m.at(0, 0);
            let b = m.at(0, 1);
            let cc = m.at(0, 2);
            let d = m.at(1, 0);
            let e = m.at(1, 1);
            let f = m.at(1, 2);
            let g = m.at(2, 0);
            let h = m.at(2, 1);
            let i = m.at(2, 2);
            (a * (e * i - f * h) - b * (d * i - f * g) + cc * (d * h - e * g)).re
        };
        assert!((log_det_from_cholesky(&l) - det.ln()).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = Cmatrix::from_fn(2, |i, j| if i == j { c(1.0, 0.0) } else { c(2.0, 0.0) });
        match cholesky(&m) {
            Err(crate::Error::Cholesky { pivot, value }) => {
                assert_eq!(pivot, 1);
                assert!(value < 0.0);
            }
            other => panic!("expected Cholesky failure, got {other:?}"),
        }
    }

    #[test]
    fn triangular_solves_invert() {
        let m = Cmatrix::from_fn(3, |i, j| {
            if i == j {
                c(3.0 + i as f64, 0.0)
            } else {
                c(0.3 * (i as f64 - j as f64), 0.1)
            }
        });
        // Make it Hermitian PD: M·Mᴴ + I.
        let mut h = Cmatrix::zeros(3);
        for i in 0..3 {
            for j in 0..3 {
                let mut s = if i == j { Complex64::ONE } else { Complex64::ZERO };
                for k in 0..3 {
                    s += m.at(i, k) * m.at(j, k).conj();
                }
                h.set(i, j, s);
            }
        }
        let l = cholesky(&h).unwrap();
        let b0 = [c(1.0, 2.0), c(-0.5, 0.25), c(0.0, -1.0)];
        let mut x = b0;
        solve_lower(&l, &mut x);
        solve_lower_adjoint(&l, &mut x);
        // Check H·x == b0.
        for i in 0..3 {
            let mut s = Complex64::ZERO;
            for k in 0..3 {
                s += h.at(i, k) * x[k];
            }
            assert!((s - b0[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn jacobi_two_by_two() {
        let (vals, _) = sym_eigen(&[2.0, 1.0, 1.0, 2.0], 2, false);
        assert!((vals[0] - 1.0).abs() < 1e-13);
        assert!((vals[1] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn jacobi_invariants_random() {
        // Deterministic pseudo-random symmetric matrix; check trace and
        // Frobenius norm invariance plus eigenvector orthonormality.
        let n = 12;
        let mut a = vec![0.0; n * n];
        let mut state = 0x2545f4914f6cdd1du64;
        let mut rnd = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..n {
            for j in 0..=i {
                let v = rnd();
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        let fro2: f64 = a.iter().map(|x| x * x).sum();
        let (vals, vecs) = sym_eigen(&a, n, true);
        let v = vecs.unwrap();
        assert!((vals.iter().sum::<f64>() - trace).abs() < 1e-11);
        assert!((vals.iter().map(|x| x * x).sum::<f64>() - fro2).abs() < 1e-10);
        for c1 in 0..n {
            for c2 in 0..=c1 {
                let dot: f64 = (0..n).map(|k| v[k * n + c1] * v[k * n + c2]).sum();
                let want = if c1 == c2 { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-11, "columns {c1},{c2}");
            }
        }
        // A·v = λ·v for the extreme eigenpair.
        for (col, lam) in [(0usize, vals[0]), (n - 1, vals[n - 1])] {
            for i in 0..n {
                let av: f64 = (0..n).map(|k| a[i * n + k] * v[k * n + col]).sum();
                assert!((av - lam * v[i * n + col]).abs() < 1e-10);
            }
        }
    }
}
