//! Minimal dense complex linear algebra used by the Fock-space simulator:
//! square matrices, matrix exponential, and a Jacobi eigensolver for
//! Hermitian matrices.

use num_complex::Complex64 as C64;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Outer product v w^dag as a square matrix.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        assert_eq!(v.len(), w.len());
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * w[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let orow = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += aik * row[j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.n, v.len());
        let n = self.n;
        (0..n)
            .map(|i| {
                let row = &self.data[i * n..(i + 1) * n];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// self += s * rhs
    pub fn axpy(&mut self, s: C64, rhs: &Self) {
        assert_eq!(self.n, rhs.n);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += s * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(self.n, rhs.n);
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum (induced 1-norm).
    pub fn norm_one(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Kronecker product self (x) rhs.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (na, nb) = (self.n, rhs.n);
        let n = na * nb;
        let mut out = Self::zeros(n);
        for ia in 0..na {
            for ja in 0..na {
                let a = self[(ia, ja)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for ib in 0..nb {
                    for jb in 0..nb {
                        out[(ia * nb + ib, ja * nb + jb)] = a * rhs[(ib, jb)];
                    }
                }
            }
        }
        out
    }

    /// Matrix exponential by scaling-and-squaring with a Taylor series.
    pub fn expm(&self) -> Self {
        let norm = self.norm_one();
        let s = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let scaled = self.scale(C64::new(0.5f64.powi(s as i32), 0.0));

        let mut term = CMat::identity(self.n);
        let mut sum = CMat::identity(self.n);
        for k in 1..=90u32 {
            term = term.mul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
            if term.max_abs() < 1e-18 * sum.max_abs().max(1.0) {
                break;
            }
        }
        let mut out = sum;
        for _ in 0..s {
            out = out.mul(&out);
        }
        out
    }

    /// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations,
    /// ascending. The input is Hermitized as (A + A^dag)/2 first.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let mut h = Self::from_fn(n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)].conj()));
        let scale = h.max_abs().max(1e-300);
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += h[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() < 1e-14 * scale * n as f64 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let b = h[(p, q)];
                    let babs = b.norm();
                    if babs < 1e-300 {
                        continue;
                    }
                    let theta = b / babs;
                    let a = h[(p, p)].re;
                    let d = h[(q, q)].re;
                    let tau = (d - a) / (2.0 * babs);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let sv = t * c;
                    // columns: col_p' = c col_p - s e^{-i arg} col_q
                    //          col_q' = s e^{+i arg} col_p + c col_q
                    for k in 0..n {
                        let hp = h[(k, p)];
                        let hq = h[(k, q)];
                        h[(k, p)] = c * hp - sv * theta.conj() * hq;
                        h[(k, q)] = sv * theta * hp + c * hq;
                    }
                    for k in 0..n {
                        let hp = h[(p, k)];
                        let hq = h[(q, k)];
                        h[(p, k)] = c * hp - sv * theta * hq;
                        h[(q, k)] = sv * theta.conj() * hp + c * hq;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| h[(i, i)].re).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eig
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMat::zeros(4);
        assert!(z.expm().max_abs_diff(&CMat::identity(4)) < 1e-15);
    }

    #[test]
    fn expm_diagonal() {
        let d = CMat::from_diag(&[c(0.3, -1.2), c(-2.0, 0.5), c(0.0, 3.0)]);
        let e = d.expm();
        for i in 0..3 {
            assert!((e[(i, i)] - d[(i, i)].exp()).norm() < 1e-13);
        }
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn expm_pauli_rotation() {
        // exp(i t sigma_x) = cos t I + i sin t sigma_x
        let t = 0.7343;
        let g = CMat::from_fn(2, |i, j| if i != j { c(0.0, t) } else { c(0.0, 0.0) });
        let e = g.expm();
        assert!((e[(0, 0)] - c(t.cos(), 0.0)).norm() < 1e-14);
        assert!((e[(0, 1)] - c(0.0, t.sin())).norm() < 1e-14);
    }

    #[test]
    fn hermitian_eigenvalues_of_pauli_x() {
        let sx = CMat::from_fn(2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let eig = sx.hermitian_eigenvalues();
        assert!((eig[0] + 1.0).abs() < 1e-12 && (eig[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_eigenvalues_random_trace_and_square() {
        // deterministic scrambled Hermitian matrix; check sum and sum of
        // squares of eigenvalues against trace identities
        let n = 12;
        let mut seed = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a = CMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let z = c(next(), if i == j { 0.0 } else { next() });
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        let eig = a.hermitian_eigenvalues();
        let tr: f64 = (0..n).map(|i| a[(i, i)].re).sum();
        let tr2: f64 = a.mul(&a).trace().re;
        let s1: f64 = eig.iter().sum();
        let s2: f64 = eig.iter().map(|x| x * x).sum();
        assert!((s1 - tr).abs() < 1e-10);
        assert!((s2 - tr2).abs() < 1e-10);
    }
}
