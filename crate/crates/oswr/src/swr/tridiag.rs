use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]` are unused and kept at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Tridiag { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] }
    }

    pub fn diagonal(d: Vec<f64>) -> Self {
        let n = d.len();
        Tridiag { lower: vec![0.0; n], diag: d, upper: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn is_diagonal(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|&v| v == 0.0)
    }

    /// Entry (i, j); zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j + 1 == i {
            self.lower[i]
        } else if i + 1 == j {
            self.upper[i]
        } else {
            0.0
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Tridiag) -> Tridiag {
        let f = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + s * y).collect();
        Tridiag {
            lower: f(&self.lower, &other.lower),
            diag: f(&self.diag, &other.diag),
            upper: f(&self.upper, &other.upper),
        }
    }

    pub fn scaled(&self, s: f64) -> Tridiag {
        let f = |a: &[f64]| a.iter().map(|x| s * x).collect();
        Tridiag { lower: f(&self.lower), diag: f(&self.diag), upper: f(&self.upper) }
    }

    /// Principal submatrix on `lo..=hi`.
    pub fn restrict(&self, lo: usize, hi: usize) -> Tridiag {
        let mut t = Tridiag {
            lower: self.lower[lo..=hi].to_vec(),
            diag: self.diag[lo..=hi].to_vec(),
            upper: self.upper[lo..=hi].to_vec(),
        };
        t.lower[0] = 0.0;
        let n = t.len();
        t.upper[n - 1] = 0.0;
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| self.get(i, j)).collect()).collect()
    }
}

/// Thomas factorization of a tridiagonal matrix (no pivoting).
#[derive(Clone, Debug)]
pub struct ThomasLu {
    /// Multipliers l_i = a_i / d_{i-1}.
    mult: Vec<f64>,
    inv_piv: Vec<f64>,
    upper: Vec<f64>,
}

impl ThomasLu {
    pub fn new(t: &Tridiag) -> Result<Self> {
        let n = t.len();
        let scale = t.diag.iter().chain(&t.lower).chain(&t.upper).fold(0.0f64, |m, v| m.max(v.abs()));
        let mut mult = vec![0.0; n];
        let mut inv_piv = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let mut d = t.diag[i];
            if i > 0 {
                mult[i] = t.lower[i] * prev;
                d -= mult[i] * t.upper[i - 1];
            }
            if !(d.abs() > 1e-13 * scale) {
                return Err(Error::Singular(format!("tridiagonal pivot {d:e} at row {i}")));
            }
            prev = 1.0 / d;
            inv_piv[i] = prev;
        }
        Ok(ThomasLu { mult, inv_piv, upper: t.upper.clone() })
    }

    pub(crate) fn parts(&self) -> (&[f64], &[f64]) {
        (&self.mult, &self.inv_piv)
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 1..n {
            b[i] -= self.mult[i] * b[i - 1];
        }
        b[n - 1] *= self.inv_piv[n - 1];
        for i in (0..n - 1).rev() {
            b[i] = (b[i] - self.upper[i] * b[i + 1]) * self.inv_piv[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_inverts_matvec() {
        let t = Tridiag {
            lower: vec![0.0, -1.0, -0.5, -2.0],
            diag: vec![4.0, 5.0, 3.0, 6.0],
            upper: vec![-1.5, 1.0, -1.0, 0.0],
        };
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let mut b = t.matvec(&x);
        ThomasLu::new(&t).unwrap().solve(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let t = Tridiag { lower: vec![0.0, 1.0], diag: vec![1.0, 1.0], upper: vec![1.0, 0.0] };
        assert!(ThomasLu::new(&t).is_err());
    }
}
