//! Thomas algorithm for tridiagonal systems.

/// Tridiagonal matrix stored by diagonals.
///
/// `lower[0]` and `upper[n - 1]` are unused.
#[derive(Debug, Clone, Default)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// `max |A x - rhs| / max(|rhs|, |A| |x|)`.
    pub fn relative_residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let ax = self.apply(x);
        let mut num = 0.0_f64;
        let mut den = 0.0_f64;
        for i in 0..self.len() {
            num = num.max((ax[i] - rhs[i]).abs());
            let mut scale = (self.diag[i] * x[i]).abs();
            if i > 0 {
                scale += (self.lower[i] * x[i - 1]).abs();
            }
            if i + 1 < self.len() {
                scale += (self.upper[i] * x[i + 1]).abs();
            }
            den = den.max(scale).max(rhs[i].abs());
        }
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// Solves `A x = rhs` into `x`, using `scratch` for the modified upper diagonal.
    ///
    /// No pivoting: intended for diagonally dominant (M-matrix) systems.
    pub fn solve_into(&self, rhs: &[f64], x: &mut [f64], scratch: &mut Vec<f64>) {
        let n = self.len();
        debug_assert!(n > 0 && rhs.len() == n && x.len() == n);
        scratch.clear();
        scratch.resize(n, 0.0);

        let mut den = self.diag[0];
        scratch[0] = self.upper[0] / den;
        x[0] = rhs[0] / den;
        for i in 1..n {
            den = self.diag[i] - self.lower[i] * scratch[i - 1];
            if i + 1 < n {
                scratch[i] = self.upper[i] / den;
            }
            x[i] = (rhs[i] - self.lower[i] * x[i - 1]) / den;
        }
        for i in (0..n - 1).rev() {
            x[i] -= scratch[i] * x[i + 1];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.len()];
        let mut scratch = Vec::with_capacity(self.len());
        self.solve_into(rhs, &mut x, &mut scratch);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity() {
        let mut a = Tridiagonal::zeros(5);
        a.diag.fill(1.0);
        let d = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(a.solve(&d), d.to_vec());
    }

    #[test]
    fn laplacian() {
        // [2 -1; -1 2 -1; ...] x = [1 0 0 1] has solution all ones
        let n = 4;
        let a = Tridiagonal {
            lower: vec![0.0, -1.0, -1.0, -1.0],
            diag: vec![2.0; n],
            upper: vec![-1.0, -1.0, -1.0, 0.0],
        };
        let x = a.solve(&[1.0, 0.0, 0.0, 1.0]);
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_row() {
        let a = Tridiagonal {
            lower: vec![0.0],
            diag: vec![4.0],
            upper: vec![0.0],
        };
        assert_eq!(a.solve(&[2.0]), vec![0.5]);
    }

    proptest! {
        #[test]
        fn dominant_systems_solve_to_small_residual(
            rows in proptest::collection::vec((-1.0f64..0.0, -1.0f64..0.0, 0.01f64..2.0, -10.0f64..10.0), 2..300)
        ) {
            let n = rows.len();
            let mut a = Tridiagonal::zeros(n);
            let mut rhs = vec![0.0; n];
            for (i, (l, u, extra, r)) in rows.into_iter().enumerate() {
                a.lower[i] = if i > 0 { l } else { 0.0 };
                a.upper[i] = if i + 1 < n { u } else { 0.0 };
                a.diag[i] = -a.lower[i] - a.upper[i] + extra;
                rhs[i] = r;
            }
            let x = a.solve(&rhs);
            prop_assert!(a.relative_residual(&x, &rhs) <= 1e-12);
        }
    }
}
