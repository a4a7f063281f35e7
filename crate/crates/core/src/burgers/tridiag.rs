/// Solver for `(I − ½dt·D₂) x = b` with the periodic three-point Laplacian.
///
/// The cyclic system is reduced to a tridiagonal one by a Sherman–Morrison
/// rank-one correction; the Thomas factorization and the correction vector
/// are computed once, so each solve is two sweeps plus an axpy.
#[derive(Debug, Clone)]
pub struct PeriodicHeatSolver {
    off: f64,
    /// Modified super-diagonal of the factored tridiagonal part.
    cp: Vec<f64>,
    inv_denom: Vec<f64>,
    z: Vec<f64>,
    corner_ratio: f64,
    correction_denom: f64,
}

impl PeriodicHeatSolver {
    /// `r = dt/(2dx²)`; the matrix has `1 + 2r` on the diagonal and `−r` on
    /// the off-diagonals including the periodic corners.
    pub fn new(n: usize, r: f64) -> Self {
        assert!(n >= 3, "periodic solver needs at least three cells");
        let a = -r;
        let b = 1.0 + 2.0 * r;
        let gamma = -b;
        // corners alpha = A[0][n-1], beta = A[n-1][0]
        let (alpha, beta) = (a, a);
        let mut diag = vec![b; n];
        diag[0] = b - gamma;
        diag[n - 1] = b - alpha * beta / gamma;

        let mut cp = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        inv_denom[0] = 1.0 / diag[0];
        cp[0] = a * inv_denom[0];
        for i in 1..n {
            let denom = diag[i] - a * cp[i - 1];
            inv_denom[i] = 1.0 / denom;
            cp[i] = a * inv_denom[i];
        }

        let mut solver = Self {
            off: a,
            cp,
            inv_denom,
            z: Vec::new(),
            corner_ratio: alpha / gamma,
            correction_denom: 1.0,
        };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = beta;
        let mut z = vec![0.0; n];
        solver.solve_tridiagonal(&u, &mut z);
        solver.correction_denom = 1.0 + z[0] + solver.corner_ratio * z[n - 1];
        solver.z = z;
        solver
    }

    fn solve_tridiagonal(&self, rhs: &[f64], out: &mut [f64]) {
        let n = rhs.len();
        let a = self.off;
        out[0] = rhs[0] * self.inv_denom[0];
        for i in 1..n {
            out[i] = (rhs[i] - a * out[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            out[i] -= self.cp[i] * out[i + 1];
        }
    }

    pub fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        let n = rhs.len();
        debug_assert_eq!(n, self.z.len());
        self.solve_tridiagonal(rhs, out);
        let fact = (out[0] + self.corner_ratio * out[n - 1]) / self.correction_denom;
        for (o, z) in out.iter_mut().zip(&self.z) {
            *o -= fact * z;
        }
    }
}
