//! Compressed sparse row storage and a preconditioned BiCGSTAB solver for
//! the nonsymmetric systems produced by the implicit transport and
//! pressure-Poisson discretizations.

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("bicgstab breakdown at iteration {iteration} (|{quantity}| = {value:.3e})")]
    Breakdown {
        iteration: usize,
        quantity: &'static str,
        value: f64,
    },
    #[error("dimension mismatch: matrix is {n}x{n}, vector has length {len}")]
    Dimension { n: usize, len: usize },
}

/// Square CSR matrix. Column indices are strictly increasing within each
/// row and the diagonal entry is always stored (possibly as zero).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub(crate) fn row_offset(&self, i: usize) -> usize {
        self.row_offsets[i]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter()
                    .position(|&c| c == i)
                    .map(|k| vals[k])
                    .unwrap_or(0.0)
            })
            .collect()
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(
            x.len(),
            self.n,
            "matvec dimension mismatch: {} vs {}",
            x.len(),
            self.n
        );
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// y = A x without allocating. Rows are independent, so the parallel
    /// split over output chunks is deterministic for any thread count.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        const PAR_THRESHOLD: usize = 20_000;
        let kernel = |i: usize| -> f64 {
            let lo = self.row_offsets[i];
            let hi = self.row_offsets[i + 1];
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            acc
        };
        if self.n >= PAR_THRESHOLD {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = kernel(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = kernel(i);
            }
        }
    }

    /// Checks the structural invariants; used by assemblers in tests.
    pub fn validate(&self) -> Result<(), String> {
        if self.row_offsets.len() != self.n + 1 {
            return Err("row offset length mismatch".into());
        }
        for i in 0..self.n {
            let (cols, _) = self.row(i);
            if !cols.windows(2).all(|w| w[0] < w[1]) {
                return Err(format!("row {i}: columns not strictly increasing"));
            }
            if !cols.contains(&i) {
                return Err(format!("row {i}: missing diagonal entry"));
            }
            if cols.iter().any(|&c| c >= self.n) {
                return Err(format!("row {i}: column out of range"));
            }
        }
        Ok(())
    }
}

/// Row-by-row CSR assembler. Duplicate column entries within a row are
/// summed; the diagonal is seeded so it is always present.
pub struct CsrBuilder {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    next_row: usize,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        CsrBuilder {
            n,
            row_offsets: vec![0],
            col_indices: Vec::new(),
            values: Vec::new(),
            next_row: 0,
        }
    }

    /// Appends the next row from (column, value) pairs in any order.
    pub fn push_row(&mut self, entries: &[(usize, f64)]) {
        assert!(self.next_row < self.n, "too many rows");
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(entries.len() + 1);
        row.push((self.next_row, 0.0)); // seed diagonal
        row.extend_from_slice(entries);
        row.sort_by_key(|e| e.0);
        for (col, val) in row {
            debug_assert!(col < self.n);
            match self.col_indices.last() {
                Some(&last) if last == col && self.col_indices.len() > *self.row_offsets.last().unwrap() => {
                    *self.values.last_mut().unwrap() += val;
                }
                _ => {
                    self.col_indices.push(col);
                    self.values.push(val);
                }
            }
        }
        self.row_offsets.push(self.col_indices.len());
        self.next_row += 1;
    }

    pub fn finish(self) -> CsrMatrix {
        assert_eq!(self.next_row, self.n, "not all rows pushed");
        CsrMatrix {
            n: self.n,
            row_offsets: self.row_offsets,
            col_indices: self.col_indices,
            values: self.values,
        }
    }
}

/// A linear system A x = b ready for an iterative solve.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Self {
        assert_eq!(matrix.n(), rhs.len());
        SparseSystem { matrix, rhs }
    }

    /// Matrix Market coordinate dump (1-based indices) for debugging.
    pub fn write_matrix_market<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.matrix.n(), self.matrix.n(), self.matrix.nnz())?;
        for i in 0..self.matrix.n() {
            let (cols, vals) = self.matrix.row(i);
            for (c, v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.16e}", i + 1, c + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Convergence report for one iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    /// Recomputed true residual norm ‖b − A x‖₂ at exit.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Relative residual target against ‖b‖₂ (absolute floor 1e-30 when b = 0).
    pub tol: f64,
    pub max_iter: usize,
    /// Jacobi (diagonal) preconditioning.
    pub jacobi: bool,
    /// Sequential dot products; results independent of thread count.
    pub deterministic: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-11,
            max_iter: 10_000,
            jacobi: true,
            deterministic: true,
        }
    }
}

fn dot(a: &[f64], b: &[f64], deterministic: bool) -> f64 {
    const PAR_THRESHOLD: usize = 50_000;
    if !deterministic && a.len() >= PAR_THRESHOLD {
        a.par_chunks(8192)
            .zip(b.par_chunks(8192))
            .map(|(xa, xb)| xa.iter().zip(xb).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    } else {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

fn norm2(a: &[f64], deterministic: bool) -> f64 {
    dot(a, a, deterministic).sqrt()
}

/// Preconditioned BiCGSTAB (van der Vorst). Convergence is declared only
/// after the true residual ‖b − A x‖₂ passes the tolerance, so the
/// reported residual always matches an independent recomputation. On a
/// ρ/ω/(r̂·v) breakdown the solver restarts once from the current iterate
/// and fails if the breakdown repeats.
pub fn bicgstab(
    system: &SparseSystem,
    x0: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolverReport), SolveError> {
    let a = &system.matrix;
    let b = &system.rhs;
    let n = a.n();
    if x0.len() != n {
        return Err(SolveError::Dimension { n, len: x0.len() });
    }
    let det = opts.deterministic;
    let b_norm = norm2(b, det);
    let target = (opts.tol * b_norm).max(1e-30);
    let breakdown_eps = 1e-300;

    let inv_diag: Option<Vec<f64>> = opts.jacobi.then(|| {
        a.diagonal()
            .iter()
            .map(|&d| if d.abs() > breakdown_eps { 1.0 / d } else { 1.0 })
            .collect()
    });
    let precond = |dst: &mut Vec<f64>, src: &[f64]| {
        dst.clear();
        match &inv_diag {
            Some(m) => dst.extend(src.iter().zip(m).map(|(s, d)| s * d)),
            None => dst.extend_from_slice(src),
        }
    };

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    a.matvec_into(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }

    let true_residual = |x: &[f64], scratch: &mut Vec<f64>| -> f64 {
        scratch.resize(n, 0.0);
        a.matvec_into(x, scratch);
        let mut s = 0.0;
        for i in 0..n {
            let d = b[i] - scratch[i];
            s += d * d;
        }
        s.sqrt()
    };

    let mut scratch = Vec::new();
    if norm2(&r, det) <= target {
        let res = true_residual(&x, &mut scratch);
        return Ok((
            x,
            SolverReport {
                iterations: 0,
                residual: res,
                converged: res <= target,
            },
        ));
    }

    struct State {
        r: Vec<f64>,
        r_hat: Vec<f64>,
        rho: f64,
        alpha: f64,
        omega: f64,
        p: Vec<f64>,
        v: Vec<f64>,
    }
    // (Re)initializes the Krylov process from the current iterate.
    let reset = |x: &[f64], st: &mut State| {
        a.matvec_into(x, &mut st.r);
        for i in 0..n {
            st.r[i] = b[i] - st.r[i];
        }
        st.r_hat.copy_from_slice(&st.r);
        st.rho = 1.0;
        st.alpha = 1.0;
        st.omega = 1.0;
        st.p.iter_mut().for_each(|z| *z = 0.0);
        st.v.iter_mut().for_each(|z| *z = 0.0);
    };

    let mut st = State {
        r_hat: r.clone(),
        r,
        rho: 1.0,
        alpha: 1.0,
        omega: 1.0,
        p: vec![0.0; n],
        v: vec![0.0; n],
    };
    let mut p_hat = Vec::with_capacity(n);
    let mut s_hat = Vec::with_capacity(n);
    let mut t = vec![0.0; n];
    let mut restarted = false;

    for iter in 1..=opts.max_iter {
        let rho_new = dot(&st.r_hat, &st.r, det);
        if rho_new.abs() < breakdown_eps || st.omega.abs() < breakdown_eps {
            if restarted {
                return Err(SolveError::Breakdown {
                    iteration: iter,
                    quantity: if rho_new.abs() < breakdown_eps { "rho" } else { "omega" },
                    value: rho_new.abs().min(st.omega.abs()),
                });
            }
            restarted = true;
            reset(&x, &mut st);
            continue;
        }
        let beta = (rho_new / st.rho) * (st.alpha / st.omega);
        st.rho = rho_new;
        for i in 0..n {
            st.p[i] = st.r[i] + beta * (st.p[i] - st.omega * st.v[i]);
        }
        precond(&mut p_hat, &st.p);
        a.matvec_into(&p_hat, &mut st.v);
        let rhat_v = dot(&st.r_hat, &st.v, det);
        if rhat_v.abs() < breakdown_eps {
            if restarted {
                return Err(SolveError::Breakdown {
                    iteration: iter,
                    quantity: "rhat_v",
                    value: rhat_v.abs(),
                });
            }
            restarted = true;
            reset(&x, &mut st);
            continue;
        }
        st.alpha = rho_new / rhat_v;
        // s = r - alpha v  (stored in r)
        for i in 0..n {
            st.r[i] -= st.alpha * st.v[i];
        }
        if norm2(&st.r, det) <= target {
            // half step is a valid iterate
            for i in 0..n {
                x[i] += st.alpha * p_hat[i];
            }
            let res = true_residual(&x, &mut scratch);
            if res <= target {
                return Ok((
                    x,
                    SolverReport {
                        iterations: iter,
                        residual: res,
                        converged: true,
                    },
                ));
            }
            // running estimate drifted; start over from here
            reset(&x, &mut st);
            continue;
        }
        precond(&mut s_hat, &st.r);
        a.matvec_into(&s_hat, &mut t);
        let tt = dot(&t, &t, det);
        if tt.abs() < breakdown_eps {
            for i in 0..n {
                x[i] += st.alpha * p_hat[i];
            }
            let res = true_residual(&x, &mut scratch);
            if res <= target {
                return Ok((
                    x,
                    SolverReport {
                        iterations: iter,
                        residual: res,
                        converged: true,
                    },
                ));
            }
            if restarted {
                return Err(SolveError::Breakdown {
                    iteration: iter,
                    quantity: "t",
                    value: tt,
                });
            }
            restarted = true;
            reset(&x, &mut st);
            continue;
        }
        st.omega = dot(&t, &st.r, det) / tt;
        for i in 0..n {
            x[i] += st.alpha * p_hat[i] + st.omega * s_hat[i];
            st.r[i] -= st.omega * t[i];
        }
        if norm2(&st.r, det) <= target {
            let res = true_residual(&x, &mut scratch);
            if res <= target {
                return Ok((
                    x,
                    SolverReport {
                        iterations: iter,
                        residual: res,
                        converged: true,
                    },
                ));
            }
            reset(&x, &mut st);
        }
    }

    let res = true_residual(&x, &mut scratch);
    Ok((
        x,
        SolverReport {
            iterations: opts.max_iter,
            residual: res,
            converged: res <= target,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> CsrMatrix {
        let mut b = CsrBuilder::new(n);
        for i in 0..n {
            b.push_row(&[(i, 1.0)]);
        }
        b.finish()
    }

    #[test]
    fn identity_solves_immediately() {
        let b = vec![3.0, -1.0, 2.5, 0.0];
        let sys = SparseSystem::new(identity(4), b.clone());
        let (x, report) = bicgstab(&sys, &vec![0.0; 4], &SolveOptions::default()).unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 1);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let sys = SparseSystem::new(identity(3), vec![0.0; 3]);
        let (x, report) = bicgstab(&sys, &vec![0.0; 3], &SolveOptions::default()).unwrap();
        assert!(report.converged);
        assert_eq!(x, vec![0.0; 3]);
    }

    #[test]
    fn matvec_trivial_and_mismatch() {
        let mut b = CsrBuilder::new(2);
        b.push_row(&[]);
        b.push_row(&[]);
        let zero = b.finish();
        assert_eq!(zero.matvec(&[5.0, 6.0]), vec![0.0, 0.0]);
        assert_eq!(identity(2).matvec(&[5.0, 6.0]), vec![5.0, 6.0]);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn matvec_rejects_wrong_length() {
        identity(3).matvec(&[1.0, 2.0]);
    }

    #[test]
    fn builder_merges_duplicates_and_seeds_diagonal() {
        let mut b = CsrBuilder::new(2);
        b.push_row(&[(1, 2.0), (1, 3.0)]);
        b.push_row(&[(0, -1.0)]);
        let m = b.finish();
        m.validate().unwrap();
        let (cols, vals) = m.row(0);
        assert_eq!(cols, &[0, 1]);
        assert_eq!(vals, &[0.0, 5.0]);
    }

    #[test]
    fn non_converged_report_when_budget_exhausted() {
        // 1D Laplacian, too few iterations allowed
        let n = 64;
        let mut b = CsrBuilder::new(n);
        for i in 0..n {
            let mut row = vec![(i, 2.0)];
            if i > 0 {
                row.push((i - 1, -1.0));
            }
            if i + 1 < n {
                row.push((i + 1, -1.0));
            }
            b.push_row(&row);
        }
        let sys = SparseSystem::new(b.finish(), vec![1.0; n]);
        let opts = SolveOptions {
            tol: 1e-14,
            max_iter: 2,
            ..Default::default()
        };
        let (_, report) = bicgstab(&sys, &vec![0.0; n], &opts).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 2);
    }

    #[test]
    fn breakdown_reported_after_restart() {
        // r̂ instantly orthogonal to A r: classic BiCGSTAB breakdown
        let mut b = CsrBuilder::new(2);
        b.push_row(&[(0, 0.0), (1, 1.0)]);
        b.push_row(&[(0, -1.0), (1, 0.0)]);
        let sys = SparseSystem::new(b.finish(), vec![1.0, 0.0]);
        let opts = SolveOptions {
            jacobi: false,
            ..Default::default()
        };
        let err = bicgstab(&sys, &[0.0, 0.0], &opts);
        assert!(matches!(err, Err(SolveError::Breakdown { .. })));
    }

    #[test]
    fn matrix_market_dump_format() {
        let mut b = CsrBuilder::new(2);
        b.push_row(&[(0, 1.5), (1, -2.0)]);
        b.push_row(&[(1, 4.0)]);
        let sys = SparseSystem::new(b.finish(), vec![0.0, 0.0]);
        let mut out = Vec::new();
        sys.write_matrix_market(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines.next().unwrap(), "2 2 3");
        assert_eq!(lines.next().unwrap(), "1 1 1.5000000000000000e0");
    }
}
