//! Shared helpers for the integration tests: independent oracles (dense
//! direct solve, adaptive high-order ODE integration) and a groups
//! constructor. Oracles are deliberately written without touching the
//! solver code paths they check.
#![allow(dead_code)]

pub use porevox_core::synthetic::{
    bead_pack, channel_grid, column_grid, duct_grid, random_grid, sealed_box, Lcg,
};

use porevox_core::dimensionless::{DimensionlessGroups, Scales};

/// Gaussian elimination with partial pivoting. O(n³), test scale only.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        x.swap(col, pivot);
        let d = m[col][col];
        assert!(d.abs() > 1e-300, "singular matrix in dense oracle");
        for row in col + 1..n {
            let f = m[row][col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= m[col][col];
        for row in 0..col {
            x[row] -= m[row][col] * x[col];
        }
    }
    x
}

/// Adaptive Dormand–Prince 5(4) integration of y' = f(t, y) from t0 to
/// t1. Tolerances are tight enough to act as a 1e-12-class reference.
pub fn integrate_dopri<F>(f: F, y0: &[f64], t0: f64, t1: f64, rtol: f64, atol: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    if t1 <= t0 {
        return y;
    }
    let mut h = (t1 - t0) * 1e-4;
    let mut k = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut y4 = vec![0.0; n];
    let max_rejects = 10_000_000;
    let mut rejects = 0;
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        f(t, &y, &mut k[0]);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s - 1][j] * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            let ts = t + h * [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0][s - 1];
            let (_, tail) = k.split_at_mut(s);
            f(ts, &ytmp, &mut tail[0]);
        }
        let mut err = 0.0_f64;
        for i in 0..n {
            let mut acc5 = 0.0;
            let mut acc4 = 0.0;
            for j in 0..7 {
                acc5 += B5[j] * k[j][i];
                acc4 += B4[j] * k[j][i];
            }
            y5[i] = y[i] + h * acc5;
            y4[i] = y[i] + h * acc4;
            let scale = atol + rtol * y[i].abs().max(y5[i].abs());
            err = err.max(((y5[i] - y4[i]) / scale).abs());
        }
        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&y5);
        } else {
            rejects += 1;
            assert!(rejects < max_rejects, "ode oracle failed to advance");
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }
    y
}

/// Dimensionless groups assembled directly for solver-level tests: δx̂ is
/// fixed by choosing the reference length as voxel_size / dx_hat.
pub fn make_groups(
    reynolds: f64,
    peclet: f64,
    voxel_size: f64,
    dx_hat: f64,
    slip_beta_hat: Vec<f64>,
) -> DimensionlessGroups {
    let n = slip_beta_hat.len().max(1);
    DimensionlessGroups {
        reynolds,
        peclet,
        da_adsorption: vec![0.0; n],
        da_desorption: vec![0.0; n],
        m_inf_hat: vec![f64::INFINITY; n],
        beta_hat: 0.0,
        slip_beta_hat: if slip_beta_hat.is_empty() {
            vec![0.0]
        } else {
            slip_beta_hat
        },
        scales: Scales {
            length: voxel_size / dx_hat,
            v_in: 1e-3,
            c_in: 2e13,
            p_out: 0.0,
            rho: 1000.0,
        },
    }
}
