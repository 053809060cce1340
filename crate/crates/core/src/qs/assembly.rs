//! Interconnection matrices, kernel basis, and separator for the
//! projection-based stability test.
//!
//! The signals are stacked as
//!
//!   z = [X'(t), Xi'_N(t), KX(t), KX(t-tau), KX'(t)],
//!   omega = [X(t), Xi_N(t), KX(t-tau), u(1,t), V_N(t)],
//!
//! where Xi_N collects the first N Legendre projections chi_k of the
//! distributed state and V_N the N+1 scaled derivatives nu_k = s sqrt(2k+1)
//! chi_k. The constant matrices E_N and A_N encode the plant dynamics, the
//! boundary coupling, and the integration-by-parts recurrence of the
//! projections; the diagonal uncertainty nabla(s) = diag(s^(-1) I,
//! e^(-tau s), delta(s), delta_N(s)) closes the loop. At order 0 the
//! matrices reduce to the classical Jensen-based test.
//!
//! The separator is block diagonal in the same partition,
//!
//!   Theta_1 = diag(0, -Q, R(1-alpha^2)gamma^2, -tau^2 S),
//!   Theta_2 = diag(-P, 0, -R gamma, 0),
//!   Theta_3 = diag(0, Q, R, S I),
//!
//! and its negativity on the graph of nabla over the closed right half
//! plane follows from |e^(-tau s)| <= 1, the disk bound on delta, and the
//! Bessel bound on delta_N. `separator_negativity_check` verifies those
//! hand-proved facts numerically on sampled frequencies; the feasibility
//! path never relies on it.

use crate::error::{Error, Result};
use crate::model::{LtiPlant, WaveChannel};
use crate::qs::legendre;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Size record for one assembled interconnection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QsDims {
    pub plant_dim: usize,
    pub order: usize,
    /// Length of z: n + N + 3.
    pub z_dim: usize,
    /// Length of omega: n + 2N + 3.
    pub omega_dim: usize,
    /// Rows of E and A: n + 2N + 4.
    pub rows: usize,
    /// Columns of the kernel basis V.
    pub null_dim: usize,
}

impl QsDims {
    fn expected(plant_dim: usize, order: usize) -> QsDims {
        QsDims {
            plant_dim,
            order,
            z_dim: plant_dim + order + 3,
            omega_dim: plant_dim + 2 * order + 3,
            rows: plant_dim + 2 * order + 4,
            null_dim: 0,
        }
    }
}

/// One assembled order-N interconnection with its kernel basis.
#[derive(Debug, Clone)]
pub struct QsProblem {
    pub order: usize,
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    /// Orthonormal basis of the kernel of [E  -A], stacked [z; omega].
    pub v: DMatrix<f64>,
    pub dims: QsDims,
}

/// Relative singular-value cutoff for the kernel basis.
const NULL_TOL: f64 = 1e-10;

/// Builds E_N, A_N and an orthonormal kernel basis for [E_N  -A_N].
pub fn assemble_problem(
    order: usize,
    plant: &LtiPlant,
    channel: &WaveChannel,
) -> Result<QsProblem> {
    let n = plant.dim();
    let big_n = order;
    let bundle = legendre::legendre_bundle(order, channel);
    let mut dims = QsDims::expected(n, order);

    let mut e = DMatrix::<f64>::zeros(dims.rows, dims.z_dim);
    // Row blocks: X' copy, Xi' copy, KX, KX(t-tau), the KX' defining row,
    // and the N+1 projection rows.
    for i in 0..n + big_n + 2 {
        e[(i, i)] = 1.0;
    }
    let def_row = n + big_n + 2;
    for j in 0..n {
        e[(def_row, j)] = -plant.k[j];
    }
    e[(def_row, n + big_n + 2)] = 1.0;
    for k in 0..=big_n {
        e[(def_row + 1 + k, n + big_n)] = 1.0;
        e[(def_row + 1 + k, n + big_n + 1)] = -bundle.alternating[k];
    }

    let mut a = DMatrix::<f64>::zeros(dims.rows, dims.omega_dim);
    a.view_mut((0, 0), (n, n)).copy_from(&plant.a);
    for i in 0..n {
        a[(i, n + big_n + 1)] = plant.b[i];
    }
    // Xi'_N = first N rows of Itilde * V_N, i.e. chi_k' = nu_k / sqrt(2k+1).
    for j in 0..big_n {
        a[(n + j, n + big_n + 2 + j)] = bundle.itilde[(j, j)];
    }
    for j in 0..n {
        a[(n + big_n, j)] = plant.k[j];
    }
    a[(n + big_n + 1, n + big_n)] = 1.0;
    // Row n + N + 2 stays zero: it balances the KX' defining row of E.
    for k in 0..=big_n {
        for j in 0..big_n {
            a[(def_row + 1 + k, n + j)] = bundle.l_matrix[(k, j)];
        }
        a[(def_row + 1 + k, n + big_n + 2 + k)] = bundle.itilde[(k, k)];
    }

    // Column rank of E: structural, so a deficiency means a broken build.
    let sv = e.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if sv.iter().filter(|&&x| x > NULL_TOL * smax).count() < dims.z_dim {
        return Err(Error::Numerical(
            "interconnection matrix lost column rank during assembly".into(),
        ));
    }

    let v = kernel_basis(&e, &a)?;
    dims.null_dim = v.ncols();
    Ok(QsProblem { order, e, a, v, dims })
}

/// Orthonormal kernel basis of [E  -A] by singular value decomposition of
/// the zero-row-padded square matrix.
fn kernel_basis(e: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rows = e.nrows();
    let cols = e.ncols() + a.ncols();
    let mut padded = DMatrix::<f64>::zeros(cols, cols);
    padded.view_mut((0, 0), (rows, e.ncols())).copy_from(e);
    padded.view_mut((0, e.ncols()), (rows, a.ncols())).copy_from(&(-a));
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let mut basis_rows: Vec<usize> = (0..cols)
        .filter(|&i| svd.singular_values[i] <= NULL_TOL * smax)
        .collect();
    basis_rows.sort_unstable();
    if basis_rows.is_empty() {
        return Err(Error::Numerical("kernel of the interconnection is empty".into()));
    }
    let mut v = DMatrix::<f64>::zeros(cols, basis_rows.len());
    for (col, &i) in basis_rows.iter().enumerate() {
        for j in 0..cols {
            v[(j, col)] = v_t[(i, j)];
        }
    }
    Ok(v)
}

/// Decision variables of the separator.
#[derive(Debug, Clone)]
pub struct SeparatorParams {
    /// Symmetric (n+N) x (n+N) block paired with s^(-1) I.
    pub p: DMatrix<f64>,
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

impl SeparatorParams {
    pub fn zero(plant_dim: usize, order: usize) -> SeparatorParams {
        let d = plant_dim + order;
        SeparatorParams { p: DMatrix::zeros(d, d), q: 0.0, r: 0.0, s: 0.0 }
    }
}

/// Assembles the full separator Theta_N, a symmetric matrix on [z; omega].
pub fn assemble_separator(
    order: usize,
    plant_dim: usize,
    channel: &WaveChannel,
    params: &SeparatorParams,
) -> Result<DMatrix<f64>> {
    let d = plant_dim + order;
    if params.p.nrows() != d || params.p.ncols() != d {
        return Err(Error::Invalid(format!(
            "separator P block must be {d} x {d}, got {} x {}",
            params.p.nrows(),
            params.p.ncols()
        )));
    }
    let dims = QsDims::expected(plant_dim, order);
    let alpha = channel.alpha;
    let gamma = channel.gamma();
    let tau = channel.tau;
    let total = dims.z_dim + dims.omega_dim;
    let mut theta = DMatrix::<f64>::zeros(total, total);

    // Theta_1 on the z block.
    theta[(d, d)] = -params.q;
    theta[(d + 1, d + 1)] = params.r * (1.0 - alpha * alpha) * gamma * gamma;
    theta[(d + 2, d + 2)] = -tau * tau * params.s;

    // Theta_3 on the omega block.
    let o = dims.z_dim;
    theta[(o + d, o + d)] = params.q;
    theta[(o + d + 1, o + d + 1)] = params.r;
    for k in 0..=order {
        theta[(o + d + 2 + k, o + d + 2 + k)] = params.s;
    }

    // Theta_2 couples them: diag(-P, 0, -R gamma, 0).
    for i in 0..d {
        for j in 0..d {
            theta[(i, o + j)] = -params.p[(i, j)];
            theta[(o + j, i)] = -params.p[(i, j)];
        }
    }
    theta[(d + 1, o + d + 1)] = -params.r * gamma;
    theta[(o + d + 1, d + 1)] = -params.r * gamma;
    Ok(theta)
}

/// The uncertainty nabla(s) as an omega x z complex matrix.
fn nabla_matrix(
    order: usize,
    plant_dim: usize,
    channel: &WaveChannel,
    s: Complex64,
) -> Result<DMatrix<Complex64>> {
    let dims = QsDims::expected(plant_dim, order);
    let d = plant_dim + order;
    let mut nabla = DMatrix::<Complex64>::zeros(dims.omega_dim, dims.z_dim);
    let inv_s = Complex64::new(1.0, 0.0) / s;
    for i in 0..d {
        nabla[(i, i)] = inv_s;
    }
    nabla[(d, d)] = (-channel.tau * s).exp();
    nabla[(d + 1, d + 1)] = legendre::neutral_kernel(channel, s)?;
    let delta = legendre::delta_n(s, channel.tau, order);
    for k in 0..=order {
        nabla[(d + 2 + k, d + 2)] = delta[k];
    }
    Ok(nabla)
}

/// Numerically verifies that the separator is negative semidefinite on the
/// graph of the uncertainty at `sample_count` points of the closed right
/// half plane. A validation tool for the hand-proved bounds; the
/// feasibility path does not call it.
pub fn separator_negativity_check(
    order: usize,
    plant_dim: usize,
    channel: &WaveChannel,
    params: &SeparatorParams,
    sample_count: usize,
) -> Result<bool> {
    let theta = assemble_separator(order, plant_dim, channel, params)?;
    let dims = QsDims::expected(plant_dim, order);
    let theta_c = theta.map(|x| Complex64::new(x, 0.0));
    for i in 0..sample_count {
        let frac = i as f64 / (sample_count - 1).max(1) as f64;
        let omega = 10f64.powf(-2.0 + 4.5 * frac) / channel.tau;
        // Two thirds of the samples sit on the axis, the rest step into the
        // open half plane where the strict inequalities bite.
        let sigma = match i % 3 {
            0 | 1 => 0.0,
            _ => 10f64.powf(-3.0 + 3.0 * frac) / channel.tau,
        };
        let s = Complex64::new(sigma, omega);
        let nabla = nabla_matrix(order, plant_dim, channel, s)?;
        let mut stack = DMatrix::<Complex64>::zeros(dims.z_dim + dims.omega_dim, dims.z_dim);
        for j in 0..dims.z_dim {
            stack[(j, j)] = Complex64::new(1.0, 0.0);
        }
        stack.view_mut((dims.z_dim, 0), (dims.omega_dim, dims.z_dim)).copy_from(&nabla);
        let h = stack.adjoint() * &theta_c * &stack;
        if hermitian_max_eigenvalue(&h) > 1e-8 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest eigenvalue of a Hermitian matrix via its real symmetric
/// embedding [[Re, -Im], [Im, Re]].
fn hermitian_max_eigenvalue(h: &DMatrix<Complex64>) -> f64 {
    let m = h.nrows();
    let mut real = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            // Hermitianize to kill roundoff asymmetry.
            let v = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            real[(i, j)] = v.re;
            real[(i + m, j + m)] = v.re;
            real[(i + m, j)] = v.im;
            real[(i, j + m)] = -v.im;
        }
    }
    real.symmetric_eigen().eigenvalues.max()
}

/// Smallest eigenvalue of a real symmetric matrix; used for witness checks.
pub(crate) fn symmetric_min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}
