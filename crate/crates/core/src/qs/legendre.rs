//! Shifted Legendre polynomials and the delay-kernel coefficient vector.
//!
//! The basis lives on [-tau, 0]: L_k(theta) = P_k(1 + 2 theta / tau) with
//! P_k the standard Legendre polynomial on [-1, 1]. The properties used by
//! the stability test are elementary: L_k(0) = 1, L_k(-tau) = (-1)^k,
//! ||L_k||^2 = tau / (2k+1), and the derivative of the stacked value
//! vector is L_N times the vector itself, where L_N is strictly lower
//! triangular with entries l_ik = (2k+1)(1 - (-1)^(k+i)) c for k < i and
//! c = 1/tau.
//!
//! The kernel coefficients are delta_k(s) = sqrt(2k+1) <e^(theta s), L_k>,
//! the (normalized) Legendre coefficients of theta -> e^(theta s). In
//! closed form delta_k(s) = sqrt(2k+1) tau e^(-tau s / 2) i_k(tau s / 2)
//! with i_k the modified spherical Bessel function of the first kind. Two
//! evaluation routes cover the plane: the power series of i_k for small
//! |tau s / 2| (which also handles s = 0 exactly, where the vector is
//! (tau, 0, ..., 0)), and for large arguments the forward recurrence
//! obtained from integration by parts,
//!
//!   s delta-tilde_k = 1 - (-1)^k e^(-tau s) - sum_(j<k) l_kj delta-tilde_j,
//!
//! which is the same relation the interconnection matrices encode. On the
//! closed right half plane the vector obeys the Bessel bound
//! ||delta_N(s)||^2 <= tau^2, the inequality behind the S block of the
//! separator.

use crate::error::{Error, Result};
use crate::model::WaveChannel;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Legendre data for one projection order, frozen at assembly time.
#[derive(Debug, Clone)]
pub struct LegendreBundle {
    /// Projection order N; matrices below have N+1 rows.
    pub order: usize,
    /// Strictly lower triangular derivative matrix L_N, (N+1) x (N+1).
    pub l_matrix: DMatrix<f64>,
    /// Boundary-value column ((-1)^k for k = 0..N).
    pub alternating: DVector<f64>,
    /// diag(1/sqrt(2k+1), k = 0..N).
    pub itilde: DMatrix<f64>,
    pub tau: f64,
}

/// Builds the Legendre data for the channel's delay.
pub fn legendre_bundle(order: usize, channel: &WaveChannel) -> LegendreBundle {
    let c = 1.0 / channel.tau;
    let m = order + 1;
    let mut l = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for k in 0..i {
            if (k + i) % 2 == 1 {
                l[(i, k)] = (2 * k + 1) as f64 * 2.0 * c;
            }
        }
    }
    let itilde =
        DMatrix::<f64>::from_diagonal(&DVector::from_fn(m, |k, _| 1.0 / ((2 * k + 1) as f64).sqrt()));
    LegendreBundle {
        order,
        l_matrix: l,
        alternating: alternating_column(m),
        itilde,
        tau: channel.tau,
    }
}

/// Column [(-1)^0, ..., (-1)^(len-1)]^T.
pub fn alternating_column(len: usize) -> DVector<f64> {
    DVector::from_fn(len, |k, _| if k % 2 == 0 { 1.0 } else { -1.0 })
}

/// Values [L_0(x), ..., L_N(x)] at x in [-tau, 0], by the three-term
/// recurrence of the underlying Legendre polynomials.
pub fn legendre_values(order: usize, tau: f64, x: f64) -> DVector<f64> {
    let u = 1.0 + 2.0 * x / tau;
    let mut vals = DVector::<f64>::zeros(order + 1);
    vals[0] = 1.0;
    if order >= 1 {
        vals[1] = u;
    }
    for k in 1..order {
        vals[k + 1] =
            ((2 * k + 1) as f64 * u * vals[k] - k as f64 * vals[k - 1]) / (k + 1) as f64;
    }
    vals
}

/// The neutral uncertainty delta(s) = (1 + alpha)/(1 + alpha e^(-2 tau s)).
pub fn neutral_kernel(channel: &WaveChannel, s: Complex64) -> Result<Complex64> {
    let den = Complex64::new(1.0, 0.0) + channel.alpha * (-2.0 * channel.tau * s).exp();
    if den.norm() < 1e-14 {
        return Err(Error::AtChannelPole);
    }
    Ok(Complex64::new(1.0 + channel.alpha, 0.0) / den)
}

/// Argument magnitude at which delta_N evaluation switches from the power
/// series of i_k to the integration-by-parts recurrence.
const SERIES_RADIUS: f64 = 8.0;

/// Kernel coefficient vector delta_N(s), length order+1.
pub fn delta_n(s: Complex64, tau: f64, order: usize) -> DVector<Complex64> {
    let z = s * (0.5 * tau);
    if z.norm() <= SERIES_RADIUS {
        delta_series(z, tau, order)
    } else {
        delta_recurrence(s, tau, order)
    }
}

/// Series route: delta_k = sqrt(2k+1) tau e^(-z) i_k(z), z = tau s / 2,
/// with i_k(z) = z^k sum_m (z^2/2)^m / (m! (2k+2m+1)!!).
fn delta_series(z: Complex64, tau: f64, order: usize) -> DVector<Complex64> {
    let prefactor = (-z).exp() * tau;
    let half_z2 = z * z * 0.5;
    DVector::from_fn(order + 1, |k, _| {
        // t_0 = z^k / (2k+1)!!, then t_(m+1) = t_m z^2 / (2 (m+1)(2k+2m+3)).
        let mut term = Complex64::new(1.0, 0.0);
        for j in 0..k {
            term *= z / (2 * j + 3) as f64;
        }
        let mut sum = term;
        for m in 0..200 {
            term *= half_z2 / ((m + 1) as f64 * (2 * k + 2 * m + 3) as f64);
            sum += term;
            if term.norm() <= 1e-18 * sum.norm().max(1e-30) {
                break;
            }
        }
        prefactor * sum * ((2 * k + 1) as f64).sqrt()
    })
}

/// Recurrence route, stable for large |tau s|: the unnormalized
/// coefficients obey s d_k = 1 - (-1)^k e^(-tau s) - sum_(j<k) l_kj d_j.
fn delta_recurrence(s: Complex64, tau: f64, order: usize) -> DVector<Complex64> {
    let c = 1.0 / tau;
    let emts = (-tau * s).exp();
    let mut unnorm = vec![Complex64::new(0.0, 0.0); order + 1];
    for k in 0..=order {
        let boundary = Complex64::new(1.0, 0.0)
            - if k % 2 == 0 { emts } else { -emts };
        let mut acc = boundary;
        for (j, dj) in unnorm.iter().enumerate().take(k) {
            if (k + j) % 2 == 1 {
                acc -= (2 * j + 1) as f64 * 2.0 * c * dj;
            }
        }
        unnorm[k] = acc / s;
    }
    DVector::from_fn(order + 1, |k, _| unnorm[k] * ((2 * k + 1) as f64).sqrt())
}
