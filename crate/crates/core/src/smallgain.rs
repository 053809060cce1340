//! Frequency-domain small-gain certificate for the coupled loop.
//!
//! The channel seen from the plant is a stable all-pass-like operator with
//! H-infinity norm max(1/(c c0), 1); the plant contributes
//! H(s) = K (sI - A)^{-1} B. The loop is input/output stable whenever
//! ||H||_inf ||W||_inf < 1, which collapses to ||H||_inf < min(c c0, 1).
//! The norm itself is computed by the Hamiltonian bisection: gamma exceeds
//! ||H||_inf exactly when
//!
//!   M_gamma = [ A          B B^T / gamma ]
//!             [ -K^T K / gamma      -A^T ]
//!
//! has no imaginary-axis eigenvalues.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::eigenvalues_bounded;
use crate::model::{LtiPlant, WaveChannel};

/// Computed plant norm with the frequency that attains it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HinfResult {
    /// Upper end of the final bisection bracket: certified >= the true norm
    /// and >= every sampled magnitude, within the requested tolerance.
    pub norm: f64,
    pub peak_frequency: f64,
    /// Hamiltonian eigenvalue evaluations spent in doubling and bisection.
    pub iterations: usize,
}

/// |H(i omega)| by direct complex solve.
fn gain_at(plant: &LtiPlant, omega: f64) -> f64 {
    let n = plant.dim();
    let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = Complex::new(-plant.a[(i, j)], 0.0);
        }
        m[(i, i)] += Complex::new(0.0, omega);
    }
    let b = DVector::from_iterator(n, plant.b.iter().map(|&v| Complex::new(v, 0.0)));
    match m.lu().solve(&b) {
        Some(y) => {
            let mut h = Complex::new(0.0, 0.0);
            for j in 0..n {
                h += Complex::new(plant.k[j], 0.0) * y[j];
            }
            h.norm()
        }
        None => f64::INFINITY,
    }
}

/// True when M_gamma has an eigenvalue within 1e-8 |M|_F of the axis,
/// i.e. gamma <= ||H||_inf up to that resolution.
fn hamiltonian_touches_axis(plant: &LtiPlant, gamma: f64) -> Result<(bool, Vec<f64>)> {
    let n = plant.dim();
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = plant.a[(i, j)];
            m[(n + i, n + j)] = -plant.a[(j, i)];
            m[(i, n + j)] = plant.b[i] * plant.b[j] / gamma;
            m[(n + i, j)] = -plant.k[i] * plant.k[j] / gamma;
        }
    }
    let tol = 1e-8 * m.norm();
    let eigs = eigenvalues_bounded(&m)?;
    let mut axis_freqs = Vec::new();
    for e in &eigs {
        if e.re.abs() <= tol {
            axis_freqs.push(e.im.abs());
        }
    }
    Ok((!axis_freqs.is_empty(), axis_freqs))
}

/// ||H||_inf of the plant transfer function by sampling plus Hamiltonian
/// bisection, to relative tolerance rtol.
///
/// Requires A Hurwitz (all eigenvalues left of -1e-10); the identically
/// zero transfer function reports norm 0 at frequency 0.
pub fn hinf_norm(plant: &LtiPlant, rtol: f64) -> Result<HinfResult> {
    if !(rtol > 0.0 && rtol < 1.0) {
        return Err(Error::Invalid(format!("rtol must lie in (0,1), got {rtol}")));
    }
    let eigs = eigenvalues_bounded(&plant.a)?;
    if eigs.iter().any(|e| e.re >= -1e-10) {
        return Err(Error::NotHurwitz);
    }

    let omega_scale = eigs
        .iter()
        .map(|e| e.im.abs() + e.re.abs())
        .fold(1.0f64, f64::max);
    let mut samples = vec![0.0f64];
    let npts = 2000;
    for k in 0..npts {
        let t = k as f64 / (npts - 1) as f64;
        samples.push(omega_scale * 10f64.powf(-3.0 + 6.0 * t));
    }
    let mut best_omega = 0.0;
    let mut best = 0.0f64;
    for &w in &samples {
        let g = gain_at(plant, w);
        if g > best {
            best = g;
            best_omega = w;
        }
    }
    if best < 1e-14 {
        return Ok(HinfResult { norm: 0.0, peak_frequency: 0.0, iterations: 0 });
    }

    let mut iterations = 0usize;
    let mut lo = best;
    let mut hi = 2.0 * best;
    let mut axis_candidates: Vec<f64> = Vec::new();
    loop {
        let (touches, freqs) = hamiltonian_touches_axis(plant, hi)?;
        iterations += 1;
        if !touches {
            break;
        }
        axis_candidates = freqs;
        lo = hi;
        hi *= 2.0;
        if iterations > 80 {
            return Err(Error::Numerical("H-infinity doubling failed to bracket".into()));
        }
    }
    while hi - lo > 0.4 * rtol * hi {
        let mid = 0.5 * (lo + hi);
        let (touches, freqs) = hamiltonian_touches_axis(plant, mid)?;
        iterations += 1;
        if touches {
            axis_candidates = freqs;
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // The peak frequency comes from the last gamma level that still
    // touched the axis; fall back to the sampled argmax.
    let mut peak = best_omega;
    let mut peak_gain = best;
    for w in axis_candidates {
        let g = gain_at(plant, w);
        if g > peak_gain {
            peak_gain = g;
            peak = w;
        }
    }
    Ok(HinfResult { norm: hi, peak_frequency: peak, iterations })
}

/// Verdict of the small-gain test. The test only ever certifies stability;
/// it cannot certify instability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallGainVerdict {
    /// ||H||_inf ||W||_inf < 1: stable for every delay.
    Stable,
    /// The bound fails here; stability is not decided by this test.
    Inconclusive,
    /// The test's standing assumption (A Hurwitz, ||H||_inf < 1) fails.
    Inapplicable,
}

/// Small-gain certificate for one plant/channel pair.
#[derive(Debug, Clone, Serialize)]
pub struct SmallGainReport {
    pub verdict: SmallGainVerdict,
    /// None when A is not Hurwitz and the norm is undefined for this test.
    pub plant_norm: Option<f64>,
    pub peak_frequency: Option<f64>,
    pub channel_norm: f64,
    /// 1 - ||H|| ||W||, when the norm exists.
    pub margin: Option<f64>,
}

pub fn small_gain(plant: &LtiPlant, channel: &WaveChannel, rtol: f64) -> Result<SmallGainReport> {
    let channel_norm = if channel.c1 > 0.0 { (1.0 / channel.c1).max(1.0) } else { f64::INFINITY };
    let hinf = match hinf_norm(plant, rtol) {
        Ok(h) => h,
        Err(Error::NotHurwitz) => {
            return Ok(SmallGainReport {
                verdict: SmallGainVerdict::Inapplicable,
                plant_norm: None,
                peak_frequency: None,
                channel_norm,
                margin: None,
            });
        }
        Err(e) => return Err(e),
    };
    let product = hinf.norm * channel_norm;
    let verdict = if hinf.norm >= 1.0 {
        SmallGainVerdict::Inapplicable
    } else if product < 1.0 {
        SmallGainVerdict::Stable
    } else {
        SmallGainVerdict::Inconclusive
    };
    Ok(SmallGainReport {
        verdict,
        plant_norm: Some(hinf.norm),
        peak_frequency: Some(hinf.peak_frequency),
        channel_norm,
        margin: if product.is_finite() { Some(1.0 - product) } else { None },
    })
}

/// Smallest wave speed certified by the small-gain test for each far-end
/// damping value: c > ||H||_inf / c0. Requires the test to be applicable
/// at all (A Hurwitz and ||H||_inf < 1).
pub fn cmin_curve(plant: &LtiPlant, c0_values: &[f64], rtol: f64) -> Result<Vec<(f64, f64)>> {
    let hinf = hinf_norm(plant, rtol)?;
    if hinf.norm >= 1.0 {
        return Err(Error::Invalid(format!(
            "plant norm {} >= 1: the small-gain bound certifies no channel",
            hinf.norm
        )));
    }
    let mut out = Vec::with_capacity(c0_values.len());
    for &c0 in c0_values {
        if !(c0 > 0.0) {
            return Err(Error::Invalid(format!("c0 values must be positive, got {c0}")));
        }
        out.push((c0, hinf.norm / c0));
    }
    Ok(out)
}
