//! Transfer functions of the plant and the wave channel, and the
//! characteristic quasipolynomial of the coupled loop.
//!
//! With H(s) = K (sI - A)^{-1} B = N(s)/D(s) and the channel abbreviations
//! tau = 1/c, c1 = c c0, the loop characteristic function collapses to a
//! two-delay quasipolynomial
//!
//!   c_eq(s) = a0(s) + a1(s) e^{-tau s} + a2(s) e^{-2 tau s},
//!   a0 = (1 + c1) D,  a1 = -2 N,  a2 = (1 - c1) D.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{LtiPlant, WaveChannel};
use crate::poly::Poly;

/// Ratio of real polynomials N/D with any common roots removed.
#[derive(Debug, Clone)]
pub struct RationalTf {
    pub num: Poly,
    pub den: Poly,
    /// Common roots of the raw numerator and denominator that were
    /// cancelled (absolute 1e-7 pairing).
    pub cancelled: Vec<Complex64>,
}

impl RationalTf {
    /// True when the numerator is identically zero (e.g. K = 0); the loop
    /// is then open and the plant alone decides stability.
    pub fn is_null(&self) -> bool {
        self.num.is_zero()
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval(s) / self.den.eval(s)
    }
}

/// Absolute distance under which a numerator root and a denominator root
/// are treated as a pole-zero cancellation.
pub const CANCEL_TOL: f64 = 1e-7;

/// H(s) = K (sI - A)^{-1} B as a reduced rational function.
///
/// D is reconstructed from the eigenvalues of A (monic); N is recovered by
/// sampling K (xI - A)^{-1} B D(x) at Chebyshev-distributed real points and
/// fitting a degree < n polynomial in a Chebyshev basis. Sample points that
/// collide with real eigenvalues are nudged off them first.
pub fn plant_tf(plant: &LtiPlant) -> Result<RationalTf> {
    let n = plant.dim();
    let eigs = crate::linalg::eigenvalues_bounded(&plant.a)?;
    let den = Poly::from_roots(&eigs, 1.0);

    // Sampling radius that encloses the spectrum.
    let rho = eigs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let r = 1.5 * rho + 1.0;
    let real_eigs: Vec<f64> = eigs
        .iter()
        .filter(|z| z.im.abs() < 1e-8 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect();

    let m_samples = n + 4;
    let mut xs = Vec::with_capacity(m_samples);
    for j in 0..m_samples {
        let t = (std::f64::consts::PI * (2.0 * j as f64 + 1.0) / (2.0 * m_samples as f64)).cos();
        let mut x = r * t;
        // Keep a safe distance from real eigenvalues: the solve below would
        // otherwise amplify rounding by the inverse of the gap.
        for _ in 0..8 {
            if real_eigs.iter().all(|&e| (x - e).abs() > 1e-3 * r) {
                break;
            }
            x += 2.5e-3 * r;
        }
        xs.push(x);
    }

    let id = DMatrix::<f64>::identity(n, n);
    let mut values = Vec::with_capacity(m_samples);
    for &x in &xs {
        let m = &id * x - &plant.a;
        let y = m
            .lu()
            .solve(&plant.b)
            .ok_or_else(|| Error::Numerical(format!("(xI - A) solve failed at x = {x}")))?;
        let h = (&plant.k * &y)[(0, 0)];
        values.push(h * den.eval_real(x));
    }

    let num = fit_polynomial(&xs, &values, n.saturating_sub(1), r)?;
    let (num, den, cancelled) = cancel_common_roots(num, den);
    Ok(RationalTf { num, den, cancelled })
}

/// Least-squares polynomial fit of the given degree in the Chebyshev basis
/// on x/r, converted back to monomial coefficients.
fn fit_polynomial(xs: &[f64], ys: &[f64], degree: usize, r: f64) -> Result<Poly> {
    let ncoef = degree + 1;
    let mut design = DMatrix::<f64>::zeros(xs.len(), ncoef);
    for (row, &x) in xs.iter().enumerate() {
        let t = x / r;
        let mut tkm1 = 1.0;
        let mut tk = t;
        for col in 0..ncoef {
            design[(row, col)] = match col {
                0 => 1.0,
                1 => t,
                _ => {
                    let next = 2.0 * t * tk - tkm1;
                    tkm1 = tk;
                    tk = next;
                    next
                }
            };
        }
    }
    let rhs = DMatrix::from_column_slice(ys.len(), 1, ys);
    let sol = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Numerical(format!("numerator fit failed: {e}")))?;

    // Chebyshev -> monomial in t, then t = x/r.
    let mut cheb_mono: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
    for k in 2..ncoef.max(2) {
        let mut next = vec![0.0; k + 1];
        for (i, &c) in cheb_mono[k - 1].iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, &c) in cheb_mono[k - 2].iter().enumerate() {
            next[i] -= c;
        }
        cheb_mono.push(next);
    }
    let mut mono = vec![0.0; ncoef];
    for k in 0..ncoef {
        for (i, &c) in cheb_mono[k].iter().enumerate() {
            mono[i] += sol[(k, 0)] * c;
        }
    }
    for (i, c) in mono.iter_mut().enumerate() {
        *c /= r.powi(i as i32);
    }
    // Drop fit noise so that structurally lower-degree numerators (and the
    // N = 0 case) come out exact.
    let scale = mono.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let ceil = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let floor = 1e-9 * scale.max(ceil * 1e-6);
    for c in mono.iter_mut() {
        if c.abs() < floor {
            *c = 0.0;
        }
    }
    Ok(Poly::new(mono))
}

/// Greedy pairing of numerator and denominator roots within CANCEL_TOL;
/// both polynomials are rebuilt from their surviving roots.
fn cancel_common_roots(num: Poly, den: Poly) -> (Poly, Poly, Vec<Complex64>) {
    if num.is_zero() {
        return (num, den, Vec::new());
    }
    let nlead = num.coeff(num.degree());
    let dlead = den.coeff(den.degree());
    let nroots = num.roots();
    let mut droots = den.roots();
    let mut kept_n = Vec::new();
    let mut cancelled = Vec::new();
    for r in nroots {
        let hit = droots
            .iter()
            .enumerate()
            .map(|(i, d)| (i, (d - r).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        match hit {
            Some((i, dist)) if dist <= CANCEL_TOL => {
                droots.swap_remove(i);
                cancelled.push(r);
            }
            _ => kept_n.push(r),
        }
    }
    if cancelled.is_empty() {
        return (num, den, cancelled);
    }
    (
        Poly::from_roots(&kept_n, nlead),
        Poly::from_roots(&droots, dlead),
        cancelled,
    )
}

/// W(x, s) = (e^{-(s/c) x} + alpha e^{(s/c)(x-2)}) / (1 + alpha e^{-2 s/c}).
///
/// Denominator magnitudes below 1e-14 are reported as pole hits rather
/// than returning a meaningless quotient.
pub fn wave_tf(channel: &WaveChannel, x: f64, s: Complex64) -> Result<Complex64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Invalid(format!("position x must lie in [0,1], got {x}")));
    }
    let stau = s * channel.tau;
    let den = 1.0 + channel.alpha * (-2.0 * stau).exp();
    if den.norm() < 1e-14 {
        return Err(Error::AtChannelPole);
    }
    let num = (-stau * x).exp() + channel.alpha * (stau * (x - 2.0)).exp();
    Ok(num / den)
}

/// Common real part of the channel pole chain, (c/2) log|alpha|.
pub fn wave_pole_abscissa(channel: &WaveChannel) -> Result<f64> {
    if channel.alpha == 0.0 {
        return Err(Error::NoChannelPoles);
    }
    Ok(0.5 * channel.c * channel.alpha.abs().ln())
}

/// Supremum of |W(1, i omega)| over the axis: max((c c0)^{-1}, 1).
pub fn wave_hinf_norm(channel: &WaveChannel) -> f64 {
    (1.0 / channel.c1).max(1.0)
}

/// Characteristic quasipolynomial a0 + a1 e^{-tau s} + a2 e^{-2 tau s}.
/// The polynomial part depends only on c1; tau enters the exponentials.
#[derive(Debug, Clone)]
pub struct QuasiPolynomial {
    pub a0: Poly,
    pub a1: Poly,
    pub a2: Poly,
    pub tau: f64,
    pub c1: f64,
}

pub fn build_ceq(tf: &RationalTf, channel: &WaveChannel) -> QuasiPolynomial {
    let c1 = channel.c1;
    QuasiPolynomial {
        a0: tf.den.scale(1.0 + c1),
        a1: tf.num.scale(-2.0),
        a2: tf.den.scale(1.0 - c1),
        tau: channel.tau,
        c1,
    }
}

impl QuasiPolynomial {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let z = (-s * self.tau).exp();
        self.a0.eval(s) + self.a1.eval(s) * z + self.a2.eval(s) * z * z
    }

    /// Same quasipolynomial at a different delay within the fixed-c1 family.
    pub fn with_tau(&self, tau: f64) -> QuasiPolynomial {
        QuasiPolynomial { tau, ..self.clone() }
    }

    /// Delay-free characteristic polynomial: c_eq(s, 0) = 2 (D - N).
    pub fn at_zero_delay(&self) -> Poly {
        self.a0.add(&self.a1).add(&self.a2)
    }
}
