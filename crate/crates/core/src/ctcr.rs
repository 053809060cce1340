//! Exact delay-stability accounting for the loop characteristic
//! quasipolynomial c_eq(s) = a0(s) + a1(s) e^{-tau s} + a2(s) e^{-2 tau s}.
//!
//! On the imaginary axis the bilinear substitution
//! e^{-i omega tau} = (1 - i omega T)/(1 + i omega T), T real, turns the
//! delay terms into rational functions of T without approximation: the
//! substitution is exact at s = i omega for every delay in the chain
//! tau_l = (2/omega)(atan(omega T) + l pi). Clearing denominators gives the
//! polynomial family
//!
//!   cbar(s, T) = t0(s) + t1(s) T + t2(s) T^2,
//!   t0 = D - N,  t1 = 2 c1 s D,  t2 = s^2 (D + N),
//!
//! whose imaginary-axis zeros (omega, T) enumerate every potential crossing
//! of the original quasipolynomial, for all delays at once. Splitting
//! cbar(i omega, T) into real and imaginary parts yields two quadratics in
//! T; their resultant is a single real polynomial in omega whose positive
//! roots are the candidate crossing frequencies. Each surviving crossing is
//! assigned a root tendency (the sign of Re ds/dtau, invariant along the
//! delay chain), and a sweep over the delay axis turns the crossing list
//! into exact stability intervals.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{real_quadratic_roots, Poly};
use crate::transfer::RationalTf;

/// Relative half-width under which a root is treated as lying on the
/// imaginary axis.
pub const AXIS_TOL: f64 = 1e-9;

/// The Rekasius-transformed family t0 + t1 T + t2 T^2 together with the
/// reduced plant polynomials it was built from.
#[derive(Debug, Clone)]
pub struct TransformedPoly {
    /// Jointly normalized so the largest coefficient across t0, t1, t2 is 1.
    pub t0: Poly,
    pub t1: Poly,
    pub t2: Poly,
    pub c1: f64,
    /// Reduced denominator and numerator of the plant transfer function.
    d: Poly,
    n: Poly,
    /// Cancelled plant modes persist as delay-independent closed-loop
    /// eigenvalues; the strictly unstable ones are carried in every count.
    pub hidden_unstable: usize,
}

impl TransformedPoly {
    /// Builds the family for a reduced transfer function and channel ratio
    /// c1 = c c0 > 0.
    ///
    /// Refuses c1 <= 0 (undamped far end, not stabilizable), cancelled
    /// modes on the axis, and plants whose phase-reversal polynomial D + N
    /// has imaginary-axis roots: at such frequencies e^{-tau s} = -1 solves
    /// the loop, a crossing the finite-T family cannot represent.
    pub fn new(tf: &RationalTf, c1: f64) -> Result<Self> {
        if !(c1 > 0.0) {
            return Err(Error::NotStabilizable);
        }
        let mut hidden_unstable = 0usize;
        for z in &tf.cancelled {
            if z.re.abs() <= AXIS_TOL * z.norm().max(1.0) {
                return Err(Error::DegenerateFamily(format!(
                    "cancelled plant mode {z} lies on the imaginary axis"
                )));
            }
            if z.re > 0.0 {
                hidden_unstable += 1;
            }
        }
        let d = tf.den.clone();
        let n = tf.num.clone();
        let sum = d.add(&n);
        for z in sum.roots() {
            if z.re.abs() <= AXIS_TOL * z.norm().max(1.0) {
                return Err(Error::DegenerateFamily(format!(
                    "D + N vanishes at {z}: phase-reversal crossing outside the finite-T family"
                )));
            }
        }
        let t0 = d.sub(&n);
        let t1 = d.scale(2.0 * c1).shift_up(1);
        let t2 = sum.shift_up(2);
        let scale = t0
            .max_abs_coeff()
            .max(t1.max_abs_coeff())
            .max(t2.max_abs_coeff());
        if scale == 0.0 {
            return Err(Error::DegenerateFamily(
                "transfer function is identically zero".into(),
            ));
        }
        Ok(TransformedPoly {
            t0: t0.scale(1.0 / scale),
            t1: t1.scale(1.0 / scale),
            t2: t2.scale(1.0 / scale),
            c1,
            d,
            n,
            hidden_unstable,
        })
    }

    pub fn den(&self) -> &Poly {
        &self.d
    }

    pub fn num(&self) -> &Poly {
        &self.n
    }

    /// cbar(i omega, T) via the stored normalized family.
    pub fn eval_axis(&self, omega: f64, t: f64) -> Complex64 {
        let s = Complex64::new(0.0, omega);
        self.t0.eval(s) + self.t1.eval(s) * t + self.t2.eval(s) * t * t
    }

    /// Natural residual magnitude for eval_axis at (omega, T).
    pub fn residual_scale(&self, omega: f64, t: f64) -> f64 {
        self.t0.abs_eval(omega)
            + self.t1.abs_eval(omega) * t.abs()
            + self.t2.abs_eval(omega) * t * t
    }

    /// Delay-free polynomial D - N, the characteristic polynomial of
    /// A + B K restricted to the non-cancelled modes.
    pub fn at_zero_delay(&self) -> Poly {
        self.d.sub(&self.n)
    }

    fn ri_split(&self) -> RiSplit {
        let (r0, i0) = self.t0.imaginary_axis_split();
        let (r1, i1) = self.t1.imaginary_axis_split();
        let (r2, i2) = self.t2.imaginary_axis_split();
        RiSplit { r0, r1, r2, i0, i1, i2 }
    }
}

/// Real/imaginary parts of the three family coefficients on the axis.
struct RiSplit {
    r0: Poly,
    r1: Poly,
    r2: Poly,
    i0: Poly,
    i1: Poly,
    i2: Poly,
}

impl RiSplit {
    fn re_at(&self, omega: f64) -> (f64, f64, f64) {
        (
            self.r0.eval_real(omega),
            self.r1.eval_real(omega),
            self.r2.eval_real(omega),
        )
    }

    fn im_at(&self, omega: f64) -> (f64, f64, f64) {
        (
            self.i0.eval_real(omega),
            self.i1.eval_real(omega),
            self.i2.eval_real(omega),
        )
    }

    /// Resultant in T of the two quadratics R(omega, T), I(omega, T):
    /// (r2 i0 - r0 i2)^2 - (r2 i1 - r1 i2)(r1 i0 - r0 i1).
    fn resultant(&self) -> Poly {
        let e = self.r2.mul(&self.i0).sub(&self.r0.mul(&self.i2));
        let f = self.r2.mul(&self.i1).sub(&self.r1.mul(&self.i2));
        let g = self.r1.mul(&self.i0).sub(&self.r0.mul(&self.i1));
        e.mul(&e).sub(&f.mul(&g))
    }
}

/// Direction in which a conjugate root pair moves across the axis as the
/// delay grows through a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tendency {
    Destabilizing,
    Stabilizing,
}

impl Tendency {
    /// Net change of the unstable root count, counting the conjugate.
    pub fn change(self) -> i64 {
        match self {
            Tendency::Destabilizing => 2,
            Tendency::Stabilizing => -2,
        }
    }
}

/// One imaginary-axis crossing shared by the whole delay chain.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Crossing {
    pub omega: f64,
    pub t_rekasius: f64,
    pub tendency: Tendency,
}

/// All crossing frequencies via the resultant of the axis split.
///
/// An identically vanishing resultant means R and I share a common factor
/// for every omega and the family is degenerate; this is reported, never
/// silently treated as "no crossings".
pub fn crossing_set(tp: &TransformedPoly) -> Result<Vec<Crossing>> {
    if tp.n.is_zero() {
        // Open output: the loop term vanishes and no delay crossing exists.
        return Ok(Vec::new());
    }
    let split = tp.ri_split();
    let res = split.resultant();
    if res.max_abs_coeff() <= 1e-12 {
        return Err(Error::DegenerateFamily(
            "axis resultant vanishes identically".into(),
        ));
    }
    // Coefficients that cancel structurally (the resultant is even in omega
    // and divisible by a power of omega) survive as rounding residue; zero
    // them so the origin factor deflates exactly.
    let floor = 5e-14 * res.max_abs_coeff();
    let res = Poly::new(
        res.coeffs()
            .iter()
            .map(|&c| if c.abs() <= floor { 0.0 } else { c })
            .collect(),
    );

    // Positive real roots, clustered.
    let mut omegas: Vec<f64> = res
        .roots()
        .into_iter()
        .filter(|z| z.im.abs() <= AXIS_TOL * z.re.abs().max(1.0) && z.re > AXIS_TOL)
        .map(|z| z.re)
        .collect();
    omegas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    omegas.dedup_by(|b, a| (*b - *a).abs() <= 1e-6 * b.abs().max(1.0));

    let mut found: Vec<(f64, f64)> = Vec::new();
    for omega in omegas {
        for (om, t) in back_substitute(tp, &split, omega) {
            let dup = found
                .iter()
                .any(|&(o, tt)| {
                    (o - om).abs() <= 1e-7 * om.abs().max(1.0)
                        && (tt - t).abs() <= 1e-7 * t.abs().max(1.0)
                });
            if !dup {
                found.push((om, t));
            }
        }
    }
    attach_tendencies(tp, found)
}

/// Candidate (omega, T) pairs at one resultant root: real T roots of both
/// quadratics, kept when the full family residual vanishes, then polished
/// by a two-dimensional Newton iteration on (R, I).
fn back_substitute(tp: &TransformedPoly, split: &RiSplit, omega: f64) -> Vec<(f64, f64)> {
    let (r0, r1, r2) = split.re_at(omega);
    let (j0, j1, j2) = split.im_at(omega);
    let mut cands = real_quadratic_roots(r2, r1, r0);
    cands.extend(real_quadratic_roots(j2, j1, j0));
    let mut out = Vec::new();
    for t in cands {
        let (om, t) = newton_polish(split, omega, t);
        let resid = tp.eval_axis(om, t).norm();
        if resid <= 1e-8 * tp.residual_scale(om, t).max(1e-300) && om > AXIS_TOL {
            out.push((om, t));
        }
    }
    out
}

/// Newton iteration on F(omega, T) = (R, I); returns the input unchanged
/// when the Jacobian is near singular (tangential geometry).
fn newton_polish(split: &RiSplit, mut omega: f64, mut t: f64) -> (f64, f64) {
    let dr0 = split.r0.derivative();
    let dr1 = split.r1.derivative();
    let dr2 = split.r2.derivative();
    let di0 = split.i0.derivative();
    let di1 = split.i1.derivative();
    let di2 = split.i2.derivative();
    let (o0, t00) = (omega, t);
    for _ in 0..12 {
        let (r0, r1, r2) = split.re_at(omega);
        let (j0, j1, j2) = split.im_at(omega);
        let fr = r0 + r1 * t + r2 * t * t;
        let fi = j0 + j1 * t + j2 * t * t;
        let a = dr0.eval_real(omega) + dr1.eval_real(omega) * t + dr2.eval_real(omega) * t * t;
        let b = r1 + 2.0 * r2 * t;
        let c = di0.eval_real(omega) + di1.eval_real(omega) * t + di2.eval_real(omega) * t * t;
        let d = j1 + 2.0 * j2 * t;
        let det = a * d - b * c;
        let scale = (a.abs() + b.abs()) * (c.abs() + d.abs());
        if det.abs() <= 1e-14 * scale.max(1e-300) {
            return (o0, t00);
        }
        let dom = (fr * d - b * fi) / det;
        let dt = (a * fi - fr * c) / det;
        omega -= dom;
        t -= dt;
        if dom.abs() <= 1e-15 * omega.abs().max(1.0) && dt.abs() <= 1e-15 * t.abs().max(1.0) {
            break;
        }
    }
    if omega.is_finite() && t.is_finite() {
        (omega, t)
    } else {
        (o0, t00)
    }
}

/// Tendency for each crossing; an undecidable direction is an error, not a
/// guess.
fn attach_tendencies(tp: &TransformedPoly, pairs: Vec<(f64, f64)>) -> Result<Vec<Crossing>> {
    let mut out = Vec::with_capacity(pairs.len());
    for (omega, t) in pairs {
        let tendency = root_tendency(tp, omega, t)?;
        out.push(Crossing { omega, t_rekasius: t, tendency });
    }
    out.sort_by(|a, b| a.omega.partial_cmp(&b.omega).unwrap());
    Ok(out)
}

/// Sign of Re ds/dtau at the crossing, from the exact differential of the
/// quasipolynomial:
///
///   ds/dtau = s (a1 z + 2 a2 z^2) / (a0' + (a1' - tau a1) z + (a2' - 2 tau a2) z^2)
///
/// with z = (1 - i omega T)/(1 + i omega T) exact on the whole chain. The
/// sign is evaluated at the first three chain delays and must agree; a
/// near-tangential crossing (vanishing real part) is rejected.
pub fn root_tendency(tp: &TransformedPoly, omega: f64, t: f64) -> Result<Tendency> {
    let a0 = tp.d.scale(1.0 + tp.c1);
    let a1 = tp.n.scale(-2.0);
    let a2 = tp.d.scale(1.0 - tp.c1);
    let da0 = a0.derivative();
    let da1 = a1.derivative();
    let da2 = a2.derivative();
    let s = Complex64::new(0.0, omega);
    let z = (Complex64::new(1.0, 0.0) - s * t) / (Complex64::new(1.0, 0.0) + s * t);

    let numer = s * (a1.eval(s) * z + a2.eval(s) * z * z * 2.0);
    let mut signs = Vec::new();
    for tau in chain_delays(omega, t).into_iter().take(3) {
        let denom = da0.eval(s)
            + (da1.eval(s) - a1.eval(s) * tau) * z
            + (da2.eval(s) - a2.eval(s) * tau * 2.0) * z * z;
        let dscale = da0.abs_eval(omega)
            + (da1.abs_eval(omega) + a1.abs_eval(omega) * tau)
            + (da2.abs_eval(omega) + a2.abs_eval(omega) * tau * 2.0);
        if denom.norm() <= 1e-12 * dscale.max(1e-300) {
            return Err(Error::DegenerateFamily(format!(
                "repeated axis root at omega = {omega}: crossing direction undefined"
            )));
        }
        let ds = numer / denom;
        if ds.re.abs() <= 1e-9 * ds.norm() {
            return Err(Error::DegenerateFamily(format!(
                "tangential axis crossing at omega = {omega}"
            )));
        }
        signs.push(ds.re > 0.0);
    }
    if signs.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::DegenerateFamily(format!(
            "crossing direction at omega = {omega} flips along the delay chain"
        )));
    }
    Ok(if signs[0] {
        Tendency::Destabilizing
    } else {
        Tendency::Stabilizing
    })
}

/// First few positive delays of the chain at (omega, T), ignoring any cap.
fn chain_delays(omega: f64, t: f64) -> Vec<f64> {
    let base = 2.0 / omega * (omega * t).atan();
    let step = 2.0 * std::f64::consts::PI / omega;
    let mut out = Vec::new();
    let mut l = 0;
    while out.len() < 4 {
        let tau = base + step * l as f64;
        if tau > 1e-12 {
            out.push(tau);
        }
        l += 1;
    }
    out
}

/// All delays of the crossing's chain in (0, tau_max].
pub fn delays_for_crossing(cr: &Crossing, tau_max: f64) -> Vec<f64> {
    let base = 2.0 / cr.omega * (cr.omega * cr.t_rekasius).atan();
    let step = 2.0 * std::f64::consts::PI / cr.omega;
    let mut out = Vec::new();
    // base lies in (-pi/omega, pi/omega); the first chain member above zero
    // is at most one step away.
    let mut l = ((-base) / step).floor() as i64 - 1;
    loop {
        let tau = base + step * l as f64;
        if tau > tau_max {
            break;
        }
        if tau > 1e-12 {
            out.push(tau);
        }
        l += 1;
    }
    out
}

/// Number of strictly unstable roots of the delay-free loop, including the
/// hidden cancelled modes. An axis root at tau = 0 makes every subsequent
/// count undefined and is an error.
pub fn count_unstable_at_zero(tp: &TransformedPoly) -> Result<usize> {
    let p = tp.at_zero_delay();
    let mut nu = tp.hidden_unstable;
    for z in p.roots() {
        if z.re.abs() <= AXIS_TOL * z.norm().max(1.0) {
            return Err(Error::MarginalAtZero);
        }
        if z.re > 0.0 {
            nu += 1;
        }
    }
    Ok(nu)
}

/// One point of the delay axis where axis crossings occur; coincident
/// delays from different crossings are merged and their changes summed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DelayEvent {
    pub tau: f64,
    /// Net change of the unstable root count across this delay.
    pub change: i64,
}

/// Maximal delay interval with a constant unstable root count.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub unstable: usize,
}

/// Complete stability accounting over (0, tau_max).
#[derive(Debug, Clone, Serialize)]
pub struct StabilityAccount {
    pub nu_zero: usize,
    pub crossings: Vec<Crossing>,
    pub events: Vec<DelayEvent>,
    pub segments: Vec<Segment>,
    pub tau_max: f64,
}

impl StabilityAccount {
    /// Open intervals of the delay axis with no unstable roots.
    pub fn stable_intervals(&self) -> Vec<(f64, f64)> {
        self.segments
            .iter()
            .filter(|s| s.unstable == 0)
            .map(|s| (s.lo, s.hi))
            .collect()
    }

    /// Unstable root count at a delay, or None when the delay sits on an
    /// event (within 1e-9 relative) and the count is not defined.
    pub fn unstable_at(&self, tau: f64) -> Option<usize> {
        if self
            .events
            .iter()
            .any(|e| (e.tau - tau).abs() <= 1e-9 * tau.abs().max(1.0))
        {
            return None;
        }
        self.segments
            .iter()
            .find(|s| s.lo < tau && tau <= s.hi)
            .map(|s| s.unstable)
    }

    /// Distance from tau to the nearest event, +inf when there is none.
    pub fn event_distance(&self, tau: f64) -> f64 {
        self.events
            .iter()
            .map(|e| (e.tau - tau).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds the delay-axis account from a crossing set: expand each crossing
/// into its delay chain, merge coincident delays, and walk the axis
/// starting from the delay-free count.
pub fn account_from_crossings(
    crossings: Vec<Crossing>,
    nu_zero: usize,
    tau_max: f64,
) -> StabilityAccount {
    let mut raw: Vec<(f64, i64)> = Vec::new();
    for cr in &crossings {
        for tau in delays_for_crossing(cr, tau_max) {
            raw.push((tau, cr.tendency.change()));
        }
    }
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut events: Vec<DelayEvent> = Vec::new();
    for (tau, change) in raw {
        match events.last_mut() {
            Some(e) if (tau - e.tau).abs() <= 1e-9 * tau.max(1.0) => e.change += change,
            _ => events.push(DelayEvent { tau, change }),
        }
    }
    events.retain(|e| e.change != 0);

    let mut segments = Vec::with_capacity(events.len() + 1);
    let mut count = nu_zero as i64;
    let mut lo = 0.0;
    for e in &events {
        segments.push(Segment { lo, hi: e.tau, unstable: count.max(0) as usize });
        count += e.change;
        if count < 0 {
            // A negative count means the initial count or a tendency was
            // wrong; clamping keeps the walk sane and the mismatch visible
            // in cross-validation.
            count = 0;
        }
        lo = e.tau;
    }
    segments.push(Segment { lo, hi: tau_max, unstable: count.max(0) as usize });
    StabilityAccount { nu_zero, crossings, events, segments, tau_max }
}

/// Full pipeline: crossing set, delay-free count, delay-axis walk.
pub fn stability_account(tp: &TransformedPoly, tau_max: f64) -> Result<StabilityAccount> {
    if !(tau_max > 0.0) {
        return Err(Error::Invalid(format!("tau_max must be positive, got {tau_max}")));
    }
    let crossings = crossing_set(tp)?;
    let nu = count_unstable_at_zero(tp)?;
    Ok(account_from_crossings(crossings, nu, tau_max))
}

/// Grid controls for the independent frequency-sweep crossing search.
#[derive(Debug, Clone, Copy)]
pub struct SweepParams {
    /// Number of grid intervals across [0, omega_max].
    pub grid_points: usize,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams { grid_points: 4000 }
    }
}

/// Independent crossing search: bound the crossing frequencies, then track
/// the real T-branches of each quadratic across a frequency grid and
/// bisect every sign change of the opposite part. No resultant, no shared
/// Newton refinement; this route only agrees with `crossing_set` when both
/// are right.
pub fn crossing_set_sweep(tp: &TransformedPoly, params: &SweepParams) -> Result<Vec<Crossing>> {
    if tp.n.is_zero() {
        return Ok(Vec::new());
    }
    let split = tp.ri_split();
    let omega_max = sweep_bound(tp);
    let m = params.grid_points.max(16);
    let h = omega_max / m as f64;

    let mut found: Vec<(f64, f64)> = Vec::new();
    // Route A: branches of R = 0, sign changes of I along them; route B the
    // mirror image.
    for route in 0..2 {
        let t_roots = |omega: f64| -> Vec<f64> {
            let (c0, c1q, c2) = if route == 0 {
                let (r0, r1, r2) = split.re_at(omega);
                (r0, r1, r2)
            } else {
                let (i0, i1, i2) = split.im_at(omega);
                (i0, i1, i2)
            };
            let mut r = real_quadratic_roots(c2, c1q, c0);
            r.sort_by(|a, b| a.partial_cmp(b).unwrap());
            r
        };
        let other = |omega: f64, t: f64| -> f64 {
            if route == 0 {
                let (i0, i1, i2) = split.im_at(omega);
                i0 + i1 * t + i2 * t * t
            } else {
                let (r0, r1, r2) = split.re_at(omega);
                r0 + r1 * t + r2 * t * t
            }
        };

        let mut prev = t_roots(h);
        for j in 2..=m {
            let omega = h * j as f64;
            let cur = t_roots(omega);
            for b in 0..prev.len().min(cur.len()) {
                let f0 = other(omega - h, prev[b]);
                let f1 = other(omega, cur[b]);
                if f0 == 0.0 || f0 * f1 < 0.0 {
                    if let Some(pair) =
                        bisect_branch(&t_roots, &other, b, omega - h, omega, omega_max)
                    {
                        let resid = tp.eval_axis(pair.0, pair.1).norm();
                        if resid <= 1e-7 * tp.residual_scale(pair.0, pair.1).max(1e-300) {
                            found.push(pair);
                        }
                    }
                }
            }
            prev = cur;
        }
    }

    found.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut dedup: Vec<(f64, f64)> = Vec::new();
    for (om, t) in found {
        let dup = dedup.iter().any(|&(o, tt)| {
            (o - om).abs() <= 1e-6 * om.abs().max(1.0) && (tt - t).abs() <= 1e-6 * t.abs().max(1.0)
        });
        if !dup {
            dedup.push((om, t));
        }
    }
    attach_tendencies(tp, dedup)
}

/// Upper bound on crossing frequencies: a crossing needs
/// min(1, c1)^2 |D(i omega)|^2 <= |N(i omega)|^2, and the left side
/// dominates beyond the largest real root of the difference.
fn sweep_bound(tp: &TransformedPoly) -> f64 {
    let (rd, id) = tp.d.imaginary_axis_split();
    let (rn, in_) = tp.n.imaginary_axis_split();
    let m = tp.c1.min(1.0);
    let g = rd
        .mul(&rd)
        .add(&id.mul(&id))
        .scale(m * m)
        .sub(&rn.mul(&rn).add(&in_.mul(&in_)));
    let top = g
        .roots()
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-6 * z.re.abs().max(1.0))
        .map(|z| z.re.abs())
        .fold(0.0f64, f64::max);
    1.1 * top + 1.0
}

/// Bisection of `other` along branch `b` of `t_roots`; gives up when the
/// branch turns complex inside the bracket.
fn bisect_branch(
    t_roots: &dyn Fn(f64) -> Vec<f64>,
    other: &dyn Fn(f64, f64) -> f64,
    b: usize,
    mut lo: f64,
    mut hi: f64,
    omega_scale: f64,
) -> Option<(f64, f64)> {
    let rl = t_roots(lo);
    if rl.len() <= b {
        return None;
    }
    let mut flo = other(lo, rl[b]);
    for _ in 0..80 {
        if hi - lo <= 1e-13 * omega_scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let rm = t_roots(mid);
        if rm.len() <= b {
            return None;
        }
        let fm = other(mid, rm[b]);
        if flo * fm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    let omega = 0.5 * (lo + hi);
    let r = t_roots(omega);
    if r.len() <= b {
        return None;
    }
    Some((omega, r[b]))
}
