//! Dense univariate polynomials with real coefficients.
//!
//! Coefficients are stored ascending: `coeffs[k]` multiplies `s^k`. Root
//! finding uses a simultaneous Aberth iteration with a hard iteration cap,
//! so the widely scaled and clustered coefficient sets produced by
//! resultant elimination cannot stall it.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    /// Builds a polynomial from ascending coefficients. Trailing zeros are
    /// trimmed; the zero polynomial is stored as a single zero coefficient.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    /// Monic real polynomial with the given complex roots. The roots must be
    /// closed under conjugation up to rounding; the imaginary residue left by
    /// the complex product is discarded.
    pub fn from_roots(roots: &[Complex64], leading: f64) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, a) in acc.iter().enumerate() {
                next[k + 1] += *a;
                next[k] -= *a * r;
            }
            acc = next;
        }
        Poly::new(acc.iter().map(|c| c.re * leading).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `s^k`, zero beyond the stored degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * s + c;
        }
        acc
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Sum of |c_k| |x|^k; the natural residual scale for evaluations at |x|.
    pub fn abs_eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * ax + c.abs();
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| (i + 1) as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, f: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * f).collect())
    }

    /// Splits p(i omega) = R(omega) + i I(omega) into the two real
    /// polynomials R and I.
    pub fn imaginary_axis_split(&self) -> (Poly, Poly) {
        let n = self.coeffs.len();
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for (k, &c) in self.coeffs.iter().enumerate() {
            // i^k cycles 1, i, -1, -i.
            match k % 4 {
                0 => re[k] = c,
                1 => im[k] = c,
                2 => re[k] = -c,
                _ => im[k] = -c,
            }
        }
        (Poly::new(re), Poly::new(im))
    }

    /// Multiplies the variable's coefficient index by one: p(s) -> s^k p(s).
    pub fn shift_up(&self, k: usize) -> Poly {
        let mut c = vec![0.0; k];
        c.extend_from_slice(&self.coeffs);
        Poly::new(c)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// All complex roots. Leading coefficients smaller than 1e-12 of the
    /// largest coefficient are treated as zero (degree drop); exact zero
    /// trailing coefficients are deflated as roots at the origin; degrees
    /// one and two use closed forms and the rest a capped Aberth iteration.
    pub fn roots(&self) -> Vec<Complex64> {
        let scale = self.max_abs_coeff();
        if scale == 0.0 {
            return Vec::new();
        }
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c.last().unwrap().abs() <= 1e-12 * scale {
            c.pop();
        }
        let mut zeros_at_origin = 0usize;
        while c.len() > 1 && c[0] == 0.0 {
            c.remove(0);
            zeros_at_origin += 1;
        }
        let n = c.len() - 1;
        let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
        if n == 0 {
            return roots;
        }
        if n == 1 {
            roots.push(Complex64::new(-c[0] / c[1], 0.0));
            return roots;
        }
        if n == 2 {
            let (a, b, cc) = (c[2], c[1], c[0]);
            roots.extend(quadratic_roots(a, b, cc));
            return roots;
        }
        roots.extend(aberth_roots(&c));
        roots
    }
}

/// Simultaneous root refinement of the polynomial with the given ascending
/// coefficients (degree >= 3, nonzero leading and constant coefficient).
///
/// The correction for each approximation z_i is the Newton step divided by
/// 1 minus its interaction with the other approximations, which makes the
/// points repel each other and converge to distinct roots. Real
/// coefficients and a slightly rotated starting circle keep conjugate
/// symmetry from trapping the iteration; the iteration count is capped, so
/// a pathological cluster degrades accuracy instead of hanging.
fn aberth_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    // Cauchy bound: all roots lie inside |z| <= 1 + max |a_k|.
    let bound = 1.0 + monic[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    // Smallest-root bound keeps the start circle away from the origin.
    let inner = (monic[0].abs() / (1.0 + monic[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()))))
        .max(1e-12 * bound);
    let r0 = (bound * inner).sqrt().min(bound).max(1e-6 * bound);

    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.3941;
            let radius = r0 * (1.0 + 0.5 * k as f64 / n as f64);
            Complex64::from_polar(radius, angle)
        })
        .collect();

    let eval = |x: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in monic.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    };
    let abs_eval = |x: f64| -> f64 {
        let mut acc = 0.0;
        for &c in monic.iter().rev() {
            acc = acc * x + c.abs();
        }
        acc
    };

    let mut done = vec![false; n];
    for _ in 0..400 {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (p, dp) = eval(z[i]);
            if p.norm() <= 4.0 * f64::EPSILON * abs_eval(z[i].norm()) {
                done[i] = true;
                continue;
            }
            let newton = if dp.norm() > 0.0 { p / dp } else { Complex64::new(1e-8, 1e-8) };
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    let diff = z[i] - zj;
                    if diff.norm() > 1e-300 {
                        repulsion += diff.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let w = if denom.norm() > 1e-300 { newton / denom } else { newton };
            z[i] -= w;
            if w.norm() <= 1e-14 * (1.0 + z[i].norm()) {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }

    // Real coefficients: snap near-real roots and re-pair conjugates so the
    // output respects the exact symmetry.
    for zi in z.iter_mut() {
        if zi.im.abs() <= 1e-10 * zi.norm().max(1e-12) {
            let (p_at_re, _) = eval(Complex64::new(zi.re, 0.0));
            let (p_here, _) = eval(*zi);
            if p_at_re.norm() <= 4.0 * p_here.norm().max(f64::EPSILON * abs_eval(zi.norm())) {
                zi.im = 0.0;
            }
        }
    }
    z
}

/// Both roots of a s^2 + b s + c with a != 0, in a cancellation-safe form.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    debug_assert!(a != 0.0);
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // q = -(b + sign(b) sqrt(disc))/2 avoids subtracting like magnitudes.
        let q = -0.5 * (b + b.signum() * sq);
        let r1 = if q != 0.0 { c / q } else { 0.0 };
        let r2 = if a != 0.0 { q / a } else { 0.0 };
        if b == 0.0 {
            let r = (disc).sqrt() / (2.0 * a);
            return vec![Complex64::new(r, 0.0), Complex64::new(-r, 0.0)];
        }
        vec![Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a);
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Real roots of a quadratic (possibly degenerating to linear/constant),
/// used by the Rekasius back-substitution where the T^2 coefficient can
/// vanish along the frequency sweep.
pub fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-12 * scale {
        if b.abs() <= 1e-12 * scale {
            return Vec::new();
        }
        return vec![-c / b];
    }
    quadratic_roots(a, b, c)
        .into_iter()
        .filter(|r| r.im == 0.0)
        .map(|r| r.re)
        .collect()
}
