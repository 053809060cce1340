//! Plant, channel, and coupled-system descriptions.
//!
//! The plant is a finite-dimensional LTI block X' = AX + B(u(1,t) + r(t))
//! driven through a damped string on x in [0,1]: u_tt = c^2 u_xx with
//! boundary conditions u(0,t) = K X(t) and u_x(1,t) = -c0 u_t(1,t). All
//! channel quantities derive from the wave speed c > 0 and the boundary
//! damping c0 >= 0:
//!
//!   tau = 1/c,  c1 = c c0,  alpha = (1 - c1)/(1 + c1).

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Finite-dimensional plant (A, B, K) with a single boundary output K X.
#[derive(Debug, Clone)]
pub struct LtiPlant {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub k: RowDVector<f64>,
    pub name: Option<String>,
}

impl LtiPlant {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, k: RowDVector<f64>) -> Result<Self> {
        if a.nrows() == 0 {
            return Err(Error::Invalid("A must be nonempty".into()));
        }
        if a.nrows() != a.ncols() {
            return Err(Error::Invalid(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != a.nrows() {
            return Err(Error::Invalid(format!(
                "B has {} entries but A is {}x{}",
                b.len(),
                a.nrows(),
                a.nrows()
            )));
        }
        if k.len() != a.nrows() {
            return Err(Error::Invalid(format!(
                "K has {} entries but A is {}x{}",
                k.len(),
                a.nrows(),
                a.nrows()
            )));
        }
        Ok(LtiPlant { a, b, k, name: None })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Parses the JSON description {"A": [[..],..], "B": [..], "K": [..]}
    /// with an optional "name". K is a single row; ragged or mismatched
    /// arrays are rejected with the offending field named.
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct PlantJson {
            #[serde(rename = "A")]
            a: Vec<Vec<f64>>,
            #[serde(rename = "B")]
            b: Vec<f64>,
            #[serde(rename = "K")]
            k: Vec<f64>,
            name: Option<String>,
        }
        let raw: PlantJson = serde_json::from_str(text)
            .map_err(|e| Error::Invalid(format!("system description: {e}")))?;
        let n = raw.a.len();
        if n == 0 {
            return Err(Error::Invalid("field A: must be a nonempty matrix".into()));
        }
        for (i, row) in raw.a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Invalid(format!(
                    "field A: row {} has {} entries, expected {} (square matrix)",
                    i,
                    row.len(),
                    n
                )));
            }
        }
        if raw.b.len() != n {
            return Err(Error::Invalid(format!(
                "field B: has {} entries but A is {n}x{n}",
                raw.b.len()
            )));
        }
        if raw.k.len() != n {
            return Err(Error::Invalid(format!(
                "field K: has {} entries but A is {n}x{n} (K must be a single row)",
                raw.k.len()
            )));
        }
        let a = DMatrix::from_fn(n, n, |i, j| raw.a[i][j]);
        let mut plant = LtiPlant::new(a, DVector::from_vec(raw.b), RowDVector::from_vec(raw.k))?;
        plant.name = raw.name;
        Ok(plant)
    }
}

/// Wave channel parameters derived from (c, c0).
#[derive(Debug, Clone, Copy)]
pub struct WaveChannel {
    pub c: f64,
    pub c0: f64,
    pub tau: f64,
    pub alpha: f64,
    pub c1: f64,
}

/// Builds the channel from wave speed and boundary damping.
pub fn make_channel(c: f64, c0: f64) -> Result<WaveChannel> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Invalid(format!("wave speed c must be positive, got {c}")));
    }
    if !(c0 >= 0.0) || !c0.is_finite() {
        return Err(Error::Invalid(format!(
            "boundary damping c0 must be nonnegative, got {c0}"
        )));
    }
    let c1 = c * c0;
    Ok(WaveChannel {
        c,
        c0,
        tau: 1.0 / c,
        alpha: (1.0 - c1) / (1.0 + c1),
        c1,
    })
}

impl WaveChannel {
    /// Channel in the (c1, tau) parametrization: c = 1/tau, c0 = c1 tau.
    pub fn from_c1_tau(c1: f64, tau: f64) -> Result<WaveChannel> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Invalid(format!("delay tau must be positive, got {tau}")));
        }
        if !(c1 >= 0.0) || !c1.is_finite() {
            return Err(Error::Invalid(format!("c1 = c*c0 must be nonnegative, got {c1}")));
        }
        make_channel(1.0 / tau, c1 * tau)
    }

    /// gamma = (1 + alpha)/(1 - alpha^2) = 1/(1 - alpha); +inf when alpha = 1.
    pub fn gamma(&self) -> f64 {
        1.0 / (1.0 - self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    /// c c0 = 1: the difference-operator coefficient alpha vanishes and the
    /// closed loop is a retarded delay system.
    Retarded,
    /// alpha != 0: the closed loop is a neutral delay system.
    Neutral,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SystemClass {
    pub kind: SystemKind,
    /// True iff c0 > 0: the difference operator is strictly stable
    /// (|alpha| < 1, including the retarded case alpha = 0), which is what
    /// makes stabilization at small delays possible at all.
    pub small_tau_stabilizable: bool,
    /// Common real part (c/2) log|alpha| of the channel pole chain;
    /// absent in the retarded case (no channel poles).
    pub wave_pole_abscissa: Option<f64>,
}

/// Matching tolerance for the retarded case c1 = 1.
pub const RETARDED_TOL: f64 = 1e-12;

pub fn classify(channel: &WaveChannel) -> SystemClass {
    let retarded = (channel.c1 - 1.0).abs() <= RETARDED_TOL;
    let kind = if retarded { SystemKind::Retarded } else { SystemKind::Neutral };
    let abscissa = if retarded {
        None
    } else {
        Some(0.5 * channel.c * channel.alpha.abs().ln())
    };
    SystemClass {
        kind,
        small_tau_stabilizable: channel.c0 > 0.0,
        wave_pole_abscissa: abscissa,
    }
}

/// Rejects channels whose difference operator is not strictly stable.
/// Every analysis that draws conclusions for tau > 0 calls this first.
pub fn require_stabilizable(channel: &WaveChannel) -> Result<()> {
    if channel.c0 > 0.0 {
        Ok(())
    } else {
        Err(Error::NotStabilizable)
    }
}

/// Steady states of the coupled system: at equilibrium the string is flat
/// with u = K X, so X must satisfy (A + B K) X = 0.
#[derive(Debug, Clone)]
pub enum Equilibria {
    UniqueZero,
    /// Orthonormal basis (columns) of ker(A + B K).
    Subspace(DMatrix<f64>),
}

pub fn equilibria(plant: &LtiPlant) -> Equilibria {
    let m = &plant.a + &plant.b * &plant.k;
    let svd = m.svd(false, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let tol = 1e-10 * smax;
    let null: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(i, _)| i)
        .collect();
    if null.is_empty() {
        return Equilibria::UniqueZero;
    }
    let vt = svd.v_t.expect("svd requested v_t");
    let n = plant.dim();
    let mut basis = DMatrix::zeros(n, null.len());
    for (col, &i) in null.iter().enumerate() {
        for j in 0..n {
            basis[(j, col)] = vt[(i, j)];
        }
    }
    Equilibria::Subspace(basis)
}

/// Plant plus channel, the unit every analysis method consumes.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub plant: LtiPlant,
    pub channel: WaveChannel,
}

impl CoupledSystem {
    pub fn new(plant: LtiPlant, channel: WaveChannel) -> Self {
        CoupledSystem { plant, channel }
    }

    pub fn class(&self) -> SystemClass {
        classify(&self.channel)
    }
}
