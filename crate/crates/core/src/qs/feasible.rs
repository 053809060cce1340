//! Stability certificates from separator feasibility.
//!
//! The coupled loop is well posed, hence exponentially stable, if some
//! separator Theta built from (P, Q, R, S) is nonnegative on the graph of
//! the certain interconnection while staying nonpositive on the graph of
//! the uncertain operators. The second half holds by construction once
//! P >= 0 and Q, R, S >= 0, so the search reduces to a semidefinite
//! feasibility problem in the separator parameters:
//!
//!   V' Theta(P,Q,R,S) V >= 0,   P >= eps I,   Q, R, S >= 0,
//!
//! with V a kernel basis of [E | -A] and the homogeneous degree of freedom
//! removed by tr P + Q + R + S = 1. Raising the projection order N refines
//! the test: the order-N certificate embeds into order N+1, so the set of
//! channel parameters proved stable can only grow with N.
//!
//! A solver's claim is never taken at face value. The returned parameters
//! are unpacked, the separator is rebuilt from scratch, and both matrix
//! inequalities are re-checked by eigenvalue; a witness that fails this
//! check degrades the verdict to `Unknown`.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::model::{require_stabilizable, LtiPlant, WaveChannel};
use crate::qs::assembly::{
    assemble_problem, assemble_separator, symmetric_min_eigenvalue, QsProblem, SeparatorParams,
};
use crate::qs::sdp::{AffineMatrixConstraint, LinearRow, SdpBackend, SdpOutcome, SdpProblem};

/// Margin forced on the storage block P, scaled by the unit trace
/// normalization.
pub const EPS_P: f64 = 1e-8;

/// Worst eigenvalue tolerated when re-checking a returned witness.
const WITNESS_TOL: f64 = 1e-9;

/// Above this |alpha| the disk enclosing the neutral kernel has radius
/// larger than its center distance to the unit point, and the test is
/// known to turn conservative.
pub const ALPHA_WARNING: f64 = 0.5;

/// Outcome of the separator search. `Unknown` is not instability: the
/// test is sufficient only.
#[derive(Debug, Clone, PartialEq)]
pub enum QsVerdict {
    Stable,
    Unknown(String),
}

#[derive(Debug, Clone)]
pub struct QsReport {
    pub order: usize,
    pub verdict: QsVerdict,
    /// True when |alpha| > 1/2; certificates remain sound but failures
    /// are expected over much of the actually stable region.
    pub alpha_warning: bool,
    /// The re-verified separator parameters backing a `Stable` verdict.
    pub witness: Option<SeparatorParams>,
    pub solver: String,
}

/// The assembled interconnection together with its conic encoding.
#[derive(Debug, Clone)]
pub struct FeasibilityProblem {
    pub qs: QsProblem,
    pub sdp: SdpProblem,
}

/// Decision vector layout: the upper triangle of P column by column
/// (so x holds P(i,j) for j = 0..d, i = 0..=j), then Q, R, S.
fn unpack_params(x: &[f64], plant_dim: usize, order: usize) -> SeparatorParams {
    let d = plant_dim + order;
    let mut params = SeparatorParams::zero(plant_dim, order);
    let mut idx = 0;
    for j in 0..d {
        for i in 0..=j {
            params.p[(i, j)] = x[idx];
            params.p[(j, i)] = x[idx];
            idx += 1;
        }
    }
    params.q = x[idx];
    params.r = x[idx + 1];
    params.s = x[idx + 2];
    params
}

#[cfg(test)]
fn pack_params(params: &SeparatorParams) -> Vec<f64> {
    let d = params.p.nrows();
    let mut x = Vec::with_capacity(d * (d + 1) / 2 + 3);
    for j in 0..d {
        for i in 0..=j {
            x.push(params.p[(i, j)]);
        }
    }
    x.extend([params.q, params.r, params.s]);
    x
}

/// Builds the semidefinite feasibility problem for one channel and order.
/// The encoding is exact: the separator is linear in the parameters, so
/// each decision variable contributes one precomputed kernel-compressed
/// slice V' Theta_l V.
pub fn build_feasibility_problem(
    order: usize,
    plant: &LtiPlant,
    channel: &WaveChannel,
) -> Result<FeasibilityProblem> {
    require_stabilizable(channel)?;
    let qs = assemble_problem(order, plant, channel)?;
    let n = plant.dim();
    let d = n + order;
    let vech = d * (d + 1) / 2;
    let nvars = vech + 3;
    let null_dim = qs.dims.null_dim;

    let mut basis_params = Vec::with_capacity(nvars);
    for j in 0..d {
        for i in 0..=j {
            let mut params = SeparatorParams::zero(n, order);
            params.p[(i, j)] = 1.0;
            params.p[(j, i)] = 1.0;
            basis_params.push(params);
        }
    }
    for scalar in 0..3 {
        let mut params = SeparatorParams::zero(n, order);
        match scalar {
            0 => params.q = 1.0,
            1 => params.r = 1.0,
            _ => params.s = 1.0,
        }
        basis_params.push(params);
    }

    let mut kernel_slices = Vec::with_capacity(nvars);
    let mut p_slices = Vec::with_capacity(nvars);
    for (l, params) in basis_params.iter().enumerate() {
        let theta = assemble_separator(order, n, channel, params)?;
        kernel_slices.push(qs.v.transpose() * &theta * &qs.v);
        let mut pm = DMatrix::zeros(d, d);
        if l < vech {
            pm += &params.p;
        }
        p_slices.push(pm);
    }

    let mut nonneg = Vec::with_capacity(3);
    for scalar in 0..3 {
        let mut coeffs = vec![0.0; nvars];
        coeffs[vech + scalar] = 1.0;
        nonneg.push(LinearRow { coeffs, rhs: 0.0 });
    }

    let mut trace_row = vec![0.0; nvars];
    let mut idx = 0;
    for j in 0..d {
        for i in 0..=j {
            if i == j {
                trace_row[idx] = 1.0;
            }
            idx += 1;
        }
    }
    trace_row[vech] = 1.0;
    trace_row[vech + 1] = 1.0;
    trace_row[vech + 2] = 1.0;

    let sdp = SdpProblem {
        nvars,
        equalities: vec![LinearRow { coeffs: trace_row, rhs: 1.0 }],
        nonneg,
        psd: vec![
            AffineMatrixConstraint {
                constant: DMatrix::zeros(null_dim, null_dim),
                coefficients: kernel_slices,
            },
            AffineMatrixConstraint {
                constant: DMatrix::identity(d, d) * -EPS_P,
                coefficients: p_slices,
            },
        ],
    };
    Ok(FeasibilityProblem { qs, sdp })
}

/// Rebuilds the separator from the returned parameters and re-checks both
/// matrix inequalities by eigenvalue.
fn check_witness(
    qs: &QsProblem,
    plant_dim: usize,
    order: usize,
    channel: &WaveChannel,
    params: &SeparatorParams,
) -> std::result::Result<(), String> {
    let theta = assemble_separator(order, plant_dim, channel, params).map_err(|e| e.to_string())?;
    let kernel = qs.v.transpose() * theta * &qs.v;
    let eig = symmetric_min_eigenvalue(&kernel);
    if eig < -WITNESS_TOL {
        return Err(format!("kernel block has eigenvalue {eig:.3e}"));
    }
    let d = plant_dim + order;
    let shifted = &params.p - DMatrix::identity(d, d) * EPS_P;
    let eig = symmetric_min_eigenvalue(&shifted);
    if eig < -WITNESS_TOL {
        return Err(format!("storage block has eigenvalue {eig:.3e}"));
    }
    Ok(())
}

/// Runs the order-N separator search for one plant and channel.
pub fn qs_feasible(
    order: usize,
    plant: &LtiPlant,
    channel: &WaveChannel,
    backend: &dyn SdpBackend,
) -> Result<QsReport> {
    let fp = build_feasibility_problem(order, plant, channel)?;
    let solver = backend.name().to_string();
    let alpha_warning = channel.alpha.abs() > ALPHA_WARNING;
    let (verdict, witness) = match backend.solve(&fp.sdp)? {
        SdpOutcome::Feasible(x) => {
            let params = unpack_params(&x, plant.dim(), order);
            match check_witness(&fp.qs, plant.dim(), order, channel, &params) {
                Ok(()) => (QsVerdict::Stable, Some(params)),
                Err(reason) => (
                    QsVerdict::Unknown(format!("witness rejected on re-check: {reason}")),
                    None,
                ),
            }
        }
        SdpOutcome::Infeasible(status) => (
            QsVerdict::Unknown(format!("no order-{order} separator exists ({status})")),
            None,
        ),
        SdpOutcome::Unknown(status) => {
            (QsVerdict::Unknown(format!("solver gave no decision ({status})")), None)
        }
    };
    Ok(QsReport { order, verdict, alpha_warning, witness, solver })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctcr::{stability_account, TransformedPoly};
    use crate::fixtures::{hurwitz_plant, oscillator_plant};
    use crate::model::{make_channel, WaveChannel};
    use crate::qs::sdp::ClarabelBackend;
    use crate::transfer::plant_tf;

    #[test]
    fn conic_encoding_matches_the_separator_map() {
        let plant = oscillator_plant();
        let channel = make_channel(2.0, 0.25).unwrap();
        let fp = build_feasibility_problem(1, &plant, &channel).unwrap();
        let n = plant.dim();
        let d = n + 1;
        assert_eq!(fp.sdp.nvars, d * (d + 1) / 2 + 3);
        assert_eq!(fp.sdp.psd.len(), 2);
        assert_eq!(fp.sdp.psd[0].constant.nrows(), fp.qs.dims.null_dim);
        assert_eq!(fp.sdp.psd[1].constant.nrows(), d);

        // An arbitrary parameter point must evaluate identically through
        // the conic slices and through direct assembly.
        let mut params = SeparatorParams::zero(n, 1);
        for j in 0..d {
            for i in 0..d {
                params.p[(i, j)] = 0.1 * (1.0 + i as f64) * (1.0 + j as f64);
            }
        }
        params.q = 0.7;
        params.r = 0.3;
        params.s = 1.9;
        let x = pack_params(&params);
        let direct = fp.qs.v.transpose()
            * assemble_separator(1, n, &channel, &params).unwrap()
            * &fp.qs.v;
        let through_cone = fp.sdp.psd[0].evaluate(&x);
        assert!((direct - through_cone).abs().max() < 1e-12);
        let p_block = fp.sdp.psd[1].evaluate(&x);
        let expected = &params.p - DMatrix::identity(d, d) * EPS_P;
        assert!((p_block - expected).abs().max() < 1e-12);
    }

    #[test]
    fn witness_round_trip_preserves_parameters() {
        let params = SeparatorParams {
            p: DMatrix::from_row_slice(2, 2, &[2.0, -0.5, -0.5, 1.0]),
            q: 0.25,
            r: 0.5,
            s: 1.5,
        };
        let x = pack_params(&params);
        let back = unpack_params(&x, 2, 0);
        assert_eq!(back.p, params.p);
        assert_eq!((back.q, back.r, back.s), (params.q, params.r, params.s));
    }

    #[test]
    fn damped_stable_plant_is_certified_at_order_zero() {
        let plant = hurwitz_plant();
        let channel = make_channel(2.0, 1.0).unwrap();
        let report = qs_feasible(0, &plant, &channel, &ClarabelBackend).unwrap();
        assert_eq!(report.verdict, QsVerdict::Stable, "{report:?}");
        assert!(!report.alpha_warning);
        assert_eq!(report.solver, "clarabel");
        let w = report.witness.expect("stable verdict carries a witness");
        assert!(symmetric_min_eigenvalue(&w.p) > 0.0);
        assert!(w.q >= 0.0 && w.r >= 0.0 && w.s >= 0.0);
    }

    #[test]
    fn delay_window_needs_the_higher_order_test() {
        // Matched channel, so the loop is a pure delay system. The delay
        // sits inside the exact stable window but beyond what the
        // order-zero projection can certify.
        let plant = oscillator_plant();
        let channel = WaveChannel::from_c1_tau(1.0, 0.9).unwrap();
        let coarse = qs_feasible(0, &plant, &channel, &ClarabelBackend).unwrap();
        assert!(
            matches!(coarse.verdict, QsVerdict::Unknown(_)),
            "order 0 unexpectedly certified: {coarse:?}"
        );
        let fine = qs_feasible(3, &plant, &channel, &ClarabelBackend).unwrap();
        assert_eq!(fine.verdict, QsVerdict::Stable, "{fine:?}");
    }

    #[test]
    fn undamped_channel_is_refused() {
        let plant = hurwitz_plant();
        let channel = make_channel(1.0, 0.0).unwrap();
        let err = qs_feasible(0, &plant, &channel, &ClarabelBackend).unwrap_err();
        assert!(matches!(err, crate::error::Error::NotStabilizable));
    }

    #[test]
    fn strong_reflection_sets_the_warning_flag() {
        let plant = hurwitz_plant();
        let weak = WaveChannel::from_c1_tau(0.2, 0.5).unwrap();
        let report = qs_feasible(0, &plant, &weak, &ClarabelBackend).unwrap();
        assert!(report.alpha_warning);
        let matched = WaveChannel::from_c1_tau(1.0, 0.5).unwrap();
        let report = qs_feasible(0, &plant, &matched, &ClarabelBackend).unwrap();
        assert!(!report.alpha_warning);
    }

    #[test]
    fn certified_cells_are_nested_in_order_and_inside_the_exact_region() {
        let plant = oscillator_plant();
        let tf = plant_tf(&plant).unwrap();
        let taus = [0.3, 0.8, 1.3];
        let c1s = [0.6, 1.0, 1.6];
        for &c1 in &c1s {
            let tp = TransformedPoly::new(&tf, c1).unwrap();
            let account = stability_account(&tp, 2.0).unwrap();
            let windows = account.stable_intervals();
            for &tau in &taus {
                let channel = WaveChannel::from_c1_tau(c1, tau).unwrap();
                let mut previous_stable = false;
                for order in 0..3 {
                    let report = qs_feasible(order, &plant, &channel, &ClarabelBackend).unwrap();
                    let stable = report.verdict == QsVerdict::Stable;
                    assert!(
                        !previous_stable || stable,
                        "order {order} lost the certificate at c1={c1}, tau={tau}"
                    );
                    if stable {
                        assert!(
                            windows.iter().any(|&(lo, hi)| lo < tau && tau < hi),
                            "certified cell outside exact windows {windows:?} \
                             at c1={c1}, tau={tau}, order={order}"
                        );
                    }
                    previous_stable = stable;
                }
            }
        }
    }
}
