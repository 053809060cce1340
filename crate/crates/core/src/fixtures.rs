//! Reference plants used across tests, benchmarks, and the bundled system
//! files: a cancelling Hurwitz plant, a marginally damped oscillator that
//! only the channel can stabilize, and a fourth-order plant whose stable
//! delay set splits into disjoint pockets.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::model::LtiPlant;

/// Two-state Hurwitz plant whose transfer function reduces to first order
/// with static gain -20/21, just inside the unit circle.
pub fn hurwitz_plant() -> LtiPlant {
    LtiPlant::new(
        DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 0.0, -1.0]),
        DVector::from_vec(vec![1.0, 1.0]),
        RowDVector::from_vec(vec![0.0, -20.0 / 21.0]),
    )
    .unwrap()
    .with_name("hurwitz")
}

/// Oscillator with negative damping: the open plant is unstable, the zero
/// delay loop is too, and only a window of delays stabilizes it.
pub fn oscillator_plant() -> LtiPlant {
    LtiPlant::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, 0.1]),
        DVector::from_vec(vec![0.0, 1.0]),
        RowDVector::from_vec(vec![1.0, 0.0]),
    )
    .unwrap()
    .with_name("oscillator")
}

/// Two coupled second-order modes; the stable delay set at matched damping
/// splits into disjoint pockets separated by an unstable gap.
pub fn pocket_plant() -> LtiPlant {
    LtiPlant::new(
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                -11.0, 10.0, 0.0, 0.0, //
                5.0, -15.0, 0.0, -0.25,
            ],
        ),
        DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]),
        RowDVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
    )
    .unwrap()
    .with_name("pockets")
}
