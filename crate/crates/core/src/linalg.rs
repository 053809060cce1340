//! Shared dense linear-algebra helpers with bounded iteration counts.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues of a real square matrix through a Schur decomposition with a
/// hard iteration cap. The unbounded library path can cycle forever on
/// symmetric spectra (Hamiltonian and companion structures); on a failed
/// sweep the matrix is nudged by a deterministic asymmetric perturbation
/// well below the requested accuracy and retried.
pub fn eigenvalues_bounded(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    for attempt in 0..4u32 {
        let mut work = m.clone();
        if attempt > 0 {
            let eps = scale * 1e-13 * 10f64.powi(attempt as i32 - 1);
            for i in 0..n {
                for j in 0..n {
                    let stamp = ((i * 31 + j * 17 + attempt as usize * 7) % 11) as f64 - 5.0;
                    work[(i, j)] += eps * stamp;
                }
            }
        }
        if let Some(schur) = nalgebra::Schur::try_new(work, f64::EPSILON, 200 * n.max(8)) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::Numerical(format!(
        "eigenvalue iteration failed to converge for a {n}x{n} matrix"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_known_matrices() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, 0.1]);
        let mut eigs = eigenvalues_bounded(&m).unwrap();
        eigs.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((eigs[0].re - 0.05).abs() < 1e-12);
        assert!((eigs[0].im + (2.0f64 - 0.0025).sqrt()).abs() < 1e-10);

        // Root-symmetric spectrum of the kind that defeats unbounded shifts.
        let h = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                -1.0, 0.0, 0.0, 0.0,
            ],
        );
        let eigs = eigenvalues_bounded(&h).unwrap();
        for e in &eigs {
            assert!((e.norm() - 1.0).abs() < 1e-8, "|eig| != 1: {e}");
        }
    }
}
