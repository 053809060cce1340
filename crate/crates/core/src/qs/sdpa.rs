//! Export of feasibility problems in the sparse SDPA input format.
//!
//! The `.dat-s` dialect is the lingua franca of semidefinite solvers
//! (sdpa, csdp, dsdp, sedumi converters all read it), so any problem the
//! bundled backend cannot handle can be shipped to an external solver
//! unchanged. The encoding puts every semidefinite block first, followed
//! by one diagonal block that carries the scalar rows: each inequality
//! a.x >= b becomes one diagonal entry, each equality a pair of opposed
//! inequalities. The exported objective is zero, so any feasible point of
//! the exported problem is a feasible point of the original.

use crate::error::Result;
use crate::qs::sdp::SdpProblem;
use std::io::Write;

/// Writes `problem` in sparse SDPA format. Entry lines are
/// `matno blockno i j value` with 1-based upper-triangle indices; the
/// constant matrix is matno 0 and enters with the opposite sign, matching
/// the convention X = sum x_i F_i - F0.
pub fn write_sdpa<W: Write>(problem: &SdpProblem, out: &mut W) -> Result<()> {
    let diag_size = problem.nonneg.len() + 2 * problem.equalities.len();
    let mut block_sizes: Vec<i64> = problem
        .psd
        .iter()
        .map(|b| b.constant.nrows() as i64)
        .collect();
    if diag_size > 0 {
        block_sizes.push(-(diag_size as i64));
    }

    writeln!(out, "\"feasibility problem, zero objective")?;
    writeln!(out, "{}", problem.nvars)?;
    writeln!(out, "{}", block_sizes.len())?;
    let sizes: Vec<String> = block_sizes.iter().map(|s| s.to_string()).collect();
    writeln!(out, "{}", sizes.join(" "))?;
    let zeros: Vec<&str> = std::iter::repeat("0").take(problem.nvars).collect();
    writeln!(out, "{}", zeros.join(" "))?;

    let entry = |out: &mut W, matno: usize, blockno: usize, i: usize, j: usize, v: f64| {
        if v != 0.0 {
            writeln!(out, "{matno} {blockno} {i} {j} {v}")
        } else {
            Ok(())
        }
    };

    for (b, block) in problem.psd.iter().enumerate() {
        let blockno = b + 1;
        let d = block.constant.nrows();
        for i in 0..d {
            for j in i..d {
                entry(out, 0, blockno, i + 1, j + 1, -block.constant[(i, j)])?;
            }
        }
        for (k, fi) in block.coefficients.iter().enumerate() {
            for i in 0..d {
                for j in i..d {
                    entry(out, k + 1, blockno, i + 1, j + 1, fi[(i, j)])?;
                }
            }
        }
    }

    if diag_size > 0 {
        let blockno = problem.psd.len() + 1;
        let mut slot = 1usize;
        for row in &problem.nonneg {
            entry(out, 0, blockno, slot, slot, row.rhs)?;
            for (k, &c) in row.coeffs.iter().enumerate() {
                entry(out, k + 1, blockno, slot, slot, c)?;
            }
            slot += 1;
        }
        for row in &problem.equalities {
            entry(out, 0, blockno, slot, slot, row.rhs)?;
            entry(out, 0, blockno, slot + 1, slot + 1, -row.rhs)?;
            for (k, &c) in row.coeffs.iter().enumerate() {
                entry(out, k + 1, blockno, slot, slot, c)?;
                entry(out, k + 1, blockno, slot + 1, slot + 1, -c)?;
            }
            slot += 2;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qs::sdp::{AffineMatrixConstraint, LinearRow};
    use nalgebra::DMatrix;

    #[test]
    fn exported_file_matches_the_reference_encoding() {
        let problem = SdpProblem {
            nvars: 2,
            equalities: vec![LinearRow { coeffs: vec![1.0, 1.0], rhs: 1.0 }],
            nonneg: vec![LinearRow { coeffs: vec![0.0, 1.0], rhs: 0.25 }],
            psd: vec![AffineMatrixConstraint {
                constant: DMatrix::from_row_slice(2, 2, &[-0.5, 0.0, 0.0, 0.0]),
                coefficients: vec![
                    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
                    DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 1.0]),
                ],
            }],
        };
        let mut buf = Vec::new();
        write_sdpa(&problem, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let expected = "\"feasibility problem, zero objective\n\
                        2\n\
                        2\n\
                        2 -3\n\
                        0 0\n\
                        0 1 1 1 0.5\n\
                        1 1 1 1 1\n\
                        2 1 1 2 0.5\n\
                        2 1 2 2 1\n\
                        0 2 1 1 0.25\n\
                        2 2 1 1 1\n\
                        0 2 2 2 1\n\
                        0 2 3 3 -1\n\
                        1 2 2 2 1\n\
                        1 2 3 3 -1\n\
                        2 2 2 2 1\n\
                        2 2 3 3 -1\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn problems_without_scalar_rows_skip_the_diagonal_block() {
        let problem = SdpProblem {
            nvars: 1,
            equalities: vec![],
            nonneg: vec![],
            psd: vec![AffineMatrixConstraint {
                constant: DMatrix::zeros(1, 1),
                coefficients: vec![DMatrix::from_element(1, 1, 1.0)],
            }],
        };
        let mut buf = Vec::new();
        write_sdpa(&problem, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\n1\n1\n"), "one block of size one: {text}");
        assert!(!text.contains('-'), "no diagonal block marker: {text}");
    }
}
