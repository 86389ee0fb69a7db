//! Binary subset selection over candidate residual models.
//!
//! For a target source `g`, each candidate `m` has a residual model whose
//! predictions on g's validation rows form column `m` of `predictions`. A
//! subset `z` (always containing `g`) predicts g's residuals by the
//! size-weighted average of the selected columns; the objective is the sum of
//! squared errors of that average.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Largest candidate set [`solve_subset`] will enumerate.
pub const MAX_ENUMERATION_CANDIDATES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetInstance {
    /// Candidate source ids; contains the target.
    pub candidates: Vec<String>,
    /// Position of the target in `candidates`.
    pub target: usize,
    /// Observed residuals of the target's validation rows.
    pub residuals: Vec<f64>,
    /// rows × candidates: candidate residual-model predictions.
    pub predictions: Matrix,
    /// Training size of each candidate.
    pub sizes: Vec<f64>,
}

impl SubsetInstance {
    pub fn new(
        candidates: Vec<String>,
        target: &str,
        residuals: Vec<f64>,
        predictions: Matrix,
        sizes: Vec<f64>,
    ) -> Result<Self> {
        let target = candidates
            .iter()
            .position(|c| c == target)
            .ok_or_else(|| Error::Subset(format!("target `{target}` is not a candidate")))?;
        if residuals.is_empty() {
            return Err(Error::Subset("no validation rows".into()));
        }
        if predictions.rows() != residuals.len() || predictions.cols() != candidates.len() {
            return Err(Error::Subset(format!(
                "prediction matrix is {}x{}, expected {}x{}",
                predictions.rows(),
                predictions.cols(),
                residuals.len(),
                candidates.len()
            )));
        }
        if sizes.len() != candidates.len() {
            return Err(Error::Dimension {
                expected: candidates.len(),
                got: sizes.len(),
            });
        }
        if sizes.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Subset("sizes must be positive and finite".into()));
        }
        if residuals.iter().any(|v| !v.is_finite()) || !predictions.all_finite() {
            return Err(Error::NonFinite("subset instance".into()));
        }
        Ok(SubsetInstance {
            candidates,
            target,
            residuals,
            predictions,
            sizes,
        })
    }

    pub fn n_candidates(&self) -> usize {
        self.candidates.len()
    }
}

fn objective_unchecked(inst: &SubsetInstance, z: &[bool]) -> f64 {
    let mut denom = 0.0;
    for (m, &on) in z.iter().enumerate() {
        if on {
            denom += inst.sizes[m];
        }
    }
    let mut total = 0.0;
    for (i, &r) in inst.residuals.iter().enumerate() {
        let row = inst.predictions.row(i);
        let mut num = 0.0;
        for (m, &on) in z.iter().enumerate() {
            if on {
                num += row[m] * inst.sizes[m];
            }
        }
        let e = r - num / denom;
        total += e * e;
    }
    total
}

/// Sum of squared differences between the target's residuals and the
/// size-weighted average of the selected candidates' predictions.
pub fn subset_objective(inst: &SubsetInstance, z: &[bool]) -> Result<f64> {
    if z.len() != inst.n_candidates() {
        return Err(Error::Dimension {
            expected: inst.n_candidates(),
            got: z.len(),
        });
    }
    if !z[inst.target] {
        return Err(Error::Subset("the target must be selected".into()));
    }
    Ok(objective_unchecked(inst, z))
}

fn selected_ids<'a>(inst: &'a SubsetInstance, z: &[bool]) -> Vec<&'a str> {
    let mut ids: Vec<&str> = z
        .iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(m, _)| inst.candidates[m].as_str())
        .collect();
    ids.sort_unstable();
    ids
}

/// Exact minimizer by enumerating every subset that contains the target.
/// Ties go to the smaller subset, then to the lexicographically smallest
/// sorted list of selected ids.
pub fn solve_subset(inst: &SubsetInstance) -> Result<Vec<bool>> {
    let c = inst.n_candidates();
    if c > MAX_ENUMERATION_CANDIDATES {
        return Err(Error::Subset(format!(
            "{c} candidates exceed the enumeration limit of {MAX_ENUMERATION_CANDIDATES}"
        )));
    }
    let others: Vec<usize> = (0..c).filter(|&m| m != inst.target).collect();
    let mut z = vec![false; c];
    let mut best_z = z.clone();
    let mut best = f64::INFINITY;
    let mut best_card = usize::MAX;
    for mask in 0u32..(1u32 << others.len()) {
        z.iter_mut().for_each(|v| *v = false);
        z[inst.target] = true;
        for (b, &m) in others.iter().enumerate() {
            if mask & (1 << b) != 0 {
                z[m] = true;
            }
        }
        let obj = objective_unchecked(inst, &z);
        let card = mask.count_ones() as usize + 1;
        let better = obj < best
            || (obj == best
                && (card < best_card
                    || (card == best_card
                        && selected_ids(inst, &z) < selected_ids(inst, &best_z))));
        if better {
            best = obj;
            best_card = card;
            best_z.copy_from_slice(&z);
        }
    }
    Ok(best_z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(rg: [f64; 2], rm: [f64; 2]) -> SubsetInstance {
        SubsetInstance::new(
            vec!["g".into(), "m".into()],
            "g",
            vec![1.0, -1.0],
            Matrix::from_rows(&[vec![rg[0], rm[0]], vec![rg[1], rm[1]]]).unwrap(),
            vec![10.0, 10.0],
        )
        .unwrap()
    }

    #[test]
    fn singleton_is_plain_squared_error() {
        let inst = two([0.9, -0.9], [0.0, 0.0]);
        let v = subset_objective(&inst, &[true, false]).unwrap();
        assert!((v - 0.02).abs() < 1e-12);
    }

    #[test]
    fn pair_uses_size_weighted_average() {
        // prediction (0.45, -0.45): 2 * 0.55^2 = 0.605
        let inst = two([0.9, -0.9], [0.0, 0.0]);
        let v = subset_objective(&inst, &[true, true]).unwrap();
        assert!((v - 0.605).abs() < 1e-12);
        assert_eq!(solve_subset(&inst).unwrap(), vec![true, false]);
    }

    #[test]
    fn pooling_wins_when_it_cancels_overshoot() {
        let inst = two([2.0, -2.0], [0.0, 0.0]);
        assert!((subset_objective(&inst, &[true, false]).unwrap() - 2.0).abs() < 1e-12);
        assert!(subset_objective(&inst, &[true, true]).unwrap().abs() < 1e-12);
        assert_eq!(solve_subset(&inst).unwrap(), vec![true, true]);
    }

    #[test]
    fn identical_columns_make_z_irrelevant_and_tie_to_smaller() {
        let inst = two([0.3, -0.2], [0.3, -0.2]);
        let a = subset_objective(&inst, &[true, false]).unwrap();
        let b = subset_objective(&inst, &[true, true]).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert_eq!(solve_subset(&inst).unwrap(), vec![true, false]);
    }

    #[test]
    fn single_candidate() {
        let inst = SubsetInstance::new(
            vec!["g".into()],
            "g",
            vec![0.5],
            Matrix::from_rows(&[vec![0.1]]).unwrap(),
            vec![3.0],
        )
        .unwrap();
        assert_eq!(solve_subset(&inst).unwrap(), vec![true]);
    }

    #[test]
    fn contract_errors() {
        let inst = two([0.9, -0.9], [0.0, 0.0]);
        assert!(subset_objective(&inst, &[false, true]).is_err());
        assert!(subset_objective(&inst, &[false, false]).is_err());
        assert!(subset_objective(&inst, &[true]).is_err());
        let big = SubsetInstance::new(
            (0..21).map(|i| format!("s{i}")).collect(),
            "s0",
            vec![0.0],
            Matrix::zeros(1, 21),
            vec![1.0; 21],
        )
        .unwrap();
        assert!(solve_subset(&big).is_err());
        assert!(SubsetInstance::new(
            vec!["a".into()],
            "b",
            vec![0.0],
            Matrix::zeros(1, 1),
            vec![1.0]
        )
        .is_err());
        assert!(SubsetInstance::new(
            vec!["a".into()],
            "a",
            vec![0.0],
            Matrix::zeros(1, 1),
            vec![0.0]
        )
        .is_err());
    }

    #[test]
    fn lexicographic_tie_break_among_equal_cardinality() {
        // Columns b and a are identical, so {g,a} and {g,b} tie; a wins.
        let inst = SubsetInstance::new(
            vec!["g".into(), "b".into(), "a".into()],
            "g",
            vec![1.0, 1.0],
            Matrix::from_rows(&[vec![0.0, 2.0, 2.0], vec![0.0, 2.0, 2.0]]).unwrap(),
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        assert_eq!(solve_subset(&inst).unwrap(), vec![true, false, true]);
    }
}
