//! Nested-grid restriction (`P_m`, nodal sampling) and interpolation
//! (`J_m`, piecewise linear) between a fine grid and a coarse one, and the
//! splitting run on the coarse space.
//!
//! Both maps have max-norm operator norm at most 1 and satisfy
//! `P_m J_m = I_m` exactly.

use crate::error::{Error, Result};
use crate::grid::{assemble_laplacian, Grid1D, Potential, State};
use crate::splitting::{run_pde_sequential, Storage, TimeSpan};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionPair {
    fine: Grid1D,
    coarse: Grid1D,
    stride: usize,
}

/// Pairs `fine` with the nested coarse grid of `coarse_points` nodes.
pub fn make_injection_pair(fine: &Grid1D, coarse_points: usize) -> Result<ProjectionPair> {
    if coarse_points < 3 {
        return Err(Error::InvalidGrid(format!(
            "coarse grid needs at least 3 points, got {coarse_points}"
        )));
    }
    let intervals = fine.num_points() - 1;
    if coarse_points > fine.num_points() || intervals % (coarse_points - 1) != 0 {
        return Err(Error::InvalidGrid(format!(
            "coarse grid with {coarse_points} points is not nested in a fine grid with {} points",
            fine.num_points()
        )));
    }
    let coarse = Grid1D::new(fine.x_min(), fine.x_max(), coarse_points)?;
    Ok(ProjectionPair {
        fine: *fine,
        coarse,
        stride: intervals / (coarse_points - 1),
    })
}

impl ProjectionPair {
    pub fn fine(&self) -> &Grid1D {
        &self.fine
    }

    pub fn coarse(&self) -> &Grid1D {
        &self.coarse
    }

    /// Fine intervals per coarse interval.
    pub fn stride(&self) -> usize {
        self.stride
    }

    /// `P_m`: sample the fine vector at the coarse nodes.
    pub fn restrict(&self, fine: &[f64]) -> Result<Vec<f64>> {
        self.fine.check_len(fine)?;
        Ok(fine.iter().step_by(self.stride).copied().collect())
    }

    /// `J_m`: piecewise-linear interpolation of coarse nodal values.
    pub fn interpolate(&self, coarse: &[f64]) -> Result<Vec<f64>> {
        self.coarse.check_len(coarse)?;
        let k = self.stride;
        Ok((0..self.fine.num_points())
            .map(|i| {
                let (j, r) = (i / k, i % k);
                if r == 0 {
                    coarse[j]
                } else {
                    let w = r as f64 / k as f64;
                    (1.0 - w) * coarse[j] + w * coarse[j + 1]
                }
            })
            .collect())
    }
}

/// `J_m [n-step sequential splitting on the coarse grid] P_m x`.
pub fn run_approx_split(
    pair: &ProjectionPair,
    potential: &Potential,
    x: &State,
    span: &TimeSpan,
) -> Result<State> {
    let coarse_x = State::new(pair.restrict(&x.values)?, x.time);
    let run = run_pde_sequential(pair.coarse(), potential, &coarse_x, span, Storage::Endpoints)?;
    let out = run.into_final();
    Ok(State::new(pair.interpolate(&out.values)?, out.time))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Max-norm discrepancy `|J_m A_m P_m f - A f|` of the coarse and fine
/// Laplacians on a fine-grid vector `f`.
pub fn check_consistency(pair: &ProjectionPair, f: &[f64]) -> Result<f64> {
    let fine_lap = assemble_laplacian(pair.fine()).apply(f)?;
    let coarse_lap = assemble_laplacian(pair.coarse()).apply(&pair.restrict(f)?)?;
    Ok(max_abs_diff(&pair.interpolate(&coarse_lap)?, &fine_lap))
}

/// Max-norm discrepancy `|J_m B_m(t) P_m f - B(t) f|` of the multiplication
/// operators by the potential at time `t`.
pub fn check_potential_consistency(
    pair: &ProjectionPair,
    potential: &Potential,
    f: &[f64],
    t: f64,
) -> Result<f64> {
    pair.fine().check_len(f)?;
    let fine: Vec<f64> = pair
        .fine()
        .points()
        .zip(f)
        .map(|(x, v)| potential.eval(x, t) * v)
        .collect();
    let restricted = pair.restrict(f)?;
    let coarse: Vec<f64> = pair
        .coarse()
        .points()
        .zip(&restricted)
        .map(|(x, v)| potential.eval(x, t) * v)
        .collect();
    Ok(max_abs_diff(&pair.interpolate(&coarse)?, &fine))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, InitialCondition};
    use proptest::prelude::*;

    #[test]
    fn nested_pairs_only() {
        let fine = make_grid(0.0, 1.0, 11).unwrap();
        assert_eq!(make_injection_pair(&fine, 6).unwrap().stride(), 2);
        assert_eq!(make_injection_pair(&fine, 11).unwrap().stride(), 1);
        assert!(make_injection_pair(&fine, 5).is_err());
        assert!(make_injection_pair(&fine, 2).is_err());
        assert!(make_injection_pair(&fine, 21).is_err());
    }

    #[test]
    fn restrict_picks_every_second_node() {
        let fine = make_grid(0.0, 1.0, 11).unwrap();
        let pair = make_injection_pair(&fine, 6).unwrap();
        let v: Vec<f64> = (0..11).map(|i| i as f64).collect();
        assert_eq!(pair.restrict(&v).unwrap(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let fine = make_grid(-1.0, 2.0, 31).unwrap();
        let pair = make_injection_pair(&fine, 7).unwrap();
        let lin = |x: f64| 3.0 * x - 0.7;
        let coarse: Vec<f64> = pair.coarse().points().map(lin).collect();
        let out = pair.interpolate(&coarse).unwrap();
        for (x, v) in fine.points().zip(&out) {
            assert!((v - lin(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolation_error_is_second_order() {
        let fine = make_grid(0.0, 1.0, 1281).unwrap();
        let f = fine.sample(|x| (std::f64::consts::PI * x).sin());
        let mut last = f64::NAN;
        for m in [11, 21, 41, 81, 161] {
            let pair = make_injection_pair(&fine, m).unwrap();
            let err = max_abs_diff(&pair.interpolate(&pair.restrict(&f).unwrap()).unwrap(), &f);
            let h = pair.coarse().spacing();
            // |f''| <= pi^2, so the piecewise-linear error is at most pi^2 h^2 / 8
            assert!(err <= std::f64::consts::PI.powi(2) * h * h / 8.0 * (1.0 + 1e-9));
            if last.is_finite() {
                let ratio = last / err;
                assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
            }
            last = err;
        }
    }

    #[test]
    fn consistency_zero_for_linear_and_identity_pairs() {
        let fine = make_grid(0.0, 1.0, 41).unwrap();
        let lin: Vec<f64> = fine.points().map(|x| 2.0 * x + 1.0).collect();
        let pair = make_injection_pair(&fine, 11).unwrap();
        assert!(check_consistency(&pair, &lin).unwrap() < 1e-9);
        let same = make_injection_pair(&fine, 41).unwrap();
        let f = fine.sample(|x| (3.0 * x).sin());
        assert_eq!(check_consistency(&same, &f).unwrap(), 0.0);
    }

    #[test]
    fn consistency_second_order_for_sine() {
        let fine = make_grid(0.0, 1.0, 2049).unwrap();
        let f = fine.sample(|x| (std::f64::consts::PI * x).sin());
        let errs: Vec<f64> = [17, 33, 65, 129]
            .iter()
            .map(|&m| check_consistency(&make_injection_pair(&fine, m).unwrap(), &f).unwrap())
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn potential_consistency_vanishes_with_refinement() {
        let fine = make_grid(0.0, 1.0, 401).unwrap();
        let f = InitialCondition::gaussian(0.4, 50.0).state(&fine, 0.0).values;
        let v = Potential::quadratic_well();
        let coarse = check_potential_consistency(&make_injection_pair(&fine, 21).unwrap(), &v, &f, 0.0).unwrap();
        let finer = check_potential_consistency(&make_injection_pair(&fine, 81).unwrap(), &v, &f, 0.0).unwrap();
        assert!(finer < coarse / 10.0);
    }

    #[test]
    fn identity_pair_matches_fine_split_bitwise() {
        let fine = make_grid(0.0, 1.0, 41).unwrap();
        let pair = make_injection_pair(&fine, 41).unwrap();
        let v = Potential::quadratic_well();
        let x = InitialCondition::gaussian(0.4, 50.0).state(&fine, 0.0);
        let span = TimeSpan::new(0.0, 1e-2, 8).unwrap();
        let approx = run_approx_split(&pair, &v, &x, &span).unwrap();
        let direct = run_pde_sequential(&fine, &v, &x, &span, Storage::Endpoints).unwrap();
        assert_eq!(&approx, direct.final_state());
        let zero = run_approx_split(&make_injection_pair(&fine, 11).unwrap(), &v, &State::zeros(41, 0.0), &span).unwrap();
        assert!(zero.values.iter().all(|&u| u == 0.0));
    }

    proptest! {
        #[test]
        fn restrict_after_interpolate_is_identity(
            m in 3usize..12,
            k in 1usize..6,
            data in proptest::collection::vec(-1e3f64..1e3, 12),
        ) {
            let fine = make_grid(0.0, 1.0, k * (m - 1) + 1).unwrap();
            let pair = make_injection_pair(&fine, m).unwrap();
            let w = data[..m].to_vec();
            prop_assert_eq!(pair.restrict(&pair.interpolate(&w).unwrap()).unwrap(), w);
        }

        #[test]
        fn both_maps_are_max_norm_contractions(
            m in 3usize..12,
            k in 1usize..6,
            data in proptest::collection::vec(-1.0f64..1.0, 70),
        ) {
            let fine = make_grid(0.0, 1.0, k * (m - 1) + 1).unwrap();
            let pair = make_injection_pair(&fine, m).unwrap();
            let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let coarse = data[..m].to_vec();
            prop_assert!(sup(&pair.interpolate(&coarse).unwrap()) <= sup(&coarse));
            let f: Vec<f64> = (0..fine.num_points()).map(|i| data[i % 70].signum()).collect();
            prop_assert!(sup(&pair.restrict(&f).unwrap()) <= sup(&f));
            let ones = vec![1.0; m];
            prop_assert!(sup(&pair.interpolate(&ones).unwrap()) <= 1.0);
        }
    }
}
