//! One-step solution operators on the finite-difference backend.

use crate::error::{Error, Result};
use crate::grid::{assemble_laplacian, pin_boundary, sample_potential, Grid1D, Potential, State};
use crate::tridiagonal::TridiagonalOperator;

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

/// `Id + sign * (tau/2) (L + diag(v))` with identity boundary rows.
fn cn_matrix(lap: &TridiagonalOperator, v: &[f64], half_tau: f64, sign: f64) -> TridiagonalOperator {
    let n = lap.dim();
    let mut op = TridiagonalOperator {
        sub: lap.sub.iter().map(|&a| sign * half_tau * a).collect(),
        diag: (0..n)
            .map(|i| 1.0 + sign * half_tau * (lap.diag[i] + v[i]))
            .collect(),
        sup: lap.sup.iter().map(|&c| sign * half_tau * c).collect(),
    };
    op.diag[0] = 1.0;
    op.diag[n - 1] = 1.0;
    op
}

/// Crank–Nicolson step for `u' = (L + diag V(t)) u` with the potential
/// sampled at the old level on the explicit side and at the new level on the
/// implicit side. Boundary entries of the potential are ignored.
fn crank_nicolson(
    state: &State,
    grid: &Grid1D,
    v_old: &[f64],
    v_new: &[f64],
    tau: f64,
) -> Result<State> {
    check_tau(tau)?;
    grid.check_len(&state.values)?;
    let lap = assemble_laplacian(grid);
    let half_tau = 0.5 * tau;
    let explicit = cn_matrix(&lap, v_old, half_tau, 1.0);
    let implicit = cn_matrix(&lap, v_new, half_tau, -1.0);

    let mut rhs = explicit.apply(&state.values)?;
    pin_boundary(&mut rhs);
    let mut next = implicit.solve(&rhs, tau)?;
    pin_boundary(&mut next);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("Crank-Nicolson step with tau = {tau:e}")));
    }
    Ok(State::new(next, state.time + tau))
}

/// One Crank–Nicolson step of the pure diffusion sub-problem:
/// `(Id - tau/2 L) u+ = (Id + tau/2 L) u`.
pub fn cn_diffusion_step(state: &State, grid: &Grid1D, tau: f64) -> Result<State> {
    let zeros = vec![0.0; grid.num_points()];
    crank_nicolson(state, grid, &zeros, &zeros, tau)
}

/// One Crank–Nicolson step of the full unsplit problem
/// `u' = (L + V(., t)) u`, with `V` at `t_n` explicit and `t_n + tau` implicit.
pub fn cn_reference_step(
    state: &State,
    grid: &Grid1D,
    potential: &Potential,
    t_n: f64,
    tau: f64,
) -> Result<State> {
    let v_old = sample_potential(potential, grid, t_n);
    let v_new = sample_potential(potential, grid, t_n + tau);
    crank_nicolson(state, grid, &v_old, &v_new, tau)
}

/// Exact flow of the frozen multiplication operator:
/// `u+[i] = exp(tau V(x_i, t_freeze)) u[i]` on interior nodes.
pub fn potential_step_exact(
    state: &State,
    grid: &Grid1D,
    potential: &Potential,
    t_freeze: f64,
    tau: f64,
) -> Result<State> {
    check_tau(tau)?;
    grid.check_len(&state.values)?;
    let last = state.len() - 1;
    let mut next = Vec::with_capacity(state.len());
    for (i, (&u, x)) in state.values.iter().zip(grid.points()).enumerate() {
        if i == 0 || i == last {
            next.push(0.0);
            continue;
        }
        let exponent = tau * potential.eval(x, t_freeze);
        let factor = exponent.exp();
        if !factor.is_finite() || !(factor * u).is_finite() {
            return Err(Error::Overflow { index: i, exponent });
        }
        next.push(factor * u);
    }
    Ok(State::new(next, state.time + tau))
}

/// Exact flow `e^{tau L}` of the discrete Dirichlet Laplacian, evaluated in
/// its closed-form sine eigenbasis. Entrywise nonnegative, so it preserves
/// positivity where Crank–Nicolson may not.
#[derive(Clone, Debug)]
pub struct ExactDiffusion {
    grid: Grid1D,
    eigenvalues: Vec<f64>,
    // modes[k * m + j] = phi_k(interior node j), orthonormal
    modes: Vec<f64>,
}

impl ExactDiffusion {
    pub fn new(grid: &Grid1D) -> Self {
        let m = grid.num_points() - 2;
        let intervals = (grid.num_points() - 1) as f64;
        let norm = (2.0 / intervals).sqrt();
        let mut modes = vec![0.0; m * m];
        for k in 0..m {
            for j in 0..m {
                let arg = std::f64::consts::PI * ((k + 1) * (j + 1)) as f64 / intervals;
                modes[k * m + j] = norm * arg.sin();
            }
        }
        Self {
            grid: *grid,
            eigenvalues: crate::grid::dirichlet_eigenvalues(grid),
            modes,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn step(&self, state: &State, tau: f64) -> Result<State> {
        check_tau(tau)?;
        self.grid.check_len(&state.values)?;
        let m = self.eigenvalues.len();
        let interior = &state.values[1..m + 1];
        let mut out = vec![0.0; m + 2];
        for k in 0..m {
            let phi = &self.modes[k * m..(k + 1) * m];
            let coeff: f64 = phi.iter().zip(interior).map(|(p, u)| p * u).sum();
            let scaled = coeff * (tau * self.eigenvalues[k]).exp();
            for (o, p) in out[1..m + 1].iter_mut().zip(phi) {
                *o += scaled * p;
            }
        }
        Ok(State::new(out, state.time + tau))
    }
}
