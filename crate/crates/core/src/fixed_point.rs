//! Picard iteration of `N_k` from `h₀ = 0` and a-posteriori checks on the
//! assembled solution `u = u_k + A h`.

use serde::{Deserialize, Serialize};

use crate::approx::FrequencyContext;
use crate::constants::targets;
use crate::error::{Error, Result};
use crate::operators::{apply_l, Problem};
use crate::spectral::{linear_combine, triple_product, SpectralField};

pub const DEFAULT_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_ITER: usize = 200;
/// Modes with `m + n + 1` above this are folded into the tail budget.
pub const DEFAULT_DEGREE_CAP: u32 = 60;

pub const THEOREM_RANGE: &str = "theorem range";
pub const OUTSIDE_THEOREM_RANGE: &str = "outside theorem range";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub degree_cap: u32,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, degree_cap: DEFAULT_DEGREE_CAP }
    }
}

/// `δ_k = k^{−1/2}/500`
pub fn ball_radius(k: u64) -> f64 {
    1.0 / (500.0 * (k as f64).sqrt())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionReport {
    pub k: u64,
    pub omega: f64,
    pub q: f64,
    /// `"theorem range"` for `k ≥ 79675`, `"outside theorem range"` otherwise.
    pub regime: String,
    pub iterations: usize,
    /// `‖h_{j+1} − h_j‖` on the stored coefficients.
    pub increments: Vec<f64>,
    /// Largest ratio of consecutive increments.
    pub contraction: f64,
    pub delta_k: f64,
    pub h_norm: f64,
    /// `‖A h‖ = ‖u − u_k‖`
    pub distance_to_uk: f64,
    /// `‖N_k(h) − h‖` at the returned `h`.
    pub fixed_point_defect: f64,
    /// `‖L_k u + u³‖`
    pub pde_residual: f64,
    pub nontrivial: bool,
    pub h: SpectralField,
    pub u: SpectralField,
}

/// Iterate `h_{j+1} = N_k(h_j)` until `‖h_{j+1} − h_j‖ ≤ tol`.
///
/// Each new iterate is truncated to `m + n + 1 ≤ degree_cap`, and the norm
/// of the discarded block becomes its tail budget. Tails are not fed back
/// into `N_k`, so a tail records the truncation defect of one step.
pub fn iterate(problem: &Problem, opts: IterationOptions) -> Result<SolutionReport> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(Error::Config("max_iter must be at least 1".into()));
    }
    let k = problem.ctx.k();
    let delta = ball_radius(k);
    let limit = 10.0 * delta;

    let mut h = SpectralField::zero(problem.weight);
    let mut increments = Vec::new();
    let mut converged = false;
    for j in 1..=opts.max_iter {
        let next = problem.residual_n(&h.without_tail())?.truncate_degree(opts.degree_cap);
        let inc = linear_combine(1.0, &next.without_tail(), -1.0, &h.without_tail())?.coeff_norm();
        increments.push(inc);
        let norm = next.norm();
        if !(norm <= limit) {
            return Err(Error::Divergence { iteration: j, norm, limit, increments });
        }
        h = next;
        if inc <= opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: opts.max_iter,
            last_increment: increments.last().copied().unwrap_or(f64::NAN),
            increments,
        });
    }

    let contraction = increments
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .fold(0.0, f64::max);
    let u = problem.assemble(&h)?;
    let again = problem.residual_n(&h.without_tail())?;
    let fixed_point_defect = linear_combine(1.0, &again, -1.0, &h.without_tail())?.coeff_norm();
    let pde_residual = verify_solution(&problem.ctx, &u)?;
    let nontrivial = nontriviality_check(&problem.ctx, &u);
    let regime = if k >= targets::THEOREM_K { THEOREM_RANGE } else { OUTSIDE_THEOREM_RANGE };
    Ok(SolutionReport {
        k,
        omega: problem.ctx.omega(),
        q: problem.coeffs.q,
        regime: regime.to_string(),
        iterations: increments.len(),
        increments,
        contraction,
        delta_k: delta,
        h_norm: h.norm(),
        distance_to_uk: problem.a.apply(&h).norm(),
        fixed_point_defect,
        pde_residual,
        nontrivial,
        h,
        u,
    })
}

/// `‖L_k u + u³‖`.
///
/// The tail budget of the cube is included. `L_k` is unbounded, so the tail
/// of `u` itself has no image under it and is left out of the first term.
pub fn verify_solution(ctx: &FrequencyContext, u: &SpectralField) -> Result<f64> {
    let lu = apply_l(ctx, u);
    let cube = triple_product(u, u, u)?;
    Ok(linear_combine(1.0, &lu, 1.0, &cube)?.norm())
}

/// `‖u‖·√k > 5/4 − 139/42500`, using the stored norm minus the tail as a
/// lower bound for `‖u‖`.
pub fn nontriviality_check(ctx: &FrequencyContext, u: &SpectralField) -> bool {
    let threshold = 5.0 / 4.0 - targets::DISTANCE.to_f64();
    (u.coeff_norm() - u.tail()) * ctx.kf().sqrt() > threshold
}
