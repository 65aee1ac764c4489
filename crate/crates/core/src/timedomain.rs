//! Direct time integration of `u_tt − u_xx + u³ = 0` on `[0, π]` from the
//! `t = 0` slice of a spectral solution, as an independent check of its
//! periodicity.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

pub const DEFAULT_NX: usize = 256;
pub const DEFAULT_NT: usize = 100_000;
const MIN_NX: usize = 16;
const MIN_NT: usize = 1000;

/// Values on the grid `x_j = jπ/N_x`, `j = 0..=N_x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub time: f64,
    pub nx: usize,
}

impl GridState {
    pub fn zero(nx: usize) -> Self {
        GridState { positions: vec![0.0; nx + 1], velocities: vec![0.0; nx + 1], time: 0.0, nx }
    }

    pub fn dx(&self) -> f64 {
        PI / self.nx as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.nx).map(|j| j as f64 * self.dx()).collect()
    }

    /// `max_j |u(x_j) − u(π − x_j)|`
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.nx;
        (0..=n).map(|j| (self.positions[j] - self.positions[n - j]).abs()).fold(0.0, f64::max)
    }
}

/// The `τ = 0` slice in physical time `t = τ/Ω`: positions vanish and
/// `u_t = Ω·∂_τ u`.
pub fn initial_data(u: &SpectralField, omega: f64, nx: usize) -> Result<GridState> {
    if nx < MIN_NX {
        return Err(Error::Config(format!("N_x must be at least {MIN_NX}, got {nx}")));
    }
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("Ω must be positive, got {omega}")));
    }
    let mut s = GridState::zero(nx);
    let dx = s.dx();
    for j in 1..nx {
        s.velocities[j] = omega * u.time_derivative_at_zero(j as f64 * dx);
    }
    Ok(s)
}

/// Spatial discretization of `u_xx`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spatial {
    /// Sine pseudospectral differentiation.
    #[default]
    Spectral,
    /// Centered second differences.
    FiniteDifference,
}

/// Type-I discrete sine transform `S_k = Σ_{j=1}^{N−1} u_j sin(πjk/N)`,
/// via a complex FFT of length `2N` on the odd extension.
struct SineTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl SineTransform {
    fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        SineTransform { n, fft, buf: vec![Complex64::default(); 2 * n], scratch }
    }

    /// `input` and `out` have length `N + 1`; the end entries are ignored
    /// on input and set to zero on output.
    fn apply(&mut self, input: &[f64], out: &mut [f64]) {
        let n = self.n;
        self.buf[0] = Complex64::default();
        self.buf[n] = Complex64::default();
        for j in 1..n {
            self.buf[j] = Complex64::new(input[j], 0.0);
            self.buf[2 * n - j] = Complex64::new(-input[j], 0.0);
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        out[0] = 0.0;
        out[n] = 0.0;
        for k in 1..n {
            out[k] = -0.5 * self.buf[k].im;
        }
    }
}

struct Accel {
    spatial: Spatial,
    nx: usize,
    dx: f64,
    dst: SineTransform,
    coef: Vec<f64>,
    lap: Vec<f64>,
}

impl Accel {
    fn new(spatial: Spatial, nx: usize) -> Self {
        Accel {
            spatial,
            nx,
            dx: PI / nx as f64,
            dst: SineTransform::new(nx),
            coef: vec![0.0; nx + 1],
            lap: vec![0.0; nx + 1],
        }
    }

    /// Sine coefficients `a_k` of the grid function, `u = Σ a_k sin(kx)`.
    fn sine_coefficients(&mut self, u: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.nx + 1];
        self.dst.apply(u, &mut c);
        let s = 2.0 / self.nx as f64;
        c.iter_mut().for_each(|v| *v *= s);
        c
    }

    /// `a = u_xx − u³`, zero at the boundary.
    fn eval(&mut self, u: &[f64], a: &mut [f64]) {
        let n = self.nx;
        match self.spatial {
            Spatial::Spectral => {
                self.dst.apply(u, &mut self.coef);
                let s = 2.0 / n as f64;
                for k in 1..n {
                    self.coef[k] *= -((k * k) as f64) * s;
                }
                self.dst.apply(&self.coef, &mut self.lap);
            }
            Spatial::FiniteDifference => {
                let h2 = self.dx * self.dx;
                for j in 1..n {
                    self.lap[j] = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / h2;
                }
            }
        }
        a[0] = 0.0;
        a[n] = 0.0;
        for j in 1..n {
            a[j] = self.lap[j] - u[j] * u[j] * u[j];
        }
    }

    fn energy(&mut self, s: &GridState) -> f64 {
        let n = self.nx;
        let dx = self.dx;
        // Trapezoid weights are 1/2 at the ends, where Dirichlet data vanish.
        let mut e = 0.0;
        for j in 0..=n {
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            let (u, v) = (s.positions[j], s.velocities[j]);
            e += w * dx * (0.5 * v * v + 0.25 * u * u * u * u);
        }
        match self.spatial {
            Spatial::Spectral => {
                let a = self.sine_coefficients(&s.positions);
                e += PI / 4.0 * (1..n).map(|k| (k * k) as f64 * a[k] * a[k]).sum::<f64>();
            }
            Spatial::FiniteDifference => {
                e += (0..n).map(|j| (s.positions[j + 1] - s.positions[j]).powi(2)).sum::<f64>() / (2.0 * dx);
            }
        }
        e
    }
}

/// `∫₀^π (u_t²/2 + u_x²/2 + u⁴/4) dx`: trapezoid rule for the kinetic and
/// quartic terms, Parseval for the gradient term.
pub fn energy(state: &GridState) -> f64 {
    Accel::new(Spatial::Spectral, state.nx).energy(state)
}

/// Energy consistent with a given spatial discretization.
pub fn energy_with(state: &GridState, spatial: Spatial) -> f64 {
    Accel::new(spatial, state.nx).energy(state)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub nt: usize,
    pub spatial: Spatial,
    /// Steps between energy and symmetry samples.
    pub sample_every: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions { nt: DEFAULT_NT, spatial: Spatial::Spectral, sample_every: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationResult {
    pub final_state: GridState,
    pub return_error: f64,
    /// Largest `|E(t) − E(0)|/E(0)` over the samples.
    pub energy_drift: f64,
    /// Largest [`GridState::symmetry_defect`] over the samples.
    pub symmetry_defect: f64,
    pub dt: f64,
    pub steps: usize,
}

/// `max_j(|Δu_j| + |Δu_t,j|) / max_j |u_t,j(0)|`
pub fn return_error(initial: &GridState, fin: &GridState) -> f64 {
    let scale = initial.velocities.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = (0..=initial.nx)
        .map(|j| (fin.positions[j] - initial.positions[j]).abs() + (fin.velocities[j] - initial.velocities[j]).abs())
        .fold(0.0, f64::max);
    if diff == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Störmer–Verlet over one period `2π/Ω` in `nt` steps.
pub fn integrate_period_with(state: &GridState, omega: f64, opts: IntegrationOptions) -> Result<IntegrationResult> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("Ω must be positive, got {omega}")));
    }
    if opts.nt < MIN_NT {
        return Err(Error::Config(format!("N_t must be at least {MIN_NT}, got {}", opts.nt)));
    }
    if state.nx < MIN_NX || state.positions.len() != state.nx + 1 || state.velocities.len() != state.nx + 1 {
        return Err(Error::Config("malformed grid state".into()));
    }
    let period = 2.0 * PI / omega;
    let dt = period / opts.nt as f64;
    let dx = state.dx();
    if dt > 0.5 * dx {
        return Err(Error::Config(format!("CFL violation: dt = {dt:e} exceeds dx/2 = {:e}", 0.5 * dx)));
    }

    let n = state.nx;
    let mut acc = Accel::new(opts.spatial, n);
    let mut s = state.clone();
    let mut a = vec![0.0; n + 1];
    acc.eval(&s.positions, &mut a);
    let e0 = acc.energy(&s);
    let mut drift: f64 = 0.0;
    let mut sym = s.symmetry_defect();
    let every = opts.sample_every.max(1);
    let half = 0.5 * dt;
    for step in 1..=opts.nt {
        for j in 1..n {
            s.velocities[j] += half * a[j];
            s.positions[j] += dt * s.velocities[j];
        }
        acc.eval(&s.positions, &mut a);
        for j in 1..n {
            s.velocities[j] += half * a[j];
        }
        if step % every == 0 || step == opts.nt {
            if e0 > 0.0 {
                drift = drift.max((acc.energy(&s) - e0).abs() / e0);
            }
            sym = sym.max(s.symmetry_defect());
        }
    }
    s.time = state.time + period;
    Ok(IntegrationResult { return_error: return_error(state, &s), final_state: s, energy_drift: drift, symmetry_defect: sym, dt, steps: opts.nt })
}

/// One period with the spectral scheme; returns the final state and the
/// return error.
pub fn integrate_period(state: &GridState, omega: f64, nt: usize) -> Result<(GridState, f64)> {
    let r = integrate_period_with(state, omega, IntegrationOptions { nt, ..Default::default() })?;
    Ok((r.final_state, r.return_error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{ModeIndex, WeightConfig};

    fn single(m: u32, n: u32, c: f64) -> SpectralField {
        SpectralField::mode(WeightConfig::default(), ModeIndex::new(m, n), c)
    }

    #[test]
    fn initial_data_examples() {
        let st = initial_data(&single(0, 0, 1.0), 1.0, 64).unwrap();
        let st3 = initial_data(&single(1, 0, 1.0), 1.0, 64).unwrap();
        for (j, x) in st.grid().iter().enumerate() {
            assert_eq!(st.positions[j], 0.0);
            assert!((st.velocities[j] - x.sin()).abs() < 1e-15);
            assert!((st3.velocities[j] - 3.0 * x.sin()).abs() < 1e-14);
        }
        assert!(initial_data(&single(0, 0, 1.0), 1.0, 8).is_err());
    }

    #[test]
    fn dst_matches_direct_sum() {
        let n = 32;
        let mut t = SineTransform::new(n);
        let u: Vec<f64> = (0..=n).map(|j| if j == 0 || j == n { 0.0 } else { (j as f64 * 0.37).cos() }).collect();
        let mut out = vec![0.0; n + 1];
        t.apply(&u, &mut out);
        for k in 1..n {
            let direct: f64 = (1..n).map(|j| u[j] * (PI * (j * k) as f64 / n as f64).sin()).sum();
            assert!((out[k] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_laplacian_is_exact_on_modes() {
        let n = 64;
        let mut acc = Accel::new(Spatial::Spectral, n);
        let x: Vec<f64> = (0..=n).map(|j| j as f64 * PI / n as f64).collect();
        let u: Vec<f64> = x.iter().map(|x| (5.0 * x).sin()).collect();
        let mut a = vec![0.0; n + 1];
        acc.eval(&u, &mut a);
        for j in 1..n {
            let want = -25.0 * u[j] - u[j].powi(3);
            assert!((a[j] - want).abs() < 1e-11);
        }
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy(&GridState::zero(64)), 0.0);
        let mut s = GridState::zero(256);
        let g = s.grid();
        for j in 0..=256 {
            s.velocities[j] = g[j].sin();
        }
        assert!((energy(&s) - PI / 4.0).abs() < 1e-6);
    }

    #[test]
    fn zero_field_returns_exactly() {
        let st = initial_data(&SpectralField::zero(WeightConfig::default()), 1.0, 32).unwrap();
        let (_, err) = integrate_period(&st, 1.0, 1000).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn linear_regime() {
        let st = initial_data(&single(0, 0, 1e-8), 1.0, 64).unwrap();
        let nt = 2000;
        let (_, err) = integrate_period(&st, 1.0, nt).unwrap();
        let dt = 2.0 * PI / nt as f64;
        assert!(err <= 10.0 * dt * dt, "{err:e}");
    }

    #[test]
    fn cfl_guard() {
        let st = initial_data(&single(0, 0, 1.0), 1.0, 4096).unwrap();
        assert!(matches!(integrate_period(&st, 1.0, 1000), Err(Error::Config(_))));
        assert!(matches!(integrate_period(&st, 1.0, 999), Err(Error::Config(_))));
    }

    #[test]
    fn finite_difference_fallback() {
        let st = initial_data(&single(0, 0, 1e-3), 1.0, 64).unwrap();
        let opts = IntegrationOptions { nt: 4000, spatial: Spatial::FiniteDifference, sample_every: 50 };
        let r = integrate_period_with(&st, 1.0, opts).unwrap();
        // The discrete frequency of sin x under second differences is
        // 2 sin(dx/2)/dx, so the orbit misses by about the phase lag.
        let dx = PI / 64.0;
        let lag = 2.0 * PI * (1.0 - 2.0 * (dx / 2.0).sin() / dx);
        assert!(r.return_error < 2.0 * lag + 1e-5, "{}", r.return_error);
        assert!(r.energy_drift < 1e-5);
        assert!(r.symmetry_defect < 1e-12);
    }
}
