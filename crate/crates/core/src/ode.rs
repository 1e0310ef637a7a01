//! Deterministic backward ODE envelopes `φ(t) = a + ∫_t^T rhs(s, φ(s)) ds`,
//! blow-up detection and small-time existence thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::ScalarFn;
use crate::generator::{Domain, GeneratorSpec};
use crate::quadrature;
use crate::stochastic::TimeGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSolution {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub terminal: f64,
    pub blown_up: bool,
    pub blowup_time: Option<f64>,
    /// Node index of the first offending value when blown up.
    pub blowup_step: Option<usize>,
    /// Max over valid nodes of `|φ(t_i) - a - ∫_{t_i}^T rhs|`.
    pub residual: f64,
}

impl EnvelopeSolution {
    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// `(t, value)` rows for CSV export.
    pub fn rows(&self) -> Vec<(f64, f64)> {
        self.grid.nodes().into_iter().zip(self.values.iter().copied()).collect()
    }

    /// Shifts every value by `delta`, keeping the terminal consistent.
    pub fn shifted(&self, delta: f64) -> EnvelopeSolution {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v += delta);
        out.terminal += delta;
        out
    }
}

pub fn default_cap(a: f64) -> f64 {
    1e8 * (1.0 + a.abs())
}

#[inline]
fn rk4<F: Fn(f64, f64) -> f64>(rhs: &F, t_next: f64, y: f64, h: f64) -> f64 {
    let k1 = rhs(t_next, y);
    let k2 = rhs(t_next - 0.5 * h, y + 0.5 * h * k1);
    let k3 = rhs(t_next - 0.5 * h, y + 0.5 * h * k2);
    let k4 = rhs(t_next - h, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// One backward step from `(t_next, y_next)` to `t_next - h`: a full RK4 step
/// and two half steps combined by Richardson extrapolation.
#[inline]
pub fn backward_step<F: Fn(f64, f64) -> f64>(rhs: &F, t_next: f64, y_next: f64, h: f64) -> f64 {
    let coarse = rk4(rhs, t_next, y_next, h);
    let mid = rk4(rhs, t_next, y_next, 0.5 * h);
    let fine = rk4(rhs, t_next - 0.5 * h, mid, 0.5 * h);
    fine + (fine - coarse) / 15.0
}

/// Integrates `φ(t) = a + ∫_t^T rhs(s, φ(s)) ds` backward on the grid. Blow-up
/// is declared when `|φ|` exceeds `cap`, `φ` leaves `domain` or becomes
/// non-finite; the offending node and all earlier nodes are set to NaN.
pub fn solve_backward_ode<F>(a: f64, rhs: F, grid: TimeGrid, domain: &Domain, cap: Option<f64>) -> Result<EnvelopeSolution>
where
    F: Fn(f64, f64) -> f64,
{
    if !domain.contains(a) {
        return Err(Error::InvalidParam(format!("terminal value {a} is outside the domain {domain}")));
    }
    let cap = cap.unwrap_or_else(|| default_cap(a));
    let m = grid.steps;
    let h = grid.dt();
    let mut values = vec![f64::NAN; m + 1];
    values[m] = a;
    let mut blowup_step = None;
    for i in (0..m).rev() {
        let y = backward_step(&rhs, grid.node(i + 1), values[i + 1], h);
        if !y.is_finite() || y.abs() > cap || !domain.contains(y) {
            blowup_step = Some(i);
            break;
        }
        values[i] = y;
    }
    let first_valid = blowup_step.map_or(0, |i| i + 1);
    // residual via per-interval Simpson, midpoints from an RK4 half step
    let mut residual: f64 = 0.0;
    let mut integral = 0.0;
    for i in (first_valid..m).rev() {
        let (t0, t1) = (grid.node(i), grid.node(i + 1));
        let ymid = rk4(&rhs, t1, values[i + 1], 0.5 * h);
        let cell = (t1 - t0) / 6.0 * (rhs(t0, values[i]) + 4.0 * rhs(0.5 * (t0 + t1), ymid) + rhs(t1, values[i + 1]));
        integral += cell;
        residual = residual.max((values[i] - a - integral).abs());
    }
    Ok(EnvelopeSolution {
        grid,
        values,
        terminal: a,
        blown_up: blowup_step.is_some(),
        blowup_time: blowup_step.map(|i| grid.node(i)),
        blowup_step,
        residual,
    })
}

/// `ψ_b(t) = b^{exp(∫_t^T u)}`, the solution of `ψ(t) = b + ∫_t^T u ψ ln ψ`.
pub fn log_ode_solution(b: f64, u: &ScalarFn, grid: TimeGrid) -> Result<EnvelopeSolution> {
    let inv_e = (-1.0f64).exp();
    if !(b > 0.0 && b <= inv_e) {
        return Err(Error::InvalidParam(format!("b must lie in (0, 1/e], got {b}")));
    }
    let nodes = grid.nodes();
    let tails = quadrature::tail_integrals(|t| u.eval(t), &nodes);
    let psi = |big_u: f64| b.powf(big_u.exp());
    let mut values: Vec<f64> = tails.iter().map(|&v| psi(v)).collect();
    values[grid.steps] = b;
    let mut residual: f64 = 0.0;
    let mut integral = 0.0;
    let rhs = |t: f64, y: f64| u.eval(t) * y * y.ln();
    for i in (0..grid.steps).rev() {
        let (t0, t1) = (nodes[i], nodes[i + 1]);
        let tm = 0.5 * (t0 + t1);
        let ym = psi(tails[i + 1] + quadrature::simpson(|t| u.eval(t), tm, t1, 2));
        integral += (t1 - t0) / 6.0 * (rhs(t0, values[i]) + 4.0 * rhs(tm, ym) + rhs(t1, values[i + 1]));
        residual = residual.max((values[i] - b - integral).abs());
    }
    Ok(EnvelopeSolution { grid, values, terminal: b, blown_up: false, blowup_time: None, blowup_step: None, residual })
}

/// Largest `T <= t_max` (to 1e-4) for which the backward ODE on `[0, T]`
/// with `steps` grid steps does not blow up.
pub fn small_time_threshold<F>(a: f64, rhs: F, domain: &Domain, t_max: f64, cap: Option<f64>, steps: usize) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let blows = |t: f64| -> Result<bool> {
        let grid = TimeGrid::new(t, steps)?;
        Ok(solve_backward_ode(a, &rhs, grid, domain, cap)?.blown_up)
    };
    if !blows(t_max)? {
        return Ok(t_max);
    }
    let mut hi = t_max;
    let mut lo = None;
    let mut probe = t_max;
    for _ in 0..60 {
        probe *= 0.5;
        if blows(probe)? {
            hi = probe;
        } else {
            lo = Some(probe);
            break;
        }
    }
    let mut lo = lo.ok_or(Error::NoExistence { horizon: probe })?;
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if blows(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

/// Lower and upper deterministic envelopes from the declared growth envelope
/// of `spec` and bounds `b1 <= ξ <= c1` on the terminal value.
pub fn envelope_pair(spec: &GeneratorSpec, terminal_bounds: (f64, f64), grid: TimeGrid) -> Result<(EnvelopeSolution, EnvelopeSolution)> {
    let env = spec
        .envelope
        .as_ref()
        .ok_or_else(|| Error::InvalidParam("envelope_pair needs a declared growth envelope".into()))?;
    env.validate()?;
    let (b1, c1) = terminal_bounds;
    let c2 = c1.max(env.c);
    let check = |sol: EnvelopeSolution, which: &str| -> Result<EnvelopeSolution> {
        if sol.blown_up {
            let step = sol.blowup_step.unwrap_or(0);
            Err(Error::Divergence { step, time: grid.node(step), reason: format!("{which} envelope blows up") })
        } else {
            Ok(sol)
        }
    };
    let domain = spec.domain;
    let upper = solve_backward_ode(c2, |t, y| env.u.eval(t) * env.l.eval(y), grid, &domain, None)?;
    let upper = check(upper, "upper")?;
    let lower = if domain.is_positive_half_line() {
        log_ode_solution(b1.min(env.b), &env.u, grid)?
    } else {
        let b2 = b1.min(-env.c);
        check(solve_backward_ode(b2, |t, y| -env.u.eval(t) * env.l.eval(y), grid, &domain, None)?, "lower")?
    };
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{GeneratorFamily, GrowthEnvelope};
    use approx::assert_abs_diff_eq;

    fn grid(t: f64, m: usize) -> TimeGrid {
        TimeGrid::new(t, m).unwrap()
    }

    #[test]
    fn linear_ode_closed_form() {
        let sol = solve_backward_ode(0.5, |_, y| y, grid(1.0, 100), &Domain::RealLine, None).unwrap();
        assert_abs_diff_eq!(sol.values[0], 0.5 * 1f64.exp(), epsilon = 1e-10);
        assert!(!sol.blown_up);
        assert!(sol.residual <= 1e-6 * 1.5, "{}", sol.residual);
        assert_eq!(sol.values[100], 0.5);
    }

    #[test]
    fn zero_rhs_is_constant() {
        let sol = solve_backward_ode(2.5, |_, _| 0.0, grid(3.0, 10), &Domain::RealLine, None).unwrap();
        assert!(sol.values.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn exp_decay_from_negative_terminal() {
        let sol = solve_backward_ode(-0.5, |_, y| y, grid(1.0, 1000), &Domain::RealLine, None).unwrap();
        assert_abs_diff_eq!(sol.values[0], -0.5 * 1f64.exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(sol.values[0], -1.359, epsilon = 1e-3);
    }

    #[test]
    fn domain_exit_is_blow_up() {
        let dom = Domain::open_interval(-1.0, f64::INFINITY).unwrap();
        let sol = solve_backward_ode(-0.5, |_, y| y, grid(1.0, 1000), &dom, None).unwrap();
        assert!(sol.blown_up);
        let t = sol.blowup_time.unwrap();
        assert!((1.0 - t - 2f64.ln()).abs() < 2e-3, "exit at {t}");
        assert!(sol.values[0].is_nan());
        assert!(matches!(solve_backward_ode(-2.0, |_, y| y, grid(1.0, 10), &dom, None), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn cap_exceedance_is_blow_up() {
        // φ' = -φ^2 backward: φ(t) = 1 / (1 - (T - t)) blows up at T - t = 1
        let sol = solve_backward_ode(1.0, |_, y| y * y, grid(2.0, 2000), &Domain::RealLine, None).unwrap();
        assert!(sol.blown_up);
        assert!((2.0 - sol.blowup_time.unwrap() - 1.0).abs() < 0.01);
    }

    #[test]
    fn log_ode_values() {
        let g = grid(1.0, 200);
        let inv_e = (-1.0f64).exp();
        let flat = log_ode_solution(0.2, &ScalarFn::zero(), g).unwrap();
        assert!(flat.values.iter().all(|&v| (v - 0.2).abs() < 1e-15));
        let sol = log_ode_solution(inv_e, &ScalarFn::constant(1.0), g).unwrap();
        assert_abs_diff_eq!(sol.values[0], inv_e.powf(1f64.exp()), epsilon = 1e-12);
        assert_abs_diff_eq!(sol.values[0], 0.06599, epsilon = 1e-5);
        assert_eq!(sol.values[200], inv_e);
        assert!(sol.residual <= 1e-6);
        assert!(sol.values.iter().all(|&v| v <= inv_e));
        assert!(log_ode_solution(0.5, &ScalarFn::zero(), g).is_err());
    }

    #[test]
    fn thresholds_of_the_two_closed_form_systems() {
        let dom = Domain::open_interval(-1.0, f64::INFINITY).unwrap();
        let lam = small_time_threshold(-0.5, |_, y| y, &dom, 5.0, None, 1000).unwrap();
        assert!((lam - 2f64.ln()).abs() < 1e-3, "{lam}");
        let beta = 1.0;
        let lam = small_time_threshold(1.0, |_, _| -beta, &Domain::PositiveHalfLine, 5.0, None, 1000).unwrap();
        assert!((lam - 1.0 / beta).abs() < 1e-3, "{lam}");
        let lam = small_time_threshold(1.0, |_, _| 0.0, &Domain::RealLine, 5.0, None, 100).unwrap();
        assert_eq!(lam, 5.0);
    }

    #[test]
    fn no_existence_when_terminal_hugs_the_wall() {
        let dom = Domain::PositiveHalfLine;
        let err = small_time_threshold(1e-300, |_, _| -1e300, &dom, 1.0, None, 10).unwrap_err();
        assert!(matches!(err, Error::NoExistence { .. }));
    }

    fn envelope_spec(domain: Domain, l: ScalarFn) -> GeneratorSpec {
        let mut env = GrowthEnvelope::standard();
        env.l = l;
        GeneratorSpec::new(domain, GeneratorFamily::Zero).with_envelope(env).unwrap()
    }

    #[test]
    fn envelope_pair_affine_real_line() {
        let spec = envelope_spec(Domain::RealLine, ScalarFn::AbsAffine { intercept: 1.0, slope: 1.0 });
        let (lo, up) = envelope_pair(&spec, (-1.0, 1.0), grid(0.5, 500)).unwrap();
        let e = 0.5f64.exp();
        assert_abs_diff_eq!(up.values[0], 2.0 * e - 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(lo.values[0], 1.0 - 2.0 * e, epsilon = 1e-10);
    }

    #[test]
    fn envelope_pair_positive_and_flat() {
        let spec = envelope_spec(Domain::PositiveHalfLine, ScalarFn::AbsAffine { intercept: 1.0, slope: 1.0 });
        let t = 0.7;
        let (lo, _) = envelope_pair(&spec, (0.5, 2.0), grid(t, 100)).unwrap();
        let inv_e = (-1.0f64).exp();
        assert_abs_diff_eq!(lo.values[0], inv_e.powf(t.exp()), epsilon = 1e-12);

        let spec = envelope_spec(Domain::RealLine, ScalarFn::zero());
        let (lo, up) = envelope_pair(&spec, (-3.0, 0.5), grid(1.0, 10)).unwrap();
        assert!(lo.values.iter().all(|&v| v == -3.0));
        assert!(up.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn refinement_order_is_high() {
        let rhs = |t: f64, y: f64| (t * y).sin() + 0.5 * y;
        let exact = solve_backward_ode(0.3, rhs, grid(1.0, 4096), &Domain::RealLine, None).unwrap().values[0];
        let e1 = (solve_backward_ode(0.3, rhs, grid(1.0, 8), &Domain::RealLine, None).unwrap().values[0] - exact).abs();
        let e2 = (solve_backward_ode(0.3, rhs, grid(1.0, 16), &Domain::RealLine, None).unwrap().values[0] - exact).abs();
        let order = (e1 / e2).log2();
        assert!(order >= 3.5, "observed order {order} ({e1}, {e2})");
    }
}
