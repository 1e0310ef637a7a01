//! The transform `u(y) = ∫_α^y exp(2 ∫_α^x φ) dx`, its closed forms and the
//! weight `Λ_t(ζ) = e^{∫_0^t γ} (|ζ| + ∫_0^t δ)`, plus the shift and scale
//! maps that move discrete solutions between equivalent problems.

use std::cell::Cell;

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::bsde::SolutionProcess;
use crate::error::{Error, Result};
use crate::func::ScalarFn;
use crate::generator::Domain;
use crate::quadrature::{adaptive_simpson, gauss_legendre, head_integrals, simpson};

/// Functions `φ` whose transform is known in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClosedForm {
    /// `φ ≡ 0`
    Zero,
    /// `φ ≡ β`
    ConstantBeta { beta: f64 },
    /// `φ(y) = β / y` on `(0, ∞)`
    PowerOverY { beta: f64 },
    /// `φ(y) = -ν / y` on `(-∞, 0)`
    NegativeNuOverY { nu: f64 },
}

impl ClosedForm {
    pub fn phi(&self) -> ScalarFn {
        match *self {
            ClosedForm::Zero => ScalarFn::zero(),
            ClosedForm::ConstantBeta { beta } => ScalarFn::constant(beta),
            ClosedForm::PowerOverY { beta } => ScalarFn::Power { scale: beta, exponent: -1.0 },
            ClosedForm::NegativeNuOverY { nu } => ScalarFn::Power { scale: -nu, exponent: -1.0 },
        }
    }

    fn check_domain(&self, domain: &Domain, alpha: f64) -> Result<()> {
        let (lo, hi) = domain.bounds();
        match self {
            ClosedForm::PowerOverY { .. } if lo < 0.0 || alpha <= 0.0 => Err(Error::InvalidParam(format!(
                "power_over_y needs a domain inside (0, ∞), got {domain}"
            ))),
            ClosedForm::NegativeNuOverY { .. } if hi > 0.0 || alpha >= 0.0 => Err(Error::InvalidParam(format!(
                "negative_nu_over_y needs a domain inside (-∞, 0), got {domain}"
            ))),
            _ => Ok(()),
        }
    }

    fn eval(&self, alpha: f64, y: f64) -> f64 {
        // φ = β / y with base α: u = α/(1+2β) ((y/α)^{1+2β} - 1)
        let power = |beta: f64| {
            let e = 1.0 + 2.0 * beta;
            if e == 0.0 {
                alpha * (y / alpha).ln()
            } else {
                alpha / e * ((y / alpha).powf(e) - 1.0)
            }
        };
        match *self {
            ClosedForm::Zero => y - alpha,
            ClosedForm::ConstantBeta { beta } if beta == 0.0 => y - alpha,
            ClosedForm::ConstantBeta { beta } => (2.0 * beta * (y - alpha)).exp_m1() / (2.0 * beta),
            ClosedForm::PowerOverY { beta } => power(beta),
            ClosedForm::NegativeNuOverY { nu } => power(-nu),
        }
    }
}

const TABLE_NODES: usize = 2048;
const OUTER_BUDGET: usize = 100_000;
const OUTER_REL_TOL: f64 = 1e-12;

/// `Φ(x) = ∫_α^x φ` tabulated on a monotone grid around `α`; between nodes
/// the integral is completed exactly with Gauss–Legendre from the nearest node.
#[derive(Clone, Debug)]
struct PhiTable {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct UPhiTransform {
    pub alpha: f64,
    pub phi: ScalarFn,
    pub domain: Domain,
    pub closed_form: Option<ClosedForm>,
    table: PhiTable,
}

/// Base point used when none is given: 0 on ℝ, 1 on `(0, ∞)`, -1 on
/// `(-∞, 0)`, otherwise the midpoint (or a unit step in from the finite wall).
pub fn default_alpha(domain: &Domain) -> f64 {
    let (lo, hi) = domain.bounds();
    match (lo.is_finite(), hi.is_finite()) {
        (false, false) => 0.0,
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 1.0,
        (false, true) => hi - 1.0,
    }
}

impl UPhiTransform {
    pub fn new(domain: Domain, alpha: f64, phi: ScalarFn) -> Result<Self> {
        domain.validate()?;
        domain.require(alpha)?;
        let table = PhiTable::build(&phi, &domain, alpha)?;
        Ok(UPhiTransform { alpha, phi, domain, closed_form: None, table })
    }

    pub fn closed(domain: Domain, alpha: f64, form: ClosedForm) -> Result<Self> {
        form.check_domain(&domain, alpha)?;
        let mut tr = UPhiTransform::new(domain, alpha, form.phi())?;
        tr.closed_form = Some(form);
        Ok(tr)
    }

    /// `∫_α^x φ`.
    pub fn inner(&self, x: f64) -> f64 {
        self.table.eval(&self.phi, &self.domain, self.alpha, x)
    }

    fn numeric(&self, y: f64) -> Result<f64> {
        if y == self.alpha {
            return Ok(0.0);
        }
        let (a, b, sign) = if y > self.alpha { (self.alpha, y, 1.0) } else { (y, self.alpha, -1.0) };
        let integrand = |x: f64| (2.0 * self.inner(x)).exp();
        let cuts = pieces(&self.domain, self.alpha, a, b);
        // rough pass to fix the absolute tolerance
        let rough: f64 = cuts.windows(2).map(|w| simpson(integrand, w[0], w[1], 8).abs()).sum();
        if !rough.is_finite() {
            return Ok(sign * f64::INFINITY);
        }
        let tol = OUTER_REL_TOL * rough.max(f64::MIN_POSITIVE);
        let evals = Cell::new(0usize);
        let counted = |x: f64| {
            evals.set(evals.get() + 1);
            integrand(x)
        };
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let share = tol * (w[1] - w[0]) / (b - a);
            let left = OUTER_BUDGET.saturating_sub(evals.get());
            if left < 3 {
                return Err(Error::QuadratureFailure { budget: OUTER_BUDGET });
            }
            total += adaptive_simpson(counted, w[0], w[1], share, left)
                .map_err(|_| Error::QuadratureFailure { budget: OUTER_BUDGET })?;
        }
        Ok(sign * total)
    }

    fn eval_any(&self, y: f64) -> Result<f64> {
        match self.closed_form {
            Some(form) => Ok(form.eval(self.alpha, y)),
            None => self.numeric(y),
        }
    }
}

/// Breakpoints for integrals over `[a, b]`: each piece stays within a fifth
/// of its distance to a finite wall and grows geometrically away from `α`.
fn pieces(domain: &Domain, alpha: f64, a: f64, b: f64) -> Vec<f64> {
    let (lo, hi) = domain.bounds();
    let h0 = 0.25 * (1.0 + alpha.abs());
    let step_len = |x: f64| {
        let wall = (x - lo).min(hi - x);
        let far = h0.max(0.25 * (x - alpha).abs());
        far.min(0.2 * wall)
    };
    // walk outward from the end nearer to α so that the pieces near a wall
    // are sized by the wall distance
    let from_a = (a - alpha).abs() <= (b - alpha).abs();
    let mut out = Vec::new();
    if from_a {
        let mut x = a;
        out.push(x);
        while x < b {
            x = (x + step_len(x)).min(b);
            out.push(x);
        }
    } else {
        let mut x = b;
        out.push(x);
        while x > a {
            x = (x - step_len(x)).max(a);
            out.push(x);
        }
        out.reverse();
    }
    out
}

fn integrate_phi(phi: &ScalarFn, domain: &Domain, alpha: f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let cuts = pieces(domain, alpha, lo, hi);
    sign * cuts.windows(2).map(|w| gauss_legendre(|x| phi.eval(x), w[0], w[1])).sum::<f64>()
}

impl PhiTable {
    fn build(phi: &ScalarFn, domain: &Domain, alpha: f64) -> Result<Self> {
        let (lo, hi) = domain.bounds();
        let span = if lo.is_finite() && hi.is_finite() { hi - lo } else { 1.0 + alpha.abs() };
        let half = TABLE_NODES / 2;
        // one side of α: geometric towards a finite wall, uniform otherwise
        let side = |wall: f64, dir: f64| -> Vec<f64> {
            if wall.is_finite() {
                let d0 = (alpha - wall).abs();
                let dmin = (1e-8 * span).min(0.5 * d0);
                let ratio = (dmin / d0).powf(1.0 / half as f64);
                (1..=half).map(|k| wall - dir * d0 * ratio.powi(k as i32)).collect()
            } else {
                let reach = 50.0 * (1.0 + alpha.abs());
                (1..=half).map(|k| alpha + dir * reach * k as f64 / half as f64).collect()
            }
        };
        let mut nodes: Vec<f64> = side(lo, -1.0).into_iter().rev().collect();
        let centre = nodes.len();
        nodes.push(alpha);
        nodes.extend(side(hi, 1.0));
        let mut values = vec![0.0; nodes.len()];
        for k in centre + 1..nodes.len() {
            values[k] = values[k - 1] + integrate_phi(phi, domain, alpha, nodes[k - 1], nodes[k]);
        }
        for k in (0..centre).rev() {
            values[k] = values[k + 1] - integrate_phi(phi, domain, alpha, nodes[k], nodes[k + 1]);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite { what: "inner integral of phi".into() });
        }
        Ok(PhiTable { nodes, values })
    }

    fn eval(&self, phi: &ScalarFn, domain: &Domain, alpha: f64, x: f64) -> f64 {
        let k = match self.nodes.binary_search_by(|n| n.total_cmp(&x)) {
            Ok(k) => return self.values[k],
            Err(k) => k,
        };
        let near = if k == 0 {
            0
        } else if k == self.nodes.len() || (x - self.nodes[k - 1]) <= (self.nodes[k] - x) {
            k - 1
        } else {
            k
        };
        self.values[near] + integrate_phi(phi, domain, alpha, self.nodes[near], x)
    }
}

/// `u(y)`: closed form when tagged, nested quadrature otherwise.
pub fn u_phi(tr: &UPhiTransform, y: f64) -> Result<f64> {
    tr.domain.require(y)?;
    let v = tr.eval_any(y)?;
    if v.is_nan() || v.is_infinite() {
        return Err(Error::NonFinite { what: format!("u_phi({y})") });
    }
    Ok(v)
}

/// `u(y)` by nested quadrature even when a closed form is available.
pub fn u_phi_numeric(tr: &UPhiTransform, y: f64) -> Result<f64> {
    tr.domain.require(y)?;
    let v = tr.numeric(y)?;
    if !v.is_finite() {
        return Err(Error::NonFinite { what: format!("u_phi({y})") });
    }
    Ok(v)
}

/// Inverse of `u` by bisection. The bracket grows away from `α`, doubling
/// on an infinite side and halving the gap to a finite wall otherwise.
pub fn u_phi_inverse(tr: &UPhiTransform, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite { what: "u_phi_inverse argument".into() });
    }
    let alpha = tr.alpha;
    if v == 0.0 {
        return Ok(alpha);
    }
    let up = v > 0.0;
    let (lo_wall, hi_wall) = tr.domain.bounds();
    let wall = if up { hi_wall } else { lo_wall };
    let dir = if up { 1.0 } else { -1.0 };
    let probe = |k: i32| -> f64 {
        if wall.is_finite() {
            wall - (wall - alpha) * 0.5f64.powi(k)
        } else {
            alpha + dir * (1.0 + alpha.abs()) * 2f64.powi(k - 1)
        }
    };
    let reached = |y: f64| -> Result<(bool, f64)> {
        let u = tr.eval_any(y)?;
        Ok((if up { u >= v } else { u <= v }, u))
    };
    let mut inner = alpha;
    let mut outer = None;
    let mut last_u = 0.0;
    for k in 1..=60 {
        let y = probe(k);
        if !tr.domain.contains(y) || y == inner {
            break;
        }
        let (hit, u) = reached(y)?;
        if hit {
            outer = Some(y);
            break;
        }
        inner = y;
        last_u = u;
    }
    let mut outer = outer.ok_or(if up {
        Error::OutOfRange { value: v, lower: f64::NEG_INFINITY, upper: last_u }
    } else {
        Error::OutOfRange { value: v, lower: last_u, upper: f64::INFINITY }
    })?;
    let tol = 1e-10 * (1.0 + v.abs());
    for _ in 0..200 {
        let mid = 0.5 * (inner + outer);
        if mid == inner || mid == outer {
            break;
        }
        let (hit, u) = reached(mid)?;
        if (u - v).abs() <= tol {
            return Ok(mid);
        }
        if hit {
            outer = mid;
        } else {
            inner = mid;
        }
    }
    let (ui, uo) = (tr.eval_any(inner)?, tr.eval_any(outer)?);
    Ok(if (ui - v).abs() <= (uo - v).abs() { inner } else { outer })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaWeight {
    pub delta: ScalarFn,
    pub gamma: ScalarFn,
}

const TIME_CELLS: usize = 256;

impl LambdaWeight {
    /// `(∫_0^t γ, ∫_0^t δ)` by composite Simpson.
    pub fn integrals(&self, t: f64) -> (f64, f64) {
        (
            simpson(|s| self.gamma.eval(s), 0.0, t, TIME_CELLS),
            simpson(|s| self.delta.eval(s), 0.0, t, TIME_CELLS),
        )
    }
}

pub fn lambda_weight(w: &LambdaWeight, t: f64, zeta: f64) -> f64 {
    let (ig, id) = w.integrals(t);
    ig.exp() * (zeta.abs() + id)
}

/// `u_f(q x) - (b1 u_{f^q}(x) + b2)` with `f^q(x) = q f(q x)`,
/// `b1 = q exp(2 ∫_α^{qα} f)` and `b2 = u_f(q α)`; every term by quadrature.
pub fn scaling_identity_residual(f: &ScalarFn, domain: &Domain, q: f64, alpha: f64, x: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParam(format!("scaling factor must be >= 1, got {q}")));
    }
    for p in [x, alpha, q * alpha, q * x] {
        domain.require(p)?;
    }
    let uf = UPhiTransform::new(*domain, alpha, f.clone())?;
    let f2 = f.clone();
    let fq = ScalarFn::custom(move |s| q * f2.eval(q * s));
    let ufq = UPhiTransform::new(*domain, alpha, fq)?;
    let b1 = q * (2.0 * uf.inner(q * alpha)).exp();
    let b2 = u_phi_numeric(&uf, q * alpha)?;
    Ok(u_phi_numeric(&uf, q * x)? - (b1 * u_phi_numeric(&ufq, x)? + b2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Inverse,
}

/// `∫_0^{t_i} f` at every grid node.
fn node_integrals(f: &ScalarFn, sol: &SolutionProcess) -> Vec<f64> {
    let nodes = sol.grid.nodes();
    // per-cell Simpson, refined so that non-polynomial rates stay accurate
    let fine = 8;
    let dense: Vec<f64> = (0..sol.grid.steps * fine + 1)
        .map(|j| if j == sol.grid.steps * fine { sol.grid.horizon } else { j as f64 * sol.grid.horizon / (sol.grid.steps * fine) as f64 })
        .collect();
    let acc = head_integrals(|s| f.eval(s), &dense);
    (0..nodes.len()).map(|i| acc[i * fine]).collect()
}

/// `Y_i -> Y_i ∓ e^{∫_0^{t_i} γ} ∫_0^{t_i} δ`; forward subtracts.
pub fn ito_shift_map(sol: &SolutionProcess, gamma: &ScalarFn, delta: &ScalarFn, direction: Direction) -> SolutionProcess {
    let ig = node_integrals(gamma, sol);
    let id = node_integrals(delta, sol);
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let mut out = sol.clone();
    for (i, mut row) in out.y.axis_iter_mut(Axis(0)).enumerate() {
        let s = sign * ig[i].exp() * id[i];
        row.mapv_inplace(|v| v + s);
    }
    out
}

/// Forward multiplies `Y_i`, `Z_i` and `ΔK_i` by `e^{-∫_0^{t_i} γ}`, the
/// increment weighted at its left endpoint; inverse uses the reciprocal.
pub fn ito_scale_map(sol: &SolutionProcess, gamma: &ScalarFn, direction: Direction) -> SolutionProcess {
    let ig = node_integrals(gamma, sol);
    let w: Vec<f64> = ig
        .iter()
        .map(|g| match direction {
            Direction::Forward => (-g).exp(),
            Direction::Inverse => g.exp(),
        })
        .collect();
    let mut out = sol.clone();
    for (i, mut row) in out.y.axis_iter_mut(Axis(0)).enumerate() {
        row.mapv_inplace(|v| v * w[i]);
    }
    for (i, mut slab) in out.z.axis_iter_mut(Axis(0)).enumerate() {
        slab.mapv_inplace(|v| v * w[i]);
    }
    if let (Some(k_new), Some(k_old)) = (out.k.as_mut(), sol.k.as_ref()) {
        let m = sol.grid.steps;
        for p in 0..k_old.ncols() {
            let mut acc = 0.0;
            k_new[[0, p]] = 0.0;
            for i in 0..m {
                acc += w[i] * (k_old[[i + 1, p]] - k_old[[i, p]]);
                k_new[[i + 1, p]] = acc;
            }
        }
    }
    for (i, se) in out.meta.stderr.iter_mut().enumerate() {
        *se *= w[i];
    }
    out
}

/// `Y = e^{∫γ} y`, `Z = e^{∫γ} z`, `dK = e^{∫γ} dk`: the scale map run backwards.
pub fn scale_change_of_variables(sol: &SolutionProcess, gamma: &ScalarFn) -> SolutionProcess {
    ito_scale_map(sol, gamma, Direction::Inverse)
}
