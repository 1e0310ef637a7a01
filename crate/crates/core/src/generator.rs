//! Generators `g(t, y, z)`, their value domains and declared growth envelopes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::ScalarFn;

/// Open value domain of the solution `Y`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    RealLine,
    PositiveHalfLine,
    OpenInterval { lower: f64, upper: f64 },
}

impl Domain {
    pub fn real_line() -> Self {
        Domain::RealLine
    }

    pub fn positive_half_line() -> Self {
        Domain::PositiveHalfLine
    }

    pub fn open_interval(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || lower.is_nan() || upper.is_nan() {
            return Err(Error::InvalidParam(format!(
                "open interval needs lower < upper, got ({lower}, {upper})"
            )));
        }
        Ok(Domain::OpenInterval { lower, upper })
    }

    /// `(lower, upper)` as extended reals.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::RealLine => (f64::NEG_INFINITY, f64::INFINITY),
            Domain::PositiveHalfLine => (0.0, f64::INFINITY),
            Domain::OpenInterval { lower, upper } => (lower, upper),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds();
        if lo < hi {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!("empty domain ({lo}, {hi})")))
        }
    }

    #[inline]
    pub fn contains(&self, y: f64) -> bool {
        let (lo, hi) = self.bounds();
        lo < y && y < hi
    }

    pub fn is_real_line(&self) -> bool {
        let (lo, hi) = self.bounds();
        lo == f64::NEG_INFINITY && hi == f64::INFINITY
    }

    pub fn is_positive_half_line(&self) -> bool {
        self.bounds() == (0.0, f64::INFINITY)
    }

    /// Image of the domain under `y -> -y`.
    pub fn mirrored(&self) -> Domain {
        let (lo, hi) = self.bounds();
        if self.is_real_line() {
            Domain::RealLine
        } else {
            Domain::OpenInterval { lower: -hi, upper: -lo }
        }
    }

    /// Clamp `y` into `[lower + eps, upper - eps]`; finite walls only.
    #[inline]
    pub fn project(&self, y: f64, eps: f64) -> f64 {
        let (lo, hi) = self.bounds();
        let mut v = y;
        if lo.is_finite() && v < lo + eps {
            v = lo + eps;
        }
        if hi.is_finite() && v > hi - eps {
            v = hi - eps;
        }
        v
    }

    pub fn require(&self, y: f64) -> Result<()> {
        if self.contains(y) {
            Ok(())
        } else {
            Err(Error::DomainViolation { value: y, domain: self.to_string() })
        }
    }
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.bounds() == other.bounds()
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.bounds();
        write!(f, "({lo}, {hi})")
    }
}

type DriverFn = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;

/// Builtin generator families plus a user-supplied closure.
#[derive(Clone)]
pub enum GeneratorFamily {
    Zero,
    /// `a*y + b0 + (gamma_q/2)|z|^2`; pure affine when `gamma_q = 0`.
    AffineQuadratic { a: f64, b0: f64, gamma_q: f64 },
    /// `coef * |z|^2 / y^r` on `(0, ∞)`.
    PowerQuadratic { coef: f64, r: f64 },
    /// `u (b1 + b2/y^k + b3 y ln y + b4 φ(y)) + b5 |z|^l + b6/y^r |z|^2` on `(0, ∞)`,
    /// `φ` the two-piece function with threshold `c` and frozen coefficient `eta`.
    SingularLogGrowth {
        u: f64,
        b: [f64; 6],
        k: f64,
        l: f64,
        r: f64,
        c: f64,
        eta: f64,
    },
    /// `-1 + e^y - |z|^2/2`.
    ExpMinusQuadratic,
    /// `δ + h(y)(γ|y| + f|z|^2) + k(y)(phi + psi |z|^r)` on the real line with
    /// `h(y) = clamp(y/c, -1, 1)` and `k(y) = max(0, 1 - |y|/c)`.
    TruncatedQuadratic {
        delta: f64,
        gamma: f64,
        f: f64,
        c: f64,
        phi: f64,
        psi: f64,
        r: f64,
    },
    /// `δ + b1/y^k + b2|y| + b3 φ(y) + b4|z|^l + b5/y^r |z|^2` on `(0, ∞)`.
    SingularUnbounded {
        delta: f64,
        b: [f64; 5],
        k: f64,
        l: f64,
        r: f64,
        c: f64,
        eta: f64,
    },
    /// `u (l0 + l1 |y|) + f |z|^2`.
    EnvelopeDriver { u: f64, l0: f64, l1: f64, f: f64 },
    /// `(gamma_q/2)|z|^2 + amplitude * max(0, 1 - |z - center e1| / width)`.
    QuadraticBump { gamma_q: f64, amplitude: f64, width: f64, center: f64 },
    Custom { name: String, f: DriverFn, z_independent: bool },
}

fn phi_two_piece(y: f64, c: f64, eta: f64) -> f64 {
    let base = (-eta.abs()).exp();
    if y < c {
        (y - c) * (y - c) * eta.abs() + base
    } else {
        base
    }
}

#[inline]
fn norm_sq(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

impl GeneratorFamily {
    /// Builds a builtin family from its string id and flat parameter map.
    /// Unknown ids and unknown parameter names are rejected.
    pub fn from_params(id: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let allowed: &[&str] = match id {
            "zero" => &[],
            "affine" => &["a", "b0"],
            "pure_quadratic" => &["gamma_q"],
            "affine_quadratic" => &["a", "b0", "gamma_q"],
            "power_quadratic" => &["coef", "r"],
            "singular_log_growth" => {
                &["u", "b1", "b2", "b3", "b4", "b5", "b6", "k", "l", "r", "c", "eta"]
            }
            "exp_minus_quadratic" => &[],
            "truncated_quadratic" => &["delta", "gamma", "f", "c", "phi", "psi", "r"],
            "singular_unbounded" => &["delta", "b1", "b2", "b3", "b4", "b5", "k", "l", "r", "c", "eta"],
            "envelope_driver" => &["u", "l0", "l1", "f"],
            "quadratic_bump" => &["gamma_q", "amplitude", "width", "center"],
            other => return Err(Error::InvalidParam(format!("unknown generator family '{other}'"))),
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidParam(format!(
                "parameter '{bad}' is not accepted by family '{id}' (allowed: {allowed:?})"
            )));
        }
        let p = |name: &str, default: f64| params.get(name).copied().unwrap_or(default);
        let family = match id {
            "zero" => GeneratorFamily::Zero,
            "affine" => GeneratorFamily::AffineQuadratic { a: p("a", 0.0), b0: p("b0", 0.0), gamma_q: 0.0 },
            "pure_quadratic" => GeneratorFamily::AffineQuadratic { a: 0.0, b0: 0.0, gamma_q: p("gamma_q", 1.0) },
            "affine_quadratic" => GeneratorFamily::AffineQuadratic {
                a: p("a", 0.0),
                b0: p("b0", 0.0),
                gamma_q: p("gamma_q", 1.0),
            },
            "power_quadratic" => GeneratorFamily::PowerQuadratic { coef: p("coef", 1.0), r: p("r", 1.0) },
            "singular_log_growth" => GeneratorFamily::SingularLogGrowth {
                u: p("u", 1.0),
                b: [p("b1", 0.0), p("b2", 0.0), p("b3", 0.0), p("b4", 0.0), p("b5", 0.0), p("b6", 0.0)],
                k: p("k", 1.0),
                l: p("l", 1.0),
                r: p("r", 1.0),
                c: p("c", 1.0),
                eta: p("eta", 0.0),
            },
            "exp_minus_quadratic" => GeneratorFamily::ExpMinusQuadratic,
            "truncated_quadratic" => GeneratorFamily::TruncatedQuadratic {
                delta: p("delta", 0.0),
                gamma: p("gamma", 0.0),
                f: p("f", 0.0),
                c: p("c", 1.0),
                phi: p("phi", 0.0),
                psi: p("psi", 0.0),
                r: p("r", 1.0),
            },
            "singular_unbounded" => GeneratorFamily::SingularUnbounded {
                delta: p("delta", 0.0),
                b: [p("b1", 0.0), p("b2", 0.0), p("b3", 0.0), p("b4", 0.0), p("b5", 0.0)],
                k: p("k", 1.0),
                l: p("l", 1.0),
                r: p("r", 1.0),
                c: p("c", 1.0),
                eta: p("eta", 0.0),
            },
            "envelope_driver" => GeneratorFamily::EnvelopeDriver {
                u: p("u", 1.0),
                l0: p("l0", 1.0),
                l1: p("l1", 1.0),
                f: p("f", 0.0),
            },
            "quadratic_bump" => GeneratorFamily::QuadraticBump {
                gamma_q: p("gamma_q", 1.0),
                amplitude: p("amplitude", 0.5),
                width: p("width", 0.25),
                center: p("center", 0.5),
            },
            _ => unreachable!(),
        };
        family.validate()?;
        Ok(family)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParam(msg.to_string()));
        match self {
            GeneratorFamily::SingularLogGrowth { u, b, k, l, r, c, .. } => {
                if *u < 0.0 || b.iter().any(|v| *v < 0.0) {
                    return bad("singular_log_growth needs u >= 0 and b_i >= 0");
                }
                if !(*k > 0.0 && (1.0..=2.0).contains(l) && *r > 0.0 && *r <= 1.0 && *c > 0.0) {
                    return bad("singular_log_growth needs k > 0, 1 <= l <= 2, 0 < r <= 1, c > 0");
                }
            }
            GeneratorFamily::SingularUnbounded { delta, b, k, l, r, c, .. } => {
                if *delta < 0.0 || b.iter().any(|v| *v < 0.0) {
                    return bad("singular_unbounded needs delta >= 0 and b_i >= 0");
                }
                if !(*k > 0.0 && (1.0..=2.0).contains(l) && *r > 0.0 && *r <= 1.0 && *c > 0.0) {
                    return bad("singular_unbounded needs k > 0, 1 <= l <= 2, 0 < r <= 1, c > 0");
                }
            }
            GeneratorFamily::TruncatedQuadratic { c, r, .. } => {
                if !(*c > 0.0 && *r > 0.0 && *r <= 2.0) {
                    return bad("truncated_quadratic needs c > 0 and 0 < r <= 2");
                }
            }
            GeneratorFamily::QuadraticBump { width, .. } => {
                if !(*width > 0.0) {
                    return bad("quadratic_bump needs width > 0");
                }
            }
            _ => {}
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, t: f64, y: f64, z: &[f64]) -> f64 {
        match self {
            GeneratorFamily::Zero => 0.0,
            GeneratorFamily::AffineQuadratic { a, b0, gamma_q } => {
                let q = if *gamma_q == 0.0 { 0.0 } else { 0.5 * gamma_q * norm_sq(z) };
                a * y + b0 + q
            }
            GeneratorFamily::PowerQuadratic { coef, r } => coef * norm_sq(z) / y.powf(*r),
            GeneratorFamily::SingularLogGrowth { u, b, k, l, r, c, eta } => {
                let zn = norm_sq(z).sqrt();
                let mut drift = b[0];
                if b[1] != 0.0 {
                    drift += b[1] / y.powf(*k);
                }
                if b[2] != 0.0 {
                    drift += b[2] * y * y.ln();
                }
                if b[3] != 0.0 {
                    drift += b[3] * phi_two_piece(y, *c, *eta);
                }
                let mut v = u * drift;
                if b[4] != 0.0 {
                    v += b[4] * zn.powf(*l);
                }
                if b[5] != 0.0 {
                    v += b[5] / y.powf(*r) * zn * zn;
                }
                v
            }
            GeneratorFamily::ExpMinusQuadratic => -1.0 + y.exp() - 0.5 * norm_sq(z),
            GeneratorFamily::TruncatedQuadratic { delta, gamma, f, c, phi, psi, r } => {
                let h = (y / c).clamp(-1.0, 1.0);
                let kk = (1.0 - y.abs() / c).max(0.0);
                let zn = norm_sq(z).sqrt();
                let mut v = delta + h * (gamma * y.abs() + f * zn * zn);
                if kk > 0.0 {
                    v += kk * (phi + psi * zn.powf(*r));
                }
                v
            }
            GeneratorFamily::SingularUnbounded { delta, b, k, l, r, c, eta } => {
                let zn = norm_sq(z).sqrt();
                let mut v = *delta;
                if b[0] != 0.0 {
                    v += b[0] / y.powf(*k);
                }
                v += b[1] * y.abs();
                if b[2] != 0.0 {
                    v += b[2] * phi_two_piece(y, *c, *eta);
                }
                if b[3] != 0.0 {
                    v += b[3] * zn.powf(*l);
                }
                if b[4] != 0.0 {
                    v += b[4] / y.powf(*r) * zn * zn;
                }
                v
            }
            GeneratorFamily::EnvelopeDriver { u, l0, l1, f } => {
                u * (l0 + l1 * y.abs()) + f * norm_sq(z)
            }
            GeneratorFamily::QuadraticBump { gamma_q, amplitude, width, center } => {
                let mut d2 = 0.0;
                for (i, zi) in z.iter().enumerate() {
                    let c = if i == 0 { *center } else { 0.0 };
                    d2 += (zi - c) * (zi - c);
                }
                0.5 * gamma_q * norm_sq(z) + amplitude * (1.0 - d2.sqrt() / width).max(0.0)
            }
            GeneratorFamily::Custom { f, .. } => f(t, y, z),
        }
    }

    /// True when `g` does not depend on `z`.
    pub fn is_z_independent(&self) -> bool {
        match self {
            GeneratorFamily::Zero | GeneratorFamily::ExpMinusQuadratic => {
                matches!(self, GeneratorFamily::Zero)
            }
            GeneratorFamily::AffineQuadratic { gamma_q, .. } => *gamma_q == 0.0,
            GeneratorFamily::PowerQuadratic { coef, .. } => *coef == 0.0,
            GeneratorFamily::SingularLogGrowth { b, .. } => b[4] == 0.0 && b[5] == 0.0,
            GeneratorFamily::TruncatedQuadratic { f, psi, .. } => *f == 0.0 && *psi == 0.0,
            GeneratorFamily::SingularUnbounded { b, .. } => b[3] == 0.0 && b[4] == 0.0,
            GeneratorFamily::EnvelopeDriver { f, .. } => *f == 0.0,
            GeneratorFamily::QuadraticBump { gamma_q, amplitude, .. } => {
                *gamma_q == 0.0 && *amplitude == 0.0
            }
            GeneratorFamily::Custom { z_independent, .. } => *z_independent,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            GeneratorFamily::Zero => "zero",
            GeneratorFamily::AffineQuadratic { .. } => "affine_quadratic",
            GeneratorFamily::PowerQuadratic { .. } => "power_quadratic",
            GeneratorFamily::SingularLogGrowth { .. } => "singular_log_growth",
            GeneratorFamily::ExpMinusQuadratic => "exp_minus_quadratic",
            GeneratorFamily::TruncatedQuadratic { .. } => "truncated_quadratic",
            GeneratorFamily::SingularUnbounded { .. } => "singular_unbounded",
            GeneratorFamily::EnvelopeDriver { .. } => "envelope_driver",
            GeneratorFamily::QuadraticBump { .. } => "quadratic_bump",
            GeneratorFamily::Custom { name, .. } => name,
        }
    }
}

impl GeneratorFamily {
    /// A valid (not necessarily tight) growth envelope for the builtin
    /// families that admit one; `None` for the others.
    pub fn declared_envelope(&self) -> Option<GrowthEnvelope> {
        let inv_e = (-1.0f64).exp();
        let mut env = GrowthEnvelope::standard();
        match self {
            GeneratorFamily::Zero => {}
            GeneratorFamily::AffineQuadratic { a, b0, gamma_q } => {
                env.l = ScalarFn::AbsAffine { intercept: 1.0 + b0.abs(), slope: a.abs() };
                env.f = ScalarFn::constant(0.5 * gamma_q.abs());
                env.delta = ScalarFn::constant(b0.abs());
                env.gamma = ScalarFn::constant(a.abs());
            }
            GeneratorFamily::PowerQuadratic { coef, r } => {
                env.c = 1.0;
                env.f = ScalarFn::constant(coef.abs() / env.c.powf(*r));
            }
            GeneratorFamily::SingularLogGrowth { u, b, k, r, c, eta, .. } => {
                let cc = c.max(inv_e);
                let big_u = if *u > 0.0 { u * b[2].max(1.0) } else { 1.0 };
                let base = u * (b[0] + b[1] / cc.powf(*k) + b[3] * (-eta.abs()).exp()) + b[4];
                env.u = ScalarFn::constant(big_u);
                env.l = ScalarFn::AbsXLogX { intercept: (1.0 + base) / big_u, slope: u * b[2] / big_u };
                env.f = ScalarFn::constant(b[4] + b[5] / cc.powf(*r));
                env.c = cc;
                // no linear-in-y bound exists for the y ln y term
            }
            GeneratorFamily::SingularUnbounded { delta, b, k, r, c, eta, .. } => {
                let cc = c.max(inv_e);
                let base = delta + b[0] / cc.powf(*k) + b[2] * (-eta.abs()).exp() + b[3];
                env.l = ScalarFn::AbsAffine { intercept: 1.0 + base, slope: b[1] };
                env.f = ScalarFn::constant(b[3] + b[4] / cc.powf(*r));
                env.delta = ScalarFn::constant(base);
                env.gamma = ScalarFn::constant(b[1]);
                env.c = cc;
            }
            GeneratorFamily::TruncatedQuadratic { delta, gamma, f, c, .. } => {
                env.l = ScalarFn::AbsAffine { intercept: 1.0 + delta.abs(), slope: gamma.abs() };
                env.f = ScalarFn::constant(f.abs());
                env.delta = ScalarFn::constant(delta.abs());
                env.gamma = ScalarFn::constant(gamma.abs());
                env.c = c.max(inv_e);
            }
            GeneratorFamily::EnvelopeDriver { u, l0, l1, f } => {
                if !(*u >= 0.0 && *l0 > 0.0 && *l1 >= 0.0 && *f >= 0.0) {
                    return None;
                }
                env.u = ScalarFn::constant(*u);
                env.l = ScalarFn::AbsAffine { intercept: *l0, slope: *l1 };
                env.f = ScalarFn::constant(*f);
                env.delta = ScalarFn::constant(u * l0);
                env.gamma = ScalarFn::constant(u * l1);
            }
            GeneratorFamily::QuadraticBump { gamma_q, amplitude, .. } => {
                env.l = ScalarFn::AbsAffine { intercept: 1.0 + amplitude.abs(), slope: 0.0 };
                env.f = ScalarFn::constant(0.5 * gamma_q.abs());
                env.delta = ScalarFn::constant(amplitude.abs());
            }
            GeneratorFamily::ExpMinusQuadratic | GeneratorFamily::Custom { .. } => return None,
        }
        Some(env)
    }
}

impl fmt::Debug for GeneratorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneratorFamily({})", self.name())
    }
}

/// Growth-envelope parameters declared alongside a generator.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthEnvelope {
    pub u: ScalarFn,
    pub l: ScalarFn,
    pub f: ScalarFn,
    pub delta: ScalarFn,
    pub gamma: ScalarFn,
    pub kappa: f64,
    pub nu: f64,
    pub b: f64,
    pub c: f64,
}

impl GrowthEnvelope {
    /// Envelope with `u ≡ 1`, `l(y) = 1 + |y|`, everything else zero,
    /// `ν = 1`, `b = 1/e`, `c = 1`.
    pub fn standard() -> Self {
        GrowthEnvelope {
            u: ScalarFn::constant(1.0),
            l: ScalarFn::AbsAffine { intercept: 1.0, slope: 1.0 },
            f: ScalarFn::zero(),
            delta: ScalarFn::zero(),
            gamma: ScalarFn::zero(),
            kappa: 0.0,
            nu: 1.0,
            b: (-1.0f64).exp(),
            c: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) {
            return Err(Error::InvalidParam(format!("envelope needs kappa >= 0, got {}", self.kappa)));
        }
        if !(self.nu > 0.5) {
            return Err(Error::InvalidParam(format!("envelope needs nu > 1/2, got {}", self.nu)));
        }
        let inv_e = (-1.0f64).exp();
        if !(self.b > 0.0 && self.b <= inv_e) {
            return Err(Error::InvalidParam(format!(
                "envelope needs 0 < b <= 1/e (one-sided log growth constant), got b = {}",
                self.b
            )));
        }
        if !(self.c >= self.b) {
            return Err(Error::InvalidParam(format!(
                "envelope needs c >= b, got c = {} < b = {}",
                self.c, self.b
            )));
        }
        Ok(())
    }
}

/// A generator on its domain, with an optional declared envelope.
#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    pub domain: Domain,
    pub family: GeneratorFamily,
    pub envelope: Option<GrowthEnvelope>,
}

impl GeneratorSpec {
    pub fn new(domain: Domain, family: GeneratorFamily) -> Self {
        GeneratorSpec { domain, family, envelope: None }
    }

    pub fn with_envelope(mut self, envelope: GrowthEnvelope) -> Result<Self> {
        envelope.validate()?;
        self.envelope = Some(envelope);
        Ok(self)
    }

    pub fn custom<F>(domain: Domain, name: &str, z_independent: bool, f: F) -> Self
    where
        F: Fn(f64, f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        GeneratorSpec::new(
            domain,
            GeneratorFamily::Custom { name: name.to_string(), f: Arc::new(f), z_independent },
        )
    }

    pub fn affine(a: f64, b0: f64) -> Self {
        GeneratorSpec::new(Domain::RealLine, GeneratorFamily::AffineQuadratic { a, b0, gamma_q: 0.0 })
    }

    pub fn pure_quadratic(gamma_q: f64) -> Self {
        GeneratorSpec::new(Domain::RealLine, GeneratorFamily::AffineQuadratic { a: 0.0, b0: 0.0, gamma_q })
    }

    /// Checked evaluation of `g(t, y, z)`.
    pub fn eval(&self, t: f64, y: f64, z: &[f64]) -> Result<f64> {
        self.domain.require(y)?;
        let v = self.family.eval(t, y, z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { what: format!("{}({t}, {y}, {z:?})", self.family.name()) })
        }
    }

    /// Unchecked evaluation for hot loops; the caller guarantees `y ∈ D`.
    #[inline]
    pub fn eval_raw(&self, t: f64, y: f64, z: &[f64]) -> f64 {
        self.family.eval(t, y, z)
    }

    pub fn is_z_independent(&self) -> bool {
        self.family.is_z_independent()
    }

    /// The generator `(t, y, z) -> -g(t, -y, -z)` on the mirrored domain.
    pub fn mirrored(&self) -> GeneratorSpec {
        let inner = self.family.clone();
        let z_independent = inner.is_z_independent();
        let name = format!("mirrored_{}", inner.name());
        let f = move |t: f64, y: f64, z: &[f64]| {
            let neg: Vec<f64> = z.iter().map(|v| -v).collect();
            -inner.eval(t, -y, &neg)
        };
        GeneratorSpec::new(
            self.domain.mirrored(),
            GeneratorFamily::Custom { name, f: Arc::new(f), z_independent },
        )
    }
}
