//! Reductions of the period-two system to the invariant sets `I_m` and
//! `I'_m`.
//!
//! On `I_m` the field pair is `u = (x,…,x,1,…,1)`, `v = (y,…,y,1,…,1)` with
//! `m` leading entries, and the system collapses to `x = f(y)^k`,
//! `y = f(x)^k` with the rational map [`f_rational`]. On `I'_m` the pair is
//! `u = (x^m, 1, …, 1, y^m)`, `v = (y^m, 1, …, 1, x^m)`; with `x = z^k`,
//! `y = t^k` eliminating `t` leaves the polynomial [`poly11`] in `z`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::model::{FieldVector, ModelParams, PeriodTwoField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SetKind {
    #[serde(rename = "im")]
    Im,
    #[serde(rename = "imprime")]
    ImPrime,
}

impl SetKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SetKind::Im => "im",
            SetKind::ImPrime => "imprime",
        }
    }
}

impl FromStr for SetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "im" => Ok(SetKind::Im),
            "imprime" => Ok(SetKind::ImPrime),
            other => Err(Error::InvalidSet(format!("unknown set kind {other:?}"))),
        }
    }
}

/// Identifies `I_m` or `I'_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InvariantSet {
    pub kind: SetKind,
    pub m: usize,
}

impl InvariantSet {
    pub fn im(m: usize) -> Self {
        Self { kind: SetKind::Im, m }
    }

    pub fn im_prime(m: usize) -> Self {
        Self { kind: SetKind::ImPrime, m }
    }

    /// `1 <= m <= q-1` for `I_m`, `1 <= m` and `2m <= q-1` for `I'_m`.
    pub fn validate(&self, q: usize) -> Result<()> {
        let ok = match self.kind {
            SetKind::Im => self.m >= 1 && self.m < q,
            SetKind::ImPrime => self.m >= 1 && 2 * self.m < q,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSet(format!("{self} is not defined for q = {q}")))
        }
    }

    /// Every admissible set for `q`, `I_m` first.
    pub fn all_for(q: usize) -> Vec<Self> {
        let im = (1..q).map(Self::im);
        let im_prime = (1..).take_while(|m| 2 * m < q).map(Self::im_prime);
        im.chain(im_prime).collect()
    }

    /// Linear-space pattern `(u, v)` for scalars `x`, `y`.
    pub fn pattern(&self, q: usize, x: f64, y: f64) -> (Vec<f64>, Vec<f64>) {
        self.layout(q, x, y, 1.0)
    }

    /// Log-space field with components `ln x`, `ln y` laid out as in
    /// [`Self::pattern`].
    pub fn embed_log(&self, q: usize, ln_x: f64, ln_y: f64) -> Result<PeriodTwoField> {
        let (even, odd) = self.layout(q, ln_x, ln_y, 0.0);
        PeriodTwoField::new(FieldVector::new(even)?, FieldVector::new(odd)?)
    }

    fn layout(&self, q: usize, x: f64, y: f64, filler: f64) -> (Vec<f64>, Vec<f64>) {
        let dim = q - 1;
        let m = self.m;
        let mut u = vec![filler; dim];
        let mut v = vec![filler; dim];
        u[..m].fill(x);
        v[..m].fill(y);
        if self.kind == SetKind::ImPrime {
            u[dim - m..].fill(y);
            v[dim - m..].fill(x);
        }
        (u, v)
    }
}

impl fmt::Display for InvariantSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.as_str(), self.m)
    }
}

impl FromStr for InvariantSet {
    type Err = Error;

    /// Parses `im:<m>` or `imprime:<m>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, m) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidSet(format!("{s:?}, expected im:<m> or imprime:<m>")))?;
        let m = m.parse().map_err(|_| Error::InvalidSet(format!("{s:?}: bad index {m:?}")))?;
        Ok(Self { kind: kind.parse()?, m })
    }
}

/// A root of the reduced scalar system together with the residual of its
/// embedding into the full period-two system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedScalar {
    pub set: InvariantSet,
    pub x: f64,
    pub y: f64,
    /// `x = z^k`, only on `I'_m`.
    pub z: Option<f64>,
    /// `y = t^k`, only on `I'_m`.
    pub t: Option<f64>,
    pub residual_full: f64,
}

impl ReducedScalar {
    pub fn on_im(set: InvariantSet, x: f64, y: f64, params: &ModelParams) -> Result<Self> {
        let mut sol = Self { set, x, y, z: None, t: None, residual_full: f64::NAN };
        embed_full(&mut sol, params)?;
        Ok(sol)
    }

    pub fn on_im_prime(set: InvariantSet, z: f64, t: f64, params: &ModelParams) -> Result<Self> {
        let k = params.k() as i32;
        let mut sol = Self { set, x: z.powi(k), y: t.powi(k), z: Some(z), t: Some(t), residual_full: f64::NAN };
        embed_full(&mut sol, params)?;
        Ok(sol)
    }

    pub fn is_symmetric_point(&self) -> bool {
        self.x == 1.0 && self.y == 1.0
    }

    /// Full log-space field without recomputing the residual.
    pub fn field(&self, params: &ModelParams) -> Result<PeriodTwoField> {
        let k = params.k() as f64;
        let (ln_x, ln_y) = match (self.z, self.t) {
            (Some(z), Some(t)) => (k * z.ln(), k * t.ln()),
            _ => (self.x.ln(), self.y.ln()),
        };
        self.set.embed_log(params.q(), ln_x, ln_y)
    }
}

/// Builds the full period-two field of `sol` and stores its residual in
/// `sol.residual_full`.
pub fn embed_full(sol: &mut ReducedScalar, params: &ModelParams) -> Result<PeriodTwoField> {
    sol.set.validate(params.q())?;
    if !(sol.x > 0.0 && sol.y > 0.0) {
        return Err(Error::InvalidParams(format!("non-positive scalars x = {}, y = {}", sol.x, sol.y)));
    }
    let field = sol.field(params)?;
    sol.residual_full = field.residual_norm(params)?;
    Ok(field)
}

fn debug_check_m(params: &ModelParams, m: usize) {
    debug_assert!(m >= 1 && m < params.q(), "m = {m} outside 1..q for q = {}", params.q());
}

/// `f(x) = ((θ+m-1)x + q-m) / (mx + θ+q-m-1)`.
pub fn f_rational(x: f64, params: &ModelParams, m: usize) -> f64 {
    debug_check_m(params, m);
    let (q, th, m) = (params.q() as f64, params.theta(), m as f64);
    let den = m * x + th + q - m - 1.0;
    debug_assert!(den > 0.0);
    ((th + m - 1.0) * x + q - m) / den
}

/// `f(x)^k`, the k-th power (not the k-fold iterate).
pub fn f_pow_k(x: f64, params: &ModelParams, m: usize) -> f64 {
    (params.k() as f64 * f_rational(x, params, m).ln()).exp()
}

/// `g(x) = f^k(f^k(x))`; its fixed points are the `x` components on `I_m`.
pub fn g_map(x: f64, params: &ModelParams, m: usize) -> f64 {
    f_pow_k(f_pow_k(x, params, m), params, m)
}

/// `f'(x) = (θ-1)(θ+q-1) / (mx + θ+q-m-1)^2`.
pub fn f_prime(x: f64, params: &ModelParams, m: usize) -> f64 {
    debug_check_m(params, m);
    let (q, th, mf) = (params.q() as f64, params.theta(), m as f64);
    let den = mf * x + th + q - mf - 1.0;
    (th - 1.0) * (th + q - 1.0) / (den * den)
}

/// `g'(1) = (k(θ-1)/(θ+q-1))^2`, independent of `m`.
pub fn g_prime_at_1(params: &ModelParams) -> f64 {
    let (q, k, th) = (params.q() as f64, params.k() as f64, params.theta());
    let r = k * (th - 1.0) / (th + q - 1.0);
    r * r
}

/// `θ_cr = (k-q+1)/(k+1)`, the value where `g'(1) = 1`.
pub fn theta_critical(q: usize, k: usize) -> Result<f64> {
    if k < 3 || q < 3 || q > k {
        return Err(Error::Hypothesis(format!("theta_cr needs k >= 3 and 3 <= q < k + 1, got q = {q}, k = {k}")));
    }
    Ok((k + 1 - q) as f64 / (k + 1) as f64)
}

/// Interval `[f(∞)^k, f(0)^k]` that contains every fixed point of `g`.
pub fn fixed_point_enclosure(params: &ModelParams, m: usize) -> (f64, f64) {
    let (q, k, th, mf) = (params.q() as f64, params.k() as i32, params.theta(), m as f64);
    let lo = ((th + mf - 1.0) / mf).powi(k);
    let hi = ((q - mf) / (th + q - mf - 1.0)).powi(k);
    (lo, hi)
}

struct Poly11Parts {
    a: DoubleDouble,
    b: DoubleDouble,
    n: DoubleDouble,
    d: DoubleDouble,
}

fn poly11_parts(z: f64, params: &ModelParams, m: usize) -> Poly11Parts {
    let k = params.k() as u32;
    let (q, mf) = (params.q() as f64, m as f64);
    let th = DoubleDouble::from(params.theta());
    let z = DoubleDouble::from(z);
    let zk = z.powi(k);
    let zk1 = zk * z;
    // A = (θ+2m-1)z^k - m z^{k+1} + m z + q - 2m
    let a = (th + (2.0 * mf - 1.0)) * zk - zk1 * mf + z * mf + (q - 2.0 * mf);
    // B = m z^k + q - m - 1 + θ
    let b = zk * mf + th + (q - mf - 1.0);
    // N = m z^{k+1} - m z^k + (θ+q-2m-1) z - q + 2m, so that t^k = N / D
    let n = zk1 * mf - zk * mf + (th + (q - 2.0 * mf - 1.0)) * z - (q - 2.0 * mf);
    // D = θ + m - 1 - m z
    let d = th + (mf - 1.0) - z * mf;
    Poly11Parts { a, b, n, d }
}

/// `P(z) = A^k·D - B^k·N` whose roots give the `z` component on `I'_m`,
/// evaluated in double-double arithmetic.
pub fn poly11(z: f64, params: &ModelParams, m: usize) -> f64 {
    let k = params.k() as u32;
    let p = poly11_parts(z, params, m);
    (p.a.powi(k) * p.d - p.b.powi(k) * p.n).to_f64()
}

/// `|A^k·D| + |B^k·N|`, the magnitude the two cancelling terms of [`poly11`]
/// carry at `z`.
pub fn poly11_scale(z: f64, params: &ModelParams, m: usize) -> f64 {
    let k = params.k() as u32;
    let p = poly11_parts(z, params, m);
    (p.a.powi(k) * p.d).abs().to_f64() + (p.b.powi(k) * p.n).abs().to_f64()
}

/// `(k²-1)s² - 2qs - q²` with `s = θ-1`; positive exactly when `θ < θ_cr`.
///
/// The true slope of [`poly11`] at `z = 1` is this value times the positive
/// factor `(θ+q-1)^{k-1}`, see [`poly11_slope_at_1`].
pub fn poly11_dprime_at_1(params: &ModelParams) -> f64 {
    let (q, k, s) = (params.q() as f64, params.k() as f64, params.theta() - 1.0);
    (k * k - 1.0) * s * s - 2.0 * q * s - q * q
}

/// Exact `P'(1) = (θ+q-1)^{k-1} · ((k²-1)s² - 2qs - q²)`.
pub fn poly11_slope_at_1(params: &ModelParams) -> f64 {
    let c = params.theta() + params.q() as f64 - 1.0;
    c.powi(params.k() as i32 - 1) * poly11_dprime_at_1(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TRecovery {
    Valid { t: f64 },
    /// `t^k <= 0`: no positive field corresponds to this `z`.
    NonPositive { t_pow_k: f64 },
    /// `z = (θ+m-1)/m`, where `t^k` has a pole.
    Pole,
}

impl TRecovery {
    pub fn valid(self) -> Option<f64> {
        match self {
            TRecovery::Valid { t } => Some(t),
            _ => None,
        }
    }
}

/// `t = (N/D)^{1/k}` from the first line of the `(z, t)` system.
pub fn recover_t_from_z(z: f64, params: &ModelParams, m: usize) -> TRecovery {
    let p = poly11_parts(z, params, m);
    let d = p.d.to_f64();
    if d == 0.0 {
        return TRecovery::Pole;
    }
    let t_pow_k = p.n.to_f64() / d;
    if !t_pow_k.is_finite() || t_pow_k <= 0.0 {
        return TRecovery::NonPositive { t_pow_k };
    }
    TRecovery::Valid { t: t_pow_k.powf(1.0 / params.k() as f64) }
}

/// Max-norm residual of the `(z, t)` system on `I'_m`:
/// `z = ((θ+m-1)t^k + m z^k + q-2m) / (θ + m z^k + m t^k + q-2m-1)` and the
/// same with `z` and `t` exchanged.
pub fn im_prime_system_residual(z: f64, t: f64, params: &ModelParams, m: usize) -> f64 {
    let k = params.k() as i32;
    let (q, th, mf) = (params.q() as f64, params.theta(), m as f64);
    let (zk, tk) = (z.powi(k), t.powi(k));
    let den = th + mf * zk + mf * tk + q - 2.0 * mf - 1.0;
    let rz = ((th + mf - 1.0) * tk + mf * zk + q - 2.0 * mf) / den;
    let rt = ((th + mf - 1.0) * zk + mf * tk + q - 2.0 * mf) / den;
    (z - rz).abs().max((t - rt).abs())
}
