//! Sign-change scanning and bisection for the reduced scalar systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariant::{
    f_pow_k, fixed_point_enclosure, g_map, im_prime_system_residual, poly11, poly11_scale, recover_t_from_z,
    InvariantSet, ReducedScalar, SetKind, TRecovery,
};
use crate::model::ModelParams;

/// Bound on the embedded residual a reported solution must meet.
pub const RESIDUAL_BOUND: f64 = 1e-9;

/// Bound on `|g(x) - x|` for `I_m` roots.
pub const FIXED_POINT_BOUND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid_points: usize,
    /// Bisection stops once the bracket is narrower than
    /// `refine_tol · min(1, |x|)`.
    pub refine_tol: f64,
    /// Relative distance under which two roots are merged.
    pub dedup_tol: f64,
    pub max_refine_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { grid_points: 10_000, refine_tol: 1e-12, dedup_tol: 1e-8, max_refine_iters: 200 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 100 {
            return Err(Error::InvalidConfig(format!("grid_points = {}, need at least 100", self.grid_points)));
        }
        for (name, tol) in [("refine_tol", self.refine_tol), ("dedup_tol", self.dedup_tol)] {
            if !(tol > 0.0 && tol < 1e-2) {
                return Err(Error::InvalidConfig(format!("{name} = {tol}, need a value in (0, 1e-2)")));
            }
        }
        if self.max_refine_iters == 0 {
            return Err(Error::InvalidConfig("max_refine_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    Uniform,
    /// Uniform in `ln x`; needs `lo > 0`.
    Geometric,
}

fn grid_nodes(lo: f64, hi: f64, n: usize, grid: Grid) -> Vec<f64> {
    let last = (n - 1) as f64;
    let mut nodes: Vec<f64> = match grid {
        Grid::Uniform => (0..n).map(|i| lo + (hi - lo) * (i as f64 / last)).collect(),
        Grid::Geometric => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|i| (a + (b - a) * (i as f64 / last)).exp()).collect()
        }
    };
    nodes[0] = lo;
    nodes[n - 1] = hi;
    nodes
}

fn eval(f: &impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    let value = f(x);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { x, value })
    }
}

/// Every grid cell on which `f` changes sign strictly. A node where `f` is
/// exactly zero yields the bracket spanned by its neighbours when those
/// have opposite signs.
pub fn scan_sign_changes(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grid: Grid,
    config: &SolverConfig,
) -> Result<Vec<Bracket>> {
    config.validate()?;
    if lo.is_nan() || hi.is_nan() || lo >= hi || (grid == Grid::Geometric && lo <= 0.0) {
        return Err(Error::InvalidConfig(format!("bad scan interval [{lo}, {hi}] for {grid:?} grid")));
    }
    let xs = grid_nodes(lo, hi, config.grid_points, grid);
    let fs = xs.iter().map(|&x| eval(&f, x)).collect::<Result<Vec<_>>>()?;

    let mut brackets = Vec::new();
    for i in 0..xs.len() - 1 {
        if fs[i] * fs[i + 1] < 0.0 {
            brackets.push(Bracket { lo: xs[i], hi: xs[i + 1], f_lo: fs[i], f_hi: fs[i + 1] });
        } else if fs[i + 1] == 0.0 && i + 2 < xs.len() && fs[i] * fs[i + 2] < 0.0 {
            brackets.push(Bracket { lo: xs[i], hi: xs[i + 2], f_lo: fs[i], f_hi: fs[i + 2] });
        }
    }
    Ok(brackets)
}

/// Bisection on a sign-change bracket down to `refine_tol · min(1, |x|)` or
/// until no representable midpoint is left.
pub fn refine(f: impl Fn(f64) -> f64, bracket: &Bracket, config: &SolverConfig) -> Result<f64> {
    let Bracket { mut lo, mut hi, mut f_lo, f_hi } = *bracket;
    if lo.is_nan() || hi.is_nan() || lo >= hi || f_lo * f_hi >= 0.0 {
        return Err(Error::InvalidConfig(format!("[{lo}, {hi}] is not a sign-change bracket")));
    }
    for _ in 0..config.max_refine_iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = eval(&f, mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        if hi - lo <= config.refine_tol * mid.abs().min(1.0) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Convergence { iters: config.max_refine_iters })
}

/// Sorts roots and merges those closer than `dedup_tol · max(1, |x|)`,
/// keeping the one with the smaller `|f|`.
fn dedup_roots(mut roots: Vec<(f64, f64)>, tol: f64) -> Vec<(f64, f64)> {
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(roots.len());
    for (x, fx) in roots {
        match out.last_mut() {
            Some(last) if (x - last.0).abs() <= tol * last.0.abs().max(1.0) => {
                if fx.abs() < last.1.abs() {
                    *last = (x, fx);
                }
            }
            _ => out.push((x, fx)),
        }
    }
    out
}

/// Replaces the root closest to 1 by exactly 1, or inserts it.
fn pin_unit_root(roots: &mut Vec<(f64, f64)>, tol: f64) {
    roots.retain(|(x, _)| (x - 1.0).abs() > tol);
    roots.push((1.0, 0.0));
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
}

/// `[lo, hi]` fixed-point enclosure of `g` widened by 1% on both ends.
pub fn scan_interval_for_im(params: &ModelParams, m: usize) -> (f64, f64) {
    let (lo, hi) = fixed_point_enclosure(params, m);
    (lo * 0.99, hi * 1.01)
}

/// Root a scan found but which does not correspond to a solution with
/// positive fields and a small embedded residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRoot {
    pub set: InvariantSet,
    pub abscissa: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveOutcome {
    /// Sorted ascending in `x`.
    pub solutions: Vec<ReducedScalar>,
    pub rejected: Vec<RejectedRoot>,
}

fn check_inputs(params: &ModelParams, set: InvariantSet, config: &SolverConfig) -> Result<()> {
    params.check_solver_hypothesis()?;
    set.validate(params.q())?;
    config.validate()
}

/// All solutions of the system reduced to `I_m`: roots of `g(x) = x`
/// scanned on a geometric grid, with `y = f(x)^k`.
pub fn solve_im(params: &ModelParams, m: usize, config: &SolverConfig) -> Result<SolveOutcome> {
    let set = InvariantSet::im(m);
    check_inputs(params, set, config)?;
    let phi = |x: f64| g_map(x, params, m) - x;
    let (lo, hi) = scan_interval_for_im(params, m);

    let mut roots = Vec::new();
    for bracket in scan_sign_changes(phi, lo, hi, Grid::Geometric, config)? {
        let x = refine(phi, &bracket, config)?;
        roots.push((x, phi(x)));
    }
    let mut roots = dedup_roots(roots, config.dedup_tol);
    pin_unit_root(&mut roots, config.dedup_tol);

    let mut outcome = SolveOutcome::default();
    for (x, gap) in roots {
        let y = if x == 1.0 { 1.0 } else { f_pow_k(x, params, m) };
        let sol = ReducedScalar::on_im(set, x, y, params)?;
        if gap.abs() > FIXED_POINT_BOUND * x.max(1.0) || sol.residual_full > RESIDUAL_BOUND {
            outcome.rejected.push(RejectedRoot {
                set,
                abscissa: x,
                reason: format!("|g(x) - x| = {:e}, embedded residual {:e}", gap.abs(), sol.residual_full),
            });
        } else {
            outcome.solutions.push(sol);
        }
    }
    Ok(outcome)
}

/// Upper end of the polynomial scan: doubles from
/// `max(2, 2(θ+m-1)/m)` until the polynomial stays negative over a whole
/// doubling.
pub fn poly_scan_limit(params: &ModelParams, m: usize) -> Result<f64> {
    const SAMPLES: usize = 256;
    const MAX_LIMIT: f64 = 1e6;
    let mf = m as f64;
    let mut z = f64::max(2.0, 2.0 * (params.theta() + mf - 1.0) / mf);
    loop {
        let mut negative = true;
        for i in 1..=SAMPLES {
            let s = z * (1.0 + i as f64 / SAMPLES as f64);
            let v = poly11(s, params, m);
            if !v.is_finite() {
                return Err(Error::NonFinite { x: s, value: v });
            }
            negative &= v < 0.0;
        }
        if negative || z >= MAX_LIMIT {
            return Ok(2.0 * z);
        }
        z *= 2.0;
    }
}

/// All solutions on `I'_m`: roots of the elimination polynomial in `z`,
/// each mapped back to `t` and checked against the `(z, t)` system and
/// the full period-two system. Roots without a positive-field preimage end
/// up in [`SolveOutcome::rejected`].
pub fn solve_im_prime(params: &ModelParams, m: usize, config: &SolverConfig) -> Result<SolveOutcome> {
    let set = InvariantSet::im_prime(m);
    check_inputs(params, set, config)?;
    let poly = |z: f64| poly11(z, params, m);
    let hi = poly_scan_limit(params, m)?;

    // The polynomial's sign is reliable down to adjacent floats, and
    // x = z^k amplifies any error in z, so bisect to machine precision.
    let exact = SolverConfig { refine_tol: 0.0, ..*config };
    let mut roots = Vec::new();
    for bracket in scan_sign_changes(poly, 0.0, hi, Grid::Uniform, config)? {
        let z = refine(poly, &bracket, &exact)?;
        roots.push((z, poly(z) / poly11_scale(z, params, m).max(f64::MIN_POSITIVE)));
    }
    let mut roots = dedup_roots(roots, config.dedup_tol);
    pin_unit_root(&mut roots, config.dedup_tol);

    let mut outcome = SolveOutcome::default();
    for (z, _) in roots {
        let reject = |reason: String| RejectedRoot { set, abscissa: z, reason };
        let t = match recover_t_from_z(z, params, m) {
            TRecovery::Valid { t } => t,
            TRecovery::NonPositive { t_pow_k } => {
                outcome.rejected.push(reject(format!("t^k = {t_pow_k:e} is not positive")));
                continue;
            }
            TRecovery::Pole => {
                outcome.rejected.push(reject("t^k has a pole".into()));
                continue;
            }
        };
        let (z, t) = if z == 1.0 { (1.0, 1.0) } else { (z, t) };
        let reduced = im_prime_system_residual(z, t, params, m);
        let sol = ReducedScalar::on_im_prime(set, z, t, params)?;
        if reduced > RESIDUAL_BOUND || sol.residual_full > RESIDUAL_BOUND {
            outcome.rejected.push(reject(format!(
                "(z, t) residual {reduced:e}, embedded residual {:e}",
                sol.residual_full
            )));
        } else {
            outcome.solutions.push(sol);
        }
    }
    outcome.solutions.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(outcome)
}

/// Dispatches on the kind of `set`.
pub fn solve_set(params: &ModelParams, set: InvariantSet, config: &SolverConfig) -> Result<SolveOutcome> {
    match set.kind {
        SetKind::Im => solve_im(params, set.m, config),
        SetKind::ImPrime => solve_im_prime(params, set.m, config),
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::invariant::theta_critical;

    fn params(q: usize, k: usize, theta: f64) -> ModelParams {
        ModelParams::new(q, k, theta).unwrap()
    }

    fn config_with(grid_points: usize) -> SolverConfig {
        SolverConfig { grid_points, ..SolverConfig::default() }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(config_with(99).validate().is_err());
        assert!(SolverConfig { refine_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { dedup_tol: 0.1, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn scan_linear() {
        let b = scan_sign_changes(|x| x - 1.0, 0.5, 2.0, Grid::Uniform, &config_with(100)).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b[0].lo < 1.0 && 1.0 < b[0].hi);
    }

    #[test]
    fn scan_exact_zero_node() {
        // Uniform grid on [0, 2] with 101 nodes hits x = 1 exactly.
        let b = scan_sign_changes(|x| x - 1.0, 0.0, 2.0, Grid::Uniform, &config_with(101)).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b[0].lo < 1.0 && 1.0 < b[0].hi);
        // Tangent zero is not a sign change.
        let b = scan_sign_changes(|x| (x - 1.0).powi(2), 0.0, 2.0, Grid::Uniform, &config_with(101)).unwrap();
        assert!(b.is_empty());
    }

    #[test]
    fn scan_reports_non_finite() {
        let err = scan_sign_changes(|x| if x > 1.5 { f64::NAN } else { x }, 0.0, 2.0, Grid::Uniform, &config_with(100));
        assert!(matches!(err, Err(Error::NonFinite { .. })));
        assert!(scan_sign_changes(|x| x, 0.0, 1.0, Grid::Geometric, &config_with(100)).is_err());
    }

    #[test]
    fn refine_sqrt2() {
        let f = |x: f64| x * x - 2.0;
        let b = Bracket { lo: 1.0, hi: 2.0, f_lo: -1.0, f_hi: 2.0 };
        let r = refine(f, &b, &SolverConfig::default()).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
        let bad = Bracket { lo: 1.0, hi: 2.0, f_lo: 1.0, f_hi: 2.0 };
        assert!(refine(f, &bad, &SolverConfig::default()).is_err());
    }

    #[test]
    fn refine_g_at_unit_root() {
        let p = params(3, 3, 0.1);
        let phi = |x: f64| g_map(x, &p, 1) - x;
        let (lo, hi) = (0.999, 1.001);
        let b = Bracket { lo, hi, f_lo: phi(lo), f_hi: phi(hi) };
        assert!(b.f_lo * b.f_hi < 0.0);
        let r = refine(phi, &b, &SolverConfig::default()).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refine_poly_root() {
        let p = params(7, 8, 0.05);
        let cfg = SolverConfig::default();
        let poly = |z: f64| poly11(z, &p, 1);
        let brackets = scan_sign_changes(poly, 0.0, 4.0, Grid::Uniform, &cfg).unwrap();
        let b = brackets.iter().find(|b| b.hi < 0.99).unwrap();
        let r = refine(poly, b, &cfg).unwrap();
        assert!(poly(r).abs() < 1e-6 * poly11_scale(r, &p, 1));
    }

    #[test]
    fn unique_above_threshold() {
        let p = params(3, 3, 0.5);
        let (lo, hi) = scan_interval_for_im(&p, 1);
        let b = scan_sign_changes(|x| g_map(x, &p, 1) - x, lo, hi, Grid::Geometric, &SolverConfig::default()).unwrap();
        assert_eq!(b.len(), 1);
        let out = solve_im(&p, 1, &SolverConfig::default()).unwrap();
        assert_eq!(out.solutions.len(), 1);
        assert_eq!((out.solutions[0].x, out.solutions[0].y), (1.0, 1.0));
    }

    #[test]
    fn three_solutions_below_threshold() {
        let p = params(3, 3, 0.1);
        let out = solve_im(&p, 1, &SolverConfig::default()).unwrap();
        assert!(out.rejected.is_empty());
        let s = &out.solutions;
        assert_eq!(s.len(), 3);
        assert_eq!((s[1].x, s[1].y), (1.0, 1.0));
        assert!(s[0].x < 1.0 && 1.0 < s[2].x);
        assert_relative_eq!(s[0].x, s[2].y, max_relative = 1e-9);
        assert_relative_eq!(s[2].x, s[0].y, max_relative = 1e-9);
        for sol in s {
            assert!((g_map(sol.x, &p, 1) - sol.x).abs() <= FIXED_POINT_BOUND);
            assert!(sol.residual_full <= RESIDUAL_BOUND);
        }
        let (lo, hi) = scan_interval_for_im(&p, 1);
        assert_relative_eq!(lo, 0.001 * 0.99, max_relative = 1e-12);
        assert_relative_eq!(hi, (2.0f64 / 1.1).powi(3) * 1.01, max_relative = 1e-12);
        assert!(s.iter().all(|sol| lo < sol.x && sol.x < hi));
    }

    #[test]
    fn at_threshold_contains_unit() {
        let p = params(3, 3, theta_critical(3, 3).unwrap());
        let out = solve_im(&p, 1, &SolverConfig::default()).unwrap();
        assert!(out.solutions.iter().any(|s| s.is_symmetric_point()));
    }

    #[test]
    fn im_prime_solutions() {
        let cfg = SolverConfig::default();
        let below = solve_im_prime(&params(5, 7, 0.2), 2, &cfg).unwrap();
        assert!(below.solutions.len() >= 3);
        assert!(below.solutions.iter().any(|s| s.is_symmetric_point()));
        for s in &below.solutions {
            let (z, t) = (s.z.unwrap(), s.t.unwrap());
            assert!(im_prime_system_residual(z, t, &params(5, 7, 0.2), 2) <= RESIDUAL_BOUND);
            assert!(s.residual_full <= RESIDUAL_BOUND);
            assert!((s.x - z.powi(7)).abs() <= 1e-12 * s.x.max(1.0));
        }
        let above = solve_im_prime(&params(5, 7, 0.5), 2, &cfg).unwrap();
        assert_eq!(above.solutions.len(), 1);
        assert!(above.solutions[0].is_symmetric_point());
    }

    #[test]
    fn recovered_t_solves_both_lines() {
        let p = params(7, 8, 0.05);
        let out = solve_im_prime(&p, 1, &SolverConfig::default()).unwrap();
        let non_unit: Vec<_> = out.solutions.iter().filter(|s| !s.is_symmetric_point()).collect();
        assert!(!non_unit.is_empty());
        for s in non_unit {
            let t = s.t.unwrap();
            assert!(t > 0.0);
            assert!(im_prime_system_residual(s.z.unwrap(), t, &p, 1) < 1e-9);
        }
    }

    #[test]
    fn hypothesis_violations() {
        let cfg = SolverConfig::default();
        assert!(matches!(solve_im(&params(5, 3, 0.1), 1, &cfg), Err(Error::Hypothesis(_))));
        assert!(matches!(solve_im(&params(3, 3, 1.0), 1, &cfg), Err(Error::Hypothesis(_))));
        assert!(matches!(solve_im(&params(3, 3, 0.1), 3, &cfg), Err(Error::InvalidSet(_))));
        assert!(matches!(solve_im_prime(&params(4, 5, 0.1), 2, &cfg), Err(Error::InvalidSet(_))));
    }

    #[test]
    fn deterministic() {
        let p = params(4, 5, 0.12);
        let cfg = SolverConfig::default();
        assert_eq!(solve_im(&p, 2, &cfg).unwrap(), solve_im(&p, 2, &cfg).unwrap());
        assert_eq!(solve_im_prime(&p, 1, &cfg).unwrap(), solve_im_prime(&p, 1, &cfg).unwrap());
    }

    #[test]
    fn involution_and_odd_count() {
        let cfg = SolverConfig::default();
        for (q, k, th) in [(3, 3, 0.05), (4, 5, 0.2), (4, 6, 0.1), (5, 8, 0.3)] {
            let p = params(q, k, th);
            for m in 1..q {
                let s = solve_im(&p, m, &cfg).unwrap().solutions;
                assert_eq!(s.len() % 2, 1);
                for a in &s {
                    assert!(
                        s.iter().any(|b| (a.x - b.y).abs() <= 1e-9 * a.x.max(1.0) && (a.y - b.x).abs() <= 1e-9 * a.y.max(1.0)),
                        "no partner for {a:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn bifurcation_located_at_threshold() {
        let cfg = SolverConfig::default();
        for (q, k) in [(3, 3), (3, 4), (4, 5), (4, 7)] {
            let th_cr = theta_critical(q, k).unwrap();
            let count = |th: f64| solve_im(&params(q, k, th), 1, &cfg).unwrap().solutions.len();
            let (mut lo, mut hi) = (0.02, 0.98);
            assert!(count(lo) >= 3 && count(hi) == 1);
            while hi - lo > 1e-4 {
                let mid = 0.5 * (lo + hi);
                if count(mid) >= 3 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!(lo <= th_cr + 1e-4 && th_cr - 1e-4 <= hi, "q={q} k={k}: [{lo}, {hi}] vs {th_cr}");
        }
    }
}
