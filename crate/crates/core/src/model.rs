//! Model constants, the tree recursion map `F` and the finite-volume weights
//! of the q-state Potts model on a Cayley tree.
//!
//! Boundary fields live in log space and carry `q - 1` components: the field
//! of the last spin state is pinned to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::FiniteTree;

/// `(J, β)` pair a `θ` was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub j: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    q: usize,
    k: usize,
    theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coupling: Option<Coupling>,
}

impl ModelParams {
    pub fn new(q: usize, k: usize, theta: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParams(format!("q = {q}, need at least 2 states")));
        }
        if k < 1 {
            return Err(Error::InvalidParams("tree order k must be at least 1".into()));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParams(format!("theta = {theta}, need a finite positive value")));
        }
        Ok(Self { q, k, theta, coupling: None })
    }

    /// `θ = exp(J·β)`.
    pub fn from_coupling(q: usize, k: usize, j: f64, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) || !j.is_finite() {
            return Err(Error::InvalidParams(format!("J = {j}, beta = {beta}")));
        }
        Self::new(q, k, (j * beta).exp())?.with_coupling(j, beta)
    }

    /// Attaches the `(J, β)` pair `θ` is supposed to come from.
    pub fn with_coupling(mut self, j: f64, beta: f64) -> Result<Self> {
        let expected = (j * beta).exp();
        if (self.theta - expected).abs() > 1e-12 * self.theta {
            return Err(Error::InvalidParams(format!(
                "theta = {} does not match exp(J*beta) = {expected}",
                self.theta
            )));
        }
        self.coupling = Some(Coupling { j, beta });
        Ok(self)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn coupling(&self) -> Option<Coupling> {
        self.coupling
    }

    /// Number of independent field components.
    pub fn dim(&self) -> usize {
        self.q - 1
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.q, self.k, theta)
    }

    /// Solvers cover `k >= 3`, `3 <= q < k + 1` and `0 < θ < 1` only.
    pub fn check_solver_hypothesis(&self) -> Result<()> {
        let Self { q, k, theta, .. } = *self;
        if k < 3 {
            return Err(Error::Hypothesis(format!("k = {k}, need k >= 3")));
        }
        if q < 3 || q > k {
            return Err(Error::Hypothesis(format!("q = {q}, need 3 <= q < k + 1 = {}", k + 1)));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Hypothesis(format!("theta = {theta}, need 0 < theta < 1")));
        }
        Ok(())
    }
}

/// Log-space boundary field `(h_1, …, h_{q-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldVector(Vec<f64>);

impl FieldVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteField { index, value });
        }
        Ok(Self(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Field with components `ln x_i`.
    pub fn from_exp(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|v| v.ln()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Image under `π`, i.e. `(h_{π(1)}, …, h_{π(q-1)})` with 0-based `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self(perm.iter().map(|&i| self.0[i]).collect())
    }

    fn check_dim(&self, params: &ModelParams) -> Result<()> {
        if self.len() != params.dim() {
            return Err(Error::Shape { expected: params.dim(), got: self.len() });
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for FieldVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Boundary field depending only on the parity of the distance to the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodTwoField {
    pub even: FieldVector,
    pub odd: FieldVector,
}

impl PeriodTwoField {
    pub fn new(even: FieldVector, odd: FieldVector) -> Result<Self> {
        if even.len() != odd.len() {
            return Err(Error::Shape { expected: even.len(), got: odd.len() });
        }
        Ok(Self { even, odd })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { even: FieldVector::zeros(dim), odd: FieldVector::zeros(dim) }
    }

    /// Same field with the roles of even and odd generations exchanged.
    pub fn swapped(&self) -> Self {
        Self { even: self.odd.clone(), odd: self.even.clone() }
    }

    /// Field on generation `d >= 1`.
    pub fn at_depth(&self, d: usize) -> &FieldVector {
        if d.is_multiple_of(2) {
            &self.even
        } else {
            &self.odd
        }
    }

    /// Field the recursion assigns to the root, which has `k + 1` successors
    /// instead of `k`: `(k+1)·F(h_odd)`.
    pub fn root_field(&self, params: &ModelParams) -> Result<FieldVector> {
        let f = compat_map(&self.odd, params)?;
        let scale = (params.k() + 1) as f64;
        FieldVector::new(f.0.iter().map(|v| scale * v).collect())
    }

    /// Max-norm of [`period2_residual`].
    pub fn residual_norm(&self, params: &ModelParams) -> Result<f64> {
        let (r_even, r_odd) = period2_residual(self, params)?;
        Ok(r_even.max_abs().max(r_odd.max_abs()))
    }
}

/// Tree recursion map `F(h, θ)`:
/// `F_i = ln(((θ-1)e^{h_i} + Σ_j e^{h_j} + 1) / (θ + Σ_j e^{h_j}))`.
///
/// Exponentials are taken relative to `max(0, max_j h_j)`, so fields of a
/// few hundred in magnitude do not overflow.
pub fn compat_map(h: &FieldVector, params: &ModelParams) -> Result<FieldVector> {
    h.check_dim(params)?;
    let theta = params.theta();
    let shift = h.0.iter().copied().fold(0.0, f64::max);
    let e: Vec<f64> = h.0.iter().map(|v| (v - shift).exp()).collect();
    let one = (-shift).exp();
    let total: f64 = e.iter().sum();
    let ln_den = (theta * one + total).ln();

    // Sums over j != i without subtracting e_i from the total.
    let n = e.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + e[i];
    }
    let mut out = vec![0.0; n];
    let mut suffix = 0.0;
    for i in (0..n).rev() {
        let others = prefix[i] + suffix;
        out[i] = (theta * e[i] + others + one).ln() - ln_den;
        suffix += e[i];
    }
    FieldVector::new(out)
}

/// The map `W(h, l) = (k·F(l), k·F(h))` whose fixed points are the
/// period-two solutions.
pub fn w_map(field: &PeriodTwoField, params: &ModelParams) -> Result<PeriodTwoField> {
    let k = params.k() as f64;
    let scale = |v: FieldVector| FieldVector(v.0.into_iter().map(|x| k * x).collect());
    Ok(PeriodTwoField {
        even: scale(compat_map(&field.odd, params)?),
        odd: scale(compat_map(&field.even, params)?),
    })
}

/// `(h_even - k·F(h_odd), h_odd - k·F(h_even))`.
pub fn period2_residual(field: &PeriodTwoField, params: &ModelParams) -> Result<(FieldVector, FieldVector)> {
    let image = w_map(field, params)?;
    let diff = |a: &FieldVector, b: &FieldVector| FieldVector(a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect());
    Ok((diff(&field.even, &image.even), diff(&field.odd, &image.odd)))
}

fn check_spin(vertex: usize, spin: usize, q: usize) -> Result<()> {
    if spin == 0 || spin > q {
        return Err(Error::SpinOutOfRange { vertex, spin, q });
    }
    Ok(())
}

/// `H(σ) = -J · #{⟨x,y⟩ : σ(x) = σ(y)}` over the given edges. Spins are
/// `1..=q`.
pub fn hamiltonian(config: &[usize], edges: &[(usize, usize)], j_coupling: f64, q: usize) -> Result<f64> {
    let mut aligned = 0usize;
    for &(a, b) in edges {
        let (sa, sb) = (config[a], config[b]);
        check_spin(a, sa, q)?;
        check_spin(b, sb, q)?;
        if sa == sb {
            aligned += 1;
        }
    }
    Ok(-j_coupling * aligned as f64)
}

/// Precomputed evaluator for the unnormalized finite-volume weight
/// `exp(-βH_n(σ) + Σ_{x∈W_n} h_{σ(x),x}) = θ^{#aligned edges} · exp(Σ h)`.
///
/// For `n >= 1` the boundary sphere `W_n` carries the field of its parity.
/// For `n = 0` the single root vertex carries [`PeriodTwoField::root_field`].
#[derive(Debug, Clone)]
pub struct WeightEvaluator<'a> {
    tree: &'a FiniteTree,
    q: usize,
    ln_theta: f64,
    /// Boundary field indexed by spin, with `boundary[q - 1] = 0`.
    boundary: Vec<f64>,
}

impl<'a> WeightEvaluator<'a> {
    pub fn new(tree: &'a FiniteTree, params: &ModelParams, field: &PeriodTwoField) -> Result<Self> {
        field.even.check_dim(params)?;
        field.odd.check_dim(params)?;
        let h = match tree.depth() {
            0 => field.root_field(params)?,
            d => field.at_depth(d).clone(),
        };
        let mut boundary = h.into_inner();
        boundary.push(0.0);
        Ok(Self { tree, q: params.q(), ln_theta: params.theta().ln(), boundary })
    }

    pub fn tree(&self) -> &FiniteTree {
        self.tree
    }

    /// Validates `config` (one spin in `1..=q` per vertex) and returns the
    /// log weight.
    pub fn log_weight(&self, config: &[usize]) -> Result<f64> {
        if config.len() != self.tree.num_vertices() {
            return Err(Error::Shape { expected: self.tree.num_vertices(), got: config.len() });
        }
        for (v, &s) in config.iter().enumerate() {
            check_spin(v, s, self.q)?;
        }
        Ok(self.log_weight_unchecked(config))
    }

    pub(crate) fn log_weight_unchecked(&self, config: &[usize]) -> f64 {
        let aligned = self.tree.edges().iter().filter(|&&(a, b)| config[a] == config[b]).count();
        let field: f64 = config[self.tree.boundary()].iter().map(|&s| self.boundary[s - 1]).sum();
        self.ln_theta * aligned as f64 + field
    }
}

pub fn finite_volume_log_weight(
    tree: &FiniteTree,
    config: &[usize],
    params: &ModelParams,
    field: &PeriodTwoField,
) -> Result<f64> {
    WeightEvaluator::new(tree, params, field)?.log_weight(config)
}

pub fn finite_volume_weight(
    tree: &FiniteTree,
    config: &[usize],
    params: &ModelParams,
    field: &PeriodTwoField,
) -> Result<f64> {
    finite_volume_log_weight(tree, config, params, field).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn params(q: usize, k: usize, theta: f64) -> ModelParams {
        ModelParams::new(q, k, theta).unwrap()
    }

    fn fv(v: &[f64]) -> FieldVector {
        FieldVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn param_validation() {
        assert!(ModelParams::new(1, 3, 0.5).is_err());
        assert!(ModelParams::new(3, 0, 0.5).is_err());
        assert!(ModelParams::new(3, 3, 0.0).is_err());
        assert!(ModelParams::new(3, 3, f64::NAN).is_err());
        assert!(ModelParams::new(3, 3, 1.5).is_ok());
    }

    #[test]
    fn coupling_provenance() {
        let p = ModelParams::from_coupling(3, 3, -1.0, 2.0).unwrap();
        assert_relative_eq!(p.theta(), (-2.0f64).exp());
        assert_eq!(p.coupling(), Some(Coupling { j: -1.0, beta: 2.0 }));
        assert!(params(3, 3, 0.5).with_coupling(-1.0, 2.0).is_err());
    }

    #[test]
    fn solver_hypothesis_gate() {
        assert!(params(3, 3, 0.1).check_solver_hypothesis().is_ok());
        assert!(params(5, 3, 0.1).check_solver_hypothesis().is_err());
        assert!(params(3, 2, 0.1).check_solver_hypothesis().is_err());
        assert!(params(2, 3, 0.1).check_solver_hypothesis().is_err());
        assert!(params(3, 3, 1.0).check_solver_hypothesis().is_err());
    }

    #[test]
    fn compat_map_zero_field() {
        let out = compat_map(&fv(&[0.0, 0.0]), &params(3, 3, 0.5)).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn compat_map_hand_value() {
        // x = (2, 1): F_1 = ln((0.5·2 + 1 + 1)/(0.5 + 3)), F_2 = ln((0.5 + 2 + 1)/3.5).
        let out = compat_map(&fv(&[2f64.ln(), 0.0]), &params(3, 3, 0.5)).unwrap();
        assert_relative_eq!(out[0], (3.0f64 / 3.5).ln(), epsilon = 1e-15);
        assert_relative_eq!(out[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn compat_map_theta_one_vanishes() {
        let out = compat_map(&fv(&[0.3, -2.0, 5.0]), &params(4, 3, 1.0)).unwrap();
        for v in out.as_slice() {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn compat_map_large_fields_stay_finite() {
        let out = compat_map(&fv(&[700.0, -700.0]), &params(3, 3, 0.2)).unwrap();
        // e^{h_1} dominates every sum: F_1 -> ln θ, F_2 -> 0.
        assert_relative_eq!(out[0], 0.2f64.ln(), epsilon = 1e-12);
        assert!(out[1].abs() < 1e-12);
    }

    #[test]
    fn compat_map_errors() {
        let p = params(3, 3, 0.5);
        assert!(matches!(compat_map(&fv(&[0.0]), &p), Err(Error::Shape { expected: 2, got: 1 })));
        assert!(matches!(FieldVector::new(vec![0.0, f64::INFINITY]), Err(Error::NonFiniteField { index: 1, .. })));
    }

    #[test]
    fn residual_of_zero_field() {
        let p = params(4, 3, 0.3);
        assert_eq!(PeriodTwoField::zeros(3).residual_norm(&p).unwrap(), 0.0);
    }

    #[test]
    fn residual_swaps_with_field() {
        let p = params(3, 4, 0.3);
        let field = PeriodTwoField::new(fv(&[0.4, -0.1]), fv(&[1.2, 0.7])).unwrap();
        let (a, b) = period2_residual(&field, &p).unwrap();
        let (c, d) = period2_residual(&field.swapped(), &p).unwrap();
        assert_eq!(a, d);
        assert_eq!(b, c);
    }

    #[test]
    fn translation_invariant_solution_embeds() {
        // Symmetric TI solution h = (h*, h*): find h* = k·F(h*) by bisection on
        // the scalar equation with all components equal (x = f^k(x) on I_{q-1}).
        let p = params(3, 3, 0.1);
        let phi = |h: f64| h - 3.0 * compat_map(&fv(&[h, h]), &p).unwrap()[0];
        let (mut lo, mut hi) = (-20.0, 20.0);
        assert!(phi(lo) * phi(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(lo) * phi(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let h = fv(&[lo, lo]);
        let field = PeriodTwoField::new(h.clone(), h).unwrap();
        assert!(field.residual_norm(&p).unwrap() < 1e-12);
    }

    #[test]
    fn hamiltonian_cases() {
        let edges = [(0, 1), (0, 2), (1, 3)];
        assert_eq!(hamiltonian(&[1, 1, 1, 1], &edges, 1.0, 3).unwrap(), -3.0);
        assert_eq!(hamiltonian(&[1, 2, 3, 1], &edges, 1.0, 3).unwrap(), 0.0);
        assert_eq!(hamiltonian(&[1, 1], &[(0, 1)], -2.0, 3).unwrap(), 2.0);
        assert!(matches!(
            hamiltonian(&[1, 4], &[(0, 1)], 1.0, 3),
            Err(Error::SpinOutOfRange { vertex: 1, spin: 4, q: 3 })
        ));
        assert!(hamiltonian(&[0, 1], &[(0, 1)], 1.0, 3).is_err());
    }

    #[test]
    fn weight_single_root() {
        let p = params(3, 3, 0.5);
        let tree = FiniteTree::build(3, 0).unwrap();
        let field = PeriodTwoField::new(fv(&[0.3, -0.2]), fv(&[0.1, 0.5])).unwrap();
        let root = field.root_field(&p).unwrap();
        for s in 1..=3 {
            let w = finite_volume_weight(&tree, &[s], &p, &field).unwrap();
            let h = if s < 3 { root[s - 1] } else { 0.0 };
            assert_relative_eq!(w, h.exp(), max_relative = 1e-15);
        }
    }

    #[test]
    fn weight_zero_field_counts_aligned_edges() {
        let p = params(3, 3, 0.5);
        let tree = FiniteTree::build(3, 1).unwrap();
        let zero = PeriodTwoField::zeros(2);
        let w = finite_volume_weight(&tree, &[1; 5], &p, &zero).unwrap();
        assert_relative_eq!(w, 0.5f64.powi(4), max_relative = 1e-15);
        let w = finite_volume_weight(&tree, &[1, 1, 2, 3, 1], &p, &zero).unwrap();
        assert_relative_eq!(w, 0.5f64.powi(2), max_relative = 1e-15);
    }

    #[test]
    fn weight_boundary_uses_parity() {
        let p = params(3, 3, 0.5);
        let tree = FiniteTree::build(3, 2).unwrap();
        let field = PeriodTwoField::new(fv(&[0.3, -0.2]), fv(&[0.1, 0.5])).unwrap();
        let mut config = vec![3; tree.num_vertices()];
        config[tree.boundary().start] = 1;
        // One leaf switched to spin 1: 15 of 16 edges stay aligned, the leaf picks up h_1 = 0.3.
        let lw = finite_volume_log_weight(&tree, &config, &p, &field).unwrap();
        assert_relative_eq!(lw, 15.0 * 0.5f64.ln() + 0.3, max_relative = 1e-14);
        assert!(finite_volume_weight(&tree, &config[1..], &p, &field).is_err());
    }
}
