//! Classification of solutions into measures, their permutation orbits and
//! the lower-bound counts for the number of period-two measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariant::{embed_full, InvariantSet, ReducedScalar};
use crate::model::{FieldVector, ModelParams, PeriodTwoField};
use crate::solver::RESIDUAL_BOUND;

/// Relative tolerance for deciding `x = y` (or `z = t`).
pub const TI_TOL: f64 = 1e-10;

/// Tolerance under which two field components count as equal when
/// enumerating orbits.
pub const ORBIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "TI")]
    TranslationInvariant,
    #[serde(rename = "P2")]
    PeriodTwo,
}

impl Classification {
    pub fn short(&self) -> &'static str {
        match self {
            Classification::TranslationInvariant => "TI",
            Classification::PeriodTwo => "P2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDescriptor {
    pub classification: Classification,
    pub field: PeriodTwoField,
    pub origin_set: InvariantSet,
    /// 0-based `π` with `field_i = source_field_{π(i)}`.
    pub origin_permutation: Vec<usize>,
    pub source_solution: ReducedScalar,
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Turns a solution into a measure descriptor. The measure is translation
/// invariant exactly when the even and odd fields coincide, i.e. `x = y`.
pub fn classify(sol: &ReducedScalar, params: &ModelParams) -> Result<MeasureDescriptor> {
    let mut source = sol.clone();
    let field = embed_full(&mut source, params)?;
    if source.residual_full.is_nan() || source.residual_full > RESIDUAL_BOUND {
        return Err(Error::ResidualTooLarge { residual: source.residual_full, bound: RESIDUAL_BOUND });
    }
    let symmetric = match (source.z, source.t) {
        (Some(z), Some(t)) => close(z, t, TI_TOL),
        _ => close(source.x, source.y, TI_TOL),
    };
    let classification =
        if symmetric { Classification::TranslationInvariant } else { Classification::PeriodTwo };
    Ok(MeasureDescriptor {
        classification,
        field,
        origin_set: source.set,
        origin_permutation: (0..params.dim()).collect(),
        source_solution: source,
    })
}

/// Labels columns with class ids so that columns within `tol` share an id.
fn column_classes(columns: &[(f64, f64)], tol: f64) -> Vec<usize> {
    let mut reps: Vec<(f64, f64)> = Vec::new();
    columns
        .iter()
        .map(|&(a, b)| match reps.iter().position(|&(ra, rb)| (ra - a).abs() <= tol && (rb - b).abs() <= tol) {
            Some(id) => id,
            None => {
                reps.push((a, b));
                reps.len() - 1
            }
        })
        .collect()
}

/// Lexicographic successor; wraps to the sorted arrangement and returns
/// `false` after the last one.
fn next_permutation(ids: &mut [usize]) -> bool {
    let n = ids.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && ids[i - 1] >= ids[i] {
        i -= 1;
    }
    if i == 0 {
        ids.reverse();
        return false;
    }
    let mut j = n - 1;
    while ids[j] <= ids[i - 1] {
        j -= 1;
    }
    ids.swap(i - 1, j);
    ids[i..].reverse();
    true
}

/// Every distinct rearrangement of `classes`, starting with `classes`
/// itself, each given as a permutation `π` with `arrangement_i = classes_{π(i)}`.
fn distinct_arrangements(classes: &[usize]) -> Vec<Vec<usize>> {
    let mut current = classes.to_vec();
    let mut out = Vec::new();
    loop {
        let mut used = vec![false; classes.len()];
        let perm = current
            .iter()
            .map(|&c| {
                let j = (0..classes.len()).find(|&j| !used[j] && classes[j] == c).expect("same multiset");
                used[j] = true;
                j
            })
            .collect();
        out.push(perm);
        next_permutation(&mut current);
        if current == classes {
            return out;
        }
    }
}

fn permute_field(field: &PeriodTwoField, perm: &[usize]) -> PeriodTwoField {
    PeriodTwoField { even: field.even.permuted(perm), odd: field.odd.permuted(perm) }
}

/// All distinct images of `desc` under coordinate permutations of
/// `{1, …, q-1}` applied simultaneously to the even and odd fields.
pub fn orbit_expand(desc: &MeasureDescriptor, q: usize) -> Vec<MeasureDescriptor> {
    debug_assert_eq!(desc.field.even.len(), q - 1);
    let columns: Vec<(f64, f64)> =
        desc.field.even.as_slice().iter().copied().zip(desc.field.odd.as_slice().iter().copied()).collect();
    let classes = column_classes(&columns, ORBIT_TOL);
    distinct_arrangements(&classes)
        .into_iter()
        .map(|perm| MeasureDescriptor {
            classification: desc.classification,
            field: permute_field(&desc.field, &perm),
            origin_set: desc.origin_set,
            origin_permutation: perm.iter().map(|&j| desc.origin_permutation[j]).collect(),
            source_solution: desc.source_solution.clone(),
        })
        .collect()
}

/// Images of `field` under every relabeling of the `q` spin states, the
/// pinned state `q` included. A relabeling moves the pinned zero component,
/// so each image is renormalized to vanish on the last state again.
pub fn relabel_orbit(field: &PeriodTwoField) -> Vec<PeriodTwoField> {
    let mut columns: Vec<(f64, f64)> =
        field.even.as_slice().iter().copied().zip(field.odd.as_slice().iter().copied()).collect();
    columns.push((0.0, 0.0));
    let classes = column_classes(&columns, ORBIT_TOL);
    let dim = columns.len() - 1;
    distinct_arrangements(&classes)
        .into_iter()
        .map(|perm| {
            let (pin_even, pin_odd) = columns[perm[dim]];
            let even = perm[..dim].iter().map(|&j| columns[j].0 - pin_even).collect();
            let odd = perm[..dim].iter().map(|&j| columns[j].1 - pin_odd).collect();
            PeriodTwoField { even: FieldVector::new(even).expect("finite"), odd: FieldVector::new(odd).expect("finite") }
        })
        .collect()
}

/// Drops fields equal (componentwise within `tol`) to an earlier one.
pub fn distinct_fields(fields: impl IntoIterator<Item = PeriodTwoField>, tol: f64) -> Vec<PeriodTwoField> {
    let same = |a: &FieldVector, b: &FieldVector| a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| (x - y).abs() <= tol);
    let mut out: Vec<PeriodTwoField> = Vec::new();
    for f in fields {
        if !out.iter().any(|g| same(&g.even, &f.even) && same(&g.odd, &f.odd)) {
            out.push(f);
        }
    }
    out
}

/// Distinct measures generated from `field` by spin relabelings together
/// with the exchange of even and odd generations.
pub fn measure_orbit(field: &PeriodTwoField) -> Vec<PeriodTwoField> {
    let orbit = relabel_orbit(field);
    let swapped: Vec<_> = orbit.iter().map(PeriodTwoField::swapped).collect();
    distinct_fields(orbit.into_iter().chain(swapped), ORBIT_TOL)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `C(n, r)` by the multiplicative formula with gcd reduction; `None` on
/// overflow.
pub fn binomial(n: u64, r: u64) -> Option<u128> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 1..=r as u128 {
        // acc · (n - r + i) / i is an integer; cancel the gcd before multiplying.
        let num = (n - r) as u128 + i;
        let g = gcd(acc, i);
        let (acc_red, den) = (acc / g, i / g);
        let num_red = num / den;
        acc = acc_red.checked_mul(num_red)?;
    }
    Some(acc)
}

fn overflow(q: usize) -> Error {
    Error::CountOverflow { q }
}

/// `2·C(q, m)`, defined for `1 <= m <= q`.
pub fn count_im(q: usize, m: usize) -> Result<u128> {
    if m < 1 || m > q {
        return Err(Error::InvalidSet(format!("count on I_m needs 1 <= m <= q, got m = {m}, q = {q}")));
    }
    binomial(q as u64, m as u64).and_then(|c| c.checked_mul(2)).ok_or_else(|| overflow(q))
}

/// `2·C(q, m)·C(q-m, m)`, defined for `1 <= m <= ⌊q/2⌋`.
pub fn count_im_prime(q: usize, m: usize) -> Result<u128> {
    if m < 1 || 2 * m > q {
        return Err(Error::InvalidSet(format!("count on I'_m needs 1 <= m <= q/2, got m = {m}, q = {q}")));
    }
    let a = binomial(q as u64, m as u64).ok_or_else(|| overflow(q))?;
    let b = binomial((q - m) as u64, m as u64).ok_or_else(|| overflow(q))?;
    a.checked_mul(b).and_then(|c| c.checked_mul(2)).ok_or_else(|| overflow(q))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountReport {
    pub q: usize,
    /// `(m, 2·C(q,m))` for `m = 1..=q`.
    pub per_im: Vec<(usize, u128)>,
    /// `(m, 2·C(q,m)·C(q-m,m))` for `m = 1..=⌊q/2⌋`.
    pub per_im_prime: Vec<(usize, u128)>,
    pub total_lower_bound: u128,
}

/// `2·(2^q - 1 + Σ_{m=1}^{⌊q/2⌋} C(q,m)·C(q-m,m))`.
pub fn total_lower_bound(q: usize) -> Result<CountReport> {
    if q < 3 {
        return Err(Error::Hypothesis(format!("counting needs q >= 3, got {q}")));
    }
    let per_im = (1..=q).map(|m| count_im(q, m).map(|c| (m, c))).collect::<Result<Vec<_>>>()?;
    let per_im_prime = (1..=q / 2).map(|m| count_im_prime(q, m).map(|c| (m, c))).collect::<Result<Vec<_>>>()?;

    let pow = 1u128.checked_shl(q as u32 + 1).filter(|_| q < 127).ok_or_else(|| overflow(q))?;
    let im_sum = per_im.iter().try_fold(0u128, |acc, &(_, c)| acc.checked_add(c)).ok_or_else(|| overflow(q))?;
    debug_assert_eq!(im_sum, pow - 2);
    let total = per_im_prime.iter().try_fold(im_sum, |acc, &(_, c)| acc.checked_add(c)).ok_or_else(|| overflow(q))?;
    Ok(CountReport { q, per_im, per_im_prime, total_lower_bound: total })
}
