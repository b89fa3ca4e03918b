//! Householder QR: orthonormalization and stable least-squares projection.
//!
//! Both routines run under an [`Fp`] arithmetic mode so the precision lab can
//! replay them with a reduced mantissa. The projection residual is formed by
//! applying the reflectors to the data vector, zeroing the leading
//! coefficients and applying them back; no triangular solve is involved, so
//! the residual is orthogonal to the basis to working precision.

use crate::error::{Error, Result};
use crate::fp::Fp;
use crate::mat::DenseMatrix;

/// Condition-number estimate above which a projection basis is rejected.
const KAPPA_LIMIT: f64 = 1e8;

/// Relative column-norm threshold below which `orthonormalize` drops a
/// numerically dependent column.
const RANK_DROP_TOL: f64 = 1e-12;

struct Reflector {
    offset: usize,
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    /// Applies `I - beta v v^T` to `y[offset..]`.
    fn apply(&self, y: &mut [f64], fp: Fp) {
        let tail = &mut y[self.offset..];
        let mut s = 0.0;
        for (&vi, &ti) in self.v.iter().zip(tail.iter()) {
            s = fp.add(s, fp.mul(vi, ti));
        }
        let bs = fp.mul(self.beta, s);
        for (ti, &vi) in tail.iter_mut().zip(self.v.iter()) {
            *ti = fp.sub(*ti, fp.mul(bs, vi));
        }
    }
}

struct QrFactors {
    reflectors: Vec<Reflector>,
    r_diag: Vec<f64>,
    dropped: Vec<usize>,
}

impl QrFactors {
    fn kappa_estimate(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for &d in &self.r_diag {
            let a = d.abs();
            lo = lo.min(a);
            hi = hi.max(a);
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }
}

/// Factors `m` column by column. When `drop_deficient` is set, columns whose
/// remaining component falls below `RANK_DROP_TOL` times their original norm
/// are skipped instead of producing a reflector.
fn factor(m: &DenseMatrix, fp: Fp, drop_deficient: bool) -> QrFactors {
    let rows = m.rows();
    let cols = m.cols();
    let mut work: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let orig_norms: Vec<f64> = work.iter().map(|c| fp.norm2(c)).collect();

    let mut f = QrFactors { reflectors: Vec::new(), r_diag: Vec::new(), dropped: Vec::new() };
    for j in 0..cols {
        let t = f.reflectors.len();
        if t == rows {
            f.dropped.push(j);
            continue;
        }
        for refl in &f.reflectors {
            refl.apply(&mut work[j], fp);
        }
        let tail = &work[j][t..];
        let sigma = fp.norm2(tail);
        if drop_deficient && sigma <= RANK_DROP_TOL * orig_norms[j] {
            f.dropped.push(j);
            continue;
        }
        if sigma == 0.0 {
            // Exactly dependent column and dropping disabled: record a zero
            // pivot so the condition estimate flags it.
            f.dropped.push(j);
            f.r_diag.push(0.0);
            continue;
        }
        let mut v = tail.to_vec();
        let x0 = v[0];
        let sign = if x0 >= 0.0 { 1.0 } else { -1.0 };
        v[0] = fp.add(x0, sign * sigma);
        let vtv = fp.dot(&v, &v);
        let beta = fp.div(2.0, vtv);
        f.r_diag.push(-sign * sigma);
        f.reflectors.push(Reflector { offset: t, v, beta });
    }
    f
}

/// Outcome of [`orthonormalize`]: the orthonormal factor plus how many input
/// columns survived the rank check.
#[derive(Debug, Clone)]
pub struct Orthonormalized {
    /// `rows x retained`, `||Q^T Q - I||_F <= 1e-12 * retained`.
    pub q: DenseMatrix,
    /// Number of columns retained.
    pub retained: usize,
    /// Indices of the input columns that were numerically dependent.
    pub dropped: Vec<usize>,
}

/// Orthonormal basis of the column span of `m` via Householder QR.
///
/// Requires `rows >= cols`. Numerically dependent columns are dropped (their
/// projection onto the complement of the previous columns is below `1e-12`
/// of their original norm), so the returned factor always has orthonormal
/// columns spanning the numerical range.
pub fn orthonormalize(m: &DenseMatrix) -> Result<Orthonormalized> {
    orthonormalize_fp(m, Fp::native())
}

pub(crate) fn orthonormalize_fp(m: &DenseMatrix, fp: Fp) -> Result<Orthonormalized> {
    if m.rows() < m.cols() {
        return Err(Error::invalid(format!(
            "orthonormalize needs rows >= cols, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let f = factor(m, fp, true);
    let r = f.reflectors.len();
    if r == 0 {
        return Err(Error::invalid("orthonormalize: all columns are numerically zero"));
    }
    // Q = H_1 ... H_r [e_1 .. e_r], with column signs fixed so the implicit R
    // has a positive diagonal; orthonormal inputs then come back unchanged.
    let mut q = DenseMatrix::zeros(m.rows(), r);
    let mut col = vec![0.0; m.rows()];
    for i in 0..r {
        col.iter_mut().for_each(|x| *x = 0.0);
        col[i] = if f.r_diag[i] < 0.0 { -1.0 } else { 1.0 };
        for refl in f.reflectors.iter().rev() {
            refl.apply(&mut col, fp);
        }
        q.set_column(i, &col);
    }
    Ok(Orthonormalized { q, retained: r, dropped: f.dropped })
}

/// Computes `x - B argmin_z ||B z - x||_2` by Householder least squares.
///
/// The basis must have full column rank up to a condition estimate of `1e8`;
/// beyond that the call fails with [`Error::IllConditionedBasis`], which
/// upstream deflation loops treat as a contract violation.
pub fn project_complement(b: &DenseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    project_complement_fp(b, x, Fp::native())
}

pub(crate) fn project_complement_fp(b: &DenseMatrix, x: &[f64], fp: Fp) -> Result<Vec<f64>> {
    if b.rows() != x.len() {
        return Err(Error::invalid(format!(
            "project_complement: basis has {} rows but x has length {}",
            b.rows(),
            x.len()
        )));
    }
    if b.rows() < b.cols() {
        return Err(Error::invalid("project_complement: basis has more columns than rows"));
    }
    let f = factor(b, fp, false);
    let kappa = f.kappa_estimate();
    if !kappa.is_finite() || kappa > KAPPA_LIMIT {
        return Err(Error::IllConditionedBasis(format!(
            "estimated condition number {kappa:.3e} exceeds {KAPPA_LIMIT:.0e}"
        )));
    }
    let mut y = x.to_vec();
    for refl in &f.reflectors {
        refl.apply(&mut y, fp);
    }
    for yi in y.iter_mut().take(f.reflectors.len()) {
        *yi = 0.0;
    }
    for refl in f.reflectors.iter().rev() {
        refl.apply(&mut y, fp);
    }
    Ok(y)
}

/// Orthonormal basis of `span(m)` padded to exactly `k` columns with random
/// orthonormal directions when the span has lower rank. Returns the basis and
/// the rank actually found; padding only happens on rank-deficient inputs,
/// where any completion spans an optimal subspace.
pub(crate) fn span_basis_padded(
    m: &DenseMatrix,
    k: usize,
    rng: &mut crate::rng::SeededRng,
) -> Result<(DenseMatrix, usize)> {
    let orth = orthonormalize(m)?;
    let rank = orth.retained.min(k);
    if orth.retained >= k {
        return Ok((orth.q.columns(0, k), rank));
    }
    let mut blocks: Vec<DenseMatrix> = vec![orth.q.clone()];
    let mut have = orth.retained;
    while have < k {
        let g = crate::rng::gaussian_matrix(m.rows(), k - have, rng)?;
        let mut work = g;
        for b in &blocks {
            let coeff = b.matmul_tn(&work);
            work = work.sub(&b.matmul(&coeff));
        }
        let extra = orthonormalize(&work)?;
        have += extra.retained;
        blocks.push(extra.q);
    }
    let refs: Vec<&DenseMatrix> = blocks.iter().collect();
    Ok((DenseMatrix::hstack(&refs).columns(0, k), rank))
}
