//! Deflation-based top-k extraction with approximate PCA.
//!
//! [`appx_pca`] pulls an approximate top eigenvector of a PSD operator out of
//! a Lanczos run: it applies the matrix power `M^q` to a Gaussian start
//! vector through the tridiagonal projection, with
//! `q >= C eps^-1 log(d / (eps_pca eta))` chosen so the output `w` leaks at
//! most `eps_pca` of its energy onto eigenvectors below `(1 - eps) lambda_1`.
//!
//! [`modified_lazysvd`] deflates with that routine `k` times. The returned
//! directions are appended raw, never re-orthonormalized; products with the
//! deflated operator instead project through Householder least squares on
//! both sides ([`deflated_matvec`]). The leakage bound keeps the raw basis
//! well conditioned (`kappa(V_s) <= 4`), which is what makes those
//! projections reliable at reduced precision.
//!
//! [`original_lazysvd_baseline`] is the classical variant with explicit
//! Gram-Schmidt deflation, kept for side-by-side comparison in the precision
//! experiments; no stability claim is attached to it.

use crate::error::{Error, Result};
use crate::fp::Fp;
use crate::lanczos::{lanczos, power_weighted_vector};
use crate::mat::{dot, norm2, DenseMatrix};
use crate::qr::{project_complement, project_complement_fp};
use crate::rng::SeededRng;
use crate::svd::svd;

/// Smallest leakage budget the parameter selection will produce; below f64
/// resolution a tighter budget only inflates the iteration counts.
const EPS_PCA_FLOOR: f64 = 1e-16;

/// Condition-number threshold at which the deflation basis is declared
/// broken (the guarantee is 4; the factor-2 slack absorbs measurement noise).
const KAPPA_ABORT: f64 = 8.0;

/// Deterministic matrix-vector access to a symmetric PSD operator.
pub trait MatvecOracle {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// Declared relative accuracy `eps_M` of `apply`:
    /// `||y - M x|| <= eps_M ||M|| ||x||`. Exact oracles return 0.
    fn declared_error(&self) -> f64 {
        0.0
    }
}

/// `M = A^T A` accessed through two multiplications with `A`.
pub struct GramOracle<'a> {
    a: &'a DenseMatrix,
    fp: Fp,
}

impl<'a> GramOracle<'a> {
    pub fn new(a: &'a DenseMatrix) -> Self {
        GramOracle { a, fp: Fp::native() }
    }

    pub fn with_fp(a: &'a DenseMatrix, fp: Fp) -> Self {
        GramOracle { a, fp }
    }
}

impl MatvecOracle for GramOracle<'_> {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let ax = fp_matvec(self.a, x, self.fp);
        Ok(fp_tr_matvec(self.a, &ax, self.fp))
    }

    fn declared_error(&self) -> f64 {
        match self.fp.config() {
            None => 0.0,
            Some(c) => c.unit_roundoff() * self.a.rows().max(self.a.cols()) as f64,
        }
    }
}

/// An explicitly stored symmetric PSD matrix.
pub struct SymOracle<'a> {
    m: &'a DenseMatrix,
    fp: Fp,
}

impl<'a> SymOracle<'a> {
    pub fn new(m: &'a DenseMatrix) -> Self {
        assert_eq!(m.rows(), m.cols());
        SymOracle { m, fp: Fp::native() }
    }
}

impl MatvecOracle for SymOracle<'_> {
    fn dim(&self) -> usize {
        self.m.rows()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(fp_matvec(self.m, x, self.fp))
    }
}

fn fp_matvec(a: &DenseMatrix, x: &[f64], fp: Fp) -> Vec<f64> {
    crate::ops::record_matvec();
    (0..a.rows()).map(|i| fp.dot(a.row(i), x)).collect()
}

fn fp_tr_matvec(a: &DenseMatrix, x: &[f64], fp: Fp) -> Vec<f64> {
    crate::ops::record_matvec();
    let mut out = vec![0.0; a.cols()];
    for (i, &xi) in x.iter().enumerate() {
        fp.axpy(xi, a.row(i), &mut out);
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct AppxPcaConfig {
    /// Relative eigenvalue threshold: leakage is measured below
    /// `(1 - eps) lambda_1`.
    pub eps: f64,
    /// Energy leakage budget.
    pub eps_pca: f64,
    /// Failure probability over the Gaussian start.
    pub eta: f64,
    /// Constant `C` in the power `q >= C eps^-1 log(d / (eps_pca eta))`.
    pub degree_multiplier: f64,
}

impl AppxPcaConfig {
    pub fn new(eps: f64, eps_pca: f64, eta: f64) -> Result<Self> {
        for (name, v) in [("eps", eps), ("eps_pca", eps_pca), ("eta", eta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("{name} must be in (0, 1), got {v}")));
            }
        }
        Ok(AppxPcaConfig { eps, eps_pca, eta, degree_multiplier: 1.0 })
    }

    /// Matrix power the Lanczos run approximates.
    pub fn power(&self, d: usize) -> u32 {
        let q = self.degree_multiplier * (1.0 / self.eps)
            * (d as f64 / (self.eps_pca * self.eta)).ln();
        q.ceil().max(1.0) as u32
    }

    /// Polynomial error target `gamma = (eps_pca eta / (d q))^2`.
    pub fn gamma(&self, d: usize) -> f64 {
        let q = self.power(d) as f64;
        (self.eps_pca * self.eta / (d as f64 * q)).powi(2)
    }

    /// Lanczos iteration budget `ceil(sqrt(2 q log(1/gamma)))`, capped at the
    /// ambient dimension by the caller.
    pub fn lanczos_steps(&self, d: usize) -> usize {
        let q = self.power(d) as f64;
        let g = self.gamma(d);
        (2.0 * q * (1.0 / g).ln()).sqrt().ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone)]
pub struct AppxPcaOutcome {
    /// Unit vector with the leakage guarantee.
    pub w: Vec<f64>,
    /// Operator applications consumed.
    pub matvecs: usize,
    /// Largest Ritz value observed (estimate of `lambda_1`).
    pub lambda1_ritz: f64,
}

/// Approximate top eigenvector of the PSD operator behind `oracle`.
///
/// `lambda1_lower` is a lower bound on `lambda_1` used to re-validate the
/// Lanczos window: if the run's top Ritz value falls below a quarter of it,
/// the iteration has lost the dominant direction (possible under reduced
/// precision) and the call fails rather than return garbage. Pass 0 to skip
/// the check.
pub fn appx_pca(
    oracle: &dyn MatvecOracle,
    lambda1_lower: f64,
    cfg: &AppxPcaConfig,
    rng: &mut SeededRng,
) -> Result<AppxPcaOutcome> {
    appx_pca_fp(oracle, lambda1_lower, cfg, rng, Fp::native())
}

pub(crate) fn appx_pca_fp(
    oracle: &dyn MatvecOracle,
    lambda1_lower: f64,
    cfg: &AppxPcaConfig,
    rng: &mut SeededRng,
    fp: Fp,
) -> Result<AppxPcaOutcome> {
    let d = oracle.dim();
    if d == 0 {
        return Err(Error::invalid("operator dimension must be at least 1"));
    }
    let steps = cfg.lanczos_steps(d).min(d);
    let start = rng.normal_vec(d);
    let mut op = |x: &[f64]| oracle.apply(x);
    let run = lanczos(&mut op, &start, steps, fp)?;
    let (theta, _) = run.ritz();
    let lambda1_ritz = theta.first().copied().unwrap_or(0.0);
    if lambda1_lower > 0.0 && lambda1_ritz < 0.25 * lambda1_lower {
        return Err(Error::NumericFailure(format!(
            "lanczos window collapsed: top ritz value {lambda1_ritz:.3e} \
             against lower bound {lambda1_lower:.3e}"
        )));
    }
    let w = power_weighted_vector(&run, cfg.power(d), fp);
    Ok(AppxPcaOutcome { w, matvecs: run.matvecs, lambda1_ritz })
}

/// Raw deflation basis built by the solver, one appended unit vector per
/// step, never re-orthonormalized.
#[derive(Debug, Clone)]
pub struct DeflationState {
    v: Option<DenseMatrix>,
    dim: usize,
    /// Condition number of `V` measured after the latest append.
    pub kappa_estimate: f64,
    /// Squared projection of each new direction onto the previous span.
    pub leakage_per_step: Vec<f64>,
    /// Rayleigh quotient of each accepted direction under the base operator.
    pub rayleigh_per_step: Vec<f64>,
    /// Operator applications consumed (estimation, warmups and extraction).
    pub matvec_count: usize,
    /// Documented budget the count must stay within; see
    /// [`modified_lazysvd_oracle`].
    pub matvec_budget: usize,
    /// Largest deviation of a stored column norm from 1.
    pub max_column_norm_dev: f64,
    /// Leakage budget the extraction ran with.
    pub eps_pca: f64,
    /// `(sigma_max, sigma_min)` of the basis after each append.
    pub extremes_per_step: Vec<(f64, f64)>,
}

impl DeflationState {
    pub fn empty(dim: usize) -> Self {
        DeflationState {
            v: None,
            dim,
            kappa_estimate: 1.0,
            leakage_per_step: Vec::new(),
            rayleigh_per_step: Vec::new(),
            matvec_count: 0,
            matvec_budget: 0,
            max_column_norm_dev: 0.0,
            eps_pca: 0.0,
            extremes_per_step: Vec::new(),
        }
    }

    pub fn s(&self) -> usize {
        self.v.as_ref().map_or(0, |v| v.cols())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The `d x s` basis; `None` before the first step.
    pub fn v(&self) -> Option<&DenseMatrix> {
        self.v.as_ref()
    }

    fn push_column(&mut self, w: &[f64]) {
        self.max_column_norm_dev = self.max_column_norm_dev.max((norm2(w) - 1.0).abs());
        let next = match &self.v {
            None => DenseMatrix::from_fn(self.dim, 1, |i, _| w[i]),
            Some(v) => {
                let col = DenseMatrix::from_fn(self.dim, 1, |i, _| w[i]);
                DenseMatrix::hstack(&[v, &col])
            }
        };
        self.v = Some(next);
    }

    fn refresh_kappa(&mut self) -> Result<()> {
        if let Some(v) = &self.v {
            let sv = svd(v)?.singular_values;
            let lo = sv.last().copied().unwrap_or(0.0);
            self.kappa_estimate = if lo > 0.0 { sv[0] / lo } else { f64::INFINITY };
            self.extremes_per_step.push((sv[0], lo));
        }
        Ok(())
    }

    /// Orthonormal basis of the span (for projectors and ratio checks).
    pub fn orthonormal_basis(&self) -> Result<DenseMatrix> {
        let v = self
            .v
            .as_ref()
            .ok_or_else(|| Error::invalid("deflation state is empty"))?;
        Ok(crate::qr::orthonormalize(v)?.q)
    }
}

/// `y = (I - P) A^T A (I - P) x` with `P` the projection onto the column
/// span of the raw deflation basis, both projections through Householder
/// least squares.
pub fn deflated_matvec(a: &DenseMatrix, state: &DeflationState, x: &[f64]) -> Result<Vec<f64>> {
    deflated_gram_apply(&GramOracle::new(a), state, x, Fp::native())
}

fn deflated_gram_apply(
    base: &dyn MatvecOracle,
    state: &DeflationState,
    x: &[f64],
    fp: Fp,
) -> Result<Vec<f64>> {
    if x.len() != state.dim {
        return Err(Error::invalid(format!(
            "vector length {} does not match operator dimension {}",
            x.len(),
            state.dim
        )));
    }
    if state.kappa_estimate > KAPPA_ABORT {
        return Err(Error::ContractViolation(format!(
            "deflation basis condition number {:.3} exceeds {KAPPA_ABORT}",
            state.kappa_estimate
        )));
    }
    match &state.v {
        None => base.apply(x),
        Some(v) => {
            let x1 = project_complement_fp(v, x, fp)?;
            let u = base.apply(&x1)?;
            project_complement_fp(v, &u, fp)
        }
    }
}

/// Solver options; `Default` is the production configuration.
#[derive(Debug, Clone, Copy)]
pub struct LazySvdOptions {
    /// Overrides the automatic leakage budget
    /// `min(eps^2, 1/(64 k^2), (lambda_(k+1)/lambda_1) eps^2 / d)`.
    pub eps_pca_override: Option<f64>,
    /// Constant `C` of the matrix power inside approximate PCA.
    pub degree_multiplier: f64,
    /// Arithmetic the solver runs under.
    pub fp: Fp,
}

impl Default for LazySvdOptions {
    fn default() -> Self {
        LazySvdOptions { eps_pca_override: None, degree_multiplier: 1.0, fp: Fp::native() }
    }
}

pub fn modified_lazysvd(
    a: &DenseMatrix,
    k: usize,
    eps: f64,
    eta: f64,
    seed: u64,
) -> Result<DeflationState> {
    modified_lazysvd_with(a, k, eps, eta, seed, &LazySvdOptions::default())
}

pub fn modified_lazysvd_with(
    a: &DenseMatrix,
    k: usize,
    eps: f64,
    eta: f64,
    seed: u64,
    opts: &LazySvdOptions,
) -> Result<DeflationState> {
    let base = GramOracle::with_fp(a, opts.fp);
    modified_lazysvd_oracle(&base, k, eps, eta, seed, opts)
}

/// Operator-access variant of [`modified_lazysvd`]; `oracle` must implement
/// products with a symmetric PSD matrix.
///
/// Instrumentation contract: `matvec_count <= matvec_budget` with
/// `budget = t_pre + k (10 + t_max + 1)` where `t_pre` is the spectrum
/// pre-estimation run, 10 the per-step warmup, `t_max` the Lanczos budget of
/// one extraction at the chosen `eps_pca`, and 1 the Rayleigh measurement.
pub fn modified_lazysvd_oracle(
    oracle: &dyn MatvecOracle,
    k: usize,
    eps: f64,
    eta: f64,
    seed: u64,
    opts: &LazySvdOptions,
) -> Result<DeflationState> {
    run_deflation(oracle, k, eps, eta, seed, opts, DeflationVariant::Projection)
}

/// Classical deflation baseline: each new direction is explicitly
/// orthogonalized against the basis and renormalized, and the deflated
/// operator is applied through the explicit projector `I - V V^T`.
pub fn original_lazysvd_baseline(
    a: &DenseMatrix,
    k: usize,
    eps: f64,
    eta: f64,
    seed: u64,
) -> Result<DeflationState> {
    original_lazysvd_baseline_with(a, k, eps, eta, seed, &LazySvdOptions::default())
}

pub fn original_lazysvd_baseline_with(
    a: &DenseMatrix,
    k: usize,
    eps: f64,
    eta: f64,
    seed: u64,
    opts: &LazySvdOptions,
) -> Result<DeflationState> {
    let base = GramOracle::with_fp(a, opts.fp);
    run_deflation(&base, k, eps, eta, seed, opts, DeflationVariant::GramSchmidt)
}

#[derive(Clone, Copy, PartialEq)]
enum DeflationVariant {
    /// Raw appends, least-squares projections.
    Projection,
    /// Orthonormalized appends, explicit projector.
    GramSchmidt,
}

fn run_deflation(
    base: &dyn MatvecOracle,
    k: usize,
    eps: f64,
    eta: f64,
    seed: u64,
    opts: &LazySvdOptions,
    variant: DeflationVariant,
) -> Result<DeflationState> {
    let d = base.dim();
    if k == 0 || k > d {
        return Err(Error::invalid(format!("rank k = {k} out of range [1, {d}]")));
    }
    for (name, v) in [("eps", eps), ("eta", eta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(format!("{name} must be in (0, 1), got {v}")));
        }
    }
    let fp = opts.fp;
    let master = SeededRng::new(seed);
    let mut state = DeflationState::empty(d);

    // Pre-estimate lambda_1 and lambda_(k+1) for the leakage budget.
    let t_pre = (2 * (k + 1)).max(30).min(d);
    let (lam1_est, lam_k1_est) = {
        let mut rng = master.derive(17);
        let start = rng.normal_vec(d);
        let mut op = |x: &[f64]| base.apply(x);
        let run = lanczos(&mut op, &start, t_pre, Fp::native())?;
        state.matvec_count += run.matvecs;
        let (theta, _) = run.ritz();
        let l1 = theta.first().copied().unwrap_or(0.0).max(0.0);
        let lk1 = theta.get(k).copied().unwrap_or(0.0).max(0.0);
        (l1, lk1)
    };
    let eps_pca = opts.eps_pca_override.unwrap_or_else(|| {
        let mut budget = (eps * eps).min(1.0 / (64.0 * (k * k) as f64));
        if lam1_est > 0.0 {
            budget = budget.min(lam_k1_est / lam1_est * eps * eps / d as f64);
        }
        budget.max(EPS_PCA_FLOOR)
    });
    let per_call_eta = (eta / k as f64).min(0.5);
    let cfg = AppxPcaConfig {
        eps,
        eps_pca,
        eta: per_call_eta,
        degree_multiplier: opts.degree_multiplier,
    };
    let t_max = cfg.lanczos_steps(d).min(d);
    state.matvec_budget = t_pre + k * (10 + t_max + 1);
    state.eps_pca = eps_pca;

    // Orthonormalized copy of the basis, used only by the Gram-Schmidt
    // variant's deflation and normalization.
    let mut ortho_cols: Vec<Vec<f64>> = Vec::new();

    for s in 1..=k {
        let calls = std::cell::Cell::new(0usize);
        let deflated = |x: &[f64]| -> Result<Vec<f64>> {
            calls.set(calls.get() + 1);
            match variant {
                DeflationVariant::Projection => deflated_gram_apply(base, &state, x, fp),
                DeflationVariant::GramSchmidt => {
                    let x1 = gs_complement(&ortho_cols, x, fp);
                    let u = base.apply(&x1)?;
                    Ok(gs_complement(&ortho_cols, &u, fp))
                }
            }
        };

        // Warmup estimate of the deflated operator's top eigenvalue.
        let lambda1_lower = {
            let mut rng = master.derive(100 + s as u64);
            let start = rng.normal_vec(d);
            let mut op = |x: &[f64]| deflated(x);
            let run = lanczos(&mut op, &start, 10.min(d), fp)?;
            0.9 * run.top_ritz_value().max(0.0)
        };

        let step_cfg = match variant {
            DeflationVariant::Projection => cfg,
            // The classical formulation extracts at half the threshold.
            DeflationVariant::GramSchmidt => AppxPcaConfig { eps: eps / 2.0, ..cfg },
        };
        let mut rng = master.derive(200 + s as u64);
        let outcome = {
            let op: &dyn MatvecOracle = &FnOracle { dim: d, f: &deflated };
            appx_pca_fp(op, lambda1_lower, &step_cfg, &mut rng, fp)?
        };
        state.matvec_count += calls.get();

        // Leakage of the new direction onto the existing span (measured at
        // working precision; this is diagnostics, not algorithm state).
        let leak = match &state.v {
            None => 0.0,
            Some(v) => {
                let resid = project_complement(v, &outcome.w)?;
                let w_norm2 = dot(&outcome.w, &outcome.w);
                (w_norm2 - dot(&resid, &resid)).max(0.0)
            }
        };
        state.leakage_per_step.push(leak);

        let rayleigh = {
            let mu = base.apply(&outcome.w)?;
            state.matvec_count += 1;
            dot(&outcome.w, &mu) / dot(&outcome.w, &outcome.w)
        };
        state.rayleigh_per_step.push(rayleigh);

        match variant {
            DeflationVariant::Projection => {
                state.push_column(&outcome.w);
            }
            DeflationVariant::GramSchmidt => {
                let mut v_s = gs_complement(&ortho_cols, &outcome.w, fp);
                let nrm = fp.norm2(&v_s);
                if !(nrm > 1e-8) {
                    return Err(Error::DegenerateDeflation(nrm));
                }
                fp.scale(1.0 / nrm, &mut v_s);
                ortho_cols.push(v_s.clone());
                state.push_column(&v_s);
            }
        }
        state.refresh_kappa()?;
        if state.kappa_estimate > KAPPA_ABORT {
            return Err(Error::ContractViolation(format!(
                "deflation basis condition number {:.3} exceeded {KAPPA_ABORT} at step {s}",
                state.kappa_estimate
            )));
        }
    }
    Ok(state)
}

/// `x - V (V^T x)` for explicitly orthonormal columns, two passes.
fn gs_complement(cols: &[Vec<f64>], x: &[f64], fp: Fp) -> Vec<f64> {
    let mut y = x.to_vec();
    for _pass in 0..2 {
        for c in cols {
            let coeff = fp.dot(c, &y);
            fp.axpy(-coeff, c, &mut y);
        }
        if cols.is_empty() {
            break;
        }
    }
    y
}

struct FnOracle<'a> {
    dim: usize,
    f: &'a dyn Fn(&[f64]) -> Result<Vec<f64>>,
}

impl MatvecOracle for FnOracle<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        (self.f)(x)
    }
}
