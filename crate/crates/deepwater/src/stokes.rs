//! Stokes (traveling) water waves on deep water, d = 1.
//!
//! In a frame moving at speed `c` the profiles solve
//!
//! `c eta_x + G(eta) psi = 0`,
//! `c psi_x - g eta - psi_x^2/2
//!    + (G(eta) psi + eta_x psi_x)^2 / (2 (1 + eta_x^2)) = 0`,
//!
//! restricted to even zero-mean `eta` and odd `psi`. The linearization at
//! the flat state acts mode by mode through `[-c j, j; -g, c j]`, singular
//! exactly at the bifurcation speeds `c*_k = sqrt(g/k)` with one-dimensional
//! kernel `u* = (sqrt(k) cos kx, sqrt(g) sin kx)`; its explicit inverse on
//! the range seeds a Newton continuation in the amplitude
//! `epsilon = <pair, u*> / ||u*||^2`, producing one analytic branch per base
//! wavenumber.

use std::cell::RefCell;
use std::rc::Rc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{ModeIndex, NormParams, PeriodicFunction};
use crate::collocation::CollocationGrid;
use crate::config::SolverConfig;
use crate::dn::{apply_dn_with, flattening_coeffs, DnReport, FlatteningCoefficients};
use crate::error::{Error, Result};

/// Surface/potential pair in the symmetric subspace: `eta` even with zero
/// mean (cosine series), `psi` odd (sine series). The symmetry is structural:
/// values are built from real cosine/sine coefficients only.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricPair {
    eta: PeriodicFunction,
    psi: PeriodicFunction,
}

impl SymmetricPair {
    pub fn zero(trunc: u32) -> Self {
        SymmetricPair {
            eta: PeriodicFunction::zero(1, trunc),
            psi: PeriodicFunction::zero(1, trunc),
        }
    }

    /// Builds the pair from `eta = sum_j a_j cos(jx)`,
    /// `psi = sum_j b_j sin(jx)`, coefficients indexed from mode 1.
    pub fn from_coefficients(cos_eta: &[f64], sin_psi: &[f64], trunc: u32) -> Result<Self> {
        if cos_eta.len() > trunc as usize || sin_psi.len() > trunc as usize {
            return Err(Error::InvalidInput(format!(
                "{} cosine / {} sine coefficients exceed the truncation K = {trunc}",
                cos_eta.len(),
                sin_psi.len()
            )));
        }
        let mut eta = Vec::new();
        for (j, &a) in cos_eta.iter().enumerate() {
            let k = ModeIndex::d1(j as i32 + 1);
            eta.push((k, Complex64::new(a / 2.0, 0.0)));
            eta.push((k.neg(), Complex64::new(a / 2.0, 0.0)));
        }
        let mut psi = Vec::new();
        for (j, &b) in sin_psi.iter().enumerate() {
            let k = ModeIndex::d1(j as i32 + 1);
            psi.push((k, Complex64::new(0.0, -b / 2.0)));
            psi.push((k.neg(), Complex64::new(0.0, b / 2.0)));
        }
        Ok(SymmetricPair {
            eta: PeriodicFunction::from_coeffs_unchecked(1, trunc, eta)?,
            psi: PeriodicFunction::from_coeffs_unchecked(1, trunc, psi)?,
        })
    }

    pub fn eta(&self) -> &PeriodicFunction {
        &self.eta
    }

    pub fn psi(&self) -> &PeriodicFunction {
        &self.psi
    }

    pub fn trunc(&self) -> u32 {
        self.eta.trunc()
    }

    /// Cosine coefficients `a_1 .. a_count` of `eta`.
    pub fn cos_coefficients(&self, count: usize) -> Vec<f64> {
        (1..=count)
            .map(|j| 2.0 * self.eta.coeff(&ModeIndex::d1(j as i32)).re)
            .collect()
    }

    /// Sine coefficients `b_1 .. b_count` of `psi`.
    pub fn sin_coefficients(&self, count: usize) -> Vec<f64> {
        (1..=count)
            .map(|j| -2.0 * self.psi.coeff(&ModeIndex::d1(j as i32)).im)
            .collect()
    }

    /// L2 pair inner product `(eta, other.eta) + (psi, other.psi)`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        Ok(self.eta.l2_inner(&other.eta)? + self.psi.l2_inner(&other.psi)?)
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).expect("dimensions match")
    }

    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self> {
        Ok(SymmetricPair {
            eta: self.eta.add(&other.eta.scale(factor))?,
            psi: self.psi.add(&other.psi.scale(factor))?,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        SymmetricPair {
            eta: self.eta.scale(factor),
            psi: self.psi.scale(factor),
        }
    }

    /// `sqrt(||eta||^2 + ||psi||^2)` in the `H^{0,s}` weight.
    pub fn norm_h0s(&self, s: f64) -> f64 {
        let p = NormParams::sobolev(s);
        self.eta.norm_sigma_s(&p).hypot(self.psi.norm_sigma_s(&p))
    }

    pub fn is_zero(&self) -> bool {
        self.eta.is_zero() && self.psi.is_zero()
    }
}

/// Kernel direction `u* = (sqrt(k) cos kx, sqrt(g) sin kx)` of the
/// linearization at speed `c*_k = sqrt(g/k)`.
pub fn kernel_vector(k: u32, g: f64, trunc: u32) -> Result<SymmetricPair> {
    if k == 0 || k > trunc {
        return Err(Error::InvalidParameter(format!(
            "base wavenumber k = {k} must satisfy 1 <= k <= K = {trunc}"
        )));
    }
    if !(g > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gravity must be positive, got {g}"
        )));
    }
    let mut cos_eta = vec![0.0; k as usize];
    let mut sin_psi = vec![0.0; k as usize];
    cos_eta[k as usize - 1] = (k as f64).sqrt();
    sin_psi[k as usize - 1] = g.sqrt();
    SymmetricPair::from_coefficients(&cos_eta, &sin_psi, trunc)
}

/// Bifurcation speed `c*_k = sqrt(g/k)`.
pub fn bifurcation_speed(k: u32, g: f64) -> f64 {
    (g / k as f64).sqrt()
}

/// The linearization of the traveling-wave map at the flat state:
/// `pair -> (c eta_x + |D| psi, c psi_x - g eta)`.
pub fn linearized_at_zero(
    pair: &SymmetricPair,
    c: f64,
    g: f64,
) -> Result<(PeriodicFunction, PeriodicFunction)> {
    let first = pair.eta.derivative(0).scale(c).add(&pair.psi.abs_d())?;
    let second = pair.psi.derivative(0).scale(c).sub(&pair.eta.scale(g))?;
    Ok((first, second))
}

/// Explicit inverse of the flat-state linearization at the bifurcation
/// speed `c*_k`. Input is a range element `(f, g_rhs)` with `f` odd and
/// `g_rhs` even zero-mean; the mode-`k` solvability condition
/// `sqrt(g) f_k = sqrt(k) g_k` is enforced within `tol` (relative to the
/// data size). Off-kernel modes invert exactly; at mode `k` the returned
/// representative is `eta_k = -f_k / sqrt(k g)`, `psi_k = 0`.
pub fn linearized_inverse_at_zero(
    f_rhs: &PeriodicFunction,
    g_rhs: &PeriodicFunction,
    k: u32,
    g: f64,
    tol: f64,
) -> Result<SymmetricPair> {
    let trunc = f_rhs.trunc().max(g_rhs.trunc());
    if k == 0 || k > trunc {
        return Err(Error::InvalidParameter(format!(
            "base wavenumber k = {k} out of range for K = {trunc}"
        )));
    }
    let kf = k as f64;
    let sqrt_k = kf.sqrt();
    let sqrt_g = g.sqrt();

    let f_sin: Vec<f64> = (1..=trunc as i32)
        .map(|j| -2.0 * f_rhs.coeff(&ModeIndex::d1(j)).im)
        .collect();
    let g_cos: Vec<f64> = (1..=trunc as i32)
        .map(|j| 2.0 * g_rhs.coeff(&ModeIndex::d1(j)).re)
        .collect();

    let scale = f_sin
        .iter()
        .chain(g_cos.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let defect = (sqrt_g * f_sin[k as usize - 1] - sqrt_k * g_cos[k as usize - 1]).abs();
    if defect > tol * scale.max(1.0) {
        return Err(Error::NotInRange { k, defect });
    }

    let mut cos_eta = vec![0.0; trunc as usize];
    let mut sin_psi = vec![0.0; trunc as usize];
    for j in 1..=trunc as usize {
        let (fj, gj) = (f_sin[j - 1], g_cos[j - 1]);
        if j == k as usize {
            cos_eta[j - 1] = -fj / (kf * g).sqrt();
            sin_psi[j - 1] = 0.0;
        } else {
            let jf = j as f64;
            let ratio = sqrt_k / (kf - jf);
            cos_eta[j - 1] = ratio * (sqrt_g * fj - sqrt_k * gj) / g;
            sin_psi[j - 1] = ratio * ((kf * g).sqrt() * fj - jf * gj) / (jf * sqrt_g);
        }
    }
    SymmetricPair::from_coefficients(&cos_eta, &sin_psi, trunc)
}

/// Measures how far `(first, second)` deviates from the (odd, even
/// zero-mean) target parities, relative to `scale` (the size of the input
/// data: near a solution the residual itself is zero by design and its own
/// magnitude cannot normalize the check).
fn parity_defect(first: &PeriodicFunction, second: &PeriodicFunction, scale: f64) -> f64 {
    let scale = scale
        .max(first.max_abs_coeff())
        .max(second.max_abs_coeff())
        .max(1e-300);
    let mut defect = second.mean().abs();
    for (_, c) in first.coeffs() {
        defect = defect.max(c.re.abs());
    }
    for (_, c) in second.coeffs() {
        defect = defect.max(c.im.abs());
    }
    defect / scale
}

/// Memo of the latest flattening coefficients and operator applications;
/// the finite-difference Jacobian re-solves at an unchanged surface once per
/// column otherwise.
#[derive(Default)]
struct DnCache {
    coeffs: Vec<(PeriodicFunction, Rc<FlatteningCoefficients>)>,
    applies: Vec<(
        (PeriodicFunction, PeriodicFunction),
        (PeriodicFunction, DnReport),
    )>,
}

impl DnCache {
    const CAP: usize = 3;

    fn coeffs_for(
        &mut self,
        eta: &PeriodicFunction,
        cfg: &SolverConfig,
    ) -> Result<Rc<FlatteningCoefficients>> {
        if let Some((_, c)) = self.coeffs.iter().find(|(e, _)| e == eta) {
            return Ok(c.clone());
        }
        let c = Rc::new(flattening_coeffs(eta, cfg)?);
        if self.coeffs.len() >= Self::CAP {
            self.coeffs.remove(0);
        }
        self.coeffs.push((eta.clone(), c.clone()));
        Ok(c)
    }

    fn apply(
        &mut self,
        eta: &PeriodicFunction,
        psi: &PeriodicFunction,
        cfg: &SolverConfig,
    ) -> Result<(PeriodicFunction, DnReport)> {
        if let Some((_, out)) = self.applies.iter().find(|((e, p), _)| e == eta && p == psi) {
            return Ok(out.clone());
        }
        let coeffs = self.coeffs_for(eta, cfg)?;
        let out = apply_dn_with(&coeffs, eta, psi, cfg)?;
        if self.applies.len() >= Self::CAP {
            self.applies.remove(0);
        }
        self.applies.push(((eta.clone(), psi.clone()), out.clone()));
        Ok(out)
    }
}

/// One branch problem: base wavenumber, gravity, solver configuration.
pub struct StokesProblem {
    pub wavenumber: u32,
    pub gravity: f64,
    pub cfg: SolverConfig,
    cache: RefCell<DnCache>,
    jacobian_seed: RefCell<Option<DMatrix<f64>>>,
}

/// The traveling-wave residual map. `first` is odd, `second` even with zero
/// mean; both parities are asserted to `1e-11` relative.
pub fn f_map(
    pair: &SymmetricPair,
    c: f64,
    g: f64,
    cfg: &SolverConfig,
) -> Result<(PeriodicFunction, PeriodicFunction)> {
    let mut cache = DnCache::default();
    f_map_cached(pair, c, g, cfg, &mut cache)
}

fn f_map_cached(
    pair: &SymmetricPair,
    c: f64,
    g: f64,
    cfg: &SolverConfig,
    cache: &mut DnCache,
) -> Result<(PeriodicFunction, PeriodicFunction)> {
    let eta = pair.eta().truncate_to(cfg.trunc);
    let psi = pair.psi().truncate_to(cfg.trunc);
    let (g_psi, _) = cache.apply(&eta, &psi, cfg)?;
    assemble_components(&eta, &psi, &g_psi, c, g, cfg)
}

/// Builds the two residual components from `G(eta) psi` and checks parity.
fn assemble_components(
    eta: &PeriodicFunction,
    psi: &PeriodicFunction,
    g_psi: &PeriodicFunction,
    c: f64,
    g: f64,
    cfg: &SolverConfig,
) -> Result<(PeriodicFunction, PeriodicFunction)> {
    let first = eta.derivative(0).scale(c).add(g_psi)?;

    // linear part exactly, quadratic/quotient part pointwise with the
    // de-aliased grid
    let grid = CollocationGrid::for_trunc(1, cfg.trunc)?;
    let psi_x = grid.eval(&psi.derivative(0));
    let eta_x = grid.eval(&eta.derivative(0));
    let g_vals = grid.eval(g_psi);
    let nonlinear: Vec<f64> = (0..grid.len())
        .map(|i| {
            let flux = g_vals[i] + eta_x[i] * psi_x[i];
            -0.5 * psi_x[i] * psi_x[i] + flux * flux / (2.0 * (1.0 + eta_x[i] * eta_x[i]))
        })
        .collect();
    let second = psi
        .derivative(0)
        .scale(c)
        .sub(&eta.scale(g))?
        .add(&grid.project(&nonlinear, cfg.trunc)?)?;

    let data_scale = eta
        .max_abs_coeff()
        .max(psi.max_abs_coeff())
        .max(g_psi.max_abs_coeff());
    let defect = parity_defect(&first, &second, data_scale);
    if defect > 1e-11 {
        return Err(Error::SymmetryViolation(format!(
            "traveling-wave residual parity defect {defect:.3e}"
        )));
    }
    Ok((first, second))
}

/// `sqrt(||first||^2 + ||second||^2)` in `H^{0,1}`.
pub fn residual_norm(first: &PeriodicFunction, second: &PeriodicFunction) -> f64 {
    let p = NormParams::sobolev(1.0);
    first.norm_sigma_s(&p).hypot(second.norm_sigma_s(&p))
}

/// One point of a Stokes branch.
#[derive(Clone, Debug)]
pub struct StokesSolution {
    pub pair: SymmetricPair,
    /// Wave speed.
    pub c: f64,
    /// Amplitude parameter: the projection `<pair, u*> / ||u*||^2`.
    pub epsilon: f64,
    /// `||F(pair, c)||_{H^{0,1}}` recomputed from the stored coefficients.
    pub residual_norm: f64,
    /// Estimated analyticity width of `eta` (0 when too few modes to fit).
    pub sigma_estimate: f64,
    /// Coefficient of determination of the decay fit (0 when unavailable).
    pub sigma_fit_quality: f64,
}

/// A continued branch, ordered by amplitude.
#[derive(Clone, Debug)]
pub struct StokesBranch {
    pub gravity: f64,
    pub wavenumber: u32,
    pub solutions: Vec<StokesSolution>,
}

/// Branch continuation result: on failure the branch holds every point
/// solved before the failure.
pub struct BranchOutcome {
    pub branch: StokesBranch,
    pub failure: Option<Error>,
}

fn unpack_coords(trunc: u32, x: &DVector<f64>) -> Result<(SymmetricPair, f64)> {
    let kk = trunc as usize;
    let pair = SymmetricPair::from_coefficients(
        x.as_slice()[..kk].as_ref(),
        x.as_slice()[kk..2 * kk].as_ref(),
        trunc,
    )?;
    Ok((pair, x[2 * kk]))
}

/// Packs the residual components and the amplitude constraint into the
/// augmented residual vector.
fn residual_vector(
    trunc: u32,
    first: &PeriodicFunction,
    second: &PeriodicFunction,
    pair: &SymmetricPair,
    epsilon: f64,
    kernel: &SymmetricPair,
    kernel_norm_sq: f64,
) -> Result<DVector<f64>> {
    let kk = trunc as usize;
    let mut r = DVector::zeros(2 * kk + 1);
    for j in 1..=kk {
        r[j - 1] = -2.0 * first.coeff(&ModeIndex::d1(j as i32)).im;
        r[kk + j - 1] = 2.0 * second.coeff(&ModeIndex::d1(j as i32)).re;
    }
    r[2 * kk] = pair.inner(kernel)? / kernel_norm_sq - epsilon;
    Ok(r)
}

impl StokesProblem {
    pub fn new(wavenumber: u32, gravity: f64, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.dim != 1 {
            return Err(Error::InvalidParameter(
                "traveling waves are computed in dimension 1".into(),
            ));
        }
        if wavenumber == 0 || wavenumber > cfg.trunc {
            return Err(Error::InvalidParameter(format!(
                "base wavenumber k = {wavenumber} must satisfy 1 <= k <= K = {}",
                cfg.trunc
            )));
        }
        if !(gravity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gravity must be positive, got {gravity}"
            )));
        }
        Ok(StokesProblem {
            wavenumber,
            gravity,
            cfg,
            cache: RefCell::new(DnCache::default()),
            jacobian_seed: RefCell::new(None),
        })
    }

    pub fn f_map(
        &self,
        pair: &SymmetricPair,
        c: f64,
    ) -> Result<(PeriodicFunction, PeriodicFunction)> {
        f_map_cached(
            pair,
            c,
            self.gravity,
            &self.cfg,
            &mut self.cache.borrow_mut(),
        )
    }

    fn kernel(&self) -> Result<SymmetricPair> {
        kernel_vector(self.wavenumber, self.gravity, self.cfg.trunc)
    }

    /// Packs the reduced coordinates: `K` cosine coefficients of `eta`, `K`
    /// sine coefficients of `psi`, then the speed.
    fn pack(&self, pair: &SymmetricPair, c: f64) -> DVector<f64> {
        let kk = self.cfg.trunc as usize;
        let mut x = DVector::zeros(2 * kk + 1);
        for (i, a) in pair.cos_coefficients(kk).into_iter().enumerate() {
            x[i] = a;
        }
        for (i, b) in pair.sin_coefficients(kk).into_iter().enumerate() {
            x[kk + i] = b;
        }
        x[2 * kk] = c;
        x
    }

    fn unpack(&self, x: &DVector<f64>) -> Result<(SymmetricPair, f64)> {
        unpack_coords(self.cfg.trunc, x)
    }

    /// Augmented residual: sine coefficients of the first component, cosine
    /// coefficients of the second, and the amplitude constraint
    /// `<pair, u*>/||u*||^2 - epsilon`.
    fn augmented_residual(
        &self,
        x: &DVector<f64>,
        epsilon: f64,
        kernel: &SymmetricPair,
        kernel_norm_sq: f64,
    ) -> Result<(DVector<f64>, f64)> {
        let (pair, c) = self.unpack(x)?;
        let (first, second) = self.f_map(&pair, c)?;
        let r = residual_vector(
            self.cfg.trunc,
            &first,
            &second,
            &pair,
            epsilon,
            kernel,
            kernel_norm_sq,
        )?;
        Ok((r, residual_norm(&first, &second)))
    }

    /// Forward-difference Jacobian of the augmented residual. Columns are
    /// independent solves and run in parallel; the surface only changes in
    /// the first `K` columns, so the remaining ones share the base
    /// flattening coefficients.
    fn fd_jacobian(
        &self,
        x: &DVector<f64>,
        r0: &DVector<f64>,
        epsilon: f64,
        kernel: &SymmetricPair,
        kernel_norm_sq: f64,
    ) -> Result<DMatrix<f64>> {
        let n = x.len();
        let kk = self.cfg.trunc as usize;
        let (pair0, _) = self.unpack(x)?;
        let eta0 = pair0.eta().truncate_to(self.cfg.trunc);
        let base_coeffs = flattening_coeffs(&eta0, &self.cfg)?;
        let cfg = &self.cfg;
        let gravity = self.gravity;

        let columns: Result<Vec<DVector<f64>>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let h = cfg.fd_step * x[i].abs().max(1.0);
                let mut xp = x.clone();
                xp[i] += h;
                let (pair, c) = unpack_coords(cfg.trunc, &xp)?;
                let eta = pair.eta().truncate_to(cfg.trunc);
                let psi = pair.psi().truncate_to(cfg.trunc);
                let owned;
                let coeffs = if i < kk {
                    owned = flattening_coeffs(&eta, cfg)?;
                    &owned
                } else {
                    &base_coeffs
                };
                let (g_psi, _) = apply_dn_with(coeffs, &eta, &psi, cfg)?;
                let (first, second) = assemble_components(&eta, &psi, &g_psi, c, gravity, cfg)?;
                let ri = residual_vector(
                    cfg.trunc,
                    &first,
                    &second,
                    &pair,
                    epsilon,
                    kernel,
                    kernel_norm_sq,
                )?;
                Ok((ri - r0) / h)
            })
            .collect();
        let columns = columns?;
        Ok(DMatrix::from_columns(&columns))
    }

    /// Solves the augmented system at amplitude `epsilon`. `init` warm-starts
    /// from a neighboring branch point; otherwise the linear predictor
    /// `epsilon u*` at the bifurcation speed is used.
    pub fn newton_solve(
        &self,
        epsilon: f64,
        init: Option<&StokesSolution>,
    ) -> Result<StokesSolution> {
        if epsilon.abs() > self.cfg.eps_cap {
            return Err(Error::InvalidParameter(format!(
                "amplitude {epsilon} exceeds the configured cap {}",
                self.cfg.eps_cap
            )));
        }
        let kernel = self.kernel()?;
        let kernel_norm_sq = kernel.norm_sq();
        let c_star = bifurcation_speed(self.wavenumber, self.gravity);

        if epsilon == 0.0 {
            return Ok(StokesSolution {
                pair: SymmetricPair::zero(self.cfg.trunc),
                c: c_star,
                epsilon,
                residual_norm: 0.0,
                sigma_estimate: 0.0,
                sigma_fit_quality: 0.0,
            });
        }

        let mut x = match init {
            Some(prev) if !prev.pair.is_zero() && prev.epsilon != 0.0 => {
                let scaled = prev.pair.scale(epsilon / prev.epsilon);
                self.pack(&scaled, prev.c)
            }
            _ => self.pack(&kernel.scale(epsilon), c_star),
        };

        let (mut r, mut rnorm) = self.augmented_residual(&x, epsilon, &kernel, kernel_norm_sq)?;
        // A Jacobian carried over from the previous branch point is usually
        // good enough for a warm-started step; it is rebuilt at the current
        // iterate as soon as it stops making progress.
        let mut jacobian: Option<DMatrix<f64>> = self.jacobian_seed.borrow_mut().take();
        let mut jac_fresh = false;
        let mut non_decreasing = 0u32;
        let mut best = rnorm;

        let mut iter = 0;
        while iter < self.cfg.newton_max_iter {
            if rnorm + r[2 * self.cfg.trunc as usize].abs() < self.cfg.stokes_tol {
                *self.jacobian_seed.borrow_mut() = jacobian;
                return self.finish_solution(&x, epsilon);
            }
            if jacobian.is_none() {
                jacobian = Some(self.fd_jacobian(&x, &r, epsilon, &kernel, kernel_norm_sq)?);
                jac_fresh = true;
            }
            let lu = jacobian.as_ref().unwrap().clone().lu();
            let step = lu.solve(&(-&r)).ok_or(Error::NewtonDivergence {
                residual: rnorm,
                iterations: iter,
            })?;
            let x_new = &x + &step;
            let (rn, rnn) = self.augmented_residual(&x_new, epsilon, &kernel, kernel_norm_sq)?;
            iter += 1;
            if rnn >= best && !jac_fresh {
                // the carried Jacobian made things worse: rebuild and retry
                jacobian = None;
                continue;
            }
            if rnn >= best {
                non_decreasing += 1;
                if non_decreasing >= 3 {
                    return Err(Error::NewtonDivergence {
                        residual: rnn,
                        iterations: iter,
                    });
                }
            } else {
                non_decreasing = 0;
                best = rnn;
            }
            // refresh once progress slows below quadratic-ish decay
            if rnn > 0.25 * rnorm && rnn >= self.cfg.stokes_tol {
                jacobian = None;
                jac_fresh = false;
            }
            x = x_new;
            r = rn;
            rnorm = rnn;
        }
        if rnorm + r[2 * self.cfg.trunc as usize].abs() < self.cfg.stokes_tol {
            *self.jacobian_seed.borrow_mut() = jacobian;
            return self.finish_solution(&x, epsilon);
        }
        Err(Error::NewtonDivergence {
            residual: rnorm,
            iterations: self.cfg.newton_max_iter,
        })
    }

    /// Recomputes the residual from the stored coefficients and attaches the
    /// analyticity diagnostics.
    fn finish_solution(&self, x: &DVector<f64>, epsilon: f64) -> Result<StokesSolution> {
        let (pair, c) = self.unpack(x)?;
        let (first, second) = self.f_map(&pair, c)?;
        let rnorm = residual_norm(&first, &second);
        let (sigma_estimate, sigma_fit_quality) = match estimate_sigma(pair.eta()) {
            Ok((s, q)) => (s, q),
            Err(Error::TooFewModes(_)) => (0.0, 0.0),
            Err(e) => return Err(e),
        };
        Ok(StokesSolution {
            pair,
            c,
            epsilon,
            residual_norm: rnorm,
            sigma_estimate,
            sigma_fit_quality,
        })
    }

    /// Marches the branch `epsilon = 0, step, 2 step, ..., eps_max` with warm
    /// starts. On failure the points solved so far are returned together
    /// with the error.
    pub fn continue_branch(&self, eps_max: f64, eps_step: f64) -> Result<BranchOutcome> {
        if !(eps_step > 0.0) || eps_max < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "need eps_step > 0 and eps_max >= 0, got {eps_step}, {eps_max}"
            )));
        }
        let steps = (eps_max / eps_step + 0.5).floor() as usize;
        let mut branch = StokesBranch {
            gravity: self.gravity,
            wavenumber: self.wavenumber,
            solutions: Vec::with_capacity(steps + 1),
        };
        let mut failure = None;
        for i in 0..=steps {
            let epsilon = i as f64 * eps_step;
            let init = branch.solutions.last();
            match self.newton_solve(epsilon, init) {
                Ok(sol) => branch.solutions.push(sol),
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        Ok(BranchOutcome { branch, failure })
    }
}

/// Least-squares decay-rate fit: the slope of `log |u_k|` against `|k|`
/// over the modes above the absolute noise floor `1e-14`. Returns
/// `(sigma_estimate, fit_quality)` with `sigma_estimate = -slope` and
/// `fit_quality` the coefficient of determination.
pub fn estimate_sigma(u: &PeriodicFunction) -> Result<(f64, f64)> {
    const NOISE_FLOOR: f64 = 1e-14;
    let mut points = Vec::new();
    for j in 1..=u.trunc() as i32 {
        let m = u.coeff(&ModeIndex::d1(j)).norm();
        if m > NOISE_FLOOR {
            points.push((j as f64, m.ln()));
        }
    }
    if points.len() < 6 {
        return Err(Error::TooFewModes(points.len()));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let quality = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok((-slope, quality))
}

/// Polynomial least-squares fit of one scalar observable against epsilon.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyFit {
    /// Coefficients in increasing degree.
    pub coeffs: Vec<f64>,
    /// Root-mean-square fit residual.
    pub residual: f64,
    /// Condition number of the scaled Vandermonde matrix.
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// Taylor-coefficient diagnostics of a branch: fits of the speed and of the
/// leading Fourier coefficients against the amplitude.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaylorFit {
    pub order: usize,
    pub c: PolyFit,
    /// `(mode, fit)` for the eta cosine coefficients, modes 1..=3.
    pub eta_modes: Vec<(u32, PolyFit)>,
    /// `(mode, fit)` for the psi sine coefficients, modes 1..=3.
    pub psi_modes: Vec<(u32, PolyFit)>,
}

fn poly_fit(xs: &[f64], ys: &[f64], order: usize) -> PolyFit {
    let n = xs.len();
    let scale = xs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut vander = DMatrix::zeros(n, order + 1);
    for (i, &x) in xs.iter().enumerate() {
        let t = x / scale;
        let mut p = 1.0;
        for j in 0..=order {
            vander[(i, j)] = p;
            p *= t;
        }
    }
    let b = DVector::from_column_slice(ys);
    let svd = vander.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    let sol = svd
        .solve(&b, smax * 1e-15)
        .expect("SVD least squares is unconditionally solvable");
    let residual = ((&vander * &sol - &b).norm_squared() / n as f64).sqrt();
    let coeffs = sol
        .iter()
        .enumerate()
        .map(|(j, v)| v / scale.powi(j as i32))
        .collect();
    PolyFit {
        coeffs,
        residual,
        condition,
        ill_conditioned: condition > 1e10,
    }
}

/// Fits `c_epsilon` and the leading Fourier coefficients of the branch
/// against epsilon with polynomials of the given order. Needs at least
/// `order + 2` branch points; an ill-conditioned fit is flagged, not fatal.
pub fn taylor_fit(branch: &StokesBranch, order: usize) -> Result<TaylorFit> {
    if branch.solutions.len() < order + 2 {
        return Err(Error::InvalidParameter(format!(
            "taylor fit of order {order} needs at least {} branch points, got {}",
            order + 2,
            branch.solutions.len()
        )));
    }
    let xs: Vec<f64> = branch.solutions.iter().map(|s| s.epsilon).collect();
    let cs: Vec<f64> = branch.solutions.iter().map(|s| s.c).collect();
    let c = poly_fit(&xs, &cs, order);
    let max_mode = 3.min(branch.solutions[0].pair.trunc());
    let mut eta_modes = Vec::new();
    let mut psi_modes = Vec::new();
    for mode in 1..=max_mode {
        let ys: Vec<f64> = branch
            .solutions
            .iter()
            .map(|s| s.pair.cos_coefficients(mode as usize)[mode as usize - 1])
            .collect();
        eta_modes.push((mode, poly_fit(&xs, &ys, order)));
        let ys: Vec<f64> = branch
            .solutions
            .iter()
            .map(|s| s.pair.sin_coefficients(mode as usize)[mode as usize - 1])
            .collect();
        psi_modes.push((mode, poly_fit(&xs, &ys, order)));
    }
    Ok(TaylorFit {
        order,
        c,
        eta_modes,
        psi_modes,
    })
}
