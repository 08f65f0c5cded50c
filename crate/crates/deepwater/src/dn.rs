//! The Dirichlet-Neumann operator `G(eta)` by domain flattening.
//!
//! The change of variables `y -> y + e^{y|D|} eta(x)` straightens the free
//! surface; the transformed potential solves the perturbed problem
//! `Delta_{x,y} phi = F(eta)[phi]` with
//! `F(eta) = alpha dy^2 + beta Delta + gamma . grad dy + delta dy`,
//! inverted here by the contractive fixed point
//! `u_{n+1} = L(F(eta)[phi_0 + u_n])` around the harmonic lift
//! `phi_0 = e^{y|D|} psi`. The boundary assembly splits
//! `G = G_1 + G_2 + G_3` with `G_1 = -grad eta . grad psi`,
//! `G_2 = trace(dy Pi phi)` and `G_3 = f(eta) G_2`, where `f(eta)` is the
//! multiplication operator `(|grad eta|^2 - |D|eta) / (1 + |D|eta)`
//! evaluated pointwise on the collocation grid.
//!
//! [`dn_oracle_manufactured`] provides the implementation-independent check:
//! exact Neumann data of an explicitly known harmonic potential, evaluated
//! directly on the curved boundary.

use num_complex::Complex64;

use crate::analytic::{ModeIndex, NormParams, PeriodicFunction};
use crate::collocation::CollocationGrid;
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::halfspace::{lift_harmonic, HalfCylinderFunction, WeightedNormParams};
use crate::poisson::solve_poisson_with;

/// Coefficients of the flattened elliptic operator, plus the guard and
/// series-truncation diagnostics recorded while assembling them.
#[derive(Clone, Debug)]
pub struct FlatteningCoefficients {
    pub alpha: HalfCylinderFunction,
    pub beta: HalfCylinderFunction,
    pub gamma: Vec<HalfCylinderFunction>,
    pub delta: HalfCylinderFunction,
    /// Number of terms taken in the `1/(dy rho)` geometric series.
    pub series_terms: u32,
    /// Max coefficient of the first dropped series term.
    pub series_residual: f64,
    /// `sup_x |(|D| eta)(x)|` at the surface.
    pub guard_sup: f64,
    dim: u8,
    trunc: u32,
    flat: bool,
}

impl FlatteningCoefficients {
    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    /// True when the surface is flat (all coefficients vanish).
    pub fn is_flat(&self) -> bool {
        self.flat
    }

    /// Applies the perturbation operator `F(eta)[phi] = alpha dy^2 phi +
    /// beta Delta phi + gamma . grad dy phi + delta dy phi`.
    /// Every summand differentiates `phi` in depth at least once through a
    /// coefficient with zero constant part, so the output constant part is
    /// structurally zero.
    pub fn apply(
        &self,
        phi: &HalfCylinderFunction,
        cfg: &SolverConfig,
    ) -> Result<HalfCylinderFunction> {
        self.apply_with_floor(phi, cfg, 0.0)
    }

    /// `apply` with an absolute coefficient floor: terms below `floor` are
    /// dropped before the cap check. The fixed point passes the scale of its
    /// boundary data here so insignificant high-mode terms cannot pile up.
    pub(crate) fn apply_with_floor(
        &self,
        phi: &HalfCylinderFunction,
        cfg: &SolverConfig,
        floor: f64,
    ) -> Result<HalfCylinderFunction> {
        if self.flat {
            return Ok(HalfCylinderFunction::zero(self.dim, self.trunc));
        }
        let phi_y = phi.dy();
        let mut out = self.alpha.multiply(&phi_y.dy())?;
        out = out.add(&self.beta.multiply(&phi.laplacian_x())?)?;
        for (j, gamma_j) in self.gamma.iter().enumerate() {
            out = out.add(&gamma_j.multiply(&phi_y.dx(j))?)?;
        }
        out = out.add(&self.delta.multiply(&phi_y)?)?;
        let out = out.normalize(cfg.merge_tol, cfg.prune_tol).prune_abs(floor);
        out.check_term_cap(cfg.term_cap)?;
        Ok(out)
    }
}

/// Evaluates `sup_x |(|D| eta)(x)|` on the de-aliased grid and enforces the
/// diffeomorphism guard.
fn check_guard(eta: &PeriodicFunction, cfg: &SolverConfig) -> Result<f64> {
    let grid = CollocationGrid::for_trunc(eta.dim(), cfg.trunc)?;
    let sup = grid
        .eval(&eta.abs_d())
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if sup >= cfg.eta_guard {
        return Err(Error::GuardViolation {
            sup,
            guard: cfg.eta_guard,
        });
    }
    Ok(sup)
}

/// Builds the flattening coefficients of the surface `eta`:
/// `beta = -e^{y|D|}|D| eta` and `gamma_j = 2 e^{y|D|} d_j eta` exactly,
/// `alpha` and `delta` through the geometric series for `1/(dy rho)`,
/// truncated when the latest term's max coefficient falls below
/// `series_tol` relative to the leading one.
pub fn flattening_coeffs(
    eta: &PeriodicFunction,
    cfg: &SolverConfig,
) -> Result<FlatteningCoefficients> {
    cfg.validate()?;
    if eta.dim() != cfg.dim {
        return Err(Error::DimensionMismatch(cfg.dim, eta.dim()));
    }
    let dim = eta.dim();
    let trunc = cfg.trunc;
    let eta = eta.truncate_to(trunc);
    let guard_sup = check_guard(&eta, cfg)?;

    // b = e^{y|D|} |D| eta, the deviation of dy rho from 1
    let b = lift_harmonic(&eta.abs_d());
    let grads: Vec<HalfCylinderFunction> = (0..dim as usize)
        .map(|j| lift_harmonic(&eta.derivative(j)))
        .collect();

    if b.is_zero() && grads.iter().all(|g| g.is_zero()) {
        let zero = HalfCylinderFunction::zero(dim, trunc);
        return Ok(FlatteningCoefficients {
            alpha: zero.clone(),
            beta: zero.clone(),
            gamma: vec![zero.clone(); dim as usize],
            delta: zero,
            series_terms: 0,
            series_residual: 0.0,
            guard_sup,
            dim,
            trunc,
            flat: true,
        });
    }

    // s = 1 - 1/(dy rho) = b - b^2 + b^3 - ... ; truncated geometric series
    let lead = b.max_abs_coeff();
    let floor = cfg.prune_tol * lead;
    let mut series = b.clone();
    let mut term = b.clone();
    let mut series_terms = 1u32;
    let mut last_max = lead;
    let mut non_decreasing = 0u32;
    let series_residual;
    loop {
        term = term
            .multiply(&b)?
            .scale(-1.0)
            .normalize(cfg.merge_tol, cfg.prune_tol)
            .prune_abs(floor);
        term.check_term_cap(cfg.term_cap)?;
        let tmax = term.max_abs_coeff();
        if tmax < cfg.series_tol * lead.max(1e-300) {
            series_residual = tmax;
            break;
        }
        if tmax >= last_max {
            non_decreasing += 1;
            if non_decreasing >= 5 {
                return Err(Error::SeriesDivergence(non_decreasing));
            }
        } else {
            non_decreasing = 0;
        }
        series = series.add(&term)?;
        series_terms += 1;
        last_max = tmax;
        if series_terms > 4000 {
            return Err(Error::SeriesDivergence(series_terms));
        }
    }
    let series = series.normalize(cfg.merge_tol, cfg.prune_tol);

    // 1/(dy rho) = 1 - s
    let inv_dyrho = HalfCylinderFunction::constant_fn(dim, trunc, 1.0).sub(&series)?;

    // |grad rho|^2 = sum_j (e^{y|D|} d_j eta)^2
    let mut grad_sq = HalfCylinderFunction::zero(dim, trunc);
    for g in &grads {
        grad_sq = grad_sq.add(&g.multiply(g)?)?;
    }
    let grad_sq = grad_sq
        .normalize(cfg.merge_tol, cfg.prune_tol)
        .prune_abs(floor);

    // alpha = (b - |grad rho|^2) / (1 + b)
    let alpha = b
        .sub(&grad_sq)?
        .multiply(&inv_dyrho)?
        .normalize(cfg.merge_tol, cfg.prune_tol)
        .prune_abs(floor);
    alpha.check_term_cap(cfg.term_cap)?;

    let beta = b.scale(-1.0);
    let gamma: Vec<HalfCylinderFunction> = grads.iter().map(|g| g.scale(2.0)).collect();

    // delta = (1/dy rho) (-2 grad rho . grad dy rho + dy rho Delta rho
    //          + (1 + |grad rho|^2)/(dy rho) dy^2 rho)
    let lap_eta_lift = lift_harmonic(&eta.fourier_multiplier(|k| {
        let e = k.euclid();
        Complex64::new(-e * e, 0.0)
    }));
    let dyy_rho = b.dy();
    let mut t1 = HalfCylinderFunction::zero(dim, trunc);
    for (j, g) in grads.iter().enumerate() {
        t1 = t1.add(&g.multiply(&b.dx(j))?)?;
    }
    t1 = t1.scale(-2.0);
    let dyrho = HalfCylinderFunction::constant_fn(dim, trunc, 1.0).add(&b)?;
    let t2 = dyrho.multiply(&lap_eta_lift)?;
    let t3 = inv_dyrho
        .multiply(&HalfCylinderFunction::constant_fn(dim, trunc, 1.0).add(&grad_sq)?)?
        .multiply(&dyy_rho)?;
    let delta = inv_dyrho
        .multiply(&t1.add(&t2)?.add(&t3)?)?
        .normalize(cfg.merge_tol, cfg.prune_tol)
        .prune_abs(floor);
    delta.check_term_cap(cfg.term_cap)?;

    Ok(FlatteningCoefficients {
        alpha,
        beta,
        gamma,
        delta,
        series_terms,
        series_residual,
        guard_sup,
        dim,
        trunc,
        flat: false,
    })
}

/// Convergence diagnostics of the elliptic fixed point.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SolveReport {
    pub iterations: u32,
    /// Consecutive increment-norm ratios.
    pub contraction_ratios: Vec<f64>,
    /// `||Delta phi - F(eta)[phi]||` relative to `||phi_0||`, evaluated in
    /// the algebra.
    pub residual_rel: f64,
    pub phi0_norm: f64,
    /// Largest polynomial degree reached in the potential (resonant
    /// integrations raise it; recorded to watch the representation grow).
    pub max_profile_degree: u32,
}

impl SolveReport {
    /// Leading contraction ratio (the cleanest `O(||eta||)` observable).
    pub fn first_ratio(&self) -> Option<f64> {
        self.contraction_ratios.first().copied()
    }
}

/// Solves the transformed elliptic problem for the potential `phi` with
/// `phi(x, 0) = psi`: sets `phi_0 = e^{y|D|} psi` and iterates
/// `u_{n+1} = L(F(eta)[phi_0 + u_n])` until the increment falls below
/// `neumann_tol * ||phi_0||`.
pub fn solve_transformed(
    eta: &PeriodicFunction,
    psi: &PeriodicFunction,
    cfg: &SolverConfig,
) -> Result<(HalfCylinderFunction, SolveReport)> {
    let coeffs = flattening_coeffs(eta, cfg)?;
    solve_transformed_with(&coeffs, psi, cfg)
}

pub fn solve_transformed_with(
    coeffs: &FlatteningCoefficients,
    psi: &PeriodicFunction,
    cfg: &SolverConfig,
) -> Result<(HalfCylinderFunction, SolveReport)> {
    if psi.dim() != coeffs.dim {
        return Err(Error::DimensionMismatch(coeffs.dim, psi.dim()));
    }
    let norm_params = WeightedNormParams::new(0.0, 1, cfg.depth_weight)?;
    let phi0 = lift_harmonic(&psi.truncate_to(cfg.trunc));
    let phi0_norm = phi0.norm_sigma_s_a(&norm_params)?;

    let done = |iterations, ratios: Vec<f64>, residual_rel, max_profile_degree| SolveReport {
        iterations,
        contraction_ratios: ratios,
        residual_rel,
        phi0_norm,
        max_profile_degree,
    };

    if coeffs.is_flat() || phi0_norm == 0.0 {
        return Ok((phi0, done(0, Vec::new(), 0.0, 0)));
    }
    let floor = cfg.prune_tol * phi0.max_abs_coeff();

    let f0 = coeffs.apply_with_floor(&phi0, cfg, floor)?;
    if f0.is_zero() {
        // e.g. constant boundary data: the lift is already the solution
        return Ok((phi0, done(0, Vec::new(), 0.0, 0)));
    }

    let mut u = HalfCylinderFunction::zero(coeffs.dim, coeffs.trunc);
    let mut increment = solve_poisson_with(&f0, cfg.merge_tol)?
        .normalize(cfg.merge_tol, cfg.prune_tol)
        .prune_abs(floor);
    let mut ratios = Vec::new();
    let mut prev_norm = f64::NAN;
    let mut non_contracting = 0u32;
    let mut iterations = 0u32;

    loop {
        iterations += 1;
        let inc_norm = increment.norm_sigma_s_a(&norm_params)?;
        u = u.add(&increment)?;
        if prev_norm.is_finite() && prev_norm > 0.0 {
            let ratio = inc_norm / prev_norm;
            ratios.push(ratio);
            if ratio >= 1.0 {
                non_contracting += 1;
                if non_contracting >= 3 {
                    return Err(Error::NoContraction { ratio, iterations });
                }
            } else {
                non_contracting = 0;
            }
        }
        prev_norm = inc_norm;
        if inc_norm <= cfg.neumann_tol * phi0_norm {
            break;
        }
        if iterations >= cfg.neumann_max_iter {
            return Err(Error::NoContraction {
                ratio: ratios.last().copied().unwrap_or(f64::NAN),
                iterations,
            });
        }
        let forced = coeffs.apply_with_floor(&increment, cfg, floor)?;
        increment = solve_poisson_with(&forced, cfg.merge_tol)?
            .normalize(cfg.merge_tol, cfg.prune_tol)
            .prune_abs(floor);
        increment.check_term_cap(cfg.term_cap)?;
    }

    let phi = phi0.add(&u)?;
    // Delta phi_N - F[phi_N] = -F[last increment]: the lift and L are exact
    // in the representation, so the residual is the final forcing mismatch.
    let tail = coeffs.apply_with_floor(&increment, cfg, floor)?;
    let residual_rel = tail.norm_sigma_s_a(&norm_params)? / phi0_norm;
    let max_degree = phi.max_degree();
    Ok((phi, done(iterations, ratios, residual_rel, max_degree)))
}

/// Full report of one Dirichlet-Neumann application.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DnReport {
    pub iterations: u32,
    pub contraction_ratios: Vec<f64>,
    pub residual_rel: f64,
    pub phi0_norm: f64,
    pub max_profile_degree: u32,
    /// `sup_x |(|D| eta)(x)|`; the guard requires this below `eta_guard`.
    pub guard_sup: f64,
    pub guard_margin: f64,
    pub series_terms: u32,
    pub series_residual: f64,
}

/// `G(eta) psi`, re-projected to the configured truncation.
pub fn apply_dn(
    eta: &PeriodicFunction,
    psi: &PeriodicFunction,
    cfg: &SolverConfig,
) -> Result<(PeriodicFunction, DnReport)> {
    let coeffs = flattening_coeffs(eta, cfg)?;
    apply_dn_with(&coeffs, eta, psi, cfg)
}

pub fn apply_dn_with(
    coeffs: &FlatteningCoefficients,
    eta: &PeriodicFunction,
    psi: &PeriodicFunction,
    cfg: &SolverConfig,
) -> Result<(PeriodicFunction, DnReport)> {
    let eta = eta.truncate_to(cfg.trunc);
    let psi = psi.truncate_to(cfg.trunc);
    let (phi, solve) = solve_transformed_with(coeffs, &psi, cfg)?;

    // G_2 = trace(dy Pi phi)
    let g2 = phi.pi().dy().trace();

    // G_1 = -grad eta . grad psi (exact convolution, clipped to K)
    let mut g1 = PeriodicFunction::zero(eta.dim(), cfg.trunc);
    for j in 0..eta.dim() as usize {
        g1 = g1.add(&eta.derivative(j).product(&psi.derivative(j))?)?;
    }
    let g1 = g1.scale(-1.0);

    // G_3 = f(eta) G_2 pointwise, f = (|grad eta|^2 - |D|eta)/(1 + |D|eta);
    // the guard keeps the denominator positive
    let g3 = if coeffs.is_flat() {
        PeriodicFunction::zero(eta.dim(), cfg.trunc)
    } else {
        let grid = CollocationGrid::for_trunc(eta.dim(), cfg.trunc)?;
        let abs_eta = grid.eval(&eta.abs_d());
        let mut grad_sq = vec![0.0; grid.len()];
        for j in 0..eta.dim() as usize {
            for (acc, v) in grad_sq.iter_mut().zip(grid.eval(&eta.derivative(j))) {
                *acc += v * v;
            }
        }
        let g2_vals = grid.eval(&g2);
        let vals: Vec<f64> = grad_sq
            .iter()
            .zip(&abs_eta)
            .zip(&g2_vals)
            .map(|((gs, ae), g2v)| (gs - ae) / (1.0 + ae) * g2v)
            .collect();
        grid.project(&vals, cfg.trunc)?
    };

    // re-symmetrize: the half-space convolutions leave rounding-level
    // asymmetry at the zero mode
    let raw = g1.add(&g2)?.add(&g3)?.truncate_to(cfg.trunc);
    let g =
        PeriodicFunction::from_coeffs(raw.dim(), raw.trunc(), raw.coeffs().map(|(k, c)| (*k, *c)))?;
    let report = DnReport {
        iterations: solve.iterations,
        contraction_ratios: solve.contraction_ratios.clone(),
        residual_rel: solve.residual_rel,
        phi0_norm: solve.phi0_norm,
        max_profile_degree: solve.max_profile_degree,
        guard_sup: coeffs.guard_sup,
        guard_margin: cfg.eta_guard - coeffs.guard_sup,
        series_terms: coeffs.series_terms,
        series_residual: coeffs.series_residual,
    };
    Ok((g, report))
}

/// Manufactured-solution oracle, independent of the flattening pipeline.
///
/// `harmonic` holds the coefficients `c_k` of the decaying harmonic
/// potential `Phi(x, y) = sum_k c_k e^{|k| y} e^{i k.x}`. The boundary data
/// `psi(x) = Phi(x, eta(x))` and the exact Neumann data
/// `g(x) = dy Phi(x, eta(x)) - grad eta . grad Phi(x, eta(x))`
/// are evaluated pointwise on the grid and projected to the truncation.
pub fn dn_oracle_manufactured(
    harmonic: &PeriodicFunction,
    eta: &PeriodicFunction,
    cfg: &SolverConfig,
) -> Result<(PeriodicFunction, PeriodicFunction)> {
    if harmonic.dim() != eta.dim() {
        return Err(Error::DimensionMismatch(harmonic.dim(), eta.dim()));
    }
    let dim = eta.dim();
    let grid = CollocationGrid::for_trunc(dim, cfg.trunc)?;
    let eta_vals = grid.eval(eta);
    let mut grad_eta = Vec::with_capacity(dim as usize);
    for j in 0..dim as usize {
        grad_eta.push(grid.eval(&eta.derivative(j)));
    }

    let mut psi_vals = vec![0.0; grid.len()];
    let mut g_vals = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        let x = grid.point(i);
        let y = eta_vals[i];
        let mut phi = Complex64::ZERO;
        let mut phi_y = Complex64::ZERO;
        let mut phi_x = [Complex64::ZERO; 2];
        for (k, c) in harmonic.coeffs() {
            let radial = k.euclid();
            let phase: f64 = k
                .comps()
                .iter()
                .zip(x.iter())
                .map(|(&ki, &xi)| ki as f64 * xi)
                .sum();
            let w = c * (radial * y).exp() * Complex64::from_polar(1.0, phase);
            phi += w;
            phi_y += w * radial;
            for j in 0..dim as usize {
                phi_x[j] += w * Complex64::new(0.0, k.component(j) as f64);
            }
        }
        psi_vals[i] = phi.re;
        let mut g = phi_y.re;
        for j in 0..dim as usize {
            g -= grad_eta[j][i] * phi_x[j].re;
        }
        g_vals[i] = g;
    }
    Ok((
        grid.project(&psi_vals, cfg.trunc)?,
        grid.project(&g_vals, cfg.trunc)?,
    ))
}

/// Signed discrepancies of the classical algebraic identities of `G(eta)`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct VerifyReport {
    /// `(G psi_1, psi_2) - (psi_1, G psi_2)`.
    pub self_adjointness: f64,
    /// `(G psi_1, psi_1)`; nonnegative up to solver noise.
    pub quadratic_form: f64,
    /// `|| tau_theta G(eta) psi - G(tau_theta eta) tau_theta psi ||_{L^2}`.
    pub translation: f64,
    /// `|| (G(eta) psi)(-x) - G(eta(-x)) psi(-x) ||_{L^2}`.
    pub reflection: f64,
    /// `|| G(eta + m) psi - G(eta) psi ||_{L^2}`.
    pub vertical_shift: f64,
    /// Mean of `G(eta) psi`.
    pub mean: f64,
    /// Mean of the Bernoulli expression
    /// `-|grad psi|^2/2 + (G psi + grad eta . grad psi)^2 / (2(1+|grad eta|^2))`.
    pub bernoulli_mean: f64,
    /// `|| G(eta) 1 ||_{L^2}`.
    pub constant_output: f64,
}

impl VerifyReport {
    /// Largest absolute discrepancy.
    pub fn max_discrepancy(&self) -> f64 {
        [
            self.self_adjointness.abs(),
            (-self.quadratic_form).max(0.0),
            self.translation,
            self.reflection,
            self.vertical_shift,
            self.mean.abs(),
            self.bernoulli_mean.abs(),
            self.constant_output,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Runs the invariance suite at surface `eta` with test data `psi_1, psi_2`,
/// translation `theta` and vertical shift `m`.
pub fn verify_suite(
    eta: &PeriodicFunction,
    psi1: &PeriodicFunction,
    psi2: &PeriodicFunction,
    theta: &[f64],
    m: f64,
    cfg: &SolverConfig,
) -> Result<VerifyReport> {
    let l2 = NormParams::sobolev(0.0);
    let coeffs = flattening_coeffs(eta, cfg)?;
    let (g_psi1, _) = apply_dn_with(&coeffs, eta, psi1, cfg)?;
    let (g_psi2, _) = apply_dn_with(&coeffs, eta, psi2, cfg)?;

    let self_adjointness = g_psi1.l2_inner(psi2)? - psi1.l2_inner(&g_psi2)?;
    let quadratic_form = g_psi1.l2_inner(psi1)?;

    let (g_shifted, _) = apply_dn(&eta.translate(theta), &psi1.translate(theta), cfg)?;
    let translation = g_psi1.translate(theta).sub(&g_shifted)?.norm_sigma_s(&l2);

    let (g_reflected, _) = apply_dn(&eta.reflect(), &psi1.reflect(), cfg)?;
    let reflection = g_psi1.reflect().sub(&g_reflected)?.norm_sigma_s(&l2);

    let lifted_eta = eta.add(&PeriodicFunction::constant(eta.dim(), eta.trunc(), m))?;
    let (g_lifted, _) = apply_dn(&lifted_eta, psi1, cfg)?;
    let vertical_shift = g_psi1.sub(&g_lifted)?.norm_sigma_s(&l2);

    let mean = g_psi1.mean();

    // Bernoulli expression on the grid
    let grid = CollocationGrid::for_trunc(eta.dim(), cfg.trunc)?;
    let g_vals = grid.eval(&g_psi1);
    let mut grad_psi_sq = vec![0.0; grid.len()];
    let mut grad_dot = vec![0.0; grid.len()];
    let mut grad_eta_sq = vec![0.0; grid.len()];
    for j in 0..eta.dim() as usize {
        let pj = grid.eval(&psi1.derivative(j));
        let ej = grid.eval(&eta.derivative(j));
        for i in 0..grid.len() {
            grad_psi_sq[i] += pj[i] * pj[i];
            grad_dot[i] += pj[i] * ej[i];
            grad_eta_sq[i] += ej[i] * ej[i];
        }
    }
    let bernoulli_mean = (0..grid.len())
        .map(|i| {
            let flux = g_vals[i] + grad_dot[i];
            -0.5 * grad_psi_sq[i] + flux * flux / (2.0 * (1.0 + grad_eta_sq[i]))
        })
        .sum::<f64>()
        / grid.len() as f64;

    let one = PeriodicFunction::constant(eta.dim(), cfg.trunc, 1.0);
    let (g_one, _) = apply_dn_with(&coeffs, eta, &one, cfg)?;
    let constant_output = g_one.norm_sigma_s(&l2);

    Ok(VerifyReport {
        self_adjointness,
        quadratic_form,
        translation,
        reflection,
        vertical_shift,
        mean,
        bernoulli_mean,
        constant_output,
    })
}

/// Runs [`verify_suite`] on reproducible seeded test data: two random
/// boundary functions with decaying coefficients, a grid-commensurate
/// translation and a random vertical shift.
pub fn seeded_suite(eta: &PeriodicFunction, seed: u64, cfg: &SolverConfig) -> Result<VerifyReport> {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let radius = 8.min(cfg.trunc);
    let mut draw = || -> Result<PeriodicFunction> {
        let mut entries = Vec::new();
        match cfg.dim {
            1 => {
                for k in 1..=radius as i32 {
                    let c =
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                            * 0.5f64.powi(k);
                    entries.push((ModeIndex::d1(k), c));
                }
            }
            _ => {
                let r = radius as i32;
                for k1 in -r..=r {
                    for k2 in -r..=r {
                        let m = ModeIndex::d2(k1, k2);
                        if !m.is_lex_nonneg() || m.is_zero() {
                            continue;
                        }
                        let c = Complex64::new(
                            rng.random_range(-1.0..1.0),
                            rng.random_range(-1.0..1.0),
                        ) * 0.5f64.powf(m.l1() as f64);
                        entries.push((m, c));
                    }
                }
            }
        }
        PeriodicFunction::from_coeffs(cfg.dim, cfg.trunc, entries)
    };
    let psi1 = draw()?;
    let psi2 = draw()?;
    let n = CollocationGrid::for_trunc(cfg.dim, cfg.trunc)?.points_per_dim();
    let theta: Vec<f64> = (0..cfg.dim)
        .map(|_| 2.0 * std::f64::consts::PI * rng.random_range(1..n as u32) as f64 / n as f64)
        .collect();
    let shift = rng.random_range(-1.0..1.0);
    verify_suite(eta, &psi1, &psi2, &theta, shift, cfg)
}

/// Tame-estimate diagnostic: the ratio
/// `||G(eta) psi||_{sigma,s-1} / (||psi||_{sigma,s}
///  + ||eta||_{sigma,s} ||psi||_{sigma,s0+3/2})`.
pub fn dn_tame_ratio(
    eta: &PeriodicFunction,
    psi: &PeriodicFunction,
    sigma: f64,
    s: f64,
    s0: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let (g, _) = apply_dn(eta, psi, cfg)?;
    let num = g.norm_sigma_s(&NormParams::new(sigma, s - 1.0)?);
    let den = psi.norm_sigma_s(&NormParams::new(sigma, s)?)
        + eta.norm_sigma_s(&NormParams::new(sigma, s)?)
            * psi.norm_sigma_s(&NormParams::new(sigma, s0 + 1.5)?);
    Ok(if den == 0.0 { 0.0 } else { num / den })
}
