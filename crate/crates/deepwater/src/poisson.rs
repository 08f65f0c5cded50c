//! Closed-form solver for the flat half-cylinder Poisson problem
//! `Delta_{x,y} u = g`, `u(x, 0) = 0`, `dy u -> 0`, one Fourier mode at a
//! time via the causal/anticausal exponential integral operators
//!
//! `(T_lambda p)(y) = int_{-inf}^y e^{lambda (z - y)} p(z) dz`,
//! `(Ttilde_lambda p)(y) = int_y^0 e^{lambda (y - z)} p(z) dz`.
//!
//! On the exponential-polynomial class both operators evaluate exactly by
//! iterated integration by parts, so the solver residual is zero in the
//! representation.

use num_complex::Complex64;

use crate::analytic::ModeIndex;
use crate::error::{Error, Result};
use crate::halfspace::{ExpPolyProfile, HalfCylinderFunction, ProfileTerm};

/// Coefficients of the polynomial `P` with `nu P + P' = y^q`, i.e. the
/// antiderivative `int y^q e^{nu y} dy = e^{nu y} P(y)`. Requires `nu != 0`.
fn antiderivative_poly(q: u32, nu: f64) -> Vec<f64> {
    let mut a = vec![0.0; q as usize + 1];
    a[q as usize] = 1.0 / nu;
    for i in (0..q as usize).rev() {
        a[i] = -((i + 1) as f64) * a[i + 1] / nu;
    }
    a
}

/// `T_lambda` on a profile: each term `c y^q e^{mu z}` maps to
/// `c e^{mu y} P(y)` with `P` the antiderivative polynomial at rate
/// `nu = lambda + mu`. Output rates coincide with the input rates.
pub fn t_lambda(p: &ExpPolyProfile, lambda: f64) -> Result<ExpPolyProfile> {
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "t_lambda needs lambda >= 0, got {lambda}"
        )));
    }
    let mut terms = Vec::new();
    for t in p.terms() {
        let nu = lambda + t.mu;
        if nu == 0.0 {
            return Err(Error::DivergentIntegral);
        }
        for (i, &a) in antiderivative_poly(t.p, nu).iter().enumerate() {
            terms.push(ProfileTerm {
                mu: t.mu,
                p: i as u32,
                c: t.c * a,
            });
        }
    }
    ExpPolyProfile::new(terms)
}

/// Direct-branch coefficients above this magnitude signal cancellation
/// (`max_i |a_i| ~ q! / |mu - lambda|^{q+1}`): the represented value is
/// `O(|c|)` but split across terms of size `A |c|`, so `A eps` digits are
/// lost downstream. Such terms switch to the series branch.
const DIRECT_AMPLIFICATION_CAP: f64 = 100.0;

/// The rate-`lambda` series for `Ttilde` converges geometrically at ratio
/// `|mu - lambda| / lambda`; beyond this ratio it is useless.
const SERIES_RATE_RATIO: f64 = 0.6;

/// `ln sup_{y <= 0} |y|^p e^{lambda y} = p (ln p - 1 - ln lambda)`.
fn ln_sup_poly_exp(p: u32, lambda: f64) -> f64 {
    if p == 0 {
        0.0
    } else {
        let pf = p as f64;
        pf * (pf.ln() - 1.0 - lambda.ln())
    }
}

/// `Ttilde_lambda` on a profile (`lambda > 0`). Three branches per term:
/// exactly resonant rates (within `merge_tol`) integrate the plain power and
/// raise the degree; rates whose direct antiderivative would amplify
/// coefficients beyond [`DIRECT_AMPLIFICATION_CAP`] expand
/// `e^{(mu - lambda) z}` into a convergent polynomial series at rate
/// `lambda` (coefficients never exceed the input's); all other rates use
/// the direct antiderivative, producing the rate-`lambda` boundary term plus
/// the input-rate terms.
pub fn t_tilde_lambda(p: &ExpPolyProfile, lambda: f64, merge_tol: f64) -> Result<ExpPolyProfile> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t_tilde_lambda needs lambda > 0, got {lambda}"
        )));
    }
    let mut terms = Vec::new();
    for t in p.terms() {
        let nu = t.mu - lambda;
        if nu.abs() < merge_tol * lambda.max(1.0) {
            // int_y^0 z^q dz = -y^{q+1} / (q+1)
            terms.push(ProfileTerm {
                mu: lambda,
                p: t.p + 1,
                c: -t.c / (t.p + 1) as f64,
            });
            continue;
        }
        let a = antiderivative_poly(t.p, nu);
        let amplification = a.iter().fold(0.0f64, |m, ai| m.max(ai.abs()));
        if amplification <= DIRECT_AMPLIFICATION_CAP || nu.abs() > SERIES_RATE_RATIO * lambda {
            terms.push(ProfileTerm {
                mu: lambda,
                p: 0,
                c: t.c * a[0],
            });
            for (i, &ai) in a.iter().enumerate() {
                terms.push(ProfileTerm {
                    mu: t.mu,
                    p: i as u32,
                    c: -t.c * ai,
                });
            }
        } else {
            // e^{lambda y} int_y^0 z^q e^{nu z} dz
            //   = -e^{lambda y} sum_m nu^m/m! y^{q+m+1}/(q+m+1),
            // truncated once the term's sup norm falls below 1e-17 of the
            // leading one (compared in logs; the sup factors overflow f64).
            let ln_lead =
                t.c.norm().ln() + ln_sup_poly_exp(t.p + 1, lambda) - ((t.p + 1) as f64).ln();
            let mut coef = Complex64::new(1.0, 0.0);
            for m in 0..200u32 {
                let deg = t.p + m + 1;
                let c = -t.c * coef / deg as f64;
                if m > 0 && c.norm().ln() + ln_sup_poly_exp(deg, lambda) < ln_lead - 39.1 {
                    break;
                }
                if c != Complex64::ZERO {
                    terms.push(ProfileTerm {
                        mu: lambda,
                        p: deg,
                        c,
                    });
                }
                coef *= nu / (m + 1) as f64;
            }
        }
    }
    ExpPolyProfile::new(terms)
}

/// Mode-zero solution of `dy^2 u = g0`, `u(0) = 0`, `dy u -> 0`:
/// `u0 = T_0^2 g0 - (T_0^2 g0)(0)`. Returns the decaying profile and the
/// constant component.
pub fn solve_mode_zero(g0: &ExpPolyProfile) -> Result<(ExpPolyProfile, Complex64)> {
    let profile = t_lambda(&t_lambda(g0, 0.0)?, 0.0)?;
    let constant = -profile.value_at_zero();
    Ok((profile, constant))
}

/// Mode-`k` solution of `-|k|^2 u + dy^2 u = g`, `u(0) = 0`, decaying, by
/// variation of constants:
/// `u = -(T_l g)/(2l) - (Ttilde_l g)/(2l) + e^{l y} (T_l g)(0)/(2l)` with
/// `l = |k|`. Sources must decay strictly; a zero rate at `k != 0` is a
/// representation bug upstream.
pub fn solve_mode(k: &ModeIndex, gk: &ExpPolyProfile, merge_tol: f64) -> Result<ExpPolyProfile> {
    let lambda = k.euclid();
    if lambda == 0.0 {
        return Err(Error::InvalidParameter(
            "solve_mode requires k != 0; mode zero is handled separately".into(),
        ));
    }
    if let Some(mu) = gk.min_mu() {
        if mu <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "solve_mode at |k| = {lambda} received a non-decaying source term (mu = {mu})"
            )));
        }
    }
    let tg = t_lambda(gk, lambda)?;
    let ttg = t_tilde_lambda(gk, lambda, merge_tol)?;
    let boundary = tg.value_at_zero();
    let half = Complex64::new(-0.5 / lambda, 0.0);
    let mut out = tg.scale(half).add(&ttg.scale(half));
    out = out.add(&ExpPolyProfile::single(
        lambda,
        0,
        boundary * Complex64::new(0.5 / lambda, 0.0),
    )?);
    Ok(out)
}

/// Assembles the full solution `L g` of the Poisson problem mode by mode.
/// The constant component of the source must vanish: a constant forcing has
/// no decaying solution.
pub fn solve_poisson(g: &HalfCylinderFunction) -> Result<HalfCylinderFunction> {
    solve_poisson_with(g, 1e-12)
}

pub fn solve_poisson_with(
    g: &HalfCylinderFunction,
    merge_tol: f64,
) -> Result<HalfCylinderFunction> {
    if g.constant_part() != Complex64::ZERO {
        return Err(Error::NonzeroConstantSource(g.constant_part().norm()));
    }
    let zero = ModeIndex::zero(g.dim());
    let mut parts = Vec::new();
    let mut constant = Complex64::ZERO;
    for (k, prof) in g.profiles() {
        if k.is_zero() {
            if let Some(mu) = prof.min_mu() {
                if mu <= 0.0 {
                    return Err(Error::DivergentIntegral);
                }
            }
            let (p0, c0) = solve_mode_zero(prof)?;
            parts.push((zero, p0));
            constant += c0;
        } else {
            parts.push((*k, solve_mode(k, prof, merge_tol)?));
        }
    }
    HalfCylinderFunction::from_parts(g.dim(), g.trunc(), parts, constant)
}
