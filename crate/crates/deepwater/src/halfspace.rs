//! Functions on the half-cylinder `T^d x (-inf, 0]` as per-mode
//! exponential-polynomial profiles.
//!
//! Every function the construction touches is a finite sum
//! `u(x, y) = c + sum_k sum_j c_{k,j} y^{p_j} e^{mu_j y} e^{i k.x}`
//! with decay rates `mu >= 0`. The class is closed under products,
//! derivatives, the harmonic lift `e^{y|D|}` and the integral operators of
//! the Poisson solver, so the depth direction carries no discretization
//! error at all: the only approximations anywhere are the Fourier truncation
//! and term pruning.
//!
//! The explicit constant `c` is the `C` component of the `C (+) H^{sigma,s,a}`
//! split; `pi()` removes it and the weighted norm reports it separately.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::analytic::{ModeIndex, PeriodicFunction};
use crate::error::{Error, Result};

/// One summand `c * y^p * e^{mu y}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileTerm {
    pub mu: f64,
    pub p: u32,
    pub c: Complex64,
}

/// Finite sum of exponential-polynomial terms in the depth variable,
/// normalized so no two terms share `(mu, p)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ExpPolyProfile {
    terms: Vec<ProfileTerm>,
}

fn term_order(a: &ProfileTerm, b: &ProfileTerm) -> std::cmp::Ordering {
    a.mu.partial_cmp(&b.mu)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(a.p.cmp(&b.p))
}

impl ExpPolyProfile {
    pub fn empty() -> Self {
        ExpPolyProfile { terms: Vec::new() }
    }

    /// Builds a profile from raw terms; rates must be nonnegative and finite.
    /// Terms sharing exactly the same `(mu, p)` are summed.
    pub fn new(terms: Vec<ProfileTerm>) -> Result<Self> {
        for t in &terms {
            if !(t.mu >= 0.0) || !t.mu.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "profile decay rate must be nonnegative and finite, got {}",
                    t.mu
                )));
            }
        }
        let mut p = ExpPolyProfile { terms };
        p.canonicalize();
        Ok(p)
    }

    pub fn single(mu: f64, p: u32, c: Complex64) -> Result<Self> {
        Self::new(vec![ProfileTerm { mu, p, c }])
    }

    /// Sorts by `(mu, p)`, sums exact duplicates, drops exact zeros.
    fn canonicalize(&mut self) {
        self.terms.sort_by(term_order);
        let mut out: Vec<ProfileTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match out.last_mut() {
                Some(last) if last.mu == t.mu && last.p == t.p => last.c += t.c,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.c != Complex64::ZERO);
        self.terms = out;
    }

    pub fn terms(&self) -> &[ProfileTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|t| t.c.norm()).fold(0.0, f64::max)
    }

    /// Smallest decay rate present.
    pub fn min_mu(&self) -> Option<f64> {
        self.terms.first().map(|t| t.mu)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        let mut p = ExpPolyProfile { terms };
        p.canonicalize();
        p
    }

    pub fn scale(&self, f: Complex64) -> Self {
        if f == Complex64::ZERO {
            return Self::empty();
        }
        ExpPolyProfile {
            terms: self
                .terms
                .iter()
                .map(|t| ProfileTerm {
                    mu: t.mu,
                    p: t.p,
                    c: t.c * f,
                })
                .collect(),
        }
    }

    /// Term products `(mu1, p1, c1) * (mu2, p2, c2) -> (mu1+mu2, p1+p2, c1 c2)`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(ProfileTerm {
                    mu: a.mu + b.mu,
                    p: a.p + b.p,
                    c: a.c * b.c,
                });
            }
        }
        let mut p = ExpPolyProfile { terms };
        p.canonicalize();
        p
    }

    /// Closed-form depth derivative:
    /// `d/dy (c y^p e^{mu y}) = c mu y^p e^{mu y} + c p y^{p-1} e^{mu y}`.
    pub fn dy(&self) -> Self {
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.mu != 0.0 {
                terms.push(ProfileTerm {
                    mu: t.mu,
                    p: t.p,
                    c: t.c * t.mu,
                });
            }
            if t.p > 0 {
                terms.push(ProfileTerm {
                    mu: t.mu,
                    p: t.p - 1,
                    c: t.c * t.p as f64,
                });
            }
        }
        let mut p = ExpPolyProfile { terms };
        p.canonicalize();
        p
    }

    pub fn dy_n(&self, n: u32) -> Self {
        let mut out = self.clone();
        for _ in 0..n {
            out = out.dy();
        }
        out
    }

    pub fn conj(&self) -> Self {
        ExpPolyProfile {
            terms: self
                .terms
                .iter()
                .map(|t| ProfileTerm {
                    mu: t.mu,
                    p: t.p,
                    c: t.c.conj(),
                })
                .collect(),
        }
    }

    pub fn eval(&self, y: f64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for t in &self.terms {
            acc += t.c * y.powi(t.p as i32) * (t.mu * y).exp();
        }
        acc
    }

    /// Value at `y = 0`: only `p = 0` terms survive. Summed in canonical term
    /// order so callers relying on exact cancellation get reproducible sums.
    pub fn value_at_zero(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| t.p == 0)
            .fold(Complex64::ZERO, |acc, t| acc + t.c)
    }

    /// Merges terms at equal `p` whose rates differ by less than
    /// `merge_tol * max(1, mu)` (coefficients summed at the smaller rate),
    /// then drops terms below `prune_tol * max |c|`. Idempotent.
    pub fn normalize(&self, merge_tol: f64, prune_tol: f64) -> Self {
        let mut by_p: Vec<ProfileTerm> = self.terms.clone();
        by_p.sort_by(|a, b| a.p.cmp(&b.p).then(a.mu.partial_cmp(&b.mu).unwrap()));
        let mut merged: Vec<ProfileTerm> = Vec::with_capacity(by_p.len());
        for t in by_p {
            match merged.last_mut() {
                Some(last) if last.p == t.p && (t.mu - last.mu) < merge_tol * last.mu.max(1.0) => {
                    last.c += t.c;
                }
                _ => merged.push(t),
            }
        }
        let max = merged.iter().map(|t| t.c.norm()).fold(0.0, f64::max);
        merged.retain(|t| t.c != Complex64::ZERO && t.c.norm() >= prune_tol * max);
        merged.sort_by(term_order);
        ExpPolyProfile { terms: merged }
    }

    /// Drops terms with `|c| < floor` (absolute threshold).
    pub fn prune_abs(&self, floor: f64) -> Self {
        ExpPolyProfile {
            terms: self
                .terms
                .iter()
                .filter(|t| t.c.norm() >= floor)
                .copied()
                .collect(),
        }
    }

    /// Exact weighted inner product
    /// `<u, v>_{L^{2,a}} = int_{-inf}^0 u(y) conj(v(y)) e^{-2ay} dy`,
    /// using `int_{-inf}^0 y^q e^{nu y} dy = (-1)^q q! / nu^{q+1}`.
    pub fn l2a_inner(&self, other: &Self, a: f64) -> Result<Complex64> {
        for t in self.terms.iter().chain(other.terms.iter()) {
            if t.mu <= a {
                return Err(Error::MuTooSmall { mu: t.mu, a });
            }
        }
        let mut acc = Complex64::ZERO;
        for t1 in &self.terms {
            for t2 in &other.terms {
                let q = t1.p + t2.p;
                let nu = t1.mu + t2.mu - 2.0 * a;
                acc += t1.c * t2.c.conj() * moment_integral(q, nu);
            }
        }
        Ok(acc)
    }

    pub fn l2a_norm_sq(&self, a: f64) -> Result<f64> {
        Ok(self.l2a_inner(self, a)?.re)
    }
}

/// `int_{-inf}^0 y^q e^{nu y} dy` for `nu > 0`.
fn moment_integral(q: u32, nu: f64) -> f64 {
    let mut fact = 1.0;
    for i in 1..=q {
        fact *= i as f64;
    }
    let sign = if q.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * fact / nu.powi(q as i32 + 1)
}

/// Weights of the half-cylinder norm: analyticity width `sigma`, Sobolev
/// index `s` (a nonnegative integer: the norm sums `s + 1` depth
/// derivatives), depth weight `a` in `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedNormParams {
    pub sigma: f64,
    pub s: u32,
    pub a: f64,
}

impl WeightedNormParams {
    pub fn new(sigma: f64, s: u32, a: f64) -> Result<Self> {
        if sigma < 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be nonnegative, got {sigma}"
            )));
        }
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "depth weight a must lie in (0, 1), got {a}"
            )));
        }
        Ok(WeightedNormParams { sigma, s, a })
    }
}

impl Default for WeightedNormParams {
    fn default() -> Self {
        WeightedNormParams {
            sigma: 0.0,
            s: 1,
            a: 0.5,
        }
    }
}

/// Function on the half-cylinder: per-mode profiles plus the explicit
/// constant component attached to mode zero.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfCylinderFunction {
    dim: u8,
    trunc: u32,
    profiles: BTreeMap<ModeIndex, ExpPolyProfile>,
    constant: Complex64,
}

impl HalfCylinderFunction {
    pub fn zero(dim: u8, trunc: u32) -> Self {
        HalfCylinderFunction {
            dim,
            trunc,
            profiles: BTreeMap::new(),
            constant: Complex64::ZERO,
        }
    }

    pub fn constant_fn(dim: u8, trunc: u32, c: f64) -> Self {
        HalfCylinderFunction {
            dim,
            trunc,
            profiles: BTreeMap::new(),
            constant: Complex64::new(c, 0.0),
        }
    }

    /// Assembles a function from per-mode profiles and a constant. Profiles
    /// beyond the truncation are rejected; pure-constant terms
    /// `(mu = 0, p = 0)` at mode zero are moved into the constant component.
    pub fn from_parts<I>(dim: u8, trunc: u32, profiles: I, constant: Complex64) -> Result<Self>
    where
        I: IntoIterator<Item = (ModeIndex, ExpPolyProfile)>,
    {
        let mut out = HalfCylinderFunction {
            dim,
            trunc,
            profiles: BTreeMap::new(),
            constant,
        };
        for (k, prof) in profiles {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch(dim, k.dim()));
            }
            if k.linf() > trunc {
                return Err(Error::InvalidInput(format!(
                    "mode {:?} lies beyond the truncation K = {trunc}",
                    k.comps()
                )));
            }
            if prof.is_empty() {
                continue;
            }
            let entry = out.profiles.entry(k).or_default();
            *entry = entry.add(&prof);
        }
        out.extract_mode_zero_constant();
        out.profiles.retain(|_, p| !p.is_empty());
        Ok(out)
    }

    /// Moves `(mu = 0, p = 0)` terms of the mode-zero profile into the
    /// constant component, keeping the structural `C (+) H` split.
    fn extract_mode_zero_constant(&mut self) {
        let zero = ModeIndex::zero(self.dim);
        if let Some(prof) = self.profiles.get_mut(&zero) {
            let mut kept = Vec::new();
            for t in prof.terms() {
                if t.mu == 0.0 && t.p == 0 {
                    self.constant += t.c;
                } else {
                    kept.push(*t);
                }
            }
            *prof = ExpPolyProfile { terms: kept };
            if prof.is_empty() {
                self.profiles.remove(&zero);
            }
        }
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn constant_part(&self) -> Complex64 {
        self.constant
    }

    pub fn profile(&self, k: &ModeIndex) -> ExpPolyProfile {
        self.profiles.get(k).cloned().unwrap_or_default()
    }

    pub fn profiles(&self) -> impl Iterator<Item = (&ModeIndex, &ExpPolyProfile)> {
        self.profiles.iter()
    }

    pub fn mode_count(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_zero(&self) -> bool {
        self.profiles.is_empty() && self.constant == Complex64::ZERO
    }

    /// Projection `Pi` dropping the constant component.
    pub fn pi(&self) -> Self {
        let mut out = self.clone();
        out.constant = Complex64::ZERO;
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.profiles
            .values()
            .map(|p| p.max_abs_coeff())
            .fold(self.constant.norm(), f64::max)
    }

    pub fn max_term_count(&self) -> usize {
        self.profiles
            .values()
            .map(|p| p.term_count())
            .max()
            .unwrap_or(0)
    }

    pub fn total_term_count(&self) -> usize {
        self.profiles.values().map(|p| p.term_count()).sum()
    }

    /// Largest polynomial degree reached by any term.
    pub fn max_degree(&self) -> u32 {
        self.profiles
            .values()
            .flat_map(|p| p.terms().iter().map(|t| t.p))
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        out.trunc = self.trunc.max(other.trunc);
        out.constant += other.constant;
        for (k, prof) in &other.profiles {
            let entry = out.profiles.entry(*k).or_default();
            *entry = entry.add(prof);
        }
        out.profiles.retain(|_, p| !p.is_empty());
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, f: f64) -> Self {
        let factor = Complex64::new(f, 0.0);
        let mut out = self.clone();
        out.constant *= factor;
        for p in out.profiles.values_mut() {
            *p = p.scale(factor);
        }
        out.profiles.retain(|_, p| !p.is_empty());
        out
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    /// Depth derivative; kills the constant component.
    pub fn dy(&self) -> Self {
        let mut out = Self::zero(self.dim, self.trunc);
        for (k, prof) in &self.profiles {
            let d = prof.dy();
            if !d.is_empty() {
                out.profiles.insert(*k, d);
            }
        }
        out
    }

    /// Horizontal derivative in direction `j` (mode factor `i k_j`).
    pub fn dx(&self, j: usize) -> Self {
        let mut out = Self::zero(self.dim, self.trunc);
        for (k, prof) in &self.profiles {
            let factor = Complex64::new(0.0, k.component(j) as f64);
            if factor == Complex64::ZERO {
                continue;
            }
            out.profiles.insert(*k, prof.scale(factor));
        }
        out
    }

    /// Horizontal Laplacian (mode factor `-|k|^2`).
    pub fn laplacian_x(&self) -> Self {
        let mut out = Self::zero(self.dim, self.trunc);
        for (k, prof) in &self.profiles {
            let e = k.euclid();
            if e == 0.0 {
                continue;
            }
            out.profiles
                .insert(*k, prof.scale(Complex64::new(-e * e, 0.0)));
        }
        out
    }

    /// Full Laplacian `dy^2 + Delta_x` in the representation. The factor
    /// `mu^2 - |k|^2` is formed per term in one expression, so harmonic
    /// modes (`mu = |k|`, `p = 0`) cancel exactly.
    pub fn laplacian_xy(&self) -> Self {
        let mut out = Self::zero(self.dim, self.trunc);
        for (k, prof) in &self.profiles {
            let e = k.euclid();
            let mut terms = Vec::with_capacity(3 * prof.term_count());
            for t in prof.terms() {
                let radial = t.mu * t.mu - e * e;
                if radial != 0.0 {
                    terms.push(ProfileTerm {
                        mu: t.mu,
                        p: t.p,
                        c: t.c * radial,
                    });
                }
                if t.p > 0 {
                    terms.push(ProfileTerm {
                        mu: t.mu,
                        p: t.p - 1,
                        c: t.c * (2.0 * t.mu * t.p as f64),
                    });
                }
                if t.p > 1 {
                    terms.push(ProfileTerm {
                        mu: t.mu,
                        p: t.p - 2,
                        c: t.c * (t.p as f64 * (t.p - 1) as f64),
                    });
                }
            }
            let mut lp = ExpPolyProfile { terms };
            lp.canonicalize();
            if !lp.is_empty() {
                out.profiles.insert(*k, lp);
            }
        }
        out
    }

    /// Boundary trace `u(., 0)` as a periodic function.
    pub fn trace(&self) -> PeriodicFunction {
        let mut entries = Vec::new();
        for (k, prof) in &self.profiles {
            let v = prof.value_at_zero();
            if v != Complex64::ZERO {
                entries.push((*k, v));
            }
        }
        if self.constant != Complex64::ZERO {
            entries.push((ModeIndex::zero(self.dim), self.constant));
        }
        PeriodicFunction::from_coeffs_unchecked(self.dim, self.trunc, entries)
            .expect("trace modes lie within the truncation")
    }

    /// Product; convolution over modes, term products inside profiles,
    /// clipped to `max(K_u, K_v)`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let trunc = self.trunc.max(other.trunc);
        let mut out = Self::zero(self.dim, trunc);
        out.constant = self.constant * other.constant;
        if other.constant != Complex64::ZERO {
            for (k, prof) in &self.profiles {
                let entry = out.profiles.entry(*k).or_default();
                *entry = entry.add(&prof.scale(other.constant));
            }
        }
        if self.constant != Complex64::ZERO {
            for (k, prof) in &other.profiles {
                let entry = out.profiles.entry(*k).or_default();
                *entry = entry.add(&prof.scale(self.constant));
            }
        }
        let mut raw: BTreeMap<ModeIndex, Vec<ProfileTerm>> = BTreeMap::new();
        for (ku, pu) in &self.profiles {
            for (kv, pv) in &other.profiles {
                let k = ku.add(kv);
                if k.linf() > trunc {
                    continue;
                }
                let bucket = raw.entry(k).or_default();
                for a in pu.terms() {
                    for b in pv.terms() {
                        bucket.push(ProfileTerm {
                            mu: a.mu + b.mu,
                            p: a.p + b.p,
                            c: a.c * b.c,
                        });
                    }
                }
            }
        }
        for (k, terms) in raw {
            let mut prof = ExpPolyProfile { terms };
            prof.canonicalize();
            if !prof.is_empty() {
                let entry = out.profiles.entry(k).or_default();
                *entry = entry.add(&prof);
            }
        }
        out.extract_mode_zero_constant();
        out.profiles.retain(|_, p| !p.is_empty());
        Ok(out)
    }

    /// The weighted norm `||Pi u||_{sigma,s,a} + |constant|`, evaluated in
    /// closed form; errors with [`Error::MuTooSmall`] when some decay rate
    /// fails `mu > a`.
    pub fn norm_sigma_s_a(&self, p: &WeightedNormParams) -> Result<f64> {
        let mut acc = 0.0;
        for (k, prof) in &self.profiles {
            let weight_x = (2.0 * p.sigma * k.l1() as f64).exp();
            let mut deriv = prof.clone();
            for j in 0..=p.s {
                acc +=
                    weight_x * k.bracket().powi(2 * (p.s - j) as i32) * deriv.l2a_norm_sq(p.a)?;
                if j < p.s {
                    deriv = deriv.dy();
                }
            }
        }
        Ok(acc.sqrt() + self.constant.norm())
    }

    /// Per-profile merge and prune; also re-extracts any constant component
    /// surfaced at mode zero. Idempotent.
    pub fn normalize(&self, merge_tol: f64, prune_tol: f64) -> Self {
        let mut out = Self::zero(self.dim, self.trunc);
        out.constant = self.constant;
        for (k, prof) in &self.profiles {
            let n = prof.normalize(merge_tol, prune_tol);
            if !n.is_empty() {
                out.profiles.insert(*k, n);
            }
        }
        out.extract_mode_zero_constant();
        out.profiles.retain(|_, p| !p.is_empty());
        out
    }

    /// Drops profile terms below an absolute coefficient floor.
    pub fn prune_abs(&self, floor: f64) -> Self {
        let mut out = Self::zero(self.dim, self.trunc);
        out.constant = self.constant;
        for (k, prof) in &self.profiles {
            let p = prof.prune_abs(floor);
            if !p.is_empty() {
                out.profiles.insert(*k, p);
            }
        }
        out
    }

    /// Errors when any profile exceeds `cap` terms.
    pub fn check_term_cap(&self, cap: usize) -> Result<()> {
        for (k, prof) in &self.profiles {
            if prof.term_count() > cap {
                return Err(Error::TermCapExceeded {
                    mode: k.comps().to_vec(),
                    count: prof.term_count(),
                    cap,
                });
            }
        }
        Ok(())
    }

    /// Pointwise evaluation (real part).
    pub fn eval_at(&self, x: &[f64], y: f64) -> f64 {
        let mut acc = self.constant;
        for (k, prof) in &self.profiles {
            let phase: f64 = k
                .comps()
                .iter()
                .zip(x)
                .map(|(&ki, &xi)| ki as f64 * xi)
                .sum();
            acc += prof.eval(y) * Complex64::from_polar(1.0, phase);
        }
        acc.re
    }
}

/// Harmonic extension of the boundary datum: mode `k != 0` becomes the
/// single term `g_k e^{|k| y}`, mode zero becomes the constant `g_0`.
/// Solves `Delta_{x,y} u = 0`, `u(x, 0) = g` term by term.
pub fn lift_harmonic(g: &PeriodicFunction) -> HalfCylinderFunction {
    let mut out = HalfCylinderFunction::zero(g.dim(), g.trunc());
    for (k, c) in g.coeffs() {
        if k.is_zero() {
            out.constant += c;
        } else {
            out.profiles.insert(
                *k,
                ExpPolyProfile {
                    terms: vec![ProfileTerm {
                        mu: k.euclid(),
                        p: 0,
                        c: *c,
                    }],
                },
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_halfspace(rng: &mut ChaCha8Rng, trunc: u32, min_mu: f64) -> HalfCylinderFunction {
        random_halfspace_radius(rng, trunc, trunc, min_mu)
    }

    fn random_halfspace_radius(
        rng: &mut ChaCha8Rng,
        trunc: u32,
        radius: u32,
        min_mu: f64,
    ) -> HalfCylinderFunction {
        let mut parts = Vec::new();
        for k in 0..=radius as i32 {
            let mut terms = Vec::new();
            for _ in 0..3 {
                let mu = min_mu + rng.random_range(0.0..4.0);
                let p = rng.random_range(0..3u32);
                if k == 0 && mu == 0.0 && p == 0 {
                    continue;
                }
                let cc = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                terms.push(ProfileTerm { mu, p, c: cc });
            }
            let prof = ExpPolyProfile::new(terms).unwrap();
            if k == 0 {
                let real: Vec<_> = prof
                    .terms()
                    .iter()
                    .map(|t| ProfileTerm {
                        mu: t.mu,
                        p: t.p,
                        c: Complex64::new(t.c.re, 0.0),
                    })
                    .collect();
                parts.push((ModeIndex::d1(0), ExpPolyProfile { terms: real }));
            } else {
                parts.push((ModeIndex::d1(k), prof.clone()));
                parts.push((ModeIndex::d1(-k), prof.conj()));
            }
        }
        HalfCylinderFunction::from_parts(1, trunc, parts, c(0.3)).unwrap()
    }

    #[test]
    fn lift_of_cosine_is_exponential_mode() {
        let g = PeriodicFunction::cosine(4, ModeIndex::d1(2), 1.0);
        let u = lift_harmonic(&g);
        let prof = u.profile(&ModeIndex::d1(2));
        assert_eq!(prof.terms().len(), 1);
        assert_eq!(prof.terms()[0].mu, 2.0);
        assert_eq!(prof.terms()[0].p, 0);
        assert_eq!(prof.terms()[0].c, c(0.5));
        assert_eq!(u.constant_part(), Complex64::ZERO);
    }

    #[test]
    fn lift_of_constant_and_mixture() {
        let g = PeriodicFunction::constant(1, 4, 1.0);
        let u = lift_harmonic(&g);
        assert_eq!(u.constant_part(), c(1.0));
        assert_eq!(u.mode_count(), 0);

        let g = PeriodicFunction::cosine(4, ModeIndex::d1(1), 1.0)
            .add(&PeriodicFunction::constant(1, 4, 3.0))
            .unwrap();
        let u = lift_harmonic(&g);
        assert_eq!(u.constant_part(), c(3.0));
        assert!((u.eval_at(&[0.7], -0.4) - ((-0.4f64).exp() * 0.7f64.cos() + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn trace_inverts_lift() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let mut entries = vec![(ModeIndex::d1(0), c(rng.random_range(-1.0..1.0)))];
            for k in 1..=6 {
                let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                entries.push((ModeIndex::d1(k), v));
            }
            let g = PeriodicFunction::from_coeffs(1, 6, entries).unwrap();
            let back = lift_harmonic(&g).trace();
            assert!(back.sub(&g).unwrap().max_abs_coeff() == 0.0);
        }
    }

    #[test]
    fn trace_kills_polynomial_terms() {
        let prof = ExpPolyProfile::single(2.0, 1, c(5.0)).unwrap();
        let u = HalfCylinderFunction::from_parts(1, 4, [(ModeIndex::d1(1), prof)], Complex64::ZERO)
            .unwrap();
        assert!(u.trace().is_zero());

        // e^{2y} - e^{y} at mode 1 vanishes at y = 0.
        let prof = ExpPolyProfile::new(vec![
            ProfileTerm {
                mu: 2.0,
                p: 0,
                c: c(1.0),
            },
            ProfileTerm {
                mu: 1.0,
                p: 0,
                c: c(-1.0),
            },
        ])
        .unwrap();
        let u = HalfCylinderFunction::from_parts(1, 4, [(ModeIndex::d1(1), prof)], Complex64::ZERO)
            .unwrap();
        assert!(u.trace().is_zero());
    }

    #[test]
    fn dy_closed_forms() {
        // d/dy of lift(cos kx) = |k| e^{|k|y} cos kx
        let g = PeriodicFunction::cosine(4, ModeIndex::d1(3), 1.0);
        let du = lift_harmonic(&g).dy();
        let prof = du.profile(&ModeIndex::d1(3));
        assert_eq!(prof.terms()[0].c, c(1.5));

        // constants die
        assert!(HalfCylinderFunction::constant_fn(1, 4, 2.0).dy().is_zero());

        // d/dy (y e^y) = e^y + y e^y
        let prof = ExpPolyProfile::single(1.0, 1, c(1.0)).unwrap().dy();
        assert_eq!(prof.terms().len(), 2);
        assert_eq!(
            prof.terms()[0],
            ProfileTerm {
                mu: 1.0,
                p: 0,
                c: c(1.0)
            }
        );
        assert_eq!(
            prof.terms()[1],
            ProfileTerm {
                mu: 1.0,
                p: 1,
                c: c(1.0)
            }
        );
    }

    #[test]
    fn multiply_moves_mode_zero_exponentials_to_profile_not_constant() {
        // u = e^{y} e^{ix}, v = e^{y} e^{-ix}: product is e^{2y} at mode 0.
        let u = HalfCylinderFunction::from_parts(
            1,
            4,
            [(
                ModeIndex::d1(1),
                ExpPolyProfile::single(1.0, 0, c(1.0)).unwrap(),
            )],
            Complex64::ZERO,
        )
        .unwrap();
        let v = HalfCylinderFunction::from_parts(
            1,
            4,
            [(
                ModeIndex::d1(-1),
                ExpPolyProfile::single(1.0, 0, c(1.0)).unwrap(),
            )],
            Complex64::ZERO,
        )
        .unwrap();
        let w = u.multiply(&v).unwrap();
        assert_eq!(w.constant_part(), Complex64::ZERO);
        let prof = w.profile(&ModeIndex::d1(0));
        assert_eq!(
            prof.terms(),
            &[ProfileTerm {
                mu: 2.0,
                p: 0,
                c: c(1.0)
            }]
        );
    }

    #[test]
    fn multiply_identity_and_degree_addition() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = random_halfspace(&mut rng, 3, 0.7);
        let one = HalfCylinderFunction::constant_fn(1, 3, 1.0);
        assert_eq!(one.multiply(&v).unwrap(), v);

        // (y e^y at mode 1) * (e^{2y} at mode 1) = y e^{3y} at mode 2
        let a = HalfCylinderFunction::from_parts(
            1,
            4,
            [(
                ModeIndex::d1(1),
                ExpPolyProfile::single(1.0, 1, c(1.0)).unwrap(),
            )],
            Complex64::ZERO,
        )
        .unwrap();
        let b = HalfCylinderFunction::from_parts(
            1,
            4,
            [(
                ModeIndex::d1(1),
                ExpPolyProfile::single(2.0, 0, c(1.0)).unwrap(),
            )],
            Complex64::ZERO,
        )
        .unwrap();
        let ab = a.multiply(&b).unwrap();
        assert_eq!(
            ab.profile(&ModeIndex::d1(2)).terms(),
            &[ProfileTerm {
                mu: 3.0,
                p: 1,
                c: c(1.0)
            }]
        );
    }

    #[test]
    fn weighted_norm_single_exponential() {
        // ||e^{y} e^{ix}||_{0,0,1/2}^2 = int e^{2y} e^{-y} dy = 1
        let u = HalfCylinderFunction::from_parts(
            1,
            4,
            [(
                ModeIndex::d1(1),
                ExpPolyProfile::single(1.0, 0, c(1.0)).unwrap(),
            )],
            Complex64::ZERO,
        )
        .unwrap();
        let p = WeightedNormParams::new(0.0, 0, 0.5).unwrap();
        assert!((u.norm_sigma_s_a(&p).unwrap() - 1.0).abs() < 1e-15);

        assert_eq!(
            HalfCylinderFunction::zero(1, 4).norm_sigma_s_a(&p).unwrap(),
            0.0
        );
    }

    #[test]
    fn weighted_norm_rejects_slow_decay() {
        let u = HalfCylinderFunction::from_parts(
            1,
            4,
            [(
                ModeIndex::d1(1),
                ExpPolyProfile::single(0.3, 0, c(1.0)).unwrap(),
            )],
            Complex64::ZERO,
        )
        .unwrap();
        let p = WeightedNormParams::new(0.0, 0, 0.5).unwrap();
        match u.norm_sigma_s_a(&p) {
            Err(Error::MuTooSmall { mu, a }) => {
                assert_eq!(mu, 0.3);
                assert_eq!(a, 0.5);
            }
            other => panic!("expected MuTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn normalize_merges_and_prunes() {
        let prof = ExpPolyProfile::new(vec![
            ProfileTerm {
                mu: 1.0,
                p: 0,
                c: c(1.0),
            },
            ProfileTerm {
                mu: 1.0 + 1e-15,
                p: 0,
                c: c(2.0),
            },
        ])
        .unwrap();
        let n = prof.normalize(1e-12, 1e-14);
        assert_eq!(
            n.terms(),
            &[ProfileTerm {
                mu: 1.0,
                p: 0,
                c: c(3.0)
            }]
        );

        let prof = ExpPolyProfile::new(vec![
            ProfileTerm {
                mu: 1.0,
                p: 0,
                c: c(1.0),
            },
            ProfileTerm {
                mu: 2.0,
                p: 0,
                c: c(1e-20),
            },
        ])
        .unwrap();
        let n = prof.normalize(1e-12, 1e-14);
        assert_eq!(n.term_count(), 1);

        let already = ExpPolyProfile::new(vec![
            ProfileTerm {
                mu: 1.0,
                p: 0,
                c: c(0.5),
            },
            ProfileTerm {
                mu: 2.0,
                p: 1,
                c: c(0.25),
            },
        ])
        .unwrap();
        assert_eq!(already.normalize(1e-12, 1e-14), already);
    }

    #[test]
    fn laplacian_of_lift_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let mut entries = vec![(ModeIndex::d1(0), c(rng.random_range(-1.0..1.0)))];
            for k in 1..=5 {
                entries.push((
                    ModeIndex::d1(k),
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                ));
            }
            let g = PeriodicFunction::from_coeffs(1, 5, entries).unwrap();
            let lap = lift_harmonic(&g).laplacian_xy().normalize(1e-12, 1e-14);
            assert!(lap.is_zero(), "residual {:?}", lap.max_abs_coeff());
        }
    }

    #[test]
    fn trace_inequality_on_random_profiles() {
        // || trace u ||_{sigma, s + 1/2} <= || u ||_{sigma, s+1, a}
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let u = random_halfspace(&mut rng, 5, 1.2).pi();
            let s = 1u32;
            let lhs = u
                .trace()
                .norm_sigma_s(&crate::analytic::NormParams::new(0.1, s as f64 + 0.5).unwrap());
            let rhs = u
                .norm_sigma_s_a(&WeightedNormParams::new(0.1, s + 1, 0.5).unwrap())
                .unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-12), "lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn harmonic_lift_bounded_into_weighted_norms() {
        // || Pi lift(g) ||_{0,s,a} <= C || g ||_{H^{0,s}} over a random family
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let params = WeightedNormParams::new(0.0, 2, 0.5).unwrap();
        let mut max_ratio: f64 = 0.0;
        for _ in 0..20 {
            let mut entries = Vec::new();
            for k in 1..=8 {
                entries.push((
                    ModeIndex::d1(k),
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                ));
            }
            let g = PeriodicFunction::from_coeffs(1, 8, entries).unwrap();
            let num = lift_harmonic(&g).pi().norm_sigma_s_a(&params).unwrap();
            let den = g.norm_sigma_s(&crate::analytic::NormParams::sobolev(2.0));
            max_ratio = max_ratio.max(num / den);
        }
        assert!(max_ratio.is_finite() && max_ratio < 3.0, "{max_ratio}");
    }

    #[test]
    fn multiply_agrees_with_collocation() {
        // support radius 3 inside truncation 8: the clipped convolution
        // keeps the full product support
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let u = random_halfspace_radius(&mut rng, 8, 3, 0.5);
        let v = random_halfspace_radius(&mut rng, 8, 3, 0.5);
        let w = u.multiply(&v).unwrap();
        let xs: Vec<f64> = (0..13)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / 13.0)
            .collect();
        let ys = [0.0, -0.1, -0.5, -1.0, -3.0];
        for &x in &xs {
            for &y in &ys {
                let lhs = u.eval_at(&[x], y) * v.eval_at(&[x], y);
                let rhs = w.eval_at(&[x], y);
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                    "mismatch at ({x}, {y}): {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn dy_is_a_derivation() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let u = random_halfspace(&mut rng, 3, 0.5);
        let v = random_halfspace(&mut rng, 3, 0.5);
        let lhs = u.multiply(&v).unwrap().dy();
        let rhs = u
            .dy()
            .multiply(&v)
            .unwrap()
            .add(&u.multiply(&v.dy()).unwrap())
            .unwrap();
        let diff = lhs.sub(&rhs).unwrap().normalize(1e-12, 0.0);
        let scale = lhs.max_abs_coeff().max(1.0);
        assert!(diff.max_abs_coeff() <= 1e-12 * scale);
    }

    #[test]
    fn conjugate_symmetry_preserved_by_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let u = random_halfspace(&mut rng, 3, 0.5);
        let v = random_halfspace(&mut rng, 3, 0.5);
        for w in [u.multiply(&v).unwrap(), u.dy(), u.dx(0), u.laplacian_xy()] {
            for (k, prof) in w.profiles() {
                let mirror = w.profile(&k.neg());
                let diff = prof.add(&mirror.conj().scale(c(-1.0)));
                assert!(diff.max_abs_coeff() < 1e-12);
            }
        }
    }
}
