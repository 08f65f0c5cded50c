//! Truncated Fourier series on the d-torus with analytic-Sobolev norms.
//!
//! A [`PeriodicFunction`] stores a sparse complex coefficient map
//! `k -> u_k` for `u(x) = sum_k u_k e^{i k.x}` with `|k|_inf <= K`; real-valued
//! functions keep the conjugate symmetry `u_{-k} = conj(u_k)`. The weighted
//! norm `||u||_{sigma,s}` sums `e^{2 sigma |k|_1} <k>^{2s} |u_k|^2`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Integer frequency vector of length d (d = 1 or 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    comps: [i32; 2],
    dim: u8,
}

impl ModeIndex {
    pub fn new(comps: &[i32]) -> Result<Self> {
        match comps.len() {
            1 => Ok(ModeIndex {
                comps: [comps[0], 0],
                dim: 1,
            }),
            2 => Ok(ModeIndex {
                comps: [comps[0], comps[1]],
                dim: 2,
            }),
            n => Err(Error::InvalidParameter(format!(
                "mode index length must be 1 or 2, got {n}"
            ))),
        }
    }

    pub fn d1(k: i32) -> Self {
        ModeIndex {
            comps: [k, 0],
            dim: 1,
        }
    }

    pub fn d2(k1: i32, k2: i32) -> Self {
        ModeIndex {
            comps: [k1, k2],
            dim: 2,
        }
    }

    pub fn zero(dim: u8) -> Self {
        ModeIndex { comps: [0, 0], dim }
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn comps(&self) -> &[i32] {
        &self.comps[..self.dim as usize]
    }

    pub fn component(&self, j: usize) -> i32 {
        self.comps[j]
    }

    /// `|k|_1 = |k_1| + ... + |k_d|`.
    pub fn l1(&self) -> u32 {
        self.comps().iter().map(|c| c.unsigned_abs()).sum()
    }

    /// `|k|_inf`.
    pub fn linf(&self) -> u32 {
        self.comps()
            .iter()
            .map(|c| c.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Euclidean norm `|k|`.
    pub fn euclid(&self) -> f64 {
        match self.dim {
            1 => self.comps[0].unsigned_abs() as f64,
            _ => {
                let (a, b) = (self.comps[0] as f64, self.comps[1] as f64);
                (a * a + b * b).sqrt()
            }
        }
    }

    /// Japanese bracket `<k> = max(1, |k|)`.
    pub fn bracket(&self) -> f64 {
        self.euclid().max(1.0)
    }

    pub fn is_zero(&self) -> bool {
        self.comps().iter().all(|&c| c == 0)
    }

    pub fn neg(&self) -> Self {
        let mut comps = self.comps;
        for c in comps.iter_mut() {
            *c = -*c;
        }
        ModeIndex {
            comps,
            dim: self.dim,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        ModeIndex {
            comps: [
                self.comps[0] + other.comps[0],
                self.comps[1] + other.comps[1],
            ],
            dim: self.dim,
        }
    }

    /// Lexicographically nonnegative representatives index the stored half of
    /// a conjugate-symmetric map: first nonzero component positive, or zero.
    pub fn is_lex_nonneg(&self) -> bool {
        for &c in self.comps() {
            if c > 0 {
                return true;
            }
            if c < 0 {
                return false;
            }
        }
        true
    }
}

/// Weights of the analytic-Sobolev norm: `sigma` is the analyticity width,
/// `s` the Sobolev index. `s` may be any nonnegative real (half-integer
/// indices enter only through the weight `<k>^{2s}`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormParams {
    pub sigma: f64,
    pub s: f64,
}

impl NormParams {
    pub fn new(sigma: f64, s: f64) -> Result<Self> {
        if sigma < 0.0 || s < 0.0 || !sigma.is_finite() || !s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "norm parameters must be nonnegative, got sigma = {sigma}, s = {s}"
            )));
        }
        Ok(NormParams { sigma, s })
    }

    /// The plain Sobolev H^s weight (sigma = 0).
    pub fn sobolev(s: f64) -> Self {
        NormParams { sigma: 0.0, s }
    }
}

/// Truncation policy of [`PeriodicFunction::product_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncationPolicy {
    /// Clip the convolution to `max(K_u, K_v)` (the default policy).
    ClipToMax,
    /// Keep the full support `K_u + K_v`.
    Full,
}

/// Real-valued truncated Fourier series on the d-torus.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicFunction {
    dim: u8,
    trunc: u32,
    coeffs: BTreeMap<ModeIndex, Complex64>,
}

impl PeriodicFunction {
    pub fn zero(dim: u8, trunc: u32) -> Self {
        PeriodicFunction {
            dim,
            trunc,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(dim: u8, trunc: u32, value: f64) -> Self {
        let mut f = Self::zero(dim, trunc);
        if value != 0.0 {
            f.coeffs
                .insert(ModeIndex::zero(dim), Complex64::new(value, 0.0));
        }
        f
    }

    /// `amp * cos(k.x)`.
    pub fn cosine(trunc: u32, k: ModeIndex, amp: f64) -> Self {
        let mut f = Self::zero(k.dim(), trunc);
        if k.is_zero() {
            return Self::constant(k.dim(), trunc, amp);
        }
        let half = Complex64::new(amp / 2.0, 0.0);
        f.insert_raw(k, half);
        f.insert_raw(k.neg(), half);
        f
    }

    /// `amp * sin(k.x)`.
    pub fn sine(trunc: u32, k: ModeIndex, amp: f64) -> Self {
        let mut f = Self::zero(k.dim(), trunc);
        if k.is_zero() {
            return f;
        }
        let half = Complex64::new(0.0, -amp / 2.0);
        f.insert_raw(k, half);
        f.insert_raw(k.neg(), half.conj());
        f
    }

    /// Builds a real-valued function: the coefficient map is symmetrized,
    /// `u_k <- (c_k + conj(c_{-k})) / 2`, so real-valuedness holds by
    /// construction. Modes beyond the truncation are rejected.
    pub fn from_coeffs<I>(dim: u8, trunc: u32, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ModeIndex, Complex64)>,
    {
        let raw = Self::collect_map(dim, trunc, entries)?;
        let mut sym = BTreeMap::new();
        for (&k, &c) in &raw {
            let mirror = raw.get(&k.neg()).copied().unwrap_or(Complex64::ZERO);
            let v = (c + mirror.conj()) * 0.5;
            if v != Complex64::ZERO {
                sym.insert(k, v);
                sym.insert(k.neg(), v.conj());
            }
        }
        Ok(PeriodicFunction {
            dim,
            trunc,
            coeffs: sym,
        })
    }

    /// Builds a function from raw complex coefficients without symmetrizing.
    /// The caller is responsible for conjugate symmetry when the value is
    /// meant to represent a real function.
    pub fn from_coeffs_unchecked<I>(dim: u8, trunc: u32, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ModeIndex, Complex64)>,
    {
        let coeffs = Self::collect_map(dim, trunc, entries)?;
        Ok(PeriodicFunction { dim, trunc, coeffs })
    }

    fn collect_map<I>(dim: u8, trunc: u32, entries: I) -> Result<BTreeMap<ModeIndex, Complex64>>
    where
        I: IntoIterator<Item = (ModeIndex, Complex64)>,
    {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        let mut map = BTreeMap::new();
        for (k, c) in entries {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch(dim, k.dim()));
            }
            if k.linf() > trunc {
                return Err(Error::InvalidInput(format!(
                    "mode {:?} lies beyond the truncation K = {trunc}",
                    k.comps()
                )));
            }
            if c != Complex64::ZERO {
                *map.entry(k).or_insert(Complex64::ZERO) += c;
            }
        }
        map.retain(|_, c| *c != Complex64::ZERO);
        Ok(map)
    }

    fn insert_raw(&mut self, k: ModeIndex, c: Complex64) {
        if c != Complex64::ZERO {
            self.coeffs.insert(k, c);
        }
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn coeff(&self, k: &ModeIndex) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&ModeIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn support_size(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Mean value (the k = 0 coefficient).
    pub fn mean(&self) -> f64 {
        self.coeff(&ModeIndex::zero(self.dim)).re
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops coefficients with modulus below `floor`.
    pub fn prune_abs(&self, floor: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|_, c| c.norm() >= floor);
        out
    }

    /// Re-projects onto modes with `|k|_inf <= trunc`.
    pub fn truncate_to(&self, trunc: u32) -> Self {
        let mut out = Self::zero(self.dim, trunc);
        for (&k, &c) in &self.coeffs {
            if k.linf() <= trunc {
                out.coeffs.insert(k, c);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        out.trunc = self.trunc.max(other.trunc);
        for (&k, &c) in &other.coeffs {
            let e = out.coeffs.entry(k).or_insert(Complex64::ZERO);
            *e += c;
            if *e == Complex64::ZERO {
                out.coeffs.remove(&k);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        if factor == 0.0 {
            out.coeffs.clear();
            return out;
        }
        for c in out.coeffs.values_mut() {
            *c *= factor;
        }
        out
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    /// The analytic-Sobolev norm
    /// `( sum_k e^{2 sigma |k|_1} <k>^{2s} |u_k|^2 )^{1/2}` over stored modes.
    pub fn norm_sigma_s(&self, p: &NormParams) -> f64 {
        let mut acc = 0.0;
        for (k, c) in &self.coeffs {
            let w = (2.0 * p.sigma * k.l1() as f64).exp() * k.bracket().powf(2.0 * p.s);
            acc += w * c.norm_sqr();
        }
        acc.sqrt()
    }

    /// L2 inner product `(u, v) = (2 pi)^d sum_k u_k conj(v_k)`, real part.
    pub fn l2_inner(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        let vol = (2.0 * std::f64::consts::PI).powi(self.dim as i32);
        let mut acc = Complex64::ZERO;
        for (k, c) in &self.coeffs {
            acc += c * other.coeff(k).conj();
        }
        Ok(vol * acc.re)
    }

    /// Applies a Fourier multiplier. Only the lexicographically nonnegative
    /// half of the symbol is read; the conjugate half is filled as
    /// `conj(m(k))` so real-valuedness is preserved for any symbol.
    pub fn fourier_multiplier<F>(&self, symbol: F) -> Self
    where
        F: Fn(&ModeIndex) -> Complex64,
    {
        let mut out = Self::zero(self.dim, self.trunc);
        for (&k, &c) in &self.coeffs {
            let m = if k.is_lex_nonneg() {
                symbol(&k)
            } else {
                symbol(&k.neg()).conj()
            };
            let v = c * m;
            if v != Complex64::ZERO {
                out.coeffs.insert(k, v);
            }
        }
        out
    }

    /// Partial derivative in direction `j` (multiplier `i k_j`).
    pub fn derivative(&self, j: usize) -> Self {
        self.fourier_multiplier(|k| Complex64::new(0.0, k.component(j) as f64))
    }

    /// `|D| u` (multiplier `|k|`).
    pub fn abs_d(&self) -> Self {
        self.fourier_multiplier(|k| Complex64::new(k.euclid(), 0.0))
    }

    /// Translation `x -> x + theta` (multiplier `e^{i k.theta}`), exact in
    /// coefficient space for any shift.
    pub fn translate(&self, theta: &[f64]) -> Self {
        self.fourier_multiplier(|k| {
            let phase: f64 = k
                .comps()
                .iter()
                .zip(theta)
                .map(|(&ki, &ti)| ki as f64 * ti)
                .sum();
            Complex64::from_polar(1.0, phase)
        })
    }

    /// Reflection at the origin, `u(x) -> u(-x)`.
    pub fn reflect(&self) -> Self {
        let mut out = Self::zero(self.dim, self.trunc);
        for (&k, &c) in &self.coeffs {
            out.coeffs.insert(k.neg(), c);
        }
        out
    }

    /// Exact discrete convolution of the coefficient maps, clipped to
    /// `max(K_u, K_v)`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.product_with(other, TruncationPolicy::ClipToMax)
    }

    /// Exact discrete convolution with full support `K_u + K_v`.
    pub fn product_full(&self, other: &Self) -> Result<Self> {
        self.product_with(other, TruncationPolicy::Full)
    }

    pub fn product_with(&self, other: &Self, policy: TruncationPolicy) -> Result<Self> {
        self.check_dim(other)?;
        let trunc = match policy {
            TruncationPolicy::ClipToMax => self.trunc.max(other.trunc),
            TruncationPolicy::Full => self.trunc + other.trunc,
        };
        let mut out = Self::zero(self.dim, trunc);
        for (ku, cu) in &self.coeffs {
            for (kv, cv) in &other.coeffs {
                let k = ku.add(kv);
                if k.linf() > trunc {
                    continue;
                }
                let e = out.coeffs.entry(k).or_insert(Complex64::ZERO);
                *e += cu * cv;
            }
        }
        out.coeffs.retain(|_, c| *c != Complex64::ZERO);
        Ok(out)
    }

    /// Largest |k|_inf carrying a stored coefficient.
    pub fn active_radius(&self) -> u32 {
        self.coeffs.keys().map(|k| k.linf()).max().unwrap_or(0)
    }
}

/// Diagnostic record of the tame product estimate: the ratio
/// `||uv||_{sigma,s} / (||u||_{sigma,s} ||v||_{sigma,s0} + ||u||_{sigma,s0} ||v||_{sigma,s})`.
#[derive(Clone, Copy, Debug)]
pub struct TameDiagnostic {
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// Evaluates the tame-estimate ratio for one pair `(u, v)`. Requires
/// `s >= s0 > d/2`; callers assert boundedness over randomized families.
pub fn check_tame_product(
    u: &PeriodicFunction,
    v: &PeriodicFunction,
    sigma: f64,
    s: f64,
    s0: f64,
) -> Result<TameDiagnostic> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch(u.dim(), v.dim()));
    }
    let d_half = u.dim() as f64 / 2.0;
    if !(s0 > d_half) {
        return Err(Error::InvalidParameter(format!(
            "tame estimate needs s0 > d/2 = {d_half}, got s0 = {s0}"
        )));
    }
    if s < s0 {
        return Err(Error::InvalidParameter(format!(
            "tame estimate needs s >= s0, got s = {s} < s0 = {s0}"
        )));
    }
    let high = NormParams::new(sigma, s)?;
    let low = NormParams::new(sigma, s0)?;
    let numerator = u.product_full(v)?.norm_sigma_s(&high);
    let denominator =
        u.norm_sigma_s(&high) * v.norm_sigma_s(&low) + u.norm_sigma_s(&low) * v.norm_sigma_s(&high);
    let ratio = if denominator == 0.0 {
        0.0
    } else {
        numerator / denominator
    };
    Ok(TameDiagnostic {
        ratio,
        numerator,
        denominator,
    })
}
