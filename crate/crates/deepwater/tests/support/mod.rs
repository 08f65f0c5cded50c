//! Order-by-order small-amplitude expansion of the Stokes branch,
//! independent of the flattening/Newton pipeline.
//!
//! Everything here works on truncated power series in the amplitude with
//! `PeriodicFunction` coefficients. The Dirichlet-Neumann operator enters
//! through its boundary-series composition: for the decaying harmonic
//! potential with trace data `theta`,
//!
//! `psi = C(eta) theta`,  `C(eta) = sum_m (eta^m / m!) |D|^m`,
//! `G(eta) psi = A(eta) theta`,
//! `A(eta) = sum_m (eta^m / m!) |D|^{m+1}
//!           - eta_x d_x sum_m (eta^m / m!) |D|^m`,
//!
//! inverted order by order, which is the classical expansion of `G` in
//! powers of the surface. The branch recursion then solves the traveling
//! system by matching powers: at each order the speed correction is fixed
//! by the mode-k solvability condition and the profile by the explicit
//! flat-state inverse (kernel component removed).

use deepwater::analytic::{ModeIndex, PeriodicFunction};
use deepwater::stokes::{
    bifurcation_speed, kernel_vector, linearized_inverse_at_zero, SymmetricPair,
};

/// Truncated power series in the amplitude with function coefficients.
#[derive(Clone, Debug)]
pub struct EpsSeries {
    terms: Vec<PeriodicFunction>,
}

impl EpsSeries {
    pub fn zero(order: usize, trunc: u32) -> Self {
        EpsSeries {
            terms: vec![PeriodicFunction::zero(1, trunc); order + 1],
        }
    }

    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn term(&self, n: usize) -> &PeriodicFunction {
        &self.terms[n]
    }

    pub fn set_term(&mut self, n: usize, f: PeriodicFunction) {
        self.terms[n] = f.truncate_to(self.terms[n].trunc());
    }

    pub fn add(&self, other: &Self) -> Self {
        let terms = self
            .terms
            .iter()
            .zip(&other.terms)
            .map(|(a, b)| a.add(b).unwrap())
            .collect();
        EpsSeries { terms }
    }

    pub fn scale(&self, f: f64) -> Self {
        EpsSeries {
            terms: self.terms.iter().map(|t| t.scale(f)).collect(),
        }
    }

    /// Multiplication by a scalar power series.
    pub fn scalar_mul(&self, scalar: &[f64]) -> Self {
        let mut out = Self::zero(self.order(), self.terms[0].trunc());
        for n in 0..=self.order() {
            let mut acc = PeriodicFunction::zero(1, self.terms[0].trunc());
            for j in 0..=n.min(scalar.len() - 1) {
                acc = acc.add(&self.terms[n - j].scale(scalar[j])).unwrap();
            }
            out.terms[n] = acc;
        }
        out
    }

    /// Cauchy product, clipped to the shared truncation.
    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order();
        let trunc = self.terms[0].trunc();
        let mut out = Self::zero(order, trunc);
        for n in 0..=order {
            let mut acc = PeriodicFunction::zero(1, trunc);
            for i in 0..=n {
                if self.terms[i].is_zero() || other.terms[n - i].is_zero() {
                    continue;
                }
                acc = acc
                    .add(&self.terms[i].product(&other.terms[n - i]).unwrap())
                    .unwrap();
            }
            out.terms[n] = acc;
        }
        out
    }

    pub fn dx(&self) -> Self {
        EpsSeries {
            terms: self.terms.iter().map(|t| t.derivative(0)).collect(),
        }
    }

    pub fn abs_d(&self) -> Self {
        EpsSeries {
            terms: self.terms.iter().map(|t| t.abs_d()).collect(),
        }
    }

    /// Reciprocal of `1 + self` for a series starting at order >= 1.
    pub fn one_plus_recip(&self) -> Self {
        assert!(self.terms[0].is_zero());
        let order = self.order();
        let trunc = self.terms[0].trunc();
        let mut out = Self::zero(order, trunc);
        out.terms[0] = PeriodicFunction::constant(1, trunc, 1.0);
        for n in 1..=order {
            let mut acc = PeriodicFunction::zero(1, trunc);
            for j in 1..=n {
                if self.terms[j].is_zero() || out.terms[n - j].is_zero() {
                    continue;
                }
                acc = acc
                    .add(&self.terms[j].product(&out.terms[n - j]).unwrap())
                    .unwrap();
            }
            out.terms[n] = acc.scale(-1.0);
        }
        out
    }

}

/// Powers `eta^0 .. eta^max_power` as series.
fn eta_powers(eta: &EpsSeries, max_power: usize) -> Vec<EpsSeries> {
    let mut powers = Vec::with_capacity(max_power + 1);
    let mut one = EpsSeries::zero(eta.order(), eta.term(0).trunc());
    one.terms[0] = PeriodicFunction::constant(1, eta.term(0).trunc(), 1.0);
    powers.push(one);
    for m in 1..=max_power {
        let next = powers[m - 1].mul(eta);
        powers.push(next);
    }
    powers
}

/// The Dirichlet-Neumann series `G(eta) psi` through the shared order.
/// `eta` must start at order 1 (zero constant term).
pub fn dn_series(eta: &EpsSeries, psi: &EpsSeries) -> EpsSeries {
    assert!(eta.term(0).is_zero(), "eta must start at order 1");
    let order = eta.order();
    let trunc = eta.term(0).trunc();
    let powers = eta_powers(eta, order);
    let inv_fact: Vec<f64> = {
        let mut f = vec![1.0; order + 1];
        for m in 1..=order {
            f[m] = f[m - 1] / m as f64;
        }
        f
    };

    // invert C(eta) theta = psi order by order
    let mut theta = psi.clone();
    for n in 1..=order {
        let mut correction = PeriodicFunction::zero(1, trunc);
        for m in 1..=n {
            // [(eta^m/m!) |D|^m theta]_n uses theta terms of order < n only
            let dtheta = {
                let mut d = theta.clone();
                for _ in 0..m {
                    d = d.abs_d();
                }
                d
            };
            for i in 0..n {
                let weight = &powers[m].terms[n - i];
                if weight.is_zero() || dtheta.terms[i].is_zero() {
                    continue;
                }
                correction = correction
                    .add(&weight.product(&dtheta.terms[i]).unwrap().scale(inv_fact[m]))
                    .unwrap();
            }
        }
        theta.terms[n] = psi.terms[n].sub(&correction).unwrap();
    }

    // assemble A(eta) theta
    let mut out = EpsSeries::zero(order, trunc);
    let eta_x = eta.dx();
    for m in 0..=order {
        let mut d_high = theta.clone();
        for _ in 0..=m {
            d_high = d_high.abs_d();
        }
        out = out.add(&powers[m].mul(&d_high).scale(inv_fact[m]));

        let mut d_mixed = theta.clone();
        for _ in 0..m {
            d_mixed = d_mixed.abs_d();
        }
        let term = eta_x.mul(&powers[m].mul(&d_mixed.dx()).scale(inv_fact[m]));
        out = out.add(&term.scale(-1.0));
    }
    out
}

/// Residual series of the traveling-wave system for candidate series
/// `(eta, psi, c)`.
pub fn residual_series(
    eta: &EpsSeries,
    psi: &EpsSeries,
    c: &[f64],
    g: f64,
) -> (EpsSeries, EpsSeries) {
    let g_psi = dn_series(eta, psi);
    let first = eta.dx().scalar_mul(c).add(&g_psi);

    let eta_x = eta.dx();
    let psi_x = psi.dx();
    let flux = g_psi.add(&eta_x.mul(&psi_x));
    let weight = eta_x.mul(&eta_x).one_plus_recip();
    let second = psi_x
        .scalar_mul(c)
        .add(&eta.scale(-g))
        .add(&psi_x.mul(&psi_x).scale(-0.5))
        .add(&flux.mul(&flux).mul(&weight).scale(0.5));
    (first, second)
}

/// The expansion of one Stokes branch.
pub struct StokesExpansion {
    pub eta: EpsSeries,
    pub psi: EpsSeries,
    /// Speed coefficients `c_0 .. c_{order-1}`.
    pub c: Vec<f64>,
    pub gravity: f64,
}

/// Builds the branch expansion through the given order by matching powers of
/// the amplitude. The amplitude is pinned by the projection convention
/// `<pair_n, u*> = ||u*||^2 [n = 1]`.
pub fn stokes_expansion(k: u32, g: f64, order: usize, trunc: u32) -> StokesExpansion {
    assert!(order >= 1);
    let kf = k as f64;
    let c0 = bifurcation_speed(k, g);
    let kernel = kernel_vector(k, g, trunc).unwrap();
    let kernel_norm_sq = kernel.norm_sq();

    let mut eta = EpsSeries::zero(order, trunc);
    let mut psi = EpsSeries::zero(order, trunc);
    let mut c = vec![0.0; order];
    c[0] = c0;
    eta.set_term(1, kernel.eta().clone());
    psi.set_term(1, kernel.psi().clone());

    for n in 2..=order {
        // residual at order n with the unknowns zeroed
        let (r1, r2) = residual_series(&eta, &psi, &c, g);
        let k1 = r1.term(n);
        let k2 = r2.term(n);

        // mode-k data of the known part
        let f_k = -2.0 * k1.coeff(&ModeIndex::d1(k as i32)).im;
        let g_k = 2.0 * k2.coeff(&ModeIndex::d1(k as i32)).re;

        // solvability fixes the speed correction c_{n-1}
        let c_corr = (g.sqrt() * f_k - kf.sqrt() * g_k) / (2.0 * kf * (kf * g).sqrt());
        c[n - 1] = c_corr;

        // right-hand side for the profile correction:
        //   linF(c0)[pair_n] = -K_n - c_{n-1} d_x pair_1
        let f_rhs = k1
            .scale(-1.0)
            .sub(&eta.term(1).derivative(0).scale(c_corr))
            .unwrap();
        let g_rhs = k2
            .scale(-1.0)
            .sub(&psi.term(1).derivative(0).scale(c_corr))
            .unwrap();
        let pair_n = linearized_inverse_at_zero(&f_rhs, &g_rhs, k, g, 1e-8).unwrap();
        // remove the kernel component (projection convention)
        let along = pair_n.inner(&kernel).unwrap() / kernel_norm_sq;
        let pair_n = pair_n.add_scaled(&kernel, -along).unwrap();

        eta.set_term(n, pair_n.eta().clone());
        psi.set_term(n, pair_n.psi().clone());
    }

    StokesExpansion {
        eta,
        psi,
        c,
        gravity: g,
    }
}

impl StokesExpansion {
    /// Largest residual coefficient through the expansion order; the
    /// expansion is self-validating.
    pub fn residual_defect(&self) -> f64 {
        let (r1, r2) = residual_series(&self.eta, &self.psi, &self.c, self.gravity);
        let mut defect = 0.0f64;
        for n in 0..=self.eta.order() {
            defect = defect.max(r1.term(n).max_abs_coeff());
            defect = defect.max(r2.term(n).max_abs_coeff());
        }
        defect
    }

    /// Evaluates the series at a concrete amplitude.
    pub fn evaluate(&self, epsilon: f64) -> (SymmetricPair, f64) {
        let trunc = self.eta.term(0).trunc();
        let mut eta = PeriodicFunction::zero(1, trunc);
        let mut psi = PeriodicFunction::zero(1, trunc);
        let mut c_val = 0.0;
        let mut pow = 1.0;
        for n in 0..=self.eta.order() {
            eta = eta.add(&self.eta.term(n).scale(pow)).unwrap();
            psi = psi.add(&self.psi.term(n).scale(pow)).unwrap();
            if n < self.c.len() {
                c_val += self.c[n] * pow;
            }
            pow *= epsilon;
        }
        let kk = trunc as usize;
        let cos: Vec<f64> = (1..=kk)
            .map(|j| 2.0 * eta.coeff(&ModeIndex::d1(j as i32)).re)
            .collect();
        let sin: Vec<f64> = (1..=kk)
            .map(|j| -2.0 * psi.coeff(&ModeIndex::d1(j as i32)).im)
            .collect();
        (
            SymmetricPair::from_coefficients(&cos, &sin, trunc).unwrap(),
            c_val,
        )
    }

    /// Cosine coefficient series of one eta mode: `[order] -> coefficient`.
    pub fn eta_mode_series(&self, mode: u32, through: usize) -> Vec<f64> {
        (0..=through)
            .map(|n| 2.0 * self.eta.term(n).coeff(&ModeIndex::d1(mode as i32)).re)
            .collect()
    }

    /// Sine coefficient series of one psi mode.
    pub fn psi_mode_series(&self, mode: u32, through: usize) -> Vec<f64> {
        (0..=through)
            .map(|n| -2.0 * self.psi.term(n).coeff(&ModeIndex::d1(mode as i32)).im)
            .collect()
    }
}
