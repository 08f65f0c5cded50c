//! JSON and CSV formats shared by the library, the CLI and external
//! bindings.
//!
//! Coefficient files store only the lexicographically nonnegative half of
//! each conjugate-symmetric map; the mirror modes are implied. All floats
//! are written in scientific notation with 17 significant digits, so
//! write-then-read reproduces every `f64` bit for bit and identical inputs
//! produce byte-identical files.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analytic::{ModeIndex, PeriodicFunction};
use crate::collocation::CollocationGrid;
use crate::error::{Error, Result};
use crate::halfspace::{ExpPolyProfile, HalfCylinderFunction, ProfileTerm};
use crate::stokes::{StokesBranch, StokesSolution, SymmetricPair};

/// Current version tag carried by every report and branch file.
pub const SCHEMA_VERSION: u32 = 1;

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes with 17-significant-digit floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = to_json_string(value)?;
    body.push('\n');
    std::fs::write(path, body)?;
    Ok(())
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let body = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&body)?)
}

/// One stored mode of a periodic function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub k: Vec<i32>,
    pub re: f64,
    pub im: f64,
}

/// Serialized form of [`PeriodicFunction`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodicFunctionData {
    pub d: u8,
    #[serde(rename = "K")]
    pub trunc: u32,
    pub coeffs: Vec<CoeffEntry>,
}

impl From<&PeriodicFunction> for PeriodicFunctionData {
    fn from(f: &PeriodicFunction) -> Self {
        let coeffs = f
            .coeffs()
            .filter(|(k, _)| k.is_lex_nonneg())
            .map(|(k, c)| CoeffEntry {
                k: k.comps().to_vec(),
                re: c.re,
                im: c.im,
            })
            .collect();
        PeriodicFunctionData {
            d: f.dim(),
            trunc: f.trunc(),
            coeffs,
        }
    }
}

impl PeriodicFunctionData {
    pub fn to_function(&self) -> Result<PeriodicFunction> {
        let mut entries = Vec::with_capacity(2 * self.coeffs.len());
        for e in &self.coeffs {
            let k = ModeIndex::new(&e.k)?;
            if !k.is_lex_nonneg() {
                return Err(Error::InvalidInput(format!(
                    "mode {:?} is not lexicographically nonnegative; conjugates are implied",
                    e.k
                )));
            }
            let c = Complex64::new(e.re, e.im);
            if k.is_zero() {
                if e.im != 0.0 {
                    return Err(Error::InvalidInput(
                        "the zero-mode coefficient of a real function must be real".into(),
                    ));
                }
                entries.push((k, c));
            } else {
                entries.push((k, c));
                entries.push((k.neg(), c.conj()));
            }
        }
        PeriodicFunction::from_coeffs_unchecked(self.d, self.trunc, entries)
    }
}

/// One stored exponential-polynomial term.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermEntry {
    pub mu: f64,
    pub p: u32,
    pub re: f64,
    pub im: f64,
}

/// One stored mode of a half-cylinder function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub k: Vec<i32>,
    pub terms: Vec<TermEntry>,
}

/// Serialized form of [`HalfCylinderFunction`]: the coefficient format with
/// per-mode term lists plus the explicit constant component.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HalfCylinderData {
    pub d: u8,
    #[serde(rename = "K")]
    pub trunc: u32,
    pub constant: f64,
    pub coeffs: Vec<ProfileEntry>,
}

impl From<&HalfCylinderFunction> for HalfCylinderData {
    fn from(f: &HalfCylinderFunction) -> Self {
        let coeffs = f
            .profiles()
            .filter(|(k, _)| k.is_lex_nonneg())
            .map(|(k, prof)| ProfileEntry {
                k: k.comps().to_vec(),
                terms: prof
                    .terms()
                    .iter()
                    .map(|t| TermEntry {
                        mu: t.mu,
                        p: t.p,
                        re: t.c.re,
                        im: t.c.im,
                    })
                    .collect(),
            })
            .collect();
        HalfCylinderData {
            d: f.dim(),
            trunc: f.trunc(),
            constant: f.constant_part().re,
            coeffs,
        }
    }
}

impl HalfCylinderData {
    pub fn to_function(&self) -> Result<HalfCylinderFunction> {
        let mut parts = Vec::with_capacity(2 * self.coeffs.len());
        for e in &self.coeffs {
            let k = ModeIndex::new(&e.k)?;
            if !k.is_lex_nonneg() {
                return Err(Error::InvalidInput(format!(
                    "mode {:?} is not lexicographically nonnegative; conjugates are implied",
                    e.k
                )));
            }
            let terms: Vec<ProfileTerm> = e
                .terms
                .iter()
                .map(|t| ProfileTerm {
                    mu: t.mu,
                    p: t.p,
                    c: Complex64::new(t.re, t.im),
                })
                .collect();
            let prof = ExpPolyProfile::new(terms)?;
            if !k.is_zero() {
                parts.push((k.neg(), prof.conj()));
            }
            parts.push((k, prof));
        }
        HalfCylinderFunction::from_parts(
            self.d,
            self.trunc,
            parts,
            Complex64::new(self.constant, 0.0),
        )
    }
}

/// Serialized branch point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionData {
    pub epsilon: f64,
    pub c: f64,
    pub residual_norm: f64,
    pub sigma_estimate: f64,
    pub sigma_fit_quality: f64,
    pub eta: PeriodicFunctionData,
    pub psi: PeriodicFunctionData,
}

/// Serialized branch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchData {
    pub schema_version: u32,
    pub g: f64,
    pub k: u32,
    #[serde(rename = "K")]
    pub trunc: u32,
    pub solutions: Vec<SolutionData>,
}

impl From<&StokesBranch> for BranchData {
    fn from(branch: &StokesBranch) -> Self {
        let trunc = branch
            .solutions
            .first()
            .map(|s| s.pair.trunc())
            .unwrap_or(0);
        BranchData {
            schema_version: SCHEMA_VERSION,
            g: branch.gravity,
            k: branch.wavenumber,
            trunc,
            solutions: branch
                .solutions
                .iter()
                .map(|s| SolutionData {
                    epsilon: s.epsilon,
                    c: s.c,
                    residual_norm: s.residual_norm,
                    sigma_estimate: s.sigma_estimate,
                    sigma_fit_quality: s.sigma_fit_quality,
                    eta: s.pair.eta().into(),
                    psi: s.pair.psi().into(),
                })
                .collect(),
        }
    }
}

impl BranchData {
    pub fn to_branch(&self) -> Result<StokesBranch> {
        let mut solutions = Vec::with_capacity(self.solutions.len());
        for s in &self.solutions {
            let eta = s.eta.to_function()?;
            let psi = s.psi.to_function()?;
            let trunc = eta.trunc().max(psi.trunc());
            let kk = trunc as usize;
            let cos: Vec<f64> = (1..=kk)
                .map(|j| 2.0 * eta.coeff(&ModeIndex::d1(j as i32)).re)
                .collect();
            let sin: Vec<f64> = (1..=kk)
                .map(|j| -2.0 * psi.coeff(&ModeIndex::d1(j as i32)).im)
                .collect();
            solutions.push(StokesSolution {
                pair: SymmetricPair::from_coefficients(&cos, &sin, trunc)?,
                c: s.c,
                epsilon: s.epsilon,
                residual_norm: s.residual_norm,
                sigma_estimate: s.sigma_estimate,
                sigma_fit_quality: s.sigma_fit_quality,
            });
        }
        Ok(StokesBranch {
            gravity: self.g,
            wavenumber: self.k,
            solutions,
        })
    }
}

/// Writes the branch profile tables: header `x,eta,psi`, one 512-point block
/// per solution introduced by a `# epsilon=... c=...` comment line.
pub fn write_branch_csv<W: Write>(mut w: W, branch: &StokesBranch) -> Result<()> {
    const POINTS: usize = 512;
    writeln!(w, "x,eta,psi")?;
    let grid = CollocationGrid::new(1, POINTS)?;
    for s in &branch.solutions {
        writeln!(w, "# epsilon={:.16e} c={:.16e}", s.epsilon, s.c)?;
        let eta = grid.eval(s.pair.eta());
        let psi = grid.eval(s.pair.psi());
        for i in 0..POINTS {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e}",
                grid.point(i)[0],
                eta[i],
                psi[i]
            )?;
        }
    }
    Ok(())
}
