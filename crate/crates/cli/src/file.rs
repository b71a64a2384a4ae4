//! JSON solution files.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "config": { "n": 3, "R": 1.5, "omega": 0.0, "K": 52 },
//!   "coeffs": [[re, im], ...],
//!   "diagnostics": { "phase1": {...}, "phase2": {...} }
//! }
//! ```
//!
//! `coeffs` holds `c_{-K} .. c_K`. `R` is a number or the string `"planar"`.
//! Floats are written in shortest round-trip form, so reading a file back
//! gives bitwise-identical coefficients.

use std::fs;
use std::io::Write;
use std::path::Path;

use hyperchoreo::optimizer::PhaseStatus;
use hyperchoreo::{Choreography, Configuration, Curvature, PhaseReport, SolveReport, TrigPath};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format_version: u32,
    pub config: ConfigRecord,
    pub coeffs: Vec<[f64; 2]>,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: Radius,
    pub omega: f64,
    #[serde(rename = "K")]
    pub bandwidth: usize,
}

/// A finite radius, or the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Radius {
    Finite(f64),
    Planar(PlanarTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanarTag {
    #[serde(rename = "planar")]
    Planar,
}

impl Radius {
    pub const PLANAR: Radius = Radius::Planar(PlanarTag::Planar);

    /// Accepts a positive number, `inf` or `planar`.
    pub fn parse(text: &str) -> Result<Self, String> {
        match text.trim() {
            "inf" | "infinity" | "planar" => Ok(Self::PLANAR),
            t => match t.parse::<f64>() {
                Ok(r) if r.is_infinite() && r > 0.0 => Ok(Self::PLANAR),
                Ok(r) if r.is_finite() && r > 0.0 => Ok(Self::Finite(r)),
                _ => Err(format!("expected a positive radius or `inf`, got `{t}`")),
            },
        }
    }

    pub fn curvature(self) -> Result<Curvature, CliError> {
        match self {
            Radius::Planar(_) => Ok(Curvature::Planar),
            Radius::Finite(r) => Ok(Curvature::Hyperbolic(hyperchoreo::CurvatureRadius::new(r)?)),
        }
    }

    pub fn from_curvature(c: Curvature) -> Self {
        match c {
            Curvature::Planar => Self::PLANAR,
            Curvature::Hyperbolic(r) => Radius::Finite(r.get()),
        }
    }
}

impl std::fmt::Display for Radius {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Radius::Finite(r) => write!(f, "{r}"),
            Radius::Planar(_) => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub phase1: Option<PhaseRecord>,
    pub phase2: Option<PhaseRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub action: f64,
    pub coefficient_count: usize,
    pub wall_time_seconds: f64,
    pub iterations: usize,
    #[serde(with = "float_or_null")]
    pub gradient_rel_norm: f64,
    pub smallest_coefficient: f64,
    #[serde(with = "float_or_null")]
    pub residual_rel_norm: f64,
    pub status: StatusRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusRecord {
    Converged,
    MaxIterations,
    LineSearchFailure,
    Diverged,
    Stalled,
}

impl From<PhaseStatus> for StatusRecord {
    fn from(s: PhaseStatus) -> Self {
        match s {
            PhaseStatus::Converged => Self::Converged,
            PhaseStatus::MaxIterations => Self::MaxIterations,
            PhaseStatus::LineSearchFailure => Self::LineSearchFailure,
            PhaseStatus::Diverged => Self::Diverged,
            PhaseStatus::Stalled => Self::Stalled,
        }
    }
}

impl From<StatusRecord> for PhaseStatus {
    fn from(s: StatusRecord) -> Self {
        match s {
            StatusRecord::Converged => Self::Converged,
            StatusRecord::MaxIterations => Self::MaxIterations,
            StatusRecord::LineSearchFailure => Self::LineSearchFailure,
            StatusRecord::Diverged => Self::Diverged,
            StatusRecord::Stalled => Self::Stalled,
        }
    }
}

impl From<&PhaseReport> for PhaseRecord {
    fn from(p: &PhaseReport) -> Self {
        Self {
            action: p.action,
            coefficient_count: p.coefficient_count,
            wall_time_seconds: p.wall_time_seconds,
            iterations: p.iterations,
            gradient_rel_norm: p.gradient_rel_norm,
            smallest_coefficient: p.smallest_coefficient,
            residual_rel_norm: p.residual_rel_norm,
            status: p.status.into(),
        }
    }
}

impl From<&PhaseRecord> for PhaseReport {
    fn from(p: &PhaseRecord) -> Self {
        Self {
            action: p.action,
            coefficient_count: p.coefficient_count,
            wall_time_seconds: p.wall_time_seconds,
            iterations: p.iterations,
            gradient_rel_norm: p.gradient_rel_norm,
            smallest_coefficient: p.smallest_coefficient,
            residual_rel_norm: p.residual_rel_norm,
            status: p.status.into(),
        }
    }
}

/// JSON has no infinities; a residual that could not be computed is `null`.
mod float_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl SolutionFile {
    /// A file with no diagnostics, as used for seeds.
    pub fn seed(config: &Configuration, path: &TrigPath) -> Self {
        Self::with_report(config, path, &SolveReport::default())
    }

    pub fn from_choreography(c: &Choreography) -> Self {
        Self::with_report(&c.config, &c.path, &c.report)
    }

    fn with_report(config: &Configuration, path: &TrigPath, report: &SolveReport) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            config: ConfigRecord {
                n: config.bodies,
                radius: Radius::from_curvature(config.curvature),
                omega: config.omega,
                bandwidth: path.bandwidth(),
            },
            coeffs: path.coeffs().iter().map(|c| [c.re, c.im]).collect(),
            diagnostics: Diagnostics {
                phase1: report.phase1.as_ref().map(PhaseRecord::from),
                phase2: report.phase2.as_ref().map(PhaseRecord::from),
            },
        }
    }

    pub fn configuration(&self) -> Result<Configuration, CliError> {
        let c = &self.config;
        Ok(Configuration::new(c.n, c.radius.curvature()?, c.omega, c.bandwidth)?)
    }

    pub fn path(&self) -> Result<TrigPath, CliError> {
        let coeffs = self.coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Ok(TrigPath::new(coeffs)?)
    }

    pub fn choreography(&self) -> Result<Choreography, CliError> {
        Ok(Choreography {
            config: self.configuration()?,
            path: self.path()?,
            report: SolveReport {
                phase1: self.diagnostics.phase1.as_ref().map(PhaseReport::from),
                phase2: self.diagnostics.phase2.as_ref().map(PhaseReport::from),
            },
        })
    }

    fn validate(&self) -> Result<(), String> {
        if self.format_version != FORMAT_VERSION {
            return Err(format!("unsupported format_version {}", self.format_version));
        }
        if self.coeffs.len() != 2 * self.config.bandwidth + 1 {
            return Err(format!(
                "{} coefficients for K = {} (expected 2K+1)",
                self.coeffs.len(),
                self.config.bandwidth
            ));
        }
        if self.coeffs.iter().flatten().any(|v| !v.is_finite()) {
            return Err("non-finite coefficient".into());
        }
        self.configuration().map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let file: Self = serde_json::from_str(text).map_err(|e| CliError::Malformed(e.to_string()))?;
        file.validate().map_err(CliError::Malformed)?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("solution files always serialize");
        text.push('\n');
        text
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Malformed(msg) => CliError::Malformed(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

/// Writes through a temporary file in the target directory, then renames it
/// over `path`, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SolutionFile {
        let config = Configuration::hyperbolic(3, 1.5, 0.25, 2).unwrap();
        let path = TrigPath::from_modes(
            2,
            &[
                (-2, Complex64::new(0.1, -1.0 / 3.0)),
                (1, Complex64::new(std::f64::consts::PI, 1e-300)),
                (2, Complex64::new(-0.0, 5e-324)),
            ],
        );
        SolutionFile::seed(&config, &path)
    }

    #[test]
    fn round_trip_is_bitwise() {
        let file = sample();
        let back = SolutionFile::from_json(&file.to_json()).unwrap();
        for (a, b) in file.coeffs.iter().zip(&back.coeffs) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
        assert_eq!(back, file);
    }

    #[test]
    fn planar_radius_is_a_string() {
        let config = Configuration::planar(3, 0.0, 1).unwrap();
        let file = SolutionFile::seed(&config, &TrigPath::zeros(1));
        let json = file.to_json();
        assert!(json.contains("\"R\": \"planar\""));
        assert_eq!(SolutionFile::from_json(&json).unwrap().configuration().unwrap(), config);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let good = sample().to_json();
        let bad = [
            good.replace("\"format_version\": 1", "\"format_version\": 9"),
            good.replace("\"K\": 2", "\"K\": 3"),
            good.replace("\"R\": 1.5", "\"R\": \"flat\""),
            good.replace("\"R\": 1.5", "\"R\": -1.0"),
            good.replace("\"n\": 3", "\"n\": 1"),
            "{".to_string(),
        ];
        for text in bad {
            assert!(matches!(SolutionFile::from_json(&text), Err(CliError::Malformed(_))), "{text}");
        }
    }

    #[test]
    fn radius_parsing() {
        assert_eq!(Radius::parse("inf"), Ok(Radius::PLANAR));
        assert_eq!(Radius::parse("planar"), Ok(Radius::PLANAR));
        assert_eq!(Radius::parse("1.2"), Ok(Radius::Finite(1.2)));
        assert!(Radius::parse("0").is_err());
        assert!(Radius::parse("nan").is_err());
    }
}
