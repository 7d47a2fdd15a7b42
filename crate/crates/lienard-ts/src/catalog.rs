//! Closed-form function catalog for scenario files. Named families with
//! parameters instead of an expression parser keeps every test input
//! reproducible in closed form.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::GridFunction;
use crate::problem::ScalarFn;
use crate::timescale::Mesh;

fn one() -> f64 {
    1.0
}

/// Scalar function families for h and g.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// value
    Constant { value: f64 },
    /// slope·x + intercept
    Linear {
        slope: f64,
        #[serde(default)]
        intercept: f64,
    },
    /// amplitude·sin(frequency·x + phase)
    Sin {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// amplitude·atan(scale·x)
    Arctan {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// coefficient·(x − shift)³
    Cubic {
        #[serde(default = "one")]
        coefficient: f64,
        #[serde(default)]
        shift: f64,
    },
    /// amplitude·exp(−((x − center)/width)²)
    GaussianBump {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// Piecewise-linear through sorted (x, y) points; clamped outside.
    Table { points: Vec<(f64, f64)> },
}

fn table_eval(points: &[(f64, f64)], x: f64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    if x <= points[0].0 {
        return points[0].1;
    }
    if x >= points[points.len() - 1].0 {
        return points[points.len() - 1].1;
    }
    let i = points.partition_point(|p| p.0 <= x);
    let (x0, y0) = points[i - 1];
    let (x1, y1) = points[i];
    if x1 == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

impl FunctionSpec {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            FunctionSpec::Table { points } => {
                if points.is_empty() {
                    return Err("table function needs at least one point".into());
                }
                if points.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err("table x-coordinates must be strictly increasing".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> ScalarFn {
        match self.clone() {
            FunctionSpec::Constant { value } => Arc::new(move |_| value),
            FunctionSpec::Linear { slope, intercept } => Arc::new(move |x| slope * x + intercept),
            FunctionSpec::Sin { amplitude, frequency, phase } => {
                Arc::new(move |x| amplitude * (frequency * x + phase).sin())
            }
            FunctionSpec::Arctan { amplitude, scale } => {
                Arc::new(move |x| amplitude * (scale * x).atan())
            }
            FunctionSpec::Cubic { coefficient, shift } => {
                Arc::new(move |x| coefficient * (x - shift).powi(3))
            }
            FunctionSpec::GaussianBump { amplitude, width, center } => Arc::new(move |x| {
                let u = (x - center) / width;
                amplitude * (-u * u).exp()
            }),
            FunctionSpec::Table { points } => Arc::new(move |x| table_eval(&points, x)),
        }
    }
}

/// T-periodic forcing families; harmonics are in cycles per period.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingSpec {
    Zero,
    /// amplitude·cos(2π·harmonic·t/T)
    Cos {
        amplitude: f64,
        #[serde(default = "one")]
        harmonic: f64,
    },
    /// amplitude·sin(2π·harmonic·t/T)
    Sin {
        amplitude: f64,
        #[serde(default = "one")]
        harmonic: f64,
    },
    /// Piecewise-linear in t over one period.
    Table { points: Vec<(f64, f64)> },
}

impl ForcingSpec {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            ForcingSpec::Table { points } => {
                if points.is_empty() {
                    return Err("forcing table needs at least one point".into());
                }
                if points.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err("forcing table times must be strictly increasing".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self, mesh: &Arc<Mesh>) -> GridFunction {
        let period = mesh.period();
        match self {
            ForcingSpec::Zero => GridFunction::constant(mesh, 0.0),
            ForcingSpec::Cos { amplitude, harmonic } => {
                let (a, h) = (*amplitude, *harmonic);
                GridFunction::from_fn(mesh, move |t| {
                    a * (2.0 * std::f64::consts::PI * h * t / period).cos()
                })
            }
            ForcingSpec::Sin { amplitude, harmonic } => {
                let (a, h) = (*amplitude, *harmonic);
                GridFunction::from_fn(mesh, move |t| {
                    a * (2.0 * std::f64::consts::PI * h * t / period).sin()
                })
            }
            ForcingSpec::Table { points } => {
                let pts = points.clone();
                GridFunction::from_fn(mesh, move |t| table_eval(&pts, t))
            }
        }
    }

    /// Scales the forcing amplitude (used by parameter sweeps).
    pub fn scale_amplitude(&self, factor: f64) -> ForcingSpec {
        match self.clone() {
            ForcingSpec::Zero => ForcingSpec::Zero,
            ForcingSpec::Cos { amplitude, harmonic } => {
                ForcingSpec::Cos { amplitude: amplitude * factor, harmonic }
            }
            ForcingSpec::Sin { amplitude, harmonic } => {
                ForcingSpec::Sin { amplitude: amplitude * factor, harmonic }
            }
            ForcingSpec::Table { points } => ForcingSpec::Table {
                points: points.into_iter().map(|(t, v)| (t, v * factor)).collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timescale::TimeScale;

    #[test]
    fn catalog_functions_evaluate() {
        let f = FunctionSpec::Sin { amplitude: 2.0, frequency: 1.0, phase: 0.0 }.build();
        assert!((f(std::f64::consts::FRAC_PI_2) - 2.0).abs() < 1e-15);
        let g = FunctionSpec::Cubic { coefficient: 1.0, shift: 1.0 }.build();
        assert_eq!(g(3.0), 8.0);
        let t = FunctionSpec::Table { points: vec![(0.0, 0.0), (1.0, 2.0)] }.build();
        assert_eq!(t(0.5), 1.0);
        assert_eq!(t(-5.0), 0.0); // clamped
        assert_eq!(t(9.0), 2.0);
    }

    #[test]
    fn table_validation() {
        assert!(FunctionSpec::Table { points: vec![] }.validate().is_err());
        assert!(FunctionSpec::Table { points: vec![(0.0, 1.0), (0.0, 2.0)] }.validate().is_err());
        assert!(FunctionSpec::Table { points: vec![(0.0, 1.0), (1.0, 2.0)] }.validate().is_ok());
    }

    #[test]
    fn forcing_builds_on_mesh() {
        let ts = TimeScale::real_line(2.0).unwrap();
        let mesh = Mesh::build(&ts, 0.125).unwrap();
        let p = ForcingSpec::Cos { amplitude: 0.5, harmonic: 1.0 }.build(&mesh);
        assert!((p.value(0) - 0.5).abs() < 1e-15);
        assert!(p.mean().abs() < 1e-15);
        let scaled = ForcingSpec::Cos { amplitude: 0.5, harmonic: 1.0 }
            .scale_amplitude(2.0)
            .build(&mesh);
        assert!((scaled.value(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn specs_roundtrip_through_toml() {
        let spec = FunctionSpec::GaussianBump { amplitude: 1.0, width: 1.0, center: 0.0 };
        let text = toml::to_string(&spec).unwrap();
        let back: FunctionSpec = toml::from_str(&text).unwrap();
        assert!(matches!(back, FunctionSpec::GaussianBump { .. }));
    }
}
