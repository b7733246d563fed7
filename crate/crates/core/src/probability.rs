//! Independent input random vectors and the isoprobabilistic map between the
//! physical space and the standard space where the polynomial families are
//! orthonormal.
//!
//! Uniform marginals on `[a, b]` map affinely onto `[-1, 1]` (Legendre);
//! Gaussian marginals map onto the standard normal (Hermite).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::basis::Family;
use crate::error::{Error, Result};

/// A one-dimensional marginal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Marginal {
    Uniform { lower: f64, upper: f64 },
    Gaussian { mean: f64, std: f64 },
}

impl Marginal {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        let m = Marginal::Uniform { lower, upper };
        m.validate("uniform")?;
        Ok(m)
    }

    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        let m = Marginal::Gaussian { mean, std };
        m.validate("gaussian")?;
        Ok(m)
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |reason: &str| Error::InvalidDistribution {
            name: name.to_string(),
            reason: reason.to_string(),
        };
        match *self {
            Marginal::Uniform { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite()) {
                    return Err(bad("bounds must be finite"));
                }
                if lower >= upper {
                    return Err(bad("lower bound must be strictly below upper bound"));
                }
            }
            Marginal::Gaussian { mean, std } => {
                if !(mean.is_finite() && std.is_finite()) {
                    return Err(bad("parameters must be finite"));
                }
                if std <= 0.0 {
                    return Err(bad("standard deviation must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Polynomial family orthonormal with respect to the standardized marginal.
    pub fn family(&self) -> Family {
        match self {
            Marginal::Uniform { .. } => Family::Legendre,
            Marginal::Gaussian { .. } => Family::Hermite,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } => 0.5 * (lower + upper),
            Marginal::Gaussian { mean, .. } => mean,
        }
    }

    /// Inverse CDF; `p` must lie in `(0, 1)` for Gaussian marginals.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            // The two rounded products can overshoot a bound by one ulp.
            Marginal::Uniform { lower, upper } => (lower * (1.0 - p) + upper * p).clamp(lower, upper),
            Marginal::Gaussian { mean, std } => mean + std * standard_normal().inverse_cdf(p),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
            Marginal::Gaussian { mean, std } => standard_normal().cdf((x - mean) / std),
        }
    }

    fn to_standard(self, x: f64) -> f64 {
        match self {
            // ((x - a) - (b - x)) / (b - a) hits -1 and +1 exactly at the bounds.
            Marginal::Uniform { lower, upper } => ((x - lower) - (upper - x)) / (upper - lower),
            Marginal::Gaussian { mean, std } => (x - mean) / std,
        }
    }

    fn to_physical(self, u: f64) -> f64 {
        match self {
            Marginal::Uniform { lower, upper } => {
                let t = 0.5 * (u + 1.0);
                (lower * (1.0 - t) + upper * t).clamp(lower, upper)
            }
            Marginal::Gaussian { mean, std } => mean + std * u,
        }
    }

    fn contains(&self, x: f64) -> bool {
        match *self {
            Marginal::Uniform { lower, upper } => x >= lower && x <= upper,
            Marginal::Gaussian { .. } => x.is_finite(),
        }
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// A named marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    #[serde(flatten)]
    pub marginal: Marginal,
}

/// Ordered list of independent, uniquely named marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Variable>", into = "Vec<Variable>")]
pub struct RandomVector {
    variables: Vec<Variable>,
}

impl TryFrom<Vec<Variable>> for RandomVector {
    type Error = Error;

    fn try_from(variables: Vec<Variable>) -> Result<Self> {
        RandomVector::new(variables)
    }
}

impl From<RandomVector> for Vec<Variable> {
    fn from(rv: RandomVector) -> Self {
        rv.variables
    }
}

impl RandomVector {
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::EmptyRandomVector);
        }
        let mut seen = HashSet::new();
        for v in &variables {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
            v.marginal.validate(&v.name)?;
        }
        Ok(RandomVector { variables })
    }

    /// `m` identically distributed variables named `x1..xm`.
    pub fn iid(m: usize, marginal: Marginal) -> Result<Self> {
        Self::new(
            (1..=m)
                .map(|i| Variable {
                    name: format!("x{i}"),
                    marginal,
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn marginal(&self, i: usize) -> &Marginal {
        &self.variables[i].marginal
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn families(&self) -> Vec<Family> {
        self.variables.iter().map(|v| v.marginal.family()).collect()
    }

    /// Map a physical point to the standard space.
    pub fn to_standard(&self, x: &PhysicalPoint) -> Result<StandardPoint> {
        self.to_standard_slice(&x.0).map(StandardPoint)
    }

    /// Map a standard-space point back to physical coordinates.
    pub fn from_standard(&self, u: &StandardPoint) -> Result<PhysicalPoint> {
        self.check_dim(u.0.len())?;
        Ok(PhysicalPoint(
            u.0.iter()
                .zip(&self.variables)
                .map(|(&ui, v)| v.marginal.to_physical(ui))
                .collect(),
        ))
    }

    pub(crate) fn to_standard_slice(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        x.iter()
            .zip(&self.variables)
            .enumerate()
            .map(|(i, (&xi, v))| {
                if !v.marginal.contains(xi) {
                    let (lower, upper) = match v.marginal {
                        Marginal::Uniform { lower, upper } => (lower, upper),
                        Marginal::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
                    };
                    return Err(Error::OutOfSupport {
                        index: i,
                        name: v.name.clone(),
                        value: xi,
                        lower,
                        upper,
                    });
                }
                Ok(v.marginal.to_standard(xi))
            })
            .collect()
    }

    /// Standardize one coordinate of variable `i`.
    pub fn standardize_coordinate(&self, i: usize, x: f64) -> Result<f64> {
        let v = &self.variables[i];
        if !v.marginal.contains(x) {
            let (lower, upper) = match v.marginal {
                Marginal::Uniform { lower, upper } => (lower, upper),
                Marginal::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            };
            return Err(Error::OutOfSupport {
                index: i,
                name: v.name.clone(),
                value: x,
                lower,
                upper,
            });
        }
        Ok(v.marginal.to_standard(x))
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// A point in physical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalPoint(pub Vec<f64>);

/// A point in the standard space (uniforms in `[-1, 1]`, Gaussians standard normal).
#[derive(Debug, Clone, PartialEq)]
pub struct StandardPoint(pub Vec<f64>);

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rv(marginals: &[Marginal]) -> RandomVector {
        RandomVector::new(
            marginals
                .iter()
                .enumerate()
                .map(|(i, &marginal)| Variable {
                    name: format!("v{i}"),
                    marginal,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_midpoint_and_bounds() {
        let r = rv(&[
            Marginal::uniform(5.0, 25.0).unwrap(),
            Marginal::uniform(0.01, 1.0).unwrap(),
        ]);
        let u = r.to_standard(&PhysicalPoint(vec![15.0, 1.0])).unwrap();
        assert_eq!(u.0, vec![0.0, 1.0]);
    }

    #[test]
    fn uniform_quantile_hits_bounds() {
        let m = Marginal::uniform(0.0747, 0.1221).unwrap();
        assert_eq!(m.quantile(0.0), 0.0747);
        assert_eq!(m.quantile(1.0), 0.1221);
    }

    #[test]
    fn gaussian_affine() {
        let r = rv(&[Marginal::gaussian(2.0, 3.0).unwrap()]);
        let u = r.to_standard(&PhysicalPoint(vec![8.0])).unwrap();
        assert_eq!(u.0, vec![2.0]);
    }

    #[test]
    fn from_standard_examples() {
        let r = rv(&[
            Marginal::uniform(-30.0, 30.0).unwrap(),
            Marginal::uniform(0.00240, 0.00360).unwrap(),
        ]);
        let x = r.from_standard(&StandardPoint(vec![0.0, 1.0])).unwrap();
        assert_eq!(x.0, vec![0.0, 0.00360]);
    }

    #[test]
    fn rejects_out_of_support_and_bad_dims() {
        let r = rv(&[Marginal::uniform(0.0, 1.0).unwrap()]);
        assert!(matches!(
            r.to_standard(&PhysicalPoint(vec![1.0 + 1e-12])),
            Err(Error::OutOfSupport { .. })
        ));
        assert!(matches!(
            r.to_standard(&PhysicalPoint(vec![0.5, 0.5])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            r.from_standard(&StandardPoint(vec![])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_marginals_and_names() {
        assert!(Marginal::uniform(1.0, 1.0).is_err());
        assert!(Marginal::gaussian(0.0, 0.0).is_err());
        let dup = vec![
            Variable {
                name: "a".into(),
                marginal: Marginal::uniform(0.0, 1.0).unwrap(),
            },
            Variable {
                name: "a".into(),
                marginal: Marginal::uniform(0.0, 1.0).unwrap(),
            },
        ];
        assert!(matches!(
            RandomVector::new(dup),
            Err(Error::DuplicateVariable(_))
        ));
        assert!(matches!(
            RandomVector::new(vec![]),
            Err(Error::EmptyRandomVector)
        ));
    }

    #[test]
    fn round_trip_thousand_points() {
        use rand::{Rng, SeedableRng};
        let r = rv(&[
            Marginal::uniform(0.0237, 0.1573).unwrap(),
            Marginal::gaussian(-4.0, 0.25).unwrap(),
            Marginal::uniform(-30.0, 30.0).unwrap(),
        ]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let u = StandardPoint(vec![
                rng.random_range(-1.0..=1.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(-1.0..=1.0),
            ]);
            let back = r.to_standard(&r.from_standard(&u).unwrap()).unwrap();
            for (a, b) in u.0.iter().zip(&back.0) {
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst < 1e-12, "max round-trip error {worst}");
    }

    #[test]
    fn serde_shape() {
        let json = r#"[{"name":"phi","kind":"uniform","lower":0.1,"upper":0.2},
                       {"name":"z","kind":"gaussian","mean":0.0,"std":1.0}]"#;
        let v: Vec<Variable> = serde_json::from_str(json).unwrap();
        let r = RandomVector::new(v).unwrap();
        assert_eq!(r.families(), vec![Family::Legendre, Family::Hermite]);
    }

    proptest! {
        #[test]
        fn round_trip_identity(a in -1e3f64..1e3, w in 1e-3f64..1e3, t in 0.0f64..=1.0) {
            let r = rv(&[Marginal::uniform(a, a + w).unwrap()]);
            let x = a * (1.0 - t) + (a + w) * t;
            let u = r.to_standard(&PhysicalPoint(vec![x])).unwrap();
            prop_assert!(u.0[0].abs() <= 1.0);
            let back = r.from_standard(&u).unwrap();
            prop_assert!((back.0[0] - x).abs() <= 1e-12 * (1.0 + x.abs().max(w)));
        }

        #[test]
        fn strictly_monotone(a in -10.0f64..10.0, w in 0.1f64..10.0, s in 0.0f64..0.5, d in 1e-6f64..0.5) {
            let r = rv(&[Marginal::uniform(a, a + w).unwrap()]);
            let x1 = a + s * w;
            let x2 = a + (s + d) * w;
            let u1 = r.to_standard(&PhysicalPoint(vec![x1])).unwrap().0[0];
            let u2 = r.to_standard(&PhysicalPoint(vec![x2])).unwrap().0[0];
            prop_assert!(u2 > u1);
        }
    }
}
