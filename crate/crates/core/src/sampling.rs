//! Latin hypercube experimental designs and nested-LHS enrichment.
//!
//! Every coordinate draws from its own ChaCha stream (root seed, stream =
//! column index), so adding variables never perturbs the columns already
//! present, and a design is a pure function of `(n, random vector, seed)`.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::RandomVector;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Fresh,
    /// Enrichment of an earlier design, identified by its seed and size.
    EnrichmentOf { base_seed: u64, base_size: usize },
    /// Rows drawn from another design.
    SubsetOf { base_seed: u64, base_size: usize },
    /// Loaded from a file without provenance metadata.
    Imported,
}

/// `N` physical-space input points with optional model responses.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentalDesign {
    names: Vec<String>,
    points: Array2<f64>,
    responses: Option<Vec<f64>>,
    seed: u64,
    provenance: Provenance,
}

impl ExperimentalDesign {
    pub fn new(names: Vec<String>, points: Array2<f64>, seed: u64, provenance: Provenance) -> Result<Self> {
        if names.len() != points.ncols() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: points.ncols(),
            });
        }
        Ok(ExperimentalDesign {
            names,
            points,
            responses: None,
            seed,
            provenance,
        })
    }

    pub fn with_responses(mut self, responses: Vec<f64>) -> Result<Self> {
        self.set_responses(responses)?;
        Ok(self)
    }

    pub fn set_responses(&mut self, responses: Vec<f64>) -> Result<()> {
        if responses.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: responses.len(),
            });
        }
        self.responses = Some(responses);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn responses(&self) -> Option<&[f64]> {
        self.responses.as_deref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Check that every point lies in the support of `rv`.
    pub fn validate(&self, rv: &RandomVector) -> Result<()> {
        if rv.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: rv.dim(),
                got: self.dim(),
            });
        }
        for row in self.points.rows() {
            rv.to_standard_slice(&row.to_vec())?;
        }
        Ok(())
    }

    /// Points mapped to the standard space, one per row.
    pub fn standardized(&self, rv: &RandomVector) -> Result<Array2<f64>> {
        if rv.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: rv.dim(),
                got: self.dim(),
            });
        }
        let mut out = Array2::zeros(self.points.raw_dim());
        for (i, row) in self.points.rows().into_iter().enumerate() {
            let u = rv.to_standard_slice(&row.to_vec())?;
            out.row_mut(i).assign(&ArrayView1::from(&u));
        }
        Ok(out)
    }

    /// Design restricted to `rows` (responses follow).
    pub fn subset(&self, rows: &[usize]) -> ExperimentalDesign {
        ExperimentalDesign {
            names: self.names.clone(),
            points: self.points.select(Axis(0), rows),
            responses: self
                .responses
                .as_ref()
                .map(|r| rows.iter().map(|&i| r[i]).collect()),
            seed: self.seed,
            provenance: Provenance::SubsetOf {
                base_seed: self.seed,
                base_size: self.len(),
            },
        }
    }

    /// Stack two designs with identical variables (responses kept only if both have them).
    pub fn union(&self, other: &ExperimentalDesign) -> Result<ExperimentalDesign> {
        if self.names != other.names {
            return Err(Error::InvalidArgument(
                "cannot join designs over different variables".into(),
            ));
        }
        let points = ndarray::concatenate(Axis(0), &[self.points.view(), other.points.view()])
            .expect("column counts agree");
        let responses = match (&self.responses, &other.responses) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        Ok(ExperimentalDesign {
            names: self.names.clone(),
            points,
            responses,
            seed: self.seed,
            provenance: self.provenance.clone(),
        })
    }

    /// Write the points as CSV: a header of variable names, one row per point.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for row in self.points.rows() {
            w.write_record(row.iter().map(|x| format_float(*x)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Read points written by [`ExperimentalDesign::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let names: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut data = Vec::new();
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != names.len() {
                return Err(Error::DimensionMismatch {
                    expected: names.len(),
                    got: rec.len(),
                });
            }
            for field in rec.iter() {
                data.push(parse_float(field)?);
            }
            rows += 1;
        }
        let points = Array2::from_shape_vec((rows, names.len()), data).expect("row-major buffer");
        ExperimentalDesign::new(names, points, 0, Provenance::Imported)
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Full-precision scientific notation used by every CSV this crate writes.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_float(s: &str) -> Result<f64> {
    let t = s.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    t.parse::<f64>()
        .map_err(|_| Error::InvalidArgument(format!("cannot parse `{t}` as a number")))
}

/// Write a single-column response file aligned with the design rows.
pub fn write_responses_csv<W: Write>(writer: W, responses: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["response"])?;
    for &y in responses {
        w.write_record([format_float(y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a single-column response file; empty or `NaN` cells read as NaN.
pub fn read_responses_csv<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(parse_float(rec.get(0).unwrap_or(""))?);
    }
    Ok(out)
}

fn column_rng(seed: u64, column: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(column as u64);
    rng
}

/// Latin hypercube sample of size `n`: in every coordinate, exactly one point
/// falls in each of the `n` equal-probability strata.
pub fn lhs(n: usize, rv: &RandomVector, seed: u64) -> Result<ExperimentalDesign> {
    if n == 0 {
        return Err(Error::EmptyDesign);
    }
    let m = rv.dim();
    let mut points = Array2::zeros((n, m));
    for j in 0..m {
        let mut rng = column_rng(seed, j);
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        let marginal = rv.marginal(j);
        for (i, &k) in strata.iter().enumerate() {
            let w: f64 = rng.sample(Open01);
            points[[i, j]] = marginal.quantile((k as f64 + w) / n as f64);
        }
    }
    ExperimentalDesign::new(
        rv.names().iter().map(|s| s.to_string()).collect(),
        points,
        seed,
        Provenance::Fresh,
    )
}

/// Stratum (of `levels` equal-probability strata) that contains `x`.
pub fn stratum_of(rv: &RandomVector, column: usize, x: f64, levels: usize) -> usize {
    let p = rv.marginal(column).cdf(x);
    ((p * levels as f64).floor() as usize).min(levels - 1)
}

/// Enrich `base` with `n_add` new points so that the union is approximately a
/// Latin hypercube of size `N + n_add`.
///
/// Each coordinate is refined to `N + n_add` strata; the new points are
/// placed uniformly inside strata left empty by the base design (chosen at
/// random when there are more empty strata than new points) and the columns
/// are paired by independent random permutations.
pub fn nested_lhs_enrich(
    base: &ExperimentalDesign,
    n_add: usize,
    rv: &RandomVector,
    seed: u64,
) -> Result<ExperimentalDesign> {
    if n_add == 0 {
        return Err(Error::EmptyDesign);
    }
    if base.dim() != rv.dim() {
        return Err(Error::DimensionMismatch {
            expected: rv.dim(),
            got: base.dim(),
        });
    }
    let levels = base.len() + n_add;
    let m = rv.dim();
    let mut points = Array2::zeros((n_add, m));
    for j in 0..m {
        let mut occupied = vec![false; levels];
        for &x in base.points().column(j) {
            occupied[stratum_of(rv, j, x, levels)] = true;
        }
        let mut empty: Vec<usize> = (0..levels).filter(|&k| !occupied[k]).collect();
        let mut rng = column_rng(seed, j);
        // At most N strata are occupied, so at least n_add are empty.
        empty.shuffle(&mut rng);
        empty.truncate(n_add);
        empty.shuffle(&mut rng);
        let marginal = rv.marginal(j);
        for (i, &k) in empty.iter().enumerate() {
            let w: f64 = rng.sample(Open01);
            points[[i, j]] = marginal.quantile((k as f64 + w) / levels as f64);
        }
    }
    ExperimentalDesign::new(
        rv.names().iter().map(|s| s.to_string()).collect(),
        points,
        seed,
        Provenance::EnrichmentOf {
            base_seed: base.seed(),
            base_size: base.len(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::{Marginal, Variable};

    fn uniform_rv(m: usize) -> RandomVector {
        RandomVector::iid(m, Marginal::uniform(0.0, 1.0).unwrap()).unwrap()
    }

    fn stratum_counts(d: &ExperimentalDesign, rv: &RandomVector, j: usize, levels: usize) -> Vec<usize> {
        let mut c = vec![0; levels];
        for &x in d.points().column(j) {
            c[stratum_of(rv, j, x, levels)] += 1;
        }
        c
    }

    #[test]
    fn quartiles_each_hit_once() {
        let rv = uniform_rv(2);
        let d = lhs(4, &rv, 99).unwrap();
        for j in 0..2 {
            assert_eq!(stratum_counts(&d, &rv, j, 4), vec![1, 1, 1, 1]);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let rv = uniform_rv(3);
        assert_eq!(lhs(17, &rv, 5).unwrap(), lhs(17, &rv, 5).unwrap());
        assert_ne!(lhs(17, &rv, 5).unwrap().points(), lhs(17, &rv, 6).unwrap().points());
    }

    #[test]
    fn adding_columns_keeps_earlier_columns() {
        let d2 = lhs(10, &uniform_rv(2), 1).unwrap();
        let d5 = lhs(10, &uniform_rv(5), 1).unwrap();
        assert_eq!(d2.points().column(1), d5.points().column(1));
    }

    #[test]
    fn zero_size_rejected() {
        assert!(matches!(lhs(0, &uniform_rv(2), 0), Err(Error::EmptyDesign)));
    }

    #[test]
    fn gaussian_columns_are_finite_and_stratified() {
        let rv = RandomVector::new(vec![Variable {
            name: "g".into(),
            marginal: Marginal::gaussian(1.0, 2.0).unwrap(),
        }])
        .unwrap();
        let d = lhs(50, &rv, 3).unwrap();
        assert!(d.points().iter().all(|x| x.is_finite()));
        assert!(stratum_counts(&d, &rv, 0, 50).iter().all(|&c| c == 1));
    }

    #[test]
    fn large_design_shape_and_stratification() {
        let rv = uniform_rv(78);
        let d = lhs(2000, &rv, 2015).unwrap();
        assert_eq!((d.len(), d.dim()), (2000, 78));
        for j in 0..78 {
            assert!(stratum_counts(&d, &rv, j, 2000).iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn enrichment_fills_quartiles() {
        let rv = uniform_rv(1);
        for seed in 0..20 {
            let base = lhs(2, &rv, seed).unwrap();
            let extra = nested_lhs_enrich(&base, 2, &rv, seed + 100).unwrap();
            let all = base.union(&extra).unwrap();
            assert_eq!(stratum_counts(&all, &rv, 0, 4), vec![1, 1, 1, 1]);
        }
    }

    #[test]
    fn enrichment_coverage_and_no_duplicates() {
        let rv = uniform_rv(6);
        let base = lhs(2000, &rv, 1).unwrap();
        let extra = nested_lhs_enrich(&base, 2000, &rv, 2).unwrap();
        assert_eq!(extra.len(), 2000);
        let all = base.union(&extra).unwrap();
        assert_eq!(all.len(), 4000);
        for j in 0..6 {
            let counts = stratum_counts(&all, &rv, j, 4000);
            let filled = counts.iter().filter(|&&c| c > 0).count();
            assert!(filled as f64 / 4000.0 >= 0.9, "coverage {filled}");
            // New points only go to strata the base left empty.
            let base_counts = stratum_counts(&base, &rv, j, 4000);
            let extra_counts = stratum_counts(&extra, &rv, j, 4000);
            for k in 0..4000 {
                assert!(extra_counts[k] <= 1);
                if extra_counts[k] == 1 {
                    assert_eq!(base_counts[k], 0);
                }
            }
        }
        for a in extra.points().rows() {
            for b in base.points().rows() {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn enrichment_dimension_mismatch() {
        let base = lhs(5, &uniform_rv(2), 0).unwrap();
        assert!(matches!(
            nested_lhs_enrich(&base, 3, &uniform_rv(3), 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rv = uniform_rv(3);
        let d = lhs(25, &rv, 8).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = ExperimentalDesign::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.points(), d.points());
        assert_eq!(back.names(), d.names());

        let ys = vec![1.5, f64::NAN, -3.25e-7];
        let mut buf = Vec::new();
        write_responses_csv(&mut buf, &ys).unwrap();
        let back = read_responses_csv(buf.as_slice()).unwrap();
        assert_eq!(back[0], 1.5);
        assert!(back[1].is_nan());
        assert_eq!(back[2], -3.25e-7);
    }

    #[test]
    fn responses_length_checked() {
        let d = lhs(3, &uniform_rv(1), 0).unwrap();
        assert!(d.clone().with_responses(vec![1.0, 2.0]).is_err());
        assert!(d.with_responses(vec![1.0, 2.0, 3.0]).is_ok());
    }
}
