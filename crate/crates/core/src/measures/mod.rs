//! Finitely supported measures, sample clouds and the distribution catalog.

mod catalog;
mod rng;

use std::cmp::Ordering;
use std::io::{Read, Write};

use crate::error::{Error, Result};

pub use catalog::{
    sample, sample_sharp_rate, sharp_rate_inverse_cdf, sharp_rate_measure, zygmund_spec,
    zygmund_tail, MeasureSpec, Sampler,
};
pub use rng::{replicate_stream, stream_rng, Rng};

/// Tolerance on the total mass of a constructed measure.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Tolerance on the total mass of a measure read from CSV.
pub const CSV_WEIGHT_SUM_TOL: f64 = 1e-9;

/// Read access to weighted atoms in R^d.
pub trait Atoms {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn point(&self, i: usize) -> &[f64];
    fn weight(&self, i: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mass of the closed ball of radius `radius` around `center`.
    fn ball_mass(&self, center: &[f64], radius: f64) -> f64 {
        let r2 = radius * radius;
        (0..self.len())
            .filter(|&i| sq_dist(self.point(i), center) <= r2)
            .map(|i| self.weight(i))
            .sum()
    }
}

/// `∫ |x|^q dμ` over the atoms, i.e. `M_q^q`.
pub fn moment_pow<A: Atoms + ?Sized>(a: &A, q: f64) -> f64 {
    (0..a.len())
        .map(|i| a.weight(i) * norm(a.point(i)).powf(q))
        .sum()
}

/// `M_q = (∫ |x|^q dμ)^{1/q}` over the atoms.
pub fn moment<A: Atoms + ?Sized>(a: &A, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(crate::error::domain("moment order must be at least 1"));
    }
    Ok(moment_pow(a, q).powf(1.0 / q))
}

/// Neumaier summation; keeps the mass check meaningful for large supports.
pub(crate) fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// A finitely supported probability measure: distinct points with weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from row-major `points` (length `dim · weights.len()`).
    pub fn from_flat(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be at least 1".into()));
        }
        if weights.is_empty() {
            return Err(Error::InvalidMeasure(
                "a measure needs at least one atom".into(),
            ));
        }
        if points.len() != dim * weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} coordinates do not form {} points in dimension {dim}",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite coordinate".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total = compensated_sum(&weights);
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let m = Self {
            dim,
            points,
            weights,
        };
        let mut order: Vec<usize> = (0..m.weights.len()).collect();
        order.sort_by(|&i, &j| lex_cmp(m.point(i), m.point(j)));
        if order
            .windows(2)
            .any(|w| lex_cmp(m.point(w[0]), m.point(w[1])) == Ordering::Equal)
        {
            return Err(Error::InvalidMeasure(
                "points must be pairwise distinct".into(),
            ));
        }
        Ok(m)
    }

    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch(dim, p.len()));
        }
        Self::from_flat(dim, points.concat(), weights)
    }

    /// Unit mass at `point`.
    pub fn dirac(point: &[f64]) -> Result<Self> {
        Self::from_flat(point.len(), point.to_vec(), vec![1.0])
    }

    /// Rescales nonnegative `weights` to unit mass and builds the measure.
    pub fn normalized(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total = compensated_sum(&weights);
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidMeasure(
                "weights have no positive finite mass".into(),
            ));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self::from_flat(dim, points, weights)
    }

    /// Equal-weight measure on `points`, merging repeated points.
    pub fn empirical(dim: usize, points: &[f64]) -> Result<Self> {
        if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::InvalidMeasure("malformed point list".into()));
        }
        let n = points.len() / dim;
        let mut order: Vec<usize> = (0..n).collect();
        let row = |i: usize| &points[i * dim..(i + 1) * dim];
        order.sort_by(|&i, &j| lex_cmp(row(i), row(j)));
        let mut flat = Vec::with_capacity(points.len());
        let mut counts: Vec<usize> = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            if pos > 0 && lex_cmp(row(order[pos - 1]), row(i)) == Ordering::Equal {
                *counts.last_mut().expect("nonempty") += 1;
            } else {
                flat.extend_from_slice(row(i));
                counts.push(1);
            }
        }
        let weights = counts.into_iter().map(|c| c as f64 / n as f64).collect();
        Self::from_flat(dim, flat, weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    /// True when both measures put the same mass on the same points (up to `tol`).
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let canon = |m: &Self| {
            let mut idx: Vec<usize> = (0..m.len()).filter(|&i| m.weights[i] > tol).collect();
            idx.sort_by(|&i, &j| lex_cmp(m.point(i), m.point(j)));
            idx
        };
        let (a, b) = (canon(self), canon(other));
        a.len() == b.len()
            && a.iter().zip(&b).all(|(&i, &j)| {
                lex_cmp(self.point(i), other.point(j)) == Ordering::Equal
                    && (self.weights[i] - other.weights[j]).abs() <= tol
            })
    }

    /// Writes the CSV layout `x_1,…,x_d,weight`, one row per atom.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("x_{k}")).collect();
        header.push("weight".into());
        wr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.point(i).iter().map(|x| format!("{x:?}")).collect();
            row.push(format!("{:?}", self.weights[i]));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the CSV layout written by [`write_csv`](Self::write_csv).
    ///
    /// Without a `weight` column every row gets mass 1/n. With one, the total
    /// must be within 1e-9 of 1; it is then rescaled to unit mass exactly.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let (dim, points, weights) = read_rows(r)?;
        match weights {
            None => Self::empirical(dim, &points),
            Some(w) => {
                let total: f64 = w.iter().sum();
                if (total - 1.0).abs() > CSV_WEIGHT_SUM_TOL {
                    return Err(Error::InvalidMeasure(format!(
                        "weights in file sum to {total}"
                    )));
                }
                Self::normalized(dim, points, w)
            }
        }
    }
}

impl Atoms for DiscreteMeasure {
    fn dim(&self) -> usize {
        self.dim
    }
    fn len(&self) -> usize {
        self.weights.len()
    }
    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }
    fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }
}

/// Equal-weight i.i.d. sample with the seed and source it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    dim: usize,
    points: Vec<f64>,
    pub seed: u64,
    pub source: String,
}

impl SampleCloud {
    pub fn from_flat(
        dim: usize,
        points: Vec<f64>,
        seed: u64,
        source: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::InvalidMeasure(
                "a cloud needs N >= 1 points of equal dimension".into(),
            ));
        }
        Ok(Self {
            dim,
            points,
            seed,
            source: source.into(),
        })
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn into_points(self) -> Vec<f64> {
        self.points
    }

    /// The empirical measure with repeated points merged.
    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::empirical(self.dim, &self.points)
    }

    /// Writes `x_1,…,x_d`, one row per point.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let header: Vec<String> = (1..=self.dim).map(|k| format!("x_{k}")).collect();
        wr.write_record(&header)?;
        for i in 0..self.len() {
            let row: Vec<String> = self.point(i).iter().map(|x| format!("{x:?}")).collect();
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a point file; a `weight` column, if present, must be uniform.
    pub fn read_csv<R: Read>(r: R, seed: u64, source: impl Into<String>) -> Result<Self> {
        let (dim, points, weights) = read_rows(r)?;
        if let Some(w) = weights {
            let n = w.len() as f64;
            if w.iter().any(|x| (x - 1.0 / n).abs() > CSV_WEIGHT_SUM_TOL) {
                return Err(Error::InvalidMeasure(
                    "a sample cloud must have equal weights".into(),
                ));
            }
        }
        Self::from_flat(dim, points, seed, source)
    }
}

impl Atoms for SampleCloud {
    fn dim(&self) -> usize {
        self.dim
    }
    fn len(&self) -> usize {
        self.points.len() / self.dim
    }
    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }
    fn weight(&self, _i: usize) -> f64 {
        1.0 / self.len() as f64
    }
}

type Rows = (usize, Vec<f64>, Option<Vec<f64>>);

fn read_rows<R: Read>(r: R) -> Result<Rows> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    let has_weight = cols.last() == Some(&"weight");
    let dim = cols.len() - usize::from(has_weight);
    for (k, c) in cols[..dim].iter().enumerate() {
        if *c != format!("x_{}", k + 1) {
            return Err(Error::InvalidMeasure(format!("unexpected column '{c}'")));
        }
    }
    if dim == 0 {
        return Err(Error::InvalidMeasure("no coordinate columns".into()));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != cols.len() {
            return Err(Error::InvalidMeasure("ragged row".into()));
        }
        for k in 0..dim {
            points.push(parse_f64(&rec[k])?);
        }
        if has_weight {
            weights.push(parse_f64(&rec[dim])?);
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidMeasure("file has no rows".into()));
    }
    Ok((dim, points, has_weight.then_some(weights)))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidMeasure(format!("'{s}' is not a number")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_inputs() {
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.4]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![0.0]], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn empirical_merges_duplicates() {
        let m = DiscreteMeasure::empirical(1, &[1.0, 0.0, 1.0, 2.0]).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.weights(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn two_point_moment() {
        let m = DiscreteMeasure::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        assert_eq!(moment(&m, 2.0).unwrap(), 1.0);
        assert!(moment(&m, 0.5).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = DiscreteMeasure::new(
            vec![vec![0.1, -2.0], vec![3.0, 0.25], vec![1e-17, 7.0]],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x_1,x_2,weight\n"));
        let back = DiscreteMeasure::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn csv_loader_tolerance() {
        let ok = "x_1,weight\n0,0.5\n1,0.5000000001\n";
        let m = DiscreteMeasure::read_csv(ok.as_bytes()).unwrap();
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let bad = "x_1,weight\n0,0.5\n1,0.51\n";
        assert!(DiscreteMeasure::read_csv(bad.as_bytes()).is_err());
        let unweighted = "x_1\n0\n1\n1\n3\n";
        let e = DiscreteMeasure::read_csv(unweighted.as_bytes()).unwrap();
        assert_eq!(e.weights(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn cloud_csv_round_trip() {
        let c = SampleCloud::from_flat(1, vec![0.5, -1.25, 0.5], 9, "test").unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = SampleCloud::read_csv(buf.as_slice(), 9, "test").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn ball_mass_counts_closed_ball() {
        let m = DiscreteMeasure::new(vec![vec![0.0], vec![1.0], vec![2.5]], vec![0.2, 0.3, 0.5])
            .unwrap();
        assert!((m.ball_mass(&[0.0], 1.0) - 0.5).abs() < 1e-15);
        assert!((m.ball_mass(&[2.0], 0.4) - 0.0).abs() < 1e-15);
    }
}
