//! Real-valued functions on a product space, stored densely in rank order,
//! plus the weighted inner-product structure they are analysed under.

use crate::code::Code;
use crate::measure::ProductMeasure;
use crate::space::{MixedShape, Point};
use crate::{rat_to_f64, Error, Result};

#[derive(Clone, PartialEq, Debug)]
pub struct RealFn {
    shape: MixedShape,
    values: Vec<f64>,
}

impl RealFn {
    pub fn new(shape: MixedShape, values: Vec<f64>) -> Result<RealFn> {
        if values.len() != shape.size() {
            return Err(Error::ShapeMismatch(format!(
                "function has {} values for a space of {} points",
                values.len(),
                shape.size()
            )));
        }
        Ok(RealFn { shape, values })
    }

    pub fn constant(shape: MixedShape, c: f64) -> RealFn {
        let size = shape.size();
        RealFn { shape, values: vec![c; size] }
    }

    pub fn from_fn(shape: MixedShape, mut f: impl FnMut(&Point) -> f64) -> RealFn {
        let values = (0..shape.size()).map(|i| f(&shape.unrank(i))).collect();
        RealFn { shape, values }
    }

    /// 0/1 indicator of a code.
    pub fn indicator(code: &Code) -> RealFn {
        let shape = code.shape().mixed();
        let values = (0..shape.size())
            .map(|i| if code.contains_rank(i) { 1.0 } else { 0.0 })
            .collect();
        RealFn { shape, values }
    }

    pub fn shape(&self) -> &MixedShape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at_rank(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn at(&self, p: &Point) -> f64 {
        self.values[self.shape.rank(p)]
    }

    fn zip(&self, other: &RealFn, op: impl Fn(f64, f64) -> f64) -> RealFn {
        assert_eq!(self.shape, other.shape, "functions live on different spaces");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect();
        RealFn { shape: self.shape.clone(), values }
    }

    pub fn add(&self, other: &RealFn) -> RealFn {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RealFn) -> RealFn {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul_pointwise(&self, other: &RealFn) -> RealFn {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> RealFn {
        RealFn {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| c * v).collect(),
        }
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> RealFn {
        RealFn {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| op(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest pointwise difference to another function.
    pub fn distance_inf(&self, other: &RealFn) -> f64 {
        self.sub(other).max_abs()
    }

    /// The restriction f_{S→x}: fix coordinates `coords` (sorted) to the
    /// values in `vals` and view f as a function of the rest.
    pub fn restrict(&self, coords: &[usize], vals: &[u16]) -> Result<RealFn> {
        if coords.len() != vals.len() {
            return Err(Error::Invalid("restriction coords/values length mismatch".into()));
        }
        if coords.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("restriction coordinates must strictly increase".into()));
        }
        for (&i, &v) in coords.iter().zip(vals) {
            if i >= self.shape.n() || v as usize >= self.shape.radix(i) {
                return Err(Error::Invalid("restriction out of range".into()));
            }
        }
        let sub = self.shape.drop_coords(coords)?;
        let free: Vec<usize> = (0..self.shape.n()).filter(|i| !coords.contains(i)).collect();
        let mut full = vec![0u16; self.shape.n()];
        for (&i, &v) in coords.iter().zip(vals) {
            full[i] = v;
        }
        let values = (0..sub.size())
            .map(|sub_idx| {
                let y = sub.unrank(sub_idx);
                for (k, &i) in free.iter().enumerate() {
                    full[i] = y.get(k);
                }
                self.values[self.shape.rank(&Point::from_raw(full.clone()))]
            })
            .collect();
        Ok(RealFn { shape: sub, values })
    }
}

/// Precomputed point weights ν(x) as f64, in rank order.
#[derive(Clone, Debug)]
pub struct Weights {
    shape: MixedShape,
    w: Vec<f64>,
}

impl Weights {
    pub fn new(shape: &MixedShape, nu: &ProductMeasure) -> Result<Weights> {
        if nu.n() != shape.n() || (0..shape.n()).any(|i| nu.radix(i) != shape.radix(i)) {
            return Err(Error::ShapeMismatch("measure does not match the space".into()));
        }
        let factors: Vec<Vec<f64>> = (0..shape.n())
            .map(|i| (0..shape.radix(i)).map(|a| rat_to_f64(nu.entry(i, a))).collect())
            .collect();
        let w = (0..shape.size())
            .map(|idx| {
                let p = shape.unrank(idx);
                p.coords()
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| factors[i][c as usize])
                    .product()
            })
            .collect();
        Ok(Weights { shape: shape.clone(), w })
    }

    pub fn uniform(shape: &MixedShape) -> Weights {
        let w = vec![1.0 / shape.size() as f64; shape.size()];
        Weights { shape: shape.clone(), w }
    }

    /// Point weights from per-coordinate f64 factors.
    pub fn from_factors(shape: &MixedShape, factors: &[Vec<f64>]) -> Result<Weights> {
        if factors.len() != shape.n() || (0..shape.n()).any(|i| factors[i].len() != shape.radix(i))
        {
            return Err(Error::ShapeMismatch("factor list does not match the space".into()));
        }
        let w = (0..shape.size())
            .map(|idx| {
                let p = shape.unrank(idx);
                p.coords()
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| factors[i][c as usize])
                    .product()
            })
            .collect();
        Ok(Weights { shape: shape.clone(), w })
    }

    pub fn shape(&self) -> &MixedShape {
        &self.shape
    }

    pub fn at(&self, idx: usize) -> f64 {
        self.w[idx]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn expectation(&self, f: &RealFn) -> f64 {
        assert_eq!(self.shape, *f.shape(), "weights built for a different space");
        f.values().iter().zip(&self.w).map(|(&v, &w)| v * w).sum()
    }

    /// ⟨f, g⟩_ν = E[fg].
    pub fn inner(&self, f: &RealFn, g: &RealFn) -> f64 {
        assert_eq!(self.shape, *f.shape());
        assert_eq!(self.shape, *g.shape());
        f.values()
            .iter()
            .zip(g.values())
            .zip(&self.w)
            .map(|((&a, &b), &w)| a * b * w)
            .sum()
    }

    pub fn norm_l2_sq(&self, f: &RealFn) -> f64 {
        self.inner(f, f)
    }

    pub fn norm_l2(&self, f: &RealFn) -> f64 {
        self.norm_l2_sq(f).sqrt()
    }

    /// E[|f|^p] for the L_p norm family.
    pub fn moment(&self, f: &RealFn, p: f64) -> f64 {
        assert_eq!(self.shape, *f.shape());
        f.values().iter().zip(&self.w).map(|(&v, &w)| v.abs().powf(p) * w).sum()
    }

    pub fn variance(&self, f: &RealFn) -> f64 {
        let mean = self.expectation(f);
        self.norm_l2_sq(f) - mean * mean
    }
}
