//! Point sets [m]^n and their mixed-radix indexing.
//!
//! Ranks run from 0 to m^n - 1 with coordinate 1 most significant, so the
//! all-1 word has rank 0 and incrementing the last coordinate increments
//! the rank by 1. Symbols are stored 0-based; all formatting and parsing
//! is 1-based.

use crate::{Error, Result};

/// Default cap on the number of points of a shape. Large enough for every
/// desk-scale space used by the checkers, small enough that a dense
/// indicator always fits comfortably in memory.
pub const DEFAULT_POINT_CAP: usize = 1 << 27;

/// The shape (m, n) of a uniform-alphabet cube [m]^n.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Shape {
    m: u16,
    n: u16,
    size: usize,
}

impl Shape {
    pub fn new(m: u32, n: u32) -> Result<Shape> {
        Shape::with_cap(m, n, DEFAULT_POINT_CAP)
    }

    /// n = 0 is allowed: the empty product has one point, so restricting
    /// away every coordinate still yields a usable space.
    pub fn with_cap(m: u32, n: u32, cap: usize) -> Result<Shape> {
        if m < 2 || m > u16::MAX as u32 || n > u16::MAX as u32 {
            return Err(Error::BadShape { m, n });
        }
        let mut size: usize = 1;
        for _ in 0..n {
            size = size
                .checked_mul(m as usize)
                .filter(|&s| s <= cap)
                .ok_or(Error::ShapeTooLarge { m, n, cap })?;
        }
        Ok(Shape { m: m as u16, n: n as u16, size })
    }

    pub fn m(&self) -> usize {
        self.m as usize
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    /// Number of points m^n.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn rank(&self, p: &Point) -> usize {
        debug_assert_eq!(p.len(), self.n());
        let mut idx = 0usize;
        for &c in &p.coords {
            debug_assert!((c as usize) < self.m());
            idx = idx * self.m() + c as usize;
        }
        idx
    }

    pub fn unrank(&self, mut idx: usize) -> Point {
        debug_assert!(idx < self.size);
        let mut coords = vec![0u16; self.n()];
        for i in (0..self.n()).rev() {
            coords[i] = (idx % self.m()) as u16;
            idx /= self.m();
        }
        Point { coords }
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.size).map(move |i| self.unrank(i))
    }

    /// Shape of [m]^(n-k), after k coordinates were fixed or projected away.
    pub fn drop_coords(&self, k: usize) -> Result<Shape> {
        Shape::new(self.m as u32, (self.n() - k) as u32)
    }

    pub fn mixed(&self) -> MixedShape {
        MixedShape::new(vec![self.m; self.n()]).expect("uniform shape is always valid")
    }
}

/// A word over possibly different per-coordinate alphabets [m_1] x .. x [m_n].
/// Uniform shapes embed via [`Shape::mixed`]; gluing produces genuinely
/// mixed radices.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MixedShape {
    radices: Vec<u16>,
    size: usize,
}

impl MixedShape {
    pub fn new(radices: Vec<u16>) -> Result<MixedShape> {
        MixedShape::with_cap(radices, DEFAULT_POINT_CAP)
    }

    /// Zero radices is allowed: the empty product has one point, the
    /// empty tuple, so a fully restricted function is just a constant.
    pub fn with_cap(radices: Vec<u16>, cap: usize) -> Result<MixedShape> {
        let mut size: usize = 1;
        for &r in &radices {
            if r < 1 {
                return Err(Error::BadShape { m: r as u32, n: radices.len() as u32 });
            }
            size = size
                .checked_mul(r as usize)
                .filter(|&s| s <= cap)
                .ok_or(Error::ShapeTooLarge { m: r as u32, n: radices.len() as u32, cap })?;
        }
        Ok(MixedShape { radices, size })
    }

    pub fn n(&self) -> usize {
        self.radices.len()
    }

    pub fn radix(&self, i: usize) -> usize {
        self.radices[i] as usize
    }

    pub fn radices(&self) -> &[u16] {
        &self.radices
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn rank(&self, p: &Point) -> usize {
        debug_assert_eq!(p.len(), self.n());
        let mut idx = 0usize;
        for (i, &c) in p.coords.iter().enumerate() {
            debug_assert!((c as usize) < self.radix(i));
            idx = idx * self.radix(i) + c as usize;
        }
        idx
    }

    pub fn unrank(&self, mut idx: usize) -> Point {
        debug_assert!(idx < self.size);
        let mut coords = vec![0u16; self.n()];
        for i in (0..self.n()).rev() {
            coords[i] = (idx % self.radix(i)) as u16;
            idx /= self.radix(i);
        }
        Point { coords }
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.size).map(move |i| self.unrank(i))
    }

    /// Sub-shape on the coordinates NOT in `dropped` (sorted indices).
    pub fn drop_coords(&self, dropped: &[usize]) -> Result<MixedShape> {
        let keep: Vec<u16> = (0..self.n())
            .filter(|i| !dropped.contains(i))
            .map(|i| self.radices[i])
            .collect();
        MixedShape::new(keep)
    }

    pub fn is_uniform(&self) -> Option<Shape> {
        let m = self.radices[0];
        if m >= 2 && self.radices.iter().all(|&r| r == m) {
            Shape::new(m as u32, self.n() as u32).ok()
        } else {
            None
        }
    }
}

/// A single word; coordinates 0-based internally.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Point {
    coords: Vec<u16>,
}

impl Point {
    /// From 0-based coordinates.
    pub fn from_raw(coords: Vec<u16>) -> Point {
        Point { coords }
    }

    /// From 1-based symbols, validated against the shape.
    pub fn from_symbols(symbols: &[u32], shape: &Shape) -> Result<Point> {
        if symbols.len() != shape.n() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coordinates, got {}",
                shape.n(),
                symbols.len()
            )));
        }
        let mut coords = Vec::with_capacity(symbols.len());
        for &s in symbols {
            if s < 1 || s as usize > shape.m() {
                return Err(Error::SymbolOutOfRange { value: s, m: shape.m() as u32 });
            }
            coords.push((s - 1) as u16);
        }
        Ok(Point { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// 0-based coordinate value.
    pub fn get(&self, i: usize) -> u16 {
        self.coords[i]
    }

    pub fn set(&mut self, i: usize, v: u16) {
        self.coords[i] = v;
    }

    pub fn coords(&self) -> &[u16] {
        &self.coords
    }

    /// 1-based symbols for display and serialization.
    pub fn symbols(&self) -> Vec<u32> {
        self.coords.iter().map(|&c| c as u32 + 1).collect()
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let syms: Vec<String> = self.coords.iter().map(|&c| (c as u32 + 1).to_string()).collect();
        write!(f, "{}", syms.join(" "))
    }
}

/// Number of coordinates where x and y coincide.
pub fn agreement(x: &Point, y: &Point) -> usize {
    assert_eq!(x.len(), y.len(), "agreement needs equal lengths");
    x.coords.iter().zip(&y.coords).filter(|(a, b)| a == b).count()
}
