//! Index arithmetic on the discrete torus `Z_rows x Z_cols`.
//!
//! One-dimensional signals live on the `1 x d` torus, images on `d x d`.
//! Every algorithm in the crate is written against [`Shape`] and [`Offset`],
//! so the same code path serves both cases. Data are stored row-major.

use std::fmt;

use num_complex::Complex64;

/// Size of a periodic index lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn line(d: usize) -> Self {
        Shape { rows: 1, cols: d }
    }

    pub fn square(d: usize) -> Self {
        Shape { rows: d, cols: d }
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_line(&self) -> bool {
        self.rows == 1
    }

    #[inline]
    pub fn coords(&self, p: usize) -> (usize, usize) {
        (p / self.cols, p % self.cols)
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// `p + o` with both coordinates reduced modulo the lattice size.
    #[inline]
    pub fn translate(&self, p: usize, o: Offset) -> usize {
        let (r, c) = self.coords(p);
        let r = (r as i64 + o.row).rem_euclid(self.rows as i64) as usize;
        let c = (c as i64 + o.col).rem_euclid(self.cols as i64) as usize;
        self.index(r, c)
    }

    /// Lattice point of the offset itself (its canonical representative).
    pub fn point(&self, o: Offset) -> usize {
        self.translate(0, o)
    }

    /// Negated point, `-p` modulo the lattice.
    #[inline]
    pub fn negate(&self, p: usize) -> usize {
        let (r, c) = self.coords(p);
        self.index((self.rows - r) % self.rows, (self.cols - c) % self.cols)
    }

    /// Angle `2 pi <o, k>` where `k` is a lattice point, normalized per axis.
    #[inline]
    pub fn angle(&self, o: Offset, p: usize) -> f64 {
        let (r, c) = self.coords(p);
        let t = (o.row as f64 * r as f64) / self.rows as f64 + (o.col as f64 * c as f64) / self.cols as f64;
        std::f64::consts::TAU * t.rem_euclid(1.0)
    }

    /// Whether two offsets name the same lattice translation.
    pub fn same_offset(&self, a: Offset, b: Offset) -> bool {
        self.point(a) == self.point(b)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_line() {
            write!(f, "{}", self.cols)
        } else {
            write!(f, "{}x{}", self.rows, self.cols)
        }
    }
}

/// A translation on the lattice, e.g. the lag `j` of a diagonal `x . S_j conj(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Offset {
    pub row: i64,
    pub col: i64,
}

impl Offset {
    pub const ZERO: Offset = Offset { row: 0, col: 0 };

    pub fn new(row: i64, col: i64) -> Self {
        Offset { row, col }
    }

    /// One-dimensional lag.
    pub fn lag(j: i64) -> Self {
        Offset { row: 0, col: j }
    }

    pub fn neg(self) -> Self {
        Offset {
            row: -self.row,
            col: -self.col,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.row == 0 && self.col == 0
    }
}

impl fmt::Display for Offset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.row == 0 {
            write!(f, "{}", self.col)
        } else {
            write!(f, "({}, {})", self.row, self.col)
        }
    }
}

/// Complex data laid out on a lattice: 1D signals and 2D images.
pub trait Field {
    fn shape(&self) -> Shape;
    fn values(&self) -> &[Complex64];
}

impl Field for crate::signal::ComplexSignal {
    fn shape(&self) -> Shape {
        Shape::line(self.len())
    }

    fn values(&self) -> &[Complex64] {
        self.as_slice()
    }
}
