use std::fmt;

/// Axis-aligned cell rectangle `[x0, x0 + w) x [y0, y0 + h)`.
///
/// A rectangle with `w == 0` or `h == 0` is the empty set. Coordinates are
/// signed so that rectangles may hang off the grid; callers clip them.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Rect {
    pub x0: i64,
    pub y0: i64,
    pub w: i64,
    pub h: i64,
}

impl Rect {
    /// Negative extents are clamped to zero.
    pub fn new(x0: i64, y0: i64, w: i64, h: i64) -> Self {
        Rect {
            x0,
            y0,
            w: w.max(0),
            h: h.max(0),
        }
    }

    pub const EMPTY: Rect = Rect {
        x0: 0,
        y0: 0,
        w: 0,
        h: 0,
    };

    /// Inclusive corner form.
    pub fn from_corners(xa: i64, ya: i64, xb: i64, yb: i64) -> Self {
        let (xl, xr) = (xa.min(xb), xa.max(xb));
        let (yl, yr) = (ya.min(yb), ya.max(yb));
        Rect::new(xl, yl, xr - xl + 1, yr - yl + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn area(&self) -> i64 {
        self.w * self.h
    }

    /// Exclusive right edge.
    pub fn x1(&self) -> i64 {
        self.x0 + self.w
    }

    /// Exclusive top edge.
    pub fn y1(&self) -> i64 {
        self.y0 + self.h
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && x < self.x1() && y >= self.y0 && y < self.y1()
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.is_empty()
            || (other.x0 >= self.x0
                && other.x1() <= self.x1()
                && other.y0 >= self.y0
                && other.y1() <= self.y1())
    }

    pub fn intersect(&self, other: &Rect) -> Rect {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1().min(other.x1());
        let y1 = self.y1().min(other.y1());
        if x1 <= x0 || y1 <= y0 {
            Rect::EMPTY
        } else {
            Rect::new(x0, y0, x1 - x0, y1 - y0)
        }
    }

    /// Middle column; unique when `w` is odd.
    pub fn middle_column(&self) -> i64 {
        self.x0 + (self.w - 1) / 2
    }

    /// Middle row; unique when `h` is odd.
    pub fn middle_row(&self) -> i64 {
        self.y0 + (self.h - 1) / 2
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (i64, i64)> {
        let r = *self;
        let xs = if r.is_empty() { 0..0 } else { r.x0..r.x1() };
        let ys = if r.is_empty() { 0..0 } else { r.y0..r.y1() };
        ys.flat_map(move |y| xs.clone().map(move |x| (x, y)))
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.x0, self.y0, self.w, self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_rect_has_no_cells() {
        assert!(Rect::new(3, 3, 0, 5).is_empty());
        assert_eq!(Rect::new(3, 3, -2, 5).cells().count(), 0);
        assert!(!Rect::new(3, 3, 0, 5).contains(3, 3));
    }

    #[test]
    fn intersection_and_middles() {
        let a = Rect::new(0, 0, 5, 4);
        let b = Rect::new(3, -2, 10, 3);
        assert_eq!(a.intersect(&b), Rect::new(3, 0, 2, 1));
        assert!(a.intersect(&Rect::new(5, 0, 1, 1)).is_empty());
        assert_eq!(a.middle_column(), 2);
        assert_eq!(Rect::new(10, 0, 1, 7).middle_row(), 3);
        assert_eq!(Rect::from_corners(4, 5, 1, 2), Rect::new(1, 2, 4, 4));
    }
}
