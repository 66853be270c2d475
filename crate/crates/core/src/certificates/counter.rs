use crate::lattice::{BitPlane, Rect};

/// Summed-area table over a bit-plane; rectangle counts in O(1).
pub(crate) struct RectCounter {
    width: usize,
    height: usize,
    sums: Vec<u32>,
}

impl RectCounter {
    pub fn new(plane: &BitPlane) -> Self {
        let (w, h) = (plane.width(), plane.height());
        let mut sums = vec![0u32; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut run = 0u32;
            for x in 0..w {
                run += plane.get(x, y) as u32;
                sums[(y + 1) * (w + 1) + x + 1] = sums[y * (w + 1) + x + 1] + run;
            }
        }
        RectCounter {
            width: w,
            height: h,
            sums,
        }
    }

    /// Set bits inside `rect`; the off-grid part counts as zero.
    pub fn count(&self, rect: Rect) -> u32 {
        let r = rect.intersect(&Rect::new(0, 0, self.width as i64, self.height as i64));
        if r.is_empty() {
            return 0;
        }
        let stride = self.width + 1;
        let (x0, y0, x1, y1) = (r.x0 as usize, r.y0 as usize, r.x1() as usize, r.y1() as usize);
        self.sums[y1 * stride + x1] + self.sums[y0 * stride + x0]
            - self.sums[y0 * stride + x1]
            - self.sums[y1 * stride + x0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_direct_enumeration() {
        let mut plane = BitPlane::new(13, 9);
        for (x, y) in [(0, 0), (12, 8), (5, 4), (6, 4), (5, 5), (70 % 13, 3)] {
            plane.set(x, y, true);
        }
        let c = RectCounter::new(&plane);
        for rect in [
            Rect::new(0, 0, 13, 9),
            Rect::new(5, 4, 2, 2),
            Rect::new(-3, -3, 4, 4),
            Rect::new(10, 7, 10, 10),
            Rect::new(4, 4, 0, 3),
        ] {
            let direct = rect
                .cells()
                .filter(|&(x, y)| x >= 0 && y >= 0 && x < 13 && y < 9 && plane.get(x as usize, y as usize))
                .count() as u32;
            assert_eq!(c.count(rect), direct, "{rect}");
        }
    }
}
