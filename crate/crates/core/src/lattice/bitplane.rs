/// One bit per cell, rows packed into 64-bit words.
///
/// Row `y` occupies words `y * stride .. (y + 1) * stride`; bit `x % 64` of
/// word `x / 64` is cell `x`. Padding bits past `width` are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BitPlane {
    width: usize,
    height: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitPlane {
    pub fn new(width: usize, height: usize) -> Self {
        let stride = width.div_ceil(64);
        BitPlane {
            width,
            height,
            stride,
            words: vec![0; stride * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Words per row.
    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        (self.words[y * self.stride + (x >> 6)] >> (x & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        let word = &mut self.words[y * self.stride + (x >> 6)];
        let mask = 1u64 << (x & 63);
        if value {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u64] {
        &self.words[y * self.stride..(y + 1) * self.stride]
    }

    #[inline]
    pub fn row_mut(&mut self, y: usize) -> &mut [u64] {
        &mut self.words[y * self.stride..(y + 1) * self.stride]
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Mask of valid bits in the last word of a row.
    #[inline]
    pub fn tail_mask(&self) -> u64 {
        match self.width & 63 {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        }
    }

    pub fn fill(&mut self, value: bool) {
        let tail = self.tail_mask();
        let stride = self.stride;
        for (i, w) in self.words.iter_mut().enumerate() {
            *w = if !value {
                0
            } else if i % stride == stride - 1 {
                tail
            } else {
                u64::MAX
            };
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset_of(&self, other: &BitPlane) -> bool {
        assert_eq!((self.width, self.height), (other.width, other.height));
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &BitPlane) -> bool {
        assert_eq!((self.width, self.height), (other.width, other.height));
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn and_not_assign(&mut self, other: &BitPlane) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn or_assign(&mut self, other: &BitPlane) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Set cells in row-major order (bottom row first, west to east).
    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let stride = self.stride;
        self.words.iter().enumerate().flat_map(move |(i, &w)| {
            let y = i / stride;
            let base = (i % stride) * 64;
            BitIter(w).map(move |b| (base + b, y))
        })
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}
