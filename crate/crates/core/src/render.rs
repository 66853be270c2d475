//! Binary PPM (P6) images of a configuration and its closure, one pixel per
//! cell, top row first.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::Grid;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0, self.1, self.2)
    }
}

impl FromStr for Rgb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Argument(format!("expected a colour as r,g,b with 0..=255 components, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let c = |i: usize| parts[i].parse::<u8>().map_err(|_| bad());
        Ok(Rgb(c(0)?, c(1)?, c(2)?))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Palette {
    pub initial_occupied: Rgb,
    pub eventually_occupied: Rgb,
    pub closed: Rgb,
    pub never_occupied: Rgb,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            initial_occupied: Rgb(0, 0, 0),
            eventually_occupied: Rgb(128, 128, 128),
            closed: Rgb(255, 0, 0),
            never_occupied: Rgb(255, 255, 255),
        }
    }
}

impl Palette {
    pub fn colours(&self) -> [Rgb; 4] {
        [self.initial_occupied, self.eventually_occupied, self.closed, self.never_occupied]
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.colours();
        for i in 0..4 {
            if c[i + 1..].contains(&c[i]) {
                return Err(Error::Argument(format!("palette colour {} is used twice", c[i])));
            }
        }
        Ok(())
    }
}

/// P6 image of `initial` and its closure `final_`; initial occupation wins
/// over eventual occupation.
pub fn render_ppm(initial: &Grid, final_: &Grid, palette: &Palette) -> Result<Vec<u8>> {
    if (initial.width(), initial.height()) != (final_.width(), final_.height()) {
        return Err(Error::Argument(format!(
            "grids differ in size: {}x{} and {}x{}",
            initial.width(),
            initial.height(),
            final_.width(),
            final_.height()
        )));
    }
    palette.validate()?;
    let (w, h) = (initial.width(), initial.height());
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(3 * w * h);
    for y in (0..h).rev() {
        for x in 0..w {
            let c = if initial.is_occupied(x, y) {
                palette.initial_occupied
            } else if final_.is_occupied(x, y) {
                palette.eventually_occupied
            } else if final_.is_closed(x, y) {
                palette.closed
            } else {
                palette.never_occupied
            };
            out.extend_from_slice(&[c.0, c.1, c.2]);
        }
    }
    Ok(out)
}

/// Pixels of a P6 image with maxval 255, top row first.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Pixmap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

/// Parses the header layout written by `render_ppm` (single whitespace
/// separators, no comments).
pub fn parse_ppm(bytes: &[u8]) -> Result<Pixmap> {
    let bad = |msg: &str| Error::Parse { line: 1, msg: format!("not a P6 image: {msg}") };
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() || pos == start {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
        pos += 1;
    }
    if fields[0] != "P6" || fields[3] != "255" {
        return Err(bad("expected magic P6 and maxval 255"));
    }
    let dim = |s: &str| s.parse::<usize>().map_err(|_| bad("bad dimension"));
    let (width, height) = (dim(fields[1])?, dim(fields[2])?);
    let body = &bytes[pos..];
    if body.len() != 3 * width * height {
        return Err(bad("pixel data has the wrong length"));
    }
    let pixels = body.chunks_exact(3).map(|c| Rgb(c[0], c[1], c[2])).collect();
    Ok(Pixmap { width, height, pixels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{closure, Rule};
    use crate::lattice::CellState;

    #[test]
    fn single_closed_cell() {
        let g = Grid::new(1, 1).unwrap().with(0, 0, CellState::Closed).unwrap();
        let bytes = render_ppm(&g, &g, &Palette::default()).unwrap();
        assert_eq!(bytes, b"P6\n1 1\n255\n\xff\x00\x00");
    }

    #[test]
    fn single_occupied_cell() {
        let g = Grid::new(1, 1).unwrap().with(0, 0, CellState::Occupied).unwrap();
        let bytes = render_ppm(&g, &g, &Palette::default()).unwrap();
        assert_eq!(&bytes[bytes.len() - 3..], &[0, 0, 0]);
    }

    #[test]
    fn eventual_and_never() {
        let initial = Grid::new(2, 1).unwrap();
        let final_ = initial.clone().with(0, 0, CellState::Occupied).unwrap();
        let img = parse_ppm(&render_ppm(&initial, &final_, &Palette::default()).unwrap()).unwrap();
        assert_eq!(img.pixels, vec![Rgb(128, 128, 128), Rgb(255, 255, 255)]);
    }

    #[test]
    fn top_row_comes_first() {
        let g: Grid = "x.\n##\n".parse().unwrap();
        let f = closure(&g, Rule::Modified).grid;
        let img = parse_ppm(&render_ppm(&g, &f, &Palette::default()).unwrap()).unwrap();
        assert_eq!((img.width, img.height), (2, 2));
        assert_eq!(img.pixels, vec![Rgb(255, 0, 0), Rgb(255, 255, 255), Rgb(0, 0, 0), Rgb(0, 0, 0)]);
    }

    #[test]
    fn size_mismatch_and_bad_palette() {
        let a = Grid::new(2, 2).unwrap();
        let b = Grid::new(2, 3).unwrap();
        assert!(matches!(render_ppm(&a, &b, &Palette::default()), Err(Error::Argument(_))));
        let p = Palette { closed: Rgb(0, 0, 0), ..Palette::default() };
        assert!(render_ppm(&a, &a, &p).is_err());
        assert_eq!("1, 2,3".parse::<Rgb>().unwrap(), Rgb(1, 2, 3));
        assert!("1,2".parse::<Rgb>().is_err());
        assert!("1,2,256".parse::<Rgb>().is_err());
    }
}
