//! Fixture format: one character per cell, top row (largest `y`) first,
//! `.` open, `#` occupied, `x` closed, every row terminated by `\n`.

use std::fmt;
use std::str::FromStr;

use super::{CellState, Grid};
use crate::error::{Error, Result};

impl Grid {
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity((self.width() + 1) * self.height());
        for y in (0..self.height()).rev() {
            for x in 0..self.width() {
                s.push(self.state(x, y).symbol());
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Grid> {
        if !text.is_empty() && !text.ends_with('\n') {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: "last row is not newline-terminated".into(),
            });
        }
        let rows: Vec<&str> = text.split_terminator('\n').collect();
        let Some(first) = rows.first() else {
            return Err(Error::Parse {
                line: 1,
                msg: "empty grid".into(),
            });
        };
        let width = first.chars().count();
        let height = rows.len();
        let mut g = Grid::new(width.max(1), height)?;
        if width == 0 {
            return Err(Error::Parse {
                line: 1,
                msg: "empty row".into(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            let count = row.chars().count();
            if count != width {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("row has {count} cells, expected {width}"),
                });
            }
            let y = height - 1 - i;
            for (x, c) in row.chars().enumerate() {
                let state = CellState::from_symbol(c).ok_or_else(|| Error::Parse {
                    line: i + 1,
                    msg: format!("unexpected character {c:?}"),
                })?;
                g.put(x, y, state);
            }
        }
        Ok(g)
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Grid> {
        Grid::from_text(s)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
