//! Plain-text field snapshots.
//!
//! ```text
//! # levelset nx ny dx dy ox oy t
//! u(0,0) u(1,0) ... u(nx-1,0)
//! ...
//! u(0,ny-1) ...
//! ```
//!
//! Values are written with 17 significant digits, so a read returns the
//! exact field.

use std::fmt::Write as _;
use std::io::{self, BufRead};

use thiserror::Error;

use super::{Grid2D, LevelSetField};

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot I/O: {0}")]
    Io(#[from] io::Error),
    #[error("snapshot line {line}: {message}")]
    Format { line: usize, message: String },
}

fn format_error(line: usize, message: impl Into<String>) -> SnapshotError {
    SnapshotError::Format {
        line,
        message: message.into(),
    }
}

/// Render a field in snapshot format.
pub fn to_string(field: &LevelSetField) -> String {
    let g = &field.grid;
    let mut out = format!(
        "# levelset {} {} {} {} {} {} {}\n",
        g.nx,
        g.ny,
        g.dx(),
        g.dy(),
        g.origin.0,
        g.origin.1,
        field.time
    );
    for row in field.u.chunks(g.nx) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v:.16e}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn read(reader: impl BufRead) -> Result<LevelSetField, SnapshotError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| format_error(1, "empty file"))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 9 || fields[0] != "#" || fields[1] != "levelset" {
        return Err(format_error(1, format!("bad header `{header}`")));
    }
    let count = |k: usize| -> Result<usize, SnapshotError> {
        fields[k]
            .parse()
            .map_err(|_| format_error(1, format!("bad count `{}`", fields[k])))
    };
    let real = |k: usize| -> Result<f64, SnapshotError> {
        fields[k]
            .parse()
            .map_err(|_| format_error(1, format!("bad number `{}`", fields[k])))
    };
    let (nx, ny) = (count(2)?, count(3)?);
    let (dx, dy, ox, oy, t) = (real(4)?, real(5)?, real(6)?, real(7)?, real(8)?);
    let grid = Grid2D {
        nx,
        ny,
        origin: (ox, oy),
        extent: (ox + nx as f64 * dx, oy + ny as f64 * dy),
    };
    grid.validate()
        .map_err(|e| format_error(1, e.to_string()))?;

    let mut u = Vec::with_capacity(grid.len());
    for j in 0..ny {
        let line_no = j + 2;
        let line = lines
            .next()
            .ok_or_else(|| format_error(line_no, format!("expected {ny} rows")))??;
        let start = u.len();
        for token in line.split_whitespace() {
            u.push(
                token
                    .parse::<f64>()
                    .map_err(|_| format_error(line_no, format!("bad value `{token}`")))?,
            );
        }
        if u.len() - start != nx {
            return Err(format_error(
                line_no,
                format!("expected {nx} values, found {}", u.len() - start),
            ));
        }
    }
    if let Some(extra) = lines.next() {
        if !extra?.trim().is_empty() {
            return Err(format_error(ny + 2, "trailing data"));
        }
    }
    LevelSetField::new(grid, u, t).map_err(|e| format_error(1, e.to_string()))
}

pub fn from_str(text: &str) -> Result<LevelSetField, SnapshotError> {
    read(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_layout() {
        let g = Grid2D::new(3, 4, (0.5, -1.0), (3.5, 1.0)).unwrap();
        let f = LevelSetField::from_fn(g, |x, y| x + 10.0 * y).unwrap();
        let text = to_string(&f);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# levelset 3 4 1 0.5 0.5 -1 0");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1].split(' ').count(), 3);
        assert!(lines[1].starts_with("-9.5000000000000000e0"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(from_str("").is_err());
        assert!(from_str("# levelset 3 3 1 1 0 0\n").is_err());
        assert!(from_str("# levelset 3 3 1 1 0 0 0\n1 2 3\n1 2 3\n").is_err());
        assert!(from_str("# levelset 3 3 1 1 0 0 0\n1 2 3\n1 2\n1 2 3\n").is_err());
        assert!(from_str("# levelset 3 3 1 1 0 0 0\n1 2 3\n1 x 3\n1 2 3\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(
            values in proptest::collection::vec(-1e6f64..1e6, 4 * 5),
            t in 0.0f64..100.0,
            dx in 0.01f64..10.0,
        ) {
            let g = Grid2D { nx: 4, ny: 5, origin: (0.0, 2.0), extent: (4.0 * dx, 2.0 + 5.0 * dx) };
            let f = LevelSetField::new(g, values, t).unwrap();
            let back = from_str(&to_string(&f)).unwrap();
            prop_assert_eq!(back.u, f.u);
            prop_assert_eq!(back.time, f.time);
            prop_assert_eq!(back.grid.nx, 4);
            prop_assert!((back.grid.dx() - g.dx()).abs() <= 1e-12 * dx);
        }
    }
}
