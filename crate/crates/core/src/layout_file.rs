//! Line-oriented layout files.
//!
//! ```text
//! bwp-layout v1
//! # x1 y1 x2 y2 att_db
//! wall 0 0 10 0 10
//! ```
//!
//! Blank lines and `#` comments are ignored. Bounds are the bounding box of
//! the walls, so a layout file must contain at least one wall.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{BuildingLayout, Point2D, Wall};

pub const LAYOUT_HEADER: &str = "bwp-layout v1";

pub fn parse_layout(text: &str) -> Result<BuildingLayout> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).trim()))
        .filter(|(_, l)| !l.is_empty());

    match lines.next() {
        Some((_, LAYOUT_HEADER)) => {}
        Some((n, other)) => {
            return Err(Error::parse(
                n,
                format!("expected header `{LAYOUT_HEADER}`, found `{other}`"),
            ))
        }
        None => return Err(Error::parse(1, "empty layout file")),
    }

    let mut walls = Vec::new();
    for (n, line) in lines {
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("wall") => {}
            Some(other) => return Err(Error::parse(n, format!("unknown record `{other}`"))),
            None => unreachable!("blank lines are filtered"),
        }
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(n, format!("`{f}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != 5 {
            return Err(Error::parse(
                n,
                format!("wall needs 5 values (x1 y1 x2 y2 att_db), found {}", values.len()),
            ));
        }
        let wall = Wall::new(
            Point2D::new(values[0], values[1]),
            Point2D::new(values[2], values[3]),
            values[4],
        )
        .map_err(|e| Error::parse(n, e.to_string()))?;
        walls.push(wall);
    }
    if walls.is_empty() {
        return Err(Error::parse(1, "layout contains no walls"));
    }
    BuildingLayout::from_walls(walls).map_err(|e| Error::parse(1, e.to_string()))
}

/// Serializes a layout; the output parses back to identical walls.
pub fn format_layout(layout: &BuildingLayout) -> String {
    let mut out = String::from(LAYOUT_HEADER);
    out.push('\n');
    for w in layout.walls() {
        let _ = writeln!(
            out,
            "wall {} {} {} {} {}",
            w.a.x, w.a.y, w.b.x, w.b.y, w.attenuation_db
        );
    }
    out
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_office_layout, OfficeSpec};

    #[test]
    fn parses_minimal_file() {
        let text = "bwp-layout v1\n# a room edge\nwall 0 0 10 0 10 # south\n\nwall 0 0 0 5 inf\n";
        let layout = parse_layout(text).unwrap();
        assert_eq!(layout.walls().len(), 2);
        assert_eq!(layout.walls()[1].attenuation_db, f64::INFINITY);
        assert_eq!(layout.bounds().width(), 10.0);
        assert_eq!(layout.bounds().height(), 5.0);
    }

    #[test]
    fn office_round_trips() {
        let layout = make_office_layout(&OfficeSpec::default()).unwrap();
        let back = parse_layout(&format_layout(&layout)).unwrap();
        assert_eq!(back, layout);
    }

    #[test]
    fn errors_cite_the_offending_line() {
        let text = "bwp-layout v1\nwall 0 0 1 0 3\n\nwall 0 0 x 1 3\n";
        match parse_layout(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        match parse_layout("bwp-layout v1\nwall 0 0 1 0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_layout("bwp-layout v1\nwall 0 0 1 0 1\ndoor 1 1 2 2 0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse_layout("bwp-layout v1\nwall 1 1 1 1 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_header_and_empty_body() {
        assert!(matches!(
            parse_layout("bwp-layout v2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_layout("bwp-layout v1\n# nothing\n").is_err());
        assert!(parse_layout("").is_err());
    }
}
