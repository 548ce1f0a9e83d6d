//! Plain-text instance files.
//!
//! One object per line. A point is `i1,...,id` (coordinate element indices);
//! a sphere is `i1,...,id;r`. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::geometry::FormSpace;
use crate::incidence::{PointSet, SphereKey, SphereSet};

fn write_coords(out: &mut String, space: &FormSpace, idx: u32) {
    let coords = space.space().decode(idx);
    for (i, c) in coords.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{}", c.index());
    }
}

pub fn format_instance(points: &PointSet, spheres: &SphereSet, header: &str) -> String {
    let fs = spheres.space();
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(
        out,
        "# q={} d={} form={} points={} spheres={}",
        fs.field().order(),
        fs.dim(),
        fs.form().kind(),
        points.len(),
        spheres.len()
    );
    for &x in points.ids() {
        write_coords(&mut out, fs, x);
        out.push('\n');
    }
    for s in spheres.keys() {
        write_coords(&mut out, fs, s.center);
        let _ = writeln!(out, ";{}", s.radius.index());
    }
    out
}

fn parse_coords(space: &FormSpace, text: &str, line: usize) -> Result<u32> {
    let q = space.field().order() as u64;
    let coords = text
        .split(',')
        .map(|c| {
            let v: u64 = c
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}: bad coordinate '{c}'")))?;
            space.field().element(v)
        })
        .collect::<Result<Vec<FieldElement>>>()?;
    if coords.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: coords.len(),
        });
    }
    debug_assert!(coords.iter().all(|c| (c.index() as u64) < q));
    space.space().encode(&coords)
}

pub fn parse_instance(space: &Arc<FormSpace>, text: &str) -> Result<(PointSet, SphereSet)> {
    let mut points = Vec::new();
    let mut spheres = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once(';') {
            Some((center, radius)) => {
                let r: u64 = radius
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad radius '{radius}'", n + 1)))?;
                let r = space.field().element(r)?;
                spheres.push(SphereKey::new(parse_coords(space, center, n + 1)?, r));
            }
            None => points.push(parse_coords(space, line, n + 1)?),
        }
    }
    Ok((
        PointSet::new(space.space(), points)?,
        SphereSet::new(space.clone(), spheres)?,
    ))
}
