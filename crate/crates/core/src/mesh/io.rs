//! Line-oriented text format:
//!
//! ```text
//! dim 2
//! vertices N
//! x y            (N lines)
//! elements M
//! v0 v1 v2       (M lines, refinement edge v0–v1)
//! boundary K
//! v0 v1 D|N      (K lines)
//! ```
//!
//! Indices are 0-based. Coordinates are written in shortest round-trip form.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use super::{find_violations, BoundaryFacet, BoundaryLabel, Mesh, Point};
use crate::error::{Error, Result};

/// Parsed mesh file contents before invariant checking.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMesh {
    pub vertices: Vec<Point>,
    pub elements: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryFacet>,
}

impl RawMesh {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse {
                line: text.lines().count() + 1,
                message: format!("unexpected end of file, expected {what}"),
            })
        };

        let (line, header) = next("`dim 2`")?;
        if header.split_whitespace().collect::<Vec<_>>() != ["dim", "2"] {
            return Err(parse_err(
                line,
                format!("expected `dim 2`, found `{header}`"),
            ));
        }

        let n = section_count(next("vertices header")?, "vertices")?;
        let mut vertices = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, l) = next("vertex line")?;
            let [x, y] = fields::<f64, 2>(line, l)?;
            vertices.push([x, y]);
        }

        let m = section_count(next("elements header")?, "elements")?;
        let mut elements = Vec::with_capacity(m);
        for _ in 0..m {
            let (line, l) = next("element line")?;
            elements.push(fields::<usize, 3>(line, l)?);
        }

        let k = section_count(next("boundary header")?, "boundary")?;
        let mut boundary = Vec::with_capacity(k);
        for _ in 0..k {
            let (line, l) = next("boundary line")?;
            let tokens: Vec<&str> = l.split_whitespace().collect();
            if tokens.len() != 3 {
                return Err(parse_err(
                    line,
                    format!("expected `v0 v1 D|N`, found `{l}`"),
                ));
            }
            let a = parse_token::<usize>(line, tokens[0])?;
            let b = parse_token::<usize>(line, tokens[1])?;
            let label: BoundaryLabel = tokens[2]
                .parse()
                .map_err(|e: Error| parse_err(line, e.to_string()))?;
            boundary.push(BoundaryFacet {
                vertices: [a, b],
                label,
            });
        }

        if let Some((line, l)) = lines.next() {
            return Err(parse_err(line, format!("trailing content `{l}`")));
        }
        Ok(Self {
            vertices,
            elements,
            boundary,
        })
    }

    pub fn violations(&self) -> Vec<String> {
        find_violations(&self.vertices, &self.elements, &self.boundary)
    }

    pub fn into_mesh(self) -> Result<Mesh> {
        Mesh::new(self.vertices, self.elements, self.boundary)
    }
}

fn parse_err(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}

fn section_count((line, l): (usize, &str), name: &str) -> Result<usize> {
    let tokens: Vec<&str> = l.split_whitespace().collect();
    match tokens.as_slice() {
        [head, count] if *head == name => parse_token(line, count),
        _ => Err(parse_err(
            line,
            format!("expected `{name} <count>`, found `{l}`"),
        )),
    }
}

fn parse_token<T: std::str::FromStr>(line: usize, token: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse `{token}`")))
}

fn fields<T: std::str::FromStr + Copy + Default, const K: usize>(
    line: usize,
    l: &str,
) -> Result<[T; K]> {
    let tokens: Vec<&str> = l.split_whitespace().collect();
    if tokens.len() != K {
        return Err(parse_err(
            line,
            format!("expected {K} fields, found {}", tokens.len()),
        ));
    }
    let mut out = [T::default(); K];
    for (slot, tok) in out.iter_mut().zip(tokens) {
        *slot = parse_token(line, tok)?;
    }
    Ok(out)
}

impl Mesh {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "dim 2").unwrap();
        writeln!(s, "vertices {}", self.vertices.len()).unwrap();
        for p in &self.vertices {
            writeln!(s, "{} {}", p[0], p[1]).unwrap();
        }
        writeln!(s, "elements {}", self.elements.len()).unwrap();
        for t in &self.elements {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(s, "boundary {}", self.boundary.len()).unwrap();
        for f in &self.boundary {
            writeln!(s, "{} {} {}", f.vertices[0], f.vertices[1], f.label).unwrap();
        }
        s
    }

    /// Parses and validates a mesh. Generation counters start at zero.
    pub fn from_text(text: &str) -> Result<Mesh> {
        RawMesh::parse(text)?.into_mesh()
    }

    pub fn read_from<R: BufRead>(mut reader: R) -> Result<Mesh> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::from_text(&text)
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Mesh> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
