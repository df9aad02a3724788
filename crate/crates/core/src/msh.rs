//! Gmsh MSH 2.2 ASCII reader.
//!
//! Only 3-node triangles (type 2) become elements. Points (15) and lines (1),
//! which Gmsh writes for geometric entities, are skipped; any other type is an error.
//! Physical tags are ignored: boundary faces go through the geometric classifier.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryKind, Mesh, Point};

const TRIANGLE: u32 = 2;
const LINE: u32 = 1;
const POINT: u32 = 15;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate(), last: 0 }
    }

    /// Next non-blank line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Some((i + 1, l));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next().ok_or_else(|| Error::MshParse {
            line: self.last + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    fn expect_tag(&mut self, tag: &str) -> Result<()> {
        let (n, l) = self.expect(tag)?;
        if l == tag {
            Ok(())
        } else {
            Err(err(n, format!("expected {tag}, found {l:?}")))
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::MshParse { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| err(line, format!("invalid {what} {tok:?}")))
}

/// Parses MSH 2.2 text into a mesh.
pub fn parse_msh(text: &str, classifier: &dyn Fn(Point) -> BoundaryKind) -> Result<Mesh> {
    let mut lines = Lines::new(text);
    let mut vertices: Vec<Point> = Vec::new();
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let (mut seen_format, mut seen_nodes, mut seen_elements) = (false, false, false);

    while let Some((n, l)) = lines.next() {
        match l {
            "$MeshFormat" => {
                let (n, l) = lines.expect("format line")?;
                let mut t = l.split_whitespace();
                let version: String = field(n, t.next(), "version")?;
                let file_type: u32 = field(n, t.next(), "file type")?;
                if !version.starts_with("2.") {
                    return Err(err(n, format!("unsupported MSH version {version}")));
                }
                if file_type != 0 {
                    return Err(err(n, "binary MSH files are not supported"));
                }
                lines.expect_tag("$EndMeshFormat")?;
                seen_format = true;
            }
            "$Nodes" => {
                let (n, l) = lines.expect("node count")?;
                let count: usize = field(n, Some(l), "node count")?;
                vertices.reserve(count);
                for _ in 0..count {
                    let (n, l) = lines.expect("node")?;
                    let mut t = l.split_whitespace();
                    let id: u64 = field(n, t.next(), "node id")?;
                    let x: f64 = field(n, t.next(), "x coordinate")?;
                    let y: f64 = field(n, t.next(), "y coordinate")?;
                    if index.insert(id, vertices.len()).is_some() {
                        return Err(err(n, format!("duplicate node id {id}")));
                    }
                    vertices.push([x, y]);
                }
                lines.expect_tag("$EndNodes")?;
                seen_nodes = true;
            }
            "$Elements" => {
                if !seen_nodes {
                    return Err(err(n, "$Elements before $Nodes"));
                }
                let (n, l) = lines.expect("element count")?;
                let count: usize = field(n, Some(l), "element count")?;
                for _ in 0..count {
                    let (n, l) = lines.expect("element")?;
                    let mut t = l.split_whitespace();
                    let _id: u64 = field(n, t.next(), "element id")?;
                    let kind: u32 = field(n, t.next(), "element type")?;
                    let ntags: usize = field(n, t.next(), "tag count")?;
                    for _ in 0..ntags {
                        let _: i64 = field(n, t.next(), "tag")?;
                    }
                    match kind {
                        TRIANGLE => {
                            let mut tri = [0usize; 3];
                            for v in &mut tri {
                                let id: u64 = field(n, t.next(), "node reference")?;
                                *v = *index
                                    .get(&id)
                                    .ok_or_else(|| err(n, format!("unknown node {id}")))?;
                            }
                            triangles.push(tri);
                        }
                        LINE | POINT => {}
                        other => return Err(Error::UnsupportedElement { kind: other }),
                    }
                }
                lines.expect_tag("$EndElements")?;
                seen_elements = true;
            }
            s if s.starts_with('$') => {
                // Unknown section: skip to its end tag.
                let end = format!("$End{}", &s[1..]);
                loop {
                    let (_, l) = lines.expect(&end)?;
                    if l == end {
                        break;
                    }
                }
            }
            other => return Err(err(n, format!("unexpected content {other:?}"))),
        }
    }
    if !seen_format {
        return Err(err(lines.last, "missing $MeshFormat section"));
    }
    if !seen_elements {
        return Err(err(lines.last, "missing $Elements section"));
    }
    Mesh::from_triangles(vertices, triangles, classifier)
}

impl Mesh {
    /// Reads a Gmsh MSH 2.2 ASCII file.
    pub fn import_msh(path: impl AsRef<Path>, classifier: &dyn Fn(Point) -> BoundaryKind) -> Result<Self> {
        parse_msh(&std::fs::read_to_string(path)?, classifier)
    }
}
