//! Plain-text mesh format.
//!
//! ```text
//! dim nV nK
//! x y [z]            (nV lines)
//! v0 v1 v2 [v3]      (nK lines, 0-based)
//! boundary           (optional)
//! v0 v1 [v2] tag     (tag: free | abc | exact)
//! ```
//!
//! Boundary faces that are not listed are absorbing.

use std::collections::HashMap;
use std::path::Path;

use super::{BoundaryTag, Mesh};
use crate::error::{Error, Result};

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text)
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty mesh file".into()))?;
    let h = parse_usizes(header, ln)?;
    if h.len() != 3 {
        return Err(perr(ln, "header must be 'dim nV nK'".into()));
    }
    let (dim, nv, nk) = (h[0], h[1], h[2]);
    if !(dim == 2 || dim == 3) {
        return Err(perr(ln, format!("unsupported dimension {dim}")));
    }
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "unexpected end of vertex list".into()))?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| perr(ln, format!("bad coordinate '{t}': {e}"))))
            .collect::<Result<_>>()?;
        if xs.len() != dim {
            return Err(perr(ln, format!("expected {dim} coordinates, got {}", xs.len())));
        }
        let mut p = [0.0; 3];
        p[..dim].copy_from_slice(&xs);
        vertices.push(p);
    }
    let mut elements = Vec::with_capacity(nk);
    for _ in 0..nk {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "unexpected end of element list".into()))?;
        let ev = parse_usizes(l, ln)?;
        if ev.len() != dim + 1 {
            return Err(perr(ln, format!("expected {} vertex indices", dim + 1)));
        }
        if let Some(&bad) = ev.iter().find(|&&v| v >= nv) {
            return Err(perr(ln, format!("vertex index {bad} out of range")));
        }
        elements.push(ev);
    }
    let mut tags: HashMap<Vec<usize>, BoundaryTag> = HashMap::new();
    if let Some((ln, l)) = lines.next() {
        if l != "boundary" {
            return Err(perr(ln, format!("expected 'boundary' section, got '{l}'")));
        }
        for (ln, l) in lines {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != dim + 1 {
                return Err(perr(ln, format!("boundary line needs {dim} vertices and a tag")));
            }
            let tag = BoundaryTag::parse(toks[dim]).ok_or_else(|| perr(ln, format!("unknown tag '{}'", toks[dim])))?;
            let mut key = parse_usizes(&toks[..dim].join(" "), ln)?;
            key.sort_unstable();
            tags.insert(key, tag);
        }
    }
    // The tagger sees face centroids, so recover vertex keys by centroid.
    let mut by_centroid: Vec<([f64; 3], BoundaryTag)> = Vec::new();
    for (key, tag) in &tags {
        let mut c = [0.0; 3];
        for &v in key {
            for d in 0..3 {
                c[d] += vertices[v][d] / key.len() as f64;
            }
        }
        by_centroid.push((c, *tag));
    }
    let scale = vertices
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0_f64, |a, b| a.max(b.abs()))
        .max(1.0);
    Mesh::new(dim, vertices, elements, None, move |c, _| {
        by_centroid
            .iter()
            .find(|(p, _)| (0..3).all(|d| (p[d] - c[d]).abs() <= 1e-12 * scale))
            .map(|(_, t)| *t)
            .unwrap_or(BoundaryTag::Absorbing)
    })
}

fn parse_usizes(l: &str, ln: usize) -> Result<Vec<usize>> {
    l.split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|e| Error::Parse {
                line: ln,
                msg: format!("bad integer '{t}': {e}"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "2 4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\nboundary\n2 3 free\n0 1 exact\n";

    #[test]
    fn parses_square_with_tags() {
        let m = parse_mesh(SQUARE).unwrap();
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.count_interior(), 2);
        assert_eq!(m.count_boundary(BoundaryTag::FreeSurface), 1);
        assert_eq!(m.count_boundary(BoundaryTag::ExactSolution), 1);
        assert_eq!(m.count_boundary(BoundaryTag::Absorbing), 2);
        assert!((m.volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reports_line_numbers() {
        let bad = "2 3 1\n0 0\n1 x\n0 1\n0 1 2\n";
        assert!(matches!(parse_mesh(bad), Err(Error::Parse { line: 3, .. })));
        let bad = "2 3 1\n0 0\n1 0\n0 1\n0 1 7\n";
        assert!(matches!(parse_mesh(bad), Err(Error::Parse { line: 5, .. })));
    }

    #[test]
    fn inverted_element_id() {
        let bad = "2 3 1\n0 0\n0 1\n1 0\n0 1 2\n";
        assert!(matches!(parse_mesh(bad), Err(Error::InvertedElement { element: 0, .. })));
    }

    #[test]
    fn loads_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sq.mesh");
        std::fs::write(&p, SQUARE).unwrap();
        assert_eq!(load_mesh(&p).unwrap().num_elements(), 2);
        assert!(matches!(load_mesh(&dir.path().join("none")), Err(Error::Io { .. })));
    }
}
