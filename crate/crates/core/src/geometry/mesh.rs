//! Triangle meshes and the Wavefront-style text format they are stored in.
//!
//! Only `v` and `f` records are interpreted. Faces with more than three
//! vertices are fan-triangulated; `v/vt/vn` index forms and negative
//! (relative) indices are accepted. Everything else (normals, texture
//! coordinates, groups, materials) is skipped.

use std::fmt::Write as _;
use std::path::Path;

use super::pose::{Mat3, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub name: String,
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Builds a mesh after checking face indices and coordinate finiteness.
    pub fn new(name: impl Into<String>, vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Empty("mesh has no faces"));
        }
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::parse(format!("vertex {i}"), "non-finite coordinate"));
        }
        for (fi, f) in faces.iter().enumerate() {
            for &idx in f {
                if idx >= vertices.len() {
                    return Err(Error::FaceIndexOutOfRange {
                        face: fi,
                        index: idx,
                        vertex_count: vertices.len(),
                    });
                }
            }
        }
        Ok(Self {
            name: name.into(),
            vertices,
            faces,
        })
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed volume from the tetrahedron decomposition about the origin.
    /// Positive for closed meshes with outward (counter-clockwise) winding.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                let (a, b, c) = (&self.vertices[a], &self.vertices[b], &self.vertices[c]);
                a.dot(&b.cross(c)) / 6.0
            })
            .sum()
    }

    /// Centre of mass of the enclosed solid at uniform density.
    pub fn center_of_mass(&self) -> Result<Vec3> {
        let mut volume = 0.0;
        let mut moment = Vec3::zeros();
        for &[a, b, c] in &self.faces {
            let (a, b, c) = (&self.vertices[a], &self.vertices[b], &self.vertices[c]);
            let v = a.dot(&b.cross(c)) / 6.0;
            volume += v;
            moment += v * (a + b + c) / 4.0;
        }
        let scale = self.bounding_extent().max(1e-12);
        if volume.abs() <= 1e-12 * scale.powi(3) {
            return Err(Error::Geometry(format!(
                "mesh '{}' encloses no volume; pass an explicit centre of mass",
                self.name
            )));
        }
        Ok(moment / volume)
    }

    /// Largest axis-aligned side length.
    pub fn bounding_extent(&self) -> f64 {
        let (lo, hi) = self.aabb();
        (hi - lo).max()
    }

    pub fn aabb(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn transformed(&self, rotation: &Mat3, translation: &Vec3) -> TriMesh {
        TriMesh {
            name: self.name.clone(),
            vertices: self.vertices.iter().map(|v| rotation * v + translation).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Concatenates meshes into one; face indices are rebased.
    pub fn merge(name: impl Into<String>, parts: &[TriMesh]) -> TriMesh {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for part in parts {
            let base = vertices.len();
            vertices.extend_from_slice(&part.vertices);
            faces.extend(part.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
        }
        TriMesh {
            name: name.into(),
            vertices,
            faces,
        }
    }

    pub fn to_obj_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "o {}", self.name);
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }
}

/// Parses mesh text. `name` becomes the mesh identifier.
pub fn parse_obj(text: &str, name: &str) -> Result<TriMesh> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let loc = || format!("line {}", lineno + 1);
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0; 3];
                for c in coords.iter_mut() {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| Error::parse(loc(), "vertex needs three coordinates"))?;
                    *c = tok
                        .parse::<f64>()
                        .map_err(|_| Error::parse(loc(), format!("bad coordinate '{tok}'")))?;
                    if !c.is_finite() {
                        return Err(Error::parse(loc(), format!("non-finite coordinate '{tok}'")));
                    }
                }
                vertices.push(Vec3::from(coords));
            }
            Some("f") => {
                let mut idx = Vec::with_capacity(4);
                for tok in tokens {
                    let head = tok.split('/').next().unwrap_or("");
                    let raw_idx: i64 = head
                        .parse()
                        .map_err(|_| Error::parse(loc(), format!("bad face index '{tok}'")))?;
                    let resolved = match raw_idx {
                        0 => return Err(Error::parse(loc(), "face index 0 is invalid")),
                        i if i > 0 => (i - 1) as usize,
                        i => {
                            let back = (-i) as usize;
                            if back > vertices.len() {
                                return Err(Error::parse(loc(), format!("relative index {i} underflows")));
                            }
                            vertices.len() - back
                        }
                    };
                    idx.push(resolved);
                }
                if idx.len() < 3 {
                    return Err(Error::parse(loc(), "face needs at least three vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }

    TriMesh::new(name, vertices, faces)
}

/// Reads a mesh file; the identifier is the file stem.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_obj(&text, &name)
}
