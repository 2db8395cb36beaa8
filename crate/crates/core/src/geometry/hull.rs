//! Incremental 3D convex hull.

use std::collections::{HashMap, VecDeque};

use super::pose::Vec3;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct HullFace {
    /// Indices into [`ConvexHull::points`], counter-clockwise seen from outside.
    pub vertices: [usize; 3],
    pub normal: Vec3,
    /// Plane offset: `normal · x = offset` on the face.
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct ConvexHull {
    /// The input points, untouched. Faces index into this list.
    pub points: Vec<Vec3>,
    pub faces: Vec<HullFace>,
    /// Distance tolerance used while building, scaled to the input extent.
    pub tolerance: f64,
}

impl ConvexHull {
    /// Indices of points that are hull vertices, ascending.
    pub fn vertex_indices(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self.faces.iter().flat_map(|f| f.vertices).collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    pub fn vertices(&self) -> Vec<Vec3> {
        self.vertex_indices().into_iter().map(|i| self.points[i]).collect()
    }

    /// Index pairs `(a, b)` → face, for every directed face edge.
    pub fn edge_map(&self) -> HashMap<(usize, usize), usize> {
        let mut map = HashMap::with_capacity(self.faces.len() * 3);
        for (fi, f) in self.faces.iter().enumerate() {
            let [a, b, c] = f.vertices;
            map.insert((a, b), fi);
            map.insert((b, c), fi);
            map.insert((c, a), fi);
        }
        map
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face].vertices;
        let (a, b, c) = (self.points[a], self.points[b], self.points[c]);
        (b - a).cross(&(c - a)).norm() / 2.0
    }

    pub fn contains(&self, p: &Vec3, slack: f64) -> bool {
        self.faces.iter().all(|f| f.normal.dot(p) - f.offset <= slack)
    }
}

struct WorkFace {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
    alive: bool,
}

fn make_face(points: &[Vec3], v: [usize; 3]) -> WorkFace {
    let (a, b, c) = (points[v[0]], points[v[1]], points[v[2]]);
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    let normal = if len > 0.0 { n / len } else { n };
    WorkFace {
        v,
        normal,
        offset: normal.dot(&a),
        alive: true,
    }
}

/// Convex hull of at least four non-coplanar points.
pub fn convex_hull(points: &[Vec3]) -> Result<ConvexHull> {
    if points.len() < 4 {
        return Err(Error::Geometry(format!(
            "convex hull needs at least 4 points, got {}",
            points.len()
        )));
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let scale = (hi - lo).norm();
    if !(scale > 0.0) {
        return Err(Error::Geometry("all points coincide".into()));
    }
    let eps = 1e-10 * scale;

    // initial simplex from extreme points
    let i0 = (0..points.len())
        .min_by(|&a, &b| points[a].x.total_cmp(&points[b].x))
        .unwrap();
    let i1 = argmax(points.len(), |i| (points[i] - points[i0]).norm());
    let dir = (points[i1] - points[i0]).normalize();
    let line_dist = |i: usize| {
        let d = points[i] - points[i0];
        (d - dir * d.dot(&dir)).norm()
    };
    let i2 = argmax(points.len(), line_dist);
    if line_dist(i2) <= eps {
        return Err(Error::Geometry("points are collinear".into()));
    }
    let plane_n = (points[i1] - points[i0])
        .cross(&(points[i2] - points[i0]))
        .normalize();
    let plane_dist = |i: usize| plane_n.dot(&(points[i] - points[i0]));
    let i3 = argmax(points.len(), |i| plane_dist(i).abs());
    if plane_dist(i3).abs() <= eps {
        return Err(Error::Geometry("points are coplanar".into()));
    }

    let mut faces: Vec<WorkFace> = Vec::new();
    let simplex = [i0, i1, i2, i3];
    let inner = simplex.iter().map(|&i| points[i]).sum::<Vec3>() / 4.0;
    for tri in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        let mut f = make_face(points, tri);
        if f.normal.dot(&inner) - f.offset > 0.0 {
            f = make_face(points, [tri[0], tri[2], tri[1]]);
        }
        faces.push(f);
    }
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        insert_edges(&mut edges, f.v, fi);
    }

    let mut visible = Vec::new();
    let mut in_region: Vec<bool> = Vec::new();
    for (pi, p) in points.iter().enumerate() {
        if simplex.contains(&pi) {
            continue;
        }
        // most distant visible face seeds the region
        let mut seed = None;
        let mut best = eps;
        for (fi, f) in faces.iter().enumerate() {
            if f.alive {
                let d = f.normal.dot(p) - f.offset;
                if d > best {
                    best = d;
                    seed = Some(fi);
                }
            }
        }
        let Some(seed) = seed else { continue };

        in_region.clear();
        in_region.resize(faces.len(), false);
        visible.clear();
        let mut queue = VecDeque::from([seed]);
        in_region[seed] = true;
        while let Some(fi) = queue.pop_front() {
            visible.push(fi);
            let v = faces[fi].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                if let Some(&g) = edges.get(&(b, a)) {
                    if !in_region[g] && faces[g].normal.dot(p) - faces[g].offset > eps {
                        in_region[g] = true;
                        queue.push_back(g);
                    }
                }
            }
        }

        let mut horizon = Vec::new();
        for &fi in &visible {
            let v = faces[fi].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                match edges.get(&(b, a)) {
                    Some(&g) if in_region[g] => {}
                    _ => horizon.push((a, b)),
                }
            }
        }
        for &fi in &visible {
            let v = faces[fi].v;
            for k in 0..3 {
                edges.remove(&(v[k], v[(k + 1) % 3]));
            }
            faces[fi].alive = false;
        }
        for (a, b) in horizon {
            let f = make_face(points, [a, b, pi]);
            let fi = faces.len();
            insert_edges(&mut edges, f.v, fi);
            faces.push(f);
        }
    }

    let faces = faces
        .into_iter()
        .filter(|f| f.alive)
        .map(|f| HullFace {
            vertices: f.v,
            normal: f.normal,
            offset: f.offset,
        })
        .collect();
    Ok(ConvexHull {
        points: points.to_vec(),
        faces,
        tolerance: eps,
    })
}

fn insert_edges(edges: &mut HashMap<(usize, usize), usize>, v: [usize; 3], fi: usize) {
    edges.insert((v[0], v[1]), fi);
    edges.insert((v[1], v[2]), fi);
    edges.insert((v[2], v[0]), fi);
}

fn argmax(n: usize, key: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..n {
        let v = key(i);
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube_points() -> Vec<Vec3> {
        let mut pts = Vec::new();
        for &x in &[-0.5, 0.5] {
            for &y in &[-0.5, 0.5] {
                for &z in &[-0.5, 0.5] {
                    pts.push(Vec3::new(x, y, z));
                }
            }
        }
        pts.push(Vec3::zeros());
        pts.push(Vec3::new(0.5, 0.0, 0.0)); // on a face
        pts
    }

    #[test]
    fn cube_hull_has_twelve_triangles() {
        let h = convex_hull(&cube_points()).unwrap();
        assert_eq!(h.faces.len(), 12);
        assert_eq!(h.vertex_indices().len(), 8);
        let area: f64 = (0..h.faces.len()).map(|f| h.face_area(f)).sum();
        assert!((area - 6.0).abs() < 1e-12);
    }

    #[test]
    fn hull_is_closed_and_contains_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let pts: Vec<Vec3> = (0..200)
                .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
                .collect();
            let h = convex_hull(&pts).unwrap();
            let edges = h.edge_map();
            for &(a, b) in edges.keys() {
                assert!(edges.contains_key(&(b, a)), "open edge");
            }
            // Euler: V - E + F = 2
            let v = h.vertex_indices().len() as i64;
            let e = (edges.len() / 2) as i64;
            let f = h.faces.len() as i64;
            assert_eq!(v - e + f, 2);
            for p in &pts {
                assert!(h.contains(p, 1e-9));
            }
        }
    }

    #[test]
    fn coplanar_input_is_rejected() {
        let pts: Vec<Vec3> = (0..10).map(|i| Vec3::new(i as f64, (i * i) as f64, 0.0)).collect();
        assert!(convex_hull(&pts).is_err());
    }
}
