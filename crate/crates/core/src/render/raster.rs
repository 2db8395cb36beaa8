use crate::error::{Error, Result};
use crate::geometry::pose::Vec3;
use crate::mask::Mask;
use crate::scene::{find_object, ObjectModel, Scene};

use super::camera::{project_point, CameraModel};

/// Triangles closer than this (camera z, metres) are clipped.
pub const NEAR_PLANE: f64 = 0.01;

pub const BACKGROUND: u16 = 0;
const BACKGROUND_RGB: [u8; 3] = [24, 24, 28];
const TABLE_RGB: [u8; 3] = [150, 132, 110];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub draw_table: bool,
    /// Horizontal bands rasterised independently.
    pub bands: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            draw_table: true,
            bands: 16,
        }
    }
}

/// Colour, instance and depth buffers for one view. Instance 0 is
/// background; placement `i` is stored as `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceImage {
    pub width: usize,
    pub height: usize,
    pub color: Vec<[u8; 3]>,
    pub instance: Vec<u16>,
    /// Camera-frame z in metres; infinite where nothing was drawn.
    pub depth: Vec<f64>,
}

impl ReferenceImage {
    pub fn blank(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            color: vec![BACKGROUND_RGB; n],
            instance: vec![BACKGROUND; n],
            depth: vec![f64::INFINITY; n],
        }
    }

    /// Pixels showing placement `index`.
    pub fn instance_mask(&self, index: usize) -> Mask {
        let id = index as u16 + 1;
        Mask {
            width: self.width,
            height: self.height,
            data: self.instance.iter().map(|&v| v == id).collect(),
        }
    }

    pub fn foreground(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            data: self.instance.iter().map(|&v| v != BACKGROUND).collect(),
        }
    }
}

/// Deterministic colour for an object id (FNV-1a hash to a hue).
pub fn object_color(id: &str) -> [u8; 3] {
    let mut h: u32 = 0x811c_9dc5;
    for b in id.bytes() {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    let hue = (h % 360) as f64;
    hsv_to_rgb(hue, 0.65, 0.95)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0) % 2.0 - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match (h / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r, g, b].map(|k| ((k + m) * 255.0).round() as u8)
}

/// A camera-space triangle ready to rasterise.
#[derive(Debug, Clone, Copy)]
struct ScreenTri {
    /// Pixel coordinates and inverse depth per vertex.
    p: [[f64; 3]; 3],
    instance: u16,
    rgb: [u8; 3],
}

fn clip_near(tri: [Vec3; 3]) -> Vec<[Vec3; 3]> {
    let inside: Vec<bool> = tri.iter().map(|v| v.z >= NEAR_PLANE).collect();
    if inside.iter().all(|b| *b) {
        return vec![tri];
    }
    if inside.iter().all(|b| !*b) {
        return Vec::new();
    }
    let mut poly: Vec<Vec3> = Vec::with_capacity(4);
    for i in 0..3 {
        let (a, b) = (tri[i], tri[(i + 1) % 3]);
        let (ia, ib) = (inside[i], inside[(i + 1) % 3]);
        if ia {
            poly.push(a);
        }
        if ia != ib {
            let t = (NEAR_PLANE - a.z) / (b.z - a.z);
            poly.push(a + (b - a) * t);
        }
    }
    (1..poly.len() - 1).map(|i| [poly[0], poly[i], poly[i + 1]]).collect()
}

fn shade(rgb: [u8; 3], normal: &Vec3, view: &Vec3) -> [u8; 3] {
    let lambert = normal.normalize().dot(&view.normalize()).abs();
    let k = if lambert.is_finite() { 0.35 + 0.65 * lambert } else { 0.35 };
    rgb.map(|c| (c as f64 * k).round().min(255.0) as u8)
}

fn push_triangle(out: &mut Vec<ScreenTri>, cam: &CameraModel, tri: [Vec3; 3], instance: u16, rgb: [u8; 3]) {
    let normal = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let centroid = (tri[0] + tri[1] + tri[2]) / 3.0;
    let rgb = shade(rgb, &normal, &centroid);
    for t in clip_near(tri) {
        let mut p = [[0.0; 3]; 3];
        for k in 0..3 {
            let (u, v) = project_point(cam, &t[k]).expect("clipped to the near plane");
            p[k] = [u, v, 1.0 / t[k].z];
        }
        out.push(ScreenTri { p, instance, rgb });
    }
}

/// Camera-frame triangles of every placement, followed by the table top.
fn scene_triangles(
    scene: &Scene,
    objects: &[ObjectModel],
    cam: &CameraModel,
    opts: &RenderOptions,
) -> Result<Vec<ScreenTri>> {
    if scene.placements.len() >= u16::MAX as usize {
        return Err(Error::InvalidArgument("too many placements".into()));
    }
    let mut tris = Vec::new();
    for (i, p) in scene.placements.iter().enumerate() {
        let obj = find_object(objects, &p.object_id)
            .map_err(|_| Error::Asset(format!("no mesh for placement {i} ({})", p.object_id)))?;
        let to_cam = cam.extrinsics.compose(&p.world_pose);
        let verts: Vec<Vec3> = obj.mesh.vertices.iter().map(|v| to_cam.transform_point(v)).collect();
        let rgb = object_color(&p.object_id);
        for f in &obj.mesh.faces {
            push_triangle(&mut tris, cam, [verts[f[0]], verts[f[1]], verts[f[2]]], i as u16 + 1, rgb);
        }
    }
    if opts.draw_table {
        let t = &scene.table;
        let (hx, hy, z) = (t.size[0] / 2.0, t.size[1] / 2.0, t.surface_height());
        let c = [
            Vec3::new(t.offset[0] - hx, t.offset[1] - hy, z),
            Vec3::new(t.offset[0] + hx, t.offset[1] - hy, z),
            Vec3::new(t.offset[0] + hx, t.offset[1] + hy, z),
            Vec3::new(t.offset[0] - hx, t.offset[1] + hy, z),
        ]
        .map(|v| cam.to_camera(&v));
        push_triangle(&mut tris, cam, [c[0], c[1], c[2]], BACKGROUND, TABLE_RGB);
        push_triangle(&mut tris, cam, [c[0], c[2], c[3]], BACKGROUND, TABLE_RGB);
    }
    Ok(tris)
}

/// Top-left fill rule for an edge of a positively oriented triangle.
fn is_top_left(dx: f64, dy: f64) -> bool {
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

fn raster_band(tris: &[ScreenTri], width: usize, y0: usize, y1: usize) -> ReferenceImage {
    let mut img = ReferenceImage::blank(width, y1 - y0);
    for t in tris {
        let mut p = t.p;
        let edge = |a: &[f64; 3], b: &[f64; 3], x: f64, y: f64| (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
        let mut area = edge(&p[0], &p[1], p[2][0], p[2][1]);
        if area == 0.0 || !area.is_finite() {
            continue;
        }
        if area < 0.0 {
            p.swap(1, 2);
            area = -area;
        }
        let min_x = p.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
        let max_x = p.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
        let min_y = p.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min);
        let max_y = p.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max);
        // pixel (x, y) covers centre (x + 0.5, y + 0.5)
        let xs = ((min_x - 0.5).ceil().max(0.0)) as usize;
        let xe = ((max_x - 0.5).floor().min(width as f64 - 1.0)) as isize;
        let ys = ((min_y - 0.5).ceil().max(y0 as f64)) as usize;
        let ye = ((max_y - 0.5).floor().min(y1 as f64 - 1.0)) as isize;
        if xe < xs as isize || ye < ys as isize {
            continue;
        }
        let edges = [(1, 2), (2, 0), (0, 1)];
        let bias: [bool; 3] = edges.map(|(a, b)| is_top_left(p[b][0] - p[a][0], p[b][1] - p[a][1]));
        for y in ys..=ye as usize {
            let py = y as f64 + 0.5;
            for x in xs..=xe as usize {
                let px = x as f64 + 0.5;
                let mut w = [0.0; 3];
                let mut inside = true;
                for (k, (a, b)) in edges.iter().enumerate() {
                    w[k] = edge(&p[*a], &p[*b], px, py);
                    if !(w[k] > 0.0 || (w[k] == 0.0 && bias[k])) {
                        inside = false;
                        break;
                    }
                }
                if !inside {
                    continue;
                }
                let inv_z = (w[0] * p[0][2] + w[1] * p[1][2] + w[2] * p[2][2]) / area;
                let z = 1.0 / inv_z;
                let i = (y - y0) * width + x;
                if z < img.depth[i] {
                    img.depth[i] = z;
                    img.instance[i] = t.instance;
                    img.color[i] = t.rgb;
                }
            }
        }
    }
    img
}

/// Z-buffered rendering of every placement. Ties in depth keep the earlier
/// triangle, so the result is independent of the band split.
pub fn rasterize_scene(
    scene: &Scene,
    objects: &[ObjectModel],
    cam: &CameraModel,
    opts: &RenderOptions,
) -> Result<ReferenceImage> {
    cam.validate()?;
    let tris = scene_triangles(scene, objects, cam, opts)?;
    let (w, h) = (cam.width as usize, cam.height as usize);
    let bands = opts.bands.clamp(1, h.max(1));
    let edges: Vec<(usize, usize)> = (0..bands).map(|b| (b * h / bands, (b + 1) * h / bands)).collect();
    let parts = crate::par::map(&edges, true, |&(y0, y1)| raster_band(&tris, w, y0, y1));
    let mut img = ReferenceImage::blank(w, 0);
    img.height = h;
    for part in parts {
        img.color.extend(part.color);
        img.instance.extend(part.instance);
        img.depth.extend(part.depth);
    }
    Ok(img)
}
