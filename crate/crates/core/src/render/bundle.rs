//! Overlay bundle: the reference render, one outline layer per object, and
//! the metadata a replication tool needs to line the view up.

use std::io::Cursor;
use std::path::Path;

use image::{ImageBuffer, ImageFormat, Luma, Rgb, Rgba};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::scene::{find_object, ObjectModel, Scene};

use super::camera::CameraModel;
use super::raster::{object_color, ReferenceImage};

pub const METADATA_FILE: &str = "overlay.json";
pub const COLOR_FILE: &str = "color.png";
pub const INSTANCE_FILE: &str = "instance.png";
pub const DEPTH_FILE: &str = "depth.png";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecklistEntry {
    pub index: usize,
    pub object_id: String,
    pub display_name: String,
    pub silhouette: String,
    pub visible_pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayMetadata {
    pub scene_id: String,
    pub width: usize,
    pub height: usize,
    pub camera: CameraModel,
    /// Base → camera as a 4×4 row-major matrix, for consumers without quaternion support.
    pub extrinsics_matrix: [f64; 16],
    pub table_height: f64,
    pub color_image: String,
    pub instance_image: String,
    pub depth_image: String,
    /// Depth PNG stores millimetres; 0 means no surface.
    pub depth_unit_m: f64,
    pub objects: Vec<ChecklistEntry>,
    /// Values that are configuration defaults rather than measured quantities.
    pub assumed_defaults: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayBundle {
    pub metadata: OverlayMetadata,
    /// File name → PNG bytes, in a fixed order.
    pub files: Vec<(String, Vec<u8>)>,
}

fn png<P, C>(img: &ImageBuffer<P, C>) -> Result<Vec<u8>>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn silhouette_file(index: usize) -> String {
    format!("silhouette_{index}.png")
}

/// Outline pixels of placement `index`: its instance mask minus the erosion.
pub fn silhouette(img: &ReferenceImage, index: usize) -> Mask {
    img.instance_mask(index).boundary()
}

pub fn color_png(img: &ReferenceImage) -> Result<Vec<u8>> {
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::from_raw(
        img.width as u32,
        img.height as u32,
        img.color.iter().flatten().copied().collect(),
    )
    .ok_or_else(|| Error::InvalidArgument("colour buffer size".into()))?;
    png(&buf)
}

pub fn instance_png(img: &ReferenceImage) -> Result<Vec<u8>> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(img.width as u32, img.height as u32, img.instance.clone())
            .ok_or_else(|| Error::InvalidArgument("instance buffer size".into()))?;
    png(&buf)
}

pub fn depth_png(img: &ReferenceImage) -> Result<Vec<u8>> {
    let mm: Vec<u16> = img
        .depth
        .iter()
        .map(|d| if d.is_finite() { (d * 1000.0).round().clamp(1.0, 65535.0) as u16 } else { 0 })
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(img.width as u32, img.height as u32, mm)
        .ok_or_else(|| Error::InvalidArgument("depth buffer size".into()))?;
    png(&buf)
}

fn silhouette_png(mask: &Mask, rgb: [u8; 3]) -> Result<Vec<u8>> {
    let buf: ImageBuffer<Rgba<u8>, Vec<u8>> = ImageBuffer::from_fn(mask.width as u32, mask.height as u32, |x, y| {
        if mask.get(x as usize, y as usize) {
            Rgba([rgb[0], rgb[1], rgb[2], 255])
        } else {
            Rgba([0, 0, 0, 0])
        }
    });
    png(&buf)
}

/// Reads a silhouette layer back as a mask of its opaque pixels.
pub fn decode_silhouette(bytes: &[u8]) -> Result<Mask> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_rgba8();
    let (w, h) = img.dimensions();
    Ok(Mask::from_fn(w as usize, h as usize, |x, y| img.get_pixel(x as u32, y as u32)[3] > 0))
}

pub fn decode_instance(bytes: &[u8]) -> Result<Vec<u16>> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
    Ok(img.to_luma16().into_raw())
}

/// One mask per non-zero label of an instance image, in label order.
/// Labels with no pixels are skipped.
pub fn instance_masks(bytes: &[u8]) -> Result<Vec<Mask>> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let labels = img.into_raw();
    let max = labels.iter().copied().max().unwrap_or(0);
    Ok((1..=max)
        .map(|l| Mask {
            width: w,
            height: h,
            data: labels.iter().map(|&v| v == l).collect(),
        })
        .filter(|m| m.count() > 0)
        .collect())
}

pub fn export_overlay_asset(img: &ReferenceImage, scene: &Scene, objects: &[ObjectModel]) -> Result<OverlayBundle> {
    let cam = scene.camera;
    let h = cam.extrinsics.to_homogeneous();
    let mut extrinsics_matrix = [0.0; 16];
    for r in 0..4 {
        for c in 0..4 {
            extrinsics_matrix[r * 4 + c] = h[(r, c)];
        }
    }
    let mut files = vec![
        (COLOR_FILE.to_string(), color_png(img)?),
        (INSTANCE_FILE.to_string(), instance_png(img)?),
        (DEPTH_FILE.to_string(), depth_png(img)?),
    ];
    let mut entries = Vec::with_capacity(scene.placements.len());
    for (i, p) in scene.placements.iter().enumerate() {
        let display_name = find_object(objects, &p.object_id)
            .map(|o| o.display_name.clone())
            .unwrap_or_else(|_| p.object_id.clone());
        let outline = silhouette(img, i);
        files.push((silhouette_file(i), silhouette_png(&outline, object_color(&p.object_id))?));
        entries.push(ChecklistEntry {
            index: i,
            object_id: p.object_id.clone(),
            display_name,
            silhouette: silhouette_file(i),
            visible_pixels: img.instance_mask(i).count(),
        });
    }
    let defaults = CameraModel::default();
    let mut assumed_defaults = Vec::new();
    if (cam.fx, cam.fy, cam.cx, cam.cy) == (defaults.fx, defaults.fy, defaults.cx, defaults.cy) {
        assumed_defaults.push("camera intrinsics".to_string());
    }
    if cam.extrinsics == defaults.extrinsics {
        assumed_defaults.push("camera extrinsics".to_string());
    }
    Ok(OverlayBundle {
        metadata: OverlayMetadata {
            scene_id: scene.id.clone(),
            width: img.width,
            height: img.height,
            camera: cam,
            extrinsics_matrix,
            table_height: scene.table.surface_height(),
            color_image: COLOR_FILE.into(),
            instance_image: INSTANCE_FILE.into(),
            depth_image: DEPTH_FILE.into(),
            depth_unit_m: 0.001,
            objects: entries,
            assumed_defaults,
        },
        files,
    })
}

impl OverlayBundle {
    pub fn metadata_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.metadata)?)
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = dir.join(METADATA_FILE);
        std::fs::write(&meta, self.metadata_json()?).map_err(|e| Error::io(&meta, e))?;
        for (name, bytes) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join(METADATA_FILE);
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let metadata: OverlayMetadata = serde_json::from_str(&text)?;
        let mut names = vec![
            metadata.color_image.clone(),
            metadata.instance_image.clone(),
            metadata.depth_image.clone(),
        ];
        names.extend(metadata.objects.iter().map(|o| o.silhouette.clone()));
        let files = names
            .into_iter()
            .map(|n| {
                let p = dir.join(&n);
                std::fs::read(&p).map(|b| (n, b)).map_err(|e| Error::io(&p, e))
            })
            .collect::<Result<_>>()?;
        Ok(Self { metadata, files })
    }
}
