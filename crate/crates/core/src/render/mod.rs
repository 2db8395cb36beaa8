//! Software rendering of scenes for the replication overlay.

pub mod bundle;
pub mod camera;
pub mod raster;

pub use bundle::{export_overlay_asset, OverlayBundle, OverlayMetadata};
pub use camera::{look_at, project_point, CameraModel};
pub use raster::{object_color, rasterize_scene, ReferenceImage, RenderOptions};
