//! Geometric primitives shared by every stage.

pub mod fps;
pub mod hull;
pub mod mesh;
pub mod pca;
pub mod polygon;
pub mod pose;
pub mod stable;

pub use fps::farthest_point_sample;
pub use hull::{convex_hull, ConvexHull};
pub use mesh::{load_mesh, parse_obj, TriMesh};
pub use pca::{oriented_bbox_xy, pca_xy, OrientedBox, PlanarAxes, PointCloud};
pub use pose::{rot_z, Mat3, Pose, Vec3};
pub use stable::{compute_stable_poses, CenterOfMass, StablePose, StablePoseFile};
