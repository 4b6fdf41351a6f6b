//! Geometry foundation: meshes, rigid transforms, the pinhole camera, 2D boxes,
//! and the parametric multirotor generator.
//!
//! Conventions are fixed crate-wide: right-handed, Y up, cameras look along −Z,
//! and pixel `(i, j)` covers the continuous square `[i, i+1) × [j, j+1)`.

mod bbox;
mod camera;
mod mesh;
mod obj;
mod transform;
mod uav;

pub use bbox::{bbox_of_points, BBox2D, BBoxError};
pub use camera::{project_point, Camera, CameraError, Projection, Ray};
pub use mesh::{Mesh, MeshError};
pub use obj::{load_obj, parse_obj, write_obj, ObjError};
pub use transform::{look_at, RigidTransform, TransformError};
pub use uav::{generate_uav_mesh, UavError, UavParams};
