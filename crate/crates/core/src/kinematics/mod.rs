//! Skeleton frames to biomechanical joint angles.
//!
//! Global bone quaternions are converted to rotation matrices, turned into
//! proximal-to-distal relative rotations and decomposed with the ZXY Euler
//! sequence. See [`chain`] for the DoF table.

pub mod chain;
mod joint;
mod quaternion;
mod rotation;

pub use chain::{
    compose_frame, extract_joint_angles, extract_sequence, quaternion_from_matrix, ArmChain, BonePose,
    ExtractedAngles, JointAngleExtractor, KinematicChain, Side, SkeletonFrame, ZeroPose,
};
pub use joint::{JointVector, ARM_DOF, ARM_DOF_NAMES};
pub(crate) use joint::squared_distance;
pub use quaternion::{hemisphere_align, Quaternion, UNIT_TOLERANCE};
pub use rotation::{
    gimbal_threshold, relative_rotation, rotmat_to_euler_zxy, rotmat_to_euler_zxy_with_hint, wrap_degrees,
    EulerZxy, RotationMatrix, ORTHONORMAL_TOLERANCE,
};

/// Rotation matrix of a unit quaternion.
pub fn quat_to_rotmat(q: &Quaternion) -> crate::Result<RotationMatrix> {
    q.to_rotation_matrix()
}
