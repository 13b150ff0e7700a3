//! Upper-body kinematic chain and joint-angle extraction.
//!
//! Each arm is modelled as `hip → chest → upper arm → forearm → hand`. The
//! three joints are decomposed with the ZXY Euler sequence and mapped onto
//! the seven DoFs as follows:
//!
//! | q  | DoF                   | joint (proximal → distal) | ZXY angle | right | left |
//! |----|-----------------------|---------------------------|-----------|-------|------|
//! | q1 | shoulder abd/add      | chest → upper arm         | x         | +     | −    |
//! | q2 | shoulder flex/ext     | chest → upper arm         | z         | +     | +    |
//! | q3 | shoulder rotation     | chest → upper arm         | y         | +     | −    |
//! | q4 | elbow flex/ext        | upper arm → forearm       | z         | +     | +    |
//! | q5 | elbow sup/pron        | upper arm → forearm       | y         | +     | −    |
//! | q6 | wrist flex/ext        | forearm → hand            | z         | +     | +    |
//! | q7 | wrist deviation       | forearm → hand            | x         | +     | −    |
//!
//! Left-side signs mirror the right side across the sagittal plane, so a
//! given anatomical motion has the same sign on both arms. Bone frames are
//! used as exported; a per-joint zero-pose offset can be configured when the
//! exporter's reference pose differs from the anatomical zero pose.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::joint::{JointVector, ARM_DOF};
use super::quaternion::{hemisphere_align, Quaternion};
use super::rotation::{relative_rotation, rotmat_to_euler_zxy_with_hint, RotationMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            other => Err(Error::InvalidInput(format!("unknown side `{other}`"))),
        }
    }
}

/// Global pose of one bone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BonePose {
    /// Meters, global frame.
    pub position: [f64; 3],
    pub orientation: Quaternion,
}

/// All bone poses captured at one instant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SkeletonFrame {
    pub timestamp: f64,
    pub bones: BTreeMap<String, BonePose>,
}

impl SkeletonFrame {
    pub fn new(timestamp: f64) -> Self {
        Self {
            timestamp,
            bones: BTreeMap::new(),
        }
    }

    pub fn with_bone(mut self, name: impl Into<String>, pose: BonePose) -> Self {
        self.bones.insert(name.into(), pose);
        self
    }

    pub fn bone(&self, name: &str) -> Result<&BonePose> {
        self.bones
            .get(name)
            .ok_or_else(|| Error::MissingBone(name.to_string()))
    }
}

/// ZXY offsets (degrees) of each joint's relative rotation at the zero pose.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ZeroPose {
    #[serde(default)]
    pub shoulder: [f64; 3],
    #[serde(default)]
    pub elbow: [f64; 3],
    #[serde(default)]
    pub wrist: [f64; 3],
}

/// Bone names for one arm, ordered from the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArmChainRepr", into = "ArmChainRepr")]
pub struct ArmChain {
    pub hip: String,
    pub chest: String,
    pub upper_arm: String,
    pub forearm: String,
    pub hand: String,
    pub zero_pose: ZeroPose,
}

#[derive(Serialize, Deserialize)]
struct ArmChainRepr {
    links: Vec<(String, Option<String>)>,
    #[serde(default)]
    zero_pose: ZeroPose,
}

impl TryFrom<ArmChainRepr> for ArmChain {
    type Error = Error;

    fn try_from(repr: ArmChainRepr) -> Result<Self> {
        let mut chain = ArmChain::from_links(&repr.links)?;
        chain.zero_pose = repr.zero_pose;
        Ok(chain)
    }
}

impl From<ArmChain> for ArmChainRepr {
    fn from(chain: ArmChain) -> Self {
        ArmChainRepr {
            links: chain.links(),
            zero_pose: chain.zero_pose,
        }
    }
}

impl ArmChain {
    /// Builds an arm from `(bone, parent)` links.
    ///
    /// The links must form a single path of five bones starting at a root
    /// (`parent = None`), with each parent listed before its child.
    pub fn from_links(links: &[(String, Option<String>)]) -> Result<Self> {
        if links.len() != 5 {
            return Err(Error::InvalidInput(format!(
                "an arm chain needs 5 bones (hip, chest, upper arm, forearm, hand), got {}",
                links.len()
            )));
        }
        let mut seen = HashSet::new();
        for (k, (bone, parent)) in links.iter().enumerate() {
            if !seen.insert(bone.as_str()) {
                return Err(Error::InvalidInput(format!("bone `{bone}` listed twice")));
            }
            let expected = if k == 0 { None } else { Some(&links[k - 1].0) };
            if parent.as_ref() != expected {
                return Err(Error::InvalidInput(format!(
                    "bone `{bone}` must have parent {:?} to keep the chain ordered and acyclic, found {:?}",
                    expected, parent
                )));
            }
        }
        Ok(Self {
            hip: links[0].0.clone(),
            chest: links[1].0.clone(),
            upper_arm: links[2].0.clone(),
            forearm: links[3].0.clone(),
            hand: links[4].0.clone(),
            zero_pose: ZeroPose::default(),
        })
    }

    pub fn links(&self) -> Vec<(String, Option<String>)> {
        let order = [&self.hip, &self.chest, &self.upper_arm, &self.forearm, &self.hand];
        order
            .iter()
            .enumerate()
            .map(|(k, b)| ((*b).clone(), (k > 0).then(|| order[k - 1].clone())))
            .collect()
    }

    pub fn bone_names(&self) -> [&str; 5] {
        [&self.hip, &self.chest, &self.upper_arm, &self.forearm, &self.hand]
    }
}

/// Chains for both arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicChain {
    pub left: ArmChain,
    pub right: ArmChain,
}

impl Default for KinematicChain {
    /// Bone names of a standard upper-body skeleton export.
    fn default() -> Self {
        let arm = |prefix: &str| ArmChain {
            hip: "Hip".into(),
            chest: "Chest".into(),
            upper_arm: format!("{prefix}UArm"),
            forearm: format!("{prefix}FArm"),
            hand: format!("{prefix}Hand"),
            zero_pose: ZeroPose::default(),
        };
        Self {
            left: arm("L"),
            right: arm("R"),
        }
    }
}

impl KinematicChain {
    pub fn arm(&self, side: Side) -> &ArmChain {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// All bone names used by either arm, deduplicated.
    pub fn bone_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for arm in [&self.left, &self.right] {
            for b in arm.bone_names() {
                if !names.iter().any(|n| n == b) {
                    names.push(b.to_string());
                }
            }
        }
        names
    }
}

/// Joint angles of one frame plus per-joint gimbal flags
/// (`[shoulder, elbow, wrist]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedAngles {
    pub timestamp: f64,
    pub q: JointVector,
    pub gimbal: [bool; 3],
}

impl ExtractedAngles {
    pub fn any_gimbal(&self) -> bool {
        self.gimbal.iter().any(|&g| g)
    }
}

/// Stateful extractor that carries the previous frame's `y` angles to
/// resolve gimbal lock.
#[derive(Debug, Clone)]
pub struct JointAngleExtractor<'a> {
    arm: &'a ArmChain,
    side: Side,
    previous_y: Option<[f64; 3]>,
}

impl<'a> JointAngleExtractor<'a> {
    pub fn new(chain: &'a KinematicChain, side: Side) -> Self {
        Self {
            arm: chain.arm(side),
            side,
            previous_y: None,
        }
    }

    pub fn extract(&mut self, frame: &SkeletonFrame) -> Result<ExtractedAngles> {
        let arm = self.arm;
        let orientation = |name: &str| -> Result<RotationMatrix> {
            frame.bone(name)?.orientation.to_rotation_matrix()
        };
        // The hip is the chain root; it must be present even though no angle
        // is measured against it.
        frame.bone(&arm.hip)?;
        let chest = orientation(&arm.chest)?;
        let upper = orientation(&arm.upper_arm)?;
        let fore = orientation(&arm.forearm)?;
        let hand = orientation(&arm.hand)?;

        let joints = [
            (chest, upper, arm.zero_pose.shoulder),
            (upper, fore, arm.zero_pose.elbow),
            (fore, hand, arm.zero_pose.wrist),
        ];
        let mut euler = [[0.0; 3]; 3];
        let mut gimbal = [false; 3];
        for (k, (prox, dist, zero)) in joints.iter().enumerate() {
            let reference = RotationMatrix::compose_zxy(zero[0], zero[1], zero[2]);
            let rel = reference.transpose().mul(&relative_rotation(prox, dist)?);
            let hint = self.previous_y.map(|y| y[k]);
            let e = rotmat_to_euler_zxy_with_hint(&rel, hint)?;
            euler[k] = [e.z, e.x, e.y];
            gimbal[k] = e.gimbal;
        }
        self.previous_y = Some([euler[0][2], euler[1][2], euler[2][2]]);

        let [sh, el, wr] = euler;
        let mirror = match self.side {
            Side::Right => 1.0,
            Side::Left => -1.0,
        };
        let q: [f64; ARM_DOF] = [
            mirror * sh[1],
            sh[0],
            mirror * sh[2],
            el[0],
            mirror * el[2],
            wr[0],
            mirror * wr[1],
        ];
        Ok(ExtractedAngles {
            timestamp: frame.timestamp,
            q: JointVector::new(q.to_vec())?,
            gimbal,
        })
    }
}

/// Extracts the seven arm angles of one frame without gimbal history.
pub fn extract_joint_angles(frame: &SkeletonFrame, chain: &KinematicChain, side: Side) -> Result<ExtractedAngles> {
    JointAngleExtractor::new(chain, side).extract(frame)
}

/// Extracts a whole capture: hemisphere-aligns each chain bone over time,
/// then extracts frame by frame carrying gimbal history.
pub fn extract_sequence(frames: &[SkeletonFrame], chain: &KinematicChain, side: Side) -> Result<Vec<ExtractedAngles>> {
    let arm = chain.arm(side);
    let mut aligned: Vec<SkeletonFrame> = frames.to_vec();
    for bone in arm.bone_names() {
        let series = frames
            .iter()
            .map(|f| f.bone(bone).map(|p| p.orientation))
            .collect::<Result<Vec<_>>>()?;
        for (frame, q) in aligned.iter_mut().zip(hemisphere_align(&series)?) {
            if let Some(pose) = frame.bones.get_mut(bone) {
                pose.orientation = q;
            }
        }
    }
    let mut extractor = JointAngleExtractor::new(chain, side);
    aligned.iter().map(|f| extractor.extract(f)).collect()
}

/// Builds a frame whose extracted angles equal `q` (degrees, `q1..q7`).
///
/// `chest` is the global orientation of the thorax; positions are filled
/// with a nominal arm layout. This is the forward counterpart of
/// [`extract_joint_angles`] and lets tests and examples synthesize captures.
pub fn compose_frame(
    timestamp: f64,
    chain: &KinematicChain,
    side: Side,
    chest: Quaternion,
    q: &[f64; ARM_DOF],
) -> SkeletonFrame {
    let arm = chain.arm(side);
    let mirror = match side {
        Side::Right => 1.0,
        Side::Left => -1.0,
    };
    let z = &arm.zero_pose;
    let joint = |zero: [f64; 3], zxy: [f64; 3]| {
        RotationMatrix::compose_zxy(zero[0], zero[1], zero[2])
            .mul(&RotationMatrix::compose_zxy(zxy[0], zxy[1], zxy[2]))
    };
    let shoulder = joint(z.shoulder, [q[1], mirror * q[0], mirror * q[2]]);
    let elbow = joint(z.elbow, [q[3], 0.0, mirror * q[4]]);
    let wrist = joint(z.wrist, [q[5], mirror * q[6], 0.0]);

    let chest_r = chest
        .to_rotation_matrix()
        .expect("chest orientation must be a unit quaternion");
    let upper = chest_r.mul(&shoulder);
    let fore = upper.mul(&elbow);
    let hand = fore.mul(&wrist);

    let lateral = mirror * 0.2;
    let down = |r: &RotationMatrix, len: f64| {
        let v = r.apply([0.0, -len, 0.0]);
        [v[0], v[1], v[2]]
    };
    let add = |a: [f64; 3], b: [f64; 3]| [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
    let hip_p = [0.0, 1.0, 0.0];
    let chest_p = add(hip_p, chest_r.apply([0.0, 0.4, 0.0]));
    let shoulder_p = add(chest_p, chest_r.apply([0.0, 0.0, lateral]));
    let elbow_p = add(shoulder_p, down(&upper, 0.3));
    let wrist_p = add(elbow_p, down(&fore, 0.25));

    let pose = |position: [f64; 3], r: &RotationMatrix| BonePose {
        position,
        orientation: quaternion_from_matrix(r),
    };
    SkeletonFrame::new(timestamp)
        .with_bone(arm.hip.clone(), BonePose { position: hip_p, orientation: chest })
        .with_bone(arm.chest.clone(), pose(chest_p, &chest_r))
        .with_bone(arm.upper_arm.clone(), pose(shoulder_p, &upper))
        .with_bone(arm.forearm.clone(), pose(elbow_p, &fore))
        .with_bone(arm.hand.clone(), pose(wrist_p, &hand))
}

/// Unit quaternion (with `w ≥ 0`) of a proper rotation matrix.
pub fn quaternion_from_matrix(r: &RotationMatrix) -> Quaternion {
    let m = r.rows();
    let trace = m[0][0] + m[1][1] + m[2][2];
    let q = if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        Quaternion::new(0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s)
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
        Quaternion::new((m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s)
    } else if m[1][1] > m[2][2] {
        let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
        Quaternion::new((m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s)
    } else {
        let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
        Quaternion::new((m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s)
    };
    let q = q.normalized();
    if q.w < 0.0 {
        q.negated()
    } else {
        q
    }
}

#[cfg(test)]
fn wrapped_diff(a: f64, b: f64) -> f64 {
    super::rotation::wrap_degrees(a - b).abs()
}
