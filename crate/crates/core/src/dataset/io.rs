//! CSV readers and writers for skeleton frames and joint angles.
//!
//! Frame CSV: a `timestamp` column followed by seven columns per bone named
//! `<bone>.qw,<bone>.qx,<bone>.qy,<bone>.qz,<bone>.px,<bone>.py,<bone>.pz`.
//!
//! Angle CSV: a `timestamp` column followed by one column per angle
//! (degrees). The optional trailing columns `gimbal` (bit mask: 1 shoulder,
//! 2 elbow, 4 wrist) and `provenance` are recognised and are not angles.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Provenance, RomDataset};
use crate::error::{Error, Result};
use crate::kinematics::{BonePose, ExtractedAngles, JointVector, Quaternion, Side, SkeletonFrame, ARM_DOF_NAMES};

const TIMESTAMP: &str = "timestamp";
const GIMBAL: &str = "gimbal";
const PROVENANCE: &str = "provenance";
const BONE_FIELDS: [&str; 7] = ["qw", "qx", "qy", "qz", "px", "py", "pz"];

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::from(e).in_file(path))
}

fn header_error(message: impl Into<String>) -> Error {
    Error::schema("header", message)
}

fn parse_number(raw: &str, line: u64, column: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| {
        Error::schema(format!("line {line}, column `{column}`"), format!("`{raw}` is not a number"))
    })?;
    if !v.is_finite() {
        return Err(Error::schema(
            format!("line {line}, column `{column}`"),
            format!("non-finite value `{raw}`"),
        ));
    }
    Ok(v)
}

fn record_line(record: &csv::StringRecord, fallback: u64) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(fallback)
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader)
}

/// Reads an angle CSV. Rows without a `provenance` column get `provenance`.
pub fn read_angles<R: Read>(reader: R, provenance: Provenance) -> Result<RomDataset> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some(TIMESTAMP) {
        return Err(header_error(format!("missing column `{TIMESTAMP}` (must be first)")));
    }
    let mut angle_cols = Vec::new();
    let mut provenance_col = None;
    for (k, name) in headers.iter().enumerate().skip(1) {
        match name {
            GIMBAL => {}
            PROVENANCE => provenance_col = Some(k),
            "" => return Err(header_error(format!("column {} has an empty name", k + 1))),
            _ => angle_cols.push(k),
        }
    }
    if angle_cols.is_empty() {
        return Err(header_error("no angle columns"));
    }
    let mut ds = RomDataset::empty(angle_cols.len());
    ds.set_names(angle_cols.iter().map(|&k| headers[k].to_string()).collect());
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::schema(format!("data row {}", row + 1), e.to_string()))?;
        let line = record_line(&record, row as u64 + 2);
        if record.len() != headers.len() {
            return Err(Error::schema(
                format!("line {line}"),
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let t = parse_number(&record[0], line, TIMESTAMP)?;
        let angles = angle_cols
            .iter()
            .map(|&k| parse_number(&record[k], line, &headers[k]))
            .collect::<Result<Vec<_>>>()?;
        let p = match provenance_col {
            Some(k) => record[k]
                .parse()
                .map_err(|e: Error| Error::schema(format!("line {line}, column `{PROVENANCE}`"), e.to_string()))?,
            None => provenance,
        };
        ds.push(JointVector::new(angles)?, p, t)?;
    }
    Ok(ds)
}

pub fn load_angles(path: impl AsRef<Path>, provenance: Provenance) -> Result<RomDataset> {
    let path = path.as_ref();
    read_angles(open(path)?, provenance).map_err(|e| e.in_file(path))
}

/// Writes an angle CSV including a `provenance` column.
pub fn write_angles<W: Write>(writer: W, data: &RomDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![TIMESTAMP.to_string()];
    header.extend(data.names.iter().cloned());
    header.push(PROVENANCE.to_string());
    w.write_record(&header)?;
    for ((s, p), t) in data.samples().iter().zip(data.provenance()).zip(data.timestamps()) {
        let mut rec = vec![t.to_string()];
        rec.extend(s.as_slice().iter().map(f64::to_string));
        rec.push(p.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_angles(path: impl AsRef<Path>, data: &RomDataset) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    write_angles(f, data).map_err(|e| e.in_file(path))
}

/// Writes extracted arm angles with the gimbal bit-mask column.
pub fn write_extracted_angles<W: Write>(writer: W, angles: &[ExtractedAngles]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![TIMESTAMP];
    header.extend(ARM_DOF_NAMES);
    header.push(GIMBAL);
    w.write_record(&header)?;
    for a in angles {
        let mask: u8 = a
            .gimbal
            .iter()
            .enumerate()
            .map(|(k, &g)| if g { 1 << k } else { 0 })
            .sum();
        let mut rec = vec![a.timestamp.to_string()];
        rec.extend(a.q.as_slice().iter().map(f64::to_string));
        rec.push(mask.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a frame CSV.
pub fn read_frames<R: Read>(reader: R) -> Result<Vec<SkeletonFrame>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some(TIMESTAMP) {
        return Err(header_error(format!("missing column `{TIMESTAMP}` (must be first)")));
    }
    // bone name -> column index for each of the seven fields
    let mut bones: Vec<(String, [Option<usize>; 7])> = Vec::new();
    for (k, name) in headers.iter().enumerate().skip(1) {
        let (bone, field) = name
            .rsplit_once('.')
            .ok_or_else(|| header_error(format!("column `{name}` is not of the form <bone>.<field>")))?;
        let f = BONE_FIELDS
            .iter()
            .position(|&x| x == field)
            .ok_or_else(|| header_error(format!("column `{name}` has unknown field `{field}`")))?;
        let slot = match bones.iter().position(|(b, _)| b == bone) {
            Some(i) => i,
            None => {
                bones.push((bone.to_string(), [None; 7]));
                bones.len() - 1
            }
        };
        if bones[slot].1[f].replace(k).is_some() {
            return Err(header_error(format!("duplicate column `{name}`")));
        }
    }
    let mut columns = Vec::with_capacity(bones.len());
    for (bone, fields) in &bones {
        let mut cols = [0usize; 7];
        for (f, c) in fields.iter().enumerate() {
            cols[f] = c.ok_or_else(|| header_error(format!("missing column `{bone}.{}`", BONE_FIELDS[f])))?;
        }
        columns.push((bone.clone(), cols));
    }

    let mut frames = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::schema(format!("data row {}", row + 1), e.to_string()))?;
        let line = record_line(&record, row as u64 + 2);
        if record.len() != headers.len() {
            return Err(Error::schema(
                format!("line {line}"),
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let mut frame = SkeletonFrame::new(parse_number(&record[0], line, TIMESTAMP)?);
        for (bone, cols) in &columns {
            let mut v = [0.0; 7];
            for (f, &c) in cols.iter().enumerate() {
                v[f] = parse_number(&record[c], line, &headers[c])?;
            }
            frame.bones.insert(
                bone.clone(),
                BonePose {
                    orientation: Quaternion::new(v[0], v[1], v[2], v[3]),
                    position: [v[4], v[5], v[6]],
                },
            );
        }
        frames.push(frame);
    }
    Ok(frames)
}

pub fn load_frames(path: impl AsRef<Path>) -> Result<Vec<SkeletonFrame>> {
    let path = path.as_ref();
    read_frames(open(path)?).map_err(|e| e.in_file(path))
}

/// Writes frames; bone columns follow the first frame's (sorted) bone order.
pub fn write_frames<W: Write>(writer: W, frames: &[SkeletonFrame]) -> Result<()> {
    let bones: Vec<String> = frames.first().map(|f| f.bones.keys().cloned().collect()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![TIMESTAMP.to_string()];
    for b in &bones {
        header.extend(BONE_FIELDS.iter().map(|f| format!("{b}.{f}")));
    }
    w.write_record(&header)?;
    for frame in frames {
        let mut rec = vec![frame.timestamp.to_string()];
        for b in &bones {
            let p = frame.bone(b)?;
            let o = p.orientation;
            rec.extend(
                [o.w, o.x, o.y, o.z, p.position[0], p.position[1], p.position[2]]
                    .iter()
                    .map(f64::to_string),
            );
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_frames(path: impl AsRef<Path>, frames: &[SkeletonFrame]) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    write_frames(f, frames).map_err(|e| e.in_file(path))
}

pub const MANIFEST_VERSION: u32 = 1;

/// JSON description of the files making up one arm's dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    #[serde(default)]
    pub subject: Option<String>,
    #[serde(default)]
    pub arm: Option<Side>,
    pub sources: Vec<ManifestSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSource {
    /// Angle CSV, relative to the manifest's directory.
    pub path: PathBuf,
    pub provenance: Provenance,
}

/// Loads every source of a manifest and concatenates them in order.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<RomDataset> {
    let path = path.as_ref();
    let manifest: DatasetManifest =
        serde_json::from_reader(open(path)?).map_err(|e| Error::from(e).in_file(path))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::schema(
            "version",
            format!("unsupported manifest version {} (expected {MANIFEST_VERSION})", manifest.version),
        )
        .in_file(path));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut out: Option<RomDataset> = None;
    for src in &manifest.sources {
        let part = load_angles(base.join(&src.path), src.provenance)?;
        out = Some(match out {
            None => part,
            Some(acc) => super::assemble(&acc, &part)?,
        });
    }
    let mut ds = out.ok_or_else(|| Error::schema("sources", "manifest lists no sources").in_file(path))?;
    ds.subject = manifest.subject;
    ds.arm = manifest.arm;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{compose_frame, KinematicChain};
    use proptest::prelude::*;

    #[test]
    fn three_rows() {
        let text = "timestamp,a,b\n0,1,2\n0.01,3,4\n0.02,5,-6\n";
        let ds = read_angles(text.as_bytes(), Provenance::Clinical).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.names, vec!["a", "b"]);
        assert_eq!(ds.samples()[2].as_slice(), &[5.0, -6.0]);
        assert_eq!(ds.timestamps(), &[0.0, 0.01, 0.02]);
    }

    #[test]
    fn missing_timestamp_column() {
        let err = read_angles("a,b\n1,2\n".as_bytes(), Provenance::Clinical).unwrap_err();
        assert!(err.to_string().contains("`timestamp`"), "{err}");
    }

    #[test]
    fn missing_bone_field_column() {
        let text = "timestamp,Hip.qw,Hip.qx,Hip.qy,Hip.px,Hip.py,Hip.pz\n0,1,0,0,0,0,0\n";
        let err = read_frames(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("Hip.qz"), "{err}");
    }

    #[test]
    fn non_finite_cites_row() {
        let text = "timestamp,a\n0,1\n1,NaN\n";
        let err = read_angles(text.as_bytes(), Provenance::Clinical).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("`a`"), "{msg}");
        let text = "timestamp,a\n0,inf\n";
        assert!(read_angles(text.as_bytes(), Provenance::Clinical).is_err());
    }

    #[test]
    fn short_row() {
        let err = read_angles("timestamp,a,b\n0,1\n".as_bytes(), Provenance::Clinical).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }), "{err}");
    }

    #[test]
    fn gimbal_and_provenance_columns() {
        let text = "timestamp,a,gimbal,provenance\n0,1,0,clinical\n1,2,1,exploration\n";
        let ds = read_angles(text.as_bytes(), Provenance::Test).unwrap();
        assert_eq!(ds.dim(), 1);
        assert_eq!(ds.provenance(), &[Provenance::Clinical, Provenance::Exploration]);
    }

    #[test]
    fn frames_round_trip() {
        let chain = KinematicChain::default();
        let frames: Vec<SkeletonFrame> = (0..4)
            .map(|t| {
                compose_frame(
                    t as f64 * 0.01,
                    &chain,
                    crate::kinematics::Side::Right,
                    Quaternion::IDENTITY,
                    &[t as f64 * 10.0, 5.0, -3.0, 40.0, 1.0, 2.0, 3.0],
                )
            })
            .collect();
        let mut buf = Vec::new();
        write_frames(&mut buf, &frames).unwrap();
        let back = read_frames(buf.as_slice()).unwrap();
        assert_eq!(back, frames);
    }

    #[test]
    fn manifest_joins_sources() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("c.csv"), "timestamp,a\n0,1\n1,2\n").unwrap();
        std::fs::write(dir.path().join("e.csv"), "timestamp,a\n0,3\n").unwrap();
        let manifest = DatasetManifest {
            version: MANIFEST_VERSION,
            subject: Some("s1".into()),
            arm: Some(Side::Left),
            sources: vec![
                ManifestSource { path: "c.csv".into(), provenance: Provenance::Clinical },
                ManifestSource { path: "e.csv".into(), provenance: Provenance::Exploration },
            ],
        };
        let mpath = dir.path().join("m.json");
        std::fs::write(&mpath, serde_json::to_string(&manifest).unwrap()).unwrap();
        let ds = load_manifest(&mpath).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.count(Provenance::Clinical), 2);
        assert_eq!(ds.arm, Some(Side::Left));
    }

    proptest! {
        #[test]
        fn angles_round_trip(rows in proptest::collection::vec(proptest::collection::vec(-179.99f64..180.0, 2), 1..30)) {
            let ds = RomDataset::from_rows(&rows, Provenance::Exploration).unwrap();
            let mut buf = Vec::new();
            write_angles(&mut buf, &ds).unwrap();
            let back = read_angles(buf.as_slice(), Provenance::Test).unwrap();
            prop_assert_eq!(back.samples(), ds.samples());
            prop_assert_eq!(back.provenance(), ds.provenance());
            prop_assert_eq!(back.timestamps(), ds.timestamps());
        }
    }
}
