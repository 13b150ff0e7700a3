//! Joint angles from skeleton frames.
//!
//! Builds a short synthetic capture of a right arm raising sideways while
//! the elbow bends, writes it as a frame CSV, reads it back and extracts the
//! seven arm angles.
//!
//! ```text
//! cargo run --example extract_angles
//! ```

use rom_boundary::dataset::{read_frames, write_extracted_angles, write_frames};
use rom_boundary::kinematics::{compose_frame, extract_sequence, KinematicChain, Quaternion, Side, ARM_DOF_NAMES};

fn main() -> rom_boundary::Result<()> {
    let chain = KinematicChain::default();
    // torso leaning 10 degrees forward; angles are relative to it
    let chest = Quaternion::from_axis_angle([0.0, 0.0, 1.0], 10.0);
    let frames: Vec<_> = (0..=10)
        .map(|k| {
            let t = k as f64 / 10.0;
            let q = [90.0 * t, 10.0, -20.0 * t, 120.0 * t, 30.0, 15.0, -5.0];
            compose_frame(t, &chain, Side::Right, chest, &q)
        })
        .collect();

    let mut csv = Vec::new();
    write_frames(&mut csv, &frames)?;
    let parsed = read_frames(csv.as_slice())?;
    let angles = extract_sequence(&parsed, &chain, Side::Right)?;

    println!("{:>5} {}", "t", ARM_DOF_NAMES.map(|n| format!("{n:>18}")).join(""));
    for a in &angles {
        let cols: String = a.q.as_slice().iter().map(|v| format!("{v:>18.3}")).collect();
        println!("{:>5.1} {cols}", a.timestamp);
    }

    let mut out = Vec::new();
    write_extracted_angles(&mut out, &angles)?;
    println!("\nangle CSV header: {}", String::from_utf8_lossy(&out).lines().next().unwrap_or(""));
    Ok(())
}
