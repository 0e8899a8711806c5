//! Dataset files must be readable by an independent HDF5/JSON stack. The
//! cross-check runs h5py in a subprocess and compares SHA-256 digests of the
//! raw array payloads.

use ndarray::{Array1, Array3};
use sha2::{Digest, Sha256};
use sphkit::dataio::{write_split, Trajectory};

fn payload_digests(traj: &Trajectory) -> (String, String) {
    let mut pos_hasher = Sha256::new();
    for v in traj.positions.iter() {
        pos_hasher.update(v.to_le_bytes());
    }
    let mut type_hasher = Sha256::new();
    for v in traj.particle_types.iter() {
        type_hasher.update(v.to_le_bytes());
    }
    (
        format!("{:x}", pos_hasher.finalize()),
        format!("{:x}", type_hasher.finalize()),
    )
}

#[test]
fn h5py_reads_split_files_bit_exactly() {
    let python = which_python();
    let Some(python) = python else {
        panic!("python3 with h5py is expected in this environment");
    };

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.h5");
    let t = 7;
    let n = 23;
    let positions = Array3::from_shape_fn((t, n, 2), |(a, b, c)| {
        (a as f32 * 0.25 + b as f32) * (c as f32 + 0.5)
    });
    let types = Array1::from_iter((0..n).map(|i| (i % 3) as i64));
    let traj = Trajectory::new(positions, types, 0.04);
    write_split(std::slice::from_ref(&traj), &path).unwrap();

    let (pos_digest, type_digest) = payload_digests(&traj);

    let script = format!(
        r#"
import h5py, hashlib, sys
f = h5py.File({path:?}, 'r')
keys = sorted(f.keys())
assert keys == ['00000'], keys
pos = f['00000']['position']
typ = f['00000']['particle_type']
assert pos.dtype == 'float32', pos.dtype
assert typ.dtype == 'int64', typ.dtype
assert pos.shape == ({t}, {n}, 2), pos.shape
print('pos', hashlib.sha256(pos[...].tobytes()).hexdigest())
print('typ', hashlib.sha256(typ[...].tobytes()).hexdigest())
"#,
        path = path.display().to_string(),
        t = t,
        n = n,
    );
    let output = std::process::Command::new(python)
        .arg("-c")
        .arg(&script)
        .output()
        .expect("run python");
    assert!(
        output.status.success(),
        "h5py reader failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    let mut lines = stdout.lines();
    let pos_line = lines.next().unwrap();
    let typ_line = lines.next().unwrap();
    assert_eq!(pos_line, format!("pos {pos_digest}"));
    assert_eq!(typ_line, format!("typ {type_digest}"));
}

#[test]
fn metadata_json_parses_with_plain_json_readers() {
    let spec = sphkit::cases::case_spec(sphkit::cases::CaseId::Rpf2d);
    let meta = sphkit::dataio::DatasetMetadata::from_case(&spec, 3200, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = meta.write(dir.path()).unwrap();
    // independent JSON parse (serde only for writing here; python checks too)
    let text = std::fs::read_to_string(&path).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["case"], "rpf2d");
    assert_eq!(value["num_particles"], 3200);
    assert_eq!(value["frame_dt"], 0.04);
    assert_eq!(value["splits"]["mode"], "by_frames");
    assert_eq!(value["solver_provenance"]["kernel"], "quintic_spline");

    if let Some(python) = which_python() {
        let script = format!(
            "import json; m = json.load(open({:?})); print(m['case'], m['p_bg'])",
            path.display().to_string()
        );
        let output = std::process::Command::new(python)
            .arg("-c")
            .arg(script)
            .output()
            .unwrap();
        assert!(output.status.success());
        assert_eq!(String::from_utf8_lossy(&output.stdout).trim(), "rpf2d 5.0");
    }
}

fn which_python() -> Option<&'static str> {
    for candidate in ["python3", "python"] {
        if std::process::Command::new(candidate)
            .arg("-c")
            .arg("import h5py")
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)
        {
            return Some(candidate);
        }
    }
    None
}
