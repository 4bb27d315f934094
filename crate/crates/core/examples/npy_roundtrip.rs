// SPDX-License-Identifier: MIT OR Apache-2.0

//! Writes a matrix as `<f4` and `<f8` NPY, reads both back, and shows that a
//! malformed file is rejected with a named error.
//!
//! `cargo run --example npy_roundtrip`

use nalgebra::DMatrix;
use spectral_unlearn::io::{read_tensor, write_matrix, write_tensor, Dtype};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let dir = tmp.path();
    let m = DMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 / 7.0);

    for dtype in [Dtype::F32, Dtype::F64] {
        let path = dir.join(format!("m_{dtype:?}.npy"));
        write_matrix(&path, &m, dtype)?;
        let t = read_tensor(&path)?;
        let again = dir.join("again.npy");
        write_tensor(&again, &t, t.dtype)?;
        let same = std::fs::read(&path).ok() == std::fs::read(&again).ok();
        let err = (t.to_matrix() - &m).amax();
        println!("{dtype:?}: shape {:?}, max |Δ| = {err:.3e}, rewrite byte-identical: {same}", t.shape);
    }

    let bad = dir.join("bad.npy");
    std::fs::write(&bad, b"not an npy file")?;
    let e = read_tensor(&bad).unwrap_err();
    println!("malformed: error[{}]: {e}", e.name());
    Ok(())
}
