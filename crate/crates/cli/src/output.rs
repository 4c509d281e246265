use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use compgrad_core::problems::IteratePoint;
use serde::Serialize;

use crate::CliError;

pub const TRAJECTORY_HEADER: &str = "iter,eta,norm_x,norm_y,norm_g_alpha";
pub const FLOW_HEADER: &str = "t,norm_g0_sq,norm_x,norm_y";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn state_header(dims: (usize, usize)) -> String {
    let mut s = String::new();
    for i in 0..dims.0 {
        write!(s, ",x{i}").unwrap();
    }
    for j in 0..dims.1 {
        write!(s, ",y{j}").unwrap();
    }
    s
}

pub(crate) fn push_state(row: &mut String, z: &IteratePoint) {
    for v in z.iter() {
        row.push(',');
        row.push_str(&format_float(v));
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn state_columns() {
        assert_eq!(state_header((2, 1)), ",x0,x1,y0");
    }
}
