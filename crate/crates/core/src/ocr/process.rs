use std::env;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use tempfile::NamedTempFile;
use wait_timeout::ChildExt;

use super::OcrError;
use crate::imagecore::{io::encode_png, GrayImage};

/// Finds `program` either as a path or on `PATH`.
pub fn resolve_program(program: &str) -> Option<PathBuf> {
    let direct = Path::new(program);
    if program.contains(std::path::MAIN_SEPARATOR) {
        return direct.is_file().then(|| direct.to_path_buf());
    }
    env::var_os("PATH").and_then(|paths| {
        env::split_paths(&paths).map(|dir| dir.join(program)).find(|candidate| candidate.is_file())
    })
}

/// Writes `img` as a lossless PNG temp file for an external engine.
pub fn write_temp_image(img: &GrayImage) -> Result<NamedTempFile, OcrError> {
    let mut file = tempfile::Builder::new().prefix("billocr-").suffix(".png").tempfile()?;
    std::io::Write::write_all(&mut file, &encode_png(img)?)?;
    std::io::Write::flush(&mut file)?;
    Ok(file)
}

/// Runs `program args...`, collecting stdout. Kills the child when it
/// exceeds `timeout_s`.
pub(crate) fn run_captured(program: &Path, args: &[String], timeout_s: f64) -> Result<String, OcrError> {
    let name = program.display().to_string();
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
                OcrError::EngineUnavailable { program: name.clone() }
            }
            _ => OcrError::Io(e),
        })?;
    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let out_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        stdout.read_to_end(&mut buf).map(|_| buf)
    });
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });
    let status = match child.wait_timeout(Duration::from_secs_f64(timeout_s.max(0.0)))? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(OcrError::EngineTimeout { program: name, seconds: timeout_s });
        }
    };
    let out = out_reader.join().expect("stdout reader panicked")?;
    let err = err_reader.join().expect("stderr reader panicked");
    if !status.success() {
        return Err(OcrError::EngineFailed {
            program: name,
            status: status.to_string(),
            stderr: String::from_utf8_lossy(&err).trim().to_string(),
        });
    }
    String::from_utf8(out).map_err(|_| OcrError::OutputParseError { row: 0, message: "output is not UTF-8".into() })
}
