use std::path::Path;

/// A failed run: message plus process exit code (1 validation, 2 I/O).
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<synpart::Error> for Failure {
    fn from(e: synpart::Error) -> Self {
        if e.is_io() {
            Failure::io(e.to_string())
        } else {
            Failure::validation(e.to_string())
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::io(e.to_string())
    }
}

/// Fails with exit code 2 unless every path exists.
pub fn require_inputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<(), Failure> {
    for p in paths {
        if !p.exists() {
            return Err(Failure::io(format!("input file not found: {}", p.display())));
        }
    }
    Ok(())
}
