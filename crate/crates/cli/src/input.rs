//! Loading and validating operator matrices from their JSON wire format.

use std::path::Path;

use kdqsl::kdq::ProjectiveObservable;
use kdqsl::linop::{HermitianOperator, MatrixJson, QuantumState};

use crate::Failure;

pub fn load_matrix(path: &Path, role: &str) -> Result<HermitianOperator, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::Contract(format!("cannot read {role} file {}: {e}", path.display()))
    })?;
    let json: MatrixJson = serde_json::from_str(&text).map_err(|e| {
        Failure::Contract(format!(
            "{role} file {} is not valid matrix JSON: {e}",
            path.display()
        ))
    })?;
    json.to_operator()
        .map_err(|e| Failure::Contract(format!("{role} matrix invalid: {e}")))
}

pub fn load_density(path: &Path) -> Result<QuantumState, Failure> {
    let op = load_matrix(path, "rho")?;
    QuantumState::density(op).map_err(|e| Failure::Contract(format!("rho invalid: {e}")))
}

pub fn load_observable(path: &Path, role: &str) -> Result<ProjectiveObservable, Failure> {
    let op = load_matrix(path, role)?;
    Ok(ProjectiveObservable::from_operator(&op))
}
