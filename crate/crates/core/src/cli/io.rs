//! JSON file formats: states, protocols and matrices with split real and
//! imaginary row-major arrays.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::Protocol;
use crate::error::Error;
use crate::linalg::{Complex64, ComplexMatrix, DensityMatrix, PureState};
use crate::tolerance::Tolerances;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Density,
    Pure,
}

/// On-disk state. `re` and `im` have `dim` entries for a pure state and
/// `dim²` row-major entries for a density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dim: usize,
    pub kind: StateKind,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<BTreeMap<String, String>>,
}

/// A validated state read from a [`StateFile`].
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedState {
    Pure(PureState),
    Density(DensityMatrix),
}

impl LoadedState {
    pub fn dim(&self) -> usize {
        match self {
            LoadedState::Pure(p) => p.dim(),
            LoadedState::Density(d) => d.dim(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            LoadedState::Pure(p) => p.projector(),
            LoadedState::Density(d) => d.clone(),
        }
    }
}

fn join(re: &[f64], im: &[f64]) -> Vec<Complex64> {
    re.iter()
        .zip(im)
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect()
}

fn split(values: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (
        values.iter().map(|z| z.re).collect(),
        values.iter().map(|z| z.im).collect(),
    )
}

impl StateFile {
    pub fn from_pure(state: &PureState) -> Self {
        let (re, im) = split(state.amplitudes());
        Self {
            dim: state.dim(),
            kind: StateKind::Pure,
            re,
            im,
            meta: None,
        }
    }

    pub fn from_density(state: &DensityMatrix) -> Self {
        let (re, im) = split(&state.matrix().to_row_major());
        Self {
            dim: state.dim(),
            kind: StateKind::Density,
            re,
            im,
            meta: None,
        }
    }

    pub fn with_meta(mut self, meta: BTreeMap<String, String>) -> Self {
        self.meta = Some(meta);
        self
    }

    /// Validates against the state invariants at file-input tolerances. With
    /// `renormalize`, a pure state is rescaled to unit norm and a density
    /// matrix is Hermitized and divided by its trace before validation.
    pub fn to_state(&self, renormalize: bool) -> Result<LoadedState, Error> {
        if self.dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let expected = match self.kind {
            StateKind::Pure => self.dim,
            StateKind::Density => self.dim * self.dim,
        };
        for found in [self.re.len(), self.im.len()] {
            if found != expected {
                return Err(Error::BadLength { expected, found });
            }
        }
        let values = join(&self.re, &self.im);
        let tol = Tolerances::file_input();
        match self.kind {
            StateKind::Pure if renormalize => Ok(LoadedState::Pure(PureState::normalized(values)?)),
            StateKind::Pure => Ok(LoadedState::Pure(PureState::with_tolerance(
                values,
                tol.unit_norm,
            )?)),
            StateKind::Density => {
                let mut m = ComplexMatrix::from_row_major(self.dim, self.dim, &values)?;
                if renormalize {
                    m = m.hermitian_part();
                    let tr = m.trace().re;
                    if tr.is_nan() || tr <= 0.0 {
                        return Err(Error::BadTrace { trace: tr });
                    }
                    m = m.scale_real(1.0 / tr);
                }
                Ok(LoadedState::Density(DensityMatrix::with_tolerances(
                    m, &tol,
                )?))
            }
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_json(path, self)
    }
}

/// Reads and validates a state file.
pub fn load_state(path: &Path, renormalize: bool) -> Result<LoadedState, CliError> {
    StateFile::read(path)?
        .to_state(renormalize)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Complex matrix as split row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let (re, im) = split(&m.to_row_major());
        Self { re, im }
    }

    pub fn to_matrix(&self, n: usize) -> Result<ComplexMatrix, Error> {
        for found in [self.re.len(), self.im.len()] {
            if found != n * n {
                return Err(Error::BadLength {
                    expected: n * n,
                    found,
                });
            }
        }
        ComplexMatrix::from_row_major(n, n, &join(&self.re, &self.im))
    }
}

/// Explicit correction unitaries in flat `(s, t)` order `n·s + t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolFile {
    pub n: usize,
    pub corrections: Vec<MatrixJson>,
}

impl ProtocolFile {
    pub fn from_protocol(p: &Protocol) -> Self {
        Self {
            n: p.n(),
            corrections: p
                .corrections()
                .iter()
                .map(MatrixJson::from_matrix)
                .collect(),
        }
    }

    pub fn to_protocol(&self) -> Result<Protocol, Error> {
        let corrections = self
            .corrections
            .iter()
            .map(|m| m.to_matrix(self.n))
            .collect::<Result<Vec<_>, _>>()?;
        Protocol::with_tolerance(self.n, corrections, Tolerances::file_input().unitary)
    }
}

pub fn load_protocol(path: &Path) -> Result<Protocol, CliError> {
    let file: ProtocolFile = read_json(path)?;
    file.to_protocol()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("malformed {}: {e}", path.display())))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("cannot encode {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::standard_protocol;
    use crate::linalg::{random_density_matrix, random_pure_state, Rng};

    #[test]
    fn pure_round_trip_is_exact() {
        let mut rng = Rng::from_seed(80);
        let psi = random_pure_state(4, &mut rng).unwrap();
        let text = serde_json::to_string(&StateFile::from_pure(&psi)).unwrap();
        let back: StateFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_state(false).unwrap(), LoadedState::Pure(psi));
    }

    #[test]
    fn density_round_trip_is_exact() {
        let mut rng = Rng::from_seed(81);
        let rho = random_density_matrix(9, 3, &mut rng).unwrap();
        let text = serde_json::to_string(&StateFile::from_density(&rho)).unwrap();
        let back: StateFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_state(false).unwrap(), LoadedState::Density(rho));
    }

    #[test]
    fn rejects_bad_files() {
        let bad_len = StateFile {
            dim: 2,
            kind: StateKind::Density,
            re: vec![0.5, 0.0, 0.0],
            im: vec![0.0; 4],
            meta: None,
        };
        assert!(matches!(
            bad_len.to_state(false),
            Err(Error::BadLength { .. })
        ));
        let unnormalized = StateFile {
            dim: 2,
            kind: StateKind::Pure,
            re: vec![1.0, 1.0],
            im: vec![0.0, 0.0],
            meta: None,
        };
        assert!(matches!(
            unnormalized.to_state(false),
            Err(Error::NotNormalized { .. })
        ));
        let fixed = unnormalized.to_state(true).unwrap();
        assert_eq!(fixed.dim(), 2);
        let negative = StateFile {
            dim: 2,
            kind: StateKind::Density,
            re: vec![1.5, 0.0, 0.0, -0.5],
            im: vec![0.0; 4],
            meta: None,
        };
        assert!(matches!(
            negative.to_state(false),
            Err(Error::NotPositive { .. })
        ));
        assert!(
            serde_json::from_str::<StateFile>(r#"{"dim":1,"kind":"mixed","re":[1],"im":[0]}"#)
                .is_err()
        );
    }

    #[test]
    fn renormalize_density() {
        let file = StateFile {
            dim: 2,
            kind: StateKind::Density,
            re: vec![2.0, 0.0, 0.0, 2.0],
            im: vec![0.0; 4],
            meta: None,
        };
        assert!(file.to_state(false).is_err());
        let rho = file.to_state(true).unwrap().to_density();
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn protocol_round_trip() {
        let p = standard_protocol(3).unwrap();
        let text = serde_json::to_string(&ProtocolFile::from_protocol(&p)).unwrap();
        let back: ProtocolFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_protocol().unwrap().corrections(), p.corrections());
        let mut short = back.clone();
        short.corrections.pop();
        assert!(short.to_protocol().is_err());
    }
}
