//! Named parameter collections and text checkpoints.
//!
//! Both the reward model and the policy keep their weights in a flat
//! [`ParamSet`]: an ordered list of named, shaped tensors backed by `Vec<f64>`.
//! The ordering is fixed at construction time, which gives every parameter a
//! stable flat index. Gradient containers are `ParamSet`s of the same layout,
//! so SGD updates and finite-difference probes are plain vector arithmetic.
//!
//! Checkpoints are line-oriented text files. Values are written with 17
//! significant digits, which round-trips `f64` exactly, and every checkpoint
//! carries a fingerprint of the model configuration so that loading against a
//! mismatched schema fails loudly instead of silently misreading weights.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("checkpoint fingerprint mismatch: expected {expected:016x}, found {found:016x}")]
    FingerprintMismatch { expected: u64, found: u64 },
    #[error("checkpoint layout mismatch: {0}")]
    LayoutMismatch(String),
}

/// A named tensor with row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(name: &str, shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            name: name.to_string(),
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    /// Row `r` of a rank-2 tensor.
    pub fn row(&self, r: usize) -> &[f64] {
        let cols = self.shape[1];
        &self.data[r * cols..(r + 1) * cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let cols = self.shape[1];
        &mut self.data[r * cols..(r + 1) * cols]
    }
}

/// An ordered collection of named tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn add(&mut self, name: &str, shape: &[usize]) {
        debug_assert!(
            self.tensors.iter().all(|t| t.name != name),
            "duplicate tensor name {name}"
        );
        self.tensors.push(Tensor::zeros(name, shape));
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensor(&self, name: &str) -> &Tensor {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .unwrap_or_else(|| panic!("unknown tensor {name}"))
    }

    pub fn tensor_mut(&mut self, name: &str) -> &mut Tensor {
        self.tensors
            .iter_mut()
            .find(|t| t.name == name)
            .unwrap_or_else(|| panic!("unknown tensor {name}"))
    }

    /// Same names and shapes, all values zero.
    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor::zeros(&t.name, &t.shape))
                .collect(),
        }
    }

    pub fn init_uniform<R: Rng>(&mut self, lo: f64, hi: f64, rng: &mut R) {
        for t in &mut self.tensors {
            for v in &mut t.data {
                *v = rng.gen_range(lo..hi);
            }
        }
    }

    /// `self += a * other`; layouts must match.
    pub fn axpy(&mut self, a: f64, other: &ParamSet) {
        assert_eq!(self.tensors.len(), other.tensors.len(), "layout mismatch");
        for (t, o) in self.tensors.iter_mut().zip(&other.tensors) {
            debug_assert_eq!(t.name, o.name);
            for (v, w) in t.data.iter_mut().zip(&o.data) {
                *v += a * w;
            }
        }
    }

    pub fn scale(&mut self, a: f64) {
        for t in &mut self.tensors {
            for v in &mut t.data {
                *v *= a;
            }
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.data.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Total number of scalar parameters.
    pub fn flat_len(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn get_flat(&self, mut idx: usize) -> f64 {
        for t in &self.tensors {
            if idx < t.data.len() {
                return t.data[idx];
            }
            idx -= t.data.len();
        }
        panic!("flat index out of range");
    }

    pub fn set_flat(&mut self, mut idx: usize, value: f64) {
        for t in &mut self.tensors {
            if idx < t.data.len() {
                t.data[idx] = value;
                return;
            }
            idx -= t.data.len();
        }
        panic!("flat index out of range");
    }

    pub fn flat_values(&self) -> Vec<f64> {
        self.tensors
            .iter()
            .flat_map(|t| t.data.iter().copied())
            .collect()
    }

    /// Serialize to the text checkpoint format.
    pub fn to_checkpoint_string(&self, fingerprint: u64, schema: &str) -> String {
        let mut out = String::new();
        out.push_str("rankreward-checkpoint v1\n");
        let _ = writeln!(out, "fingerprint {fingerprint:016x}");
        let _ = writeln!(out, "schema {schema}");
        let _ = writeln!(out, "tensors {}", self.tensors.len());
        for t in &self.tensors {
            let _ = write!(out, "tensor {}", t.name);
            for d in &t.shape {
                let _ = write!(out, " {d}");
            }
            out.push('\n');
            for (i, v) in t.data.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                // 17 significant digits round-trip f64 exactly.
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path, fingerprint: u64, schema: &str) -> Result<(), CheckpointError> {
        fs::write(path, self.to_checkpoint_string(fingerprint, schema))?;
        Ok(())
    }

    pub fn from_checkpoint_string(
        text: &str,
        expected_fingerprint: u64,
    ) -> Result<ParamSet, CheckpointError> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| CheckpointError::Parse {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            })
        };

        let (ln, header) = next("header")?;
        if header != "rankreward-checkpoint v1" {
            return Err(CheckpointError::Parse {
                line: ln + 1,
                message: "bad header".into(),
            });
        }
        let (ln, fp_line) = next("fingerprint")?;
        let found = fp_line
            .strip_prefix("fingerprint ")
            .and_then(|s| u64::from_str_radix(s, 16).ok())
            .ok_or(CheckpointError::Parse {
                line: ln + 1,
                message: "bad fingerprint line".into(),
            })?;
        if found != expected_fingerprint {
            return Err(CheckpointError::FingerprintMismatch {
                expected: expected_fingerprint,
                found,
            });
        }
        let (ln, schema_line) = next("schema")?;
        if !schema_line.starts_with("schema ") {
            return Err(CheckpointError::Parse {
                line: ln + 1,
                message: "bad schema line".into(),
            });
        }
        let (ln, count_line) = next("tensor count")?;
        let count: usize = count_line
            .strip_prefix("tensors ")
            .and_then(|s| s.parse().ok())
            .ok_or(CheckpointError::Parse {
                line: ln + 1,
                message: "bad tensor count".into(),
            })?;

        let mut set = ParamSet::new();
        for _ in 0..count {
            let (ln, head) = next("tensor header")?;
            let mut parts = head.split_whitespace();
            if parts.next() != Some("tensor") {
                return Err(CheckpointError::Parse {
                    line: ln + 1,
                    message: "expected tensor header".into(),
                });
            }
            let name = parts.next().ok_or(CheckpointError::Parse {
                line: ln + 1,
                message: "tensor name missing".into(),
            })?;
            let shape: Vec<usize> = parts
                .map(|p| {
                    p.parse().map_err(|_| CheckpointError::Parse {
                        line: ln + 1,
                        message: format!("bad dimension {p}"),
                    })
                })
                .collect::<Result<_, _>>()?;
            let expected_len: usize = shape.iter().product();

            let (vln, values_line) = next("tensor values")?;
            let mut data = Vec::with_capacity(expected_len);
            for tok in values_line.split(' ') {
                let v: f64 = tok.parse().map_err(|_| CheckpointError::Parse {
                    line: vln + 1,
                    message: format!("bad value {tok:?}"),
                })?;
                data.push(v);
            }
            if data.len() != expected_len {
                return Err(CheckpointError::Parse {
                    line: vln + 1,
                    message: format!(
                        "tensor {name} expects {expected_len} values, found {}",
                        data.len()
                    ),
                });
            }
            set.tensors.push(Tensor {
                name: name.to_string(),
                shape,
                data,
            });
        }
        Ok(set)
    }

    pub fn load(path: &Path, expected_fingerprint: u64) -> Result<ParamSet, CheckpointError> {
        let text = fs::read_to_string(path)?;
        ParamSet::from_checkpoint_string(&text, expected_fingerprint)
    }

    /// Verify that `other` has the same tensor names and shapes.
    pub fn check_layout(&self, other: &ParamSet) -> Result<(), CheckpointError> {
        if self.tensors.len() != other.tensors.len() {
            return Err(CheckpointError::LayoutMismatch(format!(
                "tensor count {} vs {}",
                self.tensors.len(),
                other.tensors.len()
            )));
        }
        for (a, b) in self.tensors.iter().zip(&other.tensors) {
            if a.name != b.name || a.shape != b.shape {
                return Err(CheckpointError::LayoutMismatch(format!(
                    "{}{:?} vs {}{:?}",
                    a.name, a.shape, b.name, b.shape
                )));
            }
        }
        Ok(())
    }
}

/// FNV-1a hash of a schema description, used as checkpoint fingerprint.
pub fn fingerprint(schema: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in schema.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
