//! Benchmark generators and the JSON model format.
//!
//! A model file looks like
//!
//! ```json
//! {
//!   "schema": 1,
//!   "dim": 2,
//!   "hamiltonian": null,
//!   "terms": [
//!     { "matrix": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]],
//!       "rate": { "kind": "sinusoid", "amplitude": 1.0 } }
//!   ]
//! }
//! ```
//!
//! Complex numbers are always `[re, im]` pairs and matrices are lists of rows.
//! `name` and `note` strings are optional.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{gell_mann_basis, DiagonalGenerator, LindbladTerm, RateSchedule};
use crate::linops::{pauli_x, pauli_y, pauli_z, sigma_minus, CMatrix, HermMatrix, C64};

/// Seed used for the catalog's `random-kossakowski` entry.
pub const CATALOG_SEED: u64 = 7;

/// Closed-form RHP rate of a catalog model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticRate {
    /// `g ≡ 0`.
    Zero,
    /// `g(t) = 2·max(0, −sin t)`.
    NegativeSine,
    /// `g(t) = tanh t`.
    Tanh,
}

impl AnalyticRate {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            AnalyticRate::Zero => 0.0,
            AnalyticRate::NegativeSine => 2.0 * (-t.sin()).max(0.0),
            AnalyticRate::Tanh => t.tanh(),
        }
    }

    /// `∫₀ᵗ g`.
    pub fn integral(self, t: f64) -> f64 {
        match self {
            AnalyticRate::Zero => 0.0,
            AnalyticRate::NegativeSine => {
                let full = (t / (2.0 * PI)).floor();
                let r = t - 2.0 * PI * full;
                4.0 * full + if r > PI { 2.0 * (1.0 + r.cos()) } else { 0.0 }
            }
            AnalyticRate::Tanh => t.cosh().ln(),
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            AnalyticRate::Zero => "g = 0",
            AnalyticRate::NegativeSine => "g = 2 max(0, -sin t)",
            AnalyticRate::Tanh => "g = tanh t",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub name: String,
    pub generator: DiagonalGenerator,
    pub analytic_g: Option<AnalyticRate>,
    pub note: String,
}

/// Every built-in model.
pub fn catalog() -> Vec<ModelSpec> {
    let qubit = |terms: Vec<LindbladTerm>| DiagonalGenerator::new(2, terms, None).expect("catalog models are valid");
    let s = C64::new(0.5f64.sqrt(), 0.0);
    vec![
        ModelSpec {
            name: "dephasing-const".into(),
            generator: qubit(vec![LindbladTerm { op: pauli_z(), rate: RateSchedule::constant(0.5) }]),
            analytic_g: Some(AnalyticRate::Zero),
            note: "L = σz, γ = 0.5".into(),
        },
        ModelSpec {
            name: "dephasing-sin".into(),
            generator: qubit(vec![LindbladTerm { op: pauli_z(), rate: RateSchedule::sinusoid(1.0, 1.0, 0.0, 0.0) }]),
            analytic_g: Some(AnalyticRate::NegativeSine),
            note: "L = σz, γ(t) = sin t".into(),
        },
        ModelSpec {
            name: "eternal-nm".into(),
            generator: qubit(vec![
                LindbladTerm { op: pauli_x() * s, rate: RateSchedule::constant(1.0) },
                LindbladTerm { op: pauli_y() * s, rate: RateSchedule::constant(1.0) },
                LindbladTerm { op: pauli_z() * s, rate: RateSchedule::TanhNegative { scale: 1.0, rate: 1.0 } },
            ]),
            analytic_g: Some(AnalyticRate::Tanh),
            note: "L(ρ) = ½ Σ γ_i (σ_i ρ σ_i − ρ), γ = (1, 1, −tanh t)".into(),
        },
        ModelSpec {
            name: "amplitude-damping-const".into(),
            generator: qubit(vec![LindbladTerm { op: sigma_minus(), rate: RateSchedule::constant(1.0) }]),
            analytic_g: Some(AnalyticRate::Zero),
            note: "L = σ−, γ = 1".into(),
        },
        random_kossakowski(CATALOG_SEED),
    ]
}

/// Qubit model with `A(t) = U diag(γ_k(t)) U†`, `U` a seeded random unitary
/// and `γ_k(t) = c_k + a_k sin(ω_k t + φ_k)`. The offsets are small enough
/// that every rate changes sign.
pub fn random_kossakowski(seed: u64) -> ModelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = gell_mann_basis(2);
    let u = random_unitary(&mut rng, basis.len());
    let terms = (0..basis.len())
        .map(|k| {
            let op = basis.iter().enumerate().fold(CMatrix::zeros(2, 2), |acc, (j, f)| acc + f * u[(j, k)]);
            let amplitude = rng.random_range(0.5..1.5);
            let rate = RateSchedule::sinusoid(
                amplitude,
                rng.random_range(0.5..2.0),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(-0.5..0.5) * amplitude,
            );
            LindbladTerm { op, rate }
        })
        .collect();
    ModelSpec {
        name: "random-kossakowski".into(),
        generator: DiagonalGenerator::new(2, terms, None).expect("random model is valid"),
        analytic_g: None,
        note: format!("seeded random Kossakowski trajectory, seed {seed}"),
    }
}

/// Haar-ish unitary from the QR factorization of a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal))
    });
    z.qr().q()
}

/// Look up a catalog model by name.
pub fn by_name(name: &str) -> Option<ModelSpec> {
    catalog().into_iter().find(|m| m.name == name)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermFile {
    matrix: Vec<Vec<[f64; 2]>>,
    rate: RateSchedule,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    dim: usize,
    hamiltonian: Option<Vec<Vec<[f64; 2]>>>,
    terms: Vec<TermFile>,
}

fn matrix_from_rows(rows: &[Vec<[f64; 2]>], dim: usize, field: &str) -> Result<CMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Validation(format!("{field} must be {dim}×{dim}")));
    }
    Ok(CMatrix::from_fn(dim, dim, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))
}

fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect()
}

/// Parse and validate a JSON model description.
pub fn from_spec(text: &str) -> Result<ModelSpec> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    if file.schema != 1 {
        return Err(Error::Validation(format!("unsupported schema version {}", file.schema)));
    }
    let dim = file.dim;
    if dim == 0 {
        return Err(Error::Validation("dim must be positive".into()));
    }
    let hamiltonian = match &file.hamiltonian {
        Some(rows) => {
            let h = matrix_from_rows(rows, dim, "hamiltonian")?;
            Some(HermMatrix::new(h).map_err(|e| Error::Validation(format!("hamiltonian: {e}")))?)
        }
        None => None,
    };
    let terms = file
        .terms
        .iter()
        .enumerate()
        .map(|(k, t)| {
            Ok(LindbladTerm { op: matrix_from_rows(&t.matrix, dim, &format!("terms[{k}].matrix"))?, rate: t.rate.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    let generator = DiagonalGenerator::new(dim, terms, hamiltonian).map_err(|e| match e {
        Error::Validation(_) => e,
        other => Error::Validation(other.to_string()),
    })?;
    Ok(ModelSpec {
        name: file.name.unwrap_or_else(|| "custom".into()),
        generator,
        analytic_g: None,
        note: file.note.unwrap_or_default(),
    })
}

/// Serialize a model in the format read by [`from_spec`].
pub fn to_json(model: &ModelSpec) -> String {
    let g = &model.generator;
    let file = ModelFile {
        schema: 1,
        name: Some(model.name.clone()),
        note: (!model.note.is_empty()).then(|| model.note.clone()),
        dim: crate::generators::Generator::dim(g),
        hamiltonian: g.hamiltonian().map(|h| matrix_to_rows(h.as_matrix())),
        terms: g.terms().iter().map(|t| TermFile { matrix: matrix_to_rows(&t.op), rate: t.rate.clone() }).collect(),
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

/// Serialize a Hermitian matrix as rows of `[re, im]` pairs.
pub fn serialize_herm<S: Serializer>(m: &HermMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows = matrix_to_rows(m.as_matrix());
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for r in &rows {
        seq.serialize_element(r)?;
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::Generator;

    const MINIMAL: &str = r#"{
        "schema": 1, "dim": 2, "hamiltonian": null,
        "terms": [{"matrix": [[[1,0],[0,0]],[[0,0],[-1,0]]], "rate": {"kind": "constant", "value": 0.5}}]
    }"#;

    #[test]
    fn catalog_has_the_expected_models() {
        let names: Vec<String> = catalog().into_iter().map(|m| m.name).collect();
        for n in ["dephasing-const", "dephasing-sin", "eternal-nm", "amplitude-damping-const", "random-kossakowski"] {
            assert!(names.iter().any(|x| x == n), "{n} missing");
        }
    }

    #[test]
    fn markovian_entries_stay_markovian() {
        for name in ["dephasing-const", "amplitude-damping-const"] {
            let m = by_name(name).unwrap();
            assert!((0..100).all(|k| m.generator.is_instantaneously_markovian(0.05 * k as f64)));
        }
    }

    #[test]
    fn random_model_breaks_divisibility_somewhere() {
        let m = by_name("random-kossakowski").unwrap();
        let flags: Vec<bool> = (0..200).map(|k| m.generator.is_instantaneously_markovian(0.05 * k as f64)).collect();
        assert!(flags.iter().any(|&f| !f));
        assert_eq!(random_kossakowski(CATALOG_SEED).generator, m.generator);
        assert_ne!(random_kossakowski(CATALOG_SEED + 1).generator, m.generator);
    }

    #[test]
    fn json_round_trip_is_exact() {
        for m in catalog() {
            let back = from_spec(&to_json(&m)).unwrap();
            assert_eq!(back.generator, m.generator, "{}", m.name);
            assert_eq!(back.name, m.name);
        }
    }

    #[test]
    fn minimal_spec_parses() {
        let m = from_spec(MINIMAL).unwrap();
        assert_eq!(m.generator.terms().len(), 1);
        assert_eq!(m.generator.dim(), 2);
    }

    #[test]
    fn too_many_terms_is_a_validation_error() {
        let term = r#"{"matrix": [[[1,0],[0,0]],[[0,0],[-1,0]]], "rate": {"kind": "constant", "value": 1}}"#;
        let text = format!(r#"{{"schema": 1, "dim": 2, "hamiltonian": null, "terms": [{}]}}"#, vec![term; 5].join(","));
        assert!(matches!(from_spec(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_entries_are_parse_errors() {
        let bad = MINIMAL.replace("[[[1,0],[0,0]]", "[[[1],[0,0]]");
        match from_spec(&bad) {
            Err(Error::Parse { location, .. }) => assert!(location.starts_with("line")),
            other => panic!("expected parse error, got {other:?}"),
        }
        let unknown = MINIMAL.replace("\"constant\"", "\"cosine\"");
        assert!(matches!(from_spec(&unknown), Err(Error::Parse { .. })));
    }

    #[test]
    fn invalid_hamiltonian_and_shapes_are_rejected() {
        let h = MINIMAL.replace("\"hamiltonian\": null", r#""hamiltonian": [[[0,0],[1,0]],[[0,0],[0,0]]]"#);
        assert!(matches!(from_spec(&h), Err(Error::Validation(_))));
        let shape = MINIMAL.replace("\"dim\": 2", "\"dim\": 3");
        assert!(matches!(from_spec(&shape), Err(Error::Validation(_))));
        let schema = MINIMAL.replace("\"schema\": 1", "\"schema\": 2");
        assert!(matches!(from_spec(&schema), Err(Error::Validation(_))));
    }

    #[test]
    fn analytic_integrals() {
        assert!((AnalyticRate::NegativeSine.integral(2.0 * PI) - 4.0).abs() < 1e-12);
        assert!((AnalyticRate::NegativeSine.integral(1.5 * PI) - 2.0).abs() < 1e-12);
        assert!((AnalyticRate::Tanh.integral(3.0) - 3f64.cosh().ln()).abs() < 1e-15);
    }
}
