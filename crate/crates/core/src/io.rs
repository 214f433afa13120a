//! JSON forms of IETs and spectral reports.
//!
//! A length is either a rational string `"p/q"` or an element of a number
//! field `{"field": {"minpoly": [...], "embedding": ["lo", "hi"]}, "coords": [...]}`
//! with ascending integer coefficients and rational coordinates on the power
//! basis. Writing then reading an IET gives back the same values, and
//! writing again gives the same text.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iet::{Iet, IetError, SignedPermutation};
use crate::numfield::{AlgebraicNumber, Embedding, NumFieldError, NumberField};
use crate::poly::IntPolynomial;
use crate::scalar::parse_rational;
use crate::spectral::{conjugate_screen, perron_data, IntMatrix, SpectralError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a rational: {0:?}")]
    BadRational(String),
    #[error("not an integer: {0:?}")]
    BadInteger(String),
    #[error(transparent)]
    NumField(#[from] NumFieldError),
    #[error(transparent)]
    Iet(#[from] IetError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntJson {
    Small(i64),
    Big(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldJson {
    pub minpoly: Vec<IntJson>,
    pub embedding: [String; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarJson {
    Rational(String),
    Field { field: FieldJson, coords: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IetJson {
    pub lengths: Vec<ScalarJson>,
    pub signed_permutation: Vec<i32>,
    #[serde(default = "zero_json")]
    pub origin: ScalarJson,
}

fn zero_json() -> ScalarJson {
    ScalarJson::Rational("0".into())
}

/// An IET read from JSON: rational when every value is rational.
#[derive(Clone, Debug)]
pub enum LoadedIet {
    Rational(Iet<BigRational>),
    Exact(Iet<AlgebraicNumber>),
}

impl LoadedIet {
    /// The same IET over number-field scalars.
    pub fn into_exact(self) -> Iet<AlgebraicNumber> {
        match self {
            LoadedIet::Exact(e) => e,
            LoadedIet::Rational(e) => e
                .map_scalar(|r| AlgebraicNumber::from_rational(r.clone()))
                .expect("same positive lengths"),
        }
    }

    pub fn to_f64(&self) -> Iet<f64> {
        use crate::scalar::Scalar;
        match self {
            LoadedIet::Exact(e) => e.map_scalar(Scalar::as_f64),
            LoadedIet::Rational(e) => e.map_scalar(Scalar::as_f64),
        }
        .expect("positive lengths stay positive")
    }
}

fn rat(s: &str) -> Result<BigRational, IoError> {
    parse_rational(s).ok_or_else(|| IoError::BadRational(s.into()))
}

fn int(j: &IntJson) -> Result<BigInt, IoError> {
    match j {
        IntJson::Small(v) => Ok(BigInt::from(*v)),
        IntJson::Big(s) => s.trim().parse().map_err(|_| IoError::BadInteger(s.clone())),
    }
}

fn int_json(b: &BigInt) -> IntJson {
    i64::try_from(b).map_or_else(|_| IntJson::Big(b.to_string()), IntJson::Small)
}

/// Shares one embedding per distinct `(minpoly, interval)`.
#[derive(Default)]
struct Interner {
    fields: HashMap<Vec<BigInt>, Arc<NumberField>>,
    embeddings: HashMap<(Vec<BigInt>, String, String), Arc<Embedding>>,
}

impl Interner {
    fn scalar(&mut self, s: &ScalarJson) -> Result<AlgebraicNumber, IoError> {
        match s {
            ScalarJson::Rational(r) => Ok(AlgebraicNumber::from_rational(rat(r)?)),
            ScalarJson::Field { field, coords } => {
                let coeffs: Vec<BigInt> = field.minpoly.iter().map(int).collect::<Result<_, _>>()?;
                let key = (coeffs.clone(), field.embedding[0].clone(), field.embedding[1].clone());
                let emb = match self.embeddings.get(&key) {
                    Some(e) => e.clone(),
                    None => {
                        let nf = match self.fields.get(&coeffs) {
                            Some(f) => f.clone(),
                            None => {
                                let f = NumberField::new(&IntPolynomial::new(coeffs.clone()))?;
                                self.fields.insert(coeffs, f.clone());
                                f
                            }
                        };
                        let e = Embedding::from_interval(nf, rat(&field.embedding[0])?, rat(&field.embedding[1])?)?;
                        self.embeddings.insert(key, e.clone());
                        e
                    }
                };
                let c: Vec<BigRational> = coords.iter().map(|x| rat(x)).collect::<Result<_, _>>()?;
                Ok(AlgebraicNumber::from_coords(emb, c)?)
            }
        }
    }
}

pub fn scalar_to_json(a: &AlgebraicNumber) -> ScalarJson {
    match a.embedding() {
        None => ScalarJson::Rational(a.as_rational().expect("no embedding means rational").to_string()),
        Some(emb) => {
            let iv = emb.declared_interval();
            ScalarJson::Field {
                field: FieldJson {
                    minpoly: emb.field().minimal_polynomial().coeffs().iter().map(int_json).collect(),
                    embedding: [iv.lo.to_string(), iv.hi.to_string()],
                },
                coords: a.coords().iter().map(ToString::to_string).collect(),
            }
        }
    }
}

pub fn iet_from_json(text: &str) -> Result<LoadedIet, IoError> {
    let spec: IetJson = serde_json::from_str(text)?;
    let perm = SignedPermutation::new(spec.signed_permutation.clone())?;
    let all_rational = spec
        .lengths
        .iter()
        .chain(std::iter::once(&spec.origin))
        .all(|s| matches!(s, ScalarJson::Rational(_)));
    if all_rational {
        let lengths = spec
            .lengths
            .iter()
            .map(|s| match s {
                ScalarJson::Rational(r) => rat(r),
                ScalarJson::Field { .. } => unreachable!(),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let origin = match &spec.origin {
            ScalarJson::Rational(r) => rat(r)?,
            ScalarJson::Field { .. } => unreachable!(),
        };
        return Ok(LoadedIet::Rational(Iet::new(lengths, perm, origin)?));
    }
    let mut interner = Interner::default();
    let lengths = spec
        .lengths
        .iter()
        .map(|s| interner.scalar(s))
        .collect::<Result<Vec<_>, _>>()?;
    let origin = interner.scalar(&spec.origin)?;
    Ok(LoadedIet::Exact(Iet::new(lengths, perm, origin)?))
}

pub fn exact_iet_to_json(e: &Iet<AlgebraicNumber>) -> String {
    let spec = IetJson {
        lengths: e.lengths().iter().map(scalar_to_json).collect(),
        signed_permutation: e.perm().entries().to_vec(),
        origin: scalar_to_json(e.origin()),
    };
    serde_json::to_string_pretty(&spec).expect("plain data")
}

pub fn rational_iet_to_json(e: &Iet<BigRational>) -> String {
    let spec = IetJson {
        lengths: e
            .lengths()
            .iter()
            .map(|l| ScalarJson::Rational(l.to_string()))
            .collect(),
        signed_permutation: e.perm().entries().to_vec(),
        origin: ScalarJson::Rational(e.origin().to_string()),
    };
    serde_json::to_string_pretty(&spec).expect("plain data")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecimalExact {
    pub decimal: String,
    pub exact: ScalarJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorJson {
    pub coeffs: Vec<IntJson>,
    pub multiplicity: usize,
    pub irreducible: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    pub matrix: Vec<Vec<i64>>,
    /// Ascending coefficients of `det(tI - M)`.
    pub char_poly: Vec<IntJson>,
    pub factors: Vec<FactorJson>,
    /// Real roots, ascending, 12 decimals.
    pub roots: Vec<String>,
    pub perron_root: DecimalExact,
    pub perron_vector: Vec<DecimalExact>,
    pub verdict: String,
    pub theta2: Option<String>,
}

pub fn spectral_report(m: &IntMatrix, digits: usize) -> Result<SpectralReport, IoError> {
    let data = perron_data(m)?;
    let verdict = conjugate_screen(m)?;
    let dec = |a: &AlgebraicNumber| a.to_decimal(digits);
    Ok(SpectralReport {
        matrix: m.rows(),
        char_poly: data.char_poly.coeffs().iter().map(int_json).collect(),
        factors: data
            .factors
            .iter()
            .map(|(f, k)| FactorJson {
                coeffs: f.coeffs().iter().map(int_json).collect(),
                multiplicity: *k,
                irreducible: true,
            })
            .collect(),
        roots: data
            .real_roots
            .iter()
            .map(|r| dec(&r.value))
            .collect::<Result<_, _>>()?,
        perron_root: DecimalExact {
            decimal: dec(&data.theta1)?,
            exact: scalar_to_json(&data.theta1),
        },
        perron_vector: data
            .right_vector
            .iter()
            .map(|a| {
                Ok(DecimalExact {
                    decimal: dec(a)?,
                    exact: scalar_to_json(a),
                })
            })
            .collect::<Result<_, IoError>>()?,
        verdict: verdict.reason.to_string(),
        theta2: verdict.theta2.as_ref().map(dec).transpose()?,
    })
}
