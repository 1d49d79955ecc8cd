//! Model registry, hypergeometric series, GKZ operators and Frobenius solutions
//! for the three transition models.

mod derive;
mod frobenius;
mod hyper;
mod printed;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{AlgebraError, CohElem, RingPresentation};
use crate::operator::OpError;
use crate::series::SeriesError;

pub use derive::{derive_gkz, derive_y_gkz, transformed_system, verify_annihilation, AnnihilationReport, AnnihilationSummary};
pub use frobenius::{admissible_exponents, frobenius_solve, scan_exponents, FrobeniusOutcome, ScanEntry, SeedFamily};
pub use printed::{parse_printed, printed_operators, printed_system, reconcile_printed, DiscrepancyLedger, LedgerEntry, PrintedOperator};
pub use hyper::{build_i_x, build_i_y, build_ibar_y, build_ibar_y_variant, check_variant, reconcile_variant, FactorKind, HyperFactor, HyperSeries, IbarPolicy, IbarVariant, VariantCheck};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GkzError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Operator(#[from] OpError),
    #[error("quotient of doubly-infinite products is not defined: {0}")]
    IllDefined(String),
    #[error("no variant of the {0} series satisfies the structural constraints")]
    NoVariant(String),
    #[error("unknown model '{0}'")]
    UnknownModel(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    Local,
    T24,
    T33,
}

impl ModelId {
    pub const ALL: [ModelId; 3] = [ModelId::Local, ModelId::T24, ModelId::T33];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Local => "local",
            ModelId::T24 => "t24",
            ModelId::T33 => "t33",
        }
    }

    /// The two compact models have Calabi-Yau `Y`; the local model does not.
    pub fn is_calabi_yau(self) -> bool {
        self != ModelId::Local
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelId {
    type Err = GkzError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(ModelId::Local),
            "t24" => Ok(ModelId::T24),
            "t33" => Ok(ModelId::T33),
            other => Err(GkzError::UnknownModel(other.to_string())),
        }
    }
}

/// A toric divisor of the `X` ambient space with its degree on the two curve classes.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct XDivisor {
    pub degree: (i64, i64),
    /// True for the divisor whose factor is a quotient of doubly-infinite products.
    pub doubly_infinite: bool,
}

/// Weight data of one transition model.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub id: ModelId,
    pub x_divisors: Vec<XDivisor>,
    pub x_twists: Vec<(i64, i64)>,
    pub x_ring: Arc<RingPresentation>,
    pub y_divisors: usize,
    pub y_twists: Vec<i64>,
    pub y_ring: Arc<RingPresentation>,
}

impl ModelSpec {
    pub fn new(id: ModelId) -> Self {
        let mut x_divisors = vec![
            XDivisor {
                degree: (1, 0),
                doubly_infinite: false
            };
            5
        ];
        x_divisors.push(XDivisor {
            degree: (0, 1),
            doubly_infinite: false,
        });
        x_divisors.push(XDivisor {
            degree: (-1, 1),
            doubly_infinite: true,
        });
        let (x_twists, y_twists) = match id {
            ModelId::Local => (vec![(2, 0), (2, 0)], vec![2, 2]),
            ModelId::T24 => (vec![(2, 0), (2, 2)], vec![2, 4]),
            ModelId::T33 => (vec![(2, 1), (2, 1)], vec![3, 3]),
        };
        ModelSpec {
            id,
            x_divisors,
            x_twists,
            x_ring: RingPresentation::x_ambient(),
            y_divisors: 6,
            y_twists,
            y_ring: RingPresentation::y_ambient(),
        }
    }

    pub fn all() -> Vec<ModelSpec> {
        ModelId::ALL.iter().map(|&id| ModelSpec::new(id)).collect()
    }

    /// The `X` class of degree `(a, b)`, namely `a h + b xi`.
    pub fn x_class(&self, deg: (i64, i64)) -> CohElem {
        CohElem::linear(&self.x_ring, &[("h", deg.0), ("xi", deg.1)])
    }

    pub fn y_class(&self, t: i64) -> CohElem {
        CohElem::linear(&self.y_ring, &[("p", t)])
    }

    pub fn x_euler(&self) -> CohElem {
        self.x_twists
            .iter()
            .fold(CohElem::one(&self.x_ring), |acc, &t| &acc * &self.x_class(t))
    }

    pub fn y_euler(&self) -> CohElem {
        self.y_twists
            .iter()
            .fold(CohElem::one(&self.y_ring), |acc, &t| &acc * &self.y_class(t))
    }

    /// Sum of divisor degrees minus sum of twist degrees on the `X` side.
    /// This is also the `z`-weight of `q1`, `q2` in a homogeneous operator.
    pub fn x_defect(&self) -> (i64, i64) {
        let d = self
            .x_divisors
            .iter()
            .fold((0, 0), |a, v| (a.0 + v.degree.0, a.1 + v.degree.1));
        self.x_twists.iter().fold(d, |a, t| (a.0 - t.0, a.1 - t.1))
    }

    pub fn y_defect(&self) -> i64 {
        self.y_divisors as i64 - self.y_twists.iter().sum::<i64>()
    }

    /// Degree of the `Y` complete intersection, the product of twist degrees.
    pub fn y_degree(&self) -> i64 {
        self.y_twists.iter().product()
    }

    /// The contraction `h, xi -> p` sends twist `(a, b)` to `a + b`; the twists
    /// and the anticanonical defects on both sides must agree under it.
    pub fn self_test(&self) -> Result<(), String> {
        let mut mapped: Vec<i64> = self.x_twists.iter().map(|(a, b)| a + b).collect();
        let mut y = self.y_twists.clone();
        mapped.sort();
        y.sort();
        if mapped != y {
            return Err(format!("{}: X twists {:?} do not contract to Y twists {:?}", self.id, self.x_twists, self.y_twists));
        }
        let (d1, d2) = self.x_defect();
        if d1 + d2 != self.y_defect() {
            return Err(format!("{}: defects ({d1},{d2}) and {} disagree", self.id, self.y_defect()));
        }
        if self.x_divisors.iter().filter(|d| d.doubly_infinite).count() != 1 {
            return Err(format!("{}: exactly one doubly-infinite divisor expected", self.id));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_pass_self_test() {
        for spec in ModelSpec::all() {
            spec.self_test().unwrap();
        }
        assert_eq!(ModelSpec::new(ModelId::Local).x_defect(), (0, 2));
        assert_eq!(ModelSpec::new(ModelId::T24).x_defect(), (0, 0));
        assert_eq!(ModelSpec::new(ModelId::T33).y_degree(), 9);
    }

    #[test]
    fn model_names_round_trip() {
        for id in ModelId::ALL {
            assert_eq!(id.name().parse::<ModelId>().unwrap(), id);
        }
        assert!("quintic".parse::<ModelId>().is_err());
    }
}
