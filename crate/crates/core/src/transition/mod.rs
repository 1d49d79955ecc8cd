//! Solution-space structure around the transition divisor `x = 0`: components,
//! rank, monodromy classes, the limit to the divisor, the end-to-end pipeline
//! and instanton numbers with an independent line count.

mod instantons;
pub mod pseries;
pub mod schubert;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::algebra::linalg::rank;
use crate::algebra::{CohElem, RatFuncZ};
use crate::gkz::{
    admissible_exponents, build_i_x, build_i_y, build_ibar_y_variant, derive_gkz, derive_y_gkz, frobenius_solve,
    reconcile_printed, scan_exponents, transformed_system, verify_annihilation, AnnihilationSummary,
    DiscrepancyLedger, FrobeniusOutcome, GkzError, ModelId, ModelSpec, SeedFamily,
};
use crate::gkz::IbarVariant;
use crate::series::{DualCoeff, Frame, HalfInt, LogSeries, SeriesError, SeriesKey, DEFAULT_FLOOR};

pub use instantons::{discriminant, instanton_numbers, lines_oracle, InstantonTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransitionError {
    #[error(transparent)]
    Gkz(#[from] GkzError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("no limit at x = 0: {0}")]
    NoLimit(String),
    #[error("probe degree {probe} exceeds the truncation order {order}")]
    ProbeTooHigh { probe: HalfInt, order: HalfInt },
    #[error("model {0} is not Calabi-Yau")]
    NotCalabiYau(ModelId),
    #[error("{0}")]
    Degenerate(String),
}

impl From<crate::operator::OpError> for TransitionError {
    fn from(e: crate::operator::OpError) -> Self {
        TransitionError::Gkz(e.into())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MonodromyClass {
    Trivial,
    HalfTurn,
    Logarithmic,
    Mixed,
}

/// One scalar series per ring basis monomial; zero components are dropped.
pub fn extract_components(f: &LogSeries) -> Vec<LogSeries> {
    let ring = f.ring().clone();
    let mut out = Vec::new();
    for b in 0..ring.dim() {
        let mut comp = LogSeries::with_floor(f.frame(), &ring, f.order(), f.floor());
        for (k, c) in f.terms() {
            let d = DualCoeff {
                re: CohElem::scalar(&ring, c.re.coord(b).clone()),
                inf: CohElem::scalar(&ring, c.inf.coord(b).clone()),
            };
            comp.add_term(*k, d).expect("key already lies in the window");
        }
        if !comp.is_zero() {
            out.push(comp);
        }
    }
    out
}

/// Rank over `Q(z)` of the coefficient matrix on all keys of total degree `<= probe`.
pub fn solution_rank(entries: &[LogSeries], probe: HalfInt) -> Result<usize, TransitionError> {
    for e in entries {
        if e.order() < probe {
            return Err(TransitionError::ProbeTooHigh { probe, order: e.order() });
        }
    }
    let mut keys: Vec<SeriesKey> = entries
        .iter()
        .flat_map(|e| e.terms().map(|(k, _)| *k))
        .filter(|k| k.total() <= probe)
        .collect();
    keys.sort();
    keys.dedup();
    let rows: Vec<Vec<RatFuncZ>> = entries
        .iter()
        .map(|e| {
            let mut row = Vec::new();
            for k in &keys {
                let c = e.coefficient(k).unwrap_or_else(|_| DualCoeff::zero(e.ring()));
                row.extend(c.re.coords_dense().iter().cloned());
                row.extend(c.inf.coords_dense().iter().cloned());
            }
            row
        })
        .collect();
    Ok(rank(&rows))
}

/// Behaviour under `x -> e^(2 pi i) x`, read off the `x`-exponents and `log x` powers.
pub fn classify_monodromy(f: &LogSeries) -> MonodromyClass {
    let half = f.terms().any(|(k, _)| !k.e1.is_integer());
    let log = f.terms().any(|(k, _)| k.l1 > 0);
    match (half, log) {
        (false, false) => MonodromyClass::Trivial,
        (true, false) => MonodromyClass::HalfTurn,
        (false, true) => MonodromyClass::Logarithmic,
        (true, true) => MonodromyClass::Mixed,
    }
}

/// The limit `x -> 0`: keep the terms with `x`-exponent zero, as a series in `y`.
pub fn restrict_to_divisor(f: &LogSeries) -> Result<LogSeries, TransitionError> {
    let class = classify_monodromy(f);
    if class != MonodromyClass::Trivial {
        return Err(TransitionError::NoLimit(format!("monodromy is {class:?}")));
    }
    if let Some((k, _)) = f.terms().find(|(k, _)| k.e1 < HalfInt::ZERO) {
        return Err(TransitionError::NoLimit(format!("negative x-exponent at {k}")));
    }
    let mut out = LogSeries::with_floor(Frame::Y, f.ring(), f.order(), f.floor());
    for (k, c) in f.terms() {
        if k.e1 == HalfInt::ZERO {
            out.add_term(SeriesKey::new(HalfInt::ZERO, k.e2, 0, k.l2), c.clone())?;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonodromyEntry {
    pub entry: String,
    pub class: MonodromyClass,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjectureReport {
    pub id: ModelId,
    pub order: u32,
    pub rank_total: usize,
    pub rank_trivial: usize,
    pub monodromy: Vec<MonodromyEntry>,
    /// The two entries outside the trivial part are exactly `I5`, `I6`.
    pub extended_nontrivial: bool,
    pub limit_verified: bool,
    pub admissible_exponents: Vec<HalfInt>,
    pub ibar_variant: String,
    pub annihilation: BTreeMap<String, Vec<AnnihilationSummary>>,
    pub failed_stages: Vec<String>,
    pub ledger_entries: usize,
    #[serde(skip)]
    pub ledger: DiscrepancyLedger,
    #[serde(skip)]
    pub stage_times: Vec<(String, Duration)>,
}

impl ConjectureReport {
    pub fn passed(&self) -> bool {
        self.failed_stages.is_empty()
    }
}

/// Times each stage and records failures instead of aborting.
struct Runner {
    failed: Vec<String>,
    times: Vec<(String, Duration)>,
}

impl Runner {
    fn run<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T, TransitionError>) -> Option<T> {
        let t = Instant::now();
        let r = f();
        self.times.push((name.to_string(), t.elapsed()));
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.failed.push(format!("{name}: {e}"));
                None
            }
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        if !ok {
            self.failed.push(format!("{name}: {}", detail()));
        }
    }
}

/// Largest `x`-exponent tried when scanning for Frobenius exponents, doubled.
pub const SCAN_MAX_TWICE: u32 = 6;

/// Build every series, derive and transform the operators, solve for the
/// extended solutions and check rank, monodromy and the limit identity.
pub fn run_conjecture_pipeline(spec: &ModelSpec, order: u32) -> ConjectureReport {
    run_conjecture_pipeline_with_floor(spec, order, DEFAULT_FLOOR)
}

/// As [`run_conjecture_pipeline`] with every series windowed at exponent floor `floor`.
pub fn run_conjecture_pipeline_with_floor(spec: &ModelSpec, order: u32, floor: HalfInt) -> ConjectureReport {
    let mut r = Runner { failed: Vec::new(), times: Vec::new() };
    let mut annihilation = BTreeMap::new();
    let mut record = |r: &mut Runner, label: &str, rep: &crate::gkz::AnnihilationReport| {
        r.check(label, rep.all_zero(), || {
            let bad: Vec<String> = rep.summary().into_iter().filter(|s| s.nonzero_terms > 0).map(|s| s.operator).collect();
            format!("nonzero residual for {}", bad.join(", "))
        });
        annihilation.insert(label.to_string(), rep.summary());
    };

    if let Some(rep) = r.run("annihilation of I^X", || {
        Ok(verify_annihilation(&derive_gkz(spec, Frame::Q)?, &build_i_x(spec, order)?.refloor(floor)?)?)
    }) {
        record(&mut r, "I^X by derived operators", &rep);
    }
    let i_y = r.run("annihilation of I^Y", || {
        let i_y = build_i_y(spec, order)?.refloor(floor)?;
        Ok((verify_annihilation(&derive_y_gkz(spec)?, &i_y)?, i_y))
    });
    let i_y = i_y.map(|(rep, s)| {
        record(&mut r, "I^Y by derived operators", &rep);
        s
    });
    let xy_sys = r.run("change of frame", || Ok(transformed_system(spec)?));
    let ibar = r.run("Ibar^Y", || {
        let (variant, _) = crate::gkz::reconcile_variant(spec, order)?;
        Ok((build_ibar_y_variant(spec, &variant, order)?.refloor(floor)?, variant))
    });
    let (ibar, variant) = match ibar {
        Some((s, v)) => (Some(s), Some(v)),
        None => (None, None),
    };
    if let (Some(sys), Some(f)) = (&xy_sys, &ibar) {
        if let Some(rep) = r.run("annihilation of Ibar^Y", || Ok(verify_annihilation(sys, f)?)) {
            record(&mut r, "Ibar^Y by transformed operators", &rep);
        }
    }

    let mut exponents = Vec::new();
    if let Some(sys) = &xy_sys {
        if let Some(scan) = r.run("exponent scan", || Ok(scan_exponents(sys, spec, SCAN_MAX_TWICE, order)?)) {
            let found = admissible_exponents(&scan);
            r.check("exponent scan", found == [HalfInt::ZERO, HalfInt::HALF], || {
                format!("admissible exponents {found:?}")
            });
            exponents = found;
        }
    }

    let extended = xy_sys.as_ref().and_then(|sys| {
        r.run("extended solution", || match frobenius_solve(sys, spec, HalfInt::HALF, SeedFamily::Extended, order)? {
            FrobeniusOutcome::Solved { series, .. } => Ok(series.refloor(floor)?),
            FrobeniusOutcome::Obstructed { at, reason } => {
                Err(TransitionError::Degenerate(format!("obstructed at {at:?}: {reason}")))
            }
        })
    });
    if let (Some(sys), Some(f)) = (&xy_sys, &extended) {
        if let Some(rep) = r.run("annihilation of the extended solution", || Ok(verify_annihilation(sys, f)?)) {
            record(&mut r, "extended solution by transformed operators", &rep);
        }
    }

    let mut rank_total = 0;
    let mut rank_trivial = 0;
    let mut monodromy = Vec::new();
    let mut extended_nontrivial = false;
    if let (Some(bar), Some(ext)) = (&ibar, &extended) {
        let (i5, i6) = ext.u_project();
        let mut entries: Vec<(String, LogSeries)> = extract_components(bar)
            .into_iter()
            .enumerate()
            .map(|(n, s)| (format!("component {}", n + 1), s))
            .collect();
        entries.push(("I5".into(), i5));
        entries.push(("I6".into(), i6));
        let probe = HalfInt::int(order.min(4) as i64);
        let ranks = r.run("rank", || {
            let all: Vec<LogSeries> = entries.iter().map(|(_, s)| s.clone()).collect();
            let trivial: Vec<LogSeries> = entries
                .iter()
                .filter(|(_, s)| classify_monodromy(s) == MonodromyClass::Trivial)
                .map(|(_, s)| s.clone())
                .collect();
            Ok((solution_rank(&all, probe)?, solution_rank(&trivial, probe)?))
        });
        if let Some((t, tr)) = ranks {
            rank_total = t;
            rank_trivial = tr;
        }
        r.check("rank", rank_total == 6 && rank_trivial == 4, || {
            format!("rank_total {rank_total}, rank_trivial {rank_trivial}")
        });
        monodromy = entries
            .iter()
            .map(|(n, s)| MonodromyEntry { entry: n.clone(), class: classify_monodromy(s) })
            .collect();
        let nontrivial: Vec<&MonodromyEntry> = monodromy.iter().filter(|m| m.class != MonodromyClass::Trivial).collect();
        extended_nontrivial = nontrivial.len() == 2
            && nontrivial[0].entry == "I5"
            && nontrivial[0].class == MonodromyClass::HalfTurn
            && nontrivial[1].entry == "I6"
            && nontrivial[1].class == MonodromyClass::Mixed;
        r.check("monodromy", extended_nontrivial && monodromy.len() == 6, || {
            format!("classes {:?}", monodromy.iter().map(|m| m.class).collect::<Vec<_>>())
        });
    }

    let mut limit_verified = false;
    if let (Some(bar), Some(i_y)) = (&ibar, &i_y) {
        if let Some(ok) = r.run("limit", || {
            let lim = restrict_to_divisor(bar)?;
            Ok(lim.agrees_through(i_y, HalfInt::int(order as i64))?)
        }) {
            limit_verified = ok;
        }
        r.check("limit", limit_verified, || "restriction of Ibar^Y differs from I^Y".into());
    }

    let ledger = r.run("ledger", || Ok(reconcile_printed(spec, order)?)).unwrap_or_default();

    ConjectureReport {
        id: spec.id,
        order,
        rank_total,
        rank_trivial,
        monodromy,
        extended_nontrivial,
        limit_verified,
        admissible_exponents: exponents,
        ibar_variant: variant.as_ref().map(IbarVariant::describe).unwrap_or_default(),
        annihilation,
        failed_stages: r.failed,
        ledger_entries: ledger.entries.len(),
        ledger,
        stage_times: r.times,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gkz::{build_ibar_y, IbarPolicy};

    #[test]
    fn local_components_and_rank() {
        let spec = ModelSpec::new(ModelId::Local);
        let bar = build_ibar_y(&spec, 4, IbarPolicy::Structural).unwrap();
        let comps = extract_components(&bar);
        assert_eq!(comps.len(), 4);
        assert_eq!(solution_rank(&comps, HalfInt::int(3)).unwrap(), 4);
        assert!(comps.iter().all(|c| classify_monodromy(c) == MonodromyClass::Trivial));
        let twice = vec![comps[0].clone(), comps[0].clone()];
        assert_eq!(solution_rank(&twice, HalfInt::int(3)).unwrap(), 1);
        assert!(solution_rank(&comps, HalfInt::int(5)).is_err());
    }

    #[test]
    fn i_x_has_six_components() {
        let spec = ModelSpec::new(ModelId::Local);
        assert_eq!(extract_components(&build_i_x(&spec, 2).unwrap()).len(), 6);
        let zero = LogSeries::new(Frame::XY, &spec.y_ring, HalfInt::int(2));
        assert!(extract_components(&zero).is_empty());
    }

    #[test]
    fn limit_recovers_i_y_and_rejects_half_turns() {
        let spec = ModelSpec::new(ModelId::T33);
        let bar = build_ibar_y(&spec, 4, IbarPolicy::Reconcile).unwrap();
        let lim = restrict_to_divisor(&bar).unwrap();
        assert!(lim.agrees_through(&build_i_y(&spec, 4).unwrap(), HalfInt::int(4)).unwrap());
        let sys = transformed_system(&spec).unwrap();
        let ext = frobenius_solve(&sys, &spec, HalfInt::HALF, SeedFamily::Extended, 3).unwrap();
        let (i5, i6) = ext.series().unwrap().u_project();
        assert_eq!(classify_monodromy(&i5), MonodromyClass::HalfTurn);
        assert_eq!(classify_monodromy(&i6), MonodromyClass::Mixed);
        assert!(matches!(restrict_to_divisor(&i5), Err(TransitionError::NoLimit(_))));
    }

    #[test]
    fn floor_above_the_operator_shift_is_reported() {
        let spec = ModelSpec::new(ModelId::Local);
        let ok = run_conjecture_pipeline_with_floor(&spec, 2, HalfInt::int(-1));
        assert!(ok.failed_stages.iter().all(|s| !s.contains("underflow")), "{:?}", ok.failed_stages);
        let bad = run_conjecture_pipeline_with_floor(&spec, 2, HalfInt::ZERO);
        assert!(bad.failed_stages.iter().any(|s| s.contains("underflow")));
        let i_y = build_i_y(&spec, 2).unwrap();
        assert!(i_y.refloor(HalfInt::int(1)).is_err());
    }
}
