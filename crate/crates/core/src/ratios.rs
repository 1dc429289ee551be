//! Financial ratios, the classic scoring models built on them, and the
//! named feature sets A to E.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, FinancialStatement, Label};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum RatioError {
    #[error("ratio {0} is not available")]
    MissingRatio(RatioId),
    #[error("unknown feature set `{0}`")]
    UnknownSetName(String),
    #[error("unknown ratio `{0}`")]
    UnknownRatio(String),
    #[error("{} firm/ratio pairs are not computable, first: firm `{}` lacks {}", .offenders.len(), .offenders[0].0, .offenders[0].1)]
    MissingRatioForFirm { offenders: Vec<(String, RatioId)> },
    #[error("firm `{0}` has no bankrupt/healthy label")]
    UnlabeledFirmInTraining(String),
    #[error("Ohlson coefficient {0} is not finite")]
    NonFiniteCoefficient(&'static str),
}

/// Canonical ratio identifiers. The declaration order is the bit order of
/// the feature-selection chromosome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RatioId {
    X1,
    X2,
    X3,
    X4,
    X5,
    TLTA,
    WCTA,
    CLCA,
    NITA,
    FUTL,
    NITL,
    CACL,
    OENEG,
    INTWO,
    CHIN,
}

impl RatioId {
    pub const COUNT: usize = 15;

    pub const ALL: [RatioId; RatioId::COUNT] = [
        RatioId::X1,
        RatioId::X2,
        RatioId::X3,
        RatioId::X4,
        RatioId::X5,
        RatioId::TLTA,
        RatioId::WCTA,
        RatioId::CLCA,
        RatioId::NITA,
        RatioId::FUTL,
        RatioId::NITL,
        RatioId::CACL,
        RatioId::OENEG,
        RatioId::INTWO,
        RatioId::CHIN,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            RatioId::X1 => "X1",
            RatioId::X2 => "X2",
            RatioId::X3 => "X3",
            RatioId::X4 => "X4",
            RatioId::X5 => "X5",
            RatioId::TLTA => "TLTA",
            RatioId::WCTA => "WCTA",
            RatioId::CLCA => "CLCA",
            RatioId::NITA => "NITA",
            RatioId::FUTL => "FUTL",
            RatioId::NITL => "NITL",
            RatioId::CACL => "CACL",
            RatioId::OENEG => "OENEG",
            RatioId::INTWO => "INTWO",
            RatioId::CHIN => "CHIN",
        }
    }
}

impl fmt::Display for RatioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RatioId {
    type Err = RatioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RatioId::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| RatioError::UnknownRatio(s.to_string()))
    }
}

/// Ratios of one firm. Ratios whose divisor is zero are absent and listed in
/// `warnings`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioVector {
    pub firm_id: String,
    pub label: Label,
    values: [Option<f64>; RatioId::COUNT],
    pub warnings: Vec<RatioId>,
}

impl RatioVector {
    /// Builds a vector directly from ratio values; unlisted ratios are absent.
    pub fn from_values(firm_id: impl Into<String>, label: Label, values: &[(RatioId, f64)]) -> Self {
        let mut v = RatioVector { firm_id: firm_id.into(), label, values: [None; RatioId::COUNT], warnings: Vec::new() };
        for &(id, x) in values {
            v.values[id.index()] = Some(x);
        }
        v
    }

    pub fn get(&self, id: RatioId) -> Option<f64> {
        self.values[id.index()]
    }

    pub fn require(&self, id: RatioId) -> Result<f64, RatioError> {
        self.get(id).ok_or(RatioError::MissingRatio(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = (RatioId, f64)> + '_ {
        RatioId::ALL.into_iter().filter_map(|id| self.get(id).map(|v| (id, v)))
    }

    /// Feature values in `fs` order, or the first ratio that is absent.
    pub fn features(&self, members: &[RatioId]) -> Result<Vec<f64>, RatioId> {
        members.iter().map(|&id| self.get(id).ok_or(id)).collect()
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

pub fn compute_ratios(s: &FinancialStatement) -> RatioVector {
    let ta = s.total_assets;
    let tl = s.total_liabilities;
    let x1 = ratio(s.working_capital(), ta);
    let ni = s.net_income;
    let ni_prev = s.net_income_prev;

    let mut values = [None; RatioId::COUNT];
    let mut set = |id: RatioId, v: Option<f64>| values[id.index()] = v;
    set(RatioId::X1, x1);
    set(RatioId::X2, ratio(s.retained_earnings, ta));
    set(RatioId::X3, ratio(s.ebit, ta));
    set(RatioId::X4, ratio(s.market_value_equity, tl));
    set(RatioId::X5, ratio(s.sales, ta));
    set(RatioId::TLTA, ratio(tl, ta));
    set(RatioId::WCTA, x1);
    set(RatioId::CLCA, ratio(s.current_liabilities, s.current_assets));
    set(RatioId::NITA, ratio(ni, ta));
    set(RatioId::FUTL, ratio(s.funds_from_operations, tl));
    set(RatioId::NITL, ratio(ni, tl));
    set(RatioId::CACL, ratio(s.current_assets, s.current_liabilities));
    set(RatioId::OENEG, Some(if tl > ta { 1.0 } else { 0.0 }));
    set(RatioId::INTWO, Some(if ni < 0.0 && ni_prev < 0.0 { 1.0 } else { 0.0 }));
    set(RatioId::CHIN, ratio(ni - ni_prev, ni.abs() + ni_prev.abs()));

    let warnings = RatioId::ALL.into_iter().filter(|id| values[id.index()].is_none()).collect();
    RatioVector { firm_id: s.firm_id.clone(), label: s.label, values, warnings }
}

pub fn compute_all(dataset: &Dataset) -> Vec<RatioVector> {
    dataset.statements.iter().map(compute_ratios).collect()
}

pub const ALTMAN_WEIGHTS: [(RatioId, f64); 5] = [
    (RatioId::X1, 0.012),
    (RatioId::X2, 0.014),
    (RatioId::X3, 0.033),
    (RatioId::X4, 0.006),
    (RatioId::X5, 0.999),
];

/// Altman discriminant score with its original weights.
pub fn altman_z(r: &RatioVector) -> Result<f64, RatioError> {
    ALTMAN_WEIGHTS.iter().try_fold(0.0, |acc, &(id, w)| Ok(acc + w * r.require(id)?))
}

/// Intercept and slopes of Ohlson's logit. There are no defaults: the
/// caller must supply estimated values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlsonCoefficients {
    pub a: f64,
    /// Slopes for TLTA, WCTA, CLCA, OENEG, NITA, FUTL, INTWO, CHIN.
    pub b: [f64; 8],
}

pub const OHLSON_VARIABLES: [RatioId; 8] = [
    RatioId::TLTA,
    RatioId::WCTA,
    RatioId::CLCA,
    RatioId::OENEG,
    RatioId::NITA,
    RatioId::FUTL,
    RatioId::INTWO,
    RatioId::CHIN,
];

impl OhlsonCoefficients {
    pub fn new(a: f64, b: [f64; 8]) -> Result<Self, RatioError> {
        if !a.is_finite() {
            return Err(RatioError::NonFiniteCoefficient("a"));
        }
        const NAMES: [&str; 8] = ["b1", "b2", "b3", "b4", "b5", "b6", "b7", "b8"];
        if let Some(i) = b.iter().position(|v| !v.is_finite()) {
            return Err(RatioError::NonFiniteCoefficient(NAMES[i]));
        }
        Ok(OhlsonCoefficients { a, b })
    }
}

pub fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Ohlson bankruptcy probability `logistic(a + sum b_k v_k)`.
pub fn ohlson_score(r: &RatioVector, c: &OhlsonCoefficients) -> Result<f64, RatioError> {
    let mut t = c.a;
    for (&id, &b) in OHLSON_VARIABLES.iter().zip(&c.b) {
        t += b * r.require(id)?;
    }
    Ok(logistic(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSetName {
    #[serde(rename = "A_Altman")]
    Altman,
    #[serde(rename = "B_Ohlson")]
    Ohlson,
    #[serde(rename = "C_Zmijewski")]
    Zmijewski,
    #[serde(rename = "D_Shumway")]
    Shumway,
    #[serde(rename = "E_Union")]
    Union,
    Custom,
}

impl FeatureSetName {
    pub const CANONICAL: [FeatureSetName; 5] = [
        FeatureSetName::Altman,
        FeatureSetName::Ohlson,
        FeatureSetName::Zmijewski,
        FeatureSetName::Shumway,
        FeatureSetName::Union,
    ];
}

impl FromStr for FeatureSetName {
    type Err = RatioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" | "A_ALTMAN" | "ALTMAN" => Ok(FeatureSetName::Altman),
            "B" | "B_OHLSON" | "OHLSON" => Ok(FeatureSetName::Ohlson),
            "C" | "C_ZMIJEWSKI" | "ZMIJEWSKI" => Ok(FeatureSetName::Zmijewski),
            "D" | "D_SHUMWAY" | "SHUMWAY" => Ok(FeatureSetName::Shumway),
            "E" | "E_UNION" | "UNION" => Ok(FeatureSetName::Union),
            _ => Err(RatioError::UnknownSetName(s.to_string())),
        }
    }
}

/// Named, canonically ordered, duplicate-free list of ratios.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub name: FeatureSetName,
    pub members: Vec<RatioId>,
}

impl FeatureSet {
    pub fn custom(members: impl IntoIterator<Item = RatioId>) -> Self {
        FeatureSet { name: FeatureSetName::Custom, members: canonical(members) }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: RatioId) -> bool {
        self.members.contains(&id)
    }
}

fn canonical(members: impl IntoIterator<Item = RatioId>) -> Vec<RatioId> {
    let mut v: Vec<RatioId> = members.into_iter().collect();
    v.sort();
    v.dedup();
    v
}

pub fn feature_set(name: FeatureSetName) -> FeatureSet {
    use RatioId::*;
    let members = match name {
        FeatureSetName::Altman => vec![X1, X2, X3, X4, X5],
        FeatureSetName::Ohlson => vec![TLTA, WCTA, CLCA, NITA, FUTL],
        FeatureSetName::Zmijewski => vec![NITL, TLTA, CACL],
        FeatureSetName::Shumway => vec![NITL, TLTA],
        FeatureSetName::Union => {
            let parts = [FeatureSetName::Ohlson, FeatureSetName::Zmijewski, FeatureSetName::Shumway]
                .map(feature_set);
            return FeatureSet { name, members: union_sets(&parts).members };
        }
        FeatureSetName::Custom => Vec::new(),
    };
    FeatureSet { name, members: canonical(members) }
}

/// Looks a set up by letter (`A`..`E`) or full name.
pub fn feature_set_by_name(name: &str) -> Result<FeatureSet, RatioError> {
    name.parse::<FeatureSetName>().map(feature_set)
}

/// Union in canonical ratio order. A single input keeps its name.
pub fn union_sets(sets: &[FeatureSet]) -> FeatureSet {
    let members = canonical(sets.iter().flat_map(|s| s.members.iter().copied()));
    let name = match sets {
        [] => FeatureSetName::Custom,
        [first, rest @ ..] if rest.iter().all(|s| s.name == first.name) => first.name,
        _ => FeatureSetName::Custom,
    };
    FeatureSet { name, members }
}

/// Training design: features in firm order plus the 0/1 target.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub x: FeatureMatrix,
    pub y: Vec<f64>,
    pub firm_ids: Vec<String>,
}

pub fn project(dataset: &Dataset, fs: &FeatureSet) -> Result<Projection, RatioError> {
    project_ratios(&compute_all(dataset), &fs.members)
}

/// Projects precomputed ratio vectors; every firm must be labelled and have
/// every requested ratio.
pub fn project_ratios(ratios: &[RatioVector], members: &[RatioId]) -> Result<Projection, RatioError> {
    let mut rows = Vec::with_capacity(ratios.len());
    let mut y = Vec::with_capacity(ratios.len());
    let mut offenders = Vec::new();
    for r in ratios {
        for &id in members {
            if r.get(id).is_none() {
                offenders.push((r.firm_id.clone(), id));
            }
        }
        if offenders.is_empty() {
            rows.push(r.features(members).expect("checked above"));
        }
    }
    if !offenders.is_empty() {
        return Err(RatioError::MissingRatioForFirm { offenders });
    }
    for r in ratios {
        y.push(r.label.target().ok_or_else(|| RatioError::UnlabeledFirmInTraining(r.firm_id.clone()))?);
    }
    let x = if rows.is_empty() { FeatureMatrix::zeros(0, members.len()) } else { FeatureMatrix::from_rows(&rows) };
    Ok(Projection { x, y, firm_ids: ratios.iter().map(|r| r.firm_id.clone()).collect() })
}

/// CSV of `firm_id,label,<ratios...>`; absent ratios are empty fields.
pub fn write_ratios_csv<W: Write>(ratios: &[RatioVector], members: &[RatioId], writer: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["firm_id".to_string(), "label".to_string()];
    header.extend(members.iter().map(|id| id.to_string()));
    wtr.write_record(&header)?;
    for r in ratios {
        let mut rec = vec![r.firm_id.clone(), r.label.to_string()];
        rec.extend(members.iter().map(|&id| r.get(id).map(|v| v.to_string()).unwrap_or_default()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic;
    use proptest::prelude::*;

    fn statement() -> FinancialStatement {
        FinancialStatement {
            firm_id: "F".into(),
            period: 2000,
            total_assets: 1000.0,
            total_liabilities: 400.0,
            current_assets: 300.0,
            current_liabilities: 150.0,
            retained_earnings: 50.0,
            ebit: 80.0,
            market_value_equity: 900.0,
            sales: 1200.0,
            net_income: 60.0,
            net_income_prev: 40.0,
            net_income_prev2: None,
            funds_from_operations: 70.0,
            label: Label::Healthy,
        }
    }

    #[test]
    fn ratio_definitions() {
        let r = compute_ratios(&statement());
        let expect = [
            (RatioId::X1, 0.15),
            (RatioId::X2, 0.05),
            (RatioId::X3, 0.08),
            (RatioId::X4, 2.25),
            (RatioId::X5, 1.2),
            (RatioId::TLTA, 0.4),
            (RatioId::WCTA, 0.15),
            (RatioId::CLCA, 0.5),
            (RatioId::NITA, 0.06),
            (RatioId::FUTL, 0.175),
            (RatioId::NITL, 0.15),
            (RatioId::CACL, 2.0),
            (RatioId::OENEG, 0.0),
            (RatioId::INTWO, 0.0),
            (RatioId::CHIN, 0.2),
        ];
        for (id, v) in expect {
            assert!((r.get(id).unwrap() - v).abs() < 1e-12, "{id}");
        }
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn indicators_and_chin() {
        let mut s = statement();
        s.total_liabilities = 1200.0;
        s.net_income = -5.0;
        s.net_income_prev = -1.0;
        let r = compute_ratios(&s);
        assert_eq!(r.get(RatioId::OENEG), Some(1.0));
        assert_eq!(r.get(RatioId::INTWO), Some(1.0));

        s.net_income = 10.0;
        s.net_income_prev = -10.0;
        assert_eq!(compute_ratios(&s).get(RatioId::CHIN), Some(1.0));

        s.net_income_prev = 10.0;
        assert_eq!(compute_ratios(&s).get(RatioId::CHIN), Some(0.0));
    }

    #[test]
    fn zero_divisors_are_omitted_with_warning() {
        let mut s = statement();
        s.total_liabilities = 0.0;
        s.current_liabilities = 0.0;
        s.net_income = 0.0;
        s.net_income_prev = 0.0;
        let r = compute_ratios(&s);
        for id in [RatioId::X4, RatioId::FUTL, RatioId::NITL, RatioId::CACL, RatioId::CHIN] {
            assert_eq!(r.get(id), None);
            assert!(r.warnings.contains(&id));
        }
        assert_eq!(r.get(RatioId::TLTA), Some(0.0));

        let mut s = statement();
        s.current_assets = 0.0;
        assert_eq!(compute_ratios(&s).get(RatioId::CLCA), None);
    }

    #[test]
    fn altman_cases() {
        let zero = RatioVector::from_values("z", Label::Unknown, &ALTMAN_WEIGHTS.map(|(id, _)| (id, 0.0)));
        assert_eq!(altman_z(&zero).unwrap(), 0.0);
        let r = RatioVector::from_values(
            "r",
            Label::Unknown,
            &[(RatioId::X1, 0.1), (RatioId::X2, 0.2), (RatioId::X3, 0.3), (RatioId::X4, 0.4), (RatioId::X5, 1.0)],
        );
        assert!((altman_z(&r).unwrap() - 1.0153).abs() < 1e-12);
        let missing = RatioVector::from_values(
            "m",
            Label::Unknown,
            &[(RatioId::X1, 0.1), (RatioId::X2, 0.2), (RatioId::X3, 0.3), (RatioId::X5, 1.0)],
        );
        assert_eq!(altman_z(&missing), Err(RatioError::MissingRatio(RatioId::X4)));
    }

    fn ohlson_vector(tlta: f64) -> RatioVector {
        let mut vals: Vec<(RatioId, f64)> = OHLSON_VARIABLES.iter().map(|&id| (id, 0.0)).collect();
        vals[0].1 = tlta;
        RatioVector::from_values("o", Label::Unknown, &vals)
    }

    #[test]
    fn ohlson_cases() {
        let r = ohlson_vector(1.0);
        let zero = OhlsonCoefficients::new(0.0, [0.0; 8]).unwrap();
        assert_eq!(ohlson_score(&r, &zero).unwrap(), 0.5);
        let sat = OhlsonCoefficients::new(20.0, [0.0; 8]).unwrap();
        assert!(ohlson_score(&r, &sat).unwrap() > 0.999999);
        let mut b = [0.0; 8];
        b[0] = 1.0;
        let c = OhlsonCoefficients::new(0.0, b).unwrap();
        assert!((ohlson_score(&r, &c).unwrap() - 0.731_058_578_630_005).abs() < 1e-12);

        let partial = RatioVector::from_values("p", Label::Unknown, &[(RatioId::TLTA, 1.0)]);
        assert_eq!(ohlson_score(&partial, &c), Err(RatioError::MissingRatio(RatioId::WCTA)));
        assert!(OhlsonCoefficients::new(f64::NAN, [0.0; 8]).is_err());
    }

    #[test]
    fn named_sets() {
        use RatioId::*;
        assert_eq!(feature_set(FeatureSetName::Altman).members, vec![X1, X2, X3, X4, X5]);
        assert_eq!(feature_set(FeatureSetName::Zmijewski).members, vec![TLTA, NITL, CACL]);
        let e = feature_set(FeatureSetName::Union);
        assert_eq!(e.members, vec![TLTA, WCTA, CLCA, NITA, FUTL, NITL, CACL]);
        assert_eq!(e.len(), 7);
        let bcd = union_sets(&[
            feature_set(FeatureSetName::Ohlson),
            feature_set(FeatureSetName::Zmijewski),
            feature_set(FeatureSetName::Shumway),
        ]);
        assert_eq!(bcd.members, e.members);
        let a = feature_set(FeatureSetName::Altman);
        assert_eq!(union_sets(std::slice::from_ref(&a)), a);
        let c = feature_set(FeatureSetName::Zmijewski);
        assert_eq!(union_sets(&[c.clone(), c.clone()]), c);
        assert!(matches!(feature_set_by_name("F"), Err(RatioError::UnknownSetName(_))));
        assert_eq!(feature_set_by_name("e").unwrap(), e);
    }

    #[test]
    fn projection_shape_and_missing() {
        let ds = generate_synthetic(5, 0.4, 2.0, 3).unwrap();
        let p = project(&ds, &feature_set(FeatureSetName::Shumway)).unwrap();
        assert_eq!((p.x.n_rows(), p.x.n_cols()), (5, 2));
        assert_eq!(p.y.iter().filter(|&&v| v == 1.0).count(), 2);

        let mut ds = ds;
        ds.statements[2].total_liabilities = 0.0;
        let firm = ds.statements[2].firm_id.clone();
        match project(&ds, &feature_set(FeatureSetName::Shumway)) {
            Err(RatioError::MissingRatioForFirm { offenders }) => {
                assert_eq!(offenders, vec![(firm, RatioId::NITL)]);
            }
            other => panic!("unexpected {other:?}"),
        }
        ds.statements[2].total_liabilities = 10.0;
        ds.statements[0].label = Label::Unknown;
        assert!(matches!(
            project(&ds, &feature_set(FeatureSetName::Shumway)),
            Err(RatioError::UnlabeledFirmInTraining(_))
        ));
    }

    #[test]
    fn ratios_csv_layout() {
        let mut s = statement();
        s.total_liabilities = 0.0;
        let r = compute_ratios(&s);
        let mut out = Vec::new();
        write_ratios_csv(&[r], &[RatioId::TLTA, RatioId::NITL], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "firm_id,label,TLTA,NITL\nF,healthy,0,\n");
    }

    proptest! {
        #[test]
        fn union_is_commutative_and_associative(
            a in proptest::collection::vec(0usize..15, 0..8),
            b in proptest::collection::vec(0usize..15, 0..8),
            c in proptest::collection::vec(0usize..15, 0..8),
        ) {
            let mk = |v: &Vec<usize>| FeatureSet::custom(v.iter().map(|&i| RatioId::ALL[i]));
            let (a, b, c) = (mk(&a), mk(&b), mk(&c));
            prop_assert_eq!(union_sets(&[a.clone(), b.clone()]), union_sets(&[b.clone(), a.clone()]));
            let left = union_sets(&[union_sets(&[a.clone(), b.clone()]), c.clone()]);
            let right = union_sets(&[a.clone(), union_sets(&[b.clone(), c.clone()])]);
            prop_assert_eq!(left, right);
            prop_assert_eq!(union_sets(&[a.clone(), a.clone()]), a);
        }

        #[test]
        fn ratios_are_scale_free(k in prop_oneof![Just(1000.0), Just(1e6), Just(10.0)], seed in 0u64..50) {
            let ds = generate_synthetic(8, 0.5, 2.0, seed).unwrap();
            for s in &ds.statements {
                let a = compute_ratios(s);
                let b = compute_ratios(&s.scaled(k));
                for id in RatioId::ALL {
                    prop_assert_eq!(a.get(id), b.get(id));
                }
            }
        }

        #[test]
        fn altman_is_linear(
            u in proptest::array::uniform5(-5.0f64..5.0),
            v in proptest::array::uniform5(-5.0f64..5.0),
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
        ) {
            let ids = ALTMAN_WEIGHTS.map(|(id, _)| id);
            let mk = |x: [f64; 5]| RatioVector::from_values("l", Label::Unknown, &std::array::from_fn::<_, 5, _>(|i| (ids[i], x[i])));
            let mix: [f64; 5] = std::array::from_fn(|i| alpha * u[i] + beta * v[i]);
            let lhs = altman_z(&mk(mix)).unwrap();
            let rhs = alpha * altman_z(&mk(u)).unwrap() + beta * altman_z(&mk(v)).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
