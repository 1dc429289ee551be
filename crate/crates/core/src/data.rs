//! Firm financial statements: CSV ingestion, validation and a seeded
//! synthetic generator.
//!
//! Every monetary field is a plain `f64` without unit. All downstream
//! modelling works on ratios, so the currency unit never matters.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact header of the on-disk statement CSV.
pub const CSV_HEADER: [&str; 15] = [
    "firm_id",
    "period",
    "total_assets",
    "total_liabilities",
    "current_assets",
    "current_liabilities",
    "retained_earnings",
    "ebit",
    "market_value_equity",
    "sales",
    "net_income",
    "net_income_prev",
    "net_income_prev2",
    "funds_from_operations",
    "label",
];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: column `{column}` is not a finite number")]
    NonNumericField { row: usize, column: String },
    #[error("row {row}: total_assets must be > 0")]
    NonPositiveTotalAssets { row: usize },
    #[error("row {row}: column `{column}` must be >= 0")]
    NegativeField { row: usize, column: String },
    #[error("row {row}: firm_id is empty")]
    EmptyFirmId { row: usize },
    #[error("row {row}: unknown label `{value}` (expected bankrupt, healthy or unknown)")]
    InvalidLabel { row: usize, value: String },
    #[error("duplicate (firm_id, period) = ({firm_id}, {period})")]
    DuplicateFirmPeriod { firm_id: String, period: i32 },
    #[error("bankrupt fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("separation {0} must be finite and >= 0")]
    InvalidSeparation(f64),
    #[error("at least 4 firms are required, got {0}")]
    TooFewFirms(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bankrupt,
    Healthy,
    Unknown,
}

impl Label {
    /// Binary regression target: bankrupt = 1, healthy = 0.
    pub fn target(self) -> Option<f64> {
        match self {
            Label::Bankrupt => Some(1.0),
            Label::Healthy => Some(0.0),
            Label::Unknown => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Bankrupt => "bankrupt",
            Label::Healthy => "healthy",
            Label::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bankrupt" => Ok(Label::Bankrupt),
            "healthy" => Ok(Label::Healthy),
            "unknown" => Ok(Label::Unknown),
            _ => Err(s.to_string()),
        }
    }
}

/// One firm-period of accounting data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinancialStatement {
    pub firm_id: String,
    pub period: i32,
    pub total_assets: f64,
    pub total_liabilities: f64,
    pub current_assets: f64,
    pub current_liabilities: f64,
    pub retained_earnings: f64,
    pub ebit: f64,
    pub market_value_equity: f64,
    pub sales: f64,
    pub net_income: f64,
    pub net_income_prev: f64,
    pub net_income_prev2: Option<f64>,
    pub funds_from_operations: f64,
    pub label: Label,
}

impl FinancialStatement {
    /// Current assets minus current liabilities.
    pub fn working_capital(&self) -> f64 {
        self.current_assets - self.current_liabilities
    }

    /// Copy with every monetary field multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        FinancialStatement {
            firm_id: self.firm_id.clone(),
            period: self.period,
            total_assets: self.total_assets * k,
            total_liabilities: self.total_liabilities * k,
            current_assets: self.current_assets * k,
            current_liabilities: self.current_liabilities * k,
            retained_earnings: self.retained_earnings * k,
            ebit: self.ebit * k,
            market_value_equity: self.market_value_equity * k,
            sales: self.sales * k,
            net_income: self.net_income * k,
            net_income_prev: self.net_income_prev * k,
            net_income_prev2: self.net_income_prev2.map(|v| v * k),
            funds_from_operations: self.funds_from_operations * k,
            label: self.label,
        }
    }

    fn validate(&self, row: usize) -> Result<(), DataError> {
        if self.firm_id.trim().is_empty() {
            return Err(DataError::EmptyFirmId { row });
        }
        if !(self.total_assets > 0.0) {
            return Err(DataError::NonPositiveTotalAssets { row });
        }
        let non_negative = [
            ("total_liabilities", self.total_liabilities),
            ("current_assets", self.current_assets),
            ("current_liabilities", self.current_liabilities),
            ("market_value_equity", self.market_value_equity),
            ("sales", self.sales),
        ];
        for (column, value) in non_negative {
            if value < 0.0 {
                return Err(DataError::NegativeField { row, column: column.to_string() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    File,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub statements: Vec<FinancialStatement>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
}

/// Counts of each label in a dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts {
    pub bankrupt: usize,
    pub healthy: usize,
    pub unknown: usize,
}

impl Dataset {
    /// Builds a dataset, checking statement invariants and
    /// `(firm_id, period)` uniqueness.
    pub fn new(
        statements: Vec<FinancialStatement>,
        provenance: Provenance,
        seed: Option<u64>,
    ) -> Result<Self, DataError> {
        let mut seen = HashSet::with_capacity(statements.len());
        for (i, s) in statements.iter().enumerate() {
            s.validate(i + 1)?;
            if !seen.insert((s.firm_id.as_str(), s.period)) {
                return Err(DataError::DuplicateFirmPeriod {
                    firm_id: s.firm_id.clone(),
                    period: s.period,
                });
            }
        }
        Ok(Dataset { statements, provenance, seed })
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn label_counts(&self) -> LabelCounts {
        let mut counts = LabelCounts::default();
        for s in &self.statements {
            match s.label {
                Label::Bankrupt => counts.bankrupt += 1,
                Label::Healthy => counts.healthy += 1,
                Label::Unknown => counts.unknown += 1,
            }
        }
        counts
    }

    /// Subset by row indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            statements: indices.iter().map(|&i| self.statements[i].clone()).collect(),
            provenance: self.provenance,
            seed: self.seed,
        }
    }

    /// Copy with every monetary field multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Dataset {
        Dataset {
            statements: self.statements.iter().map(|s| s.scaled(k)).collect(),
            provenance: self.provenance,
            seed: self.seed,
        }
    }
}

pub fn parse_csv(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path)?;
    read_csv(file)
}

/// Reads statements from any reader holding the CSV schema.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = [0usize; CSV_HEADER.len()];
    for (slot, name) in index.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))?;
    }

    let mut statements = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let field = |col: usize| record.get(index[col]).unwrap_or("");
        let number = |col: usize| -> Result<f64, DataError> {
            field(col)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::NonNumericField { row, column: CSV_HEADER[col].to_string() })
        };
        let period = field(1)
            .parse::<i32>()
            .map_err(|_| DataError::NonNumericField { row, column: "period".to_string() })?;
        let net_income_prev2 = if field(12).is_empty() { None } else { Some(number(12)?) };
        let label = field(14)
            .parse::<Label>()
            .map_err(|value| DataError::InvalidLabel { row, value })?;
        let statement = FinancialStatement {
            firm_id: field(0).to_string(),
            period,
            total_assets: number(2)?,
            total_liabilities: number(3)?,
            current_assets: number(4)?,
            current_liabilities: number(5)?,
            retained_earnings: number(6)?,
            ebit: number(7)?,
            market_value_equity: number(8)?,
            sales: number(9)?,
            net_income: number(10)?,
            net_income_prev: number(11)?,
            net_income_prev2,
            funds_from_operations: number(13)?,
            label,
        };
        statement.validate(row)?;
        statements.push(statement);
    }
    Dataset::new(statements, Provenance::File, None)
}

/// Writes the dataset in the canonical schema. Numbers use the shortest
/// representation that parses back to the identical `f64`.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for s in &dataset.statements {
        wtr.write_record([
            s.firm_id.clone(),
            s.period.to_string(),
            s.total_assets.to_string(),
            s.total_liabilities.to_string(),
            s.current_assets.to_string(),
            s.current_liabilities.to_string(),
            s.retained_earnings.to_string(),
            s.ebit.to_string(),
            s.market_value_equity.to_string(),
            s.sales.to_string(),
            s.net_income.to_string(),
            s.net_income_prev.to_string(),
            s.net_income_prev2.map(|v| v.to_string()).unwrap_or_default(),
            s.funds_from_operations.to_string(),
            s.label.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv_file(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let file = std::fs::File::create(path)?;
    write_csv(dataset, std::io::BufWriter::new(file))
}

/// Latent ratio drivers the synthetic generator draws per firm. Accounting
/// fields are derived from these, so computed ratios track them closely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Driver {
    /// Total liabilities / total assets.
    Leverage,
    /// Net income / total liabilities (also drives the prior-year figures).
    NetIncomeToLiabilities,
    /// Funds from operations / total liabilities.
    FundsToLiabilities,
    /// log(current assets / current liabilities).
    Liquidity,
    /// Retained earnings / total assets.
    RetainedEarnings,
    /// EBIT / total assets.
    Ebit,
    /// log(market value of equity / total liabilities).
    MarketToDebt,
    /// Sales / total assets.
    AssetTurnover,
}

impl Driver {
    pub const ALL: [Driver; 8] = [
        Driver::Leverage,
        Driver::NetIncomeToLiabilities,
        Driver::FundsToLiabilities,
        Driver::Liquidity,
        Driver::RetainedEarnings,
        Driver::Ebit,
        Driver::MarketToDebt,
        Driver::AssetTurnover,
    ];

    /// (pooled mean, within-class sd, sign of the bankrupt shift).
    fn profile(self) -> (f64, f64, f64) {
        match self {
            Driver::Leverage => (0.70, 0.12, 1.0),
            Driver::NetIncomeToLiabilities => (0.0, 0.06, -1.0),
            Driver::FundsToLiabilities => (0.05, 0.08, -1.0),
            Driver::Liquidity => (0.18, 0.15, -1.0),
            Driver::RetainedEarnings => (0.05, 0.10, -1.0),
            Driver::Ebit => (0.03, 0.05, -1.0),
            Driver::MarketToDebt => (0.0, 0.40, -1.0),
            Driver::AssetTurnover => (1.0, 0.25, -1.0),
        }
    }
}

/// Full parameter set of the synthetic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_firms: usize,
    pub bankrupt_fraction: f64,
    /// Distance between class means, in within-class standard deviations,
    /// applied to every informative driver.
    pub separation: f64,
    pub seed: u64,
    /// Drivers whose class means are shifted apart; the rest share one
    /// distribution across labels.
    pub informative: Vec<Driver>,
    pub period: i32,
}

impl SyntheticConfig {
    pub fn new(n_firms: usize, bankrupt_fraction: f64, separation: f64, seed: u64) -> Self {
        SyntheticConfig {
            n_firms,
            bankrupt_fraction,
            separation,
            seed,
            informative: Driver::ALL.to_vec(),
            period: 2010,
        }
    }
}

pub fn generate_synthetic(
    n_firms: usize,
    bankrupt_fraction: f64,
    separation: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    generate(&SyntheticConfig::new(n_firms, bankrupt_fraction, separation, seed))
}

/// Draws a labelled dataset. Healthy firms get high profitability, low
/// leverage and current ratio above one; bankrupt firms the reverse, with
/// the gap set by `separation`. All monetary values are whole numbers, so
/// scaling them by any integer power of ten is exact.
pub fn generate(cfg: &SyntheticConfig) -> Result<Dataset, DataError> {
    if !(cfg.bankrupt_fraction > 0.0 && cfg.bankrupt_fraction < 1.0) {
        return Err(DataError::InvalidFraction(cfg.bankrupt_fraction));
    }
    if !(cfg.separation.is_finite() && cfg.separation >= 0.0) {
        return Err(DataError::InvalidSeparation(cfg.separation));
    }
    if cfg.n_firms < 4 {
        return Err(DataError::TooFewFirms(cfg.n_firms));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_bankrupt = (cfg.n_firms as f64 * cfg.bankrupt_fraction).round() as usize;
    let mut labels: Vec<Label> = (0..cfg.n_firms)
        .map(|i| if i < n_bankrupt { Label::Bankrupt } else { Label::Healthy })
        .collect();
    // Fisher-Yates so labels are interleaved in file order.
    for i in (1..labels.len()).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }

    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let size = Normal::new(15.4, 0.6).expect("log-size normal");
    let width = (cfg.n_firms.max(1) as f64).log10().floor() as usize + 1;

    let mut statements = Vec::with_capacity(cfg.n_firms);
    for (i, &label) in labels.iter().enumerate() {
        let mut draw = |driver: Driver| -> f64 {
            let (mean, sd, sign) = driver.profile();
            let shift = if cfg.informative.contains(&driver) {
                let half = 0.5 * cfg.separation * sd * sign;
                if label == Label::Bankrupt { half } else { -half }
            } else {
                0.0
            };
            mean + shift + sd * std_normal.sample(&mut rng)
        };
        let leverage = draw(Driver::Leverage).clamp(0.05, 2.5);
        let nitl = draw(Driver::NetIncomeToLiabilities);
        let nitl_prev = draw(Driver::NetIncomeToLiabilities);
        let nitl_prev2 = draw(Driver::NetIncomeToLiabilities);
        let futl = draw(Driver::FundsToLiabilities);
        let log_cacl = draw(Driver::Liquidity);
        let re_ta = draw(Driver::RetainedEarnings);
        let ebit_ta = draw(Driver::Ebit);
        let log_mve_tl = draw(Driver::MarketToDebt);
        let s_ta = draw(Driver::AssetTurnover).max(0.0);
        let ca_ta = (0.45 + 0.08 * std_normal.sample(&mut rng)).clamp(0.05, 0.95);
        let total_assets = f64::exp(size.sample(&mut rng)).round().max(1000.0);

        let total_liabilities = (leverage * total_assets).round().max(1.0);
        let current_assets = (ca_ta * total_assets).round().max(1.0);
        let current_liabilities = (current_assets / log_cacl.exp()).round().max(1.0);
        let statement = FinancialStatement {
            firm_id: format!("F{:0width$}", i + 1, width = width),
            period: cfg.period,
            total_assets,
            total_liabilities,
            current_assets,
            current_liabilities,
            retained_earnings: (re_ta * total_assets).round(),
            ebit: (ebit_ta * total_assets).round(),
            market_value_equity: (log_mve_tl.exp() * total_liabilities).round(),
            sales: (s_ta * total_assets).round(),
            net_income: (nitl * total_liabilities).round(),
            net_income_prev: (nitl_prev * total_liabilities).round(),
            net_income_prev2: Some((nitl_prev2 * total_liabilities).round()),
            funds_from_operations: (futl * total_liabilities).round(),
            label,
        };
        statements.push(statement);
    }
    Dataset::new(statements, Provenance::Synthetic, Some(cfg.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "firm_id,period,total_assets,total_liabilities,current_assets,current_liabilities,retained_earnings,ebit,market_value_equity,sales,net_income,net_income_prev,net_income_prev2,funds_from_operations,label\n";

    fn fixture() -> String {
        let mut s = HEADER.to_string();
        s.push_str("A1,2009,1000,400,300,150,50,80,900,1200,60,40,,70,healthy\n");
        s.push_str("A2,2009,500,600,100,200,-80,-20,50,300,-40,-30,-10,-15,Bankrupt\n");
        s.push_str("A3,2009,800,300,250,100,20,40,700,900,30,35,20,45,HEALTHY\n");
        s.push_str("A4,2010,2000,1900,400,500,-300,-100,100,1500,-200,-150,,-120,unknown\n");
        s
    }

    #[test]
    fn parses_fixture_in_file_order() {
        let ds = read_csv(fixture().as_bytes()).unwrap();
        assert_eq!(ds.len(), 4);
        let ids: Vec<_> = ds.statements.iter().map(|s| s.firm_id.as_str()).collect();
        assert_eq!(ids, ["A1", "A2", "A3", "A4"]);
        assert_eq!(ds.statements[1].label, Label::Bankrupt);
        assert_eq!(ds.statements[2].label, Label::Healthy);
        assert_eq!(ds.statements[3].label, Label::Unknown);
        assert_eq!(ds.statements[0].net_income_prev2, None);
        assert_eq!(ds.statements[1].net_income_prev2, Some(-10.0));
        assert_eq!(ds.statements[0].working_capital(), 150.0);
        assert_eq!(ds.provenance, Provenance::File);
    }

    #[test]
    fn header_only_is_empty() {
        let ds = read_csv(HEADER.as_bytes()).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn zero_total_assets_rejected() {
        let csv = format!("{HEADER}A1,2009,0,400,300,150,50,80,900,1200,60,40,,70,healthy\n");
        assert!(matches!(read_csv(csv.as_bytes()), Err(DataError::NonPositiveTotalAssets { row: 1 })));
    }

    #[test]
    fn missing_column_named() {
        let csv = "firm_id,period\nA,2000\n";
        match read_csv(csv.as_bytes()) {
            Err(DataError::MissingColumn(name)) => assert_eq!(name, "total_assets"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_field_reports_row_and_column() {
        let csv = format!(
            "{HEADER}A1,2009,1000,400,300,150,50,80,900,1200,60,40,,70,healthy\nA2,2009,1000,4x0,300,150,50,80,900,1200,60,40,,70,healthy\n"
        );
        match read_csv(csv.as_bytes()) {
            Err(DataError::NonNumericField { row, column }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "total_liabilities");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_firm_period_rejected() {
        let row = "A1,2009,1000,400,300,150,50,80,900,1200,60,40,,70,healthy\n";
        let csv = format!("{HEADER}{row}{row}");
        assert!(matches!(
            read_csv(csv.as_bytes()),
            Err(DataError::DuplicateFirmPeriod { period: 2009, .. })
        ));
    }

    #[test]
    fn bad_label_rejected() {
        let csv = format!("{HEADER}A1,2009,1000,400,300,150,50,80,900,1200,60,40,,70,recovered\n");
        assert!(matches!(read_csv(csv.as_bytes()), Err(DataError::InvalidLabel { .. })));
    }

    #[test]
    fn round_trip_is_identity() {
        let ds = generate_synthetic(40, 0.3, 2.0, 5).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.statements, ds.statements);
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_synthetic(100, 0.5, 4.0, 7).unwrap();
        let b = generate_synthetic(100, 0.5, 4.0, 7).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        write_csv(&a, &mut ba).unwrap();
        write_csv(&b, &mut bb).unwrap();
        assert_eq!(ba, bb);
        assert_ne!(a, generate_synthetic(100, 0.5, 4.0, 8).unwrap());
    }

    #[test]
    fn generator_label_count_and_errors() {
        let ds = generate_synthetic(101, 0.3, 1.0, 1).unwrap();
        assert_eq!(ds.label_counts().bankrupt, 30);
        assert_eq!(ds.label_counts().healthy, 71);
        assert!(matches!(generate_synthetic(3, 0.5, 1.0, 1), Err(DataError::TooFewFirms(3))));
        assert!(matches!(generate_synthetic(10, 0.0, 1.0, 1), Err(DataError::InvalidFraction(_))));
        assert!(matches!(generate_synthetic(10, 1.0, 1.0, 1), Err(DataError::InvalidFraction(_))));
    }

    #[test]
    fn generated_values_are_whole_numbers() {
        let ds = generate_synthetic(50, 0.5, 3.0, 2).unwrap();
        for s in &ds.statements {
            assert!(s.total_assets > 0.0);
            for v in [s.total_assets, s.total_liabilities, s.net_income, s.sales] {
                assert_eq!(v.fract(), 0.0);
            }
        }
    }
}
