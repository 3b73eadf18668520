//! First-digit and mantissa forensics for case counts.
//!
//! Conformance is judged with four complementary statistics on the
//! leading-digit histogram: Pearson chi-square, the Kolmogorov-Smirnov
//! distance between the discrete digit CDFs, the mean absolute deviation of
//! digit proportions, and per-digit Z-scores. The mean of the base-10
//! mantissas is reported alongside: it sits near 0.5 for Benford data and
//! drifts below when counts are pushed down.

use serde::{Deserialize, Serialize};

use crate::dataset::{slice_period, CaseSeries, Period};
use crate::error::{Error, Result};

pub const DIGITS: usize = 9;

/// Chi-square critical value for 8 degrees of freedom at alpha = 0.05.
pub const CHI2_CRITICAL_DF8: f64 = 15.507;

/// Probabilities of leading digits 1..=9 under Benford's law.
pub fn benford_pmf() -> [f64; DIGITS] {
    std::array::from_fn(|i| (1.0 + 1.0 / (i as f64 + 1.0)).log10())
}

fn benford_cdf() -> [f64; DIGITS] {
    // P(D <= d) = log10(d + 1), exact at d = 9
    std::array::from_fn(|i| (i as f64 + 2.0).log10())
}

/// Leading significant digit of a positive finite number.
pub fn first_digit(x: f64) -> Result<u8> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::NonPositive(x));
    }
    // Scientific formatting yields the shortest round-tripping decimal, so the
    // first character is the leading digit with no log10 rounding at powers of ten.
    let s = format!("{x:e}");
    Ok(s.as_bytes()[0] - b'0')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitHistogram {
    /// `counts[d - 1]` is the number of values with leading digit `d`.
    pub counts: [u64; DIGITS],
    pub n: u64,
}

impl DigitHistogram {
    pub fn from_counts(counts: [u64; DIGITS]) -> Result<Self> {
        let n = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptyAfterFilter);
        }
        Ok(Self { counts, n })
    }

    pub fn proportions(&self) -> [f64; DIGITS] {
        let n = self.n as f64;
        std::array::from_fn(|i| self.counts[i] as f64 / n)
    }

    pub fn expected_counts(&self) -> [f64; DIGITS] {
        let n = self.n as f64;
        benford_pmf().map(|p| n * p)
    }
}

/// Histogram of leading digits. Zeros, negatives and non-finite values are
/// skipped; the number skipped is returned alongside.
pub fn digit_histogram(values: &[f64]) -> Result<(DigitHistogram, usize)> {
    let mut counts = [0u64; DIGITS];
    let mut skipped = 0;
    for &v in values {
        match first_digit(v) {
            Ok(d) => counts[usize::from(d) - 1] += 1,
            Err(_) => skipped += 1,
        }
    }
    Ok((DigitHistogram::from_counts(counts)?, skipped))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Pearson chi-square against Benford expected counts, 8 degrees of freedom.
pub fn chi_square(h: &DigitHistogram) -> TestOutcome {
    chi_square_at(h, CHI2_CRITICAL_DF8)
}

pub fn chi_square_at(h: &DigitHistogram, critical: f64) -> TestOutcome {
    let statistic = h
        .counts
        .iter()
        .zip(h.expected_counts())
        .map(|(&o, e)| {
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum();
    TestOutcome {
        statistic,
        critical,
        pass: statistic < critical,
    }
}

/// True when some expected count falls below 5 and the chi-square
/// approximation is unreliable.
pub fn low_expected_counts(h: &DigitHistogram) -> bool {
    h.expected_counts().iter().any(|&e| e < 5.0)
}

/// Sup-distance between the empirical and Benford digit CDFs, judged against
/// `1.36 / sqrt(n)`.
pub fn ks_statistic(h: &DigitHistogram) -> TestOutcome {
    ks_statistic_with(h, KS_COEFFICIENT)
}

pub const KS_COEFFICIENT: f64 = 1.36;

pub fn ks_statistic_with(h: &DigitHistogram, coefficient: f64) -> TestOutcome {
    let cdf = benford_cdf();
    let mut acc = 0u64;
    let mut statistic: f64 = 0.0;
    for (count, f) in h.counts.iter().zip(cdf) {
        acc += count;
        statistic = statistic.max((acc as f64 / h.n as f64 - f).abs());
    }
    let critical = coefficient / (h.n as f64).sqrt();
    TestOutcome {
        statistic,
        critical,
        pass: statistic < critical,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MadBand {
    Close,
    Acceptable,
    Marginal,
    Nonconforming,
}

/// Upper bounds of the first-digit MAD conformity bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MadBands {
    pub close: f64,
    pub acceptable: f64,
    pub marginal: f64,
}

impl Default for MadBands {
    fn default() -> Self {
        Self {
            close: 0.006,
            acceptable: 0.012,
            marginal: 0.015,
        }
    }
}

impl MadBands {
    pub fn classify(&self, mad: f64) -> MadBand {
        if mad < self.close {
            MadBand::Close
        } else if mad < self.acceptable {
            MadBand::Acceptable
        } else if mad < self.marginal {
            MadBand::Marginal
        } else {
            MadBand::Nonconforming
        }
    }
}

pub fn mad(h: &DigitHistogram) -> (f64, MadBand) {
    mad_with(h, &MadBands::default())
}

pub fn mad_with(h: &DigitHistogram, bands: &MadBands) -> (f64, MadBand) {
    let value = h
        .proportions()
        .iter()
        .zip(benford_pmf())
        .map(|(o, p)| (o - p).abs())
        .sum::<f64>()
        / DIGITS as f64;
    (value, bands.classify(value))
}

/// Per-digit Z-scores with continuity correction, floored at zero.
pub fn z_scores(h: &DigitHistogram) -> [f64; DIGITS] {
    let n = h.n as f64;
    let observed = h.proportions();
    let pmf = benford_pmf();
    std::array::from_fn(|i| {
        let p = pmf[i];
        let num = (observed[i] - p).abs() - 1.0 / (2.0 * n);
        (num / (p * (1.0 - p) / n).sqrt()).max(0.0)
    })
}

/// Two-sided 5% critical value of the standard normal.
pub const Z_CRITICAL: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MantissaStats {
    pub mean: f64,
    pub count: usize,
}

/// Mean of `frac(log10(x))` over the positive finite values.
pub fn mantissa_stats(values: &[f64]) -> Result<MantissaStats> {
    let mut sum = 0.0;
    let mut count = 0;
    for &v in values.iter().filter(|v| **v > 0.0 && v.is_finite()) {
        let l = v.log10();
        sum += l - l.floor();
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyAfterFilter);
    }
    Ok(MantissaStats {
        mean: sum / count as f64,
        count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenfordConfig {
    pub chi2_critical: f64,
    pub ks_coefficient: f64,
    pub mad_bands: MadBands,
    /// Expected mantissa mean for Benford data.
    pub mantissa_reference: f64,
}

impl Default for BenfordConfig {
    fn default() -> Self {
        Self {
            chi2_critical: CHI2_CRITICAL_DF8,
            ks_coefficient: KS_COEFFICIENT,
            mad_bands: MadBands::default(),
            mantissa_reference: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenfordReport {
    pub histogram: DigitHistogram,
    pub skipped: usize,
    pub chi2: f64,
    pub chi2_critical: f64,
    pub chi2_pass: bool,
    pub low_expected: bool,
    pub ks: f64,
    pub ks_critical: f64,
    pub ks_pass: bool,
    pub mad: f64,
    pub mad_band: MadBand,
    pub z: [f64; DIGITS],
    /// Digits whose Z-score exceeds the 5% critical value.
    pub z_significant: Vec<u8>,
    pub mantissa_mean: f64,
}

impl BenfordReport {
    pub fn passes(&self) -> bool {
        self.chi2_pass && self.ks_pass
    }
}

pub fn benford_report(values: &[f64], cfg: &BenfordConfig) -> Result<BenfordReport> {
    let (histogram, skipped) = digit_histogram(values)?;
    let chi = chi_square_at(&histogram, cfg.chi2_critical);
    let ks = ks_statistic_with(&histogram, cfg.ks_coefficient);
    let (mad, mad_band) = mad_with(&histogram, &cfg.mad_bands);
    let z = z_scores(&histogram);
    let z_significant = (1..=DIGITS as u8)
        .filter(|d| z[usize::from(*d) - 1] > Z_CRITICAL)
        .collect();
    let mantissa = mantissa_stats(values)?;
    Ok(BenfordReport {
        histogram,
        skipped,
        chi2: chi.statistic,
        chi2_critical: chi.critical,
        chi2_pass: chi.pass,
        low_expected: low_expected_counts(&histogram),
        ks: ks.statistic,
        ks_critical: ks.critical,
        ks_pass: ks.pass,
        mad,
        mad_band,
        z,
        z_significant,
        mantissa_mean: mantissa.mean,
    })
}

/// Which count the digits are read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    #[default]
    Cumulative,
    Daily,
}

impl std::str::FromStr for Signal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cumulative" => Ok(Signal::Cumulative),
            "daily" => Ok(Signal::Daily),
            other => Err(Error::InvalidArgument(format!(
                "signal must be `cumulative` or `daily`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Conforming,
    FlatteningSuspected,
    UnderreportingSuspected,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodAudit {
    pub period: Period,
    /// `None` when the period holds no usable values.
    pub report: Option<BenfordReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditVerdict {
    pub county: String,
    pub total_cases: u64,
    pub signal: Signal,
    pub periods: Vec<PeriodAudit>,
    pub classification: Classification,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOptions {
    pub min_total: u64,
    pub signal: Signal,
    pub config: BenfordConfig,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            min_total: 5000,
            signal: Signal::Cumulative,
            config: BenfordConfig::default(),
        }
    }
}

/// Audits cumulative counts over each period with the default thresholds.
pub fn audit(series: &CaseSeries, periods: &[Period], min_total: u64) -> Result<AuditVerdict> {
    audit_with(
        series,
        periods,
        &AuditOptions {
            min_total,
            ..AuditOptions::default()
        },
    )
}

pub fn audit_with(series: &CaseSeries, periods: &[Period], opts: &AuditOptions) -> Result<AuditVerdict> {
    let total = series.total_cases();
    if total <= opts.min_total {
        return Err(Error::SkippedBelowThreshold {
            total,
            min_total: opts.min_total,
        });
    }
    let periods: Vec<PeriodAudit> = periods
        .iter()
        .map(|period| {
            let outcome = slice_period(series, period).and_then(|s| {
                let values: Vec<f64> = match opts.signal {
                    Signal::Cumulative => s.cumulative_cases.iter().map(|&c| c as f64).collect(),
                    Signal::Daily => s.new_cases.iter().map(|&c| c as f64).collect(),
                };
                benford_report(&values, &opts.config)
            });
            match outcome {
                Ok(report) => PeriodAudit {
                    period: *period,
                    report: Some(report),
                    note: None,
                },
                Err(e) => PeriodAudit {
                    period: *period,
                    report: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect();
    let reports: Vec<&BenfordReport> = periods.iter().filter_map(|p| p.report.as_ref()).collect();
    let (classification, rationale) = classify(&reports, opts.config.mantissa_reference);
    Ok(AuditVerdict {
        county: series.county.normalized.clone(),
        total_cases: total,
        signal: opts.signal,
        periods,
        classification,
        rationale,
    })
}

/// Turns chronologically ordered period reports into a verdict.
///
/// A period passes when both chi-square and KS pass. All passing is
/// conforming. Passing early and failing late with a mantissa mean at or
/// above the reference suggests a flattened curve. A late mantissa mean
/// below the reference, or failing early and passing late, suggests
/// underreporting.
pub fn classify(reports: &[&BenfordReport], mantissa_reference: f64) -> (Classification, String) {
    let (Some(first), Some(last)) = (reports.first(), reports.last()) else {
        return (Classification::Inconclusive, "no period had usable values".into());
    };
    if reports.iter().all(|r| r.passes()) {
        return (
            Classification::Conforming,
            format!("all {} periods pass chi-square and KS", reports.len()),
        );
    }
    let m = last.mantissa_mean;
    if first.passes() && !last.passes() && m >= mantissa_reference {
        return (
            Classification::FlatteningSuspected,
            format!(
                "earliest period conforms, latest does not; latest mantissa mean {m:.3} >= {mantissa_reference}"
            ),
        );
    }
    if m < mantissa_reference {
        return (
            Classification::UnderreportingSuspected,
            format!("latest mantissa mean {m:.3} < {mantissa_reference}"),
        );
    }
    if !first.passes() && last.passes() {
        return (
            Classification::UnderreportingSuspected,
            "earliest period fails while the latest conforms".into(),
        );
    }
    (
        Classification::Inconclusive,
        "failures do not follow a flattening or underreporting pattern".into(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::normalize_name;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hist(counts: [u64; 9]) -> DigitHistogram {
        DigitHistogram::from_counts(counts).unwrap()
    }

    /// Counts rounded from `n * p_d` for a very large n.
    fn near_exact_histogram() -> DigitHistogram {
        let n = 1e12;
        hist(benford_pmf().map(|p| (n * p).round() as u64))
    }

    fn benford_digit(rng: &mut impl Rng) -> u8 {
        10f64.powf(rng.random::<f64>()).floor() as u8
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn pmf_matches_listed_percentages() {
        let listed = [
            0.30103, 0.17609, 0.12494, 0.09691, 0.07918, 0.06695, 0.05799, 0.05115, 0.04576,
        ];
        let pmf = benford_pmf();
        for (d, (p, l)) in pmf.iter().zip(listed).enumerate() {
            assert!((p - l).abs() < 5e-6, "digit {}", d + 1);
            assert!((p - (1.0 + 1.0 / (d as f64 + 1.0)).log10()).abs() < 1e-15);
        }
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn leading_digits() {
        assert_eq!(first_digit(123.0).unwrap(), 1);
        assert_eq!(first_digit(0.016).unwrap(), 1);
        assert_eq!(first_digit(9.999).unwrap(), 9);
        assert_eq!(first_digit(1000.0).unwrap(), 1);
        assert_eq!(first_digit(f64::MIN_POSITIVE / 3.0).unwrap(), 7);
        for bad in [0.0, -5.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(first_digit(bad), Err(Error::NonPositive(_))));
        }
    }

    proptest! {
        #[test]
        fn leading_digit_is_scale_invariant(m in 1.0f64..10.0, e in -200i32..200) {
            let x = m * 10f64.powi(e);
            let d = first_digit(x).unwrap();
            prop_assert_eq!(d, first_digit(x * 10.0).unwrap());
            prop_assert_eq!(d, first_digit(x / 10.0).unwrap());
        }

        #[test]
        fn mad_depends_only_on_counts(values in proptest::collection::vec(1.0f64..1e6, 1..200)) {
            let (h, _) = digit_histogram(&values).unwrap();
            let mut rev = values.clone();
            rev.reverse();
            let (h2, _) = digit_histogram(&rev).unwrap();
            prop_assert_eq!(mad(&h).0, mad(&h2).0);
            prop_assert!(mad(&h).0 <= 2.0 / 9.0);
            let ks = ks_statistic(&h).statistic;
            prop_assert!((0.0..=1.0).contains(&ks));
        }
    }

    #[test]
    fn histograms() {
        let (h, skipped) = digit_histogram(&[1.0, 12.0, 123.0]).unwrap();
        assert_eq!(h.counts, [3, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(skipped, 0);
        assert!(matches!(
            digit_histogram(&[0.0, -5.0]),
            Err(Error::EmptyAfterFilter)
        ));
        let ones: Vec<f64> = (1..=9).map(f64::from).collect();
        let (h, _) = digit_histogram(&ones).unwrap();
        assert_eq!((h.counts, h.n), ([1; 9], 9));
        let (_, skipped) = digit_histogram(&[0.0, 3.0]).unwrap();
        assert_eq!(skipped, 1);
    }

    #[test]
    fn chi_square_values() {
        let exact = near_exact_histogram();
        let t = chi_square(&exact);
        assert!(t.statistic < 1e-9 && t.pass);

        let mut counts = [0; 9];
        counts[8] = 1000;
        let t = chi_square(&hist(counts));
        // closed form: sum collapses to n (1 - p9) / p9
        let p9 = (10.0f64 / 9.0).log10();
        let oracle = 1000.0 * (1.0 - p9) / p9;
        assert!((t.statistic - oracle).abs() < 1e-6 * oracle);
        assert!((t.statistic - 20854.345326782823).abs() < 1e-6);
        assert!(!t.pass);
        assert!(!low_expected_counts(&hist(counts)));
        assert!(low_expected_counts(&hist([10, 0, 0, 0, 0, 0, 0, 0, 0])));
    }

    #[test]
    fn chi_square_critical_value_matches_quantile() {
        let q = crate::stats::chi_square_critical(8, 0.05);
        assert!((q - CHI2_CRITICAL_DF8).abs() < 5e-4);
    }

    #[test]
    fn ks_values() {
        assert!(ks_statistic(&near_exact_histogram()).statistic < 1e-9);
        let t = ks_statistic(&hist([1, 0, 0, 0, 0, 0, 0, 0, 0]));
        assert!((t.statistic - (1.0 - 2f64.log10())).abs() < 1e-12);
        assert!((t.statistic - 0.69897).abs() < 1e-5);
        let h100 = hist([30, 18, 12, 10, 8, 7, 6, 5, 4]);
        assert!((ks_statistic(&h100).critical - 0.136).abs() < 1e-12);
    }

    #[test]
    fn mad_values() {
        let (v, band) = mad(&near_exact_histogram());
        assert!(v < 1e-9);
        assert_eq!(band, MadBand::Close);
        // (1/9) * sum |1/9 - p_d|, evaluated from the pmf
        let (v, band) = mad(&hist([1; 9]));
        assert!((v - 0.05971703510991756).abs() < 1e-12);
        assert_eq!(band, MadBand::Nonconforming);
        let bands = MadBands::default();
        assert_eq!(bands.classify(0.0059), MadBand::Close);
        assert_eq!(bands.classify(0.011), MadBand::Acceptable);
        assert_eq!(bands.classify(0.0149), MadBand::Marginal);
        assert_eq!(bands.classify(0.015), MadBand::Nonconforming);
    }

    #[test]
    fn z_score_values() {
        let z = z_scores(&near_exact_histogram());
        assert!(z.iter().all(|&v| v == 0.0));
        // digit-1 share 0.5 at n = 100: (|0.5 - p1| - 1/200) / sqrt(p1 (1 - p1) / 100)
        let z = z_scores(&hist([50, 10, 10, 10, 10, 5, 3, 1, 1]));
        assert!((z[0] - 4.228637140645234).abs() < 1e-9);
        for d in 1..=9 {
            let mut counts = [0; 9];
            counts[d - 1] = 1;
            let z = z_scores(&hist(counts));
            // n = 1: the continuity correction of 0.5 dominates every deviation except the hit digit
            assert!(z.iter().enumerate().all(|(i, v)| i == d - 1 || *v == 0.0));
        }
    }

    #[test]
    fn mantissa_values() {
        assert_eq!(mantissa_stats(&[1.0, 10.0, 100.0]).unwrap().mean, 0.0);
        assert!((mantissa_stats(&[2.0]).unwrap().mean - 2f64.log10()).abs() < 1e-15);
        assert!(mantissa_stats(&[0.0]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sample: Vec<f64> = (0..100_000)
            .map(|_| 10f64.powf(rng.random::<f64>()) * 10f64.powi(rng.random_range(-3..6)))
            .collect();
        let m = mantissa_stats(&sample).unwrap();
        assert!((m.mean - 0.5).abs() < 0.01);
        assert_eq!(m.count, 100_000);
    }

    #[test]
    fn chi_square_holds_nominal_size_on_benford_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut passes = 0;
        for _ in 0..1000 {
            let mut counts = [0u64; 9];
            for _ in 0..500 {
                counts[usize::from(benford_digit(&mut rng)) - 1] += 1;
            }
            passes += usize::from(chi_square(&hist(counts)).pass);
        }
        assert!(passes >= 930, "{passes} / 1000");
    }

    fn series_from_cumulative(cum: &[u64], start: NaiveDate) -> CaseSeries {
        let mut prev = 0;
        let daily: Vec<u64> = cum
            .iter()
            .map(|&c| {
                let d = c - prev;
                prev = c;
                d
            })
            .collect();
        let n = daily.len();
        CaseSeries::from_daily(normalize_name("Fixture").unwrap(), start, daily, vec![0; n]).unwrap()
    }

    fn nested_periods(start: NaiveDate, lengths: &[u64]) -> Vec<Period> {
        lengths
            .iter()
            .map(|&len| Period::new(start, start + chrono::Days::new(len - 1)).unwrap())
            .collect()
    }

    #[test]
    fn exponential_growth_conforms() {
        let start = NaiveDate::from_ymd_opt(2020, 2, 25).unwrap();
        let cum: Vec<u64> = (0..120)
            .map(|t| (100.0 * 1.10f64.powi(t)).round() as u64)
            .collect();
        let s = series_from_cumulative(&cum, start);
        let periods = nested_periods(start, &[60, 80, 100, 120]);
        let v = audit(&s, &periods, 5000).unwrap();
        for p in &v.periods {
            let r = p.report.as_ref().unwrap();
            assert!(r.chi2_pass, "{}: chi2 {}", p.period, r.chi2);
        }
        assert_eq!(v.classification, Classification::Conforming, "{}", v.rationale);
        assert_eq!(v, audit(&s, &periods, 5000).unwrap());
    }

    #[test]
    fn audit_threshold_and_daily_signal() {
        let start = NaiveDate::from_ymd_opt(2020, 2, 25).unwrap();
        let s = series_from_cumulative(&[10, 20, 30], start);
        let periods = nested_periods(start, &[3]);
        assert!(matches!(
            audit(&s, &periods, 5000),
            Err(Error::SkippedBelowThreshold { total: 30, .. })
        ));
        let opts = AuditOptions {
            min_total: 0,
            signal: Signal::Daily,
            ..AuditOptions::default()
        };
        let v = audit_with(&s, &periods, &opts).unwrap();
        assert_eq!(v.periods[0].report.as_ref().unwrap().histogram.counts[0], 3);
        // a period outside the series is reported, not fatal
        let late = Period::new(
            NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2021, 2, 1).unwrap(),
        )
        .unwrap();
        let v = audit_with(&s, &[late], &opts).unwrap();
        assert!(v.periods[0].report.is_none());
        assert_eq!(v.classification, Classification::Inconclusive);
    }

    fn report(pass: bool, mantissa_mean: f64) -> BenfordReport {
        let (h, _) = digit_histogram(&[1.0]).unwrap();
        BenfordReport {
            histogram: h,
            skipped: 0,
            chi2: 0.0,
            chi2_critical: CHI2_CRITICAL_DF8,
            chi2_pass: pass,
            low_expected: true,
            ks: 0.0,
            ks_critical: 1.36,
            ks_pass: pass,
            mad: 0.0,
            mad_band: MadBand::Close,
            z: [0.0; 9],
            z_significant: vec![],
            mantissa_mean,
        }
    }

    #[test]
    fn classification_rule() {
        let c = |rs: &[BenfordReport]| classify(&rs.iter().collect::<Vec<_>>(), 0.5).0;
        assert_eq!(
            c(&[report(true, 0.4), report(true, 0.4)]),
            Classification::Conforming
        );
        assert_eq!(
            c(&[report(true, 0.5), report(false, 0.62)]),
            Classification::FlatteningSuspected
        );
        assert_eq!(
            c(&[report(false, 0.6), report(true, 0.45)]),
            Classification::UnderreportingSuspected
        );
        assert_eq!(
            c(&[report(false, 0.6), report(true, 0.55)]),
            Classification::UnderreportingSuspected
        );
        assert_eq!(
            c(&[report(true, 0.6), report(false, 0.45)]),
            Classification::UnderreportingSuspected
        );
        assert_eq!(
            c(&[report(false, 0.6), report(false, 0.55)]),
            Classification::Inconclusive
        );
        assert_eq!(c(&[]), Classification::Inconclusive);
    }

    #[test]
    fn flattened_curve_is_flagged() {
        // exponential growth for 60 days, then linear growth up to 90k
        let start = NaiveDate::from_ymd_opt(2020, 2, 25).unwrap();
        let mut cum: Vec<f64> = (0..60).map(|t| 100.0 * 1.10f64.powi(t)).collect();
        let last = cum[59];
        cum.extend((1..=240).map(|t| last + (90_000.0 - last) * t as f64 / 240.0));
        let cum: Vec<u64> = cum.iter().map(|c| c.round() as u64).collect();
        let s = series_from_cumulative(&cum, start);
        let v = audit(&s, &nested_periods(start, &[60, 120, 180, 300]), 5000).unwrap();
        let first = v.periods[0].report.as_ref().unwrap();
        let last = v.periods[3].report.as_ref().unwrap();
        assert!(first.passes());
        assert!(!last.passes());
        assert!(last.mantissa_mean >= 0.5, "{}", last.mantissa_mean);
        assert_eq!(v.classification, Classification::FlatteningSuspected);
    }
}
