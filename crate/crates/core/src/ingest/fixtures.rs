//! Bundled reference summaries of public subjective tests.
//!
//! These are summary statistics (not the underlying media or votes, which
//! are not redistributable) for 22 widely used subjective tests, split by
//! whether the test publishes vote variance. They feed the golden tests and
//! the `tables` CLI command.

use serde::Serialize;

/// Summary of a subjective test that reports vote variance. All values are
/// on the 1-5 five-level scale, ordered by average votes per file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestSummary {
    pub name: &'static str,
    /// Average votes per file (real datasets have fractional averages).
    pub n_votes: f64,
    /// Sample mean of the MOS values.
    pub mos_mean: f64,
    /// Sample variance of the MOS values.
    pub mos_variance: f64,
    /// Average observed per-file vote variance.
    pub vote_variance: f64,
}

/// The 18 reference tests that include vote variance information.
#[rustfmt::skip]
pub const WITH_VARIANCE: [TestSummary; 18] = [
    TestSummary { name: "TMHINT-QI (Test)",            n_votes:  3.52, mos_mean: 3.11, mos_variance: 0.99, vote_variance: 0.93 },
    TestSummary { name: "PSTN",                        n_votes:  4.57, mos_mean: 3.12, mos_variance: 0.76, vote_variance: 0.80 },
    TestSummary { name: "P25 2005",                    n_votes:  5.20, mos_mean: 3.05, mos_variance: 1.51, vote_variance: 0.48 },
    TestSummary { name: "NISQA Sim MOS",               n_votes:  5.24, mos_mean: 2.99, mos_variance: 1.20, vote_variance: 0.54 },
    TestSummary { name: "ITS2013",                     n_votes:  5.64, mos_mean: 3.41, mos_variance: 0.60, vote_variance: 0.83 },
    TestSummary { name: "ITS1997",                     n_votes:  6.40, mos_mean: 2.85, mos_variance: 0.89, vote_variance: 0.58 },
    TestSummary { name: "P25 2004",                    n_votes:  7.47, mos_mean: 2.95, mos_variance: 0.87, vote_variance: 0.73 },
    TestSummary { name: "P25 2003",                    n_votes:  7.91, mos_mean: 2.92, mos_variance: 0.65, vote_variance: 0.74 },
    TestSummary { name: "ITS1994",                     n_votes:  8.00, mos_mean: 3.12, mos_variance: 0.88, vote_variance: 0.63 },
    TestSummary { name: "CCRIQ",                       n_votes:  9.85, mos_mean: 2.89, mos_variance: 1.10, vote_variance: 0.63 },
    TestSummary { name: "ITS Noise",                   n_votes: 20.84, mos_mean: 3.18, mos_variance: 0.63, vote_variance: 0.69 },
    TestSummary { name: "VQEG MM6",                    n_votes: 21.30, mos_mean: 3.06, mos_variance: 1.15, vote_variance: 0.66 },
    TestSummary { name: "NISQA LiveTalk MOS",          n_votes: 24.00, mos_mean: 2.76, mos_variance: 0.89, vote_variance: 0.66 },
    TestSummary { name: "TCDVoIP",                     n_votes: 24.00, mos_mean: 3.22, mos_variance: 0.99, vote_variance: 0.62 },
    TestSummary { name: "VQEG HDTV",                   n_votes: 24.00, mos_mean: 3.10, mos_variance: 1.33, vote_variance: 0.51 },
    TestSummary { name: "ITU-T P.Sup23 Exp 2 Italian", n_votes: 24.00, mos_mean: 2.95, mos_variance: 0.80, vote_variance: 0.57 },
    TestSummary { name: "NISQA NSC MOS",               n_votes: 27.17, mos_mean: 2.55, mos_variance: 0.91, vote_variance: 0.48 },
    TestSummary { name: "NISQA P501 MOS",              n_votes: 28.33, mos_mean: 2.60, mos_variance: 1.04, vote_variance: 0.42 },
];

/// Summary of a subjective test that ships MOS values only, together with
/// the reference bound values its summary statistics should reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoVarianceSummary {
    pub name: &'static str,
    pub mos_mean: f64,
    pub mos_variance: f64,
    pub n_votes: f64,
    pub scale_lo: f64,
    pub scale_hi: f64,
    pub scale_levels: usize,
    /// True when the rating scale was inferred rather than documented: the
    /// IU scale below is the unique candidate that reproduces the reference
    /// bound values.
    pub scale_inferred: bool,
    /// Reference bounds under the BinoVotes model, rounded to 2 decimals.
    pub rmse_binovotes: f64,
    pub pcc_binovotes: f64,
    /// Reference bounds under the fixed pooled vote variance 0.64, rounded
    /// to 2 decimals. Absent for tests not on the 1-5 scale, because the
    /// pooled value only applies to the scale it was computed on.
    pub rmse_fixed: Option<f64>,
    pub pcc_fixed: Option<f64>,
}

/// The 4 reference tests without vote variance information.
pub const WITHOUT_VARIANCE: [NoVarianceSummary; 4] = [
    NoVarianceSummary {
        name: "VCC18",
        mos_mean: 2.92,
        mos_variance: 0.79,
        n_votes: 4.0,
        scale_lo: 1.0,
        scale_hi: 5.0,
        scale_levels: 5,
        scale_inferred: false,
        rmse_binovotes: 0.46,
        pcc_binovotes: 0.85,
        rmse_fixed: Some(0.40),
        pcc_fixed: Some(0.89),
    },
    NoVarianceSummary {
        name: "IU",
        mos_mean: 5.25,
        mos_variance: 4.56,
        n_votes: 5.0,
        scale_lo: 0.0,
        scale_hi: 10.0,
        scale_levels: 11,
        scale_inferred: true,
        rmse_binovotes: 0.64,
        pcc_binovotes: 0.95,
        rmse_fixed: None,
        pcc_fixed: None,
    },
    NoVarianceSummary {
        name: "VMC22",
        mos_mean: 2.93,
        mos_variance: 0.85,
        n_votes: 8.0,
        scale_lo: 1.0,
        scale_hi: 5.0,
        scale_levels: 5,
        scale_inferred: false,
        rmse_binovotes: 0.32,
        pcc_binovotes: 0.94,
        rmse_fixed: Some(0.28),
        pcc_fixed: Some(0.95),
    },
    NoVarianceSummary {
        name: "Tencent",
        mos_mean: 2.85,
        mos_variance: 1.38,
        n_votes: 20.0,
        scale_lo: 1.0,
        scale_hi: 5.0,
        scale_levels: 5,
        scale_inferred: false,
        rmse_binovotes: 0.18,
        pcc_binovotes: 0.99,
        rmse_fixed: Some(0.18),
        pcc_fixed: Some(0.99),
    },
];

/// The pooled vote variance across [`WITH_VARIANCE`], rounded as published.
pub const GLOBAL_AVERAGE_VOTE_VARIANCE: f64 = 0.64;

pub fn with_variance_summaries() -> &'static [TestSummary; 18] {
    &WITH_VARIANCE
}

pub fn no_variance_summaries() -> &'static [NoVarianceSummary; 4] {
    &WITHOUT_VARIANCE
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn row_counts() {
        assert_eq!(with_variance_summaries().len(), 18);
        assert_eq!(no_variance_summaries().len(), 4);
    }

    #[test]
    fn known_rows() {
        let pstn = with_variance_summaries()
            .iter()
            .find(|r| r.name == "PSTN")
            .unwrap();
        assert_eq!(
            (
                pstn.n_votes,
                pstn.mos_mean,
                pstn.mos_variance,
                pstn.vote_variance
            ),
            (4.57, 3.12, 0.76, 0.80)
        );
        let tencent = no_variance_summaries()
            .iter()
            .find(|r| r.name == "Tencent")
            .unwrap();
        assert_eq!(
            (tencent.mos_mean, tencent.mos_variance, tencent.n_votes),
            (2.85, 1.38, 20.0)
        );
        assert_eq!(tencent.rmse_binovotes, 0.18);
        assert_eq!(tencent.pcc_fixed, Some(0.99));
    }

    #[test]
    fn summaries_are_feasible_on_their_scales() {
        for row in with_variance_summaries() {
            assert!(row.mos_mean > 1.0 && row.mos_mean < 5.0);
            assert!(row.mos_variance > 0.0);
            // MOS variance cannot exceed the bounded-support cap.
            assert!(row.mos_variance <= (row.mos_mean - 1.0) * (5.0 - row.mos_mean));
            assert!(row.vote_variance > 0.0);
            assert!(row.n_votes > 1.0);
        }
        for row in no_variance_summaries() {
            assert!(row.mos_mean > row.scale_lo && row.mos_mean < row.scale_hi);
            assert!(
                row.mos_variance <= (row.mos_mean - row.scale_lo) * (row.scale_hi - row.mos_mean)
            );
        }
    }

    #[test]
    fn summaries_are_ordered_by_votes() {
        let rows = with_variance_summaries();
        for pair in rows.windows(2) {
            assert!(pair[0].n_votes <= pair[1].n_votes);
        }
    }

    #[test]
    fn pooled_value_matches_column_mean() {
        let rows = with_variance_summaries();
        let mean: f64 = rows.iter().map(|r| r.vote_variance).sum::<f64>() / rows.len() as f64;
        assert_abs_diff_eq!(mean, GLOBAL_AVERAGE_VOTE_VARIANCE, epsilon = 5e-3);
    }
}
