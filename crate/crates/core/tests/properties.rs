use bankruptcy_core::fcm::{self, FcmConfig};
use bankruptcy_core::mars::{self, MarsConfig};
use bankruptcy_core::pipeline::{Confusion, EvaluationReport, FirmOutcome, Prediction};
use bankruptcy_core::{FeatureMatrix, Label};
use proptest::prelude::*;

fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    FeatureMatrix::from_rows(rows)
}

fn dataset() -> impl Strategy<Value = (Vec<Vec<f64>>, usize)> {
    (1usize..=4, 1usize..=3).prop_flat_map(|(p, c)| {
        (prop::collection::vec(prop::collection::vec(-50.0f64..50.0, p), c.max(2)..40), Just(c))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fcm_objective_matches_recomputation((rows, c) in dataset(), seed in any::<u64>()) {
        let x = matrix(&rows);
        let part = fcm::fit(&x, &FcmConfig { n_clusters: c, seed, ..FcmConfig::default() }).unwrap();
        let m = part.model.m;
        let mut j = 0.0;
        for (r, u) in rows.iter().zip(&part.memberships) {
            let z = part.model.standardize(r).unwrap();
            for (uj, cj) in u.iter().zip(part.centroids()) {
                let d2: f64 = z.iter().zip(cj).map(|(a, b)| (a - b).powi(2)).sum();
                j += uj.powf(m) * d2;
            }
        }
        prop_assert!((j - part.objective).abs() <= 1e-8 * j.abs().max(1e-300) + 1e-12, "{} vs {}", j, part.objective);
    }

    #[test]
    fn memberships_are_normalized((rows, c) in dataset(), probe in prop::collection::vec(-80.0f64..80.0, 4)) {
        let x = matrix(&rows);
        let part = fcm::fit(&x, &FcmConfig { n_clusters: c, ..FcmConfig::default() }).unwrap();
        let u = part.membership_of(&probe[..x.n_cols()]).unwrap();
        prop_assert!((u.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mars_prediction_is_continuous(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 8..40),
        noise in prop::collection::vec(-1.0f64..1.0, 40),
        probe in prop::collection::vec(-6.0f64..6.0, 2),
    ) {
        let y: Vec<f64> = rows.iter().zip(&noise).map(|(r, e)| (r[0] - 1.0).max(0.0) - r[1].abs() + e).collect();
        let model = mars::fit(&matrix(&rows), &y, &MarsConfig::default()).unwrap();
        for k in 0..2 {
            let mut nudged = probe.clone();
            nudged[k] += 1e-9;
            let slope_bound: f64 = 1.0 + model.terms.iter().map(|t| t.coef.abs()).sum::<f64>();
            let diff = (model.predict_row(&probe).unwrap() - model.predict_row(&nudged).unwrap()).abs();
            prop_assert!(diff <= slope_bound * 1e-9 + 1e-12);
        }
    }

    #[test]
    fn report_rates_follow_counts(cells in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
        let outcomes: Vec<FirmOutcome> = cells
            .iter()
            .map(|&(bankrupt, says_bankrupt)| FirmOutcome {
                firm_id: "f".into(),
                score: 0.0,
                label: if bankrupt { Label::Bankrupt } else { Label::Healthy },
                prediction: if says_bankrupt { Prediction::Bankrupt } else { Prediction::Healthy },
            })
            .collect();
        let r = EvaluationReport::from_outcomes(outcomes).unwrap();
        let count = |b: bool, p: bool| cells.iter().filter(|&&c| c == (b, p)).count();
        let expected = Confusion {
            bankrupt_as_bankrupt: count(true, true),
            bankrupt_as_healthy: count(true, false),
            healthy_as_bankrupt: count(false, true),
            healthy_as_healthy: count(false, false),
        };
        prop_assert_eq!(r.confusion, expected);
        let n_b = count(true, true) + count(true, false);
        let n_h = cells.len() - n_b;
        prop_assert_eq!(r.type_i_error, (n_b > 0).then(|| count(true, false) as f64 / n_b as f64));
        prop_assert_eq!(r.type_ii_error, (n_h > 0).then(|| count(false, true) as f64 / n_h as f64));
        let correct = count(true, true) + count(false, false);
        prop_assert_eq!(r.accuracy, correct as f64 / cells.len() as f64);
    }
}

/// Best 2-partition by within-cluster sum of squares over every bipartition.
fn exhaustive_two_means(z: &[Vec<f64>]) -> Vec<usize> {
    let n = z.len();
    let mut best = (f64::INFINITY, 0u32);
    for mask in 1..(1u32 << (n - 1)) {
        let mut wss = 0.0;
        for side in [0, 1] {
            let members: Vec<&Vec<f64>> = (0..n).filter(|&i| (mask >> i & 1) as usize == side).map(|i| &z[i]).collect();
            let p = z[0].len();
            let centre: Vec<f64> = (0..p).map(|k| members.iter().map(|r| r[k]).sum::<f64>() / members.len() as f64).collect();
            wss += members.iter().map(|r| r.iter().zip(&centre).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sum::<f64>();
        }
        if wss < best.0 {
            best = (wss, mask);
        }
    }
    (0..n).map(|i| (best.1 >> i & 1) as usize).collect()
}

#[test]
fn hard_assignment_matches_exhaustive_two_means() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let rows: Vec<Vec<f64>> = (0..16)
        .map(|i| {
            let centre = if i % 2 == 0 { [0.0, 0.0] } else { [8.0, 5.0] };
            centre.iter().map(|c| c + rng.random_range(-1.5..1.5)).collect()
        })
        .collect();
    let part = fcm::fit(&matrix(&rows), &FcmConfig { n_clusters: 2, seed: 17, ..FcmConfig::default() }).unwrap();
    let z: Vec<Vec<f64>> = rows.iter().map(|r| part.model.standardize(r).unwrap()).collect();
    let reference = exhaustive_two_means(&z);
    let got = fcm::hard_assign(&part);
    let same = got.iter().zip(&reference).filter(|(a, b)| a == b).count();
    let agree = same.max(rows.len() - same) as f64 / rows.len() as f64;
    assert!(agree >= 0.95, "agreement {agree}");
}

#[test]
fn coincident_point_gets_indicator_membership() {
    let rows = vec![vec![0.0, 1.0], vec![1.0, 3.0], vec![9.0, 9.0], vec![10.0, 8.0], vec![4.0, 4.0]];
    let part = fcm::fit(&matrix(&rows), &FcmConfig { n_clusters: 3, seed: 2, ..FcmConfig::default() }).unwrap();
    for (j, c) in part.centroids().iter().enumerate() {
        let raw: Vec<f64> = c.iter().zip(&part.model.standardization).map(|(z, s)| z * s.std + s.mean).collect();
        let u = part.membership_of(&raw).unwrap();
        let mut expected = vec![0.0; 3];
        expected[j] = 1.0;
        assert_eq!(u, expected);
    }
}
