mod support;

use nlcompose_core::matching::{select_service, MatchCandidate, MatchOutcome, MatchThresholds, MAX_CHOICES};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use support::pseudocode::{interpret, Verdict};

fn candidates(sims: &[f64]) -> Vec<MatchCandidate> {
    let mut sorted = sims.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sorted
        .iter()
        .enumerate()
        .map(|(i, &s)| MatchCandidate::new("S", format!("m{i}"), s))
        .collect()
}

fn check_agreement(sims: &[f64], th: MatchThresholds) -> Result<(), String> {
    let cands = candidates(sims);
    let sorted: Vec<f64> = cands.iter().map(|c| c.similarity).collect();
    let outcome = select_service(&cands, &th).unwrap();
    let verdict = interpret(&sorted, th.t1, th.t2, th.delta);
    if outcome.variant_name() != verdict.name() {
        return Err(format!("{sorted:?} {th:?}: {outcome:?} vs {verdict:?}"));
    }
    match (&outcome, &verdict) {
        (MatchOutcome::Selected(c), Verdict::Select(i)) if c.similarity != sorted[*i] => {
            Err(format!("{sorted:?}: selected {c:?}, oracle index {i}"))
        }
        (MatchOutcome::NeedsDisambiguation(list), Verdict::Disambiguate(idx)) => {
            let want: Vec<&str> = idx.iter().take(MAX_CHOICES).map(|&i| cands[i].method_id.as_str()).collect();
            let got: Vec<&str> = list.iter().map(|c| c.method_id.as_str()).collect();
            if got.len() < 2 || got.len() > MAX_CHOICES || !got.starts_with(&want) {
                Err(format!("{sorted:?}: offered {got:?}, oracle {want:?}"))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

#[test]
fn agrees_with_pseudocode_on_random_sets() {
    let mut rng = StdRng::seed_from_u64(20240929);
    for _ in 0..10_000 {
        let n = rng.random_range(1..=10);
        let sims: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        let th = MatchThresholds::new(a.max(b), a.min(b), rng.random_range(0.0..0.1)).unwrap();
        check_agreement(&sims, th).unwrap();
    }
}

#[test]
fn hand_traced_cases() {
    let th = MatchThresholds::default();
    for (sims, expected) in [
        (vec![0.786, 0.003], "Selected"),
        (vec![0.8, 0.795], "Selected"),
        (vec![0.3, 0.25], "NeedsDisambiguation"),
        (vec![0.1], "NoMatch"),
    ] {
        assert_eq!(interpret(&sims, th.t1, th.t2, th.delta).name(), expected);
        assert_eq!(select_service(&candidates(&sims), &th).unwrap().variant_name(), expected);
    }
}

#[test]
fn single_mid_range_candidate_cannot_be_disambiguated() {
    let th = MatchThresholds::default();
    assert_eq!(interpret(&[0.4], th.t1, th.t2, th.delta), Verdict::Nil);
    assert_eq!(select_service(&candidates(&[0.4]), &th).unwrap(), MatchOutcome::NoMatch);
}

#[test]
fn empty_and_invalid_inputs() {
    assert!(select_service(&[], &MatchThresholds::default()).is_err());
    assert!(MatchThresholds::new(0.2, 0.6, 0.01).is_err());
    assert!(MatchThresholds::new(0.6, 0.2, -0.1).is_err());
}

fn sims_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn relabelling_keeps_the_variant(sims in sims_strategy(), seed in any::<u64>()) {
        let th = MatchThresholds::default();
        let cands = candidates(&sims);
        let mut rng = StdRng::seed_from_u64(seed);
        let relabelled: Vec<MatchCandidate> = cands
            .iter()
            .map(|c| MatchCandidate::new(format!("X{}", rng.random::<u32>()), "m", c.similarity))
            .collect();
        prop_assert_eq!(
            select_service(&cands, &th).unwrap().variant_name(),
            select_service(&relabelled, &th).unwrap().variant_name()
        );
    }

    #[test]
    fn raising_the_top_never_demotes_a_selection(sims in sims_strategy(), bump in 0.0f64..1.0) {
        let th = MatchThresholds::default();
        let mut cands = candidates(&sims);
        let before = select_service(&cands, &th).unwrap();
        cands[0].similarity = (cands[0].similarity + bump).min(1.0);
        let after = select_service(&cands, &th).unwrap();
        if matches!(before, MatchOutcome::Selected(_)) {
            prop_assert!(matches!(after, MatchOutcome::Selected(_)));
        }
    }

    // With delta = 0 and distinct similarities the algorithm is arg-max plus thresholds.
    #[test]
    fn zero_delta_is_thresholded_argmax(sims in prop::collection::btree_set(0u32..1_000_000, 1..10)) {
        let sims: Vec<f64> = sims.into_iter().map(|s| s as f64 / 1_000_000.0).collect();
        let th = MatchThresholds::new(0.6, 0.2, 0.0).unwrap();
        let cands = candidates(&sims);
        let max = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expected = if max >= th.t1 {
            "Selected"
        } else if max >= th.t2 && sims.len() >= 2 {
            "NeedsDisambiguation"
        } else {
            "NoMatch"
        };
        let outcome = select_service(&cands, &th).unwrap();
        prop_assert_eq!(outcome.variant_name(), expected);
        if let MatchOutcome::Selected(c) = outcome {
            prop_assert_eq!(c.similarity, max);
        }
    }
}
