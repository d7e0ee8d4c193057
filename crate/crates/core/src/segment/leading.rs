use crate::ingest::SeizureAnnotation;

/// Positions of the seizures that start a cluster.
///
/// The first seizure always leads; seizure `i` leads when at least
/// `seizure_free` seconds separate its onset from the end of seizure `i - 1`.
pub fn select_leading_seizures(annotations: &[SeizureAnnotation], seizure_free: f64) -> Vec<usize> {
    (0..annotations.len())
        .filter(|&i| i == 0 || annotations[i].onset - annotations[i - 1].end >= seizure_free)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const H: f64 = 3600.0;

    fn at_hours(spans: &[(f64, f64)]) -> Vec<SeizureAnnotation> {
        spans
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| SeizureAnnotation { seizure_index: i, onset: a * H, end: b * H })
            .collect()
    }

    #[test]
    fn clusters_by_gap() {
        let a = at_hours(&[(0.0, 0.1), (1.0, 1.1), (6.0, 6.1), (20.0, 20.1)]);
        assert_eq!(select_leading_seizures(&a, 4.0 * H), [0, 2, 3]);
    }

    #[test]
    fn single_and_empty() {
        assert_eq!(select_leading_seizures(&at_hours(&[(2.0, 2.1)]), 4.0 * H), [0]);
        assert!(select_leading_seizures(&[], 4.0 * H).is_empty());
    }

    #[test]
    fn gap_of_exactly_t_starts_a_cluster() {
        let a = at_hours(&[(0.0, 1.0), (5.0, 5.5)]);
        assert_eq!(select_leading_seizures(&a, 4.0 * H), [0, 1]);
    }

    fn timeline() -> impl Strategy<Value = Vec<SeizureAnnotation>> {
        prop::collection::vec((0.0f64..10.0, 0.01f64..0.5), 0..12).prop_map(|steps| {
            let mut t = 0.0;
            steps
                .into_iter()
                .enumerate()
                .map(|(i, (gap, dur))| {
                    t += gap * H;
                    let s = SeizureAnnotation { seizure_index: i, onset: t, end: t + dur * H };
                    t += dur * H;
                    s
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn idempotent(a in timeline()) {
            let lead = select_leading_seizures(&a, 4.0 * H);
            let sub: Vec<_> = lead.iter().map(|&i| a[i]).collect();
            let again = select_leading_seizures(&sub, 4.0 * H);
            prop_assert_eq!(again, (0..sub.len()).collect::<Vec<_>>());
        }

        #[test]
        fn inserting_follow_up_keeps_leaders(a in timeline(), at in 0usize..12, frac in 0.0f64..1.0) {
            prop_assume!(a.len() >= 2);
            let i = at % (a.len() - 1);
            let lead = select_leading_seizures(&a, 4.0 * H);
            // only between two members of one cluster
            prop_assume!(!lead.contains(&(i + 1)));
            let room = a[i + 1].onset - a[i].end;
            prop_assume!(room > 2.0);
            let onset = a[i].end + 0.5 + frac * (room - 2.0);
            let mut b = a.clone();
            b.insert(i + 1, SeizureAnnotation { seizure_index: 99, onset, end: onset + 1.0 });
            let lead_b = select_leading_seizures(&b, 4.0 * H);
            let ids = |v: &[usize], s: &[SeizureAnnotation]| v.iter().map(|&k| s[k].onset).collect::<Vec<_>>();
            prop_assert_eq!(ids(&lead, &a), ids(&lead_b, &b));
        }
    }
}
