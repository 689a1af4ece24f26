use disctok::metrics::{joint_counts, phone_purity, pnmi, token_purity, ContingencyTable, PhoneLabels};
use disctok::TokenSequence;
use proptest::prelude::*;

fn table() -> impl Strategy<Value = Vec<Vec<u64>>> {
    table_with(1)
}

fn table_with(min_tokens: usize) -> impl Strategy<Value = Vec<Vec<u64>>> {
    (min_tokens..6, 2usize..6).prop_flat_map(|(nt, ny)| {
        prop::collection::vec(prop::collection::vec(0u64..30, ny), nt).prop_filter("two phones", |rows| {
            (0..rows[0].len()).filter(|&y| rows.iter().any(|r| r[y] > 0)).count() >= 2
        })
    })
}

fn scores(rows: &[Vec<u64>]) -> [f64; 3] {
    let t = ContingencyTable::from_rows(rows);
    [phone_purity(&t).unwrap(), token_purity(&t).unwrap(), pnmi(&t).unwrap()]
}

proptest! {
    #[test]
    fn scores_lie_in_unit_interval(rows in table()) {
        for s in scores(&rows) {
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn relabeling_tokens_and_phones_changes_nothing(rows in table(), rot_t in 0usize..6, rot_y in 0usize..6) {
        let nt = rows.len();
        let ny = rows[0].len();
        let permuted: Vec<Vec<u64>> = (0..nt)
            .map(|i| (0..ny).map(|j| rows[(i + rot_t) % nt][(ny - 1 - j + rot_y) % ny]).collect())
            .collect();
        for (a, b) in scores(&rows).iter().zip(scores(&permuted)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn token_purity_is_transposed_phone_purity(rows in table()) {
        let t = ContingencyTable::from_rows(&rows);
        prop_assert_eq!(token_purity(&t).unwrap(), phone_purity(&t.transpose()).unwrap());
    }

    #[test]
    fn merging_tokens_never_raises_pnmi(rows in table_with(2), a in 0usize..6, step in 1usize..6) {
        let a = a % rows.len();
        let b = (a + 1 + step % (rows.len() - 1)) % rows.len();
        let t = ContingencyTable::from_rows(&rows);
        let merged = t.merge_tokens(a, b);
        prop_assert!(pnmi(&merged).unwrap() <= pnmi(&t).unwrap() + 1e-12);
        prop_assert!(phone_purity(&merged).unwrap() <= phone_purity(&t).unwrap() + 1e-12);
    }
}

#[test]
fn many_to_one_tokens_still_determine_phones() {
    let t = ContingencyTable::from_rows(&[[0u64, 4, 0], [9, 0, 0], [0, 0, 2], [0, 3, 0]]);
    assert_eq!(pnmi(&t).unwrap(), 1.0);
    assert_eq!(phone_purity(&t).unwrap(), 1.0);
    assert!(token_purity(&t).unwrap() < 1.0);
}

#[test]
fn corpus_counts_feed_the_scores() {
    let labels = PhoneLabels::parse("a\t0 0 1 1\nb\t2 2\n", "labels").unwrap();
    let corpus = [
        TokenSequence::new("a", vec![3, 3, 1, 1], 4, 50.0).unwrap(),
        TokenSequence::new("b", vec![0, 0], 4, 50.0).unwrap(),
    ];
    let t = joint_counts(&corpus, &labels).unwrap();
    assert_eq!((t.num_tokens(), t.num_phones(), t.total()), (4, 3, 6));
    assert_eq!(pnmi(&t).unwrap(), 1.0);
}
