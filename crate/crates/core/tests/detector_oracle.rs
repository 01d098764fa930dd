mod common;

use common::{detected, oracle, random_case, random_store};
use dq_core::detectors::{detect_all, sort_issues};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn duplicates_and_conflicts_match_brute_force(seed in any::<u64>()) {
        let case = random_case(&mut StdRng::seed_from_u64(seed));
        prop_assert_eq!(detected(&case), oracle(&case), "rows {:?} key {:?}", case.raw, case.key);
    }

    #[test]
    fn issue_ids_are_unique_and_order_is_canonical(seed in any::<u64>()) {
        let (schema, dataset) = random_store(&mut StdRng::seed_from_u64(seed), None);
        let issues = detect_all(&dataset, &schema).unwrap();
        let mut ids: Vec<&str> = issues.iter().map(|i| i.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), issues.len());
        let mut resorted = issues.clone();
        sort_issues(&mut resorted);
        prop_assert_eq!(resorted, issues);
    }
}

#[test]
fn one_column_tables_with_empty_cells() {
    // Quoted lone empty fields are records, not blank lines.
    let case = random_case(&mut StdRng::seed_from_u64(7));
    assert_eq!(detected(&case), oracle(&case));
}
