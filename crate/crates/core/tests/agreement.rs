mod common;

use common::{compare, corpus, opts, random_cfm, CORPUS_SHAPE};
use mbsync_core::decide::{self, DecideError};
use mbsync_core::automata::{Limits, SearchError};
use mbsync_core::model::{self, Network};
use mbsync_core::oracle;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[test]
fn engines_agree_with_the_oracle_on_a_corpus() {
    let started = Instant::now();
    let mut bad = Vec::new();
    let mut exhaustive = 0;
    let machines = corpus(7, 60);
    for c in &machines {
        let rep = oracle::exhaustive_verdicts(c, 8).unwrap();
        let cmp = compare(c, &rep, 3);
        exhaustive += cmp.exhaustive as usize;
        bad.extend(cmp.disagreements);
        bad.extend(cmp.witness_failures);
    }
    println!("{} machines, {exhaustive} fully enumerated, {:?}", machines.len(), started.elapsed());
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn bounded_engine_agrees_with_exact_engine() {
    let machines = corpus(11, 80);
    let mut compared = 0;
    for c in &machines {
        let exact = decide::check_sync(c, &opts()).unwrap();
        // The bounded search may legitimately run out of budget on looping machines.
        let small = decide::Options { limits: Limits::with_max_states(200_000) };
        let bounded = match decide::check_sync_bounded(c, 6, 10, &small) {
            Err(DecideError::Search(SearchError::BudgetExceeded(_))) => continue,
            r => r.unwrap(),
        };
        compared += 1;
        if bounded.exhaustive || !bounded.is_yes() {
            assert_eq!(exact.answer, bounded.answer, "{}", model::render_cfm(c));
        }
        if let Some(w) = bounded.witness {
            assert!(model::run(c, &Network::Mailbox, &w).is_ok());
            assert!(!oracle::is_synchronizable_bf(&w));
        }
    }
    assert!(compared * 4 >= machines.len() * 3, "only {compared} of {} compared", machines.len());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ksync_is_monotone_in_k(seed in any::<u64>()) {
        let c = random_cfm(&mut ChaCha8Rng::seed_from_u64(seed), CORPUS_SHAPE, "m");
        let mut prev = false;
        for k in 1..=4 {
            let yes = decide::check_ksync(&c, k, &opts()).unwrap().is_yes();
            prop_assert!(!prev || yes, "yes at {} but no at {}", k - 1, k);
            prev = yes;
        }
    }

    #[test]
    fn inferred_k_is_tight(seed in any::<u64>()) {
        let c = random_cfm(&mut ChaCha8Rng::seed_from_u64(seed), CORPUS_SHAPE, "m");
        let v = decide::infer_k(&c, &opts()).unwrap();
        if let Some(k) = v.k {
            prop_assert!(decide::check_ksync(&c, k, &opts()).unwrap().is_yes());
            if k > 1 {
                prop_assert!(!decide::check_ksync(&c, k - 1, &opts()).unwrap().is_yes());
            }
        } else {
            prop_assert!(!v.is_yes());
        }
    }

    #[test]
    fn reachability_witnesses_are_synchronous(seed in any::<u64>()) {
        let c = random_cfm(&mut ChaCha8Rng::seed_from_u64(seed), CORPUS_SHAPE, "m");
        prop_assume!(decide::check_sync(&c, &opts()).unwrap().is_yes());
        let (boundaries, _) = decide::reachable_boundaries(&c, &opts()).unwrap();
        for b in boundaries.iter().take(10) {
            let v = decide::reachable(&c, &b.global, &opts()).unwrap();
            prop_assert!(v.is_yes());
            let w = v.witness.unwrap();
            prop_assert!(mbsync_core::msc::is_synchronous(&Network::Mailbox, &w));
            let confs = model::run(&c, &Network::Mailbox, &w).unwrap();
            prop_assert!(confs.iter().any(|x| x.global == b.global));
        }
    }

    #[test]
    fn two_process_systems_are_mailbox_similar(seed in any::<u64>()) {
        let shape = common::Shape { max_processes: 2, ..CORPUS_SHAPE };
        let c = random_cfm(&mut ChaCha8Rng::seed_from_u64(seed), shape, "two");
        prop_assume!(decide::check_sync(&c, &opts()).unwrap().is_yes());
        prop_assert!(decide::check_mbsim(&c, &opts()).unwrap().is_yes());
    }
}
