use std::collections::BTreeSet;

use proptest::prelude::*;

use dyncc_core::oracle::{self, Phase};
use dyncc_core::pipeline::{build_schedule, oracle_context, verify_schedule, EtaHatPolicy, PipelineOptions};
use dyncc_core::scheme::{assign_profiles, parse_cache_ratio, AssignmentPolicy, NetworkConfig};
use dyncc_core::{DeliveryMode, Error};

fn example_network() -> (NetworkConfig, dyncc_core::ProfileAssignment) {
    let net = NetworkConfig::new(10, 10, 1.0, parse_cache_ratio("1/4").unwrap(), 4, 4).unwrap();
    let assignment = assign_profiles(10, 4, &AssignmentPolicy::Explicit(vec![2, 2, 3, 3])).unwrap();
    (net, assignment)
}

fn opts(eta_hat: u32) -> PipelineOptions {
    PipelineOptions {
        eta_hat: EtaHatPolicy::Fixed(eta_hat),
        ..Default::default()
    }
}

#[test]
fn golden_dumps() {
    let (net, assignment) = example_network();
    for (eta_hat, golden) in [
        (2, include_str!("golden/example_eta2.txt")),
        (3, include_str!("golden/example_eta3.txt")),
    ] {
        let built = build_schedule(&net, &assignment, &opts(eta_hat)).unwrap();
        assert_eq!(built.schedule.dump(), golden, "eta_hat {eta_hat}");
    }
}

#[test]
fn coded_phase_alone_leaves_excluded_users_short() {
    let (net, assignment) = example_network();
    let built = build_schedule(&net, &assignment, &opts(2)).unwrap();
    let parsed = oracle::parse_dump(&built.schedule.dump())
        .unwrap()
        .only(Phase::CodedCaching);
    let users: Vec<u32> = (1..=10).collect();
    let report = oracle::verify(&parsed, &oracle_context(&net, &assignment), &users, 3);
    assert!(report.decodable());
    assert_eq!(report.incomplete_users(), BTreeSet::from([7, 10]));
    assert!(report
        .completeness
        .iter()
        .all(|v| matches!(v.kind, oracle::Shortfall::Missing(_))));
    assert_eq!(report.completeness.len(), 2 * 9);
    assert_eq!(report.dof_histogram.keys().copied().collect::<Vec<_>>(), vec![6]);
}

#[test]
fn stripped_dof_is_five_for_padded_profiles() {
    let (net, assignment) = example_network();
    let built = build_schedule(&net, &assignment, &opts(3)).unwrap();
    let report = verify_schedule(&built.schedule, &net, &assignment, &opts(3)).unwrap();
    assert!(report.passed(), "{report}");
    // alpha = 4, so nothing is deferred; the first round's vectors keep 5 users
    assert_eq!(built.schedule.deferred_transmissions, 0);
    assert!(built.schedule.cc[..3].iter().all(|t| t.achieved_dof() == 5));
    assert!(built.schedule.unicast.is_empty());
}

#[test]
fn unicast_only_covers_everything() {
    let (net, assignment) = example_network();
    let o = PipelineOptions {
        mode: DeliveryMode::UnicastOnly,
        ..Default::default()
    };
    let built = build_schedule(&net, &assignment, &o).unwrap();
    assert!(built.schedule.cc.is_empty());
    // 10 users x 3 packets, 4 streams per slot
    assert_eq!(built.schedule.unicast.len(), 8);
    assert!(verify_schedule(&built.schedule, &net, &assignment, &o)
        .unwrap()
        .passed());
}

#[test]
fn mismatched_assignment_is_a_config_error() {
    let (net, _) = example_network();
    let wrong = assign_profiles(10, 5, &AssignmentPolicy::RoundRobin).unwrap();
    assert!(matches!(
        build_schedule(&net, &wrong, &opts(2)),
        Err(Error::InvalidConfig(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_built_schedule_verifies(
        lengths in proptest::collection::vec(0u32..6, 2..9),
        alpha in 1u32..9,
        eta_hat in 1u32..6,
        seeded in any::<Option<u64>>(),
    ) {
        let p = lengths.len() as u32;
        let k: u32 = lengths.iter().sum();
        prop_assume!(k > 0);
        let net = NetworkConfig::new(k, k, 1.0, parse_cache_ratio(&format!("1/{p}")).unwrap(), alpha, alpha).unwrap();
        let assignment = assign_profiles(k, p, &AssignmentPolicy::Explicit(lengths.clone())).unwrap();
        let o = PipelineOptions {
            eta_hat: EtaHatPolicy::Fixed(eta_hat),
            exclusion: match seeded {
                Some(s) => dyncc_core::elevation::ExclusionPolicy::SeededRandom(s),
                None => dyncc_core::elevation::ExclusionPolicy::HighestIndexed,
            },
            ..Default::default()
        };
        match build_schedule(&net, &assignment, &o) {
            Err(Error::UnsupportedRegime(_)) => prop_assert!(alpha.div_ceil(eta_hat) + 1 > p),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
            Ok(built) => {
                let report = verify_schedule(&built.schedule, &net, &assignment, &o).unwrap();
                prop_assert!(report.passed(), "{}", report);
                // with alpha < eta_hat a whole profile shares a vector and
                // must be nulled among itself
                prop_assert!(report.max_nulling < alpha.max(eta_hat) as usize);
                if alpha >= eta_hat {
                    prop_assert!(report.max_nulling < alpha as usize);
                }
                for t in &built.schedule.cc {
                    prop_assert!(t.achieved_dof() >= alpha as usize);
                }
            }
        }
    }
}
