use eochain_core::engine::{run_with, RunOptions};
use eochain_core::metrics::{end_to_end_latency, service_report, time_to_first_info};
use eochain_core::onboard::ArchitectureMode;
use eochain_core::orbit::Geometry;
use eochain_core::{presets, ProductKind, Scenario};
use proptest::prelude::*;

fn scenario(seed: u64, days: f64) -> Scenario {
    let mut s = presets::iride_heo();
    s.seed = seed;
    s.horizon_s = days * 86_400.0;
    s.satellites.truncate(8);
    s
}

#[test]
fn added_ground_latency_never_speeds_up_delivery() {
    let s = scenario(5, 3.0);
    let g = Geometry::compute(&s);
    let base = run_with(&s, RunOptions { geometry: Some(&g), ..Default::default() }).unwrap();
    let mut slow = s.clone();
    slow.latencies.pdgs_mask_s += 900.0;
    slow.latencies.pdgs_raw_s += 900.0;
    let later = run_with(&slow, RunOptions { geometry: Some(&g), ..Default::default() }).unwrap();
    assert_eq!(base.acquisitions, later.acquisitions);
    for p in &later.products {
        if p.delivered.is_some() {
            let before = end_to_end_latency(&base, p.product.id).unwrap();
            assert!(end_to_end_latency(&later, p.product.id).unwrap() >= before + 900.0 - 1e-6);
        }
    }
    for e in &base.events {
        match (time_to_first_info(&base, e.id).unwrap(), time_to_first_info(&later, e.id).unwrap()) {
            (Some(a), Some(b)) => assert!(b >= a),
            (None, b) => assert!(b.is_none()),
            _ => {}
        }
    }
}

#[test]
fn raw_latency_covers_its_downlink() {
    let s = scenario(9, 2.0);
    let t = run_with(&s, RunOptions { mode: Some(ArchitectureMode::RawOnly), ..Default::default() }).unwrap();
    let mut checked = 0;
    for p in t.products.iter().filter(|p| p.product.kind == ProductKind::RawScene && p.delivered.is_some()) {
        let busy: f64 = t.transfers.iter().filter(|r| r.product_id == p.product.id).map(|r| r.end - r.start).sum();
        assert!(end_to_end_latency(&t, p.product.id).unwrap() >= busy);
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn completeness_is_full_with_perfect_classifier_and_links() {
    let mut s = scenario(3, 4.0);
    s.onboard.accuracy = 1.0;
    s.cloud_model.mean_fraction = 0.0;
    let r = service_report(&run_with(&s, RunOptions::default()).unwrap());
    let acquired: Vec<_> = r.events.iter().filter(|e| e.detectable).collect();
    assert!(!acquired.is_empty());
    // every detectable event that started early enough is eventually delivered
    let early: Vec<_> = acquired.iter().filter(|e| e.start_s < 86_400.0).collect();
    assert!(early.iter().all(|e| e.time_to_first_info.is_some()));
    assert!(r.completeness.ratio <= 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn runs_are_causal_and_balanced(seed in any::<u64>(), hybrid in any::<bool>()) {
        let s = scenario(seed, 2.0);
        let mode = if hybrid { ArchitectureMode::Hybrid } else { ArchitectureMode::RawOnly };
        let t = run_with(&s, RunOptions { mode: Some(mode), ..Default::default() }).unwrap();
        prop_assert!(t.volume.balances());
        for p in &t.products {
            prop_assert!(p.product.created >= p.acquired);
            if let Some(d) = p.downlinked {
                prop_assert!(d >= p.product.created && d <= s.horizon_s);
            }
            if let Some(d) = p.delivered {
                prop_assert!(d >= p.downlinked.unwrap());
            }
        }
        for r in &t.marketplace {
            prop_assert!(r.delivered <= s.horizon_s);
        }
        let again = run_with(&s, RunOptions { mode: Some(mode), ..Default::default() }).unwrap();
        prop_assert_eq!(t, again);
    }

    #[test]
    fn hybrid_never_generates_more_than_raw(seed in any::<u64>()) {
        let s = scenario(seed, 2.0);
        let g = Geometry::compute(&s);
        let run = |mode| run_with(&s, RunOptions { mode: Some(mode), geometry: Some(&g), ..Default::default() }).unwrap();
        let (h, r) = (run(ArchitectureMode::Hybrid), run(ArchitectureMode::RawOnly));
        prop_assert!(h.volume.generated <= r.volume.generated);
        prop_assert_eq!(&h.events, &r.events);
    }
}
