mod common;

use common::scenarios::{case_scenarios, operator_scenarios};
use cowtopo::phantom::{generate_phantom, spec_lattice};
use cowtopo::topology::{
    aggregate_match_rates, classify_detection, classify_variants, detect_class, extract_component_graph, format_percent,
    precision_recall, AnteriorVariant, Detection, DetectionCounts, GraphOptions, MatchOptions, MatchReport, PosteriorVariant,
    ZeroOverlapPolicy,
};
use cowtopo::volume::{LabelMap, LabelVolume, Vessel};

fn report(gt: &LabelVolume, pred: &LabelVolume) -> MatchReport {
    let map = LabelMap::default();
    let opts = GraphOptions::default();
    let g = extract_component_graph(gt, &map, &opts).unwrap();
    let p = extract_component_graph(pred, &map, &opts).unwrap();
    MatchReport::new("case", &g, &p, &MatchOptions::default())
}

#[test]
fn lattice_self_match_is_complete() {
    let map = LabelMap::default();
    let mut reports = Vec::new();
    let mut diagnoses = Vec::new();
    for spec in spec_lattice() {
        let ph = generate_phantom(&spec, &map).unwrap();
        let r = report(&ph.volume, &ph.volume);
        assert!(r.anterior_matched && r.posterior_matched, "{spec:?}: {:?}", r.failed_conditions());
        diagnoses.push(classify_variants(&ph.graph));
        reports.push(r);
    }
    let rates = aggregate_match_rates(&reports, &diagnoses).unwrap();
    assert_eq!(rates.anterior.len(), 3);
    assert_eq!(rates.posterior.len(), 4);
    for r in rates.anterior.values().chain(rates.posterior.values()) {
        assert_eq!(r.fraction(), 1.0);
    }
    let with_acom = rates.anterior[&AnteriorVariant::WithAcom];
    // Present and double Acom specs.
    assert_eq!(with_acom.total, 24);
    assert_eq!(rates.posterior[&PosteriorVariant::NoPcoms].total, 12);
}

#[test]
fn each_operator_fails_its_condition() {
    for s in operator_scenarios() {
        let r = report(&s.gt.volume, &s.pred);
        let failed = r.failed_conditions();
        assert!(failed.contains(&s.expect), "{}: {failed:?}", s.name);
    }
}

#[test]
fn recorded_case_scenarios_do_not_match() {
    for s in case_scenarios() {
        let r = report(&s.gt.volume, &s.pred);
        assert!(!(r.anterior_matched && r.posterior_matched), "{}", s.name);
        assert!(r.failed_conditions().contains(&s.expect), "{}: {:?}", s.name, r.failed_conditions());
    }
}

#[test]
fn corruptions_stay_on_their_side_of_the_circle() {
    for s in operator_scenarios() {
        let r = report(&s.gt.volume, &s.pred);
        let anterior = ["Acom", "R-ACA", "L-ACA", "3rd-A2"].iter().any(|v| s.expect.starts_with(v));
        if anterior {
            assert!(r.posterior_matched, "{}: {:?}", s.name, r.posterior_failed);
        } else {
            assert!(r.anterior_matched, "{}: {:?}", s.name, r.anterior_failed);
        }
    }
}

#[test]
fn detection_truth_table_exhaustive() {
    // All presence/overlap combinations on a two-voxel grid.
    let map = LabelMap::default();
    let c = map.id(Vessel::Acom);
    for gt_bits in 0u8..4 {
        for pred_bits in 0u8..4 {
            let vol = |bits: u8| {
                let mut v = LabelVolume::zeros([2, 1, 1]);
                for i in 0..2 {
                    if bits & (1 << i) != 0 {
                        v.set([i, 0, 0], c);
                    }
                }
                v
            };
            let (g, p) = (vol(gt_bits), vol(pred_bits));
            let overlap = gt_bits & pred_bits != 0;
            let want = match (gt_bits != 0, pred_bits != 0) {
                (false, false) => Detection::TrueNegative,
                _ if overlap => Detection::TruePositive,
                (true, _) => Detection::FalseNegative,
                (false, true) => Detection::FalsePositive,
            };
            assert_eq!(detect_class(&g, &p, c, &map).unwrap(), want, "{gt_bits:02b} {pred_bits:02b}");
            let n = |b: u8| b.count_ones() as u64;
            assert_eq!(classify_detection(n(gt_bits), n(pred_bits), n(gt_bits & pred_bits)), want);
        }
    }
}

#[test]
fn nan_when_nothing_is_predicted_or_present() {
    let mut counts = DetectionCounts::new(ZeroOverlapPolicy::FalseNegative);
    for _ in 0..4 {
        counts.record(Vessel::ThirdA2, Detection::TrueNegative, false);
        counts.record(Vessel::Acom, Detection::FalseNegative, false);
    }
    let pr = precision_recall(&counts);
    let (p, r) = pr[&Vessel::ThirdA2];
    assert_eq!((format_percent(p), format_percent(r)), ("nan".to_string(), "nan".to_string()));
    let (p, r) = pr[&Vessel::Acom];
    assert_eq!((format_percent(p), format_percent(r)), ("nan".to_string(), "0.0".to_string()));
}
