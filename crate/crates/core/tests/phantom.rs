mod common;

use cowtopo::metrics::{betti0, Connectivity};
use cowtopo::phantom::{
    apply_corruption, corruption_support, expected_graph, generate_phantom, spec_lattice, AcomState, Corruption, PhantomSpec,
    SegmentState,
};
use cowtopo::topology::{extract_component_graph, GraphOptions};
use cowtopo::volume::{merge_to_binary, LabelMap, Vessel};

fn map() -> LabelMap {
    LabelMap::default()
}

#[test]
fn lattice_renders_its_expected_graph() {
    let map = map();
    for spec in spec_lattice() {
        let ph = generate_phantom(&spec, &map).unwrap_or_else(|e| panic!("{spec:?}: {e}"));
        let got = extract_component_graph(&ph.volume, &map, &GraphOptions::default()).unwrap();
        let want = expected_graph(&spec).unwrap();
        assert_eq!(got.shape(), want.shape(), "{spec:?}");
        // Construction-time voxel counts agree with the extracted components.
        assert_eq!(got, ph.graph, "{spec:?}");
    }
}

#[test]
fn every_rendered_class_is_one_component_per_node() {
    let map = map();
    for spec in spec_lattice().into_iter().step_by(5) {
        let ph = generate_phantom(&spec, &map).unwrap();
        for v in Vessel::ALL {
            let want = ph.graph.component_count(v);
            let class = map.id(v);
            assert_eq!(common::flood_fill_class(&ph.volume, class), want as usize, "{v} in {spec:?}");
        }
    }
}

#[test]
fn generation_is_deterministic() {
    let spec = PhantomSpec {
        seed: 42,
        acom: AcomState::Double,
        ..Default::default()
    };
    let a = generate_phantom(&spec, &map()).unwrap();
    let b = generate_phantom(&spec, &map()).unwrap();
    assert_eq!(a.volume, b.volume);
    assert_eq!(a.roi, b.roi);
    let c = generate_phantom(&PhantomSpec { seed: 43, ..spec }, &map()).unwrap();
    assert_ne!(a.volume, c.volume);
}

#[test]
fn roi_covers_vessels_with_margin() {
    let ph = generate_phantom(&PhantomSpec::default(), &map()).unwrap();
    let cropped = ph.volume.crop(&ph.roi).unwrap();
    assert_eq!(cropped.foreground_count(), ph.volume.foreground_count());
    let [nx, ny, nz] = cropped.dims();
    for (i, &l) in cropped.data().iter().enumerate() {
        if l != 0 {
            let [x, y, z] = cropped.coords(i);
            assert!(x >= 2 && y >= 2 && z >= 2 && x + 2 < nx && y + 2 < ny && z + 2 < nz);
        }
    }
}

#[test]
fn full_circle_has_twelve_classes_and_twelve_contacts() {
    let map = map();
    let ph = generate_phantom(&PhantomSpec::default(), &map).unwrap();
    let g = extract_component_graph(&ph.volume, &map, &GraphOptions::default()).unwrap();
    assert_eq!(g.nodes().len(), 12);
    assert_eq!(g.edges().len(), 12);
    assert!(!g.present(Vessel::ThirdA2));
}

#[test]
fn mra_spacing_renders() {
    let map = map();
    let spec = PhantomSpec {
        dims: [200, 160, 100],
        spacing: [0.3, 0.3, 0.6],
        ..Default::default()
    };
    let ph = generate_phantom(&spec, &map).unwrap();
    let g = extract_component_graph(&ph.volume, &map, &GraphOptions::default()).unwrap();
    assert_eq!(g.shape(), expected_graph(&spec).unwrap().shape());
}

#[test]
fn break_splits_the_acom() {
    let map = map();
    let ph = generate_phantom(&PhantomSpec::default(), &map).unwrap();
    let c = Corruption::Break {
        vessel: Vessel::Acom,
        gap_mm: 1.5,
        at: None,
    };
    let out = apply_corruption(&ph.volume, &c, &map).unwrap();
    assert_eq!(common::flood_fill_class(&out, map.id(Vessel::Acom)), 2);
    let g = extract_component_graph(&out, &map, &GraphOptions::default()).unwrap();
    assert_eq!(g.component_count(Vessel::Acom), 2);
}

#[test]
fn floating_blob_adds_one_binary_component() {
    let map = map();
    let ph = generate_phantom(&PhantomSpec::default(), &map).unwrap();
    let before = betti0(&merge_to_binary(&ph.volume), Connectivity::TwentySix);
    let c = Corruption::FloatingBlob {
        vessel: Vessel::Ba,
        radius_mm: 1.0,
        offset_mm: [0.0, 8.0, -12.0],
    };
    let out = apply_corruption(&ph.volume, &c, &map).unwrap();
    let after = betti0(&merge_to_binary(&out), Connectivity::TwentySix);
    assert_eq!(after, before + 1);
    assert_eq!(common::flood_fill_count(&merge_to_binary(&out), 26), after);
}

#[test]
fn aplastic_a1_leaves_aca_on_the_acom_only() {
    let map = map();
    let spec = PhantomSpec {
        r_a1: SegmentState::Aplastic,
        ..Default::default()
    };
    let ph = generate_phantom(&spec, &map).unwrap();
    let g = extract_component_graph(&ph.volume, &map, &GraphOptions::default()).unwrap();
    assert!(g.touches(Vessel::RAca, Vessel::Acom));
    assert!(!g.touches(Vessel::RAca, Vessel::RIca));
}

#[test]
fn fetal_pca_hangs_off_the_pcom() {
    let map = map();
    let spec = PhantomSpec {
        l_fetal: true,
        l_p1: SegmentState::Aplastic,
        ..Default::default()
    };
    let ph = generate_phantom(&spec, &map).unwrap();
    let g = extract_component_graph(&ph.volume, &map, &GraphOptions::default()).unwrap();
    assert!(g.touches(Vessel::LPca, Vessel::LPcom));
    assert!(!g.touches(Vessel::LPca, Vessel::Ba));
    assert!(g.touches(Vessel::RPca, Vessel::Ba));
}

#[test]
fn corruptions_only_touch_their_support() {
    let map = map();
    let ph = generate_phantom(&PhantomSpec::default(), &map).unwrap();
    let cs = [
        "break:Acom:1.5",
        "drop:L-Pcom",
        "blob:BA:1:0,8,-12",
        "morph:R-MCA:+1",
        "morph:R-MCA:-1",
    ]
    .map(|s| s.parse::<Corruption>().unwrap())
    .to_vec();
    let mut cs = cs;
    let roi = ph.roi;
    cs.push(Corruption::CrossoverSwap {
        a: Vessel::LAca,
        b: Vessel::RAca,
        region: roi,
    });
    for c in cs {
        let out = apply_corruption(&ph.volume, &c, &map).unwrap();
        let support: std::collections::HashSet<usize> = corruption_support(&ph.volume, &c, &map).unwrap().into_iter().collect();
        let mut changed = 0;
        for (i, (a, b)) in ph.volume.data().iter().zip(out.data()).enumerate() {
            if a != b {
                changed += 1;
                assert!(support.contains(&i), "{c} changed voxel {i} outside its support");
            }
        }
        assert!(changed > 0, "{c} changed nothing");
    }
}
