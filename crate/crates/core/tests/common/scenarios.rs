//! Reference/prediction pairs built from phantoms, each expected to fail one
//! named matching condition.

use cowtopo::phantom::{apply_corruption, generate_phantom, AcomState, Corruption, Phantom, PhantomSpec, SegmentState};
use cowtopo::volume::{LabelMap, LabelVolume, Vessel};

pub struct Scenario {
    pub name: &'static str,
    pub gt: Phantom,
    pub pred: LabelVolume,
    /// Condition that must be reported.
    pub expect: &'static str,
}

fn gen(spec: &PhantomSpec) -> Phantom {
    generate_phantom(spec, &LabelMap::default()).unwrap()
}

fn corrupt(ph: &Phantom, c: Corruption) -> LabelVolume {
    apply_corruption(&ph.volume, &c, &LabelMap::default()).unwrap()
}

/// Voxel nearest to a world position.
pub fn voxel_at(vol: &LabelVolume, p: [f64; 3]) -> [usize; 3] {
    let o = vol.origin();
    let s = vol.spacing();
    std::array::from_fn(|a| ((p[a] - o[a]) / s[a]).round() as usize)
}

/// One scenario per corruption operator.
pub fn operator_scenarios() -> Vec<Scenario> {
    let full = gen(&PhantomSpec::default());
    let swap_region = full.roi;
    vec![
        Scenario {
            name: "Break",
            pred: corrupt(&full, Corruption::Break { vessel: Vessel::Acom, gap_mm: 1.5, at: None }),
            gt: full.clone(),
            expect: "Acom.betti0",
        },
        Scenario {
            name: "DropClass",
            pred: corrupt(&full, Corruption::DropClass { vessel: Vessel::LPcom }),
            gt: full.clone(),
            expect: "L-Pcom.presence",
        },
        Scenario {
            name: "FloatingBlob",
            pred: corrupt(
                &full,
                Corruption::FloatingBlob { vessel: Vessel::RPca, radius_mm: 1.0, offset_mm: [0.0, 0.0, 12.0] },
            ),
            gt: full.clone(),
            expect: "R-PCA.betti0",
        },
        Scenario {
            name: "CrossoverSwap",
            pred: corrupt(&full, Corruption::CrossoverSwap { a: Vessel::RAca, b: Vessel::LAca, region: swap_region }),
            gt: full.clone(),
            expect: "R-ACA.neighborhood(R-ICA)",
        },
        Scenario {
            name: "DilateErode",
            pred: corrupt(&full, Corruption::DilateErode { vessel: Vessel::RPcom, steps: -2 }),
            gt: full,
            expect: "R-Pcom.presence",
        },
    ]
}

/// Variant failure cases modelled on three recorded challenge cases.
pub fn case_scenarios() -> Vec<Scenario> {
    // False Acom: the reference lacks an Acom, the prediction draws one.
    let missing = PhantomSpec { acom: AcomState::Absent, seed: 116, ..Default::default() };
    let with_acom = gen(&PhantomSpec { acom: AcomState::Present, ..missing.clone() });
    let false_acom = Scenario {
        name: "false Acom",
        gt: gen(&missing),
        pred: with_acom.volume,
        expect: "Acom.presence",
    };

    // Third A2 cut off where it leaves the Acom.
    let third = gen(&PhantomSpec { third_a2: true, seed: 120, ..Default::default() });
    let at = voxel_at(&third.volume, [0.0, -8.0, 4.0]);
    let detached = Scenario {
        name: "3rd-A2 detached from Acom",
        pred: corrupt(&third, Corruption::Break { vessel: Vessel::ThirdA2, gap_mm: 3.6, at: Some(at) }),
        gt: third,
        expect: "3rd-A2.contact(Acom)",
    };

    // Fetal right PCA broken into two pieces.
    let fetal = gen(&PhantomSpec { r_fetal: true, r_p1: SegmentState::Aplastic, seed: 126, ..Default::default() });
    let fragmented = Scenario {
        name: "fragmented fetal PCA",
        pred: corrupt(&fetal, Corruption::Break { vessel: Vessel::RPca, gap_mm: 1.5, at: None }),
        gt: fetal,
        expect: "R-PCA.betti0",
    };
    vec![false_acom, detached, fragmented]
}
