use std::collections::BTreeSet;
use std::io::Write;

use proptest::prelude::*;

use rkpf::indicators::{
    indicators_to_panel, load_publications, region_year_indicators, thematic_profiles, IndicatorNames,
    PublicationRecord, Quartile, SubjectVocabulary,
};
use rkpf::panel::{load_panel_csv, validate_balanced};
use rkpf::weights::build_weights;

const REGIONS: [&str; 4] = ["NORTH", "SOUTH", "EAST", "WEST"];
const AREAS: [&str; 5] = ["MATH", "PHYS", "CHEM", "MEDI", "SOCI"];

fn record() -> impl Strategy<Value = PublicationRecord> {
    (
        prop::collection::btree_set(0usize..4, 1..=3),
        prop::collection::btree_set(0usize..5, 1..=3),
        2018i32..2020,
        0u64..40,
        0.2f64..5.0,
        0usize..5,
    )
        .prop_map(|(rs, sa, year, citations, expected, q)| PublicationRecord {
            id: String::new(),
            year,
            regions: rs.into_iter().map(|i| REGIONS[i].to_string()).collect(),
            subject_areas: sa.into_iter().map(|i| AREAS[i].to_string()).collect(),
            citations,
            expected_citations: expected,
            journal_quartile: [Quartile::Q1, Quartile::Q2, Quartile::Q3, Quartile::Q4, Quartile::None][q],
        })
}

fn records() -> impl Strategy<Value = Vec<PublicationRecord>> {
    prop::collection::vec(record(), 1..60).prop_map(|mut v| {
        for (i, p) in v.iter_mut().enumerate() {
            p.id = format!("p{i}");
        }
        v
    })
}

fn vocab() -> SubjectVocabulary {
    SubjectVocabulary::new(AREAS.iter().map(|s| s.to_string()).collect()).unwrap()
}

proptest! {
    #[test]
    fn full_counting_never_undercounts(pubs in records()) {
        let rows = region_year_indicators(&pubs).unwrap();
        let total: usize = rows.iter().map(|r| r.pub_count).sum();
        let spans = pubs.iter().any(|p| p.regions.len() > 1);
        prop_assert!(total >= pubs.len());
        prop_assert_eq!(total == pubs.len(), !spans);
        for r in &rows {
            prop_assert!((0.0..=100.0).contains(&r.q1_share));
            prop_assert!((0.0..=100.0).contains(&r.nq_share));
            prop_assert!(r.q1_share + r.nq_share <= 100.0 + 1e-12);
        }
    }

    #[test]
    fn profiles_are_distributions(pubs in records(), year in prop::option::of(2018i32..2020)) {
        let Ok(m) = thematic_profiles(&pubs, &vocab(), year) else {
            // only possible when the year filter leaves nothing
            prop_assert!(year.is_some());
            return Ok(());
        };
        for row in m.shares().row_iter() {
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn publications_to_weights_and_panel() {
    let dir = tempfile::tempdir().unwrap();
    let pubs_path = dir.path().join("pubs.jsonl");
    let mut f = std::fs::File::create(&pubs_path).unwrap();
    let lines = [
        r#"{"id":"a","year":2019,"regions":["NORTH"],"subject_areas":["MATH","PHYS"],"citations":4,"expected_citations":2.0,"journal_quartile":"Q1"}"#,
        r#"{"id":"b","year":2019,"regions":["NORTH","SOUTH"],"subject_areas":["MATH"],"citations":1,"expected_citations":2.0,"journal_quartile":["Q3","Q2"]}"#,
        r#"{"id":"c","year":2019,"regions":["SOUTH"],"subject_areas":["MATH","PHYS"],"citations":0,"expected_citations":1.0,"journal_quartile":"NONE"}"#,
        r#"{"id":"d","year":2019,"regions":["EAST"],"subject_areas":["MEDI"],"citations":3,"expected_citations":1.5,"journal_quartile":"Q4"}"#,
        r#"{"id":"e","year":2020,"regions":["NORTH","SOUTH","EAST"],"subject_areas":["SOCI"],"citations":2,"expected_citations":1.0,"journal_quartile":"Q1"}"#,
    ];
    for l in lines {
        writeln!(f, "{l}").unwrap();
    }
    drop(f);
    let pubs = load_publications(&pubs_path).unwrap();
    assert_eq!(pubs[1].journal_quartile, Quartile::Q2);

    let rows = region_year_indicators(&pubs).unwrap();
    let north19 = rows.iter().find(|r| r.region == "NORTH" && r.year == 2019).unwrap();
    assert_eq!(north19.pub_count, 2);
    assert_eq!(north19.fwci, (2.0 + 0.5) / 2.0);
    assert_eq!(north19.q1_share, 50.0);
    assert_eq!(north19.nq_share, 0.0);

    let panel = indicators_to_panel(&rows, &IndicatorNames::with_suffix("A")).unwrap();
    assert!(panel.has_variable("FWCIA") && panel.has_variable("Q1SHA"));
    assert!(validate_balanced(&panel).passed);

    let m = thematic_profiles(&pubs, &vocab(), Some(2019)).unwrap();
    assert_eq!(m.regions(), ["EAST", "NORTH", "SOUTH"]);
    let w = build_weights(&m.correlation().unwrap());
    // NORTH and SOUTH share a MATH/PHYS profile; EAST is unrelated
    assert_eq!(w.isolated_regions(), ["EAST"]);
    assert_eq!(w.matrix()[(1, 2)], 1.0);
    assert_eq!(w.matrix()[(2, 1)], 1.0);

    let csv_path = dir.path().join("panel.csv");
    let mut out = Vec::new();
    rkpf::panel::write_panel_csv(&panel, &mut out).unwrap();
    std::fs::write(&csv_path, &out).unwrap();
    let back = load_panel_csv::<&str>(&csv_path, &[]).unwrap();
    let names: BTreeSet<&str> = back.variable_names().collect();
    assert!(names.contains("PUBCOUNTA"));
    for v in ["FWCIA", "Q1SHA", "NQSHA", "PUBCOUNTA"] {
        let (a, b) = (panel.variable(v).unwrap(), back.variable(v).unwrap());
        assert!(
            a.iter().zip(b).all(|(x, y)| x == y || (x.is_nan() && y.is_nan())),
            "{v}"
        );
    }
}
