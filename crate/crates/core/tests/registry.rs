use std::sync::Arc;

use proptest::prelude::*;
use sgforge_core::model::Grain;
use sgforge_core::registry::*;

fn editor(id: &str, kinds: &[&str], level: AdaptationLevel, knowledge: ProgrammingKnowledge) -> EditorDescriptor {
    EditorDescriptor {
        id: id.into(),
        name: format!("{id} editor"),
        applicable_kinds: kinds.iter().map(|k| k.to_string()).collect(),
        adaptation_level: level,
        min_programming_knowledge: knowledge,
    }
}

fn activity(id: &str, grain: Grain, kind: &str) -> ActivityDescriptor {
    ActivityDescriptor {
        id: id.into(),
        name: id.into(),
        grain,
        kind: kind.into(),
        use_characteristics: String::new(),
        objectives_addressed: vec![],
    }
}

fn crossword_catalog() -> Catalog {
    use AdaptationLevel::*;
    use ProgrammingKnowledge as K;
    let mut c = Catalog::default();
    c.register_editor(editor("cw-colors", &["crossword"], InterfaceOnly, K::None)).unwrap();
    c.register_editor(editor("cw-template", &["crossword", "puzzle"], Template, K::Scripting)).unwrap();
    c.register_editor(editor("cw-source", &["crossword"], SourceAccess, K::Programmer)).unwrap();
    c.register_editor(editor("vote-kit", &["voting"], InterfaceOnly, K::None)).unwrap();
    c
}

#[test]
fn non_programmer_only_gets_the_interface_editor() {
    let expert = ExpertProfile {
        programming_knowledge: ProgrammingKnowledge::None,
        desired_adaptation: AdaptationLevel::SourceAccess,
    };
    let ids: Vec<String> = crossword_catalog().find_editors("crossword", expert).into_iter().map(|e| e.id).collect();
    assert_eq!(ids, ["cw-colors"]);
}

#[test]
fn programmer_wanting_source_gets_source_editor_first() {
    let expert = ExpertProfile {
        programming_knowledge: ProgrammingKnowledge::Programmer,
        desired_adaptation: AdaptationLevel::SourceAccess,
    };
    let ids: Vec<String> = crossword_catalog().find_editors("crossword", expert).into_iter().map(|e| e.id).collect();
    assert_eq!(ids, ["cw-source", "cw-template", "cw-colors"]);
}

#[test]
fn empty_registry_finds_nothing() {
    let expert = ExpertProfile {
        programming_knowledge: ProgrammingKnowledge::Programmer,
        desired_adaptation: AdaptationLevel::Template,
    };
    assert!(Catalog::default().find_editors("crossword", expert).is_empty());
}

#[test]
fn list_activities_filters_conjunctively() {
    let mut c = Catalog::default();
    c.register_activity(activity("b-cross", Grain::MicroActivity, "crossword")).unwrap();
    c.register_activity(activity("a-vote", Grain::MicroActivity, "voting")).unwrap();
    c.register_activity(activity("c-course", Grain::Module, "crossword")).unwrap();
    let ids = |f: ActivityFilter| c.list_activities(&f).into_iter().map(|a| a.id).collect::<Vec<_>>();
    assert_eq!(ids(ActivityFilter::default()), ["a-vote", "b-cross", "c-course"]);
    assert_eq!(ids(ActivityFilter { grain: Some(Grain::MicroActivity), kind: None }), ["a-vote", "b-cross"]);
    assert_eq!(
        ids(ActivityFilter { grain: Some(Grain::MicroActivity), kind: Some("crossword".into()) }),
        ["b-cross"]
    );
    assert!(ids(ActivityFilter { grain: Some(Grain::Activity), kind: None }).is_empty());
}

#[test]
fn store_persists_and_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("catalog.xml");
    let reg = Registry::open(&path).unwrap();
    let before = reg.list_activities(&ActivityFilter::default()).len();
    reg.register_activity(activity("crossword-1", Grain::MicroActivity, "crossword")).unwrap();
    assert_eq!(reg.list_activities(&ActivityFilter::default()).len(), before + 1);
    reg.register_editor(editor("cw", &["crossword"], AdaptationLevel::Template, ProgrammingKnowledge::None)).unwrap();
    assert!(reg.register_activity(activity("crossword-1", Grain::Module, "x")).is_err());

    let reopened = Registry::open(&path).unwrap();
    assert_eq!(reopened.snapshot(), reg.snapshot());
}

#[test]
fn concurrent_registrations_are_all_kept() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("catalog.xml");
    let reg = Arc::new(Registry::open(&path).unwrap());
    let handles: Vec<_> = (0..8)
        .map(|t| {
            let reg = Arc::clone(&reg);
            std::thread::spawn(move || {
                for i in 0..10 {
                    reg.register_activity(activity(&format!("a-{t}-{i}"), Grain::Activity, "puzzle")).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(Registry::open(&path).unwrap().snapshot().activities.len(), 80);
}

fn arb_text() -> impl Strategy<Value = String> {
    "[ -~\n\té]{0,12}"
}

fn arb_activity() -> impl Strategy<Value = ActivityDescriptor> {
    (
        "[a-z][a-z0-9-]{0,8}",
        arb_text(),
        prop::sample::select(Grain::ALL.to_vec()),
        "[a-z]{1,8}",
        arb_text(),
        prop::collection::vec("[a-z]{1,6}", 0..3),
    )
        .prop_map(|(id, name, grain, kind, use_characteristics, objectives_addressed)| ActivityDescriptor {
            id,
            name,
            grain,
            kind,
            use_characteristics,
            objectives_addressed,
        })
}

fn arb_editor() -> impl Strategy<Value = EditorDescriptor> {
    (
        "[a-z][a-z0-9-]{0,8}",
        arb_text(),
        prop::collection::vec("[a-z]{1,8}", 1..4),
        prop::sample::select(AdaptationLevel::ALL.to_vec()),
        prop::sample::select(ProgrammingKnowledge::ALL.to_vec()),
    )
        .prop_map(|(id, name, applicable_kinds, adaptation_level, min_programming_knowledge)| EditorDescriptor {
            id,
            name,
            applicable_kinds,
            adaptation_level,
            min_programming_knowledge,
        })
}

fn arb_catalog() -> impl Strategy<Value = Catalog> {
    (prop::collection::vec(arb_activity(), 0..6), prop::collection::vec(arb_editor(), 0..6)).prop_map(|(acts, eds)| {
        let mut c = Catalog::default();
        for a in acts {
            let _ = c.register_activity(a);
        }
        for e in eds {
            let _ = c.register_editor(e);
        }
        c
    })
}

proptest! {
    #[test]
    fn catalog_xml_round_trip(c in arb_catalog()) {
        prop_assert_eq!(Catalog::from_xml(c.to_xml().as_bytes()).unwrap(), c);
    }

    #[test]
    fn find_editors_respects_knowledge_and_is_stable(
        c in arb_catalog(),
        kind in "[a-z]{1,2}",
        knowledge in prop::sample::select(ProgrammingKnowledge::ALL.to_vec()),
        desired in prop::sample::select(AdaptationLevel::ALL.to_vec()),
    ) {
        let expert = ExpertProfile { programming_knowledge: knowledge, desired_adaptation: desired };
        let found = c.find_editors(&kind, expert);
        for e in &found {
            prop_assert!(e.min_programming_knowledge <= knowledge);
            prop_assert!(e.applicable_kinds.contains(&kind));
        }
        let dist = |e: &EditorDescriptor| (e.adaptation_level as i32 - desired as i32).abs();
        for w in found.windows(2) {
            prop_assert!((dist(&w[0]), &w[0].id) < (dist(&w[1]), &w[1].id));
        }
        prop_assert_eq!(found, c.find_editors(&kind, expert));
    }
}
