use proptest::prelude::*;
use refdyn::log::CorrectnessLog;
use refdyn::logfile::{parse_log, parse_logs, write_log, write_logs, write_table};

fn arb_log() -> impl Strategy<Value = CorrectnessLog> {
    (1usize..12, 1usize..6).prop_flat_map(|(n, width)| {
        (
            prop::collection::vec(prop::collection::vec(any::<bool>(), width), n),
            prop::collection::vec(prop::collection::vec(prop::option::of(1.0..=10.0f64), width), n),
            prop::collection::btree_map("[a-z]{1,6}", "[A-Za-z0-9 .-]{0,10}", 0..3),
        )
            .prop_map(move |(rows, conf, meta)| {
                let mut log = CorrectnessLog::with_confidence(CorrectnessLog::numbered_ids(n), rows, conf).unwrap();
                for (k, v) in meta {
                    if k != "run" {
                        log = log.with_metadata(k, v.trim().to_string());
                    }
                }
                log
            })
    })
}

proptest! {
    #[test]
    fn records_round_trip(log in arb_log()) {
        let text = write_log(&log).unwrap();
        prop_assert_eq!(parse_log(&text).unwrap(), log);
    }

    #[test]
    fn table_round_trip_drops_only_confidence(log in arb_log()) {
        let plain = CorrectnessLog::new(log.problem_ids().to_vec(), log.rows().to_vec()).unwrap();
        let mut plain = plain;
        plain.metadata = log.metadata.clone();
        let text = write_table(&log).unwrap();
        prop_assert_eq!(parse_log(&text).unwrap(), plain);
    }

    #[test]
    fn multi_run_round_trip(a in arb_log(), b in arb_log()) {
        let a = a.with_metadata("run", "first");
        let b = b.with_metadata("run", "second");
        let text = write_logs(&[a.clone(), b.clone()]).unwrap();
        prop_assert_eq!(parse_logs(&text).unwrap(), vec![a, b]);
    }

    #[test]
    fn garbage_never_panics(s in "\\PC{0,200}") {
        let _ = parse_logs(&s);
        let _ = parse_logs(&format!("# refdyn-log v1 records\n{s}"));
        let _ = parse_logs(&format!("# refdyn-log v1 table\n{s}"));
    }
}
