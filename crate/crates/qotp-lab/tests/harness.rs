use qotp_lab::harness::{
    emit_report, run_experiment, to_canonical_json, AdversarySpec, CodeConfig, Command, ExperimentConfig,
    ExperimentReport, Format, ProgramDescriptor,
};

fn small(command: Command, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(command, seed);
    c.samples.unitaries = 3;
    c.samples.permutations = 5;
    c.samples.trials = 2000;
    c.samples.attacks = 1;
    c.samples.logical_states = 2;
    c.samples.seeds_per_input = 1;
    c.samples.teleports = 200;
    c.samples.programs = 2;
    c.samples.mac_pairs = 1;
    if command == Command::QotpAttack {
        c.samples.runs = 50;
    }
    c
}

#[test]
fn config_round_trips_through_json() {
    let mut c = small(Command::QotpAttack, 9);
    c.program = Some(ProgramDescriptor::new(&["H 0", "CNOT 0 1"], CodeConfig::toy(), None));
    c.adversaries = vec![AdversarySpec::Honest, AdversarySpec::block("M/0", "+XXX")];
    let text = serde_json::to_string(&c).unwrap();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
}

#[test]
fn unknown_fields_and_commands_are_config_errors() {
    let e = ExperimentConfig::from_json(r#"{"command":"twirl-check","sede":1}"#).unwrap_err();
    assert!(e.is_config(), "{e}");
    let e = ExperimentConfig::from_json(r#"{"command":"warp-drive"}"#).unwrap_err();
    assert!(e.is_config(), "{e}");
    assert!("warp-drive".parse::<Command>().unwrap_err().is_config());
}

#[test]
fn every_small_suite_passes_and_replays() {
    for command in Command::ALL {
        let c = small(command, 3);
        let a = run_experiment(&c).unwrap();
        assert!(a.pass, "{command}: {:?}", a.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        assert!(a.checks.iter().all(|c| c.is_consistent()));
        let b = run_experiment(&c).unwrap();
        assert_eq!(to_canonical_json(&a).unwrap(), to_canonical_json(&b).unwrap(), "{command}");
    }
}

#[test]
fn seeds_change_sampled_reports() {
    let a = run_experiment(&small(Command::TwirlCheck, 1)).unwrap();
    let b = run_experiment(&small(Command::TwirlCheck, 2)).unwrap();
    assert_ne!(a.data["deviations"], b.data["deviations"]);
}

#[test]
fn out_of_capability_is_a_failing_check() {
    let mut c = small(Command::GadgetCheck, 1);
    c.code = CodeConfig { base: "steane".into(), levels: 2 };
    let r = run_experiment(&c).unwrap();
    assert!(!r.pass);
    assert!(r.checks.iter().any(|c| c.name == "within_capability" && !c.pass));
    assert!(r.data.contains_key("error"));
}

#[test]
fn emitted_files_parse_back() {
    let dir = std::env::temp_dir().join(format!("qotp-lab-harness-{}", std::process::id()));
    let r = run_experiment(&small(Command::TrapSecurity, 4)).unwrap();
    let json = emit_report(&r, Format::Json, &dir).unwrap();
    let csv = emit_report(&r, Format::Csv, &dir).unwrap();
    let back = ExperimentReport::from_json(&std::fs::read_to_string(&json[0]).unwrap()).unwrap();
    assert_eq!(back, ExperimentReport { wall_clock: None, ..r.clone() });
    let text = std::fs::read_to_string(&csv[0]).unwrap();
    assert_eq!(text.lines().count(), 1 + r.rows.len());
    std::fs::remove_dir_all(&dir).unwrap();
}
