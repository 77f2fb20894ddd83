mod common;

use common::reference::{self, injector_issue_cycles, Step};
use common::{run_model, scenarios};
use tig_core::harness::{run, InjectorSpec, MasterRole, MasterSpec, Topology};
use tig_core::interconnect::BusKind;

#[test]
fn ahb_matches_reference() {
    for (i, s) in scenarios(11, BusKind::Ahb, 300).iter().enumerate() {
        assert_eq!(run_model(s), reference::simulate(s), "scenario {i}: {s:?}");
    }
}

#[test]
fn axi_matches_reference() {
    for (i, s) in scenarios(12, BusKind::Axi, 300).iter().enumerate() {
        assert_eq!(run_model(s), reference::simulate(s), "scenario {i}: {s:?}");
    }
}

#[test]
fn ahb_busy_is_sum_of_occupancy() {
    for s in scenarios(13, BusKind::Ahb, 100) {
        let total: u64 = s
            .requests
            .iter()
            .map(|r| s.latency + reference::beats(r.size_bytes))
            .sum();
        assert_eq!(run_model(&s).busy, total);
    }
}

fn sole_injector(program: &str, latency: u64, pipelined: bool) -> Topology {
    let mut injector = InjectorSpec::inline(program);
    injector.pipelined = pipelined;
    Topology::from_toml_str(&format!(
        "[[buses]]\nname = \"b\"\nkind = \"ahb\"\nlatency = {latency}\n"
    ))
    .map(|mut t| {
        t.masters.push(MasterSpec {
            name: "tig".into(),
            bus: "b".into(),
            role: MasterRole::Injector,
            victim: None,
            injector: Some(injector),
        });
        t
    })
    .unwrap()
}

#[test]
fn injector_timing_matches_stage_model() {
    let cases: Vec<(&str, Vec<Step>)> = vec![
        (
            "write 0x0",
            vec![Step::Access {
                size_bytes: 4,
                reps: 1,
            }],
        ),
        (
            "write 0x0\nread 0x0 size=16 reps=3\ndelay 7\nwrite_fix 0x0 size=8 reps=2",
            vec![
                Step::Access {
                    size_bytes: 4,
                    reps: 1,
                },
                Step::Access {
                    size_bytes: 16,
                    reps: 3,
                },
                Step::Delay { cycles: 7, reps: 1 },
                Step::Access {
                    size_bytes: 8,
                    reps: 2,
                },
            ],
        ),
        (
            "delay 100\nread 0x40",
            vec![
                Step::Delay {
                    cycles: 100,
                    reps: 1,
                },
                Step::Access {
                    size_bytes: 4,
                    reps: 1,
                },
            ],
        ),
        (
            "read 0x0 size=64\nwrite 0x0\ndelay 1\ndelay 2\nread 0x0 size=1 reps=5",
            vec![
                Step::Access {
                    size_bytes: 64,
                    reps: 1,
                },
                Step::Access {
                    size_bytes: 4,
                    reps: 1,
                },
                Step::Delay { cycles: 1, reps: 1 },
                Step::Delay { cycles: 2, reps: 1 },
                Step::Access {
                    size_bytes: 1,
                    reps: 5,
                },
            ],
        ),
    ];
    for (src, steps) in cases {
        for latency in 1..=3 {
            for pipelined in [true, false] {
                let m = run(&sole_injector(src, latency, pipelined)).unwrap();
                let tig = m.master("tig").unwrap();
                let (issues, done) = injector_issue_cycles(&steps, latency, pipelined);
                let got: Vec<u64> = tig.samples.iter().map(|s| s.request).collect();
                assert_eq!(got, issues, "{src:?} L={latency} pipelined={pipelined}");
                assert_eq!(
                    tig.completion_cycle,
                    Some(done),
                    "{src:?} L={latency} pipelined={pipelined}"
                );
            }
        }
    }
}
